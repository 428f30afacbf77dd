import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from holoproj.calculus import ScalarField, vector_jet
from holoproj.chart import (ChartPoint, change_chart, chart_embed, chart_lift, christoffel_fd,
                            christoffel_from_coords, kahler_data, maybe_rechart, metric_from_coords,
                            random_chart_points, riemann_closed_form, tensor_frame)
from holoproj.errors import ChartError, ConditioningError, DimensionError
from holoproj.flow import FlowSpec
from holoproj.hilbert import fs_distance, projectively_equal, random_hermitian, random_state

from conftest import origin


def test_embed_examples():
    x = chart_embed([1, 0])
    assert x.chart == 0 and np.array_equal(x.coords, [0, 0])
    x = chart_embed(np.array([1, 1]) / np.sqrt(2), 0)
    assert np.allclose(x.coords, [1, 0])
    x = chart_embed([2j, 1, 1])
    assert x.chart == 0 and np.allclose(x.coords, [0, -0.5, 0, -0.5])
    with pytest.raises(ChartError):
        chart_embed([0, 1], 0)


def test_lift_examples():
    assert np.array_equal(chart_lift(ChartPoint(0, [0, 0])), [1, 0])
    assert np.array_equal(chart_lift(ChartPoint(1, [1, 0])), [1, 1])
    assert np.allclose(chart_lift(ChartPoint(0, [0.3, -0.4])), [1, 0.3 - 0.4j])


def test_point_validation():
    with pytest.raises(DimensionError):
        ChartPoint(0, [1.0, 2.0, 3.0])
    with pytest.raises(ChartError):
        ChartPoint(2, [0.0, 0.0])
    x = ChartPoint(0, [0.0, 0.0])
    with pytest.raises(ValueError):
        x.coords[0] = 1.0


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 5))
@settings(max_examples=40, deadline=None)
def test_lift_embed_round_trip(seed, n):
    r = np.random.default_rng(seed)
    x = chart_embed(random_state(n, r))
    for k in range(n):
        y = change_chart(x, k)
        back = chart_embed(chart_lift(y), x.chart)
        assert np.max(np.abs(back.coords - x.coords)) < 1e-12
        assert projectively_equal(chart_lift(y), chart_lift(x))


def test_tangent_transport_under_chart_change(rng):
    x = chart_embed(random_state(3, rng))
    u = rng.normal(size=4)
    y, v = change_chart(x, (x.chart + 1) % 3, u)
    h = 1e-6
    x2 = chart_embed(chart_lift(x.moved(x.coords + h * u)), y.chart)
    assert np.allclose((x2.coords - y.coords) / h, v, atol=1e-5)
    # lengths are chart independent
    assert u @ metric_from_coords(x.coords) @ u == pytest.approx(v @ metric_from_coords(y.coords) @ v, rel=1e-12)


def test_maybe_rechart():
    x = ChartPoint(0, [5.0, 0.0])
    y = maybe_rechart(x)
    assert y.chart == 1 and np.allclose(y.coords, [0.2, 0.0])
    assert maybe_rechart(ChartPoint(0, [1.0, 0.0])).chart == 0


def test_conditioning_guard():
    with pytest.raises(ConditioningError):
        tensor_frame(ChartPoint(0, [2e6, 0.0]))


def test_origin_frame_n2():
    f = tensor_frame(origin(2))
    assert np.allclose(f.g, 4 * np.eye(2))
    assert np.allclose(f.omega, 4 * np.array([[0, 1], [-1, 0]]))
    assert np.allclose(f.J, f.g_inv @ f.omega)
    assert np.max(np.abs(f.christoffel)) == 0.0
    assert f.christoffel_mismatch < 1e-12


@pytest.mark.parametrize("n", [2, 3, 4])
def test_kahler_relations(rng, n):
    for x in random_chart_points(n, 50, rng):
        k = kahler_data(x)
        I = np.eye(x.dim)
        assert np.max(np.abs(k.J @ k.J + I)) < 1e-9
        assert np.max(np.abs(k.omega - k.g @ k.J)) < 1e-9
        assert np.max(np.abs(k.J - k.g_inv @ k.omega)) < 1e-9
        assert np.max(np.abs(k.omega @ k.omega_inv.T - I)) < 1e-9
        assert np.max(np.abs(k.g - k.J.T @ k.g @ k.J)) < 1e-9
        assert np.max(np.abs(k.g @ k.g_inv - I)) < 1e-10
        assert np.all(np.linalg.eigvalsh(k.g) > 0)


@pytest.mark.parametrize("n", [2, 3])
def test_complex_structure_parallel(rng, n):
    for x in random_chart_points(n, 10, rng):
        J = kahler_data(x).J
        for gam in (christoffel_from_coords(x.coords), christoffel_fd(x)):
            # nabla_e J^a_b = Gamma^a_ec J^c_b - Gamma^c_eb J^a_c (J is constant in coordinates)
            nJ = np.einsum("aec,cb->eab", gam, J) - np.einsum("ceb,ac->eab", gam, J)
            assert np.max(np.abs(nJ)) < 1e-6


@pytest.mark.parametrize("n", [2, 3])
def test_christoffel_closed_form_vs_fd(rng, n):
    for x in random_chart_points(n, 10, rng):
        assert tensor_frame(x).christoffel_mismatch < 1e-7


@pytest.mark.parametrize("n", [2, 3])
def test_riemann_fd_vs_closed_form(rng, n):
    for x in random_chart_points(n, 20, rng):
        f = tensor_frame(x)
        assert np.max(np.abs(f.riemann - riemann_closed_form(f))) < 1e-5


@pytest.mark.parametrize("n", [2, 3])
def test_riemann_symmetries(rng, n):
    x = random_chart_points(n, 1, rng)[0]
    f = tensor_frame(x)
    R = riemann_closed_form(f)
    Rl = np.einsum("abcd,de->abce", R, f.g)  # all indices down
    assert np.max(np.abs(Rl + np.einsum("abcd->bacd", Rl))) < 1e-12
    assert np.max(np.abs(Rl + np.einsum("abcd->abdc", Rl))) < 1e-12
    assert np.max(np.abs(Rl - np.einsum("abcd->cdab", Rl))) < 1e-12
    cyc = R + np.einsum("abcd->bcad", R) + np.einsum("abcd->cabd", R)
    assert np.max(np.abs(cyc)) < 1e-12
    Rfd = np.einsum("abcd,de->abce", f.riemann, f.g)
    assert np.max(np.abs(Rfd + np.einsum("abcd->bacd", Rfd))) < 1e-6
    assert np.max(np.abs(Rfd - np.einsum("abcd->cdab", Rfd))) < 1e-6


# Ricci scalar of CP^{n-1} with the factor-4 metric: m(m+1), m = n - 1.
SCALAR_CURVATURE = {2: 2.0, 3: 6.0}


@pytest.mark.parametrize("n", [2, 3])
def test_scalar_curvature_constant(rng, n):
    s0 = tensor_frame(origin(n)).scalar_curvature
    assert s0 == pytest.approx(SCALAR_CURVATURE[n], abs=1e-6)
    for x in random_chart_points(n, 20, rng):
        assert tensor_frame(x).scalar_curvature == pytest.approx(s0, abs=1e-6)
        assert np.einsum("bc,bc->", kahler_data(x).g_inv,
                         np.einsum("acba->bc", riemann_closed_form(kahler_data(x)))) == pytest.approx(s0, abs=1e-9)


def test_single_curvature_component_n2():
    f = tensor_frame(origin(2))
    assert f.riemann[0, 1, 0, 1] == pytest.approx(riemann_closed_form(f)[0, 1, 0, 1], abs=1e-6)


@pytest.mark.parametrize("n", [2, 3])
def test_ricci_identity(rng, n):
    spec = FlowSpec.from_matrix(random_hermitian(n, rng) + 0.3j * random_hermitian(n, rng))
    for x in random_chart_points(n, 5, rng):
        k = kahler_data(x)
        jet = vector_jet(spec, x, 2)
        DDl = np.einsum("abe,ec->abc", jet.DD, k.g)
        xl = k.g @ jet.xi
        R = riemann_closed_form(k)
        res = DDl.transpose(1, 0, 2) - DDl - np.einsum("abcd,d->abc", R, xl)
        assert np.max(np.abs(res)) < 1e-5


@pytest.mark.parametrize("n", [2, 3])
def test_distance_matches_quadratic_form(rng, n):
    for _ in range(10):
        x = chart_embed(random_state(n, rng))
        u = rng.normal(size=x.dim)
        u *= 1e-3 / np.sqrt(u @ metric_from_coords(x.coords) @ u)
        a, b = x.moved(x.coords - u / 2), x.moved(x.coords + u / 2)
        q = u @ metric_from_coords(x.coords) @ u
        s = fs_distance(chart_lift(a), chart_lift(b))
        assert abs(s**2 - q) / q < 1e-4


def test_residuals_chart_independent(rng):
    from holoproj.calculus import laplace_beltrami

    f = ScalarField.expectation(random_hermitian(3, rng))
    psi = random_state(3, rng)
    vals = []
    for k in range(3):
        x = chart_embed(psi, k)
        assert f(x) == pytest.approx(f(chart_embed(psi)), abs=1e-12)
        vals.append(laplace_beltrami(f, x) - 3 * (f.mean - f(x)))
    assert max(abs(v) for v in vals) < 1e-5
