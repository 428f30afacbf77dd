"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import numpy as np
import pytest

from holoproj.calculus import ScalarField, laplace_beltrami
from holoproj.chart import (chart_embed, chart_lift, christoffel_fd, metric_from_coords,
                            random_chart_points, riemann_closed_form, tensor_frame)
from holoproj.embed import EMBEDDING_METRIC_SCALE, induced_metric_check, mannoury_embed, measure_metric_scale
from holoproj.flow import FlowSpec, fixed_points, integrate_flow, integrate_planar_curve
from holoproj.hilbert import (SIGMA_Z, eigen_fixed_points, evolve_hilbert, fs_distance, planarity_defect,
                              propagate_exact, random_hermitian, random_operator, random_state)
from holoproj.ptscan import pt2_family, refine_exceptional, scan
from holoproj.verify import (analyticity_check, hpp_check, killing_check, laplacian_eigen_check,
                             matsushima_decompose, third_derivative_check)

from conftest import origin


@pytest.fixture
def announce(capsys):
    def emit(number, title, checks):
        ok = all(passed for _, _, passed in checks)
        detail = "; ".join(f"{name} {value:.3e}" if isinstance(value, float) else f"{name} {value}"
                           for name, value, _ in checks)
        with capsys.disabled():
            print(f"\nACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
        for name, value, passed in checks:
            assert passed, f"criterion {number}: {name} = {value}"
    return emit


def bump_field(x):
    v = np.zeros(x.dim)
    v[0] = x.coords[0] ** 2
    return v


def test_1_killing_and_isometry(announce):
    rng = np.random.default_rng(1)
    kill, drift = 0.0, 0.0
    for n in (2, 3):
        for _ in range(10):
            H = random_hermitian(n, rng)
            kill = max(kill, killing_check(FlowSpec.from_matrix(H), random_chart_points(n, 20, rng)).max_residual)
            a, b = random_state(n, rng), random_state(n, rng)
            ta, tb = evolve_hilbert(H, a, 10.0, 2e-3), evolve_hilbert(H, b, 10.0, 2e-3)
            d = [fs_distance(p, q) for (_, p), (_, q) in zip(ta, tb)]
            drift = max(drift, max(d) - min(d))
    announce(1, "Killing residual and distance preservation",
             [("killing", kill, kill < 1e-6), ("distance drift", drift, drift < 1e-7)])


def test_2_hpp_forward(announce):
    rng = np.random.default_rng(2)
    worst, ratios = 0.0, []
    for n in (2, 3):
        for _ in range(10):
            rep = hpp_check(FlowSpec.from_matrix(random_operator(n, rng)), random_chart_points(n, 3, rng))
            worst = max(worst, rep.max_residual)
            ratios.append(rep.extras["phi_over_grad_gamma"])
    announce(2, "Holomorphically projective condition",
             [("hpp residual", worst, worst < 1e-4), ("phi/grad Gamma", float(np.median(ratios)), True)])


def test_3_matsushima_round_trip(announce):
    rng = np.random.default_rng(3)
    recon, eta = 0.0, 0.0
    for i in range(10):
        n = 2 if i % 2 == 0 else 3
        spec = FlowSpec.from_matrix(random_operator(n, rng))
        pts = random_chart_points(n, 3, rng)
        recon = max(recon, matsushima_decompose(spec, pts, check_killing=False).reconstruction_residual)
        eta = max(eta, matsushima_decompose(spec, pts[:1]).eta_residual)
    announce(3, "Decomposition into Killing parts and reconstruction",
             [("reconstruction", recon, recon < 1e-4), ("Killing parts", eta, eta < 1e-6)])


def test_4_holomorphy(announce):
    rng = np.random.default_rng(4)
    worst = 0.0
    for n in (2, 3):
        for K in (random_operator(n, rng), random_hermitian(n, rng)):
            worst = max(worst, analyticity_check(FlowSpec.from_matrix(K), random_chart_points(n, 20, rng)).max_residual)
    control = analyticity_check(bump_field, random_chart_points(2, 20, rng))
    announce(4, "Analyticity of the flow field",
             [("flow fields", worst, worst < 1e-5),
              ("non-holomorphic control", control.max_residual, control.max_residual > 10 * 1e-5)])


def test_5_geometry_engine(announce):
    rng = np.random.default_rng(5)
    riem = kahler = nabla_j = dist = 0.0
    for n in (2, 3):
        for x in random_chart_points(n, 20, rng):
            f = tensor_frame(x)
            riem = max(riem, float(np.max(np.abs(f.riemann - riemann_closed_form(f)))))
            I = np.eye(x.dim)
            kahler = max(kahler, float(np.max(np.abs(f.J @ f.J + I))), float(np.max(np.abs(f.omega - f.g @ f.J))))
            for gam in (f.christoffel, christoffel_fd(x)):
                nJ = np.einsum("aec,cb->eab", gam, f.J) - np.einsum("ceb,ac->eab", gam, f.J)
                nabla_j = max(nabla_j, float(np.max(np.abs(nJ))))
            u = rng.normal(size=x.dim)
            u *= 1e-3 / np.sqrt(u @ f.g @ u)
            a, b = x.moved(x.coords - u / 2), x.moved(x.coords + u / 2)
            s2 = fs_distance(chart_lift(a), chart_lift(b)) ** 2
            q = u @ metric_from_coords(x.coords) @ u
            dist = max(dist, abs(s2 - q) / q)
    announce(5, "Curvature, Kahler relations and distance",
             [("Riemann FD vs closed form", riem, riem < 1e-5), ("J^2, omega = gJ", kahler, kahler < 1e-9),
              ("nabla J", nabla_j, nabla_j < 1e-6), ("distance vs metric", dist, dist < 1e-4)])


def test_6_observable_identities(announce):
    rng = np.random.default_rng(6)
    anchor = laplace_beltrami(ScalarField.expectation(SIGMA_Z), origin(2))
    lap2 = laplacian_eigen_check(SIGMA_Z, [origin(2)] + random_chart_points(2, 9, rng)).max_residual
    lap4 = laplacian_eigen_check(random_hermitian(4, rng), random_chart_points(4, 5, rng), tol=1e-4).max_residual
    third = third_derivative_check(random_hermitian(2, rng), random_chart_points(2, 5, rng))
    third3 = third_derivative_check(random_hermitian(3, rng), random_chart_points(3, 3, rng))
    t = max(third.max_residual, third3.max_residual)
    c = max(third.extras["contraction_residual"], third3.extras["contraction_residual"])
    announce(6, "Laplacian eigenfunction and third-derivative identity",
             [("sigma_z anchor", anchor, abs(anchor + 2) < 1e-5), ("n=2", lap2, lap2 < 1e-5),
              ("n=4", lap4, lap4 < 1e-4), ("third derivative", t, t < 1e-4),
              ("contraction", c, c < 1e-4)])


def test_7_flow_equivalence(announce):
    rng = np.random.default_rng(7)
    mismatch, drift = 0.0, 0.0
    for i in range(10):
        n = 2 if i < 5 else 3
        K = random_operator(n, rng)
        psi0 = random_state(n, rng)
        traj = integrate_flow(FlowSpec.from_matrix(K), chart_embed(psi0), 5.0, 1e-2)
        hil = evolve_hilbert(K, psi0, 5.0, 1e-2, renormalize=False)
        for (t, x), (_, psi) in zip(traj[::10], hil[::10]):
            mismatch = max(mismatch, fs_distance(chart_lift(x), psi), fs_distance(psi, propagate_exact(K, psi0, t)))
        drift = max(drift, abs(np.linalg.norm(hil[-1][1]) - 1.0) / 5.0)
    announce(7, "Chart flow against Hilbert-space evolution",
             [("projective mismatch", mismatch, mismatch < 1e-5), ("norm drift per unit time", drift, drift < 1e-9)])


def test_8_fixed_points(announce):
    rng = np.random.default_rng(8)
    worst, counts = 0.0, []
    for n in (2, 3, 3, 3):
        K = random_operator(n, rng)
        found = fixed_points(FlowSpec.from_matrix(K), rng=rng)
        states = eigen_fixed_points(K).states
        for s in states:
            worst = max(worst, min(fs_distance(s, chart_lift(x)) for x, _ in found))
        counts.append((len(found), n))
    announce(8, "Fixed points against eigenvectors",
             [("projective match", worst, worst < 1e-6),
              ("count", str([c for c, _ in counts]), all(c == n for c, n in counts))])


def test_9_pt_transition(announce):
    fam = pt2_family()
    ep = refine_exceptional(fam, (0.5, 1.5))
    res = scan(fam)
    flips = len(res.transitions())
    below = scan(pt2_family(np.linspace(0.0, 0.999, 100)))
    d = np.array([r.min_pair_distance for r in below.records])
    monotone = bool(np.all(np.diff(d) < 0))
    announce(9, "PT transition of sigma_x + i gamma sigma_z",
             [("EP estimate", ep, abs(ep - 1.0) < 1e-3), ("regime flips", flips, flips == 1),
              ("pair distance monotone below EP", str(monotone), monotone)])


def test_10_planarity(announce):
    rng = np.random.default_rng(10)
    exact, curves = 0.0, 0.0
    for _ in range(5):
        K = random_operator(3, rng)
        e0, e1 = random_state(3, rng), random_state(3, rng)
        seed = [np.cos(s) * e0 + np.exp(1j * s) * np.sin(s) * e1 for s in np.linspace(0, 3, 12)]
        for t in (0.5, 2.0):
            exact = max(exact, planarity_defect([propagate_exact(K, p, t) for p in seed]))
        a, b = rng.normal(size=2)
        curve = integrate_planar_curve(chart_embed(random_state(3, rng)), rng.normal(size=4),
                                       lambda s, a=a: a * np.sin(2 * s), b, s_final=2.0, ds=1e-2)
        curves = max(curves, planarity_defect([chart_lift(c.x) for c in curve]))
    announce(10, "Planarity under evolution and of planar curves",
             [("evolved span", exact, exact < 1e-8), ("integrated curves", curves, curves < 1e-6)])


def test_11_embedding(announce):
    rng = np.random.default_rng(11)
    con, metric = 0.0, 0.0
    for n in (2, 3, 4):
        for _ in range(100):
            e = mannoury_embed(random_state(n, rng))
            f = e.flat()
            con = max(con, abs(e.x_diag.sum() - np.sqrt(2)), abs(f @ f - 2.0))
        pts = random_chart_points(n, 10, rng)
        metric = max(metric, induced_metric_check(pts, [rng.normal(size=x.dim) for x in pts]).max_residual)
    scales = [measure_metric_scale(n) for n in (2, 3, 4)]
    spread = max(abs(s - EMBEDDING_METRIC_SCALE) for s in scales)
    announce(11, "Quadratic embedding",
             [("hyperplane and sphere", con, con < 1e-12), ("induced metric", metric, metric < 1e-4),
              ("scale spread over n", spread, spread < 1e-6)])
