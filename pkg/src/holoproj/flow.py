"""Projective flow of a (not necessarily Hermitian) Hamiltonian on chart coordinates."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import fd
from .calculus import ScalarField, covariant_grad
from .chart import (ChartPoint, best_chart, chart_embed, chart_lift, christoffel_from_coords,
                    complex_structure, kahler_data, maybe_rechart, metric_from_coords)
from .errors import DomainError, IntegrationError
from .hilbert import (HamiltonianSplit, OperatorMatrix, as_operator, fs_distance,
                      hermitian_split, random_state)

log = logging.getLogger(__name__)

#: Coefficient of the gradient term: xi = 2 omega^{ab} d_b H - GRADIENT_COEFF g^{ab} d_b Gamma.
#: With the factor-4 Fubini-Study metric the push-forward of the Hilbert flow fixes it to 2.
GRADIENT_COEFF = 2.0


@dataclass(frozen=True, eq=False)
class FlowSpec:
    """A Hamiltonian ``K = H - i Gamma`` together with its expectation fields.

    Calling a ``FlowSpec`` on a :class:`ChartPoint` evaluates the flow field there.
    """

    K: OperatorMatrix
    split: HamiltonianSplit
    H_field: ScalarField
    Gamma_field: ScalarField

    @classmethod
    def from_matrix(cls, K: ArrayLike) -> "FlowSpec":
        K = as_operator(K)
        s = hermitian_split(K)
        return cls(K=K, split=s, H_field=ScalarField.expectation(s.H, "H"),
                   Gamma_field=ScalarField.expectation(s.Gamma, "Gamma"))

    @classmethod
    def from_parts(cls, H: ArrayLike, Gamma: ArrayLike) -> "FlowSpec":
        H, Gamma = as_operator(H), as_operator(Gamma)
        return cls.from_matrix(H - 1j * Gamma)

    @property
    def n(self) -> int:
        return self.K.shape[0]

    @property
    def is_hermitian(self) -> bool:
        return bool(np.max(np.abs(self.split.Gamma)) == 0.0)

    def __call__(self, x: ChartPoint) -> NDArray:
        return xi_field(self, x)


def xi_field(spec: FlowSpec, x: ChartPoint, fd_step: float | None = None) -> NDArray:
    """``xi^a = 2 omega^{ab} nabla_b H - 2 g^{ab} nabla_b Gamma`` in the chart of ``x``."""
    k = kahler_data(x)
    dH = covariant_grad(spec.H_field, x, fd_step)
    dG = covariant_grad(spec.Gamma_field, x, fd_step)
    return 2.0 * k.omega_inv @ dH - GRADIENT_COEFF * k.g_inv @ dG


def _rk4(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _time_steps(t_final, dt):
    if not dt > 0:
        raise DomainError("step must be positive")
    if t_final < 0:
        raise DomainError("final time must be non-negative")
    steps = int(np.ceil(t_final / dt - 1e-12))
    return [(i + 1) * t_final / steps for i in range(steps)] if steps else []


def integrate_flow(spec, x0: ChartPoint, t_final: float, dt: float) -> list[tuple[float, ChartPoint]]:
    """RK4 integration of ``dx/dt = xi(x)`` with automatic chart switching.

    ``spec`` may be a :class:`FlowSpec` or any vector-field callable. The step is
    adjusted down so that the grid lands on ``t_final``.
    """
    x = maybe_rechart(x0)
    out = [(0.0, x)]
    t_prev = 0.0
    for t in _time_steps(t_final, dt):
        chart = x.chart
        y = _rk4(lambda c: spec(ChartPoint(chart, c)), x.coords, t - t_prev)
        if not np.all(np.isfinite(y)):
            raise IntegrationError("non-finite chart coordinates", t)
        x = maybe_rechart(ChartPoint(chart, y))
        out.append((t, x))
        t_prev = t
    return out


class CurveSample(NamedTuple):
    s: float
    x: ChartPoint
    u: NDArray


def _as_func(c):
    return c if callable(c) else (lambda s, v=float(c): v)


def integrate_planar_curve(x0: ChartPoint, u0: ArrayLike, alpha=0.0, beta=0.0,
                           s_final: float = 1.0, ds: float = 1e-2) -> list[CurveSample]:
    """Integrate ``x'' + Gamma(x', x') = (alpha(s) + beta(s) J) x'``.

    ``alpha``/``beta`` are callables of ``s`` or constants; with both zero the
    result is a metric geodesic. Tangents are carried across chart switches.
    """
    u0 = np.asarray(u0, dtype=float)
    if u0.shape != x0.coords.shape:
        raise DomainError("tangent has wrong length")
    if not np.any(u0 != 0):
        raise DomainError("initial tangent must be nonzero")
    alpha, beta = _as_func(alpha), _as_func(beta)
    J = complex_structure(x0.dim // 2)
    d = x0.dim
    x, u = maybe_rechart(x0, u0)
    out = [CurveSample(0.0, x, u)]
    s_prev = 0.0
    for s in _time_steps(s_final, ds):
        h = s - s_prev
        chart = x.chart
        state = np.concatenate([x.coords, u])

        def rhs(sv, y):
            pos, vel = y[:d], y[d:]
            acc = -np.einsum("cab,a,b->c", christoffel_from_coords(pos), vel, vel)
            acc += alpha(sv) * vel + beta(sv) * (J @ vel)
            return np.concatenate([vel, acc])

        k1 = rhs(s_prev, state)
        k2 = rhs(s_prev + h / 2, state + 0.5 * h * k1)
        k3 = rhs(s_prev + h / 2, state + 0.5 * h * k2)
        k4 = rhs(s, state + h * k3)
        y = state + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise IntegrationError("non-finite curve state", s)
        x, u = maybe_rechart(ChartPoint(chart, y[:d]), y[d:])
        out.append(CurveSample(s, x, u))
        s_prev = s
    return out


def metric_norm2(x: ChartPoint, u) -> float:
    u = np.asarray(u, dtype=float)
    return float(u @ metric_from_coords(x.coords) @ u)


# -- fixed points --------------------------------------------------------------

def default_seeds(n: int, rng: np.random.Generator | None = None) -> list[ChartPoint]:
    """The ``n`` coordinate rays plus ``4n`` random rays."""
    rng = rng or np.random.default_rng(0)
    seeds = [ChartPoint(k, np.zeros(2 * (n - 1))) for k in range(n)]
    seeds += [chart_embed(random_state(n, rng)) for _ in range(4 * n)]
    return seeds


def _trial_point(chart, coords):
    if not np.all(np.isfinite(coords)):
        return None
    return best_chart(ChartPoint(chart, coords))


def _residual(field, x):
    """``|xi(x)|``, or infinity when the field cannot be evaluated there."""
    try:
        r = float(np.linalg.norm(field(x)))
    except (ArithmeticError, ValueError, np.linalg.LinAlgError):
        return np.inf
    return r if np.isfinite(r) else np.inf


def _newton(field, x: ChartPoint, tol, max_iter, max_halvings, jac_step):
    x = best_chart(x)
    r = np.linalg.norm(field(x))
    for _ in range(max_iter):
        if r < tol:
            return x, r
        chart = x.chart
        f = lambda c: field(ChartPoint(chart, c))
        jac = fd.partials(f, x.coords, 1, jac_step).T  # jac[c, a] = d_a xi^c
        step = np.linalg.lstsq(jac, -field(x), rcond=None)[0]
        lam = 1.0
        for _ in range(max_halvings):
            trial = _trial_point(chart, x.coords + lam * step)
            rt = _residual(field, trial) if trial is not None else np.inf
            if rt < r:
                break
            lam /= 2
        else:
            return x, r
        x, r = trial, rt
    return x, r


def fixed_points(spec, seeds: list[ChartPoint] | None = None, *, tol: float = 1e-10,
                 max_iter: int = 60, max_halvings: int = 40, dedup: float = 1e-5,
                 jac_step: float = 1e-5, rng=None) -> list[tuple[ChartPoint, float]]:
    """Zeros of the flow field by damped Newton iteration from each seed.

    Converged points are deduplicated projectively (Fubini-Study distance below
    ``dedup``) and returned with their residual ``|xi|``.
    """
    n = spec.n if isinstance(spec, FlowSpec) else None
    if seeds is None:
        if n is None:
            raise DomainError("seeds required for a generic vector field")
        seeds = default_seeds(n, rng)
    if not seeds:
        raise DomainError("no seeds given")
    found: list[tuple[ChartPoint, float]] = []
    for seed in seeds:
        x, r = _newton(spec, seed, tol, max_iter, max_halvings, jac_step)
        if r >= tol:
            continue
        psi = chart_lift(x)
        if all(fs_distance(psi, chart_lift(y)) >= dedup for y, _ in found):
            found.append((x, float(r)))
    if not found:
        log.warning("fixed point search: no seed out of %d converged below %g", len(seeds), tol)
    return found
