"""Affine charts on CP^{n-1} and the closed-form Fubini-Study Kahler structure.

A point is a :class:`ChartPoint`: the index ``k`` of the pivot component and the
real coordinates ``(Re z^a, Im z^a)`` of ``z^a = psi^a / psi^k`` for ``a != k``,
interleaved. In these coordinates the metric is

    ds^2 = 4 [ (1 + |z|^2) |dz|^2 - |conj(z) . dz|^2 ] / (1 + |z|^2)^2,

the complex structure ``J`` is multiplication by ``-i`` on ``dz`` (orientation
fixed so that a Hermitian ``H`` generates ``xi = 2 omega^{ab} d_b H``), and
``omega_ab = g_ac J^c_b``.

Riemann convention: ``riemann[a, b, c, d]`` stores ``R_abc^d`` defined by the Ricci
identity ``(nabla_b nabla_a - nabla_a nabla_b) xi_c = R_abc^d xi_d``; equivalently
``R_abc^d X^a Y^b Z^c`` is ``(R(X, Y) Z)^d`` with
``R(X, Y) = [nabla_X, nabla_Y] - nabla_[X, Y]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import fd
from .errors import ChartError, ConditioningError, DimensionError
from .hilbert import as_state

#: Coordinates are moved to the largest-pivot chart once ``max |z|`` exceeds this.
RECHART_THRESHOLD = 3.0
#: Above this coordinate size finite differences are refused.
CONDITIONING_LIMIT = 1e6


@dataclass(frozen=True, eq=False)
class ChartPoint:
    chart: int
    coords: NDArray[np.float64] = field(repr=True)

    def __post_init__(self):
        c = np.array(self.coords, dtype=float)
        if c.ndim != 1 or c.size < 2 or c.size % 2:
            raise DimensionError(f"chart coordinates must have even length >= 2, got {c.shape}")
        if not 0 <= self.chart <= c.size // 2:
            raise ChartError(f"chart index {self.chart} out of range for n={c.size // 2 + 1}")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    @property
    def n(self) -> int:
        """Hilbert-space dimension."""
        return self.coords.size // 2 + 1

    @property
    def dim(self) -> int:
        """Real dimension ``2(n-1)`` of the state manifold."""
        return self.coords.size

    @property
    def z(self) -> NDArray[np.complex128]:
        return self.coords[0::2] + 1j * self.coords[1::2]

    def moved(self, coords) -> "ChartPoint":
        return ChartPoint(self.chart, coords)


def _to_real(w):
    out = np.empty(2 * w.size)
    out[0::2] = w.real
    out[1::2] = w.imag
    return out


def chart_embed(psi: ArrayLike, chart_index: int | None = None) -> ChartPoint:
    """Affine coordinates of the ray of ``psi`` (default chart: largest component)."""
    psi = as_state(psi)
    if chart_index is None:
        chart_index = int(np.argmax(np.abs(psi)))
    if not 0 <= chart_index < psi.size:
        raise ChartError(f"chart index {chart_index} out of range")
    pivot = psi[chart_index]
    if pivot == 0:
        raise ChartError(f"component {chart_index} is zero; ray not in chart {chart_index}")
    return ChartPoint(chart_index, _to_real(np.delete(psi, chart_index) / pivot))


def chart_lift(x: ChartPoint) -> NDArray[np.complex128]:
    """Hilbert-space representative with a 1 in the pivot slot."""
    return np.insert(x.z, x.chart, 1.0 + 0j)


def _complex_tangent(u):
    u = np.asarray(u, dtype=float)
    return u[0::2] + 1j * u[1::2]


def change_chart(x: ChartPoint, chart_index: int, tangent=None):
    """Re-express ``x`` (and optionally a tangent vector at ``x``) in another chart.

    Returns ``ChartPoint`` or ``(ChartPoint, tangent)`` when ``tangent`` is given.
    """
    if chart_index == x.chart:
        return x if tangent is None else (x, np.array(tangent, dtype=float))
    psi = chart_lift(x)
    y = chart_embed(psi, chart_index)
    if tangent is None:
        return y
    dpsi = np.insert(_complex_tangent(tangent), x.chart, 0.0)
    pk = psi[chart_index]
    dw = dpsi / pk - psi * dpsi[chart_index] / pk**2
    return y, _to_real(np.delete(dw, chart_index))


def best_chart(x: ChartPoint, tangent=None):
    """Move to the chart with the largest pivot component."""
    k = int(np.argmax(np.abs(chart_lift(x))))
    return change_chart(x, k, tangent)


def maybe_rechart(x: ChartPoint, tangent=None, threshold: float = RECHART_THRESHOLD):
    """:func:`best_chart` if ``max |z|`` exceeds ``threshold``, else unchanged."""
    if np.max(np.abs(x.z)) > threshold:
        return best_chart(x, tangent)
    return x if tangent is None else (x, np.array(tangent, dtype=float))


def _check_conditioning(x: ChartPoint):
    if np.max(np.abs(x.z)) > CONDITIONING_LIMIT:
        raise ConditioningError(
            f"|z| = {np.max(np.abs(x.z)):.3g} too large for finite differences; switch chart")


# -- closed-form Kahler structure -------------------------------------------------

def _basis_matrix(m):
    """``P[alpha, a]``: complex image of the real basis vector ``e_a``."""
    P = np.zeros((m, 2 * m), dtype=complex)
    idx = np.arange(m)
    P[idx, 2 * idx] = 1.0
    P[idx, 2 * idx + 1] = 1j
    return P


def hermitian_metric(z):
    """``h_ab = 4 (N delta_ab - conj(z_a) z_b) / N^2`` with ``ds^2 = h_ab dz^a conj(dz^b)``."""
    N = 1.0 + np.vdot(z, z).real
    return 4.0 * (N * np.eye(z.size) - np.outer(z.conj(), z)) / N**2


def metric_from_coords(coords) -> NDArray[np.float64]:
    coords = np.asarray(coords, dtype=float)
    z = coords[0::2] + 1j * coords[1::2]
    h = hermitian_metric(z)
    m = z.size
    g = np.empty((2 * m, 2 * m))
    g[0::2, 0::2] = h.real
    g[1::2, 1::2] = h.real
    g[0::2, 1::2] = h.imag
    g[1::2, 0::2] = -h.imag
    return g


def complex_structure(m: int) -> NDArray[np.float64]:
    """``J^a_b``: multiplication by ``-i`` on each complex coordinate."""
    J = np.zeros((2 * m, 2 * m))
    idx = np.arange(m)
    J[2 * idx, 2 * idx + 1] = 1.0
    J[2 * idx + 1, 2 * idx] = -1.0
    return J


def christoffel_from_coords(coords) -> NDArray[np.float64]:
    """Closed-form ``Gamma[c, a, b] = Gamma^c_ab``.

    Uses the holomorphic symbols ``Gamma^al_be,ga = -(delta^al_be zb_ga +
    delta^al_ga zb_be) / (1 + |z|^2)`` acting on complexified real basis vectors.
    """
    coords = np.asarray(coords, dtype=float)
    z = coords[0::2] + 1j * coords[1::2]
    m = z.size
    N = 1.0 + np.vdot(z, z).real
    P = _basis_matrix(m)
    zp = z.conj() @ P
    gc = -(P[:, :, None] * zp[None, None, :] + P[:, None, :] * zp[None, :, None]) / N
    out = np.empty((2 * m, 2 * m, 2 * m))
    out[0::2] = gc.real
    out[1::2] = gc.imag
    return out


@dataclass(frozen=True, eq=False)
class KahlerData:
    """Pointwise closed-form metric data (no derivatives)."""

    g: NDArray
    g_inv: NDArray
    omega: NDArray
    omega_inv: NDArray
    J: NDArray


def kahler_data(x: ChartPoint) -> KahlerData:
    """``g``, ``g^-1``, ``omega = g J``, raised ``omega^{ab} = g^ac g^bd omega_cd`` and ``J``.

    Note ``omega_inv`` is the index-raised form, which satisfies
    ``omega_ac omega^{bc} = delta_a^b``; it is minus the matrix inverse of ``omega``.
    """
    g = metric_from_coords(x.coords)
    g_inv = np.linalg.inv(g)
    J = complex_structure(x.dim // 2)
    omega = g @ J
    return KahlerData(g=g, g_inv=g_inv, omega=omega, omega_inv=g_inv @ omega @ g_inv, J=J)


def christoffel_fd(x: ChartPoint, fd_step: float = fd.DEFAULT_STEP) -> NDArray:
    """Christoffel symbols from finite differences of the closed-form metric."""
    dg = fd.partials(metric_from_coords, x.coords, 1, fd_step)  # dg[e, a, b] = d_e g_ab
    g_inv = np.linalg.inv(metric_from_coords(x.coords))
    # lowered[d, a, b] = (d_a g_db + d_b g_da - d_d g_ab) / 2
    lowered = 0.5 * (np.einsum("adb->dab", dg) + np.einsum("bda->dab", dg) - dg)
    return np.einsum("cd,dab->cab", g_inv, lowered)


def christoffel_derivative(x: ChartPoint, fd_step: float = fd.DEFAULT_STEP) -> NDArray:
    """``dGamma[e, c, a, b] = d_e Gamma^c_ab`` by differencing the closed form."""
    return fd.partials(christoffel_from_coords, x.coords, 1, fd_step)


def riemann_from_christoffel(gam, dgam) -> NDArray:
    """``R_abc^d`` (see module docstring) from Christoffels and their first partials."""
    rstd = (np.einsum("adbc->dcab", dgam) - np.einsum("bdac->dcab", dgam)
            + np.einsum("dae,ebc->dcab", gam, gam) - np.einsum("dbe,eac->dcab", gam, gam))
    # rstd[d, c, a, b] = R^d_{cab}, so R_abc^d = rstd[d, c, a, b]
    return np.einsum("dcab->abcd", rstd)


@dataclass(frozen=True, eq=False)
class TensorFrame:
    """Geometric data at one chart point.

    ``christoffel`` is the closed form; ``christoffel_mismatch`` is its max-norm
    distance from the metric finite-difference value. ``riemann`` is obtained by
    differencing the Christoffel symbols.
    """

    at: ChartPoint
    g: NDArray
    g_inv: NDArray
    omega: NDArray
    omega_inv: NDArray
    J: NDArray
    christoffel: NDArray
    christoffel_mismatch: float
    riemann: NDArray

    @property
    def ricci(self) -> NDArray:
        """``Ric_bc = R^a_{bac}``."""
        return np.einsum("acba->bc", self.riemann)

    @property
    def scalar_curvature(self) -> float:
        return float(np.einsum("bc,bc->", self.g_inv, self.ricci))


def tensor_frame(x: ChartPoint, fd_step: float = fd.DEFAULT_STEP) -> TensorFrame:
    _check_conditioning(x)
    k = kahler_data(x)
    gam = christoffel_from_coords(x.coords)
    mismatch = float(np.max(np.abs(gam - christoffel_fd(x, fd_step))))
    riem = riemann_from_christoffel(gam, christoffel_derivative(x, fd_step))
    return TensorFrame(at=x, g=k.g, g_inv=k.g_inv, omega=k.omega, omega_inv=k.omega_inv, J=k.J,
                       christoffel=gam, christoffel_mismatch=mismatch, riemann=riem)


def riemann_closed_form(frame) -> NDArray:
    """Constant-holomorphic-curvature Riemann tensor ``R_apc^q`` of the FS metric.

    ``-1/4 (g_ac d_p^q - g_pc d_a^q - omega_ac J^q_p + omega_pc J^q_a - 2 omega_ap J^q_c)``
    in the convention of the module docstring; ``J_p^q`` is read as ``J^q_p``.
    """
    g, w, J = frame.g, frame.omega, frame.J
    d = np.eye(g.shape[0])
    return -0.25 * (np.einsum("ac,pq->apcq", g, d) - np.einsum("pc,aq->apcq", g, d)
                    - np.einsum("ac,qp->apcq", w, J) + np.einsum("pc,qa->apcq", w, J)
                    - 2.0 * np.einsum("ap,qc->apcq", w, J))


def random_chart_points(n: int, count: int, rng: np.random.Generator) -> list[ChartPoint]:
    """Random rays (unitarily invariant) embedded in their largest-pivot charts."""
    from .hilbert import random_state

    return [chart_embed(random_state(n, rng)) for _ in range(count)]
