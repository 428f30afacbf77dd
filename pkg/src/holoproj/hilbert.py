"""Complex linear algebra on the Hilbert space C^n.

States are plain complex numpy vectors and operators plain complex square
matrices; every comparison between states is projective (rays, not vectors),
so no phase or normalisation convention is ever imposed on stored values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionError, DomainError, IntegrationError

StateVector = NDArray[np.complex128]
OperatorMatrix = NDArray[np.complex128]

#: ``1 - |<psi|phi>|^2 / (<psi|psi><phi|phi>)`` below this counts as the same ray.
PROJECTIVE_TOL = 1e-10

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def as_state(psi: ArrayLike) -> StateVector:
    """Validate and convert ``psi`` to a nonzero complex vector of length >= 2."""
    v = np.asarray(psi, dtype=complex)
    if v.ndim != 1 or v.size < 2:
        raise DimensionError(f"state must be a 1-d array of length >= 2, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise DomainError("state has non-finite components")
    if not np.any(v != 0):
        raise DomainError("zero vector does not represent a ray")
    return v


def as_operator(K: ArrayLike, n: int | None = None) -> OperatorMatrix:
    """Validate and convert ``K`` to a square complex matrix (of size ``n`` if given)."""
    A = np.asarray(K, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError(f"operator must be square, got shape {A.shape}")
    if n is not None and A.shape[0] != n:
        raise DimensionError(f"operator has dimension {A.shape[0]}, expected {n}")
    if not np.all(np.isfinite(A)):
        raise DomainError("operator has non-finite entries")
    return A


def is_hermitian(A: ArrayLike, tol: float = 1e-12) -> bool:
    A = np.asarray(A, dtype=complex)
    return bool(np.max(np.abs(A - A.conj().T), initial=0.0) <= tol * max(1.0, np.max(np.abs(A))))


class HamiltonianSplit(NamedTuple):
    """``K = H - i*Gamma`` with ``H`` and ``Gamma`` both Hermitian."""

    H: OperatorMatrix
    Gamma: OperatorMatrix

    @property
    def K(self) -> OperatorMatrix:
        return self.H - 1j * self.Gamma

    @property
    def H_bar(self) -> float:
        """Uniform eigenvalue average ``tr(H)/n``."""
        return float(np.trace(self.H).real / self.H.shape[0])

    @property
    def Gamma_bar(self) -> float:
        return float(np.trace(self.Gamma).real / self.Gamma.shape[0])


def hermitian_split(K: ArrayLike) -> HamiltonianSplit:
    """Split ``K`` into Hermitian part ``H = (K + K^+)/2`` and ``Gamma = i(K - K^+)/2``."""
    K = as_operator(K)
    Kd = K.conj().T
    return HamiltonianSplit(H=(K + Kd) / 2, Gamma=1j * (K - Kd) / 2)


def _check_pair(A: OperatorMatrix, psi: StateVector) -> None:
    if A.shape[0] != psi.shape[0]:
        raise DimensionError(f"operator dimension {A.shape[0]} does not match state length {psi.shape[0]}")


def expectation(A: ArrayLike, psi: ArrayLike) -> complex:
    """Return ``<psi|A|psi> / <psi|psi>``; invariant under ``psi -> lambda*psi``."""
    A = as_operator(A)
    psi = as_state(psi)
    _check_pair(A, psi)
    return complex(np.vdot(psi, A @ psi) / np.vdot(psi, psi).real)


def transition_probability(psi: ArrayLike, phi: ArrayLike) -> float:
    psi, phi = as_state(psi), as_state(phi)
    if psi.shape != phi.shape:
        raise DimensionError("states have different dimensions")
    p = abs(np.vdot(psi, phi)) ** 2 / (np.vdot(psi, psi).real * np.vdot(phi, phi).real)
    return float(min(p, 1.0))


def _orthogonal_defect(psi: StateVector, phi: StateVector) -> float:
    """``1 - transition probability``, computed without cancellation."""
    npsi = np.vdot(psi, psi).real
    perp = phi - (np.vdot(psi, phi) / npsi) * psi
    return float(np.vdot(perp, perp).real / np.vdot(phi, phi).real)


def fs_distance(psi: ArrayLike, phi: ArrayLike) -> float:
    """Fubini-Study distance ``2 arccos sqrt(p)`` between two rays, in ``[0, pi]``.

    Evaluated as ``2 atan2(|phi_perp| |psi|, |<psi|phi>|)`` so that nearby rays keep
    full relative precision.
    """
    psi, phi = as_state(psi), as_state(phi)
    if psi.shape != phi.shape:
        raise DimensionError("states have different dimensions")
    npsi = np.vdot(psi, psi).real
    overlap = np.vdot(psi, phi)
    perp = phi - (overlap / npsi) * psi
    return float(2.0 * np.arctan2(np.linalg.norm(perp) * np.sqrt(npsi), abs(overlap)))


def projectively_equal(psi: ArrayLike, phi: ArrayLike, tol: float = PROJECTIVE_TOL) -> bool:
    psi, phi = as_state(psi), as_state(phi)
    if psi.shape != phi.shape:
        return False
    return _orthogonal_defect(psi, phi) < tol


def modified_rhs(K: ArrayLike, psi: ArrayLike) -> StateVector:
    """Right side ``-i (K - <K>) psi`` of the norm-preserving Schrodinger equation.

    The result is orthogonal to ``psi``.
    """
    K = as_operator(K)
    psi = as_state(psi)
    _check_pair(K, psi)
    Kpsi = K @ psi
    mean = np.vdot(psi, Kpsi) / np.vdot(psi, psi).real
    return -1j * (Kpsi - mean * psi)


def _rk4_step(f, y, dt):
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def rk4_fixed(f, y0, t_final, dt, *, renormalize=None, adaptive=False, rtol=1e-10,
              max_halvings=8):
    """Integrate ``y' = f(y)`` from 0 to ``t_final`` with classical RK4.

    Returns a list of ``(t, y)`` including both endpoints. The last step is
    shortened to land exactly on ``t_final``. With ``adaptive=True`` each step is
    compared against two half steps and halved until the difference is below
    ``rtol * |y|`` (at most ``max_halvings`` times). ``renormalize`` is an
    optional callable applied to the state after each accepted step.
    """
    if not dt > 0:
        raise DomainError("dt must be positive")
    if t_final < 0:
        raise DomainError("t_final must be non-negative")
    y = np.array(y0, copy=True)
    t = 0.0
    out = [(0.0, y.copy())]
    while t < t_final * (1 - 1e-14):
        h = min(dt, t_final - t)
        y_new = _rk4_step(f, y, h)
        if adaptive:
            for _ in range(max_halvings):
                y_half = _rk4_step(f, _rk4_step(f, y, h / 2), h / 2)
                if np.linalg.norm(y_half - y_new) <= rtol * max(np.linalg.norm(y), 1e-300):
                    break
                h /= 2
                y_new = _rk4_step(f, y, h)
        if not np.all(np.isfinite(y_new)):
            raise IntegrationError("non-finite state during integration", t)
        if h <= abs(t) * 1e-15:
            raise IntegrationError("step size underflow", t)
        y = renormalize(y_new) if renormalize is not None else y_new
        t += h
        out.append((t, y.copy()))
    return out


def _unit(psi):
    return psi / np.linalg.norm(psi)


def evolve_hilbert(K: ArrayLike, psi0: ArrayLike, t_final: float, dt: float, *,
                   renormalize: bool = True, adaptive: bool = False) -> list[tuple[float, StateVector]]:
    """Integrate ``i psi' = (K - <K>) psi`` with RK4; returns ``[(t, psi), ...]``.

    The exact flow conserves ``<psi|psi>``; per-step renormalisation only removes
    round-off drift and never changes the ray.
    """
    K = as_operator(K)
    psi0 = as_state(psi0)
    _check_pair(K, psi0)

    def rhs(psi):
        Kpsi = K @ psi
        return -1j * (Kpsi - (np.vdot(psi, Kpsi) / np.vdot(psi, psi).real) * psi)

    return rk4_fixed(rhs, psi0, t_final, dt, renormalize=_unit if renormalize else None,
                     adaptive=adaptive)


def propagate_exact(K: ArrayLike, psi0: ArrayLike, t: float) -> StateVector:
    """``exp(-iKt) psi0``; the same ray as the modified flow at time ``t``."""
    from scipy.linalg import expm

    K = as_operator(K)
    return expm(-1j * t * K) @ as_state(psi0)


@dataclass(frozen=True)
class EigenFixedPoints:
    """Stationary rays of the projective flow, one per distinct eigenvalue.

    ``exceptional`` is set when an eigenvalue pair and its eigenvectors coalesce
    (``K`` numerically defective); the coalescing vectors are merged into a single
    representative and listed in ``coalesced`` as index pairs into ``eigenvalues``.
    """

    states: list
    eigenvalues: NDArray[np.complex128]
    exceptional: bool
    coalesced: tuple = ()


def eigen_fixed_points(K: ArrayLike, *, eig_tol: float = 1e-8, vec_tol: float = 1e-4) -> EigenFixedPoints:
    """Eigenvectors of ``K`` as fixed rays of the projective flow.

    An eigenvalue pair closer than ``eig_tol * max(1, |K|)`` whose eigenvectors lie
    within Fubini-Study distance ``vec_tol`` flags an exceptional point.
    """
    K = as_operator(K)
    w, V = np.linalg.eig(K)
    scale = max(1.0, float(np.linalg.norm(K, 2)))
    n = len(w)
    keep = list(range(n))
    pairs = []
    for i in range(n):
        for j in range(i + 1, n):
            if abs(w[i] - w[j]) < eig_tol * scale and fs_distance(V[:, i], V[:, j]) < vec_tol:
                pairs.append((i, j))
                if j in keep:
                    keep.remove(j)
    states = [V[:, i].copy() for i in keep]
    return EigenFixedPoints(states=states, eigenvalues=w, exceptional=bool(pairs), coalesced=tuple(pairs))


def planarity_defect(curve) -> float:
    """Ratio ``s3/s1`` of singular values of the stacked unit-normalised samples.

    Zero iff all samples lie in one two-dimensional complex subspace. For ``n = 2``
    every curve is planar and 0.0 is returned.
    """
    rows = [as_state(psi) for psi in curve]
    if len(rows) < 3:
        raise DomainError("planarity needs at least 3 samples")
    n = rows[0].size
    if any(r.size != n for r in rows):
        raise DimensionError("samples have different dimensions")
    if n < 3:
        return 0.0
    M = np.array([r / np.linalg.norm(r) for r in rows])
    s = np.linalg.svd(M, compute_uv=False)
    return float(s[2] / s[0])


def random_state(n: int, rng: np.random.Generator) -> StateVector:
    """Unit vector drawn from the unitarily invariant measure on rays."""
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


def random_hermitian(n: int, rng: np.random.Generator, scale: float = 1.0) -> OperatorMatrix:
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (A + A.conj().T) / 2


def random_operator(n: int, rng: np.random.Generator, scale: float = 1.0) -> OperatorMatrix:
    """Generic (non-Hermitian) complex matrix with Gaussian entries."""
    return scale * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) / np.sqrt(2)
