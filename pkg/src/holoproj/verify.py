"""Residual checkers for the differential identities of the projective flow.

Every checker evaluates an identity at a list of chart points and returns a
:class:`VerificationReport`. Vector fields are callables of a ``ChartPoint``
returning contravariant components; a :class:`~holoproj.flow.FlowSpec` is one.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np
from numpy.typing import NDArray

from . import fd
from .calculus import ScalarField, covariant_third, laplace_beltrami, vector_jet
from .chart import ChartPoint, christoffel_from_coords, kahler_data, riemann_closed_form
from .errors import PreconditionError
from .flow import GRADIENT_COEFF, FlowSpec
from .hilbert import as_operator, is_hermitian

#: Tolerances for identities involving up to second / third derivatives.
TOL_SECOND = 1e-5
TOL_THIRD = 1e-4
#: Inner and outer steps when a differenced quantity is differenced again.
NESTED_INNER_STEP = 2e-3
NESTED_OUTER_STEP = 5e-3


@dataclass
class VerificationReport:
    identity_name: str
    points_tested: int
    max_residual: float
    tolerance: float
    passed: bool
    convention_notes: str = ""
    extras: dict = field(default_factory=dict)

    @classmethod
    def build(cls, name, residuals, tolerance, notes="", **extras):
        r = float(max(residuals)) if len(residuals) else 0.0
        return cls(identity_name=name, points_tested=len(residuals), max_residual=r,
                   tolerance=float(tolerance), passed=bool(r < tolerance),
                   convention_notes=notes, extras={k: _plain(v) for k, v in extras.items()})

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "VerificationReport":
        return cls(**d)

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"[{verdict}] {self.identity_name}: max residual {self.max_residual:.3e} "
                f"(tol {self.tolerance:.1e}, {self.points_tested} points)")


def _plain(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.generic):
        return v.item()
    return v


def _n(x: ChartPoint) -> int:
    return x.n


def lowered_derivative(jet, g) -> NDArray:
    """``M[a, b] = nabla_a xi_b``."""
    return jet.D @ g


# -- Killing fields -----------------------------------------------------------

def killing_residual(xi, x: ChartPoint, fd_step=None) -> float:
    g = kahler_data(x).g
    M = lowered_derivative(vector_jet(xi, x, 1, fd_step), g)
    return float(np.max(np.abs(M + M.T)) / 2)


def killing_check(spec, points, tol: float = 1e-6, fd_step=None) -> VerificationReport:
    """Max over ``points`` of ``|nabla_(a xi_b)|``.

    ``spec`` is a Hermitian :class:`FlowSpec` or any vector-field callable.
    """
    if isinstance(spec, FlowSpec) and not spec.is_hermitian:
        raise PreconditionError("killing_check needs Gamma = 0")
    res = [killing_residual(spec, x, fd_step) for x in points]
    return VerificationReport.build("killing", res, tol)


class RecoveredGenerator(NamedTuple):
    """Pointwise ``H - H_bar`` and ``Gamma - Gamma_bar`` recovered from a flow field."""

    H: NDArray
    Gamma: NDArray


def _recover_at(xi, x, fd_step=None):
    k = kahler_data(x)
    M = lowered_derivative(vector_jet(xi, x, 1, fd_step), k.g)
    n = _n(x)
    h = np.einsum("ab,ab->", k.omega_inv, M) / (2 * n)
    gam = np.einsum("ab,ab->", k.g_inv, M) / (GRADIENT_COEFF * n)
    return float(h), float(gam)


def recover_generator(xi, points, fd_step=None) -> RecoveredGenerator:
    """``H - H_bar = omega^{ab} nabla_a xi_b / 2n``; ``Gamma - Gamma_bar = g^{ab} nabla_a xi_b / 2n``."""
    vals = np.array([_recover_at(xi, x, fd_step) for x in points]).reshape(-1, 2)
    return RecoveredGenerator(H=vals[:, 0], Gamma=vals[:, 1])


def recovered_fields(xi, fd_step=None) -> tuple[ScalarField, ScalarField]:
    """The two recovered functions as scalar fields (each evaluation differences ``xi``)."""
    return (ScalarField(lambda x: _recover_at(xi, x, fd_step)[0], name="H_recovered"),
            ScalarField(lambda x: _recover_at(xi, x, fd_step)[1], name="Gamma_recovered"))


def hamiltonian_vector_field(f, fd_step=None):
    """``x -> 2 omega^{ab} d_b f`` (Killing iff ``f`` is an expectation function)."""
    from .calculus import covariant_grad

    return lambda x: 2.0 * kahler_data(x).omega_inv @ covariant_grad(f, x, fd_step)


def gradient_vector_field(f, coeff: float = GRADIENT_COEFF, fd_step=None):
    """``x -> -coeff g^{ab} d_b f``."""
    from .calculus import covariant_grad

    return lambda x: -coeff * kahler_data(x).g_inv @ covariant_grad(f, x, fd_step)


# -- observables ----------------------------------------------------------------

def laplacian_eigen_check(A, points, tol: float = TOL_SECOND, fd_step=None) -> VerificationReport:
    """``max |nabla^2 A(x) - n (A_bar - A(x))|``."""
    A = as_operator(A)
    if not is_hermitian(A):
        raise PreconditionError("laplacian_eigen_check needs a Hermitian operator")
    f = ScalarField.expectation(A)
    res, lhs = [], []
    for x in points:
        lap = laplace_beltrami(f, x, fd_step)
        lhs.append(lap)
        res.append(abs(lap - _n(x) * (f.mean - f(x))))
    return VerificationReport.build("laplacian_eigenfunction", res, tol, laplacian_values=lhs)


def third_derivative_rhs(dH, g, omega, J) -> NDArray:
    """Right side ``R[c, a, b]`` of the third-derivative identity for expectation fields.

    ``-1/4 (2 g_ab H_c + g_bc H_a + g_ca H_b + omega_cb J^d_a H_d + omega_ca J^d_b H_d)``.
    """
    JdH = J.T @ dH
    return -0.25 * (2 * np.einsum("ab,c->cab", g, dH) + np.einsum("bc,a->cab", g, dH)
                    + np.einsum("ca,b->cab", g, dH) + np.einsum("cb,a->cab", omega, JdH)
                    + np.einsum("ca,b->cab", omega, JdH))


def third_derivative_check(A, points, tol: float = TOL_THIRD, fd_step=None,
                           third_step=None) -> VerificationReport:
    """``nabla_c nabla_a nabla_b A`` against its closed form in ``g``, ``omega``, ``J``.

    ``extras["contraction_residual"]`` is ``max |g^{ab} T_cab + n nabla_c A|``, the
    traced identity (gradient of the Laplacian eigen-equation).
    """
    A = as_operator(A)
    if not is_hermitian(A):
        raise PreconditionError("third_derivative_check needs a Hermitian operator")
    f = ScalarField.expectation(A)
    res, contr = [], []
    for x in points:
        k = kahler_data(x)
        T = covariant_third(f, x, fd_step, third_step)
        dH = f.grad(x)
        res.append(float(np.max(np.abs(T - third_derivative_rhs(dH, k.g, k.omega, k.J)))))
        contr.append(float(np.max(np.abs(np.einsum("ab,cab->c", k.g_inv, T) + _n(x) * dH))))
    return VerificationReport.build(
        "third_derivative", res, tol, "J_a^d read as J^d_a", contraction_residual=max(contr, default=0.0))


# -- projective structure ---------------------------------------------------------

class LieChristoffel(NamedTuple):
    """``L_xi Gamma^c_ab`` as ``[a, b, c]`` computed two ways at one point."""

    formula: NDArray
    dragging: NDArray

    @property
    def mismatch(self) -> float:
        return float(np.max(np.abs(self.formula - self.dragging)))


#: Riemann placement reconciling the formula route with the dragging route,
#: found numerically: L_xi Gamma^c_ab = nabla_a nabla_b xi^c + xi^d R_dab^c.
LIE_RIEMANN_PLACEMENT = "xi^d R_dab^c"


def _lie_dragging(jet) -> NDArray:
    gam, dgam, v, d1, d2 = jet.christoffel, jet.dchristoffel, jet.xi, jet.d1, jet.d2
    return (d2 + np.einsum("d,dcab->abc", v, dgam) - np.einsum("dab,dc->abc", gam, d1)
            + np.einsum("cdb,ad->abc", gam, d1) + np.einsum("cad,bd->abc", gam, d1))


def lie_christoffel(xi, x: ChartPoint, fd_step=None, jet=None) -> LieChristoffel:
    """Lie derivative of the Christoffel symbols along ``xi``.

    ``dragging`` differentiates the pulled-back connection of ``x -> x + t xi`` at
    ``t = 0`` using only coordinate partials; ``formula`` uses covariant second
    derivatives plus the curvature term (placement :data:`LIE_RIEMANN_PLACEMENT`).
    """
    jet = jet or vector_jet(xi, x, 2, fd_step)
    R = riemann_closed_form(kahler_data(x))
    formula = jet.DD + np.einsum("d,dabc->abc", jet.xi, R)
    return LieChristoffel(formula=formula, dragging=_lie_dragging(jet))


def hpp_rhs(phi, J) -> NDArray:
    """``phi_a d_b^c + phi_b d_a^c - phi_d J^d_b J^c_a - phi_d J^d_a J^c_b`` as ``[a, b, c]``."""
    I = np.eye(J.shape[0])
    return (np.einsum("a,bc->abc", phi, I) + np.einsum("b,ac->abc", phi, I)
            - np.einsum("d,db,ca->abc", phi, J, J) - np.einsum("d,da,cb->abc", phi, J, J))


def phi_of(jet, n) -> NDArray:
    """``phi_a = nabla_a nabla_b xi^b / 2n``."""
    return np.einsum("abb->a", jet.DD) / (2 * n)


def projective_phi(L) -> NDArray:
    """``phi_a`` from a real-projective Lie derivative ``L = phi_a d_b^c + phi_b d_a^c``.

    Contracting ``(b, c)`` gives ``(D + 1) phi_a`` with ``D = 2n - 2`` the real dimension.
    """
    D = L.shape[0]
    return np.einsum("abb->a", L) / (D + 1)


def hpp_check(spec, points, tol: float = TOL_THIRD, fd_step=None) -> VerificationReport:
    """Holomorphically projective condition with ``phi`` taken from the contraction.

    The left side is the convention-free dragging route. ``convention_notes``
    records the least-squares ratio ``phi / nabla Gamma`` when ``spec`` is a
    non-Hermitian :class:`FlowSpec`.
    """
    res, formula_gap, ratios = [], [], []
    for x in points:
        jet = vector_jet(spec, x, 2, fd_step)
        lie = lie_christoffel(spec, x, jet=jet)
        phi = phi_of(jet, _n(x))
        res.append(float(np.max(np.abs(lie.dragging - hpp_rhs(phi, kahler_data(x).J)))))
        formula_gap.append(lie.mismatch)
        if isinstance(spec, FlowSpec) and not spec.is_hermitian:
            dG = spec.Gamma_field.grad(x)
            ratios.append(float(phi @ dG / (dG @ dG)) if dG @ dG > 1e-20 else np.nan)
    notes = f"Lie-derivative curvature term {LIE_RIEMANN_PLACEMENT}"
    fitted = float(np.nanmedian(ratios)) if ratios and not np.all(np.isnan(ratios)) else None
    if fitted is not None:
        notes += f"; phi = {fitted:.6f} * grad Gamma"
    return VerificationReport.build("holomorphically_projective", res, tol, notes,
                                    formula_vs_dragging=max(formula_gap, default=0.0),
                                    phi_over_grad_gamma=fitted)


def analyticity_residual(xi, x: ChartPoint, fd_step=None) -> float:
    k = kahler_data(x)
    M = lowered_derivative(vector_jet(xi, x, 1, fd_step), k.g)
    return float(np.max(np.abs(k.J.T @ M @ k.J - M)))


def analyticity_check(xi, points, tol: float = TOL_SECOND, fd_step=None) -> VerificationReport:
    """``max |(nabla_d xi_c) J^d_b J^c_a - nabla_b xi_a|``."""
    return VerificationReport.build("analyticity", [analyticity_residual(xi, x, fd_step) for x in points], tol)


def _phi_field(xi, step):
    def phi(x):
        return phi_of(vector_jet(xi, x, 2, step), _n(x))
    return phi


def phi_structure_check(spec, points, tol: float = TOL_THIRD, inner_step: float = NESTED_INNER_STEP,
                        outer_step: float = NESTED_OUTER_STEP) -> VerificationReport:
    """Structure of ``phi``: gradient, analytic, and ``J^c_a phi_c`` Killing.

    ``Phi[b, a] = nabla_b phi_a`` comes from differencing the ``phi`` covector field,
    itself built from second differences of ``xi``.
    """
    phi = _phi_field(spec, inner_step)
    grad_r, anal_r, kill_r = [], [], []
    for x in points:
        k = kahler_data(x)
        gam = christoffel_from_coords(x.coords)
        p = phi(x)
        dphi = fd.partials(lambda c: phi(x.moved(c)), x.coords, 1, outer_step)
        Phi = dphi - np.einsum("cba,c->ba", gam, p)
        grad_r.append(float(np.max(np.abs(Phi - Phi.T))))
        anal_r.append(float(np.max(np.abs(k.J.T @ Phi @ k.J - Phi))))
        # nabla_b (J^c_a phi_c) = Phi[b, c] J[c, a]
        S = Phi @ k.J
        kill_r.append(float(np.max(np.abs(S + S.T))))
    res = [max(a, b, c) for a, b, c in zip(grad_r, anal_r, kill_r)]
    return VerificationReport.build("phi_structure", res, tol,
                                    gradient=max(grad_r, default=0.0),
                                    analytic=max(anal_r, default=0.0),
                                    killing=max(kill_r, default=0.0))


class DecompositionResult(NamedTuple):
    """``eta_residual``: Killing residual of both parts; ``reconstruction_residual``: ``max |xi - xi'|``."""

    eta_residual: float
    reconstruction_residual: float


def matsushima_decompose(xi, points, *, inner_step: float = fd.DEFAULT_STEP,
                         outer_step: float = NESTED_OUTER_STEP, check_killing: bool = True,
                         analyticity_tol: float = TOL_SECOND) -> DecompositionResult:
    """Split ``xi = eta + J zeta`` with ``eta``, ``zeta`` Killing and rebuild ``xi``.

    ``H`` and ``Gamma`` are recovered pointwise from ``xi``; then
    ``eta = 2 omega^{ab} d_b H``, ``J zeta = -2 g^{ab} d_b Gamma`` (so
    ``zeta = 2 omega^{ab} d_b Gamma``) and ``xi' = eta + J zeta``.
    """
    rep = analyticity_check(xi, points, analyticity_tol)
    if not rep.passed:
        raise PreconditionError(f"field is not holomorphic (residual {rep.max_residual:.3e})")
    H_est, G_est = recovered_fields(xi, inner_step)
    eta = hamiltonian_vector_field(H_est, outer_step)
    zeta = hamiltonian_vector_field(G_est, outer_step)
    grad_part = gradient_vector_field(G_est, GRADIENT_COEFF, outer_step)
    recon, kill = [], []
    for x in points:
        rebuilt = eta(x) + grad_part(x)
        recon.append(float(np.max(np.abs(np.asarray(xi(x)) - rebuilt))))
        if check_killing:
            kill.append(max(killing_residual(eta, x, outer_step), killing_residual(zeta, x, outer_step)))
    return DecompositionResult(eta_residual=max(kill, default=0.0),
                            reconstruction_residual=max(recon, default=0.0))
