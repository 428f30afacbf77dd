"""Covariant derivatives of scalar and vector fields on chart neighbourhoods.

Fields are callables of a :class:`ChartPoint`. Vector fields return contravariant
components in the chart of the point they are given, so all differencing
happens inside a single chart.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.typing import NDArray

from . import fd
from .chart import (ChartPoint, _check_conditioning, chart_lift, christoffel_derivative,
                    christoffel_from_coords, kahler_data)
from .hilbert import as_operator


@dataclass(frozen=True)
class ScalarField:
    """Real function on the state manifold.

    ``grad`` optionally supplies exact coordinate partials; when present
    :func:`covariant_grad` uses it instead of differencing. ``operator`` names the
    Hermitian matrix whose expectation the field is, if any.
    """

    func: Callable[[ChartPoint], float]
    grad: Callable[[ChartPoint], NDArray] | None = None
    operator: NDArray | None = None
    name: str = ""

    def __call__(self, x: ChartPoint) -> float:
        return self.func(x)

    @classmethod
    def expectation(cls, A, name: str = "") -> "ScalarField":
        """``x -> <psi(x)|A|psi(x)> / <psi(x)|psi(x)>`` for Hermitian ``A``."""
        A = as_operator(A)
        A = (A + A.conj().T) / 2

        def func(x):
            psi = chart_lift(x)
            return float(np.vdot(psi, A @ psi).real / np.vdot(psi, psi).real)

        def grad(x):
            psi = chart_lift(x)
            N = np.vdot(psi, psi).real
            Apsi = A @ psi
            w = np.delete(Apsi - (np.vdot(psi, Apsi).real / N) * psi, x.chart)
            out = np.empty(2 * w.size)
            out[0::2] = 2.0 * w.real / N
            out[1::2] = 2.0 * w.imag / N
            return out

        return cls(func=func, grad=grad, operator=A, name=name)

    @property
    def mean(self) -> float | None:
        """``tr(A)/n`` when the generating operator is known."""
        if self.operator is None:
            return None
        return float(np.trace(self.operator).real / self.operator.shape[0])


def _in_chart(f, x: ChartPoint):
    return lambda c: f(x.moved(c))


def fd_derivatives(f, x: ChartPoint, order: int, fd_step: float | None = None) -> NDArray:
    """Coordinate partials of order 1, 2 or 3 of ``f`` at ``x`` (derivative axes first).

    Default step is 1e-3 for orders 1-2 and 5e-3 for order 3.
    """
    if order not in (1, 2, 3):
        raise ValueError("order must be 1, 2 or 3")
    _check_conditioning(x)
    if fd_step is None:
        fd_step = fd.THIRD_ORDER_STEP if order == 3 else fd.DEFAULT_STEP
    return fd.partials(_in_chart(f, x), x.coords, order, fd_step)


def _grad(f, x, fd_step):
    g = getattr(f, "grad", None)
    if g is not None:
        return np.asarray(g(x), dtype=float)
    return fd_derivatives(f, x, 1, fd_step)


def covariant_grad(f, x: ChartPoint, fd_step: float | None = None) -> NDArray:
    """``nabla_a f = d_a f``."""
    return _grad(f, x, fd_step)


def covariant_hessian(f, x: ChartPoint, fd_step: float | None = None) -> NDArray:
    """``nabla_a nabla_b f = d_a d_b f - Gamma^c_ab d_c f``."""
    gam = christoffel_from_coords(x.coords)
    d1 = fd_derivatives(f, x, 1, fd_step)
    d2 = fd_derivatives(f, x, 2, fd_step)
    return d2 - np.einsum("cab,c->ab", gam, d1)


def covariant_third(f, x: ChartPoint, fd_step: float | None = None,
                    third_step: float | None = None) -> NDArray:
    """``T[c, a, b] = nabla_c nabla_a nabla_b f``."""
    gam = christoffel_from_coords(x.coords)
    dgam = christoffel_derivative(x, fd_step or fd.DEFAULT_STEP)
    d1 = fd_derivatives(f, x, 1, fd_step)
    d2 = fd_derivatives(f, x, 2, fd_step)
    d3 = fd_derivatives(f, x, 3, third_step)
    hess = d2 - np.einsum("eab,e->ab", gam, d1)
    d_hess = d3 - np.einsum("ceab,e->cab", dgam, d1) - np.einsum("eab,ce->cab", gam, d2)
    return d_hess - np.einsum("eca,eb->cab", gam, hess) - np.einsum("ecb,ae->cab", gam, hess)


def laplace_beltrami(f, x: ChartPoint, fd_step: float | None = None) -> float:
    """``g^{ab} nabla_a nabla_b f``."""
    g_inv = kahler_data(x).g_inv
    return float(np.einsum("ab,ab->", g_inv, covariant_hessian(f, x, fd_step)))


# -- vector fields ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class VectorJet:
    """Value and covariant derivatives of a vector field at one point.

    ``D[a, c] = nabla_a xi^c``; ``DD[a, b, c] = nabla_a nabla_b xi^c`` (present when
    computed with ``order=2``). ``d1``/``d2`` are the plain coordinate partials.
    """

    at: ChartPoint
    xi: NDArray
    d1: NDArray
    D: NDArray
    d2: NDArray | None = None
    DD: NDArray | None = None
    christoffel: NDArray | None = None
    dchristoffel: NDArray | None = None


def vector_jet(xi, x: ChartPoint, order: int = 1, fd_step: float | None = None) -> VectorJet:
    """Covariant derivatives of ``xi`` up to ``order`` (1 or 2) at ``x``."""
    _check_conditioning(x)
    step = fd_step or fd.DEFAULT_STEP
    v = np.asarray(xi(x), dtype=float)
    gam = christoffel_from_coords(x.coords)
    d1 = fd.partials(_in_chart(xi, x), x.coords, 1, step)  # d1[a, c] = d_a xi^c
    D = d1 + np.einsum("cad,d->ac", gam, v)
    if order < 2:
        return VectorJet(at=x, xi=v, d1=d1, D=D, christoffel=gam)
    dgam = christoffel_derivative(x, step)
    d2 = fd.partials(_in_chart(xi, x), x.coords, 2, step)  # d2[a, b, c] = d_a d_b xi^c
    dD = d2 + np.einsum("acbd,d->abc", dgam, v) + np.einsum("cbd,ad->abc", gam, d1)
    DD = dD - np.einsum("eab,ec->abc", gam, D) + np.einsum("cae,be->abc", gam, D)
    return VectorJet(at=x, xi=v, d1=d1, D=D, d2=d2, DD=DD, christoffel=gam, dchristoffel=dgam)


def divergence(xi, x: ChartPoint, fd_step: float | None = None) -> float:
    """``nabla_a xi^a``."""
    return float(np.trace(vector_jet(xi, x, 1, fd_step).D))
