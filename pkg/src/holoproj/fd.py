"""Fourth-order central finite differences on real coordinates.

Every partial derivative ``d_{i1} ... d_{ik} f`` is approximated by the product
``D_{i1} ... D_{ik}`` of the 4-point first-derivative operator

    D_i f = [f(-2h) - 8 f(-h) + 8 f(h) - f(2h)] / (12 h)

along each axis. The operators commute, so the result is exactly symmetric in
the derivative indices and fourth-order accurate at every order.
"""

from __future__ import annotations

import itertools

import numpy as np

from .errors import EvaluationError

_OFFSETS = (-2, -1, 1, 2)
# integer weights keep the stencil exact on constants; 1/12 is applied at the end
_WEIGHTS = (1, -8, 8, -1)

DEFAULT_STEP = 1e-3
THIRD_ORDER_STEP = 5e-3


class _Evaluator:
    """Caches ``func(x0 + h*k)`` on the integer lattice ``k``."""

    def __init__(self, func, x0, step):
        self.func = func
        self.x0 = np.asarray(x0, dtype=float)
        self.step = step
        self.cache = {}

    def __call__(self, key):
        val = self.cache.get(key)
        if val is None:
            x = self.x0 + self.step * np.asarray(key, dtype=float)
            val = np.asarray(self.func(x), dtype=float)
            if not np.all(np.isfinite(val)):
                raise EvaluationError(f"non-finite value at stencil offset {key}")
            self.cache[key] = val
        return val


def _partial(ev, dim, idx):
    acc = None
    for combo in itertools.product(range(4), repeat=len(idx)):
        shift = [0] * dim
        w = 1
        for axis, c in zip(idx, combo):
            shift[axis] += _OFFSETS[c]
            w *= _WEIGHTS[c]
        term = w * ev(tuple(shift))
        acc = term if acc is None else acc + term
    return acc / (12.0 * ev.step) ** len(idx)


def partials(func, x0, order, step=DEFAULT_STEP):
    """All order-``order`` partials of ``func`` at ``x0``.

    Parameters
    ----------
    func : callable
        Maps a real coordinate vector to a float or array of any fixed shape.
    x0 : array_like
        Base point, shape ``(d,)``.
    order : int
        1, 2 or 3 (higher orders work but get expensive).
    step : float
        Lattice spacing ``h``.

    Returns
    -------
    ndarray
        Shape ``(d,)*order + value_shape``; derivative axes come first.
    """
    x0 = np.asarray(x0, dtype=float)
    dim = x0.size
    ev = _Evaluator(func, x0, step)
    vshape = ev((0,) * dim).shape
    out = np.zeros((dim,) * order + vshape)
    for idx in itertools.combinations_with_replacement(range(dim), order):
        val = _partial(ev, dim, idx)
        for perm in set(itertools.permutations(idx)):
            out[perm] = val
    return out
