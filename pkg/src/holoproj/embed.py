"""Quadratic isometric embedding of the state space into Euclidean space.

A unit state ``psi`` maps to ``x^h = sqrt(2) |psi^h|^2``,
``x^{hk} = psi^h conj(psi^k) + psi^k conj(psi^h)`` and
``y^{hk} = i (psi^h conj(psi^k) - psi^k conj(psi^h))`` for ``h < k``. Images lie on
the hyperplane ``sum_h x^h = sqrt(2)`` and on the sphere ``|E|^2 = 2``. For two
levels the image is a unit 2-sphere (the Bloch sphere).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .chart import ChartPoint, chart_embed, chart_lift, metric_from_coords
from .hilbert import as_state
from .verify import VerificationReport

#: Ratio of the factor-4 Fubini-Study quadratic form to the induced Euclidean one.
#: Pinned at two levels: orthogonal states are FS distance ``pi`` apart and the
#: embedded great semicircle joining them has length ``pi``.
EMBEDDING_METRIC_SCALE = 1.0

SQRT2 = float(np.sqrt(2.0))


@dataclass(frozen=True)
class EmbeddedPoint:
    """Embedded coordinates; pair arrays use ``h < k`` in row-major order."""

    x_diag: NDArray
    x_sym: NDArray
    y_antisym: NDArray

    @property
    def n(self) -> int:
        return self.x_diag.size

    def flat(self) -> NDArray:
        return np.concatenate([self.x_diag, self.x_sym, self.y_antisym])

    @classmethod
    def from_flat(cls, v: ArrayLike, n: int) -> "EmbeddedPoint":
        v = np.asarray(v, dtype=float)
        p = n * (n - 1) // 2
        if v.shape != (n + 2 * p,):
            raise ValueError(f"expected {n + 2 * p} entries for n = {n}")
        return cls(v[:n].copy(), v[n:n + p].copy(), v[n + p:].copy())


def mannoury_embed(psi) -> EmbeddedPoint:
    """Embed a ray; ``psi`` may be a state vector or a :class:`ChartPoint`."""
    if isinstance(psi, ChartPoint):
        psi = chart_lift(psi)
    psi = as_state(psi)
    psi = psi / np.linalg.norm(psi)
    h, k = np.triu_indices(psi.size, 1)
    prod = psi[h] * psi[k].conj()
    return EmbeddedPoint(x_diag=SQRT2 * np.abs(psi) ** 2, x_sym=2.0 * prod.real,
                         y_antisym=-2.0 * prod.imag)


def _embed_coords(x: ChartPoint):
    return lambda c: mannoury_embed(x.moved(c)).flat()


def induced_quadratic_form(x: ChartPoint, u: ArrayLike, step: float = 1e-4) -> float:
    """``|dE(u)|^2`` by a central difference of the embedding along ``u``."""
    u = np.asarray(u, dtype=float)
    E = _embed_coords(x)
    dE = (E(x.coords + step * u) - E(x.coords - step * u)) / (2 * step)
    return float(dE @ dE)


def induced_metric_check(points, directions, tol: float = 1e-4,
                         scale: float = EMBEDDING_METRIC_SCALE, step: float = 1e-4) -> VerificationReport:
    """Relative residual between ``scale * |dE(u)|^2`` and ``g(u, u)``.

    ``points`` are chart points or state vectors; ``directions`` are chart tangents
    in the chart of the matching point. A zero direction contributes zero.
    """
    res, ratios = [], []
    for x, u in zip(points, directions):
        if not isinstance(x, ChartPoint):
            x = chart_embed(x)
        u = np.asarray(u, dtype=float)
        q_fs = float(u @ metric_from_coords(x.coords) @ u)
        q_e = induced_quadratic_form(x, u, step)
        if q_fs == 0.0 and q_e == 0.0:
            res.append(0.0)
            continue
        res.append(abs(scale * q_e - q_fs) / max(q_fs, 1e-300))
        ratios.append(q_fs / q_e if q_e > 0 else np.inf)
    return VerificationReport.build("induced_metric", res, tol, f"scale = {scale!r}",
                                    fitted_scale=float(np.mean(ratios)) if ratios else None)


def measure_metric_scale(n: int = 2, samples: int = 400) -> float:
    """FS length over embedded arc length for the geodesic between ``e_0`` and ``e_1``.

    The ray ``cos(s/2) e_0 + sin(s/2) e_1`` is an FS unit-speed geodesic reaching
    the orthogonal state at ``s = pi``; the embedded polyline length is measured
    with ``samples`` segments and the squared ratio is returned.
    """
    s = np.linspace(0.0, np.pi, samples + 1)
    pts = []
    for si in s:
        psi = np.zeros(n, dtype=complex)
        psi[0], psi[1] = np.cos(si / 2), np.sin(si / 2)
        pts.append(mannoury_embed(psi).flat())
    pts = np.array(pts)
    # chords of a circle: correct for chord/arc deficit exactly
    chord = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    radius = np.linalg.norm(pts[0] - pts[-1]) / 2
    arc = np.sum(2 * radius * np.arcsin(np.clip(chord / (2 * radius), -1, 1)))
    return float((np.pi / arc) ** 2)
