"""Parameter sweeps over Hamiltonian families and exceptional-point detection.

Regimes are defined operationally from the spectrum: ``unitary_like`` when every
eigenvalue is real, ``broken`` otherwise, and ``exceptional`` where two fixed rays
coalesce (Fubini-Study distance below :data:`COALESCENCE_THRESHOLD`).
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import linear_sum_assignment

from .chart import chart_lift
from .errors import BracketError, DomainError
from .flow import FlowSpec, fixed_points
from .hilbert import SIGMA_X, SIGMA_Z, as_operator, fs_distance

log = logging.getLogger(__name__)

COALESCENCE_THRESHOLD = 1e-3
REALITY_TOL = 1e-9
REGIMES = ("unitary_like", "broken", "exceptional")


@dataclass(frozen=True, eq=False)
class HamiltonianFamily:
    builder: Callable[[float], ArrayLike]
    theta_grid: NDArray
    name: str = ""

    def __post_init__(self):
        grid = np.asarray(self.theta_grid, dtype=float).ravel()
        if grid.size > 1 and not np.all(np.diff(grid) > 0):
            raise DomainError("theta grid must be strictly increasing")
        object.__setattr__(self, "theta_grid", grid)

    def __call__(self, theta: float):
        return as_operator(self.builder(float(theta)))

    def with_grid(self, grid) -> "HamiltonianFamily":
        return HamiltonianFamily(self.builder, grid, self.name)

    def scaled(self, c: float) -> "HamiltonianFamily":
        return HamiltonianFamily(lambda t: c * self(t), self.theta_grid, f"{c}*{self.name}")


def _grid(grid):
    return np.linspace(0.0, 2.0, 101) if grid is None else grid


def pt2_family(grid=None) -> HamiltonianFamily:
    """``sigma_x + i gamma sigma_z``; eigenvalues ``+-sqrt(1 - gamma^2)``."""
    return HamiltonianFamily(lambda g: SIGMA_X + 1j * g * SIGMA_Z, _grid(grid), "pt2")


def pt3_family(grid=None) -> HamiltonianFamily:
    """Tridiagonal chain with gain ``+i gamma`` and loss ``-i gamma`` at the ends.

    Eigenvalues are ``0`` and ``+-sqrt(2 - gamma^2)``.
    """
    hop = np.diag([1.0, 1.0], 1) + np.diag([1.0, 1.0], -1)
    return HamiltonianFamily(lambda g: hop + 1j * g * np.diag([1.0, 0.0, -1.0]), _grid(grid), "pt3")


def polynomial_family(coeffs: Sequence[ArrayLike], grid, name: str = "polynomial") -> HamiltonianFamily:
    """``K(theta) = sum_k theta^k C_k``."""
    C = [as_operator(c) for c in coeffs]
    if not C:
        raise DomainError("polynomial family needs at least one coefficient")
    if len({c.shape for c in C}) != 1:
        raise DomainError("coefficient matrices differ in shape")
    return HamiltonianFamily(lambda t: sum(t ** k * c for k, c in enumerate(C)), grid, name)


BUILTIN_FAMILIES = {"pt2": pt2_family, "pt3": pt3_family}


def all_real(eigenvalues, tol: float = REALITY_TOL) -> bool:
    w = np.asarray(eigenvalues)
    radius = float(np.max(np.abs(w))) if w.size else 0.0
    return bool(np.max(np.abs(w.imag), initial=0.0) <= tol * radius)


def _pair_distances(states):
    n = len(states)
    return [fs_distance(states[i], states[j]) for i in range(n) for j in range(i + 1, n)]


@dataclass
class ScanRecord:
    theta: float
    eigenvalues: NDArray
    all_real: bool
    fixed_points: list
    min_pair_distance: float
    regime: str | None
    newton_mismatch: float | None = None
    error: str | None = None

    def to_dict(self) -> dict:
        return {"theta": self.theta,
                "eigenvalues": [[float(z.real), float(z.imag)] for z in self.eigenvalues],
                "all_real": self.all_real,
                "fixed_points": [[[float(z.real), float(z.imag)] for z in v] for v in self.fixed_points],
                "min_pair_distance": self.min_pair_distance, "regime": self.regime,
                "newton_mismatch": self.newton_mismatch, "error": self.error}

    @classmethod
    def from_dict(cls, d: dict) -> "ScanRecord":
        cz = lambda pairs: np.array([complex(a, b) for a, b in pairs], dtype=complex)
        return cls(theta=d["theta"], eigenvalues=cz(d["eigenvalues"]), all_real=d["all_real"],
                   fixed_points=[cz(v) for v in d["fixed_points"]],
                   min_pair_distance=d["min_pair_distance"], regime=d["regime"],
                   newton_mismatch=d.get("newton_mismatch"), error=d.get("error"))


@dataclass
class ScanResult:
    name: str
    records: list[ScanRecord] = field(default_factory=list)

    @property
    def thetas(self) -> NDArray:
        return np.array([r.theta for r in self.records])

    @property
    def regimes(self) -> list:
        return [r.regime for r in self.records]

    def transitions(self) -> list[int]:
        """Indices ``i`` where ``all_real`` differs between records ``i`` and ``i + 1``.

        Exceptional and failed records are skipped; only clean regimes are compared.
        """
        clean = [(i, r.all_real) for i, r in enumerate(self.records)
                 if r.error is None and r.regime != "exceptional"]
        return [i for (i, a), (_, b) in zip(clean, clean[1:]) if a != b]

    def to_dict(self) -> dict:
        return {"name": self.name, "records": [r.to_dict() for r in self.records]}

    @classmethod
    def from_dict(cls, d: dict) -> "ScanResult":
        return cls(name=d["name"], records=[ScanRecord.from_dict(r) for r in d["records"]])

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def csv_rows(self) -> tuple[list[str], list[list]]:
        n = max((r.eigenvalues.size for r in self.records), default=0)
        header = ["theta"]
        for i in range(1, n + 1):
            header += [f"re_lambda{i}", f"im_lambda{i}"]
        header += ["min_pair_distance", "regime"]
        rows = []
        for r in self.records:
            row = [repr(float(r.theta))]
            for z in r.eigenvalues:
                row += [repr(float(z.real)), repr(float(z.imag))]
            row += [""] * (len(header) - 2 - len(row))
            row += [repr(float(r.min_pair_distance)), r.regime or "error"]
            rows.append(row)
        return header, rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header, rows = self.csv_rows()
        w.writerow(header)
        w.writerows(rows)
        return buf.getvalue()


def classify(eigenvalues, min_pair_distance, threshold=COALESCENCE_THRESHOLD) -> str:
    if min_pair_distance < threshold:
        return "exceptional"
    return "unitary_like" if all_real(eigenvalues) else "broken"


def _newton_mismatch(K, states, rng):
    found = fixed_points(FlowSpec.from_matrix(K), rng=rng)
    if not found:
        return float("inf")
    lifted = [chart_lift(x) for x, _ in found]
    return max(min(fs_distance(s, p) for p in lifted) for s in states)


def _record(K, theta, threshold, cross_check, rng) -> ScanRecord:
    w, V = np.linalg.eig(K)
    states = [V[:, i] / np.linalg.norm(V[:, i]) for i in range(len(w))]
    d = min(_pair_distances(states), default=np.inf)
    regime = classify(w, d, threshold)
    mismatch = None
    if cross_check and regime != "exceptional":
        mismatch = _newton_mismatch(K, states, rng)
    return ScanRecord(theta=float(theta), eigenvalues=w, all_real=all_real(w), fixed_points=states,
                      min_pair_distance=float(d), regime=regime, newton_mismatch=mismatch)


def _track(prev: ScanRecord, cur: ScanRecord) -> None:
    """Reorder ``cur`` so its fixed points follow the nearest ones of ``prev``."""
    if len(prev.fixed_points) != len(cur.fixed_points):
        return
    cost = np.array([[fs_distance(p, q) for q in cur.fixed_points] for p in prev.fixed_points])
    _, perm = linear_sum_assignment(cost)
    cur.fixed_points = [cur.fixed_points[j] for j in perm]
    cur.eigenvalues = cur.eigenvalues[perm]


def scan(family: HamiltonianFamily, *, threshold: float = COALESCENCE_THRESHOLD,
         cross_check: bool = False, seed: int = 0) -> ScanResult:
    """Spectrum, fixed rays and regime at every grid value of ``family``.

    With ``cross_check`` the flow-field Newton solver is run at each non-exceptional
    value and the largest distance from an eigenvector to its nearest Newton zero is
    stored as ``newton_mismatch``. A builder failure yields a record with ``error``
    set and ``regime`` ``None``.
    """
    if family.theta_grid.size == 0:
        raise DomainError("empty parameter grid")
    rng = np.random.default_rng(seed)
    result = ScanResult(name=family.name)
    prev = None
    dim = None
    for theta in family.theta_grid:
        try:
            K = family(theta)
            if dim is not None and K.shape != dim:
                raise DomainError(f"builder changed dimension to {K.shape}")
            dim = K.shape
            rec = _record(K, theta, threshold, cross_check, rng)
        except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            log.warning("scan %s: theta = %g failed: %s", family.name, theta, exc)
            result.records.append(ScanRecord(float(theta), np.array([], dtype=complex), False, [],
                                             float("nan"), None, error=str(exc)))
            continue
        if prev is not None:
            _track(prev, rec)
        result.records.append(rec)
        prev = rec
    return result


def refine_exceptional(family: HamiltonianFamily, bracket: tuple[float, float],
                       width: float = 1e-6) -> float:
    """Bisect the spectral-reality predicate inside ``bracket`` down to ``width``."""
    lo, hi = map(float, bracket)
    if not lo < hi:
        raise BracketError("bracket must satisfy lo < hi")
    real = lambda t: all_real(np.linalg.eigvals(family(t)))
    r_lo, r_hi = real(lo), real(hi)
    if r_lo == r_hi:
        raise BracketError(f"spectral reality does not change on [{lo}, {hi}]")
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if real(mid) == r_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
