"""Command-line driver: ``holoproj --config run.json``.

The config is one JSON document. Complex numbers are ``[re, im]`` pairs (plain
numbers are read as real), matrices are row-major nested arrays. Exit status is
0 when every check passes, 2 when a check fails and 1 on bad input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chart import chart_embed, chart_lift, metric_from_coords, random_chart_points
from .embed import induced_metric_check, mannoury_embed
from .errors import HoloprojError
from .flow import FlowSpec, fixed_points, integrate_flow, integrate_planar_curve
from .hilbert import (eigen_fixed_points, evolve_hilbert, fs_distance, planarity_defect,
                      random_state)
from .ptscan import BUILTIN_FAMILIES, HamiltonianFamily, polynomial_family, refine_exceptional, scan
from .verify import (VerificationReport, analyticity_check, hpp_check, killing_check,
                     laplacian_eigen_check, recover_generator)

log = logging.getLogger(__name__)

COMMANDS = ("evolve", "geodesic", "verify", "fixed-points", "pt-scan", "embed")
FORMATS = ("json", "csv")
OUT_DIR_ENV = "HOLOPROJ_OUT_DIR"

EXIT_OK, EXIT_INPUT, EXIT_CHECK = 0, 1, 2

DEFAULT_TOLERANCES = {
    "killing": 1e-6, "analyticity": 1e-5, "holomorphically_projective": 1e-4,
    "laplacian_eigenfunction": 1e-5, "recovery": 1e-4, "flow_equivalence": 1e-5,
    "norm_drift": 1e-9, "planarity": 1e-6, "fixed_points": 1e-6, "embedding_constraints": 1e-12,
    "induced_metric": 1e-4,
}


class ConfigError(HoloprojError, ValueError):
    """Malformed configuration; the message names the offending field."""


# -- parsing -------------------------------------------------------------------

def parse_complex(v, where: str) -> complex:
    if isinstance(v, bool):
        raise ConfigError(f"{where}: expected a number or [re, im]")
    if isinstance(v, (int, float)):
        z = complex(v)
    elif isinstance(v, (list, tuple)) and len(v) == 2 and all(
            isinstance(p, (int, float)) and not isinstance(p, bool) for p in v):
        z = complex(v[0], v[1])
    else:
        raise ConfigError(f"{where}: expected a number or [re, im], got {v!r}")
    if not np.isfinite(z.real) or not np.isfinite(z.imag):
        raise ConfigError(f"{where}: non-finite entry")
    return z


def parse_vector(v, where: str) -> np.ndarray:
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{where}: expected a non-empty array")
    return np.array([parse_complex(e, f"{where}[{i}]") for i, e in enumerate(v)], dtype=complex)


def parse_matrix(m, where: str) -> np.ndarray:
    if not isinstance(m, list) or not m or not all(isinstance(r, list) for r in m):
        raise ConfigError(f"{where}: expected a nested array of rows")
    n = len(m)
    for i, row in enumerate(m):
        if len(row) != n:
            raise ConfigError(f"{where}[{i}]: row has {len(row)} entries, matrix must be {n}x{n}")
    return np.array([[parse_complex(e, f"{where}[{i}][{j}]") for j, e in enumerate(row)]
                     for i, row in enumerate(m)], dtype=complex)


def complex_json(z) -> list:
    return [float(np.real(z)), float(np.imag(z))]


@dataclass
class RunConfig:
    command: str
    hamiltonian: object = None
    n: int | None = None
    tolerances: dict = field(default_factory=dict)
    fd_step: float | None = None
    seed: int = 0
    output_path: str | None = None
    format: str = "json"
    params: dict = field(default_factory=dict)

    _KNOWN = ("command", "hamiltonian", "n", "tolerances", "fd_step", "seed", "output_path", "format")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config: top level must be an object")
        cfg = cls(command=d.get("command", ""), hamiltonian=d.get("hamiltonian"), n=d.get("n"),
                  tolerances=dict(d.get("tolerances") or {}), fd_step=d.get("fd_step"),
                  seed=d.get("seed", 0), output_path=d.get("output_path"),
                  format=d.get("format", "json"),
                  params={k: v for k, v in d.items() if k not in cls._KNOWN})
        return cfg

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self._KNOWN}
        d.update(self.params)
        return d

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"command: must be one of {', '.join(COMMANDS)}, got {self.command!r}")
        if self.format not in FORMATS:
            raise ConfigError(f"format: must be json or csv, got {self.format!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise ConfigError("seed: must be an integer")
        if self.fd_step is not None and not (isinstance(self.fd_step, (int, float)) and self.fd_step > 0):
            raise ConfigError("fd_step: must be a positive number")
        for k, v in self.tolerances.items():
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not v > 0:
                raise ConfigError(f"tolerances.{k}: must be a positive number")
        if self.n is not None and (not isinstance(self.n, int) or self.n < 2):
            raise ConfigError("n: must be an integer >= 2")

    def tol(self, name: str) -> float:
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))

    def matrix(self) -> np.ndarray:
        h = self.hamiltonian
        if h is None:
            raise ConfigError("hamiltonian: required for this command")
        if isinstance(h, dict):
            if "family" in h:
                raise ConfigError("hamiltonian: a family spec is only valid for pt-scan")
            n = None
            H = parse_matrix(h["H"], "hamiltonian.H") if "H" in h else None
            G = parse_matrix(h["Gamma"], "hamiltonian.Gamma") if "Gamma" in h else None
            if H is None and G is None:
                raise ConfigError("hamiltonian: object needs H and/or Gamma")
            n = (H if H is not None else G).shape[0]
            H = np.zeros((n, n), complex) if H is None else H
            G = np.zeros((n, n), complex) if G is None else G
            if H.shape != G.shape:
                raise ConfigError("hamiltonian: H and Gamma differ in size")
            K = H - 1j * G
        else:
            K = parse_matrix(h, "hamiltonian")
        if K.shape[0] < 2:
            raise ConfigError("hamiltonian: dimension must be at least 2")
        if self.n is not None and self.n != K.shape[0]:
            raise ConfigError(f"n: {self.n} does not match hamiltonian dimension {K.shape[0]}")
        return K

    def family(self) -> HamiltonianFamily:
        h = self.hamiltonian
        if not isinstance(h, dict) or "family" not in h:
            if h is None:
                raise ConfigError("hamiltonian: pt-scan needs a family spec")
            K = self.matrix()
            grid = _parse_grid(self.params.get("grid"))
            return HamiltonianFamily(lambda t: K, grid, "constant")
        grid = _parse_grid(h.get("grid", self.params.get("grid")))
        name = h["family"]
        if name in BUILTIN_FAMILIES:
            return BUILTIN_FAMILIES[name](grid)
        if name == "polynomial":
            coeffs = h.get("coefficients")
            if not isinstance(coeffs, list) or not coeffs:
                raise ConfigError("hamiltonian.coefficients: non-empty list of matrices required")
            C = [parse_matrix(c, f"hamiltonian.coefficients[{i}]") for i, c in enumerate(coeffs)]
            if len({c.shape for c in C}) != 1:
                raise ConfigError("hamiltonian.coefficients: matrices differ in size")
            return polynomial_family(C, grid)
        raise ConfigError(f"hamiltonian.family: unknown family {name!r}")


def _parse_grid(g):
    if g is None:
        return np.linspace(0.0, 2.0, 101)
    if isinstance(g, dict):
        try:
            grid = np.linspace(float(g["start"]), float(g["stop"]), int(g["num"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"grid: expected start, stop, num ({exc})") from None
    elif isinstance(g, list):
        grid = np.asarray(g, dtype=float)
    else:
        raise ConfigError("grid: expected {start, stop, num} or an array")
    if grid.size == 0:
        raise ConfigError("grid: empty")
    if grid.size > 1 and not np.all(np.diff(grid) > 0):
        raise ConfigError("grid: must be strictly increasing")
    return grid


# -- outputs ---------------------------------------------------------------------

@dataclass
class RunOutput:
    command: str
    reports: list[VerificationReport] = field(default_factory=list)
    columns: list[str] = field(default_factory=list)
    rows: list[list] = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    def to_dict(self) -> dict:
        return {"command": self.command, "passed": self.passed,
                "reports": [r.to_dict() for r in self.reports],
                "table": {"columns": self.columns, "rows": self.rows}, "extras": self.extras}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if self.columns:
            w.writerow(self.columns)
            w.writerows([[_csv_cell(c) for c in row] for row in self.rows])
        else:
            w.writerow(["identity_name", "points_tested", "max_residual", "tolerance", "passed"])
            for r in self.reports:
                w.writerow([r.identity_name, r.points_tested, repr(r.max_residual), repr(r.tolerance),
                            r.passed])
        return buf.getvalue()


def _csv_cell(c):
    return repr(c) if isinstance(c, float) else c


def _initial_state(cfg: RunConfig, n: int, rng) -> np.ndarray:
    if "psi0" in cfg.params:
        psi = parse_vector(cfg.params["psi0"], "psi0")
        if psi.size != n:
            raise ConfigError(f"psi0: length {psi.size} does not match dimension {n}")
        if not np.any(psi != 0):
            raise ConfigError("psi0: zero vector")
        return psi / np.linalg.norm(psi)
    return random_state(n, rng)


def _number(cfg, name, default, positive=True):
    v = cfg.params.get(name, default)
    if not isinstance(v, (int, float)) or isinstance(v, bool) or (positive and not v > 0):
        raise ConfigError(f"{name}: must be a positive number")
    return float(v)


def _count(cfg, name, default):
    v = cfg.params.get(name, default)
    if not isinstance(v, int) or isinstance(v, bool) or v < 1:
        raise ConfigError(f"{name}: must be a positive integer")
    return v


def run_evolve(cfg: RunConfig, rng) -> RunOutput:
    K = cfg.matrix()
    spec = FlowSpec.from_matrix(K)
    psi0 = _initial_state(cfg, spec.n, rng)
    t_final, dt = _number(cfg, "t_final", 5.0), _number(cfg, "dt", 0.01)
    traj = integrate_flow(spec, chart_embed(psi0), t_final, dt)
    hil = evolve_hilbert(K, psi0, t_final, dt, renormalize=False)
    m = spec.n - 1
    cols = ["t", "chart"] + [f"{p}{i}" for i in range(1, m + 1) for p in ("re_z", "im_z")] + ["H", "Gamma", "norm"]
    rows, mismatch, drift = [], [], []
    for (t, x), (_, psi) in zip(traj, hil):
        norm = float(np.linalg.norm(psi))
        rows.append([float(t), x.chart] + [float(c) for c in x.coords]
                    + [float(spec.H_field(x)), float(spec.Gamma_field(x)), norm])
        mismatch.append(fs_distance(chart_lift(x), psi))
        drift.append(abs(norm - 1.0) / max(t, 1.0))
    reports = [VerificationReport.build("flow_equivalence", mismatch, cfg.tol("flow_equivalence")),
               VerificationReport.build("norm_drift", drift, cfg.tol("norm_drift"),
                                        "per unit time, no renormalisation")]
    return RunOutput("evolve", reports, cols, rows)


def run_geodesic(cfg: RunConfig, rng) -> RunOutput:
    n = cfg.n or (cfg.matrix().shape[0] if cfg.hamiltonian is not None else 3)
    x0 = chart_embed(_initial_state(cfg, n, rng))
    if "tangent" in cfg.params:
        u0 = np.asarray(cfg.params["tangent"], dtype=float)
        if u0.shape != x0.coords.shape or not np.all(np.isfinite(u0)):
            raise ConfigError(f"tangent: expected {x0.dim} finite reals")
    else:
        u0 = rng.normal(size=x0.dim)
    alpha = _number(cfg, "alpha", 0.0, positive=False)
    beta = _number(cfg, "beta", 0.0, positive=False)
    curve = integrate_planar_curve(x0, u0, alpha, beta, _number(cfg, "s_final", 1.0), _number(cfg, "ds", 1e-2))
    cols = ["s", "chart"] + [f"{p}{i}" for i in range(1, n) for p in ("re_z", "im_z")] + ["speed2"]
    rows = [[float(c.s), c.x.chart] + [float(v) for v in c.x.coords]
            + [float(c.u @ metric_from_coords(c.x.coords) @ c.u)] for c in curve]
    defect = planarity_defect([chart_lift(c.x) for c in curve])
    return RunOutput("geodesic", [VerificationReport.build("planarity", [defect], cfg.tol("planarity"))],
                     cols, rows)


def run_verify(cfg: RunConfig, rng) -> RunOutput:
    spec = FlowSpec.from_matrix(cfg.matrix())
    points = random_chart_points(spec.n, _count(cfg, "points", 5), rng)
    step = cfg.fd_step
    reports = []
    if spec.is_hermitian:
        reports.append(killing_check(spec, points, cfg.tol("killing"), step))
    reports.append(analyticity_check(spec, points, cfg.tol("analyticity"), step))
    reports.append(hpp_check(spec, points, cfg.tol("holomorphically_projective"), step))
    reports.append(laplacian_eigen_check(spec.split.H, points, cfg.tol("laplacian_eigenfunction"), step))
    rec = recover_generator(spec, points, step)
    res = [max(abs(h - (spec.H_field(x) - spec.split.H_bar)), abs(g - (spec.Gamma_field(x) - spec.split.Gamma_bar)))
           for x, h, g in zip(points, rec.H, rec.Gamma)]
    reports.append(VerificationReport.build("recovery", res, cfg.tol("recovery")))
    return RunOutput("verify", reports)


def run_fixed_points(cfg: RunConfig, rng) -> RunOutput:
    K = cfg.matrix()
    spec = FlowSpec.from_matrix(K)
    eig = eigen_fixed_points(K)
    found = fixed_points(spec, rng=rng)
    lifted = [chart_lift(x) for x, _ in found]
    dist = [min((fs_distance(s, p) for p in lifted), default=np.inf) for s in eig.states]
    n = spec.n
    cols = ["index", "residual"] + [f"{p}{i}" for i in range(n) for p in ("re_psi", "im_psi")]
    rows = []
    for i, ((x, r), psi) in enumerate(zip(found, lifted)):
        psi = psi / np.linalg.norm(psi)
        rows.append([i, float(r)] + [float(v) for z in psi for v in (z.real, z.imag)])
    rep = VerificationReport.build("fixed_points", dist, cfg.tol("fixed_points"),
                                   eigen_count=len(eig.states), newton_count=len(found),
                                   exceptional=eig.exceptional)
    if len(found) != len(eig.states):
        rep.passed = False
    return RunOutput("fixed-points", [rep], cols, rows,
                     {"eigenvalues": [complex_json(w) for w in eig.eigenvalues]})


def run_pt_scan(cfg: RunConfig, rng) -> RunOutput:
    fam = cfg.family()
    result = scan(fam, cross_check=bool(cfg.params.get("cross_check", False)), seed=cfg.seed)
    cols, rows = result.csv_rows()
    extras = {"scan": result.to_dict(), "exceptional_estimates": []}
    th = result.thetas
    for i in result.transitions():
        j = next(k for k in range(i + 1, len(th)) if result.records[k].regime not in (None, "exceptional"))
        try:
            extras["exceptional_estimates"].append(refine_exceptional(fam, (th[i], th[j])))
        except HoloprojError as exc:
            log.warning("refinement failed on [%g, %g]: %s", th[i], th[j], exc)
    out = RunOutput("pt-scan", [], cols, rows, extras)
    out.rows = [[_maybe_float(c) for c in r] for r in rows]
    return out


def _maybe_float(c):
    try:
        return float(c)
    except ValueError:
        return c


def run_embed(cfg: RunConfig, rng) -> RunOutput:
    if "states" in cfg.params:
        states = cfg.params["states"]
        if not isinstance(states, list) or not states:
            raise ConfigError("states: expected a non-empty list of vectors")
        psis = [parse_vector(s, f"states[{i}]") for i, s in enumerate(states)]
        if len({p.size for p in psis}) != 1 or psis[0].size < 2:
            raise ConfigError("states: vectors must share one dimension >= 2")
        for i, p in enumerate(psis):
            if not np.any(p != 0):
                raise ConfigError(f"states[{i}]: zero vector")
    else:
        n = cfg.n or 2
        psis = [random_state(n, rng) for _ in range(_count(cfg, "count", 10))]
    n = psis[0].size
    pts = [mannoury_embed(p) for p in psis]
    flat = [p.flat() for p in pts]
    con = [max(abs(p.x_diag.sum() - np.sqrt(2)), abs(f @ f - 2.0)) for p, f in zip(pts, flat)]
    xs = [chart_embed(p) for p in psis]
    dirs = [rng.normal(size=x.dim) for x in xs]
    reports = [VerificationReport.build("embedding_constraints", con, cfg.tol("embedding_constraints")),
               induced_metric_check(xs, dirs, cfg.tol("induced_metric"))]
    pairs = [f"{h}{k}" for h in range(n) for k in range(h + 1, n)]
    cols = [f"x{h}" for h in range(n)] + [f"x{p}" for p in pairs] + [f"y{p}" for p in pairs]
    return RunOutput("embed", reports, cols, [[float(v) for v in f] for f in flat])


RUNNERS = {"evolve": run_evolve, "geodesic": run_geodesic, "verify": run_verify,
           "fixed-points": run_fixed_points, "pt-scan": run_pt_scan, "embed": run_embed}


def execute(cfg: RunConfig) -> RunOutput:
    cfg.validate()
    return RUNNERS[cfg.command](cfg, np.random.default_rng(cfg.seed))


def output_path(cfg: RunConfig) -> Path:
    if cfg.output_path:
        return Path(cfg.output_path)
    return Path(os.environ.get(OUT_DIR_ENV, ".")) / f"{cfg.command}.{cfg.format}"


def write_output(out: RunOutput, cfg: RunConfig) -> Path:
    path = output_path(cfg)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(out.to_json() if cfg.format == "json" else out.to_csv())
    return path


# -- argument handling -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="holoproj", description=__doc__.splitlines()[0])
    p.add_argument("--config", required=True, help="JSON run configuration")
    p.add_argument("--command", choices=COMMANDS, help="override the config command")
    p.add_argument("--out", help="output file (default: $%s/<command>.<format>)" % OUT_DIR_ENV)
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--seed", type=int)
    p.add_argument("--fd-step", type=float)
    p.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE",
                   help="tolerance override, repeatable")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _apply_overrides(cfg: RunConfig, args) -> None:
    if args.command:
        cfg.command = args.command
    if args.out:
        cfg.output_path = args.out
    if args.format:
        cfg.format = args.format
    if args.seed is not None:
        cfg.seed = args.seed
    if args.fd_step is not None:
        cfg.fd_step = args.fd_step
    for item in args.tol:
        name, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--tol: expected NAME=VALUE, got {item!r}")
        try:
            cfg.tolerances[name.strip()] = float(value)
        except ValueError:
            raise ConfigError(f"--tol {name}: {value!r} is not a number") from None


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        try:
            raw = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ConfigError(f"config: cannot read {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
        cfg = RunConfig.from_dict(raw)
        _apply_overrides(cfg, args)
        out = execute(cfg)
    except (ConfigError, HoloprojError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    path = write_output(out, cfg)
    for r in out.reports:
        print(r.line())
    print(f"wrote {path}")
    return EXIT_OK if out.passed else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
