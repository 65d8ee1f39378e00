"""Convergence sweeps, error measurement and file output."""

import csv
import math
import statistics
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DegenerateReferenceError, DomainError
from .integrators import GRIDS, integrate, normalize_method
from .problems import get_problem, solution_at
from .stability import StabilityRaster

CSV_HEADER = ["method", "h", "rel_error", "wall_time_s", "finite"]
ZERO_REFERENCE = 1e-14

# step sizes of the published benchmark tables
TABLE_STEPS = (1e-1, 5e-2, 1e-2, 5e-3, 1e-3, 5e-4, 1e-4)
TABLE_METHODS = ("rk2", "exprk2", "rb2")


def relative_error(u_num, u_ref):
    """``|(u_num - u_ref) / u_ref|``, maximised over components.

    Components with ``|u_ref_i| <= 1e-14`` contribute their absolute error
    instead.  A non-finite ``u_num`` yields ``nan``.
    """
    ref = np.atleast_1d(np.asarray(u_ref, dtype=float))
    num = np.atleast_1d(np.asarray(u_num, dtype=float))
    if ref.shape != num.shape:
        raise DomainError(f"shape mismatch {num.shape} vs {ref.shape}")
    if not np.all(np.isfinite(ref)):
        raise DomainError("reference solution must be finite")
    big = np.abs(ref) > ZERO_REFERENCE
    if not np.any(big):
        raise DegenerateReferenceError("all reference components are numerically zero")
    if not np.all(np.isfinite(num)):
        return math.nan
    diff = np.abs(num - ref)
    rel = diff[big] / np.abs(ref[big])
    return float(max(rel.max(), diff[~big].max(initial=0.0)))


@dataclass
class SweepConfig:
    """One error/time sweep over ``methods x step_sizes`` for a named problem.

    ``grid='uniform'`` (the default) takes ``round(T/h)`` steps of exactly
    ``h`` and compares with the solution at the nominal final time, which is
    how the published tables were produced.  ``grid='exact'`` lands on ``tf``.
    """

    problem: str
    methods: list
    step_sizes: list
    repetitions: int = 5
    seed: int = 0
    gamma: float = 0.5
    grid: str = "uniform"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.methods = [normalize_method(m) for m in self.methods]
        steps = [float(h) for h in self.step_sizes]
        if not steps or any(not (h > 0 and math.isfinite(h)) for h in steps):
            raise ConfigurationError(f"step sizes must be positive, got {self.step_sizes!r}")
        self.step_sizes = sorted(steps, reverse=True)
        if int(self.repetitions) < 1:
            raise ConfigurationError("repetitions must be >= 1")
        self.repetitions = int(self.repetitions)
        if self.grid not in GRIDS:
            raise ConfigurationError(f"unknown grid {self.grid!r}")


@dataclass
class SweepRecord:
    method: str
    h: float
    rel_error: float
    wall_time: float
    finite: bool


def run_sweep(cfg, problem=None):
    """Integrate every ``(method, h)`` cell and measure the error at ``tf``.

    ``problem`` overrides the named problem of ``cfg`` (useful for custom
    windows).  Wall time is the median over ``cfg.repetitions`` runs; the
    error comes from the first run (all runs are bit-identical).
    """
    p = problem if problem is not None else get_problem(cfg.problem, **cfg.params)
    ref = solution_at(p, p.tf)
    records = []
    for method in cfg.methods:
        for h in cfg.step_sizes:
            times = []
            traj = None
            for _ in range(cfg.repetitions):
                run = integrate(p, method, h, gamma=cfg.gamma, grid=cfg.grid)
                times.append(run.wall_time)
                traj = traj or run
            err = relative_error(traj.final_state, ref) if traj.finite else math.nan
            records.append(SweepRecord(method, h, err, statistics.median(times), traj.finite))
    return records


def _ordered(records):
    order = {}
    for r in records:
        order.setdefault(r.method, len(order))
    return sorted(records, key=lambda r: (order[r.method], -r.h))


def _fmt_float(x):
    return "nan" if not math.isfinite(x) else repr(float(x))


def emit_csv(records, path):
    """Write ``method,h,rel_error,wall_time_s,finite`` rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in _ordered(records):
            err = r.rel_error if r.finite else math.nan
            w.writerow([r.method, f"{r.h:.5e}", _fmt_float(err), f"{r.wall_time:.6e}", "true" if r.finite else "false"])


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        SweepRecord(
            method=row["method"],
            h=float(row["h"]),
            rel_error=float(row["rel_error"]),
            wall_time=float(row["wall_time_s"]),
            finite=row["finite"] == "true",
        )
        for row in rows
    ]


def format_table(records):
    """Plain-text table in the layout of the published benchmark tables."""
    methods = list(dict.fromkeys(r.method for r in records))
    steps = sorted({r.h for r in records}, reverse=True)
    cell = {(r.method, r.h): r for r in records}
    head = ["h"] + [f"{m} error" for m in methods] + [f"{m} time (s)" for m in methods]
    lines = ["  ".join(f"{c:>14}" for c in head)]
    for h in steps:
        row = [f"{h:.1e}"]
        for m in methods:
            r = cell.get((m, h))
            row.append("-" if r is None else ("NaN" if not r.finite else f"{r.rel_error:.4e}"))
        for m in methods:
            r = cell.get((m, h))
            row.append("-" if r is None else f"{r.wall_time:.5f}")
        lines.append("  ".join(f"{c:>14}" for c in row))
    return "\n".join(lines)


# -- rasters -----------------------------------------------------------------


def emit_raster(raster, path, format="csv"):
    """Write a stability mask as CSV (0/1 rows) or plain PGM (``P2``).

    The CSV starts with one comment line
    ``# window=re_min,re_max,im_min,im_max res=nx,ny method=<tag>``.
    Rows are written top (``im_max``) to bottom in both formats.
    """
    bits = raster.mask.astype(int)
    if format == "csv":
        with open(path, "w") as fh:
            win = ",".join(repr(float(v)) for v in raster.window)
            fh.write(f"# window={win} res={raster.nx},{raster.ny} method={raster.method}\n")
            for row in bits:
                fh.write(",".join(str(b) for b in row) + "\n")
    elif format == "pgm":
        with open(path, "w") as fh:
            fh.write(f"P2\n{raster.nx} {raster.ny}\n1\n")
            for row in bits:
                fh.write(" ".join(str(b) for b in row) + "\n")
    else:
        raise ConfigurationError(f"unknown raster format {format!r}; use csv or pgm")


def read_raster_csv(path):
    with open(path) as fh:
        header = fh.readline().strip()
        body = [line.strip() for line in fh if line.strip()]
    fields = dict(part.split("=", 1) for part in header.lstrip("# ").split())
    re_min, re_max, im_min, im_max = (float(v) for v in fields["window"].split(","))
    nx, ny = (int(v) for v in fields["res"].split(","))
    mask = np.array([[c == "1" for c in line.split(",")] for line in body], dtype=bool).reshape(ny, nx)
    return StabilityRaster(re_min, re_max, im_min, im_max, nx, ny, mask, fields.get("method", ""))


def write_trajectory_csv(traj, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t"] + [f"u{i}" for i in range(traj.states.shape[1])])
        for t, u in zip(traj.times, traj.states):
            w.writerow([repr(float(t))] + [_fmt_float(x) for x in u])
