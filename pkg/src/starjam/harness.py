"""Monte-Carlo sweeps, mode histograms, convergence traces and their text tables.

Trial ``t`` of every sweep uses the channel draw seeded with ``seed_base + t``;
all schemes and powers at that trial index share it, so scheme comparisons are
paired. Tables are whitespace-separated with a header row ``x1 y1 y2 ...``,
floats written with ``repr`` (round-trips exactly) and LF line endings.

A sweep table ``name`` comes with sidecars in the same layout:
``name.se`` (standard errors), ``name.infeasible`` (per-cell infeasible counts)
and ``name.meta`` (YAML: axis name, scheme order, trial count, seed base).
"""
from __future__ import annotations

import math
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np
import yaml

from .channels import generate_channels
from .config import SystemConfig, config_to_dict
from .optimize import SolutionRecord, optimize
from .schemes import get_scheme

PathLike = Union[str, Path]


@dataclass(frozen=True, eq=False)
class SweepResult:
    axis_name: str                 # "power_dBm" or "K"
    axis: tuple[float, ...]
    schemes: tuple[str, ...]
    means: np.ndarray              # len(axis) x len(schemes), nan when no feasible trial
    ses: np.ndarray                # same shape; nan with fewer than two feasible trials
    infeasible: np.ndarray         # same shape, int counts
    trials: int
    seed_base: int
    rates: Optional[np.ndarray] = None   # axis x scheme x trial

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trial count must be >= 1")

    def __eq__(self, other) -> bool:
        """Exact equality (NaN equals NaN); the per-trial ``rates`` are not compared."""
        if not isinstance(other, SweepResult):
            return NotImplemented
        same = (self.axis_name, self.axis, self.schemes, self.trials, self.seed_base) == \
            (other.axis_name, other.axis, other.schemes, other.trials, other.seed_base)
        return same and all(np.array_equal(a, b, equal_nan=a.dtype.kind == "f")
                            for a, b in ((self.means, other.means), (self.ses, other.ses),
                                         (self.infeasible, other.infeasible)))

    __hash__ = None

    def mean(self, scheme: str, x: float) -> float:
        return float(self.means[self.axis.index(x), self.schemes.index(scheme)])


@dataclass(frozen=True)
class ModeHistogram:
    powers: tuple[float, ...]
    K: int
    means: np.ndarray              # len(powers) x 3 mean (reflect, transmit, jam) counts
    counts: tuple                  # per power, tuple of per-trial (r, t, j) for converged trials
    infeasible: tuple[int, ...]
    trials: int
    seed_base: int


@dataclass(frozen=True)
class ConvergenceTrace:
    """Rate after each outer iteration: last active step, last passive step, outer R_2."""
    active: tuple[float, ...]
    passive: tuple[float, ...]
    overall: tuple[float, ...]
    status: str

    def stabilized_within(self, limit: int, epsilon: float) -> bool:
        """Outer rate settled (|R_i - R_{i-1}| <= epsilon, or converged on the first pass) within limit iterations."""
        if self.status != "converged" or not self.overall:
            return False
        if len(self.overall) == 1:
            return True
        for i in range(1, min(limit, len(self.overall))):
            if abs(self.overall[i] - self.overall[i - 1]) <= epsilon:
                return True
        return False


# ---- trial execution -------------------------------------------------------

def _run_trial(job: tuple[SystemConfig, int, str]) -> SolutionRecord:
    cfg, seed, scheme = job
    return optimize(generate_channels(cfg, seed), cfg, scheme)


def run_trials(jobs: Sequence[tuple[SystemConfig, int, str]], workers: int = 1) -> list[SolutionRecord]:
    """Run optimize for each (cfg, channel seed, scheme); results keep job order."""
    if workers <= 1 or len(jobs) <= 1:
        return [_run_trial(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_trial, jobs))


def _summarize(values: list[float]) -> tuple[float, float]:
    if not values:
        return math.nan, math.nan
    arr = np.asarray(values, dtype=float)
    se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else math.nan
    return float(arr.mean()), se


def _sweep(axis_name: str, axis: Sequence[float], schemes: Sequence[str], trials: int, seed_base: int,
           cfg_at: Callable[[float], SystemConfig], workers: int) -> SweepResult:
    if trials < 1:
        raise ValueError("trial count must be >= 1")
    schemes = tuple(get_scheme(s).name for s in schemes)
    jobs = [(cfg_at(x), seed_base + t, s) for x in axis for s in schemes for t in range(trials)]
    records = run_trials(jobs, workers)
    shape = (len(axis), len(schemes))
    means, ses = np.full(shape, math.nan), np.full(shape, math.nan)
    infeasible = np.zeros(shape, dtype=int)
    rates = np.full(shape + (trials,), math.nan)
    it = iter(records)
    for i in range(len(axis)):
        for j in range(len(schemes)):
            ok = []
            for t in range(trials):
                rec = next(it)
                if rec.status == "infeasible":
                    infeasible[i, j] += 1
                else:
                    rates[i, j, t] = rec.sum_rate
                    ok.append(rec.sum_rate)
            means[i, j], ses[i, j] = _summarize(ok)
    return SweepResult(axis_name, tuple(float(x) for x in axis), schemes, means, ses, infeasible,
                       trials, seed_base, rates)


def run_power_sweep(cfg: SystemConfig, powers_dBm: Sequence[float], schemes: Sequence[str], trials: int,
                    seed_base: Optional[int] = None, workers: int = 1) -> SweepResult:
    base = cfg.seed if seed_base is None else seed_base
    return _sweep("power_dBm", powers_dBm, schemes, trials, base, cfg.with_power_dbm, workers)


def run_k_sweep(cfg: SystemConfig, k_values: Sequence[int], trials: int, seed_base: Optional[int] = None,
                workers: int = 1) -> SweepResult:
    """Sum rate of star-jam versus element count at the configured power."""
    cfg.power  # fail early without an explicit budget
    base = cfg.seed if seed_base is None else seed_base
    return _sweep("K", [int(k) for k in k_values], ("star-jam",), trials, base,
                  lambda k: cfg.replace(K=int(k)), workers)


def mode_histogram(cfg: SystemConfig, powers_dBm: Sequence[float], trials: int,
                   seed_base: Optional[int] = None, workers: int = 1, scheme: str = "star-jam") -> ModeHistogram:
    base = cfg.seed if seed_base is None else seed_base
    jobs = [(cfg.with_power_dbm(p), base + t, scheme) for p in powers_dBm for t in range(trials)]
    records = run_trials(jobs, workers)
    means, counts, infeasible = [], [], []
    for i in range(len(powers_dBm)):
        recs = records[i * trials:(i + 1) * trials]
        ok = [r.state.counts() for r in recs if r.status != "infeasible"]
        counts.append(tuple(ok))
        infeasible.append(len(recs) - len(ok))
        means.append(np.mean(ok, axis=0) if ok else np.full(3, math.nan))
    return ModeHistogram(tuple(float(p) for p in powers_dBm), cfg.K, np.array(means), tuple(counts),
                         tuple(infeasible), trials, base)


def trace_columns(record: SolutionRecord) -> ConvergenceTrace:
    last: dict[tuple[str, int], float] = {}
    for row in record.trace:
        last[(row.stage, row.iteration)] = row.rate
    outers = [row.iteration for row in record.trace if row.stage == "outer"]
    act = tuple(last.get(("active", i), math.nan) for i in outers)
    pas = tuple(last.get(("passive", i), math.nan) for i in outers)
    return ConvergenceTrace(act, pas, tuple(record.outer_rates), record.status)


def convergence_trace(cfg: SystemConfig, power_dBm: float, seed: int, scheme: str = "star-jam") -> ConvergenceTrace:
    return trace_columns(_run_trial((cfg.with_power_dbm(power_dBm), seed, scheme)))


# ---- tables ----------------------------------------------------------------

def write_columns(path: PathLike, x: Sequence[float], Y: np.ndarray) -> None:
    """``x1 y1 .. yn`` header then one row per x value."""
    path = Path(path)
    Y = np.asarray(Y)
    if Y.ndim != 2 or Y.shape[0] != len(x):
        raise ValueError(f"expected {len(x)} x n values, got shape {Y.shape}")
    lines = [" ".join(["x1"] + [f"y{j + 1}" for j in range(Y.shape[1])])]
    for xv, row in zip(x, Y):
        lines.append(" ".join([repr(float(xv))] + [repr(v.item()) for v in row]))
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write table {path}: {exc}") from exc


def read_columns(path: PathLike) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of ``write_columns``: (x, Y) with Y shaped rows x columns."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise OSError(f"cannot read table {path}: {exc}") from exc
    if not lines or not lines[0].startswith("x1"):
        raise ValueError(f"{path}: missing 'x1 y1 ...' header")
    ncol = len(lines[0].split()) - 1
    rows = [[float(c) for c in ln.split()] for ln in lines[1:] if ln.strip()]
    for r in rows:
        if len(r) != ncol + 1:
            raise ValueError(f"{path}: row has {len(r)} cells, header has {ncol + 1}")
    arr = np.array(rows, dtype=float).reshape(len(rows), ncol + 1)
    return arr[:, 0], arr[:, 1:]


def emit_table(result: Union[SweepResult, ModeHistogram, ConvergenceTrace], path: PathLike) -> list[Path]:
    """Write a result table (plus sidecars for sweeps); returns the files written."""
    path = Path(path)
    if isinstance(result, SweepResult):
        write_columns(path, result.axis, result.means)
        se, inf, meta = (path.with_name(path.name + ext) for ext in (".se", ".infeasible", ".meta"))
        write_columns(se, result.axis, result.ses)
        write_columns(inf, result.axis, result.infeasible.astype(int))
        doc = {"axis_name": result.axis_name, "schemes": list(result.schemes),
               "trials": result.trials, "seed_base": result.seed_base}
        with open(meta, "w", newline="\n") as fh:
            fh.write(yaml.safe_dump(doc, sort_keys=True))
        return [path, se, inf, meta]
    if isinstance(result, ModeHistogram):
        write_columns(path, result.powers, result.means)
        return [path]
    if isinstance(result, ConvergenceTrace):
        Y = np.column_stack([result.active, result.passive, result.overall]) if result.overall else np.zeros((0, 3))
        write_columns(path, range(1, len(result.overall) + 1), Y)
        return [path]
    raise TypeError(f"cannot emit {type(result).__name__}")


def read_table(path: PathLike) -> SweepResult:
    """Re-read a sweep table written by ``emit_table`` together with its sidecars."""
    path = Path(path)
    x, means = read_columns(path)
    _, ses = read_columns(path.with_name(path.name + ".se"))
    _, inf = read_columns(path.with_name(path.name + ".infeasible"))
    meta = yaml.safe_load(path.with_name(path.name + ".meta").read_text())
    n = len(meta["schemes"])
    shape = (len(x), n)
    return SweepResult(meta["axis_name"], tuple(float(v) for v in x), tuple(meta["schemes"]),
                       means.reshape(shape), ses.reshape(shape), inf.reshape(shape).astype(int),
                       int(meta["trials"]), int(meta["seed_base"]))


# ---- manifest --------------------------------------------------------------

def versions() -> dict[str, str]:
    import clarabel
    import cvxopt
    import scipy

    from . import __version__
    return {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
            "clarabel": getattr(clarabel, "__version__", "unknown"),
            "cvxopt": getattr(cvxopt, "__version__", "unknown"), "starjam": __version__}


def write_manifest(path: PathLike, command: str, cfg: SystemConfig, arguments: dict,
                   seeds: Iterable[int], outputs: Iterable[PathLike]) -> Path:
    """YAML manifest sufficient to repeat a run (no timestamps, so reruns match byte-for-byte)."""
    path = Path(path)
    doc = {"command": command, "arguments": arguments, "config": config_to_dict(cfg),
           "seeds": [int(s) for s in seeds], "outputs": [Path(o).name for o in outputs],
           "versions": versions()}
    with open(path, "w", newline="\n") as fh:
        fh.write(yaml.safe_dump(doc, sort_keys=True))
    return path
