"""Experiment orchestration: configs, per-trial seeding, parallel Monte Carlo,
(b, tau) sweeps and CSV/JSON persistence."""

from __future__ import annotations

import csv
import dataclasses
import enum
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .models import ModelKind, ModelSpec, RandomSource, n_slots, sample
from .resampling import resample, sample_pair_set
from .sensitivity import mean_se, overlap
from .spectral import EigenConvergenceError, eigendecompose, is_degenerate

log = logging.getLogger(__name__)

MAX_FAILURE_FRACTION = 0.10


class Role(enum.IntEnum):
    BASE = 0
    PRIME = 1
    DOUBLEPRIME = 2
    PAIRS = 3
    PERM = 4


_ROLE_BITS = 3


def derive_seed(master, trial_id, role):
    """Stream for one (trial, role): stream_id = trial_id * 8 + role.

    Injective for trial_id < 2**61, so no two trials or roles share a Philox key.
    """
    role = Role(role)
    if not 0 <= trial_id < 2 ** (64 - _ROLE_BITS):
        raise ValueError("trial_id out of range")
    return RandomSource(master, (trial_id << _ROLE_BITS) | int(role))


def resolve_k(n, k=None, tau=None):
    """k from an absolute count or from k = floor(N^tau)."""
    if (k is None) == (tau is None):
        raise ValueError("give exactly one of k and tau")
    if k is None:
        x = float(n) ** tau
        # N^tau is often an integer in exact arithmetic (1000^(4/3) = 10^4)
        k = round(x) if abs(x - round(x)) <= 1e-9 * max(1.0, x) else math.floor(x)
    total = n_slots(n)
    if not 0 <= k <= total:
        raise ValueError(f"k={k} outside [0, {total}]")
    return int(k)


def regime(b, tau):
    """Which theorem covers (b, tau): 'excessive', 'collinear' or 'unknown'."""
    if 4 / 9 < b < 1 / 2 and 5 / 3 < tau < 2:
        return "excessive"
    if 1 / 3 < b < 1 / 2 and 0 < tau < 2 * b + 2 / 3:
        return "collinear"
    return "unknown"


def wigner_regime(tau):
    """Wigner analogue (b = 1/2): transition at k ~ N^(5/3)."""
    if 5 / 3 < tau < 2:
        return "excessive"
    if 0 < tau < 5 / 3:
        return "collinear"
    return "unknown"


DEFAULT_BANDS = {
    "wigner": {"excessive_max": 0.2, "collinear_min": 0.9, "alignment_max": 0.5},
    "er": {"excessive_max": 0.25, "collinear_min": 0.85, "alignment_max": None},
}


@dataclass
class ExperimentConfig:
    model: ModelSpec
    k: int | None = None
    tau: float | None = None
    trials: int = 10
    master_seed: int = 0
    eigvec_index: int | None = None
    threads: int = 1
    bands: dict = field(default_factory=dict)
    out: str | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        self.k_value  # validates the k rule

    @property
    def k_value(self):
        return resolve_k(self.model.n, self.k, self.tau)

    @property
    def index(self):
        """Tracked eigenvector: v_1 for Wigner, v_2 for ER-type models, unless overridden."""
        if self.eigvec_index is not None:
            return self.eigvec_index
        return 1 if self.model.kind is ModelKind.WIGNER else 2

    @property
    def b(self):
        if self.model.q is None:
            return 0.5
        return math.log(self.model.q) / math.log(self.model.n)

    @property
    def effective_tau(self):
        k = self.k_value
        return math.log(k) / math.log(self.model.n) if k > 0 else 0.0

    def regime(self):
        tau = self.effective_tau
        if self.model.kind is ModelKind.WIGNER:
            return wigner_regime(tau)
        return regime(self.b, tau)

    def resolved_bands(self):
        key = "wigner" if self.model.kind is ModelKind.WIGNER else "er"
        return {**DEFAULT_BANDS[key], **self.bands}

    def to_dict(self):
        model = dataclasses.asdict(self.model)
        model["kind"] = self.model.kind.value
        return {
            "model": model,
            "k": self.k,
            "tau": self.tau,
            "k_resolved": self.k_value,
            "trials": self.trials,
            "master_seed": self.master_seed,
            "eigvec_index": self.index,
            "bands": self.resolved_bands(),
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d.pop("k_resolved", None)
        model = d.pop("model")
        return cls(model=ModelSpec(**model), **d)


@dataclass
class TrialRecord:
    trial_id: int
    seed: int
    k: int
    abs_inner: float
    alignment: float
    lambda1: float
    lambda2: float
    lambda3: float
    min_gap: float
    degenerate: bool
    failed: bool = False
    wall_time: float = 0.0


CSV_COLUMNS = [f.name for f in dataclasses.fields(TrialRecord) if f.name != "wall_time"]


def _trial_matrices(cfg, trial_id):
    spec = cfg.model
    x = sample(spec, derive_seed(cfg.master_seed, trial_id, Role.BASE))
    pairs = sample_pair_set(spec.n, cfg.k_value, derive_seed(cfg.master_seed, trial_id, Role.PAIRS))
    fresh = sample(spec, derive_seed(cfg.master_seed, trial_id, Role.PRIME))
    return x, resample(x, pairs, fresh)


def run_trial(cfg, trial_id):
    """One Monte Carlo trial: X, S_k, X', X^[k], both decompositions, overlap."""
    start = time.perf_counter()
    m = cfg.index
    nan = math.nan
    try:
        x, xk = _trial_matrices(cfg, trial_id)
        es = eigendecompose(x)
        es_k = eigendecompose(xk) if cfg.k_value else es
    except EigenConvergenceError as exc:
        log.warning("trial %d failed: %s", trial_id, exc)
        return TrialRecord(trial_id, cfg.master_seed, cfg.k_value, nan, nan, nan, nan, nan, nan,
                           False, True, time.perf_counter() - start)
    ov = overlap(es.vector(m), es_k.vector(m))
    vals = es.values
    lam = [float(vals[i]) if i < len(vals) else nan for i in range(3)]
    return TrialRecord(
        trial_id=trial_id,
        seed=cfg.master_seed,
        k=cfg.k_value,
        abs_inner=ov.abs_inner,
        alignment=ov.alignment,
        lambda1=lam[0],
        lambda2=lam[1],
        lambda3=lam[2],
        min_gap=float(np.min(es.gaps())) if es.n > 1 else nan,
        degenerate=is_degenerate(vals, m) or is_degenerate(es_k.values, m),
        wall_time=time.perf_counter() - start,
    )


def parallel_map(fn, items, threads=1):
    """Ordered map over a thread pool; kernels release the GIL."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def summarize(records, cfg=None):
    used = [r for r in records if not (r.failed or r.degenerate)]
    mi, mi_se = mean_se([r.abs_inner for r in used])
    ma, ma_se = mean_se([r.alignment for r in used])
    summary = {
        "trials": len(records),
        "used": len(used),
        "degenerate": sum(r.degenerate for r in records),
        "failed": sum(r.failed for r in records),
        "mean_abs_inner": mi,
        "se_abs_inner": mi_se,
        "mean_alignment": ma,
        "se_alignment": ma_se,
    }
    if cfg is not None:
        summary["regime"] = cfg.regime()
        summary["band_ok"] = band_verdict(summary, cfg.regime(), cfg.resolved_bands())
        summary["config"] = cfg.to_dict()
    return summary


def band_verdict(summary, regime_name, bands):
    """True/False against the configured acceptance band; None in the unknown regime."""
    if summary["used"] == 0:
        return None
    if regime_name == "excessive":
        return summary["mean_abs_inner"] <= bands["excessive_max"]
    if regime_name == "collinear":
        ok = summary["mean_abs_inner"] >= bands["collinear_min"]
        if bands.get("alignment_max") is not None:
            ok = ok and summary["mean_alignment"] <= bands["alignment_max"]
        return ok
    return None


def run_trials(cfg, threads=None):
    """All trials of ``cfg``; deterministic in ``cfg.master_seed`` whatever the thread count."""
    threads = cfg.threads if threads is None else threads
    records = parallel_map(lambda t: run_trial(cfg, t), range(cfg.trials), threads)
    failed = sum(r.failed for r in records)
    if failed > MAX_FAILURE_FRACTION * len(records):
        raise RuntimeError(f"{failed} of {len(records)} trials failed to converge")
    return records, summarize(records, cfg)


# -- sweeps ---------------------------------------------------------------


@dataclass
class SweepGrid:
    n: int
    b_values: list
    tau_values: list
    trials: int = 10
    master_seed: int = 0
    kind: ModelKind = ModelKind.ER_ADJACENCY
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.b_values or not self.tau_values:
            raise ValueError("sweep grid must be nonempty")

    def cell_config(self, b, tau):
        over = dict(self.overrides.get((b, tau), {}))
        spec = ModelSpec.er(self.n, b, kind=self.kind)
        return ExperimentConfig(
            model=spec,
            tau=tau,
            trials=over.pop("trials", self.trials),
            master_seed=over.pop("master_seed", self.master_seed),
            **over,
        )


def run_sweep(grid, threads=1):
    """Summaries per (b, tau) cell, annotated with the covering theorem."""
    cells = []
    for b in grid.b_values:
        for tau in grid.tau_values:
            cell = {"b": b, "tau": tau, "regime": regime(b, tau)}
            try:
                cfg = grid.cell_config(b, tau)
                _, summary = run_trials(cfg, threads)
                summary.pop("config", None)
                cell.update(summary)
                cell["error"] = None
            except (ValueError, RuntimeError) as exc:
                log.warning("sweep cell b=%s tau=%s failed: %s", b, tau, exc)
                cell["error"] = str(exc)
            cells.append(cell)
    return cells


SWEEP_COLUMNS = ["b", "tau", "regime", "trials", "used", "mean_abs_inner", "se_abs_inner",
                 "mean_alignment", "se_alignment", "error"]


def export_sweep(cells, path):
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    with open(path / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for c in cells:
            w.writerow([_fmt(c.get(k)) for k in SWEEP_COLUMNS])
    (path / "sweep.json").write_text(json.dumps(cells, indent=2, sort_keys=True, default=_json_default) + "\n")


# -- persistence -----------------------------------------------------------


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, enum.Enum):
        return o.value
    raise TypeError(f"not JSON serializable: {type(o)}")


def export(records, summary, path):
    """Write trials.csv, summary.json and timing.csv under directory ``path``.

    trials.csv and summary.json depend only on the seeded computation and are
    byte-stable across re-runs; wall times go to timing.csv.
    """
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
        with open(path / "trials.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for r in sorted(records, key=lambda r: r.trial_id):
                w.writerow([_fmt(getattr(r, c)) for c in CSV_COLUMNS])
        with open(path / "timing.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trial_id", "wall_time"])
            for r in sorted(records, key=lambda r: r.trial_id):
                w.writerow([r.trial_id, repr(r.wall_time)])
        summary = dict(summary)
        summary.setdefault("trials", len(records))
        (path / "summary.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True, default=_json_default) + "\n"
        )
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    return path


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(TrialRecord)}


def _parse(name, text):
    kind = _FIELD_TYPES[name]
    if kind in ("bool", bool):
        return text == "1"
    if kind in ("int", int):
        return int(text)
    return float(text)


def read_records(path):
    """Inverse of :func:`export` for the per-trial data."""
    path = Path(path)
    timings = {}
    tpath = path / "timing.csv"
    if tpath.exists():
        with open(tpath, newline="") as fh:
            for row in csv.DictReader(fh):
                timings[int(row["trial_id"])] = float(row["wall_time"])
    records = []
    with open(path / "trials.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            values = {k: _parse(k, v) for k, v in row.items()}
            values["wall_time"] = timings.get(values["trial_id"], 0.0)
            records.append(TrialRecord(**values))
    return records


def export_rows(rows, summary, path, name="trials.csv"):
    """Generic per-trial table plus summary.json, same formatting as :func:`export`."""
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
        if rows:
            cols = list(rows[0])
            with open(path / name, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(cols)
                for r in rows:
                    w.writerow([_fmt(r[c]) for c in cols])
        (path / "summary.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True, default=_json_default) + "\n"
        )
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    return path
