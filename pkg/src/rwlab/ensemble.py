"""Seeded Monte Carlo sweeps over the reinforcement exponent.

Trajectory ``t`` of cell ``c`` draws from ``Rng(master_seed, c * n_traj + t)``,
so results depend only on the :class:`SweepConfig`, never on the number of
threads or the order in which work units finish.
"""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ._accel import USE_NUMBA
from .kernels import NO_STOP, run_batch
from .rng import Rng
from .stats import DEFAULT_BURNIN, TrajectoryStats, merge, tail_curve
from .weights import WeightFunction

log = logging.getLogger(__name__)

FLUSH_SECONDS = 30.0


class ConfigError(ValueError):
    pass


def thread_count(requested: int = None) -> int:
    """Worker threads: ``requested`` (or the CPU count), capped by ``RWL_THREADS``."""
    n = requested or os.cpu_count() or 1
    cap = os.environ.get("RWL_THREADS")
    if cap:
        try:
            n = min(n, max(int(cap), 1))
        except ValueError:
            raise ConfigError(f"RWL_THREADS must be an integer, got {cap!r}") from None
    return max(n, 1)


@dataclass(frozen=True)
class SweepConfig:
    alpha_grid: tuple = (0.0, 0.3, 1.0, 2.0)
    w0: float = 1.0
    scale: float = 1.0
    horizon: int = 100_000
    n_traj: int = 100
    master_seed: int = 0
    localization_window: float = 0.5
    burnin: int = DEFAULT_BURNIN

    def __post_init__(self):
        object.__setattr__(self, "alpha_grid", tuple(float(a) for a in self.alpha_grid))
        if not self.alpha_grid:
            raise ConfigError("alpha grid is empty")
        if self.horizon < 1000:
            raise ConfigError("horizon must be at least 1000 steps")
        if self.n_traj < 1:
            raise ConfigError("n_traj must be at least 1")
        if not 0 < self.localization_window <= 1:
            raise ConfigError("localization_window must be in (0, 1]")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ConfigError("master_seed must be an unsigned 64-bit integer")
        if self.burnin < 1:
            raise ConfigError("burnin must be >= 1")
        # weight validation
        for a in self.alpha_grid:
            self.weights(a)

    def weights(self, alpha: float) -> WeightFunction:
        try:
            return WeightFunction.power(alpha, scale=self.scale, w0=self.w0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def window_start(self) -> int:
        return self.horizon - int(self.localization_window * self.horizon)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["alpha_grid"] = list(self.alpha_grid)
        return d


def _block_size() -> int:
    # numba walks are independent; the numpy kernel wants a wide batch
    return 1 if USE_NUMBA else 64


def _run_block(weights, horizon, window_start, burnin, seed, ids, stop_hi=NO_STOP, stop_lo=-NO_STOP):
    runs = run_batch(weights, horizon, [Rng(seed, i) for i in ids], window_start,
                     stop_hi=stop_hi, stop_lo=stop_lo)
    return [TrajectoryStats.from_kernel(r, r["steps"], burnin, stream_id=i)
            for r, i in zip(runs, ids)]


def _dump(stats: TrajectoryStats) -> str:
    return json.dumps(asdict(stats), sort_keys=True, separators=(",", ":"))


def _load(line: str) -> TrajectoryStats:
    d = json.loads(line)
    d["window"] = tuple(d["window"])
    return TrajectoryStats(**d)


def run_streams(weights: WeightFunction, horizon: int, seed: int, ids: list,
                window_start: int = 0, burnin: int = DEFAULT_BURNIN, threads: int = None,
                stop_hi: int = NO_STOP, stop_lo: int = -NO_STOP, checkpoint: Path = None,
                flush_seconds: float = FLUSH_SECONDS) -> list:
    """Simulate the streams ``ids`` in parallel; result is sorted by stream id.

    With ``checkpoint`` set, finished trajectories are appended to that JSONL
    file at most every ``flush_seconds``, and trajectories already present
    there are loaded instead of rerun.
    """
    done = {}
    if checkpoint is not None and Path(checkpoint).exists():
        with open(checkpoint) as fh:
            for line in fh:
                if line.strip():
                    st = _load(line)
                    done[st.stream_id] = st
    todo = [i for i in ids if i not in done]
    bs = _block_size()
    blocks = [todo[j:j + bs] for j in range(0, len(todo), bs)]
    pending, last = [], time.monotonic()

    def flush():
        nonlocal pending, last
        if checkpoint is not None and pending:
            with open(checkpoint, "a") as fh:
                fh.writelines(_dump(s) + "\n" for s in pending)
            log.debug("checkpointed %d trajectories to %s", len(pending), checkpoint)
        pending, last = [], time.monotonic()

    args = (weights, horizon, window_start, burnin, seed)
    with ThreadPoolExecutor(max_workers=thread_count(threads)) as pool:
        futures = [pool.submit(_run_block, *args, b, stop_hi, stop_lo) for b in blocks]
        for fut in futures:
            for st in fut.result():
                done[st.stream_id] = st
                pending.append(st)
            if time.monotonic() - last >= flush_seconds:
                flush()
    flush()
    return merge([done[i] for i in ids])


def run_cell(config: SweepConfig, alpha: float, cell_index: int, threads: int = None,
             checkpoint_dir=None) -> list:
    """The ``n_traj`` trajectories of one grid cell."""
    ids = [cell_index * config.n_traj + t for t in range(config.n_traj)]
    ckpt = None
    if checkpoint_dir is not None:
        Path(checkpoint_dir).mkdir(parents=True, exist_ok=True)
        ckpt = Path(checkpoint_dir) / f"cell_{cell_index}.jsonl"
    return run_streams(config.weights(alpha), config.horizon, config.master_seed, ids,
                       config.window_start, config.burnin, threads, checkpoint=ckpt)


def cell_row(alpha: float, stats: list) -> dict:
    """Phase-table row aggregated from one cell's trajectories."""
    win = np.array([s.window_sites for s in stats])
    span = np.array([s.span for s in stats])
    visits = np.array([s.origin_visits for s in stats])
    return {
        "alpha": float(alpha),
        "n_traj": len(stats),
        "median_window_sites": float(np.median(win)),
        "median_span": float(np.median(span)),
        "mean_origin_visits": float(visits.mean()),
        "frac_window_le2": float(np.mean(win <= 2)),
        "frac_window_le5": float(np.mean(win <= 5)),
    }


ROW_FIELDS = ["alpha", "n_traj", "median_window_sites", "median_span", "mean_origin_visits",
              "frac_window_le2", "frac_window_le5"]


@dataclass
class SweepResult:
    config: SweepConfig
    rows: list
    trajectories: dict = field(repr=False, default_factory=dict)

    def row(self, alpha: float) -> dict:
        for r in self.rows:
            if r["alpha"] == float(alpha):
                return r
        raise KeyError(alpha)

    def tail_curve(self, alpha: float, k_max: int = 50, **kw):
        return tail_curve(self.trajectories[float(alpha)], k_max, **kw)

    def records(self) -> list:
        """One summary dict per trajectory, grid order then stream order."""
        out = []
        for ci, a in enumerate(self.config.alpha_grid):
            for s in self.trajectories[a]:
                out.append({"cell": ci, "alpha": a, **s.summary()})
        return out


def phase_table(config: SweepConfig, threads: int = None, checkpoint_dir=None) -> SweepResult:
    """Localization indicators for every exponent of the grid."""
    trajectories, rows = {}, []
    for ci, alpha in enumerate(config.alpha_grid):
        stats = run_cell(config, alpha, ci, threads, checkpoint_dir)
        trajectories[alpha] = stats
        rows.append(cell_row(alpha, stats))
    return SweepResult(config, rows, trajectories)
