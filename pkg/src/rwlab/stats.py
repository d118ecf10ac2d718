"""Per-trajectory observables and ensemble tail curves.

The frontier local time of site ``n > 0`` is ``Z_{T_n}(n - 1)``, the
number of visits to ``n - 1`` at the moment ``n`` is first reached; for
``n < 0`` it is ``Z_{T_n}(n + 1)``. Its running minimum past a burn-in
depth stands in for the liminf of that sequence.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

DEFAULT_BURNIN = 10


class StatsError(ValueError):
    pass


@dataclass
class TrajectoryStats:
    """First-visit records and summary counts of one walk.

    ``right_hits[n - 1]`` is ``T_n`` and ``right_frontier[n - 1]`` the
    frontier local time for site ``n``; the ``left_*`` lists hold the same
    for site ``-n``. ``origin_visits`` counts returns to 0 (time 0 excluded).
    ``window`` is the visited extent over the trailing window.
    """

    horizon: int = 0
    burnin: int = DEFAULT_BURNIN
    right_hits: list = field(default_factory=list)
    right_frontier: list = field(default_factory=list)
    left_hits: list = field(default_factory=list)
    left_frontier: list = field(default_factory=list)
    origin_visits: int = 0
    first_return: int = -1
    position: int = 0
    window: tuple = (0, 0)
    running_min_frontier: int = 0
    stream_id: int = 0

    @classmethod
    def from_kernel(cls, run: dict, horizon: int, burnin: int = DEFAULT_BURNIN,
                    stream_id: int = 0) -> "TrajectoryStats":
        lt = run["local_times"]
        st = cls(horizon=horizon, burnin=burnin,
                 right_hits=run["right_hits"].tolist(),
                 right_frontier=run["right_frontier"].tolist(),
                 left_hits=run["left_hits"].tolist(),
                 left_frontier=run["left_frontier"].tolist(),
                 origin_visits=int(lt[-run["lo"]]) - 1,
                 first_return=run["first_return"],
                 position=run["position"],
                 window=tuple(run["window"]),
                 stream_id=stream_id)
        tail = st.right_frontier[burnin - 1:] + st.left_frontier[burnin - 1:]
        st.running_min_frontier = min(tail) if tail else 0
        return st

    # -- incremental recording ------------------------------------------

    @property
    def lo(self) -> int:
        return -len(self.left_hits)

    @property
    def hi(self) -> int:
        return len(self.right_hits)

    @property
    def range(self) -> tuple:
        return self.lo, self.hi

    @property
    def span(self) -> int:
        """Number of distinct sites visited."""
        return self.hi - self.lo + 1

    @property
    def window_sites(self) -> int:
        return self.window[1] - self.window[0] + 1

    def record_hit(self, n: int, t_n: int, frontier_local_time: int) -> "TrajectoryStats":
        """Record the first visit to ``n`` at time ``t_n``."""
        if n == 0:
            raise StatsError("the origin is visited at time 0")
        hits, front = (self.right_hits, self.right_frontier) if n > 0 else \
            (self.left_hits, self.left_frontier)
        if abs(n) <= len(hits):
            raise StatsError(f"site {n} already recorded")
        if abs(n) != len(hits) + 1:
            raise StatsError(f"site {n} is not adjacent to the visited interval")
        if t_n < abs(n) or (hits and t_n <= hits[-1]):
            raise StatsError(f"hitting time {t_n} for site {n} is inconsistent")
        if frontier_local_time < 1:
            raise StatsError("frontier local time must be >= 1")
        hits.append(t_n)
        front.append(frontier_local_time)
        if abs(n) >= self.burnin:
            cur = self.running_min_frontier
            self.running_min_frontier = frontier_local_time if cur == 0 else min(cur, frontier_local_time)
        return self

    def observe(self, state, record):
        """Update from a :class:`~rwlab.walk.StepRecord` of a Python-level walk."""
        if record.new_site:
            self.record_hit(record.position, record.step, state.local_time(record.prev))
        if record.position == 0:
            self.origin_visits += 1
            if self.first_return < 0:
                self.first_return = record.step
        self.position = record.position
        self.horizon = record.step
        return self

    # -- queries ----------------------------------------------------------

    @property
    def hit_times(self) -> list:
        return [(n, t) for n, t in enumerate(self.right_hits, 1)] + \
            [(-n, t) for n, t in enumerate(self.left_hits, 1)]

    @property
    def frontier_lt(self) -> list:
        return [(n, z) for n, z in enumerate(self.right_frontier, 1)] + \
            [(-n, z) for n, z in enumerate(self.left_frontier, 1)]

    def liminf_proxy(self, burnin: int = None) -> int:
        """Smallest frontier local time over sites with ``|n| >= burnin``."""
        burnin = self.burnin if burnin is None else burnin
        tail = self.right_frontier[burnin - 1:] + self.left_frontier[burnin - 1:]
        if not tail:
            raise StatsError(f"no frontier records at depth >= {burnin}")
        return min(tail)

    def check(self):
        """Raise :class:`StatsError` on any broken invariant."""
        for hits, front in ((self.right_hits, self.right_frontier),
                            (self.left_hits, self.left_frontier)):
            if len(hits) != len(front):
                raise StatsError("hit and frontier lists differ in length")
            if any(b <= a for a, b in zip(hits, hits[1:])):
                raise StatsError("hitting times not strictly increasing")
            if any(t < n for n, t in enumerate(hits, 1)):
                raise StatsError("hitting time earlier than the distance")
            if any(z < 1 for z in front):
                raise StatsError("frontier local time below 1")

    def summary(self) -> dict:
        out = {
            "stream_id": self.stream_id,
            "horizon": self.horizon,
            "lo": self.lo,
            "hi": self.hi,
            "span": self.span,
            "origin_visits": self.origin_visits,
            "first_return": self.first_return,
            "position": self.position,
            "window_lo": self.window[0],
            "window_hi": self.window[1],
            "window_sites": self.window_sites,
            "burnin": self.burnin,
            "liminf_proxy": self.running_min_frontier or None,
            "max_frontier_lt": max(self.right_frontier + self.left_frontier, default=None),
        }
        return out

    def hit_rows(self) -> list:
        """``(n, T_n, frontier_lt)`` rows, right ray then left ray."""
        rows = [(n, t, z) for n, (t, z) in enumerate(zip(self.right_hits, self.right_frontier), 1)]
        rows += [(-n, t, z) for n, (t, z) in enumerate(zip(self.left_hits, self.left_frontier), 1)]
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "T_n", "frontier_lt"])
        writer.writerows(self.hit_rows())
        return buf.getvalue()


def merge(*groups) -> list:
    """Fold several lists of stats into one, ordered by stream id."""
    out = [s for g in groups for s in g]
    return sorted(out, key=lambda s: s.stream_id)


@dataclass
class TailCurve:
    """``exceedance[k]`` is the max over depths ``n`` of the ensemble
    frequency of ``{frontier local time at n > k}``.

    ``per_n[i, k]`` holds the per-depth frequencies for depth ``depths[i]``,
    ``counts[i]`` the number of samples there. ``half_width`` is the Wilson
    half-width of the maximising depth's frequency.
    """

    k: np.ndarray
    exceedance: np.ndarray
    half_width: np.ndarray
    depths: np.ndarray
    counts: np.ndarray
    per_n: np.ndarray
    confidence: float = 0.95

    def first_below(self, level: float):
        idx = np.flatnonzero(self.exceedance < level)
        return int(self.k[idx[0]]) if len(idx) else None

    def rows(self) -> list:
        return [(int(k), float(p), float(h)) for k, p, h in zip(self.k, self.exceedance, self.half_width)]


def _wilson_half_width(p, n, z):
    n = np.asarray(n, dtype=float)
    denom = 1 + z * z / n
    return z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom


def frontier_matrix(stats: list, direction: str = "both", depth: int = None) -> np.ndarray:
    """Frontier local times as a (samples, depth) array padded with -1."""
    if direction not in ("both", "right", "left"):
        raise StatsError(f"unknown direction {direction!r}")
    seqs = []
    for s in stats:
        if direction in ("both", "right"):
            seqs.append(s.right_frontier)
        if direction in ("both", "left"):
            seqs.append(s.left_frontier)
    width = max((len(q) for q in seqs), default=0) if depth is None else depth
    M = np.full((len(seqs), width), -1, dtype=np.int64)
    for i, q in enumerate(seqs):
        q = q[:width]
        M[i, :len(q)] = q
    return M


def tail_curve(stats: list, k_max: int, direction: str = "both", n_max: int = None,
               min_fraction: float = 0.9, confidence: float = 0.95,
               min_trajectories: int = 100) -> TailCurve:
    """Empirical ``sup_n P(frontier local time at n > k)`` for ``k = 0..k_max``.

    Only depths reached by at least ``min_fraction`` of the samples (and not
    beyond ``n_max``) enter the supremum.
    """
    if not stats:
        raise StatsError("empty ensemble")
    if len(stats) < min_trajectories:
        raise StatsError(f"tail curve needs at least {min_trajectories} trajectories, got {len(stats)}")
    M = frontier_matrix(stats, direction, n_max)
    counts = (M > 0).sum(axis=0)
    keep = np.flatnonzero(counts >= min_fraction * M.shape[0])
    if len(keep) == 0:
        raise StatsError("no depth is reached by enough trajectories")
    M, counts = M[:, keep], counts[keep]
    ks = np.arange(k_max + 1)
    per_n = ((M[None, :, :] > ks[:, None, None]).sum(axis=1) / counts).T
    arg = per_n.argmax(axis=0)
    exc = per_n[arg, ks]
    z = sps.norm.ppf(0.5 + confidence / 2)
    hw = _wilson_half_width(exc, counts[arg], z)
    return TailCurve(k=ks, exceedance=exc, half_width=hw, depths=keep + 1, counts=counts,
                     per_n=per_n, confidence=confidence)
