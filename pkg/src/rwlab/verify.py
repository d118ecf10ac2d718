"""Exact property suite for the martingale construction.

Each check family runs on short randomised walks and prints as one line of
the report. In exact mode every identity must hold with zero error.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .martingale import (MartingaleTracker, VerificationError, eval_F, expected_F_after_update,
                         expected_F_next, hitting_increment, local_gap)
from .rng import Rng
from .walk import WalkState
from .weights import WeightFunction

FUZZ_ALPHAS = (0.0, 0.3, 0.49)
FLOAT_RTOL = 1e-12


class _StaleEdgeWalk(WalkState):
    """Mutant that forgets to refresh the edge left of each new position."""

    def step_with(self, u):
        rec = super().step_with(u)
        self._edges[rec.position + self._off - 1] = rec.old_edges[0]
        return rec


@dataclass
class Tally:
    checks: int = 0
    violations: int = 0
    max_gap: object = None
    notes: list = field(default_factory=list)

    def add(self, ok: bool, note: str = None):
        self.checks += 1
        if not ok:
            self.violations += 1
            if note and len(self.notes) < 5:
                self.notes.append(note)

    def gap(self, g):
        if self.max_gap is None or g > self.max_gap:
            self.max_gap = g


@dataclass
class VerifyReport:
    tallies: dict = field(default_factory=dict)

    def __getitem__(self, name) -> Tally:
        return self.tallies.setdefault(name, Tally())

    @property
    def checks(self) -> int:
        return sum(t.checks for t in self.tallies.values())

    @property
    def violations(self) -> int:
        return sum(t.violations for t in self.tallies.values())

    @property
    def ok(self) -> bool:
        return self.violations == 0

    def summary(self) -> str:
        return f"{self.violations} violations / {self.checks} checks"

    def lines(self) -> list:
        out = []
        for name, t in self.tallies.items():
            extra = "" if t.max_gap is None else f"  max gap {float(t.max_gap):.3e}"
            out.append(f"{name:<28} {t.violations} violations / {t.checks} checks{extra}")
            out.extend(f"    {n}" for n in t.notes)
        out.append(self.summary())
        return out


def fuzz_weights(gen: np.random.Generator) -> WeightFunction:
    """A random nondecreasing weight function (power or table mode)."""
    if gen.random() < 0.75:
        alpha = float(gen.choice(FUZZ_ALPHAS))
        scale = float(gen.choice([1.0, 2.5]))
        w0 = float(gen.choice([0.25, 0.5, 1.0])) * scale
        return WeightFunction.power(alpha, scale=scale, w0=w0)
    steps = gen.integers(0, 4, size=int(gen.integers(1, 9)))
    table = [Fraction(int(s) + 2, 2) for s in np.cumsum(steps)]
    return WeightFunction.from_table(table, w0=Fraction(int(gen.integers(1, 3)), 2), tail="constant")


def fuzz_table_state(weights: WeightFunction, gen: np.random.Generator, exact: bool,
                     width: int = 8) -> WalkState:
    """Arbitrary positive local times on a random interval around 0."""
    lo = -int(gen.integers(0, width))
    hi = int(gen.integers(0, width))
    counts = gen.integers(1, 12, size=hi - lo + 1)
    choices = [y for y in range(lo, hi + 1) if y != 0] or [0]
    return WalkState.from_local_times(weights, lo, counts, int(gen.choice(choices)), exact=exact)


def _close(a, b, exact):
    if exact:
        return a == b
    return abs(a - b) <= FLOAT_RTOL * max(abs(a), abs(b))


def check_state(state: WalkState, report: VerifyReport, scratch_gap: bool = True):
    """Harmonicity, the gap sign and the local gap formula at one state."""
    x = state.position
    if x == 0:
        return
    exact = state.exact
    f = eval_F(state, x)
    nxt = expected_F_next(state)
    report["harmonicity"].add(_close(nxt, f, exact), f"state {state!r}: {nxt} != {f}")
    if scratch_gap:
        gap = expected_F_after_update(state) - f
        report["supermartingale gap"].add(gap <= 0, f"state {state!r}: gap {gap}")
        report["supermartingale gap"].gap(gap)
        if exact:
            lg = local_gap(state, x)
            report["local gap formula"].add(lg == gap, f"state {state!r}: {lg} != {gap}")


def _frontier_check(state: WalkState, report: VerifyReport):
    x = state.position
    for d in (1, -1):
        if state.local_time(x + d) == 0 and not (x == 0 and state.step > 0):
            try:
                hitting_increment(state, d)
                ok = True
            except VerificationError:
                ok = False
            report["hitting increment"].add(ok, f"state {state!r} direction {d}")


def verify_walk(weights: WeightFunction, rng: Rng, steps: int, report: VerifyReport,
                exact: bool = True, probe_sites=(-3, -1, 1, 2, 5), fault: bool = False,
                scratch_every: int = 1):
    """Walk ``steps`` steps checking every family along the way."""
    cls = _StaleEdgeWalk if fault else WalkState
    state = cls(weights, exact=exact)
    tracker = MartingaleTracker(state, verify=True, restart=True, strict=False,
                                scratch_every=scratch_every)
    probes = {v: eval_F(state, v) for v in probe_sites}
    for _ in range(steps):
        _frontier_check(state, report)
        check_state(state, report)
        rec = state.advance(rng)
        tracker.track_step(state, rec)
        for v, old in probes.items():
            new = eval_F(state, v)
            report["monotonicity"].add(new <= old, f"F({v}) rose from {old} to {new} at step {rec.step}")
            probes[v] = new
    t = report["tracker"]
    t.checks += tracker.checks
    t.violations += tracker.violations
    if tracker.max_gap is not None:
        t.gap(tracker.max_gap)
    return tracker


def run_suite(seed: int = 0, trajectories: int = 40, steps: int = 60, fuzz_states: int = 2000,
              alphas=FUZZ_ALPHAS, exact: bool = True, fault: bool = False,
              include_tables: bool = True) -> VerifyReport:
    """The full property suite: walks per exponent plus fuzzed local-time tables."""
    report = VerifyReport()
    gen = np.random.default_rng(seed)
    families = [WeightFunction.power(a) for a in alphas]
    if include_tables:
        families.append(WeightFunction.from_table([1, 1, 2, 2, 3, 5], w0=Fraction(1, 2), tail="constant"))
    stream = 0
    for weights in families:
        for _ in range(trajectories):
            verify_walk(weights, Rng(seed, stream), steps, report, exact=exact, fault=fault)
            stream += 1
    for _ in range(fuzz_states):
        weights = fuzz_weights(gen)
        state = fuzz_table_state(weights, gen, exact)
        check_state(state, report)
    return report
