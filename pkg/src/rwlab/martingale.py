"""The path functional F and its stopped supermartingale.

For ``v > 0``, ``F(v)`` is the sum of the edge terms
``1 / (w(Z(j)) * w(Z(j+1)))`` over the edges between 0 and ``v``; for
``v < 0`` it is the mirrored sum. Writing ``G`` for the signed version
(``G(v) = F(v)`` on the right ray, ``-F(v)`` on the left ray, ``G(0) = 0``)
turns F into a potential: ``G(v + 1) - G(v)`` is the term of edge ``v``.

``F`` is undefined at the origin and :func:`eval_F` refuses it. Where a
walk sits at the origin (at time 0, or at the return time T that freezes
the stopped process) the empty-sum value 0 is used; that is the only value
for which harmonicity holds at ``v = +-1``.
"""

from __future__ import annotations

from collections import Counter, deque
from itertools import accumulate

from .walk import Q, StepRecord, WalkState


class DomainError(ValueError):
    """F was asked for at the origin."""


class StoppedStateError(ValueError):
    """A conditional expectation was asked for at the origin."""


class ContractError(ValueError):
    """A tracker was handed a step that does not belong to its walk."""


class VerificationError(AssertionError):
    """An exact-arithmetic identity failed."""


def eval_F(state: WalkState, v: int):
    """F at site ``v``, summed from scratch out of the local times."""
    if v == 0:
        raise DomainError("F is not defined at the origin")
    terms = (state.edge_term_scratch(j) for j in (range(0, v) if v > 0 else range(v, 0)))
    return sum(terms, state.zero)


def _F(state: WalkState, v: int):
    return state.zero if v == 0 else eval_F(state, v)


def F_profile(state: WalkState) -> tuple:
    """Prefix sums of F over the visited interval plus one site each side.

    Returns ``(lo - 1, [F(lo - 1), ..., F(hi + 1)])`` with the origin entry
    set to 0.
    """
    lo, hi = state.lo - 1, state.hi + 1
    right = list(accumulate((state.edge_term_scratch(j) for j in range(0, hi)),
                            initial=state.zero))
    left = list(accumulate((state.edge_term_scratch(j) for j in range(-1, lo - 1, -1)),
                           initial=state.zero))
    return lo, left[:0:-1] + right


def expected_F_next(state: WalkState):
    """E[F_i(X_{i+1})]: the walker moves, the weights stay frozen."""
    x = state.position
    if x == 0:
        raise StoppedStateError("walker is at the origin")
    p_left, p_right = state.transition_probs()
    return p_left * _F(state, x - 1) + p_right * _F(state, x + 1)


def expected_F_after_update(state: WalkState):
    """E[F_{i+1}(X_{i+1})]: the walker moves and its new site is reinforced.

    Both successor states are built explicitly and F is evaluated from
    scratch in each.
    """
    x = state.position
    if x == 0:
        raise StoppedStateError("walker is at the origin")
    p_left, p_right = state.transition_probs()
    return p_left * _F(state.moved(-1), x - 1) + p_right * _F(state.moved(1), x + 1)


def supermartingale_gap(state: WalkState):
    """``E[F_{i+1}(X_{i+1})] - F_i(X_i)``, evaluated from scratch; never positive."""
    return expected_F_after_update(state) - eval_F(state, state.position)


def local_gap(state: WalkState, v: int, z=None):
    """Same quantity as :func:`supermartingale_gap`, from the sites near ``v``.

    Uses only ``Z`` at ``v - 2 .. v + 2``: harmonicity cancels the far part
    of the path, and a step reinforces one site, so at most one edge term of
    each successor's path changes. ``z`` overrides ``state.local_time``.
    """
    if v == 0:
        raise StoppedStateError("walker is at the origin")
    z = z or state.local_time
    w = state.w
    one = Q(1) if state.exact else 1.0
    s = 1 if v > 0 else -1
    zo, zv, zn = z(v + s), z(v), z(v - s)
    w_out, w_in, wv = w(zo), w(zn), w(zv)
    total = w_in + w_out
    p_out, p_in = w_out / total, w_in / total
    e_out = one / (wv * w_out)
    e_in = one / (w_in * wv)
    d_out = one / (wv * w(zo + 1)) - e_out
    if v - s == 0:
        d_in = state.zero
    else:
        wnn = w(z(v - 2 * s))
        d_in = one / (wnn * w(zn + 1)) - one / (wnn * w_in)
    return p_out * (e_out + d_out) + p_in * (d_in - e_in)


def hitting_increment(state: WalkState, direction: int = 0):
    """Change in F(X) when the walker steps onto a never-visited site.

    The walker must stand on a frontier site of the visited interval;
    ``direction`` picks the side when it stands on both (the fresh walk).
    Verifies that the increment equals ``1 / (w(Z(frontier)) * w(1))``.
    """
    x = state.position
    if direction == 0:
        if x == state.hi and x != state.lo:
            direction = 1
        elif x == state.lo and x != state.hi:
            direction = -1
        else:
            raise ValueError("walker is not on a unique frontier; pass direction")
    target = x + direction
    if state.local_time(target) != 0:
        raise ValueError(f"site {target} has already been visited")
    after = state.moved(direction)
    inc = _F(after, target) - _F(state, x)
    one = Q(1) if state.exact else 1.0
    expected = one / (state.w(state.local_time(x)) * state.w(1))
    if state.exact and inc != expected:
        raise VerificationError(f"hitting increment {inc} != {expected}")
    if not state.exact and abs(inc - expected) > 1e-12 * max(1.0, abs(_F(after, target))):
        raise VerificationError(f"hitting increment {inc} != {expected}")
    return inc


class MartingaleTracker:
    """Follows ``F_{min(T,i)}(X_{min(T,i)})`` along one walk in O(1) per step.

    Feed it every :class:`StepRecord` of its walk via :meth:`track_step`.
    With ``verify=True`` each step also checks, at the state before the step,
    that the exact supermartingale gap is not positive, checks every frontier
    hit against the closed-form increment, and every ``scratch_every`` steps
    compares the tracked value with :func:`eval_F`. In exact mode any failure
    raises :class:`VerificationError` when ``strict``; in float mode positive
    gaps up to ``tol`` (relative to F) are counted as rounding noise and
    larger ones as violations.

    ``restart=True`` is an extension: instead of freezing at the first return
    to the origin, the tracker starts a fresh excursion after each return.
    """

    def __init__(self, state: WalkState, verify: bool = False, restart: bool = False,
                 scratch_every: int = 1, tol: float = 1e-12, strict: bool = None,
                 history: int = 0, ledger=None):
        if state.step != 0:
            raise ContractError("tracker must start at step 0")
        self.exact = state.exact
        self.verify = verify
        self.restart = restart
        self.scratch_every = max(int(scratch_every), 0)
        self.tol = tol
        self.strict = self.exact if strict is None else strict
        self.ledger = ledger
        self.history = deque(maxlen=history) if history else None
        self.potential = state.zero
        self.value = state.zero
        self.stopped = False
        self.stop_time = None
        self.returns = 0
        self.step = 0
        self.checks = 0
        self.violations = 0
        self.failures = Counter()
        self.float_noise = 0
        self.max_gap = None
        self.last_gap = None
        self.max_deviation = 0.0
        self.hits = 0
        self.gap_checks = 0
        self.pre_stop_gap_checks = 0
        self.hit_checks = 0
        self.scratch_checks = 0

    @property
    def mode(self) -> str:
        return "exact" if self.exact else "float"

    def _fail(self, kind: str, msg: str):
        self.violations += 1
        self.failures[kind] += 1
        if self.strict:
            raise VerificationError(msg)

    def track_step(self, state: WalkState, record: StepRecord) -> "MartingaleTracker":
        if record.step != self.step + 1 or state.step != record.step \
                or state.position != record.position or abs(record.position - record.prev) != 1:
            raise ContractError(f"step record {record} does not follow tracker step {self.step}")
        x, prev = record.position, record.prev
        live = not self.stopped or self.restart
        gap = None
        if self.verify and live and prev != 0:
            gap = self._check_gap(state, record)
        self.last_gap = gap

        e_old_left, e_old_right = record.old_edges
        if x > prev:
            g = self.potential + e_old_left
        else:
            g = self.potential - e_old_right
        if x > 0:
            g = g + state.edge_term(x - 1) - e_old_left
        elif x < 0:
            g = g - (state.edge_term(x) - e_old_right)
        else:
            if self.verify:
                self._check_zero(g)
            g = state.zero

        if record.new_site:
            self.hits += 1
            if self.verify:
                self._check_increment(state, record, abs(self.potential), abs(g))
        self.potential = g
        self.step = record.step

        if x == 0:
            self.returns += 1
            if not self.stopped:
                self.stopped = True
                self.stop_time = record.step
        if live:
            self.value = abs(g)
            if self.verify and self.scratch_every and x != 0 and record.step % self.scratch_every == 0:
                self._check_scratch(state)
        if self.history is not None:
            self.history.append(self.value)
        if self.ledger is not None and live:
            self.ledger.append({"step": record.step, "position": x, "value": self.value,
                                "gap": gap, "mode": self.mode})
        return self

    def _check_gap(self, state, record):
        x = record.position
        z_now = state.local_time
        gap = local_gap(state, record.prev, lambda y: z_now(y) - (y == x))
        self.checks += 1
        self.gap_checks += 1
        if not self.stopped:
            self.pre_stop_gap_checks += 1
        if self.max_gap is None or gap > self.max_gap:
            self.max_gap = gap
        if gap > 0:
            if self.exact:
                self._fail("gap", f"positive supermartingale gap {gap} at step {record.step - 1}")
            else:
                scale = abs(self.potential) or 1.0
                if gap <= self.tol * scale:
                    self.float_noise += 1
                else:
                    self._fail("gap", f"supermartingale gap {gap:.3e} at step {record.step - 1}")
        return gap

    def _check_zero(self, g):
        if g != 0 and (self.exact or abs(g) > self.tol * max(1.0, abs(self.potential))):
            self._fail("origin", f"potential at the origin is {g}, not 0")

    def _check_increment(self, state, record, before, after):
        one = Q(1) if self.exact else 1.0
        expected = one / (state.w(state.local_time(record.prev)) * state.w(1))
        inc = after - before
        self.checks += 1
        self.hit_checks += 1
        if self.exact:
            if inc != expected:
                self._fail("increment", f"hitting increment {inc} != {expected} at site {record.position}")
        elif abs(inc - expected) > self.tol * max(1.0, after):
            self._fail("increment", f"hitting increment {inc!r} != {expected!r} at site {record.position}")

    def _check_scratch(self, state):
        fresh = eval_F(state, state.position)
        self.checks += 1
        self.scratch_checks += 1
        if self.exact:
            if fresh != self.value:
                self._fail("scratch", f"tracked F {self.value} != scratch {fresh} at step {state.step}")
        else:
            dev = abs(fresh - self.value)
            self.max_deviation = max(self.max_deviation, dev)
            if dev > 1e-9:
                self._fail("scratch", f"tracked F drifted by {dev:.3e} at step {state.step}")


def track_walk(state: WalkState, rng, steps: int, **tracker_args) -> MartingaleTracker:
    """Advance ``state`` by ``steps`` steps under a fresh tracker."""
    tracker = MartingaleTracker(state, **tracker_args)
    for _ in range(steps):
        tracker.track_step(state, state.advance(rng))
    return tracker
