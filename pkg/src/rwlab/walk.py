"""Vertex-reinforced random walk on the integers.

From site ``x`` the walk steps to ``x + 1`` with probability
``w(Z(x+1)) / (w(Z(x-1)) + w(Z(x+1)))`` and to ``x - 1`` otherwise, where
``Z(y)`` counts the times ``m <= i`` with ``X_m = y`` (time 0 included).

A step goes right when the uniform draw ``u`` satisfies ``u < p_right``.
Float mode compares against the rounded double ``p_right``; exact mode
compares against the exact rational, resolving draws within ``1e-12`` of
the double with rational arithmetic. The two modes can only disagree on a
draw within about one ulp of ``p_right``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import NamedTuple, Union

from .rng import Rng
from .weights import WeightFunction

try:
    from gmpy2 import mpq as Q
except ImportError:  # pragma: no cover
    Q = Fraction

Scalar = Union[float, Fraction, Q]

_FILTER = 1e-12


class StateError(ValueError):
    """A walk state violates its structural invariants."""


class StepRecord(NamedTuple):
    """What one call to :meth:`WalkState.step` changed.

    ``old_edges`` holds the edge terms of ``(position - 1, position)`` and
    ``(position, position + 1)`` before the local time at ``position`` was
    incremented; those are the only two terms a step modifies.
    """

    step: int
    prev: int
    position: int
    new_site: bool
    old_edges: tuple


class WalkState:
    """Position, step count, local times and edge terms of one walk.

    Local times and edge terms live in dense lists indexed by
    ``site + offset``; the visited sites always form an interval containing
    0, and the lists grow at either end by doubling. Edge ``j`` joins sites
    ``j`` and ``j + 1`` and carries ``1 / (w(Z(j)) * w(Z(j+1)))``.
    """

    def __init__(self, weights: WeightFunction, exact: bool = False, capacity: int = 16):
        self.weights = weights
        self.exact = exact
        self._w = (lambda k: Q(weights.exact(k))) if exact else weights.weight
        self._wcache: list = []
        self._ecache: dict = {}
        self.position = 0
        self.step = 0
        self.lo = 0
        self.hi = 0
        capacity = max(int(capacity), 4)
        self._off = capacity // 2
        self._lt = [0] * capacity
        self._lt[self._off] = 1
        base = self._edge_value(0, 0)
        self._edges = [base] * capacity
        self._edges[self._off - 1] = self._edge_value(0, 1)
        self._edges[self._off] = self._edge_value(1, 0)

    # -- construction ---------------------------------------------------

    @classmethod
    def from_local_times(cls, weights: WeightFunction, lo: int, counts, position: int,
                         exact: bool = False) -> "WalkState":
        """State with ``Z(lo + k) = counts[k]`` and the walker at ``position``.

        The step index is inferred as ``sum(counts) - 1``. Only the
        structural invariants are checked; whether a path realises these
        local times is not.
        """
        counts = [int(c) for c in counts]
        hi = lo + len(counts) - 1
        if not lo <= 0 <= hi:
            raise StateError("visited interval must contain 0")
        if any(c < 1 for c in counts):
            raise StateError("every site of the visited interval needs local time >= 1")
        if not lo <= position <= hi:
            raise StateError("walker must sit inside the visited interval")
        state = cls(weights, exact=exact, capacity=2 * (max(-lo, hi) + 4))
        off = state._off
        for k, c in enumerate(counts):
            state._lt[off + lo + k] = c
        state.lo, state.hi = lo, hi
        state.position = position
        state.step = sum(counts) - 1
        for j in range(lo - 1, hi + 1):
            state._edges[off + j] = state._edge_value(state._lt[off + j], state._lt[off + j + 1])
        return state

    def copy(self) -> "WalkState":
        new = WalkState.__new__(WalkState)
        new.__dict__.update(self.__dict__)
        new._lt = list(self._lt)
        new._edges = list(self._edges)
        return new

    # -- arithmetic -----------------------------------------------------

    def w(self, k: int) -> Scalar:
        """w(k) in this state's arithmetic."""
        cache = self._wcache
        if k < len(cache):
            return cache[k]
        for j in range(len(cache), k + 1):
            cache.append(self._w(j))
        return cache[k]

    def _edge_value(self, a: int, b: int) -> Scalar:
        key = (a, b) if a <= b else (b, a)
        val = self._ecache.get(key)
        if val is None:
            one = Q(1) if self.exact else 1.0
            val = one / (self.w(a) * self.w(b))
            self._ecache[key] = val
        return val

    @property
    def zero(self) -> Scalar:
        return Q(0) if self.exact else 0.0

    # -- queries --------------------------------------------------------

    def local_time(self, y: int) -> int:
        if self.lo <= y <= self.hi:
            return self._lt[y + self._off]
        return 0

    def edge_term(self, j: int) -> Scalar:
        """Stored term for edge ``(j, j + 1)``."""
        idx = j + self._off
        if 0 <= idx < len(self._edges):
            return self._edges[idx]
        return self._edge_value(0, 0)

    def edge_term_scratch(self, j: int) -> Scalar:
        """Edge term recomputed from the weights and local times."""
        one = Q(1) if self.exact else 1.0
        return one / (self.w(self.local_time(j)) * self.w(self.local_time(j + 1)))

    def transition_probs(self) -> tuple:
        """``(p_left, p_right)`` at the current position."""
        wl = self.w(self.local_time(self.position - 1))
        wr = self.w(self.local_time(self.position + 1))
        p_right = wr / (wl + wr)
        one = Q(1) if self.exact else 1.0
        return one - p_right, p_right

    def local_times(self) -> tuple:
        """``(lo, [Z(lo), ..., Z(hi)])``."""
        off = self._off
        return self.lo, self._lt[self.lo + off:self.hi + off + 1]

    @property
    def range(self) -> tuple:
        return self.lo, self.hi

    # -- evolution ------------------------------------------------------

    def _grow(self):
        cap = len(self._lt)
        pad = cap // 2
        base = self._edge_value(0, 0)
        self._lt = [0] * pad + self._lt + [0] * pad
        self._edges = [base] * pad + self._edges + [base] * pad
        self._off += pad

    def _goes_right(self, u: float) -> bool:
        x = self.position
        zl = self.local_time(x - 1)
        zr = self.local_time(x + 1)
        fw = self.weights.weight
        wl, wr = fw(zl), fw(zr)
        p = wr / (wl + wr)
        if not self.exact or abs(u - p) > _FILTER:
            return u < p
        el, er = self.w(zl), self.w(zr)
        return Q(u) < er / (el + er)

    def step_with(self, u: float) -> StepRecord:
        """Advance one step using the uniform draw ``u``."""
        prev = self.position
        x = prev + 1 if self._goes_right(u) else prev - 1
        idx = x + self._off
        if idx - 1 < 0 or idx + 1 >= len(self._lt):
            self._grow()
            idx = x + self._off
        lt = self._lt
        edges = self._edges
        old = (edges[idx - 1], edges[idx])
        z = lt[idx] + 1
        lt[idx] = z
        edges[idx - 1] = self._edge_value(lt[idx - 1], z)
        edges[idx] = self._edge_value(z, lt[idx + 1])
        new_site = z == 1
        if new_site:
            if x > self.hi:
                self.hi = x
            else:
                self.lo = x
        self.position = x
        self.step += 1
        return StepRecord(self.step, prev, x, new_site, old)

    def advance(self, rng: Rng) -> StepRecord:
        """Advance one step, consuming the next uniform of ``rng``."""
        return self.step_with(rng.uniform())

    def moved(self, direction: int) -> "WalkState":
        """Copy of this state after a forced step in ``direction`` (+1 or -1)."""
        if direction not in (-1, 1):
            raise ValueError("direction must be +1 or -1")
        new = self.copy()
        new.step_with(0.0 if direction == 1 else 1.0)
        return new

    # -- checks ---------------------------------------------------------

    def check_invariants(self, tol: float = 0.0):
        """Raise :class:`StateError` if any structural invariant fails.

        ``tol`` bounds the relative deviation of stored float edge terms from
        their recomputation; exact states must match exactly.
        """
        lo, counts = self.local_times()
        if not lo <= 0 <= self.hi:
            raise StateError("visited interval does not contain 0")
        if any(c < 1 for c in counts):
            raise StateError("hole in the visited interval")
        if self.local_time(0) < 1:
            raise StateError("origin local time below 1")
        if sum(counts) != self.step + 1:
            raise StateError(f"local times sum to {sum(counts)}, expected {self.step + 1}")
        if self.lo > 0 or self.hi < 0 or self.local_time(self.lo - 1) or self.local_time(self.hi + 1):
            raise StateError("visited interval bookkeeping is off")
        if not self.lo <= self.position <= self.hi:
            raise StateError("walker outside the visited interval")
        for j in range(self.lo - 1, self.hi + 1):
            stored, fresh = self.edge_term(j), self.edge_term_scratch(j)
            if self.exact:
                if stored != fresh:
                    raise StateError(f"edge term {j} is stale")
            elif abs(stored - fresh) > tol * abs(fresh):
                raise StateError(f"edge term {j} is stale")

    def __repr__(self):
        lo, counts = self.local_times()
        mode = "exact" if self.exact else "float"
        return f"WalkState(position={self.position}, step={self.step}, lo={lo}, Z={counts}, {mode})"


def run_walk(weights: WeightFunction, steps: int, rng: Rng, exact: bool = False) -> WalkState:
    """Walk ``steps`` steps from the origin and return the final state."""
    state = WalkState(weights, exact=exact)
    for u in rng.uniforms(steps):
        state.step_with(float(u))
    return state


def path(weights: WeightFunction, steps: int, rng: Rng, exact: bool = False) -> list:
    """Positions ``X_0, ..., X_steps``."""
    state = WalkState(weights, exact=exact)
    out = [0]
    for u in rng.uniforms(steps):
        out.append(state.step_with(float(u)).position)
    return out
