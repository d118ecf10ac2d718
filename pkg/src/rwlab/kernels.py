"""Hot loop for long float-mode runs.

``advance_batch`` moves a batch of independent walks through one chunk of
pre-drawn uniforms. It is compiled with numba unless ``RWL_NUMBA=0``, in
which case a numpy version vectorised across the batch is used instead.
Both consume exactly the same uniforms and evaluate ``p_right`` with the
same double operations, so their trajectories are bit-identical.

Per-walk scalars live in the rows of an int64 array ``S`` with the column
layout given by the ``POS`` ... ``GROW`` constants below. Site ``x`` of walk
``k`` is stored at ``LT[k, x + off]``. First-visit records are indexed by
``|n|``: ``HR/FR`` for the right frontier, ``HL/FL`` for the left one.
"""

from __future__ import annotations

import numpy as np

from ._accel import USE_NUMBA, njit
from .rng import Rng
from .weights import WeightFunction

POS, STEP, LO, HI, FIRST_RETURN, WSTART, WLO, WHI, GROW, STOP_HI, STOP_LO, DONE = range(12)
NCOLS = 12
NO_STOP = 1 << 62

CHUNK = 1 << 16


@njit
def _advance_batch_numba(wtab, U, base, LT, off, S, HR, FR, HL, FL):
    K, m = U.shape
    C = LT.shape[1]
    nw = wtab.shape[0]
    end = base + m
    grow = False
    for k in range(K):
        if S[k, DONE]:
            continue
        grow = False
        stop_hi = S[k, STOP_HI]
        stop_lo = S[k, STOP_LO]
        pos = S[k, POS]
        step = S[k, STEP]
        lo = S[k, LO]
        hi = S[k, HI]
        first_return = S[k, FIRST_RETURN]
        wstart = S[k, WSTART]
        wlo = S[k, WLO]
        whi = S[k, WHI]
        lt = LT[k]
        while step < end:
            idx = pos + off
            if idx < 2 or idx > C - 3:
                S[k, GROW] = 1
                grow = True
                break
            wl = wtab[lt[idx - 1]]
            wr = wtab[lt[idx + 1]]
            if U[k, step - base] < wr / (wl + wr):
                pos += 1
                idx += 1
            else:
                pos -= 1
                idx -= 1
            z = lt[idx] + 1
            lt[idx] = z
            step += 1
            if z >= nw - 1:
                S[k, GROW] = 1
                grow = True
            if z == 1:
                if pos > hi:
                    hi = pos
                    HR[k, pos] = step
                    FR[k, pos] = lt[idx - 1]
                else:
                    lo = pos
                    HL[k, -pos] = step
                    FL[k, -pos] = lt[idx + 1]
                if hi >= stop_hi and lo <= stop_lo:
                    S[k, DONE] = 1
                    grow = True
            elif pos == 0 and first_return < 0:
                first_return = step
            if step == wstart:
                wlo = pos
                whi = pos
            elif step > wstart:
                if pos < wlo:
                    wlo = pos
                elif pos > whi:
                    whi = pos
            if grow:
                break
        S[k, POS] = pos
        S[k, STEP] = step
        S[k, LO] = lo
        S[k, HI] = hi
        S[k, FIRST_RETURN] = first_return
        S[k, WLO] = wlo
        S[k, WHI] = whi
    for k in range(K):
        if S[k, GROW]:
            return True
    return False


def _advance_batch_numpy(wtab, U, base, LT, off, S, HR, FR, HL, FL):
    K, m = U.shape
    C = LT.shape[1]
    rows = np.flatnonzero(S[:, DONE] == 0)
    if len(rows) == 0:
        return False
    step = int(S[rows[0], STEP])
    if np.any(S[rows, STEP] != step):
        raise ValueError("numpy kernel needs the batch in lockstep")
    pos = S[rows, POS].copy()
    while step < base + m:
        idx = pos + off
        if idx.min() < 2 or idx.max() > C - 3:
            S[rows, GROW] = 1
            break
        wl = wtab[LT[rows, idx - 1]]
        wr = wtab[LT[rows, idx + 1]]
        right = U[rows, step - base] < wr / (wl + wr)
        move = np.where(right, 1, -1)
        pos += move
        idx += move
        z = LT[rows, idx] + 1
        LT[rows, idx] = z
        step += 1
        S[rows, POS] = pos
        S[rows, STEP] = step
        grow = z.max() >= len(wtab) - 1
        new = z == 1
        finished = False
        if new.any():
            up = new & (pos > S[rows, HI])
            down = new & ~up
            k, i = rows[up], np.flatnonzero(up)
            S[k, HI] = pos[i]
            HR[k, pos[i]] = step
            FR[k, pos[i]] = LT[k, idx[i] - 1]
            k, i = rows[down], np.flatnonzero(down)
            S[k, LO] = pos[i]
            HL[k, -pos[i]] = step
            FL[k, -pos[i]] = LT[k, idx[i] + 1]
            k = rows[new]
            stop = (S[k, HI] >= S[k, STOP_HI]) & (S[k, LO] <= S[k, STOP_LO])
            if stop.any():
                S[k[stop], DONE] = 1
                finished = True
        ret = (pos == 0) & (S[rows, FIRST_RETURN] < 0)
        S[rows[ret], FIRST_RETURN] = step
        wstart = S[rows, WSTART]
        at = rows[wstart == step]
        S[at, WLO] = S[at, POS]
        S[at, WHI] = S[at, POS]
        after = rows[wstart < step]
        S[after, WLO] = np.minimum(S[after, WLO], S[after, POS])
        S[after, WHI] = np.maximum(S[after, WHI], S[after, POS])
        if grow:
            S[rows, GROW] = 1
            break
        if finished:
            return True
    return bool(S[:, GROW].any())


advance_batch = _advance_batch_numba if USE_NUMBA else _advance_batch_numpy


class _Buffers:
    def __init__(self, K: int, capacity: int):
        self.off = capacity // 2
        self.LT = np.zeros((K, capacity), dtype=np.int64)
        self.LT[:, self.off] = 1
        self.hits = [np.zeros((K, capacity), dtype=np.int64) for _ in range(4)]

    def grow(self):
        K, C = self.LT.shape
        pad = C // 2
        LT = np.zeros((K, C + 2 * pad), dtype=np.int64)
        LT[:, pad:pad + C] = self.LT
        self.LT = LT
        self.off += pad
        self.hits = [np.concatenate([h, np.zeros((K, 2 * pad), dtype=np.int64)], axis=1)
                     for h in self.hits]


def run_batch(weights: WeightFunction, horizon: int, rngs: list, window_start: int = 0,
              stop_hi: int = NO_STOP, stop_lo: int = -NO_STOP, capacity: int = 256,
              advance=None) -> list:
    """Run one walk per ``rng`` for up to ``horizon`` steps.

    A walk ends early once its visited interval reaches both ``stop_hi`` and
    ``stop_lo``. Returns one dict per walk with the final position, steps
    taken, visited interval, first return time (-1 if none), trailing-window
    extent, the local times of the visited interval, and first-visit times
    and frontier local times for both directions (entry ``n - 1`` belongs to
    site ``+-n``).
    """
    advance = advance or advance_batch
    K = len(rngs)
    if K == 0:
        return []
    wtab = weights.values(64)
    buf = _Buffers(K, max(int(capacity), 8))
    S = np.zeros((K, NCOLS), dtype=np.int64)
    S[:, FIRST_RETURN] = -1
    S[:, WSTART] = window_start
    S[:, STOP_HI] = stop_hi
    S[:, STOP_LO] = stop_lo
    base = 0
    chunk = 1024
    while base < horizon and not S[:, DONE].all():
        m = min(chunk, horizon - base)
        chunk = min(2 * chunk, CHUNK)
        U = np.zeros((K, m))
        for k, rng in enumerate(rngs):
            if not S[k, DONE]:
                U[k] = rng.uniforms(m)
        while True:
            S[:, GROW] = 0
            if not advance(wtab, U, base, buf.LT, buf.off, S, *buf.hits):
                break
            idx = S[:, POS] + buf.off
            if idx.min() < 2 or idx.max() > buf.LT.shape[1] - 3:
                buf.grow()
            if buf.LT.max() >= len(wtab) - 1:
                wtab = weights.values(2 * len(wtab))
        base += m
    out = []
    HR, FR, HL, FL = buf.hits
    for k in range(K):
        lo, hi = int(S[k, LO]), int(S[k, HI])
        out.append({
            "position": int(S[k, POS]),
            "steps": int(S[k, STEP]),
            "lo": lo,
            "hi": hi,
            "first_return": int(S[k, FIRST_RETURN]),
            "window": (int(S[k, WLO]), int(S[k, WHI])),
            "local_times": buf.LT[k, lo + buf.off:hi + buf.off + 1].copy(),
            "right_hits": HR[k, 1:hi + 1].copy(),
            "right_frontier": FR[k, 1:hi + 1].copy(),
            "left_hits": HL[k, 1:-lo + 1].copy(),
            "left_frontier": FL[k, 1:-lo + 1].copy(),
        })
    return out


def run_one(weights: WeightFunction, horizon: int, seed: int, stream_id: int = 0,
            window_start: int = 0, advance=None, **kw) -> dict:
    return run_batch(weights, horizon, [Rng(seed, stream_id)], window_start,
                     advance=advance, **kw)[0]
