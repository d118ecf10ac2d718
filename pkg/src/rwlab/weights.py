"""Reinforcement weight functions w(k)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from ._accel import njit


@njit
def _power_table(start, stop, alpha, scale):
    out = np.empty(stop - start)
    for j in range(start, stop):
        out[j - start] = scale * math.pow(j, alpha)
    return out


class WeightError(ValueError):
    """Invalid weight parameters or an argument outside the table."""


@dataclass(frozen=True)
class WeightFunction:
    """Weight of a site as a function of its local time.

    In ``power`` mode ``w(k) = scale * k**alpha`` for ``k >= 1``. In ``table``
    mode ``table[k - 1]`` is ``w(k)``; past the end of the table the
    ``tail`` rule applies (``"error"`` or ``"constant"``, which repeats the
    last entry). ``w(0) = w0`` in both modes.

    Float weights are evaluated one at a time with libm ``pow`` so that the
    same ``k`` always maps to the same double, no matter how it is batched.
    The exact value of a power-mode weight is the rational image of that
    double.
    """

    alpha: float = 0.0
    scale: float = 1.0
    w0: float = 1.0
    mode: str = "power"
    table: tuple = ()
    tail: str = "error"
    _cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.mode not in ("power", "table"):
            raise WeightError(f"unknown weight mode {self.mode!r}")
        if self.tail not in ("error", "constant"):
            raise WeightError(f"unknown tail rule {self.tail!r}")
        if not self.w0 > 0:
            raise WeightError("w0 must be positive")
        if self.mode == "power":
            if not (self.alpha >= 0 and math.isfinite(self.alpha)):
                raise WeightError("alpha must be finite and >= 0")
            if not self.scale > 0:
                raise WeightError("scale must be positive")
        else:
            if len(self.table) == 0:
                raise WeightError("table mode needs at least one entry")
            exact = tuple(Fraction(x) for x in self.table)
            if any(x <= 0 for x in exact):
                raise WeightError("table weights must be positive")
            if any(b < a for a, b in zip(exact, exact[1:])):
                raise WeightError("table weights must be nondecreasing")
            object.__setattr__(self, "table", exact)
        self._cache["float"] = np.array([float(self.w0)])

    @classmethod
    def power(cls, alpha: float, scale: float = 1.0, w0: float = 1.0) -> "WeightFunction":
        return cls(alpha=float(alpha), scale=float(scale), w0=w0)

    @classmethod
    def from_table(cls, values: Sequence, w0=1.0, tail: str = "error") -> "WeightFunction":
        return cls(mode="table", table=tuple(values), w0=w0, tail=tail)

    @property
    def nondecreasing(self) -> bool:
        """True when w(0) <= w(1) <= w(2) <= ... .

        Rules out only a large ``w0``; entries for ``k >= 1`` are already
        monotone by construction.
        """
        return Fraction(self.w0) <= self.exact(1)

    def _table_entry(self, k: int) -> Fraction:
        if k <= len(self.table):
            return self.table[k - 1]
        if self.tail == "constant":
            return self.table[-1]
        raise WeightError(f"local time {k} is past the end of the weight table "
                          f"(length {len(self.table)}, tail rule 'error')")

    def weight(self, k: int) -> float:
        """w(k) as a double."""
        if k < 0:
            raise WeightError("local time must be >= 0")
        values = self._cache["float"]
        if k >= len(values):
            values = self._extend(max(k + 1, 2 * len(values)))
        return float(values[k])

    def _extend(self, n: int) -> np.ndarray:
        values = self._cache["float"]
        start = len(values)
        if self.mode == "power":
            new = _power_table(start, n, self.alpha, self.scale)
        else:
            new = np.array([float(self._table_entry(j)) for j in range(start, n)])
        values = np.concatenate([values, new])
        values.flags.writeable = False
        self._cache["float"] = values
        return values

    def exact(self, k: int) -> Fraction:
        """w(k) as an exact rational."""
        if k < 0:
            raise WeightError("local time must be >= 0")
        if k == 0:
            return Fraction(self.w0)
        if self.mode == "table":
            return self._table_entry(k)
        return Fraction(self.weight(k))

    def values(self, n: int) -> np.ndarray:
        """Array of w(0), ..., w(n-1), bit-identical to :meth:`weight`."""
        values = self._cache["float"]
        if n > len(values):
            values = self._extend(n)
        return values[:n]

    def to_dict(self) -> dict:
        if self.mode == "power":
            return {"mode": "power", "alpha": self.alpha, "scale": self.scale, "w0": self.w0}
        return {"mode": "table", "table": [str(x) for x in self.table],
                "w0": str(self.w0), "tail": self.tail}
