"""Simple Temporal Network with incremental consistency.

Constraints have the form ``t_i - t_j <= w``. The network keeps the full matrix
of shortest-path distances, updated in O(n^2) per inserted edge, so bounds
queries are O(1) and a branch copy is a single array copy.

Time-points have global ids that never change. Because the matrix is closed,
points that no future constraint will mention can be dropped with ``retain``
without changing any implied bound between the remaining points. The full
constraint history is kept in a shared persistent list, so a complete network
can always be rebuilt with ``from_constraints``.

Weights are exact rationals. Internally they are stored as integer multiples of
``1/scale``; when a weight with a new denominator arrives the matrix is rescaled.
If magnitudes outgrow int64 the matrix switches to Python integers.
"""

from __future__ import annotations

import math
from fractions import Fraction
from math import lcm
from typing import Union

import numpy as np

from . import kernels

Number = Union[int, Fraction]

ORIGIN = 0
_INF64 = 2**62
_SAFE = 2**40  # per-entry magnitude kept well below int64 when summed
_INITIAL_CAPACITY = 8
_GROWTH = 4


class InconsistentNetworkError(ValueError):
    pass


class Stn:
    __slots__ = ("_d", "_ids", "_row", "_next", "_scale", "_consistent", "_history", "_inf")

    def __init__(self) -> None:
        self._d = np.full((_INITIAL_CAPACITY, _INITIAL_CAPACITY), _INF64, dtype=np.int64)
        self._d[0, 0] = 0
        self._ids = [ORIGIN]
        self._row = {ORIGIN: 0}
        self._next = 1
        self._scale = 1
        self._consistent = True
        self._history: tuple | None = None  # (previous, (i, j, w)) cons cells
        self._inf = _INF64

    @classmethod
    def from_constraints(cls, n_points: int, constraints) -> "Stn":
        """Network over ids ``0..n_points-1`` holding every given constraint."""
        stn = cls()
        for _ in range(n_points - 1):
            stn.add_time_point()
        for i, j, w in constraints:
            stn.add_constraint(i, j, w)
        return stn

    # ------------------------------------------------------------ queries

    @property
    def size(self) -> int:
        """Number of live time-points, the origin included."""
        return len(self._ids)

    @property
    def allocated(self) -> int:
        """Number of ids handed out so far."""
        return self._next

    @property
    def ids(self) -> list[int]:
        return list(self._ids)

    @property
    def consistent(self) -> bool:
        return self._consistent

    @property
    def constraints(self) -> list[tuple[int, int, Fraction]]:
        """All constraints ever added, as ``(i, j, w)`` meaning ``t_i - t_j <= w``."""
        out = []
        node = self._history
        while node is not None:
            node, item = node
            out.append(item)
        out.reverse()
        return out

    def _r(self, i: int) -> int:
        try:
            return self._row[i]
        except KeyError:
            raise IndexError(f"unknown or dropped time-point {i}") from None

    def distance(self, j: int, i: int) -> Fraction | float:
        """Tightest implied bound on ``t_i - t_j``."""
        d = self._d[self._r(j), self._r(i)]
        if d >= self._inf:
            return math.inf
        return Fraction(int(d), self._scale)

    def bounds(self, i: int) -> tuple[Fraction, Fraction | float]:
        r = self._r(i)
        if not self._consistent:
            raise InconsistentNetworkError("bounds of an inconsistent network")
        lb = -Fraction(int(self._d[r, 0]), self._scale)
        ub = self._d[0, r]
        return lb, (math.inf if ub >= self._inf else Fraction(int(ub), self._scale))

    def earliest_schedule(self) -> dict[int, Fraction]:
        """Every live point at its lower bound."""
        if not self._consistent:
            raise InconsistentNetworkError("cannot schedule an inconsistent network")
        n = len(self._ids)
        col = self._d[:n, 0]
        return {i: -Fraction(int(col[r]), self._scale) for r, i in enumerate(self._ids)}

    def lower_bounds(self) -> np.ndarray:
        """Float lower bounds of the live points, in ``ids`` order."""
        return -self._d[: len(self._ids), 0].astype(float) / self._scale

    def upper_bounds(self) -> np.ndarray:
        row = self._d[0, : len(self._ids)]
        out = row.astype(float) / self._scale
        out[row >= self._inf] = math.inf
        return out

    # ----------------------------------------------------------- mutation

    def add_time_point(self) -> int:
        if not self._consistent:
            raise InconsistentNetworkError("network is inconsistent")
        n = len(self._ids)
        if n == self._d.shape[0]:
            cap = n + _GROWTH
            grown = np.full((cap, cap), self._inf, dtype=self._d.dtype)
            grown[:n, :n] = self._d[:n, :n]
            self._d = grown
        # only edge out of the new point: origin - t <= 0
        self._d[n, :n] = self._d[0, :n]
        self._d[:n, n] = self._inf
        self._d[n, n] = 0
        pid = self._next
        self._next += 1
        self._ids.append(pid)
        self._row[pid] = n
        return pid

    def add_constraint(self, i: int, j: int, w: Number) -> bool:
        """Record ``t_i - t_j <= w``; returns whether the network is still consistent."""
        ri, rj = self._r(i), self._r(j)
        w = Fraction(w)
        self._history = (self._history, (i, j, w))
        if not self._consistent:
            return False
        ticks = self._ticks(w)
        if not kernels.stn_close(self._d, len(self._ids), rj, ri, ticks, self._inf):
            self._consistent = False
        return self._consistent

    def add_bounds(self, i: int, j: int, lo: Number, hi: Number) -> bool:
        """Record ``lo <= t_i - t_j <= hi``."""
        self.add_constraint(i, j, hi)
        return self.add_constraint(j, i, -Fraction(lo))

    def retain(self, keep) -> None:
        """Drop every live point except the origin and ``keep``."""
        rows = [0] + sorted(self._r(i) for i in set(keep) if i != ORIGIN)
        if len(rows) == len(self._ids):
            return
        self._d = self._d[np.ix_(rows, rows)].copy()
        self._ids = [self._ids[r] for r in rows]
        self._row = {i: r for r, i in enumerate(self._ids)}

    def branch_copy(self) -> "Stn":
        # trimmed copy: search trees hold many networks at once
        n = len(self._ids)
        child = Stn.__new__(Stn)
        child._d = self._d[:n, :n].copy()
        child._ids = list(self._ids)
        child._row = dict(self._row)
        child._next = self._next
        child._scale = self._scale
        child._consistent = self._consistent
        child._history = self._history
        child._inf = self._inf
        return child

    # ------------------------------------------------------------ scaling

    def _ticks(self, w: Fraction):
        den = w.denominator
        if self._scale % den:
            self._rescale(lcm(self._scale, den))
        ticks = w.numerator * (self._scale // den)
        if self._d.dtype != object and abs(ticks) > _SAFE:
            self._to_object()
        return ticks

    def _rescale(self, new_scale: int) -> None:
        factor = new_scale // self._scale
        n = len(self._ids)
        block = self._d[:n, :n]
        finite = block < self._inf
        if self._d.dtype != object:
            peak = int(np.abs(block[finite]).max(initial=0))
            if peak * factor > _SAFE:
                self._to_object()
                block = self._d[:n, :n]
        block[finite] = block[finite] * factor
        self._scale = new_scale

    def _to_object(self) -> None:
        big = self._d.astype(object)
        big[self._d >= self._inf] = math.inf
        self._d = big
        self._inf = math.inf

    def matrix_key(self) -> tuple:
        """Hashable snapshot of the live points and their closed distances."""
        n = len(self._ids)
        return (tuple(self._ids), self._scale, self._d[:n, :n].tobytes() if self._d.dtype != object else tuple(map(tuple, self._d[:n, :n])))

    def __repr__(self) -> str:
        return f"Stn(points={len(self._ids)}, allocated={self._next}, consistent={self._consistent})"
