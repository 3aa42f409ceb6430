"""Finite representations of Borel subsets of the real line.

A set is stored as a disjoint union of closed intervals, isolated points,
and at most one Smith-Volterra-Cantor ("fat Cantor") component.  All
operations (Lebesgue measure, membership, distance, boolean algebra) are
exact for this class of sets.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

__all__ = [
    "BorelSet",
    "SVCSet",
    "svc_set",
    "svc_measure",
    "distance_to_set",
    "EMPTY",
]

# Expanding a depth-n SVC set materializes 2^n intervals.
_SVC_EXPAND_CAP = 20
_MAX_SVC_DEPTH = 30


def svc_measure(depth: int) -> float:
    """Lebesgue measure of the depth-n SVC subset of [0, 1].

    Stage k removes 2^(k-1) middle intervals of length 4^(-k), so the
    retained mass is 1 - sum_k 2^(k-1) 4^(-k) = 1/2 + 2^(-n-1).
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    return float(Fraction(1, 2) + Fraction(1, 2 ** (depth + 1)))


def _svc_intervals(depth: int) -> list[tuple[Fraction, Fraction]]:
    ivs = [(Fraction(0), Fraction(1))]
    for k in range(1, depth + 1):
        gap = Fraction(1, 4**k)
        nxt = []
        for lo, hi in ivs:
            half = (hi - lo - gap) / 2
            nxt.append((lo, lo + half))
            nxt.append((hi - half, hi))
        ivs = nxt
    return ivs


@dataclass(frozen=True)
class SVCSet:
    """Depth-n Smith-Volterra-Cantor subset of [base_lo, base_hi].

    The construction is the canonical one on [0, 1], mapped affinely onto
    the base interval.
    """

    depth: int
    base_lo: float = 0.0
    base_hi: float = 1.0

    def __post_init__(self):
        if not (1 <= self.depth <= _MAX_SVC_DEPTH):
            raise ValueError(f"SVC depth must be in [1, {_MAX_SVC_DEPTH}]")
        if not self.base_lo < self.base_hi:
            raise ValueError("empty base interval")

    @property
    def scale(self) -> float:
        return self.base_hi - self.base_lo

    def measure(self) -> float:
        return svc_measure(self.depth) * self.scale

    def to_intervals(self) -> list[tuple[float, float]]:
        if self.depth > _SVC_EXPAND_CAP:
            raise ValueError(
                f"refusing to expand SVC set of depth {self.depth} "
                f"(> {_SVC_EXPAND_CAP})"
            )
        a, w = self.base_lo, self.scale
        return [(a + float(lo) * w, a + float(hi) * w) for lo, hi in _svc_intervals(self.depth)]

    def contains(self, x):
        """Exact membership, vectorized; works at any depth without expansion."""
        x = np.asarray(x, dtype=float)
        # map into canonical coordinates
        z = (x - self.base_lo) / self.scale
        inside = (z >= 0.0) & (z <= 1.0)
        lo = np.zeros_like(z)
        length = np.ones_like(z)
        for k in range(1, self.depth + 1):
            gap = 4.0**-k
            half = (length - gap) / 2.0
            in_left = z <= lo + half
            in_right = z >= lo + length - half
            inside &= in_left | in_right
            lo = np.where(in_right, lo + length - half, lo)
            length = half
        return inside if inside.shape else bool(inside)

    def distance(self, x: float) -> float:
        """Distance to the nearest retained point (exact at finite depth)."""
        if x <= self.base_lo:
            return self.base_lo - x
        if x >= self.base_hi:
            return x - self.base_hi
        z = (x - self.base_lo) / self.scale
        lo, length = 0.0, 1.0
        for k in range(1, self.depth + 1):
            gap = 4.0**-k
            half = (length - gap) / 2.0
            if z <= lo + half:
                length = half
            elif z >= lo + length - half:
                lo, length = lo + length - half, half
            else:
                # inside the removed middle gap; edges are retained
                return self.scale * min(z - (lo + half), (lo + length - half) - z)
        return 0.0


def _merge_intervals(ivs):
    ivs = sorted((lo, hi) for lo, hi in ivs if hi >= lo)
    out = []
    for lo, hi in ivs:
        if out and lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return tuple((lo, hi) for lo, hi in out if hi > lo), tuple(
        lo for lo, hi in out if hi == lo
    )


@dataclass(frozen=True)
class BorelSet:
    """Disjoint union of closed intervals, points, and an optional SVC part.

    ``excluded_points`` removes finitely many points from membership tests;
    it never affects measure or distance (which refer to the closure).
    """

    intervals: tuple[tuple[float, float], ...] = ()
    points: tuple[float, ...] = ()
    svc: SVCSet | None = None
    excluded_points: tuple[float, ...] = ()

    @staticmethod
    def make(intervals=(), points=(), svc=None, excluded_points=()) -> "BorelSet":
        ivs, degenerate = _merge_intervals(intervals)
        excl = set(float(p) for p in excluded_points)
        pts = (set(float(p) for p in points) | set(degenerate)) - excl
        pts = tuple(
            sorted(
                p
                for p in pts
                if not any(lo <= p <= hi for lo, hi in ivs)
                and not (svc is not None and svc.contains(p))
            )
        )
        # keep only exclusions that actually puncture the set
        excl = tuple(
            sorted(
                p
                for p in excl
                if any(lo <= p <= hi for lo, hi in ivs)
                or (svc is not None and bool(svc.contains(p)))
            )
        )
        return BorelSet(ivs, pts, svc, excl)

    # -- queries ---------------------------------------------------------

    @property
    def is_empty(self) -> bool:
        return not self.intervals and not self.points and self.svc is None

    def lebesgue(self) -> float:
        total = sum(hi - lo for lo, hi in self.intervals)
        if self.svc is not None:
            total += self.svc.measure()
        return float(total)

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        res = np.zeros(x.shape, dtype=bool)
        for lo, hi in self.intervals:
            res |= (x >= lo) & (x <= hi)
        for p in self.points:
            res |= x == p
        if self.svc is not None:
            res |= self.svc.contains(np.atleast_1d(x)).reshape(x.shape)
        for p in self.excluded_points:
            res &= x != p
        return res if res.shape else bool(res)

    def __contains__(self, x) -> bool:
        return bool(self.contains(x))

    def distance(self, x: float) -> float:
        if self.is_empty:
            raise ValueError("distance to the empty set is undefined")
        best = np.inf
        for lo, hi in self.intervals:
            best = min(best, 0.0 if lo <= x <= hi else min(abs(x - lo), abs(x - hi)))
        for p in self.points:
            best = min(best, abs(x - p))
        if self.svc is not None:
            best = min(best, self.svc.distance(x))
        return float(best)

    # -- algebra ---------------------------------------------------------

    def _all_intervals(self) -> list[tuple[float, float]]:
        ivs = list(self.intervals)
        if self.svc is not None:
            ivs.extend(self.svc.to_intervals())
        return ivs

    def union(self, other: "BorelSet") -> "BorelSet":
        # a point excluded from one side is in the union iff the other side has it
        excl = tuple(
            p for p in self.excluded_points if not other.contains(p)
        ) + tuple(p for p in other.excluded_points if not self.contains(p))
        if self.svc is not None and other.svc is not None and self.svc != other.svc:
            return BorelSet.make(
                self._all_intervals() + other._all_intervals(),
                self.points + other.points,
                excluded_points=excl,
            )
        svc = self.svc or other.svc
        a = self if self.svc is None else BorelSet(self.intervals, self.points)
        b = other if other.svc is None else BorelSet(other.intervals, other.points)
        # keep the svc part symbolic; fold any overlapping intervals in with it
        # only when they are disjoint from it, else expand
        ivs = list(a.intervals) + list(b.intervals)
        if svc is not None and any(
            lo < svc.base_hi and hi > svc.base_lo for lo, hi in ivs
        ):
            return BorelSet.make(
                ivs + svc.to_intervals(), a.points + b.points, excluded_points=excl
            )
        return BorelSet.make(ivs, a.points + b.points, svc=svc, excluded_points=excl)

    def intersect(self, other: "BorelSet") -> "BorelSet":
        excl = self.excluded_points + other.excluded_points
        if self.svc is not None and self.svc == other.svc:
            rest = BorelSet(self.intervals, self.points).intersect(
                BorelSet(other.intervals, other.points)
            )
            return BorelSet.make(
                rest.intervals, rest.points, svc=self.svc, excluded_points=excl
            )
        a_ivs = self._all_intervals()
        b_ivs = other._all_intervals()
        ivs = []
        for lo1, hi1 in a_ivs:
            for lo2, hi2 in b_ivs:
                lo, hi = max(lo1, lo2), min(hi1, hi2)
                if lo < hi:
                    ivs.append((lo, hi))
                elif lo == hi:
                    ivs.append((lo, lo))
        pts = [p for p in self.points if other.contains(p)]
        pts += [p for p in other.points if self.contains(p)]
        return BorelSet.make(ivs, pts, excluded_points=excl)

    def complement_within(self, lo: float, hi: float) -> "BorelSet":
        """Closure of the complement of this set inside [lo, hi]."""
        ivs = sorted(
            (max(a, lo), min(b, hi)) for a, b in self._all_intervals() if b > lo and a < hi
        )
        out = []
        cur = lo
        for a, b in ivs:
            if a > cur:
                out.append((cur, a))
            cur = max(cur, b)
        if cur < hi:
            out.append((cur, hi))
        # isolated points of this set are not in the complement
        excl = tuple(p for p in self.points if lo <= p <= hi)
        return BorelSet.make(out, excluded_points=excl)

    def difference(self, other: "BorelSet") -> "BorelSet":
        if other.is_empty:
            return self
        if not self.intervals and self.svc is None:
            pts = tuple(p for p in self.points if not other.contains(p))
            return BorelSet.make(points=pts)
        lo = min([iv[0] for iv in self._all_intervals()] + list(self.points))
        hi = max([iv[1] for iv in self._all_intervals()] + list(self.points))
        return self.intersect(other.complement_within(lo - 1.0, hi + 1.0))

    def without_points(self, points) -> "BorelSet":
        """Drop finitely many points from membership (measure unchanged)."""
        pts = tuple(p for p in self.points if p not in set(points))
        return BorelSet(
            self.intervals,
            pts,
            self.svc,
            tuple(sorted(set(self.excluded_points) | set(points))),
        )


EMPTY = BorelSet()


def svc_set(depth: int, base_lo: float = 0.0, base_hi: float = 1.0) -> BorelSet:
    """The depth-n Smith-Volterra-Cantor set as a BorelSet."""
    if not isinstance(depth, int) or depth < 1:
        raise ValueError("depth must be a positive integer")
    if depth > _MAX_SVC_DEPTH:
        raise ValueError(f"depth {depth} exceeds the supported maximum {_MAX_SVC_DEPTH}")
    return BorelSet(svc=SVCSet(depth, base_lo, base_hi))


def distance_to_set(x: float, s: BorelSet) -> float:
    """inf_{y in S} |x - y| for a nonempty set S."""
    return s.distance(x)
