"""Piecewise functions built from a closed catalog of segment kinds.

Each segment supports point evaluation, one-sided derivatives, exact
integration against affine weights where a closed form exists (adaptive
quadrature fallback otherwise), sign-change location, and zero sets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .borel import EMPTY, BorelSet

__all__ = [
    "Segment",
    "Const",
    "Affine",
    "Poly",
    "Power",
    "Exponential",
    "Log",
    "DistToSet",
    "PiecewiseFn",
    "QUAD_ABS_TOL",
]

QUAD_ABS_TOL = 1e-10
_ROOT_TOL = 1e-12


def _quad_affine(f, lo, hi, c0, c1):
    val, _ = quad(lambda x: (c0 + c1 * x) * f(x), lo, hi, epsabs=QUAD_ABS_TOL, limit=500)
    return val


class Segment:
    """Base class; subclasses are immutable value objects."""

    def __call__(self, x):
        raise NotImplementedError

    def deriv(self, x, side: int = +1):
        raise NotImplementedError

    def deriv2(self, x):
        """Pointwise second derivative (a.e. density of the second-derivative
        measure of this segment)."""
        raise NotImplementedError

    def integrate_affine(self, lo, hi, c0=1.0, c1=0.0):
        """Integral of (c0 + c1*x) * f(x) over [lo, hi]."""
        return _quad_affine(self, lo, hi, c0, c1)

    def scaled(self, c: float) -> "Segment":
        raise NotImplementedError

    def sign_changes(self, lo, hi) -> list[float]:
        """Interior points where f crosses zero, found to 1e-12."""
        return _bisect_sign_changes(self, lo, hi)

    def zero_set(self, lo, hi) -> BorelSet:
        """Exact {f = 0} on [lo, hi]; raises if no closed form exists."""
        raise NotImplementedError(f"{type(self).__name__} has no closed-form zero set")

    def nondecreasing_on(self, lo, hi):
        """True/False if a certificate exists, None when undecidable."""
        return None

    def derivative_segment(self) -> "Segment":
        raise NotImplementedError(f"{type(self).__name__} has no closed-form derivative")

    def limit(self, x: float) -> float:
        """Limit of f at x (x may be +-inf)."""
        if np.isfinite(x):
            return float(self(x))
        raise NotImplementedError


def _bisect_sign_changes(f, lo, hi, n=512):
    if not np.isfinite(lo) or not np.isfinite(hi):
        lo = max(lo, -1e6)
        hi = min(hi, 1e6)
    xs = np.linspace(lo, hi, n + 1)
    vals = np.asarray(f(xs), dtype=float)
    roots = []
    for i in range(n):
        a, b = xs[i], xs[i + 1]
        fa, fb = vals[i], vals[i + 1]
        if fa == 0.0 or fa * fb >= 0.0:
            continue
        while b - a > _ROOT_TOL:
            m = 0.5 * (a + b)
            fm = float(f(m))
            if fm == 0.0:
                a = b = m
            elif fa * fm < 0.0:
                b = m
            else:
                a, fa = m, fm
        roots.append(0.5 * (a + b))
    return roots


@dataclass(frozen=True)
class Const(Segment):
    value: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, float(self.value))
        return out if out.shape else float(self.value)

    def deriv(self, x, side=+1):
        return np.zeros_like(np.asarray(x, dtype=float)) if np.ndim(x) else 0.0

    def deriv2(self, x):
        return self.deriv(x)

    def integrate_affine(self, lo, hi, c0=1.0, c1=0.0):
        return self.value * (c0 * (hi - lo) + 0.5 * c1 * (hi * hi - lo * lo))

    def scaled(self, c):
        return Const(self.value * c)

    def sign_changes(self, lo, hi):
        return []

    def zero_set(self, lo, hi):
        return BorelSet.make([(lo, hi)]) if self.value == 0.0 else EMPTY

    def nondecreasing_on(self, lo, hi):
        return True

    def derivative_segment(self):
        return Const(0.0)

    def limit(self, x):
        return float(self.value)


@dataclass(frozen=True)
class Affine(Segment):
    intercept: float
    slope: float

    def __call__(self, x):
        return self.intercept + self.slope * np.asarray(x, dtype=float)

    def deriv(self, x, side=+1):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, float(self.slope))
        return out if out.shape else float(self.slope)

    def deriv2(self, x):
        return Const(0.0)(x)

    def integrate_affine(self, lo, hi, c0=1.0, c1=0.0):
        return Poly((self.intercept, self.slope)).integrate_affine(lo, hi, c0, c1)

    def scaled(self, c):
        return Affine(self.intercept * c, self.slope * c)

    def sign_changes(self, lo, hi):
        if self.slope == 0.0:
            return []
        root = -self.intercept / self.slope
        return [root] if lo < root < hi else []

    def zero_set(self, lo, hi):
        if self.slope == 0.0:
            return BorelSet.make([(lo, hi)]) if self.intercept == 0.0 else EMPTY
        root = -self.intercept / self.slope
        return BorelSet.make(points=[root]) if lo <= root <= hi else EMPTY

    def nondecreasing_on(self, lo, hi):
        return self.slope >= 0.0

    def derivative_segment(self):
        return Const(self.slope)

    def limit(self, x):
        if np.isfinite(x):
            return float(self(x))
        if self.slope == 0.0:
            return self.intercept
        return float(np.sign(self.slope) * x)


@dataclass(frozen=True)
class Poly(Segment):
    """Polynomial with coefficients in ascending order."""

    coeffs: tuple[float, ...]

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), self.coeffs)

    def deriv(self, x, side=+1):
        d = np.polynomial.polynomial.polyder(self.coeffs)
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), d)

    def deriv2(self, x):
        d2 = np.polynomial.polynomial.polyder(self.coeffs, 2)
        return np.polynomial.polynomial.polyval(np.asarray(x, dtype=float), d2)

    def integrate_affine(self, lo, hi, c0=1.0, c1=0.0):
        prod = np.polynomial.polynomial.polymul(self.coeffs, (c0, c1))
        anti = np.polynomial.polynomial.polyint(prod)
        pv = np.polynomial.polynomial.polyval
        return float(pv(hi, anti) - pv(lo, anti))

    def scaled(self, c):
        return Poly(tuple(c * a for a in self.coeffs))

    def sign_changes(self, lo, hi):
        roots = np.polynomial.polynomial.polyroots(self.coeffs)
        out = []
        for rt in roots:
            if abs(rt.imag) < 1e-12 and lo < rt.real < hi:
                out.append(float(rt.real))
        return sorted(set(out))

    def zero_set(self, lo, hi):
        if all(a == 0.0 for a in self.coeffs):
            return BorelSet.make([(lo, hi)])
        pts = [
            float(rt.real)
            for rt in np.polynomial.polynomial.polyroots(self.coeffs)
            if abs(rt.imag) < 1e-12 and lo <= rt.real <= hi
        ]
        return BorelSet.make(points=pts)

    def derivative_segment(self):
        return Poly(tuple(np.polynomial.polynomial.polyder(self.coeffs)))

    def limit(self, x):
        if np.isfinite(x):
            return float(self(x))
        lead = next((i for i in range(len(self.coeffs) - 1, -1, -1) if self.coeffs[i] != 0.0), 0)
        if lead == 0:
            return float(self.coeffs[0]) if self.coeffs else 0.0
        return float(np.sign(self.coeffs[lead]) * (np.sign(x) ** lead) * np.inf)


@dataclass(frozen=True)
class Power(Segment):
    """f(x) = coeff * (side*(x - center))**exponent + offset.

    The segment's domain must satisfy side*(x - center) >= 0.
    """

    coeff: float
    center: float
    exponent: float
    offset: float = 0.0
    side: int = +1

    def _t(self, x):
        return self.side * (np.asarray(x, dtype=float) - self.center)

    def __call__(self, x):
        t = self._t(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = self.coeff * np.power(np.maximum(t, 0.0), self.exponent) + self.offset
        return val

    def deriv(self, x, side=+1):
        t = self._t(x)
        p = self.exponent
        with np.errstate(divide="ignore", invalid="ignore"):
            d = self.coeff * p * np.power(np.maximum(t, 0.0), p - 1.0) * self.side
        if p > 1.0:
            d = np.where(t == 0.0, 0.0, d)
        return d

    def deriv2(self, x):
        t = self._t(x)
        p = self.exponent
        with np.errstate(divide="ignore", invalid="ignore"):
            d = self.coeff * p * (p - 1.0) * np.power(np.maximum(t, 0.0), p - 2.0)
        if p > 2.0:
            d = np.where(t == 0.0, 0.0, d)
        return d

    def integrate_affine(self, lo, hi, c0=1.0, c1=0.0):
        # substitute t = side*(x - center); x = center + side*t
        s, c, p, a, b = self.side, self.center, self.exponent, self.coeff, self.offset
        t0, t1 = sorted((s * (lo - c), s * (hi - c)))
        if t0 < -1e-12:
            raise ValueError("power segment evaluated outside its half-line")
        t0 = max(t0, 0.0)
        A = c0 + c1 * c
        B = c1 * s
        if p in (-1.0, -2.0):
            return _quad_affine(self, lo, hi, c0, c1)

        def anti(t):
            # integral of (A + B t)(a t^p + b) dt
            if t == 0.0 and p < 0.0:
                if p + 1.0 <= 0.0 and (A != 0.0 or a != 0.0):
                    return -np.inf if a * A > 0 else np.inf
            val = A * a * t ** (p + 1.0) / (p + 1.0)
            val += B * a * t ** (p + 2.0) / (p + 2.0) if t > 0.0 else 0.0
            val += A * b * t + 0.5 * B * b * t * t
            return val

        if t0 == 0.0 and p <= -1.0:
            raise ValueError("non-integrable power singularity")
        # sorting the limits already absorbs the Jacobian sign of t = s*(x-c)
        return float(anti(t1) - anti(t0))

    def scaled(self, c):
        return Power(self.coeff * c, self.center, self.exponent, self.offset * c, self.side)

    def sign_changes(self, lo, hi):
        if self.coeff == 0.0 or self.offset == 0.0:
            return []
        ratio = -self.offset / self.coeff
        if ratio <= 0.0:
            return []
        t = ratio ** (1.0 / self.exponent)
        x = self.center + self.side * t
        return [x] if lo < x < hi else []

    def zero_set(self, lo, hi):
        pts = []
        if self.offset == 0.0:
            if self.coeff == 0.0:
                return BorelSet.make([(lo, hi)])
            if self.exponent > 0.0 and lo <= self.center <= hi:
                pts.append(self.center)
        else:
            pts = self.sign_changes(lo - 1e-300, hi + 1e-300)
            pts = [p for p in pts if lo <= p <= hi]
        return BorelSet.make(points=pts)

    def nondecreasing_on(self, lo, hi):
        if self.coeff == 0.0:
            return True
        return self.coeff * self.exponent * self.side >= 0.0

    def derivative_segment(self):
        return Power(
            self.coeff * self.exponent * self.side,
            self.center,
            self.exponent - 1.0,
            0.0,
            self.side,
        )

    def limit(self, x):
        if np.isfinite(x):
            t = self.side * (x - self.center)
            if t < 0.0:
                raise ValueError("limit outside segment half-line")
            if t == 0.0 and self.exponent < 0.0:
                return float(np.sign(self.coeff) * np.inf)
            return float(self(x))
        if self.side * np.sign(x) < 0:
            raise ValueError("limit outside segment half-line")
        if self.exponent > 0.0:
            return float(np.sign(self.coeff) * np.inf) if self.coeff != 0.0 else self.offset
        if self.exponent == 0.0:
            return self.coeff + self.offset
        return float(self.offset)


@dataclass(frozen=True)
class Exponential(Segment):
    """f(x) = coeff * exp(rate * x) + offset."""

    coeff: float
    rate: float
    offset: float = 0.0

    def __call__(self, x):
        return self.coeff * np.exp(self.rate * np.asarray(x, dtype=float)) + self.offset

    def deriv(self, x, side=+1):
        return self.coeff * self.rate * np.exp(self.rate * np.asarray(x, dtype=float))

    def deriv2(self, x):
        return self.coeff * self.rate**2 * np.exp(self.rate * np.asarray(x, dtype=float))

    def integrate_affine(self, lo, hi, c0=1.0, c1=0.0):
        a, b, c = self.coeff, self.rate, self.offset
        if b == 0.0:
            return Const(a + c).integrate_affine(lo, hi, c0, c1)

        def anti(x):
            e = np.exp(b * x)
            val = a * e * (c0 / b + c1 * (x / b - 1.0 / (b * b)))
            val += c * (c0 * x + 0.5 * c1 * x * x)
            return val

        return float(anti(hi) - anti(lo))

    def scaled(self, c):
        return Exponential(self.coeff * c, self.rate, self.offset * c)

    def sign_changes(self, lo, hi):
        if self.coeff == 0.0 or self.offset == 0.0 or self.rate == 0.0:
            return []
        ratio = -self.offset / self.coeff
        if ratio <= 0.0:
            return []
        x = np.log(ratio) / self.rate
        return [float(x)] if lo < x < hi else []

    def zero_set(self, lo, hi):
        if self.coeff == 0.0 and self.offset == 0.0:
            return BorelSet.make([(lo, hi)])
        return BorelSet.make(points=[p for p in self.sign_changes(lo, hi)])

    def nondecreasing_on(self, lo, hi):
        return self.coeff * self.rate >= 0.0

    def derivative_segment(self):
        return Exponential(self.coeff * self.rate, self.rate, 0.0)

    def limit(self, x):
        if np.isfinite(x):
            return float(self(x))
        if self.rate * np.sign(x) > 0:
            return float(np.sign(self.coeff) * np.inf) if self.coeff != 0.0 else self.offset
        return float(self.offset)


@dataclass(frozen=True)
class Log(Segment):
    """f(x) = coeff * log(scale * (x - center)) + offset."""

    coeff: float
    scale: float
    center: float
    offset: float = 0.0

    def __call__(self, x):
        t = self.scale * (np.asarray(x, dtype=float) - self.center)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.coeff * np.log(t) + self.offset

    def deriv(self, x, side=+1):
        return self.coeff / (np.asarray(x, dtype=float) - self.center)

    def deriv2(self, x):
        return -self.coeff / (np.asarray(x, dtype=float) - self.center) ** 2

    def scaled(self, c):
        return Log(self.coeff * c, self.scale, self.center, self.offset * c)

    def sign_changes(self, lo, hi):
        if self.coeff == 0.0:
            return []
        x = self.center + np.exp(-self.offset / self.coeff) / self.scale
        return [float(x)] if lo < x < hi else []

    def zero_set(self, lo, hi):
        return BorelSet.make(points=self.sign_changes(lo, hi))

    def nondecreasing_on(self, lo, hi):
        return self.coeff * self.scale >= 0.0 if self.scale > 0 else None

    def derivative_segment(self):
        return Power(self.coeff, self.center, -1.0, 0.0, +1)

    def limit(self, x):
        if np.isfinite(x):
            if x == self.center:
                return float(-np.sign(self.coeff) * np.inf)
            return float(self(x))
        return float(np.sign(self.coeff) * np.inf) if self.coeff != 0.0 else self.offset


@dataclass(frozen=True)
class DistToSet(Segment):
    """f(x) = scale * dist(x, F) for a nonempty BorelSet F."""

    target: BorelSet
    scale: float = 1.0

    def _pieces(self, lo, hi):
        """Breakpoints and linear pieces of the distance function on [lo, hi]."""
        ivs = sorted(self.target._all_intervals() + [(p, p) for p in self.target.points])
        bps = set([lo, hi])
        for a, b in ivs:
            for p in (a, b):
                if lo < p < hi:
                    bps.add(p)
        # gap midpoints are kinks too
        for (a0, b0), (a1, b1) in zip(ivs, ivs[1:]):
            m = 0.5 * (b0 + a1)
            if lo < m < hi:
                bps.add(m)
        return sorted(bps)

    def __call__(self, x):
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.array([self.target.distance(v) for v in arr]) * self.scale
        return out.reshape(np.shape(x)) if np.ndim(x) else float(out[0])

    def deriv(self, x, side=+1):
        eps = 1e-9
        x = np.asarray(x, dtype=float)
        return (self(x + side * eps) - self(x)) / (side * eps)

    def deriv2(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return np.zeros_like(x) if x.shape else 0.0

    def integrate_affine(self, lo, hi, c0=1.0, c1=0.0):
        total = 0.0
        bps = self._pieces(lo, hi)
        for a, b in zip(bps, bps[1:]):
            m = 0.5 * (a + b)
            fm = self.target.distance(m) * self.scale
            fa = self.target.distance(a) * self.scale
            slope = 0.0 if b == a else (fm - fa) / (m - a)
            seg = Affine(fa - slope * a, slope)
            total += seg.integrate_affine(a, b, c0, c1)
        return total

    def scaled(self, c):
        return DistToSet(self.target, self.scale * c)

    def sign_changes(self, lo, hi):
        return []

    def zero_set(self, lo, hi):
        window = BorelSet.make([(lo, hi)])
        return self.target.intersect(window)

    def limit(self, x):
        if np.isfinite(x):
            return float(self.target.distance(x) * self.scale)
        return float(np.inf * np.sign(self.scale)) if self.scale != 0.0 else 0.0


def _fix_scalar(val, x):
    if np.ndim(x) == 0:
        arr = np.asarray(val)
        return float(arr) if arr.shape == () else float(arr.reshape(-1)[0])
    return np.asarray(val, dtype=float).reshape(np.shape(x))


@dataclass(frozen=True)
class PiecewiseFn:
    """A function assembled from catalog segments on consecutive intervals.

    ``breakpoints`` has one more entry than ``segments`` and may start/end
    with +-inf.  Evaluation at an interior breakpoint uses the segment to
    its right.
    """

    breakpoints: tuple[float, ...]
    segments: tuple[Segment, ...]

    def __post_init__(self):
        if len(self.breakpoints) != len(self.segments) + 1:
            raise ValueError("need len(breakpoints) == len(segments) + 1")
        if any(a >= b for a, b in zip(self.breakpoints, self.breakpoints[1:])):
            raise ValueError("breakpoints must be strictly increasing")

    @staticmethod
    def constant(value, lo=-np.inf, hi=np.inf):
        return PiecewiseFn((lo, hi), (Const(value),))

    @staticmethod
    def from_segment(seg, lo, hi):
        return PiecewiseFn((lo, hi), (seg,))

    @property
    def lo(self):
        return self.breakpoints[0]

    @property
    def hi(self):
        return self.breakpoints[-1]

    def _seg_index(self, x):
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        return np.clip(idx, 0, len(self.segments) - 1)

    def _apply(self, x, fn):
        if np.ndim(x) == 0:
            xf = float(x)
            seg = self.segments[int(self._seg_index(xf))]
            return float(np.asarray(fn(seg, xf), dtype=float).reshape(-1)[0])
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        idx = self._seg_index(x_arr)
        out = np.empty_like(x_arr)
        for i in np.unique(idx):
            mask = idx == i
            out[mask] = np.asarray(fn(self.segments[i], x_arr[mask]), dtype=float)
        return _fix_scalar(out, x)

    def __call__(self, x):
        return self._apply(x, lambda seg, v: seg(v))

    def deriv(self, x, side: int = +1):
        """One-sided derivative; at interior breakpoints the requested side's
        segment is used."""
        x_arr = np.atleast_1d(np.asarray(x, dtype=float))
        idx = self._seg_index(x_arr)
        if side < 0:
            on_bp = np.isin(x_arr, self.breakpoints[1:-1])
            idx = np.where(on_bp, np.maximum(idx - 1, 0), idx)
        out = np.empty_like(x_arr)
        for i in np.unique(idx):
            mask = idx == i
            out[mask] = np.asarray(self.segments[i].deriv(x_arr[mask], side), dtype=float)
        return _fix_scalar(out, x)

    def deriv2(self, x):
        return self._apply(x, lambda seg, v: seg.deriv2(v))

    def integrate(self, lo, hi, c0=1.0, c1=0.0):
        """Integral of (c0 + c1*x) f(x) over [lo, hi] (lo <= hi)."""
        if hi < lo:
            return -self.integrate(hi, lo, c0, c1)
        lo = max(lo, self.lo)
        hi = min(hi, self.hi)
        if hi <= lo:
            return 0.0
        total = 0.0
        for i, seg in enumerate(self.segments):
            a = max(lo, self.breakpoints[i])
            b = min(hi, self.breakpoints[i + 1])
            if b > a:
                total += seg.integrate_affine(a, b, c0, c1)
        return float(total)

    def scaled(self, c):
        return PiecewiseFn(self.breakpoints, tuple(s.scaled(c) for s in self.segments))

    def restricted(self, lo, hi):
        bps = [lo]
        segs = []
        for i, seg in enumerate(self.segments):
            a, b = self.breakpoints[i], self.breakpoints[i + 1]
            if b <= lo or a >= hi:
                continue
            segs.append(seg)
            bps.append(min(b, hi))
        bps[-1] = hi
        return PiecewiseFn(tuple(bps), tuple(segs))

    def with_breakpoints(self, extra) -> "PiecewiseFn":
        """Refine the partition by inserting breakpoints (same function)."""
        pts = sorted(set(self.breakpoints) | {p for p in extra if self.lo < p < self.hi})
        segs = []
        for a in pts[:-1]:
            segs.append(self.segments[int(self._seg_index(np.array([a]))[0])])
        return PiecewiseFn(tuple(pts), tuple(segs))

    def zero_set(self) -> BorelSet:
        out = EMPTY
        for i, seg in enumerate(self.segments):
            a, b = self.breakpoints[i], self.breakpoints[i + 1]
            out = out.union(seg.zero_set(a, b))
        return out

    def sign_changes(self) -> list[float]:
        pts = []
        for i, seg in enumerate(self.segments):
            pts.extend(seg.sign_changes(self.breakpoints[i], self.breakpoints[i + 1]))
        return sorted(set(pts))

    def derivative(self) -> "PiecewiseFn":
        return PiecewiseFn(
            self.breakpoints, tuple(s.derivative_segment() for s in self.segments)
        )

    def limit(self, x) -> float:
        if x <= self.lo:
            return self.segments[0].limit(x if x == self.lo else x)
        if x >= self.hi:
            return self.segments[-1].limit(x)
        return float(self(x))

    def nondecreasing_on(self, lo=None, hi=None, samples=1000):
        """Certificate-or-sampling monotonicity check (non-strict)."""
        lo = self.lo if lo is None else lo
        hi = self.hi if hi is None else hi
        for i, seg in enumerate(self.segments):
            a = max(lo, self.breakpoints[i])
            b = min(hi, self.breakpoints[i + 1])
            if b <= a:
                continue
            cert = seg.nondecreasing_on(a, b)
            if cert is False:
                return False
            if cert is None:
                aa = max(a, -1e6)
                bb = min(b, 1e6)
                xs = np.linspace(aa, bb, samples)
                if np.any(np.diff(np.asarray(seg(xs), dtype=float)) < -1e-12):
                    return False
        # continuity across breakpoints is the caller's concern
        return True
