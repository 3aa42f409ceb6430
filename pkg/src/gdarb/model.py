"""Diffusion market models and canonicalization to natural scale.

A model arrives in original (Y) coordinates as a scale function, a speed
measure, boundary behaviors, a start point, and an interest rate.  All
downstream analysis runs in natural-scale (U = s(Y)) coordinates, produced
once by ``to_natural_scale``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .borel import EMPTY, BorelSet
from .measures import SignedMeasure
from .piecewise import (
    Affine,
    Const,
    Exponential,
    Log,
    PiecewiseFn,
    Poly,
    Power,
    Segment,
)

__all__ = [
    "BoundarySpec",
    "DiffusionSpec",
    "NaturalScaleModel",
    "ValidationReport",
    "CheckResult",
    "ModelError",
    "UnsupportedModelError",
    "to_natural_scale",
    "validate",
    "zero_set",
    "DEFAULT_WINDOW",
]

DEFAULT_WINDOW = 50.0
_KINK_TOL = 1e-12


class ModelError(ValueError):
    pass


class UnsupportedModelError(ModelError):
    pass


@dataclass(frozen=True)
class BoundarySpec:
    side: str  # "left" | "right"
    included: bool = False
    behavior: str | None = None  # "absorbing" | "reflecting" when included

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ModelError(f"unknown boundary side {self.side!r}")
        if self.included and self.behavior not in ("absorbing", "reflecting"):
            raise ModelError("an included endpoint needs absorbing or reflecting behavior")
        if not self.included and self.behavior is not None:
            raise ModelError("an open endpoint has no behavior")

    @property
    def is_absorbing(self) -> bool:
        return self.included and self.behavior == "absorbing"

    @property
    def is_reflecting(self) -> bool:
        return self.included and self.behavior == "reflecting"


@dataclass(frozen=True)
class DiffusionSpec:
    """Model in original coordinates: state space J, scale s, speed m."""

    lo: float
    hi: float
    left: BoundarySpec
    right: BoundarySpec
    scale: PiecewiseFn
    speed: SignedMeasure
    start: float
    rate: float


@dataclass(frozen=True)
class NaturalScaleModel:
    """Canonical model in U = s(Y) coordinates on E = s(J).

    ``q`` is the inverse scale; ``q_prime`` defaults to its per-segment
    derivative but may be supplied explicitly (needed when q' has an exact
    zero set, such as a distance-to-set segment, that the derivative of the
    stored q representation cannot expose).
    """

    lo: float
    hi: float
    left: BoundarySpec
    right: BoundarySpec
    q: PiecewiseFn
    m_ac: PiecewiseFn
    m_atoms: tuple[tuple[float, float], ...] = ()
    u0: float = 0.0
    rate: float = 0.0
    q_prime: PiecewiseFn | None = None
    q_second_ac: PiecewiseFn | None = None

    def __post_init__(self):
        if self.q_prime is None:
            object.__setattr__(self, "q_prime", self.q.derivative())

    # -- derived structure ----------------------------------------------

    @property
    def q_second_atoms(self) -> tuple[tuple[float, float], ...]:
        """Atoms of q'' at interior breakpoints: jumps of q'."""
        out = []
        for a in self.q_prime.breakpoints[1:-1]:
            if not (self.lo < a < self.hi):
                continue
            jump = float(self.q_prime(a)) - float(self._q_prime_left(a))
            if abs(jump) > _KINK_TOL:
                out.append((float(a), jump))
        return tuple(out)

    def _q_prime_left(self, a: float) -> float:
        idx = int(np.searchsorted(self.q_prime.breakpoints, a, side="left")) - 1
        idx = max(0, min(idx, len(self.q_prime.segments) - 1))
        return float(self.q_prime.segments[idx](a))

    def speed_measure(self) -> SignedMeasure:
        return SignedMeasure(density=self.m_ac, atoms=self.m_atoms)

    def m_atom_mass(self, u: float) -> float:
        for a, mass in self.m_atoms:
            if a == u:
                return mass
        return 0.0

    def y_value(self, u: float) -> float:
        """Original-coordinate value q(u), by limit at infinite endpoints."""
        return float(self.q.limit(u))

    def absorbing_boundaries(self) -> list[tuple[float, float]]:
        """(u location, original-coordinate value) per absorbing endpoint."""
        out = []
        if self.left.is_absorbing:
            out.append((self.lo, self.y_value(self.lo)))
        if self.right.is_absorbing:
            out.append((self.hi, self.y_value(self.hi)))
        return out

    def reflecting_boundaries(self) -> list[tuple[str, float]]:
        out = []
        if self.left.is_reflecting:
            out.append(("left", self.lo))
        if self.right.is_reflecting:
            out.append(("right", self.hi))
        return out

    def interior(self) -> tuple[float, float]:
        return self.lo, self.hi


# -- inversion of scale segments ---------------------------------------


def _invert_segment(seg: Segment, name: str) -> Segment:
    if isinstance(seg, Affine):
        if seg.slope == 0.0:
            raise ModelError(f"scale segment {name} is constant, not invertible")
        return Affine(-seg.intercept / seg.slope, 1.0 / seg.slope)
    if isinstance(seg, Poly):
        nz = [i for i, c in enumerate(seg.coeffs) if i > 0 and c != 0.0]
        if nz == [1]:
            return Affine(-seg.coeffs[0] / seg.coeffs[1], 1.0 / seg.coeffs[1])
        raise UnsupportedModelError(
            f"scale segment {name}: polynomial of degree > 1 has no catalog inverse"
        )
    if isinstance(seg, Power):
        a, c, p, b, side = seg.coeff, seg.center, seg.exponent, seg.offset, seg.side
        if a == 0.0 or p == 0.0:
            raise ModelError(f"scale segment {name} is constant, not invertible")
        return Power(
            side * abs(a) ** (-1.0 / p),
            b,
            1.0 / p,
            c,
            +1 if a > 0 else -1,
        )
    if isinstance(seg, Log):
        # s(x) = c*log(sc*(x - ce)) + off  =>  x = ce + exp((u-off)/c)/sc
        c, sc, ce, off = seg.coeff, seg.scale, seg.center, seg.offset
        if c == 0.0:
            raise ModelError(f"scale segment {name} is constant, not invertible")
        return Exponential(np.exp(-off / c) / sc, 1.0 / c, ce)
    if isinstance(seg, Exponential):
        A, B, C = seg.coeff, seg.rate, seg.offset
        if A == 0.0 or B == 0.0:
            raise ModelError(f"scale segment {name} is constant, not invertible")
        return Log(1.0 / B, 1.0 / A, C)
    raise UnsupportedModelError(
        f"scale segment {name}: kind {type(seg).__name__} is not invertible in the catalog"
    )


# -- speed density transform:  m_ac^U(u) = g(q(u)) * q'(u) --------------


def _compose_speed(qseg: Segment, gseg: Segment, name: str) -> Segment:
    qprime = qseg.derivative_segment()
    if isinstance(gseg, Const):
        return qprime.scaled(gseg.value)
    if isinstance(qseg, Affine):
        al, be = qseg.intercept, qseg.slope
        if isinstance(gseg, Affine):
            return Affine(gseg.intercept + gseg.slope * al, gseg.slope * be).scaled(be)
        if isinstance(gseg, Poly):
            comp = np.polynomial.Polynomial(gseg.coeffs)(
                np.polynomial.Polynomial((al, be))
            )
            return Poly(tuple(comp.coef)).scaled(be)
        if isinstance(gseg, Power):
            kg, cg, pg, og, sg = gseg.coeff, gseg.center, gseg.exponent, gseg.offset, gseg.side
            c_new = (cg - al) / be
            s_new = sg * (1 if be > 0 else -1)
            return Power(kg * abs(be) ** pg, c_new, pg, og, s_new).scaled(be)
        if isinstance(gseg, Exponential):
            A, B, C = gseg.coeff, gseg.rate, gseg.offset
            return Exponential(A * np.exp(B * al), B * be, C).scaled(be)
    if isinstance(qseg, Power) and isinstance(gseg, Power):
        kq, cq, pq, oq, sq = qseg.coeff, qseg.center, qseg.exponent, qseg.offset, qseg.side
        kg, cg, pg, og, sg = gseg.coeff, gseg.center, gseg.exponent, gseg.offset, gseg.side
        if cg == oq and og == 0.0 and sg * kq > 0:
            coeff = kg * (sg * kq) ** pg * kq * pq * sq
            return Power(coeff, cq, pq * pg + pq - 1.0, 0.0, sq)
    if isinstance(qseg, Exponential) and isinstance(gseg, Power):
        Aq, Bq, Cq = qseg.coeff, qseg.rate, qseg.offset
        kg, cg, pg, og, sg = gseg.coeff, gseg.center, gseg.exponent, gseg.offset, gseg.side
        if cg == Cq and og == 0.0 and sg * Aq > 0:
            return Exponential(kg * (sg * Aq) ** pg * Aq * Bq, Bq * (pg + 1.0), 0.0)
    raise UnsupportedModelError(
        f"speed density transform unsupported at {name}: "
        f"q segment {type(qseg).__name__} with density segment {type(gseg).__name__}"
    )


def to_natural_scale(spec: DiffusionSpec) -> NaturalScaleModel:
    """Canonicalize to U = s(Y) coordinates."""
    s = spec.scale
    x_bps = list(s.breakpoints)
    if x_bps[0] != spec.lo or x_bps[-1] != spec.hi:
        s = s.restricted(spec.lo, spec.hi) if (
            s.lo <= spec.lo and s.hi >= spec.hi
        ) else s
        x_bps = list(s.breakpoints)

    u_bps = [s.limit(x) for x in x_bps]
    if any(b >= c for b, c in zip(u_bps, u_bps[1:])):
        raise ModelError("scale is not strictly increasing across its breakpoints")

    q_segments = tuple(
        _invert_segment(seg, f"[{x_bps[i]}, {x_bps[i+1]}]")
        for i, seg in enumerate(s.segments)
    )
    q = PiecewiseFn(tuple(u_bps), q_segments)

    # refine speed density onto the scale partition, then transform per piece
    g = spec.speed.density
    if g is None:
        g = PiecewiseFn.constant(0.0, spec.lo, spec.hi)
    g = g.restricted(max(g.lo, spec.lo), min(g.hi, spec.hi))
    g = g.with_breakpoints([b for b in x_bps if np.isfinite(b)])
    m_bps = []
    m_segs = []
    for j, gseg in enumerate(g.segments):
        xa, xb = g.breakpoints[j], g.breakpoints[j + 1]
        mid = 0.5 * (xa + xb) if np.isfinite(xa) and np.isfinite(xb) else (
            xa + 1.0 if np.isfinite(xa) else xb - 1.0
        )
        qi = int(np.searchsorted(x_bps, mid, side="right")) - 1
        qi = max(0, min(qi, len(q_segments) - 1))
        name = f"[{xa}, {xb}]"
        m_segs.append(_compose_speed(q_segments[qi], gseg, name))
        m_bps.append(s.limit(xa))
    m_bps.append(s.limit(g.breakpoints[-1]))
    m_ac = PiecewiseFn(tuple(m_bps), tuple(m_segs))

    m_atoms = tuple((float(s.limit(y)), mass) for y, mass in spec.speed.atoms)

    return NaturalScaleModel(
        lo=u_bps[0],
        hi=u_bps[-1],
        left=spec.left,
        right=spec.right,
        q=q,
        m_ac=m_ac,
        m_atoms=m_atoms,
        u0=float(s(spec.start)),
        rate=spec.rate,
    )


# -- validation ---------------------------------------------------------


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float | None = None
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[CheckResult, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]


def _window(model: NaturalScaleModel, radius: float = DEFAULT_WINDOW):
    lo = model.lo if np.isfinite(model.lo) else model.u0 - radius
    hi = model.hi if np.isfinite(model.hi) else model.u0 + radius
    lo = max(lo, model.u0 - radius)
    hi = min(hi, model.u0 + radius)
    return lo, hi


def validate(model: NaturalScaleModel, n_samples: int = 1000) -> ValidationReport:
    checks = []
    lo, hi = _window(model)
    # probe away from open endpoints, where speed densities may blow up
    pad_l = 1e-9 if model.left.included else 0.05 * (hi - lo)
    pad_r = 1e-9 if model.right.included else 0.05 * (hi - lo)
    lo, hi = lo + pad_l, hi - pad_r
    pad = 1e-9 * max(1.0, hi - lo)
    xs = np.linspace(lo + pad, hi - pad, n_samples)

    qv = np.asarray(model.q(xs), dtype=float)
    nondec = bool(np.all(np.diff(qv) >= -1e-12))
    strict = bool(qv[-1] > qv[0])
    checks.append(
        CheckResult(
            "q-nondecreasing", nondec, float(np.min(np.diff(qv))), "sampled increments"
        )
    )
    checks.append(CheckResult("q-increasing-overall", strict, qv[-1] - qv[0]))

    qp = np.asarray(model.q_prime(xs), dtype=float)
    bp_vals = [
        float(model.q_prime(b))
        for b in model.q_prime.breakpoints
        if np.isfinite(b) and lo <= b <= hi
    ]
    qp_ok = bool(np.all(qp >= -1e-12)) and all(v >= -1e-12 for v in bp_vals)
    checks.append(CheckResult("q-prime-nonnegative", qp_ok, float(np.min(qp))))

    mv = np.asarray(model.m_ac(xs), dtype=float)
    m_ok = bool(np.all(mv >= -1e-12)) and all(m > 0 for _, m in model.m_atoms)
    checks.append(CheckResult("speed-nonnegative", m_ok, float(np.min(mv))))

    # every compact interior interval carries positive finite mass
    speed = model.speed_measure()
    masses = []
    for a, b in zip(np.linspace(lo, hi, 6)[:-1], np.linspace(lo, hi, 6)[1:]):
        masses.append(speed(BorelSet.make([(a + pad, b - pad)])))
    pos_ok = all(np.isfinite(m) and m > 0 for m in masses)
    checks.append(
        CheckResult("speed-positive-on-compacts", pos_ok, float(min(masses)))
    )

    # start point placement
    interior = model.lo < model.u0 < model.hi
    at_reflecting = (model.u0 == model.lo and model.left.is_reflecting) or (
        model.u0 == model.hi and model.right.is_reflecting
    )
    checks.append(CheckResult("start-point-admissible", interior or at_reflecting))

    # boundary regularity of |q''| near included endpoints
    for side, e, bspec in (("left", model.lo, model.left), ("right", model.hi, model.right)):
        if not bspec.included:
            continue
        z = e + 1.0 if side == "left" else e - 1.0
        z = min(max(z, lo), hi)
        a, b = sorted((e, z))
        total = 0.0
        if model.q_second_ac is not None:
            w = (
                Affine(-a, 1.0) if side == "left" else Affine(b, -1.0)
            )  # distance to the endpoint
            absd = _abs_integral(model.q_second_ac, a, b, w if bspec.is_absorbing else None)
            total += absd
        total += sum(
            (abs(loc - e) if bspec.is_absorbing else 1.0) * abs(mass)
            for loc, mass in model.q_second_atoms
            if a <= loc <= b
        )
        label = "absorbing-boundary-integrability" if bspec.is_absorbing else "reflecting-boundary-finiteness"
        checks.append(CheckResult(f"{label}-{side}", bool(np.isfinite(total)), total))

    # kink bookkeeping consistency
    kink_ok = all(
        abs((float(model.q_prime(a)) - model._q_prime_left(a)) - mass) <= 1e-10
        for a, mass in model.q_second_atoms
    )
    checks.append(CheckResult("q-second-atoms-match-kinks", kink_ok))

    return ValidationReport(tuple(checks))


def _abs_integral(pw: PiecewiseFn, a: float, b: float, weight=None) -> float:
    """Integral of |pw| (optionally times an affine weight) over [a, b]."""
    cuts = sorted(set([a, b]) | {c for c in pw.sign_changes() if a < c < b})
    total = 0.0
    for x0, x1 in zip(cuts, cuts[1:]):
        sgn = 1.0 if float(pw(0.5 * (x0 + x1))) >= 0 else -1.0
        if weight is None:
            total += sgn * pw.integrate(x0, x1)
        else:
            total += sgn * pw.integrate(x0, x1, c0=weight.intercept, c1=weight.slope)
    return abs(total) if total < 0 else total


def zero_set(model: NaturalScaleModel, radius: float = DEFAULT_WINDOW) -> BorelSet:
    """Exact {u in the open interior : q'_+(u) = 0}."""
    zs = model.q_prime.zero_set()
    lo, hi = _window(model, radius)
    zs = zs.intersect(BorelSet.make([(lo, hi)]))
    endpoints = [e for e in (model.lo, model.hi) if np.isfinite(e)]
    return zs.without_points(endpoints)
