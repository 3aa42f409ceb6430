"""Signed measures with a piecewise absolutely-continuous part and atoms.

The ac part is a catalog density restricted to a Borel carrier set, so
densities supported on a fat Cantor set stay exactly representable.  The
Jordan and Hahn decompositions are computed at the representation level.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .borel import EMPTY, BorelSet
from .piecewise import Affine, Const, PiecewiseFn, QUAD_ABS_TOL

__all__ = ["SignedMeasure", "ZERO_MEASURE", "jordan_hahn", "positive_set", "integrate"]

_ATOM_TOL = 0.0  # atoms with exactly zero mass are dropped


def _dedupe_atoms(atoms):
    acc: dict[float, float] = {}
    for loc, mass in atoms:
        acc[float(loc)] = acc.get(float(loc), 0.0) + float(mass)
    return tuple(sorted((l, m) for l, m in acc.items() if m != _ATOM_TOL))


@dataclass(frozen=True)
class SignedMeasure:
    """ac part ``density * 1_carrier dx`` plus finitely many signed atoms.

    ``carrier`` defaults to the density's whole interval of definition.
    """

    density: PiecewiseFn | None = None
    carrier: BorelSet | None = None
    atoms: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "atoms", _dedupe_atoms(self.atoms))
        if self.density is not None and self.carrier is None:
            lo, hi = self.density.lo, self.density.hi
            object.__setattr__(self, "carrier", BorelSet.make([(lo, hi)]))

    @property
    def is_zero(self) -> bool:
        if self.atoms:
            return False
        if self.density is None or self.carrier is None or self.carrier.is_empty:
            return True
        return self.density.zero_set().lebesgue() >= _carrier_length(self.carrier) - 1e-15

    def atom_mass(self, loc: float) -> float:
        for a, m in self.atoms:
            if a == loc:
                return m
        return 0.0

    def density_at(self, x):
        """Pointwise ac density (0 off the carrier)."""
        if self.density is None:
            return np.zeros_like(np.asarray(x, dtype=float)) if np.ndim(x) else 0.0
        vals = np.asarray(self.density(np.atleast_1d(np.asarray(x, dtype=float))))
        mask = self.carrier.contains(np.atleast_1d(np.asarray(x, dtype=float)))
        out = np.where(mask, vals, 0.0)
        return out if np.ndim(x) else float(out[0])

    def scaled(self, c: float) -> "SignedMeasure":
        return SignedMeasure(
            None if self.density is None else self.density.scaled(c),
            self.carrier,
            tuple((a, c * m) for a, m in self.atoms),
        )

    def restricted(self, region: BorelSet) -> "SignedMeasure":
        carrier = None if self.carrier is None else self.carrier.intersect(region)
        atoms = tuple((a, m) for a, m in self.atoms if region.contains(a))
        return SignedMeasure(self.density, carrier, atoms)

    def __call__(self, region: BorelSet) -> float:
        """Measure of the region."""
        return integrate(self, None, region)

    def total_variation(self, region: BorelSet) -> float:
        pos, neg, _, _ = jordan_hahn(self)
        return pos(region) + neg(region)


ZERO_MEASURE = SignedMeasure()


def _carrier_length(carrier: BorelSet) -> float:
    return carrier.lebesgue()


def positive_set(pw: PiecewiseFn, lo: float, hi: float) -> BorelSet:
    """Closure of {x in [lo, hi] : pw(x) > 0} as a BorelSet."""
    lo = max(lo, pw.lo)
    hi = min(hi, pw.hi)
    if hi <= lo:
        return EMPTY
    cuts = {lo, hi}
    for i, seg in enumerate(pw.segments):
        a = max(lo, pw.breakpoints[i])
        b = min(hi, pw.breakpoints[i + 1])
        if b <= a:
            continue
        cuts.add(a)
        cuts.add(b)
        cuts.update(seg.sign_changes(a, b))
        zs = seg.zero_set(a, b)
        for za, zb in zs.intervals:
            cuts.add(max(za, a))
            cuts.add(min(zb, b))
    cuts = sorted(c for c in cuts if lo <= c <= hi)
    pieces = []
    for a, b in zip(cuts, cuts[1:]):
        if float(pw(0.5 * (a + b))) > 0.0:
            pieces.append((a, b))
    out = BorelSet.make(pieces)
    # interval endpoints where the density vanishes belong to the zero set
    zero_edges = [
        p for iv in out.intervals for p in iv if float(pw(p)) == 0.0
    ]
    return out.without_points(zero_edges) if zero_edges else out


def jordan_hahn(m: SignedMeasure, domain: tuple[float, float] | None = None):
    """Return (positive part, negative part, N_plus, N_minus).

    Convention: zero-density regions go to N_minus.  N_minus is the
    complement of N_plus within the domain (density interval by default).
    """
    if m.density is not None:
        lo, hi = m.density.lo, m.density.hi
    else:
        locs = [a for a, _ in m.atoms] or [0.0]
        lo, hi = min(locs) - 1.0, max(locs) + 1.0
    if domain is not None:
        lo, hi = domain
    lo = max(lo, -1e12)
    hi = min(hi, 1e12)

    pos_atoms = tuple((a, mass) for a, mass in m.atoms if mass > 0)
    neg_atoms = tuple((a, -mass) for a, mass in m.atoms if mass < 0)
    if m.density is not None:
        dens_plus = positive_set(m.density, lo, hi).intersect(m.carrier)
        dens_minus = positive_set(m.density.scaled(-1.0), lo, hi).intersect(m.carrier)
    else:
        dens_plus = dens_minus = EMPTY
    n_plus = dens_plus.union(BorelSet.make(points=[a for a, _ in pos_atoms]))
    n_plus = n_plus.without_points([a for a, _ in neg_atoms])
    n_minus = n_plus.complement_within(lo, hi).without_points([a for a, _ in pos_atoms])
    n_minus = n_minus.union(BorelSet.make(points=[a for a, _ in neg_atoms]))

    pos = SignedMeasure(m.density, dens_plus, pos_atoms)
    neg = (
        SignedMeasure(
            None if m.density is None else m.density.scaled(-1.0), dens_minus, neg_atoms
        )
    )
    return pos, neg, n_plus, n_minus


def _product_integral(weight: PiecewiseFn | None, density: PiecewiseFn, lo, hi) -> float:
    """Integral of weight*density over [lo, hi] with closed forms where the
    catalog allows and quadrature otherwise."""
    if hi <= lo:
        return 0.0
    total = 0.0
    cuts = sorted(
        set([lo, hi])
        | {b for b in density.breakpoints if lo < b < hi}
        | ({b for b in weight.breakpoints if lo < b < hi} if weight is not None else set())
    )
    for a, b in zip(cuts, cuts[1:]):
        if weight is None:
            total += density.integrate(a, b)
            continue
        wseg = weight.segments[int(weight._seg_index(np.array([0.5 * (a + b)]))[0])]
        if isinstance(wseg, Const):
            total += density.integrate(a, b, c0=wseg.value)
        elif isinstance(wseg, Affine):
            total += density.integrate(a, b, c0=wseg.intercept, c1=wseg.slope)
        else:
            dseg = density.segments[
                int(density._seg_index(np.array([0.5 * (a + b)]))[0])
            ]
            if isinstance(dseg, Const):
                total += weight.integrate(a, b, c0=dseg.value)
            elif isinstance(dseg, Affine):
                total += weight.integrate(a, b, c0=dseg.intercept, c1=dseg.slope)
            else:
                val, err = quad(
                    lambda x: float(weight(x)) * float(density(x)),
                    a,
                    b,
                    epsabs=QUAD_ABS_TOL,
                    limit=500,
                )
                if not np.isfinite(val):
                    raise ArithmeticError(
                        f"non-integrable weight*density on [{a}, {b}]"
                    )
                total += val
    return total


def integrate(
    m: SignedMeasure, weight: PiecewiseFn | None, region: BorelSet | None = None
) -> float:
    """Integral of the weight (default 1) against the measure over the region
    (default: everything)."""
    total = 0.0
    if m.density is not None:
        support = m.carrier if region is None else m.carrier.intersect(region)
        for lo, hi in support._all_intervals():
            lo = max(lo, m.density.lo)
            hi = min(hi, m.density.hi)
            total += _product_integral(weight, m.density, lo, hi)
    for a, mass in m.atoms:
        if region is None or region.contains(a):
            w = 1.0 if weight is None else float(weight(a))
            total += w * mass
    return float(total)
