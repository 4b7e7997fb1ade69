"""Per-feature feasible intervals extracted from a decision path.

An input traverses the same path as the original sample exactly when every
tested feature lies in its interval; intervals are half-open (lo, hi] to
mirror the left branch's `value <= threshold` test.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

from .tree import DecisionPath
from ._util import round_sig

NEG_INF = float("-inf")
POS_INF = float("inf")


@dataclass(frozen=True)
class FeatureInterval:
    feature_index: int
    lo: float = NEG_INF  # exclusive
    hi: float = POS_INF  # inclusive

    def __post_init__(self):
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError("interval bounds must not be NaN")
        if not self.lo < self.hi:
            raise ValueError("empty interval: lo must be < hi")

    def contains(self, value: float) -> bool:
        return self.lo < value <= self.hi


@dataclass(frozen=True)
class ConstraintSet:
    intervals: dict[int, FeatureInterval]  # feature index -> interval
    path_nodes: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "path_nodes": list(self.path_nodes),
            "intervals": [
                {
                    "feature_index": iv.feature_index,
                    "lo": None if iv.lo == NEG_INF else iv.lo,
                    "hi": None if iv.hi == POS_INF else iv.hi,
                }
                for _, iv in sorted(self.intervals.items())
            ],
        }

    @staticmethod
    def from_dict(doc: dict) -> "ConstraintSet":
        intervals = {}
        for iv in doc["intervals"]:
            j = iv["feature_index"]
            lo = NEG_INF if iv["lo"] is None else float(iv["lo"])
            hi = POS_INF if iv["hi"] is None else float(iv["hi"])
            intervals[j] = FeatureInterval(j, lo, hi)
        return ConstraintSet(intervals, tuple(doc["path_nodes"]))


def extract_constraints(path: DecisionPath) -> ConstraintSet:
    """Fold the path's threshold tests into one interval per tested feature."""
    bounds: dict[int, tuple[float, float]] = {}
    for step in path.steps:
        lo, hi = bounds.get(step.feature_index, (NEG_INF, POS_INF))
        if step.branch == "left":
            hi = min(hi, step.threshold)
        else:
            lo = max(lo, step.threshold)
        if lo >= hi:
            raise ValueError("inconsistent path: empty feature interval")
        bounds[step.feature_index] = (lo, hi)
    intervals = {j: FeatureInterval(j, lo, hi) for j, (lo, hi) in bounds.items()}
    return ConstraintSet(intervals, path.nodes)


def satisfies(cs: ConstraintSet, values) -> bool:
    """True iff every tested feature of `values` lies in its interval."""
    vals = [float(v) for v in values]
    if not all(math.isfinite(v) for v in vals):
        raise ValueError("input contains non-finite values")
    return all(iv.contains(vals[j]) for j, iv in cs.intervals.items())


@dataclass(frozen=True)
class Probe:
    inside: float
    below: float | None = None
    above: float | None = None


def _side_offset(bound: float, dmin: float, dmax: float, rho: float) -> float:
    return max(sys.float_info.epsilon * abs(bound), rho * (dmax - dmin))


def _round_on_side(raw: float, ok, nudge: float, max_tries: int = 60) -> float:
    # keep the displayed 4-significant-digit value on the intended side of the bound
    v = round_sig(raw)
    tries = 0
    while not ok(v) and tries < max_tries:
        raw += nudge
        v = round_sig(raw)
        tries += 1
    if not ok(v):
        raise ValueError("could not place probe value on the intended side")
    return v


def feasible_probe(
    cs: ConstraintSet,
    feature_index: int,
    domain: tuple[float, float],
    rho: float = 0.1,
) -> Probe:
    """Representative values inside / just below / just above a feature's interval.

    Offsets scale with the observed feature domain (rho fraction of its width)
    and clamp back into the domain where an in-domain exterior exists. Values
    are rounded to 4 significant digits and re-checked against the bound so
    the number shown to an evaluator is the number the oracle actually uses.
    Untested features get the domain midpoint with no exterior probes.
    """
    dmin, dmax = float(domain[0]), float(domain[1])
    if not (math.isfinite(dmin) and math.isfinite(dmax)) or dmin > dmax:
        raise ValueError("invalid feature domain")
    iv = cs.intervals.get(feature_index)
    if iv is None:
        mid = (dmin + dmax) / 2.0
        return Probe(inside=round_sig(mid))

    lo, hi = iv.lo, iv.hi
    lo_eff = max(lo, dmin)
    hi_eff = min(hi, dmax)
    if lo_eff > hi_eff or (lo_eff == hi_eff and not lo_eff > lo):
        raise ValueError("interval does not intersect the feature domain")
    step = rho * (dmax - dmin) / 10.0 or 1e-9

    def ok_inside(v: float) -> bool:
        return lo < v <= hi and dmin <= v <= dmax

    raw_inside = (lo_eff + hi_eff) / 2.0 if lo_eff < hi_eff else hi_eff
    v = round_sig(raw_inside)
    if ok_inside(v):
        inside = v
    else:
        nudge = step if (v <= lo or v < dmin) else -step
        inside = _round_on_side(raw_inside, ok_inside, nudge)

    below = None
    if lo > NEG_INF:
        delta = _side_offset(lo, dmin, dmax, rho)
        raw = lo - delta
        if dmin <= lo:
            raw = max(raw, dmin)
        below = _round_on_side(raw, lambda v: v <= lo, -delta / 10.0)

    above = None
    if hi < POS_INF:
        delta = _side_offset(hi, dmin, dmax, rho)
        raw = hi + delta
        if dmax > hi:
            raw = min(raw, dmax)
        above = _round_on_side(raw, lambda v: v > hi, delta / 10.0)

    return Probe(inside=inside, below=below, above=above)
