"""Mamdani fuzzy controller that picks how many disjoint routes a source should use.

Inputs: hop count of the shortest route (HC), minimum residual energy along it
(RE, joules), and the heaviest path-participation count on it (NPP).  Output:
the number of multiple pathways (NMP), an integer in [1, 5].

The rule base is seeded with the 16 published (HC, RE, NPP) -> NMP rules and
completed to all 60 antecedent combinations by a deterministic, conservative
monotone extension (fewer paths preferred when the published rules leave slack).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

HC_LABELS = ("S", "M", "L", "VL")            # few hops -> many hops
RE_LABELS = ("VS", "S", "M", "L", "VL")      # drained -> full battery
NPP_LABELS = ("L", "M", "H")                 # light -> heavy participation
NMP_LABELS = ("VS", "S", "M", "L", "VL")     # 1 path -> 5 paths

# Ordinals used by the monotonicity constraints.  HC counts hops (S=0 few),
# RE counts *depletion* (VL=0 full battery, VS=4 empty), NPP counts load.
HC_ORD = {lbl: i for i, lbl in enumerate(("S", "M", "L", "VL"))}
RE_DEPLETION_ORD = {lbl: i for i, lbl in enumerate(("VL", "L", "M", "S", "VS"))}
NPP_ORD = {lbl: i for i, lbl in enumerate(("L", "M", "H"))}
NMP_ORD = {lbl: i for i, lbl in enumerate(("VS", "S", "M", "L", "VL"))}

#: The 16 rules published for the controller, keyed (hc, re, npp) -> nmp.
PAPER_RULES = (
    (("VL", "VL", "H"), "VS"),
    (("VL", "VL", "M"), "VS"),
    (("VL", "VL", "L"), "S"),
    (("L", "VL", "H"), "VS"),
    (("L", "VL", "M"), "VS"),
    (("L", "VL", "L"), "S"),
    (("L", "L", "H"), "VS"),
    (("L", "L", "M"), "S"),
    (("L", "VS", "L"), "L"),
    (("M", "VL", "H"), "S"),
    (("M", "VL", "M"), "S"),
    (("M", "VL", "L"), "M"),
    (("M", "VS", "M"), "L"),
    (("M", "VS", "L"), "VL"),
    (("S", "VL", "H"), "S"),
    (("S", "VL", "M"), "M"),
)

DEFUZZ_GRID_STEP = 0.001


class FuzzyError(ValueError):
    """Malformed membership functions, rule bases, or empty output sets."""


@dataclass(frozen=True)
class MembershipFunction:
    """Piecewise-linear triangle or trapezoid on the normalized domain [0, 1].

    ``points`` is (a, b, c) for a triangle or (a, b, c, d) for a trapezoid;
    membership is 1 on [b, c] and 0 outside [a, c] / [a, d].
    """

    points: tuple[float, ...]

    def __post_init__(self) -> None:
        pts = self.points
        if len(pts) not in (3, 4):
            raise FuzzyError(f"need 3 or 4 breakpoints, got {len(pts)}")
        if any(not math.isfinite(p) for p in pts):
            raise FuzzyError(f"non-finite breakpoint in {pts}")
        if any(p < 0.0 or p > 1.0 for p in pts):
            raise FuzzyError(f"breakpoints outside [0, 1]: {pts}")
        if any(p2 < p1 for p1, p2 in zip(pts, pts[1:])):
            raise FuzzyError(f"breakpoints must be non-decreasing: {pts}")

    @property
    def kind(self) -> str:
        return "triangular" if len(self.points) == 3 else "trapezoidal"

    def _flat_top(self) -> tuple[float, float]:
        if len(self.points) == 3:
            return self.points[1], self.points[1]
        return self.points[1], self.points[2]

    def __call__(self, x: float) -> float:
        if not math.isfinite(x):
            raise FuzzyError(f"membership input must be finite, got {x}")
        a = self.points[0]
        d = self.points[-1]
        b, c = self._flat_top()
        if b <= x <= c:
            return 1.0
        if x <= a or x >= d:
            return 0.0
        if x < b:
            return (x - a) / (b - a)
        return (d - x) / (d - c)

    def grades(self, xs: np.ndarray) -> np.ndarray:
        """Vectorized membership over a sample grid."""
        a = self.points[0]
        d = self.points[-1]
        b, c = self._flat_top()
        out = np.zeros_like(xs)
        if b > a:
            rising = (xs > a) & (xs < b)
            out[rising] = (xs[rising] - a) / (b - a)
        if d > c:
            falling = (xs > c) & (xs < d)
            out[falling] = (d - xs[falling]) / (d - c)
        out[(xs >= b) & (xs <= c)] = 1.0
        return out


def uniform_partition(labels: tuple[str, ...]) -> dict[str, MembershipFunction]:
    """Equally spaced triangles over [0, 1]; the end labels become shouldered
    trapezoids saturating at the domain ends, so coverage never drops to 0."""
    n = len(labels)
    peaks = [i / (n - 1) for i in range(n)]
    mfs: dict[str, MembershipFunction] = {}
    for i, lbl in enumerate(labels):
        if i == 0:
            mfs[lbl] = MembershipFunction((0.0, 0.0, 0.0, peaks[1]))
        elif i == n - 1:
            mfs[lbl] = MembershipFunction((peaks[-2], 1.0, 1.0, 1.0))
        else:
            mfs[lbl] = MembershipFunction((peaks[i - 1], peaks[i], peaks[i + 1]))
    return mfs


@dataclass(frozen=True)
class LinguisticVariable:
    """Named ordered label set with one membership function per label.

    ``scale`` maps raw units to the normalized domain: degree(x) uses x/scale
    clamped to [0, 1], so out-of-range readings saturate instead of failing.
    """

    name: str
    labels: tuple[str, ...]
    membership: dict[str, MembershipFunction]
    scale: float

    def __post_init__(self) -> None:
        if set(self.labels) != set(self.membership):
            raise FuzzyError(f"{self.name}: labels and membership functions disagree")
        if self.scale <= 0 or not math.isfinite(self.scale):
            raise FuzzyError(f"{self.name}: scale must be positive and finite")

    def normalize(self, crisp: float) -> float:
        if not math.isfinite(crisp):
            raise FuzzyError(f"{self.name}: crisp input must be finite, got {crisp}")
        return min(1.0, max(0.0, crisp / self.scale))

    def fuzzify(self, crisp: float) -> dict[str, float]:
        x = self.normalize(crisp)
        return {lbl: self.membership[lbl](x) for lbl in self.labels}


@dataclass(frozen=True)
class FuzzyRule:
    hc: str
    re: str
    npp: str
    nmp: str

    def __post_init__(self) -> None:
        if self.hc not in HC_ORD or self.re not in RE_DEPLETION_ORD \
                or self.npp not in NPP_ORD or self.nmp not in NMP_ORD:
            raise FuzzyError(f"unknown label in rule {self}")

    @property
    def antecedent(self) -> tuple[str, str, str]:
        return (self.hc, self.re, self.npp)


def _bounds_from(fixed: dict[tuple[str, str, str], str],
                 hc: str, re: str, npp: str) -> tuple[int, int, tuple | None, tuple | None]:
    """Lower/upper NMP-ordinal bounds a cell inherits from fixed cells.

    A fixed cell with more hops, fuller battery, and heavier participation
    forces this cell's consequent up; the mirror-image cell caps it.
    """
    h, r, p = HC_ORD[hc], RE_DEPLETION_ORD[re], NPP_ORD[npp]
    lo, hi = 0, len(NMP_LABELS) - 1
    lo_src = hi_src = None
    for (fh, fr, fp), fout in fixed.items():
        oh, orr, op = HC_ORD[fh], RE_DEPLETION_ORD[fr], NPP_ORD[fp]
        out = NMP_ORD[fout]
        if oh >= h and orr <= r and op >= p and out > lo:
            lo, lo_src = out, (fh, fr, fp)
        if oh <= h and orr >= r and op <= p and out < hi:
            hi, hi_src = out, (fh, fr, fp)
    return lo, hi, lo_src, hi_src


@dataclass(frozen=True)
class RuleBase:
    """All 60 antecedent combinations, each mapped to one NMP label."""

    rules: tuple[FuzzyRule, ...]
    by_antecedent: dict[tuple[str, str, str], str] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        expected = len(HC_LABELS) * len(RE_LABELS) * len(NPP_LABELS)
        if len(self.rules) != expected:
            raise FuzzyError(f"rule base needs {expected} rules, got {len(self.rules)}")
        lookup = {r.antecedent: r.nmp for r in self.rules}
        if len(lookup) != expected:
            raise FuzzyError("duplicate antecedents in rule base")
        object.__setattr__(self, "by_antecedent", lookup)

    def consequent(self, hc: str, re: str, npp: str) -> str:
        return self.by_antecedent[(hc, re, npp)]


def complete_rule_base(paper_rules=PAPER_RULES) -> RuleBase:
    """Extend the published rules to the full 60-cell table.

    Cells are visited in (HC, RE, NPP) ordinal order; each missing consequent
    takes the smallest NMP ordinal consistent with every already-fixed cell,
    which keeps the table monotone and biases toward fewer paths.
    """
    fixed: dict[tuple[str, str, str], str] = {}
    for (hc, re, npp), nmp in paper_rules:
        key = FuzzyRule(hc, re, npp, nmp).antecedent
        if key in fixed and fixed[key] != nmp:
            raise FuzzyError(f"published rules disagree on {key}")
        fixed[key] = nmp

    for key, nmp in list(fixed.items()):
        lo, hi, lo_src, hi_src = _bounds_from(fixed, *key)
        if lo > hi:
            raise FuzzyError(
                f"published rules conflict at {key}: {lo_src} forces >= {lo}, "
                f"{hi_src} forces <= {hi}")

    rules: list[FuzzyRule] = []
    for hc in ("S", "M", "L", "VL"):
        for re in ("VL", "L", "M", "S", "VS"):
            for npp in ("L", "M", "H"):
                key = (hc, re, npp)
                if key not in fixed:
                    lo, hi, lo_src, hi_src = _bounds_from(fixed, hc, re, npp)
                    if lo > hi:
                        raise FuzzyError(
                            f"no consistent consequent for {key}: {lo_src} vs {hi_src}")
                    fixed[key] = NMP_LABELS[lo]
                rules.append(FuzzyRule(hc, re, npp, fixed[key]))
    return RuleBase(tuple(rules))


@dataclass(frozen=True)
class FuzzyOutputSet:
    """Aggregate output membership sampled over the NMP domain [0, 1]."""

    grid: np.ndarray
    grades: np.ndarray

    def is_empty(self) -> bool:
        return not bool(np.any(self.grades > 0.0))


def infer(rule_base: RuleBase,
          hc_degrees: dict[str, float],
          re_degrees: dict[str, float],
          npp_degrees: dict[str, float],
          grid: np.ndarray,
          nmp_grades: dict[str, np.ndarray]) -> FuzzyOutputSet:
    """Mamdani inference: min-fired rules, clipped consequents, max aggregate."""
    strength_by_label = {lbl: 0.0 for lbl in NMP_LABELS}
    for rule in rule_base.rules:
        s = min(hc_degrees[rule.hc], re_degrees[rule.re], npp_degrees[rule.npp])
        if s > strength_by_label[rule.nmp]:
            strength_by_label[rule.nmp] = s
    agg = np.zeros_like(grid)
    for lbl, s in strength_by_label.items():
        if s > 0.0:
            np.maximum(agg, np.minimum(s, nmp_grades[lbl]), out=agg)
    return FuzzyOutputSet(grid=grid, grades=agg)


def defuzzify_centroid(output: FuzzyOutputSet) -> float:
    if output.is_empty():
        raise FuzzyError("cannot take the centroid of an empty output set")
    weight = float(np.sum(output.grades))
    return float(np.dot(output.grid, output.grades)) / weight


class PathCountController:
    """End-to-end controller: crisp (hops, joules, paths) -> path count in [1, 5]."""

    def __init__(self, max_hops: float, energy_scale_j: float = 1.0,
                 max_paths: int = 5, grid_step: float = DEFUZZ_GRID_STEP):
        if max_hops < 1:
            raise FuzzyError(f"max_hops must be >= 1, got {max_hops}")
        if max_paths < 1:
            raise FuzzyError(f"max_paths must be >= 1, got {max_paths}")
        self.hop_count = LinguisticVariable(
            "hop_count", HC_LABELS, uniform_partition(HC_LABELS), float(max_hops))
        self.residual_energy = LinguisticVariable(
            "residual_energy", RE_LABELS, uniform_partition(RE_LABELS), energy_scale_j)
        self.path_participation = LinguisticVariable(
            "path_participation", NPP_LABELS, uniform_partition(NPP_LABELS), float(max_paths))
        self.path_count_out = LinguisticVariable(
            "path_count", NMP_LABELS, uniform_partition(NMP_LABELS), 1.0)
        self.rule_base = complete_rule_base()
        self.max_paths = max_paths
        n = int(round(1.0 / grid_step)) + 1
        self.grid = np.linspace(0.0, 1.0, n)
        self.nmp_grades = {
            lbl: self.path_count_out.membership[lbl].grades(self.grid)
            for lbl in NMP_LABELS
        }

    def infer_output(self, hop_count: float, residual_j: float,
                     participation: float) -> FuzzyOutputSet:
        return infer(self.rule_base,
                     self.hop_count.fuzzify(hop_count),
                     self.residual_energy.fuzzify(residual_j),
                     self.path_participation.fuzzify(participation),
                     self.grid, self.nmp_grades)

    def decide(self, hop_count: float, residual_j: float, participation: float) -> int:
        """Map the defuzzified centroid c in [0, 1] to round(1 + 4c), clamped."""
        if hop_count < 1:
            raise FuzzyError(f"hop count must be >= 1, got {hop_count}")
        if residual_j < 0:
            raise FuzzyError(f"residual energy must be >= 0, got {residual_j}")
        if participation < 0:
            raise FuzzyError(f"participation must be >= 0, got {participation}")
        c = defuzzify_centroid(self.infer_output(hop_count, residual_j, participation))
        count = int(math.floor(1.0 + 4.0 * c + 0.5))
        return max(1, min(5, count, self.max_paths))

    def export_dict(self) -> dict:
        """JSON-friendly dump of the membership layout and the 60 rules."""
        def var_dump(var: LinguisticVariable) -> dict:
            return {
                "labels": list(var.labels),
                "scale": var.scale,
                "membership": {
                    lbl: {"kind": mf.kind, "points": list(mf.points)}
                    for lbl, mf in var.membership.items()
                },
            }

        return {
            "variables": {
                "hop_count": var_dump(self.hop_count),
                "residual_energy": var_dump(self.residual_energy),
                "path_participation": var_dump(self.path_participation),
                "path_count": var_dump(self.path_count_out),
            },
            "rules": [
                {"hc": r.hc, "re": r.re, "npp": r.npp, "nmp": r.nmp}
                for r in self.rule_base.rules
            ],
            "defuzzifier": {"method": "centroid", "grid_step": DEFUZZ_GRID_STEP},
            "count_mapping": "round(1 + 4 * centroid), clamped to [1, 5]",
        }

    def export_json(self) -> str:
        return json.dumps(self.export_dict(), indent=2, sort_keys=True)
