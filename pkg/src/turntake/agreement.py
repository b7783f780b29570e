"""Inter- and intra-annotator agreement for labelled interval tiers."""

from __future__ import annotations

import bisect
import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

from .schema import (MIXED, LabelExpr, Layer, MacroScheme, canonical_text, is_marker,
                     label_sort_key, macro_category, parse_label)
from .textgrid import EPS, Interval, Tier

DEFAULT_TOLERANCE = 0.020

EXACT = "exact"
UNMATCHED_A = "unmatched_a"
UNMATCHED_B = "unmatched_b"


class AgreementError(ValueError):
    pass


@dataclass(frozen=True)
class AlignedPair:
    a: Interval | None
    b: Interval | None
    kind: str

    @property
    def start(self) -> float:
        return (self.a or self.b).xmin


def _annotated(tier: Tier | Sequence[Interval]) -> list[Interval]:
    ivs = tier.intervals if isinstance(tier, Tier) else tier
    return [iv for iv in ivs if not is_marker(iv.text)]


def align(tier_a: Tier | Sequence[Interval], tier_b: Tier | Sequence[Interval],
          tolerance: float = DEFAULT_TOLERANCE) -> list[AlignedPair]:
    """Match annotated intervals one-to-one when both edges agree within
    ``tolerance``; everything else is a segmentation disagreement.

    Candidate pairs are taken closest-first (summed edge distance), so the
    result does not depend on which tier is passed first.
    """
    a = _annotated(tier_a)
    b = _annotated(tier_b)
    b_starts = [iv.xmin for iv in b]
    candidates = []
    for i, x in enumerate(a):
        lo = bisect.bisect_left(b_starts, x.xmin - tolerance - EPS)
        hi = bisect.bisect_right(b_starts, x.xmin + tolerance + EPS)
        for j in range(lo, hi):
            y = b[j]
            ds, de = abs(x.xmin - y.xmin), abs(x.xmax - y.xmax)
            if ds <= tolerance + EPS and de <= tolerance + EPS:
                candidates.append((ds + de, min(x.xmin, y.xmin), i, j))
    candidates.sort(key=lambda c: (c[0], c[1], a[c[2]].xmin + b[c[3]].xmin))
    used_a: set[int] = set()
    used_b: set[int] = set()
    pairs = []
    for _, _, i, j in candidates:
        if i in used_a or j in used_b:
            continue
        used_a.add(i)
        used_b.add(j)
        pairs.append(AlignedPair(a[i], b[j], EXACT))
    pairs += [AlignedPair(x, None, UNMATCHED_A) for i, x in enumerate(a) if i not in used_a]
    pairs += [AlignedPair(None, y, UNMATCHED_B) for j, y in enumerate(b) if j not in used_b]
    pairs.sort(key=lambda p: (p.start, p.kind))
    return pairs


def exact_pairs(pairs: Iterable[AlignedPair]) -> list[AlignedPair]:
    return [p for p in pairs if p.kind == EXACT]


# -- confusion matrices and Cohen's kappa ---------------------------------------

@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are annotator A's categories, columns annotator B's."""

    categories: tuple
    counts: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        cats = tuple(self.categories)
        rows = tuple(tuple(int(c) for c in row) for row in self.counts)
        if len(rows) != len(cats) or any(len(r) != len(cats) for r in rows):
            raise ValueError("counts must be a square matrix matching the categories")
        if any(c < 0 for r in rows for c in r):
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "categories", cats)
        object.__setattr__(self, "counts", rows)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[Hashable, Hashable]],
                   categories: Sequence | None = None) -> "ConfusionMatrix":
        pairs = list(pairs)
        if categories is None:
            categories = sorted({c for p in pairs for c in p}, key=str)
        index = {c: i for i, c in enumerate(categories)}
        counts = [[0] * len(categories) for _ in categories]
        for x, y in pairs:
            counts[index[x]][index[y]] += 1
        return cls(tuple(categories), tuple(map(tuple, counts)))

    @property
    def total(self) -> int:
        return sum(map(sum, self.counts))

    @property
    def trace(self) -> int:
        return sum(self.counts[i][i] for i in range(len(self.categories)))

    def row_totals(self) -> list[int]:
        return [sum(r) for r in self.counts]

    def col_totals(self) -> list[int]:
        return [sum(col) for col in zip(*self.counts)] if self.counts else []

    def __getitem__(self, key: tuple) -> int:
        x, y = key
        return self.counts[self.categories.index(x)][self.categories.index(y)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["a\\b", *map(str, self.categories), "TOTAL"])
        for cat, row in zip(self.categories, self.counts):
            w.writerow([str(cat), *row, sum(row)])
        w.writerow(["TOTAL", *self.col_totals(), self.total])
        return buf.getvalue()


@dataclass(frozen=True)
class KappaResult:
    statistic: str
    observed: float
    expected: float
    kappa: float
    z: float = math.nan

    # p_o / p_e aliases match the usual notation
    @property
    def p_o(self) -> float:
        return self.observed

    @property
    def p_e(self) -> float:
        return self.expected


def cohen_kappa(matrix: ConfusionMatrix) -> KappaResult:
    """Cohen's kappa with per-annotator marginals."""
    n = matrix.total
    if n <= 0 or not matrix.categories:
        raise AgreementError("confusion matrix is empty")
    p_o = matrix.trace / n
    p_e = sum((r / n) * (c / n) for r, c in zip(matrix.row_totals(), matrix.col_totals()))
    if matrix.trace == n:
        return KappaResult("cohen", 1.0, p_e, 1.0)
    if p_e >= 1.0 - 1e-15:
        raise AgreementError("kappa undefined: expected agreement is 1 but observed is not")
    return KappaResult("cohen", p_o, p_e, (p_o - p_e) / (1 - p_e))


# -- Fleiss' kappa --------------------------------------------------------------

def fleiss_kappa(ratings: Sequence[Sequence[Hashable]]) -> KappaResult:
    """Fleiss' kappa for ``ratings[item][rater]`` category assignments.

    ``z`` uses the large-sample null variance of Fleiss, Nee & Landis (1979).
    """
    ratings = [list(r) for r in ratings]
    if not ratings:
        raise AgreementError("no items")
    n = len(ratings[0])
    for i, r in enumerate(ratings):
        if len(r) != n:
            raise AgreementError(f"item {i} has {len(r)} ratings, expected {n}")
    if n < 2:
        raise AgreementError("Fleiss' kappa needs at least two raters per item")
    n_items = len(ratings)
    per_item = [Counter(r) for r in ratings]
    totals: Counter = Counter()
    for c in per_item:
        totals.update(c)
    p = {k: v / (n_items * n) for k, v in totals.items()}
    P_i = [sum(m * (m - 1) for m in c.values()) / (n * (n - 1)) for c in per_item]
    P_bar = sum(P_i) / n_items
    P_e = sum(v * v for v in p.values())
    if P_bar == 1.0 and all(len(c) == 1 for c in per_item):
        kappa = 1.0
    elif P_e >= 1.0 - 1e-15:
        raise AgreementError("kappa undefined: expected agreement is 1 but observed is not")
    else:
        kappa = (P_bar - P_e) / (1 - P_e)
    pq = sum(v * (1 - v) for v in p.values())
    z = math.nan
    if pq > 0:
        inner = pq * pq - sum(v * (1 - v) * (1 - 2 * v) for v in p.values())
        se = math.sqrt(2.0) / (pq * math.sqrt(n_items * n * (n - 1))) * math.sqrt(max(inner, 0.0))
        if se > 0:
            z = kappa / se
    return KappaResult("fleiss", P_bar, P_e, kappa, z)


def implied_expected_agreement(observed: float, kappa: float) -> float:
    """Back-solve ``p_e`` from ``kappa = (p_o - p_e) / (1 - p_e)``."""
    if kappa >= 1:
        raise AgreementError("kappa must be below 1 to back-solve expected agreement")
    return (observed - kappa) / (1 - kappa)


# -- boundary agreement -----------------------------------------------------------

@dataclass(frozen=True)
class BoundaryAgreement:
    both: int
    only_a: int
    only_b: int
    neither: int
    uncovered_a: tuple[float, ...] = ()
    uncovered_b: tuple[float, ...] = ()

    @property
    def candidates(self) -> int:
        return self.both + self.only_a + self.only_b + self.neither

    @property
    def agreement(self) -> float:
        return (self.both + self.neither) / self.candidates if self.candidates else math.nan

    @property
    def one_sided(self) -> int:
        return self.only_a + self.only_b


def _any_near(sorted_times: list[float], t: float, tol: float) -> bool:
    i = bisect.bisect_left(sorted_times, t - tol - EPS)
    return i < len(sorted_times) and sorted_times[i] <= t + tol + EPS


def boundary_agreement(bounds_a: Iterable[float], bounds_b: Iterable[float],
                       candidates: Iterable[float],
                       tolerance: float = DEFAULT_TOLERANCE) -> BoundaryAgreement:
    """Set/not-set decisions of two annotations at each candidate position.

    Boundaries farther than ``tolerance`` from every candidate are returned
    in ``uncovered_a``/``uncovered_b`` and do not enter the counts.
    """
    sa = sorted(bounds_a)
    sb = sorted(bounds_b)
    cand = sorted(set(candidates))
    counts = Counter()
    for c in cand:
        counts[(_any_near(sa, c, tolerance), _any_near(sb, c, tolerance))] += 1
    unc_a = tuple(t for t in sa if not _any_near(cand, t, tolerance))
    unc_b = tuple(t for t in sb if not _any_near(cand, t, tolerance))
    return BoundaryAgreement(counts[(True, True)], counts[(True, False)],
                             counts[(False, True)], counts[(False, False)], unc_a, unc_b)


def interval_boundaries(tier: Tier | Sequence[Interval]) -> list[float]:
    """End times of annotated intervals (a PCOMP is the end of its interval)."""
    return [iv.xmax for iv in _annotated(tier)]


# -- label comparison -------------------------------------------------------------

FULL = "full"
PARTIAL = "partial"
NONE = "none"


def _as_label(x, layer) -> LabelExpr:
    return x if isinstance(x, LabelExpr) else parse_label(layer, x)


def agreement_kind(a: LabelExpr | str, b: LabelExpr | str, layer: Layer | str | None = None) -> str:
    """``full`` for identical parts, ``partial`` for overlapping parts,
    ``none`` for disjoint parts.  Uncertainty is ignored."""
    if layer is None:
        layer = a.layer if isinstance(a, LabelExpr) else b.layer if isinstance(b, LabelExpr) else None
    if layer is None:
        raise ValueError("layer is required when both labels are strings")
    la, lb = _as_label(a, layer), _as_label(b, layer)
    pa, pb = set(la.parts), set(lb.parts)
    if pa == pb:
        return FULL
    if pa & pb:
        return PARTIAL
    return NONE


def partial_agreement(pairs: Iterable[tuple], layer: Layer | str | None = None) -> dict[str, int]:
    counts = {FULL: 0, PARTIAL: 0, NONE: 0}
    for a, b in pairs:
        counts[agreement_kind(a, b, layer)] += 1
    return counts


def category_of(label: LabelExpr, grouping: MacroScheme | None = None,
                keep_uncertain: bool = False):
    if grouping is not None:
        return macro_category(label, grouping)
    return canonical_text(label if keep_uncertain else label.certain())


def _category_order(layer: Layer, cats: Iterable, grouping: MacroScheme | None) -> list:
    cats = set(cats)
    if grouping is not None:
        order = [c for c in grouping.categories if c in cats]
        return order + sorted((c for c in cats if c not in order), key=str)
    return sorted(cats, key=lambda t: label_sort_key(layer, t))


def confusion_table(pairs: Iterable[tuple], grouping: MacroScheme | None = None,
                    keep_uncertain: bool = False, layer: Layer | str | None = None,
                    categories: Sequence | None = None) -> ConfusionMatrix:
    """Count label pairs by canonical text, or by macro category when a
    grouping is given (combinations straddling categories count as Mixed)."""
    labelled = []
    for a, b in pairs:
        lay = layer or (a.layer if isinstance(a, LabelExpr) else grouping.layer if grouping else None)
        if lay is None:
            raise ValueError("layer is required when labels are strings")
        la, lb = _as_label(a, lay), _as_label(b, lay)
        labelled.append((category_of(la, grouping, keep_uncertain),
                         category_of(lb, grouping, keep_uncertain)))
        layer = lay
    if categories is None:
        categories = _category_order(Layer(layer) if layer else Layer.IPU,
                                     (c for p in labelled for c in p), grouping)
    return ConfusionMatrix.from_pairs(labelled, categories)


# -- reports ----------------------------------------------------------------------

@dataclass
class AgreementReport:
    layer: Layer
    n_aligned: int
    n_unmatched_a: int
    n_unmatched_b: int
    matrix: ConfusionMatrix
    cohen: KappaResult | None
    fleiss: KappaResult | None
    partial: dict[str, int]
    grouped: dict[str, tuple[ConfusionMatrix, KappaResult | None]] = field(default_factory=dict)
    header: dict[str, str] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    @property
    def n_agree(self) -> int:
        return self.matrix.trace

    @property
    def p_o(self) -> float:
        return self.n_agree / self.n_aligned if self.n_aligned else math.nan

    @property
    def p_e(self) -> float:
        return self.fleiss.expected if self.fleiss else math.nan

    @property
    def kappa(self) -> float:
        return self.fleiss.kappa if self.fleiss else math.nan

    def consistency_check(self, reported_kappa: float) -> float:
        """Expected agreement implied by a published kappa and this report's p_o."""
        return implied_expected_agreement(self.p_o, reported_kappa)

    def summary(self) -> str:
        lines = [f"# {k} = {v}" for k, v in self.header.items()]
        lines += [f"# warning: {w}" for w in self.warnings]
        total_a = self.n_aligned + self.n_unmatched_a
        lines += [
            f"layer: {self.layer.value}",
            f"intervals annotated (a): {total_a}",
            f"aligned (same boundaries): {self.n_aligned}",
            f"segmentation disagreements: {self.n_unmatched_a} unmatched in a, "
            f"{self.n_unmatched_b} unmatched in b",
            f"label agreement: {self.n_agree} of {self.n_aligned}",
        ]
        for res in (self.fleiss, self.cohen):
            if res is None:
                continue
            lines.append(f"{res.statistic} kappa = {_fmt(res.kappa)}, p_o = {_fmt(res.observed)}, "
                         f"p_e = {_fmt(res.expected)}, z = {_fmt(res.z, 2)}")
        lines.append(f"partial agreement: full {self.partial[FULL]}, "
                     f"partial {self.partial[PARTIAL]}, none {self.partial[NONE]}")
        for name, (m, res) in self.grouped.items():
            if res is None:
                lines.append(f"grouped ({name}): kappa undefined")
            else:
                lines.append(f"grouped ({name}): {res.statistic} kappa = {_fmt(res.kappa)}, "
                             f"p_o = {_fmt(res.observed)}, p_e = {_fmt(res.expected)}, "
                             f"z = {_fmt(res.z, 2)}, N = {m.total}")
        return "\n".join(lines) + "\n"


def _fmt(x: float, digits: int = 4) -> str:
    return "nan" if x is None or math.isnan(x) else f"{x:.{digits}f}"


def _safe(fn, *args):
    try:
        return fn(*args)
    except AgreementError:
        return None


def agreement_report(tier_a: Tier | Sequence[Interval], tier_b: Tier | Sequence[Interval],
                     layer: Layer | str, tolerance: float = DEFAULT_TOLERANCE,
                     groupings: Sequence[MacroScheme] = (), keep_uncertain: bool = False,
                     pairs: Sequence[AlignedPair] | None = None) -> AgreementReport:
    """Align two annotations of one recording and summarise label agreement."""
    layer = Layer(layer)
    if pairs is None:
        pairs = align(tier_a, tier_b, tolerance)
    matched = exact_pairs(pairs)
    labels = [(parse_label(layer, p.a.text), parse_label(layer, p.b.text)) for p in matched]
    matrix = confusion_table(labels, None, keep_uncertain, layer)
    cohen = _safe(cohen_kappa, matrix) if matrix.total else None
    raw_ratings = [[category_of(a, None, keep_uncertain), category_of(b, None, keep_uncertain)]
                   for a, b in labels]
    fleiss = _safe(fleiss_kappa, raw_ratings) if raw_ratings else None
    grouped = {}
    for g in groupings:
        gm = confusion_table(labels, g, keep_uncertain, layer)
        ratings = [[macro_category(a, g), macro_category(b, g)] for a, b in labels]
        grouped[g.name] = (gm, _safe(fleiss_kappa, ratings) if ratings else None)
    return AgreementReport(
        layer=layer,
        n_aligned=len(matched),
        n_unmatched_a=sum(p.kind == UNMATCHED_A for p in pairs),
        n_unmatched_b=sum(p.kind == UNMATCHED_B for p in pairs),
        matrix=matrix,
        cohen=cohen,
        fleiss=fleiss,
        partial=partial_agreement(labels),
        grouped=grouped,
    )


__all__ = [
    "AlignedPair", "AgreementError", "AgreementReport", "BoundaryAgreement", "ConfusionMatrix",
    "KappaResult", "MIXED", "agreement_kind", "agreement_report", "align", "boundary_agreement",
    "cohen_kappa", "confusion_table", "exact_pairs", "fleiss_kappa", "implied_expected_agreement",
    "interval_boundaries", "partial_agreement",
]
