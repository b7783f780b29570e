"""Label distributions, turn-structure ratios and speaking time."""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .conversation import Conversation, labeled_intervals
from .schema import Layer, canonical_text, inventory, label_sort_key

SINGLE_ONLY = "single-only"
COMBINED_ONLY = "combined-only"
ALL = "all"
MODES = (SINGLE_ONLY, COMBINED_ONLY, ALL)
UNCERTAIN_COLUMN = "uncertain"
TOTAL = "TOTAL"


@dataclass
class DistributionTable:
    layer: Layer
    mode: str
    columns: list[str]
    rows: dict[str, Counter] = field(default_factory=dict)

    @property
    def speakers(self) -> list[str]:
        return list(self.rows)

    def row(self, speaker: str) -> list[int]:
        c = self.rows[speaker]
        return [c[col] for col in self.columns]

    def row_total(self, speaker: str) -> int:
        return sum(self.row(speaker))

    def totals(self) -> list[int]:
        return [sum(c[col] for c in self.rows.values()) for col in self.columns]

    def total(self) -> int:
        return sum(self.totals())

    def __getitem__(self, key: tuple[str, str]) -> int:
        speaker, col = key
        if speaker == TOTAL:
            return sum(c[col] for c in self.rows.values())
        return self.rows[speaker][col]

    def percentages(self) -> list[float]:
        """Column shares of the TOTAL row, in percent (unrounded)."""
        n = self.total()
        return [100.0 * t / n if n else 0.0 for t in self.totals()]

    def _records(self, percent: bool) -> list[list[str]]:
        header = ["speaker", *self.columns, "total"]
        recs = [header]
        for spk in self.rows:
            r = self.row(spk)
            recs.append([spk, *map(str, r), str(sum(r))])
        tot = self.totals()
        recs.append([TOTAL, *map(str, tot), str(sum(tot))])
        if percent:
            recs.append(["%", *(f"{p:.1f}" for p in self.percentages()),
                         "100.0" if self.total() else "0.0"])
        return recs

    def to_csv(self, percent: bool = True) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(self._records(percent))
        return buf.getvalue()

    def to_text(self, percent: bool = True) -> str:
        recs = self._records(percent)
        widths = [max(len(r[i]) for r in recs) for i in range(len(recs[0]))]
        lines = []
        for r in recs:
            cells = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
            lines.append("  ".join(cells).rstrip())
        return "\n".join(lines) + "\n"


def _speaker_rows(convs: Iterable[Conversation]) -> list[tuple[str, object]]:
    out = []
    for conv in convs:
        for spk in conv.speakers:
            out.append((spk.speaker, spk))
    return out


def label_distribution(convs: Iterable[Conversation], layer: Layer | str,
                       mode: str = SINGLE_ONLY) -> DistributionTable:
    """Count labels per speaker.

    ``single-only`` counts certain single labels in inventory order;
    ``combined-only`` counts certain combined labels; ``all`` has both
    plus an ``uncertain`` column for every ``@`` label.  A speaker id seen
    in several conversations gets one merged row.  Unparsable intervals are
    not counted (the linter reports them).
    """
    layer = Layer(layer)
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    rows: dict[str, Counter] = {}
    combined_seen: set[str] = set()
    for speaker, spk in _speaker_rows(convs):
        c = rows.setdefault(speaker, Counter())
        for li in labeled_intervals(spk.layer(layer), layer):
            lab = li.label
            if lab is None:
                continue
            if lab.uncertain:
                if mode == ALL:
                    c[UNCERTAIN_COLUMN] += 1
                continue
            if lab.combined:
                if mode == SINGLE_ONLY:
                    continue
                combined_seen.add(canonical_text(lab))
            elif mode == COMBINED_ONLY:
                continue
            c[canonical_text(lab)] += 1
    combined = sorted(combined_seen, key=lambda t: label_sort_key(layer, t))
    if mode == SINGLE_ONLY:
        columns = list(inventory(layer))
    elif mode == COMBINED_ONLY:
        columns = combined
    else:
        columns = [*inventory(layer), *combined, UNCERTAIN_COLUMN]
    # lone coll never parses, so it never gets a column of its own
    columns = [col for col in columns if col != "coll"]
    return DistributionTable(layer, mode, columns, rows)


# -- turn structure ---------------------------------------------------------

HOLDING_SIDE = frozenset({"hold", "cont"})
YIELDING_SIDE = frozenset({"change", "question", "incomplete"})
TCU_HOLD = "hold"


@dataclass
class TurnStructureSummary:
    """Turn-holding vs turn-yielding PCOMPs for one speaker (or overall).

    ``holding`` counts ``hold`` (a TCU end that keeps the turn) and
    ``holding_side`` adds ``cont``; ``yielding`` counts change, question and
    incomplete.  TCUs end at hold and at every yielding label, so the mean
    number of TCUs per turn is ``(holding + yielding) / yielding``.
    """

    speaker: str
    holding: int = 0
    holding_side: int = 0
    yielding: int = 0
    mixed: int = 0
    speaking_time: float = 0.0
    ipu_count: int = 0

    @property
    def ratio(self) -> float:
        return self.holding_side / self.yielding if self.yielding else math.nan

    @property
    def ratio_text(self) -> str:
        return f"{self.holding_side}:{self.yielding}"

    @property
    def mean_tcus(self) -> float:
        """NaN (flagged as undefined) when nothing yields the turn."""
        return (self.holding + self.yielding) / self.yielding if self.yielding else math.nan

    @property
    def defined(self) -> bool:
        return self.yielding > 0

    def __iadd__(self, other: "TurnStructureSummary") -> "TurnStructureSummary":
        self.holding += other.holding
        self.holding_side += other.holding_side
        self.yielding += other.yielding
        self.mixed += other.mixed
        self.speaking_time += other.speaking_time
        self.ipu_count += other.ipu_count
        return self


@dataclass
class TurnStructure:
    speakers: list[TurnStructureSummary]
    overall: TurnStructureSummary

    def __getitem__(self, speaker: str) -> TurnStructureSummary:
        if speaker == TOTAL:
            return self.overall
        for s in self.speakers:
            if s.speaker == speaker:
                return s
        raise KeyError(speaker)

    def _records(self) -> list[list[str]]:
        recs = [["speaker", "holding", "holding_side", "yielding", "mixed", "ratio",
                 "mean_tcus", "speaking_time_s", "ipus"]]
        for s in [*self.speakers, self.overall]:
            recs.append([s.speaker, str(s.holding), str(s.holding_side), str(s.yielding),
                         str(s.mixed), s.ratio_text,
                         f"{s.mean_tcus:.3f}" if s.defined else "undefined",
                         f"{s.speaking_time:.3f}", str(s.ipu_count)])
        return recs

    def to_csv(self) -> str:
        buf = io.StringIO()
        csv.writer(buf, lineterminator="\n").writerows(self._records())
        return buf.getvalue()

    def to_text(self) -> str:
        recs = self._records()
        widths = [max(len(r[i]) for r in recs) for i in range(len(recs[0]))]
        return "".join("  ".join([r[0].ljust(widths[0])] +
                                 [c.rjust(w) for c, w in zip(r[1:], widths[1:])]).rstrip() + "\n"
                       for r in recs)


def _side(part: str) -> str | None:
    if part in HOLDING_SIDE:
        return "holding"
    if part in YIELDING_SIDE:
        return "yielding"
    return None


def turn_structure(convs: Iterable[Conversation], layer: Layer | str = Layer.PCOMP,
                   include_combined: bool = True,
                   include_uncertain: bool = False) -> TurnStructure:
    """Holding/yielding counts per speaker and overall.

    A combined label counts only if all its parts fall on the same side;
    otherwise (or if a part is on neither side, e.g. ``hold_hrt``) it goes
    to ``mixed``.  Uncertain labels are skipped unless
    ``include_uncertain``.
    """
    layer = Layer(layer)
    per: dict[str, TurnStructureSummary] = {}
    for conv in convs:
        times = speaking_time(conv)
        for spk in conv.speakers:
            s = per.setdefault(spk.speaker, TurnStructureSummary(spk.speaker))
            secs, n = times.get(spk.speaker, (0.0, 0))
            s.speaking_time += secs
            s.ipu_count += n
            for li in labeled_intervals(spk.layer(layer), layer):
                lab = li.label
                if lab is None or (lab.uncertain and not include_uncertain):
                    continue
                if lab.combined and not include_combined:
                    continue
                sides = {_side(p) for p in lab.parts}
                if len(sides) != 1 or None in sides:
                    if lab.combined and sides & {"holding", "yielding"}:
                        s.mixed += 1
                    continue
                if sides == {"yielding"}:
                    s.yielding += 1
                else:
                    s.holding_side += 1
                    if TCU_HOLD in lab.parts:
                        s.holding += 1
    overall = TurnStructureSummary(TOTAL)
    for s in per.values():
        overall += s
    return TurnStructure(list(per.values()), overall)


def speaking_time(conv: Conversation) -> dict[str, tuple[float, int]]:
    """Per speaker: summed duration and number of annotated IPU intervals."""
    out = {}
    for spk in conv.speakers:
        ivs = [li.interval for li in labeled_intervals(spk.ipu, Layer.IPU)]
        out[spk.speaker] = (math.fsum(iv.duration for iv in ivs), len(ivs))
    return out


def speaking_time_csv(convs: Sequence[Conversation]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["conversation", "speaker", "speaking_time_s", "ipus"])
    for conv in convs:
        for spk, (secs, n) in speaking_time(conv).items():
            w.writerow([conv.name, spk, f"{secs:.3f}", n])
    return buf.getvalue()


__all__ = [
    "ALL", "COMBINED_ONLY", "DistributionTable", "MODES", "SINGLE_ONLY", "TOTAL", "TurnStructure",
    "TurnStructureSummary", "UNCERTAIN_COLUMN", "label_distribution", "speaking_time",
    "speaking_time_csv", "turn_structure",
]
