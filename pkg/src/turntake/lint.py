"""Consistency checks for labelled IPU and PCOMP tiers.

Every finding is a :class:`Diagnostic` carrying a rule id from
:data:`RULES`.  Label parse failures are errors; everything that depends on
the conversational context is a warning, since lapses and combined labels
legitimately bend the simple rules.  Findings on uncertain (``@``) labels are
downgraded one level.
"""

from __future__ import annotations

import bisect
import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .conversation import Conversation, LabeledInterval, labeled_intervals
from .schema import LabelExpr, Layer, LoneColl
from .segment import (BREATH, DEFAULT_THRESHOLD, SMACK, WORD, TokenClassifier,
                      speech_gaps)
from .textgrid import EPS

ERROR = "error"
WARNING = "warning"
INFO = "info"
_DOWNGRADE = {ERROR: WARNING, WARNING: INFO, INFO: INFO}

DEFAULT_TOLERANCE = 0.020
DEFAULT_LAPSE = 2.0

RULES: dict[str, str] = {
    "IPU-LABEL": "IPU interval text is not a valid IPU label",
    "IPU-R1": "hold/incomplete-hold, but the next non-hrt speech is by the other speaker",
    "IPU-R2": "turn-yielding label, but the next non-hrt speech is by the same speaker",
    "IPU-R3": "question, but the other speaker says nothing before the same speaker goes on",
    "IPU-R4": "hrt followed by a lapse (no speech from either speaker)",
    "IPU-SEG-GAP": "same-speaker IPUs separated by less than the pause threshold",
    "IPU-SEG-SPAN": "IPU spans a pause of at least the threshold",
    "IPU-SEG-WORD": "IPU boundary falls inside a word",
    "PCOMP-LABEL": "PCOMP interval text is not a valid PCOMP label",
    "PCOMP-COLL": "coll used without a second label",
    "PCOMP-EDGE": "PCOMP interval starts neither at a word onset nor at the previous PCOMP end, "
                  "or ends off a word offset",
    "PCOMP-R1": "turn-holding PCOMP label, but the next non-hrt speech is by the other speaker",
    "PCOMP-R2": "turn-yielding PCOMP label, but the next non-hrt speech is by the same speaker",
}


@dataclass(frozen=True, order=True)
class Diagnostic:
    start: float
    end: float
    speaker: str
    rule: str
    severity: str
    message: str = field(compare=False)
    file: str = field(default="", compare=False)

    def __post_init__(self):
        if self.rule not in RULES:
            raise ValueError(f"unknown rule id {self.rule!r}")

    def line(self) -> str:
        return (f"{self.file}:{self.start:.3f}-{self.end:.3f}:{self.severity}:"
                f"{self.rule}:{self.speaker}: {self.message}")


def _diag(rule, severity, start, end, speaker, message, label: LabelExpr | None = None,
          file: str = "") -> Diagnostic:
    if label is not None and label.uncertain:
        severity = _DOWNGRADE[severity]
    return Diagnostic(start, end, speaker, rule, severity, message, file)


def sort_diagnostics(diags: Iterable[Diagnostic]) -> list[Diagnostic]:
    return sorted(diags, key=lambda d: (d.start, d.end, d.speaker, d.rule, d.message))


# -- forward context ----------------------------------------------------------

SAME = "same"
OTHER = "other"

IPU_EXPECT = {
    "hold": SAME, "incomplete-hold": SAME,
    "change": OTHER, "question": OTHER, "trail-off": OTHER, "self-interruption": OTHER,
    "hrt": None,
}

PCOMP_EXPECT = {
    "hold": SAME, "cont": SAME, "part": SAME, "hes": SAME, "q-part": SAME, "disruption": SAME,
    "change": OTHER, "question": OTHER, "incomplete": OTHER,
    "hrt": None, "coll": None,
}


@dataclass(frozen=True)
class _Event:
    start: float
    end: float
    who: int
    item: LabeledInterval

    @property
    def label(self) -> LabelExpr:
        return self.item.label

    @property
    def is_hrt(self) -> bool:
        return self.item.label.parts == ("hrt",)


def _timeline(conv: Conversation, layer: Layer) -> list[_Event]:
    events = []
    for who, spk in enumerate(conv.speakers):
        for li in labeled_intervals(spk.layer(layer), layer):
            if li.label is not None:
                events.append(_Event(li.start, li.end, who, li))
    events.sort(key=lambda e: (e.start, e.end, e.who))
    return events


def _expectation(label: LabelExpr, table: dict) -> str | None:
    """SAME or OTHER when every part demands it; None when unconstrained."""
    kinds = {table.get(p) for p in label.parts}
    if None in kinds or len(kinds) != 1:
        return None
    return kinds.pop()


def _forward_context(conv: Conversation, layer: Layer, table: dict,
                     rule_same: str, rule_other: str, check_questions: bool,
                     file: str = "") -> list[Diagnostic]:
    events = _timeline(conv, layer)
    ids = conv.speaker_ids
    out = []
    for k, ev in enumerate(events):
        expect = _expectation(ev.label, table)
        if expect is None:
            continue
        nxt = None
        heard_other = False
        for j in range(k + 1, len(events)):
            later = events[j]
            if later.who != ev.who:
                heard_other = True
            if later.is_hrt:
                continue
            nxt = later
            break
        if nxt is None:
            continue
        spk = ids[ev.who]
        text = ev.item.text.strip()
        if expect == SAME and nxt.who != ev.who:
            out.append(_diag(rule_same, WARNING, ev.start, ev.end, spk,
                             f"{text!r} expects the same speaker to continue, but "
                             f"{ids[nxt.who]} speaks next at {nxt.start:.3f}", ev.label, file))
        elif expect == OTHER and nxt.who == ev.who:
            if check_questions and "question" in ev.label.parts and not heard_other:
                out.append(_diag("IPU-R3", WARNING, ev.start, ev.end, spk,
                                 f"{text!r} gets no response from the other speaker before "
                                 f"{spk} continues at {nxt.start:.3f}", ev.label, file))
            else:
                out.append(_diag(rule_other, WARNING, ev.start, ev.end, spk,
                                 f"{text!r} expects a speaker change, but {spk} "
                                 f"continues at {nxt.start:.3f}", ev.label, file))
    return out


def _label_errors(conv: Conversation, layer: Layer, rule: str, file: str) -> list[Diagnostic]:
    out = []
    for spk in conv.speakers:
        for li in labeled_intervals(spk.layer(layer), layer):
            if li.error is None:
                continue
            if isinstance(li.error, LoneColl):
                uncertain = li.text.strip().endswith("@")
                sev = WARNING if uncertain else ERROR
                out.append(Diagnostic(li.start, li.end, spk.speaker, "PCOMP-COLL", sev,
                                      str(li.error), file))
            else:
                out.append(Diagnostic(li.start, li.end, spk.speaker, rule, ERROR,
                                      str(li.error), file))
    return out


def lint_ipu_forward_context(conv: Conversation, lapse: float = DEFAULT_LAPSE,
                             file: str = "") -> list[Diagnostic]:
    """Rules IPU-R1..R4 plus IPU-LABEL errors."""
    out = _label_errors(conv, Layer.IPU, "IPU-LABEL", file)
    out += _forward_context(conv, Layer.IPU, IPU_EXPECT, "IPU-R1", "IPU-R2", True, file)
    out += _lapses(conv, lapse, file)
    return sort_diagnostics(out)


def _lapses(conv: Conversation, lapse: float, file: str) -> list[Diagnostic]:
    events = _timeline(conv, Layer.IPU)
    starts = [e.start for e in events]
    running_max = []
    m = float("-inf")
    for e in events:
        m = max(m, e.end)
        running_max.append(m)
    out = []
    for k, ev in enumerate(events):
        if not ev.is_hrt:
            continue
        # is anyone still talking when the hrt ends?
        hi = bisect.bisect_right(starts, ev.end)
        if k > 0 and running_max[k - 1] > ev.end + EPS:
            continue
        if any(events[j].end > ev.end + EPS for j in range(k + 1, hi)):
            continue
        if hi >= len(events):
            continue
        gap = events[hi].start - ev.end
        if gap > lapse + EPS:
            out.append(_diag("IPU-R4", WARNING, ev.start, ev.end, conv.speaker_ids[ev.who],
                             f"hrt followed by {gap:.3f} s without speech", ev.label, file))
    return out


# -- IPU segmentation ---------------------------------------------------------

def lint_ipu_segmentation(conv: Conversation, classifier: TokenClassifier | None = None,
                          threshold: float = DEFAULT_THRESHOLD,
                          tolerance: float = DEFAULT_TOLERANCE,
                          include: Sequence[str] = (BREATH, SMACK),
                          file: str = "") -> list[Diagnostic]:
    """Rules IPU-SEG-GAP, IPU-SEG-SPAN and IPU-SEG-WORD."""
    classifier = classifier or TokenClassifier()
    out = []
    for spk in conv.speakers:
        if spk.ipu is None:
            continue
        items = labeled_intervals(spk.ipu, Layer.IPU)
        for prev, nxt in zip(items, items[1:]):
            gap = nxt.start - prev.end
            if gap < threshold - EPS:
                if nxt.label is not None and "hrt" in nxt.label.parts:
                    continue
                out.append(_diag("IPU-SEG-GAP", WARNING, prev.end, nxt.start, spk.speaker,
                                 f"IPUs {prev.text.strip()!r} and {nxt.text.strip()!r} are only "
                                 f"{gap:.3f} s apart (threshold {threshold:.3f} s)",
                                 nxt.label, file))
        if spk.words is None:
            continue
        starts = [li.start for li in items]
        for gap in speech_gaps(spk.words, classifier, include):
            if gap.duration < threshold - EPS:
                continue
            i = bisect.bisect_right(starts, gap.start) - 1
            if i < 0:
                continue
            li = items[i]
            if gap.start >= li.start + tolerance - EPS and gap.end <= li.end - tolerance + EPS:
                out.append(_diag("IPU-SEG-SPAN", WARNING, li.start, li.end, spk.speaker,
                                 f"IPU contains a {gap.duration:.3f} s pause at "
                                 f"{gap.start:.3f}-{gap.end:.3f}", li.label, file))
        for li in items:
            for t in (li.start, li.end):
                tok = spk.words.interval_at(t)
                if tok is None or classifier.classify(tok.text) != WORD:
                    continue
                if tok.xmin + tolerance < t < tok.xmax - tolerance:
                    out.append(_diag("IPU-SEG-WORD", WARNING, li.start, li.end, spk.speaker,
                                     f"IPU boundary {t:.3f} cuts word {tok.text.strip()!r} "
                                     f"[{tok.xmin:.3f}, {tok.xmax:.3f}]", li.label, file))
    return sort_diagnostics(out)


# -- PCOMP --------------------------------------------------------------------

def lint_pcomp(conv: Conversation, classifier: TokenClassifier | None = None,
               tolerance: float = DEFAULT_TOLERANCE, file: str = "") -> list[Diagnostic]:
    """Rules PCOMP-LABEL, PCOMP-COLL, PCOMP-EDGE, PCOMP-R1 and PCOMP-R2."""
    classifier = classifier or TokenClassifier()
    out = _label_errors(conv, Layer.PCOMP, "PCOMP-LABEL", file)
    for spk in conv.speakers:
        if spk.pcomp is None or spk.words is None:
            continue
        words = [iv for iv in spk.words.intervals if classifier.classify(iv.text) == WORD]
        onsets = [w.xmin for w in words]
        offsets = [w.xmax for w in words]
        prev_end = None
        for li in labeled_intervals(spk.pcomp, Layer.PCOMP):
            for t, edges, what in ((li.start, onsets, "start"), (li.end, offsets, "end")):
                if _near(edges, t, tolerance):
                    continue
                # inside a turn an interval starts where the previous one ended,
                # so a pause or breath may lie inside it
                if what == "start" and prev_end is not None and abs(t - prev_end) <= EPS:
                    continue
                tok = spk.words.interval_at(t)
                where = "outside the word tier"
                if tok is not None:
                    cls = classifier.classify(tok.text)
                    where = f"inside {cls} {tok.text.strip()!r}" if tok.text.strip() else f"inside {cls}"
                out.append(_diag("PCOMP-EDGE", WARNING, li.start, li.end, spk.speaker,
                                 f"PCOMP {what} {t:.3f} is not at a word "
                                 f"{'onset' if what == 'start' else 'offset'} ({where})",
                                 li.label, file))
            prev_end = li.end
    out += _forward_context(conv, Layer.PCOMP, PCOMP_EXPECT, "PCOMP-R1", "PCOMP-R2", False, file)
    return sort_diagnostics(out)


def _near(sorted_times: list[float], t: float, tol: float) -> bool:
    i = bisect.bisect_left(sorted_times, t - tol - EPS)
    return i < len(sorted_times) and sorted_times[i] <= t + tol + EPS


def lint_conversation(conv: Conversation, classifier: TokenClassifier | None = None,
                      threshold: float = DEFAULT_THRESHOLD, tolerance: float = DEFAULT_TOLERANCE,
                      lapse: float = DEFAULT_LAPSE, file: str = "") -> list[Diagnostic]:
    """All rules that apply to the tiers present in ``conv``."""
    out = []
    if any(s.ipu is not None for s in conv.speakers):
        out += lint_ipu_forward_context(conv, lapse, file)
        out += lint_ipu_segmentation(conv, classifier, threshold, tolerance, file=file)
    if any(s.pcomp is not None for s in conv.speakers):
        out += lint_pcomp(conv, classifier, tolerance, file)
    return sort_diagnostics(out)


def count_by_severity(diags: Iterable[Diagnostic]) -> Counter:
    return Counter(d.severity for d in diags)


def diagnostics_text(diags: Iterable[Diagnostic]) -> str:
    return "".join(d.line() + "\n" for d in diags)


def diagnostics_csv(diags: Iterable[Diagnostic]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["file", "start", "end", "speaker", "severity", "rule", "message"])
    for d in diags:
        w.writerow([d.file, f"{d.start:.6f}", f"{d.end:.6f}", d.speaker, d.severity, d.rule,
                    d.message])
    return buf.getvalue()


# -- cross-layer --------------------------------------------------------------

COINCIDENT = "coincident"
INSIDE_PCOMP = "inside-pcomp"
AT_IPU = "at-ipu-boundary"
IPU_INTERNAL = "ipu-internal"
OUTSIDE = "outside"


@dataclass(frozen=True)
class BoundaryInstance:
    speaker: str
    time: float
    kind: str  # "ipu-end" or "pcomp-end"
    status: str


@dataclass
class CrossLayerReport:
    instances: list[BoundaryInstance] = field(default_factory=list)

    def counts(self, kind: str, speaker: str | None = None) -> Counter:
        return Counter(b.status for b in self.instances
                       if b.kind == kind and (speaker is None or b.speaker == speaker))

    def proportion(self, kind: str, status: str, speaker: str | None = None) -> float:
        c = self.counts(kind, speaker)
        total = sum(c.values())
        return c[status] / total if total else float("nan")

    def table(self) -> list[tuple[str, str, str, int]]:
        rows = Counter((b.speaker, b.kind, b.status) for b in self.instances)
        return [(s, k, st, n) for (s, k, st), n in sorted(rows.items())]


def _inside(spans: list[tuple[float, float]], starts: list[float], t: float, tol: float) -> bool:
    i = bisect.bisect_right(starts, t) - 1
    return i >= 0 and spans[i][0] + tol < t < spans[i][1] - tol


def cross_layer_report(conv: Conversation, tolerance: float = DEFAULT_TOLERANCE) -> CrossLayerReport:
    """Where IPU ends meet PCOMP boundaries and vice versa.

    Each IPU end is ``coincident`` (a PCOMP boundary lies within tolerance),
    ``inside-pcomp`` (it falls inside a PCOMP interval) or ``outside``.  Each
    PCOMP end is ``at-ipu-boundary``, ``ipu-internal`` or ``outside``.
    """
    report = CrossLayerReport()
    for spk in conv.speakers:
        if spk.ipu is None or spk.pcomp is None:
            continue
        ipus = [(li.start, li.end) for li in labeled_intervals(spk.ipu, Layer.IPU)]
        pcomps = [(li.start, li.end) for li in labeled_intervals(spk.pcomp, Layer.PCOMP)]
        p_bounds = sorted({t for span in pcomps for t in span})
        i_bounds = sorted({t for span in ipus for t in span})
        p_starts = [a for a, _ in pcomps]
        i_starts = [a for a, _ in ipus]
        for _, end in ipus:
            if _near(p_bounds, end, tolerance):
                status = COINCIDENT
            elif _inside(pcomps, p_starts, end, tolerance):
                status = INSIDE_PCOMP
            else:
                status = OUTSIDE
            report.instances.append(BoundaryInstance(spk.speaker, end, "ipu-end", status))
        for _, end in pcomps:
            if _near(i_bounds, end, tolerance):
                status = AT_IPU
            elif _inside(ipus, i_starts, end, tolerance):
                status = IPU_INTERNAL
            else:
                status = OUTSIDE
            report.instances.append(BoundaryInstance(spk.speaker, end, "pcomp-end", status))
    return report
