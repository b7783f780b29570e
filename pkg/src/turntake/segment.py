"""Timing-based segmentation of word tiers into Inter-Pausal Units, plus
pause, overlap and turn-transition extraction."""

from __future__ import annotations

import fnmatch
import re
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

from .schema import LabelExpr, Layer, parse_token
from .textgrid import EPS, Interval, Tier

WORD = "word"
SILENCE = "silence"
BREATH = "breath"
SMACK = "smack"
LAUGHTER = "laughter"
NOISE = "noise"
TOKEN_CLASSES = (WORD, SILENCE, BREATH, SMACK, LAUGHTER, NOISE)

DEFAULT_THRESHOLD = 0.150

DEFAULT_MARKERS: dict[str, str] = {
    "": SILENCE,
    "<sil>": SILENCE,
    "<p:>": SILENCE,
    "<pause>": SILENCE,
    "<breath>": BREATH,
    "<breathing>": BREATH,
    "<inbreath>": BREATH,
    "<outbreath>": BREATH,
    "<inhale>": BREATH,
    "<exhale>": BREATH,
    "<breath-in>": BREATH,
    "<breath-out>": BREATH,
    "<smack>": SMACK,
    "<laugh>": LAUGHTER,
    "<laughter>": LAUGHTER,
    "<noise>": NOISE,
    "<cough>": NOISE,
    "<glottal>": NOISE,
}


class ClassifierError(ValueError):
    pass


@dataclass
class TokenClassifier:
    """Maps orthographic-tier interval texts to token classes.

    Exact keys are tried first, then glob patterns in insertion order.  Any
    other ``<...>`` marker is an error (it would otherwise be silently
    counted as a word); all remaining text is a word.
    """

    exact: dict[str, str] = field(default_factory=lambda: dict(DEFAULT_MARKERS))
    patterns: list[tuple[str, str]] = field(default_factory=list)

    def __post_init__(self):
        for cls in list(self.exact.values()) + [c for _, c in self.patterns]:
            if cls not in TOKEN_CLASSES:
                raise ClassifierError(f"unknown token class {cls!r}")
        self._compiled = [(re.compile(fnmatch.translate(p)), c) for p, c in self.patterns]

    def classify(self, text: str) -> str:
        t = text.strip()
        if t in self.exact:
            return self.exact[t]
        for rx, cls in self._compiled:
            if rx.match(t):
                return cls
        if t.startswith("<") and t.endswith(">"):
            raise ClassifierError(f"unclassifiable marker {text!r}")
        return WORD

    @classmethod
    def from_lines(cls, lines: Iterable[str], extend_defaults: bool = True) -> "TokenClassifier":
        """Read ``key<TAB>class`` lines.  Keys containing glob characters are
        patterns; lines starting with ``#`` are comments."""
        exact = dict(DEFAULT_MARKERS) if extend_defaults else {}
        patterns = []
        for n, line in enumerate(lines, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            if "\t" not in line:
                raise ClassifierError(f"line {n}: expected key<TAB>class, got {line!r}")
            key, token_class = (x.strip() for x in line.rsplit("\t", 1))
            if token_class not in TOKEN_CLASSES:
                raise ClassifierError(f"line {n}: unknown token class {token_class!r}")
            if any(ch in key for ch in "*?["):
                patterns.append((key, token_class))
            else:
                exact[key] = token_class
        return cls(exact, patterns)

    @classmethod
    def from_file(cls, path, extend_defaults: bool = True) -> "TokenClassifier":
        with open(path, encoding="utf-8") as fh:
            return cls.from_lines(fh, extend_defaults)


class IpuProposal(NamedTuple):
    start: float
    end: float
    first: int
    last: int  # inclusive index into the source tier

    @property
    def token_indices(self) -> range:
        return range(self.first, self.last + 1)

    @property
    def duration(self) -> float:
        return self.end - self.start


class Pause(NamedTuple):
    start: float
    end: float
    duration: float


@dataclass(frozen=True)
class TransitionOffset:
    from_speaker: str
    to_speaker: str
    offset: float
    at: float

    @property
    def overlap(self) -> bool:
        return self.offset < 0


def propose_ipus(word_tier: Tier, classifier: TokenClassifier | None = None,
                 threshold: float = DEFAULT_THRESHOLD, *,
                 include: Iterable[str] = (BREATH, SMACK),
                 orphan_breaths: str = "right") -> list[IpuProposal]:
    """Group the tokens of ``word_tier`` into IPU proposals.

    Speech tokens (words and the ``include`` classes) separated by a pause of
    at least ``threshold`` seconds start a new IPU.  A pause is a maximal run
    of non-speech tokens; it counts only if it contains at least one silence
    interval, and then laughter/noise inside it add to its length.

    Groups containing no word (a breath between two long pauses) are
    attached to the next group (``orphan_breaths="right"``), the previous
    one (``"left"``), or kept as their own proposal (``"keep"``).  If there
    is no group to attach to on the requested side the other side is used;
    a tier without words yields no proposals.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if orphan_breaths not in ("right", "left", "keep"):
        raise ValueError(f"orphan_breaths must be right, left or keep, got {orphan_breaths!r}")
    classifier = classifier or TokenClassifier()
    include = frozenset(include) - {WORD, SILENCE}
    speech = include | {WORD}

    classes = [classifier.classify(iv.text) for iv in word_tier.intervals]

    # groups of [first, last, has_word]
    groups: list[list] = []
    pending_gap = 0.0
    pending_silence = False
    for i, (iv, cls) in enumerate(zip(word_tier.intervals, classes)):
        if cls in speech:
            split = pending_silence and pending_gap >= threshold - EPS
            if not groups or split:
                groups.append([i, i, cls == WORD])
            else:
                groups[-1][1] = i
                groups[-1][2] = groups[-1][2] or cls == WORD
            pending_gap = 0.0
            pending_silence = False
        else:
            pending_gap += iv.duration
            pending_silence = pending_silence or cls == SILENCE

    if not any(g[2] for g in groups):
        return []

    if orphan_breaths != "keep":
        merged: list[list] = []
        carry = None
        for g in groups:
            if not g[2]:
                if orphan_breaths == "left" and merged:
                    merged[-1][1] = g[1]
                elif carry is None:
                    carry = g[0]
                continue
            if carry is not None:
                g = [carry, g[1], True]
                carry = None
            merged.append(g)
        if carry is not None:
            merged[-1][1] = groups[-1][1]
        groups = merged

    ivs = word_tier.intervals
    return [IpuProposal(ivs[a].xmin, ivs[b].xmax, a, b) for a, b, _ in groups]


def proposals_tier(name: str, word_tier: Tier, proposals: Sequence[IpuProposal],
                   text: str = "ipu") -> Tier:
    """Render proposals as a contiguous interval tier on ``word_tier``'s domain."""
    return Tier.from_segments(name, word_tier.xmin, word_tier.xmax,
                              [(p.start, p.end, text) for p in proposals])


def pauses(tier: Tier, classifier: TokenClassifier | None = None) -> list[Pause]:
    """Maximal runs of silence-class intervals."""
    classifier = classifier or TokenClassifier()
    out: list[Pause] = []
    start = end = None
    for iv in tier.intervals:
        if classifier.classify(iv.text) == SILENCE:
            if start is None:
                start = iv.xmin
            end = iv.xmax
        elif start is not None:
            out.append(Pause(start, end, end - start))
            start = None
    if start is not None:
        out.append(Pause(start, end, end - start))
    return out


def speech_gaps(tier: Tier, classifier: TokenClassifier | None = None,
                include: Iterable[str] = (BREATH, SMACK)) -> list[Pause]:
    """Pauses as the IPU rule sees them: maximal runs of non-speech tokens
    that contain at least one silence interval, laughter/noise included in
    the duration."""
    classifier = classifier or TokenClassifier()
    speech = (frozenset(include) - {SILENCE}) | {WORD}
    out: list[Pause] = []
    start = end = None
    has_silence = False
    for iv in tier.intervals:
        cls = classifier.classify(iv.text)
        if cls in speech:
            if start is not None and has_silence:
                out.append(Pause(start, end, end - start))
            start, has_silence = None, False
            continue
        if start is None:
            start = iv.xmin
        end = iv.xmax
        has_silence = has_silence or cls == SILENCE
    if start is not None and has_silence:
        out.append(Pause(start, end, end - start))
    return out


def _span(x) -> tuple[float, float]:
    if isinstance(x, Interval):
        return x.xmin, x.xmax
    if hasattr(x, "start") and hasattr(x, "end"):
        return x.start, x.end
    a, b = x[0], x[1]
    return a, b


def overlaps(a: Iterable, b: Iterable) -> list[tuple[float, float]]:
    """Intersections of two ordered, internally disjoint span lists.

    Spans may be :class:`Interval`, :class:`IpuProposal` or ``(start, end)``
    pairs.  Touching result segments are merged.
    """
    sa = [_span(x) for x in a]
    sb = [_span(x) for x in b]
    out: list[tuple[float, float]] = []
    i = j = 0
    while i < len(sa) and j < len(sb):
        lo = max(sa[i][0], sb[j][0])
        hi = min(sa[i][1], sb[j][1])
        if hi > lo + EPS:
            if out and abs(out[-1][1] - lo) <= EPS:
                out[-1] = (out[-1][0], hi)
            else:
                out.append((lo, hi))
        if sa[i][1] < sb[j][1]:
            i += 1
        else:
            j += 1
    return out


TURN_YIELDING_IPU = frozenset({"change", "question", "trail-off", "self-interruption"})


def _as_label(x) -> LabelExpr | None:
    if x is None or isinstance(x, LabelExpr):
        return x
    lab = parse_token(Layer.IPU, x)
    return lab or None


def transfer_offsets(ipus_a: Sequence, ipus_b: Sequence,
                     labels_a: Sequence, labels_b: Sequence,
                     speakers: tuple[str, str] = ("A", "B")) -> list[TransitionOffset]:
    """Timing of turn transitions between two speakers.

    For every IPU carrying a turn-yielding label whose next non-hrt speech
    (in start-time order) comes from the other speaker, emit
    ``next.start - prev.end``; negative values are overlaps.
    """
    events = []
    for who, ipus, labels in ((0, ipus_a, labels_a), (1, ipus_b, labels_b)):
        if len(ipus) != len(labels):
            raise ValueError("each IPU needs exactly one label")
        for ipu, lab in zip(ipus, labels):
            s, e = _span(ipu)
            events.append((s, e, who, _as_label(lab)))
    events.sort(key=lambda ev: (ev[0], ev[1], ev[2]))

    out: list[TransitionOffset] = []
    for k, (s, e, who, lab) in enumerate(events):
        if lab is None or not (set(lab.parts) & TURN_YIELDING_IPU):
            continue
        for s2, e2, who2, lab2 in events[k + 1:]:
            if lab2 is not None and lab2.parts == ("hrt",):
                continue
            if who2 != who:
                out.append(TransitionOffset(speakers[who], speakers[who2], s2 - e, e))
            break
    return out
