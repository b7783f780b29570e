"""Synthetic dyadic conversations for tests, benchmarks and demos.

:func:`generate_conversation` produces word, IPU and PCOMP tiers that
satisfy every lint rule by construction: IPUs are bounded by pauses of at
least the threshold, holds are followed by the same speaker, turn-yielding
labels by the other speaker, and hearer responses sit inside the other
speaker's pauses.  The remaining builders script specific shapes.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .conversation import Conversation, SpeakerTiers
from .schema import Layer, inventory
from .textgrid import TextGrid, Tier

VOCABULARY = (
    "ja", "also", "und", "dann", "das", "ist", "war", "ich", "du", "wir", "nicht", "schon",
    "genau", "eigentlich", "irgendwie", "gestern", "Wohnung", "Arbeit", "Urlaub", "Kinder",
    "quote\"d", "sagt", "hat", "gemacht", "gesehen", "weiß",
)
HRT_WORDS = ("mhm", "ja", "okay", "aha", "genau")


@dataclass(frozen=True)
class SimulationParams:
    duration: float = 300.0
    turn_ipus: tuple[int, int] = (1, 4)
    words_per_ipu: tuple[int, int] = (1, 7)
    word_dur: tuple[float, float] = (0.15, 0.45)
    word_gap: tuple[float, float] = (0.02, 0.09)  # below any sane threshold
    pause: tuple[float, float] = (0.3, 1.4)
    turn_gap: tuple[float, float] = (0.2, 1.2)
    p_word_gap: float = 0.3
    p_hrt: float = 0.45
    p_breath: float = 0.25
    p_noise: float = 0.1
    p_combined: float = 0.06
    p_uncertain: float = 0.03


# an hour of talk with about 3000 annotated IPU and PCOMP intervals
HOUR = SimulationParams(duration=3600.0, words_per_ipu=(4, 14), word_dur=(0.2, 0.5),
                        pause=(0.5, 1.8), turn_gap=(0.3, 1.5))


def _ms(x: float) -> float:
    return round(x, 3)


class _Builder:
    def __init__(self, n_speakers: int = 2):
        self.words = [[] for _ in range(n_speakers)]
        self.ipus = [[] for _ in range(n_speakers)]
        self.pcomps = [[] for _ in range(n_speakers)]

    def conversation(self, name: str, speakers: Sequence[str], duration: float) -> Conversation:
        out = []
        for k, spk in enumerate(speakers):
            out.append(SpeakerTiers(
                spk,
                Tier.from_segments(f"ORT-{spk}", 0.0, duration, self.words[k]),
                Tier.from_segments(f"IPU-{spk}", 0.0, duration, self.ipus[k]),
                Tier.from_segments(f"PCOMP-{spk}", 0.0, duration, self.pcomps[k]),
            ))
        return Conversation(name, 0.0, duration, tuple(out))


# label pools; combined labels keep the same forward expectation
IPU_HOLDING = ("hold", "hold", "hold", "incomplete-hold", "incomplete-hold")
IPU_YIELDING = ("change", "change", "change", "question", "trail-off", "self-interruption")
IPU_HOLDING_COMBINED = ("hold_incomplete-hold",)
IPU_YIELDING_COMBINED = ("change_question", "change_self-interruption", "change_hrt")
PCOMP_MEDIAL = ("hold", "hold", "hold", "cont", "cont", "part", "q-part", "hes", "disruption")
PCOMP_FINAL = ("change", "change", "question", "incomplete")
PCOMP_MEDIAL_COMBINED = ("cont_hold", "coll_hold", "coll_cont", "hes_hold")
PCOMP_FINAL_COMBINED = ("change_question", "incomplete_question", "change_coll", "change_hrt")


def _pick(rng: random.Random, p: SimulationParams, plain: Sequence[str],
          combined: Sequence[str]) -> str:
    label = rng.choice(combined) if rng.random() < p.p_combined else rng.choice(plain)
    if rng.random() < p.p_uncertain:
        label += "@"
    return label


def generate_conversation(seed: int = 0, name: str | None = None,
                          speakers: tuple[str, str] = ("A", "B"),
                          params: SimulationParams | None = None) -> Conversation:
    """A lint-clean two-speaker conversation of ``params.duration`` seconds."""
    p = params or SimulationParams()
    rng = random.Random(seed)
    b = _Builder()
    longest_ipu = 0.4 + p.words_per_ipu[1] * (p.word_dur[1] + p.word_gap[1])
    end_limit = p.duration - longest_ipu - 1.0
    t = _ms(rng.uniform(0.3, 1.0))
    who = rng.randrange(2)

    # start of the PCOMP interval still open in the current turn
    open_pcomp: list = [None]

    def medial() -> str:
        return _pick(rng, p, PCOMP_MEDIAL, PCOMP_MEDIAL_COMBINED)

    def place_ipu(k: int, start: float, final: bool) -> float:
        """Words of one IPU by speaker k from ``start``; returns its end."""
        tokens = []
        cur = start
        if rng.random() < p.p_breath:
            d = _ms(rng.uniform(0.15, 0.4))
            tokens.append((cur, _ms(cur + d), "<breath>"))
            cur = _ms(cur + d)
        n = rng.randint(*p.words_per_ipu)
        word_spans = []
        for i in range(n):
            if i and rng.random() < p.p_word_gap:
                cur = _ms(cur + rng.uniform(*p.word_gap))
            d = _ms(rng.uniform(*p.word_dur))
            tokens.append((cur, _ms(cur + d), rng.choice(VOCABULARY)))
            word_spans.append((cur, _ms(cur + d)))
            cur = _ms(cur + d)
        b.words[k].extend(tokens)
        label = _pick(rng, p, IPU_YIELDING, IPU_YIELDING_COMBINED) if final else \
            _pick(rng, p, IPU_HOLDING, IPU_HOLDING_COMBINED)
        b.ipus[k].append((start, cur, label))

        # PCOMP intervals: the first of a turn starts at the first word onset
        # (never at a breath), later ones where the previous one ended, and
        # each ends at a word offset
        if open_pcomp[0] is None:
            open_pcomp[0] = word_spans[0][0]
        n_cuts = rng.randint(0, min(2, n - 1))
        for idx in sorted(rng.sample(range(n - 1), n_cuts)):
            b.pcomps[k].append((open_pcomp[0], word_spans[idx][1], medial()))
            open_pcomp[0] = word_spans[idx][1]
        if final:
            b.pcomps[k].append((open_pcomp[0], cur,
                                _pick(rng, p, PCOMP_FINAL, PCOMP_FINAL_COMBINED)))
            open_pcomp[0] = None
        elif label.rstrip("@") != "incomplete-hold":
            b.pcomps[k].append((open_pcomp[0], cur, medial()))
            open_pcomp[0] = cur
        # after incomplete-hold the interval stays open across the pause
        return cur

    def place_hrt(k: int, lo: float, hi: float) -> None:
        d = _ms(rng.uniform(0.15, 0.35))
        if hi - lo < d + 0.1:
            return
        s = _ms(rng.uniform(lo + 0.05, hi - d - 0.05))
        e = _ms(s + d)
        b.words[k].append((s, e, rng.choice(HRT_WORDS)))
        lab = "hrt@" if rng.random() < p.p_uncertain else "hrt"
        b.ipus[k].append((s, e, lab))
        b.pcomps[k].append((s, e, lab))

    def place_pause(k: int, start: float, length: float) -> float:
        end = _ms(start + length)
        if length > 0.6 and rng.random() < p.p_noise:
            mid = _ms(start + length / 2)
            b.words[k].append((mid, _ms(mid + 0.1), "<noise>"))
        return end

    while t < end_limit:
        n_ipus = rng.randint(*p.turn_ipus)
        for i in range(n_ipus):
            final = i == n_ipus - 1
            t = place_ipu(who, t, final)
            if final:
                break
            if t >= end_limit:
                if open_pcomp[0] is not None and open_pcomp[0] < t:
                    b.pcomps[who].append((open_pcomp[0], t, medial()))
                break
            pause = _ms(rng.uniform(*p.pause))
            if rng.random() < p.p_hrt:
                place_hrt(1 - who, t, t + pause)
            t = place_pause(who, t, pause)
        open_pcomp[0] = None
        t = _ms(t + rng.uniform(*p.turn_gap))
        who = 1 - who

    # an IPU may have been cut short of its turn-final label; nothing checks
    # the label of the very last event, so the tiers stay consistent
    for k in range(2):
        b.words[k].sort()
        b.ipus[k].sort()
        b.pcomps[k].sort()
    return b.conversation(name or f"sim{seed:04d}", speakers, p.duration)


def generate_corpus(n: int, seed: int = 0, params: SimulationParams | None = None,
                    ) -> list[Conversation]:
    out = []
    for i in range(n):
        spk = (f"{2 * i + 1:03d}M", f"{2 * i + 2:03d}F")
        out.append(generate_conversation(seed * 100003 + i, f"{spk[0]}{spk[1]}", spk, params))
    return out


def to_textgrid(conv: Conversation) -> TextGrid:
    tiers = []
    for spk in conv.speakers:
        tiers += [t for t in (spk.words, spk.ipu, spk.pcomp) if t is not None]
    return TextGrid(conv.xmin, conv.xmax, tuple(tiers))


# -- scripted fixtures --------------------------------------------------------------

def conversation_from_events(name: str, duration: float, speakers: Sequence[str],
                             events: Iterable[tuple]) -> Conversation:
    """Build tiers from ``(speaker, start, end, ipu_label, pcomp_label)``
    events.  Each event is one word on the ORT tier; ``None`` labels leave
    the layer empty for that event."""
    b = _Builder(len(speakers))
    index = {s: i for i, s in enumerate(speakers)}
    for spk, s, e, ipu, pcomp in sorted(events, key=lambda ev: (ev[1], ev[0])):
        k = index[spk]
        b.words[k].append((s, e, "word"))
        if ipu is not None:
            b.ipus[k].append((s, e, ipu))
        if pcomp is not None:
            b.pcomps[k].append((s, e, pcomp))
    return b.conversation(name, speakers, duration)


def conversation_from_counts(name: str, layer: Layer | str,
                             counts: Mapping[str, Mapping[str, int]],
                             unit: float = 1.0, gap: float = 0.5,
                             seed: int = 0) -> Conversation:
    """Sequential intervals per speaker whose label multiset is ``counts``.

    Order is shuffled deterministically; only the distribution matters.
    """
    layer = Layer(layer)
    rng = random.Random(seed)
    speakers = list(counts)
    seqs = []
    for spk in speakers:
        labels = [lab for lab, n in counts[spk].items() for _ in range(n)]
        rng.shuffle(labels)
        seqs.append(labels)
    step = unit + gap
    duration = _ms(max((len(s) for s in seqs), default=0) * step * len(speakers) + 1.0)
    events = []
    for k, (spk, labels) in enumerate(zip(speakers, seqs)):
        for i, lab in enumerate(labels):
            s = _ms((i * len(speakers) + k) * step + 0.5)
            e = _ms(s + unit)
            ipu, pcomp = (lab, None) if layer is Layer.IPU else (None, lab)
            events.append((spk, s, e, ipu, pcomp))
    return conversation_from_events(name, duration, speakers, events)


def counts_row(layer: Layer | str, values: Sequence[int | None]) -> dict[str, int]:
    """Pair table-ordered cell values with the layer inventory (blank = 0)."""
    names = [n for n in inventory(layer) if n != "coll"]
    if len(values) != len(names):
        raise ValueError(f"expected {len(names)} values, got {len(values)}")
    return {n: v or 0 for n, v in zip(names, values)}


def dominance_fixture() -> Conversation:
    """One speaker holds the floor while the other backchannels, then the
    roles swap after 300 s.

    Speaker 038F: 41 IPUs, 212 s in total; 039F: 77 IPUs, 105 s.
    """
    ev = []
    t = 1.0
    hrt_b = 0
    for i in range(36):
        d = 7.0 if i == 35 else 5.8
        label = "change" if i == 35 else ("hold", "incomplete-hold", "hold")[i % 3]
        ev.append(("038F", _ms(t), _ms(t + d), label, None))
        t = _ms(t + d)
        pause = 2.3 if i < 35 else 300.5 - t
        for off in ((0.5, 1.3) if i < 24 else (0.5,)):
            ev.append(("039F", _ms(t + off), _ms(t + off + 0.4), "hrt", None))
            hrt_b += 1
        t = _ms(t + pause)
    assert hrt_b == 60
    for i in range(17):
        d = 5.0 if i == 16 else 4.75
        label = "change" if i == 16 else ("hold", "hold", "incomplete-hold", "question")[i % 4]
        ev.append(("039F", _ms(t), _ms(t + d), label, None))
        t = _ms(t + d)
        if i < 5:
            ev.append(("038F", _ms(t + 0.3), _ms(t + 0.7), "hrt", None))
        t = _ms(t + 1.2)
    return conversation_from_events("038F039F", _ms(t + 3.0), ("038F", "039F"), ev)


def question_run_fixture() -> Conversation:
    """A 100 s stretch (240 to 340 s) where 008M asks a run of questions,
    each answered briefly by 028F around 270 s, framed by ordinary talk."""
    ev = [
        ("008M", 241.0, 246.2, "hold", "hold"),
        ("028F", 243.0, 243.4, "hrt", "hrt"),
        ("008M", 246.8, 250.1, "change", "change"),
        ("028F", 250.9, 256.0, "hold@", "hold"),
        ("028F", 256.6, 259.9, "change_question", "change_question"),
        ("008M", 260.4, 262.0, "hold_hrt", "hold_hrt"),
    ]
    t = 262.6
    for i in range(6):
        ev.append(("008M", _ms(t), _ms(t + 2.4), "question", "question"))
        ev.append(("028F", _ms(t + 2.8), _ms(t + 3.4), "change", "change"))
        t = _ms(t + 4.0)
    ev += [
        ("008M", _ms(t), _ms(t + 4.0), "incomplete-hold", "cont"),
        ("008M", _ms(t + 4.5), _ms(t + 9.0), "trail-off", "incomplete"),
        ("028F", _ms(t + 9.6), _ms(t + 15.0), "hold", "hold"),
        ("008M", _ms(t + 11.0), _ms(t + 11.3), "hrt", "hrt"),
        ("028F", _ms(t + 15.5), _ms(t + 20.0), "self-interruption", "disruption_incomplete"),
        ("008M", _ms(t + 20.6), _ms(t + 30.0), "change", "change"),
        ("028F", _ms(t + 31.0), _ms(t + 40.0), "hold", "hold"),
        ("028F", _ms(t + 40.5), _ms(t + 48.0), "change", "change"),
        ("008M", _ms(t + 48.5), _ms(t + 52.0), "question@", "question"),
    ]
    return conversation_from_events("008M028F", 345.0, ("008M", "028F"), ev)


NARRATIVE_AGREE = {"hold": 24, "incomplete-hold": 16, "change": 24, "question": 9,
                   "trail-off": 3, "self-interruption": 4, "hrt": 28}
NARRATIVE_PARTIAL = (("change_hrt", "change"), ("hold_hrt", "hrt"), ("change", "change_question"),
                     ("hold", "hold_incomplete-hold"), ("hrt", "change_hrt"))
NARRATIVE_NONE = ((("change", "hold"),) * 3 + (("change", "hrt"),) * 3
                  + (("hold", "incomplete-hold"),) * 2
                  + (("question", "change"), ("trail-off", "self-interruption"), ("hrt", "hold")))


def agreement_fixture(seed: int = 0, splits: int = 11) -> tuple[Tier, Tier]:
    """Two annotations of one recording.

    Both annotators set the same boundaries for 124 IPUs, 108 of which get
    the same label (5 more overlap partially, 11 disagree).  At ``splits``
    further sites annotator A kept one IPU where B set an extra boundary.
    """
    rng = random.Random(seed)
    shared = [(k, k) for k, n in NARRATIVE_AGREE.items() for _ in range(n)]
    shared += list(NARRATIVE_PARTIAL) + list(NARRATIVE_NONE)
    rng.shuffle(shared)
    sites: list = list(shared)
    for _ in range(splits):
        sites.insert(rng.randrange(len(sites) + 1), None)
    a, b = [], []
    t = 1.0
    for site in sites:
        end = _ms(t + 1.2)
        if site is None:
            mid = _ms(t + 0.6)
            a.append((t, end, "hold"))
            b += [(t, mid, "incomplete-hold"), (mid, end, "hold")]
        else:
            a.append((t, end, site[0]))
            b.append((t, end, site[1]))
        t = _ms(t + 2.0)
    return (Tier.from_segments("IPU-A", 0.0, t, a), Tier.from_segments("IPU-B", 0.0, t, b))


__all__ = [
    "HOUR", "SimulationParams", "agreement_fixture", "conversation_from_counts", "conversation_from_events", "counts_row",
    "dominance_fixture", "generate_conversation", "generate_corpus", "question_run_fixture",
    "to_textgrid",
]
