"""Dyadic conversations assembled from TextGrid tiers.

Tiers are discovered by name: ``ORT-<speaker>`` (orthography/words),
``IPU-<speaker>`` and ``PCOMP-<speaker>``.  A prefix match is anchored at
the start of the name or after a non-alphanumeric character, so
``IPU-003M`` and ``corpus IPU-003M`` both resolve to speaker ``003M`` while
``IPU-auto-003M`` does not.  A tier map overrides discovery per role.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .schema import NON_LABEL, LabelError, LabelExpr, Layer, parse_token
from .textgrid import Interval, TextGrid, Tier, read_textgrid

WORDS = "ORT"
ROLES = (WORDS, Layer.IPU.value, Layer.PCOMP.value)

DEFAULT_TEMPLATES: dict[str, str] = {
    WORDS: "ORT-{speaker}",
    "IPU": "IPU-{speaker}",
    "PCOMP": "PCOMP-{speaker}",
}


class ConversationError(ValueError):
    pass


@dataclass(frozen=True)
class SpeakerTiers:
    speaker: str
    words: Tier | None = None
    ipu: Tier | None = None
    pcomp: Tier | None = None

    def layer(self, layer: Layer | str) -> Tier | None:
        layer = Layer(layer)
        return self.ipu if layer is Layer.IPU else self.pcomp


@dataclass(frozen=True)
class Conversation:
    name: str
    xmin: float
    xmax: float
    speakers: tuple[SpeakerTiers, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "speakers", tuple(self.speakers))

    @property
    def speaker_ids(self) -> list[str]:
        return [s.speaker for s in self.speakers]

    def speaker(self, speaker_id: str) -> SpeakerTiers:
        for s in self.speakers:
            if s.speaker == speaker_id:
                return s
        raise KeyError(speaker_id)

    @property
    def duration(self) -> float:
        return self.xmax - self.xmin

    @classmethod
    def from_textgrid(cls, grid: TextGrid, name: str = "conversation",
                      templates: Mapping[str, str] | None = None,
                      tier_map: Mapping[str, str] | None = None,
                      speakers: Iterable[str] | None = None) -> "Conversation":
        templates = {**DEFAULT_TEMPLATES, **(templates or {})}
        tier_map = dict(tier_map or {})
        by_name = {t.name: t for t in grid.tiers}
        found: dict[str, dict[str, Tier]] = {}

        for role in ROLES:
            rx = _template_regex(templates[role])
            for tier in grid.tiers:
                m = rx.match(tier.name)
                if m:
                    spk = m.group("speaker")
                    if role in found.setdefault(spk, {}):
                        raise ConversationError(
                            f"{name}: two {role} tiers for speaker {spk!r}: "
                            f"{found[spk][role].name!r} and {tier.name!r}")
                    found[spk][role] = tier

        for key, tier_name in tier_map.items():
            role, _, spk = key.partition("-")
            if role not in ROLES or not spk:
                raise ConversationError(f"tier map key {key!r} must look like <ORT|IPU|PCOMP>-<speaker>")
            if tier_name not in by_name:
                raise ConversationError(f"{name}: tier map names missing tier {tier_name!r}")
            found.setdefault(spk, {})[role] = by_name[tier_name]

        ids = list(speakers) if speakers is not None else sorted(
            s for s, roles in found.items() if roles)
        out = []
        for spk in ids:
            roles = found.get(spk, {})
            out.append(SpeakerTiers(spk, roles.get(WORDS), roles.get("IPU"), roles.get("PCOMP")))
        return cls(name, grid.xmin, grid.xmax, tuple(out))

    @classmethod
    def read(cls, path, **kwargs) -> "Conversation":
        path = Path(path)
        return cls.from_textgrid(read_textgrid(path), name=kwargs.pop("name", path.stem), **kwargs)


def _template_regex(template: str) -> re.Pattern:
    if "{speaker}" not in template:
        raise ConversationError(f"tier template {template!r} lacks {{speaker}}")
    head, tail = template.split("{speaker}", 1)
    return re.compile(r"^(?:.*[^0-9A-Za-z])?" + re.escape(head) + r"(?P<speaker>[0-9A-Za-z]+)"
                      + re.escape(tail) + "$")


@dataclass(frozen=True)
class LabeledInterval:
    """An annotated interval with its parsed label (or the parse error)."""

    interval: Interval
    label: LabelExpr | None
    error: LabelError | None = None

    @property
    def start(self) -> float:
        return self.interval.xmin

    @property
    def end(self) -> float:
        return self.interval.xmax

    @property
    def text(self) -> str:
        return self.interval.text


def labeled_intervals(tier: Tier | None, layer: Layer | str) -> list[LabeledInterval]:
    """Every non-marker interval of ``tier`` with its parsed label.

    Intervals whose text fails to parse are kept with ``label=None`` and the
    error attached, so callers can report them.
    """
    if tier is None:
        return []
    out = []
    for iv in tier.intervals:
        try:
            lab = parse_token(layer, iv.text)
        except LabelError as exc:
            out.append(LabeledInterval(iv, None, exc))
            continue
        if lab is NON_LABEL:
            continue
        out.append(LabeledInterval(iv, lab))
    return out


def labels(tier: Tier | None, layer: Layer | str) -> list[LabeledInterval]:
    """Like :func:`labeled_intervals` but raising on the first bad label."""
    out = labeled_intervals(tier, layer)
    for li in out:
        if li.error is not None:
            raise li.error
    return out
