"""Colour-coded per-speaker timelines of labelled intervals (SVG and CSV)."""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence
from xml.sax.saxutils import escape, quoteattr

from .conversation import Conversation, labeled_intervals
from .schema import RESIDUE, Layer, MacroScheme, get_scheme, normalize_for_dynamics
from .textgrid import EPS, format_time

DEFAULT_WIDTH = 1000
DEFAULT_TICK = 10.0


@dataclass(frozen=True)
class DynamicsEntry:
    start: float
    end: float
    category: str

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class DynamicsTrack:
    speaker: str
    entries: tuple[DynamicsEntry, ...] = ()
    palette: str = ""

    def __post_init__(self):
        entries = tuple(sorted(self.entries, key=lambda e: (e.start, e.end)))
        for a, b in zip(entries, entries[1:]):
            if b.start < a.end - EPS:
                raise ValueError(f"track {self.speaker}: entries overlap at {b.start}")
        object.__setattr__(self, "entries", entries)

    def categories(self) -> set[str]:
        return {e.category for e in self.entries}


def build_tracks(conv: Conversation, layer: Layer | str,
                 scheme: MacroScheme | None = None,
                 window: tuple[float, float] | None = None) -> list[DynamicsTrack]:
    """One track per speaker, every labelled interval normalised to a plotting
    category.  With ``window``, intervals are clipped to it and those outside
    are dropped.  Intervals whose label does not parse become Residue."""
    layer = Layer(layer)
    scheme = scheme or get_scheme(layer)
    lo, hi = window if window is not None else (-math.inf, math.inf)
    tracks = []
    for spk in conv.speakers:
        entries = []
        for li in labeled_intervals(spk.layer(layer), layer):
            s, e = max(li.start, lo), min(li.end, hi)
            if e <= s + EPS:
                continue
            cat = RESIDUE if li.label is None else normalize_for_dynamics(li.label, scheme)
            entries.append(DynamicsEntry(s, e, str(cat)))
        tracks.append(DynamicsTrack(spk.speaker, tuple(entries), f"{layer.value}/{scheme.name}"))
    return tracks


# -- palettes -------------------------------------------------------------------

class PaletteError(ValueError):
    pass


_HEX = re.compile(r"^#[0-9A-Fa-f]{6}$")


@dataclass(frozen=True)
class Palette:
    name: str
    colors: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        colors = dict(self.colors)
        for cat, col in colors.items():
            if not _HEX.match(col):
                raise PaletteError(f"palette {self.name}: {cat!r} has invalid colour {col!r}")
        object.__setattr__(self, "colors", colors)

    def color(self, category: str) -> str:
        try:
            return self.colors[category]
        except KeyError:
            raise PaletteError(f"palette {self.name} has no colour for {category!r}") from None

    def order(self, categories: Iterable[str]) -> list[str]:
        cats = set(categories)
        known = [c for c in self.colors if c in cats]
        return known + sorted(cats - set(known))

    def missing(self, categories: Iterable[str]) -> list[str]:
        return sorted(set(categories) - set(self.colors))

    def updated(self, other: Mapping[str, str]) -> "Palette":
        return Palette(self.name, {**self.colors, **other})

    @classmethod
    def from_lines(cls, lines: Iterable[str], name: str = "custom",
                   base: "Palette | None" = None) -> "Palette":
        """Parse ``category=#RRGGBB`` lines; ``#`` at line start is a comment."""
        colors = {}
        for n, line in enumerate(lines, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            cat, sep, col = line.partition("=")
            if not sep or not cat.strip():
                raise PaletteError(f"line {n}: expected category=#RRGGBB, got {line!r}")
            colors[cat.strip()] = col.strip()
        return base.updated(colors) if base else cls(name, colors)

    @classmethod
    def from_file(cls, path, base: "Palette | None" = None) -> "Palette":
        with open(path, encoding="utf-8") as fh:
            return cls.from_lines(fh, name=str(path), base=base)

    def to_text(self) -> str:
        return "".join(f"{c}={v}\n" for c, v in self.colors.items())


IPU_PALETTE = Palette("IPU", {
    "hold": "#D62728",
    "incomplete-hold": "#FF7F0E",
    "change": "#1F3A93",
    "question": "#6BAED6",
    "trail-off": "#8E44AD",
    "self-interruption": "#F1C40F",
    "hrt": "#2CA02C",
    str(RESIDUE): "#999999",
})

# turn ends warm, holds ocre to turquoise, hrt blue
PCOMP_PALETTE = Palette("PCOMP", {
    "change": "#D62728",
    "question": "#E377C2",
    "incomplete": "#FF9896",
    "hold": "#C9A227",
    "disruption": "#8C6D31",
    "hes": "#9ACD32",
    "cont": "#2CA02C",
    "q-part": "#1F9E89",
    "part": "#17BECF",
    "hrt": "#1F77B4",
    str(RESIDUE): "#999999",
})


def default_palette(layer: Layer | str) -> Palette:
    return IPU_PALETTE if Layer(layer) is Layer.IPU else PCOMP_PALETTE


# -- rendering --------------------------------------------------------------------

def _n(x: float) -> str:
    s = f"{x:.3f}"
    return "0.000" if s == "-0.000" else s


def render_svg(tracks: Sequence[DynamicsTrack], window: tuple[float, float],
               width_px: int = DEFAULT_WIDTH, palette: Palette | None = None,
               tick: float = DEFAULT_TICK, title: str = "") -> str:
    """Render tracks as an SVG 1.1 document.

    One band per track, rectangles linear in time, a legend of the
    categories present and a time axis ticked every ``tick`` seconds.
    Output depends only on the arguments.
    """
    w0, w1 = window
    if not (w1 - w0 > EPS):
        raise ValueError(f"window must have positive length, got {window}")
    if palette is None:
        palette = IPU_PALETTE
    present = set().union(*(t.categories() for t in tracks)) if tracks else set()
    missing = palette.missing(present)
    if missing:
        raise PaletteError(f"palette {palette.name} lacks colours for {missing}")

    left, right, top = 90, 20, 30 if title else 10
    band, gap = 28, 8
    plot_w = width_px - left - right
    if plot_w <= 0:
        raise ValueError("width_px too small")
    scale = plot_w / (w1 - w0)
    axis_y = top + len(tracks) * (band + gap)
    legend = palette.order(present)
    legend_y = axis_y + 40
    height = legend_y + 20 * math.ceil(len(legend) / 4) + 10

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width_px}" '
        f'height="{height}" viewBox="0 0 {width_px} {height}">',
        '<rect class="background" x="0" y="0" width="100%" height="100%" fill="#FFFFFF"/>',
    ]
    if title:
        out.append(f'<text x="{left}" y="20" font-family="sans-serif" font-size="14">'
                   f'{escape(title)}</text>')
    for k, track in enumerate(tracks):
        y = top + k * (band + gap)
        out.append(f'<g class="track" data-speaker={quoteattr(track.speaker)}>')
        out.append(f'<text x="{left - 8}" y="{_n(y + band / 2 + 4)}" text-anchor="end" '
                   f'font-family="sans-serif" font-size="12">{escape(track.speaker)}</text>')
        out.append(f'<rect class="band" x="{left}" y="{y}" width="{plot_w}" height="{band}" '
                   f'fill="#F4F4F4"/>')
        for e in track.entries:
            s, t = max(e.start, w0), min(e.end, w1)
            if t <= s:
                continue
            out.append(f'<rect class="entry" x="{_n(left + (s - w0) * scale)}" y="{y}" '
                       f'width="{_n((t - s) * scale)}" height="{band}" '
                       f'fill="{palette.color(e.category)}" data-category={quoteattr(e.category)}>'
                       f'<title>{escape(e.category)} {_n(e.start)}-{_n(e.end)}</title></rect>')
        out.append('</g>')

    out.append('<g class="axis">')
    out.append(f'<line x1="{left}" y1="{axis_y}" x2="{left + plot_w}" y2="{axis_y}" '
               f'stroke="#000000"/>')
    if tick > 0:
        k = math.ceil((w0 - EPS) / tick)
        while k * tick <= w1 + EPS:
            t = k * tick
            x = _n(left + (t - w0) * scale)
            out.append(f'<line x1="{x}" y1="{axis_y}" x2="{x}" y2="{axis_y + 5}" stroke="#000000"/>')
            out.append(f'<text x="{x}" y="{axis_y + 18}" text-anchor="middle" '
                       f'font-family="sans-serif" font-size="10">{t:g}</text>')
            k += 1
    out.append(f'<text x="{left + plot_w}" y="{axis_y + 32}" text-anchor="end" '
               f'font-family="sans-serif" font-size="10">time (s)</text>')
    out.append('</g>')

    out.append('<g class="legend">')
    for i, cat in enumerate(legend):
        x = left + (i % 4) * 160
        y = legend_y + 20 * (i // 4)
        out.append(f'<rect class="swatch" x="{x}" y="{y}" width="12" height="12" '
                   f'fill="{palette.color(cat)}" data-category={quoteattr(cat)}/>')
        out.append(f'<text x="{x + 18}" y="{y + 10}" font-family="sans-serif" '
                   f'font-size="11">{escape(cat)}</text>')
    out.append('</g>')
    out.append('</svg>')
    return "\n".join(out) + "\n"


# -- CSV ----------------------------------------------------------------------------

CSV_HEADER = ("speaker", "start", "end", "category")


def export_csv(tracks: Sequence[DynamicsTrack]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for t in tracks:
        for e in t.entries:
            w.writerow([t.speaker, format_time(e.start), format_time(e.end), e.category])
    return buf.getvalue()


def read_csv(text: str, palette: str = "") -> list[DynamicsTrack]:
    """Inverse of :func:`export_csv`; track order is first appearance."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != CSV_HEADER:
        raise ValueError(f"expected header {','.join(CSV_HEADER)}")
    by_speaker: dict[str, list[DynamicsEntry]] = {}
    for row in reader:
        if not row:
            continue
        spk, s, e, cat = row
        by_speaker.setdefault(spk, []).append(DynamicsEntry(float(s), float(e), cat))
    return [DynamicsTrack(spk, tuple(es), palette) for spk, es in by_speaker.items()]


__all__ = [
    "DynamicsEntry", "DynamicsTrack", "IPU_PALETTE", "PCOMP_PALETTE", "Palette", "PaletteError",
    "build_tracks", "default_palette", "export_csv", "read_csv", "render_svg",
]
