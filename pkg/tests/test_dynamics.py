import re

import pytest

from turntake.conversation import labeled_intervals
from turntake.dynamics import (IPU_PALETTE, PCOMP_PALETTE, DynamicsEntry, DynamicsTrack, Palette,
                               PaletteError, build_tracks, default_palette, export_csv,
                               read_csv, render_svg)
from turntake.schema import Layer, RESIDUE, get_scheme, inventory
from turntake.simulate import dominance_fixture, generate_conversation, question_run_fixture
from turntake.stats import speaking_time

from conftest import make_conversation

ENTRY = re.compile(r'<rect class="entry" x="([\d.]+)" y="\d+" width="([\d.]+)"[^>]*'
                   r'data-category="([^"]*)"')
SWATCH = re.compile(r'<rect class="swatch"[^>]*data-category="([^"]*)"')


def two_tracks():
    return [DynamicsTrack("A", (DynamicsEntry(1.0, 3.0, "hold"),)),
            DynamicsTrack("B", (DynamicsEntry(4.0, 4.5, "hrt"),))]


def test_two_entry_svg():
    svg = render_svg(two_tracks(), (0, 10))
    assert svg.startswith('<?xml version="1.0" encoding="UTF-8"?>\n<svg ')
    assert svg.rstrip().endswith("</svg>")
    assert len(ENTRY.findall(svg)) == 2
    assert SWATCH.findall(svg) == ["hold", "hrt"]
    assert 'class="axis"' in svg
    assert svg.count('class="track"') == 2


def test_render_deterministic():
    conv = question_run_fixture()
    tracks = build_tracks(conv, "IPU")
    a = render_svg(tracks, (240, 340), palette=IPU_PALETTE, title="x")
    b = render_svg(build_tracks(question_run_fixture(), "IPU"), (240, 340),
                   palette=IPU_PALETTE, title="x")
    assert a == b


def test_window_widths_proportional():
    conv = dominance_fixture()
    tracks = build_tracks(conv, "IPU")
    width = 1000
    svg = render_svg(tracks, (0, conv.xmax), width_px=width)
    scale = (width - 110) / conv.xmax
    found = ENTRY.findall(svg)
    durations = [e.duration for t in tracks for e in t.entries]
    assert len(found) == len(durations)
    for (_, w, _), d in zip(found, durations):
        assert abs(float(w) - d * scale) <= 0.5


def test_legend_exactly_present_categories():
    tracks = build_tracks(question_run_fixture(), "PCOMP")
    svg = render_svg(tracks, (240, 345), palette=PCOMP_PALETTE)
    present = set().union(*(t.categories() for t in tracks))
    assert set(SWATCH.findall(svg)) == present
    assert len(SWATCH.findall(svg)) == len(present)


def test_zero_width_window():
    with pytest.raises(ValueError):
        render_svg(two_tracks(), (5, 5))


def test_missing_colour():
    tracks = [DynamicsTrack("A", (DynamicsEntry(0, 1, "weird"),))]
    with pytest.raises(PaletteError, match="weird"):
        render_svg(tracks, (0, 2))


def test_ticks_every_ten_seconds():
    svg = render_svg(two_tracks(), (240, 340))
    labels = re.findall(r'font-size="10">(\d+)</text>', svg)
    assert labels == [str(t) for t in range(240, 341, 10)]


def test_normalisation_in_tracks():
    conv = make_conversation({"A": {"PCOMP": [(0, 1, "hold@"), (1, 2, "change_question"),
                                              (2, 3, "hold_hrt"), (3, 4, "<noise>"),
                                              (4, 5, "bogus")]}}, 6)
    (track,) = build_tracks(conv, "PCOMP")
    assert [e.category for e in track.entries] == ["hold", "change", str(RESIDUE), str(RESIDUE)]
    assert track.palette == "PCOMP/turn-taking"


def test_entry_count_equals_labeled_intervals():
    conv = generate_conversation(11)
    for layer in Layer:
        tracks = build_tracks(conv, layer)
        n = sum(1 for spk in conv.speakers
                for li in labeled_intervals(spk.layer(layer), layer))
        assert sum(len(t.entries) for t in tracks) == n


def test_window_clipping():
    tracks = build_tracks(question_run_fixture(), "IPU", window=(260, 270))
    for t in tracks:
        for e in t.entries:
            assert 260 <= e.start < e.end <= 270


def test_empty_window_gives_empty_tracks():
    tracks = build_tracks(question_run_fixture(), "IPU", window=(0, 100))
    assert [t.speaker for t in tracks] == ["008M", "028F"]
    assert all(t.entries == () for t in tracks)


def test_question_run_around_270():
    tracks = {t.speaker: t for t in build_tracks(question_run_fixture(), "IPU",
                                                   window=(260, 290))}
    merged = sorted([(e.start, spk, e.category) for spk, t in tracks.items() for e in t.entries])
    run = [(spk, cat) for s, spk, cat in merged if 262 <= s <= 286]
    assert run[:12] == [("008M", "question"), ("028F", "change")] * 6
    answers = [e for e in tracks["028F"].entries if 262 <= e.start <= 286]
    questions = [e for e in tracks["008M"].entries if e.category == "question"]
    assert all(a.duration < 1.0 for a in answers)
    assert all(q.duration > a.duration for q, a in zip(questions, answers))


def test_dominance_inversion():
    tracks = {t.speaker: t for t in build_tracks(dominance_fixture(), "IPU")}
    before = {spk: sum(e.duration for e in t.entries if e.end <= 300) for spk, t in tracks.items()}
    after = {spk: sum(e.duration for e in t.entries if e.start >= 300) for spk, t in tracks.items()}
    assert before["038F"] > 3 * before["039F"]
    assert after["039F"] > 3 * after["038F"]


def test_csv_round_trip():
    tracks = build_tracks(question_run_fixture(), "PCOMP")
    text = export_csv(tracks)
    assert text.splitlines()[0] == "speaker,start,end,category"
    back = read_csv(text, palette=tracks[0].palette)
    assert back == tracks


def test_csv_single_entry():
    track = DynamicsTrack("A", (DynamicsEntry(0.1, 0.25, "hold"),))
    assert export_csv([track]).splitlines() == ["speaker,start,end,category", "A,0.1,0.25,hold"]


def test_csv_bad_header():
    with pytest.raises(ValueError):
        read_csv("a,b,c,d\n")


def test_csv_durations_match_speaking_time():
    conv = dominance_fixture()
    back = read_csv(export_csv(build_tracks(conv, "IPU")))
    times = speaking_time(conv)
    for t in back:
        assert sum(e.duration for e in t.entries) == pytest.approx(times[t.speaker][0], abs=1e-9)
        assert len(t.entries) == times[t.speaker][1]


def test_overlapping_entries_rejected():
    with pytest.raises(ValueError):
        DynamicsTrack("A", (DynamicsEntry(0, 2, "hold"), DynamicsEntry(1, 3, "hold")))


def test_default_palettes_cover_normalised_categories():
    for layer, palette in ((Layer.IPU, IPU_PALETTE), (Layer.PCOMP, PCOMP_PALETTE)):
        assert default_palette(layer) is palette
        cats = {n for n in inventory(layer) if n != "coll"} | {str(RESIDUE)}
        assert palette.missing(cats) == []
        scheme = get_scheme(layer)
        assert set(scheme.representatives.values()) <= set(palette.colors)
    assert len(IPU_PALETTE.colors) == 8


def test_palette_file(tmp_path):
    p = tmp_path / "colours.txt"
    p.write_text("# mine\nhold=#000000\n\nnewcat = #ABCDEF\n", encoding="utf-8")
    pal = Palette.from_file(p, base=IPU_PALETTE)
    assert pal.color("hold") == "#000000"
    assert pal.color("newcat") == "#ABCDEF"
    assert pal.color("hrt") == IPU_PALETTE.color("hrt")
    assert Palette.from_lines(pal.to_text().splitlines()).colors == pal.colors
    with pytest.raises(PaletteError):
        Palette.from_lines(["hold=red"])
    with pytest.raises(PaletteError, match="line 1"):
        Palette.from_lines(["hold"])
