import random

import pytest

from turntake.segment import (BREATH, NOISE, SILENCE, WORD, ClassifierError, TokenClassifier,
                              overlaps, pauses, propose_ipus, proposals_tier, speech_gaps,
                              transfer_offsets)
from turntake.textgrid import Tier

from conftest import words


def tier(*items, start=0.0, total=None):
    segs = words(*items, start=start)
    end = total if total is not None else segs[-1][1]
    return Tier.from_segments("ORT-A", 0.0, end, segs)


def spans(props):
    return [(round(p.start, 6), round(p.end, 6)) for p in props]


def test_short_silence_joins():
    t = tier(("ja", 0.3), ("", 0.140), ("genau", 0.4))
    assert spans(propose_ipus(t)) == [(0.0, 0.84)]


def test_long_silence_splits():
    t = tier(("ja", 0.3), ("", 0.160), ("genau", 0.4))
    assert spans(propose_ipus(t)) == [(0.0, 0.3), (0.46, 0.86)]


def test_exact_threshold_splits():
    t = Tier.from_segments("t", 0, 2, [(0.0, 0.5, "a"), (0.5, 0.65, ""), (0.65, 1.0, "b")])
    assert len(propose_ipus(t)) == 2
    assert len(propose_ipus(t, threshold=0.151)) == 1


def test_breath_after_long_silence_attaches_right():
    t = tier(("A", 0.4), ("", 0.3), ("<breath>", 0.2), ("B", 0.5))
    props = propose_ipus(t)
    assert spans(props) == [(0.0, 0.4), (0.7, 1.4)]
    assert list(props[1].token_indices) == [2, 3]


def test_breath_between_short_silences_bridges():
    t = tier(("A", 0.4), ("", 0.1), ("<breath>", 0.2), ("", 0.1), ("B", 0.5))
    assert spans(propose_ipus(t)) == [(0.0, 1.3)]


def test_breath_before_long_silence_attaches_left():
    t = tier(("A", 0.4), ("<smack>", 0.1), ("", 0.5), ("B", 0.5))
    assert spans(propose_ipus(t)) == [(0.0, 0.5), (1.0, 1.5)]


def test_orphan_breath_options():
    t = tier(("A", 0.4), ("", 0.5), ("<breath>", 0.3), ("", 0.5), ("B", 0.5))
    assert spans(propose_ipus(t)) == [(0.0, 0.4), (0.9, 2.2)]
    assert spans(propose_ipus(t, orphan_breaths="left")) == [(0.0, 1.2), (1.7, 2.2)]
    assert spans(propose_ipus(t, orphan_breaths="keep")) == [(0.0, 0.4), (0.9, 1.2), (1.7, 2.2)]


def test_orphan_breath_at_end_goes_left():
    t = tier(("A", 0.4), ("", 0.5), ("<breath>", 0.3))
    assert spans(propose_ipus(t)) == [(0.0, 1.2)]


def test_single_word():
    t = Tier.from_segments("t", 0, 3, [(1.0, 1.6, "hallo")])
    assert spans(propose_ipus(t)) == [(1.0, 1.6)]


def test_no_words():
    assert propose_ipus(Tier.from_segments("t", 0, 3, [])) == []
    assert propose_ipus(Tier("t", 0, 3, ())) == []
    assert propose_ipus(tier(("", 0.5), ("<breath>", 0.3), ("", 0.5))) == []


def test_noise_counts_only_with_silence():
    # noise alone is not a pause
    t = tier(("A", 0.4), ("<noise>", 0.3), ("B", 0.4))
    assert len(propose_ipus(t)) == 1
    # silence plus noise add up past the threshold
    t = tier(("A", 0.4), ("", 0.1), ("<noise>", 0.1), ("B", 0.4))
    assert len(propose_ipus(t)) == 2
    assert spans(propose_ipus(t)) == [(0.0, 0.4), (0.6, 1.0)]


def test_proposals_never_edge_on_silence(rng):
    for _ in range(50):
        t = _random_word_tier(rng)
        classifier = TokenClassifier()
        for p in propose_ipus(t):
            assert p.duration > 0
            assert classifier.classify(t.intervals[p.first].text) != SILENCE
            assert classifier.classify(t.intervals[p.last].text) != SILENCE


def test_proposals_cover_speech(rng):
    classifier = TokenClassifier()
    for _ in range(50):
        t = _random_word_tier(rng)
        props = propose_ipus(t)
        covered = {i for p in props for i in p.token_indices}
        for i, iv in enumerate(t.intervals):
            if classifier.classify(iv.text) == WORD:
                assert i in covered
        for a, b in zip(props, props[1:]):
            assert a.end <= b.start


def _random_word_tier(rng, n=None):
    n = n or rng.randint(1, 80)
    items = []
    for _ in range(n):
        kind = rng.random()
        if kind < 0.45:
            items.append(("wort", rng.uniform(0.05, 0.6)))
        elif kind < 0.85:
            items.append(("", rng.uniform(0.01, 0.6)))
        elif kind < 0.95:
            items.append(("<breath>", rng.uniform(0.05, 0.4)))
        else:
            items.append(("<laugh>", rng.uniform(0.05, 0.4)))
    return tier(*items)


def test_monotonic_in_threshold(rng):
    for _ in range(100):
        t = _random_word_tier(rng)
        counts = [len(propose_ipus(t, threshold=th)) for th in (0.05, 0.1, 0.15, 0.3, 1.0)]
        assert counts == sorted(counts, reverse=True)


def test_bad_threshold():
    with pytest.raises(ValueError):
        propose_ipus(tier(("a", 1)), threshold=0)


def test_unknown_marker_named():
    with pytest.raises(ClassifierError, match="<hust>"):
        propose_ipus(tier(("a", 1), ("<hust>", 0.2)))


def test_classifier_file(tmp_path):
    p = tmp_path / "markers.tsv"
    p.write_text("# comment\n<hust>\tnoise\n<atmen*>\tbreath\n_\tsilence\n", encoding="utf-8")
    c = TokenClassifier.from_file(p)
    assert c.classify("<hust>") == NOISE
    assert c.classify("<atmen-ein>") == BREATH
    assert c.classify("_") == SILENCE
    assert c.classify("<breath>") == BREATH
    assert c.classify("hallo") == WORD
    with pytest.raises(ClassifierError, match="line 1"):
        TokenClassifier.from_lines(["no tab here"])
    with pytest.raises(ClassifierError, match="unknown token class"):
        TokenClassifier.from_lines(["<x>\tgrunt"])
    bare = TokenClassifier.from_lines([], extend_defaults=False)
    with pytest.raises(ClassifierError):
        bare.classify("<breath>")


def test_proposals_tier():
    t = tier(("ja", 0.3), ("", 0.5), ("genau", 0.4), ("", 0.2), total=2.0)
    out = proposals_tier("IPU-auto-A", t, propose_ipus(t))
    assert out.xmax == 2.0
    assert [iv.text for iv in out.labeled()] == ["ipu", "ipu"]


def test_pauses_examples():
    t = Tier.from_segments("t", 0, 1.5, [(0, 0.5, "a"), (0.7, 1.5, "b")])
    ps = pauses(t)
    assert len(ps) == 1 and ps[0].duration == pytest.approx(0.2)
    assert pauses(tier(("a", 0.5), ("b", 0.5))) == []
    t = tier(("a", 0.5), ("", 0.1), ("<sil>", 0.15), ("b", 0.5))
    ps = pauses(t)
    assert len(ps) == 1
    assert ps[0].duration == pytest.approx(0.25)
    assert (ps[0].start, ps[0].end) == pytest.approx((0.5, 0.75))


def test_pauses_run_merge_oracle(rng):
    c = TokenClassifier()
    for _ in range(30):
        t = _random_word_tier(rng)
        flags = [c.classify(iv.text) == SILENCE for iv in t.intervals]
        runs = []
        for i, f in enumerate(flags):
            if f and (i == 0 or not flags[i - 1]):
                runs.append([i, i])
            elif f:
                runs[-1][1] = i
        expected = [sum(t.intervals[k].duration for k in range(a, b + 1)) for a, b in runs]
        assert [p.duration for p in pauses(t)] == pytest.approx(expected)


def test_speech_gaps_include_noise_with_silence():
    t = tier(("a", 0.5), ("", 0.1), ("<noise>", 0.1), ("b", 0.5), ("<laugh>", 0.3), ("c", 0.2))
    gaps = speech_gaps(t)
    assert len(gaps) == 1
    assert gaps[0].duration == pytest.approx(0.2)


@pytest.mark.parametrize("a,b,expected", [
    ([(0, 2)], [(1, 3)], [(1, 2)]),
    ([(0, 1)], [(2, 3)], []),
    ([(0, 5)], [(1, 2), (3, 4)], [(1, 2), (3, 4)]),
    ([(0, 1), (1, 2)], [(0.5, 1.5)], [(0.5, 1.5)]),
])
def test_overlaps_examples(a, b, expected):
    assert overlaps(a, b) == expected
    assert overlaps(b, a) == expected


def _brute_overlap(a, b, step=0.001):
    def inside(spans, t):
        return any(s <= t < e for s, e in spans)
    n = round(max(e for _, e in a + b) / step) + 1
    total = 0
    for k in range(n):
        t = (k + 0.5) * step
        if inside(a, t) and inside(b, t):
            total += 1
    return total * step


def _random_spans(rng, n):
    cuts = sorted(rng.sample(range(1, 5000), 2 * n))
    return [(cuts[2 * i] / 1000, cuts[2 * i + 1] / 1000) for i in range(n)]


def test_overlaps_brute_force(rng):
    for _ in range(15):
        a = _random_spans(rng, rng.randint(1, 6))
        b = _random_spans(rng, rng.randint(1, 6))
        got = overlaps(a, b)
        assert sum(e - s for s, e in got) == pytest.approx(_brute_overlap(a, b), abs=2e-3)
        assert got == overlaps(b, a)
        assert all(s < e for s, e in got)
        assert got == sorted(got)


def test_transfer_after_change():
    out = transfer_offsets([(0, 1)], [(1.2, 2)], ["change"], ["hold"])
    assert len(out) == 1
    assert out[0].offset == pytest.approx(0.2)
    assert (out[0].from_speaker, out[0].to_speaker) == ("A", "B")
    assert not out[0].overlap


def test_transfer_overlapping_answer():
    out = transfer_offsets([(0, 1.0)], [(0.9, 2)], ["question"], ["change"])
    assert out[0].offset == pytest.approx(-0.1)
    assert out[0].overlap


def test_no_transfer_across_hrt():
    out = transfer_offsets([(0, 1), (1.5, 2)], [(1.1, 1.3)], ["hold", "hold"], ["hrt"])
    assert out == []


def test_transfer_skips_hrt_to_find_next_speaker():
    out = transfer_offsets([(0, 1)], [(1.1, 1.3), (1.6, 2)], ["change"], ["hrt", "hold"])
    assert [round(o.offset, 6) for o in out] == [0.6]


def test_transfer_label_count_mismatch():
    with pytest.raises(ValueError):
        transfer_offsets([(0, 1)], [], [], [])
