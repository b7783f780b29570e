import pytest

from turntake.lint import (AT_IPU, COINCIDENT, ERROR, INFO, INSIDE_PCOMP, IPU_INTERNAL, RULES,
                           WARNING, Diagnostic, count_by_severity, cross_layer_report,
                           diagnostics_csv, diagnostics_text, lint_conversation,
                           lint_ipu_forward_context, lint_ipu_segmentation, lint_pcomp)
from turntake.segment import propose_ipus
from turntake.simulate import generate_conversation

from conftest import make_conversation


def ipu_conv(a, b=(), duration=20.0):
    return make_conversation({"A": {"IPU": list(a)}, "B": {"IPU": list(b)}}, duration)


def rules(diags):
    return [d.rule for d in diags]


def test_hold_hrt_hold_clean():
    conv = ipu_conv([(0, 1, "hold"), (1.5, 2.5, "hold")], [(1.1, 1.3, "hrt")])
    assert lint_ipu_forward_context(conv) == []


def test_change_then_same_speaker():
    conv = ipu_conv([(0, 1, "change"), (1.5, 2.5, "hold")])
    diags = lint_ipu_forward_context(conv)
    assert rules(diags) == ["IPU-R2"]
    assert diags[0].severity == WARNING
    assert diags[0].speaker == "A"
    assert (diags[0].start, diags[0].end) == (0, 1)


def test_question_answered_clean():
    conv = ipu_conv([(0, 1, "question")], [(0.9, 2, "change")])
    assert lint_ipu_forward_context(conv) == []


def test_unanswered_question_is_r3_only():
    conv = ipu_conv([(0, 1, "question"), (1.5, 2, "hold")])
    assert rules(lint_ipu_forward_context(conv)) == ["IPU-R3"]


def test_question_with_only_hrt_reply_is_r2():
    conv = ipu_conv([(0, 1, "question"), (1.5, 2, "hold")], [(1.1, 1.3, "hrt")])
    assert rules(lint_ipu_forward_context(conv)) == ["IPU-R2"]


def test_hold_then_other_speaker():
    conv = ipu_conv([(0, 1, "hold")], [(1.2, 2, "change")])
    assert rules(lint_ipu_forward_context(conv)) == ["IPU-R1"]


def test_hold_skips_several_hrts():
    conv = ipu_conv([(0, 1, "incomplete-hold"), (2.0, 3, "hold")],
                    [(1.1, 1.3, "hrt"), (1.5, 1.8, "hrt")])
    assert lint_ipu_forward_context(conv) == []


@pytest.mark.parametrize("first,rule", [("hold", "IPU-R1"), ("change", None)])
def test_r1_r2_duality_other(first, rule):
    conv = ipu_conv([(0, 1, first)], [(1.2, 2, "hold")])
    assert rules(lint_ipu_forward_context(conv)) == ([rule] if rule else [])


@pytest.mark.parametrize("first,rule", [("change", "IPU-R2"), ("hold", None)])
def test_r1_r2_duality_same(first, rule):
    conv = ipu_conv([(0, 1, first), (1.5, 2, "hold")])
    assert rules(lint_ipu_forward_context(conv)) == ([rule] if rule else [])


@pytest.mark.parametrize("nxt", ["same", "other"])
def test_combined_label_passes_both_ways(nxt):
    a = [(0, 1, "change_hold")]
    b = []
    (a if nxt == "same" else b).append((1.5, 2, "hold"))
    assert lint_ipu_forward_context(ipu_conv(a, b)) == []


def test_hrt_followed_by_lapse():
    conv = ipu_conv([(0, 1, "hold"), (3.5, 4, "hold")], [(1.1, 1.3, "hrt")])
    diags = lint_ipu_forward_context(conv)
    assert rules(diags) == ["IPU-R4"]
    assert diags[0].speaker == "B"


def test_hrt_short_pause_no_lapse():
    conv = ipu_conv([(0, 1, "hold"), (3.0, 4, "hold")], [(1.1, 1.3, "hrt")])
    assert lint_ipu_forward_context(conv) == []
    assert rules(lint_ipu_forward_context(conv, lapse=1.0)) == ["IPU-R4"]


def test_hrt_during_other_speech_no_lapse():
    conv = ipu_conv([(0, 2, "hold"), (5, 6, "hold")], [(1.0, 1.3, "hrt")])
    assert "IPU-R4" not in rules(lint_ipu_forward_context(conv))


def test_uncertain_downgraded():
    conv = ipu_conv([(0, 1, "change@"), (1.5, 2.5, "hold")])
    diags = lint_ipu_forward_context(conv)
    assert rules(diags) == ["IPU-R2"]
    assert diags[0].severity == INFO


def test_bad_ipu_label_is_error():
    conv = ipu_conv([(0, 1, "holt"), (1.5, 2.5, "hold")])
    diags = lint_ipu_forward_context(conv)
    assert rules(diags) == ["IPU-LABEL"]
    assert diags[0].severity == ERROR
    assert "holt" in diags[0].message


def test_markers_ignored():
    conv = ipu_conv([(0, 1, "hold"), (1.1, 1.4, "<noise>"), (1.5, 2.5, "hold")])
    assert lint_ipu_forward_context(conv) == []


# -- segmentation -------------------------------------------------------------

def seg_conv(ort, ipu):
    return make_conversation({"A": {"ORT": ort, "IPU": ipu}}, 10.0)


def test_short_gap_before_hrt_allowed():
    conv = make_conversation({"A": {"IPU": [(0, 1, "hold"), (1.05, 1.3, "hrt")]}}, 10)
    assert lint_ipu_segmentation(conv) == []


def test_short_gap_before_hold_warned():
    conv = make_conversation({"A": {"IPU": [(0, 1, "hold"), (1.05, 1.3, "hold")]}}, 10)
    diags = lint_ipu_segmentation(conv)
    assert rules(diags) == ["IPU-SEG-GAP"]
    assert (diags[0].start, diags[0].end) == (1, 1.05)


def test_ipu_spanning_pause():
    ort = [(0, 0.5, "also"), (0.7, 1.2, "gut")]
    diags = lint_ipu_segmentation(seg_conv(ort, [(0, 1.2, "hold")]))
    assert rules(diags) == ["IPU-SEG-SPAN"]
    # a sub-threshold pause inside is fine
    ort = [(0, 0.5, "also"), (0.6, 1.2, "gut")]
    assert lint_ipu_segmentation(seg_conv(ort, [(0, 1.2, "hold")])) == []


def test_span_fixture_from_proposals():
    ort = [(0, 0.5, "also"), (0.7, 1.2, "gut"), (1.3, 1.6, "so"), (2.0, 2.4, "ja")]
    props = propose_ipus(seg_conv(ort, []).speaker("A").words)
    assert len(props) == 3
    split = [(p.start, p.end, "hold") for p in props]
    assert lint_ipu_segmentation(seg_conv(ort, split)) == []
    # hand-merge the first two proposals
    merged = [(props[0].start, props[1].end, "hold"), split[2]]
    assert rules(lint_ipu_segmentation(seg_conv(ort, merged))) == ["IPU-SEG-SPAN"]


def test_boundary_inside_word():
    ort = [(0, 0.5, "also"), (0.7, 1.2, "gut")]
    diags = lint_ipu_segmentation(seg_conv(ort, [(0, 0.3, "hold"), (0.7, 1.2, "hold")]))
    assert rules(diags) == ["IPU-SEG-WORD"]
    # within tolerance is fine
    assert lint_ipu_segmentation(seg_conv(ort, [(0, 0.49, "hold"), (0.7, 1.2, "hold")])) == []


# -- PCOMP ----------------------------------------------------------------------

def mid_sentence_pause():
    """'aber' then a mid-sentence pause, completed after it; B answers."""
    a_words = [(0, 0.4, "aber"), (0.4, 0.9, "wenn"), (1.4, 2.0, "auskennst")]
    b_words = [(2.3, 2.8, "ja"), (2.8, 3.4, "klar")]
    return make_conversation({
        "A": {"ORT": a_words, "IPU": [(0, 0.9, "incomplete-hold"), (1.4, 2.0, "question")],
              "PCOMP": [(0, 0.4, "cont"), (0.4, 2.0, "question")]},
        "B": {"ORT": b_words, "IPU": [(2.3, 3.4, "change")], "PCOMP": [(2.3, 3.4, "change")]},
    }, 5.0)


def test_mid_sentence_pause_clean():
    assert lint_conversation(mid_sentence_pause()) == []


def test_mid_sentence_pause_cross_layer():
    rep = cross_layer_report(mid_sentence_pause())
    a = rep.counts("ipu-end", "A")
    assert a == {INSIDE_PCOMP: 1, COINCIDENT: 1}
    inst = [b for b in rep.instances if b.speaker == "A" and b.kind == "ipu-end"]
    assert [b.status for b in sorted(inst, key=lambda b: b.time)] == [INSIDE_PCOMP, COINCIDENT]
    assert rep.counts("pcomp-end", "A") == {IPU_INTERNAL: 1, AT_IPU: 1}
    assert rep.proportion("ipu-end", COINCIDENT, "B") == 1.0


def test_pause_inside_next_pcomp_interval_clean():
    # the cont interval ends at the word end and the next one spans the pause
    conv = make_conversation({
        "A": {"ORT": [(0, 0.4, "aber"), (0.4, 0.9, "wenn"), (1.4, 2.0, "auskennst")],
              "PCOMP": [(0, 0.9, "cont"), (0.9, 2.0, "hold")]},
    }, 5.0)
    assert lint_pcomp(conv) == []


def test_full_coincidence():
    ipu = [(0, 1, "hold"), (1.5, 2.5, "change")]
    pcomp = [(0, 1, "hold"), (1.5, 2.5, "change")]
    conv = make_conversation({"A": {"IPU": ipu, "PCOMP": pcomp}}, 5.0)
    rep = cross_layer_report(conv)
    assert rep.proportion("ipu-end", COINCIDENT) == 1.0
    assert rep.proportion("pcomp-end", AT_IPU) == 1.0


def test_lone_coll_error():
    conv = make_conversation({"A": {"PCOMP": [(0, 1, "coll"), (1, 2, "coll@")]}}, 5.0)
    diags = lint_pcomp(conv)
    assert [(d.rule, d.severity) for d in diags] == [("PCOMP-COLL", ERROR),
                                                    ("PCOMP-COLL", WARNING)]


def test_hold_question_series_clean():
    conv = make_conversation({
        "A": {"PCOMP": [(0, 1, "hold_question"), (1.2, 2, "question")]},
        "B": {"PCOMP": [(2.3, 3, "change")]},
    }, 5.0)
    assert lint_pcomp(conv) == []


def test_pcomp_forward_rules():
    conv = make_conversation({
        "A": {"PCOMP": [(0, 1, "cont"), (2.5, 3, "change"), (3.2, 4, "hold")]},
        "B": {"PCOMP": [(1.2, 2, "hold")]},
    }, 5.0)
    assert rules(lint_pcomp(conv)) == ["PCOMP-R1", "PCOMP-R1", "PCOMP-R2"]


def test_pcomp_edge_inside_breath():
    ort = [(0, 0.3, "<breath>"), (0.3, 1.0, "ja")]
    conv = make_conversation({"A": {"ORT": ort, "PCOMP": [(0.1, 1.0, "change")]}}, 5.0)
    diags = lint_pcomp(conv)
    assert rules(diags) == ["PCOMP-EDGE"]
    assert "breath" in diags[0].message
    ok = make_conversation({"A": {"ORT": ort, "PCOMP": [(0.3, 1.0, "change")]}}, 5.0)
    assert lint_pcomp(ok) == []


def test_pcomp_end_in_silence():
    ort = [(0.3, 1.0, "ja")]
    conv = make_conversation({"A": {"ORT": ort, "PCOMP": [(0.3, 1.3, "change")]}}, 5.0)
    assert rules(lint_pcomp(conv)) == ["PCOMP-EDGE"]


def test_bad_pcomp_label():
    conv = make_conversation({"A": {"PCOMP": [(0, 1, "trail-off")]}}, 5.0)
    diags = lint_pcomp(conv)
    assert rules(diags) == ["PCOMP-LABEL"]
    assert "IPU label" in diags[0].message


# -- general --------------------------------------------------------------------

def test_deterministic():
    conv = generate_conversation(3)
    assert lint_conversation(conv) == lint_conversation(conv)
    broken = ipu_conv([(0, 1, "change"), (1.05, 2, "hold"), (3, 4, "question"), (4.5, 5, "x")])
    first = lint_conversation(broken)
    assert first == lint_conversation(broken)
    assert [d.message for d in first] == [d.message for d in lint_conversation(broken)]


def test_simulated_conversations_clean():
    for seed in range(5):
        diags = lint_conversation(generate_conversation(seed))
        assert count_by_severity(diags)[ERROR] == 0
        assert diags == []


def test_every_rule_documented():
    with pytest.raises(ValueError):
        Diagnostic(0, 1, "A", "IPU-R9", WARNING, "x")
    assert all(r.startswith(("IPU-", "PCOMP-")) for r in RULES)


def test_output_formats():
    conv = ipu_conv([(0, 1, "change"), (1.5, 2.5, "hold")])
    diags = lint_conversation(conv, file="x.TextGrid")
    text = diagnostics_text(diags)
    assert text.startswith("x.TextGrid:0.000-1.000:warning:IPU-R2:A: ")
    csv_text = diagnostics_csv(diags)
    lines = csv_text.splitlines()
    assert lines[0] == "file,start,end,speaker,severity,rule,message"
    assert lines[1].startswith("x.TextGrid,0.000000,1.000000,A,warning,IPU-R2,")
