import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from xlner.codecode import (
    OVERLAP,
    SAME_SPAN,
    codecode_confidence_exclude_o,
    codecode_rank,
    find_conflicts,
)
from xlner.corpus import ConfidenceTaggedSentence, EntityMention, is_iob2, spans_to_iob

TOKENS = ("w0", "w1", "w2", "w3", "w4")


def tagged(tags, confs=None, tokens=TOKENS):
    confs = confs if confs is not None else [0.9] * len(tags)
    return ConfidenceTaggedSentence(tuple(tokens), tuple(tags), tuple(confs))


AP = tagged(["B-PER", "O", "O", "O", "O"])
RP = tagged(["B-ORG", "I-ORG", "O", "B-LOC", "I-LOC"], [0.6, 0.6, 0.8, 0.7, 0.7])


@st.composite
def outputs(draw, n=None):
    n = n or draw(st.integers(1, 8))
    spans, pos = [], 0
    while pos < n:
        pos += draw(st.integers(0, 2))
        if pos >= n:
            break
        length = draw(st.integers(1, min(3, n - pos)))
        if draw(st.booleans()):
            spans.append(EntityMention(pos, pos + length, draw(st.sampled_from(["PER", "LOC", "ORG"]))))
        pos += length
    confs = draw(st.lists(st.floats(0.0, 1.0), min_size=n, max_size=n))
    return ConfidenceTaggedSentence(tuple(f"t{i}" for i in range(n)), tuple(spans_to_iob(spans, n)), tuple(confs))


@st.composite
def output_pairs(draw):
    n = draw(st.integers(1, 8))
    return draw(outputs(n)), draw(outputs(n))


class TestRank:
    def test_worked_example(self):
        assert codecode_rank(AP, RP).tags == ("B-PER", "O", "O", "B-LOC", "I-LOC")

    def test_confidences_follow_the_chosen_system(self):
        out = codecode_rank(AP, RP)
        assert out.confidences == (0.9, 0.6, 0.8, 0.7, 0.7)

    def test_empty_first_output_returns_second(self):
        empty = tagged(["O"] * 5, [0.99] * 5)
        assert codecode_rank(empty, RP) == RP

    def test_empty_second_output_keeps_first_entities(self):
        out = codecode_rank(AP, tagged(["O"] * 5))
        assert out.entities() == AP.entities()

    @given(output_pairs())
    @settings(max_examples=1000)
    def test_output_contains_every_first_system_entity(self, pair):
        a, b = pair
        out = codecode_rank(a, b)
        assert set(a.entities()) <= set(out.entities())
        assert is_iob2(out.tags)
        extra = set(out.entities()) - set(a.entities())
        assert extra <= set(b.entities())
        assert not find_conflicts(list(extra), a.entities())

    @given(output_pairs())
    def test_idempotent(self, pair):
        a, b = pair
        once = codecode_rank(a, b)
        assert codecode_rank(once, b).tags == once.tags


class TestConfidenceExcludeO:
    def test_entity_facing_only_o_is_kept(self):
        a = tagged(["B-PER", "O", "O", "O", "O"], [0.01, 1, 1, 1, 1])
        b = tagged(["O"] * 5, [1.0] * 5)
        assert codecode_confidence_exclude_o(a, b).tags == a.tags
        assert codecode_confidence_exclude_o(b, a).tags == a.tags

    def test_more_confident_entity_wins(self):
        a = tagged(["B-PER", "I-PER", "O", "O", "O"], [0.8, 0.8, 1, 1, 1])
        b = tagged(["B-ORG", "I-ORG", "O", "O", "O"], [0.6, 0.6, 1, 1, 1])
        assert codecode_confidence_exclude_o(a, b).tags[:2] == ("B-PER", "I-PER")
        assert codecode_confidence_exclude_o(b, a).tags[:2] == ("B-PER", "I-PER")

    def test_overlapping_spans_settled_by_confidence(self):
        a = tagged(["B-PER", "I-PER", "O", "O", "O"], [0.5, 0.5, 1, 1, 1])
        b = tagged(["O", "B-LOC", "I-LOC", "O", "O"], [1, 0.9, 0.9, 1, 1])
        assert codecode_confidence_exclude_o(a, b).tags == ("O", "B-LOC", "I-LOC", "O", "O")

    def test_tie_goes_to_first_output(self):
        a = tagged(["B-PER", "O", "O", "O", "O"], [0.7] * 5)
        b = tagged(["B-LOC", "O", "O", "O", "O"], [0.7] * 5)
        assert codecode_confidence_exclude_o(a, b).tags[0] == "B-PER"

    def test_agreement_survives_once(self):
        a = tagged(["B-PER", "O", "O", "O", "O"], [0.4] * 5)
        b = tagged(["B-PER", "O", "O", "O", "O"], [0.9] * 5)
        out = codecode_confidence_exclude_o(a, b)
        assert out.entities() == [(0, 1, "PER")]
        assert out.confidences[0] == 0.9

    @given(output_pairs())
    @settings(max_examples=300)
    def test_output_is_valid_and_drawn_from_inputs(self, pair):
        a, b = pair
        out = codecode_confidence_exclude_o(a, b)
        assert is_iob2(out.tags)
        assert set(out.entities()) <= set(a.entities()) | set(b.entities())
        # an entity with no competitor in the other output always survives
        for e in a.entities() + b.entities():
            if not find_conflicts([e], a.entities() + b.entities()):
                assert e in out.entities()

    @given(output_pairs())
    def test_idempotent(self, pair):
        a, b = pair
        once = codecode_confidence_exclude_o(a, b)
        assert codecode_confidence_exclude_o(once, once).tags == once.tags


def test_token_mismatch_reports_position():
    other = tagged(["O"] * 5, tokens=("w0", "w1", "XX", "w3", "w4"))
    with pytest.raises(ValueError, match="position 2"):
        codecode_rank(AP, other)
    with pytest.raises(ValueError, match="length"):
        codecode_confidence_exclude_o(AP, tagged(["O"] * 4, tokens=TOKENS[:4]))


def test_conflict_kinds():
    a = [EntityMention(0, 2, "PER"), EntityMention(3, 4, "LOC")]
    b = [EntityMention(1, 3, "ORG"), EntityMention(3, 4, "ORG"), EntityMention(0, 2, "PER")]
    kinds = {(c.a, c.b): c.kind for c in find_conflicts(a, b)}
    assert kinds == {
        ((0, 2, "PER"), (1, 3, "ORG")): OVERLAP,
        ((3, 4, "LOC"), (3, 4, "ORG")): SAME_SPAN,
    }
