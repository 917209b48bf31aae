import io
import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from xlner.corpus import (
    AlignedSentencePair,
    ConfidenceTaggedSentence,
    EntityMention,
    FormatError,
    IOBError,
    LabeledSentence,
    TagSet,
    attach_confidences,
    check_iob2,
    iob1_to_iob2,
    iob_to_spans,
    is_iob2,
    leftmost_longest,
    read_alignments,
    read_confidences,
    read_conll,
    spans_to_iob,
    write_alignments,
    write_confidences,
    write_conll,
)

TWO_TYPES = TagSet(("PER", "LOC")).labels


def all_iob2(max_len):
    for n in range(max_len + 1):
        for tags in itertools.product(TWO_TYPES, repeat=n):
            if is_iob2(tags):
                yield list(tags)


VALID_BY_LENGTH = {n: [t for t in all_iob2(6) if len(t) == n] for n in range(7)}


class TestTagSet:
    def test_alphabet_size(self):
        ts = TagSet(("PER", "ORG", "LOC", "MISC"))
        assert len(ts) == 9
        assert ts.labels[0] == "O"
        assert ts.index("B-ORG") == 3

    @pytest.mark.parametrize("types", [("PER", "PER"), ("",), ("A B",)])
    def test_rejects_bad_types(self, types):
        with pytest.raises(ValueError):
            TagSet(types)


class TestSpans:
    def test_worked_examples(self):
        assert iob_to_spans(["B-PER", "O", "O", "O", "O"]) == [(0, 1, "PER")]
        assert iob_to_spans(["B-ORG", "I-ORG", "O", "B-LOC", "I-LOC"]) == [(0, 2, "ORG"), (3, 5, "LOC")]
        assert iob_to_spans(["O", "O"]) == []

    def test_spans_to_iob_examples(self):
        assert spans_to_iob([EntityMention(0, 2, "ORG")], 3) == ["B-ORG", "I-ORG", "O"]
        assert spans_to_iob([], 4) == ["O"] * 4
        assert spans_to_iob([(0, 1, "PER"), (3, 5, "LOC")], 5) == ["B-PER", "O", "O", "B-LOC", "I-LOC"]

    def test_overlap_names_both_spans(self):
        with pytest.raises(ValueError, match=r"start=0, end=2.*start=1, end=3"):
            spans_to_iob([EntityMention(0, 2, "ORG"), EntityMention(1, 3, "LOC")], 4)

    def test_invalid_sequence_reports_index(self):
        with pytest.raises(IOBError) as info:
            iob_to_spans(["O", "B-PER", "I-LOC"])
        assert info.value.index == 2

    def test_exhaustive_round_trip(self):
        count = 0
        for tags in all_iob2(6):
            spans = iob_to_spans(tags)
            assert spans_to_iob(spans, len(tags)) == tags
            assert all(a.end <= b.start for a, b in zip(spans, spans[1:]))
            count += 1
        assert count > 1000

    @given(st.lists(st.sampled_from(TWO_TYPES), max_size=12))
    def test_iob1_normalization_yields_valid_iob2(self, tags):
        out = iob1_to_iob2(tags)
        check_iob2(out)
        # entity tokens keep their types
        assert [t[2:] for t in out] == [t[2:] for t in tags]

    def test_leftmost_longest(self):
        spans = [EntityMention(2, 4, "A"), EntityMention(0, 3, "B"), EntityMention(0, 1, "C"), EntityMention(4, 5, "D")]
        assert leftmost_longest(spans) == [(0, 3, "B"), (4, 5, "D")]


class TestConll:
    def test_minimal_file(self):
        [s] = read_conll("John B-PER\nruns O\n\n")
        assert s.tokens == ("John", "runs") and s.tags == ("B-PER", "O")

    def test_iob1_input_normalized(self):
        [s] = read_conll("a I-PER\nb I-PER\nc O\n")
        assert s.tags == ("B-PER", "I-PER", "O")

    def test_empty_stream(self):
        assert read_conll("") == []

    def test_writes_token_lines_and_blank(self):
        text = write_conll([LabeledSentence(("a", "b"), ("B-PER", "O"))])
        assert text.splitlines() == ["a B-PER", "b O", ""]

    def test_column_count_error_has_line_number(self):
        with pytest.raises(FormatError) as info:
            read_conll("a NN O\nb O\n")
        assert info.value.lineno == 2

    def test_invalid_tag_is_parse_error(self):
        with pytest.raises(FormatError):
            read_conll("a X-PER\n")

    def test_tab_in_token_rejected(self):
        with pytest.raises(ValueError):
            LabeledSentence(("a\tb",), ("O",))

    def test_tag_column_and_crlf(self):
        sents = read_conll("-DOCSTART- -X- O\r\n\r\nEU NNP B-ORG\r\nrejects VBZ O\r\n", tag_column=2)
        assert sents == [LabeledSentence(("EU", "rejects"), ("B-ORG", "O"))]

    @given(st.lists(st.integers(1, 6), min_size=0, max_size=5), st.randoms(use_true_random=False))
    def test_round_trip(self, lengths, rnd):
        sents = []
        for n in lengths:
            tags = rnd.choice(VALID_BY_LENGTH[n])
            toks = [rnd.choice(["x", "Yü", "z-1", "ø"]) for _ in range(n)]
            sents.append(LabeledSentence(tuple(toks), tuple(tags)))
        text = write_conll(sents)
        assert read_conll(text) == sents
        assert write_conll(read_conll(text)) == text


class TestAlignments:
    def test_parse(self):
        assert read_alignments("0-0 1-2\n\n") == [{(0, 0), (1, 2)}, set()]

    def test_malformed_reports_column(self):
        with pytest.raises(FormatError) as info:
            read_alignments("0-0\n1-1 3-x\n")
        assert (info.value.lineno, info.value.column) == (2, 5)

    def test_round_trip(self):
        links = [{(0, 0), (2, 1)}, set(), {(1, 3)}]
        assert read_alignments(write_alignments(links)) == links

    def test_pair_bounds_and_duplicates(self):
        with pytest.raises(ValueError):
            AlignedSentencePair(("a",), ("b",), frozenset({(0, 1)}))
        with pytest.raises(ValueError):
            AlignedSentencePair(("a",), ("b",), [(0, 0), (0, 0)])


class TestConfidences:
    def test_sidecar_round_trip(self):
        sents = [
            ConfidenceTaggedSentence(("a", "b"), ("B-PER", "O"), (0.25, 1.0)),
            ConfidenceTaggedSentence(("c",), ("O",), (0.5,)),
        ]
        table = read_confidences(write_confidences(sents))
        back = attach_confidences([s.as_labeled() for s in sents], table)
        assert back == sents

    def test_entity_confidence_is_mean(self):
        s = ConfidenceTaggedSentence(("a", "b", "c"), ("B-PER", "I-PER", "O"), (0.2, 0.6, 1.0))
        assert s.entity_confidence(EntityMention(0, 2, "PER")) == pytest.approx(0.4)

    def test_out_of_range_confidence(self):
        with pytest.raises(ValueError):
            ConfidenceTaggedSentence(("a",), ("O",), (1.5,))

    def test_sidecar_format(self):
        buf = io.StringIO()
        write_confidences([ConfidenceTaggedSentence(("a",), ("O",), (0.5,))], buf)
        assert buf.getvalue() == "0\t0\t0.5\n"
