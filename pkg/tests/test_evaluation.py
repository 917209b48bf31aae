import itertools

import pytest

from xlner.corpus import LabeledSentence
from xlner.evaluation import phrasal_f1, sentence_counts, stratified_shuffling_test


def sent(tags, tokens=None):
    tokens = tokens or [f"w{i}" for i in range(len(tags))]
    return LabeledSentence(tuple(tokens), tuple(tags))


GOLD = [
    sent(["B-PER", "I-PER", "O", "B-LOC"]),
    sent(["O", "O", "O"]),
    sent(["B-ORG", "O", "B-PER"]),
    sent(["B-LOC", "I-LOC", "I-LOC"]),
    sent(["O", "B-MISC"]),
]
PRED = [
    sent(["B-PER", "I-PER", "O", "B-ORG"]),  # one right, one wrong type
    sent(["O", "B-PER", "O"]),  # spurious
    sent(["B-ORG", "O", "B-PER"]),  # both right
    sent(["B-LOC", "I-LOC", "O"]),  # boundary error
    sent(["O", "O"]),  # miss
]


def test_hand_counted_fixture():
    report = phrasal_f1(GOLD, PRED)
    assert (report.gold, report.predicted, report.correct) == (6, 6, 3)
    assert report.precision == pytest.approx(3 / 6)
    assert report.recall == pytest.approx(3 / 6)
    assert report.f1 == pytest.approx(0.5)
    assert report.per_type["PER"] == (2, 3, 2)
    assert report.per_type["LOC"] == (2, 1, 0)
    assert report.type_scores("ORG") == pytest.approx((0.5, 1.0, 2 / 3))


def test_one_of_two_found():
    gold = [sent(["B-PER", "O", "B-LOC"])]
    pred = [sent(["B-PER", "O", "O"])]
    report = phrasal_f1(gold, pred)
    assert (report.precision, report.recall) == (1.0, 0.5)
    assert report.f1 == pytest.approx(2 / 3)


def test_boundary_miss_earns_nothing():
    report = phrasal_f1([sent(["B-ORG", "I-ORG", "O"])], [sent(["B-ORG", "O", "O"])])
    assert report.correct == 0 and report.f1 == 0.0


def test_swapping_roles_swaps_precision_and_recall():
    a, b = phrasal_f1(GOLD, PRED), phrasal_f1(PRED, GOLD)
    assert (a.precision, a.recall) == (b.recall, b.precision)
    assert a.f1 == pytest.approx(b.f1)


def test_empty_inputs_score_zero():
    report = phrasal_f1([sent(["O"])], [sent(["O"])])
    assert (report.precision, report.recall, report.f1) == (0.0, 0.0, 0.0)


def test_reports_are_stable():
    report = phrasal_f1(GOLD, PRED)
    keys = [line.split("\t")[0] for line in report.to_kv().splitlines()]
    assert keys[:6] == ["precision", "recall", "f1", "gold", "predicted", "correct"]
    assert "PER.f1" in keys
    assert report.to_text().splitlines()[-1].split()[:4] == ["overall", "50.00", "50.00", "50.00"]


def test_misaligned_inputs_rejected():
    with pytest.raises(ValueError):
        phrasal_f1(GOLD, PRED[:-1])
    with pytest.raises(ValueError):
        phrasal_f1([sent(["O"], ["a"])], [sent(["O"], ["b"])])


class TestSignificance:
    def test_identical_systems(self):
        result = stratified_shuffling_test(PRED, PRED, GOLD, iterations=1000)
        assert result.p_value == 1.0 and result.observed == 0.0

    def test_perfect_versus_empty_output(self):
        gold = [sent(["B-PER", "O", "B-LOC"], [f"s{k}", "x", "y"]) for k in range(200)]
        empty = [sent(["O", "O", "O"], s.tokens) for s in gold]
        result = stratified_shuffling_test(gold, empty, gold, iterations=1000, seed=1)
        assert result.p_value < 0.001
        assert result.f1_a == 1.0 and result.f1_b == 0.0

    def test_seed_reproducibility(self):
        a = stratified_shuffling_test(PRED, GOLD, GOLD, iterations=2000, seed=7)
        b = stratified_shuffling_test(PRED, GOLD, GOLD, iterations=2000, seed=7)
        assert a == b

    def test_matches_exact_enumeration(self):
        # with five sentences all 2^5 swaps can be enumerated
        gold, a, b = GOLD, PRED, [sent(list(s.tags), s.tokens) for s in GOLD]
        b[0] = sent(["B-PER", "I-PER", "O", "O"])
        observed = abs(phrasal_f1(gold, a).f1 - phrasal_f1(gold, b).f1)
        hits = 0
        for swap in itertools.product([False, True], repeat=len(gold)):
            xa = [y if s else x for x, y, s in zip(a, b, swap)]
            xb = [x if s else y for x, y, s in zip(a, b, swap)]
            hits += abs(phrasal_f1(gold, xa).f1 - phrasal_f1(gold, xb).f1) >= observed - 1e-12
        exact = hits / 2 ** len(gold)
        result = stratified_shuffling_test(a, b, gold, iterations=20000, seed=3)
        assert result.observed == pytest.approx(observed)
        assert result.p_value == pytest.approx(exact, abs=0.015)

    def test_too_few_iterations(self):
        with pytest.raises(ValueError):
            stratified_shuffling_test(PRED, GOLD, GOLD, iterations=999)


def test_sentence_counts():
    counts = sentence_counts(GOLD, PRED)
    assert counts.tolist() == [[2, 2, 1], [0, 1, 0], [2, 2, 2], [1, 1, 0], [1, 0, 0]]
