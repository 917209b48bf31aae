"""End-to-end acceptance checks, one test per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see a PASS/FAIL line per
criterion as it completes; a summary section is printed either way.
"""
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import (
    brute_force_chain,
    brute_force_memm,
    clustered_embeddings,
    finite_difference,
    max_relative_error,
    random_crf,
    random_memm,
    separable_corpus,
)
from xlner.codecode import codecode_confidence_exclude_o, codecode_rank
from xlner.corpus import ConfidenceTaggedSentence, EntityMention, LabeledSentence, TagSet, spans_to_iob
from xlner.crf import CRFObjective, crf_log_partition, crf_viterbi, encode_corpus
from xlner.decoding import transition_mask
from xlner.embeddings import EmbeddingTable
from xlner.evaluation import phrasal_f1, stratified_shuffling_test
from xlner.experiments import run_codecode_experiment, run_selection_experiment, run_transfer_experiment
from xlner.features import FeatureAlphabet, FeatureTemplateConfig
from xlner.mapping import BilingualDictionary, DictionaryEntry, learn_mapping
from xlner.memm import MEMMObjective, encode_tokens, memm_decode
from xlner.neural import NNTrainConfig, build_objective, init_params
from xlner.projection import FrequencyTable, ProjectedSentence, SelectionThresholds, project_corpus, quality_score, select_data
from xlner.synth import SourceLanguage, SyntheticLanguageSpec, synth_bitext


def test_crf_matches_enumeration(criterion):
    with criterion(1, "CRF log Z, marginals and Viterbi equal enumeration") as info:
        start = time.perf_counter()
        rng = np.random.default_rng(2024)
        worst = 0.0
        for k in range(100):
            model = random_crf(rng, scale=2.0)
            tokens = list(rng.choice(list("abcd"), size=int(rng.integers(1, 6))))
            tables = crf_log_partition(model, tokens)
            mask = transition_mask(model.tagset) if k % 2 else None
            log_z, marg, _, best = brute_force_chain(tables.emissions, model.transition, mask)
            worst = max(worst, abs(tables.log_z - log_z), float(np.abs(tables.marginals() - marg).max()))
            assert crf_viterbi(model, tokens, constrain=mask is not None) == best
        assert worst < 1e-8
        elapsed = time.perf_counter() - start
        assert elapsed < 10
        info["text"] = f"max abs error {worst:.1e}"


def _gradient_error(fn, w, coords, n):
    batch = np.arange(n)
    _, grad = fn(w, batch)
    numeric = finite_difference(lambda v: fn(v, batch)[0], w, coords, h=1e-5)
    return max_relative_error(grad[coords], numeric)


def test_gradients(criterion):
    with criterion(2, "analytic gradients match finite differences") as info:
        start = time.perf_counter()
        rng = np.random.default_rng(0)
        data = separable_corpus(6, seed=4)
        tagset = TagSet.from_sentences(data)
        errors = {}

        alphabet = FeatureAlphabet()
        matrices, labels = encode_corpus(data, tagset, FeatureTemplateConfig(order=0, window=1, affix_length=2), alphabet)
        F, L = len(alphabet), len(tagset)
        crf = CRFObjective(matrices, labels, F, L)
        w = rng.normal(0, 0.5, F * L + L * L)
        coords = np.concatenate([rng.choice(F * L, 50, replace=False), F * L + np.arange(L * L)])
        errors["crf"] = _gradient_error(crf, w, coords, len(data))

        alphabet = FeatureAlphabet()
        X, y = encode_tokens(data, tagset, FeatureTemplateConfig(window=1, affix_length=2, order=2), alphabet)
        memm = MEMMObjective(X, y, L)
        w = rng.normal(0, 0.5, X.shape[1] * L)
        errors["memm"] = _gradient_error(memm, w, rng.choice(len(w), 80, replace=False), len(y))

        emb = clustered_embeddings()
        keep = [word for word in emb.words if word not in ("met", "Lima")]  # unknown words exercise UNK
        emb = EmbeddingTable(keep, np.array([emb[word] for word in keep]))
        cfg = NNTrainConfig(window=1, hidden=5, tag_dim=3, prototypes=3, temperature=0.5)
        for arch in ("nn1", "nn2"):
            fn, ts = build_objective(data, emb, cfg, arch)
            w = fn.layout.pack(init_params(arch, emb, len(ts), cfg)) + rng.normal(0, 0.2, fn.layout.size)
            coords = []
            for a, b in fn.layout.offsets.values():
                coords.extend(rng.choice(np.arange(a, b), size=min(10, b - a), replace=False))
            assert "unk" in fn.layout.offsets and (arch == "nn1" or "protos" in fn.layout.offsets)
            errors[arch] = _gradient_error(fn, w, np.array(coords), len(fn.labels))
        assert max(errors.values()) < 1e-4, errors
        assert time.perf_counter() - start < 30
        info["text"] = ", ".join(f"{k} {v:.1e}" for k, v in errors.items())


def test_memm_beam_exactness(criterion):
    with criterion(3, "MEMM beam |labels|^o equals exhaustive argmax") as info:
        rng = np.random.default_rng(7)
        for k in range(50):
            model = random_memm(k, 2)
            L = len(model.tagset)
            tokens = list(rng.choice(list("ab"), size=int(rng.integers(1, 5))))
            mask = transition_mask(model.tagset)
            best, _ = brute_force_memm(model, tokens, mask)
            out = memm_decode(model, tokens, beam=L ** 2)
            assert [model.tagset.index(t) for t in out.tags] == best
        info["text"] = "50/50 exact"


def test_projection_identity(criterion):
    with criterion(4, "zero-noise projection reaches F1 = 1.0"):
        source = SourceLanguage(seed=0).corpus(300, seed=5)
        bitext = synth_bitext(source, SyntheticLanguageSpec())
        projected = [p.sentence for p in project_corpus(bitext.pairs)]
        assert phrasal_f1(bitext.gold_target, projected).f1 == 1.0


def test_selection_benefit(criterion):
    with criterion(5, "coordinate-search selection beats no selection by >= 3 F1") as info:
        result = run_selection_experiment()
        info["text"] = (f"baseline {100 * result.baseline.f1:.2f}, selected {100 * result.selected.f1:.2f}, "
                        f"q={result.search.thresholds.q} n={result.search.thresholds.n}, "
                        f"{result.selected_size}/{result.projected_size} sentences")
        assert result.gain >= 3.0
        chosen = [p for p in result.search.grid
                  if (p.q, p.n) == (result.search.thresholds.q, result.search.thresholds.n)]
        assert chosen and chosen[0].f1 == result.search.best_f1()
        assert result.selected_size < result.projected_size
        assert result.seconds < 600


def test_quality_score_units(criterion):
    with criterion(6, "quality score, selection boundary and frequency table"):
        table = FrequencyTable()
        for etype, count in [("PER", 853), ("ORG", 143), ("LOC", 1), ("MISC", 1), ("X", 1), ("Y", 1)]:
            table.add("Obama", etype, count)
        assert table.frequency("Obama", "PER") == pytest.approx(0.853, abs=1e-12)

        two = FrequencyTable()
        two.add("a", "PER", 853)
        two.add("a", "ORG", 147)
        two.add("b", "ORG", 143)
        two.add("b", "PER", 857)
        s = ProjectedSentence(LabeledSentence(("a", "b"), ("B-PER", "B-ORG")))
        assert quality_score(s, two) == pytest.approx(0.498, abs=1e-12)

        one = [s]
        th = SelectionThresholds(0.7, 2)
        assert select_data(one, th, scores=[(0.7, 2)]) == one
        assert select_data(one, th, scores=[(0.69, 2)]) == []


def test_mapping_recovery(criterion):
    with criterion(7, "weighted least squares recovers the inverse map") as info:
        rng = np.random.default_rng(11)
        d, n = 20, 500
        U = rng.normal(size=(n, d))
        A = rng.normal(size=(d, d))
        while np.linalg.cond(A) > 1e3:
            A = rng.normal(size=(d, d))
        V = U @ A.T
        src = EmbeddingTable([f"s{i}" for i in range(n)], U)
        tgt = EmbeddingTable([f"t{i}" for i in range(n)], V)
        w = rng.uniform(0.1, 1.0, n)
        dictionary = BilingualDictionary([DictionaryEntry(f"s{i}", f"t{i}", float(w[i])) for i in range(n)])
        M = learn_mapping(dictionary, src, tgt, ridge=0.0).matrix
        inv = np.linalg.inv(A)
        err = np.linalg.norm(M - inv) / np.linalg.norm(inv)
        assert err < 1e-6

        noisy = EmbeddingTable(tgt.words, V + rng.normal(0, 0.1, V.shape))
        base = learn_mapping(dictionary, src, noisy, ridge=0.0).matrix
        scaled = BilingualDictionary([DictionaryEntry(e.source, e.target, 37.5 * e.weight) for e in dictionary.entries])
        diff = np.abs(learn_mapping(scaled, src, noisy, ridge=0.0).matrix - base).max()
        assert diff < 1e-10
        info["text"] = f"relative error {err:.1e}, rescaling diff {diff:.1e}"


def test_transfer_equivalence(criterion):
    with criterion(8, "identity transfer is exact; rotated transfer within 2 F1") as info:
        result = run_transfer_experiment()
        info["text"] = (f"source {100 * result.source.f1:.2f}, transfer {100 * result.transfer.f1:.2f}, "
                        f"{result.dictionary_size} pairs")
        assert result.identity_match
        assert result.dictionary_size == 1000
        assert result.gap <= 2.0
        assert result.seconds < 300


@st.composite
def entity_configuration(draw):
    n = draw(st.integers(1, 10))

    def spans():
        out, pos = [], 0
        while pos < n:
            pos += draw(st.integers(0, 2))
            if pos >= n:
                break
            length = draw(st.integers(1, min(3, n - pos)))
            if draw(st.booleans()):
                out.append(EntityMention(pos, pos + length, draw(st.sampled_from(["PER", "LOC", "ORG", "MISC"]))))
            pos += length
        return out

    tokens = tuple(f"t{i}" for i in range(n))
    confs = [tuple(draw(st.lists(st.floats(0, 1), min_size=n, max_size=n))) for _ in range(2)]
    a = ConfidenceTaggedSentence(tokens, tuple(spans_to_iob(spans(), n)), confs[0])
    b = ConfidenceTaggedSentence(tokens, tuple(spans_to_iob(spans(), n)), confs[1])
    return a, b


@given(entity_configuration())
@settings(max_examples=1000, deadline=None)
def _rank_keeps_first_system_entities(pair):
    a, b = pair
    assert set(a.entities()) <= set(codecode_rank(a, b).entities())


def test_codecode_fixtures(criterion):
    with criterion(9, "co-decoding worked example, AP containment, exclude-O rule"):
        tokens = tuple("abcde")
        ap = ConfidenceTaggedSentence(tokens, ("B-PER", "O", "O", "O", "O"), (0.9,) * 5)
        rp = ConfidenceTaggedSentence(tokens, ("B-ORG", "I-ORG", "O", "B-LOC", "I-LOC"), (0.8,) * 5)
        assert codecode_rank(ap, rp).tags == ("B-PER", "O", "O", "B-LOC", "I-LOC")
        _rank_keeps_first_system_entities()
        weak = ConfidenceTaggedSentence(tokens, ("O", "B-LOC", "O", "O", "O"), (1.0, 0.01, 1.0, 1.0, 1.0))
        rival = ConfidenceTaggedSentence(tokens, ("O",) * 5, (1.0,) * 5)
        assert codecode_confidence_exclude_o(weak, rival).tags == weak.tags
        assert codecode_confidence_exclude_o(rival, weak).tags == weak.tags


def test_codecode_benefit(criterion):
    with criterion(10, "rank co-decoding beats both systems by >= 1 F1") as info:
        result = run_codecode_experiment()
        p, t, r = (100 * x.f1 for x in (result.projection, result.transfer, result.rank))
        info["text"] = (f"projection P {100 * result.projection.precision:.1f} R {100 * result.projection.recall:.1f} "
                        f"F1 {p:.2f}, transfer {t:.2f}, rank {r:.2f}, conf {100 * result.confidence.f1:.2f}")
        assert result.projection.precision > result.projection.recall
        assert r >= max(p, t) + 1.0
        assert result.seconds < 600


def test_evaluator_and_significance(criterion):
    with criterion(11, "phrasal F1 fixture and shuffling-test extremes") as info:
        def sent(tags):
            return LabeledSentence(tuple(f"w{i}" for i in range(len(tags))), tuple(tags))

        gold = [sent(["B-PER", "I-PER", "O"]), sent(["B-LOC"]), sent(["O", "B-ORG", "B-PER"]),
                sent(["O", "O"]), sent(["B-MISC", "O", "B-LOC", "I-LOC"])]
        pred = [sent(["B-PER", "I-PER", "O"]), sent(["B-ORG"]), sent(["O", "B-ORG", "O"]),
                sent(["B-PER", "O"]), sent(["B-MISC", "O", "B-LOC", "O"])]
        # gold 6 entities, predicted 6, correct 3
        report = phrasal_f1(gold, pred)
        assert (report.precision, report.recall, report.f1) == pytest.approx((0.5, 0.5, 0.5))

        assert stratified_shuffling_test(pred, pred, gold, iterations=10000).p_value == 1.0
        many = [LabeledSentence((f"x{k}", "y", "z"), ("B-PER", "O", "B-LOC")) for k in range(200)]
        empty = [LabeledSentence(s.tokens, ("O", "O", "O")) for s in many]
        p = stratified_shuffling_test(many, empty, many, iterations=10000, seed=0).p_value
        assert p < 0.001
        info["text"] = f"perfect vs all-O p = {p:.1e}"
