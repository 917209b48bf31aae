"""Desk-scale synthetic experiments for data selection, model transfer and co-decoding.

Each runner returns a plain result dataclass; ``scripts/`` wraps them for
the command line and the acceptance tests call them directly.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, replace
from functools import partial
from typing import Sequence

import numpy as np

from .codecode import codecode_confidence_exclude_o, codecode_rank
from .corpus import ConfidenceTaggedSentence, LabeledSentence
from .embeddings import CbowConfig, EmbeddingTable, train_cbow_variant
from .evaluation import EvalReport, phrasal_f1
from .mapping import (
    BilingualDictionary,
    DictionaryEntry,
    MappingMatrix,
    extract_dictionary,
    learn_mapping,
    transfer_decode,
)
from .memm import OrderOMEMMModel, memm_decode, memm_train
from .neural import NNModel, NNTrainConfig, nn_decode, nn_train
from .optim import TrainConfig
from .projection import (
    SearchResult,
    SelectionThresholds,
    build_frequency_table,
    coordinate_search,
    project_corpus,
    select_data,
)
from .synth import SourceLanguage, SyntheticLanguageSpec, synth_bitext, translate_corpus

log = logging.getLogger(__name__)

MEMM_CONFIG = TrainConfig(epochs=8, learning_rate=0.5, batch_size=64, l2=1e-4)


def evaluate_outputs(gold: Sequence[LabeledSentence], outputs: Sequence[ConfidenceTaggedSentence]) -> EvalReport:
    return phrasal_f1(gold, [o.as_labeled() for o in outputs])


def memm_outputs(model: OrderOMEMMModel, data: Sequence[LabeledSentence]) -> list[ConfidenceTaggedSentence]:
    return [memm_decode(model, s.tokens) for s in data]


def _train_memm(sentences, config: TrainConfig, order: int) -> OrderOMEMMModel:
    return memm_train([p.sentence for p in sentences], config, order=order)


def _dev_f1(model, dev):
    return evaluate_outputs(dev, memm_outputs(model, dev)).f1


# -- data selection ------------------------------------------------------------

@dataclass(frozen=True)
class SelectionExperimentConfig:
    bitext_size: int = 2000
    dev_size: int = 200
    test_size: int = 500
    alignment_noise: float = 1.0
    noisy_fraction: float = 0.4
    order: int = 2
    train: TrainConfig = MEMM_CONFIG
    seed: int = 0


@dataclass
class SelectionExperimentResult:
    baseline: EvalReport
    selected: EvalReport
    search: SearchResult
    projected_size: int
    selected_size: int
    seconds: float

    @property
    def gain(self) -> float:
        return 100 * (self.selected.f1 - self.baseline.f1)


def run_selection_experiment(cfg: SelectionExperimentConfig = SelectionExperimentConfig()) -> SelectionExperimentResult:
    """Projected-data MEMM with and without coordinate-search selection."""
    start = time.perf_counter()
    lang = SourceLanguage(seed=cfg.seed)
    spec = SyntheticLanguageSpec(alignment_noise=cfg.alignment_noise, noisy_fraction=cfg.noisy_fraction, seed=cfg.seed + 3)
    bitext = synth_bitext(lang.corpus(cfg.bitext_size, 1), spec)
    dev = translate_corpus(lang.corpus(cfg.dev_size, 2), spec)
    test = translate_corpus(lang.corpus(cfg.test_size, 3), spec)

    projected = project_corpus(bitext.pairs)
    table = build_frequency_table(projected)
    trainer = partial(_train_memm, config=cfg.train, order=cfg.order)

    baseline = trainer(projected)
    search = coordinate_search(projected, dev, trainer, _dev_f1, table)
    chosen = select_data(projected, search.thresholds, table)
    model = trainer(chosen)
    return SelectionExperimentResult(
        baseline=evaluate_outputs(test, memm_outputs(baseline, test)),
        selected=evaluate_outputs(test, memm_outputs(model, test)),
        search=search,
        projected_size=len(projected),
        selected_size=len(chosen),
        seconds=time.perf_counter() - start,
    )


# -- model transfer ------------------------------------------------------------

@dataclass(frozen=True)
class TransferExperimentConfig:
    mono_size: int = 10000
    train_size: int = 1500
    test_size: int = 500
    dictionary_size: int = 1000
    embeddings: CbowConfig = CbowConfig(dim=30, epochs=5, min_count=2)
    nn: NNTrainConfig = NNTrainConfig(epochs=10, learning_rate=0.2)
    architecture: str = "nn1"
    seed: int = 0


@dataclass
class TransferExperimentResult:
    identity_match: bool  # token-identical outputs on the identity language
    source: EvalReport  # source model on held-out source text
    transfer: EvalReport  # same model through the learned map on target text
    mapping: MappingMatrix
    dictionary_size: int
    seconds: float

    @property
    def gap(self) -> float:
        return 100 * abs(self.source.f1 - self.transfer.f1)


def random_rotation(dim: int, rng: np.random.Generator) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


def run_transfer_experiment(cfg: TransferExperimentConfig = TransferExperimentConfig()) -> TransferExperimentResult:
    """Identity-language equivalence, then transfer through a rotated target space."""
    start = time.perf_counter()
    lang = SourceLanguage(seed=cfg.seed)
    src_emb = train_cbow_variant([s.tokens for s in lang.corpus(cfg.mono_size, 10)], cfg.embeddings)
    model = nn_train(lang.corpus(cfg.train_size, 20), src_emb, cfg.nn, cfg.architecture)
    held_out = lang.corpus(cfg.test_size, 3)
    source_out = [nn_decode(model, s.tokens, src_emb.get) for s in held_out]

    # identity language: same words, same vectors, map fitted on identical pairs
    ident = BilingualDictionary([DictionaryEntry(w, w, 1.0) for w in src_emb.words[: cfg.dictionary_size]])
    m_ident = learn_mapping(ident, src_emb, src_emb, ridge=0.0)
    ident_out = [transfer_decode(s.tokens, m_ident, src_emb, src_emb, model) for s in held_out]
    identity_match = all(a.tags == b.tags for a, b in zip(source_out, ident_out))

    # rotated language: transformed words whose vectors are a rotation of the source ones
    spec = SyntheticLanguageSpec(seed=cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    rot = random_rotation(src_emb.dim, rng)
    tgt_words = [spec.transform(w) for w in src_emb.words]
    tgt_emb = EmbeddingTable(tgt_words, src_emb.vectors @ rot.T, src_emb.unk @ rot.T)
    n_pairs = min(cfg.dictionary_size, len(src_emb.words))
    picks = np.sort(rng.choice(len(src_emb.words), n_pairs, replace=False))
    dictionary = BilingualDictionary([DictionaryEntry(src_emb.words[k], tgt_words[k], 1.0) for k in picks])
    mapping = learn_mapping(dictionary, src_emb, tgt_emb)
    target = translate_corpus(held_out, spec)
    transfer_out = [transfer_decode(s.tokens, mapping, tgt_emb, src_emb, model) for s in target]
    return TransferExperimentResult(
        identity_match=identity_match,
        source=evaluate_outputs(held_out, source_out),
        transfer=evaluate_outputs(target, transfer_out),
        mapping=mapping,
        dictionary_size=len(dictionary),
        seconds=time.perf_counter() - start,
    )


# -- co-decoding -----------------------------------------------------------------

@dataclass(frozen=True)
class CodecodeExperimentConfig:
    bitext_size: int = 2000
    test_size: int = 500
    source_mono_size: int = 10000
    target_mono_size: int = 3000  # a smaller target corpus gives noisier target vectors
    nn_train_size: int = 1500
    alignment_noise: float = 1.0
    noisy_fraction: float = 0.4
    miss_rate: float = 0.5  # share of entities the source-side tagger misses
    thresholds: SelectionThresholds = SelectionThresholds(0.9, 1)
    dictionary_min_freq: int = 2
    embeddings: CbowConfig = CbowConfig(dim=30, epochs=5, min_count=2)
    nn: NNTrainConfig = NNTrainConfig(epochs=10, learning_rate=0.05)
    architecture: str = "nn2"
    order: int = 2
    train: TrainConfig = MEMM_CONFIG
    seed: int = 0


@dataclass
class CodecodeExperimentResult:
    projection: EvalReport
    transfer: EvalReport
    rank: EvalReport
    confidence: EvalReport
    selected_size: int
    seconds: float

    @property
    def rank_margin(self) -> float:
        return 100 * (self.rank.f1 - max(self.projection.f1, self.transfer.f1))


def pair_count_lines(counts) -> list[str]:
    return [f"{x}\t{y}\t{c}\n" for (x, y), c in sorted(counts.items())]


def run_codecode_experiment(cfg: CodecodeExperimentConfig = CodecodeExperimentConfig()) -> CodecodeExperimentResult:
    """High-precision projection-trained MEMM combined with a balanced transfer tagger."""
    start = time.perf_counter()
    lang = SourceLanguage(seed=cfg.seed)
    spec = SyntheticLanguageSpec(
        alignment_noise=cfg.alignment_noise, noisy_fraction=cfg.noisy_fraction, miss_rate=cfg.miss_rate, seed=cfg.seed + 3
    )
    bitext = synth_bitext(lang.corpus(cfg.bitext_size, 1), spec)
    test = translate_corpus(lang.corpus(cfg.test_size, 3), spec)

    projected = project_corpus(bitext.pairs)
    chosen = select_data(projected, cfg.thresholds, build_frequency_table(projected))
    ap_model = _train_memm(chosen, cfg.train, cfg.order)
    ap_out = memm_outputs(ap_model, test)

    src_emb = train_cbow_variant([s.tokens for s in lang.corpus(cfg.source_mono_size, 10)], cfg.embeddings)
    tgt_cfg = replace(cfg.embeddings, seed=cfg.embeddings.seed + 1)
    tgt_emb = train_cbow_variant([spec.translate(s.tokens) for s in lang.corpus(cfg.target_mono_size, 11)], tgt_cfg)
    dictionary = extract_dictionary(iter(pair_count_lines(bitext.pair_counts())), min_freq=cfg.dictionary_min_freq)
    mapping = learn_mapping(dictionary, src_emb, tgt_emb)
    nn_model: NNModel = nn_train(lang.corpus(cfg.nn_train_size, 20), src_emb, cfg.nn, cfg.architecture)
    rp_out = [transfer_decode(s.tokens, mapping, tgt_emb, src_emb, nn_model) for s in test]

    return CodecodeExperimentResult(
        projection=evaluate_outputs(test, ap_out),
        transfer=evaluate_outputs(test, rp_out),
        rank=evaluate_outputs(test, [codecode_rank(a, b) for a, b in zip(ap_out, rp_out)]),
        confidence=evaluate_outputs(test, [codecode_confidence_exclude_o(a, b) for a, b in zip(ap_out, rp_out)]),
        selected_size=len(chosen),
        seconds=time.perf_counter() - start,
    )
