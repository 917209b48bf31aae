"""``xlner`` command-line interface.

Exit status: 0 on success, 1 when the configuration is invalid (nothing is
written), 2 when a command fails at run time. Logs go to standard error.
"""
from __future__ import annotations

import argparse
import contextlib
import logging
import os
import sys
from pathlib import Path
from typing import Callable, Iterator, Sequence, TextIO

from . import serialization
from .codecode import SCHEMES, codecode_confidence_exclude_o, codecode_rank
from .config import (
    INPUT,
    OUTPUT,
    ConfigError,
    Option,
    PipelineConfig,
    boolean,
    positive_int,
    read_config_file,
    resolve,
    ridge,
    thresholds,
)
from .corpus import (
    AlignedSentencePair,
    ConfidenceTaggedSentence,
    LabeledSentence,
    attach_confidences,
    read_alignments,
    read_confidences,
    read_conll,
    read_tokenized,
    write_alignments,
    write_confidences,
    write_conll,
    write_tokenized,
)
from .crf import LinearChainCRFModel, crf_decode, crf_train
from .embeddings import CbowConfig, EmbeddingTable, train_cbow_variant
from .evaluation import MIN_ITERATIONS, phrasal_f1, stratified_shuffling_test
from .mapping import MappingMatrix, extract_dictionary, learn_mapping, transfer_decode
from .memm import OrderOMEMMModel, memm_decode, memm_train
from .neural import NNModel, NNTrainConfig, nn_decode, nn_train
from .optim import TrainConfig
from .projection import (
    build_frequency_table,
    coordinate_search,
    project_corpus,
    score_corpus,
    select_data,
    write_scores,
)
from .synth import SourceLanguage, SyntheticLanguageSpec, synth_bitext, translate_corpus

log = logging.getLogger("xlner")


class RuntimeFailure(RuntimeError):
    pass


# -- option tables -------------------------------------------------------------

COMMON = [
    Option("seed", int, 0, help="random seed"),
    Option("workers", positive_int, 1, help="parallelism cap (commands run in one process)"),
]

TRAINING = [
    Option("epochs", positive_int, help="training epochs"),
    Option("learning-rate", float, help="initial SGD step size"),
    Option("decay", float, help="inverse-time step decay"),
    Option("l2", float, help="L2 penalty"),
    Option("batch-size", positive_int, help="mini-batch size"),
    Option("optimizer", str, "sgd", choices=("sgd", "lbfgs")),
]

NN_SHAPE = [
    Option("window", int, 2, help="context words on each side"),
    Option("hidden", positive_int, 100, help="hidden units"),
    Option("prototypes", positive_int, 40, help="prototype rows (nn2)"),
    Option("temperature", float, 0.1, help="prototype softmax temperature (nn2)"),
]

BITEXT = [
    Option("source", str, required=True, role=INPUT,
           help="source side: CoNLL with tags, or tokenized text when --source-model is given"),
    Option("target", str, required=True, role=INPUT, help="tokenized target side, one sentence per line"),
    Option("alignments", str, required=True, role=INPUT, help="Pharaoh i-j links, one line per sentence"),
    Option("source-model", str, role=INPUT, help="CRF or NN model tagging the source side"),
    Option("source-embeddings", str, role=INPUT, help="embeddings for an NN source model"),
    Option("dev", str, role=INPUT, help="target-language CoNLL dev set"),
    Option("order", positive_int, 2, help="MEMM history length"),
]


def _training_config(cfg: PipelineConfig, base: TrainConfig) -> TrainConfig:
    return TrainConfig(
        epochs=cfg.get("epochs", base.epochs),
        learning_rate=cfg.get("learning_rate", base.learning_rate),
        decay=cfg.get("decay", base.decay),
        l2=cfg.get("l2", base.l2),
        batch_size=cfg.get("batch_size", base.batch_size),
        seed=cfg.seed,
        tol=base.tol,
        optimizer=cfg.optimizer,
    )


def _nn_config(cfg: PipelineConfig) -> NNTrainConfig:
    base = NNTrainConfig()
    return NNTrainConfig(
        epochs=cfg.get("epochs", base.epochs),
        learning_rate=cfg.get("learning_rate", base.learning_rate),
        decay=cfg.get("decay", base.decay),
        batch_size=cfg.get("batch_size", base.batch_size),
        seed=cfg.seed,
        l2=cfg.get("l2", base.l2),
        window=cfg.window,
        hidden=cfg.hidden,
        prototypes=cfg.prototypes,
        temperature=cfg.temperature,
    )


# -- file helpers ----------------------------------------------------------------

@contextlib.contextmanager
def _open_out(path: str | None) -> Iterator[TextIO]:
    if path in (None, "-"):
        yield sys.stdout
        return
    with open(path, "w", encoding="utf-8") as fh:
        yield fh


def _read_text(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _read_embeddings(path: str) -> EmbeddingTable:
    with open(path, encoding="utf-8") as fh:
        return EmbeddingTable.read(fh)


def load_model(path: str):
    kind = serialization.peek_kind(path)
    loaders = {"crf": LinearChainCRFModel.load, "memm": OrderOMEMMModel.load, "nn": NNModel.load}
    if kind not in loaders:
        raise RuntimeFailure(f"{path}: unknown model kind {kind!r}")
    return loaders[kind](path)


def decoder_for(model, embeddings: EmbeddingTable | None, beam: int | None) -> Callable[[Sequence[str]], ConfidenceTaggedSentence]:
    if isinstance(model, LinearChainCRFModel):
        return lambda toks: crf_decode(model, toks)
    if isinstance(model, OrderOMEMMModel):
        return lambda toks: memm_decode(model, toks, beam=beam)
    if embeddings is None:
        raise RuntimeFailure("an NN model needs embeddings")
    return lambda toks: nn_decode(model, toks, embeddings.get, beam=beam or 1)


def _write_tagged(outputs: Sequence[ConfidenceTaggedSentence], output: str | None, confidences: str | None) -> None:
    with _open_out(output) as fh:
        write_conll(outputs, fh)
    if confidences:
        with _open_out(confidences) as fh:
            write_confidences(outputs, fh)


def _needs_embeddings_for_nn(model_key: str, emb_key: str):
    def check(cfg: PipelineConfig) -> str | None:
        path = cfg.get(model_key)
        if path and cfg.get(emb_key) is None:
            try:
                kind = serialization.peek_kind(path)
            except (OSError, ValueError) as exc:
                return f"{model_key.replace('_', '-')}: {exc}"
            if kind == "nn":
                return f"{emb_key.replace('_', '-')} is required for an NN model"
        return None

    return check


# -- commands ---------------------------------------------------------------------

def cmd_train_source(cfg: PipelineConfig) -> None:
    data = read_conll(_read_text(cfg.train))
    log.info("training %s on %d sentences", cfg.model_type, len(data))
    if cfg.model_type == "crf":
        model = crf_train(data, _training_config(cfg, TrainConfig()))
    else:
        model = nn_train(data, _read_embeddings(cfg.embeddings), _nn_config(cfg), cfg.model_type)
    if model.trace and model.trace.objectives:
        log.info("final objective %.6f over %d epochs", model.trace.objectives[-1], len(model.trace.objectives))
    model.save(cfg.output)


def cmd_tag(cfg: PipelineConfig) -> None:
    model = load_model(cfg.model)
    embeddings = _read_embeddings(cfg.embeddings) if cfg.embeddings else None
    decode = decoder_for(model, embeddings, cfg.beam)
    text = _read_text(cfg.input)
    sentences = [s.tokens for s in read_conll(text)] if cfg.input_format == "conll" else read_tokenized(text)
    _write_tagged([decode(toks) for toks in sentences], cfg.output, cfg.confidences)


def _load_bitext(cfg: PipelineConfig) -> list[AlignedSentencePair]:
    targets = read_tokenized(_read_text(cfg.target))
    links = read_alignments(_read_text(cfg.alignments))
    if cfg.source_model:
        model = load_model(cfg.source_model)
        embeddings = _read_embeddings(cfg.source_embeddings) if cfg.source_embeddings else None
        decode = decoder_for(model, embeddings, None)
        sources = [LabeledSentence(toks, decode(toks).tags) for toks in read_tokenized(_read_text(cfg.source))]
    else:
        sources = read_conll(_read_text(cfg.source))
    if not len(sources) == len(targets) == len(links):
        raise RuntimeFailure(
            f"bitext sizes differ: {len(sources)} source, {len(targets)} target, {len(links)} alignment lines"
        )
    pairs = []
    for k, (s, t, a) in enumerate(zip(sources, targets, links)):
        try:
            pairs.append(AlignedSentencePair(s.tokens, t, frozenset(a), s.tags))
        except ValueError as exc:
            raise RuntimeFailure(f"sentence pair {k}: {exc}") from None
    return pairs


def _memm_trainer(cfg: PipelineConfig):
    config = _training_config(cfg, TrainConfig(batch_size=256))

    def train(sentences):
        return memm_train([p.sentence for p in sentences], config, order=cfg.order)

    return train


def _memm_dev_f1(model, dev):
    return phrasal_f1(dev, [memm_decode(model, s.tokens).as_labeled() for s in dev]).f1


def cmd_project_select_train(cfg: PipelineConfig) -> None:
    projected = project_corpus(_load_bitext(cfg))
    table = build_frequency_table(projected)
    train = _memm_trainer(cfg)
    search = None
    if cfg.thresholds == "auto":
        search = coordinate_search(projected, read_conll(_read_text(cfg.dev)), train, _memm_dev_f1, table)
        chosen_thresholds = search.thresholds
    else:
        chosen_thresholds = cfg.thresholds
    scores = score_corpus(projected, table)
    selected = select_data(projected, chosen_thresholds, scores=scores)
    log.info("selection q=%s n=%s keeps %d of %d sentences", chosen_thresholds.q, chosen_thresholds.n, len(selected), len(projected))
    if not selected:
        raise RuntimeFailure(
            f"no sentence passes q>={chosen_thresholds.q}, n>={chosen_thresholds.n}; lower the thresholds"
        )
    model = train(selected)
    model.save(cfg.output)
    if cfg.scores:
        with _open_out(cfg.scores) as fh:
            write_scores(((k, q, n) for k, (q, n) in enumerate(scores)), fh)
    if cfg.table:
        with _open_out(cfg.table) as fh:
            table.write(fh)
    if cfg.projected:
        with _open_out(cfg.projected) as fh:
            write_conll([p.sentence for p in projected], fh)
    report = [
        ("projected_size", len(projected)),
        ("selected_size", len(selected)),
        ("projected_tokens", sum(len(p.sentence) for p in projected)),
        ("selected_tokens", sum(len(p.sentence) for p in selected)),
        ("q", chosen_thresholds.q),
        ("n", chosen_thresholds.n),
        ("skipped_entities", sum(p.skipped for p in projected)),
    ]
    with _open_out(cfg.report) as fh:
        fh.write("".join(f"{k}\t{v}\n" for k, v in report))
        if search is not None:
            fh.write("\n")
            search.write(fh)


def cmd_coordinate_search(cfg: PipelineConfig) -> None:
    projected = project_corpus(_load_bitext(cfg))
    table = build_frequency_table(projected)
    search = coordinate_search(projected, read_conll(_read_text(cfg.dev)), _memm_trainer(cfg), _memm_dev_f1, table)
    with _open_out(cfg.output) as fh:
        search.write(fh)
    log.info("selected q=%s n=%s (dev F1 %.4f)", search.thresholds.q, search.thresholds.n, search.best_f1())


def cmd_learn_mapping(cfg: PipelineConfig) -> None:
    with open(cfg.pair_counts, encoding="utf-8") as fh:
        dictionary = extract_dictionary(fh, cfg.min_freq, cfg.dict_mode)
    if cfg.dictionary:
        with _open_out(cfg.dictionary) as fh:
            fh.write("".join(f"{e.source}\t{e.target}\t{e.weight!r}\n" for e in dictionary.entries))
    mapping = learn_mapping(dictionary, _read_embeddings(cfg.source_embeddings), _read_embeddings(cfg.target_embeddings), cfg.ridge)
    log.info("%d pairs used, %d dropped, weighted residual %.6g", mapping.pairs_used, mapping.pairs_dropped, mapping.residual)
    with _open_out(cfg.output) as fh:
        mapping.write(fh)


def cmd_transfer(cfg: PipelineConfig) -> None:
    model = load_model(cfg.model)
    if not isinstance(model, NNModel):
        raise RuntimeFailure("model transfer needs an NN model")
    with open(cfg.mapping, encoding="utf-8") as fh:
        mapping = MappingMatrix.read(fh)
    src_emb = _read_embeddings(cfg.source_embeddings)
    tgt_emb = _read_embeddings(cfg.target_embeddings)
    sentences = read_tokenized(_read_text(cfg.input))
    outputs = [transfer_decode(toks, mapping, tgt_emb, src_emb, model, beam=cfg.beam) for toks in sentences]
    _write_tagged(outputs, cfg.output, cfg.confidences)


def _read_tagged(path: str, conf_path: str | None) -> list[ConfidenceTaggedSentence]:
    sentences = read_conll(_read_text(path))
    table = read_confidences(_read_text(conf_path)) if conf_path else {}
    return attach_confidences(sentences, table)


def cmd_codecode(cfg: PipelineConfig) -> None:
    a = _read_tagged(cfg.ap, cfg.ap_confidences)
    b = _read_tagged(cfg.rp, cfg.rp_confidences)
    if len(a) != len(b):
        raise RuntimeFailure(f"{len(a)} sentences in {cfg.ap} but {len(b)} in {cfg.rp}")
    combine = codecode_rank if cfg.scheme == "rank" else codecode_confidence_exclude_o
    outputs = []
    for k, (x, y) in enumerate(zip(a, b)):
        try:
            outputs.append(combine(x, y))
        except ValueError as exc:
            raise RuntimeFailure(f"sentence {k}: {exc}") from None
    _write_tagged(outputs, cfg.output, cfg.confidences)


def cmd_evaluate(cfg: PipelineConfig) -> None:
    report = phrasal_f1(read_conll(_read_text(cfg.gold)), read_conll(_read_text(cfg.pred)))
    with _open_out(cfg.output) as fh:
        fh.write(report.to_kv() if cfg.format == "kv" else report.to_text())


def cmd_significance(cfg: PipelineConfig) -> None:
    gold = read_conll(_read_text(cfg.gold))
    result = stratified_shuffling_test(
        read_conll(_read_text(cfg.system_a)), read_conll(_read_text(cfg.system_b)), gold, cfg.iterations, cfg.seed
    )
    verdict = "significant" if result.significant(cfg.alpha) else "not-significant"
    with _open_out(cfg.output) as fh:
        fh.write(
            f"f1_a\t{result.f1_a!r}\nf1_b\t{result.f1_b!r}\nobserved\t{result.observed!r}\n"
            f"p_value\t{result.p_value!r}\niterations\t{result.iterations}\nalpha\t{cfg.alpha}\nverdict\t{verdict}\n"
        )


def _language_spec(cfg: PipelineConfig) -> SyntheticLanguageSpec:
    return SyntheticLanguageSpec(
        suffix=cfg.suffix,
        lowercase=cfg.lowercase,
        alignment_noise=cfg.alignment_noise,
        noisy_fraction=cfg.noisy_fraction,
        label_noise=cfg.label_noise,
        miss_rate=cfg.miss_rate,
        seed=cfg.seed,
    )


def cmd_synth_bitext(cfg: PipelineConfig) -> None:
    if cfg.source:
        source = read_conll(_read_text(cfg.source))
    else:
        source = SourceLanguage(seed=cfg.lexicon_seed).corpus(cfg.sentences, cfg.seed)
    try:
        bitext = synth_bitext(source, _language_spec(cfg))
    except ValueError as exc:
        raise RuntimeFailure(str(exc)) from None
    out = Path(cfg.output_dir)
    out.mkdir(exist_ok=True)
    (out / "source.conll").write_text(write_conll(bitext.source_sentences()), encoding="utf-8")
    (out / "source.txt").write_text(write_tokenized(p.source for p in bitext.pairs), encoding="utf-8")
    (out / "target.txt").write_text(write_tokenized(p.target for p in bitext.pairs), encoding="utf-8")
    (out / "alignments.txt").write_text(write_alignments(bitext.link_sets()), encoding="utf-8")
    (out / "target_gold.conll").write_text(write_conll(bitext.gold_target), encoding="utf-8")
    counts = sorted(bitext.pair_counts().items())
    (out / "pair_counts.tsv").write_text("".join(f"{x}\t{y}\t{c}\n" for (x, y), c in counts), encoding="utf-8")
    log.info("wrote %d sentence pairs to %s (%d noisy)", len(bitext.pairs), out, sum(bitext.noisy))


def cmd_synth_corpus(cfg: PipelineConfig) -> None:
    corpus = SourceLanguage(seed=cfg.lexicon_seed).corpus(cfg.sentences, cfg.seed)
    if cfg.language == "target":
        corpus = translate_corpus(corpus, _language_spec(cfg))
    with _open_out(cfg.output) as fh:
        if cfg.tokens_only:
            write_tokenized((s.tokens for s in corpus), fh)
        else:
            write_conll(corpus, fh)


def cmd_train_embeddings(cfg: PipelineConfig) -> None:
    text = _read_text(cfg.corpus)
    sentences = [s.tokens for s in read_conll(text)] if cfg.input_format == "conll" else read_tokenized(text)
    table = train_cbow_variant(
        sentences,
        CbowConfig(
            dim=cfg.dim, window=cfg.window, epochs=cfg.epochs, negative=cfg.negative,
            learning_rate=cfg.learning_rate, min_count=cfg.min_count, seed=cfg.seed,
        ),
    )
    with _open_out(cfg.output) as fh:
        table.write(fh)


def _auto_needs_dev(cfg: PipelineConfig) -> str | None:
    if cfg.thresholds == "auto" and not cfg.dev:
        return "thresholds=auto requires a dev set (--dev)"
    return None


def _dev_required(cfg: PipelineConfig) -> str | None:
    return None if cfg.dev else "coordinate search requires a dev set (--dev)"


SYNTH_LANGUAGE = [
    Option("suffix", str, "a", help="suffix appended to every transformed word"),
    Option("lowercase", boolean, True, help="lowercase transformed words"),
    Option("alignment-noise", float, 0.0, help="per-link corruption rate in noisy pairs"),
    Option("noisy-fraction", float, 1.0, help="share of pairs exposed to alignment noise"),
    Option("label-noise", float, 0.0, help="per-entity retyping rate on the source side"),
    Option("miss-rate", float, 0.0, help="per-entity rate of dropping a source entity"),
    Option("lexicon-seed", int, 0, help="seed of the synthetic name lexicon"),
]

COMMANDS: dict[str, tuple[Callable[[PipelineConfig], None], list[Option], list, str]] = {
    "train-source": (cmd_train_source, [
        Option("train", str, required=True, role=INPUT, help="labeled source CoNLL corpus"),
        Option("model-type", str, "crf", choices=("crf", "nn1", "nn2")),
        Option("embeddings", str, role=INPUT, help="word2vec text embeddings (nn1, nn2)"),
        Option("output", str, required=True, role=OUTPUT, help="model file"),
        *TRAINING, *NN_SHAPE,
    ], [lambda c: "embeddings are required for NN models" if c.model_type != "crf" and not c.embeddings else None],
        "train a source-language CRF or NN tagger"),
    "tag": (cmd_tag, [
        Option("model", str, required=True, role=INPUT),
        Option("input", str, required=True, role=INPUT),
        Option("input-format", str, "tokens", choices=("tokens", "conll")),
        Option("embeddings", str, role=INPUT, help="embeddings for an NN model"),
        Option("beam", positive_int, help="beam width (MEMM, NN)"),
        Option("output", str, "-", role=OUTPUT),
        Option("confidences", str, role=OUTPUT, help="confidence sidecar"),
    ], [_needs_embeddings_for_nn("model", "embeddings")], "decode text with a saved model"),
    "project-select-train": (cmd_project_select_train, [
        *BITEXT,
        Option("thresholds", thresholds, "auto", help="'auto' or 'q,n'"),
        Option("output", str, required=True, role=OUTPUT, help="target MEMM model file"),
        Option("report", str, "-", role=OUTPUT, help="selection report"),
        Option("scores", str, role=OUTPUT, help="per-sentence q and n sidecar"),
        Option("table", str, role=OUTPUT, help="entity frequency table"),
        Option("projected", str, role=OUTPUT, help="projected target CoNLL"),
        *TRAINING,
    ], [_auto_needs_dev, _needs_embeddings_for_nn("source_model", "source_embeddings")],
        "project tags through alignments, select sentences and train a target MEMM"),
    "coordinate-search": (cmd_coordinate_search, [
        *BITEXT,
        Option("output", str, "-", role=OUTPUT, help="search grid"),
        *TRAINING,
    ], [_dev_required, _needs_embeddings_for_nn("source_model", "source_embeddings")],
        "search the selection thresholds on a dev set"),
    "learn-mapping": (cmd_learn_mapping, [
        Option("pair-counts", str, required=True, role=INPUT, help="source<TAB>target<TAB>count lines"),
        Option("source-embeddings", str, required=True, role=INPUT),
        Option("target-embeddings", str, required=True, role=INPUT),
        Option("min-freq", positive_int, 1),
        Option("dict-mode", str, "threshold", choices=("threshold", "top1")),
        Option("ridge", ridge, "auto", help="'auto' or a non-negative number"),
        Option("dictionary", str, role=OUTPUT, help="write the weighted dictionary"),
        Option("output", str, required=True, role=OUTPUT, help="mapping matrix"),
    ], [], "fit the target-to-source embedding map"),
    "transfer": (cmd_transfer, [
        Option("model", str, required=True, role=INPUT, help="source NN model"),
        Option("mapping", str, required=True, role=INPUT),
        Option("source-embeddings", str, required=True, role=INPUT),
        Option("target-embeddings", str, required=True, role=INPUT),
        Option("input", str, required=True, role=INPUT, help="tokenized target text"),
        Option("beam", positive_int, 1),
        Option("output", str, "-", role=OUTPUT),
        Option("confidences", str, role=OUTPUT),
    ], [], "tag target text with a source NN model through the map"),
    "codecode": (cmd_codecode, [
        Option("ap", str, required=True, role=INPUT, help="projection-trained system output (CoNLL)"),
        Option("ap-confidences", str, role=INPUT),
        Option("rp", str, required=True, role=INPUT, help="transfer system output (CoNLL)"),
        Option("rp-confidences", str, role=INPUT),
        Option("scheme", str, "rank", choices=SCHEMES),
        Option("output", str, "-", role=OUTPUT),
        Option("confidences", str, role=OUTPUT),
    ], [], "combine two tagged outputs"),
    "evaluate": (cmd_evaluate, [
        Option("gold", str, required=True, role=INPUT),
        Option("pred", str, required=True, role=INPUT),
        Option("format", str, "kv", choices=("kv", "text")),
        Option("output", str, "-", role=OUTPUT),
    ], [], "exact-match entity precision, recall and F1"),
    "significance": (cmd_significance, [
        Option("gold", str, required=True, role=INPUT),
        Option("system-a", str, required=True, role=INPUT),
        Option("system-b", str, required=True, role=INPUT),
        Option("iterations", positive_int, 10000),
        Option("alpha", float, 0.05),
        Option("output", str, "-", role=OUTPUT),
    ], [lambda c: None if c.iterations >= MIN_ITERATIONS else f"iterations must be >= {MIN_ITERATIONS}"],
        "stratified shuffling test between two systems"),
    "synth-bitext": (cmd_synth_bitext, [
        Option("source", str, role=INPUT, help="labeled source CoNLL (default: generate)"),
        Option("sentences", positive_int, 1000, help="sentences to generate without --source"),
        Option("output-dir", str, required=True, role=OUTPUT),
        *SYNTH_LANGUAGE,
    ], [], "write a synthetic bitext with gold target labels"),
    "synth-corpus": (cmd_synth_corpus, [
        Option("sentences", positive_int, 1000),
        Option("language", str, "source", choices=("source", "target")),
        Option("tokens-only", boolean, False, help="write tokenized text instead of CoNLL"),
        Option("output", str, "-", role=OUTPUT),
        *SYNTH_LANGUAGE,
    ], [], "generate a labeled synthetic corpus"),
    "train-embeddings": (cmd_train_embeddings, [
        Option("corpus", str, required=True, role=INPUT),
        Option("input-format", str, "tokens", choices=("tokens", "conll")),
        Option("dim", positive_int, 50),
        Option("window", positive_int, 2),
        Option("epochs", positive_int, 5),
        Option("negative", positive_int, 5),
        Option("learning-rate", float, 0.05),
        Option("min-count", positive_int, 5),
        Option("output", str, required=True, role=OUTPUT),
    ], [], "train CBOW embeddings on monolingual text"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError([message])


def _options(name: str) -> list[Option]:
    return COMMANDS[name][1] + COMMON


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="xlner", description="Cross-lingual named entity recognition toolkit.")
    parser.add_argument("--log-level", default="INFO")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True
    for name, (_, options, _, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", help="key = value file; flags override it")
        p.add_argument("--log-level", dest="sub_log_level", default=None, help="logging level (default INFO)")
        for opt in options + COMMON:
            # values stay raw strings here so file and flag go through one converter
            p.add_argument(f"--{opt.name}", dest=opt.key, default=None, help=opt.help or None)
    return parser


def parse_config(argv: Sequence[str]) -> PipelineConfig:
    args = build_parser().parse_args(argv)
    raw = {k: v for k, v in vars(args).items() if k not in ("command", "config", "log_level", "sub_log_level")}
    errors, flags = [], {}
    for opt in _options(args.command):
        value = raw.get(opt.key)
        if value is None:
            continue
        try:
            flags[opt.key] = opt.type(value)
        except (TypeError, ValueError) as exc:
            errors.append(f"--{opt.name}: {exc}")
    file_values = {}
    if args.config:
        if not os.path.exists(args.config):
            errors.append(f"config file {args.config} does not exist")
        else:
            try:
                file_values = read_config_file(args.config)
            except ConfigError as exc:
                errors += exc.errors
    try:
        cfg = resolve(args.command, _options(args.command), flags, file_values, COMMANDS[args.command][2])
    except ConfigError as exc:
        errors += exc.errors
    if errors:
        raise ConfigError(errors)
    return PipelineConfig(cfg.command, {**cfg.as_dict(), "log_level": args.sub_log_level or args.log_level})


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        for message in exc.errors:
            print(f"xlner: error: {message}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(stream=sys.stderr, level=getattr(logging, cfg.log_level.upper(), logging.INFO),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s", force=True)
    try:
        COMMANDS[cfg.command][0](cfg)
    except Exception as exc:  # report every runtime failure the same way
        log.debug("traceback", exc_info=True)
        print(f"xlner: {cfg.command} failed: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
