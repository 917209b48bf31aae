"""Tag projection across word alignments and quality-based data selection."""
from __future__ import annotations

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence, TextIO

from .corpus import (
    AlignedSentencePair,
    EntityMention,
    LabeledSentence,
    iob_to_spans,
    leftmost_longest,
    spans_to_iob,
)

log = logging.getLogger(__name__)

# absolute slack when comparing a quality score with its threshold
_EPS = 1e-9


@dataclass(frozen=True)
class ProjectedSentence:
    sentence: LabeledSentence
    # (target span, source span) for every projected entity
    provenance: tuple[tuple[EntityMention, EntityMention], ...] = ()
    skipped: int = 0  # source entities with no aligned target token
    index: int = -1  # position in the originating bitext

    @property
    def entities(self) -> list[EntityMention]:
        return self.sentence.entities()

    def surface(self, span: EntityMention) -> str:
        return " ".join(self.sentence.tokens[span.start:span.end])


def project_annotations(pair: AlignedSentencePair, source_tags: Sequence[str] | None = None, index: int = -1) -> ProjectedSentence:
    """Copy source entities onto the target through the alignment links.

    A source entity lands on the convex hull of the target tokens aligned to
    any of its tokens. Overlapping projections keep the leftmost-longest.
    """
    tags = source_tags if source_tags is not None else pair.source_tags
    if tags is None:
        raise ValueError("no source tags to project")
    if len(tags) != len(pair.source):
        raise ValueError("source tags and tokens differ in length")
    by_source: dict[int, list[int]] = defaultdict(list)
    for i, j in pair.links:
        by_source[i].append(j)
    candidates: dict[EntityMention, EntityMention] = {}
    skipped = 0
    for span in iob_to_spans(tags):
        J = [j for i in range(span.start, span.end) for j in by_source.get(i, ())]
        if not J:
            skipped += 1
            continue
        target = EntityMention(min(J), max(J) + 1, span.etype)
        candidates.setdefault(target, span)
    kept = leftmost_longest(candidates)
    target_tags = spans_to_iob(kept, len(pair.target))
    return ProjectedSentence(
        LabeledSentence(pair.target, tuple(target_tags)),
        tuple((t, candidates[t]) for t in kept),
        skipped,
        index,
    )


def project_corpus(pairs: Iterable[AlignedSentencePair], source_tags: Iterable[Sequence[str]] | None = None) -> list[ProjectedSentence]:
    pairs = list(pairs)
    tag_seqs = list(source_tags) if source_tags is not None else [None] * len(pairs)
    return [project_annotations(p, t, k) for k, (p, t) in enumerate(zip(pairs, tag_seqs))]


class FrequencyTable:
    """Per-entity counts of projected types and their relative frequencies."""

    def __init__(self):
        self.counts: dict[str, Counter] = defaultdict(Counter)

    def add(self, surface: str, etype: str, count: int = 1) -> None:
        self.counts[surface][etype] += count

    def __contains__(self, surface: str) -> bool:
        return surface in self.counts

    def __len__(self) -> int:
        return len(self.counts)

    def frequency(self, surface: str, etype: str) -> float:
        row = self.counts.get(surface)
        if row is None:
            raise KeyError(f"entity {surface!r} not in frequency table")
        return row[etype] / sum(row.values())

    def row(self, surface: str) -> dict[str, float]:
        row = self.counts[surface]
        total = sum(row.values())
        return {t: c / total for t, c in row.items()}

    def merge(self, other: "FrequencyTable") -> "FrequencyTable":
        for surface, row in other.counts.items():
            self.counts[surface].update(row)
        return self

    def write(self, stream: TextIO) -> None:
        for surface in sorted(self.counts):
            row = self.counts[surface]
            total = sum(row.values())
            for etype, c in sorted(row.items(), key=lambda kv: (-kv[1], kv[0])):
                stream.write(f"{surface}\t{etype}\t{c}\t{c / total!r}\n")

    @classmethod
    def read(cls, stream: TextIO) -> "FrequencyTable":
        table = cls()
        for lineno, line in enumerate(stream, 1):
            line = line.rstrip("\r\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ValueError(f"line {lineno}: expected surface<TAB>tag<TAB>count<TAB>relfreq")
            table.add(parts[0], parts[1], int(parts[2]))
        return table


def build_frequency_table(corpus: Iterable[ProjectedSentence]) -> FrequencyTable:
    table = FrequencyTable()
    empty = True
    for ps in corpus:
        empty = False
        for span in ps.entities:
            table.add(ps.surface(span), span.etype)
    if empty:
        raise ValueError("cannot build a frequency table from an empty corpus")
    return table


def quality_score(sentence: ProjectedSentence, table: FrequencyTable) -> float:
    """Mean relative frequency of the projected tag over the sentence's
    entity mentions; 0 for a sentence without entities."""
    spans = sentence.entities
    if not spans:
        return 0.0
    return sum(table.frequency(sentence.surface(s), s.etype) for s in spans) / len(spans)


def entity_count(sentence: ProjectedSentence) -> int:
    return len(sentence.entities)


@dataclass(frozen=True)
class SelectionThresholds:
    q: float = 0.0
    n: int = 0

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ValueError("quality threshold must lie in [0, 1]")
        if self.n < 0 or int(self.n) != self.n:
            raise ValueError("entity-count threshold must be a non-negative integer")

    def admits(self, q: float, n: int) -> bool:
        return q >= self.q - _EPS and n >= self.n


def score_corpus(corpus: Sequence[ProjectedSentence], table: FrequencyTable | None = None) -> list[tuple[float, int]]:
    table = table or build_frequency_table(corpus)
    return [(quality_score(s, table), entity_count(s)) for s in corpus]


def select_data(
    corpus: Sequence[ProjectedSentence],
    thresholds: SelectionThresholds,
    table: FrequencyTable | None = None,
    scores: Sequence[tuple[float, int]] | None = None,
) -> list[ProjectedSentence]:
    """Sentences with q(y) >= q and n(y) >= n, in corpus order."""
    if scores is None:
        scores = score_corpus(corpus, table) if corpus else []
    return [s for s, (q, n) in zip(corpus, scores) if thresholds.admits(q, n)]


def write_scores(scores: Iterable[tuple[int, float, int]], stream: TextIO) -> None:
    """Sidecar lines: sentence_index<TAB>q<TAB>n."""
    for idx, q, n in scores:
        stream.write(f"{idx}\t{q!r}\t{n}\n")


# -- threshold search --------------------------------------------------------

Q_GRID = tuple(round(0.1 * k, 1) for k in range(10))
N_GRID = (1, 2, 3, 4, 5)


@dataclass(frozen=True)
class GridPoint:
    phase: int
    q: float
    n: int
    f1: float
    size: int
    empty: bool = False


@dataclass
class SearchResult:
    thresholds: SelectionThresholds
    grid: list[GridPoint] = field(default_factory=list)

    def best_f1(self) -> float:
        return max(p.f1 for p in self.grid)

    def write(self, stream: TextIO) -> None:
        stream.write("phase\tq\tn\tsize\tdev_f1\tempty\n")
        for p in self.grid:
            stream.write(f"{p.phase}\t{p.q}\t{p.n}\t{p.size}\t{p.f1!r}\t{int(p.empty)}\n")


def coordinate_search(
    corpus: Sequence[ProjectedSentence],
    dev_set: Any,
    trainer_callback: Callable[[list[ProjectedSentence]], Any],
    evaluator: Callable[[Any, Any], float],
    table: FrequencyTable | None = None,
    q_grid: Sequence[float] = Q_GRID,
    n_grid: Sequence[int] = N_GRID,
    fixed_n: int = 3,
) -> SearchResult:
    """Two-phase search: sweep q with n fixed, then sweep n at the best q.

    Ties go to the smaller threshold. A grid point whose selection is empty
    or whose training fails scores 0 and is flagged.
    """
    scores = score_corpus(corpus, table)
    cache: dict[tuple[int, ...], tuple[float, bool]] = {}

    def evaluate(phase, q, n):
        th = SelectionThresholds(q, n)
        chosen = [k for k, (sq, sn) in enumerate(scores) if th.admits(sq, sn)]
        key = tuple(chosen)
        if key not in cache:
            if not chosen:
                cache[key] = (0.0, True)
            else:
                try:
                    model = trainer_callback([corpus[k] for k in chosen])
                    cache[key] = (float(evaluator(model, dev_set)), False)
                except Exception as exc:  # a failed grid point must not end the search
                    log.warning("training at q=%s n=%s failed: %s", q, n, exc)
                    cache[key] = (0.0, True)
        f1, empty = cache[key]
        log.info("phase %d q=%.1f n=%d size=%d dev F1=%.4f", phase, q, n, len(chosen), f1)
        return GridPoint(phase, q, n, f1, len(chosen), empty)

    grid = [evaluate(1, q, fixed_n) for q in q_grid]
    best_q = max(grid, key=lambda p: (p.f1, -p.q)).q
    phase2 = [evaluate(2, best_q, n) for n in n_grid]
    grid += phase2
    best_n = max(phase2, key=lambda p: (p.f1, -p.n)).n
    return SearchResult(SelectionThresholds(best_q, best_n), grid)
