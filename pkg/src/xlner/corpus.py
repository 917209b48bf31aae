"""Sentences, IOB2 tags, entity spans, alignments and their file formats.

Everything downstream works on IOB2. IOB1 input is rewritten on read.
"""
from __future__ import annotations

import io
import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Sequence, TextIO

OUTSIDE = "O"


class FormatError(ValueError):
    """A corpus, alignment or sidecar file could not be parsed."""

    def __init__(self, message: str, lineno: int | None = None, column: int | None = None):
        where = ""
        if lineno is not None:
            where = f"line {lineno}"
            if column is not None:
                where += f", column {column}"
            where += ": "
        super().__init__(where + message)
        self.lineno = lineno
        self.column = column


class IOBError(ValueError):
    def __init__(self, message: str, index: int):
        super().__init__(f"position {index}: {message}")
        self.index = index


def split_tag(tag: str) -> tuple[str, str | None]:
    """'B-PER' -> ('B', 'PER'); 'O' -> ('O', None)."""
    if tag == OUTSIDE:
        return OUTSIDE, None
    prefix, sep, etype = tag.partition("-")
    if not sep or prefix not in ("B", "I") or not etype or any(c.isspace() for c in etype):
        raise ValueError(f"invalid tag {tag!r}")
    return prefix, etype


def check_iob2(tags: Sequence[str]) -> None:
    prev_type = None
    for i, tag in enumerate(tags):
        try:
            prefix, etype = split_tag(tag)
        except ValueError as exc:
            raise IOBError(str(exc), i) from None
        if prefix == "I" and etype != prev_type:
            raise IOBError(f"{tag} does not continue an entity of the same type", i)
        prev_type = etype


def is_iob2(tags: Sequence[str]) -> bool:
    try:
        check_iob2(tags)
    except IOBError:
        return False
    return True


def iob1_to_iob2(tags: Sequence[str]) -> list[str]:
    out = []
    prev_type = None
    for tag in tags:
        prefix, etype = split_tag(tag)
        if prefix == "I" and etype != prev_type:
            tag = "B-" + etype
        out.append(tag)
        prev_type = etype
    return out


@dataclass(frozen=True)
class TagSet:
    entity_types: tuple[str, ...]

    def __post_init__(self):
        types = tuple(self.entity_types)
        object.__setattr__(self, "entity_types", types)
        if len(set(types)) != len(types):
            raise ValueError(f"duplicate entity types in {types}")
        for t in types:
            if not t or any(c.isspace() for c in t) or "-" in t:
                raise ValueError(f"bad entity type name {t!r}")

    @property
    def labels(self) -> tuple[str, ...]:
        out = [OUTSIDE]
        for t in self.entity_types:
            out += ["B-" + t, "I-" + t]
        return tuple(out)

    def __len__(self) -> int:
        return 2 * len(self.entity_types) + 1

    def index(self, label: str) -> int:
        if label == OUTSIDE:
            return 0
        prefix, etype = split_tag(label)
        k = self.entity_types.index(etype)
        return 1 + 2 * k + (prefix == "I")

    @classmethod
    def from_sentences(cls, sentences: Iterable["LabeledSentence"]) -> "TagSet":
        types = set()
        for s in sentences:
            for tag in s.tags:
                if tag != OUTSIDE:
                    types.add(tag[2:])
        return cls(tuple(sorted(types)))


def _check_tokens(tokens: Sequence[str]) -> None:
    for i, tok in enumerate(tokens):
        if not isinstance(tok, str) or not tok or any(c.isspace() for c in tok):
            raise ValueError(f"token {i} ({tok!r}) is empty or contains whitespace")


@dataclass(frozen=True)
class LabeledSentence:
    tokens: tuple[str, ...]
    tags: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "tags", tuple(self.tags))
        if len(self.tokens) != len(self.tags):
            raise ValueError(f"{len(self.tokens)} tokens but {len(self.tags)} tags")
        _check_tokens(self.tokens)
        check_iob2(self.tags)

    def __len__(self) -> int:
        return len(self.tokens)

    @classmethod
    def unlabeled(cls, tokens: Sequence[str]) -> "LabeledSentence":
        return cls(tuple(tokens), (OUTSIDE,) * len(tokens))

    def entities(self) -> list["EntityMention"]:
        return iob_to_spans(self.tags)


class EntityMention(NamedTuple):
    start: int
    end: int
    etype: str


@dataclass(frozen=True)
class AlignedSentencePair:
    source: tuple[str, ...]
    target: tuple[str, ...]
    links: frozenset[tuple[int, int]]
    source_tags: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "source", tuple(self.source))
        object.__setattr__(self, "target", tuple(self.target))
        links = list(self.links)
        if len(set(links)) != len(links):
            raise ValueError("duplicate alignment links")
        object.__setattr__(self, "links", frozenset(links))
        for i, j in links:
            if not (0 <= i < len(self.source) and 0 <= j < len(self.target)):
                raise ValueError(f"link {i}-{j} out of bounds for {len(self.source)}x{len(self.target)}")
        if self.source_tags is not None:
            object.__setattr__(self, "source_tags", tuple(self.source_tags))
            if len(self.source_tags) != len(self.source):
                raise ValueError("source tags and tokens differ in length")
            check_iob2(self.source_tags)


@dataclass(frozen=True)
class ConfidenceTaggedSentence:
    """Decoder output: tags plus a confidence in [0, 1] for every token."""

    tokens: tuple[str, ...]
    tags: tuple[str, ...]
    confidences: tuple[float, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "tags", tuple(self.tags))
        confs = tuple(float(c) for c in self.confidences) or (1.0,) * len(self.tokens)
        object.__setattr__(self, "confidences", confs)
        if not (len(self.tokens) == len(self.tags) == len(confs)):
            raise ValueError("tokens, tags and confidences differ in length")
        for i, c in enumerate(confs):
            if not 0.0 <= c <= 1.0:
                raise ValueError(f"confidence {c} at token {i} outside [0, 1]")
        check_iob2(self.tags)

    def __len__(self) -> int:
        return len(self.tokens)

    def entities(self) -> list[EntityMention]:
        return iob_to_spans(self.tags)

    def entity_confidence(self, span: EntityMention) -> float:
        vals = self.confidences[span.start:span.end]
        return sum(vals) / len(vals)

    def as_labeled(self) -> LabeledSentence:
        return LabeledSentence(self.tokens, self.tags)


# -- spans ---------------------------------------------------------------

def iob_to_spans(tags: Sequence[str]) -> list[EntityMention]:
    check_iob2(tags)
    spans = []
    start = etype = None
    for i, tag in enumerate(tags):
        prefix, t = split_tag(tag)
        if prefix != "I" and start is not None:
            spans.append(EntityMention(start, i, etype))
            start = None
        if prefix == "B":
            start, etype = i, t
    if start is not None:
        spans.append(EntityMention(start, len(tags), etype))
    return spans


def spans_to_iob(spans: Iterable[EntityMention], length: int) -> list[str]:
    tags = [OUTSIDE] * length
    owner: list[EntityMention | None] = [None] * length
    for span in spans:
        span = EntityMention(*span)
        if not (0 <= span.start < span.end <= length):
            raise ValueError(f"span {span} outside sentence of length {length}")
        for i in range(span.start, span.end):
            if owner[i] is not None:
                raise ValueError(f"spans {owner[i]} and {span} overlap")
            owner[i] = span
        tags[span.start] = "B-" + span.etype
        for i in range(span.start + 1, span.end):
            tags[i] = "I-" + span.etype
    return tags


def leftmost_longest(spans: Iterable[EntityMention]) -> list[EntityMention]:
    """Greedy overlap removal: earlier start wins, then longer span."""
    kept: list[EntityMention] = []
    for span in sorted(spans, key=lambda s: (s.start, s.start - s.end, s.etype)):
        if all(span.end <= k.start or span.start >= k.end for k in kept):
            kept.append(span)
    return sorted(kept)


# -- CoNLL ---------------------------------------------------------------

def _lines(stream: TextIO | str) -> Iterator[tuple[int, str]]:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    for lineno, line in enumerate(stream, 1):
        yield lineno, line.rstrip("\r\n")


def read_conll(stream: TextIO | str, tag_column: int = -1) -> list[LabeledSentence]:
    """Read whitespace-separated columns, one token per line.

    Token is column 0. ``-DOCSTART-`` lines act as sentence breaks.
    """
    sentences = []
    tokens: list[str] = []
    tags: list[str] = []
    ncols = None
    first_line = 0

    def flush():
        if tokens:
            try:
                norm = iob1_to_iob2(tags)
            except ValueError as exc:
                raise FormatError(str(exc), first_line) from None
            sentences.append(LabeledSentence(tuple(tokens), tuple(norm)))
            tokens.clear()
            tags.clear()

    for lineno, line in _lines(stream):
        cols = line.split()
        if not cols or cols[0] == "-DOCSTART-":
            flush()
            continue
        if ncols is None:
            ncols = len(cols)
            if not -ncols <= tag_column < ncols or ncols < 2:
                raise FormatError(f"tag column {tag_column} missing ({ncols} columns)", lineno)
        if len(cols) != ncols:
            raise FormatError(f"expected {ncols} columns, found {len(cols)}", lineno)
        tag = cols[tag_column]
        try:
            split_tag(tag)
        except ValueError as exc:
            raise FormatError(str(exc), lineno) from None
        if not tokens:
            first_line = lineno
        tokens.append(cols[0])
        tags.append(tag)
    flush()
    return sentences


def write_conll(sentences: Iterable[LabeledSentence | ConfidenceTaggedSentence], stream: TextIO | None = None) -> str:
    out = []
    for s in sentences:
        check_iob2(s.tags)
        _check_tokens(s.tokens)
        for tok, tag in zip(s.tokens, s.tags):
            out.append(f"{tok} {tag}\n")
        out.append("\n")
    text = "".join(out)
    if stream is not None:
        stream.write(text)
    return text


def read_tokenized(stream: TextIO | str) -> list[tuple[str, ...]]:
    """One sentence per line, tokens separated by spaces."""
    return [tuple(line.split()) for _, line in _lines(stream)]


def write_tokenized(sentences: Iterable[Sequence[str]], stream: TextIO | None = None) -> str:
    text = "".join(" ".join(s) + "\n" for s in sentences)
    if stream is not None:
        stream.write(text)
    return text


# -- Pharaoh alignments --------------------------------------------------

_LINK = re.compile(r"(\d+)-(\d+)")


def read_alignments(stream: TextIO | str) -> list[set[tuple[int, int]]]:
    result = []
    for lineno, line in _lines(stream):
        links = set()
        col = 1
        for tok in line.split(" "):
            if tok:
                m = _LINK.fullmatch(tok)
                if m is None:
                    raise FormatError(f"malformed link {tok!r}", lineno, col)
                links.add((int(m.group(1)), int(m.group(2))))
            col += len(tok) + 1
        result.append(links)
    return result


def write_alignments(link_sets: Iterable[Iterable[tuple[int, int]]], stream: TextIO | None = None) -> str:
    text = "".join(" ".join(f"{i}-{j}" for i, j in sorted(links)) + "\n" for links in link_sets)
    if stream is not None:
        stream.write(text)
    return text


# -- confidence sidecar --------------------------------------------------

def write_confidences(sentences: Iterable[ConfidenceTaggedSentence], stream: TextIO | None = None) -> str:
    out = []
    for si, s in enumerate(sentences):
        for ti, c in enumerate(s.confidences):
            out.append(f"{si}\t{ti}\t{c!r}\n")
    text = "".join(out)
    if stream is not None:
        stream.write(text)
    return text


def read_confidences(stream: TextIO | str) -> dict[int, dict[int, float]]:
    table: dict[int, dict[int, float]] = {}
    for lineno, line in _lines(stream):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise FormatError("expected sent<TAB>token<TAB>conf", lineno)
        try:
            si, ti, c = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise FormatError("non-numeric field", lineno) from None
        table.setdefault(si, {})[ti] = c
    return table


def attach_confidences(sentences: Sequence[LabeledSentence], table: dict[int, dict[int, float]]) -> list[ConfidenceTaggedSentence]:
    """Combine a CoNLL corpus with its sidecar; missing entries default to 1.0."""
    out = []
    for si, s in enumerate(sentences):
        row = table.get(si, {})
        confs = tuple(row.get(ti, 1.0) for ti in range(len(s)))
        out.append(ConfidenceTaggedSentence(s.tokens, s.tags, confs))
    return out
