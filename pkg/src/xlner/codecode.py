"""Entity-level combination of two taggers' outputs."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .corpus import ConfidenceTaggedSentence, EntityMention, leftmost_longest, spans_to_iob

OVERLAP = "overlap-different-span"
SAME_SPAN = "same-span-different-type"
SCHEMES = ("rank", "conf")


@dataclass(frozen=True)
class EntityConflict:
    a: EntityMention
    b: EntityMention
    kind: str


def _overlap(x: EntityMention, y: EntityMention) -> bool:
    return x.start < y.end and y.start < x.end


def conflict_kind(x: EntityMention, y: EntityMention) -> str | None:
    if not _overlap(x, y):
        return None
    if (x.start, x.end) != (y.start, y.end):
        return OVERLAP
    return SAME_SPAN if x.etype != y.etype else None


def find_conflicts(entities_a: Sequence[EntityMention], entities_b: Sequence[EntityMention]) -> list[EntityConflict]:
    out = []
    for a in entities_a:
        for b in entities_b:
            kind = conflict_kind(a, b)
            if kind is not None:
                out.append(EntityConflict(a, b, kind))
    return out


def _check_same_tokens(a: ConfidenceTaggedSentence, b: ConfidenceTaggedSentence) -> None:
    if a.tokens != b.tokens:
        for i, (x, y) in enumerate(zip(a.tokens, b.tokens)):
            if x != y:
                raise ValueError(f"token mismatch at position {i}: {x!r} vs {y!r}")
        raise ValueError(f"token sequences differ in length: {len(a)} vs {len(b)}")


def _assemble(tokens, chosen: list[tuple[EntityMention, ConfidenceTaggedSentence]], fallback: ConfidenceTaggedSentence):
    # O tokens keep the fallback system's confidence
    confs = list(fallback.confidences)
    spans = []
    for span, src in chosen:
        spans.append(span)
        confs[span.start:span.end] = src.confidences[span.start:span.end]
    tags = spans_to_iob(spans, len(tokens))
    return ConfidenceTaggedSentence(tokens, tuple(tags), tuple(confs))


def codecode_rank(ap_output: ConfidenceTaggedSentence, rp_output: ConfidenceTaggedSentence) -> ConfidenceTaggedSentence:
    """All entities of the high-precision system, plus every entity of the
    other system that conflicts with none of them.

    O tokens carry the second system's confidences, so an entity-free first
    input returns the second one unchanged.
    """
    _check_same_tokens(ap_output, rp_output)
    ap = ap_output.entities()
    chosen = [(e, ap_output) for e in ap]
    ap_set = set(ap)
    for e in rp_output.entities():
        if e in ap_set:
            continue
        if any(conflict_kind(e, a) for a in ap):
            continue
        chosen.append((e, rp_output))
    return _assemble(ap_output.tokens, chosen, rp_output)


def codecode_confidence_exclude_o(output_a: ConfidenceTaggedSentence, output_b: ConfidenceTaggedSentence) -> ConfidenceTaggedSentence:
    """Confidence-based combination that never lets an O tag beat an entity.

    An entity facing only O tags in the other output is kept whatever its
    confidence; conflicting entities are settled by mean token confidence,
    ties going to ``output_a``.
    """
    _check_same_tokens(output_a, output_b)
    ents_a = [(e, output_a.entity_confidence(e)) for e in output_a.entities()]
    ents_b = [(e, output_b.entity_confidence(e)) for e in output_b.entities()]
    losers_a, losers_b = set(), set()
    for ea, ca in ents_a:
        for eb, cb in ents_b:
            if ea == eb:
                if cb > ca:
                    losers_a.add(ea)
                else:
                    losers_b.add(eb)
                continue
            if conflict_kind(ea, eb) is None:
                continue
            if cb > ca:
                losers_a.add(ea)
            else:
                losers_b.add(eb)
    # an agreement survives once, on whichever side is more confident
    winners = [(e, output_a) for e, _ in ents_a if e not in losers_a]
    winners += [(e, output_b) for e, _ in ents_b if e not in losers_b]
    kept = set(leftmost_longest([e for e, _ in winners]))
    chosen = []
    for e, src in winners:
        if e in kept:
            chosen.append((e, src))
            kept.discard(e)
    return _assemble(output_a.tokens, chosen, output_a)
