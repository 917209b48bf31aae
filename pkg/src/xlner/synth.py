"""Synthetic labeled corpora, a deterministic "target language", and noisy bitext.

The source language is template-generated newswire-like text with four
entity types drawn from Zipf-distributed name lexicons. The target
language applies an injective word transform (reverse, optionally
lowercase, append a suffix) and keeps word order, so the gold alignment
is the identity.
"""
from __future__ import annotations

import string
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .corpus import AlignedSentencePair, EntityMention, LabeledSentence, iob_to_spans, spans_to_iob

ENTITY_TYPES = ("LOC", "MISC", "ORG", "PER")

_CONTEXT = {
    "V": "open close expand sell buy announce reject approve launch delay review cut raise support block".split(),
    "N": ("deal plan report talks election contract budget market agreement project vote project "
          "strike merger investigation proposal summit season match bid policy").split(),
    "ADJ": "new major small final large strong weak early late local".split(),
    "DAY": "monday tuesday wednesday thursday friday saturday sunday".split(),
    "NUM": "two three four five 10 12 20 35 100 2001".split(),
}

_TEMPLATES = [
    "{PER} said on {DAY} that {ORG} will {V} the {N} in {LOC} .",
    "the {MISC} minister {PER} visited {LOC} on {DAY} .",
    "{ORG} shares rose {NUM} percent in {LOC} trading .",
    "officials in {LOC} said {PER} met with {PER} .",
    "{PER} , a spokesman for {ORG} , said the {N} was {ADJ} .",
    "the {N} will {V} in {LOC} on {DAY} .",
    "{MISC} officials said the {N} would {V} .",
    "a {ADJ} {N} was reported near {LOC} .",
    "{PER} joined {ORG} after the {N} .",
    "the head of {ORG} , {PER} , told {MISC} media about the {N} .",
    "it was not clear whether the {N} would {V} .",
    "{LOC} and {LOC} agreed to {V} the {N} .",
    "{ORG} said it expected the {N} to {V} .",
    "{PER} scored twice as {ORG} beat {ORG} {NUM} - {NUM} .",
    "police in {LOC} arrested {PER} on {DAY} .",
    "mr {PER} will {V} the {ADJ} {N} .",
    "the {MISC} team lost to {ORG} in {LOC} .",
    "{PER} and {PER} discussed the {N} in {LOC} .",
    "analysts at {ORG} expect a {ADJ} {N} .",
    "the {N} was delayed until {DAY} .",
]

_ORG_SUFFIX = ["Corp", "Group", "Bank", "Union", "Council", "Airlines", "United", "Party"]
_LOC_PREFIX = ["San", "Port", "North", "Lake"]


@dataclass(frozen=True)
class SourceLanguage:
    seed: int = 0
    per_first: int = 250
    per_last: int = 400
    orgs: int = 250
    locs: int = 300
    misc: int = 150
    zipf: float = 1.0

    @cached_property
    def lexicon(self) -> dict[str, list[str]]:
        rng = np.random.default_rng(self.seed)
        taken = {w for ws in _CONTEXT.values() for w in ws}
        taken |= {w.lower() for t in _TEMPLATES for w in t.split()}
        taken |= {w.lower() for w in _ORG_SUFFIX + _LOC_PREFIX}
        onsets = [c for c in "bcdfghjklmnprstvwz"] + ["br", "ch", "kr", "st", "tr", "sh"]
        vowels = list("aeiou") + ["ai", "ou", "ei"]

        def fresh(syllables, ending=""):
            while True:
                k = rng.integers(syllables[0], syllables[1] + 1)
                w = "".join(onsets[rng.integers(len(onsets))] + vowels[rng.integers(len(vowels))] for _ in range(k))
                w = (w + ending).capitalize()
                if w.lower() not in taken:
                    taken.add(w.lower())
                    return w

        return {
            "first": [fresh((2, 3)) for _ in range(self.per_first)],
            "last": [fresh((2, 4)) for _ in range(self.per_last)],
            "org": [fresh((2, 3)) for _ in range(self.orgs)],
            "loc": [fresh((2, 3), "n") for _ in range(self.locs)],
            "misc": [fresh((1, 3), "ian") for _ in range(self.misc)],
        }

    def vocabulary(self) -> set[str]:
        words = {w for ws in self.lexicon.values() for w in ws}
        words |= set(_ORG_SUFFIX) | set(_LOC_PREFIX)
        words |= {w for ws in _CONTEXT.values() for w in ws}
        words |= {w for t in _TEMPLATES for w in t.split() if not w.startswith("{")}
        return words

    def _pick(self, rng, pool: list[str]) -> str:
        ranks = np.arange(1, len(pool) + 1, dtype=np.float64) ** -self.zipf
        return pool[rng.choice(len(pool), p=ranks / ranks.sum())]

    def mention(self, rng, etype: str) -> list[str]:
        lex = self.lexicon
        if etype == "PER":
            last = self._pick(rng, lex["last"])
            return [self._pick(rng, lex["first"]), last] if rng.random() < 0.7 else [last]
        if etype == "ORG":
            name = [self._pick(rng, lex["org"])]
            return name + [_ORG_SUFFIX[rng.integers(len(_ORG_SUFFIX))]] if rng.random() < 0.5 else name
        if etype == "LOC":
            name = [self._pick(rng, lex["loc"])]
            return [_LOC_PREFIX[rng.integers(len(_LOC_PREFIX))]] + name if rng.random() < 0.15 else name
        return [self._pick(rng, lex["misc"])]

    def sentence(self, rng) -> LabeledSentence:
        template = _TEMPLATES[rng.integers(len(_TEMPLATES))]
        tokens, tags = [], []
        for piece in template.split():
            if piece.startswith("{"):
                slot = piece[1:-1]
                if slot in ENTITY_TYPES:
                    words = self.mention(rng, slot)
                    tokens += words
                    tags += ["B-" + slot] + ["I-" + slot] * (len(words) - 1)
                else:
                    pool = _CONTEXT[slot]
                    tokens.append(pool[rng.integers(len(pool))])
                    tags.append("O")
            else:
                tokens.append(piece)
                tags.append("O")
        return LabeledSentence(tuple(tokens), tuple(tags))

    def corpus(self, n: int, seed: int) -> list[LabeledSentence]:
        rng = np.random.default_rng([self.seed, seed])
        return [self.sentence(rng) for _ in range(n)]


@dataclass(frozen=True)
class SyntheticLanguageSpec:
    suffix: str = "a"
    lowercase: bool = True
    alignment_noise: float = 0.0  # per-link corruption rate inside a noisy pair
    noisy_fraction: float = 1.0  # share of sentence pairs exposed to alignment noise
    label_noise: float = 0.0  # per-entity rate of retyping on the source side
    miss_rate: float = 0.0  # per-entity rate of the source tagger missing it
    seed: int = 0

    def __post_init__(self):
        for name in ("alignment_noise", "noisy_fraction", "label_noise", "miss_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if any(c in string.whitespace for c in self.suffix):
            raise ValueError("suffix must not contain whitespace")

    def transform(self, word: str) -> str:
        w = word[::-1]
        if self.lowercase:
            w = w.lower()
        return w + self.suffix

    def check_injective(self, vocabulary: Iterable[str]) -> None:
        seen: dict[str, str] = {}
        for w in sorted(set(vocabulary)):
            t = self.transform(w)
            if t in seen:
                raise ValueError(f"transform is not injective: {seen[t]!r} and {w!r} both map to {t!r}")
            seen[t] = w

    def translate(self, tokens: Sequence[str]) -> tuple[str, ...]:
        return tuple(self.transform(w) for w in tokens)


@dataclass
class SyntheticBitext:
    pairs: list[AlignedSentencePair]
    gold_target: list[LabeledSentence]
    noisy: list[bool] = field(default_factory=list)

    def source_sentences(self) -> list[LabeledSentence]:
        return [LabeledSentence(p.source, p.source_tags) for p in self.pairs]

    def link_sets(self) -> list[frozenset]:
        return [p.links for p in self.pairs]

    def pair_counts(self) -> Counter:
        """Word-pair counts over alignment links (a word-level phrase table)."""
        counts: Counter = Counter()
        for p in self.pairs:
            for i, j in p.links:
                counts[(p.source[i], p.target[j])] += 1
        return counts


def corrupt_tags(tags: Sequence[str], rng, label_noise: float, miss_rate: float) -> list[str]:
    spans = []
    for span in iob_to_spans(tags):
        r = rng.random()
        if r < miss_rate:
            continue
        if r < miss_rate + label_noise:
            others = [t for t in ENTITY_TYPES if t != span.etype]
            span = EntityMention(span.start, span.end, others[rng.integers(len(others))])
        spans.append(span)
    return spans_to_iob(spans, len(tags))


def synth_bitext(source: Sequence[LabeledSentence], spec: SyntheticLanguageSpec) -> SyntheticBitext:
    """Pair each source sentence with its translation under ``spec``.

    Gold target labels come from the clean source tags; the returned pairs
    carry the (possibly corrupted) source tags and noisy links.
    """
    spec.check_injective(w for s in source for w in s.tokens)
    rng = np.random.default_rng(spec.seed)
    pairs, gold, noisy = [], [], []
    for s in source:
        target = spec.translate(s.tokens)
        n = len(target)
        is_noisy = bool(rng.random() < spec.noisy_fraction) if spec.alignment_noise > 0 else False
        links = set()
        for i in range(len(s)):
            j = i
            if is_noisy and rng.random() < spec.alignment_noise:
                if rng.random() < 0.5:
                    continue
                j = int(rng.integers(n))
            links.add((i, j))
        src_tags = corrupt_tags(s.tags, rng, spec.label_noise, spec.miss_rate)
        pairs.append(AlignedSentencePair(s.tokens, target, frozenset(links), tuple(src_tags)))
        gold.append(LabeledSentence(target, s.tags))
        noisy.append(is_noisy)
    return SyntheticBitext(pairs, gold, noisy)


def translate_corpus(corpus: Sequence[LabeledSentence], spec: SyntheticLanguageSpec) -> list[LabeledSentence]:
    return [LabeledSentence(spec.translate(s.tokens), s.tags) for s in corpus]
