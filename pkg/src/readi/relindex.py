"""BM25 retrieval over a relation vocabulary.

Relation ids are tokenized on schema separators (``.``, ``_``, ``/``) and
lowercased. Natural-language queries go through the same tokenizer, which also
splits on whitespace and punctuation. No stemming.
"""
from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Protocol, Sequence

from readi.errors import IndexBuildError

K1 = 1.2
B = 0.75

_TOKEN = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


class RelationScorer(Protocol):
    """Hook for a second retriever (e.g. a dense encoder).

    Receives the query and BM25-scored candidates, returns them rescored. The
    result is re-sorted by the index, so ordering is not the scorer's concern.
    """

    def __call__(self, query: str, scored: Sequence[tuple[str, float]]) -> list[tuple[str, float]]: ...


def identity_scorer(query: str, scored: Sequence[tuple[str, float]]) -> list[tuple[str, float]]:
    return list(scored)


@dataclass(frozen=True)
class BoundRelation:
    nl_relation: str
    candidates: tuple[tuple[str, float], ...]

    @property
    def relation_ids(self) -> list[str]:
        return [r for r, _ in self.candidates]


def _rank(scored: Iterable[tuple[str, float]]) -> list[tuple[str, float]]:
    return sorted(scored, key=lambda rs: (-rs[1], rs[0]))


class RelationIndex:
    """Inverted index with Okapi BM25 scoring (k1=1.2, b=0.75).

    ``aliases`` optionally attaches extra text to a relation (e.g. a display
    name from the names file); its tokens join the relation's document.
    """

    def __init__(
        self,
        relations: Iterable[str],
        aliases: Mapping[str, str] | None = None,
        scorer: RelationScorer = identity_scorer,
    ):
        vocab = sorted(set(relations))
        if not vocab:
            raise IndexBuildError("cannot build a relation index from an empty relation set")
        aliases = aliases or {}
        self.vocabulary: tuple[str, ...] = tuple(vocab)
        self._ordinal = {r: i for i, r in enumerate(vocab)}
        postings: dict[str, list[tuple[int, int]]] = {}
        lengths = []
        for i, rel in enumerate(vocab):
            toks = tokenize(rel)
            if rel in aliases:
                toks += tokenize(aliases[rel])
            lengths.append(len(toks))
            for tok, tf in sorted(Counter(toks).items()):
                postings.setdefault(tok, []).append((i, tf))
        self.token_postings: dict[str, tuple[tuple[int, int], ...]] = {
            t: tuple(p) for t, p in postings.items()
        }
        self.doc_lengths: tuple[int, ...] = tuple(lengths)
        self.avg_doc_length: float = sum(lengths) / len(lengths)
        self._scorer = scorer

    def __len__(self) -> int:
        return len(self.vocabulary)

    def idf(self, token: str) -> float:
        n = len(self.token_postings.get(token, ()))
        big_n = len(self.vocabulary)
        # +1 inside the log keeps idf positive for tokens in most documents
        return math.log((big_n - n + 0.5) / (n + 0.5) + 1.0)

    def _scores(self, query: str, restrict: set[int] | None = None) -> dict[int, float]:
        scores: dict[int, float] = {}
        avg = self.avg_doc_length or 1.0
        for tok in sorted(set(tokenize(query))):
            plist = self.token_postings.get(tok)
            if not plist:
                continue
            idf = self.idf(tok)
            for doc, tf in plist:
                if restrict is not None and doc not in restrict:
                    continue
                norm = K1 * (1.0 - B + B * self.doc_lengths[doc] / avg)
                scores[doc] = scores.get(doc, 0.0) + idf * tf * (K1 + 1.0) / (tf + norm)
        return scores

    def score(self, query: str, relation: str) -> float:
        i = self._ordinal.get(relation)
        if i is None:
            return 0.0
        return self._scores(query, {i}).get(i, 0.0)

    def bind_relation(self, nl: str, k: int) -> BoundRelation:
        if k < 1:
            raise ValueError("k must be >= 1")
        scored = [(self.vocabulary[i], s) for i, s in self._scores(nl).items() if s > 0.0]
        scored = [(r, s) for r, s in self._scorer(nl, scored) if s > 0.0]
        return BoundRelation(nl, tuple(_rank(scored)[:k]))

    def rank_by_question(self, question: str, pool: Iterable[str], k: int) -> list[str]:
        """Order ``pool`` by BM25 score against the question and keep the top k.

        Pool members with zero score are kept (after scored ones) so that a
        small pool is always returned whole.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        members = sorted(set(pool))
        unknown = [r for r in members if r not in self._ordinal]
        if unknown:
            raise ValueError(f"relations not in index vocabulary: {unknown[:5]}")
        restrict = {self._ordinal[r] for r in members}
        scores = self._scores(question, restrict)
        scored = [(r, scores.get(self._ordinal[r], 0.0)) for r in members]
        scored = self._scorer(question, scored)
        return [r for r, _ in _rank(scored)[:k]]


def build_index(
    relations: Iterable[str],
    aliases: Mapping[str, str] | None = None,
    scorer: RelationScorer = identity_scorer,
) -> RelationIndex:
    return RelationIndex(relations, aliases, scorer)


def bind_relation(idx: RelationIndex, nl: str, k: int) -> BoundRelation:
    return idx.bind_relation(nl, k)


def rank_by_question(idx: RelationIndex, question: str, pool: Iterable[str], k: int) -> list[str]:
    return idx.rank_by_question(question, pool, k)
