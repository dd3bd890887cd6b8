"""In-memory triple store used as the reasoning environment."""
from __future__ import annotations

from pathlib import Path
from typing import Iterable, Mapping, NamedTuple

from readi.errors import LoadError


class Triple(NamedTuple):
    subject: str
    predicate: str
    object: str


_EMPTY: frozenset = frozenset()


class KnowledgeGraph:
    """Immutable set of triples with a forward adjacency index.

    ``names`` maps ids to display strings. Ids listed in ``compound_ids`` are
    compound (CVT-style) nodes: unnamed intermediates for n-ary facts.
    """

    __slots__ = ("_triples", "_names", "_compound", "_out")

    def __init__(
        self,
        triples: Iterable[Triple],
        names: Mapping[str, str] | None = None,
        compound_ids: Iterable[str] | None = None,
    ):
        triple_set = frozenset(Triple(*t) for t in triples)
        for t in triple_set:
            if not t.subject or not t.predicate:
                raise LoadError(f"triple with empty subject or predicate: {t!r}")
        out: dict[str, dict[str, set[str]]] = {}
        for s, p, o in triple_set:
            out.setdefault(s, {}).setdefault(p, set()).add(o)
        self._out = {s: {p: frozenset(os) for p, os in rels.items()} for s, rels in out.items()}
        self._triples = triple_set
        self._names = dict(names or {})
        ids = self.entity_ids
        if compound_ids is None:
            self._compound = frozenset(e for e in ids if e not in self._names)
        else:
            self._compound = frozenset(
                e for e in compound_ids if e in ids and e not in self._names
            )

    @property
    def triples(self) -> frozenset[Triple]:
        return self._triples

    @property
    def names(self) -> Mapping[str, str]:
        return dict(self._names)

    @property
    def compound_ids(self) -> frozenset[str]:
        return self._compound

    @property
    def entity_ids(self) -> frozenset[str]:
        ids = set(self._out)
        for _, _, o in self._triples:
            ids.add(o)
        return frozenset(ids)

    @property
    def relations(self) -> frozenset[str]:
        return frozenset(t.predicate for t in self._triples)

    def __len__(self) -> int:
        return len(self._triples)

    def out_relations(self, e: str) -> frozenset[str]:
        rels = self._out.get(e)
        return frozenset(rels) if rels else _EMPTY

    def successors(self, e: str, r: str) -> frozenset[str]:
        return self._out.get(e, {}).get(r, _EMPTY)

    def has_edge_from(self, e: str, r: str) -> bool:
        return r in self._out.get(e, {})

    def is_compound(self, e: str) -> bool:
        return e in self._compound

    def friendly_name(self, e: str) -> str:
        return self._names.get(e, e)

    def relation_aliases(self) -> dict[str, str]:
        """Display strings attached to relation ids through the names file."""
        return {r: self._names[r] for r in self.relations if r in self._names}


def _read_lines(path: Path) -> list[str]:
    try:
        return Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise LoadError(f"cannot read {path}: {exc}") from exc


def load_graph(
    triples_path: str | Path,
    names_path: str | Path | None = None,
    compound_path: str | Path | None = None,
) -> KnowledgeGraph:
    triples = []
    for lineno, line in enumerate(_read_lines(triples_path), start=1):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise LoadError(
                f"{triples_path}: line {lineno}: expected 3 tab-separated columns, got {len(cols)}"
            )
        if not cols[0] or not cols[1]:
            raise LoadError(f"{triples_path}: line {lineno}: empty subject or predicate")
        triples.append(Triple(*cols))

    names: dict[str, str] = {}
    if names_path is not None:
        for lineno, line in enumerate(_read_lines(names_path), start=1):
            if not line.strip():
                continue
            cols = line.split("\t", 1)
            if len(cols) != 2:
                raise LoadError(f"{names_path}: line {lineno}: expected id<TAB>name")
            eid, name = cols
            if eid in names and names[eid] != name:
                raise LoadError(
                    f"{names_path}: line {lineno}: conflicting names for {eid!r}: "
                    f"{names[eid]!r} vs {name!r}"
                )
            names[eid] = name

    compound = None
    if compound_path is not None:
        compound = [ln.strip() for ln in _read_lines(compound_path) if ln.strip()]
    return KnowledgeGraph(triples, names, compound)


def dump_graph(g: KnowledgeGraph, triples_path: str | Path) -> None:
    lines = ["\t".join(t) for t in sorted(g.triples)]
    Path(triples_path).write_text("".join(ln + "\n" for ln in lines), encoding="utf-8")
