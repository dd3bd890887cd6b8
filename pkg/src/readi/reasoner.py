"""Evidence rendering for the reasoner prompt and answer extraction."""
from __future__ import annotations

import ast
import re
from dataclasses import dataclass
from typing import TYPE_CHECKING

from readi.kg import KnowledgeGraph

if TYPE_CHECKING:
    from readi.session import MergedEvidence


@dataclass(frozen=True)
class EvidenceRendering:
    lines: tuple[str, ...]
    triple_count: int

    @property
    def text(self) -> str:
        return "\n".join(self.lines)


def serialize_evidence(m: "MergedEvidence", g: KnowledgeGraph) -> EvidenceRendering:
    rows = sorted(
        (g.friendly_name(s), p, g.friendly_name(o)) for s, p, o in m.evidence_triples
    )
    return EvidenceRendering(tuple(f"({s}, {p}, {o})" for s, p, o in rows), len(m.evidence_triples))


_BRACES = re.compile(r"\{([^{}]*)\}")


def parse_kg_answer(text: str) -> list[str]:
    spans = _BRACES.findall(text)
    if not spans:
        return []
    return [a.strip() for a in spans[-1].split(",") if a.strip()]


_QUOTED = re.compile(r"'((?:[^'\\]|\\.)*)'|\"((?:[^\"\\]|\\.)*)\"")


def parse_table_answer(text: str) -> list[str]:
    line = None
    for ln in text.splitlines():
        if ln.strip().startswith("Answer:"):
            line = ln.strip()[len("Answer:"):].strip()
    if line is None:
        return []
    try:
        value = ast.literal_eval(line)
    except (ValueError, SyntaxError, MemoryError, RecursionError, TypeError):
        value = None
    if isinstance(value, (list, tuple)):
        return [str(v).strip() for v in value if str(v).strip()]
    if line.startswith("[") and "]" in line:
        inner = line[1 : line.rindex("]")]
        quoted = [a or b for a, b in _QUOTED.findall(inner)]
        items = quoted if quoted else inner.split(",")
        return [s.strip() for s in items if s.strip()]
    return [line] if line else []
