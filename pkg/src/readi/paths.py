"""Reasoning paths: one chain of natural-language relations per topic entity."""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from readi.errors import PathParseError

ARROW = "→"
_ARROW_SPLIT = re.compile(r"\s*(?:->|→)\s*")
_PATH_MARKER = "Path:"
# "key": [ chain ]  -- key may use straight or curly quotes
_ENTRY = re.compile(r"[\"“”]([^\"“”\n]*)[\"“”]\s*:\s*\[([^\[\]]*)\]")


@dataclass(frozen=True)
class Constraint:
    start: str
    nl_relations: tuple[str, ...] = ()


@dataclass(frozen=True)
class ReasoningPath:
    constraints: tuple[Constraint, ...]
    question_id: str = ""

    def to_dict(self) -> dict:
        return {
            "question_id": self.question_id,
            "constraints": [
                {"start": c.start, "relations": list(c.nl_relations)} for c in self.constraints
            ],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ReasoningPath":
        return cls(
            tuple(Constraint(c["start"], tuple(c.get("relations", ()))) for c in d["constraints"]),
            d.get("question_id", ""),
        )

    @classmethod
    def empty(cls, topic_entities: Sequence[str], question_id: str = "") -> "ReasoningPath":
        return cls(tuple(Constraint(e) for e in topic_entities), question_id)


def _norm(s: str) -> str:
    return " ".join(s.split()).casefold()


def _strip_token(tok: str) -> str:
    return tok.strip().strip("\"'“”‘’`").strip()


def _split_chain(chain: str) -> list[str]:
    return [t for t in (_strip_token(p) for p in _ARROW_SPLIT.split(chain.strip())) if t]


def parse_reasoning_path(
    text: str,
    topic_entities: Sequence[str],
    aliases: Mapping[str, str] | None = None,
    question_id: str = "",
) -> ReasoningPath:
    """Parse the last ``Path:`` block of a model response.

    Two layouts are accepted: a mapping ``{"entity": [entity → r1 → r2], ...}``
    and bare chain lines ``entity → r1 → r2``. A key matches a topic entity by
    its id or by its display name in ``aliases`` (case-insensitive). Topic
    entities with no chain get an empty constraint.
    """
    if not topic_entities:
        raise ValueError("topic_entities must be non-empty")
    pos = text.rfind(_PATH_MARKER)
    if pos < 0:
        raise PathParseError("no 'Path:' block in response")
    block = text[pos + len(_PATH_MARKER):]
    aliases = aliases or {}

    keys: dict[str, str] = {}
    for e in reversed(topic_entities):
        keys[_norm(aliases.get(e, e))] = e
    for e in reversed(topic_entities):
        keys[_norm(e)] = e

    found: dict[str, tuple[str, ...]] = {}

    def assign(key: str, tokens: list[str]) -> None:
        ent = keys.get(_norm(key))
        if ent is None or ent in found:
            return
        if tokens and _norm(tokens[0]) in (_norm(key), _norm(ent), _norm(aliases.get(ent, ent))):
            tokens = tokens[1:]
        found[ent] = tuple(tokens)

    entries = list(_ENTRY.finditer(block))
    if entries:
        for m in entries:
            assign(m.group(1), _split_chain(m.group(2)))
    else:
        for line in block.splitlines():
            if "->" not in line and ARROW not in line:
                continue
            tokens = _split_chain(line)
            if tokens:
                assign(tokens[0], tokens)

    return ReasoningPath(
        tuple(Constraint(e, found.get(e, ())) for e in topic_entities), question_id
    )


def serialize_path(p: ReasoningPath, aliases: Mapping[str, str] | None = None) -> str:
    aliases = aliases or {}
    parts = []
    for c in p.constraints:
        label = aliases.get(c.start, c.start)
        chain = f" {ARROW} ".join((label, *c.nl_relations))
        parts.append(f"{json.dumps(label, ensure_ascii=False)}: [{chain}]")
    return "Path: {" + ", ".join(parts) + "}"


def path_lengths(p: ReasoningPath) -> tuple[int, list[int]]:
    per = [len(c.nl_relations) for c in p.constraints]
    return sum(per), per
