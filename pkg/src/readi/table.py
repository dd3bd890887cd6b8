"""Table environment: path parsing, column-then-row instantiation, feedback."""
from __future__ import annotations

import ast
import enum
import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from readi.errors import LoadError

MIN_COLUMNS = 2


def _key(s: str) -> str:
    return " ".join(str(s).split()).casefold()


@dataclass(frozen=True)
class Table:
    table_id: str
    headers: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        seen = set()
        for h in self.headers:
            k = h.strip()
            if k in seen:
                raise LoadError(f"table {self.table_id}: duplicate header {h!r}")
            seen.add(k)
        for i, row in enumerate(self.rows):
            if len(row) != len(self.headers):
                raise LoadError(
                    f"table {self.table_id}: row {i} has {len(row)} cells, "
                    f"expected {len(self.headers)}"
                )

    def header_lookup(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for i, h in enumerate(self.headers):
            out.setdefault(_key(h), i)
        return out

    def to_dict(self) -> dict:
        return {"table_id": self.table_id, "headers": list(self.headers), "rows": [list(r) for r in self.rows]}

    @classmethod
    def from_dict(cls, d: Mapping) -> "Table":
        try:
            return cls(
                str(d["table_id"]),
                tuple(str(h) for h in d["headers"]),
                tuple(tuple(str(c) for c in row) for row in d["rows"]),
            )
        except (KeyError, TypeError) as exc:
            raise LoadError(f"malformed table object: {exc!r}") from exc


def load_table(path: str | Path) -> Table:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise LoadError(f"cannot read table {path}: {exc}") from exc
    return Table.from_dict(data)


def load_tables(directory: str | Path) -> dict[str, Table]:
    tables = {}
    for p in sorted(Path(directory).glob("*.json")):
        t = load_table(p)
        if t.table_id in tables:
            raise LoadError(f"duplicate table id {t.table_id!r} in {directory}")
        tables[t.table_id] = t
    return tables


@dataclass(frozen=True)
class TablePath:
    chosen_headers: tuple[str, ...] = ()
    constraints: tuple[tuple[str, tuple[str, ...]], ...] = ()

    def constraint_map(self) -> dict[str, tuple[str, ...]]:
        return dict(self.constraints)

    def to_dict(self) -> dict:
        return {
            "chosen_headers": list(self.chosen_headers),
            "constraints": {h: list(v) for h, v in self.constraints},
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "TablePath":
        return cls(
            tuple(d.get("chosen_headers", ())),
            tuple((h, tuple(v)) for h, v in d.get("constraints", {}).items()),
        )

    def render(self) -> str:
        cons = {h: list(v) for h, v in self.constraints}
        return (
            f"Chosen Headers: {json.dumps(list(self.chosen_headers), ensure_ascii=False)}\n"
            f"Constrains: {json.dumps(cons, ensure_ascii=False)}"
        )


def _literal(text: str):
    try:
        return json.loads(text)
    except ValueError:
        pass
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError, MemoryError, RecursionError, TypeError):
        return None


def _balanced(text: str, start: int, open_ch: str, close_ch: str) -> str | None:
    depth = 0
    for i in range(start, len(text)):
        ch = text[i]
        if ch == open_ch:
            depth += 1
        elif ch == close_ch:
            depth -= 1
            if depth == 0:
                return text[start : i + 1]
    return None


def _after_marker(text: str, marker: str, open_ch: str, close_ch: str) -> str | None:
    pos = text.rfind(marker)
    if pos < 0:
        return None
    m = re.compile(r"\s*").match(text, pos + len(marker))
    start = m.end()
    if start >= len(text) or text[start] != open_ch:
        return None
    return _balanced(text, start, open_ch, close_ch)


def parse_table_path(text: str) -> TablePath:
    """Extract the last ``Chosen Headers:`` list and ``Constrains:`` mapping.

    Never raises; anything unparseable becomes an empty field.
    """
    headers: list[str] = []
    raw = _after_marker(text, "Chosen Headers:", "[", "]")
    if raw is not None:
        val = _literal(raw)
        if isinstance(val, (list, tuple)):
            headers = [str(h).strip() for h in val if str(h).strip()]
    cons: list[tuple[str, tuple[str, ...]]] = []
    raw = _after_marker(text, "Constrains:", "{", "}")
    if raw is not None:
        val = _literal(raw)
        if isinstance(val, dict):
            for k, v in val.items():
                vals = v if isinstance(v, (list, tuple)) else [v]
                vals = tuple(str(x).strip() for x in vals if str(x).strip())
                if str(k).strip() and vals:
                    cons.append((str(k).strip(), vals))
    return TablePath(tuple(headers), tuple(cons))


class TableErrorReason(str, enum.Enum):
    IRRELEVANT_COLUMN = "IrrelevantColumn"
    INSUFFICIENT_COLUMNS = "InsufficientColumns"


@dataclass(frozen=True)
class TableError:
    reason: TableErrorReason
    bad_headers: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {"reason": self.reason.value, "bad_headers": list(self.bad_headers)}

    @classmethod
    def from_dict(cls, d: Mapping) -> "TableError":
        return cls(TableErrorReason(d["reason"]), tuple(d["bad_headers"]))


@dataclass(frozen=True)
class TableItems:
    headers: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def to_dict(self) -> dict:
        return {"headers": list(self.headers), "rows": [list(r) for r in self.rows]}

    @classmethod
    def from_dict(cls, d: Mapping) -> "TableItems":
        return cls(tuple(d["headers"]), tuple(tuple(r) for r in d["rows"]))

    def render(self) -> str:
        lines = [f"Headers: {', '.join(self.headers)}"]
        for n, row in enumerate(self.rows, start=1):
            cells = "; ".join(f"({h}, {v})" for h, v in zip(self.headers, row))
            lines.append(f"item {n}: {cells}")
        return "\n".join(lines)


def instantiate_table(p: TablePath, t: Table) -> tuple[TableItems, TableError | None]:
    """Columns first, then rows.

    Constraint headers count as path columns for the membership check. A row
    filter that matches nothing falls back to every row.
    """
    lookup = t.header_lookup()
    bad: list[str] = []
    for h in (*p.chosen_headers, *(k for k, _ in p.constraints)):
        if _key(h) not in lookup and _key(h) not in {_key(b) for b in bad}:
            bad.append(h)
    empty = TableItems((), ())
    if bad:
        return empty, TableError(TableErrorReason.IRRELEVANT_COLUMN, tuple(bad))
    cols: list[int] = []
    for h in p.chosen_headers:
        i = lookup[_key(h)]
        if i not in cols:
            cols.append(i)
    if len(cols) < MIN_COLUMNS:
        return empty, TableError(TableErrorReason.INSUFFICIENT_COLUMNS, ())

    filters = [(lookup[_key(h)], {_key(v) for v in vals}) for h, vals in p.constraints]
    kept = [row for row in t.rows if all(_key(row[i]) in allowed for i, allowed in filters)]
    if not kept:
        kept = list(t.rows)
    return (
        TableItems(tuple(t.headers[i] for i in cols), tuple(tuple(row[i] for i in cols) for row in kept)),
        None,
    )


def sample_row(t: Table, seed: int | None = None) -> tuple[str, ...] | None:
    if not t.rows:
        return None
    if seed is None:
        return t.rows[0]
    return random.Random(seed).choice(t.rows)


def describe_table(t: Table, seed: int | None = None) -> str:
    """Markdown header plus one sample row, as shown to the path generator."""
    lines = ["| " + " | ".join(t.headers) + " |", "| " + " | ".join("--" for _ in t.headers) + " |"]
    row = sample_row(t, seed)
    if row is not None:
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines)


def assemble_table_feedback(err: TableError, t: Table, seed: int | None = None) -> str:
    header_list = json.dumps(list(t.headers), ensure_ascii=False)
    if err.reason is TableErrorReason.IRRELEVANT_COLUMN:
        bad = "[" + ", ".join(repr(h.strip()) for h in err.bad_headers) + "]"
        reason = f"Header {bad} not in candidate Headers."
    else:
        reason = f"Chosen headers contain fewer than {MIN_COLUMNS} columns."
    lines = [f"1. {reason} You can only choose headers from {header_list}."]
    row = sample_row(t, seed)
    if row is not None:
        lines.append("Sample row: " + "; ".join(f"({h}, {v})" for h, v in zip(t.headers, row)))
    return "\n".join(lines)
