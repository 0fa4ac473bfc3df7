"""Query spec files (JSON) and relation files (CSV with an ``__w`` annotation column)."""

from __future__ import annotations

import csv
import io
import json
import re
from pathlib import Path
from typing import IO, Mapping

from .query import Query, QueryError
from .relation import Relation, SchemaError
from .semiring import Semiring

WEIGHT_COLUMN = "__w"
_INT = re.compile(r"-?\d+\Z")


class QueryParseError(QueryError):
    def __init__(self, message: str, line: int | None = None, source: str = "<query>") -> None:
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)
        self.line = line


def _line_of(text: str, needle: str, after: int = 0) -> int | None:
    lines = text.splitlines()
    for i in range(max(0, after - 1), len(lines)):
        if needle in lines[i]:
            return i + 1
    return None


def parse_query(text: str, source: str = "<query>") -> Query:
    """Parse ``{"attributes": [...], "relations": [{"name", "attrs"}], "output": [...]}``."""
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise QueryParseError(exc.msg, exc.lineno, source) from None
    if not isinstance(spec, dict):
        raise QueryParseError("expected a JSON object", 1, source)
    for key in ("relations", "output"):
        if key not in spec:
            raise QueryParseError(f"missing key {key!r}", None, source)
    relations = spec["relations"]
    declared = spec.get("attributes")
    if declared is None:
        declared = []
        for rel in relations:
            declared += [a for a in rel.get("attrs", []) if a not in declared]
    known = set(declared)
    pairs = []
    for rel in relations:
        if not isinstance(rel, dict) or "name" not in rel or "attrs" not in rel:
            raise QueryParseError("each relation needs 'name' and 'attrs'", None, source)
        name = rel["name"]
        start = _line_of(text, json.dumps(name)) or 1
        for a in rel["attrs"]:
            if a not in known:
                line = _line_of(text, json.dumps(a), start)
                raise QueryParseError(f"relation {name} uses unknown attribute {a!r}", line, source)
        pairs.append((name, tuple(rel["attrs"])))
    out_line = _line_of(text, '"output"') or 1
    for a in spec["output"]:
        if a not in known:
            line = _line_of(text, json.dumps(a), out_line)
            raise QueryParseError(f"unknown output attribute {a!r}", line, source)
    try:
        return Query.build(pairs, spec["output"], attrs=declared)
    except QueryError as exc:
        raise QueryParseError(str(exc), None, source) from None


def read_query(path: str | Path) -> Query:
    path = Path(path)
    return parse_query(path.read_text(encoding="utf-8"), str(path))


def query_to_json(q: Query) -> str:
    spec = {
        "attributes": list(q.attrs),
        "relations": [{"name": e.name, "attrs": list(e.schema)} for e in q.edges],
        "output": list(q.output_order),
    }
    return json.dumps(spec, indent=2) + "\n"


def parse_value(text: str) -> int | str:
    return int(text) if _INT.match(text) else text


def read_relation(source: str | Path | IO[str], sr: Semiring) -> Relation:
    handle = open(source, newline="", encoding="utf-8") if isinstance(source, (str, Path)) else source
    try:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{source}: empty file")
        weighted = bool(header) and header[-1] == WEIGHT_COLUMN
        schema = header[:-1] if weighted else header
        pairs = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise SchemaError(f"{source}:{lineno}: expected {len(header)} fields, got {len(row)}")
            values = row[:-1] if weighted else row
            try:
                w = sr.parse(row[-1]) if weighted else sr.one
            except ValueError as exc:
                raise SchemaError(f"{source}:{lineno}: bad annotation: {exc}") from None
            pairs.append((tuple(parse_value(v) for v in values), w))
        return Relation.from_pairs(schema, pairs, sr)
    finally:
        if handle is not source:
            handle.close()


def load_instance(q: Query, data_dir: str | Path, sr: Semiring) -> dict[str, Relation]:
    data_dir = Path(data_dir)
    inst = {}
    for e in q.edges:
        path = data_dir / f"{e.name}.csv"
        if not path.exists():
            raise SchemaError(f"missing data file {path}")
        rel = read_relation(path, sr)
        if sorted(rel.schema) != sorted(e.schema):
            raise SchemaError(f"{path}: columns {list(rel.schema)} do not match {list(e.schema)}")
        inst[e.name] = rel.reorder(e.schema)
    return inst


def format_relation(rel: Relation, sr: Semiring) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(list(rel.schema) + [WEIGHT_COLUMN])
    for row, w in rel.sorted_items():
        writer.writerow([str(v) for v in row] + [sr.format(w)])
    return buffer.getvalue()


def write_relation(path: str | Path, rel: Relation, sr: Semiring) -> None:
    Path(path).write_text(format_relation(rel, sr), encoding="utf-8")


def write_instance(
    out_dir: str | Path, q: Query, inst: Mapping[str, Relation], sr: Semiring
) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "query.json").write_text(query_to_json(q), encoding="utf-8")
    for e in q.edges:
        write_relation(out_dir / f"{e.name}.csv", inst[e.name], sr)
