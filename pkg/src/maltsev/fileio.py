"""File formats: algebras, circuits, congruences, graphs, CNF, instances.

Algebra files are UTF-8 JSON with fields size and ops; circuits are JSON gate
lists.  Graphs come in DIMACS edge format or as a JSON edge list, CNF in
DIMACS cnf.  Malformed input raises ParseError with a line/column where one
makes sense.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Union

from .algebra import Circuit, FiniteAlgebra, OperationTable
from .congruence import Congruence
from .errors import ParseError
from .reductions import Cnf, CsatInstance, Graph

PathLike = Union[str, Path]


def _load_json(path: PathLike) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc), line=exc.lineno, column=exc.colno, path=str(path)) from None


def load_algebra(path: PathLike) -> FiniteAlgebra:
    doc = _load_json(path)
    try:
        size = int(doc["size"])
        ops = {
            name: OperationTable(int(spec["arity"]), tuple(spec["table"]))
            for name, spec in doc["ops"].items()
        }
    except (KeyError, TypeError) as exc:
        raise ParseError(f"algebra file is missing {exc}", path=str(path)) from None
    return FiniteAlgebra(size, ops)


def dump_algebra(alg: FiniteAlgebra, path: PathLike) -> None:
    doc = {
        "size": alg.size,
        "ops": {n: {"arity": o.arity, "table": list(o.table)} for n, o in alg.ops.items()},
    }
    Path(path).write_text(json.dumps(doc, separators=(",", ":")) + "\n", encoding="utf-8")


def algebra_hash(alg: FiniteAlgebra) -> str:
    doc = {
        "size": alg.size,
        "ops": {n: {"arity": o.arity, "table": list(o.table)} for n, o in alg.ops.items()},
    }
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]


def load_circuit(path: PathLike) -> Circuit:
    doc = _load_json(path)
    try:
        return Circuit.from_json(doc)
    except (KeyError, TypeError) as exc:
        raise ParseError(f"bad circuit file: {exc}", path=str(path)) from None


def dump_circuit(circ: Circuit, path: PathLike) -> None:
    Path(path).write_text(json.dumps(circ.to_json(), separators=(",", ":")) + "\n")


def load_congruence(path: PathLike) -> Congruence:
    doc = _load_json(path)
    return Congruence.from_json(doc)


def load_graph(path: PathLike) -> Graph:
    """DIMACS edge format (p edge N M, e u v with 1-based vertices) or JSON."""
    text = Path(path).read_text(encoding="utf-8")
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(str(exc), line=exc.lineno, column=exc.colno, path=str(path)) from None
        try:
            return Graph(int(doc["vertices"]), tuple((int(u), int(v)) for u, v in doc["edges"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad JSON graph: {exc}", path=str(path)) from None
    n = None
    edges = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        if parts[0] == "p":
            if len(parts) < 4 or parts[1] not in ("edge", "edges", "col"):
                raise ParseError("bad problem line", line=lineno, column=1, path=str(path))
            n = int(parts[2])
        elif parts[0] == "e":
            if n is None:
                raise ParseError("edge before problem line", line=lineno, column=1, path=str(path))
            try:
                u, v = int(parts[1]) - 1, int(parts[2]) - 1
            except (IndexError, ValueError):
                raise ParseError("bad edge line", line=lineno, column=1, path=str(path)) from None
            edges.append((u, v))
        else:
            raise ParseError(f"unknown line kind {parts[0]!r}", line=lineno, column=1, path=str(path))
    if n is None:
        raise ParseError("no problem line", line=1, column=1, path=str(path))
    return Graph(n, tuple(edges))


def dump_graph(graph: Graph, path: PathLike) -> None:
    doc = {"vertices": graph.num_vertices, "edges": [list(e) for e in graph.edges]}
    Path(path).write_text(json.dumps(doc, separators=(",", ":")) + "\n")


def load_cnf(path: PathLike) -> Cnf:
    """DIMACS cnf format."""
    text = Path(path).read_text(encoding="utf-8")
    n = None
    clauses = []
    current: list[int] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        parts = line.split()
        if parts[0] == "p":
            if len(parts) < 4 or parts[1] != "cnf":
                raise ParseError("bad problem line", line=lineno, column=1, path=str(path))
            n = int(parts[2])
            continue
        if n is None:
            raise ParseError("clause before problem line", line=lineno, column=1, path=str(path))
        try:
            lits = [int(x) for x in parts]
        except ValueError:
            raise ParseError("bad literal", line=lineno, column=1, path=str(path)) from None
        for lit in lits:
            if lit == 0:
                clauses.append(tuple(current))
                current = []
            else:
                if abs(lit) > n:
                    raise ParseError(f"literal {lit} out of range", line=lineno, column=1, path=str(path))
                current.append(lit)
    if current:
        clauses.append(tuple(current))
    if n is None:
        raise ParseError("no problem line", line=1, column=1, path=str(path))
    return Cnf(n, tuple(clauses))


def dump_instance(inst: CsatInstance, path: PathLike, manifest: dict | None = None) -> None:
    doc = {
        "algebra_hash": algebra_hash(inst.algebra),
        "size": inst.algebra.size,
        "num_vars": inst.num_vars,
        "lhs": inst.lhs.to_json(),
        "rhs": inst.rhs.to_json(),
        "meta": inst.meta,
    }
    if manifest is not None:
        doc["manifest"] = manifest
    Path(path).write_text(json.dumps(doc, separators=(",", ":"), sort_keys=True) + "\n")


def load_instance(path: PathLike, alg: FiniteAlgebra) -> CsatInstance:
    doc = _load_json(path)
    if doc.get("algebra_hash") not in (None, algebra_hash(alg)):
        raise ParseError("instance was generated for a different algebra", path=str(path))
    return CsatInstance(
        alg,
        Circuit.from_json(doc["lhs"]),
        Circuit.from_json(doc["rhs"]),
        int(doc["num_vars"]),
        dict(doc.get("meta", {})),
    )
