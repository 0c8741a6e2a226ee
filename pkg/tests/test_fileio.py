import json

import pytest

from maltsev import catalog
from maltsev.algebra import Circuit, apply, var
from maltsev.errors import ParseError
from maltsev.fileio import (
    algebra_hash,
    dump_algebra,
    dump_circuit,
    dump_graph,
    dump_instance,
    load_algebra,
    load_circuit,
    load_cnf,
    load_graph,
    load_instance,
)
from maltsev.reductions import CsatInstance, Graph


def test_algebra_roundtrip(tmp_path, bundled):
    z4, _ = bundled["z4"]
    path = tmp_path / "z4.json"
    dump_algebra(z4, path)
    back = load_algebra(path)
    assert back == z4
    assert algebra_hash(back) == algebra_hash(z4)


def test_algebra_parse_error_positions(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"size": 2,\n  "ops": {')
    with pytest.raises(ParseError) as err:
        load_algebra(path)
    assert err.value.line is not None


def test_algebra_missing_field(tmp_path):
    path = tmp_path / "missing.json"
    path.write_text('{"size": 2}')
    with pytest.raises(ParseError):
        load_algebra(path)


def test_circuit_roundtrip(tmp_path):
    circ = Circuit((var(0), var(1), apply("add", 0, 1)), 2)
    path = tmp_path / "c.json"
    dump_circuit(circ, path)
    assert load_circuit(path) == circ


def test_graph_json_roundtrip(tmp_path):
    g = Graph(4, ((0, 1), (2, 3)))
    path = tmp_path / "g.json"
    dump_graph(g, path)
    assert load_graph(path) == g


def test_graph_dimacs(tmp_path):
    path = tmp_path / "g.col"
    path.write_text("c a comment\np edge 3 2\ne 1 2\ne 2 3\n")
    g = load_graph(path)
    assert g.num_vertices == 3 and g.edges == ((0, 1), (1, 2))


def test_graph_dimacs_errors(tmp_path):
    path = tmp_path / "bad.col"
    path.write_text("e 1 2\n")
    with pytest.raises(ParseError) as err:
        load_graph(path)
    assert err.value.line == 1


def test_cnf_dimacs(tmp_path):
    path = tmp_path / "f.cnf"
    path.write_text("c test\np cnf 3 2\n1 -2 3 0\n-1 2 -3 0\n")
    cnf = load_cnf(path)
    assert cnf.num_vars == 3
    assert cnf.clauses == ((1, -2, 3), (-1, 2, -3))


def test_cnf_literal_out_of_range(tmp_path):
    path = tmp_path / "f.cnf"
    path.write_text("p cnf 1 1\n1 -2 1 0\n")
    with pytest.raises(ParseError):
        load_cnf(path)


def test_instance_roundtrip(tmp_path, bundled):
    z2, _ = bundled["z2"]
    circ = Circuit((var(0), var(1), apply("add", 0, 1)), 2)
    inst = CsatInstance(z2, circ, circ, 2, {"kind": "test"})
    path = tmp_path / "inst.json"
    dump_instance(inst, path, manifest={"command": "test"})
    back = load_instance(path, z2)
    assert back.lhs == inst.lhs and back.rhs == inst.rhs and back.num_vars == 2
    assert back.meta["kind"] == "test"


def test_instance_wrong_algebra(tmp_path, bundled):
    z2, _ = bundled["z2"]
    z4, _ = bundled["z4"]
    circ = Circuit((var(0),), 0)
    path = tmp_path / "inst.json"
    dump_instance(CsatInstance(z2, circ, circ, 1), path)
    with pytest.raises(ParseError):
        load_instance(path, z4)
