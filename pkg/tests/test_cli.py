import json
import re
from pathlib import Path

import pytest

from maltsev import catalog
from maltsev.cli import main
from maltsev.fileio import dump_algebra, dump_graph
from maltsev.reductions import Graph


def run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_analyze_z4(capsys):
    rc, out, _ = run(capsys, "analyze", "bundled:z4", "--format", "json")
    assert rc == 0
    doc = json.loads(out)
    res = doc["result"]
    assert res["congruences"] == 3
    assert res["nilpotent_degree"] == 1
    assert res["fitting_length"] == 1


def test_analyze_one_element_algebra(capsys, tmp_path):
    from maltsev.algebra import FiniteAlgebra, OperationTable

    trivial = FiniteAlgebra(1, {"add": OperationTable(2, (0,))})
    path = tmp_path / "one.json"
    dump_algebra(trivial, path)
    rc, out, _ = run(capsys, "analyze", str(path), "--format", "json")
    assert rc == 0
    res = json.loads(out)["result"]
    assert res["congruences"] == 1
    assert res["fitting_length"] == 0


def test_analyze_twist_fitting_length(capsys):
    rc, out, _ = run(capsys, "analyze", "bundled:z3xz2_twist", "--format", "json")
    assert rc == 0
    assert json.loads(out)["result"]["fitting_length"] == 2


def test_commutator_command(capsys):
    rc, out, _ = run(capsys, "commutator", "bundled:s3", "one", "one", "--format", "json")
    assert rc == 0
    res = json.loads(out)["result"]
    assert res["num_blocks"] == 2


def test_supernilpotent_command(capsys):
    rc, out, _ = run(capsys, "supernilpotent", "bundled:z6", "one", "--format", "json")
    assert rc == 0
    assert json.loads(out)["result"]["supernilpotent"] is True


def test_reduce_solve_roundtrip(capsys, tmp_path):
    graph = tmp_path / "triangle.json"
    dump_graph(Graph(3, ((0, 1), (1, 2), (0, 2))), graph)
    inst = tmp_path / "inst.json"
    rc, out, _ = run(
        capsys,
        "reduce",
        "bundled:z2xz3_twist",
        "--graph",
        str(graph),
        "--out",
        str(inst),
        "--format",
        "json",
    )
    assert rc == 0
    res = json.loads(out)["result"]
    assert res["fit_residual"] < 0.10
    assert Path(inst).exists()
    assert (tmp_path / "inst_sizes.csv").exists()
    assert (tmp_path / "inst_sizes.png").exists()
    csv = (tmp_path / "inst_sizes.csv").read_text().splitlines()
    assert csv[0] == "n,arity,gates" and len(csv) == 5

    rc, out, _ = run(
        capsys, "solve", "bundled:z2xz3_twist", str(inst), "--format", "json"
    )
    assert rc == 0
    res = json.loads(out)["result"]
    assert res["satisfiable"] is True
    assert len(set(res["coloring"])) == 3

    rc, out, _ = run(
        capsys, "solve", "bundled:z2xz3_twist", str(inst), "--mode", "ceqv", "--format", "json"
    )
    assert rc == 0
    assert json.loads(out)["result"]["equivalent"] is False


def test_verify_suite_pass(capsys):
    rc, out, _ = run(capsys, "verify", "clonoid", "--format", "json")
    assert rc == 0
    res = json.loads(out)["result"]
    assert res["failed"] == 0 and res["passed"] > 0


def test_verify_unknown_suite(capsys):
    rc, _, err = run(capsys, "verify", "no-such-suite")
    assert rc == 2
    assert "no-such-suite" in err


def test_exit_code_cap_exceeded(capsys, tmp_path):
    # a 12-variable instance over z4 cannot be scanned with a tiny cap
    from maltsev.algebra import Circuit, var
    from maltsev.fileio import dump_instance
    from maltsev.reductions import CsatInstance

    z4 = catalog.load("z4")
    circ = Circuit(tuple(var(i) for i in range(12)), 0)
    inst = tmp_path / "big.json"
    dump_instance(CsatInstance(z4, circ, circ, 12), inst)
    rc, _, err = run(
        capsys, "solve", "bundled:z4", str(inst), "--cap-search", "100"
    )
    assert rc == 3
    assert "SearchSpaceOverflow" in err


def test_usage_error_exit_code(capsys):
    rc, _, _ = run(capsys, "reduce", "bundled:z4")
    assert rc == 2


def test_report_result_section_deterministic(capsys, tmp_path):
    out1 = tmp_path / "r1.json"
    out2 = tmp_path / "r2.json"
    rc1, _, _ = run(capsys, "analyze", "bundled:z4", "--output", str(out1))
    rc2, _, _ = run(capsys, "analyze", "bundled:z4", "--output", str(out2))
    assert rc1 == rc2 == 0

    def result_bytes(path):
        text = Path(path).read_text()
        return text[: text.index(',"run":')]

    assert result_bytes(out1) == result_bytes(out2)


def test_bundled_listing(capsys):
    rc, out, _ = run(capsys, "bundled", "--format", "json")
    assert rc == 0
    names = {row["name"] for row in json.loads(out)["result"]["algebras"]}
    assert {"z2", "z4", "s3", "z3xz2_twist", "tower3"} <= names
