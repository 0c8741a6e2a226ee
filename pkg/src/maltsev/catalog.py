"""Bundled example algebras, shipped as data files so tests are self-contained.

Abelian groups carry just their addition; a composed circuit provides the
Maltsev operation.  The twist algebras and the three-level tower carry a basic
ternary Maltsev operation plus a unary twist map, together with the redundant
binary loop sum/difference (polynomially definable from m and 0, bundled as
basic operations to keep clone-search depth low; congruences and commutators
are unaffected by adding polynomial operations to the signature).
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

from .algebra import Circuit, FiniteAlgebra, OperationTable, apply, var, verify_maltsev
from .errors import UnknownOperation

_NAMES = (
    "z2",
    "z3",
    "z4",
    "z6",
    "z8",
    "z2xz2",
    "s3",
    "z3xz2_twist",
    "z2xz3_twist",
    "tower3",
)


def names() -> tuple[str, ...]:
    return _NAMES


@lru_cache(maxsize=None)
def load(name: str) -> FiniteAlgebra:
    if name not in _NAMES:
        raise UnknownOperation(f"no bundled algebra named {name!r}", name=name)
    path = resources.files("maltsev.data.algebras").joinpath(f"{name}.json")
    doc = json.loads(path.read_text())
    ops = {
        op_name: OperationTable(spec["arity"], tuple(spec["table"]))
        for op_name, spec in doc["ops"].items()
    }
    return FiniteAlgebra(doc["size"], ops)


def _chain_add(refs: list[int], gates: list) -> int:
    acc = refs[0]
    for r in refs[1:]:
        gates.append(apply("add", acc, r))
        acc = len(gates) - 1
    return acc


@lru_cache(maxsize=None)
def maltsev_circuit(name: str) -> Circuit:
    """A verified Maltsev circuit for each bundled algebra."""
    alg = load(name)
    if "m" in alg.ops and alg.ops["m"].arity == 3:
        circ = Circuit((var(0), var(1), var(2), apply("m", 0, 1, 2)), 3)
    elif "mul" in alg.ops and "inv" in alg.ops:
        # x * y^-1 * z
        circ = Circuit(
            (var(0), var(1), var(2), apply("inv", 1), apply("mul", 0, 3), apply("mul", 4, 2)),
            5,
        )
    elif "add" in alg.ops:
        # x + (n-1)*y + z in a cyclic-style group of exponent n
        n = _group_exponent(alg)
        gates: list = [var(0), var(1), var(2)]
        y_refs = [1] * (n - 1)
        acc = _chain_add([0] + y_refs, gates)
        gates.append(apply("add", acc, 2))
        circ = Circuit(tuple(gates), len(gates) - 1)
    else:
        raise UnknownOperation(f"no Maltsev recipe for {name!r}", name=name)
    if not verify_maltsev(alg, circ):
        raise AssertionError(f"bundled Maltsev circuit for {name} failed verification")
    return circ


def _group_exponent(alg: FiniteAlgebra) -> int:
    """lcm of element orders in an abelian table group with neutral element 0."""
    import math

    add = alg.ops["add"].table
    s = alg.size
    exp = 1
    for x in range(1, s):
        acc = x
        t = 1
        while acc != 0:
            acc = add[acc * s + x]
            t += 1
            if t > s:
                raise AssertionError("additive reduct is not a group with neutral 0")
        exp = math.lcm(exp, t)
    return exp
