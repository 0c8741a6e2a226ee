"""Loop arithmetic induced by a Maltsev circuit: x + y = m(x, 0, y).

On a nilpotent algebra this multiplication is a loop with neutral element 0,
and both divisions are realized by polynomial circuits: every right
translation R_y is a permutation, so x / y = R_y^(N-1)(x) for N the lcm of all
translation orders, and symmetrically for the left division.  The divisions
are verified exhaustively after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
import numpy as np

from .algebra import (
    Circuit,
    FiniteAlgebra,
    apply,
    compose,
    constant_circuit,
    eval_circuit_batch,
    identity_circuit,
    input_grid,
    var,
)
from .errors import DivisionNotFound, NotMaltsev


@dataclass(frozen=True, eq=False)
class LoopOps:
    alg: FiniteAlgebra
    zero: int
    add: Circuit
    rdiv: Circuit
    ldiv: Circuit
    add_table: np.ndarray = None
    rdiv_table: np.ndarray = None
    ldiv_table: np.ndarray = None

    def add_of(self, x: int, y: int) -> int:
        return int(self.add_table[x * self.alg.size + y])

    def rdiv_of(self, x: int, y: int) -> int:
        return int(self.rdiv_table[x * self.alg.size + y])

    def scalar_circuit(self, q: int) -> Circuit:
        """Left-associated q-fold sum ((x+x)+x)+... as a circuit."""
        if q < 1:
            return constant_circuit(self.zero)
        circ = identity_circuit(0)
        for _ in range(q - 1):
            circ = compose(self.add, [circ, identity_circuit(0)])
        return circ

    def scalar_of(self, q: int, x: int) -> int:
        acc = x
        for _ in range(q - 1):
            acc = self.add_of(acc, x)
        return acc if q >= 1 else self.zero


def _perm_order(perm: np.ndarray) -> int:
    n = len(perm)
    seen = [False] * n
    order = 1
    for start in range(n):
        if seen[start]:
            continue
        length = 0
        x = start
        while not seen[x]:
            seen[x] = True
            x = int(perm[x])
            length += 1
        order = math.lcm(order, length)
    return order


def _binary_table(alg: FiniteAlgebra, circ: Circuit) -> np.ndarray:
    xs, ys = input_grid(alg.size, 2)
    return eval_circuit_batch(alg, circ, np.stack([xs, ys]))


def _named_basic(alg: FiniteAlgebra, name: str, table: np.ndarray) -> Circuit | None:
    op = alg.ops.get(name)
    if op is not None and op.arity == 2 and np.array_equal(np.asarray(op.table), table):
        return Circuit((var(0), var(1), apply(name, 0, 1)), 2)
    return None


def loop_context(alg: FiniteAlgebra, m: Circuit, zero: int = 0) -> LoopOps:
    """Build add and both divisions from a verified Maltsev circuit."""
    from .algebra import verify_maltsev

    if not verify_maltsev(alg, m):
        raise NotMaltsev("the provided circuit is not a Maltsev operation")
    s = alg.size
    add = compose(m, [identity_circuit(0), constant_circuit(zero), identity_circuit(1)])
    add_tab = _binary_table(alg, add)
    basic = _named_basic(alg, "add", add_tab)
    if basic is not None:
        add = basic

    rows = add_tab.reshape(s, s)
    right_orders = []
    left_orders = []
    for y in range(s):
        col = rows[:, y]
        row = rows[y, :]
        if len(set(col.tolist())) != s or len(set(row.tolist())) != s:
            raise DivisionNotFound("loop translations are not bijective", element=y)
        right_orders.append(_perm_order(col))
        left_orders.append(_perm_order(row))
    n_right = math.lcm(*right_orders)
    n_left = math.lcm(*left_orders)

    rdiv = identity_circuit(0)
    for _ in range(n_right - 1):
        rdiv = compose(add, [rdiv, identity_circuit(1)])
    rdiv_tab = _binary_table(alg, rdiv)
    named = _named_basic(alg, "sub", rdiv_tab)
    if named is not None:
        rdiv = named

    ldiv = identity_circuit(1)
    for _ in range(n_left - 1):
        ldiv = compose(add, [identity_circuit(0), ldiv])
    ldiv_tab = _binary_table(alg, ldiv)

    xs, ys = input_grid(s, 2)
    xy = add_tab[xs * s + ys]
    if not (
        np.array_equal(rdiv_tab[xy * s + ys], xs)
        and np.array_equal(add_tab[rdiv_tab[xs * s + ys] * s + ys], xs)
        and np.array_equal(ldiv_tab[xs * s + xy], ys)
        and np.array_equal(add_tab[xs * s + ldiv_tab[xs * s + ys]], ys)
    ):
        raise DivisionNotFound("iterated translations do not invert the loop product")
    zeros = np.full(s, zero, dtype=np.int64)
    idx = np.arange(s, dtype=np.int64)
    if not (
        np.array_equal(add_tab[idx * s + zeros], idx)
        and np.array_equal(add_tab[zeros * s + idx], idx)
    ):
        raise DivisionNotFound("chosen zero is not neutral for the loop product")
    return LoopOps(alg, zero, add, rdiv, ldiv, add_tab, rdiv_tab, ldiv_tab)
