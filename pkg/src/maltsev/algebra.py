"""Finite algebras as flat operation tables, circuits over them, and polynomial clones.

Elements are dense integer indices 0..size-1.  An operation table of arity a is a
flat array of length size**a in mixed-radix row-major order, most significant
digit = first argument: the entry for (x1,...,xa) sits at
x1*size**(a-1) + x2*size**(a-2) + ... + xa.  All values are immutable after
construction, so everything here is safe to share between threads.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Sequence

import numpy as np

from .errors import (
    ArityMismatch,
    CapExceeded,
    ElementOutOfRange,
    SizeOverflow,
    UnknownOperation,
)

DEFAULT_CLONE_CAP = 200_000
DEFAULT_TABLE_CAP = 1 << 20
# Closure rounds apply an operation of arity a only to members with index below
# COMBO_BUDGET ** (1/a); a clone is reported complete only if the budget never
# actually truncated anything.
DEFAULT_COMBO_BUDGET = 9_000_000
_CHUNK_ENTRIES = 1 << 22


@dataclass(frozen=True)
class OperationTable:
    arity: int
    table: tuple[int, ...]

    def __post_init__(self):
        if self.arity < 0:
            raise ArityMismatch(f"negative arity {self.arity}")
        object.__setattr__(self, "table", tuple(int(v) for v in self.table))


class FiniteAlgebra:
    """A finite universe 0..size-1 together with named basic operations."""

    __slots__ = ("size", "ops", "_np_ops", "_hash", "__weakref__")

    def __init__(self, size: int, ops: Mapping[str, OperationTable]):
        if size <= 0:
            raise SizeOverflow(f"universe size must be positive, got {size}")
        self.size = int(size)
        checked: dict[str, OperationTable] = {}
        for name in sorted(ops):
            op = ops[name]
            if not isinstance(op, OperationTable):
                op = OperationTable(*op)
            if len(op.table) != size ** op.arity:
                raise ArityMismatch(
                    f"operation {name!r}: table length {len(op.table)} != {size}**{op.arity}",
                    op=name,
                )
            if op.table and (min(op.table) < 0 or max(op.table) >= size):
                raise ElementOutOfRange(f"operation {name!r} has entries outside 0..{size - 1}", op=name)
            checked[name] = op
        self.ops = checked
        self._np_ops = {
            name: np.asarray(op.table, dtype=np.int64) for name, op in checked.items()
        }
        self._hash = hash((self.size, tuple((n, o.arity, o.table) for n, o in checked.items())))

    def arity(self, name: str) -> int:
        try:
            return self.ops[name].arity
        except KeyError:
            raise UnknownOperation(f"no operation named {name!r}", op=name) from None

    def op_array(self, name: str) -> np.ndarray:
        try:
            return self._np_ops[name]
        except KeyError:
            raise UnknownOperation(f"no operation named {name!r}", op=name) from None

    def apply(self, name: str, *args: int) -> int:
        op = self.ops.get(name)
        if op is None:
            raise UnknownOperation(f"no operation named {name!r}", op=name)
        if len(args) != op.arity:
            raise ArityMismatch(f"{name!r} expects {op.arity} arguments, got {len(args)}", op=name)
        idx = 0
        for a in args:
            if not 0 <= a < self.size:
                raise ElementOutOfRange(f"element {a} outside 0..{self.size - 1}")
            idx = idx * self.size + a
        return op.table[idx]

    @property
    def signature(self) -> tuple[tuple[str, int], ...]:
        return tuple((n, o.arity) for n, o in self.ops.items())

    def elements(self) -> range:
        return range(self.size)

    def __eq__(self, other):
        return (
            isinstance(other, FiniteAlgebra)
            and self.size == other.size
            and self.ops == other.ops
        )

    def __hash__(self):
        return self._hash

    def __repr__(self):
        sig = ", ".join(f"{n}/{o.arity}" for n, o in self.ops.items())
        return f"FiniteAlgebra(size={self.size}, ops=[{sig}])"


# ---------------------------------------------------------------------------
# Circuits
# ---------------------------------------------------------------------------

VAR = "var"
CONST = "const"
APPLY = "op"


def var(index: int) -> tuple:
    return (VAR, int(index))


def const(element: int) -> tuple:
    return (CONST, int(element))


def apply(name: str, *refs: int) -> tuple:
    return (APPLY, name, tuple(int(r) for r in refs))


@dataclass(frozen=True)
class Circuit:
    """A DAG of gates; references always point strictly backwards."""

    gates: tuple[tuple, ...]
    out: int

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for pos, gate in enumerate(self.gates):
            if gate[0] == APPLY:
                for r in gate[2]:
                    if not 0 <= r < pos:
                        raise ArityMismatch(
                            f"gate {pos} references {r}, which is not strictly earlier"
                        )
        if not 0 <= self.out < len(self.gates):
            raise ArityMismatch(f"output reference {self.out} out of range")

    @property
    def num_vars(self) -> int:
        idx = [g[1] for g in self.gates if g[0] == VAR]
        return max(idx) + 1 if idx else 0

    def gate_count(self) -> int:
        return len(self.gates)

    def op_gate_count(self) -> int:
        return sum(1 for g in self.gates if g[0] == APPLY)

    def to_json(self) -> dict:
        out = []
        for gate in self.gates:
            if gate[0] == VAR:
                out.append({"var": gate[1]})
            elif gate[0] == CONST:
                out.append({"const": gate[1]})
            else:
                out.append({"op": gate[1], "in": list(gate[2])})
        return {"gates": out, "out": self.out}

    @staticmethod
    def from_json(doc: dict) -> "Circuit":
        gates = []
        for g in doc["gates"]:
            if "var" in g:
                gates.append(var(g["var"]))
            elif "const" in g:
                gates.append(const(g["const"]))
            else:
                gates.append(apply(g["op"], *g["in"]))
        return Circuit(tuple(gates), doc["out"])


def identity_circuit(index: int = 0) -> Circuit:
    return Circuit((var(index),), 0)


def constant_circuit(element: int) -> Circuit:
    return Circuit((const(element),), 0)


def compose(outer: Circuit, args: Sequence[Circuit]) -> Circuit:
    """Substitute circuits for the variables of `outer`, sharing each argument DAG once."""
    gates: list[tuple] = []
    arg_out: dict[int, int] = {}
    for i, arg in enumerate(args):
        offset = len(gates)
        for gate in arg.gates:
            if gate[0] == APPLY:
                gates.append(apply(gate[1], *(r + offset for r in gate[2])))
            else:
                gates.append(gate)
        arg_out[i] = arg.out + offset
    remap: dict[int, int] = {}
    for pos, gate in enumerate(outer.gates):
        if gate[0] == VAR:
            if gate[1] >= len(args):
                raise ArityMismatch(
                    f"composition needs {gate[1] + 1} arguments, got {len(args)}"
                )
            remap[pos] = arg_out[gate[1]]
        elif gate[0] == CONST:
            remap[pos] = len(gates)
            gates.append(gate)
        else:
            remap[pos] = len(gates)
            gates.append(apply(gate[1], *(remap[r] for r in gate[2])))
    return Circuit(tuple(gates), remap[outer.out])


class CircuitBuilder:
    """Incremental hash-consing gate list; avoids quadratic chained composition."""

    def __init__(self):
        self.gates: list[tuple] = []
        self._memo: dict[tuple, int] = {}

    def _emit(self, gate: tuple) -> int:
        idx = self._memo.get(gate)
        if idx is None:
            idx = len(self.gates)
            self._memo[gate] = idx
            self.gates.append(gate)
        return idx

    def var(self, index: int) -> int:
        return self._emit((VAR, int(index)))

    def const(self, element: int) -> int:
        return self._emit((CONST, int(element)))

    def op(self, name: str, *refs: int) -> int:
        return self._emit((APPLY, name, tuple(int(r) for r in refs)))

    def inline(self, circuit: Circuit, args: Sequence[int]) -> int:
        """Emit a circuit with its variables wired to existing gate refs."""
        remap: dict[int, int] = {}
        for pos, gate in enumerate(circuit.gates):
            if gate[0] == VAR:
                remap[pos] = args[gate[1]]
            elif gate[0] == CONST:
                remap[pos] = self._emit(gate)
            else:
                remap[pos] = self.op(gate[1], *(remap[r] for r in gate[2]))
        return remap[circuit.out]

    def finish(self, out: int) -> Circuit:
        return compact(Circuit(tuple(self.gates), out))


def compact(circuit: Circuit) -> Circuit:
    """Hash-cons equal gates and drop gates unreachable from the output.

    Composition-heavy constructions (indicator towers, interpolated gadgets)
    duplicate identical argument chains; folding them keeps instance circuits
    evaluable at desk scale.
    """
    remap: dict[int, int] = {}
    seen: dict[tuple, int] = {}
    gates: list[tuple] = []
    for pos, gate in enumerate(circuit.gates):
        if gate[0] == APPLY:
            key = (APPLY, gate[1], tuple(remap[r] for r in gate[2]))
        else:
            key = gate
        if key in seen:
            remap[pos] = seen[key]
        else:
            seen[key] = len(gates)
            remap[pos] = len(gates)
            gates.append(key)
    needed = set()
    stack = [remap[circuit.out]]
    while stack:
        i = stack.pop()
        if i in needed:
            continue
        needed.add(i)
        if gates[i][0] == APPLY:
            stack.extend(gates[i][2])
    order = sorted(needed)
    final = {old: new for new, old in enumerate(order)}
    out_gates = []
    for i in order:
        g = gates[i]
        if g[0] == APPLY:
            out_gates.append(apply(g[1], *(final[r] for r in g[2])))
        else:
            out_gates.append(g)
    return Circuit(tuple(out_gates), final[remap[circuit.out]])


def eval_circuit(alg: FiniteAlgebra, circuit: Circuit, args: Sequence[int]) -> int:
    """Forward-evaluate a circuit on a single argument tuple."""
    for a in args:
        if not 0 <= a < alg.size:
            raise ElementOutOfRange(f"element {a} outside 0..{alg.size - 1}")
    values: list[int] = []
    for gate in circuit.gates:
        kind = gate[0]
        if kind == VAR:
            if gate[1] >= len(args):
                raise ArityMismatch(
                    f"circuit reads variable {gate[1]} but only {len(args)} arguments given"
                )
            values.append(args[gate[1]])
        elif kind == CONST:
            if not 0 <= gate[1] < alg.size:
                raise ElementOutOfRange(f"constant {gate[1]} outside universe")
            values.append(gate[1])
        else:
            name, refs = gate[1], gate[2]
            op = alg.ops.get(name)
            if op is None:
                raise UnknownOperation(f"no operation named {name!r}", op=name)
            if len(refs) != op.arity:
                raise ArityMismatch(
                    f"gate applies {name!r} to {len(refs)} inputs, arity is {op.arity}", op=name
                )
            idx = 0
            for r in refs:
                idx = idx * alg.size + values[r]
            values.append(op.table[idx])
    return values[circuit.out]


def eval_circuit_batch(alg: FiniteAlgebra, circuit: Circuit, columns: np.ndarray) -> np.ndarray:
    """Evaluate a circuit on many argument tuples at once.

    `columns` has shape (num_vars, N); returns the N outputs.  Gate buffers are
    released as soon as no later gate references them, which keeps instance
    evaluation linear in memory even for towers with 1e5 gates.
    """
    s = alg.size
    n_gates = len(circuit.gates)
    last_use = [0] * n_gates
    for pos, gate in enumerate(circuit.gates):
        if gate[0] == APPLY:
            for r in gate[2]:
                last_use[r] = pos
    last_use[circuit.out] = n_gates
    values: dict[int, np.ndarray] = {}
    for pos, gate in enumerate(circuit.gates):
        kind = gate[0]
        if kind == VAR:
            if gate[1] >= columns.shape[0]:
                raise ArityMismatch(
                    f"circuit reads variable {gate[1]} but only {columns.shape[0]} columns given"
                )
            values[pos] = columns[gate[1]]
        elif kind == CONST:
            values[pos] = np.full(columns.shape[1], gate[1], dtype=np.int64)
        else:
            name, refs = gate[1], gate[2]
            table = alg.op_array(name)
            if len(refs) != alg.arity(name):
                raise ArityMismatch(f"gate applies {name!r} with wrong fan-in", op=name)
            if refs:
                idx = values[refs[0]].astype(np.int64, copy=True)
                for r in refs[1:]:
                    idx *= s
                    idx += values[r]
                values[pos] = table[idx]
            else:
                values[pos] = np.full(columns.shape[1], table[0], dtype=np.int64)
            for r in refs:
                if last_use[r] == pos:
                    values.pop(r, None)
    return values[circuit.out]


def input_grid(size: int, n: int) -> np.ndarray:
    """All size**n argument tuples as an (n, size**n) matrix, lexicographic order."""
    total = size**n
    rows = np.empty((n, total), dtype=np.int64)
    idx = np.arange(total, dtype=np.int64)
    for j in range(n):
        rows[j] = (idx // (size ** (n - 1 - j))) % size
    return rows


@dataclass(frozen=True)
class KAryFunction:
    """A k-ary function on the universe, by its graph, with an optional witnessing circuit."""

    arity: int
    table: tuple[int, ...]
    circuit: Optional[Circuit] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "table", tuple(int(v) for v in self.table))


def circuit_to_function(
    alg: FiniteAlgebra, circuit: Circuit, n: int, cap: int = DEFAULT_TABLE_CAP
) -> KAryFunction:
    """Tabulate a circuit over all size**n inputs."""
    if circuit.num_vars > n:
        raise ArityMismatch(
            f"circuit uses {circuit.num_vars} variables, asked to tabulate over {n}"
        )
    total = alg.size**n
    if total > cap:
        raise SizeOverflow(f"table of {total} entries exceeds cap {cap}", cap=cap)
    values = eval_circuit_batch(alg, circuit, input_grid(alg.size, n))
    return KAryFunction(n, tuple(int(v) for v in values), circuit)


# ---------------------------------------------------------------------------
# Polynomial clone generation
# ---------------------------------------------------------------------------


class ClonePool:
    """Fixed-arity polynomial clone members discovered by breadth-first closure.

    Members are deduplicated by value table.  Each member remembers how it was
    built, so a witnessing circuit (a DAG whose gates are exactly the members it
    depends on) can be materialized on demand.  `complete` is True only if the
    closure provably saturated: no cap truncation and no combination skipped by
    the per-arity combo budget.
    """

    def __init__(self, alg: FiniteAlgebra, arity: int):
        self.alg = alg
        self.arity = arity
        self.table_len = alg.size**arity
        self.tables = np.empty((0, self.table_len), dtype=np.uint8)
        self.defs: list[tuple] = []
        self.index: dict[bytes, int] = {}
        self.complete = False

    def __len__(self) -> int:
        return len(self.defs)

    def table(self, i: int) -> np.ndarray:
        return self.tables[i]

    def table_tuple(self, i: int) -> tuple[int, ...]:
        return tuple(int(v) for v in self.tables[i])

    def circuit(self, i: int) -> Circuit:
        needed: set[int] = set()
        stack = [i]
        while stack:
            j = stack.pop()
            if j in needed:
                continue
            needed.add(j)
            d = self.defs[j]
            if d[0] == APPLY:
                stack.extend(d[2])
        order = sorted(needed)
        remap = {j: pos for pos, j in enumerate(order)}
        gates = []
        for j in order:
            d = self.defs[j]
            if d[0] == APPLY:
                gates.append(apply(d[1], *(remap[r] for r in d[2])))
            else:
                gates.append(d)
        return Circuit(tuple(gates), remap[i])

    def kary(self, i: int) -> KAryFunction:
        return KAryFunction(self.arity, self.table_tuple(i), self.circuit(i))

    def functions(self) -> list[KAryFunction]:
        return [self.kary(i) for i in range(len(self))]

    def _append(self, tables: np.ndarray, defs: Iterable[tuple], cap: int) -> bool:
        """Add not-yet-seen rows; returns False once the cap is reached."""
        for row, d in zip(tables, defs):
            key = row.tobytes()
            if key in self.index:
                continue
            if len(self.defs) >= cap:
                return False
            self.index[key] = len(self.defs)
            self.defs.append(d)
            if len(self.defs) > self.tables.shape[0]:
                grown = np.empty(
                    (max(64, self.tables.shape[0] * 2), self.table_len), dtype=np.uint8
                )
                grown[: self.tables.shape[0]] = self.tables
                self.tables = grown
            self.tables[len(self.defs) - 1] = row
        return True

    def _finalize(self):
        self.tables = self.tables[: len(self.defs)].copy()


def _combo_blocks(lo: int, hi: int, arity: int) -> Iterator[tuple[range, ...]]:
    """Index blocks covering all arg tuples in [0,hi)**arity with max index >= lo."""
    if lo >= hi:
        return
    seen = range(0, lo)
    new = range(lo, hi)
    for pattern in itertools.product([0, 1], repeat=arity):
        if not any(pattern):
            continue
        yield tuple(new if p else seen for p in pattern)


def generate_polynomial_clone(
    alg: FiniteAlgebra,
    k: int,
    cap: int = DEFAULT_CLONE_CAP,
    combo_budget: int = DEFAULT_COMBO_BUDGET,
    on_cap: str = "raise",
) -> ClonePool:
    """Close the k projections and all constants under the basic operations.

    on_cap="raise" turns an unfinished closure into CapExceeded; "truncate"
    returns the capped pool with `complete=False`, which is what the witness
    enumeration in the commutator engine wants.
    """
    if k < 0:
        raise ArityMismatch(f"negative clone arity {k}")
    pool = ClonePool(alg, k)
    s = alg.size
    table_len = pool.table_len
    seeds: list[tuple[np.ndarray, tuple]] = []
    grid = input_grid(s, k) if k else np.empty((0, 1), dtype=np.int64)
    for j in range(k):
        seeds.append((grid[j].astype(np.uint8), var(j)))
    for e in range(s):
        seeds.append((np.full(table_len, e, dtype=np.uint8), const(e)))
    for name, op in alg.ops.items():
        if op.arity == 0:
            seeds.append((np.full(table_len, op.table[0], dtype=np.uint8), apply(name)))
    pool._append(
        np.stack([t for t, _ in seeds]), [d for _, d in seeds], cap
    )

    limits = {}
    for name, op in alg.ops.items():
        a = op.arity
        limits[name] = 10**9 if a <= 1 else max(2, int(combo_budget ** (1.0 / a)))

    truncated = len(pool) >= cap
    budget_hit = False
    prev = 0
    while not truncated:
        start = len(pool)
        if start == prev:
            break
        for name in sorted(alg.ops, key=lambda n: (alg.ops[n].arity, n)):
            a = alg.ops[name].arity
            if a == 0:
                continue
            table = alg.op_array(name)
            hi = min(start, limits[name])
            if start > limits[name]:
                budget_hit = True
            lo = min(prev, hi)
            for block in _combo_blocks(lo, hi, a):
                sizes = [len(r) for r in block]
                total = 1
                for z in sizes:
                    total *= z
                if total == 0:
                    continue
                step = max(1, _CHUNK_ENTRIES // max(1, table_len))
                combo_idx = np.arange(total, dtype=np.int64)
                for c0 in range(0, total, step):
                    chunk = combo_idx[c0 : c0 + step]
                    arg_members = []
                    rem = chunk
                    for d in range(a - 1, -1, -1):
                        arg_members.insert(0, block[d].start + rem % sizes[d])
                        rem = rem // sizes[d]
                    idx = pool.tables[arg_members[0]].astype(np.int64)
                    for m in arg_members[1:]:
                        idx *= s
                        idx += pool.tables[m]
                    new_tabs = table[idx].astype(np.uint8)
                    view = new_tabs.view([("", new_tabs.dtype)] * table_len)
                    _, first = np.unique(view, return_index=True)
                    first.sort()
                    rows = new_tabs[first]
                    defs = [
                        apply(name, *(int(arg_members[d][i]) for d in range(a)))
                        for i in first
                    ]
                    if not pool._append(rows, defs, cap):
                        truncated = True
                        break
                if truncated:
                    break
            if truncated:
                break
        prev = start
    pool._finalize()
    pool.complete = not truncated and not budget_hit
    if not pool.complete and on_cap == "raise":
        raise CapExceeded(
            f"clone closure for arity {k} exceeded cap={cap} (budget_hit={budget_hit})",
            cap=cap,
            members=len(pool),
        )
    return pool


# ---------------------------------------------------------------------------
# Maltsev detection
# ---------------------------------------------------------------------------


def verify_maltsev(alg: FiniteAlgebra, candidate: Circuit) -> bool:
    """Check m(y,x,x) = m(x,x,y) = y exhaustively."""
    s = alg.size
    xs, ys = input_grid(s, 2)
    left = eval_circuit_batch(alg, candidate, np.stack([ys, xs, xs]))
    right = eval_circuit_batch(alg, candidate, np.stack([xs, xs, ys]))
    return bool(np.all(left == ys) and np.all(right == ys))


def find_maltsev(
    alg: FiniteAlgebra,
    cap: int = 20_000,
    combo_budget: int = DEFAULT_COMBO_BUDGET,
) -> Optional[Circuit]:
    """Search the ternary polynomial clone for a Maltsev operation.

    Returns None when the fully-closed clone has no Maltsev member; raises
    CapExceeded when the search was truncated before finding one.
    """
    pool = generate_polynomial_clone(alg, 3, cap=cap, combo_budget=combo_budget, on_cap="truncate")
    s = alg.size
    xs, ys = input_grid(s, 2)
    left_idx = (ys * s + xs) * s + xs
    right_idx = (xs * s + xs) * s + ys
    for i in range(len(pool)):
        t = pool.tables[i]
        if np.array_equal(t[left_idx], ys) and np.array_equal(t[right_idx], ys):
            return pool.circuit(i)
    if not pool.complete:
        raise CapExceeded(
            "no Maltsev member within the truncated clone search", cap=cap, members=len(pool)
        )
    return None
