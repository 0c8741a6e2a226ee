"""Congruence generation, the congruence lattice, and quotient algebras.

A congruence is stored as the array element -> block id, normalized so block
ids appear in first-occurrence order; two congruences are equal iff the arrays
are.  Principal congruences are generated by union-find seeded with the given
pairs and closed under one-slot polynomial translations: whenever (a, b) gets
merged, every basic operation applied with a/b in one slot and constants in
the others merges the two images too.  Iterated to a fixpoint this yields the
least congruence containing the seed pairs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .algebra import FiniteAlgebra, OperationTable
from .errors import SizeOverflow

DEFAULT_LATTICE_CAP = 10_000


def _normalize(block_of: Sequence[int]) -> tuple[int, ...]:
    remap: dict[int, int] = {}
    out = []
    for b in block_of:
        if b not in remap:
            remap[b] = len(remap)
        out.append(remap[b])
    return tuple(out)


@dataclass(frozen=True)
class Congruence:
    blocks: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "blocks", _normalize(self.blocks))

    @property
    def size(self) -> int:
        return len(self.blocks)

    @property
    def num_blocks(self) -> int:
        return max(self.blocks) + 1 if self.blocks else 0

    def related(self, a: int, b: int) -> bool:
        return self.blocks[a] == self.blocks[b]

    def block_members(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.num_blocks)]
        for x, b in enumerate(self.blocks):
            out[b].append(x)
        return out

    def block_of(self, a: int) -> int:
        return self.blocks[a]

    def is_zero(self) -> bool:
        return self.num_blocks == self.size

    def is_one(self) -> bool:
        return self.num_blocks <= 1

    def leq(self, other: "Congruence") -> bool:
        """Refinement order: every block of self lies inside a block of other."""
        seen: dict[int, int] = {}
        for x in range(self.size):
            b = self.blocks[x]
            if b in seen:
                if seen[b] != other.blocks[x]:
                    return False
            else:
                seen[b] = other.blocks[x]
        return True

    def pairs(self, strict: bool = False) -> Iterator[tuple[int, int]]:
        for a in range(self.size):
            for b in range(self.size):
                if strict and a == b:
                    continue
                if self.blocks[a] == self.blocks[b]:
                    yield (a, b)

    def to_json(self) -> dict:
        return {"blocks": list(self.blocks)}

    @staticmethod
    def from_json(doc: dict) -> "Congruence":
        return Congruence(tuple(doc["blocks"]))

    @staticmethod
    def zero(size: int) -> "Congruence":
        return Congruence(tuple(range(size)))

    @staticmethod
    def one(size: int) -> "Congruence":
        return Congruence((0,) * size)

    def __repr__(self):
        return f"Congruence({list(self.blocks)})"


def is_congruence(alg: FiniteAlgebra, part: Congruence) -> bool:
    """Exhaustive compatibility scan over all operations and blockwise-related tuples."""
    if part.size != alg.size:
        return False
    for name, op in alg.ops.items():
        if op.arity == 0:
            continue
        blocks = part.block_members()
        for combo in itertools.product(range(part.num_blocks), repeat=op.arity):
            rep = tuple(blocks[b][0] for b in combo)
            target = part.blocks[alg.apply(name, *rep)]
            for pick in itertools.product(*(blocks[b] for b in combo)):
                if part.blocks[alg.apply(name, *pick)] != target:
                    return False
    return True


class _UnionFind:
    __slots__ = ("parent",)

    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if ra > rb:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


def cg(alg: FiniteAlgebra, pairs: Iterable[tuple[int, int]]) -> Congruence:
    """Least congruence containing the given pairs."""
    uf = _UnionFind(alg.size)
    queue: list[tuple[int, int]] = []
    for a, b in pairs:
        if uf.union(a, b):
            queue.append((a, b))
    s = alg.size
    while queue:
        a, b = queue.pop()
        for name, op in alg.ops.items():
            r = op.arity
            if r == 0:
                continue
            table = op.table
            for slot in range(r):
                pre = s ** (r - 1 - slot)
                for rest in itertools.product(range(s), repeat=r - 1):
                    idx = 0
                    for d in range(slot):
                        idx = idx * s + rest[d]
                    base_a = (idx * s + a) * pre
                    base_b = (idx * s + b) * pre
                    tail = 0
                    for d in range(slot, r - 1):
                        tail = tail * s + rest[d]
                    fa = table[base_a + tail]
                    fb = table[base_b + tail]
                    if uf.union(fa, fb):
                        queue.append((fa, fb))
    return Congruence(tuple(uf.find(x) for x in range(s)))


def meet(alpha: Congruence, beta: Congruence) -> Congruence:
    """Intersection of the two relations (no algebra needed)."""
    return Congruence(tuple(a * beta.size + b for a, b in zip(alpha.blocks, beta.blocks)))


def join(alg: FiniteAlgebra, alpha: Congruence, beta: Congruence) -> Congruence:
    """Least congruence above both: cg of the union of their pairs."""
    gen: list[tuple[int, int]] = []
    for part in (alpha, beta):
        reps: dict[int, int] = {}
        for x, b in enumerate(part.blocks):
            if b in reps:
                gen.append((reps[b], x))
            else:
                reps[b] = x
    return cg(alg, gen)


def quotient(alg: FiniteAlgebra, alpha: Congruence) -> tuple[FiniteAlgebra, tuple[int, ...]]:
    """Quotient algebra on block ids plus the projection map."""
    proj = alpha.blocks
    q = alpha.num_blocks
    reps = [0] * q
    for x in range(alg.size - 1, -1, -1):
        reps[proj[x]] = x
    ops: dict[str, OperationTable] = {}
    for name, op in alg.ops.items():
        r = op.arity
        table = []
        for combo in itertools.product(reps, repeat=r):
            table.append(proj[alg.apply(name, *combo)])
        ops[name] = OperationTable(r, tuple(table))
    return FiniteAlgebra(q, ops), proj


@dataclass(frozen=True)
class CongruenceLattice:
    algebra: FiniteAlgebra
    members: tuple[Congruence, ...]
    zero_index: int
    one_index: int

    @property
    def zero(self) -> Congruence:
        return self.members[self.zero_index]

    @property
    def one(self) -> Congruence:
        return self.members[self.one_index]

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def index(self, alpha: Congruence) -> int:
        return self.members.index(alpha)

    def join(self, alpha: Congruence, beta: Congruence) -> Congruence:
        return join(self.algebra, alpha, beta)

    def meet(self, alpha: Congruence, beta: Congruence) -> Congruence:
        return meet(alpha, beta)

    def hasse_edges(self) -> list[tuple[int, int]]:
        """Cover pairs (i, j) with members[i] < members[j] and nothing between."""
        n = len(self.members)
        less = [[i != j and self.members[i].leq(self.members[j]) for j in range(n)] for i in range(n)]
        edges = []
        for i in range(n):
            for j in range(n):
                if not less[i][j]:
                    continue
                if any(less[i][k] and less[k][j] for k in range(n)):
                    continue
                edges.append((i, j))
        return edges

    def is_modular(self) -> bool:
        for a, b, c in itertools.product(self.members, repeat=3):
            if a.leq(c):
                left = self.join(a, self.meet(b, c))
                right = self.meet(self.join(a, b), c)
                if left != right:
                    return False
        return True


def congruence_lattice(
    alg: FiniteAlgebra, cap: int = DEFAULT_LATTICE_CAP
) -> CongruenceLattice:
    """All congruences: principal ones closed under pairwise join."""
    found: dict[Congruence, None] = {}
    found[Congruence.zero(alg.size)] = None
    for a in range(alg.size):
        for b in range(a + 1, alg.size):
            found[cg(alg, [(a, b)])] = None
            if len(found) > cap:
                raise SizeOverflow(f"congruence count exceeded cap {cap}", cap=cap)
    work = list(found)
    while work:
        alpha = work.pop()
        for beta in list(found):
            j = join(alg, alpha, beta)
            if j not in found:
                found[j] = None
                work.append(j)
                if len(found) > cap:
                    raise SizeOverflow(f"congruence count exceeded cap {cap}", cap=cap)
    members = sorted(found, key=lambda c: (-c.num_blocks, c.blocks))
    lat = CongruenceLattice(
        alg,
        tuple(members),
        zero_index=members.index(Congruence.zero(alg.size)),
        one_index=members.index(Congruence.one(alg.size)),
    )
    return lat
