"""Conjunction machinery for pairs of coprime elementary abelian groups.

Everything lives over two table groups L = (Z_q)^l and U = (Z_p)^k for
distinct primes p, q.  Group elements are mixed-radix indices (first
coordinate most significant).  A nonconstant unary map U -> L normalizes, in
four table-level steps, to a two-valued map vanishing exactly on a hyperplane
H and equal to some fixed nonzero value off H.  From that base map an n-ary
conjunction indicator is synthesized by a coset recursion; symbolically it is
a Z_q-linear combination of atoms t1(sum_i b_i*u_i + c), which is the form the
circuit splicer in the reduction layer consumes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    ConstantInput,
    NormalizationFailed,
    TableOverflow,
    ValueOutsideCyclicSubgroup,
)

DEFAULT_TABLE_CAP = 1_000_000


def _vec(idx: int, mod: int, dim: int) -> tuple[int, ...]:
    out = []
    for _ in range(dim):
        out.append(idx % mod)
        idx //= mod
    return tuple(reversed(out))


def _idx(vec: Sequence[int], mod: int) -> int:
    out = 0
    for v in vec:
        out = out * mod + (v % mod)
    return out


@dataclass(frozen=True)
class ClonoidContext:
    p: int
    k: int
    q: int
    l: int

    def __post_init__(self):
        if self.p == self.q:
            raise ValueError("the two primes must be distinct")
        for n in (self.p, self.q):
            if n < 2 or any(n % d == 0 for d in range(2, n)):
                raise ValueError(f"{n} is not prime")

    @property
    def u_size(self) -> int:
        return self.p**self.k

    @property
    def l_size(self) -> int:
        return self.q**self.l

    @property
    def p_inv(self) -> int:
        return pow(self.p, -1, self.q)

    # group arithmetic on indices (coordinatewise; one-dimensional fast paths)
    def u_add(self, a: int, b: int) -> int:
        if self.k == 1:
            return (a + b) % self.p
        return _idx([x + y for x, y in zip(_vec(a, self.p, self.k), _vec(b, self.p, self.k))], self.p)

    def u_scalar(self, c: int, a: int) -> int:
        if self.k == 1:
            return (c * a) % self.p
        return _idx([c * x for x in _vec(a, self.p, self.k)], self.p)

    def u_neg(self, a: int) -> int:
        return self.u_scalar(-1 % self.p, a)

    def l_add(self, a: int, b: int) -> int:
        if self.l == 1:
            return (a + b) % self.q
        return _idx([x + y for x, y in zip(_vec(a, self.q, self.l), _vec(b, self.q, self.l))], self.q)

    def l_scalar(self, c: int, a: int) -> int:
        if self.l == 1:
            return (c * a) % self.q
        return _idx([c * x for x in _vec(a, self.q, self.l)], self.q)

    def l_neg(self, a: int) -> int:
        return self.l_scalar(-1 % self.q, a)


@dataclass(frozen=True)
class Hyperplane:
    """An index-p subgroup of U = (Z_p)^k, as the kernel of a canonical functional."""

    p: int
    k: int
    normal: tuple[int, ...]

    def __post_init__(self):
        nz = [i for i, c in enumerate(self.normal) if c % self.p]
        if not nz or self.normal[nz[0]] % self.p != 1:
            raise ValueError("normal vector must be canonical (first nonzero = 1)")

    def phase(self, u_index: int) -> int:
        """The coset number of u in U/H, an element of Z_p."""
        vec = _vec(u_index, self.p, self.k)
        return sum(c * x for c, x in zip(self.normal, vec)) % self.p

    def contains(self, u_index: int) -> bool:
        return self.phase(u_index) == 0

    def members(self) -> list[int]:
        return [u for u in range(self.p**self.k) if self.contains(u)]


def hyperplanes(p: int, k: int) -> list[Hyperplane]:
    """All index-p subgroups, via canonical normal vectors; count (p^k - 1)/(p - 1)."""
    out = []
    for vec in itertools.product(range(p), repeat=k):
        nz = [i for i, c in enumerate(vec) if c]
        if nz and vec[nz[0]] == 1:
            out.append(Hyperplane(p, k, vec))
    return out


def hyperplanes_containing(p: int, k: int, u_index: int) -> int:
    return sum(1 for h in hyperplanes(p, k) if h.contains(u_index))


@dataclass(frozen=True)
class ConjunctionFamily:
    """The data from which every n-ary conjunction indicator is synthesized."""

    ctx: ClonoidContext
    hyperplane: Hyperplane
    value: int  # nonzero element of L: the off-hyperplane value of t1
    t1: tuple[int, ...]  # unary table U -> L, vanishing exactly on H
    transversal: int  # element a with phase(a) = 1; cosets are 0, a, 2a, ...
    steps: tuple = ()  # normalization trace, consumed by the circuit splicer

    def coset_rep(self, i: int) -> int:
        return self.ctx.u_scalar(i, self.transversal)


def normalize_unary(ctx: ClonoidContext, t: Sequence[int]) -> ConjunctionFamily:
    """Turn a nonconstant unary map U -> L into a hyperplane indicator.

    The steps, each recorded in the trace: (1) shift so t(0) = 0; (2) if the
    values sum to zero, translate the argument by a point where t is nonzero;
    (3) average over the hyperplane whose averages are nonconstant, repeating
    (1); (4) collapse along cosets, which leaves the two-valued indicator.
    """
    t = list(int(v) for v in t)
    if len(t) != ctx.u_size:
        raise NormalizationFailed(f"table length {len(t)} != {ctx.u_size}")
    if all(v == t[0] for v in t):
        raise ConstantInput("unary map is constant")
    steps: list[tuple] = []

    def shift_zero(tab: list[int]) -> list[int]:
        c = tab[0]
        if c:
            steps.append(("sub_const", c))
        return [ctx.l_add(v, ctx.l_neg(c)) for v in tab]

    t = shift_zero(t)

    def total(tab: list[int]) -> int:
        acc = 0
        for v in tab:
            acc = ctx.l_add(acc, v)
        return acc

    if total(t) == 0:
        a = next(u for u in range(ctx.u_size) if t[u] != 0)
        steps.append(("translate", a))
        base = t[a]
        t = [ctx.l_add(t[ctx.u_add(u, a)], ctx.l_neg(base)) for u in range(ctx.u_size)]
        if total(t) == 0:
            raise NormalizationFailed("translation failed to break the zero sum")

    chosen: Optional[Hyperplane] = None
    averaged: Optional[list[int]] = None
    for h in hyperplanes(ctx.p, ctx.k):
        avg = []
        for u in range(ctx.u_size):
            acc = 0
            for w in h.members():
                acc = ctx.l_add(acc, t[ctx.u_add(u, w)])
            avg.append(acc)
        if any(v != avg[0] for v in avg):
            chosen = h
            averaged = avg
            break
    if chosen is None:
        raise NormalizationFailed("no hyperplane average is nonconstant")
    steps.append(("hyperplane_sum", chosen.normal))
    t = averaged
    t = shift_zero(t)
    if total(t) == 0:
        raise NormalizationFailed("hyperplane average lost the nonzero sum")

    transversal = min(u for u in range(ctx.u_size) if not chosen.contains(u))
    steps.append(("coset_collapse", transversal))
    collapsed = []
    for u in range(ctx.u_size):
        acc = 0
        for i in range(ctx.p):
            acc = ctx.l_add(acc, t[ctx.u_scalar(i, u)])
        collapsed.append(acc)
    t = collapsed

    values = {v for u, v in enumerate(t) if not chosen.contains(u)}
    if any(t[u] != 0 for u in chosen.members()) or len(values) != 1 or 0 in values:
        raise NormalizationFailed("collapsed map is not a two-valued hyperplane indicator")
    value = values.pop()
    return ConjunctionFamily(ctx, chosen, value, tuple(t), transversal, tuple(steps))


# ---------------------------------------------------------------------------
# Symbolic expressions and the conjunction recursion
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Expression:
    """A Z_q-linear combination of atoms t1(sum_i b_i*u_i + c)."""

    family: ConjunctionFamily
    arity: int
    terms: tuple[tuple[tuple[tuple[int, ...], int], int], ...]  # ((b, c), coeff)

    @property
    def atom_count(self) -> int:
        return len(self.terms)

    def to_json(self) -> dict:
        return {
            "lin": [
                [coeff, {"t1_arg": {"b": list(b), "c": c}}] for (b, c), coeff in self.terms
            ]
        }

    def table(self, cap: int = DEFAULT_TABLE_CAP) -> tuple[int, ...]:
        ctx = self.family.ctx
        total = ctx.u_size**self.arity
        if total > cap:
            raise TableOverflow(f"{total} entries exceed cap {cap}", cap=cap)
        t1 = np.asarray(self.family.t1, dtype=np.int64)
        add_u = np.asarray(
            [[ctx.u_add(a, b) for b in range(ctx.u_size)] for a in range(ctx.u_size)],
            dtype=np.int64,
        )
        add_l = np.asarray(
            [[ctx.l_add(a, b) for b in range(ctx.l_size)] for a in range(ctx.l_size)],
            dtype=np.int64,
        )
        scal_u = np.asarray(
            [[ctx.u_scalar(c, a) for a in range(ctx.u_size)] for c in range(ctx.p)],
            dtype=np.int64,
        )
        digits = []
        idx = np.arange(total, dtype=np.int64)
        for j in range(self.arity):
            digits.append((idx // (ctx.u_size ** (self.arity - 1 - j))) % ctx.u_size)
        out = np.zeros(total, dtype=np.int64)
        for (b, c), coeff in self.terms:
            arg = np.full(total, c, dtype=np.int64)
            for j in range(self.arity):
                if b[j] % ctx.p:
                    arg = add_u[arg, scal_u[b[j] % ctx.p][digits[j]]]
            vals = t1[arg]
            for _ in range(coeff % ctx.q):
                out = add_l[out, vals]
        return tuple(int(v) for v in out)


def t1_expression(fam: ConjunctionFamily) -> Expression:
    return Expression(fam, 1, ((((1,), 0), 1),))


def _extend_in(fam: ConjunctionFamily, terms: dict, cur: int) -> dict:
    """One recursion step for the all-on-hyperplane indicator."""
    ctx = fam.ctx
    p, q, a = ctx.p, ctx.q, fam.transversal
    p_inv = ctx.p_inv
    nxt: dict[tuple[tuple[int, ...], int], int] = {}

    def bump(key, delta):
        val = (nxt.get(key, 0) + delta) % q
        if val:
            nxt[key] = val
        else:
            nxt.pop(key, None)

    for (b, c), coeff in terms.items():
        c2 = (coeff * p_inv) % q
        if not c2:
            continue
        blast = b[cur - 1]
        for i in range(p):
            b2 = b[: cur - 1] + (blast, (-blast * i) % p)
            bump((b2, c), c2)
        for i in range(1, p):
            b2 = b[: cur - 1] + (0, blast)
            c_new = ctx.u_add(c, ctx.u_scalar((-blast * i) % p, a))
            bump((b2, c_new), -c2)
    return nxt


def _extend_off(fam: ConjunctionFamily, terms: dict, cur: int) -> dict:
    """One recursion step for the all-off-hyperplane indicator.

    With f the current indicator, the extension is
    -p^(-1) * sum_i f(..., u - i*v)  +  f(..., u)  +  (1 - p^(-1)) * f(..., v).
    """
    ctx = fam.ctx
    p, q, a = ctx.p, ctx.q, fam.transversal
    p_inv = ctx.p_inv
    nxt: dict[tuple[tuple[int, ...], int], int] = {}

    def bump(key, delta):
        val = (nxt.get(key, 0) + delta) % q
        if val:
            nxt[key] = val
        else:
            nxt.pop(key, None)

    for (b, c), coeff in terms.items():
        blast = b[cur - 1]
        for i in range(p):
            b2 = b[: cur - 1] + (blast, (-blast * i) % p)
            bump((b2, c), (-coeff * p_inv) % q)
        bump((b[: cur - 1] + (blast, 0), c), coeff)
        bump((b[: cur - 1] + (0, blast), c), (coeff * (1 - p_inv)) % q)
    return nxt


def build_tn(fam: ConjunctionFamily, n: int, cap: int = DEFAULT_TABLE_CAP):
    """The n-ary on-hyperplane conjunction: expression plus (when small enough) its table.

    The base case is l - t1(u), which is the unary on-hyperplane indicator; the
    recursion extends one variable at a time, substituting every coset multiple
    of the new variable into the last slot with a transversal-shift correction.
    Like atoms are collected, which keeps the atom count at p^(n+1) or below
    for one-dimensional U.
    """
    if n < 1:
        raise ValueError("arity must be at least 1")
    ctx = fam.ctx
    q = ctx.q
    terms: dict[tuple[tuple[int, ...], int], int] = {
        ((1,), 0): (-1) % q,
        ((0,), fam.transversal): 1,
    }
    for cur in range(1, n):
        terms = _extend_in(fam, terms, cur)
    expr = Expression(fam, n, tuple(sorted(terms.items())))
    table = expr.table(cap) if ctx.u_size**n <= cap else None
    return expr, table


def build_off_tn(fam: ConjunctionFamily, n: int, cap: int = DEFAULT_TABLE_CAP):
    """The complementary n-ary indicator: value iff every argument is off the hyperplane."""
    if n < 1:
        raise ValueError("arity must be at least 1")
    ctx = fam.ctx
    terms: dict[tuple[tuple[int, ...], int], int] = {((1,), 0): 1}
    for cur in range(1, n):
        terms = _extend_off(fam, terms, cur)
    expr = Expression(fam, n, tuple(sorted(terms.items())))
    table = expr.table(cap) if ctx.u_size**n <= cap else None
    return expr, table


def conjunction_table(fam: ConjunctionFamily, n: int, off: bool = False) -> tuple[int, ...]:
    """Independent oracle for either indicator polarity."""
    ctx = fam.ctx
    out = []
    for combo in itertools.product(range(ctx.u_size), repeat=n):
        if off:
            hit = all(not fam.hyperplane.contains(u) for u in combo)
        else:
            hit = all(fam.hyperplane.contains(u) for u in combo)
        out.append(fam.value if hit else 0)
    return tuple(out)


def interpolate(
    fam: ConjunctionFamily, f: Sequence[int], n: int, cap: int = DEFAULT_TABLE_CAP
) -> Expression:
    """An expression agreeing with f on coset tuples.

    `f` is a table over (U/H)^n, indexed by phase tuples in {0..p-1}^n, with
    values in the cyclic subgroup generated by the family's value.
    """
    ctx = fam.ctx
    p, q = ctx.p, ctx.q
    if len(f) != p**n:
        raise ValueError(f"coset table must have {p**n} entries")
    mult = {0: 0}
    acc = 0
    for c in range(1, q):
        acc = ctx.l_add(acc, fam.value)
        mult[acc] = c
    base, _ = build_tn(fam, n, cap=0)
    terms: dict[tuple[tuple[int, ...], int], int] = {}
    for pos, val in enumerate(f):
        if val not in mult:
            raise ValueOutsideCyclicSubgroup(
                f"value {val} is outside the cyclic subgroup", value=int(val)
            )
        c = mult[val]
        if not c:
            continue
        phases = []
        rem = pos
        for _ in range(n):
            phases.append(rem % p)
            rem //= p
        phases = list(reversed(phases))
        reps = [fam.coset_rep(ph) for ph in phases]
        for (b, cc), coeff in base.terms:
            shift = cc
            for j in range(n):
                if b[j] % p:
                    shift = ctx.u_add(shift, ctx.u_scalar((-b[j]) % p, reps[j]))
            key = (b, shift)
            val2 = (terms.get(key, 0) + c * coeff) % q
            if val2:
                terms[key] = val2
            else:
                terms.pop(key, None)
    return Expression(fam, n, tuple(sorted(terms.items())))
