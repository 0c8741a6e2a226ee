"""Wreath-product structure of nilpotent Maltsev algebras.

A presentation splits the algebra along an ascending central series into
affine levels L_1, ..., L_n (bottom first) and a top quotient U.  Transported
through the witnessing bijection, every basic operation acts on the U-part as
it does in U, and on each L_i-part as an affine map of the L_i-coordinates
plus a twist that only reads the coordinates strictly above level i.

Nothing here trusts the construction: every presentation is verified
exhaustively against the defining identities before it is returned, and the
rebuild path reproduces the original operation tables bit-exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .algebra import (
    Circuit,
    FiniteAlgebra,
    OperationTable,
    compose,
    eval_circuit,
    eval_circuit_batch,
    identity_circuit,
    input_grid,
)
from .commutator import higher_commutator, _pool, _witnesses
from .congruence import Congruence, is_congruence, quotient
from .errors import (
    NotCentral,
    NotCentralSeries,
    NotSupernilpotent,
    SectionFailure,
    SignatureMismatch,
)
from .loops import LoopOps, loop_context


# ---------------------------------------------------------------------------
# Affine levels
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AffineLevel:
    """An abelian table group together with the affine action of each basic operation.

    Level elements are indices 0..size-1 with 0 the neutral element; `members`
    records which elements of the ambient algebra the indices came from (the
    zero block of the congruence that cut this level out).
    """

    size: int
    add: tuple[int, ...]
    neg: tuple[int, ...]
    exponent: int
    scalars: tuple[tuple[int, ...], ...]
    actions: dict[str, tuple[tuple[tuple[int, ...], ...], int]]
    members: tuple[int, ...] = ()

    def add_of(self, x: int, y: int) -> int:
        return self.add[x * self.size + y]

    def sub_of(self, x: int, y: int) -> int:
        return self.add[x * self.size + self.neg[y]]

    def scalar_of(self, q: int, x: int) -> int:
        acc = 0
        for _ in range(q % self.exponent if self.exponent else q):
            acc = self.add_of(acc, x)
        return acc

    def action(self, name: str, args: Sequence[int]) -> int:
        coeffs, c = self.actions[name]
        acc = c
        for table, x in zip(coeffs, args):
            acc = self.add_of(acc, table[x])
        return acc


def _group_data(size: int, add: Sequence[int]) -> tuple[tuple[int, ...], int]:
    """Negation table and exponent; raises SectionFailure if not an abelian group."""
    add = tuple(add)
    for x in range(size):
        if add[x * size] != x or add[x] != x:
            raise SectionFailure("level addition has no neutral element 0")
    for x in range(size):
        for y in range(size):
            if add[x * size + y] != add[y * size + x]:
                raise SectionFailure("level addition is not commutative")
            for z in range(size):
                if add[add[x * size + y] * size + z] != add[x * size + add[y * size + z]]:
                    raise SectionFailure("level addition is not associative")
    neg = [-1] * size
    for x in range(size):
        for y in range(size):
            if add[x * size + y] == 0:
                neg[x] = y
    if -1 in neg:
        raise SectionFailure("level addition has no inverses")
    exponent = 1
    for x in range(1, size):
        acc = x
        t = 1
        while acc != 0:
            acc = add[acc * size + x]
            t += 1
        exponent = math.lcm(exponent, t)
    return tuple(neg), exponent


def level_from_group(
    size: int,
    add: Sequence[int],
    actions: dict[str, tuple[Sequence[Sequence[int]], int]],
    members: Sequence[int] = (),
    scalars: Sequence[Sequence[int]] = (),
) -> AffineLevel:
    neg, exponent = _group_data(size, add)
    acts = {
        name: (tuple(tuple(t) for t in coeffs), int(c)) for name, (coeffs, c) in actions.items()
    }
    scal = tuple(tuple(t) for t in scalars) if scalars else _scalar_closure(size, tuple(add), acts)
    return AffineLevel(size, tuple(add), neg, exponent, scal, acts, tuple(members))


def _scalar_closure(size, add, actions) -> tuple[tuple[int, ...], ...]:
    idmap = tuple(range(size))
    zero = (0,) * size
    maps = {idmap, zero}
    for coeffs, _ in actions.values():
        for t in coeffs:
            maps.add(tuple(t))
    work = list(maps)
    while work:
        f = work.pop()
        for g in list(maps):
            comp = tuple(f[g[x]] for x in range(size))
            summ = tuple(add[f[x] * size + g[x]] for x in range(size))
            for h in (comp, summ):
                if h not in maps:
                    maps.add(h)
                    work.append(h)
    return tuple(sorted(maps))


# ---------------------------------------------------------------------------
# Presentations
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WreathPresentation:
    algebra: FiniteAlgebra
    series: tuple[Congruence, ...]  # ascending, ending at the kernel of the top projection
    levels: tuple[AffineLevel, ...]  # bottom-up: levels[0] is the innermost L_1
    top: FiniteAlgebra
    twists: tuple[dict[str, tuple[int, ...]], ...]  # per level: op -> flat table over higher coords
    iso: tuple[int, ...]  # element -> composite mixed-radix index (l_1 most significant)
    zero: int

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(lv.size for lv in self.levels) + (self.top.size,)

    def coords(self, a: int) -> tuple[int, ...]:
        idx = self.iso[a]
        out = []
        for w in reversed(self.sizes):
            out.append(idx % w)
            idx //= w
        return tuple(reversed(out))

    def from_coords(self, coords: Sequence[int]) -> int:
        idx = 0
        for c, w in zip(coords, self.sizes):
            idx = idx * w + c
        return self.iso.index(idx)

    def higher_index(self, a: int, i: int) -> int:
        """Composite index of the coordinates strictly above level i (0-based)."""
        coords = self.coords(a)
        idx = 0
        for c, w in zip(coords[i + 1 :], self.sizes[i + 1 :]):
            idx = idx * w + c
        return idx

    def higher_size(self, i: int) -> int:
        out = 1
        for w in self.sizes[i + 1 :]:
            out *= w
        return out

    def rebuild(self) -> FiniteAlgebra:
        """Reassemble the algebra from top down; tables indexed by composite indices."""
        current = self.top
        for i in range(len(self.levels) - 1, -1, -1):
            current = build_wreath(self.levels[i], current, self.twists[i])
        return current

    def verify(self) -> None:
        rebuilt = self.rebuild()
        n = self.algebra.size
        if rebuilt.size != n or sorted(self.iso) != list(range(n)):
            raise SectionFailure("presentation bijection is not a bijection")
        if set(rebuilt.ops) != set(self.algebra.ops):
            raise SectionFailure("rebuilt signature mismatch")
        for name, op in self.algebra.ops.items():
            r = op.arity
            rtab = rebuilt.ops[name].table
            for combo in itertools.product(range(n), repeat=r):
                idx = 0
                for x in combo:
                    idx = idx * n + self.iso[x]
                if self.iso[self.algebra.apply(name, *combo)] != rtab[idx]:
                    raise SectionFailure(
                        f"rebuilt operation {name!r} disagrees with the original", op=name
                    )

    def to_json(self) -> dict:
        return {
            "sizes": list(self.sizes),
            "zero": self.zero,
            "iso": list(self.iso),
            "series": [list(c.blocks) for c in self.series],
            "levels": [
                {
                    "size": lv.size,
                    "add": list(lv.add),
                    "exponent": lv.exponent,
                    "members": list(lv.members),
                    "actions": {
                        name: {"coeffs": [list(t) for t in coeffs], "const": c}
                        for name, (coeffs, c) in lv.actions.items()
                    },
                }
                for lv in self.levels
            ],
            "twists": [
                {name: list(tab) for name, tab in level.items()} for level in self.twists
            ],
        }


def build_wreath(
    level: AffineLevel, top: FiniteAlgebra, twists: dict[str, Sequence[int]]
) -> FiniteAlgebra:
    """The algebra on level x top with twisted operations; element = l * |top| + u."""
    if set(twists) != set(top.ops) or set(level.actions) != set(top.ops):
        raise SignatureMismatch(
            "twists, level actions, and top operations must share one signature"
        )
    lsz, usz = level.size, top.size
    size = lsz * usz
    ops: dict[str, OperationTable] = {}
    for name, op in top.ops.items():
        r = op.arity
        coeffs, cconst = level.actions[name]
        if len(coeffs) != r:
            raise SignatureMismatch(f"level action for {name!r} has wrong arity", op=name)
        twist = tuple(twists[name])
        if len(twist) != usz**r:
            raise SignatureMismatch(f"twist table for {name!r} has wrong length", op=name)
        table = []
        for combo in itertools.product(range(size), repeat=r):
            ls = [x // usz for x in combo]
            us = [x % usz for x in combo]
            uidx = 0
            for u in us:
                uidx = uidx * usz + u
            lval = level.action(name, ls)
            lval = level.add_of(lval, twist[uidx])
            table.append(lval * usz + op.table[uidx])
        ops[name] = OperationTable(r, tuple(table))
    return FiniteAlgebra(size, ops)


# ---------------------------------------------------------------------------
# Decomposition
# ---------------------------------------------------------------------------


def decompose_central(
    alg: FiniteAlgebra,
    zeta: Congruence,
    m: Optional[Circuit] = None,
    zero: int = 0,
    check_central: bool = True,
) -> WreathPresentation:
    """Split the algebra along one central congruence into an affine level and a quotient."""
    if m is None:
        from .algebra import find_maltsev

        m = find_maltsev(alg)
        if m is None:
            raise NotCentral("no Maltsev circuit available")
    loop = loop_context(alg, m, zero)
    if check_central:
        comm = higher_commutator(alg, (Congruence.one(alg.size), zeta), m=m)
        if not comm.is_zero():
            raise NotCentral("congruence does not centralize the full relation")
    top, proj = quotient(alg, zeta)
    block = [x for x in range(alg.size) if zeta.related(x, zero)]
    members = tuple([zero] + [x for x in block if x != zero])
    l_index = {x: i for i, x in enumerate(members)}
    lsz = len(members)

    add = []
    for x in members:
        for y in members:
            v = loop.add_of(x, y)
            if v not in l_index:
                raise SectionFailure("zero block is not closed under the loop product")
            add.append(l_index[v])

    # Section: prefer representatives in the image of the stabilized
    # exponent-scalar map e*x (e = exponent of the zero block).  When the level
    # is coprime to the quotient this transversal is twist-free, which keeps
    # direct products direct; otherwise fall back to minimal representatives
    # (carries within one exponent class are fine).
    _, level_exp = _group_data(lsz, add)
    stable = _stable_scalar_map(loop, level_exp)
    section = {}
    for u in range(top.size):
        reps = [x for x in range(alg.size) if proj[x] == u]
        if proj[zero] == u:
            section[u] = zero
            continue
        clean = sorted(y for y in (stable[x] for x in reps) if proj[y] == u) if stable is not None else []
        section[u] = clean[0] if clean else min(reps)

    def delta(a: int) -> int:
        v = eval_circuit(alg, m, (a, section[proj[a]], zero))
        if v not in l_index:
            raise SectionFailure("section difference left the zero block")
        return l_index[v]

    iso = tuple(delta(a) * top.size + proj[a] for a in range(alg.size))
    if len(set(iso)) != alg.size:
        raise SectionFailure("level/quotient coordinates do not separate elements")

    twists: dict[str, tuple[int, ...]] = {}
    actions: dict[str, tuple[tuple[tuple[int, ...], ...], int]] = {}
    for name, op in alg.ops.items():
        r = op.arity
        twist = []
        for combo in itertools.product(range(top.size), repeat=r):
            twist.append(delta(alg.apply(name, *(section[u] for u in combo))))
        twist = tuple(twist)
        u0 = proj[zero]
        base = twist[sum(u0 * top.size**i for i in range(r))] if r else twist[0]
        fl = []
        for combo in itertools.product(range(lsz), repeat=r):
            v = delta(alg.apply(name, *(members[i] for i in combo)))
            fl.append(_lsub(add, lsz, v, base))
        const = fl[0]
        coeffs = []
        for slot in range(r):
            col = []
            for x in range(lsz):
                combo = [0] * r
                combo[slot] = x
                idx = 0
                for c in combo:
                    idx = idx * lsz + c
                col.append(_lsub(add, lsz, fl[idx], const))
            coeffs.append(tuple(col))
        for combo_idx, combo in enumerate(itertools.product(range(lsz), repeat=r)):
            acc = const
            for slot in range(r):
                acc = add[acc * lsz + coeffs[slot][combo[slot]]]
            if acc != fl[combo_idx]:
                raise SectionFailure(f"level action of {name!r} is not affine", op=name)
        for slot in range(r):
            t = coeffs[slot]
            for x in range(lsz):
                for y in range(lsz):
                    if t[add[x * lsz + y]] != add[t[x] * lsz + t[y]]:
                        raise SectionFailure(
                            f"slot coefficient of {name!r} is not additive", op=name
                        )
        twists[name] = twist
        actions[name] = (tuple(coeffs), const)

    level = level_from_group(lsz, add, actions, members=members)
    pres = WreathPresentation(
        algebra=alg,
        series=(zeta,),
        levels=(level,),
        top=top,
        twists=(twists,),
        iso=iso,
        zero=zero,
    )
    pres.verify()
    return pres


def _lsub(add: Sequence[int], size: int, x: int, y: int) -> int:
    for d in range(size):
        if add[d * size + y] == x:
            return d
    raise SectionFailure("level subtraction failed")


def _stable_scalar_map(loop: LoopOps, e: int):
    """An idempotent power of x -> e*x, or None if none shows up quickly."""
    if e <= 1:
        return None
    s = loop.alg.size
    base = np.asarray([loop.scalar_of(e, x) for x in range(s)], dtype=np.int64)
    t = base
    for _ in range(2 * s):
        if np.array_equal(t[t], t):
            return t
        t = base[t]
    return None


def decompose_series(
    alg: FiniteAlgebra,
    series: Sequence[Congruence],
    m: Optional[Circuit] = None,
    zero: int = 0,
    check_central: bool = True,
) -> WreathPresentation:
    """Iterated central decomposition along an ascending series.

    `series` lists the strictly ascending congruences a_1 < ... < a_n (omitting
    the zero congruence); each a_i must centralize the full relation modulo
    a_{i-1}.  The result stacks one affine level per step over the quotient by
    a_n.
    """
    series = tuple(series)
    if not series:
        raise NotCentralSeries("need at least one congruence")
    one = Congruence.one(alg.size)
    prev = Congruence.zero(alg.size)
    for s in series:
        if not prev.leq(s) or prev == s:
            raise NotCentralSeries("series is not strictly ascending")
        if check_central:
            comm = higher_commutator(alg, (one, s), m=m)
            if not comm.leq(prev):
                raise NotCentralSeries("commutator with the full relation escapes the series")
        prev = s

    levels: list[AffineLevel] = []
    level_twists: list[dict[str, tuple[int, ...]]] = []
    current = alg
    cur_m = m
    cur_zero = zero
    cur_series = list(series)
    # iso tracking: coordinates of each original element, accumulated level by level
    coords: list[list[int]] = [[] for _ in range(alg.size)]
    to_current = list(range(alg.size))

    for step in range(len(series)):
        zeta = cur_series[0]
        pres = decompose_central(current, zeta, m=cur_m, zero=cur_zero, check_central=False)
        levels.append(pres.levels[0])
        level_twists.append(dict(pres.twists[0]))
        for a in range(alg.size):
            c = pres.iso[to_current[a]]
            coords[a].append(c // pres.top.size)
        proj = {x: pres.iso[x] % pres.top.size for x in range(current.size)}
        to_current = [proj[to_current[a]] for a in range(alg.size)]
        cur_zero = proj[pres.zero]
        nxt = []
        for s in cur_series[1:]:
            blocks = [0] * pres.top.size
            seen = {}
            for x in range(current.size):
                seen.setdefault(proj[x], s.block_of(x))
            nxt.append(Congruence(tuple(seen[u] for u in range(pres.top.size))))
        cur_series = nxt
        current = pres.top

    top = current
    sizes = [lv.size for lv in levels] + [top.size]
    iso = []
    for a in range(alg.size):
        cs = coords[a] + [to_current[a]]
        idx = 0
        for c, w in zip(cs, sizes):
            idx = idx * w + c
        iso.append(idx)
    inv = [0] * alg.size
    for a, idx in enumerate(iso):
        inv[idx] = a

    # Twists over composite higher coordinates, read off representatives whose
    # coordinates at and below the level are all zero: those are exactly the
    # elements whose composite index equals the higher index itself.
    final_twists: list[dict[str, tuple[int, ...]]] = []
    for i in range(len(levels)):
        level = levels[i]
        higher = 1
        for w in sizes[i + 1 :]:
            higher *= w
        shift = 1
        for w in sizes[i + 1 :]:
            shift *= w
        fixed: dict[str, tuple[int, ...]] = {}
        for name, op in alg.ops.items():
            r = op.arity
            const = level.actions[name][1]
            out = []
            for combo in itertools.product(range(higher), repeat=r):
                val = alg.apply(name, *(inv[h] for h in combo))
                l_coord = (iso[val] // shift) % level.size
                out.append(level.sub_of(l_coord, const))
            fixed[name] = tuple(out)
        final_twists.append(fixed)

    pres = WreathPresentation(
        algebra=alg,
        series=series,
        levels=tuple(levels),
        top=top,
        twists=tuple(final_twists),
        iso=tuple(iso),
        zero=zero,
    )
    pres.verify()
    return pres


# ---------------------------------------------------------------------------
# Elementary refinement
# ---------------------------------------------------------------------------


def _smallest_prime(n: int) -> int:
    for p in range(2, n + 1):
        if n % p == 0:
            return p
    raise ValueError(f"no prime factor of {n}")


def elementary_refinement(
    pres: WreathPresentation, m: Optional[Circuit] = None
) -> WreathPresentation:
    """Refine a presentation until every level has prime exponent.

    A level of composite exponent splits along the subgroup p*L for the
    smallest prime p dividing the exponent, which inserts one congruence into
    the series; the algebra is then re-decomposed along the refined series, so
    all invariants are re-verified.  Split factors come out with the larger
    prime below, which makes the result canonical.
    """
    alg = pres.algebra
    series = list(pres.series)
    changed = True
    current = pres
    while changed:
        changed = False
        for i, level in enumerate(current.levels):
            if level.exponent > 1 and not _is_prime(level.exponent):
                p = _smallest_prime(level.exponent)
                sub = sorted({level.scalar_of(p, x) for x in range(level.size)})
                shift = current.higher_size(i)
                keys = []
                for a in range(alg.size):
                    li = (current.iso[a] // shift) % level.size
                    hi = current.higher_index(a, i)
                    coset = min(level.add_of(li, s2) for s2 in sub)
                    keys.append((hi, coset))
                beta = Congruence(tuple(_pack_blocks(keys)))
                if not is_congruence(alg, beta):
                    raise SectionFailure("level subdivision did not yield a congruence")
                series = series[:i] + [beta] + series[i:]
                current = decompose_series(
                    alg, series, m=m, zero=pres.zero, check_central=False
                )
                changed = True
                break
    return current


def _is_prime(n: int) -> bool:
    return n > 1 and all(n % d for d in range(2, int(n**0.5) + 1))


def _pack_blocks(pairs) -> list[int]:
    ids: dict[tuple, int] = {}
    out = []
    for key in pairs:
        if key not in ids:
            ids[key] = len(ids)
        out.append(ids[key])
    return out


# ---------------------------------------------------------------------------
# Loop arithmetic on presentations
# ---------------------------------------------------------------------------


def loop_ops(alg: FiniteAlgebra, m: Circuit, zero: int = 0) -> tuple[Circuit, Circuit, Circuit]:
    """(add, ldiv, rdiv) circuits for the loop x + y = m(x, 0, y), all verified."""
    loop = loop_context(alg, m, zero)
    return loop.add, loop.ldiv, loop.rdiv


def u_power(alg: FiniteAlgebra, loop: LoopOps, q: int, l: int) -> Circuit:
    """Circuit for the l-fold iterate of x -> q*x under the left-associated loop sum."""
    uq = loop.scalar_circuit(q)
    circ = uq
    for _ in range(l - 1):
        circ = compose(uq, [circ])
    return circ


def u_power_table(alg: FiniteAlgebra, loop: LoopOps, q: int, l: int) -> np.ndarray:
    circ = u_power(alg, loop, q, l)
    return eval_circuit_batch(alg, circ, input_grid(alg.size, 1))


def r_prime(
    alg: FiniteAlgebra,
    pres: WreathPresentation,
    p: int,
    loop: Optional[LoopOps] = None,
    m: Optional[Circuit] = None,
) -> Circuit:
    """A unary circuit fixing the exponent-p coordinates of the zero block of the
    presented congruence and sending every other level coordinate to zero."""
    for lv in pres.levels:
        if not _is_prime(lv.exponent):
            raise NotSupernilpotent("presentation is not elementary", exponent=lv.exponent)
    if loop is None:
        if m is None:
            raise NotSupernilpotent("need a Maltsev circuit or loop context")
        loop = loop_context(alg, m, pres.zero)
    alpha = pres.series[-1] if pres.series else Congruence.one(alg.size)
    block = [x for x in range(alg.size) if alpha.related(x, pres.zero)]
    primes = sorted({lv.exponent for lv in pres.levels})
    k = len(pres.levels)
    circ = identity_circuit(0)
    for q in primes:
        if q == p:
            continue
        circ = compose(u_power(alg, loop, q, k), [circ])
    # raise to a power that restricts to the identity on the p-part
    table = eval_circuit_batch(alg, circ, input_grid(alg.size, 1))
    kp = [
        x
        for x in block
        if all(
            (pres.iso[x] // pres.higher_size(i)) % pres.levels[i].size == 0
            for i in range(k)
            if pres.levels[i].exponent != p
        )
    ]
    acc = circ
    acc_table = table
    for _ in range(alg.size * alg.size):
        if all(acc_table[x] == x for x in kp):
            break
        acc = compose(circ, [acc])
        acc_table = table[acc_table]
    else:
        raise NotSupernilpotent("no iterate restricts to the identity on the p-part")
    # verify the projection property on the block
    for x in block:
        y = int(acc_table[x])
        for i in range(k):
            shift = pres.higher_size(i)
            want = (pres.iso[x] // shift) % pres.levels[i].size if pres.levels[i].exponent == p else 0
            if (pres.iso[y] // shift) % pres.levels[i].size != want:
                raise NotSupernilpotent(
                    "projection property failed on the zero block", element=x, level=i
                )
    return acc


# ---------------------------------------------------------------------------
# Dependence structure
# ---------------------------------------------------------------------------


def dependence_matrix(
    alg: FiniteAlgebra,
    pres: WreathPresentation,
    cap: int = 3072,
    m: Optional[Circuit] = None,
) -> list[list[bool]]:
    """D[i][j]: some enumerated binary polynomial's level-i coordinate reacts to a
    perturbation of the level-j coordinate of one argument."""
    n = len(pres.levels)
    s = alg.size
    pool = _pool(alg, 2, cap)
    ws = _witnesses(alg, 2, cap, m)
    polys = pool.tables
    if ws.tables.shape[0]:
        polys = np.concatenate([polys, ws.tables])
    inv = [0] * s
    for a, idx in enumerate(pres.iso):
        inv[idx] = a

    # translation maps: add d to the level-j coordinate, keep everything else
    translations: list[list[np.ndarray]] = []
    for j in range(n):
        shift = pres.higher_size(j)
        lsz = pres.levels[j].size
        maps = []
        for d in range(1, lsz):
            t = np.empty(s, dtype=np.int64)
            for a in range(s):
                idx = pres.iso[a]
                lj = (idx // shift) % lsz
                idx2 = idx + (pres.levels[j].add_of(lj, d) - lj) * shift
                t[a] = inv[idx2]
            maps.append(t)
        translations.append(maps)

    level_coord = []
    for i in range(n):
        shift = pres.higher_size(i)
        lsz = pres.levels[i].size
        level_coord.append(np.asarray([(pres.iso[a] // shift) % lsz for a in range(s)], dtype=np.int64))

    xs, ys = input_grid(s, 2)
    D = [[False] * n for _ in range(n)]
    for j in range(n):
        for t in translations[j]:
            for slot_idx in ((t[xs] * s + ys), (xs * s + t[ys])):
                base = polys
                moved = polys[:, slot_idx]
                for i in range(n):
                    if D[i][j]:
                        continue
                    if not np.array_equal(level_coord[i][moved], level_coord[i][base]):
                        D[i][j] = True
    return D


def dependence_respects_supernilpotence(pres: WreathPresentation, D: list[list[bool]]) -> bool:
    """Cor.-style criterion: every dependence points upward within one exponent class."""
    n = len(pres.levels)
    for i in range(n):
        for j in range(n):
            if D[i][j] and not (i <= j and pres.levels[i].exponent == pres.levels[j].exponent):
                return False
    return True


def kernel_projection_is_homomorphism(
    alg: FiniteAlgebra, pres: WreathPresentation, drop: Sequence[int]
) -> bool:
    """Check that forgetting the given levels induces a well-defined algebra."""
    drop = set(drop)
    s = alg.size

    def proj(a: int) -> tuple:
        cs = pres.coords(a)
        return tuple(c for i, c in enumerate(cs) if i not in drop)

    for name, op in alg.ops.items():
        r = op.arity
        images: dict[tuple, tuple] = {}
        for combo in itertools.product(range(s), repeat=r):
            key = tuple(proj(x) for x in combo)
            val = proj(alg.apply(name, *combo))
            if key in images and images[key] != val:
                return False
            images[key] = val
    return True
