"""Graph-coloring and 3-SAT instances of circuit satisfiability over a fixed algebra.

The pipeline, for an algebra of Fitting length k >= 2:

1. the ascending chain a_i = [1, a_{i+1}] pins down a wreath presentation with
   the top-adjacent level M playing the color group;
2. a surjection gadget h (built level by level from absorbing witnesses and
   the loop sum) exposes M through the bottom level;
3. normalizing the induced unary map yields a hyperplane indicator, and the
   coset recursion grows it into n-ary all-off-hyperplane indicators t_n whose
   circuits have geometric size growth;
4. a graph's edges become loop-quotients of per-vertex gadget copies fed into
   t_|E|; the instance is satisfiable exactly when the graph is p-colorable,
   where p is the exponent of M.

Everything constructed is verified exhaustively at desk scale before use.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .algebra import (
    Circuit,
    CircuitBuilder,
    FiniteAlgebra,
    compact,
    compose,
    constant_circuit,
    eval_circuit,
    eval_circuit_batch,
    identity_circuit,
    input_grid,
)
from .clonoid import (
    ClonoidContext,
    ConjunctionFamily,
    Expression,
    interpolate,
    normalize_unary,
)
from .commutator import (
    _witnesses,
    fitting,
    higher_commutator,
)
from .congruence import Congruence, congruence_lattice, quotient
from .errors import (
    ConstructionFailed,
    NotMaltsev,
    PresentationMismatch,
    SearchSpaceOverflow,
    UnsupportedPrime,
)
from .loops import LoopOps, loop_context
from .wreath import WreathPresentation, decompose_series, elementary_refinement

DEFAULT_ASSIGNMENT_CAP = 2_000_000
_ASSIGN_CHUNK = 1 << 14


# ---------------------------------------------------------------------------
# Instances and brute-force oracles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Graph:
    num_vertices: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        for (u, v) in self.edges:
            if not (0 <= u < self.num_vertices and 0 <= v < self.num_vertices):
                raise ValueError(f"edge ({u},{v}) out of range")

    def is_colorable(self, colors: int) -> bool:
        """Brute-force coloring oracle; a loop edge makes the graph uncolorable."""
        for assign in itertools.product(range(colors), repeat=self.num_vertices):
            if all(assign[u] != assign[v] for (u, v) in self.edges):
                return True
        return False


@dataclass(frozen=True)
class CsatInstance:
    algebra: FiniteAlgebra
    lhs: Circuit
    rhs: Circuit
    num_vars: int
    meta: dict = field(default_factory=dict, compare=False)

    def gate_counts(self) -> tuple[int, int]:
        return (self.lhs.gate_count(), self.rhs.gate_count())


@dataclass(frozen=True)
class SatVerdict:
    satisfiable: bool
    witness: Optional[tuple[int, ...]] = None

    def __bool__(self):
        return self.satisfiable


@dataclass(frozen=True)
class EqvVerdict:
    equivalent: bool
    counterexample: Optional[tuple[int, ...]] = None

    def __bool__(self):
        return self.equivalent


def _scan(inst: CsatInstance, want_equal: bool, cap: int):
    s = inst.algebra.size
    n = inst.num_vars
    total = s**n
    if total > cap:
        raise SearchSpaceOverflow(
            f"{total} assignments exceed cap {cap}", total=total, cap=cap
        )
    for c0 in range(0, max(total, 1), _ASSIGN_CHUNK):
        hi = min(total, c0 + _ASSIGN_CHUNK) if total else 1
        idx = np.arange(c0, hi, dtype=np.int64)
        cols = np.empty((n, len(idx)), dtype=np.int64)
        for j in range(n):
            cols[j] = (idx // (s ** (n - 1 - j))) % s
        lv = eval_circuit_batch(inst.algebra, inst.lhs, cols)
        rv = eval_circuit_batch(inst.algebra, inst.rhs, cols)
        mask = (lv == rv) if want_equal else (lv != rv)
        if mask.any():
            w = int(np.nonzero(mask)[0][0])
            return tuple(int(cols[j][w]) for j in range(n))
        if not total:
            break
    return None


def brute_csat(inst: CsatInstance, cap: int = DEFAULT_ASSIGNMENT_CAP) -> SatVerdict:
    """Exhaustive satisfiability scan; returns the lexicographically least witness."""
    hit = _scan(inst, want_equal=True, cap=cap)
    return SatVerdict(hit is not None, hit)


def brute_ceqv(inst: CsatInstance, cap: int = DEFAULT_ASSIGNMENT_CAP) -> EqvVerdict:
    """Exhaustive equivalence scan; returns the least counterexample if any."""
    hit = _scan(inst, want_equal=False, cap=cap)
    return EqvVerdict(hit is None, hit)


# ---------------------------------------------------------------------------
# The h gadget
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class HGadget:
    circuit: Circuit
    arity: int
    chain: tuple[Congruence, ...]  # ascending: a_1 < ... < a_n, with a_i = [1, a_{i+1}]


def commutator_chain(
    alg: FiniteAlgebra, top: Congruence, m: Optional[Circuit], cap: int
) -> tuple[Congruence, ...]:
    """The descending chain a, [1,a], [1,[1,a]], ... returned ascending; requires
    that it reaches the zero congruence (nilpotence below `top`)."""
    one = Congruence.one(alg.size)
    chain = [top]
    while not chain[-1].is_zero():
        nxt = higher_commutator(alg, (one, chain[-1]), cap=cap, m=m)
        if nxt == chain[-1]:
            raise ConstructionFailed("commutator chain does not descend; not nilpotent")
        chain.append(nxt)
    chain.reverse()
    return tuple(c for c in chain if not c.is_zero())


def build_h(
    alg: FiniteAlgebra,
    m: Circuit,
    zero: int = 0,
    top: Optional[Congruence] = None,
    cap: int = 3072,
) -> HGadget:
    """A gadget h with h(0,...,0) = 0 whose image is the bottom chain block and whose
    value depends only on the top-level coordinates of its inputs, surjectively.

    Built by induction on the chain length: the identity for a central top, and
    otherwise a loop-sum of absorbing slices composed with the gadget of the
    quotient by the bottom chain member.
    """
    if top is None:
        top = Congruence.one(alg.size)
    chain = commutator_chain(alg, top, m, cap)
    gadget = _build_h_chain(alg, m, zero, chain, cap)
    _verify_h(alg, gadget, zero)
    return gadget


def _build_h_chain(
    alg: FiniteAlgebra, m: Circuit, zero: int, chain: tuple[Congruence, ...], cap: int
) -> HGadget:
    if len(chain) <= 1:
        return HGadget(identity_circuit(0), 1, chain)
    loop = loop_context(alg, m, zero)
    alpha1 = chain[0]
    q, proj = quotient(alg, alpha1)
    q_chain = []
    for c in chain[1:]:
        blocks: dict[int, int] = {}
        for x in range(alg.size):
            blocks.setdefault(proj[x], c.block_of(x))
        q_chain.append(Congruence(tuple(blocks[u] for u in range(q.size))))
    inner = _build_h_chain(q, m, proj[zero], tuple(q_chain), cap)
    # lift: the same circuit read in alg, normalized to send the zero tuple to zero
    lifted = inner.circuit
    v0 = eval_circuit(alg, lifted, (zero,) * inner.arity)
    if v0 != zero:
        lifted = compose(loop.rdiv, [lifted, constant_circuit(v0)])

    alpha2 = chain[1]
    block2 = [x for x in range(alg.size) if alpha2.related(x, zero)]
    block1 = {x for x in range(alg.size) if alpha1.related(x, zero)}
    ws = _witnesses(alg, 2, cap, m)
    s = alg.size
    candidates = []
    for i in range(ws.tables.shape[0]):
        tab = ws.tables[i].astype(np.int64)
        for anchor, value in ws.anchors[i]:
            if anchor != (zero, zero) or value != zero:
                continue
            for a in range(s):
                img = {int(tab[a * s + x]) for x in block2}
                if img <= block1 and img != {zero}:
                    candidates.append((i, a, frozenset(img)))
            break
    current = {zero}
    picks: list[tuple[int, int]] = []
    progress = True
    while current != block1 and progress:
        progress = False
        for i, a, img in candidates:
            nxt = {loop.add_of(x, v) for x in current for v in img}
            if nxt <= block1 and len(nxt) > len(current):
                current = nxt
                picks.append((i, a))
                progress = True
                break
    if current != block1:
        raise ConstructionFailed(
            "absorbing slices do not span the bottom chain block", have=len(current)
        )
    span: Optional[Circuit] = None
    for slot, (i, a) in enumerate(picks):
        piece = compose(ws.circuit(i), [constant_circuit(a), identity_circuit(slot)])
        span = piece if span is None else compose(loop.add, [span, piece])
    arity = inner.arity * len(picks)
    args = []
    for j in range(len(picks)):
        block_vars = [identity_circuit(j * inner.arity + t) for t in range(inner.arity)]
        args.append(compose(lifted, block_vars))
    return HGadget(compact(compose(span, args)), arity, chain)


def _verify_h(alg: FiniteAlgebra, gadget: HGadget, zero: int) -> None:
    chain = gadget.chain
    if len(chain) <= 1:
        return
    alpha1 = chain[0]
    theta = chain[-2]  # kernel of the top-level projection
    rho = chain[-1]
    block_rho = [x for x in range(alg.size) if rho.related(x, zero)]
    block1 = {x for x in range(alg.size) if alpha1.related(x, zero)}
    if eval_circuit(alg, gadget.circuit, (zero,) * gadget.arity) != zero:
        raise ConstructionFailed("gadget does not vanish on the zero tuple")
    values: dict[tuple[int, ...], int] = {}
    image = set()
    for combo in itertools.product(block_rho, repeat=gadget.arity):
        v = eval_circuit(alg, gadget.circuit, combo)
        if v not in block1:
            raise ConstructionFailed("gadget image escapes the bottom chain block")
        image.add(v)
        key = tuple(theta.block_of(x) for x in combo)
        if values.setdefault(key, v) != v:
            raise ConstructionFailed("gadget value depends below the top level")
    if image != block1:
        raise ConstructionFailed("gadget is not surjective onto the bottom chain block")


# ---------------------------------------------------------------------------
# Reduction context: presentation, indicator family, base circuits
# ---------------------------------------------------------------------------


def _prime_vector_maps(size: int, add: Sequence[int], p: int, k: int):
    """Index <-> Z_p^k translations for an abelian table group, via a greedy basis."""
    if size != p**k:
        raise PresentationMismatch(f"group of order {size} is not {p}^{k}")
    span = {0: (0,) * k}
    basis: list[int] = []
    for x in range(size):
        if x in span:
            continue
        basis.append(x)
        if len(basis) > k:
            raise PresentationMismatch("group has too many generators")
        pos = len(basis) - 1
        grown: dict[int, tuple[int, ...]] = {}
        for e, vec in span.items():
            acc = e
            for c in range(p):
                nv = list(vec)
                nv[pos] = c
                grown[acc] = tuple(nv)
                acc = add[acc * size + x]
        span = grown
        if len(span) == size:
            break
    if len(span) != size:
        raise PresentationMismatch("could not find an elementary basis")
    to_u = [0] * size
    u_to = [0] * size
    for e, vec in span.items():
        idx = 0
        for c in vec:
            idx = idx * p + c
        to_u[e] = idx
        u_to[idx] = e
    return to_u, u_to


@dataclass(frozen=True, eq=False)
class IndicatorArena:
    """Everything needed to splice clonoid expressions over one level interface."""

    algebra: FiniteAlgebra
    loop: LoopOps
    presentation: WreathPresentation
    value_level: int  # level carrying indicator values
    color_level: int  # level whose coordinates are tested
    block: tuple[int, ...]  # inputs live here (zero block of the chain top)
    family: ConjunctionFamily
    t1_circuit: Circuit
    color_to_u: tuple[int, ...]
    u_to_color: tuple[int, ...]
    value_to_l: tuple[int, ...]
    l_to_value: tuple[int, ...]

    def color_coord(self, a: int) -> int:
        pres = self.presentation
        shift = pres.higher_size(self.color_level)
        lvl = (pres.iso[a] // shift) % pres.levels[self.color_level].size
        return self.color_to_u[lvl]

    def value_coord(self, a: int) -> int:
        pres = self.presentation
        shift = pres.higher_size(self.value_level)
        lvl = (pres.iso[a] // shift) % pres.levels[self.value_level].size
        return self.value_to_l[lvl]

    def color_rep(self, u_index: int) -> int:
        pres = self.presentation
        shift = pres.higher_size(self.color_level)
        return self._inv(self.u_to_color[u_index] * shift)

    def value_rep(self, l_index: int) -> int:
        pres = self.presentation
        shift = pres.higher_size(self.value_level)
        return self._inv(self.l_to_value[l_index] * shift)

    def _inv(self, idx: int) -> int:
        return self.presentation.iso.index(idx)

    def pure_level(self, a: int, skip: int) -> bool:
        pres = self.presentation
        idx = pres.iso[a]
        for i in range(len(pres.levels)):
            if i == skip:
                continue
            shift = pres.higher_size(i)
            if (idx // shift) % pres.levels[i].size != 0:
                return False
        return True


def _loop_scalar_arg(loop: LoopOps, i: int) -> Circuit:
    if i == 0:
        return constant_circuit(loop.zero)
    acc = identity_circuit(0)
    for _ in range(i - 1):
        acc = compose(loop.add, [acc, identity_circuit(0)])
    return acc


def _phase(normal, u_index: int, p: int, k: int) -> int:
    vec = []
    rem = u_index
    for _ in range(k):
        vec.append(rem % p)
        rem //= p
    vec.reverse()
    return sum(c * x for c, x in zip(normal, vec)) % p


def _mirror_normalization(arena_alg, loop, base_circ, fam, color_rep, value_rep):
    """Replay the normalization trace as circuit surgery on the base slice."""
    cctx = fam.ctx
    circ = base_circ
    for step in fam.steps:
        kind = step[0]
        if kind == "sub_const":
            circ = compose(loop.rdiv, [circ, constant_circuit(value_rep(step[1]))])
        elif kind == "translate":
            rep = color_rep(step[1])
            shifted = compose(
                circ, [compose(loop.add, [identity_circuit(0), constant_circuit(rep)])]
            )
            at_rep = eval_circuit(arena_alg, circ, (rep,))
            circ = compose(loop.rdiv, [shifted, constant_circuit(at_rep)])
        elif kind == "hyperplane_sum":
            normal = step[1]
            acc = None
            for w in range(cctx.u_size):
                if _phase(normal, w, cctx.p, cctx.k) != 0:
                    continue
                arg = compose(loop.add, [identity_circuit(0), constant_circuit(color_rep(w))])
                piece = compose(circ, [arg])
                acc = piece if acc is None else compose(loop.add, [acc, piece])
            circ = acc
        elif kind == "coset_collapse":
            acc = None
            for i in range(cctx.p):
                piece = compose(circ, [_loop_scalar_arg(loop, i)])
                acc = piece if acc is None else compose(loop.add, [acc, piece])
            circ = acc
        else:  # pragma: no cover
            raise ConstructionFailed(f"unknown normalization step {kind!r}")
    return circ


def _indicator_arena(
    alg: FiniteAlgebra,
    m: Circuit,
    zero: int,
    chain: tuple[Congruence, ...],
    cap: int,
) -> IndicatorArena:
    """Build the hyperplane-indicator family over the top interface of a chain.

    The chain's top member bounds the inputs (its zero block); the level just
    below the quotient carries the colors, the bottom level the values.  The
    base indicator circuit is the normalized unary slice of the chain gadget,
    verified on the whole input block.
    """
    loop = loop_context(alg, m, zero)
    gadget = build_h(alg, m, zero=zero, top=chain[-1], cap=cap)
    pres = elementary_refinement(
        decompose_series(alg, chain, m=m, zero=zero, check_central=False), m=m
    )
    color_level = len(pres.levels) - 1
    value_level = 0
    p = pres.levels[color_level].exponent
    q = pres.levels[value_level].exponent
    if p == q:
        raise PresentationMismatch(
            "value and color levels share their exponent", p=p
        )
    msz = pres.levels[color_level].size
    kdim = round(math.log(msz, p))
    color_to_u, u_to_color = _prime_vector_maps(msz, pres.levels[color_level].add, p, kdim)
    vsz = pres.levels[value_level].size
    ldim = round(math.log(vsz, q))
    value_to_l, l_to_value = _prime_vector_maps(vsz, pres.levels[value_level].add, q, ldim)
    cctx = ClonoidContext(p, kdim, q, ldim)
    block = tuple(
        x for x in range(alg.size) if chain[-1].related(x, zero)
    ) if not chain[-1].is_one() else tuple(range(alg.size))

    inv_iso = [0] * alg.size
    for a, idx in enumerate(pres.iso):
        inv_iso[idx] = a
    shift_c = pres.higher_size(color_level)
    shift_v = pres.higher_size(value_level)

    def color_rep(u_index: int) -> int:
        return inv_iso[u_to_color[u_index] * shift_c]

    def value_rep(l_index: int) -> int:
        return inv_iso[l_to_value[l_index] * shift_v]

    raw = None
    base_circ = None
    for pins in itertools.product(range(cctx.u_size), repeat=gadget.arity):
        for free in range(gadget.arity):
            tab = []
            for w in range(cctx.u_size):
                args = [
                    color_rep(pins[j]) if j != free else color_rep(w)
                    for j in range(gadget.arity)
                ]
                v = eval_circuit(alg, gadget.circuit, args)
                tab.append(value_to_l[(pres.iso[v] // shift_v) % vsz])
            if len(set(tab)) > 1:
                raw = tab
                consts = [
                    constant_circuit(color_rep(pins[j])) for j in range(gadget.arity)
                ]
                consts[free] = identity_circuit(0)
                base_circ = compose(gadget.circuit, consts)
                break
        if raw is not None:
            break
    if raw is None:
        raise ConstructionFailed("chain gadget is constant on every unary slice")

    fam = normalize_unary(cctx, raw)
    t1 = compact(_mirror_normalization(alg, loop, base_circ, fam, color_rep, value_rep))
    arena = IndicatorArena(
        algebra=alg,
        loop=loop,
        presentation=pres,
        value_level=value_level,
        color_level=color_level,
        block=block,
        family=fam,
        t1_circuit=t1,
        color_to_u=tuple(color_to_u),
        u_to_color=tuple(u_to_color),
        value_to_l=tuple(value_to_l),
        l_to_value=tuple(l_to_value),
    )
    _verify_arena(arena)
    return arena


def _verify_arena(arena: IndicatorArena) -> None:
    alg = arena.algebra
    fam = arena.family
    for x in arena.block:
        v = eval_circuit(alg, arena.t1_circuit, (x,))
        if arena.value_coord(v) != fam.t1[arena.color_coord(x)]:
            raise ConstructionFailed("base indicator has a wrong value", element=x)
        if not arena.pure_level(v, arena.value_level):
            raise ConstructionFailed("base indicator pollutes another level", element=x)


def splice(arena: IndicatorArena, expr: Expression, arity: int) -> Circuit:
    """Compile a clonoid expression into a circuit over the arena's algebra.

    Atom arguments become left-associated loop sums of scalar-multiplied inputs
    plus a constant color representative; coefficients become repeated loop
    sums of the atom's value.  Gates are hash-consed as they are emitted, so
    shared argument chains collapse instead of being recopied per atom.
    """
    loop = arena.loop
    cctx = expr.family.ctx
    bld = CircuitBuilder()
    inputs = [bld.var(j) for j in range(arity)]
    acc: Optional[int] = None
    for (b, c), coeff in expr.terms:
        arg: Optional[int] = None
        for j in range(arity):
            bj = b[j] % cctx.p if j < len(b) else 0
            for _ in range(bj):
                arg = inputs[j] if arg is None else bld.inline(loop.add, [arg, inputs[j]])
        if c or arg is None:
            cref = bld.const(arena.color_rep(c))
            arg = cref if arg is None else bld.inline(loop.add, [arg, cref])
        atom = bld.inline(arena.t1_circuit, [arg])
        for _ in range(coeff % cctx.q):
            acc = atom if acc is None else bld.inline(loop.add, [acc, atom])
    if acc is None:
        acc = bld.const(arena.value_rep(0))
    return bld.finish(acc)


@dataclass(frozen=True, eq=False)
class ReductionContext:
    algebra: FiniteAlgebra
    m: Circuit
    zero: int
    loop: LoopOps
    fitting_length: int
    p: int  # exponent of the color group
    arena: IndicatorArena  # the full-chain interface (top quotient trivial)
    h: HGadget  # vertex gadget (identity when the chain tops out at the full relation)
    sub: Optional["ReductionContext"] = None  # Fitting-length k-1 context on A/lambda_1
    sub_proj: Optional[tuple[int, ...]] = None
    interface: Optional[IndicatorArena] = None  # value/color interface for the composition
    provenance: dict = field(default_factory=dict)

    @property
    def family(self) -> ConjunctionFamily:
        return self.arena.family

    def l_element(self, l_index: int) -> int:
        return self.arena.value_rep(l_index)

    def rho_block(self) -> list[int]:
        return list(self.arena.block)


def prepare_reduction(
    alg: FiniteAlgebra,
    m: Optional[Circuit] = None,
    zero: int = 0,
    cap: int = 3072,
) -> ReductionContext:
    """Analyze an algebra of Fitting length >= 2 and assemble the reduction data.

    For Fitting length 2 the indicator tower lives on the full chain interface.
    For longer lengths the context recursively prepares the quotient by the
    Fitting congruence and keeps the two-level interface needed to compose its
    towers upward.
    """
    if m is None:
        from .algebra import find_maltsev

        m = find_maltsev(alg)
        if m is None:
            raise NotMaltsev("no Maltsev circuit found")
    loop = loop_context(alg, m, zero)
    lat = congruence_lattice(alg)
    fd = fitting(alg, cap=cap, m=m, lattice=lat)
    if not fd.finite or fd.length < 2:
        raise PresentationMismatch(
            f"Fitting length {fd.length} unsupported; need a finite length >= 2"
        )
    k = int(fd.length)
    one = Congruence.one(alg.size)
    chain = commutator_chain(alg, one, m, cap)
    h = HGadget(identity_circuit(0), 1, chain)

    sub = None
    sub_proj = None
    interface = None
    if k == 2:
        arena = _indicator_arena(alg, m, zero, chain, cap)
        p = arena.family.ctx.p
    else:
        lam = fd.fitting_congruence
        qalg, proj = quotient(alg, lam)
        sub = prepare_reduction(qalg, m=m, zero=proj[zero], cap=cap)
        sub_proj = tuple(proj)
        # interface: the chain segment up to the level feeding the composition
        iface_top = _pullback(alg, proj, sub.arena.presentation.series[0], qalg)
        iface_chain = commutator_chain(alg, iface_top, m, cap)
        interface = _indicator_arena(alg, m, zero, iface_chain, cap)
        arena = interface
        p = sub.p
    ctx = ReductionContext(
        algebra=alg,
        m=m,
        zero=zero,
        loop=loop,
        fitting_length=k,
        p=p,
        arena=arena,
        h=h,
        sub=sub,
        sub_proj=sub_proj,
        interface=interface,
        provenance={
            "fitting_length": k,
            "chain_blocks": [c.num_blocks for c in chain],
            "rho": one,
        },
    )
    return ctx


def _pullback(alg: FiniteAlgebra, proj: Sequence[int], cong: Congruence, qalg) -> Congruence:
    return Congruence(tuple(cong.block_of(proj[x]) for x in range(alg.size)))


# ---------------------------------------------------------------------------
# Absorbing towers
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TowerEntry:
    n: int
    arity: int
    circuit: Circuit
    gates: int


def _color_phase(ctx: "ReductionContext", a: int) -> int:
    """Phase of the top color coordinate of an element (0 = on the hyperplane)."""
    if ctx.sub is None:
        return ctx.arena.family.hyperplane.phase(ctx.arena.color_coord(a))
    return _color_phase(ctx.sub, ctx.sub_proj[a])


class AbsorbingTower:
    """Per-n circuits whose value-level coordinate is the all-off-hyperplane
    indicator of the inputs' color coordinates, and zero on every other level.

    For Fitting length 2 the circuits come from the off-indicator recursion on
    the chain interface; for longer lengths each entry composes the quotient
    context's tower with an interpolated coset detector, with a scalar
    correction when the inner on-value lands on the detector's hyperplane.
    """

    def __init__(self, ctx: "ReductionContext"):
        self.ctx = ctx
        self._entries: dict[int, TowerEntry] = {}
        self._sub: Optional[AbsorbingTower] = (
            AbsorbingTower(ctx.sub) if ctx.sub is not None else None
        )

    def entry(self, n: int, verify_cap: int = 200_000) -> TowerEntry:
        if n not in self._entries:
            circ, arity = self._build(n)
            entry = TowerEntry(n, arity, circ, circ.gate_count())
            self._verify(entry, verify_cap)
            self._entries[n] = entry
        return self._entries[n]

    def _build(self, n: int) -> tuple[Circuit, int]:
        ctx = self.ctx
        arena = ctx.arena
        if n == 0:
            return constant_circuit(arena.value_rep(arena.family.value)), 0
        if ctx.sub is None:
            return self._build_flat(n), n
        return self._build_composed(n)

    def _build_flat(self, n: int) -> Circuit:
        """One-variable-at-a-time extension of the base indicator.

        Kept structurally recursive (no cross-copy gate sharing) so the gate
        count grows by a stable factor per step; instances compact the final
        composition separately for evaluation speed.
        """
        arena = self.ctx.arena
        loop = self.ctx.loop
        cctx = arena.family.ctx
        p, q, p_inv = cctx.p, cctx.q, cctx.p_inv
        circ = arena.t1_circuit
        for cur in range(1, n):
            pieces: list[tuple[int, Circuit]] = []
            for i in range(p):
                head = compose(_loop_scalar_arg(loop, i), [identity_circuit(cur)])
                arg = compose(loop.rdiv, [identity_circuit(cur - 1), head])
                args = [identity_circuit(j) for j in range(cur - 1)] + [arg]
                pieces.append(((-p_inv) % q, compose(circ, args)))
            pieces.append((1, circ))
            args = [identity_circuit(j) for j in range(cur - 1)] + [identity_circuit(cur)]
            pieces.append(((1 - p_inv) % q, compose(circ, args)))
            acc: Optional[Circuit] = None
            for coeff, piece in pieces:
                for _ in range(coeff):
                    acc = piece if acc is None else compose(loop.add, [acc, piece])
            circ = acc
        return circ

    def _build_composed(self, n: int) -> tuple[Circuit, int]:
        ctx = self.ctx
        iface = ctx.interface
        sub_entry = self._sub.entry(n)
        s_circ = sub_entry.circuit  # same signature: evaluate it in the full algebra
        s_arity = max(sub_entry.arity, 1)

        # the inner on-value, observed through the interface color coordinate
        on_phase = self._inner_on_phase(s_circ, s_arity)
        correction, on_phase = self._phase_correction(s_circ, s_arity, on_phase)
        fam = iface.family
        p = fam.ctx.p
        table = []
        for phases in itertools.product(range(p), repeat=n):
            table.append(fam.value if all(ph == on_phase for ph in phases) else 0)
        detector = splice(iface, interpolate(fam, table, n), n)

        blocks = []
        for j in range(n):
            vars_j = [identity_circuit(j * s_arity + t) for t in range(s_arity)]
            inner = compose(s_circ, vars_j)
            if correction is not None:
                inner = compose(correction, [inner])
            blocks.append(inner)
        return compact(compose(detector, blocks)), n * s_arity

    def _inner_on_phase(self, s_circ: Circuit, s_arity: int) -> int:
        ctx = self.ctx
        iface = ctx.interface
        phases = set()
        on = None
        for combo in itertools.islice(
            itertools.product(range(ctx.algebra.size), repeat=s_arity), 4096
        ):
            v = eval_circuit(ctx.algebra, s_circ, combo)
            ph = iface.family.hyperplane.phase(iface.color_coord(v))
            if all(_color_phase(ctx.sub, ctx.sub_proj[x]) != 0 for x in combo):
                on = ph
            phases.add(ph)
        if on is None:
            raise ConstructionFailed("no all-off input tuple found for the inner tower")
        return on

    def _phase_correction(self, s_circ, s_arity, on_phase):
        ctx = self.ctx
        iface = ctx.interface
        if on_phase != 0:
            return None, on_phase
        # scalar correction on the interface color level: find c with a usable phase
        loop = ctx.loop
        for c in range(2, iface.family.ctx.p + 1):
            cand = _loop_scalar_arg(loop, c)
            probe = None
            ok = True
            for combo in itertools.islice(
                itertools.product(range(ctx.algebra.size), repeat=s_arity), 512
            ):
                v = eval_circuit(ctx.algebra, s_circ, combo)
                w = eval_circuit(ctx.algebra, cand, (v,))
                ph = iface.family.hyperplane.phase(iface.color_coord(w))
                if all(_color_phase(ctx.sub, ctx.sub_proj[x]) != 0 for x in combo):
                    probe = ph
            if probe:
                return cand, probe
        raise ConstructionFailed("no scalar correction moves the inner value off the hyperplane")

    def _verify(self, entry: TowerEntry, cap: int) -> None:
        ctx = self.ctx
        arena = ctx.arena
        alg = ctx.algebra
        if entry.n == 0 or entry.arity == 0:
            return
        if alg.size**entry.arity > cap:
            return
        cols = input_grid(alg.size, entry.arity)
        vals = eval_circuit_batch(alg, entry.circuit, cols)
        fam = arena.family
        block = set(arena.block)
        for t in range(cols.shape[1]):
            combo = tuple(int(cols[j][t]) for j in range(entry.arity))
            v = int(vals[t])
            if ctx.sub is None:
                off = all(_color_phase(ctx, x) != 0 for x in combo)
            else:
                width = entry.arity // entry.n
                off = all(
                    all(_color_phase(ctx, x) != 0 for x in combo[b * width : (b + 1) * width])
                    for b in range(entry.n)
                )
            want = fam.value if off else 0
            if arena.value_coord(v) != want:
                raise ConstructionFailed("tower value is wrong", n=entry.n, inputs=combo)
            if v not in block or not arena.pure_level(v, arena.value_level):
                raise ConstructionFailed("tower pollutes a level", n=entry.n)


def build_absorbing_tower(ctx: "ReductionContext", n: int) -> TowerEntry:
    return AbsorbingTower(ctx).entry(n)


# ---------------------------------------------------------------------------
# Instance generators
# ---------------------------------------------------------------------------


def _pad_edges(graph: Graph, k: int) -> list[tuple[int, int]]:
    edges = sorted(graph.edges)
    if not edges or k <= 2:
        return edges
    n = 1
    while n ** (k - 1) < len(edges):
        n += 1
    first = edges[0]
    while len(edges) < n ** (k - 1):
        edges.append(first)
    return edges


def color_to_csat(
    ctx: "ReductionContext",
    graph: Graph,
    p: Optional[int] = None,
    tower: Optional[AbsorbingTower] = None,
) -> CsatInstance:
    """The coloring instance: the tower applied to loop-quotients of vertex gadget
    copies, equated with the constant indicator value; satisfiable iff the graph
    is p-colorable, where p is the color exponent of the context."""
    if p is None:
        p = ctx.p
    if p != ctx.p:
        raise UnsupportedPrime(f"context colors with p={ctx.p}, requested {p}", p=p)
    if p == 2:
        raise UnsupportedPrime("p = 2 reductions go through the 3-SAT variant", p=2)
    tower = tower or AbsorbingTower(ctx)
    edges = _pad_edges(graph, ctx.fitting_length)
    if ctx.fitting_length <= 2:
        entry = tower.entry(len(edges))
    else:
        n = 1
        while n ** (ctx.fitting_length - 1) < max(len(edges), 1):
            n += 1
        entry = tower.entry(n)
    h = ctx.h
    loop = ctx.loop
    edge_args = []
    for (u, v) in edges:
        hu = compose(h.circuit, [identity_circuit(u * h.arity + t) for t in range(h.arity)])
        hv = compose(h.circuit, [identity_circuit(v * h.arity + t) for t in range(h.arity)])
        edge_args.append(compose(loop.rdiv, [hu, hv]))
    lhs = compact(compose(entry.circuit, edge_args)) if edges else entry.circuit
    rhs = constant_circuit(ctx.arena.value_rep(ctx.family.value))
    num_vars = graph.num_vertices * h.arity
    meta = {
        "kind": "coloring",
        "p": p,
        "vertices": graph.num_vertices,
        "edges": len(graph.edges),
        "padded_edges": len(edges),
        "tower_n": entry.n,
        "gates": lhs.gate_count(),
        "vars_per_vertex": h.arity,
        "chain_blocks": list(ctx.provenance.get("chain_blocks", [])),
        "color_group_size": ctx.arena.presentation.levels[ctx.arena.color_level].size
        if ctx.sub is None
        else ctx.sub.arena.presentation.levels[ctx.sub.arena.color_level].size,
    }
    return CsatInstance(ctx.algebra, lhs, rhs, num_vars, meta)


def ceqv_companion(inst: CsatInstance) -> CsatInstance:
    """The equivalence companion: the instance circuit against the zero constant."""
    meta = dict(inst.meta)
    meta["kind"] = meta.get("kind", "") + "-ceqv"
    return CsatInstance(inst.algebra, inst.lhs, constant_circuit(0), inst.num_vars, meta)


@dataclass(frozen=True)
class Cnf:
    num_vars: int
    clauses: tuple[tuple[int, ...], ...]  # DIMACS-style signed literals

    def satisfiable(self) -> bool:
        """Brute-force truth-table oracle."""
        for assign in itertools.product((False, True), repeat=self.num_vars):
            if all(
                any((lit > 0) == assign[abs(lit) - 1] for lit in clause)
                for clause in self.clauses
            ):
                return True
        return False


def sat3_to_csat(ctx: "ReductionContext", cnf: Cnf) -> CsatInstance:
    """The 3-SAT instance for color exponent 2: an interpolated CNF indicator
    applied to literal circuits; a variable is true iff its value sits off the
    hyperplane, and negation shifts by the coset transversal."""
    if ctx.p != 2:
        raise UnsupportedPrime(f"3-SAT variant needs color exponent 2, have {ctx.p}", p=ctx.p)
    if ctx.sub is not None:
        raise UnsupportedPrime("3-SAT variant is implemented on length-2 contexts", p=2)
    for clause in cnf.clauses:
        if len(clause) != 3:
            raise ValueError("every clause must have exactly 3 literals")
    arena = ctx.arena
    fam = arena.family
    n_clauses = len(cnf.clauses)
    width = 3 * n_clauses
    cache = ctx.provenance.setdefault("sat3_gadgets", {})
    gadget = cache.get(n_clauses)
    if gadget is None:
        if n_clauses:
            table = []
            for phases in itertools.product(range(fam.ctx.p), repeat=width):
                ok = all(
                    any(phases[3 * i + j] != 0 for j in range(3)) for i in range(n_clauses)
                )
                table.append(fam.value if ok else 0)
            gadget = splice(arena, interpolate(fam, table, width), width)
        else:
            gadget = constant_circuit(arena.value_rep(fam.value))
        cache[n_clauses] = gadget
    a_rep = arena.color_rep(fam.transversal)
    lits = []
    for clause in cnf.clauses:
        for lit in clause:
            base = identity_circuit(abs(lit) - 1)
            if lit < 0:
                base = compose(ctx.loop.add, [base, constant_circuit(a_rep)])
            lits.append(base)
    lhs = compact(compose(gadget, lits)) if lits else gadget
    rhs = constant_circuit(arena.value_rep(fam.value))
    meta = {
        "kind": "sat3",
        "p": 2,
        "clauses": n_clauses,
        "cnf_vars": cnf.num_vars,
        "gates": lhs.gate_count(),
        "chain_blocks": list(ctx.provenance.get("chain_blocks", [])),
    }
    return CsatInstance(ctx.algebra, lhs, rhs, max(cnf.num_vars, 0), meta)


# ---------------------------------------------------------------------------
# Size accounting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SizeReport:
    rows: tuple[tuple[int, int, int], ...]  # (n, arity, gates)
    ratio: float
    residual: float

    def to_json(self) -> dict:
        return {
            "rows": [{"n": n, "arity": a, "gates": g} for (n, a, g) in self.rows],
            "growth_ratio": self.ratio,
            "fit_residual": self.residual,
        }


def size_report(ctx: "ReductionContext", ns: Sequence[int] = (1, 2, 3, 4)) -> SizeReport:
    """Tower gate counts with a least-squares geometric fit; measurement only."""
    tower = AbsorbingTower(ctx)
    rows = []
    for n in ns:
        e = tower.entry(n, verify_cap=50_000)
        rows.append((n, e.arity, e.gates))
    xs = np.asarray([r[0] for r in rows], dtype=float)
    ys = np.log(np.asarray([r[2] for r in rows], dtype=float))
    slope, intercept = np.polyfit(xs, ys, 1)
    fit = np.exp(intercept + slope * xs)
    obs = np.asarray([r[2] for r in rows], dtype=float)
    residual = float(np.max(np.abs(obs - fit) / fit))
    return SizeReport(tuple(rows), float(np.exp(slope)), residual)
