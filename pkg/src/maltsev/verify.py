"""Named property suites runnable from the command line.

Each suite exercises a family of identities on the bundled algebras and
returns per-check pass counts.  These are the same properties the test suite
pins down; the CLI form exists so a packaged install can be smoke-checked
without pytest.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field

import numpy as np

from . import catalog
from .algebra import eval_circuit_batch, input_grid
from .clonoid import ClonoidContext, build_off_tn, build_tn, conjunction_table, hyperplanes, normalize_unary
from .commutator import check_centralizes, higher_commutator
from .congruence import Congruence, congruence_lattice, meet
from .errors import UnknownSuite
from .loops import loop_context
from .reductions import (
    AbsorbingTower,
    Graph,
    brute_ceqv,
    brute_csat,
    ceqv_companion,
    color_to_csat,
    prepare_reduction,
)
from .wreath import decompose_series, elementary_refinement, u_power_table


@dataclass
class SuiteOutcome:
    passed: int = 0
    failed: int = 0
    checks: list = field(default_factory=list)

    def record(self, name: str, ok: bool) -> None:
        self.checks.append({"check": name, "ok": bool(ok)})
        if ok:
            self.passed += 1
        else:
            self.failed += 1


def _suite_hc_laws(cap: int, seed: int) -> SuiteOutcome:
    out = SuiteOutcome()
    rng = random.Random(seed)
    for name in ("z4", "z2xz2", "s3", "z3xz2_twist"):
        alg = catalog.load(name)
        m = catalog.maltsev_circuit(name)
        lat = congruence_lattice(alg)
        hc = lambda *cs: higher_commutator(alg, cs, cap=cap, m=m)
        pairs = list(itertools.product(lat.members, repeat=2))
        for a, b in pairs:
            g = hc(a, b)
            out.record(f"{name}:HC1:{a.num_blocks},{b.num_blocks}", g.leq(meet(a, b)))
            out.record(f"{name}:HC4:{a.num_blocks},{b.num_blocks}", g == hc(b, a))
        triples = list(itertools.product(lat.members, repeat=3))
        sample = rng.sample(triples, min(8, len(triples)))
        for a, b, c in sample:
            g = hc(a, b, c)
            out.record(f"{name}:HC3", g.leq(hc(b, c)))
            out.record(f"{name}:HC8", hc(a, hc(b, c)).leq(g))
        for a, b in rng.sample(pairs, min(6, len(pairs))):
            g = hc(a, b)
            for beta in lat.members:
                want = g.leq(beta)
                got = bool(check_centralizes(alg, (a, b), beta, cap=cap, m=m))
                out.record(f"{name}:HC5", want == got)
    return out


def _suite_loop_laws(cap: int, seed: int) -> SuiteOutcome:
    out = SuiteOutcome()
    for name in ("z4", "z6", "z8", "z3xz2_twist", "z2xz3_twist", "tower3"):
        alg = catalog.load(name)
        m = catalog.maltsev_circuit(name)
        loop = loop_context(alg, m, 0)
        s = alg.size
        xs, ys = input_grid(s, 2)
        add = eval_circuit_batch(alg, loop.add, np.stack([xs, ys]))
        rd = eval_circuit_batch(alg, loop.rdiv, np.stack([add, ys]))
        ld = eval_circuit_batch(alg, loop.ldiv, np.stack([xs, add]))
        out.record(f"{name}:rdiv", bool(np.all(rd == xs)))
        out.record(f"{name}:ldiv", bool(np.all(ld == ys)))
        idx = np.arange(s)
        out.record(
            f"{name}:neutral",
            bool(
                np.all(eval_circuit_batch(alg, loop.add, np.stack([idx, np.zeros(s, int)])) == idx)
                and np.all(eval_circuit_batch(alg, loop.add, np.stack([np.zeros(s, int), idx])) == idx)
            ),
        )
    z4 = catalog.load("z4")
    loop4 = loop_context(z4, catalog.maltsev_circuit("z4"), 0)
    out.record("z4:u4_zero", bool(np.all(u_power_table(z4, loop4, 2, 2) == 0)))
    out.record("z4:u3_bijective", len(set(u_power_table(z4, loop4, 3, 1).tolist())) == 4)
    return out


def _suite_clonoid(cap: int, seed: int) -> SuiteOutcome:
    out = SuiteOutcome()
    for p in (2, 3, 5):
        for k in (1, 2, 3):
            got = len(hyperplanes(p, k))
            out.record(f"hyperplanes:{p},{k}", got == (p**k - 1) // (p - 1))
    for (p, q) in ((2, 3), (3, 2), (2, 5)):
        ctx = ClonoidContext(p, 1, q, 1)
        fam = normalize_unary(ctx, [0] + [1] * (p - 1))
        for n in range(1, 5):
            expr, table = build_tn(fam, n)
            out.record(f"tn:{p},{q},{n}", table == conjunction_table(fam, n))
            out.record(f"tn-atoms:{p},{q},{n}", expr.atom_count <= p ** (n + 1))
            _, off = build_off_tn(fam, n)
            out.record(f"off:{p},{q},{n}", off == conjunction_table(fam, n, off=True))
    return out


def _suite_wreath_roundtrip(cap: int, seed: int) -> SuiteOutcome:
    out = SuiteOutcome()
    from .congruence import cg

    z4 = catalog.load("z4")
    z8 = catalog.load("z8")
    tw = catalog.load("z3xz2_twist")
    cases = [
        ("z4", z4, (cg(z4, [(0, 2)]), Congruence.one(4))),
        ("z8", z8, (cg(z8, [(0, 4)]), cg(z8, [(0, 2)]), Congruence.one(8))),
        (
            "z3xz2_twist",
            tw,
            (
                higher_commutator(tw, (Congruence.one(6), Congruence.one(6)), m=catalog.maltsev_circuit("z3xz2_twist")),
                Congruence.one(6),
            ),
        ),
    ]
    for name, alg, series in cases:
        m = catalog.maltsev_circuit(name)
        try:
            pres = decompose_series(alg, series, m=m)
            pres.verify()
            ok = True
        except Exception:
            ok = False
        out.record(f"{name}:roundtrip", ok)
        try:
            ref = elementary_refinement(pres, m=m)
            ok = all(
                lv.exponent in (2, 3, 5, 7) or lv.size == 1 for lv in ref.levels
            )
        except Exception:
            ok = False
        out.record(f"{name}:elementary", ok)
    return out


def _suite_reduction_oracle(cap: int, seed: int) -> SuiteOutcome:
    out = SuiteOutcome()
    alg = catalog.load("z2xz3_twist")
    m = catalog.maltsev_circuit("z2xz3_twist")
    ctx = prepare_reduction(alg, m=m, cap=cap)
    tower = AbsorbingTower(ctx)
    all_edges = [(i, j) for i in range(4) for j in range(i + 1, 4)]
    for bits in range(64):
        edges = tuple(e for i, e in enumerate(all_edges) if bits & (1 << i))
        graph = Graph(4, edges)
        inst = color_to_csat(ctx, graph, tower=tower)
        want = graph.is_colorable(3)
        got = brute_csat(inst).satisfiable
        eq = brute_ceqv(ceqv_companion(inst)).equivalent
        out.record(f"K4-subset:{bits}", got == want and eq == (not want))
    return out


SUITES = {
    "hc-laws": _suite_hc_laws,
    "loop-laws": _suite_loop_laws,
    "clonoid": _suite_clonoid,
    "wreath-roundtrip": _suite_wreath_roundtrip,
    "reduction-oracle": _suite_reduction_oracle,
}


def run_suite(name: str, cap: int = 3072, seed: int = 0) -> SuiteOutcome:
    if name not in SUITES:
        raise UnknownSuite(f"no suite named {name!r}; have {sorted(SUITES)}", suite=name)
    return SUITES[name](cap, seed)
