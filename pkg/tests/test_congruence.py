import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maltsev import catalog
from maltsev.algebra import FiniteAlgebra, OperationTable
from maltsev.congruence import (
    Congruence,
    cg,
    congruence_lattice,
    is_congruence,
    join,
    meet,
    quotient,
)


def subgroup_congruence(n, gens):
    """Oracle: the coset partition of the subgroup generated by gens in Z_n."""
    sub = {0}
    frontier = list(gens)
    while frontier:
        g = frontier.pop()
        for h in list(sub):
            v = (g + h) % n
            if v not in sub:
                sub.add(v)
                frontier.append(v)
    return Congruence(tuple(min((x - s) % n for s in sub) for x in range(n)))


def test_cg_empty_is_zero(bundled):
    z4, _ = bundled["z4"]
    assert cg(z4, []) == Congruence.zero(4)


def test_cg_z4_principals(bundled):
    z4, _ = bundled["z4"]
    assert cg(z4, [(0, 2)]) == subgroup_congruence(4, [2])
    assert cg(z4, [(0, 2)]).blocks == (0, 1, 0, 1)
    assert cg(z4, [(0, 1)]) == Congruence.one(4)


def test_cg_monotone(bundled):
    z8, _ = bundled["z8"]
    small = cg(z8, [(0, 4)])
    big = cg(z8, [(0, 4), (0, 2)])
    assert small.leq(big)


def test_lattice_sizes(bundled):
    assert len(congruence_lattice(bundled["z3"][0])) == 2
    assert len(congruence_lattice(bundled["z2"][0])) == 2
    assert len(congruence_lattice(bundled["z4"][0])) == 3
    assert len(congruence_lattice(bundled["z2xz2"][0])) == 5


def test_lattice_members_are_congruences(bundled):
    for name in ("z4", "z2xz2", "s3", "z3xz2_twist", "tower3"):
        alg, _ = bundled[name]
        lat = congruence_lattice(alg)
        for c in lat:
            assert is_congruence(alg, c), (name, c)


def test_quotient_by_zero_and_one(bundled):
    z4, _ = bundled["z4"]
    q0, proj0 = quotient(z4, Congruence.zero(4))
    assert q0.size == 4 and sorted(proj0) == [0, 1, 2, 3]
    q1, _ = quotient(z4, Congruence.one(4))
    assert q1.size == 1


def test_quotient_z4_mod_two_is_z2(bundled):
    z4, _ = bundled["z4"]
    q, proj = quotient(z4, cg(z4, [(0, 2)]))
    assert q.size == 2
    assert q.ops["add"].table == (0, 1, 1, 0)


def test_join_meet_trivia(bundled):
    z2xz2, _ = bundled["z2xz2"]
    lat = congruence_lattice(z2xz2)
    for alpha in lat:
        assert join(z2xz2, alpha, lat.zero) == alpha
        assert meet(alpha, lat.one) == alpha


def test_coordinate_kernels_join_to_one(bundled):
    z2xz2, _ = bundled["z2xz2"]
    # elements are 2*a + b; kernels of the two coordinate projections
    k1 = Congruence((0, 0, 1, 1))
    k2 = Congruence((0, 1, 0, 1))
    assert is_congruence(z2xz2, k1) and is_congruence(z2xz2, k2)
    assert join(z2xz2, k1, k2) == Congruence.one(4)
    assert meet(k1, k2) == Congruence.zero(4)


def test_lattice_modular_on_maltsev_algebras(bundled):
    for name in ("z4", "z2xz2", "s3", "z3xz2_twist", "z6", "tower3"):
        alg, _ = bundled[name]
        assert congruence_lattice(alg).is_modular(), name


def test_hasse_edges_z4(bundled):
    lat = congruence_lattice(bundled["z4"][0])
    assert lat.hasse_edges() == [(0, 1), (1, 2)]


def test_congruence_serialization_roundtrip():
    c = Congruence((0, 1, 0, 1))
    assert Congruence.from_json(c.to_json()) == c


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 7), st.integers(0, 7)), max_size=6))
def test_cg_yields_compatible_partitions(pairs):
    z8 = catalog.load("z8")
    c = cg(z8, pairs)
    assert is_congruence(z8, c)
    for a, b in pairs:
        assert c.related(a, b)


@settings(max_examples=20, deadline=None)
@given(
    st.tuples(st.integers(0, 5), st.integers(0, 5)),
    st.tuples(st.integers(0, 5), st.integers(0, 5)),
)
def test_join_meet_lattice_laws(p1, p2):
    alg = catalog.load("z3xz2_twist")
    a = cg(alg, [p1])
    b = cg(alg, [p2])
    assert meet(a, b).leq(a) and meet(a, b).leq(b)
    j = join(alg, a, b)
    assert a.leq(j) and b.leq(j)
    assert join(alg, a, meet(a, b)) == a
    assert meet(a, j) == a
