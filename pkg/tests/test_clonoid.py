import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maltsev.clonoid import (
    ClonoidContext,
    build_off_tn,
    build_tn,
    conjunction_table,
    hyperplanes,
    hyperplanes_containing,
    interpolate,
    normalize_unary,
)
from maltsev.errors import ConstantInput, TableOverflow, ValueOutsideCyclicSubgroup


def count_subgroups_of_index_p(p, k):
    """Oracle: enumerate index-p subgroups of (Z_p)^k directly."""
    size = p**k
    vec = lambda i: tuple((i // p ** (k - 1 - j)) % p for j in range(k))
    add = lambda a, b: tuple((x + y) % p for x, y in zip(a, b))
    subgroups = set()
    elements = [vec(i) for i in range(size)]
    for gens in itertools.combinations(elements, max(k - 1, 1)):
        span = {(0,) * k}
        frontier = list(gens)
        while frontier:
            g = frontier.pop()
            for h in list(span):
                v = add(g, h)
                if v not in span:
                    span.add(v)
                    frontier.append(v)
        if len(span) == size // p:
            subgroups.add(frozenset(span))
    return len(subgroups)


@pytest.mark.parametrize("p", (2, 3, 5))
@pytest.mark.parametrize("k", (1, 2, 3))
def test_hyperplane_counts(p, k):
    assert len(hyperplanes(p, k)) == (p**k - 1) // (p - 1)


@pytest.mark.parametrize("p,k", [(2, 2), (2, 3), (3, 2)])
def test_hyperplane_count_against_subgroup_oracle(p, k):
    assert len(hyperplanes(p, k)) == count_subgroups_of_index_p(p, k)


@pytest.mark.parametrize("p", (2, 3))
@pytest.mark.parametrize("k", (1, 2, 3))
def test_every_nonzero_point_containment_count(p, k):
    want = (p ** (k - 1) - 1) // (p - 1)
    for x in range(1, p**k):
        assert hyperplanes_containing(p, k, x) == want


def test_normalize_rejects_constant():
    ctx = ClonoidContext(2, 1, 3, 1)
    with pytest.raises(ConstantInput):
        normalize_unary(ctx, [2, 2])


def test_normalize_already_normal():
    ctx = ClonoidContext(2, 1, 3, 1)
    fam = normalize_unary(ctx, [0, 1])
    assert fam.t1 == (0, 1)
    assert fam.hyperplane.normal == (1,)
    assert fam.value == 1


def test_normalize_point_indicator_k2():
    ctx = ClonoidContext(2, 2, 3, 1)
    t = [0, 0, 0, 1]
    fam = normalize_unary(ctx, t)
    # two-valued on/off the hyperplane, verified structurally
    for u in range(4):
        if fam.hyperplane.contains(u):
            assert fam.t1[u] == 0
        else:
            assert fam.t1[u] == fam.value != 0


@pytest.mark.parametrize("p,q", [(2, 3), (3, 2), (2, 5)])
def test_tn_tables_and_atom_counts(p, q):
    ctx = ClonoidContext(p, 1, q, 1)
    fam = normalize_unary(ctx, [0] + [1] * (p - 1))
    for n in range(1, 5):
        expr, table = build_tn(fam, n)
        assert table == conjunction_table(fam, n)
        assert expr.atom_count <= p ** (n + 1)
        off_expr, off_table = build_off_tn(fam, n)
        assert off_table == conjunction_table(fam, n, off=True)


def test_tn_table_overflow_still_returns_expression():
    ctx = ClonoidContext(3, 1, 2, 1)
    fam = normalize_unary(ctx, [0, 1, 1])
    expr, table = build_tn(fam, 4, cap=10)
    assert table is None and expr.atom_count > 0
    with pytest.raises(TableOverflow):
        expr.table(cap=10)


def test_expression_json_shape():
    ctx = ClonoidContext(2, 1, 3, 1)
    fam = normalize_unary(ctx, [0, 1])
    expr, _ = build_tn(fam, 2)
    doc = expr.to_json()
    assert "lin" in doc
    coeff, atom = doc["lin"][0]
    assert set(atom["t1_arg"]) == {"b", "c"}


def test_interpolate_zero_map_is_empty():
    ctx = ClonoidContext(2, 1, 3, 1)
    fam = normalize_unary(ctx, [0, 1])
    assert interpolate(fam, [0, 0, 0, 0], 2).atom_count == 0


def test_interpolate_self_matches_tn():
    ctx = ClonoidContext(2, 1, 3, 1)
    fam = normalize_unary(ctx, [0, 1])
    _, t2 = build_tn(fam, 2)
    spec = [fam.value if (ph1, ph2) == (0, 0) else 0 for ph1 in range(2) for ph2 in range(2)]
    assert interpolate(fam, spec, 2).table() == t2


def test_interpolate_xor_all_lifts():
    ctx = ClonoidContext(2, 1, 3, 1)
    fam = normalize_unary(ctx, [0, 1])
    f = [0, fam.value, fam.value, 0]
    tab = interpolate(fam, f, 2).table()
    for u1, u2 in itertools.product(range(2), repeat=2):
        assert tab[u1 * 2 + u2] == f[fam.hyperplane.phase(u1) * 2 + fam.hyperplane.phase(u2)]


def test_interpolate_rejects_values_outside_cycle():
    ctx = ClonoidContext(3, 1, 5, 1)
    fam = normalize_unary(ctx, [0, 1, 1])
    bad_value = (fam.value * 2) % 5 if fam.value != 2 else 3
    # values must be multiples of fam.value; over l = 1 any value is fine,
    # so go to l = 2 to get a genuine proper subgroup
    ctx2 = ClonoidContext(2, 1, 3, 2)
    t = [0, 4]  # maps into the second coordinate line
    fam2 = normalize_unary(ctx2, t)
    outside = 3  # vector (1, 0), not a multiple of (0, v)
    with pytest.raises(ValueOutsideCyclicSubgroup):
        interpolate(fam2, [0, outside, 0, 0], 2)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=3, max_size=3))
def test_normalize_arbitrary_nonconstant_z3_to_z2(tab):
    ctx = ClonoidContext(3, 1, 2, 1)
    if len(set(tab)) == 1:
        return
    tab2 = [v % 2 for v in tab]
    if len(set(tab2)) == 1:
        return
    fam = normalize_unary(ctx, tab2)
    assert fam.value != 0
    for u in range(3):
        want = 0 if fam.hyperplane.contains(u) else fam.value
        assert fam.t1[u] == want
