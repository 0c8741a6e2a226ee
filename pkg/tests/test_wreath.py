import itertools

import numpy as np
import pytest

from maltsev import catalog
from maltsev.algebra import eval_circuit, eval_circuit_batch, input_grid
from maltsev.commutator import higher_commutator, is_supernilpotent
from maltsev.congruence import Congruence, cg, congruence_lattice
from maltsev.errors import NotCentral, SignatureMismatch
from maltsev.loops import loop_context
from maltsev.wreath import (
    build_wreath,
    decompose_central,
    decompose_series,
    dependence_matrix,
    dependence_respects_supernilpotence,
    elementary_refinement,
    kernel_projection_is_homomorphism,
    level_from_group,
    loop_ops,
    r_prime,
    u_power,
    u_power_table,
)


def z2_level_for(top):
    """A Z2 level with the trivial action for every operation of `top`."""
    actions = {}
    for name, op in top.ops.items():
        coeffs = tuple((0, 1) for _ in range(op.arity))
        actions[name] = (coeffs, 0)
    return level_from_group(2, (0, 1, 1, 0), actions)


def test_build_wreath_zero_twist_is_direct_product(bundled):
    z2, _ = bundled["z2"]
    level = z2_level_for(z2)
    twists = {"add": (0, 0, 0, 0)}
    prod = build_wreath(level, z2, twists)
    assert prod.size == 4
    # oracle: direct product addition on pairs (l, u) -> index 2*l + u
    for a, b in itertools.product(range(4), repeat=2):
        la, ua = divmod(a, 2)
        lb, ub = divmod(b, 2)
        assert prod.apply("add", a, b) == 2 * ((la + lb) % 2) + (ua + ub) % 2


def test_build_wreath_signature_mismatch(bundled):
    z2, _ = bundled["z2"]
    level = z2_level_for(z2)
    with pytest.raises(SignatureMismatch):
        build_wreath(level, z2, {"mul": (0, 0, 0, 0)})


def test_build_wreath_twist_algebra_matches_bundle(bundled):
    """Rebuilding the bundled twist algebra from level data gives its tables."""
    tw, mt = bundled["z3xz2_twist"]
    one = Congruence.one(6)
    zeta = higher_commutator(tw, (one, one), m=mt)
    pres = decompose_series(tw, (zeta, one), m=mt)
    rebuilt = pres.rebuild()
    for name, op in tw.ops.items():
        r = op.arity
        for combo in itertools.product(range(6), repeat=r):
            img = tuple(pres.iso[x] for x in combo)
            assert pres.iso[tw.apply(name, *combo)] == rebuilt.apply(name, *img)


def test_decompose_central_not_central(bundled):
    s3, m = bundled["s3"]
    lat = congruence_lattice(s3)
    alpha = [c for c in lat if not c.is_zero() and not c.is_one()][0]
    with pytest.raises(NotCentral):
        decompose_central(s3, alpha, m=m)


def test_decompose_central_product_recovers_zero_twists(bundled):
    z2xz2, m = bundled["z2xz2"]
    zeta = Congruence((0, 0, 1, 1))  # kernel of the first coordinate
    pres = decompose_central(z2xz2, zeta, m=m)
    assert all(v == 0 for v in pres.twists[0]["add"])


def test_decompose_central_z4_has_carry(bundled):
    z4, m = bundled["z4"]
    pres = decompose_central(z4, cg(z4, [(0, 2)]), m=m)
    assert pres.levels[0].size == 2 and pres.top.size == 2
    assert any(v != 0 for v in pres.twists[0]["add"]), "the carry twist must be nonzero"


def test_decompose_series_z8_three_levels(bundled):
    z8, m = bundled["z8"]
    series = (cg(z8, [(0, 4)]), cg(z8, [(0, 2)]), Congruence.one(8))
    pres = decompose_series(z8, series, m=m)
    assert [lv.size for lv in pres.levels] == [2, 2, 2]
    assert pres.top.size == 1
    pres.verify()


def test_decompose_series_single_step_matches_central(bundled):
    z4, m = bundled["z4"]
    zeta = cg(z4, [(0, 2)])
    one_step = decompose_series(z4, (zeta,), m=m)
    central = decompose_central(z4, zeta, m=m)
    assert one_step.levels[0].add == central.levels[0].add
    assert one_step.iso == central.iso


def test_elementary_refinement_identity_on_elementary(bundled):
    tw, m = bundled["z3xz2_twist"]
    one = Congruence.one(6)
    zeta = higher_commutator(tw, (one, one), m=m)
    pres = decompose_series(tw, (zeta, one), m=m)
    ref = elementary_refinement(pres, m=m)
    assert [lv.exponent for lv in ref.levels] == [lv.exponent for lv in pres.levels]


def test_elementary_refinement_z4(bundled):
    z4, m = bundled["z4"]
    pres = decompose_series(z4, (Congruence.one(4),), m=m)
    assert pres.levels[0].exponent == 4
    ref = elementary_refinement(pres, m=m)
    assert [(lv.size, lv.exponent) for lv in ref.levels] == [(2, 2), (2, 2)]


def test_elementary_refinement_z6_larger_prime_first(bundled):
    z6, m = bundled["z6"]
    ref = elementary_refinement(decompose_series(z6, (Congruence.one(6),), m=m), m=m)
    assert [lv.exponent for lv in ref.levels] == [3, 2]


def test_loop_identities(bundled):
    for name in ("z4", "z3xz2_twist", "tower3"):
        alg, m = bundled[name]
        add, ldiv, rdiv = loop_ops(alg, m, 0)
        s = alg.size
        xs, ys = input_grid(s, 2)
        plus = eval_circuit_batch(alg, add, np.stack([xs, ys]))
        assert np.all(eval_circuit_batch(alg, rdiv, np.stack([plus, ys])) == xs)
        assert np.all(eval_circuit_batch(alg, ldiv, np.stack([xs, plus])) == ys)
        idx = np.arange(s)
        zero = np.zeros(s, dtype=np.int64)
        assert np.all(eval_circuit_batch(alg, add, np.stack([idx, zero])) == idx)
        assert np.all(eval_circuit_batch(alg, add, np.stack([zero, idx])) == idx)


def test_loop_add_on_z4_is_group_addition(bundled):
    z4, m = bundled["z4"]
    add, _, _ = loop_ops(z4, m, 0)
    for x, y in itertools.product(range(4), repeat=2):
        assert eval_circuit(z4, add, (x, y)) == (x + y) % 4


def test_u_power_scalar_iterates(bundled):
    z2, m2 = bundled["z2"]
    loop2 = loop_context(z2, m2, 0)
    assert u_power_table(z2, loop2, 3, 1).tolist() == [0, 1]  # 3x = x

    z4, m4 = bundled["z4"]
    loop4 = loop_context(z4, m4, 0)
    assert u_power_table(z4, loop4, 2, 2).tolist() == [0, 0, 0, 0]
    u3 = u_power_table(z4, loop4, 3, 1)
    assert sorted(u3.tolist()) == [0, 1, 2, 3]


def test_r_prime_z6(bundled):
    z6, m = bundled["z6"]
    pres = elementary_refinement(decompose_series(z6, (Congruence.one(6),), m=m), m=m)
    loop = loop_context(z6, m, 0)
    r2 = r_prime(z6, pres, 2, loop=loop)
    r3 = r_prime(z6, pres, 3, loop=loop)
    t2 = [eval_circuit(z6, r2, (x,)) for x in range(6)]
    t3 = [eval_circuit(z6, r3, (x,)) for x in range(6)]
    assert t2[0] == 0 and t3[0] == 0
    # r_2 kills the odd-order part and fixes the 2-part; r_3 symmetrically
    k2 = {x for x in range(6) if (x + x) % 6 == 0}  # {0, 3}
    k3 = {x for x in range(6) if (x + x + x) % 6 == 0}  # {0, 2, 4}
    assert set(t2) == k2 and all(t2[x] == x for x in k2)
    assert set(t3) == k3 and all(t3[x] == x for x in k3)


def test_r_prime_single_prime_block(bundled):
    z4, m = bundled["z4"]
    pres = elementary_refinement(decompose_series(z4, (Congruence.one(4),), m=m), m=m)
    loop = loop_context(z4, m, 0)
    r2 = r_prime(z4, pres, 2, loop=loop)
    assert [eval_circuit(z4, r2, (x,)) for x in range(4)] == [0, 1, 2, 3]


def test_dependence_matrices(bundled):
    z6, m6 = bundled["z6"]
    p6 = elementary_refinement(decompose_series(z6, (Congruence.one(6),), m=m6), m=m6)
    d6 = dependence_matrix(z6, p6, m=m6)
    assert d6[0][1] is False and d6[1][0] is False, "direct product must stay diagonal"
    assert dependence_respects_supernilpotence(p6, d6)

    z4, m4 = bundled["z4"]
    p4 = elementary_refinement(decompose_series(z4, (Congruence.one(4),), m=m4), m=m4)
    d4 = dependence_matrix(z4, p4, m=m4)
    assert d4[0][1] is True, "the carry makes the bottom level read the top"
    assert dependence_respects_supernilpotence(p4, d4)

    tw, mt = bundled["z3xz2_twist"]
    one = Congruence.one(6)
    zeta = higher_commutator(tw, (one, one), m=mt)
    pt = elementary_refinement(decompose_series(tw, (zeta, one), m=mt), m=mt)
    dt = dependence_matrix(tw, pt, m=mt)
    assert dt[0][1] is True
    assert not dependence_respects_supernilpotence(pt, dt)
    assert not is_supernilpotent(tw, one, m=mt)


def test_kernel_projection_homomorphism(bundled):
    tw, mt = bundled["z3xz2_twist"]
    one = Congruence.one(6)
    zeta = higher_commutator(tw, (one, one), m=mt)
    pres = decompose_series(tw, (zeta, one), m=mt)
    d = dependence_matrix(tw, pres, m=mt)
    # no level outside {0} depends on level 0, so dropping it is a homomorphism
    assert all(not d[i][0] for i in range(1, len(pres.levels)))
    assert kernel_projection_is_homomorphism(tw, pres, [0])


def test_presentation_serialization(bundled):
    z4, m = bundled["z4"]
    pres = decompose_series(z4, (cg(z4, [(0, 2)]), Congruence.one(4)), m=m)
    doc = pres.to_json()
    assert doc["sizes"] == [2, 2, 1]
    assert len(doc["twists"]) == 2
