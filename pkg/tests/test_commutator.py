import itertools
import math

import pytest

from maltsev import catalog
from maltsev.commutator import (
    absorbing_at,
    central_series,
    check_centralizes,
    commutator_class_generators,
    derived_series,
    fitting,
    higher_commutator,
    is_supernilpotent,
    supernilpotent_series,
)
from maltsev.algebra import circuit_to_function, eval_circuit
from maltsev.congruence import Congruence, congruence_lattice, meet


def s3_commutator_oracle():
    """Group-theory oracle: [S3,S3] = A3, giving the index-2 coset congruence."""
    alg = catalog.load("s3")
    mul = alg.ops["mul"].table
    inv = alg.ops["inv"].table
    n = alg.size
    comm = set()
    for a in range(n):
        for b in range(n):
            x = mul[mul[mul[inv[a] * n + inv[b]] * n + a] * n + b]
            comm.add(x)
    # normal closure of the commutator set (already a subgroup here)
    blocks = [min(mul[c * n + x] for c in comm) for x in range(n)]
    return Congruence(tuple(blocks))


def test_absorbing_affine_z3_only_constants():
    z3 = catalog.load("z3")
    ws = absorbing_at(z3, 2, (0, 0))
    assert ws, "constants are absorbing"
    for w in ws:
        assert len(set(w.function.table)) == 1, "a nonconstant absorbing affine map exists?"


def test_constants_absorbing_everywhere():
    z4 = catalog.load("z4")
    for anchor in ((0, 0), (1, 3), (2, 2)):
        values = {w.value for w in absorbing_at(z4, 2, anchor)}
        assert values == set(range(4))


def test_s3_commutator_word_absorbing():
    s3 = catalog.load("s3")
    ws = absorbing_at(s3, 2, (0, 0))  # identity permutation has index 0
    nonconst = [w for w in ws if len(set(w.function.table)) > 1]
    assert nonconst, "the commutator word should appear among absorbing members"
    mul, inv, n = s3.ops["mul"].table, s3.ops["inv"].table, 6
    word = tuple(
        mul[mul[mul[inv[a] * n + inv[b]] * n + a] * n + b] for a in range(n) for b in range(n)
    )
    assert word in {w.function.table for w in nonconst}


def test_higher_commutator_k1_is_identity(bundled):
    z4, m = bundled["z4"]
    alpha = congruence_lattice(z4).members[1]
    assert higher_commutator(z4, (alpha,), m=m) == alpha


def test_abelian_commutator_zero(bundled):
    for name in ("z2", "z3", "z4", "z6", "z8", "z2xz2"):
        alg, m = bundled[name]
        one = Congruence.one(alg.size)
        assert higher_commutator(alg, (one, one), m=m).is_zero(), name


def test_s3_commutator_matches_group_oracle(bundled):
    s3, m = bundled["s3"]
    one = Congruence.one(6)
    got = higher_commutator(s3, (one, one), m=m)
    assert got == s3_commutator_oracle()
    assert sorted(map(len, got.block_members())) == [3, 3]


def test_twist_binary_commutator_is_level_kernel(bundled):
    tw, m = bundled["z3xz2_twist"]
    one = Congruence.one(6)
    gamma = higher_commutator(tw, (one, one), m=m)
    # elements are 2*l + v; the kernel of the top projection fixes v
    assert gamma == Congruence(tuple(x % 2 for x in range(6)))


def test_centralizer_trivia(bundled):
    s3, m = bundled["s3"]
    one, zero = Congruence.one(6), Congruence.zero(6)
    assert bool(check_centralizes(s3, (one, one), one, m=m))
    z4, m4 = bundled["z4"]
    one4, zero4 = Congruence.one(4), Congruence.zero(4)
    assert bool(check_centralizes(z4, (one4, one4), zero4, m=m4))
    assert not bool(check_centralizes(s3, (one, one), zero, m=m))


def test_centralizer_multiblock_true_under_cap(bundled):
    z4, m = bundled["z4"]
    one = Congruence.one(4)
    verdict = check_centralizes(z4, (one, one), Congruence.zero(4), block_arities=(2, 1), m=m)
    assert bool(verdict)


def test_series_degrees(bundled):
    z4, m4 = bundled["z4"]
    one4 = Congruence.one(4)
    assert central_series(z4, one4, m=m4).degree == 1

    s3, m3 = bundled["s3"]
    one6 = Congruence.one(6)
    assert derived_series(s3, one6, m=m3).degree == 2
    assert central_series(s3, one6, m=m3).degree is None

    tw, mt = bundled["z3xz2_twist"]
    assert central_series(tw, Congruence.one(6), m=mt).degree == 2
    assert supernilpotent_series(tw, Congruence.one(6), m=mt).degree is None

    t3, m3t = bundled["tower3"]
    assert central_series(t3, Congruence.one(12), m=m3t).degree == 3


def test_supernilpotence_certificates_agree_with_series(bundled):
    for name in ("z4", "z6", "s3", "z3xz2_twist", "tower3"):
        alg, m = bundled[name]
        lat = congruence_lattice(alg)
        for alpha in lat:
            cert = is_supernilpotent(alg, alpha, m=m, lattice=lat)
            series = supernilpotent_series(alg, alpha, m=m)
            assert bool(cert) == (series.degree is not None), (name, alpha)


def test_z6_supernilpotent_via_prime_kernels(bundled):
    z6, m = bundled["z6"]
    cert = is_supernilpotent(z6, Congruence.one(6), m=m)
    assert cert and cert.witnesses is not None
    assert set(cert.primes or ()) <= {2, 3}


def test_twist_full_congruence_not_supernilpotent(bundled):
    tw, m = bundled["z3xz2_twist"]
    assert not is_supernilpotent(tw, Congruence.one(6), m=m)


def test_fitting_lengths(bundled):
    expected = {
        "z2": 1,
        "z3": 1,
        "z4": 1,
        "z6": 1,
        "z8": 1,
        "z2xz2": 1,
        "s3": 2,
        "z3xz2_twist": 2,
        "z2xz3_twist": 2,
        "tower3": 3,
    }
    for name, want in expected.items():
        alg, m = bundled[name]
        fd = fitting(alg, m=m)
        assert fd.length == want, name
        assert len(fd.lower) - 1 == want and len(fd.upper) - 1 == want
        assert fd.lower[0].is_one() and fd.lower[-1].is_zero()
        assert fd.upper[0].is_zero() and fd.upper[-1].is_one()


def test_fitting_congruence_is_maximal_supernilpotent(bundled):
    tw, m = bundled["z3xz2_twist"]
    fd = fitting(tw, m=m)
    lat = congruence_lattice(tw)
    for theta in lat:
        if bool(is_supernilpotent(tw, theta, m=m, lattice=lat)):
            assert theta.leq(fd.fitting_congruence)


def test_class_generators_abelian_empty(bundled):
    z4, m = bundled["z4"]
    one = Congruence.one(4)
    gens = commutator_class_generators(z4, (one, one), zero=0, m=m)
    assert gens == []


def test_class_generators_twist(bundled):
    tw, m = bundled["z3xz2_twist"]
    one = Congruence.one(6)
    gamma = higher_commutator(tw, (one, one), m=m)
    gens = commutator_class_generators(tw, (one, one), zero=0, m=m)
    assert gens, "nontrivial commutator needs generators"
    # the summed images must reproduce the zero block of gamma: {0,2,4}
    block = {x for x in range(6) if gamma.related(x, 0)}
    imgs = set()
    for g in gens:
        f = circuit_to_function(tw, g, 2)
        imgs |= set(f.table)
    assert imgs <= block


def test_class_generators_s3(bundled):
    s3, m = bundled["s3"]
    one = Congruence.one(6)
    gens = commutator_class_generators(s3, (one, one), zero=0, m=m)
    assert gens
    gamma = higher_commutator(s3, (one, one), m=m)
    block = {x for x in range(6) if gamma.related(x, 0)}
    assert len(block) == 3  # the rotation subgroup


def test_hc_join_distribution(bundled):
    """The commutator distributes over joins in one slot on sampled pairs."""
    from maltsev.congruence import join

    for name in ("z4", "z2xz2", "z3xz2_twist"):
        alg, m = bundled[name]
        lat = congruence_lattice(alg)
        for a, b, c in itertools.islice(itertools.product(lat.members, repeat=3), 40):
            left = higher_commutator(alg, (join(alg, a, b), c), m=m)
            right = join(
                alg,
                higher_commutator(alg, (a, c), m=m),
                higher_commutator(alg, (b, c), m=m),
            )
            assert left == right, (name, a, b, c)


def test_hc_quotient_compatibility(bundled):
    """Commutators of images modulo a congruence match images of join-corrected commutators."""
    from maltsev.congruence import join, quotient

    alg, m = bundled["z3xz2_twist"]
    lat = congruence_lattice(alg)
    one = lat.one
    beta = higher_commutator(alg, (one, one), m=m)  # the central kernel
    qalg, proj = quotient(alg, beta)
    from maltsev import catalog

    mq = m  # same circuit works in the quotient
    gamma = higher_commutator(alg, (one, one), m=m)
    lifted = join(alg, gamma, beta)
    image_blocks = {}
    for x in range(alg.size):
        image_blocks.setdefault(proj[x], lifted.block_of(x))
    image = Congruence(tuple(image_blocks[u] for u in range(qalg.size)))
    q_one = Congruence.one(qalg.size)
    assert higher_commutator(qalg, (q_one, q_one), m=mq) == image


def test_hc_laws_pairs_and_triples(bundled):
    """HC1-HC5 on sampled tuples over the four reference algebras."""
    for name in ("z4", "z2xz2", "s3", "z3xz2_twist"):
        alg, m = bundled[name]
        lat = congruence_lattice(alg)
        hc = lambda *cs: higher_commutator(alg, cs, m=m)
        members = lat.members
        for a, b in itertools.product(members, repeat=2):
            g = hc(a, b)
            assert g.leq(meet(a, b))  # HC1
            assert g == hc(b, a)  # HC4
        one = lat.one
        for a in members:
            assert hc(a, one).leq(hc(one, one))  # HC2 instance
        for a, b in itertools.product(members, repeat=2):
            g = hc(a, b)
            for beta in members:
                assert g.leq(beta) == bool(check_centralizes(alg, (a, b), beta, m=m))  # HC5
