import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from wallcross.attractor import (AttractorGeometry, AttractorPoint, canonical_initial_data, check_tree,
                                 crossing_times, enumerate_trees, initial_data_from_g, is_tail, mass_function, psi_inverse, reconstruct_a, splittings,
                                 tree_to_json, vertex_wcf)
from wallcross.errors import GenericityError
from wallcross.group import GroupElement, decompose_three_logs, exp_lie
from wallcross.lattice import SkewLattice, primitive
from wallcross.liealg import LieElement, make_backend
from wallcross.suites import (octant_truncation, pentagon_factors, random_initial_data, random_lattice,
                              random_lie_element)

STD = SkewLattice.standard(1)
L3 = SkewLattice(((0, 1, 1), (-1, 0, 1), (-1, -1, 0)))


def geometry(L, k):
    return AttractorGeometry(L, octant_truncation(L.rank, k))


# ---------------------------------------------------------------- independent oracles


def brute_splittings(L, gamma, k):
    """Subsets of the box below gamma summing to gamma, >= 2 parts, some pair pairing nontrivially."""
    box = [v for v in itertools.product(*(range(x + 1) for x in gamma))
           if any(v) and v != tuple(gamma) and sum(v) <= k and not L.in_kernel(v)]
    out = []
    for r in range(2, len(box) + 1):
        for parts in itertools.combinations(box, r):
            if tuple(map(sum, zip(*parts))) == tuple(gamma) and any(
                    L.pairing(a, b) for a, b in itertools.combinations(parts, 2)):
                out.append(tuple(sorted(parts)))
    return sorted(out)


def count_trees(L, b, gamma, k, memo=None):
    memo = {} if memo is None else memo
    key = (b, gamma)
    if key in memo:
        return memo[key]
    times = []
    for g1 in itertools.product(*(range(x + 1) for x in gamma)):
        g2 = tuple(x - y for x, y in zip(gamma, g1))
        if not any(g1) or not any(g2):
            continue
        pr = L.pairing(g1, g2)
        if pr:
            t = sum(Fraction(x) * y for x, y in zip(b, g1)) / pr
            if t > 0:
                times.append(t)
    if not times:
        memo[key] = 1
        return 1
    t = min(times)
    io = L.iota(gamma)
    bv = tuple(x + t * y for x, y in zip(b, io))
    total = 0
    for parts in brute_splittings(L, gamma, k):
        if any(sum(x * y for x, y in zip(bv, p)) for p in parts):
            continue
        c = 1
        for p in parts:
            c *= count_trees(L, bv, p, k, memo)
        total += c
    memo[key] = total
    return total


# ---------------------------------------------------------------- crossings and tails


def test_crossing_times_examples():
    geo = geometry(STD, 4)
    assert crossing_times(geo, AttractorPoint((1, -1), (1, 1))) == [(1, [((0, 1), (1, 0))])]
    assert crossing_times(geo, AttractorPoint((-1, 1), (1, 1))) == []
    assert crossing_times(geo, AttractorPoint((0, 3), (1, 0))) == []


def test_attractor_point_requires_b_gamma_zero():
    with pytest.raises(ValueError):
        AttractorPoint((1, 0), (1, 1))


@given(st.integers(0, 10 ** 6))
def test_crossings_solve_the_wall_equation(seed):
    rng = random.Random(seed)
    L = random_lattice(rng, 3)
    gamma = tuple(rng.randint(0, 2) for _ in range(3))
    assume(any(gamma))
    u = (gamma[1], -gamma[0], 0) if gamma[:2] != (0, 0) else (1, 0, 0)
    v = (0, gamma[2], -gamma[1]) if gamma[1:] != (0, 0) else (0, 1, 0)
    c1, c2 = rng.randint(-3, 3), rng.randint(-3, 3)
    b = tuple(c1 * x + c2 * y for x, y in zip(u, v))
    p = AttractorPoint(b, gamma)
    geo = geometry(L, 4)
    for t, decs in crossing_times(geo, p):
        assert t > 0
        y = p.at(L, t)
        for g1, g2 in decs:
            assert sum(a * c for a, c in zip(y, g1)) == 0
            assert L.pairing(g1, g2) != 0


def test_is_tail_examples():
    geo = geometry(STD, 4)
    assert not is_tail(geo, AttractorPoint((1, -1), (1, 1)))
    assert is_tail(geo, AttractorPoint((-1, 1), (1, 1)))
    assert is_tail(geo, AttractorPoint((0, 5), (1, 0)))
    p = AttractorPoint((1, -1), (1, 1))
    last = crossing_times(geo, p)[-1][0]
    assert is_tail(geo, AttractorPoint(p.at(STD, last + Fraction(1, 2)), (1, 1)))


# ---------------------------------------------------------------- splittings


def test_splitting_examples():
    geo = geometry(STD, 4)
    assert splittings(geo, (1, 1)) == [((0, 1), (1, 0))]
    assert splittings(geo, (2, 0)) == []


@pytest.mark.parametrize("m,gamma,k", [(1, (2, 2), 4), (2, (2, 2), 4), (1, (3, 2), 5), (3, (3, 3), 6)])
def test_splittings_vs_brute_force(m, gamma, k):
    L = SkewLattice.standard(m)
    assert splittings(geometry(L, k), gamma) == brute_splittings(L, gamma, k)


def test_splittings_rank3_vs_brute_force():
    for gamma in [(1, 1, 1), (2, 1, 1), (2, 2, 1)]:
        assert splittings(geometry(L3, 5), gamma) == brute_splittings(L3, gamma, 5)


# ---------------------------------------------------------------- trees


def test_single_vertex_tree():
    geo = geometry(STD, 4)
    (tree,) = enumerate_trees(geo, AttractorPoint((1, -1), (1, 1)))
    assert tree.t == 1
    assert sorted(c.gamma for c in tree.children) == [(0, 1), (1, 0)]
    assert all(c.t is None for c in tree.children)
    check_tree(geo, tree)


def test_bare_tail_tree():
    geo = geometry(STD, 4)
    (tree,) = enumerate_trees(geo, AttractorPoint((0, 1), (1, 0)))
    assert tree.t is None and not tree.children


def test_kronecker2_tree_count():
    L = SkewLattice.standard(2)
    geo = geometry(L, 4)
    trees = enumerate_trees(geo, AttractorPoint((1, -1), (2, 2)))
    assert len(trees) == count_trees(L, (Fraction(1), Fraction(-1)), (2, 2), 4) > 1
    for t in trees:
        check_tree(geo, t)


@pytest.mark.parametrize("gamma,b", [((1, 1, 1), (3, -1, -2)), ((2, 1, 1), (1, -3, 1)), ((2, 2, 1), (1, -2, 2)),
                                     ((1, 2, 1), (5, -2, -1))])
def test_rank3_tree_count(gamma, b):
    geo = geometry(L3, 5)
    trees = enumerate_trees(geo, AttractorPoint(b, gamma))
    assert len(trees) == count_trees(L3, tuple(map(Fraction, b)), gamma, 5)
    for t in trees:
        check_tree(geo, t)
        assert t.depth() <= sum(gamma)
        assert all(geo.trunc.cone.contains(e.gamma) for e in t.edges())


def test_coincident_crossings_rejected():
    # in rank 3, b = (1, -1, 0) meets two different planes at the same time for gamma = (1, 1, 1)
    L = SkewLattice(((0, 1, 1), (-1, 0, 1), (-1, -1, 0)))
    geo = geometry(L, 3)
    bad = []
    for b in itertools.product(range(-2, 3), repeat=3):
        if sum(b) != 0:
            continue
        try:
            enumerate_trees(geo, AttractorPoint(b, (1, 1, 1)))
        except GenericityError as e:
            bad.append(e)
    assert bad and all(e.suggestion is not None for e in bad)


def test_tree_json():
    geo = geometry(STD, 4)
    (tree,) = enumerate_trees(geo, AttractorPoint((1, -1), (1, 1)))
    js = tree_to_json(tree, STD)
    assert js["root"] == {"b": ["1", "-1"], "gamma": [1, 1]}
    assert js["vertices"] == [{"b": ["0", "0"], "t": "1", "out": [list(c.gamma) for c in tree.children]}]
    assert [e["t_end"] for e in js["edges"]] == ["1", None, None]


def test_check_tree_rejects_broken_balance():
    from wallcross.attractor import TreeEdge
    geo = geometry(STD, 4)
    (tree,) = enumerate_trees(geo, AttractorPoint((1, -1), (1, 1)))
    broken = TreeEdge(tree.b, tree.gamma, tree.t, tree.children[:1])
    with pytest.raises(ValueError):
        check_tree(geo, broken)


# ---------------------------------------------------------------- vertex formula


def test_vertex_abelian():
    be = make_backend("torus", SkewLattice(((0, 1, -1), (-1, 0, 1), (1, -1, 0))))
    tr = octant_truncation(3, 4)
    # parallel data: nothing to refactorize
    assert vertex_wcf(be, tr, {(1, 1, 0): 2, (2, 2, 0): 3}, (2, 2, 0)) == 3
    # rays (1,1,0) and (0,0,1) pair to zero, so the incoming value is the outgoing one
    assert be.lattice.pairing((1, 1, 0), (0, 0, 1)) == 0
    assert vertex_wcf(be, tr, {(1, 1, 0): 2, (0, 0, 1): 5, (1, 1, 1): 7}, (1, 1, 1)) == 7


def test_vertex_pentagon():
    be = make_backend("torus", STD)
    tr = octant_truncation(2, 2)
    assert vertex_wcf(be, tr, {(1, 0): 1, (0, 1): 1, (1, 1): 0}, (1, 1)) == 1


def test_vertex_pentagon_quantum():
    # untwisted quantum generators: the middle ray carries the sign (-1)^n
    be = make_backend("quantum", STD)
    tr = octant_truncation(2, 2)
    c = be.coerce((1, 0), 1)
    assert vertex_wcf(be, tr, {(1, 0): c, (0, 1): c}, (1, 1)) == -c


def test_vertex_kronecker2():
    be = make_backend("torus", SkewLattice.standard(2))
    tr = octant_truncation(2, 2)
    assert vertex_wcf(be, tr, {(1, 0): 1, (0, 1): 1}, (1, 1)) == -2


# ---------------------------------------------------------------- reconstruction


def test_reconstruct_examples():
    be = make_backend("torus", STD)
    geo = geometry(STD, 4)
    p = AttractorPoint((1, -1), (1, 1))
    assert reconstruct_a(geo, be, p, {}) == 0
    init = canonical_initial_data(be, geo.trunc, [(1, 0), (0, 1)])
    assert reconstruct_a(geo, be, p, init) == 1
    # downstream of the wall the tail value is the initial datum itself
    assert reconstruct_a(geo, be, AttractorPoint((-1, 1), (1, 1)), init) == 0
    # locally constant: another point on the same side of the wall
    assert reconstruct_a(geo, be, AttractorPoint((3, -3), (1, 1)), init) == 1


@given(st.integers(0, 10 ** 6))
def test_reconstruct_matches_stalk_of_psi_inverse(seed):
    rng = random.Random(seed)
    L = random_lattice(rng, 2, 3)
    assume(L.gram[0][1] != 0)
    k = rng.randint(2, 6)
    be = make_backend("torus", L)
    tr = octant_truncation(2, k)
    geo = AttractorGeometry(L, tr)
    init = random_initial_data(rng, be, tr, 0.5)
    g = psi_inverse(init, be, tr)
    memo = {}
    for gamma in tr.points:
        u = (gamma[1], -gamma[0])
        for sgn in (1, -1):
            b = (sgn * u[0], sgn * u[1])
            got = reconstruct_a(geo, be, AttractorPoint(b, gamma), init, memo=memo)
            io = L.iota(gamma)
            eps = Fraction(1, 1000)
            y = tuple(x + eps * z for x, z in zip(b, io))
            want = decompose_three_logs(g, y)[1].coeff(gamma)
            assert got == want, (gamma, b)


def test_reconstruct_rank3_matches_stalk():
    rng = random.Random(7)
    be = make_backend("torus", L3)
    tr = octant_truncation(3, 4)
    geo = AttractorGeometry(L3, tr)
    init = random_initial_data(rng, be, tr, 0.6)
    g = psi_inverse(init, be, tr)
    checked = 0
    for gamma in tr.points:
        for b in [(gamma[1] - 3 * gamma[2], -gamma[0] + 2 * gamma[2], 3 * gamma[0] - 2 * gamma[1])]:
            if not any(b) or sum(x * y for x, y in zip(b, gamma)) != 0:
                continue
            try:
                got = reconstruct_a(geo, be, AttractorPoint(b, gamma), init)
            except GenericityError:
                continue
            y = tuple(Fraction(x) + Fraction(1, 1000) * z for x, z in zip(b, L3.iota(gamma)))
            assert got == decompose_three_logs(g, y)[1].coeff(gamma), gamma
            checked += 1
    assert checked >= 10


# ---------------------------------------------------------------- psi


def test_psi_single_ray():
    be = make_backend("torus", STD)
    tr = octant_truncation(2, 6)
    a = LieElement(be, {(1, 2): 3, (2, 4): Fraction(-1, 2)})
    g = exp_lie(a, tr)
    assert initial_data_from_g(g) == {(1, 2): 3, (2, 4): Fraction(-1, 2)}
    assert psi_inverse(dict(a.terms), be, tr) == g


def test_psi_pentagon():
    g, _ = pentagon_factors("torus", 6)
    init = initial_data_from_g(g)
    want = {}
    for r in ((1, 0), (0, 1), (1, 1)):
        for n in range(1, 7):
            p = (n * r[0], n * r[1])
            if sum(p) <= 6:
                want[p] = Fraction(1, n * n)
    # T1 T2 has only the two defining rays in its initial data: the middle ray appears after the wall
    assert {p: c for p, c in init.items() if primitive(p) != (1, 1)} == {p: c for p, c in want.items()
                                                                        if primitive(p) != (1, 1)}
    assert psi_inverse(init, g.backend, g.trunc) == g


def test_psi_zero():
    be = make_backend("quantum", STD)
    tr = octant_truncation(2, 5)
    assert psi_inverse({}, be, tr) == GroupElement.identity(be, tr)
    assert initial_data_from_g(GroupElement.identity(be, tr)) == {}


def test_psi_rejects_bad_data():
    be = make_backend("torus", STD)
    tr = octant_truncation(2, 3)
    with pytest.raises(ValueError):
        psi_inverse({(2, 2): 1}, be, tr)
    with pytest.raises(ValueError):
        psi_inverse({(1, 0): 1}, make_backend("divfree", STD), tr)


@given(st.integers(0, 10 ** 6), st.sampled_from(["torus", "quantum"]))
def test_psi_round_trips(seed, kind):
    rng = random.Random(seed)
    n = rng.randint(2, 3)
    be = make_backend(kind, random_lattice(rng, n))
    tr = octant_truncation(n, rng.randint(2, 4))
    if kind == "torus":
        init = random_initial_data(rng, be, tr)
        assert initial_data_from_g(psi_inverse(init, be, tr)) == init
    g = exp_lie(random_lie_element(rng, be, tr), tr)
    assert psi_inverse(initial_data_from_g(g), be, tr) == g


@given(st.integers(0, 10 ** 6))
def test_psi_injective(seed):
    rng = random.Random(seed)
    be = make_backend("torus", random_lattice(rng, 2))
    tr = octant_truncation(2, 5)
    g, h = (exp_lie(random_lie_element(rng, be, tr), tr) for _ in range(2))
    assert (g == h) == (initial_data_from_g(g) == initial_data_from_g(h))


# ---------------------------------------------------------------- mass function


def test_mass_function_at_origin():
    assert mass_function(STD, (0, 0), (3, 1)) == 0
    assert mass_function(STD, (0, 0), (3, 1), (1, 2)) == 5


def test_mass_function_decreases_on_random_flows():
    rng = random.Random(0)
    for _ in range(100):
        L = random_lattice(rng, 2, 3)
        gamma = (rng.randint(0, 4), rng.randint(0, 4))
        if L.in_kernel(gamma):
            continue
        u = (gamma[1], -gamma[0])
        c = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
        b = tuple(c * x for x in u)
        p = AttractorPoint(b, gamma)
        Lc = (rng.randint(-3, 3), rng.randint(-3, 3))
        ts = sorted({Fraction(rng.randint(1, 40), rng.randint(1, 8)) for _ in range(5)})
        vals = [mass_function(L, p.at(L, t), gamma, Lc) for t in [Fraction(0)] + ts]
        assert all(a > b for a, b in zip(vals, vals[1:]))
