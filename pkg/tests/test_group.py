import random
from fractions import Fraction

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from wallcross.errors import GenericityError
from wallcross.group import (GroupElement, LineOrder, PhaseOrder, decompose_three, decompose_three_logs,
                             elementary_T, exp_lie, factorize_by_rays, factorize_by_sectors, factorize_logs,
                             group_product, inv, log_group, mul)
from wallcross.lattice import SkewLattice
from wallcross.liealg import LieElement, LieError, make_backend
from wallcross.quiver import standard_central_charge
from wallcross.scalars import QONE, t_minus_inv
from wallcross.suites import (BACKENDS, octant_truncation, pentagon_factors, random_group_element, random_lattice,
                              random_lie_element)

import oracles

STD = SkewLattice.standard(1)
G1 = ((0, 1), (-1, 0))


def images(g):
    """Oracle form of a substitution element: per coordinate, the full series of x_i -> x_i * (...)."""
    out = []
    for h in g.series():
        f = {p: Fraction(c) for p, c in h.items()}
        f[(0,) * g.trunc.dim] = Fraction(1)
        out.append(f)
    return out


def rand_setup(seed, kinds=BACKENDS, k=5):
    rng = random.Random(seed)
    n = rng.randint(2, 3)
    be = make_backend(rng.choice(kinds), random_lattice(rng, n))
    return rng, be, octant_truncation(n, k)


# ---------------------------------------------------------------- exp / log / mul


@pytest.mark.parametrize("kind", BACKENDS)
def test_exp_zero_is_identity(kind):
    be = make_backend(kind, STD)
    tr = octant_truncation(2, 6)
    g = exp_lie(LieElement.zero(be), tr)
    assert g.is_identity()
    assert g == GroupElement.identity(be, tr)
    assert not log_group(g)
    assert inv(g) == g


def test_exp_torus_matches_series_oracle():
    be = make_backend("torus", STD)
    tr = octant_truncation(2, 6)
    a = LieElement(be, {(1, 0): 1})
    g = exp_lie(a, tr)
    assert images(g) == oracles.exp_images(G1, {(1, 0): Fraction(1)}, 6)
    assert log_group(g) == a


@given(st.integers(0, 10 ** 6))
def test_exp_torus_random_matches_oracle(seed):
    rng = random.Random(seed)
    L = random_lattice(rng, 2)
    be = make_backend("torus", L)
    tr = octant_truncation(2, 5)
    a = random_lie_element(rng, be, tr, 0.4)
    log = {p: Fraction(c) for p, c in a.terms.items()}
    assert images(exp_lie(a, tr)) == oracles.exp_images(L.gram, log, 5)


def test_exp_quantum_single_grade():
    be = make_backend("quantum", STD)
    tr = octant_truncation(2, 6)
    g = exp_lie(LieElement(be, {(1, 1): 2}), tr)
    x = t_minus_inv().inverse() * 2
    want = {}
    term, fact = QONE, 1
    for m in range(1, 4):
        term = term * x
        fact *= m
        want[(m, m)] = term / fact
    assert g.series() == want


@given(st.integers(0, 10 ** 6))
def test_exp_log_round_trip(seed):
    rng, be, tr = rand_setup(seed)
    a = random_lie_element(rng, be, tr)
    assert log_group(exp_lie(a, tr)) == a


@given(st.integers(0, 10 ** 6))
def test_group_axioms(seed):
    rng, be, tr = rand_setup(seed, k=4)
    g, h, w = (exp_lie(random_lie_element(rng, be, tr, 0.3), tr) for _ in range(3))
    assert mul(mul(g, h), w) == mul(g, mul(h, w))
    assert mul(g, inv(g)).is_identity()
    assert mul(inv(g), g).is_identity()
    a = random_lie_element(rng, be, tr, 0.3)
    assert inv(exp_lie(a, tr)) == exp_lie(a.scale(-1), tr)


@given(st.integers(0, 10 ** 6))
def test_mul_is_oracle_composition(seed):
    rng = random.Random(seed)
    L = random_lattice(rng, 2)
    be = make_backend("torus", L)
    tr = octant_truncation(2, 5)
    g, h = (exp_lie(random_lie_element(rng, be, tr, 0.4), tr) for _ in range(2))
    assert images(mul(g, h)) == oracles.compose(images(g), images(h), 5)


@pytest.mark.parametrize("kind", BACKENDS)
def test_log_of_commuting_product(kind):
    L = SkewLattice(((0, 1, 0), (-1, 0, 1), (0, -1, 0)))
    be = make_backend(kind, L)
    tr = octant_truncation(3, 6)
    if kind == "divfree":
        a = LieElement(be, {(1, 1, 0): (1, -1, 0)})
        b = LieElement(be, {(2, 2, 0): (0, 0, 1)})
    else:
        # parallel grades off the kernel
        a = LieElement(be, {(1, 1, 0): 3})
        b = LieElement(be, {(2, 2, 0): Fraction(-1, 2)})
    assert log_group(mul(exp_lie(a, tr), exp_lie(b, tr))) == a + b


# ---------------------------------------------------------------- elementary factors


@pytest.mark.parametrize("kind", ["torus", "quantum"])
def test_T_with_zero_exponent(kind):
    be = make_backend(kind, STD)
    assert elementary_T(be, octant_truncation(2, 5), (1, 0), c=0).is_identity()


def test_T_rejects_bad_grades():
    be = make_backend("torus", STD)
    tr = octant_truncation(2, 5)
    with pytest.raises(LieError):
        elementary_T(be, tr, (2, 0))
    with pytest.raises(LieError):
        elementary_T(be, tr, (1, -1))


def test_T_action_on_monomials():
    L = SkewLattice(((0, 1, 0), (-1, 0, 1), (0, -1, 0)))
    be = make_backend("torus", L)
    tr = octant_truncation(3, 3)
    g = elementary_T(be, tr, (1, 0, 0))
    ims = images(g)
    # <(1,0,0), (0,0,1)> = 0: fixed
    assert ims[2] == {(0, 0, 0): 1}
    # <(1,0,0), (0,1,0)> = 1: x_2 -> x_2 (1 - x_1), sign s(1,0,0) = 1
    assert ims[1] == {(0, 0, 0): 1, (1, 0, 0): -1}
    assert ims == oracles.ray_factor(L.gram, (1, 0, 0), 1, 3)


# ---------------------------------------------------------------- pentagon


@pytest.mark.parametrize("kind", BACKENDS)
def test_pentagon_all_backends(kind):
    g, expected = pentagon_factors(kind, 8)
    assert group_product([h for _, h in expected]) == g
    fs = factorize_by_rays(g, PhaseOrder((-1, 1), (1, 1), g.trunc.cone))
    assert [r for r, _ in fs] == [(0, 1), (1, 1), (1, 0)]
    assert [h for _, h in fs] == [h for _, h in expected]


def test_pentagon_torus_unit_factors():
    be = make_backend("torus", STD)
    tr = octant_truncation(2, 8)
    T = lambda r: elementary_T(be, tr, r)  # noqa: E731
    assert mul(T((1, 0)), T((0, 1))) == group_product([T((0, 1)), T((1, 1)), T((1, 0))])
    lhs = oracles.compose(oracles.ray_factor(G1, (1, 0), 1, 8), oracles.ray_factor(G1, (0, 1), 1, 8), 8)
    assert images(mul(T((1, 0)), T((0, 1)))) == lhs


def test_swapping_factors_changes_product():
    g, expected = pentagon_factors("torus", 8)
    hs = [h for _, h in expected]
    assert group_product([hs[1], hs[0], hs[2]]) != g
    assert group_product([hs[0], hs[2], hs[1]]) != g


# ---------------------------------------------------------------- decompose_three


def test_decompose_positive_covector():
    rng = random.Random(3)
    g = random_group_element(rng, 2, 5)
    gm, g0, gp = decompose_three(g, (1, 2))
    assert gm.is_identity() and g0.is_identity() and gp == g


def test_decompose_degree_one():
    be = make_backend("torus", STD)
    tr = octant_truncation(2, 1)
    g = exp_lie(LieElement(be, {(1, 0): 1, (0, 1): 1}), tr)
    gm, g0, gp = decompose_three(g, (1, -1))
    assert gm == exp_lie(LieElement(be, {(0, 1): 1}), tr)
    assert g0.is_identity()
    assert gp == exp_lie(LieElement(be, {(1, 0): 1}), tr)


def _symbolic_decomposition(G, lhs, pts, y, k):
    """All log triples (L-, L0, L+) with the required supports solving exp(L-) exp(L0) exp(L+) = lhs."""
    syms = {p: sympy.Symbol(f"c_{'_'.join(map(str, p))}") for p in pts}
    blocks = [{}, {}, {}]
    for p, s in syms.items():
        v = sum(a * b for a, b in zip(y, p))
        blocks[0 if v < 0 else 1 if v == 0 else 2][p] = s
    exps = [oracles.exp_images(G, b, k) for b in blocks]
    prod = oracles.compose(oracles.compose(exps[0], exps[1], k), exps[2], k)
    eqs = set()
    for i in range(len(G)):
        for e in set(prod[i]) | set(lhs[i]):
            d = sympy.expand(prod[i].get(e, 0) - sympy.Rational(str(lhs[i].get(e, 0))))
            if d != 0:
                eqs.add(d)
    sols = sympy.solve(sorted(eqs, key=str), list(syms.values()), dict=True)
    return [[{p: Fraction(str(sol[s])) for p, s in b.items() if sol[s] != 0} for b in blocks] for sol in sols]


@pytest.mark.parametrize("k,y", [(3, (1, -1)), (3, (2, -1)), (4, (1, -2))])
def test_decompose_three_vs_exhaustive_solve(k, y):
    be = make_backend("torus", STD)
    tr = octant_truncation(2, k)
    g = exp_lie(LieElement(be, {(1, 0): 1, (0, 1): 1}), tr)
    sols = _symbolic_decomposition(G1, images(g), tr.points, y, k)
    assert len(sols) == 1
    got = [{p: Fraction(c) for p, c in L.terms.items()} for L in decompose_three_logs(g, y)]
    assert got == sols[0]


@given(st.integers(0, 10 ** 6))
def test_decompose_three_recombines(seed):
    rng, be, tr = rand_setup(seed)
    g = exp_lie(random_lie_element(rng, be, tr), tr)
    y = tuple(rng.choice([-3, -2, -1, 1, 2, 3]) for _ in range(tr.dim))
    gm, g0, gp = decompose_three(g, y)
    assert group_product([gm, g0, gp]) == g
    Lm, L0, Lp = decompose_three_logs(g, y)
    dot = lambda p: sum(a * b for a, b in zip(y, p))  # noqa: E731
    assert all(dot(p) < 0 for p in Lm.support)
    assert all(dot(p) == 0 for p in L0.support)
    assert all(dot(p) > 0 for p in Lp.support)


# ---------------------------------------------------------------- ray factorization


def test_single_ray_factor():
    be = make_backend("torus", STD)
    tr = octant_truncation(2, 6)
    g = exp_lie(LieElement(be, {(1, 1): 2, (2, 2): -1}), tr)
    assert factorize_by_rays(g, PhaseOrder((-1, 1), (1, 1), tr.cone)) == [((1, 1), g)]


@given(st.integers(0, 10 ** 6))
def test_factorization_recombines_and_refines(seed):
    rng, be, tr = rand_setup(seed, k=5)
    n = tr.dim
    g = exp_lie(random_lie_element(rng, be, tr), tr)
    re, im = standard_central_charge(n)
    order = PhaseOrder(re, im, tr.cone)
    fs = factorize_by_rays(g, order)
    assert group_product([h for _, h in fs], be, tr) == g
    # stability under k -> k+1: truncating the finer factorization reproduces the coarser one
    low = factorize_logs(g.truncate(4), order)
    high = [(r, L.restrict(lambda p: sum(p) <= 4)) for r, L in factorize_logs(g, order)]
    assert low == [(r, L) for r, L in high if L]


def test_line_order():
    g, expected = pentagon_factors("torus", 6)
    fs = factorize_by_rays(g, LineOrder((3, 1), (-1, -3)))
    assert [r for r, _ in fs] == [(0, 1), (1, 1), (1, 0)]
    assert [h for _, h in fs] == [h for _, h in expected]
    # crossing the walls in the other order reads off the two defining factors
    fs = factorize_by_rays(g, LineOrder((1, 3), (-3, -1)))
    assert [r for r, _ in fs] == [(1, 0), (0, 1)]
    with pytest.raises(GenericityError):
        factorize_by_rays(g, LineOrder((1, 1), (-1, -1)))


def test_phase_order_tie_is_error():
    g, _ = pentagon_factors("torus", 4)
    with pytest.raises(GenericityError):
        factorize_by_rays(g, PhaseOrder((1, 1), (1, 1), g.trunc.cone))


# ---------------------------------------------------------------- sectors


RE, IM = (-1, 1), (1, 1)


def test_sectors_single():
    g, _ = pentagon_factors("torus", 8)
    assert factorize_by_sectors(g, RE, IM, [((1, 0), (-1, 0))]) == [g]


def test_sectors_pentagon():
    g, expected = pentagon_factors("torus", 8)
    sectors = [((1, 0), (2, 5)), ((2, 5), (-2, 5)), ((-2, 5), (-1, 0))]
    assert factorize_by_sectors(g, RE, IM, sectors) == [h for _, h in expected]


def test_sectors_identity():
    be = make_backend("torus", STD)
    tr = octant_truncation(2, 5)
    e = GroupElement.identity(be, tr)
    out = factorize_by_sectors(e, RE, IM, [((1, 0), (2, 5)), ((2, 5), (-1, 0))])
    assert all(h.is_identity() for h in out) and len(out) == 2


def test_sectors_boundary_hit():
    g, _ = pentagon_factors("torus", 4)
    with pytest.raises(GenericityError):
        factorize_by_sectors(g, RE, IM, [((1, 0), (0, 1)), ((0, 1), (-1, 0))])


def test_sectors_out_of_order():
    g, _ = pentagon_factors("torus", 4)
    with pytest.raises(GenericityError):
        factorize_by_sectors(g, RE, IM, [((-2, 5), (-1, 0)), ((1, 0), (-2, 5))])


@given(st.integers(0, 10 ** 6), st.sampled_from(["torus", "divfree"]))
def test_exp_act_matches_mul(seed, kind):
    from wallcross.group import _exp_act

    rng = random.Random(seed)
    n = rng.randint(2, 3)
    be = make_backend(kind, random_lattice(rng, n))
    tr = octant_truncation(n, rng.randint(2, 5))
    if kind == "divfree" and any(be.in_kernel(p) for p in tr.points):
        return
    a = random_lie_element(rng, be, tr)
    g = exp_lie(random_lie_element(rng, be, tr), tr)
    assert _exp_act(a, g) == mul(exp_lie(a, tr), g)
