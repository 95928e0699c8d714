import math
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from oracles import kronecker_table
from wallcross.errors import GenericityError
from wallcross.lattice import SkewLattice
from wallcross.quiver import (QuiverSpec, canonical_initial_data, dt_invariants, kronecker, kronecker_quiver,
                              quiver_from_lattice, standard_central_charge, standard_truncation, table_to_csv,
                              table_to_json)
from wallcross.scalars import QRational, specialize_q1
from wallcross.suites import random_lattice


def _t(d):
    return {tuple(int(x) for x in k.split()): F(v) for k, v in d.items()}


# frozen from tests/oracles.kronecker_table (brute-force factorization of T_e1 o T_e2), k = 10
FROZEN = {
    0: _t({"1 0": "1", "0 1": "1"}),  # kernel pass-through, the oracle's T's are trivial here
    1: _t({"0 1": "1", "1 0": "1", "1 1": "1"}),
    2: _t({"0 1": "1", "1 0": "1", "1 1": "-2", "1 2": "1", "2 1": "1", "2 3": "1", "3 2": "1", "3 4": "1",
           "4 3": "1", "4 5": "1", "5 4": "1"}),
    3: _t({"0 1": "1", "1 0": "1", "1 1": "3", "1 2": "3", "1 3": "1", "2 1": "3", "2 2": "-6", "2 3": "13",
           "2 4": "-6", "2 5": "3", "3 1": "1", "3 2": "13", "3 3": "18", "3 4": "68", "3 5": "68", "3 6": "18",
           "3 7": "13", "4 2": "-6", "4 3": "68", "4 4": "-84", "4 5": "399", "4 6": "-478", "5 2": "3",
           "5 3": "68", "5 4": "399", "5 5": "465", "6 3": "18", "6 4": "-478", "7 3": "13"}),
}


@pytest.mark.parametrize("m", range(4))
@pytest.mark.parametrize("pipeline", ["rays", "trees"])
def test_kronecker_frozen(m, pipeline):
    assert kronecker(m, 10, pipeline=pipeline) == FROZEN[m]


@pytest.mark.slow
@pytest.mark.parametrize("m", range(1, 4))
def test_frozen_tables_rederived(m):
    assert kronecker_table(m, 10) == FROZEN[m]


def test_kronecker_m1_k8():
    assert kronecker(1, 8) == {(1, 0): 1, (0, 1): 1, (1, 1): 1}


def test_kronecker_m2_k12_both_pipelines():
    want = {(1, 1): -2}
    for n in range(6):
        want[(n, n + 1)] = want[(n + 1, n)] = 1
    assert kronecker(2, 12, pipeline="rays") == want
    assert kronecker(2, 12, pipeline="trees") == want


@pytest.mark.parametrize("m", range(4))
def test_quantum_specializes(m):
    Q = kronecker(m, 8, quantum=True)
    assert all(isinstance(c, QRational) for c in Q.values())
    assert {g: specialize_q1(c) for g, c in Q.items()} == {g: c for g, c in FROZEN[m].items() if sum(g) <= 8}


@pytest.mark.parametrize("m", range(4))
def test_swap_symmetry(m):
    T = kronecker(m, 10)
    assert {(b, a): c for (a, b), c in T.items()} == T


def test_canonical_data():
    a = canonical_initial_data(kronecker_quiver(2), False, 3)
    assert a == {(1, 0): 1, (2, 0): F(1, 4), (3, 0): F(1, 9), (0, 1): 1, (0, 2): F(1, 4), (0, 3): F(1, 9)}
    q = canonical_initial_data(kronecker_quiver(1), True, 3)
    assert q[(0, 2)] == QRational.parse("q^(1/2)/(2 + 2*q)")
    assert {g: specialize_q1(c) for g, c in q.items()} == {g: F(1, sum(g) ** 2) for g in q}


def test_quiver_of_lattice():
    L = SkewLattice(((0, 2, -1), (-2, 0, 3), (1, -3, 0)))
    Q = quiver_from_lattice(L)
    assert Q.arrows == ((0, 2, 0), (0, 0, 3), (1, 0, 0))
    assert Q.lattice == L
    assert kronecker_quiver(3).lattice == SkewLattice.standard(3)
    with pytest.raises(ValueError):
        kronecker_quiver(-1)
    with pytest.raises(ValueError):
        QuiverSpec((1, 2), ((0, -1), (0, 0)))
    with pytest.raises(ValueError):
        QuiverSpec((1, 2), ((0, 1),))


def test_a3():
    A3 = QuiverSpec((1, 2, 3), ((0, 1, 0), (0, 0, 1), (0, 0, 0)))
    want = {g: 1 for g in [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (0, 1, 1), (1, 1, 1)]}
    assert dt_invariants(A3, None, 5, "rays") == want
    assert dt_invariants(A3, None, 5, "trees") == want


def test_zero_arrow_quiver():
    Q = QuiverSpec((1, 2, 3), ((0,) * 3,) * 3)
    want = {(1, 0, 0): 1, (0, 1, 0): 1, (0, 0, 1): 1}
    assert dt_invariants(Q, None, 4) == dt_invariants(Q, None, 4, "trees") == want


def test_empty_and_zero_data():
    Q = kronecker_quiver(2)
    assert dt_invariants(Q, None, 6, init={}) == {}
    assert dt_invariants(Q, None, 6, init={(1, 0): 0, (0, 1): 0}) == {}


def test_bad_pipeline_and_nongeneric_z():
    with pytest.raises(ValueError):
        dt_invariants(kronecker_quiver(1), None, 3, pipeline="fast")
    with pytest.raises(GenericityError) as ei:
        dt_invariants(kronecker_quiver(1), ((1, 1), (1, 1)), 3)
    assert ei.value.suggestion is not None


def test_standard_charge_generic():
    for n in (3, 4):
        re, im = standard_central_charge(n)
        tr = standard_truncation(n, 12)
        seen = {}
        for g in tr.points:
            x = sum(F(r) * a for r, a in zip(re, g))
            y = sum(F(s) * a for s, a in zip(im, g))
            assert y > 0
            seen.setdefault(x / y, set()).add(tuple(a // math.gcd(*g) for a in g))
        assert all(len(v) == 1 for v in seen.values())


@given(st.integers(0, 10 ** 6))
def test_pipelines_agree_random(seed):
    rng = random.Random(seed)
    n = rng.choice([2, 3])
    k = rng.randint(2, 5 if n == 2 else 4)
    Q = quiver_from_lattice(random_lattice(rng, n))
    init = {g: F(rng.randint(-3, 3), rng.randint(1, 3)) for g in standard_truncation(n, k).points if rng.random() < 0.4}
    assert dt_invariants(Q, None, k, "rays", init=init) == dt_invariants(Q, None, k, "trees", init=init)


def test_table_serialization():
    T = kronecker(1, 4)
    assert table_to_json(T) == [{"gamma": [0, 1], "omega": "1"}, {"gamma": [1, 0], "omega": "1"},
                                {"gamma": [1, 1], "omega": "1"}]
    assert table_to_csv(T) == 'gamma,omega\n"0 1",1\n"1 0",1\n"1 1",1\n'
    Q = table_to_json(kronecker(2, 4, quantum=True))
    assert all(isinstance(r["omega"], str) for r in Q)
