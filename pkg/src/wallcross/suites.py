"""Seeded random inputs and the verification suites shared by the CLI and the tests."""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction

from gmpy2 import mpq

from .attractor import initial_data_from_g, psi_inverse
from .group import (GroupElement, PhaseOrder, canonical_coefficient, elementary_T, exp_lie, factorize_logs,
                    group_product, log_group)
from .lattice import DegreeFunction, RationalCone, SkewLattice
from .liealg import DivFreeBackend, LieElement, Truncation, jacobiator, make_backend
from .wcs import WcsSection, round_trip, verify_all_cocycles

BACKENDS = ("torus", "quantum", "divfree")


@dataclass
class SuiteResult:
    name: str
    cases: int = 0
    failures: list = field(default_factory=list)  # reproduction records

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {"suite": self.name, "ok": self.ok, "cases": self.cases, "failures": self.failures}


def octant_truncation(n: int, k: int) -> Truncation:
    return Truncation(RationalCone.octant(n), DegreeFunction((1,) * n), k)


def random_lattice(rng: random.Random, n: int, span: int = 2) -> SkewLattice:
    G = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            x = rng.randint(-span, span)
            G[i][j], G[j][i] = x, -x
    return SkewLattice(G)


def _random_coeff(rng: random.Random, be, gamma):
    if isinstance(be, DivFreeBackend):
        # (r, gamma) s - (s, gamma) r is a random mu with (mu, gamma) = 0
        r, s = ([rng.randint(-2, 2) for _ in range(be.dim2)] for _ in range(2))
        a, b = be.pair(r, gamma), be.pair(s, gamma)
        d = rng.randint(1, 2)
        return tuple(mpq(a * y - b * x, d) for x, y in zip(r, s))
    return mpq(rng.randint(-3, 3), rng.randint(1, 3))


def random_lie_element(rng: random.Random, be, tr: Truncation, density: float = 0.5) -> LieElement:
    terms = {}
    for p in tr.points:
        if be.in_kernel(p) or rng.random() >= density:
            continue
        terms[p] = _random_coeff(rng, be, p)
    return LieElement(be, terms)


def random_group_element(rng: random.Random, n: int, k: int, kind: str = "torus", density: float = 0.5) -> GroupElement:
    L = random_lattice(rng, n)
    be = make_backend(kind, L)
    tr = octant_truncation(n, k)
    return exp_lie(random_lie_element(rng, be, tr, density), tr)


def random_initial_data(rng: random.Random, be, tr: Truncation, density: float = 0.5) -> dict:
    out = {}
    for p in tr.points:
        if be.in_kernel(p) or rng.random() >= density:
            continue
        c = mpq(rng.randint(-3, 3), rng.randint(1, 3))
        if c:
            out[p] = c
    return out


# ---------------------------------------------------------------- suites


def pentagon_factors(kind: str, k: int):
    """(g = T1 T2, expected ordered factors [(ray, group element)]) for <e1, e2> = 1."""
    L = SkewLattice.standard(1)
    be = make_backend(kind, L)
    tr = octant_truncation(2, k)
    if isinstance(be, DivFreeBackend):
        T = {r: elementary_T(be, tr, r, mu=L.iota(r)) for r in ((1, 0), (0, 1))}
        mid = {(n, n): tuple(mpq((-1) ** n, n) * x for x in L.iota((1, 1))) for n in range(1, k // 2 + 1)}
    else:
        T = {r: elementary_T(be, tr, r) for r in ((1, 0), (0, 1))}
        sign = 1 if kind == "torus" else -1  # untwisted backends carry (-1)^n on the middle ray
        mid = {(n, n): canonical_coefficient(be, n) * sign ** n for n in range(1, k // 2 + 1)}
    g = group_product([T[(1, 0)], T[(0, 1)]])
    expected = [((0, 1), T[(0, 1)]), ((1, 1), exp_lie(LieElement(be, mid), tr)), ((1, 0), T[(1, 0)])]
    return g, expected


def pentagon_suite(k: int = 8, kinds=BACKENDS) -> SuiteResult:
    res = SuiteResult("pentagon")
    for kind in kinds:
        g, expected = pentagon_factors(kind, k)
        res.cases += 1
        fs = factorize_logs(g, PhaseOrder((-1, 1), (1, 1), g.trunc.cone))
        got = [(r, L) for r, L in fs]
        want = [(r, log_group(h)) for r, h in expected]
        if got != want or group_product([h for _, h in expected]) != g:
            res.failures.append({"backend": kind, "k": k, "rays": [list(r) for r, _ in got]})
    return res


def round_trip_suite(count: int = 50, seed: int = 0, max_rank: int = 3, max_k: int = 6) -> SuiteResult:
    rng = random.Random(seed)
    res = SuiteResult("round-trip")
    for i in range(count):
        n, k = rng.randint(2, max_rank), rng.randint(2, max_k)
        g = random_group_element(rng, n, k)
        res.cases += 1
        if round_trip(g) != g:
            res.failures.append({"seed": seed, "case": i, "rank": n, "k": k, "g": g.to_json()})
    return res


def psi_suite(count: int = 50, seed: int = 0, max_k: int = 6) -> SuiteResult:
    """psi_inverse then psi is the identity on initial data, and psi then psi_inverse on group elements."""
    rng = random.Random(seed)
    res = SuiteResult("psi")
    for i in range(count):
        n, k = rng.randint(2, 3), rng.randint(2, max_k)
        L = random_lattice(rng, n)
        be = make_backend("torus", L)
        tr = octant_truncation(n, k)
        init = random_initial_data(rng, be, tr)
        g = exp_lie(random_lie_element(rng, be, tr), tr)
        res.cases += 1
        if initial_data_from_g(psi_inverse(init, be, tr)) != init or psi_inverse(initial_data_from_g(g), be, tr) != g:
            res.failures.append({"seed": seed, "case": i, "lattice": L.to_json(), "k": k})
    return res


def cocycle_suite(count: int = 20, seed: int = 0, k_range=(3, 5)) -> SuiteResult:
    rng = random.Random(seed)
    res = SuiteResult("cocycle")
    for i in range(count):
        k = rng.randint(*k_range)
        g = random_group_element(rng, 3, k)
        for plane, side, ok in verify_all_cocycles(WcsSection.of(g)):
            res.cases += 1
            if not ok:
                res.failures.append({"seed": seed, "case": i, "k": k, "plane": [list(v) for v in plane], "side": side})
    return res


def jacobi_suite(count: int = 100, seed: int = 0, k: int = 6, kinds=BACKENDS) -> SuiteResult:
    rng = random.Random(seed)
    res = SuiteResult("jacobi")
    for kind in kinds:
        for i in range(count):
            n = rng.randint(2, 3)
            be = make_backend(kind, random_lattice(rng, n))
            tr = octant_truncation(n, k)
            a, b, c = (random_lie_element(rng, be, tr, 0.3) for _ in range(3))
            res.cases += 1
            if jacobiator(a, b, c, tr):
                res.failures.append({"seed": seed, "backend": kind, "case": i})
    return res


SUITES = {
    "pentagon": lambda k, seed: pentagon_suite(k),
    "round-trip": lambda k, seed: round_trip_suite(20, seed, 3, min(k, 6)),
    "psi": lambda k, seed: psi_suite(20, seed, min(k, 6)),
    "cocycle": lambda k, seed: cocycle_suite(5, seed, (3, min(max(k, 3), 5))),
    "jacobi": lambda k, seed: jacobi_suite(20, seed, min(k, 6)),
}


def run_suites(names, k: int, seed: int = 0) -> list[SuiteResult]:
    if "all" in names:
        names = list(SUITES)
    return [SUITES[n](k, seed) for n in names]
