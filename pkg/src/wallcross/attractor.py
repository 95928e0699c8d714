"""Attractor flow on the dual space and reconstruction of a WCS from its initial data.

A point (b, gamma) with b(gamma) = 0 flows along b + t iota(gamma).  The value a(b, gamma)
is the gamma-component of log g_0 at b + 0+ iota(gamma); it is constant between crossing
times and equals the initial datum once no crossing is left.  At a crossing the values
on the far side determine the value on the near side through a two-dimensional
refactorization.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cmp_to_key, lru_cache
from typing import Mapping, Sequence

from .errors import GenericityError
from .group import (
    GroupElement,
    RayOrder,
    canonical_coefficient,
    decompose_three_logs,
    exp_lie,
    factorize_logs,
    group_product,
    mul,
)
from .lattice import SkewLattice, Vector, content, dot, parallel, primitive, rank_of, vadd, vsub
from .liealg import DivFreeBackend, LieBackend, LieElement, Truncation

InitialData = dict  # {gamma: Lie fiber coefficient}


@lru_cache(maxsize=256)
def _at_level(trunc: Truncation, d: int) -> Truncation:
    return trunc if d == trunc.k else Truncation(trunc.cone, trunc.phi, d)


def _frac(v) -> tuple:
    return tuple(Fraction(x) for x in v)


@dataclass(frozen=True)
class AttractorPoint:
    b: tuple
    gamma: Vector

    def __post_init__(self):
        object.__setattr__(self, "b", _frac(self.b))
        object.__setattr__(self, "gamma", tuple(int(x) for x in self.gamma))
        if dot(self.b, self.gamma) != 0:
            raise ValueError(f"b(gamma) = {dot(self.b, self.gamma)} is not zero")

    def at(self, lattice: SkewLattice, t) -> tuple:
        io = lattice.iota(self.gamma)
        return tuple(x + t * y for x, y in zip(self.b, io))


@dataclass(frozen=True)
class AttractorGeometry:
    """Lattice, cone and degree function; all queries are bounded by the degree k."""

    lattice: SkewLattice
    trunc: Truncation

    def points_below(self, gamma: Vector) -> list[Vector]:
        """Nonzero points p of the truncation with gamma - p in C or zero."""
        cone = self.trunc.cone
        out = []
        for p in self.trunc.points:
            if p == gamma:
                out.append(p)
                continue
            r = vsub(gamma, p)
            if cone.contains(r) and any(r):
                out.append(p)
        return out

    def in_kernel(self, gamma) -> bool:
        return self.lattice.in_kernel(gamma)


# ---------------------------------------------------------------- crossings and splittings


def crossing_times(geo: AttractorGeometry, p: AttractorPoint, k: int | None = None) -> list[tuple[Fraction, list[tuple[Vector, Vector]]]]:
    """Times t > 0 where b + t iota(gamma) meets a decomposition wall, grouped and sorted."""
    k = geo.trunc.k if k is None else k
    L = geo.lattice
    gamma = p.gamma
    phi = geo.trunc.phi
    events: dict[Fraction, list] = {}
    for g1 in geo.points_below(gamma):
        g2 = vsub(gamma, g1)
        if g1 == gamma or phi(g1) > k or phi(g2) > k or g1 > g2:
            continue
        pr = L.pairing(g1, g2)
        if pr == 0:
            continue
        # b(g1) + t <gamma, g1> = 0 and <gamma, g1> = <g2, g1> = -pr
        t = Fraction(dot(p.b, g1)) / pr
        if t > 0:
            events.setdefault(t, []).append((g1, g2))
    return sorted(events.items())


def splittings(geo: AttractorGeometry, gamma: Vector, k: int | None = None, within: Sequence | None = None) -> list[tuple[Vector, ...]]:
    """Unordered decompositions of gamma into >= 2 distinct non-kernel parts of C, some pair pairing nontrivially.

    ``within``: a covector the parts must annihilate (the vertex position).
    """
    k = geo.trunc.k if k is None else k
    L = geo.lattice
    phi = geo.trunc.phi
    cone = geo.trunc.cone
    cands = [q for q in geo.points_below(gamma) if q != gamma and phi(q) <= k and not L.in_kernel(q)]
    if within is not None:
        cands = [q for q in cands if dot(within, q) == 0]
    cands.sort()
    out = []

    def rec(rem, start, parts):
        if not any(rem):
            if len(parts) >= 2 and any(L.pairing(a, b) for a, b in itertools.combinations(parts, 2)):
                out.append(tuple(parts))
            return
        for i in range(start, len(cands)):
            q = cands[i]
            r = vsub(rem, q)
            if any(r) and not cone.contains(r):
                continue
            rec(r, i + 1, parts + [q])

    rec(tuple(gamma), 0, [])
    return sorted(out)


def is_tail(geo: AttractorGeometry, p: AttractorPoint, k: int | None = None) -> bool:
    return not crossing_times(geo, p, k)


def _first_vertex(geo: AttractorGeometry, p: AttractorPoint, k: int):
    """(t, b_v, plane) for the first crossing, or None; rejects coincident events."""
    cts = crossing_times(geo, p, k)
    if not cts:
        return None
    t, decs = cts[0]
    if rank_of([p.gamma] + [d[0] for d in decs]) > 2:
        raise GenericityError(
            f"crossings of different planes coincide at t={t} for gamma={p.gamma}; perturb b",
            suggestion=_perturbation_hint(geo, p),
        )
    bv = p.at(geo.lattice, t)
    return t, bv, (p.gamma, decs[0][0])


def _perturbation_hint(geo: AttractorGeometry, p: AttractorPoint):
    """A small move of b keeping b(gamma) = 0, as a suggestion for the caller."""
    n = len(p.b)
    g = p.gamma
    for i in range(n):
        for j in range(n):
            if i != j and g[j] != 0:
                d = [Fraction(0)] * n
                d[i] = Fraction(g[j], 1000)
                d[j] = Fraction(-g[i], 1000)
                return tuple(x + y for x, y in zip(p.b, d))
    return p.b


# ---------------------------------------------------------------- trees


@dataclass(frozen=True)
class TreeEdge:
    """Edge starting at ``b`` with velocity ``gamma``; ``t`` is its duration (None for a tail)."""

    b: tuple
    gamma: Vector
    t: Fraction | None
    children: tuple = field(default=())

    def end(self, lattice: SkewLattice) -> tuple | None:
        if self.t is None:
            return None
        io = lattice.iota(self.gamma)
        return tuple(x + self.t * y for x, y in zip(self.b, io))

    def depth(self) -> int:
        return 1 + max((c.depth() for c in self.children), default=0)

    def edges(self):
        yield self
        for c in self.children:
            yield from c.edges()

    def to_json(self) -> dict:
        return {
            "b": [str(x) for x in self.b],
            "gamma": list(self.gamma),
            "t": None if self.t is None else str(self.t),
            "children": [c.to_json() for c in self.children],
        }


AttractorTree = TreeEdge


def tree_to_json(tree: TreeEdge, lattice: SkewLattice) -> dict:
    """Flat dump: edges carry absolute flow times from the root; tails have t_end None."""
    edges, vertices = [], []

    def walk(e: TreeEdge, t0: Fraction):
        t1 = None if e.t is None else t0 + e.t
        edges.append({"gamma": list(e.gamma), "b_start": [str(x) for x in e.b], "t_start": str(t0),
                      "t_end": None if t1 is None else str(t1)})
        if t1 is not None:
            vertices.append({"b": [str(x) for x in e.end(lattice)], "t": str(t1),
                             "out": [list(c.gamma) for c in e.children]})
            for c in e.children:
                walk(c, t1)

    walk(tree, Fraction(0))
    return {"root": {"b": [str(x) for x in tree.b], "gamma": list(tree.gamma)}, "edges": edges, "vertices": vertices}


def enumerate_trees(geo: AttractorGeometry, p: AttractorPoint, k: int | None = None) -> list[TreeEdge]:
    """All attractor trees rooted at p: each edge either is a tail or splits at its first crossing."""
    k = geo.trunc.k if k is None else k
    memo: dict = {}

    def rec(b, gamma):
        key = (b, gamma)
        if key in memo:
            return memo[key]
        q = AttractorPoint(b, gamma)
        v = _first_vertex(geo, q, k)
        if v is None:
            res = [TreeEdge(q.b, gamma, None)]
        else:
            t, bv, _ = v
            res = []
            for parts in splittings(geo, gamma, k, within=bv):
                for combo in itertools.product(*[rec(bv, c) for c in parts]):
                    res.append(TreeEdge(q.b, gamma, t, tuple(combo)))
        memo[key] = res
        return res

    return rec(p.b, p.gamma)


def check_tree(geo: AttractorGeometry, tree: TreeEdge) -> None:
    """Balancing, pairing and flow conditions; raises ValueError on failure."""
    L = geo.lattice
    for e in tree.edges():
        if not geo.trunc.cone.contains(e.gamma):
            raise ValueError(f"velocity {e.gamma} outside the cone")
        if dot(e.b, e.gamma) != 0:
            raise ValueError("edge start is not an attractor point")
        if e.children:
            total = tuple(0 for _ in e.gamma)
            for c in e.children:
                total = vadd(total, c.gamma)
                if c.b != e.end(L):
                    raise ValueError("child does not start at the vertex")
            if total != e.gamma:
                raise ValueError("balancing fails")
            vel = [c.gamma for c in e.children]
            if len(set(vel)) != len(vel):
                raise ValueError("outgoing velocities repeat")
            if not any(L.pairing(a, b) for a, b in itertools.combinations(vel, 2)):
                raise ValueError("no outgoing pair pairs nontrivially")
        elif e.t is not None:
            raise ValueError("finite edge without children")


# ---------------------------------------------------------------- the vertex formula


class _PairingOrder(RayOrder):
    """Total order on the rays of a plane with nonzero pairing: a before b iff <a, b> > 0 (sign s)."""

    def __init__(self, lattice: SkewLattice, rays: Sequence[Vector], sign: int = 1):
        ordered = sorted(rays, key=cmp_to_key(lambda a, b: 0 if parallel(a, b) else (-sign if lattice.pairing(a, b) > 0 else sign)))
        self.rank = {r: i for i, r in enumerate(ordered)}

    def key(self, gamma):
        return self.rank[primitive(gamma)]


def _vertex_trunc(trunc: Truncation, gamma: Vector) -> Truncation:
    return _at_level(trunc, trunc.phi(gamma))


def vertex_wcf(backend: LieBackend, trunc: Truncation, outgoing: Mapping, gamma_in: Vector):
    """Value at gamma_in on the incoming side of a planar vertex, from the outgoing ray values.

    The outgoing values are the initial data of the local group element h in the plane;
    h is their ordered product, and the incoming value is the gamma_in-component of log h_0
    at -iota(gamma_in).
    """
    lat = backend.lattice
    gamma_in = tuple(gamma_in)
    tr = _vertex_trunc(trunc, gamma_in)
    data = {tuple(g): c for g, c in outgoing.items() if c and tr.contains(g)}
    below = {g: c for g, c in data.items() if g == gamma_in or (tr.cone.contains(vsub(gamma_in, g)))}
    if not below:
        return backend.zero()
    vecs = list(below) + [gamma_in]
    if rank_of(vecs) > 2:
        raise GenericityError("vertex data is not planar")
    rays = sorted({primitive(g) for g in vecs})
    if len(rays) == 1:
        return below.get(gamma_in, backend.zero())
    if all(lat.pairing(a, b) == 0 for a, b in itertools.combinations(rays, 2)):
        return below.get(gamma_in, backend.zero())
    out_order = _PairingOrder(lat, rays, 1)
    by_ray: dict = {}
    for g, c in below.items():
        by_ray.setdefault(primitive(g), {})[g] = c
    factors = [exp_lie(LieElement(backend, by_ray[r]), tr) for r in sorted(by_ray, key=out_order.key)]
    h = group_product(factors, backend, tr)
    rays_h = {primitive(p) for p in tr.points if rank_of([rays[0], rays[1], p]) == 2}
    in_order = _PairingOrder(lat, sorted(rays_h | set(rays)), -1)
    return _ray_component(h, in_order, gamma_in)


def _ray_component(h: GroupElement, order: _PairingOrder, gamma: Vector):
    """gamma-component of the log of the ray factor through gamma (h supported in one plane)."""
    r = primitive(gamma)
    for ray, L in factorize_logs(h, _PlaneOrder(order)):
        if ray == r:
            return L.coeff(gamma)
    return h.backend.zero()


class _PlaneOrder(RayOrder):
    """Pairing order on plane points; off-plane points (never in the support) go last."""

    def __init__(self, order: _PairingOrder):
        self.order = order
        self.n = len(order.rank)

    def key(self, p):
        r = primitive(p)
        if r in self.order.rank:
            return (self.order.rank[r], ())
        return (self.n, p)


# ---------------------------------------------------------------- reconstruction


def reconstruct_a(geo: AttractorGeometry, backend: LieBackend, p: AttractorPoint, init: Mapping, k: int | None = None, memo: dict | None = None):
    """a(b, gamma) from initial data by recursion over the first crossing (union of all trees)."""
    k = geo.trunc.k if k is None else k
    memo = {} if memo is None else memo
    init = {tuple(g): c for g, c in init.items()}

    def value(b, gamma):
        key = (b, gamma)
        if key in memo:
            return memo[key]
        q = AttractorPoint(b, gamma)
        v = _first_vertex(geo, q, k)
        if v is None:
            res = init.get(gamma, backend.zero())
        else:
            _, bv, plane = v
            out = {}
            for g in geo.points_below(gamma):
                if dot(bv, g) != 0 or backend.in_kernel(g) or rank_of([*plane, g]) > 2:
                    continue
                val = value(bv, g)
                if val:
                    out[g] = val
            res = vertex_wcf(backend, geo.trunc, out, gamma)
        memo[key] = res
        return res

    return value(p.b, p.gamma)


# ---------------------------------------------------------------- the psi bijection


def _stalk_logs_by_ray(g: GroupElement, pts: Sequence[Vector]) -> dict:
    """gamma-components of log g_0 at iota(gamma), one decomposition per primitive ray."""
    be = g.backend
    lat = be.lattice
    out = {}
    by_ray: dict = {}
    for p in pts:
        by_ray.setdefault(primitive(p), []).append(p)
    for r, group in by_ray.items():
        mid = decompose_three_logs(g, lat.iota(r))[1]
        for p in group:
            c = mid.coeff(p)
            if c:
                out[p] = c
    return out


def initial_data_from_g(g: GroupElement) -> InitialData:
    """psi(g): a(gamma) = gamma-component of log g_0 at iota(gamma), for every non-kernel point."""
    be, tr = g.backend, g.trunc
    pts = [p for p in tr.points[: tr.level_end[g.level]] if not be.in_kernel(p)]
    return dict(sorted(_stalk_logs_by_ray(g, pts).items()))


def psi_inverse(init: Mapping, backend: LieBackend, trunc: Truncation) -> GroupElement:
    """The unique g with psi(g) = init, built one degree at a time by central corrections."""
    if isinstance(backend, DivFreeBackend):
        raise ValueError("initial data are defined for the torus backends only")
    init = {tuple(g): c for g, c in init.items() if c}
    for gpt in init:
        if not trunc.contains(gpt):
            raise ValueError(f"initial datum at {gpt} lies outside the truncation")
        if backend.in_kernel(gpt):
            raise ValueError(f"initial datum at kernel grade {gpt}")
    g = GroupElement.identity(backend, trunc)
    for d in range(1, trunc.k + 1):
        pts = [p for p in trunc.points[trunc.level_end[d - 1]: trunc.level_end[d]] if not backend.in_kernel(p)]
        if not pts:
            continue
        have = _stalk_logs_by_ray(g.truncate(d), pts) if not g.is_identity() else {}
        corr = {}
        for p in pts:
            diff = backend.coerce(p, init.get(p, 0)) - have.get(p, 0)
            if diff:
                corr[p] = diff
        if corr:
            g = mul(g, exp_lie(LieElement(backend, corr), trunc))
    return g


def canonical_initial_data(backend: LieBackend, trunc: Truncation, rays: Sequence[Vector]) -> InitialData:
    """a(n r) = canonical coefficient for each listed primitive r (unit DT invariants)."""
    out = {}
    for r in rays:
        r = tuple(r)
        n = 1
        while True:
            p = tuple(n * x for x in r)
            if not trunc.contains(p):
                break
            out[p] = canonical_coefficient(backend, n)
            n += 1
    return out


# ---------------------------------------------------------------- mass function


def _f(x: Fraction) -> Fraction:
    return x / (1 + abs(x))


def mass_function(lattice: SkewLattice, b: Sequence, gamma: Sequence[int], L: Sequence | None = None) -> Fraction:
    """X(b, gamma) = sum_ij f(b_i) gamma_j <e_i, e_j> + L(gamma), with f(x) = x / (1 + |x|).

    Along b + t iota(gamma) the first term changes by -sum_i (f(x_i(t)) - f(x_i)) xdot_i, so X
    strictly decreases whenever iota(gamma) != 0.
    """
    n = lattice.rank
    b = _frac(b)
    g = lattice.gram
    total = Fraction(0)
    for i in range(n):
        fi = _f(b[i])
        if fi:
            total += fi * sum(gamma[j] * g[i][j] for j in range(n))
    if L is not None:
        total += Fraction(dot(L, gamma))
    return total
