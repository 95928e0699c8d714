"""Wheels of cones: admissibility, the polygon construction, per-monomial H0/H1
classification, compatibility with a rank-2 central charge, and the map from
stability data to tuples of per-face sector products.

Cones of the wheel live in the dual space (covectors); a monomial x^gamma lives in the
lattice and belongs to C^dual iff every generator of C pairs nonnegatively with gamma.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Sequence

from .errors import GenericityError
from .group import GroupElement, PhaseOrder, det2, factorize_by_sectors, group_product
from .lattice import (RationalCone, Vector, cone_hull, cone_intersection, dot, dual_cone, is_zero,
                      nullspace, primitive, rank_of)
from .liealg import Truncation


class WheelError(ValueError):
    """Precondition failure in a wheel construction; ``suggestion`` may carry a fix."""

    def __init__(self, message: str, suggestion=None):
        super().__init__(message)
        self.suggestion = suggestion


@dataclass(frozen=True)
class WheelOfCones:
    cones: tuple[RationalCone, ...]

    def __post_init__(self):
        cones = tuple(self.cones)
        object.__setattr__(self, "cones", cones)
        if len(cones) < 3:
            raise WheelError("a wheel needs at least three cones")
        if len({C.dim for C in cones}) != 1:
            raise WheelError("all cones of a wheel must live in the same space")

    @property
    def m(self) -> int:
        return len(self.cones)

    @property
    def dim(self) -> int:
        return self.cones[0].dim

    @cached_property
    def faces(self) -> tuple[RationalCone, ...]:
        """faces[i] = C_i cap C_{i+1}."""
        return tuple(cone_intersection(self.cones[i], self.cones[(i + 1) % self.m]) for i in range(self.m))

    @cached_property
    def _tests(self) -> tuple[tuple, tuple]:
        return (tuple(C.generators for C in self.cones), tuple(F.generators for F in self.faces))

    def in_vertex_dual(self, i: int, gamma: Sequence[int]) -> bool:
        return all(dot(y, gamma) >= 0 for y in self._tests[0][i])

    def in_face_dual(self, i: int, gamma: Sequence[int]) -> bool:
        return all(dot(y, gamma) >= 0 for y in self._tests[1][i])

    def to_json(self) -> dict:
        return {"cones": [{"generators": [list(g) for g in C.generators]} for C in self.cones]}

    @classmethod
    def from_json(cls, d: dict) -> "WheelOfCones":
        cones = [c["generators"] for c in d["cones"]]
        n = len(cones[0][0])
        return cls(tuple(RationalCone(n, tuple(tuple(int(x) for x in g) for g in gens)) for gens in cones))


# ---------------------------------------------------------------- admissibility


@dataclass
class Report:
    checks: list = field(default_factory=list)  # (clause, ok, detail)

    def add(self, clause: str, ok: bool, detail: str = "") -> bool:
        self.checks.append((clause, bool(ok), detail))
        return ok

    @property
    def ok(self) -> bool:
        return all(c[1] for c in self.checks)

    @property
    def first_failure(self):
        for c in self.checks:
            if not c[1]:
                return c
        return None

    def to_json(self) -> dict:
        return {"ok": self.ok, "checks": [{"clause": c, "ok": o, "detail": d} for c, o, d in self.checks]}


def _is_face(F: RationalCone, C: RationalCone) -> bool:
    """F is a codimension-one face of the full-dimensional cone C."""
    n = C.dim
    if F.dimension() != n - 1:
        return False
    normal = nullspace(F.generators, n)
    if len(normal) != 1:
        return False
    y = normal[0]
    vals = [dot(y, g) for g in C.generators]
    if all(v <= 0 for v in vals):
        y = tuple(-x for x in y)
        vals = [-v for v in vals]
    if not all(v >= 0 for v in vals):
        return False
    on = tuple(g for g, v in zip(C.generators, vals) if v == 0)
    return bool(on) and RationalCone(n, on) == F


def _cyclic_range(a: int, b: int, m: int) -> list[int]:
    """a, a+1, ..., b modulo m."""
    out = [a % m]
    while out[-1] != b % m:
        out.append((out[-1] + 1) % m)
    return out


def check_admissible(w: WheelOfCones) -> Report:
    rep = Report()
    n, m, C, F = w.dim, w.m, w.cones, w.faces
    for i, Ci in enumerate(C):
        if not rep.add("cone", Ci.dimension() == n and Ci.is_strict(), f"C_{i} full-dimensional and strict"):
            return rep
    for i in range(m):
        j = (i + 1) % m
        if not rep.add("face", _is_face(F[i], C[i]) and _is_face(F[i], C[j]),
                       f"C_{i} cap C_{j} is a codimension-one face of both"):
            return rep
    for i, j in itertools.combinations(range(m), 2):
        if not rep.add("interiors", cone_intersection(C[i], C[j]).dimension() < n, f"int C_{i} cap int C_{j} empty"):
            return rep
    for i in range(m):
        if not rep.add("connected-hull", C[i] == cone_hull(F[i - 1], F[i]), f"C_{i} is the hull of its two faces"):
            return rep
    for i, j in itertools.combinations(range(m), 2):
        if (j - i) % m in (0, 1, m - 1):
            continue
        H = cone_hull(F[i], F[j])
        one = all(H.contains_cone(C[k]) for k in _cyclic_range(i + 1, j, m))
        other = all(H.contains_cone(C[k]) for k in _cyclic_range(j + 1, i, m))
        if not rep.add("connected-pairs", one or other, f"hull of faces {i},{j} swallows one side"):
            return rep
    duals = [dual_cone(Ci) for Ci in C]
    rep.add("non-degeneracy", not cone_intersection(*duals).generators, "intersection of duals is {0}")
    return rep


# ---------------------------------------------------------------- polygon construction


def build_polygon_wheel(P: Sequence[Sequence], v: Sequence[Sequence]) -> WheelOfCones:
    """Three cones C_i = hull of R>=0 (u + p), u in {v_i, v_{i+1}}, p a vertex of P."""
    P = [tuple(Fraction(x) for x in p) for p in P]
    if not P or not P[0]:
        raise WheelError("P must be a polytope of positive dimension (n >= 3)")
    k = len(P[0])
    if any(len(p) != k for p in P):
        raise WheelError("vertices of P have inconsistent dimension")
    if any(is_zero(p) for p in P) or dual_cone(RationalCone(k, tuple(primitive(p) for p in P))).generators:
        raise WheelError("0 must be an interior point of P")
    v = [tuple(Fraction(x) for x in u) for u in v]
    if len(v) != 3 or any(len(u) != 2 for u in v):
        raise WheelError("need three vectors in R^2")
    if any(sum(u[c] for u in v) != 0 for c in range(2)) or rank_of(v) != 2:
        raise WheelError("v_1 + v_2 + v_3 must vanish and the v_i must span R^2")
    cones = []
    for i in range(3):
        gens = tuple(primitive(u + p) for u in (v[i], v[(i + 1) % 3]) for p in P)
        cones.append(RationalCone(k + 2, gens))
    return WheelOfCones(tuple(cones))


# ---------------------------------------------------------------- monomial classification


@dataclass(frozen=True)
class MonomialClass:
    kind: str  # Empty | FullPolygon | Interval | MultiInterval
    length: int = 0  # edges in the interval
    vertices: tuple = ()
    edges: tuple = ()

    @property
    def h0(self) -> int:
        return int(self.kind == "FullPolygon")

    @property
    def h1(self) -> int:
        return int(self.kind in ("FullPolygon", "Interval"))

    def to_json(self) -> dict:
        return {"kind": self.kind, "length": self.length, "vertices": list(self.vertices), "edges": list(self.edges),
                "h0": self.h0, "h1": self.h1}


def classify_monomial(w: WheelOfCones, gamma: Sequence[int]) -> MonomialClass:
    """Vertex p_i carries x^gamma iff gamma in C_i^dual; edge i (between p_i and p_{i+1}) iff gamma in C_{i,i+1}^dual."""
    m = w.m
    V = tuple(i for i in range(m) if w.in_vertex_dual(i, gamma))
    E = tuple(i for i in range(m) if w.in_face_dual(i, gamma))
    if not E:
        return MonomialClass("Empty", 0, V, E)
    if len(E) == m and len(V) == m:
        return MonomialClass("FullPolygon", m, V, E)
    Vs, Es = set(V), set(E)
    # edges i-1 and i are glued through vertex i; count maximal runs
    starts = [i for i in E if not ((i - 1) % m in Es and i in Vs)]
    if len(starts) == 1:
        return MonomialClass("Interval", len(E), V, E)
    if not starts:  # every edge glued to the previous one but not all vertices present: impossible
        raise AssertionError("inconsistent monomial support")
    return MonomialClass("MultiInterval", 0, V, E)


def scan_box(w: WheelOfCones, N: int = 20) -> dict:
    """Counts of each class over lattice points with sup-norm at most N."""
    counts = {"Empty": 0, "FullPolygon": 0, "Interval": 0, "MultiInterval": 0}
    witnesses: dict = {}
    for gamma in itertools.product(range(-N, N + 1), repeat=w.dim):
        c = classify_monomial(w, gamma)
        counts[c.kind] += 1
        witnesses.setdefault(c.kind, gamma)
    return {"counts": counts, "witnesses": witnesses}


# ---------------------------------------------------------------- central charge compatibility


def _pseudo_angle(z) -> Fraction:
    """Exact monotone substitute for the counterclockwise angle, values in [0, 4)."""
    x, y = Fraction(z[0]), Fraction(z[1])
    p = y / (abs(x) + abs(y))
    if x < 0:
        return 2 - p
    if y < 0:
        return 4 + p
    return p


def _winds_once(rays: Sequence, clockwise: bool) -> bool:
    m = len(rays)
    sgn = -1 if clockwise else 1
    if any(sgn * det2(rays[i], rays[(i + 1) % m]) <= 0 for i in range(m)):
        return False
    th = [_pseudo_angle(r) for r in rays]
    wraps = sum(1 for i in range(m) if (th[(i + 1) % m] > th[i]) == clockwise)
    return wraps == 1


def face_ray(F: RationalCone, re: Sequence, im: Sequence):
    """The ray relint(F) cap span(re, im), as (a, b) with a re + b im on it, or None."""
    ineq, eq = F.inequalities
    E = [(dot(y, re), dot(y, im)) for y in eq]
    rk = rank_of([tuple(Fraction(x) for x in e) for e in E if e != (0, 0)]) if any(e != (0, 0) for e in E) else 0
    if rk != 1:
        return None
    e = next(e for e in E if e != (0, 0))
    d = (-e[1], e[0])
    for s in (1, -1):
        u = (s * d[0], s * d[1])
        if all(dot(y, re) * u[0] + dot(y, im) * u[1] > 0 for y in ineq):
            return u
    return None


def check_Z_compatible(w: WheelOfCones, re: Sequence, im: Sequence) -> Report:
    rep = Report()
    if not rep.add("rank", rank_of([tuple(Fraction(x) for x in re), tuple(Fraction(x) for x in im)]) == 2, "rk Z = 2"):
        return rep
    rays = []
    for i, F in enumerate(w.faces):
        u = face_ray(F, re, im)
        if not rep.add("open-ray", u is not None, f"relint of face {i} meets the Z-plane in an open ray"):
            return rep
        rays.append(u)
    rep.add("clockwise", _winds_once(rays, clockwise=True), "face rays go once around clockwise")
    return rep


# ---------------------------------------------------------------- compatible wheel construction

DEFAULT_V = ((0, 1), (1, -1), (-1, 0))  # clockwise


def _kernel_complement(re: Sequence, im: Sequence) -> list[Vector]:
    n = len(re)
    rows = [tuple(Fraction(x) for x in re), tuple(Fraction(x) for x in im)]
    out = []
    for j in range(n):
        e = tuple(int(i == j) for i in range(n))
        if rank_of(rows + [e]) > len(rows):
            rows.append(e)
            out.append(e)
    return out


def _wheel_at_scale(re, im, t: Fraction, v) -> WheelOfCones:
    n = len(re)
    kappa = _kernel_complement(re, im)
    cones = []
    for i in range(3):
        gens = []
        for u in (v[i], v[(i + 1) % 3]):
            base = [t * (u[0] * Fraction(a) + u[1] * Fraction(b)) for a, b in zip(re, im)]
            for signs in itertools.product((1, -1), repeat=n - 2):
                c = list(base)
                for s, k in zip(signs, kappa):
                    c = [x + s * y for x, y in zip(c, k)]
                gens.append(primitive(c))
        cones.append(RationalCone(n, tuple(gens)))
    return WheelOfCones(tuple(cones))


def _covers(w: WheelOfCones, S: RationalCone, re, im, v) -> bool:
    """S inside the union of face duals, checked on the pieces where one v_{i+1}.Z dominates."""
    n = w.dim
    zc = [tuple(u[0] * Fraction(a) + u[1] * Fraction(b) for a, b in zip(re, im)) for u in v]
    for i in range(3):
        top = (i + 1) % 3
        normals = tuple(primitive([x - y for x, y in zip(zc[top], zc[j])]) for j in range(3) if j != top)
        piece = cone_intersection(S, dual_cone(RationalCone(n, normals)))
        if not all(w.in_face_dual(i, g) for g in piece.generators):
            return False
    return True


def _kernel_cone(re, im) -> RationalCone:
    n = len(re)
    K = nullspace([tuple(Fraction(x) for x in re), tuple(Fraction(x) for x in im)], n)
    return RationalCone(n, tuple(g for k in K for g in (k, tuple(-x for x in k))))


def construct_compatible_wheel(re: Sequence, im: Sequence, S: Sequence[Sequence[int]], t=None,
                               v: Sequence = DEFAULT_V, max_doublings: int = 64) -> WheelOfCones:
    """Polygon wheel with P = [-1, 1]^(n-2) / t in coordinates where Z is the first two;
    the union of face duals contains the cone S.  Without t, doubles from 1 until it does."""
    n = len(re)
    if n < 3:
        raise WheelError("the polygon construction needs rank >= 3")
    if rank_of([tuple(Fraction(x) for x in re), tuple(Fraction(x) for x in im)]) != 2:
        raise WheelError("rk Z must be 2")
    Sc = RationalCone(n, tuple(tuple(int(x) for x in g) for g in S))
    if Sc.generators:
        if not Sc.is_strict():
            raise WheelError("S must be strict")
        if cone_intersection(Sc, _kernel_cone(re, im)).generators:
            raise WheelError("S meets Ker Z")
    s = Fraction(t) if t is not None else Fraction(1)
    if s <= 0:
        raise WheelError("t must be positive")
    w = _wheel_at_scale(re, im, s, v)
    if _covers(w, Sc, re, im, v):
        return w
    s2 = s
    for _ in range(max_doublings):
        s2 *= 2
        w2 = _wheel_at_scale(re, im, s2, v)
        if _covers(w2, Sc, re, im, v):
            if t is None:
                return w2
            raise WheelError(f"t = {s} is too small; t = {s2} works", suggestion=str(s2))
    raise WheelError("no working scale found")


def minimal_scale(re, im, S, v=DEFAULT_V, max_doublings: int = 64) -> Fraction:
    """Smallest t = 2^j (j >= 0) at which the construction covers S."""
    n = len(re)
    Sc = RationalCone(n, tuple(tuple(int(x) for x in g) for g in S))
    s = Fraction(1)
    for _ in range(max_doublings):
        if _covers(_wheel_at_scale(re, im, s, v), Sc, re, im, v):
            return s
        s *= 2
    raise WheelError("no working scale found")


def rank2_wheel(re: Sequence, im: Sequence, rays: Sequence) -> WheelOfCones:
    """Rank-2 wheel whose faces are the rays a re + b im for (a, b) in ``rays`` (listed clockwise)."""
    if len(re) != 2:
        raise WheelError("rank2_wheel needs a rank-2 lattice")
    cov = [primitive([a * Fraction(x) + b * Fraction(y) for x, y in zip(re, im)]) for a, b in rays]
    m = len(cov)
    return WheelOfCones(tuple(RationalCone(2, (cov[i - 1], cov[i])) for i in range(m)))


# ---------------------------------------------------------------- sector data and coset tuples


@dataclass(frozen=True)
class Sector:
    face: int
    start: tuple
    end: tuple  # counterclockwise from start to end, less than a half-turn


@dataclass
class SectorData:
    """Cyclic decomposition of R^2 into strict sectors, listed counterclockwise."""

    re: tuple
    im: tuple
    sectors: tuple
    cones: tuple | None = None  # C(V) per sector; default trunc cone cap Z^-1(V)

    def __post_init__(self):
        self.re = tuple(Fraction(x) for x in self.re)
        self.im = tuple(Fraction(x) for x in self.im)
        self.sectors = tuple(Sector(s.face, tuple(Fraction(x) for x in s.start), tuple(Fraction(x) for x in s.end))
                             for s in self.sectors)

    def z(self, gamma):
        return (dot(self.re, gamma), dot(self.im, gamma))

    def preimage(self, k: int) -> RationalCone:
        s = self.sectors[k]
        c1 = [s.start[0] * b - s.start[1] * a for a, b in zip(self.re, self.im)]
        c2 = [s.end[1] * a - s.end[0] * b for a, b in zip(self.re, self.im)]
        return dual_cone(RationalCone(len(self.re), tuple(primitive(c) for c in (c1, c2) if not is_zero(c))))

    def cone(self, k: int, trunc: Truncation) -> RationalCone:
        if self.cones is not None:
            return self.cones[k]
        return cone_intersection(trunc.cone, self.preimage(k))

    def refine(self, k: int, ray) -> "SectorData":
        """Split sector k along a ray strictly inside it."""
        s = self.sectors[k]
        if det2(s.start, ray) <= 0 or det2(ray, s.end) <= 0:
            raise WheelError("refining ray must lie strictly inside the sector")
        new = list(self.sectors[:k]) + [Sector(s.face, s.start, ray), Sector(s.face, ray, s.end)] + list(self.sectors[k + 1:])
        cones = None
        if self.cones is not None:
            cones = tuple(self.cones[:k]) + (self.cones[k], self.cones[k]) + tuple(self.cones[k + 1:])
        return SectorData(self.re, self.im, tuple(new), cones)

    def to_json(self) -> dict:
        return {"re": [str(x) for x in self.re], "im": [str(x) for x in self.im],
                "sectors": [{"face": s.face, "start": [str(x) for x in s.start], "end": [str(x) for x in s.end]}
                            for s in self.sectors]}


def validate_sector_data(sd: SectorData, w: WheelOfCones, trunc: Truncation) -> None:
    secs = sd.sectors
    K = len(secs)
    if K < w.m:
        raise WheelError("fewer sectors than faces")
    for k, s in enumerate(secs):
        if det2(s.start, s.end) <= 0:
            raise WheelError(f"sector {k} is not strict")
        nxt = secs[(k + 1) % K]
        if det2(s.end, nxt.start) != 0 or dot(s.end, nxt.start) <= 0:
            raise WheelError(f"sectors {k} and {(k + 1) % K} do not share an edge")
    if not _winds_once([s.start for s in secs], clockwise=False):
        raise WheelError("sectors do not wind once around the origin")
    # faces: contiguous, each present, in decreasing cyclic order counterclockwise
    runs = [secs[0].face]
    for s in secs[1:]:
        if s.face != runs[-1]:
            runs.append(s.face)
    if len(runs) > 1 and runs[0] == runs[-1]:
        runs.pop()
    if sorted(runs) != list(range(w.m)) or any((runs[i] - runs[(i + 1) % len(runs)]) % w.m != 1 for i in range(len(runs))):
        raise WheelError("faces must occupy contiguous runs in clockwise wheel order")
    for gamma in trunc.points:
        z = sd.z(gamma)
        for s in secs:
            if det2(s.start, z) == 0 and dot(s.start, z) > 0:
                raise GenericityError(f"Z{gamma} lies on a sector boundary")
    for k, s in enumerate(secs):
        Ck = sd.cone(k, trunc)
        if not all(all(dot(y, g) > 0 for y in w.faces[s.face].generators) for g in Ck.generators):
            raise WheelError(f"C(V_{k}) is not inside the interior of the dual of face {s.face}")


def polygon_sector_data(re, im, v: Sequence = DEFAULT_V) -> SectorData:
    """Normal fan of conv(v_1, v_2, v_3): the sector where v_{i+1}.z is largest belongs to face i."""
    v = [tuple(Fraction(x) for x in u) for u in v]
    bounds = []
    for a, b in itertools.combinations(range(3), 2):
        c = 3 - a - b
        d = (v[a][1] - v[b][1], v[b][0] - v[a][0])
        if dot(v[c], d) > dot(v[a], d):
            d = (-d[0], -d[1])
        bounds.append(d)
    bounds.sort(key=_pseudo_angle)
    secs = []
    for k in range(3):
        s, e = bounds[k], bounds[(k + 1) % 3]
        mid = (s[0] + e[0], s[1] + e[1])
        top = max(range(3), key=lambda j: dot(v[j], mid))
        secs.append(Sector((top - 1) % 3, s, e))
    j = min(range(3), key=lambda k: (secs[k].face != 0, k))
    return SectorData(re, im, tuple(secs[j:] + secs[:j]))


@dataclass
class CosetTuple:
    entries: tuple  # one group element per wheel face
    order: tuple  # face indices in increasing phase, starting after the support gap

    def product(self) -> GroupElement:
        return group_product([self.entries[i] for i in self.order])

    def to_json(self) -> dict:
        return {"entries": [e.to_json() for e in self.entries], "order": list(self.order)}


def stability_to_coset_tuple(g: GroupElement, w: WheelOfCones, sd: SectorData) -> CosetTuple:
    tr = g.trunc
    validate_sector_data(sd, w, tr)
    secs = sd.sectors
    order = PhaseOrder(sd.re, sd.im, tr.cone)
    cones = [sd.cone(k, tr) for k in range(len(secs))]
    occupied: dict = {}
    for p in tr.points:
        z = sd.z(p)
        hit = [k for k, s in enumerate(secs) if det2(s.start, z) > 0 and det2(z, s.end) > 0]
        if len(hit) != 1 or not cones[hit[0]].contains(p):
            raise WheelError(f"support point {p} escapes the sector cones")
        occupied.setdefault(hit[0], []).append(order.key(p))
    ks = sorted(occupied, key=lambda k: min(occupied[k]))
    factors = factorize_by_sectors(g, sd.re, sd.im, [(secs[k].start, secs[k].end) for k in ks]) if ks else []
    ident = GroupElement.identity(g.backend, tr, g.level)
    per_face: dict = {}
    face_seq: list = []
    for k, A in zip(ks, factors):
        f = secs[k].face
        if face_seq and face_seq[-1] != f and f in per_face:
            raise WheelError("a face recurs across the support of g")
        if not face_seq or face_seq[-1] != f:
            face_seq.append(f)
        per_face.setdefault(f, []).append(A)
    entries = tuple(group_product(per_face[i]) if i in per_face else ident for i in range(w.m))
    start = face_seq[0] if face_seq else 0
    return CosetTuple(entries, tuple((start - j) % w.m for j in range(w.m)))
