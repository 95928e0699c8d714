"""Wall-crossing structures on the dual of a lattice, encoded by one group element.

A section is a group element g.  Its stalk at a covector y is the middle factor of
g = g_minus g_zero g_plus; at a point of a single wall this is the jump across that
wall, oriented from the side where y(gamma) > 0 to the side where y(gamma) < 0.
Multiplying the jumps met along a segment from the positive region to the negative
region, in crossing order, gives back g.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key
from typing import Mapping, Sequence

from .errors import GenericityError, InvariantError
from .group import (
    GroupElement,
    LineOrder,
    PhaseOrder,
    canonical_coefficient,
    decompose_three_logs,
    det2,
    exp_lie,
    group_product,
    inv,
    log_group,
    mul,
    peel,
    _support_closure,
    ray_blocks,
)
from .lattice import Vector, content, dot, is_zero, nullspace, parallel, primitive, rank_of, vscale
from .liealg import LieBackend, LieElement, QuantumTorusBackend, TorusBackend, Truncation
from .scalars import QRational, specialize_q1, t_minus_inv

_TMI = t_minus_inv()


@dataclass(frozen=True)
class WcsSection:
    backend: LieBackend
    trunc: Truncation
    g: GroupElement

    @classmethod
    def of(cls, g: GroupElement) -> "WcsSection":
        return cls(g.backend, g.trunc, g)

    def stalk(self, y: Sequence) -> GroupElement:
        return stalk_at(self, y)

    def to_json(self) -> dict:
        return {"backend": self.backend.to_json(), **self.trunc.to_json(), "log_g": log_group(self.g).to_json()}


def stalk_at(s: WcsSection | GroupElement, y: Sequence) -> GroupElement:
    g = s.g if isinstance(s, WcsSection) else s
    if is_zero(y):
        return g
    y = _int_covector(y)
    pts = g.trunc.points
    vals = [dot(y, pts[i]) for i in _support_closure(g)]
    if all(v != 0 for v in vals):
        return GroupElement.identity(g.backend, g.trunc, g.level)
    if all(v == 0 for v in vals):
        return g
    mid = decompose_three_logs(g, y)[1]
    return exp_lie(mid, g.trunc, g.level)


def _int_covector(y: Sequence) -> tuple:
    """Positive integer multiple of a rational covector (stalks only see signs)."""
    if all(type(x) is int for x in y):
        return tuple(y)
    fr = [Fraction(x) for x in y]
    m = 1
    for x in fr:
        m = m * x.denominator // math.gcd(m, x.denominator)
    return tuple(int(x * m) for x in fr)


# ---------------------------------------------------------------- strata and jumps


@dataclass(frozen=True)
class WallStratum:
    gamma: Vector
    y: tuple

    def validate(self, trunc: Truncation, level: int | None = None) -> None:
        if content(self.gamma) != 1:
            raise ValueError(f"wall label {self.gamma} is not primitive")
        if dot(self.y, self.gamma) != 0:
            raise ValueError(f"point {self.y} is not on the wall of {self.gamma}")
        d = trunc.k if level is None else level
        for p in trunc.points[: trunc.level_end[d]]:
            if not parallel(p, self.gamma) and dot(self.y, p) == 0:
                raise GenericityError(
                    f"point {self.y} lies on the walls of both {self.gamma} and {primitive(p)}"
                )


def jump_at_stratum(s: WcsSection, tau: WallStratum) -> GroupElement:
    tau.validate(s.trunc, s.g.level)
    j = stalk_at(s, tau.y)
    for gamma in log_group(j).terms:
        if not parallel(gamma, tau.gamma):
            raise InvariantError(f"jump on the wall of {tau.gamma} has a component at {gamma}")
    return j


def _frac(v):
    return tuple(Fraction(x) for x in v)


def generic_segment(trunc: Truncation, attempts: int = 64) -> tuple[tuple, tuple]:
    """Deterministic endpoints y_plus (positive on C) and y_minus (negative on C) of a generic segment."""
    n = trunc.dim
    phi = trunc.phi.coeffs
    big = 1 + max((max(abs(x) for x in p) for p in trunc.points), default=1)
    for a in range(attempts):
        eps = Fraction(1, (4 * big * (a + 2)) ** 2)
        w1 = [eps * Fraction((j + 1) * (a + 3) ** j, big ** j) for j in range(n)]
        w2 = [eps * Fraction((-1) ** j * (j + 2), (a + 5) ** j) for j in range(n)]
        yp = tuple(phi[j] + w1[j] for j in range(n))
        ym = tuple(-phi[j] + w2[j] for j in range(n))
        if not all(dot(yp, g) > 0 > dot(ym, g) for g in trunc.cone.generators):
            continue
        try:
            ray_blocks(trunc, LineOrder(yp, ym))
        except GenericityError:
            continue
        return yp, ym
    raise GenericityError("could not find a generic segment")


@dataclass(frozen=True)
class Crossing:
    """One wall crossing along a path: the wall of ``gamma`` at parameter ``t`` and point ``y``."""

    gamma: Vector
    t: Fraction
    y: tuple
    jump: GroupElement


def jumps_along_line(s: WcsSection, y_plus: Sequence | None = None, y_minus: Sequence | None = None) -> list[Crossing]:
    """S1 -> S2: the nontrivial jumps met along a generic segment from U_plus to U_minus."""
    tr, g = s.trunc, s.g
    if y_plus is None or y_minus is None:
        y_plus, y_minus = generic_segment(tr)
    order = LineOrder(y_plus, y_minus)
    rays, block = ray_blocks(tr, order)
    logs = peel(g, block.__getitem__, len(rays))
    out = []
    for r, L in zip(rays, logs):
        if not L.terms:
            continue
        t = order.key(r)
        y = tuple((1 - t) * a + t * b for a, b in zip(order.y_start, order.y_end))
        out.append(Crossing(r, t, y, exp_lie(L, tr, g.level)))
    return out


def g_plus_minus(jumps: Sequence[Crossing], backend=None, trunc=None, level=None) -> GroupElement:
    """S3 -> S1: ordered product of the jumps along a generic segment."""
    ts = [c.t for c in jumps]
    if len(set(ts)) != len(ts):
        raise GenericityError("two walls are crossed at the same time")
    ordered = sorted(jumps, key=lambda c: c.t)
    return group_product([c.jump for c in ordered], backend, trunc, level)


def round_trip(g: GroupElement) -> GroupElement:
    """S1 -> S2 -> S3 -> S1 through stalks on a generic segment."""
    s = WcsSection.of(g)
    crossings = jumps_along_line(s)
    # S2 -> S3: the jumps are re-read as stalks at the crossing points
    restalked = [Crossing(c.gamma, c.t, c.y, jump_at_stratum(s, WallStratum(c.gamma, c.y))) for c in crossings]
    return g_plus_minus(restalked, g.backend, g.trunc, g.level)


# ---------------------------------------------------------------- chambers on walls


def _angle_cmp(a, b) -> int:
    """Counterclockwise angle comparison from the positive x axis, for nonzero 2-vectors."""

    def half(v):
        return 0 if (v[1] > 0 or (v[1] == 0 and v[0] > 0)) else 1

    ha, hb = half(a), half(b)
    if ha != hb:
        return -1 if ha < hb else 1
    d = det2(a, b)
    return -1 if d > 0 else (1 if d < 0 else 0)


def sort_by_angle(vs):
    return sorted(vs, key=cmp_to_key(_angle_cmp))


def _chamber_directions(lines: Sequence[tuple]) -> list[tuple]:
    """One interior direction per sector cut out of R^2 by lines through 0 with given normals."""
    dirs = []
    for a, b in lines:
        d = (b, -a)
        dirs.extend([d, (-d[0], -d[1])])
    uniq = []
    for d in sort_by_angle(dirs):
        if not uniq or _angle_cmp(uniq[-1], d) != 0:
            uniq.append(d)
    if not uniq:
        return [(1, 0)]
    if len(uniq) == 2:
        d = uniq[0]
        return [(-d[1], d[0]), (d[1], -d[0])]
    out = []
    for i, d in enumerate(uniq):
        e = uniq[(i + 1) % len(uniq)]
        out.append((d[0] + e[0], d[1] + e[1]))
    return out


def wall_chamber_points(trunc: Truncation, gamma: Vector, level: int | None = None) -> list[tuple]:
    """One point in each chamber of the wall of gamma cut by the other walls (rank <= 3)."""
    n = trunc.dim
    d = trunc.k if level is None else level
    pts = trunc.points[: trunc.level_end[d]]
    if n == 1:
        return [(0,)]
    basis = nullspace([gamma], n)
    others = [p for p in pts if not parallel(p, gamma)]
    if n == 2:
        u = basis[0]
        return [u, vscale(-1, u)] if others else [u]
    if n == 3:
        u, v = basis
        lines = []
        for p in others:
            a, b = dot(u, p), dot(v, p)
            if (a, b) != (0, 0):
                lines.append((a, b))
        return [tuple(c * x + e * z for x, z in zip(u, v)) for c, e in _chamber_directions(lines)]
    raise NotImplementedError("wall chambers are enumerated for rank <= 3 only")


def support_of(s: WcsSection) -> set[tuple[Vector, int]]:
    """(primitive ray, degree) pairs carrying nonzero jump components somewhere on the wall."""
    tr, g = s.trunc, s.g
    out = set()
    rays = sorted({primitive(p) for p in tr.points[: tr.level_end[g.level]]})
    for r in rays:
        if s.backend.in_kernel(r):
            continue
        for y in wall_chamber_points(tr, r, g.level):
            for gamma in log_group(stalk_at(s, y)).terms:
                out.add((primitive(gamma), tr.phi(gamma)))
    return out


# ---------------------------------------------------------------- cocycle around codimension 2


@dataclass(frozen=True)
class CodimTwoLocus:
    """rho = annihilator of the rank-2 sublattice spanned by ``plane``; ``y0`` a generic point of rho."""

    plane: tuple[Vector, Vector]
    y0: tuple


@dataclass(frozen=True)
class LoopCrossing:
    gamma: Vector
    direction: tuple  # point of the normal plane, in (u, v) coordinates
    y: tuple  # actual covector y0 + eps (a u + b v)
    sign: int  # +1: crossing from gamma > 0 to gamma < 0


def codim_two_strata(trunc: Truncation, level: int | None = None) -> list[tuple[Vector, Vector]]:
    """Distinct rank-2 sublattices spanned by pairs of truncation points (as sorted basis pairs)."""
    d = trunc.k if level is None else level
    rays = sorted({primitive(p) for p in trunc.points[: trunc.level_end[d]]})
    seen = {}
    for a, b in itertools.combinations(rays, 2):
        ann = tuple(sorted(nullspace([a, b], trunc.dim)))
        if ann not in seen:
            seen[ann] = (a, b)
    return [seen[k] for k in sorted(seen)]


def _generic_point(ann: Sequence[Vector], avoid: Sequence[Vector], side: int = 1) -> tuple:
    """Point of span(ann) nonzero on every vector of ``avoid``; ``side`` flips its sign."""
    n = len(ann[0])
    cands = itertools.chain(
        ([1] + [0] * (len(ann) - 1),),
        ([m**i for i in range(len(ann))] for m in range(2, 400)),
    )
    for coeffs in cands:
        y = tuple(side * sum(c * v[i] for c, v in zip(coeffs, ann)) for i in range(n))
        if all(dot(y, p) != 0 for p in avoid):
            return y
    raise GenericityError("no generic point on the codimension-2 locus")


def build_loop(trunc: Truncation, plane: tuple[Vector, Vector], level: int | None = None,
               side: int = 1) -> tuple[CodimTwoLocus, list[LoopCrossing], tuple, tuple]:
    """Small counterclockwise loop around the locus rho = plane^perp, near the point y0 of rho.

    ``side`` = -1 picks -y0 instead (in rank 3 the two half-lines of rho are different strata).
    Returns the locus, the ordered crossings, and the normal-plane coordinates (u, v).
    Every crossing point lies on exactly one wall.
    """
    n = trunc.dim
    d = trunc.k if level is None else level
    pts = trunc.points[: trunc.level_end[d]]
    if rank_of(list(plane)) != 2:
        raise ValueError("plane vectors must be independent")
    ann = nullspace(list(plane), n)
    in_plane, off_plane = [], []
    for p in pts:
        (off_plane if any(dot(a, p) for a in ann) else in_plane).append(p)
    y0 = _generic_point(ann, off_plane, side) if ann else tuple([0] * n)
    # normal coordinates: two standard covectors independent on the plane
    ij = next((i, j) for i, j in itertools.combinations(range(n), 2)
              if plane[0][i] * plane[1][j] != plane[0][j] * plane[1][i])
    i0, j0 = ij
    u = tuple(int(k == i0) for k in range(n))
    v = tuple(int(k == j0) for k in range(n))
    dirs = []
    for r in sorted({primitive(p) for p in in_plane}):
        a, b = r[i0], r[j0]
        dirs.append(((b, -a), r))
        dirs.append(((-b, a), r))
    dirs.sort(key=cmp_to_key(lambda x, y: _angle_cmp(x[0], y[0])))
    # eps small enough that the loop stays away from walls not through rho
    width = max((abs(a) + abs(b) for (a, b), _ in dirs), default=1)
    eps = None
    for p in off_plane:
        r = Fraction(abs(dot(y0, p)), 2 * width * max(abs(p[i0]) + abs(p[j0]), 1))
        eps = r if eps is None or r < eps else eps
    if eps is None:
        eps = Fraction(1)
    out = []
    for (a, b), r in dirs:
        y = list(y0)
        y[i0] += eps * a
        y[j0] += eps * b
        # counterclockwise motion (-b, a); derivative of gamma-value
        deriv = -b * r[i0] + a * r[j0]
        out.append(LoopCrossing(r, (a, b), tuple(y), 1 if deriv < 0 else -1))
    return CodimTwoLocus((plane[0], plane[1]), y0), out, u, v


def local_jumps(s: WcsSection, locus: CodimTwoLocus, loop: Sequence[LoopCrossing], u, v) -> list[GroupElement]:
    """Jumps at the loop crossings, via the stalk at y0 (equal to the stalks at the crossing points)."""
    h = stalk_at(s, locus.y0) if locus.y0 and not is_zero(locus.y0) else s.g
    out = []
    for c in loop:
        a, b = c.direction
        w = tuple(a * x + b * z for x, z in zip(u, v))
        out.append(stalk_at(h, w))
    return out


def verify_cocycle(s: WcsSection, loop: Sequence[LoopCrossing], jumps: Sequence[GroupElement] | None = None,
                   locus: CodimTwoLocus | None = None, uv=None) -> bool:
    """True iff the signed ordered product of jumps around the loop is the identity."""
    if not loop:
        raise ValueError("malformed loop: no crossings")
    if jumps is None:
        if locus is None or uv is None:
            jumps = [stalk_at(s, c.y) for c in loop]
        else:
            jumps = local_jumps(s, locus, loop, *uv)
    if len(jumps) != len(loop):
        raise ValueError("malformed loop: jump count does not match crossings")
    prod = GroupElement.identity(s.backend, s.trunc, s.g.level)
    for c, j in zip(loop, jumps):
        prod = mul(prod, j if c.sign > 0 else inv(j))
    return prod.is_identity()


def verify_all_cocycles(s: WcsSection) -> list[tuple[tuple[Vector, Vector], int, bool]]:
    """Cocycle check at every codimension-2 stratum (both half-lines of rho in rank 3)."""
    out = []
    sides = (1,) if s.trunc.dim == 2 else (1, -1)
    for plane in codim_two_strata(s.trunc, s.g.level):
        for side in sides:
            locus, loop, u, v = build_loop(s.trunc, plane, s.g.level, side)
            out.append((plane, side, verify_cocycle(s, loop, locus=locus, uv=(u, v))))
    return out


# ---------------------------------------------------------------- DT dictionary


def _divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def _omega_weight(quantum: bool, k: int):
    if quantum:
        return _TMI / ((QRational.t_power(k) - QRational.t_power(-k)) * k)
    return Fraction(1, k * k)


def _adams(x, k):
    return x.adams(k) if isinstance(x, QRational) else x


def omega_to_a(omega: Mapping, gamma: Sequence[int], quantum: bool = False):
    """a(gamma) = sum_{k | gamma} Omega(gamma/k) w_k, with w_k = 1/k^2 or its q-deformation."""
    gamma = tuple(gamma)
    n = content(gamma)
    total = QRational(0) if quantum else Fraction(0)
    for k in _divisors(n):
        sub = tuple(x // k for x in gamma)
        om = omega.get(sub, 0)
        if om:
            total = total + _omega_weight(quantum, k) * _adams(_q(om, quantum), k)
    return total


def _q(x, quantum):
    if quantum and not isinstance(x, QRational):
        return QRational(x)
    return x if quantum else Fraction(x)


def a_to_omega(a: Mapping, gamma: Sequence[int], quantum: bool = False):
    """Inverse of omega_to_a along the divisor chain of gamma."""
    gamma = tuple(gamma)
    memo: dict = {}

    def om(v):
        if v in memo:
            return memo[v]
        n = content(v)
        val = _q(a.get(v, 0), quantum)
        for k in _divisors(n)[1:]:
            sub = tuple(x // k for x in v)
            o = om(sub)
            if o:
                val = val - _omega_weight(quantum, k) * _adams(o, k)
        memo[v] = val
        return val

    return om(gamma)


def omega_table(a: Mapping, quantum: bool = False) -> dict:
    out = {}
    for g in sorted(a):
        v = a_to_omega(a, g, quantum)
        if v:
            out[g] = v
    return out


def a_table(omega: Mapping, points: Sequence[Vector], quantum: bool = False) -> dict:
    out = {}
    for g in points:
        v = omega_to_a(omega, g, quantum)
        if v:
            out[g] = v
    return out


# ---------------------------------------------------------------- stability slice


def slice_covector(re: Sequence, im: Sequence, w: Sequence) -> tuple:
    """Y_theta = Im(e^{-i theta} Z) for the direction w ~ e^{i theta}, up to a positive factor."""
    return tuple(Fraction(w[0]) * Fraction(b) - Fraction(w[1]) * Fraction(a) for a, b in zip(re, im))


def stability_slice(g: GroupElement, re: Sequence, im: Sequence, w: Sequence) -> tuple[tuple, GroupElement]:
    """(Y_theta, stalk of g at Y_theta) for the rational direction w."""
    y = slice_covector(re, im, w)
    tr = g.trunc
    pts = tr.points[: tr.level_end[g.level]]
    zero = [p for p in pts if dot(y, p) == 0]
    for a, b in itertools.combinations(zero, 2):
        if not parallel(a, b):
            raise GenericityError(f"direction {tuple(w)} aligns the non-parallel points {a} and {b}")
    return y, stalk_at(g, y)


def theta_sweep(g: GroupElement, re: Sequence, im: Sequence) -> list[tuple[Vector, GroupElement]]:
    """Stalks at Y_theta for theta running over the phases Z(ray), in increasing phase."""
    tr = g.trunc
    order = PhaseOrder(re, im, tr.cone)
    rays = sorted({primitive(p) for p in tr.points[: tr.level_end[g.level]]}, key=order.key)
    out = []
    for r in rays:
        _, st = stability_slice(g, re, im, order.z(r))
        if not st.is_identity():
            out.append((r, st))
    return out


def twist_table(backend: TorusBackend | QuantumTorusBackend, a: Mapping) -> dict:
    """a(gamma) -> s(gamma) a(gamma): passes between twisted and untwisted torus bases."""
    be = TorusBackend(backend.lattice)
    return {g: (c if be.sign(g) == 1 else -c) for g, c in a.items()}


def specialize_table(a: Mapping) -> dict:
    return {g: specialize_q1(c) for g, c in a.items()}
