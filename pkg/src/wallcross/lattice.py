"""Skew lattices, rational polyhedral cones, degree functions and mod-2 quadratic refinements.

Everything here is exact: vectors are tuples of ints, rational points are tuples of
``Fraction``.  Cones are stored by generators; the inequality description is obtained
from the dual cone, which is computed by enumerating candidate extreme rays.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, reduce
from math import gcd, lcm
from typing import Sequence

import flint

Vector = tuple[int, ...]


class LatticeError(ValueError):
    pass


def dot(a: Sequence, b: Sequence):
    if len(a) != len(b):
        raise LatticeError(f"dimension mismatch: {len(a)} vs {len(b)}")
    return sum(x * y for x, y in zip(a, b))


def vadd(a: Sequence[int], b: Sequence[int]) -> Vector:
    return tuple(x + y for x, y in zip(a, b))


def vsub(a: Sequence[int], b: Sequence[int]) -> Vector:
    return tuple(x - y for x, y in zip(a, b))


def vscale(c: int, a: Sequence[int]) -> Vector:
    return tuple(c * x for x in a)


def is_zero(v: Sequence) -> bool:
    return all(x == 0 for x in v)


def content(v: Sequence[int]) -> int:
    return reduce(gcd, (abs(int(x)) for x in v), 0)


def primitive(v: Sequence) -> Vector:
    """Primitive integer vector on the ray of a nonzero rational vector."""
    if all(type(x) is int for x in v):
        ints = list(v)
    else:
        fr = [Fraction(x) for x in v]
        m = reduce(lcm, (x.denominator for x in fr), 1)
        ints = [int(x * m) for x in fr]
    c = content(ints)
    if c == 0:
        raise LatticeError("zero vector has no primitive representative")
    return tuple(x // c for x in ints)


def parallel(a: Sequence, b: Sequence) -> bool:
    """True when a and b are nonzero and positively proportional."""
    return primitive(a) == primitive(b)


def _int_matrix(rows: Sequence[Sequence]) -> flint.fmpz_mat:
    out = []
    for r in rows:
        if all(type(x) is int for x in r):
            out.append(list(r))
            continue
        fr = [Fraction(x) for x in r]
        m = reduce(lcm, (x.denominator for x in fr), 1)
        out.append([int(x * m) for x in fr])
    return flint.fmpz_mat(out)


def rank_of(rows: Sequence[Sequence]) -> int:
    if not rows or not rows[0]:
        return 0
    return _int_matrix(rows).rank()


def nullspace(rows: Sequence[Sequence], ncols: int) -> list[Vector]:
    """Integer basis (not necessarily saturated) of the rational kernel of a matrix."""
    if not rows:
        return [tuple(int(i == j) for j in range(ncols)) for i in range(ncols)]
    basis, nullity = _int_matrix(rows).nullspace()
    return [primitive([int(basis[i, j]) for i in range(ncols)]) for j in range(nullity)]


# ---------------------------------------------------------------- skew lattices


@dataclass(frozen=True)
class SkewLattice:
    """Free lattice Z^rank with an integer skew form; ``gram[i][j] = <e_i, e_j>``."""

    gram: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        g = tuple(tuple(int(x) for x in row) for row in self.gram)
        object.__setattr__(self, "gram", g)
        n = len(g)
        if n < 1:
            raise LatticeError("rank must be at least 1")
        for i in range(n):
            if len(g[i]) != n:
                raise LatticeError("gram matrix must be square")
            if g[i][i] != 0:
                raise LatticeError("gram matrix must have zero diagonal")
            for j in range(n):
                if g[i][j] != -g[j][i]:
                    raise LatticeError("gram matrix must be antisymmetric")

    @property
    def rank(self) -> int:
        return len(self.gram)

    @classmethod
    def standard(cls, m: int) -> "SkewLattice":
        """Rank 2 lattice with <e1, e2> = m."""
        return cls(((0, m), (-m, 0)))

    def pairing(self, a: Sequence[int], b: Sequence[int]) -> int:
        if len(a) != self.rank or len(b) != self.rank:
            raise LatticeError("vector length does not match lattice rank")
        g = self.gram
        return sum(a[i] * g[i][j] * b[j] for i in range(self.rank) if a[i] for j in range(self.rank) if b[j])

    def iota(self, v: Sequence) -> tuple:
        """The covector <v, .>."""
        if len(v) != self.rank:
            raise LatticeError("vector length does not match lattice rank")
        g = self.gram
        return tuple(sum(v[i] * g[i][j] for i in range(self.rank)) for j in range(self.rank))

    def in_kernel(self, v: Sequence[int]) -> bool:
        return is_zero(self.iota(v))

    def to_json(self) -> dict:
        return {"rank": self.rank, "gram": [list(r) for r in self.gram]}


def kernel_sublattice(L: SkewLattice) -> list[Vector]:
    """Saturated integer basis of the kernel of the skew form.

    Row-reduces [G^T | I] to Hermite normal form; rows whose first block vanished
    are the images of a unimodular transform and span the integer kernel.
    """
    n = L.rank
    aug = [[L.gram[j][i] for j in range(n)] + [int(i == j) for j in range(n)] for i in range(n)]
    h = flint.fmpz_mat(aug).hnf()
    out = []
    for i in range(n):
        row = [int(h[i, j]) for j in range(2 * n)]
        if all(x == 0 for x in row[:n]):
            out.append(tuple(row[n:]))
    return sorted(out)


# ---------------------------------------------------------------- cones


@dataclass(frozen=True)
class RationalCone:
    """Closed convex cone generated by integer vectors in Q^dim (empty list means {0})."""

    dim: int
    generators: tuple[Vector, ...] = ()

    def __post_init__(self):
        gens = []
        for g in self.generators:
            if len(g) != self.dim:
                raise LatticeError("generator length does not match cone dimension")
            if is_zero(g):
                raise LatticeError("cone generators must be nonzero")
            p = primitive(g)
            if p not in gens:
                gens.append(p)
        object.__setattr__(self, "generators", tuple(sorted(gens)))

    @classmethod
    def octant(cls, n: int) -> "RationalCone":
        return cls(n, tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))

    @classmethod
    def whole(cls, n: int) -> "RationalCone":
        gens = []
        for i in range(n):
            e = [0] * n
            e[i] = 1
            gens.append(tuple(e))
            e[i] = -1
            gens.append(tuple(e))
        return cls(n, tuple(gens))

    @cached_property
    def _dual(self) -> tuple[tuple[Vector, ...], tuple[Vector, ...]]:
        return _dual_rays(self.dim, self.generators)

    def dual(self) -> "RationalCone":
        return dual_cone(self)

    @cached_property
    def inequalities(self) -> tuple[tuple[Vector, ...], tuple[Vector, ...]]:
        """(ineq, eq): x lies in the cone iff y.x >= 0 for y in ineq and y.x == 0 for y in eq."""
        return self._dual

    def contains(self, v: Sequence) -> bool:
        ineq, eq = self.inequalities
        return all(dot(y, v) >= 0 for y in ineq) and all(dot(y, v) == 0 for y in eq)

    def contains_interior(self, v: Sequence) -> bool:
        """Relative interior membership."""
        ineq, eq = self.inequalities
        return all(dot(y, v) > 0 for y in ineq) and all(dot(y, v) == 0 for y in eq)

    def contains_cone(self, other: "RationalCone") -> bool:
        return all(self.contains(g) for g in other.generators)

    def dimension(self) -> int:
        return rank_of(self.generators)

    def is_strict(self) -> bool:
        return cone_is_strict(self)

    def to_json(self) -> dict:
        return {"dim": self.dim, "generators": [list(g) for g in self.generators]}

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, RationalCone):
            return NotImplemented
        return self.dim == other.dim and self.contains_cone(other) and other.contains_cone(self)

    def __hash__(self):
        return hash((self.dim, len(self.generators)))


def _dual_rays(n: int, gens: Sequence[Vector]) -> tuple[tuple[Vector, ...], tuple[Vector, ...]]:
    """Extreme rays and lineality basis of {x : g.x >= 0 for all g}.

    The dual splits as lineality (the kernel of the generator matrix) plus a pointed
    part inside the span W of the generators.  Extreme rays of the pointed part are
    the one-dimensional solution sets of r-1 independent tight constraints in W,
    r = dim W; we enumerate these subsets directly, which is fine at desk scale.
    """
    gens = list(gens)
    lineal = nullspace(gens, n) if gens else nullspace([], n)
    if not gens:
        return (), tuple(lineal)
    W = _row_basis(gens)
    r = len(W)
    rays = set()
    gW = [[dot(g, w) for w in W] for g in gens]
    for S in itertools.combinations(range(len(gens)), r - 1):
        rows = [gW[s] for s in S]
        if r > 1 and rank_of(rows) != r - 1:
            continue
        sol = nullspace(rows, r) if rows else [tuple(int(i == 0) for i in range(r))]
        if len(sol) != 1:
            continue
        c = sol[0]
        x = [sum(Fraction(c[k]) * W[k][i] for k in range(r)) for i in range(n)]
        vals = [dot(g, x) for g in gens]
        if all(v >= 0 for v in vals):
            rays.add(primitive(x))
        elif all(v <= 0 for v in vals):
            rays.add(primitive([-t for t in x]))
    return tuple(sorted(rays)), tuple(sorted(lineal))


def _row_basis(rows: Sequence[Vector]) -> list[Vector]:
    basis: list[Vector] = []
    for r in rows:
        if rank_of(basis + [r]) > len(basis):
            basis.append(r)
    return basis


def dual_cone(C: RationalCone) -> RationalCone:
    """Generators of {x : y(x) >= 0 for all y in C}; lineality enters as +-pairs."""
    rays, lineal = C._dual
    gens = list(rays)
    for v in lineal:
        gens.append(v)
        gens.append(tuple(-x for x in v))
    return RationalCone(C.dim, tuple(gens))


def cone_is_strict(C: RationalCone) -> bool:
    """C contains no line iff its dual is full dimensional."""
    if not C.generators:
        return True
    return dual_cone(C).dimension() == C.dim


def cone_intersection(*cones: RationalCone) -> RationalCone:
    n = cones[0].dim
    normals = []
    for C in cones:
        ineq, eq = C.inequalities
        normals.extend(ineq)
        for v in eq:
            normals.append(v)
            normals.append(tuple(-x for x in v))
    return dual_cone(RationalCone(n, tuple(normals)))


def cone_hull(*cones: RationalCone) -> RationalCone:
    n = cones[0].dim
    return RationalCone(n, tuple(g for C in cones for g in C.generators))


# ---------------------------------------------------------------- degree functions


@dataclass(frozen=True)
class DegreeFunction:
    coeffs: Vector

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(int(c) for c in self.coeffs))

    def __call__(self, v: Sequence[int]) -> int:
        return dot(self.coeffs, v)

    def check_proper(self, C: RationalCone) -> None:
        if len(self.coeffs) != C.dim:
            raise LatticeError("degree function length does not match cone dimension")
        if not cone_is_strict(C):
            raise LatticeError("cone is not strict")
        bad = [g for g in C.generators if self(g) <= 0]
        if bad:
            raise LatticeError(f"degree function is not positive on generator {bad[0]}")

    def to_json(self) -> dict:
        return {"coeffs": list(self.coeffs)}


def lattice_points_up_to(C: RationalCone, phi: DegreeFunction, k: int) -> list[Vector]:
    """Nonzero lattice points of C with phi <= k, ordered by phi then lexicographically decreasing."""
    phi.check_proper(C)
    if k <= 0 or not C.generators:
        return []
    bounds = []
    for i in range(C.dim):
        b = max(Fraction(abs(g[i]), phi(g)) for g in C.generators) * k
        bounds.append(int(b))
    pts = []
    for v in itertools.product(*(range(-b, b + 1) for b in bounds)):
        if is_zero(v):
            continue
        d = phi(v)
        if 1 <= d <= k and C.contains(v):
            pts.append(v)
    pts.sort(key=lambda v: (phi(v), tuple(-x for x in v)))
    return pts


# ---------------------------------------------------------------- quadratic refinements

MAX_REFINEMENT_RANK = 6


@dataclass(frozen=True)
class QuadraticRefinement:
    """Function P on (Z/2)^rank with P(x+y)-P(x)-P(y) = epsilon*<x,y> mod 2."""

    values: dict = field(hash=False)
    epsilon: int

    def __call__(self, x: Sequence[int]) -> int:
        return self.values[tuple(int(t) % 2 for t in x)]

    def key(self) -> tuple:
        return (self.epsilon, tuple(self.values[k] for k in sorted(self.values)))

    def satisfies_identity(self, L: SkewLattice) -> bool:
        pts = list(self.values)
        if self.values.get(tuple([0] * L.rank), 1) != 0:
            return False
        for x in pts:
            for y in pts:
                s = tuple((a + b) % 2 for a, b in zip(x, y))
                lhs = (self.values[s] - self.values[x] - self.values[y]) % 2
                if lhs != (self.epsilon * L.pairing(x, y)) % 2:
                    return False
        return True

    def to_json(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "values": {"".join(map(str, k)): v for k, v in sorted(self.values.items())},
        }


def quadratic_refinements(L: SkewLattice) -> list[QuadraticRefinement]:
    """All pairs (P, epsilon); P is linear plus epsilon times the upper-triangular form."""
    n = L.rank
    if n > MAX_REFINEMENT_RANK:
        raise LatticeError(f"rank {n} exceeds enumeration bound {MAX_REFINEMENT_RANK}")
    pts = list(itertools.product((0, 1), repeat=n))
    out = []
    for eps in (0, 1):
        for lin in itertools.product((0, 1), repeat=n):
            vals = {x: (dot(lin, x) + eps * _upper_form(L, x)) % 2 for x in pts}
            out.append(QuadraticRefinement(vals, eps))
    out.sort(key=QuadraticRefinement.key)
    return out


def _upper_form(L: SkewLattice, x: Sequence[int]) -> int:
    g = L.gram
    n = L.rank
    return sum(x[i] * x[j] * g[i][j] for i in range(n) for j in range(i + 1, n))


def sigma(L: SkewLattice, v: Sequence[int]) -> int:
    """Canonical epsilon=1 refinement evaluated on an integer vector (0 or 1)."""
    return _upper_form(L, v) % 2
