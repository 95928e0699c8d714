"""Graded Lie algebra backends.

Three backends share one interface:

* ``TorusBackend``: basis e_g with [e_a, e_b] = (-1)^<a,b> <a,b> e_{a+b}.
* ``QuantumTorusBackend``: basis e_g with [e_a, e_b] = [<a,b>]_q e_{a+b}.
* ``DivFreeBackend``: vector fields x^g d_mu on a torus with character lattice G1,
  where mu lives in a second lattice G2 paired with G1, subject to (mu, g) = 0.

A ``LieElement`` is a finite map from lattice vectors to fiber coefficients.  Zero
coefficients are never stored.  Grades in the kernel of the pairing are rejected.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Any, Iterable, Mapping, Sequence

import flint
from gmpy2 import mpq

from .lattice import (
    DegreeFunction,
    LatticeError,
    RationalCone,
    SkewLattice,
    Vector,
    dot,
    is_zero,
    lattice_points_up_to,
    primitive,
    sigma,
    vadd,
)
from .scalars import QRational, QZERO, as_mpq, qrat, quantum_integer, render


class LieError(ValueError):
    pass


class KernelGradeError(LieError):
    """A grade lies in the kernel of the pairing, where the fiber is zero."""


# ---------------------------------------------------------------- truncation


@dataclass(frozen=True)
class Truncation:
    """Quotient by grades outside C or of degree above k.

    Points are indexed in degree order, so the points of degree <= d are a prefix
    of the index range for every d <= k; lower truncations reuse the same tables.
    """

    cone: RationalCone
    phi: DegreeFunction
    k: int

    def __post_init__(self):
        if self.k < 0:
            raise LatticeError("truncation degree must be nonnegative")
        self.phi.check_proper(self.cone)

    @property
    def dim(self) -> int:
        return self.cone.dim

    @cached_property
    def points(self) -> tuple[Vector, ...]:
        return tuple(lattice_points_up_to(self.cone, self.phi, self.k))

    @cached_property
    def index(self) -> dict[Vector, int]:
        return {p: i for i, p in enumerate(self.points)}

    @cached_property
    def deg(self) -> tuple[int, ...]:
        return tuple(self.phi(p) for p in self.points)

    @cached_property
    def level_end(self) -> tuple[int, ...]:
        """level_end[d] = number of points of degree <= d."""
        out = [0] * (self.k + 1)
        for d in self.deg:
            out[d] += 1
        for d in range(1, self.k + 1):
            out[d] += out[d - 1]
        return tuple(out)

    @cached_property
    def add(self) -> tuple[dict[int, int], ...]:
        """add[i][j] = index of points[i] + points[j] when that sum survives."""
        idx = self.index
        out = []
        for p in self.points:
            row = {}
            for j, q in enumerate(self.points):
                s = idx.get(vadd(p, q))
                if s is not None:
                    row[j] = s
            out.append(row)
        return tuple(out)

    def contains(self, v: Sequence[int]) -> bool:
        return tuple(v) in self.index

    def at_level(self, d: int) -> "Truncation":
        return Truncation(self.cone, self.phi, d)

    def to_json(self) -> dict:
        return {"cone": self.cone.to_json(), "phi": self.phi.to_json(), "k": self.k}


# ---------------------------------------------------------------- backends


class LieBackend:
    kind: str = ""
    dim: int = 0

    # fiber arithmetic, overridden per backend
    def coerce(self, gamma: Vector, c) -> Any:
        raise NotImplementedError

    def is_zero(self, c) -> bool:
        raise NotImplementedError

    def zero(self):
        raise NotImplementedError

    def bracket_terms(self, a: Vector, ca, b: Vector, cb):
        """Coefficient of [x_a, x_b] at a+b, or None when it vanishes."""
        raise NotImplementedError

    def render_coeff(self, c) -> Any:
        raise NotImplementedError

    def in_kernel(self, gamma: Vector) -> bool:
        raise NotImplementedError

    def check_grade(self, gamma: Vector) -> Vector:
        g = tuple(int(x) for x in gamma)
        if len(g) != self.dim:
            raise LieError(f"grade {g} has wrong length for rank {self.dim}")
        if is_zero(g):
            raise LieError("the zero grade carries no fiber")
        if self.in_kernel(g):
            raise KernelGradeError(f"grade {g} lies in the kernel of the pairing")
        return g

    def to_json(self) -> dict:
        raise NotImplementedError


class TorusBackend(LieBackend):
    kind = "torus"

    def __init__(self, lattice: SkewLattice):
        self.lattice = lattice
        self.dim = lattice.rank

    def __eq__(self, other):
        return isinstance(other, TorusBackend) and other.lattice == self.lattice

    def __hash__(self):
        return hash((self.kind, self.lattice))

    def __repr__(self):
        return f"TorusBackend({self.lattice.gram})"

    def in_kernel(self, gamma):
        return self.lattice.in_kernel(gamma)

    def coerce(self, gamma, c):
        return as_mpq(c)

    def is_zero(self, c):
        return c == 0

    def zero(self):
        return mpq(0)

    def bracket_terms(self, a, ca, b, cb):
        p = self.lattice.pairing(a, b)
        if p == 0:
            return None
        return (-p if p & 1 else p) * ca * cb

    def sign(self, gamma: Sequence[int]) -> int:
        """(-1)^sigma(gamma) for the canonical epsilon=1 refinement."""
        return -1 if sigma(self.lattice, gamma) else 1

    def render_coeff(self, c):
        return str(c)

    def to_json(self):
        return {"kind": self.kind, "lattice": self.lattice.to_json()}


class QuantumTorusBackend(LieBackend):
    kind = "quantum"

    def __init__(self, lattice: SkewLattice):
        self.lattice = lattice
        self.dim = lattice.rank
        self._qint: dict[int, QRational] = {}

    def __eq__(self, other):
        return isinstance(other, QuantumTorusBackend) and other.lattice == self.lattice

    def __hash__(self):
        return hash((self.kind, self.lattice))

    def __repr__(self):
        return f"QuantumTorusBackend({self.lattice.gram})"

    def in_kernel(self, gamma):
        return self.lattice.in_kernel(gamma)

    def coerce(self, gamma, c):
        return qrat(c)

    def is_zero(self, c):
        return c.is_zero()

    def zero(self):
        return QZERO

    def qint(self, n: int) -> QRational:
        v = self._qint.get(n)
        if v is None:
            v = self._qint[n] = quantum_integer(n).value
        return v

    def bracket_terms(self, a, ca, b, cb):
        p = self.lattice.pairing(a, b)
        if p == 0:
            return None
        return self.qint(p) * ca * cb

    def render_coeff(self, c):
        return render(c)

    def to_json(self):
        return {"kind": self.kind, "lattice": self.lattice.to_json()}


class DivFreeBackend(LieBackend):
    """Divergence-free vector fields; ``pairing[a][i] = (f_a, e_i)`` for bases f of G2 and e of G1."""

    kind = "divfree"

    def __init__(self, pairing: Sequence[Sequence[int]]):
        self.pairing = tuple(tuple(int(x) for x in row) for row in pairing)
        if not self.pairing or not self.pairing[0]:
            raise LieError("pairing matrix must be nonempty")
        if len({len(r) for r in self.pairing}) != 1:
            raise LieError("pairing matrix must be rectangular")
        self.dim2 = len(self.pairing)
        self.dim = len(self.pairing[0])

    @classmethod
    def standard(cls, n: int) -> "DivFreeBackend":
        return cls(tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))

    def __eq__(self, other):
        return isinstance(other, DivFreeBackend) and other.pairing == self.pairing

    def __hash__(self):
        return hash((self.kind, self.pairing))

    def __repr__(self):
        return f"DivFreeBackend({self.pairing})"

    def pair(self, mu: Sequence, gamma: Sequence) -> Any:
        """(mu, gamma) for mu in G2 (tensor Q) and gamma in G1."""
        return sum(mu[a] * dot(self.pairing[a], gamma) for a in range(self.dim2) if mu[a])

    def covector(self, mu: Sequence) -> tuple:
        """The functional (mu, .) on G1 in the standard dual basis."""
        return tuple(sum(mu[a] * self.pairing[a][i] for a in range(self.dim2)) for i in range(self.dim))

    def in_kernel(self, gamma):
        return all(dot(row, gamma) == 0 for row in self.pairing)

    @cached_property
    def faithful(self) -> bool:
        """True when G2 injects into the dual of G1 (no d_mu acts by zero)."""
        return flint.fmpz_mat([list(r) for r in self.pairing]).rank() == self.dim2

    @cached_property
    def _solver(self):
        """Left inverse used to recover mu from the functional (mu, .)."""
        if not self.faithful:
            raise LieError("pairing has a kernel on the vector-field side; group elements are not faithful")
        cols = []
        for i in range(self.dim):
            trial = cols + [i]
            m = flint.fmpz_mat([[self.pairing[a][j] for j in trial] for a in range(self.dim2)])
            if m.rank() == len(trial):
                cols = trial
            if len(cols) == self.dim2:
                break
        sq = flint.fmpq_mat([[self.pairing[a][j] for a in range(self.dim2)] for j in cols])
        inv = sq.inv()
        n = self.dim2
        mat = [[mpq(int(inv[r, c].p), int(inv[r, c].q)) for c in range(n)] for r in range(n)]
        return cols, mat

    def solve_mu(self, functional: Sequence) -> tuple:
        """mu with (mu, e_i) = functional[i]; raises when no exact solution exists."""
        cols, mat = self._solver
        rhs = [functional[j] for j in cols]
        mu = tuple(sum(mat[r][c] * rhs[c] for c in range(len(rhs))) for r in range(self.dim2))
        if any(x != y for x, y in zip(self.covector(mu), functional)):
            raise LieError("functional is not of the form (mu, .)")
        return mu

    def coerce(self, gamma, c):
        mu = tuple(as_mpq(x) for x in c)
        if len(mu) != self.dim2:
            raise LieError(f"covector {c} has wrong length")
        if self.pair(mu, gamma) != 0:
            raise LieError(f"fiber over {gamma} must satisfy (mu, gamma) = 0, got mu = {c}")
        return mu

    def is_zero(self, c):
        return all(x == 0 for x in c)

    def zero(self):
        return tuple(mpq(0) for _ in range(self.dim2))

    def bracket_terms(self, a, ca, b, cb):
        s = self.pair(ca, b)
        t = self.pair(cb, a)
        mu = tuple(s * y - t * x for x, y in zip(ca, cb))
        if all(x == 0 for x in mu):
            return None
        return mu

    def render_coeff(self, c):
        return [str(x) for x in c]

    def to_json(self):
        return {"kind": self.kind, "pairing": [list(r) for r in self.pairing]}


def _fiber_add(x, y):
    if isinstance(x, tuple):
        return tuple(a + b for a, b in zip(x, y))
    return x + y


def _fiber_scale(c, x):
    if isinstance(x, tuple):
        return tuple(c * a for a in x)
    return x * c


# ---------------------------------------------------------------- elements


class LieElement:
    """Finite sum of graded fiber coefficients over one backend."""

    __slots__ = ("backend", "terms")

    def __init__(self, backend: LieBackend, terms: Mapping | Iterable = (), *, _trusted: bool = False):
        self.backend = backend
        if _trusted:
            self.terms = terms
            return
        items = terms.items() if isinstance(terms, Mapping) else terms
        out: dict[Vector, Any] = {}
        for g, c in items:
            g = backend.check_grade(g)
            c = backend.coerce(g, c)
            if g in out:
                c = _fiber_add(out[g], c)
            out[g] = c
        self.terms = {g: c for g, c in out.items() if not backend.is_zero(c)}

    @classmethod
    def zero(cls, backend: LieBackend) -> "LieElement":
        return cls(backend, {}, _trusted=True)

    def _check(self, other: "LieElement"):
        if not isinstance(other, LieElement):
            raise TypeError("expected a LieElement")
        if other.backend != self.backend:
            raise LieError("backend mismatch")

    def __add__(self, other: "LieElement") -> "LieElement":
        self._check(other)
        out = dict(self.terms)
        z = self.backend.is_zero
        for g, c in other.terms.items():
            if g in out:
                s = _fiber_add(out[g], c)
                if z(s):
                    del out[g]
                else:
                    out[g] = s
            else:
                out[g] = c
        return LieElement(self.backend, out, _trusted=True)

    def __neg__(self) -> "LieElement":
        return self.scale(-1)

    def __sub__(self, other: "LieElement") -> "LieElement":
        return self + (-other)

    def scale(self, c) -> "LieElement":
        if c == 0:
            return LieElement.zero(self.backend)
        return LieElement(self.backend, {g: _fiber_scale(c, x) for g, x in self.terms.items()}, _trusted=True)

    def __rmul__(self, c) -> "LieElement":
        return self.scale(c)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LieElement):
            return NotImplemented
        return self.backend == other.backend and self.terms == other.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __repr__(self) -> str:
        return f"LieElement({self.to_json()})"

    @property
    def support(self) -> list[Vector]:
        return sorted(self.terms)

    def coeff(self, gamma: Sequence[int]):
        return self.terms.get(tuple(gamma), self.backend.zero())

    def truncate(self, trunc: Truncation) -> "LieElement":
        return LieElement(self.backend, {g: c for g, c in self.terms.items() if trunc.contains(g)}, _trusted=True)

    def restrict(self, pred) -> "LieElement":
        return LieElement(self.backend, {g: c for g, c in self.terms.items() if pred(g)}, _trusted=True)

    def degree_part(self, phi: DegreeFunction, d: int) -> "LieElement":
        return self.restrict(lambda g: phi(g) == d)

    def to_json(self) -> list[dict]:
        r = self.backend.render_coeff
        return [{"gamma": list(g), "coeff": r(self.terms[g])} for g in sorted(self.terms)]


def bracket(a: LieElement, b: LieElement, trunc: Truncation | None = None) -> LieElement:
    """Graded bracket, discarding grades outside the truncation when one is given."""
    a._check(b)
    be = a.backend
    out: dict[Vector, Any] = {}
    for ga, ca in a.terms.items():
        for gb, cb in b.terms.items():
            g = vadd(ga, gb)
            if trunc is not None and not trunc.contains(g):
                continue
            c = be.bracket_terms(ga, ca, gb, cb)
            if c is None:
                continue
            out[g] = _fiber_add(out[g], c) if g in out else c
    for g in [g for g, c in out.items() if be.is_zero(c)]:
        del out[g]
    for g in out:
        if be.in_kernel(g):
            raise KernelGradeError(f"bracket produced kernel grade {g}")
    return LieElement(be, out, _trusted=True)


def jacobiator(a: LieElement, b: LieElement, c: LieElement, trunc: Truncation | None = None) -> LieElement:
    br = lambda x, y: bracket(x, y, trunc)  # noqa: E731
    return br(a, br(b, c)) + br(b, br(c, a)) + br(c, br(a, b))


# ---------------------------------------------------------------- virtual locus bracket


@dataclass(frozen=True)
class WallTagged:
    """x^gamma d_mu attached to the wall mu^perp (a hyperplane in the dual of G1)."""

    gamma: Vector
    mu: tuple

    def wall(self) -> Vector:
        return primitive(self.mu)


def bracket_virtual_locus(backend: DivFreeBackend, a: WallTagged, b: WallTagged) -> WallTagged | None:
    """Bracket of the wall algebra along a codimension-2 locus; None means zero."""
    for w in (a, b):
        if backend.pair(w.mu, w.gamma) != 0:
            raise LieError(f"element x^{w.gamma} d_{w.mu} is not divergence free")
        if backend.is_zero(w.mu):
            raise LieError("wall covector must be nonzero")
    s = backend.pair(a.mu, b.gamma)
    t = backend.pair(b.mu, a.gamma)
    mu = tuple(s * y - t * x for x, y in zip(a.mu, b.mu))
    if is_zero(backend.covector(mu)):
        return None
    return WallTagged(vadd(a.gamma, b.gamma), mu)


def make_backend(kind: str, lattice: SkewLattice | None = None, pairing=None) -> LieBackend:
    if kind == "torus":
        return TorusBackend(lattice)
    if kind == "quantum":
        return QuantumTorusBackend(lattice)
    if kind == "divfree":
        if pairing is None:
            if lattice is None:
                raise LieError("divfree backend needs a pairing matrix")
            return DivFreeBackend.standard(lattice.rank)
        return DivFreeBackend(pairing)
    raise LieError(f"unknown backend {kind!r}")
