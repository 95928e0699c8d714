"""Quivers of skew lattices, canonical initial data and DT invariants by two pipelines."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .attractor import AttractorGeometry, AttractorPoint, psi_inverse, reconstruct_a
from .errors import GenericityError
from .group import PhaseOrder, canonical_coefficient, det2, factorize_logs, ray_blocks
from .lattice import DegreeFunction, RationalCone, SkewLattice, Vector, primitive
from .liealg import LieBackend, QuantumTorusBackend, TorusBackend, Truncation
from .scalars import QRational, render
from .wcs import a_to_omega

PIPELINES = ("rays", "trees")


@dataclass(frozen=True)
class QuiverSpec:
    vertices: tuple
    arrows: tuple  # arrows[i][j] = number of arrows i -> j

    def __post_init__(self):
        a = tuple(tuple(int(x) for x in row) for row in self.arrows)
        object.__setattr__(self, "arrows", a)
        object.__setattr__(self, "vertices", tuple(self.vertices))
        n = len(self.vertices)
        if len(a) != n or any(len(r) != n for r in a):
            raise ValueError("arrow matrix must be square over the vertex set")
        if any(x < 0 for r in a for x in r):
            raise ValueError("arrow counts must be nonnegative")

    @property
    def lattice(self) -> SkewLattice:
        a = self.arrows
        n = len(a)
        return SkewLattice(tuple(tuple(a[i][j] - a[j][i] for j in range(n)) for i in range(n)))

    def to_json(self) -> dict:
        return {"vertices": list(self.vertices), "arrows": [list(r) for r in self.arrows]}


def quiver_from_lattice(L: SkewLattice) -> QuiverSpec:
    n = L.rank
    return QuiverSpec(tuple(range(1, n + 1)), tuple(tuple(max(L.gram[i][j], 0) for j in range(n)) for i in range(n)))


def kronecker_quiver(m: int) -> QuiverSpec:
    if m < 0:
        raise ValueError("m must be nonnegative")
    return QuiverSpec((1, 2), ((0, m), (0, 0)))


def standard_truncation(rank: int, k: int) -> Truncation:
    return Truncation(RationalCone.octant(rank), DegreeFunction((1,) * rank), k)


def backend_for(Q: QuiverSpec, quantum: bool) -> LieBackend:
    return QuantumTorusBackend(Q.lattice) if quantum else TorusBackend(Q.lattice)


def canonical_initial_data(Q: QuiverSpec, quantum: bool, k: int) -> dict:
    """a(n e_i) = 1/n^2 (or its q-analogue) on basis rays, zero elsewhere."""
    be = backend_for(Q, quantum)
    n = len(Q.vertices)
    out = {}
    for i in range(n):
        e = tuple(int(j == i) for j in range(n))
        for c in range(1, k + 1):
            out[tuple(c * x for x in e)] = canonical_coefficient(be, c)
    return dict(sorted(out.items()))


def standard_central_charge(n: int = 2) -> tuple[tuple, tuple]:
    """Z(e_1) = -1 + i, Z(e_2) = 1 + i; for rank > 2 the basis spreads over the upper half-plane,
    with small offsets that keep Z generic on the octant up to degree 12 (ranks 3 and 4)."""
    if n == 2:
        return (-1, 1), (1, 1)
    re = tuple(Fraction(2 * i - (n - 1), n) + Fraction(1, 29 + 17 * i) for i in range(n))
    im = tuple(1 + Fraction(i * i, n * n) + Fraction(1, 31 + 13 * i) for i in range(n))
    return re, im


def _check_generic_z(tr: Truncation, re, im) -> PhaseOrder:
    order = PhaseOrder(re, im, tr.cone)
    try:
        ray_blocks(tr, order)
    except GenericityError as exc:
        raise GenericityError(f"central charge is not generic: {exc}",
                              suggestion=[[str(x) for x in re], [str(x + Fraction(1, 97) * (i + 1) ** 2) for i, x in enumerate(im)]]) from None
    return order


def _omegas(a: Mapping, be: LieBackend, quantum: bool) -> dict:
    if quantum:
        sign = TorusBackend(be.lattice).sign
        a = {g: (c if sign(g) == 1 else -c) for g, c in a.items()}
    out = {}
    for g in sorted(a):
        om = a_to_omega(a, g, quantum)
        if om:
            out[g] = om
    return out


def dt_invariants(Q: QuiverSpec, Z: tuple | None, k: int, pipeline: str = "rays", quantum: bool = False,
                  init: Mapping | None = None) -> dict:
    """{gamma: Omega(gamma)} read off at the phases of Z; ``init`` defaults to the canonical initial data."""
    if pipeline not in PIPELINES:
        raise ValueError(f"unknown pipeline {pipeline!r}")
    n = len(Q.vertices)
    re, im = Z if Z is not None else standard_central_charge(n)
    be = backend_for(Q, quantum)
    tr = standard_truncation(n, k)
    _check_generic_z(tr, re, im)
    if init is None:
        init = canonical_initial_data(Q, quantum, k)
    init = {tuple(g): be.coerce(tuple(g), c) for g, c in init.items() if tr.contains(g)}
    init = {g: c for g, c in sorted(init.items()) if not be.is_zero(c)}
    # kernel grades are central and never reached by brackets (a+b in the kernel forces <a,b> = 0),
    # so their values pass through unchanged
    central = {g: c for g, c in init.items() if be.in_kernel(g)}
    init = {g: c for g, c in init.items() if g not in central}
    if pipeline == "rays":
        g = psi_inverse(init, be, tr)
        a = {}
        for _, L in factorize_logs(g, PhaseOrder(re, im, tr.cone)):
            a.update(L.terms)
    else:
        geo = AttractorGeometry(Q.lattice, tr)
        memo: dict = {}
        a = {}
        for gamma in tr.points:
            if be.in_kernel(gamma):
                continue
            z = (sum(Fraction(r) * x for r, x in zip(re, gamma)), sum(Fraction(s) * x for s, x in zip(im, gamma)))
            # stability slice at the phase of Z(gamma): b = det(Z(gamma), Z(.))
            b = tuple(z[0] * Fraction(s) - z[1] * Fraction(r) for r, s in zip(re, im))
            v = reconstruct_a(geo, be, AttractorPoint(b, gamma), init, k, memo)
            if v:
                a[gamma] = v
    a.update(central)
    return _omegas(a, be, quantum)


def kronecker(m: int, k: int, quantum: bool = False, pipeline: str = "rays") -> dict:
    return dt_invariants(kronecker_quiver(m), standard_central_charge(2), k, pipeline, quantum)


def table_to_json(table: Mapping) -> list[dict]:
    return [{"gamma": list(g), "omega": render(c) if isinstance(c, QRational) else str(Fraction(c))} for g, c in sorted(table.items())]


def table_to_csv(table: Mapping) -> str:
    lines = ["gamma,omega"]
    for row in table_to_json(table):
        lines.append('"' + " ".join(str(x) for x in row["gamma"]) + '",' + row["omega"])
    return "\n".join(lines) + "\n"
