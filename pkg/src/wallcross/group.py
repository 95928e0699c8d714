"""Truncated pronilpotent groups over the Lie backends.

Torus and divergence-free elements are stored as substitution automorphisms: the image
of each coordinate monomial x_i is x_i * (1 + h_i) with h_i a series supported on the
truncation's lattice points.  The Lie algebra acts by derivations through an
anti-homomorphism, so the group product is composition of substitutions in the order

    (g * h)(x_i) = h(x_i) with every x_j replaced by g(x_j).

Quantum elements are units 1 + sum c_g X_g of the truncated quantum torus, where
X_a X_b = t^<a,b> X_{a+b} and the Lie basis vector e_g is X_g / (t - 1/t).

All series are dicts from truncation point indices to coefficients.  Points are
indexed in degree order, so truncating to degree d keeps a prefix of indices.
"""
from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

from gmpy2 import mpq

from .errors import GenericityError, InvariantError
from .lattice import Vector, content, dot, is_zero, parallel, primitive, vscale
from .liealg import (
    DivFreeBackend,
    LieBackend,
    LieElement,
    LieError,
    QuantumTorusBackend,
    TorusBackend,
    Truncation,
)
from .scalars import QRational, QZERO, t_minus_inv

_TMI = t_minus_inv()
_TMI_INV = _TMI.inverse()

Series = dict


# ---------------------------------------------------------------- series kernels


def _clean(s: Series) -> Series:
    return {i: c for i, c in s.items() if c}


def _cut(s: Series, end: int) -> Series:
    return {i: c for i, c in s.items() if i < end}


def _smul(tr: Truncation, a: Series, b: Series, d: int) -> Series:
    """Product of two series without constant terms, keeping degree <= d."""
    if not a or not b:
        return {}
    deg = tr.deg
    add = tr.add
    bs = sorted(b.items())
    out: Series = {}
    for i, x in a.items():
        room = d - deg[i]
        if room <= 0:
            continue
        row = add[i]
        for j, y in bs:
            if deg[j] > room:
                break
            s = row[j]
            v = x * y
            if s in out:
                out[s] += v
            else:
                out[s] = v
    return _clean(out)


def _sadd(a: Series, b: Series, cb=1) -> Series:
    out = dict(a)
    for i, y in b.items():
        v = y * cb if cb != 1 else y
        if i in out:
            v = out[i] + v
            if v:
                out[i] = v
            else:
                del out[i]
        elif v:
            out[i] = v
    return out


def _smul1(tr, a, b, d):
    """(1 + a)(1 + b) - 1."""
    if not a:
        return b
    if not b:
        return a
    out = dict(a)
    for i, y in b.items():
        out[i] = out[i] + y if i in out else y
    deg = tr.deg
    add = tr.add
    bs = sorted(b.items())
    for i, x in a.items():
        room = d - deg[i]
        if room <= 0:
            continue
        row = add[i]
        for j, y in bs:
            if deg[j] > room:
                break
            s = row[j]
            if s in out:
                out[s] += x * y
            else:
                out[s] = x * y
    return _clean(out)


def _sinv1(tr, a, d):
    """(1 + a)^-1 - 1."""
    out: Series = {}
    p = {i: -c for i, c in a.items()}
    neg = dict(p)
    while p:
        for i, y in p.items():
            out[i] = out[i] + y if i in out else y
        p = _smul(tr, p, neg, d)
    return _clean(out)


def _truncate_deg(tr, s, d):
    return _cut(s, tr.level_end[min(d, tr.k)]) if d >= 0 else {}


class _Substitution:
    """Evaluates series at the images x_j -> x_j (1 + eta_j), caching monomial images."""

    def __init__(self, tr: Truncation, eta: Sequence[Series], d: int):
        self.tr = tr
        self.eta = eta
        self.d = d
        self._pow: dict[tuple[int, int], Series] = {}
        self._mono: dict[int, Series] = {}

    def power(self, j: int, e: int) -> Series:
        key = (j, e)
        p = self._pow.get(key)
        if p is not None:
            return p
        if e == 0:
            p = {}
        elif e == 1:
            p = self.eta[j]
        elif e == -1:
            p = _sinv1(self.tr, self.eta[j], self.d)
        elif e > 0:
            p = _smul1(self.tr, self.power(j, e - 1), self.eta[j], self.d)
        else:
            p = _smul1(self.tr, self.power(j, e + 1), self.power(j, -1), self.d)
        self._pow[key] = p
        return p

    def mono(self, i: int) -> Series:
        """prod_j (1 + eta_j)^{g_j} - 1 for g = points[i], truncated to degree d - deg(g)."""
        m = self._mono.get(i)
        if m is not None:
            return m
        tr = self.tr
        room = self.d - tr.deg[i]
        m = {}
        if room > 0:
            end = tr.level_end[min(room, tr.k)]
            for j, e in enumerate(tr.points[i]):
                if e and self.eta[j]:
                    f = {t: c for t, c in self.power(j, e).items() if t < end}
                    m = _smul1(tr, m, f, room) if m else f
        self._mono[i] = m
        return m

    def apply(self, s: Series) -> Series:
        """s(x (1 + eta)) for a series s without constant term."""
        add = self.tr.add
        out: Series = {}
        mono = self.mono
        for i, c in s.items():
            if i in out:
                out[i] += c
            else:
                out[i] = c
            row = add[i]
            for j, f in mono(i).items():
                k = row[j]
                v = c * f
                if k in out:
                    out[k] += v
                else:
                    out[k] = v
        return _clean(out)


# ---------------------------------------------------------------- quantum kernels


@lru_cache(maxsize=64)
def _twist_table(lattice, tr: Truncation):
    pts = tr.points
    return tuple({j: lattice.pairing(p, pts[j]) for j in tr.add[i]} for i, p in enumerate(pts))


def _qmul(be: QuantumTorusBackend, tr, a: Series, b: Series, d: int) -> Series:
    if not a or not b:
        return {}
    deg = tr.deg
    add = tr.add
    tw = _twist_table(be.lattice, tr)
    bs = sorted(b.items())
    out: Series = {}
    for i, x in a.items():
        room = d - deg[i]
        if room <= 0:
            continue
        row = add[i]
        trow = tw[i]
        for j, y in bs:
            if deg[j] > room:
                break
            s = row[j]
            v = (x * y).shift(trow[j])
            if s in out:
                out[s] = out[s] + v
            else:
                out[s] = v
    return _clean(out)


def _qmul1(be, tr, a, b, d):
    return _sadd(_sadd(a, b), _qmul(be, tr, a, b, d))


# ---------------------------------------------------------------- per-point tables


@lru_cache(maxsize=64)
def _torus_table(be: TorusBackend, tr: Truncation):
    """(iota(g), sign(g), kernel flag) for every truncation point."""
    out = []
    for p in tr.points:
        io = be.lattice.iota(p)
        out.append((io, be.sign(p), is_zero(io)))
    return tuple(out)


def _is_quantum(be: LieBackend) -> bool:
    return isinstance(be, QuantumTorusBackend)


def _check_faithful(be: LieBackend):
    if isinstance(be, DivFreeBackend) and not be.faithful:
        raise LieError("divergence-free group elements need a pairing without kernel on the vector-field side")


# ---------------------------------------------------------------- group elements


class GroupElement:
    """Element of the truncated group; ``level`` <= trunc.k is the effective truncation degree."""

    __slots__ = ("backend", "trunc", "level", "data", "_closure")

    def __init__(self, backend: LieBackend, trunc: Truncation, data, level: int | None = None):
        self.backend = backend
        self.trunc = trunc
        self.level = trunc.k if level is None else level
        self.data = data
        self._closure = None

    @classmethod
    def identity(cls, backend: LieBackend, trunc: Truncation, level: int | None = None) -> "GroupElement":
        if _is_quantum(backend):
            return cls(backend, trunc, {}, level)
        return cls(backend, trunc, tuple({} for _ in range(trunc.dim)), level)

    def is_identity(self) -> bool:
        if _is_quantum(self.backend):
            return not self.data
        return not any(self.data)

    def _check(self, other: "GroupElement"):
        if self.backend != other.backend:
            raise LieError("backend mismatch")
        if self.trunc != other.trunc or self.level != other.level:
            raise LieError("truncation mismatch")

    def __mul__(self, other: "GroupElement") -> "GroupElement":
        return mul(self, other)

    def inverse(self) -> "GroupElement":
        return inv(self)

    def log(self) -> LieElement:
        return log_group(self)

    def truncate(self, d: int) -> "GroupElement":
        d = min(d, self.level)
        end = self.trunc.level_end[d]
        if _is_quantum(self.backend):
            return GroupElement(self.backend, self.trunc, _cut(self.data, end), d)
        return GroupElement(self.backend, self.trunc, tuple(_cut(h, end) for h in self.data), d)

    def series(self) -> dict:
        """Readable form: {point: coeff} (quantum) or a list of {point: coeff} per coordinate."""
        pts = self.trunc.points
        if _is_quantum(self.backend):
            return {pts[i]: c for i, c in sorted(self.data.items())}
        return [{pts[i]: c for i, c in sorted(h.items())} for h in self.data]

    def __eq__(self, other) -> bool:
        if not isinstance(other, GroupElement):
            return NotImplemented
        return (
            self.backend == other.backend
            and self.trunc == other.trunc
            and self.level == other.level
            and self.data == other.data
        )

    def __repr__(self) -> str:
        return f"GroupElement(level={self.level}, series={self.series()})"

    def to_json(self) -> dict:
        return {"k": self.level, "log": log_group(self).to_json()}


def mul(g: GroupElement, h: GroupElement) -> GroupElement:
    """Composition g o h of automorphisms (quantum: the product in the opposite algebra)."""
    g._check(h)
    return _compose(h, g)


def _compose(g: GroupElement, h: GroupElement) -> GroupElement:
    """Substitute h's images into g's images; quantum: the algebra product g h."""
    be, tr, d = g.backend, g.trunc, g.level
    if _is_quantum(be):
        return GroupElement(be, tr, _qmul1(be, tr, g.data, h.data, d), d)
    if not any(h.data):
        return g
    if not any(g.data):
        return h
    sub = _Substitution(tr, h.data, d)
    images = tuple(_smul1(tr, h.data[i], sub.apply(g.data[i]), d) for i in range(tr.dim))
    return GroupElement(be, tr, images, d)


def inv(g: GroupElement) -> GroupElement:
    be, tr, d = g.backend, g.trunc, g.level
    if _is_quantum(be):
        return GroupElement(be, tr, _qinv1(be, tr, g.data, d), d)
    # fixed point of eta_i = 1/(1 + g_i(x (1 + eta))) - 1, one more correct degree per pass
    eta: tuple = tuple({} for _ in range(tr.dim))
    for m in range(1, d + 1):
        sub = _Substitution(tr, eta, m)
        eta = tuple(_sinv1(tr, sub.apply(_truncate_deg(tr, gi, m)), m) for gi in g.data)
    return GroupElement(be, tr, eta, d)


def _qinv1(be, tr, a, d):
    out: Series = {}
    neg = {i: -c for i, c in a.items()}
    p = dict(neg)
    while p:
        out = _sadd(out, p)
        p = _qmul(be, tr, p, neg, d)
    return out


def group_product(factors: Sequence[GroupElement], backend=None, trunc=None, level=None) -> GroupElement:
    """Left-to-right product; an empty list needs backend and trunc."""
    if not factors:
        return GroupElement.identity(backend, trunc, level)
    out = factors[0]
    for f in factors[1:]:
        out = mul(out, f)
    return out


# ---------------------------------------------------------------- exp and log


def _derivation(be: LieBackend, tr: Truncation, a: LieElement) -> list[Series]:
    """d_i = D(x_i) / x_i for the derivation attached to a."""
    n = tr.dim
    ds: list[Series] = [{} for _ in range(n)]
    idx = tr.index
    if isinstance(be, TorusBackend):
        tab = _torus_table(be, tr)
        for g, c in a.terms.items():
            i = idx[g]
            io, s, _ = tab[i]
            for j in range(n):
                if io[j]:
                    ds[j][i] = -c * s * io[j]
    else:
        for g, mu in a.terms.items():
            i = idx[g]
            cv = be.covector(mu)
            for j in range(n):
                if cv[j]:
                    ds[j][i] = -cv[j]
    return ds


def _lie_from_derivation(be: LieBackend, tr: Truncation, ds: Sequence[Series]) -> LieElement:
    pts = tr.points
    keys = sorted(set().union(*[set(d) for d in ds]))
    out = {}
    n = tr.dim
    if isinstance(be, TorusBackend):
        tab = _torus_table(be, tr)
        for i in keys:
            io, s, ker = tab[i]
            if ker:
                raise InvariantError(f"derivation has a component on kernel grade {pts[i]}")
            j0 = next(j for j in range(n) if io[j])
            c = -ds[j0].get(i, 0) / (s * io[j0])
            for j in range(n):
                if ds[j].get(i, 0) != -c * s * io[j]:
                    raise InvariantError(f"derivation is not Hamiltonian at grade {pts[i]}")
            if c:
                out[pts[i]] = mpq(c)
    else:
        for i in keys:
            fn = tuple(-ds[j].get(i, 0) for j in range(n))
            try:
                mu = be.solve_mu(fn)
            except LieError as exc:
                raise InvariantError(f"derivation at grade {pts[i]}: {exc}") from None
            if be.pair(mu, pts[i]) != 0:
                raise InvariantError(f"derivation at grade {pts[i]} is not divergence free")
            if not be.is_zero(mu):
                out[pts[i]] = mu
    return LieElement(be, out, _trusted=True)


def _check_support(a: LieElement, tr: Truncation) -> LieElement:
    keep = {}
    for g, c in a.terms.items():
        if g in tr.index:
            keep[g] = c
        elif not tr.cone.contains(g):
            raise LieError(f"grade {g} lies outside the truncation cone")
    return LieElement(a.backend, keep, _trusted=True)


def _ray_of(a: LieElement) -> Vector | None:
    gs = list(a.terms)
    if not gs:
        return None
    r = primitive(gs[0])
    if all(primitive(g) == r for g in gs):
        return r
    return None


def _univariate_exp(u: dict[int, object], nmax: int, one) -> dict[int, object]:
    """exp(u(z)) - 1 for u without constant term, coefficients up to z^nmax."""
    e = {0: one}
    for n in range(1, nmax + 1):
        acc = None
        for k in range(1, n + 1):
            if k in u and (n - k) in e:
                v = u[k] * e[n - k] * k
                acc = v if acc is None else acc + v
        if acc is not None and acc:
            e[n] = acc / n
    del e[0]
    return e


def exp_lie(a: LieElement, trunc: Truncation, level: int | None = None) -> GroupElement:
    be = a.backend
    _check_faithful(be)
    d = trunc.k if level is None else level
    a = _check_support(a, trunc)
    a = a.restrict(lambda g: trunc.phi(g) <= d)
    if not a.terms:
        return GroupElement.identity(be, trunc, d)
    ray = _ray_of(a)
    idx = trunc.index
    if ray is not None:
        nmax = d // trunc.phi(ray)
        steps = {content(g): c for g, c in a.terms.items()}
        pos = {n: idx[vscale(n, ray)] for n in range(1, nmax + 1)}
        if _is_quantum(be):
            u = {n: c * _TMI_INV for n, c in steps.items()}
            e = _univariate_exp(u, nmax, QRational(1))
            return GroupElement(be, trunc, {pos[n]: c for n, c in e.items()}, d)
        if isinstance(be, TorusBackend):
            io = be.lattice.iota(ray)
            s = be.sign(ray)
            base = {n: -n * c * (s**n) for n, c in steps.items()}
            images = []
            for j in range(trunc.dim):
                u = {n: v * io[j] for n, v in base.items()} if io[j] else {}
                e = _univariate_exp(u, nmax, mpq(1)) if u else {}
                images.append({pos[n]: c for n, c in e.items()})
            return GroupElement(be, trunc, tuple(images), d)
        images = []
        for j in range(trunc.dim):
            u = {}
            for n, mu in steps.items():
                v = be.covector(mu)[j]
                if v:
                    u[n] = -v
            e = _univariate_exp(u, nmax, mpq(1)) if u else {}
            images.append({pos[n]: c for n, c in e.items()})
        return GroupElement(be, trunc, tuple(images), d)

    if _is_quantum(be):
        x = {idx[g]: c * _TMI_INV for g, c in a.terms.items()}
        out: Series = {}
        p = dict(x)
        n = 1
        fact = 1
        while p:
            out = _sadd(out, {i: c / fact for i, c in p.items()})
            n += 1
            fact *= n
            p = _qmul(be, trunc, p, x, d)
        return GroupElement(be, trunc, out, d)

    ds = _derivation(be, trunc, a)
    n = trunc.dim
    deg, add, pts = trunc.deg, trunc.add, trunc.points
    gens = sorted(set().union(*[set(x) for x in ds]), key=deg.__getitem__)
    dvec = [(p, tuple(ds[j].get(p, 0) for j in range(n))) for p in gens]
    images = []
    for i in range(n):
        # v = D^m(x_i) / x_i, with D(x^q v) = x^q (D v + v sum_j q_j ds_j)
        v = ds[i]
        total: Series = {}
        m = 1
        fact = 1
        while v:
            for q, c in v.items():
                c = c / fact
                total[q] = total[q] + c if q in total else c
            nxt: Series = {}
            for q, c in v.items():
                room = d - deg[q]
                if room <= 0:
                    continue
                row = add[q]
                qv = pts[q]
                for p, dv in dvec:
                    if deg[p] > room:
                        break
                    w = dv[i]
                    for j in range(n):
                        if qv[j] and dv[j]:
                            w += qv[j] * dv[j]
                    if w:
                        t = row[p]
                        nxt[t] = nxt[t] + c * w if t in nxt else c * w
            v = _clean(nxt)
            m += 1
            fact *= m
        images.append(_clean(total))
    return GroupElement(be, trunc, tuple(images), d)


def _exp_act(a: LieElement, g: GroupElement) -> GroupElement:
    """mul(exp(a), g) without forming exp(a): exp of the derivation of a applied to x_i (1 + g_i)."""
    be, tr, d = g.backend, g.trunc, g.level
    if _is_quantum(be) or not a.terms:
        return mul(exp_lie(a, tr, d), g) if a.terms else g
    ds = _derivation(be, tr, a)
    n = tr.dim
    deg, add, pts = tr.deg, tr.add, tr.points
    gens = sorted(set().union(*[set(x) for x in ds]), key=deg.__getitem__)
    dvec = [(p, tuple(ds[j].get(p, 0) for j in range(n))) for p in gens]
    dots: dict = {}

    def step(v, i):
        nxt: Series = {}
        for q, c in v.items():
            room = d - deg[q]
            if room <= 0:
                continue
            row = add[q]
            qd = dots.get(q)
            if qd is None:
                qv = pts[q]
                qd = dots[q] = [sum(x * y for x, y in zip(qv, dv) if x) for _, dv in dvec]
            for (p, dv), e in zip(dvec, qd):
                if deg[p] > room:
                    break
                w = dv[i] + e
                if w:
                    t = row[p]
                    nxt[t] = nxt[t] + c * w if t in nxt else c * w
        return _clean(nxt)

    images = []
    for i in range(n):
        total = dict(g.data[i])
        # v_m = D^m(x_i (1 + g_i)) / x_i
        v = _sadd(ds[i], step(g.data[i], i)) if g.data[i] else ds[i]
        m = 1
        fact = 1
        while v:
            for q, c in v.items():
                c = c / fact
                total[q] = total[q] + c if q in total else c
            v = step(v, i)
            m += 1
            fact *= m
        images.append(_clean(total))
    return GroupElement(be, tr, tuple(images), d)


def log_group(g: GroupElement) -> LieElement:
    be, tr, d = g.backend, g.trunc, g.level
    if g.is_identity():
        return LieElement.zero(be)
    if _is_quantum(be):
        out: Series = {}
        p = dict(g.data)
        n = 1
        while p:
            out = _sadd(out, {i: c * Fraction((-1) ** (n + 1), n) for i, c in p.items()})
            n += 1
            p = _qmul(be, tr, p, g.data, d)
        return _lie_from_quantum(be, tr, out)
    sub = _Substitution(tr, g.data, d)
    ds = []
    for i in range(tr.dim):
        eta = g.data[i]
        w = eta
        total: Series = {}
        n = 1
        while w:
            total = _sadd(total, w, Fraction((-1) ** (n + 1), n))
            rw = sub.apply(w)
            w = _sadd(_sadd(rw, _smul(tr, eta, rw, d)), w, -1)
            n += 1
        ds.append(total)
    return _lie_from_derivation(be, tr, ds)


def _lie_from_quantum(be, tr, s: Series) -> LieElement:
    out = {}
    for i, c in s.items():
        p = tr.points[i]
        if be.in_kernel(p):
            raise InvariantError(f"quantum logarithm has a component on kernel grade {p}")
        out[p] = c * _TMI
    return LieElement(be, out, _trusted=True)


def leading_log(r: GroupElement, d: int) -> LieElement:
    """Degree-d part of log(r), assuming r is the identity below degree d."""
    be, tr = r.backend, r.trunc
    lo = tr.level_end[d - 1]
    hi = tr.level_end[d]
    if _is_quantum(be):
        if any(i < lo for i in r.data):
            raise InvariantError("element is not trivial below the peeling degree")
        return _lie_from_quantum(be, tr, {i: c for i, c in r.data.items() if i < hi})
    if any(i < lo for h in r.data for i in h):
        raise InvariantError("element is not trivial below the peeling degree")
    return _lie_from_derivation(be, tr, [{i: c for i, c in h.items() if i < hi} for h in r.data])


# ---------------------------------------------------------------- elementary factors


def canonical_coefficient(be: LieBackend, n: int, c=1):
    """Coefficient of e_{n g} in log T_g^c: c/n^2, or its quantum deformation."""
    if _is_quantum(be):
        tn = QRational.t_power(n) - QRational.t_power(-n)
        return _TMI / (tn * n) * c
    return mpq(c) / (n * n)


def elementary_T(backend: LieBackend, trunc: Truncation, gamma: Sequence[int], c=1, mu=None) -> GroupElement:
    """T_g^c: exp(c sum_n e_{ng}/n^2) (torus and quantum) or exp(c sum_n x^{ng} d_mu / n) (divfree)."""
    gamma = tuple(int(x) for x in gamma)
    if content(gamma) != 1:
        raise LieError(f"{gamma} is not primitive")
    if backend.in_kernel(gamma):
        raise LieError(f"{gamma} lies in the kernel sublattice")
    if not trunc.cone.contains(gamma):
        raise LieError(f"{gamma} lies outside the truncation cone")
    nmax = trunc.k // trunc.phi(gamma)
    if isinstance(backend, DivFreeBackend):
        if mu is None:
            raise LieError("divergence-free generators need a covector mu")
        terms = {vscale(n, gamma): tuple(mpq(c) * x / n for x in mu) for n in range(1, nmax + 1)}
    else:
        terms = {vscale(n, gamma): canonical_coefficient(backend, n, c) for n in range(1, nmax + 1)}
    if c == 0:
        terms = {}
    return exp_lie(LieElement(backend, terms), trunc)


# ---------------------------------------------------------------- peeling


def peel(g: GroupElement, block_of: Callable[[Vector], int], nblocks: int) -> list[LieElement]:
    """Logs L_0..L_{n-1} with g = exp(L_0) exp(L_1) ... and supp L_b inside block b.

    Works degree by degree: at degree d the residual P^-1 g is trivial below d, and
    its degree-d part is central modulo degree d+1, so it can be split by block.
    """
    be, tr = g.backend, g.trunc
    logs: list[dict] = [{} for _ in range(nblocks)]
    zero = be.is_zero
    degrees = {tr.deg[i] for i in _support_closure(g)}
    for d in range(1, g.level + 1):
        if d not in degrees:
            continue
        r = g.truncate(d)
        for b in range(nblocks):
            if logs[b]:
                r = _exp_act(LieElement(be, logs[b], _trusted=True).scale(-1), r)
        delta = leading_log(r, d)
        for gamma, c in delta.terms.items():
            b = block_of(gamma)
            cur = logs[b]
            if gamma in cur:
                v = _add_fiber(cur[gamma], c)
                if zero(v):
                    del cur[gamma]
                else:
                    cur[gamma] = v
            else:
                cur[gamma] = c
    return [LieElement(be, dict(sorted(L.items())), _trusted=True) for L in logs]


def _support_closure(g: GroupElement) -> set[int]:
    """Indices in the additive closure of the support of g; every log component lives there."""
    if g._closure is not None:
        return g._closure
    tr = g.trunc
    end = tr.level_end[g.level]
    seeds = set(g.data) if _is_quantum(g.backend) else set().union(*[set(h) for h in g.data])
    out = set(seeds)
    frontier = list(seeds)
    while frontier:
        nxt = []
        for i in frontier:
            row = tr.add[i]
            for j in seeds:
                k = row.get(j)
                if k is not None and k < end and k not in out:
                    out.add(k)
                    nxt.append(k)
        frontier = nxt
    g._closure = out
    return out


def _add_fiber(x, y):
    if isinstance(x, tuple):
        return tuple(a + b for a, b in zip(x, y))
    return x + y


def decompose_three(g: GroupElement, y: Sequence) -> tuple[GroupElement, GroupElement, GroupElement]:
    """g = g_minus g_zero g_plus with logs supported where y < 0, y = 0, y > 0."""

    def block(gamma):
        v = dot(y, gamma)
        return 0 if v < 0 else 1 if v == 0 else 2

    logs = peel(g, block, 3)
    return tuple(exp_lie(L, g.trunc, g.level) for L in logs)  # type: ignore[return-value]


def decompose_three_logs(g: GroupElement, y: Sequence) -> tuple[LieElement, LieElement, LieElement]:
    def block(gamma):
        v = dot(y, gamma)
        return 0 if v < 0 else 1 if v == 0 else 2

    return tuple(peel(g, block, 3))  # type: ignore[return-value]


# ---------------------------------------------------------------- ray orders


class RayOrder:
    """Exact total preorder on lattice points; factors are multiplied in increasing key."""

    def key(self, gamma: Sequence[int]):
        raise NotImplementedError


class LineOrder(RayOrder):
    """Order of wall crossings along the segment from y_start (positive on C) to y_end (negative on C)."""

    def __init__(self, y_start: Sequence, y_end: Sequence):
        self.y_start = tuple(Fraction(x) for x in y_start)
        self.y_end = tuple(Fraction(x) for x in y_end)

    def key(self, gamma):
        a = dot(self.y_start, gamma)
        b = dot(self.y_end, gamma)
        if not (a > 0 > b):
            raise GenericityError(f"segment does not cross the wall of {tuple(gamma)} transversally")
        return a / (a - b)


def _rot_ccw(v):
    return (-v[1], v[0])


def _rot_cw(v):
    return (v[1], -v[0])


def det2(a, b):
    return a[0] * b[1] - a[1] * b[0]


class PhaseOrder(RayOrder):
    """Increasing phase of Z(g) = (Re Z . g, Im Z . g) inside a half-plane containing Z(C)."""

    def __init__(self, re: Sequence, im: Sequence, cone=None):
        self.re = tuple(Fraction(x) for x in re)
        self.im = tuple(Fraction(x) for x in im)
        self.normal = None
        if cone is not None:
            self.normal = self.find_normal([self.z(g) for g in cone.generators])

    def z(self, gamma):
        return (dot(self.re, gamma), dot(self.im, gamma))

    @staticmethod
    def find_normal(images):
        """A vector n with n.z > 0 for every z in images, or a GenericityError."""
        if any(z == (0, 0) for z in images):
            raise GenericityError("central charge vanishes on the cone")
        cands = []
        for a in images:
            cands.append(a)
            for b in images:
                cands.append(tuple(x + y for x, y in zip(_rot_ccw(a), _rot_cw(b))))
        for n in cands:
            if all(n[0] * z[0] + n[1] * z[1] > 0 for z in images):
                return n
        raise GenericityError("central charge image of the cone is not contained in an open half-plane")

    def key(self, gamma):
        if self.normal is None:
            raise ValueError("PhaseOrder needs a cone to fix the reference half-plane")
        z = self.z(gamma)
        u = self.normal[0] * z[0] + self.normal[1] * z[1]
        if u <= 0:
            raise GenericityError(f"Z{tuple(gamma)} leaves the reference half-plane")
        w = _rot_ccw(self.normal)
        return (w[0] * z[0] + w[1] * z[1]) / u

    def phase_less(self, a, b) -> bool:
        return det2(self.z(a), self.z(b)) > 0


def ray_blocks(trunc: Truncation, order: RayOrder) -> tuple[list, dict]:
    """Group truncation points by order key; non-parallel points sharing a key are an error."""
    by_key: dict = {}
    for p in trunc.points:
        by_key.setdefault(order.key(p), []).append(p)
    keys = sorted(by_key)
    block = {}
    rays = []
    for b, k in enumerate(keys):
        pts = by_key[k]
        r = primitive(pts[0])
        for p in pts[1:]:
            if not parallel(p, r):
                raise GenericityError(f"order ties non-parallel points {r} and {primitive(p)}")
        rays.append(r)
        for p in pts:
            block[p] = b
    return rays, block


def factorize_by_rays(g: GroupElement, order: RayOrder) -> list[tuple[Vector, GroupElement]]:
    """Ordered factors g = prod exp(L_ray); only nontrivial factors are returned."""
    return [(r, exp_lie(L, g.trunc, g.level)) for r, L in factorize_logs(g, order)]


def factorize_logs(g: GroupElement, order: RayOrder) -> list[tuple[Vector, LieElement]]:
    rays, block = ray_blocks(g.trunc, order)
    logs = peel(g, block.__getitem__, len(rays))
    return [(r, L) for r, L in zip(rays, logs) if L.terms]


def factorization_to_json(factors: Sequence[tuple[Vector, LieElement]]) -> list[dict]:
    return [{"ray_primitive": list(r), "log_coefficients": L.to_json()} for r, L in factors]


def factorize_by_sectors(g: GroupElement, re: Sequence, im: Sequence, sectors: Sequence) -> list[GroupElement]:
    """Sector products A_V with g = A_1 A_2 ... (sectors listed in increasing phase).

    Each sector is a pair (start, end) of rational vectors in R^2 bounding the open
    region swept counterclockwise from start to end (less than a half-turn).
    """
    tr = g.trunc
    order = PhaseOrder(re, im, tr.cone)

    def sector_of(gamma):
        z = order.z(gamma)
        hits = []
        for i, (a, b) in enumerate(sectors):
            da, db = det2(a, z), det2(z, b)
            if da == 0 or db == 0:
                if da == 0 and (a[0] * z[0] + a[1] * z[1]) > 0 or db == 0 and (b[0] * z[0] + b[1] * z[1]) > 0:
                    raise GenericityError(f"Z{gamma} lies on a sector boundary")
            if da > 0 and db > 0:
                hits.append(i)
        if len(hits) != 1:
            raise GenericityError(f"Z{gamma} lies in {len(hits)} sectors")
        return hits[0]

    block = {p: sector_of(p) for p in tr.points}
    # sectors must follow the phase order of the points they contain
    last = None
    for i in range(len(sectors)):
        ks = [order.key(p) for p in tr.points if block[p] == i]
        if not ks:
            continue
        if last is not None and min(ks) <= last:
            raise GenericityError("sectors are not listed in increasing phase order")
        last = max(ks)
    logs = peel(g, block.__getitem__, len(sectors))
    return [exp_lie(L, tr, g.level) for L in logs]
