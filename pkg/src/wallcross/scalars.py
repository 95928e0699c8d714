"""Exact coefficient rings: rationals and q-rationals.

A q-rational is a ratio of integer Laurent polynomials in t = q^(1/2).  Internally it is
``t**val * num / den`` with ``num`` and ``den`` in Z[t] (flint polynomials), neither
divisible by t, coprime over Z[t], and ``den`` with positive leading coefficient.
This normal form is unique, so equality is structural.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import flint
import gmpy2
from gmpy2 import mpq

_ZERO = flint.fmpz_poly([])
_ONE = flint.fmpz_poly([1])


class PoleError(ArithmeticError):
    pass


def as_mpq(x) -> mpq:
    if isinstance(x, str):
        return mpq(Fraction(x))
    return mpq(x)


def _strip_t(p: flint.fmpz_poly) -> tuple[flint.fmpz_poly, int]:
    cs = p.coeffs()
    i = 0
    while i < len(cs) and cs[i] == 0:
        i += 1
    if i == 0:
        return p, 0
    return flint.fmpz_poly(cs[i:]), i


class QRational:
    __slots__ = ("num", "den", "val", "_hash")

    def __init__(self, num=0, den=None, val: int = 0, *, _normal: bool = False):
        if _normal:
            self.num, self.den, self.val = num, den, val
            self._hash = None
            return
        if not isinstance(num, flint.fmpz_poly):
            q = mpq(num)
            num = flint.fmpz_poly([int(q.numerator)])
            d = flint.fmpz_poly([int(q.denominator)])
            den = d if den is None else den * d
        if den is None:
            den = _ONE
        elif not isinstance(den, flint.fmpz_poly):
            q = mpq(den)
            num = num * int(q.denominator)
            den = flint.fmpz_poly([int(q.numerator)])
        self.num, self.den, self.val = _normalize(num, den, val)
        self._hash = None

    # constructors
    @classmethod
    def t_power(cls, n: int, coeff: int = 1) -> "QRational":
        if coeff == 0:
            return QZERO
        return cls(flint.fmpz_poly([coeff]), _ONE, n, _normal=True)

    @classmethod
    def laurent(cls, coeffs: dict) -> "QRational":
        """From {exponent of t: rational coefficient}."""
        items = {e: Fraction(c) for e, c in coeffs.items() if c != 0}
        if not items:
            return QZERO
        lo = min(items)
        hi = max(items)
        den = 1
        for c in items.values():
            den = den * c.denominator // gcd_int(den, c.denominator)
        cs = [0] * (hi - lo + 1)
        for e, c in items.items():
            cs[e - lo] = int(c * den)
        return cls(flint.fmpz_poly(cs), flint.fmpz_poly([den]), lo)

    # predicates
    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __bool__(self) -> bool:
        return not self.num.is_zero()

    def is_laurent(self) -> bool:
        """True when the value is an integer Laurent polynomial."""
        return self.den == _ONE

    def is_constant(self) -> bool:
        return self.val == 0 and self.num.degree() <= 0 and self.den.degree() <= 0

    # arithmetic
    def __add__(self, other):
        if not isinstance(other, QRational):
            if other == 0:
                return self
            other = QRational(other)
        if other.num.is_zero():
            return self
        if self.num.is_zero():
            return other
        a, b = self.val, other.val
        m = min(a, b)
        n1 = self.num if a == m else _shift(self.num, a - m)
        n2 = other.num if b == m else _shift(other.num, b - m)
        if self.den == other.den:
            return QRational(n1 + n2, self.den, m)
        return QRational(n1 * other.den + n2 * self.den, self.den * other.den, m)

    __radd__ = __add__

    def __neg__(self):
        return QRational(-self.num, self.den, self.val, _normal=True)

    def __sub__(self, other):
        if not isinstance(other, QRational):
            other = QRational(other)
        return self + (-other)

    def __rsub__(self, other):
        return QRational(other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, QRational):
            if isinstance(other, (int, Fraction)) or type(other) is type(mpq(0)):
                q = mpq(other)
                if q == 0:
                    return QZERO
                if q == 1:
                    return self
                return QRational(self.num * int(q.numerator), self.den * int(q.denominator), self.val)
            return NotImplemented
        if self.num.is_zero() or other.num.is_zero():
            return QZERO
        return QRational(self.num * other.num, self.den * other.den, self.val + other.val)

    __rmul__ = __mul__

    def inverse(self) -> "QRational":
        if self.num.is_zero():
            raise ZeroDivisionError("q-rational division by zero")
        return QRational(self.den, self.num, -self.val)

    def __truediv__(self, other):
        if not isinstance(other, QRational):
            q = mpq(other)
            if q == 0:
                raise ZeroDivisionError("q-rational division by zero")
            return QRational(self.num * int(q.denominator), self.den * int(q.numerator), self.val)
        return self * other.inverse()

    def __rtruediv__(self, other):
        return QRational(other) * self.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out = QONE
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def shift(self, n: int) -> "QRational":
        """Multiply by t**n."""
        if self.num.is_zero() or n == 0:
            return self
        return QRational(self.num, self.den, self.val + n, _normal=True)

    def adams(self, k: int) -> "QRational":
        """Substitute t -> t**k (k >= 1)."""
        if k == 1 or self.num.is_zero():
            return self
        return QRational(_spread(self.num, k), _spread(self.den, k), self.val * k)

    def __eq__(self, other):
        if not isinstance(other, QRational):
            try:
                other = QRational(other)
            except (TypeError, ValueError):
                return NotImplemented
        return self.val == other.val and self.num == other.num and self.den == other.den

    def __hash__(self):
        if self._hash is None:
            if self.is_constant():
                self._hash = hash(Fraction(int(self.num[0]) if not self.num.is_zero() else 0, int(self.den[0])))
            else:
                self._hash = hash((tuple(int(c) for c in self.num.coeffs()), tuple(int(c) for c in self.den.coeffs()), self.val))
        return self._hash

    # evaluation and rendering
    def at_one(self) -> Fraction:
        return specialize_q1(self)

    def laurent_coeffs(self) -> dict[int, Fraction]:
        """{exponent of t: coefficient}; requires a constant denominator."""
        if self.den.degree() > 0:
            raise ValueError("not a Laurent polynomial")
        d = int(self.den[0])
        return {self.val + i: Fraction(int(c), d) for i, c in enumerate(self.num.coeffs()) if c != 0}

    def __str__(self) -> str:
        return render(self)

    def __repr__(self) -> str:
        return f"QRational({render(self)!r})"

    @classmethod
    def parse(cls, s: str) -> "QRational":
        return parse_qrational(s)


def gcd_int(a: int, b: int) -> int:
    return int(gmpy2.gcd(a, b))


def _shift(p: flint.fmpz_poly, n: int) -> flint.fmpz_poly:
    return flint.fmpz_poly([0] * n + [int(c) for c in p.coeffs()])


def _spread(p: flint.fmpz_poly, k: int) -> flint.fmpz_poly:
    cs = p.coeffs()
    out = [0] * ((len(cs) - 1) * k + 1)
    for i, c in enumerate(cs):
        out[i * k] = int(c)
    return flint.fmpz_poly(out)


def _normalize(num: flint.fmpz_poly, den: flint.fmpz_poly, val: int):
    if den.is_zero():
        raise ZeroDivisionError("q-rational with zero denominator")
    if num.is_zero():
        return _ZERO, _ONE, 0
    num, a = _strip_t(num)
    den, b = _strip_t(den)
    val += a - b
    g = num.gcd(den)
    if g != _ONE:
        num = num // g
        den = den // g
    if den.leading_coefficient() < 0:
        num = -num
        den = -den
    return num, den, val


QZERO = QRational(_ZERO, _ONE, 0, _normal=True)
QONE = QRational(_ONE, _ONE, 0, _normal=True)
T = QRational.t_power(1)


def qrat(x) -> QRational:
    if isinstance(x, QRational):
        return x
    if isinstance(x, str):
        return parse_qrational(x)
    return QRational(x)


@dataclass(frozen=True)
class QuantumInteger:
    """[n]_q = (q^(n/2) - q^(-n/2)) / (q^(1/2) - q^(-1/2))."""

    n: int

    @property
    def value(self) -> QRational:
        n = self.n
        if n == 0:
            return QZERO
        sign = 1 if n > 0 else -1
        n = abs(n)
        # t^(1-n) + t^(3-n) + ... + t^(n-1)
        return QRational.laurent({e: sign for e in range(1 - n, n, 2)})

    def __str__(self) -> str:
        return render(self.value)


def quantum_integer(n: int) -> QuantumInteger:
    return QuantumInteger(int(n))


def t_minus_inv() -> QRational:
    """t - 1/t, the normalisation of the quantum torus generators."""
    return QRational.laurent({1: 1, -1: -1})


def specialize_q1(a) -> Fraction:
    """Value at q = 1 (t = 1); common factors were cancelled by the normal form."""
    if not isinstance(a, QRational):
        return Fraction(a)
    if a.num.is_zero():
        return Fraction(0)
    d = int(a.den(1))
    if d == 0:
        raise PoleError(f"pole at q=1: {render(a)}")
    return Fraction(int(a.num(1)), d)


# ---------------------------------------------------------------- text I/O


def _q_power(e: int) -> str:
    # e is an exponent of t = q^(1/2)
    if e == 0:
        return ""
    if e % 2 == 0:
        h = e // 2
        return "q" if h == 1 else f"q^{h}" if h > 0 else f"q^({h})"
    return f"q^({e}/2)"


def _render_laurent(terms: dict[int, Fraction]) -> str:
    if not terms:
        return "0"
    out = []
    for e in sorted(terms):
        c = terms[e]
        mono = _q_power(e)
        neg = c < 0
        ac = -c if neg else c
        if mono and ac == 1:
            body = mono
        elif mono:
            body = f"{ac}*{mono}"
        else:
            body = str(ac)
        if not out:
            out.append(("-" if neg else "") + body)
        else:
            out.append((" - " if neg else " + ") + body)
    return "".join(out)


def render(a) -> str:
    """Deterministic text: exponent-sorted Laurent polynomials in q with half-integer powers."""
    if not isinstance(a, QRational):
        return str(Fraction(a))
    if a.den.degree() <= 0:
        return _render_laurent(a.laurent_coeffs())
    num = {a.val + i: Fraction(int(c)) for i, c in enumerate(a.num.coeffs()) if c != 0}
    den = {i: Fraction(int(c)) for i, c in enumerate(a.den.coeffs()) if c != 0}
    return f"({_render_laurent(num)})/({_render_laurent(den)})"


def parse_qrational(s: str) -> QRational:
    """Parse a rational expression in q (half-integer powers allowed)."""
    import sympy

    t = sympy.Symbol("t", positive=True)
    expr = sympy.sympify(s.replace("^", "**"), locals={"q": t**2})
    expr = sympy.together(sympy.expand(expr))
    n, d = sympy.fraction(expr)
    return _from_sympy(n, t) / _from_sympy(d, t)


def _from_sympy(e, t) -> QRational:
    import sympy

    e = sympy.expand(e)
    terms: dict[int, Fraction] = {}
    for term in sympy.Add.make_args(e):
        c, rest = term.as_coeff_Mul()
        if rest == 1:
            p = 0
        else:
            p = sympy.degree(rest, t) if rest.is_polynomial(t) else None
            if rest.is_Pow and rest.base == t:
                p = rest.exp
            elif rest == t:
                p = 1
            if p is None or not sympy.Integer(p) == p:
                raise ValueError(f"cannot parse term {term}")
        terms[int(p)] = terms.get(int(p), Fraction(0)) + Fraction(int(c.p), int(c.q))
    return QRational.laurent(terms)
