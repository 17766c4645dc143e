"""Exact polynomial and rational-function algebra over Q and F_p.

Bivariate polynomials are sparse coefficient maps keyed by (deg_x, deg_y);
univariate polynomials (the perturbation variable t) are dense ascending
coefficient lists.  Coefficients are raw field representations: gmpy2.mpq
over Q, ints in [0, p) over F_p.  Rational functions are kept in a unique
canonical form: numerator and denominator coprime, denominator monic under
graded-lex order over F_p, or primitive with positive leading coefficient
over Q.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import gmpy2
from gmpy2 import mpq, mpz

from .exactnum import FpElem, PFp, to_rational

__all__ = [
    "QQ",
    "GF",
    "MultiPoly",
    "RationalFunction",
    "UniPoly",
    "UniRF",
    "MinimalForm",
    "MinimalFormWitness",
    "DegenerateComposition",
    "UNDEFINED",
    "INDETERMINATE",
    "INCONCLUSIVE",
    "poly_ops",
    "poly_gcd",
    "mp_divexact",
    "rf_compose",
    "PerturbationOverflow",
    "DEGENERATE_LINE",
    "evaluate_pair",
    "minimal_form",
    "reduce_rf",
    "evaluate_rf",
    "perturbation_eval",
    "LineTracer",
]


class DegenerateComposition(ArithmeticError):
    """Raised when a substitution produces an identically zero denominator."""


class _Sentinel:
    __slots__ = ("_name",)

    def __init__(self, name: str):
        self._name = name

    def __repr__(self):
        return self._name


#: Reduction of a map whose denominator vanishes identically mod p.
UNDEFINED = _Sentinel("Undefined")
#: Evaluation hit 0/0; cancellation at the composition level is required.
INDETERMINATE = _Sentinel("IndeterminateAtPoint")
#: Perturbation limit is direction dependent or degenerate.
INCONCLUSIVE = _Sentinel("Inconclusive")


# ---------------------------------------------------------------------------
# coefficient fields


class QQField:
    """The rationals, with mpq coefficients."""

    kind = "QQ"
    zero = mpq(0)
    one = mpq(1)

    @staticmethod
    def from_int(n: int) -> mpq:
        return mpq(n)

    @staticmethod
    def coerce(value) -> mpq:
        return to_rational(value)

    @staticmethod
    def add(a, b):
        return a + b

    @staticmethod
    def sub(a, b):
        return a - b

    @staticmethod
    def mul(a, b):
        return a * b

    @staticmethod
    def div(a, b):
        if b == 0:
            raise ZeroDivisionError("division by zero in Q")
        return a / b

    @staticmethod
    def neg(a):
        return -a

    @staticmethod
    def inv(a):
        if a == 0:
            raise ZeroDivisionError("inverse of zero in Q")
        return 1 / mpq(a)

    def __repr__(self):
        return "QQ"

    def __eq__(self, other):
        return isinstance(other, QQField)

    def __hash__(self):
        return hash("QQ")


QQ = QQField()


class PrimeField:
    """F_p with raw int residues in [0, p) as coefficients."""

    kind = "GF"
    __slots__ = ("p", "zero", "one")

    def __init__(self, p: int):
        self.p = p
        self.zero = 0
        self.one = 1 % p

    def from_int(self, n: int) -> int:
        return n % self.p

    def coerce(self, value) -> int:
        if isinstance(value, int):
            return value % self.p
        q = to_rational(value)
        den = int(q.denominator)
        if den % self.p == 0:
            raise ZeroDivisionError(f"{value} has negative valuation at {self.p}")
        return int(q.numerator) * pow(den, -1, self.p) % self.p

    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def mul(self, a, b):
        return a * b % self.p

    def div(self, a, b):
        if b == 0:
            raise ZeroDivisionError(f"division by zero in F_{self.p}")
        return a * pow(b, -1, self.p) % self.p

    def neg(self, a):
        return -a % self.p

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError(f"inverse of zero in F_{self.p}")
        return pow(a, -1, self.p)

    def __repr__(self):
        return f"GF({self.p})"

    def __eq__(self, other):
        return isinstance(other, PrimeField) and other.p == self.p

    def __hash__(self):
        return hash(("GF", self.p))


_GF_CACHE: dict[int, PrimeField] = {}


def GF(p: int) -> PrimeField:
    field = _GF_CACHE.get(p)
    if field is None:
        field = _GF_CACHE[p] = PrimeField(p)
    return field


def _same_field(a, b):
    if a.field != b.field:
        raise ValueError(f"mixed coefficient fields {a.field} and {b.field}")
    return a.field


# ---------------------------------------------------------------------------
# dense univariate polynomials (ascending coefficient lists)


def up_strip(f: list) -> list:
    while f and not f[-1]:
        f.pop()
    return f


def up_add(f: list, g: list, K) -> list:
    if len(f) < len(g):
        f, g = g, f
    out = list(f)
    for i, c in enumerate(g):
        out[i] = K.add(out[i], c)
    return up_strip(out)


def up_sub(f: list, g: list, K) -> list:
    out = list(f) + [K.zero] * (len(g) - len(f))
    for i, c in enumerate(g):
        out[i] = K.sub(out[i], c)
    return up_strip(out)


def up_neg(f: list, K) -> list:
    return [K.neg(c) for c in f]


def up_mul(f: list, g: list, K) -> list:
    if not f or not g:
        return []
    out = [K.zero] * (len(f) + len(g) - 1)
    if isinstance(K, PrimeField):
        p = K.p
        for i, a in enumerate(f):
            if a:
                for j, b in enumerate(g):
                    if b:
                        out[i + j] = (out[i + j] + a * b) % p
    else:
        for i, a in enumerate(f):
            if a:
                for j, b in enumerate(g):
                    if b:
                        out[i + j] = out[i + j] + a * b
    return up_strip(out)


def up_mul_ground(f: list, c, K) -> list:
    if not c:
        return []
    return up_strip([K.mul(a, c) for a in f])


def up_divmod(f: list, g: list, K) -> tuple[list, list]:
    """Division with remainder over a field."""
    if not g:
        raise ZeroDivisionError("polynomial division by zero")
    r = list(f)
    dg = len(g) - 1
    if len(r) - 1 < dg:
        return [], up_strip(r)
    inv_lc = K.inv(g[-1])
    quo = [K.zero] * (len(r) - dg)
    for k in range(len(r) - 1 - dg, -1, -1):
        c = r[k + dg]
        if not c:
            continue
        q = K.mul(c, inv_lc)
        quo[k] = q
        for i, b in enumerate(g):
            r[k + i] = K.sub(r[k + i], K.mul(q, b))
    return up_strip(quo), up_strip(r)


def up_divexact(f: list, g: list, K) -> list:
    quo, rem = up_divmod(f, g, K)
    if rem:
        raise ArithmeticError("inexact univariate division")
    return quo


def up_gcd(f: list, g: list, K) -> list:
    """Monic gcd via the Euclidean algorithm."""
    a, b = list(f), list(g)
    while b:
        a, b = b, up_divmod(a, b, K)[1]
    if not a:
        raise ValueError("gcd of two zero polynomials")
    inv_lc = K.inv(a[-1])
    return [K.mul(c, inv_lc) for c in a]


def up_eval(f: list, x, K):
    acc = K.zero
    for c in reversed(f):
        acc = K.add(K.mul(acc, x), c)
    return acc


def up_pow_table(f: list, n: int, K) -> list[list]:
    table = [[K.one]]
    for _ in range(n):
        table.append(up_mul(table[-1], f, K))
    return table


class UniPoly:
    """Dense univariate polynomial in the perturbation variable t."""

    __slots__ = ("coeffs", "field")

    def __init__(self, coeffs: Sequence, field):
        self.coeffs = up_strip([field.coerce(c) for c in coeffs])
        self.field = field

    @classmethod
    def _raw(cls, coeffs: list, field) -> "UniPoly":
        obj = object.__new__(cls)
        obj.coeffs = coeffs
        obj.field = field
        return obj

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def __add__(self, other):
        K = _same_field(self, other)
        return UniPoly._raw(up_add(self.coeffs, other.coeffs, K), K)

    def __sub__(self, other):
        K = _same_field(self, other)
        return UniPoly._raw(up_sub(self.coeffs, other.coeffs, K), K)

    def __mul__(self, other):
        K = _same_field(self, other)
        return UniPoly._raw(up_mul(self.coeffs, other.coeffs, K), K)

    def __neg__(self):
        return UniPoly._raw(up_neg(self.coeffs, self.field), self.field)

    def __eq__(self, other):
        return (
            isinstance(other, UniPoly)
            and self.field == other.field
            and self.coeffs == other.coeffs
        )

    def __repr__(self):
        if not self.coeffs:
            return "0"
        terms = []
        for i in range(len(self.coeffs) - 1, -1, -1):
            c = self.coeffs[i]
            if not c:
                continue
            if i == 0:
                terms.append(str(c))
            elif i == 1:
                terms.append(f"{c}*t")
            else:
                terms.append(f"{c}*t^{i}")
        return " + ".join(terms)


# ---------------------------------------------------------------------------
# sparse bivariate polynomials


class MultiPoly:
    """Sparse bivariate polynomial: {(deg_x, deg_y): nonzero coefficient}."""

    __slots__ = ("coeffs", "field")

    def __init__(self, coeffs: dict, field):
        self.coeffs = {k: v for k, v in coeffs.items() if v}
        self.field = field

    @classmethod
    def _raw(cls, coeffs: dict, field) -> "MultiPoly":
        obj = object.__new__(cls)
        obj.coeffs = coeffs
        obj.field = field
        return obj

    @classmethod
    def zero(cls, field) -> "MultiPoly":
        return cls._raw({}, field)

    @classmethod
    def const(cls, value, field) -> "MultiPoly":
        c = field.coerce(value)
        return cls._raw({(0, 0): c} if c else {}, field)

    @classmethod
    def var_x(cls, field) -> "MultiPoly":
        return cls._raw({(1, 0): field.one}, field)

    @classmethod
    def var_y(cls, field) -> "MultiPoly":
        return cls._raw({(0, 1): field.one}, field)

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[int, int, object]], field) -> "MultiPoly":
        coeffs: dict = {}
        for i, j, c in terms:
            c = field.coerce(c)
            if not c:
                continue
            key = (i, j)
            if key in coeffs:
                s = field.add(coeffs[key], c)
                if s:
                    coeffs[key] = s
                else:
                    del coeffs[key]
            else:
                coeffs[key] = c
        return cls._raw(coeffs, field)

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def deg_x(self) -> int:
        return max((i for i, _ in self.coeffs), default=-1)

    @property
    def deg_y(self) -> int:
        return max((j for _, j in self.coeffs), default=-1)

    def grlex_leading(self) -> tuple[tuple[int, int], object]:
        key = max(self.coeffs, key=lambda ij: (ij[0] + ij[1], ij[0]))
        return key, self.coeffs[key]

    def __add__(self, other):
        K = _same_field(self, other)
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            if k in out:
                s = K.add(out[k], c)
                if s:
                    out[k] = s
                else:
                    del out[k]
            else:
                out[k] = c
        return MultiPoly._raw(out, K)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        K = self.field
        return MultiPoly._raw({k: K.neg(c) for k, c in self.coeffs.items()}, K)

    def __mul__(self, other):
        K = _same_field(self, other)
        out: dict = {}
        if isinstance(K, PrimeField):
            p = K.p
            for (i, j), a in self.coeffs.items():
                for (k, l), b in other.coeffs.items():
                    key = (i + k, j + l)
                    out[key] = (out.get(key, 0) + a * b) % p
        else:
            for (i, j), a in self.coeffs.items():
                for (k, l), b in other.coeffs.items():
                    key = (i + k, j + l)
                    out[key] = out.get(key, K.zero) + a * b
        return MultiPoly._raw({k: v for k, v in out.items() if v}, K)

    def mul_ground(self, c) -> "MultiPoly":
        K = self.field
        if not c:
            return MultiPoly.zero(K)
        return MultiPoly._raw({k: K.mul(v, c) for k, v in self.coeffs.items()}, K)

    def __eq__(self, other):
        return (
            isinstance(other, MultiPoly)
            and self.field == other.field
            and self.coeffs == other.coeffs
        )

    def evaluate(self, xv, yv):
        """Evaluate at raw field elements."""
        K = self.field
        if self.is_zero:
            return K.zero
        xpow = {0: K.one}
        ypow = {0: K.one}
        for d, pows, base in ((self.deg_x, xpow, xv), (self.deg_y, ypow, yv)):
            for i in range(1, d + 1):
                pows[i] = K.mul(pows[i - 1], base)
        acc = K.zero
        for (i, j), c in self.coeffs.items():
            acc = K.add(acc, K.mul(c, K.mul(xpow[i], ypow[j])))
        return acc

    def eval_generic(self, xv, yv, lift):
        """Evaluate with coordinates from a larger field.

        `lift(c)` embeds a coefficient; xv, yv support +, *, and ** with
        ints.  Used for symbolic substitution of function-field points.
        """
        acc = None
        for (i, j), c in sorted(self.coeffs.items()):
            term = lift(c)
            if i:
                term = term * xv**i
            if j:
                term = term * yv**j
            acc = term if acc is None else acc + term
        if acc is None:
            return lift(self.field.zero)
        return acc

    def reverse_x(self, d: int) -> "MultiPoly":
        """u^d * f(1/u, y): exponent flip i -> d - i."""
        return MultiPoly._raw({(d - i, j): c for (i, j), c in self.coeffs.items()}, self.field)

    def reverse_y(self, d: int) -> "MultiPoly":
        return MultiPoly._raw({(i, d - j): c for (i, j), c in self.coeffs.items()}, self.field)

    def __repr__(self):
        if not self.coeffs:
            return "0"
        terms = []
        for (i, j) in sorted(self.coeffs, key=lambda ij: (-(ij[0] + ij[1]), -ij[0])):
            c = self.coeffs[(i, j)]
            part = []
            if i:
                part.append("x" if i == 1 else f"x^{i}")
            if j:
                part.append("y" if j == 1 else f"y^{j}")
            if not part or str(c) != "1":
                part.insert(0, str(c))
            terms.append("*".join(part))
        return " + ".join(terms)


def poly_ops(a: MultiPoly, b: MultiPoly, op: str) -> MultiPoly:
    """Ring arithmetic on bivariate polynomials; op is '+', '-' or '*'."""
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    raise ValueError(f"unknown operation {op!r}")


# ---------------------------------------------------------------------------
# bivariate gcd: content/primitive split plus a primitive PRS in (K[y])[x]


def _to_rec(f: MultiPoly) -> list[list]:
    """Recursive form: rec[i] = dense y-polynomial coefficient of x^i."""
    dx = f.deg_x
    rec: list[list] = [[] for _ in range(dx + 1)]
    dy = {}
    for (i, j), c in f.coeffs.items():
        dy[i] = max(dy.get(i, -1), j)
    tmp = [[f.field.zero] * (dy.get(i, -1) + 1) for i in range(dx + 1)]
    for (i, j), c in f.coeffs.items():
        tmp[i][j] = c
    for i in range(dx + 1):
        rec[i] = up_strip(tmp[i])
    return rec


def _from_rec(rec: list[list], field) -> MultiPoly:
    coeffs = {}
    for i, ypoly in enumerate(rec):
        for j, c in enumerate(ypoly):
            if c:
                coeffs[(i, j)] = c
    return MultiPoly._raw(coeffs, field)


def _rec_strip(u: list[list]) -> list[list]:
    while u and not u[-1]:
        u.pop()
    return u


def _rec_content(u: list[list], K) -> list:
    cont: list = []
    for c in u:
        if c:
            cont = up_gcd(cont, c, K) if cont else [K.mul(ci, K.inv(c[-1])) for ci in c]
        if len(cont) == 1:
            break
    return cont or []


def _rec_primitive(u: list[list], K) -> tuple[list, list[list]]:
    cont = _rec_content(u, K)
    if not cont:
        return [], []
    if len(cont) == 1 and cont[0] == K.one:
        return cont, u
    return cont, [up_divexact(c, cont, K) if c else [] for c in u]


def _rec_prem(f: list[list], g: list[list], K) -> list[list]:
    """Pseudo-remainder of f by g in (K[y])[x]."""
    df = len(f) - 1
    dg = len(g) - 1
    r = [list(c) for c in f]
    dr = df
    if df < dg:
        return r
    n = df - dg + 1
    lc_g = g[-1]
    while True:
        lc_r = r[dr]
        j = dr - dg
        n -= 1
        # r = lc_g * r - x^j * lc_r * g
        r = [up_mul(c, lc_g, K) for c in r]
        for i, gc in enumerate(g):
            if gc:
                r[i + j] = up_sub(r[i + j], up_mul(lc_r, gc, K), K)
        r = _rec_strip(r)
        dr = len(r) - 1
        if dr < dg:
            break
    if n > 0:
        lc_pow = [K.one]
        for _ in range(n):
            lc_pow = up_mul(lc_pow, lc_g, K)
        r = [up_mul(c, lc_pow, K) for c in r]
    return r


def _rec_gcd_primitive(u: list[list], v: list[list], K) -> list[list]:
    """Primitive PRS gcd of two primitive polynomials in (K[y])[x]."""
    if len(u) < len(v):
        u, v = v, u
    while True:
        r = _rec_prem(u, v, K)
        if not r:
            return v
        _, r = _rec_primitive(r, K)
        u, v = v, r
        if len(v) - 1 == 0:
            # remainder dropped to a unit of K[y][x] up to content
            return [[K.one]]


def _mp_canonical_unit(f: MultiPoly):
    """Scalar c so that f / c is canonically normalized."""
    K = f.field
    if f.is_zero:
        return K.one
    _, lc = f.grlex_leading()
    if isinstance(K, PrimeField):
        return lc
    # over Q: primitive integer coefficients with positive leading one
    nums = mpz(0)
    dens = mpz(1)
    for c in f.coeffs.values():
        nums = gmpy2.gcd(nums, c.numerator)
        dens = gmpy2.lcm(dens, c.denominator)
    content = mpq(nums, dens)
    if lc < 0:
        content = -content
    return content


def mp_canonicalize(f: MultiPoly) -> MultiPoly:
    if f.is_zero:
        return f
    unit = _mp_canonical_unit(f)
    K = f.field
    if unit == K.one:
        return f
    inv = K.inv(unit)
    return f.mul_ground(inv)


def poly_gcd(a: MultiPoly, b: MultiPoly) -> MultiPoly:
    """A canonical greatest common divisor of two bivariate polynomials.

    Content/primitive split over the coefficient field, primitive
    pseudo-remainder sequence in (K[y])[x].
    """
    K = _same_field(a, b)
    if a.is_zero and b.is_zero:
        raise ValueError("gcd of two zero polynomials")
    if a.is_zero:
        return mp_canonicalize(b)
    if b.is_zero:
        return mp_canonicalize(a)
    ra, rb = _to_rec(a), _to_rec(b)
    ca, pa = _rec_primitive(ra, K)
    cb, pb = _rec_primitive(rb, K)
    cont = up_gcd(ca, cb, K)
    if len(pa) == 1 or len(pb) == 1:
        prim = [[K.one]]
    else:
        prim = _rec_gcd_primitive(pa, pb, K)
    g = [up_mul(c, cont, K) for c in prim]
    return mp_canonicalize(_from_rec(g, K))


def mp_divexact(a: MultiPoly, b: MultiPoly) -> MultiPoly:
    """Exact division in K[x, y]; raises ArithmeticError if inexact."""
    K = _same_field(a, b)
    if b.is_zero:
        raise ZeroDivisionError("polynomial division by zero")
    if a.is_zero:
        return a
    u = _to_rec(a)
    v = _to_rec(b)
    dv = len(v) - 1
    lead_v = v[-1]
    quo: list[list] = [[] for _ in range(len(u) - dv)]
    while u:
        du = len(u) - 1
        if du < dv:
            raise ArithmeticError("inexact bivariate division")
        qc = up_divexact(u[-1], lead_v, K)
        quo[du - dv] = qc
        for i, vc in enumerate(v):
            if vc:
                u[i + du - dv] = up_sub(u[i + du - dv], up_mul(qc, vc, K), K)
        u = _rec_strip(u)
    return _from_rec(quo, K)


# ---------------------------------------------------------------------------
# rational functions


class RationalFunction:
    """Canonical quotient of two bivariate polynomials."""

    __slots__ = ("num", "den")

    def __init__(self, num: MultiPoly, den: MultiPoly):
        self.num = num
        self.den = den

    @classmethod
    def make(cls, num: MultiPoly, den: MultiPoly) -> "RationalFunction":
        K = _same_field(num, den)
        if den.is_zero:
            raise ZeroDivisionError("zero denominator in rational function")
        if num.is_zero:
            return cls(MultiPoly.zero(K), MultiPoly.const(1, K))
        g = poly_gcd(num, den)
        if g.deg_x > 0 or g.deg_y > 0 or g.coeffs.get((0, 0)) != K.one:
            num = mp_divexact(num, g)
            den = mp_divexact(den, g)
        unit = _mp_canonical_unit(den)
        if unit != K.one:
            inv = K.inv(unit)
            num = num.mul_ground(inv)
            den = den.mul_ground(inv)
        return cls(num, den)

    @classmethod
    def const(cls, value, field) -> "RationalFunction":
        return cls(MultiPoly.const(value, field), MultiPoly.const(1, field))

    @classmethod
    def var_x(cls, field) -> "RationalFunction":
        return cls(MultiPoly.var_x(field), MultiPoly.const(1, field))

    @classmethod
    def var_y(cls, field) -> "RationalFunction":
        return cls(MultiPoly.var_y(field), MultiPoly.const(1, field))

    @property
    def field(self):
        return self.num.field

    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    def _coerce(self, other) -> "RationalFunction":
        if isinstance(other, RationalFunction):
            return other
        if isinstance(other, MultiPoly):
            return RationalFunction.make(other, MultiPoly.const(1, other.field))
        return RationalFunction.const(other, self.field)

    def __add__(self, other):
        o = self._coerce(other)
        return RationalFunction.make(
            self.num * o.den + o.num * self.den, self.den * o.den
        )

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return RationalFunction.make(
            self.num * o.den - o.num * self.den, self.den * o.den
        )

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        return RationalFunction.make(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o.is_zero:
            raise ZeroDivisionError("division by zero rational function")
        return RationalFunction.make(self.num * o.den, self.den * o.num)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __neg__(self):
        return RationalFunction(-self.num, self.den)

    def __pow__(self, n: int):
        if n < 0:
            return (RationalFunction.const(1, self.field) / self) ** (-n)
        out = RationalFunction.const(1, self.field)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base if n > 1 else base
            n >>= 1
        return out

    def __eq__(self, other):
        return (
            isinstance(other, RationalFunction)
            and self.num == other.num
            and self.den == other.den
        )

    def __repr__(self):
        if self.den == MultiPoly.const(1, self.field):
            return repr(self.num)
        return f"({self.num}) / ({self.den})"


class UniRF:
    """Canonical quotient of univariate polynomials (monic denominator)."""

    __slots__ = ("num", "den")

    def __init__(self, num: UniPoly, den: UniPoly):
        self.num = num
        self.den = den

    @classmethod
    def make(cls, num: UniPoly, den: UniPoly) -> "UniRF":
        K = _same_field(num, den)
        if den.is_zero:
            raise ZeroDivisionError("zero denominator in rational function")
        if num.is_zero:
            return cls(UniPoly._raw([], K), UniPoly._raw([K.one], K))
        n, d = num.coeffs, den.coeffs
        g = up_gcd(n, d, K)
        if len(g) > 1:
            n = up_divexact(n, g, K)
            d = up_divexact(d, g, K)
        inv_lc = K.inv(d[-1])
        if d[-1] != K.one:
            n = [K.mul(c, inv_lc) for c in n]
            d = [K.mul(c, inv_lc) for c in d]
        return cls(UniPoly._raw(n, K), UniPoly._raw(d, K))

    @classmethod
    def const(cls, value, field) -> "UniRF":
        c = field.coerce(value)
        return cls(UniPoly._raw([c] if c else [], field), UniPoly._raw([field.one], field))

    @classmethod
    def var_t(cls, field) -> "UniRF":
        return cls(UniPoly._raw([field.zero, field.one], field), UniPoly._raw([field.one], field))

    @property
    def field(self):
        return self.num.field

    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    def _coerce(self, other) -> "UniRF":
        if isinstance(other, UniRF):
            return other
        if isinstance(other, UniPoly):
            return UniRF.make(other, UniPoly._raw([other.field.one], other.field))
        return UniRF.const(other, self.field)

    def __add__(self, other):
        o = self._coerce(other)
        return UniRF.make(self.num * o.den + o.num * self.den, self.den * o.den)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return UniRF.make(self.num * o.den - o.num * self.den, self.den * o.den)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        return UniRF.make(self.num * o.num, self.den * o.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o.is_zero:
            raise ZeroDivisionError("division by zero rational function")
        return UniRF.make(self.num * o.den, self.den * o.num)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __neg__(self):
        return UniRF(-self.num, self.den)

    def __pow__(self, n: int):
        out = UniRF.const(1, self.field)
        base = self
        if n < 0:
            base = UniRF.const(1, self.field) / self
            n = -n
        for _ in range(n):
            out = out * base
        return out

    def __eq__(self, other):
        return (
            isinstance(other, UniRF)
            and self.num == other.num
            and self.den == other.den
        )

    def value_at_zero(self) -> PFp:
        """Limit at t = 0 of a reduced rational function over F_p.

        Numerator and denominator are coprime, so they never vanish
        simultaneously at t = 0.
        """
        K = self.field
        n0 = self.num.coeffs[0] if self.num.coeffs else 0
        d0 = self.den.coeffs[0] if self.den.coeffs else 0
        if d0:
            return PFp.finite(K.div(n0, d0), K.p)
        return PFp.infinity(K.p)

    def __repr__(self):
        return f"({self.num}) / ({self.den})"


# ---------------------------------------------------------------------------
# composition


def _subst_pair_mp(N: MultiPoly, D: MultiPoly, A, B, C, Dn):
    """Bivariate substitution x = A/B, y = C/Dn into the pair (N, D)."""
    K = N.field
    dx = max(N.deg_x, D.deg_x)
    dy = max(N.deg_y, D.deg_y)
    powA = [MultiPoly.const(1, K)]
    powB = [MultiPoly.const(1, K)]
    powC = [MultiPoly.const(1, K)]
    powD = [MultiPoly.const(1, K)]
    for _ in range(dx):
        powA.append(powA[-1] * A)
        powB.append(powB[-1] * B)
    for _ in range(dy):
        powC.append(powC[-1] * C)
        powD.append(powD[-1] * Dn)

    def expand(poly: MultiPoly) -> MultiPoly:
        acc = MultiPoly.zero(K)
        for (i, j), c in poly.coeffs.items():
            term = powA[i] * powB[dx - i] * powC[j] * powD[dy - j]
            acc = acc + term.mul_ground(c)
        return acc

    return expand(N), expand(D)


def _subst_pair_uni(N: MultiPoly, D: MultiPoly, X: UniRF, Y: UniRF) -> tuple[list, list]:
    """Substitute univariate rational coordinates into the pair (N, D)."""
    K = X.field
    dx = max(N.deg_x, D.deg_x)
    dy = max(N.deg_y, D.deg_y)
    powA = up_pow_table(X.num.coeffs, dx, K)
    powB = up_pow_table(X.den.coeffs, dx, K)
    powC = up_pow_table(Y.num.coeffs, dy, K)
    powD = up_pow_table(Y.den.coeffs, dy, K)

    def expand(poly: MultiPoly) -> list:
        acc: list = []
        for (i, j), c in poly.coeffs.items():
            term = up_mul(powA[i], powB[dx - i], K)
            term = up_mul(term, powC[j], K)
            term = up_mul(term, powD[dy - j], K)
            acc = up_add(acc, up_mul_ground(term, c, K), K)
        return acc

    return expand(N), expand(D)


def rf_compose(
    outer: tuple[RationalFunction, RationalFunction],
    inner: tuple[RationalFunction, RationalFunction],
) -> tuple[RationalFunction, RationalFunction]:
    """Composition of plane rational maps: outer after inner.

    Substitutes the inner components for (x, y) in each outer component,
    clears nested fractions, cancels and returns canonical forms.
    """
    fx, fy = inner
    A, B = fx.num, fx.den
    C, Dn = fy.num, fy.den
    out = []
    for comp in outer:
        n, d = _subst_pair_mp(comp.num, comp.den, A, B, C, Dn)
        if d.is_zero:
            raise DegenerateComposition("denominator vanished under composition")
        out.append(RationalFunction.make(n, d))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# minimal form and reduction of maps


@dataclass(frozen=True)
class MinimalFormWitness:
    power_of_p: int
    unit_coefficient_index: tuple[int, int]


@dataclass(frozen=True)
class MinimalForm:
    """A rational function over Q scaled so every coefficient lies in Z_(p).

    Equal to the original function (numerator and denominator were scaled
    jointly); not a canonical RationalFunction since the scaling by p**k is
    the whole point.
    """

    num: MultiPoly
    den: MultiPoly
    p: int


def _val_q(x: mpq, p) -> int:
    num = x.numerator
    if num == 0:
        raise ValueError("valuation of a zero coefficient")
    _, vn = gmpy2.remove(num, p)
    if vn:
        return vn
    _, vd = gmpy2.remove(x.denominator, p)
    return -vd


def minimal_form(f: RationalFunction, p: int) -> tuple[MinimalForm, MinimalFormWitness]:
    """Scale numerator and denominator jointly by a power of p so that all
    coefficients have valuation >= 0 and at least one has valuation 0."""
    if not isinstance(f.field, QQField):
        raise ValueError("minimal form applies to rational functions over Q")
    if f.is_zero:
        raise ValueError("minimal form of the zero function is undefined")
    pz = mpz(p)
    vmin = None
    for poly in (f.num, f.den):
        for c in poly.coeffs.values():
            v = _val_q(c, pz)
            if vmin is None or v < vmin:
                vmin = v
    k = -vmin
    scale = mpq(p) ** k
    num = f.num.mul_ground(scale) if k else f.num
    den = f.den.mul_ground(scale) if k else f.den
    witness_index = None
    for poly in (num, den):
        for key in sorted(poly.coeffs):
            if _val_q(poly.coeffs[key], pz) == 0:
                witness_index = key
                break
        if witness_index is not None:
            break
    return MinimalForm(num, den, p), MinimalFormWitness(k, witness_index)


def reduce_rf(mf: Union[MinimalForm, RationalFunction], p: int | None = None):
    """Reduce the coefficients of a minimal-form rational function mod p.

    Re-cancels any common factor appearing over F_p.  Returns UNDEFINED if
    the reduced denominator is identically zero.
    """
    if isinstance(mf, RationalFunction):
        if p is None:
            raise ValueError("a prime is required to reduce a rational function")
        mf = minimal_form(mf, p)[0]
    p = mf.p
    K = GF(p)
    pz = mpz(p)

    def reduce_poly(poly: MultiPoly) -> MultiPoly:
        out = {}
        for key, c in poly.coeffs.items():
            num = int(c.numerator)
            den = int(c.denominator)
            r = num * pow(den, -1, p) % p
            if r:
                out[key] = r
        return MultiPoly._raw(out, K)

    den = reduce_poly(mf.den)
    if den.is_zero:
        return UNDEFINED
    num = reduce_poly(mf.num)
    return RationalFunction.make(num, den)


# ---------------------------------------------------------------------------
# evaluation on the projective line


def evaluate_rf(f: RationalFunction, point: tuple[PFp, PFp]):
    """Evaluate a reduced rational function at a point of P1(Fp) x P1(Fp).

    Infinite coordinates are handled by the substitution x -> 1/u (or
    y -> 1/v) with powers cleared; 0/0 yields INDETERMINATE.
    """
    K = f.field
    if not isinstance(K, PrimeField):
        raise ValueError("evaluate_rf expects a rational function over F_p")
    p = K.p
    px, py = point
    if px.p != p or py.p != p:
        raise ValueError("point prime does not match the coefficient field")
    N, D = f.num, f.den
    if not px.is_finite:
        d = max(N.deg_x, D.deg_x)
        N, D = N.reverse_x(d), D.reverse_x(d)
        xv = 0
    else:
        xv = px.r
    if not py.is_finite:
        d = max(N.deg_y, D.deg_y)
        N, D = N.reverse_y(d), D.reverse_y(d)
        yv = 0
    else:
        yv = py.r
    n = N.evaluate(xv, yv)
    d = D.evaluate(xv, yv)
    if d:
        return PFp.finite(n * pow(d, -1, p), p)
    if n:
        return PFp.infinity(p)
    return INDETERMINATE


def evaluate_pair(pair, point: tuple[PFp, PFp]) -> tuple:
    """Evaluate both components of a reduced plane map at a point."""
    return (evaluate_rf(pair[0], point), evaluate_rf(pair[1], point))


# ---------------------------------------------------------------------------
# perturbation limits along a line through a residue point


#: Marker for a direction whose line maps into a polar curve of some step.
DEGENERATE_LINE = _Sentinel("DegenerateLine")


class PerturbationOverflow(ArithmeticError):
    """Line composition exceeded the degree budget (non-confined growth)."""


class LineTracer:
    """Composes reduced step maps along the line (x + t, y + lam*t) in F_p(t).

    After each step the coordinates are cancelled in F_p(t) and their
    limits at t = 0 recorded, giving the line evaluation of every partial
    composition in a single forward pass.
    """

    __slots__ = ("steps", "p", "lam", "X", "Y", "values", "dead", "degree_cap")

    def __init__(self, steps, base: tuple[PFp, PFp], lam: int, degree_cap: int = 4096):
        bx, by = base
        if not (bx.is_finite and by.is_finite):
            raise ValueError("perturbation base must have finite coordinates")
        self.steps = list(steps)
        self.p = bx.p
        K = GF(self.p)
        lam = lam % self.p
        if lam == 0:
            raise ValueError("perturbation direction must be nonzero")
        self.lam = lam
        one = UniPoly._raw([K.one], K)
        self.X = UniRF(UniPoly._raw(up_strip([bx.r, 1]), K), one)
        self.Y = UniRF(UniPoly._raw(up_strip([by.r, lam]), K), one)
        self.values: list = []
        self.dead = False
        self.degree_cap = degree_cap

    def _apply(self, pair) -> None:
        K = GF(self.p)
        f, g = pair
        n1, d1 = _subst_pair_uni(f.num, f.den, self.X, self.Y)
        if not d1:
            self.dead = True
            return
        n2, d2 = _subst_pair_uni(g.num, g.den, self.X, self.Y)
        if not d2:
            self.dead = True
            return
        new_x = UniRF.make(UniPoly._raw(n1, K), UniPoly._raw(d1, K))
        new_y = UniRF.make(UniPoly._raw(n2, K), UniPoly._raw(d2, K))
        if max(new_x.num.degree, new_x.den.degree) > self.degree_cap:
            raise PerturbationOverflow(
                f"line composition degree exceeded {self.degree_cap}"
            )
        self.X, self.Y = new_x, new_y

    def extend_to(self, m: int) -> None:
        while len(self.values) < m:
            k = len(self.values)
            if k >= len(self.steps):
                raise IndexError("not enough step maps for the requested length")
            if not self.dead:
                self._apply(self.steps[k])
            if self.dead:
                self.values.append(DEGENERATE_LINE)
            else:
                self.values.append(
                    (self.X.value_at_zero(), self.Y.value_at_zero())
                )

    def value_at(self, m: int):
        self.extend_to(m)
        return self.values[m - 1]


def perturbation_eval(steps, base: tuple[PFp, PFp], direction):
    """Evaluate the composition of reduced steps at a residue point by a
    perturbation limit along one or more directions.

    `direction` is a nonzero residue (int or FpElem) or a sequence of them;
    all conclusive directions must agree, otherwise INCONCLUSIVE.
    """
    steps = list(steps)
    dirs = direction if isinstance(direction, (list, tuple)) else [direction]
    results = []
    for d in dirs:
        lam = d.residue if isinstance(d, FpElem) else int(d)
        tracer = LineTracer(steps, base, lam)
        results.append(tracer.value_at(len(steps)))
    conclusive = [r for r in results if r is not DEGENERATE_LINE]
    if not conclusive:
        return INCONCLUSIVE
    first = conclusive[0]
    if any(r != first for r in conclusive[1:]):
        return INCONCLUSIVE
    return first
