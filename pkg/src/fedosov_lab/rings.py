"""Coefficient rings for a single Kähler coordinate chart.

Two exact function rings are provided:

* RationalChartRing -- functions of the form  numerator / D^m  where the
  numerator is a sparse polynomial in (z^1..z^n, zbar^1..zbar^n) over
  Q(i)[pi, pi^-1] and D is the chart's fixed denominator polynomial
  (D = 1 on a flat chart, D = 1 + sum z zbar on the Fubini-Study chart).
  The canonical form strips every common factor of D out of the numerator,
  so equality is structural and exact.

* JetChartRing -- truncated Taylor polynomials at the origin.  Every jet
  carries the total degree ``prec`` through which its coefficients are
  trusted; arithmetic propagates precision and raises JetAccuracyError
  instead of silently truncating below degree 0.

Monomials are keyed by a pair of exponent tuples ((a_1..a_n), (b_1..b_n))
for z^a zbar^b.  Zero coefficients are never stored.
"""

from __future__ import annotations

from typing import Dict, Iterable, Optional, Tuple

from .scalars import RAT, Scalar, rat

Mono = Tuple[Tuple[int, ...], Tuple[int, ...]]
PolyTerms = Dict[Mono, Scalar]


class JetAccuracyError(Exception):
    """An operation needed more jet coefficients than are trusted."""


def _zero_exp(n: int) -> Tuple[int, ...]:
    return (0,) * n


def poly_add(a: PolyTerms, b: PolyTerms) -> PolyTerms:
    out = dict(a)
    for m, c in b.items():
        if m in out:
            s = out[m] + c
            if s.is_zero():
                del out[m]
            else:
                out[m] = s
        else:
            out[m] = c
    return out


def poly_neg(a: PolyTerms) -> PolyTerms:
    return {m: -c for m, c in a.items()}

def poly_scalar(a: PolyTerms, s: Scalar) -> PolyTerms:
    if s.is_zero():
        return {}
    return {m: c * s for m, c in a.items() if not (c * s).is_zero()}


def poly_mul(a: PolyTerms, b: PolyTerms) -> PolyTerms:
    if not a or not b:
        return {}
    out: PolyTerms = {}
    for (za, ba), ca in a.items():
        for (zb, bb), cb in b.items():
            m = (
                tuple(x + y for x, y in zip(za, zb)),
                tuple(x + y for x, y in zip(ba, bb)),
            )
            c = ca * cb
            if m in out:
                c = out[m] + c
            if c.is_zero():
                out.pop(m, None)
            else:
                out[m] = c
    return out


def poly_diff_z(a: PolyTerms, i: int) -> PolyTerms:
    out: PolyTerms = {}
    for (ze, be), c in a.items():
        if ze[i] == 0:
            continue
        m = (ze[:i] + (ze[i] - 1,) + ze[i + 1:], be)
        out[m] = c.mul_rat(ze[i])
    return out


def poly_diff_zbar(a: PolyTerms, j: int) -> PolyTerms:
    out: PolyTerms = {}
    for (ze, be), c in a.items():
        if be[j] == 0:
            continue
        m = (ze, be[:j] + (be[j] - 1,) + be[j + 1:])
        out[m] = c.mul_rat(be[j])
    return out


def poly_conj(a: PolyTerms) -> PolyTerms:
    return {(be, ze): c.conjugate() for (ze, be), c in a.items()}


def poly_total_degree(a: PolyTerms) -> int:
    if not a:
        return 0
    return max(sum(ze) + sum(be) for (ze, be) in a)


def poly_eval(a: PolyTerms, z: Tuple[Scalar, ...], zbar: Tuple[Scalar, ...]) -> Scalar:
    out = Scalar.zero()
    for (ze, be), c in a.items():
        term = c
        for x, e in zip(z, ze):
            term = term * x ** e
        for x, e in zip(zbar, be):
            term = term * x ** e
        out = out + term
    return out


def _mono_key(m: Mono) -> tuple:
    # graded lexicographic order used for long division and printing
    return (sum(m[0]) + sum(m[1]), m[0], m[1])


def poly_divide_exact(a: PolyTerms, d: PolyTerms) -> Optional[PolyTerms]:
    """Quotient a / d when the division is exact, else None.

    Long division by the leading monomial of d in graded-lex order; the
    remainder is unique for a single divisor, so exactness is decidable.
    """
    if not a:
        return {}
    lead = max(d, key=_mono_key)
    lz, lb = lead
    lc = d[lead]
    rest = {m: c for m, c in d.items() if m != lead}
    work = dict(a)
    quo: PolyTerms = {}
    while work:
        m = max(work, key=_mono_key)
        (ze, be) = m
        if any(x < y for x, y in zip(ze, lz)) or any(x < y for x, y in zip(be, lb)):
            return None
        qm = (
            tuple(x - y for x, y in zip(ze, lz)),
            tuple(x - y for x, y in zip(be, lb)),
        )
        qc = work[m] / lc
        quo[qm] = qc
        del work[m]
        for (rz, rb), rc in rest.items():
            mm = (
                tuple(x + y for x, y in zip(qm[0], rz)),
                tuple(x + y for x, y in zip(qm[1], rb)),
            )
            c = -(qc * rc)
            if mm in work:
                c = work[mm] + c
            if c.is_zero():
                work.pop(mm, None)
            else:
                work[mm] = c
    return quo


def format_poly(a: PolyTerms, n: int) -> str:
    """Deterministic text form, graded-lex ascending."""
    if not a:
        return "0"
    names_z = ["z"] if n == 1 else [f"z{i+1}" for i in range(n)]
    names_b = ["zbar"] if n == 1 else [f"zbar{i+1}" for i in range(n)]
    pieces = []
    for m in sorted(a, key=_mono_key):
        ze, be = m
        factors = []
        for name, e in zip(names_z, ze):
            if e == 1:
                factors.append(name)
            elif e > 1:
                factors.append(f"{name}^{e}")
        for name, e in zip(names_b, be):
            if e == 1:
                factors.append(name)
            elif e > 1:
                factors.append(f"{name}^{e}")
        c = str(a[m])
        if " + " in c or c.startswith("-") and factors:
            c = f"({c})"
        pieces.append("*".join([c] + factors) if factors else c)
    return " + ".join(pieces)


class RationalChartRing:
    """Ring handle for numerator/D^m chart functions."""

    mode = "rational"

    def __init__(self, n: int, denominator: PolyTerms | None = None):
        self.n = n
        if denominator is None:
            denominator = {(_zero_exp(n), _zero_exp(n)): Scalar.one()}
        self.denominator = denominator
        self.is_trivial_denom = denominator == {
            (_zero_exp(n), _zero_exp(n)): Scalar.one()
        }
        self._dpowers: list = [
            {(_zero_exp(n), _zero_exp(n)): Scalar.one()},
            denominator,
        ]

    def d_power(self, m: int) -> PolyTerms:
        while len(self._dpowers) <= m:
            self._dpowers.append(poly_mul(self._dpowers[-1], self.denominator))
        return self._dpowers[m]

    # constructors

    def func(self, num: PolyTerms, dpow: int = 0) -> "ChartFunction":
        return ChartFunction(self, num, dpow)

    def zero(self) -> "ChartFunction":
        return ChartFunction(self, {}, 0)

    def one(self) -> "ChartFunction":
        return self.const(Scalar.one())

    def const(self, s: Scalar) -> "ChartFunction":
        if s.is_zero():
            return self.zero()
        return ChartFunction(self, {(_zero_exp(self.n), _zero_exp(self.n)): s}, 0)

    def var_z(self, i: int = 0) -> "ChartFunction":
        e = [0] * self.n
        e[i] = 1
        return ChartFunction(self, {(tuple(e), _zero_exp(self.n)): Scalar.one()}, 0)

    def var_zbar(self, j: int = 0) -> "ChartFunction":
        e = [0] * self.n
        e[j] = 1
        return ChartFunction(self, {(_zero_exp(self.n), tuple(e)): Scalar.one()}, 0)

    def d_func(self) -> "ChartFunction":
        return ChartFunction(self, dict(self.denominator), 0)


class ChartFunction:
    """numerator / D^dpow in canonical form (D never divides the numerator
    while dpow > 0)."""

    __slots__ = ("ring", "num", "dpow")

    def __init__(self, ring: RationalChartRing, num: PolyTerms, dpow: int = 0):
        while dpow > 0 and num:
            q = poly_divide_exact(num, ring.denominator)
            if q is None:
                break
            num = q
            dpow -= 1
        if not num:
            dpow = 0
        self.ring = ring
        self.num = num
        self.dpow = dpow

    # predicates

    def is_zero(self) -> bool:
        return not self.num

    def is_constant(self) -> bool:
        if not self.num:
            return True
        zk = (_zero_exp(self.ring.n), _zero_exp(self.ring.n))
        return self.dpow == 0 and set(self.num) == {zk}

    def constant_value(self) -> Scalar:
        if self.is_zero():
            return Scalar.zero()
        if not self.is_constant():
            raise ValueError("not a constant chart function")
        return next(iter(self.num.values()))

    def is_holomorphic(self) -> bool:
        """No zbar dependence (in canonical form, and denominator-free)."""
        return self.dpow == 0 and all(sum(be) == 0 for (_, be) in self.num)

    def is_antiholomorphic(self) -> bool:
        return self.dpow == 0 and all(sum(ze) == 0 for (ze, _) in self.num)

    # arithmetic

    def __add__(self, other: "ChartFunction") -> "ChartFunction":
        r = self.ring
        if other.is_zero():
            return self
        if self.is_zero():
            return other
        m = max(self.dpow, other.dpow)
        na = poly_mul(self.num, r.d_power(m - self.dpow)) if m > self.dpow else self.num
        nb = poly_mul(other.num, r.d_power(m - other.dpow)) if m > other.dpow else other.num
        return ChartFunction(r, poly_add(na, nb), m)

    def __neg__(self) -> "ChartFunction":
        return ChartFunction(self.ring, poly_neg(self.num), self.dpow)

    def __sub__(self, other: "ChartFunction") -> "ChartFunction":
        return self + (-other)

    def __mul__(self, other: "ChartFunction") -> "ChartFunction":
        if self.is_zero() or other.is_zero():
            return self.ring.zero()
        return ChartFunction(
            self.ring, poly_mul(self.num, other.num), self.dpow + other.dpow
        )

    def scale(self, s: Scalar) -> "ChartFunction":
        return ChartFunction(self.ring, poly_scalar(self.num, s), self.dpow)

    def diff_z(self, i: int = 0) -> "ChartFunction":
        # d/dz (N / D^m) = (N' D - m N dD/dz) / D^(m+1)
        r = self.ring
        dn = poly_diff_z(self.num, i)
        if self.dpow == 0:
            return ChartFunction(r, dn, 0)
        dd = poly_diff_z(r.denominator, i)
        num = poly_add(
            poly_mul(dn, r.denominator),
            poly_scalar(poly_mul(self.num, dd), Scalar.of(-self.dpow)),
        )
        return ChartFunction(r, num, self.dpow + 1)

    def diff_zbar(self, j: int = 0) -> "ChartFunction":
        r = self.ring
        dn = poly_diff_zbar(self.num, j)
        if self.dpow == 0:
            return ChartFunction(r, dn, 0)
        dd = poly_diff_zbar(r.denominator, j)
        num = poly_add(
            poly_mul(dn, r.denominator),
            poly_scalar(poly_mul(self.num, dd), Scalar.of(-self.dpow)),
        )
        return ChartFunction(r, num, self.dpow + 1)

    def conjugate(self) -> "ChartFunction":
        # valid because every supported denominator is real (conj-invariant)
        return ChartFunction(self.ring, poly_conj(self.num), self.dpow)

    def evaluate(self, z: Tuple[Scalar, ...], zbar: Tuple[Scalar, ...]) -> Scalar:
        top = poly_eval(self.num, z, zbar)
        if self.dpow == 0:
            return top
        bottom = poly_eval(self.ring.denominator, z, zbar)
        return top * bottom.inverse() ** self.dpow

    def __eq__(self, other: object) -> bool:
        # canonical forms are unique, so structural equality is semantic
        return (
            isinstance(other, ChartFunction)
            and self.dpow == other.dpow
            and self.num == other.num
        )

    def __hash__(self) -> int:
        return hash((self.dpow, frozenset(self.num.items())))

    def __str__(self) -> str:
        top = format_poly(self.num, self.ring.n)
        if self.dpow == 0:
            return top
        suffix = "D^-1" if self.dpow == 1 else f"D^-{self.dpow}"
        if " + " in top:
            top = f"({top})"
        return f"{top}*{suffix}"

    def __repr__(self) -> str:  # pragma: no cover
        return f"ChartFunction({self})"


class JetChartRing:
    """Ring handle for truncated Taylor polynomials at the origin."""

    mode = "jet"

    def __init__(self, n: int, order: int):
        if order < 0:
            raise ValueError("jet order must be non-negative")
        self.n = n
        self.order = order

    def func(self, terms: PolyTerms, prec: int | None = None) -> "JetFunction":
        return JetFunction(self, terms, self.order if prec is None else prec)

    def zero(self, prec: int | None = None) -> "JetFunction":
        return JetFunction(self, {}, self.order if prec is None else prec)

    def one(self) -> "JetFunction":
        return self.const(Scalar.one())

    def const(self, s: Scalar) -> "JetFunction":
        if s.is_zero():
            return self.zero()
        return JetFunction(
            self, {(_zero_exp(self.n), _zero_exp(self.n)): s}, self.order
        )

    def var_z(self, i: int = 0) -> "JetFunction":
        e = [0] * self.n
        e[i] = 1
        return JetFunction(self, {(tuple(e), _zero_exp(self.n)): Scalar.one()}, self.order)

    def var_zbar(self, j: int = 0) -> "JetFunction":
        e = [0] * self.n
        e[j] = 1
        return JetFunction(self, {(_zero_exp(self.n), tuple(e)): Scalar.one()}, self.order)


def _truncate(terms: PolyTerms, prec: int) -> PolyTerms:
    return {m: c for m, c in terms.items() if sum(m[0]) + sum(m[1]) <= prec}


class JetFunction:
    """Taylor polynomial trusted through total degree ``prec``."""

    __slots__ = ("ring", "terms", "prec")

    def __init__(self, ring: JetChartRing, terms: PolyTerms, prec: int):
        if prec < 0:
            raise JetAccuracyError("jet accuracy exhausted")
        self.ring = ring
        self.terms = _truncate(terms, prec)
        self.prec = prec

    def is_zero(self) -> bool:
        # zero as far as the trusted coefficients can tell
        return not self.terms

    def is_constant(self) -> bool:
        zk = (_zero_exp(self.ring.n), _zero_exp(self.ring.n))
        return not self.terms or set(self.terms) == {zk}

    def constant_value(self) -> Scalar:
        if not self.terms:
            return Scalar.zero()
        if not self.is_constant():
            raise ValueError("not a constant jet")
        return next(iter(self.terms.values()))

    def constant_term(self) -> Scalar:
        """Value at the base point (degree-0 coefficient)."""
        zk = (_zero_exp(self.ring.n), _zero_exp(self.ring.n))
        return self.terms.get(zk, Scalar.zero())

    def is_holomorphic(self) -> bool:
        return all(sum(be) == 0 for (_, be) in self.terms)

    def is_antiholomorphic(self) -> bool:
        return all(sum(ze) == 0 for (ze, _) in self.terms)

    def __add__(self, other: "JetFunction") -> "JetFunction":
        prec = min(self.prec, other.prec)
        return JetFunction(self.ring, poly_add(self.terms, other.terms), prec)

    def __neg__(self) -> "JetFunction":
        return JetFunction(self.ring, poly_neg(self.terms), self.prec)

    def __sub__(self, other: "JetFunction") -> "JetFunction":
        return self + (-other)

    def __mul__(self, other: "JetFunction") -> "JetFunction":
        prec = min(self.prec, other.prec)
        return JetFunction(self.ring, poly_mul(self.terms, other.terms), prec)

    def scale(self, s: Scalar) -> "JetFunction":
        return JetFunction(self.ring, poly_scalar(self.terms, s), self.prec)

    def diff_z(self, i: int = 0) -> "JetFunction":
        return JetFunction(self.ring, poly_diff_z(self.terms, i), self.prec - 1)

    def diff_zbar(self, j: int = 0) -> "JetFunction":
        return JetFunction(self.ring, poly_diff_zbar(self.terms, j), self.prec - 1)

    def conjugate(self) -> "JetFunction":
        return JetFunction(self.ring, poly_conj(self.terms), self.prec)

    def inverse(self) -> "JetFunction":
        """Neumann-series inverse; requires an invertible constant term."""
        zk = (_zero_exp(self.ring.n), _zero_exp(self.ring.n))
        c0 = self.terms.get(zk)
        if c0 is None:
            raise ZeroDivisionError("jet has no constant term")
        c0inv = c0.inverse()
        u = JetFunction(
            self.ring,
            poly_scalar(poly_add(self.terms, {zk: -c0}), c0inv),
            self.prec,
        )  # self = c0 (1 + u)
        out = self.ring.const(c0inv)
        out = JetFunction(out.ring, out.terms, self.prec)
        power = out
        for _ in range(self.prec):
            power = (-u) * power
            out = out + JetFunction(self.ring, poly_scalar(power.terms, Scalar.one()), self.prec)
        return out

    def evaluate(self, z: Tuple[Scalar, ...], zbar: Tuple[Scalar, ...]) -> Scalar:
        return poly_eval(self.terms, z, zbar)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, JetFunction):
            return False
        prec = min(self.prec, other.prec)
        return _truncate(self.terms, prec) == _truncate(other.terms, prec)

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    def __str__(self) -> str:
        return f"{format_poly(self.terms, self.ring.n)} + O(deg>{self.prec})"

    def __repr__(self) -> str:  # pragma: no cover
        return f"JetFunction({self})"
