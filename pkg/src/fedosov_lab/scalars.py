"""Exact scalars: Gaussian rationals with a symbolic transcendental pi.

Every coefficient in this package lives in the ring Q(i)[pi, pi^-1] of
Laurent polynomials in an opaque generator ``pi`` with Gaussian-rational
coefficients.  Keeping pi symbolic is what makes the normalisation factors
(2*pi/sqrt(-1), the 4*pi in the Laplacian, the 1/(2*pi) in moment maps)
cancel exactly instead of approximately.

A Scalar is stored as a dict mapping the pi-exponent to an (re, im) pair of
rationals.  Zero entries are never stored; the zero scalar is the empty dict.

Rationals are gmpy2.mpq when available (much faster), fractions.Fraction
otherwise; both print as "p/q" and compare exactly.
"""

from __future__ import annotations

import math
from typing import Iterator, Tuple, Union

try:  # pragma: no cover - exercised implicitly by the whole suite
    from gmpy2 import mpq as RAT
except ImportError:  # pragma: no cover
    from fractions import Fraction as RAT

RatLike = Union[int, str, "RAT"]

_R0 = RAT(0)
_R1 = RAT(1)


def rat(p: RatLike, q: int = 1) -> RAT:
    """Build an exact rational.  Accepts ints, "p/q" strings, rationals."""
    if q != 1:
        return RAT(p) / RAT(q)
    return RAT(p)


class Scalar:
    """An element of Q(i)[pi, pi^-1]."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        # terms: {pi_power: (re, im)}, both rationals, never (0, 0)
        self.terms = terms if terms is not None else {}

    # -- constructors -------------------------------------------------

    @staticmethod
    def of(re: RatLike, im: RatLike = 0, pi_power: int = 0) -> "Scalar":
        r, i = rat(re), rat(im)
        if r == 0 and i == 0:
            return Scalar()
        return Scalar({pi_power: (r, i)})

    @staticmethod
    def zero() -> "Scalar":
        return Scalar()

    @staticmethod
    def one() -> "Scalar":
        return Scalar({0: (_R1, _R0)})

    @staticmethod
    def i() -> "Scalar":
        return Scalar({0: (_R0, _R1)})

    @staticmethod
    def pi(power: int = 1) -> "Scalar":
        return Scalar({power: (_R1, _R0)})

    # -- predicates ----------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def is_rational(self) -> bool:
        """True when the scalar is a plain rational number (no i, no pi)."""
        if not self.terms:
            return True
        if set(self.terms) != {0}:
            return False
        return self.terms[0][1] == 0

    def is_pi_free(self) -> bool:
        return all(k == 0 for k in self.terms)

    def as_rational(self) -> RAT:
        if self.is_zero():
            return _R0
        if not self.is_rational():
            raise ValueError(f"not a plain rational: {self}")
        return self.terms[0][0]

    def gaussian_parts(self) -> Tuple[RAT, RAT]:
        """(re, im) of a pi-free scalar."""
        if self.is_zero():
            return (_R0, _R0)
        if not self.is_pi_free():
            raise ValueError(f"stray pi factor survived: {self}")
        return self.terms[0]

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other: "Scalar") -> "Scalar":
        if not other.terms:
            return self
        if not self.terms:
            return other
        out = dict(self.terms)
        for k, (r, i) in other.terms.items():
            if k in out:
                nr, ni = out[k][0] + r, out[k][1] + i
                if nr == 0 and ni == 0:
                    del out[k]
                else:
                    out[k] = (nr, ni)
            else:
                out[k] = (r, i)
        return Scalar(out)

    def __neg__(self) -> "Scalar":
        return Scalar({k: (-r, -i) for k, (r, i) in self.terms.items()})

    def __sub__(self, other: "Scalar") -> "Scalar":
        return self + (-other)

    def __mul__(self, other: "Scalar") -> "Scalar":
        if not self.terms or not other.terms:
            return Scalar()
        out: dict = {}
        for k1, (r1, i1) in self.terms.items():
            for k2, (r2, i2) in other.terms.items():
                k = k1 + k2
                r = r1 * r2 - i1 * i2
                i = r1 * i2 + i1 * r2
                if k in out:
                    r += out[k][0]
                    i += out[k][1]
                if r == 0 and i == 0:
                    out.pop(k, None)
                else:
                    out[k] = (r, i)
        return Scalar(out)

    def mul_rat(self, c: RatLike) -> "Scalar":
        c = rat(c)
        if c == 0 or not self.terms:
            return Scalar()
        return Scalar({k: (r * c, i * c) for k, (r, i) in self.terms.items()})

    def conjugate(self) -> "Scalar":
        """Complex conjugation; pi is real and stays put."""
        return Scalar({k: (r, -i) for k, (r, i) in self.terms.items()})

    def inverse(self) -> "Scalar":
        """Exact inverse; defined only for pi-monomials c * pi^k."""
        if len(self.terms) != 1:
            raise ZeroDivisionError(f"cannot invert non-monomial scalar {self}")
        (k, (r, i)), = self.terms.items()
        n = r * r + i * i
        return Scalar({-k: (r / n, -i / n)})

    def __truediv__(self, other: "Scalar") -> "Scalar":
        return self * other.inverse()

    def __pow__(self, n: int) -> "Scalar":
        if n < 0:
            return self.inverse() ** (-n)
        out = Scalar.one()
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # -- comparison / hashing -------------------------------------------

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Scalar) and self.terms == other.terms

    def __hash__(self) -> int:
        return hash(frozenset(self.terms.items()))

    # -- conversions -----------------------------------------------------

    def to_complex(self) -> complex:
        """Numeric value with pi = math.pi (only for norm estimates)."""
        out = 0j
        for k, (r, i) in self.terms.items():
            out += complex(float(r), float(i)) * math.pi ** k
        return out

    def __repr__(self) -> str:  # pragma: no cover - debug aid
        return f"Scalar({self})"

    def __str__(self) -> str:
        return format_scalar(self)


def format_scalar(s: Scalar) -> str:
    """Canonical text form, deterministic: pi powers descending."""
    if s.is_zero():
        return "0"
    pieces = []
    for k in sorted(s.terms, reverse=True):
        r, i = s.terms[k]
        if i == 0:
            coeff = str(r)
        elif r == 0:
            coeff = f"{i}i"
        else:
            coeff = f"({r}{'+' if i > 0 else '-'}{abs(i)}i)"
        if k == 0:
            pieces.append(coeff)
        else:
            ppart = "pi" if k == 1 else f"pi^{k}"
            pieces.append(ppart if coeff == "1" else f"{coeff}*{ppart}")
    return " + ".join(pieces)


# Frequently used constants.
ZERO = Scalar.zero()
ONE = Scalar.one()
I = Scalar.i()
PI = Scalar.pi()

# 2*pi/sqrt(-1) = -2*pi*i: the conversion factor between the geometric
# moment map (iota_V omega = d mu) and star-commutator normalisations.
TWO_PI_OVER_I = Scalar.of(0, -2, 1)
# 1/(4*pi), the Laplacian counterweight in degree-1 quantizable functions.
QUARTER_PI_INV = Scalar.of(rat(1, 4), 0, -1)


def scalar_terms_sorted(s: Scalar) -> Iterator[tuple]:
    return iter(sorted(s.terms.items()))


def solve_linear(rows: list, rhs: list) -> list | None:
    """Solve A x = b where A has rational entries and b holds Scalars.

    Returns one exact solution (free variables set to zero) or None when the
    system is inconsistent.  Rational pivots keep the elimination exact; the
    Scalar right-hand sides ride along untouched in structure.
    """
    m = len(rows)
    ncols = len(rows[0]) if m else 0
    A = [list(r) for r in rows]
    b = list(rhs)
    piv_of_col: dict = {}
    r = 0
    for c in range(ncols):
        piv = None
        for rr in range(r, m):
            if A[rr][c] != 0:
                piv = rr
                break
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        b[r], b[piv] = b[piv], b[r]
        inv = 1 / rat(A[r][c])
        A[r] = [x * inv for x in A[r]]
        b[r] = b[r].mul_rat(inv)
        for rr in range(m):
            if rr != r and A[rr][c] != 0:
                f = A[rr][c]
                A[rr] = [x - f * y for x, y in zip(A[rr], A[r])]
                b[rr] = b[rr] + b[r].mul_rat(-f)
        piv_of_col[c] = r
        r += 1
        if r == m:
            break
    for rr in range(r, m):
        if any(x != 0 for x in A[rr]):
            continue
        if not b[rr].is_zero():
            return None
    # also rows below the pivot block that kept nonzero coefficients were
    # already reduced; verify full consistency
    x = [Scalar.zero() for _ in range(ncols)]
    for c, rr in piv_of_col.items():
        x[c] = b[rr]
    # residual check (cheap and makes the contract airtight)
    for rr in range(m):
        acc = Scalar.zero()
        for c in range(ncols):
            if rows[rr][c] != 0:
                acc = acc + x[c].mul_rat(rows[rr][c])
        if not (acc - rhs[rr]).is_zero():
            return None
    return x
