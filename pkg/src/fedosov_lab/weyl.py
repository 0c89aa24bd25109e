"""Truncated formal Weyl algebra with the fiberwise Wick product.

Elements are finite sums  c(z, zbar) * y^a ybar^b hbar^h dz^S dzbar^T  with
chart-function coefficients.  The canonical monomial order puts the dz block
before the dzbar block, each ascending; products track the Koszul sign of
re-sorting the anticommuting form generators (y, ybar, hbar all commute).

The Fedosov weight |y^i| = |ybar^j| = 1, |hbar| = 2 bounds storage: terms
above ``trunc`` are dropped on every operation.  The quantizable weight
(|y| = 0, |ybar| = |hbar| = 1) is exposed as an accessor, not a bound.

A WeylElement is either formal (level None, hbar a generator) or evaluated
at hbar = 1/k (level = exact rational); in the evaluated case the truncation
bounds the symmetric degree and products use numeric contraction weights.

The Wick product follows
    a * b = sum_k (hbar^k / k!) omega^{i1 jbar1} ... omega^{ik jbarK}
            (d^k a / dy^i...) (d^k b / dybar^j...),
so a depending only on ybar, or b only on y, multiplies pointwise
(separation of variables).
"""

from __future__ import annotations

from typing import Dict, Iterable, List, Optional, Tuple

from .scalars import RAT, Scalar, rat
from .geometry import KahlerGeometry, VectorField

# monomial: (y exps, ybar exps, hbar power, dz indices, dzbar indices)
WeylMonomial = Tuple[Tuple[int, ...], Tuple[int, ...], int, Tuple[int, ...], Tuple[int, ...]]


def weight(mono: WeylMonomial) -> int:
    """Fedosov weight."""
    return sum(mono[0]) + sum(mono[1]) + 2 * mono[2]


def sym_degree(mono: WeylMonomial) -> int:
    return sum(mono[0]) + sum(mono[1])


def quantizable_weight(mono: WeylMonomial) -> int:
    """|y|=0, |ybar|=|hbar|=1."""
    return sum(mono[1]) + mono[2]


def form_degree(mono: WeylMonomial) -> int:
    return len(mono[3]) + len(mono[4])


def _merge_sorted(a: Tuple[int, ...], b: Tuple[int, ...]):
    """Merge two sorted index tuples; (merged, sign) or None on repeats."""
    if not a:
        return b, 1
    if not b:
        return a, 1
    out = []
    sign = 1
    i = j = 0
    while i < len(a) and j < len(b):
        if a[i] == b[j]:
            return None
        if a[i] < b[j]:
            out.append(a[i])
            i += 1
        else:
            # b[j] jumps over the remaining elements of a
            if (len(a) - i) % 2:
                sign = -sign
            out.append(b[j])
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return tuple(out), sign


def merge_forms(m1: WeylMonomial, m2: WeylMonomial):
    """Combine form parts of two monomials; (dz, dzbar, sign) or None."""
    dz1, dzb1, dz2, dzb2 = m1[3], m1[4], m2[3], m2[4]
    r1 = _merge_sorted(dz1, dz2)
    if r1 is None:
        return None
    r2 = _merge_sorted(dzb1, dzb2)
    if r2 is None:
        return None
    sign = r1[1] * r2[1]
    # dz2 crosses dzb1 when the blocks are interleaved into canonical order
    if (len(dz2) * len(dzb1)) % 2:
        sign = -sign
    return r1[0], r2[0], sign


def insert_form_front(mono: WeylMonomial, kind: int, idx: int):
    """Insert one form generator at the front of the word; (mono', sign) or None."""
    y, yb, h, dz, dzb = mono
    if kind == 0:
        if idx in dz:
            return None
        sign = -1 if sum(1 for e in dz if e < idx) % 2 else 1
        ndz = tuple(sorted(dz + (idx,)))
        return (y, yb, h, ndz, dzb), sign
    if idx in dzb:
        return None
    sign = -1 if (len(dz) + sum(1 for e in dzb if e < idx)) % 2 else 1
    ndzb = tuple(sorted(dzb + (idx,)))
    return (y, yb, h, dz, ndzb), sign


def form_word(mono: WeylMonomial) -> List[Tuple[int, int]]:
    """[(0, i) for dz^i ...] + [(1, j) for dzbar^j ...] in canonical order."""
    return [(0, i) for i in mono[3]] + [(1, j) for j in mono[4]]


def remove_form_at(mono: WeylMonomial, pos: int):
    """Remove the form generator at position pos; (mono', contraction sign)."""
    word = form_word(mono)
    kind, idx = word[pos]
    sign = -1 if pos % 2 else 1
    y, yb, h, dz, dzb = mono
    if kind == 0:
        ndz = tuple(e for t, e in enumerate(dz) if t != pos)
        return (y, yb, h, ndz, dzb), sign, kind, idx
    p2 = pos - len(dz)
    ndzb = tuple(e for t, e in enumerate(dzb) if t != p2)
    return (y, yb, h, dz, ndzb), sign, kind, idx


def canonical_word(word: List[Tuple[int, int]]):
    """Sort a form word into canonical order; (dz, dzbar, sign) or None."""
    sign = 1
    w = list(word)
    # insertion sort counting adjacent transpositions
    for i in range(1, len(w)):
        j = i
        while j > 0 and w[j] < w[j - 1]:
            w[j], w[j - 1] = w[j - 1], w[j]
            sign = -sign
            j -= 1
        if j > 0 and w[j] == w[j - 1]:
            return None
    dz = tuple(e for k, e in w if k == 0)
    dzb = tuple(e for k, e in w if k == 1)
    return dz, dzb, sign


def _bump(t: Tuple[int, ...], i: int, d: int) -> Tuple[int, ...]:
    return t[:i] + (t[i] + d,) + t[i + 1:]


class WeylElement:
    """Sparse Weyl-bundle section (possibly form-valued)."""

    __slots__ = ("geom", "trunc", "level", "terms")

    def __init__(self, geom: KahlerGeometry, trunc: int,
                 terms: Optional[Dict[WeylMonomial, object]] = None,
                 level: Optional[RAT] = None):
        self.geom = geom
        self.trunc = trunc
        self.level = level
        self.terms = {}
        if terms:
            for m, c in terms.items():
                if c.is_zero():
                    continue
                if self._weight(m) > trunc:
                    continue
                self.terms[m] = c

    def _weight(self, m: WeylMonomial) -> int:
        return sym_degree(m) if self.level is not None else weight(m)

    # -- builders -----------------------------------------------------

    def _new(self, terms) -> "WeylElement":
        return WeylElement(self.geom, self.trunc, terms, self.level)

    @staticmethod
    def zero(geom, trunc, level=None) -> "WeylElement":
        return WeylElement(geom, trunc, None, level)

    @staticmethod
    def from_cf(geom, trunc, cf, h: int = 0, level=None) -> "WeylElement":
        n = geom.n
        mono = ((0,) * n, (0,) * n, h, (), ())
        return WeylElement(geom, trunc, {mono: cf}, level)

    @staticmethod
    def generator(geom, trunc, kind: str, idx: int = 0, level=None) -> "WeylElement":
        n = geom.n
        y = [0] * n
        yb = [0] * n
        h = 0
        dz: tuple = ()
        dzb: tuple = ()
        if kind == "y":
            y[idx] = 1
        elif kind == "ybar":
            yb[idx] = 1
        elif kind == "hbar":
            h = 1
        elif kind == "dz":
            dz = (idx,)
        elif kind == "dzbar":
            dzb = (idx,)
        else:
            raise ValueError(kind)
        mono = (tuple(y), tuple(yb), h, dz, dzb)
        return WeylElement(geom, trunc, {mono: geom.ring.one()}, level)

    # -- bookkeeping ----------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def ybar_degree(self) -> int:
        return max((sum(m[1]) for m in self.terms), default=0)

    def y_degree(self) -> int:
        return max((sum(m[0]) for m in self.terms), default=0)

    def hbar_degree(self) -> int:
        return max((m[2] for m in self.terms), default=0)

    def max_form_degree(self) -> int:
        return max((form_degree(m) for m in self.terms), default=0)

    def max_quantizable_weight(self) -> int:
        return max((quantizable_weight(m) for m in self.terms), default=0)

    def form_type_degrees(self) -> set:
        """Set of (dz count, dzbar count) across terms."""
        return {(len(m[3]), len(m[4])) for m in self.terms}

    def coefficient(self, mono: WeylMonomial):
        return self.terms.get(mono, self.geom.ring.zero())

    def drop_above_weight(self, w: int) -> "WeylElement":
        return self._new({m: c for m, c in self.terms.items() if self._weight(m) <= w})

    def with_trunc(self, trunc: int) -> "WeylElement":
        """Same terms re-homed at another truncation bound."""
        if trunc == self.trunc:
            return self
        return WeylElement(self.geom, trunc, self.terms, self.level)

    def part(self, predicate) -> "WeylElement":
        return self._new({m: c for m, c in self.terms.items() if predicate(m)})

    # -- linear structure -------------------------------------------------

    def _compat(self, other: "WeylElement") -> None:
        if self.geom is not other.geom or self.trunc != other.trunc or self.level != other.level:
            raise ValueError("mismatched geometry, truncation, or level")

    def __add__(self, other: "WeylElement") -> "WeylElement":
        self._compat(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            if m in out:
                s = out[m] + c
                if s.is_zero():
                    del out[m]
                else:
                    out[m] = s
            else:
                out[m] = c
        return self._new(out)

    def __neg__(self) -> "WeylElement":
        return self._new({m: -c for m, c in self.terms.items()})

    def __sub__(self, other: "WeylElement") -> "WeylElement":
        return self + (-other)

    def scale(self, s: Scalar) -> "WeylElement":
        return self._new({m: c.scale(s) for m, c in self.terms.items()})

    def scale_cf(self, cf) -> "WeylElement":
        return self._new({m: c * cf for m, c in self.terms.items()})

    def conjugate_section(self) -> "WeylElement":
        """Swap y <-> ybar, dz <-> dzbar and conjugate coefficients."""
        out: Dict[WeylMonomial, object] = {}
        for (y, yb, h, dz, dzb), c in self.terms.items():
            w = [(1, i) for i in dz] + [(0, j) for j in dzb]
            cw = canonical_word(w)
            ndz, ndzb, sign = cw
            cc = c.conjugate()
            if sign < 0:
                cc = -cc
            m = (yb, y, h, ndz, ndzb)
            out[m] = out[m] + cc if m in out else cc
        return self._new(out)

    # -- products -----------------------------------------------------------

    def pointwise_mul(self, other: "WeylElement") -> "WeylElement":
        self._compat(other)
        out: Dict[WeylMonomial, object] = {}
        trunc = self.trunc
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                merged = merge_forms(m1, m2)
                if merged is None:
                    continue
                dz, dzb, sign = merged
                mono = (
                    tuple(a + b for a, b in zip(m1[0], m2[0])),
                    tuple(a + b for a, b in zip(m1[1], m2[1])),
                    m1[2] + m2[2],
                    dz,
                    dzb,
                )
                if self._weight(mono) > trunc:
                    continue
                c = c1 * c2
                if sign < 0:
                    c = -c
                if mono in out:
                    c = out[mono] + c
                if c.is_zero():
                    out.pop(mono, None)
                else:
                    out[mono] = c
        return self._new(out)

    def diff_y(self, i: int) -> "WeylElement":
        out = {}
        for m, c in self.terms.items():
            if m[0][i] == 0:
                continue
            nm = (_bump(m[0], i, -1),) + m[1:]
            out[nm] = c.scale(Scalar.of(m[0][i]))
        return self._new(out)

    def diff_ybar(self, j: int) -> "WeylElement":
        out = {}
        for m, c in self.terms.items():
            if m[1][j] == 0:
                continue
            nm = (m[0], _bump(m[1], j, -1)) + m[2:]
            out[nm] = c.scale(Scalar.of(m[1][j]))
        return self._new(out)

    def __str__(self) -> str:
        return "\n".join(self.to_lines()) if self.terms else "0"

    def __repr__(self) -> str:  # pragma: no cover
        return f"WeylElement({len(self.terms)} terms, trunc={self.trunc})"

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, WeylElement)
            and self.level == other.level
            and self.terms == other.terms
        )

    def __hash__(self):  # pragma: no cover
        return id(self)

    def to_lines(self) -> List[str]:
        """Deterministic debug serialization, one '<monomial> : <coeff>' per line."""
        lines = []
        for m in sorted(self.terms, key=lambda m: (weight(m), m)):
            lines.append(f"{_mono_str(m, self.geom.n)} : {self.terms[m]}")
        return lines


def _mono_str(m: WeylMonomial, n: int) -> str:
    y, yb, h, dz, dzb = m
    bits = []
    for i, e in enumerate(y):
        if e:
            bits.append(f"y{i+1}" if n > 1 else "y" + (f"^{e}" if e > 1 else ""))
            if n > 1 and e > 1:
                bits[-1] += f"^{e}"
    for i, e in enumerate(yb):
        if e:
            bits.append(f"ybar{i+1}" if n > 1 else "ybar" + (f"^{e}" if e > 1 else ""))
            if n > 1 and e > 1:
                bits[-1] += f"^{e}"
    if h:
        bits.append("hbar" + (f"^{h}" if h > 1 else ""))
    for i in dz:
        bits.append(f"dz{i+1}" if n > 1 else "dz")
    for i in dzb:
        bits.append(f"dzbar{i+1}" if n > 1 else "dzbar")
    return " ".join(bits) if bits else "1"


# -- the Wick product -----------------------------------------------------


def _factorial_inv(k: int) -> Scalar:
    f = 1
    for t in range(2, k + 1):
        f *= t
    return Scalar.of(rat(1, f))


def wick_product(a: WeylElement, b: WeylElement) -> WeylElement:
    """Fiberwise Wick product, truncated, graded-sign-correct."""
    a._compat(b)
    geom = a.geom
    out = WeylElement.zero(geom, a.trunc, a.level)
    n = geom.n
    acc: Dict[WeylMonomial, object] = {}

    def emit(m1, m2, cf):
        merged = merge_forms(m1, m2)
        if merged is None:
            return
        dz, dzb, sign = merged
        mono = (
            tuple(x + y for x, y in zip(m1[0], m2[0])),
            tuple(x + y for x, y in zip(m1[1], m2[1])),
            m1[2] + m2[2],
            dz,
            dzb,
        )
        if out._weight(mono) > out.trunc:
            return
        c = cf if sign > 0 else -cf
        if mono in acc:
            c = acc[mono] + c
        if c.is_zero():
            acc.pop(mono, None)
        else:
            acc[mono] = c

    hbar_is_formal = a.level is None
    for m1, c1 in a.terms.items():
        ymax = sum(m1[0])
        if ymax == 0:
            for m2, c2 in b.terms.items():
                emit(m1, m2, c1 * c2)
            continue
        for m2, c2 in b.terms.items():
            kmax = min(ymax, sum(m2[1]))
            # contraction depth 0
            emit(m1, m2, c1 * c2)
            if kmax == 0:
                continue
            # iterated single contractions: frontier of (monoA, monoB, cf)
            frontier = [(m1, m2, c1 * c2)]
            for k in range(1, kmax + 1):
                nxt = []
                for (A, B, cf) in frontier:
                    for i in range(n):
                        if A[0][i] == 0:
                            continue
                        dA = (_bump(A[0], i, -1),) + A[1:]
                        for j in range(n):
                            if B[1][j] == 0:
                                continue
                            dB = (B[0], _bump(B[1], j, -1)) + B[2:]
                            w = geom.omega_up(i, j)
                            mult = Scalar.of(A[0][i] * B[1][j])
                            nxt.append((dA, dB, (cf * w).scale(mult)))
                if not nxt:
                    break
                frontier = nxt
                if hbar_is_formal:
                    factor = _factorial_inv(k)
                    hshift = k
                else:
                    factor = Scalar.of(a.level ** k) * _factorial_inv(k)
                    hshift = 0
                for (A, B, cf) in frontier:
                    A2 = (A[0], A[1], A[2] + hshift, A[3], A[4])
                    emit(A2, B, cf.scale(factor))
    return WeylElement(geom, a.trunc, acc, a.level)


def graded_commutator(a: WeylElement, b: WeylElement) -> WeylElement:
    """[a, b] = a*b - (-1)^{|a||b|} b*a, split over form parities."""
    out = WeylElement.zero(a.geom, a.trunc, a.level)
    for pa in (0, 1):
        ea = a.part(lambda m, p=pa: form_degree(m) % 2 == p)
        if ea.is_zero():
            continue
        for pb in (0, 1):
            eb = b.part(lambda m, p=pb: form_degree(m) % 2 == p)
            if eb.is_zero():
                continue
            first = wick_product(ea, eb)
            second = wick_product(eb, ea)
            if pa * pb:
                out = out + first + second
            else:
                out = out + first - second
    return out


def bracket_over_hbar(a: WeylElement, b: WeylElement, out_trunc: Optional[int] = None) -> WeylElement:
    """(1/hbar)[a, b] computed without premature truncation.

    The product is formed at truncation out_trunc + 2 so that terms the hbar
    division will pull back below the bound are not clipped.
    """
    t = a.trunc if out_trunc is None else out_trunc
    lifted = graded_commutator(a.with_trunc(t + 2), b.with_trunc(t + 2))
    return divide_hbar(lifted).with_trunc(t)


# -- hbar bookkeeping ------------------------------------------------------


def divide_hbar(a: WeylElement, power: int = 1) -> WeylElement:
    out = {}
    for m, c in a.terms.items():
        if m[2] < power:
            raise ValueError("element is not divisible by hbar^%d" % power)
        out[(m[0], m[1], m[2] - power, m[3], m[4])] = c
    return WeylElement(a.geom, a.trunc, out, a.level)


def multiply_hbar(a: WeylElement, power: int = 1) -> WeylElement:
    out = {}
    for m, c in a.terms.items():
        out[(m[0], m[1], m[2] + power, m[3], m[4])] = c
    return a._new(out)


def substitute_hbar(a: WeylElement, value: RAT) -> WeylElement:
    """Evaluate hbar -> value (e.g. 1/k); the result is a level element."""
    if a.level is not None:
        raise ValueError("element is already evaluated")
    out: Dict[WeylMonomial, object] = {}
    for (y, yb, h, dz, dzb), c in a.terms.items():
        cf = c.scale(Scalar.of(value ** h)) if h else c
        m = (y, yb, 0, dz, dzb)
        out[m] = out[m] + cf if m in out else cf
    return WeylElement(a.geom, a.trunc, out, level=value)


# -- symbol map and formal functions ---------------------------------------


class HbarSeries:
    """A chart function with polynomial hbar dependence: sum_h f_h hbar^h."""

    __slots__ = ("ring", "coeffs")

    def __init__(self, ring, coeffs: Optional[Dict[int, object]] = None):
        self.ring = ring
        self.coeffs = {}
        if coeffs:
            for h, f in coeffs.items():
                if not f.is_zero():
                    self.coeffs[h] = f

    @staticmethod
    def of(f, h: int = 0) -> "HbarSeries":
        return HbarSeries(f.ring, {h: f})

    def coeff(self, h: int):
        return self.coeffs.get(h, self.ring.zero())

    def degree(self) -> int:
        return max(self.coeffs, default=0)

    def is_zero(self) -> bool:
        return not self.coeffs

    def truncated(self, hmax: int) -> "HbarSeries":
        return HbarSeries(self.ring, {h: f for h, f in self.coeffs.items() if h <= hmax})

    def __add__(self, other: "HbarSeries") -> "HbarSeries":
        out = dict(self.coeffs)
        for h, f in other.coeffs.items():
            out[h] = out[h] + f if h in out else f
        return HbarSeries(self.ring, out)

    def __neg__(self) -> "HbarSeries":
        return HbarSeries(self.ring, {h: -f for h, f in self.coeffs.items()})

    def __sub__(self, other: "HbarSeries") -> "HbarSeries":
        return self + (-other)

    def __mul__(self, other: "HbarSeries") -> "HbarSeries":
        out: Dict[int, object] = {}
        for h1, f1 in self.coeffs.items():
            for h2, f2 in other.coeffs.items():
                h = h1 + h2
                p = f1 * f2
                out[h] = out[h] + p if h in out else p
        return HbarSeries(self.ring, out)

    def scale(self, s: Scalar) -> "HbarSeries":
        return HbarSeries(self.ring, {h: f.scale(s) for h, f in self.coeffs.items()})

    def shift(self, d: int) -> "HbarSeries":
        return HbarSeries(self.ring, {h + d: f for h, f in self.coeffs.items()})

    def substitute(self, value: RAT):
        out = self.ring.zero()
        for h, f in self.coeffs.items():
            out = out + f.scale(Scalar.of(value ** h))
        return out

    def __eq__(self, other: object) -> bool:
        return isinstance(other, HbarSeries) and self.coeffs == other.coeffs

    def __str__(self) -> str:
        if not self.coeffs:
            return "0"
        bits = []
        for h in sorted(self.coeffs):
            head = "" if h == 0 else ("hbar*" if h == 1 else f"hbar^{h}*")
            bits.append(f"{head}({self.coeffs[h]})")
        return " + ".join(bits)

    def __repr__(self) -> str:  # pragma: no cover
        return f"HbarSeries({self})"


def symbol(a: WeylElement) -> HbarSeries:
    """Set y = ybar = 0 and drop form terms; hbar survives."""
    out: Dict[int, object] = {}
    for m, c in a.terms.items():
        if sym_degree(m) == 0 and form_degree(m) == 0:
            out[m[2]] = out[m[2]] + c if m[2] in out else c
    return HbarSeries(a.geom.ring, out)


def from_series(geom, trunc, f: HbarSeries, level=None) -> WeylElement:
    out = WeylElement.zero(geom, trunc, level)
    for h, cf in f.coeffs.items():
        if level is None:
            out = out + WeylElement.from_cf(geom, trunc, cf, h=h)
        else:
            out = out + WeylElement.from_cf(
                geom, trunc, cf.scale(Scalar.of(level ** h)), h=0, level=level
            )
    return out


# -- the delta complex ------------------------------------------------------


def delta(a: WeylElement) -> WeylElement:
    """delta(y^i) = dz^i, delta(ybar^j) = dzbar^j, extended as an odd derivation."""
    out = WeylElement.zero(a.geom, a.trunc, a.level)
    acc: Dict[WeylMonomial, object] = {}
    for m, c in a.terms.items():
        y, yb = m[0], m[1]
        for i, e in enumerate(y):
            if not e:
                continue
            base = (_bump(y, i, -1), yb) + m[2:]
            res = insert_form_front(base, 0, i)
            if res is None:
                continue
            nm, sign = res
            cc = c.scale(Scalar.of(e if sign > 0 else -e))
            acc[nm] = acc[nm] + cc if nm in acc else cc
        for j, e in enumerate(yb):
            if not e:
                continue
            base = (y, _bump(yb, j, -1)) + m[2:]
            res = insert_form_front(base, 1, j)
            if res is None:
                continue
            nm, sign = res
            cc = c.scale(Scalar.of(e if sign > 0 else -e))
            acc[nm] = acc[nm] + cc if nm in acc else cc
    return WeylElement(a.geom, a.trunc, _clean(acc), a.level)


def _clean(acc):
    return {m: c for m, c in acc.items() if not c.is_zero()}


def delta_inv(a: WeylElement) -> WeylElement:
    """Fedosov homotopy: substitute one form generator by its symmetric
    partner, divide by (#symmetric + #form generators); kills the p+q = 0 part.
    """
    acc: Dict[WeylMonomial, object] = {}
    for m, c in a.terms.items():
        p = sym_degree(m)
        q = form_degree(m)
        if p + q == 0:
            continue
        inv = Scalar.of(rat(1, p + q))
        for pos in range(q):
            nm, sign, kind, idx = remove_form_at(m, pos)
            if kind == 0:
                nm = (_bump(nm[0], idx, 1),) + nm[1:]
            else:
                nm = (nm[0], _bump(nm[1], idx, 1)) + nm[2:]
            cc = c.scale(inv if sign > 0 else -inv)
            acc[nm] = acc[nm] + cc if nm in acc else cc
    return WeylElement(a.geom, a.trunc, _clean(acc), a.level)


def delta10_inv(a: WeylElement) -> WeylElement:
    """Homotopy for the (1,0) part delta^{1,0} = dz^i d/dy^i alone.

    Substitutes one dz generator by y, divides by (#y + #dz); terms with no
    dz and terms with trivial (y, dz) sector are annihilated.  Applied to
    (1,1)-form sources it produces the type-(0,1) Fedosov datum I_alpha.
    """
    acc: Dict[WeylMonomial, object] = {}
    for m, c in a.terms.items():
        p = sum(m[0]) + len(m[3])
        if p == 0 or not m[3]:
            continue
        inv = Scalar.of(rat(1, p))
        for pos in range(len(m[3])):
            nm, sign, kind, idx = remove_form_at(m, pos)
            nm = (_bump(nm[0], idx, 1),) + nm[1:]
            cc = c.scale(inv if sign > 0 else -inv)
            acc[nm] = acc[nm] + cc if nm in acc else cc
    return WeylElement(a.geom, a.trunc, _clean(acc), a.level)


def sym_projection(a: WeylElement) -> WeylElement:
    """The y = ybar = form = 0 part (complement of the delta homotopy)."""
    return a.part(lambda m: sym_degree(m) == 0 and form_degree(m) == 0)


# -- connections and derivatives -------------------------------------------


def nabla_weyl(a: WeylElement) -> WeylElement:
    """Levi-Civita covariant derivative; raises form degree by one.

    nabla(y^k) = -Gamma^k_{ij} dz^i (x) y^j and conjugately on ybar; the
    coefficient functions are differentiated by d.
    """
    geom = a.geom
    n = geom.n
    acc: Dict[WeylMonomial, object] = {}

    def put(mono, cf):
        if cf.is_zero():
            return
        acc[mono] = acc[mono] + cf if mono in acc else cf

    for m, c in a.terms.items():
        # exterior derivative of the coefficient
        for i in range(n):
            ci = c.diff_z(i)
            if not ci.is_zero():
                res = insert_form_front(m, 0, i)
                if res is not None:
                    nm, sign = res
                    put(nm, ci if sign > 0 else -ci)
            cj = c.diff_zbar(i)
            if not cj.is_zero():
                res = insert_form_front(m, 1, i)
                if res is not None:
                    nm, sign = res
                    put(nm, cj if sign > 0 else -cj)
        if geom.is_flat:
            continue
        y, yb = m[0], m[1]
        for p in range(n):
            if y[p]:
                for i in range(n):
                    for q in range(n):
                        gam = geom.christoffel[p][i][q]
                        if gam.is_zero():
                            continue
                        base = (_bump(_bump(y, p, -1), q, 1), yb) + m[2:]
                        res = insert_form_front(base, 0, i)
                        if res is None:
                            continue
                        nm, sign = res
                        cf = (c * gam).scale(Scalar.of(-y[p] * sign))
                        put(nm, cf)
            if yb[p]:
                for i in range(n):
                    for q in range(n):
                        gam = geom.christoffel_bar[p][i][q]
                        if gam.is_zero():
                            continue
                        base = (y, _bump(_bump(yb, p, -1), q, 1)) + m[2:]
                        res = insert_form_front(base, 1, i)
                        if res is None:
                            continue
                        nm, sign = res
                        cf = (c * gam).scale(Scalar.of(-yb[p] * sign))
                        put(nm, cf)
    return WeylElement(geom, a.trunc, _clean(acc), a.level)


def curvature_element(geom: KahlerGeometry, trunc: int, level=None) -> WeylElement:
    """R_nabla with nabla^2 = (1/hbar)[R_nabla, -]: the (1,1)-form valued
    quadratic element rho_{j qbar i lbar} y^j ybar^q dz^i dzbar^l."""
    n = geom.n
    acc: Dict[WeylMonomial, object] = {}
    for j in range(n):
        for q in range(n):
            for i in range(n):
                for l in range(n):
                    cf = geom.curvature[j][q][i][l]
                    if cf.is_zero():
                        continue
                    y = tuple(1 if t == j else 0 for t in range(n))
                    yb = tuple(1 if t == q else 0 for t in range(n))
                    m = (y, yb, 0, (i,), (l,))
                    acc[m] = acc[m] + cf if m in acc else cf
    return WeylElement(geom, trunc, _clean(acc), level)


def gamma_delta_element(geom: KahlerGeometry, trunc: int, level=None) -> WeylElement:
    """-omega_{i jbar}(dz^i (x) ybar^j - dzbar^j (x) y^i): the delta part of
    gamma, with (1/hbar)[gamma_delta, -] = -delta."""
    n = geom.n
    acc: Dict[WeylMonomial, object] = {}
    for i in range(n):
        for j in range(n):
            w = geom.omega_lower[i][j]
            if w.is_zero():
                continue
            yb = tuple(1 if t == j else 0 for t in range(n))
            m1 = ((0,) * n, yb, 0, (i,), ())
            acc[m1] = acc[m1] + (-w) if m1 in acc else -w
            y = tuple(1 if t == i else 0 for t in range(n))
            m2 = (y, (0,) * n, 0, (), (j,))
            acc[m2] = acc[m2] + w if m2 in acc else w
    return WeylElement(geom, trunc, _clean(acc), level)


def lie_weyl(V: VectorField, a: WeylElement) -> WeylElement:
    """Lie derivative along V of a Weyl-valued form."""
    geom = a.geom
    n = geom.n
    acc: Dict[WeylMonomial, object] = {}

    def put(mono, cf):
        if cf.is_zero():
            return
        acc[mono] = acc[mono] + cf if mono in acc else cf

    for m, c in a.terms.items():
        vc = V.apply(c)
        if not vc.is_zero():
            put(m, vc)
        y, yb = m[0], m[1]
        # L_V(y^p) = dV^p / dz^j y^j + dV^p / dzbar^j ybar^j
        for p in range(n):
            if y[p]:
                mult = Scalar.of(y[p])
                for j in range(n):
                    dv = V.v_z[p].diff_z(j)
                    if not dv.is_zero():
                        nm = (_bump(_bump(y, p, -1), j, 1), yb) + m[2:]
                        put(nm, (c * dv).scale(mult))
                    dvb = V.v_z[p].diff_zbar(j)
                    if not dvb.is_zero():
                        nm = (_bump(y, p, -1), _bump(yb, j, 1)) + m[2:]
                        put(nm, (c * dvb).scale(mult))
            if yb[p]:
                mult = Scalar.of(yb[p])
                for j in range(n):
                    dv = V.v_zbar[p].diff_zbar(j)
                    if not dv.is_zero():
                        nm = (y, _bump(_bump(yb, p, -1), j, 1)) + m[2:]
                        put(nm, (c * dv).scale(mult))
                    dvb = V.v_zbar[p].diff_z(j)
                    if not dvb.is_zero():
                        nm = (_bump(y, j, 1), _bump(yb, p, -1)) + m[2:]
                        put(nm, (c * dvb).scale(mult))
        # form generators: L_V(dz^p) = d(V^p), L_V(dzbar^p) = d(V^pbar)
        word = form_word(m)
        for pos, (kind, idx) in enumerate(word):
            comp = V.v_z[idx] if kind == 0 else V.v_zbar[idx]
            for j in range(n):
                for nkind, dcomp in ((0, comp.diff_z(j)), (1, comp.diff_zbar(j))):
                    if dcomp.is_zero():
                        continue
                    nw = list(word)
                    nw[pos] = (nkind, j)
                    cwr = canonical_word(nw)
                    if cwr is None:
                        continue
                    dz, dzb, sign = cwr
                    nm = (y, yb, m[2], dz, dzb)
                    put(nm, (c * dcomp).scale(Scalar.of(sign)))
    return WeylElement(geom, a.trunc, _clean(acc), a.level)


def iota_weyl(V: VectorField, a: WeylElement) -> WeylElement:
    """Contraction of the form part along V (odd derivation)."""
    acc: Dict[WeylMonomial, object] = {}
    for m, c in a.terms.items():
        q = form_degree(m)
        for pos in range(q):
            nm, sign, kind, idx = remove_form_at(m, pos)
            comp = V.v_z[idx] if kind == 0 else V.v_zbar[idx]
            if comp.is_zero():
                continue
            cf = (c * comp).scale(Scalar.of(sign))
            acc[nm] = acc[nm] + cf if nm in acc else cf
    return WeylElement(a.geom, a.trunc, _clean(acc), a.level)


def nabla_along(V: VectorField, a: WeylElement) -> WeylElement:
    """nabla_V = iota_V . nabla on Weyl sections (form degree 0)."""
    return iota_weyl(V, nabla_weyl(a))
