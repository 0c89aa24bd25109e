"""Degree-1 quantizable functions: classification, levels, round trips.

A formal function is quantizable of degree 1 when its flat section is
polynomial of degree <= 1 in the anti-holomorphic generators and hbar
(quantizable weight |ybar| = |hbar| = 1, |y| = 0).  For the Berezin-Toeplitz
connection (alpha = Ric) these are exactly

    f = f0 - (hbar/4pi)(Delta f0 + c)

with the (0,1) Hessian of f0 covariantly vanishing, equivalently with the
(1,0) part of the Hamiltonian field of f0 holomorphic.  Both conditions are
implemented as independent exact checks, together with the Ricci identity
d_lbar(Delta f0 / 4pi) = d_jbar f0 omega^{k jbar} Ric_{k lbar} that the
classification argument rides on.

The level-k story evaluates hbar at 1/k and re-verifies flatness under the
evaluated connection; the converse direction (formalize_level_section)
rebuilds a formal function from a degree-1 level section via an exact
dbar-antiderivative in the chart ring and reports the leftover holomorphic
correction instead of asserting it constant.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .scalars import RAT, Scalar, rat, solve_linear
from .geometry import KahlerGeometry, hamiltonian_vf, laplacian
from .rings import ChartFunction, poly_diff_z, poly_diff_zbar
from .weyl import HbarSeries, WeylElement, substitute_hbar, symbol
from .fedosov import FedosovConnection, FlatSection, LevelConnection, flat_section

ONE_OVER_4PI = Scalar.of(rat(1, 4), 0, -1)


class NotKillingError(ValueError):
    """The symbol fails the degree-1 admissibility condition."""


class RingAntiderivativeError(ValueError):
    """No antiderivative exists inside the chart function ring."""


@dataclass
class KillingReport:
    condition_holds: bool
    v10_holomorphic: bool
    ricci_identity: Optional[bool]


def check_killing_condition(geom: KahlerGeometry, f0) -> KillingReport:
    """Three independent exact checks of the degree-1 admissibility of f0.

    condition_holds: nabla^{0,1}(d_jbar f0 ybar^j) = 0, i.e. the covariant
    (0,2) Hessian of f0 vanishes.  v10_holomorphic: the components of
    V_{f0}^{1,0} are holomorphic.  These two are equivalent and asserted so.
    """
    n = geom.n
    cond = True
    for k in range(n):
        for j in range(n):
            hess = f0.diff_zbar(j).diff_zbar(k)
            for l in range(n):
                hess = hess - geom.christoffel_bar[l][k][j] * f0.diff_zbar(l)
            if not hess.is_zero():
                cond = False
    vf = hamiltonian_vf(geom, f0)
    v10 = all(
        vf.v_z[i].diff_zbar(j).is_zero() for i in range(n) for j in range(n)
    )
    assert cond == v10, "Hessian and holomorphy criteria disagree"
    ricci_ok: Optional[bool] = True
    lap = laplacian(geom, f0).scale(ONE_OVER_4PI)
    for l in range(n):
        lhs = lap.diff_zbar(l)
        rhs = geom.ring.zero()
        for k in range(n):
            for j in range(n):
                rhs = rhs + f0.diff_zbar(j) * geom.omega_up(k, j) * geom.ricci[k][l]
        if lhs != rhs:
            ricci_ok = False
    if not cond:
        ricci_ok = None if not ricci_ok else ricci_ok
    return KillingReport(cond, v10, ricci_ok)


@dataclass
class QuantizableFunction:
    """f = f0 - (hbar/4pi)(Delta f0 + c) together with its flat section."""

    conn: FedosovConnection
    f0: object
    c: Scalar
    formal: HbarSeries
    section: FlatSection
    ybar_degree: int
    hbar_degree: int

    def quantizable_weight(self) -> int:
        return self.section.of.max_quantizable_weight()


def degree1_series(geom: KahlerGeometry, f0, c: Scalar) -> HbarSeries:
    corr = (laplacian(geom, f0) + geom.ring.const(c)).scale(-ONE_OVER_4PI)
    return HbarSeries(geom.ring, {0: f0, 1: corr})


def make_degree1(conn: FedosovConnection, f0, c: Scalar = Scalar.zero(),
                 force: bool = False) -> QuantizableFunction:
    """Build the canonical degree-1 function over f0 and verify the
    classification on its computed flat section.

    Requires the Berezin-Toeplitz connection (alpha = Ric) and a Killing
    admissible f0; with force=True a non-admissible f0 is pushed through the
    iteration anyway so the failure (ybar degree >= 2) can be observed.
    """
    if conn.alpha_tag != "ricci":
        raise ValueError("degree-1 classification requires the alpha = Ric connection")
    report = check_killing_condition(conn.geom, f0)
    if not report.condition_holds and not force:
        raise NotKillingError("not-Killing: V^{1,0} of f0 is not holomorphic")
    f = degree1_series(conn.geom, f0, c)
    section = flat_section(conn, f)
    yb, hb = section.of.ybar_degree(), section.of.hbar_degree()
    if report.condition_holds and not force:
        assert yb <= 1 and hb <= 1, (
            "classification violated: Killing symbol produced degree "
            f"(ybar={yb}, hbar={hb})"
        )
    return QuantizableFunction(
        conn=conn, f0=f0, c=c, formal=f, section=section,
        ybar_degree=yb, hbar_degree=hb,
    )


@dataclass
class LevelSection:
    """A degree-1 flat section with hbar evaluated at 1/k."""

    conn: FedosovConnection
    k: int
    element: WeylElement
    symbol_value: object
    verified_weight: int


def evaluate_level(q: QuantizableFunction, k: int) -> LevelSection:
    """Substitute hbar = 1/k and re-verify flatness under D_{alpha,k}."""
    if k < 1:
        raise ValueError("level k must be a positive integer")
    lvl = q.conn.level(k)
    s = substitute_hbar(q.section.of, lvl.hval)
    trusted = lvl.trusted_weight(q.section.of)
    defect = lvl.covariant_derivative(s).drop_above_weight(trusted)
    if not defect.is_zero():
        raise AssertionError("evaluated section failed level-k flatness")
    sym = q.formal.substitute(lvl.hval)
    assert sym == q.f0 + q.formal.coeff(1).scale(Scalar.of(lvl.hval))
    return LevelSection(conn=q.conn, k=k, element=s, symbol_value=sym,
                        verified_weight=trusted)


# -- exact antiderivatives in the chart ring --------------------------------


def _monomial_box(n: int, zmax: int, bmax: int):
    zr = itertools.product(range(zmax + 1), repeat=n)
    out = []
    for ze in zr:
        for be in itertools.product(range(bmax + 1), repeat=n):
            out.append((tuple(ze), tuple(be)))
    return out


def _poly_rows(ring, unknowns, build_lhs, rhs_terms):
    """Assemble the linear system: for each unknown monomial u, build_lhs(u)
    returns the polynomial multiplying that unknown's coefficient; rows are
    indexed by result monomials."""
    cols = []
    support = set(rhs_terms)
    for u in unknowns:
        lhs = build_lhs(u)
        cols.append(lhs)
        support.update(lhs)
    support = sorted(support)
    index = {m: t for t, m in enumerate(support)}
    rows = [[rat(0)] * len(unknowns) for _ in support]
    for cidx, lhs in enumerate(cols):
        for m, coeff in lhs.items():
            rows[index[m]][cidx] = coeff
    rhs = [rhs_terms.get(m, Scalar.zero()) for m in support]
    return rows, rhs


def dbar_antiderivative(geom: KahlerGeometry, targets: List[object]):
    """Solve d_jbar g = targets[j] for all j inside the chart ring.

    Returns g with gauge g(0) = 0, or raises RingAntiderivativeError.  The
    solver works over the rational ring by a bounded monomial ansatz
    g = P / D^m and exact linear algebra; pi powers and Gaussian parts of the
    targets ride through the rational system untouched.
    """
    return _antiderivative(geom, dz_targets=None, dzbar_targets=targets)


def d_antiderivative(geom: KahlerGeometry, dz_targets, dzbar_targets):
    """Solve d_i g = dz_targets[i], d_jbar g = dzbar_targets[j], gauge g(0)=0."""
    return _antiderivative(geom, dz_targets=dz_targets, dzbar_targets=dzbar_targets)


def _antiderivative(geom: KahlerGeometry, dz_targets, dzbar_targets):
    ring = geom.ring
    n = geom.n
    if ring.mode == "jet":
        return _antiderivative_jet(geom, dz_targets, dzbar_targets)
    targets = list(dzbar_targets or []) + list(dz_targets or [])
    if all(t.is_zero() for t in targets):
        return ring.zero()
    mmax = max(t.dpow for t in targets)
    zdeg = 0
    bdeg = 0
    for t in targets:
        for (ze, be) in t.num:
            zdeg = max(zdeg, max(ze, default=0))
            bdeg = max(bdeg, max(be, default=0))
    for m in range(0, mmax + 2):
        slack = max(0, m + 1 - mmax) + 1
        box = _monomial_box(n, zdeg + slack + m, bdeg + slack + m)
        sol = _try_ansatz(geom, m, box, dz_targets, dzbar_targets)
        if sol is not None:
            value0 = sol.evaluate(
                (Scalar.zero(),) * n, (Scalar.zero(),) * n
            )
            return sol - ring.const(value0)
    raise RingAntiderivativeError("not representable in ring")


def _try_ansatz(geom, m, box, dz_targets, dzbar_targets):
    ring = geom.ring
    n = ring.n
    dpoly = ring.denominator
    rows_all: List[List[RAT]] = []
    rhs_all: List[Scalar] = []

    def add_equations(direction, j, target):
        # d(P/D^m) = (dP * D - m P dD) / D^{m+1}; cross-multiplied against
        # target = N_t / D^{m_t}:  dP*D - m P dD = N_t * D^{m+1-m_t}
        lift = m + 1 - target.dpow
        if lift < 0:
            return False
        from .rings import poly_mul, poly_scalar

        rhs_poly = poly_mul(target.num, ring.d_power(lift))
        diff = poly_diff_zbar if direction == "zbar" else poly_diff_z
        ddent = diff(dpoly, j)

        def build_lhs(u):
            mono_poly = {u: Scalar.one()}
            out = poly_mul(diff(mono_poly, j), dpoly)
            if m:
                out = dict(out)
                for mm, cc in poly_scalar(poly_mul(mono_poly, ddent), Scalar.of(-m)).items():
                    out[mm] = out[mm] + cc if mm in out else cc
            return {mm: _lead_rat(cc) for mm, cc in out.items() if not cc.is_zero()}

        rows, rhs = _poly_rows(ring, box, build_lhs, rhs_poly)
        rows_all.extend(rows)
        rhs_all.extend(rhs)
        return True

    if dzbar_targets is not None:
        for j, t in enumerate(dzbar_targets):
            if not add_equations("zbar", j, t):
                return None
    if dz_targets is not None:
        for i, t in enumerate(dz_targets):
            if not add_equations("z", i, t):
                return None
    sol = solve_linear(rows_all, rhs_all)
    if sol is None:
        return None
    terms = {u: c for u, c in zip(box, sol) if not c.is_zero()}
    return ring.func(terms, m)


def _lead_rat(s: Scalar) -> RAT:
    # integer-combination coefficients produced by D, dD, and differentiation
    if s.is_zero():
        return rat(0)
    return s.as_rational()


def _antiderivative_jet(geom, dz_targets, dzbar_targets):
    ring = geom.ring
    n = ring.n
    targets = list(dzbar_targets or []) + list(dz_targets or [])
    prec = min(t.prec for t in targets) + 1
    acc: Dict = {}
    if dzbar_targets is not None and not all(t.is_zero() for t in dzbar_targets):
        t0 = dzbar_targets[0]
        for (ze, be), c in t0.terms.items():
            nb = be[:0] + (be[0] + 1,) + be[1:]
            acc[(ze, nb)] = c.mul_rat(rat(1, be[0] + 1))
    g = ring.func(acc, prec)
    if dzbar_targets is not None:
        for j, t in enumerate(dzbar_targets):
            resid = t - g.diff_zbar(j)
            if j == 0:
                if not resid.is_zero():
                    raise RingAntiderivativeError("not representable in ring")
            elif not resid.is_zero():
                raise RingAntiderivativeError("not representable in ring")
    if dz_targets is not None:
        for i, t in enumerate(dz_targets):
            resid = t - g.diff_z(i)
            if resid.is_zero():
                continue
            if not resid.is_holomorphic():
                raise RingAntiderivativeError("not representable in ring")
            add: Dict = {}
            for (ze, be), c in resid.terms.items():
                nz = ze[:i] + (ze[i] + 1,) + ze[i + 1:]
                add[(nz, be)] = c.mul_rat(rat(1, ze[i] + 1))
            g = g + ring.func(add, g.prec)
    zk = ((0,) * n, (0,) * n)
    const = g.terms.get(zk)
    if const is not None:
        g = g - ring.const(const)
        g = ring.func(g.terms, g.prec)
    return g


# -- from level sections back to formal functions ---------------------------


def formalize_level_section(conn: FedosovConnection, k: int, s: WeylElement):
    """Rebuild a formal degree-1 quantizable function from a level-k flat
    section.  Returns (q, correction) with

        evaluate_level(q, k).element + O_correction == s,

    the correction a holomorphic chart function, reported not assumed
    constant.  Raises RingAntiderivativeError when the ybar coefficient has
    no dbar-antiderivative in the ring.
    """
    lvl = conn.level(k)
    if s.level != lvl.hval:
        raise ValueError("section is not evaluated at hbar = 1/k")
    if s.ybar_degree() > 1:
        raise ValueError("section is not of degree 1")
    trusted = conn.trunc - 4
    defect = lvl.covariant_derivative(s).drop_above_weight(trusted)
    if not defect.is_zero():
        raise ValueError("input section is not flat for D_{alpha,k}")
    n = conn.geom.n
    ybar_coeffs = []
    for j in range(n):
        mono = ((0,) * n, tuple(1 if t == j else 0 for t in range(n)), 0, (), ())
        ybar_coeffs.append(s.coefficient(mono))
    f_gamma = dbar_antiderivative(conn.geom, ybar_coeffs)
    q = make_degree1(conn, f_gamma, Scalar.zero())
    ev = evaluate_level(q, k)
    diff = s - ev.element
    correction = symbol(diff).coeff(0)
    if not correction.is_holomorphic():
        raise AssertionError("level-section difference is not holomorphic")
    if not correction.is_zero():
        oh = substitute_hbar(flat_section(conn, correction).of, lvl.hval)
        mismatch = (diff - oh).drop_above_weight(trusted)
        if not mismatch.is_zero():
            raise AssertionError(
                "difference is not the flat section of its holomorphic symbol"
            )
    elif not diff.drop_above_weight(trusted).is_zero():
        raise AssertionError("nonzero difference with zero symbol")
    return q, correction
