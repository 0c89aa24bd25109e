"""Exact geometric quantization on CP^1 and the operator identities.

H_k = H^0(CP^1, O(k)) is modelled on the Fubini-Study chart by the monomial
basis z^a e_{L^k}, a = 0..k, with hermitian metric <e, e> = e^{k rho}
= (1+z zbar)^{-k}.  All inner products reduce to the exact chart integrals

    (1/pi) int z^p zbar^q (1+|z|^2)^{-s} dA
        = delta_{pq} p! (s-p-2)! / (s-1)!       (s >= p+2),

so Gram matrices, Toeplitz operators T_f = P_k m_f, prequantum operators
beta_k(xi) = nabla^{(k)}_{V_xi} - 2 pi i k m_{mu(xi)}, and the Bargmann-Fock
action of degree-1 quantizable functions are all (k+1) x (k+1) matrices over
Q(i)[pi, pi^-1], and every identity (Tuynman's lemma, the quantum-moment-map
diagram, T_{k mu_k} = beta_k, su(2) commutation) is an exact matrix
equality.  Only the Berezin-Toeplitz asymptotic fit leaves exact arithmetic,
converting exact defect matrices to floats for a spectral norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .scalars import RAT, Scalar, rat
from .geometry import KahlerGeometry, LieAlgebraAction, VectorField, laplacian
from .rings import ChartFunction
from .weyl import WeylElement
from .fedosov import FedosovConnection, star_product
from .quantizable import QuantizableFunction, evaluate_level, make_degree1
from .symmetry import moment_series

TWO_PI_OVER_I = Scalar.of(0, -2, 1)
ONE_OVER_4PI = Scalar.of(rat(1, 4), 0, -1)


class HilbertError(ValueError):
    pass


def moment_integral(p: int, q: int, s: int) -> Scalar:
    """(1/pi) int_C z^p zbar^q (1+|z|^2)^{-s} dA, exact.

    Rotational symmetry kills p != q; the radial part is a Beta integral
    int_0^inf t^p (1+t)^{-s} dt = B(p+1, s-p-1).
    """
    if p < 0 or q < 0:
        raise HilbertError("negative exponents")
    if s < max(p, q) + 2:
        raise HilbertError("divergent moment integral")
    if p != q:
        return Scalar.zero()
    num = math.factorial(p) * math.factorial(s - p - 2)
    den = math.factorial(s - 1)
    return Scalar.of(rat(num, den))


@dataclass
class HilbertModel:
    """Level k with the diagonal Gram data of the monomial basis."""

    k: int
    gram_diag: Tuple[RAT, ...]

    def gram(self, a: int) -> RAT:
        return self.gram_diag[a]


def gram(k: int) -> HilbertModel:
    """Exact Gram diagonal a!(k-a)!/(k+1)! of z^a e_{L^k}."""
    if k < 0:
        raise HilbertError("level must be non-negative")
    diag = []
    for a in range(k + 1):
        v = moment_integral(a, a, k + 2)
        diag.append(v.as_rational())
    return HilbertModel(k=k, gram_diag=tuple(diag))


class OperatorMatrix:
    """(k+1) x (k+1) matrix over Q(i)[pi, pi^-1] acting on H_k."""

    __slots__ = ("k", "entries", "tag")

    def __init__(self, k: int, entries: List[List[Scalar]], tag: str = ""):
        self.k = k
        self.entries = entries
        self.tag = tag

    @staticmethod
    def zero(k: int, tag: str = "") -> "OperatorMatrix":
        n = k + 1
        return OperatorMatrix(k, [[Scalar.zero()] * n for _ in range(n)], tag)

    @staticmethod
    def identity(k: int, tag: str = "id") -> "OperatorMatrix":
        n = k + 1
        return OperatorMatrix(
            k,
            [[Scalar.one() if i == j else Scalar.zero() for j in range(n)] for i in range(n)],
            tag,
        )

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(
            self.k,
            [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(self.entries, other.entries)],
            self.tag,
        )

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(
            self.k,
            [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(self.entries, other.entries)],
            self.tag,
        )

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        n = self.k + 1
        rows = self.entries
        cols = other.entries
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = Scalar.zero()
                for t in range(n):
                    a = rows[i][t]
                    if a.is_zero():
                        continue
                    b = cols[t][j]
                    if b.is_zero():
                        continue
                    acc = acc + a * b
                row.append(acc)
            out.append(row)
        return OperatorMatrix(self.k, out, self.tag)

    def scale(self, s: Scalar) -> "OperatorMatrix":
        return OperatorMatrix(self.k, [[e * s for e in row] for row in self.entries], self.tag)

    def commutator(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return (self @ other) - (other @ self)

    def is_zero(self) -> bool:
        return all(e.is_zero() for row in self.entries for e in row)

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, OperatorMatrix)
            and self.k == other.k
            and self.entries == other.entries
        )

    def __hash__(self):  # pragma: no cover
        return id(self)

    def is_diagonal(self) -> bool:
        return all(
            self.entries[i][j].is_zero()
            for i in range(self.k + 1)
            for j in range(self.k + 1)
            if i != j
        )

    def gram_selfadjoint(self, model: HilbertModel) -> bool:
        """gram * M == (gram * M)^dagger, the reality check for T_f, f real."""
        n = self.k + 1
        for i in range(n):
            for j in range(n):
                lhs = self.entries[i][j].mul_rat(model.gram(i))
                rhs = self.entries[j][i].mul_rat(model.gram(j)).conjugate()
                if lhs != rhs:
                    return False
        return True

    def to_numpy(self) -> np.ndarray:
        n = self.k + 1
        out = np.zeros((n, n), dtype=complex)
        for i in range(n):
            for j in range(n):
                out[i, j] = self.entries[i][j].to_complex()
        return out

    def spectral_norm(self) -> float:
        return float(np.linalg.norm(self.to_numpy(), 2))

    def entry_strings(self) -> List[List[str]]:
        return [[str(e) for e in row] for row in self.entries]

    def max_defect_string(self) -> str:
        """The largest-magnitude entry as an exact string (defect reporting)."""
        best = None
        best_mag = -1.0
        for row in self.entries:
            for e in row:
                mag = abs(e.to_complex())
                if mag > best_mag:
                    best_mag = mag
                    best = e
        return str(best) if best is not None else "0"


def _require_cp1(geom: KahlerGeometry) -> None:
    if geom.tag != "cp1-fs":
        raise HilbertError(
            "the exact Hilbert model is compact-only (cp1-fs); "
            "non-compact inputs are rejected"
        )


def _project(geom: KahlerGeometry, model: HilbertModel, psi: ChartFunction) -> List[Scalar]:
    """Coefficients of P_k(psi e) in the monomial basis, exactly."""
    k = model.k
    out = []
    for a in range(k + 1):
        acc = Scalar.zero()
        s = k + 2 + psi.dpow
        for (ze, be), c in psi.num.items():
            acc = acc + c * moment_integral(ze[0], be[0] + a, s)
        out.append(acc.mul_rat(1 / model.gram(a)))
    return out


def toeplitz(geom: KahlerGeometry, f: ChartFunction, k: int) -> OperatorMatrix:
    """T_{f,k} = P_k m_f on the monomial basis, exact."""
    _require_cp1(geom)
    model = gram(k)
    n = k + 1
    entries = [[Scalar.zero()] * n for _ in range(n)]
    for b in range(n):
        zb = geom.ring.func({((b,), (0,)): Scalar.one()}, 0)
        col = _project(geom, model, f * zb)
        for a in range(n):
            entries[a][b] = col[a]
    return OperatorMatrix(k, entries, tag=f"toeplitz[{f}]")


def nabla_operator(geom: KahlerGeometry, V: VectorField, k: int) -> OperatorMatrix:
    """P_k nabla^{(k)}_V on the monomial basis: nabla_V(z^b e) =
    (V(z^b) + k z^b iota_{V^{1,0}} d rho) e, then Gram projection."""
    _require_cp1(geom)
    model = gram(k)
    n = k + 1
    kconst = Scalar.of(k)
    entries = [[Scalar.zero()] * n for _ in range(n)]
    for b in range(n):
        zb = geom.ring.func({((b,), (0,)): Scalar.one()}, 0)
        psi = V.apply(zb)
        conn_part = geom.ring.zero()
        for i in range(geom.n):
            conn_part = conn_part + V.v_z[i] * geom.drho[i]
        psi = psi + (zb * conn_part).scale(kconst)
        col = _project(geom, model, psi)
        for a in range(n):
            entries[a][b] = col[a]
    return OperatorMatrix(k, entries, tag=f"nabla[k={k}]")


def beta_operator(geom: KahlerGeometry, V: VectorField, mu: ChartFunction, k: int) -> OperatorMatrix:
    """beta_k = nabla^{(k)}_V - 2 pi i k m_mu.

    For a Killing V with its equivariant moment map the non-polynomial parts
    cancel exactly and the matrix acts on holomorphic sections without any
    projection; failure of that cancellation is diagnosed as a wrong
    moment-map constant.
    """
    _require_cp1(geom)
    n = k + 1
    minus_2pik_i = Scalar.of(0, -2 * k, 1)  # -2 pi i k
    entries = [[Scalar.zero()] * n for _ in range(n)]
    for b in range(n):
        zb = geom.ring.func({((b,), (0,)): Scalar.one()}, 0)
        psi = V.apply(zb)
        conn_part = geom.ring.zero()
        for i in range(geom.n):
            conn_part = conn_part + V.v_z[i] * geom.drho[i]
        psi = psi + (zb * conn_part).scale(Scalar.of(k)) + (mu * zb).scale(minus_2pik_i)
        col = _holomorphic_coefficients(psi, k)
        if col is None:
            raise HilbertError(
                "not prequantizable normalization: rational parts failed to cancel"
            )
        for a in range(n):
            entries[a][b] = col[a]
    return OperatorMatrix(k, entries, tag=f"beta[k={k}]")


def _holomorphic_coefficients(psi: ChartFunction, k: int) -> Optional[List[Scalar]]:
    """psi as a z-polynomial of degree <= k, or None."""
    if psi.dpow != 0:
        return None
    out = [Scalar.zero()] * (k + 1)
    for (ze, be), c in psi.num.items():
        if be[0] != 0 or ze[0] > k:
            return None
        out[ze[0]] = out[ze[0]] + c
    return out


def bf_operator(geom: KahlerGeometry, section: WeylElement, k: int) -> OperatorMatrix:
    """Bargmann-Fock action of a level-k degree-1 section on H_k.

    Only three families of monomials reach the symbol:  the scalar part acts
    by multiplication, ybar^j through (-1/k) omega^{p jbar}(d_p + k d_p rho),
    and y^i ybar^j through (-1/k) omega^{i jbar}; everything with more y than
    ybar dies at y = 0.  The output is asserted holomorphic.
    """
    _require_cp1(geom)
    if section.level != rat(1, k):
        raise HilbertError("section is not evaluated at hbar = 1/k")
    if section.ybar_degree() > 1:
        raise HilbertError("out of scope: Bargmann-Fock action needs ybar degree <= 1")
    n1 = geom.n
    zerov = (0,) * n1
    s0 = section.coefficient((zerov, zerov, 0, (), ()))
    minus_inv_k = Scalar.of(rat(-1, k))
    n = k + 1
    entries = [[Scalar.zero()] * n for _ in range(n)]
    for b in range(n):
        zb = geom.ring.func({((b,), (0,)): Scalar.one()}, 0)
        out = s0 * zb
        for j in range(n1):
            yb = tuple(1 if t == j else 0 for t in range(n1))
            sj = section.coefficient((zerov, yb, 0, (), ()))
            if not sj.is_zero():
                acc = geom.ring.zero()
                for p in range(n1):
                    dzb = zb.diff_z(p) + (zb * geom.drho[p]).scale(Scalar.of(k))
                    acc = acc + geom.omega_up(p, j) * dzb
                out = out + (sj * acc).scale(minus_inv_k)
            for i in range(n1):
                y = tuple(1 if t == i else 0 for t in range(n1))
                sij = section.coefficient((y, yb, 0, (), ()))
                if not sij.is_zero():
                    out = out + (sij * geom.omega_up(i, j) * zb).scale(minus_inv_k)
        col = _holomorphic_coefficients(out, k)
        if col is None:
            raise HilbertError("Bargmann-Fock action left the holomorphic sections")
        for a in range(n):
            entries[a][b] = col[a]
    return OperatorMatrix(k, entries, tag=f"bf[k={k}]")


# -- identity suites --------------------------------------------------------


@dataclass
class IdentityRow:
    suite: str
    case: str
    passed: bool
    defect: str


def _beta_for(geom, action: LieAlgebraAction, a: int, k: int) -> OperatorMatrix:
    return beta_operator(geom, action.fields[a], action.moments[a], k)


def verify_identities(conn: FedosovConnection, action: LieAlgebraAction, k: int,
                      suites: Sequence[str] = ("tuynman", "diagram", "toeplitz-beta", "commutator", "su2"),
                      _cache: Optional[dict] = None) -> List[IdentityRow]:
    """Exact matrix verification of the compact-model operator identities.

    tuynman:        P_k nabla_{V_f} = (i/2) P_k m_{Delta f}          (per xi)
    diagram:        bf(O_{k mu_k(xi)}) = beta_k(xi)                  (per xi)
    toeplitz-beta:  T_{k mu_k(xi)} = beta_k(xi)                      (per xi)
    commutator:     [beta_k(xi3), T_{mu1}] = T_{V_xi3(mu1)}
    su2:            [beta_k(a), beta_k(b)] = beta_k([a, b])          (pairs)

    Failures become report rows, not exceptions.
    """
    geom = conn.geom
    _require_cp1(geom)
    rows: List[IdentityRow] = []
    cache = _cache if _cache is not None else {}

    def beta_cached(a: int) -> OperatorMatrix:
        key = ("beta", a, k)
        if key not in cache:
            cache[key] = _beta_for(geom, action, a, k)
        return cache[key]

    def add(suite: str, case: str, defect: OperatorMatrix) -> None:
        ok = defect.is_zero()
        rows.append(IdentityRow(suite, case, ok, "0" if ok else defect.max_defect_string()))

    for suite in suites:
        if suite == "tuynman":
            for a, label in enumerate(action.labels):
                lhs = nabla_operator(geom, action.fields[a], k)
                rhs = toeplitz(geom, laplacian(geom, action.moments[a]), k).scale(
                    Scalar.of(0, rat(1, 2))
                )
                add("tuynman", f"{label},k={k}", lhs - rhs)
        elif suite == "diagram":
            for a, label in enumerate(action.labels):
                key = ("quant", a)
                if key not in cache:
                    cache[key] = make_degree1(
                        conn, action.moments[a].scale(TWO_PI_OVER_I)
                    )
                q = cache[key]
                lev = evaluate_level(q, k)
                skmu = lev.element.scale(Scalar.of(k))
                lhs = bf_operator(geom, skmu, k)
                add("diagram", f"{label},k={k}", lhs - beta_cached(a))
        elif suite == "toeplitz-beta":
            for a, label in enumerate(action.labels):
                kmu_k = (
                    action.moments[a].scale(Scalar.of(k))
                    + laplacian(geom, action.moments[a]).scale(-ONE_OVER_4PI)
                ).scale(TWO_PI_OVER_I)
                lhs = toeplitz(geom, kmu_k, k)
                add("toeplitz-beta", f"{label},k={k}", lhs - beta_cached(a))
        elif suite == "commutator":
            lhs = beta_cached(2).commutator(toeplitz(geom, action.moments[0], k))
            rhs = toeplitz(geom, action.fields[2].apply(action.moments[0]), k)
            add("commutator", f"xi3,mu1,k={k}", lhs - rhs)
        elif suite == "su2":
            dim = len(action.labels)
            for a in range(dim):
                for b in range(a + 1, dim):
                    lhs = beta_cached(a).commutator(beta_cached(b))
                    rhs = OperatorMatrix.zero(k)
                    for d, cc in action.bracket_coeffs(a, b).items():
                        rhs = rhs + beta_cached(d).scale(Scalar.of(cc))
                    add("su2", f"[{action.labels[a]},{action.labels[b]}],k={k}", lhs - rhs)
        else:
            raise HilbertError(f"unknown identity suite: {suite}")
    return rows


# -- Berezin-Toeplitz asymptotics -------------------------------------------


@dataclass
class AsymptoticReport:
    levels: Tuple[int, ...]
    errors: Dict[int, float]
    slope: Optional[float]
    order: int


def bt_asymptotic_slope(conn: FedosovConnection, f: ChartFunction, g: ChartFunction,
                        levels: Sequence[int], order: int = 0) -> AsymptoticReport:
    """Spectral-norm decay of T_f T_g - sum_{i<=order} k^{-i} T_{C_i(f,g)}.

    The defect matrices are exact; only the norm and the least-squares
    log-log slope are floating point.
    """
    geom = conn.geom
    _require_cp1(geom)
    levels = tuple(levels)
    if len(levels) < 3:
        raise HilbertError("need at least 3 levels for a slope fit")
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise HilbertError("levels must be strictly increasing")
    if order > conn.N // 2:
        raise HilbertError("star expansion not available to this order")
    expansion = star_product(conn, f, g)
    errors: Dict[int, float] = {}
    for k in levels:
        tf = toeplitz(geom, f, k)
        tg = toeplitz(geom, g, k)
        defect = tf @ tg
        for i in range(order + 1):
            ci = expansion.coeff(i)
            if ci.is_zero():
                continue
            term = toeplitz(geom, ci, k).scale(Scalar.of(rat(1, k**i)))
            defect = defect - term
        errors[k] = defect.spectral_norm()
    if all(e == 0.0 for e in errors.values()):
        return AsymptoticReport(levels, errors, None, order)
    xs = np.log(np.array(levels, dtype=float))
    ys = np.log(np.array([max(errors[k], 1e-300) for k in levels]))
    slope = float(np.polyfit(xs, ys, 1)[0])
    return AsymptoticReport(levels, errors, slope, order)
