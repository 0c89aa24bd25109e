"""Exact Kähler chart data: metric, curvature, Hamiltonian fields, su(2).

Conventions implemented here (and relied on by every other module):

* omega = (i/2pi) * omega_{i jbar} dz^i ^ dzbar^j, with
  omega_{i jbar} omega^{jbar k} = delta_i^k  and  omega^{i jbar} = -omega^{jbar i}.
* The potential satisfies  d^2 rho / dzbar^j dz^i = -omega_{i jbar}; only the
  derivatives of rho are ever materialised (on the Fubini-Study chart rho
  itself is -log D, which is not in the coefficient ring).
* Hamiltonian fields:  V_f = (2pi/i) (df/dz^i omega^{i jbar} d/dzbar^j
  + df/dzbar^j omega^{jbar i} d/dz^i),  so iota_{V_f} omega = df exactly.
* Poisson bracket {f,g} = -omega(V_f, V_g) = V_f(g).
* Laplacian Delta = 4pi omega^{jbar i} d/dzbar^j d/dz^i (positive on C^n).
* Christoffels Gamma^k_{ij} = omega^{lbar k} d_i omega_{j lbar}; the Ricci
  form components are Ric_{k lbar} = -d_lbar Gamma^i_{ik}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .scalars import RAT, Scalar, rat
from .rings import (
    ChartFunction,
    JetChartRing,
    JetFunction,
    PolyTerms,
    RationalChartRing,
    poly_diff_z,
    poly_diff_zbar,
)

# (i/2pi) and (2pi/i): the two ends of the symplectic normalisation.
I_OVER_2PI = Scalar.of(0, rat(1, 2), -1)
TWO_PI_OVER_I = Scalar.of(0, -2, 1)
ONE_OVER_4PI = Scalar.of(rat(1, 4), 0, -1)
FOUR_PI = Scalar.of(4, 0, 1)


class GeometryError(ValueError):
    pass


@dataclass
class VectorField:
    """V = V^i d/dz^i + V^ibar d/dzbar^i with chart-function components."""

    geom: "KahlerGeometry"
    v_z: tuple
    v_zbar: tuple

    def is_real(self) -> bool:
        return all(
            self.v_z[i].conjugate() == self.v_zbar[i] for i in range(self.geom.n)
        )

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.v_z) and all(
            c.is_zero() for c in self.v_zbar
        )

    def apply(self, f):
        """Directional derivative V(f)."""
        out = self.geom.ring.zero()
        for i in range(self.geom.n):
            out = out + self.v_z[i] * f.diff_z(i)
            out = out + self.v_zbar[i] * f.diff_zbar(i)
        return out

    def scale(self, s: Scalar) -> "VectorField":
        return VectorField(
            self.geom,
            tuple(c.scale(s) for c in self.v_z),
            tuple(c.scale(s) for c in self.v_zbar),
        )

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(
            self.geom,
            tuple(a + b for a, b in zip(self.v_z, other.v_z)),
            tuple(a + b for a, b in zip(self.v_zbar, other.v_zbar)),
        )

    def __sub__(self, other: "VectorField") -> "VectorField":
        return self + other.scale(Scalar.of(-1))

    def commutator(self, other: "VectorField") -> "VectorField":
        """[V, W] acting on functions."""
        g = self.geom
        vz, vb = [], []
        for i in range(g.n):
            vz.append(self.apply(other.v_z[i]) - other.apply(self.v_z[i]))
            vb.append(self.apply(other.v_zbar[i]) - other.apply(self.v_zbar[i]))
        return VectorField(g, tuple(vz), tuple(vb))


class KahlerGeometry:
    """All derived tensors of one exact Kähler chart.

    Index conventions on the stored tables:
      omega_lower[i][j]   = omega_{i jbar}
      omega_inv[j][i]     = omega^{jbar i}   (true matrix inverse)
      christoffel[k][i][j]= Gamma^k_{ij}     (symmetric in i, j)
      ricci[k][l]         = Ric_{k lbar}
      curvature[j][q][i][l] = rho_{j qbar i lbar} = omega_{m qbar} d_lbar Gamma^m_{ij},
        the tensor of the Weyl curvature element
        R_nabla = rho_{j qbar i lbar} y^j ybar^q dz^i ^ dzbar^l
        satisfying  nabla^2 = (1/hbar)[R_nabla, -]  on the Weyl bundle.
      drho[i]             = d rho / dz^i
    """

    def __init__(self, tag: str, ring, omega_lower, drho):
        self.tag = tag
        self.ring = ring
        self.n = ring.n
        self.omega_lower = omega_lower
        self.drho = drho
        self.omega_inv = _invert_matrix(ring, omega_lower)
        self._check_hermitian()
        n = self.n
        # Gamma^k_{ij} = sum_l d_i omega_{j lbar} * omega^{lbar k}
        self.christoffel = [
            [
                [
                    _msum(
                        ring,
                        (
                            self.omega_lower[j][l].diff_z(i) * self.omega_inv[l][k]
                            for l in range(n)
                        ),
                    )
                    for j in range(n)
                ]
                for i in range(n)
            ]
            for k in range(n)
        ]
        self.christoffel_bar = [
            [[self.christoffel[k][i][j].conjugate() for j in range(n)] for i in range(n)]
            for k in range(n)
        ]
        # Ric_{k lbar} = -d_lbar (Gamma^i_{ik})
        self.ricci = [
            [
                -_msum(ring, (self.christoffel[i][i][k] for i in range(n))).diff_zbar(l)
                for l in range(n)
            ]
            for k in range(n)
        ]
        # rho_{j qbar i lbar} = sum_m omega_{m qbar} d_lbar Gamma^m_{ij}
        self.curvature = [
            [
                [
                    [
                        _msum(
                            ring,
                            (
                                self.omega_lower[m][q]
                                * self.christoffel[m][i][j].diff_zbar(l)
                                for m in range(n)
                            ),
                        )
                        for l in range(n)
                    ]
                    for i in range(n)
                ]
                for q in range(n)
            ]
            for j in range(n)
        ]

    # -- convention accessors ------------------------------------------

    def omega_up(self, i: int, j: int):
        """omega^{i jbar} = -omega^{jbar i}."""
        return -self.omega_inv[j][i]

    def omega_upbar(self, j: int, i: int):
        """omega^{jbar i}."""
        return self.omega_inv[j][i]

    @property
    def is_flat(self) -> bool:
        return all(
            all(c.is_zero() for c in row2)
            for row in self.christoffel
            for row2 in row
        )

    # -- invariants ------------------------------------------------------

    def _check_hermitian(self) -> None:
        n = self.n
        for i in range(n):
            for j in range(n):
                if self.omega_lower[i][j].conjugate() != self.omega_lower[j][i]:
                    raise GeometryError("non-Kähler input: metric is not hermitian")
        for i in range(n):
            for k in range(n):
                expect = self.ring.one() if i == k else self.ring.zero()
                got = _msum(
                    self.ring,
                    (self.omega_lower[i][j] * self.omega_inv[j][k] for j in range(n)),
                )
                if got != expect:
                    raise GeometryError("metric inverse failed exactness check")

    def ricci_form_closed(self) -> bool:
        """d(Ric) = 0, checked componentwise."""
        n = self.n
        for k in range(n):
            for l in range(n):
                for m in range(n):
                    if self.ricci[k][l].diff_z(m) != self.ricci[m][l].diff_z(k):
                        return False
                    if self.ricci[k][l].diff_zbar(m) != self.ricci[k][m].diff_zbar(l):
                        return False
        return True


def _msum(ring, items):
    out = ring.zero()
    for x in items:
        out = out + x
    return out


def _invert_matrix(ring, mat):
    """Exact inverse of a matrix of chart functions.

    Rational mode handles the 1x1 case by direct reciprocal of a monomial
    times D-power (all shipped providers); jet mode uses a Neumann series
    around the constant-term matrix.
    """
    n = ring.n
    if ring.mode == "rational":
        if n == 1:
            f = mat[0][0]
            inv = _reciprocal_rational(ring, f)
            return [[inv]]
        # General n by adjugate over the fraction field: supported only when
        # the determinant is a monomial times a D-power.
        det = _determinant(ring, mat)
        det_inv = _reciprocal_rational(ring, det)
        adj = _adjugate(ring, mat)
        return [[adj[i][j] * det_inv for j in range(n)] for i in range(n)]
    # jet mode
    const = []
    for i in range(n):
        row = []
        for j in range(n):
            row.append(mat[i][j].constant_term())
        const.append(row)
    try:
        cinv = _scalar_matrix_inverse(const)
    except ZeroDivisionError:
        raise GeometryError("non-Kähler input: degenerate metric jet")
    prec = min(mat[i][j].prec for i in range(n) for j in range(n))
    ident = [[ring.const(Scalar.one() if i == j else Scalar.zero()) for j in range(n)] for i in range(n)]
    cinv_f = [[ring.const(cinv[i][j]) for j in range(n)] for i in range(n)]
    nmat = _mat_sub(_mat_mul(ring, cinv_f, mat), ident)
    out = [[ident[i][j] for j in range(n)] for i in range(n)]
    power = ident
    for _ in range(prec):
        power = _mat_mul(ring, [[-nmat[i][j] for j in range(n)] for i in range(n)], power)
        out = _mat_add(out, power)
    return _mat_mul(ring, out, cinv_f)


def _reciprocal_rational(ring, f: ChartFunction) -> ChartFunction:
    """1/f when f = c * D^a / D^b; the only shape the providers produce."""
    from .rings import poly_divide_exact

    if f.is_zero():
        raise GeometryError("non-Kähler input: degenerate metric")
    m = 0
    num = f.num
    while not ring.is_trivial_denom:
        q = poly_divide_exact(num, ring.denominator)
        if q is None:
            break
        num = q
        m += 1
    if len(num) == 1:
        ((ze, be), c), = num.items()
        if sum(ze) == 0 and sum(be) == 0:
            return ring.func(dict(ring.d_power(f.dpow)), m).scale(c.inverse())
    raise GeometryError("metric not invertible inside the chart ring")


def _determinant(ring, mat):
    n = ring.n
    if n == 1:
        return mat[0][0]
    if n == 2:
        return mat[0][0] * mat[1][1] - mat[0][1] * mat[1][0]
    out = ring.zero()
    for j in range(n):
        minor = [[mat[i][k] for k in range(n) if k != j] for i in range(1, n)]
        sub = _determinant_list(ring, minor)
        term = mat[0][j] * sub
        out = out + (term if j % 2 == 0 else -term)
    return out


def _determinant_list(ring, mat):
    m = len(mat)
    if m == 1:
        return mat[0][0]
    out = ring.zero()
    for j in range(m):
        minor = [[mat[i][k] for k in range(m) if k != j] for i in range(1, m)]
        sub = _determinant_list(ring, minor)
        term = mat[0][j] * sub
        out = out + (term if j % 2 == 0 else -term)
    return out


def _adjugate(ring, mat):
    n = ring.n
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [
                [mat[r][c] for c in range(n) if c != j]
                for r in range(n)
                if r != i
            ]
            cof = _determinant_list(ring, minor) if minor else ring.one()
            out[j][i] = cof if (i + j) % 2 == 0 else -cof
    return out


def _mat_mul(ring, a, b):
    n = len(a)
    return [
        [_msum(ring, (a[i][k] * b[k][j] for k in range(n))) for j in range(n)]
        for i in range(n)
    ]


def _mat_add(a, b):
    return [[x + y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def _mat_sub(a, b):
    return [[x - y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def _scalar_matrix_inverse(mat: List[List[Scalar]]) -> List[List[Scalar]]:
    """Gauss-Jordan over the scalar field (pivot must be invertible)."""
    n = len(mat)
    aug = [[mat[i][j] for j in range(n)] + [Scalar.one() if i == j else Scalar.zero() for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = None
        for r in range(col, n):
            if not aug[r][col].is_zero():
                piv = r
                break
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        aug[col], aug[piv] = aug[piv], aug[col]
        pinv = aug[col][col].inverse()
        aug[col] = [x * pinv for x in aug[col]]
        for r in range(n):
            if r != col and not aug[r][col].is_zero():
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


# -- providers ----------------------------------------------------------


def make_geometry(spec, *, potential: Optional[PolyTerms] = None, order: int = 0) -> KahlerGeometry:
    """Build a chart geometry.

    spec: "flat:<n>" (or ("flat", n)), "cp1-fs", or "jet" with a potential
    given as sparse polynomial terms plus a truncation order.
    """
    if isinstance(spec, tuple):
        kind, arg = spec[0], (spec[1] if len(spec) > 1 else None)
    else:
        kind, _, arg = str(spec).partition(":")
        arg = arg or None
    kind = kind.replace("_", "-")
    if kind == "flat":
        n = int(arg) if arg else 1
        ring = RationalChartRing(n)
        one = ring.one()
        zero = ring.zero()
        omega = [[one if i == j else zero for j in range(n)] for i in range(n)]
        drho = tuple(-ring.var_zbar(i) for i in range(n))
        return KahlerGeometry(f"flat:{n}", ring, omega, drho)
    if kind in ("cp1-fs", "cp1fs", "cp1"):
        ring = RationalChartRing(1, _fs_denominator())
        omega = [[ring.func({((0,), (0,)): Scalar.one()}, 2)]]
        drho = (ring.func({((0,), (1,)): Scalar.of(-1)}, 1),)
        return KahlerGeometry("cp1-fs", ring, omega, drho)
    if kind == "jet":
        if potential is None:
            raise GeometryError("jet geometry needs a potential")
        if order < 2:
            raise GeometryError("jet order must be at least 2")
        ring = JetChartRing(_potential_nvars(potential), order)
        rho = ring.func(potential)
        if rho.conjugate() != rho:
            raise GeometryError("non-Kähler input: potential is not real")
        n = ring.n
        omega = [
            [-(rho.diff_z(i).diff_zbar(j)) for j in range(n)] for i in range(n)
        ]
        drho = tuple(rho.diff_z(i) for i in range(n))
        return KahlerGeometry(f"jet:{order}", ring, omega, drho)
    raise GeometryError(f"unsupported geometry spec: {spec!r}")


def _fs_denominator() -> PolyTerms:
    return {
        ((0,), (0,)): Scalar.one(),
        ((1,), (1,)): Scalar.one(),
    }


def _potential_nvars(potential: PolyTerms) -> int:
    for (ze, be) in potential:
        return len(ze)
    return 1


# -- chart operations -----------------------------------------------------


def laplacian(geom: KahlerGeometry, f):
    """Delta f = 4pi omega^{jbar i} d_jbar d_i f."""
    out = geom.ring.zero()
    for i in range(geom.n):
        for j in range(geom.n):
            out = out + geom.omega_inv[j][i] * f.diff_z(i).diff_zbar(j)
    return out.scale(FOUR_PI)


def hamiltonian_vf(geom: KahlerGeometry, f) -> VectorField:
    """The field with iota_V omega = df, in the paper's normalisation."""
    n = geom.n
    vz, vb = [], []
    for i in range(n):
        acc = geom.ring.zero()
        for j in range(n):
            acc = acc + geom.omega_inv[j][i] * f.diff_zbar(j)
        vz.append(acc.scale(TWO_PI_OVER_I))
    for j in range(n):
        acc = geom.ring.zero()
        for i in range(n):
            acc = acc + geom.omega_inv[j][i] * f.diff_z(i)
        vb.append(acc.scale(-TWO_PI_OVER_I))
    return VectorField(geom, tuple(vz), tuple(vb))


def poisson(geom: KahlerGeometry, f, g):
    """{f, g} = -omega(V_f, V_g) = V_f(g)."""
    return hamiltonian_vf(geom, f).apply(g)


def iota_omega(geom: KahlerGeometry, V: VectorField):
    """Components of iota_V omega: returns (lambda_i list, lambda_jbar list)."""
    n = geom.n
    lam_z = []
    lam_zbar = []
    for i in range(n):
        acc = geom.ring.zero()
        for j in range(n):
            acc = acc + geom.omega_lower[i][j] * V.v_zbar[j]
        lam_z.append(acc.scale(-I_OVER_2PI))
    for j in range(n):
        acc = geom.ring.zero()
        for i in range(n):
            acc = acc + geom.omega_lower[i][j] * V.v_z[i]
        lam_zbar.append(acc.scale(I_OVER_2PI))
    return lam_z, lam_zbar


def _one_form_closed(geom, lam_z, lam_zbar) -> bool:
    n = geom.n
    for k in range(n):
        for l in range(n):
            if k < l and lam_z[l].diff_z(k) != lam_z[k].diff_z(l):
                return False
            if lam_zbar[l].diff_z(k) != lam_z[k].diff_zbar(l):
                return False
            if k < l and lam_zbar[l].diff_zbar(k) != lam_zbar[k].diff_zbar(l):
                return False
    return True


def lie_compat(geom: KahlerGeometry, V: VectorField) -> Dict[str, bool]:
    """Does V preserve the symplectic form / the complex structure?

    L_V omega = d(iota_V omega) since omega is closed; L_V J = 0 iff the
    component functions V^i are holomorphic and V^ibar anti-holomorphic.
    """
    preserves_j = all(
        all(V.v_z[i].diff_zbar(j).is_zero() for j in range(geom.n))
        for i in range(geom.n)
    ) and all(
        all(V.v_zbar[i].diff_z(j).is_zero() for j in range(geom.n))
        for i in range(geom.n)
    )
    lam_z, lam_zbar = iota_omega(geom, V)
    preserves_omega = _one_form_closed(geom, lam_z, lam_zbar)
    return {"preserves_omega": preserves_omega, "preserves_J": preserves_j}


def lie_ricci_vanishes(geom: KahlerGeometry, V: VectorField) -> bool:
    """L_V(Ric form) = d(iota_V Ric) = 0, componentwise and exact."""
    n = geom.n
    lam_z = [
        _msum(geom.ring, (geom.ricci[i][j].scale(Scalar.of(-1)) * V.v_zbar[j] for j in range(n)))
        for i in range(n)
    ]
    lam_zbar = [
        _msum(geom.ring, (geom.ricci[i][j] * V.v_z[i] for i in range(n)))
        for j in range(n)
    ]
    return _one_form_closed(geom, lam_z, lam_zbar)


# -- su(2) on the Fubini-Study chart --------------------------------------


@dataclass
class LieAlgebraAction:
    """Concrete Lie algebra of Hamiltonian Killing fields with moment maps."""

    geom: KahlerGeometry
    labels: Tuple[str, ...]
    fields: Tuple[VectorField, ...]
    moments: tuple
    structure: Dict[Tuple[int, int], Dict[int, RAT]] = field(default_factory=dict)

    def bracket_coeffs(self, a: int, b: int) -> Dict[int, RAT]:
        """Coefficients of [xi_a, xi_b] in the basis."""
        if a == b:
            return {}
        if (a, b) in self.structure:
            return self.structure[(a, b)]
        return {d: -c for d, c in self.structure.get((b, a), {}).items()}

    def bracket_moment(self, a: int, b: int):
        out = self.geom.ring.zero()
        for d, c in self.bracket_coeffs(a, b).items():
            out = out + self.moments[d].scale(Scalar.of(c))
        return out

    def bracket_field(self, a: int, b: int) -> VectorField:
        zero = self.geom.ring.zero()
        out = VectorField(self.geom, (zero,) * self.geom.n, (zero,) * self.geom.n)
        for d, c in self.bracket_coeffs(a, b).items():
            out = out + self.fields[d].scale(Scalar.of(c))
        return out


def su2_action(geom: KahlerGeometry) -> LieAlgebraAction:
    """The rotation su(2) on CP^1 with its equivariant (mean-zero) moment
    maps mu_a = n_a / 4pi, n_a the unit-sphere coordinate functions.

    With this normalisation {mu_a, mu_b} = -eps_{abc} mu_c exactly, so the
    structure constants are [xi_a, xi_b] = -eps_{abc} xi_c.
    """
    if geom.tag != "cp1-fs":
        raise GeometryError("su2_action requires the cp1-fs geometry")
    ring = geom.ring
    one = Scalar.one()
    n1 = ring.func({((1,), (0,)): one, ((0,), (1,)): one}, 1)
    n2 = ring.func({((1,), (0,)): Scalar.of(0, -1), ((0,), (1,)): Scalar.of(0, 1)}, 1)
    n3 = ring.func({((0,), (0,)): one, ((1,), (1,)): Scalar.of(-1)}, 1)
    moments = tuple(f.scale(ONE_OVER_4PI) for f in (n1, n2, n3))
    fields = tuple(hamiltonian_vf(geom, mu) for mu in moments)
    minus1 = rat(-1)
    structure = {(0, 1): {2: minus1}, (1, 2): {0: minus1}, (2, 0): {1: minus1}}
    action = LieAlgebraAction(geom, ("xi1", "xi2", "xi3"), fields, moments, structure)
    for a in range(3):
        for b in range(3):
            if a == b:
                continue
            assert poisson(geom, moments[a], moments[b]) == action.bracket_moment(a, b), (
                "su(2) structure constants are inconsistent"
            )
    for a, b in ((0, 1), (1, 2), (2, 0)):
        got = fields[a].commutator(fields[b])
        want = action.bracket_field(a, b)
        assert all(got.v_z[i] == want.v_z[i] for i in range(geom.n)), (
            "su(2) fields do not close"
        )
        assert all(got.v_zbar[i] == want.v_zbar[i] for i in range(geom.n))
    return action
