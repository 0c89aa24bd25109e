"""Chart geometry providers and the classical operations.

Convention anchors (all exact): Delta(z zbar) = 4pi on the flat chart,
V_z = (2pi/sqrt(-1)) * (-1) * d/dzbar there (omega^{1 1bar} = -1), and on
the Fubini-Study chart Ric_{1 1bar} = 2 (1+z zbar)^{-2}.  Note that with
these conventions {z, zbar} = 2 pi i exactly, so (i/2pi){z, zbar} = -1; the
sign is pinned by C_1(f,g) - C_1(g,f) = (i/2pi){f,g} against the Wick
product (see test_fedosov).
"""

import pytest
from hypothesis import given, settings, strategies as st

from fedosov_lab.scalars import Scalar, rat
from fedosov_lab.geometry import (
    GeometryError,
    VectorField,
    hamiltonian_vf,
    laplacian,
    lie_compat,
    make_geometry,
    poisson,
    su2_action,
)

I_OVER_2PI = Scalar.of(0, rat(1, 2), -1)
FOUR_PI = Scalar.of(4, 0, 1)


def fs_h(cp1):
    """zzb / (1 + zzb)."""
    return cp1.ring.func({((1,), (1,)): Scalar.one()}, 1)


def test_flat_provider(flat):
    assert flat.omega_lower[0][0] == flat.ring.one()
    assert flat.christoffel[0][0][0].is_zero()
    assert flat.ricci[0][0].is_zero()
    assert flat.curvature[0][0][0][0].is_zero()


def test_cp1_provider(cp1):
    ring = cp1.ring
    assert cp1.omega_lower[0][0] == ring.func({((0,), (0,)): Scalar.one()}, 2)
    # Ric_{1 1bar} = 2 (1+zzb)^-2, the independent oracle -d d log det(omega)
    log_der = cp1.omega_lower[0][0].diff_z(0) * cp1.omega_inv[0][0]
    oracle = -(log_der.diff_zbar(0))
    assert cp1.ricci[0][0] == oracle
    assert cp1.ricci[0][0] == ring.func({((0,), (0,)): Scalar.of(2)}, 2)
    assert cp1.ricci_form_closed()


def test_metric_compatibility(cp1):
    # d_k omega_{i jbar} = Gamma^m_{ki} omega_{m jbar}
    lhs = cp1.omega_lower[0][0].diff_z(0)
    rhs = cp1.christoffel[0][0][0] * cp1.omega_lower[0][0]
    assert lhs == rhs


def test_unsupported_spec():
    with pytest.raises(GeometryError):
        make_geometry("torus")


def test_laplacian_examples(flat, cp1):
    z, zb = flat.ring.var_z(), flat.ring.var_zbar()
    assert laplacian(flat, z * zb) == flat.ring.const(FOUR_PI)
    h = fs_h(cp1)
    # 4pi (1 - zzb)/(1 + zzb)
    expected = cp1.ring.func(
        {((0,), (0,)): FOUR_PI, ((1,), (1,)): -FOUR_PI}, 1
    )
    assert laplacian(cp1, h) == expected
    assert laplacian(cp1, cp1.ring.const(Scalar.of(5, 2))).is_zero()


def test_hamiltonian_field_flat(flat):
    z = flat.ring.var_z()
    V = hamiltonian_vf(flat, z)
    # V = (2pi/i) * (-1) * d/dzbar  (omega^{1 1bar} = -1)
    assert V.v_z[0].is_zero()
    assert V.v_zbar[0] == flat.ring.const(Scalar.of(0, 2, 1))  # 2 pi i
    # iota_V omega = df replay through poisson: {z, zbar} = V_z(zbar)
    pb = poisson(flat, z, flat.ring.var_zbar())
    assert pb == flat.ring.const(Scalar.of(0, 2, 1))
    assert pb.scale(I_OVER_2PI) == flat.ring.const(Scalar.of(-1))


def test_poisson_antisymmetry_and_derivation(flat):
    ring = flat.ring
    z, zb = ring.var_z(), ring.var_zbar()
    f = z * z * zb
    g = z + zb * zb
    h = z * zb
    assert poisson(flat, f, f).is_zero()
    assert poisson(flat, f, g) == -poisson(flat, g, f)
    lhs = poisson(flat, f, g * h)
    rhs = poisson(flat, f, g) * h + g * poisson(flat, f, h)
    assert lhs == rhs


@settings(max_examples=15, deadline=None)
@given(st.data())
def test_poisson_jacobi(cp1, data):
    ring = cp1.ring
    def draw_cf():
        terms = {}
        for _ in range(data.draw(st.integers(1, 2))):
            a = data.draw(st.integers(0, 1))
            b = data.draw(st.integers(0, 1))
            c = data.draw(st.integers(-2, 2))
            if c:
                terms[((a,), (b,))] = Scalar.of(c)
        return ring.func(terms, data.draw(st.integers(0, 1)))
    f, g, h = draw_cf(), draw_cf(), draw_cf()
    total = (
        poisson(cp1, f, poisson(cp1, g, h))
        + poisson(cp1, g, poisson(cp1, h, f))
        + poisson(cp1, h, poisson(cp1, f, g))
    )
    assert total.is_zero()


def test_hamiltonian_homomorphism(cp1, su2):
    # V_{{f,g}} = [V_f, V_g] on the moment maps
    mu1, mu2, _ = su2.moments
    lhs = hamiltonian_vf(cp1, poisson(cp1, mu1, mu2))
    rhs = su2.fields[0].commutator(su2.fields[1])
    assert lhs.v_z[0] == rhs.v_z[0] and lhs.v_zbar[0] == rhs.v_zbar[0]


def test_lie_compat(flat, cp1):
    ring = cp1.ring
    rot = VectorField(
        cp1,
        (ring.var_z().scale(Scalar.i()),),
        (ring.var_zbar().scale(Scalar.of(0, -1)),),
    )
    flags = lie_compat(cp1, rot)
    assert flags == {"preserves_omega": True, "preserves_J": True}
    dil = VectorField(flat, (flat.ring.var_z(),), (flat.ring.var_zbar(),))
    flags = lie_compat(flat, dil)
    assert flags == {"preserves_omega": False, "preserves_J": True}
    zero = VectorField(flat, (flat.ring.zero(),), (flat.ring.zero(),))
    assert lie_compat(flat, zero) == {"preserves_omega": True, "preserves_J": True}


def test_j_preservation_equivalence(cp1, su2):
    """d-bar(omega^{i jbar} d_jbar f) = 0  <=>  lie_compat(V_f).preserves_J,
    for real f (the derivation criterion reduced to components)."""
    h = fs_h(cp1)
    z, zb = cp1.ring.var_z(), cp1.ring.var_zbar()
    battery = [su2.moments[0], su2.moments[2], h, (z * z + zb * zb) * z * zb, z * zb * z * zb]
    for f in battery:
        assert f.conjugate() == f  # test inputs are real
        comp = cp1.omega_up(0, 0) * f.diff_zbar(0)
        direct = comp.diff_zbar(0).is_zero()
        via_field = lie_compat(cp1, hamiltonian_vf(cp1, f))["preserves_J"]
        assert direct == via_field


def test_su2_action(cp1, su2):
    ring = cp1.ring
    mu3 = su2.moments[2]
    # mu3 = -(1/2pi) zzb/(1+zzb) + 1/(4pi), i.e. (1/4pi)(1-zzb)/(1+zzb)
    expected = ring.func(
        {((0,), (0,)): Scalar.of(rat(1, 4), 0, -1), ((1,), (1,)): Scalar.of(rat(-1, 4), 0, -1)},
        1,
    )
    assert mu3 == expected
    # rotation field
    v3 = su2.fields[2]
    assert v3.v_z[0] == ring.var_z().scale(Scalar.i())
    assert v3.is_real()
    # iota_{V_a} omega = d mu_a replay: poisson(mu_a, g) = V_a(g)
    g = fs_h(cp1)
    for a in range(3):
        assert poisson(cp1, su2.moments[a], g) == su2.fields[a].apply(g)
    # structure constants: {mu_a, mu_b} = -eps_{abc} mu_c
    assert poisson(cp1, su2.moments[0], su2.moments[1]) == -su2.moments[2]
    # all fields Killing
    for V in su2.fields:
        assert lie_compat(cp1, V) == {"preserves_omega": True, "preserves_J": True}


def test_su2_laplacian_eigenvalue(cp1, su2):
    """Delta mu_a = -8 pi (mu_a - mean); the moments are centered so the
    mean term vanishes."""
    minus_8pi = Scalar.of(-8, 0, 1)
    for mu in su2.moments:
        assert laplacian(cp1, mu) == mu.scale(minus_8pi)


def test_su2_requires_cp1(flat):
    with pytest.raises(GeometryError):
        su2_action(flat)


def test_curvature_symmetries(cp1):
    # Gamma symmetric in lower indices is structural for n=1; check the
    # Kähler symmetry of the curvature tensor on a 2d jet chart instead.
    pot = {
        ((1, 0), (1, 0)): Scalar.of(-1),
        ((0, 1), (0, 1)): Scalar.of(-1),
        ((1, 1), (1, 1)): Scalar.of(-1),
        ((2, 0), (0, 2)): Scalar.of(rat(-1, 2)),
        ((0, 2), (2, 0)): Scalar.of(rat(-1, 2)),
    }
    g = make_geometry("jet", potential=pot, order=6)
    n = 2
    for k in range(n):
        for i in range(n):
            for j in range(n):
                assert g.christoffel[k][i][j] == g.christoffel[k][j][i]
    for j in range(n):
        for q in range(n):
            for i in range(n):
                for l in range(n):
                    assert g.curvature[j][q][i][l] == g.curvature[i][q][j][l]
                    assert g.curvature[j][q][i][l] == g.curvature[j][l][i][q]


def test_jet_reproduces_flat():
    pot = {((1,), (1,)): Scalar.of(-1)}
    g = make_geometry("jet", potential=pot, order=4)
    assert g.omega_lower[0][0].is_constant()
    assert g.omega_lower[0][0].constant_value() == Scalar.one()
    assert g.christoffel[0][0][0].is_zero()
    assert g.ricci[0][0].is_zero()
    f = g.ring.var_z() * g.ring.var_zbar()
    assert laplacian(g, f).constant_term() == Scalar.of(4, 0, 1)


def test_jet_matches_fs_expansion(cp1):
    # rho = -log(1+zzb) truncated: tensors must match the closed forms
    pot = {
        ((1,), (1,)): Scalar.of(-1),
        ((2,), (2,)): Scalar.of(rat(1, 2)),
        ((3,), (3,)): Scalar.of(rat(-1, 3)),
    }
    g = make_geometry("jet", potential=pot, order=6)
    gamma_jet = g.christoffel[0][0][0]
    # closed form -2 zbar/(1+zzb) = -2 zbar + 2 z zbar^2 - ...
    assert gamma_jet.terms[((0,), (1,))] == Scalar.of(-2)
    assert gamma_jet.terms[((1,), (2,))] == Scalar.of(2)
    ric_jet = g.ricci[0][0]
    assert ric_jet.terms[((0,), (0,))] == Scalar.of(2)
    assert ric_jet.terms[((1,), (1,))] == Scalar.of(-4)


def test_jet_requirements():
    with pytest.raises(GeometryError):
        make_geometry("jet", potential={((1,), (1,)): Scalar.of(-1)}, order=1)
    with pytest.raises(GeometryError):
        # not hermitian (complex potential)
        make_geometry("jet", potential={((1,), (1,)): Scalar.of(0, 1)}, order=4)
    with pytest.raises(GeometryError):
        # degenerate (1,1) Hessian
        make_geometry("jet", potential={((2,), (2,)): Scalar.of(-1)}, order=4)
