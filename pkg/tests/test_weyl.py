"""Weyl algebra: Wick product, delta calculus, covariant derivative."""

import random

import pytest

from fedosov_lab.scalars import Scalar, rat
from fedosov_lab.weyl import (
    WeylElement,
    bracket_over_hbar,
    curvature_element,
    delta,
    delta10_inv,
    delta_inv,
    divide_hbar,
    gamma_delta_element,
    graded_commutator,
    iota_weyl,
    lie_weyl,
    nabla_weyl,
    substitute_hbar,
    sym_projection,
    symbol,
    weight,
    wick_product,
)
from fedosov_lab.geometry import VectorField

N = 7


def gens(geom):
    y = WeylElement.generator(geom, N, "y")
    yb = WeylElement.generator(geom, N, "ybar")
    dz = WeylElement.generator(geom, N, "dz")
    dzb = WeylElement.generator(geom, N, "dzbar")
    return y, yb, dz, dzb


def cf_el(geom, cf):
    return WeylElement.from_cf(geom, N, cf)


def test_wick_flat_contraction(flat):
    z, zb = flat.ring.var_z(), flat.ring.var_zbar()
    y, yb, _, _ = gens(flat)
    a = cf_el(flat, z) + y
    b = cf_el(flat, zb) + yb
    ab = wick_product(a, b)
    # (z+y)(zb+ybar) pointwise plus one contraction with omega^{1 1bar} = -1
    expect = (
        cf_el(flat, z * zb) + cf_el(flat, z).pointwise_mul(yb)
        + cf_el(flat, zb).pointwise_mul(y) + y.pointwise_mul(yb)
        - WeylElement.generator(flat, N, "hbar")
    )
    assert ab == expect
    ba = wick_product(b, a)
    # no contraction the other way: d/dy kills (zb + ybar)
    assert ba == expect + WeylElement.generator(flat, N, "hbar")


def test_wick_unit(flat, cp1):
    one = cf_el(cp1, cp1.ring.one())
    y, yb, dz, dzb = gens(cp1)
    probe = y.pointwise_mul(yb).pointwise_mul(dzb) + cf_el(cp1, cp1.ring.var_z())
    assert wick_product(one, probe) == probe
    assert wick_product(probe, one) == probe


def test_separation_of_variables(cp1):
    """a with only ybar (no y), or b with only y (no ybar): pointwise."""
    y, yb, _, _ = gens(cp1)
    f = cp1.ring.func({((1,), (1,)): Scalar.one()}, 1)
    a = cf_el(cp1, f).pointwise_mul(yb).pointwise_mul(yb) + cf_el(cp1, cp1.ring.var_zbar())
    b = cf_el(cp1, f).pointwise_mul(y) + cf_el(cp1, cp1.ring.var_z())
    mixed = y.pointwise_mul(yb) + cf_el(cp1, f)
    # first factor free of y: no contraction regardless of the second factor
    assert wick_product(a, b) == a.pointwise_mul(b)
    assert wick_product(a, mixed) == a.pointwise_mul(mixed)
    # second factor free of ybar: same
    assert wick_product(mixed, b) == mixed.pointwise_mul(b)
    # but mixed * mixed does contract
    assert wick_product(mixed, mixed) != mixed.pointwise_mul(mixed)


def test_symbol(flat):
    z, zb = flat.ring.var_z(), flat.ring.var_zbar()
    y, yb, _, _ = gens(flat)
    el = cf_el(flat, z * zb) + cf_el(flat, z).pointwise_mul(yb) \
        + WeylElement.generator(flat, N, "hbar")
    s = symbol(el)
    assert s.coeff(0) == z * zb
    assert s.coeff(1) == flat.ring.one()
    assert symbol(y.pointwise_mul(yb)).is_zero()


def test_delta_generators(cp1):
    y, yb, dz, dzb = gens(cp1)
    assert delta(y) == dz
    assert delta(yb) == dzb
    assert delta_inv(dz) == y
    assert delta_inv(dzb) == yb
    assert delta(delta(y.pointwise_mul(yb))).is_zero()


def test_homotopy_identity(cp1):
    y, yb, dz, dzb = gens(cp1)
    f = cp1.ring.func({((1,), (0,)): Scalar.one()}, 1)
    battery = [
        y.pointwise_mul(yb),
        cf_el(cp1, f),
        cf_el(cp1, f).pointwise_mul(dz),
        y.pointwise_mul(y).pointwise_mul(dzb),
        yb.pointwise_mul(dz).pointwise_mul(dzb),
        WeylElement.generator(cp1, N, "hbar").pointwise_mul(y),
    ]
    for a in battery:
        back = delta_inv(delta(a)) + delta(delta_inv(a)) + sym_projection(a)
        assert back == a
    assert delta_inv(cf_el(cp1, f)).is_zero()


def test_delta10_homotopy(cp1):
    y, yb, dz, dzb = gens(cp1)
    # delta10_inv substitutes only dz; dzbar-only terms are annihilated
    a = yb.pointwise_mul(dzb)
    assert delta10_inv(a).is_zero()
    b = y.pointwise_mul(dz).pointwise_mul(dzb)
    out = delta10_inv(b)
    assert out == y.pointwise_mul(y).pointwise_mul(dzb).scale(Scalar.of(rat(1, 2)))


def test_delta_as_bracket(cp1):
    """delta(a) = (1/hbar)[omega_{i jbar}(dz^i ybar^j - dzbar^j y^i), a]."""
    w = -gamma_delta_element(cp1, N)
    y, yb, dz, dzb = gens(cp1)
    f = cp1.ring.func({((2,), (1,)): Scalar.of(3)}, 1)
    battery = [
        y, yb, y.pointwise_mul(yb),
        cf_el(cp1, f).pointwise_mul(y).pointwise_mul(y),
        yb.pointwise_mul(dzb),
        y.pointwise_mul(dz),
        cf_el(cp1, f),
    ]
    for a in battery:
        lhs = bracket_over_hbar(w, a, N).drop_above_weight(N - 1)
        assert lhs == delta(a).drop_above_weight(N - 1)


def test_nabla_flat_is_coefficient_d(flat):
    z, zb = flat.ring.var_z(), flat.ring.var_zbar()
    y, _, dz, dzb = gens(flat)
    el = cf_el(flat, z * z * zb).pointwise_mul(y)
    out = nabla_weyl(el)
    expect = cf_el(flat, (z * z * zb).diff_z(0)).pointwise_mul(dz).pointwise_mul(y) \
        + cf_el(flat, (z * z * zb).diff_zbar(0)).pointwise_mul(dzb).pointwise_mul(y)
    assert out == expect
    assert nabla_weyl(cf_el(flat, flat.ring.one())).is_zero()


def test_nabla_cp1_christoffel(cp1):
    """nabla(ybar) = -Gamma^{1bar}_{1bar 1bar} dzbar (x) ybar with the
    standard Levi-Civita sign: the coefficient is +2z/(1+zzb)."""
    _, yb, _, dzb = gens(cp1)
    out = nabla_weyl(yb)
    coeff = cp1.christoffel_bar[0][0][0].scale(Scalar.of(-1))
    assert coeff == cp1.ring.func({((1,), (0,)): Scalar.of(2)}, 1)
    assert out == cf_el(cp1, coeff).pointwise_mul(dzb).pointwise_mul(yb)


def test_nabla_gamma_delta_vanishes(cp1):
    assert nabla_weyl(gamma_delta_element(cp1, N)).is_zero()


def test_nabla_squared_is_curvature_bracket(cp1):
    R = curvature_element(cp1, N)
    y, yb, dz, dzb = gens(cp1)
    f = cp1.ring.func({((1,), (1,)): Scalar.one()}, 1)
    battery = [
        y, yb,
        y.pointwise_mul(y),
        y.pointwise_mul(yb),
        cf_el(cp1, f).pointwise_mul(yb),
        dz.pointwise_mul(y),
        dzb.pointwise_mul(y.pointwise_mul(yb)),
    ]
    for el in battery:
        lhs = nabla_weyl(nabla_weyl(el))
        rhs = bracket_over_hbar(R, el, N)
        assert (lhs - rhs).is_zero()


def test_gamma_delta_square(cp1):
    gd = gamma_delta_element(cp1, N)
    gg = wick_product(gd, gd)
    expect = WeylElement(
        cp1, N,
        {(((0,), (0,), 1, (0,), (0,))): cp1.omega_lower[0][0].scale(Scalar.of(-1))},
    )
    assert gg == expect


def _random_element(geom, rng, nterms=3):
    terms = {}
    for _ in range(nterms):
        a, b, h = rng.randint(0, 2), rng.randint(0, 2), rng.randint(0, 1)
        dz = (0,) if rng.random() < 0.4 else ()
        dzb = (0,) if rng.random() < 0.4 else ()
        cf = geom.ring.func(
            {((rng.randint(0, 1),), (rng.randint(0, 1),)): Scalar.of(rng.randint(1, 3), rng.randint(0, 1))},
            rng.randint(0, 1),
        )
        terms[((a,), (b,), h, dz, dzb)] = cf
    return WeylElement(geom, N, terms)


def test_wick_associativity(cp1):
    rng = random.Random(11)
    for _ in range(6):
        a, b, c = (_random_element(cp1, rng) for _ in range(3))
        lhs = wick_product(wick_product(a, b), c)
        rhs = wick_product(a, wick_product(b, c))
        assert (lhs - rhs).drop_above_weight(N - 2).is_zero()


def test_wick_recovers_pointwise_at_hbar0(cp1):
    rng = random.Random(5)
    for _ in range(4):
        a, b = _random_element(cp1, rng), _random_element(cp1, rng)
        prod = wick_product(a, b)
        h0 = prod.part(lambda m: m[2] == 0)
        p0 = a.part(lambda m: m[2] == 0).pointwise_mul(b.part(lambda m: m[2] == 0))
        assert h0 == p0.part(lambda m: m[2] == 0)


def test_lie_and_iota(cp1, su2):
    V = su2.fields[2]
    y, yb, dz, dzb = gens(cp1)
    # L_V(y) = dV^1/dz y for the holomorphic rotation field
    assert lie_weyl(V, y) == y.scale(Scalar.i())
    assert lie_weyl(V, yb) == yb.scale(Scalar.of(0, -1))
    assert lie_weyl(V, dz) == dz.scale(Scalar.i())
    # iota contracts forms
    assert iota_weyl(V, dz) == cf_el(cp1, V.v_z[0])
    assert iota_weyl(V, dzb) == cf_el(cp1, V.v_zbar[0])
    two_form = dz.pointwise_mul(dzb)
    out = iota_weyl(V, two_form)
    expect = cf_el(cp1, V.v_z[0]).pointwise_mul(dzb) \
        - cf_el(cp1, V.v_zbar[0]).pointwise_mul(dz)
    assert out == expect


def test_substitute_hbar(cp1):
    y, yb, _, _ = gens(cp1)
    el = WeylElement.generator(cp1, N, "hbar").pointwise_mul(y) + yb
    lev = substitute_hbar(el, rat(1, 3))
    assert lev.level == rat(1, 3)
    assert lev.coefficient(((1,), (0,), 0, (), ())) == cp1.ring.const(Scalar.of(rat(1, 3)))
    with pytest.raises(ValueError):
        substitute_hbar(lev, rat(1, 3))


def test_divide_hbar_guard(cp1):
    y, _, _, _ = gens(cp1)
    with pytest.raises(ValueError):
        divide_hbar(y)


def test_debug_serialization_golden(flat):
    z, zb = flat.ring.var_z(), flat.ring.var_zbar()
    y, yb, _, _ = gens(flat)
    el = cf_el(flat, z) + yb.pointwise_mul(y) - WeylElement.generator(flat, N, "hbar").scale(Scalar.of(rat(3, 2)))
    assert el.to_lines() == [
        "1 : 1*z",
        "hbar : -3/2",
        "y ybar : 1",
    ]


def test_mismatched_elements_rejected(flat, cp1):
    a = WeylElement.generator(flat, N, "y")
    b = WeylElement.generator(cp1, N, "y")
    with pytest.raises(ValueError):
        wick_product(a, b)
    c = WeylElement.generator(flat, N - 1, "y")
    with pytest.raises(ValueError):
        a + c
