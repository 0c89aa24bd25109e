"""Degree-1 classification, level evaluation, and the round trip."""

import pytest

from fedosov_lab.scalars import Scalar, rat
from fedosov_lab.geometry import laplacian
from fedosov_lab.weyl import substitute_hbar, wick_product, symbol
from fedosov_lab.fedosov import flat_section
from fedosov_lab.quantizable import (
    NotKillingError,
    RingAntiderivativeError,
    check_killing_condition,
    d_antiderivative,
    dbar_antiderivative,
    degree1_series,
    evaluate_level,
    formalize_level_section,
    make_degree1,
)


def fs_h(cp1):
    return cp1.ring.func({((1,), (1,)): Scalar.one()}, 1)


def non_killing(cp1):
    z, zb = cp1.ring.var_z(), cp1.ring.var_zbar()
    return (z * z + zb * zb) * z * zb


def test_killing_battery(cp1, flat, su2):
    for mu in su2.moments:
        rep = check_killing_condition(cp1, mu)
        assert rep.condition_holds and rep.v10_holomorphic and rep.ricci_identity
    rep = check_killing_condition(flat, flat.ring.var_z() * flat.ring.var_zbar())
    assert rep.condition_holds and rep.v10_holomorphic and rep.ricci_identity
    rep = check_killing_condition(cp1, non_killing(cp1))
    assert not rep.condition_holds and not rep.v10_holomorphic
    # h = zzb/(1+zzb) is affine in mu3, hence Killing too
    rep = check_killing_condition(cp1, fs_h(cp1))
    assert rep.condition_holds


def test_make_degree1_battery(conn_ric, cp1, su2):
    for mu in su2.moments:
        q = make_degree1(conn_ric, mu)
        assert q.ybar_degree <= 1 and q.hbar_degree <= 1
        assert q.quantizable_weight() <= 1
    qc = make_degree1(conn_ric, cp1.ring.const(Scalar.of(5, -3)))
    assert qc.quantizable_weight() == 0
    assert qc.ybar_degree == 0


def test_make_degree1_requires_ricci(conn_zero, su2):
    with pytest.raises(ValueError):
        make_degree1(conn_zero, su2.moments[2])


def test_not_killing_paths(conn_ric, cp1):
    f0 = non_killing(cp1)
    with pytest.raises(NotKillingError):
        make_degree1(conn_ric, f0)
    q = make_degree1(conn_ric, f0, force=True)
    assert q.ybar_degree >= 2


def test_degree1_series_shape(cp1, su2):
    mu3 = su2.moments[2]
    c = Scalar.of(2)
    f = degree1_series(cp1, mu3, c)
    assert f.coeff(0) == mu3
    quarter = Scalar.of(rat(-1, 4), 0, -1)
    assert f.coeff(1) == (laplacian(cp1, mu3) + cp1.ring.const(c)).scale(-Scalar.of(rat(1, 4), 0, -1))


def test_evaluate_level_family(conn_ric, su2):
    q = make_degree1(conn_ric, su2.moments[2])
    previous = None
    for k in range(1, 11):
        lev = evaluate_level(q, k)
        assert lev.element.ybar_degree() <= 1
        # symbol: f0 - (1/4pi k)(Delta f0)
        expect = q.formal.substitute(rat(1, k))
        assert lev.symbol_value == expect
        if previous is not None:
            assert previous.element != lev.element  # hbar-graded parts differ
        previous = lev


def test_star_closure_filtration(conn_ric, su2):
    """Product of two degree-1 level sections has ybar degree <= 2."""
    k = 3
    qa = make_degree1(conn_ric, su2.moments[0])
    qb = make_degree1(conn_ric, su2.moments[1])
    sa = evaluate_level(qa, k).element
    sb = evaluate_level(qb, k).element
    prod = wick_product(sa, sb)
    assert prod.ybar_degree() <= 2


def test_dbar_antiderivative_patterns(cp1):
    ring = cp1.ring
    one = Scalar.one()
    # z/D^2 pattern (the ybar coefficient shape of the su(2) sections)
    tgt = ring.func({((1,), (0,)): one}, 2)
    g = dbar_antiderivative(cp1, [tgt])
    assert g.diff_zbar(0) == tgt
    assert g.evaluate((Scalar.zero(),), (Scalar.zero(),)).is_zero()
    # polynomial pattern
    tgt2 = ring.var_z() * ring.var_zbar()
    g2 = dbar_antiderivative(cp1, [tgt2])
    assert g2.diff_zbar(0) == tgt2
    # zbar/D^2 has no antiderivative in the ring (logarithmic)
    with pytest.raises(RingAntiderivativeError):
        dbar_antiderivative(cp1, [ring.func({((0,), (1,)): one}, 2)])


def test_d_antiderivative_both_slopes(cp1, su2):
    mu1 = su2.moments[0]
    g = d_antiderivative(cp1, [mu1.diff_z(0)], [mu1.diff_zbar(0)])
    # equal up to the gauge constant
    diff = g - mu1
    assert diff.diff_z(0).is_zero() and diff.diff_zbar(0).is_zero()


def test_round_trip(conn_ric, su2):
    k = 3
    for mu in su2.moments:
        q = make_degree1(conn_ric, mu)
        lev = evaluate_level(q, k)
        q2, corr = formalize_level_section(conn_ric, k, lev.element)
        # recovered up to the reported correction, which is constant here
        assert corr.is_constant()
        assert (q2.f0 - mu).is_constant()
        ev2 = evaluate_level(q2, k)
        diff = lev.element - ev2.element
        sym = symbol(diff).coeff(0)
        assert sym == corr


def test_round_trip_constant_section(conn_ric, cp1):
    k = 2
    c = cp1.ring.const(Scalar.of(4, 1))
    q = make_degree1(conn_ric, c)
    lev = evaluate_level(q, k)
    q2, corr = formalize_level_section(conn_ric, k, lev.element)
    assert q2.f0.is_zero()  # gauge puts everything into the correction
    assert corr == c


def test_formalize_rejects_bad_input(conn_ric, cp1, su2):
    k = 3
    q = make_degree1(conn_ric, su2.moments[2])
    lev = evaluate_level(q, k)
    with pytest.raises(ValueError):
        formalize_level_section(conn_ric, 4, lev.element)  # wrong level
    broken = lev.element + substitute_hbar(
        flat_section(conn_ric, cp1.ring.var_z()).of, rat(1, 3)
    ).part(lambda m: sum(m[0]) == 1)  # truncated garbage: not flat
    with pytest.raises(ValueError):
        formalize_level_section(conn_ric, k, broken)
