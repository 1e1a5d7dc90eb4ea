"""Valuation-graded series: products, exponentials, derivations, scaling,
evaluation, and the ordered-product path exponential."""

import numpy as np
import pytest

from kpsym import (
    LoopFn,
    Path,
    Symbol,
    TMono,
    TSeries,
    TruncParams,
    compose,
    ddt,
    eval_t,
    power,
    product_integral,
    scale_h,
    texp,
    tinvert,
    tmul,
)
from kpsym.tseries import set_growth_checks

P = TruncParams(M=16, F=-6, g=6, V=4, K=3)
M = P.M


def const_series(value=1.0):
    return TSeries.constant(P, Symbol.from_terms(P, {0: LoopFn.const(1, M, value)}))


def test_tmono_valuation():
    assert TMono((1, 0, 0)).val == 1
    assert TMono((2, 1, 0)).val == 4
    assert TMono((0, 0, 2)).val == 6
    with pytest.raises(ValueError):
        TMono((-1, 0, 0))


def test_tmul_unit():
    X = TSeries.monomial(P, (1, 1, 0), Symbol.xi(P, 2))
    assert (tmul(TSeries.one(P), X) - X).norm() == 0.0
    assert (tmul(X, TSeries.one(P)) - X).norm() == 0.0


def test_tmul_single_monomials():
    X = TSeries.monomial(P, (1, 0, 0), Symbol.xi(P))
    Y = TSeries.monomial(P, (0, 1, 0), Symbol.xi(P, 2))
    Z = tmul(X, Y)
    assert Z.monomials() == [TMono((1, 1, 0))]
    assert (Z.term((1, 1, 0)) - Symbol.xi(P, 3)).is_zero(1e-14)


def test_tmul_valuation_cap():
    X = TSeries.monomial(P, (3, 0, 0), Symbol.identity(P))
    Y = TSeries.monomial(P, (2, 0, 0), Symbol.identity(P))
    assert tmul(X, Y).is_zero()  # val 5 > V = 4


def test_texp_zero():
    assert (texp(TSeries.zero(P)) - TSeries.one(P)).norm() == 0.0


def test_texp_scalar_series():
    c = 0.7
    X = TSeries.monomial(P, (1, 0, 0), Symbol.from_terms(P, {0: LoopFn.const(1, M, c)}))
    E = texp(X)
    from math import factorial

    for k in range(P.V + 1):
        got = E.term((k, 0, 0)).coeff(0).mode(0)[0, 0]
        assert abs(got - c**k / factorial(k)) < 1e-14


def test_texp_t1t2_coefficient_oracle():
    # oracle: direct expansion of the double series; commuting generators give
    # coefficient L0^3 at t1 t2
    L0 = Symbol.from_terms(P, {1: LoopFn.const(1, M, 1.0), -1: LoopFn.sin(M)})
    gen = TSeries.zero(P)
    gen.set_term(TMono.unit(3, 1), L0)
    gen.set_term(TMono.unit(3, 2), power(L0, 2))
    E = texp(gen)
    oracle = compose(L0, power(L0, 2))
    assert (E.term((1, 1, 0)) - oracle).norm(floor=P.F) < 1e-10


def test_texp_rejects_val0():
    with pytest.raises(ValueError):
        texp(const_series())


def test_texp_inverse_pair():
    X = TSeries.monomial(P, (1, 0, 0), Symbol.from_terms(P, {-1: LoopFn.cos(M)}))
    X.set_term((0, 1, 0), Symbol.from_terms(P, {-2: LoopFn.sin(M, 2)}))
    prod = tmul(texp(X), texp(-X))
    assert (prod - TSeries.one(P)).norm() < 1e-10


def test_tinvert():
    X = TSeries.one(P) + TSeries.monomial(P, (1, 0, 0), Symbol.from_terms(P, {-1: LoopFn.cos(M)}))
    assert (tmul(X, tinvert(X)) - TSeries.one(P)).norm() < 1e-12


def test_ddt_basics():
    X0 = Symbol.xi(P)
    X = TSeries.monomial(P, (1, 0, 0), X0)
    assert (ddt(X, 1).term((0, 0, 0)) - X0).is_zero()
    assert ddt(TSeries.monomial(P, (0, 1, 0), X0), 1).is_zero()
    sq = TSeries.monomial(P, (2, 0, 0), X0)
    got = ddt(sq, 1)
    assert (got.term((1, 0, 0)) - X0.scale(2.0)).is_zero()
    with pytest.raises(ValueError):
        ddt(X, 4)


def test_mixed_partials_commute():
    rng = np.random.default_rng(3)
    X = TSeries.zero(P)
    for mono in [(1, 0, 0), (2, 1, 0), (0, 2, 0), (1, 0, 1)]:
        X.set_term(mono, Symbol.from_terms(P, {-1: LoopFn.random_trig(rng, M, 3)}))
    for n, m in [(1, 2), (1, 3), (2, 3)]:
        a = ddt(ddt(X, n), m)
        b = ddt(ddt(X, m), n)
        assert (a - b).norm() == 0.0


def test_eval_t():
    X0 = Symbol.from_terms(P, {-1: LoopFn.sin(M)})
    X = TSeries.monomial(P, (1, 0, 0), X0)
    assert eval_t(X, (0.0, 0.0, 0.0)).is_zero()
    assert (eval_t(X, (2.0, 0.0, 0.0)) - X0.scale(2.0)).is_zero()
    # partial sums of the scalar exponential
    c = 0.9
    E = texp(TSeries.monomial(P, (1, 0, 0), Symbol.from_terms(P, {0: LoopFn.const(1, M, c)})))
    got = eval_t(E, (1.0, 0.0, 0.0)).coeff(0).mode(0)[0, 0]
    from math import factorial

    want = sum(c**k / factorial(k) for k in range(P.V + 1))
    assert abs(got - want) < 1e-13


def test_eval_homomorphism_up_to_cap():
    rng = np.random.default_rng(4)
    X = TSeries.zero(P)
    Y = TSeries.zero(P)
    X.set_term((0, 0, 0), Symbol.from_terms(P, {0: LoopFn.const(1, M, 1.0)}))
    Y.set_term((0, 0, 0), Symbol.from_terms(P, {0: LoopFn.const(1, M, 1.0)}))
    for mono in [(1, 0, 0), (0, 1, 0)]:
        X.set_term(mono, Symbol.from_terms(P, {-1: LoopFn.random_trig(rng, M, 2)}))
        Y.set_term(mono, Symbol.from_terms(P, {-1: LoopFn.random_trig(rng, M, 2)}))
    t = (0.05, 0.05, 0.0)
    lhs = eval_t(tmul(X, Y), t)
    rhs = compose(eval_t(X, t), eval_t(Y, t))
    tnorm = max(abs(v) for v in t)
    assert (lhs - rhs).norm(floor=P.F) < 10 * tnorm ** (P.V + 1)


def test_scale_h_identity_and_inverse():
    rng = np.random.default_rng(5)
    X = TSeries.zero(P)
    for mono in [(0, 0, 0), (1, 0, 0), (0, 1, 0)]:
        X.set_term(mono, Symbol.from_terms(P, {-1: LoopFn.random_trig(rng, M, 2), 1: LoopFn.random_trig(rng, M, 2)}))
    assert (scale_h(X, 1.0) - X).norm() == 0.0
    back = scale_h(scale_h(X, 2.0), 0.5)
    assert (back - X).norm() < 1e-12
    with pytest.raises(ValueError):
        scale_h(X, 0.0)


def test_scale_h_bookkeeping():
    # t1 . xi -> h t1 . (h xi) = h^2 t1 xi
    X = TSeries.monomial(P, (1, 0, 0), Symbol.xi(P))
    got = scale_h(X, 3.0)
    assert (got.term((1, 0, 0)) - Symbol.xi(P, 1, 9.0)).is_zero(1e-12)


def test_growth_checks_toggle():
    prev = set_growth_checks(True)
    try:
        X = TSeries.monomial(P, (1, 0, 0), Symbol.from_terms(P, {-1: LoopFn.cos(M)}))
        tmul(X, X)  # growth-compliant; must not raise
        bad = TSeries.monomial(P, (1, 0, 0), Symbol.xi(P, P.N + 2))
        with pytest.raises(AssertionError):
            tmul(bad, TSeries.one(P))
    finally:
        set_growth_checks(prev)


def test_product_integral_zero_path():
    zero = Path.constant(TSeries.zero(P))
    for n in (1, 7):
        assert (product_integral(zero, n) - TSeries.one(P)).norm() == 0.0


def test_product_integral_rejects_val0():
    bad = Path.constant(const_series())
    with pytest.raises(ValueError):
        product_integral(bad, 4)


def test_product_integral_constant_rate():
    # oracle: texp; the ordered product converges at rate O(1/n)
    X = TSeries.monomial(P, (1, 0, 0), Symbol.from_terms(P, {-1: LoopFn.cos(M), 0: LoopFn.const(1, M, 0.3)}))
    target = texp(X)
    errs = [(product_integral(Path.constant(X), n) - target).norm() for n in (16, 32, 64)]
    assert errs[0] / errs[1] > 1.8
    assert errs[1] / errs[2] > 1.8


def test_product_integral_val1_riemann_oracle():
    # the val-1 layer equals the left-rule quadrature of the path's val-1 part
    base = Symbol.from_terms(P, {-1: LoopFn.sin(M)})

    def path(s):
        return TSeries.monomial(P, (1, 0, 0), base.scale(1.0 + s))

    n = 24
    got = product_integral(Path(path, P), n).term((1, 0, 0))
    riemann = sum(1.0 + ell / n for ell in range(n)) / n
    assert (got - base.scale(riemann)).norm(floor=P.F) < 1e-12
