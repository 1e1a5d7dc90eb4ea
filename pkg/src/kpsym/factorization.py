"""Splitting U = S^{-1} Y of the time-exponential flow into a dressing series S
(1 plus strictly negative orders) and a series Y of differential operators,
solved order by order in the valuation, plus the jet solver built on it.

With U = sum_v U_v and S = 1 + sum_{v >= 1} S_v, the recursion

    W_v = U_v + sum_{0 < w < v} S_w o U_{v-w},
    Y_v = pi_D(W_v),   S_v = -pi_S(W_v)

enforces S o U = Y level by level; the splitting makes the pair unique.
The solver conjugates the base operator by both S and Y and keeps the two
results so their agreement can be checked independently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .loopfn import LoopFn
from .symbol import Symbol, TruncParams, compose
from .tseries import TMono, TSeries, conj_t, ddt, tcommutator, texp, tpow

__all__ = [
    "KPJet",
    "build_U",
    "mulase_factorize",
    "kp_solve",
    "conj_from",
    "kp_residual",
    "ds_rhs_gap",
    "conj_consistency",
]


@dataclass
class KPJet:
    """A solved hierarchy instance: dressing datum, base operator, flow
    exponential, factorization pair, and the evolved operator computed
    through both conjugation routes."""

    S0: Symbol
    L0: Symbol
    U: TSeries
    S: TSeries
    Y: TSeries
    L: TSeries
    L_via_Y: TSeries = field(repr=False, default=None)

    @property
    def params(self) -> TruncParams:
        return self.L0.params


def build_U(L0: Symbol, params: TruncParams, time_weights=None, lead: float = 1.0) -> TSeries:
    """exp(sum_n w_n t_n L0^n) for n = 1..K (w_n = 1 by default).

    L0 must have order 1 with constant leading coefficient `lead` (1 for the
    plain calculus, the derivation scale for rescaled runs); the growth bound
    holds automatically because the valuation of t_n matches the order of
    L0^n.
    """
    if L0.order != 1:
        raise ValueError(f"base operator must have order 1, got {L0.order}")
    gap = L0.coeff(1) - LoopFn.const(params.d, params.M, lead)
    if gap.norm() > 1e-9:
        raise ValueError(f"base operator must have constant leading coefficient {lead}")
    if time_weights is None:
        time_weights = [1.0] * params.K
    if len(time_weights) != params.K:
        raise ValueError(f"need {params.K} time weights")
    gen = TSeries.zero(params)
    pw = None
    for n in range(1, params.K + 1):
        pw = L0.copy() if pw is None else compose(pw, L0)
        gen.set_term(TMono.unit(params.K, n), pw.scale(time_weights[n - 1]))
    return texp(gen)


def mulase_factorize(U: TSeries) -> tuple:
    """Unique pair (S, Y) with S o U = Y, S = 1 + (orders <= -1), Y differential.

    Raises if U is not a unit with constant term 1, or if a level produces a
    differential part whose order exceeds the valuation (growth violation).
    """
    params = U.params
    zero = TMono.zero(params.K)
    U0 = U.term(zero)
    if (U0 - Symbol.identity(params)).norm(floor=params.floor) > 1e-9:
        raise ValueError("factorization expects a unit with constant term 1")

    S = TSeries.one(params)
    Y = TSeries.one(params)
    for mono in sorted(U.terms, key=TMono.key):
        if mono == zero:
            continue
        W = U.term(mono)
        for beta in sorted(S.terms, key=TMono.key):
            if beta == zero or beta == mono:
                continue
            if all(b <= m for b, m in zip(beta, mono)):
                gamma = TMono(tuple(m - b for b, m in zip(beta, mono)))
                if gamma in U.terms:
                    W = W + compose(S.terms[beta], U.terms[gamma])
        Yv = W.d_part()
        top = Yv.order
        if top is not None and top > mono.val:
            raise AssertionError(
                f"growth violation: differential part at {tuple(mono)} has order {top} > val {mono.val}"
            )
        S.terms[mono] = -W.s_part()
        Y.terms[mono] = Yv
    S.prune()
    Y.prune()
    return S, Y


def kp_solve(S0: Symbol, params: TruncParams, time_weights=None, xi_scale: float = 1.0) -> KPJet:
    """Solve the hierarchy jet for a dressing S0 = 1 + (orders <= -1).

    The base operator is S0 o (xi_scale . xi) o S0^{-1}; the evolved operator
    is computed as both S L0 S^{-1} and Y L0 Y^{-1} (stored separately so the
    agreement is a checkable statement, not a definition).  `xi_scale` and
    `time_weights` support the rescaled calculus used by the covariance check.
    """
    if any(n > 0 for n in S0.a if not S0.a[n].is_zero()):
        raise ValueError("dressing must be an order-0 symbol")
    if (S0.coeff(0) - Symbol.identity(params).coeff(0)).norm() > 1e-12:
        raise ValueError("dressing must be of the form 1 + (orders <= -1)")
    L0 = conj_from(S0, params, xi_scale)
    U = build_U(L0, params, time_weights=time_weights, lead=xi_scale)
    S, Y = mulase_factorize(U)
    L = conj_t(S, L0)
    L_via_Y = conj_t(Y, L0)
    return KPJet(S0=S0.copy(), L0=L0, U=U, S=S, Y=Y, L=L, L_via_Y=L_via_Y)


def conj_from(S0: Symbol, params: TruncParams, xi_scale: float = 1.0) -> Symbol:
    """Base operator S0 o (xi_scale . xi) o S0^{-1}."""
    from .symbol import conj

    return conj(S0, Symbol.xi(params, 1, xi_scale))


def kp_residual(jet: KPJet, n: int) -> float:
    """Defect of d L / d t_n = [(L^n)_D, L] over valuations <= V - n.

    Also computed with the right-hand side -[(L^n)_S, L]; the returned value
    is the max of the two residual norms, so it certifies both forms at once.
    """
    params = jet.params
    if not 1 <= n <= params.K:
        raise ValueError(f"flow index {n} outside [1, {params.K}]")
    Ln = tpow(jet.L, n)
    lhs = ddt(jet.L, n)
    cap = params.V - n
    r_d = (lhs - tcommutator(Ln.d_part(), jet.L)).norm(max_val=cap)
    r_s = (lhs + tcommutator(Ln.s_part(), jet.L)).norm(max_val=cap)
    return max(r_d, r_s)


def ds_rhs_gap(jet: KPJet, n: int) -> float:
    """Disagreement between the two right-hand-side forms [(L^n)_D, L] and
    -[(L^n)_S, L] over valuations <= V - n."""
    params = jet.params
    Ln = tpow(jet.L, n)
    gap = tcommutator(Ln.d_part(), jet.L) + tcommutator(Ln.s_part(), jet.L)
    return gap.norm(max_val=params.V - n)


def conj_consistency(jet: KPJet) -> float:
    """Norm of S L0 S^{-1} - Y L0 Y^{-1} over all retained valuations."""
    return (jet.L - jet.L_via_Y).norm()
