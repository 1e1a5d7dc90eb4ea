"""Reduction to the first two negative coefficients u_{-1}, u_{-2} of
L = xi + sum_{k <= -1} u_k xi^k, the degree-1 consequences of the
zero-curvature equations for the time pairs (1,2), (1,3), (2,3), and the
numeric (non-series) integration of the operator flows

    dL/dt_n = [L^n_D, L] = -[L^n_S, L].

The flows use the smoothing-direction right-hand side, which for scalar
coefficients has orders <= -1 and therefore preserves the differential part
exactly.  Taylor jets of a single flow direction provide the formal branch
for the formal-vs-numeric comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

from .loopfn import LoopFn
from .symbol import Symbol, commutator, compose, power
from .tseries import TSeries, ddt, tmul

__all__ = [
    "UPair",
    "FlowState",
    "FlowBlowup",
    "extract_u",
    "check_t12",
    "check_t13",
    "check_t23",
    "equiv_t23",
    "flow_delinearized",
    "flows_commute",
    "taylor_jet",
    "eval_taylor",
]


class FlowBlowup(RuntimeError):
    pass


@dataclass
class UPair:
    """The pair (u_{-1}, u_{-2}); series-valued for jets, plain functions for
    numeric flow states."""

    u1: object
    u2: object


@dataclass
class FlowState:
    L: Symbol
    t: float
    n: int
    dt: float


def _scalar_jet(X: TSeries, order: int) -> TSeries:
    """Extract the order-`order` coefficient of every monomial, re-embedded at
    order 0 so the scalar jets multiply pointwise."""
    out = TSeries.zero(X.params)
    for mono, sym in X.terms.items():
        f = sym.coeff(order)
        if not f.is_zero():
            out.terms[mono] = Symbol(X.params, {0: f})
    return out


def jet_dx(X: TSeries, k: int = 1) -> TSeries:
    """x-derivative applied to every coefficient function."""
    return X.map_coeffs(lambda s: s.map_coeffs(lambda f: f.dx(k)))


def extract_u(L, sigma0_tol: float = 1e-8) -> UPair:
    """u_{-1} and u_{-2} of an order-1 operator with unit leading coefficient.

    Accepts a plain Symbol (numeric state) or a TSeries jet; complains if the
    leading coefficient is not 1 and warns through ValueError only for that
    structural violation (a nonzero order-0 part is tolerated up to
    sigma0_tol).
    """
    if isinstance(L, TSeries):
        params = L.params
        lead = L.term([0] * params.K).coeff(1)
        if (lead - LoopFn.const(params.d, params.M, 1.0)).norm() > 1e-9:
            raise ValueError("jet leading coefficient is not xi")
        return UPair(u1=_scalar_jet(L, -1), u2=_scalar_jet(L, -2))
    params = L.params
    if (L.coeff(1) - LoopFn.const(params.d, params.M, 1.0)).norm() > 1e-9:
        raise ValueError("leading coefficient is not 1")
    s0 = L.coeff(0).norm()
    if s0 > sigma0_tol:
        import warnings

        warnings.warn(f"order-0 part has norm {s0:.3e}; extraction assumes it vanishes")
    return UPair(u1=L.coeff(-1), u2=L.coeff(-2))


def check_t12(jet) -> float:
    """Residual of  d u_{-1} / d t_1 = d/dx u_{-1}  over valuations <= V - 1."""
    u = extract_u(jet.L)
    cap = jet.params.V - 1
    return (ddt(u.u1, 1) - jet_dx(u.u1)).norm(max_val=cap)


def check_t13(jet) -> float:
    """Residuals of the pair  d u_{-1}/d t_1 = d/dx u_{-1}  and
    d u_{-2}/d t_1 = d/dx u_{-2}; returns the larger one."""
    u = extract_u(jet.L)
    cap = jet.params.V - 1
    r1 = (ddt(u.u1, 1) - jet_dx(u.u1)).norm(max_val=cap)
    r2 = (ddt(u.u2, 1) - jet_dx(u.u2)).norm(max_val=cap)
    return max(r1, r2)


def check_t23(jet) -> float:
    """Residuals of the (t_2, t_3) pair over valuations <= V - 3:

        d u_{-1}/d t_2 = d^2/dx^2 u_{-1} + 2 d/dx u_{-2}
        3 d u_{-2}/d t_2 - 2 d u_{-1}/d t_3
            = -6 (d/dx u_{-1}) u_{-1} - 2 d^3/dx^3 u_{-1} - 3 d^2/dx^2 u_{-2}
    """
    u = extract_u(jet.L)
    cap = jet.params.V - 3
    r1 = (ddt(u.u1, 2) - jet_dx(u.u1, 2) - jet_dx(u.u2).scale(2.0)).norm(max_val=cap)
    rhs = (
        tmul(jet_dx(u.u1), u.u1).scale(-6.0)
        - jet_dx(u.u1, 3).scale(2.0)
        - jet_dx(u.u2, 2).scale(3.0)
    )
    r2 = (ddt(u.u2, 2).scale(3.0) - ddt(u.u1, 3).scale(2.0) - rhs).norm(max_val=cap)
    return max(r1, r2)


def equiv_t23(u: UPair) -> float:
    """Discrepancy between the raw second (t_2, t_3) equation, with the mixed
    d^2 u_{-1} / (d t_2 dx) term left in place,

        3 d u_{-2}/d t_2 + 3 d^2 u_{-1}/(d t_2 dx) - 2 d u_{-1}/d t_3
            = -6 (d/dx u_{-1}) u_{-1} + d^3/dx^3 u_{-1} + 3 d^2/dx^2 u_{-2},

    and its eliminated form (the second equation of check_t23).  The two
    residuals differ by 3 d/dx of the first-equation defect, so the value
    vanishes exactly when  d u_{-1}/d t_2 = d^2/dx^2 u_{-1} + 2 d/dx u_{-2}
    holds, whatever the jets are otherwise.
    """
    u1, u2 = u.u1, u.u2
    cap = u1.params.V - 3
    raw = (
        ddt(u2, 2).scale(3.0)
        + jet_dx(ddt(u1, 2)).scale(3.0)
        - ddt(u1, 3).scale(2.0)
        - (tmul(jet_dx(u1), u1).scale(-6.0) + jet_dx(u1, 3) + jet_dx(u2, 2).scale(3.0))
    )
    eliminated = (
        ddt(u2, 2).scale(3.0)
        - ddt(u1, 3).scale(2.0)
        - (tmul(jet_dx(u1), u1).scale(-6.0) - jet_dx(u1, 3).scale(2.0) - jet_dx(u2, 2).scale(3.0))
    )
    return (raw - eliminated).norm(max_val=cap)


def _flow_rhs(L: Symbol, n: int) -> Symbol:
    return -commutator(power(L, n).s_part(), L)


def flow_delinearized(
    L0: Symbol, n: int, t_end: float, dt: float, blowup: float = 1e6, filter_frac: float = 0.75
) -> FlowState:
    """Classical 4th-order explicit stepping of dL/dt_n = -[(L^n)_S, L].

    The stepping runs in double precision (a wide-mode operator is narrowed
    on entry).  After each step the state is mode-filtered at
    filter_frac * M: near-cutoff rounding junk would otherwise be amplified
    explosively by the high-derivative couplings that feed the guard band
    (the true content there is exponentially small for smooth data).
    Rejects the run if a reported-band coefficient sup-norm exceeds
    `blowup`; guard-band orders legitimately carry large values.
    """
    if dt <= 0:
        raise ValueError("step size must be positive")
    if L0.order != 1:
        raise ValueError("flow expects an order-1 operator")
    if L0.params.wide:
        L0 = L0.narrow()
    mf = int(filter_frac * L0.params.M)
    steps = int(round(t_end / dt))
    L = L0.mode_filter(mf)
    t = 0.0
    for _ in range(steps):
        k1 = _flow_rhs(L, n)
        k2 = _flow_rhs(L + k1.scale(dt / 2), n)
        k3 = _flow_rhs(L + k2.scale(dt / 2), n)
        k4 = _flow_rhs(L + k3.scale(dt), n)
        L = (L + (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(dt / 6)).mode_filter(mf)
        t += dt
        top = max(
            (f.sup_norm() for q, f in L.a.items() if q >= L.params.F), default=0.0
        )
        if top > blowup:
            raise FlowBlowup(f"coefficient sup-norm exceeded {blowup:.1e} at t={t:.4g}")
    return FlowState(L=L, t=t, n=n, dt=dt)


def flows_commute(L0: Symbol, n: int, m: int, t: float, dt: float) -> float:
    """Norm of the difference between flowing (n then m) and (m then n)."""
    a = flow_delinearized(flow_delinearized(L0, n, t, dt).L, m, t, dt).L
    b = flow_delinearized(flow_delinearized(L0, m, t, dt).L, n, t, dt).L
    return (a - b).norm()


def taylor_jet(L0: Symbol, n: int, degree: int) -> list:
    """Taylor coefficients [L_0, ..., L_degree] of the single flow direction n,
    from the recursion (j+1) L_{j+1} = coefficient_j of -[(L^n)_S, L].

    This is the formal (series) solution of the flow in that one direction,
    and on overlapping valuations it agrees with the hierarchy jet.
    """
    if degree < 0:
        raise ValueError("degree must be >= 0")
    coeffs = [L0.copy()]
    for j in range(degree):
        pw = _poly_power(coeffs, n, j)
        rhs = Symbol.zero(L0.params)
        for a in range(j + 1):
            A = pw[a].s_part()
            B = coeffs[j - a]
            rhs = rhs - (compose(A, B) - compose(B, A))
        coeffs.append(rhs.scale(1.0 / (j + 1)))
    return coeffs


def _poly_power(coeffs: list, n: int, cap: int) -> list:
    """Coefficients 0..cap of (sum_j coeffs[j] s^j)^n."""
    out = [c.copy() for c in coeffs[: cap + 1]]
    for _ in range(n - 1):
        nxt = [Symbol.zero(coeffs[0].params) for _ in range(cap + 1)]
        for a, ca in enumerate(out):
            for b in range(cap + 1 - a):
                nxt[a + b] = nxt[a + b] + compose(ca, coeffs[b])
        out = nxt
    return out


def eval_taylor(coeffs: list, t: float) -> Symbol:
    out = Symbol.zero(coeffs[0].params)
    tp = 1.0
    for c in coeffs:
        out = out + c.scale(tp)
        tp *= t
    return out
