"""Zero-curvature residuals and the Yang-Mills functional on connection
one-forms with series coefficients.

A solved jet yields the one-form with components L^k split into a
differential part Z_D and a smoothing-direction part Z_S (sign folded in so
that Z_D - Z_S reconstructs L^k).  Both parts satisfy F = d theta - [theta,
theta] = 0, where the bracket convention absorbs the usual 1/2: F_{i,j} =
d_i theta_j - d_j theta_i - [theta_i, theta_j].  The Yang-Mills value
integrates the squared Frobenius norm of a realized curvature entry over a
cube of times, so it vanishes exactly on flat connections and is strictly
positive otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .factorization import KPJet
from .symbol import realize_matrix
from .tseries import TSeries, ddt, eval_t, tcommutator, tmul

__all__ = [
    "ConnForm",
    "Curvature2Form",
    "build_Z",
    "zs_residual",
    "curvature",
    "curvature_entry",
    "ym_value",
]


@dataclass
class ConnForm:
    """One-form sum_k W_k dt_k; components share truncation parameters."""

    components: dict  # k (1-based) -> TSeries

    def __post_init__(self):
        if not self.components:
            raise ValueError("connection form needs at least one component")
        params = next(iter(self.components.values())).params
        for k, W in self.components.items():
            if W.params != params:
                raise ValueError(f"component {k} has mismatched parameters")
        self.params = params

    @property
    def K(self) -> int:
        return self.params.K

    def component(self, k: int) -> TSeries:
        W = self.components.get(k)
        return W.copy() if W is not None else TSeries.zero(self.params)

    def __add__(self, other: "ConnForm") -> "ConnForm":
        keys = set(self.components) | set(other.components)
        return ConnForm({k: self.component(k) + other.component(k) for k in keys})

    def __neg__(self) -> "ConnForm":
        return ConnForm({k: -W for k, W in self.components.items()})

    def add_term(self, k: int, X: TSeries) -> "ConnForm":
        out = {j: W.copy() for j, W in self.components.items()}
        out[k] = out.get(k, TSeries.zero(self.params)) + X
        return ConnForm(out)

    def assert_smoothing(self, tol: float = 1e-12) -> None:
        """Z_S-type forms must have orders <= -1 in every coefficient."""
        for k, W in self.components.items():
            for mono, sym in W.terms.items():
                bad = [n for n, f in sym.a.items() if n >= 0 and f.norm() > tol]
                if bad:
                    raise AssertionError(
                        f"component {k}, monomial {tuple(mono)}: non-negative orders {sorted(bad)}"
                    )


@dataclass
class Curvature2Form:
    """F = sum_{i<j} F_{i,j} dt_i ^ dt_j; only i < j entries are stored."""

    entries: dict  # (i, j) with i < j -> TSeries

    def entry(self, i: int, j: int) -> TSeries:
        if i == j:
            raise ValueError("curvature entries need i != j")
        if i < j:
            return self.entries[(i, j)].copy()
        return -self.entries[(j, i)]

    def max_norm(self, max_val=None, floor=None) -> float:
        return max(F.norm(max_val=max_val, floor=floor) for F in self.entries.values())


def build_Z(jet: KPJet) -> tuple:
    """(Z_D, Z_S) with components pi_D(L^k) and -pi_S(L^k), k = 1..K, so that
    Z_D,k - Z_S,k = L^k."""
    zd, zs = {}, {}
    pw = None
    for k in range(1, jet.params.K + 1):
        pw = jet.L.copy() if pw is None else tmul(pw, jet.L)
        zd[k] = pw.d_part()
        zs[k] = -pw.s_part()
    return ConnForm(zd), ConnForm(zs)


def zs_residual(W: ConnForm, m: int, n: int, sign: int) -> float:
    """Norm of d W_n / d t_m - d W_m / d t_n - sign [W_m, W_n] over
    valuations <= V - max(m, n).

    The differential components satisfy this with sign +1; the raw
    smoothing-direction components pi_S(L^k) satisfy it with sign -1.
    """
    K = W.K
    if not (1 <= m <= K and 1 <= n <= K) or m == n:
        raise ValueError(f"need distinct flow indices in [1, {K}], got ({m}, {n})")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    Wm, Wn = W.component(m), W.component(n)
    resid = ddt(Wn, m) - ddt(Wm, n) - tcommutator(Wm, Wn).scale(float(sign))
    return resid.norm(max_val=W.params.V - max(m, n))


def curvature_entry(theta: ConnForm, i: int, j: int) -> TSeries:
    """F_{i,j} = d_i theta_j - d_j theta_i - [theta_i, theta_j] (1/2 absorbed)."""
    ti, tj = theta.component(i), theta.component(j)
    return ddt(tj, i) - ddt(ti, j) - tcommutator(ti, tj)


def curvature(theta: ConnForm) -> Curvature2Form:
    K = theta.K
    return Curvature2Form({(i, j): curvature_entry(theta, i, j) for i in range(1, K + 1) for j in range(i + 1, K + 1)})


def ym_value(theta: ConnForm, k: float, n: int, i: int, j: int, Mr: int, Q: int = 8) -> float:
    """Integral over the cube [-k, k]^n (times t_1..t_n, the rest zero) of
    trace(F_{i,j} F_{i,j}^H), by tensor-product Gauss-Legendre quadrature.

    Q nodes per axis integrate the polynomial time dependence exactly once
    Q exceeds the retained degree; the realization cutoff Mr fixes the
    Hilbert-Schmidt discretization, so values are comparable only at equal Mr.
    """
    params = theta.params
    K = params.K
    if not (1 <= i < j <= K):
        raise ValueError(f"need 1 <= i < j <= {K}, got ({i}, {j})")
    if not 1 <= n <= K:
        raise ValueError(f"cube dimension must lie in [1, {K}], got {n}")
    if Mr > params.M:
        raise ValueError(f"realization cutoff {Mr} exceeds mode cutoff {params.M}")
    if k <= 0 or Q < 1:
        raise ValueError("need cube half-width k > 0 and at least one node")
    F = curvature_entry(theta, i, j)
    # keep the reliable jet only: monomials beyond val V - max(i, j) and
    # orders below the reported floor are truncation bookkeeping, not
    # curvature content, and would enter the trace at face value otherwise
    cap = params.V - max(i, j)
    F = TSeries(params, {m: s for m, s in F.terms.items() if m.val <= cap})
    F = F.map_coeffs(_reported)
    nodes, weights = np.polynomial.legendre.leggauss(Q)
    nodes = nodes * k
    weights = weights * k
    total = 0.0
    for combo in product(range(Q), repeat=n):
        t = [0.0] * K
        w = 1.0
        for axis, q in enumerate(combo):
            t[axis] = nodes[q]
            w *= weights[q]
        Ft = eval_t(F, t)
        R = realize_matrix(Ft, Mr)
        total += w * float(np.sum(np.abs(R) ** 2))
    return total


def _reported(sym):
    from .symbol import Symbol

    return Symbol(sym.params, {n: f for n, f in sym.a.items() if n >= sym.params.F})
