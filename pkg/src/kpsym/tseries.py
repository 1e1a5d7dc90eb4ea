"""Series in the times t_1, ..., t_K with Symbol coefficients, graded by the
valuation val(t_n) = n and truncated at the cap V.

Monomials are exponent tuples; everything below iterates in graded
lexicographic order so results are reproducible.  Because every retained
monomial has valuation <= V, exponentials and inverses of 1 + (val >= 1)
series are finite sums, exact in the truncated algebra.
"""

from __future__ import annotations

from math import factorial

from .symbol import Symbol, TruncParams, compose

__all__ = [
    "TMono",
    "TSeries",
    "Path",
    "tmul",
    "texp",
    "ddt",
    "eval_t",
    "scale_h",
    "product_integral",
    "tpow",
    "tinvert",
    "tcommutator",
    "conj_t",
    "set_growth_checks",
]

# When enabled, tmul/texp/ddt assert the coefficient-order growth bound
# (base order params.N) on their results; the stricter per-object bases are
# asserted explicitly where the objects are built.
_CHECK_GROWTH = False


def set_growth_checks(enabled: bool) -> bool:
    global _CHECK_GROWTH
    prev = _CHECK_GROWTH
    _CHECK_GROWTH = enabled
    return prev


class TMono(tuple):
    """Exponent tuple (a_1, ..., a_K); valuation sum(n * a_n)."""

    def __new__(cls, exps):
        t = tuple(int(e) for e in exps)
        if any(e < 0 for e in t):
            raise ValueError(f"negative exponent in monomial {t}")
        return super().__new__(cls, t)

    @property
    def val(self) -> int:
        return sum((i + 1) * e for i, e in enumerate(self))

    def key(self):
        return (self.val, tuple(self))

    @classmethod
    def unit(cls, K: int, n: int, e: int = 1) -> "TMono":
        exps = [0] * K
        exps[n - 1] = e
        return cls(exps)

    @classmethod
    def zero(cls, K: int) -> "TMono":
        return cls((0,) * K)

    def __add__(self, other):
        return TMono(tuple(a + b for a, b in zip(self, other)))

    def t_value(self, t) -> complex:
        v = 1.0
        for e, ti in zip(self, t):
            if e:
                v *= ti**e
        return v


class TSeries:
    """Map TMono -> Symbol, keeping monomials with valuation <= params.V."""

    __slots__ = ("params", "terms")

    def __init__(self, params: TruncParams, terms: dict | None = None):
        self.params = params
        self.terms = {}
        if terms:
            for mono, sym in terms.items():
                self.set_term(mono, sym)

    def set_term(self, mono, sym: Symbol) -> None:
        mono = TMono(mono)
        if len(mono) != self.params.K:
            raise ValueError(f"monomial has {len(mono)} exponents, params.K = {self.params.K}")
        if mono.val > self.params.V:
            return
        self.terms[mono] = sym.copy()

    @classmethod
    def zero(cls, params: TruncParams) -> "TSeries":
        return cls(params)

    @classmethod
    def one(cls, params: TruncParams) -> "TSeries":
        return cls(params, {TMono.zero(params.K): Symbol.identity(params)})

    @classmethod
    def constant(cls, params: TruncParams, sym: Symbol) -> "TSeries":
        return cls(params, {TMono.zero(params.K): sym})

    @classmethod
    def monomial(cls, params: TruncParams, mono, sym: Symbol) -> "TSeries":
        return cls(params, {TMono(mono): sym})

    def copy(self) -> "TSeries":
        return TSeries(self.params, self.terms)

    def monomials(self) -> list:
        return sorted(self.terms, key=TMono.key)

    def term(self, mono) -> Symbol:
        mono = TMono(mono)
        sym = self.terms.get(mono)
        return sym.copy() if sym is not None else Symbol.zero(self.params)

    def min_val(self) -> int:
        live = [m.val for m, s in self.terms.items() if not s.is_zero()]
        return min(live) if live else self.params.V + 1

    def prune(self) -> "TSeries":
        for m in [m for m, s in self.terms.items() if s.is_zero()]:
            del self.terms[m]
        return self

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(s.is_zero(tol) for s in self.terms.values())

    def norm(self, max_val: int | None = None, floor: int | None = None) -> float:
        """Max over monomials (valuation <= max_val) of coefficient norms on orders >= floor."""
        if max_val is None:
            max_val = self.params.V
        best = 0.0
        for mono in self.monomials():
            if mono.val <= max_val:
                best = max(best, self.terms[mono].norm(floor))
        return best

    def __add__(self, other: "TSeries") -> "TSeries":
        out = self.copy()
        for mono, sym in other.terms.items():
            out.terms[mono] = out.terms[mono] + sym if mono in out.terms else sym.copy()
        return out

    def __sub__(self, other: "TSeries") -> "TSeries":
        return self + (-other)

    def __neg__(self) -> "TSeries":
        return TSeries(self.params, {m: -s for m, s in self.terms.items()})

    def scale(self, c) -> "TSeries":
        return TSeries(self.params, {m: s.scale(c) for m, s in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, TSeries):
            return tmul(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def map_coeffs(self, fn) -> "TSeries":
        """Apply a Symbol -> Symbol map to every coefficient."""
        return TSeries(self.params, {m: fn(s) for m, s in self.terms.items()})

    def d_part(self) -> "TSeries":
        return self.map_coeffs(lambda s: s.d_part())

    def s_part(self) -> "TSeries":
        return self.map_coeffs(lambda s: s.s_part())

    def assert_growth(self, base_order: int = 0, tol: float = 1e-9) -> None:
        """Coefficient of a valuation-v monomial must have order <= max(v, base_order)."""
        for mono, sym in self.terms.items():
            cap = max(mono.val, base_order)
            bad = [n for n, f in sym.a.items() if n > cap and f.norm() > tol]
            if bad:
                raise AssertionError(
                    f"growth violation at monomial {tuple(mono)} (val {mono.val}): orders {sorted(bad)} exceed {cap}"
                )

    def __repr__(self) -> str:
        return f"TSeries({len(self.terms)} monomials, V={self.params.V}, K={self.params.K})"


def tmul(X: TSeries, Y: TSeries) -> TSeries:
    """Cauchy product over monomials; coefficients compose; val > V is dropped."""
    if X.params is not Y.params and X.params != Y.params:
        raise ValueError("series have different truncation parameters")
    params = X.params
    out = TSeries.zero(params)
    ymonos = Y.monomials()
    for mx in X.monomials():
        vx = mx.val
        sx = X.terms[mx]
        for my in ymonos:
            if vx + my.val > params.V:
                continue
            prod = compose(sx, Y.terms[my])
            key = mx + my
            out.terms[key] = out.terms[key] + prod if key in out.terms else prod
    if _CHECK_GROWTH:
        out.assert_growth(base_order=params.N)
    return out


def texp(X: TSeries) -> TSeries:
    """exp(X) = sum_{k <= V} X^k / k!; requires every term of X to have val >= 1."""
    params = X.params
    zero_mono = TMono.zero(params.K)
    if zero_mono in X.terms and not X.terms[zero_mono].is_zero():
        raise ValueError("texp requires valuation >= 1 (nonzero constant term found)")
    out = TSeries.one(params)
    pw = TSeries.one(params)
    for k in range(1, params.V + 1):
        pw = tmul(pw, X)
        pw.prune()
        if not pw.terms:
            break
        out = out + pw.scale(1.0 / factorial(k))
    if _CHECK_GROWTH:
        out.assert_growth(base_order=params.N)
    return out


def ddt(X: TSeries, n: int) -> TSeries:
    """Partial derivative with respect to t_n (1-based)."""
    params = X.params
    if not 1 <= n <= params.K:
        raise ValueError(f"time index {n} outside [1, {params.K}]")
    out = TSeries.zero(params)
    for mono, sym in X.terms.items():
        e = mono[n - 1]
        if e == 0:
            continue
        lowered = list(mono)
        lowered[n - 1] = e - 1
        out.terms[TMono(lowered)] = sym.scale(float(e))
    if _CHECK_GROWTH:
        out.assert_growth(base_order=params.N)
    return out


def eval_t(X: TSeries, t) -> Symbol:
    """Evaluate the jet at a concrete time vector."""
    t = tuple(t)
    if len(t) != X.params.K:
        raise ValueError(f"time vector has {len(t)} entries, params.K = {X.params.K}")
    out = Symbol.zero(X.params)
    for mono in X.monomials():
        out = out + X.terms[mono].scale(mono.t_value(t))
    return out


def scale_h(X: TSeries, h: float) -> TSeries:
    """t_n -> h^n t_n together with xi -> h.xi: the monomial picks up h^val and
    the order-n symbol coefficient picks up h^n."""
    if h == 0:
        raise ValueError("scaling factor must be nonzero")
    out = TSeries.zero(X.params)
    for mono, sym in X.terms.items():
        out.terms[mono] = sym.scale_orders(h).scale(h**mono.val)
    return out


def tpow(X: TSeries, n: int) -> TSeries:
    if n <= 0:
        raise ValueError(f"tpow expects a positive exponent, got {n}")
    out = X.copy()
    for _ in range(n - 1):
        out = tmul(out, X)
    return out


def tinvert(X: TSeries) -> TSeries:
    """Inverse of 1 + N with val(N) >= 1, via the finite Neumann sum."""
    params = X.params
    N = X - TSeries.one(params)
    zero_mono = TMono.zero(params.K)
    if zero_mono in N.terms and not N.terms[zero_mono].is_zero():
        raise ValueError("tinvert expects a unit with constant term 1")
    out = TSeries.one(params)
    pw = TSeries.one(params)
    for _ in range(params.V):
        pw = tmul(pw, -N)
        pw.prune()
        if not pw.terms:
            break
        out = out + pw
    return out


def tcommutator(X: TSeries, Y: TSeries) -> TSeries:
    """[X, Y] with the coefficient commutators computed term-fused (the exact
    scalar k = 0 cancellation happens per monomial pair, not after two full
    Cauchy products)."""
    from .symbol import commutator as sym_commutator

    if X.params != Y.params:
        raise ValueError("series have different truncation parameters")
    params = X.params
    out = TSeries.zero(params)
    ymonos = Y.monomials()
    for mx in X.monomials():
        vx = mx.val
        sx = X.terms[mx]
        for my in ymonos:
            if vx + my.val > params.V:
                continue
            prod = sym_commutator(sx, Y.terms[my])
            key = mx + my
            out.terms[key] = out.terms[key] + prod if key in out.terms else prod
    return out


def conj_t(S: TSeries, A: Symbol) -> TSeries:
    """S o A o S^{-1} for a constant coefficient operator A.

    Evaluated as A + [S, A] o S^{-1}, which is the same element of the
    truncated algebra but never forms the large S.A products whose exact
    cancellation against A.S would otherwise dominate the rounding error.
    """
    from .symbol import commutator as sym_commutator

    lie = S.map_coeffs(lambda s: sym_commutator(s, A))
    return TSeries.constant(S.params, A) + tmul(lie, tinvert(S))


class Path:
    """Map s in [0, 1] -> TSeries with valuation >= 1 (checked on sampling)."""

    def __init__(self, fn, params: TruncParams):
        self.fn = fn
        self.params = params

    @classmethod
    def constant(cls, X: TSeries) -> "Path":
        return cls(lambda s: X, X.params)

    def __call__(self, s: float) -> TSeries:
        v = self.fn(s)
        zero_mono = TMono.zero(self.params.K)
        if zero_mono in v.terms and not v.terms[zero_mono].is_zero():
            raise ValueError(f"path has valuation-0 content at s={s}")
        return v


def product_integral(v: Path, n: int) -> TSeries:
    """Left-endpoint ordered product approximating the path exponential.

    Returns u_n(1) = prod_{i=1}^{n} (1 + (1/n) v((n-i)/n)) with later times on
    the left; for a constant path this is (1 + v/n)^n truncated, converging to
    texp(v) at rate O(1/n).
    """
    if n <= 0:
        raise ValueError("need at least one subdivision step")
    params = v.params
    out = TSeries.one(params)
    for ell in range(n):
        factor = TSeries.one(params) + v(ell / n).scale(1.0 / n)
        out = tmul(factor, out)
    return out
