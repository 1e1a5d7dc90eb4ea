"""Graded truncated symbol calculus for operators A = sum_n a_n(x) D^n on S^1.

Conventions
-----------
xi is the symbol of D = d/dx, so xi acts on the Fourier mode e^{imx} as
multiplication by (im).  Composition follows the Leibniz expansion

    (A o B)(x, xi) = sum_{k >= 0} (eps^k / k!) d_xi^k A(x, xi) . d_x^k B(x, xi),

with eps = params.deform (1.0 for the plain product; other values give the
rescaled calculus reached by xi -> h.xi, t_n -> h^n t_n with eps = 1/h).
One coefficient function per integer order keeps the parity relation
sigma_n(x, -xi) = (-1)^n sigma_n(x, xi) automatic.

Orders below the working floor F - g are dropped everywhere; algebraic
identities are only claimed on orders >= F.  The guard band g keeps the
reported band exact through the compositions used by the solvers.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import factorial

import numpy as np

from .loopfn import LoopFn, from_grid, grid_size, to_grid

__all__ = [
    "TruncParams",
    "Symbol",
    "compose",
    "commutator",
    "split_DS",
    "power",
    "invert",
    "conj",
    "realize_matrix",
    "hs_inner",
]


@dataclass(frozen=True)
class TruncParams:
    """Shared truncation data: matrix size d, mode cutoff M, reported floor F,
    declared max base order N, valuation cap V, active times K, guard g,
    and the composition scale factor eps = deform."""

    d: int = 1
    M: int = 32
    F: int = -10
    N: int = 8
    V: int = 6
    K: int = 3
    g: int = 8
    deform: float = 1.0
    wide: bool = False

    def __post_init__(self):
        if self.d < 1 or self.M < 1:
            raise ValueError("need d >= 1 and M >= 1")
        if self.F > -1:
            raise ValueError("floor F must be <= -1")
        if self.N < 1:
            raise ValueError("ceiling N must be >= 1")
        if self.V < 1 or self.K < 1 or self.g < 0:
            raise ValueError("need V >= 1, K >= 1, g >= 0")
        if self.deform == 0.0:
            raise ValueError("deform factor must be nonzero")
        if self.wide and self.d != 1:
            raise ValueError("extended-precision mode is implemented for d = 1 only")

    @property
    def floor(self) -> int:
        """Working floor: orders below F - g are discarded."""
        return self.F - self.g

    def with_deform(self, eps: float) -> "TruncParams":
        return replace(self, deform=eps)

    def with_wide(self, wide: bool) -> "TruncParams":
        return replace(self, wide=wide)


class Symbol:
    """Finite sum a = sum_{floor <= n} a_n(x) xi^n with LoopFn coefficients."""

    __slots__ = ("params", "a")

    def __init__(self, params: TruncParams, a: dict | None = None):
        self.params = params
        self.a = {}
        if a:
            for n, f in a.items():
                self._check_coeff(n, f)
                self.a[int(n)] = f.copy()

    def _check_coeff(self, n: int, f: LoopFn) -> None:
        if n < self.params.floor:
            raise ValueError(f"order {n} below working floor {self.params.floor}")
        if f.d != self.params.d or f.M != self.params.M:
            raise ValueError("coefficient does not match params (d, M)")

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, params: TruncParams) -> "Symbol":
        return cls(params)

    @classmethod
    def identity(cls, params: TruncParams) -> "Symbol":
        return cls(params, {0: LoopFn.const(params.d, params.M, 1.0)})

    @classmethod
    def xi(cls, params: TruncParams, n: int = 1, coeff=1.0) -> "Symbol":
        """coeff * xi^n with a constant coefficient."""
        return cls(params, {n: LoopFn.const(params.d, params.M, coeff)})

    @classmethod
    def from_terms(cls, params: TruncParams, terms: dict) -> "Symbol":
        return cls(params, terms)

    def copy(self) -> "Symbol":
        return Symbol(self.params, self.a)

    # -- structure ---------------------------------------------------------

    def coeff(self, n: int) -> LoopFn:
        f = self.a.get(n)
        return f.copy() if f is not None else LoopFn.zero(self.params.d, self.params.M)

    def orders(self) -> list:
        return sorted(self.a)

    @property
    def order(self):
        """Highest order carrying a nonzero coefficient (None for the zero symbol)."""
        live = [n for n in self.a if not self.a[n].is_zero()]
        return max(live) if live else None

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(f.norm() <= tol for f in self.a.values())

    def prune(self) -> "Symbol":
        """Drop exactly-zero coefficients in place."""
        for n in [n for n, f in self.a.items() if f.is_zero()]:
            del self.a[n]
        return self

    def norm(self, floor: int | None = None) -> float:
        """l2 norm of coefficients over orders >= floor (default: reported floor F)."""
        if floor is None:
            floor = self.params.F
        return float(np.sqrt(sum(f.norm() ** 2 for n, f in self.a.items() if n >= floor)))

    def sup_norm(self) -> float:
        return max((f.sup_norm() for f in self.a.values()), default=0.0)

    def eval_sym(self, x: float, xi: complex) -> np.ndarray:
        """Total symbol value sum_n a_n(x) xi^n at a point of the cotangent fiber."""
        out = np.zeros((self.params.d, self.params.d), dtype=complex)
        for n, f in self.a.items():
            out += f.eval_at(x) * xi**n
        return out

    def _compatible(self, other: "Symbol") -> None:
        p, q = self.params, other.params
        if (p.d, p.M, p.F, p.g, p.deform, p.wide) != (q.d, q.M, q.F, q.g, q.deform, q.wide):
            raise ValueError("incompatible truncation parameters")

    def narrow(self) -> "Symbol":
        """Copy with double-precision coefficients and wide mode off."""
        params = self.params.with_wide(False)
        return Symbol(
            params,
            {n: LoopFn(f.d, f.M, f.c.astype(complex), mmax=f.mmax) for n, f in self.a.items()},
        )

    def widen(self) -> "Symbol":
        """Copy with extended-precision coefficients and wide mode on."""
        params = self.params.with_wide(True)
        return Symbol(
            params,
            {n: LoopFn(f.d, f.M, f.c.astype(np.clongdouble), mmax=f.mmax) for n, f in self.a.items()},
        )

    # -- linear operations ---------------------------------------------------

    def __add__(self, other: "Symbol") -> "Symbol":
        self._compatible(other)
        out = self.copy()
        for n, f in other.a.items():
            out.a[n] = out.a[n] + f if n in out.a else f.copy()
        return out

    def __sub__(self, other: "Symbol") -> "Symbol":
        return self + (-other)

    def __neg__(self) -> "Symbol":
        return Symbol(self.params, {n: -f for n, f in self.a.items()})

    def scale(self, c) -> "Symbol":
        return Symbol(self.params, {n: f * c for n, f in self.a.items()})

    def map_coeffs(self, fn) -> "Symbol":
        """Apply fn to every coefficient (e.g. LoopFn.dx)."""
        return Symbol(self.params, {n: fn(f) for n, f in self.a.items()})

    def mode_filter(self, mmax: int) -> "Symbol":
        """Drop coefficient modes beyond |m| = mmax (spectral cutoff)."""
        out = {}
        for n, f in self.a.items():
            out[n] = LoopFn(f.d, f.M, f.c, mmax=min(f.mmax, mmax))
        return Symbol(self.params, out)

    def scale_orders(self, h: float) -> "Symbol":
        """xi -> h.xi: order-n coefficient picks up h^n."""
        return Symbol(self.params, {n: f * (h**float(n)) for n, f in self.a.items()})

    def __mul__(self, other):
        if isinstance(other, Symbol):
            return compose(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __repr__(self) -> str:
        return f"Symbol(orders={self.orders()})"

    # -- projections ---------------------------------------------------------

    def d_part(self) -> "Symbol":
        return Symbol(self.params, {n: f for n, f in self.a.items() if n >= 0})

    def s_part(self) -> "Symbol":
        return Symbol(self.params, {n: f for n, f in self.a.items() if n <= -1})


def _is_plain_identity(A: Symbol) -> bool:
    if set(A.a) != {0}:
        return False
    c = A.a[0].c
    d, M = A.params.d, A.params.M
    ident = np.zeros_like(c)
    ident[M] = np.eye(d)
    return bool(np.array_equal(c, ident))


def compose(A: Symbol, B: Symbol) -> Symbol:
    """Leibniz composition, truncated below the working floor.

    The k-th term scales coefficients by eps^k/k! times the falling factorial
    n(n-1)...(n-k+1) of the left order, and differentiates the right
    coefficient k times.  The k sum stops once the output order n + m - k
    falls below the floor, so it is finite even for negative left orders.
    """
    A._compatible(B)
    params = A.params
    if _is_plain_identity(A):
        return B.copy()
    if _is_plain_identity(B):
        return A.copy()

    a_orders = [n for n in sorted(A.a) if not A.a[n].is_zero()]
    b_orders = [m for m in sorted(B.a) if not B.a[m].is_zero()]
    if not a_orders or not b_orders:
        return Symbol.zero(params)
    if params.d == 1:
        return _compose_scalar(A, B, a_orders, b_orders)
    return _compose_matrix(A, B, a_orders, b_orders)


def _compose_scalar(A: Symbol, B: Symbol, a_orders, b_orders, kmin: int = 0) -> Symbol:
    """d = 1 path: direct (Toeplitz) mode convolutions.

    Convolving directly keeps rounding noise local per output mode; an FFT
    round-trip would smear each row's largest coefficient across the whole
    band, and the (im)^k derivative factors of later compositions amplify
    exactly that high-mode junk.  In wide mode everything runs in extended
    precision with exact integer falling factorials.
    """
    params = A.params
    floor = params.floor
    M = params.M
    L = 2 * M + 1
    fb, nb = b_orders[0], b_orders[-1]
    na = a_orders[-1]
    kmax = max((n + nb - floor if n < 0 else min(n, n + nb - floor)) for n in a_orders)
    if kmax < 0:
        return Symbol.zero(params)

    wide = params.wide
    dt = np.clongdouble if wide else complex
    nB = nb - fb + 1
    b_modes = np.zeros((nB, L), dtype=dt)
    sb = np.zeros(nB, dtype=int)
    for m in b_orders:
        b_modes[m - fb] = B.a[m].c[:, 0, 0]
        sb[m - fb] = B.a[m].mmax
    modes = np.arange(-M, M + 1).astype(dt)
    dpow = (1j * modes) ** np.arange(kmax + 1)[:, None]  # (k, mode)
    bk = b_modes[None, :, :] * dpow[:, None, :]

    # T_n[p, q] = a_n[q - p]: right-multiplying a row stack by T_n convolves
    # each row with a_n, truncated to |q| <= M.
    shift_idx = (np.arange(L)[None, :] - np.arange(L)[:, None]) + 2 * M

    q_lo, q_hi = floor, na + nb
    out = np.zeros((q_hi - q_lo + 1, L), dtype=dt)
    support = np.full(q_hi - q_lo + 1, -1, dtype=int)
    eps = params.deform
    apad = np.zeros(4 * M + 1, dtype=dt)
    for n in a_orders:
        fn = A.a[n]
        kcap = n + nb - floor
        if n >= 0:
            kcap = min(kcap, n)
        if kcap < 0:
            continue
        # gather the valid (k, m) rows, then convolve them all with a_n
        blocks, weights, targets = [], [], []
        fall = 1
        for k in range(kcap + 1):
            if k > 0:
                fall *= n - (k - 1)
            if fall == 0:
                break
            if k < kmin:
                continue
            m_lo = max(fb, floor - n + k)
            if m_lo > nb:
                continue
            if wide:
                w = np.clongdouble(fall) * np.clongdouble(eps) ** k / np.clongdouble(factorial(k))
            else:
                w = fall * eps**k / factorial(k)
            blocks.append(bk[k, m_lo - fb :])
            weights.append(np.full(nb - m_lo + 1, w, dtype=dt))
            targets.append(np.arange(n - k + m_lo - q_lo, n - k + nb - q_lo + 1))
            rows = slice(n - k + m_lo - q_lo, n - k + nb - q_lo + 1)
            support[rows] = np.maximum(support[rows], fn.mmax + sb[m_lo - fb :])
        if not blocks:
            continue
        stack = np.concatenate(blocks)
        if wide:
            s = fn.mmax
            ker = fn.c[M - s : M + s + 1, 0, 0].astype(dt)
            conv = np.empty((stack.shape[0], L), dtype=dt)
            for r in range(stack.shape[0]):
                conv[r] = np.convolve(stack[r], ker)[s : s + L]
        else:
            apad[:] = 0.0
            apad[M : 3 * M + 1] = fn.c[:, 0, 0]
            conv = stack @ apad[shift_idx]
        conv *= np.concatenate(weights)[:, None]
        np.add.at(out, np.concatenate(targets), conv)

    terms = {}
    for q in range(q_lo, q_hi + 1):
        if support[q - q_lo] < 0:
            continue
        terms[q] = LoopFn(1, M, out[q - q_lo][:, None, None], mmax=support[q - q_lo])
    return Symbol(params, terms)


def _compose_matrix(A: Symbol, B: Symbol, a_orders, b_orders) -> Symbol:
    """d > 1 path: pointwise matrix products on a padded collocation grid."""
    params = A.params
    floor = params.floor
    d, M = params.d, params.M
    fb, nb = b_orders[0], b_orders[-1]
    na = a_orders[-1]
    kmax = max((n + nb - floor if n < 0 else min(n, n + nb - floor)) for n in a_orders)
    if kmax < 0:
        return Symbol.zero(params)

    P = grid_size(M)
    nB = nb - fb + 1
    b_modes = np.zeros((nB, 2 * M + 1, d, d), dtype=complex)
    for m in b_orders:
        b_modes[m - fb] = B.a[m].c
    dpow = (1j * np.arange(-M, M + 1)) ** np.arange(kmax + 1)[:, None]  # (k, mode)
    b_stack = b_modes[None, :, :, :, :] * dpow[:, None, :, None, None]
    b_grid = np.moveaxis(to_grid(np.moveaxis(b_stack, 2, 0), M, P), 0, 2)

    a_grid = {n: to_grid(A.a[n].c, M, P) for n in a_orders}

    sa = {n: A.a[n].mmax for n in a_orders}
    sb = np.zeros(nB, dtype=int)
    for m in b_orders:
        sb[m - fb] = B.a[m].mmax

    q_lo, q_hi = floor, na + nb
    out = np.zeros((q_hi - q_lo + 1, P, d, d), dtype=complex)
    support = np.full(q_hi - q_lo + 1, -1, dtype=int)
    eps = params.deform
    for n in a_orders:
        av = a_grid[n]
        fall = 1.0
        kcap = n + nb - floor
        if n >= 0:
            kcap = min(kcap, n)
        w = 1.0
        for k in range(kcap + 1):
            if k > 0:
                fall *= n - (k - 1)
                w = fall * eps**k / factorial(k)
            if w == 0.0:
                break
            m_lo = max(fb, floor - n + k)
            if m_lo > nb:
                continue
            rows = slice(n - k + m_lo - q_lo, n - k + nb - q_lo + 1)
            out[rows] += w * (av[None, :, :, :] @ b_grid[k, m_lo - fb :])
            support[rows] = np.maximum(support[rows], sa[n] + sb[m_lo - fb :])

    terms = {}
    for q in range(q_lo, q_hi + 1):
        if support[q - q_lo] < 0:
            continue
        coeffs = from_grid(out[q - q_lo], M, P)
        terms[q] = LoopFn(d, M, coeffs, mmax=support[q - q_lo])
    return Symbol(params, terms)


def commutator(A: Symbol, B: Symbol) -> Symbol:
    """A o B - B o A.  For scalar coefficients the k = 0 terms of the two
    products are identical pointwise products, so they are skipped rather
    than computed and cancelled; this keeps the commutator's rounding noise
    at the scale of the k >= 1 terms."""
    A._compatible(B)
    if A.params.d == 1:
        a_orders = [n for n in sorted(A.a) if not A.a[n].is_zero()]
        b_orders = [m for m in sorted(B.a) if not B.a[m].is_zero()]
        if not a_orders or not b_orders:
            return Symbol.zero(A.params)
        left = _compose_scalar(A, B, a_orders, b_orders, kmin=1)
        right = _compose_scalar(B, A, b_orders, a_orders, kmin=1)
        return left - right
    return compose(A, B) - compose(B, A)


def split_DS(A: Symbol) -> tuple:
    """(differential part: orders >= 0, smoothing-direction part: orders <= -1)."""
    return A.d_part(), A.s_part()


def power(A: Symbol, n: int) -> Symbol:
    if n <= 0:
        raise ValueError(f"power expects a positive exponent, got {n}")
    out = A.copy()
    for _ in range(n - 1):
        out = compose(out, A)
    return out


def _pointwise_inverse(f: LoopFn) -> LoopFn:
    """Multiplicative inverse of an invertible function, truncated to |m| <= M."""
    if f.mmax == 0:
        v = f.c[f.M]
        if f.d == 1:
            if abs(v[0, 0]) < 1e-12:
                raise ValueError("order-0 coefficient vanishes")
            return LoopFn.const(f.d, f.M, 1.0 / v[0, 0])
        if abs(np.linalg.det(v)) < 1e-12:
            raise ValueError("order-0 coefficient is singular")
        return LoopFn.const(f.d, f.M, np.linalg.inv(v))
    P = grid_size(f.M)
    vals = to_grid(f.c, f.M, P)
    if f.d == 1:
        mags = np.abs(vals[:, 0, 0])
        if np.min(mags) < 1e-12:
            raise ValueError("order-0 coefficient vanishes at a collocation point")
        inv = 1.0 / vals
    else:
        dets = np.abs(np.linalg.det(vals))
        if np.min(dets) < 1e-12:
            raise ValueError("order-0 coefficient is singular at a collocation point")
        inv = np.linalg.inv(vals)
    return LoopFn(f.d, f.M, from_grid(inv, f.M, P))


def invert(A: Symbol) -> Symbol:
    """Inverse of an order-0 symbol with pointwise-invertible leading coefficient.

    Writes A = a_0 (1 + a_0^{-1} A_-) and sums the Neumann series of the
    strictly-negative-order part, which is nilpotent below the floor.
    """
    params = A.params
    pos = [n for n in A.a if n > 0 and not A.a[n].is_zero()]
    if pos:
        raise ValueError(f"invert expects an order-0 symbol, found positive orders {sorted(pos)}")
    a0 = A.a.get(0)
    if a0 is None or a0.is_zero():
        raise ValueError("invert expects a nonzero order-0 coefficient")
    B0 = Symbol(params, {0: _pointwise_inverse(a0)})
    A_neg = A.s_part()
    if A_neg.is_zero():
        return B0
    R = compose(B0, A_neg)
    inv = Symbol.identity(params)
    term = Symbol.identity(params)
    for _ in range(-params.floor):
        term = compose(-R, term)
        term.prune()
        if not term.a:
            break
        inv = inv + term
    return compose(inv, B0)


def conj(S: Symbol, A: Symbol) -> Symbol:
    """Conjugation S o A o S^{-1}, evaluated as A + [S, A] o S^{-1}.

    The two expressions agree on the retained orders; the commutator form
    keeps the result's structure sharp (conjugating d/dx by an order-0
    dressing leaves the orders >= 0 untouched exactly, because the bracket
    has order <= -1)."""
    return A + compose(commutator(S, A), invert(S))


def realize_matrix(A: Symbol, Mr: int) -> np.ndarray:
    """Matrix of A on the Fourier modes m in [-Mr, Mr] \\ {0}, d x d blocks.

    The action is e^{imx} |-> sum_n a_n(x) (im)^n e^{imx}, expanded on the
    mode basis and truncated to the block.  The zero mode is projected out
    so negative powers of xi are well defined; both sides of any comparison
    must use the same realization cutoff.
    """
    params = A.params
    if Mr > params.M:
        raise ValueError(f"realization cutoff Mr={Mr} exceeds mode cutoff M={params.M}")
    d, M = params.d, params.M
    modes = np.concatenate([np.arange(-Mr, 0), np.arange(1, Mr + 1)])
    nmodes = modes.size
    diffs = modes[:, None] - modes[None, :]  # output mode minus input mode
    in_band = np.abs(diffs) <= M
    blocks = np.zeros((nmodes, nmodes, d, d), dtype=complex)
    for n, f in A.a.items():
        xi_pow = (1j * modes.astype(complex)) ** n  # per input mode
        cpad = np.zeros((4 * M + 1, d, d), dtype=complex)
        cpad[M : 3 * M + 1] = f.c.astype(complex)
        conv = cpad[np.where(in_band, diffs + 2 * M, 0)]
        conv[~in_band] = 0.0
        blocks += conv * xi_pow[None, :, None, None]
    return blocks.transpose(0, 2, 1, 3).reshape(nmodes * d, nmodes * d)


def hs_inner(A: Symbol, B: Symbol, Mr: int) -> complex:
    """Frobenius inner product trace(realize(A) realize(B)^H).

    Meaningful as a Hilbert-Schmidt pairing for symbols of order <= -1;
    warns otherwise, because non-smoothing orders make the value dominated
    by the realization cutoff.
    """
    for name, X in (("left", A), ("right", B)):
        top = X.order
        if top is not None and top > -1:
            import warnings

            warnings.warn(f"hs_inner: {name} symbol has order {top} > -1; the pairing is cutoff-dominated")
    Ra = realize_matrix(A, Mr)
    Rb = realize_matrix(B, Mr)
    return complex(np.trace(Ra @ Rb.conj().T))
