"""Matrix-valued smooth functions on the circle, stored as truncated Fourier series.

A LoopFn holds the coefficients c_m of f(x) = sum_{|m| <= M} c_m e^{imx},
each c_m a complex d x d matrix.  Products are computed on a padded
collocation grid, so the retained band |m| <= M is exact (no aliasing);
modes beyond M are silently dropped.  Callers that need exact identities
must budget modes accordingly.
"""

from __future__ import annotations

import numpy as np

__all__ = ["LoopFn", "grid_size", "to_grid", "from_grid"]


def grid_size(M: int) -> int:
    """Smallest 5-smooth integer P >= 3M + 2 (alias-free product grid)."""
    n = 3 * M + 2
    while True:
        k = n
        for p in (2, 3, 5):
            while k % p == 0:
                k //= p
        if k == 1:
            return n
        n += 1


def to_grid(coeffs: np.ndarray, M: int, P: int) -> np.ndarray:
    """Evaluate Fourier coefficients on the uniform grid x_j = 2*pi*j/P.

    `coeffs` has the mode axis first (length 2M+1, index m+M); trailing
    axes pass through.
    """
    shape = (P,) + coeffs.shape[1:]
    spec = np.zeros(shape, dtype=complex)
    for m in range(-M, M + 1):
        spec[m % P] += coeffs[m + M]
    return np.fft.ifft(spec, axis=0) * P


def from_grid(values: np.ndarray, M: int, P: int) -> np.ndarray:
    """Inverse of to_grid, truncated back to |m| <= M."""
    spec = np.fft.fft(values, axis=0) / P
    out = np.empty((2 * M + 1,) + values.shape[1:], dtype=complex)
    for m in range(-M, M + 1):
        out[m + M] = spec[m % P]
    return out


class LoopFn:
    """Truncated Fourier series of a d x d matrix-valued function on S^1.

    Each instance tracks its mode support `mmax` (smallest band |m| <= mmax
    containing all nonzero coefficients).  Products and compositions mask
    their results to the combined support, so modes that are zero by
    band-limit arithmetic stay exactly zero instead of accumulating rounding
    noise that the derivative factors (im)^k would then amplify.
    """

    __slots__ = ("d", "M", "c", "real", "mmax")

    def __init__(self, d: int, M: int, c: np.ndarray | None = None, real: bool = False,
                 mmax: int | None = None):
        if d < 1 or M < 1:
            raise ValueError(f"need d >= 1 and M >= 1, got d={d}, M={M}")
        self.d = d
        self.M = M
        if c is None:
            c = np.zeros((2 * M + 1, d, d), dtype=complex)
            if mmax is None:
                mmax = 0
        else:
            c = np.asarray(c)
            # keep extended-precision coefficients; promote everything else
            c = c.copy() if c.dtype == np.clongdouble else c.astype(complex)
            if c.shape != (2 * M + 1, d, d):
                raise ValueError(f"coefficient array must have shape {(2*M+1, d, d)}, got {c.shape}")
        self.c = c
        if mmax is None:
            mmax = self._measure_support()
        self.mmax = min(int(mmax), M)
        self._mask()
        self.real = real
        if real:
            self._check_real()

    def _measure_support(self) -> int:
        nz = np.nonzero(np.any(self.c != 0, axis=(1, 2)))[0]
        if nz.size == 0:
            return 0
        return int(max(abs(nz[0] - self.M), abs(nz[-1] - self.M)))

    def _mask(self) -> None:
        if self.mmax < self.M:
            self.c[: self.M - self.mmax] = 0.0
            self.c[self.M + self.mmax + 1 :] = 0.0

    def _check_real(self, tol: float = 1e-12) -> None:
        # real-valued f satisfies c_{-m} = conj(c_m)
        err = np.max(np.abs(self.c - np.conj(self.c[::-1])))
        if err > tol:
            raise ValueError(f"coefficients violate the real-function symmetry by {err:.3e}")

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, d: int, M: int) -> "LoopFn":
        return cls(d, M)

    @classmethod
    def const(cls, d: int, M: int, value) -> "LoopFn":
        """Constant function; `value` is a scalar (times identity) or a d x d matrix."""
        f = cls(d, M)
        v = np.asarray(value, dtype=complex)
        if v.ndim == 0:
            f.c[M] = v * np.eye(d)
        else:
            f.c[M] = v.reshape(d, d)
        return f

    @classmethod
    def from_modes(cls, d: int, M: int, table: dict, real: bool = False) -> "LoopFn":
        """Build from a mode -> coefficient map (scalar entries mean multiples of Id)."""
        c = np.zeros((2 * M + 1, d, d), dtype=complex)
        support = 0
        for m, v in table.items():
            if abs(m) > M:
                raise ValueError(f"mode {m} outside cutoff M={M}")
            v = np.asarray(v, dtype=complex)
            c[m + M] = v * np.eye(d) if v.ndim == 0 else v.reshape(d, d)
            support = max(support, abs(m))
        return cls(d, M, c, real=real, mmax=support)

    @classmethod
    def cos(cls, M: int, k: int = 1, amp: float = 1.0, d: int = 1) -> "LoopFn":
        return cls.from_modes(d, M, {k: amp / 2, -k: amp / 2}, real=True)

    @classmethod
    def sin(cls, M: int, k: int = 1, amp: float = 1.0, d: int = 1) -> "LoopFn":
        return cls.from_modes(d, M, {k: amp / 2j, -k: -amp / 2j}, real=True)

    @classmethod
    def random_trig(cls, rng, M: int, max_mode: int, amp: float = 1.0, d: int = 1) -> "LoopFn":
        """Random real trigonometric polynomial with modes up to max_mode."""
        mm = min(max_mode, M)
        c = np.zeros((2 * M + 1, d, d), dtype=complex)
        for m in range(1, mm + 1):
            a = amp * (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
            c[m + M] = a
            c[-m + M] = np.conj(a)
        c[M] = amp * rng.standard_normal((d, d)) * np.eye(d)
        f = cls(d, M, c, mmax=mm)
        f.real = d == 1
        return f

    def copy(self) -> "LoopFn":
        return LoopFn(self.d, self.M, self.c, real=False, mmax=self.mmax)

    # -- arithmetic --------------------------------------------------------

    def _compatible(self, other: "LoopFn") -> None:
        if self.d != other.d or self.M != other.M:
            raise ValueError(
                f"incompatible loop functions: (d={self.d}, M={self.M}) vs (d={other.d}, M={other.M})"
            )

    def __add__(self, other: "LoopFn") -> "LoopFn":
        self._compatible(other)
        out = LoopFn(self.d, self.M, self.c + other.c, mmax=max(self.mmax, other.mmax))
        out.real = self.real and other.real
        return out

    def __sub__(self, other: "LoopFn") -> "LoopFn":
        self._compatible(other)
        out = LoopFn(self.d, self.M, self.c - other.c, mmax=max(self.mmax, other.mmax))
        out.real = self.real and other.real
        return out

    def __neg__(self) -> "LoopFn":
        out = LoopFn(self.d, self.M, -self.c, mmax=self.mmax)
        out.real = self.real
        return out

    def __mul__(self, other):
        if isinstance(other, LoopFn):
            self._compatible(other)
            if self.c.dtype == np.clongdouble or other.c.dtype == np.clongdouble:
                return self._mul_direct(other)
            P = grid_size(self.M)
            va = to_grid(self.c, self.M, P)
            vb = to_grid(other.c, other.M, P)
            out = LoopFn(
                self.d, self.M, from_grid(va @ vb, self.M, P), mmax=self.mmax + other.mmax
            )
            out.real = self.real and other.real
            return out
        out = LoopFn(self.d, self.M, self.c * other, mmax=self.mmax)
        return out

    def _mul_direct(self, other: "LoopFn") -> "LoopFn":
        # extended precision has no FFT support; convolve mode by mode
        M, d = self.M, self.d
        out = np.zeros((2 * M + 1, d, d), dtype=np.clongdouble)
        sa, sb = self.mmax, other.mmax
        for p in range(-sa, sa + 1):
            lo, hi = max(-M, -sb + p) - p, min(M, sb + p) - p
            if lo > hi:
                continue
            out[lo + p + M : hi + p + M + 1] += np.matmul(
                np.broadcast_to(self.c[p + M], (hi - lo + 1, d, d)), other.c[lo + M : hi + M + 1]
            )
        res = LoopFn(d, M, out, mmax=sa + sb)
        res.real = self.real and other.real
        return res

    def __rmul__(self, other):
        if isinstance(other, LoopFn):
            return other.__mul__(self)
        return LoopFn(self.d, self.M, other * self.c, mmax=self.mmax)

    def dx(self, k: int = 1) -> "LoopFn":
        """k-th derivative: mode m picks up (im)^k."""
        modes = np.arange(-self.M, self.M + 1)
        fac = (1j * modes) ** k
        return LoopFn(self.d, self.M, self.c * fac[:, None, None], mmax=self.mmax)

    def antideriv_zero_mean(self, tol: float = 1e-9) -> "LoopFn":
        """Antiderivative with zero mean; requires the input mean to vanish."""
        mean = np.max(np.abs(self.c[self.M]))
        if mean > tol:
            raise ValueError(f"nonzero mean {mean:.3e} exceeds tolerance {tol:.1e}")
        modes = np.arange(-self.M, self.M + 1).astype(complex)
        modes[self.M] = 1.0  # avoid 0-division; that row is zeroed below
        out = self.c / (1j * modes)[:, None, None]
        out[self.M] = 0.0
        return LoopFn(self.d, self.M, out, mmax=self.mmax)

    def shift_x(self, tau: float) -> "LoopFn":
        """Pull back by the rotation x -> x + tau."""
        modes = np.arange(-self.M, self.M + 1)
        return LoopFn(self.d, self.M, self.c * np.exp(1j * modes * tau)[:, None, None], mmax=self.mmax)

    # -- evaluation and size -----------------------------------------------

    def eval_at(self, x: float) -> np.ndarray:
        modes = np.arange(-self.M, self.M + 1)
        return np.tensordot(np.exp(1j * modes * x), self.c, axes=(0, 0))

    def mode(self, m: int) -> np.ndarray:
        if abs(m) > self.M:
            raise ValueError(f"mode {m} outside cutoff M={self.M}")
        return self.c[m + self.M].copy()

    def norm(self) -> float:
        """l2 norm of the coefficients (Frobenius per matrix)."""
        return float(np.linalg.norm(self.c))

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.c))) if self.c.size else 0.0

    def is_zero(self, tol: float = 0.0) -> bool:
        return self.norm() <= tol

    def __repr__(self) -> str:
        nz = [int(m) for m in range(-self.M, self.M + 1) if np.any(np.abs(self.c[m + self.M]) > 1e-14)]
        return f"LoopFn(d={self.d}, M={self.M}, modes={nz[:8]}{'...' if len(nz) > 8 else ''})"
