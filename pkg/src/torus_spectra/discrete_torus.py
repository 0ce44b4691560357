"""Spectrum, heat trace and spanning-tree counts of discrete tori Z/n_1 x ... x Z/n_d.

Eigenvalues are ``2d - 2 sum_j cos(2 pi k_j / n_j)``, evaluated in the
cancellation-free form ``4 sum_j sin^2(pi k_j / n_j)`` so that the small
eigenvalues near the zero mode keep full relative accuracy.

Full-spectrum reductions (trace, log-product, zeta) stream the eigenvalues in
lexicographic blocks and never hold more than one block in memory.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Sequence

import gmpy2
import numpy as np

from .special_functions import bessel_i_e

DEFAULT_BLOCK = 1 << 18
EXACT_CAP = 4096


class ExactCapExceeded(ValueError):
    """Exact spanning-tree counting was asked for a graph above the vertex cap."""


@dataclass(frozen=True)
class DiscreteTorus:
    dims: tuple[int, ...]

    def __init__(self, dims: Sequence[int]):
        dims = tuple(int(n) for n in dims)
        if len(dims) < 1:
            raise ValueError("a torus needs at least one dimension")
        if any(n < 1 for n in dims):
            raise ValueError(f"cycle orders must be >= 1, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def d(self) -> int:
        return len(self.dims)

    @property
    def volume(self) -> int:
        return math.prod(self.dims)

    def require_graph(self) -> None:
        if any(n < 2 for n in self.dims):
            raise ValueError("graph operations need every cycle order >= 2")

    def cycle_eigenvalues(self, j: int) -> np.ndarray:
        n = self.dims[j]
        return 4.0 * np.sin(np.pi * np.arange(n) / n) ** 2


def cycle_eigenvalues(n: int) -> np.ndarray:
    return 4.0 * np.sin(np.pi * np.arange(n) / n) ** 2


# ---------------------------------------------------------------------------
# Streaming spectrum
# ---------------------------------------------------------------------------


class EigenvalueStream:
    """Lexicographic stream of the V(N) Laplacian eigenvalues.

    Index ``K`` runs over ``range(V)`` in row-major order of ``(k_1, ..., k_d)``;
    the zero eigenvalue is at ``K = 0``.
    """

    def __init__(self, torus: DiscreteTorus, start: int = 0, stop: int | None = None,
                 block: int = DEFAULT_BLOCK):
        self.torus = torus
        self.start = start
        self.stop = torus.volume if stop is None else stop
        self.block = block
        self._factors = [cycle_eigenvalues(n) for n in torus.dims]

    def __len__(self) -> int:
        return self.stop - self.start

    def blocks(self) -> Iterator[tuple[int, np.ndarray]]:
        """Yield ``(first_index, eigenvalues)`` chunks in index order."""
        dims = self.torus.dims
        for lo in range(self.start, self.stop, self.block):
            hi = min(lo + self.block, self.stop)
            idx = np.unravel_index(np.arange(lo, hi), dims)
            lam = np.zeros(hi - lo)
            for fac, k in zip(self._factors, idx):
                lam += fac[k]
            yield lo, lam

    def __iter__(self) -> Iterator[float]:
        for _, lam in self.blocks():
            yield from lam.tolist()

    def partition(self, parts: int) -> list["EigenvalueStream"]:
        """Split into contiguous disjoint index ranges."""
        edges = np.linspace(self.start, self.stop, parts + 1).round().astype(int)
        return [EigenvalueStream(self.torus, int(a), int(b), self.block)
                for a, b in zip(edges[:-1], edges[1:]) if b > a]


def spectrum(torus: DiscreteTorus) -> EigenvalueStream:
    return EigenvalueStream(torus)


class _Kahan:
    __slots__ = ("s", "c")

    def __init__(self):
        self.s = 0.0
        self.c = 0.0

    def add(self, x):
        y = x - self.c
        t = self.s + y
        self.c = (t - self.s) - y
        self.s = t


def _stream_reduce(torus: DiscreteTorus, block_fn, threads: int = 1, complex_out: bool = False):
    """Compensated sum of ``block_fn(first_index, eigenvalues)`` over the stream.

    Each block is reduced with ``math.fsum``; block partials are then combined
    in index order, so the result does not depend on ``threads``.
    """
    stream = spectrum(torus)

    def reduce_block(item):
        lo, lam = item
        vals = block_fn(lo, lam)
        if complex_out:
            return complex(math.fsum(vals.real), math.fsum(vals.imag))
        return math.fsum(vals)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            partials = list(pool.map(reduce_block, stream.blocks()))
    else:
        partials = [reduce_block(item) for item in stream.blocks()]
    if complex_out:
        re, im = _Kahan(), _Kahan()
        for p in partials:
            re.add(p.real)
            im.add(p.imag)
        return complex(re.s, im.s)
    acc = _Kahan()
    for p in partials:
        acc.add(p)
    return acc.s


def _drop_zero(lo: int, lam: np.ndarray) -> np.ndarray:
    return lam[1:] if lo == 0 else lam


# ---------------------------------------------------------------------------
# Heat trace
# ---------------------------------------------------------------------------


def theta_spectral(torus: DiscreteTorus, t: float, threads: int = 1) -> float:
    """Heat trace ``sum_K exp(-Lambda_K t)`` by a compensated sum over the full spectrum."""
    if not t > 0:
        raise ValueError("t must be positive")
    return _stream_reduce(torus, lambda lo, lam: np.exp(-lam * t), threads)


def cycle_theta(n: int, t) -> np.ndarray:
    """Heat trace of the n-cycle, vectorized over t."""
    t = np.asarray(t, dtype=float)
    lam = cycle_eigenvalues(n)
    return np.exp(-np.multiply.outer(t, lam)).sum(axis=-1)


def cycle_theta_excess(n: int, t) -> np.ndarray:
    """``theta_n(t) - 1`` without cancellation, vectorized over t."""
    t = np.asarray(t, dtype=float)
    lam = cycle_eigenvalues(n)[1:]
    return np.exp(-np.multiply.outer(t, lam)).sum(axis=-1)


def _bessel_shell_count(n: int, t: np.ndarray, rel_tol: float) -> int:
    """Number of shells k >= 1 so the dropped part of 2 sum_k b(nk) is below rel_tol * b(0).

    Uses sqrt(2t) e^{-2t} I_x(2t) <= (2t/(2t+x))^{x/2} and the fact that this
    majorant decays faster than geometrically, so the dropped tail is at most
    the first dropped term over (1 - r) with r the ratio of successive terms.
    """
    tt = float(np.max(t))
    b0 = float(bessel_i_e(0, 2.0 * tt))
    scale = 1.0 / (math.sqrt(2.0 * tt) * b0)
    # the tail bound is evaluated at the largest t, which dominates
    k = 1
    while True:
        x = n * k
        cur = math.exp(-0.5 * x * math.log1p(x / (2.0 * tt)))
        nxt_x = n * (k + 1)
        nxt = math.exp(-0.5 * nxt_x * math.log1p(nxt_x / (2.0 * tt)))
        r = nxt / cur if cur > 0 else 0.0
        if r < 1.0 and 2.0 * scale * cur / (1.0 - r) <= rel_tol:
            return k - 1
        k += 1


def cycle_bessel_excess(n: int, t, rel_tol: float = 1e-17) -> np.ndarray:
    """``eps_n(t) = 2 sum_{k>=1} b(nk) / b(0)`` with ``b(x) = e^{-2t} I_x(2t)``.

    The n-cycle heat trace is ``n b(0) (1 + eps_n(t))``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    b0 = bessel_i_e(0, 2.0 * t)
    shells = _bessel_shell_count(n, t, rel_tol)
    if shells == 0:
        return np.zeros_like(t)
    ks = n * np.arange(1, shells + 1)
    terms = bessel_i_e(ks[None, :], 2.0 * t[:, None])
    return 2.0 * terms.sum(axis=1) / b0


def theta_bessel(torus: DiscreteTorus, t: float, tol: float = 1e-12) -> float:
    """Heat trace from the Bessel lattice sum ``prod_j n_j sum_k e^{-2t} I_{n_j k}(2t)``."""
    if not t > 0:
        raise ValueError("t must be positive")
    V = torus.volume
    # a relative error delta in each factor gives about d*delta*theta <= d*delta*V
    rel = tol / (2.0 * torus.d * V)
    b0 = float(bessel_i_e(0, 2.0 * t))
    log_prod = 0.0
    for n in torus.dims:
        eps = float(cycle_bessel_excess(n, t, rel)[0])
        log_prod += math.log1p(eps)
    return V * b0 ** torus.d * math.exp(log_prod)


def theta_minus_gaussian(torus: DiscreteTorus, t) -> np.ndarray:
    """``theta_N(t) - V (e^{-2t} I_0(2t))^d`` vectorized over t, computed in fused form."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    b0 = bessel_i_e(0, 2.0 * t)
    acc = np.zeros_like(t)
    for n in torus.dims:
        acc += np.log1p(cycle_bessel_excess(n, t))
    return torus.volume * b0 ** torus.d * np.expm1(acc)


def theta_excess(torus: DiscreteTorus, t) -> np.ndarray:
    """``theta_N(t) - 1`` vectorized over t, from the separable spectral form."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    acc = np.zeros_like(t)
    for n in torus.dims:
        acc += np.log1p(cycle_theta_excess(n, t))
    return np.expm1(acc)


def heat_kernel_cycle(n: int, t: float, x: int) -> float:
    """Heat kernel of the n-cycle: ``(1/n) sum_k exp(-lambda_k t + 2 pi i k x / n)``."""
    if n < 1 or not t > 0:
        raise ValueError("need n >= 1 and t > 0")
    k = np.arange(n)
    terms = np.exp(-cycle_eigenvalues(n) * t + 2j * np.pi * k * (x % n) / n)
    total = complex(math.fsum(terms.real), math.fsum(terms.imag)) / n
    assert abs(total.imag) <= 1e-14, f"heat kernel imaginary part {total.imag}"
    return total.real


def heat_kernel_cycle_bessel(n: int, t: float, x: int, tol: float = 1e-17) -> float:
    """Same kernel as a periodized Bessel kernel ``e^{-2t} sum_j I_{x+jn}(2t)``."""
    x = x % n
    total = float(bessel_i_e(x, 2.0 * t))
    j = 1
    while True:
        a = float(bessel_i_e(x + j * n, 2.0 * t))
        b = float(bessel_i_e(x - j * n, 2.0 * t))
        total += a + b
        if a + b <= tol * total:
            return total
        j += 1


# ---------------------------------------------------------------------------
# Log-determinant, zeta, log-product
# ---------------------------------------------------------------------------


def log_det_star(torus: DiscreteTorus, threads: int = 1) -> float:
    """``sum_{Lambda != 0} log Lambda`` over the streamed spectrum."""
    if torus.volume < 2:
        raise ValueError("the trivial torus has no nonzero eigenvalue")
    if torus.d > 1:
        torus.require_graph()
    return _stream_reduce(torus, lambda lo, lam: np.log(_drop_zero(lo, lam)), threads)


def spectral_zeta_discrete(torus: DiscreteTorus, w: complex, threads: int = 1) -> complex:
    """``sum_{Lambda != 0} Lambda^{-w}``."""
    w = complex(w)
    if w.real <= 0:
        raise ValueError("need Re(w) > 0")
    if w.imag == 0:
        wr = w.real
        return _stream_reduce(torus, lambda lo, lam: _drop_zero(lo, lam) ** (-wr), threads)
    return _stream_reduce(torus, lambda lo, lam: np.exp(-w * np.log(_drop_zero(lo, lam))),
                          threads, complex_out=True)


class BranchError(ValueError):
    """``s^2 + Lambda`` hit the branch cut of the logarithm."""


def epstein_hurwitz_log_product(torus: DiscreteTorus, s: complex, threads: int = 1) -> complex:
    """``sum_{Lambda != 0} log(s^2 + Lambda)`` (principal branch)."""
    s2 = complex(s) ** 2
    if s2.real <= 0 and s2 != 0:
        raise ValueError("need Re(s^2) > 0")
    if s2.imag == 0:
        if s2.real == 0:
            return log_det_star(torus, threads)
        return _stream_reduce(torus, lambda lo, lam: np.log(s2.real + _drop_zero(lo, lam)), threads)

    def block(lo, lam):
        z = s2 + _drop_zero(lo, lam)
        if np.any((z.imag == 0) & (z.real <= 0)):
            raise BranchError("s^2 + Lambda on the negative real axis")
        return np.log(z)

    return _stream_reduce(torus, block, threads, complex_out=True)


# ---------------------------------------------------------------------------
# Exact spanning-tree counts
# ---------------------------------------------------------------------------


def laplacian_matrix(torus: DiscreteTorus) -> np.ndarray:
    """Integer Laplacian ``sum_j (2 f(x) - f(x + e_j) - f(x - e_j))``; order-2 cycles give doubled edges."""
    torus.require_graph()
    dims = torus.dims
    V = torus.volume
    L = np.zeros((V, V), dtype=np.int64)
    coords = np.array(np.unravel_index(np.arange(V), dims)).T
    for j, n in enumerate(dims):
        for step in (1, -1):
            nb = coords.copy()
            nb[:, j] = (nb[:, j] + step) % n
            idx = np.ravel_multi_index(nb.T, dims)
            np.add.at(L, (np.arange(V), idx), -1)
        L[np.arange(V), np.arange(V)] += 2
    return L


def bareiss_determinant(M) -> int:
    """Exact determinant of an integer matrix by fraction-free elimination."""
    A = [[int(v) for v in row] for row in np.asarray(M, dtype=object)]
    n = len(A)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for r in range(k + 1, n):
                if A[r][k] != 0:
                    A[k], A[r] = A[r], A[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = A[k][k]
        rowk = A[k]
        for i in range(k + 1, n):
            rowi = A[i]
            aik = rowi[k]
            for j in range(k + 1, n):
                rowi[j] = (akk * rowi[j] - aik * rowk[j]) // prev
            rowi[k] = 0
        prev = akk
    return sign * A[n - 1][n - 1]


def _fold_order(n: int) -> list[int]:
    # 0, n-1, 1, n-2, ... puts cycle neighbours within distance 2 of each other
    out = []
    lo, hi = 0, n - 1
    while lo <= hi:
        out.append(lo)
        if hi != lo:
            out.append(hi)
        lo += 1
        hi -= 1
    return out


def _banded_ordering(dims: tuple[int, ...]) -> np.ndarray:
    """Vertex permutation giving the reduced Laplacian a small bandwidth."""
    order_axes = sorted(range(len(dims)), key=lambda j: dims[j])  # largest cycle varies slowest
    pos = [np.empty(n, dtype=np.int64) for n in dims]
    for j, n in enumerate(dims):
        pos[j][_fold_order(n)] = np.arange(n)
    V = math.prod(dims)
    coords = np.unravel_index(np.arange(V), dims)
    key = np.zeros(V, dtype=np.int64)
    mult = 1
    for j in order_axes:
        key += pos[j][coords[j]] * mult
        mult *= dims[j]
    return np.argsort(key, kind="stable")


def _banded_bareiss(A: np.ndarray, bw: int) -> int:
    """Bareiss determinant of a symmetric positive-definite integer band matrix.

    No pivoting is needed (all leading minors are positive). Entries outside
    the band stay zero, and Bareiss' identity means an original entry a_ij that
    enters the elimination at step k is simply p_{k} * a_ij, where p_k is the
    previous pivot; so only a sliding (bw+1)-square window is kept. The window
    is an object array of gmpy2 integers so each step is one vectorized update.
    """
    n = A.shape[0]
    if n == 0:
        return 1
    w = bw + 1
    zero = gmpy2.mpz(0)

    def blank():
        out = np.empty((w, w), dtype=object)
        out.fill(zero)
        return out

    win = blank()
    m0 = min(w, n)
    win[:m0, :m0] = [[gmpy2.mpz(int(v)) for v in row] for row in A[:m0, :m0]]
    prev = gmpy2.mpz(1)
    for k in range(n - 1):
        akk = win[0, 0]
        if akk == 0:
            raise ArithmeticError("zero pivot in banded elimination")
        m = min(w, n - k)
        col = win[1:m, 0]
        sub = win[1:m, 1:m] * akk
        rows = np.nonzero(col != 0)[0]
        if rows.size:
            sub[rows] -= np.multiply.outer(col[rows], win[0, 1:m])
        sub //= prev
        # slide the window by one; the new row/column k + w enters scaled by akk
        nxt = blank()
        nxt[:m - 1, :m - 1] = sub
        idx = k + w
        if idx < n:
            nxt[w - 1, :w - 1] = [akk * int(v) for v in A[idx, k + 1:idx]]
            nxt[:w - 1, w - 1] = [akk * int(v) for v in A[k + 1:idx, idx]]
            nxt[w - 1, w - 1] = akk * int(A[idx, idx])
        win = nxt
        prev = akk
    return int(win[0, 0])


def spanning_trees_exact(torus: DiscreteTorus, cap: int = EXACT_CAP, check: bool = True) -> int:
    """Number of spanning trees via an exact determinant of the reduced Laplacian."""
    torus.require_graph()
    V = torus.volume
    if V > cap:
        raise ExactCapExceeded(
            f"V(N) = {V} exceeds the exact-mode cap {cap}; use log_det_star for the floating path"
        )
    if torus.d == 1:
        count = torus.dims[0]
    else:
        L = laplacian_matrix(torus)
        perm = _banded_ordering(torus.dims)
        P = L[np.ix_(perm, perm)]
        # delete the row and column of the first vertex in the new order
        R = P[1:, 1:]
        nz = np.nonzero(R)
        bw = int(np.max(np.abs(nz[0] - nz[1]))) if nz[0].size else 0
        count = _banded_bareiss(R, bw)
    if check and V >= 2:
        float_log = log_det_star(torus) - math.log(V)
        exact_log = math.log(count)
        # the float path carries roughly V ulps of relative error in the log
        assert abs(float_log - exact_log) <= 1e-12 * max(1.0, abs(exact_log)) + V * 1e-15, (
            f"exact count disagrees with eigenvalue product: {exact_log} vs {float_log}"
        )
    return count
