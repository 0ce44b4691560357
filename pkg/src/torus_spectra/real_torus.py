"""Heat trace, spectral zeta and regularized determinant of diagonal real tori.

The torus is ``A Z^d \\ R^d`` with ``A = diag(alpha_1, ..., alpha_d)``; its
Laplacian eigenvalues are ``(2 pi)^2 sum_j (m_j / alpha_j)^2`` for ``m`` in Z^d.

The heat trace factorizes over coordinates. Each one-dimensional factor is
evaluated in whichever of its two Poisson-dual forms converges fastest, and the
two quantities needed by the zeta continuation, ``Theta - 1`` and
``Theta - V (4 pi t)^{-d/2}``, are assembled from per-factor excesses so that
neither suffers cancellation.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .quadrature import ExponentialDecay, QuadratureResult, combine_integrals, integrate, reported_as
from .special_functions import EULER_GAMMA, LOG_2PI, digamma_half_integer, gamma, rgamma

_TERMS = np.arange(1, 9)
DEFAULT_TOL = 1e-13
# large continuation pieces (negative w) cannot be resolved below a few dozen ulps
REL_TOL = 32.0 * np.finfo(float).eps


class PoleError(ValueError):
    """The spectral zeta function was evaluated at its pole w = d/2."""


@dataclass(frozen=True)
class RealTorusDiag:
    alphas: tuple[float, ...]

    def __init__(self, alphas: Sequence[float]):
        alphas = tuple(float(a) for a in alphas)
        if len(alphas) < 1:
            raise ValueError("a torus needs at least one dimension")
        if any(not a > 0 or not math.isfinite(a) for a in alphas):
            raise ValueError(f"alphas must be positive and finite, got {alphas}")
        object.__setattr__(self, "alphas", alphas)

    @property
    def d(self) -> int:
        return len(self.alphas)

    @property
    def volume(self) -> float:
        return math.prod(self.alphas)

    @property
    def first_eigenvalue(self) -> float:
        return (2.0 * math.pi / max(self.alphas)) ** 2

    def heat_lead(self, t):
        """Small-time leading term ``V (4 pi t)^{-d/2}``."""
        return self.volume * (4.0 * math.pi * np.asarray(t, dtype=float)) ** (-self.d / 2.0)


# ---------------------------------------------------------------------------
# Heat trace
# ---------------------------------------------------------------------------


def _factor_excesses(alpha: float, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(theta - 1, theta / lead - 1)`` for one circle of length alpha.

    Here ``theta = sum_m exp(-x m^2)`` with ``x = 4 pi^2 t / alpha^2`` and
    ``lead = sqrt(pi / x)``. For ``x >= pi`` the direct sum converges fastest;
    otherwise its Poisson dual ``lead * sum_k exp(-pi^2 k^2 / x)`` does. Eight
    terms leave a remainder below exp(-64 pi) in either case.
    """
    x = 4.0 * math.pi ** 2 * t / alpha ** 2
    direct = x >= math.pi
    ex1 = np.empty_like(x)
    ex2 = np.empty_like(x)
    xd = x[direct]
    if xd.size:
        s = 2.0 * np.exp(-np.multiply.outer(xd, _TERMS ** 2)).sum(axis=1)
        ex1[direct] = s
        ex2[direct] = np.sqrt(xd / math.pi) * (1.0 + s) - 1.0
    xp = x[~direct]
    if xp.size:
        s = 2.0 * np.exp(-np.multiply.outer(math.pi ** 2 / xp, _TERMS ** 2)).sum(axis=1)
        ex2[~direct] = s
        ex1[~direct] = np.sqrt(math.pi / xp) * (1.0 + s) - 1.0
    return ex1, ex2


def theta_excess_pair(torus: RealTorusDiag, t) -> tuple[np.ndarray, np.ndarray]:
    """``(Theta(t) - 1, Theta(t) - V (4 pi t)^{-d/2})`` vectorized over t."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    acc1 = np.zeros_like(t)
    acc2 = np.zeros_like(t)
    for a in torus.alphas:
        e1, e2 = _factor_excesses(a, t)
        acc1 += np.log1p(e1)
        acc2 += np.log1p(e2)
    return np.expm1(acc1), torus.heat_lead(t) * np.expm1(acc2)


def theta_real(torus: RealTorusDiag, t: float, tol: float = 1e-14) -> float:
    """Heat trace ``Theta_A(t) = sum_m exp(-(2 pi)^2 t sum_j (m_j / alpha_j)^2)``."""
    if not t > 0:
        raise ValueError("t must be positive")
    ex1, _ = theta_excess_pair(torus, t)
    return 1.0 + float(ex1[0])


def _gaussian_sum(c: float, tol: float) -> float:
    """``sum_{m in Z} exp(-c m^2)`` truncated once the remaining tail is below tol."""
    total = 1.0
    m = 1
    while True:
        term = 2.0 * math.exp(-c * m * m)
        total += term
        # the tail after m is below term * exp(-c(2m+1)) / (1 - exp(-2c))
        if term * math.exp(-c * (2 * m + 1)) / -math.expm1(-2.0 * c) <= tol * total:
            return total
        m += 1


def theta_real_spectral(torus: RealTorusDiag, t: float, tol: float = 1e-14) -> float:
    """Heat trace from the eigenvalue sum only."""
    return math.prod(_gaussian_sum(4.0 * math.pi ** 2 * t / a ** 2, tol / torus.d) for a in torus.alphas)


def theta_real_dual(torus: RealTorusDiag, t: float, tol: float = 1e-14) -> float:
    """Heat trace from the periodized Euclidean heat kernel ``V (4 pi t)^{-d/2} sum_k exp(-|A k|^2 / 4t)``."""
    lead = float(torus.heat_lead(t))
    return lead * math.prod(_gaussian_sum(a * a / (4.0 * t), tol / torus.d) for a in torus.alphas)


# ---------------------------------------------------------------------------
# Spectral zeta function
# ---------------------------------------------------------------------------


def _small_time_piece(torus: RealTorusDiag, w: complex, tol: float) -> QuadratureResult:
    """``int_0^1 (Theta - V (4 pi t)^{-d/2}) t^w dt/t``."""
    def f(t):
        return theta_excess_pair(torus, t)[1] * t ** w

    return integrate(f, upper=1.0, abs_tol=tol, rel_tol=REL_TOL, small_t_power=1.0)


def _large_time_piece(torus: RealTorusDiag, w: complex, tol: float) -> QuadratureResult:
    """``int_1^oo (Theta - 1) t^w dt/t``."""
    lam = torus.first_eigenvalue
    rw = max(complex(w).real, 0.0)
    # t^w e^{-lam t / 2} <= (2 rw / (e lam))^rw
    bound = 4.0 * torus.d * max(1.0, (2.0 * rw / (math.e * lam)) ** rw)

    def f(t):
        return theta_excess_pair(torus, t)[0] * t ** w

    return integrate(f, lower=1.0, abs_tol=tol, rel_tol=REL_TOL,
                     tail_model=ExponentialDecay(rate=0.5 * lam, bound=bound))


def _pole_free_part(torus: RealTorusDiag, w: complex, tol: float, shift: complex = 0.0) -> QuadratureResult:
    """``(small + large) / Gamma(w) - 1 / Gamma(w + 1) + shift``."""
    w = complex(w) if isinstance(w, complex) else float(w)
    rg = rgamma(w)
    return combine_integrals(
        [lambda: _small_time_piece(torus, w, tol), lambda: _large_time_piece(torus, w, tol)],
        lambda small, large: rg * (small + large) - rgamma(w + 1) + shift, [rg, rg])


def zeta_real_estimate(torus: RealTorusDiag, w: complex, tol: float = DEFAULT_TOL) -> QuadratureResult:
    """:func:`zeta_real` together with its quadrature error estimate."""
    a = torus.d / 2.0
    if complex(w) == a:
        raise PoleError(f"zeta_A has a simple pole at w = {a}")
    pole = torus.volume * (4.0 * math.pi) ** (-a) / (w - a) * rgamma(w)
    return _pole_free_part(torus, w, tol, shift=pole)


def zeta_real(torus: RealTorusDiag, w: complex, tol: float = DEFAULT_TOL) -> complex:
    """Spectral zeta ``sum_{m != 0} lambda_m^{-w}``, meromorphically continued.

    Split at t = 1, the Mellin transform of ``Theta - 1`` becomes
    ``(1/Gamma(w)) [small-time integral + V (4 pi)^{-d/2} / (w - d/2)] - 1/Gamma(w+1)
    + (1/Gamma(w)) large-time integral``, valid for every w except d/2.
    """
    return zeta_real_estimate(torus, w, tol).value


def zeta_real_ct_at_pole_estimate(torus: RealTorusDiag, tol: float = DEFAULT_TOL) -> QuadratureResult:
    """:func:`zeta_real_ct_at_pole` together with its quadrature error estimate."""
    res = _pole_free_part(torus, torus.d / 2.0, tol)
    res.value = float(np.real(res.value))
    return res


def zeta_real_ct_at_pole(torus: RealTorusDiag, tol: float = DEFAULT_TOL) -> float:
    """``lim_{w -> d/2} (zeta_A(w) - V (4 pi)^{-d/2} / ((w - d/2) Gamma(w)))``."""
    return zeta_real_ct_at_pole_estimate(torus, tol).value


def laurent_constant_term(torus: RealTorusDiag, tol: float = DEFAULT_TOL) -> float:
    """Constant coefficient of the Laurent expansion of zeta_A at w = d/2.

    Differs from :func:`zeta_real_ct_at_pole` by ``-V (4 pi)^{-d/2} psi(d/2) / Gamma(d/2)``,
    the contribution of expanding ``1/Gamma(w)`` about the pole.
    """
    a = torus.d / 2.0
    shift = torus.volume * (4.0 * math.pi) ** (-a) * digamma_half_integer(a) / gamma(a)
    with reported_as(lambda v: v - shift):
        return zeta_real_ct_at_pole(torus, tol) - shift


def log_det_star_real_estimate(torus: RealTorusDiag, tol: float = DEFAULT_TOL) -> QuadratureResult:
    """``-zeta_A'(0)`` together with its quadrature error estimate.

    Expanding ``1/Gamma(w) = w + gamma w^2 + ...`` and ``1/Gamma(w+1) = 1 + gamma w + ...``
    about w = 0 gives ``zeta_A'(0) = small - gamma - (2/d) V (4 pi)^{-d/2} + large``.
    """
    d = torus.d
    const = -EULER_GAMMA - (2.0 / d) * torus.volume * (4.0 * math.pi) ** (-d / 2.0)
    return combine_integrals(
        [lambda: _small_time_piece(torus, 0.0, tol), lambda: _large_time_piece(torus, 0.0, tol)],
        lambda small, large: -float(np.real(small + const + large)), [1.0, 1.0])


def zeta_real_derivative_at_zero(torus: RealTorusDiag, tol: float = DEFAULT_TOL) -> float:
    """``zeta_A'(0)`` from the Taylor expansion of the continuation at w = 0."""
    with reported_as(lambda v: -v):
        return -log_det_star_real_estimate(torus, tol).value


def log_det_star_real(torus: RealTorusDiag, tol: float = DEFAULT_TOL) -> float:
    """Zeta-regularized ``log det* Delta_A = -zeta_A'(0)``."""
    return log_det_star_real_estimate(torus, tol).value


def zeta_real_direct(torus: RealTorusDiag, w: float, radius: int) -> float:
    """Truncated Dirichlet sum over ``|m_j| <= radius`` (brute force, for Re(w) > d/2)."""
    grids = np.meshgrid(*[np.arange(-radius, radius + 1) / a for a in torus.alphas], indexing="ij")
    q = sum(g ** 2 for g in grids).ravel()
    q = q[q > 0]
    return math.fsum(((2.0 * math.pi) ** 2 * q) ** (-w))


# ---------------------------------------------------------------------------
# Epstein zeta
# ---------------------------------------------------------------------------


def epstein_zeta_diag(q: Sequence[float], s: complex, tol: float = DEFAULT_TOL) -> complex:
    """``Z(s, Q) = sum_{m != 0} (sum_j q_j m_j^2)^{-s}`` for diagonal positive Q."""
    q = [float(v) for v in q]
    if any(v <= 0 for v in q):
        raise ValueError("Q must be positive definite")
    torus = RealTorusDiag([v ** -0.5 for v in q])
    s_c = complex(s)
    scale = cmath.exp(2.0 * s_c * math.log(2.0 * math.pi))
    with reported_as(lambda v: scale * v, abs(scale)):
        val = scale * zeta_real(torus, s, tol)
    if isinstance(s, (int, float)):
        return float(np.real(val))
    return val


def epstein_functional_residual(q: Sequence[float], s: complex, tol: float = DEFAULT_TOL) -> float:
    """``|pi^{-s} Gamma(s) Z(s, Q^{-1}) - det(Q)^{1/2} pi^{s - d/2} Gamma(d/2 - s) Z(d/2 - s, Q)|``."""
    d = len(q)
    q_inv = [1.0 / v for v in q]
    det_sqrt = math.sqrt(math.prod(q))
    s_c = complex(s)
    lhs = cmath.exp(-s_c * math.log(math.pi)) * gamma(s_c) * epstein_zeta_diag(q_inv, s_c, tol)
    rhs = (det_sqrt * cmath.exp((s_c - d / 2.0) * math.log(math.pi)) * gamma(d / 2.0 - s_c)
           * epstein_zeta_diag(q, d / 2.0 - s_c, tol))
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# Dedekind eta and the d = 2 determinant
# ---------------------------------------------------------------------------


def log_dedekind_eta(y: float) -> float:
    """``log eta(iy) = -pi y / 12 + sum_{n>=1} log(1 - e^{-2 pi n y})``."""
    if not y > 0:
        raise ValueError("y must be positive")
    terms = []
    n = 1
    while True:
        q = math.exp(-2.0 * math.pi * n * y)
        if q < 1e-17:
            break
        terms.append(math.log1p(-q))
        n += 1
    return -math.pi * y / 12.0 + math.fsum(terms)


def dedekind_eta(y: float) -> float:
    """Dedekind eta on the imaginary axis, ``eta(iy)``, by its infinite product."""
    return math.exp(log_dedekind_eta(y))


def kronecker_limit_d2(alpha1: float, alpha2: float) -> float:
    """``log(alpha1 alpha2) + log(y |eta(iy)|^4)`` with ``y = alpha2 / alpha1``."""
    if not (alpha1 > 0 and alpha2 > 0):
        raise ValueError("alphas must be positive")
    y = alpha2 / alpha1
    return math.log(alpha1 * alpha2) + math.log(y) + 4.0 * log_dedekind_eta(y)


def epstein_derivative_at_zero(q: Sequence[float], tol: float = DEFAULT_TOL) -> float:
    """``Z'(0, Q)`` for diagonal Q through the heat-trace formula for ``zeta_A'(0)``."""
    torus = RealTorusDiag([float(v) ** -0.5 for v in q])
    # Z(s, Q) = (2 pi)^{2s} zeta_A(s) and zeta_A(0) = -1
    return -2.0 * LOG_2PI + zeta_real_derivative_at_zero(torus, tol)


def kronecker_limit_diag(q: Sequence[float], tol: float = DEFAULT_TOL) -> float:
    """``Z'(0, Q)`` for diagonal Q of rank d >= 2 by splitting off the first coordinate.

    With ``y = 1 / q_1`` and ``Y = diag(q_2, ..., q_d)``,

        Z'(0, Q) = -log((2 pi)^2 y) - 2 pi sqrt(y) Z(-1/2, Y)
                   - 2 sum_{m in Z^{d-1}, m != 0} log(1 - exp(-2 pi sqrt(y Y[m]))).

    The first term is the m' = 0 row, the second the Poisson zero mode of every
    other row and the product the remaining Bessel-K_{1/2} modes.
    """
    q = [float(v) for v in q]
    if len(q) < 2 or any(v <= 0 for v in q):
        raise ValueError("need a positive diagonal of length >= 2")
    y = 1.0 / q[0]
    Y = q[1:]
    # exp(-2 pi sqrt(y Y[m])) < e^{-45} outside this box
    radius = int(math.ceil(45.0 / (2.0 * math.pi * math.sqrt(y * min(Y))))) + 1
    grids = np.meshgrid(*[np.arange(-radius, radius + 1)] * len(Y), indexing="ij")
    Ym = sum(c * g.astype(float) ** 2 for c, g in zip(Y, grids)).ravel()
    Ym = Ym[Ym > 0]
    log_prod = math.fsum(np.log1p(-np.exp(-2.0 * math.pi * np.sqrt(y * Ym))))
    zero_mode = float(np.real(epstein_zeta_diag(Y, -0.5, tol)))
    return -math.log((2.0 * math.pi) ** 2 * y) - 2.0 * math.pi * math.sqrt(y) * zero_mode - 2.0 * log_prod
