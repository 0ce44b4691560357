"""Gauss-transform split of the discrete-torus log-product.

For ``Re(s^2) > 0``,

    sum_{Lambda != 0} log(s^2 + Lambda) = V(N) I_d(s) + H_N(s)

with

    I_d(s) = log(s^2 + 2d) - int_0^oo e^{-s^2 t} (B(t)^d - e^{-2dt}) dt/t,
    H_N(s) = -int_0^oo [e^{-s^2 t} (theta_N(t) - V B(t)^d - 1) + e^{-t}] dt/t,

where ``B(t) = e^{-2t} I_0(2t)`` is the heat kernel of Z at the origin.
Both integrals converge at s = 0 and give the constants of the degeneration
expansion.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .discrete_torus import (
    DiscreteTorus,
    epstein_hurwitz_log_product,
    theta_excess,
    theta_minus_gaussian,
)
from .quadrature import AnalyticTail, ExponentialDecay, integrate, reported_as
from .special_functions import hankel_coefficients, bessel_i_e, heat_kernel_power_tail

DEFAULT_TOL = 1e-12
# beyond this t the asymptotic series of B(t)^d is used for the tail
ASYMPTOTIC_START = 200.0


def _check_s(s: complex) -> complex:
    s = complex(s)
    s2 = s * s
    if s != 0 and s2.real <= 0:
        raise ValueError("need Re(s^2) > 0 (or s = 0)")
    return s2


def _as_output(s, val):
    if isinstance(s, (int, float)) or complex(s).imag == 0:
        return float(np.real(val))
    return complex(val)


def i_d(d: int, s: complex = 0.0, tol: float = DEFAULT_TOL) -> complex:
    """Volume coefficient ``I_d(s)`` of the log-product; ``I_d(0)`` is the lead-term constant."""
    if d < 1:
        raise ValueError("d must be >= 1")
    s2 = _check_s(s)
    real = s2.imag == 0

    if s2 == 0:
        def f(t):
            return bessel_i_e(0, 2.0 * t) ** d - np.exp(-2.0 * d * t)

        T = ASYMPTOTIC_START
        # e^{-2dT} is far below rounding at T = 200
        tail = AnalyticTail(T, lambda: heat_kernel_power_tail(d, T), error=1e-16)
        with reported_as(lambda v: math.log(2.0 * d) - v):
            res = integrate(f, abs_tol=tol, tail_model=tail, small_t_power=2.0)
        return _as_output(s, math.log(2.0 * d) - res.value)

    s2v = s2.real if real else s2

    def g(t):
        return np.exp(-s2v * t) * (bessel_i_e(0, 2.0 * t) ** d - np.exp(-2.0 * d * t))

    with reported_as(lambda v: cmath.log(s2 + 2 * d) - v):
        res = integrate(g, abs_tol=tol, tail_model=ExponentialDecay(rate=s2.real), small_t_power=2.0)
    return _as_output(s, cmath.log(s2 + 2 * d) - res.value)


def _switch_time(torus: DiscreteTorus) -> float:
    """Where the fused Bessel form hands over to the spectral form."""
    return max(1.0, min(torus.dims) ** 2 / 8.0)


def theta_gaussian_excess(torus: DiscreteTorus, t) -> np.ndarray:
    """``theta_N(t) - V B(t)^d`` vectorized over t, with no catastrophic cancellation.

    Small t uses the fused Bessel lattice form, large t the spectral form where
    ``theta_N - 1`` is exponentially small.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.empty_like(t)
    small = t <= _switch_time(torus)
    if small.any():
        out[small] = theta_minus_gaussian(torus, t[small])
    if (~small).any():
        tl = t[~small]
        out[~small] = 1.0 + (theta_excess(torus, tl) - torus.volume * bessel_i_e(0, 2.0 * tl) ** torus.d)
    return out


def h_n(torus: DiscreteTorus, s: complex = 0.0, tol: float = DEFAULT_TOL) -> complex:
    """Remainder ``H_N(s)`` of the log-product after the volume term."""
    s2 = _check_s(s)
    d = torus.d
    V = torus.volume
    real = s2.imag == 0
    s2v = s2.real if real else s2

    if s2 == 0:
        def f(t):
            return theta_gaussian_excess(torus, t) + np.expm1(-t)

        lam1 = 4.0 * math.sin(math.pi / max(torus.dims)) ** 2
        T = max(ASYMPTOTIC_START, 45.0 / lam1)
        # beyond T: theta - 1 and e^{-t} are negligible; -V B^d integrates analytically
        tail = AnalyticTail(T, lambda: -V * heat_kernel_power_tail(d, T),
                            error=V * 1e-16 + (V - 1) * math.exp(-lam1 * T) / (lam1 * T))
        with reported_as(lambda v: -v):
            res = integrate(f, abs_tol=tol, tail_model=tail, small_t_power=1.0)
        return _as_output(s, -res.value)

    def g(t):
        # e^{-s^2 t}(F - 1) + e^{-t} with the O(1) parts cancelled analytically
        return np.exp(-s2v * t) * theta_gaussian_excess(torus, t) - np.exp(-t) * np.expm1((1.0 - s2v) * t)

    rate = min(s2.real, 1.0)
    with reported_as(lambda v: -v):
        res = integrate(g, abs_tol=tol, tail_model=ExponentialDecay(rate=rate, bound=V + 1.0),
                        small_t_power=1.0)
    return _as_output(s, -res.value)


@dataclass
class GaussTransformSplit:
    d: int
    s: complex
    i_d: complex
    h_n: complex | None = None
    log_product: complex | None = None
    volume: int | None = None

    @property
    def residual(self) -> float | None:
        if self.h_n is None:
            return None
        return abs(self.log_product - self.volume * self.i_d - self.h_n)


def gauss_transform_split(torus: DiscreteTorus, s: complex = 0.0, tol: float = DEFAULT_TOL) -> GaussTransformSplit:
    idv = i_d(torus.d, s, tol)
    hv = h_n(torus, s, tol)
    lp = epstein_hurwitz_log_product(torus, s)
    return GaussTransformSplit(d=torus.d, s=complex(s), i_d=idv, h_n=hv, log_product=lp,
                               volume=torus.volume)


def verify_log_product_split(torus: DiscreteTorus, s: complex = 0.0, tol: float = DEFAULT_TOL) -> float:
    """``|sum log(s^2 + Lambda) - V I_d(s) - H_N(s)|``."""
    return gauss_transform_split(torus, s, tol).residual


def lead_term_riemann(d: int, m: int, chunk: int = 1 << 20) -> float:
    """Midpoint-rule value of ``int_{[0,1]^d} log(2d - 2 sum_j cos(2 pi x_j)) dx`` on an m^d grid."""
    if m < 8:
        raise ValueError("grid size m must be >= 8")
    f1 = 4.0 * np.sin(np.pi * (np.arange(m) + 0.5) / m) ** 2
    total = m ** d
    partials = []
    for lo in range(0, total, chunk):
        hi = min(lo + chunk, total)
        idx = np.unravel_index(np.arange(lo, hi), (m,) * d)
        lam = np.zeros(hi - lo)
        for k in idx:
            lam += f1[k]
        partials.append(math.fsum(np.log(lam)))
    return math.fsum(partials) / total


def mellin_bessel_numeric(x: int, s: float, tol: float = 1e-10) -> float:
    """Quadrature value of ``int_0^oo e^{-t/2} I_x(t/2) t^s dt/t`` on ``-x < s < 1/2``."""
    if not (-x < s < 0.5):
        raise ValueError(f"the transform needs {-x} < s < 1/2")
    T = 400.0 + 8.0 * x * x
    coefs = hankel_coefficients(x, 20)

    def tail():
        return math.fsum(c * 2.0 ** k * T ** (s - 0.5 - k) / (k + 0.5 - s)
                         for k, c in enumerate(coefs)) / math.sqrt(math.pi)

    def f(t):
        return bessel_i_e(x, 0.5 * t) * t ** s

    res = integrate(f, abs_tol=tol, tail_model=AnalyticTail(T, tail), small_t_power=s + x)
    return res.value
