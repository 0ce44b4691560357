"""Degenerating families of discrete tori and the residuals of their asymptotics.

A family is ``N(u) = (round(u alpha_1), ..., round(u alpha_d))`` (each at least
2). As u grows, the rescaled discrete tori fill out the real torus with side
lengths alpha, and

    log det* Delta_{N(u)} = V(N(u)) I_d(0) + log u^2 + log det* Delta_A + o(1).

This module tabulates every term of that expansion and of the matching
statements for the spectral zeta function.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .discrete_torus import DiscreteTorus, log_det_star, spectral_zeta_discrete
from .quadrature import integrate
from .real_torus import (
    RealTorusDiag,
    epstein_zeta_diag,
    kronecker_limit_d2,
    log_det_star_real,
    zeta_real,
    zeta_real_ct_at_pole,
)
from .special_functions import apery, bessel_i_e, kasteleyn_constant, rgamma
from .transforms import i_d

HIGH_TOL = 1e-14


@dataclass(frozen=True)
class DegenerationFamily:
    alphas: tuple[float, ...]
    u_values: tuple[int, ...]

    def __init__(self, alphas: Sequence[float], u_values: Sequence[int]):
        RealTorusDiag(alphas)  # validates
        us = tuple(int(u) for u in u_values)
        if any(u < 1 for u in us) or any(b <= a for a, b in zip(us, us[1:])):
            raise ValueError("u_values must be increasing positive integers")
        object.__setattr__(self, "alphas", tuple(float(a) for a in alphas))
        object.__setattr__(self, "u_values", us)

    @property
    def d(self) -> int:
        return len(self.alphas)

    @property
    def real_torus(self) -> RealTorusDiag:
        return RealTorusDiag(self.alphas)

    def dims(self, u: int) -> tuple[int, ...]:
        return tuple(max(2, int(round(u * a))) for a in self.alphas)

    def torus(self, u: int) -> DiscreteTorus:
        return DiscreteTorus(self.dims(u))


@dataclass
class DegenerationRow:
    u: int
    dims: tuple[int, ...]
    volume: int
    logdet_discrete: float
    lead: float
    log_u2: float
    const_term: float
    predicted: float
    residual: float


@dataclass
class DegenerationReport:
    alphas: tuple[float, ...]
    lead_constant: float
    const_term: float
    rows: list[DegenerationRow] = field(default_factory=list)

    @property
    def residuals(self) -> np.ndarray:
        return np.array([r.residual for r in self.rows])

    @property
    def decay_slope(self) -> float:
        """Least-squares slope of log|r(u)| against log u (nan with fewer than two rows)."""
        us = np.array([r.u for r in self.rows], dtype=float)
        rs = np.abs(self.residuals)
        ok = rs > 0
        if ok.sum() < 2:
            return math.nan
        return float(np.polyfit(np.log(us[ok]), np.log(rs[ok]), 1)[0])

    def to_dict(self) -> dict:
        return {
            "alphas": list(self.alphas),
            "lead_constant": self.lead_constant,
            "const_term": self.const_term,
            "decay_slope": self.decay_slope,
            "rows": [dict(asdict(r), dims=list(r.dims)) for r in self.rows],
        }


def degeneration_report(family: DegenerationFamily, threads: int = 1,
                        tol: float = HIGH_TOL) -> DegenerationReport:
    """Discrete log-determinant against ``V I_d(0) + log u^2 + log det* Delta_A`` for each u."""
    lead_c = i_d(family.d, 0.0, tol)
    const = log_det_star_real(family.real_torus, tol)

    def row(u: int) -> DegenerationRow:
        T = family.torus(u)
        ld = log_det_star(T)
        lead = T.volume * lead_c
        lu2 = 2.0 * math.log(u)
        pred = lead + lu2 + const
        # residual evaluated as a difference of the big terms first to limit rounding
        return DegenerationRow(u=u, dims=T.dims, volume=T.volume, logdet_discrete=ld, lead=lead,
                               log_u2=lu2, const_term=const, predicted=pred,
                               residual=(ld - lead) - lu2 - const)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            rows = list(pool.map(row, family.u_values))
    else:
        rows = [row(u) for u in family.u_values]
    return DegenerationReport(alphas=family.alphas, lead_constant=lead_c, const_term=const, rows=rows)


def d2_expansion_check(n1: int, n2: int) -> float:
    """Residual of ``log det*`` on the (n1, n2) torus against its three-term d = 2 expansion."""
    if n1 < 3 or n2 < 3:
        raise ValueError("need n1, n2 >= 3")
    ld = log_det_star(DiscreteTorus((n1, n2)))
    lead = n1 * n2 * kasteleyn_constant()
    return (ld - lead) - kronecker_limit_d2(n1, n2)


# ---------------------------------------------------------------------------
# Spectral zeta convergence
# ---------------------------------------------------------------------------


@dataclass
class ZetaConvergenceRow:
    u: int
    dims: tuple[int, ...]
    lhs: complex
    rhs: complex
    gap: float


def gaussian_moment(d: int, w: complex, upper: float, tol: float = 1e-12) -> complex:
    """``int_0^upper (e^{-2t} I_0(2t))^d t^w dt/t`` for Re(w) > 0."""
    wr = complex(w).real
    if wr <= 0:
        raise ValueError("need Re(w) > 0")

    def f(t):
        return bessel_i_e(0, 2.0 * t) ** d * t ** w

    return integrate(f, upper=upper, abs_tol=tol, small_t_power=wr).value


def zeta_convergence_limit(torus: RealTorusDiag, w: complex, tol: float = 1e-13) -> complex:
    """Limit of the rescaled (and, for Re(w) <= d/2, regularized) discrete zeta values."""
    a = torus.d / 2.0
    if complex(w).real > a:
        return zeta_real(torus, w, tol)
    if complex(w) == a:
        return zeta_real_ct_at_pole(torus, tol)
    return zeta_real(torus, w, tol) - torus.volume * (4.0 * math.pi) ** (-a) / (w - a) * rgamma(w)


def zeta_convergence_report(family: DegenerationFamily, w: complex,
                            tol: float = 1e-12) -> list[ZetaConvergenceRow]:
    """Per-u rescaled discrete zeta values next to their real-torus limit."""
    if complex(w).real <= 0:
        raise ValueError("need Re(w) > 0")
    A = family.real_torus
    regularize = complex(w).real <= family.d / 2.0
    rhs = zeta_convergence_limit(A, w)
    rows = []
    for u in family.u_values:
        T = family.torus(u)
        z = spectral_zeta_discrete(T, w)
        if regularize:
            z = z - T.volume * rgamma(w) * gaussian_moment(family.d, w, float(u) ** 2, tol)
        lhs = z * float(u) ** (-2.0 * w)
        if isinstance(w, (int, float)):
            lhs = float(np.real(lhs))
            rhs_v = float(np.real(rhs))
        else:
            rhs_v = rhs
        rows.append(ZetaConvergenceRow(u=u, dims=T.dims, lhs=lhs, rhs=rhs_v, gap=abs(lhs - rhs_v)))
    return rows


# ---------------------------------------------------------------------------
# Second-moment lattice identity
# ---------------------------------------------------------------------------


def _q_series(y: float, power: int, squared: bool) -> float:
    terms = []
    n = 1
    while True:
        q = math.exp(-2.0 * math.pi * y * n)
        if q < 1e-18:
            break
        denom = (-math.expm1(-2.0 * math.pi * y * n))
        terms.append(q / (denom * denom if squared else denom) / n ** power)
        n += 1
    return math.fsum(terms)


def second_moment_q_series(y: float) -> float:
    """Closed q-series form of ``sum_{(n,m) != 0} (n^2 + (m y)^2)^{-2}``."""
    c = 2.0 * math.pi * y
    inner = (c * c / (16.0 * 45.0) + apery() / (2.0 * c)
             + _q_series(y, 3, squared=False) / c + _q_series(y, 2, squared=True))
    return (2.0 * math.pi / y) ** 2 * inner


def second_moment_lattice(y: float, tol: float = HIGH_TOL) -> float:
    """``sum_{(n,m) != 0} (n^2 + (m y)^2)^{-2}`` through the real-torus zeta function."""
    return epstein_zeta_diag((1.0, y * y), 2.0, tol)


def dd_identity_check(y: float) -> float:
    """Absolute difference between the lattice sum and its q-series evaluation."""
    if not y > 0:
        raise ValueError("y must be positive")
    return abs(second_moment_lattice(y) - second_moment_q_series(y))
