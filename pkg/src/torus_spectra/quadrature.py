"""Adaptive Gauss-Kronrod integration of ``int f(t) dt/t`` in the variable ``v = log t``.

With ``t = e^v`` the measure ``dt/t`` becomes ``dv``, so integrands that behave
like powers of ``t`` near 0 and infinity become exponentially decaying in ``v``.
The region below the smallest sampled point is closed off with the power-law
model ``f(t) ~ c t^p``; the region above the largest sampled point is closed
off by a caller-declared tail model.

Integrands are vectorized: they receive a 1-D float array of ``t`` values and
return an array of the same shape (real or complex).
"""

from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

# 15-point Kronrod nodes on [-1, 1] (non-negative half) and the weights of the
# embedded 7-point Gauss rule.
_XK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XK[:-1], _XK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WK[:-1], _WK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod nodes in the half table
for _i, _w in zip((1, 3, 5, 7), _WG):
    GAUSS_WEIGHTS[_i] = _w
    GAUSS_WEIGHTS[14 - _i] = _w

_EPS = np.finfo(float).eps

Integrand = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PolynomialDecay:
    """``|f(t)| <= bound * t^(-p)`` for t beyond the integration range."""

    p: float
    bound: float = 1.0

    def cutoff(self, start: float, budget: float) -> float:
        # tail integral of bound*t^{-p} dt/t from T is bound*T^{-p}/p
        target = (self.bound / (self.p * budget)) ** (1.0 / self.p)
        return max(start, target)

    def tail_error(self, T: float) -> float:
        return self.bound * T ** (-self.p) / self.p


@dataclass(frozen=True)
class ExponentialDecay:
    """``|f(t)| <= bound * exp(-rate t)`` for t beyond the integration range."""

    rate: float
    bound: float = 1.0

    def cutoff(self, start: float, budget: float) -> float:
        T = max(start, 1.0 / self.rate)
        while self.tail_error(T) > budget:
            T *= 1.25
        return T

    def tail_error(self, T: float) -> float:
        # int_T^oo e^{-ct} dt/t <= e^{-cT}/(cT)
        return self.bound * math.exp(-self.rate * T) / (self.rate * T)


@dataclass(frozen=True)
class AnalyticTail:
    """Numerical quadrature stops at ``start``; ``integral_fn()`` supplies the rest."""

    start: float
    integral_fn: Callable[[], complex]
    error: float = 0.0


TailModel = Union[PolynomialDecay, ExponentialDecay, AnalyticTail]


@dataclass
class QuadratureProblem:
    integrand: Integrand
    split: float = 1.0
    abs_tol: float = 1e-10
    rel_tol: float = 0.0
    tail_model: TailModel | None = None
    lower: float = 0.0
    upper: float = math.inf
    small_t_power: float = 1.0
    max_panels: int = 20000

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValueError("abs_tol must be positive")
        if self.rel_tol < 0:
            raise ValueError("rel_tol must be non-negative")
        if not self.split > 0:
            raise ValueError("split must be positive")
        if self.lower < 0 or self.upper <= self.lower:
            raise ValueError("need 0 <= lower < upper")
        if math.isinf(self.upper) and self.tail_model is None:
            raise ValueError("an infinite upper limit needs a tail model")
        if self.small_t_power <= 0:
            raise ValueError("small_t_power must be positive")


@dataclass
class QuadratureResult:
    value: complex
    error_estimate: float
    evaluations: int
    details: dict = field(default_factory=dict)


class QuadratureError(RuntimeError):
    """Integration failed; carries the best estimate and its error bound."""

    def __init__(self, message: str, value=math.nan, error_estimate=math.inf, evaluations: int = 0):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate
        self.evaluations = evaluations


class _Counter:
    def __init__(self, f: Integrand):
        self.f = f
        self.count = 0

    def __call__(self, t: np.ndarray) -> np.ndarray:
        vals = np.asarray(self.f(t))
        self.count += t.size
        if vals.shape != t.shape:
            vals = np.broadcast_to(vals, t.shape)
        if not np.all(np.isfinite(vals)):
            raise QuadratureError("integrand returned a non-finite value", evaluations=self.count)
        return vals


def _gk_panels(f: _Counter, a: np.ndarray, b: np.ndarray):
    """Kronrod values and |K - G| error estimates for panels [a_i, b_i] in v."""
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    v = mid[:, None] + half[:, None] * NODES[None, :]
    vals = f(np.exp(v).ravel()).reshape(v.shape)
    k = half * (vals @ KRONROD_WEIGHTS)
    g = half * (vals @ GAUSS_WEIGHTS)
    err = np.abs(k - g)
    # rounding floor, proportional to the panel's absolute mass
    floor = 8.0 * _EPS * half * (np.abs(vals) @ KRONROD_WEIGHTS)
    return k, np.maximum(err, floor), floor


def _exact_sum(values: np.ndarray) -> complex:
    if np.iscomplexobj(values):
        return complex(math.fsum(values.real), math.fsum(values.imag))
    return math.fsum(values)


def _adaptive(f: _Counter, v_lo: float, v_hi: float, tol: float, max_panels: int, width: float = 1.0,
              rel_tol: float = 0.0):
    n0 = max(1, int(math.ceil((v_hi - v_lo) / width)))
    edges = np.linspace(v_lo, v_hi, n0 + 1)
    a, b = edges[:-1], edges[1:]
    k, err, floor = _gk_panels(f, a, b)
    while err.sum() > (target := max(tol, rel_tol * abs(k.sum()))):
        # panels already at the rounding floor cannot improve by bisection, and
        # once the floors alone exceed the budget further splitting only adds noise
        refinable = err > floor
        if not refinable.any() or floor.sum() > target:
            break
        if a.size >= max_panels:
            value = _exact_sum(k[np.argsort(a)])
            raise QuadratureError(
                f"panel budget {max_panels} exhausted (error {err.sum():.3g} > {tol:.3g})",
                value=value, error_estimate=float(err.sum()), evaluations=f.count,
            )
        # bisect every panel above the mean share of the budget, at least the worst one
        share = target / a.size
        bad = (err > share) & refinable
        if not bad.any():
            bad[np.argmax(np.where(refinable, err, -1.0))] = True
        ba, bb = a[bad], b[bad]
        bm = 0.5 * (ba + bb)
        k_new, err_new, floor_new = _gk_panels(f, np.concatenate([ba, bm]), np.concatenate([bm, bb]))
        a = np.concatenate([a[~bad], ba, bm])
        b = np.concatenate([b[~bad], bm, bb])
        k = np.concatenate([k[~bad], k_new])
        err = np.concatenate([err[~bad], err_new])
        floor = np.concatenate([floor[~bad], floor_new])
    order = np.argsort(a)
    return _exact_sum(k[order]), float(err.sum()), int(a.size)


def _small_t_cutoff(f: _Counter, v_start: float, p: float, budget: float) -> tuple[float, complex]:
    """Walk log t downward until the power-law remainder f(t)/p is below budget."""
    v = v_start
    while True:
        val = f(np.array([math.exp(v)]))[0]
        rem = val.item() / p
        if abs(rem) <= budget or v < -700.0:
            return v, rem
        v -= 4.0


def integrate_dt_over_t(problem: QuadratureProblem) -> QuadratureResult:
    """Integrate ``problem.integrand(t) dt/t`` over ``(lower, upper)``."""
    f = _Counter(problem.integrand)
    tol = problem.abs_tol
    inner_tol = 0.5 * tol
    value = 0.0
    err_total = 0.0
    details = {}

    # lower end
    if problem.lower > 0:
        v_lo = math.log(problem.lower)
    else:
        v_lo, rem = _small_t_cutoff(f, min(math.log(problem.split), math.log(problem.upper)) - 8.0,
                                    problem.small_t_power, 0.01 * tol)
        value += rem
        err_total += abs(rem) * 0.1
        details["t_min"] = math.exp(v_lo)

    # upper end
    if math.isinf(problem.upper):
        tm = problem.tail_model
        if isinstance(tm, AnalyticTail):
            T = tm.start
            tail_val = tm.integral_fn()
            tail_err = tm.error
        else:
            T = tm.cutoff(max(problem.split, math.exp(v_lo)), 0.05 * tol)
            tail_val = 0.0
            tail_err = tm.tail_error(T)
        value += tail_val
        err_total += tail_err
        v_hi = math.log(T)
        details["t_max"] = T
    else:
        v_hi = math.log(problem.upper)

    if v_hi <= v_lo:
        if math.isinf(problem.upper) and not isinstance(problem.tail_model, AnalyticTail):
            # the decay bound already covers everything beyond the lower end
            return QuadratureResult(value=value, error_estimate=err_total, evaluations=f.count, details=details)
        raise ValueError("empty integration range after tail handling")

    v_split = math.log(problem.split)
    pieces = [(v_lo, v_hi)]
    if v_lo < v_split < v_hi:
        pieces = [(v_lo, v_split), (v_split, v_hi)]
    span = v_hi - v_lo
    panels = 0
    budget_hit = None
    for lo, hi in pieces:
        try:
            val, err, np_ = _adaptive(f, lo, hi, inner_tol * (hi - lo) / span, problem.max_panels,
                                      rel_tol=0.5 * problem.rel_tol)
        except QuadratureError as exc:
            if not math.isfinite(exc.error_estimate):
                raise
            # keep going so the reported estimate covers the whole range
            val, err, np_ = exc.value, exc.error_estimate, problem.max_panels
            budget_hit = str(exc)
        value += val
        err_total += err
        panels += np_
    details["panels"] = panels
    target = max(tol, problem.rel_tol * abs(value))
    if budget_hit or err_total > target:
        raise QuadratureError(
            budget_hit or f"error estimate {err_total:.3g} exceeds tolerance {target:.3g}",
            value=value, error_estimate=err_total, evaluations=f.count,
        )
    return QuadratureResult(value=value, error_estimate=err_total, evaluations=f.count, details=details)


@contextmanager
def reported_as(transform: Callable[[complex], complex], scale: float = 1.0):
    """Re-express a failing integral's best estimate as the caller's derived quantity.

    Inside the block a :class:`QuadratureError` for an integral ``J`` is re-raised
    with value ``transform(J)`` and error ``|scale|`` times the integral's error.
    """
    try:
        yield
    except QuadratureError as exc:
        raise QuadratureError(str(exc), value=transform(exc.value),
                              error_estimate=abs(scale) * exc.error_estimate,
                              evaluations=exc.evaluations) from exc


def combine_integrals(jobs: Sequence[Callable[[], QuadratureResult]], combine: Callable[..., complex],
                      scales: Sequence[float]) -> QuadratureResult:
    """``combine(*values)`` of several integrals with error ``sum |scale_i| err_i``.

    Every job runs even if an earlier one fails, so a failure is raised once
    with ``combine`` applied to all the best estimates.
    """
    values, errors, failed, evals = [], [], [], 0
    for job in jobs:
        try:
            res = job()
            values.append(res.value)
            errors.append(res.error_estimate)
            evals += res.evaluations
        except QuadratureError as exc:
            if not math.isfinite(exc.error_estimate):
                raise
            values.append(exc.value)
            errors.append(exc.error_estimate)
            evals += exc.evaluations
            failed.append(str(exc))
    err = sum(abs(c) * e for c, e in zip(scales, errors))
    if failed:
        raise QuadratureError("; ".join(failed), value=combine(*values), error_estimate=err, evaluations=evals)
    return QuadratureResult(value=combine(*values), error_estimate=err, evaluations=evals)


def integrate(integrand: Integrand, **kwargs) -> QuadratureResult:
    """Shorthand for ``integrate_dt_over_t(QuadratureProblem(integrand, **kwargs))``."""
    return integrate_dt_over_t(QuadratureProblem(integrand, **kwargs))
