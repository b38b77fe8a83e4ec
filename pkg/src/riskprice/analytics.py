"""Closed-form Bachelier oracles, payoffs and generator evaluators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import erfc

from .errors import ParameterError
from .models import SublinearModel, covariance_G
from .risk import RiskProfile, minimize_convex_1d
from .stepper import StepContext, one_step_ask, one_step_worst_case

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class Payoff:
    """A vectorized payoff ``f(x)`` tagged with its kind and parameters."""

    kind: str
    params: dict
    evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False)

    def __call__(self, x):
        return self.evaluator(np.asarray(x, dtype=float))

    def __neg__(self) -> "Payoff":
        ev = self.evaluator
        return Payoff(f"-{self.kind}", self.params, lambda x: -ev(x))

    @property
    def label(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{self.kind}({args})"


def butterfly(k_low: float, k_mid: float, k_up: float) -> Payoff:
    """``(x-K_L)^+ - 2(x-K_M)^+ + (x-K_U)^+``."""
    if not k_low < k_mid < k_up:
        raise ParameterError(f"butterfly strikes must satisfy K_L < K_M < K_U, got {(k_low, k_mid, k_up)}")

    def ev(x):
        return np.maximum(x - k_low, 0.0) - 2.0 * np.maximum(x - k_mid, 0.0) + np.maximum(x - k_up, 0.0)

    return Payoff("butterfly", {"k_low": k_low, "k_mid": k_mid, "k_up": k_up}, ev)


def call(strike: float) -> Payoff:
    return Payoff("call", {"strike": strike}, lambda x: np.maximum(x - strike, 0.0))


def put(strike: float) -> Payoff:
    return Payoff("put", {"strike": strike}, lambda x: np.maximum(strike - x, 0.0))


def constant(value: float) -> Payoff:
    return Payoff("constant", {"value": value}, lambda x: np.full(np.shape(x), float(value)))


def tabulated(xs: Sequence[float], values: Sequence[float]) -> Payoff:
    """Piecewise-linear payoff through the given points, flat outside them."""
    xs = np.asarray(xs, dtype=float)
    values = np.asarray(values, dtype=float)
    if xs.ndim != 1 or xs.shape != values.shape or xs.size < 2:
        raise ParameterError("tabulated payoff needs matching 1-D arrays of at least two points")
    if np.any(np.diff(xs) <= 0):
        raise ParameterError("tabulated payoff abscissae must be strictly increasing")
    return Payoff("tabulated", {"points": xs.size}, lambda x: np.interp(x, xs, values))


def norm_cdf(d):
    return 0.5 * erfc(-np.asarray(d, dtype=float) / _SQRT2)


def bachelier_call(x, strike, sigma, maturity):
    """Driftless Bachelier call ``(x-K) Phi(d) + s phi(d)`` with ``s = sigma sqrt(T)``."""
    s = sigma * np.sqrt(maturity)
    m = np.asarray(x, dtype=float) - strike
    if np.any(np.asarray(s) <= 0):
        raise ParameterError("bachelier_call needs sigma > 0 and maturity > 0")
    d = m / s
    out = m * norm_cdf(d) + s * np.exp(-0.5 * d * d) / _SQRT2PI
    return float(out) if np.ndim(out) == 0 else out


def bachelier_butterfly(x, strikes, sigma, maturity):
    k_low, k_mid, k_up = strikes
    return (
        bachelier_call(x, k_low, sigma, maturity)
        - 2.0 * bachelier_call(x, k_mid, sigma, maturity)
        + bachelier_call(x, k_up, sigma, maturity)
    )


@dataclass(frozen=True)
class OutOfRange:
    """Returned by :func:`implied_bachelier_vol` when no volatility reproduces the price."""

    price: float
    attainable: tuple

    def __bool__(self):
        return False


_VOL_LO, _VOL_HI = 1e-6, 5.0


def bachelier_vol_roots(price, x, strikes, maturity, tol=1e-8, scan=600):
    """All volatilities in ``[1e-6, 5]`` whose butterfly value equals ``price``.

    The butterfly value is not monotone in the volatility away from the
    middle strike, so a price can have two preimages. Sign changes are
    located on a log-spaced scan and each is refined by bisection; local
    maxima of the scan are refined as well so tangent roots are not lost.
    """

    def gap_at(s):
        return float(bachelier_butterfly(x, strikes, s, maturity)) - price

    def bisect(lo, hi, glo):
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            gm = gap_at(mid)
            if (gm < 0) == (glo < 0):
                lo, glo = mid, gm
            else:
                hi = mid
        return 0.5 * (lo + hi)

    sig = np.geomspace(_VOL_LO, _VOL_HI, scan)
    gap = bachelier_butterfly(x, strikes, sig, maturity) - price
    roots = [float(s) for s, g in zip(sig, gap) if g == 0.0]
    for i in np.flatnonzero(np.sign(gap[:-1]) * np.sign(gap[1:]) < 0):
        roots.append(bisect(sig[i], sig[i + 1], gap[i]))
    top = float(np.max(gap + price))
    # a price at (or just below) the peak in sigma touches the curve between scan points
    for i in range(1, scan - 1):
        if gap[i - 1] < gap[i] >= gap[i + 1] and gap[i] < 0:
            res = minimize_scalar(lambda s: -gap_at(s), bounds=(sig[i - 1], sig[i + 1]), method="bounded",
                                  options={"xatol": tol})
            peak, gmax = float(res.x), -float(res.fun)
            top = max(top, gmax + price)
            if gmax > 0:
                roots += [bisect(sig[i - 1], peak, gap[i - 1]), bisect(peak, sig[i + 1], gmax)]
            elif gmax > -1e-13 * max(abs(price), 1e-300):
                roots.append(peak)
    attainable = (float(np.min(gap + price)), top)
    return sorted(roots), attainable


def implied_bachelier_vol(price, x, strikes, maturity, tol=1e-8, reference: Optional[float] = None):
    """Bachelier volatility implied by a butterfly price at spot ``x``.

    When two volatilities reproduce the price, the one closest to
    ``reference`` is returned, or the larger one when no reference is given.
    Returns :class:`OutOfRange` if the price is not attainable.
    """
    if not maturity > 0:
        raise ParameterError("maturity must be > 0")
    roots, attainable = bachelier_vol_roots(price, x, strikes, maturity, tol)
    if not roots:
        return OutOfRange(float(price), attainable)
    if reference is None:
        return roots[-1]
    return min(roots, key=lambda s: abs(s - reference))


@dataclass(frozen=True, eq=False)
class SmoothTestFunction:
    f: Callable
    df: Callable
    d2f: Callable


def _g_theta(model, alpha, mu, a, b, theta):
    return covariance_G(model, a + alpha * (b - theta) ** 2) + (b - theta) * mu


def generator_ask(model: SublinearModel, profile: RiskProfile, mu: float, tf: SmoothTestFunction, x: float) -> float:
    """``inf_theta G_theta(f''(x), f'(x)) - inf_theta G_theta(0, 0)``."""
    a, b = float(tf.d2f(x)), float(tf.df(x))
    alpha, cons = profile.alpha, profile.constraint
    _, top = minimize_convex_1d(lambda th: _g_theta(model, alpha, mu, a, b, th), b, cons)
    _, base = minimize_convex_1d(lambda th: _g_theta(model, alpha, mu, 0.0, 0.0, th), 0.0, cons)
    return top - base


def generator_worst_case(model: SublinearModel, tf: SmoothTestFunction, x: float) -> float:
    """``E[zeta^2 f''(x)] / 2``."""
    return covariance_G(model, float(tf.d2f(x)))


def generator_consistency_check(
    model: SublinearModel,
    profile: RiskProfile,
    mu: float,
    tf: SmoothTestFunction,
    x: float,
    h_list: Sequence[float],
    worst_case: bool = False,
) -> list[tuple[float, float]]:
    """Residuals ``|(I(h)f - f)(x)/h - (Af)(x)|`` for each step in ``h_list``."""
    fx = float(tf.f(x))
    if worst_case:
        target = generator_worst_case(model, tf, x)
    else:
        target = generator_ask(model, profile, mu, tf, x)
    rows = []
    for h in h_list:
        if worst_case:
            val = one_step_worst_case(model, h, tf.f, x)
        else:
            val, _ = one_step_ask(StepContext.build(model, profile, mu, h), tf.f, x)
        rows.append((h, abs((val - fx) / h - target)))
    return rows
