"""One-period pricing operators.

``one_step_ask`` is the seller's indifference price ``I(h)f``, ``one_step_bid``
its dual ``-I(h)(-f)`` and ``one_step_worst_case`` the sublinear expectation
``E[f(x + sqrt(h) zeta)]``. The ``*_nodes`` variants evaluate the same
operators on a whole vector of states at once and are what the grid engine
uses.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DivergenceError, ParameterError
from .models import SublinearModel, expect
from .risk import RiskProfile, hedge_batch, risk_at, trading_adjusted_risk


def step_constant(model: SublinearModel, profile: RiskProfile, mu: float, h: float) -> float:
    """``c(h) = inf_theta rho[-theta (h mu + sqrt(h) zeta)]``; zero when ``mu == 0``."""
    if h < 0:
        raise ParameterError(f"step h must be >= 0, got {h!r}")
    if h == 0 or mu == 0:
        return 0.0
    return trading_adjusted_risk(model, profile, h, mu, lambda y: np.zeros_like(y), 0.0).value


@dataclass(frozen=True)
class StepContext:
    model: SublinearModel
    profile: RiskProfile
    mu: float
    h: float
    c_h: float

    @classmethod
    def build(cls, model: SublinearModel, profile: RiskProfile, mu: float, h: float) -> "StepContext":
        return cls(model, profile, float(mu), float(h), step_constant(model, profile, mu, h))

    @property
    def increments(self) -> np.ndarray:
        """Price moves ``h mu + sqrt(h) z`` for every atom, shape ``(S, A)``."""
        return self.h * self.mu + math.sqrt(self.h) * self.model.points


def one_step_ask(ctx: StepContext, f: Callable, x: float, warm_start: Optional[float] = None):
    """Seller's one-period price and hedge: ``(rho~[f] - c(h), theta*)``."""
    res = trading_adjusted_risk(ctx.model, ctx.profile, ctx.h, ctx.mu, f, x, warm_start)
    return res.value - ctx.c_h, res.theta


def one_step_bid(ctx: StepContext, f: Callable, x: float, warm_start: Optional[float] = None):
    price, theta = one_step_ask(ctx, lambda y: -f(y), x, warm_start)
    return -price, theta


def one_step_worst_case(model: SublinearModel, h: float, f: Callable, x: float) -> float:
    """``E[f(x + sqrt(h) zeta)]``, without drift."""
    if h < 0:
        raise ParameterError(f"step h must be >= 0, got {h!r}")
    return expect(model, lambda z: f(x + math.sqrt(h) * z))


def ask_nodes(
    ctx: StepContext,
    f: Callable[[np.ndarray], np.ndarray],
    xs: np.ndarray,
    theta_start=0.0,
    thetas: Optional[np.ndarray] = None,
    warm: bool = True,
):
    """Apply ``I(h)`` at every state in ``xs``; returns ``(prices, hedges)``.

    ``f`` must be vectorized. Nodes are optimized in order of ``xs``, each
    warm-started from the previous node (the first from ``theta_start``).
    When ``thetas`` is given no optimization is done and the risk functional
    is evaluated at those hedges instead.
    """
    xs = np.asarray(xs, dtype=float)
    if ctx.h == 0:
        return np.asarray(f(xs), dtype=float), np.zeros_like(xs)
    incr = ctx.increments
    F = f(xs[:, None, None] + incr[None])
    alpha, model = ctx.profile.alpha, ctx.model
    if thetas is not None:
        return risk_at(model, alpha, F, incr, thetas) - ctx.c_h, np.asarray(thetas, dtype=float)
    try:
        res = hedge_batch(model, alpha, F, incr, theta_start, ctx.profile.constraint.radius, warm=warm)
    except DivergenceError as exc:
        raise DivergenceError(f"h={ctx.h!r}: {exc}") from None
    return res.values - ctx.c_h, res.thetas


def worst_case_nodes(model: SublinearModel, h: float, f: Callable[[np.ndarray], np.ndarray], xs: np.ndarray) -> np.ndarray:
    """Apply ``J(h)`` at every state in ``xs``; ``f`` must be vectorized."""
    xs = np.asarray(xs, dtype=float)
    fv = f(xs[:, None, None] + math.sqrt(h) * model.points[None])
    per_scenario = (np.where(model.mask, fv, 0.0) * model.weights).sum(axis=-1)
    return per_scenario.max(axis=-1)
