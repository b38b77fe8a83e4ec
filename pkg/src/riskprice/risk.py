"""Entropic risk over a sublinear model and its minimization over hedges."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.special import logsumexp

from .errors import DivergenceError, EvaluationError, ParameterError
from . import _kernels
from .models import SublinearModel, evaluate_atoms

THETA_CAP = 1e8
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Unconstrained:
    @property
    def radius(self) -> float:
        return math.inf


@dataclass(frozen=True)
class VolumeBound:
    """Hedge positions restricted to ``|theta| <= radius``."""

    radius: float

    def __post_init__(self):
        if not self.radius >= 0:
            raise ParameterError(f"volume bound must be >= 0, got {self.radius!r}")


Constraint = Union[Unconstrained, VolumeBound]


@dataclass(frozen=True)
class RiskProfile:
    alpha: float
    constraint: Constraint = field(default_factory=Unconstrained)

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ParameterError(f"risk aversion alpha must be > 0, got {self.alpha!r}")


@dataclass(frozen=True)
class HedgeResult:
    value: float
    theta: float
    iterations: int
    bracket: tuple


@dataclass
class HedgeBatch:
    values: np.ndarray
    thetas: np.ndarray
    brackets: np.ndarray
    evals: np.ndarray


def scenario_risk(model: SublinearModel, alpha: float, losses: np.ndarray) -> np.ndarray:
    """Entropic risk of losses given per atom, shape ``(..., S, A)`` -> ``(...)``.

    Each scenario's log-sum-exp is shifted by its largest exponent, so only
    the spread of ``alpha * loss`` within a scenario matters for overflow.
    """
    z = np.where(model.mask, alpha * losses + model.log_weights, -np.inf)
    return logsumexp(z, axis=-1).max(axis=-1) / alpha


def entropic_risk(model: SublinearModel, alpha: float, loss: Callable) -> float:
    """``(1/alpha) * log E[exp(alpha * loss(zeta))]``."""
    if not alpha > 0:
        raise ParameterError(f"alpha must be > 0, got {alpha!r}")
    vals = evaluate_atoms(loss, model.points)
    _require_finite(model, vals, "loss")
    return float(scenario_risk(model, alpha, vals))


def _require_finite(model, vals, what):
    bad = model.mask & ~np.isfinite(vals)
    if bad.any():
        k, a = np.argwhere(bad)[0]
        raise EvaluationError(f"{what} is not finite at atom {model.points[k, a]!r} (scenario {k}, atom {a})")


def minimize_convex_1d(
    phi: Callable[[float], float],
    start: float = 0.0,
    constraint: Constraint = Unconstrained(),
    tol_theta: float = 1e-9,
    max_iter: int = 200,
    step: float = 1e-3,
    cap: float = THETA_CAP,
) -> tuple[float, float]:
    """Minimize a convex function of one variable; returns ``(theta*, phi(theta*))``.

    The minimum is bracketed by doubling steps away from ``start`` (clipped to
    the constraint) and then located by golden-section search. A minimum on
    the constraint boundary is returned exactly.
    """
    radius = constraint.radius
    lim = min(radius, cap)

    def value(t):
        v = float(phi(t))
        if not math.isfinite(v):
            raise DivergenceError(f"objective is not finite at theta={t!r}")
        return v

    a = min(max(float(start), -lim), lim)
    fa = value(a)
    b, c = min(a + step, lim), max(a - step, -lim)
    fb, fc = value(b), value(c)
    lo, hi = c, b
    if fb < fa or fc < fa:
        d = 1.0 if fb < fa else -1.0
        prev, cur, fcur = a, (b if d > 0 else c), (fb if d > 0 else fc)
        s = step
        while True:
            s *= 2.0
            nxt = min(max(cur + d * s, -lim), lim)
            fn = value(nxt)
            if fn >= fcur:
                lo, hi = min(prev, nxt), max(prev, nxt)
                break
            if abs(nxt) >= lim:
                if lim < radius:
                    raise DivergenceError(
                        f"optimizer exceeded |theta| <= {cap:g}; the objective appears unbounded below"
                    )
                lo, hi = min(cur, nxt), max(cur, nxt)
                break
            prev, cur, fcur = cur, nxt, fn
    edges = (lo, hi)
    x1, x2 = hi - _INVPHI * (hi - lo), lo + _INVPHI * (hi - lo)
    f1, f2 = value(x1), value(x2)
    it = 0
    while hi - lo > tol_theta and it < max_iter:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INVPHI * (hi - lo)
            f1 = value(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INVPHI * (hi - lo)
            f2 = value(x2)
        it += 1
    theta, best = (x1, f1) if f1 <= f2 else (x2, f2)
    for e in edges:
        if abs(e) >= radius:
            fe = value(e)
            if fe <= best:
                theta, best = e, fe
    return theta, best


def hedge_batch(
    model: SublinearModel,
    alpha: float,
    F: np.ndarray,
    incr: np.ndarray,
    start,
    radius: float = math.inf,
    warm: bool = True,
    tol_theta: float = 1e-9,
    max_iter: int = 200,
    step: float = 1e-3,
) -> HedgeBatch:
    """Minimize ``rho[F[i] - theta * incr]`` over ``theta`` for every row ``i``.

    ``F`` has shape ``(N, S, A)``.
    With ``warm`` the nodes are solved in order, each starting from the
    previous optimizer; otherwise each starts from ``start[i]``.
    """
    F = np.ascontiguousarray(F, dtype=float)
    n = F.shape[0]
    start = np.ascontiguousarray(np.broadcast_to(np.asarray(start, dtype=float), (n,)))
    thetas, values = np.empty(n), np.empty(n)
    brackets = np.empty((n, 2))
    evals = np.zeros(n, dtype=np.int64)
    status, node = _kernels.hedge_nodes(
        F, np.ascontiguousarray(incr, dtype=float), model.log_weights, model.mask,
        float(alpha), start, warm, float(radius), THETA_CAP, tol_theta, step, max_iter,
        thetas, values, brackets, evals,
    )
    if status == _kernels.DIVERGED:
        raise DivergenceError(
            f"hedge optimizer exceeded |theta| <= {THETA_CAP:g} at node {node}; "
            "the risk functional appears unbounded below"
        )
    if status == _kernels.NOT_FINITE:
        raise DivergenceError(f"risk functional is not finite at node {node}")
    return HedgeBatch(values, thetas, brackets, evals)


def risk_at(model: SublinearModel, alpha: float, F: np.ndarray, incr: np.ndarray, thetas) -> np.ndarray:
    """``rho[F[i] - thetas[i] * incr]`` for every row, without optimizing."""
    F = np.ascontiguousarray(F, dtype=float)
    out = np.empty(F.shape[0])
    _kernels.risk_nodes(F, np.ascontiguousarray(thetas, dtype=float), np.ascontiguousarray(incr, dtype=float),
                        model.log_weights, model.mask, float(alpha), out)
    return out


def trading_adjusted_risk(
    model: SublinearModel,
    profile: RiskProfile,
    h: float,
    mu: float,
    f: Callable,
    x: float,
    warm_start: Optional[float] = None,
) -> HedgeResult:
    """``inf_theta rho[f(x + h mu + sqrt(h) zeta) - theta (h mu + sqrt(h) zeta)]``."""
    if h < 0:
        raise ParameterError(f"step h must be >= 0, got {h!r}")
    if h == 0:
        return HedgeResult(float(f(x)), 0.0, 0, (0.0, 0.0))
    incr = h * mu + math.sqrt(h) * model.points
    fv = evaluate_atoms(f, x + incr)
    _require_finite(model, fv, "continuation")
    start = 0.0 if warm_start is None else warm_start
    try:
        res = hedge_batch(model, profile.alpha, fv[None], incr, start, profile.constraint.radius, warm=False)
    except DivergenceError as exc:
        raise DivergenceError(f"at x={x!r}, h={h!r}: {exc}") from None
    return HedgeResult(
        float(res.values[0]), float(res.thetas[0]), int(res.evals[0]), (float(res.brackets[0, 0]), float(res.brackets[0, 1]))
    )
