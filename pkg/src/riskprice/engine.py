"""Backward iteration of the one-step operators on a padded uniform grid.

The continuation value is kept as node values on a fixed grid. Between nodes
it is interpolated linearly and beyond the grid it is extended flat. The grid
is padded by the maximal distance the price can travel in ``n`` steps so the
flat extension never reaches the target interval.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import IterationError, ParameterError, ResourceError
from .models import SublinearModel
from .risk import RiskProfile
from .stepper import StepContext, ask_nodes, worst_case_nodes
from .tables import read_table, write_table

NODE_CAP = 20_000_000
MODES = ("direct", "optinterp")


@dataclass(frozen=True)
class Grid1D:
    lo: float
    hi: float
    dx: float
    nodes: int
    anchor: float = None
    anchor_index: int = 0

    def __post_init__(self):
        if not self.lo < self.hi or not self.dx > 0:
            raise ParameterError(f"invalid grid [{self.lo}, {self.hi}] with dx={self.dx}")
        if self.anchor is None:
            object.__setattr__(self, "anchor", self.lo)

    @property
    def xs(self) -> np.ndarray:
        return self.anchor + self.dx * (np.arange(self.nodes) - self.anchor_index)

    def window(self, lo: float, hi: float) -> np.ndarray:
        """Boolean mask of the nodes inside ``[lo, hi]`` (up to rounding)."""
        xs, eps = self.xs, 1e-9 * self.dx
        return (xs >= lo - eps) & (xs <= hi + eps)


@dataclass
class GridFunction:
    grid: Grid1D
    values: np.ndarray
    thetas: Optional[np.ndarray] = None

    def __call__(self, y):
        return np.interp(y, self.grid.xs, self.values)

    def restrict(self, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
        mask = self.grid.window(lo, hi)
        return self.grid.xs[mask], self.values[mask]


@dataclass(frozen=True)
class EngineConfig:
    target: tuple
    n: int
    maturity: float
    dx: float = 1e-3
    mode: str = "direct"
    coarse_stride: int = 4
    workers: int = 1
    node_cap: int = NODE_CAP
    pad_scale: float = 1.0

    def __post_init__(self):
        lo, hi = self.target
        if not lo <= hi:
            raise ParameterError(f"target interval must satisfy lo <= hi, got {self.target}")
        if int(self.n) != self.n or self.n < 1:
            raise ParameterError(f"number of steps n must be an integer >= 1, got {self.n!r}")
        if not self.maturity > 0:
            raise ParameterError(f"maturity T must be > 0, got {self.maturity!r}")
        if not self.dx > 0:
            raise ParameterError(f"grid spacing dx must be > 0, got {self.dx!r}")
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "optinterp" and self.coarse_stride < 2:
            raise ParameterError("optinterp needs coarse_stride >= 2")
        if self.workers < 1:
            raise ParameterError("workers must be >= 1")

    @property
    def h(self) -> float:
        return self.maturity / self.n


@dataclass
class PriceCurve:
    xs: np.ndarray
    ask: np.ndarray
    bid: np.ndarray
    worst_ask: np.ndarray
    worst_bid: np.ndarray
    metadata: dict = field(default_factory=dict)

    COLUMNS = ("x", "ask", "bid", "worst_ask", "worst_bid")

    def to_csv(self, path):
        cols = dict(zip(self.COLUMNS, (self.xs, self.ask, self.bid, self.worst_ask, self.worst_bid)))
        return write_table(path, cols, self.metadata)

    @classmethod
    def from_csv(cls, path) -> "PriceCurve":
        meta, cols = read_table(path)
        return cls(*(cols[c] for c in cls.COLUMNS), metadata=meta)


def padded_grid(
    target: Sequence[float],
    n: int,
    maturity: float,
    mu: float,
    support_radius: float,
    dx: float,
    node_cap: int = NODE_CAP,
    pad_scale: float = 1.0,
) -> Grid1D:
    """Grid on ``[lo - |mu|T - R sqrt(nT), hi + |mu|T + R sqrt(nT)]``, on the dx lattice through ``lo``."""
    lo, hi = map(float, target)
    pad = pad_scale * (abs(mu) * maturity + support_radius * math.sqrt(n * maturity))
    below = math.ceil(pad / dx - 1e-9)
    above = math.ceil((hi - lo + pad) / dx - 1e-9)
    nodes = below + above + 1
    if nodes > node_cap:
        raise ResourceError(f"grid needs {nodes} nodes (cap {node_cap}); use a larger dx")
    if nodes < 2:
        above, nodes = 1, below + 2
    return Grid1D(lo - below * dx, lo + above * dx, dx, nodes, anchor=lo, anchor_index=below)


def _grid_for(model, mu, config: EngineConfig) -> Grid1D:
    if model.dim != 1:
        raise ParameterError("the grid engine only supports one-dimensional models")
    return padded_grid(
        config.target, config.n, config.maturity, mu, model.support_radius,
        config.dx, config.node_cap, config.pad_scale,
    )


def _chunks(size: int, workers: int):
    bounds = np.linspace(0, size, workers + 1).astype(int)
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _check_step(values, xs, step):
    bad = ~np.isfinite(values)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise IterationError(f"non-finite value at step {step}, node {i} (x={xs[i]!r})")


def _ask_step(ctx, cont, xs, prev_theta, config: EngineConfig, pool):
    if config.mode == "direct":
        idx = np.arange(xs.size)
    else:
        idx = np.unique(np.r_[np.arange(0, xs.size, config.coarse_stride), xs.size - 1])
    nodes = xs[idx]
    start = np.zeros(idx.size) if prev_theta is None else prev_theta[idx]
    if pool is None:
        _, theta = ask_nodes(ctx, cont, nodes, start[0])
    else:
        # each chunk is warm-started from its own first node
        parts = pool.map(lambda s: ask_nodes(ctx, cont, nodes[s], start[s][0])[1], _chunks(idx.size, config.workers))
        theta = np.concatenate(list(parts))
    if config.mode == "optinterp":
        theta = np.interp(xs, nodes, theta)
        values, _ = ask_nodes(ctx, cont, xs, thetas=theta)
    else:
        values, _ = ask_nodes(ctx, cont, xs, thetas=theta)
    return values, theta


def iterate_ask(
    payoff: Callable,
    model: SublinearModel,
    profile: RiskProfile,
    mu: float,
    config: EngineConfig,
    grid: Optional[Grid1D] = None,
) -> GridFunction:
    """``I(h)^n f`` on the padded grid, with ``h = T/n``.

    The returned function carries the hedges of the final (time zero) step.
    """
    grid = grid or _grid_for(model, mu, config)
    xs = grid.xs
    ctx = StepContext.build(model, profile, mu, config.h)
    cont = GridFunction(grid, np.asarray(payoff(xs), dtype=float))
    _check_step(cont.values, xs, 0)
    theta = None
    pool = ThreadPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        for step in range(1, config.n + 1):
            values, theta = _ask_step(ctx, cont, xs, theta, config, pool)
            _check_step(values, xs, step)
            cont = GridFunction(grid, values, theta)
    finally:
        if pool is not None:
            pool.shutdown()
    return cont


def iterate_bid(payoff, model, profile, mu, config, grid=None) -> GridFunction:
    """``-I(h)^n(-f)``; hedges are those of the negated claim."""
    res = iterate_ask(lambda y: -payoff(y), model, profile, mu, config, grid)
    return GridFunction(res.grid, -res.values, res.thetas)


def iterate_worst_case(payoff, model: SublinearModel, config: EngineConfig, grid=None) -> GridFunction:
    """``J(h)^n f`` with ``J(h)f(x) = E[f(x + sqrt(h) zeta)]``."""
    grid = grid or _grid_for(model, 0.0, config)
    xs = grid.xs
    cont = GridFunction(grid, np.asarray(payoff(xs), dtype=float))
    for step in range(1, config.n + 1):
        values = worst_case_nodes(model, config.h, cont, xs)
        _check_step(values, xs, step)
        cont = GridFunction(grid, values)
    return cont


def price_curve(payoff, model, profile, mu, config: EngineConfig, metadata=None) -> PriceCurve:
    """Ask, bid and worst-case bounds on the target interval."""
    grid = _grid_for(model, mu, config)
    lo, hi = config.target
    xs, ask = iterate_ask(payoff, model, profile, mu, config, grid).restrict(lo, hi)
    _, bid = iterate_bid(payoff, model, profile, mu, config, grid).restrict(lo, hi)
    _, worst_ask = iterate_worst_case(payoff, model, config, grid).restrict(lo, hi)
    _, worst_bid = iterate_worst_case(lambda y: -payoff(y), model, config, grid).restrict(lo, hi)
    meta = {
        "model": model.label,
        "alpha": profile.alpha,
        "constraint": profile.constraint,
        "mu": mu,
        "n": config.n,
        "T": config.maturity,
        "dx": config.dx,
        "mode": config.mode,
    }
    meta.update(metadata or {})
    return PriceCurve(xs, ask, bid, worst_ask, -worst_bid, meta)


def convergence_table(payoff, model, profile, mu, target_x, maturity, n_list, dx=1e-3, mode="direct"):
    """Ask price at ``target_x`` for each number of steps in ``n_list``."""
    rows = []
    for n in n_list:
        config = EngineConfig((target_x, target_x), n, maturity, dx=dx, mode=mode)
        res = iterate_ask(payoff, model, profile, mu, config)
        _, vals = res.restrict(target_x, target_x)
        rows.append((n, float(vals[0])))
    return rows
