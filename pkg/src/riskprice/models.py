"""Sublinear expectations given by finite families of discrete scenarios.

A model describes the uncertain law of the one-period factor ``zeta``. Each
scenario is a mean-zero discrete distribution and the model expectation is the
maximum of the scenario expectations.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import EvaluationError, ParameterError

_SUM_TOL = 1e-12
_MEAN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Scenario:
    """One discrete probability measure for ``zeta``.

    ``points`` has shape ``(A,)`` in one dimension and ``(A, d)`` otherwise.
    """

    weights: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        p = np.asarray(self.points, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ParameterError("scenario needs a nonempty 1-D weight vector")
        if p.shape[0] != w.size or p.ndim not in (1, 2):
            raise ParameterError("scenario points must have shape (A,) or (A, d)")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(p))):
            raise ParameterError("scenario weights and points must be finite")
        if np.any(w <= 0):
            raise ParameterError("scenario weights must be positive")
        if abs(w.sum() - 1.0) > _SUM_TOL:
            raise ParameterError(f"scenario weights sum to {w.sum()!r}, not 1")
        mean = w @ p
        scale = max(1.0, float(np.max(np.abs(p))))
        if np.max(np.abs(mean)) > _MEAN_TOL * scale:
            raise ParameterError(f"scenario mean {mean!r} is not zero")
        w.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "points", p)

    @property
    def dim(self) -> int:
        return 1 if self.points.ndim == 1 else self.points.shape[1]

    @property
    def support_radius(self) -> float:
        if self.points.ndim == 1:
            return float(np.max(np.abs(self.points)))
        return float(np.max(np.linalg.norm(self.points, axis=1)))

    @classmethod
    def centered(cls, weights, points) -> "Scenario":
        """Renormalize the weights and shift the atoms so the mean is exactly zero."""
        w = np.asarray(weights, dtype=float)
        p = np.asarray(points, dtype=float)
        w = w / w.sum()
        p = p - w @ p
        return cls(w, p)


@dataclass(frozen=True, eq=False)
class SublinearModel:
    """Finite uncertainty set of scenarios; ``expect`` takes the max over them.

    For one-dimensional models the atoms are also stored as padded
    ``(S, A)`` arrays (``points``, ``weights``, ``log_weights``, ``mask``) so
    that functionals of every atom of every scenario vectorize.
    """

    scenarios: tuple
    label: str = "model"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        scenarios = tuple(self.scenarios)
        if not scenarios:
            raise ParameterError("a model needs at least one scenario")
        dims = {s.dim for s in scenarios}
        if len(dims) != 1:
            raise ParameterError(f"scenarios have mixed dimensions {sorted(dims)}")
        object.__setattr__(self, "scenarios", scenarios)

        n_atoms = max(s.weights.size for s in scenarios)
        shape = (len(scenarios), n_atoms)
        if self.dim > 1:
            shape = shape + (self.dim,)
        points = np.zeros(shape)
        weights = np.zeros(shape[:2])
        for k, s in enumerate(scenarios):
            points[k, : s.weights.size] = s.points
            weights[k, : s.weights.size] = s.weights
        mask = weights > 0
        with np.errstate(divide="ignore"):
            log_weights = np.log(weights)
        for name, arr in (("points", points), ("weights", weights), ("mask", mask), ("log_weights", log_weights)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def dim(self) -> int:
        return self.scenarios[0].dim

    @property
    def support_radius(self) -> float:
        return max(s.support_radius for s in self.scenarios)

    def __len__(self) -> int:
        return len(self.scenarios)

    def __repr__(self) -> str:
        return f"SublinearModel({self.label}, scenarios={len(self.scenarios)})"


def evaluate_atoms(g: Callable, points: np.ndarray) -> np.ndarray:
    """Evaluate ``g`` on the padded atom array, falling back to per-atom calls."""
    target = points.shape[:2]
    try:
        out = np.asarray(g(points), dtype=float)
        if out.shape == target:
            return out
        if out.ndim == 0:
            return np.full(target, float(out))
    except (TypeError, ValueError):
        pass
    flat = points.reshape(target[0] * target[1], *points.shape[2:])
    return np.array([float(g(z)) for z in flat]).reshape(target)


def expect(model: SublinearModel, g: Callable, return_index: bool = False):
    """Sublinear expectation ``max_Q E_Q[g(zeta)]``.

    ``g`` should accept an array of atoms. Ties between scenarios go to the
    lowest index. With ``return_index`` the argmax scenario index is returned
    alongside the value.
    """
    vals = evaluate_atoms(g, model.points)
    bad = model.mask & ~np.isfinite(vals)
    if bad.any():
        k, a = np.argwhere(bad)[0]
        raise EvaluationError(
            f"g is not finite at atom {model.points[k, a]!r} (scenario {k}, atom {a})"
        )
    per_scenario = np.where(model.mask, vals, 0.0) * model.weights
    per_scenario = per_scenario.sum(axis=1)
    idx = int(np.argmax(per_scenario))
    value = float(per_scenario[idx])
    if return_index:
        return value, idx
    return value


def _check_sigma(sigma: float, name: str = "sigma") -> float:
    sigma = float(sigma)
    if not (sigma > 0 and math.isfinite(sigma)):
        raise ParameterError(f"{name} must be > 0, got {sigma!r}")
    return sigma


def _two_point(sigma: float) -> Scenario:
    return Scenario(np.array([0.5, 0.5]), np.array([sigma, -sigma]))


def make_binomial(sigma: float) -> SublinearModel:
    sigma = _check_sigma(sigma)
    return SublinearModel(
        (_two_point(sigma),),
        label=f"binomial(sigma={sigma!r})",
        params={"model": "binomial", "sigma": sigma},
    )


def make_trinomial(sigma: float) -> SublinearModel:
    sigma = _check_sigma(sigma)
    a = math.sqrt(1.5) * sigma
    scen = Scenario(np.full(3, 1.0 / 3.0), np.array([a, 0.0, -a]))
    return SublinearModel(
        (scen,),
        label=f"trinomial(sigma={sigma!r})",
        params={"model": "trinomial", "sigma": sigma},
    )


def _check_nodes(quad_nodes: int) -> int:
    if int(quad_nodes) != quad_nodes or quad_nodes < 2:
        raise ParameterError(f"quad_nodes must be an integer >= 2, got {quad_nodes!r}")
    return int(quad_nodes)


def make_uniform(sigma: float, quad_nodes: int = 32) -> SublinearModel:
    """Uniform law on ``[-sigma*sqrt(3), sigma*sqrt(3)]`` via Gauss-Legendre atoms."""
    sigma = _check_sigma(sigma)
    quad_nodes = _check_nodes(quad_nodes)
    nodes, weights = np.polynomial.legendre.leggauss(quad_nodes)
    half = sigma * math.sqrt(3.0)
    scen = Scenario.centered(weights / 2.0, half * nodes)
    return SublinearModel(
        (scen,),
        label=f"uniform(sigma={sigma!r}, quad_nodes={quad_nodes})",
        params={"model": "uniform", "sigma": sigma, "quad_nodes": quad_nodes},
    )


def make_uncertain_binomial(sigma0: float, u: float, m: int = 21) -> SublinearModel:
    """Binomial model whose volatility ranges over ``[sigma0 - u, sigma0 + u]``.

    The volatility interval is replaced by ``m`` equally spaced values
    including both endpoints.
    """
    sigma0 = _check_sigma(sigma0, "sigma0")
    u = float(u)
    if not (0 <= u <= sigma0):
        raise ParameterError(f"uncertainty must satisfy 0 <= u <= sigma0 (u ≤ σ0), got u={u!r}, sigma0={sigma0!r}")
    if int(m) != m or m < 2:
        raise ParameterError(f"m must be an integer >= 2, got {m!r}")
    m = int(m)
    if u == sigma0:
        warnings.warn(
            "u == sigma0 puts a deterministic scenario in the model; "
            "the inf-variance is zero and the large risk aversion limit does not apply",
            stacklevel=2,
        )
    sigmas = np.linspace(sigma0 - u, sigma0 + u, m)
    scenarios = tuple(_two_point(float(s)) for s in sigmas)
    return SublinearModel(
        scenarios,
        label=f"uncertain_binomial(sigma0={sigma0!r}, u={u!r}, m={m})",
        params={"model": "uncertain_binomial", "sigma0": sigma0, "u": u, "m": m},
    )


def make_normal_family(
    sigmas: Sequence[float], trunc: float = 6.0, quad_nodes: int = 32
) -> SublinearModel:
    """Centered normal laws, one per volatility, truncated at ``trunc`` standard deviations."""
    sigmas = [float(s) for s in sigmas]
    if not sigmas:
        raise ParameterError("normal family needs at least one sigma")
    for s in sigmas:
        _check_sigma(s)
    trunc = float(trunc)
    if not trunc > 0:
        raise ParameterError(f"trunc must be > 0, got {trunc!r}")
    quad_nodes = _check_nodes(quad_nodes)
    nodes, weights = np.polynomial.legendre.leggauss(quad_nodes)
    z = trunc * nodes
    density = weights * np.exp(-0.5 * z * z)
    scenarios = tuple(Scenario.centered(density, s * z) for s in sigmas)
    label = ", ".join(repr(s) for s in sigmas)
    return SublinearModel(
        scenarios,
        label=f"normal_family(sigmas=[{label}], trunc={trunc!r}, quad_nodes={quad_nodes})",
        params={"model": "normal_family", "sigmas": sigmas, "trunc": trunc, "quad_nodes": quad_nodes},
    )


def covariance_G(model: SublinearModel, a: float) -> float:
    """``G(a) = E[a zeta^2] / 2`` for one-dimensional models."""
    a = float(a)
    return 0.5 * expect(model, lambda z: a * z * z)


def check_nondegeneracy(model: SublinearModel) -> tuple[float, float]:
    """Return ``(sup-variance, inf-variance)`` = ``(E[zeta^2], -E[-zeta^2])``."""
    sup_var = expect(model, lambda z: z * z)
    inf_var = -expect(model, lambda z: -z * z)
    return sup_var, inf_var
