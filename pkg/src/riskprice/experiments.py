"""Experiment configurations and runners behind the command line tool.

A configuration is an INI-style file with ``[section]`` headers and plain
``key = value`` lines. Lists are comma separated. Every runner writes one or
two CSV files plus a plot script into the output directory.

Sections and keys (defaults in parentheses)::

    [experiment] kind, name (kind)
    [model]      kind = binomial | trinomial | uniform | uncertain_binomial | normal_family
                 sigma, sigma0, u, m (21), sigmas, trunc (6), quad_nodes (32)
                 kinds       model list for model_comparison
                 u_values    uncertainty levels for uncertainty_sweep
    [profile]    alpha (1), constraint = unconstrained | volume, radius
                 alphas      risk aversions for alpha_sweep and bid_ask
    [market]     mu, T, n
                 n_list      step counts for convergence_table
    [payoff]     strikes (0.9, 1.0, 1.1)
    [engine]     target (0.8, 1.2), dx (1e-3), mode (direct), coarse_stride (4), workers (1)
    [output]     dir (results, relative to the config file)
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .analytics import bachelier_butterfly, butterfly, implied_bachelier_vol
from .engine import EngineConfig, convergence_table, iterate_ask, iterate_worst_case, price_curve, _grid_for
from .errors import ConfigError
from .models import (
    SublinearModel,
    make_binomial,
    make_normal_family,
    make_trinomial,
    make_uncertain_binomial,
    make_uniform,
)
from .plotting import Panel, PlotScript, Series
from .risk import RiskProfile, Unconstrained, VolumeBound
from .tables import write_table

EXPERIMENTS = {
    "price_curve": ("Fig 1", "ask, bid and worst-case curves of one model next to the Bachelier price"),
    "model_comparison": ("Fig 2", "ask curves and implied Bachelier vols for several linear models"),
    "uncertainty_sweep": ("Fig 3", "ask curves of the uncertain binomial model for several uncertainty levels"),
    "alpha_sweep": ("Fig 4", "ask curves for several risk aversions against the worst-case bound"),
    "bid_ask": ("Fig 5", "bid curves for several risk aversions and risk-based vs worst-case spreads"),
    "convergence_table": ("Fig 1", "ask price at one spot for a list of step counts against Bachelier"),
    "implied_vol_curve": ("Fig 2", "implied Bachelier vol of the ask curve of one model"),
}

MODEL_KINDS = ("binomial", "trinomial", "uniform", "uncertain_binomial", "normal_family")


def list_experiments() -> str:
    width = max(map(len, EXPERIMENTS))
    return "\n".join(f"{k:<{width}}  {fig}  {desc}" for k, (fig, desc) in EXPERIMENTS.items()) + "\n"


class _Section:
    """Typed access to one config section; errors name section and key."""

    def __init__(self, parser: configparser.ConfigParser, name: str):
        self.name = name
        self.data = parser[name] if parser.has_section(name) else {}

    def _raw(self, key, default):
        if key in self.data:
            return self.data[key].strip()
        if default is _REQUIRED:
            raise ConfigError(f"[{self.name}] missing required key '{key}'")
        return default

    def _convert(self, key, raw, kind, label):
        try:
            return kind(raw)
        except ValueError:
            raise ConfigError(f"[{self.name}] {key}: expected {label}, got {raw!r}") from None

    def str(self, key, default=None):
        return self._raw(key, default)

    def float(self, key, default=None):
        raw = self._raw(key, default)
        if raw is None or not isinstance(raw, str):
            return raw
        return self._convert(key, raw, float, "a number")

    def int(self, key, default=None):
        raw = self._raw(key, default)
        if raw is None or not isinstance(raw, str):
            return raw
        return self._convert(key, raw, int, "an integer")

    def floats(self, key, default=None):
        raw = self._raw(key, default)
        if raw is None or not isinstance(raw, str):
            return raw
        return tuple(self._convert(key, v.strip(), float, "a list of numbers") for v in raw.split(",") if v.strip())

    def ints(self, key, default=None):
        raw = self._raw(key, default)
        if raw is None or not isinstance(raw, str):
            return raw
        return tuple(self._convert(key, v.strip(), int, "a list of integers") for v in raw.split(",") if v.strip())

    def words(self, key, default=None):
        raw = self._raw(key, default)
        if raw is None or not isinstance(raw, str):
            return raw
        return tuple(v.strip() for v in raw.split(",") if v.strip())


_REQUIRED = object()


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    sigma: Optional[float] = None
    sigma0: Optional[float] = None
    u: Optional[float] = None
    m: int = 21
    sigmas: Optional[tuple] = None
    trunc: float = 6.0
    quad_nodes: int = 32

    def build(self) -> SublinearModel:
        need = {
            "binomial": ("sigma",),
            "trinomial": ("sigma",),
            "uniform": ("sigma",),
            "uncertain_binomial": ("sigma0", "u"),
            "normal_family": ("sigmas",),
        }[self.kind]
        for key in need:
            if getattr(self, key) is None:
                raise ConfigError(f"[model] missing required key '{key}' for kind {self.kind}")
        if self.kind == "binomial":
            return make_binomial(self.sigma)
        if self.kind == "trinomial":
            return make_trinomial(self.sigma)
        if self.kind == "uniform":
            return make_uniform(self.sigma, self.quad_nodes)
        if self.kind == "uncertain_binomial":
            return make_uncertain_binomial(self.sigma0, self.u, self.m)
        return make_normal_family(self.sigmas, self.trunc, self.quad_nodes)

    @property
    def reference_sigma(self) -> Optional[float]:
        return self.sigma if self.sigma is not None else self.sigma0


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    name: str
    model: ModelSpec
    profile: RiskProfile
    mu: float
    maturity: float
    n: int
    engine: EngineConfig
    strikes: tuple = (0.9, 1.0, 1.1)
    model_kinds: tuple = ()
    u_values: tuple = ()
    alphas: tuple = ()
    n_list: tuple = ()
    out_dir: Path = Path("results")

    @property
    def payoff(self):
        return butterfly(*self.strikes)


def parse_config(text: str, base_dir: Path = Path(".")) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config parse error: {exc}") from None
    known = {"experiment", "model", "profile", "market", "payoff", "engine", "output"}
    extra = set(parser.sections()) - known
    if extra:
        raise ConfigError(f"unknown config section(s): {', '.join(sorted(extra))}")

    exp = _Section(parser, "experiment")
    kind = exp.str("kind", _REQUIRED)
    if kind not in EXPERIMENTS:
        raise ConfigError(f"[experiment] kind: unknown experiment {kind!r}; choose one of {', '.join(EXPERIMENTS)}")
    name = exp.str("name", kind)

    mod = _Section(parser, "model")
    model_kinds = mod.words("kinds", ())
    mkind = mod.str("kind", model_kinds[0] if model_kinds else _REQUIRED)
    for k in (mkind,) + model_kinds:
        if k not in MODEL_KINDS:
            raise ConfigError(f"[model] kind: unknown model {k!r}; choose one of {', '.join(MODEL_KINDS)}")
    model = ModelSpec(
        kind=mkind,
        sigma=mod.float("sigma"),
        sigma0=mod.float("sigma0"),
        u=mod.float("u"),
        m=mod.int("m", 21),
        sigmas=mod.floats("sigmas"),
        trunc=mod.float("trunc", 6.0),
        quad_nodes=mod.int("quad_nodes", 32),
    )

    prof = _Section(parser, "profile")
    cons = prof.str("constraint", "unconstrained")
    if cons == "unconstrained":
        constraint = Unconstrained()
    elif cons == "volume":
        constraint = VolumeBound(prof.float("radius", _REQUIRED))
    else:
        raise ConfigError(f"[profile] constraint: expected 'unconstrained' or 'volume', got {cons!r}")
    profile = RiskProfile(prof.float("alpha", 1.0), constraint)

    mk = _Section(parser, "market")
    mu, maturity = mk.float("mu", _REQUIRED), mk.float("T", _REQUIRED)
    n = mk.int("n", _REQUIRED)

    eng = _Section(parser, "engine")
    target = eng.floats("target", (0.8, 1.2))
    if len(target) != 2:
        raise ConfigError(f"[engine] target: expected two numbers 'lo, hi', got {target!r}")
    engine = EngineConfig(
        target=target,
        n=n,
        maturity=maturity,
        dx=eng.float("dx", 1e-3),
        mode=eng.str("mode", "direct"),
        coarse_stride=eng.int("coarse_stride", 4),
        workers=eng.int("workers", 1),
    )

    strikes = _Section(parser, "payoff").floats("strikes", (0.9, 1.0, 1.1))
    if len(strikes) != 3:
        raise ConfigError(f"[payoff] strikes: expected three strikes, got {strikes!r}")

    out = Path(_Section(parser, "output").str("dir", "results"))
    cfg = ExperimentConfig(
        kind=kind,
        name=name,
        model=model,
        profile=profile,
        mu=mu,
        maturity=maturity,
        n=n,
        engine=engine,
        strikes=strikes,
        model_kinds=model_kinds,
        u_values=mod.floats("u_values", ()),
        alphas=prof.floats("alphas", ()),
        n_list=mk.ints("n_list", ()),
        out_dir=out if out.is_absolute() else base_dir / out,
    )
    _check_lists(cfg)
    return cfg


def _check_lists(cfg: ExperimentConfig):
    need = {
        "model_comparison": ("model_kinds", "[model] kinds"),
        "uncertainty_sweep": ("u_values", "[model] u_values"),
        "alpha_sweep": ("alphas", "[profile] alphas"),
        "bid_ask": ("alphas", "[profile] alphas"),
        "convergence_table": ("n_list", "[market] n_list"),
    }.get(cfg.kind)
    if need and not getattr(cfg, need[0]):
        raise ConfigError(f"{need[1]} is required for experiment {cfg.kind}")
    if cfg.kind == "uncertainty_sweep" and cfg.model.kind != "uncertain_binomial":
        raise ConfigError("[model] kind must be uncertain_binomial for uncertainty_sweep")


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, path.resolve().parent)


# -- runners -----------------------------------------------------------------


@dataclass
class RunResult:
    csv: list[Path]
    plot: PlotScript


def _meta(cfg: ExperimentConfig, model_label: Optional[str] = None, **extra) -> dict:
    meta = {
        "experiment": cfg.kind,
        "model": model_label or cfg.model.build().label,
        "alpha": cfg.profile.alpha,
        "constraint": cfg.profile.constraint,
        "mu": cfg.mu,
        "n": cfg.n,
        "T": cfg.maturity,
        "dx": cfg.engine.dx,
        "mode": cfg.engine.mode,
        "payoff": cfg.payoff.label,
    }
    meta.update(extra)
    return meta


def _tag(v: float) -> str:
    return format(v, "g")


def _implied_vols(prices, xs, cfg: ExperimentConfig):
    # two vols can reproduce a butterfly price; take the branch nearest the model's own vol
    vols, ref = [], cfg.model.reference_sigma
    for p, x in zip(prices, xs):
        v = implied_bachelier_vol(p, x, cfg.strikes, cfg.maturity, reference=ref)
        vols.append(v if v else math.nan)
    return np.array(vols)


def _ask_curve(cfg: ExperimentConfig, model: SublinearModel, profile: Optional[RiskProfile] = None, grid=None):
    g = iterate_ask(cfg.payoff, model, profile or cfg.profile, cfg.mu, cfg.engine, grid)
    return g.restrict(*cfg.engine.target)


def _worst_curve(cfg: ExperimentConfig, model: SublinearModel, sign: float = 1.0, grid=None):
    payoff = cfg.payoff if sign > 0 else -cfg.payoff
    g = iterate_worst_case(payoff, model, cfg.engine, grid)
    xs, v = g.restrict(*cfg.engine.target)
    return xs, sign * v


def run_price_curve(cfg, out: Path, stem: str) -> RunResult:
    model = cfg.model.build()
    curve = price_curve(cfg.payoff, model, cfg.profile, cfg.mu, cfg.engine, metadata={"experiment": cfg.kind})
    main = curve.to_csv(out / f"{stem}.csv")
    ref = {"x": curve.xs, "payoff": cfg.payoff(curve.xs)}
    if cfg.model.reference_sigma is not None:
        ref["bachelier"] = bachelier_butterfly(curve.xs, cfg.strikes, cfg.model.reference_sigma, cfg.maturity)
    aux = write_table(out / f"{stem}_reference.csv", ref, {"sigma": cfg.model.reference_sigma, "T": cfg.maturity})
    series = [Series("ask", "ask"), Series("bid", "bid"), Series("worst_ask", "worst-case ask", "--"),
              Series("worst_bid", "worst-case bid", "--")]
    ref_series = [Series("payoff", "payoff", ":")]
    if "bachelier" in ref:
        ref_series.append(Series("bachelier", "Bachelier", "-."))
    plot = PlotScript(f"{model.label}: prices at T={cfg.maturity:g}, n={cfg.n}", [
        Panel(main.name, "x", series, title="risk-based and worst-case prices"),
        Panel(aux.name, "x", ref_series, title="payoff and Bachelier reference"),
    ])
    return RunResult([main, aux], plot)


def run_model_comparison(cfg, out: Path, stem: str) -> RunResult:
    cols, labels = {}, []
    for kind in cfg.model_kinds:
        model = replace(cfg.model, kind=kind).build()
        xs, ask = _ask_curve(cfg, model)
        cols.setdefault("x", xs)
        cols[f"ask_{kind}"] = ask
        cols[f"vol_{kind}"] = _implied_vols(ask, xs, cfg)
        labels.append(model.label)
    sigma = cfg.model.reference_sigma
    if sigma is not None:
        cols["bachelier"] = bachelier_butterfly(cols["x"], cfg.strikes, sigma, cfg.maturity)
    path = write_table(out / f"{stem}.csv", cols, _meta(cfg, "; ".join(labels)))
    prices = [Series(f"ask_{k}", k) for k in cfg.model_kinds]
    if sigma is not None:
        prices.append(Series("bachelier", "Bachelier", "k--"))
    vols = [Series(f"vol_{k}", k) for k in cfg.model_kinds]
    plot = PlotScript(f"linear models, n={cfg.n}", [
        Panel(path.name, "x", prices, title="pricing dynamics"),
        Panel(path.name, "x", vols, ylabel="implied Bachelier vol", title="implied Bachelier volatilities"),
    ])
    return RunResult([path], plot)


def run_uncertainty_sweep(cfg, out: Path, stem: str) -> RunResult:
    cols, labels = {}, []
    for u in cfg.u_values:
        model = replace(cfg.model, u=u).build()
        xs, ask = _ask_curve(cfg, model)
        cols.setdefault("x", xs)
        cols[f"ask_u_{_tag(u)}"] = ask
        labels.append(model.label)
    path = write_table(out / f"{stem}.csv", cols, _meta(cfg, "; ".join(labels), u_values=list(cfg.u_values)))
    series = [Series(f"ask_u_{_tag(u)}", f"u={_tag(u)}") for u in cfg.u_values]
    plot = PlotScript(f"uncertainty level, alpha={cfg.profile.alpha:g}", [
        Panel(path.name, "x", series, ylabel="ask", title="ask prices"),
    ])
    return RunResult([path], plot)


def run_alpha_sweep(cfg, out: Path, stem: str) -> RunResult:
    model = cfg.model.build()
    grid = _grid_for(model, cfg.mu, cfg.engine)
    xs, worst = _worst_curve(cfg, model, grid=grid)
    cols = {"x": xs, "payoff": cfg.payoff(xs)}
    for a in cfg.alphas:
        cols[f"ask_alpha_{_tag(a)}"] = _ask_curve(cfg, model, replace(cfg.profile, alpha=a), grid)[1]
    cols["worst_ask"] = worst
    path = write_table(out / f"{stem}.csv", cols, _meta(cfg, alphas=list(cfg.alphas)))
    series = [Series(f"ask_alpha_{_tag(a)}", f"alpha={_tag(a)}") for a in cfg.alphas]
    worst_s = Series("worst_ask", "worst case", "k--")
    plot = PlotScript(f"{model.label}: risk aversion", [
        Panel(path.name, "x", [Series("payoff", "payoff", ":")] + series[:2] + [worst_s], title="payoff and ask prices"),
        Panel(path.name, "x", series + [worst_s], ylabel="ask", title="risk aversion"),
    ])
    return RunResult([path], plot)


def run_bid_ask(cfg, out: Path, stem: str) -> RunResult:
    model = cfg.model.build()
    grid = _grid_for(model, cfg.mu, cfg.engine)
    curve = price_curve(cfg.payoff, model, cfg.profile, cfg.mu, cfg.engine)
    cols = {"x": curve.xs, "payoff": cfg.payoff(curve.xs)}
    for a in cfg.alphas:
        g = iterate_ask(-cfg.payoff, model, replace(cfg.profile, alpha=a), cfg.mu, cfg.engine, grid)
        cols[f"bid_alpha_{_tag(a)}"] = -g.restrict(*cfg.engine.target)[1]
    cols.update(ask=curve.ask, bid=curve.bid, worst_ask=curve.worst_ask, worst_bid=curve.worst_bid)
    path = write_table(out / f"{stem}.csv", cols, _meta(cfg, alphas=list(cfg.alphas)))
    bids = [Series(f"bid_alpha_{_tag(a)}", f"alpha={_tag(a)}") for a in cfg.alphas]
    a0 = _tag(cfg.profile.alpha)
    bounds = [Series("ask", f"ask, alpha={a0}", "b-"), Series("bid", f"bid, alpha={a0}", "b-"),
              Series("worst_ask", "worst-case ask", "r--"), Series("worst_bid", "worst-case bid", "r--")]
    plot = PlotScript(f"{model.label}: bid-ask", [
        Panel(path.name, "x", [Series("payoff", "payoff", ":")] + bids, ylabel="bid", title="payoff and bid prices"),
        Panel(path.name, "x", bounds, title="risk-based vs worst-case bounds"),
    ])
    return RunResult([path], plot)


def run_convergence_table(cfg, out: Path, stem: str) -> RunResult:
    model = cfg.model.build()
    x0 = float(np.mean(cfg.engine.target)) if cfg.engine.target[0] != cfg.engine.target[1] else cfg.engine.target[0]
    rows = convergence_table(cfg.payoff, model, cfg.profile, cfg.mu, x0, cfg.maturity, cfg.n_list,
                             cfg.engine.dx, cfg.engine.mode)
    ns = np.array([r[0] for r in rows])
    prices = np.array([r[1] for r in rows])
    cols = {"n": ns, "ask": prices}
    if cfg.model.reference_sigma is not None:
        ref = bachelier_butterfly(x0, cfg.strikes, cfg.model.reference_sigma, cfg.maturity)
        cols["bachelier"] = np.full(ns.shape, ref)
        cols["abs_error"] = np.abs(prices - ref)
    path = write_table(out / f"{stem}.csv", cols, _meta(cfg, x=x0, n_list=list(cfg.n_list)))
    series = [Series("ask", "ask")]
    if "bachelier" in cols:
        series.append(Series("bachelier", "Bachelier", "k--"))
    plot = PlotScript(f"{model.label}: convergence at x={x0:g}", [
        Panel(path.name, "n", series, xlabel="n", title="ask price against number of steps", marker="o"),
    ])
    return RunResult([path], plot)


def run_implied_vol_curve(cfg, out: Path, stem: str) -> RunResult:
    model = cfg.model.build()
    xs, ask = _ask_curve(cfg, model)
    path = write_table(out / f"{stem}.csv", {"x": xs, "ask": ask, "implied_vol": _implied_vols(ask, xs, cfg)},
                       _meta(cfg))
    plot = PlotScript(f"{model.label}: implied Bachelier vol", [
        Panel(path.name, "x", [Series("ask", "ask")], title="ask prices"),
        Panel(path.name, "x", [Series("implied_vol", "implied vol")], ylabel="implied Bachelier vol",
              title="implied Bachelier volatility"),
    ])
    return RunResult([path], plot)


RUNNERS: dict[str, Callable] = {
    "price_curve": run_price_curve,
    "model_comparison": run_model_comparison,
    "uncertainty_sweep": run_uncertainty_sweep,
    "alpha_sweep": run_alpha_sweep,
    "bid_ask": run_bid_ask,
    "convergence_table": run_convergence_table,
    "implied_vol_curve": run_implied_vol_curve,
}


def run_experiment(cfg: ExperimentConfig, out_dir: Optional[Path] = None) -> RunResult:
    """Run one experiment; CSV files and the plot script land in the output directory."""
    out = Path(out_dir) if out_dir is not None else cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    result = RUNNERS[cfg.kind](cfg, out, cfg.name)
    result.plot.write(out, cfg.name)
    return result
