"""Batch experiment front end.

Subcommands:

* ``mcqmc run <config.json>``   -- run one experiment, write CSV + manifest
* ``mcqmc bounds --d --n ...``  -- print the closed-form bound values
* ``mcqmc validate <config.json>`` -- check a config without running it

Exit codes: 0 success, 2 config error (nothing written), 3 infeasible
objective (e.g. exact discrepancy scan above dimension 3).

Every numeric written to the CSV is a pure function of (config, seed);
floats are serialized with 17 significant digits so they round-trip exactly.
The rate-study runtime_ms column is the one exception to byte-identical
reruns and is documented as such.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .ballwalk import make_metropolis_system
from .bounds import (
    BoundInputs,
    ballwalk_gap_bound,
    beck_bound,
    corollary_main_bound,
    hoeffding_tail,
    main_discrepancy_bound,
)
from .chain import make_direct_kernel, make_lazy_direct_kernel, run_chain
from .core import (
    Rng,
    exp_linear_interval,
    uniform_driver,
    uniform_interval,
)
from .discrepancy import (
    ExactScanInfeasible,
    build_quantile_cover,
    pullback_discrepancy_mc,
    star_discrepancy_exact,
)
from .search import SearchConfig, best_of_k, invert_to_target, rate_study

EXPERIMENTS = ("discrepancy", "pullback", "search", "rate-study", "bounds", "invert")

# keys accepted per experiment; "experiment" and "output" are always allowed
_COMMON = {"experiment", "output", "seed"}
_ALLOWED = {
    "discrepancy": _COMMON | {"dimension", "density", "kernel", "gamma", "a", "n", "n0"},
    "pullback": _COMMON
    | {"dimension", "density", "kernel", "gamma", "a", "n", "n0", "delta", "mc-replications"},
    "search": _COMMON
    | {
        "dimension", "density", "kernel", "gamma", "a", "n", "n0", "k",
        "delta", "mc-replications", "objective", "candidate-kinds",
    },
    "rate-study": _COMMON
    | {
        "dimension", "density", "kernel", "gamma", "a", "ns", "n0", "k",
        "delta", "mc-replications", "objective", "candidate-kinds",
    },
    "bounds": _COMMON | {"dimension", "n", "lambda0", "nu-norm", "delta", "epsilon"},
    "invert": _COMMON | {"density", "gamma", "n"},
}
_DENSITY_KEYS = {"name", "alpha"}


class ConfigError(ValueError):
    pass


class InfeasibleError(RuntimeError):
    pass


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}")
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} line {exc.lineno}: {exc.msg}")
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def _validate(cfg: dict) -> dict:
    exp = cfg.get("experiment")
    if exp not in EXPERIMENTS:
        raise ConfigError(
            f"key 'experiment' must be one of {EXPERIMENTS}, got {exp!r}"
        )
    allowed = _ALLOWED[exp]
    unknown = sorted(set(cfg) - allowed)
    if unknown:
        raise ConfigError(f"unknown keys for experiment {exp!r}: {unknown}")
    if "output" not in cfg:
        raise ConfigError("key 'output' is required")
    density = cfg.get("density")
    if density is not None:
        if not isinstance(density, dict):
            raise ConfigError("key 'density' must be an object {name, alpha}")
        bad = sorted(set(density) - _DENSITY_KEYS)
        if bad:
            raise ConfigError(f"unknown density keys: {bad}")
        if density.get("name") not in ("uniform", "exp-linear"):
            raise ConfigError(f"unknown density name {density.get('name')!r}")
    kernel = cfg.get("kernel")
    if kernel is not None and kernel not in ("metropolis-ballwalk", "direct", "lazy-direct"):
        raise ConfigError(f"unknown kernel {kernel!r}")
    if kernel == "lazy-direct" and "a" not in cfg:
        raise ConfigError("kernel 'lazy-direct' requires key 'a'")
    gamma = cfg.get("gamma")
    if gamma is not None and gamma != "gamma-star":
        try:
            if float(gamma) <= 0:
                raise ConfigError("key 'gamma' must be positive or 'gamma-star'")
        except (TypeError, ValueError):
            raise ConfigError(f"key 'gamma' must be a number or 'gamma-star', got {gamma!r}")
    return cfg


def _resolve_gamma(cfg: dict) -> float:
    gamma = cfg.get("gamma", "gamma-star")
    if gamma == "gamma-star":
        alpha = float(cfg.get("density", {}).get("alpha", 0.0))
        d = int(cfg.get("dimension", 1))
        if alpha > 0:
            return ballwalk_gap_bound(alpha, d)[0]
        return 1.0 / math.sqrt(d + 1)
    return float(gamma)


def _interval_target(density: dict):
    alpha = float(density.get("alpha", 0.0))
    if density["name"] == "uniform" or alpha == 0.0:
        return uniform_interval(-1.0, 1.0)
    return exp_linear_interval(alpha, -1.0, 1.0)


def _build_system(cfg: dict, gamma: float):
    kernel = cfg.get("kernel", "metropolis-ballwalk")
    density = cfg.get("density", {"name": "uniform", "alpha": 0.0})
    d = int(cfg.get("dimension", 1))
    if kernel == "metropolis-ballwalk":
        return make_metropolis_system(
            density["name"], float(density.get("alpha", 0.0)), gamma, d
        )
    if d != 1:
        raise ConfigError(f"kernel {kernel!r} is implemented for dimension 1 only")
    target = _interval_target(density)
    if kernel == "direct":
        return make_direct_kernel(target)
    return make_lazy_direct_kernel(target, float(cfg["a"]))


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Experiment implementations
# ---------------------------------------------------------------------------


def _run_bounds(cfg: dict):
    inp = BoundInputs(
        n=int(cfg.get("n", 16)),
        d=int(cfg.get("dimension", 1)),
        lambda0=float(cfg.get("lambda0", 0.0)),
        nu_norm=float(cfg.get("nu-norm", 1.0)),
        delta=float(cfg.get("delta", 0.0)),
        epsilon=float(cfg.get("epsilon", 0.25)),
    )
    header = ["d", "n", "lambda0", "nu_norm", "corollary_bound", "beck_bound"]
    row = [
        inp.d, inp.n, inp.lambda0, inp.nu_norm,
        corollary_main_bound(inp), beck_bound(inp.n, inp.d),
    ]
    return header, [row], {}


def _run_discrepancy(cfg: dict):
    gamma = _resolve_gamma(cfg)
    system = _build_system(cfg, gamma)
    if system.dim > 3:
        raise InfeasibleError("exact discrepancy scan is limited to dimension <= 3")
    n = int(cfg.get("n", 64))
    n0 = int(cfg.get("n0", 0))
    seed = int(cfg.get("seed", 0))
    driver = uniform_driver(n + n0, system.s, Rng(seed))
    path = run_chain(system, driver, burn_in=n0)
    report = star_discrepancy_exact(path.retained, system.target)
    header = ["n", "seed", "disc_lower", "disc_upper"]
    return header, [[n, seed, report.lower, report.upper]], {"gamma": gamma}


def _run_pullback(cfg: dict):
    gamma = _resolve_gamma(cfg)
    system = _build_system(cfg, gamma)
    n = int(cfg.get("n", 64))
    n0 = int(cfg.get("n0", 0))
    seed = int(cfg.get("seed", 0))
    delta = float(cfg.get("delta", 0.01))
    m = int(cfg.get("mc-replications", 200))
    cover = build_quantile_cover(system.target, delta)
    driver = uniform_driver(n + n0, system.s, Rng(seed))
    report = pullback_discrepancy_mc(system, driver, n0, cover, m, Rng(seed).split(7))
    header = ["n", "seed", "delta", "disc_lower", "disc_upper", "mc_stderr"]
    return (
        header,
        [[n, seed, delta, report.lower, report.upper, report.mc_stderr]],
        {"gamma": gamma},
    )


def _search_config(cfg: dict, n: int) -> SearchConfig:
    return SearchConfig(
        n=n,
        k=int(cfg.get("k", 16)),
        seed=int(cfg.get("seed", 0)),
        n0=int(cfg.get("n0", 0)),
        candidate_kinds=tuple(cfg.get("candidate-kinds", ["uniform-random"])),
        objective=cfg.get("objective", "star-exact"),
        delta=float(cfg.get("delta", 0.01)),
        mc_replications=int(cfg.get("mc-replications", 200)),
    )


def _cover_builder(cfg: dict, system):
    sc = _search_config(cfg, 1)
    if sc.objective == "star-exact":
        return None
    return lambda n: build_quantile_cover(system.target, sc.delta)


def _run_search(cfg: dict):
    gamma = _resolve_gamma(cfg)
    system = _build_system(cfg, gamma)
    sc = _search_config(cfg, int(cfg.get("n", 64)))
    if sc.objective == "star-exact" and system.dim > 3:
        raise InfeasibleError("exact discrepancy scan is limited to dimension <= 3")
    builder = _cover_builder(cfg, system)
    cover = builder(sc.n) if builder is not None else None
    result = best_of_k(system, sc, cover=cover)
    header = ["n", "seed", "disc_lower", "disc_upper", "theory_bound"]
    row = [sc.n, sc.seed, result.best_report.lower, result.best_report.upper, result.theory_bound]
    return header, [row], {"gamma": gamma, "all_scores": list(result.all_scores)}


def _run_rate_study(cfg: dict):
    gamma = _resolve_gamma(cfg)
    system = _build_system(cfg, gamma)
    ns = [int(v) for v in cfg.get("ns", [64, 256, 1024])]
    sc = _search_config(cfg, ns[0])
    if sc.objective == "star-exact" and system.dim > 3:
        raise InfeasibleError("exact discrepancy scan is limited to dimension <= 3")
    rows = rate_study(system, ns, sc, cover_builder=_cover_builder(cfg, system))
    header = ["n", "seed", "disc_lower", "disc_upper", "theory_bound", "beck_bound", "runtime_ms"]
    out = [[r[h] for h in header] for r in rows]
    return header, out, {"gamma": gamma}


def _run_invert(cfg: dict):
    density = cfg.get("density", {"name": "uniform", "alpha": 0.0})
    gamma = float(cfg.get("gamma", 2.0))
    if gamma < 2.0:
        raise ConfigError("inversion requires gamma >= 2")
    n = int(cfg.get("n", 64))
    system = make_metropolis_system(
        density["name"], float(density.get("alpha", 0.0)), gamma, 1
    )
    target = _interval_target(density)
    quantiles = (2.0 * np.arange(n) + 1.0) / (2.0 * n)
    targets = [np.array([target.inv_cdf(q)]) for q in quantiles]
    # x1_driver: ball generator on [-1,1] maps (sign, radius) to +-radius
    t0 = float(targets[0][0])
    x1_driver = np.array([0.25 if t0 < 0 else 0.75, abs(t0), 0.0])
    driver = invert_to_target(system, targets, x1_driver)
    path = run_chain(system, driver)
    report = star_discrepancy_exact(path.states, target)
    dev = float(np.max(np.abs(path.states - np.stack(targets))))
    header = ["n", "disc_lower", "disc_upper", "max_deviation"]
    return header, [[n, report.lower, report.upper, dev]], {"gamma": gamma}


_RUNNERS = {
    "bounds": _run_bounds,
    "discrepancy": _run_discrepancy,
    "pullback": _run_pullback,
    "search": _run_search,
    "rate-study": _run_rate_study,
    "invert": _run_invert,
}


def _cmd_run(path: str) -> int:
    try:
        cfg = _validate(_load_config(path))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    try:
        header, rows, extra = _RUNNERS[cfg["experiment"]](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (InfeasibleError, ExactScanInfeasible, NotImplementedError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    wall = time.perf_counter() - t0
    out = Path(cfg["output"])
    _write_csv(out, header, rows)
    manifest = {
        "config": cfg,
        "version": __version__,
        "seed": int(cfg.get("seed", 0)),
        "wall_time_s": wall,
        **extra,
    }
    out.with_suffix(out.suffix + ".manifest.json").write_text(
        json.dumps(manifest, indent=2, default=str) + "\n"
    )
    return 0


def _cmd_validate(path: str) -> int:
    try:
        _validate(_load_config(path))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print("ok")
    return 0


def _cmd_bounds(args) -> int:
    inp = BoundInputs(
        n=args.n, d=args.d, lambda0=args.lambda0, nu_norm=args.norm, c=0.1
    )
    print(f"corollary_bound {_fmt(corollary_main_bound(inp))}")
    print(f"beck_bound {_fmt(beck_bound(args.n, args.d))}")
    print(f"hoeffding_tail(c=0.1) {_fmt(hoeffding_tail(inp))}")
    if args.alpha > 0:
        gamma_star, gap = ballwalk_gap_bound(args.alpha, args.d)
        print(f"gamma_star {_fmt(gamma_star)}")
        print(f"spectral_gap {_fmt(gap)}")
        print(
            "main_bound(delta=0.01) "
            f"{_fmt(main_discrepancy_bound(BoundInputs(n=args.n, d=args.d, lambda0=1.0 - gap, nu_norm=math.exp(args.alpha), cover_size=2, delta=0.01)))}"
        )
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mcqmc", description="Markov chain quasi-Monte Carlo experiments"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("config")

    p_val = sub.add_parser("validate", help="validate a JSON config")
    p_val.add_argument("config")

    p_bounds = sub.add_parser("bounds", help="print closed-form bound values")
    p_bounds.add_argument("--d", type=int, default=1)
    p_bounds.add_argument("--n", type=int, default=16)
    p_bounds.add_argument("--alpha", type=float, default=0.0)
    p_bounds.add_argument("--lambda0", type=float, default=0.0)
    p_bounds.add_argument("--norm", type=float, default=1.0)

    args = parser.parse_args(argv)
    if args.command == "run":
        return _cmd_run(args.config)
    if args.command == "validate":
        return _cmd_validate(args.config)
    return _cmd_bounds(args)


if __name__ == "__main__":
    sys.exit(main())
