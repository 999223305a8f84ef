"""Command-line interface: build/verify hat networks, compute rate and
Lipschitz bounds, and run hardness / upper-bound sweeps.

Configuration comes from an optional JSON file (--config) merged with
command-line flags (flags win); every emitted artifact embeds the fully
resolved configuration so it is self-describing.  Exit status encodes the
scientific pass/fail of the command, not merely crash-freedom.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .hats import (
    BumpSpec,
    HatBuildParams,
    build_hat,
    choose_amplitude_base,
    verify_hat,
)
from .network import (
    GrowthPolicy,
    deserialize,
    depth_extend,
    realize,
    serialize,
    sum_networks,
)
from .hats import lambda_network
from .rates import (
    LipschitzBoundInput,
    empirical_lipschitz,
    gamma_closed_form,
    gamma_numeric,
    lipschitz_bound,
    rate_window,
)
from .sampling import (
    grid_algorithm,
    run_hardness_sweep,
    run_mc_sweep,
    run_upper_bound_sweep,
    uniform_mc,
    uniform_random_algorithm,
    zero_algorithm,
)


def worker_cap() -> int:
    """Maximum worker count honored by sweep orchestration (currently all
    sweeps run on a single worker, which trivially respects any cap >= 1)."""
    raw = os.environ.get("REQU_GAP_THREADS", "")
    try:
        return max(1, int(raw)) if raw else 1
    except ValueError:
        return 1


class ConfigError(ValueError):
    pass


def _merge_config(args, defaults: dict) -> dict:
    cfg = dict(defaults)
    if args.config:
        with open(args.config, "rb") as fh:
            try:
                file_cfg = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid config JSON: {exc}") from exc
        unknown = set(file_cfg) - set(defaults)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(file_cfg)
    for key in defaults:
        flag = getattr(args, key.replace("-", "_"), None)
        if flag is not None:
            cfg[key] = flag
    return cfg


def _policy_from(cfg) -> GrowthPolicy:
    depth_cap = cfg["depth_cap"]
    if depth_cap in ("inf", math.inf):
        depth_cap = math.inf
    return GrowthPolicy(
        kind="parametric",
        theta_c=float(cfg["theta_c"]),
        kappa_c=float(cfg["kappa_c"]),
        scale=float(cfg["scale"]),
        depth_cap=depth_cap if depth_cap == math.inf else int(depth_cap),
    )


_POLICY_DEFAULTS = {"theta_c": 0.0, "kappa_c": 0.0, "scale": 1.0, "depth_cap": 5}


def _emit(args, payload: dict, csv_text: str | None = None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True, default=str)
    fmt = getattr(args, "format", None) or "json"
    if args.out:
        out = Path(args.out)
        if csv_text is not None and fmt == "csv":
            out.write_text(csv_text)
            out.with_suffix(out.suffix + ".json").write_text(text + "\n")
        else:
            out.write_text(text + "\n")
            if csv_text is not None:
                out.with_suffix(out.suffix + ".csv").write_text(csv_text)
    else:
        sys.stdout.write(text + "\n")
        if csv_text is not None and fmt == "csv":
            sys.stdout.write(csv_text)


def _hat_params(cfg) -> HatBuildParams:
    policy = _policy_from(cfg)
    d = int(cfg["d"])
    y = cfg["y"]
    if y is None:
        y = [0.5] * d
    elif isinstance(y, str):
        y = [float(v) for v in y.split(",")]
    C = cfg["C"]
    if C is None:
        C = choose_amplitude_base(policy, int(cfg["n"]))
    spec = BumpSpec(d=d, M=float(cfg["M"]), y=tuple(y), p=2)
    return HatBuildParams(
        n=int(cfg["n"]), L=int(cfg["L"]), C=float(C), spec=spec, policy=policy
    )


_HAT_DEFAULTS = {
    "n": 1,
    "L": 5,
    "C": None,
    "M": 1.0,
    "d": 1,
    "y": None,
    "points": 10_000,
    **_POLICY_DEFAULTS,
}


def cmd_build_hat(args) -> int:
    cfg = _merge_config(args, _HAT_DEFAULTS)
    try:
        params = _hat_params(cfg)
        hat = build_hat(params)
        net = hat.network
    except ValueError as exc:
        print(f"build-hat: {exc}", file=sys.stderr)
        return 2
    report = verify_hat(params, num_points=int(cfg["points"]), seed=args.seed or 0)
    report["config"] = cfg
    report["worker_cap"] = worker_cap()
    if args.out:
        Path(args.out).write_bytes(serialize(net))
        Path(str(args.out) + ".verify.json").write_text(
            json.dumps(report, indent=2, sort_keys=True) + "\n"
        )
    else:
        sys.stdout.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return 0 if report["pass"] else 1


def cmd_verify_hat(args) -> int:
    cfg = _merge_config(args, {**_HAT_DEFAULTS, "network": None})
    try:
        params = _hat_params(cfg)
        report = verify_hat(params, num_points=int(cfg["points"]), seed=args.seed or 0)
        if cfg["network"]:
            stored = deserialize(Path(cfg["network"]).read_bytes())
            rebuilt = build_hat(params).network
            report["file_matches"] = serialize(stored) == serialize(rebuilt)
    except ValueError as exc:
        print(f"verify-hat: {exc}", file=sys.stderr)
        return 2
    report["config"] = {k: v for k, v in cfg.items() if k != "network"}
    _emit(args, report)
    return 0 if report["pass"] and report.get("file_matches", True) else 1


_RATES_DEFAULTS = {"alpha": 1.0, "d": 1, "n_max": 0, **_POLICY_DEFAULTS}


def cmd_rates(args) -> int:
    cfg = _merge_config(args, _RATES_DEFAULTS)
    try:
        policy = _policy_from(cfg)
        window = rate_window(float(cfg["alpha"]), int(cfg["d"]), policy)
        payload = {
            "config": cfg,
            "gamma_flat": window.gamma_flat,
            "gamma_sharp": window.gamma_sharp,
            "lower_rate": window.lower_rate,
            "upper_rate": window.upper_rate,
            "degenerate": window.degenerate,
            "method": "closed-form",
        }
        if int(cfg["n_max"]) >= 100:
            est = gamma_numeric(policy, int(cfg["n_max"]))
            payload["gamma_numeric"] = est[0]
    except ValueError as exc:
        print(f"rates: {exc}", file=sys.stderr)
        return 2
    _emit(args, payload)
    return 0 if not payload["degenerate"] else 1


_LIP_DEFAULTS = {
    **_HAT_DEFAULTS,
    "R": 1.0,
    "norm": "unit-cube-l1",
    "samples": 1000,
}


def cmd_lipschitz(args) -> int:
    cfg = _merge_config(args, _LIP_DEFAULTS)
    try:
        params = _hat_params(cfg)
        hat = build_hat(params)
        inp = LipschitzBoundInput(
            L=params.L,
            C=params.C,
            n=hat.weight_budget(),
            R=float(cfg["R"]),
            d=params.spec.d,
            norm=cfg["norm"],
        )
        bound = lipschitz_bound(inp)
        norm = "linf" if cfg["norm"].endswith("linf") else "l1"
        emp = empirical_lipschitz(
            hat.realize,
            (np.zeros(params.spec.d), np.ones(params.spec.d)),
            samples=int(cfg["samples"]),
            norm=norm,
            seed=args.seed or 0,
        )
        ratio_log2 = (math.log2(emp) - bound.log2) if emp > 0 else -math.inf
        payload = {
            "config": cfg,
            "bound_log2": bound.log2,
            "bound": bound.value,
            "overflow": bound.overflow,
            "empirical": emp,
            "ratio_log2": ratio_log2,
            "pass": bool(emp <= bound.value or math.log2(max(emp, 1e-300)) <= bound.log2),
        }
    except ValueError as exc:
        print(f"lipschitz: {exc}", file=sys.stderr)
        return 2
    _emit(args, payload)
    return 0 if payload["pass"] else 1


_SWEEP_DEFAULTS = {
    "d": 1,
    "alpha": 1.0,
    "gamma": None,
    "algorithm": "grid",
    "kappa1": None,
    "draws": 30,
    **_POLICY_DEFAULTS,
}

_ALGORITHMS = {
    "grid": lambda m, d, seed: grid_algorithm(m, d, "nearest"),
    "grid-multilinear": lambda m, d, seed: grid_algorithm(m, d, "multilinear"),
    "random": lambda m, d, seed: uniform_random_algorithm(m, d, seed=seed),
    "zero": lambda m, d, seed: zero_algorithm(m, d),
}


def _resolve_gamma(cfg, policy) -> float:
    if cfg["gamma"] is not None:
        return float(cfg["gamma"])
    flat, _ = gamma_closed_form(policy)
    if not math.isfinite(flat):
        raise ConfigError("gamma must be given explicitly for unbounded policies")
    return flat - 0.5


def cmd_hardness(args) -> int:
    if not args.out:
        print("hardness: --out is required", file=sys.stderr)
        return 2
    cfg = _merge_config(args, _SWEEP_DEFAULTS)
    m_list = args.m_list or [4, 16, 64, 256]
    seed = args.seed or 0
    try:
        policy = _policy_from(cfg)
        gamma = _resolve_gamma(cfg, policy)
        if cfg["algorithm"] not in _ALGORITHMS:
            raise ConfigError(f"unknown algorithm {cfg['algorithm']!r}")
        factory = lambda m: _ALGORITHMS[cfg["algorithm"]](m, int(cfg["d"]), seed)
        report = run_hardness_sweep(
            factory,
            m_list,
            int(cfg["d"]),
            float(cfg["alpha"]),
            gamma,
            policy,
            grid_resolution=args.grid_res or 9,
            kappa1_override=cfg["kappa1"],
            seed=seed,
        )
    except (ConfigError, ValueError) as exc:
        print(f"hardness: {exc}", file=sys.stderr)
        return 2
    _write_report(args, report, cfg, gamma)
    return 0 if report.passed else 1


def cmd_mc_hardness(args) -> int:
    if not args.out:
        print("mc-hardness: --out is required", file=sys.stderr)
        return 2
    cfg = _merge_config(args, _SWEEP_DEFAULTS)
    m_list = args.m_list or [4, 16, 64]
    seed = args.seed or 0
    try:
        policy = _policy_from(cfg)
        gamma = _resolve_gamma(cfg, policy)
        report = run_mc_sweep(
            lambda m: uniform_mc(m, int(cfg["d"])),
            m_list,
            int(cfg["d"]),
            float(cfg["alpha"]),
            gamma,
            policy,
            draws=int(cfg["draws"]),
            grid_resolution=args.grid_res or 9,
            kappa1_override=cfg["kappa1"],
            seed=seed,
        )
    except (ConfigError, ValueError) as exc:
        print(f"mc-hardness: {exc}", file=sys.stderr)
        return 2
    _write_report(args, report, cfg, gamma)
    return 0 if report.passed else 1


def cmd_upper_bound(args) -> int:
    if not args.out:
        print("upper-bound: --out is required", file=sys.stderr)
        return 2
    cfg = _merge_config(args, {**_SWEEP_DEFAULTS, "reconstruction": "nearest"})
    m_list = args.m_list or [16, 64, 256, 1024, 4096]
    try:
        policy = _policy_from(cfg)
        gamma = _resolve_gamma(cfg, policy)
        report = run_upper_bound_sweep(
            m_list,
            int(cfg["d"]),
            float(cfg["alpha"]),
            gamma,
            policy,
            reconstruction=cfg["reconstruction"],
            grid_resolution=args.grid_res or 9,
            seed=args.seed or 0,
        )
    except (ConfigError, ValueError) as exc:
        print(f"upper-bound: {exc}", file=sys.stderr)
        return 2
    _write_report(args, report, cfg, gamma)
    return 0 if report.passed else 1


def _write_report(args, report, cfg, gamma) -> None:
    envelope = json.loads(report.to_json())
    envelope["config"] = {**cfg, "gamma": gamma, "m_list": list(args.m_list or [])}
    envelope["worker_cap"] = worker_cap()
    out = Path(args.out)
    fmt = args.format or "csv"
    if fmt == "csv":
        out.write_text(report.to_csv())
        out.with_suffix(out.suffix + ".json").write_text(
            json.dumps(envelope, indent=2, sort_keys=True) + "\n"
        )
    else:
        out.write_text(json.dumps(envelope, indent=2, sort_keys=True) + "\n")


_SUM_DEFAULTS = {
    "M1": 1.0,
    "y1": 0.25,
    "M2": 2.0,
    "y2": 0.75,
    "target_depth": 5,
    "points": 1000,
}


def cmd_sum_check(args) -> int:
    cfg = _merge_config(args, _SUM_DEFAULTS)
    try:
        net1 = lambda_network(float(cfg["M1"]), float(cfg["y1"]))
        net2 = lambda_network(float(cfg["M2"]), float(cfg["y2"]))
        extended = depth_extend(net1, int(cfg["target_depth"]))
        summed = sum_networks(extended, net2)
    except ValueError as exc:
        print(f"sum-check: {exc}", file=sys.stderr)
        return 2
    rng = np.random.default_rng(args.seed or 0)
    x = rng.uniform(-1.0, 2.0, size=(int(cfg["points"]), 1))
    target = realize(net1, x) + realize(net2, x)
    got = realize(summed, x)
    ext_err = float(np.max(np.abs(realize(extended, x) - realize(net1, x))))
    sum_err = float(np.max(np.abs(got - target)))
    w_bound = 9 * max(extended.weight_count(), net2.weight_count())
    payload = {
        "config": cfg,
        "depth_extend_max_err": ext_err,
        "sum_max_err": sum_err,
        "sum_weight_count": summed.weight_count(),
        "sum_weight_bound": w_bound,
        "pass": bool(
            ext_err <= 1e-12
            and sum_err <= 1e-12
            and summed.weight_count() <= w_bound
        ),
    }
    _emit(args, payload)
    return 0 if payload["pass"] else 1


def _parse_m_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="requ-gap",
        description="ReQU network constructions, rate bounds and sampling experiments",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "build-hat": cmd_build_hat,
        "verify-hat": cmd_verify_hat,
        "rates": cmd_rates,
        "lipschitz": cmd_lipschitz,
        "hardness": cmd_hardness,
        "mc-hardness": cmd_mc_hardness,
        "upper-bound": cmd_upper_bound,
        "sum-check": cmd_sum_check,
    }
    extra_flags = {
        "build-hat": ["n", "L", "C", "M", "d", "y"],
        "verify-hat": ["n", "L", "C", "M", "d", "y", "network"],
        "rates": ["alpha", "d", "n_max"],
        "lipschitz": ["n", "L", "C", "M", "d", "norm"],
        "hardness": ["alpha", "d", "gamma", "algorithm", "kappa1"],
        "mc-hardness": ["alpha", "d", "gamma", "kappa1", "draws"],
        "upper-bound": ["alpha", "d", "gamma", "reconstruction"],
        "sum-check": ["M1", "y1", "M2", "y2", "target_depth"],
    }
    types = {
        "n": int, "L": int, "d": int, "n_max": int, "draws": int,
        "target_depth": int, "alpha": float, "gamma": float, "C": float,
        "M": float, "M1": float, "M2": float, "y1": float, "y2": float,
        "kappa1": float, "scale": float, "theta_c": float, "kappa_c": float,
    }
    for name, func in commands.items():
        p = sub.add_parser(name)
        p.add_argument("--config", default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--grid-res", type=int, default=None)
        p.add_argument("--m-list", type=_parse_m_list, default=None)
        p.add_argument("--format", choices=("csv", "json"), default=None)
        for key in ("theta_c", "kappa_c", "scale", "depth_cap"):
            if name != "sum-check":
                p.add_argument(
                    f"--{key.replace('_', '-')}",
                    type=types.get(key, str),
                    default=None,
                    dest=key,
                )
        for key in extra_flags[name]:
            p.add_argument(
                f"--{key.replace('_', '-')}",
                type=types.get(key, str),
                default=None,
                dest=key,
            )
        p.set_defaults(func=func)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"{args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
