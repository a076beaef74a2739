"""Command-line front end: config-driven experiments, bound verification,
and geodesic queries.

Subcommands: verify-bounds, geodesic, experiment.  Configs are JSON with a
closed key schema (unknown keys are rejected).  Exit codes: 0 success,
1 config error, 2 claim violation, 3 domain error.  Outputs embed the
config hash and library version; numeric outputs are deterministic for a
fixed config and seed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np
from scipy.integrate import quad

from . import __version__
from .bounds import rotate_upper, shrink_upper, translate_upper
from .cauchy_lab import (
    ExperimentReport,
    SequenceSpec,
    run_cauchy_diagnostic,
    run_limit_identification,
    run_separation_experiment,
    run_threshold_scan,
)
from .diffeo import DiscreteDiffeo, exp_family, identity, read_diffeo_csv
from .errors import (
    ConfigError,
    CurveSpaceError,
    DisconnectedComponentsError,
    InapplicableCertificateError,
)
from .geodesic_opt import OptimizerOptions, geodesic_estimate
from .grid_curves import Grid, read_curve_csv
from .metric import MetricCoefficients
from .paths import export_path, path_length, rotate_path, shrink_path, translate_path
from .testcurves import circle, line_through, scaled_diffeo_curve, trig_curve

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_CLAIM = 2
EXIT_DOMAIN = 3


def _config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _load_config(path: str, allowed: set, required: set) -> dict:
    try:
        with open(path) as fh:
            config = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(config) - allowed
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    missing = required - set(config)
    if missing:
        raise ConfigError(f"missing config keys: {sorted(missing)}")
    return config


def _metric_from(config: dict) -> MetricCoefficients:
    data = config.get("metric", {"n": 2, "a": [1.0, 1.0, 1.0]})
    try:
        return MetricCoefficients.from_dict(data)
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"bad metric spec: {exc}") from exc


def _write_meta(out: Path, config: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "meta.json", "w") as fh:
        json.dump(
            {"config_sha256": _config_hash(config), "version": __version__},
            fh,
            indent=2,
            sort_keys=True,
        )


# -- verify-bounds -----------------------------------------------------------


def _verify_rows(config: dict):
    """Certificate-vs-measurement suite; yields (name, measured, low, high)."""
    G = _metric_from(config)
    grid = Grid(int(config.get("grid_n", 256)))
    time_m = int(config.get("time_m", 400))
    cases = int(config.get("cases", 5))
    tol = float(config.get("tolerance", 1e-6))
    quad_tol = float(config.get("quadrature_tolerance", 1e-2))
    rng = np.random.default_rng(int(config.get("seed", 0)))
    t_min = 1e-4

    a0, a1 = G.a[0], G.a[1]
    for i in range(cases):
        ell = float(rng.uniform(0.2, 2.0))
        direction = rng.normal(size=2)
        c = line_through(grid, (0.0, 0.0), direction, ell)
        measured = path_length(shrink_path(c, t_min, time_m), G).length
        oracle = quad(
            lambda t: math.sqrt(a0 * t * ell**3 / 3.0 + a1 * ell / t), t_min, 1.0
        )[0]
        cert = shrink_upper(G, c.length).value
        yield (f"shrink-oracle[{i}]", measured, oracle - quad_tol, oracle + quad_tol)
        yield (f"shrink-cert[{i}]", measured, 0.0, cert + tol)

    for i in range(cases):
        c = trig_curve(grid, rng, dim=2)
        v0 = rng.normal(size=2)
        measured = path_length(translate_path(c, v0, 64), G).length
        cert = translate_upper(G, c.length, float(np.linalg.norm(v0))).value
        yield (f"translate[{i}]", measured, cert - tol, cert + tol)

    for i in range(cases):
        c = trig_curve(grid, rng, dim=2)
        theta = float(rng.uniform(-math.pi, math.pi))
        measured = path_length(rotate_path(c, theta, 64), G).length
        cert = rotate_upper(G, c, theta).value
        yield (f"rotate[{i}]", measured, cert - max(tol, 1e-9 * cert), cert + max(tol, 1e-9 * cert))

    if config.get("delta_lower", True):
        if G.a2 <= 0.0:
            raise InapplicableCertificateError(
                "delta-lower requested but the metric has a2 = 0"
            )
        lam = float(config.get("delta_scale", 0.1))
        phi, psi = identity(grid), exp_family(1.0, grid)
        opts = OptimizerOptions.from_dict(
            config.get("opts", {"max_iters": 200, "seeds": [16, 32]})
        )
        est = geodesic_estimate(
            scaled_diffeo_curve(grid, lam, phi),
            scaled_diffeo_curve(grid, lam, psi),
            G,
            opts,
        )
        yield ("delta-lower", est.upper, (est.lower or 0.0) - 1e-6, math.inf)


def cmd_verify_bounds(config: dict, out: Path) -> int:
    rows = []
    failed = None
    for name, measured, low, high in _verify_rows(config):
        ok = low <= measured <= high
        rows.append(
            {"name": name, "measured": measured, "low": low, "high": high, "ok": ok}
        )
        if not ok and failed is None:
            failed = name
    report = ExperimentReport(
        name="verify-bounds",
        columns=["name", "measured", "low", "high", "ok"],
        rows=rows,
        verdicts={"all_hold": failed is None, "first_violation": failed},
        details={
            "metric": _metric_from(config).to_dict(),
            "config_sha256": _config_hash(config),
            "version": __version__,
        },
    )
    _write_meta(out, config)
    report.to_csv(out / "verify_bounds.csv")
    report.to_json(out / "verify_bounds.json")
    for row in rows:
        print(
            f"{'PASS' if row['ok'] else 'FAIL'} {row['name']}: "
            f"{row['low']:.6g} <= {row['measured']:.6g} <= {row['high']:.6g}"
        )
    if failed is not None:
        print(f"violated bound: {failed}", file=sys.stderr)
        return EXIT_CLAIM
    return EXIT_OK


# -- geodesic ----------------------------------------------------------------


def cmd_geodesic(config: dict, out: Path) -> int:
    G = _metric_from(config)
    try:
        c0 = read_curve_csv(config["curve0"])
        c1 = read_curve_csv(config["curve1"])
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot load curves: {exc}") from exc
    opts = OptimizerOptions.from_dict(config.get("opts", {}))
    try:
        est = geodesic_estimate(c0, c1, G, opts)
    except DisconnectedComponentsError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    _write_meta(out, config)
    payload = est.to_dict()
    payload["config_sha256"] = _config_hash(config)
    payload["version"] = __version__
    with open(out / "estimate.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
    export_path(est.path, out / "optimized_path", extra_meta={"config_sha256": _config_hash(config)})
    print(f"upper = {est.upper:.9g}" + ("" if est.lower is None else f", lower = {est.lower:.9g}"))
    return EXIT_OK


# -- experiment --------------------------------------------------------------


def _diffeo_from(spec, grid: Grid) -> DiscreteDiffeo:
    if isinstance(spec, str):
        if spec == "identity":
            return identity(grid)
        if spec.startswith("exp:"):
            return exp_family(float(spec.split(":", 1)[1]), grid)
        return read_diffeo_csv(spec)
    raise ConfigError(f"bad diffeo spec {spec!r}")


def cmd_experiment(config: dict, out: Path) -> int:
    G = _metric_from(config)
    family = config.get("family")
    grid_n = int(config.get("grid_n", 256))
    grid = Grid(grid_n)
    schedule = config.get("schedule")
    plots = bool(config.get("plots", False))
    if family in ("straight-line", "vanishing-circles"):
        spec = SequenceSpec(
            family=family,
            schedule=schedule or [0.1 * 2.0**-k for k in range(6)],
            grid_n=grid_n,
            phi=_diffeo_from(config.get("phi", "identity"), grid),
            dim=int(config.get("dim", 1)),
        )
        report = run_cauchy_diagnostic(spec, G, time_m=int(config.get("time_m", 96)))
        plot_args = ("m", ["consecutive_bound"], False, True)
    elif family in ("shortened-curve", "power-shrink-shorten"):
        spec = SequenceSpec(
            family=family,
            schedule=schedule or [0.1 * 2.0**-k for k in range(6)],
            grid_n=grid_n,
            curve=circle(grid),
            alpha=float(config.get("alpha", 0.0)),
        )
        report = run_cauchy_diagnostic(spec, G, time_m=int(config.get("time_m", 96)))
        plot_args = ("m", ["consecutive_bound"], False, True)
    elif family == "separation":
        phi = _diffeo_from(config.get("phi", "identity"), grid)
        psi = _diffeo_from(config.get("psi", "exp:1.0"), grid)
        opts = OptimizerOptions.from_dict(config.get("opts", {}))
        report = run_separation_experiment(
            phi, psi, G, schedule or [0.1 * 2.0**-k for k in range(6)], opts
        )
        plot_args = ("ell_m", ["upper", "delta_lower", "separation_delta"], True, False)
    elif family == "threshold-scan":
        report = run_threshold_scan(
            circle(grid),
            G,
            config.get("alphas", [0.0, 0.5, 0.9, 1.0]),
            config.get("eps_list"),
            per_segment=int(config.get("time_m", 96)),
        )
        plot_args = ("eps", ["length"], True, False)
    elif family == "limit-identification":
        report = run_limit_identification(
            circle(grid),
            G,
            float(config.get("alpha", 0.5)),
            schedule or [0.1 * 2.0**-k for k in range(6)],
            time_m=int(config.get("time_m", 64)),
        )
        plot_args = ("t", ["to_tangent_segment", "to_power_scaled"], True, True)
    else:
        raise ConfigError(f"unknown experiment family {family!r}")
    _write_meta(out, config)
    stem = family.replace("/", "-")
    report.to_csv(out / f"{stem}.csv")
    payload = report.to_json_dict()
    payload["config_sha256"] = _config_hash(config)
    payload["version"] = __version__
    with open(out / f"{stem}.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=str)
    if plots:
        x, ys, logx, logy = plot_args
        report.plot_svg(out / f"{stem}.svg", x, ys, logx=logx, logy=logy)
    for key, value in report.verdicts.items():
        print(f"{key}: {value}")
    return EXIT_OK


_SCHEMAS = {
    "verify-bounds": (
        {
            "metric", "grid_n", "time_m", "cases", "seed", "tolerance",
            "quadrature_tolerance", "delta_lower", "delta_scale", "opts", "out",
        },
        set(),
    ),
    "geodesic": ({"metric", "curve0", "curve1", "opts", "out"}, {"curve0", "curve1"}),
    "experiment": (
        {
            "metric", "family", "grid_n", "time_m", "schedule", "alpha", "alphas",
            "eps_list", "phi", "psi", "opts", "dim", "plots", "seed", "out",
        },
        {"family"},
    ),
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="curvespace",
        description="Sobolev-metric curve geometry: bounds, geodesic estimates, experiments",
    )
    parser.add_argument("command", choices=sorted(_SCHEMAS))
    parser.add_argument("--config", required=True, help="path to a JSON config")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--grid-n", type=int, default=None, help="override grid size N")
    parser.add_argument("--time-m", type=int, default=None, help="override time resolution M")
    parser.add_argument("--seed", type=int, default=None, help="override RNG seed")
    args = parser.parse_args(argv)
    allowed, required = _SCHEMAS[args.command]
    try:
        config = _load_config(args.config, allowed, required)
        if args.grid_n is not None:
            config["grid_n"] = args.grid_n
        if args.time_m is not None:
            config["time_m"] = args.time_m
        if args.seed is not None:
            config["seed"] = args.seed
        out = Path(args.out or config.get("out") or "curvespace-out")
        if args.command == "verify-bounds":
            return cmd_verify_bounds(config, out)
        if args.command == "geodesic":
            return cmd_geodesic(config, out)
        return cmd_experiment(config, out)
    except (ConfigError, InapplicableCertificateError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DisconnectedComponentsError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except CurveSpaceError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
