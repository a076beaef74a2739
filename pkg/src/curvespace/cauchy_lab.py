"""Experiment drivers for the completion phenomena.

Four families of desk-scale experiments: consecutive-bound diagnostics for
vanishing-length sequences, completion-point separation tables, sharp
exponent threshold scans, and limit-point identification runs.  Verdicts
never claim proof; they classify finite-sample trends with least-squares
fits (R^2 >= 0.95 for decay, >= 0.99 for log-divergence) so every verdict
is recomputable from the numbers stored in the report.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .bounds import delta_lower, separation_delta
from .diffeo import DiscreteDiffeo, delta
from .errors import (
    DisconnectedComponentsError,
    InapplicableCertificateError,
    InsufficientRegularityError,
    OrientationMismatchError,
    PathLeftSpaceError,
)
from .geodesic_opt import OptimizerOptions, chain_distance_bound, geodesic_estimate
from .grid_curves import (
    SCHEME,
    DiscreteCurve,
    Grid,
    evaluate_curve,
    evaluate_curve_derivative,
)
from .metric import MetricCoefficients
from .paths import (
    cumulative_segment_lengths,
    linear_interpolation_path,
    path_length,
    power_scaling_connector,
    power_shrink_shorten_at,
    shrink_path,
)
from .testcurves import circle, line_through, scaled_diffeo_curve

DECAY_R2 = 0.95
LOG_DIVERGENCE_R2 = 0.99
DECAY_RATIO_MAX = 0.97
DIVERGENT_RATIO_MIN = 0.8

FAMILIES = (
    "straight-line",
    "shortened-curve",
    "power-shrink-shorten",
    "vanishing-circles",
)


def linear_fit(x: Sequence[float], y: Sequence[float]):
    """Least-squares line fit; returns (slope, intercept, r_squared)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return float(slope), float(intercept), r2


def _decays(values: Sequence[float]) -> tuple:
    """Whether a positive sequence decays: fitted ln-value slope and R^2."""
    vals = np.asarray(values, dtype=float)
    if np.any(vals <= 0.0):
        return False, 0.0, 0.0
    slope, _, r2 = linear_fit(np.arange(len(vals)), np.log(vals))
    ok = slope < 0.0 and r2 >= DECAY_R2 and vals[-1] < vals[0]
    return ok, slope, r2


@dataclass
class ExperimentReport:
    """Self-contained experiment result: rows, verdicts, and the inputs
    needed to recompute every number."""

    name: str
    columns: list
    rows: list
    verdicts: dict
    details: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            for row in self.rows:
                writer.writerow([_format_cell(row.get(col)) for col in self.columns])

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "verdicts": self.verdicts,
            "details": self.details,
            "rows": self.rows,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True, default=_json_default)

    def plot_svg(self, path, x_col: str, y_cols: Sequence[str], logx=False, logy=False) -> None:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(6, 4))
        xs = [row[x_col] for row in self.rows]
        for col in y_cols:
            ys = [row.get(col) for row in self.rows]
            ax.plot(xs, ys, marker="o", label=col)
        if logx:
            ax.set_xscale("log")
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(x_col)
        ax.set_ylabel(", ".join(y_cols))
        ax.set_title(self.name)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, format="svg")
        plt.close(fig)


def _format_cell(value):
    if isinstance(value, float):
        return f"{value:.17g}"
    return value


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


@dataclass(frozen=True)
class SequenceSpec:
    """A vanishing-length curve sequence to diagnose.

    family selects the construction; `schedule` is the strictly decreasing
    scale sequence (curve lengths for straight lines, shortening times or
    radii otherwise) with at least 5 entries.
    """

    family: str
    schedule: tuple
    grid_n: int = 256
    phi: Optional[DiscreteDiffeo] = None
    directions: Optional[tuple] = None
    offsets: Optional[tuple] = None
    curve: Optional[DiscreteCurve] = None
    alpha: float = 0.0
    dim: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        sched = tuple(float(v) for v in self.schedule)
        if len(sched) < 5:
            raise ValueError("schedule needs at least 5 entries")
        if any(v <= 0.0 for v in sched) or any(
            b >= a for a, b in zip(sched, sched[1:])
        ):
            raise ValueError("schedule must be strictly decreasing and positive")
        object.__setattr__(self, "schedule", sched)


def default_schedule(start: float = 0.1, ratio: float = 0.5, count: int = 6) -> tuple:
    """Geometric schedule; defaults to ratio 1/2 with 6 points."""
    return tuple(start * ratio**k for k in range(count))


def run_cauchy_diagnostic(
    spec: SequenceSpec, G: MetricCoefficients, time_m: int = 96
) -> ExperimentReport:
    """Consecutive-bound table for a vanishing-length sequence.

    Straight-line families get certificate chain bounds; the other families
    get measured lengths of the canonical connecting path segment.  The
    verdict is `cauchy-consistent` when the consecutive bounds decay with a
    good fit; vanishing-circles always reports `unknown` (no certificate
    machinery applies, only measured bounds are emitted).
    """
    rows = []
    sched = list(spec.schedule)
    if spec.family == "straight-line":
        grid = Grid(spec.grid_n)
        phi = spec.phi
        dim = spec.dim if spec.directions is None else len(spec.directions[0])
        dirs = spec.directions or tuple(
            tuple(1.0 if i == 0 else 0.0 for i in range(dim)) for _ in sched
        )
        offs = spec.offsets or tuple(tuple(0.0 for _ in range(dim)) for _ in sched)
        if dim == 1:
            signs = {np.sign(d[0]) for d in dirs}
            if len(signs) > 1:
                raise DisconnectedComponentsError(
                    "d=1 straight-line sequence mixes orientations"
                )
        curves = [
            line_through(grid, off, direction, ell, phi)
            for off, direction, ell in zip(offs, dirs, sched)
        ]
        for m in range(len(sched) - 1):
            bound = chain_distance_bound(curves[m], curves[m + 1], G)
            rows.append(
                {
                    "m": m,
                    "ell_m": curves[m].length,
                    "consecutive_bound": bound,
                    "op": "chain_distance_bound",
                }
            )
        final_len = curves[-1].length
    elif spec.family in ("shortened-curve", "power-shrink-shorten"):
        c = spec.curve
        if c is None or not c.smooth:
            raise InsufficientRegularityError("family needs a smooth base curve")
        alpha = spec.alpha if spec.family == "power-shrink-shorten" else 0.0
        times = marker_aligned_geometric_times(sched, time_m)
        path = power_shrink_shorten_at(c, alpha, times)
        tails = cumulative_segment_lengths(path, G, sched)
        frame_lengths = {t: None for t in sched}
        for t in sched:
            idx = int(np.argmin(np.abs(times - t)))
            frame_lengths[t] = path.frames[idx].length
        for m in range(len(sched) - 1):
            bound = tails[sched[m + 1]] - tails[sched[m]]
            rows.append(
                {
                    "m": m,
                    "ell_m": frame_lengths[sched[m]],
                    "consecutive_bound": bound,
                    "op": "path-segment-length",
                }
            )
        final_len = frame_lengths[sched[-1]]
    else:  # vanishing-circles
        grid = Grid(spec.grid_n)
        for m in range(len(sched) - 1):
            s_m = circle(grid, radius=sched[m])
            lam = sched[m + 1] / sched[m]
            seg = shrink_path(s_m, t_min=lam, M=time_m)
            bound = path_length(seg, G).length
            rows.append(
                {
                    "m": m,
                    "ell_m": s_m.length,
                    "consecutive_bound": bound,
                    "op": "shrink-segment-measured",
                }
            )
        final_len = circle(grid, radius=sched[-1]).length
    bounds = [row["consecutive_bound"] for row in rows]
    decays, slope, r2 = _decays(bounds)
    if spec.family == "vanishing-circles":
        verdict = "unknown"
    else:
        verdict = "cauchy-consistent" if decays else "inconclusive"
    lengths = [row["ell_m"] for row in rows] + [final_len]
    return ExperimentReport(
        name=f"cauchy-diagnostic/{spec.family}",
        columns=["m", "ell_m", "consecutive_bound", "op"],
        rows=rows,
        verdicts={
            "cauchy": verdict,
            "lengths_vanish": bool(lengths[-1] < 0.5 * lengths[0]),
        },
        details={
            "family": spec.family,
            "schedule": sched,
            "decay_fit": {"slope": slope, "r2": r2},
            "metric": G.to_dict(),
            "grid_n": spec.grid_n,
            "scheme": SCHEME.tag,
        },
    )


def run_separation_experiment(
    phi: DiscreteDiffeo,
    psi: DiscreteDiffeo,
    G: MetricCoefficients,
    schedule: Sequence[float],
    opts: Optional[OptimizerOptions] = None,
) -> ExperimentReport:
    """Separation table: estimated distances between lam*phi and lam*psi
    across a vanishing scale schedule, against the scale-uniform separation
    constant computed from the observed frame-length maximum."""
    if G.a2 <= 0.0:
        raise InapplicableCertificateError("separation experiments need a2 > 0")
    if not (phi.is_fixing and psi.is_fixing):
        raise OrientationMismatchError("separation experiments need endpoint-fixing maps")
    opts = opts or OptimizerOptions()
    grid = phi.grid
    estimates = []
    L_hat = 0.0
    for lam in schedule:
        c0 = scaled_diffeo_curve(grid, lam, phi)
        c1 = scaled_diffeo_curve(grid, lam, psi)
        est = geodesic_estimate(c0, c1, G, opts)
        observed = est.trace.get("max_frame_length", 0.0) or max(
            f.length for f in est.path.frames
        )
        L_hat = max(L_hat, observed)
        estimates.append(est)
    gap = delta(phi, psi)
    if gap > 0.0:
        lower_cert = delta_lower(phi, psi, G, L_hat)
        sep_cert = separation_delta(phi, psi, G, L_hat)
        lower, sep = lower_cert.value, sep_cert.value
    else:
        lower = sep = 0.0
    rows = []
    for lam, est in zip(schedule, estimates):
        rows.append(
            {
                "ell_m": lam,
                "upper": est.upper,
                "delta_lower": lower,
                "separation_delta": sep,
                "op": "geodesic_estimate",
            }
        )
    uppers = [row["upper"] for row in rows]
    separated = (
        gap > 0.0
        and all(row["delta_lower"] >= sep - 1e-9 for row in rows)
        and min(uppers) > sep
    )
    return ExperimentReport(
        name="separation",
        columns=["ell_m", "upper", "delta_lower", "separation_delta", "op"],
        rows=rows,
        verdicts={"separation": "separated" if separated else "not-separated"},
        details={
            "delta": gap,
            "L_hat": L_hat,
            "metric": G.to_dict(),
            "grid_n": grid.n,
            "optimizer": opts.to_dict(),
            "scheme": SCHEME.tag,
        },
    )


def marker_aligned_geometric_times(markers: Sequence[float], per_segment: int) -> np.ndarray:
    """Geometric time grid from min(markers) to 1 passing through every marker."""
    pts = sorted(set(float(m) for m in markers) | {1.0})
    times = [np.array([pts[0]])]
    for a, b in zip(pts, pts[1:]):
        if b > a:
            times.append(np.geomspace(a, b, per_segment + 1)[1:])
    out = np.concatenate(times)
    out[-1] = 1.0
    return out


def classify_trend(lengths_by_eps: dict) -> dict:
    """Classify L(eps) over a decreasing eps sweep.

    finite-trend: increments per sweep step decay (ratios <= 0.97, fitted
    decay R^2 >= 0.95).  divergent-trend: increments bounded below and
    L vs ln(1/eps) fits a line with R^2 >= 0.99 and positive slope.
    """
    eps = np.array(sorted(lengths_by_eps, reverse=True))
    lengths = np.array([lengths_by_eps[e] for e in eps])
    incs = np.diff(lengths)
    ratios = incs[1:] / np.where(incs[:-1] > 0.0, incs[:-1], np.inf)
    slope_log, _, r2_log = linear_fit(np.log(1.0 / eps), lengths)
    if np.all(incs > 0.0):
        dec_ok, dec_slope, dec_r2 = _decays(incs)
    else:
        dec_ok, dec_slope, dec_r2 = True, 0.0, 1.0  # nothing left to accumulate
    fits = {
        "log_slope": slope_log,
        "log_r2": r2_log,
        "increment_decay_slope": dec_slope,
        "increment_decay_r2": dec_r2,
        "increment_ratios": ratios.tolist(),
    }
    if len(incs) == 0 or np.all(incs <= 0.0):
        return {"verdict": "finite-trend", **fits}
    if np.all(ratios <= DECAY_RATIO_MAX) and dec_ok:
        return {"verdict": "finite-trend", **fits}
    if r2_log >= LOG_DIVERGENCE_R2 and slope_log > 0.0 and np.min(ratios) >= DIVERGENT_RATIO_MIN:
        return {"verdict": "divergent-trend", **fits}
    return {"verdict": "inconclusive", **fits}


def run_threshold_scan(
    c: DiscreteCurve,
    G: MetricCoefficients,
    alphas: Sequence[float],
    eps_list: Optional[Sequence[float]] = None,
    per_segment: int = 96,
) -> ExperimentReport:
    """Path lengths of t^alpha c(t theta) over [eps, 1] across alphas and eps.

    Each alpha is classified finite-trend or divergent-trend; the sharp
    boundary must straddle 1/(2n-3).
    """
    if not c.smooth:
        raise InsufficientRegularityError("threshold scans need a smooth base curve")
    # default sweep stops at 1e-4: below that the alpha ~ 1 frames drop
    # under the immersion floor (node speed ~ t^(alpha+1) * length)
    eps_list = sorted(
        eps_list if eps_list is not None else np.logspace(-2, -4, 5), reverse=True
    )
    if len(eps_list) < 4:
        raise ValueError("trend fits need at least 4 sweep points")
    threshold = 1.0 / (2 * G.n - 3)
    rows = []
    verdicts = {}
    fits = {}
    for alpha in alphas:
        times = marker_aligned_geometric_times(eps_list, per_segment)
        path = power_shrink_shorten_at(c, float(alpha), times)
        tails = cumulative_segment_lengths(path, G, eps_list)
        outcome = classify_trend(tails)
        verdicts[f"alpha={alpha:g}"] = outcome["verdict"]
        fits[f"alpha={alpha:g}"] = {k: v for k, v in outcome.items() if k != "verdict"}
        for eps in eps_list:
            rows.append(
                {
                    "alpha": float(alpha),
                    "eps": float(eps),
                    "length": tails[eps],
                    "op": "power_shrink_shorten+path_length",
                }
            )
    finite = [a for a in alphas if verdicts[f"alpha={a:g}"] == "finite-trend"]
    divergent = [a for a in alphas if verdicts[f"alpha={a:g}"] == "divergent-trend"]
    straddles = bool(
        finite
        and all(a < threshold for a in finite)
        and all(a >= threshold for a in divergent)
    )
    verdicts["boundary_straddles_threshold"] = straddles
    return ExperimentReport(
        name="threshold-scan",
        columns=["alpha", "eps", "length", "op"],
        rows=rows,
        verdicts=verdicts,
        details={
            "threshold": threshold,
            "fits": fits,
            "metric": G.to_dict(),
            "grid_n": c.grid.n,
            "eps_list": list(map(float, eps_list)),
            "scheme": SCHEME.tag,
        },
    )


def run_limit_identification(
    c: DiscreteCurve,
    G: MetricCoefficients,
    alpha: float,
    schedule: Sequence[float],
    time_m: int = 64,
) -> ExperimentReport:
    """Measured lengths of the two explicit connecting paths: shortened arc
    to tangent segment (linear interpolation) and shortened arc to its
    power-scaled version.  Both sequences tending to zero witnesses a
    common limit point."""
    if not c.smooth:
        raise InsufficientRegularityError("limit identification needs a smooth base curve")
    threshold = 1.0 / (2 * G.n - 3)
    if not alpha < threshold:
        raise ValueError(f"alpha must be below {threshold}")
    grid = c.grid
    d0 = np.asarray(evaluate_curve_derivative(c, np.array([0.0])), dtype=float).reshape(-1)
    rows = []
    for t in schedule:
        shortened = DiscreteCurve(grid, evaluate_curve(c, t * grid.nodes))
        tangent = DiscreteCurve(grid, t * np.multiply.outer(grid.nodes, d0))
        try:
            interp = linear_interpolation_path(tangent, shortened, time_m)
            to_segment = path_length(interp, G).length
            immersed = True
        except PathLeftSpaceError:
            to_segment, immersed = float("nan"), False
        connector = power_scaling_connector(c, float(t), alpha, time_m)
        to_power = path_length(connector, G).length
        rows.append(
            {
                "t": float(t),
                "to_tangent_segment": to_segment,
                "to_power_scaled": to_power,
                "frames_immersed": immersed,
                "op": "linear_interpolation_path+power_scaling_connector",
            }
        )
    seg = [r["to_tangent_segment"] for r in rows]
    pow_ = [r["to_power_scaled"] for r in rows]
    ok_seg, s_seg, r2_seg = _decays(seg) if all(np.isfinite(seg)) else (False, 0.0, 0.0)
    ok_pow, s_pow, r2_pow = _decays(pow_)
    monotone = all(a > b for a, b in zip(seg, seg[1:])) and all(
        a > b for a, b in zip(pow_, pow_[1:])
    )
    verdict = "same-limit-trend" if (ok_seg and ok_pow and monotone) else "inconclusive"
    return ExperimentReport(
        name="limit-identification",
        columns=["t", "to_tangent_segment", "to_power_scaled", "frames_immersed", "op"],
        rows=rows,
        verdicts={"limit": verdict},
        details={
            "alpha": alpha,
            "decay_fits": {
                "to_tangent_segment": {"slope": s_seg, "r2": r2_seg},
                "to_power_scaled": {"slope": s_pow, "r2": r2_pow},
            },
            "metric": G.to_dict(),
            "grid_n": grid.n,
            "schedule": list(map(float, schedule)),
            "scheme": SCHEME.tag,
        },
    )
