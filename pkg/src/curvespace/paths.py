"""Paths of curves gamma(t, theta): containers, length quadrature, and the
canonical path families with analytic velocities.

A path stores one immersed frame per time node.  Velocity is either the
analytic time-derivative supplied by a constructor or central finite
differences in t (one-sided at the ends); the two are never mixed within
one path so error budgets stay clean.  Lengths use the trapezoid rule in t
of sqrt(G_frame(velocity, velocity)).

Time grids near a t -> 0 singularity are geometric: the canonical
integrands behave like powers of t, and uniform grids waste nodes there.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import (
    GridMismatchError,
    InsufficientRegularityError,
    NotAnImmersionError,
    PathLeftSpaceError,
    UnsupportedDimensionError,
)
from .grid_curves import (
    SCHEME,
    DiscreteCurve,
    Grid,
    TangentField,
    evaluate_curve,
    evaluate_curve_derivative,
    write_curve_csv,
)
from .metric import MetricCoefficients, metric_eval

MIN_FRAMES_ANALYTIC = 9  # M >= 8 subintervals
MIN_FRAMES_FD = 17  # M >= 16 when velocity comes from finite differences


@dataclass(frozen=True, eq=False)
class CurvePath:
    """Time-indexed family of curves sharing one grid and dimension."""

    times: np.ndarray
    frames: tuple
    velocity: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.shape[0] < MIN_FRAMES_ANALYTIC:
            raise ValueError(f"path needs at least {MIN_FRAMES_ANALYTIC} time nodes")
        if np.any(np.diff(times) <= 0.0):
            raise ValueError("times must be strictly increasing")
        if times[0] < 0.0 or times[-1] > 1.0 + 1e-12:
            raise ValueError("times must lie in [0, 1]")
        times = times.copy()
        times.setflags(write=False)
        object.__setattr__(self, "times", times)
        frames = tuple(self.frames)
        if len(frames) != times.shape[0]:
            raise ValueError("one frame per time node required")
        grid, dim = frames[0].grid, frames[0].dim
        for f in frames:
            if f.grid != grid or f.dim != dim:
                raise GridMismatchError("all frames must share grid and dimension")
        object.__setattr__(self, "frames", frames)
        if self.velocity is not None:
            vel = np.asarray(self.velocity, dtype=float)
            if vel.shape != (len(frames), grid.n + 1, dim):
                raise ValueError("velocity must have shape (M+1, N+1, d)")
            vel = vel.copy()
            vel.setflags(write=False)
            object.__setattr__(self, "velocity", vel)

    @property
    def grid(self) -> Grid:
        return self.frames[0].grid

    @property
    def dim(self) -> int:
        return self.frames[0].dim

    @property
    def subintervals(self) -> int:
        """Number of time subintervals M."""
        return len(self.frames) - 1

    def frame_samples(self) -> np.ndarray:
        """Stacked samples, shape (M+1, N+1, d)."""
        return np.stack([f.samples for f in self.frames])


@dataclass(frozen=True, eq=False)
class PathLengthReport:
    """Length of a path plus the per-time integrand used to compute it."""

    length: float
    times: np.ndarray
    integrand: np.ndarray
    quadrature: str
    grid_n: int
    time_m: int
    velocity_source: str
    scheme: str = SCHEME.tag

    def to_dict(self) -> dict:
        return {
            "length": self.length,
            "quadrature": self.quadrature,
            "grid_n": self.grid_n,
            "time_m": self.time_m,
            "velocity_source": self.velocity_source,
            "scheme": self.scheme,
        }


def geometric_times(t_min: float, M: int) -> np.ndarray:
    """Geometric grid t_min = t_0 < ... < t_M = 1."""
    if not 0.0 < t_min < 1.0:
        raise ValueError("t_min must lie in (0, 1)")
    return t_min ** (1.0 - np.arange(M + 1) / M)


def time_derivative_samples(times: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Second-order finite differences in t on a possibly non-uniform grid.

    3-point interior formula, one-sided quadratic fits at the ends;
    `values` has the time axis first.
    """
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    out = np.empty_like(v)
    hm = (t[1:-1] - t[:-2]).reshape((-1,) + (1,) * (v.ndim - 1))
    hp = (t[2:] - t[1:-1]).reshape((-1,) + (1,) * (v.ndim - 1))
    out[1:-1] = (
        -hp / (hm * (hm + hp)) * v[:-2]
        + (hp - hm) / (hm * hp) * v[1:-1]
        + hm / (hp * (hm + hp)) * v[2:]
    )
    for idx, (i0, i1, i2) in ((0, (0, 1, 2)), (-1, (-1, -2, -3))):
        t0, t1, t2 = t[i0], t[i1], t[i2]
        d01, d02, d12 = t0 - t1, t0 - t2, t1 - t2
        w0 = (d01 + d02) / (d01 * d02)
        w1 = -d02 / (d01 * d12)
        w2 = d01 / (d02 * d12)
        out[idx] = w0 * v[i0] + w1 * v[i1] + w2 * v[i2]
    return out


def path_velocity(path: CurvePath) -> tuple:
    """(velocity array, source tag); finite differences when not analytic."""
    if path.velocity is not None:
        return path.velocity, "analytic"
    if len(path.frames) < MIN_FRAMES_FD:
        raise ValueError(
            f"finite-difference velocity needs at least {MIN_FRAMES_FD} time nodes"
        )
    return time_derivative_samples(path.times, path.frame_samples()), "finite-difference"


def path_length(path: CurvePath, G: MetricCoefficients) -> PathLengthReport:
    """Trapezoid-in-t quadrature of sqrt(G_frame(velocity, velocity))."""
    vel, source = path_velocity(path)
    integrand = np.empty(len(path.frames))
    for m, frame in enumerate(path.frames):
        h = TangentField(frame.grid, vel[m])
        integrand[m] = np.sqrt(max(metric_eval(G, frame, h, h), 0.0))
    length = float(np.trapezoid(integrand, path.times))
    return PathLengthReport(
        length=length,
        times=path.times,
        integrand=integrand,
        quadrature="trapezoid",
        grid_n=path.grid.n,
        time_m=path.subintervals,
        velocity_source=source,
    )


def cumulative_segment_lengths(
    path: CurvePath, G: MetricCoefficients, markers: Sequence[float]
) -> dict:
    """Length of the path restricted to [marker, t_end] for each marker.

    Markers must coincide with time nodes (within 1e-12); the integrand is
    evaluated once, so the restriction lengths nest exactly.
    """
    report = path_length(path, G)
    seg = 0.5 * (report.integrand[1:] + report.integrand[:-1]) * np.diff(path.times)
    tail = np.concatenate(([0.0], np.cumsum(seg[::-1])))[::-1]
    out = {}
    for marker in markers:
        idx = int(np.argmin(np.abs(path.times - marker)))
        if abs(path.times[idx] - marker) > 1e-12:
            raise ValueError(f"marker {marker} is not a time node")
        out[float(marker)] = float(tail[idx])
    return out


def _frame(grid: Grid, samples: np.ndarray, context: str) -> DiscreteCurve:
    try:
        return DiscreteCurve(grid, samples)
    except NotAnImmersionError as exc:
        raise PathLeftSpaceError(f"{context}: {exc}") from exc


# -- canonical constructors --------------------------------------------------


def constant_path(c: DiscreteCurve, M: int = 16) -> CurvePath:
    times = np.linspace(0.0, 1.0, M + 1)
    vel = np.zeros((M + 1, c.grid.n + 1, c.dim))
    return CurvePath(times, tuple([c] * (M + 1)), vel, meta={"constructor": "constant"})


def shrink_path(c: DiscreteCurve, t_min: float, M: int) -> CurvePath:
    """Frames t*c on a geometric time grid over [t_min, 1]; velocity = c."""
    times = geometric_times(t_min, M)
    frames = tuple(_frame(c.grid, t * c.samples, f"shrink at t={t:.3g}") for t in times)
    vel = np.broadcast_to(c.samples, (M + 1,) + c.samples.shape).copy()
    return CurvePath(
        times, frames, vel, meta={"constructor": "shrink", "t_min": t_min, "M": M}
    )


def translate_path(c: DiscreteCurve, v0, M: int) -> CurvePath:
    """Frames c + t*v0 on [0,1]; constant velocity v0."""
    v0 = np.asarray(v0, dtype=float).reshape(-1)
    if v0.shape[0] != c.dim:
        raise GridMismatchError("translation vector dimension mismatch")
    times = np.linspace(0.0, 1.0, M + 1)
    frames = tuple(DiscreteCurve(c.grid, c.samples + t * v0) for t in times)
    vel = np.broadcast_to(v0, (M + 1, c.grid.n + 1, c.dim)).copy()
    return CurvePath(
        times, frames, vel, meta={"constructor": "translate", "v0": v0.tolist(), "M": M}
    )


def _rotation_2d(angle: float) -> np.ndarray:
    ca, sa = np.cos(angle), np.sin(angle)
    return np.array([[ca, -sa], [sa, ca]])


def _rotation_axis_angle(axis: np.ndarray, angle: float) -> np.ndarray:
    k = axis / np.linalg.norm(axis)
    K = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def rotate_path(c: DiscreteCurve, angle: float, M: int, axis=None) -> CurvePath:
    """Constant-speed one-parameter rotation from the identity.

    d=2: plane rotation by t*angle.  d=3: Rodrigues rotation about `axis`
    by t*angle.  Velocity is the exact A'(t) c.
    """
    times = np.linspace(0.0, 1.0, M + 1)
    if c.dim == 2:
        J = np.array([[0.0, -1.0], [1.0, 0.0]])
        mats = [_rotation_2d(t * angle) for t in times]
        dmats = [angle * (J @ A) for A in mats]
    elif c.dim == 3:
        if axis is None:
            raise ValueError("d=3 rotation needs an axis")
        axis = np.asarray(axis, dtype=float).reshape(3)
        k = axis / np.linalg.norm(axis)
        K = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
        mats = [_rotation_axis_angle(axis, t * angle) for t in times]
        dmats = [angle * (K @ A) for A in mats]
    else:
        raise UnsupportedDimensionError(f"rotation paths need d in {{2,3}}, got d={c.dim}")
    frames = tuple(DiscreteCurve(c.grid, c.samples @ A.T) for A in mats)
    vel = np.stack([c.samples @ dA.T for dA in dmats])
    meta = {"constructor": "rotate", "angle": angle, "M": M}
    if axis is not None:
        meta["axis"] = np.asarray(axis, dtype=float).tolist()
    return CurvePath(times, frames, vel, meta=meta)


def _require_smooth(c: DiscreteCurve, who: str) -> None:
    if not c.smooth:
        raise InsufficientRegularityError(
            f"{who} needs a smooth-flagged curve (one extra derivative of accuracy)"
        )


def shorten_path(c: DiscreteCurve, t_min: float, M: int) -> CurvePath:
    """Frames c(t*theta) on a geometric grid; velocity theta * c'(t*theta)."""
    _require_smooth(c, "shorten_path")
    times = geometric_times(t_min, M)
    nodes = c.grid.nodes
    frames, vels = [], []
    for t in times:
        frames.append(_frame(c.grid, evaluate_curve(c, t * nodes), f"shorten at t={t:.3g}"))
        vels.append(nodes[:, None] * evaluate_curve_derivative(c, t * nodes))
    return CurvePath(
        times,
        tuple(frames),
        np.stack(vels),
        meta={"constructor": "shorten", "t_min": t_min, "M": M},
    )


def power_shrink_shorten(c: DiscreteCurve, alpha: float, t_min: float, M: int) -> CurvePath:
    """Frames t^alpha * c(t*theta); velocity alpha t^{alpha-1} c(t theta)
    + t^alpha theta c'(t theta).  alpha = 0 reduces to the shortening path."""
    return power_shrink_shorten_at(c, alpha, geometric_times(t_min, M))


def power_shrink_shorten_at(c: DiscreteCurve, alpha: float, times) -> CurvePath:
    """Power shrink-shorten path on an explicit (e.g. marker-aligned) grid."""
    if alpha < 0.0:
        raise ValueError("alpha must be >= 0")
    _require_smooth(c, "power_shrink_shorten")
    times = np.asarray(times, dtype=float)
    nodes = c.grid.nodes
    frames, vels = [], []
    for t in times:
        values = evaluate_curve(c, t * nodes)
        dvalues = evaluate_curve_derivative(c, t * nodes)
        frames.append(
            _frame(c.grid, t**alpha * values, f"power path at t={t:.3g}")
        )
        radial = 0.0 if alpha == 0.0 else alpha * t ** (alpha - 1.0) * values
        vels.append(radial + t**alpha * nodes[:, None] * dvalues)
    return CurvePath(
        times,
        tuple(frames),
        np.stack(vels),
        meta={
            "constructor": "power-shrink-shorten",
            "alpha": alpha,
            "t_min": float(times[0]),
            "M": len(times) - 1,
        },
    )


def power_scaling_connector(c: DiscreteCurve, t: float, alpha: float, M: int) -> CurvePath:
    """Path tau -> t^{alpha tau} c(t theta) joining c(t theta) to t^alpha c(t theta).

    Velocity alpha ln(t) t^{alpha tau} c(t theta).
    """
    if not 0.0 < t < 1.0:
        raise ValueError("t must lie in (0,1)")
    _require_smooth(c, "power_scaling_connector")
    taus = np.linspace(0.0, 1.0, M + 1)
    base = evaluate_curve(c, t * c.grid.nodes)
    frames, vels = [], []
    for tau in taus:
        scale = t ** (alpha * tau)
        frames.append(_frame(c.grid, scale * base, f"connector at tau={tau:.3g}"))
        vels.append(alpha * np.log(t) * scale * base)
    return CurvePath(
        taus,
        tuple(frames),
        np.stack(vels),
        meta={"constructor": "power-scaling-connector", "t": t, "alpha": alpha, "M": M},
    )


def linear_interpolation_path(c0: DiscreteCurve, c1: DiscreteCurve, M: int) -> CurvePath:
    """Frames (1-tau) c0 + tau c1; velocity c1 - c0.

    Raises path-left-the-space when an intermediate frame loses the
    immersion property (e.g. connecting the two orientation components in
    d=1), rather than clamping.
    """
    if c0.grid != c1.grid or c0.dim != c1.dim:
        raise GridMismatchError("endpoints must share grid and dimension")
    taus = np.linspace(0.0, 1.0, M + 1)
    if np.array_equal(c0.samples, c1.samples):
        frames = tuple([c0] * (M + 1))
    else:
        frames = tuple(
            _frame(c0.grid, (1.0 - tau) * c0.samples + tau * c1.samples, f"tau={tau:.3g}")
            for tau in taus
        )
    vel = np.broadcast_to(c1.samples - c0.samples, (M + 1,) + c0.samples.shape).copy()
    return CurvePath(taus, frames, vel, meta={"constructor": "linear", "M": M})


def example_path(
    f: Union[Callable, np.ndarray],
    g: Union[Callable, np.ndarray],
    t_min: float,
    M: int,
    grid: Grid,
    f_prime: Union[Callable, np.ndarray, None] = None,
    g_prime: Union[Callable, np.ndarray, None] = None,
) -> CurvePath:
    """The planar family gamma(t, theta) = (t theta + f(t), g(t)).

    f, g and their derivatives are either callables or sample arrays on the
    geometric time grid; velocity is (theta + f'(t), g'(t)).
    """
    times = geometric_times(t_min, M)

    def _samples(spec, name):
        if callable(spec):
            return np.asarray(spec(times), dtype=float)
        arr = np.asarray(spec, dtype=float)
        if arr.shape != times.shape:
            raise ValueError(f"{name} samples must match the time grid")
        return arr

    fv, gv = _samples(f, "f"), _samples(g, "g")
    if f_prime is None or g_prime is None:
        raise ValueError("example_path needs derivative samples for f and g")
    fp, gp = _samples(f_prime, "f'"), _samples(g_prime, "g'")
    nodes = grid.nodes
    frames, vels = [], []
    for t, fv_t, gv_t, fp_t, gp_t in zip(times, fv, gv, fp, gp):
        samples = np.stack([t * nodes + fv_t, np.full_like(nodes, gv_t)], axis=1)
        frames.append(_frame(grid, samples, f"example path at t={t:.3g}"))
        vels.append(np.stack([nodes + fp_t, np.full_like(nodes, gp_t)], axis=1))
    return CurvePath(
        times,
        tuple(frames),
        np.stack(vels),
        meta={"constructor": "example", "t_min": t_min, "M": M},
    )


def reparametrize_path(path: CurvePath, phi) -> CurvePath:
    """Compose every frame (and velocity slice) with phi."""
    from .grid_curves import reparametrize
    from scipy.interpolate import PchipInterpolator

    frames = tuple(reparametrize(f, phi) for f in path.frames)
    vel = None
    if path.velocity is not None:
        query = np.clip(phi.samples, 0.0, 1.0)
        vel = np.stack(
            [
                PchipInterpolator(path.grid.nodes, v, axis=0)(query)
                for v in path.velocity
            ]
        )
    return CurvePath(path.times, frames, vel, meta={**path.meta, "reparametrized": True})


def refine_path_time(path: CurvePath) -> CurvePath:
    """Insert time midpoints (frames linearly interpolated); doubles M.

    Used to warm-start a finer optimization from a coarser optimized path;
    the refined path drops any analytic velocity.
    """
    samples = path.frame_samples()
    mids = 0.5 * (samples[1:] + samples[:-1])
    grid = path.grid
    new_times = np.empty(2 * len(path.times) - 1)
    new_times[0::2] = path.times
    new_times[1::2] = 0.5 * (path.times[1:] + path.times[:-1])
    frames = []
    for m in range(len(path.times) - 1):
        frames.append(path.frames[m])
        frames.append(_frame(grid, mids[m], f"refinement midpoint {m}"))
    frames.append(path.frames[-1])
    return CurvePath(new_times, tuple(frames), None, meta={**path.meta, "refined": True})


def subpath(path: CurvePath, t_lo: float, t_hi: float) -> CurvePath:
    """Restriction to [t_lo, t_hi]; bounds must be existing time nodes."""
    i0 = int(np.argmin(np.abs(path.times - t_lo)))
    i1 = int(np.argmin(np.abs(path.times - t_hi)))
    if abs(path.times[i0] - t_lo) > 1e-12 or abs(path.times[i1] - t_hi) > 1e-12:
        raise ValueError("subpath bounds must be existing time nodes")
    vel = None if path.velocity is None else path.velocity[i0 : i1 + 1]
    return CurvePath(
        path.times[i0 : i1 + 1],
        path.frames[i0 : i1 + 1],
        vel,
        meta={**path.meta, "segment": (t_lo, t_hi)},
    )


# -- export ------------------------------------------------------------------


def export_path(path: CurvePath, directory, extra_meta: Optional[dict] = None) -> None:
    """Directory of per-frame CSVs plus manifest.json."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    width = max(4, len(str(len(path.frames))))
    names = []
    for m, frame in enumerate(path.frames):
        name = f"frame_{m:0{width}d}.csv"
        write_curve_csv(directory / name, frame)
        names.append(name)
    manifest = {
        "times": path.times.tolist(),
        "grid_n": path.grid.n,
        "dim": path.dim,
        "frames": names,
        "velocity": "analytic" if path.velocity is not None else "finite-difference",
        "scheme": SCHEME.tag,
        "constructor": path.meta.get("constructor", "unknown"),
        "parameters": {
            k: v for k, v in path.meta.items() if k != "constructor"
        },
    }
    if extra_meta:
        manifest.update(extra_meta)
    with open(directory / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)


def write_length_report_csv(path_obj, report: PathLengthReport) -> None:
    """CSV `t,integrand` for a measured path."""
    import csv as _csv

    with open(path_obj, "w", newline="") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["t", "integrand"])
        for t, v in zip(report.times, report.integrand):
            writer.writerow([f"{t:.17g}", f"{v:.17g}"])
