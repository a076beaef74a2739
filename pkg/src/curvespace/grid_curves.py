"""Discrete curves and tangent fields on a uniform parameter grid.

Curves c:[0,1] -> R^d and tangent fields h:[0,1] -> R^d are represented by
their samples at the nodes theta_j = j/N.  All derivative operators use one
fixed scheme: 2nd-order central differences in the interior and 2nd-order
one-sided stencils at the two endpoints; all integrals use the composite
trapezoid rule.  The scheme is exact on polynomials of degree <= 2.

Everything here is immutable after construction and every operation is a
pure function, so values can be shared freely between threads.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Union

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import (
    DomainViolationError,
    GridMismatchError,
    InsufficientResolutionError,
    NotAnImmersionError,
)

# Relative immersion floor: a curve is accepted as immersed when
# min_j |Dc_j| > IMMERSION_FLOOR * (1 + curve length).
IMMERSION_FLOOR = 1e-8

MIN_SUBINTERVALS = 8


@dataclass(frozen=True)
class DerivativeScheme:
    """Finite-difference scheme used for all node derivatives.

    Fixed per session; the tag is recorded in exported manifests so results
    are reproducible.
    """

    interior: str = "central-2nd-order"
    boundary: str = "one-sided-2nd-order"

    @property
    def tag(self) -> str:
        return f"{self.interior}/{self.boundary}"


SCHEME = DerivativeScheme()


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [0,1] with n subintervals and nodes j/n, j=0..n."""

    n: int

    def __post_init__(self):
        if self.n < MIN_SUBINTERVALS:
            raise InsufficientResolutionError(
                f"grid needs at least {MIN_SUBINTERVALS} subintervals, got {self.n}"
            )

    @cached_property
    def nodes(self) -> np.ndarray:
        nodes = np.linspace(0.0, 1.0, self.n + 1)
        nodes.setflags(write=False)
        return nodes

    @property
    def spacing(self) -> float:
        return 1.0 / self.n


def _as_readonly(values, shape_hint: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{shape_hint} samples must be finite")
    arr.setflags(write=False)
    return arr


def apply_stencil(values: np.ndarray, spacing: float, axis: int = 0) -> np.ndarray:
    """Differentiate sampled values along `axis` with the fixed scheme.

    Works for any array whose length along `axis` is >= 3; the node axis is
    moved to the front, differentiated with slicing, and moved back.
    """
    v = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    if v.shape[0] < 3:
        raise InsufficientResolutionError("stencil needs at least 3 samples")
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * spacing)
    out[0] = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * spacing)
    out[-1] = (3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * spacing)
    return np.moveaxis(out, 0, axis)


def apply_stencil_transpose(values: np.ndarray, spacing: float, axis: int = 0) -> np.ndarray:
    """Adjoint of :func:`apply_stencil` (the transposed stencil matrix)."""
    y = np.moveaxis(np.asarray(values, dtype=float), axis, 0)
    g = np.zeros_like(y)
    k = y.shape[0] - 1
    inv = 1.0 / (2.0 * spacing)
    # interior rows out[j] = (f[j+1] - f[j-1]) / 2h, j = 1..k-1
    g[2 : k + 1] += y[1:k] * inv
    g[0 : k - 1] -= y[1:k] * inv
    # boundary rows
    g[0] += -3.0 * y[0] * inv
    g[1] += 4.0 * y[0] * inv
    g[2] += -y[0] * inv
    g[k] += 3.0 * y[k] * inv
    g[k - 1] += -4.0 * y[k] * inv
    g[k - 2] += y[k] * inv
    return np.moveaxis(g, 0, axis)


def trapezoid_weights(n: int, spacing: float) -> np.ndarray:
    w = np.full(n + 1, spacing)
    w[0] = w[-1] = 0.5 * spacing
    return w


@dataclass(frozen=True, eq=False)
class TangentField:
    """Samples of a tangent field h:[0,1] -> R^d on a grid."""

    grid: Grid
    samples: np.ndarray

    def __post_init__(self):
        arr = _as_readonly(self.samples, "tangent field")
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
            arr.setflags(write=False)
        if arr.ndim != 2 or arr.shape[0] != self.grid.n + 1:
            raise ValueError(
                f"tangent field samples must have shape ({self.grid.n + 1}, d)"
            )
        object.__setattr__(self, "samples", arr)

    @property
    def dim(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True, eq=False)
class DiscreteCurve:
    """Samples of an immersed curve c:[0,1] -> R^d on a grid.

    The immersion invariant min_j |Dc_j| > floor is enforced at
    construction; a curve object is therefore always usable as a metric
    base point.

    `smooth` marks curves that come from an analytic (or one-extra-
    derivative) construction; the shortening-type path constructors require
    it.  `evaluator`/`derivative` optionally give closed-form point
    evaluation c(theta) and c'(theta) (vectorized over theta); they are not
    part of equality or serialization.
    """

    grid: Grid
    samples: np.ndarray
    smooth: bool = False
    evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = field(
        default=None, compare=False, repr=False
    )
    derivative: Optional[Callable[[np.ndarray], np.ndarray]] = field(
        default=None, compare=False, repr=False
    )

    def __post_init__(self):
        arr = _as_readonly(self.samples, "curve")
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
            arr.setflags(write=False)
        if arr.ndim != 2 or arr.shape[0] != self.grid.n + 1:
            raise ValueError(f"curve samples must have shape ({self.grid.n + 1}, d)")
        if arr.shape[1] < 1:
            raise ValueError("curve dimension must be >= 1")
        object.__setattr__(self, "samples", arr)
        speed = np.linalg.norm(apply_stencil(arr, self.grid.spacing), axis=1)
        length = float(np.trapezoid(speed, dx=self.grid.spacing))
        if speed.min() <= IMMERSION_FLOOR * (1.0 + length):
            raise NotAnImmersionError(
                f"min node speed {speed.min():.3e} at or below floor "
                f"{IMMERSION_FLOOR * (1.0 + length):.3e}"
            )
        speed.setflags(write=False)
        object.__setattr__(self, "_speed", speed)
        object.__setattr__(self, "_length", length)

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    @property
    def speed(self) -> np.ndarray:
        """Nodewise |Dc_j| (always strictly above the immersion floor)."""
        return self._speed

    @property
    def length(self) -> float:
        return self._length


def _check_pairing(c: DiscreteCurve, other: Union[TangentField, DiscreteCurve]) -> None:
    if c.grid != other.grid:
        raise GridMismatchError(
            f"grids differ: n={c.grid.n} vs n={other.grid.n}"
        )
    if c.dim != other.dim:
        raise GridMismatchError(f"dimensions differ: {c.dim} vs {other.dim}")


def derivative(f: Union[TangentField, DiscreteCurve]) -> TangentField:
    """Discrete d/dtheta of a curve or field, as a tangent field."""
    if f.grid.n + 1 < MIN_SUBINTERVALS + 1:
        raise InsufficientResolutionError("need at least 9 samples")
    return TangentField(f.grid, apply_stencil(f.samples, f.grid.spacing))


def curve_length(c: DiscreteCurve) -> float:
    """Trapezoid quadrature of |Dc| over the grid (strictly positive)."""
    return c.length


def arclength_derivative(c: DiscreteCurve, h: TangentField) -> TangentField:
    """One application of the arc-length derivative (1/|Dc|) * Dh."""
    _check_pairing(c, h)
    dh = apply_stencil(h.samples, c.grid.spacing)
    return TangentField(c.grid, dh / c.speed[:, None])


def arclength_derivatives(c: DiscreteCurve, h: TangentField, order: int) -> list:
    """[h, Dh/|Dc|, ..., order-fold application], all as sample arrays."""
    _check_pairing(c, h)
    out = [h.samples]
    spacing = c.grid.spacing
    inv_speed = 1.0 / c.speed[:, None]
    for _ in range(order):
        out.append(apply_stencil(out[-1], spacing) * inv_speed)
    return out


def l2ds_norm(c: DiscreteCurve, h: TangentField) -> float:
    """Arc-length L2 norm: sqrt of trapezoid of <h,h>|Dc|."""
    _check_pairing(c, h)
    integrand = np.einsum("jd,jd->j", h.samples, h.samples) * c.speed
    return float(np.sqrt(max(np.trapezoid(integrand, dx=c.grid.spacing), 0.0)))


def curve_interpolator(c: DiscreteCurve) -> PchipInterpolator:
    """Shape-preserving (monotone cubic) interpolant of the samples."""
    return PchipInterpolator(c.grid.nodes, c.samples, axis=0)


def evaluate_curve(c: DiscreteCurve, query: np.ndarray) -> np.ndarray:
    """Point values c(q): closed form when available, else interpolation."""
    query = np.asarray(query, dtype=float)
    if c.evaluator is not None:
        return np.asarray(c.evaluator(query), dtype=float)
    return curve_interpolator(c)(query)


def evaluate_curve_derivative(c: DiscreteCurve, query: np.ndarray) -> np.ndarray:
    query = np.asarray(query, dtype=float)
    if c.derivative is not None:
        return np.asarray(c.derivative(query), dtype=float)
    return curve_interpolator(c).derivative()(query)


def reparametrize(c: DiscreteCurve, phi) -> DiscreteCurve:
    """Samples of c(phi(theta_j)) via monotone cubic interpolation.

    phi is a DiscreteDiffeo (either orientation).  The identity map returns
    the input curve unchanged (bitwise).  The result must itself be
    immersed, otherwise NotAnImmersionError propagates.
    """
    if c.grid != phi.grid:
        raise GridMismatchError("curve and diffeo grids differ")
    query = np.asarray(phi.samples, dtype=float)
    if query.min() < -1e-12 or query.max() > 1.0 + 1e-12:
        raise DomainViolationError("composition would leave [0,1]")
    if np.array_equal(query, c.grid.nodes):
        return c
    query = np.clip(query, 0.0, 1.0)
    if c.evaluator is not None:
        values = np.asarray(c.evaluator(query), dtype=float)
    else:
        values = curve_interpolator(c)(query)
    return DiscreteCurve(c.grid, values)


def constant_speed(c: DiscreteCurve):
    """Constant-speed reparametrization of c.

    Returns (c o psi, psi) where psi is the endpoint-fixing diffeo that
    equalizes |D(c o psi)| over the grid; composing the outputs with
    invert(psi) reproduces c up to interpolation error.
    """
    from .diffeo import DiscreteDiffeo  # local import to avoid a cycle

    sigma = np.concatenate(
        ([0.0], np.cumsum(0.5 * (c.speed[1:] + c.speed[:-1]) * c.grid.spacing))
    )
    s = sigma / sigma[-1]
    s[0], s[-1] = 0.0, 1.0
    # psi = s^{-1}, sampled by interpolating the inverted relation
    psi_values = PchipInterpolator(s, c.grid.nodes)(c.grid.nodes)
    psi_values[0], psi_values[-1] = 0.0, 1.0
    psi = DiscreteDiffeo(c.grid, psi_values)
    return reparametrize(c, psi), psi


@dataclass(frozen=True)
class SobolevSupReport:
    """Both sides of the sup-norm bound for first-derivative differences.

    lhs = max_j |Dc_j - Dd_j|, rhs = ||Dc-Dd||_{L2} + ||D2c-D2d||_{L2}
    on the unit interval; `holds` is the verdict lhs <= rhs.
    """

    lhs: float
    rhs: float
    holds: bool
    first_l2: float
    second_l2: float


def sobolev_sup_check(c: DiscreteCurve, d: DiscreteCurve) -> SobolevSupReport:
    _check_pairing(c, d)
    spacing = c.grid.spacing
    du = apply_stencil(c.samples - d.samples, spacing)
    d2u = apply_stencil(du, spacing)
    lhs = float(np.linalg.norm(du, axis=1).max())
    first = float(
        np.sqrt(max(np.trapezoid(np.einsum("jd,jd->j", du, du), dx=spacing), 0.0))
    )
    second = float(
        np.sqrt(max(np.trapezoid(np.einsum("jd,jd->j", d2u, d2u), dx=spacing), 0.0))
    )
    rhs = first + second
    return SobolevSupReport(lhs, rhs, lhs <= rhs, first, second)


# -- CSV exchange ------------------------------------------------------------
#
# Format: header "theta,x0[,x1,...]", one row per node, >= 12 significant
# digits (we write 17, which round-trips float64 exactly).


def write_curve_csv(path, obj: Union[DiscreteCurve, TangentField]) -> None:
    samples = obj.samples
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["theta"] + [f"x{i}" for i in range(samples.shape[1])])
        for theta, row in zip(obj.grid.nodes, samples):
            writer.writerow([f"{theta:.17g}"] + [f"{v:.17g}" for v in row])


def read_curve_csv(path, smooth: bool = False) -> DiscreteCurve:
    thetas, rows = _read_node_csv(path, "x0")
    grid = Grid(len(thetas) - 1)
    _check_nodes(grid, thetas, path)
    return DiscreteCurve(grid, np.array(rows), smooth=smooth)


def read_field_csv(path) -> TangentField:
    thetas, rows = _read_node_csv(path, "x0")
    grid = Grid(len(thetas) - 1)
    _check_nodes(grid, thetas, path)
    return TangentField(grid, np.array(rows))


def _read_node_csv(path, first_col: str):
    thetas, rows = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "theta" or len(header) < 2:
            raise ValueError(f"{path}: expected header starting 'theta,{first_col}'")
        for rec in reader:
            thetas.append(float(rec[0]))
            rows.append([float(v) for v in rec[1:]])
    return np.array(thetas), rows


def _check_nodes(grid: Grid, thetas: np.ndarray, path) -> None:
    if not np.allclose(thetas, grid.nodes, atol=1e-12, rtol=0.0):
        raise ValueError(f"{path}: theta column is not the uniform grid")
