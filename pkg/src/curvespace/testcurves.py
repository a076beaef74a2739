"""Canonical smooth test curves with closed-form evaluators.

These constructors attach analytic point/derivative evaluators and the
`smooth` flag, so the shortening-type path constructors can use exact
velocities.  Closed curves (full circles) appear here only as test inputs
for open-curve experiments.
"""

from __future__ import annotations

import numpy as np

from .grid_curves import DiscreteCurve, Grid


def segment(
    grid: Grid, direction, length: float = 1.0, offset=None
) -> DiscreteCurve:
    """Straight line offset + length * direction * theta (constant speed)."""
    direction = np.asarray(direction, dtype=float).reshape(-1)
    direction = direction / np.linalg.norm(direction)
    d = direction.shape[0]
    offset = np.zeros(d) if offset is None else np.asarray(offset, dtype=float)

    def ev(theta):
        theta = np.asarray(theta, dtype=float)
        return offset + length * np.multiply.outer(theta, direction)

    def dev(theta):
        theta = np.asarray(theta, dtype=float)
        return np.broadcast_to(length * direction, theta.shape + (d,)).copy()

    return DiscreteCurve(grid, ev(grid.nodes), smooth=True, evaluator=ev, derivative=dev)


def line_through(grid: Grid, v, r, length: float, phi=None) -> DiscreteCurve:
    """Straight line v + r * length * phi(theta) for a sampled diffeo phi.

    phi defaults to the identity.  Not smooth-flagged when phi is given only
    through samples.
    """
    r = np.asarray(r, dtype=float).reshape(-1)
    r = r / np.linalg.norm(r)
    v = np.asarray(v, dtype=float).reshape(-1)
    profile = grid.nodes if phi is None else np.asarray(phi.samples, dtype=float)
    samples = v + length * np.multiply.outer(profile, r)
    return DiscreteCurve(grid, samples, smooth=phi is None)


def circle(grid: Grid, radius: float = 1.0, center=(0.0, 0.0)) -> DiscreteCurve:
    """Full circle of the given radius traversed once over [0,1]."""
    center = np.asarray(center, dtype=float)

    def ev(theta):
        ang = 2.0 * np.pi * np.asarray(theta, dtype=float)
        return center + radius * np.stack([np.cos(ang), np.sin(ang)], axis=-1)

    def dev(theta):
        ang = 2.0 * np.pi * np.asarray(theta, dtype=float)
        return 2.0 * np.pi * radius * np.stack([-np.sin(ang), np.cos(ang)], axis=-1)

    return DiscreteCurve(grid, ev(grid.nodes), smooth=True, evaluator=ev, derivative=dev)


def circle_arc(grid: Grid, radius: float = 1.0, span: float = 1.0) -> DiscreteCurve:
    """Arc (cos, sin)-style of angular span `span` radians, unit speed at radius 1."""

    def ev(theta):
        ang = span * np.asarray(theta, dtype=float)
        return radius * np.stack([np.cos(ang), np.sin(ang)], axis=-1)

    def dev(theta):
        ang = span * np.asarray(theta, dtype=float)
        return span * radius * np.stack([-np.sin(ang), np.cos(ang)], axis=-1)

    return DiscreteCurve(grid, ev(grid.nodes), smooth=True, evaluator=ev, derivative=dev)


def trig_curve(grid: Grid, rng: np.random.Generator, dim: int = 2, modes: int = 3) -> DiscreteCurve:
    """Random smooth immersed curve: unit drift plus small trigonometric ripple.

    The ripple derivative is bounded by ~0.5, so the unit drift keeps the
    curve safely immersed.
    """
    drift = rng.normal(size=dim)
    drift /= np.linalg.norm(drift)
    amps = rng.uniform(-1.0, 1.0, size=(modes, dim))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(modes, dim))
    ks = np.arange(1, modes + 1)
    # scale so sum_k |amp_k| * 2 pi k / (4 k^2) <= ~0.5
    scale = 0.5 / (2.0 * np.pi * np.sum(np.abs(amps).max(axis=1) / ks))

    def ev(theta):
        theta = np.asarray(theta, dtype=float)
        out = np.multiply.outer(theta, drift)
        for k, amp, ph in zip(ks, amps, phases):
            out = out + scale / k**2 * np.sin(
                2.0 * np.pi * k * theta[..., None] + ph
            ) * amp
        return out

    def dev(theta):
        theta = np.asarray(theta, dtype=float)
        out = np.broadcast_to(drift, theta.shape + (dim,)).copy()
        for k, amp, ph in zip(ks, amps, phases):
            out = out + scale * 2.0 * np.pi / k * np.cos(
                2.0 * np.pi * k * theta[..., None] + ph
            ) * amp
        return out

    return DiscreteCurve(grid, ev(grid.nodes), smooth=True, evaluator=ev, derivative=dev)


def scaled_diffeo_curve(grid: Grid, lam: float, phi) -> DiscreteCurve:
    """One-dimensional curve lam * phi(theta) (the scaled-diffeo family)."""
    return DiscreteCurve(grid, lam * np.asarray(phi.samples, dtype=float).reshape(-1, 1))
