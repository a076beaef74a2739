"""Constant-coefficient Sobolev metric on tangent fields along a curve.

G_c(h,k) = sum_{i=0..n} a_i * integral of <D_s^i h, D_s^i k> ds, where
D_s = (1/|Dc|) d/dtheta and ds = |Dc| dtheta.  The arc-length derivative is
applied iteratively with the shared stencil; accuracy under iteration is
covered by the refinement tests rather than dedicated high-order stencils.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError
from .grid_curves import DiscreteCurve, TangentField, arclength_derivatives


@dataclass(frozen=True)
class MetricCoefficients:
    """Sobolev order n >= 2 and weights a_0..a_n with a_0, a_n > 0."""

    n: int
    a: tuple

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("Sobolev order must be >= 2")
        a = tuple(float(v) for v in self.a)
        if len(a) != self.n + 1:
            raise ValueError(f"need {self.n + 1} coefficients, got {len(a)}")
        if any(v < 0.0 for v in a):
            raise ValueError("coefficients must be non-negative")
        if a[0] <= 0.0 or a[-1] <= 0.0:
            raise ValueError("a_0 and a_n must be positive")
        object.__setattr__(self, "a", a)

    @property
    def a2(self) -> float:
        """Weight of the second-order term (drives the lower-bound certificates)."""
        return self.a[2]

    def to_dict(self) -> dict:
        return {"n": self.n, "a": list(self.a)}

    @classmethod
    def from_dict(cls, data: dict) -> "MetricCoefficients":
        return cls(int(data["n"]), tuple(data["a"]))


DEFAULT_METRIC = MetricCoefficients(2, (1.0, 1.0, 1.0))


def metric_terms(
    G: MetricCoefficients, c: DiscreteCurve, h: TangentField, k: TangentField
) -> np.ndarray:
    """Per-order contributions a_i * integral <D_s^i h, D_s^i k> ds."""
    if h.grid != c.grid or k.grid != c.grid:
        raise GridMismatchError("curve and fields must share a grid")
    if h.dim != c.dim or k.dim != c.dim:
        raise GridMismatchError("curve and fields must share a dimension")
    hs = arclength_derivatives(c, h, G.n)
    ks = hs if k.samples is h.samples else arclength_derivatives(c, k, G.n)
    spacing = c.grid.spacing
    terms = np.zeros(G.n + 1)
    for i, a_i in enumerate(G.a):
        if a_i == 0.0:
            continue
        integrand = np.einsum("jd,jd->j", hs[i], ks[i]) * c.speed
        terms[i] = a_i * np.trapezoid(integrand, dx=spacing)
    return terms


def metric_eval(
    G: MetricCoefficients, c: DiscreteCurve, h: TangentField, k: TangentField
) -> float:
    """G_c(h,k); symmetric bilinear, non-negative on the diagonal."""
    return float(metric_terms(G, c, h, k).sum())


def tangent_norm(G: MetricCoefficients, c: DiscreteCurve, h: TangentField) -> float:
    return float(np.sqrt(max(metric_eval(G, c, h, h), 0.0)))
