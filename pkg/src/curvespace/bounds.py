"""Closed-form upper and lower bound certificates.

Each certificate is a first-class value: a kind tag, the numeric bound, the
exact inputs it was computed from (so it can be recomputed bit-exactly),
and an anchor string spelling out the inequality it instantiates.

Scope notes:
- shrink-upper certifies the linear shrink path of *origin-anchored*
  straight lines (any endpoint-fixing parametrization); a constant offset
  changes the zero-order term and is handled by the translation leg of
  chain bounds instead.
- rotate-upper is implemented for d=2 only, where the one-parameter
  rotation path makes the constant exact (|theta| <= pi).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .diffeo import DiscreteDiffeo, delta
from .errors import (
    InapplicableCertificateError,
    OrientationMismatchError,
    UnsupportedDimensionError,
)
from .grid_curves import DiscreteCurve, TangentField
from .metric import MetricCoefficients, tangent_norm

SHRINK_ANCHOR = (
    "len(t -> t*c) <= 2*(sqrt(a0)+sqrt(a1))*max(l^1.5, l^0.5) "
    "for origin-anchored straight lines of length l"
)
TRANSLATE_ANCHOR = "d(c, c+v0) <= |v0|*sqrt(a0*l_c)"
ROTATE_ANCHOR = "d=2: len(constant-speed rotation path) = |theta|*sqrt(G_c(c,c))"
DELTA_LOWER_ANCHOR = (
    "len(gamma) >= Delta(phi,psi)*sqrt(a2 / max_t l_gamma(t)) for any path "
    "between lam*phi and lam*psi with frame lengths <= L"
)
SEPARATION_ANCHOR = "delta = Delta(phi,psi)*sqrt(a2)/(2*sqrt(L))"


@dataclass(frozen=True)
class BoundCertificate:
    kind: str
    value: float
    inputs: dict
    anchor: str

    def __post_init__(self):
        if self.value < 0.0:
            raise ValueError("certificate values are non-negative")

    def to_json(self) -> str:
        return json.dumps(
            {
                "kind": self.kind,
                "value": self.value,
                "inputs": self.inputs,
                "anchor": self.anchor,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, payload: str) -> "BoundCertificate":
        data = json.loads(payload)
        return cls(data["kind"], data["value"], data["inputs"], data["anchor"])


def recompute(cert: BoundCertificate) -> float:
    """Re-derive the value from the recorded inputs (bit-exactly)."""
    i = cert.inputs
    if cert.kind == "shrink-upper":
        return _shrink_value(i["a0"], i["a1"], i["length"])
    if cert.kind == "translate-upper":
        return i["v0_norm"] * math.sqrt(i["a0"] * i["length"])
    if cert.kind == "rotate-upper":
        return abs(i["theta"]) * i["tangent_norm"]
    if cert.kind == "delta-lower":
        return i["delta"] * math.sqrt(i["a2"] / i["L"])
    if cert.kind == "separation-delta":
        return i["delta"] * math.sqrt(i["a2"]) / (2.0 * math.sqrt(i["L"]))
    raise ValueError(f"unknown certificate kind {cert.kind!r}")


def _shrink_value(a0: float, a1: float, length: float) -> float:
    return 2.0 * (math.sqrt(a0) + math.sqrt(a1)) * max(length**1.5, length**0.5)


def shrink_upper(G: MetricCoefficients, length: float) -> BoundCertificate:
    """Upper bound on the full shrink-path length of a straight line."""
    if length <= 0.0:
        raise ValueError("curve length must be positive")
    a0, a1 = G.a[0], G.a[1]
    return BoundCertificate(
        kind="shrink-upper",
        value=_shrink_value(a0, a1, length),
        inputs={"a0": a0, "a1": a1, "length": length},
        anchor=SHRINK_ANCHOR,
    )


def translate_upper(
    G: MetricCoefficients, length: float, v0_norm: float
) -> BoundCertificate:
    if length <= 0.0:
        raise ValueError("curve length must be positive")
    if v0_norm < 0.0:
        raise ValueError("translation norm must be non-negative")
    return BoundCertificate(
        kind="translate-upper",
        value=v0_norm * math.sqrt(G.a[0] * length),
        inputs={"a0": G.a[0], "length": length, "v0_norm": v0_norm},
        anchor=TRANSLATE_ANCHOR,
    )


def rotate_upper(G: MetricCoefficients, c: DiscreteCurve, theta: float) -> BoundCertificate:
    """Exact d=2 rotation-path length |theta| * sqrt(G_c(c,c)), |theta| <= pi."""
    if c.dim != 2:
        raise UnsupportedDimensionError("rotation certificates are d=2 only")
    if abs(theta) > math.pi + 1e-12:
        raise ValueError("|theta| must be <= pi")
    norm = tangent_norm(G, c, TangentField(c.grid, c.samples))
    return BoundCertificate(
        kind="rotate-upper",
        value=abs(theta) * norm,
        inputs={"theta": theta, "tangent_norm": norm, "a": list(G.a)},
        anchor=ROTATE_ANCHOR,
    )


def _require_a2(G: MetricCoefficients) -> float:
    if G.a2 <= 0.0:
        raise InapplicableCertificateError("lower-bound certificates need a2 > 0")
    return G.a2


def _require_fixing_pair(phi: DiscreteDiffeo, psi: DiscreteDiffeo) -> None:
    if not (phi.is_fixing and psi.is_fixing):
        raise OrientationMismatchError("certificates need an endpoint-fixing pair")


def delta_lower(
    phi: DiscreteDiffeo, psi: DiscreteDiffeo, G: MetricCoefficients, L: float
) -> BoundCertificate:
    """Lower bound Delta(phi,psi)*sqrt(a2/L) valid for any path between
    lam*phi and lam*psi whose frames all have curve length <= L."""
    a2 = _require_a2(G)
    _require_fixing_pair(phi, psi)
    if L <= 0.0:
        raise ValueError("frame-length bound L must be positive")
    d = delta(phi, psi)
    return BoundCertificate(
        kind="delta-lower",
        value=d * math.sqrt(a2 / L),
        inputs={"delta": d, "a2": a2, "L": L},
        anchor=DELTA_LOWER_ANCHOR,
    )


def separation_delta(
    phi: DiscreteDiffeo, psi: DiscreteDiffeo, G: MetricCoefficients, L: float
) -> BoundCertificate:
    """Scale-uniform separation constant Delta*sqrt(a2)/(2*sqrt(L))."""
    a2 = _require_a2(G)
    _require_fixing_pair(phi, psi)
    if L <= 0.0:
        raise ValueError("frame-length bound L must be positive")
    d = delta(phi, psi)
    return BoundCertificate(
        kind="separation-delta",
        value=d * math.sqrt(a2) / (2.0 * math.sqrt(L)),
        inputs={"delta": d, "a2": a2, "L": L},
        anchor=SEPARATION_ANCHOR,
    )
