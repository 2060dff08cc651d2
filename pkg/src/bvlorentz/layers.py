"""Dyadic truncation layers.

The layer profile ``chi`` is an odd scalar function that vanishes for small
and large arguments and equals the identity on the value band
``[1, 2**(dim-1)]``.  Rescaled copies ``chi_j`` isolate the part of a
function living at value scale ``2**(dim-1)*j`` while keeping one uniform
Lipschitz constant, so composing with them costs a bounded factor in
variation.  Ramps are cubic Hermite pieces chosen to meet the plateau with
slope one; the Lipschitz constant then has a closed form and is, for
instance, exactly 25/9 in dimension two.

Layers four scales apart have disjoint supports in value space, which is the
combinatorial fact behind the four-coloring used by the energy audit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bv import ChainRuleReport, ScalarC1, compose_scalar, total_variation, total_variation_on
from .grid import GridFunction, Region, UnsupportedDimensionError, mask_region

__all__ = [
    "TruncationProfile",
    "build_profile",
    "chi_function",
    "scaled_chi_function",
    "band_bounds",
    "level_band",
    "color_class",
    "active_scales",
    "LayerAudit",
    "layer_energy_audit",
    "BAND_SUM_FACTOR",
    "BAND_SUM_SLACK",
]

# Each support cell of u lands in at most three wide bands, so the band sum
# is bounded by 3 TV(u); 4 TV(u) is asserted with slack to keep the audit
# robust against summation order.
BAND_SUM_FACTOR = 4.0
BAND_SUM_SLACK = 1e-6


def _rise_peak_slope(w1: float) -> float:
    # interior maximum of the rise ramp derivative, divided by the ramp width
    return (6.0 - 2.0 * w1) ** 2 / (4.0 * (6.0 - 3.0 * w1) * w1)


def _fall_peak_slope(c: float, w2: float) -> float:
    # magnitude of the most negative fall ramp derivative, divided by width
    return ((6.0 * c + 4.0 * w2) ** 2 / (4.0 * (6.0 * c + 3.0 * w2)) - w2) / w2


@dataclass(frozen=True)
class TruncationProfile:
    """Shape constants of the layer function for one dimension."""

    dim: int
    lower: float        # chi vanishes on [0, lower]
    plateau_hi: float   # chi(t) = t on [1, plateau_hi]
    upper: float        # chi vanishes on [upper, inf)
    rise_weight: float
    fall_weight: float
    derivative_bound: float

    def value_scale(self, j: int) -> float:
        return 2.0 ** ((self.dim - 1) * j)


def build_profile(dim: int) -> TruncationProfile:
    if dim < 2:
        raise UnsupportedDimensionError("truncation layers need dimension >= 2")
    lower = 2.0 ** (-(dim - 1))
    plateau_hi = 2.0 ** (dim - 1)
    upper = 4.0 ** (dim - 1)
    w1 = 1.0 - lower
    w2 = upper - plateau_hi
    bound = max(_rise_peak_slope(w1), 1.0, _fall_peak_slope(plateau_hi, w2))
    return TruncationProfile(dim, lower, plateau_hi, upper, w1, w2, bound)


def _evaluate(profile: TruncationProfile, t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=np.float64)
    a = np.abs(t)
    out = np.zeros_like(a)

    rise = (a > profile.lower) & (a < 1.0)
    if np.any(rise):
        x = (a[rise] - profile.lower) / profile.rise_weight
        out[rise] = (3.0 * x**2 - 2.0 * x**3) + profile.rise_weight * (x**3 - x**2)

    plateau = (a >= 1.0) & (a <= profile.plateau_hi)
    out[plateau] = a[plateau]

    fall = (a > profile.plateau_hi) & (a < profile.upper)
    if np.any(fall):
        x = (a[fall] - profile.plateau_hi) / profile.fall_weight
        h00 = 2.0 * x**3 - 3.0 * x**2 + 1.0
        h10 = x**3 - 2.0 * x**2 + x
        out[fall] = h00 * profile.plateau_hi + h10 * profile.fall_weight

    return np.sign(t) * out


def chi_function(profile: TruncationProfile) -> ScalarC1:
    fn = lambda t: _evaluate(profile, t)  # noqa: E731
    return ScalarC1(fn, profile.derivative_bound, "chi")


def scaled_chi_function(profile: TruncationProfile, j: int) -> ScalarC1:
    """chi at value scale j: conjugation by the scale factor, same Lipschitz bound."""
    s = profile.value_scale(j)
    fn = lambda t: s * _evaluate(profile, np.asarray(t) / s)  # noqa: E731
    return ScalarC1(fn, profile.derivative_bound, f"chi[{j}]")


def band_bounds(profile: TruncationProfile, j: int, wide: bool = False) -> tuple[float, float]:
    """Half-open value interval [lo, hi) of the band at scale j."""
    if wide:
        return profile.value_scale(j - 1), profile.value_scale(j + 2)
    return profile.value_scale(j), profile.value_scale(j + 1)


def level_band(
    u: GridFunction, profile: TruncationProfile, j: int, wide: bool = False
) -> Region:
    lo, hi = band_bounds(profile, j, wide)
    a = np.abs(u.values)
    return mask_region(u.dim, u.level, u.origin, (a >= lo) & (a < hi))


def color_class(j: int) -> int:
    return (j % 4) + 1


def active_scales(u: GridFunction, profile: TruncationProfile) -> list[int]:
    """Scales whose wide band meets the value range of u."""
    a = np.abs(u.values)
    pos = a[a > 0.0]
    if pos.size == 0:
        return []
    step = profile.dim - 1
    jlo = math.floor(math.log2(float(pos.min())) / step) - 1
    jhi = math.floor(math.log2(float(pos.max())) / step) + 1
    out = []
    for j in range(jlo, jhi + 1):
        lo, hi = band_bounds(profile, j, wide=True)
        if np.any((a >= lo) & (a < hi)):
            out.append(j)
    return out


@dataclass(frozen=True)
class LayerAudit:
    scales: tuple[int, ...]
    tv_total: float
    band_tv: dict
    band_tv_sum: float
    band_sum_ok: bool
    chain_reports: dict
    chain_ok: bool
    color_disjoint_ok: bool

    @property
    def ok(self) -> bool:
        return self.band_sum_ok and self.chain_ok and self.color_disjoint_ok

    def to_dict(self) -> dict:
        return {
            "scales": list(self.scales),
            "tv_total": self.tv_total,
            "band_tv": {str(j): v for j, v in sorted(self.band_tv.items())},
            "band_tv_sum": self.band_tv_sum,
            "band_sum_ok": self.band_sum_ok,
            "chain_ok": self.chain_ok,
            "color_disjoint_ok": self.color_disjoint_ok,
            "ok": self.ok,
        }


def _color_disjoint(profile: TruncationProfile, u: GridFunction, scales: list[int]) -> bool:
    layered = {j: _evaluate(profile, u.values / profile.value_scale(j)) for j in scales}
    for i, j1 in enumerate(scales):
        for j2 in scales[i + 1 :]:
            if j1 != j2 and color_class(j1) == color_class(j2):
                if np.any((layered[j1] != 0.0) & (layered[j2] != 0.0)):
                    return False
    return True


def layer_energy_audit(
    u: GridFunction, profile: TruncationProfile | None = None
) -> LayerAudit:
    """Band bookkeeping for one function: band TV sum, chain rule per layer,
    and support disjointness of same-colored layers."""
    if profile is None:
        profile = build_profile(u.dim)
    scales = active_scales(u, profile)
    tv = total_variation(u)

    band_tv: dict[int, float] = {}
    chain_reports: dict[int, ChainRuleReport] = {}
    for j in scales:
        band_tv[j] = total_variation_on(u, level_band(u, profile, j, wide=True))
        _, report = compose_scalar(scaled_chi_function(profile, j), u)
        chain_reports[j] = report

    band_sum = float(sum(band_tv.values()))
    band_ok = band_sum <= BAND_SUM_FACTOR * tv * (1.0 + BAND_SUM_SLACK) or tv == 0.0
    chain_ok = all(r.ok for r in chain_reports.values())
    disjoint_ok = _color_disjoint(profile, u, scales)
    return LayerAudit(
        scales=tuple(scales),
        tv_total=tv,
        band_tv=band_tv,
        band_tv_sum=band_sum,
        band_sum_ok=band_ok,
        chain_reports=chain_reports,
        chain_ok=chain_ok,
        color_disjoint_ok=disjoint_ok,
    )
