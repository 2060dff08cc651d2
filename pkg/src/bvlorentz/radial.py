"""Radial step functions with closed-form geometry.

A :class:`RadialStep` is piecewise constant on spherical shells.  Everything
the concentration study needs from these functions (shell measures, total
variation via the co-area structure, Lorentz chunks, the inverse-radius
pairing) reduces to finite sums over breakpoints, so this module is exact
where a grid would need millions of cells.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .grid import GridFunction, MemoryGuardError, UnsupportedDimensionError, _check_dim, _guard
from .rearrange import StepFunction, step_from_pairs, unit_ball_volume

__all__ = [
    "RadialStep",
    "annulus_indicator",
    "dual_pairing_inverse_radius",
    "load_radial",
    "piecewise_tv",
    "radial_tv",
    "rescale_dyadic",
    "save_radial",
    "staircase",
    "to_grid",
    "to_stepfunction",
]


@dataclass(frozen=True)
class RadialStep:
    """Function equal to values[m] on the shell radii[m] < |x| <= radii[m+1].

    ``radii`` starts at 0 and is strictly increasing; ``values`` has one entry
    per shell.  Trailing zero shells are trimmed on construction so the outer
    radius is meaningful.
    """

    dim: int
    radii: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        _check_dim(self.dim)
        r = np.asarray(self.radii, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if r.ndim != 1 or v.ndim != 1 or r.size != v.size + 1:
            raise ValueError("need len(radii) == len(values) + 1")
        if r[0] != 0.0:
            raise ValueError("radii must start at 0")
        if np.any(np.diff(r) <= 0):
            raise ValueError("radii must be strictly increasing")
        while v.size and v[-1] == 0.0:
            v = v[:-1]
            r = r[:-1]
        if v.size == 0:
            r = np.array([0.0, 1.0])
            v = np.array([0.0])
        r.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "radii", r)
        object.__setattr__(self, "values", v)

    @property
    def outer_radius(self) -> float:
        return float(self.radii[-1])

    def shell_measures(self) -> np.ndarray:
        omega = unit_ball_volume(self.dim)
        return omega * np.diff(self.radii**self.dim)

    def value_measure_pairs(self) -> tuple[np.ndarray, np.ndarray]:
        return self.values, self.shell_measures()

    def evaluate(self, r: np.ndarray) -> np.ndarray:
        """Value at radius r (shells are open at the inner radius)."""
        r = np.asarray(r, dtype=float)
        idx = np.searchsorted(self.radii, r, side="left") - 1
        padded = np.concatenate((self.values, [0.0]))
        idx = np.where((idx < 0) | (idx >= self.values.size), self.values.size, idx)
        return padded[idx]

    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self.values) * self.shell_measures()))


def annulus_indicator(dim: int) -> RadialStep:
    """Indicator of the shell 1 < |x| <= 2."""
    if dim < 2:
        raise UnsupportedDimensionError("the annulus construction needs dim >= 2")
    return RadialStep(dim, np.array([0.0, 1.0, 2.0]), np.array([0.0, 1.0]))


def rescale_dyadic(u: RadialStep, i: int) -> RadialStep:
    """The mass-critical rescaling: radii / 2^i, values * 2^{i (dim-1)}.

    Exact: radii and values are multiplied by powers of two.
    """
    return RadialStep(u.dim, u.radii * 2.0**-i, u.values * 2.0 ** (i * (u.dim - 1)))


def staircase(dim: int, n: int) -> RadialStep:
    """Average of the first n dyadic rescalings of the annulus indicator.

    Shell 2^-i < |x| <= 2^-(i-1) carries the value 2^{i(dim-1)} / n, for
    i = 1..n; a single zero shell fills the hole below 2^-n.
    """
    if dim < 2:
        raise UnsupportedDimensionError("the staircase construction needs dim >= 2")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    radii = np.concatenate(([0.0], 2.0 ** -np.arange(n, -1, -1.0)))
    values = np.concatenate(([0.0], 2.0 ** (np.arange(n, 0, -1.0) * (dim - 1)) / n))
    return RadialStep(dim, radii, values)


def radial_tv(u: RadialStep) -> float:
    """Total variation from the jump structure: sum of jump * sphere area.

    Shared interfaces between shells are counted once, with the actual jump
    across the interface, which is the co-area value of the function itself.
    """
    dim = u.dim
    omega = unit_ball_volume(dim)
    jumps = np.abs(np.diff(np.concatenate((u.values, [0.0]))))
    # the jump at radii[0] = 0 is a point (dim >= 2: zero sphere area) or,
    # for dim == 1, two points of the even extension; either way no interface
    spheres = dim * omega * u.radii[1:] ** (dim - 1)
    return float(np.sum(spheres * jumps))


def piecewise_tv(u: RadialStep) -> float:
    """Sum of the variations of each shell taken in isolation.

    Each shell contributes |value| times the area of both bounding spheres.
    For a sum of separated pieces this equals the true variation; when shells
    touch it over-counts the shared interfaces, so it dominates
    :func:`radial_tv`.
    """
    dim = u.dim
    omega = unit_ball_volume(dim)
    inner = u.radii[:-1] ** (dim - 1)
    outer = u.radii[1:] ** (dim - 1)
    return float(np.sum(dim * omega * (inner + outer) * np.abs(u.values)))


def to_stepfunction(u: RadialStep) -> StepFunction | None:
    return step_from_pairs(u.values, u.shell_measures())


def dual_pairing_inverse_radius(u: RadialStep) -> float:
    """Pairing with 1/|x|: integral of u(x)/|x| dx, exact per shell.

    Each shell contributes value * dim * |B_1| * (r_out^{dim-1} - r_in^{dim-1})
    / (dim - 1); the kernel is integrable at the origin only for dim >= 2.
    """
    if u.dim < 2:
        raise UnsupportedDimensionError("the inverse-radius pairing needs dim >= 2")
    dim = u.dim
    omega = unit_ball_volume(dim)
    diffs = np.diff(u.radii ** (dim - 1))
    return float(np.sum(u.values * dim * omega * diffs / (dim - 1)))


def to_grid(
    u: RadialStep,
    level: int,
    box: Sequence[tuple[float, float]] | None = None,
    *,
    cell_guard: int | None = None,
) -> GridFunction:
    """Sample the radial function at cell centers of a dyadic grid.

    Default box is the symmetric cube just covering the support.
    """
    if box is None:
        R = u.outer_radius
        box = [(-R, R)] * u.dim
    scale = 2 ** level
    origin = [int(np.floor(lo * scale)) for lo, _ in box]
    top = [int(np.ceil(hi * scale)) for _, hi in box]
    extents = [t - o for o, t in zip(origin, top)]
    _guard(int(np.prod(extents)), cell_guard)
    h = 2.0 ** (-level)
    axes = [(o + np.arange(n) + 0.5) * h for o, n in zip(origin, extents)]
    mesh = np.meshgrid(*axes, indexing="ij")
    rr = np.sqrt(sum(m**2 for m in mesh))
    vals = u.evaluate(rr)
    return GridFunction(u.dim, level, tuple(origin), tuple(extents), vals)


def save_radial(u: RadialStep, path: str | Path, metadata: dict | None = None) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["r_in", "r_out", "value"])
        for r0, r1, v in zip(u.radii[:-1], u.radii[1:], u.values):
            w.writerow([repr(float(r0)), repr(float(r1)), repr(float(v))])
    side = {"format": "bvlorentz-radial", "format_version": 1, "dim": u.dim}
    if metadata:
        side["metadata"] = metadata
    Path(str(path) + ".json").write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")


def load_radial(path: str | Path) -> RadialStep:
    side = json.loads(Path(str(path) + ".json").read_text())
    with Path(path).open() as fh:
        rows = list(csv.DictReader(fh))
    radii = [float(rows[0]["r_in"])] + [float(r["r_out"]) for r in rows]
    values = [float(r["value"]) for r in rows]
    return RadialStep(int(side["dim"]), np.asarray(radii), np.asarray(values))
