"""Concentration along the dyadic staircase family.

The family ``u_n`` spreads a fixed amount of variation over ``n`` dyadic
annuli with values matched to the critical scaling.  Its variation and its
pairing against the inverse-radius weight stay bounded away from zero while
every Lorentz norm with second index above one decays like ``n**(1/q - 1)``,
so no single group element can recover a fixed fraction of the mass.  The
probe at the bottom quantifies that: the best aligned element captures mass
of order ``1/n``.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .group import DyadicVector, GroupElement
from .radial import (
    RadialStep,
    dual_pairing_inverse_radius,
    piecewise_tv,
    radial_tv,
    staircase,
    to_stepfunction,
)
from .rearrange import LorentzIndex, critical_exponent, lebesgue_norm, lorentz_norm

__all__ = [
    "CounterexampleRow",
    "CounterexampleReport",
    "run_counterexample",
    "expected_radial_tv",
    "expected_piecewise_tv",
    "expected_l2_norm",
    "expected_pairing",
    "decay_fit",
    "aligned_probe_elements",
    "ProbeReport",
    "dvanishing_probe",
    "probe_ok",
    "PROBE_FIT_TARGET",
    "PROBE_FIT_TOL",
    "gnuplot_script",
]


# -- closed forms for the two-dimensional family ----------------------------

def expected_radial_tv(n: int) -> float:
    return 2.0 * math.pi * (n + 2) / n


def expected_piecewise_tv(n: int) -> float:
    return 6.0 * math.pi


def expected_l2_norm(n: int) -> float:
    return math.sqrt(3.0 * math.pi / n)


def expected_pairing(n: int) -> float:
    return 2.0 * math.pi


@dataclass(frozen=True)
class CounterexampleRow:
    n: int
    tv_radial: float
    tv_piecewise: float
    l2_norm: float
    pairing: float
    lebesgue_critical: float
    lorentz: dict  # q -> quasinorm at the critical first index

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "tv_radial": self.tv_radial,
            "tv_piecewise": self.tv_piecewise,
            "l2_norm": self.l2_norm,
            "pairing": self.pairing,
            "lebesgue_critical": self.lebesgue_critical,
            "lorentz": {repr(q): v for q, v in sorted(self.lorentz.items())},
        }


@dataclass(frozen=True)
class CounterexampleReport:
    dim: int
    q_list: tuple
    rows: tuple
    invariants: dict
    elapsed_seconds: float

    @property
    def ok(self) -> bool:
        return all(entry["ok"] for entry in self.invariants.values())

    def to_dict(self) -> dict:
        # elapsed_seconds stays off the document: emitted files must be
        # byte-identical across runs
        return {
            "schema_version": 1,
            "dim": self.dim,
            "q_list": list(self.q_list),
            "rows": [r.to_dict() for r in self.rows],
            "invariants": self.invariants,
            "ok": self.ok,
        }

    def csv_lines(self) -> list[str]:
        qs = list(self.q_list)
        header = ["n", "tv_radial", "tv_piecewise", "l2_norm", "pairing", "lebesgue_critical"]
        header += [f"lorentz_q{q:g}" for q in qs]
        lines = [",".join(header)]
        for r in self.rows:
            cells = [
                str(r.n),
                repr(r.tv_radial),
                repr(r.tv_piecewise),
                repr(r.l2_norm),
                repr(r.pairing),
                repr(r.lebesgue_critical),
            ]
            cells += [repr(r.lorentz[q]) for q in qs]
            lines.append(",".join(cells))
        return lines


def _strictly_decreasing(xs: list[float]) -> bool:
    return all(b < a for a, b in zip(xs, xs[1:]))


def run_counterexample(
    dim: int = 2,
    n_max: int = 12,
    q_list: tuple = (1.0, 1.2, 1.5, 2.0),
) -> CounterexampleReport:
    t0 = time.perf_counter()
    p = critical_exponent(dim)
    rows = []
    for n in range(1, n_max + 1):
        u = staircase(dim, n)
        step = to_stepfunction(u)
        lorentz = {float(q): lorentz_norm(step, LorentzIndex(p, float(q))) for q in q_list}
        rows.append(
            CounterexampleRow(
                n=n,
                tv_radial=radial_tv(u),
                tv_piecewise=piecewise_tv(u),
                l2_norm=lebesgue_norm(step, 2.0),
                pairing=dual_pairing_inverse_radius(u),
                lebesgue_critical=lebesgue_norm(step, p),
                lorentz=lorentz,
            )
        )

    pairings = [r.pairing for r in rows]
    pair_scale = abs(pairings[0])
    pair_dev = max(abs(v - pairings[0]) for v in pairings) / pair_scale
    invariants: dict[str, dict] = {}
    invariants["pairing_constant"] = {"max_rel_dev": pair_dev, "ok": pair_dev <= 1e-12}
    invariants["pairing_floor"] = {
        "min": min(pairings),
        "floor": pairings[0] / 2.0,
        "ok": min(pairings) >= pairings[0] / 2.0,
    }
    crit = [r.lebesgue_critical for r in rows]
    invariants["critical_lebesgue_decreasing"] = {
        "ok": _strictly_decreasing(crit),
        "first": crit[0],
        "last": crit[-1],
    }
    for q in q_list:
        q = float(q)
        series = [r.lorentz[q] for r in rows]
        if q > 1.0:
            invariants[f"lorentz_decreasing_q{q:g}"] = {
                "ok": _strictly_decreasing(series),
                "last_over_first": series[-1] / series[0],
            }
        else:
            ratio = min(series) / series[0]
            invariants["lorentz_floor_q1"] = {"min_over_first": ratio, "ok": ratio >= 0.5}
    tvs = [r.tv_radial for r in rows] + [r.tv_piecewise for r in rows]
    bound = max(rows[0].tv_radial, rows[0].tv_piecewise) * (1.0 + 1e-12)
    invariants["tv_bounded"] = {"max": max(tvs), "bound": bound, "ok": max(tvs) <= bound}

    elapsed = time.perf_counter() - t0
    return CounterexampleReport(dim, tuple(float(q) for q in q_list), tuple(rows), invariants, elapsed)


def decay_fit(ns, values) -> float:
    """Least-squares slope of log(value) against log(n)."""
    ns = np.asarray(ns, dtype=np.float64)
    vals = np.asarray(values, dtype=np.float64)
    slope, _ = np.polyfit(np.log(ns), np.log(vals), 1)
    return float(slope)


# -- mass capture probe ------------------------------------------------------

# the best aligned element captures mass ~ 1/n; the fitted log-log slope
# must land in this window
PROBE_FIT_TARGET = -1.0
PROBE_FIT_TOL = 0.2


def aligned_probe_elements(dim: int, count: int) -> list[GroupElement]:
    """Zoom-out elements g[-i, (-1, 0, ...)] that map one annulus of the
    staircase onto the unit observation cube."""
    shift = DyadicVector.integers(*([-1] + [0] * (dim - 1)))
    return [GroupElement(-i, shift) for i in range(1, count + 1)]


@dataclass(frozen=True)
class ProbeReport:
    dim: int
    ns: tuple
    masses: tuple          # best captured mass per n (max over elements)
    per_element: dict      # (j, y-ints) -> tuple of masses per n
    fit_exponent: float
    quad_level: int

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "dim": self.dim,
            "ns": list(self.ns),
            "masses": list(self.masses),
            "fit_exponent": self.fit_exponent,
            "quad_level": self.quad_level,
        }


def _captured_mass(u: RadialStep, g: GroupElement, quad_level: int) -> float:
    """Midpoint quadrature of |g u| over the unit cube (0,1)^dim."""
    dim = u.dim
    m = 2**quad_level
    h = 1.0 / m
    axis = (np.arange(m) + 0.5) * h
    grids = np.meshgrid(*([axis] * dim), indexing="ij")
    y = np.array(g.y.as_floats())
    scale = 2.0**g.j
    radius_sq = np.zeros_like(grids[0])
    for k in range(dim):
        radius_sq += (scale * (grids[k] - y[k])) ** 2
    vals = u.evaluate(np.sqrt(radius_sq))
    factor = 2.0 ** ((dim - 1) * g.j)
    return float(factor * np.abs(vals).mean())


def dvanishing_probe(
    dim: int = 2,
    n_list: tuple = tuple(range(1, 13)),
    elements: list[GroupElement] | None = None,
    quad_level: int = 9,
) -> ProbeReport:
    if elements is None:
        elements = aligned_probe_elements(dim, max(n_list))
    per_element: dict[tuple, list[float]] = {}
    best: list[float] = []
    for n in n_list:
        u = staircase(dim, n)
        masses = []
        for g in elements:
            key = (g.j, tuple(g.y.as_floats()))
            mass = _captured_mass(u, g, quad_level)
            per_element.setdefault(key, []).append(mass)
            masses.append(mass)
        best.append(max(masses))
    fit = decay_fit(n_list, best)
    return ProbeReport(
        dim=dim,
        ns=tuple(n_list),
        masses=tuple(best),
        per_element={k: tuple(v) for k, v in per_element.items()},
        fit_exponent=fit,
        quad_level=quad_level,
    )


def probe_ok(report: ProbeReport) -> bool:
    return abs(report.fit_exponent - PROBE_FIT_TARGET) <= PROBE_FIT_TOL


def gnuplot_script(csv_name: str, q_list: tuple, out_name: str = "counterexample.png") -> str:
    """Log-log decay plot of the Lorentz columns against n."""
    lines = [
        "set datafile separator ','",
        "set logscale xy",
        "set key outside",
        "set xlabel 'n'",
        "set ylabel 'quasinorm'",
        "set term pngcairo size 900,600",
        f"set output '{out_name}'",
    ]
    plots = []
    for i, q in enumerate(q_list):
        col = 7 + i
        plots.append(f"'{csv_name}' using 1:{col} with linespoints title 'q={q:g}'")
    lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"
