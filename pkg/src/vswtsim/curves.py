"""Static characteristic sweeps and the optimum operating-point search.

All sweeps are thin loops over the pure aero functions, so every table cell
is reproducible by a direct call into :mod:`vswtsim.aero`.  Static curves
bypass the cut-in/cut-out gate (a dynamic concept) but keep the zero floor on
mechanical power.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .aero import mechanical_power, power_coefficient, tip_speed_ratio
from .controls import omega_ref
from .params import TurbineParams

__all__ = [
    "CurveTable",
    "sweep_cp_vs_lambda",
    "sweep_cp_vs_wind",
    "sweep_pmech_vs_omega",
    "find_optimum",
    "calibrate_k_tsr",
]

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class CurveTable:
    """Labeled 2-D table: one abscissa column plus one column per series."""

    abscissa_label: str
    abscissa: np.ndarray
    series: tuple  # of (label, np.ndarray)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.abscissa)
        if any(len(v) != n for _, v in self.series):
            raise ValueError("all series must match the abscissa length")
        if np.any(np.diff(self.abscissa) <= 0.0):
            raise ValueError("abscissa must be strictly increasing")
        labels = [lab for lab, _ in self.series]
        if len(set(labels)) != len(labels):
            raise ValueError("series labels must be unique")

    @property
    def columns(self) -> tuple:
        return (self.abscissa_label,) + tuple(lab for lab, _ in self.series)

    @property
    def data(self) -> np.ndarray:
        return np.column_stack([self.abscissa] + [v for _, v in self.series])


def _grid(lo: float, hi: float, step: float) -> np.ndarray:
    if not step > 0.0:
        raise ValueError("step must be > 0")
    if hi < lo:
        raise ValueError("range must satisfy lo <= hi")
    n = int(math.floor((hi - lo) / step + 0.5)) + 1
    g = lo + step * np.arange(n)
    return g[g <= hi + 1e-12 * max(1.0, abs(hi))]


def sweep_cp_vs_lambda(betas, lam_min: float, lam_max: float, step: float,
                       p: TurbineParams) -> CurveTable:
    """Cp(lambda) family, one series per pitch angle."""
    betas = list(betas)
    if not betas:
        raise ValueError("need at least one pitch angle")
    if lam_min < 0.0 or lam_max > 20.0:
        raise ValueError("lambda range must lie within [0, 20]")
    lams = _grid(lam_min, lam_max, step)
    series = []
    for b in betas:
        vals = np.array([power_coefficient(l, b, p.cp_coeffs) for l in lams])
        series.append((f"beta={b:g}", vals))
    return CurveTable("lambda", lams, tuple(series),
                      {"kind": "cp-lambda", "betas": betas, "step": step})


def sweep_cp_vs_wind(betas, v_min: float, v_max: float, step: float,
                     p: TurbineParams, omega_fixed: float = 1.2) -> CurveTable:
    """Cp(v_w) family at fixed rotor speed, one series per pitch angle."""
    betas = list(betas)
    if not betas:
        raise ValueError("need at least one pitch angle")
    if v_min < p.v_cut_in or v_max > p.v_cut_out:
        raise ValueError(
            f"wind range must lie within [{p.v_cut_in}, {p.v_cut_out}]"
        )
    vws = _grid(v_min, v_max, step)
    series = []
    for b in betas:
        vals = np.array([
            power_coefficient(tip_speed_ratio(omega_fixed, v, p.k_tsr), b, p.cp_coeffs)
            for v in vws
        ])
        series.append((f"beta={b:g}", vals))
    return CurveTable("v_w", vws, tuple(series),
                      {"kind": "cp-vw", "betas": betas, "step": step,
                       "omega_fixed": omega_fixed})


def sweep_pmech_vs_omega(mode: str, p: TurbineParams, step: float = 0.001,
                         omega_min: float = 0.0, omega_max: float = 1.2,
                         winds=None, betas=None, v_fixed: float = 12.0,
                         beta_fixed: float = 0.0) -> CurveTable:
    """P_mech(Omega) family.

    mode="wind-sweep": fixed pitch (beta_fixed), one series per wind speed
    (default 4..12 m/s).  mode="beta-sweep": fixed wind (v_fixed), one series
    per pitch angle (default 0..19 deg).  No cut-in gate; floor at zero.
    """
    if omega_min < 0.0 or omega_max > 1.2:
        raise ValueError("omega range must lie within [0, 1.2]")
    oms = _grid(omega_min, omega_max, step)

    def pmech(om, beta, v):
        lam = tip_speed_ratio(om, v, p.k_tsr)
        pm = mechanical_power(power_coefficient(lam, beta, p.cp_coeffs), v, p.k_rotor)
        return pm if pm > 0.0 else 0.0

    series = []
    if mode == "wind-sweep":
        winds = list(winds) if winds is not None else [4.0, 6.0, 8.0, 10.0, 12.0]
        if not winds:
            raise ValueError("wind-sweep needs at least one wind speed")
        for v in winds:
            vals = np.array([pmech(om, beta_fixed, v) for om in oms])
            series.append((f"v={v:g}", vals))
        meta = {"kind": "pmech-omega", "mode": mode, "winds": winds,
                "beta_fixed": beta_fixed, "step": step}
    elif mode == "beta-sweep":
        betas = list(betas) if betas is not None else [0.0, 5.0, 10.0, 15.0, 19.0]
        if not betas:
            raise ValueError("beta-sweep needs at least one pitch angle")
        for b in betas:
            vals = np.array([pmech(om, b, v_fixed) for om in oms])
            series.append((f"beta={b:g}", vals))
        meta = {"kind": "pmech-omega", "mode": mode, "betas": betas,
                "v_fixed": v_fixed, "step": step}
    else:
        raise ValueError(f"mode must be 'wind-sweep' or 'beta-sweep', got {mode!r}")
    return CurveTable("omega", oms, tuple(series), meta)


def find_optimum(beta: float, p: TurbineParams, lam_min: float = 2.0,
                 lam_max: float = 13.0, grid_step: float = 0.01,
                 tol: float = 1e-6) -> tuple:
    """(lambda_opt, cp_opt) of Cp(. , beta) over [lam_min, lam_max].

    Coarse grid first (the quartic surface can be multimodal, so a bare
    golden section is unsafe), then golden-section refinement of the
    bracketing cells down to ``tol``; ties break toward smaller lambda.
    """
    if not (p.beta_min <= beta <= p.beta_max):
        raise ValueError(f"beta {beta!r} outside [{p.beta_min}, {p.beta_max}]")

    def f(lam):
        return power_coefficient(lam, beta, p.cp_coeffs)

    grid = _grid(lam_min, lam_max, grid_step)
    vals = np.array([f(l) for l in grid])
    k = int(np.argmax(vals))  # first max: ties toward smaller lambda
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, len(grid) - 1)]
    while b - a > tol:
        c = b - _INV_PHI * (b - a)
        d = a + _INV_PHI * (b - a)
        if f(c) >= f(d):  # >= keeps the left interval on ties
            b = d
        else:
            a = c
    lam_opt = 0.5 * (a + b)
    return lam_opt, f(lam_opt)


def calibrate_k_tsr(p: TurbineParams) -> float:
    """Tip-speed-ratio constant that makes the quadratic speed-reference law
    meet the maximum-power locus at its hand-over power.

    At the hand-over power q = p_ef_threshold the law still follows its
    quadratic branch; the wind that yields q at the optimum power coefficient
    is v = (q / (k_rotor * cp_opt))**(1/3), and matching the law's speed to
    the optimum tip speed there gives k_tsr = lam_opt * v / omega_ref(q-).
    The shipped default equals this value for the default coefficient table.
    """
    lam_opt, cp_opt = find_optimum(p.beta_min, p)
    q = p.p_ef_threshold
    v_q = (q / (p.k_rotor * cp_opt)) ** (1.0 / 3.0)
    om_q = omega_ref(math.nextafter(q, 0.0), q, p.omega_ref_max)
    return lam_opt * v_q / om_q
