"""Generator/converter power channel and the slow measurement filter.

The delivered power follows the command through a first-order lag (t_con),
rate-limited to +-dpe_rate and clamped into [p_floor, pe_max]; the block order
lag -> rate limit -> clamp keeps the output inside its limits unconditionally.
The measured power p_ef follows p_e through the t_f lag and feeds the
speed-reference law.

The standalone ``*_step`` methods advance with forward Euler (first-order
accurate); the simulation engine integrates the same dynamics inside its RK4
state vector.
"""
from __future__ import annotations

from dataclasses import dataclass

from .params import TurbineParams

__all__ = ["PowerChannel", "converter_deriv", "measure_deriv"]


def converter_deriv(p_e: float, p_cmd: float, p: TurbineParams,
                    p_floor: float = None) -> float:
    """Rate-limited lag derivative, zeroed when pinned at a box bound."""
    lo = p.pe_min if p_floor is None else p_floor
    d = (p_cmd - p_e) / p.t_con
    if d > p.dpe_rate:
        d = p.dpe_rate
    elif d < -p.dpe_rate:
        d = -p.dpe_rate
    if (p_e >= p.pe_max and d > 0.0) or (p_e <= lo and d < 0.0):
        d = 0.0
    return d


def measure_deriv(p_ef: float, p_e: float, p: TurbineParams) -> float:
    return (p_e - p_ef) / p.t_f


@dataclass
class PowerChannel:
    """Converter lag state (p_e) plus measurement lag state (p_ef).

    ``p_floor`` is the effective lower bound: pe_min while the equilibrium
    dispatch can sustain it, the initial dispatch itself when low wind cannot
    aerodynamically cover pe_min, and 0 when the turbine is offline.
    """

    params: TurbineParams
    p_e: float = 0.0
    p_ef: float = 0.0
    p_floor: float = None

    def __post_init__(self):
        if self.p_floor is None:
            self.p_floor = self.params.pe_min

    def converter_step(self, p_cmd: float, dt: float) -> float:
        if not dt > 0.0:
            raise ValueError("dt must be > 0")
        p = self.params
        new = self.p_e + dt * (p_cmd - self.p_e) / p.t_con
        lo_step, hi_step = -p.dpe_rate * dt, p.dpe_rate * dt
        delta = new - self.p_e
        if delta > hi_step:
            delta = hi_step
        elif delta < lo_step:
            delta = lo_step
        new = self.p_e + delta
        if new > p.pe_max:
            new = p.pe_max
        elif new < self.p_floor:
            new = self.p_floor
        self.p_e = new
        return new

    def measure_step(self, dt: float) -> float:
        if not dt > 0.0:
            raise ValueError("dt must be > 0")
        self.p_ef += dt * (self.p_e - self.p_ef) / self.params.t_f
        return self.p_ef
