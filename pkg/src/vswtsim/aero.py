"""Algebraic aerodynamics: tip speed ratio, Cp polynomial, mechanical power.

All functions are pure and stateless.  The polynomial is evaluated for any
(lambda, beta) without clamping; only :func:`aero_power` applies the
cut-in/cut-out gate and the zero floor, because the fitted surface goes
negative outside its valid region and negative shaft power is unphysical.
"""
from __future__ import annotations

from .params import CpCoefficients, TurbineParams

__all__ = ["tip_speed_ratio", "power_coefficient", "mechanical_power", "aero_power"]


def tip_speed_ratio(omega_pu: float, v_w: float, k_tsr: float) -> float:
    """lambda = k_tsr * omega / v_w.  Requires v_w > 0."""
    if not v_w > 0.0:
        raise ValueError(f"wind speed must be > 0 for a tip speed ratio, got {v_w!r}")
    return k_tsr * omega_pu / v_w

def power_coefficient(lam: float, beta: float, c: CpCoefficients) -> float:
    """Evaluate Cp(lambda, beta), beta in degrees.

    Fixed summation order (Horner in lambda inside Horner in beta) so results
    are bit-for-bit reproducible for identical inputs.
    """
    alpha = c.alpha
    acc = 0.0
    for i in range(4, -1, -1):
        row = 0.0
        arow = alpha[i]
        for j in range(4, -1, -1):
            row = row * lam + arow[j]
        acc = acc * beta + row
    return acc

def mechanical_power(cp: float, v_w: float, k_rotor: float) -> float:
    """P_mech = k_rotor * cp * v_w**3, pu.  May be negative when cp < 0."""
    return k_rotor * cp * (v_w * v_w * v_w)

def aero_power(omega_pu: float, beta: float, v_w: float, p: TurbineParams) -> float:
    """Shaft power of the running turbine: composition of the three steps,
    gated to zero outside [v_cut_in, v_cut_out] and floored at zero."""
    if v_w < p.v_cut_in or v_w > p.v_cut_out:
        return 0.0
    lam = tip_speed_ratio(omega_pu, v_w, p.k_tsr)
    pm = mechanical_power(power_coefficient(lam, beta, p.cp_coeffs), v_w, p.k_rotor)
    return pm if pm > 0.0 else 0.0
