"""Mechanical state equations: one-mass and two-mass drivetrain models.

The one-mass model uses the per-unit power-form swing equation
``dOmega/dt = (p_mech - p_e) / (2 H)``; the two-mass model uses the standard
torsional torque form with the table's twist-rate base.  The forms coincide
at Omega = 1 pu and at any equilibrium.
"""
from __future__ import annotations

from dataclasses import dataclass

from .params import TurbineParams

__all__ = [
    "OneMassState",
    "TwoMassState",
    "one_mass_deriv",
    "two_mass_deriv",
    "shaft_torque",
    "SPEED_EPS",
]

SPEED_EPS = 1e-3  # pu; below this a nonzero power has no meaningful torque


class DrivetrainNumericsError(ArithmeticError):
    """Raised when a torque conversion hits a near-standstill speed."""


@dataclass
class OneMassState:
    omega: float = 1.0


@dataclass
class TwoMassState:
    omega_wt: float = 1.0
    omega_g: float = 1.0
    twist: float = 0.0  # shaft torsion angle, rad


def one_mass_deriv(omega: float, p_mech: float, p_e: float, h_wt: float) -> float:
    """Accelerating-power convention: surplus mechanical power speeds the
    rotor up.  ``omega`` does not enter (power-form equation)."""
    return (p_mech - p_e) / (2.0 * h_wt)


def _torque(power: float, speed: float, what: str) -> float:
    if power == 0.0:
        return 0.0
    if speed < SPEED_EPS:
        raise DrivetrainNumericsError(
            f"{what}: speed {speed!r} pu below {SPEED_EPS} with nonzero power {power!r}"
        )
    return power / speed


def shaft_torque(s: TwoMassState, p: TurbineParams) -> float:
    """Torsional shaft torque: stiffness times twist plus damping times slip."""
    return p.k_shaft * s.twist + p.d_shaft * (s.omega_wt - s.omega_g)


def two_mass_deriv(s: TwoMassState, p_mech: float, p_e: float,
                   p: TurbineParams) -> tuple:
    """Return (dOmega_wt/dt, dOmega_g/dt, dtwist/dt)."""
    t_m = _torque(p_mech, s.omega_wt, "rotor torque")
    t_e = _torque(p_e, s.omega_g, "generator torque")
    t_sh = shaft_torque(s, p)
    d_wt = (t_m - t_sh) / (2.0 * p.h_wt_2m)
    d_g = (t_sh - t_e) / (2.0 * p.h_g_2m)
    d_tw = p.omega0_2m * (s.omega_wt - s.omega_g)
    return d_wt, d_g, d_tw
