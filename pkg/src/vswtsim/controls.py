"""Controller blocks: speed-reference law, anti-windup PI, pitch subsystem,
and the speed (torque) controller.

These classes are the reference discrete-time implementations driven once per
integrator step (forward Euler updates).  The simulation engine mirrors the
same update laws inside its stepping kernels.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .params import TurbineParams

__all__ = ["omega_ref", "PiController", "PitchSubsystem", "SpeedController"]


def omega_ref(p_ef: float, threshold: float = 0.75, omega_max: float = 1.2) -> float:
    """Rotor-speed reference from measured electrical power.

    Quadratic law below the threshold; constant ``omega_max`` at and above it.
    """
    if p_ef < threshold:
        return -0.67 * p_ef * p_ef + 1.42 * p_ef + 0.51
    return omega_max


def _clip(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else (hi if x > hi else x)


@dataclass
class PiController:
    """Discrete PI with optional output limits and conditional integration.

    The candidate output is ``kp*e + ki*(integrator + e*dt)``.  If it exceeds
    a limit the output is clamped and the integrator update is suppressed
    (anti-windup); otherwise the integrator accumulates ``e*dt``.
    """

    kp: float
    ki: float
    u_min: float = float("-inf")
    u_max: float = float("inf")
    integrator: float = 0.0
    last_output: float = 0.0

    def step(self, error: float, dt: float) -> float:
        if not dt > 0.0:
            raise ValueError("dt must be > 0")
        candidate = self.kp * error + self.ki * (self.integrator + error * dt)
        if candidate > self.u_max:
            u = self.u_max
        elif candidate < self.u_min:
            u = self.u_min
        else:
            u = candidate
            self.integrator += error * dt
        self.last_output = u
        return u


@dataclass
class PitchSubsystem:
    """Two-PI pitch control with servo lag, rate limiter, and saturation.

    ``beta_cmd = PI_speed(omega_err) + PI_comp(lag(p_e) - p_max)``; the blade
    angle follows the command through a first-order servo (t_pi) whose rate is
    limited to +-dbeta_rate and whose state is held inside [beta_min,
    beta_max].  Both PI integrators freeze while the saturated blade angle is
    pinned at a bound and their own error keeps pushing into it.
    """

    params: TurbineParams
    pi_speed: PiController = None
    pi_comp: PiController = None
    comp_input: float = 0.0   # t_pc lag state on the electrical power
    beta: float = 0.0         # servo state = actual blade angle
    last_cmd: float = 0.0

    def __post_init__(self):
        p = self.params
        if self.pi_speed is None:
            self.pi_speed = PiController(p.kpp, p.kip)
        if self.pi_comp is None:
            self.pi_comp = PiController(p.kpc, p.kic)

    def command(self, omega_err: float, p_e: float, dt: float) -> float:
        """Update both PIs (with anti-windup against the current saturated
        blade angle) and return the raw pitch command."""
        p = self.params
        if p.t_pc_bypass:
            self.comp_input = p_e
        else:
            self.comp_input += dt * (p_e - self.comp_input) / p.t_pc
        e_c = self.comp_input - p.p_max
        sp, cp = self.pi_speed, self.pi_comp
        up_hold = sp.kp * omega_err + sp.ki * sp.integrator
        up_int = up_hold + sp.ki * omega_err * dt
        uc_hold = cp.kp * e_c + cp.ki * cp.integrator
        uc_int = uc_hold + cp.ki * e_c * dt
        cmd = up_int + uc_int
        pinned_lo = self.beta <= p.beta_min and cmd < p.beta_min
        pinned_hi = self.beta >= p.beta_max and cmd > p.beta_max
        if (pinned_lo and omega_err < 0.0) or (pinned_hi and omega_err > 0.0):
            u_p = up_hold
        else:
            u_p = up_int
            sp.integrator += omega_err * dt
        if (pinned_lo and e_c < 0.0) or (pinned_hi and e_c > 0.0):
            u_c = uc_hold
        else:
            u_c = uc_int
            cp.integrator += e_c * dt
        sp.last_output, cp.last_output = u_p, u_c
        self.last_cmd = u_p + u_c
        return self.last_cmd

    def step(self, omega_err: float, p_e: float, dt: float) -> float:
        """One controller-plus-servo step; returns the new blade angle."""
        p = self.params
        cmd = self.command(omega_err, p_e, dt)
        if p.t_pi_bypass:
            delta = _clip(cmd - self.beta, -p.dbeta_rate * dt, p.dbeta_rate * dt)
        else:
            rate = _clip((cmd - self.beta) / p.t_pi, -p.dbeta_rate, p.dbeta_rate)
            delta = rate * dt
        self.beta = _clip(self.beta + delta, p.beta_min, p.beta_max)
        return self.beta


@dataclass
class SpeedController:
    """Power command from speed error, offset by the initial dispatch.

    ``p_cmd = p_elec_0 + PI(omega - omega_ref)``; positive speed excess raises
    the commanded power.  The PI limits (set at initialization) keep the
    command inside the converter's box so the integrator cannot wind up while
    the converter saturates.
    """

    params: TurbineParams
    p_elec_0: float = 0.0
    pi: PiController = None

    def __post_init__(self):
        p = self.params
        if self.pi is None:
            self.pi = PiController(
                p.kpt, p.kit,
                u_min=p.pe_min - self.p_elec_0,
                u_max=p.pe_max - self.p_elec_0,
            )

    def step(self, omega: float, omega_ref_value: float, dt: float) -> float:
        return self.p_elec_0 + self.pi.step(omega - omega_ref_value, dt)
