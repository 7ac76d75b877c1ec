"""Closed-loop time-domain simulator.

Responsibilities: wind profile evaluation, steady-state initialization,
fixed-step integration (RK4 default, explicit Euler selectable) with per-step
controller updates, and trajectory recording.

Two interchangeable stepping backends exist: the compiled kernel
(``vswtsim._kernel``, built from Cython) and the pure-Python loop
(``vswtsim._pyloop``).  The compiled one is selected at import when available;
set ``VSWTSIM_BACKEND=python`` or ``=cython`` to force a choice.  Both produce
bit-identical trajectories.
"""
from __future__ import annotations

import math
import os
from bisect import bisect_right
from dataclasses import dataclass, replace as _dc_replace

import numpy as np

from . import _pyloop
from .aero import aero_power, power_coefficient, tip_speed_ratio
from .controls import omega_ref
from .params import Scenario, TurbineParams, validate, validate_scenario

__all__ = [
    "Trajectory",
    "FullState",
    "EngineNumericsError",
    "InitConvergenceError",
    "BACKEND",
    "available_backends",
    "wind_at",
    "init_steady_state",
    "step",
    "simulate",
    "rk4_step",
]


class EngineNumericsError(ArithmeticError):
    """Non-finite state or guarded torque blow-up during integration."""


class InitConvergenceError(RuntimeError):
    """Steady-state initialization failed to reach the residual tolerance."""


def _load_kernel():
    try:
        from . import _kernel  # compiled extension, optional
        return _kernel
    except ImportError:
        return None


_KERNEL = _load_kernel()
_FORCED = os.environ.get("VSWTSIM_BACKEND", "").strip().lower()
if _FORCED == "python":
    _ACTIVE = None
elif _FORCED == "cython":
    if _KERNEL is None:
        raise ImportError("VSWTSIM_BACKEND=cython but the compiled kernel is unavailable")
    _ACTIVE = _KERNEL
elif _FORCED:
    raise ImportError(f"unknown VSWTSIM_BACKEND value {_FORCED!r}")
else:
    _ACTIVE = _KERNEL

BACKEND = "cython" if _ACTIVE is not None else "python"


def available_backends() -> tuple:
    return ("cython", "python") if _KERNEL is not None else ("python",)


def wind_at(profile, t: float) -> float:
    """Piecewise-linear wind speed; constant extrapolation beyond the ends."""
    if t < 0.0:
        raise ValueError("time must be nonnegative")
    times = [p[0] for p in profile]
    i = bisect_right(times, t) - 1
    if i < 0:
        return profile[0][1]
    if i >= len(profile) - 1:
        return profile[-1][1]
    t0, v0 = profile[i]
    t1, v1 = profile[i + 1]
    return v0 + (v1 - v0) * (t - t0) / (t1 - t0)


# ---------------------------------------------------------------------------
# full simulator state

_COLUMNS_1M = ("t", "v_w", "beta", "lambda", "cp", "p_mech", "p_e", "p_ef",
               "omega_wt", "omega_g", "omega_ref")
_COLUMNS_2M = _COLUMNS_1M + ("shaft_torque",)


@dataclass(frozen=True)
class FullState:
    """Complete closed-loop state at one instant.

    ``y`` holds the continuous states (see ``_pyloop``), ``integ`` the three
    PI integrators (speed, pitch-speed, pitch-compensation).  ``p_floor`` is
    the converter's effective lower bound for this run; ``wind`` is the wind
    speed sampled at ``t``.
    """

    t: float
    wind: float
    model: str
    y: tuple
    integ: tuple
    p_elec_0: float
    p_floor: float
    params: TurbineParams

    @property
    def omega_wt(self) -> float:
        return self.y[0]

    @property
    def omega_g(self) -> float:
        return self.y[0] if self.model == "one-mass" else self.y[1]

    @property
    def twist(self) -> float:
        if self.model != "two-mass":
            raise AttributeError("twist only exists for the two-mass model")
        return self.y[2]

    @property
    def p_e(self) -> float:
        return self.y[-4]

    @property
    def p_ef(self) -> float:
        return self.y[-3]

    @property
    def comp_input(self) -> float:
        return self.y[-2]

    @property
    def beta(self) -> float:
        return self.y[-1]


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled log of a simulation run."""

    columns: tuple
    data: np.ndarray  # shape (n_samples, len(columns))
    meta: dict

    def __len__(self) -> int:
        return self.data.shape[0]

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.columns.index(name)]

    @property
    def t(self) -> np.ndarray:
        return self.data[:, 0]


# ---------------------------------------------------------------------------
# steady-state initialization

_FP_MAX_ITERS = 1000


def _rated_pitch(p: TurbineParams, v0: float) -> float:
    """Pitch angle that delivers exactly rated power at omega_ref_max.

    Coarse scan from beta_min upward for the first bracketing cell, then
    bisection; the scan guards against non-monotone stretches of the surface.
    """
    om = p.omega_ref_max

    def g(beta):
        lam = tip_speed_ratio(om, v0, p.k_tsr)
        pm = p.k_rotor * power_coefficient(lam, beta, p.cp_coeffs) * v0 ** 3
        return pm - p.pe_max

    lo = p.beta_min
    glo = g(lo)
    if glo < 0.0:
        raise InitConvergenceError(
            f"no rated operating point at v0={v0}: available power below rated at beta_min"
        )
    nscan = 200
    h = (p.beta_max - p.beta_min) / nscan
    hi = None
    for k in range(1, nscan + 1):
        b = p.beta_min + k * h
        if g(b) <= 0.0:
            lo, hi = b - h, b
            break
    if hi is None:
        raise InitConvergenceError(
            f"no rated operating point at v0={v0}: pitch range cannot shed to rated"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def init_steady_state(p: TurbineParams, v0: float, model: str) -> FullState:
    """Equilibrium state at constant wind ``v0``.

    Below rated: damped fixed-point iteration on the power balance
    ``p = aero_power(omega_ref(p), beta=0, v0)`` followed by undamped
    polishing; at/above rated: p_e = pe_max with the pitch angle solved by
    bisection.  All lag states and PI integrators are set so every derivative
    and controller output is stationary; the residuals are verified.
    """
    if model not in ("one-mass", "two-mass"):
        raise ValueError(f"model must be 'one-mass' or 'two-mass', got {model!r}")
    if not (p.v_cut_in <= v0 <= p.v_cut_out):
        raise ValueError(
            f"initial wind {v0!r} outside the operating band "
            f"[{p.v_cut_in}, {p.v_cut_out}]"
        )

    def aero_at(om, beta):
        pm = aero_power(om, beta, v0, p)
        return pm

    p_rated_speed = aero_at(p.omega_ref_max, p.beta_min)
    thr = p.p_ef_threshold
    if p_rated_speed >= p.pe_max:
        # rated branch: full power, maximum reference speed, pitched blades
        pstar = p.pe_max
        omega = p.omega_ref_max
        beta = _rated_pitch(p, v0)
        i_p = 0.0
        i_c = beta / p.kic
    else:
        pw = min(max(p_rated_speed, 0.01), thr - 1e-3)
        converged = False
        for _ in range(_FP_MAX_ITERS):
            nxt = aero_at(omega_ref(pw, thr, p.omega_ref_max), p.beta_min)
            if abs(nxt - pw) < 1e-12:
                converged = True
            pw = 0.5 * pw + 0.5 * nxt
            if converged:
                break
        for _ in range(60):  # undamped polish to the float fixed point
            pw = aero_at(omega_ref(pw, thr, p.omega_ref_max), p.beta_min)
        if not converged:
            resid = abs(aero_at(omega_ref(pw, thr, p.omega_ref_max), p.beta_min) - pw)
            if resid > 1e-10:
                raise InitConvergenceError(
                    f"power fixed point did not converge at v0={v0}: residual {resid:.3e}"
                )
        pstar = pw
        omega = omega_ref(pstar, thr, p.omega_ref_max)
        beta = p.beta_min
        i_p = 0.0
        i_c = 0.0

    p_floor = min(p.pe_min, pstar)
    if model == "one-mass":
        y = (omega, pstar, pstar, pstar, beta)
    else:
        twist = (pstar / omega) / p.k_shaft
        y = (omega, omega, twist, pstar, pstar, pstar, beta)
    fs = FullState(
        t=0.0, wind=v0, model=model, y=y, integ=(0.0, i_p, i_c),
        p_elec_0=pstar, p_floor=p_floor, params=p,
    )
    resid = _stationary_residual(fs, v0)
    if resid > 1e-8:
        raise InitConvergenceError(
            f"initialization residual {resid:.3e} exceeds 1e-8 at v0={v0}"
        )
    return fs


def _stationary_residual(fs: FullState, v0: float) -> float:
    """Largest continuous-state derivative magnitude at the candidate
    equilibrium, evaluated exactly as the stepping loop would."""
    p = fs.params
    pp = _pyloop.pack_params(p)
    p_cmd = fs.p_elec_0  # zero speed error at equilibrium
    e_c = fs.comp_input - p.p_max
    beta_cmd = (p.kpp * 0.0 + p.kip * fs.integ[1]) + (p.kpc * e_c + p.kic * fs.integ[2])
    model = 1 if fs.model == "one-mass" else 2
    ders = _pyloop._derivs(model, pp, fs.y, v0, p_cmd, beta_cmd, fs.p_floor)
    return max(abs(d) for d in ders)


# ---------------------------------------------------------------------------
# stepping and batch simulation

def step(s: FullState, dt: float, p: TurbineParams = None,
         wind_profile=None, method: str = "rk4") -> FullState:
    """Advance one macro step; pure with respect to the input state.

    Wind is held at ``s.wind`` unless a breakpoint profile is given.  Raises
    EngineNumericsError if any state is non-finite after the step.
    """
    if not dt > 0.0:
        raise ValueError("dt must be > 0")
    p = s.params if p is None else p
    pp = _pyloop.pack_params(p)
    profile = ((0.0, s.wind),) if wind_profile is None else wind_profile
    ts = [b[0] for b in profile]
    vs = [b[1] for b in profile]
    integ = list(s.integ)
    try:
        y, _ = _pyloop.step_once(
            1 if s.model == "one-mass" else 2,
            s.t, s.y, integ, s.p_elec_0, s.p_floor,
            pp, ts, vs, len(ts), 0, dt, euler=(method == "euler"),
        )
    except _pyloop.LoopNumericsError as e:
        raise EngineNumericsError(str(e)) from None
    if not all(math.isfinite(x) for x in y):
        raise EngineNumericsError(f"non-finite state after step at t={s.t!r}: {y!r}")
    t_next = s.t + dt
    v_next = s.wind if wind_profile is None else wind_at(profile, t_next)
    return _dc_replace(s, t=t_next, wind=v_next, y=tuple(y), integ=tuple(integ))


def simulate(scenario: Scenario, p: TurbineParams,
             output_interval: float = 0.01, method: str = "rk4",
             backend: str = None) -> Trajectory:
    """Run one scenario from its steady-state initialization.

    Records every ``output_interval`` (pass the scenario dt for raw-rate
    recording).  Deterministic: identical inputs give bit-identical output.
    """
    bad = validate(p)
    if bad:
        raise ValueError("invalid parameters: " + "; ".join(m for _, m in bad))
    bad = validate_scenario(scenario)
    if bad:
        raise ValueError("invalid scenario: " + "; ".join(m for _, m in bad))
    if method not in ("rk4", "euler"):
        raise ValueError(f"method must be 'rk4' or 'euler', got {method!r}")

    v0 = wind_at(scenario.wind_profile, 0.0)
    fs = init_steady_state(p, v0, scenario.model)
    dt = scenario.dt
    n_steps = int(round(scenario.duration / dt))
    decim = max(1, int(round(output_interval / dt)))
    n_samples = n_steps // decim + 1
    model = 1 if scenario.model == "one-mass" else 2
    columns = _COLUMNS_1M if model == 1 else _COLUMNS_2M
    out = np.empty((n_samples, len(columns)), dtype=np.float64)

    pp = _pyloop.pack_params(p)
    ts = np.array([b[0] for b in scenario.wind_profile], dtype=np.float64)
    vs = np.array([b[1] for b in scenario.wind_profile], dtype=np.float64)

    if backend is None:
        impl = _ACTIVE
    elif backend == "python":
        impl = None
    elif backend == "cython":
        if _KERNEL is None:
            raise ValueError("compiled kernel not available")
        impl = _KERNEL
    else:
        raise ValueError(f"unknown backend {backend!r}")

    try:
        if impl is None:
            _pyloop.run_loop(model, pp, ts, vs, fs.y, fs.integ,
                             fs.p_elec_0, fs.p_floor, dt, n_steps, decim, out,
                             euler=(method == "euler"))
        else:
            code, detail = impl.run_loop(model, pp, ts, vs,
                                         np.array(fs.y, dtype=np.float64),
                                         np.array(fs.integ, dtype=np.float64),
                                         fs.p_elec_0, fs.p_floor, dt, n_steps,
                                         decim, out, 1 if method == "euler" else 0)
            if code != 0:
                raise EngineNumericsError(detail)
    except _pyloop.LoopNumericsError as e:
        raise EngineNumericsError(str(e)) from None

    meta = {
        "model": scenario.model,
        "dt": dt,
        "output_interval": decim * dt,
        "duration": scenario.duration,
        "initial_wind": v0,
        "method": method,
        "backend": "python" if impl is None else "cython",
    }
    return Trajectory(columns=columns, data=out, meta=meta)


def rk4_step(deriv, t: float, y: tuple, dt: float) -> tuple:
    """Generic classic Runge-Kutta step for small systems (the engine's
    integration scheme of record, exposed for convergence studies)."""
    n = len(y)
    h2 = 0.5 * dt
    k1 = deriv(t, y)
    y2 = tuple(y[i] + h2 * k1[i] for i in range(n))
    k2 = deriv(t + h2, y2)
    y3 = tuple(y[i] + h2 * k2[i] for i in range(n))
    k3 = deriv(t + h2, y3)
    y4 = tuple(y[i] + dt * k3[i] for i in range(n))
    k4 = deriv(t + dt, y4)
    return tuple(y[i] + dt * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) / 6.0
                 for i in range(n))
