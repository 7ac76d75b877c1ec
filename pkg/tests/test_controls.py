import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vswtsim import (
    PiController,
    PitchSubsystem,
    SpeedController,
    TurbineParams,
    omega_ref,
)


# --- speed reference law -----------------------------------------------------

def test_omega_ref_at_zero_power():
    assert omega_ref(0.0) == 0.51


def test_omega_ref_just_below_threshold():
    p = math.nextafter(0.75, 0.0)
    assert abs(omega_ref(p) - 1.198125) < 1e-12


def test_omega_ref_constant_above_threshold():
    for p in (0.75, 0.8, 0.9, 1.0, 5.0):
        assert omega_ref(p) == 1.2


def test_omega_ref_documented_jump_at_threshold():
    quad = -0.67 * 0.75 ** 2 + 1.42 * 0.75 + 0.51
    assert abs((1.2 - quad) - 0.001875) < 1e-12


def test_omega_ref_continuous_on_quadratic_branch():
    ps = np.linspace(0.0, 0.7499, 2000)
    vals = np.array([omega_ref(p) for p in ps])
    expected = -0.67 * ps ** 2 + 1.42 * ps + 0.51
    assert np.max(np.abs(vals - expected)) < 1e-12


def test_omega_ref_image_over_operating_band():
    for p in np.linspace(0.1, 1.0, 500):
        assert 0.51 <= omega_ref(p) <= 1.2


# --- generic anti-windup PI --------------------------------------------------

def test_pi_zero_error_zero_state():
    pi = PiController(3.0, 0.6)
    assert pi.step(0.0, 0.1) == 0.0
    assert pi.integrator == 0.0


def test_pi_update_law_arithmetic():
    pi = PiController(3.0, 0.6)
    u = pi.step(0.1, 0.1)
    assert abs(u - 0.306) < 1e-12
    assert abs(pi.integrator - 0.01) < 1e-15


def test_pi_clamp_freezes_integrator():
    pi = PiController(3.0, 0.6, u_min=0.0, u_max=0.2)
    u = pi.step(0.1, 0.1)
    assert u == 0.2
    assert pi.integrator == 0.0


def test_pi_rejects_bad_dt():
    with pytest.raises(ValueError):
        PiController(1.0, 1.0).step(0.1, 0.0)


@settings(max_examples=40, deadline=None)
@given(
    kp=st.floats(0.1, 100.0),
    ki=st.floats(0.01, 50.0),
    e=st.floats(-1.0, 1.0),
    n=st.integers(1, 200),
)
def test_pi_matches_textbook_closed_form_without_limits(kp, ki, e, n):
    # constant error e for n steps of dt: u_n = kp*e + ki*e*n*dt
    dt = 0.01
    pi = PiController(kp, ki)
    u = 0.0
    for _ in range(n):
        u = pi.step(e, dt)
    expected = kp * e + ki * e * n * dt
    assert abs(u - expected) <= 1e-9 * max(1.0, abs(expected))


# --- pitch subsystem ---------------------------------------------------------

def test_pitch_zero_drive_stays_at_lower_bound(params):
    ps = PitchSubsystem(params, comp_input=params.p_max)
    for _ in range(100):
        beta = ps.step(0.0, params.p_max, 1e-3)
    assert beta == 0.0


def test_pitch_rises_under_sustained_speed_error(params):
    ps = PitchSubsystem(params, comp_input=params.p_max)
    prev = 0.0
    dt = 1e-3
    for _ in range(2000):
        beta = ps.step(0.05, params.p_max, dt)
        assert beta - prev <= params.dbeta_rate * dt + 1e-12
        prev = beta
    assert beta > 0.5


def test_pitch_saturates_at_upper_bound(params):
    ps = PitchSubsystem(params, comp_input=params.p_max)
    for _ in range(40000):
        beta = ps.step(1.0, params.p_max, 1e-3)
    assert beta == params.beta_max


def test_pitch_anti_windup_recovery(params):
    # hold in upper saturation, then flip the error sign: the command must
    # immediately move back toward the bound instead of plateauing
    ps = PitchSubsystem(params, comp_input=params.p_max)
    for _ in range(60000):
        ps.step(1.0, params.p_max, 1e-3)
    assert ps.beta == params.beta_max
    dist_sat = abs(ps.last_cmd - params.beta_max)
    ps.step(-0.01, params.p_max, 1e-3)
    dist_after = abs(ps.last_cmd - params.beta_max)
    assert dist_after < dist_sat


@settings(max_examples=30, deadline=None)
@given(
    errs=st.lists(st.floats(-0.5, 0.5), min_size=5, max_size=300),
    powers=st.lists(st.floats(0.0, 1.5), min_size=5, max_size=300),
)
def test_pitch_box_and_rate_invariants_for_arbitrary_inputs(params, errs, powers):
    ps = PitchSubsystem(params)
    dt = 1e-2
    prev = ps.beta
    for e, pe in zip(errs, powers):
        beta = ps.step(e, pe, dt)
        assert params.beta_min <= beta <= params.beta_max
        assert abs(beta - prev) <= params.dbeta_rate * dt + 1e-12
        prev = beta


# --- speed controller --------------------------------------------------------

def test_speed_ctrl_holds_initial_dispatch_at_zero_error(params):
    sc = SpeedController(params, p_elec_0=0.6)
    assert sc.step(1.0, 1.0, 1e-3) == 0.6


def test_speed_ctrl_arithmetic(params):
    sc = SpeedController(params, p_elec_0=0.5)
    p_cmd = sc.step(1.05, 1.0, 0.1)
    assert abs(p_cmd - 0.653) < 1e-12


def test_speed_ctrl_integrates_persistent_error(params):
    sc = SpeedController(params, p_elec_0=0.5)
    prev = sc.step(1.01, 1.0, 1e-2)
    for _ in range(50):
        cur = sc.step(1.01, 1.0, 1e-2)
        assert cur > prev
        prev = cur


def test_speed_ctrl_command_stays_inside_converter_box(params):
    sc = SpeedController(params, p_elec_0=0.5)
    for _ in range(5000):
        cmd = sc.step(1.5, 1.0, 1e-2)
    assert cmd == params.pe_max
    for _ in range(10000):
        cmd = sc.step(0.2, 1.2, 1e-2)
    assert cmd == params.pe_min
