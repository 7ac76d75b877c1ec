"""Turbine model parameters, scenario definitions, and the flat config format.

The defaults describe a GE 3.6 MW class variable-speed machine.  All powers
are per-unit on ``s_base``; speeds are per-unit on the rotor base speed.
``TurbineParams`` is frozen after construction and safe to share between
concurrent simulation runs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

__all__ = [
    "CpCoefficients",
    "TurbineParams",
    "Scenario",
    "ConfigError",
    "load_params",
    "load_config",
    "serialize_params",
    "validate",
]

# Power-coefficient polynomial Cp(lambda, beta) = sum alpha[i][j] beta^i lam^j,
# beta in degrees.  Row index i is the beta exponent, column j the lambda
# exponent.  Entry (2,1) is -1.10e-2: the widely circulated 3-digit table
# carries a digit-transposed -1.01e-2 there, which makes the surface blow up
# past the Betz limit at high pitch; the value below matches the full-precision
# source coefficient (-1.0996e-2) at the same 3-digit rounding.
_DEFAULT_ALPHA = (
    (-4.19e-1, 2.18e-1, -1.24e-2, -1.34e-4, 1.15e-5),
    (-6.76e-2, 6.04e-2, -1.39e-2, 1.07e-3, -2.39e-5),
    (1.57e-2, -1.10e-2, 2.15e-3, -1.49e-4, 2.79e-6),
    (-8.60e-4, 5.71e-4, -1.05e-4, 5.99e-6, -8.91e-8),
    (1.48e-5, -9.48e-6, 1.62e-6, -7.15e-8, 4.97e-10),
)

# Tip-speed-ratio constant (rotor base speed x rotor radius, m).  No published
# value exists for this aggregate; the default is calibrated so that the
# quadratic speed-reference law coincides with the maximum-power locus of the
# default Cp surface at the law's hand-over power (0.75 pu):
#   k_tsr = lam_opt * v(0.75) / omega_ref(0.75-)
# with v(p) = (p / (k_rotor * cp_opt))**(1/3).  See curves.calibrate_k_tsr,
# which reproduces this number.
_DEFAULT_K_TSR = 73.46026237415981


class ConfigError(ValueError):
    """Raised for malformed config text or invalid parameter values."""


@dataclass(frozen=True)
class CpCoefficients:
    """5x5 coefficient matrix of the power-coefficient polynomial."""

    alpha: tuple = _DEFAULT_ALPHA

    def flat(self) -> list:
        return [self.alpha[i][j] for i in range(5) for j in range(5)]

    @staticmethod
    def from_flat(values) -> "CpCoefficients":
        vals = [float(v) for v in values]
        if len(vals) != 25:
            raise ConfigError(f"cp_coeffs needs 25 values, got {len(vals)}")
        return CpCoefficients(tuple(tuple(vals[5 * i : 5 * i + 5]) for i in range(5)))


@dataclass(frozen=True)
class TurbineParams:
    """Complete numeric description of the turbine model.

    Units: powers pu on s_base, speeds pu, pitch deg, time constants s,
    inertia constants s, wind m/s.  ``v_wt`` (terminal voltage, pu) is carried
    for table fidelity but drives nothing.
    """

    s_base: float = 3.6e6          # rated apparent power, W
    k_rotor: float = 0.00145       # aerodynamic constant, pu.s^3/m^3
    k_tsr: float = _DEFAULT_K_TSR  # tip-speed-ratio constant, m (calibrated)
    cp_coeffs: CpCoefficients = field(default_factory=CpCoefficients)
    v_cut_in: float = 4.0
    v_cut_out: float = 25.0
    omega_ref_max: float = 1.2     # pu, reference speed above p_ef_threshold
    p_ef_threshold: float = 0.75   # pu, hand-over power of the reference law
    kpp: float = 150.0             # pitch speed-error PI
    kip: float = 25.0
    kpc: float = 3.0               # pitch compensation PI
    kic: float = 30.0
    t_pi: float = 0.01             # pitch servo lag, s
    beta_min: float = 0.0
    beta_max: float = 27.0
    dbeta_rate: float = 10.0       # deg/s, symmetric
    kpt: float = 3.0               # speed (torque) PI
    kit: float = 0.6
    t_con: float = 0.02            # converter lag, s
    t_f: float = 5.0               # power measurement lag, s
    t_pc: float = 0.05             # compensation input lag, s
    pe_min: float = 0.1
    pe_max: float = 1.0
    dpe_rate: float = 0.45         # pu/s, symmetric
    p_max: float = 1.0
    v_wt: float = 1.0              # pu, inert
    h_wt_1m: float = 5.19          # one-mass inertia constant, s
    h_wt_2m: float = 4.29          # two-mass rotor-side inertia, s
    h_g_2m: float = 0.90           # two-mass generator inertia, s
    d_shaft: float = 1.5           # pu torsional damping
    k_shaft: float = 296.7         # pu torsional stiffness
    omega0_2m: float = 1.335       # twist-rate base of the two-mass model
    t_pi_bypass: bool = False      # replace the pitch servo lag by direct tracking
    t_pc_bypass: bool = False      # feed the compensation PI with unfiltered power


@dataclass(frozen=True)
class Scenario:
    """One simulation run: wind profile, horizon, step, drivetrain model."""

    wind_profile: tuple = ((0.0, 10.0),)  # (t s, v m/s) breakpoints
    duration: float = 150.0
    dt: float = 1e-3
    model: str = "one-mass"  # "one-mass" | "two-mass"

    def initial_wind(self) -> float:
        return self.wind_profile[0][1] if self.wind_profile[0][0] <= 0.0 else self.wind_profile[0][1]


_POSITIVE_FIELDS = (
    "s_base", "k_rotor", "k_tsr", "t_pi", "t_con", "t_f", "t_pc",
    "h_wt_1m", "h_wt_2m", "h_g_2m", "k_shaft", "omega0_2m",
    "dbeta_rate", "dpe_rate", "p_max",
)
_ORDERED_PAIRS = (
    ("beta_min", "beta_max"),
    ("pe_min", "pe_max"),
    ("v_cut_in", "v_cut_out"),
)


def validate(p: TurbineParams) -> list:
    """Return every violated invariant as a ``(field, message)`` pair.

    An empty list means the parameter set is valid.  All violations are
    collected, not only the first.
    """
    out = []
    for name in _POSITIVE_FIELDS:
        v = getattr(p, name)
        if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0.0):
            out.append((name, f"{name} must be strictly positive, got {v!r}"))
    if not (isinstance(p.d_shaft, (int, float)) and math.isfinite(p.d_shaft) and p.d_shaft >= 0.0):
        out.append(("d_shaft", f"d_shaft must be nonnegative, got {p.d_shaft!r}"))
    for lo, hi in _ORDERED_PAIRS:
        vlo, vhi = getattr(p, lo), getattr(p, hi)
        if not (math.isfinite(vlo) and math.isfinite(vhi) and vlo < vhi):
            out.append((lo, f"{lo} < {hi} violated: {vlo!r} vs {vhi!r}"))
    alpha = p.cp_coeffs.alpha
    n = sum(len(row) for row in alpha) if len(alpha) == 5 else -1
    if n != 25 or any(len(row) != 5 for row in alpha):
        out.append(("cp_coeffs", "cp_coeffs must hold exactly 25 entries"))
    elif not all(math.isfinite(alpha[i][j]) for i in range(5) for j in range(5)):
        out.append(("cp_coeffs", "cp_coeffs entries must all be finite"))
    for name in ("omega_ref_max", "p_ef_threshold", "v_wt"):
        v = getattr(p, name)
        if not (isinstance(v, (int, float)) and math.isfinite(v)):
            out.append((name, f"{name} must be finite, got {v!r}"))
    return out


def validate_scenario(s: Scenario) -> list:
    """Collect scenario invariant violations, mirroring :func:`validate`."""
    out = []
    if not (math.isfinite(s.dt) and s.dt > 0.0):
        out.append(("dt", f"dt must be > 0, got {s.dt!r}"))
    if not (math.isfinite(s.duration) and s.duration >= s.dt):
        out.append(("duration", f"duration must be >= dt, got {s.duration!r}"))
    times = [t for t, _ in s.wind_profile]
    winds = [v for _, v in s.wind_profile]
    if not times:
        out.append(("wind_profile", "wind_profile needs at least one breakpoint"))
    if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
        out.append(("wind_profile", "breakpoint times must be strictly increasing"))
    if not all(math.isfinite(v) and 0.0 <= v <= 40.0 for v in winds):
        out.append(("wind_profile", "wind speeds must lie within [0, 40] m/s"))
    if s.model not in ("one-mass", "two-mass"):
        out.append(("model", f"model must be 'one-mass' or 'two-mass', got {s.model!r}"))
    return out


_SCENARIO_KEYS = ("wind_profile", "duration", "dt", "model")
_BOOL_KEYS = ("t_pi_bypass", "t_pc_bypass")


def _parse_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        yield lineno, key.strip(), value.strip()


def _parse_float(lineno: int, key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"line {lineno}: key {key}: not a number: {value!r}") from None


def _parse_profile(lineno: int, value: str) -> tuple:
    pts = []
    for chunk in value.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":" not in chunk:
            raise ConfigError(f"line {lineno}: key wind_profile: expected 't:v', got {chunk!r}")
        ts, _, vs = chunk.partition(":")
        pts.append((_parse_float(lineno, "wind_profile", ts.strip()),
                    _parse_float(lineno, "wind_profile", vs.strip())))
    if not pts:
        raise ConfigError(f"line {lineno}: key wind_profile: empty profile")
    return tuple(pts)


def load_config(text: str) -> tuple:
    """Parse flat ``key = value`` config text into ``(TurbineParams, Scenario)``.

    Missing keys take the defaults; unknown keys are rejected with their line
    number.  Parameter values are validated; scenario values are validated.
    """
    param_names = {f.name for f in fields(TurbineParams)}
    p_over: dict = {}
    s_over: dict = {}
    for lineno, key, value in _parse_lines(text):
        if key == "cp_coeffs":
            parts = [c for c in value.replace(",", " ").split() if c]
            p_over[key] = CpCoefficients.from_flat(
                [_parse_float(lineno, key, c) for c in parts]
            )
        elif key in _BOOL_KEYS:
            low = value.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ConfigError(f"line {lineno}: key {key}: expected a boolean, got {value!r}")
            p_over[key] = low in ("true", "1", "yes")
        elif key in param_names:
            p_over[key] = _parse_float(lineno, key, value)
        elif key == "wind_profile":
            s_over[key] = _parse_profile(lineno, value)
        elif key == "model":
            s_over[key] = value
        elif key in _SCENARIO_KEYS:
            s_over[key] = _parse_float(lineno, key, value)
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
    params = TurbineParams(**p_over)
    violations = validate(params)
    if violations:
        msg = "; ".join(m for _, m in violations)
        raise ConfigError(f"invalid parameters: {msg}")
    scenario = Scenario(**s_over)
    s_violations = validate_scenario(scenario)
    if s_violations:
        msg = "; ".join(m for _, m in s_violations)
        raise ConfigError(f"invalid scenario: {msg}")
    return params, scenario


def load_params(text: str) -> TurbineParams:
    """Parse config text, returning only the turbine parameter set."""
    return load_config(text)[0]


def serialize_params(p: TurbineParams) -> str:
    """Write a params object back to config text (round-trips via load_params)."""
    lines = []
    for f in fields(TurbineParams):
        v = getattr(p, f.name)
        if f.name == "cp_coeffs":
            lines.append("cp_coeffs = " + ", ".join(repr(x) for x in v.flat()))
        elif isinstance(v, bool):
            lines.append(f"{f.name} = {'true' if v else 'false'}")
        else:
            lines.append(f"{f.name} = {v!r}")
    return "\n".join(lines) + "\n"


def with_overrides(p: TurbineParams, **kwargs) -> TurbineParams:
    """Return a copy with fields replaced and the result re-validated."""
    q = replace(p, **kwargs)
    violations = validate(q)
    if violations:
        raise ConfigError("; ".join(m for _, m in violations))
    return q
