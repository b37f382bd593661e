"""Synthetic two-loop PWR transient generator.

Produces multichannel telemetry for a 1930 MWt pressurized water reactor
running at full power, either steady or under one of three injected
malfunctions: a steam generator tube rupture in loop A or B, or a locked
rotor on reactor coolant pump #1.  The model is a lumped surrogate, not a
thermal-hydraulics code: every channel relaxes from its steady value
toward a severity-scaled offset through a first-order lag,

    x(t) = x_ss + g * severity * (1 - exp(-(t - onset) / tau)),

with gains g and time constants tau chosen so the transient shapes match
the qualitative plant response (tube rupture depressurizes the primary
side and floods the faulted generator; a locked rotor cuts loop flow
within seconds and trips the reactor shortly after).  Gains are linear in
severity, so a 30% rupture is exactly twice the 15% trace before noise.

Measurement noise is Gaussian, proportional to each channel's steady
value, clipped at three sigma, and driven by a seeded generator so runs
are reproducible bit for bit.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, CorpusError, LabelError

# ---------------------------------------------------------------------------
# Channel catalogue
# ---------------------------------------------------------------------------

# Short labels follow plant computer conventions: suffix A/B is the loop,
# QM* heat rates, W* mass flows, L* levels, RH* radiation monitors.
CHANNELS: tuple[str, ...] = (
    "P",     # primary pressure, bar
    "TCA",   # cold leg temperature loop A, degC
    "TCB",   # cold leg temperature loop B, degC
    "THA",   # hot leg temperature loop A, degC
    "THB",   # hot leg temperature loop B, degC
    "QMWT",  # core thermal power, MW
    "QMGA",  # heat transferred to SG A, MW
    "QMGB",  # heat transferred to SG B, MW
    "NSGA",  # SG A narrow range level, %
    "NSGB",  # SG B narrow range level, %
    "WFWA",  # feedwater flow SG A, t/h
    "WFWB",  # feedwater flow SG B, t/h
    "VOL",   # primary coolant volume, m3
    "WRCA",  # loop A coolant flow, 10^3 m3/h
    "WRCB",  # loop B coolant flow, 10^3 m3/h
    "WSTA",  # steam flow SG A, t/h
    "WSTB",  # steam flow SG B, t/h
    "LSGA",  # SG A wide range level, m
    "LSGB",  # SG B wide range level, m
    "VOID",  # core void fraction, %
    "WEC",   # high pressure injection flow, t/h
    "LVPZ",  # pressurizer level, %
    "WTRA",  # tube rupture leak flow SG A, t/h
    "WTRB",  # tube rupture leak flow SG B, t/h
    "TAVG",  # average coolant temperature, degC
    "TF",    # peak fuel centerline temperature, degC
    "PSGA",  # SG A pressure, bar
    "PSGB",  # SG B pressure, bar
    "WSPY",  # pressurizer spray flow, t/h
    "HTR",   # pressurizer heater power, MW
    "PWR",   # nuclear power, % of rated
    "RBLK",  # rod motion block flag
    "DNBR",  # departure from nucleate boiling ratio
    "RHFL",  # containment floor radiation, mSv/h
    "RHMT",  # containment atmosphere radiation, mSv/h
    "RHRD",  # steam line radiation, mSv/h
    "HUP",   # upper plenum enthalpy, kJ/kg
    "HLW",   # letdown water enthalpy, kJ/kg
)

N_CHANNELS = len(CHANNELS)
CHANNEL_INDEX: dict[str, int] = {name: i for i, name in enumerate(CHANNELS)}

# Levels and void fractions are physically bounded; clamp after noise.
_PERCENT_BOUNDED = ("NSGA", "NSGB", "VOID", "LVPZ")
_NON_NEGATIVE = ("WTRA", "WTRB", "WEC", "WFWA", "WFWB", "WSTA", "WSTB",
                 "WSPY", "HTR", "RHFL", "RHMT", "RHRD")


class FaultKind(str, enum.Enum):
    """Supported malfunction classes."""

    NORMAL = "Normal"
    SGTR_A = "SgtrA"
    SGTR_B = "SgtrB"
    LOCKED_ROTOR_PUMP1 = "LockedRotorPump1"


# Diagnosis target encoding: location codes for the second network output.
LOCATION_CODES: dict[FaultKind, int] = {
    FaultKind.NORMAL: 0,
    FaultKind.SGTR_A: 1,
    FaultKind.SGTR_B: 2,
    FaultKind.LOCKED_ROTOR_PUMP1: 3,
}

LOCATION_NAMES: dict[int, str] = {
    0: "no fault",
    1: "steam generator A",
    2: "steam generator B",
    3: "coolant pump #1",
}


@dataclass(frozen=True)
class FaultLabel:
    """Regression target attached to every telemetry frame."""

    size_percent: float
    location_code: int

    def as_array(self) -> np.ndarray:
        return np.array([self.size_percent, float(self.location_code)])


def encode_label(kind: FaultKind, severity_percent: float) -> FaultLabel:
    """Map a malfunction to its (size, location) regression target."""
    if not 0.0 <= severity_percent <= 100.0:
        raise LabelError(
            f"severity must lie in [0, 100], got {severity_percent!r}")
    if kind is FaultKind.NORMAL:
        return FaultLabel(0.0, 0)
    return FaultLabel(float(severity_percent), LOCATION_CODES[kind])


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlantConfig:
    """Full-power operating point the transients start from.

    Defaults describe a two-loop 1930 MWt plant; see ``steady_state_values``
    for how the remaining channel baselines derive from these.
    """

    core_thermal_power_mw: float = 1930.0
    rcs_pressure_bar: float = 155.0
    coolant_avg_temp_c: float = 310.0
    loop_flow_m3h: float = 46640.0
    core_flow_th: float = 30530.0
    pressurizer_level_frac: float = 0.565
    hpi_setpoint_bar: float = 129.69
    charging_flow_th: float = 30.0

    def validate(self) -> None:
        if self.core_thermal_power_mw <= 0:
            raise ConfigurationError("core thermal power must be positive")
        if self.rcs_pressure_bar <= 0:
            raise ConfigurationError("RCS pressure must be positive")
        if not 0.0 < self.pressurizer_level_frac < 1.0:
            raise ConfigurationError(
                "pressurizer level fraction must lie in (0, 1)")
        if self.hpi_setpoint_bar >= self.rcs_pressure_bar:
            raise ConfigurationError(
                "HPI setpoint must sit below operating pressure")
        if self.loop_flow_m3h <= 0 or self.core_flow_th <= 0:
            raise ConfigurationError("flows must be positive")
        if self.charging_flow_th < 0:
            raise ConfigurationError("charging flow cannot be negative")


@dataclass(frozen=True)
class ScenarioSpec:
    """One simulated run: which fault, how big, when, and for how long."""

    fault_kind: FaultKind = FaultKind.NORMAL
    severity_percent: float = 0.0
    onset_time: float = 50.0
    duration_steps: int = 1000
    dt: float = 1.0
    noise_sigma: float = 0.01
    rng_seed: int = 0
    eccs_enabled: bool = False

    def validate(self) -> None:
        if self.fault_kind is FaultKind.NORMAL and self.severity_percent != 0.0:
            raise ConfigurationError(
                "a Normal scenario cannot carry a nonzero severity")
        if not 0.0 <= self.severity_percent <= 100.0:
            raise ConfigurationError("severity must lie in [0, 100]")
        if self.onset_time < 0:
            raise ConfigurationError("onset_time cannot be negative")
        if self.duration_steps < 1:
            raise ConfigurationError("duration_steps must be at least 1")
        if self.dt <= 0:
            raise ConfigurationError("dt must be positive")
        if self.noise_sigma < 0:
            raise ConfigurationError("noise_sigma cannot be negative")

    def label(self) -> FaultLabel:
        return encode_label(self.fault_kind, self.severity_percent)

    def to_json(self) -> dict:
        return {
            "fault_kind": self.fault_kind.value,
            "severity_percent": self.severity_percent,
            "onset_time": self.onset_time,
            "duration_steps": self.duration_steps,
            "dt": self.dt,
            "noise_sigma": self.noise_sigma,
            "rng_seed": self.rng_seed,
            "eccs_enabled": self.eccs_enabled,
        }

    @classmethod
    def from_json(cls, payload: dict) -> "ScenarioSpec":
        if not isinstance(payload, dict):
            raise ConfigurationError("scenario document must be a JSON object")
        known = {
            "fault_kind", "severity_percent", "onset_time", "duration_steps",
            "dt", "noise_sigma", "rng_seed", "eccs_enabled",
        }
        unknown = set(payload) - known
        if unknown:
            raise ConfigurationError(
                f"unknown scenario fields: {sorted(unknown)}")
        kwargs = dict(payload)
        if "fault_kind" in kwargs:
            raw = kwargs["fault_kind"]
            try:
                kwargs["fault_kind"] = FaultKind(raw)
            except ValueError:
                raise ConfigurationError(f"unknown fault_kind {raw!r}") from None
        spec = cls(**kwargs)
        spec.validate()
        return spec


def load_scenario(path: str | Path) -> ScenarioSpec:
    with open(path, encoding="utf-8") as fh:
        return ScenarioSpec.from_json(json.load(fh))


def save_scenario(spec: ScenarioSpec, path: str | Path) -> None:
    spec.validate()
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(spec.to_json(), fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Steady state
# ---------------------------------------------------------------------------

def steady_state_values(config: PlantConfig | None = None) -> np.ndarray:
    """Channel baselines at full power, derived from the operating point."""
    cfg = config or PlantConfig()
    cfg.validate()

    half_power = cfg.core_thermal_power_mw / 2.0
    # 34 degC core rise split evenly about T-avg.
    t_cold = cfg.coolant_avg_temp_c - 17.0
    t_hot = cfg.coolant_avg_temp_c + 17.0
    # Steam and feed match at steady state; each SG boils off the same
    # share of the secondary inventory.
    sg_flow = 1880.0

    v = np.zeros(N_CHANNELS)

    def put(name: str, value: float) -> None:
        v[CHANNEL_INDEX[name]] = value

    put("P", cfg.rcs_pressure_bar)
    put("TCA", t_cold)
    put("TCB", t_cold)
    put("THA", t_hot)
    put("THB", t_hot)
    put("QMWT", cfg.core_thermal_power_mw)
    put("QMGA", half_power)
    put("QMGB", half_power)
    put("NSGA", 50.0)
    put("NSGB", 50.0)
    put("WFWA", sg_flow)
    put("WFWB", sg_flow)
    put("VOL", 140.0)
    put("WRCA", cfg.loop_flow_m3h / 1000.0)
    put("WRCB", cfg.loop_flow_m3h / 1000.0)
    put("WSTA", sg_flow)
    put("WSTB", sg_flow)
    put("LSGA", 12.5)
    put("LSGB", 12.5)
    put("VOID", 0.0)
    put("WEC", 0.0)
    put("LVPZ", cfg.pressurizer_level_frac * 100.0)
    put("WTRA", 0.0)
    put("WTRB", 0.0)
    put("TAVG", cfg.coolant_avg_temp_c)
    put("TF", 620.0)
    put("PSGA", 60.0)
    put("PSGB", 60.0)
    put("WSPY", 2.0)
    put("HTR", 1.0)
    put("PWR", 100.0)
    put("RBLK", 0.0)
    put("DNBR", 2.0)
    put("RHFL", 0.0)
    put("RHMT", 0.0)
    put("RHRD", 0.0)
    put("HUP", 2610.0)
    put("HLW", 1300.0)
    return v


# ---------------------------------------------------------------------------
# Fault response tables
# ---------------------------------------------------------------------------
#
# Each entry: channel -> (delta per % severity, time constant s, start delay s).
# Gains carry the transient's physical signature: which way each channel
# moves, how far per percent of severity, and how fast.

_TAU_THERMAL = 60.0   # bulk thermal response
_TAU_FLOW = 10.0      # hydraulic response
_TAU_BREAK = 1.0      # orifice-limited break and radiation transport
_TRIP_DELAY_S = 10.0  # locked rotor: low-flow trip fires this long after onset
_ECCS_TAU_S = 10.0    # HPI flow ramp
_ECCS_FLOW_PER_PCT = 0.9  # t/h of injection per % severity


def _sgtr_response(loop: str) -> dict[str, tuple[float, float, float]]:
    """Tube rupture gain table for loop ``'A'`` or ``'B'``."""
    x = loop
    table = {
        # Faulted loop: the break flow is orifice-limited and appears
        # almost as a step; the generator floods, feedwater control cuts
        # back, steam flow and pressure creep up over minutes.
        f"WTR{x}": (0.50, _TAU_BREAK, 0.0),
        f"QMG{x}": (3.0, _TAU_THERMAL, 0.0),
        f"WFW{x}": (-4.0, _TAU_FLOW, 0.0),
        f"NSG{x}": (0.15, _TAU_THERMAL, 0.0),
        f"WST{x}": (2.5, _TAU_FLOW, 0.0),
        f"PSG{x}": (0.12, _TAU_THERMAL, 0.0),
        f"LSG{x}": (0.03, _TAU_THERMAL, 0.0),
        f"TC{x}": (-0.12, _TAU_THERMAL, 0.0),
        f"TH{x}": (-0.08, _TAU_THERMAL, 0.0),
        # Plant-wide: inventory loss drains the pressurizer and
        # depressurizes the primary side; activity reaches the steam line.
        "P": (-0.50, _TAU_THERMAL, 0.0),
        "LVPZ": (-0.20, _TAU_THERMAL, 0.0),
        "VOL": (-0.15, 240.0, 0.0),
        "TAVG": (-0.10, _TAU_THERMAL, 0.0),
        "TF": (-0.30, _TAU_THERMAL, 0.0),
        "QMWT": (1.0, _TAU_THERMAL, 0.0),
        "PWR": (0.05, _TAU_THERMAL, 0.0),
        "DNBR": (-0.004, _TAU_THERMAL, 0.0),
        "RHMT": (0.004, _TAU_THERMAL, 0.0),
        "RHFL": (0.002, _TAU_THERMAL, 0.0),
        "RHRD": (0.005, _TAU_BREAK, 0.0),
        "HUP": (-1.5, _TAU_THERMAL, 0.0),
        "HLW": (3.0, _TAU_FLOW, 0.0),
        "WSPY": (0.03, _TAU_FLOW, 0.0),
        "HTR": (0.02, _TAU_THERMAL, 0.0),
    }
    return table


def _locked_rotor_response(steady: np.ndarray) -> list[tuple[str, float, float, float]]:
    """Two-phase gain list for a seized pump #1 rotor.

    Phase one starts at onset: loop A flow collapses on the pump
    coastdown timescale while power and pressure spike.  Phase two is
    the low-flow reactor trip ten seconds later: power, heat rates and
    steam demand all run back toward decay-heat levels.
    """
    wrca_ss = steady[CHANNEL_INDEX["WRCA"]]
    rows = [
        # phase 1: flow loss and the prompt excursion
        ("WRCA", -0.009 * wrca_ss, 1.5, 0.0),
        ("WRCB", 0.05, 5.0, 0.0),
        ("P", 0.08, 4.0, 0.0),
        ("PWR", 0.05, 4.0, 0.0),
        ("QMWT", 0.9, 4.0, 0.0),
        ("TF", 0.5, 6.0, 0.0),
        ("THA", 0.05, 6.0, 0.0),
        ("TCA", 0.03, 6.0, 0.0),
        ("TAVG", 0.02, 6.0, 0.0),
        ("DNBR", -0.008, 4.0, 0.0),
        ("QMGA", -1.0, 6.0, 0.0),
        ("WSTA", -1.0, 6.0, 0.0),
        ("NSGA", 0.05, 10.0, 0.0),
        ("PSGA", -0.10, 6.0, 0.0),
        ("WSPY", 0.10, 2.0, 0.0),
        ("LVPZ", 0.04, 4.0, 0.0),
        ("RHMT", -0.002, 6.0, 0.0),
        ("RHFL", -0.003, 6.0, 0.0),
        # phase 2: trip and runback
        ("PWR", -0.98, 15.0, _TRIP_DELAY_S),
        ("QMWT", -18.85, 15.0, _TRIP_DELAY_S),
        ("P", -0.28, 30.0, _TRIP_DELAY_S),
        ("TAVG", -0.17, 40.0, _TRIP_DELAY_S),
        ("TCA", -0.13, 40.0, _TRIP_DELAY_S),
        ("TCB", -0.10, 40.0, _TRIP_DELAY_S),
        ("THA", -0.32, 40.0, _TRIP_DELAY_S),
        ("THB", -0.27, 40.0, _TRIP_DELAY_S),
        ("TF", -2.5, 30.0, _TRIP_DELAY_S),
        ("WSTA", -15.92, 8.0, _TRIP_DELAY_S),
        ("WSTB", -16.92, 8.0, _TRIP_DELAY_S),
        ("WFWA", -16.92, 10.0, _TRIP_DELAY_S),
        ("WFWB", -16.92, 10.0, _TRIP_DELAY_S),
        ("QMGA", -7.95, 20.0, _TRIP_DELAY_S),
        ("QMGB", -8.95, 20.0, _TRIP_DELAY_S),
        ("NSGA", -0.15, 30.0, _TRIP_DELAY_S),
        ("NSGB", -0.10, 30.0, _TRIP_DELAY_S),
        ("PSGA", 0.18, 10.0, _TRIP_DELAY_S),
        ("PSGB", 0.08, 10.0, _TRIP_DELAY_S),
        ("DNBR", 0.023, 20.0, _TRIP_DELAY_S),
        ("RBLK", 0.01, 0.5, _TRIP_DELAY_S),
        ("RHRD", -0.002, 2.0, _TRIP_DELAY_S),
        ("RHFL", 0.008, 30.0, _TRIP_DELAY_S),
        ("RHMT", 0.007, 40.0, _TRIP_DELAY_S),
        ("LVPZ", -0.28, 30.0, _TRIP_DELAY_S),
        ("VOL", -0.05, 60.0, _TRIP_DELAY_S),
        ("HUP", -1.0, 30.0, _TRIP_DELAY_S),
        ("HTR", 0.02, 20.0, _TRIP_DELAY_S),
        ("WSPY", -0.10, 10.0, _TRIP_DELAY_S),
        ("LSGA", -0.02, 30.0, _TRIP_DELAY_S),
        ("LSGB", -0.02, 30.0, _TRIP_DELAY_S),
    ]
    return rows


def _fault_terms(spec: ScenarioSpec,
                 steady: np.ndarray) -> list[tuple[int, float, float, float]]:
    """Flatten the gain table into (channel index, delta, tau, delay) rows."""
    kind = spec.fault_kind
    if kind is FaultKind.NORMAL:
        return []
    sev = spec.severity_percent
    if kind in (FaultKind.SGTR_A, FaultKind.SGTR_B):
        loop = "A" if kind is FaultKind.SGTR_A else "B"
        table = _sgtr_response(loop)
        return [(CHANNEL_INDEX[ch], gain * sev, tau, delay)
                for ch, (gain, tau, delay) in table.items()]
    rows = _locked_rotor_response(steady)
    return [(CHANNEL_INDEX[ch], gain * sev, tau, delay)
            for ch, gain, tau, delay in rows]


def _deviation_matrix(spec: ScenarioSpec, steady: np.ndarray,
                      times: np.ndarray) -> np.ndarray:
    """Noise-free channel offsets from steady state at each time."""
    dev = np.zeros((times.size, N_CHANNELS))
    terms = _fault_terms(spec, steady)
    if not terms:
        return dev
    for idx, delta, tau, delay in terms:
        t_rel = times - (spec.onset_time + delay)
        active = t_rel > 0
        if not np.any(active):
            continue
        dev[active, idx] += delta * (1.0 - np.exp(-t_rel[active] / tau))
    return dev


def _apply_eccs(spec: ScenarioSpec, steady: np.ndarray, times: np.ndarray,
                dev: np.ndarray, eccs_start: float | None,
                setpoint: float) -> float | None:
    """Overlay HPI actuation: injection flow ramps, inventory loss stops.

    Returns the actuation time (first sample where noise-free pressure
    sits below the setpoint), or None if never reached.  ``dev`` is
    edited in place.
    """
    if not spec.eccs_enabled:
        return None
    p_idx = CHANNEL_INDEX["P"]
    if eccs_start is None:
        p_true = steady[p_idx] + dev[:, p_idx]
        below = np.nonzero(p_true < setpoint)[0]
        if below.size == 0:
            return None
        eccs_start = float(times[below[0]])
    after = times >= eccs_start
    if not np.any(after):
        return eccs_start
    wec_idx = CHANNEL_INDEX["WEC"]
    vol_idx = CHANNEL_INDEX["VOL"]
    ramp = 1.0 - np.exp(-(times[after] - eccs_start) / _ECCS_TAU_S)
    dev[after, wec_idx] = _ECCS_FLOW_PER_PCT * spec.severity_percent * ramp
    # Makeup water arrests the inventory decline at its actuation value.
    vol_terms = [(i, d, tau, dl) for i, d, tau, dl in
                 _fault_terms(spec, steady) if i == vol_idx]
    frozen = 0.0
    for _, delta, tau, delay in vol_terms:
        t_rel = eccs_start - (spec.onset_time + delay)
        if t_rel > 0:
            frozen += delta * (1.0 - math.exp(-t_rel / tau))
    dev[after, vol_idx] = frozen
    return eccs_start


def _finish_frames(steady: np.ndarray, dev: np.ndarray,
                   draws: np.ndarray, noise_sigma: float) -> np.ndarray:
    """Add clipped proportional noise and clamp physical bounds."""
    sigma = noise_sigma * np.abs(steady)
    values = steady + dev + np.clip(draws, -3.0, 3.0) * sigma
    for name in _PERCENT_BOUNDED:
        i = CHANNEL_INDEX[name]
        values[..., i] = np.clip(values[..., i], 0.0, 100.0)
    for name in _NON_NEGATIVE:
        i = CHANNEL_INDEX[name]
        values[..., i] = np.maximum(values[..., i], 0.0)
    return values


# ---------------------------------------------------------------------------
# Stepping and batch simulation
# ---------------------------------------------------------------------------

@dataclass
class PlantState:
    """Mutable-in-spirit snapshot used by the stepping interface."""

    time: float
    values: np.ndarray
    steady: np.ndarray
    hpi_setpoint: float
    eccs_start: float | None = None


def init_steady_state(config: PlantConfig | None = None) -> PlantState:
    cfg = config or PlantConfig()
    steady = steady_state_values(cfg)
    return PlantState(time=0.0, values=steady.copy(), steady=steady,
                      hpi_setpoint=cfg.hpi_setpoint_bar)


def step(state: PlantState, spec: ScenarioSpec,
         rng: np.random.Generator) -> PlantState:
    """Advance one dt, drawing this frame's noise from ``rng``.

    Consumes exactly one row of standard normals per call, so a loop of
    ``step`` reproduces ``run_scenario`` frame for frame when both start
    from the same seed.
    """
    spec.validate()
    t_new = state.time + spec.dt
    times = np.array([t_new])
    dev = _deviation_matrix(spec, state.steady, times)
    eccs_start = state.eccs_start
    if spec.eccs_enabled:
        eccs_start = _apply_eccs(spec, state.steady, times, dev, eccs_start,
                                 state.hpi_setpoint)
    draws = rng.standard_normal(N_CHANNELS)
    values = _finish_frames(state.steady, dev[0], draws, spec.noise_sigma)
    return PlantState(time=t_new, values=values, steady=state.steady,
                      hpi_setpoint=state.hpi_setpoint, eccs_start=eccs_start)


@dataclass
class TransientRecord:
    """One simulated run: times, channel matrix, and the frame label."""

    scenario: ScenarioSpec
    times: np.ndarray          # (n,)
    values: np.ndarray         # (n, N_CHANNELS)
    label: FaultLabel

    @property
    def n_frames(self) -> int:
        return int(self.times.size)

    def channel(self, name: str) -> np.ndarray:
        return self.values[:, CHANNEL_INDEX[name]]


def run_scenario(spec: ScenarioSpec,
                 config: PlantConfig | None = None) -> TransientRecord:
    """Simulate a whole scenario in one vectorized pass.

    Frames sit at t = dt, 2*dt, ..., duration_steps*dt, the states a
    stepping loop would visit starting from the steady initial state.
    """
    spec.validate()
    cfg = config or PlantConfig()
    steady = steady_state_values(cfg)
    n = spec.duration_steps
    times = spec.dt * np.arange(1, n + 1)
    dev = _deviation_matrix(spec, steady, times)
    _apply_eccs(spec, steady, times, dev, None, cfg.hpi_setpoint_bar)
    rng = np.random.default_rng(spec.rng_seed)
    draws = rng.standard_normal((n, N_CHANNELS))
    values = _finish_frames(steady, dev, draws, spec.noise_sigma)
    return TransientRecord(scenario=spec, times=times, values=values,
                           label=spec.label())


# ---------------------------------------------------------------------------
# Labelled corpora
# ---------------------------------------------------------------------------

@dataclass
class LabeledDataset:
    """Frame-level training table: features plus regression targets."""

    channel_order: tuple[str, ...]
    times: np.ndarray        # (n,)
    features: np.ndarray     # (n, n_channels)
    label_size: np.ndarray   # (n,)
    label_loc: np.ndarray    # (n,)
    scenario_ids: np.ndarray  # (n,) which source run each frame came from

    @property
    def n_rows(self) -> int:
        return int(self.features.shape[0])

    def targets(self) -> np.ndarray:
        return np.column_stack([self.label_size, self.label_loc])

    def subset(self, idx: np.ndarray) -> "LabeledDataset":
        return LabeledDataset(
            channel_order=self.channel_order,
            times=self.times[idx],
            features=self.features[idx],
            label_size=self.label_size[idx],
            label_loc=self.label_loc[idx],
            scenario_ids=self.scenario_ids[idx],
        )


def generate_corpus(scenarios: Sequence[ScenarioSpec],
                    config: PlantConfig | None = None) -> LabeledDataset:
    """Run every scenario and stack the labelled frames."""
    if not scenarios:
        raise CorpusError("corpus needs at least one scenario")
    records = [run_scenario(s, config) for s in scenarios]
    times = np.concatenate([r.times for r in records])
    features = np.vstack([r.values for r in records])
    sizes = np.concatenate([
        np.full(r.n_frames, r.label.size_percent) for r in records])
    locs = np.concatenate([
        np.full(r.n_frames, float(r.label.location_code)) for r in records])
    ids = np.concatenate([
        np.full(r.n_frames, i) for i, r in enumerate(records)])
    return LabeledDataset(channel_order=CHANNELS, times=times,
                          features=features, label_size=sizes,
                          label_loc=locs, scenario_ids=ids)


def reference_scenarios(noise_sigma: float = 0.01,
                        base_seed: int = 101) -> list[ScenarioSpec]:
    """The six-run training set the diagnoser defaults are tuned on.

    Normal operation, tube ruptures at 15/30/45% (alternating loops), a
    60% loop B rupture with safety injection, and a full locked rotor.
    Faults start at t=0 so every frame carries its label honestly; run
    lengths are trimmed to land the stacked corpus on 5446 frames.
    """
    mk = lambda i, kind, sev, steps, eccs=False: ScenarioSpec(
        fault_kind=kind, severity_percent=sev, onset_time=0.0,
        duration_steps=steps, dt=1.0, noise_sigma=noise_sigma,
        rng_seed=base_seed + i, eccs_enabled=eccs)
    return [
        mk(0, FaultKind.NORMAL, 0.0, 908),
        mk(1, FaultKind.SGTR_A, 15.0, 908),
        mk(2, FaultKind.SGTR_B, 30.0, 908),
        mk(3, FaultKind.SGTR_A, 45.0, 908),
        mk(4, FaultKind.SGTR_B, 60.0, 907, eccs=True),
        mk(5, FaultKind.LOCKED_ROTOR_PUMP1, 100.0, 907),
    ]


def reference_corpus(noise_sigma: float = 0.01,
                     base_seed: int = 101,
                     config: PlantConfig | None = None) -> LabeledDataset:
    return generate_corpus(reference_scenarios(noise_sigma, base_seed), config)


SWEEP_SEVERITIES: tuple[float, ...] = (
    10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 45.0, 55.0, 60.0, 65.0)


def sweep_scenarios(severities: Sequence[float] = SWEEP_SEVERITIES,
                    noise_sigma: float = 0.01,
                    base_seed: int = 301,
                    duration_steps: int = 600) -> list[ScenarioSpec]:
    """Dense severity coverage for decision-grade training.

    The six-run reference set leaves 15-point holes between trained
    rupture sizes, and a kernel regressor plateaus inside holes that
    wide.  This sweep runs both loops across a finer grid (plus normal
    operation, a safety-injection case and the locked rotor) so size
    estimates interpolate to fractions of a point anywhere in range.
    """
    runs = [ScenarioSpec(onset_time=0.0, duration_steps=duration_steps,
                         noise_sigma=noise_sigma, rng_seed=base_seed)]
    i = 1
    for sev in severities:
        for kind in (FaultKind.SGTR_A, FaultKind.SGTR_B):
            runs.append(ScenarioSpec(
                fault_kind=kind, severity_percent=float(sev), onset_time=0.0,
                duration_steps=duration_steps, noise_sigma=noise_sigma,
                rng_seed=base_seed + i))
            i += 1
    runs.append(ScenarioSpec(
        fault_kind=FaultKind.SGTR_B, severity_percent=60.0, onset_time=0.0,
        duration_steps=duration_steps, noise_sigma=noise_sigma,
        rng_seed=base_seed + i, eccs_enabled=True))
    runs.append(ScenarioSpec(
        fault_kind=FaultKind.LOCKED_ROTOR_PUMP1, severity_percent=100.0,
        onset_time=0.0, duration_steps=duration_steps,
        noise_sigma=noise_sigma, rng_seed=base_seed + i + 1))
    return runs


def sweep_corpus(noise_sigma: float = 0.01, base_seed: int = 301,
                 config: PlantConfig | None = None) -> LabeledDataset:
    return generate_corpus(sweep_scenarios(noise_sigma=noise_sigma,
                                           base_seed=base_seed), config)


# ---------------------------------------------------------------------------
# CSV round trip
# ---------------------------------------------------------------------------
#
# Plain-text interchange format: one row per frame, shortest-repr floats
# so a reseeded run reproduces the file byte for byte.

_LABEL_COLUMNS = ("label_size", "label_loc")


def _fmt(x: float) -> str:
    return repr(float(x))


def write_corpus_csv(dataset: LabeledDataset, path: str | Path) -> None:
    header = ["time", *dataset.channel_order, *_LABEL_COLUMNS]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(dataset.n_rows):
            row = [_fmt(dataset.times[i])]
            row.extend(_fmt(x) for x in dataset.features[i])
            row.append(_fmt(dataset.label_size[i]))
            row.append(_fmt(dataset.label_loc[i]))
            writer.writerow(row)


def read_corpus_csv(path: str | Path) -> LabeledDataset:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CorpusError(f"{path}: empty csv") from None
        rows = [row for row in reader if row]
    if len(header) < 4 or header[0] != "time":
        raise CorpusError(f"{path}: malformed header")
    if tuple(header[-2:]) != _LABEL_COLUMNS:
        raise CorpusError(f"{path}: label columns missing")
    channels = tuple(header[1:-2])
    data = np.array([[float(x) for x in row] for row in rows])
    if data.size == 0:
        raise CorpusError(f"{path}: no data rows")
    if data.shape[1] != len(header):
        raise CorpusError(f"{path}: ragged rows")
    times = data[:, 0]
    features = data[:, 1:-2]
    label_size = data[:, -2]
    label_loc = data[:, -1]
    # Time restarts mark run boundaries; recover per-frame run ids.
    ids = np.zeros(times.size, dtype=int)
    run = 0
    for i in range(1, times.size):
        if times[i] <= times[i - 1]:
            run += 1
        ids[i] = run
    return LabeledDataset(channel_order=channels, times=times,
                          features=features, label_size=label_size,
                          label_loc=label_loc, scenario_ids=ids)


def write_record_csv(record: TransientRecord, path: str | Path) -> None:
    """Write a single run with its constant label columns."""
    ds = LabeledDataset(
        channel_order=CHANNELS,
        times=record.times,
        features=record.values,
        label_size=np.full(record.n_frames, record.label.size_percent),
        label_loc=np.full(record.n_frames, float(record.label.location_code)),
        scenario_ids=np.zeros(record.n_frames, dtype=int),
    )
    write_corpus_csv(ds, path)
