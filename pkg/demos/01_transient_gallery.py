"""
A gallery of simulated two-loop transients
==========================================

One run per fault family, printed as snapshot tables.  Every channel
relaxes toward a severity scaled offset with a first order lag, so the
interesting part is which channels move, how fast, and on which loop.
"""

import numpy as np

from pwrdiag.plantsim import (
    CHANNELS, FaultKind, ScenarioSpec, run_scenario, steady_state_values)

# A hand picked set of channels that carries most of the story.
WATCH = ("P", "LVPZ", "WTRA", "WTRB", "NSGA", "NSGB", "PSGA", "PSGB",
         "WRCA", "PWR", "RBLK", "WEC", "VOL")
IDX = {name: CHANNELS.index(name) for name in WATCH}


def show(title, record, times):
    print()
    print(title)
    header = "    t" + "".join(f"{name:>8}" for name in WATCH)
    print(header)
    print("-" * len(header))
    for t in times:
        frame = record.values[int(t / record.scenario.dt) - 1]
        cells = "".join(f"{frame[IDX[name]]:>8.1f}" for name in WATCH)
        print(f"{t:>5.0f}{cells}")


steady = steady_state_values()
print("steady state:",
      ", ".join(f"{n}={steady[IDX[n]]:g}" for n in WATCH))

# 1. Normal operation.  Sensor noise only; nothing drifts.
normal = run_scenario(ScenarioSpec(duration_steps=300, rng_seed=1))
show("normal operation (noise only)", normal, (10, 100, 300))

# 2. Tube rupture on steam generator A, 40% of the reference break.
# The break flow WTRA is orifice limited and appears within seconds,
# while pressure, pressurizer level and loop A secondary activity
# follow on thermal timescales.  Loop B stays near its setpoints,
# which is exactly what lets the diagnoser localize the fault.
sgtr_a = run_scenario(ScenarioSpec(
    fault_kind=FaultKind.SGTR_A, severity_percent=40.0, onset_time=50.0,
    duration_steps=500, rng_seed=2))
show("tube rupture, steam generator A, 40%", sgtr_a, (50, 80, 200, 500))

# 3. The mirror fault on loop B at the same severity.  Identical
# physics with the loop suffixes swapped.
sgtr_b = run_scenario(ScenarioSpec(
    fault_kind=FaultKind.SGTR_B, severity_percent=40.0, onset_time=50.0,
    duration_steps=500, rng_seed=3))
show("tube rupture, steam generator B, 40%", sgtr_b, (50, 80, 200, 500))

# 4. A severe rupture with safety injection enabled.  Once primary
# pressure crosses the actuation setpoint the injection flow WEC ramps
# in and the pressurizer stops draining (VOL freezes at its actuation
# value).
eccs = run_scenario(ScenarioSpec(
    fault_kind=FaultKind.SGTR_B, severity_percent=60.0, onset_time=0.0,
    duration_steps=600, rng_seed=4, eccs_enabled=True))
show("tube rupture B, 60%, safety injection enabled", eccs,
     (60, 110, 130, 300, 600))

# 5. Locked rotor on coolant pump #1.  Two phases: loop A flow
# collapses within seconds and power spikes, then the low flow trip
# ten seconds after onset runs the reactor back.  RBLK is the trip
# breaker indication.
rotor = run_scenario(ScenarioSpec(
    fault_kind=FaultKind.LOCKED_ROTOR_PUMP1, severity_percent=100.0,
    onset_time=50.0, duration_steps=300, rng_seed=5))
show("locked rotor, pump #1, 100%", rotor, (50, 55, 59, 70, 150, 300))

# 6. Which channels react first?  Rank by deviation from steady in
# units of the sensor noise floor, thirty seconds after onset.
print()
print("fastest movers 30 s after onset (deviation / noise scale)")
for title, record in (("  SGTR A 40%", sgtr_a),
                      ("  rotor 100%", rotor)):
    frame = record.values[int(80 / record.scenario.dt) - 1]
    scale = record.scenario.noise_sigma * np.where(
        steady == 0.0, 1.0, np.abs(steady))
    ranking = np.argsort(-np.abs(frame - steady) / scale)[:6]
    movers = ", ".join(
        f"{CHANNELS[i]} ({(frame[i] - steady[i]) / scale[i]:+.0f})"
        for i in ranking)
    print(f"{title}: {movers}")
