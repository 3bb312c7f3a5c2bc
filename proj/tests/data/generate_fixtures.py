#!/usr/bin/env python3
"""Regenerates the synthetic cycler-log fixtures and the golden simulation
output. The recurrence below is an independent transcription of the 2RC
model used by the test suites as an oracle; keep it free of any code shared
with the C++ implementation.

Run from this directory: python3 generate_fixtures.py
"""

import math
import random

OCV = [3.0, 1.8, -4.5, 9.0, -7.5, 2.4]  # lowest degree first, V(0)=3.0, V(1)=4.2

THETA_STAR = dict(r0=0.05, r1=0.02, c1=1000.0, r2=0.03, c2=20000.0)


def ocv_eval(coeffs, soc):
    soc = min(max(soc, 0.0), 1.0)
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * soc + c
    return acc


def simulate(theta, ocv, capacity_ah, soc_init, time, current):
    """Step-by-step 2RC recurrence: ZOH branches, coulomb counting,
    same-sample current in every term."""
    v1 = v2 = 0.0
    soc = soc_init
    t_prev = 0.0
    out = []
    for t, i in zip(time, current):
        dt = max(t - t_prev, 0.0)
        t_prev = t
        soc = min(max(soc - i * dt / (3600.0 * capacity_ah), 0.0), 1.0)
        a1 = math.exp(-dt / (theta["r1"] * theta["c1"]))
        a2 = math.exp(-dt / (theta["r2"] * theta["c2"]))
        v1 = a1 * v1 + theta["r1"] * (1.0 - a1) * i
        v2 = a2 * v2 + theta["r2"] * (1.0 - a2) * i
        out.append(ocv_eval(ocv, soc) - (v1 + v2) - i * theta["r0"])
    return out


def write_archive_csv(path, rows):
    with open(path, "w") as f:
        f.write("Test_Time (s),Cycle_Index,Current (A),Voltage (V),Cell_Temperature (C)\n")
        for t, cyc, i, v in rows:
            f.write(f"{t!r},{cyc},{i!r},{v!r},25\n")


def make_cell(path, theta, capacity_ah, rest_s, discharge_s, amps, noise_sd, seed):
    rng = random.Random(seed)
    time = list(range(0, rest_s + discharge_s + 1))
    current = [0.0 if t < rest_s else amps for t in time]
    voltage = simulate(theta, OCV, capacity_ah, 1.0, [float(t) for t in time], current)
    rows = []
    for t, i, v in zip(time, current, voltage):
        vn = v + (rng.gauss(0.0, noise_sd) if noise_sd > 0 else 0.0)
        rows.append((float(t), 1, i, vn))
    write_archive_csv(path, rows)


def main():
    # noiseless fixture used by the CLI fit test (60 s rest, then 1 A)
    make_cell("synthetic_cell.csv", THETA_STAR, 2.0, 60, 340, 1.0, 0.0, 0)

    # rest-only cycle: extraction must fail with no-discharge-found
    rows = [(float(t), 1, 0.0, ocv_eval(OCV, 1.0)) for t in range(0, 120)]
    write_archive_csv("rest_only.csv", rows)

    # three archive-format cells with distinct parameters and mild noise
    cells = [
        ("archive_cellA.csv", dict(r0=0.040, r1=0.015, c1=800.0, r2=0.025, c2=15000.0), 2.0, 1.0, 101),
        ("archive_cellB.csv", dict(r0=0.070, r1=0.030, c1=1500.0, r2=0.045, c2=30000.0), 2.5, 1.5, 202),
        ("archive_cellC.csv", dict(r0=0.025, r1=0.010, c1=500.0, r2=0.060, c2=50000.0), 3.0, 2.0, 303),
    ]
    for path, theta, cap, amps, seed in cells:
        make_cell(path, theta, cap, 30, 400, amps, 1e-3, seed)

    with open("ocv_star.txt", "w") as f:
        f.write(f"# ocv degree={len(OCV) - 1}\n")
        for c in OCV:
            f.write(f"{c!r}\n")

    with open("params_star.txt", "w") as f:
        for k, v in THETA_STAR.items():
            f.write(f"{k}={v!r}\n")
        f.write("capacity_ah=2.0\nsoc_init=1.0\n")

    with open("params_bad.txt", "w") as f:
        f.write("r0=0.05\nr1=0.02\nc1=-1000.0\nr2=0.03\nc2=20000.0\n")

    time = [float(t) for t in range(0, 600)]
    with open("profile_const.csv", "w") as f:
        f.write("time_s,current_a\n")
        for t in time:
            f.write(f"{t!r},1.0\n")
    with open("profile_zero.csv", "w") as f:
        f.write("time_s,current_a\n")
        for t in time:
            f.write(f"{t!r},0.0\n")

    golden = simulate(THETA_STAR, OCV, 2.0, 1.0, time, [1.0] * len(time))
    with open("golden_sim.csv", "w") as f:
        f.write("time_s,voltage_v\n")
        for t, v in zip(time, golden):
            f.write(f"{t!r},{v!r}\n")


if __name__ == "__main__":
    main()
