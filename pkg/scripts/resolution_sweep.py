#!/usr/bin/env python3
"""Sweep spatial/temporal resolution for the 2D hydrogenic eigenstates.

For each (n_r, dt) pair, propagate the discretised eigenstate for a fixed
physical time and record the final |autocorrelation| deviation and the
probe-fit energy.  Writes one CSV per state under --out.
"""

import argparse
import time
from pathlib import Path

from gridwave import (Hydrogen2D, SimulationBox, StateVector, StepPlan,
                      discretize, fit_energy_from_signal, hydrogen2d_energy,
                      particle_layout, phase_probe_series)
from gridwave.hamiltonian import HamiltonianSpec, Nucleus, ParticleSpec
from gridwave.propagator import compile_step
from gridwave.statevector import inner_product

SPEC = HamiltonianSpec((ParticleSpec(1.0, -1.0),), (Nucleus((0.0, 0.0), 1.0),))

CASES = {
    # state -> (box width, n_r range, dt values, total time)
    "ground": (Hydrogen2D(0, 0), 10.0, (6, 7, 8), (1e-2, 1e-3, 1e-4), 1.5),
    "excited": (Hydrogen2D(1, 1), 40.0, (7, 8), (1e-1, 1e-2, 1e-3), 1.5),
}


def run_case(name, out_dir):
    state_def, length, n_rs, dts, total = CASES[name]
    rows = ["n_r,dt,autocorr_deviation,fit_energy,analytic_energy"]
    analytic = hydrogen2d_energy(state_def.n)
    for n_r in n_rs:
        box = SimulationBox(2, n_r, length, 0.5)
        layout = particle_layout(1, 2, n_r, box=box)
        amps, _ = discretize(state_def, box)
        for dt in dts:
            steps = int(round(total / dt))
            t0 = time.time()
            work = StateVector(amps.copy(), layout)
            kernel = compile_step(layout, StepPlan(dt), SPEC)
            for _ in range(steps):
                kernel.apply(work)
            dev = abs(1 - abs(inner_product(StateVector(amps, layout), work)))
            probe = phase_probe_series(StateVector(amps.copy(), layout),
                                       StepPlan(dt), SPEC, steps,
                                       every=max(steps // 128, 1))
            energy = fit_energy_from_signal(probe).energy
            rows.append(f"{n_r},{dt:g},{dev:.17g},{energy:.17g},{analytic:.17g}")
            print(f"{name} n_r={n_r} dt={dt:g}: dev={dev:.2e} "
                  f"E={energy:.6f} ({time.time() - t0:.0f}s)")
    path = Path(out_dir) / f"resolution_{name}.csv"
    path.write_text("\n".join(rows) + "\n")
    print(f"wrote {path}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/resolution")
    ap.add_argument("--case", choices=sorted(CASES), action="append")
    args = ap.parse_args()
    Path(args.out).mkdir(parents=True, exist_ok=True)
    for name in args.case or sorted(CASES):
        run_case(name, args.out)


if __name__ == "__main__":
    main()
