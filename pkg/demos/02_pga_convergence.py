"""Projected gradient ascent with a constant step, for both analog architectures.

Prints the mean rate every 20 iterations next to a fully-digital reference.

Run: python3 demos/02_pga_convergence.py
"""

import numpy as np

from hybridprec import SystemDims, gen_rayleigh, normalize
from hybridprec.optim import PgaSchedule, fully_digital_rates, pga_run_batch

dims = SystemDims(B=4, N=3, L=4, M=8)
ds = normalize(gen_rayleigh(dims, 20, seed=1))
sched = PgaSchedule.constant(100, dims.B, 0.05)

curves = {}
for constraint in ("unconstrained", "phase_shifter"):
    rates, _, _ = pga_run_batch(ds.channels, sched, constraint, seed=0, L=dims.L)
    curves[constraint] = rates.mean(axis=0)
digital = fully_digital_rates(ds.channels, iterations=300, step=0.05).mean()

print("iter  unconstrained  phase_shifter")
for k in range(0, 101, 20):
    print(f"{k:4d}  {curves['unconstrained'][k]:13.4f}  {curves['phase_shifter'][k]:13.4f}")
print(f"fully digital (L = M, 300 iterations): {digital:.4f}")
