"""Robust precoding under bounded channel error with the mirror-prox solver.

Trains a short PCMP schedule against sampled error patterns, then reports the
nominal rate and the worst rate over a fresh error set for several radii.

Run: python3 demos/04_robust_pcmp.py
"""

import numpy as np

from hybridprec import SystemDims, gen_rayleigh, normalize, split
from hybridprec.channel import sample_error_set
from hybridprec.learn import TrainConfig, train_pcmp
from hybridprec.objective import min_rate_over_errors, sum_rate
from hybridprec.optim import PcmpSchedule, pcmp_run

dims = SystemDims(B=2, N=2, L=3, M=4)
train, test = split(normalize(gen_rayleigh(dims, 40, seed=21)), 30)
eps = 0.05

init = PcmpSchedule.constant(3, dims.B, 0.05, i_max=2, error=0.01)
cfg = TrainConfig(epochs=10, batch_size=10, learning_rate=0.02, K=3)
res = train_pcmp(train, cfg, eps, 5, "phase_shifter", init)
print(f"robust loss per epoch: {np.round(res.epoch_losses, 4)}")

print("radius  schedule  nominal  worst-case")
for radius in (0.005, 0.05, 0.5):
    es = sample_error_set(dims, radius, 5, seed=77)
    for name, sched in (("initial", init), ("learned", res.schedule)):
        nominal, worst = [], []
        for i, cs in enumerate(test):
            p = pcmp_run(cs, sched, radius, "phase_shifter", i).final
            nominal.append(sum_rate(p, cs))
            worst.append(min_rate_over_errors(p, cs, es))
        print(f"{radius:6.3f}  {name:8s}  {np.mean(nominal):7.4f}  {np.mean(worst):10.4f}")
