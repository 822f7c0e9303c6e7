"""Learn a five-iteration step schedule and compare it with 100 fixed-step iterations.

The schedule is trained on 120 channels and evaluated on 40 unseen ones.
Gradients through the unrolled iterations come from jax when it is
installed, otherwise from central finite differences.

Run: python3 demos/03_learned_schedule.py
"""

import importlib.util
import time

from hybridprec import SystemDims, gen_rayleigh, normalize, split
from hybridprec.learn import TrainConfig, best_constant_step, train_pga
from hybridprec.optim import PgaSchedule, pga_run_batch

dims = SystemDims(B=4, N=3, L=5, M=6)
train, test = split(normalize(gen_rayleigh(dims, 160, seed=11)), 120)
mode = "unrolled" if importlib.util.find_spec("jax") else "central_fd"

mu0 = best_constant_step(train, 5, [0.1, 0.3, 0.8, 1.5, 3.0], "unconstrained", 0)
print(f"best constant step for five iterations: {mu0}")

t0 = time.perf_counter()
cfg = TrainConfig(epochs=30, batch_size=40, learning_rate=0.05, K=5, grad_mode=mode)
res = train_pga(train, cfg, "unconstrained", PgaSchedule.constant(5, dims.B, mu0))
print(f"training ({mode}) took {time.perf_counter() - t0:.1f}s")
for epoch in (0, 9, 19, 29):
    print(f"  epoch {epoch + 1:2d} mean loss {res.epoch_losses[epoch]:.4f}")

learned = pga_run_batch(test.channels, res.schedule, "unconstrained", 0, dims.L)[0]
fixed = pga_run_batch(test.channels, PgaSchedule.constant(100, dims.B, 0.05),
                      "unconstrained", 0, dims.L)[0]
print(f"test rate, learned 5 iterations: {learned[:, -1].mean():.4f}")
print(f"test rate, fixed step 100 iterations: {fixed[:, -1].mean():.4f}")
print(f"fixed step after 5 iterations: {fixed[:, 5].mean():.4f}")
