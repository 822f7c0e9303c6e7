"""ADMM on a single-band channel, compared with the water-filling optimum.

With the dual step near zero the split variable acts as a power penalty of
weight lam*mu/(lam+mu). Picking lam so that this weight equals the
water-filling multiplier at power N makes the fixed point the optimum.

Run: python3 demos/05_admm.py
"""

import numpy as np

from hybridprec import SystemDims, gen_rayleigh, normalize, sum_rate
from hybridprec.admm import AdmmParams, admm_run

ch = normalize(gen_rayleigh(SystemDims(1, 2, 2, 3), 1, seed=5))[0]
gains = np.linalg.svd(ch.bands[0], compute_uv=False) ** 2


def power(kappa):
    return np.sum(np.maximum(1 / (kappa * np.log(2)) - 1 / gains, 0))


# power is decreasing in kappa; bisect on a log scale for power == N
lo, hi = 1e-6, 1e3
for _ in range(200):
    mid = np.sqrt(lo * hi)
    lo, hi = (mid, hi) if power(mid) > 2 else (lo, mid)
kappa = np.sqrt(lo * hi)
optimum = np.sum(np.log2(1 + gains * np.maximum(1 / (kappa * np.log(2)) - 1 / gains, 0)))

mu = 2.0
lam = kappa * mu / (mu - kappa)
params = AdmmParams.constant(400, lam, mu, 0.05, 0.05, 1e-6)
p, rates = admm_run(ch, params, seed=0)
for k in (0, 50, 100, 200, 400):
    print(f"iteration {k:3d}: rate {rates[k]:.5f}")
print(f"after power projection: {sum_rate(p, ch):.5f}   water-filling: {optimum:.5f}")
