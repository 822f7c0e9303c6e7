"""Sum-rate of a random hybrid precoder and a finite-difference look at its gradients.

Run: python3 demos/01_rate_and_gradients.py
"""

import numpy as np

from hybridprec import (ChannelSet, Precoders, SystemDims, grad_analog, grad_digital,
                        sum_rate)
from hybridprec.channel import complex_gaussian

rng = np.random.default_rng(0)
dims = SystemDims(B=4, N=2, L=3, M=6)
ch = ChannelSet(dims, complex_gaussian(rng, (dims.B, dims.N, dims.M)), normalized=True)
p = Precoders(complex_gaussian(rng, (dims.M, dims.L)),
              complex_gaussian(rng, (dims.B, dims.L, dims.N)))
print(f"rate of a random precoder: {sum_rate(p, ch):.4f} bit/s/Hz")

# the gradients are derivatives with respect to the conjugate variable, so a
# small move along direction D changes the rate by about 2 Re <G, D>
for name, grad, move in [
    ("analog", grad_analog(p, ch), lambda d, t: Precoders(p.analog + t * d, p.digital)),
    ("digital", grad_digital(p, ch), lambda d, t: Precoders(p.analog, p.digital + t * d)),
]:
    d = complex_gaussian(rng, grad.shape)
    t = 1e-6
    fd = (sum_rate(move(d, t), ch) - sum_rate(move(d, -t), ch)) / (2 * t)
    print(f"{name:8s} predicted {2 * np.real(np.vdot(grad, d)): .8f}  finite diff {fd: .8f}")

# stepping along the gradient raises the rate
up = Precoders(p.analog, p.digital + 0.01 * grad_digital(p, ch))
print(f"after one small digital ascent step: {sum_rate(up, ch):.4f}")
