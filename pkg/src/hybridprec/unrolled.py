"""Reverse-mode hyper-gradients through the unrolled optimizers (needs ``jax``).

The iteration code is shared with :mod:`hybridprec.optim`; only the array
namespace changes. Initial points do not depend on the schedule, so they are
computed once with numpy and passed in as constants. Compiled gradient
functions are cached per static configuration, so repeated calls with the
same shapes (one per training batch) reuse the compiled code.
"""

import functools

import numpy as np

from .objective import AnalogConstraint, rate_kernel
from .optim import ErrorRadius, _error_init, _init_state, pcmp_steps, pga_steps


def _jax():
    try:
        import jax
    except ImportError as exc:  # pragma: no cover - optional dependency
        raise ImportError("unrolled gradients need the optional 'jax' package") from exc
    jax.config.update("jax_enable_x64", True)
    return jax, jax.numpy


@functools.lru_cache(maxsize=None)
def _pga_grad_fn(c, N):
    jax, jnp = _jax()

    def loss(steps, h, wa, wd):
        rates = [rate_kernel(h, a, d, jnp) for a, d in pga_steps(h, wa, wd, steps, c, N, jnp)]
        rates = jnp.stack(rates, axis=1)
        k = jnp.arange(1, rates.shape[1] + 1)
        return jnp.mean(jnp.log1p(k) * -rates)

    return jax.jit(jax.grad(loss))


@functools.lru_cache(maxsize=None)
def _pcmp_grad_fn(c, N, epsilon, radius_mode):
    jax, jnp = _jax()

    def loss(steps, h, wa, wd, e, pats):
        for wa, wd, e in pcmp_steps(h, wa, wd, e, steps, c, N, epsilon, radius_mode, jnp):
            pass
        rates = rate_kernel(h[:, None] + pats[None], wa[:, None], wd[:, None], jnp)
        return jnp.mean(jnp.max(-rates, axis=1))

    return jax.jit(jax.grad(loss))


def pga_loss_grad(h, sched, c, seed, L):
    """Gradient of the mean PGA trajectory loss with respect to ``sched.steps``."""
    c = AnalogConstraint.parse(c)
    wa0, wd0 = _init_state(h, L, c, seed)
    grad = _pga_grad_fn(c, h.shape[2])(sched.steps, h, wa0, wd0)
    return np.asarray(grad)


def pcmp_loss_grad(h, sched, epsilon, patterns, c, seed, L, radius_mode=ErrorRadius.FROBENIUS):
    """Gradient of the mean worst-case PCMP loss with respect to ``sched.steps``."""
    c = AnalogConstraint.parse(c)
    radius_mode = ErrorRadius.parse(radius_mode)
    wa0, wd0 = _init_state(h, L, c, seed)
    e0 = _error_init(h, epsilon, seed)
    fn = _pcmp_grad_fn(c, h.shape[2], float(epsilon), radius_mode)
    return np.asarray(fn(sched.steps, h, wa0, wd0, e0, np.asarray(patterns)))
