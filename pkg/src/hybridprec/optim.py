"""Projected gradient ascent (PGA) and projected conceptual mirror prox (PCMP).

Both optimizers run on stacks of channels: the engines take ``h`` of shape
``(R, B, N, M)`` and iterate all ``R`` realizations in lock step. The
single-channel wrappers :func:`pga_run` / :func:`pcmp_run` return a full
:class:`Trajectory`; the ``*_batch`` variants return per-iteration rates and the
final precoders, which is what the training loops need.
"""

import enum
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import SystemDims, complex_gaussian, random_ball_error
from .exceptions import DimensionMismatch, ZeroPower
from .matcore import fix_column_phase, svd_full
from .objective import AnalogConstraint, Precoders, grad_kernel, rate_kernel


class ErrorRadius(enum.Enum):
    """How the error-ball radius is read when projecting channel errors."""

    FROBENIUS = "frobenius"               # ||E_b||_F <= eps
    ENTRYWISE_SCALED = "entrywise_scaled"  # ||E_b||_F <= eps * N * M

    @classmethod
    def parse(cls, value):
        return value if isinstance(value, cls) else cls(str(value).lower().replace("-", "_"))


# --------------------------------------------------------------------------- schedules

def _as_steps(steps, ndim):
    steps = np.array(steps, dtype=float)
    if steps.ndim != ndim:
        raise DimensionMismatch(f"expected a {ndim}-d step array, got shape {steps.shape}")
    if not np.all(np.isfinite(steps)) or np.any(steps < 0):
        raise ValueError("step sizes must be finite and non-negative")
    return steps


@dataclass
class PgaSchedule:
    """``K x (B+1)`` steps: column 0 analog, columns ``1..B`` per-band digital."""

    steps: np.ndarray

    def __post_init__(self):
        self.steps = _as_steps(self.steps, 2)
        if self.steps.shape[1] < 2:
            raise DimensionMismatch("PGA schedule needs at least 2 columns (B >= 1)")

    @property
    def K(self):
        return self.steps.shape[0]

    @property
    def B(self):
        return self.steps.shape[1] - 1

    @classmethod
    def constant(cls, K, B, value, digital=None):
        steps = np.full((K, B + 1), float(value))
        if digital is not None:
            steps[:, 1:] = digital
        return cls(steps)


@dataclass
class PcmpSchedule:
    """``K x i_max x (2B+1)`` steps: index 0 analog, ``1..B`` digital, ``B+1..2B`` error."""

    steps: np.ndarray

    def __post_init__(self):
        self.steps = _as_steps(self.steps, 3)
        if self.steps.shape[2] < 3 or self.steps.shape[2] % 2 == 0:
            raise DimensionMismatch(f"last axis must be 2B+1, got {self.steps.shape[2]}")

    @property
    def K(self):
        return self.steps.shape[0]

    @property
    def i_max(self):
        return self.steps.shape[1]

    @property
    def B(self):
        return (self.steps.shape[2] - 1) // 2

    @classmethod
    def constant(cls, K, B, value, i_max=2, error=None):
        steps = np.full((K, i_max, 2 * B + 1), float(value))
        if error is not None:
            steps[:, :, B + 1:] = error
        return cls(steps)

    @classmethod
    def from_pga(cls, sched, error=0.0):
        """Single inner iteration with the PGA steps; error steps set to ``error``."""
        B = sched.B
        steps = np.full((sched.K, 1, 2 * B + 1), float(error))
        steps[:, 0, :B + 1] = sched.steps
        return cls(steps)


@dataclass
class Trajectory:
    """Iterates ``0..K`` of one optimizer run (index 0 is the initialization)."""

    analog: np.ndarray                    # (K+1, M, L)
    digital: np.ndarray                   # (K+1, B, L, N)
    rates: np.ndarray                     # (K+1,)
    constraint: AnalogConstraint = AnalogConstraint.UNCONSTRAINED
    errors: Optional[np.ndarray] = None   # (K+1, B, N, M), PCMP only

    def __len__(self):
        return len(self.rates)

    def precoders(self, k=-1):
        return Precoders(self.analog[k], self.digital[k], self.constraint)

    @property
    def final(self):
        return self.precoders(-1)

    @property
    def iterates(self):
        return [(self.precoders(k), float(self.rates[k])) for k in range(len(self))]


# --------------------------------------------------------------------------- projections

def project_analog(w, constraint, xp=np):
    """Project onto the analog feasible set (identity or unit-modulus entries).

    Zero entries of a phase-shifter precoder map to ``1 + 0j``.
    """
    constraint = AnalogConstraint.parse(constraint)
    if xp is np:
        w = np.asarray(w, dtype=np.complex128)
    if constraint is AnalogConstraint.UNCONSTRAINED:
        return w
    mag = xp.abs(w)
    safe = xp.where(mag > 0, mag, 1.0)
    return xp.where(mag > 0, w / safe, 1.0 + 0.0j)


def _rescale_digital(digital, analog, N, xp=np):
    B = digital.shape[-3]
    total = xp.sum(xp.abs(analog[..., None, :, :] @ digital) ** 2, axis=(-3, -2, -1))
    return digital * xp.sqrt(N * B / total)[..., None, None, None], total


def project_digital(digital, analog, N, xp=np):
    """Rescale all bands jointly so that ``(1/B) sum_b ||Wa Wd_b||_F^2 = N``.

    Accepts leading batch axes: ``digital`` ``(..., B, L, N)``, ``analog``
    ``(..., M, L)``.
    """
    if xp is not np:
        return _rescale_digital(digital, analog, N, xp)[0]
    digital = np.asarray(digital, dtype=np.complex128)
    analog = np.asarray(analog, dtype=np.complex128)
    with np.errstate(divide="ignore", invalid="ignore"):
        out, total = _rescale_digital(digital, analog, N)
    if np.any(total <= 0) or not np.all(np.isfinite(total)):
        raise ZeroPower("cannot normalize digital precoders with zero (or non-finite) power")
    return out


def project_error(e_hat, epsilon, radius_mode=ErrorRadius.FROBENIUS, xp=np):
    """Shrink each ``N x M`` error matrix into its ball; never expands.

    Works per matrix over the last two axes.
    """
    if xp is np:
        e_hat = np.asarray(e_hat, dtype=np.complex128)
    if epsilon <= 0:
        return xp.zeros_like(e_hat)
    n, m = e_hat.shape[-2:]
    radius = epsilon if ErrorRadius.parse(radius_mode) is ErrorRadius.FROBENIUS else epsilon * n * m
    norms = xp.sqrt(xp.sum(xp.abs(e_hat) ** 2, axis=(-2, -1), keepdims=True))
    scale = xp.minimum(radius / xp.where(norms > 0, norms, 1.0), 1.0)
    return e_hat * scale


# --------------------------------------------------------------------------- initialization

def _init_analog_stack(h, L):
    """First ``L`` right-singular vectors of each band-averaged channel in ``h``."""
    avg = np.mean(h, axis=-3)
    out = np.empty(avg.shape[:-2] + (avg.shape[-1], L), dtype=np.complex128)
    for idx in np.ndindex(avg.shape[:-2]):
        _, _, vh = svd_full(avg[idx])
        out[idx] = fix_column_phase(np.conj(vh[:L]).T)
    return out


def init_analog(ch, L):
    """Analog initializer: leading ``L`` right-singular vectors of the band average.

    Each column's first non-negligible entry is made real positive so the
    result does not depend on the LAPACK phase convention.
    """
    if not 1 <= L <= ch.dims.M:
        raise DimensionMismatch(f"L={L} must lie in [1, M={ch.dims.M}]")
    return _init_analog_stack(ch.bands, L)


def init_digital(dims, analog, seed):
    """Random complex Gaussian digital precoders scaled to full power.

    The same ``seed`` always gives the same draw; with a stacked ``analog``
    ``(R, M, L)`` the draw is shared and rescaled per realization.
    """
    rng = np.random.default_rng(seed)
    w = complex_gaussian(rng, (dims.B, dims.L, dims.N))
    analog = np.asarray(analog)
    if analog.ndim == 3:
        w = np.broadcast_to(w, (analog.shape[0],) + w.shape)
    return project_digital(w, analog, dims.N)


def _dims_of(h, L):
    _, B, N, M = h.shape
    return SystemDims(B, N, L, M)


def _init_state(h, L, constraint, seed):
    wa = project_analog(_init_analog_stack(h, L), constraint)
    wd = init_digital(_dims_of(h, L), wa, seed)
    return wa, wd


def _error_init(h, epsilon, seed):
    """Shared random initial error inside the eps-ball (zero when eps == 0)."""
    _, B, N, M = h.shape
    rng = np.random.default_rng([int(seed), 1])
    e = random_ball_error(SystemDims(B, N, 1, M), epsilon, rng)
    return np.broadcast_to(e, h.shape).copy()


# --------------------------------------------------------------------------- engines

def _check_stack(h, steps_B):
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim == 3:
        h = h[None]
    if h.ndim != 4:
        raise DimensionMismatch(f"channel stack must be (R, B, N, M), got {h.shape}")
    if h.shape[1] != steps_B:
        raise DimensionMismatch(f"schedule is for B={steps_B}, channel has B={h.shape[1]}")
    return h


def pga_steps(h, wa, wd, steps, constraint, N, xp=np):
    """Yield ``(wa, wd)`` after each of the ``len(steps)`` PGA iterations."""
    for mu in steps:
        d_wa = grad_kernel(h, wa, wd, xp)[0]
        wa = project_analog(wa + mu[0] * d_wa, constraint, xp)
        # digital gradients all taken at the updated analog, pre-update digital
        d_wd = grad_kernel(h, wa, wd, xp)[1]
        wd = project_digital(wd + mu[1:, None, None] * d_wd, wa, N, xp)
        yield wa, wd


def pcmp_steps(h, wa, wd, e, steps, constraint, N, epsilon, radius_mode, xp=np):
    """Yield ``(wa, wd, e)`` after each PCMP outer iteration.

    Inner iteration ``i`` re-steps from the anchor ``(wa, wd, e)`` using
    gradients at the previous inner iterate. The analog step is taken first;
    the digital and error gradients are then evaluated at the (projected)
    new analog iterate, mirroring the alternating order of PGA. With one inner
    iteration, zero error steps and ``epsilon = 0`` this is exactly PGA.
    """
    B = h.shape[1]
    for mu_k in steps:
        a_i, d_i, e_i = wa, wd, e
        for mu in mu_k:
            h_eff = h + e_i
            a_hat = wa + mu[0] * grad_kernel(h_eff, a_i, d_i, xp)[0]
            a_eval = project_analog(a_hat, constraint, xp)
            _, g_d, g_e = grad_kernel(h_eff, a_eval, d_i, xp)
            d_i = wd + mu[1:B + 1, None, None] * g_d
            e_i = e - mu[B + 1:, None, None] * g_e
            a_i = a_eval
        wa = a_i
        wd = project_digital(d_i, wa, N, xp)
        e = project_error(e_i, epsilon, radius_mode, xp)
        yield wa, wd, e


def pga_run_batch(h, sched, constraint, seed, L, keep=False):
    """Run PGA on a stack of normalized channels.

    Returns ``(rates, wa, wd)`` with ``rates`` of shape ``(R, K+1)``; with
    ``keep=True`` ``wa``/``wd`` hold every iterate along a new axis 1.
    """
    constraint = AnalogConstraint.parse(constraint)
    h = _check_stack(h, sched.B)
    N = h.shape[2]
    wa, wd = _init_state(h, L, constraint, seed)
    rates = [rate_kernel(h, wa, wd)]
    was, wds = [wa], [wd]
    for wa, wd in pga_steps(h, wa, wd, sched.steps, constraint, N):
        rates.append(rate_kernel(h, wa, wd))
        if keep:
            was.append(wa)
            wds.append(wd)
    rates = np.stack(rates, axis=1)
    if keep:
        return rates, np.stack(was, axis=1), np.stack(wds, axis=1)
    return rates, wa, wd


def pcmp_run_batch(h, sched, epsilon, constraint, seed, L,
                   radius_mode=ErrorRadius.FROBENIUS, keep=False):
    """Run PCMP on a stack of normalized channels.

    Returns ``(rates, wa, wd, e)``; ``rates`` are nominal (error-free) rates of
    shape ``(R, K+1)``. With ``keep=True`` the matrices carry every iterate.
    """
    constraint = AnalogConstraint.parse(constraint)
    if epsilon < 0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon!r}")
    h = _check_stack(h, sched.B)
    N = h.shape[2]
    wa, wd = _init_state(h, L, constraint, seed)
    e = _error_init(h, epsilon, seed)
    rates = [rate_kernel(h, wa, wd)]
    hist = [(wa, wd, e)]
    for wa, wd, e in pcmp_steps(h, wa, wd, e, sched.steps, constraint, N, epsilon, radius_mode):
        rates.append(rate_kernel(h, wa, wd))
        if keep:
            hist.append((wa, wd, e))
    rates = np.stack(rates, axis=1)
    if keep:
        return (rates,) + tuple(np.stack(x, axis=1) for x in zip(*hist))
    return rates, wa, wd, e


def _check_channel(ch, sched_B):
    if not ch.normalized:
        raise ValueError("optimizers expect a normalized channel")
    if ch.dims.B != sched_B:
        raise DimensionMismatch(f"schedule is for B={sched_B}, channel has B={ch.dims.B}")


def pga_run(ch, sched, constraint, seed):
    """Projected gradient ascent on one normalized channel; returns the trajectory."""
    _check_channel(ch, sched.B)
    rates, wa, wd = pga_run_batch(ch.bands, sched, constraint, seed, ch.dims.L, keep=True)
    return Trajectory(wa[0], wd[0], rates[0], AnalogConstraint.parse(constraint))


def pcmp_run(ch, sched, epsilon, constraint, seed, radius_mode=ErrorRadius.FROBENIUS):
    """Robust PCMP on one normalized channel; the trajectory includes the errors."""
    _check_channel(ch, sched.B)
    rates, wa, wd, e = pcmp_run_batch(ch.bands, sched, epsilon, constraint, seed,
                                      ch.dims.L, radius_mode, keep=True)
    return Trajectory(wa[0], wd[0], rates[0], AnalogConstraint.parse(constraint), e[0])


# --------------------------------------------------------------------------- baseline

def fully_digital_rates(h, iterations=300, step=0.05, seed=0):
    """Final rates of digital-only PGA with ``Wa = I`` (one per channel in ``h``)."""
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim == 3:
        h = h[None]
    R, B, N, M = h.shape
    wa = np.broadcast_to(np.eye(M, dtype=complex), (R, M, M))
    wd = init_digital(SystemDims(B, N, M, M), wa, seed)
    for _ in range(int(iterations)):
        d_wd = grad_kernel(h, wa, wd)[1]
        wd = project_digital(wd + step * d_wd, wa, N)
    return rate_kernel(h, wa, wd)


def fully_digital_baseline(ch, iterations=300, step=0.05, seed=0):
    """Upper-bound reference: fully-digital precoding (``L = M``, analog fixed to I)."""
    if not ch.normalized:
        raise ValueError("optimizers expect a normalized channel")
    return float(fully_digital_rates(ch.bands, iterations, step, seed)[0])
