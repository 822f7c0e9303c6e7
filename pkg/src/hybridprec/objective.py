"""Sum-rate objective, its complex gradients, and the unfolding losses.

Gradient convention: every ``grad_*`` function returns the derivative with
respect to the *conjugated* variable, ``D = dR/dX*``. For a real objective this
is the steepest-ascent direction, and for any perturbation ``Delta``::

    d/dt R(X + t Delta) |_{t=0} = 2 Re <D, Delta> = 2 Re sum(conj(D) * Delta)

Rates use base-2 logarithms, so every gradient carries a ``1/ln 2`` factor.

The ``*_kernel`` functions work on stacked arrays with arbitrary leading batch
axes (``H``: ``(..., B, N, M)``, ``Wa``: ``(..., M, L)``, ``Wd``:
``(..., B, L, N)``) and take an array namespace ``xp`` so the same code runs
under ``jax.numpy`` for reverse-mode differentiation.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatch, EmptySet, EmptyTrajectory
from .matcore import LN2, cholesky_hpd, solve_hpd


class AnalogConstraint(enum.Enum):
    UNCONSTRAINED = "unconstrained"
    PHASE_SHIFTER = "phase_shifter"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"phaseshifter": "phase_shifter", "ps": "phase_shifter",
                   "none": "unconstrained", "free": "unconstrained"}
        return cls(aliases.get(key, key))


@dataclass(frozen=True)
class Precoders:
    """Analog ``M x L`` precoder plus ``B`` digital ``L x N`` precoders."""

    analog: np.ndarray
    digital: np.ndarray
    constraint: AnalogConstraint = AnalogConstraint.UNCONSTRAINED

    def __post_init__(self):
        wa = np.asarray(self.analog, dtype=np.complex128)
        wd = np.asarray(self.digital, dtype=np.complex128)
        if wd.ndim == 2:
            wd = wd[None]
        if wa.ndim != 2 or wd.ndim != 3 or wd.shape[1] != wa.shape[1]:
            raise DimensionMismatch(
                f"analog {wa.shape} and digital {wd.shape} are inconsistent")
        object.__setattr__(self, "analog", wa)
        object.__setattr__(self, "digital", wd)
        object.__setattr__(self, "constraint", AnalogConstraint.parse(self.constraint))

    @property
    def B(self):
        return self.digital.shape[0]

    def power(self):
        """Average transmit power ``(1/B) sum_b ||Wa Wd_b||_F^2``."""
        return float(np.mean(np.sum(np.abs(self.analog @ self.digital) ** 2, axis=(-2, -1))))


# --------------------------------------------------------------------------- kernels

def _cholesky(g, xp):
    return cholesky_hpd(g) if xp is np else xp.linalg.cholesky(g)


def _solve(g, t, xp):
    return solve_hpd(g, t, check=False) if xp is np else xp.linalg.solve(g, t)


def _herm(a, xp=np):
    return xp.conj(xp.swapaxes(a, -1, -2))


def effective_channel(h, wa, wd):
    """Per-band end-to-end matrices ``T_b = H_b Wa Wd_b`` of shape ``(..., B, N, N)``."""
    return h @ (wa[..., None, :, :] @ wd)


def gram(t, xp=np):
    n = t.shape[-1]
    return xp.eye(n, dtype=t.dtype) + t @ _herm(t, xp)


def rate_kernel(h, wa, wd, xp=np):
    """Band-averaged ``log2|I + T_b T_b^H|``; returns shape ``(...)``."""
    g = gram(effective_channel(h, wa, wd), xp)
    chol = _cholesky(g, xp)
    diag = xp.real(xp.diagonal(chol, axis1=-2, axis2=-1))
    per_band = 2.0 * xp.sum(xp.log(diag), axis=-1) / LN2
    return xp.mean(per_band, axis=-1)


def grad_kernel(h, wa, wd, xp=np):
    """Ascent directions ``(D_Wa, D_Wd, D_E)`` at channel ``h``.

    ``D_E`` is the derivative with respect to an additive error on ``h``
    (i.e. with respect to ``h`` itself).
    """
    B = h.shape[-3]
    t = effective_channel(h, wa, wd)
    x = _solve(gram(t, xp), t, xp) / (B * LN2)        # G^-1 T / (B ln2)
    a = _herm(h, xp) @ x                              # (..., B, M, N)
    d_wa = xp.sum(a @ _herm(wd, xp), axis=-3)
    d_wd = _herm(wa, xp)[..., None, :, :] @ a
    d_e = x @ _herm(wa[..., None, :, :] @ wd, xp)
    return d_wa, d_wd, d_e


# --------------------------------------------------------------------------- public API

def _check(p, ch, errors=None):
    d = ch.dims
    if not ch.normalized:
        raise ValueError("objective expects a normalized channel")
    if p.analog.shape[0] != d.M or p.digital.shape != (d.B, p.analog.shape[1], d.N):
        raise DimensionMismatch(
            f"precoders {p.analog.shape}/{p.digital.shape} do not fit dims {d}")
    if errors is not None and np.shape(errors) != ch.bands.shape:
        raise DimensionMismatch(f"errors shape {np.shape(errors)} != {ch.bands.shape}")


def sum_rate(p, ch):
    """Achievable sum-rate (bits/s/Hz) of precoders ``p`` on normalized ``ch``."""
    _check(p, ch)
    return float(rate_kernel(ch.bands, p.analog, p.digital))


def grad_analog(p, ch):
    _check(p, ch)
    return grad_kernel(ch.bands, p.analog, p.digital)[0]


def grad_digital(p, ch, b=None):
    """Ascent direction for ``Wd_b``; ``b=None`` returns all bands stacked."""
    _check(p, ch)
    d_wd = grad_kernel(ch.bands, p.analog, p.digital)[1]
    return d_wd if b is None else d_wd[b]


def grad_error(p, ch, errors, b=None):
    """Ascent direction of the rate w.r.t. the band-``b`` error ``E_b``.

    Evaluated at the effective channel ``H_b + E_b``; optimizers use it with a
    negative step to drive the rate down.
    """
    _check(p, ch, errors)
    d_e = grad_kernel(ch.bands + np.asarray(errors), p.analog, p.digital)[2]
    return d_e if b is None else d_e[b]


def pga_loss(rates):
    """Weighted trajectory loss ``(1/K) sum_k ln(1+k) * (-rate_k)``.

    ``rates[k-1]`` is the rate after iteration ``k`` (the initial point is not
    included). Accepts a trailing iteration axis for batches.
    """
    rates = np.asarray(rates, dtype=float)
    if rates.ndim == 0 or rates.shape[-1] == 0:
        raise EmptyTrajectory("need at least one iterate")
    k = np.arange(1, rates.shape[-1] + 1)
    return np.mean(np.log1p(k) * -rates, axis=-1)


def perturbed_rates(p, ch, es):
    """Sum-rate for every pattern of an :class:`ErrorSet`, shape ``(T,)``."""
    if len(es) == 0:
        raise EmptySet("error set is empty")
    _check(p, ch, es.patterns[0])
    h = ch.bands[None] + es.patterns
    return rate_kernel(h, p.analog, p.digital)


def robust_loss(p, ch, es):
    """Worst-case negative rate over the finite error set."""
    return float(np.max(-perturbed_rates(p, ch, es)))


def min_rate_over_errors(p, ch, es):
    return float(np.min(perturbed_rates(p, ch, es)))
