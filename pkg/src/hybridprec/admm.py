"""Single-band ADMM baseline with variable splitting ``V = Wa Wd``.

Augmented Lagrangian (``P = Wa Wd``, channel already normalized)::

    L = -log2|I + H P P^H H^H| + lam (||V||^2 - N) + mu ||P - V||^2
        + Re Tr[Y^T (P - V)]

Each iteration takes one gradient-descent step on ``Wa``, then on ``Wd``,
followed by the closed-form ``V`` update and a step on the multiplier ``Y``.

Gradient convention here differs from :mod:`hybridprec.objective`: the
``admm_grad_*`` functions return the plain derivative ``G = dL/dX`` (not the
conjugate one), so ``d/dt L(X + t Delta) = 2 Re sum(G * Delta)`` and the descent
direction is ``-conj(G)``.
"""

from dataclasses import dataclass

import numpy as np

from .channel import complex_gaussian
from .exceptions import DegenerateParameters, DimensionMismatch
from .matcore import LN2, logdet_hpd, solve_hpd
from .objective import AnalogConstraint, Precoders
from .optim import project_digital

COLUMNS = ("lam", "mu", "mu_a", "mu_d", "mu_y")


@dataclass
class AdmmState:
    """Iterate of the splitting: analog, digital, auxiliary ``V`` and multiplier ``Y``."""

    analog: np.ndarray   # M x L
    digital: np.ndarray  # L x N
    V: np.ndarray        # M x N
    Y: np.ndarray        # M x N

    def __post_init__(self):
        for name in ("analog", "digital", "V", "Y"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=np.complex128))
        M, L = self.analog.shape
        N = self.digital.shape[1]
        if self.digital.shape[0] != L or self.V.shape != (M, N) or self.Y.shape != (M, N):
            raise DimensionMismatch(
                f"inconsistent shapes: Wa {self.analog.shape}, Wd {self.digital.shape}, "
                f"V {self.V.shape}, Y {self.Y.shape}")

    @property
    def product(self):
        return self.analog @ self.digital


@dataclass
class AdmmParams:
    """Per-iteration parameters, one row ``(lam, mu, mu_a, mu_d, mu_y)`` per iteration."""

    P: np.ndarray

    def __post_init__(self):
        P = np.array(self.P, dtype=float)
        if P.ndim == 1 and P.size == 0:
            P = P.reshape(0, 5)
        if P.ndim != 2 or P.shape[1] != 5:
            raise DimensionMismatch(f"parameter matrix must be I_max x 5, got {P.shape}")
        if not np.all(np.isfinite(P)) or np.any(P < 0):
            raise ValueError("ADMM parameters must be finite and non-negative")
        self.P = P

    @property
    def I_max(self):
        return self.P.shape[0]

    @classmethod
    def constant(cls, I_max, lam, mu, mu_a, mu_d, mu_y):
        return cls(np.tile([lam, mu, mu_a, mu_d, mu_y], (int(I_max), 1)))


def _single_band(ch, s=None):
    if ch.dims.B != 1:
        raise DimensionMismatch(f"ADMM is single-band, got B={ch.dims.B}")
    h = ch.bands[0]
    if s is not None:
        if s.analog.shape[0] != h.shape[1] or s.V.shape[1] != h.shape[0]:
            raise DimensionMismatch(
                f"state (M={s.analog.shape[0]}, N={s.V.shape[1]}) does not fit channel {h.shape}")
    return h


def _rate(h, p):
    t = h @ p
    return float(logdet_hpd(np.eye(t.shape[0]) + t @ t.conj().T, check=False))


def lagrangian(s, ch, lam, mu):
    """Value of the augmented Lagrangian (real part of the trace coupling)."""
    h = _single_band(ch, s)
    p = s.product
    N = s.V.shape[1]
    diff = p - s.V
    return (-_rate(h, p)
            + lam * (np.sum(np.abs(s.V) ** 2) - N)
            + mu * np.sum(np.abs(diff) ** 2)
            + float(np.real(np.trace(s.Y.T @ diff))))


def _grad_product(h, s, mu):
    """``dL/dP`` for ``P = Wa Wd``."""
    p = s.product
    t = h @ p
    x = solve_hpd(np.eye(t.shape[0]) + t @ t.conj().T, t, check=False)
    conj_part = -(h.conj().T @ x) / LN2 + mu * (p - s.V)
    return np.conj(conj_part) + 0.5 * s.Y


def admm_grad_wa(s, ch, mu):
    """``dL/dWa`` (M x L); descend along ``-conj`` of the result."""
    h = _single_band(ch, s)
    return _grad_product(h, s, mu) @ s.digital.T


def admm_grad_wd(s, ch, mu):
    """``dL/dWd`` (L x N); descend along ``-conj`` of the result."""
    h = _single_band(ch, s)
    return s.analog.T @ _grad_product(h, s, mu)


def admm_v_update(s, lam, mu):
    """Closed-form auxiliary update ``V = mu/(lam+mu) P - Y^*/(lam+mu)``."""
    den = lam + mu
    if den == 0:
        raise DegenerateParameters("lam + mu must be nonzero")
    return (mu / den) * s.product - np.conj(s.Y) / den


def admm_y_update(s, mu_y, ascent=False):
    """Multiplier step ``Y - mu_y (P - V)``; ``ascent=True`` flips the sign."""
    step = mu_y * (s.product - s.V)
    return s.Y + step if ascent else s.Y - step


def init_state(ch, L, seed):
    """Random analog/digital pair at full power, ``V = Wa Wd`` and ``Y = 0``."""
    h = _single_band(ch)
    N, M = h.shape
    rng = np.random.default_rng(seed)
    wa = complex_gaussian(rng, (M, L))
    wd = project_digital(complex_gaussian(rng, (1, L, N)), wa, N)[0]
    p = wa @ wd
    return AdmmState(wa, wd, p, np.zeros_like(p))


def admm_step(s, ch, row, ascent=False):
    """One pass of the four updates with parameter row ``(lam, mu, mu_a, mu_d, mu_y)``."""
    lam, mu, mu_a, mu_d, mu_y = row
    wa = s.analog - mu_a * np.conj(admm_grad_wa(s, ch, mu))
    s = AdmmState(wa, s.digital, s.V, s.Y)
    wd = s.digital - mu_d * np.conj(admm_grad_wd(s, ch, mu))
    s = AdmmState(wa, wd, s.V, s.Y)
    s = AdmmState(wa, wd, admm_v_update(s, lam, mu), s.Y)
    return AdmmState(wa, wd, s.V, admm_y_update(s, mu_y, ascent))


def admm_run(ch, params, seed, L=None, ascent=False, return_state=False):
    """Run ``params.I_max`` ADMM iterations from a seeded random start.

    Returns ``(precoders, rates)``: ``rates`` holds the rate of the raw
    ``Wa Wd`` at initialization and after every iteration; the returned
    precoders are rescaled to full power. ``return_state=True`` appends the
    final raw :class:`AdmmState`.
    """
    if not ch.normalized:
        raise ValueError("ADMM expects a normalized channel")
    h = _single_band(ch)
    L = ch.dims.L if L is None else L
    s = init_state(ch, L, seed)
    rates = [_rate(h, s.product)]
    for row in params.P:
        s = admm_step(s, ch, row, ascent)
        rates.append(_rate(h, s.product))
    N = h.shape[0]
    wd = project_digital(s.digital[None], s.analog, N)
    out = Precoders(s.analog, wd, AnalogConstraint.UNCONSTRAINED)
    if return_state:
        return out, rates, s
    return out, rates
