"""Learn-to-optimize: tune step-size schedules on a channel dataset.

The trainable object is the schedule array itself (PGA ``K x (B+1)``, PCMP
``K x i_max x (2B+1)`` or ADMM ``I_max x 5``). Hyper-gradients default to
central finite differences over the schedule entries; every probe re-runs the
unrolled optimizer with the same initialization seed, so the random start
cancels out of the differences. An optional reverse-mode path
(:class:`GradMode.UNROLLED`) backpropagates through the unrolled iterations
with ``jax``.
"""

import enum
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .admm import AdmmParams, admm_run
from .channel import ErrorSet, sample_error_set
from .exceptions import (EmptyBatch, EmptyDataset, FormatError, NumericalError,
                         ShapeMismatch, StepTooLarge)
from .objective import AnalogConstraint, pga_loss, rate_kernel, sum_rate
from .optim import (ErrorRadius, PcmpSchedule, PgaSchedule, pcmp_run_batch,
                    pga_run_batch)

POSITIVITY_FLOOR = 1e-8


class Optimizer(enum.Enum):
    ADAM = "adam"
    PLAIN_SGD = "sgd"


class GradMode(enum.Enum):
    CENTRAL_FD = "central_fd"
    UNROLLED = "unrolled"


@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 10
    learning_rate: float = 1e-3
    K: int = 5
    seed: int = 0
    optimizer: Optimizer = Optimizer.ADAM
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    grad_mode: GradMode = GradMode.CENTRAL_FD
    fd_step: float = 1e-5

    def __post_init__(self):
        self.optimizer = Optimizer(self.optimizer)
        self.grad_mode = GradMode(self.grad_mode)
        if int(self.epochs) != self.epochs or self.epochs < 0:
            raise ValueError(f"epochs must be a non-negative integer, got {self.epochs!r}")
        if int(self.batch_size) != self.batch_size or self.batch_size < 1:
            raise ValueError(f"batch_size must be a positive integer, got {self.batch_size!r}")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not self.fd_step > 0:
            raise ValueError("fd_step must be positive")

    def to_dict(self):
        out = asdict(self)
        out["optimizer"] = self.optimizer.value
        out["grad_mode"] = self.grad_mode.value
        return out


@dataclass
class TrainResult:
    """Trained schedule plus the mean batch loss of every epoch."""

    schedule: object
    epoch_losses: list = field(default_factory=list)


# --------------------------------------------------------------------------- schedule <-> array

def _values(sched):
    return sched.P if isinstance(sched, AdmmParams) else sched.steps


def _with_values(sched, values):
    if isinstance(sched, AdmmParams):
        return AdmmParams(values)
    return type(sched)(values)


def _stack(batch):
    sets = list(batch)
    if not sets:
        raise EmptyBatch("batch is empty")
    if not all(cs.normalized for cs in sets):
        raise ValueError("training expects normalized channels")
    return np.stack([cs.bands for cs in sets]), sets[0].dims


# --------------------------------------------------------------------------- losses

def batch_loss_pga(batch, sched, c, seed):
    """Mean weighted-trajectory loss of PGA over the channels in ``batch``."""
    h, dims = _stack(batch)
    rates = pga_run_batch(h, sched, c, seed, dims.L)[0]
    return float(np.mean(pga_loss(rates[:, 1:])))


def _error_set(dims, epsilon, es_seed, n_e):
    if epsilon <= 0:
        return ErrorSet.zero(dims)
    return sample_error_set(dims, epsilon, n_e, es_seed)


def batch_loss_pcmp(batch, sched, epsilon, es_seed, n_e, c, seed,
                    radius_mode=ErrorRadius.FROBENIUS):
    """Mean worst-case negative rate of the final PCMP iterate.

    One error set (drawn from ``es_seed``) is shared by every channel in the
    batch; with ``epsilon = 0`` it is the zero pattern alone.
    """
    h, dims = _stack(batch)
    _, wa, wd, _ = pcmp_run_batch(h, sched, epsilon, c, seed, dims.L, radius_mode)
    es = _error_set(dims, epsilon, es_seed, n_e)
    rates = rate_kernel(h[:, None] + es.patterns[None], wa[:, None], wd[:, None])
    return float(np.mean(np.max(-rates, axis=1)))


def batch_loss_admm(batch, params, seed):
    """Mean negative rate of the power-projected final ADMM precoders."""
    sets = list(batch)
    if not sets:
        raise EmptyBatch("batch is empty")
    return float(np.mean([-sum_rate(admm_run(cs, params, seed)[0], cs) for cs in sets]))


class ScheduleLoss:
    """Schedule -> batch loss, optionally with a reverse-mode gradient."""

    def __init__(self, fn, unrolled=None):
        self.fn = fn
        self.unrolled = unrolled

    def __call__(self, sched):
        return self.fn(sched)


def pga_objective(batch, c, seed):
    from . import unrolled

    h, dims = _stack(batch)
    return ScheduleLoss(lambda s: batch_loss_pga(batch, s, c, seed),
                        lambda s: unrolled.pga_loss_grad(h, s, c, seed, dims.L))


def pcmp_objective(batch, epsilon, es_seed, n_e, c, seed, radius_mode=ErrorRadius.FROBENIUS):
    from . import unrolled

    h, dims = _stack(batch)
    es = _error_set(dims, epsilon, es_seed, n_e)
    return ScheduleLoss(
        lambda s: batch_loss_pcmp(batch, s, epsilon, es_seed, n_e, c, seed, radius_mode),
        lambda s: unrolled.pcmp_loss_grad(h, s, epsilon, es.patterns, c, seed, dims.L,
                                          radius_mode))


# --------------------------------------------------------------------------- gradients and updates

def hyper_gradient(loss_fn, sched, cfg):
    """Gradient of ``loss_fn`` with respect to every schedule entry.

    Central differences with step ``cfg.fd_step`` by default; in
    ``GradMode.UNROLLED`` the loss must carry a reverse-mode ``unrolled``
    callable (see :class:`ScheduleLoss`).
    """
    values = _values(sched)
    if cfg.grad_mode is GradMode.UNROLLED:
        grad_fn = getattr(loss_fn, "unrolled", None)
        if grad_fn is None:
            raise ValueError("loss has no reverse-mode gradient; use central differences")
        return np.asarray(grad_fn(sched), dtype=float)
    h = cfg.fd_step
    if np.any(values <= h):
        raise StepTooLarge(f"fd_step={h} is not below every schedule entry (min {values.min()})")
    grad = np.empty_like(values)
    for idx in np.ndindex(values.shape):
        plus, minus = values.copy(), values.copy()
        plus[idx] += h
        minus[idx] -= h
        grad[idx] = (loss_fn(_with_values(sched, plus))
                     - loss_fn(_with_values(sched, minus))) / (2 * h)
    if not np.all(np.isfinite(grad)):
        raise NumericalError("non-finite hyper-gradient")
    return grad


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, shape):
        return cls(np.zeros(shape), np.zeros(shape), 0)


def adam_step(params, grad, state, lr, beta1=0.9, beta2=0.999, eps=1e-8,
              floor=POSITIVITY_FLOOR):
    """Bias-corrected Adam update, clamped to ``floor`` from below."""
    params = np.asarray(params, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if grad.shape != params.shape or state.m.shape != params.shape:
        raise ShapeMismatch(f"params {params.shape}, grad {grad.shape}, state {state.m.shape}")
    t = state.t + 1
    m = beta1 * state.m + (1 - beta1) * grad
    v = beta2 * state.v + (1 - beta2) * grad ** 2
    m_hat = m / (1 - beta1 ** t)
    v_hat = v / (1 - beta2 ** t)
    new = np.maximum(params - lr * m_hat / (np.sqrt(v_hat) + eps), floor)
    return new, AdamState(m, v, t)


def sgd_step(params, grad, lr, floor=POSITIVITY_FLOOR):
    params = np.asarray(params, dtype=float)
    if np.shape(grad) != params.shape:
        raise ShapeMismatch(f"params {params.shape}, grad {np.shape(grad)}")
    return np.maximum(params - lr * np.asarray(grad), floor)


# --------------------------------------------------------------------------- training loops

def _batches(n, batch_size, seed, epoch):
    order = np.random.default_rng([int(seed), int(epoch)]).permutation(n)
    return [order[i:i + batch_size] for i in range(0, n, batch_size)]


def _train(ds, cfg, init, make_loss):
    if len(ds) == 0:
        raise EmptyDataset("dataset is empty")
    if cfg.batch_size > len(ds):
        raise ValueError(f"batch_size {cfg.batch_size} exceeds dataset size {len(ds)}")
    sched = init
    values = _values(init).copy()
    # keep central-difference probes on the positive side of zero
    floor = POSITIVITY_FLOOR
    if cfg.grad_mode is GradMode.CENTRAL_FD:
        floor = max(floor, 2.0 * cfg.fd_step)
    state = AdamState.zeros(values.shape)
    losses = []
    for epoch in range(cfg.epochs):
        batch_losses = []
        for idx in _batches(len(ds), cfg.batch_size, cfg.seed, epoch):
            loss_fn = make_loss(ds[idx])
            batch_losses.append(loss_fn(sched))
            grad = hyper_gradient(loss_fn, sched, cfg)
            if cfg.optimizer is Optimizer.ADAM:
                values, state = adam_step(values, grad, state, cfg.learning_rate,
                                          cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, floor)
            else:
                values = sgd_step(values, grad, cfg.learning_rate, floor)
            sched = _with_values(init, values)
        losses.append(float(np.mean(batch_losses)))
    return TrainResult(sched, losses)


def _check_ds(ds):
    if len(ds) == 0:
        raise EmptyDataset("dataset is empty")
    if not ds.normalized:
        raise ValueError("training expects a normalized dataset")


def train_pga(ds, cfg, c, init_sched):
    """Tune a PGA schedule; returns a :class:`TrainResult`."""
    _check_ds(ds)
    c = AnalogConstraint.parse(c)
    return _train(ds, cfg, init_sched, lambda b: pga_objective(b, c, cfg.seed))


def error_set_seed(cfg):
    """Seed of the fixed training error set, derived from the config seed."""
    return int(np.random.default_rng([int(cfg.seed), 7]).integers(2 ** 31))


def train_pcmp(ds, cfg, epsilon, n_e, c, init_sched, radius_mode=ErrorRadius.FROBENIUS):
    """Tune a PCMP schedule against a fixed sampled error set."""
    _check_ds(ds)
    c = AnalogConstraint.parse(c)
    es_seed = error_set_seed(cfg)
    return _train(ds, cfg, init_sched,
                  lambda b: pcmp_objective(b, epsilon, es_seed, n_e, c, cfg.seed, radius_mode))


def train_admm(ds, cfg, init_params):
    """Tune the ADMM parameter matrix on the negative final rate (single band)."""
    _check_ds(ds)
    if ds.dims.B != 1:
        raise ValueError(f"ADMM training needs B = 1, got B={ds.dims.B}")
    if cfg.grad_mode is GradMode.UNROLLED:
        raise ValueError("ADMM training supports central differences only")
    return _train(ds, cfg, init_params,
                  lambda b: ScheduleLoss(lambda p: batch_loss_admm(b, p, cfg.seed)))


# --------------------------------------------------------------------------- persistence

def schedule_to_dict(sched, cfg=None, seed=None):
    if isinstance(sched, PgaSchedule):
        out = {"kind": "pga", "K": sched.K, "B": sched.B}
    elif isinstance(sched, PcmpSchedule):
        out = {"kind": "pcmp", "K": sched.K, "B": sched.B, "i_max": sched.i_max}
    elif isinstance(sched, AdmmParams):
        out = {"kind": "admm", "I_max": sched.I_max, "B": 1}
    else:
        raise TypeError(f"not a schedule: {type(sched).__name__}")
    out["steps"] = _values(sched).tolist()
    out["seed"] = None if seed is None else int(seed)
    out["config"] = None if cfg is None else cfg.to_dict()
    return out


def schedule_from_dict(data):
    try:
        kind, steps = data["kind"], np.array(data["steps"], dtype=float)
        if kind == "pga":
            sched = PgaSchedule(steps.reshape(data["K"], data["B"] + 1))
        elif kind == "pcmp":
            sched = PcmpSchedule(steps.reshape(data["K"], data["i_max"], 2 * data["B"] + 1))
        elif kind == "admm":
            sched = AdmmParams(steps.reshape(data["I_max"], 5))
        else:
            raise FormatError(f"unknown schedule kind {kind!r}")
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"malformed schedule: {exc}") from None
    return sched


def save_schedule(path, sched, cfg=None, seed=None):
    text = json.dumps(schedule_to_dict(sched, cfg, seed), indent=2)
    with open(path, "w", newline="\n") as fh:
        fh.write(text + "\n")


def load_schedule(path):
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: {exc}") from None
    return schedule_from_dict(data)


def best_constant_step(ds, K, grid, c, seed, criterion="loss"):
    """Pick the constant PGA step from ``grid`` that does best on ``ds``.

    ``criterion="loss"`` minimizes the trajectory loss over ``K`` iterations
    (a starting point for training); ``"final"`` maximizes the mean rate after
    ``K`` iterations (a tuned fixed-step reference).
    """
    h, dims = _stack(ds)
    scores = []
    for mu in grid:
        rates = pga_run_batch(h, PgaSchedule.constant(K, dims.B, mu), c, seed, dims.L)[0]
        score = np.mean(pga_loss(rates[:, 1:])) if criterion == "loss" else -np.mean(rates[:, -1])
        scores.append(score)
    return float(grid[int(np.argmin(scores))])
