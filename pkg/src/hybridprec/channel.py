"""Multi-band channel datasets: synthesis, normalization, error sets and I/O.

A dataset stores its realizations as one ``(R, B, N, M)`` complex array;
indexing it yields :class:`ChannelSet` views of single realizations.

Binary file layout (all little endian)::

    offset  size  field
    0       4     magic b"HPCH"
    4       4     u32 version (= 1)
    8       1     u8 normalized flag
    9       16    u32 R, B, N, M
    25      8     f64 noise_var
    33      8     i64 seed
    41      ...   R*B*N*M complex entries as (f64 re, f64 im) pairs,
                  realization-major, then band, then row-major within a band
"""

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import AlreadyNormalized, BadSplit, DimensionMismatch, FormatError

MAGIC = b"HPCH"
VERSION = 1
_HEADER = struct.Struct("<4sIB4Idq")


@dataclass(frozen=True)
class SystemDims:
    """Problem sizes: bands, users, RF chains, antennas and noise variance."""

    B: int
    N: int
    L: int
    M: int
    noise_var: float = 1.0

    def __post_init__(self):
        for name in ("B", "N", "L", "M"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if self.L > self.M:
            raise ValueError(f"need L <= M, got L={self.L}, M={self.M}")
        if not (np.isfinite(self.noise_var) and self.noise_var > 0):
            raise ValueError(f"noise_var must be positive, got {self.noise_var!r}")

    @property
    def norm_scale(self):
        """Factor ``sqrt(1 / (N sigma^2))`` applied by :func:`normalize`."""
        return np.sqrt(1.0 / (self.N * self.noise_var))

    def with_noise_var(self, noise_var):
        return SystemDims(self.B, self.N, self.L, self.M, noise_var)


def snr_db_to_noise_var(snr_db):
    """Noise variance for unit transmit power: ``sigma^2 = 10**(-SNR_dB/10)``."""
    return float(10.0 ** (-np.asarray(snr_db, dtype=float) / 10.0))


@dataclass(frozen=True)
class ChannelSet:
    """One channel realization: ``B`` sub-channel matrices of shape ``N x M``."""

    dims: SystemDims
    bands: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        bands = np.asarray(self.bands, dtype=np.complex128)
        expected = (self.dims.B, self.dims.N, self.dims.M)
        if bands.shape != expected:
            raise DimensionMismatch(f"bands shape {bands.shape} != {expected}")
        object.__setattr__(self, "bands", bands)

    def __len__(self):
        return self.dims.B

    def perturbed(self, errors):
        """Channel with per-band additive errors ``H_b + E_b``."""
        errors = np.asarray(errors, dtype=np.complex128)
        if errors.shape != self.bands.shape:
            raise DimensionMismatch(f"error shape {errors.shape} != {self.bands.shape}")
        return ChannelSet(self.dims, self.bands + errors, self.normalized)


@dataclass(frozen=True)
class ChannelDataset:
    """A collection of realizations sharing dims and normalization state."""

    dims: SystemDims
    channels: np.ndarray
    normalized: bool = False
    seed: int = 0

    def __post_init__(self):
        ch = np.asarray(self.channels, dtype=np.complex128)
        d = self.dims
        if ch.ndim != 4 or ch.shape[1:] != (d.B, d.N, d.M):
            raise DimensionMismatch(
                f"channels shape {ch.shape} != (R, {d.B}, {d.N}, {d.M})")
        object.__setattr__(self, "channels", ch)

    def __len__(self):
        return self.channels.shape[0]

    def __getitem__(self, idx):
        if isinstance(idx, (int, np.integer)):
            return ChannelSet(self.dims, self.channels[idx], self.normalized)
        return ChannelDataset(self.dims, self.channels[idx], self.normalized, self.seed)

    def __iter__(self):
        for r in range(len(self)):
            yield self[r]

    @property
    def realizations(self):
        return list(self)

    @classmethod
    def from_sets(cls, sets, seed=0):
        sets = list(sets)
        if not sets:
            raise ValueError("need at least one ChannelSet")
        dims, flag = sets[0].dims, sets[0].normalized
        for cs in sets[1:]:
            if cs.dims != dims or cs.normalized != flag:
                raise DimensionMismatch("realizations differ in dims or normalization")
        return cls(dims, np.stack([cs.bands for cs in sets]), flag, seed)


@dataclass(frozen=True)
class ErrorSet:
    """Finite set of per-band perturbations; entry 0 is the all-zero pattern."""

    dims: SystemDims
    epsilon: float
    patterns: np.ndarray = field(repr=False)

    def __post_init__(self):
        pat = np.asarray(self.patterns, dtype=np.complex128)
        d = self.dims
        if pat.ndim != 4 or pat.shape[1:] != (d.B, d.N, d.M):
            raise DimensionMismatch(f"patterns shape {pat.shape} != (T, {d.B}, {d.N}, {d.M})")
        object.__setattr__(self, "patterns", pat)

    def __len__(self):
        return self.patterns.shape[0]

    @property
    def n_e(self):
        return len(self) - 1

    @classmethod
    def zero(cls, dims, epsilon=0.0):
        return cls(dims, epsilon, np.zeros((1, dims.B, dims.N, dims.M), complex))


def complex_gaussian(rng, shape):
    """Circularly-symmetric CN(0, 1) samples (real and imaginary parts N(0, 1/2))."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def gen_rayleigh(dims, count, seed):
    """Draw ``count`` i.i.d. Rayleigh realizations (unit-variance entries)."""
    if int(count) != count or count < 1:
        raise ValueError(f"count must be a positive integer, got {count!r}")
    rng = np.random.default_rng(seed)
    h = complex_gaussian(rng, (int(count), dims.B, dims.N, dims.M))
    return ChannelDataset(dims, h, normalized=False, seed=int(seed))


def normalize(cs):
    """Scale a raw realization (or dataset) by ``sqrt(1 / (N sigma^2))``."""
    if cs.normalized:
        raise AlreadyNormalized("channel is already normalized")
    scale = cs.dims.norm_scale
    if isinstance(cs, ChannelDataset):
        return ChannelDataset(cs.dims, cs.channels * scale, True, cs.seed)
    return ChannelSet(cs.dims, cs.bands * scale, True)


def denormalize(cs):
    """Inverse of :func:`normalize`."""
    if not cs.normalized:
        raise ValueError("channel is not normalized")
    scale = 1.0 / cs.dims.norm_scale
    if isinstance(cs, ChannelDataset):
        return ChannelDataset(cs.dims, cs.channels * scale, False, cs.seed)
    return ChannelSet(cs.dims, cs.bands * scale, False)


def renormalize(cs, noise_var):
    """Re-express a channel (raw or normalized) as normalized at ``noise_var``."""
    raw = denormalize(cs) if cs.normalized else cs
    dims = raw.dims.with_noise_var(noise_var)
    if isinstance(raw, ChannelDataset):
        return normalize(ChannelDataset(dims, raw.channels, False, raw.seed))
    return normalize(ChannelSet(dims, raw.bands, False))


def _ball_samples(rng, count, dims, epsilon):
    g = complex_gaussian(rng, (count, dims.B, dims.N, dims.M))
    norms = np.linalg.norm(g, axis=(-2, -1), keepdims=True)
    # open interval (0, 1): keeps every norm strictly inside the ball
    frac = rng.uniform(np.nextafter(0.0, 1.0), 1.0, size=(count, dims.B, 1, 1))
    return g / norms * (frac * epsilon)


def sample_error_set(dims, epsilon, n_e, seed):
    """Zero pattern plus ``n_e`` random patterns with per-band norm in (0, eps)."""
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon!r}")
    if int(n_e) != n_e or n_e < 0:
        raise ValueError(f"n_e must be a non-negative integer, got {n_e!r}")
    zero = np.zeros((1, dims.B, dims.N, dims.M), complex)
    if n_e == 0:
        return ErrorSet(dims, float(epsilon), zero)
    rng = np.random.default_rng(seed)
    pats = _ball_samples(rng, int(n_e), dims, float(epsilon))
    return ErrorSet(dims, float(epsilon), np.concatenate([zero, pats]))


def random_ball_error(dims, epsilon, rng):
    """One random perturbation with each band strictly inside the eps-ball."""
    if epsilon <= 0:
        return np.zeros((dims.B, dims.N, dims.M), complex)
    return _ball_samples(rng, 1, dims, float(epsilon))[0]


def save_dataset(ds, path):
    d = ds.dims
    header = _HEADER.pack(MAGIC, VERSION, int(bool(ds.normalized)),
                          len(ds), d.B, d.N, d.M, float(d.noise_var), int(ds.seed))
    payload = np.ascontiguousarray(ds.channels, dtype="<c16").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def load_dataset(path, L=None):
    """Read a dataset file. ``L`` is not stored in the file; it defaults to M."""
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")
    magic, version, flag, R, B, N, M, noise_var, seed = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if flag not in (0, 1):
        raise FormatError(f"{path}: bad normalized flag {flag}")
    expected = R * B * N * M * 16
    body = raw[_HEADER.size:]
    if len(body) != expected:
        raise FormatError(f"{path}: payload is {len(body)} bytes, expected {expected}")
    try:
        dims = SystemDims(B, N, M if L is None else L, M, noise_var)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from None
    channels = np.frombuffer(body, dtype="<c16").astype(np.complex128).reshape(R, B, N, M)
    return ChannelDataset(dims, channels, bool(flag), seed)


def split(ds, train_count):
    """First ``train_count`` realizations for training, the rest for testing."""
    if int(train_count) != train_count or not 0 < train_count < len(ds):
        raise BadSplit(f"train_count must be in (0, {len(ds)}), got {train_count!r}")
    return ds[:train_count], ds[train_count:]
