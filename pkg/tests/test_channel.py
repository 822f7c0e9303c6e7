import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridprec.channel import (ChannelDataset, ChannelSet, ErrorSet, SystemDims, denormalize,
                                gen_rayleigh, load_dataset, normalize, random_ball_error,
                                renormalize, sample_error_set, save_dataset, snr_db_to_noise_var,
                                split)
from hybridprec.exceptions import AlreadyNormalized, BadSplit, DimensionMismatch, FormatError


def test_dims_validation():
    with pytest.raises(ValueError):
        SystemDims(1, 1, 3, 2)
    with pytest.raises(ValueError):
        SystemDims(0, 1, 1, 1)
    with pytest.raises(ValueError):
        SystemDims(1, 1, 1, 1, noise_var=0.0)
    SystemDims(1, 1, 2, 2)  # L = M is allowed (fully digital)


def test_snr_convention():
    assert snr_db_to_noise_var(0) == 1.0
    assert snr_db_to_noise_var(10) == pytest.approx(0.1)
    assert snr_db_to_noise_var(-10) == pytest.approx(10.0)


def test_gen_rayleigh_deterministic():
    dims = SystemDims(2, 3, 2, 4)
    a, b = gen_rayleigh(dims, 2, 7), gen_rayleigh(dims, 2, 7)
    assert np.array_equal(a.channels, b.channels)
    assert not np.array_equal(a.channels, gen_rayleigh(dims, 2, 8).channels)


def test_gen_rayleigh_moments():
    ds = gen_rayleigh(SystemDims(1, 2, 2, 2), 1000, 3)
    h = ds.channels.reshape(1000, -1)
    assert np.all(np.abs(h.mean(axis=0)) < 0.05)
    assert np.all(np.abs(np.mean(np.abs(h) ** 2, axis=0) - 1) < 0.05)


def test_gen_rayleigh_fourth_moment():
    h = gen_rayleigh(SystemDims(1, 4, 4, 25), 100, 5).channels.ravel()
    assert h.size >= 10_000
    assert abs(np.mean(np.abs(h) ** 4) - 2.0) < 0.2 * 2.0


def test_gen_rayleigh_count_zero():
    with pytest.raises(ValueError):
        gen_rayleigh(SystemDims(1, 1, 1, 1), 0, 1)


@pytest.mark.parametrize("N,var,entry,expected", [
    (1, 1.0, 5.0, 5.0),
    (4, 0.25, 2.0, 2.0),
    (2, 1.0, 3.0, 3.0 / np.sqrt(2.0)),
])
def test_normalize_examples(N, var, entry, expected):
    dims = SystemDims(1, N, 1, 1, var)
    cs = normalize(ChannelSet(dims, np.full((1, N, 1), entry)))
    assert cs.normalized
    assert np.allclose(cs.bands, expected, rtol=1e-12)


def test_normalize_rejects_second_call():
    cs = normalize(ChannelSet(SystemDims(1, 1, 1, 1), np.ones((1, 1, 1))))
    with pytest.raises(AlreadyNormalized):
        normalize(cs)


def test_renormalize_roundtrip():
    ds = gen_rayleigh(SystemDims(2, 2, 2, 3), 3, 1)
    n1 = renormalize(normalize(ds), 0.1)
    assert np.allclose(n1.channels, ds.channels * np.sqrt(1 / (2 * 0.1)))
    assert np.allclose(denormalize(n1).channels, ds.channels)


def test_dataset_indexing():
    ds = gen_rayleigh(SystemDims(2, 2, 2, 3), 5, 1)
    assert isinstance(ds[0], ChannelSet)
    assert isinstance(ds[1:3], ChannelDataset) and len(ds[1:3]) == 2
    assert len(list(ds)) == 5
    again = ChannelDataset.from_sets(ds.realizations)
    assert np.array_equal(again.channels, ds.channels)


def test_channel_shape_checked():
    with pytest.raises(DimensionMismatch):
        ChannelSet(SystemDims(2, 2, 2, 3), np.zeros((2, 3, 2)))


@given(st.floats(1e-3, 10.0), st.integers(0, 8), st.integers(0, 2 ** 32 - 1))
@settings(max_examples=30, deadline=None)
def test_error_set_invariants(eps, n_e, seed):
    dims = SystemDims(2, 2, 1, 3)
    es = sample_error_set(dims, eps, n_e, seed)
    assert len(es) == n_e + 1 and es.n_e == n_e
    assert np.all(es.patterns[0] == 0)
    norms = np.linalg.norm(es.patterns, axis=(-2, -1))
    assert np.all(norms < eps)
    assert np.all(norms[1:] > 0)


def test_error_set_deterministic():
    dims = SystemDims(2, 2, 1, 3)
    a, b = sample_error_set(dims, 0.1, 5, 9), sample_error_set(dims, 0.1, 5, 9)
    assert np.array_equal(a.patterns, b.patterns)


def test_error_set_zero_only():
    es = sample_error_set(SystemDims(1, 1, 1, 1), 0.5, 0, 1)
    assert len(es) == 1 and np.all(es.patterns == 0)
    assert len(ErrorSet.zero(SystemDims(1, 1, 1, 1))) == 1


def test_error_set_rejects_bad_eps():
    with pytest.raises(ValueError):
        sample_error_set(SystemDims(1, 1, 1, 1), 0.0, 3, 1)


def test_random_ball_error(rng):
    dims = SystemDims(3, 2, 1, 2)
    e = random_ball_error(dims, 0.3, rng)
    assert np.all(np.linalg.norm(e, axis=(-2, -1)) < 0.3)
    assert np.all(random_ball_error(dims, 0.0, rng) == 0)


def test_roundtrip_bit_exact(tmp_path):
    ds = normalize(gen_rayleigh(SystemDims(2, 3, 2, 4, 0.5), 4, 42))
    path = tmp_path / "ch.bin"
    save_dataset(ds, path)
    back = load_dataset(path, L=2)
    assert back.channels.tobytes() == ds.channels.tobytes()
    assert back.dims == ds.dims and back.normalized and back.seed == 42


def test_file_layout(tmp_path):
    ds = gen_rayleigh(SystemDims(1, 1, 1, 2, 2.0), 1, 5)
    path = tmp_path / "ch.bin"
    save_dataset(ds, path)
    raw = path.read_bytes()
    assert raw[:4] == b"HPCH"
    assert struct.unpack_from("<I", raw, 4)[0] == 1
    assert raw[8] == 0
    assert struct.unpack_from("<4I", raw, 9) == (1, 1, 1, 2)
    assert struct.unpack_from("<d", raw, 25)[0] == 2.0
    assert struct.unpack_from("<q", raw, 33)[0] == 5
    re, im = struct.unpack_from("<2d", raw, 41)
    assert complex(re, im) == ds.channels[0, 0, 0, 0]
    assert len(raw) == 41 + 2 * 16


def test_bad_magic(tmp_path):
    ds = gen_rayleigh(SystemDims(1, 1, 1, 2), 1, 5)
    path = tmp_path / "ch.bin"
    save_dataset(ds, path)
    raw = bytearray(path.read_bytes())
    raw[:4] = b"XXXX"
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError):
        load_dataset(path)


def test_truncated(tmp_path):
    ds = gen_rayleigh(SystemDims(1, 1, 1, 2), 2, 5)
    path = tmp_path / "ch.bin"
    save_dataset(ds, path)
    path.write_bytes(path.read_bytes()[:-3])
    with pytest.raises(FormatError):
        load_dataset(path)
    path.write_bytes(b"HPCH")
    with pytest.raises(FormatError):
        load_dataset(path)


def test_bad_version(tmp_path):
    ds = gen_rayleigh(SystemDims(1, 1, 1, 2), 1, 5)
    path = tmp_path / "ch.bin"
    save_dataset(ds, path)
    raw = bytearray(path.read_bytes())
    raw[4] = 2
    path.write_bytes(bytes(raw))
    with pytest.raises(FormatError):
        load_dataset(path)


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_dataset(tmp_path / "none.bin")


def test_split():
    ds = gen_rayleigh(SystemDims(1, 1, 1, 1), 1100, 1)
    train, test = split(ds, 1000)
    assert (len(train), len(test)) == (1000, 100)
    assert np.array_equal(np.concatenate([train.channels, test.channels]), ds.channels)
    with pytest.raises(BadSplit):
        split(ds, 0)
    with pytest.raises(BadSplit):
        split(ds, 1100)
