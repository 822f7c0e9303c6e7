import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hybridprec.channel import ChannelSet, ErrorSet, SystemDims, sample_error_set
from hybridprec.exceptions import DimensionMismatch, EmptyTrajectory
from hybridprec.matcore import LN2
from hybridprec.objective import (AnalogConstraint, Precoders, grad_analog, grad_digital,
                                  grad_error, min_rate_over_errors, perturbed_rates, pga_loss,
                                  robust_loss, sum_rate)

from conftest import central_diff, cgauss, eig_rate, random_instance, rel_err


def _scalar(h=1.0, wa=1.0, wd=1.0):
    ch = ChannelSet(SystemDims(1, 1, 1, 1), np.array([[[h]]]), normalized=True)
    return ch, Precoders(np.array([[wa]]), np.array([[[wd]]]))


def test_scalar_rate():
    ch, p = _scalar(2.0)
    assert sum_rate(p, ch) == pytest.approx(np.log2(5.0), abs=1e-14)


def test_zero_digital_rate(rng):
    ch, p = random_instance(rng)
    assert sum_rate(Precoders(p.analog, 0 * p.digital), ch) == 0.0


def test_rate_eigen_oracle(rng):
    for _ in range(20):
        ch, p = random_instance(rng, 2, 2, 2, 3)
        assert sum_rate(p, ch) == pytest.approx(eig_rate(ch.bands, p.analog, p.digital),
                                                rel=1e-10)


def test_rate_requires_normalized(rng):
    ch, p = random_instance(rng)
    with pytest.raises(ValueError):
        sum_rate(p, ChannelSet(ch.dims, ch.bands, normalized=False))


def test_rate_dimension_mismatch(rng):
    ch, _ = random_instance(rng, 2, 2, 2, 3)
    with pytest.raises(DimensionMismatch):
        sum_rate(Precoders(np.ones((4, 2)), np.ones((2, 2, 2))), ch)


def test_precoders_shape_check():
    with pytest.raises(DimensionMismatch):
        Precoders(np.ones((3, 2)), np.ones((1, 3, 2)))


def test_unitary_invariance(rng):
    ch, p = random_instance(rng, 2, 3, 4, 5)
    q, _ = np.linalg.qr(cgauss(rng, (4, 4)))
    rotated = Precoders(p.analog @ q, q.conj().T @ p.digital)
    assert sum_rate(rotated, ch) == pytest.approx(sum_rate(p, ch), rel=1e-9)


def test_error_sign_symmetry_on_zero_channel(rng):
    ch, p = random_instance(rng, 2, 2, 2, 3)
    zero = ChannelSet(ch.dims, np.zeros_like(ch.bands), True)
    e = cgauss(rng, ch.bands.shape)
    assert sum_rate(p, zero.perturbed(e)) == pytest.approx(sum_rate(p, zero.perturbed(-e)),
                                                           rel=1e-12)


# --------------------------------------------------------------------------- gradients

def test_scalar_gradients():
    ch, p = _scalar()
    assert 2 * grad_analog(p, ch)[0, 0].real == pytest.approx(1 / LN2, rel=1e-12)
    assert 2 * grad_digital(p, ch, 0)[0, 0].real == pytest.approx(1 / LN2, rel=1e-12)
    fd = central_diff(lambda t: sum_rate(p, ch.perturbed(np.array([[[t]]]))))
    g = grad_error(p, ch, np.zeros((1, 1, 1)), 0)
    assert 2 * g[0, 0].real == pytest.approx(fd, rel=1e-6)


def test_zero_gradients(rng):
    ch, p = random_instance(rng, 2, 3, 4, 5)
    zero_d = Precoders(p.analog, 0 * p.digital)
    assert np.all(grad_analog(zero_d, ch) == 0)
    assert np.all(grad_error(zero_d, ch, np.zeros_like(ch.bands)) == 0)
    assert np.all(grad_digital(Precoders(0 * p.analog, p.digital), ch) == 0)


def _directional(rng, which, n_dirs=20):
    ch, p = random_instance(rng, 2, 3, 4, 5)
    errs = 0.1 * cgauss(rng, ch.bands.shape)
    worst = 0.0
    for _ in range(n_dirs):
        if which == "analog":
            d = cgauss(rng, p.analog.shape)
            g = grad_analog(p, ch)
            f = lambda t: sum_rate(Precoders(p.analog + t * d, p.digital), ch)
        elif which == "digital":
            d = cgauss(rng, p.digital.shape)
            g = grad_digital(p, ch)
            f = lambda t: sum_rate(Precoders(p.analog, p.digital + t * d), ch)
        else:
            d = cgauss(rng, ch.bands.shape)
            g = grad_error(p, ch, errs)
            f = lambda t: sum_rate(p, ch.perturbed(errs + t * d))
        worst = max(worst, rel_err(central_diff(f), 2 * np.real(np.vdot(g, d))))
    return worst


@pytest.mark.parametrize("which", ["analog", "digital", "error"])
def test_directional_contract(rng, which):
    assert _directional(rng, which) < 1e-6


def test_per_band_gradients_match_stack(rng):
    ch, p = random_instance(rng, 2, 3, 4, 5)
    e = 0.1 * cgauss(rng, ch.bands.shape)
    for b in range(2):
        assert np.array_equal(grad_digital(p, ch, b), grad_digital(p, ch)[b])
        assert np.array_equal(grad_error(p, ch, e, b), grad_error(p, ch, e)[b])


def test_error_gradient_at_zero_is_channel_gradient(rng):
    ch, p = random_instance(rng, 1, 2, 2, 3)
    d = cgauss(rng, ch.bands.shape)
    fd = central_diff(lambda t: sum_rate(p, ChannelSet(ch.dims, ch.bands + t * d, True)))
    g = grad_error(p, ch, np.zeros_like(ch.bands))
    assert rel_err(fd, 2 * np.real(np.vdot(g, d))) < 1e-6


# --------------------------------------------------------------------------- losses

def test_pga_loss_examples():
    assert pga_loss([3.0]) == pytest.approx(-np.log(2) * 3.0)
    assert pga_loss([0.0, 0.0]) == 0.0
    expected = -(np.log(2) * 1 + np.log(3) * 2 + np.log(4) * 3) / 3
    assert pga_loss([1.0, 2.0, 3.0]) == pytest.approx(expected)
    assert expected == pytest.approx(-2.349752, abs=1e-6)


def test_pga_loss_empty():
    with pytest.raises(EmptyTrajectory):
        pga_loss([])


def test_pga_loss_batched():
    rates = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.allclose(pga_loss(rates), [pga_loss(r) for r in rates])


def _scalar_errors(eps_values):
    dims = SystemDims(1, 1, 1, 1)
    pats = np.array(eps_values, dtype=complex).reshape(-1, 1, 1, 1)
    return ErrorSet(dims, 0.5, pats)


def test_robust_loss_zero_set(rng):
    ch, p = random_instance(rng)
    es = ErrorSet.zero(ch.dims)
    assert robust_loss(p, ch, es) == -sum_rate(p, ch)
    assert min_rate_over_errors(p, ch, es) == sum_rate(p, ch)


def test_robust_loss_scalar_enumeration():
    ch, p = _scalar(2.0)
    es = _scalar_errors([0.0, -0.5, 0.5])
    expected = -np.log2(1 + 1.5 ** 2)
    assert robust_loss(p, ch, es) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(-1.700440, abs=1e-6)
    assert min_rate_over_errors(p, ch, es) == pytest.approx(-expected, abs=1e-12)


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 6))
@settings(max_examples=25, deadline=None)
def test_robust_loss_monotone_in_set(seed, n_e):
    rng = np.random.default_rng(seed)
    ch, p = random_instance(rng)
    big = sample_error_set(ch.dims, 0.3, n_e, seed)
    small = ErrorSet(ch.dims, 0.3, big.patterns[:-1])
    assert robust_loss(p, ch, big) >= robust_loss(p, ch, small)
    assert min_rate_over_errors(p, ch, big) <= sum_rate(p, ch)


def test_perturbed_rates_oracle(rng):
    ch, p = random_instance(rng, 2, 2, 2, 3)
    es = sample_error_set(ch.dims, 0.2, 4, 1)
    got = perturbed_rates(p, ch, es)
    for pat, r in zip(es.patterns, got):
        assert r == pytest.approx(eig_rate(ch.bands + pat, p.analog, p.digital), rel=1e-10)


def test_constraint_parse():
    assert AnalogConstraint.parse("phase-shifter") is AnalogConstraint.PHASE_SHIFTER
    assert AnalogConstraint.parse("ps") is AnalogConstraint.PHASE_SHIFTER
    assert AnalogConstraint.parse("Unconstrained") is AnalogConstraint.UNCONSTRAINED
    with pytest.raises(ValueError):
        AnalogConstraint.parse("dma")
