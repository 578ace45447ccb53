import numpy as np
import pytest

from thermalqkd.channels import eve_tap
from thermalqkd.infotheory import g2
from thermalqkd.optics import (GaussianMode, SourceParams, apply_beamsplitter,
                               heterodyne, joint_covariance_oracle, make_thermal,
                               sample_source_field)


def test_make_thermal_covariances():
    assert np.array_equal(make_thermal(0.0).covariance, np.eye(2))
    assert np.array_equal(make_thermal(1.0).covariance, 3.0 * np.eye(2))
    assert np.array_equal(make_thermal(0.5).covariance, 2.0 * np.eye(2))
    assert np.array_equal(make_thermal(2.0).mean, np.zeros(2))


def test_make_thermal_rejects_negative():
    with pytest.raises(ValueError):
        make_thermal(-0.1)
    with pytest.raises(ValueError):
        SourceParams(nbar=-1.0, d0=0.0)
    with pytest.raises(ValueError):
        SourceParams(nbar=1.0, d0=-2.0)


def test_gaussian_mode_invariants():
    with pytest.raises(ValueError):
        GaussianMode(np.zeros(2), np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        GaussianMode(np.zeros(2), 0.5 * np.eye(2))  # det < 1 violates uncertainty
    with pytest.raises(ValueError):
        GaussianMode(np.zeros(2), np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_source_field_noiseless_is_pure_displacement():
    params = SourceParams(nbar=0.0, d0=1.0)
    rng = np.random.default_rng(0)
    value = sample_source_field(params, 0.0, rng)
    assert value == 1.0 + 0.0j


def test_source_field_thermal_variance():
    # Monte Carlo consistency: per-quadrature variance of the fluctuation is nbar.
    rng = np.random.default_rng(42)
    field = sample_source_field(SourceParams(nbar=2.0, d0=0.0), np.zeros(10 ** 6), rng)
    assert abs(field.real.var() - 2.0) < 0.02
    assert abs(field.imag.var() - 2.0) < 0.02


def test_source_field_displaced_mean():
    rng = np.random.default_rng(7)
    field = sample_source_field(SourceParams(nbar=2.0, d0=3.0),
                                np.full(10 ** 6, np.pi / 2), rng)
    assert abs(field.real.mean() - 0.0) < 0.01
    assert abs(field.imag.mean() - 3.0) < 0.01


def test_beamsplitter_identity_and_split():
    out1, out2 = apply_beamsplitter(1.0 + 0.0j, 0.0j, 1.0)
    assert out1 == 1.0 + 0.0j and out2 == 0.0j
    out1, out2 = apply_beamsplitter(1.0 + 0.0j, 0.0j, 0.5)
    assert out1 == pytest.approx(0.70710678118654752, abs=1e-12)
    assert out2 == pytest.approx(0.70710678118654752, abs=1e-12)


def test_beamsplitter_conserves_intensity():
    rng = np.random.default_rng(3)
    a = rng.normal(size=500) + 1j * rng.normal(size=500)
    b = rng.normal(size=500) + 1j * rng.normal(size=500)
    for t in (0.0, 0.17, 0.5, 0.83, 1.0):
        o1, o2 = apply_beamsplitter(a, b, t)
        np.testing.assert_allclose(np.abs(o1) ** 2 + np.abs(o2) ** 2,
                                   np.abs(a) ** 2 + np.abs(b) ** 2, atol=1e-12)


def test_beamsplitter_rejects_bad_transmittance():
    with pytest.raises(ValueError):
        apply_beamsplitter(1.0 + 0j, 0j, 1.1)
    with pytest.raises(ValueError):
        apply_beamsplitter(1.0 + 0j, 0j, -0.1)


def test_heterodyne_noiseless_and_moments():
    rng = np.random.default_rng(5)
    assert heterodyne(1.0 + 1.0j, 0.0, rng) == (1.0, 1.0)
    x, p = heterodyne(np.zeros(10 ** 6, dtype=complex), 1.0, rng)
    assert abs(x.var() - 1.0) < 0.01
    assert abs(p.var() - 1.0) < 0.01
    x, p = heterodyne(np.full(10 ** 6, 5.0 + 0.0j), 1.0, rng)
    assert abs(x.mean() - 5.0) < 0.01
    assert abs(p.mean()) < 0.01
    with pytest.raises(ValueError):
        heterodyne(1.0 + 0j, -0.5, rng)


def test_oracle_no_thermal_light_is_pure_detection_noise():
    links = [(0.8, 1.0), (0.6, 2.0), (0.9, 0.5)]
    cov = joint_covariance_oracle(links, nbar=0.0, eve_transmittance=0.3)
    expect = np.diag([1.0, 1.0, 2.0, 2.0, 0.5, 0.5])
    np.testing.assert_allclose(cov, expect, atol=1e-15)


def test_oracle_cross_covariance_hand_value():
    # Hand propagation for the symmetric network, eta_A = eta_B = 1, tap 0.5:
    # gain_A = sqrt(0.5), gain_B = sqrt(0.25), cross = gain_A*gain_B*nbar.
    cov = joint_covariance_oracle([(1.0, 1.0), (1.0, 1.0), (1.0, 1.0)],
                                  nbar=2.0, eve_transmittance=0.5)
    assert cov[0, 2] == pytest.approx(np.sqrt(0.5) * 0.5 * 2.0, rel=1e-12)
    assert cov[1, 3] == cov[0, 2]
    assert cov[0, 1] == 0.0  # x-p uncorrelated
    assert cov[0, 0] == pytest.approx(0.5 * 2.0 + 1.0, rel=1e-12)


def test_oracle_rejects_invalid():
    with pytest.raises(ValueError):
        joint_covariance_oracle([(1.2, 1.0), (1.0, 1.0), (1.0, 1.0)], 1.0)
    with pytest.raises(ValueError):
        joint_covariance_oracle([(1.0, 1.0), (1.0, 1.0)], 1.0)
    with pytest.raises(ValueError):
        joint_covariance_oracle([(1.0, 1.0), (1.0, 1.0), (1.0, 1.0)], 1.0, 1.4)


def _simulate_rounds(links, nbar, t_eve, n, rng, d0=0.0):
    field = sample_source_field(SourceParams(nbar=nbar, d0=d0), np.zeros(n), rng)
    alice, broadcast = apply_beamsplitter(field, 0.0, 0.5)
    bob, eve = eve_tap(broadcast, t_eve)
    rows = []
    for arm, (eta, noise) in zip((alice, bob, eve), links):
        x, p = heterodyne(np.sqrt(eta) * arm, noise, rng)
        rows += [x, p]
    return np.stack(rows)


def test_sampler_matches_oracle():
    rng = np.random.default_rng(11)
    links = [(0.7, 1.0), (0.9, 1.5), (0.5, 0.8)]
    nbar, t_eve, n = 3.0, 0.4, 400_000
    oracle = joint_covariance_oracle(links, nbar, t_eve)
    emp = np.cov(_simulate_rounds(links, nbar, t_eve, n, rng))
    se = np.sqrt((np.outer(np.diag(oracle), np.diag(oracle)) + oracle ** 2) / n)
    assert np.all(np.abs(emp - oracle) < 5 * se)


def test_fluctuations_independent_of_displacement():
    links = [(0.8, 1.0), (0.8, 1.0), (0.8, 1.0)]
    small = np.cov(_simulate_rounds(links, 2.0, 0.5, 300_000,
                                    np.random.default_rng(21), d0=0.0))
    large = np.cov(_simulate_rounds(links, 2.0, 0.5, 300_000,
                                    np.random.default_rng(21), d0=10.0))
    assert np.all(np.abs(small - large) < 0.02)


def test_thermal_heterodyne_shows_bunching():
    # Hanbury Brown-Twiss signature: g2(0) = 2 for thermal light, 1 at long lag.
    rng = np.random.default_rng(33)
    field = sample_source_field(SourceParams(nbar=5.0, d0=0.0), np.zeros(10 ** 6), rng)
    x, p = heterodyne(field, 1.0, rng)
    intensity = x * x + p * p
    assert abs(g2(intensity, 0) - 2.0) < 0.05
    assert abs(g2(intensity, 1000) - 1.0) < 0.05
