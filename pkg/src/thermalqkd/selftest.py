"""Quick invariant suite backing the ``selftest`` CLI subcommand.

A fast subset of the property checks from the test suite, runnable without
pytest. Prints one PASS/FAIL line per check; exit code 0 when all pass,
2 otherwise.
"""

from __future__ import annotations

import math

import numpy as np

from .channels import ChannelParams, apply_channel, eve_tap
from .distill import advantage_distill, bit_error_rate
from .harness import run_scenario, waveguide_scenario
from .infotheory import conditional_mutual_information, g2, mutual_information
from .modem import bits_to_symbols, estimate_delay, symbols_to_bits
from .optics import (SourceParams, apply_beamsplitter, heterodyne,
                     joint_covariance_oracle, sample_source_field)


def _check_beamsplitter(rng, n):
    a = rng.normal(size=n) + 1j * rng.normal(size=n)
    b = rng.normal(size=n) + 1j * rng.normal(size=n)
    for t in (0.0, 0.3, 0.5, 1.0):
        o1, o2 = apply_beamsplitter(a, b, t)
        before = np.abs(a) ** 2 + np.abs(b) ** 2
        after = np.abs(o1) ** 2 + np.abs(o2) ** 2
        if not np.allclose(before, after, atol=1e-10):
            return False
    return True


def _check_sampler_oracle(rng, n):
    nbar, t_eve = 2.0, 0.4
    links = [(0.8, 1.0), (0.7, 1.2), (0.9, 0.8)]
    oracle = joint_covariance_oracle(links, nbar, t_eve)
    params = SourceParams(nbar=nbar, d0=0.0)
    field = sample_source_field(params, np.zeros(n), rng)
    alice, broadcast = apply_beamsplitter(field, 0.0, 0.5)
    bob, eve = eve_tap(broadcast, t_eve)
    outcomes = []
    for arm, (eta, nv) in zip((alice, bob, eve), links):
        x, p = heterodyne(np.sqrt(eta) * arm, nv, rng)
        outcomes += [x, p]
    emp = np.cov(np.stack(outcomes))
    se = np.sqrt((np.outer(np.diag(oracle), np.diag(oracle)) + oracle ** 2) / n)
    return bool(np.all(np.abs(emp - oracle) < 5 * se))


def _check_thermal_g2(rng, n):
    field = sample_source_field(SourceParams(nbar=3.0, d0=0.0), np.zeros(n), rng)
    x, p = heterodyne(field, 1.0, rng)
    return abs(g2(x * x + p * p, 0) - 2.0) < 0.05


def _check_delay(rng, trials, n):
    ok = 0
    for _ in range(trials):
        ref = rng.integers(0, 4, n)
        shift = int(rng.integers(-300, 301))
        rx = np.roll(ref, shift)
        fill = rng.integers(0, 4, abs(shift))
        if shift > 0:
            rx[:shift] = fill
        elif shift < 0:
            rx[shift:] = fill
        if estimate_delay(ref, rx, 300).lag == shift:
            ok += 1
    return ok == trials


def _check_bits_roundtrip(rng, n):
    bits = rng.integers(0, 2, 2 * n, dtype=np.uint8)
    return bool(np.array_equal(symbols_to_bits(bits_to_symbols(bits)), bits))


def _check_bsc_mi():
    eps = 0.113
    counts = np.array([[887, 113], [113, 887]]) * 1000
    expect = 1 + eps * math.log2(eps) + (1 - eps) * math.log2(1 - eps)
    return abs(mutual_information(counts) - expect) < 1e-9


def _check_cmi_bruteforce(rng, tables):
    for _ in range(tables):
        counts = rng.integers(1, 1000, (2, 2, 2))
        total = counts.sum()
        p_e = counts.sum(axis=(0, 1)) / total
        expect = sum(p_e[e] * mutual_information(counts[:, :, e]) for e in range(2))
        if abs(conditional_mutual_information(counts) - expect) > 1e-12:
            return False
    return True


def _check_distillation(rng, n):
    eps = 0.113
    a = rng.integers(0, 2, n, dtype=np.uint8)
    b = a ^ (rng.random(n) < eps).astype(np.uint8)
    a2, b2, kept = advantage_distill(a, b, 2, rng)
    expect_kept = eps ** 2 + (1 - eps) ** 2
    expect_err = eps ** 2 / expect_kept
    return (abs(kept - expect_kept) < 0.02
            and abs(bit_error_rate(a2, b2) - expect_err) < 0.005)


def _check_channel_intensity(rng, n):
    stream = rng.normal(size=n) + 1j * rng.normal(size=n)
    out = apply_channel(stream, ChannelParams(transmittance=0.36), rng)
    return np.allclose(np.abs(out) ** 2, 0.36 * np.abs(stream) ** 2, atol=1e-10)


def _check_determinism():
    cfg = waveguide_scenario(seed=11, n_symbols=20_000)
    first = run_scenario(cfg)
    second = run_scenario(cfg)
    return (first.report.to_json() == second.report.to_json()
            and all(np.array_equal(first.parties[p].z, second.parties[p].z)
                    for p in ("alice", "bob", "eve")))


def run_selftest(full: bool = False) -> int:
    scale = 5 if full else 1
    rng = np.random.default_rng(987)
    checks = [
        ("beamsplitter energy conservation", lambda: _check_beamsplitter(rng, 2000)),
        ("sampler matches covariance oracle", lambda: _check_sampler_oracle(rng, 200_000 * scale)),
        ("thermal heterodyne g2(0) = 2", lambda: _check_thermal_g2(rng, 200_000 * scale)),
        ("delay recovery on planted shifts", lambda: _check_delay(rng, 25 * scale, 5000)),
        ("bit/symbol mapping round trip", lambda: _check_bits_roundtrip(rng, 5000)),
        ("BSC mutual information analytic", _check_bsc_mi),
        ("conditional MI matches brute force", lambda: _check_cmi_bruteforce(rng, 25 * scale)),
        ("advantage distillation analytic", lambda: _check_distillation(rng, 200_000 * scale)),
        ("channel intensity scaling", lambda: _check_channel_intensity(rng, 5000)),
        ("scenario determinism", _check_determinism),
    ]
    failures = 0
    for name, check in checks:
        try:
            ok = check()
        except Exception as exc:
            ok = False
            name = f"{name} ({exc})"
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
        failures += not ok
    print(f"{len(checks) - failures}/{len(checks)} checks passed")
    return 0 if failures == 0 else 2
