import csv
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from fuzz import random_family, random_x0
from switch_verdict.certkit import SubsystemFamily, build_certificate_set
from switch_verdict.errors import DimensionMismatch, EnvelopeViolation, TooFewSamples
from switch_verdict.sigkit import SwitchingSignal, random_admissible
from switch_verdict.simkit import (
    SimConfig,
    Verdict,
    check_envelopes,
    divergence_verdict,
    log_norm_slope,
    log_value_slope,
    propagate,
    write_trace_csv,
)


def rk_oracle(family, signal, x0, horizon):
    """Adaptive DOP853 integration, restarted at every switching instant."""
    x = np.asarray(x0, dtype=float)
    for start, end, mode in signal.segments(horizon):
        A = family.matrices[mode]
        sol = solve_ivp(lambda _t, y: A @ y, (float(start), float(end)), x,
                        method="DOP853", rtol=1e-12, atol=1e-14 * np.linalg.norm(x))
        x = sol.y[:, -1]
    return x


def test_single_mode_closed_form():
    fam = SubsystemFamily(2, {1: -np.eye(2)})
    x0 = np.array([3.0, -4.0])
    traj = propagate(fam, SwitchingSignal.constant(1), x0, SimConfig(horizon=10, sample_step=Fraction(1, 10)))
    np.testing.assert_allclose(traj.norms, 5.0 * np.exp(-traj.times), rtol=1e-10)
    assert divergence_verdict(traj) is Verdict.CONVERGING


def test_samples_hit_switch_instants(mix_family, mix_periodic):
    sig, _ = mix_periodic
    traj = propagate(mix_family, sig, [1.0, 0.0], SimConfig(horizon=95, sample_step=Fraction(7, 10)))
    for tau, m in sig.switches_until(95):
        i = int(np.flatnonzero(np.isclose(traj.times, float(tau), rtol=0, atol=1e-12))[0])
        assert traj.modes[i] == m
    assert np.all(np.diff(traj.times) > 0)
    assert np.all(np.diff(traj.times) <= 0.7 + 1e-12)
    assert traj.times[-1] == pytest.approx(95)


def test_values_are_quadratic_forms(mix_family, mix_certs, mix_periodic):
    sig, _ = mix_periodic
    traj = propagate(mix_family, sig, [1.0, 2.0], SimConfig(horizon=60, sample_step=0.5), mix_certs)
    for m, x, v in zip(traj.modes, traj.states, traj.values):
        assert v == pytest.approx(x @ mix_certs[int(m)].P @ x, rel=1e-9)


def test_rk_oracle_random_cases():
    rng = np.random.default_rng(99)
    for _ in range(10):
        fam = random_family(rng, scale=0.5)
        sig = random_admissible(fam, int(rng.integers(1 << 31)), 1.5, 10)
        x0 = random_x0(rng, fam.dim)
        traj = propagate(fam, sig, x0, SimConfig(horizon=10, sample_step=0.25))
        ref = rk_oracle(fam, sig, x0, 10)
        assert np.linalg.norm(traj.states[-1] - ref) <= 1e-6 * np.linalg.norm(ref)


def test_semigroup(mix_family, mix_periodic):
    sig, _ = mix_periodic
    x0 = np.array([0.3, -1.1])
    cfg = SimConfig(horizon=Fraction(157, 2), sample_step=Fraction(1, 2))
    full = propagate(mix_family, sig, x0, cfg)
    t1 = Fraction(40)
    first = propagate(mix_family, sig, x0, SimConfig(horizon=t1, sample_step=Fraction(1, 2)))
    # restart from x(t1) with the remaining switches shifted back by t1
    rest_switches = tuple((tau - t1, m) for tau, m in sig.switches_until(cfg.horizon) if tau > t1)
    shifted = SwitchingSignal(sig.mode_at(t1), rest_switches)
    second = propagate(mix_family, shifted, first.states[-1],
                       SimConfig(horizon=cfg.horizon - t1, sample_step=Fraction(1, 2)))
    np.testing.assert_allclose(second.states[-1], full.states[-1], rtol=1e-9)


@pytest.mark.parametrize("c", [2.0, -3.0])
def test_linearity(mix_family, mix_periodic, c):
    sig, _ = mix_periodic
    x0 = np.array([0.7, 0.2])
    cfg = SimConfig(horizon=100, sample_step=0.1)
    a = propagate(mix_family, sig, x0, cfg)
    b = propagate(mix_family, sig, c * x0, cfg)
    np.testing.assert_allclose(b.states, c * a.states, rtol=1e-10, atol=0)


def test_dimension_mismatch(mix_family):
    with pytest.raises(DimensionMismatch):
        propagate(mix_family, SwitchingSignal.constant(1), [1.0, 2.0, 3.0], SimConfig(1, 0.1))


def test_sim_config_validation():
    with pytest.raises(ValueError):
        SimConfig(horizon=1, sample_step=2)
    with pytest.raises(ValueError):
        SimConfig(horizon=0, sample_step=0.1)


def test_saturation():
    fam = SubsystemFamily(1, {1: np.array([[50.0]])})
    traj = propagate(fam, SwitchingSignal.constant(1), [1.0], SimConfig(horizon=100, sample_step=1))
    assert traj.saturated
    assert traj.norms[-1] <= 1e300
    assert len(traj) < 101


def test_verdict_too_few_samples():
    fam = SubsystemFamily(1, {1: np.array([[-1.0]])})
    traj = propagate(fam, SwitchingSignal.constant(1), [1.0], SimConfig(horizon=1, sample_step=0.5))
    with pytest.raises(TooFewSamples):
        divergence_verdict(traj)


def test_saturated_is_diverging():
    fam = SubsystemFamily(1, {1: np.array([[50.0]])})
    traj = propagate(fam, SwitchingSignal.constant(1), [1.0], SimConfig(horizon=100, sample_step=0.1))
    assert divergence_verdict(traj) is Verdict.DIVERGING


def test_inconclusive_band():
    fam = SubsystemFamily(1, {1: np.array([[-1e-4]])})
    traj = propagate(fam, SwitchingSignal.constant(1), [1.0], SimConfig(horizon=100, sample_step=1))
    assert abs(log_norm_slope(traj)) < 1e-3
    assert divergence_verdict(traj) is Verdict.INCONCLUSIVE


def test_rotation_example_converges(rot_family, rot_certs, alternating):
    traj = propagate(rot_family, alternating[0], [-1.0883, 2.9263],
                     SimConfig(horizon=120, sample_step=0.1), rot_certs)
    assert divergence_verdict(traj) is Verdict.CONVERGING
    assert check_envelopes(traj, rot_certs).ok


def test_prime_example_diverges(prime_family, prime_certs, alternating):
    traj = propagate(prime_family, alternating[0], [9.0044, -9.3111],
                     SimConfig(horizon=100, sample_step=0.1), prime_certs)
    assert divergence_verdict(traj) is Verdict.DIVERGING
    assert check_envelopes(traj, prime_certs).ok


def test_mixed_example_diverges(mix_family, mix_certs, mix_periodic):
    rng = np.random.default_rng(2024)
    for x0 in rng.uniform(-10, 10, size=(10, 2)):
        traj = propagate(mix_family, mix_periodic[0], x0, SimConfig(horizon=200, sample_step=0.1), mix_certs)
        assert traj.norms[-1] > traj.norms[0]
        assert divergence_verdict(traj) is Verdict.DIVERGING
        assert check_envelopes(traj, mix_certs).ok
        assert log_value_slope(traj, 100, 200) >= 0.1064 - 0.02


def test_single_stable_mode_envelope(rot_certs):
    fam = SubsystemFamily(2, {1: rot_certs.family.matrices[1]})
    certs = build_certificate_set(fam)
    traj = propagate(fam, SwitchingSignal.constant(1), [1.0, 1.0], SimConfig(20, 0.05), certs)
    c = certs[1]
    v0 = traj.values[0]
    assert np.all(traj.values >= np.exp(-c.lambda_check * traj.times) * v0 * (1 - 1e-9))
    assert np.all(traj.values <= np.exp(-c.lambda_hat * traj.times) * v0 * (1 + 1e-9))


def test_envelopes_on_fuzzed_families():
    rng = np.random.default_rng(17)
    for _ in range(30):
        fam = random_family(rng)
        certs = build_certificate_set(fam)
        sig = random_admissible(fam, int(rng.integers(1 << 31)), float(rng.uniform(0.3, 5)), 50)
        traj = propagate(fam, sig, random_x0(rng, fam.dim), SimConfig(50, 0.1), certs)
        report = check_envelopes(traj, certs)
        assert report.ok


def test_envelope_violation_detected(rot_family, rot_certs, mix_certs, alternating):
    # values from one family checked against another family's certificates must fail
    traj = propagate(rot_family, alternating[0], [1.0, 0.0], SimConfig(60, 0.1), rot_certs)
    fake = type(rot_certs)(rot_family, {1: mix_certs[4], 2: mix_certs[4]},
                           {e: rot_certs.gains[e] for e in rot_certs.gains})
    with pytest.raises(EnvelopeViolation):
        check_envelopes(traj, fake)
    assert not check_envelopes(traj, fake, raise_on_violation=False).ok


def test_trace_csv(tmp_path, mix_family, mix_certs, mix_periodic):
    traj = propagate(mix_family, mix_periodic[0], [1.0, -1.0], SimConfig(30, 0.5), mix_certs)
    path = tmp_path / "trace.csv"
    write_trace_csv(path, traj, mix_certs)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["t", "mode", "norm_x", "V", "psi_env", "phi_env"]
    assert len(rows) == len(traj) + 1
    for row, t, n, v in zip(rows[1:], traj.times, traj.norms, traj.values):
        assert float(row[0]) == t
        assert float(row[2]) == n
        assert float(row[3]) == v
        assert float(row[4]) <= v * (1 + 1e-6) <= float(row[5]) * (1 + 1e-6) ** 2
    assert rows[1][4] == rows[1][5] == rows[1][3]


def test_log_value_slope_window(mix_family, mix_certs, mix_periodic):
    traj = propagate(mix_family, mix_periodic[0], [1.0, 0.0], SimConfig(30, 1), mix_certs)
    with pytest.raises(TooFewSamples):
        log_value_slope(traj, 100, 200)
    assert math.isfinite(log_value_slope(traj, 0, 30))
