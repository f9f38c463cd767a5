import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import MIX_CYCLE
from fuzz import random_family
from switch_verdict.certkit import (
    CertificateSet,
    EdgeGains,
    Stability,
    SubsystemCertificate,
    SubsystemFamily,
    build_certificate_set,
)
from switch_verdict.errors import EmptyTail, MissingEdgeGain
from switch_verdict.sigkit import (
    AsymptoticStatistics,
    SwitchingSignal,
    periodic_from_cycle,
    random_admissible,
    stats_at,
)
from switch_verdict.verdikt import (
    Classification,
    EvaluationMode,
    classify,
    empirical_margins,
    envelope_exponents,
    envelope_series,
    instability_margin,
    label,
    stability_margin,
)


def test_rotation_margins(rot_certs, alternating):
    _, asym = alternating
    assert stability_margin(asym, rot_certs) == pytest.approx(0.1028, abs=2e-3)
    assert instability_margin(asym, rot_certs) == pytest.approx(-0.9028, abs=2e-3)
    report = classify(asym, rot_certs)
    assert report.classification is Classification.UNDETERMINED
    assert report.evaluation_mode is EvaluationMode.ASYMPTOTIC


def test_mixed_margin(mix_certs, mix_periodic):
    _, asym = mix_periodic
    assert instability_margin(asym, mix_certs) == pytest.approx(0.1064, abs=2e-3)
    assert classify(asym, mix_certs).classification is Classification.DESTABILIZING


def test_prime_margins(prime_certs, alternating):
    _, asym = alternating
    assert stability_margin(asym, prime_certs) == pytest.approx(0.6839, abs=2e-3)
    assert instability_margin(asym, prime_certs) == pytest.approx(-0.1277, abs=2e-3)
    assert classify(asym, prime_certs).classification is Classification.UNDETERMINED


def test_constant_stable_signal(rot_certs):
    asym = AsymptoticStatistics(nu=0.0, eta={1: 1.0})
    assert stability_margin(asym, rot_certs) == -rot_certs[1].lambda_hat
    assert instability_margin(asym, rot_certs) == -rot_certs[1].lambda_check
    assert classify(asym, rot_certs).classification is Classification.STABILIZING


def test_missing_edge_gain(mix_certs):
    asym = AsymptoticStatistics(nu=0.1, rho={(1, 4): 1.0}, eta={1: 0.5, 4: 0.5})
    with pytest.raises(MissingEdgeGain):
        stability_margin(asym, mix_certs)


def test_label_strictness():
    assert label(-1e-10, -1.0) is Classification.UNDETERMINED
    assert label(-2e-9, -1.0) is Classification.STABILIZING
    assert label(1.0, 1e-10) is Classification.UNDETERMINED
    assert label(1.0, 2e-9) is Classification.DESTABILIZING


def test_envelope_pure_dwell(rot_certs):
    sig = SwitchingSignal.constant(1)
    env = envelope_exponents(sig, rot_certs, 3)
    assert env.psi == pytest.approx(-rot_certs[1].lambda_check * 3, rel=1e-14)
    assert env.phi == pytest.approx(-rot_certs[1].lambda_hat * 3, rel=1e-14)


def test_envelope_rotation_t100(rot_certs, alternating):
    sig, _ = alternating
    assert envelope_exponents(sig, rot_certs, 100).phi == pytest.approx(10.28, abs=0.2)


def test_envelope_series_matches_pointwise(mix_certs, mix_periodic):
    sig, _ = mix_periodic
    times = [0.0, 0.5, 10.0, 10.0 + 1e-9, 57.3, 160.0, 333.3]
    psi, phi = envelope_series(sig, mix_certs, times)
    for t, a, b in zip(times, psi, phi):
        if t == 0:
            assert a == 0.0 and b == 0.0
            continue
        env = envelope_exponents(sig, mix_certs, Fraction(t))
        assert a == pytest.approx(env.psi, rel=1e-12, abs=1e-12)
        assert b == pytest.approx(env.phi, rel=1e-12, abs=1e-12)


def test_empirical_margins_converge(rot_certs, alternating):
    sig, asym = alternating
    report = empirical_margins(sig, rot_certs, 200, 0.5)
    assert report.evaluation_mode is EvaluationMode.EMPIRICAL_TAIL
    exact = classify(asym, rot_certs)
    assert report.phi_hat_margin == pytest.approx(exact.phi_hat_margin, abs=5e-2)
    assert report.phi_check_margin == pytest.approx(exact.phi_check_margin, abs=5e-2)
    # sup / inf over the window bracket the limits
    assert report.phi_hat_margin >= exact.phi_hat_margin - 1e-12
    assert report.phi_check_margin <= exact.phi_check_margin + 1e-12


def test_empirical_constant(rot_certs):
    report = empirical_margins(SwitchingSignal.constant(2), rot_certs, 50)
    assert report.phi_hat_margin == -rot_certs[2].lambda_hat
    assert report.classification is Classification.STABILIZING


def test_empirical_empty_tail(rot_certs):
    sig = SwitchingSignal(1, ((30, 2),))
    with pytest.raises(EmptyTail):
        empirical_margins(sig, rot_certs, 20, 0.5)


def test_empirical_bad_fraction(rot_certs, alternating):
    with pytest.raises(ValueError):
        empirical_margins(alternating[0], rot_certs, 100, 1.0)


def _synthetic_certs(rng, n_modes):
    """Certificate scalars obeying the sign discipline, without matrices behind them."""
    family = SubsystemFamily(1, {p: np.array([[(-1.0) ** p]]) for p in range(1, n_modes + 1)},
                             frozenset((p, q) for p in range(1, n_modes + 1)
                                       for q in range(1, n_modes + 1) if p != q))
    certs = {}
    for p in family.modes:
        stable = bool(rng.integers(2))
        if stable:
            lh = float(rng.uniform(1e-3, 5))
            lc = lh + float(rng.exponential(2))
        else:
            lc = -float(rng.uniform(0, 5))
            lh = lc - float(rng.exponential(2))
        certs[p] = SubsystemCertificate(
            mode=p, stability=Stability.STABLE if stable else Stability.UNSTABLE,
            Q=np.eye(1), epsilon=0.0 if stable else 1.0, P=np.eye(1),
            lambda_hat=lh, lambda_check=lc)
    gains = {}
    for e in sorted(family.edges):
        mc = float(np.exp(rng.normal(scale=3)))
        gains[e] = EdgeGains(e, mu_hat=mc * float(np.exp(rng.exponential(2))), mu_check=mc)
    return CertificateSet(family, certs, gains)


def _random_stats(rng, certs):
    modes = certs.family.modes
    eta = rng.dirichlet(np.ones(len(modes)))
    edges = sorted(certs.gains)
    rho = rng.dirichlet(np.ones(len(edges))) if edges else []
    nu = float(rng.exponential(1.0)) if edges and rng.random() < 0.9 else 0.0
    return AsymptoticStatistics(nu=nu, rho=dict(zip(edges, rho)) if nu else {},
                                eta=dict(zip(modes, eta)))


def test_domination_and_exclusivity_synthetic():
    rng = np.random.default_rng(2024)
    for _ in range(2000):
        certs = _synthetic_certs(rng, int(rng.integers(1, 5)))
        st_ = _random_stats(rng, certs)
        r = classify(st_, certs)
        assert r.phi_check_margin <= r.phi_hat_margin + 1e-12
        if r.classification is Classification.DESTABILIZING:
            assert r.phi_hat_margin > 0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_domination_real_certificates(seed):
    rng = np.random.default_rng(seed)
    certs = build_certificate_set(random_family(rng))
    for _ in range(40):
        st_ = _random_stats(rng, certs)
        assert instability_margin(st_, certs) <= stability_margin(st_, certs) + 1e-12


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.05, 20.0))
def test_scale_covariance(seed, c):
    rng = np.random.default_rng(seed)
    certs = _synthetic_certs(rng, 3)
    cycle = [(1, float(rng.uniform(0.1, 5))), (2, float(rng.uniform(0.1, 5))),
             (3, float(rng.uniform(0.1, 5)))]
    _, base = periodic_from_cycle(cycle)
    _, scaled = periodic_from_cycle([(m, d * c) for m, d in cycle])
    assert scaled.nu == pytest.approx(base.nu / c, rel=1e-12)
    assert scaled.rho == pytest.approx(base.rho, rel=1e-12)
    assert scaled.eta == pytest.approx(base.eta, rel=1e-12)
    for kind, fn in (("hat", stability_margin), ("check", instability_margin)):
        edge_term = base.nu * sum(
            math.log(getattr(certs.gains[e], f"mu_{kind}")) * r for e, r in base.rho.items())
        mode_term = fn(base, certs) - edge_term
        assert fn(scaled, certs) == pytest.approx(edge_term / c + mode_term, rel=1e-12, abs=1e-12)


def test_psi_is_t_times_margin(mix_certs, mix_family):
    rng = np.random.default_rng(1)
    for seed in range(20):
        sig = random_admissible(mix_family, seed, 3.0, 200)
        for t in rng.uniform(0.1, 200, size=20):
            t = Fraction(float(t))
            s = stats_at(sig, t)
            env = envelope_exponents(sig, mix_certs, t)
            if s.N == 0:
                continue
            tf = float(t)
            assert env.psi == pytest.approx(tf * instability_margin(s, mix_certs), rel=1e-12, abs=1e-12)
            assert env.phi == pytest.approx(tf * stability_margin(s, mix_certs), rel=1e-12, abs=1e-12)


def test_psi_below_phi_random_signals():
    rng = np.random.default_rng(3)
    for _ in range(10):
        fam = random_family(rng)
        certs = build_certificate_set(fam)
        sig = random_admissible(fam, int(rng.integers(1 << 30)), 2.0, 100)
        times = np.sort(rng.uniform(0, 100, size=100))
        psi, phi = envelope_series(sig, certs, times)
        assert np.all(psi <= phi + 1e-12 * np.maximum(1, np.abs(phi)))


def test_mixed_periodic_empirical_agrees(mix_certs, mix_periodic):
    sig, asym = mix_periodic
    report = empirical_margins(sig, mix_certs, 20 * sig.cycle.period)
    exact = classify(asym, mix_certs)
    assert report.classification is exact.classification
    assert report.phi_check_margin <= exact.phi_check_margin + 1e-12
    assert report.phi_check_margin == pytest.approx(exact.phi_check_margin, abs=5e-2)


def test_margin_report_dict(mix_certs, mix_periodic):
    d = classify(mix_periodic[1], mix_certs).as_dict()
    assert d["classification"] == "Destabilizing"
    assert d["evaluation_mode"] == "Asymptotic"
    assert set(d) == {"stability_margin", "instability_margin", "evaluation_mode", "classification"}


def test_mixed_cycle_is_the_eulerian_cycle():
    assert [m for m, _ in MIX_CYCLE] == [1, 2, 4, 3, 1, 3, 4, 2]
