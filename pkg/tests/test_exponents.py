"""Analytic exponent formulas, balance-equation solves, and slope fitting."""

import numpy as np
import pytest
from scipy import integrate

from macfeedback import (
    ExponentCurve,
    SubsetSpec,
    curve_tabulate,
    dmt_mac,
    dmt_single_user,
    hybrid_exponent,
    informed_transmitter_bound,
    loglog_slope,
    lower_bound_mc,
    make_config,
    separated_exponent,
    sic_exponent,
)


def test_dmt_single_user_values():
    assert dmt_single_user(1, 4, 0.0) == 4.0
    assert dmt_single_user(1, 4, 1.0) == 0.0
    assert dmt_single_user(2, 2, 0.5) == pytest.approx(2.5, abs=1e-12)
    assert dmt_single_user(4, 4, 0.0) == 16.0
    # integer breakpoints are (k, (n_t-k)(n_r-k))
    for k in range(5):
        assert dmt_single_user(4, 4, float(k)) == (4 - k) ** 2


def test_dmt_single_user_domain():
    with pytest.raises(ValueError):
        dmt_single_user(1, 4, 1.5)
    with pytest.raises(ValueError):
        dmt_single_user(1, 4, -0.5)
    with pytest.raises(ValueError):
        dmt_single_user(0, 4, 0.0)


def test_dmt_mac_values():
    assert dmt_mac(4, 1, 4, 0.5) == pytest.approx(2.0, abs=1e-12)
    assert dmt_mac(4, 1, 4, 0.0) == 4.0
    assert dmt_mac(2, 2, 2, 0.5) == pytest.approx(2.5, abs=1e-12)
    # K(1 - r) specialization for N_t = 1, M = K
    for r in (0.1, 0.25, 0.6, 0.9):
        assert dmt_mac(4, 1, 4, r) == pytest.approx(4 * (1 - r), abs=1e-12)


def test_dmt_mac_domain():
    with pytest.raises(ValueError):
        dmt_mac(4, 1, 4, 1.5)     # beyond min{N_t, M/K}
    with pytest.raises(ValueError):
        dmt_mac(2, 2, 2, 1.5)     # pooled rate K*r would exceed M
    with pytest.raises(ValueError):
        dmt_mac(0, 1, 4, 0.0)


def test_dmt_mac_continuous_at_threshold():
    # the single-user and pooled branches must agree where the regime flips
    for K, n_t, M in [(4, 1, 4), (2, 2, 2), (2, 2, 4), (3, 1, 6), (2, 1, 2)]:
        thr = min(n_t, M / (K + 1))
        left = dmt_single_user(n_t, M, thr)
        right = dmt_single_user(K * n_t, M, K * thr)
        assert abs(left - right) <= 1e-12


def test_subset_spec():
    ss = SubsetSpec.for_size(3, 2, 4)
    assert (ss.size, ss.m, ss.n) == (3, 4, 6)
    with pytest.raises(ValueError):
        SubsetSpec.for_size(0, 1, 4)


def test_informed_transmitter_bound_values():
    assert informed_transmitter_bound(4, 1, 4, 2.0) == pytest.approx(2.0, abs=1e-12)
    assert informed_transmitter_bound(4, 1, 4, 100.0) == pytest.approx(4.0, abs=1e-12)
    assert informed_transmitter_bound(2, 2, 2, 4.0) == pytest.approx(4.0, abs=1e-12)


def test_informed_bound_is_min_b_K_for_single_antenna_square():
    for b in (0.5, 1.0, 1.75, 3.0, 4.0, 5.5, 8.0, 100.0):
        assert informed_transmitter_bound(4, 1, 4, b) == pytest.approx(
            min(b, 4.0), abs=1e-12)


def test_separated_exponent_closed_forms():
    delta, r = separated_exponent(4, 1, 4, 2.0)
    assert delta == pytest.approx(4.0 / 3.0, abs=1e-9)
    assert r == pytest.approx(2.0 / 3.0, abs=1e-9)
    delta, r = separated_exponent(4, 1, 4, 4.0)
    assert delta == pytest.approx(2.0, abs=1e-9)
    assert r == pytest.approx(0.5, abs=1e-9)
    delta, r = separated_exponent(1, 1, 1, 3.0)
    assert delta == pytest.approx(0.75, abs=1e-9)
    assert r == pytest.approx(0.25, abs=1e-9)
    # bK/(K+b) for N_t=1, M=K across b
    for K in (2, 3, 4):
        for b in (1.0, 2.5, 4.0, 7.0):
            delta, r = separated_exponent(K, 1, K, b)
            assert delta == pytest.approx(b * K / (K + b), abs=1e-9)
            assert r == pytest.approx(K / (K + b), abs=1e-9)


def test_hybrid_exponent_closed_forms():
    assert hybrid_exponent(4, 1, 4, 4.0)[0] == pytest.approx(16.0 / 7.0, abs=1e-9)
    assert hybrid_exponent(4, 1, 4, 1.0)[0] == pytest.approx(1.0, abs=1e-9)
    assert hybrid_exponent(4, 1, 4, 2.0)[0] == pytest.approx(1.6, abs=1e-9)
    for K in (2, 3, 4):
        for b in (1.0, 2.0, 4.0, 6.0):
            delta, _ = hybrid_exponent(K, 1, K, b)
            assert delta == pytest.approx(b * K / (K + b - 1), abs=1e-9)


def test_hybrid_exponent_domain():
    with pytest.raises(ValueError):
        hybrid_exponent(4, 1, 2, 4.0)      # fewer receive antennas than users
    with pytest.raises(ValueError):
        hybrid_exponent(2, 1, 2, 0.5)      # less than one use per sample


def test_sic_exponent():
    assert sic_exponent(1.0) == 0.5
    assert sic_exponent(4.0) == pytest.approx(0.8, abs=1e-12)
    assert sic_exponent(1e9) == pytest.approx(1.0, abs=1e-6)
    bs = np.linspace(0.1, 50, 200)
    vals = np.array([sic_exponent(b) for b in bs])
    assert np.all(np.diff(vals) > 0) and np.all(vals < 1)
    with pytest.raises(ValueError):
        sic_exponent(0.0)


def test_balance_equation_residuals():
    for K, n_t, M in [(4, 1, 4), (2, 1, 2), (2, 2, 4), (3, 1, 4)]:
        for b in (1.0, 2.0, 4.0, 8.0):
            delta, r = separated_exponent(K, n_t, M, b)
            assert abs(b * r - dmt_mac(K, n_t, M, r)) <= 1e-9
            assert delta == pytest.approx(b * r, abs=1e-12)
            if M >= K:
                delta_h, r_h = hybrid_exponent(K, n_t, M, b)
                ntp = min(n_t, M // K)
                lhs = 1.0 + (r_h / ntp) * (ntp * b - 1.0)
                assert abs(lhs - dmt_mac(K, n_t, M, r_h)) <= 1e-9
                assert delta_h == pytest.approx(lhs, abs=1e-9)


def test_exponent_ordering_on_dense_grid():
    """sic <= separated <= hybrid <= informed bound for N_t=1, M=K."""
    for b in np.linspace(1.0, 10.0, 37):
        sic = sic_exponent(b)
        sep = separated_exponent(4, 1, 4, b)[0]
        hyb = hybrid_exponent(4, 1, 4, b)[0]
        ub = informed_transmitter_bound(4, 1, 4, b)
        assert sic <= sep + 1e-9
        assert sep <= hyb + 1e-9
        assert hyb <= ub + 1e-9
        assert hyb >= 1.0 - 1e-9


def test_separated_strictly_below_bound():
    for b in (1.5, 2.0, 4.0, 10.0, 50.0):
        sep = separated_exponent(4, 1, 4, b)[0]
        assert sep < informed_transmitter_bound(4, 1, 4, b) - 1e-6


def test_lower_bound_at_zero_snr():
    cfg = make_config(K=2, N_t=1, M=2, b=2, S=4)
    est, se = lower_bound_mc(cfg, 0.0, 64)
    assert est == pytest.approx(1.0, abs=1e-15)
    assert se == pytest.approx(0.0, abs=1e-15)


def test_lower_bound_scalar_quadrature_oracle():
    """K=N_t=M=1, b=1: E[exp(-R)] = E[1/(1+rho|h|^2)] with |h|^2 ~ Exp(1)."""
    rho = 10.0
    oracle, err = integrate.quad(lambda t: np.exp(-t) / (1.0 + rho * t), 0, np.inf)
    assert err < 1e-7
    cfg = make_config(K=1, N_t=1, M=1, b=1, S=4, seed=77)
    est, se = lower_bound_mc(cfg, rho, 20_000)
    assert abs(est - oracle) < 3 * se


def test_lower_bound_slope_matches_exponent():
    # finite-SNR slope of the genie bound approaches min{b, K} = 4
    cfg = make_config(K=4, N_t=1, M=4, b=4, S=4, seed=5)
    rhos = 10.0 ** np.array([3.0, 4.0, 5.0])      # 30, 40, 50 dB
    vals = np.array([lower_bound_mc(cfg, r, 20_000)[0] for r in rhos])
    slope, _ = loglog_slope(rhos, vals, upper_half=False)
    assert abs(slope - 4.0) < 0.4


def test_curve_tabulate_kinds():
    ub = curve_tabulate("upper_bound", 4, 1, 4, range(1, 9))
    assert np.allclose(ub.ys, np.minimum(ub.xs, 4.0))
    sep = curve_tabulate("separated", 4, 1, 4, [2.0, 4.0])
    assert np.allclose(sep.ys, [4.0 / 3.0, 2.0], atol=1e-9)
    sic = curve_tabulate("sic", 4, 1, 4, [4.0])
    assert sic.ys[0] == pytest.approx(0.8, abs=1e-12)
    dmt = curve_tabulate("dmt_mac", 4, 1, 4, [0.0, 0.5, 1.0])
    assert np.allclose(dmt.ys, [4.0, 2.0, 0.0], atol=1e-12)
    with pytest.raises(ValueError):
        curve_tabulate("nonsense", 4, 1, 4, [1.0])


def test_exponent_curve_requires_increasing_x():
    with pytest.raises(ValueError):
        ExponentCurve(points=((1.0, 1.0), (1.0, 2.0)), kind="sic")
    with pytest.raises(ValueError):
        ExponentCurve(points=((2.0, 1.0), (1.0, 2.0)), kind="sic")


def test_loglog_slope_exact_power_law():
    rho = np.logspace(1, 4, 7)
    vals = 3.7 * rho ** (-4.0 / 3.0)
    slope, se = loglog_slope(rho, vals)
    assert slope == pytest.approx(4.0 / 3.0, abs=1e-9)
    assert se == pytest.approx(0.0, abs=1e-9)


def test_loglog_slope_upper_half_window():
    # off-trend low-SNR point must not leak into the asymptotic fit:
    # the last three points obey rho^-2 exactly, the first one does not
    rho = np.array([1.0, 1e2, 1e3, 1e4])
    vals = np.array([1e6, 1e-4, 1e-6, 1e-8])
    slope, _ = loglog_slope(rho, vals)
    assert slope == pytest.approx(2.0, abs=1e-9)
    # three-point grids keep all points even though half would be two
    rho3 = np.array([1e2, 1e3, 1e4])
    vals3 = np.array([2e-4, 1e-6, 0.5e-8])
    full = loglog_slope(rho3, vals3, upper_half=False)[0]
    assert loglog_slope(rho3, vals3)[0] == pytest.approx(full, abs=1e-12)


def test_loglog_slope_rejects_bad_input():
    rho = np.logspace(1, 2, 4)
    with pytest.raises(ValueError):
        loglog_slope(rho[:2], np.ones(2))
    with pytest.raises(ValueError):
        loglog_slope(rho, np.array([1.0, -1.0, 1.0, 1.0]))
    with pytest.raises(ValueError):
        loglog_slope(rho, np.ones((2, 2)))


def test_loglog_slope_noisy_stderr():
    rng = np.random.default_rng(0)
    rho = np.logspace(1, 5, 9)
    vals = rho ** -2.0 * np.exp(rng.normal(0, 0.05, rho.size))
    slope, se = loglog_slope(rho, vals, upper_half=False)
    assert se > 0
    assert abs(slope - 2.0) < 5 * max(se, 0.02)
