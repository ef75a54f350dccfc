"""Acceptance gate: one test per release criterion.

Each test prints a PASS line with the measured values once its asserts
hold, so `pytest -v -s tests/test_acceptance.py` reads as a checklist.
The Monte-Carlo criteria pin their seeds and reuse the library's own
sweep driver, so every run reproduces the same numbers.
"""

import numpy as np
import pytest

from macfeedback import (
    dmt_mac,
    hybrid_exponent,
    informed_transmitter_bound,
    loglog_slope,
    separated_exponent,
    sic_exponent,
)
from macfeedback.harness import (
    ExperimentSpec,
    default_analytic_curves,
    emit_curves,
    run_asymmetric,
    run_sweep,
)
from macfeedback.phy import (
    QamSpec,
    lmmse_estimate,
    min_distance_experiment,
    ml_joint_decode,
    qam_dmt_experiment,
    rate_schedule,
    sphere_decode,
)
from macfeedback.quantizer import QuantizerSpec, distortion_rate

TOL = 1e-9


# ---------------------------------------------------------------------------
# 1. closed-form exponent suite
# ---------------------------------------------------------------------------

def test_criterion_01_exponent_closed_forms():
    for b in (0.5, 1.0, 2.0, 3.0, 4.0, 8.0):
        assert abs(informed_transmitter_bound(4, 1, 4, b) - min(b, 4.0)) < TOL
    delta, r = separated_exponent(4, 1, 4, 2.0)
    assert abs(delta - 4.0 / 3.0) < TOL and abs(r - 2.0 / 3.0) < TOL
    delta, r = separated_exponent(4, 1, 4, 4.0)
    assert abs(delta - 2.0) < TOL and abs(r - 0.5) < TOL
    for b, want in ((1.0, 1.0), (2.0, 1.6), (4.0, 16.0 / 7.0)):
        assert abs(hybrid_exponent(4, 1, 4, b)[0] - want) < TOL
    assert abs(sic_exponent(4.0) - 0.8) < TOL
    for r in (0.0, 0.25, 0.5, 0.75, 1.0):
        assert abs(dmt_mac(4, 1, 4, r) - 4.0 * (1.0 - r)) < TOL
    print("PASS criterion 1: exponent closed forms exact to 1e-9")


# ---------------------------------------------------------------------------
# 2. rate schedule operating points
# ---------------------------------------------------------------------------

def test_criterion_02_rate_schedule_points():
    lo = rate_schedule(12.0412, 0.5, 4.0)
    assert lo.Q == 2 and lo.R_s == 8          # 4-QAM
    hi = rate_schedule(24.0824, 0.5, 4.0)
    assert hi.Q == 4 and hi.R_s == 16         # 16-QAM
    print("PASS criterion 2: 12.04 dB -> 4-QAM/R_s=8, 24.08 dB -> 16-QAM/R_s=16")


# ---------------------------------------------------------------------------
# 3. sphere decoder equals exhaustive ML
# ---------------------------------------------------------------------------

def test_criterion_03_sphere_matches_exhaustive():
    rng = np.random.default_rng(0xACCE55)
    rhos = (1.0, 10.0, 100.0)
    for K, Q in ((2, 2), (2, 4), (4, 2), (4, 4)):
        spec = QamSpec(Q)
        matches = 0
        n = 10_000
        for i in range(n):
            H = (rng.standard_normal((K, K)) + 1j * rng.standard_normal((K, K)))
            H *= np.sqrt(0.5)
            x = rng.choice(spec.scaled_alphabet, size=K)
            w = (rng.standard_normal(K) + 1j * rng.standard_normal(K))
            w *= np.sqrt(0.5)
            rho = rhos[i % 3]
            y = np.sqrt(rho) * (H @ x) + w
            ref = ml_joint_decode(y, H, rho, spec)
            got = sphere_decode(y, H, rho, spec)
            matches += np.array_equal(got, ref)
        assert matches == n, f"(K={K}, Q={Q}): {n - matches} mismatches"
    print("PASS criterion 3: sphere decoder == exhaustive ML on 4x10^4 instances")


# ---------------------------------------------------------------------------
# 4. LMMSE theory and empirical agreement
# ---------------------------------------------------------------------------

def test_criterion_04_lmmse_identity():
    rng = np.random.default_rng(0x11A35E)
    for _ in range(100):
        M = int(rng.integers(2, 6))
        N = int(rng.integers(2, 6))
        L = int(rng.integers(1, 4))
        rho = float(rng.uniform(0.1, 50.0))
        H = (rng.standard_normal((M, N)) + 1j * rng.standard_normal((M, N)))
        H *= np.sqrt(0.5)
        Ya = rng.standard_normal((M, L)) + 1j * rng.standard_normal((M, L))
        _, mmse = lmmse_estimate(Ya, H, rho)
        direct = np.real(np.trace(np.linalg.inv(
            np.eye(N) + rho * (H.conj().T @ H))))
        assert abs(mmse / L - direct) < 1e-10

    worst = 0.0
    for rho in (1.0, 10.0, 100.0):
        err = 0.0
        theory = 0.0
        for _ in range(100_000):
            H = (rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
            H *= np.sqrt(0.5)
            x = (rng.standard_normal(4) + 1j * rng.standard_normal(4))
            x *= np.sqrt(0.5)
            w = (rng.standard_normal(4) + 1j * rng.standard_normal(4))
            w *= np.sqrt(0.5)
            y = (np.sqrt(rho) * (H @ x) + w)[:, None]
            xhat, mmse = lmmse_estimate(y, H, rho)
            err += float(np.sum(np.abs(xhat[:, 0] - x) ** 2))
            theory += mmse
        rel = abs(err - theory) / theory
        worst = max(worst, rel)
        assert rel < 0.02, f"rho={rho}: empirical off theory by {rel:.2%}"
    print(f"PASS criterion 4: mmse identity to 1e-10; empirical within 2% "
          f"(worst {worst:.2%})")


# ---------------------------------------------------------------------------
# 5. quantizer distortion-rate scaling
# ---------------------------------------------------------------------------

def test_criterion_05_quantizer_rate_scaling():
    d = {R: distortion_rate(QuantizerSpec(R), 1_000_000) for R in (8, 10, 12, 14)}
    ratios = {R: d[R + 2] / d[R] for R in (8, 10, 12)}
    for R, ratio in ratios.items():
        assert 0.225 < ratio < 0.275, f"R_s={R}: ratio {ratio:.4f}"
    print("PASS criterion 5: two-bit distortion ratios "
          + ", ".join(f"{r:.4f}" for r in ratios.values()) + " all in [0.225, 0.275]")


# ---------------------------------------------------------------------------
# 6. three-scheme distortion slopes; 7. per-class slopes; 8. hybrid advantage
# ---------------------------------------------------------------------------

GRID_B4 = (12.0412, 18.0618, 24.0824)
GRID_B2 = (18.0618, 27.0927, 36.1236)
GRID_HY = (12.0412, 18.0618, 24.0824, 30.1030)


def _sweep(scheme, b, grid):
    spec = ExperimentSpec(scheme=scheme, K=4, N_t=1, M=4, b=b, S=4,
                          snr_db_grid=grid, trials=100_000, seed=0)
    return spec, run_sweep(spec)[0]


@pytest.fixture(scope="module")
def three_scheme_results(tmp_path_factory):
    out = {}
    for scheme in ("separated", "analog", "ideal"):
        out[("b4", scheme)] = _sweep(scheme, 4.0, GRID_B4)
    for scheme in ("separated", "analog"):
        out[("b2", scheme)] = _sweep(scheme, 2.0, GRID_B2)
    spec, res = out[("b4", "separated")]
    path = emit_curves([res], tmp_path_factory.mktemp("emission"),
                       default_analytic_curves(spec))[0]
    with open(path, "rb") as fh:
        out["csv_bytes"] = fh.read()
    return out


def test_criterion_06_three_scheme_distortion_slopes(three_scheme_results):
    res = {k: v for k, v in three_scheme_results.items() if k != "csv_bytes"}
    sep4 = res[("b4", "separated")][1]
    ana4 = res[("b4", "analog")][1]
    idl4 = res[("b4", "ideal")][1]
    sep2 = res[("b2", "separated")][1]
    ana2 = res[("b2", "analog")][1]

    assert 1.7 < sep4.slope < 2.3, f"separated b=4 slope {sep4.slope:.3f}"
    assert 1.1 < sep2.slope < 1.55, f"separated b=2 slope {sep2.slope:.3f}"
    assert 0.8 < ana4.slope < 1.1, f"analog b=4 slope {ana4.slope:.3f}"
    assert 0.8 < ana2.slope < 1.1, f"analog b=2 slope {ana2.slope:.3f}"
    # digital tracks the zero-error reference at the top of the b=4 grid
    assert sep4.records[-1].mse <= 1.2 * idl4.records[-1].mse
    # crossover: analog wins at b=2 low SNR, digital wins at b=4 high SNR
    assert ana2.records[0].mse < sep2.records[0].mse
    assert sep4.records[-1].mse < ana4.records[-1].mse
    print(f"PASS criterion 6: slopes separated b4 {sep4.slope:.3f} / b2 "
          f"{sep2.slope:.3f}, analog b4 {ana4.slope:.3f} / b2 {ana2.slope:.3f}; "
          f"digital/ideal top ratio "
          f"{sep4.records[-1].mse / idl4.records[-1].mse:.3f}; ordering holds")


def test_criterion_07_asymmetric_per_class_slopes():
    spec = ExperimentSpec(scheme="separated", K=4, N_t=1, M=4, b=4.0, S=4,
                          snr_db_grid=GRID_B4, trials=100_000, seed=0,
                          per_user_snr_db=(24.0824, 24.0824, 12.0412, 12.0412))
    high, low = run_asymmetric(spec)
    assert 1.7 < high.slope < 2.3, f"high class slope {high.slope:.3f}"
    assert 1.7 < low.slope < 2.3, f"low class slope {low.slope:.3f}"
    print(f"PASS criterion 7: per-class slopes high {high.slope:.3f}, "
          f"low {low.slope:.3f} in [1.7, 2.3]")


def test_criterion_08_hybrid_slope_advantage():
    _, hyb = _sweep("hybrid", 4.0, GRID_HY)
    _, sep = _sweep("separated", 4.0, GRID_HY)
    assert 1.95 < hyb.slope < 2.6, f"hybrid slope {hyb.slope:.3f}"
    assert hyb.slope > sep.slope, (f"hybrid {hyb.slope:.3f} not steeper than "
                                   f"separated {sep.slope:.3f}")
    print(f"PASS criterion 8: hybrid slope {hyb.slope:.3f} in [1.95, 2.6], "
          f"steeper than separated {sep.slope:.3f} on the same seeds")


# ---------------------------------------------------------------------------
# 9. decay-probability experiments
# ---------------------------------------------------------------------------

def test_criterion_09_decay_experiments():
    r0 = qam_dmt_experiment(M=2, r=0.0,
                            snr_db_grid=(6.0, 8.0, 10.0, 12.0, 14.0, 16.0),
                            trials=100_000, seed=0)
    assert 1.6 < r0.slope < 2.4, f"fixed-rate error slope {r0.slope:.3f}"

    r_half = qam_dmt_experiment(M=2, r=0.5,
                                snr_db_grid=(24.0824, 36.1236, 48.1648),
                                trials=400_000, seed=0)
    assert 0.65 < r_half.slope < 1.35, f"half-rate error slope {r_half.slope:.3f}"

    eps = np.array([0.05, 0.1, 0.2, 0.4])
    probs = min_distance_experiment(N=2, trials=200_000, epsilons=eps, seed=0)
    slope, _ = loglog_slope(eps, probs, upper_half=False)
    cdf_slope = -slope
    assert 3.4 < cdf_slope < 4.6, f"min-distance CDF slope {cdf_slope:.3f}"
    print(f"PASS criterion 9: error slopes r=0 {r0.slope:.3f}, r=1/2 "
          f"{r_half.slope:.3f}; min-distance CDF slope {cdf_slope:.3f}")


# ---------------------------------------------------------------------------
# 10. byte-identical reproduction
# ---------------------------------------------------------------------------

def test_criterion_10_byte_identical_rerun(three_scheme_results, tmp_path):
    spec, _ = three_scheme_results[("b4", "separated")]
    rerun = run_sweep(spec)
    path = emit_curves(rerun, tmp_path, default_analytic_curves(spec))[0]
    with open(path, "rb") as fh:
        assert fh.read() == three_scheme_results["csv_bytes"]
    print("PASS criterion 10: re-run emitted byte-identical results.csv")
