"""End-to-end feedback schemes over one fading slot.

Every scheme takes unit-variance source samples (the channel states being
fed back), spends at most T channel uses per user with average transmit
energy T, and returns per-user reconstructions at the base station:

* separated: quantize each sample to R_s bits, Gray-map the bitstream onto
  T uncoded QAM symbols, decode all users jointly per channel use.  No CRC:
  a wrong symbol decision silently corrupts the reconstruction.
* analog: users take turns in pairs, repeating their raw samples with the
  idle time's power folded in; the base station runs joint LMMSE over all
  repetitions.  No thresholds anywhere, so its distortion decays like 1/SNR.
* hybrid: digital layer as in separated over the first T_d uses, then the
  quantization error itself, rescaled to unit variance, rides the last
  T_a = S / N_t' uses and is LMMSE-estimated to refine whatever the digital
  layer produced (right or wrong).
* ideal: quantize/dequantize only, the zero-decoding-error benchmark.

All pipelines assume single-antenna users (N_t = 1); the exponent module
covers general antenna counts analytically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exponents import hybrid_exponent, separated_exponent
from .model import (ConfigError, SystemConfig, apply_mac_channel, draw_channel,
                    draw_source)
from .phy import (QamSpec, RateSchedule, gray_demap_block, gray_map_block,
                  lmmse_estimate, rate_schedule, sphere_decode_uses)
from .quantizer import QuantizerSpec, dequantize_block, mean_distortion, quantize_block


@dataclass
class SchemeOutcome:
    """One trial's result: reconstructions and their squared errors."""

    reconstructions: np.ndarray  # (K, S) complex
    digital_error: bool          # any wrong symbol decision this slot
    per_user_se: np.ndarray      # (K,) squared error per source sample


@dataclass(frozen=True)
class HybridLayout:
    """Time and antenna split of the hybrid scheme."""

    N_t_prime: int               # analog spatial dimensions per user
    T_d: int                     # channel uses of the digital layer
    T_a: int                     # channel uses of the analog layer, = S / N_t'
    antenna_subset: tuple[int, ...]  # per-user antennas carrying the analog layer

    def __post_init__(self):
        if self.N_t_prime < 1 or self.T_d < 1 or self.T_a < 1:
            raise ConfigError("hybrid layout needs N_t' >= 1, T_d >= 1, T_a >= 1")
        if len(self.antenna_subset) != self.N_t_prime:
            raise ConfigError("antenna subset size must equal N_t'")


def make_hybrid_layout(cfg: SystemConfig) -> HybridLayout:
    """Largest analog antenna set the receiver can invert, first antennas."""
    if cfg.M < cfg.K:
        raise ConfigError(f"hybrid scheme needs M >= K (got M={cfg.M}, K={cfg.K})")
    ntp = min(cfg.N_t, cfg.M // cfg.K)
    if cfg.S % ntp:
        raise ConfigError(f"S = {cfg.S} not a multiple of N_t' = {ntp}")
    T_a = cfg.S // ntp
    if cfg.T - T_a < 1:
        raise ConfigError(f"no room for a digital layer: T = {cfg.T}, T_a = {T_a}")
    return HybridLayout(N_t_prime=ntp, T_d=cfg.T - T_a, T_a=T_a,
                        antenna_subset=tuple(range(ntp)))


def _normalize_schedules(schedule, K: int) -> list[RateSchedule]:
    if isinstance(schedule, RateSchedule):
        return [schedule] * K
    schedules = list(schedule)
    if len(schedules) != K:
        raise ConfigError(f"got {len(schedules)} schedules for {K} users")
    return schedules


def separated_schedule(cfg: SystemConfig, snr_db: float,
                       r_c: float | None = None) -> RateSchedule:
    """Operating rates of the separated scheme at one SNR.

    r_c = None tracks the exponent-optimal multiplexing rate; with integer
    b the per-slot bit budget S * R_s = T * R_c closes automatically.
    """
    if r_c is None:
        _, r_c = separated_exponent(cfg.K, cfg.N_t, cfg.M, cfg.b)
    sched = rate_schedule(snr_db, r_c, cfg.b)
    if cfg.S * sched.R_s != cfg.T * sched.R_c:
        raise ConfigError(f"bit budget S*R_s = {cfg.S * sched.R_s} does not close "
                          f"over T*R_c = {cfg.T * sched.R_c}")
    return sched


def hybrid_schedule(cfg: SystemConfig, layout: HybridLayout, snr_db: float,
                    r_c: float | None = None) -> RateSchedule:
    """Digital-layer rates of the hybrid scheme at one SNR.

    The digital layer carries S * R_s bits over only T_d uses, so
    R_s = R_c * T_d / S; R_c is bumped in even steps until that is an
    integer of at least two bits.
    """
    if r_c is None:
        _, r_c = hybrid_exponent(cfg.K, cfg.N_t, cfg.M, cfg.b)
    # b=1 placeholder: the source rate here is layout-driven, not b-tied,
    # so fractional b must not trip the separated-budget integrality check.
    base = rate_schedule(snr_db, r_c, 1.0)
    R_c = base.R_c
    while (layout.T_d * R_c) % cfg.S or (layout.T_d * R_c) // cfg.S < 2:
        R_c += 2
    return RateSchedule(snr_db=snr_db, r_c=r_c, R_c=R_c,
                        R_s=(layout.T_d * R_c) // cfg.S, Q=1 << (R_c // 2))


def _source_to_symbols(samples: np.ndarray, sched: RateSchedule, uses: int):
    """Quantize one user's samples and Gray-map the bitstream onto QAM.

    Serialization is sample-major, I bits before Q bits, MSB first; the
    stream is chopped into `uses` groups of R_c bits.
    returns: (symbols (uses,), tx_bits (uses, R_c), midpoints (S,))
    """
    qspec = QuantizerSpec(sched.R_s)
    bits, mid = quantize_block(samples, qspec)
    stream = bits.reshape(-1)
    if stream.size != uses * sched.R_c:
        raise ConfigError(f"{stream.size} source bits do not fill {uses} uses "
                          f"at {sched.R_c} bits each")
    tx_bits = stream.reshape(uses, sched.R_c)
    return gray_map_block(tx_bits, sched.qam), tx_bits, mid


def _symbols_to_samples(bit_rows: np.ndarray, sched: RateSchedule, S: int) -> np.ndarray:
    qspec = QuantizerSpec(sched.R_s)
    return dequantize_block(bit_rows.reshape(S, sched.R_s), qspec)


def _common_schedule(schedules: list[RateSchedule]) -> RateSchedule | None:
    first = schedules[0]
    return first if all(s == first for s in schedules[1:]) else None


def _digital_slot(cfg: SystemConfig, schedules: list[RateSchedule],
                  src: np.ndarray, uses: int):
    """Per-user modulated signals for a digital layer of `uses` columns."""
    common = _common_schedule(schedules)
    if common is not None:
        # one quantize/map call across users; the loop below costs ~4x more
        if cfg.S * common.R_s != uses * common.R_c:
            raise ConfigError(f"{cfg.S * common.R_s} source bits do not fill "
                              f"{uses} uses at {common.R_c} bits each")
        bits, mids = quantize_block(src, QuantizerSpec(common.R_s))
        tx_bits = bits.reshape(cfg.K, uses, common.R_c)
        X = gray_map_block(tx_bits.reshape(-1, common.R_c),
                           common.qam).reshape(cfg.K, uses)
        return X, tx_bits, mids
    X = np.empty((cfg.K, uses), dtype=complex)
    tx_bits = []
    mids = np.empty((cfg.K, cfg.S), dtype=complex)
    for k in range(cfg.K):
        X[k], bits_k, mids[k] = _source_to_symbols(src[k], schedules[k], uses)
        tx_bits.append(bits_k)
    return X, tx_bits, mids


def _decode_digital(Y: np.ndarray, H: np.ndarray, rho: np.ndarray,
                    schedules: list[RateSchedule], tx_bits):
    """Joint sphere decoding of a digital block, demapped back to bits."""
    specs = [QamSpec(s.Q) for s in schedules]
    symbols, _ = sphere_decode_uses(Y, H, rho, specs)
    common = _common_schedule(schedules)
    if common is not None:
        K, uses = symbols.shape
        rx_bits = gray_demap_block(symbols.reshape(-1),
                                   common.qam).reshape(K, uses, common.R_c)
        return rx_bits, bool(np.any(rx_bits != np.asarray(tx_bits)))
    rx_bits = []
    error = False
    for k, sched in enumerate(schedules):
        bits_k = gray_demap_block(symbols[k], sched.qam)
        error = error or bool(np.any(bits_k != tx_bits[k]))
        rx_bits.append(bits_k)
    return rx_bits, error


def _require_single_antenna(cfg: SystemConfig):
    if cfg.N_t != 1:
        raise ConfigError("scheme pipelines are built for single-antenna users")


def run_separated(cfg: SystemConfig, schedule, trial: int, *,
                  snr_db: float | None = None) -> SchemeOutcome:
    """Quantize, Gray-map, jointly decode, dequantize.

    schedule: one RateSchedule for all users or one per user (asymmetric
    SNR).  snr_db picks the grid point (or the common offset when
    cfg.per_user_snr_db is set).
    """
    _require_single_antenna(cfg)
    schedules = _normalize_schedules(schedule, cfg.K)
    for sched in schedules:
        if cfg.S * sched.R_s != cfg.T * sched.R_c:
            raise ConfigError("bit budget does not close over the slot")
    rho = cfg.rho_vector(snr_db)
    src = draw_source(cfg, trial).samples
    X, tx_bits, _ = _digital_slot(cfg, schedules, src, cfg.T)
    chan = draw_channel(cfg, trial)
    Y = apply_mac_channel(X, chan, rho)
    rx_bits, error = _decode_digital(Y, chan.H, rho, schedules, tx_bits)
    common = _common_schedule(schedules)
    if common is not None:
        recon = dequantize_block(
            np.asarray(rx_bits).reshape(cfg.K, cfg.S, common.R_s),
            QuantizerSpec(common.R_s))
    else:
        recon = np.stack([_symbols_to_samples(rx_bits[k], schedules[k], cfg.S)
                          for k in range(cfg.K)])
    se = np.mean(np.abs(recon - src) ** 2, axis=1)
    return SchemeOutcome(reconstructions=recon, digital_error=error, per_user_se=se)


def _analog_signal(cfg: SystemConfig, src: np.ndarray):
    """Time-division pairing: X (K, T), pair p owns columns [p*T_pair, ...).

    Column j of a pair's share carries sample j mod S of both users,
    boosted so the average energy spent over the whole slot is exactly T.
    """
    if cfg.K % 2:
        raise ConfigError("analog pairing needs an even number of users")
    n_pairs = cfg.K // 2
    if cfg.T % n_pairs:
        raise ConfigError(f"T = {cfg.T} not divisible among {n_pairs} pairs")
    T_pair = cfg.T // n_pairs
    if T_pair < cfg.S:
        raise ConfigError(f"a pair's {T_pair} uses cannot carry S = {cfg.S} samples")
    boost = np.sqrt(cfg.T / T_pair)
    X = np.zeros((cfg.K, cfg.T), dtype=complex)
    cols = np.arange(T_pair)
    for p in range(n_pairs):
        X[2 * p, p * T_pair + cols] = boost * src[2 * p, cols % cfg.S]
        X[2 * p + 1, p * T_pair + cols] = boost * src[2 * p + 1, cols % cfg.S]
    return X, T_pair, boost


def run_analog(cfg: SystemConfig, trial: int, *,
               snr_db: float | None = None) -> SchemeOutcome:
    """Uncoded repetition of the raw samples with joint LMMSE per pair."""
    _require_single_antenna(cfg)
    rho = cfg.rho_vector(snr_db)
    src = draw_source(cfg, trial).samples
    X, T_pair, boost = _analog_signal(cfg, src)
    chan = draw_channel(cfg, trial)
    Y = apply_mac_channel(X, chan, rho)

    recon = np.empty((cfg.K, cfg.S), dtype=complex)
    eye2 = np.eye(2)
    for p in range(cfg.K // 2):
        users = [2 * p, 2 * p + 1]
        A = chan.H[:, users] * (np.sqrt(rho[users]) * boost)[None, :]
        G = A.conj().T @ A
        block = Y[:, p * T_pair:(p + 1) * T_pair]
        if T_pair % cfg.S == 0:
            reps = T_pair // cfg.S
            Ysum = block.reshape(cfg.M, reps, cfg.S).sum(axis=1)
            recon[users] = np.linalg.solve(eye2 + reps * G, A.conj().T @ Ysum)
        else:
            for s in range(cfg.S):
                ys = block[:, s::cfg.S]
                recon[users, s] = np.linalg.solve(eye2 + ys.shape[1] * G,
                                                  A.conj().T @ ys.sum(axis=1))
    se = np.mean(np.abs(recon - src) ** 2, axis=1)
    return SchemeOutcome(reconstructions=recon, digital_error=False, per_user_se=se)


def run_hybrid(cfg: SystemConfig, layout: HybridLayout, schedule, trial: int, *,
               snr_db: float | None = None) -> SchemeOutcome:
    """Digital layer plus LMMSE-refined analog quantization error.

    The error of each quantized sample, scaled by 1/sqrt(D_Q) to unit
    variance, is sent over the last T_a uses.  The receiver adds its LMMSE
    estimate to the dequantized digital reconstruction whether or not the
    digital decode was correct.
    """
    _require_single_antenna(cfg)
    if layout.N_t_prime != 1:
        raise ConfigError("single-antenna pipeline: analog layer must use N_t' = 1")
    schedules = _normalize_schedules(schedule, cfg.K)
    for sched in schedules:
        if cfg.S * sched.R_s != layout.T_d * sched.R_c:
            raise ConfigError("digital bit budget does not close over T_d uses")
    if layout.T_d + layout.T_a != cfg.T:
        raise ConfigError("layout does not fill the slot")
    rho = cfg.rho_vector(snr_db)
    src = draw_source(cfg, trial).samples
    Xd, tx_bits, mids = _digital_slot(cfg, schedules, src, layout.T_d)
    d_q = np.array([mean_distortion(QuantizerSpec(s.R_s)) for s in schedules])
    Xa = (src - mids) / np.sqrt(d_q)[:, None]
    X = np.concatenate([Xd, Xa], axis=1)
    chan = draw_channel(cfg, trial)
    Y = apply_mac_channel(X, chan, rho)

    rx_bits, error = _decode_digital(Y[:, :layout.T_d], chan.H, rho,
                                     schedules, tx_bits)
    common = _common_schedule(schedules)
    if common is not None:
        digital = dequantize_block(
            np.asarray(rx_bits).reshape(cfg.K, cfg.S, common.R_s),
            QuantizerSpec(common.R_s))
    else:
        digital = np.stack([_symbols_to_samples(rx_bits[k], schedules[k], cfg.S)
                            for k in range(cfg.K)])
    xhat, _ = lmmse_estimate(Y[:, layout.T_d:], chan.H, rho)
    recon = digital + np.sqrt(d_q)[:, None] * xhat
    se = np.mean(np.abs(recon - src) ** 2, axis=1)
    return SchemeOutcome(reconstructions=recon, digital_error=error, per_user_se=se)


def ideal_reference(cfg: SystemConfig, schedule, trial: int) -> SchemeOutcome:
    """Quantization-only benchmark: the separated scheme minus all decoding errors."""
    schedules = _normalize_schedules(schedule, cfg.K)
    src = draw_source(cfg, trial).samples
    common = _common_schedule(schedules)
    if common is not None:
        _, recon = quantize_block(src, QuantizerSpec(common.R_s))
    else:
        recon = np.empty_like(src)
        for k in range(cfg.K):
            _, recon[k] = quantize_block(src[k], QuantizerSpec(schedules[k].R_s))
    se = np.mean(np.abs(recon - src) ** 2, axis=1)
    return SchemeOutcome(reconstructions=recon, digital_error=False, per_user_se=se)
