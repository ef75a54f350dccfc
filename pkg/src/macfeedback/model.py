"""System model for the block-fading MIMO multiple-access uplink.

K single- or multi-antenna users send over T channel uses to an M-antenna
base station:

    Y = sum_k sqrt(rho_k) H_k X_k + W

with H_k of shape (M, N_t) and i.i.d. CN(0,1) entries, held fixed for the
whole slot, and W i.i.d. CN(0,1) noise.  Transmit signals are built with
unit average symbol energy so the per-user SNR rho_k enters only through
the sqrt(rho_k) scaling here.

Randomness is counter-based: every (seed, trial_index, purpose) triple maps
to its own independent generator, so any trial of any quantity can be
redrawn in isolation and sweeps are reproducible regardless of execution
order.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

# Per-real-dimension std of a unit-variance complex Gaussian.
SIGMA_DIM = np.sqrt(0.5)


class ConfigError(ValueError):
    """Raised when a configuration or experiment spec violates a contract."""


def substream(seed: int, index: int, purpose: str) -> np.random.Generator:
    """Independent generator for one (seed, counter, purpose) triple.

    The purpose tag is hashed to a stable 64-bit integer so streams for
    e.g. the channel and the source of the same trial never collide.
    """
    tag = int.from_bytes(hashlib.blake2s(purpose.encode(), digest_size=8).digest(), "big")
    return np.random.default_rng(np.random.SeedSequence([seed, index, tag]))


def draw_cn(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    """I.i.d. CN(0,1) array: independent N(0, 1/2) real and imaginary parts."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * SIGMA_DIM


def db_to_lin(snr_db) -> np.ndarray | float:
    return 10.0 ** (np.asarray(snr_db, dtype=float) / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    """Static parameters of one simulation scenario."""

    K: int                       # number of users
    N_t: int                     # transmit antennas per user
    M: int                       # receive antennas at the base station
    b: float                     # bandwidth efficiency, channel uses per source sample
    S: int                       # source samples per user per slot
    T: int                       # channel uses per slot, must equal b * S
    snr_db_grid: tuple[float, ...] = (10.0, 20.0, 30.0)
    trials: int = 10_000         # Monte-Carlo trial budget per SNR point
    seed: int = 0
    per_user_snr_db: tuple[float, ...] | None = None  # asymmetric nominal SNRs, else None

    def __post_init__(self):
        object.__setattr__(self, "snr_db_grid", tuple(float(s) for s in self.snr_db_grid))
        if self.per_user_snr_db is not None:
            object.__setattr__(self, "per_user_snr_db",
                               tuple(float(s) for s in self.per_user_snr_db))
        if min(self.K, self.N_t, self.M, self.S, self.T) < 1:
            raise ConfigError("K, N_t, M, S, T must all be positive")
        if self.b <= 0:
            raise ConfigError("bandwidth efficiency b must be positive")
        if abs(self.T - self.b * self.S) > 1e-9:
            raise ConfigError(f"T = {self.T} must equal b*S = {self.b * self.S}")
        if self.trials < 1:
            raise ConfigError("trials must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if self.per_user_snr_db is not None and len(self.per_user_snr_db) != self.K:
            raise ConfigError("per_user_snr_db must list one value per user")
        if len(self.snr_db_grid) < 1:
            raise ConfigError("snr_db_grid must be non-empty")

    def rho_vector(self, snr_db: float | None = None) -> np.ndarray:
        """Per-user linear SNRs, shape (K,).

        Symmetric scenarios pass the grid point; asymmetric ones treat
        snr_db as a common offset on top of per_user_snr_db.
        """
        if self.per_user_snr_db is not None:
            base = np.asarray(self.per_user_snr_db, dtype=float)
            return db_to_lin(base + (snr_db or 0.0))
        if snr_db is None:
            raise ConfigError("snr_db required when per_user_snr_db is not set")
        return np.full(self.K, db_to_lin(snr_db))


def make_config(K: int, N_t: int, M: int, b: float, S: int, **kw) -> SystemConfig:
    """SystemConfig with T derived from b*S (which must land on an integer)."""
    T = b * S
    if abs(T - round(T)) > 1e-9:
        raise ConfigError(f"b*S = {T} is not an integer number of channel uses")
    return SystemConfig(K=K, N_t=N_t, M=M, b=float(b), S=S, T=int(round(T)), **kw)


@dataclass(frozen=True)
class ChannelRealization:
    """One slot's channel and noise. H stacks users column-wise: (M, K*N_t)."""

    H: np.ndarray                # (M, K*N_t) complex
    W: np.ndarray                # (M, T) complex
    trial_index: int = 0

    def user_block(self, k: int, N_t: int) -> np.ndarray:
        """H_k, the (M, N_t) block of user k."""
        return self.H[:, k * N_t:(k + 1) * N_t]


@dataclass(frozen=True)
class SourceBlock:
    """Unit-variance complex Gaussian source samples, one row per user."""

    samples: np.ndarray          # (K, S) complex
    trial_index: int = 0


@dataclass
class DistortionRecord:
    """Aggregated outcome of all trials at one SNR point."""

    snr_db: float
    per_user_mse: np.ndarray     # (K,) mean squared error per source sample
    decode_error_rate: float     # fraction of trials with any wrong symbol decision
    trials_used: int
    mse_stderr: float = 0.0      # standard error of the user-averaged MSE

    @property
    def mse(self) -> float:
        return float(np.mean(self.per_user_mse))


def draw_channel(cfg: SystemConfig, trial_index: int) -> ChannelRealization:
    """Channel and noise of one trial, deterministic in (cfg.seed, trial_index)."""
    rng = substream(cfg.seed, trial_index, "channel")
    H = draw_cn(rng, (cfg.M, cfg.K * cfg.N_t))
    W = draw_cn(rng, (cfg.M, cfg.T))
    return ChannelRealization(H=H, W=W, trial_index=trial_index)


def draw_source(cfg: SystemConfig, trial_index: int) -> SourceBlock:
    """Source samples of one trial, independent of the channel stream."""
    rng = substream(cfg.seed, trial_index, "source")
    return SourceBlock(samples=draw_cn(rng, (cfg.K, cfg.S)), trial_index=trial_index)


def apply_mac_channel(X_stack: np.ndarray, chan: ChannelRealization,
                      rho_per_user: np.ndarray) -> np.ndarray:
    """Received slot Y = sum_k sqrt(rho_k) H_k X_k + W.

    X_stack : (K*N_t, T) user signals stacked row-wise, unit average symbol
              energy; the SNR enters only here.
    returns : (M, T)
    """
    rho = np.asarray(rho_per_user, dtype=float)
    n_col = chan.H.shape[1]
    if n_col % rho.size != 0:
        raise ConfigError(f"{rho.size} SNR entries do not tile {n_col} channel columns")
    if X_stack.shape[0] != n_col:
        raise ConfigError(f"X has {X_stack.shape[0]} rows, channel expects {n_col}")
    if X_stack.shape[1] != chan.W.shape[1]:
        raise ConfigError(f"X spans {X_stack.shape[1]} uses, noise spans {chan.W.shape[1]}")
    if np.any(rho < 0):
        raise ConfigError("per-user SNR must be non-negative")
    amp = np.repeat(np.sqrt(rho), n_col // rho.size)
    return (chan.H * amp[None, :]) @ X_stack + chan.W
