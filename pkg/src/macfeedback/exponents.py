"""Distortion SNR exponents and diversity-multiplexing tradeoff curves.

Everything here is analytic except lower_bound_mc.  The central objects are

* the single-user DMT d(r), piecewise linear through (k, (n_t-k)(n_r-k));
* the multiple-access DMT, which follows the single-user curve while the
  system is lightly loaded and the K-fold pooled antenna curve at K times
  the rate once it is not;
* the informed-transmitter bound on the distortion exponent of any
  feedback scheme, a minimum over user subsets;
* the exponents achieved by separated source/channel coding, by its
  successive-cancellation variant, and by the hybrid digital-analog
  scheme, each obtained by intersecting a straight line with the MAC DMT.

The balance equations are solved by bisection: both sides are monotone in
opposite directions, so the root is unique.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .model import SystemConfig, draw_cn, substream

_BISECT_TOL = 1e-12
_EPS = 1e-12


def dmt_single_user(n_t: int, n_r: int, r: float) -> float:
    """Diversity order of an (n_t, n_r) point-to-point link at multiplexing r.

    Piecewise-linear interpolation of (k, (n_t-k)(n_r-k)) for integer k,
    defined on 0 <= r <= min(n_t, n_r).
    """
    if n_t < 1 or n_r < 1:
        raise ValueError("antenna counts must be positive")
    kmax = min(n_t, n_r)
    if r < -_EPS or r > kmax + _EPS:
        raise ValueError(f"multiplexing gain {r} outside [0, {kmax}]")
    r = min(max(r, 0.0), float(kmax))
    k = min(int(np.floor(r)), kmax - 1)
    d_k = (n_t - k) * (n_r - k)
    d_k1 = (n_t - k - 1) * (n_r - k - 1)
    return d_k + (r - k) * (d_k1 - d_k)


def _mac_r_max(K: int, n_t: int, M: int) -> float:
    # Above the threshold the pooled-antenna curve must admit rate K*r.
    if n_t <= M / (K + 1):
        return float(n_t)
    return min(float(n_t), M / K)


def dmt_mac(K: int, n_t: int, M: int, r: float) -> float:
    """Symmetric-rate MAC DMT for K users with n_t antennas each.

    Lightly loaded (r below min(n_t, M/(K+1))): single-user d_{n_t,M}(r).
    Heavily loaded: the pooled curve d_{K*n_t,M}(K*r).  The two branches
    meet at the threshold.
    """
    if K < 1:
        raise ValueError("need at least one user")
    r_max = _mac_r_max(K, n_t, M)
    if r < -_EPS or r > r_max + _EPS:
        raise ValueError(f"multiplexing gain {r} outside [0, {r_max}]")
    r = min(max(r, 0.0), r_max)
    if r <= min(n_t, M / (K + 1)):
        return dmt_single_user(n_t, M, r)
    return dmt_single_user(K * n_t, M, min(K * r, float(min(K * n_t, M))))


@dataclass(frozen=True)
class SubsetSpec:
    """Antenna bookkeeping for a subset of users of a given size."""

    size: int
    m: int                       # min(M, size * n_t)
    n: int                       # max(M, size * n_t)

    @classmethod
    def for_size(cls, size: int, n_t: int, M: int) -> "SubsetSpec":
        if size < 1:
            raise ValueError("subset size must be positive")
        return cls(size=size, m=min(M, size * n_t), n=max(M, size * n_t))


def informed_transmitter_bound(K: int, n_t: int, M: int, b: float) -> float:
    """Upper bound on any scheme's distortion exponent at efficiency b.

    For each subset size the exponent is sum_i min(b/size, 2i-1+n-m); the
    bound is the minimum over sizes.  For n_t = 1, M = K it reduces to
    min(b, K).
    """
    if b < 0:
        raise ValueError("bandwidth efficiency must be non-negative")
    best = np.inf
    for size in range(1, K + 1):
        ss = SubsetSpec.for_size(size, n_t, M)
        delta = sum(min(b / size, 2 * i - 1 + ss.n - ss.m) for i in range(1, ss.m + 1))
        best = min(best, delta)
    return float(best)


def _solve_balance(lhs, K: int, n_t: int, M: int) -> float:
    """Root of lhs(r) = dmt_mac(r) on [0, r_max]; lhs increasing, DMT decreasing."""
    lo, hi = 0.0, _mac_r_max(K, n_t, M)
    f_lo = lhs(lo) - dmt_mac(K, n_t, M, lo)
    if f_lo >= 0.0:
        return lo
    while hi - lo > _BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if lhs(mid) - dmt_mac(K, n_t, M, mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def separated_exponent(K: int, n_t: int, M: int, b: float) -> tuple[float, float]:
    """(exponent, optimal channel multiplexing rate) of separated coding.

    Solves b*r = dmt_mac(r): quantize at b*r log(rho) nats and protect the
    bits with an outage exponent that matches the source resolution.  For
    n_t = 1, M = K this gives r = K/(K+b) and exponent bK/(K+b).
    """
    if b <= 0:
        raise ValueError("bandwidth efficiency must be positive")
    r = _solve_balance(lambda x: b * x, K, n_t, M)
    return b * r, r


def hybrid_exponent(K: int, n_t: int, M: int, b: float) -> tuple[float, float]:
    """(exponent, digital multiplexing rate) of the hybrid digital-analog scheme.

    The analog layer contributes one diversity order on top of a digital
    layer that carries all but one quantization bit, giving the balance
    1 + (r/N_t')(N_t' b - 1) = dmt_mac(r) with N_t' = min(n_t, M // K)
    analog antennas per user.  Requires M >= K so every user gets an
    analog spatial dimension; for n_t = 1, M = K the exponent is
    bK/(K+b-1).
    """
    if M < K:
        raise ValueError(f"hybrid scheme needs M >= K (got M={M}, K={K})")
    if b < 1:
        raise ValueError("hybrid scheme needs at least one channel use per sample")
    ntp = min(n_t, M // K)
    r = _solve_balance(lambda x: 1.0 + (x / ntp) * (ntp * b - 1.0), K, n_t, M)
    return dmt_mac(K, n_t, M, r), r


def sic_exponent(b: float) -> float:
    """Separated-scheme exponent when joint decoding is replaced by SIC.

    Stripping decoders are limited by the single-stream DMT 1-r, so the
    balance b*r = 1-r gives b/(1+b) no matter how many users or antennas.
    """
    if b <= 0:
        raise ValueError("bandwidth efficiency must be positive")
    return b / (1.0 + b)


def rate_outage_floor(H: np.ndarray, K: int, N_t: int, rho: float) -> float:
    """Worst per-user rate the genie-aided transmitters can count on.

    R(H) = min over non-empty user subsets U of log det(I + rho H_U H_U^H)
    divided by |U|, in nats per channel use.
    """
    M = H.shape[0]
    best = np.inf
    for size in range(1, K + 1):
        for users in combinations(range(K), size):
            cols = np.concatenate([np.arange(u * N_t, (u + 1) * N_t) for u in users])
            Hu = H[:, cols]
            A = np.eye(M) + rho * (Hu @ Hu.conj().T)
            L = np.linalg.cholesky(A)
            logdet = 2.0 * np.sum(np.log(np.real(np.diag(L))))
            best = min(best, logdet / size)
    return float(best)


def lower_bound_mc(cfg: SystemConfig, rho: float, n_samples: int,
                   batch: int = 2048) -> tuple[float, float]:
    """Monte-Carlo estimate of the informed-transmitter distortion bound.

    Averages exp(-b * R(H)) over channel draws, R(H) as in
    rate_outage_floor.  Sample i of a given cfg.seed always sees the same
    channel, so estimates at different rho share draws and their ratios
    (hence fitted slopes) are low-variance.

    returns: (estimate, standard error)
    """
    if n_samples < 2:
        raise ValueError("need at least two samples for a standard error")
    if rho < 0:
        raise ValueError("rho must be non-negative")
    K, N_t, M = cfg.K, cfg.N_t, cfg.M
    subsets = [np.concatenate([np.arange(u * N_t, (u + 1) * N_t) for u in users])
               for size in range(1, K + 1)
               for users in combinations(range(K), size)]
    sizes = np.array([len(s) // N_t for s in subsets], dtype=float)

    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_samples:
        n = min(batch, n_samples - done)
        H = np.empty((n, M, K * N_t), dtype=complex)
        for i in range(n):
            rng = substream(cfg.seed, done + i, "lower-bound-mc")
            H[i] = draw_cn(rng, (M, K * N_t))
        rate = np.full(n, np.inf)
        eye = np.eye(M)
        for cols, size in zip(subsets, sizes):
            Hu = H[:, :, cols]
            A = eye + rho * (Hu @ Hu.conj().swapaxes(1, 2))
            L = np.linalg.cholesky(A)
            logdet = 2.0 * np.sum(np.log(np.real(np.diagonal(L, axis1=1, axis2=2))), axis=1)
            rate = np.minimum(rate, logdet / size)
        d = np.exp(-cfg.b * rate)
        total += float(np.sum(d))
        total_sq += float(np.sum(d * d))
        done += n
    mean = total / n_samples
    var = max(total_sq / n_samples - mean * mean, 0.0)
    return mean, float(np.sqrt(var / n_samples))


@dataclass(frozen=True)
class ExponentCurve:
    """A tabulated curve (x, y) with a tag saying what it is."""

    points: tuple[tuple[float, float], ...]
    kind: str

    def __post_init__(self):
        xs = [p[0] for p in self.points]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("curve abscissae must be strictly increasing")

    @property
    def xs(self) -> np.ndarray:
        return np.array([p[0] for p in self.points])

    @property
    def ys(self) -> np.ndarray:
        return np.array([p[1] for p in self.points])


_CURVE_KINDS = ("upper_bound", "separated", "hybrid", "sic", "dmt_single", "dmt_mac")


def curve_tabulate(kind: str, K: int, n_t: int, M: int, grid) -> ExponentCurve:
    """Tabulate one analytic curve over a grid of b (exponents) or r (DMTs)."""
    grid = [float(g) for g in grid]
    if kind == "upper_bound":
        f = lambda b: informed_transmitter_bound(K, n_t, M, b)
    elif kind == "separated":
        f = lambda b: separated_exponent(K, n_t, M, b)[0]
    elif kind == "hybrid":
        f = lambda b: hybrid_exponent(K, n_t, M, b)[0]
    elif kind == "sic":
        f = lambda b: sic_exponent(b)
    elif kind == "dmt_single":
        f = lambda r: dmt_single_user(n_t, M, r)
    elif kind == "dmt_mac":
        f = lambda r: dmt_mac(K, n_t, M, r)
    else:
        raise ValueError(f"unknown curve kind {kind!r}, expected one of {_CURVE_KINDS}")
    return ExponentCurve(points=tuple((g, f(g)) for g in grid), kind=kind)


def loglog_slope(rho: np.ndarray, values: np.ndarray,
                 upper_half: bool = True) -> tuple[float, float]:
    """Least-squares slope of log10(values) against log10(rho), sign flipped.

    A decaying power law c * rho^(-a) comes back as slope +a.  With
    upper_half=True only the top half of the grid enters the fit (that is
    where asymptotic slopes are read off), but never fewer than three
    points: rate schedules quantize the constellation, so two neighbouring
    grid points can sit on the same distortion plateau and a two-point fit
    would read the plateau, not the decay.  Returns (slope, stderr); the
    stderr is the usual OLS residual-based one, zero for a 2-point fit.
    """
    rho = np.asarray(rho, dtype=float)
    values = np.asarray(values, dtype=float)
    if rho.shape != values.shape or rho.ndim != 1:
        raise ValueError("rho and values must be 1-D arrays of equal length")
    if rho.size < 3:
        raise ValueError("need at least three points to estimate a slope")
    if np.any(values <= 0) or np.any(rho <= 0):
        raise ValueError("slope fit requires positive rho and values")
    if upper_half:
        n_fit = max(int(np.ceil(rho.size / 2)), min(rho.size, 3))
        rho, values = rho[-n_fit:], values[-n_fit:]
    x = np.log10(rho)
    y = np.log10(values)
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    n = x.size
    if n > 2:
        s2 = float(resid @ resid) / (n - 2)
        stderr = np.sqrt(s2 / float(np.sum((x - x.mean()) ** 2)))
    else:
        stderr = 0.0
    return -float(coef[0]), float(stderr)
