"""Uncoded QAM physical layer and multiuser receivers.

Constellations are square Q^2-QAM on the odd-integer grid {a+jb : a, b odd,
|a|,|b| <= Q-1}, scaled by gamma = sqrt(3 / (2(Q^2-1))) to unit average
energy.  All decoders work on the unit-energy (gamma-scaled) points, so a
"symbol" anywhere in this module means gamma * (odd-integer point); the
per-user SNR stays out of the symbols and enters through the channel
matrix.

Candidate vectors are ordered lexicographically by per-user candidate
index c = i_index * Q + q_index, where index 0 is the most positive level
on each axis.  Exact distance ties are resolved toward the smallest
candidate vector in that order, both in the exhaustive search and in the
sphere decoder, so the two agree everywhere.

The sphere decoder runs Schnorr-Euchner enumeration with infinite initial
radius (its first leaf is the Babai point) on the 2K-real QR decomposition
of the effective channel.  In "naive_lattice" mode it searches the whole
translated odd-integer lattice and clamps the winner to the constellation
box afterwards; that decoder is cheaper at low SNR but loses the bounded
search's diversity.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

try:
    from numba import njit
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda f: f

from .exponents import ExponentCurve, loglog_slope
from .model import ConfigError, draw_cn, substream
from .quantizer import bits_to_indices, indices_to_bits

_RANK_TOL = 1e-10


class RankDeficiencyError(ValueError):
    """Lattice-mode decoding asked for on a rank-deficient channel."""


@dataclass(frozen=True)
class QamSpec:
    """Square Q^2-QAM constellation geometry."""

    Q: int                       # levels per real axis, a power of two

    def __post_init__(self):
        if self.Q < 2 or (self.Q & (self.Q - 1)) != 0:
            raise ValueError(f"Q must be a power of two >= 2, got {self.Q}")

    @property
    def bits_per_axis(self) -> int:
        return self.Q.bit_length() - 1

    @property
    def bits_per_symbol(self) -> int:
        return 2 * self.bits_per_axis

    @property
    def gamma(self) -> float:
        """Scale making the average symbol energy exactly one."""
        return float(np.sqrt(3.0 / (2.0 * (self.Q ** 2 - 1))))

    @property
    def levels(self) -> np.ndarray:
        """Per-axis amplitudes in index order: +(Q-1), +(Q-3), ..., -(Q-1)."""
        return self.Q - 1 - 2 * np.arange(self.Q)

    @property
    def alphabet(self) -> np.ndarray:
        """All Q^2 odd-integer points, candidate order c = i_idx * Q + q_idx."""
        lv = self.levels.astype(float)
        return (lv[:, None] + 1j * lv[None, :]).reshape(-1)

    @property
    def scaled_alphabet(self) -> np.ndarray:
        return self.gamma * self.alphabet


@dataclass(frozen=True)
class RateSchedule:
    """Per-SNR transmission rates of a digital feedback link."""

    snr_db: float
    r_c: float                   # multiplexing rate the schedule tracks
    R_c: int                     # bits per channel use per user, even
    R_s: int                     # quantizer bits per source sample
    Q: int

    def __post_init__(self):
        if self.R_c < 2 or self.R_c % 2:
            raise ValueError("R_c must be an even integer >= 2")
        if self.Q != 1 << (self.R_c // 2):
            raise ValueError(f"Q = {self.Q} inconsistent with R_c = {self.R_c}")
        if self.R_s < 2:
            raise ValueError("R_s must be >= 2 bits per complex sample")

    @property
    def qam(self) -> QamSpec:
        return QamSpec(self.Q)


def rate_schedule(snr_db: float, r_c: float, b: float) -> RateSchedule:
    """Constellation and quantizer rates for one SNR operating point.

    Tracks R_c = r_c * log2(rho) bits per channel use, rounded to the
    nearest even integer (ties to the even multiple, floor 2) so the
    constellation is square, and matches the source rate R_s = b * R_c so
    the per-slot bit budget closes.  r_c = 0 pins the schedule to 4-QAM.
    """
    if not 0.0 <= r_c < 1.0:
        raise ValueError(f"multiplexing rate {r_c} outside [0, 1)")
    rho = 10.0 ** (snr_db / 10.0)
    target = r_c * np.log2(rho)
    R_c = max(2, 2 * int(round(float(target) / 2.0)))
    R_s = b * R_c
    if abs(R_s - round(R_s)) > 1e-9:
        raise ConfigError(f"b * R_c = {R_s} is not an integer bit budget")
    return RateSchedule(snr_db=snr_db, r_c=r_c, R_c=R_c, R_s=int(round(R_s)),
                        Q=1 << (R_c // 2))


# ---------------------------------------------------------------------------
# Gray labeling
# ---------------------------------------------------------------------------

def _gray_encode(idx):
    idx = np.asarray(idx, dtype=np.int64)
    return idx ^ (idx >> 1)


def _gray_decode(code):
    g = np.asarray(code, dtype=np.int64).copy()
    shift = 1
    while shift < 64:
        g ^= g >> shift
        shift <<= 1
    return g


def _slice_index(x, Q: int) -> np.ndarray:
    """Nearest level index for real values x; ties round toward +inf in value."""
    t = (Q - 1 - np.asarray(x, dtype=float)) / 2.0
    idx = np.ceil(t - 0.5).astype(np.int64)
    return np.clip(idx, 0, Q - 1)


def gray_map_block(bit_rows: np.ndarray, spec: QamSpec) -> np.ndarray:
    """(n, 2*log2 Q) bit rows -> (n,) unit-energy symbols.

    The first half of each row Gray-selects the I level, the second half
    the Q level; Gray code 0 is the most positive level on each axis.
    """
    bit_rows = np.asarray(bit_rows)
    na = spec.bits_per_axis
    if bit_rows.shape[-1] != spec.bits_per_symbol:
        raise ValueError(f"expected {spec.bits_per_symbol} bits per symbol, "
                         f"got {bit_rows.shape[-1]}")
    i_idx = _gray_decode(bits_to_indices(bit_rows[..., :na], na))
    q_idx = _gray_decode(bits_to_indices(bit_rows[..., na:], na))
    lv = spec.levels
    return spec.gamma * (lv[i_idx] + 1j * lv[q_idx])


def gray_demap_block(symbols: np.ndarray, spec: QamSpec) -> np.ndarray:
    """(n,) symbols -> (n, 2*log2 Q) bit rows; slices to the nearest point."""
    z = np.asarray(symbols) / spec.gamma
    na = spec.bits_per_axis
    i_bits = indices_to_bits(_gray_encode(_slice_index(z.real, spec.Q)), na)
    q_bits = indices_to_bits(_gray_encode(_slice_index(z.imag, spec.Q)), na)
    return np.concatenate([i_bits, q_bits], axis=-1)


def gray_map(bits, spec: QamSpec) -> complex:
    return complex(gray_map_block(np.asarray(bits)[None, :], spec)[0])


def gray_demap(symbol: complex, spec: QamSpec) -> np.ndarray:
    return gray_demap_block(np.array([symbol]), spec)[0]


# ---------------------------------------------------------------------------
# Joint decoders
# ---------------------------------------------------------------------------

def _normalize_specs(spec, K: int) -> list[QamSpec]:
    if isinstance(spec, QamSpec):
        return [spec] * K
    specs = list(spec)
    if len(specs) != K:
        raise ValueError(f"got {len(specs)} constellations for {K} users")
    return specs


def _rho_vector(rho, K: int) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    if rho.ndim == 0:
        rho = np.full(K, float(rho))
    if rho.shape != (K,):
        raise ValueError(f"rho must be scalar or length-{K}")
    if np.any(rho < 0):
        raise ValueError("rho must be non-negative")
    return rho


@lru_cache(maxsize=64)
def _candidate_matrix(Qs: tuple[int, ...]) -> np.ndarray:
    """All unit-energy candidate vectors, lexicographic in the index tuple."""
    alphabets = [QamSpec(Q).scaled_alphabet for Q in Qs]
    grids = np.meshgrid(*alphabets, indexing="ij")
    out = np.stack([g.reshape(-1) for g in grids], axis=-1)
    out.setflags(write=False)
    return out


def ml_joint_decode(y: np.ndarray, H: np.ndarray, rho, spec) -> np.ndarray:
    """Exhaustive joint ML over all candidate vectors for one channel use.

    y: (M,), H: (M, K) single-antenna users.  Returns the (K,) vector of
    decoded unit-energy symbols; exact ties go to the lexicographically
    smallest candidate.
    """
    y = np.asarray(y)
    H = np.asarray(H)
    K = H.shape[1]
    specs = _normalize_specs(spec, K)
    cands = _candidate_matrix(tuple(s.Q for s in specs))
    A = H * np.sqrt(_rho_vector(rho, K))[None, :]
    dist = np.sum(np.abs(y[None, :] - cands @ A.T) ** 2, axis=1)
    return cands[int(np.argmin(dist))].copy()


def _ml_decode_index_batch(Y: np.ndarray, A: np.ndarray, Qs: tuple[int, ...]) -> np.ndarray:
    """Vectorized exhaustive ML over a batch: Y (B, M), A (B, M, K) -> (B,) indices."""
    cands = _candidate_matrix(Qs)
    z = np.einsum("bmk,ck->bcm", A, cands)
    dist = np.sum(np.abs(Y[:, None, :] - z) ** 2, axis=2)
    return np.argmin(dist, axis=1)


@njit(cache=True)
def _se_core(q, R, Qax, lattice):
    """Schnorr-Euchner search over the translated odd-integer lattice.

    q:   (n,) rotated observation, n = 2K reals
    R:   (n, n) upper triangular with positive diagonal
    Qax: (n,) levels per axis; axis j encodes level value Qax[j]-1-2*index
    lattice: enumerate all integers per axis instead of the Q in-box ones

    Returns (index vector, nodes visited, leaves reached).  Enumeration at
    each depth is by increasing distance from the mid-point, so once a
    partial distance exceeds the incumbent the whole depth is pruned.
    Exact leaf ties keep the lexicographically smallest candidate vector.
    """
    n = q.shape[0]
    K = n // 2
    center = np.zeros(n)
    dist_below = np.zeros(n)
    kcur = np.zeros(n, np.int64)
    step = np.zeros(n, np.int64)
    tried = np.zeros(n, np.int64)
    path = np.zeros(n, np.int64)
    val = np.zeros(n)
    best_idx = np.zeros(n, np.int64)
    best = np.inf
    have_best = False
    nodes = 0
    leaves = 0

    i = n - 1
    c = q[i] / R[i, i]
    center[i] = c
    t = (Qax[i] - 1 - c) / 2.0
    k0 = int(np.ceil(t - 0.5))
    if not lattice:
        if k0 < 0:
            k0 = 0
        elif k0 >= Qax[i]:
            k0 = Qax[i] - 1
    kcur[i] = k0
    step[i] = 1 if (t - k0) >= 0.0 else -1

    while True:
        if (not lattice) and tried[i] >= Qax[i]:
            i += 1
            if i >= n:
                break
            continue
        k = kcur[i]
        v = float(Qax[i] - 1 - 2 * k)
        e = R[i, i] * (center[i] - v)
        d = dist_below[i] + e * e
        nodes += 1
        tried[i] += 1

        nk = k + step[i]
        ns = -step[i] - (1 if step[i] > 0 else -1)
        if not lattice:
            guard = 0
            while (nk < 0 or nk >= Qax[i]) and guard < 2 * Qax[i] + 4:
                nk += ns
                ns = -ns - (1 if ns > 0 else -1)
                guard += 1
        kcur[i] = nk
        step[i] = ns

        if d > best:
            i += 1
            if i >= n:
                break
            continue
        if i == 0:
            leaves += 1
            path[0] = k
            if (not have_best) or d < best:
                best = d
                have_best = True
                for j in range(n):
                    best_idx[j] = path[j]
            elif d == best:
                smaller = False
                for uk in range(K):
                    cn = path[uk] * Qax[uk] + path[K + uk]
                    cb = best_idx[uk] * Qax[uk] + best_idx[K + uk]
                    if cn != cb:
                        smaller = cn < cb
                        break
                if smaller:
                    for j in range(n):
                        best_idx[j] = path[j]
            continue

        path[i] = k
        val[i] = v
        dist_below[i - 1] = d
        i -= 1
        acc = 0.0
        for j in range(i + 1, n):
            acc += R[i, j] * val[j]
        c = (q[i] - acc) / R[i, i]
        center[i] = c
        t = (Qax[i] - 1 - c) / 2.0
        k0 = int(np.ceil(t - 0.5))
        if not lattice:
            if k0 < 0:
                k0 = 0
            elif k0 >= Qax[i]:
                k0 = Qax[i] - 1
        kcur[i] = k0
        step[i] = 1 if (t - k0) >= 0.0 else -1
        tried[i] = 0

    return best_idx, nodes, leaves


@njit(cache=True)
def _se_core_uses(Qy, R, Qax, lattice):
    """_se_core over every column of Qy (n, L); one call amortizes dispatch."""
    n, L = Qy.shape
    out = np.empty((n, L), np.int64)
    nodes = 0
    leaves = 0
    for ell in range(L):
        idx, nn, nl = _se_core(Qy[:, ell].copy(), R, Qax, lattice)
        out[:, ell] = idx
        nodes += nn
        leaves += nl
    return out, nodes, leaves


def _real_model(A: np.ndarray):
    """QR of the 2K-real image of a complex channel; None if rank-deficient."""
    B = np.block([[A.real, -A.imag], [A.imag, A.real]])
    if B.shape[0] < B.shape[1]:
        return None
    Qm, Rm = np.linalg.qr(B)
    sgn = np.sign(np.diag(Rm))
    sgn[sgn == 0] = 1.0
    Rm = Rm * sgn[:, None]
    if np.min(np.abs(np.diag(Rm))) < _RANK_TOL:
        return None
    return (Qm * sgn[None, :]).T.copy(), np.ascontiguousarray(Rm)


def sphere_decode_uses(Y: np.ndarray, H: np.ndarray, rho, spec,
                       mode: str = "constellation"):
    """Sphere-decode every column of Y against one channel realization.

    Y: (M, L) received columns, H: (M, K).  Factorizes the channel once
    and reuses it across the L uses.  Returns (symbols (K, L), stats) with
    stats counting enumeration nodes over all uses.
    """
    if mode not in ("constellation", "naive_lattice"):
        raise ValueError(f"unknown decoding mode {mode!r}")
    Y = np.asarray(Y)
    if Y.ndim != 2:
        raise ValueError("Y must be (M, L); decode a single use via sphere_decode")
    H = np.asarray(H)
    K = H.shape[1]
    L = Y.shape[1]
    specs = _normalize_specs(spec, K)
    gammas = np.array([s.gamma for s in specs])
    Qax = np.array([s.Q for s in specs] * 2, dtype=np.int64)
    A = H * (np.sqrt(_rho_vector(rho, K)) * gammas)[None, :]

    model = _real_model(A)
    if model is None:
        if mode == "naive_lattice":
            raise RankDeficiencyError(
                "effective channel is rank deficient; the unbounded lattice "
                "search has no nearest point")
        out = np.empty((K, L), dtype=complex)
        total = 0
        for ell in range(L):
            out[:, ell] = ml_joint_decode(Y[:, ell], H, rho, specs)
            total += _candidate_matrix(tuple(s.Q for s in specs)).shape[0]
        return out, {"nodes": total, "leaves": total, "fallback": True}

    Qt, Rm = model
    lattice = mode == "naive_lattice"
    Qy = Qt @ np.concatenate([Y.real, Y.imag], axis=0)
    idx, nodes, leaves = _se_core_uses(Qy, Rm, Qax, lattice)
    if lattice:
        idx = np.clip(idx, 0, (Qax - 1)[:, None])
    lv = Qax[:, None] - 1 - 2 * idx
    out = gammas[:, None] * (lv[:K] + 1j * lv[K:])
    return out, {"nodes": int(nodes), "leaves": int(leaves), "fallback": False}


def sphere_decode(y: np.ndarray, H: np.ndarray, rho, spec,
                  mode: str = "constellation", return_stats: bool = False):
    """Joint ML (constellation mode) or naive lattice decoding of one use.

    Equivalent to ml_joint_decode including the tie rule, at a visit count
    that stays far below exhaustive enumeration.  Falls back to the
    exhaustive search when the effective channel is rank deficient; in
    naive_lattice mode that situation raises RankDeficiencyError instead.
    """
    symbols, stats = sphere_decode_uses(np.asarray(y)[:, None], H, rho, spec, mode)
    if return_stats:
        return symbols[:, 0], stats
    return symbols[:, 0]


def sic_decode(y: np.ndarray, H: np.ndarray, rho, spec,
               front_end: str = "mmse", ordering: str = "natural") -> np.ndarray:
    """Successive interference cancellation with linear front ends.

    front_end: "zf" nulls remaining users exactly (erases everyone left if
    the remaining channel is singular), "mmse" trades interference for
    noise.  ordering: "natural" strips user 0, 1, ... ; "vblast" strips the
    stream with the best post-detection SNR first.  Returns (K,) decoded
    unit-energy symbols.
    """
    if front_end not in ("zf", "mmse"):
        raise ValueError(f"unknown front end {front_end!r}")
    if ordering not in ("natural", "vblast"):
        raise ValueError(f"unknown ordering {ordering!r}")
    y = np.asarray(y).astype(complex)
    H = np.asarray(H)
    K = H.shape[1]
    specs = _normalize_specs(spec, K)
    A = H * np.sqrt(_rho_vector(rho, K))[None, :]

    out = np.empty(K, dtype=complex)
    remaining = list(range(K))
    resid = y.copy()
    while remaining:
        Ar = A[:, remaining]
        G = Ar.conj().T @ Ar
        if front_end == "zf":
            if np.min(np.linalg.eigvalsh(G)) < _RANK_TOL:
                # nulling impossible: erase everyone left with the tie-rule symbol
                for u in remaining:
                    out[u] = specs[u].scaled_alphabet[0]
                break
            P = np.linalg.inv(G)
            metric = 1.0 / np.real(np.diag(P))
        else:
            P = np.linalg.inv(G + np.eye(len(remaining)))
            metric = 1.0 / np.real(np.diag(P)) - 1.0
        est = P @ (Ar.conj().T @ resid)
        pos = 0 if ordering == "natural" else int(np.argmax(metric))
        u = remaining[pos]
        sp = specs[u]
        lv = sp.levels
        sym = sp.gamma * (lv[_slice_index(est[pos].real / sp.gamma, sp.Q)]
                          + 1j * lv[_slice_index(est[pos].imag / sp.gamma, sp.Q)])
        out[u] = sym
        resid = resid - A[:, u] * sym
        remaining.pop(pos)
    return out


def lmmse_estimate(Ya: np.ndarray, Ha: np.ndarray, rho):
    """Linear MMSE estimate of unit-variance inputs from Ya = sqrt(rho) Ha X + W.

    Ya: (M, L) observations, Ha: (M, N); rho scalar or per-column (N,).
    Returns (Xhat (N, L), mmse_theory) where mmse_theory is the exact
    aggregate MMSE over all N*L entries, L * tr[(I + rho Ha^H Ha)^-1];
    rank-deficient channels contribute one unit per lost dimension.
    """
    Ya = np.atleast_2d(np.asarray(Ya))
    Ha = np.asarray(Ha)
    M, N = Ha.shape
    if Ya.shape[0] != M:
        raise ValueError(f"Ya has {Ya.shape[0]} rows, channel has {M}")
    A = Ha * np.sqrt(_rho_vector(rho, N))[None, :]
    Xhat = A.conj().T @ np.linalg.solve(np.eye(M) + A @ A.conj().T, Ya)
    mmse = np.real(np.trace(np.linalg.inv(np.eye(N) + A.conj().T @ A)))
    return Xhat, float(mmse * Ya.shape[1])


# ---------------------------------------------------------------------------
# Diversity experiments
# ---------------------------------------------------------------------------

@dataclass
class DecayExperimentResult:
    """Empirical decay curve plus its fitted log-log slope."""

    curve: "ExponentCurve"
    slope: float
    slope_stderr: float
    trials: int


def min_distance_experiment(N: int, trials: int, epsilons, seed: int = 0,
                            box: int = 3) -> np.ndarray:
    """Empirical CDF of the minimum distance of a random Gaussian lattice.

    Draws G (N x N, i.i.d. CN(0,1)) and minimizes ||G d|| over non-zero
    Gaussian-integer vectors with |Re d_i|, |Im d_i| <= box, the
    differences that matter for QAM.  Returns P(d_G <= eps) per epsilon.
    The small-eps mass scales like eps^(2N) up to log factors, which is
    the diversity the uncoded scheme inherits.  N <= 3 keeps the
    enumeration affordable.
    """
    if not 1 <= N <= 3:
        raise ValueError("enumeration is exponential in N; use N in {1, 2, 3}")
    if trials < 1:
        raise ValueError("need at least one trial")
    eps = np.asarray(epsilons, dtype=float)

    side = np.arange(-box, box + 1)
    re = np.stack(np.meshgrid(*([side] * N), indexing="ij"), axis=-1).reshape(-1, N)
    im = re.copy()
    D = (re[:, None, :] + 1j * im[None, :, :]).reshape(-1, N)
    D = D[np.any(D != 0, axis=1)]
    # d and -d give the same norm: keep the half whose first non-zero
    # real/imag component is positive
    flat = np.concatenate([D.real, D.imag], axis=1)
    first = np.argmax(flat != 0, axis=1)
    D = D[flat[np.arange(len(D)), first] > 0]

    counts = np.zeros(eps.size, dtype=np.int64)
    # keep the (chunk, n_candidates, N) workspace around 64 MB
    chunk = max(1, min(trials, 4_000_000 // (D.shape[0] * N)))
    done = 0
    while done < trials:
        n = min(chunk, trials - done)
        G = np.empty((n, N, N), dtype=complex)
        for i in range(n):
            rng = substream(seed, done + i, "min-distance")
            G[i] = draw_cn(rng, (N, N))
        v = np.einsum("tij,cj->tci", G, D)
        dmin = np.sqrt(np.min(np.sum(np.abs(v) ** 2, axis=2), axis=1))
        counts += np.sum(dmin[:, None] <= eps[None, :], axis=0)
        done += n
    return counts / trials


def qam_dmt_experiment(M: int, r: float, snr_db_grid, trials: int,
                       seed: int = 0) -> DecayExperimentResult:
    """Vector-error rate of uncoded QAM with joint ML on a square K = M MAC.

    At each SNR the constellation follows rate_schedule(snr, r, 1); a trial
    is one channel use and counts as an error if any user's symbol decision
    is wrong.  Channel and noise draws are shared across the grid, so the
    fitted slope (the empirical diversity at multiplexing r) is stable.
    """
    if M < 1:
        raise ValueError("need at least one receive antenna")
    snr_db = np.asarray(sorted(float(s) for s in snr_db_grid))
    if snr_db.size < 3:
        raise ValueError("need at least three SNR points for a slope")
    K = M
    err = np.zeros(snr_db.size)
    for si, snr in enumerate(snr_db):
        sched = rate_schedule(snr, r, 1.0)
        sp = QamSpec(sched.Q)
        rho = 10.0 ** (snr / 10.0)
        Qs = (sched.Q,) * K
        n_sym = sched.Q ** 2
        errors = 0
        if n_sym ** K > 1024:
            # big constellations: exhaustive batches thrash memory, the
            # sphere decoder is exact and per-trial cheap
            for t in range(trials):
                rng = substream(seed, t, "qam-dmt")
                H = draw_cn(rng, (M, K))
                tx = rng.integers(0, n_sym, size=K)
                y = np.sqrt(rho) * (H @ sp.scaled_alphabet[tx]) + draw_cn(rng, (M,))
                dec = sphere_decode(y, H, rho, sp)
                errors += int(not np.array_equal(dec, sp.scaled_alphabet[tx]))
            err[si] = errors / trials
            continue
        # (chunk, candidates, M) distance workspace, about 64 MB at most
        chunk = max(1, min(trials, 4_000_000 // (n_sym ** K * M)))
        done = 0
        while done < trials:
            n = min(chunk, trials - done)
            H = np.empty((n, M, K), dtype=complex)
            tx = np.empty((n, K), dtype=np.int64)
            Wn = np.empty((n, M), dtype=complex)
            for i in range(n):
                rng = substream(seed, done + i, "qam-dmt")
                H[i] = draw_cn(rng, (M, K))
                tx[i] = rng.integers(0, n_sym, size=K)
                Wn[i] = draw_cn(rng, (M,))
            A = np.sqrt(rho) * H
            sym = sp.scaled_alphabet[tx]
            Y = np.einsum("bmk,bk->bm", A, sym) + Wn
            dec = _ml_decode_index_batch(Y, A, Qs)
            # dec is the flat candidate index; unpack to per-user indices
            dec_users = np.empty((n, K), dtype=np.int64)
            rem = dec
            for k in range(K - 1, -1, -1):
                dec_users[:, k] = rem % n_sym
                rem = rem // n_sym
            errors += int(np.sum(np.any(dec_users != tx, axis=1)))
            done += n
        err[si] = errors / trials
    if np.any(err <= 0):
        raise RuntimeError("error counts hit zero; increase trials or lower the top SNR")
    rho_grid = 10.0 ** (snr_db / 10.0)
    slope, stderr = loglog_slope(rho_grid, err)
    curve = ExponentCurve(points=tuple(zip(rho_grid.tolist(), err.tolist())),
                          kind="empirical")
    return DecayExperimentResult(curve=curve, slope=slope, slope_stderr=stderr,
                                 trials=trials)
