"""Monte-Carlo sweeps, slope estimation, and CSV emission.

An ExperimentSpec pins everything a run needs (scheme, geometry, SNR grid,
trial budget, seed) and round-trips through a flat key = value text format
or JSON.  Sweeps average per-user distortion per SNR point, stopping early
once the standard error of the user-averaged MSE drops below 1% of its
mean; the stopping rule depends only on seeded draws, so re-running a spec
reproduces its output byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .exponents import curve_tabulate, loglog_slope, ExponentCurve
from .model import ConfigError, DistortionRecord, SystemConfig, make_config
from .phy import rate_schedule
from .schemes import (hybrid_schedule, ideal_reference, make_hybrid_layout,
                      run_analog, run_hybrid, run_separated, separated_schedule)

SCHEMES = ("analog", "separated", "hybrid", "ideal")

_EARLY_STOP_REL = 0.01           # stop a point once stderr < 1% of mean MSE
_EARLY_STOP_CHECK = 1000         # trials between stopping-rule checks
_EARLY_STOP_MIN = 4000           # never stop before this many trials


@dataclass
class ExperimentSpec:
    """Everything needed to reproduce one sweep."""

    scheme: str = "separated"    # one of SCHEMES, or "all"
    K: int = 4
    N_t: int = 1
    M: int = 4
    b: float = 4.0
    S: int = 1
    snr_db_grid: tuple[float, ...] = (12.0412, 18.0618, 24.0824)
    trials: int = 100_000
    seed: int = 0
    r_c: float | None = None     # None tracks the exponent-optimal rate
    per_user_snr_db: tuple[float, ...] | None = None
    out_dir: str = "results"

    def __post_init__(self):
        if self.scheme not in SCHEMES + ("all",):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        self.snr_db_grid = tuple(float(s) for s in self.snr_db_grid)
        if self.per_user_snr_db is not None:
            self.per_user_snr_db = tuple(float(s) for s in self.per_user_snr_db)

    def to_config(self) -> SystemConfig:
        return make_config(K=self.K, N_t=self.N_t, M=self.M, b=self.b, S=self.S,
                           snr_db_grid=self.snr_db_grid, trials=self.trials,
                           seed=self.seed, per_user_snr_db=self.per_user_snr_db)


_SPEC_KEYS = ("scheme", "K", "N_t", "M", "b", "S", "snr_db_grid", "trials",
              "seed", "rc", "per_user_snr_db", "out_dir")


def format_experiment_spec(spec: ExperimentSpec) -> str:
    """Canonical flat key = value rendering; parse() of it returns spec."""
    rc = "auto" if spec.r_c is None else repr(spec.r_c)
    pu = "" if spec.per_user_snr_db is None else \
        ", ".join(repr(v) for v in spec.per_user_snr_db)
    values = {
        "scheme": spec.scheme, "K": spec.K, "N_t": spec.N_t, "M": spec.M,
        "b": repr(spec.b), "S": spec.S,
        "snr_db_grid": ", ".join(repr(v) for v in spec.snr_db_grid),
        "trials": spec.trials, "seed": spec.seed, "rc": rc,
        "per_user_snr_db": pu, "out_dir": spec.out_dir,
    }
    return "".join(f"{k} = {values[k]}\n" for k in _SPEC_KEYS)


def _parse_float_list(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.replace(",", " ").split())


def parse_experiment_spec(text: str) -> ExperimentSpec:
    """Parse the flat format (or JSON, detected by a leading '{')."""
    text = text.strip()
    if text.startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad JSON experiment spec: {exc}") from exc
        unknown = set(raw) - set(_SPEC_KEYS)
        if unknown:
            raise ConfigError(f"unknown spec keys: {sorted(unknown)}")
        fields = {}
        for k, v in raw.items():
            if v is None:
                fields[k] = ""
            elif isinstance(v, (list, tuple)):
                fields[k] = ", ".join(repr(float(x)) for x in v)
            else:
                fields[k] = str(v)
    else:
        fields = {}
        for ln, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {ln}: expected 'key = value', got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in _SPEC_KEYS:
                raise ConfigError(f"line {ln}: unknown key {key!r}")
            if key in fields:
                raise ConfigError(f"line {ln}: duplicate key {key!r}")
            fields[key] = value.strip()

    def grab(key, conv, default):
        if key not in fields or fields[key] == "":
            if default is ...:
                raise ConfigError(f"missing required spec key {key!r}")
            return default
        try:
            return conv(fields[key])
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {fields[key]!r}") from exc

    rc_text = fields.get("rc", "auto").strip()
    return ExperimentSpec(
        scheme=grab("scheme", str, "separated"),
        K=grab("K", int, 4), N_t=grab("N_t", int, 1), M=grab("M", int, 4),
        b=grab("b", float, 4.0), S=grab("S", int, 1),
        snr_db_grid=grab("snr_db_grid", _parse_float_list, ...),
        trials=grab("trials", int, 100_000), seed=grab("seed", int, 0),
        r_c=None if rc_text in ("auto", "") else float(rc_text),
        per_user_snr_db=grab("per_user_snr_db", _parse_float_list, None),
        out_dir=grab("out_dir", str, "results"),
    )


@dataclass
class SweepResult:
    """All SNR points of one scheme (or one user class), plus the fitted slope."""

    scheme: str
    user_class: str              # "all", or the class label of an asymmetric run
    records: list[DistortionRecord] = field(default_factory=list)
    slope: float = float("nan")
    slope_stderr: float = float("nan")


def estimate_slope(records: list[DistortionRecord]) -> tuple[float, float]:
    """Distortion decay exponent from the upper half of a sweep's SNR grid."""
    snr = np.array([r.snr_db for r in records])
    mse = np.array([r.mse for r in records])
    return loglog_slope(10.0 ** (snr / 10.0), mse)


def _run_point(cfg: SystemConfig, scheme: str, snr_db: float,
               r_c: float | None) -> DistortionRecord:
    """All trials of one scheme at one SNR point, with early stopping."""
    if scheme in ("separated", "ideal"):
        sched = separated_schedule(cfg, snr_db, r_c)
        run = (lambda t: run_separated(cfg, sched, t, snr_db=snr_db)) \
            if scheme == "separated" else (lambda t: ideal_reference(cfg, sched, t))
    elif scheme == "hybrid":
        layout = make_hybrid_layout(cfg)
        sched = hybrid_schedule(cfg, layout, snr_db, r_c)
        run = lambda t: run_hybrid(cfg, layout, sched, t, snr_db=snr_db)
    elif scheme == "analog":
        run = lambda t: run_analog(cfg, t, snr_db=snr_db)
    else:
        raise ConfigError(f"unknown scheme {scheme!r}")

    se_sum = np.zeros(cfg.K)
    tot = 0.0
    tot_sq = 0.0
    errors = 0
    n = 0
    for trial in range(cfg.trials):
        out = run(trial)
        se_sum += out.per_user_se
        m = float(np.mean(out.per_user_se))
        tot += m
        tot_sq += m * m
        errors += out.digital_error
        n += 1
        if n >= _EARLY_STOP_MIN and n % _EARLY_STOP_CHECK == 0:
            mean = tot / n
            var = max(tot_sq / n - mean * mean, 0.0)
            if mean > 0 and np.sqrt(var / n) < _EARLY_STOP_REL * mean:
                break
    mean = tot / n
    var = max(tot_sq / n - mean * mean, 0.0)
    return DistortionRecord(snr_db=snr_db, per_user_mse=se_sum / n,
                            decode_error_rate=errors / n, trials_used=n,
                            mse_stderr=float(np.sqrt(var / n)))


def run_sweep(spec: ExperimentSpec) -> list[SweepResult]:
    """One SweepResult per requested scheme over the spec's SNR grid."""
    cfg = spec.to_config()
    schemes = SCHEMES if spec.scheme == "all" else (spec.scheme,)
    results = []
    for scheme in schemes:
        res = SweepResult(scheme=scheme, user_class="all")
        for snr_db in cfg.snr_db_grid:
            res.records.append(_run_point(cfg, scheme, snr_db, spec.r_c))
        if len(res.records) >= 3:
            res.slope, res.slope_stderr = estimate_slope(res.records)
        results.append(res)
    return results


def run_asymmetric(spec: ExperimentSpec) -> list[SweepResult]:
    """Per-class distortion curves of the separated scheme on a mixed uplink.

    spec.per_user_snr_db holds the nominal per-user SNRs.  Each SNR class is
    swept across spec.snr_db_grid in turn: its users operate at the grid
    value while every other user keeps its nominal SNR, so a class's curve
    is its own distortion against its own SNR with the rest of the uplink
    held fixed.  Every user gets the rate schedule for its current SNR, so
    the joint decoder sees mixed constellations.  The decode error rate is
    a per-slot quantity repeated in the swept class's records.
    """
    if spec.per_user_snr_db is None:
        raise ConfigError("asymmetric run needs per_user_snr_db")
    cfg = spec.to_config()
    nominal = np.asarray(cfg.per_user_snr_db)
    r_c = spec.r_c
    if r_c is None:
        from .exponents import separated_exponent
        r_c = separated_exponent(cfg.K, cfg.N_t, cfg.M, cfg.b)[1]
    labels = sorted(set(nominal.tolist()), reverse=True)
    results = []
    for lab in labels:
        members = nominal == lab
        res = SweepResult(scheme="separated", user_class=f"{lab:g}dB")
        for point in cfg.snr_db_grid:
            snrs = np.where(members, point, nominal)
            schedules = [rate_schedule(s, r_c, cfg.b) for s in snrs]
            for sched in schedules:
                if cfg.S * sched.R_s != cfg.T * sched.R_c:
                    raise ConfigError("per-user bit budget does not close")
            cfg_point = replace(cfg, per_user_snr_db=tuple(snrs))
            se_sum = np.zeros(cfg.K)
            tot = 0.0
            tot_sq = 0.0
            errors = 0
            n = 0
            for trial in range(cfg.trials):
                out = run_separated(cfg_point, schedules, trial)
                se_sum += out.per_user_se
                m = float(np.mean(out.per_user_se[members]))
                tot += m
                tot_sq += m * m
                errors += out.digital_error
                n += 1
                if n >= _EARLY_STOP_MIN and n % _EARLY_STOP_CHECK == 0:
                    mean = tot / n
                    var = max(tot_sq / n - mean * mean, 0.0)
                    if mean > 0 and np.sqrt(var / n) < _EARLY_STOP_REL * mean:
                        break
            mean = tot / n
            var = max(tot_sq / n - mean * mean, 0.0)
            res.records.append(DistortionRecord(
                snr_db=float(point), per_user_mse=se_sum[members] / n,
                decode_error_rate=errors / n, trials_used=n,
                mse_stderr=float(np.sqrt(var / n))))
        if len(res.records) >= 3:
            res.slope, res.slope_stderr = estimate_slope(res.records)
        results.append(res)
    return results


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def emit_curves(results: list[SweepResult], out_dir,
                curves: list[ExponentCurve] | None = None) -> list[str]:
    """Write results.csv (and curves.csv when analytic curves are given).

    Files are UTF-8 with LF line endings and a fixed float format, so the
    same spec always produces byte-identical output.
    """
    from pathlib import Path
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []

    res_path = out / "results.csv"
    with open(res_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("scheme,snr_db,user_class,mse,mse_stderr,decode_error_rate,trials\n")
        for res in results:
            for rec in res.records:
                fh.write(",".join([
                    res.scheme, _fmt(rec.snr_db), res.user_class, _fmt(rec.mse),
                    _fmt(rec.mse_stderr), _fmt(rec.decode_error_rate),
                    str(rec.trials_used)]) + "\n")
    paths.append(str(res_path))

    if curves:
        cur_path = out / "curves.csv"
        with open(cur_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("x,y,kind\n")
            for curve in curves:
                for x, y in curve.points:
                    fh.write(f"{_fmt(x)},{_fmt(y)},{curve.kind}\n")
        paths.append(str(cur_path))
    return paths


def parse_results_csv(path) -> list[dict]:
    """Read back emit_curves' results.csv as a list of row dicts."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        for line in fh:
            tok = line.strip().split(",")
            row = dict(zip(header, tok))
            for key in ("snr_db", "mse", "mse_stderr", "decode_error_rate"):
                row[key] = float(row[key])
            row["trials"] = int(row["trials"])
            rows.append(row)
    return rows


def parse_curves_csv(path) -> list[ExponentCurve]:
    """Read back emit_curves' curves.csv, one ExponentCurve per kind."""
    by_kind: dict[str, list[tuple[float, float]]] = {}
    order = []
    with open(path, encoding="utf-8") as fh:
        fh.readline()
        for line in fh:
            x, y, kind = line.strip().split(",")
            if kind not in by_kind:
                by_kind[kind] = []
                order.append(kind)
            by_kind[kind].append((float(x), float(y)))
    return [ExponentCurve(points=tuple(by_kind[k]), kind=k) for k in order]


def default_analytic_curves(spec: ExperimentSpec,
                            b_grid=None) -> list[ExponentCurve]:
    """Exponent-versus-b overlays matching a sweep's geometry."""
    if b_grid is None:
        b_grid = np.arange(0.25, 12.01, 0.25)
    b_grid = np.asarray(b_grid, dtype=float)
    curves = [curve_tabulate(k, spec.K, spec.N_t, spec.M, b_grid)
              for k in ("upper_bound", "separated", "sic")]
    if spec.M >= spec.K and np.any(b_grid >= 1):
        # the hybrid layout spends S/N_t' uses on its analog half, so it
        # only exists for b >= 1
        curves.insert(2, curve_tabulate("hybrid", spec.K, spec.N_t, spec.M,
                                        b_grid[b_grid >= 1]))
    return curves
