"""Channel-state feedback over a block-fading multiple-access channel.

Monte-Carlo simulator and analytic toolkit for comparing digital, analog,
and hybrid feedback of receiver-side channel estimates: distortion decay
exponents, the matching transmission schemes, and the experiment harness
that reproduces the distortion-versus-SNR curves.
"""

from .model import (SIGMA_DIM, ChannelRealization, ConfigError,
                    DistortionRecord, SourceBlock, SystemConfig,
                    apply_mac_channel, db_to_lin, draw_channel, draw_source,
                    make_config, substream)
from .exponents import (ExponentCurve, SubsetSpec, curve_tabulate,
                        dmt_mac, dmt_single_user, hybrid_exponent,
                        informed_transmitter_bound, loglog_slope,
                        lower_bound_mc, rate_outage_floor, separated_exponent,
                        sic_exponent)
from .quantizer import (QuantizerSpec, dequantize, dequantize_block,
                        distortion_rate, mean_distortion, quantize,
                        quantize_block)
from .phy import (DecayExperimentResult, QamSpec, RankDeficiencyError,
                  RateSchedule, gray_demap, gray_demap_block, gray_map,
                  gray_map_block, lmmse_estimate, min_distance_experiment,
                  ml_joint_decode, qam_dmt_experiment, rate_schedule,
                  sic_decode, sphere_decode, sphere_decode_uses)
from .schemes import (HybridLayout, SchemeOutcome, hybrid_schedule,
                      ideal_reference, make_hybrid_layout, run_analog,
                      run_hybrid, run_separated, separated_schedule)
from .harness import (ExperimentSpec, SweepResult, default_analytic_curves,
                      emit_curves, estimate_slope, format_experiment_spec,
                      parse_curves_csv, parse_experiment_spec,
                      parse_results_csv, run_asymmetric, run_sweep)

__version__ = "0.1.0"

__all__ = [
    "SIGMA_DIM", "ChannelRealization", "ConfigError", "DistortionRecord",
    "SourceBlock", "SystemConfig", "apply_mac_channel", "db_to_lin",
    "draw_channel", "draw_source", "make_config", "substream",
    "ExponentCurve", "SubsetSpec", "curve_tabulate", "dmt_mac",
    "dmt_single_user", "hybrid_exponent", "informed_transmitter_bound",
    "loglog_slope", "lower_bound_mc", "rate_outage_floor",
    "separated_exponent", "sic_exponent",
    "QuantizerSpec", "dequantize", "dequantize_block", "distortion_rate",
    "mean_distortion", "quantize", "quantize_block",
    "DecayExperimentResult", "QamSpec", "RankDeficiencyError", "RateSchedule",
    "gray_demap", "gray_demap_block", "gray_map", "gray_map_block",
    "lmmse_estimate", "min_distance_experiment", "ml_joint_decode",
    "qam_dmt_experiment", "rate_schedule", "sic_decode", "sphere_decode",
    "sphere_decode_uses",
    "HybridLayout", "SchemeOutcome", "hybrid_schedule", "ideal_reference",
    "make_hybrid_layout", "run_analog", "run_hybrid", "run_separated",
    "separated_schedule",
    "ExperimentSpec", "SweepResult", "default_analytic_curves", "emit_curves",
    "estimate_slope", "format_experiment_spec", "parse_curves_csv",
    "parse_experiment_spec", "parse_results_csv", "run_asymmetric",
    "run_sweep",
]
