"""Quantized constant-envelope downlink precoding by margin maximization.

The package bundles a bounded-variable two-phase simplex solver (lp), PSK/QAM
constellation tooling with Gray labeling and geometric safety margins
(constellation), the phase quantizer and its polygon relaxation (quantize),
the margin-maximizing precoders plus linear baselines (precoder, estimators),
a Monte-Carlo BER engine (sim), and a CLI with named experiment presets (cli).
"""

from .constellation import (Constellation, bits_to_symbols, detect, make_psk,
                            make_qam, named_constellation, psk_margin,
                            qam_margin, safety_margin, symbols_to_bits)
from .estimators import MsmPrecoder, WfPrecoder
from .exceptions import (ConfigError, DegenerateBlock, DimensionMismatch,
                         InvalidBounds, InvalidOrder, LengthMismatch,
                         MsmprecError, NumericalBreakdown, SingularChannel,
                         SolverFailure)
from .lp import (CertifyReport, LpProblem, LpSolution, Status, canonicalize,
                 certify, dump_lp, load_lp, predict_ops, solve)
from .precoder import (PrecodeResult, build_psk_lp, build_qam_lp, msm_psk,
                       msm_qam, msm_qam_block, msm_qam_per_user_alpha,
                       qwf_precode, wf_ce_precode, wf_precode)
from .quantize import (ce_alphabet, ce_quantize, phase_quantize,
                       polygon_contains, polygon_spec)
from .sim import (BerRecord, SimConfig, alpha_range_stats, corrupt_csi,
                  distortion_stats, estimate_gain, gen_channel,
                  iteration_stats, run_ber, transmit, write_ber_csv)

__version__ = "0.1.0"

__all__ = [
    "BerRecord", "CertifyReport", "ConfigError", "Constellation",
    "DegenerateBlock", "DimensionMismatch", "InvalidBounds", "InvalidOrder",
    "LengthMismatch", "LpProblem", "LpSolution", "MsmPrecoder",
    "MsmprecError", "NumericalBreakdown", "PrecodeResult", "SimConfig",
    "SingularChannel", "SolverFailure", "Status", "WfPrecoder",
    "alpha_range_stats", "bits_to_symbols", "build_psk_lp", "build_qam_lp",
    "canonicalize", "ce_alphabet", "ce_quantize", "certify", "corrupt_csi",
    "detect", "distortion_stats", "dump_lp", "estimate_gain", "gen_channel",
    "iteration_stats", "load_lp", "make_psk", "make_qam",
    "msm_psk", "msm_qam", "msm_qam_block", "msm_qam_per_user_alpha",
    "named_constellation", "phase_quantize", "polygon_contains",
    "polygon_spec", "predict_ops", "psk_margin", "qam_margin", "qwf_precode",
    "run_ber", "safety_margin", "solve", "symbols_to_bits", "transmit",
    "wf_ce_precode", "wf_precode", "write_ber_csv",
]
