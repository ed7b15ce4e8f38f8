"""Link-level simulator and library for a channel-hardening-exploiting
message passing (CHEMP) receiver in large multiuser MIMO uplinks.

The receiver works on matched-filter statistics (J = H^T H / N,
z = H^T y / N), detects with a damped Gaussian-approximation message
passing algorithm, estimates (J, z) directly from pilots without forming
a channel estimate, and couples the detector with per-user LDPC decoders
on a single factor graph.
"""

__version__ = "0.1.0"

from .analysis import (ConvergenceReport, convergence_condition,
                       fixed_point_residuals, llr_mse_bound, llr_mse_empirical)
from .baselines import map_oracle, mmse_detect, qfunc, siso_awgn_ber
from .estimate import (PilotObservation, estimate_gram, estimate_z,
                       gram_observation_from_pilots, mmse_channel_estimate,
                       pilot_amplitude, receive_pilots)
from .hardening import (GramMatrix, HardeningReport, eigenvalue_histogram,
                        gram, hardening_report, mp_cdf, mp_density,
                        mp_distance, mp_support)
from .harness import (BerCurve, BerPoint, OperationCount, SimConfig,
                      build_sweep_code, config_hash, count_operations,
                      resolve_profile, run_coded_sweep, run_uncoded_sweep)
from .joint import (JointConfig, JointResult, bits_to_symbols,
                    detect_then_decode, gather_bit_llrs, j_function,
                    j_inverse, joint_detect_decode, measure_exit_detector,
                    mutual_information_histogram, scatter_bit_llrs)
from .ldpc import (TABLE_PROFILES, DecodeResult, DegreeProfile, LdpcCode,
                   SumProduct, bp_decode, bp_decode_batch, build_code,
                   check_message_llr, check_message_probability,
                   code_from_parity_check, encode, read_alist,
                   regular_profile, sum_product_kernel, write_alist)
from .model import (ComplexChannel, RealSystemInstance, SnrSpec, demodulate,
                    generate_channel, modulate, noise_variance,
                    simulate_transmission, to_complex_vec, to_real,
                    to_real_vec, transmit)
from .mpd import (BeliefState, GramObservation, MpdConfig, MpdEngine,
                  aitken_step, hard_decision, matched_filter, mpd_detect)

__all__ = [name for name in dir() if not name.startswith("_")]
