"""Coded Map-Shuffle-Reduce over a shared wireless channel.

Lagrange + repetition coding of polynomial workloads, straggler-aware delay
analysis for three shuffle strategies (coded multicasting, cooperative
zero-forcing, superposition coding) under imperfect CSI, and a functional
simulator whose decoded outputs are checked against direct evaluation.
"""
from .config import SystemConfig, as_fraction
from .delay_model import (DelayBreakdown, Mode, Scheme, gain, map_delay, min_shuffle_delay,
                          optimize_q, shuffle_delay_fixed, total_delay)
from .ff_poly import (DEFAULT_PRIME, MultivariatePolynomial, PrimeField, UnivariatePolynomial,
                      eval_univariate, field_inverse, interpolate, poly_eval)
from .kernels import BACKEND
from .lagrange_code import (CodeParams, IntermediateValue, decode_outputs, encode,
                            generator_matrix, recovery_threshold)
from .placement import (MultiplicityProfile, PlacementMap, assign_batches,
                        coverage_check_bruteforce, feasibility, multiplicity_profile, q_min,
                        stored_per_device)

__version__ = "0.1.0"
