"""Conditional-distribution rate-distortion-perception functions.

Rates are in nats throughout.
"""
from ._accel import USE_NUMBA, backend
from .binary import EnvelopeModel, build_envelope, envelope_gap, hbar, is_tight, rate_binary, symmetric_construction
from .errors import DimensionError, InputError, InstanceTooLargeError
from .finite import RdpPoint, RdpProblem, RdpSolution, SolverConfig, binary_problem, oracle_rdp, rdp_curve, solve_rdp
from .gaussian import (
    GaussianMixtureSource,
    GaussianVectorSource,
    WaterfillSolution,
    achieving_joint,
    chi_program_solve,
    classical_rd_rate,
    d_star,
    mixture_rate,
    shannon_lower_bound,
    waterfill,
)
from .probability import (
    Channel,
    DistortionMatrix,
    JointDistribution,
    ProbVector,
    binary_entropy,
    entropy,
    expected_distortion,
    mutual_information,
    posterior,
)
from .simulate import SimReport, mixture_entropy_mc, simulate_finite, simulate_gaussian
from .transport import CostMatrix, TransportPlan, discrete_ot, tv_distance, w2_squared_1d, w2_squared_gaussian_diag

__version__ = "0.1.0"
