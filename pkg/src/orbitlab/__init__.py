"""Real-interpolation numerics on finite weighted Lebesgue couples."""

from .clnorm import CLResult, MembershipError, cl_norm, cl_oracle, cl_seq_norm
from .kfunc import KFunctional, KResult, OracleScaleError, SolverError, k_at, k_oracle, k_profile
from .means import MeansResult, means_norm, means_norm_direct
from .orbit import (OperatorSpec, OrbitProblem, OrbitReport, apply_operator, harness_prop1,
                    l1_couple_k, orbit_exponents, orbit_norm, prop2_verify, prop2_weights)
from .phifn import (BalancedSequence, InterpFunction, PhiClassification, balanced_sequence,
                    classify, concave_majorant, equivalence_band, evaluate)
from .spaces import (INF, Couple, DimensionError, DomainError, WeightedSpace, dual_exponent,
                     norm, sum_and_intersection_norms)

__version__ = "0.1.0"

__all__ = [
    "INF", "WeightedSpace", "Couple", "DimensionError", "DomainError", "dual_exponent", "norm",
    "sum_and_intersection_norms", "KFunctional", "KResult", "SolverError", "OracleScaleError",
    "k_at", "k_profile", "k_oracle", "InterpFunction", "PhiClassification", "BalancedSequence",
    "evaluate", "classify", "balanced_sequence", "concave_majorant", "equivalence_band",
    "CLResult", "MembershipError", "cl_norm", "cl_seq_norm", "cl_oracle", "MeansResult",
    "means_norm", "means_norm_direct", "OrbitProblem", "OrbitReport", "OperatorSpec",
    "orbit_exponents", "orbit_norm", "prop2_weights", "prop2_verify", "l1_couple_k",
    "apply_operator", "harness_prop1",
]
