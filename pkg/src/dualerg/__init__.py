"""Ergodic averages of kernel operators on the dual pair of bounded functions and measures.

Finite truncations of countable metric spaces carry kernel operators acting
on functions (sup norm) and, adjointly, on measures (total variation).  The
package computes Cesaro, Abel and time averages, checks the average-scheme
axioms, estimates ergodic projections with plateau certificates in several
weak topologies, and probes fixed spaces, decompositions, tightness and
equicontinuity.
"""

from .averaging import (SchemeSpec, abel_avg, abel_avg_measure, abel_matrix, cesaro_avg, cesaro_avg_measure,
                        cesaro_matrix, scheme_report, time_avg, time_matrix, verify_as1, verify_as3)
from .core import (BoundedFunction, ResolutionError, SignedMeasure, SolverError, StateSpace, TailRule,
                   VanishingWeight, bl_bounds, bl_distance, lipschitz_constant, pairing, strict_seminorm,
                   sup_norm, tight_index, tightness_profile, tv_norm)
from .equicontinuity import (average_family, beta0_equicontinuity_probe, e_property_probe, hypothesis_probe,
                             theorem_eerg_equivalences)
from .ergodic import (cluster_detector, decomposition_check, decomposition_obstruction, estimate_projection,
                      fixed_space, obstruction_sweep, projection_invariants_check, separation_test)
from .kernels import (Kernel, KernelOperator, adjoint_apply, compose, duality_consistency, forward_apply,
                      is_markovian, operator_norms, power)
from .models import Model, build

__version__ = "0.1.0"

__all__ = [
    "StateSpace", "TailRule", "BoundedFunction", "SignedMeasure", "VanishingWeight", "ResolutionError",
    "SolverError", "pairing", "sup_norm", "tv_norm", "strict_seminorm", "lipschitz_constant",
    "tightness_profile", "tight_index", "bl_distance", "bl_bounds",
    "Kernel", "KernelOperator", "forward_apply", "adjoint_apply", "duality_consistency", "compose", "power",
    "is_markovian", "operator_norms",
    "SchemeSpec", "cesaro_avg", "cesaro_avg_measure", "cesaro_matrix", "abel_avg", "abel_avg_measure",
    "abel_matrix", "time_avg", "time_matrix", "verify_as1", "verify_as3", "scheme_report",
    "fixed_space", "separation_test", "estimate_projection", "projection_invariants_check",
    "decomposition_check", "decomposition_obstruction", "obstruction_sweep", "cluster_detector",
    "average_family", "e_property_probe", "beta0_equicontinuity_probe", "hypothesis_probe",
    "theorem_eerg_equivalences", "Model", "build",
]
