"""Dual-to-primal retrieval for atomic-sparse optimization.

Given any dual solver that produces improving dual-feasible iterates for
a gauge-regularized data-fitting problem, this package identifies the
small set of dictionary atoms exposed by the dual direction, solves the
reduced problem over those atoms, and certifies the result with
computable exposure and duality-gap bounds.
"""

from .atoms import (INFINITE, AtomicSet, CapacityError, NonnegCanonical,
                    NonnegUnit, Rank1, Rank1Sym, ReducedModel, Scaled,
                    SignedCanonical, SignedUnit, SpectralAsym, SpectralPSD,
                    WeightedSum, is_finite)
from .linops import (Compose, Conv1d, Dct, Dense, EntryMask,
                     GaussianEnsemble, Haar, HStack, Identity, LinOp,
                     OpCounter)
from .objectives import (DualState, Formulation, HalfSqNorm, ProblemSpec,
                         beta_bracket, dual_feasible, dual_objective,
                         epsilon_bound, primal_value)
from .retrieval import (RetrievalReport, hausdorff_bound,
                        hausdorff_recovery_bound, nondegeneracy_margin,
                        run_retrieval)
from .solvers import (LevelSetCGOracle, OracleState, ProxDualOracle,
                      ReducedSolution, make_oracle, solve_reduced)
from .spectral import SpectralError, TruncatedSvd, truncated_eig_sym, truncated_svd

__version__ = "0.1.0"

__all__ = [
    "INFINITE", "is_finite", "AtomicSet", "CapacityError", "SignedUnit",
    "NonnegUnit", "Rank1", "Rank1Sym", "Scaled", "SignedCanonical",
    "NonnegCanonical", "SpectralAsym", "SpectralPSD", "WeightedSum",
    "ReducedModel",
    "LinOp", "OpCounter", "Dense", "Identity", "Dct", "Haar", "Conv1d",
    "GaussianEnsemble", "EntryMask", "Compose", "HStack",
    "HalfSqNorm", "Formulation", "ProblemSpec", "DualState",
    "dual_objective", "dual_feasible", "epsilon_bound", "beta_bracket",
    "primal_value",
    "OracleState", "ReducedSolution", "ProxDualOracle", "LevelSetCGOracle",
    "make_oracle", "solve_reduced",
    "RetrievalReport", "run_retrieval", "hausdorff_bound",
    "nondegeneracy_margin", "hausdorff_recovery_bound",
    "TruncatedSvd", "SpectralError", "truncated_svd", "truncated_eig_sym",
]
