"""Shared numerical tolerances, stated once."""

from types import SimpleNamespace

TOL = SimpleNamespace(
    feasibility=1e-9,     # dual feasibility slack on support-function constraints
    containment=1e-10,    # exposure / containment comparisons in tests
    unit_norm=1e-12,      # unit-norm slack on atom factors
    descent=1e-12,        # allowed non-monotonicity of accepted dual steps
)
