"""Losses, the three dual objectives, feasibility tests, and error bounds.

The primal family shares one data-fit term f(b - Mx) and differs in how the
gauge enters: as a penalty with weight lam ("penalized"), as a ball
constraint with radius tau ("gauge_ball"), or as the objective subject to a
misfit cap alpha ("residual_ball"). Each has a matching dual minimized over
the observation space; all duals here are minimization problems, so weak
duality reads p(x) + d(y) >= 0.
"""

from dataclasses import dataclass, field

import numpy as np

from .atoms import INFINITE, is_finite
from .tolerances import TOL

__all__ = [
    "HalfSqNorm", "Formulation", "ProblemSpec", "DualState",
    "dual_objective", "dual_feasible", "epsilon_bound", "beta_bracket",
    "primal_value",
]

FORMULATIONS = ("penalized", "gauge_ball", "residual_ball")


class HalfSqNorm:
    """f(r) = 0.5 ||r||^2; self-conjugate, 1-smooth, f(0)=0, grad f(0)=0."""

    L = 1.0

    @staticmethod
    def value(r):
        return 0.5 * float(np.vdot(r, r))

    @staticmethod
    def grad(r):
        return np.asarray(r, dtype=float)

    @staticmethod
    def conj(y):
        return 0.5 * float(np.vdot(y, y))

    @staticmethod
    def conj_grad(y):
        return np.asarray(y, dtype=float)


@dataclass(frozen=True)
class Formulation:
    """kind in {"penalized", "gauge_ball", "residual_ball"} with its level."""

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in FORMULATIONS:
            raise ValueError(f"unknown formulation {self.kind!r}")
        if self.kind in ("penalized", "gauge_ball") and self.value <= 0:
            raise ValueError(f"{self.kind} level must be positive")
        if self.kind == "residual_ball" and self.value < 0:
            raise ValueError("misfit cap must be nonnegative")

    @classmethod
    def penalized(cls, lam):
        return cls("penalized", float(lam))

    @classmethod
    def gauge_ball(cls, tau):
        return cls("gauge_ball", float(tau))

    @classmethod
    def residual_ball(cls, alpha):
        return cls("residual_ball", float(alpha))


@dataclass
class DualState:
    """A dual iterate with bookkeeping used by the retrieval loop."""

    y: np.ndarray
    d_value: float = np.nan
    beta_bracket: tuple = None
    gap_bound: float = None

    def __post_init__(self):
        if self.beta_bracket is not None:
            lo, hi = self.beta_bracket
            if not (0 < lo <= hi):
                raise ValueError("beta bracket must satisfy 0 < lo <= hi")
        if self.gap_bound is not None and self.gap_bound < 0:
            raise ValueError("gap bound must be nonnegative")


@dataclass
class ProblemSpec:
    """A full problem instance: loss, operator, data, dictionary, target."""

    loss: object
    op: object
    b: np.ndarray
    atoms: object
    formulation: Formulation
    k: object                  # int, or (k_left, k_right) for weighted sums
    eps_tol: float = 0.0
    fit_target: float = None   # misfit cap used by the termination test
    _opnorm: float = field(default=None, repr=False)

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float)
        if self.b.shape != self.op.shape_out:
            raise ValueError(
                f"observation shape {self.b.shape} != operator range "
                f"{self.op.shape_out}")
        if self.eps_tol < 0:
            raise ValueError("eps_tol must be nonnegative")
        if self.fit_target is None and self.formulation.kind == "residual_ball":
            self.fit_target = self.formulation.value

    def residual(self, x):
        return self.b - self.op.forward(x)

    def misfit(self, x):
        return self.loss.value(self.residual(x))

    def atomic_opnorm(self, trials=60):
        """Cached induced operator norm (exact or certified upper bound)."""
        if self._opnorm is None:
            self._opnorm = self.atoms.opnorm(self.op, trials=trials)
        return self._opnorm


def dual_objective(spec, y, beta=None, z=None):
    """Dual objective value at y (and beta for the residual_ball dual).

    ``z`` may pass a precomputed adjoint image M*y to avoid re-applying
    the operator.
    """
    f, b = spec.loss, spec.b
    base = f.conj(y) - float(np.vdot(b, y))
    kind = spec.formulation.kind
    if kind == "penalized":
        return base
    if kind == "gauge_ball":
        if z is None:
            z = spec.op.adjoint(y)
        return base + spec.formulation.value * spec.atoms.support(z)
    if beta is None or beta <= 0:
        raise ValueError("residual_ball dual needs beta > 0")
    alpha = spec.formulation.value
    return beta * (f.conj(y / beta) + alpha) - float(np.vdot(b, y))


def dual_feasible(spec, y, z=None):
    """Support-function constraint test with tolerance TOL.feasibility."""
    kind = spec.formulation.kind
    if kind == "gauge_ball":
        return True
    if z is None:
        z = spec.op.adjoint(y)
    level = spec.formulation.value if kind == "penalized" else 1.0
    return spec.atoms.feasibility_value(z) <= level + TOL.feasibility


def epsilon_bound(spec, state, d_star_lower):
    """Exposure radius guaranteeing containment of the optimal support.

    ``d_star_lower`` must be a certified lower bound on the optimal dual
    value (e.g. -p(x) for a primal-feasible x, by weak duality); the bound
    stays valid because the duality gap is only ever overestimated.
    """
    L = spec.loss.L
    norm = spec.atomic_opnorm()
    kind = spec.formulation.kind
    if kind == "penalized":
        gap = max(state.d_value - d_star_lower, 0.0)
        return norm * np.sqrt(2.0 * L * gap)
    if kind == "gauge_ball":
        gap = max(state.d_value - d_star_lower, 0.0)
        return 2.0 * norm * np.sqrt(2.0 * L * gap)
    if state.beta_bracket is None:
        raise RuntimeError(
            "no beta bracket available yet; the bound is undefined until "
            "the level-set method brackets the optimal multiplier")
    lo, hi = state.beta_bracket
    d_up = max(dual_objective(spec, state.y, beta=lo),
               dual_objective(spec, state.y, beta=hi))
    gap = max(d_up - d_star_lower, 0.0)
    return 2.0 * norm * np.sqrt(2.0 * hi * L * gap)


def beta_bracket(spec, x_lo, x_hi):
    """Multiplier bracket from two gauge-constrained subproblem solutions.

    The gradient support values sigma(M* grad f(b - M x_j)) at the two
    level-bracket endpoint solutions bracket the weight of the equivalent
    penalized problem; the multiplier that minimizes the residual-ball
    dual is its reciprocal, so the returned bracket is inverted.
    """
    vals = []
    for x in (x_lo, x_hi):
        g = spec.loss.grad(spec.b - spec.op.forward(x))
        z = spec.op.adjoint(g)
        val = spec.atoms.support(z)
        if not np.isfinite(val) or val <= 0:
            raise FloatingPointError("degenerate gradient in beta bracket")
        vals.append(val)
    return (1.0 / max(vals), 1.0 / min(vals))


def primal_value(spec, x, gauge=None):
    """p(x) for the spec's formulation; INFINITE outside the feasible set.

    ``gauge`` may supply a precomputed (upper bound on the) gauge of x,
    which is required for dictionaries without a closed-form gauge.
    """
    fit = spec.misfit(x)
    if gauge is None:
        gauge = spec.atoms.gauge(x)
    kind = spec.formulation.kind
    if kind == "penalized":
        if not is_finite(gauge):
            return INFINITE
        return fit + spec.formulation.value * gauge
    if kind == "gauge_ball":
        if not is_finite(gauge) or gauge > spec.formulation.value + 1e-9:
            return INFINITE
        return fit
    if fit > spec.formulation.value + 1e-9:
        return INFINITE
    return gauge
