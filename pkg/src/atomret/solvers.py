"""Dual oracles and reduced-problem solvers.

Two oracles produce improving dual-feasible iterates: a (proximal)
projected-gradient method for the penalized and gauge-ball duals, and a
level-set method driven by a conditional-gradient inner solver for the
residual-ball formulation. The orchestration layer only relies on the
shared ``step() -> OracleState`` contract.
"""

from dataclasses import dataclass

import numpy as np

from .atoms import (NonnegCanonical, SignedCanonical, SpectralAsym,
                    SpectralPSD, WeightedSum)
from .linops import Identity, Dct, Haar
from .objectives import DualState, dual_objective, dual_feasible
from .tolerances import TOL

__all__ = [
    "OracleState", "ReducedSolution", "ProxDualOracle", "LevelSetCGOracle",
    "solve_reduced", "make_oracle",
]


@dataclass
class OracleState:
    """One emitted dual iterate plus the adjoint image used downstream."""

    state: DualState
    z: np.ndarray               # exactly M* y for the emitted y
    iteration: int
    # level-set extras (None for the prox oracle)
    tau_bracket: tuple = None
    primal_x: np.ndarray = None
    primal_parts: list = None   # per-operand blocks for Minkowski sums
    primal_gauge_ub: float = None
    primal_misfit: float = None


@dataclass
class ReducedSolution:
    params: list
    f_value: float
    iterations: int
    converged: bool


# ---------------------------------------------------------------------------
# Convex-hull projections (used by the exact prox of the gauge-ball dual)
# ---------------------------------------------------------------------------

def _project_l1_ball(w, radius):
    """Euclidean projection of w onto the l1 ball of the given radius."""
    flat = w.ravel()
    if np.sum(np.abs(flat)) <= radius:
        return w.copy()
    mags = np.sort(np.abs(flat))[::-1]
    cums = np.cumsum(mags)
    rho = np.nonzero(mags > (cums - radius) / np.arange(1, len(mags) + 1))[0][-1]
    theta = (cums[rho] - radius) / (rho + 1.0)
    return (np.sign(flat) * np.maximum(np.abs(flat) - theta, 0.0)).reshape(w.shape)


def _project_nuclear_ball(w, radius):
    U, s, Vt = np.linalg.svd(w, full_matrices=False)
    if np.sum(s) <= radius:
        return w.copy()
    return (U * _project_l1_ball(s, radius)) @ Vt


def _hull_projection(atom_set, w, radius):
    if isinstance(atom_set, SignedCanonical):
        return _project_l1_ball(w, radius)
    if isinstance(atom_set, SpectralAsym):
        return _project_nuclear_ball(w, radius)
    return None


def _support_level_project(atom_set, w, level):
    """Euclidean projection onto {sigma_A(w) <= level} (polar scaled)."""
    if isinstance(atom_set, SignedCanonical):
        return np.clip(w, -level, level)
    if isinstance(atom_set, SpectralAsym):
        U, s, Vt = np.linalg.svd(w, full_matrices=False)
        return (U * np.minimum(s, level)) @ Vt
    return None


def _gauge_prox(atom_set, v, t):
    """prox of t * gauge(.) for the concrete dictionaries, None if unknown."""
    if isinstance(atom_set, SignedCanonical):
        return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)
    if isinstance(atom_set, NonnegCanonical):
        return np.maximum(v, 0.0)        # gauge is the cone indicator's cost 0
    if isinstance(atom_set, SpectralAsym):
        U, s, Vt = np.linalg.svd(v, full_matrices=False)
        return (U * np.maximum(s - t, 0.0)) @ Vt
    if isinstance(atom_set, SpectralPSD):
        sym = 0.5 * (v + v.T)
        lam, V = np.linalg.eigh(sym)
        return (V * np.maximum(lam - t, 0.0)) @ V.T
    return None


def _gauge_ball_project(atom_set, v, tau):
    """Euclidean projection onto {gauge <= tau}, None if unknown."""
    if isinstance(atom_set, SignedCanonical):
        return _project_l1_ball(v, tau)
    if isinstance(atom_set, NonnegCanonical):
        return np.maximum(v, 0.0)        # the ball is the whole cone
    if isinstance(atom_set, SpectralAsym):
        return _project_nuclear_ball(v, tau)
    if isinstance(atom_set, SpectralPSD):
        sym = 0.5 * (v + v.T)
        lam, V = np.linalg.eigh(sym)
        lam = np.maximum(lam, 0.0)
        if np.sum(lam) > tau:
            lam = _project_l1_ball(lam, tau)
        return (V * lam) @ V.T
    return None


def _dense_lmo_atom(atom_set, z, shape):
    """Dense embedding of argmax_a <a, z> (the linear maximization oracle)."""
    if isinstance(atom_set, WeightedSum):
        left = _dense_lmo_atom(atom_set.left, z, shape)
        right = _dense_lmo_atom(atom_set.right, z, shape)
        return atom_set.lam * left + right
    return atom_set.top_k(z, 1)[0].dense(shape)


# ---------------------------------------------------------------------------
# Proximal / projected gradient dual oracle (penalized and gauge-ball duals)
# ---------------------------------------------------------------------------

class ProxDualOracle:
    """Monotone dual oracle for the penalized and gauge-ball formulations.

    Orthonormal operators admit exact dual steps: for the penalized dual a
    projected-gradient step whose projection onto {sigma(M* y) <= lam}
    pulls back through M to the convex-hull polar; for the gauge-ball dual
    a proximal-gradient step whose prox of tau * sigma(M* .) uses the same
    pullback with the Moreau identity. Both are monotone by the standard
    1/L step-size argument and are additionally guarded by backtracking.

    For general operators no implementable exact projection exists (a
    radial rescale onto the constraint stalls at non-optimal boundary
    points), so the oracle instead runs an accelerated proximal-gradient
    iteration on the corresponding primal and emits the scaled residual
    gradient as the dual certificate, keeping the best (lowest dual value)
    feasible pair seen so far. Either way every emitted pair is feasible
    and the emitted dual values are nonincreasing.
    """

    def __init__(self, spec, step_size=None):
        if spec.formulation.kind not in ("penalized", "gauge_ball"):
            raise ValueError("ProxDualOracle handles penalized/gauge_ball only")
        self.spec = spec
        self.iteration = 0
        self._orthonormal = isinstance(spec.op, (Identity, Dct, Haar)) \
            and _hull_projection(spec.atoms, np.zeros(spec.atoms.shape), 1.0) \
            is not None
        if self._orthonormal:
            self.y = np.zeros(spec.op.shape_out)
            self.step_size = step_size or 1.0 / spec.loss.L
            self._z = spec.op.adjoint(self.y)
            self._d = dual_objective(spec, self.y, z=self._z)
        else:
            lip = float(spec.op.opnorm_bound()) ** 2 * spec.loss.L
            self._step = (step_size or 1.0) / max(lip, 1e-30)
            self.x = np.zeros(spec.op.shape_in)
            self._x_y = self.x.copy()
            self._t_mom = 1.0
            self._f_prev = np.inf
            self._best = None     # (d, y, z) feasible pair, d nonincreasing

    # -- exact dual step for orthonormal operators ---------------------------

    def _dual_step(self):
        spec = self.spec
        grad = spec.loss.conj_grad(self.y) - spec.b
        level = spec.formulation.value
        s = self.step_size
        for _ in range(40):
            w = spec.op.adjoint(self.y - s * grad)
            if spec.formulation.kind == "penalized":
                z_new = _support_level_project(spec.atoms, w, level)
                y_new = spec.op.forward(z_new)
            else:
                proj = _hull_projection(spec.atoms, w, s * level)
                z_new = w - proj
                y_new = spec.op.forward(z_new)
            d_new = dual_objective(spec, y_new, z=z_new)
            if d_new <= self._d + TOL.descent and dual_feasible(
                    spec, y_new, z=z_new):
                if d_new < self._d:
                    self.step_size = min(s * 1.3, 1e6)
                self.y, self._z, self._d = y_new, z_new, d_new
                break
            s *= 0.5
        return OracleState(
            state=DualState(y=self.y.copy(), d_value=self._d),
            z=self._z.copy(), iteration=self.iteration)

    # -- primal-driven certificates for general operators --------------------

    def _primal_objective(self, x, r):
        spec = self.spec
        fit = spec.loss.value(r)
        if spec.formulation.kind == "penalized":
            return fit + spec.formulation.value * spec.atoms.gauge(x)
        return fit

    def _primal_map(self, v):
        spec = self.spec
        if spec.formulation.kind == "penalized":
            out = _gauge_prox(spec.atoms, v, self._step * spec.formulation.value)
        else:
            out = _gauge_ball_project(spec.atoms, v, spec.formulation.value)
        if out is None:
            raise NotImplementedError(
                "no proximal map for this dictionary; use the level-set "
                "oracle or an orthonormal operator")
        return out

    def _primal_step(self):
        spec = self.spec
        r_y = spec.b - spec.op.forward(self._x_y)
        grad = -spec.op.adjoint(spec.loss.grad(r_y))
        x_new = self._primal_map(self._x_y - self._step * grad)
        r_new = spec.b - spec.op.forward(x_new)
        f_new = self._primal_objective(x_new, r_new)
        if f_new > self._f_prev + TOL.descent:
            self._t_mom = 1.0           # momentum restart
            r_x = spec.b - spec.op.forward(self.x)
            grad = -spec.op.adjoint(spec.loss.grad(r_x))
            x_new = self._primal_map(self.x - self._step * grad)
            r_new = spec.b - spec.op.forward(x_new)
            f_new = self._primal_objective(x_new, r_new)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * self._t_mom ** 2))
        self._x_y = x_new + ((self._t_mom - 1.0) / t_next) * (x_new - self.x)
        self.x, self._t_mom, self._f_prev = x_new, t_next, f_new

        # dual certificate from the residual gradient, rescaled to feasibility
        y = spec.loss.grad(r_new)
        z = spec.op.adjoint(y)
        if spec.formulation.kind == "penalized":
            lam = spec.formulation.value
            sigma = spec.atoms.feasibility_value(z)
            if sigma > lam:
                y = y * (lam / sigma)
                z = z * (lam / sigma)
        d_val = dual_objective(spec, y, z=z)
        if self._best is None or d_val < self._best[0]:
            self._best = (d_val, y.copy(), z.copy())
        d_best, y_best, z_best = self._best
        return OracleState(
            state=DualState(y=y_best.copy(), d_value=d_best),
            z=z_best.copy(), iteration=self.iteration)

    def step(self):
        self.iteration += 1
        if self._orthonormal:
            return self._dual_step()
        return self._primal_step()


# ---------------------------------------------------------------------------
# Level-set method with a conditional-gradient inner solver
# ---------------------------------------------------------------------------

def _sum_blocks(atoms):
    """Flatten a WeightedSum into (weight, operand) leaf blocks.

    Returns None unless every leaf admits an exact gauge-ball projection;
    the Minkowski ball tau*conv(sum) then factors into per-leaf balls of
    radius tau*weight, which enables block projected-gradient inner
    solves in place of plain conditional-gradient steps.
    """
    if not isinstance(atoms, WeightedSum):
        return None
    blocks = []
    for w, sub in ((atoms.lam, atoms.left), (1.0, atoms.right)):
        inner = _sum_blocks(sub)
        if inner is not None:
            blocks.extend((w * wi, si) for wi, si in inner)
        elif _gauge_ball_project(sub, np.zeros(sub.shape), 1.0) is not None:
            blocks.append((w, sub))
        else:
            return None
    return blocks


class LevelSetCGOracle:
    """Dual oracle for the residual-ball formulation.

    Runs conditional-gradient steps on the gauge-ball subproblem at the
    current level tau, emits the scaled residual gradient as a
    dual-feasible candidate, and root-finds the level: a Newton step on
    the value function while no feasible level is known, bisection once
    one is. The multiplier bracket needed by the exposure bound is read
    off the gradient support values on the two sides of the level bracket.

    The emitted direction is always the freshest scaled gradient (that is
    what identifies atoms); the reported dual value is the running best,
    which keeps the emitted value sequence monotone. The exposure bound
    for this formulation re-evaluates the dual objective at the emitted y
    with the multiplier bracket, so the pairing stays sound.
    """

    def __init__(self, spec, inner_steps=10, bracket_rtol=1e-6,
                 use_projection=None):
        if spec.formulation.kind != "residual_ball":
            raise ValueError("LevelSetCGOracle handles residual_ball only")
        self.spec = spec
        self.inner_steps = inner_steps
        self.bracket_rtol = bracket_rtol
        if use_projection is None:
            use_projection = _gauge_ball_project(
                spec.atoms, np.zeros(spec.atoms.shape), 1.0) is not None
        self.use_projection = use_projection
        if use_projection:
            lip = float(spec.op.opnorm_bound()) ** 2 * spec.loss.L
            self._inner_step = 1.0 / max(lip, 1e-30)
        self.blocks = None
        self.x_parts = None
        if not use_projection:
            self.blocks = _sum_blocks(spec.atoms)
            if self.blocks is not None:
                lip = len(self.blocks) * float(spec.op.opnorm_bound()) ** 2 \
                    * spec.loss.L
                self._inner_step = 1.0 / max(lip, 1e-30)
                self.x_parts = [np.zeros(spec.op.shape_in)
                                for _ in self.blocks]
        self.alpha = spec.formulation.value
        self.tau = 0.0
        self.tau_lo = 0.0
        self.tau_hi = np.inf
        self.x = np.zeros(spec.op.shape_in)
        self.mx = np.zeros(spec.op.shape_out)
        # certified multiplier bounds: gradient support values on the two
        # sides of the level bracket bound the equivalent penalized weight
        # (the reciprocal of the dual multiplier), after widening by the
        # inner-solve inexactness slack ||M||_A sqrt(2 L fw_gap)
        self.beta_lower = None
        self.beta_upper = None
        self.iteration = 0
        self._d_best = np.inf

    def _fw_pass(self):
        """Inner conditional-gradient steps with exact quadratic line search.

        Returns the final residual gradient, its adjoint image, and the
        conditional-gradient gap at the final iterate (an upper bound on
        the suboptimality of x for the subproblem at the current tau).
        """
        spec = self.spec
        g = spec.b - self.mx
        z = spec.op.adjoint(g)
        fw_gap = 0.0
        for it in range(self.inner_steps + 1):
            if self.tau <= 0:
                break
            if spec.atoms.support(z) > 0:
                s_dense = self.tau * _dense_lmo_atom(spec.atoms, z,
                                                     spec.atoms.shape)
                ms = spec.op.forward(s_dense)
            else:
                s_dense = np.zeros(spec.op.shape_in)
                ms = np.zeros(spec.op.shape_out)
            d_dir = ms - self.mx
            denom = float(np.vdot(d_dir, d_dir))
            fw_gap = max(float(np.vdot(g, d_dir)), 0.0)
            if fw_gap <= TOL.descent or denom <= 0:
                break
            if it == self.inner_steps:  # last round only measures the gap
                break
            eta = min(max(fw_gap / denom, 0.0), 1.0)
            self.x = self.x + eta * (s_dense - self.x)
            self.mx = self.mx + eta * d_dir
            g = spec.b - self.mx
            z = spec.op.adjoint(g)
        return g, z, fw_gap

    def _update_level(self, v, sigma, fw_gap):
        """Newton / bisection update of tau; records the multiplier bracket.

        The infeasible side of the bracket only moves when the inner gap
        certifies true infeasibility (v - fw_gap > alpha lower-bounds the
        value function at tau), so an under-converged inner solve can
        never push tau_lo past the root.
        """
        slack = self.spec.atomic_opnorm() * np.sqrt(
            2.0 * self.spec.loss.L * fw_gap)
        if v > self.alpha:
            if v - fw_gap <= self.alpha:
                return                  # not certified; keep refining x
            self.tau_lo = max(self.tau_lo, self.tau)
            if sigma > 1e-14:
                lo = 1.0 / (sigma + slack)
                self.beta_lower = lo if self.beta_lower is None \
                    else max(self.beta_lower, lo)
                newton = self.tau + (v - self.alpha) / sigma
            else:
                newton = 2.0 * self.tau + 1.0
            if np.isfinite(self.tau_hi):
                self.tau = min(newton, 0.5 * (self.tau_lo + self.tau_hi))
            else:
                self.tau = newton
        else:
            self.tau_hi = min(self.tau_hi, self.tau)
            if sigma - slack > 1e-14:
                hi = 1.0 / (sigma - slack)
                self.beta_upper = hi if self.beta_upper is None \
                    else min(self.beta_upper, hi)
            if (self.tau_hi - self.tau_lo) > self.bracket_rtol * max(1.0, self.tau_hi):
                new_tau = 0.5 * (self.tau_lo + self.tau_hi)
                if 0 < new_tau < self.tau:
                    scale = new_tau / self.tau
                    self.x = self.x * scale
                    self.mx = self.mx * scale
                    if self.x_parts is not None:
                        self.x_parts = [p * scale for p in self.x_parts]
                self.tau = new_tau
            else:
                self.tau = self.tau_hi

    def _proj_pass(self):
        """Inner accelerated projected-gradient steps on the gauge ball.

        Used when the dictionary admits an exact ball projection; the
        final conditional-gradient gap is still measured with one linear
        maximization so the level certification stays identical to the
        Frank-Wolfe branch.
        """
        spec = self.spec
        if self.tau > 0:
            x = self.x
            # carry the acceleration sequence across outer steps as long
            # as the level tau is unchanged; restart it otherwise
            mom = getattr(self, "_mom", None)
            if mom is not None and mom[2] == self.tau:
                y_pt, t_mom = mom[0], mom[1]
            else:
                y_pt, t_mom = x, 1.0
            for _ in range(self.inner_steps):
                gy = spec.b - spec.op.forward(y_pt)
                grad = -spec.op.adjoint(spec.loss.grad(gy))
                x_new = _gauge_ball_project(
                    spec.atoms, y_pt - self._inner_step * grad, self.tau)
                t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_mom ** 2))
                y_pt = x_new + ((t_mom - 1.0) / t_next) * (x_new - x)
                x, t_mom = x_new, t_next
            # accept the pass only if it did not regress the fit
            mx_new = spec.op.forward(x)
            if spec.loss.value(spec.b - mx_new) <= \
                    spec.loss.value(spec.b - self.mx) + TOL.descent:
                self.x, self.mx = x, mx_new
                self._mom = (y_pt, t_mom, self.tau)
            else:
                self._mom = None
        g = spec.b - self.mx
        z = spec.op.adjoint(g)
        fw_gap = 0.0
        if self.tau > 0 and spec.atoms.support(z) > 0:
            s_dense = self.tau * _dense_lmo_atom(spec.atoms, z,
                                                 spec.atoms.shape)
            fw_gap = max(float(np.vdot(g, spec.op.forward(s_dense) - self.mx)),
                         0.0)
        return g, z, fw_gap

    def _sum_pass(self):
        """Block projected-gradient inner steps for Minkowski-sum balls.

        Each operand keeps its own block variable projected onto its
        leaf ball of radius tau*weight; the residual couples the blocks.
        The conditional-gradient gap is still measured with one linear
        maximization over the full sum so level certification matches
        the other inner solvers.
        """
        spec = self.spec
        if self.tau > 0:
            xs = [p.copy() for p in self.x_parts]
            mom = getattr(self, "_mom_sum", None)
            if mom is not None and mom[2] == self.tau:
                ys, t_mom = [m.copy() for m in mom[0]], mom[1]
            else:
                ys, t_mom = [p.copy() for p in xs], 1.0
            for _ in range(self.inner_steps):
                resid = spec.b - spec.op.forward(np.sum(ys, axis=0))
                grad = -spec.op.adjoint(spec.loss.grad(resid))
                new = [
                    _gauge_ball_project(
                        aset, ys[i] - self._inner_step * grad, self.tau * w)
                    for i, (w, aset) in enumerate(self.blocks)
                ]
                t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_mom ** 2))
                ys = [new[i] + ((t_mom - 1.0) / t_next) * (new[i] - xs[i])
                      for i in range(len(new))]
                xs, t_mom = new, t_next
            x = np.sum(xs, axis=0)
            mx_new = spec.op.forward(x)
            if spec.loss.value(spec.b - mx_new) <= \
                    spec.loss.value(spec.b - self.mx) + TOL.descent:
                self.x_parts, self.x, self.mx = xs, x, mx_new
                self._mom_sum = (ys, t_mom, self.tau)
            else:
                self._mom_sum = None
        g = spec.b - self.mx
        z = spec.op.adjoint(g)
        fw_gap = 0.0
        if self.tau > 0 and spec.atoms.support(z) > 0:
            s_dense = self.tau * _dense_lmo_atom(spec.atoms, z,
                                                 spec.atoms.shape)
            fw_gap = max(float(np.vdot(g, spec.op.forward(s_dense) - self.mx)),
                         0.0)
        return g, z, fw_gap

    def absorb_primal(self, x, gauge_ub):
        """Fully-corrective feedback: replace the inner iterate when a
        candidate inside the current gauge ball fits strictly better."""
        if self.x_parts is not None:
            return False            # block state cannot absorb a plain x
        if gauge_ub > self.tau * (1 + 1e-12):
            return False
        mx = self.spec.op.forward(x)
        v_new = self.spec.loss.value(self.spec.b - mx)
        if v_new < self.spec.loss.value(self.spec.b - self.mx):
            self.x = np.array(x, dtype=float)
            self.mx = mx
            return True
        return False

    def step(self):
        spec = self.spec
        if self.use_projection:
            g, z, fw_gap = self._proj_pass()
        elif self.blocks is not None:
            g, z, fw_gap = self._sum_pass()
        else:
            g, z, fw_gap = self._fw_pass()
        v = spec.loss.value(g)
        sigma = spec.atoms.feasibility_value(z)

        # dual candidate: residual gradient scaled onto the constraint
        # boundary sigma(M*y) = 1; the dual value is positively
        # homogeneous in y, so the boundary scaling is optimal whenever
        # the value is negative. Its beta uses the closed-form optimum.
        scale = sigma if sigma > 0 else 1.0
        y = g / scale
        d_val = float(np.sqrt(2.0 * self.alpha) * np.linalg.norm(y)
                      - np.vdot(spec.b, y))
        self._d_best = min(self._d_best, d_val)

        self._update_level(v, sigma, fw_gap)
        self.iteration += 1

        bracket = None
        if self.beta_lower is not None and self.beta_upper is not None \
                and self.beta_lower > 0:
            bracket = (min(self.beta_lower, self.beta_upper),
                       max(self.beta_lower, self.beta_upper))
        return OracleState(
            state=DualState(y=y, d_value=self._d_best,
                            beta_bracket=bracket),
            z=(z / scale), iteration=self.iteration,
            tau_bracket=(self.tau_lo,
                         self.tau_hi if np.isfinite(self.tau_hi) else None),
            primal_x=self.x, primal_parts=self.x_parts,
            primal_gauge_ub=self.tau, primal_misfit=v)


def make_oracle(spec, **kwargs):
    if spec.formulation.kind == "residual_ball":
        return LevelSetCGOracle(spec, **kwargs)
    return ProxDualOracle(spec, **kwargs)


# ---------------------------------------------------------------------------
# Reduced-problem solver (accelerated projected gradient)
# ---------------------------------------------------------------------------

def _materialize_design(spec, model):
    """Columns of M applied to each reduced-model basis element."""
    cols = []
    for part in model.parts:
        if part.domain in ("nonneg", "free"):
            for atom in part.atoms:
                cols.append(spec.op.forward(
                    part.scale * atom.dense(part.shape)).ravel())
        else:
            k = part.k
            for i in range(k):
                for j in range(k):
                    e = np.zeros((k, k))
                    e[i, j] = 1.0
                    cols.append(spec.op.forward(part.synth(e)).ravel())
    return np.column_stack(cols)


def _pack(params):
    return np.concatenate([np.asarray(p).ravel() for p in params])


def _unpack(model, vec):
    out, pos = [], 0
    for part in model.parts:
        size = int(np.prod(part.param_shape))
        out.append(vec[pos: pos + size].reshape(part.param_shape))
        pos += size
    return out


def solve_reduced(spec, model, tol=1e-12, max_iter=2000):
    """Accelerated projected gradient on min_p f(b - M synth(p)).

    Momentum restarts on any objective increase, projections enforce the
    coefficient domains exactly (nonnegative clip, PSD eigenvalue clip),
    and the step size comes from the exact Lipschitz constant of the
    materialized design matrix. Terminates on relative objective decrease
    below ``tol``; the ``converged`` flag is cleared when ``max_iter``
    hits first.
    """
    G = _materialize_design(spec, model)
    b = spec.b.ravel()
    lip = float(np.linalg.norm(G, 2) ** 2) * spec.loss.L
    if lip <= 0:
        return ReducedSolution(model.zero_params(), spec.loss.value(spec.b),
                               0, True)
    step = 1.0 / lip

    def fval(p):
        return 0.5 * float(np.sum((b - G @ p) ** 2))

    def proj(p):
        return _pack(model.project(_unpack(model, p)))

    p = proj(np.zeros(G.shape[1]))
    f_prev = fval(p)
    p_y = p.copy()
    t_mom = 1.0
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        grad = G.T @ (G @ p_y - b)
        p_new = proj(p_y - step * grad)
        f_new = fval(p_new)
        if f_new > f_prev + TOL.descent:
            # momentum restart: plain projected gradient step from p
            t_mom = 1.0
            grad = G.T @ (G @ p - b)
            p_new = proj(p - step * grad)
            f_new = fval(p_new)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_mom ** 2))
        p_y = p_new + ((t_mom - 1.0) / t_next) * (p_new - p)
        p, t_mom = p_new, t_next
        if abs(f_prev - f_new) <= tol * max(1.0, abs(f_prev)):
            f_prev = f_new
            converged = True
            break
        f_prev = f_new
    params = model.project(_unpack(model, p))
    return ReducedSolution(params, spec.misfit(model.synth(params)), it,
                           converged)
