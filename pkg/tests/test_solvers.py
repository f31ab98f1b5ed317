"""Dual oracles (monotone, feasible, convergent) and the reduced solver."""

import numpy as np
import pytest

from atomret.atoms import NonnegCanonical, SignedCanonical, SpectralPSD
from atomret.linops import Dense, Identity
from atomret.objectives import (Formulation, HalfSqNorm, ProblemSpec,
                                dual_feasible)
from atomret.solvers import (LevelSetCGOracle, ProxDualOracle, make_oracle,
                             solve_reduced)
from atomret.testkit import reduced_lsq_oracle, small_instance_reference_solve


def _spec(op, b, atoms, form, k=2):
    return ProblemSpec(loss=HalfSqNorm, op=op, b=np.asarray(b, float),
                       atoms=atoms, formulation=form, k=k)


# ---------------------------------------------------------------------------
# ProxDualOracle
# ---------------------------------------------------------------------------

def test_prox_oracle_rejects_residual_ball():
    spec = _spec(Identity((2,)), [1.0, 0.0], SignedCanonical(2),
                 Formulation.residual_ball(0.1))
    with pytest.raises(ValueError):
        ProxDualOracle(spec)


def test_prox_oracle_monotone_feasible_orthonormal():
    # identity operator takes the exact dual-step branch
    rng = np.random.default_rng(0)
    b = rng.standard_normal(5)
    for form in (Formulation.penalized(0.4), Formulation.gauge_ball(0.8)):
        spec = _spec(Identity((5,)), b, SignedCanonical(5), form)
        oracle = ProxDualOracle(spec)
        prev = np.inf
        for _ in range(30):
            out = oracle.step()
            assert dual_feasible(spec, out.state.y, z=out.z)
            assert out.state.d_value <= prev + 1e-12
            prev = out.state.d_value


def test_prox_oracle_monotone_feasible_general():
    rng = np.random.default_rng(1)
    M = rng.standard_normal((6, 4))
    b = rng.standard_normal(6)
    for form in (Formulation.penalized(0.4), Formulation.gauge_ball(0.8)):
        spec = _spec(Dense(M), b, SignedCanonical(4), form)
        oracle = ProxDualOracle(spec)
        prev = np.inf
        for _ in range(50):
            out = oracle.step()
            assert dual_feasible(spec, out.state.y, z=out.z)
            assert out.state.d_value <= prev + 1e-12
            prev = out.state.d_value


def test_prox_oracle_converges_to_reference_dual():
    rng = np.random.default_rng(2)
    for trial in range(4):
        M = rng.standard_normal((5, 4))
        b = rng.standard_normal(5)
        form = Formulation.penalized(0.5) if trial % 2 == 0 \
            else Formulation.gauge_ball(1.0)
        spec = _spec(Dense(M), b, SignedCanonical(4), form)
        ref = small_instance_reference_solve(spec)
        oracle = ProxDualOracle(spec)
        for _ in range(4000):
            out = oracle.step()
        assert out.state.d_value >= ref.d_value - 1e-9
        assert out.state.d_value - ref.d_value <= 1e-6


def test_prox_oracle_orthonormal_converges():
    rng = np.random.default_rng(3)
    b = rng.standard_normal(4)
    spec = _spec(Identity((4,)), b, SignedCanonical(4),
                 Formulation.penalized(0.3))
    ref = small_instance_reference_solve(spec)
    oracle = ProxDualOracle(spec)
    for _ in range(500):
        out = oracle.step()
    assert abs(out.state.d_value - ref.d_value) <= 1e-8


# ---------------------------------------------------------------------------
# LevelSetCGOracle
# ---------------------------------------------------------------------------

def test_level_set_rejects_other_formulations():
    spec = _spec(Identity((2,)), [1.0, 0.0], SignedCanonical(2),
                 Formulation.penalized(1.0))
    with pytest.raises(ValueError):
        LevelSetCGOracle(spec)


def test_level_set_finds_root_one_dim():
    # min |x| s.t. 0.5 (2 - x)^2 <= 0 has the root tau* = 2 and the
    # boundary-scaled dual certificate value -<b, y> = -2
    spec = _spec(Identity((1,)), [2.0], SignedCanonical(1),
                 Formulation.residual_ball(0.0), k=1)
    oracle = LevelSetCGOracle(spec)
    for _ in range(120):
        out = oracle.step()
    lo, hi = out.tau_bracket
    assert lo <= 2.0 + 1e-9
    assert hi is not None and hi >= 2.0 - 1e-6
    assert hi - lo <= 1e-4
    assert out.state.d_value == pytest.approx(-2.0, abs=1e-9)


def test_level_set_bracket_and_misfit_converge():
    rng = np.random.default_rng(4)
    M = rng.standard_normal((6, 5))
    b = rng.standard_normal(6)
    # make the misfit cap attainable with margin over the best possible fit
    x_ls, *_ = np.linalg.lstsq(M, b, rcond=None)
    alpha = 0.5 * float(np.sum((b - M @ x_ls) ** 2)) + 0.05
    spec = _spec(Dense(M), b, SignedCanonical(5),
                 Formulation.residual_ball(alpha), k=3)
    oracle = LevelSetCGOracle(spec, inner_steps=25)
    prev_d = np.inf
    for _ in range(200):
        out = oracle.step()
        assert out.state.d_value <= prev_d + 1e-12   # running-best monotone
        prev_d = out.state.d_value
        sigma = spec.atoms.support(spec.op.adjoint(out.state.y))
        assert sigma <= 1.0 + 1e-9                   # always dual feasible
    assert out.primal_misfit <= alpha + 1e-6
    lo, hi = out.tau_bracket
    assert hi is not None and hi - lo <= 1e-4 * max(1.0, hi)
    if out.state.beta_bracket is not None:
        blo, bhi = out.state.beta_bracket
        assert 0 < blo <= bhi


def test_level_set_matches_reference_gauge():
    # at the root, tau* equals the minimal gauge subject to the misfit cap,
    # which the enumeration reference computes independently
    rng = np.random.default_rng(5)
    M = rng.standard_normal((5, 4))
    b = rng.standard_normal(5)
    x_ls, *_ = np.linalg.lstsq(M, b, rcond=None)
    alpha = 0.5 * float(np.sum((b - M @ x_ls) ** 2)) + 0.1
    spec = _spec(Dense(M), b, SignedCanonical(4),
                 Formulation.residual_ball(alpha), k=4)
    ref = small_instance_reference_solve(spec)
    oracle = LevelSetCGOracle(spec, inner_steps=25)
    for _ in range(300):
        out = oracle.step()
    lo, hi = out.tau_bracket
    assert lo - 1e-5 <= ref.p_value <= (hi if hi is not None else np.inf) + 1e-5


def test_absorb_primal_improves_iterate():
    rng = np.random.default_rng(6)
    M = rng.standard_normal((5, 4))
    b = rng.standard_normal(5)
    x_ls, *_ = np.linalg.lstsq(M, b, rcond=None)
    alpha = 0.5 * float(np.sum((b - M @ x_ls) ** 2)) + 0.05
    spec = _spec(Dense(M), b, SignedCanonical(4),
                 Formulation.residual_ball(alpha), k=4)
    oracle = LevelSetCGOracle(spec, inner_steps=2)
    for _ in range(10):
        oracle.step()
    x_good, *_ = np.linalg.lstsq(M, b, rcond=None)
    gauge = spec.atoms.gauge(x_good)
    if gauge <= oracle.tau:
        assert oracle.absorb_primal(x_good, gauge)
        assert np.allclose(oracle.x, x_good)
    # a candidate outside the current ball is always rejected
    assert not oracle.absorb_primal(x_good, oracle.tau * 10 + 1.0)


def test_make_oracle_dispatch():
    b = [1.0, 0.0]
    s1 = _spec(Identity((2,)), b, SignedCanonical(2),
               Formulation.penalized(1.0))
    s2 = _spec(Identity((2,)), b, SignedCanonical(2),
               Formulation.gauge_ball(1.0))
    s3 = _spec(Identity((2,)), b, SignedCanonical(2),
               Formulation.residual_ball(0.1))
    assert isinstance(make_oracle(s1), ProxDualOracle)
    assert isinstance(make_oracle(s2), ProxDualOracle)
    assert isinstance(make_oracle(s3), LevelSetCGOracle)


# ---------------------------------------------------------------------------
# solve_reduced
# ---------------------------------------------------------------------------

def test_reduced_nonneg_single_atom():
    atoms = NonnegCanonical(2)
    model = atoms.ess_model(np.array([1.0, -0.5]), 1)
    spec = _spec(Identity((2,)), [2.0, 0.0], atoms,
                 Formulation.residual_ball(0.0), k=1)
    sol = solve_reduced(spec, model)
    assert sol.converged
    assert sol.f_value == pytest.approx(0.0, abs=1e-12)
    assert np.asarray(sol.params[0]).ravel()[0] == pytest.approx(2.0)


def test_reduced_psd_clips_negative_target():
    atoms = SpectralPSD(2)
    model = atoms.ess_model(np.diag([1.0, 0.2]), 1)
    spec = _spec(Identity((2, 2)), -np.eye(2), atoms,
                 Formulation.residual_ball(0.0), k=1)
    sol = solve_reduced(spec, model)
    assert np.allclose(sol.params[0], 0.0, atol=1e-10)
    assert sol.f_value == pytest.approx(1.0)   # misfit of x = 0


def test_reduced_matches_lstsq_oracle_free():
    rng = np.random.default_rng(7)
    for _ in range(5):
        M = rng.standard_normal((8, 6))
        b = rng.standard_normal(8)
        atoms = SignedCanonical(6)
        spec = _spec(Dense(M), b, atoms, Formulation.residual_ball(0.1), k=3)
        model = atoms.ess_model(rng.standard_normal(6), 3)
        sol = solve_reduced(spec, model)
        assert abs(sol.f_value - reduced_lsq_oracle(spec, model)) <= 1e-8


def test_reduced_matches_nnls_oracle():
    rng = np.random.default_rng(8)
    for _ in range(5):
        M = rng.standard_normal((7, 5))
        b = rng.standard_normal(7)
        atoms = NonnegCanonical(5)
        spec = _spec(Dense(M), b, atoms, Formulation.residual_ball(0.1), k=3)
        model = atoms.ess_model(rng.standard_normal(5), 3)
        sol = solve_reduced(spec, model)
        assert sol.f_value - reduced_lsq_oracle(spec, model) <= 1e-8
        assert sol.f_value >= reduced_lsq_oracle(spec, model) - 1e-10


def test_reduced_max_iter_flag():
    rng = np.random.default_rng(9)
    M = rng.standard_normal((6, 4))
    atoms = SignedCanonical(4)
    spec = _spec(Dense(M), rng.standard_normal(6), atoms,
                 Formulation.residual_ball(0.1), k=2)
    model = atoms.ess_model(rng.standard_normal(4), 2)
    sol = solve_reduced(spec, model, max_iter=1)
    assert not sol.converged
    assert sol.iterations == 1
