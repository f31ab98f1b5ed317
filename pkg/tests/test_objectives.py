"""Losses, the three duals, feasibility, exposure bounds, beta brackets."""

import numpy as np
import pytest

from atomret.atoms import SignedCanonical, SpectralAsym
from atomret.linops import Dense, Identity
from atomret.objectives import (DualState, Formulation, HalfSqNorm,
                                ProblemSpec, beta_bracket, dual_feasible,
                                dual_objective, epsilon_bound, primal_value)


def _spec(formulation, n=3, b=None, atoms=None, op=None):
    b = np.array([1.0, -2.0, 0.5]) if b is None else np.asarray(b, float)
    op = op or Identity((len(b),))
    return ProblemSpec(loss=HalfSqNorm, op=op, b=b,
                       atoms=atoms or SignedCanonical(op.shape_in),
                       formulation=formulation, k=1)


def test_half_sq_norm_basics():
    r = np.array([3.0, 4.0])
    assert HalfSqNorm.value(r) == pytest.approx(12.5)
    assert np.array_equal(HalfSqNorm.grad(r), r)
    assert HalfSqNorm.conj(r) == pytest.approx(12.5)   # self-conjugate
    assert HalfSqNorm.value(np.zeros(2)) == 0.0


def test_dual_objective_zero_at_origin():
    spec = _spec(Formulation.penalized(1.0))
    assert dual_objective(spec, np.zeros(3)) == 0.0


def test_gauge_ball_dual_plug_in():
    b = np.array([1.0, -2.0, 0.5])
    spec = _spec(Formulation.gauge_ball(1.0), b=b)
    expected = 0.5 * float(b @ b) - float(b @ b) + np.max(np.abs(b))
    assert dual_objective(spec, b) == pytest.approx(expected)


def test_residual_ball_dual_requires_beta():
    spec = _spec(Formulation.residual_ball(0.1))
    with pytest.raises(ValueError):
        dual_objective(spec, spec.b)
    with pytest.raises(ValueError):
        dual_objective(spec, spec.b, beta=-1.0)
    val = dual_objective(spec, spec.b, beta=2.0)
    b = spec.b
    assert val == pytest.approx(2.0 * (0.5 * float(b @ b) / 4.0 + 0.1)
                                - float(b @ b))


def test_dual_feasible_rules():
    spec = _spec(Formulation.penalized(1.0))
    assert dual_feasible(spec, np.array([0.5, 0.0, 0.0]))
    assert not dual_feasible(spec, np.array([1.5, 0.0, 0.0]))
    spec3 = _spec(Formulation.residual_ball(0.1))
    assert not dual_feasible(spec3, np.array([1.0 + 1e-6, 0.0, 0.0]))
    spec2 = _spec(Formulation.gauge_ball(1.0))
    assert dual_feasible(spec2, 100.0 * spec2.b)   # unconstrained dual


def test_formulation_validation():
    with pytest.raises(ValueError):
        Formulation.penalized(0.0)
    with pytest.raises(ValueError):
        Formulation.gauge_ball(-1.0)
    with pytest.raises(ValueError):
        Formulation.residual_ball(-0.1)
    with pytest.raises(ValueError):
        Formulation("lagrangian", 1.0)
    assert Formulation.residual_ball(0.0).value == 0.0


def test_epsilon_bound_zero_gap():
    spec = _spec(Formulation.penalized(1.0))
    state = DualState(y=np.zeros(3), d_value=-5.0)
    assert epsilon_bound(spec, state, -5.0) == 0.0


def test_epsilon_bound_formulas():
    # identity operator and the signed dictionary give ||M||_A = 1
    gap = 0.3
    spec1 = _spec(Formulation.penalized(1.0))
    state = DualState(y=np.zeros(3), d_value=-1.0)
    assert epsilon_bound(spec1, state, -1.0 - gap) == pytest.approx(
        np.sqrt(2.0 * gap))
    spec2 = _spec(Formulation.gauge_ball(1.0))
    assert epsilon_bound(spec2, state, -1.0 - gap) == pytest.approx(
        2.0 * np.sqrt(2.0 * gap))


def test_epsilon_bound_negative_gap_clamps():
    spec = _spec(Formulation.penalized(1.0))
    state = DualState(y=np.zeros(3), d_value=-5.0)
    assert epsilon_bound(spec, state, -4.0) == 0.0


def test_epsilon_bound_residual_ball_needs_bracket():
    spec = _spec(Formulation.residual_ball(0.1))
    state = DualState(y=np.zeros(3), d_value=0.0)
    with pytest.raises(RuntimeError):
        epsilon_bound(spec, state, -1.0)
    state = DualState(y=np.zeros(3), d_value=0.0, beta_bracket=(0.5, 2.0))
    val = epsilon_bound(spec, state, -1.0)
    # d(0, beta) = beta * alpha; the gap uses the larger of the two ends
    gap = 2.0 * 0.1 - (-1.0)
    assert val == pytest.approx(2.0 * np.sqrt(2.0 * 2.0 * gap))


def test_epsilon_bound_monotone_along_descent():
    spec = _spec(Formulation.penalized(1.0))
    lower = -3.0
    vals = []
    for d in (-0.5, -1.0, -2.0, -2.5):
        vals.append(epsilon_bound(spec, DualState(y=np.zeros(3), d_value=d),
                                  lower))
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_beta_bracket_reciprocal_of_gradient_support():
    # f = 0.5 (b - x)^2 with b = 2: sigma(grad) at x = 0 is 2, and the
    # dual multiplier bracket is the reciprocal pair
    spec = _spec(Formulation.residual_ball(0.0), b=[2.0],
                 op=Identity((1,)), atoms=SignedCanonical(1))
    lo, hi = beta_bracket(spec, np.array([0.0]), np.array([0.0]))
    assert lo == pytest.approx(0.5)
    assert hi == pytest.approx(0.5)


def test_beta_bracket_orders_endpoints():
    spec = _spec(Formulation.residual_ball(0.1), b=[2.0, 0.0],
                 op=Identity((2,)), atoms=SignedCanonical(2))
    lo, hi = beta_bracket(spec, np.array([0.0, 0.0]), np.array([1.5, 0.0]))
    assert 0 < lo <= hi
    assert lo == pytest.approx(1.0 / 2.0)
    assert hi == pytest.approx(1.0 / 0.5)


def test_beta_bracket_degenerate_gradient():
    spec = _spec(Formulation.residual_ball(0.0), b=[2.0],
                 op=Identity((1,)), atoms=SignedCanonical(1))
    with pytest.raises(FloatingPointError):
        beta_bracket(spec, np.array([2.0]), np.array([2.0]))


def test_primal_values_per_formulation():
    b = np.array([2.0, 0.0])
    x = np.array([1.0, 0.0])
    spec1 = _spec(Formulation.penalized(0.5), b=b, op=Identity((2,)),
                  atoms=SignedCanonical(2))
    assert primal_value(spec1, x) == pytest.approx(0.5 + 0.5)
    spec2 = _spec(Formulation.gauge_ball(1.0), b=b, op=Identity((2,)),
                  atoms=SignedCanonical(2))
    assert primal_value(spec2, x) == pytest.approx(0.5)
    from atomret.atoms import is_finite
    assert not is_finite(primal_value(spec2, 3.0 * x))
    spec3 = _spec(Formulation.residual_ball(0.5), b=b, op=Identity((2,)),
                  atoms=SignedCanonical(2))
    assert primal_value(spec3, x) == pytest.approx(1.0)
    assert not is_finite(primal_value(spec3, np.zeros(2)))


def test_weak_duality_random_instances():
    # p(x) + d(y) >= 0 for feasible pairs across all three formulations
    rng = np.random.default_rng(21)
    for trial in range(25):
        n, m = 4, 5
        M = rng.standard_normal((m, n))
        op = Dense(M)
        b = rng.standard_normal(m)
        atoms = SignedCanonical(n)
        x = rng.standard_normal(n) * 0.5
        for kind in ("penalized", "gauge_ball", "residual_ball"):
            if kind == "penalized":
                form = Formulation.penalized(0.7)
            elif kind == "gauge_ball":
                form = Formulation.gauge_ball(max(atoms.gauge(x), 0.1))
            else:
                r = b - M @ x
                form = Formulation.residual_ball(0.5 * float(r @ r) + 0.1)
            spec = ProblemSpec(loss=HalfSqNorm, op=op, b=b, atoms=atoms,
                               formulation=form, k=n)
            y = rng.standard_normal(m)
            sigma = atoms.support(M.T @ y)
            if kind == "penalized" and sigma > 0.7:
                y *= 0.7 / sigma
            if kind == "residual_ball" and sigma > 1.0:
                y /= sigma
            beta = abs(rng.standard_normal()) + 0.1
            d = dual_objective(spec, y, beta=beta) \
                if kind == "residual_ball" else dual_objective(spec, y)
            p = primal_value(spec, x)
            from atomret.atoms import is_finite
            if is_finite(p):
                assert p + d >= -1e-9


def test_spec_validates_shapes_and_tolerances():
    with pytest.raises(ValueError):
        ProblemSpec(loss=HalfSqNorm, op=Identity((3,)), b=np.zeros(4),
                    atoms=SignedCanonical(3),
                    formulation=Formulation.penalized(1.0), k=1)
    with pytest.raises(ValueError):
        ProblemSpec(loss=HalfSqNorm, op=Identity((3,)), b=np.zeros(3),
                    atoms=SignedCanonical(3),
                    formulation=Formulation.penalized(1.0), k=1, eps_tol=-1.0)


def test_dual_state_validation():
    with pytest.raises(ValueError):
        DualState(y=np.zeros(2), beta_bracket=(2.0, 1.0))
    with pytest.raises(ValueError):
        DualState(y=np.zeros(2), beta_bracket=(0.0, 1.0))
    with pytest.raises(ValueError):
        DualState(y=np.zeros(2), gap_bound=-0.1)


def test_atomic_opnorm_cached():
    spec = _spec(Formulation.penalized(1.0))
    first = spec.atomic_opnorm()
    assert spec.atomic_opnorm() == first == pytest.approx(1.0)
