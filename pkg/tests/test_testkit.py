"""The test oracles themselves, checked against closed forms and LAPACK."""

import math

import numpy as np
import pytest

from atomret.atoms import (INFINITE, NonnegCanonical, SignedCanonical,
                           SpectralAsym, SpectralPSD, is_finite)
from atomret.linops import Dense, Identity
from atomret.objectives import Formulation, HalfSqNorm, ProblemSpec
from atomret.testkit import (OracleConfig, OracleFailure, dense_eig_oracle,
                             dense_svd_oracle, gauge_lp_oracle,
                             one_sided_hausdorff, reduced_lsq_oracle,
                             small_instance_reference_solve)


def _spec(op, b, atoms, form, k=1):
    return ProblemSpec(loss=HalfSqNorm, op=op, b=np.asarray(b, float),
                       atoms=atoms, formulation=form, k=k)


def test_oracle_config_caps_dimension():
    with pytest.raises(ValueError):
        OracleConfig(max_dim=9)
    assert OracleConfig().tol == 1e-10


# ---------------------------------------------------------------------------
# gauge LP oracle
# ---------------------------------------------------------------------------

def test_gauge_lp_signed_is_l1():
    assert gauge_lp_oracle(SignedCanonical(2), [1.0, -1.0]) == pytest.approx(2.0)
    assert gauge_lp_oracle(SignedCanonical(3), [0.0, 0.0, 0.0]) == 0.0


def test_gauge_lp_nonneg_outside_cone():
    assert not is_finite(gauge_lp_oracle(NonnegCanonical(1), [-1.0]))
    assert gauge_lp_oracle(NonnegCanonical(2), [2.0, 3.0]) == pytest.approx(5.0)


def test_gauge_lp_matches_main_gauge_randomly():
    rng = np.random.default_rng(0)
    for _ in range(10):
        x = rng.standard_normal(4)
        assert gauge_lp_oracle(SignedCanonical(4), x) == pytest.approx(
            np.sum(np.abs(x)), abs=1e-8)


# ---------------------------------------------------------------------------
# Jacobi factorizations
# ---------------------------------------------------------------------------

def test_svd_oracle_matches_lapack():
    rng = np.random.default_rng(1)
    for shape in ((5, 5), (6, 4), (4, 6)):
        Z = rng.standard_normal(shape)
        U, s, V = dense_svd_oracle(Z)
        s_ref = np.linalg.svd(Z, compute_uv=False)
        assert np.allclose(s, s_ref, atol=1e-10)
        assert np.linalg.norm(Z - (U * s) @ V.T) <= 1e-11 * np.linalg.norm(Z)


def test_svd_oracle_rank_deficient():
    Z = np.outer([1.0, 2.0, 2.0], [0.0, 3.0, 4.0])
    U, s, V = dense_svd_oracle(Z)
    assert s[0] == pytest.approx(15.0)
    assert np.allclose(s[1:], 0.0, atol=1e-12)
    assert np.allclose(U.T @ U, np.eye(3), atol=1e-10)


def test_eig_oracle_matches_lapack():
    rng = np.random.default_rng(2)
    for _ in range(10):
        Z = rng.standard_normal((6, 6))
        Z = 0.5 * (Z + Z.T)
        lam, V = dense_eig_oracle(Z)
        assert np.allclose(lam, np.sort(np.linalg.eigvalsh(Z))[::-1],
                           atol=1e-10)
        assert np.linalg.norm(Z @ V - V * lam) <= 1e-11 * np.linalg.norm(Z)


def test_eig_oracle_rejects_asymmetric():
    with pytest.raises(ValueError):
        dense_eig_oracle(np.array([[0.0, 1.0], [0.0, 0.0]]))


# ---------------------------------------------------------------------------
# Reference solves on closed forms
# ---------------------------------------------------------------------------

def test_reference_penalized_soft_threshold():
    # min 0.5 (2 - x)^2 + 0.5 |x| has optimum x = 1.5 and value 0.875
    spec = _spec(Identity((1,)), [2.0], SignedCanonical(1),
                 Formulation.penalized(0.5))
    ref = small_instance_reference_solve(spec)
    assert ref.x[0] == pytest.approx(1.5)
    assert ref.p_value == pytest.approx(0.875)
    assert ref.p_value + ref.d_value == pytest.approx(0.0, abs=1e-10)


def test_reference_residual_ball_one_dim():
    # min |x| s.t. 0.5 (2 - x)^2 <= 0.5 has optimum x = 1
    spec = _spec(Identity((1,)), [2.0], SignedCanonical(1),
                 Formulation.residual_ball(0.5))
    ref = small_instance_reference_solve(spec)
    assert ref.x[0] == pytest.approx(1.0, abs=1e-8)
    assert ref.p_value == pytest.approx(1.0, abs=1e-8)
    assert ref.beta is not None and ref.beta > 0


def test_reference_gauge_ball_one_dim():
    # min 0.5 (2 - x)^2 s.t. |x| <= 1 has optimum x = 1 and value 0.5
    spec = _spec(Identity((1,)), [2.0], SignedCanonical(1),
                 Formulation.gauge_ball(1.0))
    ref = small_instance_reference_solve(spec)
    assert ref.x[0] == pytest.approx(1.0, abs=1e-8)
    assert ref.p_value == pytest.approx(0.5, abs=1e-8)


def test_reference_spectral_svt():
    # penalized nuclear norm of a diagonal target soft-thresholds the
    # singular values: diag(3, 1) at lam = 1 recovers diag(2, 0)
    b = np.diag([3.0, 1.0])
    spec = _spec(Identity((2, 2)), b, SpectralAsym(2, 2),
                 Formulation.penalized(1.0))
    ref = small_instance_reference_solve(spec)
    assert np.allclose(ref.x.reshape(2, 2), np.diag([2.0, 0.0]), atol=1e-6)
    assert ref.p_value == pytest.approx(0.5 * 2.0 + 2.0, abs=1e-6)


def test_reference_caps_dimension():
    spec = _spec(Identity((9,)), np.zeros(9), SignedCanonical(9),
                 Formulation.penalized(1.0))
    with pytest.raises(ValueError):
        small_instance_reference_solve(spec)


# ---------------------------------------------------------------------------
# reduced least-squares oracle
# ---------------------------------------------------------------------------

def test_reduced_oracle_free_closed_form():
    atoms = SignedCanonical(3)
    model = atoms.ess_model(np.array([2.0, 1.0, 0.1]), 2)
    spec = _spec(Identity((3,)), [4.0, -1.0, 5.0], atoms,
                 Formulation.residual_ball(0.1), k=2)
    # best fit over span{e1, e2} leaves exactly the third residual entry
    assert reduced_lsq_oracle(spec, model) == pytest.approx(12.5)


def test_reduced_oracle_rejects_psd():
    atoms = SpectralPSD(2)
    model = atoms.ess_model(np.diag([1.0, 0.2]), 1)
    spec = _spec(Identity((2, 2)), np.eye(2), atoms,
                 Formulation.residual_ball(0.1), k=1)
    with pytest.raises(NotImplementedError):
        reduced_lsq_oracle(spec, model)


# ---------------------------------------------------------------------------
# one-sided Hausdorff distance
# ---------------------------------------------------------------------------

def test_hausdorff_zero_inside_model():
    atoms = SignedCanonical(3)
    model = atoms.ess_model(np.array([2.0, 1.0, 0.1]), 2)
    a = atoms.top_k(np.array([2.0, 1.0, 0.1]), 1)[0]
    assert one_sided_hausdorff([a], model) <= 1e-12


def test_hausdorff_orthogonal_atom():
    atoms = SignedCanonical(3)
    model = atoms.ess_model(np.array([2.0, 0.0, 0.0]), 1)
    e3 = np.array([0.0, 0.0, 1.0])
    assert one_sided_hausdorff([e3], model) == pytest.approx(math.sqrt(2.0))


def test_hausdorff_rotated_spectral_atom():
    # a rank-one atom whose factors are rotated by eps out of the model
    # subspace sits at distance sqrt(2 eps) from the unit-norm slice
    for eps in (0.01, 0.1):
        c, s = math.sqrt(1.0 - eps), math.sqrt(eps)
        u1 = np.array([c, 0.0, s])
        a = np.outer(u1, u1)
        atoms = SpectralAsym(3, 3)
        model = atoms.ess_model(np.diag([1.0, 0.1, 0.1]), 1)
        assert one_sided_hausdorff([a], model) == pytest.approx(
            math.sqrt(2.0 * eps), rel=1e-6)


def test_hausdorff_takes_worst_sample():
    atoms = SignedCanonical(2)
    model = atoms.ess_model(np.array([1.0, 0.0]), 1)
    inside = np.array([1.0, 0.0])
    outside = np.array([0.0, 1.0])
    assert one_sided_hausdorff([inside, outside], model) == pytest.approx(
        math.sqrt(2.0))
