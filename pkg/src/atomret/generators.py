"""Synthetic problem generators mirroring the experiment families.

Each generator returns a (ProblemSpec, ground_truth) pair; the ground
truth carries the planted signal so tests and reports can score recovery.
Noiseless instances are feasible by construction at the planted
cardinality.
"""

import numpy as np

from .atoms import SignedCanonical, SpectralAsym, WeightedSum
from .linops import (Compose, Conv1d, Dct, Dense, EntryMask, GaussianEnsemble,
                     Haar, Identity)
from .objectives import Formulation, HalfSqNorm, ProblemSpec

__all__ = ["generate_bpdn", "generate_matrix_completion", "generate_rpca"]

BPDN_OPERATORS = ("gaussian", "dct", "haar", "gaussian_dct", "conv1d")


def _misfit_cap(alpha_raw):
    # the smooth loss is half the squared norm, so a residual-norm cap of
    # alpha corresponds to a loss cap of alpha^2 / 2
    return 0.5 * alpha_raw ** 2


def generate_bpdn(m=600, n=2560, spikes=20, operator="gaussian", noise=0.0,
                  seed=0, alpha_factor=1e-3, eps_tol=0.0):
    """Sparse recovery instance: b = M x + noise, misfit cap 1e-3 ||b||.

    Operator kinds: dense Gaussian ensemble, orthonormal DCT or Haar
    synthesis, Gaussian ensemble composed with DCT synthesis, or circular
    convolution with a random short kernel. Square operators ignore m.
    """
    if operator not in BPDN_OPERATORS:
        raise ValueError(f"unknown operator kind {operator!r}")
    rng = np.random.default_rng(seed)
    if operator == "gaussian":
        op = GaussianEnsemble(m, n, seed=seed)
    elif operator == "dct":
        op = Dct(n)
    elif operator == "haar":
        op = Haar(n)
    elif operator == "gaussian_dct":
        op = Compose(Dense(rng.standard_normal((m, n)) / np.sqrt(m)), Dct(n))
    else:
        kernel = rng.standard_normal(8)
        kernel /= np.linalg.norm(kernel)
        op = Conv1d(kernel, n)

    if not 1 <= spikes <= n:
        raise ValueError("spike count out of range")
    support = rng.choice(n, size=spikes, replace=False)
    x_true = np.zeros(n)
    x_true[support] = rng.choice([-1.0, 1.0], size=spikes)
    b = op.forward(x_true)
    if noise > 0:
        b = b + noise * rng.standard_normal(b.shape)
    alpha_raw = alpha_factor * float(np.linalg.norm(b))
    spec = ProblemSpec(
        loss=HalfSqNorm, op=op, b=b, atoms=SignedCanonical((n,)),
        formulation=Formulation.residual_ball(_misfit_cap(alpha_raw)),
        k=spikes, eps_tol=eps_tol)
    op.counter_reset()
    truth = {
        "x": x_true,
        "support": set(int(i) for i in support),
        "alpha_raw": alpha_raw,
        "b_norm": float(np.linalg.norm(b)),
    }
    return spec, truth


def generate_matrix_completion(m=60, n=40, rank=5, fraction=0.5, noise=0.0,
                               seed=0, alpha_factor=1e-3, eps_tol=1e-6):
    """Low-rank completion: observe a uniform fraction of X = A B^T."""
    if not 0 < fraction <= 1:
        raise ValueError("observation fraction must be in (0, 1]")
    if not 1 <= rank <= min(m, n):
        raise ValueError("rank out of range")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, rank))
    B = rng.standard_normal((n, rank))
    X = (A @ B.T) / np.sqrt(rank)
    count = int(round(fraction * m * n))
    flat = rng.choice(m * n, size=count, replace=False)
    omega = [(int(i // n), int(i % n)) for i in flat]
    op = EntryMask(omega, (m, n))
    b = op.forward(X)
    if noise > 0:
        b = b + noise * op.forward(rng.standard_normal((m, n)))
    alpha_raw = alpha_factor * float(np.linalg.norm(b))
    spec = ProblemSpec(
        loss=HalfSqNorm, op=op, b=b, atoms=SpectralAsym(m, n),
        formulation=Formulation.residual_ball(_misfit_cap(alpha_raw)),
        k=rank, eps_tol=eps_tol)
    op.counter_reset()
    truth = {
        "X": X,
        "omega": omega,
        "alpha_raw": alpha_raw,
        "b_norm": float(np.linalg.norm(b)),
    }
    return spec, truth


def generate_rpca(n=40, rank=2, sparse_fraction=0.05, lam=None, seed=0,
                  alpha_factor=1e-3, eps_tol=1e-6, sparse_scale=None):
    """Low-rank plus sparse decomposition of a fully observed matrix.

    The dictionary is the weighted Minkowski sum lam * (rank-one atoms) +
    (signed entry atoms); lam defaults to 1/sqrt(n). The per-operand
    budget k is (rank, number of planted sparse entries).

    ``sparse_scale`` sets the magnitude of the planted sparse entries; by
    default it is chosen so that the two terms of the objective
    max{||L||_*, lam ||S||_1} balance at the planted pair, which makes the
    planted decomposition a stationary trade-off of the relaxation
    rather than biasing it toward shifting mass between the components.
    """
    if lam is None:
        lam = 1.0 / np.sqrt(n)
    rng = np.random.default_rng(seed)
    U = rng.standard_normal((n, rank))
    V = rng.standard_normal((n, rank))
    L = (U @ V.T) / np.sqrt(rank)
    count = int(round(sparse_fraction * n * n))
    flat = rng.choice(n * n, size=count, replace=False)
    if sparse_scale is None:
        nuc = float(np.sum(np.linalg.svd(L, compute_uv=False)))
        sparse_scale = nuc / (lam * max(count, 1))
    S = np.zeros((n, n))
    S.flat[flat] = sparse_scale * rng.choice([-1.0, 1.0], size=count)
    B = L + S
    op = Identity((n, n))
    alpha_raw = alpha_factor * float(np.linalg.norm(B))
    atoms = WeightedSum(lam, SpectralAsym(n, n), SignedCanonical((n, n)))
    spec = ProblemSpec(
        loss=HalfSqNorm, op=op, b=B, atoms=atoms,
        formulation=Formulation.residual_ball(_misfit_cap(alpha_raw)),
        k=(rank, max(count, 1)), eps_tol=eps_tol)
    op.counter_reset()
    truth = {
        "L": L,
        "S": S,
        "sparse_support": set(int(i) for i in flat),
        "lam": lam,
        "alpha_raw": alpha_raw,
        "b_norm": float(np.linalg.norm(B)),
    }
    return spec, truth
