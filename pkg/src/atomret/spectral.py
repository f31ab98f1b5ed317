"""Truncated SVD and symmetric eigendecomposition for spectral atom identification.

Small matrices are factored densely; larger problems fall back to Lanczos
iteration with full reorthogonalization, seeded for determinism.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["TruncatedSvd", "truncated_svd", "truncated_eig_sym", "DENSE_CUTOFF"]

# Below this size (min dimension) a dense factorization is cheaper and exact.
DENSE_CUTOFF = 64


class SpectralError(RuntimeError):
    """Raised when an iterative factorization fails to converge."""


@dataclass
class TruncatedSvd:
    """Rank-k truncated singular value decomposition of a matrix Z.

    Attributes
    ----------
    U : (m, k) ndarray with orthonormal columns.
    s : (k,) nonincreasing nonnegative singular values.
    V : (n, k) ndarray with orthonormal columns.
    sigma_tail_bound : upper bound on the (k+1)-th singular value
        (exact in dense mode, a Ritz-based estimate otherwise).
    gap_degenerate : True when s[0] <= sigma_tail_bound, i.e. no usable
        spectral gap between the leading value and the discarded tail.
    """

    U: np.ndarray
    s: np.ndarray
    V: np.ndarray
    sigma_tail_bound: float
    gap_degenerate: bool = False

    @property
    def k(self):
        return len(self.s)

    def reconstruct(self):
        return (self.U * self.s) @ self.V.T


def _as_matvec(Z):
    """Return (matvec, rmatvec, shape) for an ndarray or operator-like object."""
    if isinstance(Z, np.ndarray):
        return (lambda v: Z @ v), (lambda u: Z.T @ u), Z.shape
    # duck-typed linear operator (see atomret.linops)
    return Z.forward, Z.adjoint, (Z.shape_out[0], Z.shape_in[0])


def truncated_svd(Z, k, tol=1e-10, seed=0, max_dim=None):
    """Top-k singular triples of Z (matrix or linear operator).

    Returns a :class:`TruncatedSvd` whose residuals satisfy
    ``||Z v_i - s_i u_i|| <= tol * max(1, s_1)`` for each retained triple.
    """
    if isinstance(Z, np.ndarray):
        m, n = Z.shape
        if k > min(m, n):
            raise ValueError(f"k={k} exceeds min(m, n)={min(m, n)}")
        if min(m, n) <= DENSE_CUTOFF:
            U, s, Vt = np.linalg.svd(Z, full_matrices=False)
            tail = float(s[k]) if k < len(s) else 0.0
            return TruncatedSvd(
                U[:, :k].copy(), s[:k].copy(), Vt[:k].T.copy(), tail,
                gap_degenerate=bool(s[0] <= tail + 1e-14 * max(1.0, s[0])),
            )
    matvec, rmatvec, (m, n) = _as_matvec(Z)
    if k > min(m, n):
        raise ValueError(f"k={k} exceeds min(m, n)={min(m, n)}")
    return _lanczos_svd(matvec, rmatvec, m, n, k, tol, seed, max_dim)


def _lanczos_svd(matvec, rmatvec, m, n, k, tol, seed, max_dim):
    """Golub-Kahan bidiagonalization with full reorthogonalization."""
    rng = np.random.default_rng(seed)
    dim_cap = min(m, n) if max_dim is None else min(max_dim, min(m, n))
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    V = [v]
    U = []
    alphas, betas = [], []
    u = matvec(v)
    alpha = np.linalg.norm(u)
    if alpha == 0.0:  # Z annihilates the start vector; restart deterministically
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v)
        V = [v]
        u = matvec(v)
        alpha = np.linalg.norm(u)
    u = u / alpha if alpha > 0 else u
    U.append(u)
    alphas.append(alpha)

    for j in range(1, dim_cap + 1):
        r = rmatvec(U[-1]) - alphas[-1] * V[-1]
        for w in V:  # full reorthogonalization
            r -= (w @ r) * w
        beta = np.linalg.norm(r)
        if beta <= 1e-14 or j == dim_cap:
            betas.append(0.0)
            break
        betas.append(beta)
        v = r / beta
        V.append(v)
        p = matvec(v) - beta * U[-1]
        for w in U:
            p -= (w @ p) * w
        alpha = np.linalg.norm(p)
        if alpha <= 1e-14:
            alphas.append(0.0)
            break
        alphas.append(alpha)
        U.append(p / alpha)

        if j >= k + 2 and j % 5 == 0:
            svd = _bidiag_ritz(alphas, betas, U, V, k)
            if svd is not None and _converged(svd, matvec, rmatvec, k, tol):
                return svd

    svd = _bidiag_ritz(alphas, betas, U, V, k)
    if svd is None or not _converged(svd, matvec, rmatvec, k, tol):
        if svd is not None and np.all(svd.s <= tol):
            return svd  # effectively zero operator
        raise SpectralError(
            "Lanczos SVD did not reach the requested residual tolerance; "
            f"best singular values so far: {None if svd is None else svd.s}"
        )
    return svd


def _bidiag_ritz(alphas, betas, U, V, k):
    j = min(len(alphas), len(U), len(V))
    if j < k:
        return None
    # Golub-Kahan recurrence: Z V_j = U_j B_j with B upper bidiagonal,
    # alphas on the diagonal and betas on the superdiagonal
    B = np.zeros((j, j))
    for i in range(j):
        B[i, i] = alphas[i]
        if i + 1 < j and i < len(betas):
            B[i, i + 1] = betas[i]
    P, s, Qt = np.linalg.svd(B)
    Um = np.column_stack(U[:j]) @ P[:, :k]
    Vm = np.column_stack(V[:j]) @ Qt[:k].T
    # Ritz-value tail estimate plus the trailing coupling term as safety margin.
    tail_ritz = float(s[k]) if k < len(s) else 0.0
    margin = betas[j - 1] if len(betas) >= j and j >= 1 else 0.0
    tail = tail_ritz + abs(margin)
    return TruncatedSvd(Um, s[:k].copy(), Vm, tail,
                        gap_degenerate=bool(s[0] <= tail))


def _converged(svd, matvec, rmatvec, k, tol):
    # the bidiagonalization identity makes the forward residual vanish at
    # every Krylov dimension, so convergence must be read off the adjoint
    # residual as well
    scale = max(1.0, float(svd.s[0]) if len(svd.s) else 1.0)
    for i in range(k):
        r = matvec(svd.V[:, i]) - svd.s[i] * svd.U[:, i]
        if np.linalg.norm(r) > tol * scale:
            return False
        r = rmatvec(svd.U[:, i]) - svd.s[i] * svd.V[:, i]
        if np.linalg.norm(r) > tol * scale:
            return False
    return True


def truncated_eig_sym(Z, k, tol=1e-10, seed=0):
    """Top-k algebraic eigenpairs of a symmetric matrix Z.

    Returns ``(V_k, lam_k, lam_tail_bound)`` with eigenvalues sorted
    nonincreasing. Z must be symmetric to 1e-10.
    """
    if isinstance(Z, np.ndarray):
        if not np.allclose(Z, Z.T, atol=1e-10):
            raise ValueError("matrix is not symmetric")
        n = Z.shape[0]
        if k > n:
            raise ValueError(f"k={k} exceeds n={n}")
        if n <= DENSE_CUTOFF:
            lam, V = np.linalg.eigh(Z)
            lam, V = lam[::-1], V[:, ::-1]
            tail = float(lam[k]) if k < n else -np.inf
            return V[:, :k].copy(), lam[:k].copy(), tail
        matvec = lambda v: Z @ v
    else:
        matvec, _, (n, _) = _as_matvec(Z)
        if k > n:
            raise ValueError(f"k={k} exceeds n={n}")
    return _lanczos_eig(matvec, n, k, tol, seed)


def _lanczos_eig(matvec, n, k, tol, seed):
    """Symmetric Lanczos tridiagonalization with full reorthogonalization."""
    rng = np.random.default_rng(seed)
    q = rng.standard_normal(n)
    q /= np.linalg.norm(q)
    Q = [q]
    alphas, betas = [], []
    for j in range(n):
        w = matvec(Q[-1])
        alpha = Q[-1] @ w
        alphas.append(float(alpha))
        w = w - alpha * Q[-1]
        if betas:
            w = w - betas[-1] * Q[-2]
        for p in Q:
            w -= (p @ w) * p
        beta = np.linalg.norm(w)
        done = beta <= 1e-14 or j == n - 1
        if not done:
            betas.append(float(beta))
            Q.append(w / beta)
        if done or (j >= k + 1 and j % 5 == 0):
            T = np.diag(alphas) + np.diag(betas[: len(alphas) - 1], 1) \
                + np.diag(betas[: len(alphas) - 1], -1)
            lam, S = np.linalg.eigh(T)
            lam, S = lam[::-1], S[:, ::-1]
            if len(lam) >= k:
                Vk = np.column_stack(Q[: len(alphas)]) @ S[:, :k]
                scale = max(1.0, abs(float(lam[0])))
                resid = max(
                    np.linalg.norm(matvec(Vk[:, i]) - lam[i] * Vk[:, i])
                    for i in range(k)
                )
                if resid <= tol * scale or done:
                    if resid > tol * scale:
                        raise SpectralError(
                            "Lanczos eigensolver did not converge; best "
                            f"eigenvalues: {lam[:k]}"
                        )
                    tail = float(lam[k]) if k < len(lam) else -np.inf
                    tail += betas[-1] if len(betas) == len(alphas) else 0.0
                    return Vk, lam[:k].copy(), tail
    raise SpectralError("Lanczos eigensolver exhausted the Krylov space")
