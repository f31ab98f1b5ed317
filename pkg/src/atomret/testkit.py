"""Independent brute-force oracles for property tests.

Everything here is deliberately naive and shares no numerical kernels
with the main modules: gauge values come from exhaustive basis
enumeration, factorizations from hand-rolled Jacobi iterations, and
reference optima from support enumeration / bisection with explicit
optimality certificates. An oracle that cannot certify its answer raises
``OracleFailure`` instead of returning silently.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .atoms import INFINITE, NonnegCanonical, SignedCanonical

__all__ = [
    "OracleConfig", "OracleFailure", "gauge_lp_oracle", "dense_svd_oracle",
    "dense_eig_oracle", "small_instance_reference_solve",
    "reduced_lsq_oracle", "one_sided_hausdorff", "ReferenceSolution",
]


class OracleFailure(RuntimeError):
    """A reference oracle could not certify its result."""


@dataclass(frozen=True)
class OracleConfig:
    seed: int = 0
    max_dim: int = 8
    tol: float = 1e-10

    def __post_init__(self):
        if self.max_dim > 8:
            raise ValueError("exhaustive modes are capped at dimension 8")


@dataclass
class ReferenceSolution:
    x: np.ndarray
    y: np.ndarray
    p_value: float
    d_value: float
    beta: float = None


# ---------------------------------------------------------------------------
# Exhaustive gauge evaluation
# ---------------------------------------------------------------------------

def _all_atoms(atom_set):
    zeros = np.zeros(atom_set.shape)
    return [a for _, a in atom_set._scores(zeros)]


def gauge_lp_oracle(atom_set, x, tol=1e-9):
    """Gauge by exhaustive enumeration of atom bases of size <= n.

    Minimizes the coefficient sum over all nonnegative combinations of at
    most n atoms reproducing x; returns the infinite marker when x lies
    outside the generated cone.
    """
    x = np.asarray(x, dtype=float).ravel()
    n = x.size
    if n > 8:
        raise ValueError("oracle capped at dimension 8")
    atoms = _all_atoms(atom_set)
    cols = [a.dense(atom_set.shape).ravel() for a in atoms]
    best = None
    if np.linalg.norm(x) <= tol:
        return 0.0
    for size in range(1, n + 1):
        for subset in itertools.combinations(range(len(cols)), size):
            A = np.column_stack([cols[i] for i in subset])
            c, res = np.linalg.lstsq(A, x, rcond=None)[:2]
            if np.linalg.norm(A @ c - x) > tol * max(1.0, np.linalg.norm(x)):
                continue
            if np.min(c) < -tol:
                continue
            total = float(np.sum(np.maximum(c, 0.0)))
            if best is None or total < best:
                best = total
    return INFINITE if best is None else best


# ---------------------------------------------------------------------------
# Jacobi factorizations
# ---------------------------------------------------------------------------

def dense_eig_oracle(Z, max_sweeps=100, tol=1e-13):
    """Symmetric eigendecomposition by cyclic Jacobi rotations.

    Returns (lam, V) with lam nonincreasing and Z V = V diag(lam) up to
    residual 1e-11.
    """
    A = np.array(Z, dtype=float)
    if A.shape[0] != A.shape[1] or not np.allclose(A, A.T, atol=1e-12):
        raise ValueError("need a symmetric matrix")
    n = A.shape[0]
    V = np.eye(n)
    scale = max(np.linalg.norm(A), 1e-300)
    for _ in range(max_sweeps):
        # measure the off-diagonal mass directly; the difference-of-sums
        # form cancels catastrophically near convergence
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = 0.5 * (A[q, q] - A[p, p]) / apq
                t = np.sign(theta) / (abs(theta) + math.sqrt(theta ** 2 + 1.0)) \
                    if theta != 0 else 1.0
                c = 1.0 / math.sqrt(t ** 2 + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q], rot[q, p] = s, -s
                A = rot.T @ A @ rot
                V = V @ rot
    else:
        raise OracleFailure("Jacobi eigensolver did not converge")
    lam = np.diag(A).copy()
    order = np.argsort(-lam)
    lam, V = lam[order], V[:, order]
    if np.linalg.norm(np.asarray(Z, float) @ V - V * lam) > 1e-11 * scale:
        raise OracleFailure("eigendecomposition residual too large")
    return lam, V


def dense_svd_oracle(Z, max_sweeps=100, tol=1e-14):
    """SVD by one-sided Jacobi (Hestenes) column orthogonalization.

    Returns (U, s, V) economy factors with Z = U diag(s) V^T up to
    residual 1e-11.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.shape[0] < Z.shape[1]:
        U, s, V = dense_svd_oracle(Z.T, max_sweeps, tol)
        return V, s, U
    m, n = Z.shape
    A = Z.copy()
    V = np.eye(n)
    scale = max(np.linalg.norm(Z), 1e-300)
    for _ in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                app = float(A[:, p] @ A[:, p])
                aqq = float(A[:, q] @ A[:, q])
                apq = float(A[:, p] @ A[:, q])
                if abs(apq) <= tol * math.sqrt(max(app * aqq, 1e-300)):
                    continue
                rotated = True
                theta = 0.5 * (aqq - app) / apq
                t = np.sign(theta) / (abs(theta) + math.sqrt(theta ** 2 + 1.0)) \
                    if theta != 0 else 1.0
                c = 1.0 / math.sqrt(t ** 2 + 1.0)
                s = t * c
                Ap = c * A[:, p] - s * A[:, q]
                Aq = s * A[:, p] + c * A[:, q]
                A[:, p], A[:, q] = Ap, Aq
                Vp = c * V[:, p] - s * V[:, q]
                Vq = s * V[:, p] + c * V[:, q]
                V[:, p], V[:, q] = Vp, Vq
        if not rotated:
            break
    else:
        raise OracleFailure("Jacobi SVD did not converge")
    s = np.linalg.norm(A, axis=0)
    order = np.argsort(-s)
    s, A, V = s[order], A[:, order], V[:, order]
    U = np.zeros((m, n))
    for i in range(n):
        if s[i] > 1e-13 * scale:
            U[:, i] = A[:, i] / s[i]
    # complete zero-singular-value columns to an orthonormal family
    deficient = [i for i in range(n) if s[i] <= 1e-13 * scale]
    if deficient:
        basis = np.linalg.qr(
            np.column_stack([U[:, [i for i in range(n) if i not in deficient]],
                             np.eye(m)]))[0]
        used = n - len(deficient)
        for j, i in enumerate(deficient):
            U[:, i] = basis[:, used + j]
            s[i] = 0.0
    if np.linalg.norm(Z - (U * s) @ V.T) > 1e-11 * scale:
        raise OracleFailure("SVD residual too large")
    return U, s, V


# ---------------------------------------------------------------------------
# Reference solves for small instances
# ---------------------------------------------------------------------------

def _dense_matrix(op):
    n = int(np.prod(op.shape_in))
    cols = []
    for i in range(n):
        e = np.zeros(op.shape_in)
        e.flat[i] = 1.0
        cols.append(np.asarray(op.forward(e)).ravel())
    return np.column_stack(cols)


def _lasso_enumerate(M, b, lam, nonneg, tol=1e-10):
    """Exact small-lasso solve by sign/support enumeration with KKT checks."""
    m, n = M.shape
    grad0 = M.T @ b
    limit = np.max(grad0) if nonneg else np.max(np.abs(grad0))
    if limit <= lam + tol:
        return np.zeros(n)
    indices = range(n)
    for size in range(1, n + 1):
        for S in itertools.combinations(indices, size):
            MS = M[:, S]
            sign_choices = [np.ones(size)] if nonneg else \
                itertools.product((1.0, -1.0), repeat=size)
            for signs in sign_choices:
                signs = np.asarray(signs, dtype=float)
                try:
                    c = np.linalg.solve(MS.T @ MS,
                                        MS.T @ b - lam * signs)
                except np.linalg.LinAlgError:
                    continue
                if np.any(signs * c <= tol):
                    continue
                x = np.zeros(n)
                x[list(S)] = c
                r = b - M @ x
                corr = M.T @ r
                off = [j for j in indices if j not in S]
                ok = np.all(np.asarray([corr[j] for j in off]) <= lam + 1e-8) \
                    if nonneg else \
                    np.all(np.abs(np.asarray([corr[j] for j in off])) <= lam + 1e-8)
                if ok:
                    return x
    raise OracleFailure("support enumeration found no KKT point")


def _l1(x, nonneg):
    return float(np.sum(x)) if nonneg else float(np.sum(np.abs(x)))


def _certify(p, d, what, tol=1e-8):
    if abs(p + d) > tol * max(1.0, abs(p)):
        raise OracleFailure(f"{what}: optimality certificate failed "
                            f"(gap {p + d:.3e})")


def _polyhedral_reference(spec, M, b, nonneg):
    kind = spec.formulation.kind
    n = M.shape[1]
    if kind == "penalized":
        lam = spec.formulation.value
        x = _lasso_enumerate(M, b, lam, nonneg)
        r = b - M @ x
        p = 0.5 * float(r @ r) + lam * _l1(x, nonneg)
        d = 0.5 * float(r @ r) - float(b @ r)
        _certify(p, d, "penalized reference")
        return ReferenceSolution(x, r, p, d)

    if kind == "gauge_ball":
        tau = spec.formulation.value
        x_ls, *_ = np.linalg.lstsq(M, b, rcond=None)
        if nonneg:
            x_ls = nnls(M, b)[0]
        if _l1(x_ls, nonneg) <= tau + 1e-12:
            r = b - M @ x_ls
            p = 0.5 * float(r @ r)
            corr = M.T @ r
            sigma = max(np.max(corr), 0.0) if nonneg else np.max(np.abs(corr))
            d = 0.5 * float(r @ r) - float(b @ r) + tau * float(sigma)
            _certify(p, d, "gauge-ball reference")
            return ReferenceSolution(x_ls, r, p, d)
        lo, hi = 0.0, np.max(np.abs(M.T @ b)) * (1 + 1e-9)
        for _ in range(200):
            lam = 0.5 * (lo + hi)
            x = _lasso_enumerate(M, b, lam, nonneg)
            if _l1(x, nonneg) > tau:
                lo = lam
            else:
                hi = lam
        x = _lasso_enumerate(M, b, hi, nonneg)
        r = b - M @ x
        p = 0.5 * float(r @ r)
        corr = M.T @ r
        sigma = max(np.max(corr), 0.0) if nonneg else np.max(np.abs(corr))
        d = 0.5 * float(r @ r) - float(b @ r) + tau * float(sigma)
        _certify(p, d, "gauge-ball reference")
        return ReferenceSolution(x, r, p, d)

    alpha = spec.formulation.value
    if 0.5 * float(b @ b) <= alpha + 1e-15:
        z = np.zeros(n)
        return ReferenceSolution(z, np.zeros_like(b), 0.0, 0.0, beta=1.0)
    lo, hi = 0.0, np.max(np.abs(M.T @ b)) * (1 + 1e-9)
    for _ in range(200):
        lam = 0.5 * (lo + hi)
        x = _lasso_enumerate(M, b, lam, nonneg)
        r = b - M @ x
        if 0.5 * float(r @ r) > alpha:
            hi = lam
        else:
            lo = lam
    lam = 0.5 * (lo + hi)
    x = _lasso_enumerate(M, b, lam, nonneg)
    r = b - M @ x
    y = r / lam
    p = _l1(x, nonneg)
    d = math.sqrt(2.0 * alpha) * float(np.linalg.norm(y)) - float(b @ y)
    _certify(p, d, "residual-ball reference")
    return ReferenceSolution(x, y, p, d, beta=1.0 / lam)


def _svt(W, lam):
    U, s, Vt = np.linalg.svd(W, full_matrices=False)
    return (U * np.maximum(s - lam, 0.0)) @ Vt


def _nuclear_lasso(Mmat, b, lam, shape, max_iter=60000, tol=1e-13):
    """Dense proximal-gradient solve of the nuclear-norm penalized fit."""
    lip = np.linalg.norm(Mmat, 2) ** 2
    step = 1.0 / lip
    x = np.zeros(Mmat.shape[1])
    t_mom, x_y = 1.0, x.copy()
    f_prev = np.inf
    for _ in range(max_iter):
        grad = Mmat.T @ (Mmat @ x_y - b)
        x_new = _svt((x_y - step * grad).reshape(shape), step * lam).ravel()
        r = b - Mmat @ x_new
        f_new = 0.5 * float(r @ r) + lam * float(np.sum(
            np.linalg.svd(x_new.reshape(shape), compute_uv=False)))
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_mom ** 2))
        x_y = x_new + ((t_mom - 1.0) / t_next) * (x_new - x)
        x, t_mom = x_new, t_next
        if abs(f_prev - f_new) <= tol * max(1.0, abs(f_new)):
            break
        f_prev = f_new
    return x


def _spectral_reference(spec, Mmat, b):
    shape = spec.op.shape_in
    kind = spec.formulation.kind

    def nuc(xv):
        return float(np.sum(np.linalg.svd(xv.reshape(shape),
                                          compute_uv=False)))

    if kind == "penalized":
        lam = spec.formulation.value
        x = _nuclear_lasso(Mmat, b, lam, shape)
        r = b - Mmat @ x
        p = 0.5 * float(r @ r) + lam * nuc(x)
        d = 0.5 * float(r @ r) - float(b @ r)
        _certify(p, d, "spectral penalized reference")
        return ReferenceSolution(x.reshape(shape), r.reshape(spec.op.shape_out),
                                 p, d)

    def opnorm_adj(r):
        return float(np.linalg.norm((Mmat.T @ r).reshape(shape), 2))

    if kind == "gauge_ball":
        tau = spec.formulation.value
        lo, hi = 0.0, opnorm_adj(b) * (1 + 1e-9)
        x = np.zeros(Mmat.shape[1])
        for _ in range(120):
            lam = 0.5 * (lo + hi)
            x = _nuclear_lasso(Mmat, b, lam, shape)
            if nuc(x) > tau:
                lo = lam
            else:
                hi = lam
        x_ls, *_ = np.linalg.lstsq(Mmat, b, rcond=None)
        if nuc(x_ls) <= tau + 1e-10:
            x = x_ls
        r = b - Mmat @ x
        p = 0.5 * float(r @ r)
        d = 0.5 * float(r @ r) - float(b @ r) + tau * opnorm_adj(r)
        _certify(p, d, "spectral gauge-ball reference")
        return ReferenceSolution(x.reshape(shape), r.reshape(spec.op.shape_out),
                                 p, d)

    alpha = spec.formulation.value
    if 0.5 * float(b @ b) <= alpha + 1e-15:
        return ReferenceSolution(np.zeros(shape),
                                 np.zeros(spec.op.shape_out), 0.0, 0.0, 1.0)
    lo, hi = 0.0, opnorm_adj(b) * (1 + 1e-9)
    for _ in range(120):
        lam = 0.5 * (lo + hi)
        x = _nuclear_lasso(Mmat, b, lam, shape)
        r = b - Mmat @ x
        if 0.5 * float(r @ r) > alpha:
            hi = lam
        else:
            lo = lam
    lam = 0.5 * (lo + hi)
    x = _nuclear_lasso(Mmat, b, lam, shape)
    r = b - Mmat @ x
    y = r / lam
    p = nuc(x)
    d = math.sqrt(2.0 * alpha) * float(np.linalg.norm(y)) - float(b @ y)
    _certify(p, d, "spectral residual-ball reference")
    return ReferenceSolution(x.reshape(shape), y.reshape(spec.op.shape_out),
                             p, d, beta=1.0 / lam)


def small_instance_reference_solve(spec):
    """Certified optimum of a small instance by enumeration / bisection.

    Polyhedral dictionaries (dimension <= 8): exact support enumeration
    with KKT sign checks; ball and misfit-constrained formulations reduce
    to the penalized solve through a Lagrange-multiplier bisection.
    Spectral dictionaries (dimension <= 6): dense proximal-gradient solve
    with singular-value thresholding. Every branch certifies a
    primal-dual gap <= 1e-8 or raises ``OracleFailure``.
    """
    n = int(np.prod(spec.op.shape_in))
    b = np.asarray(spec.b, dtype=float).ravel()
    M = _dense_matrix(spec.op)
    if isinstance(spec.atoms, (SignedCanonical, NonnegCanonical)):
        if n > 8:
            raise ValueError("polyhedral reference capped at dimension 8")
        nonneg = isinstance(spec.atoms, NonnegCanonical)
        return _polyhedral_reference(spec, M, b, nonneg)
    if max(spec.op.shape_in) > 6:
        raise ValueError("spectral reference capped at dimension 6")
    return _spectral_reference(spec, M, b)


def reduced_lsq_oracle(spec, model):
    """Reduced-problem optimum by dense least squares (free domains) or
    nonnegative least squares; returns the optimal misfit value."""
    cols = []
    for part in model.parts:
        if part.atoms is not None:
            for atom in part.atoms:
                cols.append(np.asarray(spec.op.forward(
                    part.scale * atom.dense(part.shape))).ravel())
        else:
            k = part.k
            for i in range(k):
                for j in range(k):
                    e = np.zeros((k, k))
                    e[i, j] = 1.0
                    cols.append(np.asarray(
                        spec.op.forward(part.synth(e))).ravel())
    G = np.column_stack(cols)
    b = np.asarray(spec.b, float).ravel()
    all_nonneg = all(p.domain == "nonneg" for p in model.parts)
    all_free = all(p.domain in ("free", "free_matrix") for p in model.parts)
    if all_nonneg:
        c = nnls(G, b)[0]
    elif all_free:
        c, *_ = np.linalg.lstsq(G, b, rcond=None)
    else:
        raise NotImplementedError("mixed/PSD domains not covered by this oracle")
    r = b - G @ c
    return 0.5 * float(r @ r)


# ---------------------------------------------------------------------------
# One-sided Hausdorff distance to a reduced model
# ---------------------------------------------------------------------------

def _nearest_unit_point(part, a):
    """Closest point to atom a on the unit-norm slice of a model part.

    The maximizer of <a, m> over unit-norm model points m has a closed
    form per domain: project a onto the part's span (or cone) and
    normalize the projection. A zero projection means every model point
    is orthogonal to a; any unit point attains the infimum sqrt(2) then.
    """
    a = np.asarray(a, dtype=float)
    if part.domain == "free_matrix":
        C = part.left.T @ a @ part.right
        proj = part.left @ C @ part.right.T
    elif part.domain == "psd_matrix":
        W = part.right.T @ a @ part.right
        W = 0.5 * (W + W.T)
        lam, V = np.linalg.eigh(W)
        pos = (V * np.maximum(lam, 0.0)) @ V.T
        proj = part.right @ pos @ part.right.T
    else:
        A = np.column_stack([at.dense(part.shape).ravel()
                             for at in part.atoms])
        if part.domain == "free":
            Q = np.linalg.qr(A)[0]
            proj = (Q @ (Q.T @ a.ravel())).reshape(a.shape)
        else:
            c = nnls(A, a.ravel())[0]
            proj = (A @ c).reshape(a.shape)
    nrm = np.linalg.norm(proj)
    if nrm == 0:
        return None
    return proj / nrm


def one_sided_hausdorff(atoms_sample, model, grid=None):
    """sup over sampled atoms of the distance to the model's unit sphere.

    The inner infimum is evaluated in closed form: the nearest unit-norm
    model point is the normalized projection of the atom onto the part's
    span (or cone), and the distance is the norm of the residual to that
    point. Working with the residual directly keeps atoms that lie inside
    the model at distance ~1e-15 instead of the sqrt(machine eps) that the
    alignment identity dist^2 = 2 - 2 <a, m> would produce.
    """
    worst = 0.0
    sample = list(atoms_sample) + list(grid or [])
    for a in sample:
        dense = a.dense(model.shape) if hasattr(a, "dense") else np.asarray(a)
        dense = dense / max(np.linalg.norm(dense), 1e-300)
        best = math.sqrt(2.0)
        for part in model.parts:
            point = _nearest_unit_point(part, dense)
            if point is not None:
                best = min(best, float(np.linalg.norm(dense - point)))
        worst = max(worst, best)
    return worst
