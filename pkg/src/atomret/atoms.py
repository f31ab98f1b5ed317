"""Atomic dictionaries: gauge, support, exposure, and top-k queries.

Four concrete dictionaries are provided (signed and nonnegative canonical
vectors, asymmetric rank-1 matrices, symmetric PSD rank-1 matrices) plus
weighted Minkowski sums of two dictionaries. Every set answers the same
capability bundle: support-function values, (eps-)exposed atoms, top-k
atoms, gauge values, an induced operator norm, and the reduced model used
by primal retrieval.
"""

import abc
from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .linops import Dense
from .tolerances import TOL

__all__ = [
    "INFINITE", "is_finite", "CapacityError",
    "SignedUnit", "NonnegUnit", "Rank1", "Rank1Sym", "Scaled",
    "AtomicSet", "SignedCanonical", "NonnegCanonical",
    "SpectralAsym", "SpectralPSD", "WeightedSum",
    "ModelPart", "ReducedModel", "same_atom", "atom_to_json",
]


class _Infinite:
    """Marker for an infinite gauge value; deliberately not a float."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "infinite"


INFINITE = _Infinite()


def is_finite(value):
    return value is not INFINITE


class CapacityError(RuntimeError):
    """More qualifying atoms than the caller's cap allows."""


def _check_unit(vec, name):
    vec = np.asarray(vec, dtype=float)
    nrm = np.linalg.norm(vec)
    if abs(nrm - 1.0) > 1e-9:
        raise ValueError(f"{name} must have unit norm, got {nrm}")
    return vec


@dataclass(frozen=True)
class SignedUnit:
    """A signed canonical unit vector: sign * e_index (flat index)."""

    index: int
    sign: int

    def __post_init__(self):
        if self.sign not in (-1, 1):
            raise ValueError("sign must be +1 or -1")

    def dense(self, shape):
        out = np.zeros(shape)
        out.flat[self.index] = self.sign
        return out


@dataclass(frozen=True)
class NonnegUnit:
    index: int

    def dense(self, shape):
        out = np.zeros(shape)
        out.flat[self.index] = 1.0
        return out


@dataclass(frozen=True, eq=False)
class Rank1:
    """Unit rank-1 matrix atom u v^T."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u", _check_unit(self.u, "u"))
        object.__setattr__(self, "v", _check_unit(self.v, "v"))

    def dense(self, shape=None):
        return np.outer(self.u, self.v)


@dataclass(frozen=True, eq=False)
class Rank1Sym:
    """Unit symmetric rank-1 atom v v^T."""

    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "v", _check_unit(self.v, "v"))

    def dense(self, shape=None):
        return np.outer(self.v, self.v)


@dataclass(frozen=True, eq=False)
class Scaled:
    """weight * inner, weight > 0; used for atoms of weighted-sum sets."""

    weight: float
    inner: object

    def __post_init__(self):
        if self.weight <= 0:
            raise ValueError("weight must be positive")

    def dense(self, shape=None):
        return self.weight * self.inner.dense(shape)


def same_atom(a, b, tol=1e-10):
    """Equality up to the factor sign ambiguity (u, v) ~ (-u, -v)."""
    if type(a) is not type(b):
        return False
    if isinstance(a, (SignedUnit, NonnegUnit)):
        return a == b
    if isinstance(a, Rank1):
        direct = (np.allclose(a.u, b.u, atol=tol)
                  and np.allclose(a.v, b.v, atol=tol))
        flipped = (np.allclose(a.u, -b.u, atol=tol)
                   and np.allclose(a.v, -b.v, atol=tol))
        return direct or flipped
    if isinstance(a, Rank1Sym):
        return (np.allclose(a.v, b.v, atol=tol)
                or np.allclose(a.v, -b.v, atol=tol))
    if isinstance(a, Scaled):
        return abs(a.weight - b.weight) <= tol and same_atom(a.inner, b.inner, tol)
    raise TypeError(f"unknown atom type {type(a)!r}")


def atom_to_json(atom):
    if isinstance(atom, SignedUnit):
        return {"kind": "signed_unit", "index": atom.index, "sign": atom.sign}
    if isinstance(atom, NonnegUnit):
        return {"kind": "nonneg_unit", "index": atom.index}
    if isinstance(atom, Rank1):
        return {"kind": "rank1", "u": atom.u.tolist(), "v": atom.v.tolist()}
    if isinstance(atom, Rank1Sym):
        return {"kind": "rank1_sym", "v": atom.v.tolist()}
    if isinstance(atom, Scaled):
        return {"kind": "scaled", "weight": atom.weight,
                "inner": atom_to_json(atom.inner)}
    raise TypeError(f"unknown atom type {type(atom)!r}")


# ---------------------------------------------------------------------------
# Reduced models
# ---------------------------------------------------------------------------

@dataclass
class ModelPart:
    """One block of a reduced recovery model.

    domain: "nonneg" | "free" (coefficient vectors over explicit atoms),
            "free_matrix" | "psd_matrix" (k-by-k coefficient matrix between
            the stored orthonormal factors).
    scale:  multiplies the synthesized block; carries the weight of a
            weighted-sum operand.
    """

    domain: str
    shape: tuple
    atoms: list = None
    left: np.ndarray = None
    right: np.ndarray = None
    scale: float = 1.0

    @property
    def k(self):
        if self.atoms is not None:
            return len(self.atoms)
        return self.right.shape[1] if self.right is not None else self.left.shape[1]

    @property
    def param_shape(self):
        if self.domain in ("nonneg", "free"):
            return (self.k,)
        return (self.k, self.k)

    def synth(self, params):
        params = np.asarray(params, dtype=float)
        if self.domain in ("nonneg", "free"):
            out = np.zeros(self.shape)
            for c, a in zip(params, self.atoms):
                out += c * a.dense(self.shape)
            return self.scale * out
        if self.domain == "free_matrix":
            return self.scale * (self.left @ params @ self.right.T)
        if self.domain == "psd_matrix":
            return self.scale * (self.right @ params @ self.right.T)
        raise ValueError(f"unknown domain {self.domain!r}")

    def adjoint(self, w):
        """Gradient back-map: d<synth(P), w>/dP."""
        if self.domain in ("nonneg", "free"):
            return self.scale * np.array(
                [np.vdot(a.dense(self.shape), w) for a in self.atoms])
        if self.domain == "free_matrix":
            return self.scale * (self.left.T @ w @ self.right)
        if self.domain == "psd_matrix":
            return self.scale * (self.right.T @ w @ self.right)
        raise ValueError(f"unknown domain {self.domain!r}")

    def project(self, params):
        if self.domain == "nonneg":
            return np.maximum(params, 0.0)
        if self.domain in ("free", "free_matrix"):
            return params
        if self.domain == "psd_matrix":
            sym = 0.5 * (params + params.T)
            lam, vecs = np.linalg.eigh(sym)
            return (vecs * np.maximum(lam, 0.0)) @ vecs.T
        raise ValueError(f"unknown domain {self.domain!r}")

    def gauge_of(self, params):
        """Gauge of the synthesized block w.r.t. its originating set."""
        params = np.asarray(params, dtype=float)
        if self.domain == "nonneg":
            return float(np.sum(params))
        if self.domain == "free":
            return float(np.sum(np.abs(params)))
        if self.domain == "free_matrix":
            return float(np.sum(np.linalg.svd(params, compute_uv=False)))
        if self.domain == "psd_matrix":
            return float(np.trace(params))
        raise ValueError(f"unknown domain {self.domain!r}")


@dataclass
class ReducedModel:
    """Identified atom basis plus coefficient domains for primal recovery."""

    parts: list

    @property
    def shape(self):
        return self.parts[0].shape

    def zero_params(self):
        return [np.zeros(p.param_shape) for p in self.parts]

    def synth(self, params):
        out = np.zeros(self.shape)
        for part, p in zip(self.parts, params):
            out += part.synth(p)
        return out

    def adjoint(self, w):
        return [part.adjoint(w) for part in self.parts]

    def project(self, params):
        return [part.project(p) for part, p in zip(self.parts, params)]

    def gauge_of(self, params):
        # Minkowski-sum gauge: max over the per-operand gauges (each part's
        # coefficient gauge is already in that operand's own units).
        vals = [part.gauge_of(p) for part, p in zip(self.parts, params)]
        return max(vals)

    def atom_count(self, params, tol=1e-9):
        """Number of participating atoms, per part."""
        counts = []
        for part, p in zip(self.parts, params):
            p = np.asarray(p)
            if part.domain in ("nonneg", "free"):
                counts.append(int(np.sum(np.abs(p) > tol)))
            else:
                s = np.linalg.svd(p, compute_uv=False)
                counts.append(int(np.sum(s > tol * max(1.0, s[0] if len(s) else 0))))
        return counts


# ---------------------------------------------------------------------------
# Atomic sets
# ---------------------------------------------------------------------------

class AtomicSet(abc.ABC):
    """Capability bundle shared by all dictionaries."""

    shape: tuple

    def _check(self, z):
        z = np.asarray(z, dtype=float)
        if z.shape != self.shape:
            raise ValueError(f"direction shape {z.shape} != ambient {self.shape}")
        return z

    @abc.abstractmethod
    def support(self, z):
        """sigma(z) = sup_a <a, z>."""

    def feasibility_value(self, z):
        """Value compared against the dual constraint level (cone sets
        use indicator semantics here, see NonnegCanonical)."""
        return self.support(z)

    @abc.abstractmethod
    def exposed(self, z, eps=0.0, cap=64):
        """Atoms within eps of the support value, at most cap of them."""

    @abc.abstractmethod
    def top_k(self, z, k):
        """k atoms maximizing <a, z>, deterministic tie-breaking."""

    @abc.abstractmethod
    def gauge(self, x):
        """Gauge value of x; INFINITE outside the generated cone."""

    @abc.abstractmethod
    def opnorm(self, op, trials=60):
        """max_a ||op(a)||; exact for finite sets, an upper bound otherwise."""

    @abc.abstractmethod
    def ess_model(self, z, k, seed=None):
        """ReducedModel spanned by the top-k atoms in direction z.

        ``seed`` may pass a previously built ReducedModel of the same
        structure. Spectral sets use it to break ties among equally
        exposed singular directions: any rotation within a tied block is
        an equally valid top-k factorization, so the block is aligned
        with the seed subspace to keep the model continuous across
        iterations. Finite dictionaries ignore the seed.
        """


class _FiniteSet(AtomicSet):
    """Common machinery for sets with finitely many explicit atoms."""

    def _scores(self, z):
        """(value, atom) pairs for all atoms, already deterministic."""
        raise NotImplementedError

    def exposed(self, z, eps=0.0, cap=64):
        if eps < 0:
            raise ValueError("eps must be nonnegative")
        z = self._check(z)
        sigma = self.support(z)
        hits = [a for val, a in self._scores(z) if val >= sigma - eps - TOL.containment]
        if len(hits) > cap:
            raise CapacityError(
                f"{len(hits)} atoms within eps={eps} exceed cap={cap}")
        return hits

    def top_k(self, z, k):
        z = self._check(z)
        scored = self._scores(z)
        if not 1 <= k <= len(scored):
            raise ValueError(f"k={k} out of range 1..{len(scored)}")
        ranked = sorted(enumerate(scored), key=lambda t: (-t[1][0], t[0]))
        return [a for _, (_, a) in ranked[:k]]


class SignedCanonical(_FiniteSet):
    """Signed canonical unit vectors {+-e_i}; works on any ambient shape
    by flat indexing (vectors or matrices)."""

    def __init__(self, shape):
        shape = (shape,) if np.isscalar(shape) else tuple(shape)
        if any(s <= 0 for s in shape):
            raise ValueError("dimensions must be positive")
        self.shape = shape
        self.n = int(np.prod(shape))

    def _scores(self, z):
        flat = z.ravel()
        out = []
        for i in range(self.n):  # positive sign first at each index
            out.append((flat[i], SignedUnit(i, 1)))
            out.append((-flat[i], SignedUnit(i, -1)))
        return out

    def support(self, z):
        z = self._check(z)
        return float(np.max(np.abs(z))) if z.size else 0.0

    def top_k(self, z, k):
        # same semantics as the generic path, vectorized for large n
        z = self._check(z)
        if not 1 <= k <= 2 * self.n:
            raise ValueError(f"k={k} out of range 1..{2 * self.n}")
        flat = z.ravel()
        vals = np.concatenate([flat, -flat])
        order = np.lexsort((np.arange(2 * self.n), np.tile(np.arange(self.n), 2),
                            -vals))
        # lexsort keys are applied last-first: value desc, index asc, sign (+ first)
        atoms = []
        for pos in order[:k]:
            idx = int(pos % self.n)
            atoms.append(SignedUnit(idx, 1 if pos < self.n else -1))
        return atoms

    def gauge(self, x):
        x = self._check(x)
        return float(np.sum(np.abs(x)))

    def opnorm(self, op, trials=60):
        if isinstance(op, Dense):
            return float(np.max(np.linalg.norm(op.matrix, axis=0)))
        best = 0.0
        for i in range(self.n):
            col = op._forward(SignedUnit(i, 1).dense(self.shape))
            best = max(best, float(np.linalg.norm(col)))
        return best

    def ess_model(self, z, k, seed=None):
        # centrosymmetric: cone of the top-k atoms is their span
        atoms = self.top_k(z, k) if seed is None \
            else self._seeded_top_k(z, k, seed)
        return ReducedModel([ModelPart(
            domain="free", shape=self.shape, atoms=atoms)])

    def _seeded_top_k(self, z, k, seed):
        """Top-k entries with ties broken in favor of the seed support.

        Entries whose score ties with the k-th largest (relative width
        ``_TIE_RTOL``) are interchangeable in exposure; among those, the
        ones present in the seed model are preferred, which keeps the
        selected support stable across iterations.
        """
        z = self._check(z)
        vals = np.abs(z.ravel())
        order = np.argsort(-vals, kind="stable")
        cut = float(vals[order[k - 1]])
        width = _TIE_RTOL * max(cut, 1e-30)
        seed_idx = {a.index for part in seed.parts
                    for a in (part.atoms or []) if hasattr(a, "index")}
        forced = [i for i in order if vals[i] > cut + width]
        band = [i for i in order
                if cut - width <= vals[i] <= cut + width]
        band.sort(key=lambda i: (i not in seed_idx, -vals[i], i))
        chosen = (forced + band)[:k]
        flat = z.ravel()
        return [SignedUnit(int(i), 1 if flat[i] >= 0 else -1)
                for i in chosen]


class NonnegCanonical(_FiniteSet):
    """The cone generated by the canonical unit vectors.

    The support function is an indicator (finite iff z <= 0); for exposure
    ranking we order by the raw components and report max(max z, 0), while
    ``feasibility_value`` keeps the indicator semantics.
    """

    def __init__(self, shape):
        shape = (shape,) if np.isscalar(shape) else tuple(shape)
        if any(s <= 0 for s in shape):
            raise ValueError("dimensions must be positive")
        self.shape = shape
        self.n = int(np.prod(shape))

    def _scores(self, z):
        flat = z.ravel()
        return [(flat[i], NonnegUnit(i)) for i in range(self.n)]

    def support(self, z):
        z = self._check(z)
        return float(max(np.max(z), 0.0))

    def feasibility_value(self, z):
        z = self._check(z)
        return float(np.max(z))

    def gauge(self, x):
        x = self._check(x)
        if np.min(x) < -TOL.containment:
            return INFINITE
        return 0.0  # any nonnegative point lies in the cone at zero cost

    def opnorm(self, op, trials=60):
        if isinstance(op, Dense):
            return float(np.max(np.linalg.norm(op.matrix, axis=0)))
        best = 0.0
        for i in range(self.n):
            col = op._forward(NonnegUnit(i).dense(self.shape))
            best = max(best, float(np.linalg.norm(col)))
        return best

    def ess_model(self, z, k, seed=None):
        return ReducedModel([ModelPart(
            domain="nonneg", shape=self.shape, atoms=self.top_k(z, k))])


# Relative width within which exposure values count as tied for the
# purpose of seed-aligned model construction.
_TIE_RTOL = 1e-3


def _tie_rotate(vals, blocks, seeds, k, rtol=_TIE_RTOL):
    """Align the tied trailing block of a top-k factorization with a seed.

    ``vals`` are nonincreasing exposure values for p >= k directions and
    ``blocks`` the corresponding factor matrices (dim x p); ``seeds`` are
    matching matrices whose column spans the rotation should favor.
    Directions whose value ties with vals[k-1] span a face on which every
    orthonormal basis is equally exposed, so the returned (dim x k)
    factors keep the strictly-larger directions and rotate the tied block
    to maximize overlap with the seed subspaces.
    """
    vals = np.asarray(vals, dtype=float)
    scale = max(abs(float(vals[k - 1])), 1e-30)
    g = int(np.sum(vals > vals[k - 1] + rtol * scale))
    t = int(np.sum(vals >= vals[k - 1] - rtol * scale))
    if t <= k:                   # no tie across the cut: plain top-k
        return [B[:, :k] for B in blocks]
    r = k - g
    M = None
    for B, S in zip(blocks, seeds):
        C = B[:, g:t].T @ S
        M = C @ C.T if M is None else M + C @ C.T
    _, W = np.linalg.eigh(M)
    W = W[:, ::-1][:, :r]
    return [np.column_stack([B[:, :g], B[:, g:t] @ W]) for B in blocks]


class SpectralAsym(AtomicSet):
    """Unit rank-1 matrices u v^T (asymmetric)."""

    def __init__(self, m, n):
        if m <= 0 or n <= 0:
            raise ValueError("dimensions must be positive")
        self.m, self.n = m, n
        self.shape = (m, n)

    def support(self, z):
        z = self._check(z)
        return float(np.linalg.norm(z, 2))

    def exposed(self, z, eps=0.0, cap=64):
        if eps < 0:
            raise ValueError("eps must be nonnegative")
        z = self._check(z)
        U, s, Vt = np.linalg.svd(z)
        hits = []
        for i, si in enumerate(s):
            if si >= s[0] - eps - TOL.containment and len(hits) < cap:
                hits.append(Rank1(U[:, i], Vt[i]))
        return hits

    def top_k(self, z, k):
        z = self._check(z)
        if not 1 <= k <= min(self.m, self.n):
            raise ValueError(f"k={k} out of range 1..{min(self.m, self.n)}")
        svd = spectral.truncated_svd(z, k)
        return [Rank1(svd.U[:, i], svd.V[:, i]) for i in range(k)]

    def gauge(self, x):
        x = self._check(x)
        return float(np.sum(np.linalg.svd(x, compute_uv=False)))

    def opnorm(self, op, trials=60):
        # max over unit-Frobenius rank-1 atoms is bounded by the operator
        # norm of op on matrices; documented upper bound.
        return float(op.opnorm_bound(trials=trials))

    def ess_model(self, z, k, seed=None):
        z = self._check(z)
        if seed is None:
            svd = spectral.truncated_svd(z, k)
            U, V = svd.U, svd.V
        else:
            part = seed.parts[0]
            mindim = min(self.m, self.n)
            p = min(max(2 * k, k + 4), mindim)
            while True:
                svd = spectral.truncated_svd(z, p)
                tied = svd.s[p - 1] >= svd.s[k - 1] \
                    - _TIE_RTOL * max(abs(float(svd.s[k - 1])), 1e-30)
                if p == mindim or not tied:
                    break
                p = min(2 * p, mindim)
            U, V = _tie_rotate(svd.s, [svd.U, svd.V],
                               [part.left, part.right], k)
        return ReducedModel([ModelPart(
            domain="free_matrix", shape=self.shape, left=U, right=V)])


class SpectralPSD(AtomicSet):
    """Unit symmetric rank-1 matrices v v^T (PSD cone atoms)."""

    def __init__(self, n):
        if n <= 0:
            raise ValueError("dimension must be positive")
        self.n = n
        self.shape = (n, n)

    def _sym_check(self, z):
        z = self._check(z)
        if not np.allclose(z, z.T, atol=1e-10):
            raise ValueError("direction must be symmetric")
        return z

    def support(self, z):
        z = self._sym_check(z)
        lam_max = float(np.linalg.eigvalsh(z)[-1])
        return max(lam_max, 0.0)

    def feasibility_value(self, z):
        return self.support(z)

    def exposed(self, z, eps=0.0, cap=64):
        if eps < 0:
            raise ValueError("eps must be nonnegative")
        z = self._sym_check(z)
        lam, V = np.linalg.eigh(z)
        lam, V = lam[::-1], V[:, ::-1]
        top = max(lam[0], 0.0)
        hits = []
        for i in range(self.n):
            if lam[i] >= top - eps - TOL.containment and len(hits) < cap:
                hits.append(Rank1Sym(V[:, i]))
        return hits

    def top_k(self, z, k):
        z = self._sym_check(z)
        if not 1 <= k <= self.n:
            raise ValueError(f"k={k} out of range 1..{self.n}")
        V, _, _ = spectral.truncated_eig_sym(z, k)
        return [Rank1Sym(V[:, i]) for i in range(k)]

    def gauge(self, x):
        x = self._check(x)
        if not np.allclose(x, x.T, atol=1e-10):
            return INFINITE
        lam = np.linalg.eigvalsh(x)
        if lam[0] < -1e-10 * max(1.0, abs(lam[-1])):
            return INFINITE
        return float(np.sum(np.maximum(lam, 0.0)))

    def opnorm(self, op, trials=60):
        return float(op.opnorm_bound(trials=trials))

    def ess_model(self, z, k, seed=None):
        z = self._sym_check(z)
        if seed is None:
            V, _, _ = spectral.truncated_eig_sym(z, k)
        else:
            part = seed.parts[0]
            p = min(max(2 * k, k + 4), self.n)
            while True:
                V, lam, _ = spectral.truncated_eig_sym(z, p)
                tied = lam[p - 1] >= lam[k - 1] \
                    - _TIE_RTOL * max(abs(float(lam[k - 1])), 1e-30)
                if p == self.n or not tied:
                    break
                p = min(2 * p, self.n)
            (V,) = _tie_rotate(lam, [V], [part.right], k)
        return ReducedModel([ModelPart(
            domain="psd_matrix", shape=self.shape, right=V)])


class WeightedSum(AtomicSet):
    """Minkowski sum lambda * left + right of two dictionaries.

    Atoms have the form lambda*a1 + a2; support functions add, exposure
    decomposes per operand, and top-k/reduced models keep a per-operand
    budget so recovery can split the two components.
    """

    def __init__(self, lam, left, right):
        if lam <= 0:
            raise ValueError("lambda must be positive")
        if left.shape != right.shape:
            raise ValueError("operands must share the ambient shape")
        self.lam = lam
        self.left = left
        self.right = right
        self.shape = left.shape

    def support(self, z):
        z = self._check(z)
        return self.lam * self.left.support(z) + self.right.support(z)

    def feasibility_value(self, z):
        z = self._check(z)
        return (self.lam * self.left.feasibility_value(z)
                + self.right.feasibility_value(z))

    def exposed(self, z, eps=0.0, cap=64):
        z = self._check(z)
        sig_l, sig_r = self.left.support(z), self.right.support(z)
        lefts = self.left.exposed(z, eps / self.lam, cap)
        rights = self.right.exposed(z, eps, cap)
        out = []
        for a1 in lefts:
            slack1 = self.lam * (sig_l - float(np.vdot(a1.dense(self.shape), z)))
            for a2 in rights:
                slack2 = sig_r - float(np.vdot(a2.dense(self.shape), z))
                if slack1 + slack2 <= eps + TOL.containment and len(out) < cap:
                    out.append(_sum_atom(self.lam, a1, a2))
        return out

    def top_k(self, z, k):
        k_left, k_right = _split_k(k)
        z = self._check(z)
        return ([Scaled(self.lam, a) for a in self.left.top_k(z, k_left)]
                + self.right.top_k(z, k_right))

    def gauge(self, x):
        raise NotImplementedError(
            "gauge of a weighted sum requires an explicit decomposition; "
            "evaluate ReducedModel.gauge_of on recovered coefficients instead")

    def opnorm(self, op, trials=60):
        # subadditive upper bound over the Minkowski sum
        return (self.lam * self.left.opnorm(op, trials)
                + self.right.opnorm(op, trials))

    def ess_model(self, z, k, seed=None):
        k_left, k_right = _split_k(k)
        z = self._check(z)
        seed_left = seed_right = None
        if seed is not None:
            n_left = _leaf_count(self.left)
            seed_left = ReducedModel(seed.parts[:n_left])
            seed_right = ReducedModel(seed.parts[n_left:])
        left_model = self.left.ess_model(z, k_left, seed=seed_left)
        right_model = self.right.ess_model(z, k_right, seed=seed_right)
        return self._merge(left_model, right_model)

    def seed_from_parts(self, parts, k):
        """Build a seed model from per-operand primal blocks.

        ``parts`` are dense arrays ordered like the flattened leaves of
        the weighted sum (left leaves first). Each leaf derives its seed
        structure from its own block, which gives a much cleaner seed
        than factoring the summed iterate.
        """
        k_left, k_right = _split_k(k)
        n_left = _leaf_count(self.left)
        if isinstance(self.left, WeightedSum):
            lm = self.left.seed_from_parts(parts[:n_left], k_left)
        else:
            lm = self.left.ess_model(parts[0], k_left)
        if isinstance(self.right, WeightedSum):
            rm = self.right.seed_from_parts(parts[n_left:], k_right)
        else:
            rm = self.right.ess_model(parts[n_left], k_right)
        return self._merge(lm, rm)

    def _merge(self, left_model, right_model):
        parts = []
        for p in left_model.parts:
            p.scale *= self.lam
            parts.append(p)
        parts.extend(right_model.parts)
        return ReducedModel(parts)


@dataclass(frozen=True, eq=False)
class _SumAtom:
    """lambda*a1 + a2; only produced by WeightedSum.exposed."""

    weight: float
    first: object
    second: object

    def dense(self, shape=None):
        return self.weight * self.first.dense(shape) + self.second.dense(shape)


def _sum_atom(lam, a1, a2):
    return _SumAtom(lam, a1, a2)


def _leaf_count(aset):
    """Number of ReducedModel parts an ess_model of this set produces."""
    if isinstance(aset, WeightedSum):
        return _leaf_count(aset.left) + _leaf_count(aset.right)
    return 1


def _split_k(k):
    try:
        k_left, k_right = k
    except TypeError:
        k_left = k_right = k
    if k_left < 1 or k_right < 1:
        raise ValueError("per-operand k must be >= 1")
    return int(k_left), int(k_right)
