"""Linear operators with adjoints and application counting.

Every operator tracks how many times its forward and adjoint maps were
applied; the sum of the two is the ``nMat`` cost metric reported by the
retrieval traces. For composed operators each constituent application
increments the count, so one forward pass through ``Compose(A, B)``
contributes two applications.
"""

from dataclasses import dataclass

import numpy as np
from scipy import fft as _fft

__all__ = [
    "OpCounter", "LinOp", "Dense", "Identity", "Dct", "Haar", "Conv1d",
    "GaussianEnsemble", "EntryMask", "Compose", "HStack",
]


@dataclass(frozen=True)
class OpCounter:
    forward_count: int
    adjoint_count: int

    @property
    def nmat(self):
        return self.forward_count + self.adjoint_count


class ShapeError(ValueError):
    pass


class LinOp:
    """Base linear operator.

    ``shape_in`` and ``shape_out`` are array shapes (tuples); vectors use
    ``(n,)`` and matrix-valued operators use ``(p, q)``.
    """

    shape_in: tuple
    shape_out: tuple

    def __init__(self):
        self._fwd = 0
        self._adj = 0

    def _check(self, x, shape, kind):
        x = np.asarray(x, dtype=float)
        if x.shape != shape:
            raise ShapeError(f"{kind} input shape {x.shape} != expected {shape}")
        return x

    def forward(self, x):
        x = self._check(x, self.shape_in, "forward")
        self._fwd += 1
        return self._forward(x)

    def adjoint(self, y):
        y = self._check(y, self.shape_out, "adjoint")
        self._adj += 1
        return self._adjoint(y)

    def counter_snapshot(self) -> OpCounter:
        return OpCounter(self._fwd, self._adj)

    def counter_reset(self):
        self._fwd = 0
        self._adj = 0

    def opnorm_bound(self, trials=60, seed=0):
        """Upper estimate of the spectral norm via power iteration."""
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(self.shape_in)
        v /= np.linalg.norm(v)
        sigma = 0.0
        for _ in range(trials):
            w = self._forward(v)
            v = self._adjoint(w)
            nrm = np.linalg.norm(v)
            if nrm == 0.0:
                return 0.0
            sigma = np.sqrt(nrm)
            v /= nrm
        return sigma * 1.01  # small safety factor; power iteration is a lower bound


class Dense(LinOp):
    """Explicit matrix operator on vectors."""

    def __init__(self, matrix):
        super().__init__()
        self.matrix = np.asarray(matrix, dtype=float)
        m, n = self.matrix.shape
        self.shape_in = (n,)
        self.shape_out = (m,)

    def _forward(self, x):
        return self.matrix @ x

    def _adjoint(self, y):
        return self.matrix.T @ y


class Identity(LinOp):
    def __init__(self, shape):
        super().__init__()
        shape = (shape,) if np.isscalar(shape) else tuple(shape)
        self.shape_in = self.shape_out = shape

    def _forward(self, x):
        return x.copy()

    def _adjoint(self, y):
        return y.copy()


class Dct(LinOp):
    """Orthonormal type-II discrete cosine transform."""

    def __init__(self, n):
        super().__init__()
        self.shape_in = self.shape_out = (n,)

    def _forward(self, x):
        return _fft.dct(x, type=2, norm="ortho")

    def _adjoint(self, y):
        return _fft.idct(y, type=2, norm="ortho")


class Haar(LinOp):
    """Orthonormal Haar wavelet analysis transform; n must be a power of 2."""

    def __init__(self, n):
        super().__init__()
        if n < 1 or n & (n - 1):
            raise ValueError("Haar length must be a power of two")
        self.shape_in = self.shape_out = (n,)

    def _forward(self, x):
        out = x.copy()
        n = len(out)
        while n > 1:
            half = n // 2
            even, odd = out[:n:2].copy(), out[1:n:2].copy()
            out[:half] = (even + odd) / np.sqrt(2.0)
            out[half:n] = (even - odd) / np.sqrt(2.0)
            n = half
        return out

    def _adjoint(self, y):
        out = y.copy()
        n = 2
        while n <= len(out):
            half = n // 2
            even = (out[:half] + out[half:n]) / np.sqrt(2.0)
            odd = (out[:half] - out[half:n]) / np.sqrt(2.0)
            merged = np.empty(n)
            merged[0::2], merged[1::2] = even, odd
            out[:n] = merged
            n *= 2
        return out


class Conv1d(LinOp):
    """Circular 1-D convolution with a fixed kernel."""

    def __init__(self, kernel, n):
        super().__init__()
        kernel = np.asarray(kernel, dtype=float)
        if len(kernel) > n:
            raise ValueError("kernel longer than signal")
        padded = np.zeros(n)
        padded[: len(kernel)] = kernel
        self._khat = np.fft.rfft(padded)
        self.shape_in = self.shape_out = (n,)

    def _forward(self, x):
        return np.fft.irfft(self._khat * np.fft.rfft(x), n=len(x))

    def _adjoint(self, y):
        return np.fft.irfft(np.conj(self._khat) * np.fft.rfft(y), n=len(y))


class GaussianEnsemble(Dense):
    """Materialized Gaussian measurement matrix with N(0, 1/m) entries."""

    def __init__(self, m, n, seed=0):
        rng = np.random.default_rng(seed)
        super().__init__(rng.standard_normal((m, n)) / np.sqrt(m))
        self.seed = seed


class EntryMask(LinOp):
    """Matrix-to-matrix observation mask: keeps entries in omega, zeroes the rest.

    Self-adjoint and idempotent. ``omega`` is stored sorted row-major and
    duplicates are rejected.
    """

    def __init__(self, omega, shape):
        super().__init__()
        shape = tuple(shape)
        omega = sorted((int(i), int(j)) for i, j in omega)
        if len(set(omega)) != len(omega):
            raise ValueError("duplicate indices in omega")
        for i, j in omega:
            if not (0 <= i < shape[0] and 0 <= j < shape[1]):
                raise ValueError(f"index {(i, j)} outside shape {shape}")
        self.omega = omega
        self.shape_in = self.shape_out = shape
        self._mask = np.zeros(shape, dtype=bool)
        rows = [i for i, _ in omega]
        cols = [j for _, j in omega]
        self._mask[rows, cols] = True

    def _forward(self, x):
        return np.where(self._mask, x, 0.0)

    _adjoint = _forward


class Compose(LinOp):
    """outer(inner(x)); counts one application per constituent."""

    def __init__(self, outer, inner):
        super().__init__()
        if outer.shape_in != inner.shape_out:
            raise ShapeError(
                f"cannot compose: inner range {inner.shape_out} != "
                f"outer domain {outer.shape_in}"
            )
        self.outer = outer
        self.inner = inner
        self.shape_in = inner.shape_in
        self.shape_out = outer.shape_out

    def forward(self, x):
        return self.outer.forward(self.inner.forward(x))

    def adjoint(self, y):
        return self.inner.adjoint(self.outer.adjoint(y))

    def counter_snapshot(self):
        a, b = self.outer.counter_snapshot(), self.inner.counter_snapshot()
        return OpCounter(a.forward_count + b.forward_count,
                         a.adjoint_count + b.adjoint_count)

    def counter_reset(self):
        self.outer.counter_reset()
        self.inner.counter_reset()


class HStack(LinOp):
    """[B1 B2 ...] acting on concatenated vector inputs."""

    def __init__(self, blocks):
        super().__init__()
        blocks = list(blocks)
        if not blocks:
            raise ValueError("HStack needs at least one block")
        out = blocks[0].shape_out
        for blk in blocks:
            if blk.shape_out != out:
                raise ShapeError("HStack blocks must share the output shape")
            if len(blk.shape_in) != 1:
                raise ShapeError("HStack blocks must take vector inputs")
        self.blocks = blocks
        self._splits = np.cumsum([blk.shape_in[0] for blk in blocks])[:-1]
        self.shape_in = (int(sum(blk.shape_in[0] for blk in blocks)),)
        self.shape_out = out

    def forward(self, x):
        x = self._check(x, self.shape_in, "forward")
        parts = np.split(x, self._splits)
        out = np.zeros(self.shape_out)
        for blk, part in zip(self.blocks, parts):
            out += blk.forward(part)
        return out

    def adjoint(self, y):
        return np.concatenate([blk.adjoint(y) for blk in self.blocks])

    def counter_snapshot(self):
        snaps = [blk.counter_snapshot() for blk in self.blocks]
        return OpCounter(sum(s.forward_count for s in snaps),
                         sum(s.adjoint_count for s in snaps))

    def counter_reset(self):
        for blk in self.blocks:
            blk.counter_reset()
