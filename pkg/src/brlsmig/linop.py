"""Matrix-free linear operators with verified forward/adjoint pairs.

Every operator maps a real model vector of length ``model_dim`` to a real
data vector of length ``data_dim``.  Operators are immutable after
construction: applying one never mutates shared state, so independent
applications are safe from concurrent workers.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "LinearOperator",
    "DenseOperator",
    "IdentityOperator",
    "BlockRowOperator",
    "CorruptedAdjoint",
    "stack_rows",
    "dot_test",
]


class LinearOperator:
    """Base class for a linear map between model space and data space.

    Subclasses implement ``_forward`` and ``_adjoint`` on validated 1-D
    float64 arrays; the public ``forward``/``adjoint`` wrappers add the
    dimension checks.
    """

    def __init__(self, model_dim: int, data_dim: int):
        model_dim = int(model_dim)
        data_dim = int(data_dim)
        if model_dim <= 0 or data_dim <= 0:
            raise ValueError(
                f"operator dimensions must be positive, got {data_dim}x{model_dim}"
            )
        self.model_dim = model_dim
        self.data_dim = data_dim

    @property
    def shape(self) -> tuple[int, int]:
        """(data_dim, model_dim), matrix-style."""
        return (self.data_dim, self.model_dim)

    def _forward(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _adjoint(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def forward(self, x) -> np.ndarray:
        """Apply the operator: returns ``A x``."""
        x = np.asarray(x, dtype=np.float64).ravel()
        if x.size != self.model_dim:
            raise ValueError(
                f"forward: model vector has length {x.size}, "
                f"operator expects {self.model_dim}"
            )
        return self._forward(x)

    def adjoint(self, y) -> np.ndarray:
        """Apply the adjoint: returns ``A^T y``."""
        y = np.asarray(y, dtype=np.float64).ravel()
        if y.size != self.data_dim:
            raise ValueError(
                f"adjoint: data vector has length {y.size}, "
                f"operator expects {self.data_dim}"
            )
        return self._adjoint(y)


class DenseOperator(LinearOperator):
    """Explicit matrix operator.

    ``forward`` is the matrix-vector product with ``entries`` and
    ``adjoint`` the product with its transpose, bit-for-bit consistent
    with the stored double-precision matrix.
    """

    def __init__(self, entries):
        a = np.array(entries, dtype=np.float64, order="C")
        if a.ndim != 2:
            raise ValueError(f"entries must be a 2-D matrix, got shape {a.shape}")
        self.entries = a
        super().__init__(model_dim=a.shape[1], data_dim=a.shape[0])

    def _forward(self, x):
        return self.entries @ x

    def _adjoint(self, y):
        return self.entries.T @ y


class IdentityOperator(LinearOperator):
    def __init__(self, n: int):
        super().__init__(model_dim=n, data_dim=n)

    def _forward(self, x):
        return x.copy()

    def _adjoint(self, y):
        return y.copy()


class BlockRowOperator(LinearOperator):
    """Vertical concatenation of operators sharing one model space.

    Forward stacks the block outputs in list order; adjoint sums the
    block adjoints in the same fixed order, keeping results deterministic.
    """

    def __init__(self, blocks):
        blocks = tuple(blocks)
        if not blocks:
            raise ValueError("stack_rows requires at least one operator")
        m = blocks[0].model_dim
        for i, b in enumerate(blocks):
            if b.model_dim != m:
                raise ValueError(
                    f"stack_rows: block {i} has model_dim {b.model_dim}, expected {m}"
                )
        self.blocks = blocks
        self._offsets = np.concatenate(
            [[0], np.cumsum([b.data_dim for b in blocks])]
        ).astype(int)
        super().__init__(model_dim=m, data_dim=int(self._offsets[-1]))

    def _forward(self, x):
        out = np.empty(self.data_dim)
        for b, lo, hi in zip(self.blocks, self._offsets[:-1], self._offsets[1:]):
            out[lo:hi] = b._forward(x)
        return out

    def _adjoint(self, y):
        acc = np.zeros(self.model_dim)
        for b, lo, hi in zip(self.blocks, self._offsets[:-1], self._offsets[1:]):
            acc += b._adjoint(np.ascontiguousarray(y[lo:hi]))
        return acc

    def block_slice(self, i: int) -> slice:
        """Data-vector slice owned by block ``i``."""
        return slice(int(self._offsets[i]), int(self._offsets[i + 1]))


class CorruptedAdjoint(LinearOperator):
    """Wrapper whose adjoint has one sign flipped.

    Verification aid: a dot test against this operator must fail loudly.
    """

    def __init__(self, op: LinearOperator, component: int = 0):
        self._op = op
        self._component = int(component)
        super().__init__(op.model_dim, op.data_dim)

    def _forward(self, x):
        return self._op._forward(x)

    def _adjoint(self, y):
        out = self._op._adjoint(y)
        out[self._component] = -out[self._component]
        return out


def stack_rows(ops) -> BlockRowOperator:
    """Stack operators block-row-wise; all must share ``model_dim``."""
    return BlockRowOperator(ops)


def dot_test(op: LinearOperator, seed: int) -> tuple[float, float, float]:
    """Adjoint-consistency check for one seeded draw.

    Vectors come from ``numpy.random.default_rng(seed)`` (PCG64): the model
    vector is drawn first, then the data vector, both standard normal, so
    any failure is reproducible from the seed alone.  Returns
    ``(lhs, rhs, relative_error)`` with ``lhs = <A x, y>``,
    ``rhs = <x, A^T y>``.
    """
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(op.model_dim)
    y = rng.standard_normal(op.data_dim)
    lhs = float(np.dot(op.forward(x), y))
    rhs = float(np.dot(x, op.adjoint(y)))
    rel = abs(lhs - rhs) / max(abs(lhs), abs(rhs), np.finfo(np.float64).eps)
    return lhs, rhs, rel
