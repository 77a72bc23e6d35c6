"""Recursive least squares: explicit P-matrix recursion and the
matrix-free block-row sliding-window solver.

The explicit path (``rls_init`` / ``rls_update_block`` /
``rls_update_rank1_mil``) carries the inverse normal matrix P densely and
is meant for verification at small scale.  ``brls_solve`` is the
production path: it never forms a normal matrix, sliding a window of data
blocks over the survey and solving each window's unpredicted residual
with warm-started CGLS.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linop import LinearOperator, stack_rows
from .solver import CgConfig, CgReport, SingularSystemError, cgls

__all__ = [
    "RlsState",
    "DataBlock",
    "WindowPlan",
    "BrlsResult",
    "rls_init",
    "rls_update_block",
    "rls_update_rank1_mil",
    "make_window_plan",
    "brls_solve",
]


@dataclass(frozen=True)
class RlsState:
    """Explicit recursion state: inverse normal matrix P and the estimate."""

    p_matrix: np.ndarray
    estimate: np.ndarray
    samples_seen: int


@dataclass(frozen=True)
class DataBlock:
    """One block row of the survey: an operator and its recorded data."""

    block_index: int
    operator: LinearOperator
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64).ravel()
        if data.size != self.operator.data_dim:
            raise ValueError(
                f"block {self.block_index}: data length {data.size} does not "
                f"match operator data_dim {self.operator.data_dim}"
            )
        object.__setattr__(self, "data", data)


@dataclass(frozen=True)
class WindowPlan:
    """Sequence of (start_block, end_block) windows realizing a rank-K slide."""

    q: int
    k: int
    windows: tuple
    total_blocks: int


@dataclass
class BrlsResult:
    """Output of ``brls_solve``: final model plus per-window diagnostics."""

    model: np.ndarray
    window_reports: list
    window_models: list | None = None


def _dense_entries(op) -> np.ndarray:
    entries = getattr(op, "entries", None)
    if entries is None:
        raise TypeError("explicit recursion requires DenseOperator blocks")
    return entries


def _inverse_spd(gram: np.ndarray, what: str) -> np.ndarray:
    try:
        np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(
            f"{what} is singular; supply lam > 0 or more rows"
        ) from exc
    p = np.linalg.inv(gram)
    return (p + p.T) / 2.0  # enforce symmetry against roundoff


def rls_init(a0, d0, lam: float = 0.0) -> RlsState:
    """Batch-solve the first block: P = (A0^T A0 + lam I)^-1, m = P A0^T d0."""
    a = _dense_entries(a0)
    d = np.asarray(d0, dtype=np.float64).ravel()
    if d.size != a.shape[0]:
        raise ValueError(f"d0 has length {d.size}, expected {a.shape[0]}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(d))):
        raise ValueError("rls_init: non-finite values in inputs")
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    gram = a.T @ a + lam * np.eye(a.shape[1])
    p = _inverse_spd(gram, "initial normal matrix")
    return RlsState(p_matrix=p, estimate=p @ (a.T @ d), samples_seen=a.shape[0])


def rls_update_block(state: RlsState, a1, d1) -> RlsState:
    """Fold a new block of rows into the estimate.

    P1 = (P0^-1 + A1^T A1)^-1, then the gain-factor update
    m1 = m0 + P1 A1^T (d1 - A1 m0), which equals the batch solution of the
    combined system.
    """
    a = _dense_entries(a1)
    d = np.asarray(d1, dtype=np.float64).ravel()
    if a.shape[1] != state.estimate.size:
        raise ValueError(
            f"update block has {a.shape[1]} columns, state expects "
            f"{state.estimate.size}"
        )
    if d.size != a.shape[0]:
        raise ValueError(f"d1 has length {d.size}, expected {a.shape[0]}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(d))):
        raise ValueError("rls_update_block: non-finite values in inputs")
    gram = np.linalg.inv(state.p_matrix) + a.T @ a
    p1 = _inverse_spd(gram, "updated normal matrix")
    innovation = d - a @ state.estimate
    estimate = state.estimate + p1 @ (a.T @ innovation)
    return RlsState(
        p_matrix=p1,
        estimate=estimate,
        samples_seen=state.samples_seen + a.shape[0],
    )


def rls_update_rank1_mil(state: RlsState, a_row, d_point: float) -> RlsState:
    """Single-row update via the matrix inversion lemma (Sherman-Morrison).

    No direct inversion: P <- P - (P a a^T P) / (1 + a^T P a), then
    m <- m + (P_new a) (d - a^T m).
    """
    a = np.asarray(a_row, dtype=np.float64).ravel()
    if a.size != state.estimate.size:
        raise ValueError(
            f"a_row has length {a.size}, state expects {state.estimate.size}"
        )
    if not (np.all(np.isfinite(a)) and np.isfinite(d_point)):
        raise ValueError("rls_update_rank1_mil: non-finite values in inputs")
    pa = state.p_matrix @ a
    denom = 1.0 + float(a @ pa)
    if denom <= np.finfo(np.float64).eps:
        raise SingularSystemError(
            f"rank-1 update denominator {denom:.3e} is degenerate"
        )
    p1 = state.p_matrix - np.outer(pa, pa) / denom
    p1 = (p1 + p1.T) / 2.0
    gain = p1 @ a
    estimate = state.estimate + gain * (float(d_point) - float(a @ state.estimate))
    return RlsState(
        p_matrix=p1, estimate=estimate, samples_seen=state.samples_seen + 1
    )


def make_window_plan(total_blocks: int, q: int, k: int) -> WindowPlan:
    """Enumerate sliding windows of length ``q`` advancing by ``k`` blocks.

    Windows start at 0, k, 2k, ... while a full window fits.  If blocks at
    the tail would be left uncovered, one final window is clamped to end at
    ``total_blocks - 1`` (keeping length ``q`` by shifting its start), so
    every block lands in at least one window.
    """
    total_blocks, q, k = int(total_blocks), int(q), int(k)
    if total_blocks < 1:
        raise ValueError(f"total_blocks must be >= 1, got {total_blocks}")
    if not (1 <= k <= q <= total_blocks):
        raise ValueError(
            f"window lengths must satisfy 1 <= k <= q <= total_blocks, "
            f"got q={q}, k={k}, total_blocks={total_blocks}"
        )
    windows = []
    start = 0
    while start + q - 1 <= total_blocks - 1:
        windows.append((start, start + q - 1))
        start += k
    if windows[-1][1] < total_blocks - 1:
        windows.append((total_blocks - q, total_blocks - 1))
    return WindowPlan(q=q, k=k, windows=tuple(windows), total_blocks=total_blocks)


def brls_solve(
    blocks,
    plan: WindowPlan,
    cg: CgConfig = CgConfig(),
    record_history: bool = False,
    warm_start: bool = True,
) -> BrlsResult:
    """Block-row recursive solve over a window plan.

    For each window the block operators are stacked and CGLS solves the
    correction

        min ||A_w dm - (d_w - A_w m_prev)||^2 + lam ||dm||^2

    from a zero start, after which ``m <- m_prev + dm``.  The first window
    sees ``m_prev = 0`` and is a plain windowed least-squares fit.  The
    stopping rule of every window measures the normal residual against
    ||A_w^T d_w|| of the raw window data, so warm and cold runs stop at the
    same accuracy; windows whose operator has no reach (dead traces) leave
    the model unchanged.  With ``warm_start=False`` each window is solved
    from scratch and the previous model is discarded (baseline mode for
    convergence comparisons).
    """
    blocks = list(blocks)
    if len(blocks) != plan.total_blocks:
        raise ValueError(
            f"plan covers {plan.total_blocks} blocks but {len(blocks)} supplied"
        )
    model_dim = blocks[0].operator.model_dim
    for b in blocks:
        if b.operator.model_dim != model_dim:
            raise ValueError(
                f"block {b.block_index} has model_dim {b.operator.model_dim}, "
                f"expected {model_dim}"
            )

    m = np.zeros(model_dim)
    reports: list[CgReport] = []
    models: list[np.ndarray] | None = [] if record_history else None

    for w_index, (lo, hi) in enumerate(plan.windows):
        window = blocks[lo : hi + 1]
        a_win = stack_rows([b.operator for b in window])
        d_win = np.concatenate([b.data for b in window])
        ref = float(np.linalg.norm(a_win.adjoint(d_win)))

        if warm_start:
            residual = d_win - a_win.forward(m)
            delta, report = cgls(a_win, residual, cg, rtol_reference=ref)
            m = m + delta
        else:
            m, report = cgls(a_win, d_win, cg, rtol_reference=ref)

        if not np.all(np.isfinite(m)):
            raise FloatingPointError(
                f"window {w_index} (blocks {lo}..{hi}): solver produced "
                f"non-finite model"
            )
        reports.append(report)
        if models is not None:
            models.append(m.copy())

    return BrlsResult(model=m, window_reports=reports, window_models=models)
