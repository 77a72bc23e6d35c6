"""Regularized least-squares solvers.

``cgls`` runs conjugate gradients on the normal equations of

    min_x ||A x - d||^2 + lam * ||x||^2

in factored form: only forward/adjoint applications of ``A`` are used and
``A^T A`` is never materialized.  ``closed_form_ls`` is the dense direct
solve used as an independent oracle in tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .linop import DenseOperator, LinearOperator

__all__ = ["CgConfig", "CgReport", "SingularSystemError", "cgls", "closed_form_ls"]


class SingularSystemError(RuntimeError):
    """Normal matrix is singular; retry with lam > 0 or more rows."""


@dataclass(frozen=True)
class CgConfig:
    """Solver settings.

    ``tolerance`` is relative: iteration stops once the normal-equation
    residual ||A^T (d - A x) - lam x|| falls below ``tolerance`` times the
    reference norm (||A^T d|| unless the caller supplies another).
    """

    max_iterations: int = 200
    tolerance: float = 1e-6
    lam: float = 0.0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if not self.tolerance > 0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")


@dataclass
class CgReport:
    """Per-solve diagnostics.

    ``normal_residual_history`` and ``objective_history`` both include the
    initial value, so their length is ``iterations_run + 1``.
    """

    iterations_run: int = 0
    normal_residual_history: list = field(default_factory=list)
    objective_history: list = field(default_factory=list)
    converged: bool = False


def _validated_vector(v, n: int, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size != n:
        raise ValueError(f"{name} has length {v.size}, expected {n}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite values")
    return v


def cgls(
    op: LinearOperator,
    d,
    config: CgConfig = CgConfig(),
    x0=None,
    precondition=None,
    rtol_reference: float | None = None,
) -> tuple[np.ndarray, CgReport]:
    """Solve min ||A x - d||^2 + lam ||x||^2 by CG on the normal equations.

    Parameters
    ----------
    op : LinearOperator
    d : data vector, length ``op.data_dim``
    config : CgConfig
    x0 : optional warm-start model vector (defaults to zero)
    precondition : optional positive diagonal model-space preconditioner
        ``D``; the solve runs on ``A D`` with ``x = D y`` and ``lam``
        penalizing ``y``.  Default (None) is the identity, which leaves the
        objective exactly as written above.
    rtol_reference : optional norm replacing ||A^T d|| in the stopping
        rule, letting a caller fix one reference across related solves.

    Returns ``(x, report)``.  The objective is non-increasing across
    iterations up to floating-point noise.
    """
    d = _validated_vector(d, op.data_dim, "data vector")
    lam = config.lam

    diag = None
    if precondition is not None:
        diag = _validated_vector(precondition, op.model_dim, "preconditioner")
        if np.any(diag <= 0):
            raise ValueError("preconditioner diagonal must be strictly positive")

    def fwd(v):
        return op.forward(diag * v) if diag is not None else op.forward(v)

    def adj(w):
        out = op.adjoint(w)
        return diag * out if diag is not None else out

    if x0 is None:
        y = np.zeros(op.model_dim)
        cold = True
    else:
        x0 = _validated_vector(x0, op.model_dim, "x0")
        y = x0 / diag if diag is not None else x0.copy()
        cold = not np.any(y)

    if cold:
        r = d.copy()
        s = adj(d)
        ref_default = float(np.linalg.norm(s))
    else:
        r = d - fwd(y)
        s = adj(r) - lam * y
        ref_default = float(np.linalg.norm(adj(d)))

    ref = float(rtol_reference) if rtol_reference is not None else ref_default

    gamma = float(s @ s)
    res_hist = [math.sqrt(gamma)]
    obj_hist = [float(r @ r + lam * (y @ y))]
    converged = res_hist[-1] <= config.tolerance * ref
    iterations = 0
    p = s.copy()

    while not converged and iterations < config.max_iterations and gamma > 0.0:
        q = fwd(p)
        delta = float(q @ q + lam * (p @ p))
        if delta <= 0.0:
            break  # search direction numerically in the null space
        alpha = gamma / delta
        y += alpha * p
        r -= alpha * q
        s = adj(r) - lam * y
        gamma_new = float(s @ s)
        iterations += 1
        res_hist.append(math.sqrt(gamma_new))
        obj_hist.append(float(r @ r + lam * (y @ y)))
        p = s + (gamma_new / gamma) * p
        gamma = gamma_new
        converged = res_hist[-1] <= config.tolerance * ref

    x = diag * y if diag is not None else y
    report = CgReport(
        iterations_run=iterations,
        normal_residual_history=res_hist,
        objective_history=obj_hist,
        converged=converged,
    )
    return x, report


def closed_form_ls(op: DenseOperator, d, lam: float = 0.0) -> np.ndarray:
    """Direct dense solve of (A^T A + lam I) x = A^T d.

    Oracle-grade only: the normal matrix is formed explicitly, so keep
    ``model_dim`` small.  Raises :class:`SingularSystemError` when the
    normal matrix is not positive definite.
    """
    if not isinstance(op, DenseOperator):
        raise TypeError("closed_form_ls requires a DenseOperator")
    d = _validated_vector(d, op.data_dim, "data vector")
    if lam < 0:
        raise ValueError(f"lam must be >= 0, got {lam}")
    a = op.entries
    gram = a.T @ a + lam * np.eye(op.model_dim)
    try:
        np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:
        raise SingularSystemError(
            "normal matrix is singular; retry with lam > 0 or more rows"
        ) from exc
    return np.linalg.solve(gram, a.T @ d)
