"""Matrix-free block-row recursive least-squares imaging toolkit.

The package is organised as a small stack:

* :mod:`brlsmig.linop` -- forward/adjoint operator layer with dot-test
  verification;
* :mod:`brlsmig.solver` -- regularized CGLS plus a dense closed-form oracle;
* :mod:`brlsmig.rls` -- explicit recursive least squares, sliding-window
  plans, and the matrix-free block-row windowed solver;
* :mod:`brlsmig.wem` -- 2-D shot-profile split-step modeling/migration
  operator pair;
* :mod:`brlsmig.synth` -- synthetic experiment factory;
* :mod:`brlsmig.metrics` -- misfit / model-error reporting;
* :mod:`brlsmig.gridfile`, :mod:`brlsmig.config`, :mod:`brlsmig.cli` --
  on-disk formats and the command-line front end.
"""

from .linop import (
    BlockRowOperator,
    DenseOperator,
    IdentityOperator,
    LinearOperator,
    dot_test,
    stack_rows,
)
from .solver import CgConfig, CgReport, SingularSystemError, cgls, closed_form_ls
from .rls import (
    BrlsResult,
    DataBlock,
    RlsState,
    WindowPlan,
    brls_solve,
    make_window_plan,
    rls_init,
    rls_update_block,
    rls_update_rank1_mil,
)

__version__ = "0.1.0"

__all__ = [
    "BlockRowOperator",
    "BrlsResult",
    "CgConfig",
    "CgReport",
    "DataBlock",
    "DenseOperator",
    "IdentityOperator",
    "LinearOperator",
    "RlsState",
    "SingularSystemError",
    "WindowPlan",
    "brls_solve",
    "cgls",
    "closed_form_ls",
    "dot_test",
    "make_window_plan",
    "rls_init",
    "rls_update_block",
    "rls_update_rank1_mil",
    "stack_rows",
    "__version__",
]
