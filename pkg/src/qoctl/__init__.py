"""qoctl: quantum optimal control toolkit.

Library layout:

* :mod:`qoctl.core` -- operators, states, Bloch vectors.
* :mod:`qoctl.dynamics` -- time grids, Schroedinger/GKLS propagators.
* :mod:`qoctl.shapes` -- named field envelope builders.
* :mod:`qoctl.frames` -- rotating frames, RWA, chirped fields.
* :mod:`qoctl.adiabatic` -- dressed frames, counterdiabatic drives, STIRAP.
* :mod:`qoctl.functionals` -- costs and figures of merit.
* :mod:`qoctl.optimize` -- Krotov, GRAPE, gradient-free and hybrid search.
* :mod:`qoctl.controllability` -- Lie-rank and graph controllability tests.
* :mod:`qoctl.scenarios` / :mod:`qoctl.cli` -- config-driven runner.

The hot propagation loops are compiled (Cython) when the extension built;
``qoctl.kernel_backend()`` reports which implementation is active.
"""

from ._kernels import BACKEND as _KERNEL_BACKEND

__version__ = "0.1.0"


def kernel_backend() -> str:
    """Name of the active propagation kernel backend."""
    return _KERNEL_BACKEND
