"""Propagation kernel selection: compiled extension if available, else numpy.

Set the environment variable ``QOCTL_PURE_PYTHON=1`` to force the fallback
(used by the parity tests and the benchmark).
"""

import os

from . import _fallback

if os.environ.get("QOCTL_PURE_PYTHON", "") == "1":
    _impl = _fallback
else:
    try:
        from . import _step as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _fallback

BACKEND = _impl.BACKEND
propagate_pwc_ket = _impl.propagate_pwc_ket
propagate_pwc_dm = _impl.propagate_pwc_dm
krotov_forward_ket = _impl.krotov_forward_ket
krotov_forward_dm = _impl.krotov_forward_dm

expm_hermitian = _fallback.expm_hermitian
