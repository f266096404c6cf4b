"""Trajectory kernel backend selection.

The compiled extension is preferred when it imports cleanly; setting
QSINF_PURE_PYTHON=1 (or a failed build) selects the numpy fallback.  Both
backends implement the same contract with the same RNG streams.
"""

import os

from . import _pure

if os.environ.get("QSINF_PURE_PYTHON", "").strip() in ("1", "true", "yes"):
    _impl = _pure
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _pure

BACKEND = _impl.BACKEND

jump_ensemble = _impl.jump_ensemble
jump_single = _impl.jump_single
first_jump_times = _impl.first_jump_times
diffusion_ensemble = _impl.diffusion_ensemble
diffusion_single = _impl.diffusion_single


def backend_name() -> str:
    return BACKEND
