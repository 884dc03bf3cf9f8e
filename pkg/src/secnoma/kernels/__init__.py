"""Backend dispatch for the hot numeric kernels.

The default backend is numba (@njit loop kernels). Set the environment
variable ``SECNOMA_DISABLE_NUMBA=1`` before import to force the pure-numpy
backend; it is also used automatically when numba is not importable.
``benchmarks/backend_bench.py`` compares the two.
"""

import os

_FLAG = os.environ.get("SECNOMA_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _FLAG in ("1", "true", "yes", "on")

if _DISABLED:
    from . import vec as _impl
    BACKEND = "numpy"
else:
    try:
        from . import loops as _impl
        BACKEND = "numba"
    except ImportError:
        from . import vec as _impl
        BACKEND = "numpy"

sym_eigh = _impl.sym_eigh
logdet2_pd = _impl.logdet2_pd
project_psd = _impl.project_psd
wiretap_objective = _impl.wiretap_objective
wiretap_gradient = _impl.wiretap_gradient
pga_solve = _impl.pga_solve
grid_search = _impl.grid_search
nn_forward = _impl.nn_forward
build_features = _impl.build_features
unpack_pair = _impl.unpack_pair


def available_backends():
    """Name -> module map of importable backends (for benchmarks/tests)."""
    from . import vec
    out = {"numpy": vec}
    try:
        from . import loops
        out["numba"] = loops
    except ImportError:
        pass
    return out
