"""Select the compiled kernels when available, else the numpy fallback.

Set ``FEKETE_RATE_PURE=1`` in the environment to force the fallback.
"""
import os

from . import _kernels_py

NAME = "python"
_impl = _kernels_py

if os.environ.get("FEKETE_RATE_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on the build
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        NAME = "compiled"

theta1_green0 = _impl.theta1_green0


def psor_sweeps(indptr, indices, data, diag, rhs, upper, order, color_ptr, u, relax, tol,
                max_sweeps):
    """Run colored projected SOR sweeps in place on ``u``.

    Returns
    -------
    (int, float)
        Sweeps performed and the sup-norm of the final update.
    """
    if _impl is _kernels_py:
        return _kernels_py.psor_sweeps(indptr, indices, data, diag, rhs, upper, order, u,
                                       relax, tol, max_sweeps, color_ptr=color_ptr)
    return _impl.psor_sweeps(indptr, indices, data, diag, rhs, upper, order, u, relax, tol,
                             max_sweeps)

torus_pair_sums = _impl.torus_pair_sums
