"""Selects the compiled velocity-node kernel, falling back to numpy.

Set ``DOUBLELAMBDA_PURE=1`` to force the numpy implementation.
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernel
from .errors import ConfigError, SingularSaturationError, SingularSystemError

try:
    if os.environ.get("DOUBLELAMBDA_PURE"):
        raise ImportError("pure mode requested")
    from . import _ckernel
except ImportError:
    _ckernel = None

BACKEND = "cython" if _ckernel is not None else "numpy"


def _compiled(params, G1, G3, detunings, weights, mixing, per_node):
    out = _ckernel.average_response(
        params.rate_vector(),
        np.ascontiguousarray(params.zero_field_populations(), dtype=float),
        complex(G1),
        complex(G3),
        np.ascontiguousarray(detunings, dtype=float),
        np.ascontiguousarray(weights, dtype=float),
        bool(mixing),
        bool(per_node),
    )
    status = out[2]
    if status == -1:
        raise SingularSaturationError("saturation denominator is not positive")
    if status == -2:
        raise SingularSystemError("second-order population system is singular")
    if per_node:
        return out[0], out[1], out[3]
    return out[0], out[1]


def average_response(params, G1, G3, detunings, weights, *, mixing=True, per_node=False, backend=None):
    """Maxwell-weighted response sums; see :func:`doublelambda._pykernel.average_response`."""
    backend = backend or BACKEND
    if backend == "cython":
        if _ckernel is None:
            raise ImportError("compiled kernel is not available")
        return _compiled(params, G1, G3, detunings, weights, mixing, per_node)
    if backend == "numpy":
        return _pykernel.average_response(params, G1, G3, detunings, weights, mixing, per_node)
    raise ConfigError(f"unknown backend {backend!r}; expected 'cython' or 'numpy'")
