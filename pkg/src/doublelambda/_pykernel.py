"""Pure numpy implementation of the velocity-node kernel."""

import numpy as np

from .densmat import node_response
from .errors import SingularSaturationError


def average_response(params, G1, G3, detunings, weights, mixing=True, per_node=False):
    """Weighted sums of rho_j / G_j and of the mixing kernels over nodes.

    ``detunings`` has shape (n, 4).  Sums run in node order so that results
    are reproducible to rounding.
    """
    O = np.ascontiguousarray(detunings, dtype=float)
    try:
        nr = node_response(params, G1, G3, O[:, 0], O[:, 1], O[:, 2], O[:, 3], mixing=mixing)
    except SingularSaturationError:
        raise
    w = np.asarray(weights, dtype=float)
    lin = nr.lin @ w
    mix = nr.mix @ w
    if per_node:
        return lin, mix, (nr.lin, nr.mix, nr.populations)
    return lin, mix
