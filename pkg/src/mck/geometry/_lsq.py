"""Non-negative least squares with an optimality check."""
from __future__ import annotations

import numpy as np
from scipy.optimize import lsq_linear, nnls


def nnls_checked(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    """``min |a x - b|`` over ``x >= 0``; returns ``(x, residual norm)``.

    Some scipy releases return non-optimal points from ``nnls`` together
    with a bogus zero residual. The residual is recomputed here, the KKT
    conditions are checked, and bounded least squares is used as a fallback.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    x, _ = nnls(a, b)
    grad = a.T @ (a @ x - b)
    slack = 1e-9 * (1.0 + float(np.abs(a).max(initial=0.0)) * (1.0 + float(np.abs(b).max(initial=0.0))))
    if (grad < -slack).any() or (np.abs(grad[x > 0]) > slack).any():
        x = lsq_linear(a, b, bounds=(0.0, np.inf), method="bvls").x
    return x, float(np.linalg.norm(a @ x - b))
