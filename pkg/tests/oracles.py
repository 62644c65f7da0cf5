"""Independent reference solutions used by the tests."""
import math

import numpy as np
from numba import njit


@njit(cache=True)
def _fast_blowup_rhs(u1, u2):
    return -u2 / u1, -u2


@njit(cache=True)
def fast_blowup_rk4(u1, u2, h, t_end):
    """Fixed-step RK4 on du1/dt = -u2/u1, du2/dt = -u2.

    Returns (t, u1, u2) at t_end, or at the first step where u1 leaves
    the positive side (then t is the crossing time to within h).
    """
    t = 0.0
    n = int(math.ceil(t_end / h))
    for _ in range(n):
        a1, b1 = _fast_blowup_rhs(u1, u2)
        a2, b2 = _fast_blowup_rhs(u1 + 0.5 * h * a1, u2 + 0.5 * h * b1)
        a3, b3 = _fast_blowup_rhs(u1 + 0.5 * h * a2, u2 + 0.5 * h * b2)
        a4, b4 = _fast_blowup_rhs(u1 + h * a3, u2 + h * b3)
        n1 = u1 + h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
        n2 = u2 + h / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4)
        if not (n1 > 0.0) or not np.isfinite(n1):
            return t + h, 0.0, n2
        u1, u2 = n1, n2
        t += h
    return t, u1, u2


def fast_blowup_crossing(U0, h=1e-8, t_max=10.0):
    t, _, _ = fast_blowup_rk4(float(U0[0]), float(U0[1]), h, t_max)
    return t
