"""Pure-numpy fallback for the batched port-current solver.

Semantics match ``_native``: per candidate, delete the off-switch
rows/columns and solve the reduced on-switch system exactly. Candidates
whose subsystem is singular (or whose solution is non-finite) are flagged
instead of raising, so optimizers can treat them as infeasible.
"""

import numpy as np


def batch_port_currents(z_pp, z_pa, bits):
    """Solve port currents for a batch of coders with unit antenna current.

    Parameters
    ----------
    z_pp : (Q, Q) complex ndarray
    z_pa : (Q,) complex ndarray
    bits : (n, Q) uint8 ndarray of switch states (0 = on, 1 = off)

    Returns
    -------
    currents : (n, Q+1) complex ndarray, column 0 fixed to 1
    ok : (n,) bool ndarray, False where the on-subsystem solve failed
    """
    n, q = bits.shape
    currents = np.zeros((n, q + 1), dtype=np.complex128)
    currents[:, 0] = 1.0
    ok = np.ones(n, dtype=bool)
    for r in range(n):
        on = np.flatnonzero(bits[r] == 0)
        if on.size == 0:
            continue
        sub = z_pp[np.ix_(on, on)]
        try:
            sol = np.linalg.solve(sub, -z_pa[on])
        except np.linalg.LinAlgError:
            ok[r] = False
            continue
        if not np.all(np.isfinite(sol)):
            ok[r] = False
            continue
        currents[r, on + 1] = sol
    return currents, ok
