"""Compiled inner loops for the hedge optimization at many grid nodes.

Every node solves ``min_theta rho[F_i - theta * incr]`` where ``F_i`` holds
the continuation values at the atoms reachable from node ``i``. The search
is the same bracket-then-golden-section scheme as
:func:`riskprice.risk.minimize_convex_1d`, specialized to this objective.
"""

import math

import numpy as np
from numba import njit

INVPHI = (math.sqrt(5.0) - 1.0) / 2.0

OK = 0
DIVERGED = 1
NOT_FINITE = 2


@njit(cache=True, nogil=True)
def node_risk(f_row, theta, incr, logw, mask, alpha):
    best = -np.inf
    n_scen, n_atoms = incr.shape
    for s in range(n_scen):
        top = -np.inf
        for a in range(n_atoms):
            if mask[s, a]:
                z = alpha * (f_row[s, a] - theta * incr[s, a]) + logw[s, a]
                if z > top:
                    top = z
        acc = 0.0
        for a in range(n_atoms):
            if mask[s, a]:
                acc += math.exp(alpha * (f_row[s, a] - theta * incr[s, a]) + logw[s, a] - top)
        v = (top + math.log(acc)) / alpha
        if v > best:
            best = v
    return best


@njit(cache=True, nogil=True)
def _minimize_node(f_row, incr, logw, mask, alpha, start, step, radius, cap, tol, max_iter, out):
    lim = min(radius, cap)
    a = min(max(start, -lim), lim)
    fa = node_risk(f_row, a, incr, logw, mask, alpha)
    b = min(a + step, lim)
    c = max(a - step, -lim)
    fb = node_risk(f_row, b, incr, logw, mask, alpha)
    fc = node_risk(f_row, c, incr, logw, mask, alpha)
    if not (math.isfinite(fa) and math.isfinite(fb) and math.isfinite(fc)):
        return NOT_FINITE
    evals = 3
    lo, hi = c, b
    if fb < fa or fc < fa:
        d = 1.0 if fb < fa else -1.0
        prev, cur = a, (b if d > 0 else c)
        fcur = fb if d > 0 else fc
        s = step
        while True:
            s *= 2.0
            nxt = min(max(cur + d * s, -lim), lim)
            fn = node_risk(f_row, nxt, incr, logw, mask, alpha)
            evals += 1
            if not math.isfinite(fn):
                return NOT_FINITE
            if fn >= fcur:
                lo, hi = min(prev, nxt), max(prev, nxt)
                break
            if abs(nxt) >= lim:
                if lim < radius:
                    return DIVERGED
                lo, hi = min(cur, nxt), max(cur, nxt)
                break
            prev, cur, fcur = cur, nxt, fn
    edge_lo, edge_hi = lo, hi
    x1 = hi - INVPHI * (hi - lo)
    x2 = lo + INVPHI * (hi - lo)
    f1 = node_risk(f_row, x1, incr, logw, mask, alpha)
    f2 = node_risk(f_row, x2, incr, logw, mask, alpha)
    it = 0
    while hi - lo > tol and it < max_iter:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - INVPHI * (hi - lo)
            f1 = node_risk(f_row, x1, incr, logw, mask, alpha)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + INVPHI * (hi - lo)
            f2 = node_risk(f_row, x2, incr, logw, mask, alpha)
        it += 1
    if f1 <= f2:
        theta, value = x1, f1
    else:
        theta, value = x2, f2
    for e in (edge_lo, edge_hi):
        if abs(e) >= radius:
            fe = node_risk(f_row, e, incr, logw, mask, alpha)
            if fe <= value:
                theta, value = e, fe
    out[0] = theta
    out[1] = value
    out[2] = lo
    out[3] = hi
    out[4] = evals + it + 2
    return OK


@njit(cache=True, nogil=True)
def hedge_nodes(F, incr, logw, mask, alpha, start, warm, radius, cap, tol, step, max_iter, thetas, values, brackets, evals):
    """Optimize every node in order; returns ``(status, failing node)``.

    With ``warm`` each node after the first starts from its predecessor's
    optimizer and the initial step scales with the last change in ``theta``.
    """
    out = np.empty(5)
    for i in range(F.shape[0]):
        s0 = step
        t0 = start[i]
        if warm and i > 0:
            t0 = thetas[i - 1]
            if i > 1:
                s0 = max(min(4.0 * abs(thetas[i - 1] - thetas[i - 2]), step), 1e-7)
        status = _minimize_node(F[i], incr, logw, mask, alpha, t0, s0, radius, cap, tol, max_iter, out)
        if status != OK:
            return status, i
        thetas[i] = out[0]
        values[i] = out[1]
        brackets[i, 0] = out[2]
        brackets[i, 1] = out[3]
        evals[i] = int(out[4])
    return OK, -1


@njit(cache=True, nogil=True)
def risk_nodes(F, thetas, incr, logw, mask, alpha, values):
    for i in range(F.shape[0]):
        values[i] = node_risk(F[i], thetas[i], incr, logw, mask, alpha)
