"""Numerical hot loops with a numba backend and a pure-numpy fallback.

Backend selection happens once at import via the environment variable
``TGV1D_BACKEND``:

* ``auto`` (default) — use numba if it imports, else fall back to numpy;
* ``numba`` — require numba, raise if unavailable;
* ``numpy`` — force the pure-numpy implementations.

``TGV1D_THREADS`` (integer) caps the numba thread count.  Both
implementations of every kernel are always importable by explicit name
(``*_numpy`` / ``*_numba``) so they can be benchmarked against each other;
the unsuffixed names are bound to the selected backend.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = ["BACKEND", "trig_eval", "pdhg_tgv", "trig_eval_numpy", "pdhg_tgv_numpy"]

_requested = os.environ.get("TGV1D_BACKEND", "auto").strip().lower()
if _requested not in ("auto", "numba", "numpy"):
    raise ValueError(
        f"TGV1D_BACKEND must be 'auto', 'numba' or 'numpy', got {_requested!r}"
    )

_numba = None
if _requested in ("auto", "numba"):
    try:
        import numba as _numba
    except ImportError:
        if _requested == "numba":
            raise ImportError("TGV1D_BACKEND=numba but numba is not importable")

BACKEND = "numba" if _numba is not None else "numpy"

if _numba is not None and os.environ.get("TGV1D_THREADS"):
    _n = max(1, int(os.environ["TGV1D_THREADS"]))
    _numba.set_num_threads(min(_n, _numba.config.NUMBA_NUM_THREADS))


# --------------------------------------------------------------------------
# Trigonometric polynomial evaluation:
#   y_i = sum_j c_j cos(f_j x_i) + s_j sin(f_j x_i) + polyval(poly, x_i)
# with poly coefficients in ascending order.
# --------------------------------------------------------------------------


def trig_eval_numpy(x, freqs, cos_c, sin_c, poly_c):
    y = np.zeros(x.shape[0])
    if poly_c.shape[0]:
        acc = np.full(x.shape[0], poly_c[-1])
        for p in range(poly_c.shape[0] - 2, -1, -1):
            acc = acc * x + poly_c[p]
        y += acc
    if freqs.shape[0]:
        arg = np.multiply.outer(freqs, x)
        y += cos_c @ np.cos(arg) + sin_c @ np.sin(arg)
    return y


# --------------------------------------------------------------------------
# Primal-dual iterations for the discretized denoising problem
#   min_w  alpha * sum_i h_i |d_i - w_i|  +  beta * sum_j |w_{j+1} - w_j|
# with a known optimal value `dual_value`; iterate until the primal objective
# is within `tol` of it.  Returns (w, q, primal, gap, iterations).
# --------------------------------------------------------------------------


def pdhg_tgv_numpy(w0, q0, d, h, alpha, beta, dual_value, tol, max_iter, check_every):
    w = w0.copy()
    q = q0.copy()
    wbar = w.copy()
    n = w.shape[0]
    tau = 0.499
    sigma = 0.499
    thresh = tau * alpha * h
    it = 0
    primal = _primal_numpy(w, d, h, alpha, beta)
    while primal - dual_value > tol and it < max_iter:
        steps = min(check_every, max_iter - it)
        for _ in range(steps):
            q += sigma * np.diff(wbar)
            np.clip(q, -beta, beta, out=q)
            dtq = np.zeros(n)
            dtq[1:] += q
            dtq[:-1] -= q
            z = w - tau * dtq - d
            w_new = d + np.sign(z) * np.maximum(np.abs(z) - thresh, 0.0)
            wbar = 2.0 * w_new - w
            w = w_new
        it += steps
        primal = _primal_numpy(w, d, h, alpha, beta)
    return w, q, primal, primal - dual_value, it


def _primal_numpy(w, d, h, alpha, beta):
    return float(alpha * np.sum(h * np.abs(d - w)) + beta * np.sum(np.abs(np.diff(w))))


if BACKEND == "numba":
    from numba import njit, prange

    @njit(parallel=True, cache=True)
    def trig_eval_numba(x, freqs, cos_c, sin_c, poly_c):
        n = x.shape[0]
        nf = freqs.shape[0]
        npc = poly_c.shape[0]
        out = np.empty(n)
        for i in prange(n):
            xi = x[i]
            acc = 0.0
            for p in range(npc - 1, -1, -1):
                acc = acc * xi + poly_c[p]
            for j in range(nf):
                t = freqs[j] * xi
                acc += cos_c[j] * np.cos(t) + sin_c[j] * np.sin(t)
            out[i] = acc
        return out

    @njit(cache=True)
    def _primal_numba(w, d, h, alpha, beta):
        n = w.shape[0]
        val = 0.0
        for i in range(n):
            val += alpha * h[i] * abs(d[i] - w[i])
        for j in range(n - 1):
            val += beta * abs(w[j + 1] - w[j])
        return val

    @njit(cache=True)
    def pdhg_tgv_numba(w0, q0, d, h, alpha, beta, dual_value, tol, max_iter, check_every):
        w = w0.copy()
        q = q0.copy()
        wbar = w.copy()
        n = w.shape[0]
        tau = 0.499
        sigma = 0.499
        it = 0
        primal = _primal_numba(w, d, h, alpha, beta)
        while primal - dual_value > tol and it < max_iter:
            steps = min(check_every, max_iter - it)
            for _ in range(steps):
                for j in range(n - 1):
                    qj = q[j] + sigma * (wbar[j + 1] - wbar[j])
                    if qj > beta:
                        qj = beta
                    elif qj < -beta:
                        qj = -beta
                    q[j] = qj
                for i in range(n):
                    dtq = 0.0
                    if i >= 1:
                        dtq += q[i - 1]
                    if i <= n - 2:
                        dtq -= q[i]
                    z = w[i] - tau * dtq - d[i]
                    t = tau * alpha * h[i]
                    if z > t:
                        wn = d[i] + z - t
                    elif z < -t:
                        wn = d[i] + z + t
                    else:
                        wn = d[i]
                    wbar[i] = 2.0 * wn - w[i]
                    w[i] = wn
            it += steps
            primal = _primal_numba(w, d, h, alpha, beta)
        return w, q, primal, primal - dual_value, it

    trig_eval = trig_eval_numba
    pdhg_tgv = pdhg_tgv_numba
else:
    trig_eval = trig_eval_numpy
    pdhg_tgv = pdhg_tgv_numpy
