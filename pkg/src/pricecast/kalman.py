"""Linear-Gaussian Kalman filter and fixed-interval smoother.

The filter is the hot loop of model estimation (it runs once per
likelihood evaluation inside the simplex search), so it is written in a
numba-compilable style: preallocated float64 arrays, plain loops, no
Python objects. When numba is unavailable the same code runs as ordinary
numpy, just slower.

Observation noise is a scalar ridge ``h`` (0 by default: all randomness
lives in the state). Missing observations take the prediction step only
and contribute nothing to the log-likelihood.
"""
from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba present in normal installs
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


LOG_2PI = float(np.log(2.0 * np.pi))

# status codes returned by the core loop (numba cannot raise rich errors)
OK = 0
BAD_INNOVATION = 1


@njit(cache=True)
def _filter_core(z, obs, Zmat, T, Q, a0, P0, h, store):
    """One full filtering pass.

    Returns (loglik, status, t_bad, a_pred, P_pred, a_filt, P_filt,
    a_final, P_final). Path arrays have length n when ``store`` is true,
    else a single throwaway row so the fast path allocates almost nothing.
    """
    n = z.shape[0]
    m = a0.shape[0]
    ns = n if store else 1
    a_pred = np.zeros((ns, m))
    P_pred = np.zeros((ns, m, m))
    a_filt = np.zeros((ns, m))
    P_filt = np.zeros((ns, m, m))
    a = a0.copy()
    P = P0.copy()
    eye = np.eye(m)
    ll = 0.0
    for t in range(n):
        a = np.dot(T, a)
        P = np.dot(np.dot(T, P), T.T) + Q
        P = 0.5 * (P + P.T)
        if store:
            a_pred[t] = a
            P_pred[t] = P
        if obs[t]:
            Zr = Zmat[t]
            PZ = np.dot(P, Zr)
            F = np.dot(Zr, PZ) + h
            if not (F > 0.0) or not np.isfinite(F):
                return np.nan, BAD_INNOVATION, t, a_pred, P_pred, a_filt, P_filt, a, P
            v = z[t] - np.dot(Zr, a)
            K = PZ / F
            a = a + K * v
            # Joseph form keeps P symmetric PSD under the zero-noise update
            M = eye - np.outer(K, Zr)
            P = np.dot(np.dot(M, P), M.T) + h * np.outer(K, K)
            P = 0.5 * (P + P.T)
            ll += -0.5 * (LOG_2PI + np.log(F) + v * v / F)
        if store:
            a_filt[t] = a
            P_filt[t] = P
    return ll, OK, -1, a_pred, P_pred, a_filt, P_filt, a, P


def filter_loglik(z, obs, Zmat, T, Q, a0, P0, h=0.0):
    """Log-likelihood only. Returns (loglik, status, t_bad)."""
    ll, status, t_bad, *_ = _filter_core(z, obs, Zmat, T, Q, a0, P0, h, False)
    return ll, status, t_bad


def filter_pass(z, obs, Zmat, T, Q, a0, P0, h=0.0):
    """Filtering pass that keeps the predicted and filtered paths."""
    return _filter_core(z, obs, Zmat, T, Q, a0, P0, h, True)


def smooth(T, a_pred, P_pred, a_filt, P_filt):
    """Rauch-Tung-Striebel fixed-interval smoother.

    Uses a pseudo-inverse for the predicted covariance because zero-noise
    state blocks (static coefficients, noiseless trend or seasonal) drive
    it numerically singular late in the sample.
    """
    n, m = a_filt.shape
    a_sm = a_filt.copy()
    P_sm = P_filt.copy()
    for t in range(n - 2, -1, -1):
        Pp = P_pred[t + 1]
        C = P_filt[t] @ T.T @ np.linalg.pinv(Pp, rcond=1e-12, hermitian=True)
        a_sm[t] = a_filt[t] + C @ (a_sm[t + 1] - a_pred[t + 1])
        P_sm[t] = P_filt[t] + C @ (P_sm[t + 1] - Pp) @ C.T
        P_sm[t] = 0.5 * (P_sm[t] + P_sm[t].T)
    return a_sm, P_sm
