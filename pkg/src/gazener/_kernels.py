"""Compiled inner loops for the recurrent and CRF layers.

Arrays passed in must be C-contiguous float64 (int64 for label paths).
"""
import numpy as np
from numba import njit


@njit(cache=True)
def _sig(x):
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


@njit(cache=True)
def lstm_forward(X, W, U, b, mask):
    """X (K,T,N,D); W (K,D,4H); U (K,H,4H); b (K,4H); mask (T,N).

    Returns hidden states (K,T,N,H) and the per-step cache needed by
    ``lstm_backward``: previous h and c, gate activations and tanh(c).
    """
    K, T, N, D = X.shape
    H = U.shape[1]
    hs = np.zeros((K, T, N, H))
    h_prev = np.zeros((K, T, N, H))
    c_prev = np.zeros((K, T, N, H))
    gates = np.zeros((K, T, N, 4 * H))
    tcs = np.zeros((K, T, N, H))
    for k in range(K):
        xp = np.dot(X[k].reshape(T * N, D), W[k]).reshape(T, N, 4 * H)
        h = np.zeros((N, H))
        c = np.zeros((N, H))
        for t in range(T):
            z = np.dot(h, U[k])
            for n in range(N):
                m = mask[t, n]
                for j in range(H):
                    h_prev[k, t, n, j] = h[n, j]
                    c_prev[k, t, n, j] = c[n, j]
                    gi = _sig(xp[t, n, j] + z[n, j] + b[k, j])
                    gf = _sig(xp[t, n, H + j] + z[n, H + j] + b[k, H + j])
                    go = _sig(xp[t, n, 2 * H + j] + z[n, 2 * H + j] + b[k, 2 * H + j])
                    gg = np.tanh(xp[t, n, 3 * H + j] + z[n, 3 * H + j] + b[k, 3 * H + j])
                    cn = gf * c[n, j] + gi * gg
                    tc = np.tanh(cn)
                    gates[k, t, n, j] = gi
                    gates[k, t, n, H + j] = gf
                    gates[k, t, n, 2 * H + j] = go
                    gates[k, t, n, 3 * H + j] = gg
                    tcs[k, t, n, j] = tc
                    if m != 0.0:
                        c[n, j] = cn
                        h[n, j] = go * tc
                    hs[k, t, n, j] = h[n, j]
    return hs, h_prev, c_prev, gates, tcs


@njit(cache=True)
def lstm_backward(dH, X, W, U, mask, h_prev, c_prev, gates, tcs):
    K, T, N, D = X.shape
    H = U.shape[1]
    dX = np.zeros((K, T, N, D))
    dW = np.zeros((K, D, 4 * H))
    dU = np.zeros((K, H, 4 * H))
    db = np.zeros((K, 4 * H))
    for k in range(K):
        dxp = np.zeros((T, N, 4 * H))
        dh_next = np.zeros((N, H))
        dc_next = np.zeros((N, H))
        Ut = np.ascontiguousarray(U[k].T)
        for t in range(T - 1, -1, -1):
            dz = np.zeros((N, 4 * H))
            carry_h = np.zeros((N, H))
            for n in range(N):
                m = mask[t, n]
                for j in range(H):
                    dh = dH[k, t, n, j] + dh_next[n, j]
                    dc = dc_next[n, j]
                    if m == 0.0:
                        carry_h[n, j] = dh
                        dc_next[n, j] = dc
                        continue
                    gi = gates[k, t, n, j]
                    gf = gates[k, t, n, H + j]
                    go = gates[k, t, n, 2 * H + j]
                    gg = gates[k, t, n, 3 * H + j]
                    tc = tcs[k, t, n, j]
                    dc = dc + dh * go * (1.0 - tc * tc)
                    dz[n, j] = dc * gg * gi * (1.0 - gi)
                    dz[n, H + j] = dc * c_prev[k, t, n, j] * gf * (1.0 - gf)
                    dz[n, 2 * H + j] = dh * tc * go * (1.0 - go)
                    dz[n, 3 * H + j] = dc * gi * (1.0 - gg * gg)
                    dc_next[n, j] = dc * gf
            dU[k] += np.dot(np.ascontiguousarray(h_prev[k, t].T), dz)
            dh_next = np.dot(dz, Ut) + carry_h
            dxp[t] = dz
        flat = dxp.reshape(T * N, 4 * H)
        dW[k] = np.dot(np.ascontiguousarray(X[k].reshape(T * N, D).T), flat)
        for r in range(T * N):
            for j in range(4 * H):
                db[k, j] += flat[r, j]
        dX[k] = np.dot(flat, np.ascontiguousarray(W[k].T)).reshape(T, N, D)
    return dX, dW, dU, db


@njit(cache=True)
def _lse(v):
    m = v.max()
    if not np.isfinite(m):
        m = 0.0
    s = 0.0
    for x in v:
        s += np.exp(x - m)
    return np.log(s) + m


@njit(cache=True)
def crf_forward(E, Tr, start):
    n, L = E.shape
    alpha = np.empty((n, L))
    tmp = np.empty(L)
    for y in range(L):
        alpha[0, y] = start[y] + E[0, y]
    for t in range(1, n):
        for y in range(L):
            for yp in range(L):
                tmp[yp] = alpha[t - 1, yp] + Tr[yp, y]
            alpha[t, y] = _lse(tmp) + E[t, y]
    return alpha


@njit(cache=True)
def crf_backward(E, Tr, stop):
    n, L = E.shape
    beta = np.empty((n, L))
    tmp = np.empty(L)
    for y in range(L):
        beta[n - 1, y] = stop[y]
    for t in range(n - 2, -1, -1):
        for y in range(L):
            for yn in range(L):
                tmp[yn] = Tr[y, yn] + E[t + 1, yn] + beta[t + 1, yn]
            beta[t, y] = _lse(tmp)
    return beta


@njit(cache=True)
def crf_pair_marginals(E, Tr, alpha, beta, log_z):
    n, L = E.shape
    pair = np.zeros((L, L))
    for t in range(1, n):
        for a in range(L):
            for b in range(L):
                pair[a, b] += np.exp(alpha[t - 1, a] + Tr[a, b] + E[t, b] + beta[t, b] - log_z)
    return pair


@njit(cache=True)
def viterbi(E, Tr, start, stop):
    """Best path; strict '>' comparisons give ties to the lowest label index."""
    n, L = E.shape
    delta = np.empty(L)
    new = np.empty(L)
    back = np.zeros((n, L), dtype=np.int64)
    for y in range(L):
        delta[y] = start[y] + E[0, y]
    for t in range(1, n):
        for y in range(L):
            best = 0
            score = delta[0] + Tr[0, y]
            for yp in range(1, L):
                s = delta[yp] + Tr[yp, y]
                if s > score:
                    score = s
                    best = yp
            back[t, y] = best
            new[y] = score + E[t, y]
        delta[:] = new
    best = 0
    score = delta[0] + stop[0]
    for y in range(1, L):
        if delta[y] + stop[y] > score:
            score = delta[y] + stop[y]
            best = y
    path = np.empty(n, dtype=np.int64)
    path[n - 1] = best
    for t in range(n - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path, score


@njit(cache=True)
def scatter_add(target, ids, rows):
    for r in range(ids.shape[0]):
        i = ids[r]
        for j in range(rows.shape[1]):
            target[i, j] += rows[r, j]
