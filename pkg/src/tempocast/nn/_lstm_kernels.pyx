# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled LSTM sequence kernels.

Same contract as the numpy fallback in _lstm_numpy.py: stacked gate weights
(forget, input, candidate, output) over the concatenated [h_prev, x_t].
The time-step loop and pointwise gate math run in C; the dense products go
through BLAS dgemm.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, tanh
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

ACT_TANH = 0
ACT_SOFTSIGN = 1


cdef inline double _sigmoid(double x) noexcept nogil:
    cdef double e
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


cdef void _mm(int m, int n, int k, double* A, double* B, double* C, double beta) noexcept nogil:
    # row-major C (m, n) = A (m, k) @ B (k, n) + beta * C
    cdef char nt = b'N'
    cdef double one = 1.0
    dgemm(&nt, &nt, &n, &m, &k, &one, B, &n, A, &k, &beta, C, &n)


cdef void _mm_at_b(int m, int n, int k, double* A, double* B, double* C, double beta) noexcept nogil:
    # row-major C (m, n) = A.T @ B + beta * C, with A (k, m) and B (k, n)
    cdef char nt = b'N'
    cdef char tt = b'T'
    cdef double one = 1.0
    dgemm(&nt, &tt, &n, &m, &k, &one, B, &n, A, &m, &beta, C, &n)


def lstm_seq_forward(X, W, b, int act_id):
    """X (B, L, D), W (4U, U+D), b (4U,) -> (h_last (B, U), cache)."""
    cdef double[:, :, ::1] Xv = np.ascontiguousarray(X, dtype=np.float64)
    cdef double[:, ::1] WTv = np.ascontiguousarray(np.asarray(W, dtype=np.float64).T)
    cdef double[::1] bv = np.ascontiguousarray(b, dtype=np.float64)

    cdef int B = Xv.shape[0]
    cdef int L = Xv.shape[1]
    cdef int D = Xv.shape[2]
    cdef int U4 = WTv.shape[1]
    cdef int U = U4 // 4
    cdef int Zd = U + D

    Z_arr = np.empty((L, B, Zd))
    F_arr = np.empty((L, B, U))
    I_arr = np.empty((L, B, U))
    G_arr = np.empty((L, B, U))
    O_arr = np.empty((L, B, U))
    C_arr = np.empty((L, B, U))
    A_arr = np.empty((L, B, U))
    h_arr = np.zeros((B, U))
    c_arr = np.zeros((B, U))
    pre_arr = np.empty((B, U4))

    cdef double[:, :, ::1] Z = Z_arr
    cdef double[:, :, ::1] Fg = F_arr
    cdef double[:, :, ::1] Ig = I_arr
    cdef double[:, :, ::1] Gg = G_arr
    cdef double[:, :, ::1] Og = O_arr
    cdef double[:, :, ::1] Cc = C_arr
    cdef double[:, :, ::1] Aa = A_arr
    cdef double[:, ::1] h = h_arr
    cdef double[:, ::1] c = c_arr
    cdef double[:, ::1] pre = pre_arr

    cdef int t, bi, u, d
    cdef double f, i_, g, o, cv, a

    with nogil:
        for t in range(L):
            for bi in range(B):
                for u in range(U):
                    Z[t, bi, u] = h[bi, u]
                for d in range(D):
                    Z[t, bi, U + d] = Xv[bi, t, d]
            _mm(B, U4, Zd, &Z[t, 0, 0], &WTv[0, 0], &pre[0, 0], 0.0)
            for bi in range(B):
                for u in range(U):
                    f = _sigmoid(pre[bi, u] + bv[u])
                    i_ = _sigmoid(pre[bi, U + u] + bv[U + u])
                    g = tanh(pre[bi, 2 * U + u] + bv[2 * U + u])
                    o = _sigmoid(pre[bi, 3 * U + u] + bv[3 * U + u])
                    cv = f * c[bi, u] + i_ * g
                    if act_id == 0:
                        a = tanh(cv)
                    else:
                        a = cv / (1.0 + fabs(cv))
                    c[bi, u] = cv
                    h[bi, u] = o * a
                    Fg[t, bi, u] = f
                    Ig[t, bi, u] = i_
                    Gg[t, bi, u] = g
                    Og[t, bi, u] = o
                    Cc[t, bi, u] = cv
                    Aa[t, bi, u] = a

    return h_arr, (Z_arr, F_arr, I_arr, G_arr, O_arr, C_arr, A_arr)


def lstm_seq_backward(cache, W, int act_id, dh_last):
    """Backpropagation through time; returns (dW, db) for the stacked gates."""
    Z_arr, F_arr, I_arr, G_arr, O_arr, C_arr, A_arr = cache
    cdef double[:, :, ::1] Z = Z_arr
    cdef double[:, :, ::1] Fg = F_arr
    cdef double[:, :, ::1] Ig = I_arr
    cdef double[:, :, ::1] Gg = G_arr
    cdef double[:, :, ::1] Og = O_arr
    cdef double[:, :, ::1] Cc = C_arr
    cdef double[:, :, ::1] Aa = A_arr
    cdef double[:, ::1] Wv = np.ascontiguousarray(W, dtype=np.float64)

    cdef int L = Z.shape[0]
    cdef int B = Z.shape[1]
    cdef int Zd = Z.shape[2]
    cdef int U = Fg.shape[2]
    cdef int U4 = 4 * U

    dW_arr = np.zeros((U4, Zd))
    db_arr = np.zeros(U4)
    dh_arr = np.array(dh_last, dtype=np.float64, copy=True)
    dc_arr = np.zeros((B, U))
    dpre_arr = np.empty((B, U4))
    dz_arr = np.empty((B, Zd))

    cdef double[:, ::1] dW = dW_arr
    cdef double[::1] db = db_arr
    cdef double[:, ::1] dh = dh_arr
    cdef double[:, ::1] dc = dc_arr
    cdef double[:, ::1] dpre = dpre_arr
    cdef double[:, ::1] dz = dz_arr

    cdef int t, bi, u
    cdef double f, i_, g, o, cv, a, do, da, dcv, cprev, denom, df, di, dg

    with nogil:
        for t in range(L - 1, -1, -1):
            for bi in range(B):
                for u in range(U):
                    f = Fg[t, bi, u]
                    i_ = Ig[t, bi, u]
                    g = Gg[t, bi, u]
                    o = Og[t, bi, u]
                    cv = Cc[t, bi, u]
                    a = Aa[t, bi, u]
                    do = dh[bi, u] * a
                    da = dh[bi, u] * o
                    if act_id == 0:
                        dcv = dc[bi, u] + da * (1.0 - a * a)
                    else:
                        denom = 1.0 + fabs(cv)
                        dcv = dc[bi, u] + da / (denom * denom)
                    if t > 0:
                        cprev = Cc[t - 1, bi, u]
                    else:
                        cprev = 0.0
                    df = dcv * cprev
                    di = dcv * g
                    dg = dcv * i_
                    dc[bi, u] = dcv * f
                    dpre[bi, u] = df * f * (1.0 - f)
                    dpre[bi, U + u] = di * i_ * (1.0 - i_)
                    dpre[bi, 2 * U + u] = dg * (1.0 - g * g)
                    dpre[bi, 3 * U + u] = do * o * (1.0 - o)
            _mm_at_b(U4, Zd, B, &dpre[0, 0], &Z[t, 0, 0], &dW[0, 0], 1.0)
            for bi in range(B):
                for u in range(U4):
                    db[u] += dpre[bi, u]
            _mm(B, Zd, U4, &dpre[0, 0], &Wv[0, 0], &dz[0, 0], 0.0)
            for bi in range(B):
                for u in range(U):
                    dh[bi, u] = dz[bi, u]

    return dW_arr, db_arr
