# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled recurrent kernels; same contract as pylib (see its docstring)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, tanh

cnp.import_array()

BACKEND = "cython"


cdef inline double _sigmoid(double x) noexcept nogil:
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    cdef double e = exp(x)
    return e / (1.0 + e)


def gru_forward(double[:, ::1] X, double[:, ::1] Wz, double[:, ::1] Wr,
                double[:, ::1] Wh, double[:, ::1] Uz, double[:, ::1] Ur,
                double[:, ::1] Uh, double[::1] bz, double[::1] br,
                double[::1] bh):
    cdef Py_ssize_t T = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t h = Wz.shape[0]
    H_arr = np.empty((T, h))
    Z_arr = np.empty((T, h))
    R_arr = np.empty((T, h))
    C_arr = np.empty((T, h))
    prev_arr = np.zeros(h)
    cdef double[:, ::1] H = H_arr
    cdef double[:, ::1] Z = Z_arr
    cdef double[:, ::1] R = R_arr
    cdef double[:, ::1] C = C_arr
    cdef double[::1] prev = prev_arr
    cdef Py_ssize_t t, i, j
    cdef double az, ar, ac

    with nogil:
        for t in range(T):
            for i in range(h):
                az = bz[i]
                ar = br[i]
                for j in range(d):
                    az += Wz[i, j] * X[t, j]
                    ar += Wr[i, j] * X[t, j]
                for j in range(h):
                    az += Uz[i, j] * prev[j]
                    ar += Ur[i, j] * prev[j]
                Z[t, i] = _sigmoid(az)
                R[t, i] = _sigmoid(ar)
            for i in range(h):
                ac = bh[i]
                for j in range(d):
                    ac += Wh[i, j] * X[t, j]
                for j in range(h):
                    ac += Uh[i, j] * (R[t, j] * prev[j])
                C[t, i] = tanh(ac)
            for i in range(h):
                H[t, i] = (1.0 - Z[t, i]) * prev[i] + Z[t, i] * C[t, i]
                prev[i] = H[t, i]
    return H_arr, Z_arr, R_arr, C_arr


def gru_backward(double[:, ::1] X, double[:, ::1] H, double[:, ::1] Z,
                 double[:, ::1] R, double[:, ::1] C, double[:, ::1] Uz,
                 double[:, ::1] Ur, double[:, ::1] Uh, double[:, ::1] dH):
    cdef Py_ssize_t T = X.shape[0]
    cdef Py_ssize_t d = X.shape[1]
    cdef Py_ssize_t h = Uz.shape[0]

    dWz_arr = np.zeros((h, d)); dWr_arr = np.zeros((h, d)); dWh_arr = np.zeros((h, d))
    dUz_arr = np.zeros((h, h)); dUr_arr = np.zeros((h, h)); dUh_arr = np.zeros((h, h))
    dbz_arr = np.zeros(h); dbr_arr = np.zeros(h); dbh_arr = np.zeros(h)
    scratch = np.zeros((6, h))

    cdef double[:, ::1] dWz = dWz_arr
    cdef double[:, ::1] dWr = dWr_arr
    cdef double[:, ::1] dWh = dWh_arr
    cdef double[:, ::1] dUz = dUz_arr
    cdef double[:, ::1] dUr = dUr_arr
    cdef double[:, ::1] dUh = dUh_arr
    cdef double[::1] dbz = dbz_arr
    cdef double[::1] dbr = dbr_arr
    cdef double[::1] dbh = dbh_arr
    cdef double[:, ::1] S = scratch
    # scratch rows: 0 carry, 1 da_z, 2 da_r, 3 da_c, 4 tmp (Uh^T da_c), 5 new carry
    cdef Py_ssize_t t, i, j
    cdef double dh, dz, dc, dr, prev_i, prev_j, z, r, c

    with nogil:
        for i in range(h):
            S[0, i] = 0.0
        for t in range(T - 1, -1, -1):
            for i in range(h):
                prev_i = H[t - 1, i] if t > 0 else 0.0
                z = Z[t, i]
                c = C[t, i]
                dh = dH[t, i] + S[0, i]
                dz = dh * (c - prev_i)
                S[1, i] = dz * z * (1.0 - z)
                dc = dh * z
                S[3, i] = dc * (1.0 - c * c)
                S[5, i] = dh * (1.0 - z)
            for i in range(h):
                S[4, i] = 0.0
                for j in range(h):
                    S[4, i] += Uh[j, i] * S[3, j]
            for i in range(h):
                prev_i = H[t - 1, i] if t > 0 else 0.0
                r = R[t, i]
                dr = S[4, i] * prev_i
                S[2, i] = dr * r * (1.0 - r)
            for i in range(h):
                S[5, i] += S[4, i] * R[t, i]
                for j in range(h):
                    S[5, i] += Uz[j, i] * S[1, j] + Ur[j, i] * S[2, j]
            for i in range(h):
                for j in range(d):
                    dWz[i, j] += S[1, i] * X[t, j]
                    dWr[i, j] += S[2, i] * X[t, j]
                    dWh[i, j] += S[3, i] * X[t, j]
                for j in range(h):
                    prev_j = H[t - 1, j] if t > 0 else 0.0
                    dUz[i, j] += S[1, i] * prev_j
                    dUr[i, j] += S[2, i] * prev_j
                    dUh[i, j] += S[3, i] * (R[t, j] * prev_j)
                dbz[i] += S[1, i]
                dbr[i] += S[2, i]
                dbh[i] += S[3, i]
            for i in range(h):
                S[0, i] = S[5, i]
    return dWz_arr, dWr_arr, dWh_arr, dUz_arr, dUr_arr, dUh_arr, dbz_arr, dbr_arr, dbh_arr
