"""Pure numpy implementation of the recurrent kernels.

Gate convention for one direction, input rows x_t (d,) and hidden size h:

    z_t = sigmoid(Wz x_t + Uz h_{t-1} + bz)          update gate
    r_t = sigmoid(Wr x_t + Ur h_{t-1} + br)          reset gate
    c_t = tanh(Wh x_t + Uh (r_t * h_{t-1}) + bh)     candidate state
    h_t = (1 - z_t) * h_{t-1} + z_t * c_t

with h_{-1} = 0. The compiled backend (cylib) implements the same functions;
results agree to floating-point noise, not bitwise (BLAS sums in a different
order than scalar loops).
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def gru_forward(X, Wz, Wr, Wh, Uz, Ur, Uh, bz, br, bh):
    """Run one direction over the rows of X (T, d).

    Returns (H, Z, R, C), each (T, h): hidden states and gate activations
    needed by the backward pass.
    """
    T = X.shape[0]
    h = Wz.shape[0]
    H = np.empty((T, h))
    Z = np.empty((T, h))
    R = np.empty((T, h))
    C = np.empty((T, h))
    prev = np.zeros(h)
    for t in range(T):
        x = X[t]
        z = _sigmoid(Wz @ x + Uz @ prev + bz)
        r = _sigmoid(Wr @ x + Ur @ prev + br)
        c = np.tanh(Wh @ x + Uh @ (r * prev) + bh)
        prev = (1.0 - z) * prev + z * c
        H[t] = prev
        Z[t] = z
        R[t] = r
        C[t] = c
    return H, Z, R, C


def gru_backward(X, H, Z, R, C, Uz, Ur, Uh, dH):
    """Backpropagate dH (T, h), the loss gradient injected at every hidden
    state, through the recurrence. Returns parameter gradients
    (dWz, dWr, dWh, dUz, dUr, dUh, dbz, dbr, dbh). Gradients with respect to
    the inputs X are not needed (the embedder is not trained through the
    head) and are not computed.
    """
    T, d = X.shape
    h = Uz.shape[0]
    dWz = np.zeros((h, d))
    dWr = np.zeros((h, d))
    dWh = np.zeros((h, d))
    dUz = np.zeros((h, h))
    dUr = np.zeros((h, h))
    dUh = np.zeros((h, h))
    dbz = np.zeros(h)
    dbr = np.zeros(h)
    dbh = np.zeros(h)

    carry = np.zeros(h)
    for t in range(T - 1, -1, -1):
        prev = H[t - 1] if t > 0 else np.zeros(h)
        z, r, c = Z[t], R[t], C[t]
        dh = dH[t] + carry

        dz = dh * (c - prev)
        da_z = dz * z * (1.0 - z)
        dc = dh * z
        da_c = dc * (1.0 - c * c)
        tmp = Uh.T @ da_c
        dr = tmp * prev
        da_r = dr * r * (1.0 - r)

        carry = dh * (1.0 - z) + tmp * r + Uz.T @ da_z + Ur.T @ da_r

        x = X[t]
        dWz += np.outer(da_z, x)
        dWr += np.outer(da_r, x)
        dWh += np.outer(da_c, x)
        dUz += np.outer(da_z, prev)
        dUr += np.outer(da_r, prev)
        dUh += np.outer(da_c, r * prev)
        dbz += da_z
        dbr += da_r
        dbh += da_c
    return dWz, dWr, dWh, dUz, dUr, dUh, dbz, dbr, dbh
