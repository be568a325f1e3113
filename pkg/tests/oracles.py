"""Independent reference computations used by the tests.

Nothing here imports the closed forms under test; everything is built from
raw Pauli matrices and generic numerics.
"""

import math

import numpy as np

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def kron_loops(a, b):
    """Kronecker product written out index by index."""
    out = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            for k in range(2):
                for l in range(2):
                    out[2 * i + k, 2 * j + l] = a[i, j] * b[k, l]
    return out


def expm_series(a, terms=30):
    """Matrix exponential by scaling and squaring of a truncated Taylor series."""
    a = np.asarray(a, dtype=complex)
    norm = np.linalg.norm(a, 1)
    s = max(0, int(math.ceil(math.log2(norm))) + 1) if norm > 0 else 0
    b = a / 2 ** s
    term = np.eye(len(a), dtype=complex)
    out = term.copy()
    for k in range(1, terms):
        term = term @ b / k
        out = out + term
    for _ in range(s):
        out = out @ out
    return out


def xx_oracle(theta):
    return expm_series(1j * theta * kron_loops(SX, SX))


def phase_oracle(phi):
    return kron_loops(expm_series(1j * phi * SZ), I2)


def composite_oracle(angles, phases, eps):
    """Product of F(-phi) U(theta) F(phi) factors, segment 1 rightmost, via expm."""
    u = np.eye(4, dtype=complex)
    for theta, phi in zip(angles, phases):
        seg = phase_oracle(-phi) @ xx_oracle(theta * (1 + eps)) @ phase_oracle(phi)
        u = seg @ u
    return u


def richardson(f, x, order, h=1e-2, levels=4):
    """Taylor coefficient f^(order)(x)/order! of a matrix function by central
    differences and Richardson extrapolation."""

    def central(step):
        return sum((-1) ** k * math.comb(order, k) * f(x + (order / 2 - k) * step)
                   for k in range(order + 1)) / step ** order

    table = [central(h / 2 ** i) for i in range(levels)]
    for j in range(1, levels):
        table = [(4 ** j * table[i + 1] - table[i]) / (4 ** j - 1) for i in range(len(table) - 1)]
    return table[0] / math.factorial(order)
