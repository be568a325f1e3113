"""Small dense matrix algebra for two-qubit XX/phase propagators and their
Taylor jets in the relative angle deviation ``eps``.

All propagators are built in closed form. Qubit 1 is the left Kronecker
factor, so a phase gate on qubit 1 is ``exp(i*phi*sz) (x) I``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
I4 = np.eye(4, dtype=complex)

for _m in (I2, SX, SY, SZ, HADAMARD, I4):
    _m.setflags(write=False)


class ContractError(ValueError):
    """Raised when an operation is called outside its documented contract."""


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with ``a`` acting on qubit 1 (left factor)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != (2, 2) or b.shape != (2, 2):
        raise ContractError(f"kron expects 2x2 factors, got {a.shape} and {b.shape}")
    return np.kron(a, b)


XX = kron(SX, SX)
ZI = kron(SZ, I2)
YX = kron(SY, SX)
XX.setflags(write=False)
ZI.setflags(write=False)
YX.setflags(write=False)


def xx_propagator(theta: float) -> np.ndarray:
    """``exp(i*theta*sx(x)sx) = cos(theta) I + i sin(theta) sx(x)sx``."""
    return math.cos(theta) * I4 + 1j * math.sin(theta) * XX


def phase_gate_q1(phi: float) -> np.ndarray:
    """``exp(i*phi*sz)`` on qubit 1: ``diag(e^{i phi}, e^{i phi}, e^{-i phi}, e^{-i phi})``."""
    p = complex(math.cos(phi), math.sin(phi))
    return np.diag([p, p, p.conjugate(), p.conjugate()])


def shifted_generator(phi: float) -> np.ndarray:
    """``F(-phi) (sx(x)sx) F(phi) = cos(2phi) sx(x)sx + sin(2phi) sy(x)sx``.

    This is the generator of the phase-shifted propagator; it squares to the
    identity.
    """
    return math.cos(2 * phi) * XX + math.sin(2 * phi) * YX


def is_unitary(u: np.ndarray, tol: float = 1e-12) -> bool:
    u = np.asarray(u)
    return bool(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]), "fro") < tol)


@dataclass(frozen=True)
class MatrixJet:
    """Truncated Taylor expansion ``sum_l coeffs[l] (eps - center)**l``.

    ``coeffs[l]`` is the l-th derivative divided by ``l!``.
    """

    center: float
    coeffs: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.coeffs) == 0:
            raise ContractError("a jet needs at least one coefficient")
        for c in self.coeffs:
            if not np.all(np.isfinite(c)):
                raise ContractError("jet coefficients must be finite")

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def constant(cls, m: np.ndarray, center: float, order: int) -> "MatrixJet":
        m = np.asarray(m, dtype=complex)
        return cls(center, (m,) + tuple(np.zeros_like(m) for _ in range(order)))

    def __matmul__(self, other: "MatrixJet") -> "MatrixJet":
        return jet_multiply(self, other)

    def evaluate(self, eps: float) -> np.ndarray:
        """Sum the truncated series at ``eps`` (Horner)."""
        d = eps - self.center
        out = np.array(self.coeffs[-1])
        for c in reversed(self.coeffs[:-1]):
            out = out * d + c
        return out

    def derivative(self, l: int) -> np.ndarray:
        """Raw l-th derivative at the center."""
        return self.coeffs[l] * math.factorial(l)


def jet_multiply(a: MatrixJet, b: MatrixJet) -> MatrixJet:
    """Cauchy product ``a @ b`` truncated at the common order.

    ``a`` is the left matrix factor; the matrix product does not commute.
    """
    if a.center != b.center:
        raise ContractError(f"jet centers differ: {a.center} != {b.center}")
    if a.order != b.order:
        raise ContractError(f"jet orders differ: {a.order} != {b.order}")
    coeffs = []
    for l in range(a.order + 1):
        acc = a.coeffs[0] @ b.coeffs[l]
        for m in range(1, l + 1):
            acc = acc + a.coeffs[m] @ b.coeffs[l - m]
        coeffs.append(acc)
    return MatrixJet(a.center, tuple(coeffs))


def segment_jet(theta_nominal: float, phi: float, center: float, order: int) -> MatrixJet:
    """Jet of ``U_phi(theta_nominal * (1 + eps))`` about ``eps = center``.

    With ``X = F(-phi) XX F(phi)`` and ``X @ X = I`` the derivatives are
    ``d^l/deps^l U = (i*Theta)^l X^l U``, so only ``U`` and ``X @ U`` appear.
    """
    if order < 0:
        raise ContractError("order must be non-negative")
    theta = theta_nominal * (1.0 + center)
    gen = shifted_generator(phi)
    u = math.cos(theta) * I4 + 1j * math.sin(theta) * gen
    xu = gen @ u
    coeffs = []
    scale = 1.0 + 0j
    for l in range(order + 1):
        coeffs.append(scale * (u if l % 2 == 0 else xu))
        scale = scale * 1j * theta_nominal / (l + 1)
    return MatrixJet(float(center), tuple(coeffs))


def pauli_decompose(u: np.ndarray) -> np.ndarray:
    """Coefficients of ``u`` on the basis ``(I, sz(x)I, sx(x)sx, sy(x)sx)``.

    These four operators are orthogonal under the trace inner product, so the
    projection is ``Tr(P^dagger u) / 4``. Everything built from XX and qubit-1
    phase gates lives in their span.
    """
    basis = (I4, ZI, XX, YX)
    return np.array([np.trace(p.conj().T @ u) / 4 for p in basis])


def from_pauli(coeffs: Sequence[complex]) -> np.ndarray:
    return sum(c * p for c, p in zip(coeffs, (I4, ZI, XX, YX)))
