"""Fidelity profiles against the nominal XX gate and against the identity,
plus FWHM and cross-talk metrics and CSV export."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .matcore import ContractError, pauli_decompose, xx_propagator
from .sequence import CompositeSequence, composite_propagator

DEFAULT_EPS_RANGE = (-1.5, 1.5)
DEFAULT_SAMPLES = 3001


def _infidelity(u: np.ndarray) -> float:
    """``1 - |Tr u|/4`` for a unitary in span{I, ZI, XX, YX}, without cancellation.

    With ``u = a I + b ZI + c XX + d YX`` unitarity gives
    ``|a|^2 + |b|^2 + |c|^2 + |d|^2 = 1``, so ``1 - |a| = (|b|^2+|c|^2+|d|^2)/(1+|a|)``.
    """
    a, b, c, d = pauli_decompose(u)
    rest = abs(b) ** 2 + abs(c) ** 2 + abs(d) ** 2
    return rest / (1 + abs(a))


def target_infidelity(seq: CompositeSequence, eps: float) -> float:
    u = xx_propagator(seq.target_angle).conj().T @ composite_propagator(seq, eps)
    return _infidelity(u)


def identity_infidelity(seq: CompositeSequence, eps: float) -> float:
    return _infidelity(composite_propagator(seq, eps))


def fidelity_to_target(seq: CompositeSequence, eps: float) -> float:
    """``|Tr[U(Theta)^dag U_N(Theta(1+eps))]| / 4`` against the nominal gate."""
    u = composite_propagator(seq, eps)
    return float(abs(np.trace(xx_propagator(seq.target_angle).conj().T @ u)) / 4)


def fidelity_to_identity(seq: CompositeSequence, eps: float) -> float:
    return float(abs(np.trace(composite_propagator(seq, eps))) / 4)


@dataclass(frozen=True)
class FidelityProfile:
    eps_grid: np.ndarray
    f_target: np.ndarray
    f_identity: np.ndarray
    sequence: CompositeSequence | None = None

    def __post_init__(self):
        n = len(self.eps_grid)
        if len(self.f_target) != n or len(self.f_identity) != n:
            raise ContractError("profile columns differ in length")
        if n > 1 and np.any(np.diff(self.eps_grid) <= 0):
            raise ContractError("eps grid must be strictly increasing")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epsilon", "f_target", "f_identity"])
        for row in zip(self.eps_grid, self.f_target, self.f_identity):
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "FidelityProfile":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0] != ["epsilon", "f_target", "f_identity"]:
            raise ContractError("unexpected CSV header")
        data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float).reshape(-1, 3)
        return cls(data[:, 0], data[:, 1], data[:, 2])


def _fmt(x: float) -> str:
    s = f"{x:.12g}"
    return "0" if s == "-0" else s


def profile(seq: CompositeSequence, eps_min: float = DEFAULT_EPS_RANGE[0],
            eps_max: float = DEFAULT_EPS_RANGE[1], samples: int = DEFAULT_SAMPLES) -> FidelityProfile:
    """Evaluate both fidelities on a uniform grid including the endpoints."""
    if samples < 2:
        raise ContractError(f"need at least 2 samples, got {samples}")
    if not eps_min < eps_max:
        raise ContractError(f"eps_min must be below eps_max ({eps_min} >= {eps_max})")
    grid = np.linspace(eps_min, eps_max, samples)
    target_dag = xx_propagator(seq.target_angle).conj().T
    ft = np.empty(samples)
    fi = np.empty(samples)
    for k, e in enumerate(grid):
        u = composite_propagator(seq, float(e))
        ft[k] = abs(np.trace(target_dag @ u)) / 4
        fi[k] = abs(np.trace(u)) / 4
    return FidelityProfile(grid, ft, fi, seq)


class FwhmUndefined(ArithmeticError):
    """The half level is not crossed on both sides of the peak within the grid."""


def wing_floor(target_angle: float) -> float:
    """Asymptotic fidelity-to-target once the composite has become the identity."""
    return abs(math.cos(target_angle))


def _crossing(x0, y0, x1, y1, level):
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0)


def fwhm(p: FidelityProfile, floor: float | None = None) -> float:
    """Width of the central ``f_target`` peak at half height above the wing floor.

    The level is ``(peak + floor) / 2`` with ``peak`` taken at the grid point
    nearest ``eps = 0`` and ``floor = |cos Theta|`` by default. Crossings on each
    side of the peak are linearly interpolated; raises :class:`FwhmUndefined`
    if either side never drops below the level.
    """
    x, y = np.asarray(p.eps_grid), np.asarray(p.f_target)
    if floor is None:
        if p.sequence is None:
            raise ContractError("floor must be given for a profile without a sequence")
        floor = wing_floor(p.sequence.target_angle)
    i0 = int(np.argmin(np.abs(x)))
    level = (y[i0] + floor) / 2
    if not y[i0] > level:
        raise FwhmUndefined("peak does not rise above the floor")
    right = left = None
    for k in range(i0, len(x) - 1):
        if y[k + 1] <= level:
            right = _crossing(x[k], y[k], x[k + 1], y[k + 1], level)
            break
    for k in range(i0, 0, -1):
        if y[k - 1] <= level:
            left = _crossing(x[k], y[k], x[k - 1], y[k - 1], level)
            break
    if left is None or right is None:
        raise FwhmUndefined(f"half level {level:.6g} not crossed on both sides")
    return float(right - left)


def crosstalk_metric(p: FidelityProfile, band_lo: float, band_hi: float) -> float:
    """Worst fidelity-to-identity over the grid points inside ``[band_lo, band_hi]``."""
    x = np.asarray(p.eps_grid)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(x))))
    mask = (x >= band_lo - tol) & (x <= band_hi + tol)
    if not mask.any():
        raise ContractError(f"no grid points in band [{band_lo}, {band_hi}]")
    return float(np.min(np.asarray(p.f_identity)[mask]))


@dataclass(frozen=True)
class ProfileMetrics:
    fwhm: float | None
    peak_eps: float
    crosstalk_band: tuple[float, float]
    crosstalk_min_identity_fidelity: float


def metrics(p: FidelityProfile, band: tuple[float, float] = (-1.0, -0.5)) -> ProfileMetrics:
    try:
        width = fwhm(p)
    except FwhmUndefined:
        width = None
    peak = float(p.eps_grid[int(np.argmax(p.f_target))])
    return ProfileMetrics(width, peak, band, crosstalk_metric(p, *band))


def richardson_derivative(f: Callable[[float], float], x: float, order: int, h: float = 1e-3,
                          levels: int = 3) -> float:
    """``order``-th derivative by central differences at steps ``h, h/2, ...``
    combined with Richardson extrapolation (error expansion in ``h**2``)."""
    def central(step):
        # stencil on half-integer offsets for odd orders keeps it centered
        return sum((-1) ** k * math.comb(order, k) * f(x + (order / 2 - k) * step)
                   for k in range(order + 1)) / step ** order

    table = [central(h / 2 ** i) for i in range(levels)]
    for j in range(1, levels):
        table = [(4 ** j * table[i + 1] - table[i]) / (4 ** j - 1) for i in range(len(table) - 1)]
    return float(table[0])
