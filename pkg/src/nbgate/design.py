"""Narrowband design equations, a multi-start Levenberg-Marquardt solver and
the reference phase table.

Compression order ``n`` follows the convention where ``n`` counts the
conditions at ``eps = +-1``: the propagator equals the identity and its
first ``n - 1`` eps-derivatives vanish there. A bare XX gate has ``n = 1`` at
``eps = -1``; the five-segment sequences have ``n = 2``.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .matcore import I4, XX, YX, ContractError
from .sequence import CompositeSequence, composite_jet, composite_propagator, narrowband_angles
from .matcore import xx_propagator

log = logging.getLogger(__name__)

PI = math.pi
ENDPOINT_PHASE = PI / 4


class UnsupportedCase(ValueError):
    """Raised for target angles that have no closed-form scalar system."""


# ---------------------------------------------------------------------------
# residual systems


def _residual_blocks(seq: CompositeSequence, order: int, phase_invariant: bool = False):
    if order < 1:
        raise ContractError(f"compression order must be >= 1, got {order}")
    target = xx_propagator(seq.target_angle)
    u0 = composite_propagator(seq, 0.0)
    lo = composite_jet(seq, -1.0, order - 1)
    hi = composite_jet(seq, 1.0, order - 1)
    if phase_invariant:
        nominal = np.atleast_2d(1 - abs(np.trace(target.conj().T @ u0)) / 4)
        endpoint = np.atleast_2d(1 - abs(np.trace(hi.coeffs[0])) / 4)
    else:
        nominal = u0 - target
        endpoint = hi.coeffs[0] - I4
    return {
        "eps=0": [nominal],
        "eps=-1": list(lo.coeffs[1:]),
        "eps=+1": [endpoint] + list(hi.coeffs[1:]),
    }


def _flatten(mats: Iterable[np.ndarray]) -> np.ndarray:
    v = np.concatenate([np.asarray(m, dtype=complex).ravel() for m in mats])
    return np.concatenate([v.real, v.imag])


def nb_residuals(seq: CompositeSequence, order: int, phase_invariant: bool = False) -> np.ndarray:
    """Real residual vector of the narrowband conditions.

    Blocks, in order: ``U_N(0) - U(Theta)``; the jet coefficients ``C_1..C_{n-1}``
    at ``eps = -1``; ``U_N(+1) - I`` followed by ``C_1..C_{n-1}`` at ``eps = +1``.
    The ``l = 0`` condition at ``eps = -1`` holds identically and is skipped.
    With ``phase_invariant`` the two ``l = 0`` blocks become ``1 - |Tr(A^dag B)|/4``.
    """
    blocks = _residual_blocks(seq, order, phase_invariant)
    return _flatten(m for b in blocks.values() for m in b)


def residual_breakdown(seq: CompositeSequence, order: int, phase_invariant: bool = False) -> dict[str, float]:
    blocks = _residual_blocks(seq, order, phase_invariant)
    return {k: float(np.linalg.norm(_flatten(v))) if v else 0.0 for k, v in blocks.items()}


def scalar_residuals_n3(phases: Sequence[float], theta: float) -> np.ndarray:
    """Left-hand sides of the closed-form three-segment system (Theta = pi/2 only)."""
    if not math.isclose(theta, PI / 2):
        raise UnsupportedCase("the three-segment scalar system exists for Theta = pi/2 only")
    p1, p2, p3 = phases
    return np.array([
        math.sin(p1 - p3),
        np.exp(4j * p1 - 2j * p2) - np.exp(2j * p2) + 2,
        np.exp(4j * p1) + np.exp(4j * p2),
    ], dtype=complex)


def scalar_residuals_n5(phases: Sequence[float], theta: float) -> np.ndarray:
    """Left-hand sides of the closed-form five-segment systems (Theta = pi/4 or pi/2)."""
    if math.isclose(theta, PI / 4):
        c = math.sqrt(2)
    elif math.isclose(theta, PI / 2):
        c = 2.0
    else:
        raise UnsupportedCase(f"no closed-form five-segment system for Theta = {theta}")
    p1, p2, p3, p4, p5 = phases
    a = np.exp(4j * (p2 + p4))
    b = np.exp(2j * (p1 + 2 * p3 + p5))
    first = a - b + c * np.exp(2j * (p2 + p3 + p4))
    if c == 2.0:
        second = a + b
    else:
        second = a + b - c * np.exp(2j * (p1 + p2 + p3 + p4))
    return np.array([
        first,
        second,
        math.sin(p1 - p5),
        np.exp(2j * p1) + 2 * np.exp(2j * p2) + 2 * np.exp(2j * p3) + 2 * np.exp(2j * p4) + np.exp(2j * p5),
    ], dtype=complex)


# ---------------------------------------------------------------------------
# batched residuals used by the solver


def _batched_jets(angles: np.ndarray, phases: np.ndarray, center: float, order: int) -> list[np.ndarray]:
    """Composite jet coefficients for a batch of phase vectors, shape (B, 4, 4) each."""
    batch = phases.shape[0]
    acc = None
    for k, theta_nom in enumerate(angles):
        phi = phases[:, k][:, None, None]
        gen = np.cos(2 * phi) * XX + np.sin(2 * phi) * YX
        theta = theta_nom * (1 + center)
        u = math.cos(theta) * I4 + 1j * math.sin(theta) * gen
        xu = gen @ u
        seg = []
        scale = 1.0 + 0j
        for l in range(order + 1):
            seg.append(scale * (u if l % 2 == 0 else xu))
            scale = scale * 1j * theta_nom / (l + 1)
        if acc is None:
            acc = seg
            continue
        acc = [sum(seg[m] @ acc[l - m] for m in range(l + 1)) for l in range(order + 1)]
    assert acc is not None and acc[0].shape == (batch, 4, 4)
    return acc


def batched_residuals(target_angle: float, phases: np.ndarray, order: int) -> np.ndarray:
    """Strict-mode ``nb_residuals`` for every row of ``phases`` (B, N) -> (B, M)."""
    phases = np.atleast_2d(np.asarray(phases, dtype=float))
    angles = np.array(narrowband_angles(phases.shape[1]))
    u0 = _batched_jets(angles, phases, 0.0, 0)[0]
    lo = _batched_jets(angles, phases, -1.0, order - 1)
    hi = _batched_jets(angles, phases, 1.0, order - 1)
    mats = [u0 - xx_propagator(target_angle)] + lo[1:] + [hi[0] - I4] + hi[1:]
    v = np.concatenate([m.reshape(m.shape[0], 16) for m in mats], axis=1)
    return np.concatenate([v.real, v.imag], axis=1)


# ---------------------------------------------------------------------------
# canonical form and reference data


def reduce_mod_pi(phases: Sequence[float]) -> np.ndarray:
    r = np.mod(np.asarray(phases, dtype=float), PI)
    r[np.isclose(r, PI, rtol=0, atol=1e-12)] = 0.0
    return r


def canonicalize(phases: Sequence[float]) -> list[float]:
    """Reduce every phase into ``[0, pi)`` and pick the lexicographically smaller
    of the list and its reversal.

    A shift by pi of one phase leaves the propagator unchanged, and reversing a
    palindromic segment layout leaves the fidelity profile unchanged.
    """
    r = reduce_mod_pi(phases)
    rev = r[::-1]
    key = lambda a: tuple(np.round(a, 9))
    return [float(x) for x in min(r, rev, key=key)]


def circular_distance(a: Sequence[float], b: Sequence[float]) -> float:
    """Max per-phase distance modulo pi."""
    d = np.mod(np.asarray(a) - np.asarray(b), PI)
    return float(np.max(np.minimum(d, PI - d)))


# Reference phases in units of pi, four decimals except N=5.
_TABLE = {
    (5, 0.25): (0.25, 0.3125, 0.75, 0.8125, 0.25),
    (7, 0.25): (-0.75, -0.5006, 0.6743, 1.2249, -0.0244, -0.1994, -0.75),
    (9, 0.25): (0.25, -1.1584, 0.4493, 1.4203, 0.8155, 0.3416, -1.0507, -0.0797, 0.25),
    (11, 0.25): (0.25, 0.7984, -0.1473, 0.4942, 0.1257, 1.2468, 0.6985, 0.6441, -0.9973, 0.3711, 0.25),
    (5, 0.5): (0.25, 0.375, 0.75, 0.875, 0.25),
    (7, 0.5): (0.25, -0.0475, -0.3857, -0.6763, -0.3789, -0.0407, 0.25),
    (9, 0.5): (0.25, 0.9480, -0.8148, -1.3878, 0.7500, 0.4480, 0.6852, -0.8878, 0.25),
    (11, 0.5): (0.25, 0.8690, 0.2018, 0.4679, -0.3659, -0.0021, -0.6212, 0.0461, -0.2200, 0.6138, 0.25),
}


@dataclass(frozen=True)
class TableRow:
    n_segments: int
    theta_pi: float
    phases_pi: tuple[float, ...]

    @property
    def theta(self) -> float:
        return self.theta_pi * PI

    @property
    def exact(self) -> bool:
        return self.n_segments == 5

    def sequence(self) -> CompositeSequence:
        return CompositeSequence.from_pi_units(self.theta, self.phases_pi)


def reference_table() -> list[TableRow]:
    """The eight reference rows, ``Theta = pi/4`` first."""
    return [TableRow(n, t, p) for (n, t), p in _TABLE.items()]


def table_row(n_segments: int, theta_pi: float) -> TableRow:
    try:
        return TableRow(n_segments, theta_pi, _TABLE[(n_segments, theta_pi)])
    except KeyError:
        raise KeyError(f"no reference row for N={n_segments}, Theta={theta_pi}pi") from None


def default_order(n_segments: int) -> int:
    return (n_segments - 1) // 2


# ---------------------------------------------------------------------------
# solver


@dataclass(frozen=True)
class SolverOptions:
    restarts: int = 200
    seed: int = 0
    residual_tol: float = 1e-10
    max_iterations: int = 200
    free_endpoints: bool = False
    batch_size: int = 256


@dataclass(frozen=True)
class DesignSpec:
    n_segments: int
    target_angle: float
    order: int | None = None
    solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if self.n_segments < 3 or self.n_segments % 2 == 0:
            raise ContractError(f"n_segments must be odd and >= 3, got {self.n_segments}")
        if self.order is None:
            object.__setattr__(self, "order", default_order(self.n_segments))
        if self.order < 1:
            raise ContractError("order must be >= 1")


@dataclass(frozen=True)
class SolutionRecord:
    phases: tuple[float, ...]
    residual_norm: float
    canonical_phases: tuple[float, ...]
    spec: DesignSpec

    def sequence(self) -> CompositeSequence:
        return CompositeSequence.narrowband(self.spec.target_angle, self.phases)

    def to_dict(self) -> dict:
        return {
            "n_segments": self.spec.n_segments,
            "theta_target_pi": _num(self.spec.target_angle / PI),
            "order": self.spec.order,
            "phases_pi": [_num(p / PI) for p in self.phases],
            "residual_norm": _num(self.residual_norm),
            "canonical_phases_pi": [_num(p / PI) for p in self.canonical_phases],
        }


def _num(x: float) -> float:
    """Round to 12 significant digits for stable serialization."""
    return float(f"{x:.12g}") + 0.0


def _expand(free: np.ndarray, n: int, free_endpoints: bool) -> np.ndarray:
    if free_endpoints:
        return free
    ends = np.full((free.shape[0], 1), ENDPOINT_PHASE)
    return np.concatenate([ends, free, ends], axis=1)


def levenberg_marquardt(fun, x0: np.ndarray, max_iterations: int = 200, tol: float = 1e-10,
                        fd_step: float = 1e-7, damping: float = 1e-3) -> tuple[np.ndarray, np.ndarray]:
    """Damped Gauss-Newton on a batch of independent problems.

    ``fun`` maps (B, P) parameters to (B, M) residuals. Each row keeps its own
    damping, multiplied by 10 on a rejected step and divided by 10 on an
    accepted one. The Jacobian is taken by central differences. Returns the
    final parameters and residual norms; rows that go non-finite get ``nan``.
    """
    x = np.array(x0, dtype=float)
    b, p = x.shape
    lam = np.full(b, damping)
    r = fun(x)
    cost = np.einsum("ij,ij->i", r, r)
    active = np.isfinite(cost) & (np.sqrt(cost) >= tol)
    eye = np.eye(p)
    for _ in range(max_iterations):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        xa = x[idx]
        shifts = np.concatenate([xa[:, None, :] + fd_step * eye, xa[:, None, :] - fd_step * eye], axis=1)
        rs = fun(shifts.reshape(-1, p)).reshape(idx.size, 2 * p, -1)
        jac = (rs[:, :p] - rs[:, p:]).transpose(0, 2, 1) / (2 * fd_step)
        jtj = jac.transpose(0, 2, 1) @ jac
        g = np.einsum("bmp,bm->bp", jac, r[idx])
        diag = np.einsum("bii->bi", jtj)
        a = jtj + lam[idx, None, None] * (diag[:, :, None] * eye + eye * 1e-12)
        try:
            step = -np.linalg.solve(a, g[..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = -np.stack([np.linalg.lstsq(m, v, rcond=None)[0] for m, v in zip(a, g)])
        xn = xa + step
        rn = fun(xn)
        cn = np.einsum("ij,ij->i", rn, rn)
        ok = np.isfinite(cn) & (cn < cost[idx])
        acc = idx[ok]
        x[acc], r[acc], cost[acc] = xn[ok], rn[ok], cn[ok]
        lam[acc] = np.maximum(lam[acc] / 10, 1e-12)
        rej = idx[~ok]
        lam[rej] *= 10
        converged = np.sqrt(cost[idx]) < tol
        stalled = (lam[idx] > 1e12) | ~np.isfinite(x[idx]).all(axis=1)
        # stop early on hopeless rows: small gradient at a clearly nonzero residual
        done = converged | stalled
        active[idx[done]] = False
    norms = np.sqrt(cost)
    norms[~np.isfinite(x).all(axis=1)] = np.nan
    return x, norms


def _restart_guesses(spec: DesignSpec, n_free: int) -> np.ndarray:
    opts = spec.solver
    rows = [np.random.default_rng(opts.seed + k).uniform(0, PI, n_free) for k in range(opts.restarts)]
    return np.array(rows).reshape(opts.restarts, n_free)


def _dedupe(records: list[SolutionRecord]) -> list[SolutionRecord]:
    out: list[SolutionRecord] = []
    for rec in sorted(records, key=lambda r: r.residual_norm):
        if all(circular_distance(rec.canonical_phases, o.canonical_phases) >= 1e-6 for o in out):
            out.append(rec)
    return sorted(out, key=lambda r: tuple(np.round(r.canonical_phases, 9)))


def solve(spec: DesignSpec) -> list[SolutionRecord]:
    """All distinct solutions found from ``spec.solver.restarts`` random starts.

    Restart ``k`` draws its free phases uniformly from ``[0, pi)`` using seed
    ``seed + k``. Endpoint phases are pinned to pi/4 unless released.
    """
    opts = spec.solver
    n = spec.n_segments
    n_free = n if opts.free_endpoints else n - 2
    if opts.restarts <= 0:
        return []
    guesses = _restart_guesses(spec, n_free)

    def fun(free):
        return batched_residuals(spec.target_angle, _expand(free, n, opts.free_endpoints), spec.order)

    found: list[SolutionRecord] = []
    for start in range(0, len(guesses), opts.batch_size):
        x, norms = levenberg_marquardt(fun, guesses[start:start + opts.batch_size],
                                       max_iterations=opts.max_iterations, tol=opts.residual_tol)
        for row, nrm in zip(_expand(x, n, opts.free_endpoints), norms):
            if not np.isfinite(nrm):
                continue
            # polish with the reference residual so the recorded norm is the strict one
            seq = CompositeSequence.narrowband(spec.target_angle, row)
            true_norm = float(np.linalg.norm(nb_residuals(seq, spec.order)))
            if true_norm < opts.residual_tol:
                found.append(SolutionRecord(tuple(float(v) for v in row), true_norm,
                                            tuple(canonicalize(row)), spec))
    log.info("N=%d order=%d: %d converged restarts", n, spec.order, len(found))
    return _dedupe(found)


def solve_adaptive(spec: DesignSpec, max_order: int | None = None) -> tuple[int, list[SolutionRecord]]:
    """Raise the compression order from ``spec.order`` until solving fails.

    Returns the largest feasible order and its solutions, or ``(spec.order - 1, [])``
    if even the starting order has none.
    """
    best = (spec.order - 1, [])
    order = spec.order
    while max_order is None or order <= max_order:
        recs = solve(DesignSpec(spec.n_segments, spec.target_angle, order, spec.solver))
        if not recs:
            break
        best = (order, recs)
        order += 1
    return best


def dumps_solutions(records: Sequence[SolutionRecord]) -> str:
    return json.dumps([r.to_dict() for r in records], indent=2) + "\n"


def loads_solutions(text: str) -> list[dict]:
    data = json.loads(text)
    required = {"n_segments", "theta_target_pi", "order", "phases_pi", "residual_norm", "canonical_phases_pi"}
    for item in data:
        missing = required - item.keys()
        if missing:
            raise ContractError(f"solution record missing {sorted(missing)}")
    return data
