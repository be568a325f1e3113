"""Tracing one-dimensional solution families of the narrowband equations.

From seven segments on, the design equations leave one free direction: the
converged phase vectors lie on curves, not at isolated points. The curves are
followed by predictor-corrector continuation in the free (interior) phases.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .design import ENDPOINT_PHASE, DesignSpec, SolutionRecord, batched_residuals, circular_distance

PI = math.pi


def _expand(free: np.ndarray) -> np.ndarray:
    return np.concatenate([[ENDPOINT_PHASE], free, [ENDPOINT_PHASE]])


class _System:
    def __init__(self, spec: DesignSpec, fd_step: float = 1e-7):
        self.spec = spec
        self.h = fd_step

    def residual(self, free: np.ndarray) -> np.ndarray:
        return batched_residuals(self.spec.target_angle, _expand(free)[None], self.spec.order)[0]

    def jacobian(self, free: np.ndarray) -> np.ndarray:
        p = len(free)
        shifts = np.concatenate([free + self.h * np.eye(p), free - self.h * np.eye(p)])
        full = np.concatenate([np.full((2 * p, 1), ENDPOINT_PHASE), shifts,
                               np.full((2 * p, 1), ENDPOINT_PHASE)], axis=1)
        rs = batched_residuals(self.spec.target_angle, full, self.spec.order)
        return ((rs[:p] - rs[p:]) / (2 * self.h)).T


def nullity(spec: DesignSpec, phases, rel_tol: float = 1e-6) -> int:
    """Dimension of the local solution set at ``phases`` (numerical rank deficit)."""
    sys_ = _System(spec)
    s = np.linalg.svd(sys_.jacobian(np.asarray(phases[1:-1], dtype=float)), compute_uv=False)
    return int(np.sum(s < rel_tol * s[0]))


def _tangent(jac: np.ndarray) -> np.ndarray:
    return np.linalg.svd(jac)[2][-1]


def _correct(sys_: _System, y: np.ndarray, t: np.ndarray, tol: float, iters: int = 12):
    """Newton in the hyperplane through ``y`` orthogonal to ``t``."""
    for _ in range(iters):
        r = sys_.residual(y)
        if np.linalg.norm(r) < tol:
            return y
        a = np.vstack([sys_.jacobian(y), t[None]])
        b = np.concatenate([-r, [0.0]])
        y = y + np.linalg.lstsq(a, b, rcond=None)[0]
    return y if np.linalg.norm(sys_.residual(y)) < tol else None


@dataclass
class Family:
    spec: DesignSpec
    points: np.ndarray  # (K, N) full phase vectors along the curve
    closed: bool

    def distance_to(self, phases) -> float:
        """Smallest max-per-phase distance (mod pi, either orientation) from
        ``phases`` to the polyline through the traced points."""
        target = np.asarray(phases, dtype=float)
        pts = self.points
        a, b = (pts[:-1], pts[1:]) if len(pts) > 1 else (pts, pts)
        f = np.linspace(0.0, 1.0, 9)[None, :, None]
        x = (a[:, None, :] + f * (b - a)[:, None, :]).reshape(-1, pts.shape[1])
        return float(np.min(_dist_rows(x, target)))

    def nearest_distance(self, phases, step: float = 0.01) -> float:
        """Like :meth:`distance_to`, but re-traces the neighbourhood of the
        closest vertex with a fine step to remove chord error."""
        target = np.asarray(phases, dtype=float)
        i = int(np.argmin(_dist_rows(self.points, target)))
        local = trace_family(self.spec, self.points[i], step=step / 25, max_steps=75,
                             close_check=False)
        return min(local.distance_to(target), self.distance_to(target))


def _dist_rows(x: np.ndarray, target: np.ndarray) -> np.ndarray:
    out = []
    for cand in (x, x[:, ::-1]):
        d = np.mod(cand - target, PI)
        out.append(np.max(np.minimum(d, PI - d), axis=1))
    return np.minimum(*out)


def trace_family(spec: DesignSpec, start, step: float = 0.01, max_steps: int = 5000,
                 tol: float = 1e-11, close_check: bool = True) -> Family:
    """Follow the solution curve through ``start`` in both directions.

    Stops when the curve closes on itself modulo pi or after ``max_steps``
    accepted steps per direction. ``start`` must be an (approximate) solution
    whose local solution set is one-dimensional.
    """
    sys_ = _System(spec)
    x0 = np.asarray(start, dtype=float)[1:-1]
    x0 = _correct(sys_, x0, _tangent(sys_.jacobian(x0)), tol)
    if x0 is None:
        raise ValueError("start point is not on a solution curve")
    t0 = _tangent(sys_.jacobian(x0))
    branches = []
    closed = False
    for direction in (1.0, -1.0):
        x, t, h = x0, direction * t0, step
        path = []
        steps = 0
        while steps < max_steps:
            y = _correct(sys_, x + h * t, t, tol)
            if y is None or np.linalg.norm(y - x) > 3 * h:
                h /= 2
                if h < step * 1e-4:
                    break
                continue
            tn = _tangent(sys_.jacobian(y))
            if tn @ t < 0:
                tn = -tn
            x, t = y, tn
            path.append(x)
            steps += 1
            h = min(step, h * 1.5)
            if close_check and steps > 10 and circular_distance(_expand(x), _expand(x0)) < step:
                closed = True
                break
        branches.append(path)
        if closed:
            break
    pts = list(reversed(branches[1])) if len(branches) > 1 else []
    pts += [x0] + branches[0]
    full = np.array([_expand(p) for p in pts])
    return Family(spec, full, closed)


def trace_families(records: list[SolutionRecord], step: float = 0.01, max_steps: int = 5000) -> list[Family]:
    """Trace every distinct curve touched by ``records``."""
    families: list[Family] = []
    for rec in records:
        if any(f.distance_to(rec.phases) < 5 * step for f in families):
            continue
        families.append(trace_family(rec.spec, rec.phases, step=step, max_steps=max_steps))
    return families
