"""Composite XX sequences: propagators, jets, circuit emission and the
CPHASE local equivalence."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np

from .matcore import (
    HADAMARD,
    I4,
    SZ,
    I2,
    ContractError,
    MatrixJet,
    jet_multiply,
    kron,
    phase_gate_q1,
    segment_jet,
    xx_propagator,
)

QUARTER = math.pi / 4
HALF = math.pi / 2


def narrowband_angles(n_segments: int) -> tuple[float, ...]:
    """Nominal segment angles ``(pi/4, pi/2, ..., pi/2, pi/4)``."""
    if n_segments < 3 or n_segments % 2 == 0:
        raise ContractError(f"narrowband sequences need odd N >= 3, got {n_segments}")
    return (QUARTER,) + (HALF,) * (n_segments - 2) + (QUARTER,)


@dataclass(frozen=True)
class CompositeSequence:
    """Target angle, nominal segment angles and phases (radians).

    Segment 1 acts first. ``theta_k = segment_angles[k] * (1 + eps)``.
    """

    target_angle: float
    segment_angles: tuple[float, ...]
    phases: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "segment_angles", tuple(float(a) for a in self.segment_angles))
        object.__setattr__(self, "phases", tuple(float(p) for p in self.phases))
        n = len(self.phases)
        if len(self.segment_angles) != n:
            raise ContractError("segment_angles and phases differ in length")
        if n < 1 or n % 2 == 0:
            raise ContractError(f"sequence length must be odd and >= 1, got {n}")
        if n == 1:
            if not math.isclose(self.segment_angles[0], self.target_angle, abs_tol=1e-15):
                raise ContractError("a single-segment sequence must use the target angle")
        elif not np.allclose(self.segment_angles, narrowband_angles(n), rtol=0, atol=1e-15):
            raise ContractError("segments must be (pi/4, pi/2, ..., pi/2, pi/4)")
        if not all(math.isfinite(p) for p in self.phases + self.segment_angles):
            raise ContractError("angles must be finite")

    @classmethod
    def single(cls, target_angle: float, phase: float = 0.0) -> "CompositeSequence":
        return cls(target_angle, (target_angle,), (phase,))

    @classmethod
    def narrowband(cls, target_angle: float, phases: Sequence[float]) -> "CompositeSequence":
        return cls(target_angle, narrowband_angles(len(phases)), tuple(phases))

    @classmethod
    def from_pi_units(cls, target_angle: float, phases_pi: Sequence[float]) -> "CompositeSequence":
        phases = tuple(p * math.pi for p in phases_pi)
        if len(phases) == 1:
            return cls.single(target_angle, phases[0])
        return cls.narrowband(target_angle, phases)

    @property
    def n_segments(self) -> int:
        return len(self.phases)


def shifted_propagator(theta: float, phi: float) -> np.ndarray:
    """``F(-phi) U(theta) F(phi)``."""
    return phase_gate_q1(-phi) @ xx_propagator(theta) @ phase_gate_q1(phi)


def composite_propagator(seq: CompositeSequence, eps: float) -> np.ndarray:
    u = I4
    for theta, phi in zip(seq.segment_angles, seq.phases):
        u = shifted_propagator(theta * (1.0 + eps), phi) @ u
    return u


def composite_jet(seq: CompositeSequence, center: float, order: int) -> MatrixJet:
    jets = [segment_jet(t, p, center, order) for t, p in zip(seq.segment_angles, seq.phases)]
    # later segments multiply from the left
    return reduce(lambda acc, j: jet_multiply(j, acc), jets[1:], jets[0])


def cphase_from_xx(theta: float) -> np.ndarray:
    """``diag(1, 1, 1, e^{4 i theta})`` assembled from ``U(theta)``.

    The ZZ interaction is the XX propagator conjugated by Hadamards on both
    qubits; local Z rotations and a global phase finish the CPHASE.
    """
    q = theta  # phi/4 with phi = 4 theta
    hh = kron(HADAMARD, HADAMARD)
    zz = hh @ xx_propagator(q) @ hh
    z1 = np.diag(np.exp(-1j * q * np.diag(kron(SZ, I2))))
    z2 = np.diag(np.exp(-1j * q * np.diag(kron(I2, SZ))))
    return np.exp(1j * q) * (z1 @ z2 @ zz)


@dataclass(frozen=True)
class PhaseInstr:
    angle: float
    qubit: int = 0


@dataclass(frozen=True)
class XXInstr:
    angle: float
    qubits: tuple[int, int] = (0, 1)


Instr = PhaseInstr | XXInstr


@dataclass(frozen=True)
class GateList:
    """Circuit in time order (first element acts first)."""

    instructions: tuple[Instr, ...] = field(default_factory=tuple)

    def __iter__(self):
        return iter(self.instructions)

    def __len__(self):
        return len(self.instructions)

    @property
    def phase_slots(self) -> list[float]:
        return [i.angle for i in self.instructions if isinstance(i, PhaseInstr)]

    def unitary(self) -> np.ndarray:
        u = I4
        for ins in self.instructions:
            if isinstance(ins, PhaseInstr):
                if ins.qubit != 0:
                    raise ContractError("phase gates act on qubit 0 only")
                u = phase_gate_q1(ins.angle) @ u
            else:
                u = xx_propagator(ins.angle) @ u
        return u

    def to_text(self) -> str:
        lines = []
        for ins in self.instructions:
            if isinstance(ins, PhaseInstr):
                lines.append(f"PHASE {ins.qubit} {_fmt_pi(ins.angle)}")
            else:
                a, b = ins.qubits
                lines.append(f"XX {a} {b} {_fmt_pi(ins.angle)}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "GateList":
        out: list[Instr] = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            parts = raw.split()
            if not parts:
                continue
            try:
                if parts[0] == "PHASE" and len(parts) == 3:
                    out.append(PhaseInstr(float(parts[2]) * math.pi, int(parts[1])))
                elif parts[0] == "XX" and len(parts) == 4:
                    out.append(XXInstr(float(parts[3]) * math.pi, (int(parts[1]), int(parts[2]))))
                else:
                    raise ValueError(raw)
            except ValueError as exc:
                raise ContractError(f"line {lineno}: cannot parse {raw!r}") from exc
        return cls(tuple(out))


def _fmt_pi(angle: float) -> str:
    v = angle / math.pi
    s = f"{v:.12g}"
    return "0" if s == "-0" else s


def emit_gate_list(seq: CompositeSequence) -> GateList:
    """Telescoped circuit: ``F(phi_1), U(theta_1), F(phi_2 - phi_1), ..., U(theta_N), F(-phi_N)``.

    The first and last phase gates are kept even when they could be dropped.
    """
    ph = seq.phases
    out: list[Instr] = [PhaseInstr(ph[0])]
    for k, theta in enumerate(seq.segment_angles):
        out.append(XXInstr(theta))
        nxt = ph[k + 1] - ph[k] if k + 1 < len(ph) else -ph[k]
        out.append(PhaseInstr(nxt))
    return GateList(tuple(out))
