"""Exact 2x2 complex linear algebra for polarization states.

Conventions (fixed once, used everywhere):

* Jones vectors are column vectors with components ordered ``(H, V)``.
* Derived basis states: ``D = (H+V)/sqrt(2)``, ``A = (H-V)/sqrt(2)``,
  ``R = (H - iV)/sqrt(2)``, ``L = (H + iV)/sqrt(2)``.
* Waveplate fast-axis angles are measured counterclockwise from the
  vertical (V) axis, matching the hardware convention of the modeled
  transceiver.  A waveplate of retardance ``G`` at angle ``t`` is
  ``Rot(t + pi/2) @ diag(exp(-iG/2), exp(+iG/2)) @ Rot(-(t + pi/2))``;
  the fast axis leads by half the retardance, the slow axis lags.
* Transposition (used for reverse propagation through a reciprocal
  element) is taken in the ``(H, V)`` basis.

Mirror-compensation identity: for any 2x2 matrix ``T``,
``T.T @ J @ T == det(T) * J`` with ``J = [[0, 1], [-1, 0]]``.  ``J`` is the
roundtrip operator of an ideal Faraday mirror; the identity is why a
double pass through a fixed reciprocal element (randomizer + channel)
returns every polarization to the state orthogonal to its input.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

ATOL = 1e-12

# Basis kets, (H, V) component order.
KET_H = np.array([1.0, 0.0], dtype=complex)
KET_V = np.array([0.0, 1.0], dtype=complex)
KET_D = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)
KET_A = np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0)
KET_R = np.array([1.0, -1.0j], dtype=complex) / np.sqrt(2.0)
KET_L = np.array([1.0, 1.0j], dtype=complex) / np.sqrt(2.0)

# Faraday-mirror roundtrip operator (maps V -> H, H -> -V).
J_MIRROR = np.array([[0.0, 1.0], [-1.0, 0.0]], dtype=complex)


def _as_matrix(m) -> np.ndarray:
    a = np.array(m, dtype=complex)
    if a.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix entries must be finite")
    return a


@dataclass(frozen=True)
class PolarizationState:
    """Qubit density operator: Hermitian, unit trace, positive semidefinite."""

    rho: np.ndarray

    def __post_init__(self):
        rho = _as_matrix(self.rho)
        if np.max(np.abs(rho - rho.conj().T)) > ATOL:
            raise ValueError("density operator must be Hermitian")
        if abs(rho[0, 0].real + rho[1, 1].real - 1.0) > ATOL:
            raise ValueError("density operator must have unit trace")
        if min(np.linalg.eigvalsh(rho)) < -ATOL:
            raise ValueError("density operator must be positive semidefinite")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @property
    def purity(self) -> float:
        return purity(self)


@dataclass(frozen=True)
class JonesUnitary:
    """2x2 unitary polarization transformation."""

    matrix: np.ndarray

    def __post_init__(self):
        u = _as_matrix(self.matrix)
        if np.max(np.abs(u @ u.conj().T - np.eye(2))) > ATOL:
            raise ValueError("matrix must be unitary")
        u.setflags(write=False)
        object.__setattr__(self, "matrix", u)


class OverlapBounds(NamedTuple):
    max: float
    min: float


def pure_state(ket) -> PolarizationState:
    """|psi><psi| from a (not necessarily normalized) Jones vector."""
    v = np.asarray(ket, dtype=complex)
    if v.shape != (2,):
        raise ValueError("expected a 2-component Jones vector")
    n = np.vdot(v, v).real
    if n <= 0:
        raise ValueError("zero vector has no polarization state")
    return PolarizationState(np.outer(v, v.conj()) / n)


def mixed_state(weight: float, ket) -> PolarizationState:
    """weight |e><e| + (1-weight) |e_perp><e_perp| for a qubit."""
    if not 0.0 <= weight <= 1.0:
        raise ValueError("mixture weight must be in [0, 1]")
    v = np.asarray(ket, dtype=complex)
    v = v / np.sqrt(np.vdot(v, v).real)
    v_perp = np.array([-v[1].conj(), v[0].conj()])
    rho = weight * np.outer(v, v.conj()) + (1.0 - weight) * np.outer(v_perp, v_perp.conj())
    return PolarizationState(rho)


def maximally_mixed() -> PolarizationState:
    return PolarizationState(np.eye(2, dtype=complex) / 2.0)


def haar_gaussians_to_unitary(g: np.ndarray) -> np.ndarray:
    """Map 8 i.i.d. standard normals to a Haar-distributed U(2) element.

    Ginibre matrix -> Gram-Schmidt QR -> R-diagonal phases normalized.
    Written as an explicit closed form (no LAPACK) so the Monte Carlo
    kernels can reproduce it operation-for-operation in compiled code.
    Supports a leading batch axis: ``g`` of shape (..., 8).
    """
    g = np.asarray(g, dtype=float)
    a = g[..., 0] + 1j * g[..., 1]   # column 1
    b = g[..., 2] + 1j * g[..., 3]
    c = g[..., 4] + 1j * g[..., 5]   # column 2
    d = g[..., 6] + 1j * g[..., 7]
    n1 = np.sqrt(a.real**2 + a.imag**2 + b.real**2 + b.imag**2)
    q11 = a / n1
    q21 = b / n1
    # project column 2 off q1, normalize
    inner = q11.conj() * c + q21.conj() * d
    c2 = c - inner * q11
    d2 = d - inner * q21
    n2 = np.sqrt(c2.real**2 + c2.imag**2 + d2.real**2 + d2.imag**2)
    q12 = c2 / n2
    q22 = d2 / n2
    # phase-normalize: R diagonal entries are n1 (already real > 0) and
    # q2^dag . col2; multiply column 2 by the conjugate phase of the latter.
    r22 = q12.conj() * c + q22.conj() * d
    ph = r22.conj() / np.sqrt(r22.real**2 + r22.imag**2)
    u = np.empty(g.shape[:-1] + (2, 2), dtype=complex)
    u[..., 0, 0] = q11
    u[..., 1, 0] = q21
    u[..., 0, 1] = q12 * ph
    u[..., 1, 1] = q22 * ph
    return u


def haar_random_unitary(rng: np.random.Generator) -> JonesUnitary:
    """Draw a Haar-distributed 2x2 unitary from a seeded generator."""
    return JonesUnitary(haar_gaussians_to_unitary(rng.standard_normal(8)))


def haar_random_unitaries(rng: np.random.Generator, n: int) -> np.ndarray:
    """Batch of n Haar unitaries, shape (n, 2, 2)."""
    return haar_gaussians_to_unitary(rng.standard_normal((n, 8)))


def _rot(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]], dtype=complex)


def waveplate(kind: str, angle: float) -> JonesUnitary:
    """Jones matrix of an ideal waveplate.

    ``kind`` is ``"half"`` or ``"quarter"``; ``angle`` is the fast-axis
    angle in radians, counterclockwise from the vertical axis (see module
    docstring for the full phase convention).
    """
    if not np.isfinite(angle):
        raise ValueError("waveplate angle must be finite")
    if kind == "half":
        gamma = np.pi
    elif kind == "quarter":
        gamma = np.pi / 2.0
    else:
        raise ValueError(f"unknown waveplate kind {kind!r}")
    axis = angle + np.pi / 2.0
    retard = np.diag([np.exp(-0.5j * gamma), np.exp(0.5j * gamma)])
    return JonesUnitary(_rot(axis) @ retard @ _rot(-axis))


def bob_fixed_randomizer() -> JonesUnitary:
    """The fixed randomizer setting used for deterministic validation runs.

    Equals ``waveplate("half", 112.5 deg) @ waveplate("quarter", 45 deg)``
    up to a global phase.
    """
    return JonesUnitary(np.array([[1j, 1j], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0))


def purity(state: PolarizationState) -> float:
    """tr(rho^2); lies in [1/2, 1] for a qubit."""
    rho = state.rho
    return float(np.trace(rho @ rho).real)


def overlap_bounds(p: float) -> OverlapBounds:
    """Extremal overlaps <psi| U rho U^dag |psi> over all unitaries U.

    For any fixed pure |psi> and any rho of purity ``p`` the overlap ranges
    over [min, max] = (1 -+ sqrt(2p-1))/2; max + min = 1.
    """
    if not 0.5 - ATOL <= p <= 1.0 + ATOL:
        raise ValueError(f"qubit purity must lie in [1/2, 1], got {p}")
    s = np.sqrt(max(2.0 * p - 1.0, 0.0))
    return OverlapBounds(0.5 * (1.0 + s), 0.5 * (1.0 - s))


def conjugate_state(u: JonesUnitary, state: PolarizationState) -> PolarizationState:
    """U rho U^dag."""
    m = u.matrix
    return PolarizationState(m @ state.rho @ m.conj().T)


def conjugated_overlaps(unitaries: np.ndarray, state: PolarizationState, ket) -> np.ndarray:
    """<ket| U rho U^dag |ket> for a batch of unitaries, shape (n,)."""
    psi = np.asarray(ket, dtype=complex)
    amp = np.einsum("i,nij->nj", psi.conj(), unitaries)
    return np.einsum("ni,ij,nj->n", amp, state.rho, amp.conj()).real


def sample_conjugated_overlaps(
    rng: np.random.Generator, state: PolarizationState, ket, n: int
) -> np.ndarray:
    """Haar-sample n values of <ket| U rho U^dag |ket> (brute-force oracle)."""
    return conjugated_overlaps(haar_random_unitaries(rng, n), state, ket)
