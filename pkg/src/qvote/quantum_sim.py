"""Exact density-matrix simulation of the shared GHZ resource.

Qubit ``j`` is held by agent ``j``. Basis index ``i`` of a ``2**n`` vector
encodes qubit 0 as the most significant bit, so ``bits[j] = (i >> (n-1-j)) & 1``.

Measurements use the rotated basis ``|±θ> = (|0> ± e^{iθ}|1>)/√2`` and report
bit 0 for ``+``. With this convention the ideal GHZ state yields
``P(parity = 0) = (1 + cos Σθ)/2``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import ConfigError, ContractError

MAX_QUBITS = 10
NORM_TOL = 1e-10
ALGEBRA_TOL = 1e-12
PSD_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DensityState:
    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        dim = 2 ** self.n_qubits
        if self.n_qubits < 1 or self.matrix.shape != (dim, dim):
            raise ContractError(
                f"matrix shape {self.matrix.shape} does not match {self.n_qubits} qubits"
            )

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits

    def check(self) -> None:
        """Raise ContractError unless the matrix is Hermitian, unit-trace and PSD."""
        m = self.matrix
        if np.max(np.abs(m - m.conj().T)) > ALGEBRA_TOL:
            raise ContractError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > ALGEBRA_TOL:
            raise ContractError(f"density matrix trace is {np.trace(m).real:.3e}, not 1")
        if np.linalg.eigvalsh(m).min() < -PSD_TOL:
            raise ContractError("density matrix is not positive semidefinite")


class NoiseKind(enum.Enum):
    IDEAL = "ideal"
    WHITE = "white"


@dataclass(frozen=True)
class NoiseModel:
    kind: NoiseKind = NoiseKind.IDEAL
    weight: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.weight <= 1.0:
            raise ConfigError(f"noise weight must lie in [0, 1], got {self.weight}")
        if self.kind is NoiseKind.IDEAL and self.weight != 0.0:
            raise ConfigError("ideal noise model must have weight 0")

    @classmethod
    def white(cls, weight: float) -> "NoiseModel":
        return cls(NoiseKind.WHITE, float(weight))

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "weight": self.weight}

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseModel":
        return cls(NoiseKind(d["kind"]), float(d.get("weight", 0.0)))


def _check_n(n_qubits: int) -> None:
    if not 2 <= n_qubits <= MAX_QUBITS:
        raise ConfigError(f"n_qubits must be in [2, {MAX_QUBITS}], got {n_qubits}")


def ghz_vector(n_qubits: int) -> np.ndarray:
    v = np.zeros(2 ** n_qubits, dtype=complex)
    v[0] = v[-1] = 1 / np.sqrt(2)
    return v


def make_ghz(n_qubits: int) -> DensityState:
    _check_n(n_qubits)
    v = ghz_vector(n_qubits)
    return DensityState(n_qubits, np.outer(v, v.conj()))


def maximally_mixed(n_qubits: int) -> DensityState:
    dim = 2 ** n_qubits
    return DensityState(n_qubits, np.eye(dim, dtype=complex) / dim)


def apply_noise(state: DensityState, model: NoiseModel) -> DensityState:
    if model.kind is NoiseKind.IDEAL or model.weight == 0.0:
        return state
    p = model.weight
    mixed = np.eye(state.dim, dtype=complex) / state.dim
    return DensityState(state.n_qubits, (1 - p) * state.matrix + p * mixed)


def fidelity(state: DensityState) -> float:
    """Overlap <GHZ|rho|GHZ> with the ideal GHZ state on the same number of qubits."""
    m = state.matrix
    # only the four corner entries touch |0..0> and |1..1>
    return float(0.5 * (m[0, 0] + m[0, -1] + m[-1, 0] + m[-1, -1]).real)


def rotated_basis(theta: float) -> np.ndarray:
    """2x2 matrix whose columns are |+θ> and |−θ>."""
    phase = np.exp(1j * theta)
    return np.array([[1, 1], [phase, -phase]], dtype=complex) / np.sqrt(2)


def _check_angles(state: DensityState, angles) -> np.ndarray:
    angles = np.asarray(angles, dtype=float)
    if angles.shape != (state.n_qubits,):
        raise ContractError(
            f"expected {state.n_qubits} angles, got shape {angles.shape}"
        )
    return angles


def outcome_distribution(state: DensityState, angles) -> np.ndarray:
    """Born-rule probabilities of all ``2**n`` outcomes, indexed as described above."""
    angles = _check_angles(state, angles)
    basis = reduce(np.kron, (rotated_basis(t) for t in angles))
    probs = np.einsum("ji,jk,ki->i", basis.conj(), state.matrix, basis).real
    return np.clip(probs, 0.0, None)


def index_to_bits(index, n_qubits: int) -> np.ndarray:
    shifts = np.arange(n_qubits - 1, -1, -1)
    return ((np.asarray(index)[..., None] >> shifts) & 1).astype(np.int8)


def bits_to_index(bits) -> int:
    idx = 0
    for b in bits:
        idx = (idx << 1) | int(b)
    return idx


def sample_measurement(state: DensityState, angles, rng: np.random.Generator, shots=None):
    """Draw outcome bit vector(s) for the given per-qubit angles.

    Returns an ``(n,)`` int8 array, or ``(shots, n)`` when ``shots`` is given.
    """
    probs = outcome_distribution(state, angles)
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    u = rng.random() if shots is None else rng.random(shots)
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)
    return index_to_bits(idx, state.n_qubits)


def parity(bits):
    """XOR along the last axis; a plain int for a single vector."""
    out = np.bitwise_xor.reduce(np.asarray(bits, dtype=np.int64), axis=-1)
    return int(out) if np.ndim(out) == 0 else out


class GHZSource:
    """Emits the same noisy GHZ state on every request (one state per subround attempt)."""

    def __init__(self, n_qubits: int, noise: NoiseModel = NoiseModel()):
        self.state = apply_noise(make_ghz(n_qubits), noise)
        self.emitted = 0

    def emit(self) -> DensityState:
        self.emitted += 1
        return self.state
