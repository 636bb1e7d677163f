"""Rotated-basis GHZ verification and the per-agent failure-rate bookkeeping."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ContractError
from .quantum_sim import DensityState, parity, sample_measurement

ANGLE_TOL = 1e-9


class Verdict(enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"


@dataclass(frozen=True)
class VerifierCounters:
    trials: np.ndarray
    rejections: np.ndarray

    def __post_init__(self):
        if self.trials.shape != self.rejections.shape:
            raise ContractError("trials and rejections must have the same length")
        if np.any(self.rejections > self.trials) or np.any(self.rejections < 0):
            raise ContractError("need 0 <= r_j <= t_j for every agent")

    @classmethod
    def zeros(cls, n_agents: int) -> "VerifierCounters":
        return cls(np.zeros(n_agents, dtype=np.int64), np.zeros(n_agents, dtype=np.int64))

    def record(self, verifier: int, verdict: Verdict) -> "VerifierCounters":
        t = self.trials.copy()
        r = self.rejections.copy()
        t[verifier] += 1
        if verdict is Verdict.REJECT:
            r[verifier] += 1
        return VerifierCounters(t, r)


@dataclass(frozen=True)
class VerificationResult:
    verdict: Verdict
    verifier: int
    angles: np.ndarray
    outcomes: np.ndarray


def gen_angles(n_agents: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform angles in [0, π) for all but the last agent, which closes the sum to a multiple of π."""
    if n_agents < 2:
        raise ContractError("verification needs at least 2 agents")
    angles = np.empty(n_agents)
    angles[:-1] = rng.uniform(0.0, np.pi, n_agents - 1)
    last = (-angles[:-1].sum()) % np.pi
    # float mod can land exactly on π; shifting by π keeps the sum a multiple of π
    angles[-1] = last - np.pi if last >= np.pi else last
    return angles


def angle_multiple(angles) -> int:
    """The integer m with Σθ = mπ; raises ContractError when no such m exists."""
    total = float(np.sum(angles))
    m = round(total / np.pi)
    if abs(total - m * np.pi) > ANGLE_TOL:
        raise ContractError(f"angle sum {total!r} is not a multiple of π")
    return m


def verify(outcomes, angles) -> Verdict:
    m = angle_multiple(angles)
    return Verdict.ACCEPT if parity(outcomes) == m % 2 else Verdict.REJECT


def run_verification_subround(state: DensityState, counters: VerifierCounters,
                              voting_agent: int, anon, rng: np.random.Generator):
    """One verification sub-subround; returns ``(result, updated_counters)``."""
    verifier = anon.random_agent(voting_agent)
    angles = np.asarray(anon.send(verifier, gen_angles(state.n_qubits, rng)))
    outcomes = sample_measurement(state, angles, rng)
    verdict = verify(outcomes, angles)
    return VerificationResult(verdict, verifier, angles, outcomes), counters.record(verifier, verdict)


def failure_rates(counters: VerifierCounters) -> np.ndarray:
    """r_j / t_j per agent, with 0 for agents that never verified."""
    t = counters.trials
    return np.divide(counters.rejections, t, out=np.zeros(t.shape, dtype=float), where=t > 0)
