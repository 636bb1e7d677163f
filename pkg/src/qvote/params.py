"""Security-parameter planning: soundness bound, sample counts, privacy and PE rounds.

Symbols: ``epsilon`` is the verification distance, ``delta`` the rejection
threshold, ``coin_count`` M (voting probability 2**-M), ``n_agents`` N.
The soundness bound is only informative for ``epsilon > 2 * delta``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

from .errors import ContractError, InfeasibleError

log = logging.getLogger(__name__)

EPSILON_STEP = 1e-3


class SoundnessBound(NamedTuple):
    value: float
    vacuous: bool


def _clamp01(x: float, what: str) -> float:
    if x < 0.0 or x > 1.0:
        log.debug("clamping %s=%r into [0, 1]", what, x)
        return min(1.0, max(0.0, x))
    return x


def soundness_bound(epsilon: float, delta: float, coin_count: int, n_agents: int) -> SoundnessBound:
    """Upper bound on the chance of not aborting with a state epsilon-far from GHZ."""
    if epsilon <= 0 or n_agents < 1:
        raise ContractError("need epsilon > 0 and n_agents >= 1")
    gap = epsilon ** 2 - 4 * delta ** 2
    if gap <= 0:
        log.debug("soundness bound vacuous: epsilon=%r <= 2*delta=%r", epsilon, 2 * delta)
        return SoundnessBound(1.0, True)
    value = math.exp(-(2.0 ** coin_count) * gap / (16 * n_agents * epsilon ** 2))
    return SoundnessBound(_clamp01(value, "soundness bound"), False)


def min_samples(target_p: float, epsilon: float, delta: float, n_agents: int) -> float:
    """Smallest 2**M for which the soundness bound drops to ``target_p``."""
    if not 0 < target_p <= 1:
        raise ContractError(f"target probability must lie in (0, 1], got {target_p}")
    gap = epsilon ** 2 - 4 * delta ** 2
    if gap <= 0:
        raise InfeasibleError(
            f"epsilon={epsilon} must exceed 2*delta={2 * delta}", constraint="soundness"
        )
    return 16 * n_agents * epsilon ** 2 * math.log(1 / target_p) / gap


def min_coin_count(target_p: float, epsilon: float, delta: float, n_agents: int) -> int:
    samples = min_samples(target_p, epsilon, delta, n_agents)
    m = 0 if samples <= 1 else math.ceil(math.log2(samples))
    # guard the ceil against log2 rounding either way
    while m > 0 and soundness_bound(epsilon, delta, m - 1, n_agents).value <= target_p:
        m -= 1
    while soundness_bound(epsilon, delta, m, n_agents).value > target_p:
        m += 1
    return m


def success_prob(delta: float, pe_rounds: int, n_agents: int, literal_four: bool = False) -> float:
    """Lower bound on the probability that no subround trips the threshold.

    ``literal_four`` uses the exponent 4 as printed for the four-party experiment
    instead of N.
    """
    if pe_rounds < 1:
        raise ContractError("pe_rounds must be >= 1")
    exponent = 4 if literal_four else n_agents
    return _clamp01(((1 - delta) ** exponent) ** pe_rounds, "success probability")


def privacy_zeta(eta: float, epsilon: float, n_agents: int) -> float:
    honest = (1 - eta) ** n_agents
    value = honest * epsilon * math.sqrt(1 + epsilon ** 2) + (1 - honest)
    return _clamp01(value, "zeta")


def pe_rounds(zeta: float, zeta_wanted: float) -> int:
    """Privacy-enhancement rounds needed so that zeta**rounds <= zeta_wanted."""
    if not 0 < zeta_wanted < 1:
        raise ContractError(f"zeta_wanted must lie in (0, 1), got {zeta_wanted}")
    if zeta >= 1:
        raise InfeasibleError(f"zeta={zeta} >= 1 cannot be amplified", constraint="privacy")
    if zeta <= 0:
        return 1
    ratio = math.log(zeta_wanted) / math.log(zeta)
    return max(1, math.ceil(ratio - 1e-12))


@dataclass
class SecurityPlan:
    delta: float
    n_agents: int
    n_candidates: int
    target_confidence: float
    target_zeta: float
    epsilon: float
    coin_count: int
    pe_rounds: int
    soundness: float
    confidence: float
    success: float
    zeta: float
    cost: int
    tradeoff: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def table(self) -> str:
        lines = [f"{'epsilon':>8} {'M':>4} {'Pi':>5} {'zeta':>8} {'cost':>10}"]
        for row in self.tradeoff:
            lines.append(
                f"{row['epsilon']:8.3f} {row['coin_count']:4d} {row['pe_rounds']:5d} "
                f"{row['zeta']:8.4f} {row['cost']:10d}"
            )
        return "\n".join(lines)


def _epsilon_grid(delta: float, step: float):
    start = math.floor(2 * delta / step) + 1
    stop = round(1 / step)
    return [i * step for i in range(start, stop + 1)]


def evaluate(epsilon, delta, n_agents, target_confidence, target_zeta, n_candidates=2):
    """Parameters implied by a fixed epsilon, or None when privacy cannot be reached."""
    target_p = 1 - target_confidence
    if target_p >= 1:
        m = 0
    else:
        m = min_coin_count(target_p, epsilon, delta, n_agents)
    eta = soundness_bound(epsilon, delta, m, n_agents).value
    zeta = privacy_zeta(eta, epsilon, n_agents)
    if zeta >= 1:
        return None
    rounds = pe_rounds(zeta, target_zeta)
    k = max(1, math.ceil(math.log2(n_candidates)))
    return {
        "epsilon": epsilon,
        "coin_count": m,
        "pe_rounds": rounds,
        "soundness": eta,
        "zeta": zeta,
        "cost": (2 ** m) * rounds * k,
    }


def plan(measured_delta: float, n_agents: int, target_confidence: float, target_zeta: float,
         n_candidates: int = 2, epsilon: float | None = None,
         step: float = EPSILON_STEP) -> SecurityPlan:
    """Cheapest (2**M * Pi * K) parameter set meeting the confidence and privacy targets.

    Scans epsilon over the grid ``(2*delta, 1]`` unless ``epsilon`` is given.
    Ties go to the smallest epsilon.
    """
    if not 0 <= target_confidence < 1:
        raise ContractError(f"target confidence must lie in [0, 1), got {target_confidence}")
    if not 0 <= measured_delta < 0.5:
        raise InfeasibleError(
            f"delta={measured_delta} leaves no epsilon in (2*delta, 1]", constraint="soundness"
        )
    grid = [epsilon] if epsilon is not None else _epsilon_grid(measured_delta, step)
    rows = [
        r for r in (
            evaluate(e, measured_delta, n_agents, target_confidence, target_zeta, n_candidates)
            for e in grid
        ) if r is not None
    ]
    if not rows:
        raise InfeasibleError(
            "no epsilon gives zeta < 1; privacy target unreachable", constraint="privacy"
        )
    best = min(rows, key=lambda r: (r["cost"], r["epsilon"]))
    stride = max(1, len(rows) // 20)
    return SecurityPlan(
        delta=measured_delta,
        n_agents=n_agents,
        n_candidates=n_candidates,
        target_confidence=target_confidence,
        target_zeta=target_zeta,
        epsilon=best["epsilon"],
        coin_count=best["coin_count"],
        pe_rounds=best["pe_rounds"],
        soundness=best["soundness"],
        confidence=1 - best["soundness"],
        success=success_prob(measured_delta, best["pe_rounds"], n_agents),
        zeta=best["zeta"],
        cost=best["cost"],
        tradeoff=rows[::stride],
    )
