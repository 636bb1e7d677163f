"""End-to-end election: secret ordering, gated verification/voting subrounds, bulletin, tally.

Indexing inside this module is zero-based: agents 0..N-1, candidates
0..C-1, digit ``k`` in 0..K-1 (k = 0 is the least significant bit), PE
round ``p`` in 0..Pi-1 and slot ``n`` in 0..N-1. Secret indices returned by
UniqueIndex are 1..N; slot ``n`` is voted by the agent holding index n+1.
"""
from __future__ import annotations

import enum
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .anon import AnonConfig, AnonLayer, PrivateChannels
from .errors import AnonAbort, ConfigError, ContractError, RetryCapAbort, ThresholdAbort
from .quantum_sim import GHZSource, NoiseModel, parity, sample_measurement
from .verification import Verdict, VerifierCounters, failure_rates, run_verification_subround

SUBROUND_RETRY_CAP = 1_000
THRESHOLD_RESTART_CAP = 100


def digit_count(n_candidates: int) -> int:
    return max(1, math.ceil(math.log2(n_candidates)))


@dataclass(frozen=True)
class ElectionConfig:
    n_agents: int
    n_candidates: int
    votes: tuple
    pe_rounds: int = 1
    coin_count: int = 4
    failure_threshold: float = 0.0376
    anon_security: int = 4
    noise: NoiseModel = NoiseModel()
    seed: int = 0
    name: str = "pool"
    subround_retry_cap: int = SUBROUND_RETRY_CAP
    threshold_restart_cap: int = THRESHOLD_RESTART_CAP

    def __post_init__(self):
        object.__setattr__(self, "votes", tuple(int(v) for v in self.votes))
        if not 2 <= self.n_agents <= 10:
            raise ConfigError(f"n_agents must be in [2, 10], got {self.n_agents}")
        if self.n_candidates < 2:
            raise ConfigError(f"n_candidates must be >= 2, got {self.n_candidates}")
        if len(self.votes) != self.n_agents:
            raise ConfigError(f"votes has {len(self.votes)} entries for {self.n_agents} agents")
        for i, v in enumerate(self.votes):
            if not 0 <= v < self.n_candidates:
                raise ConfigError(f"votes[{i}]={v} outside [0, {self.n_candidates - 1}]")
        if self.pe_rounds < 1:
            raise ConfigError(f"pe_rounds must be >= 1, got {self.pe_rounds}")
        if self.coin_count < 0:
            raise ConfigError(f"coin_count must be >= 0, got {self.coin_count}")
        if not 0 < self.failure_threshold < 1:
            raise ConfigError(f"failure_threshold must lie in (0, 1), got {self.failure_threshold}")
        if self.anon_security < 1:
            raise ConfigError(f"anon_security must be >= 1, got {self.anon_security}")
        if self.subround_retry_cap < 1 or self.threshold_restart_cap < 1:
            raise ConfigError("retry caps must be >= 1")

    @property
    def digit_rounds(self) -> int:
        return digit_count(self.n_candidates)

    @property
    def has_invalid_codes(self) -> bool:
        return 2 ** self.digit_rounds != self.n_candidates

    def vote_bit(self, agent: int, k: int) -> int:
        return (self.votes[agent] >> k) & 1


@dataclass(frozen=True)
class SubroundLabel:
    k: int
    p: int
    n: int


class Gate(enum.Enum):
    VERIFY = "verify"
    VOTE = "vote"


@dataclass
class VoterPrivateState:
    """What the voting agent keeps between PE rounds of one digit."""

    agent: int
    secret_index: int
    vote: int
    toggles: dict = field(default_factory=dict)  # k -> committed toggle bits, one per p

    def toggle_for(self, k: int, p: int, pe_rounds: int, rng) -> int:
        if p < pe_rounds - 1:
            return int(rng.integers(0, 2))
        history = 0
        for bit in self.toggles.get(k, []):
            history ^= bit
        return ((self.vote >> k) & 1) ^ history

    def commit(self, k: int, toggle: int) -> None:
        self.toggles.setdefault(k, []).append(toggle)


@dataclass
class SubBulletin:
    rows: np.ndarray
    filled: np.ndarray

    @classmethod
    def empty(cls, n_agents: int) -> "SubBulletin":
        return cls(np.zeros((n_agents, n_agents), dtype=np.int8), np.zeros(n_agents, dtype=bool))

    def put(self, n: int, row) -> None:
        if self.filled[n]:
            raise ContractError(f"row {n} of this sub-bulletin is already populated")
        self.rows[n] = row
        self.filled[n] = True

    @property
    def complete(self) -> bool:
        return bool(self.filled.all())


@dataclass
class BulletinBoard:
    """K x Pi grid of N x N sub-bulletins; a sub-bulletin is published once all N rows exist."""

    n_agents: int
    digit_rounds: int
    pe_rounds: int
    grid: list = field(default=None)

    def __post_init__(self):
        if self.grid is None:
            self.grid = [[None] * self.pe_rounds for _ in range(self.digit_rounds)]

    def publish(self, k: int, p: int, sub: SubBulletin) -> None:
        if not sub.complete:
            raise ContractError(f"sub-bulletin ({k}, {p}) published with missing rows")
        self.grid[k][p] = sub

    @property
    def complete(self) -> bool:
        return all(s is not None for row in self.grid for s in row)

    def array(self) -> np.ndarray:
        """(K, Pi, N, N) array of the published bits."""
        if not self.complete:
            raise ContractError("bulletin board is incomplete")
        return np.array([[s.rows for s in row] for row in self.grid], dtype=np.int8)

    @classmethod
    def from_array(cls, bits) -> "BulletinBoard":
        bits = np.asarray(bits, dtype=np.int8)
        k_rounds, pe, n, n2 = bits.shape
        if n != n2:
            raise ContractError("sub-bulletins must be square")
        board = cls(n, k_rounds, pe)
        for k in range(k_rounds):
            for p in range(pe):
                board.grid[k][p] = SubBulletin(bits[k, p].copy(), np.ones(n, dtype=bool))
        return board

    def to_dict(self) -> dict:
        return {
            "n_agents": self.n_agents,
            "digit_rounds": self.digit_rounds,
            "pe_rounds": self.pe_rounds,
            "grid": self.array().tolist(),
        }


@dataclass
class Tally:
    counts: np.ndarray
    election_vector: np.ndarray
    invalid: int = 0

    def to_dict(self) -> dict:
        return {
            "counts": self.counts.tolist(),
            "election_vector": self.election_vector.tolist(),
            "invalid": self.invalid,
        }


EVENT_TYPES = ("verification", "vote", "threshold_restart", "abort")


@dataclass
class RunStats:
    pool: str
    n_agents: int
    events: list = field(default_factory=list)
    threshold_restarts: int = 0
    vote_aborts: int = 0
    states_used: int = 0
    or_calls: int = 0
    invalid_votes: int = 0
    abort_reason: str | None = None
    wall_seconds: float = field(default=0.0, compare=False)

    def add(self, label: SubroundLabel, kind: str, deltas, verifier=None, verdict=None) -> None:
        self.events.append({
            "pool": self.pool,
            "k": label.k + 1,
            "p": label.p + 1,
            "n": label.n + 1,
            "subround_type": kind,
            "verifier": "" if verifier is None else verifier + 1,
            "verdict": "" if verdict is None else verdict,
            "deltas": [float(d) for d in deltas],
        })

    @property
    def verifications(self) -> int:
        return sum(e["subround_type"] == "verification" for e in self.events)

    @property
    def rejections(self) -> int:
        return sum(e["verdict"] == Verdict.REJECT.value for e in self.events)

    def summary(self) -> list[dict]:
        """One record per (k, p) block with pooled per-verifier rates over the whole block."""
        blocks: dict = {}
        for e in self.events:
            b = blocks.setdefault((e["k"], e["p"]), {
                "t": np.zeros(self.n_agents, dtype=np.int64),
                "r": np.zeros(self.n_agents, dtype=np.int64),
                "restarts": 0, "aborts": 0, "votes": 0,
            })
            kind = e["subround_type"]
            if kind == "verification":
                j = e["verifier"] - 1
                b["t"][j] += 1
                b["r"][j] += e["verdict"] == Verdict.REJECT.value
            elif kind == "threshold_restart":
                b["restarts"] += 1
            elif kind == "abort":
                b["aborts"] += 1
            elif kind == "vote":
                b["votes"] += 1
        out = []
        for (k, p), b in sorted(blocks.items()):
            t, r = b["t"], b["r"]
            out.append({
                "pool": self.pool, "k": k, "p": p,
                "verifications": int(t.sum()), "rejections": int(r.sum()),
                "threshold_restarts": b["restarts"], "aborts": b["aborts"], "votes": b["votes"],
                "pooled_delta": float(r.sum() / t.sum()) if t.sum() else 0.0,
                "deltas": failure_rates(VerifierCounters(t, r)).tolist(),
            })
        return out


@dataclass
class ElectionResult:
    config: ElectionConfig
    board: BulletinBoard
    tally: Tally
    stats: RunStats
    secret_indices: np.ndarray


def gate_subround(voting_agent: int, coin_count: int, anon) -> Gate:
    """Voting agent draws Bernoulli(2**-M) and announces it anonymously."""
    bit = anon.random_bit(voting_agent, 2.0 ** -coin_count)
    return Gate.VOTE if bit else Gate.VERIFY


def threshold_exceeded(counters: VerifierCounters, threshold: float) -> bool:
    return bool(np.any(failure_rates(counters) > threshold))


@dataclass
class VotingOutcome:
    row: np.ndarray
    toggle: int
    flags: np.ndarray
    aborted: bool


def voting_subround(label: SubroundLabel, state, voter: VoterPrivateState, pe_rounds: int,
                    anon, rng, tamper=None) -> VotingOutcome:
    """Hadamard-basis measurement, toggle by the voter, broadcast, abort check.

    The voter's toggle is a fresh random bit for every PE round but the
    last, where it is the vote bit XOR all earlier toggles. Every agent flags
    a mismatch between the broadcast entry and what it sent; the voter also
    flags when the row parity differs from its toggle. ``tamper`` may
    rewrite the broadcast row to model a deviating party.
    """
    n = state.n_qubits
    measured = sample_measurement(state, np.zeros(n), rng)
    toggle = voter.toggle_for(label.k, label.p, pe_rounds, rng)
    sent = measured.copy()
    sent[voter.agent] ^= toggle
    row = sent.copy() if tamper is None else np.asarray(tamper(label, sent.copy()), dtype=np.int8)
    flags = (row != sent).astype(np.int8)
    if parity(row) != toggle:
        flags[voter.agent] = 1
    aborted = bool(anon.logical_or(flags))
    return VotingOutcome(row, toggle, flags, aborted)


def compute_election_vectors(board: BulletinBoard):
    """Row parities E[k, p, n] and final bits F[n, k] = XOR over p."""
    bits = board.array()
    e = np.bitwise_xor.reduce(bits, axis=3)
    f = np.bitwise_xor.reduce(e, axis=1).T
    return e, f


def decode_votes(final_bits) -> np.ndarray:
    f = np.asarray(final_bits, dtype=np.int64)
    weights = 1 << np.arange(f.shape[1])
    return f @ weights


def compute_tally(final_bits, n_candidates: int) -> Tally:
    votes = decode_votes(final_bits)
    valid = votes < n_candidates
    counts = np.bincount(votes[valid], minlength=n_candidates)
    return Tally(counts, votes, int((~valid).sum()))


class Election:
    """One pool's protocol run; single-threaded and deterministic given the seed."""

    def __init__(self, config: ElectionConfig, source=None, transport=None, tamper=None):
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self.source = source if source is not None else GHZSource(config.n_agents, config.noise)
        self.anon = AnonLayer(
            AnonConfig(config.n_agents, config.anon_security),
            transport if transport is not None else PrivateChannels(),
            self.rng,
        )
        self.tamper = tamper
        self.stats = RunStats(config.name, config.n_agents)

    def _fail(self, exc_type, message):
        self.stats.abort_reason = exc_type.reason
        self.stats.or_calls = self.anon.or_calls
        return exc_type(message, self.stats)

    def run(self) -> ElectionResult:
        start = time.perf_counter()
        cfg = self.config
        try:
            omega = self.anon.unique_index()
        except AnonAbort as exc:
            raise self._fail(AnonAbort, str(exc)) from exc
        schedule = np.argsort(omega)  # schedule[n] = agent with secret index n+1
        voters = [VoterPrivateState(int(a), int(omega[a]), cfg.votes[a]) for a in range(cfg.n_agents)]
        board = BulletinBoard(cfg.n_agents, cfg.digit_rounds, cfg.pe_rounds)
        try:
            for k in range(cfg.digit_rounds):
                for p in range(cfg.pe_rounds):
                    sub = SubBulletin.empty(cfg.n_agents)
                    for n in range(cfg.n_agents):
                        label = SubroundLabel(k, p, n)
                        row = self._slot(label, voters[schedule[n]])
                        sub.put(n, row)
                    # rows of PE round p become public only now
                    board.publish(k, p, sub)
        except AnonAbort as exc:
            raise self._fail(AnonAbort, str(exc)) from exc
        finally:
            self.stats.wall_seconds = time.perf_counter() - start
        _, f = compute_election_vectors(board)
        tally = compute_tally(f, cfg.n_candidates)
        self.stats.invalid_votes = tally.invalid
        self.stats.or_calls = self.anon.or_calls
        return ElectionResult(cfg, board, tally, self.stats, omega)

    def _slot(self, label: SubroundLabel, voter: VoterPrivateState) -> np.ndarray:
        cfg = self.config
        restarts = aborts = 0
        while True:
            counters = VerifierCounters.zeros(cfg.n_agents)
            while gate_subround(voter.agent, cfg.coin_count, self.anon) is Gate.VERIFY:
                state = self._emit()
                result, counters = run_verification_subround(
                    state, counters, voter.agent, self.anon, self.rng
                )
                self.stats.add(label, "verification", failure_rates(counters),
                               result.verifier, result.verdict.value)
            deltas = failure_rates(counters)
            if threshold_exceeded(counters, cfg.failure_threshold):
                restarts += 1
                self.stats.threshold_restarts += 1
                self.stats.add(label, "threshold_restart", deltas)
                if restarts > cfg.threshold_restart_cap:
                    raise self._fail(ThresholdAbort, (
                        f"slot {label}: failure rate above {cfg.failure_threshold} "
                        f"after {cfg.threshold_restart_cap} restarts"))
                continue
            outcome = voting_subround(label, self._emit(), voter, cfg.pe_rounds,
                                      self.anon, self.rng, self.tamper)
            if outcome.aborted:
                aborts += 1
                self.stats.vote_aborts += 1
                self.stats.add(label, "abort", deltas)
                if aborts > cfg.subround_retry_cap:
                    raise self._fail(RetryCapAbort, (
                        f"slot {label}: voting aborted {cfg.subround_retry_cap} times"))
                continue
            voter.commit(label.k, outcome.toggle)
            self.stats.add(label, "vote", deltas)
            return outcome.row

    def _emit(self):
        self.stats.states_used += 1
        return self.source.emit()


def run_election(config: ElectionConfig, source=None, transport=None, tamper=None) -> ElectionResult:
    return Election(config, source, transport, tamper).run()


@dataclass
class PoolsResult:
    pools: list
    merged: np.ndarray


def _run_pool(config):
    return run_election(config)


def run_pools(configs, max_workers: int | None = None) -> PoolsResult:
    """Run independent pools and sum their tallies over the shared candidate space."""
    configs = list(configs)
    if not configs:
        raise ConfigError("need at least one pool")
    cands = {c.n_candidates for c in configs}
    if len(cands) != 1:
        raise ConfigError(f"pools disagree on the number of candidates: {sorted(cands)}")
    if max_workers and max_workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(_run_pool, configs))
    else:
        results = [run_election(c) for c in configs]
    merged = np.sum([r.tally.counts for r in results], axis=0)
    return PoolsResult(results, merged)
