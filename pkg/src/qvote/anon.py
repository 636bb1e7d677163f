"""Classical anonymity subroutines built on a parity-based LogicalOR.

Every agent is honest here; deviations are modelled through the transport
(see ``LossyChannels``) or by the engine's tamper hook. Shares are laid out
as ``shares[..., i, j]`` = bit sent by agent ``i`` to agent ``j``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AnonAbort, ConfigError, ContractError, TransportError

UNIQUE_INDEX_ROUND_CAP = 10_000
UNIQUE_INDEX_COLLISION_CAP = 1_000
RANDOM_AGENT_REDRAW_CAP = 1_000
UNIQUE_INDEX_RESTART_CAP = 10


@dataclass(frozen=True)
class AnonConfig:
    n_agents: int
    security_parameter: int = 4

    def __post_init__(self):
        if self.n_agents < 2:
            raise ConfigError(f"need at least 2 agents, got {self.n_agents}")
        if self.security_parameter < 1:
            raise ConfigError(f"security parameter must be >= 1, got {self.security_parameter}")

    @property
    def repetitions(self) -> int:
        return self.n_agents * self.security_parameter


class PrivateChannels:
    """Authenticated private pairwise channels that always deliver."""

    def __init__(self):
        self.bits_sent = 0

    def exchange(self, shares: np.ndarray) -> np.ndarray:
        self.bits_sent += shares.size
        return shares

    def send(self, sender: int, values):
        self.bits_sent += len(values)
        return values


class LossyChannels(PrivateChannels):
    """Channels where each exchange fails outright with probability ``fail_prob``."""

    def __init__(self, fail_prob: float, rng: np.random.Generator):
        super().__init__()
        self.fail_prob = fail_prob
        self.rng = rng

    def exchange(self, shares):
        if self.rng.random() < self.fail_prob:
            raise TransportError("pairwise exchange dropped")
        return super().exchange(shares)


def make_orderings(n_agents: int, rng: np.random.Generator) -> np.ndarray:
    """N announcement orderings, each ending with a different agent."""
    last = rng.permutation(n_agents)
    keys = rng.random((n_agents, n_agents))
    keys[np.arange(n_agents), last] = 2.0  # sorts after every uniform key
    return np.argsort(keys, axis=1)


def check_orderings(orderings: np.ndarray) -> None:
    n = orderings.shape[0]
    if orderings.shape != (n, n):
        raise ContractError("need N orderings of N agents")
    for row in orderings:
        if sorted(row.tolist()) != list(range(n)):
            raise ContractError(f"ordering {row.tolist()} is not a permutation")
    if len(set(orderings[:, -1].tolist())) != n:
        raise ContractError("orderings must have pairwise distinct last participants")


def _split_shares(private_bits: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Random shares whose XOR along the last axis equals ``private_bits``."""
    n = private_bits.shape[-1]
    shares = rng.integers(0, 2, size=private_bits.shape + (n,), dtype=np.int8)
    fix = np.bitwise_xor.reduce(shares[..., :-1], axis=-1) ^ private_bits
    shares[..., -1] = fix
    return shares


@dataclass
class ParityRoundTranscript:
    private_bits: np.ndarray
    shares: np.ndarray
    ordering: np.ndarray
    announced: np.ndarray
    result: int

    def check(self) -> None:
        """Raise ContractError if any share/announcement relation is broken."""
        rows = np.bitwise_xor.reduce(self.shares, axis=1)
        bad = np.flatnonzero(rows != self.private_bits)
        if bad.size:
            raise ContractError(f"shares of agents {bad.tolist()} do not XOR to their private bit")
        if not np.array_equal(np.bitwise_xor.reduce(self.shares, axis=0), self.announced):
            raise ContractError("announced values are not the column XORs of the shares")
        if self.result != int(np.bitwise_xor.reduce(self.announced)):
            raise ContractError("result is not the XOR of the announcements")
        if self.result != int(np.bitwise_xor.reduce(self.private_bits)):
            raise ContractError("result differs from the parity of the private bits")

    def public(self) -> list[tuple[int, int]]:
        """(agent, z_j) pairs in announcement order; all an observer sees."""
        return [(int(j), int(self.announced[j])) for j in self.ordering]

    def to_dict(self) -> dict:
        return {
            "private_bits": self.private_bits.tolist(),
            "shares": self.shares.tolist(),
            "ordering": self.ordering.tolist(),
            "announced": self.announced.tolist(),
            "result": self.result,
        }


def parity_round(private_bits, ordering, transport, rng) -> ParityRoundTranscript:
    p = np.asarray(private_bits, dtype=np.int8)
    shares = _split_shares(p, rng)
    try:
        delivered = transport.exchange(shares)
    except TransportError as exc:
        raise AnonAbort(f"parity round aborted: {exc}") from exc
    announced = np.bitwise_xor.reduce(delivered, axis=0)
    return ParityRoundTranscript(
        private_bits=p,
        shares=delivered,
        ordering=np.asarray(ordering),
        announced=announced,
        result=int(np.bitwise_xor.reduce(announced)),
    )


@dataclass
class OrRepetitions:
    """Per-repetition private bits and parities of one LogicalOR run."""

    orderings: np.ndarray     # (N, N); repetition r uses orderings[r // S]
    private_bits: np.ndarray  # (N*S, N)
    announced: np.ndarray     # (N*S, N)
    parities: np.ndarray      # (N*S,)

    @property
    def output(self) -> int:
        return int(self.parities.any())


def or_repetitions(inputs, config: AnonConfig, transport, rng) -> OrRepetitions:
    """Run all N*S parity rounds of a LogicalOR in one vectorised pass."""
    x = np.asarray(inputs, dtype=np.int8)
    n = config.n_agents
    if x.shape != (n,):
        raise ContractError(f"expected {n} inputs, got shape {x.shape}")
    orderings = make_orderings(n, rng)
    reps = config.repetitions
    private = rng.integers(0, 2, size=(reps, n), dtype=np.int8) & x
    shares = _split_shares(private, rng)
    try:
        delivered = transport.exchange(shares)
    except TransportError as exc:
        raise AnonAbort(f"LogicalOR aborted: {exc}") from exc
    announced = np.bitwise_xor.reduce(delivered, axis=1)
    return OrRepetitions(orderings, private, announced, np.bitwise_xor.reduce(announced, axis=1))


def logical_or(inputs, config: AnonConfig, transport, rng) -> int:
    return or_repetitions(inputs, config, transport, rng).output


def random_bit(secret_agent: int, q: float, config: AnonConfig, transport, rng) -> int:
    """The secret agent announces a Bernoulli(q) bit; everybody else inputs 0."""
    x = np.zeros(config.n_agents, dtype=np.int8)
    x[secret_agent] = rng.random() < q
    return logical_or(x, config, transport, rng)


def index_bits(n_agents: int) -> int:
    return max(1, math.ceil(math.log2(n_agents)))


def random_agent(secret_agent: int, config: AnonConfig, transport, rng,
                 redraw_cap: int = RANDOM_AGENT_REDRAW_CAP) -> int:
    """The secret agent picks a uniform agent index and announces it bit by bit (MSB first).

    Values outside ``[0, N)`` are publicly re-drawn, which keeps the result
    exactly uniform when N is not a power of two.
    """
    n = config.n_agents
    k_bits = index_bits(n)
    for _ in range(redraw_cap):
        value = 0
        for _ in range(k_bits):
            x = np.zeros(n, dtype=np.int8)
            x[secret_agent] = rng.integers(0, 2)
            value = (value << 1) | logical_or(x, config, transport, rng)
        if value < n:
            return value
    raise AnonAbort(f"RandomAgent exceeded {redraw_cap} re-draws")


def unique_index(config: AnonConfig, transport, rng,
                 round_cap: int = UNIQUE_INDEX_ROUND_CAP,
                 collision_cap: int = UNIQUE_INDEX_COLLISION_CAP,
                 restart_cap: int = UNIQUE_INDEX_RESTART_CAP) -> np.ndarray:
    """Assign every agent a distinct secret index in 1..N (0 means unassigned).

    In round R each of the ``N - R + 1`` still unassigned agents claims with
    probability ``1 / (N - R + 1)``. A claimant detects a collision when some
    repetition of the LogicalOR has parity different from its own private
    bit, i.e. another agent also contributed a 1.

    A collision slips through with probability ``2**-(N*S)``, and any such
    duplicate eventually leaves nobody holding index 0. Before every later
    round and at the end, the agents therefore run a LogicalOR over their
    "still unassigned" flags; a zero result exposes the duplicate and the
    whole assignment is redone.
    """
    for _ in range(restart_cap):
        omega = _claim_rounds(config, transport, rng, round_cap, collision_cap)
        if omega is not None:
            return omega
    raise AnonAbort(f"UniqueIndex restarted {restart_cap} times without a valid assignment")


def _claim_rounds(config, transport, rng, round_cap, collision_cap):
    n = config.n_agents
    omega = np.zeros(n, dtype=np.int64)
    for rnd in range(1, n + 1):
        unassigned = (omega == 0).astype(np.int8)
        if rnd > 1 and not logical_or(unassigned, config, transport, rng):
            return None
        if rnd == n:
            omega[unassigned.astype(bool)] = n
            return omega
        remaining = n - rnd + 1
        empty_tries = collisions = 0
        while True:
            x = (unassigned & (rng.random(n) < 1.0 / remaining)).astype(np.int8)
            reps = or_repetitions(x, config, transport, rng)
            if not reps.output:
                empty_tries += 1
                if empty_tries >= round_cap:
                    raise AnonAbort(f"UniqueIndex round {rnd}: no claimant after {round_cap} tries")
                continue
            others = reps.parities[:, None] ^ reps.private_bits
            c = (x & others.any(axis=0)).astype(np.int8)
            if logical_or(c, config, transport, rng):
                collisions += 1
                if collisions >= collision_cap:
                    raise AnonAbort(f"UniqueIndex round {rnd}: {collision_cap} collisions")
                continue
            omega[x.astype(bool)] = rnd
            break


@dataclass
class AnonLayer:
    """Bundles the configuration, channels and random stream of one election."""

    config: AnonConfig
    transport: object = field(default_factory=PrivateChannels)
    rng: np.random.Generator = field(default_factory=np.random.default_rng)
    or_calls: int = 0

    def logical_or(self, inputs) -> int:
        self.or_calls += 1
        return logical_or(inputs, self.config, self.transport, self.rng)

    def random_bit(self, secret_agent: int, q: float) -> int:
        self.or_calls += 1
        return random_bit(secret_agent, q, self.config, self.transport, self.rng)

    def random_agent(self, secret_agent: int) -> int:
        self.or_calls += index_bits(self.config.n_agents)
        return random_agent(secret_agent, self.config, self.transport, self.rng)

    def unique_index(self) -> np.ndarray:
        return unique_index(self.config, self.transport, self.rng)

    def send(self, sender: int, values):
        try:
            return self.transport.send(sender, values)
        except TransportError as exc:
            raise AnonAbort(f"private send from agent {sender} failed: {exc}") from exc
