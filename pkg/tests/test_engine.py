import dataclasses
import itertools

import numpy as np
import pytest

from conftest import ScriptedRng
from qvote.anon import AnonConfig, AnonLayer
from qvote.engine import (BulletinBoard, ElectionConfig, Gate, SubBulletin, SubroundLabel,
                          VoterPrivateState, compute_election_vectors, compute_tally,
                          decode_votes, digit_count, gate_subround, run_election, run_pools,
                          threshold_exceeded, voting_subround)
from qvote.errors import ConfigError, ContractError, RetryCapAbort, ThresholdAbort
from qvote.quantum_sim import GHZSource, NoiseModel, make_ghz, parity
from qvote.verification import VerifierCounters

ONE_BLOCK_BOARD = [[1, 1, 1, 0], [1, 0, 1, 1], [1, 1, 1, 1], [0, 1, 0, 1]]


def small(votes=(1, 1, 0, 0), **kw):
    base = dict(n_agents=len(votes), n_candidates=2, votes=votes, pe_rounds=1, coin_count=2,
                anon_security=2, seed=1)
    base.update(kw)
    return ElectionConfig(**base)


def test_digit_count():
    assert [digit_count(c) for c in (2, 3, 4, 5, 16, 17)] == [1, 2, 2, 3, 4, 5]


def test_config_validation():
    with pytest.raises(ConfigError):
        small(votes=(2, 0, 0, 0))
    with pytest.raises(ConfigError):
        small(votes=(1, 0), n_agents=3)
    with pytest.raises(ConfigError):
        small(pe_rounds=0)
    with pytest.raises(ConfigError):
        small(failure_threshold=1.0)
    with pytest.raises(ConfigError):
        small(coin_count=-1)


def test_full_scale_configs_accepted():
    cfg = ElectionConfig(4, 2, (1, 1, 0, 0), pe_rounds=9, coin_count=13, failure_threshold=0.0376)
    assert cfg.digit_rounds == 1 and not cfg.has_invalid_codes
    pools = [
        ElectionConfig(4, 16, (3, 9, 10, 1), coin_count=13, failure_threshold=0.036),
        ElectionConfig(4, 16, (0, 13, 11, 9), coin_count=12, failure_threshold=0.0405),
    ]
    assert all(c.digit_rounds == 4 for c in pools)
    assert ElectionConfig(4, 3, (0, 1, 2, 0)).has_invalid_codes


def test_ideal_election_tally():
    res = run_election(small())
    assert res.tally.counts.tolist() == [2, 2]
    assert sorted(res.secret_indices.tolist()) == [1, 2, 3, 4]
    slot_votes = np.array([1, 1, 0, 0])[np.argsort(res.secret_indices)]
    assert np.array_equal(res.tally.election_vector, slot_votes)


def test_all_zero_votes():
    res = run_election(small(votes=(0, 0, 0, 0), pe_rounds=3))
    assert res.tally.election_vector.tolist() == [0, 0, 0, 0]
    assert res.tally.counts.tolist() == [4, 0]


@pytest.mark.parametrize("seed", range(20))
def test_correctness_on_ideal_source(seed):
    r = np.random.default_rng(seed)
    c = int(r.choice([2, 4]))
    votes = tuple(int(v) for v in r.integers(0, c, 4))
    cfg = small(votes=votes, n_candidates=c, pe_rounds=int(r.integers(1, 4)), seed=seed)
    res = run_election(cfg)
    assert sorted(res.tally.election_vector.tolist()) == sorted(votes)
    assert res.tally.counts.sum() == 4
    assert np.array_equal(res.tally.counts, np.bincount(votes, minlength=c))


def test_honest_rows_carry_the_vote_bit():
    cfg = small(votes=(3, 1, 2, 0), n_candidates=4, seed=5)
    res = run_election(cfg)
    e, _ = compute_election_vectors(res.board)
    schedule = np.argsort(res.secret_indices)
    for k in range(2):
        for n in range(4):
            assert e[k, 0, n] == (cfg.votes[schedule[n]] >> k) & 1


@pytest.mark.parametrize("pe", [1, 2, 3])
@pytest.mark.parametrize("vote", [0, 1])
def test_pe_chain_independent_of_random_toggles(pe, vote):
    anon = AnonLayer(AnonConfig(4, 2), rng=np.random.default_rng(0))
    for r_bits in itertools.product((0, 1), repeat=pe - 1):
        voter = VoterPrivateState(agent=2, secret_index=1, vote=vote)
        rng = ScriptedRng(seed=sum(r_bits), integers=r_bits)
        total = 0
        for p in range(pe):
            out = voting_subround(SubroundLabel(0, p, 0), make_ghz(4), voter, pe, anon, rng)
            assert not out.aborted
            if p < pe - 1:
                assert out.toggle == r_bits[p]
            assert parity(out.row) == out.toggle
            voter.commit(0, out.toggle)
            total ^= parity(out.row)
        assert total == vote


def test_voting_row_parity_examples():
    anon = AnonLayer(AnonConfig(4, 2), rng=np.random.default_rng(0))
    rng = np.random.default_rng(1)
    for bit in (0, 1):
        for _ in range(20):
            voter = VoterPrivateState(0, 1, bit)
            out = voting_subround(SubroundLabel(0, 0, 0), make_ghz(4), voter, 1, anon, rng)
            assert parity(out.row) == bit


def test_tampered_row_aborts_and_never_enters_board():
    tampered = {}

    def flip_once(label, row):
        if label not in tampered:
            row[(label.n + 1) % 4] ^= 1
            tampered[label] = row.copy()
        return row

    res = run_election(small(votes=(1, 0, 1, 0), pe_rounds=2, seed=9), tamper=flip_once)
    assert res.stats.vote_aborts == len(tampered) == 8
    assert sorted(res.tally.election_vector.tolist()) == [0, 0, 1, 1]
    bits = res.board.array()
    for label, row in tampered.items():
        assert not np.array_equal(bits[label.k, label.p, label.n], row)


def test_persistent_tamper_hits_retry_cap():
    def always(label, row):
        row[0] ^= 1
        return row

    with pytest.raises(RetryCapAbort) as exc:
        run_election(small(subround_retry_cap=3), tamper=always)
    assert exc.value.reason == "retry_cap"
    assert exc.value.stats.vote_aborts == 4


def test_gate_always_votes_at_zero_coins(rng):
    anon = AnonLayer(AnonConfig(4, 4), rng=rng)
    assert all(gate_subround(1, 0, anon) is Gate.VOTE for _ in range(500))


@pytest.mark.slow
def test_gate_vote_frequency():
    anon = AnonLayer(AnonConfig(4, 4), rng=np.random.default_rng(77))
    trials = 1_000_000
    votes = sum(gate_subround(0, 13, anon) is Gate.VOTE for _ in range(trials))
    q = 2.0 ** -13 * (1 - 2.0 ** -16)
    assert abs(votes / trials - q) <= 3 * np.sqrt(q * (1 - q) / trials)


def test_threshold_check():
    c = VerifierCounters(np.array([20, 3, 0, 1]), np.array([1, 0, 0, 0]))
    assert threshold_exceeded(c, 0.0376)
    assert not threshold_exceeded(c, 0.05)


def test_threshold_restart_resets_counters():
    cfg = small(noise=NoiseModel.white(0.5), coin_count=3, seed=4)
    res = run_election(cfg)
    events = res.stats.events
    restarts = [i for i, e in enumerate(events) if e["subround_type"] == "threshold_restart"]
    assert restarts, "expected at least one restart at 25% rejection"
    for i in restarts:
        nxt = next((e for e in events[i + 1:] if e["subround_type"] == "verification"), None)
        if nxt is not None and (nxt["k"], nxt["p"], nxt["n"]) == (
                events[i]["k"], events[i]["p"], events[i]["n"]):
            d = np.array(nxt["deltas"])
            assert np.count_nonzero(d) <= 1 and set(d.tolist()) <= {0.0, 1.0}
    for e in events:
        if e["subround_type"] == "vote":
            assert max(e["deltas"]) <= cfg.failure_threshold


def test_corrupt_source_aborts_on_threshold():
    cfg = small(coin_count=3, threshold_restart_cap=2, seed=3)
    source = GHZSource(4, NoiseModel.white(1.0))
    with pytest.raises(ThresholdAbort) as exc:
        run_election(cfg, source=source)
    assert exc.value.reason == "threshold"
    assert exc.value.stats.threshold_restarts == 3


def test_determinism():
    cfg = small(votes=(1, 0, 1, 1), pe_rounds=2, noise=NoiseModel.white(0.05), seed=11)
    a, b = run_election(cfg), run_election(cfg)
    assert np.array_equal(a.board.array(), b.board.array())
    assert a.tally.to_dict() == b.tally.to_dict()
    assert a.stats == b.stats
    c = run_election(dataclasses.replace(cfg, seed=12))
    assert a.stats != c.stats


def test_single_block_election_vector():
    board = BulletinBoard.from_array([[ONE_BLOCK_BOARD]])
    e, f = compute_election_vectors(board)
    assert e[0, 0].tolist() == [1, 1, 0, 0]
    assert compute_tally(f, 2).counts.tolist() == [2, 2]


def test_all_zero_board():
    e, f = compute_election_vectors(BulletinBoard.from_array(np.zeros((2, 3, 4, 4))))
    assert not e.any() and not f.any()


def test_incomplete_board_rejected():
    board = BulletinBoard(4, 1, 2)
    board.publish(0, 0, SubBulletin(np.zeros((4, 4), dtype=np.int8), np.ones(4, dtype=bool)))
    with pytest.raises(ContractError):
        compute_election_vectors(board)
    sub = SubBulletin.empty(4)
    sub.put(0, [1, 0, 0, 0])
    with pytest.raises(ContractError):
        sub.put(0, [1, 0, 0, 0])
    with pytest.raises(ContractError):
        board.publish(0, 1, sub)


def test_lsb_first_decoding():
    f = np.array([[1, 1, 0, 0], [1, 0, 0, 1], [0, 1, 0, 1], [1, 0, 0, 0]])
    assert decode_votes(f).tolist() == [3, 9, 10, 1]


def test_invalid_codes_are_counted():
    t = compute_tally(np.array([[1, 1], [0, 1], [0, 0], [1, 0]]), 3)
    assert t.counts.tolist() == [1, 1, 1]
    assert t.invalid == 1
    assert t.election_vector.tolist() == [3, 2, 0, 1]


def test_run_pools_rejects_mismatched_candidates():
    with pytest.raises(ConfigError):
        run_pools([small(), small(votes=(0, 1, 2, 3), n_candidates=4)])
    with pytest.raises(ConfigError):
        run_pools([])


def test_run_pools_merges():
    pools = [small(votes=(3, 9, 10, 1), n_candidates=16, seed=1, name="a"),
             small(votes=(0, 13, 11, 9), n_candidates=16, seed=2, name="b")]
    res = run_pools(pools)
    assert res.merged.sum() == 8
    assert np.array_equal(res.merged, np.bincount([3, 9, 10, 1, 0, 13, 11, 9], minlength=16))
    parallel = run_pools(pools, max_workers=2)
    assert np.array_equal(parallel.merged, res.merged)
    assert all(a.stats == b.stats for a, b in zip(res.pools, parallel.pools))
    single = run_pools(pools[:1])
    assert np.array_equal(single.merged, single.pools[0].tally.counts)
