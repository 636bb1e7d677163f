import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import ScriptedRng
from qvote.anon import AnonConfig, AnonLayer
from qvote.errors import ContractError
from qvote.quantum_sim import NoiseModel, apply_noise, make_ghz, maximally_mixed, sample_measurement
from qvote.verification import (Verdict, VerifierCounters, angle_multiple, failure_rates,
                                gen_angles, run_verification_subround, verify)


class FixedVerifier:
    """Anon layer stand-in that always picks the same verifier."""

    def __init__(self, verifier):
        self.verifier = verifier

    def random_agent(self, secret_agent):
        return self.verifier

    def send(self, sender, values):
        return values


def test_gen_angles_two_agents():
    angles = gen_angles(2, ScriptedRng(uniform=[[0.3]]))
    assert angles[1] == pytest.approx(np.pi - 0.3, abs=1e-15)
    assert angles.sum() == pytest.approx(np.pi, abs=1e-12)


def test_gen_angles_all_zero():
    angles = gen_angles(4, ScriptedRng(uniform=[[0.0, 0.0, 0.0]]))
    assert np.array_equal(angles, np.zeros(4))
    assert angle_multiple(angles) == 0


def test_gen_angles_sum_is_multiple_of_pi(rng):
    for _ in range(10_000):
        n = int(rng.integers(2, 8))
        a = gen_angles(n, rng)
        assert np.all((a >= 0) & (a < np.pi))
        r = a.sum() % np.pi
        assert min(r, np.pi - r) < 1e-9


def test_gen_angles_needs_two_agents(rng):
    with pytest.raises(ContractError):
        gen_angles(1, rng)


def test_verify_examples():
    assert verify([1, 0, 0, 0], np.zeros(4)) is Verdict.REJECT
    assert verify([1, 1, 0, 0], np.zeros(4)) is Verdict.ACCEPT
    assert verify([1, 0], [0.3, np.pi - 0.3]) is Verdict.ACCEPT
    with pytest.raises(ContractError):
        verify([0, 0], [0.1, 0.2])


@given(st.lists(st.integers(0, 1), min_size=2, max_size=6), st.integers(0, 2 ** 31))
def test_verify_is_pure(outcomes, seed):
    angles = gen_angles(len(outcomes), np.random.default_rng(seed))
    assert verify(outcomes, angles) is verify(list(outcomes), angles.copy())


def test_ideal_samples_always_accept(rng):
    for n in (2, 3, 4, 5):
        for _ in range(200):
            a = gen_angles(n, rng)
            assert verify(sample_measurement(make_ghz(n), a, rng), a) is Verdict.ACCEPT


def test_maximally_mixed_accepts_half(rng):
    rounds = 100_000
    state = maximally_mixed(4)
    shots = sample_measurement(state, np.zeros(4), rng, shots=rounds)
    accept = np.mean(shots.sum(axis=1) % 2 == 0)
    assert abs(accept - 0.5) <= 3 * 0.5 / np.sqrt(rounds)


def test_subround_with_ideal_source_never_rejects(rng):
    anon = AnonLayer(AnonConfig(4, 2), rng=rng)
    counters = VerifierCounters.zeros(4)
    for _ in range(1000):
        result, counters = run_verification_subround(make_ghz(4), counters, 2, anon, rng)
        assert result.verdict is Verdict.ACCEPT
    assert counters.trials.sum() == 1000
    assert not counters.rejections.any()


def test_subround_bookkeeping_scripted_verifier(rng):
    counters = VerifierCounters.zeros(4)
    state = maximally_mixed(4)
    for i in range(50):
        result, new = run_verification_subround(state, counters, 0, FixedVerifier(1), rng)
        assert result.verifier == 1
        assert new.trials.tolist() == [0, i + 1, 0, 0]
        assert np.all(new.trials >= counters.trials)
        assert np.all(new.rejections >= counters.rejections)
        assert new.rejections[1] - counters.rejections[1] == (result.verdict is Verdict.REJECT)
        counters = new
    assert counters.rejections[[0, 2, 3]].sum() == 0


def test_noise_rejection_law(rng):
    p = 0.2
    state = apply_noise(make_ghz(4), NoiseModel.white(p))
    anon = AnonLayer(AnonConfig(4, 1), rng=rng)
    counters = VerifierCounters.zeros(4)
    rounds = 10_000
    for _ in range(rounds):
        _, counters = run_verification_subround(state, counters, 0, anon, rng)
    rate = counters.rejections.sum() / rounds
    assert abs(rate - p / 2) <= 3 * np.sqrt(p / 2 * (1 - p / 2) / rounds)


def test_failure_rates_examples():
    c = VerifierCounters(np.array([5, 3, 2, 7]), np.zeros(4, dtype=int))
    assert failure_rates(c).tolist() == [0, 0, 0, 0]
    c = VerifierCounters(np.array([4, 0, 1, 1]), np.array([1, 0, 0, 0]))
    assert failure_rates(c).tolist() == [0.25, 0, 0, 0]


@given(st.lists(st.tuples(st.integers(0, 50), st.integers(0, 50)), min_size=2, max_size=8))
def test_failure_rates_in_unit_interval(pairs):
    t = np.array([max(a, b) for a, b in pairs])
    r = np.array([min(a, b) for a, b in pairs])
    d = failure_rates(VerifierCounters(t, r))
    assert np.all((d >= 0) & (d <= 1))


def test_counters_reject_invalid():
    with pytest.raises(ContractError):
        VerifierCounters(np.array([1, 1]), np.array([2, 0]))
    with pytest.raises(ContractError):
        VerifierCounters(np.array([1, 1]), np.array([0]))
