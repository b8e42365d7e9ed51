import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twc.errors import (
    DimensionMismatch,
    NotInjective,
    NotIrreducible,
    OutOfRange,
    StructuralViolation,
    UnsupportedLimit,
)
from twc.memory import (
    IsdMemorySpec,
    JointMarkovNoise,
    MarkovNoise,
    MemoryChannelSpec,
    check_theorem9_hypotheses,
    entropy_rate,
    example8_joint_noise,
    example8_simulate,
    lemma3_outer,
    stationary_distribution,
    theorem10_region,
    theorem9_region,
)
from twc.region import region_hausdorff

HB01 = 0.46899559358928122
ONE_MINUS_HB01 = 0.53100440641071878


def additive_spec(q, noise1, noise2):
    a, b, z = np.meshgrid(np.arange(q), np.arange(q), np.arange(q), indexing="ij")
    return MemoryChannelSpec((b + z) % q, (a + z) % q, (noise1, noise2), q, q)


def latin_isd(q, noise1, noise2):
    add = (np.arange(q)[:, None] + np.arange(q)[None, :]) % q
    return IsdMemorySpec(add, add, add, add, noise1, noise2)


class TestEntropyRate:
    def test_iid(self):
        r = np.array([0.2, 0.5, 0.3])
        want = -(r * np.log2(r)).sum()
        assert entropy_rate(MarkovNoise.iid(r)) == pytest.approx(want, abs=1e-12)

    def test_cycle(self):
        assert entropy_rate(MarkovNoise(np.array([[0.0, 1.0], [1.0, 0.0]]))) == 0.0

    def test_stay_chain(self):
        assert entropy_rate(MarkovNoise.two_state(0.9)) == pytest.approx(HB01, abs=1e-12)

    def test_asymmetric_chain(self):
        # pi = (2/3, 1/3) for stay probabilities (0.9, 0.8)
        h = lambda p: -p * np.log2(p) - (1 - p) * np.log2(1 - p)
        want = 2 / 3 * h(0.1) + 1 / 3 * h(0.2)
        assert entropy_rate(MarkovNoise.two_state(0.9, 0.8)) == pytest.approx(want, abs=1e-12)

    def test_reducible(self):
        with pytest.raises(NotIrreducible):
            MarkovNoise(np.eye(2))

    def test_stationary(self):
        T = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])
        pi = stationary_distribution(T)
        assert np.allclose(pi @ T, pi, atol=1e-12)
        assert np.allclose(pi, 1 / 3)

    def test_sample_reproducible(self):
        noise = MarkovNoise.two_state(0.9)
        a = noise.sample(100, np.random.default_rng(1))
        b = noise.sample(100, np.random.default_rng(1))
        assert np.array_equal(a, b)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5))
def test_entropy_rate_bounded(seed, n):
    rng = np.random.default_rng(seed)
    T = rng.dirichlet(np.ones(n), size=n)
    assert entropy_rate(MarkovNoise(T)) <= np.log2(n) + 1e-12
    assert entropy_rate(MarkovNoise(np.full((n, n), 1 / n))) == pytest.approx(np.log2(n), abs=1e-12)


class TestTheorem9:
    def test_uniform_noise(self):
        reg = theorem9_region(additive_spec(2, MarkovNoise.two_state(0.9),
                                            MarkovNoise.iid([0.5, 0.5])))
        assert reg.r1_max == pytest.approx(0.0, abs=1e-12)

    def test_stay_chains(self):
        noise = MarkovNoise.two_state(0.9)
        reg = theorem9_region(additive_spec(2, noise, noise))
        assert reg.r1_max == pytest.approx(ONE_MINUS_HB01, abs=1e-12)
        assert reg.r2_max == pytest.approx(ONE_MINUS_HB01, abs=1e-12)

    def test_q4_one_bit(self):
        # alternate between the halves {0, 1} and {2, 3}, uniform within a half
        noise = MarkovNoise(np.kron(np.eye(2)[[1, 0]], np.full((2, 2), 0.5)))
        assert entropy_rate(noise) == pytest.approx(1.0, abs=1e-12)
        reg = theorem9_region(additive_spec(4, noise, noise))
        assert reg.r1_max == pytest.approx(1.0, abs=1e-12)

    def test_dependent_noise_rejected(self):
        base = additive_spec(2, MarkovNoise.two_state(0.9), MarkovNoise.two_state(0.9))
        spec = MemoryChannelSpec(base.F1, base.F2, example8_joint_noise(), 2, 2)
        with pytest.raises(StructuralViolation) as exc:
            theorem9_region(spec)
        assert "independent" in exc.value.hypothesis

    def test_alphabet_mismatch(self):
        a, b, z = np.meshgrid(np.arange(2), np.arange(2), np.arange(2), indexing="ij")
        spec = MemoryChannelSpec(a ^ z, a ^ z, (MarkovNoise.two_state(0.9),) * 2, 2, 2)
        with pytest.raises(StructuralViolation):
            check_theorem9_hypotheses(spec)

    def test_not_injective(self):
        f = np.zeros((2, 2, 2), dtype=int)
        with pytest.raises(NotInjective):
            MemoryChannelSpec(f, f, (MarkovNoise.two_state(0.9),) * 2, 2, 2)

    def test_bad_noise_dimension(self):
        a, b, z = np.meshgrid(np.arange(2), np.arange(2), np.arange(2), indexing="ij")
        with pytest.raises(DimensionMismatch):
            MemoryChannelSpec(b ^ z, a ^ z, (MarkovNoise.iid([1 / 3] * 3),
                                             MarkovNoise.two_state(0.9)), 2, 2)


class TestTheorem10:
    def test_matched_additive(self):
        noise = MarkovNoise.two_state(0.9)
        reg = theorem10_region(latin_isd(2, noise, noise))
        assert reg.r1_max == pytest.approx(ONE_MINUS_HB01, abs=1e-12)

    def test_noiseless(self):
        cycle = MarkovNoise(np.roll(np.eye(3), 1, axis=1))
        reg = theorem10_region(latin_isd(3, cycle, cycle))
        assert reg.r1_max == pytest.approx(np.log2(3), abs=1e-12)

    def test_matches_theorem9(self):
        n1, n2 = MarkovNoise.two_state(0.9), MarkovNoise.two_state(0.7, 0.8)
        spec = latin_isd(2, n1, n2)
        assert region_hausdorff(theorem10_region(spec), theorem9_region(spec.to_memory_spec())) <= 1e-12

    def test_unmatched_needs_limit(self):
        noise = MarkovNoise.two_state(0.9)
        spec = IsdMemorySpec(h1=[[0, 1, 2], [1, 2, 0]], ht1=[[0, 1], [1, 2]],
                             h2=[[0, 1, 2], [2, 0, 1]], ht2=[[0, 1], [2, 0]],
                             noise1=noise, noise2=noise)
        with pytest.raises(UnsupportedLimit):
            theorem10_region(spec)
        reg = theorem10_region(spec, t2_rate=1.2, t1_rate=1.0)
        assert reg.r1_max == pytest.approx(1.2 - HB01, abs=1e-12)
        with pytest.raises(OutOfRange):
            theorem10_region(spec, t2_rate=2.0, t1_rate=1.0)


class TestLemma3:
    def test_example8(self):
        reg = lemma3_outer(example8_joint_noise(), 2, 2)
        assert (reg.r1_max, reg.r2_max) == (1.0, 0.0)

    def test_independent_matches_theorem9(self):
        n1, n2 = MarkovNoise.two_state(0.9), MarkovNoise.two_state(0.6, 0.8)
        joint = JointMarkovNoise.independent(n1, n2)
        reg = lemma3_outer(joint, 2, 2)
        ref = theorem9_region(additive_spec(2, n1, n2))
        assert region_hausdorff(reg, ref) <= 1e-12

    def test_noisy_lagged_copy(self):
        # Z1 i.i.d. uniform, Z2_i = Z1_{i-1} flipped with probability 0.1
        t = np.zeros((2, 2, 2, 2))
        for a in range(2):
            for d in range(2):
                t[a, :, :, d] = 0.5 * (0.9 if d == a else 0.1)
        joint = JointMarkovNoise.from_transition(t.reshape(4, 4), 2, 2)
        reg = lemma3_outer(joint, 2, 2)
        assert reg.r1_max == pytest.approx(ONE_MINUS_HB01, abs=1e-12)
        assert joint.factorizes() is None

    def test_factorizes(self):
        n1, n2 = MarkovNoise.two_state(0.9), MarkovNoise.two_state(0.6, 0.8)
        got = JointMarkovNoise.independent(n1, n2).factorizes()
        assert got is not None
        assert np.allclose(got[0].T, n1.T) and np.allclose(got[1].T, n2.T)


class TestExample8:
    def test_first_symbol(self):
        rep = example8_simulate(1, 3)
        assert rep.decoded[0] == rep.sent[0]

    def test_no_errors(self):
        for seed in range(100):
            rep = example8_simulate(10_000, seed)
            assert rep.errors == 0 and rep.rate == 1.0

    def test_bounds(self):
        rep = example8_simulate(10, 0)
        assert rep.shannon_type_bound == 0.0
        assert rep.outer_bound == (1.0, 0.0)

    def test_bad_length(self):
        with pytest.raises(OutOfRange):
            example8_simulate(0, 1)
