import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twc.chanlib import fixture, gen_binary_additive, gen_qary_noise_erasure, noiseless_echo
from twc.core import (
    binary_entropy,
    blahut_arimoto,
    conditional_mutual_information,
    entropy,
    marginal_kernel,
    mutual_information,
    qary_entropy,
    rate_pair,
    uniform,
    uniform_kkt_test,
    validate_channel,
)
from twc.errors import NegativeEntry, NonConvergence, OutOfRange, RowSumViolation

# Frozen oracle values (mpmath at 30 digits and direct summation, independent of twc).
MI_UNIFORM_K4 = 0.29580734804468172
K4_ARGMAX_P0 = 0.52812386199846427
K4_CAPACITY = 0.29667180288050447
K4B_ARGMAX_P0 = 0.52814171903190793
ONE_MINUS_HB01 = 0.53100440641071878
EX1_R1 = 0.36514844544032288

K4 = np.array([[0.9, 0.1], [0.3, 0.7]])
K4B = np.array([[0.87, 0.13], [0.417, 0.583]])
BSC01 = np.array([[0.9, 0.1], [0.1, 0.9]])


def _rand_kernel(rng, nx, ny):
    k = rng.exponential(size=(nx, ny))
    return k / k.sum(axis=1, keepdims=True)


def _rand_pmf(rng, n):
    p = rng.exponential(size=n)
    return p / p.sum()


class TestValidation:
    def test_motivational_is_valid(self):
        ch = fixture("motivational")
        assert ch.p[0].tolist() == [0.783, 0.087, 0.117, 0.013]

    def test_identity_is_valid(self):
        ch = validate_channel(np.eye(4), 2, 2, 2, 2)
        assert ch.nx1 == 2 and ch.ny2 == 2

    def test_row_sum_violation(self):
        m = np.eye(4)
        m[2] = [0.99, 0, 0, 0]
        with pytest.raises(RowSumViolation) as exc:
            validate_channel(m, 2, 2, 2, 2)
        assert exc.value.row == 2

    def test_negative_entry(self):
        m = np.eye(4)
        m[1] = [-0.1, 1.1, 0, 0]
        with pytest.raises(NegativeEntry):
            validate_channel(m, 2, 2, 2, 2)


class TestMarginalKernel:
    def test_motivational_to2_slice(self):
        k = marginal_kernel(fixture("motivational"), "to2", 0)
        assert np.allclose(k, K4, atol=1e-12)

    def test_echo_slices_are_identity(self):
        ch = noiseless_echo(2)
        for d in ("to2", "to1"):
            for s in range(2):
                assert np.array_equal(marginal_kernel(ch, d, s), np.eye(2))

    def test_example1_slice(self):
        a2, e2 = 0.1, 0.2
        ch = gen_qary_noise_erasure(2, 0.05, 0.1, a2, e2)
        k = marginal_kernel(ch, "to2", 0)
        want = [[1 - e2 - a2, a2, e2], [a2, 1 - e2 - a2, e2]]
        assert np.allclose(k, want, atol=1e-12)


class TestInformation:
    def test_noiseless_uniform(self):
        assert mutual_information(uniform(2), np.eye(2)) == pytest.approx(1.0, abs=1e-12)

    def test_point_mass(self):
        assert mutual_information([1.0, 0.0], K4) == 0.0

    def test_against_brute_force_oracle(self):
        assert mutual_information(uniform(2), K4) == pytest.approx(MI_UNIFORM_K4, abs=1e-12)

    def test_binary_additive_rates(self):
        ch = gen_binary_additive()
        p = np.full((2, 2), 0.25)
        assert conditional_mutual_information(p, ch, "to2") == pytest.approx(1.0, abs=1e-12)
        assert conditional_mutual_information(p, ch, "to1") == pytest.approx(1.0, abs=1e-12)

    def test_point_mass_joint(self):
        ch = fixture("example4")
        assert np.all(rate_pair(np.array([[1.0, 0], [0, 0]]), ch) == 0.0)

    def test_example1_rate(self):
        ch = gen_qary_noise_erasure(2, 0.05, 0.1, 0.1, 0.2)
        p = np.full((2, 2), 0.25)
        assert conditional_mutual_information(p, ch, "to2") == pytest.approx(EX1_R1, abs=1e-12)

    def test_product_rate_is_state_average(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            m = rng.exponential(size=(4, 4))
            ch = validate_channel(m / m.sum(axis=1, keepdims=True), 2, 2, 2, 2)
            p1, p2 = _rand_pmf(rng, 2), _rand_pmf(rng, 2)
            t = ch.tensor
            # four-way summation of I(X1;Y2|X2)
            direct = 0.0
            for x2 in range(2):
                k = t[:, x2].sum(axis=1)          # [x1, y2]
                qy = p1 @ k
                for x1 in range(2):
                    for y in range(2):
                        if k[x1, y] > 0:
                            direct += p2[x2] * p1[x1] * k[x1, y] * np.log2(k[x1, y] / qy[y])
            got = conditional_mutual_information(np.outer(p1, p2), ch, "to2")
            assert got == pytest.approx(direct, abs=1e-12)


class TestEntropy:
    def test_binary(self):
        assert binary_entropy(0.5) == 1.0
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0

    @pytest.mark.parametrize("q", [2, 3, 4, 7])
    def test_qary_maximum(self, q):
        assert qary_entropy((q - 1) / q, q) == pytest.approx(np.log2(q), abs=1e-12)

    def test_out_of_range(self):
        with pytest.raises(OutOfRange):
            binary_entropy(1.5)

    def test_zero_log_zero(self):
        assert entropy(np.array([1.0, 0.0, 0.0])) == 0.0


class TestBlahutArimoto:
    def test_noiseless(self):
        res = blahut_arimoto(np.eye(2))
        assert res.capacity == pytest.approx(1.0, abs=1e-10)
        assert np.allclose(res.maximizer, 0.5)

    def test_bsc(self):
        assert blahut_arimoto(BSC01).capacity == pytest.approx(ONE_MINUS_HB01, abs=1e-10)

    def test_example4_kernels(self):
        a, b = blahut_arimoto(K4), blahut_arimoto(K4B)
        assert a.maximizer[0] == pytest.approx(K4_ARGMAX_P0, abs=1e-6)
        assert b.maximizer[0] == pytest.approx(K4B_ARGMAX_P0, abs=1e-6)
        assert a.capacity == pytest.approx(K4_CAPACITY, abs=1e-10)

    def test_gap_certificate(self):
        res = blahut_arimoto(K4, tol=1e-12)
        assert 0 <= res.gap <= 1e-12
        assert res.capacity <= K4_CAPACITY + 1e-12 <= res.capacity + res.gap + 1e-12

    def test_unpacking(self):
        cap, p, n = blahut_arimoto(BSC01)
        assert n >= 0 and p.shape == (2,)

    def test_nonconvergence(self):
        with pytest.raises(NonConvergence) as exc:
            blahut_arimoto(K4, tol=1e-14, max_iter=1)
        assert exc.value.gap > 0

    def test_zero_capacity(self):
        res = blahut_arimoto(np.array([[0.5, 0.5], [0.5, 0.5]]))
        assert res.capacity == pytest.approx(0.0, abs=1e-12)


class TestKkt:
    def test_bsc(self):
        assert uniform_kkt_test(BSC01)

    def test_asymmetric(self):
        assert not uniform_kkt_test(K4)

    def test_example1_kernel(self):
        ch = gen_qary_noise_erasure(2, 0.05, 0.1, 0.1, 0.2)
        assert uniform_kkt_test(marginal_kernel(ch, "to2", 0))


seeds = st.integers(min_value=0, max_value=2**32 - 1)


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(2, 4), st.integers(2, 4))
def test_mi_concave(seed, nx, ny):
    rng = np.random.default_rng(seed)
    k = _rand_kernel(rng, nx, ny)
    p1, p2 = _rand_pmf(rng, nx), _rand_pmf(rng, nx)
    lam = rng.uniform()
    lhs = mutual_information(lam * p1 + (1 - lam) * p2, k)
    rhs = lam * mutual_information(p1, k) + (1 - lam) * mutual_information(p2, k)
    assert lhs >= rhs - 1e-9


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(2, 4), st.integers(2, 4))
def test_mi_permutation_invariance(seed, nx, ny):
    rng = np.random.default_rng(seed)
    k = _rand_kernel(rng, nx, ny)
    p = _rand_pmf(rng, nx)
    base = mutual_information(p, k)
    cols, rows = rng.permutation(ny), rng.permutation(nx)
    assert mutual_information(p, k[:, cols]) == pytest.approx(base, abs=1e-12)
    assert mutual_information(p[rows], k[rows]) == pytest.approx(base, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(2, 5), st.integers(2, 5))
def test_ba_monotone_and_above_uniform(seed, nx, ny):
    rng = np.random.default_rng(seed)
    k = _rand_kernel(rng, nx, ny)
    res = blahut_arimoto(k)
    assert np.all(np.diff(res.history) >= -1e-12)
    assert res.capacity >= mutual_information(uniform(nx), k) - 1e-10
