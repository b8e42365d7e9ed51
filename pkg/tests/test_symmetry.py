import json

import numpy as np
import pytest

from twc.chanlib import (
    FIXTURES,
    IsdSpec,
    fixture,
    from_state_kernels,
    gen_binary_additive,
    gen_isd,
    gen_qary_noise_erasure,
    noiseless_echo,
)
from twc.core import binary_entropy, marginal_kernel, validate_channel
from twc.errors import InconsistentImplication, InvalidInput, SearchBudgetExceeded, ShapeMismatch
from twc.simplex import sample_simplex
from twc.symmetry import (
    FAILS,
    HOLDS,
    NOT_FALSIFIED,
    audit_implications,
    check_column_permutation_family,
    check_common_maximizer,
    check_cva,
    check_extended_shannon,
    check_invariance_all_inputs,
    check_quasi_symmetric,
    check_shannon_one_sided,
    check_shannon_two_sided,
    check_theorem1,
    check_theorem3,
    check_theorem4,
    mixture_rate_gain,
    run_all_conditions,
    run_condition,
    transposition_rate_gap,
    verify_extended_witness,
    verify_quasi_symmetric,
    verify_shannon_witness,
)

HB01 = 0.46899559358928122
HB03 = 0.88129089923069262
K4_ARGMAX_P0 = 0.52812386199846427

K4 = np.array([[0.9, 0.1], [0.3, 0.7]])
K4B = np.array([[0.87, 0.13], [0.417, 0.583]])
BSC01 = np.array([[0.9, 0.1], [0.1, 0.9]])
BSC03 = np.array([[0.7, 0.3], [0.3, 0.7]])
Z05 = np.array([[1.0, 0.0], [0.5, 0.5]])


def ex1_kernel(a=0.1, e=0.2):
    return np.array([[1 - e - a, a, e], [a, 1 - e - a, e]])


@pytest.fixture(scope="module")
def ex1():
    return gen_qary_noise_erasure(2, 0.05, 0.1, 0.1, 0.2)


@pytest.fixture(scope="module")
def additive_noise():
    return gen_binary_additive(0.1, 0.2)


def isd_example():
    # ternary intermediate variable, binary inputs, noise on two symbols
    return IsdSpec(h1=[[0, 1, 2], [2, 0, 1]], ht1=[[0, 1], [1, 2]],
                   h2=[[0, 1, 2], [1, 2, 0]], ht2=[[0, 2], [1, 0]],
                   pz1=[0.7, 0.3], pz2=[0.6, 0.4])


class TestQuasiSymmetric:
    def test_example1_kernel(self):
        rep = check_quasi_symmetric(ex1_kernel())
        assert rep.holds
        assert rep.witness["partition"] == [[0, 1], [2]]
        assert verify_quasi_symmetric(ex1_kernel(), rep.witness["partition"])

    def test_identity(self):
        rep = check_quasi_symmetric(np.eye(3))
        assert rep.holds
        assert verify_quasi_symmetric(np.eye(3), rep.witness["partition"])

    def test_asymmetric(self):
        assert check_quasi_symmetric(K4).fails


class TestColumnPermutationFamily:
    def test_example1_pair(self, ex1):
        rep = check_column_permutation_family(ex1.kernels("to2"))
        assert rep.holds
        assert rep.witness["permutations"][1] == (1, 0, 2)

    def test_identical(self):
        rep = check_column_permutation_family([K4, K4])
        assert rep.holds and rep.witness["permutations"] == [(0, 1), (0, 1)]

    def test_example4_pair(self):
        assert check_column_permutation_family([K4, K4B]).fails

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            check_column_permutation_family([K4, ex1_kernel()])


class TestShannon:
    def test_additive_noise_holds(self, additive_noise):
        for side in (1, 2):
            rep = check_shannon_one_sided(additive_noise, side)
            assert rep.holds
            assert verify_shannon_witness(additive_noise, side, rep.witness["maps"]) <= 1e-9

    @pytest.mark.parametrize("name", ["example4", "example5"])
    def test_fixture_fails(self, name):
        rep = check_shannon_one_sided(fixture(name), 1)
        assert rep.fails
        assert rep.counterexample["min_residual"] > 1e-9

    def test_two_sided(self):
        assert check_shannon_two_sided(gen_binary_additive()).holds
        assert check_shannon_two_sided(fixture("example4")).fails
        assert check_shannon_two_sided(noiseless_echo(2)).holds

    def test_budget(self):
        ch = noiseless_echo(6)
        with pytest.raises(SearchBudgetExceeded):
            check_shannon_one_sided(ch, 1, budget=100)


class TestExtended:
    def test_example5(self):
        for side in (1, 2):
            rep = check_extended_shannon(fixture("example5"), side)
            assert rep.holds
            assert verify_extended_witness(fixture("example5"), side, rep.witness["maps"]) <= 1e-9

    def test_example6(self):
        rep = check_extended_shannon(fixture("example6"), 1)
        assert rep.fails and rep.counterexample["min_residual"] > 1e-9

    def test_additive_noise(self, additive_noise):
        assert check_extended_shannon(additive_noise, 1).holds


class TestCva:
    def test_example4_part1_witness(self):
        rep = check_cva(fixture("example4"), 500, 1)
        assert rep.fails and rep.exact
        cx = rep.counterexample
        assert cx["part"] == "part1" and cx["output"] == "y2"
        assert sorted(cx["entropies"]) == pytest.approx([HB01, HB03], abs=1e-12)

    def test_example6(self):
        rep = check_cva(fixture("example6"), 2000, 7)
        assert rep.parts["part1"].holds and rep.parts["part1"].exact
        assert rep.verdict == NOT_FALSIFIED

    def test_additive_noise(self, additive_noise):
        rep = check_cva(additive_noise, 2000, 7)
        assert rep.parts["part1"].holds
        assert rep.verdict == NOT_FALSIFIED

    def test_deterministic(self):
        a = check_cva(fixture("example6"), 300, 5).to_dict()
        b = check_cva(fixture("example6"), 300, 5).to_dict()
        assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


class TestCommonMaximizer:
    def test_example4(self):
        rep = check_common_maximizer(fixture("example4"), "to2")
        assert rep.holds
        assert rep.witness["maximizer"][0] == pytest.approx(K4_ARGMAX_P0, abs=1e-4)

    def test_example1_uniform(self, ex1):
        rep = check_common_maximizer(ex1, "to2")
        assert rep.holds
        assert np.allclose(rep.witness["maximizer"], 0.5, atol=1e-6)

    def test_bsc_vs_z(self):
        ch = from_state_kernels([BSC01, Z05], [BSC01, BSC01])
        rep = check_common_maximizer(ch, "to2")
        assert rep.fails and rep.exact


class TestInvariance:
    def test_example4_to1(self):
        rep = check_invariance_all_inputs(fixture("example4"), "to1", "structural", 100, 1)
        assert rep.holds and rep.witness["method"] == "column_permutations"

    def test_example1_both(self, ex1):
        for d in ("to1", "to2"):
            assert check_invariance_all_inputs(ex1, d, "structural", 100, 1).holds

    def test_bsc_pair_fails(self):
        ch = from_state_kernels([BSC01, BSC03], [BSC01, BSC01])
        rep = check_invariance_all_inputs(ch, "to2", "structural", 100, 1)
        assert rep.fails
        vals = rep.counterexample["values"]
        assert vals.max() - vals.min() > 1e-8

    def test_bad_mode(self):
        with pytest.raises(InvalidInput):
            check_invariance_all_inputs(fixture("example4"), "to1", "exhaustive", 10, 1)


class TestTheorems:
    def test_theorem1_example4(self):
        rep = check_theorem1(fixture("example4"), 500, 1)
        assert rep.holds and rep.exact

    def test_theorem3_isd(self):
        assert check_theorem3(gen_isd(isd_example())).holds

    def test_theorem3_example1(self, ex1):
        assert check_theorem3(ex1).holds

    def test_theorem3_bsc_pair(self):
        ch = from_state_kernels([BSC01, BSC03], [BSC01, BSC03])
        assert check_theorem3(ch).fails

    def test_theorem4_example4(self):
        rep = check_theorem4(fixture("example4"), 500, 1)
        assert rep.verdict != FAILS

    def test_theorem4_additive_exact(self, additive_noise):
        rep = check_theorem4(additive_noise, 500, 1)
        assert rep.holds and rep.exact

    def test_theorem4_entropy_part_fails(self):
        ch = from_state_kernels([K4, K4B], [BSC01, BSC03])
        rep = check_theorem4(ch, 500, 1)
        assert rep.fails and rep.exact
        assert rep.counterexample["part"] == "entropy_invariance"


class TestAudit:
    def test_additive_noise(self, additive_noise):
        res = run_all_conditions(additive_noise, 500, 1)
        assert res.reports["shannon_one_sided_1"].holds
        assert res.reports["theorem1"].holds
        assert res.consistent

    def test_example5(self):
        res = run_all_conditions(fixture("example5"), 500, 1)
        assert res.reports["extended_shannon_1"].holds
        assert not res.reports["cva"].fails
        assert res.consistent

    def test_example4(self):
        res = run_all_conditions(fixture("example4"), 500, 1)
        r = res.reports
        assert r["shannon_one_sided_1"].fails and r["cva"].fails and r["theorem1"].holds

    def test_violation_detected(self):
        from twc.symmetry import ConditionReport
        reports = {"shannon_one_sided_1": ConditionReport("shannon_one_sided_1", HOLDS),
                   "theorem1": ConditionReport("theorem1", FAILS)}
        audit = audit_implications(reports)
        assert any(a.violated for a in audit)

    def test_strict_raises(self, monkeypatch):
        import twc.symmetry as sym
        real = sym.run_condition

        def fake(channel, cid, *a, **k):
            rep = real(channel, cid, *a, **k)
            if cid == "theorem1":
                rep.verdict = FAILS
            return rep

        monkeypatch.setattr(sym, "run_condition", fake)
        with pytest.raises(InconsistentImplication):
            run_all_conditions(gen_binary_additive(), 50, 1,
                               conditions=("shannon_one_sided_1", "theorem1"))

    def test_unknown_condition(self):
        with pytest.raises(InvalidInput):
            run_condition(fixture("example4"), "theorem99")


def _prop1_cases():
    out = [("additive", gen_binary_additive(0.1, 0.2), 1), ("additive", gen_binary_additive(0.1, 0.2), 2),
           ("echo3", noiseless_echo(3), 1), ("example6", fixture("example6"), 2)]
    return out


@pytest.mark.parametrize("name,ch,side", _prop1_cases())
def test_transposition_oracles(name, ch, side):
    assert check_shannon_one_sided(ch, side).holds
    rng = np.random.default_rng(11)
    n = ch.nx1 if side == 1 else ch.nx2
    for _ in range(100):
        p = sample_simplex(rng, ch.nx1 * ch.nx2).reshape(ch.nx1, ch.nx2)
        for i in range(n):
            for j in range(i + 1, n):
                assert transposition_rate_gap(ch, p, side, i, j) <= 1e-8
                assert mixture_rate_gain(ch, p, side, i, j) >= -1e-9


def test_fails_counterexamples_replay():
    # Shannon: the reported closest permutations leave the reported residual
    ch = fixture("example4")
    rep = check_shannon_one_sided(ch, 1)
    cx = rep.counterexample
    t = ch.tensor
    i, j = cx["input_pair"]
    tau = np.arange(2)
    tau[i], tau[j] = j, i
    tt = t[tau][:, :, list(cx["closest_pi1"]), :][:, :, :, list(cx["closest_pi2"])]
    assert np.abs(t - tt).max() == pytest.approx(cx["min_residual"], abs=1e-12)
    # CVA part 1: the reported entropies are the conditional entropies of y2
    cva = check_cva(ch, 10, 1).counterexample
    law = ch.y2_law[:, cva["x2"]]
    ent = [binary_entropy(law[x1, 0]) for x1 in cva["x1_pair"]]
    assert ent == pytest.approx(cva["entropies"], abs=1e-12)


def test_example4_slice_matches_printed():
    assert np.allclose(marginal_kernel(fixture("example4"), "to2", 1), K4B, atol=1e-12)


def test_to_dict_is_json():
    for name in FIXTURES:
        res = run_all_conditions(fixture(name), 50, 1, strict=False)
        json.dumps(res.to_dict())


def test_random_channels_audit_consistent():
    rng = np.random.default_rng(5)
    for _ in range(10):
        m = rng.exponential(size=(4, 4))
        ch = validate_channel(m / m.sum(axis=1, keepdims=True), 2, 2, 2, 2)
        assert run_all_conditions(ch, 200, 1).consistent
