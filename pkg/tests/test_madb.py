import numpy as np
import pytest

from twc.errors import DimensionMismatch, ParameterOutOfRange, UnsupportedScale
from twc.madb import (
    MadbChannel,
    MadbInput,
    MadbOptions,
    check_madb_exMain,
    check_madb_exMain2,
    check_madb_exSC,
    gate_channel,
    gen_madb,
    gen_madb_additive,
    gen_madb_erasure,
    gen_madb_example10,
    madb_support,
    rate_quadruple_bounds,
    support_table,
    verify_madb_exSC_witness,
)

ONE_MINUS_HB01 = 0.53100440641071878
FAST = MadbOptions(n_starts=2)


@pytest.fixture(scope="module")
def ex9():
    return gen_madb_additive(2, [1, 0], [1, 0], [0.9, 0.1])


def uniform_input(q, nv=1):
    u = np.full(q, 1 / q)
    return MadbInput(u, u, np.full((nv, q), 1 / (nv * q)))


class TestGenerators:
    def test_erasure_row(self):
        assert np.allclose(gen_madb_erasure(0.1).row(0, 0, 0), [0.9, 0.0, 0.1])

    def test_additive_point_mass_is_permutation(self):
        ch = gen_madb_additive(3, [1, 0, 0], [1, 0, 0], [1, 0, 0])
        assert np.all(np.isin(ch.p_y3, [0.0, 1.0]))
        assert np.array_equal(ch.p_y3.sum(axis=1), np.ones(27))

    def test_example10_row(self):
        assert np.allclose(gen_madb_example10(0.2).row(0, 1, 1), [0.8, 0.2, 0.0])

    def test_dispatch(self):
        a = gen_madb("erasure", eps=0.3)
        assert np.array_equal(a.p_y3, gen_madb_erasure(0.3).p_y3)
        with pytest.raises(ParameterOutOfRange):
            gen_madb("nosuch")
        with pytest.raises(ParameterOutOfRange):
            gen_madb("erasure", q=2)

    def test_bad_shape(self):
        with pytest.raises(DimensionMismatch):
            MadbChannel(2, np.full((4, 2), 0.5), [1, 0], [1, 0])


class TestBounds:
    def test_example9_uniform(self, ex9):
        b = rate_quadruple_bounds(uniform_input(2), ex9)
        assert b.b13 == pytest.approx(ONE_MINUS_HB01, abs=1e-12)
        assert b.b23 == pytest.approx(ONE_MINUS_HB01, abs=1e-12)
        assert b.b_sum == pytest.approx(ONE_MINUS_HB01, abs=1e-12)

    def test_point_masses(self, ex9):
        e = np.array([1.0, 0.0])
        b = rate_quadruple_bounds(MadbInput(e, e, np.array([[1.0, 0.0]])), ex9)
        assert np.all(b.as_array() == 0.0)

    def test_db_with_v_equal_x3(self, ex9):
        # V = X3 and a noiseless first link: b31 = H(X3 | V) = 0, b32 = H(X3) = 1
        b = rate_quadruple_bounds(MadbInput([0.5, 0.5], [0.5, 0.5], np.eye(2) / 2), ex9)
        assert b.b31 == pytest.approx(0.0, abs=1e-12)
        assert b.b32 == pytest.approx(1.0, abs=1e-12)

    def test_db_constant_v(self, ex9):
        b = rate_quadruple_bounds(uniform_input(2), ex9)
        assert b.b31 == pytest.approx(1.0, abs=1e-12)
        assert b.b32 == pytest.approx(0.0, abs=1e-12)

    def test_db_ignores_ma_inputs(self):
        ch = gen_madb_additive(2, [0.9, 0.1], [0.8, 0.2], [0.9, 0.1])
        pvx = np.array([[0.3, 0.1], [0.2, 0.4]])
        a = rate_quadruple_bounds(MadbInput([0.5, 0.5], [0.5, 0.5], pvx), ch)
        b = rate_quadruple_bounds(MadbInput([0.9, 0.1], [0.2, 0.8], pvx), ch)
        assert a.b31 == pytest.approx(b.b31, abs=1e-12)
        assert a.b32 == pytest.approx(b.b32, abs=1e-12)

    def test_joint_form_matches_product(self, ex9):
        inp = MadbInput([0.3, 0.7], [0.6, 0.4], np.array([[0.2, 0.3], [0.4, 0.1]]))
        joint = MadbInput(p_joint=inp.joint(2))
        assert np.allclose(rate_quadruple_bounds(inp, ex9).as_array(),
                           rate_quadruple_bounds(joint, ex9).as_array(), atol=1e-12)

    def test_too_large_v(self):
        with pytest.raises(DimensionMismatch):
            MadbInput([0.5, 0.5], [0.5, 0.5], np.full((4, 2), 1 / 8)).joint(2)


class TestSupport:
    def test_sum_direction(self, ex9):
        s = madb_support(ex9, [1, 1, 0, 0], "inner", FAST)
        assert s.value == pytest.approx(ONE_MINUS_HB01, abs=1e-6)

    def test_db_direction(self, ex9):
        assert madb_support(ex9, [0, 0, 1, 0], "inner", FAST).value == pytest.approx(1.0, abs=1e-6)

    def test_zero_direction(self, ex9):
        assert madb_support(ex9, [0, 0, 0, 0], "inner", FAST).value == 0.0

    def test_inner_below_outer(self):
        ch = gen_madb_example10(0.2)
        w = [1, 0.5, 0.3, 0.7]
        inner = madb_support(ch, w, "inner", FAST)
        outer = madb_support(ch, w, "outer", FAST)
        assert inner.value <= outer.value + 1e-9

    def test_value_matches_argmax(self, ex9):
        s = madb_support(ex9, [1, 2, 0, 1], "inner", FAST)
        again = rate_quadruple_bounds(s.argmax, ex9).as_array()
        assert np.allclose(again, s.bounds.as_array(), atol=1e-12)

    def test_unsupported_scale(self):
        ch = gen_madb_additive(4, [1, 0, 0, 0], [1, 0, 0, 0], [1, 0, 0, 0])
        with pytest.raises(UnsupportedScale):
            madb_support(ch, [1, 1, 0, 0])

    def test_bad_direction(self, ex9):
        with pytest.raises(ParameterOutOfRange):
            madb_support(ex9, [1, -1, 0, 0])
        with pytest.raises(ParameterOutOfRange):
            madb_support(ex9, [1, 1, 0, 0], "middle")

    def test_table_header(self, ex9):
        text = support_table(ex9, [[1, 1, 0, 0]], FAST)
        assert text.splitlines()[0] == "w13,w23,w31,w32,inner,outer"


class TestExMain:
    def test_example9(self, ex9):
        rep = check_madb_exMain(ex9, trials=200)
        assert rep.holds and rep.exact

    def test_example10(self):
        assert check_madb_exMain(gen_madb_example10(0.2), trials=200).holds

    def test_gate_fails(self):
        rep = check_madb_exMain(gate_channel(), trials=500)
        assert rep.fails and not rep.exact
        assert rep.counterexample["best_margin"] < 0


def _example10_with_bsc_slice():
    k = gen_madb_example10(0.2).tensor.copy()
    k[0, 0, 0] = [0.7, 0.3, 0.0]
    k[1, 0, 0] = [0.3, 0.7, 0.0]
    return MadbChannel(2, k.reshape(8, 3), [1, 0], [1, 0])


class TestExMain2:
    def test_example10_holds(self):
        rep = check_madb_exMain2(gen_madb_example10(0.2), trials=300)
        assert rep.holds
        assert set(rep.parts) >= {"common_maximizer", "maximizer_invariance",
                                  "x2_invariance", "x3_invariance", "dominance"}

    def test_example10_zero_capacity_note(self):
        rep = check_madb_exMain2(gen_madb_example10(0.2), trials=100)
        assert any("zero capacity" in n for n in rep.notes)

    def test_modified_slice_fails_invariance(self):
        rep = check_madb_exMain2(_example10_with_bsc_slice(), trials=100)
        assert rep.fails
        assert rep.parts["maximizer_invariance"].fails


class TestExSC:
    def test_erasure_holds(self):
        ch = gen_madb_erasure(0.1)
        rep = check_madb_exSC(ch)
        assert rep.holds
        assert verify_madb_exSC_witness(ch, rep.witness) == 0.0

    def test_noiseless_additive(self):
        assert check_madb_exSC(gen_madb_additive(2, [1, 0], [1, 0], [1, 0])).holds

    def test_ternary_nonuniform_noise_fails(self):
        ch = gen_madb_additive(3, [1, 0, 0], [1, 0, 0], [0.8, 0.15, 0.05])
        rep = check_madb_exSC(ch)
        assert rep.fails and rep.counterexample["input"] == "x1"
