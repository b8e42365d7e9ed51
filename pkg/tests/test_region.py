import numpy as np
import pytest

from twc.chanlib import fixture, gen_binary_additive, gen_qary_noise_erasure, noiseless_echo
from twc.core import channel_from_marginals, validate_channel
from twc.errors import DimensionMismatch, OutOfRange, ParameterOutOfRange
from twc.region import (
    RegionOptions,
    capacity_under_common_maximizer,
    chain_from_supports,
    closed_form_qary_erasure,
    compute_region,
    rectangle,
    region_contains,
    region_hausdorff,
    support_value,
)
from twc.symmetry import check_common_maximizer

EX1_R1 = 0.36514844544032288
EX1_R2 = 0.62141091376470737
QARY_3 = 0.73311844601724782      # q=3, alpha=0.1, eps=0.2
QARY_4 = 1.4421627887286496       # q=4, alpha=0.05, eps=0.1

UNIT_SQUARE = np.array([[0.0, 1.0], [1.0, 1.0], [1.0, 0.0]])


@pytest.fixture(scope="module")
def ex1():
    return gen_qary_noise_erasure(2, 0.05, 0.1, 0.1, 0.2)


class TestSupportValue:
    @pytest.mark.parametrize("mode", ["inner", "outer"])
    def test_binary_additive(self, mode):
        s = support_value(gen_binary_additive(), 0.5, mode)
        assert s.value == pytest.approx(1.0, abs=1e-9)

    def test_example1_forward(self, ex1):
        assert support_value(ex1, 1.0, "outer").value == pytest.approx(EX1_R1, abs=1e-6)

    def test_zero_capacity_direction(self):
        # Y1 constant, so the rate towards user 1 vanishes
        k1 = np.zeros((2, 2, 2))
        k1[..., 0] = 1
        k2 = np.broadcast_to(np.eye(2)[:, None, :], (2, 2, 2))
        ch = channel_from_marginals(k1, k2)
        assert support_value(ch, 0.0, "outer").value == pytest.approx(0.0, abs=1e-9)

    def test_outer_certificate(self):
        s = support_value(fixture("example4"), 0.3, "outer")
        assert s.value <= s.upper + 1e-12
        assert s.upper - s.value <= 1e-6

    def test_bad_lambda(self, ex1):
        with pytest.raises(OutOfRange):
            support_value(ex1, 1.5)


class TestComputeRegion:
    def test_unit_square(self):
        reg = compute_region(gen_binary_additive(), "inner")
        assert np.abs(reg.vertices - UNIT_SQUARE).max() <= 1e-6

    def test_example1_rectangle(self, ex1):
        reg = compute_region(ex1, "inner")
        assert reg.r1_max == pytest.approx(EX1_R1, abs=1e-3)
        assert reg.r2_max == pytest.approx(EX1_R2, abs=1e-3)
        assert region_hausdorff(reg, rectangle(EX1_R1, EX1_R2)) <= 1e-3

    def test_degenerate(self):
        m = np.zeros((4, 4))
        m[:, 0] = 1
        reg = compute_region(validate_channel(m, 2, 2, 2, 2), "outer", 11)
        assert reg.r1_max == pytest.approx(0.0, abs=1e-9)
        assert reg.r2_max == pytest.approx(0.0, abs=1e-9)

    def test_inner_inside_outer(self):
        ch = fixture("example5")
        inner = compute_region(ch, "inner", 21)
        outer = compute_region(ch, "outer", 21)
        assert region_contains(outer, inner, 1e-6)

    def test_support_samples_rebuild(self):
        reg = compute_region(fixture("motivational"), "outer", 21)
        lams = [s.direction for s in reg.samples]
        vals = [s.value for s in reg.samples]
        rebuilt = chain_from_supports(lams, vals)
        for lam, v in zip(lams, vals):
            assert float((rebuilt @ [lam, 1 - lam]).max()) == pytest.approx(v, abs=1e-9)

    def test_csv(self):
        text = compute_region(gen_binary_additive(), "inner").to_csv()
        assert text.splitlines() == ["R1,R2", "0,1", "1,1", "1,0"]

    def test_deterministic(self):
        opts = RegionOptions(seed=3)
        a = compute_region(fixture("example4"), "outer", 11, opts).to_csv()
        b = compute_region(fixture("example4"), "outer", 11, opts).to_csv()
        assert a == b

    def test_boundary_optimum_converges(self):
        # the optimum puts no mass on x1 = 0 in some directions; large mirror
        # steps used to underflow that row to exactly zero and stall
        rng = np.random.default_rng(2024)
        for _ in range(16):
            m = rng.exponential(size=(4, 4))
        ch = validate_channel(m / m.sum(axis=1, keepdims=True), 2, 2, 2, 2)
        reg = compute_region(ch, "outer", 21)
        assert all(s.upper - s.value <= 1e-6 for s in reg.samples)

    def test_too_few_directions(self, ex1):
        with pytest.raises(OutOfRange):
            compute_region(ex1, "inner", 1)


class TestCommonMaximizerRegion:
    def test_example4_matches_outer(self):
        ch = fixture("example4")
        p_star = check_common_maximizer(ch, "to2").witness["maximizer"]
        reg = capacity_under_common_maximizer(ch, p_star)
        for lam in np.linspace(0, 1, 11):
            assert reg.support(lam) == pytest.approx(support_value(ch, lam, "outer").value,
                                                     abs=2e-3)

    def test_unit_square(self):
        reg = capacity_under_common_maximizer(gen_binary_additive(), [0.5, 0.5])
        assert np.abs(reg.vertices - UNIT_SQUARE).max() <= 1e-9

    def test_point_mass(self):
        reg = capacity_under_common_maximizer(noiseless_echo(2), [1.0, 0.0])
        assert reg.r1_max == 0.0
        assert reg.r2_max == pytest.approx(1.0, abs=1e-9)

    def test_wrong_length(self):
        with pytest.raises(DimensionMismatch):
            capacity_under_common_maximizer(gen_binary_additive(), [1.0, 0.0, 0.0])


class TestClosedForm:
    def test_noiseless(self):
        reg = closed_form_qary_erasure(2, 0, 0, 0, 0)
        assert (reg.r1_max, reg.r2_max) == (1.0, 1.0)

    def test_q4_half_erasure(self):
        reg = closed_form_qary_erasure(4, 0, 0.5, 0, 0.5)
        assert reg.r1_max == pytest.approx(1.0, abs=1e-12)
        assert reg.r2_max == pytest.approx(1.0, abs=1e-12)

    def test_example1(self):
        reg = closed_form_qary_erasure(2, 0.05, 0.1, 0.1, 0.2)
        assert reg.r1_max == pytest.approx(EX1_R1, abs=1e-12)
        assert reg.r2_max == pytest.approx(EX1_R2, abs=1e-12)

    def test_qary_oracles(self):
        assert closed_form_qary_erasure(3, 0, 0, 0.1, 0.2).r1_max == pytest.approx(QARY_3, abs=1e-12)
        assert closed_form_qary_erasure(4, 0, 0, 0.05, 0.1).r1_max == pytest.approx(QARY_4, abs=1e-12)

    @pytest.mark.parametrize("q", [2, 3, 4])
    def test_agrees_with_numeric(self, q):
        ch = gen_qary_noise_erasure(q, 0.05, 0.1, 0.1, 0.2)
        num = compute_region(ch, "inner", 11, RegionOptions(grid=20))
        ref = closed_form_qary_erasure(q, 0.05, 0.1, 0.1, 0.2)
        assert num.r1_max == pytest.approx(ref.r1_max, abs=1e-3)
        assert num.r2_max == pytest.approx(ref.r2_max, abs=1e-3)

    def test_bad_params(self):
        with pytest.raises(ParameterOutOfRange):
            closed_form_qary_erasure(2, 0.6, 0.6, 0, 0)


class TestGeometry:
    def test_square_self(self):
        sq = rectangle(1, 1)
        assert region_contains(sq, sq)
        assert region_hausdorff(sq, sq) == 0.0

    def test_hausdorff_rectangles(self):
        assert region_hausdorff(rectangle(1, 1), rectangle(0.9, 1)) == pytest.approx(0.1, abs=1e-12)

    def test_contains_point(self):
        sq = rectangle(1, 1)
        assert sq.contains_point([0.5, 0.5])
        assert not sq.contains_point([1.1, 0.5])
        assert sq.contains_point([1.1, 0.5], slack=0.1 + 1e-12)
