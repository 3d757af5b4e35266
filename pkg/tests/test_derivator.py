import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_derivator, random_subinterval, variation_oracle
from stieltjes import (
    ConstantProfile,
    Derivator,
    DomainError,
    Jump,
    LinearProfile,
    PowerProfile,
    Segment,
    TabulatedProfile,
)

VAR_ATOL = 1e-12


def identity_with_jump(delta=2.0, at=0.5):
    return Derivator.identity(0.0, 1.0, jumps=[(at, delta)])


def tent():
    return Derivator((0.0, 1.0), [
        Segment(0.0, 0.5, LinearProfile(1.0)),
        Segment(0.5, 1.0, LinearProfile(-1.0)),
    ], [])


class TestEvaluation:
    def test_left_continuous_value(self):
        d = identity_with_jump()
        assert d.eval(0.8) == pytest.approx(2.8)
        assert d.eval(0.5) == 0.5
        assert d.eval_right(0.5) == 2.5

    def test_jump_delta_is_exact(self):
        d = identity_with_jump(delta=-3.0)
        assert d.eval_right(0.5) - d.eval(0.5) == -3.0
        assert d.delta_at(0.5) == -3.0
        assert d.delta_at(0.25) == 0.0

    def test_vectorized_eval_matches_scalar(self):
        rng = np.random.default_rng(3)
        d = random_derivator(rng)
        ts = np.linspace(0, 1, 257)
        vec = d.eval(ts)
        for i in (0, 64, 128, 255):
            assert vec[i] == d.eval(float(ts[i]))

    def test_domain_is_enforced(self):
        d = identity_with_jump()
        with pytest.raises(DomainError):
            d.eval(1.5)
        with pytest.raises(DomainError):
            d.eval(-0.1)

    def test_anchor_shifts_values(self):
        d = Derivator.identity(0.0, 1.0)
        shifted = Derivator((0.0, 1.0), [Segment(0.0, 1.0, LinearProfile(1.0))],
                            [], anchor=5.0)
        assert shifted.eval(0.3) == d.eval(0.3) + 5.0


class TestVariation:
    def test_tent_desk_values(self):
        d = tent()
        assert d.variation(0, 1, "total") == pytest.approx(1.0, abs=1e-15)
        assert d.variation(0, 1, "positive") == pytest.approx(0.5, abs=1e-15)
        assert d.variation(0, 1, "negative") == pytest.approx(0.5, abs=1e-15)

    def test_negative_jump_counts_in_total(self):
        d = identity_with_jump(delta=-3.0)
        # slope contributes 1, the drop contributes 3
        assert d.variation(0, 1, "total") == pytest.approx(4.0)
        assert d.variation(0, 1, "negative") == pytest.approx(3.0)

    def test_half_open_convention(self):
        d = identity_with_jump(delta=2.0, at=0.5)
        assert d.variation(0.0, 0.5, "total") == pytest.approx(0.5)
        # the jump sits at the closed left end of [0.5, 1)
        assert d.variation(0.5, 1.0, "total") == pytest.approx(2.5)

    def test_corpus_against_partition_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(40):
            d = random_derivator(rng)
            lo, hi = random_subinterval(rng, d)
            for kind in ("total", "positive", "negative"):
                lib = d.variation(lo, hi, kind)
                ora = variation_oracle(d, lo, hi, kind)
                assert lib == pytest.approx(ora, abs=VAR_ATOL, rel=1e-12)

    @settings(max_examples=25)
    @given(seed=st.integers(0, 2 ** 31))
    def test_jordan_identities_property(self, seed):
        rng = np.random.default_rng(seed)
        d = random_derivator(rng)
        lo, hi = random_subinterval(rng, d)
        total = d.variation(lo, hi, "total")
        pos = d.variation(lo, hi, "positive")
        neg = d.variation(lo, hi, "negative")
        assert total == pytest.approx(pos + neg, abs=VAR_ATOL, rel=1e-12)
        signed = d.eval(hi) - d.eval(lo)
        assert signed == pytest.approx(pos - neg, abs=1e-10, rel=1e-10)

    def test_cumulative_matches_pointwise(self):
        rng = np.random.default_rng(12)
        d = random_derivator(rng)
        ts = np.linspace(0, 1, 33)
        cum = d.variation_cumulative(ts, "total")
        for t, v in zip(ts, cum):
            assert v == pytest.approx(d.variation(0.0, float(t), "total"), abs=1e-12)


class TestStructure:
    def test_decomposition_desk_example(self):
        d = identity_with_jump(delta=2.0, at=0.5)
        sets = d.structural_sets()
        assert sets.jumps_up == (0.5,)
        assert sets.jumps_down == ()
        # the jump splits an otherwise uniform rise into two runs
        assert sets.rising == ((0.0, 0.5), (0.5, 1.0))
        assert sets.falling == ()
        assert sets.constant == ()

    def test_same_direction_junction_is_one_run(self):
        d = Derivator((0.0, 1.0), [
            Segment(0.0, 0.5, LinearProfile(1.0)),
            Segment(0.5, 1.0, LinearProfile(2.0)),
        ], [])
        sets = d.structural_sets()
        assert sets.rising == ((0.0, 1.0),)
        assert 0.5 not in d.run_boundaries()

    def test_constancy_run_recorded(self):
        d = Derivator((0.0, 1.0), [
            Segment(0.0, 0.4, LinearProfile(1.0)),
            Segment(0.4, 0.7, ConstantProfile()),
            Segment(0.7, 1.0, LinearProfile(1.0)),
        ], [])
        sets = d.structural_sets()
        assert sets.constant == ((0.4, 0.7),)
        assert sets.rising == ((0.0, 0.4), (0.7, 1.0))

    def test_classify_point(self):
        d = tent()
        kind, direction = d.classify_point(0.25)
        assert kind == "interior" and direction == "nondecreasing"
        kind, _ = d.classify_point(0.5)
        assert kind == "excluded"
        dj = identity_with_jump()
        kind, delta = dj.classify_point(0.5)
        assert kind == "jump" and delta == 2.0

    def test_runs_cover_interval(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            d = random_derivator(rng)
            sets = d.structural_sets()
            runs = sorted(sets.rising + sets.falling + sets.constant)
            assert runs[0][0] == d.a
            assert runs[-1][1] == d.b
            for (_, r1), (l2, _) in zip(runs, runs[1:]):
                assert r1 == l2


class TestValidation:
    def test_segments_must_tile(self):
        with pytest.raises(DomainError):
            Derivator((0.0, 1.0), [
                Segment(0.0, 0.4, LinearProfile(1.0)),
                Segment(0.5, 1.0, LinearProfile(1.0)),
            ], [])

    def test_jump_must_sit_on_boundary(self):
        with pytest.raises(DomainError):
            Derivator((0.0, 1.0), [Segment(0.0, 1.0, LinearProfile(1.0))],
                      [Jump(0.3, 1.0)])

    def test_jump_at_right_endpoint_rejected(self):
        with pytest.raises(DomainError):
            Derivator.identity(0.0, 1.0, jumps=[(1.0, 1.0)])

    def test_zero_jump_rejected(self):
        with pytest.raises(DomainError):
            Jump(0.5, 0.0)

    def test_non_monotone_table_rejected(self):
        with pytest.raises(DomainError):
            Segment(0.0, 1.0, TabulatedProfile(((0.2, 0.0), (0.5, 1.0), (0.8, 0.5))))

    def test_direction_conflict_rejected(self):
        with pytest.raises(DomainError):
            Segment(0.0, 1.0, LinearProfile(1.0), direction="nonincreasing")

    def test_power_profile_needs_positive_exponent(self):
        with pytest.raises(DomainError):
            PowerProfile(0.0, 1.0)

    def test_tabulated_knots_must_be_interior(self):
        with pytest.raises(DomainError):
            Segment(0.0, 1.0, TabulatedProfile(((0.0, 0.0), (0.5, 1.0))))


def test_power_profile_increment_shape():
    seg = Segment(0.0, 1.0, PowerProfile(0.5, 2.0))
    ts = np.array([0.0, 0.25, 1.0])
    np.testing.assert_allclose(seg.profile.increment(0.0, 1.0, ts), [0.0, 1.0, 2.0])


def test_tabulated_profile_extends_constantly():
    prof = TabulatedProfile(((0.3, 0.0), (0.7, 1.0)))
    seg = Segment(0.0, 1.0, prof)
    # flat before the first knot and after the last one
    assert prof.increment(0.0, 1.0, 0.1) == 0.0
    assert prof.increment(0.0, 1.0, 0.9) == 1.0
    assert seg.direction == "nondecreasing"


def test_constant_constructor():
    d = Derivator.constant(0.0, 2.0, level=4.5)
    assert d.eval(1.3) == 4.5
    assert d.variation(0, 2, "total") == 0.0
    assert d.structural_sets().constant == ((0.0, 2.0),)
