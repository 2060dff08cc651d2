"""Rearrangement and Lorentz quasinorm tests against closed forms."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bvlorentz.rearrange import (
    DomainError,
    LorentzIndex,
    LorentzIndexError,
    StepFunction,
    critical_exponent,
    decreasing_rearrangement,
    distribution_function,
    embedding_audit_nested,
    lebesgue_norm,
    load_step,
    lorentz_norm,
    lorentz_norm_symmetrization,
    lorentz_norm_weak,
    save_step,
    schwarz_profile,
    step_from_pairs,
    unit_ball_volume,
)

# heights/measures well away from overflow or underflow
chunk_lists = st.lists(
    st.tuples(
        st.floats(0.05, 8.0, allow_nan=False),
        st.floats(0.05, 4.0, allow_nan=False),
    ),
    min_size=1,
    max_size=10,
)

lorentz_indices = st.tuples(
    st.floats(0.5, 4.0, allow_nan=False),
    st.one_of(st.floats(0.5, 4.0, allow_nan=False), st.just(math.inf)),
)


def _step(chunks):
    v = np.array([c[0] for c in chunks])
    m = np.array([c[1] for c in chunks])
    return step_from_pairs(v, m)


def test_indicator_closed_form():
    # ||chi_E||_{p,q} = (p/q)^{1/q} |E|^{1/p}
    for p, q, m in [(2.0, 1.0, 3.0), (1.5, 2.0, 0.25), (3.0, 0.5, 7.0)]:
        s = StepFunction(np.array([1.0]), np.array([m]))
        expect = (p / q) ** (1.0 / q) * m ** (1.0 / p)
        assert lorentz_norm(s, LorentzIndex(p, q)) == pytest.approx(expect, rel=1e-14)
    # weak norm of an indicator is exactly |E|^{1/p}
    s = StepFunction(np.array([1.0]), np.array([5.0]))
    assert lorentz_norm_weak(s, 2.0) == pytest.approx(math.sqrt(5.0), rel=1e-14)


def test_two_step_hand_computation():
    # u* = 3 on (0,1), 1 on (1,3).  With p = q = 1 the norm is the integral.
    s = StepFunction(np.array([3.0, 1.0]), np.array([1.0, 2.0]))
    assert lorentz_norm(s, LorentzIndex(1.0, 1.0)) == pytest.approx(5.0, rel=1e-14)
    # p = 2, q = 1: int u*(t) t^{-1/2} dt = 3*2*1 + 1*2*(sqrt(3)-1)
    expect = 6.0 + 2.0 * (math.sqrt(3.0) - 1.0)
    assert lorentz_norm(s, LorentzIndex(2.0, 1.0)) == pytest.approx(expect, rel=1e-14)


def test_step_from_pairs_sorts_merges_drops():
    s = step_from_pairs(
        np.array([1.0, -2.0, 0.0, 2.0, 0.5]), np.array([1.0, 2.0, 9.0, 3.0, 0.0])
    )
    assert s.values.tolist() == [2.0, 1.0]
    assert s.measures.tolist() == [5.0, 1.0]
    assert step_from_pairs(np.zeros(4), np.ones(4)) is None
    with pytest.raises(ValueError):
        step_from_pairs(np.ones(2), np.array([1.0, -1.0]))


def test_step_function_validation():
    with pytest.raises(ValueError):
        StepFunction(np.array([1.0, 2.0]), np.ones(2))  # increasing
    with pytest.raises(ValueError):
        StepFunction(np.array([2.0, 2.0]), np.ones(2))  # not strict
    with pytest.raises(ValueError):
        StepFunction(np.array([-1.0]), np.ones(1))
    with pytest.raises(ValueError):
        StepFunction(np.array([1.0]), np.array([0.0]))


def test_evaluate_right_continuous():
    s = StepFunction(np.array([3.0, 1.0]), np.array([1.0, 2.0]))
    out = s.evaluate(np.array([0.0, 0.999, 1.0, 2.999, 3.0, 10.0]))
    assert out.tolist() == [3.0, 3.0, 1.0, 1.0, 0.0, 0.0]
    with pytest.raises(DomainError):
        s.evaluate(np.array([-0.1]))


def test_distribution_function():
    s = StepFunction(np.array([3.0, 1.0]), np.array([1.0, 2.0]))
    assert distribution_function(s, 0.5) == 3.0
    assert distribution_function(s, 1.0) == 1.0
    assert distribution_function(s, 3.0) == 0.0
    with pytest.raises(DomainError):
        distribution_function(s, -1.0)


def test_schwarz_profile_radii():
    # indicator of measure pi symmetrizes to the unit disk in 2-d
    s = StepFunction(np.array([1.0]), np.array([math.pi]))
    prof = schwarz_profile(s, 2)
    assert prof.measures[0] == pytest.approx(1.0, rel=1e-14)
    with pytest.raises(LorentzIndexError):
        schwarz_profile(s)  # StepFunction carries no ambient dim


def test_unit_ball_volume_and_critical_exponent():
    assert unit_ball_volume(1) == 2.0
    assert unit_ball_volume(2) == math.pi
    assert unit_ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0)
    with pytest.raises(LorentzIndexError):
        unit_ball_volume(4)
    assert critical_exponent(2) == 2.0
    assert critical_exponent(3) == 1.5
    with pytest.raises(LorentzIndexError):
        critical_exponent(1)


def test_index_validation():
    with pytest.raises(LorentzIndexError):
        LorentzIndex(0.0, 1.0)
    with pytest.raises(LorentzIndexError):
        LorentzIndex(2.0, -1.0)
    with pytest.raises(LorentzIndexError):
        lorentz_norm_weak(StepFunction(np.ones(1), np.ones(1)), 0.0)
    with pytest.raises(LorentzIndexError):
        lebesgue_norm(StepFunction(np.ones(1), np.ones(1)), -2.0)


@given(chunk_lists, lorentz_indices)
@settings(max_examples=150, deadline=None)
def test_definition_equality(chunks, pq):
    """Chunk quadrature and symmetrization route agree on 2-d data."""
    p, q = pq
    s = _step(chunks)
    direct = lorentz_norm(s, LorentzIndex(p, q))
    via_sym = lorentz_norm_symmetrization(s, LorentzIndex(p, q), dim=2)
    assert via_sym == pytest.approx(direct, rel=1e-10, abs=1e-12)


@given(chunk_lists, st.floats(0.5, 4.0, allow_nan=False))
@settings(max_examples=150, deadline=None)
def test_diagonal_is_lebesgue(chunks, p):
    s = _step(chunks)
    assert lorentz_norm(s, LorentzIndex(p, p)) == pytest.approx(
        lebesgue_norm(s, p), rel=1e-12
    )


@given(chunk_lists)
@settings(max_examples=100, deadline=None)
def test_weak_norm_below_strong(chunks):
    s = _step(chunks)
    p = 2.0
    weak = lorentz_norm_weak(s, p)
    for q in (1.0, 1.5, 2.0):
        # q <= p, so the secondary-index nesting holds with constant 1
        assert weak <= lorentz_norm(s, LorentzIndex(p, q)) * (1 + 1e-12)


@given(chunk_lists)
@settings(max_examples=100, deadline=None)
def test_q_monotone_up_to_p(chunks):
    # ||.||_{p,q2} <= ||.||_{p,q1} for q1 <= q2 <= p, constant 1
    s = _step(chunks)
    p = 3.0
    n1 = lorentz_norm(s, LorentzIndex(p, 1.0))
    n2 = lorentz_norm(s, LorentzIndex(p, 2.0))
    n3 = lorentz_norm(s, LorentzIndex(p, 3.0))
    assert n2 <= n1 * (1 + 1e-12)
    assert n3 <= n2 * (1 + 1e-12)


def test_indicator_breaks_nesting_above_p():
    # for q > p the indicator ratio weak/strong is (q/p)^{1/q} > 1,
    # so constant-1 nesting must not be asserted there
    s = StepFunction(np.array([1.0]), np.array([1.0]))
    p = 1.5
    strong = lorentz_norm(s, LorentzIndex(p, 2.0))
    weak = lorentz_norm_weak(s, p)
    assert weak > strong


def test_rearrangement_of_grid_function(single_cell):
    s = decreasing_rearrangement(single_cell)
    assert s.values.tolist() == [3.0]
    assert s.measures.tolist() == [single_cell.cell_measure]
    assert decreasing_rearrangement(StepFunction(np.ones(1), np.ones(1))) is not None


def test_zero_function_norms():
    class Zero:
        def value_measure_pairs(self):
            return np.zeros(3), np.ones(3)

    z = Zero()
    assert lorentz_norm(z, LorentzIndex(2.0, 1.0)) == 0.0
    assert lorentz_norm_weak(z, 2.0) == 0.0
    assert lebesgue_norm(z, 2.0) == 0.0
    assert lorentz_norm_symmetrization(z, LorentzIndex(2.0, 1.0), dim=2) == 0.0


def test_embedding_audit_nested():
    s = StepFunction(np.array([2.0, 1.0]), np.array([0.5, 1.5]))
    rep = embedding_audit_nested(s, 1.0, 1.0, 2.0, 2.0, region_measure=2.0)
    assert rep.norm_first == pytest.approx(lebesgue_norm(s, 1.0), rel=1e-14)
    assert rep.norm_second == pytest.approx(lebesgue_norm(s, 2.0), rel=1e-14)
    assert rep.ratio == pytest.approx(rep.norm_first / rep.norm_second, rel=1e-14)
    d = rep.to_dict()
    assert d["p1"] == 1.0 and "ratio" in d
    with pytest.raises(LorentzIndexError):
        embedding_audit_nested(s, 2.0, 1.0, 2.0, 2.0, region_measure=1.0)
    with pytest.raises(DomainError):
        embedding_audit_nested(s, 1.0, 1.0, 2.0, 2.0, region_measure=0.0)


def test_save_load_step_roundtrip(tmp_path):
    s = StepFunction(np.array([2.5, 1.0 / 3.0]), np.array([0.1, 2.0]))
    p = tmp_path / "step.csv"
    save_step(s, p)
    back = load_step(p)
    # repr() serialization round-trips doubles bit-exactly
    np.testing.assert_array_equal(back.values, s.values)
    np.testing.assert_array_equal(back.measures, s.measures)
