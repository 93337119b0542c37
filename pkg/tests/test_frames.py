import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import mass_lists, random_state, random_weyl_form
from qrf import frames, gausscalc
from qrf.frames import NoUnitaryError, Shift, TransformKind
from qrf.gausscalc import QuadForm


def test_boost_prescriptions():
    state = gausscalc.make_packet(2.0, 1.0)
    tr = frames.boost(1.0, 3.0)
    X = QuadForm.variable(1, 0)
    assert abs(frames.passive_expect(tr, X, state) - (-1.0)) < 1e-12
    res = frames.invariance_check(tr, X, state)
    assert abs(res.primed_value - 2.0) < 1e-12
    assert res.residual < 1e-12


def test_boost_active_equals_passive_momentum():
    state = gausscalc.make_packet(0.5, 0.7, k=0.2, mass=3)
    tr = frames.boost(0.4, 1.1, [3])
    P = QuadForm.variable(1, 1)
    active = gausscalc.expect_quadratic(frames.active_state(tr, state), P)
    assert abs(active - frames.passive_expect(tr, P, state)) < 1e-12
    assert abs(active - (0.2 - 3 * 0.4)) < 1e-12


def test_catalog_kinds():
    kinds = {t.kind for t in frames.catalog([1, 2])}
    assert kinds == {TransformKind.BOOST, TransformKind.PARITY, TransformKind.CM_REL,
                     TransformKind.RELATIONAL, TransformKind.CM_REL_N}
    assert all(t.has_active_action for t in frames.catalog([1, 2, 3]))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), mass_lists(2, 2))
def test_passive_equals_active(seed, masses):
    rng = np.random.default_rng(seed)
    state = random_state(rng, 2, masses=masses)
    form = random_weyl_form(rng, 2)
    for tr in frames.catalog(masses):
        passive = frames.passive_expect(tr, form, state)
        active = gausscalc.expect_quadratic(frames.active_state(tr, state), form)
        assert abs(passive - active) < 1e-9 * max(1.0, abs(active))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), mass_lists(2, 2), st.floats(-2.0, 2.0))
def test_shift_passive_equals_active(seed, masses, L):
    rng = np.random.default_rng(seed)
    state = random_state(rng, 2, masses=masses)
    for tr in frames.catalog(masses):
        for dof in range(2):
            passive = frames.passive_expect(tr, Shift(dof, L), state)
            active = gausscalc.expect_shift(frames.active_state(tr, state), dof, L)
            assert abs(passive - active) < 1e-9


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-2, 2), st.floats(-2, 2))
def test_shift_composition(seed, a, b):
    state = random_state(np.random.default_rng(seed), 1)
    # <T(a) T(b)> = <T(a + b)>: shifting the state first then measuring T(a)
    moved = gausscalc.apply_affine_substitution(state, np.eye(1), np.array([b]))
    lhs = gausscalc.inner_product(state, gausscalc.apply_affine_substitution(
        moved, np.eye(1), np.array([a])))
    assert abs(lhs - gausscalc.expect_shift(state, 0, a + b)) < 1e-12


def test_no_unitary_for_target_relational():
    tr = frames.target_relational([1, 1, 1])
    state = random_state(np.random.default_rng(0), 3)
    with pytest.raises(NoUnitaryError) as info:
        frames.active_state(tr, state)
    assert str(info.value.certificate.max_entry) == "1/2"
    # the passive prescription is still defined
    frames.passive_expect(tr, QuadForm.variable(3, 2), state)


def test_castro_has_no_active_action():
    tr = frames.castro_sub([1, 1, 1])
    assert not tr.has_active_action
    with pytest.raises(NoUnitaryError):
        frames.active_state(tr, random_state(np.random.default_rng(0), 3))


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        frames.passive_expect(frames.cm_rel(1, 1), QuadForm.variable(2, 0),
                              gausscalc.make_packet(0, 1))
