import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_state
from qrf import canon, gausscalc
from qrf.gausscalc import GaussianTerm, GaussState, QuadForm

widths = st.floats(0.2, 3.0)
centers = st.floats(-5.0, 5.0)
wavevecs = st.floats(-3.0, 3.0)


def test_packet_norm_against_quadrature():
    st_ = gausscalc.make_packet(0.3, 0.7, k=1.1)
    u = np.linspace(-10, 10, 20001)
    dens = np.abs(st_(u[:, None])) ** 2
    assert abs(np.trapezoid(dens, u) - 1.0) < 1e-10
    assert abs(st_.norm2() - 1.0) < 1e-12


@settings(max_examples=50, deadline=None)
@given(centers, widths, wavevecs, st.sampled_from([1.0, 0.5, 2.0]))
def test_single_packet_moments(c, s, k, hbar):
    st_ = gausscalc.make_packet(c, s, k=k, hbar=hbar)
    X, P = QuadForm.variable(1, 0), QuadForm.variable(1, 1)
    X2, P2 = QuadForm.product(1, 0, 0), QuadForm.product(1, 1, 1)
    assert abs(gausscalc.expect_quadratic(st_, X) - c) < 1e-10
    assert abs(gausscalc.expect_quadratic(st_, P) - hbar * k) < 1e-10
    assert abs(gausscalc.expect_quadratic(st_, X2) - (c * c + s * s)) < 1e-9
    want = hbar**2 * (k * k + 1 / (4 * s * s))
    assert abs(gausscalc.expect_quadratic(st_, P2) - want) < 1e-9 * max(1.0, want)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1.0, 0.7]))
def test_commutator_expectation(seed, hbar):
    state = random_state(np.random.default_rng(seed), 2, hbar=hbar)
    for k in range(2):
        xp = QuadForm.product(2, 2 * k, 2 * k + 1)
        px = QuadForm.product(2, 2 * k + 1, 2 * k)
        diff = gausscalc.expect_quadratic(state, xp - px)
        assert abs(diff - 1j * hbar) < 1e-9
    cross = QuadForm.product(2, 0, 3) - QuadForm.product(2, 3, 0)
    assert abs(gausscalc.expect_quadratic(state, cross)) < 1e-9


@settings(max_examples=40, deadline=None)
@given(widths, wavevecs, st.floats(-3.0, 3.0))
def test_shift_of_single_packet(s, k, L):
    st_ = gausscalc.make_packet(0.4, s, k=k)
    want = cmath.exp(1j * k * L) * math.exp(-L * L / (8 * s * s))
    assert abs(gausscalc.expect_shift(st_, 0, L) - want) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1),
       st.sampled_from(["cm_r", "R", "parity", "cm_r_N"]),
       st.fractions(1, 10, max_denominator=7), st.fractions(1, 10, max_denominator=7))
def test_point_maps_are_unitary(seed, which, m0, m1):
    rng = np.random.default_rng(seed)
    state = random_state(rng, 2)
    pm = {"cm_r": canon.map_cm_r(m0, m1), "R": canon.map_R(m0, m1),
          "parity": canon.parity_map([m0, m1], 1), "cm_r_N": canon.map_cm_r_N([m0, m1])}[which]
    moved = gausscalc.apply_point_map(state, pm)
    assert abs(moved.norm2() - state.norm2()) < 1e-10
    # psi'(S z) = psi(z)
    s = np.array([[float(x) for x in row] for row in pm.point_matrix()])
    z = rng.normal(size=(5, 2))
    assert np.allclose(moved(z @ s.T), state(z), atol=1e-12)


def test_point_map_rejects_nonunitary():
    state = random_state(np.random.default_rng(1), 2)
    with pytest.raises(ValueError):
        gausscalc.apply_point_map(state, canon.target_relational_map([1, 1]))
    with pytest.raises(ValueError):
        gausscalc.apply_point_map(state, canon.boost_map([1, 1], 1, 1))


def test_decay_state_branch_centres():
    ds = gausscalc.decay_state(4.0, 0.3, 1, 3, 0.1, 0.1)
    x = 3.0
    assert np.allclose(ds.terms[0].center, [x, -4 + x])
    assert np.allclose(ds.terms[1].center, [-x, 4 - x])
    cm = gausscalc.apply_point_map(ds, canon.map_cm_r(1, 3))
    assert np.allclose(cm.terms[0].center, [0, -4]) and np.allclose(cm.terms[1].center, [0, 4])
    rel = gausscalc.apply_point_map(ds, canon.map_R(1, 3))
    assert np.allclose(rel.terms[0].center, [-x, -4]) and np.allclose(rel.terms[1].center, [x, 4])


def test_relational_branch_width_is_sigma_s():
    # psi_R(u, v) marginal width along u at fixed v is sigma_S
    ds = gausscalc.product_packet([0.5, 1.0], [0.3, 0.4])
    rel = gausscalc.apply_point_map(ds, canon.map_R(1, 1))
    a = rel.terms[0].precision
    sig_cond = 1 / math.sqrt(4 * a[0, 0])
    assert abs(sig_cond - gausscalc.sigma_s(0.3, 0.4)) < 1e-14


def test_reduced_purity_product_and_entangled():
    prod_ = GaussianTerm.diagonal(1.0, [0, 0], [0.3, 0.8])
    assert abs(gausscalc.reduced_purity(prod_, 0) - 1.0) < 1e-14
    rel = gausscalc.apply_point_map(GaussState([prod_]), canon.map_R(1, 1)).terms[0]
    s0, s1 = 0.3, 0.8
    assert abs(gausscalc.reduced_purity(rel, 1) - s1 / math.hypot(s0, s1)) < 1e-12


def test_sigma_s_closed_form():
    assert gausscalc.sigma_s(3.0, 4.0) == 12.0 / 5.0
    assert abs(gausscalc.sigma_s(1.0, 1.0) - 1 / math.sqrt(2)) < 1e-16


@settings(max_examples=20, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.2, 1.5), st.floats(0.2, 1.5))
def test_gamma_factorization(a, b, s0, s1):
    u = np.linspace(-a - 3 * s0, -a + 3 * s0, 9)
    v = np.linspace(b - a - 3 * s1, b - a + 3 * s1, 9)
    pts = np.array([(x, y) for x in u for y in v])
    chk = gausscalc.gamma_factorization_check(a, b, s0, s1, pts)
    assert chk.max_rel_error < 1e-12
    assert abs(chk.sigma_s - gausscalc.sigma_s(s0, s1)) == 0


def test_gamma_needs_two_samples():
    with pytest.raises(ValueError):
        gausscalc.gamma_factorization_check(0, 0, 1, 1, np.zeros((1, 2)))


def test_quadform_compose_with_translation():
    # (X + 2)^2 expanded
    form = QuadForm.product(1, 0, 0).compose(canon.LinearPhaseMap(
        1, [[1, 0], [0, 1]], (2, 0)))
    assert form.const == 4 and np.allclose(form.lin, [4, 0])


def test_precision_must_be_positive_definite():
    with pytest.raises(ValueError):
        GaussianTerm(1.0, [0, 0], np.array([[1.0, 0], [0, -1.0]]), [0, 0])
    with pytest.raises(ValueError):
        GaussianTerm(1.0, [0, 0], np.array([[1.0, 0.5], [0, 1.0]]), [0, 0])


def test_state_json_roundtrip():
    state = random_state(np.random.default_rng(3), 2)
    back = GaussState.from_json(state.to_json())
    z = np.random.default_rng(4).normal(size=(6, 2))
    assert np.allclose(back(z), state(z), atol=1e-14)


def test_expect_rejects_size_mismatch():
    with pytest.raises(ValueError):
        gausscalc.expect_quadratic(gausscalc.make_packet(0, 1), QuadForm.variable(2, 0))
