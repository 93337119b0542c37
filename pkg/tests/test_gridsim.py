import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_state
from qrf import _ext, gausscalc, gridsim
from qrf.canon import map_cm_r
from qrf.gausscalc import GaussianTerm, GaussState, QuadForm
from qrf.gridsim import BoxError, Grid1D


def _kernel_args(state, grids):
    return ([g.points for g in grids],
            [t.coeff * math.exp(t.log_norm()) for t in state.terms],
            [t.center for t in state.terms],
            [t.precision for t in state.terms],
            [t.wavevec for t in state.terms])


def test_grid_size_must_be_power_of_two():
    with pytest.raises(ValueError):
        Grid1D(-1, 1, 100)
    with pytest.raises(ValueError):
        Grid1D(-1, 1, 32)
    with pytest.raises(ValueError):
        Grid1D(1, -1, 64)


def test_fit_grid_makes_shift_whole_steps():
    g = gridsim.fit_grid(-1.0, 1.0, 0.2, 128, shift=3.3)
    steps = 3.3 / g.spacing
    assert abs(steps - round(steps)) < 1e-9


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_backends_agree(seed, dim):
    state = random_state(np.random.default_rng(seed), dim, nterms=2)
    grids = gridsim.auto_grids(state, 64)
    args = _kernel_args(state, grids)
    fast = _ext.sample_terms(*args)
    slow = _ext.python_sample_terms(*args)
    assert np.allclose(fast, slow, rtol=0, atol=1e-12 * np.abs(slow).max())


def test_backend_reported():
    assert _ext.BACKEND in ("cython", "python")


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_grid_moments_match_analytic(seed):
    state = random_state(np.random.default_rng(seed), 2, diagonal=True)
    gs = gridsim.sample(state, gridsim.auto_grids(state, 128))
    for k in range(2):
        assert abs(gridsim.expect_position(gs, k)
                   - gausscalc.expect_quadratic(state, QuadForm.variable(2, 2 * k)).real) < 1e-6
        assert abs(gridsim.expect_momentum(gs, k)
                   - gausscalc.expect_quadratic(state, QuadForm.variable(2, 2 * k + 1)).real) < 1e-6
    form = QuadForm.product(2, 0, 3) + QuadForm.product(2, 1, 1)
    assert abs(gridsim.expect_form(gs, form) - gausscalc.expect_quadratic(state, form)) < 1e-6


@pytest.mark.parametrize("L", [1.5, 1.234567])
def test_shift_paths_match_analytic(L):
    state = random_state(np.random.default_rng(8), 1, diagonal=True)
    gs = gridsim.sample(state, gridsim.auto_grids(state, 256, [1.5]))
    assert abs(gridsim.grid_shift_expect(gs, 0, L) - gausscalc.expect_shift(state, 0, L)) < 1e-6


def test_halving_spacing_is_converged():
    state = random_state(np.random.default_rng(5), 2, diagonal=True)
    form = QuadForm.product(2, 1, 1) + QuadForm.product(2, 0, 2)
    coarse = gridsim.sample(state, gridsim.auto_grids(state, 128))
    fine = gridsim.sample(state, gridsim.auto_grids(state, 256))
    assert abs(gridsim.expect_form(coarse, form) - gridsim.expect_form(fine, form)) < 1e-6


def test_box_too_small_raises():
    state = gausscalc.make_packet(0.0, 1.0)
    with pytest.raises(BoxError):
        gridsim.sample(state, [Grid1D(-3, 3, 128)])


def test_coarse_grid_raises():
    state = gausscalc.make_packet(0.0, 0.01)
    with pytest.raises(BoxError):
        gridsim.sample(state, [Grid1D(-1, 1, 64)])


def test_shift_larger_than_box_raises():
    state = gausscalc.make_packet(0.0, 0.5)
    gs = gridsim.sample(state, gridsim.auto_grids(state, 128))
    with pytest.raises(BoxError):
        gridsim.grid_shift_expect(gs, 0, 100.0)


def test_partial_trace_product_is_pure():
    state = gausscalc.product_packet([0.2, -0.4], [0.5, 0.8], [0.3, -1.0])
    rho = gridsim.partial_trace(gridsim.sample(state, gridsim.auto_grids(state, 128)), 1)
    assert abs(rho.trace() - 1) < 1e-12
    assert abs(rho.purity() - 1) < 1e-9
    assert abs(rho.expect_position() + 0.4) < 1e-9
    assert np.all(rho.eigenvalues() > -1e-9)


def test_partial_trace_two_branch_is_mixed():
    r = 1 / math.sqrt(2)
    state = GaussState([GaussianTerm.diagonal(r, [-3, -3], [0.4, 0.4]),
                        GaussianTerm.diagonal(r, [3, 3], [0.4, 0.4])])
    rho = gridsim.partial_trace(gridsim.sample(state, gridsim.auto_grids(state, 128)), 0)
    assert abs(rho.purity() - 0.5) < 1e-9


def test_density_shift_matches_analytic():
    ds = gausscalc.decay_state(2.0, 0.7, 1, 1, 0.3, 0.3)
    cm = gausscalc.apply_point_map(ds, map_cm_r(1, 1))
    gs = gridsim.sample(cm, gridsim.auto_grids(cm, 256, [0.0, 4.0]))
    rho = gridsim.partial_trace(gs, 1)
    for L in (4.0, 1.3):
        assert abs(gridsim.density_shift_expect(rho, L) - gausscalc.expect_shift(cm, 1, L)) < 1e-6


def test_density_op_validation():
    g = Grid1D(-1, 1, 64)
    with pytest.raises(ValueError):
        gridsim.DensityOp(g, np.eye(64))
    bad = np.zeros((64, 64), complex)
    bad[0, 1] = 1j
    bad[0, 0] = 1 / g.spacing
    with pytest.raises(ValueError):
        gridsim.DensityOp(g, bad)


def test_relative_reduced_requires_gauss_state():
    state = gausscalc.product_packet([0, 0, 0], [0.4, 0.4, 0.4], masses=[1, 1, 1])
    gs = gridsim.sample(state, gridsim.auto_grids(state, 64))
    with pytest.raises(TypeError):
        gridsim.relative_reduced_state(gs, 1)
    with pytest.raises(IndexError):
        gridsim.relative_reduced_state(state, 0)


def test_csv_exports_are_deterministic(tmp_path):
    state = gausscalc.product_packet([0.1, 0.2], [0.4, 0.6])
    outs = []
    for name in ("a", "b"):
        gs = gridsim.sample(state, gridsim.auto_grids(state, 64))
        rho = gridsim.partial_trace(gs, 0)
        gs.write_slice_csv(tmp_path / f"{name}_slice.csv", 0)
        rho.write_csv(tmp_path / f"{name}_rho.csv")
        outs.append(((tmp_path / f"{name}_slice.csv").read_bytes(),
                     (tmp_path / f"{name}_rho.csv").read_bytes()))
    assert outs[0] == outs[1]
    assert outs[0][1].startswith(b"row,col,re,im\n")
    assert b"\r" not in outs[0][0]


def test_pure_python_switch():
    env = dict(os.environ, QRF_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from qrf import _ext; print(_ext.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"
