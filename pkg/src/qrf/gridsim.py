"""Grid backend: sampled amplitudes, spectral momenta, partial traces, purity.

Transformed states are always produced analytically in :mod:`qrf.gausscalc`
and then sampled; nothing here interpolates a grid state onto new
coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _ext
from .canon import map_cm_r_pair
from .gausscalc import GaussState, QuadForm, apply_point_map

__all__ = [
    "Grid1D",
    "GridState",
    "DensityOp",
    "BoxError",
    "fit_grid",
    "auto_grids",
    "sample",
    "expect_position",
    "expect_momentum",
    "expect_form",
    "grid_overlap",
    "grid_shift_expect",
    "partial_trace",
    "density_shift_expect",
    "relative_reduced_state",
]

NORM_TOL = 1e-9
BOUNDARY_TOL = 1e-8
SAMPLE_TOL = 1e-6
MARGIN_SIGMAS = 10.0


class BoxError(ValueError):
    """The state does not fit its grid box."""


@dataclass(frozen=True)
class Grid1D:
    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if not self.hi > self.lo:
            raise ValueError("grid needs hi > lo")
        if self.n < 64 or self.n & (self.n - 1):
            raise ValueError(f"grid size must be a power of two >= 64, got {self.n}")

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / self.n

    @property
    def extent(self) -> float:
        return self.hi - self.lo

    @property
    def points(self) -> np.ndarray:
        return self.lo + self.spacing * np.arange(self.n)

    @property
    def wavenumbers(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n, self.spacing)


def fit_grid(cmin: float, cmax: float, sigma: float, n: int, shift: float = 0.0) -> Grid1D:
    """Box holding centres in [cmin, cmax] with a 10-sigma margin plus ``|shift|``.

    A ``shift`` of at least one grid step is made an integer number of
    steps, so shift expectations can use exact index offsets.
    """
    extent = (cmax - cmin) + 2 * MARGIN_SIGMAS * sigma + abs(shift)
    steps = math.floor(abs(shift) * n / extent)
    if steps:
        # widen the box slightly so the shift spans a whole number of steps
        extent = n * abs(shift) / steps
    mid = 0.5 * (cmin + cmax)
    return Grid1D(mid - extent / 2, mid + extent / 2, n)


def auto_grids(state: GaussState, n: int | Sequence[int], shifts=None) -> list[Grid1D]:
    ns = [n] * state.dim if isinstance(n, int) else list(n)
    shifts = [0.0] * state.dim if shifts is None else list(shifts)
    centers = np.array([t.center for t in state.terms])
    widths = np.array([t.widths for t in state.terms])
    return [fit_grid(centers[:, k].min(), centers[:, k].max(), widths[:, k].max(),
                     ns[k], shifts[k]) for k in range(state.dim)]


def _cell(grids: Sequence[Grid1D]) -> float:
    return float(np.prod([g.spacing for g in grids]))


@dataclass(frozen=True, eq=False)
class GridState:
    grids: tuple[Grid1D, ...]
    amp: np.ndarray
    hbar: float = 1.0

    def __post_init__(self):
        grids = tuple(self.grids)
        if not 1 <= len(grids) <= 3:
            raise ValueError("grid states support 1 to 3 degrees of freedom")
        amp = np.asarray(self.amp, dtype=np.complex128)
        if amp.shape != tuple(g.n for g in grids):
            raise ValueError("amplitude shape does not match grids")
        norm = float(np.sum(np.abs(amp) ** 2) * _cell(grids))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"grid state not normalized: {norm}")
        peak = np.abs(amp).max()
        for axis in range(amp.ndim):
            edge = max(np.abs(np.take(amp, 0, axis)).max(), np.abs(np.take(amp, -1, axis)).max())
            if edge > BOUNDARY_TOL * peak:
                raise BoxError(f"amplitude reaches the box edge on axis {axis} "
                               f"({edge / peak:.3g} of peak)")
        amp.setflags(write=False)
        object.__setattr__(self, "grids", grids)
        object.__setattr__(self, "amp", amp)

    @property
    def dim(self) -> int:
        return len(self.grids)

    def marginal(self, dof: int) -> np.ndarray:
        others = tuple(i for i in range(self.dim) if i != dof)
        cell = _cell([self.grids[i] for i in others]) if others else 1.0
        return np.sum(np.abs(self.amp) ** 2, axis=others) * cell

    def write_slice_csv(self, path, dof: int) -> None:
        """Slice through the amplitude peak along ``dof`` plus the marginal density."""
        peak = np.unravel_index(np.argmax(np.abs(self.amp)), self.amp.shape)
        index = list(peak)
        index[dof] = slice(None)
        line = self.amp[tuple(index)]
        marg = self.marginal(dof)
        x = self.grids[dof].points
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("x,re,im,marginal\n")
            for xi, a, m in zip(x, line, marg):
                fh.write(f"{xi:.17g},{a.real:.17g},{a.imag:.17g},{m:.17g}\n")


def sample(state: GaussState, grids: Sequence[Grid1D]) -> GridState:
    grids = tuple(grids)
    if len(grids) != state.dim:
        raise ValueError("one grid per degree of freedom is required")
    coeffs = [t.coeff * math.exp(t.log_norm()) for t in state.terms]
    amp = _ext.sample_terms([g.points for g in grids], coeffs,
                            [t.center for t in state.terms],
                            [t.precision for t in state.terms],
                            [t.wavevec for t in state.terms])
    norm = float(np.sum(np.abs(amp) ** 2) * _cell(grids))
    expected = state.norm2()
    peak = np.abs(amp).max()
    if peak == 0:
        raise BoxError("state is not supported on the grid")
    for axis in range(amp.ndim):
        edge = max(np.abs(np.take(amp, 0, axis)).max(), np.abs(np.take(amp, -1, axis)).max())
        if edge > BOUNDARY_TOL * peak:
            raise BoxError(f"packet leaks outside the box on axis {axis}")
    if abs(norm / expected - 1.0) > SAMPLE_TOL:
        raise BoxError(f"grid norm {norm} differs from analytic {expected}; grid too coarse")
    return GridState(grids, amp / math.sqrt(norm), state.hbar)


# -- operators on grid arrays --------------------------------------------------

def _coords(grids: Sequence[Grid1D], axis: int) -> np.ndarray:
    shape = [1] * len(grids)
    shape[axis] = grids[axis].n
    return grids[axis].points.reshape(shape)


def _momentum(arr: np.ndarray, grids, axis: int, hbar: float) -> np.ndarray:
    k = grids[axis].wavenumbers
    shape = [1] * arr.ndim
    shape[axis] = k.size
    spec = np.fft.fft(arr, axis=axis) * (hbar * k).reshape(shape)
    return np.fft.ifft(spec, axis=axis)


def _apply_variable(arr: np.ndarray, grids, var: int, hbar: float) -> np.ndarray:
    axis = var // 2
    if var % 2 == 0:
        return arr * _coords(grids, axis)
    return _momentum(arr, grids, axis, hbar)


def _check_dof(state: GridState, dof: int) -> None:
    if not 0 <= dof < state.dim:
        raise IndexError(f"dof {dof} out of range for {state.dim} grid axes")


def expect_position(state: GridState, dof: int) -> float:
    _check_dof(state, dof)
    return float(np.sum(state.marginal(dof) * state.grids[dof].points) * state.grids[dof].spacing)


def expect_momentum(state: GridState, dof: int) -> float:
    _check_dof(state, dof)
    spec = np.fft.fft(state.amp, axis=dof)
    k = state.grids[dof].wavenumbers
    weights = np.sum(np.abs(spec) ** 2, axis=tuple(i for i in range(state.dim) if i != dof))
    return float(state.hbar * np.sum(weights * k) / np.sum(weights))


def expect_form(state: GridState, form: QuadForm) -> complex:
    """``<psi| f |psi>`` with X as multiplication and P applied spectrally."""
    if form.size != 2 * state.dim:
        raise ValueError("form size does not match grid state")
    psi = state.amp
    acc = form.const * psi
    singles = {}
    for v in range(form.size):
        if form.lin[v] != 0 or np.any(form.quad[:, v] != 0):
            singles[v] = _apply_variable(psi, state.grids, v, state.hbar)
    for v in range(form.size):
        if form.lin[v] != 0:
            acc = acc + form.lin[v] * singles[v]
    rows, cols = np.nonzero(form.quad)
    for a, b in zip(rows, cols):
        acc = acc + form.quad[a, b] * _apply_variable(singles[int(b)], state.grids,
                                                       int(a), state.hbar)
    return complex(np.vdot(psi, acc) * _cell(state.grids))


def grid_overlap(a: GridState, b: GridState) -> complex:
    if a.grids != b.grids:
        raise ValueError("grid states live on different grids")
    return complex(np.vdot(a.amp, b.amp) * _cell(a.grids))


def _shift_axis(arr: np.ndarray, axis: int, grid: Grid1D, L: float) -> np.ndarray:
    """Samples of ``f(u + L)`` on the same grid, zero where ``u + L`` leaves the box."""
    if abs(L) >= grid.extent:
        raise BoxError(f"displacement {L} exceeds the box extent {grid.extent}")
    steps = L / grid.spacing
    nearest = round(steps)
    if abs(steps - nearest) < 1e-9:
        out = np.zeros_like(arr)
        src = [slice(None)] * arr.ndim
        dst = [slice(None)] * arr.ndim
        if nearest >= 0:
            src[axis] = slice(nearest, None)
            dst[axis] = slice(0, grid.n - nearest)
        else:
            src[axis] = slice(0, grid.n + nearest)
            dst[axis] = slice(-nearest, None)
        out[tuple(dst)] = arr[tuple(src)]
        return out
    # band-limited shift on a zero-padded copy, so content never wraps around
    pad = [(0, 0)] * arr.ndim
    pad[axis] = (0, grid.n)
    padded = np.pad(arr, pad)
    k = 2 * np.pi * np.fft.fftfreq(2 * grid.n, grid.spacing)
    shape = [1] * arr.ndim
    shape[axis] = k.size
    shifted = np.fft.ifft(np.fft.fft(padded, axis=axis) * np.exp(1j * k * L).reshape(shape),
                          axis=axis)
    return np.take(shifted, np.arange(grid.n), axis=axis)


def grid_shift_expect(state: GridState, dof: int, L: float) -> complex:
    """``<exp(-i L P_dof/hbar)>`` with the pinned action psi(u) -> psi(u + L)."""
    _check_dof(state, dof)
    shifted = _shift_axis(state.amp, dof, state.grids[dof], L)
    return complex(np.vdot(state.amp, shifted) * _cell(state.grids))


# -- reduced states ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DensityOp:
    """Reduced density kernel ``rho(u, u')`` sampled on ``grid``.

    ``mat`` holds kernel values; the trace is ``sum(diag(mat)) * spacing``.
    """

    grid: Grid1D
    mat: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.mat, dtype=np.complex128)
        if mat.shape != (self.grid.n, self.grid.n):
            raise ValueError("density matrix shape does not match grid")
        scale = np.abs(mat).max()
        if np.abs(mat - mat.conj().T).max() > NORM_TOL * max(scale, 1.0):
            raise ValueError("density matrix is not Hermitian")
        tr = self.trace_of(mat)
        if abs(tr - 1.0) > NORM_TOL:
            raise ValueError(f"density matrix trace is {tr}, expected 1")
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)

    def trace_of(self, mat) -> float:
        return float(np.real(np.trace(mat)) * self.grid.spacing)

    def trace(self) -> float:
        return self.trace_of(self.mat)

    def purity(self) -> float:
        return float(np.sum(np.abs(self.mat) ** 2) * self.grid.spacing**2)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.mat * self.grid.spacing)

    def expect_position(self) -> float:
        return float(np.real(np.sum(np.diag(self.mat) * self.grid.points)) * self.grid.spacing)

    def write_csv(self, path) -> None:
        n = self.grid.n
        rows, cols = np.divmod(np.arange(n * n), n)
        flat = self.mat.ravel()
        lines = [f"{r},{c},{z.real:.17g},{z.imag:.17g}\n" for r, c, z in zip(rows, cols, flat)]
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("row,col,re,im\n")
            fh.writelines(lines)


def partial_trace(state: GridState, keep: int) -> DensityOp:
    if state.dim < 2:
        raise ValueError("partial trace needs at least two degrees of freedom")
    if not 0 <= keep < state.dim:
        raise IndexError(f"keep={keep} out of range for {state.dim} axes")
    traced = [g for i, g in enumerate(state.grids) if i != keep]
    a = np.moveaxis(state.amp, keep, 0).reshape(state.grids[keep].n, -1)
    rho = (a @ a.conj().T) * _cell(traced)
    rho = 0.5 * (rho + rho.conj().T)
    return DensityOp(state.grids[keep], rho)


def density_shift_expect(rho: DensityOp, L: float) -> complex:
    """``Tr(exp(-i L P/hbar) rho) = int rho(u + L, u) du`` under the pinned convention."""
    shifted = _shift_axis(rho.mat, 0, rho.grid, L)
    return complex(np.trace(shifted) * rho.grid.spacing)


def relative_reduced_state(state: GaussState, j: int, n: int = 128,
                           shift: float = 0.0) -> DensityOp:
    """Reduced state of particle ``j`` relative to particle 0.

    The pair (0, j) is mapped to centre-of-mass and relative coordinates;
    every other partition is then traced out. ``shift`` reserves box room
    on the relative axis for later shift expectations.
    """
    if not isinstance(state, GaussState):
        raise TypeError("relative_reduced_state transforms analytically; pass a GaussState")
    if state.dim > 3:
        raise ValueError("grid path supports at most three degrees of freedom")
    if not 1 <= j < state.dim:
        raise IndexError(f"j must be in 1..{state.dim - 1}, got {j}")
    moved = apply_point_map(state, map_cm_r_pair(state.masses, j))
    shifts = [0.0] * state.dim
    shifts[j] = shift
    grid_state = sample(moved, auto_grids(moved, n, shifts))
    return partial_trace(grid_state, j)
