"""Closed-form backend for superpositions of multivariate Gaussian amplitudes.

Each term is stored in the canonical form

    coeff * det(2A/pi)^(1/4) * exp(-(z - mu)^T A (z - mu) + i k.z)

with ``A`` real symmetric positive definite. A diagonal ``A = 1/(4 sigma^2)``
gives a unit-norm packet whose probability density has standard deviation
``sigma``. Linear substitutions keep this family closed once ``A`` is allowed
to be a full matrix.

The shift operator ``exp(-i L P/hbar)`` is pinned to act as
``psi(u) -> psi(u + L)``, i.e. ``exp(+i L P/hbar)`` in the usual
``P = -i hbar d/du`` representation. With this choice the decay-paradox expectation in
CM/relative coordinates is ``exp(+i phi)/2``; the opposite sign convention
gives ``exp(-i phi)/2``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .canon import LinearPhaseMap, MassList, PhaseIndex, to_fraction
from .canon import _det, _inverse  # exact helpers for substitution checks

__all__ = [
    "GaussianTerm",
    "GaussState",
    "QuadForm",
    "make_packet",
    "product_packet",
    "tensor",
    "decay_state",
    "apply_point_map",
    "apply_affine_substitution",
    "inner_product",
    "expect_quadratic",
    "expect_shift",
    "expect_shift_vector",
    "gamma_factorization_check",
    "GammaCheck",
    "sigma_s",
    "reduced_purity",
]


@dataclass(frozen=True)
class GaussianTerm:
    """One Gaussian amplitude; see the module docstring for the functional form."""

    coeff: complex
    center: np.ndarray
    precision: np.ndarray
    wavevec: np.ndarray

    def __post_init__(self):
        center = np.atleast_1d(np.asarray(self.center, dtype=float))
        n = center.size
        prec = np.asarray(self.precision, dtype=float).reshape(n, n)
        k = np.atleast_1d(np.asarray(self.wavevec, dtype=float))
        if k.size != n:
            raise ValueError("wavevec length must match center length")
        if np.abs(prec - prec.T).max() > 1e-10 * np.abs(prec).max():
            raise ValueError("precision matrix must be symmetric")
        prec = 0.5 * (prec + prec.T)
        if not np.all(np.isfinite(prec)) or np.any(np.linalg.eigvalsh(prec) <= 0):
            raise ValueError("precision matrix must be positive definite")
        object.__setattr__(self, "coeff", complex(self.coeff))
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "precision", prec)
        object.__setattr__(self, "wavevec", k)

    @classmethod
    def diagonal(cls, coeff, center, widths, wavevec=None) -> "GaussianTerm":
        widths = np.atleast_1d(np.asarray(widths, dtype=float))
        if np.any(~np.isfinite(widths)) or np.any(widths <= 0):
            raise ValueError("widths must be strictly positive and finite")
        if wavevec is None:
            wavevec = np.zeros_like(widths)
        return cls(coeff, center, np.diag(1.0 / (4.0 * widths**2)), wavevec)

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def is_diagonal(self) -> bool:
        return np.count_nonzero(self.precision - np.diag(np.diag(self.precision))) == 0

    @property
    def widths(self) -> np.ndarray:
        """Marginal standard deviations of the probability density."""
        cov = 0.25 * np.linalg.inv(self.precision)
        return np.sqrt(np.diag(cov))

    def log_norm(self) -> float:
        sign, logdet = np.linalg.slogdet(2.0 * self.precision / math.pi)
        return 0.25 * logdet

    def exponent_form(self):
        """Return ``(A, b, c)`` with term = exp(-z^T A z + b.z + c)."""
        a = self.precision
        b = 2.0 * a @ self.center + 1j * self.wavevec
        c = cmath.log(self.coeff) if self.coeff != 0 else -np.inf
        c = c + self.log_norm() - float(self.center @ a @ self.center)
        return a, b, c

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        d = z - self.center
        q = np.einsum("...i,ij,...j->...", d, self.precision, d)
        phase = z @ self.wavevec
        return self.coeff * math.exp(self.log_norm()) * np.exp(-q + 1j * phase)

    def substituted(self, s_inv: np.ndarray, shift: np.ndarray) -> "GaussianTerm":
        """Term for ``z -> g(s_inv @ z + shift)``, without Jacobian factor."""
        s = np.linalg.inv(s_inv)
        prec = s_inv.T @ self.precision @ s_inv
        center = s @ (self.center - shift)
        k = s_inv.T @ self.wavevec
        # det(2A'/pi)^(1/4) = det(2A/pi)^(1/4) |det s_inv|^(1/2)
        jac = abs(np.linalg.det(s_inv)) ** 0.5
        coeff = self.coeff * cmath.exp(1j * float(self.wavevec @ shift)) / jac
        return GaussianTerm(coeff, center, prec, k)

    def to_json(self) -> dict:
        rec = {
            "coeff": [self.coeff.real, self.coeff.imag],
            "center": self.center.tolist(),
            "wavevec": self.wavevec.tolist(),
        }
        if self.is_diagonal:
            rec["widths"] = (0.5 / np.sqrt(np.diag(self.precision))).tolist()
        else:
            rec["precision"] = self.precision.tolist()
        return rec

    @classmethod
    def from_json(cls, rec: dict) -> "GaussianTerm":
        coeff = complex(*rec["coeff"])
        if "widths" in rec:
            return cls.diagonal(coeff, rec["center"], rec["widths"], rec["wavevec"])
        return cls(coeff, rec["center"], rec["precision"], rec["wavevec"])


class GaussState:
    """Finite superposition of :class:`GaussianTerm` amplitudes."""

    def __init__(self, terms: Sequence[GaussianTerm], hbar: float = 1.0, masses=None):
        terms = tuple(terms)
        if not terms:
            raise ValueError("GaussState needs at least one term")
        dim = terms[0].dim
        if any(t.dim != dim for t in terms):
            raise ValueError("all terms must share the same dimension")
        if hbar <= 0:
            raise ValueError("hbar must be positive")
        self.terms = terms
        self.hbar = float(hbar)
        self.dim = dim
        if masses is None:
            masses = (1,) * dim
        self.masses = masses if isinstance(masses, MassList) else MassList(masses)
        if self.masses.n != dim:
            raise ValueError("one mass per degree of freedom is required")
        nrm = self.norm2()
        if not (np.isfinite(nrm) and nrm > 0):
            raise ValueError(f"state norm must be positive and finite, got {nrm}")

    def __repr__(self):
        return f"GaussState(dim={self.dim}, terms={len(self.terms)}, hbar={self.hbar})"

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return sum(t(z) for t in self.terms)

    def norm2(self) -> float:
        return inner_product(self, self).real

    def normalized(self) -> "GaussState":
        s = 1.0 / math.sqrt(self.norm2())
        return self.with_terms([_scaled(t, s) for t in self.terms])

    def with_terms(self, terms, masses=None) -> "GaussState":
        return GaussState(terms, self.hbar, self.masses if masses is None else masses)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "hbar": self.hbar,
            "masses": self.masses.as_strings(),
            "terms": [t.to_json() for t in self.terms],
        }

    @classmethod
    def from_json(cls, data: dict) -> "GaussState":
        return cls([GaussianTerm.from_json(r) for r in data["terms"]],
                   data.get("hbar", 1.0), data.get("masses"))


def _scaled(term: GaussianTerm, factor: complex) -> GaussianTerm:
    return GaussianTerm(term.coeff * factor, term.center, term.precision, term.wavevec)


def make_packet(center: float, sigma: float, k: float = 0.0,
                hbar: float = 1.0, mass=1) -> GaussState:
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    return GaussState([GaussianTerm.diagonal(1.0, [center], [sigma], [k])], hbar, [mass])


def product_packet(centers, sigmas, wavevecs=None, coeff: complex = 1.0,
                   hbar: float = 1.0, masses=None) -> GaussState:
    term = GaussianTerm.diagonal(coeff, centers, sigmas, wavevecs)
    return GaussState([term], hbar, masses)


def tensor(a: GaussState, b: GaussState) -> GaussState:
    if a.hbar != b.hbar:
        raise ValueError("hbar mismatch")
    terms = []
    na, nb = a.dim, b.dim
    for ta in a.terms:
        for tb in b.terms:
            prec = np.zeros((na + nb, na + nb))
            prec[:na, :na] = ta.precision
            prec[na:, na:] = tb.precision
            terms.append(GaussianTerm(ta.coeff * tb.coeff,
                                      np.concatenate([ta.center, tb.center]), prec,
                                      np.concatenate([ta.wavevec, tb.wavevec])))
    return GaussState(terms, a.hbar, tuple(a.masses) + tuple(b.masses))


def decay_state(d: float, phi: float, m0, m1, sigma0: float, sigma1: float,
                hbar: float = 1.0) -> GaussState:
    """Two-branch decay superposition with the centre of mass fixed at 0."""
    if not (d > 0 and sigma0 > 0 and sigma1 > 0):
        raise ValueError("d and widths must be positive")
    m0, m1 = to_fraction(m0), to_fraction(m1)
    if m0 <= 0 or m1 <= 0:
        raise ValueError("masses must be positive")
    x = d * float(m1 / (m0 + m1))
    s = 1 / math.sqrt(2.0)
    widths = [sigma0, sigma1]
    terms = [
        GaussianTerm.diagonal(s, [x, -d + x], widths),
        GaussianTerm.diagonal(s * cmath.exp(1j * phi), [-x, d - x], widths),
    ]
    return GaussState(terms, hbar, [m0, m1])


# -- substitutions -------------------------------------------------------------

def apply_affine_substitution(state: GaussState, s_inv: np.ndarray,
                              shift: np.ndarray | None = None) -> GaussState:
    """``psi'(z) = psi(s_inv z + shift)``; requires ``|det s_inv| = 1``."""
    s_inv = np.asarray(s_inv, dtype=float)
    shift = np.zeros(state.dim) if shift is None else np.asarray(shift, dtype=float)
    if abs(abs(np.linalg.det(s_inv)) - 1.0) > 1e-12:
        raise ValueError("substitution must have |det| = 1 to stay unitary")
    return state.with_terms([t.substituted(s_inv, shift) for t in state.terms])


def apply_point_map(state: GaussState, phase_map: LinearPhaseMap) -> GaussState:
    """Active action ``psi'(z) = psi(S^{-1} z)`` of a point transformation."""
    if phase_map.dim != state.dim:
        raise ValueError("map and state dimensions differ")
    s = phase_map.point_matrix()
    if s is None:
        raise ValueError(f"map {phase_map.name!r} is not a point transformation")
    if abs(_det(s)) != 1:
        raise ValueError(f"|det S| = {abs(_det(s))} != 1; induced map is not unitary")
    if phase_map.is_affine():
        raise ValueError("point map must be linear; use apply_affine_substitution for shifts")
    s_inv = np.array([[float(x) for x in row] for row in _inverse(s)])
    return state.with_terms([t.substituted(s_inv, np.zeros(state.dim)) for t in state.terms])


# -- overlaps and moments ------------------------------------------------------

def _pair_integral(ti: GaussianTerm, tj: GaussianTerm):
    """Log of ``int conj(t_i) t_j`` plus the combined Gaussian mean and covariance."""
    ai, bi, ci = ti.exponent_form()
    aj, bj, cj = tj.exponent_form()
    a = ai + aj
    b = np.conj(bi) + bj
    c = np.conj(ci) + cj
    a_inv = np.linalg.inv(a)
    n = a.shape[0]
    _, logdet = np.linalg.slogdet(a)
    log_i0 = c + 0.5 * (n * math.log(math.pi) - logdet) + 0.25 * (b @ a_inv @ b)
    mean = 0.5 * a_inv @ b
    cov = 0.5 * a_inv
    return log_i0, mean, cov


def _safe_exp(z: complex) -> complex:
    return 0j if z.real < -745 else cmath.exp(z)


def inner_product(a: GaussState, b: GaussState) -> complex:
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    if a.hbar != b.hbar:
        raise ValueError("hbar mismatch")
    total = 0j
    for ti in a.terms:
        for tj in b.terms:
            log_i0, _, _ = _pair_integral(ti, tj)
            total += _safe_exp(log_i0)
    return total


@dataclass(frozen=True)
class QuadForm:
    """Ordered polynomial ``const + lin.xi + sum_ab quad[a,b] xi_a xi_b``.

    ``xi`` is the ordered phase-space vector (X0, P0, X1, P1, ...). The
    product ``xi_a xi_b`` keeps operator order: ``xi_a`` on the left. A
    symmetric ``quad`` is therefore the Weyl-ordered form.
    """

    const: complex
    lin: np.ndarray
    quad: np.ndarray

    def __post_init__(self):
        lin = np.asarray(self.lin, dtype=complex)
        quad = np.asarray(self.quad, dtype=complex)
        if quad.shape != (lin.size, lin.size):
            raise ValueError("quad must be square and match lin")
        if lin.size % 2:
            raise ValueError("phase-space forms need an even number of variables")
        object.__setattr__(self, "const", complex(self.const))
        object.__setattr__(self, "lin", lin)
        object.__setattr__(self, "quad", quad)

    @property
    def size(self) -> int:
        return self.lin.size

    @classmethod
    def zero(cls, n: int) -> "QuadForm":
        return cls(0, np.zeros(2 * n), np.zeros((2 * n, 2 * n)))

    @classmethod
    def constant(cls, n: int, value: complex) -> "QuadForm":
        return cls(value, np.zeros(2 * n), np.zeros((2 * n, 2 * n)))

    @classmethod
    def linear(cls, coeffs, const: complex = 0) -> "QuadForm":
        coeffs = np.asarray(coeffs, dtype=complex)
        return cls(const, coeffs, np.zeros((coeffs.size, coeffs.size)))

    @classmethod
    def variable(cls, n: int, index) -> "QuadForm":
        i = index.flat if isinstance(index, PhaseIndex) else int(index)
        lin = np.zeros(2 * n)
        lin[i] = 1
        return cls.linear(lin)

    @classmethod
    def product(cls, n: int, left, right, coeff: complex = 1) -> "QuadForm":
        """``coeff * xi_left xi_right`` in that operator order."""
        i = left.flat if isinstance(left, PhaseIndex) else int(left)
        j = right.flat if isinstance(right, PhaseIndex) else int(right)
        quad = np.zeros((2 * n, 2 * n), dtype=complex)
        quad[i, j] = coeff
        return cls(0, np.zeros(2 * n), quad)

    @classmethod
    def weyl(cls, quad, lin=None, const: complex = 0) -> "QuadForm":
        quad = np.asarray(quad, dtype=complex)
        lin = np.zeros(quad.shape[0]) if lin is None else lin
        return cls(const, lin, 0.5 * (quad + quad.T))

    def symmetrized(self) -> "QuadForm":
        return QuadForm(self.const, self.lin, 0.5 * (self.quad + self.quad.T))

    def __add__(self, other: "QuadForm") -> "QuadForm":
        return QuadForm(self.const + other.const, self.lin + other.lin, self.quad + other.quad)

    def __sub__(self, other: "QuadForm") -> "QuadForm":
        return self + other.scale(-1)

    def scale(self, factor: complex) -> "QuadForm":
        return QuadForm(self.const * factor, self.lin * factor, self.quad * factor)

    def compose(self, phase_map: LinearPhaseMap) -> "QuadForm":
        """Substitute ``xi -> M xi + t``: the form evaluated on transformed variables."""
        if phase_map.size != self.size:
            raise ValueError("form and map sizes differ")
        m = phase_map.as_array()
        t = phase_map.translation_array()
        quad = m.T @ self.quad @ m
        lin = m.T @ self.lin + m.T @ (self.quad @ t) + m.T @ (self.quad.T @ t)
        const = self.const + self.lin @ t + t @ self.quad @ t
        return QuadForm(const, lin, quad)


def _apply_var(var: int, poly, a: np.ndarray, b: np.ndarray, hbar: float):
    """Apply phase-space variable ``var`` to ``poly(z) * g(z)``.

    ``poly`` is ``(q0, q1, q2)`` of degree <= 2; ``g = exp(-z.A.z + b.z + c)``.
    """
    q0, q1, q2 = poly
    k = var // 2
    n = q1.size
    if np.any(q2):
        raise ValueError("only products of at most two variables are supported")
    if var % 2 == 0:
        # X_k: multiply by z_k
        r0 = 0j
        r1 = np.zeros(n, complex)
        r1[k] = q0
        r2 = np.zeros((n, n), complex)
        r2[k, :] += q1
        return r0, r1, r2
    # P_k = -i hbar d/dz_k; d g / dz_k = (b_k - 2 (A z)_k) g
    ih = -1j * hbar
    r0 = ih * (q1[k] + q0 * b[k])
    r1 = ih * (q0 * (-2.0 * a[k]) + b[k] * q1)
    r2 = ih * (np.outer(q1, -2.0 * a[k]))
    return r0, r1, r2


def _form_on_term(form: QuadForm, term: GaussianTerm, hbar: float):
    """Polynomial p with ``form |term> = p(z) term(z)``."""
    a, b, _ = term.exponent_form()
    n = term.dim
    one = (1.0 + 0j, np.zeros(n, complex), np.zeros((n, n), complex))
    q0 = form.const
    q1 = np.zeros(n, complex)
    q2 = np.zeros((n, n), complex)
    singles = {}
    for v in range(form.size):
        singles[v] = _apply_var(v, one, a, b, hbar)
    for v in range(form.size):
        if form.lin[v] != 0:
            r0, r1, r2 = singles[v]
            q0 += form.lin[v] * r0
            q1 += form.lin[v] * r1
            q2 += form.lin[v] * r2
    rows, cols = np.nonzero(form.quad)
    for va, vb in zip(rows, cols):
        c = form.quad[va, vb]
        r0, r1, r2 = _apply_var(int(va), singles[int(vb)], a, b, hbar)
        q0 += c * r0
        q1 += c * r1
        q2 += c * r2
    return q0, q1, q2


def _matrix_element(ti: GaussianTerm, poly, tj: GaussianTerm) -> complex:
    log_i0, mean, cov = _pair_integral(ti, tj)
    i0 = _safe_exp(log_i0)
    if i0 == 0:
        return 0j
    q0, q1, q2 = poly
    second = np.outer(mean, mean) + cov
    return i0 * (q0 + q1 @ mean + np.sum(q2 * second))


def expect_quadratic(state: GaussState, form: QuadForm,
                     phase_map: LinearPhaseMap | None = None) -> complex:
    """Normalized ``<psi| f |psi>``; with ``phase_map`` the form is evaluated on
    the transformed variables, i.e. ``Tr[f(R') rho]``."""
    if phase_map is not None:
        form = form.compose(phase_map)
    if form.size != 2 * state.dim:
        raise ValueError(f"form has {form.size} variables, state needs {2 * state.dim}")
    num = 0j
    for tj in state.terms:
        poly = _form_on_term(form, tj, state.hbar)
        for ti in state.terms:
            num += _matrix_element(ti, poly, tj)
    return num / state.norm2()


def expect_shift_vector(state: GaussState, displacement, phase: complex = 1.0) -> complex:
    """Normalized ``<psi|psi(. + displacement)>`` times ``phase``."""
    disp = np.asarray(displacement, dtype=float)
    if disp.size != state.dim:
        raise ValueError("displacement length must match state dimension")
    shifted = apply_affine_substitution(state, np.eye(state.dim), disp)
    return phase * inner_product(state, shifted) / state.norm2()


def expect_shift(state: GaussState, dof: int, L: float) -> complex:
    """``<exp(-i L P_dof / hbar)>`` under the pinned convention psi(u) -> psi(u + L)."""
    if not 0 <= dof < state.dim:
        raise IndexError(f"dof {dof} out of range for dim {state.dim}")
    disp = np.zeros(state.dim)
    disp[dof] = L
    return expect_shift_vector(state, disp)


def reduced_purity(term: GaussianTerm, dof: int) -> float:
    """Purity of one degree of freedom of a single (pure) Gaussian term.

    Linear phases do not entangle, so only the precision matrix matters:
    the purity is ``1 / sqrt(A_kk (A^-1)_kk)``.
    """
    a = term.precision
    return float(1.0 / math.sqrt(a[dof, dof] * np.linalg.inv(a)[dof, dof]))


# -- crossing term of the relational map ---------------------------------------

def sigma_s(sigma0: float, sigma1: float) -> float:
    return sigma0 * sigma1 / math.sqrt(sigma0**2 + sigma1**2)


def _sqrt_gauss(z, center, sigma):
    return (2 * math.pi * sigma**2) ** -0.25 * np.exp(-((z - center) ** 2) / (4 * sigma**2))


@dataclass(frozen=True)
class GammaCheck:
    max_rel_error: float
    norm_constant: float
    sigma_s: float


def gamma_factorization_check(a: float, b: float, sigma0: float, sigma1: float,
                              samples) -> GammaCheck:
    """Compare the relational image of a product packet with its factorized form.

    The left side is ``psi(-u, v-u)`` computed through :func:`apply_point_map`;
    the right side is ``sqrt(G_{-a,sS}(u)) sqrt(G_{b-a,s1}(v)) Gamma(u, v)``.
    A single normalization constant is fitted by least squares on the ratio.
    """
    from .canon import map_R

    if not (sigma0 > 0 and sigma1 > 0):
        raise ValueError("widths must be positive")
    pts = np.asarray(samples, dtype=float).reshape(-1, 2)
    if len({tuple(p) for p in pts}) < 2:
        raise ValueError("degenerate sample set: need at least two distinct points")
    lab = product_packet([a, b], [sigma0, sigma1])
    rel = apply_point_map(lab, map_R(1, 1))
    lhs = rel(pts).real
    u, v = pts[:, 0], pts[:, 1]
    ss = sigma_s(sigma0, sigma1)
    gamma = np.exp((u + a) * (v - b + a) / (2 * sigma1**2))
    rhs = _sqrt_gauss(u, -a, ss) * _sqrt_gauss(v, b - a, sigma1) * gamma
    if np.any(rhs == 0):
        raise ValueError("samples too far from the packet: right side underflows")
    ratio = lhs / rhs
    const = float(np.mean(ratio))
    err = float(np.max(np.abs(ratio / const - 1.0)))
    return GammaCheck(err, const, ss)
