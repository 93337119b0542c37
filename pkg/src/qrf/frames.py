"""Catalog of frame transformations and the two expectation prescriptions.

Every transformation ``T`` is stored through its passive table
``T^dagger xi T = M xi + t``. The measured-in-the-new-frame value of an
observable ``O`` is ``<psi|T^dagger O T|psi>`` (passive) or, equivalently,
``<T psi|O|T psi>`` (active). For the Galilean boost the stored ``T`` is
``T_G^dagger`` with ``T_G = exp(i(m v X - v t P)/hbar)``, so the passive
table reads ``X -> X - v t``, ``P -> P - m v``.
"""
from __future__ import annotations

import cmath
import enum
from dataclasses import dataclass, field

import numpy as np

from . import canon
from .canon import LinearPhaseMap, MassList, NoGoCertificate
from .gausscalc import (GaussState, QuadForm, apply_affine_substitution, apply_point_map,
                        expect_quadratic, expect_shift_vector)

__all__ = [
    "TransformKind",
    "FrameTransform",
    "Shift",
    "NoUnitaryError",
    "InvarianceResult",
    "boost",
    "parity",
    "cm_rel",
    "relational",
    "cm_rel_n",
    "target_relational",
    "castro_sub",
    "catalog",
    "passive_expect",
    "active_state",
    "invariance_check",
]


class TransformKind(enum.Enum):
    BOOST = "Boost"
    PARITY = "Parity"
    CM_REL = "CMRel"
    RELATIONAL = "Relational"
    CM_REL_N = "CMRelN"
    TARGET_RELATIONAL = "TargetRelational"
    CASTRO_SUB = "CastroSub"


_ACTIVE = {TransformKind.BOOST, TransformKind.PARITY, TransformKind.CM_REL,
           TransformKind.RELATIONAL, TransformKind.CM_REL_N}


@dataclass(frozen=True)
class FrameTransform:
    kind: TransformKind
    masses: MassList
    phase_map: LinearPhaseMap
    params: dict = field(default_factory=dict)

    @property
    def has_active_action(self) -> bool:
        return self.kind in _ACTIVE

    @property
    def name(self) -> str:
        return self.kind.value

    @property
    def dim(self) -> int:
        return self.phase_map.dim


@dataclass(frozen=True)
class Shift:
    """Shift operator ``exp(-i L P_dof / hbar)``."""

    dof: int
    L: float


class NoUnitaryError(RuntimeError):
    """Raised when an active action is requested for a map with no unitary."""

    def __init__(self, message: str, certificate: NoGoCertificate | None = None):
        super().__init__(message)
        self.certificate = certificate


def _ml(masses) -> MassList:
    return masses if isinstance(masses, MassList) else MassList(masses)


def boost(v, t, masses=(1,)) -> FrameTransform:
    ms = _ml(masses)
    return FrameTransform(TransformKind.BOOST, ms, canon.boost_map(ms, v, t),
                          {"v": v, "t": t})


def parity(masses=(1,), particle: int = 0) -> FrameTransform:
    ms = _ml(masses)
    return FrameTransform(TransformKind.PARITY, ms, canon.parity_map(ms, particle),
                          {"particle": particle})


def cm_rel(m0, m1) -> FrameTransform:
    return FrameTransform(TransformKind.CM_REL, MassList((m0, m1)), canon.map_cm_r(m0, m1))


def relational(m0, m1) -> FrameTransform:
    return FrameTransform(TransformKind.RELATIONAL, MassList((m0, m1)), canon.map_R(m0, m1))


def cm_rel_n(masses) -> FrameTransform:
    ms = _ml(masses)
    return FrameTransform(TransformKind.CM_REL_N, ms, canon.map_cm_r_N(ms))


def target_relational(masses, completion: str = "total") -> FrameTransform:
    ms = _ml(masses)
    return FrameTransform(TransformKind.TARGET_RELATIONAL, ms,
                          canon.target_relational_map(ms, completion),
                          {"completion": completion})


def castro_sub(masses) -> FrameTransform:
    ms = _ml(masses)
    return FrameTransform(TransformKind.CASTRO_SUB, ms, canon.map_castro(ms))


def catalog(masses) -> list[FrameTransform]:
    """Every transformation with an active action that fits ``len(masses)`` particles."""
    ms = _ml(masses)
    out = [boost(0.7, 1.3, ms), parity(ms)]
    if ms.n == 2:
        out += [cm_rel(ms[0], ms[1]), relational(ms[0], ms[1])]
    if ms.n >= 2:
        out.append(cm_rel_n(ms))
    return out


def _check_dim(transform: FrameTransform, state: GaussState) -> None:
    if transform.dim != state.dim:
        raise ValueError(f"{transform.name} acts on {transform.dim} particles, "
                         f"state has {state.dim}")


def _shift_expect(phase_map: LinearPhaseMap, shift: Shift, state: GaussState) -> complex:
    # P'_dof = c.P + const; the pinned shift psi(u) -> psi(u + L) is
    # exp(+i L P/hbar) for P = -i hbar d/du, hence the sign of the phase
    row = np.array([float(x) for x in phase_map.row(2 * shift.dof + 1)])
    if np.any(row[0::2] != 0):
        raise ValueError("transformed momentum mixes in positions; no shift form")
    const = float(phase_map.translation[2 * shift.dof + 1])
    phase = cmath.exp(1j * shift.L * const / state.hbar)
    return expect_shift_vector(state, shift.L * row[1::2], phase)


def passive_expect(transform: FrameTransform, observable, state: GaussState) -> complex:
    """``<psi| O(R') |psi>``: the observable on the transformed variables, state untouched."""
    _check_dim(transform, state)
    if isinstance(observable, Shift):
        if not 0 <= observable.dof < state.dim:
            raise IndexError("shift dof out of range")
        return _shift_expect(transform.phase_map, observable, state)
    return expect_quadratic(state, observable, transform.phase_map)


def active_state(transform: FrameTransform, state: GaussState) -> GaussState:
    """``T |psi>`` for transformations that have a unitary."""
    _check_dim(transform, state)
    if transform.kind is TransformKind.TARGET_RELATIONAL:
        cert = canon.nogo_certificate(transform.masses, transform.params["completion"])
        raise NoUnitaryError(
            f"no unitary realizes the fully relative variables "
            f"(bracket deviation up to {cert.max_entry})", cert)
    if transform.kind is TransformKind.CASTRO_SUB:
        raise NoUnitaryError("subsystem variables have no active action in this catalog")
    if transform.kind is TransformKind.BOOST:
        return _boost_state(transform, state)
    return apply_point_map(state, transform.phase_map)


def _boost_state(transform: FrameTransform, state: GaussState) -> GaussState:
    # T_G^dagger psi(z) = exp(-i m v^2 t/(2 hbar)) exp(-i m v z/hbar) psi(z + v t)
    v, t = float(transform.params["v"]), float(transform.params["t"])
    hbar = state.hbar
    masses = np.array([float(m) for m in transform.masses])
    moved = apply_affine_substitution(state, np.eye(state.dim), np.full(state.dim, v * t))
    kick = -masses * v / hbar
    glob = cmath.exp(-1j * float(np.sum(masses)) * v**2 * t / (2 * hbar))
    terms = [type(tm)(tm.coeff * glob, tm.center, tm.precision, tm.wavevec + kick)
             for tm in moved.terms]
    return moved.with_terms(terms)


@dataclass(frozen=True)
class InvarianceResult:
    residual: float
    primed_value: complex
    lab_value: complex


def invariance_check(transform: FrameTransform, observable: QuadForm,
                     state: GaussState) -> InvarianceResult:
    """Compare ``<psi'|T O T^dagger|psi'>`` with ``<psi|O|psi>``.

    ``T O T^dagger`` is the observable composed with the inverse phase map.
    """
    if not transform.has_active_action:
        raise NoUnitaryError(f"{transform.name} has no unitary to check")
    moved = active_state(transform, state)
    conjugated = observable.compose(transform.phase_map.inverse())
    primed = expect_quadratic(moved, conjugated)
    lab = expect_quadratic(state, observable)
    return InvarianceResult(abs(primed - lab), primed, lab)
