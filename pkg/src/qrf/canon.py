"""Exact phase-space algebra for linear frame transformations.

A frame transformation with a linear action on the canonical variables is
stored as an affine map ``xi' = M xi + t`` over the ordered basis

    (X_0, P_0, X_1, P_1, ..., X_{N-1}, P_{N-1})

Row ``i`` of ``M`` expands the transformed variable ``i`` over that basis.
Matrices hold :class:`fractions.Fraction` entries, so canonicity checks are
exact. Commutator tables store the coefficient of ``i*hbar`` only.

Particle labels are 0-based throughout. For the subsystem (Castro-style)
variables, particle 0 is the position reference, particle 1 the velocity
reference, and particles 2..N-1 are described relative to them.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Kind",
    "PhaseIndex",
    "MassList",
    "LinearPhaseMap",
    "CommutatorTable",
    "NoGoCertificate",
    "to_fraction",
    "symplectic_form",
    "commutator_table",
    "is_canonical",
    "compose",
    "identity_map",
    "boost_map",
    "parity_map",
    "map_cm_r",
    "map_cm_r_pair",
    "map_R",
    "map_cm_r_N",
    "target_relational_map",
    "map_castro",
    "nogo_certificate",
    "mass_limit_sweep",
]

Matrix = tuple[tuple[Fraction, ...], ...]


def to_fraction(value) -> Fraction:
    """Convert ``value`` to an exact rational.

    Strings such as ``"3/4"`` or ``"1e-6"`` and floats are parsed through
    their decimal text, so ``1e-6`` becomes exactly ``1/1000000``.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not masses")
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, float):
        if not np.isfinite(value):
            raise ValueError(f"non-finite value {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as a rational")


def _as_offset(value):
    # exact where possible, float otherwise
    if isinstance(value, float):
        return value
    return to_fraction(value)


class Kind(enum.Enum):
    POSITION = 0
    MOMENTUM = 1


@dataclass(frozen=True)
class PhaseIndex:
    """Position of ``X_particle`` or ``P_particle`` in the ordered basis."""

    particle: int
    kind: Kind

    def __post_init__(self):
        if self.particle < 0:
            raise ValueError("particle index must be non-negative")

    @property
    def flat(self) -> int:
        return 2 * self.particle + self.kind.value

    @classmethod
    def X(cls, particle: int) -> "PhaseIndex":
        return cls(particle, Kind.POSITION)

    @classmethod
    def P(cls, particle: int) -> "PhaseIndex":
        return cls(particle, Kind.MOMENTUM)

    def label(self) -> str:
        return f"{'X' if self.kind is Kind.POSITION else 'P'}{self.particle}"


def _flat(index, size: int) -> int:
    i = index.flat if isinstance(index, PhaseIndex) else int(index)
    if not 0 <= i < size:
        raise IndexError(f"phase index {index!r} out of range for {size} variables")
    return i


@dataclass(frozen=True)
class MassList:
    masses: tuple[Fraction, ...]

    def __init__(self, masses: Iterable):
        ms = tuple(to_fraction(m) for m in masses)
        if not ms:
            raise ValueError("MassList needs at least one mass")
        if any(m <= 0 for m in ms):
            raise ValueError(f"masses must be strictly positive, got {ms}")
        object.__setattr__(self, "masses", ms)

    def __len__(self) -> int:
        return len(self.masses)

    def __getitem__(self, i: int) -> Fraction:
        return self.masses[i]

    def __iter__(self):
        return iter(self.masses)

    @property
    def n(self) -> int:
        return len(self.masses)

    @property
    def total(self) -> Fraction:
        return sum(self.masses, Fraction(0))

    def reduced(self, i: int, j: int) -> Fraction:
        """Reduced mass ``m_i m_j / (m_i + m_j)``."""
        return self.masses[i] * self.masses[j] / (self.masses[i] + self.masses[j])

    def scaled(self, ratio) -> "MassList":
        """Scale every mass except ``m_0`` by ``ratio``."""
        r = to_fraction(ratio)
        return MassList((self.masses[0],) + tuple(r * m for m in self.masses[1:]))

    def as_strings(self) -> list[str]:
        return [str(m) for m in self.masses]


def _masses(masses) -> MassList:
    return masses if isinstance(masses, MassList) else MassList(masses)


# -- exact dense linear algebra on tuples of Fractions -----------------------

def _zeros(n: int, m: int | None = None) -> list[list[Fraction]]:
    m = n if m is None else m
    return [[Fraction(0)] * m for _ in range(n)]


def _eye(n: int) -> list[list[Fraction]]:
    out = _zeros(n)
    for i in range(n):
        out[i][i] = Fraction(1)
    return out


def _freeze(rows) -> Matrix:
    return tuple(tuple(to_fraction(x) for x in row) for row in rows)


def _matmul(a: Sequence[Sequence], b: Sequence[Sequence]) -> list[list]:
    inner = len(b)
    cols = len(b[0])
    out = []
    for row in a:
        out.append([sum((row[k] * b[k][j] for k in range(inner) if row[k]), Fraction(0))
                    for j in range(cols)])
    return out


def _transpose(a: Sequence[Sequence]) -> list[list]:
    return [list(col) for col in zip(*a)]


def _inverse(a: Sequence[Sequence[Fraction]]) -> list[list[Fraction]]:
    n = len(a)
    work = [list(row) + e for row, e in zip(a, _eye(n))]
    for col in range(n):
        pivot = next((r for r in range(col, n) if work[r][col] != 0), None)
        if pivot is None:
            raise ValueError("matrix is singular")
        work[col], work[pivot] = work[pivot], work[col]
        p = work[col][col]
        work[col] = [x / p for x in work[col]]
        for r in range(n):
            if r != col and work[r][col] != 0:
                f = work[r][col]
                work[r] = [x - f * y for x, y in zip(work[r], work[col])]
    return [row[n:] for row in work]


def _det(a: Sequence[Sequence[Fraction]]) -> Fraction:
    n = len(a)
    work = [list(row) for row in a]
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if work[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            work[col], work[pivot] = work[pivot], work[col]
            det = -det
        p = work[col][col]
        det *= p
        for r in range(col + 1, n):
            f = work[r][col] / p
            if f:
                work[r] = [x - f * y for x, y in zip(work[r], work[col])]
    return det


# -- maps and tables ---------------------------------------------------------

@dataclass(frozen=True)
class LinearPhaseMap:
    """Affine map ``xi' = matrix @ xi + translation`` on 2N canonical variables."""

    dim: int
    matrix: Matrix
    translation: tuple = field(default=())
    name: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be at least 1")
        size = 2 * self.dim
        mat = _freeze(self.matrix)
        if len(mat) != size or any(len(row) != size for row in mat):
            raise ValueError(f"matrix must be {size}x{size}")
        object.__setattr__(self, "matrix", mat)
        trans = self.translation or (0,) * size
        if len(trans) != size:
            raise ValueError(f"translation must have length {size}")
        object.__setattr__(self, "translation", tuple(_as_offset(t) for t in trans))

    @property
    def size(self) -> int:
        return 2 * self.dim

    def row(self, index) -> tuple[Fraction, ...]:
        return self.matrix[_flat(index, self.size)]

    def as_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.matrix])

    def translation_array(self) -> np.ndarray:
        return np.array([float(t) for t in self.translation])

    def is_affine(self) -> bool:
        return any(t != 0 for t in self.translation)

    def inverse(self) -> "LinearPhaseMap":
        inv = _inverse(self.matrix)
        shift = [-sum((inv[i][k] * self.translation[k] for k in range(self.size)), Fraction(0))
                 for i in range(self.size)]
        return LinearPhaseMap(self.dim, inv, tuple(shift), name=f"inverse({self.name})")

    def position_block(self) -> list[list[Fraction]]:
        """Coefficients of X' rows over X columns."""
        return [[self.matrix[2 * i][2 * j] for j in range(self.dim)] for i in range(self.dim)]

    def point_matrix(self) -> list[list[Fraction]] | None:
        """Spatial matrix S if this is a point transformation, else None.

        A point transformation has ``X' = S X`` and ``P' = S^{-T} P``. Only
        those have a wavefunction action by coordinate substitution.
        """
        n = self.dim
        for i in range(n):
            for j in range(n):
                if self.matrix[2 * i][2 * j + 1] != 0 or self.matrix[2 * i + 1][2 * j] != 0:
                    return None
        s = self.position_block()
        if _det(s) == 0:
            return None
        s_inv_t = _transpose(_inverse(s))
        for i in range(n):
            for j in range(n):
                if self.matrix[2 * i + 1][2 * j + 1] != s_inv_t[i][j]:
                    return None
        return s

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "dim": self.dim,
            "matrix": [[str(x) for x in row] for row in self.matrix],
            "translation": [str(t) for t in self.translation],
        }


@dataclass(frozen=True)
class CommutatorTable:
    """``[A'_i, A'_j] = i hbar entries[i][j]``."""

    entries: Matrix

    def __post_init__(self):
        object.__setattr__(self, "entries", _freeze(self.entries))

    @property
    def size(self) -> int:
        return len(self.entries)

    def __getitem__(self, key) -> Fraction:
        i, j = key
        return self.entries[_flat(i, self.size)][_flat(j, self.size)]

    def __sub__(self, other: "CommutatorTable") -> "CommutatorTable":
        return CommutatorTable([[a - b for a, b in zip(ra, rb)]
                                for ra, rb in zip(self.entries, other.entries)])

    def is_antisymmetric(self) -> bool:
        n = self.size
        return all(self.entries[i][j] == -self.entries[j][i] for i in range(n) for j in range(n))

    def max_abs(self) -> Fraction:
        return max(abs(x) for row in self.entries for x in row)

    def block(self, particles: Sequence[int]) -> "CommutatorTable":
        """Sub-table restricted to the variables of ``particles``."""
        idx = [2 * p + k for p in particles for k in (0, 1)]
        return CommutatorTable([[self.entries[i][j] for j in idx] for i in idx])

    def to_json(self) -> list[list[str]]:
        return [[str(x) for x in row] for row in self.entries]

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, data) -> "CommutatorTable":
        if isinstance(data, str):
            data = json.loads(data)
        return cls([[Fraction(x) for x in row] for row in data])


def symplectic_form(n: int) -> CommutatorTable:
    if n < 1:
        raise ValueError("symplectic form needs N >= 1")
    omega = _zeros(2 * n)
    for i in range(n):
        omega[2 * i][2 * i + 1] = Fraction(1)
        omega[2 * i + 1][2 * i] = Fraction(-1)
    return CommutatorTable(omega)


def commutator_table(phase_map: LinearPhaseMap) -> CommutatorTable:
    """Exact ``M Omega M^T``; translations commute with everything."""
    m = phase_map.matrix
    omega = symplectic_form(phase_map.dim).entries
    return CommutatorTable(_matmul(_matmul(m, omega), _transpose(m)))


def is_canonical(phase_map: LinearPhaseMap, particles: Sequence[int] | None = None) -> bool:
    """True iff the map preserves every canonical bracket.

    With ``particles`` given, only brackets among the transformed variables
    of those particles are checked.
    """
    table = commutator_table(phase_map)
    if particles is None:
        return table == symplectic_form(phase_map.dim)
    return table.block(particles) == symplectic_form(len(particles))


def compose(outer: LinearPhaseMap, inner: LinearPhaseMap) -> LinearPhaseMap:
    """Map ``xi -> outer(inner(xi))``."""
    if outer.dim != inner.dim:
        raise ValueError("dimension mismatch")
    mat = _matmul(outer.matrix, inner.matrix)
    trans = [sum((outer.matrix[i][k] * inner.translation[k] for k in range(outer.size)),
                 Fraction(0)) + outer.translation[i] for i in range(outer.size)]
    return LinearPhaseMap(outer.dim, mat, tuple(trans), name=f"{outer.name}*{inner.name}")


def identity_map(n: int) -> LinearPhaseMap:
    return LinearPhaseMap(n, _eye(2 * n), name="identity")


def boost_map(masses, v, t) -> LinearPhaseMap:
    """Galilean boost of every particle: ``X -> X - v t``, ``P -> P - m v``."""
    ms = _masses(masses)
    v_, t_ = _as_offset(v), _as_offset(t)
    trans = []
    for m in ms:
        trans += [-v_ * t_, -m * v_]
    return LinearPhaseMap(ms.n, _eye(2 * ms.n), tuple(trans), name="boost")


def parity_map(masses, particle: int = 0) -> LinearPhaseMap:
    ms = _masses(masses)
    if not 0 <= particle < ms.n:
        raise IndexError("parity particle out of range")
    mat = _eye(2 * ms.n)
    mat[2 * particle][2 * particle] = Fraction(-1)
    mat[2 * particle + 1][2 * particle + 1] = Fraction(-1)
    return LinearPhaseMap(ms.n, mat, name="parity")


def _check_pair(m0, m1) -> tuple[Fraction, Fraction]:
    a, b = to_fraction(m0), to_fraction(m1)
    if a <= 0 or b <= 0:
        raise ValueError("masses must be strictly positive")
    return a, b


def map_cm_r_pair(masses, j: int) -> LinearPhaseMap:
    """Two-body CM/relative map on particles (0, j), other particles untouched.

    Slot 0 becomes the pair's centre of mass and slot ``j`` the coordinate of
    ``j`` relative to particle 0.
    """
    ms = _masses(masses)
    if not 1 <= j < ms.n:
        raise IndexError(f"partner index j={j} out of range 1..{ms.n - 1}")
    m0, mj = ms[0], ms[j]
    tot = m0 + mj
    mu = m0 * mj / tot
    mat = _eye(2 * ms.n)
    x0, p0, xj, pj = 0, 1, 2 * j, 2 * j + 1
    for r in (x0, p0, xj, pj):
        mat[r] = [Fraction(0)] * (2 * ms.n)
    mat[x0][x0], mat[x0][xj] = m0 / tot, mj / tot
    mat[p0][p0], mat[p0][pj] = Fraction(1), Fraction(1)
    mat[xj][xj], mat[xj][x0] = Fraction(1), Fraction(-1)
    mat[pj][pj], mat[pj][p0] = mu / mj, -mu / m0
    return LinearPhaseMap(ms.n, mat, name=f"cm_r(0,{j})")


def map_cm_r(m0, m1) -> LinearPhaseMap:
    a, b = _check_pair(m0, m1)
    return replace(map_cm_r_pair(MassList((a, b)), 1), name="cm_r")


def map_R(m0, m1) -> LinearPhaseMap:
    """Relational map: ``X0' = -X0``, ``P0' = -(P0+P1)``, ``X1' = X1-X0``, ``P1' = P1``."""
    _check_pair(m0, m1)
    f = Fraction
    mat = [
        [f(-1), f(0), f(0), f(0)],
        [f(0), f(-1), f(0), f(-1)],
        [f(-1), f(0), f(1), f(0)],
        [f(0), f(0), f(0), f(1)],
    ]
    return LinearPhaseMap(2, mat, name="relational")


def map_cm_r_N(masses) -> LinearPhaseMap:
    ms = _masses(masses)
    n = ms.n
    if n < 2:
        raise ValueError("N-particle CM/relative map needs N >= 2")
    tot = ms.total
    mat = _zeros(2 * n)
    for k in range(n):
        mat[0][2 * k] = ms[k] / tot
        mat[1][2 * k + 1] = Fraction(1)
    for i in range(1, n):
        mat[2 * i][2 * i] += 1
        mat[2 * i][0] -= 1
        # P_i' = P_i - (m_i/M) sum_k P_k
        for k in range(n):
            mat[2 * i + 1][2 * k + 1] -= ms[i] / tot
        mat[2 * i + 1][2 * i + 1] += 1
    return LinearPhaseMap(n, mat, name="cm_r_N")


def target_relational_map(masses, completion: str = "total") -> LinearPhaseMap:
    """The fully relative variable set that no unitary can produce.

    ``X_i' = X_i - X_0`` and ``P_i' = mu_i0 (P_i/m_i - P_0/m_0)`` for i >= 1.
    The particle-0 slot is ``(-X_0, -sum_k P_k)`` for ``completion="total"``
    and ``(-X_0, -P_0)`` for ``completion="single"``.
    """
    ms = _masses(masses)
    n = ms.n
    if n < 2:
        raise ValueError("target relational map needs N >= 2")
    if completion not in ("total", "single"):
        raise ValueError("completion must be 'total' or 'single'")
    mat = _zeros(2 * n)
    mat[0][0] = Fraction(-1)
    if completion == "total":
        for k in range(n):
            mat[1][2 * k + 1] = Fraction(-1)
    else:
        mat[1][1] = Fraction(-1)
    m0 = ms[0]
    for i in range(1, n):
        mu = ms.reduced(i, 0)
        mat[2 * i][2 * i] = Fraction(1)
        mat[2 * i][0] = Fraction(-1)
        mat[2 * i + 1][2 * i + 1] = mu / ms[i]
        mat[2 * i + 1][1] = -mu / m0
    return LinearPhaseMap(n, mat, name=f"target_relational[{completion}]")


def map_castro(masses) -> LinearPhaseMap:
    """Subsystem variables with particle 0 as position and 1 as velocity reference.

    ``X'_k = X_k - X_0`` and ``P'_k = P_k - (m_k/m_1) P_1`` for k >= 2; the
    rows of particles 0 and 1 are left as identity rows.
    """
    ms = _masses(masses)
    n = ms.n
    if n < 3:
        raise ValueError("subsystem map needs N >= 3")
    mat = _eye(2 * n)
    for k in range(2, n):
        mat[2 * k][0] = Fraction(-1)
        mat[2 * k + 1][3] = -ms[k] / ms[1]
    return LinearPhaseMap(n, mat, name="castro")


@dataclass(frozen=True)
class NoGoCertificate:
    masses: MassList
    completion: str
    deviation: CommutatorTable
    max_entry: Fraction
    relative_max: Fraction

    @property
    def relative_canonical(self) -> bool:
        """Whether the relative block alone satisfies the canonical brackets."""
        return self.relative_max == 0

    @property
    def canonical(self) -> bool:
        return self.max_entry == 0

    def to_json(self) -> dict:
        return {
            "masses": self.masses.as_strings(),
            "completion": self.completion,
            "deviation": self.deviation.to_json(),
            "max_entry": str(self.max_entry),
            "relative_max": str(self.relative_max),
            "relative_canonical": self.relative_canonical,
            "canonical": self.canonical,
        }


def nogo_certificate(masses, completion: str = "total") -> NoGoCertificate:
    ms = _masses(masses)
    phase_map = target_relational_map(ms, completion)
    dev = commutator_table(phase_map) - symplectic_form(ms.n)
    rel = dev.block(range(1, ms.n))
    return NoGoCertificate(ms, completion, dev, dev.max_abs(), rel.max_abs())


def mass_limit_sweep(masses_base, ratios: Sequence, completion: str = "total") -> list[Fraction]:
    """Certificate ``max_entry`` as the non-reference masses shrink by ``ratios``."""
    rs = [to_fraction(r) for r in ratios]
    if not rs:
        raise ValueError("ratio list is empty")
    if any(r <= 0 for r in rs):
        raise ValueError("ratios must be strictly positive")
    if any(b >= a for a, b in zip(rs, rs[1:])):
        raise ValueError("ratios must be strictly decreasing")
    ms = _masses(masses_base)
    return [nogo_certificate(ms.scaled(r), completion).max_entry for r in rs]
