"""Independent references: Heisenberg action of quadratic generators.

For ``U = exp(i G / hbar)`` with ``G = xi.H.xi / 2`` the passive action is
linear, ``U^dagger xi U = exp(-Omega H) xi``. The generators used here are
nilpotent, so the exponential series terminates and stays exact.
"""
from fractions import Fraction


def _omega(n):
    size = 2 * n
    om = [[Fraction(0)] * size for _ in range(size)]
    for k in range(n):
        om[2 * k][2 * k + 1] = Fraction(1)
        om[2 * k + 1][2 * k] = Fraction(-1)
    return om


def _mul(a, b):
    return [[sum((a[i][k] * b[k][j] for k in range(len(b))), Fraction(0))
             for j in range(len(b[0]))] for i in range(len(a))]


def _eye(size):
    return [[Fraction(int(i == j)) for j in range(size)] for i in range(size)]


def xp_generator(n, terms):
    """``H`` for ``G = sum c X_a P_b`` (a != b), given as ``[(c, a, b), ...]``."""
    size = 2 * n
    h = [[Fraction(0)] * size for _ in range(size)]
    for c, a, b in terms:
        if a == b:
            raise ValueError("X_a P_a does not commute; not handled here")
        h[2 * a][2 * b + 1] += Fraction(c)
        h[2 * b + 1][2 * a] += Fraction(c)
    return h


def heisenberg(n, h):
    size = 2 * n
    gen = [[-x for x in row] for row in _mul(_omega(n), h)]
    out, term = _eye(size), _eye(size)
    for k in range(1, 4 * size):
        term = [[x / k for x in row] for row in _mul(term, gen)]
        if not any(any(row) for row in term):
            return out
        out = [[x + y for x, y in zip(r1, r2)] for r1, r2 in zip(out, term)]
    raise AssertionError("generator is not nilpotent")


def product(*factors):
    """Passive matrix of ``T = U_1 U_2 ...``: ``T^dagger xi T = M_1 M_2 ... xi``."""
    out = factors[0]
    for f in factors[1:]:
        out = _mul(out, f)
    return out


def parity(n, particle):
    m = _eye(2 * n)
    m[2 * particle][2 * particle] = Fraction(-1)
    m[2 * particle + 1][2 * particle + 1] = Fraction(-1)
    return m


def cm_r(m0, m1):
    tot = m0 + m1
    return product(heisenberg(2, xp_generator(2, [(-m1 / tot, 1, 0)])),
                   heisenberg(2, xp_generator(2, [(1, 0, 1)])))


def relational():
    return product(parity(2, 0), heisenberg(2, xp_generator(2, [(1, 0, 1)])))


def cm_r_n(masses):
    n = len(masses)
    tot = sum(masses)
    first = xp_generator(n, [(-masses[i] / tot, i, 0) for i in range(1, n)])
    second = xp_generator(n, [(1, 0, i) for i in range(1, n)])
    return product(heisenberg(n, first), heisenberg(n, second))
