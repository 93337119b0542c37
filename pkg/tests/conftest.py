import os
import sys
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import strategies as st

from qrf.gausscalc import GaussianTerm, GaussState

# keep test runs independent of the developer's QRF_OUT
os.environ.pop("QRF_OUT", None)

rationals = st.fractions(min_value=Fraction(1, 20), max_value=Fraction(20),
                         max_denominator=50)


def mass_lists(min_size=2, max_size=4):
    return st.lists(rationals, min_size=min_size, max_size=max_size)


def random_precision(rng, dim, lo=0.4, hi=2.5):
    """Well-conditioned positive-definite precision matrix."""
    q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    return q @ np.diag(rng.uniform(lo, hi, size=dim)) @ q.T


def random_state(rng, dim, nterms=2, spread=1.0, hbar=1.0, masses=None, diagonal=False):
    terms = []
    for _ in range(nterms):
        coeff = complex(*rng.normal(size=2))
        center = rng.uniform(-spread, spread, size=dim)
        k = rng.uniform(-1.0, 1.0, size=dim)
        if diagonal:
            terms.append(GaussianTerm.diagonal(coeff, center, rng.uniform(0.4, 1.0, size=dim), k))
        else:
            terms.append(GaussianTerm(coeff, center, random_precision(rng, dim), k))
    return GaussState(terms, hbar, masses).normalized()


def random_weyl_form(rng, dim):
    from qrf.gausscalc import QuadForm

    q = rng.normal(size=(2 * dim, 2 * dim))
    return QuadForm.weyl(q, rng.normal(size=2 * dim), rng.normal())


@pytest.fixture
def rng():
    return np.random.default_rng(20241014)


def report(label, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] {label}" + (f" ({detail})" if detail else "")
    sys.stdout.write(line + "\n")
    return ok
