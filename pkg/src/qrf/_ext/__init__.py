"""Hot kernels for the grid backend.

``sample_terms`` evaluates a Gaussian superposition on a product grid. The
compiled version in ``_sampler`` (Cython) is used when importable; the numpy
version in ``_sampler_py`` is the fallback. Set ``QRF_PURE_PYTHON=1`` to force
the fallback.
"""
import os

from . import _sampler_py

BACKEND = "python"
sample_terms = _sampler_py.sample_terms

if os.environ.get("QRF_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _sampler  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        _sampler = None
    else:
        BACKEND = "cython"
        sample_terms = _sampler.sample_terms

python_sample_terms = _sampler_py.sample_terms
