import numpy as np


def sample_terms(axes, coeffs, centers, precisions, wavevecs):
    """Evaluate ``sum_t c_t exp(-(z-mu_t).A_t.(z-mu_t) + i k_t.z)`` on a product grid.

    ``axes`` is a list of 1-D coordinate arrays, one per degree of freedom;
    ``coeffs`` already include any normalization constants.
    """
    axes = [np.ascontiguousarray(a, dtype=np.float64) for a in axes]
    d = len(axes)
    shape = tuple(a.size for a in axes)
    out = np.zeros(shape, dtype=np.complex128)
    grids = np.meshgrid(*axes, indexing="ij", sparse=True)
    for c, mu, prec, k in zip(coeffs, centers, precisions, wavevecs):
        diffs = [g - m for g, m in zip(grids, mu)]
        expo = np.zeros(shape, dtype=np.complex128)
        for i in range(d):
            expo = expo - prec[i, i] * diffs[i] ** 2 + 1j * k[i] * grids[i]
            for j in range(i + 1, d):
                expo = expo - 2.0 * prec[i, j] * diffs[i] * diffs[j]
        out += c * np.exp(expo)
    return out
