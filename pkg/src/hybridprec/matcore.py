"""Dense complex-matrix primitives used by the rate objective and optimizers.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. ``logdet_hpd`` and
``solve_hpd`` also accept stacks of matrices (leading batch axes), which is how
the optimizers evaluate all bands and channels at once.
"""

import numpy as np

from .exceptions import (
    ConvergenceFailure,
    DimensionMismatch,
    NotHermitian,
    NotPositiveDefinite,
)

HERMITIAN_RTOL = 1e-10
LN2 = np.log(2.0)


def as_cmatrix(a, name="matrix"):
    """Return ``a`` as a finite complex128 array with at least two axes."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim < 2:
        raise DimensionMismatch(f"{name} must be a matrix, got shape {arr.shape}")
    if arr.shape[-1] == 0 or arr.shape[-2] == 0:
        raise DimensionMismatch(f"{name} has an empty dimension: {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return arr


def hermitian_part(a):
    return 0.5 * (a + np.conj(np.swapaxes(a, -1, -2)))


def _check_square(a, name):
    if a.shape[-1] != a.shape[-2]:
        raise DimensionMismatch(f"{name} must be square, got {a.shape[-2:]}")


def _check_hermitian(a, rtol=HERMITIAN_RTOL):
    skew = a - np.conj(np.swapaxes(a, -1, -2))
    num = np.linalg.norm(skew, axis=(-2, -1))
    den = np.linalg.norm(a, axis=(-2, -1))
    bad = num > rtol * np.maximum(den, np.finfo(float).tiny)
    if np.any(bad):
        worst = float(np.max(num / np.maximum(den, np.finfo(float).tiny)))
        raise NotHermitian(f"relative asymmetry {worst:.3e} exceeds {rtol:.0e}")


def cholesky_hpd(a):
    """Lower Cholesky factor of the Hermitian part of ``a`` (stack-aware)."""
    try:
        return np.linalg.cholesky(hermitian_part(a))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None


def logdet_hpd(a, check=True):
    """Base-2 log-determinant of a Hermitian positive definite matrix.

    Computed from the Cholesky factor, ``log2|A| = 2 * sum(log2(diag(L)))``.
    Stacks of matrices return an array of log-determinants.
    """
    a = as_cmatrix(a, "A")
    _check_square(a, "A")
    if check:
        _check_hermitian(a)
    chol = cholesky_hpd(a)
    diag = np.real(np.diagonal(chol, axis1=-2, axis2=-1))
    return 2.0 * np.sum(np.log2(diag), axis=-1)


def solve_hpd(a, b, check=True):
    """Solve ``A X = B`` for Hermitian positive definite ``A``.

    Uses the Cholesky factor ``A = L L^H``; both arguments may carry matching
    leading batch axes.
    """
    a = as_cmatrix(a, "A")
    b = as_cmatrix(b, "B")
    _check_square(a, "A")
    if a.shape[-1] != b.shape[-2]:
        raise DimensionMismatch(f"A is {a.shape[-2:]} but B has {b.shape[-2]} rows")
    if check:
        _check_hermitian(a)
    chol = cholesky_hpd(a)
    # triangular solves via the generic solver; sizes here are tiny (N x N)
    y = np.linalg.solve(chol, b)
    return np.linalg.solve(np.conj(np.swapaxes(chol, -1, -2)), y)


def svd_full(a):
    """Full SVD ``A = U diag(s) Vh`` with square unitary ``U`` and ``Vh``.

    Returning the complete ``M x M`` factor ``Vh`` gives an orthonormal
    completion beyond ``rank(A)``, which the analog initializer needs when the
    RF-chain count exceeds the user count.
    """
    a = as_cmatrix(a, "A")
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=True)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from None
    return u, s, vh


def frobenius_sq(a, axes=(-2, -1)):
    """Squared Frobenius norm over the last two axes."""
    return np.sum(np.abs(a) ** 2, axis=axes)


def fix_column_phase(v, tol=1e-12):
    """Rotate each column so its first non-negligible entry is real positive."""
    v = np.array(v, dtype=np.complex128, copy=True)
    mags = np.abs(v)
    for j in range(v.shape[-1]):
        col = mags[:, j]
        idx = np.flatnonzero(col > tol * max(col.max(), 1.0))
        if idx.size:
            ref = v[idx[0], j]
            v[:, j] *= np.conj(ref) / abs(ref)
    return v
