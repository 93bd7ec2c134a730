"""Input validation helpers, in the spirit of ``sklearn.utils.validation``."""

import numpy as np

from .exceptions import NotHermitianError

#: Relative tolerance (w.r.t. the largest entry modulus) under which an
#: almost-Hermitian input is silently symmetrized.
HERMITIAN_TOL = 1e-10


def check_square(A, name="A"):
    """Return ``A`` as a 2-d complex array, raising if it is not square."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains NaN or infinite entries")
    return A.astype(complex, copy=False)


def check_hermitian(A, tol=HERMITIAN_TOL, name="A"):
    """Validate a Hermitian operator and return its symmetrized copy.

    Deviations from Hermiticity up to ``tol`` times the largest entry modulus
    are absorbed by returning ``(A + A^dagger) / 2``; anything larger raises
    :class:`NotHermitianError`.
    """
    A = check_square(A, name)
    scale = np.max(np.abs(A)) if A.size else 0.0
    deviation = np.max(np.abs(A - A.conj().T))
    if deviation > tol * max(scale, np.finfo(float).tiny):
        raise NotHermitianError(
            f"{name} is not Hermitian: max |A - A^dagger| = {deviation:.3e} "
            f"(entry scale {scale:.3e})"
        )
    return (A + A.conj().T) / 2


def check_same_dim(A, B, names=("A", "B")):
    if A.shape != B.shape:
        raise ValueError(
            f"dimension mismatch: {names[0]} has shape {A.shape}, {names[1]} has shape {B.shape}"
        )


def check_unit_interval(s, name="s", open_left=False, open_right=False):
    s = float(s)
    lo_ok = s > 0 if open_left else s >= 0
    hi_ok = s < 1 if open_right else s <= 1
    if not (lo_ok and hi_ok):
        lb = "(" if open_left else "["
        rb = ")" if open_right else "]"
        raise ValueError(f"{name} must lie in {lb}0, 1{rb}, got {s}")
    return s
