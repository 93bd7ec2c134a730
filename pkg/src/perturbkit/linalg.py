"""Dense Hermitian linear algebra: spectra, norms, block splits, matrix I/O."""

import json
from dataclasses import dataclass

import numpy as np

from ._validation import check_hermitian
from .exceptions import DomainError, EigenDecompositionError, InternalConsistencyError
from .functions import get_function

#: Relative threshold under which an eigenvalue is classified as kernel.
ZERO_THRESHOLD = 1e-12


@dataclass(frozen=True)
class SpectralData:
    """Eigen-decomposition ``A = U diag(eigenvalues) U^dagger`` with a
    support/kernel split of the eigen-indices.

    Eigenvalues are ascending; ``eigenvectors`` holds them column-wise.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    support_indices: np.ndarray
    kernel_indices: np.ndarray
    zero_threshold: float = ZERO_THRESHOLD

    @property
    def dim(self):
        return self.eigenvalues.size

    @property
    def rank(self):
        return self.support_indices.size

    @property
    def has_kernel(self):
        return self.kernel_indices.size > 0

    @property
    def order(self):
        """Eigen-index permutation placing the support first."""
        return np.concatenate([self.support_indices, self.kernel_indices])

    def clean_eigenvalues(self):
        """Eigenvalues with kernel entries set to exactly zero."""
        lam = self.eigenvalues.copy()
        lam[self.kernel_indices] = 0.0
        return lam

    def support_first(self):
        """``(eigenvalues, eigenvectors)`` reordered support-first, kernel zeroed."""
        order = self.order
        return self.clean_eigenvalues()[order], self.eigenvectors[:, order]

    def to_eigenbasis(self, E):
        U = self.eigenvectors
        return U.conj().T @ E @ U

    def from_eigenbasis(self, M):
        U = self.eigenvectors
        return U @ M @ U.conj().T

    def reconstruct(self):
        return self.from_eigenbasis(np.diag(self.eigenvalues).astype(complex))

    def restrict_to_support(self):
        """Spectral data of ``Lambda_+`` expressed in its own (identity) basis."""
        lam = self.eigenvalues[self.support_indices]
        r = lam.size
        return SpectralData(
            eigenvalues=lam,
            eigenvectors=np.eye(r, dtype=complex),
            support_indices=np.arange(r),
            kernel_indices=np.arange(0),
            zero_threshold=self.zero_threshold,
        )


@dataclass(frozen=True)
class BlockDecomposition:
    """Blocks of ``U^dagger E U`` ordered support-first: ``[[B, C], [C^dagger, D]]``."""

    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    basis: SpectralData

    def assemble(self):
        """The support-first eigenbasis matrix ``[[B, C], [C^dagger, D]]``."""
        return np.block([[self.B, self.C], [self.C.conj().T, self.D]])

    def reconstruct(self):
        """Rotate the assembled blocks back to the original basis."""
        _, U = self.basis.support_first()
        return U @ self.assemble() @ U.conj().T


def _kernel_mask(eigenvalues, zero_threshold):
    scale = max(1.0, float(np.max(np.abs(eigenvalues))))
    return np.abs(eigenvalues) <= zero_threshold * scale


def spectral_from_eigh(eigenvalues, eigenvectors, zero_threshold=ZERO_THRESHOLD):
    eigenvalues = np.asarray(eigenvalues, dtype=float)
    mask = _kernel_mask(eigenvalues, zero_threshold)
    idx = np.arange(eigenvalues.size)
    return SpectralData(
        eigenvalues=eigenvalues,
        eigenvectors=np.asarray(eigenvectors, dtype=complex),
        support_indices=idx[~mask],
        kernel_indices=idx[mask],
        zero_threshold=zero_threshold,
    )


def eigendecompose(A, zero_threshold=ZERO_THRESHOLD):
    """Eigendecompose a Hermitian operator.

    An eigenvalue ``lam`` is assigned to the kernel iff
    ``|lam| <= zero_threshold * max(1, max_k |lam_k|)``.

    Raises
    ------
    EigenDecompositionError
        If LAPACK fails to converge; carries the dimension and a condition
        estimate of ``A``.
    """
    A = check_hermitian(A)
    try:
        w, U = np.linalg.eigh(A)
    except np.linalg.LinAlgError:
        with np.errstate(all="ignore"):
            cond = float(np.linalg.cond(A))
        raise EigenDecompositionError(A.shape[0], cond) from None
    return spectral_from_eigh(w, U, zero_threshold)


def as_spectral(A, zero_threshold=ZERO_THRESHOLD):
    if isinstance(A, SpectralData):
        return A
    return eigendecompose(A, zero_threshold)


def hs_norm(A):
    """Hilbert-Schmidt (Frobenius) norm."""
    return float(np.linalg.norm(np.asarray(A), "fro"))


def block_decompose(E, basis):
    """Split ``E`` into support/kernel blocks in the eigenbasis ``basis``."""
    E = np.asarray(E, dtype=complex)
    if E.shape != (basis.dim, basis.dim):
        raise ValueError(
            f"dimension mismatch: E has shape {E.shape}, basis has dim {basis.dim}"
        )
    if basis.rank == 0:
        raise ValueError("basis has empty support")
    _, U = basis.support_first()
    Ehat = U.conj().T @ E @ U
    r = basis.rank
    return BlockDecomposition(
        B=Ehat[:r, :r], C=Ehat[:r, r:], D=Ehat[r:, r:], basis=basis
    )


def apply_function_exact(A, f, zero_threshold=ZERO_THRESHOLD):
    """Primary matrix function ``U diag(f(lam_i)) U^dagger``.

    Kernel eigenvalues are evaluated as exact zeros, so conventions such as
    ``0 log 0 := 0`` or ``0 ** s := 0`` apply there; functions undefined at
    zero raise :class:`DomainError`.
    """
    f = get_function(f)
    spec = as_spectral(A, zero_threshold)
    lam = spec.clean_eigenvalues()
    ker = np.zeros(lam.size, dtype=bool)
    ker[spec.kernel_indices] = True
    if not np.isinf(f.lower):
        if np.any(ker) and not (f.lower == 0.0 and f.lower_closed):
            raise DomainError(f.name, float(spec.eigenvalues[ker][0]))
        f.check_domain(lam[~ker])
    values = np.zeros(lam.size)
    values[~ker] = f.f(lam[~ker])
    if np.any(ker):
        values[ker] = f.f(np.zeros(int(ker.sum())))
    U = spec.eigenvectors
    return (U * values) @ U.conj().T


def psd_power(A, s, zero_threshold=ZERO_THRESHOLD):
    """``A ** s`` for a PSD ``A``, clamping negative rounding noise to zero
    and using ``0 ** s := 0`` on the kernel (also for ``s == 0``)."""
    w, U = np.linalg.eigh(check_hermitian(A))
    scale = max(1.0, float(np.max(np.abs(w)))) if w.size else 1.0
    keep = w > zero_threshold * scale
    values = np.zeros_like(w)
    values[keep] = w[keep] ** s
    return (U * values) @ U.conj().T


def psd_sqrt(A):
    """Square root of a PSD matrix, clamping negative eigenvalues at zero."""
    w, U = np.linalg.eigh(check_hermitian(A))
    w = np.maximum(w, 0.0)
    return (U * np.sqrt(w)) @ U.conj().T


def symmetrize_checked(M, reference_scale=None, tol=1e-9):
    """Symmetrize ``M``; asymmetry beyond ``tol`` (relative) is an indexing bug."""
    scale = reference_scale if reference_scale is not None else np.max(np.abs(M))
    asym = np.max(np.abs(M - M.conj().T)) if M.size else 0.0
    if asym > tol * max(float(scale), 1e-300):
        raise InternalConsistencyError(
            f"result should be Hermitian but has asymmetry {asym:.3e} "
            f"(scale {float(scale):.3e})"
        )
    return (M + M.conj().T) / 2


# ---------------------------------------------------------------------------
# Matrix JSON: {"dim": n, "entries": [[[re, im], ...], ...]}
# ---------------------------------------------------------------------------


def matrix_to_json(A):
    A = np.asarray(A, dtype=complex)
    return {
        "dim": int(A.shape[0]),
        "entries": [[[float(z.real), float(z.imag)] for z in row] for row in A],
    }


def matrix_from_json(obj):
    """Parse the matrix JSON format (a dict or a JSON string)."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    try:
        dim = int(obj["dim"])
        entries = np.asarray(obj["entries"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed matrix JSON: {exc}") from None
    if entries.shape != (dim, dim, 2):
        raise ValueError(
            f"matrix JSON entries must have shape ({dim}, {dim}, 2), got {entries.shape}"
        )
    return entries[..., 0] + 1j * entries[..., 1]


def load_matrix(path):
    with open(path) as fh:
        return matrix_from_json(json.load(fh))


def save_matrix(A, path):
    with open(path, "w") as fh:
        json.dump(matrix_to_json(A), fh)


__all__ = [
    "SpectralData",
    "BlockDecomposition",
    "ZERO_THRESHOLD",
    "eigendecompose",
    "hs_norm",
    "block_decompose",
    "apply_function_exact",
    "psd_power",
    "psd_sqrt",
    "matrix_to_json",
    "matrix_from_json",
    "load_matrix",
    "save_matrix",
]
