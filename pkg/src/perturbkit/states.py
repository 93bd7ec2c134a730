"""Density matrices, validated perturbations and seeded random generators."""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ._validation import check_hermitian
from .exceptions import (
    InfeasiblePerturbationError,
    NonzeroTraceError,
    NotADensityMatrixError,
    NotHermitianError,
    NotPositiveSemidefiniteError,
)
from .linalg import (
    ZERO_THRESHOLD,
    BlockDecomposition,
    SpectralData,
    block_decompose,
    eigendecompose,
    hs_norm,
)

TRACE_TOL = 1e-12
PSD_TOL = 1e-12

PRESERVING = "support-preserving"
EXTENDING = "support-extending"


@dataclass(frozen=True)
class DensityMatrix:
    op: np.ndarray
    spectral: SpectralData

    @property
    def rank(self):
        return self.spectral.rank

    @property
    def dim(self):
        return self.spectral.dim

    @property
    def eigenvalues(self):
        """Eigenvalues with negative solver noise clamped to zero."""
        return np.maximum(self.spectral.eigenvalues, 0.0)


@dataclass(frozen=True)
class StatePerturbation:
    op: np.ndarray
    blocks: BlockDecomposition
    classification: str

    @property
    def is_preserving(self):
        return self.classification == PRESERVING

    @property
    def is_zero(self):
        return not np.any(self.op)


@dataclass(frozen=True)
class PerturbationScenario:
    """``rho_i = rho0 + nu_i``; ``nu2`` is absent for single-state measures."""

    rho0: DensityMatrix
    nu1: StatePerturbation
    nu2: Optional[StatePerturbation] = None
    scale: Optional[float] = None

    @property
    def rho1(self):
        return self.rho0.op + self.nu1.op

    @property
    def rho2(self):
        if self.nu2 is None:
            raise ValueError("scenario has a single perturbation")
        return self.rho0.op + self.nu2.op

    @property
    def kind(self):
        nus = [self.nu1] if self.nu2 is None else [self.nu1, self.nu2]
        return PRESERVING if all(nu.is_preserving for nu in nus) else EXTENDING


def density_matrix(rho, zero_threshold=ZERO_THRESHOLD):
    """Validate ``rho`` as a density matrix (Hermitian, unit trace, PSD)."""
    if isinstance(rho, DensityMatrix):
        return rho
    try:
        rho = check_hermitian(rho, name="rho")
    except NotHermitianError as exc:
        raise NotADensityMatrixError(str(exc)) from None
    tr = np.trace(rho).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise NotADensityMatrixError(f"trace of rho is {tr!r}, expected 1")
    spec = eigendecompose(rho, zero_threshold)
    if spec.eigenvalues[0] < -PSD_TOL:
        raise NotADensityMatrixError(
            f"rho has negative eigenvalue {spec.eigenvalues[0]:.3e}"
        )
    return DensityMatrix(op=rho, spectral=spec)


def _classify(blocks, nu, zero_threshold):
    tol = zero_threshold * max(1.0, hs_norm(nu))
    if hs_norm(blocks.C) <= tol and hs_norm(blocks.D) <= tol:
        return PRESERVING
    return EXTENDING


def validate_perturbation(rho0, nu, zero_threshold=ZERO_THRESHOLD):
    """Check that ``rho0 + nu`` is a state and classify ``nu``.

    Raises
    ------
    NotHermitianError, NonzeroTraceError, NotPositiveSemidefiniteError
        One per violated property. The diagonal bound
        ``-lam_i <= <phi_i|nu|phi_i> <= 1 - lam_i`` is checked first for a
        sharper message; full positivity of ``rho0 + nu`` is then verified.
    """
    rho0 = density_matrix(rho0, zero_threshold)
    nu = check_hermitian(nu, name="nu")
    if nu.shape != rho0.op.shape:
        raise ValueError(f"nu has shape {nu.shape}, rho0 has shape {rho0.op.shape}")
    tr = np.trace(nu).real
    if abs(tr) > TRACE_TOL:
        raise NonzeroTraceError(f"trace of nu is {tr:.3e}, expected 0")

    lam = rho0.spectral.eigenvalues
    diag = np.real(np.diag(rho0.spectral.to_eigenbasis(nu)))
    low = diag < -lam - PSD_TOL
    high = diag > 1 - lam + PSD_TOL
    if np.any(low | high):
        i = int(np.flatnonzero(low | high)[0])
        w_min = np.linalg.eigvalsh(rho0.op + nu)[0]
        raise NotPositiveSemidefiniteError(
            f"diagonal bound violated at eigen-index {i}: <phi|nu|phi> = {diag[i]:.3e} "
            f"with lambda = {lam[i]:.3e}; rho0 + nu has eigenvalue {w_min:.3e}"
        )
    w_min = np.linalg.eigvalsh(rho0.op + nu)[0]
    if w_min < -PSD_TOL:
        raise NotPositiveSemidefiniteError(f"rho0 + nu has eigenvalue {w_min:.3e}")

    blocks = block_decompose(nu, rho0.spectral)
    return StatePerturbation(op=nu, blocks=blocks, classification=_classify(blocks, nu, zero_threshold))


def make_scenario(rho0, nu1, nu2=None, zero_threshold=ZERO_THRESHOLD, scale=None):
    """Build a validated :class:`PerturbationScenario` from arrays."""
    rho0 = density_matrix(rho0, zero_threshold)
    if not isinstance(nu1, StatePerturbation):
        nu1 = validate_perturbation(rho0, nu1, zero_threshold)
    if nu2 is not None and not isinstance(nu2, StatePerturbation):
        nu2 = validate_perturbation(rho0, nu2, zero_threshold)
    if scale is None:
        scale = max(hs_norm(nu1.op), 0.0 if nu2 is None else hs_norm(nu2.op))
    return PerturbationScenario(rho0=rho0, nu1=nu1, nu2=nu2, scale=scale)


def support_contained(rho1, rho2, zero_threshold=ZERO_THRESHOLD):
    """Whether ``supp(rho1)`` lies inside ``supp(rho2)``."""
    spec2 = eigendecompose(rho2, zero_threshold)
    if not spec2.has_kernel:
        return True
    K = spec2.eigenvectors[:, spec2.kernel_indices]
    leak = np.real(np.trace(K.conj().T @ np.asarray(rho1) @ K))
    return leak <= zero_threshold * max(1.0, float(np.max(np.abs(spec2.eigenvalues))))


# ---------------------------------------------------------------------------
# random generators
# ---------------------------------------------------------------------------


def trial_seed(seed, index):
    """Independent stream for ``(seed, index)``, order-independent."""
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),))


def random_unitary(dim, rng):
    """Haar-random unitary via QR of a complex Ginibre matrix."""
    Z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def random_hermitian(dim, rng):
    """GUE-style Hermitian matrix."""
    X = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (X + X.conj().T) / 2


def _spread_spectrum(rank, rng):
    # ascending eigenvalues with min value and min gap >= base, summing to 1
    base = min(0.05 / rank, 1.8 / (rank * (rank + 1)))
    remaining = 1.0 - base * rank * (rank + 1) / 2
    g = rng.exponential(size=rank)
    weights = rank - np.arange(rank)
    d = g * remaining / np.dot(g, weights)
    lam = base * np.arange(1, rank + 1) + np.cumsum(d)
    return lam / lam.sum()


def random_density(dim, rank=None, seed=None, zero_threshold=ZERO_THRESHOLD):
    """Random density matrix of the given rank with a well-spread spectrum.

    Nonzero eigenvalues and their pairwise gaps are at least ``0.05 / rank``
    (relaxed to ``1.8 / (rank (rank + 1))`` above rank 35, where the stricter
    floor cannot sum to one). Identical ``seed`` gives bit-identical output.
    """
    rank = dim if rank is None else int(rank)
    if not 1 <= rank <= dim:
        raise ValueError(f"rank must lie in [1, {dim}], got {rank}")
    rng = np.random.default_rng(seed)
    lam = np.zeros(dim)
    lam[:rank] = _spread_spectrum(rank, rng)
    U = random_unitary(dim, rng)
    rho = (U * lam) @ U.conj().T
    rho = (rho + rho.conj().T) / 2
    rho /= np.trace(rho).real
    return density_matrix(rho, zero_threshold)


def _extending_direction(r, k, rng):
    B = random_hermitian(r, rng)
    B /= max(hs_norm(B), 1e-300)
    C = rng.standard_normal((r, k)) + 1j * rng.standard_normal((r, k))
    C *= 0.5 / max(hs_norm(C), 1e-300)
    V = random_unitary(k, rng)
    D = (V * rng.uniform(0.2, 1.0, size=k)) @ V.conj().T
    D = (D + D.conj().T) / 2
    D /= hs_norm(D)
    for _ in range(10):
        Bz = B - (np.trace(B).real + np.trace(D).real) / r * np.eye(r)
        nu = np.block([[Bz, C], [C.conj().T, D]])
        if hs_norm(D) >= 0.1 * hs_norm(nu):
            return nu
        D = 2 * D
    return nu


def random_perturbation(rho0, kind="preserving", epsilon=1e-3, seed=None,
                        strict=True, max_halvings=20, zero_threshold=ZERO_THRESHOLD):
    """Random valid perturbation of ``rho0`` with Hilbert-Schmidt norm ``epsilon``.

    A GUE-style direction is drawn in the eigenbasis of ``rho0``, projected
    onto the requested block structure and to zero trace, then rescaled.
    ``kind="preserving"`` leaves the kernel blocks zero; ``kind="extending"``
    gives a positive definite kernel block with ``||nu_D|| >= 0.1 ||nu||``.
    If ``rho0 + nu`` is not PSD the perturbation is halved, at most
    ``max_halvings`` times. With ``strict`` a result below ``epsilon / 2``
    raises :class:`InfeasiblePerturbationError`.
    """
    rho0 = density_matrix(rho0, zero_threshold)
    if kind in ("preserving", PRESERVING):
        kind = "preserving"
    elif kind in ("extending", EXTENDING):
        kind = "extending"
    else:
        raise ValueError(f"kind must be 'preserving' or 'extending', got {kind!r}")
    epsilon = float(epsilon)
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    dim = rho0.dim
    if epsilon == 0:
        return validate_perturbation(rho0, np.zeros((dim, dim), dtype=complex), zero_threshold)

    rng = np.random.default_rng(seed)
    lam, U = rho0.spectral.support_first()
    r = rho0.rank
    k = dim - r
    if kind == "preserving":
        if r == 1:
            raise InfeasiblePerturbationError(
                "a pure state admits no nonzero support-preserving perturbation"
            )
        G = random_hermitian(r, rng)
        G -= np.trace(G).real / r * np.eye(r)
        direction = np.zeros((dim, dim), dtype=complex)
        direction[:r, :r] = G
    else:
        if k == 0:
            raise InfeasiblePerturbationError(
                "a full-rank state admits no support-extending perturbation"
            )
        direction = _extending_direction(r, k, rng)
    direction /= hs_norm(direction)

    scale = epsilon
    Lam = np.diag(lam).astype(complex)
    for _ in range(max_halvings + 1):
        if np.linalg.eigvalsh(Lam + scale * direction)[0] >= 0:
            break
        scale /= 2
    else:
        raise InfeasiblePerturbationError(
            f"no PSD perturbation found down to scale {scale:.3e}; use a smaller epsilon",
            feasible_scale=None,
        )
    if strict and scale < 0.5 * epsilon:
        raise InfeasiblePerturbationError(
            f"epsilon={epsilon:.3e} is too large for a valid {kind} perturbation of this "
            f"state; largest feasible scale found was {scale:.3e}, use a smaller epsilon",
            feasible_scale=scale,
        )
    nu = U @ (scale * direction) @ U.conj().T
    nu = (nu + nu.conj().T) / 2
    out = validate_perturbation(rho0, nu, zero_threshold)
    # keep the constructed blocks: zero kernel blocks stay exactly zero
    d = scale * direction
    blocks = BlockDecomposition(B=d[:r, :r], C=d[:r, r:], D=d[r:, r:], basis=rho0.spectral)
    return replace(out, blocks=blocks)


def random_scenario(dim, rank=None, kind="preserving", epsilon=1e-3, seed=0,
                    pair=False, strict=True, zero_threshold=ZERO_THRESHOLD):
    """Random scenario; ``rho0``, ``nu1`` and ``nu2`` use independent sub-seeds."""
    s_rho, s_nu1, s_nu2 = np.random.SeedSequence(int(seed)).spawn(3)
    rho0 = random_density(dim, rank, seed=np.random.default_rng(s_rho), zero_threshold=zero_threshold)
    nu1 = random_perturbation(rho0, kind, epsilon, np.random.default_rng(s_nu1), strict=strict,
                              zero_threshold=zero_threshold)
    nu2 = None
    if pair:
        nu2 = random_perturbation(rho0, kind, epsilon, np.random.default_rng(s_nu2),
                                  strict=strict, zero_threshold=zero_threshold)
    return make_scenario(rho0, nu1, nu2, zero_threshold, scale=epsilon)
