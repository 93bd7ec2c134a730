"""Frechet derivatives and low-order expansions of primary matrix functions.

Everything here works in the eigenbasis of the unperturbed operator: the
perturbation only enters through its matrix elements in that basis, and the
function only through divided differences of its eigenvalues.
"""

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .functions import (
    DEGENERACY_TOL,
    first_divided_difference,
    first_divided_difference_extended,
    get_function,
    second_divided_difference,
)
from .linalg import (
    apply_function_exact,
    as_spectral,
    hs_norm,
    psd_power,
    psd_sqrt,
    symmetrize_checked,
)
from .exceptions import NotPositiveSemidefiniteError


@dataclass(frozen=True)
class ExpansionResult:
    """A truncated series and the remainder exponent it is claimed to have.

    ``value`` is the sum of ``terms``; ``block_exponents`` is set when the
    remainder is only known block-wise on the support/kernel split.
    """

    order: int
    value: np.ndarray
    terms: list
    claimed_residual_exponent: float
    block_exponents: Optional[np.ndarray] = field(default=None)


def _hermitian_part(M):
    return (M + M.conj().T) / 2


def frechet_derivative(A, E, f, degeneracy_tol=DEGENERACY_TOL):
    """Frechet derivative ``L_f(A, E) = U ([f, lam]^[1] o U^dagger E U) U^dagger``."""
    f = get_function(f)
    spec = as_spectral(A)
    E = np.asarray(E, dtype=complex)
    if E.shape != (spec.dim, spec.dim):
        raise ValueError(f"E has shape {E.shape}, expected {(spec.dim, spec.dim)}")
    Ehat = _hermitian_part(spec.to_eigenbasis(E))
    dd = first_divided_difference(f, spec.eigenvalues, degeneracy_tol).values
    out = spec.from_eigenbasis(dd * Ehat)
    return symmetrize_checked(out)


def second_directional_derivative(A, E, f, degeneracy_tol=DEGENERACY_TOL):
    """Second derivative ``d^2/dt^2 f(A + tE)`` at ``t = 0``.

    Materialized as ``2 sum_{k,l,m} [f]^[2]_{klm} E_kl E_lm |k><m|`` in the
    eigenbasis of ``A``.
    """
    f = get_function(f)
    spec = as_spectral(A)
    E = np.asarray(E, dtype=complex)
    if E.shape != (spec.dim, spec.dim):
        raise ValueError(f"E has shape {E.shape}, expected {(spec.dim, spec.dim)}")
    Ehat = _hermitian_part(spec.to_eigenbasis(E))
    dd2 = second_divided_difference(f, spec.eigenvalues, degeneracy_tol).values
    M = 2.0 * np.einsum("klm,kl,lm->km", dd2, Ehat, Ehat, optimize=False)
    return symmetrize_checked(spec.from_eigenbasis(M))


def dk_expand(A, E, f, order=2, degeneracy_tol=DEGENERACY_TOL):
    """Daleckii-Krein expansion of ``f(A + E)`` truncated at ``order`` (0, 1, 2)."""
    if order not in (0, 1, 2):
        raise ValueError(f"order must be 0, 1 or 2, got {order}")
    f = get_function(f)
    spec = as_spectral(A)
    terms = [apply_function_exact(spec, f)]
    if order >= 1:
        terms.append(frechet_derivative(spec, E, f, degeneracy_tol))
    if order >= 2:
        terms.append(0.5 * second_directional_derivative(spec, E, f, degeneracy_tol))
    return ExpansionResult(
        order=order,
        value=sum(terms),
        terms=terms,
        claimed_residual_exponent=float(order + 1),
    )


def _support_first_blocks(spec, E):
    lam, U = spec.support_first()
    Ehat = _hermitian_part(U.conj().T @ np.asarray(E, dtype=complex) @ U)
    r = spec.rank
    return lam, U, Ehat[:r, :r], Ehat[:r, r:], Ehat[r:, r:]


def _check_psd_block(D, name):
    if D.size == 0:
        return
    w = np.linalg.eigvalsh(D)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(w))))
    if w[0] < -tol:
        raise NotPositiveSemidefiniteError(
            f"{name} must be positive semi-definite; smallest eigenvalue is {w[0]:.3e}"
        )


def schur_complement(B, C, D, support_eigenvalues):
    """``D - C^dagger (Lambda_+ + B)^{-1} C``."""
    M = np.diag(support_eigenvalues).astype(complex) + B
    if np.linalg.cond(M) > 1e14:
        raise np.linalg.LinAlgError(
            "Lambda_+ + B is singular; the Schur-complement root expansion is undefined"
        )
    return _hermitian_part(D - C.conj().T @ np.linalg.solve(M, C))


def singular_root_expansion(A, E, s, use_schur=False, degeneracy_tol=DEGENERACY_TOL):
    """First-order expansion of ``(A + E) ** s`` for a singular PSD ``A``.

    In the support-first eigenbasis of ``A`` the correction is the extended
    divided difference of ``x ** s`` multiplied entrywise with
    ``[[B, C], [C^dagger, K]]``, where ``K`` is ``D ** s`` or, with
    ``use_schur``, the ``s``-th power of the Schur complement
    ``D - C^dagger (Lambda_+ + B)^{-1} C``.

    The Schur form carries the remainder exponent ``min(1 + s, 3 s)``; the
    plain ``D ** s`` form carries block-wise exponents
    ``[[2, 1 + s], [1 + s, 1 + s]]`` and is reported with their minimum.
    That form needs ``||E||^2 / ||D||`` to scale like ``||E||``; a
    ``RuntimeWarning`` is emitted when ``||D|| < 0.1 ||E||`` (the factor 10
    is a heuristic, not a derived constant).
    """
    s = float(s)
    if not 0 < s < 1:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    spec = as_spectral(A)
    if not spec.has_kernel:
        raise ValueError("singular_root_expansion requires A to have a nonempty kernel")
    if np.any(spec.eigenvalues[spec.support_indices] < 0):
        raise NotPositiveSemidefiniteError("A must be positive semi-definite")
    lam, U, B, C, D = _support_first_blocks(spec, E)
    r = spec.rank
    _check_psd_block(D, "kernel block D of E")

    if use_schur:
        kernel_block = psd_power(schur_complement(B, C, D, lam[:r]), s, zero_threshold=0.0)
        exponent = min(1 + s, 3 * s)
        blocks = None
    else:
        norm_e, norm_d = hs_norm(E), hs_norm(D)
        if norm_e > 0 and norm_d < 0.1 * norm_e:
            warnings.warn(
                f"||E||^2/||D|| = {norm_e**2 / max(norm_d, 1e-300):.3e} exceeds "
                f"10 ||E||; the D**s root expansion may lose its remainder order",
                RuntimeWarning,
                stacklevel=2,
            )
        kernel_block = psd_power(D, s, zero_threshold=0.0)
        exponent = 1 + s
        blocks = np.array([[2.0, 1 + s], [1 + s, 1 + s]])

    mask = np.zeros(lam.size, dtype=bool)
    mask[r:] = True
    dd = first_divided_difference_extended(s, lam, mask, degeneracy_tol).values
    blockmat = np.block([[B, C], [C.conj().T, kernel_block]])
    root = np.zeros(lam.size)
    root[:r] = lam[:r] ** s
    zeroth = (U * root) @ U.conj().T
    first = symmetrize_checked(U @ (dd * blockmat) @ U.conj().T)
    return ExpansionResult(
        order=1,
        value=zeroth + first,
        terms=[zeroth, first],
        claimed_residual_exponent=exponent,
        block_exponents=blocks,
    )


def modulus_expansion(X, Z):
    """First-order expansion of the matrix modulus ``|X + Z|`` about a PSD ``X``.

    ``Z`` need not be Hermitian. In the support-first eigenbasis of ``X``
    (eigenvalues ``sigma``) the correction is::

        [[ [sqrt, sigma^2]^[1] o (S Z11 + Z11^dagger S),  Z12 ],
         [ Z12^dagger,                                    |Z22| ]]

    with ``S = diag(sigma_+)``. Remainder exponent 3/2.
    """
    spec = as_spectral(X)
    Z = np.asarray(Z, dtype=complex)
    if Z.shape != (spec.dim, spec.dim):
        raise ValueError(f"Z has shape {Z.shape}, expected {(spec.dim, spec.dim)}")
    if np.any(spec.eigenvalues[spec.support_indices] < 0):
        raise NotPositiveSemidefiniteError("X must be positive semi-definite")
    sigma, U = spec.support_first()
    r = spec.rank
    Zhat = U.conj().T @ Z @ U
    Z11, Z12, Z22 = Zhat[:r, :r], Zhat[:r, r:], Zhat[r:, r:]
    sp = sigma[:r]
    S = np.diag(sp)
    dd = first_divided_difference("sqrt", sp**2).values if r else np.zeros((0, 0))
    upper = dd * (S @ Z11 + Z11.conj().T @ S)
    if Z22.size:
        lower = psd_sqrt(Z22.conj().T @ Z22)
    else:
        lower = Z22
    block = np.block([[upper, Z12], [Z12.conj().T, lower]])
    zeroth = (U * sigma) @ U.conj().T
    first = U @ block @ U.conj().T
    return ExpansionResult(
        order=1,
        value=zeroth + first,
        terms=[zeroth, first],
        claimed_residual_exponent=1.5,
    )
