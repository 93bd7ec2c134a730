"""Exact information measures by full diagonalization.

These are the reference values every expansion is checked against. Natural
logarithms throughout; ``0 log 0 = 0`` and ``0 ** s = 0`` on kernels.
"""

import numpy as np
from scipy.special import entr

from ._optimize import maximize_unit_interval
from ._validation import check_unit_interval
from .exceptions import InternalConsistencyError
from .linalg import ZERO_THRESHOLD, eigendecompose, psd_power
from .states import density_matrix, support_contained

#: Traces of ``rho1^s rho2^(1-s)`` at or below this are treated as zero overlap.
OVERLAP_FLOOR = 1e-15


def _state(rho):
    return density_matrix(rho).op


def von_neumann_entropy(rho):
    """``-sum_i lam_i log lam_i`` in nats."""
    w = np.linalg.eigvalsh(_state(rho))
    return float(np.sum(entr(np.maximum(w, 0.0))))


def _log_on_support(spec):
    lam = spec.eigenvalues
    vals = np.zeros(lam.size)
    vals[spec.support_indices] = np.log(lam[spec.support_indices])
    U = spec.eigenvectors
    return (U * vals) @ U.conj().T


def quantum_relative_entropy(rho1, rho2, zero_threshold=ZERO_THRESHOLD):
    """``Tr[rho1 (log rho1 - log rho2)]``, or ``inf`` if ``supp rho1`` is not
    contained in ``supp rho2``."""
    rho1, rho2 = _state(rho1), _state(rho2)
    if not support_contained(rho1, rho2, zero_threshold):
        return np.inf
    s1 = eigendecompose(rho1, zero_threshold)
    s2 = eigendecompose(rho2, zero_threshold)
    neg_entropy = -float(np.sum(entr(np.maximum(s1.clean_eigenvalues(), 0.0))))
    cross = float(np.real(np.trace(rho1 @ _log_on_support(s2))))
    val = neg_entropy - cross
    if val < -1e-12:
        raise InternalConsistencyError(f"relative entropy evaluated to {val:.3e} < 0")
    return max(val, 0.0)


def _overlap(rho1, rho2, s, zero_threshold):
    tr = float(np.real(np.trace(psd_power(rho1, s, zero_threshold)
                                @ psd_power(rho2, 1.0 - s, zero_threshold))))
    if tr < -OVERLAP_FLOOR:
        raise InternalConsistencyError(f"Tr[rho1^s rho2^(1-s)] = {tr:.3e} is negative")
    return tr


def chernoff_exponent_s(rho1, rho2, s, zero_threshold=ZERO_THRESHOLD):
    """``xi_s = -log Tr[rho1^s rho2^(1-s)]``; ``inf`` for vanishing overlap."""
    s = check_unit_interval(s)
    tr = _overlap(_state(rho1), _state(rho2), s, zero_threshold)
    if tr <= OVERLAP_FLOOR:
        return np.inf
    return float(-np.log(tr))


def chernoff_bound(rho1, rho2, tol_s=1e-6, zero_threshold=ZERO_THRESHOLD):
    """Quantum Chernoff information ``max_s xi_s``.

    Returns
    -------
    xi : float
    s_star : float
        Maximizer, located to ``tol_s``; exact ties resolve to ``1/2``.
    """
    rho1, rho2 = _state(rho1), _state(rho2)
    return maximize_unit_interval(
        lambda s: chernoff_exponent_s(rho1, rho2, s, zero_threshold), tol_s=tol_s
    )


def fidelity(rho1, rho2, zero_threshold=ZERO_THRESHOLD):
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho1) rho2 sqrt(rho1)))^2``.

    Both square roots drop eigenvalues classified as kernel: rounding noise
    of size 1e-17 would otherwise contribute ~1e-9 through the root.
    """
    rho1, rho2 = _state(rho1), _state(rho2)
    r1 = psd_power(rho1, 0.5, zero_threshold)
    M = r1 @ rho2 @ r1
    w = np.linalg.eigvalsh((M + M.conj().T) / 2)
    keep = w > zero_threshold * max(1.0, float(np.max(np.abs(w))))
    return float(np.sum(np.sqrt(w[keep])) ** 2)


def bures_distance(rho1, rho2):
    """Squared Bures distance ``2 (1 - sqrt(F))``."""
    return float(2.0 * (1.0 - np.sqrt(min(fidelity(rho1, rho2), 1.0))))


def _check_q(q):
    q = float(q)
    if q <= 0:
        raise ValueError(f"q must be positive, got {q}")
    if q == 1:
        raise ValueError("q = 1 is the von Neumann limit; use von_neumann_entropy "
                         "or quantum_relative_entropy")
    return q


def tsallis_entropy(rho, q):
    """``(Tr[rho^q] - 1) / (1 - q)``."""
    q = _check_q(q)
    w = np.maximum(np.linalg.eigvalsh(_state(rho)), 0.0)
    w = w[w > 0]
    return float((np.sum(w**q) - 1.0) / (1.0 - q))


def tsallis_relative_entropy(rho1, rho2, q, zero_threshold=ZERO_THRESHOLD):
    """``(1 - Tr[rho1^q rho2^(1-q)]) / (1 - q)``; ``inf`` on support violation."""
    q = _check_q(q)
    rho1, rho2 = _state(rho1), _state(rho2)
    if not support_contained(rho1, rho2, zero_threshold):
        return np.inf
    tr = np.real(np.trace(psd_power(rho1, q, zero_threshold)
                          @ psd_power(rho2, 1.0 - q, zero_threshold)))
    return float((1.0 - tr) / (1.0 - q))


__all__ = [
    "von_neumann_entropy",
    "quantum_relative_entropy",
    "chernoff_exponent_s",
    "chernoff_bound",
    "fidelity",
    "bures_distance",
    "tsallis_entropy",
    "tsallis_relative_entropy",
]
