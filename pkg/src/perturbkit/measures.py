"""Lowest-order expansions of entropy, relative entropy, Chernoff information,
fidelity and Bures distance for perturbed density matrices.

Two regimes are covered. When the perturbation stays inside the support of
``rho0`` the leading corrections are quadratic forms in the support block
``B`` built from Frechet derivatives, and the remainder is cubic. When it
leaks into the kernel, the kernel block ``D`` enters non-analytically
(``D log D``, ``D ** s``, ``sqrt(D)``) and the remainder drops to order 2 or
3/2.

Every function takes a :class:`~perturbkit.states.PerturbationScenario` and
returns a :class:`MeasureResult` carrying the claimed remainder exponent.
Pair measures compare ``rho0 + nu1`` with ``rho0 + nu2``; a missing ``nu2``
is read as the zero perturbation.
"""

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import entr

from ._optimize import maximize_unit_interval
from ._validation import check_unit_interval
from .calculus import ExpansionResult, dk_expand
from .exceptions import ClassificationError, DomainError, NotPositiveSemidefiniteError
from .functions import first_divided_difference, get_function, power
from .linalg import apply_function_exact, hs_norm, psd_power
from . import exact
from .states import EXTENDING, PRESERVING, PerturbationScenario

#: Warn when the kernel block is this small relative to the whole perturbation.
KERNEL_BLOCK_RATIO = 0.1


@dataclass(frozen=True)
class MeasureResult:
    """Scalar value of a measure, with its claimed remainder exponent.

    ``s_star`` is set for Chernoff information. ``notes`` collects
    non-fatal remarks (e.g. a vacuous hypothesis).
    """

    value: float
    claimed_residual_exponent: Optional[float] = None
    s_star: Optional[float] = None
    notes: tuple = ()

    def __float__(self):
        return float(self.value)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _require_kind(scenario, kind, name):
    if not isinstance(scenario, PerturbationScenario):
        raise TypeError(f"{name} expects a PerturbationScenario, got {type(scenario).__name__}")
    if scenario.kind == kind:
        return
    if kind == PRESERVING:
        raise ClassificationError(
            f"{name} needs a support-preserving scenario; this one extends into the "
            f"kernel of rho0, use the support-extending variant instead"
        )
    raise ClassificationError(
        f"{name} needs a support-extending scenario; this one preserves the support "
        f"of rho0, use the support-preserving variant instead"
    )


def _support_eigenvalues(scenario):
    lam, _ = scenario.rho0.spectral.support_first()
    return lam[: scenario.rho0.rank]


def _blocks(scenario):
    """``(B1, D1, B2, D2)``; the second pair is zero without ``nu2``."""
    b1 = scenario.nu1.blocks
    if scenario.nu2 is None:
        return b1.B, b1.D, np.zeros_like(b1.B), np.zeros_like(b1.D)
    b2 = scenario.nu2.blocks
    return b1.B, b1.D, b2.B, b2.D


def _difference_block(scenario):
    B1, _, B2, _ = _blocks(scenario)
    return B1 - B2


def _quadratic_form(weights, delta):
    """``sum_kl w_kl |delta_kl|^2``, i.e. ``Tr[delta (w o delta)]`` for Hermitian delta."""
    return float(np.sum(weights * np.abs(delta) ** 2))


def _check_kernel_psd(D, name):
    if D.size == 0:
        return np.zeros(0)
    w = np.linalg.eigvalsh((D + D.conj().T) / 2)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(w))))
    if w[0] < -tol:
        raise NotPositiveSemidefiniteError(
            f"kernel block of {name} must be positive semi-definite; "
            f"smallest eigenvalue is {w[0]:.3e}"
        )
    return np.maximum(w, 0.0)


def _require_kernel(scenario, name):
    if not scenario.rho0.spectral.has_kernel:
        raise ClassificationError(f"{name} needs rho0 to have a nonempty kernel")


def _root_overlap(P, Q):
    """``Tr sqrt(sqrt(P) Q sqrt(P))`` for PSD ``P``, ``Q``."""
    if P.size == 0:
        return 0.0
    rP = psd_power(P, 0.5, zero_threshold=0.0)
    M = rP @ Q @ rP
    w = np.linalg.eigvalsh((M + M.conj().T) / 2)
    return float(np.sum(np.sqrt(np.maximum(w, 0.0))))


def _warn_small_kernel_block(D, nu, name):
    nd, nn = hs_norm(D), hs_norm(nu)
    if nn > 0 and nd < KERNEL_BLOCK_RATIO * nn:
        warnings.warn(
            f"{name}: ||nu_D|| = {nd:.3e} is below {KERNEL_BLOCK_RATIO} ||nu|| = "
            f"{KERNEL_BLOCK_RATIO * nn:.3e}; the second-order remainder may not hold",
            RuntimeWarning,
            stacklevel=3,
        )


# ---------------------------------------------------------------------------
# matrix-valued expansion
# ---------------------------------------------------------------------------


def dk_expand_state(scenario, f, order=2):
    """Second-order expansion of ``f(rho0 + nu)`` for a support-preserving ``nu``.

    The series is computed on the support of ``rho0``; the kernel carries
    ``f(0)``, so ``f`` must be defined at zero whenever ``rho0`` is singular.
    The truncation is only certified for ``f`` smooth at the nonzero
    eigenvalues (C^2 is enforced through the availability of ``f''``).
    """
    _require_kind(scenario, PRESERVING, "dk_expand_state")
    f = get_function(f)
    spec = scenario.rho0.spectral
    r, dim = spec.rank, spec.dim
    lam, U = spec.support_first()
    if r < dim:
        if not (f.lower == 0.0 and f.lower_closed) and not np.isinf(f.lower):
            raise DomainError(f.name, 0.0)
        kernel_value = float(f.f(np.zeros(1))[0])
    inner = dk_expand(np.diag(lam[:r]).astype(complex), scenario.nu1.blocks.B, f, order)

    def embed(M, fill):
        out = np.zeros((dim, dim), dtype=complex)
        out[:r, :r] = M
        if r < dim:
            out[r:, r:] = fill * np.eye(dim - r)
        return U @ out @ U.conj().T

    terms = [embed(inner.terms[0], kernel_value if r < dim else 0.0)]
    terms += [embed(t, 0.0) for t in inner.terms[1:]]
    return ExpansionResult(
        order=inner.order,
        value=sum(terms),
        terms=terms,
        claimed_residual_exponent=inner.claimed_residual_exponent,
    )


# ---------------------------------------------------------------------------
# support-preserving
# ---------------------------------------------------------------------------


def entropy_sp(scenario):
    """``S(rho0) - Tr[nu log rho0] - 1/2 Tr[nu L_log(rho0, nu)]``, evaluated on the support."""
    _require_kind(scenario, PRESERVING, "entropy_sp")
    lam = _support_eigenvalues(scenario)
    B = scenario.nu1.blocks.B
    s0 = float(np.sum(entr(lam)))
    linear = float(np.real(np.sum(np.diag(B) * np.log(lam))))
    dd = first_divided_difference("log", lam).values
    value = s0 - linear - 0.5 * _quadratic_form(dd, B)
    return MeasureResult(value, 3.0)


def qre_sp(scenario):
    """``1/2 Tr[(nu1 - nu2) L_log(rho0, nu1 - nu2)]``; symmetric in the pair."""
    _require_kind(scenario, PRESERVING, "qre_sp")
    dd = first_divided_difference("log", _support_eigenvalues(scenario)).values
    return MeasureResult(0.5 * _quadratic_form(dd, _difference_block(scenario)), 3.0)


def chernoff_s_sp(scenario, s):
    """``xi_s ~ 1/2 Tr[L_{x^s}(rho0, d) L_{x^(1-s)}(rho0, d)]`` with ``d = nu1 - nu2``."""
    _require_kind(scenario, PRESERVING, "chernoff_s_sp")
    s = check_unit_interval(s)
    lam = _support_eigenvalues(scenario)
    w = (first_divided_difference(power(s), lam).values
         * first_divided_difference(power(1.0 - s), lam).values)
    return MeasureResult(0.5 * _quadratic_form(w, _difference_block(scenario)), 3.0)


def qcb_sp(scenario):
    """Chernoff information saturated at ``s = 1/2``: ``1/2 Tr[L_sqrt(rho0, d)^2]``."""
    _require_kind(scenario, PRESERVING, "qcb_sp")
    dd = first_divided_difference("sqrt", _support_eigenvalues(scenario)).values
    value = 0.5 * _quadratic_form(dd**2, _difference_block(scenario))
    return MeasureResult(value, 3.0, s_star=0.5)


def fidelity_sp(scenario):
    """``1 - 1/2 Tr[d L_sqrt(rho0^2, d)]``; the derivative is taken at ``rho0**2``."""
    _require_kind(scenario, PRESERVING, "fidelity_sp")
    lam = _support_eigenvalues(scenario)
    dd = first_divided_difference("sqrt", lam**2).values
    return MeasureResult(1.0 - 0.5 * _quadratic_form(dd, _difference_block(scenario)), 3.0)


def bures_sp(scenario):
    """``1/2 sum_kl |d_kl|^2 / (lam_k + lam_l)``."""
    _require_kind(scenario, PRESERVING, "bures_sp")
    lam = _support_eigenvalues(scenario)
    w = 1.0 / (lam[:, None] + lam[None, :])
    return MeasureResult(0.5 * _quadratic_form(w, _difference_block(scenario)), 3.0)


# ---------------------------------------------------------------------------
# support-extending
# ---------------------------------------------------------------------------


def entropy_se(scenario):
    """``S(rho0) - Tr[L_{x log x}(rho0_+, nu_B)] - Tr[nu_D log nu_D]``.

    Warns if ``nu_D`` has zero eigenvalues (``0 log 0 = 0`` is used) or is
    small compared with ``nu``.
    """
    _require_kind(scenario, EXTENDING, "entropy_se")
    _require_kernel(scenario, "entropy_se")
    lam = _support_eigenvalues(scenario)
    B, D = scenario.nu1.blocks.B, scenario.nu1.blocks.D
    w = _check_kernel_psd(D, "nu")
    if w.size and np.any(w <= 1e-12 * max(1.0, float(w.max()))):
        warnings.warn(
            "entropy_se: the kernel block nu_D is singular; using 0 log 0 = 0 there, "
            "the expansion may converge more slowly",
            RuntimeWarning,
            stacklevel=2,
        )
    _warn_small_kernel_block(D, scenario.nu1.op, "entropy_se")
    s0 = float(np.sum(entr(lam)))
    linear = float(np.real(np.sum((1.0 + np.log(lam)) * np.diag(B))))
    return MeasureResult(s0 - linear + float(np.sum(entr(w))), 2.0)


def _unnormalized_relative_entropy(P, Q):
    """``Tr[P (log P - log Q)]`` for PSD blocks, ``inf`` if ``supp P`` leaks out of ``supp Q``."""
    if P.size == 0:
        return 0.0
    wq, Vq = np.linalg.eigh((Q + Q.conj().T) / 2)
    scale = max(1.0, float(np.max(np.abs(wq))))
    keep = wq > 1e-12 * scale
    leak = np.real(np.trace(Vq[:, ~keep].conj().T @ P @ Vq[:, ~keep])) if np.any(~keep) else 0.0
    if leak > 1e-12 * max(1.0, float(np.max(np.abs(P)))):
        return np.inf
    logq = np.zeros_like(wq)
    logq[keep] = np.log(wq[keep])
    wp = np.maximum(np.linalg.eigvalsh((P + P.conj().T) / 2), 0.0)
    cross = np.real(np.trace(P @ (Vq * logq) @ Vq.conj().T))
    return float(-np.sum(entr(wp)) - cross)


def qre_se(scenario):
    """``Tr[nu1_B - nu2_B] + Tr[nu1_D (log nu1_D - log nu2_D)]``.

    Returns ``inf`` when ``supp(nu1_D)`` is not inside ``supp(nu2_D)``, the
    block-level form of ``supp(rho1) <= supp(rho2)``.
    """
    _require_kind(scenario, EXTENDING, "qre_se")
    _require_kernel(scenario, "qre_se")
    B1, D1, B2, D2 = _blocks(scenario)
    _check_kernel_psd(D1, "nu1")
    _check_kernel_psd(D2, "nu2")
    rel = _unnormalized_relative_entropy(D1, D2)
    if np.isinf(rel):
        return MeasureResult(np.inf, 2.0)
    return MeasureResult(float(np.real(np.trace(B1 - B2))) + rel, 2.0)


def _chernoff_se_objective(B1, D1, B2, D2):
    t1, t2 = float(np.real(np.trace(B1))), float(np.real(np.trace(B2)))

    def xi(s):
        cross = np.real(np.trace(psd_power(D1, s, 0.0) @ psd_power(D2, 1.0 - s, 0.0))) if D1.size else 0.0
        return -(s * t1 + (1.0 - s) * t2 + float(cross))

    return xi


def qcb_se(scenario, tol_s=1e-6):
    """Maximize ``-(s Tr nu1_B + (1-s) Tr nu2_B + Tr[nu1_D^s nu2_D^(1-s)])`` over ``s``.

    The maximizer is generally not ``1/2``; a 21-point grid guards against
    local maxima before refinement to ``tol_s``.
    """
    _require_kind(scenario, EXTENDING, "qcb_se")
    _require_kernel(scenario, "qcb_se")
    B1, D1, B2, D2 = _blocks(scenario)
    _check_kernel_psd(D1, "nu1")
    _check_kernel_psd(D2, "nu2")
    xi, s_star = maximize_unit_interval(_chernoff_se_objective(B1, D1, B2, D2), tol_s=tol_s)
    return MeasureResult(xi, 2.0, s_star=s_star)


def _vacuous_notes(D1, D2):
    if not np.any(D1) or not np.any(D2):
        return ("one perturbation has a zero kernel block; the kernel-block size "
                "condition is vacuous for it",)
    return ()


def fidelity_se(scenario):
    """``1 + Tr[nu1_B + nu2_B] + 2 Tr sqrt(sqrt(nu1_D) nu2_D sqrt(nu1_D))``."""
    _require_kind(scenario, EXTENDING, "fidelity_se")
    _require_kernel(scenario, "fidelity_se")
    B1, D1, B2, D2 = _blocks(scenario)
    _check_kernel_psd(D1, "nu1")
    _check_kernel_psd(D2, "nu2")
    value = 1.0 + float(np.real(np.trace(B1 + B2))) + 2.0 * _root_overlap(D1, D2)
    return MeasureResult(value, 1.5, notes=_vacuous_notes(D1, D2))


def bures_se(scenario):
    """``Tr[nu1_D + nu2_D] - 2 Tr sqrt(sqrt(nu1_D) nu2_D sqrt(nu1_D))``.

    With ``nu1 = 0`` this is ``Tr[nu2_D]``: the weight that migrates into the
    kernel, independent of the support block.
    """
    _require_kind(scenario, EXTENDING, "bures_se")
    _require_kernel(scenario, "bures_se")
    _, D1, _, D2 = _blocks(scenario)
    _check_kernel_psd(D1, "nu1")
    _check_kernel_psd(D2, "nu2")
    value = float(np.real(np.trace(D1 + D2))) - 2.0 * _root_overlap(D1, D2)
    return MeasureResult(value, 1.5, notes=_vacuous_notes(D1, D2))


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

MEASURES = ("entropy", "qre", "qcb", "fidelity", "bures")

_EXPANSIONS = {
    ("entropy", PRESERVING): entropy_sp,
    ("entropy", EXTENDING): entropy_se,
    ("qre", PRESERVING): qre_sp,
    ("qre", EXTENDING): qre_se,
    ("qcb", PRESERVING): qcb_sp,
    ("qcb", EXTENDING): qcb_se,
    ("fidelity", PRESERVING): fidelity_sp,
    ("fidelity", EXTENDING): fidelity_se,
    ("bures", PRESERVING): bures_sp,
    ("bures", EXTENDING): bures_se,
}


def _check_measure(measure):
    if measure not in MEASURES:
        raise ValueError(f"unknown measure {measure!r}; choose from {', '.join(MEASURES)}")


def expansion_function(measure, kind):
    """The expansion routine for ``measure`` in the regime ``kind``."""
    _check_measure(measure)
    kind = {"preserving": PRESERVING, "extending": EXTENDING}.get(kind, kind)
    return _EXPANSIONS[(measure, kind)]


def expand_measure(measure, scenario, tol_s=1e-6):
    """Evaluate the expansion of ``measure``, picking the regime from the scenario."""
    func = expansion_function(measure, scenario.kind)
    if func is qcb_se:
        return func(scenario, tol_s=tol_s)
    return func(scenario)


def _second_state(scenario):
    return scenario.rho0.op if scenario.nu2 is None else scenario.rho2


def exact_measure(measure, scenario, tol_s=1e-6):
    """Evaluate ``measure`` exactly on ``rho1 = rho0 + nu1`` (and ``rho2``)."""
    _check_measure(measure)
    rho1 = scenario.rho1
    if measure == "entropy":
        return MeasureResult(exact.von_neumann_entropy(rho1))
    rho2 = _second_state(scenario)
    if measure == "qre":
        return MeasureResult(exact.quantum_relative_entropy(rho1, rho2))
    if measure == "qcb":
        xi, s_star = exact.chernoff_bound(rho1, rho2, tol_s=tol_s)
        return MeasureResult(xi, s_star=s_star)
    if measure == "fidelity":
        return MeasureResult(exact.fidelity(rho1, rho2))
    return MeasureResult(exact.bures_distance(rho1, rho2))


def apply_function_state(scenario, f):
    """``f(rho0 + nu1)`` exactly."""
    return apply_function_exact(scenario.rho1, f)


__all__ = [
    "MeasureResult",
    "MEASURES",
    "dk_expand_state",
    "entropy_sp",
    "qre_sp",
    "chernoff_s_sp",
    "qcb_sp",
    "fidelity_sp",
    "bures_sp",
    "entropy_se",
    "qre_se",
    "qcb_se",
    "fidelity_se",
    "bures_se",
    "expansion_function",
    "expand_measure",
    "exact_measure",
]
