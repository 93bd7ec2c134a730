"""scikit-learn style wrappers around the functional API.

``fit`` takes the unperturbed operator and caches its eigendecomposition, so
repeated queries with different perturbations reuse one diagonalization.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .calculus import dk_expand
from .functions import DEGENERACY_TOL, get_function
from .linalg import ZERO_THRESHOLD, as_spectral
from .measures import expand_measure, exact_measure
from .states import density_matrix, make_scenario


class PerturbativeExpansion(BaseEstimator):
    """Expansions of information measures around a fixed state.

    Parameters
    ----------
    zero_threshold : float, default=1e-12
        Relative eigenvalue threshold separating support from kernel.
    tol_s : float, default=1e-6
        Tolerance on the Chernoff maximizer.

    Attributes
    ----------
    rho0_ : ndarray of shape (d, d)
    spectral_ : SpectralData
    rank_ : int

    Examples
    --------
    >>> import numpy as np
    >>> est = PerturbativeExpansion().fit(np.eye(2) / 2)
    >>> round(est.relative_entropy(np.diag([0.01, -0.01])), 10)
    0.0002
    """

    def __init__(self, zero_threshold=ZERO_THRESHOLD, tol_s=1e-6):
        self.zero_threshold = zero_threshold
        self.tol_s = tol_s

    def fit(self, rho0, y=None):
        state = density_matrix(rho0, self.zero_threshold)
        self._state = state
        self.rho0_ = state.op
        self.spectral_ = state.spectral
        self.rank_ = state.rank
        return self

    def scenario(self, nu1, nu2=None):
        check_is_fitted(self)
        return make_scenario(self._state, nu1, nu2, self.zero_threshold)

    def _evaluate(self, measure, nu1, nu2, exact):
        sc = self.scenario(nu1, nu2)
        if exact:
            return exact_measure(measure, sc, self.tol_s)
        return expand_measure(measure, sc, self.tol_s)

    def entropy(self, nu, exact=False):
        """Entropy of ``rho0 + nu``."""
        return float(self._evaluate("entropy", nu, None, exact))

    def relative_entropy(self, nu1, nu2=None, exact=False):
        """``D(rho0 + nu1 || rho0 + nu2)``; ``nu2`` defaults to zero."""
        return float(self._evaluate("qre", nu1, nu2, exact))

    def chernoff(self, nu1, nu2=None, exact=False):
        """Chernoff information and its maximizer, as ``(xi, s_star)``."""
        res = self._evaluate("qcb", nu1, nu2, exact)
        return float(res.value), res.s_star

    def fidelity(self, nu1, nu2=None, exact=False):
        return float(self._evaluate("fidelity", nu1, nu2, exact))

    def bures(self, nu1, nu2=None, exact=False):
        """Squared Bures distance."""
        return float(self._evaluate("bures", nu1, nu2, exact))


class MatrixFunctionExpansion(TransformerMixin, BaseEstimator):
    """Truncated expansion ``f(A + E)`` around a fitted Hermitian ``A``.

    Parameters
    ----------
    function : str, default="log"
        Name accepted by :func:`~perturbkit.functions.get_function`.
    order : {0, 1, 2}, default=2
    degeneracy_tol : float, default=1e-8
    zero_threshold : float, default=1e-12
    """

    def __init__(self, function="log", order=2, degeneracy_tol=DEGENERACY_TOL,
                 zero_threshold=ZERO_THRESHOLD):
        self.function = function
        self.order = order
        self.degeneracy_tol = degeneracy_tol
        self.zero_threshold = zero_threshold

    def fit(self, A, y=None):
        if self.order not in (0, 1, 2):
            raise ValueError(f"order must be 0, 1 or 2, got {self.order}")
        self.function_ = get_function(self.function)
        self.spectral_ = as_spectral(A, self.zero_threshold)
        self.n_features_in_ = self.spectral_.dim
        return self

    def transform(self, E):
        """Expand for one perturbation ``(d, d)`` or a stack ``(n, d, d)``."""
        check_is_fitted(self)
        E = np.asarray(E)
        if E.ndim == 2:
            return self._one(E)
        if E.ndim == 3:
            return np.stack([self._one(e) for e in E])
        raise ValueError(f"E must have shape (d, d) or (n, d, d), got {E.shape}")

    def _one(self, E):
        return dk_expand(self.spectral_, E, self.function_, self.order,
                         self.degeneracy_tol).value
