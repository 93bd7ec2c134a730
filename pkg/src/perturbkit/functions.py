"""Scalar function registry and divided-difference tables.

A :class:`ScalarFunctionSpec` bundles ``f`` with its first three derivatives
and the half-line it lives on. Divided differences of first and second order
are the coefficient tables consumed by the Frechet derivative and by the
second directional derivative of a primary matrix function.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .exceptions import DomainError

#: Relative gap below which two eigenvalues are treated as coincident.
DEGENERACY_TOL = 1e-8


@dataclass(frozen=True)
class ScalarFunctionSpec:
    """A real scalar function together with its derivatives.

    Parameters
    ----------
    name : str
        CLI-facing identifier (``"log"``, ``"pow:0.3"``, ...).
    f, df, d2f : callable
        The function and its first two derivatives, vectorized over ndarrays.
    d3f : callable or None
        Third derivative. Only needed to build ``derivative()`` or
        ``reciprocal_derivative()`` specs that themselves need a second
        divided difference.
    lower : float
        Left end of the domain (``-inf`` for functions on the whole line).
        Derivatives are only required to exist strictly to the right of it.
    lower_closed : bool
        Whether ``f`` itself is defined at ``lower`` (e.g. ``0 log 0 := 0``).
    smoothness : int
        Differentiability class on the open domain; recorded, not enforced
        beyond the C^2 that the tables consume.
    params : dict
        Parameters the function was built from, e.g. ``{"s": 0.3}``.
    """

    name: str
    f: Callable
    df: Callable
    d2f: Callable
    d3f: Optional[Callable] = None
    lower: float = -np.inf
    lower_closed: bool = False
    smoothness: int = 2
    params: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.f(x)

    def check_domain(self, x, allow_boundary=False):
        """Raise :class:`DomainError` for the first value outside the domain."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if np.isinf(self.lower):
            return
        ok = x > self.lower
        if allow_boundary and self.lower_closed:
            ok |= x == self.lower
        if not np.all(ok):
            raise DomainError(self.name, float(x[~ok][0]))

    def derivative(self):
        """Function description of ``f'``; needs ``d3f`` for a usable second derivative."""
        if self.d3f is None:
            d3 = _missing(f"{self.name}'''")
        else:
            d3 = self.d3f
        return ScalarFunctionSpec(
            name=f"d({self.name})",
            f=self.df,
            df=self.d2f,
            d2f=d3,
            lower=self.lower,
            lower_closed=False,
            smoothness=max(self.smoothness - 1, 0),
            params=dict(self.params),
        )

    def reciprocal_derivative(self):
        """Function description of ``1 / f'``."""
        df, d2f = self.df, self.d2f
        d3f = self.d3f if self.d3f is not None else _missing(f"{self.name}'''")

        def g(x):
            return 1.0 / df(x)

        def dg(x):
            return -d2f(x) / df(x) ** 2

        def d2g(x):
            d1 = df(x)
            return -d3f(x) / d1**2 + 2.0 * d2f(x) ** 2 / d1**3

        return ScalarFunctionSpec(
            name=f"1/d({self.name})",
            f=g,
            df=dg,
            d2f=d2g,
            lower=self.lower,
            lower_closed=False,
            smoothness=max(self.smoothness - 1, 0),
            params=dict(self.params),
        )

    def scaled(self, a):
        """Function description of ``a * f``."""
        a = float(a)
        d3f = self.d3f
        return ScalarFunctionSpec(
            name=f"{a!r}*{self.name}",
            f=lambda x: a * self.f(x),
            df=lambda x: a * self.df(x),
            d2f=lambda x: a * self.d2f(x),
            d3f=None if d3f is None else (lambda x: a * d3f(x)),
            lower=self.lower,
            lower_closed=self.lower_closed,
            smoothness=self.smoothness,
            params={**self.params, "scale": a},
        )


def _missing(label):
    def fail(x):
        raise NotImplementedError(f"{label} is not available for this function")

    return fail


def _xlogx(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log(x[pos])
    return out


def power(s):
    """``x ** s`` on the non-negative half-line (``0 ** s := 0`` for s > 0)."""
    s = float(s)
    if s == 2.0:
        return SQUARE
    if s == 1.0:
        return IDENTITY

    def f(x):
        x = np.asarray(x, dtype=float)
        if s > 0:
            out = np.zeros_like(x)
            pos = x > 0
            out[pos] = x[pos] ** s
            return out
        return x**s

    name = {0.5: "sqrt", -0.5: "invsqrt"}.get(s, f"pow:{s!r}")
    return ScalarFunctionSpec(
        name=name,
        f=f,
        df=lambda x: s * np.asarray(x, dtype=float) ** (s - 1),
        d2f=lambda x: s * (s - 1) * np.asarray(x, dtype=float) ** (s - 2),
        d3f=lambda x: s * (s - 1) * (s - 2) * np.asarray(x, dtype=float) ** (s - 3),
        lower=0.0,
        lower_closed=s > 0,
        smoothness=6,
        params={"s": s},
    )


LOG = ScalarFunctionSpec(
    name="log",
    f=lambda x: np.log(np.asarray(x, dtype=float)),
    df=lambda x: 1.0 / np.asarray(x, dtype=float),
    d2f=lambda x: -1.0 / np.asarray(x, dtype=float) ** 2,
    d3f=lambda x: 2.0 / np.asarray(x, dtype=float) ** 3,
    lower=0.0,
    lower_closed=False,
    smoothness=6,
)

XLOGX = ScalarFunctionSpec(
    name="xlogx",
    f=_xlogx,
    df=lambda x: 1.0 + np.log(np.asarray(x, dtype=float)),
    d2f=lambda x: 1.0 / np.asarray(x, dtype=float),
    d3f=lambda x: -1.0 / np.asarray(x, dtype=float) ** 2,
    lower=0.0,
    lower_closed=True,
    smoothness=6,
)

IDENTITY = ScalarFunctionSpec(
    name="x",
    f=lambda x: np.asarray(x, dtype=float) * 1.0,
    df=lambda x: np.ones_like(np.asarray(x, dtype=float)),
    d2f=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
    d3f=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
    smoothness=10**9,
    params={"s": 1.0},
)

SQUARE = ScalarFunctionSpec(
    name="square",
    f=lambda x: np.asarray(x, dtype=float) ** 2,
    df=lambda x: 2.0 * np.asarray(x, dtype=float),
    d2f=lambda x: np.full_like(np.asarray(x, dtype=float), 2.0),
    d3f=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
    smoothness=10**9,
    params={"s": 2.0},
)

SQRT = power(0.5)
INVSQRT = power(-0.5)

_NAMED = {
    "log": LOG,
    "xlogx": XLOGX,
    "sqrt": SQRT,
    "invsqrt": INVSQRT,
    "square": SQUARE,
    "x": IDENTITY,
}


def get_function(name):
    """Look up a function by its CLI name (``log``, ``xlogx``, ``sqrt``,
    ``invsqrt``, ``square``, ``x`` or ``pow:<s>``)."""
    if isinstance(name, ScalarFunctionSpec):
        return name
    if name in _NAMED:
        return _NAMED[name]
    if name.startswith("pow:"):
        try:
            s = float(name[4:])
        except ValueError:
            raise ValueError(f"bad exponent in function name {name!r}") from None
        return power(s)
    raise ValueError(
        f"unknown function {name!r}; expected one of {sorted(_NAMED)} or 'pow:<s>'"
    )


# ---------------------------------------------------------------------------
# divided differences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DividedDifferenceFirst:
    values: np.ndarray
    eigenvalues: np.ndarray
    variant: str = "standard"


@dataclass(frozen=True)
class DividedDifferenceSecond:
    values: np.ndarray
    eigenvalues: np.ndarray


def _close(a, b, tol):
    return np.abs(a - b) <= tol * np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))


def first_divided_difference(f, eigenvalues, degeneracy_tol=DEGENERACY_TOL):
    """First divided-difference matrix ``[f, lam]^[1]``.

    Off-diagonal pairs use the difference quotient; pairs closer than
    ``degeneracy_tol`` (relative) use ``f'`` at their midpoint.
    """
    f = get_function(f)
    lam = np.asarray(eigenvalues, dtype=float).ravel()
    f.check_domain(lam)
    a, b = lam[:, None], lam[None, :]
    close = _close(a, b, degeneracy_tol)
    fl = f.f(lam)
    with np.errstate(divide="ignore", invalid="ignore"):
        quotient = (fl[:, None] - fl[None, :]) / (a - b)
    values = np.where(close, f.df((a + b) / 2), quotient)
    return DividedDifferenceFirst(values=values, eigenvalues=lam)


def first_divided_difference_extended(s, eigenvalues, kernel_mask=None,
                                      degeneracy_tol=DEGENERACY_TOL):
    """First divided difference of ``x ** s`` extended onto a kernel.

    ``kernel_mask`` marks the eigenvalues that are exactly zero; if omitted,
    entries equal to ``0.0`` are taken as kernel. Positive pairs follow the
    standard rule, mixed pairs give ``lam ** (s - 1)`` and kernel pairs give 1.
    """
    s = float(s)
    if not 0 < s <= 1:
        raise ValueError(f"s must lie in (0, 1], got {s}")
    lam = np.asarray(eigenvalues, dtype=float).ravel().copy()
    if kernel_mask is None:
        kernel_mask = lam == 0.0
    kernel_mask = np.asarray(kernel_mask, dtype=bool)
    if np.any(lam[~kernel_mask] <= 0):
        bad = lam[~kernel_mask][lam[~kernel_mask] <= 0][0]
        raise DomainError(f"pow:{s!r} (extended)", float(bad))
    lam[kernel_mask] = 0.0

    values = np.ones((lam.size, lam.size))
    pos = ~kernel_mask
    if np.any(pos):
        values[np.ix_(pos, pos)] = first_divided_difference(
            power(s), lam[pos], degeneracy_tol
        ).values
        mixed = lam[pos] ** (s - 1)
        values[np.ix_(pos, kernel_mask)] = mixed[:, None]
        values[np.ix_(kernel_mask, pos)] = mixed[None, :]
    return DividedDifferenceFirst(values=values, eigenvalues=lam, variant="kernel-extended")


def second_divided_difference(f, eigenvalues, degeneracy_tol=DEGENERACY_TOL):
    """Second divided-difference tensor ``[f, lam]^[2]`` with index order (k, l, m).

    Three branches: ``k != m`` uses the quotient of first differences,
    ``k == m != l`` uses ``(f'(lam_k) - [f]^[1]_{kl}) / (lam_k - lam_l)``, and a
    fully coincident triple gives ``f''/2``. The result is made exactly
    symmetric under ``k <-> m``.
    """
    f = get_function(f)
    lam = np.asarray(eigenvalues, dtype=float).ravel()
    f.check_domain(lam)
    dd1 = first_divided_difference(f, lam, degeneracy_tol).values
    n = lam.size
    lk = lam[:, None, None]
    ll = lam[None, :, None]
    lm = lam[None, None, :]
    km_close = _close(lk, lm, degeneracy_tol)
    kl_close = _close(lk, ll, degeneracy_tol)

    with np.errstate(divide="ignore", invalid="ignore"):
        branch1 = (dd1[:, :, None] - dd1.T[None, :, :]) / (lk - lm)
        mid_km = (lk + lm) / 2
        branch2 = (f.df(mid_km) - dd1[:, :, None]) / (lk - ll)
        branch3 = f.d2f((lk + ll + lm) / 3) / 2

    values = np.where(~km_close, branch1, np.where(~kl_close, branch2, branch3))
    values = np.broadcast_to(values, (n, n, n))
    k_idx = np.arange(n)[:, None, None]
    m_idx = np.arange(n)[None, None, :]
    values = np.where(k_idx <= m_idx, values, values.transpose(2, 1, 0))
    return DividedDifferenceSecond(values=np.ascontiguousarray(values), eigenvalues=lam)
