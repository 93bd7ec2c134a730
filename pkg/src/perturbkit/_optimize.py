"""One-dimensional maximization on [0, 1]: coarse grid, then bounded refinement."""

import numpy as np
from scipy.optimize import minimize_scalar

GRID_POINTS = 21


def maximize_unit_interval(func, tol_s=1e-6, grid_points=GRID_POINTS, tie_rtol=1e-12,
                           tie_atol=1e-14):
    """Return ``(max_value, argmax)`` of ``func`` over ``[0, 1]``.

    The best grid point is refined inside its two neighbouring cells with
    scipy's bounded Brent search (golden-section steps with parabolic
    acceleration) to ``xatol=tol_s``. If ``func(1/2)`` is within
    ``max(tie_atol, tie_rtol * |max|)`` of the maximum, ``1/2`` is returned
    as the maximizer.
    """
    grid = np.linspace(0.0, 1.0, grid_points)
    vals = np.array([func(s) for s in grid])
    if np.all(np.isposinf(vals)):
        return np.inf, 0.5
    i = int(np.nanargmax(vals))
    best_s, best = float(grid[i]), float(vals[i])
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid_points - 1)]
    if np.isfinite(best):
        res = minimize_scalar(lambda s: -func(s), bounds=(lo, hi), method="bounded",
                              options={"xatol": tol_s})
        if -res.fun > best:
            best_s, best = float(res.x), float(-res.fun)
    half = float(func(0.5))
    if half >= best - max(tie_atol, tie_rtol * abs(best)):
        return max(half, best) if np.isfinite(best) else half, 0.5
    return best, best_s
