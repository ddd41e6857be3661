"""Grid-search ML kernel for time-resolved counts.

The per-pixel log-likelihood under per-sub-acquisition dose mu and yield
eta uses the Touchard-polynomial identity

    sum_m t^m m^y / m! = e^t * sum_{j<=y} S2(y, j) t^j,   t = mu e^-eta,

with S2 the Stirling numbers of the second kind, so each (pixel, grid
point) evaluation costs O(ymax^2) instead of a truncated m-sum. Dropping
the eta-independent -sum(log y_k!) term, the objective per pixel is

    ll(eta) = n (t - mu) + Ytot log eta + sum_y mult_y log T_y(t).

Ties break toward smaller eta (ascending grid, strict improvement).
A numba kernel parallelizes over pixels; a numpy path implements the
same math when numba is unavailable.
"""

import numpy as np

try:
    from numba import njit, prange
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

__all__ = ["grid_search_mle", "log_stirling2_table", "HAVE_NUMBA"]


def log_stirling2_table(ymax):
    """log S2(y, j) for 0 <= j <= y <= ymax; -inf where S2 vanishes."""
    tab = np.full((ymax + 1, ymax + 1), -np.inf)
    tab[0, 0] = 0.0
    for y in range(1, ymax + 1):
        j = np.arange(1, y + 1)
        tab[y, 1:y + 1] = np.logaddexp(np.log(j) + tab[y - 1, 1:y + 1],
                                       tab[y - 1, 0:y])
    return tab


if HAVE_NUMBA:

    @njit(parallel=True, cache=True)
    def _search_numba(counts, mu, grid, log_grid, exp_neg_grid, ls2, out):
        n_pixels, n = counts.shape
        n_grid = grid.shape[0]
        hist_size = ls2.shape[0]
        for p in prange(n_pixels):
            hist = np.zeros(hist_size, np.int64)
            ytot = 0
            ymax_p = 0
            for k in range(n):
                y = counts[p, k]
                hist[y] += 1
                ytot += y
                if y > ymax_p:
                    ymax_p = y
            mu_p = mu[p]
            best_ll = -np.inf
            best = grid[0]
            for g in range(n_grid):
                t = mu_p * exp_neg_grid[g]
                if grid[g] <= 0.0:
                    if ytot > 0:
                        continue
                    ll = 0.0
                else:
                    logt = np.log(t)
                    ll = n * (t - mu_p) + ytot * log_grid[g]
                    for y in range(1, ymax_p + 1):
                        if hist[y] == 0:
                            continue
                        mx = -np.inf
                        for j in range(1, y + 1):
                            v = ls2[y, j] + j * logt
                            if v > mx:
                                mx = v
                        acc = 0.0
                        for j in range(1, y + 1):
                            acc += np.exp(ls2[y, j] + j * logt - mx)
                        ll += hist[y] * (mx + np.log(acc))
                if ll > best_ll:
                    best_ll = ll
                    best = grid[g]
            out[p] = best


def _search_numpy(counts, mu, grid, ls2):
    n_pixels, n = counts.shape
    ymax = int(counts.max()) if counts.size else 0
    hist = np.zeros((n_pixels, ymax + 1), dtype=np.int64)
    rows = np.repeat(np.arange(n_pixels), n)
    np.add.at(hist, (rows, counts.ravel()), 1)
    ytot = counts.sum(axis=1)

    best_ll = np.full(n_pixels, -np.inf)
    best = np.full(n_pixels, grid[0])
    js = np.arange(ymax + 1)
    for g in grid:
        t = mu * np.exp(-g)
        if g <= 0.0:
            ll = np.where(ytot == 0, 0.0, -np.inf)
        else:
            logt = np.log(t)
            ll = n * (t - mu) + ytot * np.log(g)
            for y in range(1, ymax + 1):
                col = hist[:, y]
                if not col.any():
                    continue
                terms = ls2[y, 1:y + 1][None, :] + js[1:y + 1][None, :] * logt[:, None]
                mx = terms.max(axis=1)
                ll = ll + col * (mx + np.log(np.exp(terms - mx[:, None]).sum(axis=1)))
        better = ll > best_ll
        best[better] = g
        best_ll[better] = ll[better]
    return best


def grid_search_mle(counts, mu, grid_points):
    """Per-pixel argmax of the time-resolved log-likelihood over a grid.

    Parameters
    ----------
    counts : (n_pixels, n) int array
    mu : (n_pixels,) float array
        Per-sub-acquisition dose at each pixel, strictly positive.
    grid_points : (n_grid,) float array
        Ascending candidate yields.

    Returns
    -------
    (n_pixels,) float array of selected grid points.
    """
    counts = np.ascontiguousarray(counts, dtype=np.int64)
    mu = np.ascontiguousarray(mu, dtype=np.float64)
    grid_points = np.ascontiguousarray(grid_points, dtype=np.float64)
    ymax = int(counts.max()) if counts.size else 0
    ls2 = log_stirling2_table(max(ymax, 1))
    if HAVE_NUMBA:
        with np.errstate(all="ignore"):
            log_grid = np.where(grid_points > 0, np.log(np.maximum(grid_points, 1e-300)), -np.inf)
        out = np.empty(counts.shape[0])
        _search_numba(counts, mu, grid_points,
                      log_grid, np.exp(-grid_points), ls2, out)
        return out
    return _search_numpy(counts, mu, grid_points, ls2)
