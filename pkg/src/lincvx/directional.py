"""Directional boundary distance and the gauge of the indicatrix.

``d(z, X)`` is the largest r such that the disc ``z + lam*X, |lam| < r`` stays
in the domain.  Its reciprocal is the Minkowski gauge of the maximal circular
subset of the domain around z; convexity of that gauge is tested here by
sampling.
"""

from __future__ import annotations

import math

import numpy as np

from .domains import (BISECTION_ITERS, DomainSpec, _QUADRATIC, _refine_root, first_exit,
                      march_brackets)
from .parallel import map_chunks
from .points import as_cpoint, random_unit_directions
from .report import CriterionReport, stopwatch, witness

THETA_GRID = 128
REFINE_CELLS = 3
GOLDEN_ITERS = 20
MARCH = 16
_BATCH = 2048
_INVGOLD = (math.sqrt(5) - 1) / 2


class NotInteriorError(ValueError):
    pass


class InvalidDirectionError(ValueError):
    pass


def _require_interior(domain: DomainSpec, z: np.ndarray) -> None:
    r = domain.rho(z)
    if np.any(r >= 0):
        raise NotInteriorError("base point is not strictly inside the domain")


def ray_exit_distance(domain: DomainSpec, z, X, theta: float) -> float:
    """Smallest t > 0 with ``z + t e^{i theta} X`` on the boundary (inf if none)."""
    z = as_cpoint(z, domain.n)
    X = _direction(X, domain.n)
    _require_interior(domain, z)
    return float(first_exit(domain, z, (np.exp(1j * theta) * X)[None, :])[0])


def _direction(X, n: int) -> np.ndarray:
    X = as_cpoint(X, n)
    if not np.any(X != 0):
        raise InvalidDirectionError("direction must be nonzero")
    return X


def exit_profile(domain: DomainSpec, z, X, thetas) -> np.ndarray:
    """Exit distances along ``e^{i theta} X`` for a batch: ``(m, len(thetas))``."""
    z, X, dirs, base = _fan(z, X, thetas)
    return first_exit(domain, base, dirs, march=MARCH).reshape(X.shape[0], -1)


def _fan(z, X, thetas):
    X = np.atleast_2d(np.asarray(X, dtype=complex))
    z = np.broadcast_to(np.asarray(z, dtype=complex), X.shape)
    m, k = X.shape[0], np.size(thetas)
    dirs = (np.exp(1j * np.asarray(thetas))[None, :, None] * X[:, None, :]).reshape(m * k, -1)
    base = np.broadcast_to(z[:, None, :], (m, k, z.shape[-1])).reshape(m * k, -1)
    return z, X, dirs, base


def _grid_exits(domain: DomainSpec, z, X, grid) -> np.ndarray:
    """Phase-grid exits, exact only where they can rank among the lowest cells.

    Every ray is bracketed; a ray is refined only if its bracket starts below
    the REFINE_CELLS-th smallest bracket end of its problem.  Other entries
    hold their bracket end, an upper bound that cannot change the ranking.
    Quadratic families are solved exactly for every ray.
    """
    z, X, dirs, base = _fan(z, X, grid)
    m, k = X.shape[0], len(grid)
    if domain.family in _QUADRATIC:
        return first_exit(domain, base, dirs).reshape(m, k)
    lo, hi, f_lo, f_hi = march_brackets(domain, base, dirs, march=MARCH)
    lo, hi = lo.reshape(m, k), hi.reshape(m, k)
    cut = np.partition(hi, REFINE_CELLS - 1, axis=1)[:, REFINE_CELLS - 1]
    cand = (lo <= cut[:, None]) & np.isfinite(hi)
    idx = np.nonzero(cand.ravel())[0]
    out = hi.ravel().copy()
    if idx.size:
        out[idx] = _refine_root(domain, base[idx], dirs[idx], lo.ravel()[idx], out[idx],
                                f_lo[idx], f_hi[idx], BISECTION_ITERS)
    return out.reshape(m, k)


def directional_distances(domain: DomainSpec, z, X) -> np.ndarray:
    """Vectorized ``d(z_i, X_i)`` for base points ``(m, n)`` (or one) and directions ``(m, n)``.

    Coarse minimum on a 128-point phase grid, then golden-section refinement
    of the three lowest cells.  The refined value never exceeds the coarse one.
    """
    X = np.atleast_2d(np.asarray(X, dtype=complex))
    z = np.broadcast_to(np.asarray(z, dtype=complex), X.shape)
    out = np.empty(X.shape[0])
    for s in range(0, X.shape[0], _BATCH):
        sl = slice(s, s + _BATCH)
        out[sl] = _distances(domain, z[sl], X[sl])
    return out


def _distances(domain, z, X):
    m = X.shape[0]
    grid = 2 * np.pi * np.arange(THETA_GRID) / THETA_GRID
    prof = _grid_exits(domain, z, X, grid)
    best = prof.min(axis=1)
    cells = np.argsort(prof, axis=1, kind="stable")[:, :REFINE_CELLS]
    step = 2 * np.pi / THETA_GRID
    # one golden search per (problem, cell), all advanced together
    zz = np.repeat(z, REFINE_CELLS, axis=0)
    XX = np.repeat(X, REFINE_CELLS, axis=0)
    a = grid[cells].ravel() - step
    b = grid[cells].ravel() + step

    def f(theta):
        return first_exit(domain, zz, np.exp(1j * theta)[:, None] * XX, march=MARCH)

    c = b - _INVGOLD * (b - a)
    d = a + _INVGOLD * (b - a)
    fc, fd = f(c), f(d)
    low = np.minimum(fc, fd)
    for _ in range(GOLDEN_ITERS):
        left = fc < fd
        # left: [a, d] survives, old c becomes d; right: [c, b] survives, old d becomes c
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        probe = np.where(left, b - _INVGOLD * (b - a), a + _INVGOLD * (b - a))
        fp = f(probe)
        c, d, fc, fd = (np.where(left, probe, d), np.where(left, c, probe),
                        np.where(left, fp, fd), np.where(left, fc, fp))
        low = np.minimum(low, fp)
    refined = low.reshape(m, REFINE_CELLS).min(axis=1)
    return np.minimum(best, refined)


def directional_distance(domain: DomainSpec, z, X) -> float:
    """``d(z, X) = sup{r : z + lam X in D for |lam| < r}``; may be inf."""
    z = as_cpoint(z, domain.n)
    X = _direction(X, domain.n)
    _require_interior(domain, z)
    return float(directional_distances(domain, z, X[None, :])[0])


def gauges(domain: DomainSpec, z, X) -> np.ndarray:
    """Vectorized gauge ``1/d(z, X)``; zero directions get gauge 0."""
    X = np.atleast_2d(np.asarray(X, dtype=complex))
    out = np.zeros(X.shape[0])
    nz = np.any(X != 0, axis=1)
    if nz.any():
        zz = np.broadcast_to(np.asarray(z, dtype=complex), X.shape)[nz]
        d = directional_distances(domain, zz, X[nz])
        out[nz] = np.where(np.isfinite(d), 1.0 / d, 0.0)
    return out


def minkowski_gauge(domain: DomainSpec, z, X) -> float:
    """Gauge of ``D_z - z`` at X, i.e. ``1/d(z, X)`` (0 when d is infinite)."""
    z = as_cpoint(z, domain.n)
    X = _direction(X, domain.n)
    _require_interior(domain, z)
    return float(gauges(domain, z, X[None, :])[0])


def _sample_pairs(domain, trials, seed):
    rng = np.random.default_rng(seed)
    u = random_unit_directions(rng, 2 * trials, domain.n)
    r = rng.random(2 * trials)
    return u[:trials], u[trials:], r[:trials], r[trials:]


def gauge_subadditivity_check(domain: DomainSpec, z, trials: int = 1000, seed: int = 0,
                              tol: float | None = None, pairs=None,
                              workers: int = 1) -> CriterionReport:
    """Worst ``gauge(X) + gauge(Y) - gauge(X + Y)`` over sampled pairs.

    ``pairs`` overrides sampling with explicit ``(X, Y)`` directions.
    """
    z = as_cpoint(z, domain.n)
    _require_interior(domain, z)
    tol = 1e-9 * domain.scale if tol is None else tol
    with stopwatch() as clock:
        if pairs is not None:
            X = np.array([as_cpoint(p[0], domain.n) for p in pairs])
            Y = np.array([as_cpoint(p[1], domain.n) for p in pairs])
        else:
            u, v, r1, r2 = _sample_pairs(domain, trials, seed)
            X, Y = u * r1[:, None], v * r2[:, None]
        count = X.shape[0]

        def chunk(sl):
            g = gauges(domain, z, np.concatenate([X[sl], Y[sl], X[sl] + Y[sl]]))
            k = sl.stop - sl.start
            return g.reshape(3, k).T

        g = map_chunks(chunk, count, workers).reshape(count, 3)
        margins = g[:, 0] + g[:, 1] - g[:, 2]
        i = int(np.argmin(margins))
        worst = float(margins[i])
    verdict = "fail" if worst < -tol else "pass"
    wit = witness(z, X=X[i], Y=Y[i], gauge_X=g[i, 0], gauge_Y=g[i, 1], gauge_sum=g[i, 2])
    return CriterionReport("gauge", verdict, worst, wit, count, clock[0],
                           details={"tol": tol}, margins=margins)


def indicatrix_midpoint_margin(domain: DomainSpec, z, w1, w2) -> float:
    """``1 - gauge(mid - z)`` for the midpoint of two points of the indicatrix."""
    z = as_cpoint(z, domain.n)
    _require_interior(domain, z)
    w1, w2 = as_cpoint(w1, domain.n), as_cpoint(w2, domain.n)
    g = gauges(domain, z, np.array([w1 - z, w2 - z, 0.5 * (w1 + w2) - z]))
    if g[0] >= 1 or g[1] >= 1:
        raise ValueError("both points must lie in the indicatrix (gauge < 1)")
    return float(1.0 - g[2])


def indicatrix_midpoint_check(domain: DomainSpec, z, trials: int = 1000, seed: int = 0,
                              tol: float | None = None, points=None,
                              workers: int = 1) -> CriterionReport:
    """Midpoints of sampled pairs of the indicatrix must stay in it.

    Points are ``z + s u / gauge(u)`` with u uniform on the unit sphere.
    Even-indexed samples take ``s = U^(1/2n)`` (uniform in the indicatrix by
    volume), odd-indexed ones sit in a thin layer at ``s = 1 - 1e-6``, where
    nonconvexity of the indicatrix shows up most often.  A pair fails
    when the midpoint gauge reaches ``1 - tol``: the indicatrix is open, so a
    midpoint on its boundary already violates convexity.
    """
    z = as_cpoint(z, domain.n)
    _require_interior(domain, z)
    tol = 1e-9 * domain.scale if tol is None else tol
    with stopwatch() as clock:
        if points is not None:
            W1 = np.array([as_cpoint(p[0], domain.n) for p in points]) - z
            W2 = np.array([as_cpoint(p[1], domain.n) for p in points]) - z
            pre = None
        else:
            u, v, s1, s2 = _sample_pairs(domain, trials, seed)
            pre = (u, v, _indicatrix_radii(s1, domain.n), _indicatrix_radii(s2, domain.n))
        count = W1.shape[0] if pre is None else trials

        def chunk(sl):
            if pre is None:
                a, b = W1[sl], W2[sl]
                g = gauges(domain, z, np.concatenate([a, b, 0.5 * (a + b)]))
                k = sl.stop - sl.start
                g = g.reshape(3, k)
                bad = (g[0] >= 1) | (g[1] >= 1)
                if bad.any():
                    raise ValueError("explicit points must lie in the indicatrix (gauge < 1)")
                return g[2]
            u, v, s1, s2 = (p[sl] for p in pre)
            gu = gauges(domain, z, np.concatenate([u, v]))
            k = sl.stop - sl.start
            span = np.where(gu > 0, 1.0 / np.where(gu > 0, gu, 1.0), domain.scale)
            a = u * (s1 * span[:k])[:, None]
            b = v * (s2 * span[k:])[:, None]
            return gauges(domain, z, 0.5 * (a + b))

        gm = map_chunks(chunk, count, workers)
        margins = 1.0 - gm
        i = int(np.argmin(margins))
        worst = float(margins[i])
    verdict = "fail" if worst <= tol else "pass"
    mid = z + (0.5 * (W1[i] + W2[i]) if pre is None else _midpoint(domain, z, pre, i))
    wit = witness(mid, base=z, midpoint_gauge=gm[i])
    return CriterionReport("indicatrix", verdict, worst, wit, count, clock[0],
                           details={"tol": tol}, margins=margins)


EDGE_GAUGE = 1.0 - 1e-6


def _indicatrix_radii(U, n):
    s = U ** (0.5 / n)
    s[1::2] = EDGE_GAUGE
    return s


def _midpoint(domain, z, pre, i):
    u, v, s1, s2 = (p[i:i + 1] for p in pre)
    gu = gauges(domain, z, np.concatenate([u, v]))
    span = np.where(gu > 0, 1.0 / np.where(gu > 0, gu, 1.0), domain.scale)
    return 0.5 * (u[0] * s1[0] * span[0] + v[0] * s2[0] * span[1])
