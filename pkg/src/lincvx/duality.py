"""Polar duality for finite unions of discs with a common center.

Hyperplanes are written ``{a . z = 1}`` with the bilinear pairing, so the
polar of ``K = union of discs {c + lam r_k X_k}`` (after translating c to
0) is ``{a : max_k r_k |a . X_k| < 1}``.  The double polar is the unit ball
of the norm ``min { sum |mu_k| : sum mu_k r_k X_k = z - c }``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize

from .points import as_cpoint, bilinear, pairs
from .report import CriterionReport, stopwatch, witness

T_GRID = 1025
CONDITION_LIMIT = 1e8
BOUNDARY_BAND = 1e-6
SPAN_TOL = 1e-9


class DualityError(ValueError):
    pass


@dataclass(frozen=True)
class CenteredDiscSystem:
    center: np.ndarray
    directions: tuple
    radii: tuple

    def __post_init__(self):
        center = np.asarray(self.center, dtype=complex)
        dirs = tuple(np.asarray(d, dtype=complex) for d in self.directions)
        radii = tuple(float(r) for r in self.radii)
        if not dirs:
            raise DualityError("a disc system needs at least one disc")
        if len(dirs) != len(radii):
            raise DualityError("directions and radii differ in length")
        for d in dirs:
            if d.shape != center.shape or not np.any(d != 0):
                raise DualityError("directions must be nonzero and match the center")
        if any(not r > 0 for r in radii):
            raise DualityError("radii must be positive")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "radii", radii)

    @property
    def generators(self) -> np.ndarray:
        """Columns ``r_k X_k`` as an ``(n, m)`` matrix."""
        return np.stack([r * d for r, d in zip(self.radii, self.directions)], axis=-1)

    def transformed(self, L) -> "CenteredDiscSystem":
        L = np.asarray(L, dtype=complex)
        return CenteredDiscSystem(L @ self.center, tuple(L @ d for d in self.directions), self.radii)

    def to_dict(self) -> dict:
        return {"center": pairs(self.center),
                "discs": [{"direction": pairs(d), "radius": r}
                          for d, r in zip(self.directions, self.radii)]}

    @classmethod
    def from_dict(cls, data: dict) -> "CenteredDiscSystem":
        unknown = set(data) - {"center", "discs"}
        if unknown:
            raise DualityError(f"unknown system keys {sorted(unknown)}")
        discs = data["discs"]
        return cls(as_cpoint(data["center"]), tuple(as_cpoint(d["direction"]) for d in discs),
                   tuple(float(d["radius"]) for d in discs))


def canonical_system() -> CenteredDiscSystem:
    """``(closed unit disc x {0}) u ({0} x closed unit disc)``."""
    return CenteredDiscSystem(np.zeros(2), (np.array([1, 0]), np.array([0, 1])), (1.0, 1.0))


def polar_gauge(system: CenteredDiscSystem, a) -> float:
    """``max_k r_k |a . X_k|``; the polar set is where this is below 1."""
    a = np.asarray(a, dtype=complex)
    return float(np.max(np.abs(bilinear(a[None, :], system.generators.T))))


class _Line(NamedTuple):
    unit: np.ndarray
    reach: float  # largest generator length along the line


def _common_line(system) -> _Line | None:
    """The complex line carrying every generator, if there is one."""
    Y = system.generators
    s = np.linalg.svd(Y, compute_uv=False)
    if len(s) > 1 and s[1] > s[0] / CONDITION_LIMIT:
        return None
    k = int(np.argmax(np.linalg.norm(Y, axis=0)))
    unit = Y[:, k] / np.linalg.norm(Y[:, k])
    return _Line(unit, float(np.max(np.linalg.norm(Y, axis=0))))


def _line_coordinate(line: _Line, u: np.ndarray):
    """``(s, on_line)`` for the decomposition ``u = s * unit + off``."""
    s = np.sum(np.conj(line.unit) * u, axis=-1)
    off = np.linalg.norm(u - s[..., None] * line.unit, axis=-1)
    scale = np.maximum(1.0, np.linalg.norm(u, axis=-1))
    return s, off <= SPAN_TOL * scale


def double_polar_values(system: CenteredDiscSystem, z) -> np.ndarray:
    """Vectorized sup of ``|a . (z - c)|`` over the closed polar set."""
    u = np.asarray(z, dtype=complex) - system.center
    u2 = u.reshape(-1, u.shape[-1])
    Y = system.generators
    line = _common_line(system)
    if line is not None:
        s, on = _line_coordinate(line, u2)
        out = np.where(on, np.abs(s) / line.reach, np.inf)
    elif Y.shape == (2, 2):
        coef = np.linalg.solve(Y, u2.T).T
        out = np.sum(np.abs(coef), axis=-1)
    else:
        out = np.array([_min_l1(Y, v) for v in u2])
    return out.reshape(u.shape[:-1])


def _min_l1(Y: np.ndarray, u: np.ndarray) -> float:
    """``min sum |mu_k|`` subject to ``Y mu = u`` (more generators than dimensions)."""
    mu0 = np.linalg.lstsq(Y, u, rcond=None)[0]
    if np.linalg.norm(Y @ mu0 - u) > SPAN_TOL * max(1.0, np.linalg.norm(u)):
        return np.inf
    _, s, vh = np.linalg.svd(Y)
    rank = int(np.sum(s > s[0] / CONDITION_LIMIT))
    N = vh[rank:].conj().T
    if N.shape[1] == 0:
        return float(np.sum(np.abs(mu0)))
    k = N.shape[1]

    def cost(x):
        xi = x[:k] + 1j * x[k:]
        return float(np.sum(np.abs(mu0 + N @ xi)))

    best = minimize(cost, np.zeros(2 * k), method="Powell",
                    options={"xtol": 1e-12, "ftol": 1e-14, "maxfev": 20000})
    return float(min(best.fun, cost(np.zeros(2 * k))))


def double_polar_membership(system: CenteredDiscSystem, z) -> tuple[bool, float]:
    value = float(double_polar_values(system, as_cpoint(z, len(system.center))))
    return value <= 1.0, value


def convex_hull_values(system: CenteredDiscSystem, z) -> np.ndarray:
    """Membership flags for the convex hull of a one- or two-disc system.

    Independent directions: coordinates ``(u1, u2)`` of ``z - c`` in the
    generator basis, then ``t`` scanned over 1025 grid values plus the
    exact candidate ``t = |u1|``, accepting when ``|u1| <= t`` and
    ``|u2| <= 1 - t``.  Dependent directions reduce to one complex line,
    where the hull of concentric discs is the largest of them.
    """
    if len(system.radii) > 2:
        raise DualityError("convex hull membership is implemented for at most two discs")
    u = np.asarray(z, dtype=complex) - system.center
    u2 = u.reshape(-1, u.shape[-1])
    Y = system.generators
    line = _common_line(system)
    if line is not None or np.linalg.cond(Y) > CONDITION_LIMIT:
        line = line or _Line(Y[:, 0] / np.linalg.norm(Y[:, 0]), float(np.max(np.linalg.norm(Y, axis=0))))
        s, on = _line_coordinate(line, u2)
        return (on & (np.abs(s) <= line.reach * (1 + 1e-12))).reshape(u.shape[:-1])
    coef = np.linalg.solve(Y, u2.T).T
    a1, a2 = np.abs(coef[:, 0]), np.abs(coef[:, 1])
    slack = 1e-12
    t = np.linspace(0.0, 1.0, T_GRID)
    on_grid = np.any((a1[:, None] <= t[None, :] + slack) & (a2[:, None] <= 1 - t[None, :] + slack), axis=1)
    exact = (a1 <= 1 + slack) & (a2 <= 1 - np.minimum(a1, 1.0) + slack)
    return (on_grid | exact).reshape(u.shape[:-1])


def convex_hull_membership(system: CenteredDiscSystem, z) -> bool:
    return bool(convex_hull_values(system, as_cpoint(z, len(system.center))))


def hulls_coincide_check(system: CenteredDiscSystem, samples: int = 10000, seed: int = 0,
                         band: float = BOUNDARY_BAND, box: float = 1.2) -> CriterionReport:
    """Compare convex-hull and double-polar membership on random points.

    Points are uniform in a cube of half-width ``box`` times the largest
    generator length around the center; points whose double-polar value is
    within ``band`` of 1 are skipped.  The per-sample margin is ``|v - 1|``
    when the two tests agree and ``-|v - 1|`` when they do not.
    """
    n = len(system.center)
    rng = np.random.default_rng(seed)
    half = box * float(np.max(np.linalg.norm(system.generators, axis=0)))
    with stopwatch() as clock:
        x = rng.uniform(-half, half, size=(samples, 2 * n))
        z = system.center + x[:, 0::2] + 1j * x[:, 1::2]
        val = double_polar_values(system, z)
        hull = convex_hull_values(system, z)
        keep = ~(np.abs(val - 1) < band)
        agree = hull == (val <= 1)
        dist = np.where(np.isfinite(val), np.abs(val - 1), half)
        margins = np.where(agree, dist, -dist)[keep]
    if margins.size == 0:
        return CriterionReport("bipolar", "inconclusive", 0.0, None, 0, clock[0],
                               details={"reason": "every sample fell in the boundary band"})
    idx = np.nonzero(keep)[0]
    i = int(np.argmin(margins))
    j = int(idx[i])
    fail = not agree[j]
    wit = witness(z[j], double_polar=float(val[j]) if np.isfinite(val[j]) else None,
                  in_hull=bool(hull[j]))
    return CriterionReport("bipolar", "fail" if fail else "pass", float(margins[i]),
                           wit, int(keep.sum()), clock[0],
                           details={"band": band, "skipped": int(samples - keep.sum()),
                                    "disagreements": int(np.sum(~agree[keep]))},
                           margins=margins)


def random_transformed_systems(count: int, seed: int,
                               base: CenteredDiscSystem | None = None) -> list[CenteredDiscSystem]:
    """Images of ``base`` (canonical by default) under random invertible complex maps."""
    base = canonical_system() if base is None else base
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        L = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        if np.linalg.cond(L) < 1e3:
            out.append(base.transformed(L))
    return out


def canonical_identity_error(samples: int = 10000, seed: int = 0) -> float:
    """``max |sup - (|z1| + |z2|)|`` over random points, canonical system."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.2, 1.2, size=(samples, 4))
    z = x[:, 0::2] + 1j * x[:, 1::2]
    return float(np.max(np.abs(double_polar_values(canonical_system(), z) - np.abs(z).sum(axis=1))))

