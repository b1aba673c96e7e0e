"""Affine discs: the two-disc hull test, the explicit counterexample pair,
tangential chords, and the real midpoint-of-triangle test.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .directional import directional_distances
from .domains import BoundaryPoint, DomainSpec, complex_tangent_basis
from .points import as_cpoint, pairs, random_in_ball, random_unit_directions
from .report import CriterionReport, stopwatch, witness

DEFAULT_GRID = (33, 64, 64)
DEFAULT_LENGTHS = (0.2, 0.1, 0.05, 0.02)
CENTER_TOL = 1e-12


class DiscError(ValueError):
    pass


class ConstructionError(ValueError):
    """The counterexample discs cannot be built for these constants."""


@dataclass(frozen=True)
class Disc:
    """``{center + lam * direction : |lam| <= radius}``."""

    center: np.ndarray
    direction: np.ndarray
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=complex))
        object.__setattr__(self, "direction", np.asarray(self.direction, dtype=complex))
        if not np.any(self.direction != 0):
            raise DiscError("disc direction must be nonzero")
        if not self.radius > 0:
            raise DiscError("disc radius must be positive")
        if self.center.shape != self.direction.shape:
            raise DiscError("center and direction dimensions differ")

    def point(self, lam) -> np.ndarray:
        lam = np.asarray(lam, dtype=complex)
        return self.center + (lam * self.radius)[..., None] * self.direction

    def rim(self, count: int = 64) -> np.ndarray:
        return self.point(unit_roots(count))

    def to_dict(self) -> dict:
        return {"center": pairs(self.center), "direction": pairs(self.direction),
                "radius": float(self.radius)}

    @classmethod
    def from_dict(cls, data: dict) -> "Disc":
        unknown = set(data) - {"center", "direction", "radius"}
        if unknown:
            raise DiscError(f"unknown disc keys {sorted(unknown)}")
        return cls(as_cpoint(data["center"]), as_cpoint(data["direction"]), float(data["radius"]))


# ------------------------------------------------------------- hull test
def unit_roots(count: int) -> np.ndarray:
    """``exp(2 pi i k / count)`` with the quarter turns made exact."""
    roots = np.exp(2j * np.pi * np.arange(count) / count)
    if count % 4 == 0:
        roots[:: count // 4] = [1, 1j, -1, -1j]
    return roots


def _hull_points(d1: Disc, d2: Disc, grid, dense: bool):
    nt, n1, n2 = grid
    t = np.linspace(0.0, 1.0, nt)
    l1 = unit_roots(n1)
    l2 = unit_roots(n2)
    if dense:
        s = np.array([0.25, 0.5, 0.75, 1.0])
        l1 = (s[:, None] * l1[None, :]).ravel()
        l2 = (s[:, None] * l2[None, :]).ravel()
    a = l1[:, None] * (d1.radius * d1.direction)[None, :]
    b = l2[:, None] * (d2.radius * d2.direction)[None, :]
    return t, l1, l2, a, b


def disc_pair_hull_check(domain: DomainSpec, d1: Disc, d2: Disc, grid=DEFAULT_GRID,
                         tol: float | None = None, dense: bool = False) -> CriterionReport:
    """Sample the convex hull of two discs with a common center.

    Hull points are ``c + t*lam1*r1*X1 + (1-t)*lam2*r2*X2`` with unimodular
    ``lam`` (plus inner radii in dense mode).  Fails when some sample has
    ``rho >= -tol``; the witness is the sample with the largest rho, ties
    going to the first grid index in (t, theta1, theta2) order.
    """
    tol = 1e-9 * domain.scale if tol is None else tol
    if np.max(np.abs(d1.center - d2.center)) > CENTER_TOL * max(1.0, domain.scale):
        raise DiscError("discs must share their center")
    with stopwatch() as clock:
        rim_rho = np.maximum(domain.rho(d1.rim()).max(), domain.rho(d2.rim()).max())
        if rim_rho >= -tol:
            return CriterionReport("hull", "inconclusive", float(-rim_rho), None, 128, clock[0],
                                   details={"reason": "precondition: a disc is not inside the domain"})
        t, l1, l2, a, b = _hull_points(d1, d2, grid, dense)
        c = d1.center
        rho = np.empty((t.size, l1.size, l2.size))
        for i, ti in enumerate(t):
            pts = c + ti * a[:, None, :] + (1.0 - ti) * b[None, :, :]
            rho[i] = domain.rho(pts)
    flat = int(np.argmax(rho))
    i, j, k = np.unravel_index(flat, rho.shape)
    worst_rho = float(rho[i, j, k])
    point = c + t[i] * a[j] + (1.0 - t[i]) * b[k]
    verdict = "fail" if worst_rho >= -tol else "pass"
    wit = witness(point, rho=worst_rho, t=t[i], lambda1=l1[j], lambda2=l2[k])
    return CriterionReport("hull", verdict, -worst_rho, wit, int(rho.size), clock[0],
                           details={"tol": tol, "grid": list(grid), "dense": dense},
                           margins=-rho.ravel())


def random_centered_pairs(domain: DomainSpec, count: int, seed: int,
                          fill=(0.2, 0.95)) -> list[tuple[Disc, Disc]]:
    """Random disc pairs inside the domain sharing a random center.

    Radii are a uniform fraction (in ``fill``) of the directional distance.
    """
    rng = np.random.default_rng(seed)
    centers = []
    while len(centers) < count:
        cand = random_in_ball(rng, 4 * count, domain.n, domain.bounding_radius)
        ok = domain.rho(cand) < -1e-3 * domain.scale
        centers.extend(cand[ok][: count - len(centers)])
    centers = np.array(centers)
    dirs = random_unit_directions(rng, 2 * count, domain.n)
    frac = rng.uniform(fill[0], fill[1], 2 * count)
    dist = directional_distances(domain, np.concatenate([centers, centers]), dirs)
    radii = np.where(np.isfinite(dist), dist, domain.scale) * frac
    return [(Disc(centers[i], dirs[i], radii[i]), Disc(centers[i], dirs[count + i], radii[count + i]))
            for i in range(count)]


def hull_pairs_check(domain: DomainSpec, count: int = 100, seed: int = 0,
                     tol: float | None = None, grid=DEFAULT_GRID) -> CriterionReport:
    """Run the hull test on ``count`` random centered pairs and merge by worst margin."""
    with stopwatch() as clock:
        reports = [disc_pair_hull_check(domain, a, b, grid=grid, tol=tol)
                   for a, b in random_centered_pairs(domain, count, seed)]
    merged = merge_reports("hull", reports)
    merged.elapsed_ms = clock[0]
    return merged


def merge_reports(name: str, reports: Sequence[CriterionReport]) -> CriterionReport:
    """Worst-margin merge; ties keep the earliest report."""
    if not reports:
        return CriterionReport(name, "inconclusive", 0.0, None, 0,
                               details={"reason": "no samples"})
    worst = min(range(len(reports)), key=lambda i: (reports[i].worst_margin, i))
    verdicts = {r.verdict for r in reports}
    if "fail" in verdicts:
        verdict = "fail"
        worst = min((i for i, r in enumerate(reports) if r.verdict == "fail"),
                    key=lambda i: (reports[i].worst_margin, i))
    elif "inconclusive" in verdicts:
        verdict = "inconclusive"
    else:
        verdict = "pass"
    w = reports[worst]
    return CriterionReport(name, verdict, w.worst_margin, w.witness,
                           sum(r.samples_used for r in reports),
                           sum(r.elapsed_ms for r in reports),
                           details={"runs": len(reports), **w.details})


# ------------------------------------------------- explicit counterexample
def model_rho(c: float, z) -> np.ndarray:
    """``Re z - (Re w)^2 + c|z|^2 + c(Im w)^2`` on points ``(..., 2)``."""
    z = np.asarray(z, dtype=complex)
    zz, w = z[..., 0], z[..., 1]
    return zz.real - w.real ** 2 + c * (zz.real ** 2 + zz.imag ** 2) + c * w.imag ** 2


def discriminant(c: float, delta: float) -> float:
    """Reduced discriminant ``4 c^2 delta^2 + 4 delta - 1/c`` of the chord quadratic."""
    return 4 * c ** 2 * delta ** 2 + 4 * delta - 1 / c


def construct_counterexample_discs(c: float, delta: float) -> tuple[Disc, Disc]:
    """The two discs centred at ``(-delta, 0)`` whose rims meet at ``(0, +-delta/mu)``.

    ``D1 = {(-delta(1 - zeta), delta zeta / mu)}``,
    ``D2 = {(-delta(1 + zeta), delta zeta / mu)}``, ``|zeta| <= 1``,
    ``mu = sqrt(2 c delta)``.  The midpoint of the zeta = 1 point of D1 and
    the zeta = -1 point of D2 is the origin.
    """
    if c < 1:
        raise ConstructionError("c must be at least 1")
    if not delta > 0:
        raise ConstructionError("delta must be positive")
    if discriminant(c, delta) >= 0:
        raise ConstructionError(f"delta = {delta} too large for c = {c}: discriminant >= 0")
    mu = np.sqrt(2 * c * delta)
    center = np.array([-delta, 0.0], dtype=complex)
    return (Disc(center, np.array([delta, delta / mu], dtype=complex), 1.0),
            Disc(center.copy(), np.array([-delta, delta / mu], dtype=complex), 1.0))


def chord_quadratic(c: float, delta: float, x) -> np.ndarray:
    """``-1 + 4 c delta + 2(1 - 2 c delta) x - (1 + 1/c) x^2`` (twice rho_c/delta on the rim)."""
    x = np.asarray(x, dtype=float)
    return -1 + 4 * c * delta + 2 * (1 - 2 * c * delta) * x - (1 + 1 / c) * x ** 2


class ChordMargins(NamedTuple):
    disc_margin: float
    discriminant: float
    quadratic_max: float
    valid: bool


def chord_inequality_margin(c: float, delta: float, samples: int = 1024) -> ChordMargins:
    """Rim maximum of ``rho_c / delta`` on D1, the discriminant, and the quadratic maximum.

    Nothing is raised for bad constants; ``valid`` is False instead.
    """
    if c < 1 or not delta > 0:
        raise ConstructionError("need c >= 1 and delta > 0")
    mu = np.sqrt(2 * c * delta)
    zeta = np.exp(2j * np.pi * np.arange(samples) / samples)
    pts = np.stack([-delta * (1 - zeta), delta * zeta / mu], axis=-1)
    margin = float(np.max(model_rho(c, pts)) / delta)
    vertex = np.clip((1 - 2 * c * delta) / (1 + 1 / c), -1.0, 1.0)
    qmax = float(max(chord_quadratic(c, delta, vertex), chord_quadratic(c, delta, -1.0),
                     chord_quadratic(c, delta, 1.0)))
    disc = discriminant(c, delta)
    return ChordMargins(margin, disc, qmax, bool(margin < 0 and qmax < 0))


def chord_curve(c: float, delta: float, samples: int = 1024) -> np.ndarray:
    """Rows ``(theta, x = cos theta, rho_c/delta on the D1 rim, quadratic(x)/2)``."""
    mu = np.sqrt(2 * c * delta)
    theta = 2 * np.pi * np.arange(samples) / samples
    zeta = np.exp(1j * theta)
    pts = np.stack([-delta * (1 - zeta), delta * zeta / mu], axis=-1)
    x = np.cos(theta)
    return np.column_stack([theta, x, model_rho(c, pts) / delta, 0.5 * chord_quadratic(c, delta, x)])


# --------------------------------------------------------- tangential chord
@dataclass(frozen=True)
class ChordWitness:
    boundary_point: np.ndarray
    endpoint_a: np.ndarray
    endpoint_b: np.ndarray
    interior_margin: float
    half_length: float
    phase: float

    def to_dict(self) -> dict:
        return {"boundary_point": pairs(self.boundary_point), "endpoint_a": pairs(self.endpoint_a),
                "endpoint_b": pairs(self.endpoint_b), "interior_margin": self.interior_margin,
                "half_length": self.half_length, "phase": self.phase}


def tangential_chord_search(domain: DomainSpec, p: BoundaryPoint, lengths=None,
                            phases: int = 32, samples_per_side: int = 32) -> ChordWitness | None:
    """Look for a complex-tangent segment centred at p whose other points are inside.

    Directions are ``e^{i phi} v`` for tangent basis vectors v and
    ``phi = pi k / phases``; half-lengths are tried in the given order and
    lengths beyond the bounding radius are skipped.
    """
    return chord_scan(domain, p, lengths, phases, samples_per_side)[0]


def chord_scan(domain: DomainSpec, p: BoundaryPoint, lengths=None, phases: int = 32,
               samples_per_side: int = 32) -> tuple[ChordWitness | None, float]:
    """``(first witness or None, lowest segment maximum of rho seen)``.

    The second value is negative exactly when a witness exists; the scan
    stops at the first witness.
    """
    lengths = [s * domain.scale for s in DEFAULT_LENGTHS] if lengths is None else lengths
    basis = complex_tangent_basis(domain, p)
    k = np.arange(1, samples_per_side + 1) / samples_per_side
    ts = np.concatenate([-k[::-1], k])
    phis = np.pi * np.arange(phases) / phases
    lowest = np.inf
    for s in lengths:
        if s > domain.bounding_radius:
            continue
        for v in basis:
            dirs = np.exp(1j * phis)[:, None] * v[None, :]
            pts = p.point + s * ts[None, :, None] * dirs[:, None, :]
            top = domain.rho(pts).max(axis=1)
            lowest = min(lowest, float(top.min()))
            hit = np.nonzero(top < 0)[0]
            if hit.size:
                j = int(hit[0])
                # strictly below every sampled |rho|
                margin = float(np.nextafter(-top[j], 0.0))
                return ChordWitness(p.point, p.point - s * dirs[j], p.point + s * dirs[j],
                                    margin, float(s), float(phis[j])), lowest
    return None, lowest


# ------------------------------------------------------ real triangle test
def _segments_inside(domain, a, b, side_samples, shell):
    s = np.linspace(0.0, 1.0, side_samples)
    pts = a[:, None, :] + s[None, :, None] * (b - a)[:, None, :]
    r = domain.rho(pts)
    return np.all((r < 0) & (r > -shell), axis=1)


def midpoint_triangle_check(domain: DomainSpec, trials: int = 1000, seed: int = 0,
                            tol: float | None = None, spread: float | None = None,
                            side_samples: int = 64, max_draws: int | None = None,
                            triangles=None) -> CriterionReport:
    """Triangles (a, d, b) with [a, d] and [d, b] inside ``D n U`` must have
    the midpoint of [a, b] in D.

    The domain is read as a subset of R^{2n}; ``U = {|rho| < shell_width*scale}``.
    Apexes d are uniform in ``D n U``; a and b are uniform in the ball of
    radius ``spread`` (default half the scale) around d.  If no admissible
    triangle turns up within ``max_draws`` candidates the verdict is
    inconclusive.
    """
    tol = 1e-9 * domain.scale if tol is None else tol
    shell = domain.shell_width * domain.scale
    spread = 0.5 * domain.scale if spread is None else spread
    max_draws = 200 * trials if max_draws is None else max_draws
    n = domain.n
    with stopwatch() as clock:
        if triangles is not None:
            tri = np.array([[as_cpoint(v, n) for v in t] for t in triangles])
            A, D, B = tri[:, 0], tri[:, 1], tri[:, 2]
            draws = len(tri)
        else:
            rng = np.random.default_rng(seed)
            A, D, B = [], [], []
            draws = got = 0
            while got < trials and draws < max_draws:
                batch = 4096
                draws += batch
                d = random_in_ball(rng, batch, n, domain.bounding_radius)
                a = d + random_in_ball(rng, batch, n, spread)
                b = d + random_in_ball(rng, batch, n, spread)
                rd = domain.rho(d)
                ok = (rd < 0) & (rd > -shell)
                ok[ok] = _segments_inside(domain, a[ok], d[ok], side_samples, shell)
                ok[ok] = _segments_inside(domain, d[ok], b[ok], side_samples, shell)
                idx = np.nonzero(ok)[0][: trials - got]
                A.append(a[idx]), D.append(d[idx]), B.append(b[idx])
                got += idx.size
            A, D, B = (np.concatenate(x) if x else np.empty((0, n), complex) for x in (A, D, B))
        if len(A) == 0:
            return CriterionReport("triangle", "inconclusive", 0.0, None, 0, clock[0],
                                   details={"reason": "no admissible triangle", "draws": draws})
        mid = 0.5 * (A + B)
        margins = -domain.rho(mid)
        i = int(np.argmin(margins))
    worst = float(margins[i])
    verdict = "fail" if worst <= tol else "pass"
    wit = witness(mid[i], a=A[i], d=D[i], b=B[i], rho=-worst)
    return CriterionReport("triangle", verdict, worst, wit, int(len(A)), clock[0],
                           details={"tol": tol, "draws": int(draws), "shell": shell},
                           margins=margins)
