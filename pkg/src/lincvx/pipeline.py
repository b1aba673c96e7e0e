"""Criterion suites and the curvature-guided counterexample pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize

from . import curvature as cv
from .directional import gauge_subadditivity_check, indicatrix_midpoint_check
from .discs import (ConstructionError, Disc, chord_inequality_margin, chord_scan,
                    construct_counterexample_discs, discriminant, disc_pair_hull_check,
                    hull_pairs_check, merge_reports, midpoint_triangle_check)
from .domains import (CORNER_GAP, BoundaryPoint, DegenerateBoundaryError, DomainSpec,
                      SamplingError, boundary_point, boundary_sample, first_exit)
from .duality import canonical_system, hulls_coincide_check, random_transformed_systems
from .points import random_in_ball, random_unit_directions, to_reals
from .report import (EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_PASS, CriterionReport, stopwatch,
                     to_jsonable, witness)

# Order fixes the derived seeds (seed + index), so it must not change.
CRITERIA = ("gauge", "hull", "defect", "chord", "hor16", "hor22", "hor26", "bipolar",
            "indicatrix", "triangle")
DEFAULT_CRITERIA = CRITERIA[:8]
DEFECT_BAND = 1e-4
CHORD_POINTS = 16
BIPOLAR_SYSTEMS = 10
DELTA_HALVINGS = 40
POLISH_ITERS = 400

_NUMERICAL = (ArithmeticError, SamplingError, cv.CurvatureError, cv.NormalizationError,
              np.linalg.LinAlgError)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SuiteConfig:
    domain: DomainSpec
    criteria: tuple = DEFAULT_CRITERIA
    samples: int = 1000
    seed: int = 0
    tol: float = 1e-9
    workers: int = 1

    def __post_init__(self):
        crit = tuple(self.criteria)
        if not crit:
            raise ConfigError("criteria must be nonempty")
        unknown = [c for c in crit if c not in CRITERIA]
        if unknown:
            raise ConfigError(f"unknown criteria {unknown}; choose from {list(CRITERIA)}")
        if self.samples <= 0 or self.workers <= 0:
            raise ConfigError("samples and workers must be positive")
        if not self.tol > 0:
            raise ConfigError("tol must be positive")
        object.__setattr__(self, "criteria", crit)

    def to_dict(self) -> dict:
        # worker count is an execution detail and is kept out of reports
        return {"domain": self.domain.to_dict(), "criteria": list(self.criteria),
                "samples": self.samples, "seed": self.seed, "tol": self.tol}


def derived_seed(seed: int, criterion: str) -> int:
    return seed + CRITERIA.index(criterion)


# ------------------------------------------------------------- sampling
def interior_samples(domain: DomainSpec, count: int, rng: np.random.Generator,
                     shell: bool = False) -> np.ndarray:
    """Uniform points of D (or of D n U when ``shell``) by rejection from the bounding ball."""
    width = domain.shell_width * domain.scale
    out, total, rounds = [], 0, 0
    while total < count:
        rounds += 1
        if rounds > 200:
            raise SamplingError("rejection sampling starved")
        cand = random_in_ball(rng, max(4 * count, 256), domain.n, domain.bounding_radius)
        r = domain.rho(cand)
        ok = (r < 0) & ((r > -width) if shell else True)
        got = cand[ok][: count - total]
        out.append(got)
        total += len(got)
    return np.concatenate(out)


def defect_scan(domain: DomainSpec, count: int, seed: int):
    """Boundary samples with their tangential defects, worst first."""
    pts = boundary_sample(domain, count, seed)
    P = np.array([b.point for b in pts])
    d = cv.tangential_defects(domain, P, check=False)
    order = np.argsort(d, kind="stable")
    return [pts[i] for i in order], d[order]


def polish_defect(domain: DomainSpec, p: BoundaryPoint, defect: float):
    """Nelder-Mead on the ray direction from the anchor, starting at p."""
    a = domain.anchor_point
    gap = CORNER_GAP * domain.scale

    def locate(x):
        d = x[0::2] + 1j * x[1::2]
        t = first_exit(domain, a, d[None, :])[0]
        return a + t * d if np.isfinite(t) else None

    def cost(x):
        q = locate(x)
        if q is None or domain.corner_gap(q) <= gap:
            return np.inf
        try:
            return float(cv.tangential_defects(domain, q[None, :], check=False)[0])
        except _NUMERICAL:
            return np.inf

    x0 = to_reals(p.point - a)
    res = minimize(cost, x0, method="Nelder-Mead",
                   options={"maxiter": POLISH_ITERS, "xatol": 1e-12, "fatol": 1e-14})
    if np.isfinite(res.fun) and res.fun < defect:
        q = locate(res.x)
        try:
            return boundary_point(domain, q), float(res.fun)
        except DegenerateBoundaryError:
            pass
    return p, defect


# ------------------------------------------------------ the pipeline
@dataclass
class PipelineResult:
    status: str  # violation | no_violation | inconclusive
    reports: list
    chain: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return {"violation": EXIT_FAIL, "no_violation": EXIT_PASS}.get(self.status, EXIT_INCONCLUSIVE)

    def document(self, config: dict | None = None) -> dict:
        from .report import report_document
        doc = report_document(self.reports, config)
        doc["status"] = self.status
        doc["chain"] = to_jsonable(self.chain)
        return doc


def map_disc(frame: cv.NormalizationFrame, disc: Disc) -> Disc:
    """Image of a frame-coordinate disc in the original coordinates."""
    return Disc(frame.apply(disc.center), frame.matrix @ disc.direction, disc.radius)


def _delta_ladder(domain, frame, tol):
    """Largest delta = 0.1/c * 2^-k giving valid discs inside B(0, r) and inside D."""
    delta = 0.1 / frame.c
    for _ in range(DELTA_HALVINGS):
        if discriminant(frame.c, delta) < 0:
            d1, d2 = construct_counterexample_discs(frame.c, delta)
            rims = np.concatenate([d1.rim(), d2.rim()])
            inside_ball = np.max(np.linalg.norm(rims, axis=-1)) <= frame.r
            if inside_ball and chord_inequality_margin(frame.c, delta).valid:
                m1, m2 = map_disc(frame, d1), map_disc(frame, d2)
                img = np.concatenate([m1.rim(), m2.rim()])
                if np.max(domain.rho(img)) < -tol:
                    return delta, (d1, d2), (m1, m2)
        delta /= 2
    raise ConstructionError("no admissible delta found")


def counterexample_pipeline(domain: DomainSpec, samples: int = 2000, seed: int = 0,
                            tol: float | None = None) -> PipelineResult:
    """Negative defect -> normalization frame -> counterexample discs -> hull failure.

    The defect scan classifies the worst (polished) boundary point: below
    ``-1e-4`` starts the chain, within ``1e-4`` of zero is inconclusive,
    above is "no violation found at this sampling depth".
    """
    tol = 1e-9 * domain.scale if tol is None else tol
    if domain.n != 2:
        rep = CriterionReport("defect", "inconclusive", 0.0, details={"reason": "n != 2"})
        return PipelineResult("inconclusive", [rep], {"reason": "curvature needs n = 2"})
    with stopwatch() as clock:
        pts, defects = defect_scan(domain, samples, seed)
        p, d = polish_defect(domain, pts[0], float(defects[0]))
    band = DEFECT_BAND / domain.scale
    chain: dict = {"boundary_point": p.point, "defect": d, "scanned": samples}
    verdict = "fail" if d < -band else "inconclusive" if d <= band else "pass"
    defect_rep = CriterionReport("defect", verdict, d, witness(p.point, defect=d), samples,
                                 clock[0], details={"band": band})
    if verdict == "pass":
        chain["message"] = "no violation found at this sampling depth"
        return PipelineResult("no_violation", [defect_rep], chain)
    if verdict == "inconclusive":
        chain["message"] = "worst defect lies within the threshold band"
        return PipelineResult("inconclusive", [defect_rep], chain)
    try:
        frame = cv.lemma_normalization(domain, p, seed=seed)
        chain["frame"] = frame.to_dict()
        delta, model, mapped = _delta_ladder(domain, frame, tol)
    except (ConstructionError, *_NUMERICAL) as exc:
        chain["message"] = f"chain stopped: {exc}"
        return PipelineResult("inconclusive", [defect_rep], chain)
    chain["delta"] = delta
    chain["discriminant"] = discriminant(frame.c, delta)
    chain["model_discs"] = [m.to_dict() for m in model]
    chain["discs"] = [m.to_dict() for m in mapped]
    hull = disc_pair_hull_check(domain, mapped[0], mapped[1], tol=tol)
    chain["hull_witness"] = hull.witness
    status = "violation" if hull.verdict == "fail" else "inconclusive"
    return PipelineResult(status, [defect_rep, hull], chain)


# --------------------------------------------------------- suite runner
def _inconclusive(name, reason):
    return CriterionReport(name, "inconclusive", 0.0, details={"reason": reason})


def _h_report(name, margins, points, tol, extra):
    i = int(np.argmin(margins))
    worst = float(margins[i])
    verdict = "fail" if worst < -tol else "pass"
    return CriterionReport(name, verdict, worst, witness(points[i], **extra(i)), len(margins),
                           details={"tol": tol}, margins=margins)


def _crit_gauge(domain, cfg, seed, tol):
    return gauge_subadditivity_check(domain, domain.anchor_point, cfg.samples, seed, tol,
                                     workers=cfg.workers)


def _crit_indicatrix(domain, cfg, seed, tol):
    return indicatrix_midpoint_check(domain, domain.anchor_point, cfg.samples, seed, tol,
                                     workers=cfg.workers)


def _crit_hull(domain, cfg, seed, tol):
    reports = [hull_pairs_check(domain, max(1, cfg.samples // 10), seed, tol)]
    if domain.n == 2:
        chain = counterexample_pipeline(domain, min(cfg.samples, 2000), seed, tol)
        if chain.status == "violation":
            reports.append(chain.reports[-1])
    return merge_reports("hull", reports)


def _crit_defect(domain, cfg, seed, tol):
    if domain.n != 2:
        return _inconclusive("defect", "curvature needs n = 2")
    pts, d = defect_scan(domain, cfg.samples, seed)
    band = DEFECT_BAND / domain.scale
    worst = float(d[0])
    verdict = "fail" if worst < -band else "inconclusive" if worst <= band else "pass"
    return CriterionReport("defect", verdict, worst, witness(pts[0].point, defect=worst),
                           len(d), details={"band": band}, margins=d)


def _crit_chord(domain, cfg, seed, tol):
    if domain.n != 2:
        return _inconclusive("chord", "tangent search uses the n = 2 defect ordering")
    pts, _ = defect_scan(domain, cfg.samples, seed)
    lows = []
    for p in pts[:CHORD_POINTS]:
        wit, low = chord_scan(domain, p)
        lows.append(low)
        if wit is not None:
            return CriterionReport("chord", "fail", low,
                                   witness(wit.boundary_point, **wit.to_dict()), len(lows),
                                   margins=np.array(lows))
    i = int(np.argmin(lows))
    return CriterionReport("chord", "pass", float(lows[i]), witness(pts[i].point), len(lows),
                           margins=np.array(lows))


def _unique_only(field, z):
    _, _, uniq = field.eval_many(z)
    return z[uniq]


def _crit_hor16(domain, cfg, seed, tol):
    rng = np.random.default_rng(seed)
    field = cv.SquaredDistanceField(domain, seed)
    z = _unique_only(field, interior_samples(domain, cfg.samples, rng))
    w = interior_samples(domain, len(z), rng)
    m = cv.hor16_margins(field, z, w)
    return _h_report("hor16", m, z, tol, lambda i: {"w": w[i]})


def _crit_hor22(domain, cfg, seed, tol):
    rng = np.random.default_rng(seed)
    field = cv.SquaredDistanceField(domain, seed)
    x = _unique_only(field, interior_samples(domain, cfg.samples, rng, shell=True))
    y = interior_samples(domain, len(x), rng, shell=True)
    m = cv.hor22_margins(field, x, y)
    return _h_report("hor22", m, x, tol, lambda i: {"y": y[i]})


def _crit_hor26(domain, cfg, seed, tol):
    rng = np.random.default_rng(seed)
    field = cv.SquaredDistanceField(domain, seed)
    z = _unique_only(field, interior_samples(domain, cfg.samples, rng, shell=True))
    v = to_reals(random_unit_directions(rng, len(z), domain.n))
    m = cv.hor26_margins(field, z, v)
    return _h_report("hor26", m, z, tol, lambda i: {"v": v[i]})


def _crit_bipolar(domain, cfg, seed, tol):
    systems = [canonical_system()] + random_transformed_systems(BIPOLAR_SYSTEMS, seed)
    reps = [hulls_coincide_check(s, cfg.samples, seed + k) for k, s in enumerate(systems)]
    return merge_reports("bipolar", reps)


def _crit_triangle(domain, cfg, seed, tol):
    return midpoint_triangle_check(domain, cfg.samples, seed, tol)


_RUNNERS: dict[str, Callable] = {
    "gauge": _crit_gauge, "hull": _crit_hull, "defect": _crit_defect, "chord": _crit_chord,
    "hor16": _crit_hor16, "hor22": _crit_hor22, "hor26": _crit_hor26, "bipolar": _crit_bipolar,
    "indicatrix": _crit_indicatrix, "triangle": _crit_triangle,
}


def run_criterion(name: str, cfg: SuiteConfig) -> CriterionReport:
    domain = cfg.domain
    tol = cfg.tol * domain.scale
    with stopwatch() as clock:
        try:
            rep = _RUNNERS[name](domain, cfg, derived_seed(cfg.seed, name), tol)
        except _NUMERICAL as exc:
            rep = _inconclusive(name, f"numerical degeneracy: {exc}")
    rep.name = name
    rep.elapsed_ms = clock[0]
    return rep


def run_suite(cfg: SuiteConfig) -> list[CriterionReport]:
    """Run the configured criteria in the order given."""
    return [run_criterion(name, cfg) for name in cfg.criteria]
