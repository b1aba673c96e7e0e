"""Second-order boundary analysis and the squared boundary distance.

Slice coefficients: along a complex tangent direction v at a boundary point
p, the normalized defining function behaves like

    rho(p + w v) / |grad rho(p)| = Re(a22 w^2) + b22 |w|^2 + O(|w|^3),

and ``b22 - |a22|`` (the tangential defect) is the liminf of rho over the
complex tangent plane relative to squared distance.  A negative defect
rules out linear convexity near p.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.stats import qmc

from .discs import model_rho
from .domains import (BoundaryPoint, DegenerateBoundaryError, DomainSpec, boundary_point,
                      boundary_sample, tangent_direction)
from .points import as_cpoint, bilinear, from_reals, random_unit_directions, to_reals

PHASES = 8
TANGENCY_TOL = 1e-8
EXTRAPOLATION_TOL = 1e-3
FIT_POINTS = 32768
SAFETY = 0.1
MAX_HALVINGS = 8
CONTAINMENT_TOL = 1e-8
H_SEEDS = 64
H_STARTS = 4
NEWTON_ITERS = 40


class CurvatureError(ValueError):
    pass


class NormalizationError(ValueError):
    pass


class NonUniqueProjectionError(ValueError):
    pass


class BoundaryDistanceError(ZeroDivisionError):
    """h vanishes where a strictly positive value is needed."""


# ------------------------------------------------------------ slice data
@dataclass(frozen=True)
class SliceCoefficients:
    a22: complex
    b22: float
    defect: float
    normalization: float

    def __post_init__(self):
        if self.defect != self.b22 - abs(self.a22):
            raise ValueError("defect must equal b22 - |a22|")

    @classmethod
    def build(cls, a22: complex, b22: float, normalization: float) -> "SliceCoefficients":
        a22, b22 = complex(a22), float(b22)
        return cls(a22, b22, b22 - abs(a22), float(normalization))


def _fourier(domain, P, V, eps, grad_norm, rho_p):
    """a22 and b22 from 8 phases at radius ``eps``; batched over P, V."""
    theta = 2 * np.pi * np.arange(PHASES) / PHASES
    ph = np.exp(1j * theta)
    pts = P[:, None, :] + eps * ph[None, :, None] * V[:, None, :]
    f = domain.rho(pts) / grad_norm[:, None]
    a = 2.0 * np.mean(f * np.exp(-2j * theta)[None, :], axis=1) / eps ** 2
    b = (np.mean(f, axis=1) - rho_p) / eps ** 2
    return a, b


def slice_coefficients(domain: DomainSpec, points, directions, step: float | None = None,
                       check: bool = True):
    """Vectorized slice extraction: arrays ``(a22, b22, |grad rho|)``.

    With ``check`` set, raises if a direction is not complex tangent or the
    two radii disagree by more than 1e-3 before extrapolation.
    """
    P = as_cpoint(points, domain.n).reshape(-1, domain.n)
    V = np.broadcast_to(np.asarray(directions, dtype=complex), P.shape)
    V = V / np.linalg.norm(V, axis=-1, keepdims=True)
    step = 1e-3 * domain.scale if step is None else step
    g = domain.gradient(P)
    gn = np.linalg.norm(g, axis=-1)
    if np.any(gn == 0):
        raise DegenerateBoundaryError("vanishing gradient at slice point")
    if check:
        hol = domain.holomorphic_gradient(P)
        resid = np.abs(np.sum(hol * V, axis=-1)) / np.linalg.norm(hol, axis=-1)
        if np.any(resid > TANGENCY_TOL):
            raise CurvatureError(f"direction not complex tangent (residual {resid.max():.3g})")
    rho_p = domain.rho(P) / gn
    a1, b1 = _fourier(domain, P, V, step, gn, rho_p)
    a2, b2 = _fourier(domain, P, V, step / 2, gn, rho_p)
    if check:
        gap = np.maximum(np.abs(a1 - a2), np.abs(b1 - b2))
        if np.any(gap > EXTRAPOLATION_TOL):
            raise CurvatureError(f"step too large: radii disagree by {gap.max():.3g}")
    return (4 * a2 - a1) / 3, (4 * b2 - b1) / 3, gn


def slice_second_order(domain: DomainSpec, p: BoundaryPoint, w_dir=None,
                       step: float | None = None) -> SliceCoefficients:
    """a22, b22 along ``w_dir`` (default: the complex tangent for n = 2)."""
    if w_dir is None:
        w_dir = tangent_direction(domain, p.point)
    a, b, gn = slice_coefficients(domain, p.point, as_cpoint(w_dir, domain.n), step)
    return SliceCoefficients.build(a[0], b[0], gn[0])


def tangential_defect(domain: DomainSpec, p: BoundaryPoint, step: float | None = None) -> float:
    """``b22 - |a22|`` for the complex tangent direction at p (n = 2)."""
    _require_c2(domain)
    return slice_second_order(domain, p, step=step).defect


def tangential_defects(domain: DomainSpec, points, step: float | None = None,
                       check: bool = True) -> np.ndarray:
    """Vectorized tangential defect over boundary points ``(m, 2)``."""
    _require_c2(domain)
    P = as_cpoint(points, domain.n).reshape(-1, domain.n)
    a, b, _ = slice_coefficients(domain, P, tangent_direction(domain, P), step, check)
    return b - np.abs(a)


def _require_c2(domain):
    if domain.n != 2:
        raise CurvatureError("curvature analysis is implemented for n = 2")


# -------------------------------------------------------- normalization
@dataclass(frozen=True)
class NormalizationFrame:
    """``Phi(z, w) = origin + z * normal + w * tangent`` with constants (ell, c, r).

    ``tangent`` already includes the phase rotation and the 1/sqrt(ell/3)
    scaling, so in frame coordinates the normalized defining function is
    ``Re z + O(|q|^2)`` with a real, nonpositive w^2 coefficient.
    """

    origin: np.ndarray
    normal: np.ndarray
    tangent: np.ndarray
    grad_norm: float
    ell: float
    c: float
    r: float
    a22: complex
    details: dict = field(default_factory=dict, compare=False)

    @property
    def matrix(self) -> np.ndarray:
        return np.stack([self.normal, self.tangent], axis=-1)

    def apply(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=complex)
        return self.origin + q[..., :1] * self.normal + q[..., 1:2] * self.tangent

    def inverse(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        return np.linalg.solve(self.matrix, (x - self.origin)[..., None])[..., 0]

    def pushed_rho(self, domain: DomainSpec, q) -> np.ndarray:
        return domain.rho(self.apply(q)) / self.grad_norm

    def to_dict(self) -> dict:
        from .report import to_jsonable
        return to_jsonable({"origin": self.origin, "normal": self.normal,
                            "tangent": self.tangent, "ell": self.ell, "c": self.c,
                            "r": self.r, "a22": self.a22, **self.details})


def ball_points(count: int, r: float, seed: int) -> np.ndarray:
    """Scrambled Sobol points of the cube kept inside the ball of radius r in C^2."""
    sob = qmc.Sobol(d=4, scramble=True, seed=seed)
    x = (2 * sob.random(count) - 1) * r
    x = x[np.sum(x * x, axis=1) <= r * r]
    return from_reals(x)


def lemma_normalization(domain: DomainSpec, p: BoundaryPoint, seed: int = 0,
                        r0: float | None = None) -> NormalizationFrame:
    """Affine frame at p carrying a model domain E(c) inside the pushed domain.

    In frame coordinates the normalized defining function is bounded above
    by ``rho_c = Re z - (Re w)^2 + c|z|^2 + c(Im w)^2`` on the ball of
    radius r.  c is fitted as ``max(1, sup ratio) + 0.1`` over Sobol points
    and the bound is then verified on an independent Sobol set; on failure
    r is halved (at most 8 times).
    """
    _require_c2(domain)
    v = tangent_direction(domain, p.point)
    s = slice_second_order(domain, p, v)
    if s.defect >= 0:
        raise NormalizationError(f"defect {s.defect:.6g} >= 0: nothing to normalize")
    ell = abs(s.a22) - s.b22
    psi = 0.5 * (np.pi - np.angle(s.a22))
    g = domain.gradient(p.point)
    G = g[0::2] + 1j * g[1::2]
    normal = G / np.linalg.norm(g)
    tangent = np.exp(1j * psi) * v / np.sqrt(ell / 3.0)
    # pushed a22 in w coordinates: a22 * e^{2i psi} * 3/ell = -3|a22|/ell
    a_push = s.a22 * np.exp(2j * psi) * 3.0 / ell
    r = 0.2 * domain.scale if r0 is None else r0
    for halving in range(MAX_HALVINGS + 1):
        frame = NormalizationFrame(p.point.copy(), normal, tangent, s.normalization, ell,
                                   1.0, r, complex(a_push))
        q = ball_points(FIT_POINTS, r, seed)
        rt = frame.pushed_rho(domain, q)
        num = rt - q[:, 0].real + q[:, 1].real ** 2
        den = np.abs(q[:, 0]) ** 2 + q[:, 1].imag ** 2
        ok = den > 1e-12 * r * r
        ratio = np.max(num[ok] / den[ok]) if np.any(ok) else -np.inf
        c = float(max(1.0, ratio) + SAFETY)
        qc = ball_points(FIT_POINTS, r, seed + 1)
        excess = float(np.max(frame.pushed_rho(domain, qc) - model_rho(c, qc)))
        if np.isfinite(c) and excess <= CONTAINMENT_TOL:
            return NormalizationFrame(p.point.copy(), normal, tangent, s.normalization, ell,
                                      c, r, complex(a_push),
                                      {"halvings": halving, "containment_excess": excess,
                                       "defect": s.defect})
        r /= 2
    raise NormalizationError("containment check failed after 8 halvings of r")


# ------------------------------------------------- squared distance field
class HValue(NamedTuple):
    h: float
    nearest: np.ndarray
    unique: bool


class SquaredDistanceField:
    """``h(z) = inf |z - w|^2`` over the boundary, with nearest points.

    Nearest points come from Newton's method on the Lagrange system
    ``w - z + lam grad rho(w) = 0, rho(w) = 0``, started from the four
    closest of 64 seeded boundary samples.  Results are cached per point.
    """

    def __init__(self, domain: DomainSpec, seed: int = 0, seeds: int = H_SEEDS):
        self.domain = domain
        pts = boundary_sample(domain, seeds, seed)
        self.seeds = np.array([to_reals(b.point) for b in pts])
        self._cache: dict[bytes, HValue] = {}

    def eval_many(self, z) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Batched ``(h, nearest, unique)`` for points of shape ``(m, n)``."""
        z = as_cpoint(z, self.domain.n).reshape(-1, self.domain.n)
        x = to_reals(z)
        m, d = x.shape
        dist = np.sum((x[:, None, :] - self.seeds[None, :, :]) ** 2, axis=-1)
        k = min(H_STARTS, len(self.seeds))
        start = np.argsort(dist, axis=1, kind="stable")[:, :k]
        y = self.seeds[start].reshape(m * k, d)
        xx = np.repeat(x, k, axis=0)
        y, conv = _newton_project(self.domain, xx, y)
        y = y.reshape(m, k, d)
        conv = conv.reshape(m, k)
        hh = np.sum((x[:, None, :] - y) ** 2, axis=-1)
        hh = np.where(conv, hh, np.inf)
        best = np.argmin(hh, axis=1)
        rows = np.arange(m)
        h = hh[rows, best]
        near = y[rows, best]
        # rough fallback when no start converged (e.g. a seam)
        bad = ~np.isfinite(h)
        if np.any(bad):
            j = np.argmin(dist[bad], axis=1)
            near[bad] = self.seeds[j]
            h[bad] = dist[bad][np.arange(j.size), j]
        sep = np.linalg.norm(y - near[:, None, :], axis=-1)
        rival = (np.abs(hh - h[:, None]) <= 1e-8 * max(1.0, self.domain.scale ** 2)) & \
            (sep > 1e-3 * self.domain.scale)
        unique = ~np.any(rival, axis=1) & ~bad
        return h, from_reals(near), unique

    def __call__(self, z) -> HValue:
        z = as_cpoint(z, self.domain.n)
        key = z.tobytes()
        hit = self._cache.get(key)
        if hit is None:
            h, near, uniq = self.eval_many(z[None, :])
            hit = HValue(float(h[0]), near[0], bool(uniq[0]))
            self._cache[key] = hit
        return hit


def _newton_project(domain: DomainSpec, x: np.ndarray, y: np.ndarray):
    """Critical points of |x - y|^2 on {rho = 0}; returns (y, converged)."""
    tol = 1e-10 * domain.scale
    cap = 0.25 * domain.scale
    g = domain.gradient(from_reals(y))
    lam = np.sum((x - y) * g, axis=-1) / np.sum(g * g, axis=-1)
    d = x.shape[-1]
    for _ in range(NEWTON_ITERS):
        z = from_reals(y)
        g = domain.gradient(z)
        H = domain.hessian(z)
        F = np.concatenate([y - x + lam[:, None] * g, domain.rho(z)[:, None]], axis=-1)
        J = np.zeros((len(y), d + 1, d + 1))
        J[:, :d, :d] = np.eye(d) + lam[:, None, None] * H
        J[:, :d, d] = g
        J[:, d, :d] = g
        try:
            delta = np.linalg.solve(J, -F[..., None])[..., 0]
        except np.linalg.LinAlgError:
            delta = _safe_solve(J, -F)
        size = np.linalg.norm(delta[:, :d], axis=-1)
        shrink = np.minimum(1.0, cap / np.maximum(size, 1e-300))
        y = y + shrink[:, None] * delta[:, :d]
        lam = lam + shrink * delta[:, d]
        if np.all(size < 1e-15 * max(1.0, domain.scale)):
            break
    z = from_reals(y)
    g = domain.gradient(z)
    F = y - x + lam[:, None] * g
    conv = (np.abs(domain.rho(z)) <= tol) & (np.linalg.norm(F, axis=-1) <= 1e-8 * domain.scale)
    return y, conv


def _safe_solve(J, b):
    out = np.zeros_like(b)
    for i in range(len(J)):
        out[i] = np.linalg.lstsq(J[i], b[i], rcond=None)[0]
    return out


def h_eval(field: SquaredDistanceField, z) -> HValue:
    return field(z)


def h_holomorphic_gradient(field: SquaredDistanceField, z) -> np.ndarray:
    """``conj(z - pi(z))``, the holomorphic derivative of h."""
    z = as_cpoint(z, field.domain.n)
    hv = field(z)
    if not hv.unique:
        raise NonUniqueProjectionError("nearest boundary point is not unique")
    return np.conj(z - hv.nearest)


def _hgrad_many(field, z):
    h, near, uniq = field.eval_many(z)
    return h, np.conj(z - near), uniq


# ---------------------------------------------------- inequality margins
def hor16_margins(field: SquaredDistanceField, z, w) -> np.ndarray:
    """``h(z) + 2Re<w-z, h'> + |<w-z, h'>|^2/h(z) - h(w)`` with bilinear pairing."""
    z = as_cpoint(z, field.domain.n).reshape(-1, field.domain.n)
    w = as_cpoint(w, field.domain.n).reshape(-1, field.domain.n)
    hz, hp, _ = _hgrad_many(field, z)
    hw = field.eval_many(w)[0]
    if np.any(hz <= 0):
        raise BoundaryDistanceError("h(z) = 0: z is on the boundary")
    pair = bilinear(w - z, hp)
    return hz + 2 * pair.real + np.abs(pair) ** 2 / hz - hw


def hor16_margin(field: SquaredDistanceField, z, w) -> float:
    z = as_cpoint(z, field.domain.n)
    if not field(z).unique:
        raise NonUniqueProjectionError("h is not differentiable at z")
    return float(hor16_margins(field, z, w)[0])


def hor17_probe(field: SquaredDistanceField, z, radii: Sequence[float] = (0.1, 0.05, 0.025),
                count: int = 256, seed: int = 0) -> list[float]:
    """Max over ``count`` directions (closed under w -> -w) of the bracket / |w|^2."""
    n = field.domain.n
    z = as_cpoint(z, n)
    hz = field(z).h
    if hz <= 0:
        raise BoundaryDistanceError("h(z) = 0")
    hp = h_holomorphic_gradient(field, z)
    half = random_unit_directions(np.random.default_rng(seed), count // 2, n)
    dirs = np.concatenate([half, -half])
    out = []
    for r in radii:
        w = r * dirs
        hw = field.eval_many(z + w)[0]
        pair = bilinear(w, hp)
        bracket = hw - hz - 2 * pair.real - np.abs(pair) ** 2 / hz
        out.append(float(np.max(bracket) / r ** 2))
    return out


def hor22_margins(field: SquaredDistanceField, x, y) -> np.ndarray:
    """``g(x) + <y-x, g'(x)> + |y-x|^2 |g'(x)|^2 / (4 g(x)) - g(y)`` on R^{2n}."""
    x = as_cpoint(x, field.domain.n).reshape(-1, field.domain.n)
    y = as_cpoint(y, field.domain.n).reshape(-1, field.domain.n)
    gx, near, _ = field.eval_many(x)
    gy = field.eval_many(y)[0]
    if np.any(gx <= 0):
        raise BoundaryDistanceError("g(x) = 0")
    gp = 2 * to_reals(x - near)
    dx = to_reals(y - x)
    return (gx + np.sum(dx * gp, axis=-1)
            + 0.25 * np.sum(dx * dx, axis=-1) * np.sum(gp * gp, axis=-1) / gx - gy)


def hor22_margin(field: SquaredDistanceField, x, y) -> float:
    return float(hor22_margins(field, x, y)[0])


def _as_real_vectors(v, n):
    v = np.asarray(v)
    if np.iscomplexobj(v) or v.shape[-1] == n:
        return to_reals(np.asarray(v, dtype=complex))
    return np.asarray(v, dtype=float)


def hor26_margins(field: SquaredDistanceField, z, v, step: float | None = None) -> np.ndarray:
    """``|v|^2 |g'|^2 / (2g) - D_v^2 g``; the second difference uses steps s, s/2
    with Richardson extrapolation."""
    n = field.domain.n
    z = as_cpoint(z, n).reshape(-1, n)
    v = np.broadcast_to(_as_real_vectors(v, n), (len(z), 2 * n))
    s = 1e-3 * field.domain.scale if step is None else step
    x = to_reals(z)
    vc = from_reals(v)
    stencil = np.concatenate([z, z + s * vc, z - s * vc, z + 0.5 * s * vc, z - 0.5 * s * vc])
    h, near, _ = field.eval_many(stencil)
    h = h.reshape(5, len(z))
    if np.any(h <= 0):
        raise BoundaryDistanceError("g vanishes within the stencil")
    d1 = (h[1] - 2 * h[0] + h[2]) / s ** 2
    d2 = (h[3] - 2 * h[0] + h[4]) / (0.25 * s ** 2)
    second = (4 * d2 - d1) / 3
    gp = 2 * (x - to_reals(near[: len(z)]))
    return 0.5 * np.sum(v * v, axis=-1) * np.sum(gp * gp, axis=-1) / h[0] - second


def hor26_margin(field: SquaredDistanceField, z, v, step: float | None = None) -> float:
    v = _as_real_vectors(v, field.domain.n)
    if not np.any(v):
        return 0.0
    return float(hor26_margins(field, z, v, step)[0])
