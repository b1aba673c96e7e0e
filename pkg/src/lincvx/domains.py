"""Domains in C^n given by defining functions.

A domain is ``{rho < 0}``.  Builtin families have closed-form rho, gradient
and Hessian; custom domains are expression trees differentiated by central
differences.  Every tolerance is multiplied by ``scale = bounding_radius``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from . import expr as _expr
from .points import DimensionError, MAX_DIM, as_cpoint, random_unit_directions, to_reals

FAMILIES = ("ball", "ellipsoid", "modelE", "perturbed_ball", "custom")

GRADIENT_FLOOR = 1e-6
BOUNDARY_TOL = 1e-10
BISECTION_ITERS = 60
MARCH_STEPS = 32
CORNER_GAP = 1e-2
_CHUNK = 8192


class DomainError(ValueError):
    """Bad domain specification: unknown family, bad params, wrong dimension."""


class DegenerateBoundaryError(ArithmeticError):
    """The gradient of the defining function (nearly) vanishes."""


class SamplingError(RuntimeError):
    """Boundary sampling could not produce the requested points."""


_DEFAULT_PARAMS: dict[str, dict[str, float]] = {
    "ball": {"radius": 1.0},
    "ellipsoid": {"a1": 1.0, "b1": 1.0, "a2": 1.0, "b2": 1.0},
    "modelE": {"c": 1.0, "r": 0.5},
    "perturbed_ball": {"radius": 1.0, "eps": 0.0, "quartic": 0.0},
    "custom": {},
}

_SPEC_KEYS = {"family", "params", "bounding_radius", "shell_width", "anchor", "expr"}


def _sq(z: np.ndarray) -> np.ndarray:
    return z.real * z.real + z.imag * z.imag


@dataclass(frozen=True)
class DomainSpec:
    family: str
    params: Mapping[str, float]
    bounding_radius: float
    shell_width: float
    anchor: tuple[float, ...]
    expr: Any = field(default=None, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown family {self.family!r}")
        allowed = _DEFAULT_PARAMS[self.family]
        params = dict(allowed)
        for key, val in dict(self.params).items():
            if self.family != "custom" and key not in allowed:
                raise DomainError(f"unknown parameter {key!r} for {self.family}")
            if not isinstance(val, (int, float)) or isinstance(val, bool) or not math.isfinite(val):
                raise DomainError(f"parameter {key!r} must be a finite number")
            params[key] = float(val)
        object.__setattr__(self, "params", params)
        if not (self.bounding_radius > 0 and math.isfinite(self.bounding_radius)):
            raise DomainError("bounding_radius must be positive")
        if not self.shell_width > 0:
            raise DomainError("shell_width must be positive")
        anchor = tuple(float(a) for a in self.anchor)
        if not anchor or len(anchor) % 2 or len(anchor) // 2 > MAX_DIM:
            raise DomainError("anchor must hold 2n reals with 1 <= n <= 4")
        object.__setattr__(self, "anchor", anchor)
        if self.family in ("modelE", "perturbed_ball", "ellipsoid") and self.n != 2:
            raise DomainError(f"{self.family} lives in C^2")
        self._check_params()
        if self.family == "custom":
            if self.expr is None:
                raise DomainError("custom family needs an 'expr' tree")
            try:
                _expr.validate(self.expr, self.n)
            except _expr.ExpressionError as exc:
                raise DomainError(str(exc)) from exc
        elif self.expr is not None:
            raise DomainError("'expr' is only allowed for the custom family")
        if not float(self.rho(self.anchor_point)) < 0:
            raise DomainError("anchor is not inside the domain")

    def _check_params(self) -> None:
        p = self.params
        if self.family in ("ball", "perturbed_ball") and p["radius"] <= 0:
            raise DomainError("radius must be positive")
        if self.family == "ellipsoid" and min(p.values()) <= 0:
            raise DomainError("semi-axes must be positive")
        if self.family == "modelE" and (p["c"] <= 0 or p["r"] <= 0):
            raise DomainError("modelE needs c > 0 and r > 0")
        if self.family == "perturbed_ball":
            if p["quartic"] < 0 or abs(p["eps"]) > 1:
                raise DomainError("perturbed_ball needs quartic >= 0 and |eps| <= 1")
            if abs(p["eps"]) == 1 and p["quartic"] == 0:
                raise DomainError("perturbed_ball with |eps| = 1 is unbounded unless quartic > 0")

    # ------------------------------------------------------------------ views
    @property
    def n(self) -> int:
        return len(self.anchor) // 2

    @property
    def scale(self) -> float:
        return self.bounding_radius

    @property
    def anchor_point(self) -> np.ndarray:
        a = np.asarray(self.anchor)
        return a[0::2] + 1j * a[1::2]

    def check_point(self, z) -> np.ndarray:
        z = np.asarray(z)
        if not np.iscomplexobj(z):
            z = z.astype(complex)
        if z.shape[-1] != self.n:
            raise DimensionError(f"expected points in C^{self.n}, got C^{z.shape[-1]}")
        return z

    # ------------------------------------------------------------ evaluation
    def rho(self, z) -> np.ndarray:
        """Defining function, vectorized over leading axes."""
        z = self.check_point(z)
        p = self.params
        f = self.family
        if f == "ball":
            return np.sum(_sq(z), axis=-1) - p["radius"] ** 2
        if f == "ellipsoid":
            return (z[..., 0].real ** 2 / p["a1"] ** 2 + z[..., 0].imag ** 2 / p["b1"] ** 2
                    + z[..., 1].real ** 2 / p["a2"] ** 2 + z[..., 1].imag ** 2 / p["b2"] ** 2 - 1.0)
        if f == "modelE":
            rc, rb = self.pieces(z)
            return np.maximum(rc, rb)
        if f == "perturbed_ball":
            w = z[..., 1]
            s = _sq(w)
            return (_sq(z[..., 0]) + s - p["radius"] ** 2 + p["eps"] * (w.real ** 2 - w.imag ** 2)
                    + p["quartic"] * s * s)
        return _expr.evaluate(self.expr, to_reals(z))

    def pieces(self, z) -> tuple[np.ndarray, np.ndarray]:
        """modelE only: (rho_c, clipping-ball) values."""
        z = self.check_point(z)
        c, r = self.params["c"], self.params["r"]
        zz, w = z[..., 0], z[..., 1]
        rho_c = zz.real - w.real ** 2 + c * _sq(zz) + c * w.imag ** 2
        return rho_c, _sq(zz) + _sq(w) - r * r

    def gradient(self, z) -> np.ndarray:
        """Real gradient, interleaved ``(d/dx1, d/dy1, ...)``."""
        z = self.check_point(z)
        p = self.params
        f = self.family
        x = to_reals(z)
        if f == "ball":
            return 2.0 * x
        if f == "ellipsoid":
            return 2.0 * x / self._axes() ** 2
        if f == "modelE":
            c = p["c"]
            rc, rb = self.pieces(z)
            g_c = np.stack([1 + 2 * c * x[..., 0], 2 * c * x[..., 1], -2 * x[..., 2], 2 * c * x[..., 3]], -1)
            return np.where((rc >= rb)[..., None], g_c, 2.0 * x)
        if f == "perturbed_ball":
            eps, q = p["eps"], p["quartic"]
            s = x[..., 2] ** 2 + x[..., 3] ** 2
            return np.stack([2 * x[..., 0], 2 * x[..., 1],
                             2 * x[..., 2] * (1 + eps) + 4 * q * s * x[..., 2],
                             2 * x[..., 3] * (1 - eps) + 4 * q * s * x[..., 3]], -1)
        return fd_gradient(self, z)

    def hessian(self, z) -> np.ndarray:
        """Real Hessian of shape ``(..., 2n, 2n)``."""
        z = self.check_point(z)
        p = self.params
        f = self.family
        x = to_reals(z)
        eye = np.eye(2 * self.n)
        base = np.zeros(x.shape[:-1] + (2 * self.n, 2 * self.n))
        if f == "ball":
            return base + 2 * eye
        if f == "ellipsoid":
            return base + np.diag(2.0 / self._axes() ** 2)
        if f == "modelE":
            c = p["c"]
            rc, rb = self.pieces(z)
            h_c = np.diag([2 * c, 2 * c, -2.0, 2 * c])
            return np.where((rc >= rb)[..., None, None], base + h_c, base + 2 * eye)
        if f == "perturbed_ball":
            eps, q = p["eps"], p["quartic"]
            x2, y2 = x[..., 2], x[..., 3]
            s = x2 * x2 + y2 * y2
            base[..., 0, 0] = base[..., 1, 1] = 2.0
            base[..., 2, 2] = 2 * (1 + eps) + 4 * q * s + 8 * q * x2 * x2
            base[..., 3, 3] = 2 * (1 - eps) + 4 * q * s + 8 * q * y2 * y2
            base[..., 2, 3] = base[..., 3, 2] = 8 * q * x2 * y2
            return base
        return fd_hessian(self, z)

    def holomorphic_gradient(self, z) -> np.ndarray:
        """(d rho / d z_j) = (rho_x - i rho_y) / 2."""
        g = self.gradient(z)
        return 0.5 * (g[..., 0::2] - 1j * g[..., 1::2])

    def corner_gap(self, z) -> np.ndarray:
        """Distance (in rho units) between the two pieces of a clipped domain.

        Infinite for smooth families.
        """
        if self.family != "modelE":
            return np.full(np.shape(z)[:-1], np.inf)
        rc, rb = self.pieces(z)
        return np.abs(rc - rb)

    def _axes(self) -> np.ndarray:
        p = self.params
        return np.array([p["a1"], p["b1"], p["a2"], p["b2"]])

    # --------------------------------------------------------- serialization
    def to_dict(self) -> dict:
        out = {
            "family": self.family,
            "params": dict(self.params),
            "bounding_radius": self.bounding_radius,
            "shell_width": self.shell_width,
            "anchor": list(self.anchor),
        }
        if self.expr is not None:
            out["expr"] = self.expr
        return out

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "DomainSpec":
        if not isinstance(data, Mapping):
            raise DomainError("domain spec must be a JSON object")
        unknown = set(data) - _SPEC_KEYS
        if unknown:
            raise DomainError(f"unknown keys in domain spec: {sorted(unknown)}")
        missing = {"family", "bounding_radius", "shell_width", "anchor"} - set(data)
        if missing:
            raise DomainError(f"missing keys in domain spec: {sorted(missing)}")
        params = data.get("params", {})
        if not isinstance(params, Mapping):
            raise DomainError("params must be an object")
        try:
            return cls(family=data["family"], params=params,
                       bounding_radius=float(data["bounding_radius"]),
                       shell_width=float(data["shell_width"]),
                       anchor=tuple(data["anchor"]), expr=data.get("expr"))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, DomainError):
                raise
            raise DomainError(str(exc)) from exc


def load_domain(path: str | Path) -> DomainSpec:
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DomainError(f"{path}: invalid JSON ({exc})") from exc
    return DomainSpec.from_dict(data)


# --------------------------------------------------------------- builtins
def ball(radius: float = 1.0, n: int = 2, shell_width: float = 0.5) -> DomainSpec:
    return DomainSpec("ball", {"radius": radius}, radius, shell_width, (0.0,) * (2 * n))


def ellipsoid(a1=1.0, b1=1.0, a2=1.0, b2=1.0, shell_width: float = 0.5) -> DomainSpec:
    params = {"a1": a1, "b1": b1, "a2": a2, "b2": b2}
    return DomainSpec("ellipsoid", params, max(params.values()), shell_width, (0.0,) * 4)


def model_e(c: float = 1.0, r: float = 0.5, shell_width: float = 0.5) -> DomainSpec:
    """``{Re z - (Re w)^2 + c|z|^2 + c(Im w)^2 < 0}`` clipped by the ball of radius r."""
    return DomainSpec("modelE", {"c": c, "r": r}, r, shell_width, (-0.2 * r, 0.0, 0.0, 0.0))


def perturbed_ball(radius=1.0, eps=0.0, quartic=0.0, shell_width: float = 0.5) -> DomainSpec:
    """``|z|^2 + |w|^2 - R^2 + eps Re(w^2) + quartic |w|^4``."""
    bound = radius if quartic == 0 else math.hypot(radius, (radius ** 2 / quartic) ** 0.25)
    if abs(eps) < 1 and quartic == 0:
        bound = radius / math.sqrt(1 - abs(eps))
    return DomainSpec("perturbed_ball", {"radius": radius, "eps": eps, "quartic": quartic},
                      bound, shell_width, (0.0,) * 4)


def custom(tree: Any, anchor: Sequence[float], bounding_radius: float,
           shell_width: float = 0.5) -> DomainSpec:
    return DomainSpec("custom", {}, bounding_radius, shell_width, tuple(anchor), expr=tree)


# ------------------------------------------------------ finite differences
def fd_gradient(domain: DomainSpec, z, step: float | None = None) -> np.ndarray:
    """Central-difference real gradient (step defaults to 1e-5 * scale)."""
    z = domain.check_point(z)
    h = 1e-5 * domain.scale if step is None else step
    x = to_reals(z)
    out = np.empty_like(x)
    for k in range(x.shape[-1]):
        e = np.zeros(x.shape[-1])
        e[k] = h
        xp, xm = x + e, x - e
        out[..., k] = (_rho_reals(domain, xp) - _rho_reals(domain, xm)) / (2 * h)
    return out


def fd_hessian(domain: DomainSpec, z, step: float | None = None) -> np.ndarray:
    z = domain.check_point(z)
    h = 1e-4 * domain.scale if step is None else step
    x = to_reals(z)
    d = x.shape[-1]
    out = np.empty(x.shape[:-1] + (d, d))
    f0 = _rho_reals(domain, x)
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = h
        out[..., i, i] = (_rho_reals(domain, x + ei) - 2 * f0 + _rho_reals(domain, x - ei)) / h ** 2
        for j in range(i + 1, d):
            ej = np.zeros(d)
            ej[j] = h
            v = (_rho_reals(domain, x + ei + ej) - _rho_reals(domain, x + ei - ej)
                 - _rho_reals(domain, x - ei + ej) + _rho_reals(domain, x - ei - ej)) / (4 * h * h)
            out[..., i, j] = out[..., j, i] = v
    return out


def _rho_reals(domain: DomainSpec, x: np.ndarray) -> np.ndarray:
    return domain.rho(x[..., 0::2] + 1j * x[..., 1::2])


# -------------------------------------------------------------- operations
def rho_eval(domain: DomainSpec, z) -> float:
    return float(domain.rho(as_cpoint(z, domain.n)))


def rho_gradient(domain: DomainSpec, z) -> np.ndarray:
    """Real gradient; raises near the boundary when it (nearly) vanishes."""
    z = as_cpoint(z, domain.n)
    g = domain.gradient(z)
    near = abs(float(domain.rho(z))) < domain.shell_width * domain.scale
    if near and np.linalg.norm(g) < GRADIENT_FLOOR:
        raise DegenerateBoundaryError("gradient vanishes near the boundary")
    return g


def membership(domain: DomainSpec, z, tol: float | None = None) -> str:
    """``inside`` iff rho < -tol, ``boundary`` iff |rho| <= tol, else ``outside``."""
    tol = 1e-9 * domain.scale if tol is None else tol
    if not tol > 0:
        raise ValueError("tol must be positive")
    r = rho_eval(domain, z)
    if r < -tol:
        return "inside"
    if abs(r) <= tol:
        return "boundary"
    return "outside"


def first_exit(domain: DomainSpec, base, dirs, t_max=None, march: int = MARCH_STEPS,
               iters: int = BISECTION_ITERS, method: str = "auto") -> np.ndarray:
    """Smallest t > 0 with rho(base + t*dir) >= 0 along each ray.

    ``base`` is ``(n,)`` or ``(m, n)``, ``dirs`` is ``(m, n)``.  With
    ``method="march"`` the ray is marched on ``march`` uniform steps up to
    ``t_max`` (by default the exit of the bounding ball) and the first sign
    change is refined for at most ``iters`` steps.  ``"auto"`` solves the
    quadratic restriction exactly for families whose pieces are quadratic.
    Returns ``inf`` where no exit is found.
    """
    dirs = np.atleast_2d(np.asarray(dirs, dtype=complex))
    base = np.broadcast_to(np.asarray(base, dtype=complex), dirs.shape)
    if method == "auto" and domain.family in _QUADRATIC:
        return _quadratic_exit(domain, base, dirs, t_max)
    m = dirs.shape[0]
    out = np.empty(m)
    for lo_i in range(0, m, _CHUNK):
        sl = slice(lo_i, min(m, lo_i + _CHUNK))
        lo, hi, f_lo, f_hi = march_brackets(domain, base[sl], dirs[sl], t_max, march)
        idx = np.nonzero(np.isfinite(hi))[0]
        if idx.size:
            hi[idx] = _refine_root(domain, base[sl][idx], dirs[sl][idx], lo[idx], hi[idx],
                                   f_lo[idx], f_hi[idx], iters)
        out[sl] = hi
    return out


_QUADRATIC = ("ball", "ellipsoid", "modelE")


def _quadratic_exit(domain, base, dirs, t_max):
    dn = np.sqrt(np.sum(_sq(dirs), axis=-1))
    if t_max is None:
        bn = np.sqrt(np.sum(_sq(base), axis=-1))
        t_max = 1.01 * (domain.bounding_radius + bn) / dn
    u = dirs / dn[:, None]
    if domain.family == "modelE":
        pieces = [lambda x: domain.pieces(x)[0], lambda x: domain.pieces(x)[1]]
    else:
        pieces = [domain.rho]
    best = np.full(dn.shape, np.inf)
    for f in pieces:
        c0 = f(base)
        fp, fm = f(base + u), f(base - u)
        a = 0.5 * (fp + fm) - c0
        b = 0.5 * (fp - fm)
        best = np.minimum(best, _first_positive_root(a, b, c0))
    t = best / dn
    inside = domain.rho(base) < 0
    return np.where(inside & (t <= t_max), t, np.where(inside, np.inf, 0.0))


def _first_positive_root(a, b, c):
    """Smallest s > 0 with a s^2 + b s + c >= 0, given c < 0 (inf if none)."""
    a, b, c = np.broadcast_arrays(a, b, c)
    out = np.full(a.shape, np.inf)
    disc = b * b - 4 * a * c
    quad = (a != 0) & (disc >= 0)
    sq = np.sqrt(np.where(quad, disc, 0.0))
    q = -0.5 * (b + np.where(b >= 0, sq, -sq))
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = np.where(quad, q / np.where(a != 0, a, 1.0), np.inf)
        r2 = np.where(quad & (q != 0), c / np.where(q != 0, q, 1.0), np.inf)
        lin = np.where((a == 0) & (b > 0), -c / np.where(b != 0, b, 1.0), np.inf)
    r1 = np.where(r1 > 0, r1, np.inf)
    r2 = np.where(r2 > 0, r2, np.inf)
    out = np.minimum(np.minimum(r1, r2), lin)
    return np.where(c >= 0, 0.0, out)


def march_brackets(domain: DomainSpec, base, dirs, t_max=None, march: int = MARCH_STEPS):
    """Bracket the first exit along each ray: ``(lo, hi, rho(lo), rho(hi))``.

    ``hi`` is ``inf`` for rays that stay inside up to ``t_max``.
    """
    dn = np.sqrt(np.sum(_sq(dirs), axis=-1))
    if t_max is None:
        bn = np.sqrt(np.sum(_sq(base), axis=-1))
        t_max = 1.01 * (domain.bounding_radius + bn) / dn
    t_max = np.broadcast_to(np.asarray(t_max, dtype=float), dn.shape)
    steps = np.arange(1, march + 1) / march
    ts = t_max[:, None] * steps[None, :]
    vals = domain.rho(base[:, None, :] + ts[..., None] * dirs[:, None, :])
    outside = vals >= 0
    found = outside.any(axis=1)
    k = np.argmax(outside, axis=1)
    rows = np.arange(len(k))
    hi = np.where(found, ts[rows, k], np.inf)
    lo = np.where(k > 0, ts[rows, np.maximum(k - 1, 0)], 0.0)
    f_hi = vals[rows, k]
    f_lo = vals[rows, np.maximum(k - 1, 0)]
    at_base = found & (k == 0)
    if at_base.any():
        f_lo = f_lo.copy()
        f_lo[at_base] = domain.rho(base[at_base])
    return lo, hi, f_lo, f_hi


def _refine_root(domain, base, dirs, lo, hi, f_lo, f_hi, iters):
    """Shrink brackets ``rho(lo) < 0 <= rho(hi)`` with the Illinois rule.

    Each step keeps the bracket, so the result is the first exit located by
    the march; a bisection step is forced when one side stalls three times.
    At most ``iters`` steps; rays whose bracket reached rounding level stop
    early.  Returns the midpoint of the final bracket.
    """
    lo, hi, f_lo, f_hi = lo.copy(), hi.copy(), f_lo.copy(), f_hi.copy()
    side = np.zeros(lo.shape, dtype=int)
    active = np.arange(lo.size)
    for _ in range(iters):
        if active.size == 0:
            break
        l, h, fl, fh, sd = lo[active], hi[active], f_lo[active], f_hi[active], side[active]
        denom = fh - fl
        t = np.where(denom > 0, (l * fh - h * fl) / np.where(denom > 0, denom, 1.0), 0.5 * (l + h))
        bad = ~((t > l) & (t < h)) | (np.abs(sd) >= 3)
        t = np.where(bad, 0.5 * (l + h), t)
        ft = domain.rho(base[active] + t[:, None] * dirs[active])
        out = ft >= 0
        # Illinois: halve the retained endpoint value when the same side moves twice
        new_sd = np.where(out, np.where(sd > 0, sd + 1, 1), np.where(sd < 0, sd - 1, -1))
        new_sd = np.where(bad, 0, new_sd)
        hi[active] = np.where(out, t, h)
        f_hi[active] = np.where(out, ft, np.where(new_sd == -2, 0.5 * fh, fh))
        lo[active] = np.where(out & (ft != 0), l, t)
        f_lo[active] = np.where(out, np.where(new_sd == 2, 0.5 * fl, fl), ft)
        side[active] = new_sd
        w = hi[active] - lo[active]
        done = (w <= 4e-16 * np.abs(hi[active])) | (ft == 0)
        active = active[~done]
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class BoundaryPoint:
    point: np.ndarray
    unit_normal: np.ndarray
    residual: float

    @property
    def reals(self) -> np.ndarray:
        return to_reals(self.point)


def boundary_point(domain: DomainSpec, z) -> BoundaryPoint:
    """Wrap a point already on the boundary, checking residual and gradient."""
    z = as_cpoint(z, domain.n)
    g = domain.gradient(z)
    gn = float(np.linalg.norm(g))
    if gn < GRADIENT_FLOOR:
        raise DegenerateBoundaryError(f"|grad rho| = {gn:.3g} at boundary point")
    return BoundaryPoint(z, g / gn, abs(float(domain.rho(z))))


def project_to_boundary(domain: DomainSpec, z) -> BoundaryPoint:
    """Move ``z`` to the boundary along the ray from the anchor through it."""
    z = as_cpoint(z, domain.n)
    a = domain.anchor_point
    d = z - a
    if np.linalg.norm(d) == 0:
        raise DomainError("cannot project the anchor itself")
    t = first_exit(domain, a, d[None, :])[0]
    if not np.isfinite(t):
        raise SamplingError("ray from anchor does not exit the bounding radius")
    return boundary_point(domain, a + t * d)


def boundary_sample(domain: DomainSpec, n: int, seed: int) -> list[BoundaryPoint]:
    """``n`` boundary points from seeded random rays cast from the anchor.

    Points near the seam of a clipped domain are rejected, as are points
    with a degenerate gradient.
    """
    if n <= 0:
        return []
    rng = np.random.default_rng(seed)
    a = domain.anchor_point
    tol = BOUNDARY_TOL * domain.scale
    gap = CORNER_GAP * domain.scale
    result: list[BoundaryPoint] = []
    attempts = 0
    while len(result) < n:
        attempts += 1
        if attempts > 50:
            raise SamplingError(f"only {len(result)} of {n} boundary points after 50 rounds")
        dirs = random_unit_directions(rng, max(2 * (n - len(result)), 16), domain.n)
        t = first_exit(domain, a, dirs, method="march")
        if not np.all(np.isfinite(t)):
            raise SamplingError("ray fails to exit the bounding radius")
        pts = a + t[:, None] * dirs
        res = np.abs(domain.rho(pts))
        g = domain.gradient(pts)
        gn = np.linalg.norm(g, axis=-1)
        ok = (res <= tol) & (domain.corner_gap(pts) > gap) & (gn > GRADIENT_FLOOR)
        for i in np.nonzero(ok)[0]:
            result.append(BoundaryPoint(pts[i], g[i] / gn[i], float(res[i])))
            if len(result) == n:
                break
    return result


def tangent_basis_from_gradient(hol_grad: np.ndarray) -> list[np.ndarray]:
    """Orthonormal basis of {v : sum(hol_grad * v) = 0}."""
    hol_grad = np.asarray(hol_grad, dtype=complex)
    if np.linalg.norm(hol_grad) < 0.5 * GRADIENT_FLOOR:
        raise DegenerateBoundaryError("degenerate holomorphic gradient")
    _, _, vh = np.linalg.svd(hol_grad[None, :])
    return [vh[k].conj() for k in range(1, len(hol_grad))]


def complex_tangent_basis(domain: DomainSpec, p: BoundaryPoint) -> list[np.ndarray]:
    """Orthonormal basis of the complex tangent space at a boundary point."""
    return tangent_basis_from_gradient(domain.holomorphic_gradient(p.point))


def tangent_direction(domain: DomainSpec, z: np.ndarray) -> np.ndarray:
    """Vectorized unit complex tangent for C^2: ``(-conj(N2), conj(N1))/|N|``.

    ``N`` is the complex normal ``(rho_x1 + i rho_y1, rho_x2 + i rho_y2)``.
    """
    g = domain.gradient(z)
    nrm = g[..., 0::2] + 1j * g[..., 1::2]
    v = np.stack([-np.conj(nrm[..., 1]), np.conj(nrm[..., 0])], axis=-1)
    return v / np.linalg.norm(g, axis=-1)[..., None]
