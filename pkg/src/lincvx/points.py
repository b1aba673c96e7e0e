"""Complex points and directions stored as 2n reals.

Internally every point is a complex numpy array of shape ``(..., n)``.  The
real view interleaves coordinates as ``(x1, y1, x2, y2, ...)``.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

MAX_DIM = 4


class DimensionError(ValueError):
    """Raised when a point has the wrong number of coordinates."""


def from_reals(coords: Iterable[float]) -> np.ndarray:
    """Build a complex point from interleaved reals ``(x1, y1, ..., xn, yn)``."""
    arr = np.asarray(list(coords) if not isinstance(coords, np.ndarray) else coords, dtype=float)
    if arr.shape[-1] % 2 or arr.shape[-1] == 0:
        raise DimensionError(f"expected an even, nonzero number of reals, got {arr.shape[-1]}")
    if arr.shape[-1] // 2 > MAX_DIM:
        raise DimensionError(f"complex dimension {arr.shape[-1] // 2} exceeds {MAX_DIM}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point coordinates must be finite")
    return arr[..., 0::2] + 1j * arr[..., 1::2]


def to_reals(z: np.ndarray) -> np.ndarray:
    """Interleaved real view of a complex array of shape ``(..., n)``."""
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],), dtype=float)
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


def as_cpoint(value, n: int | None = None) -> np.ndarray:
    """Coerce a complex sequence, a real interleaved sequence or [re, im] pairs.

    Accepted forms for n = 2: ``[z1, z2]`` (complex), ``[[re, im], [re, im]]``
    and ``[x1, y1, x2, y2]``.  Plain real sequences are treated as interleaved
    only when ``n`` says so, or when no complex entries are present and the
    length is even and larger than ``n``.
    """
    arr = np.asarray(value)
    if arr.ndim == 2 and arr.shape[-1] == 2 and not np.iscomplexobj(arr):
        z = arr[:, 0].astype(float) + 1j * arr[:, 1].astype(float)
    elif np.iscomplexobj(arr):
        z = arr.astype(complex)
    elif n is not None and arr.shape[-1] == 2 * n:
        z = from_reals(arr)
    elif n is not None and arr.shape[-1] == n:
        z = arr.astype(complex)
    else:
        z = from_reals(arr)
    if n is not None and z.shape[-1] != n:
        raise DimensionError(f"expected a point in C^{n}, got C^{z.shape[-1]}")
    if not np.all(np.isfinite(z)):
        raise ValueError("point coordinates must be finite")
    return z


def pairs(z: np.ndarray) -> list[list[float]]:
    """JSON-friendly ``[[re, im], ...]`` form of a single point."""
    return [[float(c.real), float(c.imag)] for c in np.asarray(z, dtype=complex).ravel()]


def parse_point(text: str, n: int | None = None) -> np.ndarray:
    """Parse ``"x1,y1,x2,y2"`` into a complex point."""
    try:
        vals = [float(tok) for tok in text.replace(" ", "").split(",") if tok]
    except ValueError as exc:
        raise DimensionError(f"cannot parse point {text!r}") from exc
    z = from_reals(vals)
    if n is not None and z.shape[-1] != n:
        raise DimensionError(f"expected {2 * n} reals, got {len(vals)}")
    return z


def hermitian(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Hermitian product sum(conj(u) * v) over the last axis."""
    return np.sum(np.conj(u) * v, axis=-1)


def bilinear(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Bilinear pairing sum(u * v), the one used for hyperplanes {a.z = 1}."""
    return np.sum(u * v, axis=-1)


def norm(z: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(np.abs(z) ** 2, axis=-1))


def random_unit_directions(rng: np.random.Generator, count: int, n: int) -> np.ndarray:
    """Uniform directions on the unit sphere of R^{2n}, returned as complex."""
    g = rng.standard_normal((count, 2 * n))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g[:, 0::2] + 1j * g[:, 1::2]


def random_in_ball(rng: np.random.Generator, count: int, n: int, radius: float,
                   center: Sequence[complex] | np.ndarray | None = None) -> np.ndarray:
    """Uniform samples of the Euclidean ball of R^{2n}."""
    dirs = random_unit_directions(rng, count, n)
    r = radius * rng.random(count) ** (1.0 / (2 * n))
    pts = dirs * r[:, None]
    if center is not None:
        pts = pts + np.asarray(center, dtype=complex)
    return pts
