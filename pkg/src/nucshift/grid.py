"""Masked image grids, homography warps, PSF convolution, masked moments.

Coordinate convention used throughout the package: ``s`` is the column
index, ``t`` is the row index, pixel centers sit at integer coordinates and
the origin is the top-left pixel.  A homography ``H`` maps an output-pixel
coordinate ``e = (s, t, 1)^T`` to the input sampling position
``(H1.e / H3.e, H2.e / H3.e)``; images are resampled there by bilinear
interpolation.  Bilinear interpolation is also the definition of the
"continuous version" of a grid wherever one is needed.

A warped output pixel is valid only if every bilinear neighbor that carries
nonzero weight is in bounds and valid; a convolved pixel is valid only if
the whole stencil is in bounds and valid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, EmptyOverlapError, InvalidTransformError

_DENOM_EPS = 1e-12
_DET_EPS = 1e-12


@dataclass
class ImageGrid:
    """An h x w scalar field (gray values) with a per-pixel validity mask."""

    values: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.values.ndim != 2:
            raise ConfigurationError(f"image values must be 2-D, got shape {self.values.shape}")
        if self.valid.shape != self.values.shape:
            raise ConfigurationError("validity mask shape differs from values shape")
        h, w = self.values.shape
        if h < 3 or w < 3:
            raise ConfigurationError(f"grids must be at least 3x3, got {h}x{w}")
        if not np.all(np.isfinite(self.values[self.valid])):
            raise ConfigurationError("non-finite value on a valid pixel")

    @classmethod
    def from_values(cls, values) -> "ImageGrid":
        """Wrap a plain array as a fully valid grid."""
        values = np.asarray(values, dtype=np.float64)
        return cls(values, np.ones(values.shape, dtype=bool))

    @classmethod
    def full(cls, height: int, width: int, fill: float = 0.0) -> "ImageGrid":
        return cls.from_values(np.full((height, width), float(fill)))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def interior(self, margin: int = 1) -> np.ndarray:
        """Boolean mask excluding ``margin`` pixels on every side."""
        m = np.zeros(self.shape, dtype=bool)
        if margin <= 0:
            m[:] = True
        else:
            m[margin:-margin, margin:-margin] = True
        return m

    def copy(self) -> "ImageGrid":
        return ImageGrid(self.values.copy(), self.valid.copy())


@dataclass
class Homography:
    """3x3 projective transform with the bottom-right entry pinned to 1."""

    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.matrix.shape != (3, 3):
            raise InvalidTransformError(f"homography must be 3x3, got {self.matrix.shape}")
        if not np.all(np.isfinite(self.matrix)):
            raise InvalidTransformError("homography has non-finite entries")
        if self.matrix[2, 2] != 1.0:
            raise InvalidTransformError("homography must be normalized with H[3][3] = 1")
        if abs(np.linalg.det(self.matrix)) <= _DET_EPS:
            raise InvalidTransformError("homography is numerically singular")

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    @classmethod
    def translation(cls, t_s: float, t_t: float) -> "Homography":
        m = np.eye(3)
        m[0, 2] = t_s
        m[1, 2] = t_t
        return cls(m)

    @classmethod
    def from_matrix(cls, matrix) -> "Homography":
        """Canonicalize an arbitrary 3x3 matrix by dividing out its (3,3) entry."""
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.shape != (3, 3):
            raise InvalidTransformError(f"homography must be 3x3, got {matrix.shape}")
        pivot = matrix[2, 2]
        if not np.isfinite(pivot) or abs(pivot) <= _DENOM_EPS:
            raise InvalidTransformError("cannot normalize: H[3][3] vanishes")
        return cls(matrix / pivot)

    def compose(self, other: "Homography") -> "Homography":
        """Homography equivalent to warping by ``self`` then by ``other``.

        With pull-style resampling, warp(warp(u, H1), H2) samples u at
        H1 @ H2 @ e, so the combined matrix is ``self @ other``.
        """
        return Homography.from_matrix(self.matrix @ other.matrix)

    def inverse(self) -> "Homography":
        return Homography.from_matrix(np.linalg.inv(self.matrix))

    def map_points(self, s, t) -> tuple[np.ndarray, np.ndarray]:
        """Apply the transform to coordinate arrays, returning (s~, t~)."""
        s = np.asarray(s, dtype=np.float64)
        t = np.asarray(t, dtype=np.float64)
        m = self.matrix
        denom = m[2, 0] * s + m[2, 1] * t + m[2, 2]
        return (
            (m[0, 0] * s + m[0, 1] * t + m[0, 2]) / denom,
            (m[1, 0] * s + m[1, 1] * t + m[1, 2]) / denom,
        )

    def max_corner_displacement(self, height: int, width: int) -> float:
        """Largest motion of the four image-rectangle corners, in pixels."""
        s = np.array([0.0, width - 1.0, 0.0, width - 1.0])
        t = np.array([0.0, 0.0, height - 1.0, height - 1.0])
        ms, mt = self.map_points(s, t)
        return float(np.max(np.hypot(ms - s, mt - t)))


@dataclass
class VisibilityMask:
    """Boolean per-pixel mask marking where a (pivot, observation) pair overlaps."""

    mask: np.ndarray

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool)
        if self.mask.ndim != 2:
            raise ConfigurationError("visibility mask must be 2-D")

    @staticmethod
    def pair_count(masks: Sequence["VisibilityMask | np.ndarray"]) -> np.ndarray:
        """n_p: per-pixel number of pairs in which the pixel appears."""
        total = None
        for m in masks:
            arr = np.asarray(getattr(m, "mask", m), dtype=np.int64)
            total = arr if total is None else total + arr
        if total is None:
            raise ConfigurationError("pair_count needs at least one mask")
        return total


@dataclass
class Psf:
    """Square, odd-sized, unit-sum convolution kernel."""

    kernel: np.ndarray

    def __post_init__(self):
        self.kernel = np.asarray(self.kernel, dtype=np.float64)
        k = self.kernel
        if k.ndim != 2 or k.shape[0] != k.shape[1]:
            raise ConfigurationError(f"PSF kernel must be square, got {k.shape}")
        if k.shape[0] % 2 != 1:
            raise ConfigurationError("PSF kernel size must be odd")
        if not np.all(np.isfinite(k)):
            raise ConfigurationError("PSF kernel has non-finite weights")
        if abs(k.sum() - 1.0) > 1e-12:
            raise ConfigurationError("PSF kernel weights must sum to 1")

    @classmethod
    def delta(cls) -> "Psf":
        return cls(np.ones((1, 1)))

    @classmethod
    def gaussian(cls, sigma: float, radius: int | None = None) -> "Psf":
        if sigma <= 0:
            raise ConfigurationError("gaussian PSF needs sigma > 0")
        if radius is None:
            radius = max(1, int(np.ceil(3.0 * sigma)))
        ax = np.arange(-radius, radius + 1, dtype=np.float64)
        g = np.exp(-0.5 * (ax / sigma) ** 2)
        kernel = np.outer(g, g)
        return cls(kernel / kernel.sum())

    @property
    def size(self) -> int:
        return self.kernel.shape[0]

    @property
    def is_delta(self) -> bool:
        return self.size == 1 and self.kernel[0, 0] == 1.0


class WarpPlan:
    """Precomputed bilinear gather for one homography on one grid shape.

    ``apply`` evaluates the linear warp operator S^H restricted to the given
    input validity mask; ``apply_adjoint`` is its exact transpose under the
    same mask convention.  Neighbors with zero bilinear weight (exact integer
    hits) are not required to be valid, so the identity homography is an
    exact identity map.
    """

    def __init__(self, shape: tuple[int, int], hom: Homography, valid_in: np.ndarray | None = None):
        h, w = shape
        if abs(np.linalg.det(hom.matrix)) <= _DET_EPS:
            raise InvalidTransformError("homography is numerically singular")
        if valid_in is None:
            valid_in = np.ones(shape, dtype=bool)
        self.shape = (h, w)
        self.valid_in = np.asarray(valid_in, dtype=bool)

        s, t = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
        m = hom.matrix
        denom = m[2, 0] * s + m[2, 1] * t + m[2, 2]
        ok = np.abs(denom) > _DENOM_EPS
        safe = np.where(ok, denom, 1.0)
        xs = (m[0, 0] * s + m[0, 1] * t + m[0, 2]) / safe
        ys = (m[1, 0] * s + m[1, 1] * t + m[1, 2]) / safe
        ok &= np.isfinite(xs) & np.isfinite(ys)
        xs = np.where(ok, xs, -1.0)
        ys = np.where(ok, ys, -1.0)

        s0 = np.floor(xs)
        t0 = np.floor(ys)
        fs = xs - s0
        ft = ys - t0
        s0 = s0.astype(np.int64)
        t0 = t0.astype(np.int64)
        s1 = s0 + (fs > 0)
        t1 = t0 + (ft > 0)

        inb = ok & (s0 >= 0) & (s1 <= w - 1) & (t0 >= 0) & (t1 <= h - 1)
        s0c, s1c = np.clip(s0, 0, w - 1), np.clip(s1, 0, w - 1)
        t0c, t1c = np.clip(t0, 0, h - 1), np.clip(t1, 0, h - 1)
        i00 = (t0c * w + s0c).ravel()
        i01 = (t0c * w + s1c).ravel()
        i10 = (t1c * w + s0c).ravel()
        i11 = (t1c * w + s1c).ravel()
        vflat = self.valid_in.ravel()
        valid = inb.ravel() & vflat[i00] & vflat[i01] & vflat[i10] & vflat[i11]

        fs, ft = fs.ravel(), ft.ravel()
        gate = valid.astype(np.float64)
        self.w00 = (1.0 - fs) * (1.0 - ft) * gate
        self.w01 = fs * (1.0 - ft) * gate
        self.w10 = (1.0 - fs) * ft * gate
        self.w11 = fs * ft * gate
        self.i00, self.i01, self.i10, self.i11 = i00, i01, i10, i11
        self.valid = valid.reshape(shape)
        self.coords = (xs, ys)

    def apply(self, values: np.ndarray) -> np.ndarray:
        f = np.where(self.valid_in, values, 0.0).ravel()
        out = (
            self.w00 * f[self.i00]
            + self.w01 * f[self.i01]
            + self.w10 * f[self.i10]
            + self.w11 * f[self.i11]
        )
        return out.reshape(self.shape)

    def apply_adjoint(self, values: np.ndarray, valid: np.ndarray | None = None) -> np.ndarray:
        rows = self.valid if valid is None else (self.valid & valid)
        v = np.where(rows, values, 0.0).ravel()
        n = self.shape[0] * self.shape[1]
        out = (
            np.bincount(self.i00, weights=self.w00 * v, minlength=n)
            + np.bincount(self.i01, weights=self.w01 * v, minlength=n)
            + np.bincount(self.i10, weights=self.w10 * v, minlength=n)
            + np.bincount(self.i11, weights=self.w11 * v, minlength=n)
        )
        return out.reshape(self.shape)

    def apply_stack(self, planes: Sequence[np.ndarray]) -> list[np.ndarray]:
        """Warp several value planes sharing this plan's coordinates."""
        return [self.apply(p) for p in planes]


def warp(image: ImageGrid, hom: Homography) -> ImageGrid:
    """Resample ``image`` under ``hom`` by bilinear interpolation.

    Output pixel (s, t) samples the input at the homography-mapped position;
    the output is valid only where all contributing neighbors are valid and
    in bounds.  Raises EmptyOverlapError if nothing remains valid.
    """
    plan = WarpPlan(image.shape, hom, image.valid)
    if not plan.valid.any():
        raise EmptyOverlapError("warp produced no valid pixels")
    return ImageGrid(plan.apply(image.values), plan.valid.copy())


def warp_adjoint(image: ImageGrid, hom: Homography, input_valid: np.ndarray | None = None) -> ImageGrid:
    """Exact adjoint of :func:`warp` under the shared mask convention.

    ``input_valid`` is the validity mask of the *forward* warp's input
    (fully valid by default); the adjoint scatters only from pixels where
    both the forward warp would be valid and ``image`` itself is valid.
    An all-invalid input yields the all-zero grid.
    """
    plan = WarpPlan(image.shape, hom, input_valid)
    out = plan.apply_adjoint(image.values, image.valid)
    return ImageGrid(out, plan.valid_in.copy())


class ConvPlan:
    """Valid-region convolution by a PSF kernel, with its exact adjoint."""

    def __init__(self, shape: tuple[int, int], psf: Psf, valid_in: np.ndarray | None = None):
        h, w = shape
        k = psf.size
        if k > h or k > w:
            raise ConfigurationError(f"kernel {k}x{k} larger than image {h}x{w}")
        if valid_in is None:
            valid_in = np.ones(shape, dtype=bool)
        self.shape = (h, w)
        self.kernel = psf.kernel
        self.radius = k // 2
        self.valid_in = np.asarray(valid_in, dtype=bool)
        r = self.radius
        if r == 0:
            self.valid = self.valid_in.copy()
        else:
            acc = np.ones((h - 2 * r, w - 2 * r), dtype=bool)
            for a in range(k):
                for b in range(k):
                    acc &= self.valid_in[a : a + h - 2 * r, b : b + w - 2 * r]
            self.valid = np.zeros(shape, dtype=bool)
            self.valid[r : h - r, r : w - r] = acc

    def apply(self, values: np.ndarray) -> np.ndarray:
        h, w = self.shape
        r = self.radius
        if r == 0:
            return np.where(self.valid, self.kernel[0, 0] * values, 0.0)
        f = np.where(self.valid_in, values, 0.0)
        out = np.zeros(self.shape)
        core = out[r : h - r, r : w - r]
        k = self.kernel.shape[0]
        # true convolution: out[t,s] += K[a,b] * f[t + r - a, s + r - b]
        for a in range(k):
            for b in range(k):
                core += self.kernel[a, b] * f[2 * r - a : h - a, 2 * r - b : w - b]
        out[~self.valid] = 0.0
        return out

    def apply_adjoint(self, values: np.ndarray, valid: np.ndarray | None = None) -> np.ndarray:
        h, w = self.shape
        r = self.radius
        rows = self.valid if valid is None else (self.valid & valid)
        v = np.where(rows, values, 0.0)
        if r == 0:
            return self.kernel[0, 0] * v
        out = np.zeros(self.shape)
        core = v[r : h - r, r : w - r]
        k = self.kernel.shape[0]
        for a in range(k):
            for b in range(k):
                out[2 * r - a : h - a, 2 * r - b : w - b] += self.kernel[a, b] * core
        return out


def convolve(image: ImageGrid, psf: Psf) -> ImageGrid:
    """Valid-region convolution; stencils touching invalid pixels invalidate the output."""
    plan = ConvPlan(image.shape, psf, image.valid)
    return ImageGrid(plan.apply(image.values), plan.valid.copy())


def convolve_adjoint(image: ImageGrid, psf: Psf, input_valid: np.ndarray | None = None) -> ImageGrid:
    """Exact adjoint of :func:`convolve` (correlation scatter), mask convention as in warp_adjoint."""
    plan = ConvPlan(image.shape, psf, input_valid)
    return ImageGrid(plan.apply_adjoint(image.values, image.valid), plan.valid_in.copy())


@dataclass
class MomentFields:
    """Per-pixel masked first/second moments of a stack, population (1/n_p) convention."""

    count: np.ndarray
    mean_a: np.ndarray
    var_a: np.ndarray
    valid: np.ndarray
    mean_b: np.ndarray | None = None
    var_b: np.ndarray | None = None
    cov: np.ndarray | None = None


def masked_moments(stack: Sequence[tuple]) -> MomentFields:
    """Per-pixel mean/variance (and covariance) fields over a masked stack.

    Each entry is ``(grid, mask)`` for single-variable moments or
    ``(grid_a, grid_b, mask)`` for paired moments with covariance; ``mask``
    may be a boolean array or a VisibilityMask and is intersected with the
    grids' own validity.  Pixels with n_p = 0 are marked invalid, never
    raised on.
    """
    if len(stack) == 0:
        raise ConfigurationError("masked_moments needs a nonempty stack")
    paired = len(stack[0]) == 3
    shape = stack[0][0].shape
    norm: list[tuple[np.ndarray, np.ndarray | None, np.ndarray]] = []
    for entry in stack:
        if len(entry) != (3 if paired else 2):
            raise ConfigurationError("mixed paired/unpaired entries in moment stack")
        if paired:
            ga, gb, mask = entry
        else:
            ga, mask = entry
            gb = None
        m = np.asarray(getattr(mask, "mask", mask), dtype=bool)
        a = ga.values if isinstance(ga, ImageGrid) else np.asarray(ga, dtype=np.float64)
        if isinstance(ga, ImageGrid):
            m = m & ga.valid
        b = None
        if gb is not None:
            b = gb.values if isinstance(gb, ImageGrid) else np.asarray(gb, dtype=np.float64)
            if isinstance(gb, ImageGrid):
                m = m & gb.valid
        if a.shape != shape or m.shape != shape or (b is not None and b.shape != shape):
            raise ConfigurationError("all grids and masks in a moment stack must share dimensions")
        norm.append((a, b, m))

    count = np.zeros(shape, dtype=np.int64)
    sum_a = np.zeros(shape)
    sum_b = np.zeros(shape)
    for a, b, m in norm:
        count += m
        sum_a += np.where(m, a, 0.0)
        if b is not None:
            sum_b += np.where(m, b, 0.0)
    valid = count >= 1
    n = np.where(valid, count, 1).astype(np.float64)
    mean_a = np.where(valid, sum_a / n, 0.0)
    mean_b = np.where(valid, sum_b / n, 0.0) if paired else None

    var_a = np.zeros(shape)
    var_b = np.zeros(shape) if paired else None
    cov = np.zeros(shape) if paired else None
    for a, b, m in norm:
        da = np.where(m, a - mean_a, 0.0)
        var_a += da * da
        if paired:
            db = np.where(m, b - mean_b, 0.0)
            var_b += db * db
            cov += da * db
    var_a = np.where(valid, var_a / n, 0.0)
    if paired:
        var_b = np.where(valid, var_b / n, 0.0)
        cov = np.where(valid, cov / n, 0.0)

    return MomentFields(count=count, mean_a=mean_a, var_a=var_a, valid=valid,
                        mean_b=mean_b, var_b=var_b, cov=cov)


def masked_dot(a: ImageGrid, b: ImageGrid) -> float:
    """Inner product over the mutually valid pixels."""
    both = a.valid & b.valid
    return float(np.sum(np.where(both, a.values * b.values, 0.0)))
