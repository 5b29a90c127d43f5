"""Raster primitives: thresholding, rescaling, rotation and noise.

Images are plain 2-D ``numpy.uint8`` arrays in row-major (height, width)
order with 0 = black ink and 255 = white. Binary pages are 2-D boolean
arrays where True marks foreground (ink). All operations are pure: the
noise injectors consume an explicit ``numpy.random.Generator`` so the same
seed yields byte-identical output.
"""

from __future__ import annotations

import math

import numpy as np
from PIL import Image, ImageDraw
from scipy import ndimage

# Network input geometry: portrait pages, 366 rows by 256 columns.
TARGET_HEIGHT = 366
TARGET_WIDTH = 256

# Sauvola defaults; overridable everywhere they are used.
SAUVOLA_WINDOW = 31
SAUVOLA_K = 0.2
SAUVOLA_R = 128.0


class ParameterError(ValueError):
    """An operation was called with an out-of-contract parameter."""


def as_page(img) -> np.ndarray:
    """Validate and return an image as a contiguous 2-D uint8 array."""
    a = np.asarray(img)
    if a.ndim != 2:
        raise ParameterError(f"expected a 2-D grayscale image, got shape {a.shape}")
    if a.size == 0:
        raise ParameterError("image is empty")
    if a.dtype != np.uint8:
        raise ParameterError(f"expected uint8 pixels, got {a.dtype}")
    return np.ascontiguousarray(a)


def load_page(path) -> np.ndarray:
    """Read an image file as 8-bit grayscale."""
    with Image.open(path) as im:
        return np.asarray(im.convert("L"))


def save_page(path, img) -> None:
    Image.fromarray(as_page(img)).save(path)


def binary_to_page(bits: np.ndarray) -> np.ndarray:
    """Binary page -> 8-bit raster with ink black (0) on white (255)."""
    return np.where(np.asarray(bits, dtype=bool), 0, 255).astype(np.uint8)


def page_to_binary(img: np.ndarray) -> np.ndarray:
    """Inverse of :func:`binary_to_page` for stored {0, 255} PNGs."""
    return as_page(img) < 128


def otsu_threshold(img) -> int:
    """Global threshold maximizing between-class variance.

    Foreground is every pixel with intensity strictly below the returned
    level, so a return of 0 marks the whole image as background. Ties are
    broken toward the smallest level.
    """
    a = as_page(img)
    hist = np.bincount(a.ravel(), minlength=256).astype(np.int64)
    total = int(a.size)
    levels = np.arange(256, dtype=np.int64)
    # For candidate t, class 0 holds the pixels with value < t.
    w0 = np.concatenate(([0], np.cumsum(hist)[:-1]))
    s0 = np.concatenate(([0], np.cumsum(hist * levels)[:-1]))
    w1 = total - w0
    s1 = int(np.sum(hist * levels)) - s0
    # Between-class variance up to a constant factor:
    # w0*w1*(mu0-mu1)^2 == (s0*w1 - s1*w0)^2 / (w0*w1)
    d = (s0 * w1 - s1 * w0).astype(np.float64)
    denom = (w0 * w1).astype(np.float64)
    var = np.zeros(256)
    ok = denom > 0
    var[ok] = d[ok] * d[ok] / denom[ok]
    return int(np.argmax(var))


def apply_threshold(img, level: int) -> np.ndarray:
    """Binary page: foreground where intensity < level."""
    return as_page(img) < level


def sauvola_binarize(img, window: int = SAUVOLA_WINDOW, k: float = SAUVOLA_K,
                     R: float = SAUVOLA_R) -> np.ndarray:
    """Local adaptive binarization.

    A pixel is foreground iff its intensity is below
    ``T = m * (1 + k * (s / R - 1))`` where m and s are the mean and
    standard deviation of the window centered on it (clipped at the image
    borders). Window statistics come from 64-bit integral images, so the
    result is exact: identical to summing each window directly.
    """
    a = as_page(img)
    if window < 3 or window % 2 == 0:
        raise ParameterError(f"window must be odd and >= 3, got {window}")
    if not 0.0 < k < 1.0:
        raise ParameterError(f"k must be in (0, 1), got {k}")
    if R <= 0:
        raise ParameterError(f"R must be positive, got {R}")

    h, w = a.shape
    r = window // 2
    vals = a.astype(np.int64)
    isum = _integral(vals)
    iqsum = _integral(vals * vals)

    ys = np.arange(h)
    xs = np.arange(w)
    y0 = np.clip(ys - r, 0, None)
    y1 = np.clip(ys + r + 1, None, h)
    x0 = np.clip(xs - r, 0, None)
    x1 = np.clip(xs + r + 1, None, w)

    S = _window_sums(isum, y0, y1, x0, x1).astype(np.float64)
    Q = _window_sums(iqsum, y0, y1, x0, x1).astype(np.float64)
    n = ((y1 - y0)[:, None] * (x1 - x0)[None, :]).astype(np.float64)

    m = S / n
    var = (Q - S * S / n) / n
    s = np.sqrt(np.maximum(var, 0.0))
    T = m * (1.0 + k * (s / R - 1.0))
    return a < T


def _integral(vals: np.ndarray) -> np.ndarray:
    """Summed-area table with a zero row/column prepended."""
    out = np.zeros((vals.shape[0] + 1, vals.shape[1] + 1), dtype=np.int64)
    out[1:, 1:] = vals
    np.cumsum(out, axis=0, out=out)
    np.cumsum(out, axis=1, out=out)
    return out


def _window_sums(integral, y0, y1, x0, x1) -> np.ndarray:
    """Per-pixel window sums for row bounds y0:y1 and column bounds x0:x1."""
    return (integral[np.ix_(y1, x1)] - integral[np.ix_(y0, x1)]
            - integral[np.ix_(y1, x0)] + integral[np.ix_(y0, x0)])


def rescale(img, target_w: int = TARGET_WIDTH, target_h: int = TARGET_HEIGHT) -> np.ndarray:
    """Aspect-preserving rescale onto a white target_h x target_w canvas.

    The source is scaled by the single factor min(target_w/w, target_h/h)
    and centered; the leftover border is padded with background white.
    """
    a = as_page(img)
    h, w = a.shape
    f = min(target_w / w, target_h / h)
    new_w = max(1, min(target_w, int(round(w * f))))
    new_h = max(1, min(target_h, int(round(h * f))))
    if (new_w, new_h) == (w, h):
        scaled = a
    else:
        resample = Image.Resampling.BOX if f < 1.0 else Image.Resampling.BILINEAR
        scaled = np.asarray(Image.fromarray(a).resize((new_w, new_h), resample))
    canvas = np.full((target_h, target_w), 255, dtype=np.uint8)
    oy = (target_h - new_h) // 2
    ox = (target_w - new_w) // 2
    canvas[oy:oy + new_h, ox:ox + new_w] = scaled
    return canvas


def rotate(img, angle: float) -> np.ndarray:
    """Rotate about the image center with bilinear interpolation.

    Revealed corners are filled with background white; output dimensions
    equal the input's. Angles are limited to +/-45 degrees (scan skew).
    """
    a = as_page(img)
    if not math.isfinite(angle) or abs(angle) > 45:
        raise ParameterError(f"|angle| must be <= 45 degrees, got {angle}")
    if angle == 0:
        return a.copy()
    out = ndimage.rotate(a.astype(np.float64), angle, reshape=False,
                         order=1, mode="constant", cval=255.0)
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def add_salt_pepper(img, p: float, rng: np.random.Generator) -> np.ndarray:
    """Replace each pixel independently with 0 or 255 (equal odds) at rate p."""
    a = as_page(img)
    if not 0.0 <= p <= 1.0:
        raise ParameterError(f"probability must be in [0, 1], got {p}")
    out = a.copy()
    if p == 0.0:
        return out
    hit = rng.random(a.shape) < p
    grains = rng.integers(0, 2, size=a.shape, dtype=np.uint8) * 255
    out[hit] = grains[hit]
    return out


def add_line_artifacts(img, spec, rng: np.random.Generator) -> np.ndarray:
    """Scratch a Poisson-distributed number of 1-px lines across the page.

    ``spec`` carries ``line_artifact_rate`` (expected count per page) and
    ``line_artifact_color`` ("black" or "white"). Lines get a uniform
    random orientation and pass through a uniform random interior point.
    """
    a = as_page(img)
    rate = float(spec.line_artifact_rate)
    if rate < 0:
        raise ParameterError(f"line_artifact_rate must be >= 0, got {rate}")
    if rate == 0.0:
        return a.copy()
    n = int(rng.poisson(rate))
    if n == 0:
        return a.copy()
    h, w = a.shape
    value = 0 if spec.line_artifact_color == "black" else 255
    im = Image.fromarray(a)
    draw = ImageDraw.Draw(im)
    reach = math.hypot(w, h)
    for _ in range(n):
        theta = rng.uniform(0.0, math.pi)
        cx = rng.uniform(0, w)
        cy = rng.uniform(0, h)
        dx, dy = math.cos(theta), math.sin(theta)
        draw.line(
            [(cx - reach * dx, cy - reach * dy), (cx + reach * dx, cy + reach * dy)],
            fill=value, width=1,
        )
    return np.asarray(im)
