import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from PIL import Image, ImageDraw

from recordforge import imaging
from recordforge.imaging import (
    ParameterError,
    add_line_artifacts,
    add_salt_pepper,
    otsu_threshold,
    rescale,
    rotate,
    sauvola_binarize,
)
from recordforge.rng import substream


# ---------------------------------------------------------------------------
# Independent oracles. These deliberately recompute everything the slow,
# definitional way and must not share code with the implementation paths.

def otsu_oracle(img: np.ndarray) -> int:
    """Exhaustive search over all 256 thresholds with exact arithmetic."""
    hist = [0] * 256
    for v in img.ravel().tolist():
        hist[v] += 1
    total = sum(hist)
    best_t, best_var = 0, Fraction(0)
    for t in range(256):
        w0 = sum(hist[:t])
        w1 = total - w0
        if w0 == 0 or w1 == 0:
            var = Fraction(0)
        else:
            s0 = sum(i * hist[i] for i in range(t))
            s1 = sum(i * hist[i] for i in range(t, 256))
            mu0 = Fraction(s0, w0)
            mu1 = Fraction(s1, w1)
            var = w0 * w1 * (mu0 - mu1) ** 2
        if var > best_var:
            best_var, best_t = var, t
    return best_t


def sauvola_oracle(img: np.ndarray, window: int, k: float, R: float) -> np.ndarray:
    """Per-pixel windowed statistics, O(n * window^2), no integral images."""
    h, w = img.shape
    r = window // 2
    vals = img.astype(np.int64)
    squares = vals * vals
    out = np.zeros((h, w), dtype=bool)
    for y in range(h):
        y0, y1 = max(0, y - r), min(h, y + r + 1)
        for x in range(w):
            x0, x1 = max(0, x - r), min(w, x + r + 1)
            S = float(vals[y0:y1, x0:x1].sum())
            Q = float(squares[y0:y1, x0:x1].sum())
            n = float((y1 - y0) * (x1 - x0))
            m = S / n
            var = (Q - S * S / n) / n
            s = math.sqrt(max(var, 0.0))
            T = m * (1.0 + k * (s / R - 1.0))
            out[y, x] = img[y, x] < T
    return out


def strokes_page(width=220, height=220) -> np.ndarray:
    """Text-like page: dark strokes a few pixels wide on a white ground."""
    im = Image.new("L", (width, height), 255)
    d = ImageDraw.Draw(im)
    for i, y in enumerate(range(20, height - 20, 24)):
        d.line([(15, y), (width - 15, y + (i % 3) - 1)], fill=20, width=3)
    d.arc([30, 30, width - 30, height - 30], 0, 270, fill=35, width=3)
    return np.asarray(im)


# ---------------------------------------------------------------------------
# Otsu

def test_otsu_constant_image_all_background():
    img = np.full((32, 32), 128, dtype=np.uint8)
    t = otsu_threshold(img)
    assert t == 0
    assert not (img < t).any()


def test_otsu_two_populations_separated_exactly():
    rng = substream(7, 0)
    img = np.full(100, 10, dtype=np.uint8)
    img[50:] = 200
    img = rng.permuted(img).reshape(10, 10)
    t = otsu_threshold(img)
    assert t == otsu_oracle(img)
    assert 10 < t <= 200
    fg = img < t
    assert fg.sum() == 50
    assert (img[fg] == 10).all()
    assert (img[~fg] == 200).all()


def test_otsu_matches_exhaustive_oracle_on_random_images():
    for trial in range(20):
        rng = substream(11, trial)
        img = rng.integers(0, 256, size=(64, 64), dtype=np.uint8)
        assert otsu_threshold(img) == otsu_oracle(img)


def test_otsu_mirrored_tie_breaks_to_smallest_threshold():
    # Two splits with exactly equal between-class variance; smallest wins.
    img = np.array([[0, 100, 200]], dtype=np.uint8)
    assert otsu_threshold(img) == otsu_oracle(img) == 1


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_otsu_oracle_equality_property(seed):
    rng = np.random.default_rng(seed)
    shape = (int(rng.integers(1, 24)), int(rng.integers(1, 24)))
    img = rng.integers(0, 256, size=shape, dtype=np.uint8)
    assert otsu_threshold(img) == otsu_oracle(img)


# ---------------------------------------------------------------------------
# Sauvola

def test_sauvola_uniform_image_is_all_background():
    img = np.full((40, 40), 180, dtype=np.uint8)
    out = sauvola_binarize(img, window=15, k=0.5, R=128)
    assert not out.any()


def test_sauvola_matches_naive_oracle():
    for trial in range(10):
        rng = substream(23, trial)
        img = rng.integers(0, 256, size=(64, 64), dtype=np.uint8)
        for window in (3, 15, 31):
            fast = sauvola_binarize(img, window=window, k=0.2, R=128)
            naive = sauvola_oracle(img, window=window, k=0.2, R=128)
            assert (fast == naive).all(), f"window={window} trial={trial}"


def test_sauvola_dark_stroke_on_light_ground():
    img = np.full((80, 80), 220, dtype=np.uint8)
    img[38:42, 10:70] = 30
    out = sauvola_binarize(img)  # defaults: window 31, k 0.2, R 128
    naive = sauvola_oracle(img, imaging.SAUVOLA_WINDOW, imaging.SAUVOLA_K, imaging.SAUVOLA_R)
    assert (out == naive).all()
    assert out[38:42, 10:70].all()
    assert not out[:20].any() and not out[60:].any()


@pytest.mark.parametrize("window,k,R", [(4, 0.2, 128), (1, 0.2, 128),
                                        (31, 0.0, 128), (31, 1.0, 128),
                                        (31, 0.2, 0)])
def test_sauvola_rejects_bad_parameters(window, k, R):
    img = np.full((10, 10), 100, dtype=np.uint8)
    with pytest.raises(ParameterError):
        sauvola_binarize(img, window=window, k=k, R=R)


# ---------------------------------------------------------------------------
# Rescale

def test_rescale_identity_when_already_target_size():
    rng = substream(31, 0)
    img = rng.integers(0, 256, size=(366, 256), dtype=np.uint8)
    out = rescale(img)
    assert (out == img).all()


def test_rescale_proportional_input_has_no_padding():
    rng = substream(31, 1)
    img = rng.integers(0, 200, size=(732, 512), dtype=np.uint8)
    out = rescale(img)
    assert out.shape == (366, 256)
    # Pure 2:1 downsample: border rows/cols come from the image, not padding.
    assert not (out[0] == 255).all() or not (out[-1] == 255).all()
    box = np.asarray(Image.fromarray(img).resize((256, 366), Image.Resampling.BOX))
    assert (out == box).all()


def test_rescale_pads_and_preserves_centroid():
    img = np.full((732, 1000), 255, dtype=np.uint8)
    img[100:140, 600:660] = 0  # dark blob
    out = rescale(img)
    assert out.shape == (366, 256)
    f = min(256 / 1000, 366 / 732)
    new_w, new_h = round(1000 * f), round(732 * f)
    oy, ox = (366 - new_h) // 2, (256 - new_w) // 2
    # white bands above/below the scaled strip
    assert (out[:oy] == 255).all() and (out[oy + new_h:] == 255).all()

    def centroid(a):
        weight = 255.0 - a.astype(np.float64)
        total = weight.sum()
        ys, xs = np.mgrid[0:a.shape[0], 0:a.shape[1]]
        return (ys * weight).sum() / total, (xs * weight).sum() / total

    cy, cx = centroid(img)
    oy_c, ox_c = centroid(out)
    assert abs(oy_c - (oy + (cy + 0.5) * f - 0.5)) <= 1.0
    assert abs(ox_c - (ox + (cx + 0.5) * f - 0.5)) <= 1.0


@given(st.integers(1, 900), st.integers(1, 900))
@settings(max_examples=25, deadline=None)
def test_rescale_output_shape_property(w, h):
    img = np.full((h, w), 90, dtype=np.uint8)
    assert rescale(img).shape == (366, 256)


# ---------------------------------------------------------------------------
# Rotate

def test_rotate_zero_angle_is_identity():
    img = strokes_page()
    assert (rotate(img, 0.0) == img).all()


def test_rotate_round_trip_preserves_foreground_count():
    img = strokes_page()
    before = int((img < 128).sum())
    back = rotate(rotate(img, 7.3), -7.3)
    after = int((back < 128).sum())
    assert abs(after - before) <= 0.05 * before


def test_rotate_center_pixel_is_fixed_point():
    img = np.full((65, 65), 255, dtype=np.uint8)
    img[32, 32] = 0
    for angle in (3.0, -11.0, 30.0, 45.0):
        out = rotate(img, angle)
        assert out[32, 32] == 0


def test_rotate_rejects_large_angles():
    img = np.full((10, 10), 128, dtype=np.uint8)
    with pytest.raises(ParameterError):
        rotate(img, 46.0)


# ---------------------------------------------------------------------------
# Noise

def test_salt_pepper_zero_probability_is_identity():
    img = strokes_page()
    out = add_salt_pepper(img, 0.0, substream(41, 0))
    assert (out == img).all()


def test_salt_pepper_full_probability_saturates():
    img = np.full((50, 50), 128, dtype=np.uint8)
    out = add_salt_pepper(img, 1.0, substream(41, 1))
    assert np.isin(out, (0, 255)).all()


def test_salt_pepper_change_rate_within_binomial_bounds():
    img = np.full((366, 256), 128, dtype=np.uint8)
    p = 0.05
    out = add_salt_pepper(img, p, substream(41, 2))
    changed = int((out != img).sum())
    n = img.size
    mean, sigma = n * p, math.sqrt(n * p * (1 - p))
    assert abs(changed - mean) <= 3 * sigma
    assert np.isin(out[out != img], (0, 255)).all()


def test_salt_pepper_deterministic_under_seed():
    img = strokes_page()
    a = add_salt_pepper(img, 0.1, substream(41, 3))
    b = add_salt_pepper(img, 0.1, substream(41, 3))
    assert (a == b).all()


class _LineSpec:
    def __init__(self, rate, color):
        self.line_artifact_rate = rate
        self.line_artifact_color = color


def test_line_artifacts_zero_rate_is_identity():
    img = strokes_page()
    out = add_line_artifacts(img, _LineSpec(0.0, "black"), substream(43, 0))
    assert (out == img).all()


def test_line_artifacts_poisson_tail():
    img = np.full((120, 160), 255, dtype=np.uint8)
    hits = 0
    for trial in range(100):
        out = add_line_artifacts(img, _LineSpec(3.0, "black"), substream(43, 1, trial))
        if (out == 0).any():
            hits += 1
    assert hits >= 95  # P(Poisson(3) = 0) ~ 0.0498


def test_line_artifacts_white_on_white_is_invisible():
    img = np.full((60, 60), 255, dtype=np.uint8)
    out = add_line_artifacts(img, _LineSpec(5.0, "white"), substream(43, 2))
    assert (out == img).all()


def test_binary_page_round_trip():
    rng = substream(47, 0)
    bits = rng.random((30, 40)) < 0.3
    img = imaging.binary_to_page(bits)
    assert np.isin(img, (0, 255)).all()
    assert (imaging.page_to_binary(img) == bits).all()
