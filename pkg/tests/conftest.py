import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nucshift.grid import Homography

settings.register_profile(
    "numeric", deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("numeric")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def small_homography(rng, shape, max_shift=0.8, max_angle_deg=1.0,
                     max_log_scale=0.004, max_persp=2e-6):
    """Random near-identity homography of the hover-error magnitude class.

    Rotation/scale about the image center plus a sub-pixel translation and a
    tiny perspective row, i.e. the kind of transform the drone-hover model
    produces after its corner-displacement rejection rule.
    """
    h, w = shape
    cs, ct = (w - 1) / 2.0, (h - 1) / 2.0
    ang = np.deg2rad(rng.uniform(-max_angle_deg, max_angle_deg))
    sc = np.exp(rng.uniform(-max_log_scale, max_log_scale))
    ts, tt = rng.uniform(-max_shift, max_shift, size=2)
    p1, p2 = rng.uniform(-max_persp, max_persp, size=2)
    rot = sc * np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
    m = np.eye(3)
    m[:2, :2] = rot
    m[0, 2] = cs - rot[0, 0] * cs - rot[0, 1] * ct + ts
    m[1, 2] = ct - rot[1, 0] * cs - rot[1, 1] * ct + tt
    m[2, 0] = p1
    m[2, 1] = p2
    return Homography.from_matrix(m)


def textured_image(rng, shape, smooth=2.0, lo=0.0, hi=255.0):
    """Smooth random texture with strong gradients, values in [lo, hi]."""
    from scipy.ndimage import gaussian_filter

    f = gaussian_filter(rng.standard_normal(shape), smooth, mode="reflect")
    f = f - f.min()
    rng_span = f.max() if f.max() > 0 else 1.0
    return lo + (hi - lo) * f / rng_span
