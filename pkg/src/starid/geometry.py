"""Pinhole camera geometry: projection, angular resolution, FOV containment.

All angles are radians unless a name says otherwise. Directions are unit
3-vectors; the camera looks along +z of its own frame, the sensor is a
square U x U pixel array with the principal point at its center.
"""

import math
from dataclasses import dataclass

import numpy as np

DEG_PER_RAD = 180.0 / math.pi


class DomainError(ValueError):
    """An argument is outside the physically meaningful range."""


class BehindCameraError(DomainError):
    """Direction has a non-positive boresight component; it cannot project."""


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics in pixel units.

    Attributes:
        fx, fy: focal lengths (pixels).
        cx, cy: principal point (pixels).
        pixels: side length U of the square sensor (pixel count).
        theta_fov: horizontal (= vertical) angle of view, radians.
    """

    fx: float
    fy: float
    cx: float
    cy: float
    pixels: int
    theta_fov: float

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise DomainError("focal lengths must be positive")
        if not 0.0 < self.theta_fov < math.pi:
            raise DomainError("theta_fov must be in (0, pi)")
        if self.pixels <= 0 or self.pixels % 2 != 0:
            raise DomainError("pixel count must be positive and even")

    @classmethod
    def from_fov(cls, pixels: int, theta_fov: float) -> "CameraIntrinsics":
        """Build centered intrinsics where the sensor edge sits at theta_fov/2."""
        if not 0.0 < theta_fov < math.pi:
            raise DomainError("theta_fov must be in (0, pi)")
        f = pixels / (2.0 * math.tan(theta_fov / 2.0))
        c = pixels / 2.0
        return cls(fx=f, fy=f, cx=c, cy=c, pixels=pixels, theta_fov=theta_fov)


def project_to_pixel(s_c, intrinsics: CameraIntrinsics) -> tuple[float, float]:
    """Project a camera-frame direction to pixel coordinates (u, v).

    Raises BehindCameraError when the z component is not positive.
    """
    x, y, z = float(s_c[0]), float(s_c[1]), float(s_c[2])
    if z <= 0.0:
        raise BehindCameraError("direction is behind the camera (z <= 0)")
    u = intrinsics.fx * (x / z) + intrinsics.cx
    v = intrinsics.fy * (y / z) + intrinsics.cy
    return u, v


def pixel_to_unit(u: float, v: float, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Invert the projection: pixel coordinates to a unit direction."""
    ut = (u - intrinsics.cx) / intrinsics.fx
    vt = (v - intrinsics.cy) / intrinsics.fy
    d = np.array([ut, vt, 1.0])
    return d / math.sqrt(ut * ut + vt * vt + 1.0)


def max_angular_resolution(theta_fov: float, pixels: int) -> float:
    """Worst-case (center-pixel) angular subtense of one pixel, radians."""
    if not 0.0 < theta_fov < math.pi:
        raise DomainError("theta_fov must be in (0, pi)")
    if pixels <= 0 or pixels % 2 != 0:
        raise DomainError("pixel count must be positive and even")
    return math.atan(2.0 * math.tan(theta_fov / 2.0) / pixels)


def resolution_to_nautical_miles(theta: float) -> float:
    """Convert an angle to sea distance: 1/60 degree of arc is one nautical mile."""
    if theta < 0.0:
        raise DomainError("angle must be non-negative")
    return theta * DEG_PER_RAD * 60.0


def angular_distance(s_i, s_j) -> float:
    """Great-circle angle between two unit vectors, in [0, pi]."""
    # Dot clamped: fp rounding can leave |dot| marginally above 1.
    dot = float(np.dot(s_i, s_j))
    return math.acos(max(-1.0, min(1.0, dot)))


def in_fov(s_c, theta_fov: float) -> bool:
    """True iff a camera-frame unit direction falls strictly inside the square FOV."""
    x, y, z = float(s_c[0]), float(s_c[1]), float(s_c[2])
    if z <= 0.0:
        return False
    t = math.tan(theta_fov / 2.0)
    return abs(x / z) < t and abs(y / z) < t


def fov_diagonal(theta_fov: float) -> float:
    """Largest angle two in-FOV directions can subtend (corner to corner)."""
    if not 0.0 < theta_fov < math.pi:
        raise DomainError("theta_fov must be in (0, pi)")
    return 2.0 * math.atan(math.sqrt(2.0) * math.tan(theta_fov / 2.0))


def resolution_table(fovs_deg, pixel_counts) -> list[dict]:
    """Resolution figures for every (FOV, pixel count) combination.

    Returns one row per cell with keys fov_deg, pixels, theta_res_rad,
    theta_res_deg, nautical_miles. Row order follows the input lists.
    """
    rows = []
    for fov_deg in fovs_deg:
        theta_fov = math.radians(fov_deg)
        for pixels in pixel_counts:
            theta_res = max_angular_resolution(theta_fov, pixels)
            rows.append(
                {
                    "fov_deg": float(fov_deg),
                    "pixels": int(pixels),
                    "theta_res_rad": theta_res,
                    "theta_res_deg": theta_res * DEG_PER_RAD,
                    "nautical_miles": resolution_to_nautical_miles(theta_res),
                }
            )
    return rows
