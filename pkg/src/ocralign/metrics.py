"""Alignment error measures.

The headline number is the mean over correspondences of the square root of
each one's symmetric transfer error (a per-point distance in pixels). The
root of the mean, ``rms``, is reported alongside it.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import EmptyInputError
from .geometry import Homography, apply, apply_points, invert, page_corners
from .matching import Correspondence


@dataclass(frozen=True)
class ErrorReport:
    per_point: tuple[float, ...]
    mean: float
    median: float
    max: float
    count: int
    rms: float

    def summary(self) -> str:
        return (f"mean_sqrt_ste_px={self.mean:.4f} median_px={self.median:.4f} "
                f"max_px={self.max:.4f} rms_px={self.rms:.4f} n={self.count}")

    def to_dict(self) -> dict:
        return {
            "per_point": list(self.per_point), "mean": self.mean, "median": self.median,
            "max": self.max, "count": self.count, "rms": self.rms,
        }


def symmetric_transfer_error(h: Homography, c: Correspondence) -> float:
    """Squared forward residual plus squared backward residual, in px²."""
    fx, fy = apply(h, c.src)
    bx, by = apply(invert(h), c.dst)
    forward = (c.dst[0] - fx) ** 2 + (c.dst[1] - fy) ** 2
    backward = (c.src[0] - bx) ** 2 + (c.src[1] - by) ** 2
    return forward + backward


def sqrt_transfer_errors(m, m_inv, src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Vectorized per-point sqrt symmetric transfer error.

    Takes raw forward and inverse matrices so the estimation loop can skip
    building Homography objects for every candidate.
    """
    fwd = apply_points(m, src) - dst
    bwd = apply_points(m_inv, dst) - src
    return np.sqrt(np.einsum("ij,ij->i", fwd, fwd) + np.einsum("ij,ij->i", bwd, bwd))


def error_report(h: Homography, matches: Sequence[Correspondence]) -> ErrorReport:
    if not matches:
        raise EmptyInputError("error_report needs at least one correspondence")
    per_point = tuple(math.sqrt(symmetric_transfer_error(h, c)) for c in matches)
    return ErrorReport(
        per_point=per_point,
        mean=math.fsum(per_point) / len(per_point),
        median=statistics.median(per_point),
        max=max(per_point),
        count=len(per_point),
        rms=math.sqrt(math.fsum(e * e for e in per_point) / len(per_point)),
    )


def corner_reprojection_error(h_est: Homography, h_true: Homography, width, height) -> float:
    """Largest distance between the page corners mapped by the two transforms."""
    corners = page_corners(width, height)
    diff = apply_points(h_est, corners) - apply_points(h_true, corners)
    return float(np.max(np.hypot(diff[:, 0], diff[:, 1])))
