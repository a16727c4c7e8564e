"""Homographies on the page plane.

A :class:`Homography` wraps a 3x3 float matrix kept in scale-normalized form
(``h33 == 1``). Matrices whose ``h33`` is numerically zero cannot take that
form; they are divided by their largest-magnitude entry instead and carry
``degenerate=True``.

Points are plain ``(x, y)`` pairs in pixels, origin top-left, y down.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    PointAtInfinityError,
    SingularMatrixError,
    ZeroMatrixError,
)

W_EPS = 1e-12
DET_EPS = 1e-12
H33_REL_EPS = 1e-8
COLLINEAR_REL_EPS = 1e-6


class Homography:
    """Scale-normalized 3x3 projective transform.

    Construct through :func:`normalize_scale` (or the helpers below) rather
    than directly; the constructor only validates.
    """

    __slots__ = ("_m", "_rows", "degenerate", "_inverse")

    def __init__(self, matrix, degenerate=False):
        m = np.array(matrix, dtype=np.float64)
        if m.shape != (3, 3):
            raise ValueError(f"homography must be 3x3, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise SingularMatrixError("homography has non-finite entries")
        if abs(np.linalg.det(m)) <= DET_EPS:
            raise SingularMatrixError("homography is singular")
        m.setflags(write=False)
        self._m = m
        # plain floats for the scalar path; numpy scalar indexing is slow
        self._rows = tuple(tuple(float(v) for v in row) for row in m)
        self.degenerate = bool(degenerate)
        self._inverse = None

    @property
    def matrix(self) -> np.ndarray:
        """Read-only view of the 3x3 matrix."""
        return self._m

    def __array__(self, dtype=None, copy=None):
        return np.array(self._m, dtype=dtype)

    def __eq__(self, other):
        if not isinstance(other, Homography):
            return NotImplemented
        return self.degenerate == other.degenerate and np.array_equal(self._m, other._m)

    def __hash__(self):
        return hash((self._m.tobytes(), self.degenerate))

    def __repr__(self):
        rows = ", ".join("[" + ", ".join(f"{v:.6g}" for v in row) + "]" for row in self._m)
        flag = ", degenerate=True" if self.degenerate else ""
        return f"Homography([{rows}]{flag})"

    def to_dict(self) -> dict:
        return {"h": [[float(v) for v in row] for row in self._m]}

    @classmethod
    def from_dict(cls, data) -> "Homography":
        try:
            m = np.array(data["h"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"not a homography object: {exc}") from exc
        return normalize_scale(m)


def normalize_scale(m) -> Homography:
    m = np.asarray(m, dtype=np.float64)
    fro = np.linalg.norm(m)
    if fro == 0.0:
        raise ZeroMatrixError("cannot normalize the zero matrix")
    if abs(m[2, 2]) > H33_REL_EPS * fro:
        return Homography(m / m[2, 2])
    flat = m.ravel()
    pivot = flat[np.argmax(np.abs(flat))]
    return Homography(m / pivot, degenerate=True)


def identity() -> Homography:
    return Homography(np.eye(3))


def translation(tx, ty) -> Homography:
    return Homography([[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]])


def apply(h: Homography, p) -> tuple[float, float]:
    """Map a single point through ``h``."""
    (a, b, c), (d, e, f), (g, h_, i) = h._rows
    x, y = float(p[0]), float(p[1])
    w = g * x + h_ * y + i
    if abs(w) <= W_EPS:
        raise PointAtInfinityError(f"({x}, {y}) maps to infinity")
    return ((a * x + b * y + c) / w, (d * x + e * y + f) / w)


def apply_points(m, pts: np.ndarray) -> np.ndarray:
    """Vectorized projective map of an (N, 2) array.

    ``m`` may be a Homography or a raw 3x3 array. Points at infinity raise.
    """
    m = np.asarray(m, dtype=np.float64)
    pts = np.asarray(pts, dtype=np.float64).reshape(-1, 2)
    q = pts @ m[:, :2].T + m[:, 2]
    w = q[:, 2:3]
    if (np.abs(w) <= W_EPS).any():
        raise PointAtInfinityError("a point maps to infinity")
    return q[:, :2] / w


def invert(h: Homography) -> Homography:
    # cached both ways so invert(invert(h)) is h itself, bit for bit
    if h._inverse is None:
        try:
            inv = np.linalg.inv(h.matrix)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrixError("homography is singular") from exc
        result = normalize_scale(inv)
        result._inverse = h
        h._inverse = result
    return h._inverse


def compose(a: Homography, b: Homography) -> Homography:
    """Return the transform applying ``b`` first, then ``a``."""
    return normalize_scale(a.matrix @ b.matrix)


def sample_is_degenerate(points) -> bool:
    """True if any three of the four points are (nearly) collinear.

    The cross-product tolerance scales with the squared bounding-box diagonal
    of the sample, so the test is unit-free.
    """
    pts = [(float(p[0]), float(p[1])) for p in np.asarray(points, dtype=np.float64).reshape(-1, 2)]
    if len(pts) != 4:
        raise ValueError(f"expected 4 points, got {len(pts)}")
    xs, ys = [p[0] for p in pts], [p[1] for p in pts]
    tol = COLLINEAR_REL_EPS * ((max(xs) - min(xs)) ** 2 + (max(ys) - min(ys)) ** 2)
    for i, j, k in ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)):
        ax, ay = pts[j][0] - pts[i][0], pts[j][1] - pts[i][1]
        bx, by = pts[k][0] - pts[i][0], pts[k][1] - pts[i][1]
        if abs(ax * by - ay * bx) <= tol:
            return True
    return False


def page_corners(width, height) -> np.ndarray:
    return np.array([[0.0, 0.0], [width, 0.0], [width, height], [0.0, height]])
