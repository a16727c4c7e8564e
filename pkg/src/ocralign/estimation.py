"""Homography estimation from word correspondences.

Normalized DLT for the linear fit and RANSAC over minimal 4-point samples
for robustness. The winning consensus set is refit until it stops changing
(bounded; one round reproduces the classic single refit).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from . import geometry
from .errors import (
    DegenerateConfigurationError,
    GeometryError,
    InsufficientMatchesError,
    NoModelError,
    RankDeficientError,
    SizeGuardError,
)
from .geometry import Homography, normalize_scale, sample_is_degenerate
from .matching import Correspondence
from .metrics import error_report, sqrt_transfer_errors, symmetric_transfer_error

MIN_SAMPLE = 4
EXHAUSTIVE_LIMIT = 20
RANK_EPS = 1e-12
SQRT2 = math.sqrt(2.0)


class Sampling(str, Enum):
    RANDOM = "random"
    EXHAUSTIVE = "exhaustive"


@dataclass(frozen=True)
class RansacConfig:
    """RANSAC parameters.

    ``threshold`` is compared against the square root of each match's
    symmetric transfer error, so it is a distance in pixels. With
    ``sampling="exhaustive"`` every 4-subset is visited in lexicographic
    order and ``confidence``/``error_rate``/``adaptive`` are ignored.

    ``refit_rounds`` bounds the final fit-on-inliers/reclassify loop, which
    stops early once the inlier set is stable; 1 gives the classic single
    refit. ``local_optimization`` runs the same loop on every candidate with
    at least five inliers before it is scored (random sampling only).
    """

    confidence: float = 0.99
    error_rate: float = 0.5
    threshold: float = 3.0
    max_iterations: int = 10000
    adaptive: bool = True
    seed: int = 0
    sampling: Sampling = Sampling.RANDOM
    refit_rounds: int = 10
    local_optimization: bool = True

    def __post_init__(self):
        object.__setattr__(self, "sampling", Sampling(self.sampling))
        if not 0.0 < self.confidence < 1.0:
            raise ValueError(f"confidence must be in (0, 1), got {self.confidence}")
        if not 0.0 <= self.error_rate < 1.0:
            raise ValueError(f"error_rate must be in [0, 1), got {self.error_rate}")
        if not self.threshold > 0:
            raise ValueError(f"threshold must be positive, got {self.threshold}")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.refit_rounds < 1:
            raise ValueError(f"refit_rounds must be >= 1, got {self.refit_rounds}")


@dataclass(frozen=True)
class EstimationResult:
    homography: Homography
    inlier_indices: tuple[int, ...]
    inliers: tuple[Correspondence, ...]
    iterations_run: int
    mean_sqrt_ste: float
    converged: bool
    # consensus set of the best minimal-sample model, before the refit
    pre_refit_inlier_indices: tuple[int, ...] = ()

    def to_dict(self) -> dict:
        return {
            "homography": self.homography.to_dict(),
            "inlier_indices": list(self.inlier_indices),
            "iterations_run": self.iterations_run,
            "mean_sqrt_ste": self.mean_sqrt_ste if math.isfinite(self.mean_sqrt_ste) else None,
            "converged": self.converged,
        }


def _points(matches: Sequence[Correspondence]):
    src = np.array([m.src for m in matches], dtype=np.float64).reshape(-1, 2)
    dst = np.array([m.dst for m in matches], dtype=np.float64).reshape(-1, 2)
    return src, dst


def _conditioner(pts: np.ndarray):
    n = pts.shape[0]
    c = pts.sum(axis=0) / n
    d = pts - c
    mean_dist = np.sqrt(d[:, 0] ** 2 + d[:, 1] ** 2).sum() / n
    if mean_dist == 0.0:
        raise DegenerateConfigurationError("all points coincide")
    s = SQRT2 / mean_dist
    return d * s, c, s


def dlt_matrix(src: np.ndarray, dst: np.ndarray) -> np.ndarray:
    """Normalized DLT on point arrays; returns a raw 3x3 matrix with h33 = 1.

    Raises DegenerateConfigurationError for collinear minimal samples and
    RankDeficientError when the null space is not one-dimensional.
    """
    n = src.shape[0]
    if n < MIN_SAMPLE:
        raise InsufficientMatchesError(f"DLT needs at least {MIN_SAMPLE} points, got {n}")
    if n == MIN_SAMPLE and (sample_is_degenerate(src) or sample_is_degenerate(dst)):
        raise DegenerateConfigurationError("three of the four points are collinear")

    ps, cs, ss = _conditioner(src)
    pd, cd, sd = _conditioner(dst)
    x, y = ps[:, 0], ps[:, 1]
    u, v = pd[:, 0], pd[:, 1]
    a = np.zeros((2 * n, 9))
    a[0::2, 0], a[0::2, 1], a[0::2, 2] = x, y, 1.0
    a[0::2, 6], a[0::2, 7], a[0::2, 8] = -u * x, -u * y, -u
    a[1::2, 3], a[1::2, 4], a[1::2, 5] = x, y, 1.0
    a[1::2, 6], a[1::2, 7], a[1::2, 8] = -v * x, -v * y, -v

    _, sv, vt = np.linalg.svd(a)
    sigma = np.zeros(9)
    sigma[: sv.size] = sv
    if sigma[7] - sigma[8] <= RANK_EPS * max(1.0, sigma[0]):
        raise RankDeficientError("DLT system has a degenerate null space")
    hn = vt[-1].reshape(3, 3)

    t_src = np.array([[ss, 0.0, -ss * cs[0]], [0.0, ss, -ss * cs[1]], [0.0, 0.0, 1.0]])
    t_dst_inv = np.array([[1.0 / sd, 0.0, cd[0]], [0.0, 1.0 / sd, cd[1]], [0.0, 0.0, 1.0]])
    h = t_dst_inv @ hn @ t_src
    if abs(h[2, 2]) <= geometry.H33_REL_EPS * np.linalg.norm(h):
        return normalize_scale(h).matrix
    return h / h[2, 2]


def dlt_homography(matches: Sequence[Correspondence]) -> Homography:
    src, dst = _points(matches)
    return normalize_scale(dlt_matrix(src, dst))


def ransac_iterations(p: float, e: float, s: int) -> int:
    """Samples needed to draw one all-inlier minimal set with probability p."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"confidence p must be in (0, 1), got {p}")
    if not 0.0 <= e < 1.0:
        raise ValueError(f"error rate e must be in [0, 1), got {e}")
    if s < 1:
        raise ValueError(f"sample size s must be >= 1, got {s}")
    good = (1.0 - e) ** s
    if good >= 1.0:
        # e == 0, or so small that every sample is clean in floating point
        return 1
    denom = math.log1p(-good)
    if denom == 0.0:
        # (1 - e)^s underflowed: no finite budget reaches the confidence
        return 2**63 - 1
    return max(1, math.ceil(math.log1p(-p) / denom))


def _safe_inverse(m: np.ndarray) -> np.ndarray:
    inv = np.linalg.inv(m)
    if not np.all(np.isfinite(inv)):
        raise np.linalg.LinAlgError("non-finite inverse")
    return inv


def _errors(m, m_inv, src, dst):
    try:
        return sqrt_transfer_errors(m, m_inv, src, dst)
    except GeometryError:
        pass
    # some point maps to infinity: score the model with those points as outliers
    with np.errstate(divide="ignore", invalid="ignore"):
        errs = _unchecked_sqrt_ste(m, m_inv, src, dst)
    errs[~np.isfinite(errs)] = np.inf
    return errs


def _unchecked_sqrt_ste(m, m_inv, src, dst):
    def project(h, p):
        q = np.column_stack([p, np.ones(len(p))]) @ h.T
        w = q[:, 2:3]
        out = q[:, :2] / w
        out[np.abs(w[:, 0]) <= geometry.W_EPS] = np.inf
        return out

    fwd = project(m, src) - dst
    bwd = project(m_inv, dst) - src
    return np.sqrt((fwd**2).sum(axis=1) + (bwd**2).sum(axis=1))


def _draw(rng, n):
    idx = []
    while len(idx) < MIN_SAMPLE:
        k = int(rng.integers(n))
        if k not in idx:
            idx.append(k)
    return idx


def _mean_inlier_error(errs, mask):
    return float(errs[mask].mean()) if mask.any() else math.inf


def _finish(matches, model, mask, iterations, pre_refit, threshold):
    h = normalize_scale(model)
    # classify with the normalized matrices that the result actually carries
    errs = _errors(h.matrix, geometry.invert(h).matrix, *_points(matches))
    mask = errs <= threshold
    idx = tuple(int(i) for i in np.flatnonzero(mask))
    inliers = tuple(matches[i] for i in idx)
    mean = error_report(h, inliers).mean if inliers else math.inf
    return EstimationResult(
        homography=h,
        inlier_indices=idx,
        inliers=inliers,
        iterations_run=iterations,
        mean_sqrt_ste=mean,
        converged=len(idx) >= MIN_SAMPLE,
        pre_refit_inlier_indices=pre_refit,
    )


def estimate_ransac(matches: Sequence[Correspondence], config: RansacConfig = RansacConfig()) -> EstimationResult:
    n = len(matches)
    if n < MIN_SAMPLE:
        raise InsufficientMatchesError(f"need at least {MIN_SAMPLE} matches, got {n}")
    src, dst = _points(matches)
    tau = config.threshold

    if config.sampling is Sampling.EXHAUSTIVE:
        samples = itertools.combinations(range(n), MIN_SAMPLE)
        budget = math.comb(n, MIN_SAMPLE)
        adaptive = False
        max_skips = budget
        lo = False
    else:
        rng = np.random.default_rng(config.seed)
        samples = None
        budget = min(config.max_iterations, ransac_iterations(config.confidence, config.error_rate, MIN_SAMPLE))
        adaptive = config.adaptive
        max_skips = 10 * budget + 100
        lo = config.local_optimization

    best = None  # (count, mean error, matrix, mask)
    iterations = skips = 0
    while iterations < budget and skips < max_skips:
        if samples is None:
            idx = _draw(rng, n)
        else:
            idx = next(samples, None)
            if idx is None:
                break
            idx = list(idx)
        try:
            m = dlt_matrix(src[idx], dst[idx])
            m_inv = _safe_inverse(m)
        except (GeometryError, np.linalg.LinAlgError):
            skips += 1
            continue
        iterations += 1
        errs = _errors(m, m_inv, src, dst)
        mask = errs <= tau
        if lo and mask.sum() > MIN_SAMPLE:
            refined = _refine(src, dst, m, mask, tau, config.refit_rounds)
            if refined[1].sum() >= mask.sum():
                m, mask, errs = refined
        count = int(mask.sum())
        mean = _mean_inlier_error(errs, mask)
        if best is None or count > best[0] or (count == best[0] and mean < best[1]):
            best = (count, mean, m, mask)
            if adaptive:
                e_hat = 1.0 - count / n
                budget = max(iterations, min(budget, ransac_iterations(config.confidence, e_hat, MIN_SAMPLE)))

    if best is None:
        raise NoModelError(f"no non-degenerate 4-sample among {skips} draws")

    count, _, model, mask = best
    pre_refit = tuple(int(i) for i in np.flatnonzero(mask))
    if count >= MIN_SAMPLE:
        model, mask, _ = _refine(src, dst, model, mask, tau, config.refit_rounds)
    return _finish(matches, model, mask, iterations, pre_refit, tau)


def _refine(src, dst, model, mask, tau, rounds):
    """Alternate fit-on-inliers and reclassification, at most ``rounds`` times.

    Stops at the first stable inlier set. A refit that fails or would leave
    fewer than four inliers is discarded and the previous state kept.
    """
    errs = None
    for _ in range(rounds):
        try:
            refit = dlt_matrix(src[mask], dst[mask])
            new_errs = _errors(refit, _safe_inverse(refit), src, dst)
        except (GeometryError, np.linalg.LinAlgError):
            break
        new_mask = new_errs <= tau
        if new_mask.sum() < MIN_SAMPLE:
            break
        model, errs = refit, new_errs
        if np.array_equal(new_mask, mask):
            break
        mask = new_mask
    if errs is None:
        errs = _errors(model, _safe_inverse(model), src, dst)
    return model, mask, errs


def exhaustive_best_model(matches: Sequence[Correspondence], threshold: float) -> EstimationResult:
    """Score every 4-subset; the ground truth that RANSAC approximates.

    Scoring goes through the scalar per-correspondence metric rather than
    the vectorized path used by :func:`estimate_ransac`. No refit.
    """
    n = len(matches)
    if n > EXHAUSTIVE_LIMIT:
        raise SizeGuardError(f"exhaustive search is limited to {EXHAUSTIVE_LIMIT} matches, got {n}")
    if n < MIN_SAMPLE:
        raise InsufficientMatchesError(f"need at least {MIN_SAMPLE} matches, got {n}")

    best = None
    evaluated = 0
    for combo in itertools.combinations(range(n), MIN_SAMPLE):
        sample = [matches[i] for i in combo]
        if sample_is_degenerate([c.src for c in sample]) or sample_is_degenerate([c.dst for c in sample]):
            continue
        try:
            h = dlt_homography(sample)
            geometry.invert(h)
        except GeometryError:
            continue
        evaluated += 1
        inlier_idx, errors = [], []
        for i, c in enumerate(matches):
            try:
                e = math.sqrt(symmetric_transfer_error(h, c))
            except GeometryError:
                continue
            if e <= threshold:
                inlier_idx.append(i)
                errors.append(e)
        mean = math.fsum(errors) / len(errors) if errors else math.inf
        if best is None or len(inlier_idx) > len(best[1]) or (len(inlier_idx) == len(best[1]) and mean < best[2]):
            best = (h, inlier_idx, mean)

    if best is None:
        raise NoModelError("every 4-subset is degenerate")
    h, inlier_idx, mean = best
    return EstimationResult(
        homography=h,
        inlier_indices=tuple(inlier_idx),
        inliers=tuple(matches[i] for i in inlier_idx),
        iterations_run=evaluated,
        mean_sqrt_ste=mean,
        converged=len(inlier_idx) >= MIN_SAMPLE,
        pre_refit_inlier_indices=tuple(inlier_idx),
    )


def result_from_dict(data: dict, matches: Optional[Sequence[Correspondence]] = None) -> EstimationResult:
    """Rebuild a result read from JSON; inliers resolve only if ``matches`` is given."""
    h = Homography.from_dict(data["homography"])
    idx = tuple(int(i) for i in data.get("inlier_indices", ()))
    inliers = tuple(matches[i] for i in idx) if matches is not None else ()
    mean = data.get("mean_sqrt_ste")
    return EstimationResult(
        homography=h,
        inlier_indices=idx,
        inliers=inliers,
        iterations_run=int(data.get("iterations_run", 0)),
        mean_sqrt_ste=math.inf if mean is None else float(mean),
        converged=bool(data.get("converged", False)),
    )
