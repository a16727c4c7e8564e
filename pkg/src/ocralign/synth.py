"""Synthetic document pairs with known ground-truth homographies.

Page A gets non-overlapping word boxes at integer positions; page B is page A
seen through ``h_true`` and then corrupted the way OCR output tends to be:
words go missing, characters get misread, boxes jitter, and stray repeats
of real words show up elsewhere on the page.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources

import numpy as np

from . import geometry
from .errors import PlacementError
from .features import FeatureSet, WordFeature, default_stopwords, normalize_token
from .geometry import Homography, normalize_scale

CHAR_WIDTH = 12
WORD_HEIGHT = 20
PLACEMENT_ATTEMPTS = 1000
MIN_CORNER_W = 0.1
NOISE_CLIP = 4.0
PERSPECTIVE_LIMIT = 0.3

_LETTERS = string.ascii_lowercase


class HomographyKind(str, Enum):
    TRANSLATION = "translation"
    SIMILARITY = "similarity"
    AFFINE = "affine"
    PERSPECTIVE = "perspective"


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for :func:`generate_pair`.

    ``aabb_boxes`` makes page-B boxes the axis-aligned hull of the mapped
    page-A box, as a real OCR engine would report them. The hull's center
    is not the mapped centroid under rotation or perspective, so this mode
    deliberately biases the keypoints. By default page-B boxes have the
    hull's size but stay centered on the exact mapped centroid.
    """

    word_count: int = 200
    vocabulary_size: int = 1000
    page_width: int = 2200
    page_height: int = 1700
    centroid_noise_sigma: float = 0.0
    char_substitution_rate: float = 0.0
    word_drop_rate: float = 0.0
    outlier_injection_rate: float = 0.0
    seed: int = 0
    kind: HomographyKind = HomographyKind.PERSPECTIVE
    aabb_boxes: bool = False
    canvas_margin: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "kind", HomographyKind(self.kind))
        if self.word_count < 4:
            raise ValueError(f"word_count must be >= 4, got {self.word_count}")
        if not 1 <= self.vocabulary_size <= len(vocabulary()):
            raise ValueError(f"vocabulary_size must be in [1, {len(vocabulary())}]")
        if self.page_width <= 0 or self.page_height <= 0:
            raise ValueError("page dimensions must be positive")
        if self.canvas_margin < 0:
            raise ValueError("canvas_margin must be non-negative")
        if self.centroid_noise_sigma < 0:
            raise ValueError("centroid_noise_sigma must be non-negative")
        for name in ("char_substitution_rate", "word_drop_rate", "outlier_injection_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate < 1.0:
                raise ValueError(f"{name} must be in [0, 1), got {rate}")


@dataclass(frozen=True)
class GroundTruthPair:
    doc_a: FeatureSet
    doc_b: FeatureSet
    h_true: Homography
    true_correspondences: tuple[tuple[int, int], ...]
    config: SynthConfig = field(compare=False, default=None)

    def words_json(self, which: str) -> dict:
        """Words-JSON for one side, with geometry rounded to whole pixels."""
        fs = self.doc_a if which == "a" else self.doc_b
        words = []
        for f in fs.features:
            left, top, width, height = f.bbox
            x0, y0 = round(left), round(top)
            x1, y1 = round(left + width), round(top + height)
            words.append({"text": f.raw_text, "left": x0, "top": y0,
                          "width": max(1, x1 - x0), "height": max(1, y1 - y0)})
        return {"page": {"width": int(fs.page_width), "height": int(fs.page_height)}, "words": words}

    def truth_json(self) -> dict:
        return {
            "homography": self.h_true.to_dict(),
            "page_width": self.doc_a.page_width,
            "page_height": self.doc_a.page_height,
            "true_correspondences": [list(p) for p in self.true_correspondences],
        }


_VOCABULARY = None


def vocabulary() -> tuple[str, ...]:
    global _VOCABULARY
    if _VOCABULARY is None:
        text = resources.files("ocralign").joinpath("data/vocabulary_en.txt").read_text("utf-8")
        _VOCABULARY = tuple(l.strip() for l in text.splitlines() if l.strip() and not l.startswith("#"))
    return _VOCABULARY


def _about(center, m):
    """Conjugate a 3x3 matrix so it acts about ``center`` instead of the origin."""
    cx, cy = center
    to = np.array([[1.0, 0, cx], [0, 1.0, cy], [0, 0, 1.0]])
    back = np.array([[1.0, 0, -cx], [0, 1.0, -cy], [0, 0, 1.0]])
    return to @ m @ back


def _corner_w(m, width, height):
    corners = geometry.page_corners(width, height)
    return m[2, 0] * corners[:, 0] + m[2, 1] * corners[:, 1] + m[2, 2]


def make_random_homography(kind, page, seed) -> Homography:
    """Random page transform of the given kind, acting about the page center.

    Translation shifts are whole pixels, up to 20% of each page dimension.
    Each richer kind adds to the previous one: rotation within ±15° and scale
    in [0.8, 1.25], then an x-shear up to 0.1, then projective terms within
    ±0.3/max(page dims) (at most about 1.7:1 foreshortening across the page),
    redrawn until every page corner keeps w > 0.1.
    """
    kind = HomographyKind(kind)
    width, height = page
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    center = (width / 2.0, height / 2.0)

    tx = float(rng.integers(-int(0.2 * width), int(0.2 * width) + 1))
    ty = float(rng.integers(-int(0.2 * height), int(0.2 * height) + 1))
    shift = np.array([[1.0, 0, tx], [0, 1.0, ty], [0, 0, 1.0]])
    if kind is HomographyKind.TRANSLATION:
        return normalize_scale(shift)

    theta = math.radians(rng.uniform(-15.0, 15.0))
    scale = rng.uniform(0.8, 1.25)
    c, s = math.cos(theta), math.sin(theta)
    linear = np.array([[scale * c, -scale * s, 0], [scale * s, scale * c, 0], [0, 0, 1.0]])
    if kind in (HomographyKind.AFFINE, HomographyKind.PERSPECTIVE):
        shear = rng.uniform(-0.1, 0.1)
        linear = linear @ np.array([[1.0, shear, 0], [0, 1.0, 0], [0, 0, 1.0]])
    if kind is not HomographyKind.PERSPECTIVE:
        return normalize_scale(shift @ _about(center, linear))

    limit = PERSPECTIVE_LIMIT / max(width, height)
    while True:
        g, h = rng.uniform(-limit, limit, size=2)
        persp = np.array([[1.0, 0, 0], [0, 1.0, 0], [g, h, 1.0]])
        m = shift @ _about(center, linear @ persp)
        m = m / m[2, 2]
        if np.all(_corner_w(m, width, height) > MIN_CORNER_W):
            return normalize_scale(m)


def _place_boxes(rng, sizes, width, height):
    placed = np.empty((0, 4))  # x0, y0, x1, y1
    boxes = []
    for i, (bw, bh) in enumerate(sizes):
        if bw > width or bh > height:
            raise PlacementError(f"word {i} ({bw}x{bh}) does not fit on a {width}x{height} page")
        for _ in range(PLACEMENT_ATTEMPTS):
            x0 = int(rng.integers(0, width - bw + 1))
            y0 = int(rng.integers(0, height - bh + 1))
            overlap = (
                (placed[:, 0] < x0 + bw) & (x0 < placed[:, 2])
                & (placed[:, 1] < y0 + bh) & (y0 < placed[:, 3])
            )
            if not overlap.any():
                break
        else:
            raise PlacementError(
                f"could not place word {i} of {len(sizes)} without overlap after "
                f"{PLACEMENT_ATTEMPTS} attempts; lower word_count or enlarge the page"
            )
        placed = np.vstack([placed, [x0, y0, x0 + bw, y0 + bh]])
        boxes.append((x0, y0, bw, bh))
    return boxes


def _map_box(h, box, aabb):
    """Page-B box and keypoint for a page-A box."""
    left, top, bw, bh = box
    corners = np.array([[left, top], [left + bw, top], [left + bw, top + bh], [left, top + bh]], dtype=float)
    mapped = geometry.apply_points(h, corners)
    lo, hi = mapped.min(axis=0), mapped.max(axis=0)
    size = hi - lo
    if aabb:
        box = (float(lo[0]), float(lo[1]), float(size[0]), float(size[1]))
        return box, (box[0] + box[2] / 2, box[1] + box[3] / 2)
    cx, cy = geometry.apply(h, (left + bw / 2, top + bh / 2))
    # the keypoint is kept as computed; the box is only its footprint
    return (cx - size[0] / 2, cy - size[1] / 2, float(size[0]), float(size[1])), (cx, cy)


def _inside(box, width, height):
    left, top, bw, bh = box
    return left >= 0 and top >= 0 and left + bw <= width and top + bh <= height


def _substitute(rng, text, rate):
    if rate == 0.0:
        return text
    chars = list(text)
    for k, ch in enumerate(chars):
        if rng.random() < rate:
            chars[k] = rng.choice([c for c in _LETTERS if c != ch])
    return "".join(chars)


def generate_pair(config: SynthConfig) -> GroundTruthPair:
    rng = np.random.default_rng(config.seed)
    width, height = config.page_width, config.page_height
    margin = math.ceil(config.canvas_margin * max(width, height))
    width_b, height_b = width + 2 * margin, height + 2 * margin
    vocab = vocabulary()

    subset = rng.choice(len(vocab), size=config.vocabulary_size, replace=False)
    texts = [vocab[subset[k]] for k in rng.integers(config.vocabulary_size, size=config.word_count)]
    boxes_a = _place_boxes(rng, [(CHAR_WIDTH * len(t), WORD_HEIGHT) for t in texts], width, height)
    h_page = make_random_homography(config.kind, (width, height), int(rng.integers(2**63)))
    h_true = geometry.compose(geometry.translation(margin, margin), h_page)

    # page B entries: [source index or None, text, box, centroid]
    b_words = []
    for i, box in enumerate(boxes_a):
        mapped, centroid = _map_box(h_true, box, config.aabb_boxes)
        if _inside(mapped, width_b, height_b):
            b_words.append([i, texts[i], mapped, centroid])

    keep = rng.random(len(b_words)) >= config.word_drop_rate
    b_words = [w for w, k in zip(b_words, keep) if k]

    for w in b_words:
        w[1] = _substitute(rng, w[1], config.char_substitution_rate)

    sigma = config.centroid_noise_sigma
    if sigma > 0:
        for w in b_words:
            d = rng.normal(0.0, sigma, size=2)
            norm = math.hypot(d[0], d[1])
            if norm > NOISE_CLIP * sigma:
                d *= NOISE_CLIP * sigma / norm
            left, top, bw, bh = w[2]
            w[2] = (left + d[0], top + d[1], bw, bh)
            w[3] = (w[3][0] + d[0], w[3][1] + d[1])
        b_words = [w for w in b_words if _inside(w[2], width_b, height_b)]

    n_extra = round(config.outlier_injection_rate * config.word_count)
    if n_extra and b_words:
        for k in rng.integers(len(b_words), size=n_extra):
            _, text, (_, _, bw, bh), _ = b_words[k]
            bw, bh = min(bw, width_b), min(bh, height_b)
            left = rng.uniform(0, width_b - bw)
            top = rng.uniform(0, height_b - bh)
            b_words.append([None, text, (left, top, bw, bh), (left + bw / 2, top + bh / 2)])

    stopwords = default_stopwords()
    features_a = [WordFeature.from_box(t, t, *box) for t, box in zip(texts, boxes_a)]
    features_b, truth = [], []
    for pos in rng.permutation(len(b_words)):
        src, text, box, centroid = b_words[pos]
        token = normalize_token(text)
        if not token or token in stopwords:
            continue
        if src is not None and token == texts[src]:
            truth.append((src, len(features_b)))
        features_b.append(WordFeature(token, text, centroid, box))

    return GroundTruthPair(
        doc_a=FeatureSet(tuple(features_a), width, height, f"synth-{config.seed}-a"),
        doc_b=FeatureSet(tuple(features_b), width_b, height_b, f"synth-{config.seed}-b"),
        h_true=h_true,
        true_correspondences=tuple(sorted(truth)),
        config=config,
    )
