"""Word features: normalized tokens located at bounding-box centroids."""

from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Optional

from .ingest import Page, RawWord

DEFAULT_CAP_FRACTION = 0.02
DEFAULT_CAP_MIN = 5


@dataclass(frozen=True)
class WordFeature:
    token: str
    raw_text: str
    centroid: tuple[float, float]
    bbox: tuple[float, float, float, float]
    confidence: Optional[float] = None

    @classmethod
    def from_box(cls, token, raw_text, left, top, width, height, confidence=None):
        return cls(
            token=token,
            raw_text=raw_text,
            centroid=(left + width / 2, top + height / 2),
            bbox=(left, top, width, height),
            confidence=confidence,
        )


@dataclass(frozen=True)
class FeatureSet:
    features: tuple[WordFeature, ...]
    page_width: float
    page_height: float
    source_label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        for f in self.features:
            x, y = f.centroid
            if not (0 <= x <= self.page_width and 0 <= y <= self.page_height):
                raise ValueError(f"centroid of {f.token!r} at ({x}, {y}) is off the page")

    def __len__(self):
        return len(self.features)

    def tokens(self) -> list[str]:
        return [f.token for f in self.features]


def _is_edge_char(ch: str) -> bool:
    return ch.isspace() or unicodedata.category(ch)[0] in "PS"


def normalize_token(raw: str) -> str:
    """Casefold and strip surrounding punctuation and symbols.

    Interior punctuation is kept ("o'clock" stays intact). A string that
    still contains whitespace after stripping is not a single word and
    normalizes to ``""``, as does a string of punctuation only.
    """
    s = unicodedata.normalize("NFC", raw).casefold()
    start, end = 0, len(s)
    while start < end and _is_edge_char(s[start]):
        start += 1
    while end > start and _is_edge_char(s[end - 1]):
        end -= 1
    s = s[start:end]
    if any(ch.isspace() for ch in s):
        return ""
    return s


def load_stopwords(lines: Iterable[str]) -> frozenset[str]:
    """Parse a stopword list: one token per line, ``#`` starts a comment."""
    out = set()
    for line in lines:
        line = line.split("#", 1)[0].strip()
        if line:
            token = normalize_token(line)
            if token:
                out.add(token)
    return frozenset(out)


def load_stopword_file(path) -> frozenset[str]:
    with open(path, encoding="utf-8") as fh:
        return load_stopwords(fh)


_DEFAULT_STOPWORDS = None


def default_stopwords() -> frozenset[str]:
    global _DEFAULT_STOPWORDS
    if _DEFAULT_STOPWORDS is None:
        text = resources.files("ocralign").joinpath("data/stopwords_en.txt").read_text("utf-8")
        _DEFAULT_STOPWORDS = load_stopwords(text.splitlines())
    return _DEFAULT_STOPWORDS


def frequency_cap(n_tokens: int, fraction=DEFAULT_CAP_FRACTION, minimum=DEFAULT_CAP_MIN) -> float:
    """Occurrence count above which a token counts as a document stopword."""
    return max(minimum, fraction * n_tokens)


def select_words(page: Page, stopwords=None, cap_fraction: Optional[float] = DEFAULT_CAP_FRACTION,
                 cap_min: int = DEFAULT_CAP_MIN) -> list[tuple[RawWord, str]]:
    """Return ``(word, token)`` for every word that survives filtering.

    ``cap_fraction=None`` disables the document-frequency filter. The filter
    is applied until nothing changes, so re-filtering its own output is a
    no-op.
    """
    if stopwords is None:
        stopwords = default_stopwords()
    kept = []
    for word in page.words:
        token = normalize_token(word.text)
        if token and token not in stopwords:
            kept.append((word, token))
    if cap_fraction is None:
        return kept
    while True:
        counts = Counter(t for _, t in kept)
        limit = frequency_cap(len(kept), cap_fraction, cap_min)
        frequent = {t for t, c in counts.items() if c > limit}
        if not frequent:
            return kept
        kept = [(w, t) for w, t in kept if t not in frequent]


def filter_page(page: Page, stopwords=None, cap_fraction=DEFAULT_CAP_FRACTION,
                cap_min=DEFAULT_CAP_MIN) -> Page:
    """The page restricted to the words :func:`extract_features` keeps."""
    kept = select_words(page, stopwords, cap_fraction, cap_min)
    return Page(tuple(w for w, _ in kept), page.page_width, page.page_height,
                dpi=page.dpi, source_label=page.source_label)


def extract_features(page: Page, stopwords=None, cap_fraction=DEFAULT_CAP_FRACTION,
                     cap_min=DEFAULT_CAP_MIN) -> FeatureSet:
    kept = select_words(page, stopwords, cap_fraction, cap_min)
    features = [
        WordFeature.from_box(token, w.text, w.left, w.top, w.width, w.height, w.confidence)
        for w, token in kept
    ]
    return FeatureSet(tuple(features), page.page_width, page.page_height, page.source_label)
