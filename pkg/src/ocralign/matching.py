"""Word correspondences between two feature sets.

Words pair up by exact token equality. A token that occurs once on each page
pairs directly; repeated tokens are either resolved greedily by centroid
distance or dropped, depending on :class:`MatchConfig`.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

from .errors import FormatError
from .features import FeatureSet


class AmbiguityPolicy(str, Enum):
    MIN_DISTANCE = "min_distance"
    DROP_AMBIGUOUS = "drop_ambiguous"


class CoordinateFrame(str, Enum):
    PIXELS = "pixels"
    UNIT_NORMALIZED = "unit_normalized"


@dataclass(frozen=True)
class MatchConfig:
    ambiguity_policy: AmbiguityPolicy = AmbiguityPolicy.MIN_DISTANCE
    coordinate_frame: CoordinateFrame = CoordinateFrame.UNIT_NORMALIZED

    def __post_init__(self):
        object.__setattr__(self, "ambiguity_policy", AmbiguityPolicy(self.ambiguity_policy))
        object.__setattr__(self, "coordinate_frame", CoordinateFrame(self.coordinate_frame))


@dataclass(frozen=True)
class Correspondence:
    src: tuple[float, float]
    dst: tuple[float, float]
    token: str
    ambiguity_degree: int = 1
    # feature indices; None when read back from a match file
    src_index: Optional[int] = field(default=None, compare=False)
    dst_index: Optional[int] = field(default=None, compare=False)

    def swapped(self) -> "Correspondence":
        return Correspondence(self.dst, self.src, self.token, self.ambiguity_degree,
                              self.dst_index, self.src_index)


@dataclass(frozen=True)
class MatchStats:
    total: int
    unambiguous: int
    ambiguous: int
    distinct_tokens: int
    fraction_ambiguous: float


def _group(fs: FeatureSet) -> dict[str, list[int]]:
    groups = defaultdict(list)
    for i, f in enumerate(fs.features):
        groups[f.token].append(i)
    return groups


def match_features(a: FeatureSet, b: FeatureSet, config: MatchConfig = MatchConfig()) -> list[Correspondence]:
    ga, gb = _group(a), _group(b)
    if config.coordinate_frame is CoordinateFrame.UNIT_NORMALIZED:
        sa = (1.0 / a.page_width, 1.0 / a.page_height)
        sb = (1.0 / b.page_width, 1.0 / b.page_height)
    else:
        sa = sb = (1.0, 1.0)

    out = []
    for token in ga.keys() & gb.keys():
        ia, ib = ga[token], gb[token]
        degree = len(ia) * len(ib)
        if degree == 1:
            out.append((ia[0], ib[0], token, 1))
            continue
        if config.ambiguity_policy is AmbiguityPolicy.DROP_AMBIGUOUS:
            continue
        candidates = []
        for i in ia:
            pa = a.features[i].centroid
            for j in ib:
                pb = b.features[j].centroid
                d = math.hypot(pa[0] * sa[0] - pb[0] * sb[0], pa[1] * sa[1] - pb[1] * sb[1])
                candidates.append((d, pa, pb, i, j))
        candidates.sort()
        used_a, used_b = set(), set()
        need = min(len(ia), len(ib))
        for _, _, _, i, j in candidates:
            if i in used_a or j in used_b:
                continue
            used_a.add(i)
            used_b.add(j)
            out.append((i, j, token, degree))
            if len(used_a) == need:
                break

    matches = [
        Correspondence(a.features[i].centroid, b.features[j].centroid, token, degree, i, j)
        for i, j, token, degree in out
    ]
    matches.sort(key=lambda c: (c.token, c.src, c.dst))
    return matches


def match_statistics(matches: Sequence[Correspondence]) -> MatchStats:
    total = len(matches)
    ambiguous = sum(1 for m in matches if m.ambiguity_degree > 1)
    return MatchStats(
        total=total,
        unambiguous=total - ambiguous,
        ambiguous=ambiguous,
        distinct_tokens=len({m.token for m in matches}),
        fraction_ambiguous=ambiguous / total if total else 0.0,
    )


def format_matches(matches: Iterable[Correspondence]) -> str:
    """Line format: ``token, src_x, src_y, dst_x, dst_y, ambiguity``, tab-separated."""
    lines = [
        "\t".join([m.token, repr(float(m.src[0])), repr(float(m.src[1])),
                   repr(float(m.dst[0])), repr(float(m.dst[1])), str(m.ambiguity_degree)])
        for m in matches
    ]
    return "".join(line + "\n" for line in lines)


def parse_matches(text: str) -> list[Correspondence]:
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 6:
            raise FormatError(f"line {lineno}: expected 6 tab-separated fields, got {len(cols)}")
        try:
            sx, sy, dx, dy = (float(c) for c in cols[1:5])
            degree = int(cols[5])
        except ValueError:
            raise FormatError(f"line {lineno}: malformed number") from None
        out.append(Correspondence((sx, sy), (dx, dy), cols[0], degree))
    return out
