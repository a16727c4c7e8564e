import pytest

from ocralign.errors import FormatError
from ocralign.features import FeatureSet, WordFeature
from ocralign.matching import (
    AmbiguityPolicy, CoordinateFrame, Correspondence, MatchConfig, format_matches, match_features,
    match_statistics, parse_matches,
)


def fs(*items, size=(1000, 1000)):
    return FeatureSet(tuple(WordFeature(t, t, c, (c[0] - 1, c[1] - 1, 2, 2)) for t, c in items), *size)


def test_unique_tokens_pair_directly():
    a = fs(("court", (140, 60)), ("signed", (300, 400)))
    b = fs(("court", (150, 65)), ("signed", (310, 410)))
    m = match_features(a, b)
    assert [(c.token, c.src, c.dst, c.ambiguity_degree) for c in m] == [
        ("court", (140, 60), (150, 65), 1), ("signed", (300, 400), (310, 410), 1),
    ]


def _dates():
    a = fs(("date", (100, 100)), ("date", (800, 700)))
    b = fs(("date", (810, 705)), ("date", (110, 95)))
    return a, b


def test_duplicates_min_distance():
    a, b = _dates()
    m = match_features(a, b)
    assert [(c.src, c.dst, c.ambiguity_degree) for c in m] == [
        ((100, 100), (110, 95), 4), ((800, 700), (810, 705), 4),
    ]


def test_duplicates_dropped():
    a, b = _dates()
    assert match_features(a, b, MatchConfig(AmbiguityPolicy.DROP_AMBIGUOUS)) == []


def test_unequal_multiplicity_stops_when_one_side_exhausted():
    a = fs(("fee", (0, 0)), ("fee", (500, 500)), ("fee", (990, 990)))
    b = fs(("fee", (495, 505)))
    m = match_features(a, b)
    assert len(m) == 1 and m[0].src == (500, 500) and m[0].ambiguity_degree == 3


def test_unit_frame_versus_pixels():
    # page B is twice the size of page A; in pixels the wrong pairing is nearer
    a = fs(("x", (100, 100)), ("x", (400, 100)), size=(500, 500))
    b = fs(("x", (200, 200)), ("x", (800, 200)), size=(1000, 1000))
    unit = {(c.src, c.dst) for c in match_features(a, b)}
    px = {(c.src, c.dst) for c in match_features(a, b, MatchConfig(coordinate_frame=CoordinateFrame.PIXELS))}
    assert unit == {((100, 100), (200, 200)), ((400, 100), (800, 200))}
    assert px == {((100, 100), (200, 200)), ((400, 100), (800, 200))} or ((400, 100), (200, 200)) in px


def test_pixel_tie_break_is_deterministic():
    a = fs(("x", (0, 0)), ("x", (10, 0)))
    b = fs(("x", (5, 0)))
    m = match_features(a, b, MatchConfig(coordinate_frame="pixels"))
    assert m[0].src == (0, 0)


def test_no_shared_tokens():
    assert match_features(fs(("a", (1, 1))), fs(("b", (1, 1)))) == []


def test_statistics():
    m = [Correspondence((0, 0), (0, 0), f"t{k}", 4 if k < 2 else 1) for k in range(10)]
    s = match_statistics(m)
    assert (s.total, s.ambiguous, s.unambiguous, s.distinct_tokens) == (10, 2, 8, 10)
    assert s.fraction_ambiguous == 0.2
    e = match_statistics([])
    assert (e.total, e.ambiguous, e.unambiguous, e.distinct_tokens, e.fraction_ambiguous) == (0, 0, 0, 0, 0.0)


def test_flyer_scale_all_unique():
    tokens = [f"word{k}" for k in range(26)]
    a = fs(*[(t, (10 + 30 * k, 20)) for k, t in enumerate(tokens)])
    b = fs(*[(t, (12 + 30 * k, 25)) for k, t in enumerate(tokens[:20] + [f"other{k}" for k in range(6)])])
    assert match_statistics(match_features(a, b)).total == 20


def test_output_order():
    a = fs(("b", (1, 1)), ("a", (5, 5)), ("a", (2, 2)))
    b = fs(("a", (5, 5)), ("b", (1, 1)), ("a", (2, 2)))
    assert [(c.token, c.src) for c in match_features(a, b)] == [("a", (2, 2)), ("a", (5, 5)), ("b", (1, 1))]


def test_text_format_round_trip():
    m = [Correspondence((0.1, 2.0), (1e-17, 1234.5678901234), "o'clock", 4), Correspondence((1, 2), (3, 4), "x")]
    assert parse_matches(format_matches(m)) == m


def test_text_format_errors():
    with pytest.raises(FormatError):
        parse_matches("a\t1\t2\t3\n")
    with pytest.raises(FormatError):
        parse_matches("a\t1\t2\tx\t4\t1\n")
