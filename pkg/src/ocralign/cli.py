"""Command-line interface.

Exit codes: 0 success, 2 usage or parse error, 3 I/O error, 4 the estimator
did not converge. Results go to files or stdout; diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Optional

from . import __version__
from .errors import EstimationError, FormatError, GeometryError, PlacementError
from .estimation import RansacConfig, Sampling, estimate_ransac
from .features import extract_features, filter_page, load_stopword_file
from .geometry import Homography
from .ingest import PARSERS, feature_payload_size, parse_ocr, read_feature_file, write_feature_file
from .matching import AmbiguityPolicy, CoordinateFrame, MatchConfig, match_features, match_statistics
from .matching import format_matches, parse_matches
from .metrics import corner_reprojection_error
from .synth import HomographyKind, SynthConfig, generate_pair
from .warp import read_pnm, warp_image, write_pnm

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_NO_CONVERGENCE = 4


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class PipelineConfig:
    """Everything one invocation needs, gathered from the parsed flags."""

    input_format: Optional[str] = None
    stopwords_path: Optional[str] = None
    match: MatchConfig = field(default_factory=MatchConfig)
    ransac: RansacConfig = field(default_factory=RansacConfig)
    out: Optional[str] = None

    @classmethod
    def from_args(cls, args) -> "PipelineConfig":
        match = MatchConfig(args.policy, args.frame) if hasattr(args, "policy") else MatchConfig()
        if hasattr(args, "threshold"):
            ransac = RansacConfig(
                confidence=args.confidence, error_rate=args.error_rate, threshold=args.threshold,
                max_iterations=args.max_iterations, adaptive=args.adaptive, seed=args.seed,
                sampling=args.sampling, refit_rounds=args.refit_rounds,
                local_optimization=args.local_optimization,
            )
        else:
            ransac = RansacConfig()
        return cls(getattr(args, "format", None), getattr(args, "stopwords", None), match, ransac,
                   getattr(args, "out", None))


def _diag(msg: str):
    print(f"ocralign: {msg}", file=sys.stderr)


def _read(path, binary=True):
    try:
        with open(path, "rb" if binary else "r", **({} if binary else {"encoding": "utf-8"})) as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}", EXIT_IO) from None


def _write(path, data):
    try:
        if isinstance(data, str):
            data = data.encode("utf-8")
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror or exc}", EXIT_IO) from None


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _load_json(path):
    try:
        return json.loads(_read(path))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CliError(f"{path}: invalid JSON: {exc}", EXIT_USAGE) from None


def _features_from_file(path):
    page = read_feature_file(_read(path), source_label=os.path.basename(path))
    # feature files are already filtered at extraction time
    return extract_features(page, stopwords=frozenset(), cap_fraction=None)


def _homography_from(data, path):
    try:
        return Homography.from_dict(data["homography"])
    except (KeyError, TypeError):
        raise CliError(f"{path}: no homography object", EXIT_USAGE) from None


def cmd_extract(args) -> int:
    cfg = PipelineConfig.from_args(args)
    stopwords = load_stopword_file(cfg.stopwords_path) if cfg.stopwords_path else None
    page = parse_ocr(_read(args.ocr_file), cfg.input_format, source_label=os.path.basename(args.ocr_file))
    cap = None if args.no_frequency_cap else args.cap_fraction
    kept = filter_page(page, stopwords, cap_fraction=cap, cap_min=args.cap_min)
    _write(cfg.out, write_feature_file(kept))
    print(f"words={len(kept.words)} payload_bytes={feature_payload_size(kept)}")
    return EXIT_OK


def cmd_match(args) -> int:
    cfg = PipelineConfig.from_args(args)
    matches = match_features(_features_from_file(args.features_a), _features_from_file(args.features_b), cfg.match)
    text = format_matches(matches)
    if cfg.out:
        _write(cfg.out, text)
    else:
        sys.stdout.write(text)
    stats = match_statistics(matches)
    _diag(f"matches={stats.total} ambiguous={stats.ambiguous} tokens={stats.distinct_tokens}")
    return EXIT_OK


def _run_estimate(matches, cfg: PipelineConfig) -> int:
    try:
        result = estimate_ransac(matches, cfg.ransac)
    except EstimationError as exc:
        raise CliError(f"no alignment: {exc}", EXIT_NO_CONVERGENCE) from None
    if cfg.out:
        _write(cfg.out, _dump_json(result.to_dict()))
    else:
        sys.stdout.write(_dump_json(result.to_dict()))
    print(f"mean_sqrt_ste_px={result.mean_sqrt_ste:.6g} inliers={len(result.inlier_indices)}/{len(matches)} "
          f"iterations_run={result.iterations_run}", file=sys.stdout if cfg.out else sys.stderr)
    if not result.converged:
        _diag(f"did not converge: {len(result.inlier_indices)} inliers at threshold {cfg.ransac.threshold}")
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def cmd_estimate(args) -> int:
    cfg = PipelineConfig.from_args(args)
    return _run_estimate(parse_matches(_read(args.matches, binary=False)), cfg)


def cmd_align(args) -> int:
    cfg = PipelineConfig.from_args(args)
    matches = match_features(_features_from_file(args.features_a), _features_from_file(args.features_b), cfg.match)
    if not matches:
        raise CliError("the two documents share no tokens", EXIT_NO_CONVERGENCE)
    return _run_estimate(matches, cfg)


def cmd_eval(args) -> int:
    h_est = _homography_from(_load_json(args.result_file), args.result_file)
    truth = _load_json(args.truth_file)
    h_true = _homography_from(truth, args.truth_file)
    width = args.page_width if args.page_width is not None else truth.get("page_width")
    height = args.page_height if args.page_height is not None else truth.get("page_height")
    if width is None or height is None:
        raise CliError("page dimensions are not in the truth file; pass --page-width/--page-height", EXIT_USAGE)
    err = corner_reprojection_error(h_est, h_true, width, height)
    print(f"corner_error_px={err:.6g}")
    return EXIT_OK


def cmd_warp(args) -> int:
    img = read_pnm(_read(args.image))
    h = _homography_from(_load_json(args.result_file), args.result_file)
    width = args.width if args.width is not None else img.width
    height = args.height if args.height is not None else img.height
    _write(args.out, write_pnm(warp_image(img, h, width, height)))
    return EXIT_OK


def cmd_synth(args) -> int:
    config = SynthConfig(
        word_count=args.word_count, vocabulary_size=args.vocabulary_size,
        page_width=args.page_width, page_height=args.page_height,
        centroid_noise_sigma=args.sigma, char_substitution_rate=args.char_substitution_rate,
        word_drop_rate=args.word_drop_rate, outlier_injection_rate=args.outlier_injection_rate,
        seed=args.seed, kind=args.kind, aabb_boxes=args.aabb_boxes,
    )
    pair = generate_pair(config)
    try:
        os.makedirs(args.out_dir, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create {args.out_dir}: {exc.strerror or exc}", EXIT_IO) from None
    for name, obj in (("a.json", pair.words_json("a")), ("b.json", pair.words_json("b")),
                      ("truth.json", pair.truth_json())):
        _write(os.path.join(args.out_dir, name), _dump_json(obj))
    print(f"words_a={len(pair.doc_a)} words_b={len(pair.doc_b)} "
          f"true_correspondences={len(pair.true_correspondences)}")
    return EXIT_OK


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _add_match_flags(p):
    p.add_argument("--policy", choices=[e.value for e in AmbiguityPolicy], default=AmbiguityPolicy.MIN_DISTANCE.value,
                   help="how to pair tokens that repeat on a page")
    p.add_argument("--frame", choices=[e.value for e in CoordinateFrame], default=CoordinateFrame.UNIT_NORMALIZED.value,
                   help="coordinates used for the duplicate-token distance")


def _add_ransac_flags(p):
    d = RansacConfig()
    p.add_argument("--threshold", type=_positive_float, default=d.threshold, help="inlier threshold in px")
    p.add_argument("--confidence", type=float, default=d.confidence)
    p.add_argument("--error-rate", type=float, default=d.error_rate)
    p.add_argument("--max-iterations", type=int, default=d.max_iterations)
    p.add_argument("--adaptive", action=argparse.BooleanOptionalAction, default=d.adaptive)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--sampling", choices=[e.value for e in Sampling], default=d.sampling.value)
    p.add_argument("--refit-rounds", type=int, default=d.refit_rounds)
    p.add_argument("--local-optimization", action=argparse.BooleanOptionalAction, default=d.local_optimization)
    p.add_argument("--out", help="result file (JSON); stdout if omitted")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ocralign", description="Align documents from their OCR output alone.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("extract", help="parse OCR output and write a feature file")
    p.add_argument("ocr_file")
    p.add_argument("--format", required=True, choices=sorted(PARSERS))
    p.add_argument("--stopwords", help="stopword list replacing the built-in English one")
    p.add_argument("--cap-fraction", type=float, default=0.02)
    p.add_argument("--cap-min", type=int, default=5)
    p.add_argument("--no-frequency-cap", action="store_true", help="keep frequent tokens")
    p.add_argument("--out", required=True, help="feature file to write")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("match", help="pair words between two feature files")
    p.add_argument("features_a")
    p.add_argument("features_b")
    _add_match_flags(p)
    p.add_argument("--out", help="match file; stdout if omitted")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("estimate", help="robustly fit a homography to a match file")
    p.add_argument("matches")
    _add_ransac_flags(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("align", help="match two feature files and estimate the homography")
    p.add_argument("features_a")
    p.add_argument("features_b")
    _add_match_flags(p)
    _add_ransac_flags(p)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("eval", help="corner reprojection error against a ground-truth file")
    p.add_argument("result_file")
    p.add_argument("truth_file")
    p.add_argument("--page-width", type=_positive_float)
    p.add_argument("--page-height", type=_positive_float)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("warp", help="warp a PGM/PPM image by an estimated homography")
    p.add_argument("image")
    p.add_argument("result_file")
    p.add_argument("--out", required=True)
    p.add_argument("--width", type=int)
    p.add_argument("--height", type=int)
    p.set_defaults(func=cmd_warp)

    d = SynthConfig()
    p = sub.add_parser("synth", help="generate a synthetic pair with ground truth")
    p.add_argument("--word-count", type=int, default=d.word_count)
    p.add_argument("--vocabulary-size", type=int, default=d.vocabulary_size)
    p.add_argument("--page-width", type=int, default=d.page_width)
    p.add_argument("--page-height", type=int, default=d.page_height)
    p.add_argument("--sigma", type=float, default=d.centroid_noise_sigma, help="centroid jitter in px")
    p.add_argument("--char-substitution-rate", type=float, default=d.char_substitution_rate)
    p.add_argument("--word-drop-rate", type=float, default=d.word_drop_rate)
    p.add_argument("--outlier-injection-rate", type=float, default=d.outlier_injection_rate)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--kind", choices=[k.value for k in HomographyKind], default=d.kind.value)
    p.add_argument("--aabb-boxes", action="store_true", help="report page-B boxes as axis-aligned hulls")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        _diag(f"error: {exc}")
        return exc.code
    except (FormatError, GeometryError, PlacementError, ValueError) as exc:
        _diag(f"error: {exc}")
        return EXIT_USAGE
    except OSError as exc:
        _diag(f"error: {exc}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
