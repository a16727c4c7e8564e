"""Document alignment from OCR output: words as keypoints, RANSAC homographies."""

__version__ = "0.1.0"

from .errors import (
    EstimationError,
    FormatError,
    GeometryError,
    InsufficientMatchesError,
    NoModelError,
    OcrAlignError,
)
from .estimation import EstimationResult, RansacConfig, dlt_homography, estimate_ransac, ransac_iterations
from .features import FeatureSet, WordFeature, extract_features, normalize_token
from .geometry import Homography, apply, compose, invert
from .ingest import Page, RawWord, parse_ocr, read_feature_file, write_feature_file
from .matching import Correspondence, MatchConfig, match_features
from .metrics import corner_reprojection_error, error_report, symmetric_transfer_error
