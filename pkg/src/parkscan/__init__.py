"""parkscan: vacant parking slot detection and reservation plumbing."""

from .config import ConfigError, LotConfig, load_config, parse_config
from .contours import (
    Contour,
    ContourSet,
    contour_area,
    find_external_contours,
    fit_ellipse_angle,
    min_area_rect,
)
from .detector import (
    DetectorParams,
    ManualBox,
    Module,
    SlotBox,
    SlotReport,
    SlotVerdict,
    annotate,
    classify_module,
    derive_boxes,
    detect,
    detect_stages,
    flexible_crop,
    judge_occupancy,
    remove_false_contours,
)
from .evaluate import EvalError, EvalResult, evaluate, evaluate_counts
from .imaging import (
    BinaryImage,
    GrayImage,
    Kernel,
    RgbImage,
    canny,
    dilate,
    erode,
    gaussian_1d,
    gaussian_blur_3x3,
    resize,
    to_grayscale,
    truncate_threshold,
)
from .netpbm import (
    MalformedHeaderError,
    MissingFileError,
    NetpbmError,
    TruncatedPayloadError,
    decode,
    decode_image,
    encode_pgm,
    encode_ppm,
)
from .synth import gen_synthetic, render_scene, sample_scene, synthetic_lot_config

__version__ = "0.1.0"
