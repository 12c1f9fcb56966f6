"""Binary autoencoder channel codes: two-phase training and a coding-theory workbench."""

__version__ = "0.1.0"

from .classic import Codebook, hamming74_codebook, ml_decode, exact_bler_perfect74
from .autoencoder import TrainConfig, TrainedModel, train, train_with_restarts, extract_codebook
from .analysis import analyze, distance_spectrum, min_distance, check_linearity, hamming_equivalence
from .evaluation import EvalConfig, BlerCurve, run_bler, compare_curves

__all__ = [
    "Codebook", "hamming74_codebook", "ml_decode", "exact_bler_perfect74",
    "TrainConfig", "TrainedModel", "train", "train_with_restarts", "extract_codebook",
    "analyze", "distance_spectrum", "min_distance", "check_linearity", "hamming_equivalence",
    "EvalConfig", "BlerCurve", "run_bler", "compare_curves",
]
