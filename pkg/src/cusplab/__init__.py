"""Exact Fourier-coefficient laboratory for Siegel modular forms and cusp form detection."""
from .errors import CuspLabError
from .matrices import (HalfIntMatrix, UnimodularMatrix, ReductionResult, automorph_count, definiteness,
                       embed_block, enumerate_classes, gram_transform, minkowski_reduce)
from .qexp import (FourierExpansion, HalfWeight, SupportVerdict, add, dilate, evaluate, multiply,
                   pullback, scale, support_verdict)

__version__ = "0.1.0"

__all__ = [
    "CuspLabError", "HalfIntMatrix", "UnimodularMatrix", "ReductionResult", "automorph_count", "definiteness",
    "embed_block", "enumerate_classes", "gram_transform", "minkowski_reduce", "FourierExpansion", "HalfWeight",
    "SupportVerdict", "add", "dilate", "evaluate", "multiply", "pullback", "scale", "support_verdict",
]
