from .loglog import LogLogSketch
from .martingale import MartingaleSketch
from .params import (
    OffsetMode,
    SketchParams,
    cell_probs,
    default_width,
    keep_probs,
    offset_vector,
    pcsa_bit_prob,
)
from .pcsa import IncompatibleSketches, PcsaSketch, hit_matrices
from .serialize import SketchFormatError, deserialize, load, save, serialize


def merge(a, b):
    """Union of two compatible PCSA or LL sketches."""
    if isinstance(a, MartingaleSketch) or isinstance(b, MartingaleSketch):
        raise IncompatibleSketches("martingale sketches depend on insertion order and cannot be merged")
    return a.merge(b)


def transition_probability(sketch) -> float:
    return sketch.transition_probability()


__all__ = [
    "IncompatibleSketches",
    "LogLogSketch",
    "MartingaleSketch",
    "OffsetMode",
    "PcsaSketch",
    "SketchFormatError",
    "SketchParams",
    "cell_probs",
    "default_width",
    "deserialize",
    "hit_matrices",
    "keep_probs",
    "load",
    "merge",
    "offset_vector",
    "pcsa_bit_prob",
    "save",
    "serialize",
    "transition_probability",
]
