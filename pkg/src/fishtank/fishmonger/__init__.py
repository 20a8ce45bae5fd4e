from .coder import CodingError, code_length, decode_bits, encode_bits, model_probs
from .quantize import QuantizedEstimate, quantize
from .sketch import (
    BudgetExceeded,
    FishmongerFormatError,
    FishmongerParams,
    FishmongerSketch,
    decode,
    deserialize,
    encode,
    fm_estimate,
    fm_insert,
    fm_size_bits,
    load,
    save,
    serialize,
)

__all__ = [
    "BudgetExceeded",
    "CodingError",
    "FishmongerFormatError",
    "FishmongerParams",
    "FishmongerSketch",
    "QuantizedEstimate",
    "code_length",
    "decode",
    "decode_bits",
    "deserialize",
    "encode",
    "encode_bits",
    "fm_estimate",
    "fm_insert",
    "fm_size_bits",
    "load",
    "model_probs",
    "quantize",
    "save",
    "serialize",
]
