"""Core Package for the Fourier filter bank

모델 구성 요소(hash grid, Fourier layer, sine MLP), reverse-mode tape, Adam optimizer를 포함합니다.
"""

from .errors import (
    CheckpointError,
    ConfigParseError,
    ConfigurationError,
    ImageFormatError,
    InputError,
    NffbError,
    NumericsError,
    StateError,
)
from .field_model import (
    FieldModel,
    FieldOutput,
    FilterBankConfig,
    Precision,
    VariantType,
    make_variant,
)
from .optimizer import AdamState, adam_step, lr_at

__all__ = [
    # Errors
    "NffbError",
    "ConfigurationError",
    "ConfigParseError",
    "InputError",
    "StateError",
    "NumericsError",
    "CheckpointError",
    "ImageFormatError",
    # Model
    "FieldModel",
    "FieldOutput",
    "FilterBankConfig",
    "Precision",
    "VariantType",
    "make_variant",
    # Optimizer
    "AdamState",
    "adam_step",
    "lr_at",
]
