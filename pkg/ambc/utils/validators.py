import re
from typing import Iterable, Sequence

import numpy as np

from ambc.utils.exceptions import DimensionError, ValidationError


class Validators:
    @staticmethod
    def validate_override(item: str) -> bool:
        pattern = r'^\s*[A-Za-z_][A-Za-z0-9_]*\s*=.*$'
        return bool(re.match(pattern, item))

    @staticmethod
    def validate_label(label: str) -> bool:
        pattern = r'^[A-Za-z0-9_.-]{1,64}$'
        return bool(re.match(pattern, label))

    @staticmethod
    def normalize_seed(seed: int) -> int:
        """Map any integer onto the unsigned 64-bit range"""
        return int(seed) % (1 << 64)

    @staticmethod
    def require_shape(name: str, array: np.ndarray, shape: Sequence[int]):
        if tuple(array.shape) != tuple(shape):
            raise DimensionError(f"{name} has shape {tuple(array.shape)}, expected {tuple(shape)}")

    @staticmethod
    def require_finite(name: str, array: np.ndarray):
        if not np.all(np.isfinite(array)):
            raise ValidationError(f"{name} contains non-finite values")

    @staticmethod
    def require_index(m: int, count: int):
        if not 0 <= m < count:
            raise ValidationError(f"BD index {m} out of range [0, {count})")

    @staticmethod
    def require_non_empty(name: str, values: Iterable):
        if not list(values):
            raise ValidationError(f"{name} must not be empty")
