"""Training task abstraction

학습 루프가 작업 종류(이미지, SDF)와 무관하게 동작하도록 하는 추상 계층입니다.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from enum import Enum

import numpy as np

from src.core.field_model import FieldModel
from src.core.tape import Tape, Var


class TaskType(str, Enum):
    """학습 작업 유형"""

    image = "image"
    sdf = "sdf"


class FieldTask(ABC):
    """Source of supervised batches plus the loss and evaluation metric of one task"""

    task_type: TaskType
    n_input: int
    d_out: int

    def __init__(self, batch_size: int):
        self.batch_size = batch_size

    @abstractmethod
    def sample_batch(self, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """Model inputs in ``[0,1]^n`` and their targets"""
        pass

    @abstractmethod
    def loss(self, tape: Tape, prediction: Var, target: np.ndarray) -> Var:
        """Record the task loss (a batch mean) on ``tape``"""
        pass

    @abstractmethod
    def evaluate(self, model: FieldModel, chunk_size: int = 8192) -> float:
        """Value of the ``metric`` column"""
        pass
