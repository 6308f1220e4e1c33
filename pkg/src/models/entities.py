"""Result records.

Rows written to metrics CSVs and the JSON/CSV reports of eval, ablate and sweep.
"""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel

METRICS_COLUMNS = ("step", "loss", "metric", "lr", "wall_seconds")


class MetricsRow(BaseModel):
    """One metrics line: PSNR (image task) or squared MAPE (SDF task) in ``metric``"""

    step: int
    loss: float
    metric: float
    lr: float
    wall_seconds: float

    def to_csv(self) -> str:
        return ",".join(
            [
                str(self.step),
                repr(float(self.loss)),
                repr(float(self.metric)),
                repr(float(self.lr)),
                repr(float(self.wall_seconds)),
            ]
        )


class ImageEvalReport(BaseModel):
    psnr: float
    ssim: float
    height: int
    width: int


class SdfEvalReport(BaseModel):
    surface_error: float
    iou: float
    n_samples: int
    grid: int


class AblationRow(BaseModel):
    variant: str
    parameters: int
    final_loss: float
    metric: float


class SweepRow(BaseModel):
    param: str
    value: float
    parameters: int
    final_loss: float
    metric: float
    metrics_path: Optional[str] = None
