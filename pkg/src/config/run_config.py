"""Run configuration

`key = value` 줄 단위 설정 파일을 파싱해 RunConfig를 만듭니다.

    # comment
    [run]
    task = sdf
    steps = 2000

    [model]
    alpha = 45

키 이름은 섹션 전체에서 유일하므로 섹션 헤더는 생략할 수 있습니다.
쓰지 않은 키는 preset 값(없으면 기본값)으로 채워지고, 명시한 키가 항상 우선합니다.
"""

from __future__ import annotations

from enum import Enum
from pathlib import Path
from typing import Any, Mapping, Optional

import orjson
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.config.settings import settings
from src.core.errors import ConfigParseError, ConfigurationError
from src.core.field_model import FilterBankConfig, Precision, VariantType
from src.pipeline.tasks.base import TaskType
from src.pipeline.tasks.oracles import ShapeType


class PresetName(str, Enum):
    """Hyperparameter presets"""

    auto = "auto"
    none = "none"
    tokyo = "tokyo"
    einstein = "einstein"
    sdf = "sdf"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class RunSection(_Section):
    task: TaskType = TaskType.image
    variant: VariantType = VariantType.full
    preset: PresetName = PresetName.auto
    steps: int = Field(default=1000, ge=0)
    batch_size: int = Field(default=16384, ge=1)
    seed: int = Field(default=0, ge=0)
    deterministic: bool = False
    log_every: int = Field(default=100, ge=0)
    checkpoint_every: int = Field(default=0, ge=0)
    output_dir: str = Field(default_factory=lambda: settings.output_dir)


class ModelSection(_Section):
    n_levels: int = Field(default=8, ge=1)
    width: int = Field(default=96, ge=1)
    alpha: float = Field(default=100.0, gt=0)
    alpha_per_layer: Optional[list[float]] = None
    precision: Precision = Precision.float32


class GridSection(_Section):
    n_min: int = Field(default=64, ge=1)
    c_g: float = Field(default=1.5, ge=1.0)
    log2_hashmap_size: int = Field(default=19, ge=1, le=30)
    n_features: int = Field(default=2, ge=1)


class FourierSection(_Section):
    sigma_min: float = Field(default=5.0, gt=0)
    c_f: float = Field(default=2.0, ge=1.0)


class OptimSection(_Section):
    base_lr: float = Field(default=1e-4, gt=0)
    lr_decay_every: int = Field(default=5000, ge=1)
    lr_decay_factor: float = Field(default=0.5, gt=0)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.99, ge=0, lt=1)
    adam_eps: float = Field(default=1e-8, gt=0)
    sparse_tables: bool = True
    scale_sine_lr: bool = True


class ImageSection(_Section):
    image_path: Optional[str] = None
    exhaustive: bool = False


class SdfSection(_Section):
    shape: ShapeType = ShapeType.sphere
    radius: float = Field(default=0.5, gt=0)
    half_extents: tuple[float, float, float] = (0.3, 0.3, 0.3)
    major_radius: float = Field(default=0.5, gt=0)
    minor_radius: float = Field(default=0.2, gt=0)
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    # union = union_a ∪ union_b
    union_a: ShapeType = ShapeType.sphere
    union_b: ShapeType = ShapeType.box
    center_a: tuple[float, float, float] = (-0.25, 0.0, 0.0)
    center_b: tuple[float, float, float] = (0.25, 0.0, 0.0)
    points_path: Optional[str] = None
    near_surface_sigma: float = Field(default=0.01, gt=0)
    epsilon: float = Field(default=0.01, gt=0)
    split: tuple[float, float, float] = (0.2, 0.3, 0.5)
    surface_tolerance: float = Field(default=1e-3, gt=0)
    eval_samples: int = Field(default=10_000, ge=1)
    eval_grid: int = Field(default=64, ge=2)
    eval_batch_size: int = Field(default=4096, ge=1)


SECTIONS: dict[str, type[_Section]] = {
    "run": RunSection,
    "model": ModelSection,
    "grid": GridSection,
    "fourier": FourierSection,
    "optim": OptimSection,
    "image": ImageSection,
    "sdf": SdfSection,
}

# key -> section
KEY_SECTIONS: dict[str, str] = {key: name for name, section in SECTIONS.items() for key in section.model_fields}

PRESETS: dict[PresetName, dict[str, dict[str, Any]]] = {
    PresetName.tokyo: {
        "model": {"alpha": 100.0, "width": 96, "n_levels": 8},
        "grid": {"n_min": 64, "c_g": 1.5, "log2_hashmap_size": 19},
        "fourier": {"sigma_min": 5.0, "c_f": 2.0},
    },
    PresetName.einstein: {
        "model": {"alpha": 100.0, "width": 256, "n_levels": 8},
        "grid": {"n_min": 64, "c_g": 2.0, "log2_hashmap_size": 17},
        "fourier": {"sigma_min": 10.0, "c_f": 2.0},
    },
    PresetName.sdf: {
        "run": {"batch_size": 49152},
        "model": {"alpha": 45.0, "width": 256, "n_levels": 5},
        "grid": {"n_min": 8, "c_g": 1.3, "log2_hashmap_size": 19},
        "fourier": {"sigma_min": 5.0, "c_f": 1.2},
    },
}

# sweep parameter -> section
SWEEP_PARAMS: dict[str, str] = {
    "n_min": "grid",
    "c_g": "grid",
    "sigma_min": "fourier",
    "c_f": "fourier",
    "alpha": "model",
    "width": "model",
    "n_levels": "model",
    "log2_hashmap_size": "grid",
}

_LIST_KEYS = {"alpha_per_layer", "half_extents", "center", "center_a", "center_b", "split"}


class RunConfig(BaseModel):
    """Fully resolved run configuration"""

    model_config = ConfigDict(extra="forbid")

    run: RunSection = Field(default_factory=RunSection)
    model: ModelSection = Field(default_factory=ModelSection)
    grid: GridSection = Field(default_factory=GridSection)
    fourier: FourierSection = Field(default_factory=FourierSection)
    optim: OptimSection = Field(default_factory=OptimSection)
    image: ImageSection = Field(default_factory=ImageSection)
    sdf: SdfSection = Field(default_factory=SdfSection)

    @property
    def resolved_preset(self) -> PresetName:
        if self.run.preset != PresetName.auto:
            return self.run.preset
        return PresetName.sdf if self.run.task == TaskType.sdf else PresetName.tokyo

    def filter_bank_config(self) -> FilterBankConfig:
        """Model hyperparameters for this run's task"""
        is_image = self.run.task == TaskType.image
        return FilterBankConfig.from_values(
            n_input=2 if is_image else 3,
            d_out=3 if is_image else 1,
            n_levels=self.model.n_levels,
            width=self.model.width,
            alpha=self.model.alpha,
            alpha_per_layer=self.model.alpha_per_layer,
            n_min=self.grid.n_min,
            c_g=self.grid.c_g,
            log2_hashmap_size=self.grid.log2_hashmap_size,
            n_features=self.grid.n_features,
            sigma_min=self.fourier.sigma_min,
            c_f=self.fourier.c_f,
            seed=self.run.seed,
            precision=self.model.precision,
        )

    def with_overrides(self, **values: Any) -> RunConfig:
        """Copy with individual keys replaced (``None`` values are skipped)"""
        data = self.model_dump(mode="json")
        for key, value in values.items():
            if value is None:
                continue
            section = KEY_SECTIONS.get(key)
            if section is None:
                raise ConfigurationError(f"Unknown config key: {key}")
            data[section][key] = value.value if isinstance(value, Enum) else value
        return RunConfig.from_data(data)

    def with_param(self, name: str, value: float) -> RunConfig:
        """Copy with one sweepable hyperparameter replaced"""
        if name not in SWEEP_PARAMS:
            raise ConfigurationError(f"'{name}' is not sweepable; choose one of {', '.join(SWEEP_PARAMS)}")
        section = SECTIONS[SWEEP_PARAMS[name]]
        if section.model_fields[name].annotation is int:
            if float(value) != int(value):
                raise ConfigurationError(f"{name} takes integer values, got {value}")
            value = int(value)
        return self.with_overrides(**{name: value})

    def require_inputs(self) -> None:
        """Check that the input file of the task is configured"""
        if self.run.task == TaskType.image and not self.image.image_path:
            raise ConfigurationError("image task needs an image path (image_path or --image)")
        if self.run.task == TaskType.sdf and self.sdf.shape == ShapeType.file and not self.sdf.points_path:
            raise ConfigurationError("shape = file needs a point file (points_path or --points)")

    @classmethod
    def from_data(cls, data: dict[str, Any]) -> RunConfig:
        try:
            return cls.model_validate(data)
        except ValidationError as e:
            raise ConfigurationError(f"Invalid run config: {e}") from e

    def to_json(self) -> bytes:
        return orjson.dumps(self.model_dump(mode="json"), option=orjson.OPT_SORT_KEYS)

    @classmethod
    def from_json(cls, raw: bytes | str) -> RunConfig:
        try:
            data = orjson.loads(raw)
        except orjson.JSONDecodeError as e:
            raise ConfigurationError(f"Invalid run config JSON: {e}") from e
        return cls.from_data(data)

    def echo(self) -> str:
        """Config in the file grammar; parse_config(echo()) gives the same config"""
        lines = [f"# preset: {self.resolved_preset.value}"]
        for name in SECTIONS:
            lines.append(f"[{name}]")
            for key, value in self.model_dump(mode="json")[name].items():
                if value is None:
                    continue
                if isinstance(value, list):
                    value = ", ".join(repr(float(v)) if isinstance(v, float) else str(v) for v in value)
                elif isinstance(value, bool):
                    value = "true" if value else "false"
                elif isinstance(value, float):
                    value = repr(value)
                lines.append(f"{key} = {value}")
            lines.append("")
        return "\n".join(lines)


def _strip_value(raw: str) -> str:
    value = raw.strip()
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
        value = value[1:-1]
    return value


def _tokenize(text: str) -> tuple[dict[str, dict[str, Any]], dict[tuple[str, str], int]]:
    """Raw values per section and the line each key came from"""
    values: dict[str, dict[str, Any]] = {name: {} for name in SECTIONS}
    lines: dict[tuple[str, str], int] = {}
    current: str | None = None

    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigParseError(f"malformed section header '{line}'", line=number)
            current = line[1:-1].strip().lower()
            if current not in SECTIONS:
                raise ConfigParseError(f"unknown section [{current}]", line=number)
            continue
        if "=" not in line:
            raise ConfigParseError(f"expected 'key = value', got '{line}'", line=number)

        key, raw_value = line.split("=", 1)
        key = key.strip().lower()
        section = KEY_SECTIONS.get(key)
        if section is None or (current is not None and section != current):
            where = f" in [{current}]" if current else ""
            raise ConfigParseError(f"unknown key '{key}'{where}", key=key, line=number)
        if (section, key) in lines:
            raise ConfigParseError(
                f"duplicate key '{key}' (first set on line {lines[(section, key)]})", key=key, line=number
            )

        value: Any = _strip_value(raw_value)
        if key in _LIST_KEYS:
            value = [item.strip() for item in value.split(",") if item.strip()]
        values[section][key] = value
        lines[(section, key)] = number

    return values, lines


def _preset_of(values: dict[str, dict[str, Any]], lines: dict[tuple[str, str], int]) -> PresetName:
    run = values["run"]
    parsed: dict[str, Enum] = {}
    for key, enum_type, default in (("preset", PresetName, PresetName.auto), ("task", TaskType, TaskType.image)):
        try:
            parsed[key] = enum_type(run.get(key, default.value))
        except ValueError as e:
            choices = ", ".join(member.value for member in enum_type)
            raise ConfigParseError(
                f"{key}: expected one of {choices} (got {run[key]!r})", key=key, line=lines.get(("run", key))
            ) from e
    preset, task = parsed["preset"], parsed["task"]
    if preset != PresetName.auto:
        return preset
    return PresetName.sdf if task == TaskType.sdf else PresetName.tokyo


def parse_config(
    text: str,
    task: TaskType | str | None = None,
    overrides: Mapping[str, Any] | None = None,
    require_inputs: bool | None = None,
) -> RunConfig:
    """Parse the line-oriented config grammar into a fully resolved RunConfig.

    ``task`` fixes the task for commands that imply one (fit-image, fit-sdf); a file that
    names a different task is rejected. ``overrides`` are command-line values that win
    over the file (``None`` entries are skipped). With ``require_inputs`` (default: on
    when ``task`` is given) a missing image or point file path is a parse error.

    Raises:
        ConfigParseError: unknown key, duplicate key, type mismatch, missing input file path
    """
    values, lines = _tokenize(text)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        section = KEY_SECTIONS.get(key)
        if section is None:
            raise ConfigParseError(f"unknown override '{key}'", key=key)
        values[section][key] = value.value if isinstance(value, Enum) else value
    if require_inputs is None:
        require_inputs = task is not None
    if task is not None:
        task = TaskType(task)
        written = values["run"].get("task")
        if written is not None and written != task.value:
            raise ConfigParseError(
                f"config sets task = {written} but the command runs {task.value}", key="task", line=lines.get(("run", "task"))
            )
        values["run"]["task"] = task.value

    for section, preset_values in PRESETS.get(_preset_of(values, lines), {}).items():
        for key, value in preset_values.items():
            values[section].setdefault(key, value)

    try:
        config = RunConfig.model_validate(values)
    except ValidationError as e:
        error = e.errors()[0]
        loc = error["loc"]
        section, key = (str(loc[0]), str(loc[1])) if len(loc) >= 2 else (str(loc[0]), "")
        raw = values.get(section, {}).get(key)
        raise ConfigParseError(
            f"{key}: {error['msg']} (got {raw!r})", key=key, line=lines.get((section, key))
        ) from e

    if config.run.task == TaskType.sdf and config.sdf.shape == ShapeType.file and not config.sdf.points_path:
        raise ConfigParseError(
            "shape = file needs points_path", key="points_path", line=lines.get(("sdf", "shape"))
        )
    if require_inputs and config.run.task == TaskType.image and not config.image.image_path:
        # no line to blame: point at the task line or the end of the file
        line = lines.get(("run", "task"), len(text.splitlines()) or None)
        raise ConfigParseError("image task needs image_path ([image] or --image)", key="image_path", line=line)
    if config.model.alpha_per_layer is not None and len(config.model.alpha_per_layer) != config.model.n_levels:
        raise ConfigParseError(
            f"alpha_per_layer has {len(config.model.alpha_per_layer)} entries for {config.model.n_levels} levels",
            key="alpha_per_layer",
            line=lines.get(("model", "alpha_per_layer")),
        )
    return config


def load_config(
    path: str | Path | None,
    task: TaskType | str | None = None,
    overrides: Mapping[str, Any] | None = None,
    require_inputs: bool | None = None,
) -> RunConfig:
    """Read and parse a config file (None → all defaults)"""
    if path is None:
        return parse_config("", task, overrides, require_inputs)
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigParseError(f"cannot read config file {path}: {e}") from e
    return parse_config(text, task, overrides, require_inputs)
