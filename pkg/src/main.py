"""Command-line entry point

Usage examples
  # 이미지 학습 (P6 PPM 또는 PNG)
  nffb fit-image --config tokyo.cfg --image tokyo.ppm --steps 3000 --output runs/tokyo

  # SDF 학습 (해석적 sphere, 또는 --points로 샘플 포인트 파일)
  nffb fit-sdf --config sdf.cfg --deterministic

  # 체크포인트 평가 / 레벨별 출력 저장
  nffb eval --checkpoint runs/tokyo/model.ckpt
  nffb dump-levels --checkpoint runs/tokyo/model.ckpt --output runs/tokyo/levels

  # ablation, hyperparameter sweep
  nffb ablate --config tokyo.cfg --image tokyo.ppm
  nffb sweep --config tokyo.cfg --image tokyo.ppm --param sigma_min --values 1,8,32

Exit codes: 0 ok, 2 config/parse, 3 IO/checkpoint, 4 numerics, 1 other errors.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

import orjson

from src.config.run_config import SWEEP_PARAMS, RunConfig, load_config
from src.config.settings import settings
from src.core.errors import ConfigurationError, NffbError
from src.pipeline import experiments
from src.pipeline.tasks.base import TaskType
from src.pipeline.tasks.oracles import ShapeType
from src.utils.logger import get_logger

logger = get_logger(__name__)


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=str, help="설정 파일 (key = value, [section])")
    p.add_argument("--image", type=str, help="학습 이미지 (P6 PPM 또는 PNG)")
    p.add_argument("--points", type=str, help="샘플 SDF 포인트 파일 (shape = file로 설정)")
    p.add_argument("--steps", type=int, help="총 학습 step 수")
    p.add_argument("--seed", type=int, help="난수 seed")
    p.add_argument("--output", type=str, help=f"출력 디렉토리 (기본 {settings.output_dir})")
    p.add_argument(
        "--deterministic",
        action="store_true",
        help="wall_seconds를 0으로 기록해 metrics CSV를 바이트 단위로 재현합니다",
    )


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nffb", description="Neural Fourier filter bank trainer")
    sub = p.add_subparsers(dest="command", required=True)

    fit_image = sub.add_parser("fit-image", help="2D 이미지 학습")
    _add_run_flags(fit_image)
    fit_image.add_argument("--resume", type=str, help="이어서 학습할 체크포인트")

    fit_sdf = sub.add_parser("fit-sdf", help="3D SDF 학습")
    _add_run_flags(fit_sdf)
    fit_sdf.add_argument("--resume", type=str, help="이어서 학습할 체크포인트")

    ev = sub.add_parser("eval", help="체크포인트 평가 (JSON 리포트를 stdout에 출력)")
    ev.add_argument("--checkpoint", type=str, required=True)
    ev.add_argument("--config", type=str, help="체크포인트에 저장된 설정 대신 사용할 설정 파일")
    ev.add_argument("--image", type=str, help="비교할 원본 이미지")
    ev.add_argument("--points", type=str)
    ev.add_argument("--render", type=str, help="렌더 이미지를 저장할 경로")

    ablate = sub.add_parser("ablate", help="full / only_grid / grid_ff / only_mlp 비교")
    _add_run_flags(ablate)

    sweep = sub.add_parser("sweep", help="hyperparameter 하나에 대한 grid sweep")
    _add_run_flags(sweep)
    sweep.add_argument("--param", type=str, required=True, choices=sorted(SWEEP_PARAMS))
    sweep.add_argument("--values", type=str, required=True, help="쉼표로 구분한 값 목록 (예: 1,8,32)")

    dump = sub.add_parser("dump-levels", help="레벨별 출력 o_i와 부분합 저장")
    dump.add_argument("--checkpoint", type=str, required=True)
    dump.add_argument("--output", type=str, required=True)
    dump.add_argument("--config", type=str)
    dump.add_argument("--image", type=str, help="이미지 크기를 결정할 원본 이미지")

    return p


def _run_config(args: argparse.Namespace, task: TaskType | None = None) -> RunConfig:
    """Config file (or defaults) with command-line flags applied on top"""
    overrides = {
        "steps": getattr(args, "steps", None),
        "seed": getattr(args, "seed", None),
        "output_dir": getattr(args, "output", None),
        "image_path": getattr(args, "image", None),
        "points_path": getattr(args, "points", None),
    }
    if overrides["points_path"] is not None:
        overrides["shape"] = ShapeType.file
    if getattr(args, "deterministic", False):
        overrides["deterministic"] = True
    config = load_config(args.config, task, overrides=overrides, require_inputs=True)
    logger.info("Resolved config:\n" + config.echo())
    return config


def _parse_values(raw: str) -> list[float]:
    try:
        values = [float(item) for item in raw.split(",") if item.strip()]
    except ValueError as e:
        raise ConfigurationError(f"--values must be comma-separated numbers, got {raw!r}") from e
    if not values:
        raise ConfigurationError("--values is empty")
    return values


def _print_table(rows, columns: Sequence[str]) -> None:
    print("\t".join(columns))
    for row in rows:
        data = row.model_dump()
        print("\t".join(str(data[c]) for c in columns))


def _dispatch(args: argparse.Namespace) -> None:
    if args.command in ("fit-image", "fit-sdf"):
        task = TaskType.image if args.command == "fit-image" else TaskType.sdf
        result = experiments.fit(_run_config(args, task), resume=args.resume)
        print(
            orjson.dumps(
                {
                    "step": result.step,
                    "final_loss": result.final_loss,
                    "metric": result.metric,
                    "metrics": str(result.metrics_path),
                    "checkpoint": str(result.checkpoint_path),
                    "render": str(result.render_path),
                }
            ).decode()
        )

    elif args.command == "eval":
        config = load_config(args.config) if args.config else None
        overrides = {
            "image_path": args.image,
            "points_path": args.points,
            "shape": ShapeType.file if args.points else None,
        }
        report = experiments.evaluate(args.checkpoint, config, render_to=args.render, overrides=overrides)
        print(orjson.dumps(report.model_dump(), option=orjson.OPT_INDENT_2).decode())

    elif args.command == "ablate":
        rows = experiments.ablate(_run_config(args))
        _print_table(rows, ("variant", "parameters", "final_loss", "metric"))

    elif args.command == "sweep":
        rows = experiments.sweep(_run_config(args), args.param, _parse_values(args.values))
        _print_table(rows, ("param", "value", "parameters", "final_loss", "metric", "metrics_path"))

    elif args.command == "dump-levels":
        config = load_config(args.config) if args.config else None
        levels = experiments.dump_levels(args.checkpoint, args.output, config, overrides={"image_path": args.image})
        for path in levels:
            print(path)


def cli(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command; returns the process exit code"""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse: 0 for --help, 2 for usage errors
        return int(e.code or 0)

    try:
        _dispatch(args)
    except NffbError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except Exception as e:
        logger.exception(f"Unexpected failure: {e}")
        return 1
    return 0


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
