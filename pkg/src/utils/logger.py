"""
Logging utilities

진단 로그는 stderr로만 나갑니다 (stdout은 eval JSON 리포트 전용).
학습 중에는 run 이름과 현재 step이 모든 레코드에 붙습니다.
NFFB_LOG_LEVEL로 레벨을, NFFB_LOG_FORMAT(text | json)으로 출력 형식을 고릅니다.
"""
import logging
import sys
from contextlib import contextmanager
from contextvars import ContextVar
from typing import Iterator, Optional

import orjson

from src.config.settings import settings

DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
TEXT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - [%(run)s%(step_tag)s] %(message)s"

_current_run: ContextVar[str] = ContextVar("nffb_run", default="-")
_current_step: ContextVar[Optional[int]] = ContextVar("nffb_step", default=None)


class RunContextFilter(logging.Filter):
    """Attach the active run name and training step to every record"""

    def filter(self, record: logging.LogRecord) -> bool:
        step = _current_step.get()
        record.run = _current_run.get()
        record.step = step
        record.step_tag = "" if step is None else f" step={step}"
        return True


class JsonFormatter(logging.Formatter):
    """One JSON object per line"""

    def format(self, record: logging.LogRecord) -> str:
        payload = {
            "time": self.formatTime(record, self.datefmt),
            "level": record.levelname,
            "logger": record.name,
            "run": getattr(record, "run", "-"),
            "step": getattr(record, "step", None),
            "message": record.getMessage(),
        }
        if record.exc_info:
            payload["exception"] = self.formatException(record.exc_info)
        return orjson.dumps(payload).decode("utf-8")


def build_formatter(log_format: str) -> logging.Formatter:
    if log_format.lower() == "json":
        return JsonFormatter(datefmt=DATE_FORMAT)
    return logging.Formatter(fmt=TEXT_FORMAT, datefmt=DATE_FORMAT)


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """
    Get a configured logger instance

    Args:
        name: Logger name (typically __name__)

    Returns:
        Configured logger
    """
    logger = logging.getLogger(name or settings.service_name)

    # 이미 핸들러가 설정되어 있으면 스킵
    if logger.handlers:
        return logger

    log_level = getattr(logging, settings.log_level.upper(), logging.INFO)
    logger.setLevel(log_level)

    handler = logging.StreamHandler(sys.stderr)
    handler.setLevel(log_level)
    handler.addFilter(RunContextFilter())
    handler.setFormatter(build_formatter(settings.log_format))

    logger.addHandler(handler)
    logger.propagate = False

    return logger


@contextmanager
def run_context(run: str) -> Iterator[None]:
    """Tag records logged inside the block with ``run``; the step starts unset"""
    run_token = _current_run.set(run)
    step_token = _current_step.set(None)
    try:
        yield
    finally:
        _current_step.reset(step_token)
        _current_run.reset(run_token)


def set_step(step: Optional[int]) -> None:
    """Training step attached to subsequent records (None clears it)"""
    _current_step.set(step)
