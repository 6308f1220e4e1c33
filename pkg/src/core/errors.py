"""Error hierarchy

모든 모듈이 공유하는 예외 계층입니다.
CLI는 예외 유형에 따라 종료 코드를 결정합니다.
"""

from __future__ import annotations

from pathlib import Path


class NffbError(Exception):
    """Base class for every error raised by this package"""

    exit_code: int = 1


class ConfigurationError(NffbError, ValueError):
    """잘못된 하이퍼파라미터, 알 수 없는 variant, 차원 불일치"""

    exit_code = 2


class ConfigParseError(ConfigurationError):
    """설정 파일 파싱 실패 (키와 줄 번호 포함)"""

    def __init__(self, message: str, *, key: str | None = None, line: int | None = None):
        self.key = key
        self.line = line
        location = f"line {line}: " if line is not None else ""
        super().__init__(f"{location}{message}")


class InputError(NffbError, ValueError):
    """도메인 밖의 좌표, 빈 배치, shape 불일치"""

    exit_code = 2


class StateError(NffbError, RuntimeError):
    """Tape state violation (e.g. backward without a recorded forward)"""


class NumericsError(NffbError, ArithmeticError):
    """Non-finite loss or gradient"""

    exit_code = 4

    def __init__(self, message: str, *, checkpoint: Path | None = None):
        self.checkpoint = checkpoint
        if checkpoint is not None:
            message = f"{message} (last good checkpoint: {checkpoint})"
        super().__init__(message)


class CheckpointError(NffbError, IOError):
    """체크포인트 magic/version/길이 오류"""

    exit_code = 3


class ImageFormatError(NffbError, IOError):
    """이미지 또는 포인트 파일 형식 오류"""

    exit_code = 3
