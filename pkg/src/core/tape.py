"""Gradient tape

고정된 filter bank 연산 그래프를 위한 primitive 단위 reverse-mode tape입니다.
각 primitive(affine, sine, interpolation, Fourier encode, add, sum, loss)는
벡터 단위 backward 규칙을 직접 가지며, 파라미터 gradient는 ModelParams와
같은 레이아웃의 flat 버퍼에 누적됩니다.

All values are batch-major: a vector op over a batch of B items carries arrays of
shape (B, d). Losses reduce to a scalar array of shape ().
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, InputError, StateError
from .params import ModelParams

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


@dataclass(frozen=True)
class Var:
    """Handle to a value recorded on a tape"""

    index: int
    value: np.ndarray


@dataclass
class _Record:
    op: str
    index: int
    value: np.ndarray
    inputs: tuple[int, ...] = ()
    backward: BackwardFn | None = None


@dataclass
class Tape:
    """Ordered record of primitive applications for one forward pass.

    A tape belongs to one worker at a time. ``backward`` consumes it: the
    records are dropped once gradients have been produced.
    """

    params: ModelParams | None = None
    _records: list[_Record] = field(default_factory=list)
    _grad_views: dict[str, np.ndarray] = field(default_factory=dict)
    trace: list[str] = field(default_factory=list)

    @property
    def dtype(self) -> np.dtype:
        return self.params.dtype if self.params is not None else np.dtype(np.float64)

    def __len__(self) -> int:
        return len(self._records)

    @property
    def ops(self) -> list[str]:
        return [rec.op for rec in self._records]

    def param(self, name: str) -> np.ndarray:
        if self.params is None:
            raise StateError("Tape has no parameters bound")
        return self.params[name]

    def record(
        self,
        op: str,
        value: np.ndarray,
        inputs: Sequence[Var] = (),
        backward: BackwardFn | None = None,
    ) -> Var:
        """Append a primitive application and return a handle to its output"""
        index = len(self._records)
        self._records.append(
            _Record(op=op, index=index, value=value, inputs=tuple(v.index for v in inputs), backward=backward)
        )
        return Var(index=index, value=value)

    def accumulate(self, name: str, grad: np.ndarray) -> None:
        """Add ``grad`` into the gradient of parameter ``name`` (only valid during backward)"""
        self._grad_views[name] += grad

    def scatter(self, name: str, rows: np.ndarray, grad: np.ndarray) -> None:
        """Row scatter-add into a table gradient; repeated rows accumulate.

        ``rows`` is flat (K,) and ``grad`` is (K, F). One bincount per feature
        column sums the contributions in float64 before they are added to the
        gradient buffer.
        """
        target = self._grad_views[name]
        rows = np.asarray(rows).reshape(-1)
        grad = np.asarray(grad).reshape(rows.shape[0], -1)
        if grad.shape[1] != target.shape[1]:
            raise ConfigurationError(f"scatter into {name}{target.shape} with {grad.shape[1]} features")
        for f in range(target.shape[1]):
            target[:, f] += np.bincount(rows, weights=grad[:, f], minlength=target.shape[0])

    def clear(self) -> None:
        self._records.clear()
        self._grad_views = {}

    # ------------------------------------------------------------------
    # primitives
    # ------------------------------------------------------------------

    def constant(self, value: np.ndarray) -> Var:
        return self.record("constant", np.asarray(value, dtype=self.dtype))

    def affine(self, x: Var, weight: str, bias: str | None = None, scale: float = 1.0) -> Var:
        """``scale * (W x) + b`` applied to every row of ``x``.

        ``scale`` multiplies the weight product only, so ``sin(α·W·g + b)`` is
        ``sine_act(affine(g, W, b, scale=α), 1)``.
        """
        W = self.param(weight)
        if W.ndim != 2 or x.value.ndim != 2 or x.value.shape[1] != W.shape[1]:
            raise ConfigurationError(
                f"affine dimension mismatch: input {x.value.shape} vs weight {weight}{W.shape}"
            )
        b = self.param(bias) if bias is not None else None
        if b is not None and b.shape != (W.shape[0],):
            raise ConfigurationError(f"affine dimension mismatch: bias {bias}{b.shape} vs weight {W.shape}")

        out = x.value @ W.T
        if scale != 1.0:
            out *= scale
        if b is not None:
            out += b
        x_value = x.value

        def _backward(upstream: np.ndarray):
            scaled = upstream * scale if scale != 1.0 else upstream
            self.accumulate(weight, scaled.T @ x_value)
            if bias is not None:
                self.accumulate(bias, upstream.sum(axis=0))
            return (scaled @ W,)

        return self.record("affine", out, (x,), _backward)

    def sine_act(self, z: Var, alpha: float = 1.0) -> Var:
        """Elementwise ``sin(α z)``"""
        if alpha <= 0:
            raise ConfigurationError(f"sine scaling must be positive, got {alpha}")
        phase = alpha * z.value if alpha != 1.0 else z.value
        out = np.sin(phase)

        def _backward(upstream: np.ndarray):
            return (upstream * (alpha * np.cos(phase)),)

        return self.record("sine", out, (z,), _backward)

    def add(self, a: Var, b: Var) -> Var:
        if a.value.shape != b.value.shape:
            raise ConfigurationError(f"add shape mismatch: {a.value.shape} vs {b.value.shape}")
        return self.record("add", a.value + b.value, (a, b), lambda g: (g, g))

    def sum(self, terms: Sequence[Var]) -> Var:
        """Left-to-right sum of same-shaped values (fixed accumulation order)"""
        if not terms:
            raise ConfigurationError("sum of zero terms")
        out = terms[0].value.copy()
        for term in terms[1:]:
            out += term.value
        count = len(terms)
        return self.record("sum", out, tuple(terms), lambda g: (g,) * count)

    def concat(self, parts: Sequence[Var]) -> Var:
        """Concatenate along the feature axis"""
        out = np.concatenate([p.value for p in parts], axis=1)
        bounds = np.cumsum([0] + [p.value.shape[1] for p in parts])

        def _backward(upstream: np.ndarray):
            return tuple(upstream[:, lo:hi] for lo, hi in zip(bounds[:-1], bounds[1:]))

        return self.record("concat", out, tuple(parts), _backward)

    # ------------------------------------------------------------------
    # losses
    # ------------------------------------------------------------------

    def mse_loss(self, y: Var, y_gt: np.ndarray) -> Var:
        """Mean over the batch of the squared L2 error per item"""
        y_gt = np.asarray(y_gt, dtype=self.dtype).reshape(y.value.shape)
        batch = y.value.shape[0] if y.value.ndim else 0
        if batch == 0:
            raise InputError("mse_loss on an empty batch")
        diff = y.value - y_gt
        loss = np.asarray(np.sum(diff * diff) / batch, dtype=self.dtype)

        def _backward(upstream: np.ndarray):
            return (diff * (2.0 * upstream / batch),)

        return self.record("mse_loss", loss, (y,), _backward)

    def mape_sq_loss(self, y: Var, y_gt: np.ndarray, epsilon: float = 0.01) -> Var:
        """Squared relative error ``(y − y_gt)² / (ε + y_gt²)`` averaged over the batch"""
        if epsilon <= 0:
            raise ConfigurationError(f"mape epsilon must be positive, got {epsilon}")
        y_gt = np.asarray(y_gt, dtype=self.dtype).reshape(y.value.shape)
        batch = y.value.shape[0] if y.value.ndim else 0
        if batch == 0:
            raise InputError("mape_sq_loss on an empty batch")
        diff = y.value - y_gt
        denom = epsilon + y_gt * y_gt
        loss = np.asarray(np.sum(diff * diff / denom) / batch, dtype=self.dtype)

        def _backward(upstream: np.ndarray):
            return (diff / denom * (2.0 * upstream / batch),)

        return self.record("mape_sq_loss", loss, (y,), _backward)

    # ------------------------------------------------------------------
    # backward
    # ------------------------------------------------------------------

    def backward(self, loss_grad: float = 1.0) -> np.ndarray:
        """Propagate from the last recorded value (a scalar) to every parameter.

        Returns a flat gradient vector in the ModelParams index layout. The tape
        is cleared afterwards.
        """
        if not self._records:
            raise StateError("backward called without a recorded forward pass")
        head = self._records[-1]
        if head.value.size != 1:
            raise StateError(f"backward needs a scalar output, last op '{head.op}' has shape {head.value.shape}")

        if self.params is not None:
            grads = np.zeros(self.params.size, dtype=self.params.dtype)
            self._grad_views = self.params.views_of(grads)
        else:
            grads = np.zeros(0, dtype=self.dtype)
            self._grad_views = {}

        adjoints: dict[int, np.ndarray] = {head.index: np.full_like(head.value, loss_grad)}
        self.trace = []
        for rec in reversed(self._records):
            self.trace.append(rec.op)
            upstream = adjoints.pop(rec.index, None)
            if upstream is None or rec.backward is None:
                continue
            for index, grad in zip(rec.inputs, rec.backward(upstream)):
                if grad is None:
                    continue
                if index in adjoints:
                    adjoints[index] = adjoints[index] + grad
                else:
                    adjoints[index] = grad

        self.clear()
        return grads


def backward(tape: Tape, loss_grad: float = 1.0) -> np.ndarray:
    """Module-level alias of :meth:`Tape.backward`"""
    return tape.backward(loss_grad)
