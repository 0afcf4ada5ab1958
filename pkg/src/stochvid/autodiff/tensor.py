"""Dense tensors and the reverse-mode gradient tape.

Every differentiable primitive in the package records itself on the
currently active GradientTape. Calling tape.backward(loss) replays the
recorded operations in exact reverse execution order, accumulating
gradients into the .grad slot of leaf tensors (tensors that were not
produced by a recorded operation). Gradients of intermediate tensors
live only in transient buffers during the sweep, so calling backward
twice from the same scalar doubles every leaf gradient.
"""

from __future__ import annotations

import numpy as np

FLOAT_DTYPES = (np.float32, np.float64)


class Tensor:
    """Multidimensional array with an optional gradient slot."""

    __slots__ = ("data", "grad", "requires_grad")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in FLOAT_DTYPES:
            arr = arr.astype(np.float32)
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        """Same data, no grad slot, no recording."""
        return Tensor(self.data)

    def copy(self) -> "Tensor":
        t = Tensor(self.data.copy(), requires_grad=self.requires_grad)
        if self.grad is not None:
            t.grad = self.grad.copy()
        return t

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}{flag})"


def as_tensor(x, dtype=None) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(x, dtype=dtype)


class _Node:
    """One executed primitive: inputs, output, and its vjp."""

    __slots__ = ("inputs", "output", "vjp")

    def __init__(self, inputs, output, vjp):
        self.inputs = inputs
        self.output = output
        self.vjp = vjp


_TAPE_STACK: list["GradientTape"] = []


class GradientTape:
    """Ordered record of executed primitives, replayed backward."""

    def __init__(self):
        self._nodes: list[_Node] = []

    def __enter__(self) -> "GradientTape":
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        popped = _TAPE_STACK.pop()
        assert popped is self, "gradient tapes must unwind in LIFO order"
        return False

    def __len__(self) -> int:
        return len(self._nodes)

    def _append(self, inputs, output, vjp) -> None:
        self._nodes.append(_Node(inputs, output, vjp))

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(leaf) into each leaf tensor's .grad.

        loss must be a scalar (size-1) tensor produced under this tape.
        """
        if loss.size != 1:
            raise ValueError(f"backward expects a scalar loss, got shape {loss.shape}")
        produced = {id(n.output) for n in self._nodes}
        flow: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
        for node in reversed(self._nodes):
            g = flow.pop(id(node.output), None)
            if g is None:
                continue
            grads = node.vjp(g)
            for inp, gi in zip(node.inputs, grads):
                if gi is None or not isinstance(inp, Tensor) or not inp.requires_grad:
                    continue
                if id(inp) in produced:
                    prev = flow.get(id(inp))
                    flow[id(inp)] = gi if prev is None else prev + gi
                else:
                    inp.grad = gi.copy() if inp.grad is None else inp.grad + gi
        # a loss that is itself a leaf (no recorded producer) still gets its seed
        if id(loss) not in produced and loss.requires_grad:
            seed = np.ones_like(loss.data)
            loss.grad = seed if loss.grad is None else loss.grad + seed


def active_tape() -> GradientTape | None:
    return _TAPE_STACK[-1] if _TAPE_STACK else None


def record(inputs, output: Tensor, vjp) -> Tensor:
    """Register a primitive on the active tape if any input needs grads.

    vjp maps the output gradient to a tuple of per-input gradients
    (None for non-differentiable slots).
    """
    tape = active_tape()
    if tape is not None and any(
        isinstance(t, Tensor) and t.requires_grad for t in inputs
    ):
        output.requires_grad = True
        tape._append(tuple(inputs), output, vjp)
    return output
