"""
Reverse-mode differentiation on an explicit tape.

Every primitive appends a Node holding its forward value (a float64 numpy array),
its parent nodes and a vector-Jacobian product. `Tape.backward` walks the tape once in
reverse order, so each reachable adjoint is completed before it is propagated.

Parameters are bound to a tape by name (`Tape(params)` + `tape.param(name)`); a fresh
tape is built for every forward pass (one per patient and k), which keeps tapes
single-writer and lets distinct patients run on distinct threads.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .exceptions import ContractError, DimensionError, NonFiniteError

Tensor = np.ndarray
VectorJacobian = Callable[[np.ndarray], tuple[np.ndarray | None, ...]]

ACTIVATIONS = ("relu", "sigmoid", "tanh", "softplus")
LOG_FLOOR = 1e-6


@dataclass(eq=False)
class Node:
    index: int
    value: Tensor
    parents: tuple[Node, ...] = ()
    vjp: VectorJacobian | None = None
    op: str = "constant"
    name: str | None = None
    requires_grad: bool = False

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    def item(self) -> float:
        return float(self.value.reshape(-1)[0])


def as_tensor(value) -> Tensor:
    return np.asarray(value, dtype=np.float64)


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class Tape:
    def __init__(self, params: Mapping[str, Tensor] | None = None):
        self.params: Mapping[str, Tensor] = params if params is not None else {}
        self.nodes: list[Node] = []
        self.adjoints: dict[int, Tensor] = {}
        self._param_nodes: dict[str, Node] = {}

    def __len__(self) -> int:
        return len(self.nodes)

    # ------------------------------------------------------------------ leaves

    def _record(
        self,
        op: str,
        value,
        parents: Sequence[Node] = (),
        vjp: VectorJacobian | None = None,
        name: str | None = None,
    ) -> Node:
        value = as_tensor(value)
        if not np.all(np.isfinite(value)):
            raise NonFiniteError(
                f"Non-finite value produced by '{op}'", {"op": op, "name": name}
            )
        requires_grad = op == "param" or any(p.requires_grad for p in parents)
        node = Node(
            index=len(self.nodes),
            value=value,
            parents=tuple(parents),
            vjp=vjp if requires_grad else None,
            op=op,
            name=name,
            requires_grad=requires_grad,
        )
        self.nodes.append(node)
        return node

    def param(self, name: str) -> Node:
        """Leaf node for a named parameter; one node per name per tape."""
        node = self._param_nodes.get(name)
        if node is None:
            if name not in self.params:
                raise ContractError(f"Unknown parameter '{name}'", {"name": name})
            node = self._record("param", self.params[name], name=name)
            self._param_nodes[name] = node
        return node

    def constant(self, value, name: str | None = None) -> Node:
        return self._record("constant", value, name=name)

    # -------------------------------------------------------------- arithmetic

    def add(self, a: Node, b: Node) -> Node:
        return self._record("add", a.value + b.value, (a, b), lambda g: (g, g))

    def sub(self, a: Node, b: Node) -> Node:
        return self._record("sub", a.value - b.value, (a, b), lambda g: (g, -g))

    def mul(self, a: Node, b: Node) -> Node:
        av, bv = a.value, b.value
        return self._record("mul", av * bv, (a, b), lambda g: (g * bv, g * av))

    def div(self, a: Node, b: Node) -> Node:
        av, bv = a.value, b.value
        out = av / bv
        return self._record("div", out, (a, b), lambda g: (g / bv, -g * out / bv))

    def scale(self, a: Node, factor: float) -> Node:
        return self._record("scale", a.value * factor, (a,), lambda g: (g * factor,))

    def shift(self, a: Node, offset: float) -> Node:
        return self._record("shift", a.value + offset, (a,), lambda g: (g,))

    def square(self, a: Node) -> Node:
        av = a.value
        return self._record("square", av * av, (a,), lambda g: (2.0 * g * av,))

    def log(self, a: Node, floor: float = LOG_FLOOR) -> Node:
        """ln(max(a, floor)); the gradient is zero where the floor is active."""
        av = a.value
        active = av > floor
        out = np.log(np.where(active, av, floor))
        safe = np.where(active, av, 1.0)
        return self._record("log", out, (a,), lambda g: (np.where(active, g / safe, 0.0),))

    def sum(self, a: Node) -> Node:
        av = a.value
        return self._record(
            "sum", np.sum(av), (a,), lambda g: (np.full(av.shape, float(g)),)
        )

    # ------------------------------------------------------------- dense layers

    def affine(self, W: Node, b: Node | None, x: Node) -> Node:
        """x @ W.T + b for a vector x of shape (n,) or a row batch of shape (r, n)."""
        wv, xv = W.value, x.value
        if wv.ndim != 2 or xv.ndim not in (1, 2) or xv.shape[-1] != wv.shape[1]:
            raise DimensionError(
                "affine: shapes do not conform",
                {"W": wv.shape, "x": xv.shape},
            )
        if b is not None and b.value.shape != (wv.shape[0],):
            raise DimensionError(
                "affine: bias shape does not match output width",
                {"W": wv.shape, "b": b.value.shape},
            )
        out = xv @ wv.T
        if b is not None:
            out = out + b.value

        def vjp(g):
            if xv.ndim == 1:
                gw = np.outer(g, xv)
                gb = g
            else:
                gw = g.T @ xv
                gb = g.sum(axis=0)
            gx = g @ wv
            return (gw, gb, gx) if b is not None else (gw, gx)

        parents = (W, b, x) if b is not None else (W, x)
        return self._record("affine", out, parents, vjp)

    def activation(self, kind: str, x: Node) -> Node:
        xv = x.value
        if kind == "relu":
            out = np.maximum(xv, 0.0)
            return self._record("relu", out, (x,), lambda g: (g * (xv > 0.0),))
        if kind == "sigmoid":
            out = expit(xv)
            return self._record(
                "sigmoid", out, (x,), lambda g: (g * out * (1.0 - out),)
            )
        if kind == "tanh":
            out = np.tanh(xv)
            return self._record("tanh", out, (x,), lambda g: (g * (1.0 - out * out),))
        if kind == "softplus":
            out = np.logaddexp(0.0, xv)
            return self._record("softplus", out, (x,), lambda g: (g * expit(xv),))
        raise ContractError(f"Unknown activation '{kind}'", {"kind": kind})

    def softmax(self, logits: Node) -> Node:
        """Row-wise softmax over the last axis with max-shift."""
        lv = logits.value
        if lv.shape[-1] < 2:
            raise ContractError("softmax needs at least two classes", {"shape": lv.shape})
        shifted = np.exp(lv - lv.max(axis=-1, keepdims=True))
        out = shifted / shifted.sum(axis=-1, keepdims=True)

        def vjp(g):
            return (out * (g - (g * out).sum(axis=-1, keepdims=True)),)

        return self._record("softmax", out, (logits,), vjp)

    def dropout(
        self, x: Node, rate: float, rng: np.random.Generator | None
    ) -> Node:
        """Inverted dropout; identity when rate is 0 or no generator is given."""
        if rng is None or rate <= 0.0:
            return x
        keep = (rng.random(x.value.shape) >= rate) / (1.0 - rate)
        return self.mul(x, self.constant(keep))

    # ---------------------------------------------------------- shape plumbing

    def concat(self, nodes: Sequence[Node], axis: int = -1) -> Node:
        values = [n.value for n in nodes]
        try:
            out = np.concatenate(values, axis=axis)
        except ValueError as e:
            raise DimensionError(
                "concat: shapes do not conform", {"shapes": [v.shape for v in values]}
            ) from e
        bounds = np.cumsum([v.shape[axis] for v in values])[:-1]

        def vjp(g):
            return tuple(np.split(g, bounds, axis=axis))

        return self._record("concat", out, nodes, vjp)

    def columns(self, a: Node, index) -> Node:
        """Select entries of the last axis (a slice or an array of unique indices)."""
        av = a.value
        out = av[..., index]

        def vjp(g):
            full = np.zeros_like(av)
            full[..., index] = g
            return (full,)

        return self._record("columns", out, (a,), vjp)

    def tile_rows(self, a: Node, reps: int) -> Node:
        """Stack `reps` copies of a vector (n,) -> (reps, n) or a matrix (r, n) -> (reps*r, n)."""
        av = a.value
        base = av.reshape(1, -1) if av.ndim == 1 else av
        out = np.tile(base, (reps, 1))

        def vjp(g):
            return (g.reshape(reps, *base.shape).sum(axis=0).reshape(av.shape),)

        return self._record("tile_rows", out, (a,), vjp)

    def pick(self, a: Node, rows: np.ndarray, cols: np.ndarray) -> Node:
        """Gather a[rows, cols] from a matrix."""
        av = a.value
        out = av[rows, cols]

        def vjp(g):
            full = np.zeros_like(av)
            np.add.at(full, (rows, cols), g)
            return (full,)

        return self._record("pick", out, (a,), vjp)

    # ---------------------------------------------------------------- backward

    def backward(self, loss: Node) -> dict[str, Tensor]:
        """Exact reverse-mode gradients of a scalar loss for every bound parameter.

        Parameters never touched by the loss receive zero gradients.
        """
        if loss.value.size != 1:
            raise ContractError(
                "backward() needs a scalar loss", {"shape": loss.value.shape}
            )
        adjoints: dict[int, Tensor] = {loss.index: np.ones_like(loss.value)}
        for node in reversed(self.nodes[: loss.index + 1]):
            g = adjoints.get(node.index)
            if g is None or node.vjp is None:
                continue
            for parent, parent_grad in zip(node.parents, node.vjp(g), strict=True):
                if parent_grad is None or not parent.requires_grad:
                    continue
                parent_grad = _unbroadcast(as_tensor(parent_grad), parent.value.shape)
                if parent.index in adjoints:
                    adjoints[parent.index] = adjoints[parent.index] + parent_grad
                else:
                    adjoints[parent.index] = parent_grad
        self.adjoints = adjoints

        grads: dict[str, Tensor] = {}
        for name, value in self.params.items():
            node = self._param_nodes.get(name)
            if node is None or node.index not in adjoints:
                grads[name] = np.zeros_like(as_tensor(value))
            else:
                grads[name] = adjoints[node.index]
        return grads
