"""Reverse-mode automatic differentiation over float64 numpy arrays.

Every operation returns a :class:`Node` that remembers its parents and a
backward rule mapping the upstream gradient to one gradient per parent.
:func:`forward_backward` walks the recorded graph in reverse topological
order and accumulates gradients into the :class:`Parameter` leaves.
"""

from __future__ import annotations

from typing import Callable, Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import GraphError, ShapeError

Array = np.ndarray
BackwardFn = Callable[[Array], Sequence[Optional[Array]]]


class Node:
    """A value in the computation graph."""

    __slots__ = ("value", "grad", "parents", "backward_fn", "requires_grad")

    def __init__(
        self,
        value: Array,
        parents: Tuple["Node", ...] = (),
        backward_fn: Optional[BackwardFn] = None,
    ) -> None:
        self.value = value
        self.grad: Optional[Array] = None
        self.parents = parents
        self.backward_fn = backward_fn
        self.requires_grad = any(p.requires_grad for p in parents)

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    def item(self) -> float:
        return float(self.value)

    def __add__(self, other: "Node") -> "Node":
        return add(self, other)

    def __sub__(self, other: "Node") -> "Node":
        return sub(self, other)

    def __mul__(self, other: "Node") -> "Node":
        return mul(self, other)

    def __repr__(self) -> str:
        return f"Node(shape={self.shape})"


class Parameter(Node):
    """A trainable leaf whose gradient accumulates across backward passes."""

    __slots__ = ("name",)

    def __init__(self, value: Array, name: str = "") -> None:
        super().__init__(np.array(value, dtype=np.float64))
        self.requires_grad = True
        self.name = name

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.shape})"


GradientSet = Dict[Parameter, Array]


def constant(value: object) -> Node:
    return Node(np.asarray(value, dtype=np.float64))


def _as_node(x: object) -> Node:
    return x if isinstance(x, Node) else constant(x)


def _check_same(a: Node, b: Node, op: str) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} differ")


# ------------------------------------------------------------------
# Backward pass
# ------------------------------------------------------------------

def _topological_order(root: Node) -> List[Node]:
    order: List[Node] = []
    seen = set()
    stack: List[Tuple[Node, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            if p.requires_grad and id(p) not in seen:
                stack.append((p, False))
    return order


def forward_backward(loss: Node) -> GradientSet:
    """Back-propagate from a scalar *loss*.

    Gradients are added to each reachable parameter's ``grad``; callers
    zero them between optimizer steps.  Returns the parameters reached,
    mapped to their accumulated gradients.
    """
    if loss.value.size != 1:
        raise GraphError(f"loss must be scalar, got shape {loss.shape}")
    reached: GradientSet = {}
    if not loss.requires_grad:
        return reached
    pending: Dict[int, Array] = {id(loss): np.ones_like(loss.value)}
    for node in reversed(_topological_order(loss)):
        g = pending.pop(id(node), None)
        if g is None:
            continue
        if isinstance(node, Parameter):
            node.grad = g.copy() if node.grad is None else node.grad + g
            reached[node] = node.grad
            continue
        if node.backward_fn is None:
            continue
        for parent, pg in zip(node.parents, node.backward_fn(g)):
            if pg is None or not parent.requires_grad:
                continue
            key = id(parent)
            pending[key] = pg if key not in pending else pending[key] + pg
    return reached


# ------------------------------------------------------------------
# Elementwise operations
# ------------------------------------------------------------------

def add(a: Node, b: Node) -> Node:
    a, b = _as_node(a), _as_node(b)
    _check_same(a, b, "add")
    return Node(a.value + b.value, (a, b), lambda g: (g, g))


def sub(a: Node, b: Node) -> Node:
    a, b = _as_node(a), _as_node(b)
    _check_same(a, b, "sub")
    return Node(a.value - b.value, (a, b), lambda g: (g, -g))


def mul(a: Node, b: Node) -> Node:
    a, b = _as_node(a), _as_node(b)
    _check_same(a, b, "mul")
    return Node(a.value * b.value, (a, b), lambda g: (g * b.value, g * a.value))


def scale(a: Node, c: float) -> Node:
    return Node(a.value * c, (a,), lambda g: (g * c,))


def tanh(a: Node) -> Node:
    y = np.tanh(a.value)
    return Node(y, (a,), lambda g: (g * (1.0 - y * y),))


def sigmoid(a: Node) -> Node:
    y = 1.0 / (1.0 + np.exp(-a.value))
    return Node(y, (a,), lambda g: (g * y * (1.0 - y),))


def log(a: Node) -> Node:
    return Node(np.log(a.value), (a,), lambda g: (g / a.value,))


def total(a: Node) -> Node:
    """Sum of all entries as a scalar node."""
    return Node(np.asarray(a.value.sum()), (a,), lambda g: (np.full_like(a.value, float(g)),))


def add_all(nodes: Sequence[Node]) -> Node:
    """Sum of same-shaped nodes."""
    if not nodes:
        raise GraphError("add_all needs at least one node")
    for n in nodes[1:]:
        _check_same(nodes[0], n, "add_all")
    value = np.sum([n.value for n in nodes], axis=0)
    return Node(value, tuple(nodes), lambda g: tuple(g for _ in nodes))


# ------------------------------------------------------------------
# Linear algebra and reshaping
# ------------------------------------------------------------------

def matvec(w: Node, x: Node) -> Node:
    """``w @ x`` for a matrix and a vector."""
    if w.value.ndim != 2 or x.value.ndim != 1 or w.shape[1] != x.shape[0]:
        raise ShapeError(f"matvec: cannot multiply {w.shape} by {x.shape}")
    return Node(
        w.value @ x.value,
        (w, x),
        lambda g: (np.outer(g, x.value), w.value.T @ g),
    )


def vecmat(x: Node, w: Node) -> Node:
    """``x @ w`` for a vector and a matrix."""
    if w.value.ndim != 2 or x.value.ndim != 1 or w.shape[0] != x.shape[0]:
        raise ShapeError(f"vecmat: cannot multiply {x.shape} by {w.shape}")
    return Node(
        x.value @ w.value,
        (x, w),
        lambda g: (w.value @ g, np.outer(x.value, g)),
    )


def dot(a: Node, b: Node) -> Node:
    _check_same(a, b, "dot")
    return Node(np.asarray(a.value @ b.value), (a, b), lambda g: (g * b.value, g * a.value))


def concat(nodes: Sequence[Node]) -> Node:
    sizes = [n.shape[0] for n in nodes]
    bounds = np.cumsum([0] + sizes)

    def backward(g: Array) -> List[Array]:
        return [g[bounds[i]:bounds[i + 1]] for i in range(len(nodes))]

    return Node(np.concatenate([n.value for n in nodes]), tuple(nodes), backward)


def stack(nodes: Sequence[Node]) -> Node:
    """Stack vectors into the rows of a matrix."""
    if not nodes:
        raise ShapeError("stack needs at least one node")
    return Node(
        np.stack([n.value for n in nodes]),
        tuple(nodes),
        lambda g: [g[i] for i in range(len(nodes))],
    )


def slice_(a: Node, start: int, stop: int) -> Node:
    def backward(g: Array) -> Tuple[Array]:
        full = np.zeros_like(a.value)
        full[start:stop] = g
        return (full,)

    return Node(a.value[start:stop], (a,), backward)


def row(table: Node, index: int) -> Node:
    """Row *index* of a matrix (embedding lookup)."""
    if not 0 <= index < table.shape[0]:
        raise ShapeError(f"row {index} outside table of {table.shape[0]} rows")

    def backward(g: Array) -> Tuple[Array]:
        full = np.zeros_like(table.value)
        full[index] = g
        return (full,)

    return Node(table.value[index], (table,), backward)


def pick(a: Node, index: int) -> Node:
    """Entry *index* of a vector as a scalar node."""

    def backward(g: Array) -> Tuple[Array]:
        full = np.zeros_like(a.value)
        full[index] = g
        return (full,)

    return Node(np.asarray(a.value[index]), (a,), backward)


def detach(a: Node) -> Node:
    """Same value, no gradient flow."""
    return constant(a.value)


# ------------------------------------------------------------------
# Normalization
# ------------------------------------------------------------------

def softmax_node(z: Node) -> Node:
    y = softmax(z.value)

    def backward(g: Array) -> Tuple[Array]:
        return (y * (g - g @ y),)

    return Node(y, (z,), backward)


def log_softmax(z: Node) -> Node:
    shifted = z.value - z.value.max()
    logsum = np.log(np.exp(shifted).sum())
    y = shifted - logsum
    p = np.exp(y)

    def backward(g: Array) -> Tuple[Array]:
        return (g - p * g.sum(),)

    return Node(y, (z,), backward)


def softmax(z: Array) -> Array:
    """Numerically stable softmax of a nonempty vector."""
    z = np.asarray(z, dtype=np.float64)
    if z.size == 0:
        raise ShapeError("softmax of an empty vector")
    if np.isnan(z).any():
        raise GraphError("softmax input contains NaN")
    e = np.exp(z - z.max())
    return e / e.sum()


# ------------------------------------------------------------------
# Parameter collections
# ------------------------------------------------------------------

class ParamSet:
    """Named, ordered collection of parameters."""

    def __init__(self, params: Iterable[Parameter] = ()) -> None:
        self._params: Dict[str, Parameter] = {}
        for p in params:
            self.add(p)

    def add(self, p: Parameter) -> Parameter:
        if p.name in self._params:
            raise GraphError(f"duplicate parameter name '{p.name}'")
        self._params[p.name] = p
        return p

    def new(self, name: str, value: Array) -> Parameter:
        return self.add(Parameter(value, name))

    def __getitem__(self, name: str) -> Parameter:
        return self._params[name]

    def __contains__(self, name: object) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[Parameter]:
        return iter(self._params.values())

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> List[str]:
        return list(self._params)

    def zero_grad(self) -> None:
        for p in self:
            p.zero_grad()

    def grads(self) -> List[Array]:
        """Gradient per parameter (zeros where none accumulated)."""
        return [p.grad if p.grad is not None else np.zeros_like(p.value) for p in self]

    def arrays(self) -> Dict[str, Array]:
        return {name: p.value.copy() for name, p in self._params.items()}

    def load_arrays(self, arrays: Dict[str, Array]) -> None:
        for name, p in self._params.items():
            if name not in arrays:
                raise ShapeError(f"missing parameter '{name}'")
            value = np.asarray(arrays[name], dtype=np.float64)
            if value.shape != p.shape:
                raise ShapeError(f"parameter '{name}' has shape {p.shape}, got {value.shape}")
            p.value = value.copy()
