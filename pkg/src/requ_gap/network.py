"""Sparse feedforward ReQU networks and their structural operations.

A network is a sequence of affine layers (A_j, b_j); evaluation alternates
the affine maps with the elementwise rectified-quadratic activation on all
but the last layer.  Matrices are stored in coordinate-list form and the
stored-entry count is the exact l0 weight count: constructors never store
explicit zeros, and no epsilon thresholding is applied anywhere.
"""

from __future__ import annotations

import bisect
import json
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp


class NetworkError(ValueError):
    """Raised for invalid network structure or invalid operation inputs."""


class ParseError(NetworkError):
    """Raised when a serialized network cannot be decoded.

    ``offset`` is the byte offset of the first undecodable character when
    the failure happened during JSON parsing, else None.
    """

    def __init__(self, message, offset=None):
        super().__init__(message)
        self.offset = offset


def rho_p(x, p: int = 2):
    """Rectified power unit max(0, x)**p (p=2 is the ReQU activation)."""
    if p < 1:
        raise ValueError(f"power must be a positive integer, got {p}")
    return np.maximum(0.0, x) ** p


@dataclass(frozen=True)
class SparseMatrix:
    """Immutable COO matrix; duplicate coordinates are rejected."""

    shape: tuple[int, int]
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64)
        cols = np.asarray(self.cols, dtype=np.int64)
        vals = np.asarray(self.vals, dtype=np.float64)
        if not (rows.shape == cols.shape == vals.shape):
            raise NetworkError("rows/cols/vals must have matching lengths")
        if rows.size:
            if rows.min(initial=0) < 0 or rows.max(initial=0) >= self.shape[0]:
                raise NetworkError("row index out of range")
            if cols.min(initial=0) < 0 or cols.max(initial=0) >= self.shape[1]:
                raise NetworkError("column index out of range")
            keys = rows * self.shape[1] + cols
            if np.unique(keys).size != keys.size:
                raise NetworkError("duplicate coordinate in sparse matrix")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "vals", vals)

    @classmethod
    def from_dense(cls, arr) -> "SparseMatrix":
        arr = np.atleast_2d(np.asarray(arr, dtype=np.float64))
        rows, cols = np.nonzero(arr)
        return cls(arr.shape, rows, cols, arr[rows, cols])

    @classmethod
    def from_entries(cls, shape, entries) -> "SparseMatrix":
        """Build from an iterable of (i, j, value); zeros are dropped."""
        kept = [(i, j, v) for i, j, v in entries if v != 0.0]
        if not kept:
            return cls(shape, np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0))
        rows, cols, vals = zip(*kept)
        return cls(shape, np.array(rows), np.array(cols), np.array(vals))

    @property
    def nnz(self) -> int:
        return int(self.vals.size)

    def max_abs(self) -> float:
        return float(np.abs(self.vals).max()) if self.nnz else 0.0

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape)
        out[self.rows, self.cols] = self.vals
        return out

    def to_csr(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.vals, (self.rows, self.cols)), shape=self.shape)

    def matmul_points(self, pts: np.ndarray) -> np.ndarray:
        """Apply to a batch of row vectors: (k, shape[1]) -> (k, shape[0])."""
        return (self.to_csr() @ pts.T).T


def _hstack(blocks: Sequence[SparseMatrix]) -> SparseMatrix:
    nrows = blocks[0].shape[0]
    if any(b.shape[0] != nrows for b in blocks):
        raise NetworkError("hstack requires equal row counts")
    offs = np.cumsum([0] + [b.shape[1] for b in blocks])
    rows = np.concatenate([b.rows for b in blocks])
    cols = np.concatenate([b.cols + o for b, o in zip(blocks, offs)])
    vals = np.concatenate([b.vals for b in blocks])
    return SparseMatrix((nrows, int(offs[-1])), rows, cols, vals)


def _vstack(blocks: Sequence[SparseMatrix]) -> SparseMatrix:
    ncols = blocks[0].shape[1]
    if any(b.shape[1] != ncols for b in blocks):
        raise NetworkError("vstack requires equal column counts")
    offs = np.cumsum([0] + [b.shape[0] for b in blocks])
    rows = np.concatenate([b.rows + o for b, o in zip(blocks, offs)])
    cols = np.concatenate([b.cols for b in blocks])
    vals = np.concatenate([b.vals for b in blocks])
    return SparseMatrix((int(offs[-1]), ncols), rows, cols, vals)


def _block_diag(a: SparseMatrix, b: SparseMatrix) -> SparseMatrix:
    shape = (a.shape[0] + b.shape[0], a.shape[1] + b.shape[1])
    rows = np.concatenate([a.rows, b.rows + a.shape[0]])
    cols = np.concatenate([a.cols, b.cols + a.shape[1]])
    vals = np.concatenate([a.vals, b.vals])
    return SparseMatrix(shape, rows, cols, vals)


@dataclass(frozen=True)
class SparseVector:
    """Immutable sparse vector (bias storage)."""

    size: int
    idx: np.ndarray
    vals: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.idx, dtype=np.int64)
        vals = np.asarray(self.vals, dtype=np.float64)
        if idx.shape != vals.shape:
            raise NetworkError("idx/vals must have matching lengths")
        if idx.size and (idx.min() < 0 or idx.max() >= self.size):
            raise NetworkError("bias index out of range")
        if np.unique(idx).size != idx.size:
            raise NetworkError("duplicate index in sparse vector")
        object.__setattr__(self, "idx", idx)
        object.__setattr__(self, "vals", vals)

    @classmethod
    def from_dense(cls, arr) -> "SparseVector":
        arr = np.asarray(arr, dtype=np.float64).ravel()
        idx = np.nonzero(arr)[0]
        return cls(arr.size, idx, arr[idx])

    @property
    def nnz(self) -> int:
        return int(self.vals.size)

    def max_abs(self) -> float:
        return float(np.abs(self.vals).max()) if self.nnz else 0.0

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.size)
        out[self.idx] = self.vals
        return out


@dataclass(frozen=True)
class Layer:
    weights: SparseMatrix
    bias: SparseVector

    def __post_init__(self):
        if self.weights.shape[0] != self.bias.size:
            raise NetworkError("bias length must equal the matrix row count")

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]


@dataclass(frozen=True)
class NeuralNetwork:
    """Architecture: sequence of affine layers; depth L means L affine maps
    with L-1 activations between them."""

    layers: tuple[Layer, ...]

    def __post_init__(self):
        if not self.layers:
            raise NetworkError("a network needs at least one layer")
        for k in range(1, len(self.layers)):
            if self.layers[k].in_dim != self.layers[k - 1].out_dim:
                raise NetworkError(
                    f"dimension chain broken between layers {k} and {k + 1}: "
                    f"{self.layers[k].in_dim} != {self.layers[k - 1].out_dim}"
                )
        object.__setattr__(self, "layers", tuple(self.layers))

    @classmethod
    def from_dense(cls, mats_and_biases) -> "NeuralNetwork":
        layers = [
            Layer(SparseMatrix.from_dense(a), SparseVector.from_dense(b))
            for a, b in mats_and_biases
        ]
        return cls(tuple(layers))

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    def depth(self) -> int:
        return len(self.layers)

    def weight_count(self) -> int:
        return sum(l.weights.nnz + l.bias.nnz for l in self.layers)

    def max_norm(self) -> float:
        return max(max(l.weights.max_abs(), l.bias.max_abs()) for l in self.layers)


def realize(net: NeuralNetwork, x) -> np.ndarray:
    """Evaluate the network at x (shape (d,) -> (d_out,) or (k, d) -> (k, d_out))."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    pts = x[None, :] if single else x
    if pts.ndim != 2 or pts.shape[1] != net.input_dim:
        raise NetworkError(
            f"input has {x.shape[-1] if x.ndim else 0} components, "
            f"network expects {net.input_dim}"
        )
    z = pts
    last = len(net.layers) - 1
    for k, layer in enumerate(net.layers):
        z = layer.weights.matmul_points(z) + layer.bias.to_dense()
        if k != last:
            z = np.maximum(0.0, z) ** 2
    return z[0] if single else z


def realize_fraction(net: NeuralNetwork, x) -> list[Fraction]:
    """Exact forward pass in rational arithmetic over the stored weights.

    Every stored double is a dyadic rational and the activation is a square,
    so the realization value is computed with zero rounding error.  Intended
    for small networks (cross-checks of gadget constructions and of the
    compressed hat-network evaluator)."""
    vec = [Fraction(float(v)) for v in np.asarray(x, dtype=np.float64).ravel()]
    if len(vec) != net.input_dim:
        raise NetworkError("input length mismatch")
    last = len(net.layers) - 1
    for k, layer in enumerate(net.layers):
        out = [Fraction(0)] * layer.out_dim
        w = layer.weights
        for i, j, v in zip(w.rows, w.cols, w.vals):
            out[i] += Fraction(float(v)) * vec[j]
        for i, v in zip(layer.bias.idx, layer.bias.vals):
            out[i] += Fraction(float(v))
        if k != last:
            out = [u * u if u > 0 else Fraction(0) for u in out]
        vec = out
    return vec


# ---------------------------------------------------------------------------
# growth policies and membership budgets
# ---------------------------------------------------------------------------

INF = float("inf")


@dataclass(frozen=True)
class GrowthPolicy:
    """Depth-growth and coefficient-growth functions.

    Parametric form: c(n) = max(1, ceil(scale * n**theta_c * log(2n)**kappa_c)),
    ell(n) = depth_cap (an integer >= 5, or inf for unbounded depth).
    Tabulated form: explicit non-decreasing maps given as sorted (n, value)
    breakpoints; the value at n is the one at the largest breakpoint <= n.
    """

    kind: str = "parametric"
    theta_c: float = 0.0
    kappa_c: float = 0.0
    scale: float = 1.0
    depth_cap: float = 5
    ell_table: tuple[tuple[int, float], ...] = ()
    c_table: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        if self.kind == "parametric":
            if self.theta_c < 0:
                raise ValueError("theta_c must be >= 0")
            if self.scale < 1:
                raise ValueError("scale must be >= 1")
            if self.depth_cap != INF and (self.depth_cap < 5 or self.depth_cap != int(self.depth_cap)):
                raise ValueError("depth_cap must be an integer >= 5 or inf")
        elif self.kind == "tabulated":
            for table, name in ((self.ell_table, "ell"), (self.c_table, "c")):
                if not table:
                    raise ValueError(f"tabulated policy needs a {name}_table")
                ns = [n for n, _ in table]
                vs = [v for _, v in table]
                if ns != sorted(ns) or ns[0] != 1:
                    raise ValueError(f"{name}_table must start at n=1 and be sorted")
                if any(b < a for a, b in zip(vs, vs[1:])):
                    raise ValueError(f"{name}_table must be non-decreasing")
        else:
            raise ValueError(f"unknown policy kind {self.kind!r}")

    @staticmethod
    def _lookup(table, n):
        pos = bisect.bisect_right([bp for bp, _ in table], n)
        return table[max(pos - 1, 0)][1]

    def ell(self, n: int) -> float:
        """Depth limit at weight budget n."""
        if n < 1:
            raise ValueError("n must be >= 1")
        if self.kind == "parametric":
            return self.depth_cap
        return self._lookup(self.ell_table, n)

    def c(self, n) -> float:
        """Coefficient magnitude limit at weight budget n (vectorized)."""
        if self.kind == "parametric":
            narr = np.asarray(n, dtype=np.float64)
            if np.any(narr < 1):
                raise ValueError("n must be >= 1")
            raw = self.scale * narr**self.theta_c * np.log(2.0 * narr) ** self.kappa_c
            out = np.maximum(1.0, np.ceil(raw))
            return float(out) if np.isscalar(n) else out
        if np.isscalar(n):
            return self._lookup(self.c_table, n)
        return np.array([self._lookup(self.c_table, int(v)) for v in np.asarray(n)])

    @property
    def ell_star(self) -> float:
        if self.kind == "parametric":
            return self.depth_cap
        return self.ell_table[-1][1]

    @property
    def c_star(self) -> float:
        if self.kind == "parametric":
            if self.theta_c > 0 or self.kappa_c > 0:
                return INF
            if self.kappa_c < 0:
                return self.c(1)
            return float(max(1.0, np.ceil(self.scale)))
        return self.c_table[-1][1]


@dataclass(frozen=True)
class SigmaBudget:
    """Weight/depth/magnitude budget defining one approximation set element.

    ``input_dim`` is the ambient dimension the realization must consume; when
    None the input-dimension check is skipped."""

    n: int
    policy: GrowthPolicy
    input_dim: int | None = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("budget n must be >= 1")

    @property
    def depth_limit(self) -> float:
        return self.policy.ell(self.n)

    @property
    def norm_limit(self) -> float:
        return self.policy.c(self.n)


def check_membership(net: NeuralNetwork, budget: SigmaBudget):
    """Check the budget constraints; returns (ok, list-of-violation strings).

    Infinite depth or norm limits are vacuously satisfied."""
    violations = []
    if budget.input_dim is not None and net.input_dim != budget.input_dim:
        violations.append(
            f"input_dim {net.input_dim} != required {budget.input_dim}"
        )
    if net.output_dim != 1:
        violations.append(f"output_dim {net.output_dim} != 1")
    if net.weight_count() > budget.n:
        violations.append(f"weight_count {net.weight_count()} > n {budget.n}")
    if net.depth() > budget.depth_limit:
        violations.append(f"depth {net.depth()} > ell(n) {budget.depth_limit}")
    if net.max_norm() > budget.norm_limit:
        violations.append(f"max_norm {net.max_norm()} > c(n) {budget.norm_limit}")
    return (not violations, violations)


# ---------------------------------------------------------------------------
# structural operations (depth equalization, summation, dead-layer removal)
# ---------------------------------------------------------------------------

def _monitor_boundedness(net, domain, op, samples=64, seed=0):
    """Probabilistic check that |realization| <= 1 on a sample of the box."""
    lo, hi = (np.asarray(a, dtype=np.float64) for a in domain)
    rng = np.random.default_rng(seed)
    pts = rng.uniform(lo, hi, size=(samples, net.input_dim))
    vals = realize(net, pts)
    worst = float(np.abs(vals).max())
    if worst > 1.0 + 1e-12:
        warnings.warn(
            f"{op}: sampled |output| reaches {worst:.3g} > 1; the identity "
            "gadgets are only exact for outputs in [-1, 1]",
            RuntimeWarning,
        )


# identity-passthrough gadget pair: maps (f+1, 1-f) through one activation
_GAMMA = Layer(
    SparseMatrix.from_dense([[0.25, -0.25], [-0.25, 0.25]]),
    SparseVector.from_dense([1.0, 1.0]),
)
_LAMBDA = Layer(
    SparseMatrix.from_dense([[0.25, -0.25]]),
    SparseVector.from_dense([0.0]),
)


def depth_extend(net: NeuralNetwork, target_depth: int, *, check_domain=None) -> NeuralNetwork:
    """Pad a scalar-output network to an exact depth.

    The realization is unchanged on every input whose original output lies in
    [-1, 1] (caller-asserted; pass ``check_domain=(lo, hi)`` for a sampled
    runtime check).  The encoding routes the pair (f+1, 1-f) through identity
    gadgets and decodes at the end, so the weight count at most doubles plus
    6 per inserted gadget layer."""
    if net.output_dim != 1:
        raise NetworkError("depth_extend requires output_dim == 1")
    k = net.depth()
    if target_depth < k:
        raise NetworkError(f"target_depth {target_depth} < current depth {k}")
    if target_depth == k:
        return net
    if check_domain is not None:
        _monitor_boundedness(net, check_domain, "depth_extend")

    if k == 1:
        # single affine layer: emit (f+1, 1-f) directly
        (lay,) = net.layers
        a, b = lay.weights, lay.bias.to_dense()
        enc_w = _vstack([a, SparseMatrix((1, a.shape[1]), -a.rows, a.cols, -a.vals)])
        enc_b = SparseVector.from_dense(np.concatenate([b + 1.0, 1.0 - b]))
        head = [Layer(enc_w, enc_b)]
        n_gadgets = target_depth - 2
    else:
        head = list(net.layers[: k - 2])
        # widen layer k-1 with a constant-one channel
        pen = net.layers[k - 2]
        wide_w = _vstack([pen.weights, SparseMatrix((1, pen.in_dim), [], [], [])])
        wide_b = SparseVector.from_dense(np.append(pen.bias.to_dense(), 1.0))
        head.append(Layer(wide_w, wide_b))
        # final original layer, duplicated with signs, consuming the 1-channel
        last = net.layers[k - 1]
        a, b = last.weights, float(last.bias.to_dense()[0])
        neg = SparseMatrix((1, a.shape[1]), a.rows, a.cols, -a.vals)
        ones = SparseMatrix.from_dense([[1.0]])
        enc_w = _vstack([_hstack([a, ones]), _hstack([neg, ones])])
        enc_b = SparseVector.from_dense([b, -b])
        head.append(Layer(enc_w, enc_b))
        n_gadgets = target_depth - k - 1

    layers = head + [_GAMMA] * n_gadgets + [_LAMBDA]
    return NeuralNetwork(tuple(layers))


def sum_networks(net1: NeuralNetwork, net2: NeuralNetwork, *, check_domain=None) -> NeuralNetwork:
    """Parallelize two scalar-output networks into one realizing their sum.

    Both realizations must be bounded in [-1, 1] on the intended domain
    (needed only when the depths differ, for the equalization gadgets).
    The result has depth max(L1, L2) and at most 9 * max(W1, W2) weights
    for non-degenerate depths."""
    if net1.input_dim != net2.input_dim:
        raise NetworkError(
            f"input dims differ: {net1.input_dim} != {net2.input_dim}"
        )
    if net1.output_dim != 1 or net2.output_dim != 1:
        raise NetworkError("sum_networks requires scalar outputs")
    if net1.depth() > net2.depth():
        net1, net2 = net2, net1
    if net1.depth() < net2.depth():
        net1 = depth_extend(net1, net2.depth(), check_domain=check_domain)
    ell = net1.depth()

    if ell == 1:
        a = _merge_rows(net1.layers[0].weights, net2.layers[0].weights)
        b = SparseVector.from_dense(
            net1.layers[0].bias.to_dense() + net2.layers[0].bias.to_dense()
        )
        return NeuralNetwork((Layer(a, b),))

    first = Layer(
        _vstack([net1.layers[0].weights, net2.layers[0].weights]),
        SparseVector.from_dense(
            np.concatenate(
                [net1.layers[0].bias.to_dense(), net2.layers[0].bias.to_dense()]
            )
        ),
    )
    mids = [
        Layer(
            _block_diag(l1.weights, l2.weights),
            SparseVector.from_dense(
                np.concatenate([l1.bias.to_dense(), l2.bias.to_dense()])
            ),
        )
        for l1, l2 in zip(net1.layers[1:-1], net2.layers[1:-1])
    ]
    l1, l2 = net1.layers[-1], net2.layers[-1]
    last = Layer(
        _hstack([l1.weights, l2.weights]),
        SparseVector.from_dense(l1.bias.to_dense() + l2.bias.to_dense()),
    )
    return NeuralNetwork(tuple([first] + mids + [last]))


def _merge_rows(a: SparseMatrix, b: SparseMatrix) -> SparseMatrix:
    dense = a.to_dense() + b.to_dense()
    return SparseMatrix.from_dense(dense)


def eliminate_dead_layers(net: NeuralNetwork) -> NeuralNetwork:
    """Truncate at all-zero layers.

    A layer with zero matrix and zero bias forces everything upstream through
    rho_2(0) = 0, so the realization equals that of the tail network fed the
    zero vector; this pass rewrites the network accordingly, shrinking the
    depth without changing the realization."""
    for j, layer in enumerate(net.layers):
        if layer.weights.nnz == 0 and layer.bias.nnz == 0:
            if j == len(net.layers) - 1:
                zero = Layer(
                    SparseMatrix((net.output_dim, net.input_dim), [], [], []),
                    SparseVector(net.output_dim, [], []),
                )
                return NeuralNetwork((zero,))
            nxt = net.layers[j + 1]
            entry = Layer(
                SparseMatrix((nxt.out_dim, net.input_dim), [], [], []),
                nxt.bias,
            )
            tail = NeuralNetwork((entry,) + net.layers[j + 2 :])
            return eliminate_dead_layers(tail)
    return net


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def serialize(net: NeuralNetwork) -> bytes:
    """Encode as UTF-8 JSON with full double round-trip precision."""
    layers = []
    for layer in net.layers:
        layers.append(
            {
                "rows": layer.out_dim,
                "cols": layer.in_dim,
                "entries": [
                    [int(i), int(j), float(v)]
                    for i, j, v in zip(
                        layer.weights.rows, layer.weights.cols, layer.weights.vals
                    )
                ],
                "bias": [
                    [int(i), float(v)]
                    for i, v in zip(layer.bias.idx, layer.bias.vals)
                ],
            }
        )
    doc = {"input_dim": net.input_dim, "layers": layers}
    return json.dumps(doc).encode("utf-8")


def deserialize(data: bytes) -> NeuralNetwork:
    """Decode a network; malformed input raises ParseError with a byte offset."""
    try:
        doc = json.loads(data.decode("utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", offset=exc.pos) from exc
    except UnicodeDecodeError as exc:
        raise ParseError("invalid UTF-8", offset=exc.start) from exc
    if not isinstance(doc, dict) or "layers" not in doc or "input_dim" not in doc:
        raise ParseError("missing input_dim/layers")
    if not doc["layers"]:
        raise ParseError("network must have at least one layer")
    layers = []
    prev = int(doc["input_dim"])
    for k, spec in enumerate(doc["layers"]):
        try:
            shape = (int(spec["rows"]), int(spec["cols"]))
            entries = spec["entries"]
            bias = spec["bias"]
        except (KeyError, TypeError) as exc:
            raise ParseError(f"layer {k + 1}: malformed record") from exc
        if shape[1] != prev:
            raise ParseError(
                f"layer {k + 1}: dimension chain violated "
                f"(cols {shape[1]} != previous rows {prev})"
            )
        try:
            w = SparseMatrix.from_entries(shape, [(i, j, v) for i, j, v in entries])
            b = SparseVector(
                shape[0],
                [i for i, _ in bias],
                [v for _, v in bias],
            )
        except NetworkError as exc:
            raise ParseError(f"layer {k + 1}: {exc}") from exc
        layers.append(Layer(w, b))
        prev = shape[0]
    return NeuralNetwork(tuple(layers))
