"""
Group-aware scoring network with hand-written backpropagation.

The model evaluated for an embedded arm ``X~`` on a graph with normalized
adjacency power ``S^k`` is::

    H_gnn = sqrt(1/m) * act(S^k X~ Theta_gnn)                  (N_c x m)
    H_0   = [H_gnn, X~]                                        (N_c x d'),  d' = m + d_x * N_c
    H_l   = sqrt(1/m) * act(H_{l-1} Theta_l)        l < L
    r_all = sqrt(1/m) * H_{L-1} Theta_L                        (N_c,)

and the score of an arm from group ``c`` is ``r_all[c]``. Rows of the FC head do
not interact, so scoring and gradients only ever need row ``c``: the batched
helpers (``predict_batch``, ``gradient_batch``, ``loss_gradient``) work on
``(S^k X~)[c]`` directly. ``forward`` keeps the full-matrix pass for inspection.

Parameters flatten in a fixed order: ``Theta_gnn`` row-major, then
``Theta_1 .. Theta_L`` row-major. Confidence matrices and snapshots rely on it.

Networks without ``Theta_gnn`` are plain FC models used by the baselines; their
input row is the raw context when ``n_groups == 1`` and the embedded row
``X~[c]`` otherwise.
"""

import json
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import expit

from agg_bandit.embedding import EmbeddedArm, embedded_rows
from agg_bandit.errors import InvalidArgumentError, ShapeMismatchError
from agg_bandit.graph_model import NormalizedAdjacency
from agg_bandit.registry import Registry


@dataclass(frozen=True)
class Activation:
    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], np.ndarray]


ACTIVATIONS: Registry[Activation] = Registry("activation")
ACTIVATIONS.add("tanh", Activation("tanh", np.tanh, lambda z: 1.0 - np.tanh(z) ** 2))
ACTIVATIONS.add("sigmoid", Activation("sigmoid", expit, lambda z: expit(z) * (1.0 - expit(z))))
ACTIVATIONS.add("relu", Activation("relu", lambda z: np.maximum(z, 0.0), lambda z: (z > 0).astype(float)))


def param_count(m: int, depth: int, d_x: int, n_groups: int) -> int:
    """Number of parameters of the group-aware network: ``d~ m + d' m + (L - 2) m^2 + m``."""
    d_tilde = d_x * n_groups
    return d_tilde * m + (m + d_tilde) * m + (depth - 2) * m * m + m


@dataclass
class NetworkParams:
    """``Theta_gnn`` (optional) plus the FC stack ``Theta_1 .. Theta_L``."""

    theta_fc: list[np.ndarray]
    theta_gnn: np.ndarray | None = None
    n_groups: int = 1
    activation: str = "tanh"
    _sizes: list[tuple[int, int]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        ACTIVATIONS.require(self.activation)
        if len(self.theta_fc) < 2:
            raise InvalidArgumentError(f"Depth must be >= 2, got {len(self.theta_fc)}.")
        m = self.theta_fc[0].shape[1]
        if self.theta_fc[-1].shape != (m, 1):
            raise ShapeMismatchError(f"Output layer must be ({m}, 1), got {self.theta_fc[-1].shape}.")
        for layer in self.theta_fc[1:-1]:
            if layer.shape != (m, m):
                raise ShapeMismatchError(f"Hidden layers must be ({m}, {m}), got {layer.shape}.")

        if self.theta_gnn is not None:
            rows, width = self.theta_gnn.shape
            if width != m or rows % self.n_groups:
                raise ShapeMismatchError(f"Theta_gnn shape {self.theta_gnn.shape} does not fit m={m}, N_c={self.n_groups}.")
            if self.theta_fc[0].shape[0] != m + rows:
                raise ShapeMismatchError(f"Theta_1 must have {m + rows} rows, got {self.theta_fc[0].shape[0]}.")
        elif self.theta_fc[0].shape[0] % self.n_groups:
            raise ShapeMismatchError(f"Input dimension {self.theta_fc[0].shape[0]} is not a multiple of N_c.")

        blocks = ([self.theta_gnn] if self.theta_gnn is not None else []) + list(self.theta_fc)
        self._sizes = [b.shape for b in blocks]

    @property
    def width(self) -> int:
        return self.theta_fc[0].shape[1]

    @property
    def depth(self) -> int:
        return len(self.theta_fc)

    @property
    def uses_graph(self) -> bool:
        return self.theta_gnn is not None

    @property
    def d_x(self) -> int:
        if self.theta_gnn is not None:
            return self.theta_gnn.shape[0] // self.n_groups
        return self.theta_fc[0].shape[0] // self.n_groups

    @property
    def act(self) -> Activation:
        return ACTIVATIONS.require(self.activation)

    @property
    def n_params(self) -> int:
        return sum(r * c for r, c in self._sizes)

    def blocks(self) -> list[np.ndarray]:
        return ([self.theta_gnn] if self.theta_gnn is not None else []) + list(self.theta_fc)

    def flatten(self) -> np.ndarray:
        return np.concatenate([b.ravel() for b in self.blocks()])

    def unflatten(self, vector: np.ndarray) -> "NetworkParams":
        """New params with this instance's shapes, filled from a canonical p-vector."""
        vector = np.asarray(vector, dtype=float)
        if vector.shape != (self.n_params,):
            raise ShapeMismatchError(f"Expected a vector of length {self.n_params}, got shape {vector.shape}.")
        out, offset = [], 0
        for rows, cols in self._sizes:
            out.append(vector[offset : offset + rows * cols].reshape(rows, cols).copy())
            offset += rows * cols
        gnn = out.pop(0) if self.theta_gnn is not None else None
        return NetworkParams(theta_fc=out, theta_gnn=gnn, n_groups=self.n_groups, activation=self.activation)

    def copy(self) -> "NetworkParams":
        return self.unflatten(self.flatten())

    def shape_header(self) -> dict[str, object]:
        return {
            "m": self.width,
            "L": self.depth,
            "d_x": self.d_x,
            "n_groups": self.n_groups,
            "activation": self.activation,
            "gnn": self.uses_graph,
        }

    def save(self, path: str | Path) -> Path:
        """Write the canonical p-vector as one value per line under a JSON shape header."""
        path = Path(path)
        np.savetxt(path, self.flatten(), fmt="%.17g", header=json.dumps(self.shape_header()))
        return path

    @classmethod
    def load(cls, path: str | Path) -> "NetworkParams":
        path = Path(path)
        with path.open() as fh:
            header = json.loads(fh.readline().lstrip("#").strip())
        template = zeros_like_shape(**header)
        return template.unflatten(np.atleast_1d(np.loadtxt(path)))


def zeros_like_shape(m: int, L: int, d_x: int, n_groups: int, activation: str, gnn: bool) -> NetworkParams:
    if gnn:
        input_dim = m + d_x * n_groups
    else:
        input_dim = d_x * n_groups
    sizes = [(input_dim, m)] + [(m, m)] * (L - 2) + [(m, 1)]
    return NetworkParams(
        theta_fc=[np.zeros(s) for s in sizes],
        theta_gnn=np.zeros((d_x * n_groups, m)) if gnn else None,
        n_groups=n_groups,
        activation=activation,
    )


def init_params(m: int, L: int, d_x: int, n_groups: int, rng_seed: int, activation: str = "tanh") -> NetworkParams:
    """``Theta_gnn``, ``Theta_1 .. Theta_{L-1}`` from N(0, 1); ``Theta_L`` from N(0, 1/m)."""
    if m < 1 or L < 2:
        raise InvalidArgumentError(f"Need m >= 1 and L >= 2, got m={m}, L={L}.")
    rng = np.random.default_rng(rng_seed)
    d_tilde = d_x * n_groups
    theta_gnn = rng.standard_normal((d_tilde, m))
    theta_fc = _init_fc(rng, m, L, m + d_tilde)
    return NetworkParams(theta_fc=theta_fc, theta_gnn=theta_gnn, n_groups=n_groups, activation=activation)


def init_fc_params(m: int, L: int, d_x: int, n_groups: int, rng_seed: int, activation: str = "tanh") -> NetworkParams:
    """Plain FC model over the raw context (``n_groups == 1``) or the embedded row ``X~[c]``."""
    if m < 1 or L < 2:
        raise InvalidArgumentError(f"Need m >= 1 and L >= 2, got m={m}, L={L}.")
    rng = np.random.default_rng(rng_seed)
    return NetworkParams(theta_fc=_init_fc(rng, m, L, d_x * n_groups), n_groups=n_groups, activation=activation)


def _init_fc(rng: np.random.Generator, m: int, L: int, input_dim: int) -> list[np.ndarray]:
    layers = [rng.standard_normal((input_dim, m))]
    layers += [rng.standard_normal((m, m)) for _ in range(L - 2)]
    layers.append(rng.normal(0.0, np.sqrt(1.0 / m), size=(m, 1)))
    return layers


# ---------------------------------------------------------------------------
# Full-matrix forward pass
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ForwardTrace:
    h_agg_pre: np.ndarray
    h_gnn: np.ndarray
    embedded: EmbeddedArm
    pre_activations: list[np.ndarray]
    hidden: list[np.ndarray]
    r_all: np.ndarray
    group: int

    @property
    def h_0(self) -> np.ndarray:
        return np.hstack([self.h_gnn, self.embedded.materialize()])

    @property
    def selected(self) -> float:
        return float(self.r_all[self.group])


def _s_matrix(s_power: NormalizedAdjacency | np.ndarray) -> np.ndarray:
    return s_power.s_power if isinstance(s_power, NormalizedAdjacency) else np.asarray(s_power, dtype=float)


def _check_graph_inputs(s: np.ndarray, n_groups: int, d_x: int, params: NetworkParams) -> None:
    if not params.uses_graph:
        raise InvalidArgumentError("Params have no Theta_gnn; use the batched helpers for FC models.")
    if s.shape != (params.n_groups, params.n_groups):
        raise ShapeMismatchError(f"S^k must be {params.n_groups}x{params.n_groups}, got {s.shape}.")
    if n_groups != params.n_groups or d_x != params.d_x:
        raise ShapeMismatchError(
            f"Embedded arm ({n_groups} groups, d_x={d_x}) does not match params "
            f"({params.n_groups} groups, d_x={params.d_x})."
        )


def forward(
    s_power: NormalizedAdjacency | np.ndarray,
    e: EmbeddedArm,
    c: int,
    params: NetworkParams,
) -> tuple[float, ForwardTrace]:
    s = _s_matrix(s_power)
    _check_graph_inputs(s, e.n_groups, e.d_x, params)
    if not 0 <= c < params.n_groups:
        raise InvalidArgumentError(f"Group {c} out of range [0, {params.n_groups}).")

    act, scale = params.act, np.sqrt(1.0 / params.width)
    h_agg_pre = s @ e.multiply_right(params.theta_gnn)
    h_gnn = scale * act.fn(h_agg_pre)

    # H_0 Theta_1 = H_gnn Theta_1[:m] + X~ Theta_1[m:]
    theta_1 = params.theta_fc[0]
    z = h_gnn @ theta_1[: params.width] + e.multiply_right(theta_1[params.width :])
    pre, hidden = [z], []
    h = scale * act.fn(z)
    hidden.append(h)
    for theta in params.theta_fc[1:-1]:
        z = h @ theta
        pre.append(z)
        h = scale * act.fn(z)
        hidden.append(h)
    r_all = scale * (h @ params.theta_fc[-1])[:, 0]

    trace = ForwardTrace(
        h_agg_pre=h_agg_pre,
        h_gnn=h_gnn,
        embedded=e,
        pre_activations=pre,
        hidden=hidden,
        r_all=r_all,
        group=c,
    )
    return trace.selected, trace


def gradient(s_power: NormalizedAdjacency | np.ndarray, e: EmbeddedArm, c: int, params: NetworkParams) -> np.ndarray:
    """Exact gradient of ``r_all[c]`` with respect to the flattened parameters."""
    s = _s_matrix(s_power)
    _check_graph_inputs(s, e.n_groups, e.d_x, params)
    _, grads = gradient_batch(params, e.features[None, :], np.array([c]), s)
    return grads[0]


# ---------------------------------------------------------------------------
# Batched row-selected passes
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class _RowPass:
    """Cached activations for a batch of (context, group) rows."""

    agg_rows: np.ndarray | None  # (S^k X~)[c] per entry
    agg_pre: np.ndarray | None
    inputs: list[np.ndarray]  # h_0 .. h_{L-1}
    pre: list[np.ndarray]  # z_1 .. z_{L-1}
    out: np.ndarray


def _row_pass(
    params: NetworkParams,
    features: np.ndarray,
    groups: np.ndarray,
    s_power: NormalizedAdjacency | np.ndarray | None,
) -> _RowPass:
    features = np.atleast_2d(np.asarray(features, dtype=float))
    groups = np.asarray(groups, dtype=int).reshape(-1)
    if features.shape[0] != groups.shape[0]:
        raise ShapeMismatchError(f"{features.shape[0]} contexts but {groups.shape[0]} group labels.")
    if features.shape[1] != params.d_x:
        raise ShapeMismatchError(f"Contexts have dimension {features.shape[1]}, params expect {params.d_x}.")
    if params.n_groups > 1 and (groups.min(initial=0) < 0 or groups.max(initial=0) >= params.n_groups):
        raise InvalidArgumentError(f"Group labels must lie in [0, {params.n_groups}).")

    act, scale = params.act, np.sqrt(1.0 / params.width)
    batch = features.shape[0]
    agg_rows = agg_pre = None
    if params.uses_graph:
        if s_power is None:
            raise InvalidArgumentError("A graph-aware network needs S^k.")
        s = _s_matrix(s_power)
        if s.shape != (params.n_groups, params.n_groups):
            raise ShapeMismatchError(f"S^k must be {params.n_groups}x{params.n_groups}, got {s.shape}.")
        # row c of S^k X~ holds S^k[c, c'] * x in block c'
        agg_rows = (s[groups][:, :, None] * features[:, None, :]).reshape(batch, -1)
        agg_pre = agg_rows @ params.theta_gnn
        h0 = np.hstack([scale * act.fn(agg_pre), embedded_rows(features, groups, params.n_groups)])
    elif params.n_groups > 1:
        h0 = embedded_rows(features, groups, params.n_groups)
    else:
        h0 = features

    inputs, pre = [h0], []
    h = h0
    for theta in params.theta_fc[:-1]:
        z = h @ theta
        pre.append(z)
        h = scale * act.fn(z)
        inputs.append(h)
    out = scale * (h @ params.theta_fc[-1])[:, 0]
    return _RowPass(agg_rows=agg_rows, agg_pre=agg_pre, inputs=inputs, pre=pre, out=out)


def _backward(params: NetworkParams, cache: _RowPass) -> list[tuple[np.ndarray, np.ndarray]]:
    """
    Per-block ``(input, delta)`` pairs in canonical order.

    The gradient of every block for entry ``b`` is ``outer(input[b], delta[b])``.
    """
    act, scale = params.act, np.sqrt(1.0 / params.width)
    batch = cache.out.shape[0]
    pairs: list[tuple[np.ndarray, np.ndarray]] = [(cache.inputs[-1], np.full((batch, 1), scale))]

    upstream = np.broadcast_to(scale * params.theta_fc[-1][:, 0], (batch, params.width))
    for layer in range(params.depth - 2, -1, -1):
        delta = upstream * scale * act.grad(cache.pre[layer])
        pairs.append((cache.inputs[layer], delta))
        upstream = delta @ params.theta_fc[layer].T

    if params.uses_graph:
        delta = upstream[:, : params.width] * scale * act.grad(cache.agg_pre)
        pairs.append((cache.agg_rows, delta))
    pairs.reverse()
    return pairs


def predict_batch(
    params: NetworkParams,
    features: np.ndarray,
    groups: np.ndarray,
    s_power: NormalizedAdjacency | np.ndarray | None = None,
) -> np.ndarray:
    return _row_pass(params, features, groups, s_power).out


def gradient_batch(
    params: NetworkParams,
    features: np.ndarray,
    groups: np.ndarray,
    s_power: NormalizedAdjacency | np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Predictions ``(B,)`` and per-entry flattened gradients ``(B, p)``."""
    cache = _row_pass(params, features, groups, s_power)
    batch = cache.out.shape[0]
    grads = [(inp[:, :, None] * delta[:, None, :]).reshape(batch, -1) for inp, delta in _backward(params, cache)]
    return cache.out, np.concatenate(grads, axis=1)


def loss_gradient(
    params: NetworkParams,
    features: np.ndarray,
    groups: np.ndarray,
    targets: np.ndarray,
    s_power: NormalizedAdjacency | np.ndarray | None = None,
) -> tuple[float, np.ndarray]:
    """``1/2 sum (f - r)^2`` and its gradient ``sum (f - r) g``, without forming per-entry gradients."""
    cache = _row_pass(params, features, groups, s_power)
    residual = cache.out - np.asarray(targets, dtype=float)
    grads = [(inp.T @ (residual[:, None] * delta)).ravel() for inp, delta in _backward(params, cache)]
    return 0.5 * float(residual @ residual), np.concatenate(grads)
