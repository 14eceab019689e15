"""
Recurrent regression network: stacked plain-RNN or LSTM layers followed by
an identity-activated recurrent output layer.

Every layer keeps the bias inside its weight matrices (column 0), so a
feedforward matrix for a layer with ``q`` units fed by ``k`` inputs is
``(G*q, k+1)`` and the recurrent matrix is ``(G*q, q+1)``, where ``G`` is 1
for a plain RNN and 4 for an LSTM (gate blocks ordered input, forget,
candidate, output).

Per recurrent layer and time step ``n``::

    a_n = BN(W [1, u_n]) + H [1, h_{n-1}]
    h_n = tanh(a_n)                              # plain RNN
    h_n = o * tanh(c_n), c_n = f*c_{n-1} + i*g   # LSTM

The output layer feeds back its own previous output::

    y_n = W_out [1, h^L_n] + H_out [1, y_{n-1}]

Initial states are zero. Batch normalization only touches the feedforward
pre-activations and its statistics pool the batch and time axes. Dropout
(inverted scaling) is applied to each recurrent layer's output on its way
to the next layer, never on the recurrent path.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from ..errors import DimensionError

CellType = Literal["rnn", "lstm"]

FORMAT_VERSION = 1


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (np.tanh(0.5 * x) + 1.0)


def _gates(cell_type: str) -> int:
    return 4 if cell_type == "lstm" else 1


@dataclass
class LayerParams:
    """View on one layer of a :class:`RecurrentModel`."""

    W: np.ndarray
    H: np.ndarray
    activation: Literal["tanh", "identity"]
    gamma: np.ndarray | None = None
    beta: np.ndarray | None = None


@dataclass
class RecurrentModel:
    cell_type: CellType
    input_dim: int
    hidden: tuple[int, ...]
    context_radius: int
    batchnorm: bool = True
    normalize_frames: bool = False
    sample_rate: int = 16000
    hop: int = 80
    bn_momentum: float = 0.99
    bn_eps: float = 1e-5
    params: dict[str, np.ndarray] = field(default_factory=dict)
    buffers: dict[str, np.ndarray] = field(default_factory=dict)
    version: int = FORMAT_VERSION

    @property
    def output_dim(self) -> int:
        return self.input_dim

    @property
    def window(self) -> int:
        return 2 * self.context_radius + 1

    @property
    def n_layers(self) -> int:
        return len(self.hidden)

    @property
    def layers(self) -> list[LayerParams]:
        out = []
        for l in range(self.n_layers):
            p = self.params
            out.append(LayerParams(p[f"layer{l}.W"], p[f"layer{l}.H"], "tanh",
                                   p.get(f"layer{l}.gamma"), p.get(f"layer{l}.beta")))
        out.append(LayerParams(self.params["out.W"], self.params["out.H"], "identity"))
        return out

    def param_names(self) -> list[str]:
        return list(self.params)

    def n_params(self) -> int:
        return sum(v.size for v in self.params.values())

    def copy(self) -> "RecurrentModel":
        return RecurrentModel(
            self.cell_type, self.input_dim, tuple(self.hidden), self.context_radius,
            self.batchnorm, self.normalize_frames, self.sample_rate, self.hop,
            self.bn_momentum, self.bn_eps,
            {k: v.copy() for k, v in self.params.items()},
            {k: v.copy() for k, v in self.buffers.items()},
            self.version)


def init_model(input_dim: int, hidden: tuple[int, ...] | list[int], context_radius: int,
               cell_type: CellType = "lstm", seed: int = 0, batchnorm: bool = True,
               normalize_frames: bool = False, sample_rate: int = 16000, hop: int = 80,
               bn_momentum: float = 0.99, bn_eps: float = 1e-5) -> RecurrentModel:
    """Fresh model with fan-in scaled feedforward weights and orthogonal recurrent blocks."""
    if cell_type not in ("rnn", "lstm"):
        raise ValueError(f"unknown cell type {cell_type!r}")
    hidden = tuple(int(h) for h in hidden)
    if not hidden or min(hidden) < 1 or input_dim < 1 or context_radius < 0:
        raise DimensionError("layer widths and input_dim must be positive")
    rng = np.random.default_rng(seed)
    G = _gates(cell_type)
    params: dict[str, np.ndarray] = {}
    buffers: dict[str, np.ndarray] = {}
    fan_in = input_dim
    for l, q in enumerate(hidden):
        bound = 1.0 / np.sqrt(fan_in)
        W = np.zeros((G * q, fan_in + 1))
        W[:, 1:] = rng.uniform(-bound, bound, size=(G * q, fan_in))
        H = np.zeros((G * q, q + 1))
        for g in range(G):
            a = rng.standard_normal((q, q))
            u, _, vt = np.linalg.svd(a)
            H[g * q:(g + 1) * q, 1:] = 0.9 * (u @ vt)
        if cell_type == "lstm":
            H[q:2 * q, 0] = 1.0        # forget-gate bias
        params[f"layer{l}.W"] = W
        params[f"layer{l}.H"] = H
        if batchnorm:
            params[f"layer{l}.gamma"] = np.ones(G * q)
            params[f"layer{l}.beta"] = np.zeros(G * q)
            buffers[f"layer{l}.running_mean"] = np.zeros(G * q)
            buffers[f"layer{l}.running_var"] = np.ones(G * q)
        fan_in = q
    bound = 1.0 / np.sqrt(fan_in)
    W = np.zeros((input_dim, fan_in + 1))
    W[:, 1:] = rng.uniform(-bound, bound, size=(input_dim, fan_in))
    params["out.W"] = W
    # output feedback starts switched off and is learned from zero
    params["out.H"] = np.zeros((input_dim, input_dim + 1))
    return RecurrentModel(cell_type, input_dim, hidden, context_radius, batchnorm,
                          normalize_frames, sample_rate, hop, bn_momentum, bn_eps,
                          params, buffers)


@dataclass
class ForwardCache:
    x: np.ndarray
    train: bool
    layers: list[dict] = field(default_factory=list)
    out_in: np.ndarray | None = None
    y: np.ndarray | None = None


def _affine(W: np.ndarray, u: np.ndarray) -> np.ndarray:
    """``W @ [1, u]`` over the last axis of ``u``."""
    return u @ W[:, 1:].T + W[:, 0]


def _check_input(model: RecurrentModel, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 2:
        x = x[None]
    if x.ndim != 3 or x.shape[2] != model.input_dim:
        raise DimensionError(
            f"expected (batch, steps, {model.input_dim}) input, got {x.shape}")
    return x


def forward(model: RecurrentModel, x: np.ndarray, train: bool = False,
            dropout: float = 0.0, rng: np.random.Generator | None = None,
            masks: list[np.ndarray] | None = None,
            update_stats: bool = False) -> tuple[np.ndarray, ForwardCache]:
    """Run the network over ``x`` of shape ``(batch, steps, M)`` (or ``(steps, M)``).

    ``train`` selects batch statistics for normalization and enables
    dropout. Masks are drawn from ``rng`` unless given explicitly.
    ``update_stats`` folds the batch statistics into the running ones.
    Returns outputs of the same shape as ``x`` (with a batch axis) and the
    cache needed by :func:`backward`.
    """
    x = _check_input(model, x)
    B, T, _ = x.shape
    cache = ForwardCache(x=x, train=train)
    use_dropout = train and (dropout > 0.0 or masks is not None)
    u = x
    G = _gates(model.cell_type)
    for l, q in enumerate(model.hidden):
        W = model.params[f"layer{l}.W"]
        H = model.params[f"layer{l}.H"]
        A = _affine(W, u)
        lc: dict = {"u": u}
        if model.batchnorm:
            gamma = model.params[f"layer{l}.gamma"]
            beta = model.params[f"layer{l}.beta"]
            if train:
                mu = A.mean(axis=(0, 1))
                var = A.var(axis=(0, 1))
                if update_stats:
                    m = model.bn_momentum
                    rm = model.buffers[f"layer{l}.running_mean"]
                    rv = model.buffers[f"layer{l}.running_var"]
                    rm *= m
                    rm += (1 - m) * mu
                    n = B * T
                    rv *= m
                    rv += (1 - m) * (var * n / max(n - 1, 1))
            else:
                mu = model.buffers[f"layer{l}.running_mean"]
                var = model.buffers[f"layer{l}.running_var"]
            inv_std = 1.0 / np.sqrt(var + model.bn_eps)
            A_hat = (A - mu) * inv_std
            Z = A_hat * gamma + beta
            lc.update(A_hat=A_hat, inv_std=inv_std)
        else:
            Z = A
        h_all = np.empty((B, T, q))
        h_prev = np.zeros((B, q))
        if G == 4:
            gates = np.empty((B, T, 4 * q))
            c_all = np.empty((B, T, q))
            c_prev = np.zeros((B, q))
            for n in range(T):
                a = Z[:, n] + _affine(H, h_prev)
                i = _sigmoid(a[:, :q])
                f = _sigmoid(a[:, q:2 * q])
                g = np.tanh(a[:, 2 * q:3 * q])
                o = _sigmoid(a[:, 3 * q:])
                c = f * c_prev + i * g
                h = o * np.tanh(c)
                gates[:, n, :q] = i
                gates[:, n, q:2 * q] = f
                gates[:, n, 2 * q:3 * q] = g
                gates[:, n, 3 * q:] = o
                c_all[:, n] = c
                h_all[:, n] = h
                h_prev, c_prev = h, c
            lc.update(gates=gates, c=c_all)
        else:
            for n in range(T):
                h = np.tanh(Z[:, n] + _affine(H, h_prev))
                h_all[:, n] = h
                h_prev = h
        lc["h"] = h_all
        if use_dropout:
            if masks is not None:
                mask = masks[l]
            else:
                rng = rng if rng is not None else np.random.default_rng()
                mask = (rng.random((B, T, q)) >= dropout) / (1.0 - dropout)
            lc["mask"] = mask
            u = h_all * mask
        else:
            u = h_all
        cache.layers.append(lc)
    Wo = model.params["out.W"]
    Ho = model.params["out.H"]
    out_in = _affine(Wo, u)
    y = np.empty((B, T, model.output_dim))
    y_prev = np.zeros((B, model.output_dim))
    for n in range(T):
        y_prev = out_in[:, n] + _affine(Ho, y_prev)
        y[:, n] = y_prev
    cache.out_in = u
    cache.y = y
    return y, cache


def predict(model: RecurrentModel, x: np.ndarray) -> np.ndarray:
    """Inference-mode forward pass (running statistics, no dropout)."""
    return forward(model, x, train=False)[0]


def mse_loss(outputs: np.ndarray, targets: np.ndarray) -> float:
    outputs = np.asarray(outputs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if outputs.shape != targets.shape:
        raise DimensionError(f"shape mismatch: {outputs.shape} vs {targets.shape}")
    d = outputs - targets
    return float(np.mean(d * d))


def _accumulate_affine_grad(dA: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Gradient of ``W`` for ``A = W [1, u]`` given ``dA``."""
    k = dA.shape[-1]
    dA2 = dA.reshape(-1, k)
    u2 = u.reshape(-1, u.shape[-1])
    g = np.empty((k, u2.shape[1] + 1))
    g[:, 0] = dA2.sum(axis=0)
    g[:, 1:] = dA2.T @ u2
    return g


def backward(model: RecurrentModel, cache: ForwardCache,
             targets: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
    """Loss and exact gradients of :func:`mse_loss` by backpropagation through time."""
    y = cache.y
    targets = np.asarray(targets, dtype=np.float64)
    if targets.ndim == 2:
        targets = targets[None]
    if targets.shape != y.shape:
        raise DimensionError(f"target shape {targets.shape} vs output {y.shape}")
    B, T, M = y.shape
    diff = y - targets
    loss = float(np.mean(diff * diff))
    dY = diff * (2.0 / diff.size)
    grads: dict[str, np.ndarray] = {}

    Wo = model.params["out.W"]
    Ho = model.params["out.H"]
    d_out_in = np.empty_like(dY)
    dHo = np.zeros_like(Ho)
    carry = np.zeros((B, M))
    for n in range(T - 1, -1, -1):
        dy = dY[:, n] + carry
        d_out_in[:, n] = dy
        y_prev = y[:, n - 1] if n > 0 else np.zeros((B, M))
        dHo[:, 0] += dy.sum(axis=0)
        dHo[:, 1:] += dy.T @ y_prev
        carry = dy @ Ho[:, 1:]
    grads["out.H"] = dHo
    grads["out.W"] = _accumulate_affine_grad(d_out_in, cache.out_in)
    du = d_out_in @ Wo[:, 1:]

    G = _gates(model.cell_type)
    for l in range(model.n_layers - 1, -1, -1):
        q = model.hidden[l]
        lc = cache.layers[l]
        W = model.params[f"layer{l}.W"]
        H = model.params[f"layer{l}.H"]
        dh_out = du * lc["mask"] if "mask" in lc else du
        h_all = lc["h"]
        dZ = np.empty((B, T, G * q))
        dH = np.zeros_like(H)
        dh_rec = np.zeros((B, q))
        if G == 4:
            gates = lc["gates"]
            c_all = lc["c"]
            dc_next = np.zeros((B, q))
            for n in range(T - 1, -1, -1):
                i = gates[:, n, :q]
                f = gates[:, n, q:2 * q]
                g = gates[:, n, 2 * q:3 * q]
                o = gates[:, n, 3 * q:]
                c = c_all[:, n]
                c_prev = c_all[:, n - 1] if n > 0 else np.zeros((B, q))
                tc = np.tanh(c)
                dh = dh_out[:, n] + dh_rec
                dc = dc_next + dh * o * (1.0 - tc * tc)
                da = dZ[:, n]
                da[:, :q] = dc * g * i * (1.0 - i)
                da[:, q:2 * q] = dc * c_prev * f * (1.0 - f)
                da[:, 2 * q:3 * q] = dc * i * (1.0 - g * g)
                da[:, 3 * q:] = dh * tc * o * (1.0 - o)
                dc_next = dc * f
                h_prev = h_all[:, n - 1] if n > 0 else np.zeros((B, q))
                dH[:, 0] += da.sum(axis=0)
                dH[:, 1:] += da.T @ h_prev
                dh_rec = da @ H[:, 1:]
        else:
            for n in range(T - 1, -1, -1):
                h = h_all[:, n]
                da = (dh_out[:, n] + dh_rec) * (1.0 - h * h)
                dZ[:, n] = da
                h_prev = h_all[:, n - 1] if n > 0 else np.zeros((B, q))
                dH[:, 0] += da.sum(axis=0)
                dH[:, 1:] += da.T @ h_prev
                dh_rec = da @ H[:, 1:]
        grads[f"layer{l}.H"] = dH
        if model.batchnorm:
            gamma = model.params[f"layer{l}.gamma"]
            A_hat = lc["A_hat"]
            inv_std = lc["inv_std"]
            grads[f"layer{l}.gamma"] = (dZ * A_hat).sum(axis=(0, 1))
            grads[f"layer{l}.beta"] = dZ.sum(axis=(0, 1))
            dA_hat = dZ * gamma
            if cache.train:
                N = B * T
                dA = (inv_std / N) * (N * dA_hat - dA_hat.sum(axis=(0, 1))
                                      - A_hat * (dA_hat * A_hat).sum(axis=(0, 1)))
            else:
                dA = dA_hat * inv_std
        else:
            dA = dZ
        grads[f"layer{l}.W"] = _accumulate_affine_grad(dA, lc["u"])
        du = dA @ W[:, 1:]
    ordered = {k: grads[k] for k in model.params}
    return loss, ordered


def loss_and_grad(model: RecurrentModel, x: np.ndarray, targets: np.ndarray,
                  train: bool = True, masks: list[np.ndarray] | None = None,
                  dropout: float = 0.0, rng: np.random.Generator | None = None,
                  ) -> tuple[float, dict[str, np.ndarray]]:
    _, cache = forward(model, x, train=train, masks=masks, dropout=dropout, rng=rng)
    return backward(model, cache, targets)
