"""Dense networks with reverse-mode gradients, written directly on numpy.

Provides the feed-forward trunk, the continuous Q head that decomposes
Q(x, u) = V(x) - 0.5 * (u - mu(x))^T P(x) (u - mu(x)) with P = L L^T built
from a lower-triangular L (diagonal through exp, hence positive definite),
Adam/SGD parameter updates, Polyak averaging, and a binary checkpoint format.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import CheckpointError

MAX_LAYERS = 20
MAX_UNITS = 256
ACTIVATIONS = ("relu", "tanh", "linear")

CHECKPOINT_MAGIC = b"NAFCKPT1"

# raw pre-exponential bound for the diagonal of L; keeps P finite without
# touching the region any sane training run visits
_L_RAW_LIMIT = 30.0


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "tanh":
        return np.tanh(z)
    return z


def _activate_grad(y: np.ndarray, kind: str) -> np.ndarray:
    # derivative expressed through the activation output
    if kind == "relu":
        return (y > 0.0).astype(np.float64)
    if kind == "tanh":
        return 1.0 - y * y
    return np.ones_like(y)


def init_linear(rng: np.random.Generator, fan_in: int, fan_out: int):
    bound = 1.0 / np.sqrt(fan_in)
    w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
    b = rng.uniform(-bound, bound, size=fan_out)
    return w, b


class DenseNet:
    """Plain fully-connected stack: y = act(x @ W + b) per layer."""

    def __init__(self, dims, activations, rng: np.random.Generator):
        if len(activations) != len(dims) - 1:
            raise ValueError("need one activation per layer")
        if len(dims) - 1 > MAX_LAYERS:
            raise ValueError(f"at most {MAX_LAYERS} layers supported")
        if dims[0] < 1:
            raise ValueError("input dimension must be positive")
        for d in dims[1:]:
            # the width cap applies to layers, not to the input size
            if not 0 < d <= MAX_UNITS:
                raise ValueError(f"layer width {d} outside supported range")
        for a in activations:
            if a not in ACTIVATIONS:
                raise ValueError(f"unknown activation {a!r}")
        self.dims = tuple(int(d) for d in dims)
        self.activations = tuple(activations)
        self.layers = [
            init_linear(rng, dims[i], dims[i + 1]) for i in range(len(dims) - 1)
        ]

    @property
    def input_dim(self) -> int:
        return self.dims[0]

    @property
    def output_dim(self) -> int:
        return self.dims[-1]

    def parameters(self) -> list[np.ndarray]:
        out = []
        for w, b in self.layers:
            out.append(w)
            out.append(b)
        return out

    def forward(self, x: np.ndarray) -> np.ndarray:
        y, _ = self.forward_cached(np.atleast_2d(np.asarray(x, dtype=np.float64)))
        return y[0] if np.asarray(x).ndim == 1 else y

    def forward_cached(self, x: np.ndarray):
        """Returns (output, cache); cache holds per-layer inputs and outputs."""
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ValueError(f"expected batch of {self.input_dim}-vectors, got {x.shape}")
        cache = []
        cur = x
        for (w, b), act in zip(self.layers, self.activations):
            y = _activate(cur @ w + b, act)
            cache.append((cur, y))
            cur = y
        return cur, cache

    def backward(self, cache, dout: np.ndarray):
        """Gradients of the cached forward pass; returns (param grads, dinput)."""
        grads: list[np.ndarray] = []
        d = dout
        for (w, _), act, (x_in, y) in zip(
            reversed(self.layers), reversed(self.activations), reversed(cache)
        ):
            dz = d * _activate_grad(y, act)
            grads.append(dz.sum(axis=0))   # db
            grads.append(x_in.T @ dz)      # dW
            d = dz @ w.T
        grads.reverse()
        return grads, d


class NafHead:
    """Shared trunk with scalar value, greedy-action, and curvature outputs."""

    ACTION_DIM = 2
    L_ENTRIES = 3  # two diagonal pre-exponentials plus one off-diagonal

    def __init__(self, obs_dim: int, hidden=(64, 64, 64), activation="relu",
                 rng: np.random.Generator | None = None):
        if rng is None:
            rng = np.random.default_rng()
        hidden = tuple(int(h) for h in hidden)
        self.obs_dim = int(obs_dim)
        self.hidden = hidden
        self.activation = activation
        self.trunk = DenseNet((obs_dim, *hidden), (activation,) * len(hidden), rng)
        feat = self.trunk.output_dim
        self.w_v, self.b_v = init_linear(rng, feat, 1)
        self.w_mu, self.b_mu = init_linear(rng, feat, self.ACTION_DIM)
        self.w_l, self.b_l = init_linear(rng, feat, self.L_ENTRIES)

    # -- parameter plumbing ------------------------------------------------

    def parameters(self) -> list[np.ndarray]:
        return self.trunk.parameters() + [
            self.w_v, self.b_v, self.w_mu, self.b_mu, self.w_l, self.b_l,
        ]

    def parameter_names(self) -> list[str]:
        names = []
        for i in range(len(self.trunk.layers)):
            names += [f"trunk.{i}.w", f"trunk.{i}.b"]
        names += ["v.w", "v.b", "mu.w", "mu.b", "l.w", "l.b"]
        return names

    def clone(self) -> "NafHead":
        other = NafHead.__new__(NafHead)
        other.obs_dim = self.obs_dim
        other.hidden = self.hidden
        other.activation = self.activation
        other.trunk = DenseNet.__new__(DenseNet)
        other.trunk.dims = self.trunk.dims
        other.trunk.activations = self.trunk.activations
        other.trunk.layers = [(w.copy(), b.copy()) for w, b in self.trunk.layers]
        other.w_v = self.w_v.copy()
        other.b_v = self.b_v.copy()
        other.w_mu = self.w_mu.copy()
        other.b_mu = self.b_mu.copy()
        other.w_l = self.w_l.copy()
        other.b_l = self.b_l.copy()
        return other

    # -- forward -----------------------------------------------------------

    def _components(self, obs: np.ndarray):
        feat, cache = self.trunk.forward_cached(obs)
        v = (feat @ self.w_v + self.b_v)[:, 0]
        mu = np.tanh(feat @ self.w_mu + self.b_mu)
        l_raw = np.clip(feat @ self.w_l + self.b_l, -_L_RAW_LIMIT, _L_RAW_LIMIT)
        return feat, cache, v, mu, l_raw

    @staticmethod
    def _quadratic(mu, l_raw, u):
        """Advantage -0.5 * ||L^T (u - mu)||^2 and its intermediates."""
        e = u - mu
        d0 = np.exp(l_raw[:, 0])
        d1 = np.exp(l_raw[:, 1])
        off = l_raw[:, 2]
        w0 = d0 * e[:, 0] + off * e[:, 1]
        w1 = d1 * e[:, 1]
        adv = -0.5 * (w0 * w0 + w1 * w1)
        return e, d0, d1, off, w0, w1, adv

    def _batched(self, obs) -> tuple[np.ndarray, bool]:
        arr = np.asarray(obs, dtype=np.float64)
        if arr.ndim == 1:
            return arr[None, :], True
        return arr, False

    def value(self, obs):
        """V(obs): the exact maximum of Q over actions."""
        obs_b, single = self._batched(obs)
        _, _, v, _, _ = self._components(obs_b)
        return float(v[0]) if single else v

    def greedy_action(self, obs):
        obs_b, single = self._batched(obs)
        _, _, _, mu, _ = self._components(obs_b)
        return mu[0] if single else mu

    def q_value(self, obs, action):
        obs_b, single = self._batched(obs)
        act = np.asarray(action, dtype=np.float64)
        act_b = act[None, :] if act.ndim == 1 else act
        _, _, v, mu, l_raw = self._components(obs_b)
        *_, adv = self._quadratic(mu, l_raw, act_b)
        q = v + adv
        return float(q[0]) if single else q

    # -- training ----------------------------------------------------------

    def loss_and_grads(self, obs: np.ndarray, actions: np.ndarray, targets: np.ndarray):
        """Mean squared error of Q against targets, with exact gradients.

        Returns (loss, grads) with grads aligned to parameters().
        """
        obs = np.asarray(obs, dtype=np.float64)
        actions = np.asarray(actions, dtype=np.float64)
        targets = np.asarray(targets, dtype=np.float64)
        if obs.ndim != 2 or actions.shape != (obs.shape[0], self.ACTION_DIM):
            raise ValueError("batch shapes do not line up")
        batch = obs.shape[0]

        feat, cache, v, mu, l_raw = self._components(obs)
        e, d0, d1, off, w0, w1, adv = self._quadratic(mu, l_raw, actions)
        q = v + adv
        resid = q - targets
        loss = float(resid @ resid) / batch
        g = 2.0 * resid / batch

        dw0 = -w0 * g
        dw1 = -w1 * g
        de0 = d0 * dw0
        de1 = off * dw0 + d1 * dw1
        dmu = -np.stack([de0, de1], axis=1)
        dl = np.stack([e[:, 0] * dw0 * d0, e[:, 1] * dw1 * d1, e[:, 1] * dw0], axis=1)
        dm_raw = dmu * (1.0 - mu * mu)
        dv = g[:, None]

        grad_w_v = feat.T @ dv
        grad_b_v = dv.sum(axis=0)
        grad_w_mu = feat.T @ dm_raw
        grad_b_mu = dm_raw.sum(axis=0)
        grad_w_l = feat.T @ dl
        grad_b_l = dl.sum(axis=0)

        dfeat = dv @ self.w_v.T + dm_raw @ self.w_mu.T + dl @ self.w_l.T
        trunk_grads, _ = self.trunk.backward(cache, dfeat)
        grads = trunk_grads + [
            grad_w_v, grad_b_v, grad_w_mu, grad_b_mu, grad_w_l, grad_b_l,
        ]
        return loss, grads


# -- optimizers --------------------------------------------------------------


class AdamState:
    """Adam with bias correction; moments match parameter shapes."""

    def __init__(self, params, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = float(lr)
        self.beta1 = float(beta1)
        self.beta2 = float(beta2)
        self.eps = float(eps)
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, params, grads) -> None:
        if len(params) != len(self.m) or len(grads) != len(self.m):
            raise ValueError("parameter/gradient count mismatch")
        self.t += 1
        b1t = 1.0 - self.beta1 ** self.t
        b2t = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            if p.shape != g.shape:
                raise ValueError(f"shape mismatch {p.shape} vs {g.shape}")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / b1t) / (np.sqrt(v / b2t) + self.eps)


class SgdState:
    def __init__(self, params, lr=1e-4):
        self.lr = float(lr)
        self.t = 0

    def step(self, params, grads) -> None:
        self.t += 1
        for p, g in zip(params, grads):
            p -= self.lr * g


def make_optimizer(kind: str, params, lr: float):
    if kind == "adam":
        return AdamState(params, lr=lr)
    if kind == "sgd":
        return SgdState(params, lr=lr)
    raise ValueError(f"unknown optimizer {kind!r}")


def soft_update(target_params, online_params, tau: float) -> None:
    """target <- (1 - tau) * target + tau * online, in place."""
    if not 0.0 < tau <= 1.0:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    for t, o in zip(target_params, online_params):
        t += tau * (o - t)


# -- checkpoint container -----------------------------------------------------


def save_checkpoint(path, config: dict, tensors: dict, scalars: dict | None = None) -> None:
    """Write the NAFCKPT1 container: magic, JSON header, float64 LE payloads.

    The write is atomic (temp file then rename).
    """
    names = list(tensors.keys())
    header = {
        "format_version": 1,
        "config": config,
        "scalars": scalars or {},
        "tensors": [{"name": k, "shape": list(tensors[k].shape)} for k in names],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(CHECKPOINT_MAGIC)
            fh.write(struct.pack("<I", len(blob)))
            fh.write(blob)
            for k in names:
                arr = np.ascontiguousarray(tensors[k], dtype=np.float64)
                fh.write(arr.astype("<f8", copy=False).tobytes())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path):
    """Read a NAFCKPT1 container; returns (config, tensors, scalars)."""
    raw = Path(path).read_bytes()
    if raw[: len(CHECKPOINT_MAGIC)] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: bad magic, not a NAFCKPT1 checkpoint")
    off = len(CHECKPOINT_MAGIC)
    (hlen,) = np.frombuffer(raw[off : off + 4], dtype="<u4")
    off += 4
    try:
        header = json.loads(raw[off : off + int(hlen)].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt header ({exc})") from None
    off += int(hlen)
    if header.get("format_version") != 1:
        raise CheckpointError(f"{path}: unsupported format version")
    tensors = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if off + nbytes > len(raw):
            raise CheckpointError(f"{path}: truncated tensor payload for {entry['name']}")
        tensors[entry["name"]] = (
            np.frombuffer(raw[off : off + nbytes], dtype="<f8").reshape(shape).copy()
        )
        off += nbytes
    if off != len(raw):
        raise CheckpointError(f"{path}: trailing bytes after tensor payload")
    return header["config"], tensors, header.get("scalars", {})
