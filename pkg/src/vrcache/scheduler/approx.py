"""Scalar-output perceptron on a flat parameter vector, with hand-written backprop."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


def _elu(x):
    return np.where(x > 0, x, np.expm1(np.minimum(x, 0.0)))


def _elu_grad(x):
    return np.where(x > 0, 1.0, np.exp(np.minimum(x, 0.0)))


def _tanh_grad(x):
    return 1.0 - np.tanh(x) ** 2


_ACT = {"elu": (_elu, _elu_grad), "tanh": (np.tanh, _tanh_grad), "relu": (
    lambda x: np.maximum(x, 0.0), lambda x: (x > 0).astype(float))}


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths from input to the scalar output, e.g. ``(d, 64, 64, 1)``."""

    sizes: tuple[int, ...]
    activation: str = "elu"

    def __post_init__(self):
        if len(self.sizes) < 2 or self.sizes[-1] != 1 or min(self.sizes) < 1:
            raise ValueError(f"invalid layer sizes {self.sizes}")
        if self.activation not in _ACT:
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def n_params(self) -> int:
        return sum((a + 1) * b for a, b in zip(self.sizes, self.sizes[1:]))

    def header(self) -> str:
        return f"sizes={','.join(map(str, self.sizes))} activation={self.activation}"


class Mlp:
    """Hidden layers use the spec's activation; the output layer is linear.

    ``theta`` packs each layer as its weight matrix (in x out, row-major) then its bias.
    """

    def __init__(self, spec: MlpSpec, theta: np.ndarray | None = None):
        self.spec = spec
        self.theta = np.zeros(spec.n_params) if theta is None else np.asarray(theta, dtype=float).copy()
        if self.theta.shape != (spec.n_params,):
            raise ValueError(f"expected {spec.n_params} parameters, got {self.theta.shape}")

    @classmethod
    def init(cls, spec: MlpSpec, rng: np.random.Generator, out_scale: float = 0.1) -> "Mlp":
        net = cls(spec)
        for k, (W, b) in enumerate(net._layers(net.theta)):
            last = k == len(spec.sizes) - 2
            W[...] = rng.normal(0.0, np.sqrt(1.0 / W.shape[0]), W.shape) * (out_scale if last else 1.0)
            b[...] = 0.0
        return net

    def _layers(self, vec: np.ndarray):
        out = []
        i = 0
        for a, b in zip(self.spec.sizes, self.spec.sizes[1:]):
            W = vec[i:i + a * b].reshape(a, b)
            i += a * b
            out.append((W, vec[i:i + b]))
            i += b
        return out

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Outputs for a batch ``(n, d)`` (or a single ``(d,)`` input)."""
        y, _ = self._forward(np.atleast_2d(x))
        return y if np.ndim(x) == 2 else y[0]

    def __call__(self, x):
        return self.forward(x)

    def _views(self):
        # weight views into theta, rebuilt only when theta is replaced
        if getattr(self, "_views_of", None) is not self.theta:
            self._views_cache = self._layers(self.theta)
            self._views_of = self.theta
        return self._views_cache

    def _forward(self, X):
        act, _ = _ACT[self.spec.activation]
        layers = self._views()
        pre = []
        h = X
        for k, (W, b) in enumerate(layers):
            z = h @ W + b
            pre.append((h, z))
            h = z if k == len(layers) - 1 else act(z)
        return h[:, 0], pre

    def grad(self, x: np.ndarray, dout: np.ndarray | float = 1.0) -> tuple[np.ndarray, np.ndarray]:
        """Outputs and ``sum_i dout_i * d y_i / d theta`` for a batch."""
        X = np.atleast_2d(x)
        y, pre = self._forward(X)
        _, dact = _ACT[self.spec.activation]
        g = np.zeros_like(self.theta)
        glayers = self._layers(g)
        delta = np.broadcast_to(np.asarray(dout, dtype=float), (X.shape[0],)).reshape(-1, 1)
        for k in range(len(pre) - 1, -1, -1):
            h, z = pre[k]
            if k < len(pre) - 1:
                delta = delta * dact(z)
            gW, gb = glayers[k]
            gW[...] = h.T @ delta
            gb[...] = delta.sum(axis=0)
            if k > 0:
                delta = delta @ self._views()[k][0].T
        return (y if np.ndim(x) == 2 else y[0]), g


def finite_difference(net: Mlp, x: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of ``sum(net(x))`` with respect to theta."""
    g = np.zeros_like(net.theta)
    base = net.theta.copy()
    for i in range(len(base)):
        net.theta[i] = base[i] + h
        up = float(np.sum(net.forward(x)))
        net.theta[i] = base[i] - h
        dn = float(np.sum(net.forward(x)))
        net.theta[i] = base[i]
        g[i] = (up - dn) / (2 * h)
    return g


def clip_norm(g: np.ndarray, bound: float) -> np.ndarray:
    n = float(np.linalg.norm(g))
    return g * (bound / n) if n > bound > 0 else g


def save_checkpoint(path: str | Path, nets: dict[str, Mlp], meta: dict[str, object]) -> None:
    """``<path>`` holds the raw float64 vectors back to back; ``<path>.txt`` the header."""
    path = Path(path)
    lines = [f"{k}={v}" for k, v in meta.items()]
    for name, net in nets.items():
        lines.append(f"net {name} {net.spec.header()} n_params={net.spec.n_params}")
    path.with_suffix(path.suffix + ".txt").write_text("\n".join(lines) + "\n")
    np.concatenate([net.theta for net in nets.values()]).astype("<f8").tofile(path)


def load_checkpoint(path: str | Path) -> tuple[dict[str, Mlp], dict[str, str]]:
    path = Path(path)
    meta: dict[str, str] = {}
    specs = []
    for lineno, line in enumerate(path.with_suffix(path.suffix + ".txt").read_text().splitlines(), 1):
        if line.startswith("net "):
            try:
                _, name, sizes, act, n = line.split()
                spec = MlpSpec(tuple(int(s) for s in sizes.split("=")[1].split(",")), act.split("=")[1])
            except ValueError:
                raise ValueError(f"header line {lineno}: malformed net entry {line!r}") from None
            if spec.n_params != int(n.split("=")[1]):
                raise ValueError(f"header line {lineno}: parameter count mismatch")
            specs.append((name, spec))
        elif "=" in line:
            k, v = line.split("=", 1)
            meta[k] = v
    flat = np.fromfile(path, dtype="<f8")
    if len(flat) != sum(s.n_params for _, s in specs):
        raise ValueError("checkpoint size does not match its header")
    nets, i = {}, 0
    for name, spec in specs:
        nets[name] = Mlp(spec, flat[i:i + spec.n_params])
        i += spec.n_params
    return nets, meta
