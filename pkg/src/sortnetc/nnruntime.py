"""Dense feed-forward networks: representation, evaluation, parameter counts."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

ACTIVATIONS = ("relu", "identity", "sigmoid")
Counting = Literal["weights_only", "weights_and_biases"]


def relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def sigmoid(z: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    out = np.empty_like(z, dtype=float)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    e = np.exp(z[~pos])
    out[~pos] = e / (1.0 + e)
    return out


_ACT = {"relu": relu, "identity": lambda z: z, "sigmoid": sigmoid}


@dataclass
class DenseLayer:
    weights: np.ndarray
    biases: np.ndarray
    activation: str = "relu"

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.biases = np.asarray(self.biases, dtype=np.float64)
        if self.weights.ndim != 2:
            raise ValueError(f"weights must be 2-D, got shape {self.weights.shape}")
        if self.biases.shape != (self.weights.shape[0],):
            raise ValueError(f"bias shape {self.biases.shape} does not match {self.weights.shape[0]} outputs")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if not (np.isfinite(self.weights).all() and np.isfinite(self.biases).all()):
            raise ValueError("non-finite parameters")

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return _ACT[self.activation](x @ self.weights.T + self.biases)


class DenseNetwork:
    def __init__(self, layers: list[DenseLayer] | None = None):
        self.layers = list(layers or [])
        for i, (a, b) in enumerate(zip(self.layers, self.layers[1:])):
            if a.out_dim != b.in_dim:
                raise ValueError(f"layer {i} outputs {a.out_dim} values but layer {i + 1} expects {b.in_dim}")

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def widths(self) -> list[int]:
        if not self.layers:
            return []
        return [self.in_dim] + [layer.out_dim for layer in self.layers]

    def forward(self, x) -> np.ndarray:
        """Evaluate on one input vector or on the rows of a 2-D batch."""
        a = np.asarray(x, dtype=np.float64)
        if not self.layers:
            return a.copy()
        if a.shape[-1] != self.in_dim:
            raise ValueError(f"dimension mismatch: network expects {self.in_dim} inputs, got {a.shape[-1]}")
        for layer in self.layers:
            a = layer(a)
        return a

    __call__ = forward

    def parameter_count(self, counting: Counting = "weights_and_biases") -> int:
        weights = sum(layer.weights.size for layer in self.layers)
        if counting == "weights_only":
            return weights
        if counting == "weights_and_biases":
            return weights + sum(layer.biases.size for layer in self.layers)
        raise ValueError(f"unknown counting mode {counting!r}")

    def copy(self) -> DenseNetwork:
        return DenseNetwork([DenseLayer(l.weights.copy(), l.biases.copy(), l.activation) for l in self.layers])

    def to_dict(self) -> dict:
        return {
            "layers": [
                {"activation": l.activation, "weights": l.weights.tolist(), "biases": l.biases.tolist()}
                for l in self.layers
            ]
        }

    @classmethod
    def from_dict(cls, data: dict) -> DenseNetwork:
        return cls([DenseLayer(np.array(d["weights"], dtype=float).reshape(len(d["biases"]), -1), d["biases"], d["activation"])
                    for d in data["layers"]])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> DenseNetwork:
        return cls.from_dict(json.loads(Path(path).read_text()))


def forward(net: DenseNetwork, x) -> np.ndarray:
    return net.forward(x)


def parameter_count(net: DenseNetwork, counting: Counting = "weights_and_biases") -> int:
    return net.parameter_count(counting)
