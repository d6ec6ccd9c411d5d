"""Lowering of sorting networks to bias-free ReLU networks.

Every comparator ``(lo, hi)`` becomes three hidden neurons

    z1 = relu(x_lo),  z2 = relu(x_hi),  z3 = relu(x_hi - x_lo)

followed by two output neurons ``min = z2 - z3`` (to wire ``lo``) and
``max = z1 + z3`` (to wire ``hi``). A wire without a comparator in a layer is
carried by a single weight-1 neuron. Each sorting layer therefore costs two
dense layers; unpruned, the hidden one is padded to ``ceil(1.5 x)`` neurons so
the weight count is exactly ``2 d ceil(1.5 x) x``. The construction assumes
non-negative inputs (z1 and z2 clamp at zero).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .nnruntime import DenseLayer, DenseNetwork
from .sortnet import SortingNetwork, depth_bounds, make_optimal_small


def hidden_width(x: int) -> int:
    """ceil(1.5 x) in integer arithmetic."""
    return (3 * x + 1) // 2


def _compile_layer(wires: int, layer, prune: bool) -> tuple[DenseLayer, DenseLayer]:
    touched = {w for c in layer for w in c}
    passthrough = [w for w in range(wires) if w not in touched]
    used = 3 * len(layer) + len(passthrough)
    width = used if prune else hidden_width(wires)
    hid = np.zeros((width, wires))
    out = np.zeros((wires, width))
    h = 0
    for lo, hi in layer:
        hid[h, lo] = 1.0
        hid[h + 1, hi] = 1.0
        hid[h + 2, hi], hid[h + 2, lo] = 1.0, -1.0
        out[hi, h], out[hi, h + 2] = 1.0, 1.0
        out[lo, h + 1], out[lo, h + 2] = 1.0, -1.0
        h += 3
    for w in passthrough:
        hid[h, w] = 1.0
        out[w, h] = 1.0
        h += 1
    # remaining rows of an unpruned layer are dead padding neurons
    return (DenseLayer(hid, np.zeros(width), "relu"), DenseLayer(out, np.zeros(wires), "relu"))


def compile_network(net: SortingNetwork, prune: bool = False) -> DenseNetwork:
    """Build the exact neural sorter for ``net``.

    With ``prune`` the padding neurons are dropped, giving ``x + k`` hidden
    neurons for a layer with ``k`` comparators.
    """
    layers: list[DenseLayer] = []
    for layer in net.layers:
        layers.extend(_compile_layer(net.wires, layer, prune))
    return DenseNetwork(layers)


def compile_single_comparator() -> DenseNetwork:
    """2-3-2 comparator network with 12 weights; outputs (min, max)."""
    return compile_network(make_optimal_small(2))


def feedforward_parameters(x: int, depth: int) -> int:
    return 2 * depth * hidden_width(x) * x


def iterative_parameters(x: int) -> int:
    """Weights of the compiled two-layer brick network, reused every pass."""
    return feedforward_parameters(x, 2)


PUBLISHED_ATTENTION_FEEDFORWARD = 18.4e6
PUBLISHED_NO_ATTENTION_FEEDFORWARD = 65.3e9
PUBLISHED_ATTENTION_ITERATIVE = 7.3e6
PUBLISHED_NO_ATTENTION_ITERATIVE = 26.1e9


@dataclass
class ParamScenario:
    image_side: int
    patch_side: int
    attention: bool
    x: int
    depth: int
    p_feedforward: int
    p_iterative: int
    alternatives: dict[str, int] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "image_side": self.image_side,
            "patch_side": self.patch_side,
            "attention": self.attention,
            "x": self.x,
            "depth": self.depth,
            "p_feedforward": self.p_feedforward,
            "p_iterative": self.p_iterative,
            "alternatives": dict(self.alternatives),
            "warnings": list(self.warnings),
        }


def estimate_parameters(image_side: int, patch_side: int, attention: bool, depth: int | None = None) -> ParamScenario:
    """Parameter counts of neural sorters for the identity task.

    With attention one number per possible patch is sorted, ``(N // n)**2``;
    without it one number per patch position, ``(N - n)**2``. ``depth=None``
    uses the ceiled information-theoretic bound ``ceil(log2 x)``.
    """
    N, n = image_side, patch_side
    if not N >= n >= 1:
        raise ValueError(f"need image_side >= patch_side >= 1, got N={N}, n={n}")
    x = (N // n) ** 2 if attention else (N - n) ** 2
    if x < 2:
        raise ValueError(f"only {x} number(s) to sort; nothing to estimate")
    d = depth_bounds(x).chosen_depth if depth is None else int(depth)
    scenario = ParamScenario(N, n, attention, x, d, feedforward_parameters(x, d), iterative_parameters(x))
    alt = scenario.alternatives
    alt["p_iterative_depth4"] = feedforward_parameters(x, 4)
    warn = scenario.warnings

    if not attention:
        sliding = (N - n + 1) ** 2
        alt["x_sliding_window"] = sliding
        alt["x_n_minus_1_formula"] = (N - 1) ** 2
        warn.append(
            f"position count uses (N-n)^2 = {x}; the (N-1)^2 formula gives {(N - 1) ** 2} and an "
            f"exhaustive sliding window gives (N-n+1)^2 = {sliding}"
        )

    if (N, n) == (224, 8):
        p_ff = scenario.p_feedforward
        if attention:
            if d == 10 and not math.isclose(p_ff, PUBLISHED_ATTENTION_FEEDFORWARD, rel_tol=0.01):
                warn.append(f"feed-forward count {p_ff} differs from the published 18.4 million")
            published_it = PUBLISHED_ATTENTION_ITERATIVE
        else:
            matching_x = 192**2
            alt["x_matching_published_feedforward"] = matching_x
            alt["p_feedforward_at_matching_x"] = feedforward_parameters(matching_x, d)
            warn.append(
                f"feed-forward count for x={x}, d={d} is {p_ff}; the published 65.3 billion instead "
                f"matches x={matching_x} (p={alt['p_feedforward_at_matching_x']})"
            )
            published_it = PUBLISHED_NO_ATTENTION_ITERATIVE
        p_it = scenario.p_iterative
        warn.append(
            f"iterative count 4*ceil(1.5x)*x = {p_it}; the published {published_it:.3g} equals 2x this value "
            f"({2 * p_it}), i.e. the feed-forward formula at depth 4"
        )
    return scenario
