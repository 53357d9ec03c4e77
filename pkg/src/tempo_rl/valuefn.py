"""Neural value model, residual composition and value-to-heuristic transforms."""

from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .features import FeatureLayout, vectorize_many
from .heuristic import h_sym
from .mdp import MdpConfig, phi
from .mlp import MLP
from .model import GroundInstance
from .search import SearchState, is_goal

FORMAT_VERSION = 1


class ModelFileError(ValueError):
    pass


def _sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def activation_scale(mode: str, schema: str, delta_h: float) -> tuple[float, float]:
    """``(a, b)`` such that the output activation is ``a * sigmoid(x) + b``.

    The four activations are written in terms of a symmetric squashing
    ``w(x) = 2 * sigmoid(x) - 1`` with range [-1, 1]:
    full/binary ``w``, full/counting ``(w - 1) * 1.5 * delta_h``,
    residual/binary ``1.5 * w - 0.5``, residual/counting ``(2 * w - 1) * delta_h``.
    """
    if mode == "full" and schema == "binary":
        return 2.0, -1.0
    if mode == "full" and schema == "counting":
        return 3.0 * delta_h, -3.0 * delta_h
    if mode == "residual" and schema == "binary":
        return 3.0, -2.0
    if mode == "residual" and schema == "counting":
        return 4.0 * delta_h, -3.0 * delta_h
    raise ValueError(f"unknown mode/schema {mode}/{schema}")


def zero_output_bias(mode: str, schema: str, delta_h: float) -> float:
    """Raw output whose activation is 0, used to start residuals at exactly zero."""
    a, b = activation_scale(mode, schema, delta_h)
    p = -b / a
    return math.log(p / (1.0 - p))


def activate(x: np.ndarray, mode: str, schema: str, delta_h: float) -> np.ndarray:
    a, b = activation_scale(mode, schema, delta_h)
    return a * _sigmoid(x) + b


def activation_grad(x: np.ndarray, mode: str, schema: str, delta_h: float) -> np.ndarray:
    a, _ = activation_scale(mode, schema, delta_h)
    s = _sigmoid(x)
    return a * s * (1.0 - s)


def activation_range(mode: str, schema: str, delta_h: float) -> tuple[float, float]:
    a, b = activation_scale(mode, schema, delta_h)
    return b, a + b


def clip_value(v, schema: str, delta_h: float = math.inf):
    """Clip to the full-mode range: [-1, 1] for binary, [-3 * delta_h, 0] for counting."""
    if schema == "binary":
        return np.clip(v, -1.0, 1.0)
    return np.clip(v, -3.0 * delta_h, 0.0)


@dataclass
class ValueModel:
    layout: FeatureLayout
    net: MLP
    mode: str  # "full" | "residual"
    schema: str  # "binary" | "counting"
    gamma: float
    delta_h: float
    heuristic: str = "hff"

    @classmethod
    def create(
        cls,
        layout: FeatureLayout,
        mode: str,
        mdp_config: MdpConfig,
        hidden: Sequence[int] = (64, 64),
        seed: int = 0,
    ) -> "ValueModel":
        if mode not in ("full", "residual"):
            raise ValueError(f"unknown mode {mode!r}")
        net = MLP([layout.size, *hidden, 1], np.random.default_rng(seed))
        if mode == "residual":
            # zero output weights plus this bias: the initial residual is 0 everywhere
            net.biases[-1][:] = zero_output_bias(mode, mdp_config.reward, mdp_config.delta_h)
        return cls(layout, net, mode, mdp_config.reward, mdp_config.gamma, mdp_config.delta_h, mdp_config.heuristic)

    @property
    def mdp_config(self) -> MdpConfig:
        return MdpConfig(reward=self.schema, gamma=self.gamma, delta_h=self.delta_h, heuristic=self.heuristic)

    @property
    def output_range(self) -> tuple[float, float]:
        return activation_range(self.mode, self.schema, self.delta_h)

    @property
    def best_value(self) -> float:
        return 1.0 if self.schema == "binary" else 0.0

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Activated network output for a batch of feature rows."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.layout.size:
            raise ValueError(f"expected {self.layout.size} features, got {x.shape[1]}")
        raw, _ = self.net.forward(x)
        return activate(raw, self.mode, self.schema, self.delta_h)

    def phi(self, h: float) -> float:
        return phi(h, self.mdp_config)

    def combine(self, y: np.ndarray, phis: np.ndarray) -> np.ndarray:
        """Value from activated output and phi: ``y`` itself or ``r + phi``, clipped."""
        v = y + phis if self.mode == "residual" else y
        return clip_value(v, self.schema, self.delta_h)

    def predict_values(
        self, items: Sequence[tuple[SearchState, GroundInstance]], hs: Sequence[float] | None = None
    ) -> np.ndarray:
        """Values of many states; goal states get the best value."""
        if not items:
            return np.zeros(0)
        if hs is None:
            hs = [h_sym(s, inst, self.heuristic) for s, inst in items] if self.mode == "residual" else [0.0] * len(items)
        y = self.forward(vectorize_many(self.layout, items))
        phis = np.array([self.phi(h) for h in hs]) if self.mode == "residual" else np.zeros(len(items))
        v = self.combine(y, phis)
        for k, (s, inst) in enumerate(items):
            if is_goal(s, inst):
                v[k] = self.best_value
        return v

    def predict_value(self, state: SearchState, instance: GroundInstance, h: float | None = None) -> float:
        return float(self.predict_values([(state, instance)], None if h is None else [h])[0])

    # ----------------------------------------------------------- persistence

    def header(self) -> dict:
        return {
            "version": FORMAT_VERSION,
            "architecture": {"sizes": self.net.sizes, "hidden_activation": "relu"},
            "mode": self.mode,
            "schema": self.schema,
            "gamma": self.gamma,
            "delta_h": self.delta_h,
            "heuristic": self.heuristic,
            "layout": self.layout.to_json(),
            "layout_hash": self.layout.digest(),
        }

    def save(self, path: str | Path) -> None:
        blocks = []
        for p in self.net.params:
            arr = np.ascontiguousarray(p, dtype="<f8")
            blocks.append({"shape": list(arr.shape), "data": base64.b64encode(arr.tobytes()).decode("ascii")})
        doc = {"header": self.header(), "weights": blocks}
        Path(path).write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ValueModel":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
            head = doc["header"]
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise ModelFileError(f"cannot read model file {path}: {exc}") from exc
        if head.get("version") != FORMAT_VERSION:
            raise ModelFileError(f"unsupported model version {head.get('version')!r}")
        try:
            layout = FeatureLayout.from_json(head["layout"])
            if layout.digest() != head["layout_hash"]:
                raise ModelFileError("feature layout hash mismatch")
            sizes = head["architecture"]["sizes"]
            net = MLP(sizes)
            params = net.params
            if len(doc["weights"]) != len(params) or sizes[0] != layout.size:
                raise ModelFileError("weight blocks do not match the architecture")
            for p, block in zip(params, doc["weights"]):
                arr = np.frombuffer(base64.b64decode(block["data"], validate=True), dtype="<f8")
                if list(p.shape) != block["shape"] or arr.size != p.size:
                    raise ModelFileError("weight block shape mismatch")
                p[...] = arr.reshape(p.shape)
            return cls(layout, net, head["mode"], head["schema"], head["gamma"], head["delta_h"], head["heuristic"])
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ModelFileError):
                raise
            raise ModelFileError(f"corrupt model file {path}: {exc}") from exc


def value_to_heuristic(
    v: float, schema: str, gamma: float, delta_H: float, goal: bool = False, h_symbolic: float = 0.0
) -> float:
    """Heuristic estimate from a value, with the goal and dead-end overrides."""
    if goal:
        return 0.0
    if math.isinf(h_symbolic):
        return math.inf
    if schema == "counting":
        return -v
    if v > 0:
        return min(math.log(v) / math.log(gamma) + 1.0, delta_H)
    if v == 0:
        return float(delta_H)
    return 2.0 * delta_H - min(math.log(-v) / math.log(gamma), delta_H)


def ranking_u(v: float, goal: bool = False, h_symbolic: float = 0.0, best: float = 0.0) -> float:
    """Ranking used by greedy search; lower is better."""
    if math.isinf(h_symbolic):
        return math.inf
    if goal:
        return -best
    return -v


class LearnedGuidance:
    """Per-instance wrapper returning ``(h_sym, u, h_nn)`` for search states."""

    def __init__(self, model: ValueModel, instance: GroundInstance, delta_H: float):
        self.model = model
        self.instance = instance
        self.delta_H = delta_H

    def evaluate(self, states: Sequence[SearchState]) -> list[tuple[float, float, float]]:
        m, inst = self.model, self.instance
        hs = [h_sym(s, inst, m.heuristic) for s in states]
        live = [k for k, h in enumerate(hs) if not math.isinf(h)]
        out = [(math.inf, math.inf, math.inf)] * len(states)
        if live:
            vals = m.predict_values([(states[k], inst) for k in live], [hs[k] for k in live])
            for k, v in zip(live, vals):
                goal = is_goal(states[k], inst)
                u = ranking_u(float(v), goal, hs[k], m.best_value)
                hn = value_to_heuristic(float(v), m.schema, m.gamma, self.delta_H, goal, hs[k])
                out[k] = (hs[k], u, hn)
        return out
