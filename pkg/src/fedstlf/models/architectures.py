"""The three forecasting networks: attention encoder/decoder, stacked LSTM, 1-D CNN."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..core import (AttentionWeights, Tensor, add, avg_pool1d, batch_norm, conv1d, dense,
                    dropout, layer_norm, lstm, multi_head_attention, relu)
from .params import ParameterSet, ParameterTransportError

KINDS = ("cnn", "lstm", "transformer")


class SpecMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    horizon: int = 12
    n_features: int = 5
    look_back: int = 24
    seed: int = 0
    dropout: float = 0.2
    # transformer
    heads: int = 2
    head_size: int = 4
    encoder_layers: int = 2
    decoder_layers: int = 2
    encoder_lstm_cells: int = 7
    # lstm
    lstm_layers: int = 6
    lstm_cells: int = 32
    # cnn
    conv_layers: int = 4
    conv_width: int = 3
    filters: int = 32
    # shared head
    dense_units: int = 32

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecMismatchError(f"unknown model kind {self.kind!r}")

    def with_seed(self, seed: int) -> "ModelSpec":
        return replace(self, seed=seed)

    @classmethod
    def reduced(cls, kind: str, **kw) -> "ModelSpec":
        """Narrow variant of the paper architecture for fast tests."""
        small = dict(heads=2, head_size=2, encoder_layers=1, decoder_layers=1,
                     encoder_lstm_cells=3, lstm_layers=2, lstm_cells=4, conv_layers=2,
                     filters=4, dense_units=4)
        small.update(kw)
        return cls(kind=kind, **small)


def _glorot(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


class Forecaster:
    """Common parameter bookkeeping; subclasses define ``_build`` and ``_forward``."""

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        self.params: dict[str, Tensor] = {}
        self.buffers: dict[str, np.ndarray] = {}
        self.optimizer = None
        self._rng = np.random.default_rng(spec.seed)
        self._build()
        del self._rng

    # construction helpers
    def _weight(self, name, shape, fan_in, fan_out):
        self.params[name] = Tensor(_glorot(self._rng, shape, fan_in, fan_out),
                                   requires_grad=True, name=name)

    def _const(self, name, shape, value=0.0):
        self.params[name] = Tensor(np.full(shape, value), requires_grad=True, name=name)

    def _dense(self, name, n_in, n_out):
        self._weight(f"{name}.w", (n_in, n_out), n_in, n_out)
        self._const(f"{name}.b", (n_out,))

    def _lstm(self, name, n_in, cells):
        self._weight(f"{name}.w", (n_in, 4 * cells), n_in, 4 * cells)
        self._weight(f"{name}.u", (cells, 4 * cells), cells, 4 * cells)
        b = np.zeros(4 * cells)
        b[cells:2 * cells] = 1.0  # unit forget bias
        self.params[f"{name}.b"] = Tensor(b, requires_grad=True, name=f"{name}.b")

    def _attention(self, name, d_query, d_kv, width):
        self._dense(f"{name}.q", d_query, width)
        self._dense(f"{name}.k", d_kv, width)
        self._dense(f"{name}.v", d_kv, width)
        self._dense(f"{name}.o", width, width)

    def _attention_weights(self, name) -> AttentionWeights:
        p = self.params
        return AttentionWeights(*(p[f"{name}.{part}.{wb}"] for part in "qkvo" for wb in "wb"))

    def _apply_dense(self, x, name, activation="none"):
        return dense(x, self.params[f"{name}.w"], self.params[f"{name}.b"], activation)

    # public surface
    def _build(self):
        raise NotImplementedError

    def _forward(self, x: Tensor, training: bool, rng) -> Tensor:
        raise NotImplementedError

    def forward(self, x, training: bool = False, rng: np.random.Generator | None = None) -> Tensor:
        x = x if isinstance(x, Tensor) else Tensor(x)
        s = self.spec
        if x.ndim != 3 or x.shape[1:] != (s.look_back, s.n_features):
            raise SpecMismatchError(
                f"{s.kind} model expects [batch, {s.look_back}, {s.n_features}], got {x.shape}")
        if training and rng is None:
            raise ValueError("training-mode forward needs a dropout generator")
        return self._forward(x, training, rng)

    def predict(self, x: np.ndarray, batch_size: int = 512) -> np.ndarray:
        outs = [self.forward(x[i:i + batch_size]).data for i in range(0, len(x), batch_size)]
        if not outs:
            return np.zeros((0, self.spec.horizon))
        return np.concatenate(outs, axis=0)

    def trainable(self) -> list[Tensor]:
        return list(self.params.values())

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None

    def gradients(self) -> list[np.ndarray]:
        return [np.zeros_like(p.data) if p.grad is None else p.grad for p in self.params.values()]

    def manifest(self) -> list[tuple[str, tuple[int, ...]]]:
        return ([(n, t.shape) for n, t in self.params.items()]
                + [(n, b.shape) for n, b in self.buffers.items()])

    @property
    def n_parameters(self) -> int:
        return sum(t.data.size for t in self.params.values())

    def get_parameters(self) -> ParameterSet:
        return ParameterSet([(n, t.data) for n, t in self.params.items()]
                            + list(self.buffers.items()))

    def set_parameters(self, p: ParameterSet) -> None:
        p.check_manifest(self.manifest())
        for name, arr in p:
            if name in self.params:
                self.params[name].data[...] = arr
            else:
                self.buffers[name][...] = arr


class TransformerForecaster(Forecaster):
    def _build(self):
        s = self.spec
        width = s.heads * s.head_size
        self._dense("embed", s.n_features, width)
        for i in range(s.encoder_layers):
            self._attention(f"enc{i}.attn", width, width, width)
            self._dense(f"enc{i}.ff", width, width)
            self._const(f"enc{i}.ln.gain", (width,), 1.0)
            self._const(f"enc{i}.ln.bias", (width,))
        self._lstm("enc_lstm", width, s.encoder_lstm_cells)
        for i in range(s.decoder_layers):
            self._attention(f"dec{i}.attn", width, s.encoder_lstm_cells, width)
            self._dense(f"dec{i}.ff", width, width)
            self._const(f"dec{i}.ln.gain", (width,), 1.0)
            self._const(f"dec{i}.ln.bias", (width,))
        self._dense("head", width, s.horizon)

    def _forward(self, x, training, rng):
        s, p = self.spec, self.params
        embedded = self._apply_dense(x, "embed")
        h = embedded
        for i in range(s.encoder_layers):
            a = multi_head_attention(h, h, h, self._attention_weights(f"enc{i}.attn"),
                                     s.heads, s.head_size)
            h = add(h, dropout(a, s.dropout, training, rng))
            h = add(h, self._apply_dense(h, f"enc{i}.ff", "relu"))
            h = layer_norm(h, p[f"enc{i}.ln.gain"], p[f"enc{i}.ln.bias"])
        memory = lstm(h, p["enc_lstm.w"], p["enc_lstm.u"], p["enc_lstm.b"], return_sequences=True)
        d = embedded
        for i in range(s.decoder_layers):
            a = multi_head_attention(d, memory, memory, self._attention_weights(f"dec{i}.attn"),
                                     s.heads, s.head_size)
            d = add(d, a)
            d = self._apply_dense(d, f"dec{i}.ff", "relu")
            d = layer_norm(d, p[f"dec{i}.ln.gain"], p[f"dec{i}.ln.bias"])
        return self._apply_dense(avg_pool1d(d), "head")


class LSTMForecaster(Forecaster):
    def _build(self):
        s = self.spec
        n_in = s.n_features
        for i in range(s.lstm_layers):
            self._lstm(f"lstm{i}", n_in, s.lstm_cells)
            n_in = s.lstm_cells
        self._dense("hidden", s.lstm_cells, s.dense_units)
        self._dense("head", s.dense_units, s.horizon)

    def _forward(self, x, training, rng):
        s, p = self.spec, self.params
        h = x
        for i in range(s.lstm_layers):
            last = i == s.lstm_layers - 1
            h = lstm(h, p[f"lstm{i}.w"], p[f"lstm{i}.u"], p[f"lstm{i}.b"],
                     return_sequences=not last)
        h = self._apply_dense(h, "hidden", "relu")
        h = dropout(h, s.dropout, training, rng)
        return self._apply_dense(h, "head")


class CNNForecaster(Forecaster):
    def _build(self):
        s = self.spec
        ch = s.n_features
        for i in range(s.conv_layers):
            fan_in, fan_out = s.conv_width * ch, s.conv_width * s.filters
            self._weight(f"conv{i}.k", (s.conv_width, ch, s.filters), fan_in, fan_out)
            self._const(f"conv{i}.b", (s.filters,))
            self._const(f"conv{i}.bn.gain", (s.filters,), 1.0)
            self._const(f"conv{i}.bn.bias", (s.filters,))
            self.buffers[f"conv{i}.bn.running_mean"] = np.zeros(s.filters)
            self.buffers[f"conv{i}.bn.running_var"] = np.ones(s.filters)
            ch = s.filters
        self._dense("hidden", s.filters, s.dense_units)
        self._dense("head", s.dense_units, s.horizon)

    def _forward(self, x, training, rng):
        s, p = self.spec, self.params
        h = x
        for i in range(s.conv_layers):
            h = conv1d(h, p[f"conv{i}.k"], p[f"conv{i}.b"])
            h = batch_norm(h, p[f"conv{i}.bn.gain"], p[f"conv{i}.bn.bias"],
                           self.buffers[f"conv{i}.bn.running_mean"],
                           self.buffers[f"conv{i}.bn.running_var"], training)
            h = relu(h)
        h = self._apply_dense(avg_pool1d(h), "hidden", "relu")
        h = dropout(h, s.dropout, training, rng)
        return self._apply_dense(h, "head")


_BUILDERS = {"transformer": TransformerForecaster, "lstm": LSTMForecaster, "cnn": CNNForecaster}


def build_model(spec: ModelSpec) -> Forecaster:
    return _BUILDERS[spec.kind](spec)


def build_transformer(spec: ModelSpec) -> TransformerForecaster:
    if spec.kind != "transformer":
        raise SpecMismatchError(f"build_transformer got kind {spec.kind!r}")
    return TransformerForecaster(spec)


def build_lstm(spec: ModelSpec) -> LSTMForecaster:
    if spec.kind != "lstm":
        raise SpecMismatchError(f"build_lstm got kind {spec.kind!r}")
    return LSTMForecaster(spec)


def build_cnn(spec: ModelSpec) -> CNNForecaster:
    if spec.kind != "cnn":
        raise SpecMismatchError(f"build_cnn got kind {spec.kind!r}")
    return CNNForecaster(spec)


def get_parameters(model: Forecaster) -> ParameterSet:
    return model.get_parameters()


def set_parameters(model: Forecaster, p: ParameterSet) -> None:
    model.set_parameters(p)


__all__ = [
    "CNNForecaster", "Forecaster", "KINDS", "LSTMForecaster", "ModelSpec",
    "ParameterTransportError", "SpecMismatchError", "TransformerForecaster", "build_cnn",
    "build_lstm", "build_model", "build_transformer", "get_parameters", "set_parameters",
]
