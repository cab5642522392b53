"""Reverse-mode tensor engine, layer primitives and optimiser."""
from .gradcheck import finite_difference_check
from .ops import (AttentionWeights, ConfigurationError, EmptySequenceError, add, avg_pool1d,
                  batch_norm, conv1d, dense, dropout, layer_norm, lstm, mse_loss,
                  multi_head_attention, relu)
from .optim import AdamState, NumericError, adam_update
from .tensor import ContractError, DimensionError, Tape, Tensor, backprop, current_tape

__all__ = [
    "AdamState", "AttentionWeights", "ConfigurationError", "ContractError", "DimensionError",
    "EmptySequenceError", "NumericError", "Tape", "Tensor", "adam_update", "add", "avg_pool1d",
    "backprop", "batch_norm", "conv1d", "current_tape", "dense", "dropout",
    "finite_difference_check", "layer_norm", "lstm", "mse_loss", "multi_head_attention", "relu",
]
