from .architectures import (KINDS, CNNForecaster, Forecaster, LSTMForecaster, ModelSpec,
                            SpecMismatchError, TransformerForecaster, build_cnn, build_lstm,
                            build_model, build_transformer, get_parameters, set_parameters)
from .params import ParameterSet, ParameterTransportError
from .training import BATCH_SIZE, PATIENCE, EmptyPartitionError, TrainResult, train_epochs

__all__ = [
    "BATCH_SIZE", "CNNForecaster", "EmptyPartitionError", "Forecaster", "KINDS",
    "LSTMForecaster", "ModelSpec", "PATIENCE", "ParameterSet", "ParameterTransportError",
    "SpecMismatchError", "TrainResult", "TransformerForecaster", "build_cnn", "build_lstm",
    "build_model", "build_transformer", "get_parameters", "set_parameters", "train_epochs",
]
