"""Clustered federated averaging and the central/local comparison regimes."""
from .aggregation import AGGREGATIONS, AggregationError, ClientUpdate, aggregate, aggregation_weights
from .regimes import (REGIMES, ClientTrainer, ClientTrainingError, ClusterModel,
                      InsufficientSpanError, RegimeConfig, RegimeResult, init_base_model,
                      limited_data_view, local_update, merge_windows, run_central, run_federated,
                      run_local, run_regime)
from .transport import TRANSPORTS, InProcessEnd, StreamEnd, TransportError, encode_frame, make_link

__all__ = [
    "AGGREGATIONS", "AggregationError", "ClientTrainer", "ClientTrainingError", "ClientUpdate",
    "ClusterModel", "InProcessEnd", "InsufficientSpanError", "REGIMES", "RegimeConfig",
    "RegimeResult", "StreamEnd", "TRANSPORTS", "TransportError", "aggregate",
    "aggregation_weights", "encode_frame", "init_base_model", "limited_data_view",
    "local_update", "make_link", "merge_windows", "run_central", "run_federated", "run_local",
    "run_regime",
]
