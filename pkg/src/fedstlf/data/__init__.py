"""Meter-data pipeline: ingestion, cleaning, features, scaling, windowing, splitting."""
from .cleaning import CleaningReport, DataQualityError, clean_series, write_cleaning_report
from .features import (DegenerateFeatureError, FeatureSelection, InsufficientDataError,
                       ScalerParams, UndefinedCorrelationError, cyclical_encode, dominant_period,
                       fft_coefficients, minmax_apply, minmax_fit, minmax_invert,
                       pearson_correlation, select_features)
from .ingest import IngestionError, load_meter_csv, write_meter_csv
from .series import LoadSeries
from .windows import (FEATURE_SETS, HORIZONS, LOOK_BACK, ClientData, WindowError, WindowSet,
                      chronological_split, feature_matrix, feature_names, make_windows,
                      prepare_client, prepare_fleet, split_counts, train_span)

__all__ = [
    "FEATURE_SETS", "HORIZONS", "LOOK_BACK", "ClientData", "CleaningReport", "DataQualityError",
    "DegenerateFeatureError", "FeatureSelection", "IngestionError", "InsufficientDataError",
    "LoadSeries", "ScalerParams", "UndefinedCorrelationError", "WindowError", "WindowSet",
    "chronological_split", "clean_series", "cyclical_encode", "dominant_period",
    "feature_matrix", "feature_names", "fft_coefficients", "load_meter_csv", "make_windows",
    "minmax_apply", "minmax_fit", "minmax_invert", "pearson_correlation", "prepare_client",
    "prepare_fleet",
    "select_features", "split_counts", "train_span", "write_cleaning_report", "write_meter_csv",
]
