"""Client clustering under dynamic time warping."""
from .dtw import (BARYCENTER_ITERS, DEFAULT_BAND, barycenter_inertia, dtw_barycenter,
                  dtw_distance, dtw_path)
from .kmeans import (N_INIT, ClusterAssignment, InsufficientHistoryError, client_profile_for_clustering,
                     cluster_purity, kmeans_dtw, read_assignment_csv, write_assignment_csv,
                     write_centroid_csvs)

__all__ = [
    "BARYCENTER_ITERS", "DEFAULT_BAND", "N_INIT", "ClusterAssignment", "InsufficientHistoryError",
    "barycenter_inertia", "client_profile_for_clustering", "cluster_purity", "dtw_barycenter",
    "dtw_distance", "dtw_path", "kmeans_dtw", "read_assignment_csv", "write_assignment_csv",
    "write_centroid_csvs",
]
