"""Synchronization clustering with a grid-accelerated neighbor search."""
from .datagen import DatasetSpec, family_spec, generate, generate_with_centers
from .engine import (ClusteringOutcome, GridNeighbors, NaiveNeighbors, StepMetrics, SyncParams,
                     SyncState, ave_len, check_grid_consistency, kuramoto_step, neighbors_grid,
                     neighbors_naive, order_parameter, run)
from .errors import (GenerationError, IndexCorruptionError, InvalidInputError,
                     NumericOverflowError, ParseError, SynclustError)
from .extract import ClusteringResult, extract_clusters
from .geometry import Dataset, Point, distance, load_csv, standardize, write_csv
from .grid import GridConfig, GridIndex, build_grid, build_neighbor_sets, neighbor_cells

__version__ = "0.1.0"
