"""Adaptive row-wise decomposition and transpose-order analysis for parallel M-D FFTs."""
from .commcost import (
    CommProfile,
    PatternReport,
    analyze_patterns,
    baseline_amount,
    compare_report,
    search_best,
    sequence_cost,
    transpose_cost,
    transpose_cost_fast,
)
from .exceptions import (
    CapacityError,
    DecompositionError,
    InfeasibleParallelismError,
    InvalidCoordinateError,
    InvalidLayoutError,
    MethodInapplicableError,
    NoCatalogError,
    UnsupportedProcessCountError,
)
from .fftcore import dft_1d, dft_md, fft_1d
from .layout import (
    DecompContext,
    Layout,
    RankRange,
    Shape,
    delinearize,
    f_md,
    linearize,
    owner_of,
    rank_corner_coords,
    rank_range,
)
from .orders import (
    OrderCatalog,
    TransposeSequence,
    best_orders,
    count_orders,
    enumerate_sequences,
    validate_sequence,
)
from .simulator import DistTensor, TrafficLedger, gather, run_parallel_fft, scatter, transpose

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
