"""Contraction Hierarchies queried by linear arc scans, plus the timetable connection scan."""
from .graph import (
    INF,
    TOLERANCE,
    Arc,
    DistanceMap,
    Graph,
    GraphFormatError,
    all_pairs_oracle,
    dijkstra_sssp,
    dump_dimacs,
    gen_random_graph,
    load_dimacs,
)
from .hierarchy import (
    CHFormatError,
    ContractionHierarchy,
    Ordering,
    ScanArrays,
    build_ch,
    build_scan_arrays,
    contract,
    deserialize_ch,
    order_nodes,
    serialize_ch,
    verify_updown_property,
    witness_search,
)
from .kernels import BACKEND
from .query import (
    ManyToMany,
    PathError,
    QueryResult,
    QueryStats,
    bidir_dijkstra_ch,
    csa_ch_distances,
    csa_ch_many_to_many,
    csa_ch_query,
    csa_ch_query_multi,
    unpack_path,
)
from .rng import SplitMix64
from .timetable import (
    ArrivalLabels,
    Connection,
    Timetable,
    csa_earliest_arrival,
    dump_timetable_csv,
    gen_random_timetable,
    generalized_scan,
    load_timetable_csv,
    reconstruct_journey,
    time_expanded_oracle,
)

__version__ = "0.1.0"
