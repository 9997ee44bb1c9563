"""Indoor point-of-interest extraction from crowdsensed Wi-Fi scan logs.

Pipeline: scan logs are clustered per user-day with a cosine-similarity
DBSCAN (a POI is a dense group of similar scans), revisits are matched
to stable per-user POI ids, and POI common to several users surface as
Louvain communities of the cross-user similarity graph.
"""

from __future__ import annotations

from .clustering import NOISE, VisitInterval, dbscan, find_neighbours, segment_visits
from .community import (
    Partition,
    PoiGraph,
    build_graph,
    louvain,
    modularity,
    threshold_sweep,
)
from .errors import DomainError, InputError, PoiError
from .ingest import (
    RawBatch,
    RawStore,
    compress_batch,
    decode_log,
    decompress_batch,
    encode_log,
    plan_uploads,
    store_raw,
)
from .model import (
    ClusterParams,
    Fingerprint,
    ScanLog,
    ScanResult,
    build_log,
    parse_mac,
    validate_scan,
)
from .registry import (
    PoiRecord,
    SummaryStore,
    build_fingerprint,
    daily_summary,
    match_poi,
    upsert_poi,
)
from .similarity import cosine_similarity, pairwise_similarities, similarity_matrix
from .simgen import Environment, ItineraryEntry, generate_trace, load_scenario, rss_at

__version__ = "0.1.0"

__all__ = [
    "NOISE",
    "ClusterParams",
    "DomainError",
    "Environment",
    "Fingerprint",
    "InputError",
    "ItineraryEntry",
    "Partition",
    "PoiError",
    "PoiGraph",
    "PoiRecord",
    "RawBatch",
    "RawStore",
    "ScanLog",
    "ScanResult",
    "SummaryStore",
    "VisitInterval",
    "build_fingerprint",
    "build_graph",
    "build_log",
    "compress_batch",
    "cosine_similarity",
    "daily_summary",
    "dbscan",
    "decode_log",
    "decompress_batch",
    "encode_log",
    "find_neighbours",
    "generate_trace",
    "louvain",
    "load_scenario",
    "match_poi",
    "modularity",
    "pairwise_similarities",
    "parse_mac",
    "plan_uploads",
    "rss_at",
    "segment_visits",
    "similarity_matrix",
    "store_raw",
    "threshold_sweep",
    "upsert_poi",
    "validate_scan",
]
