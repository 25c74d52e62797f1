"""Detection of overlapping bidirectional communities in dense directed networks.

The package bundles the detector itself, a ground-truthed benchmark
generator, an evaluation harness that scores detections against planted
communities, a brute-force oracle for small networks, and a command line
front end (``bidicom``).
"""

from .detect import (
    Blob,
    CandidateBlob,
    Community,
    DetectionTrace,
    Pool,
    build_pool,
    detect_communities,
    detect_communities_trace,
    expel_false_friends,
    find_candidate_blob,
    global_control,
    grow_candidate_community,
    include_good_friends,
    max_community_size,
    merge_redundant,
    noise_filter,
    select_core,
    validate_blob,
)
from .evaluation import (
    AggregateReport,
    CommunityAggregate,
    MatchReport,
    RealCommunityMatch,
    aggregate,
    match_communities,
)
from .genbench import (
    CommunitySpec,
    GroundTruth,
    InfeasibleSpecError,
    NetworkSpec,
    generate_network,
    pair_bidir_probability,
)
from .metrics import (
    DEFAULT_COMMUNITY_FRACTION,
    DEFAULT_SYMMETRY_THRESHOLD,
    ConnectivityMatrix,
    DetectionConfig,
    PairStrengthMatrix,
    bidirectionality_threshold,
    pair_strength_matrix,
    symmetry_measure,
)
from .oracle import enumerate_communities, verify_community

__all__ = [
    "AggregateReport",
    "Blob",
    "CandidateBlob",
    "Community",
    "CommunityAggregate",
    "CommunitySpec",
    "ConnectivityMatrix",
    "DEFAULT_COMMUNITY_FRACTION",
    "DEFAULT_SYMMETRY_THRESHOLD",
    "DetectionConfig",
    "DetectionTrace",
    "GroundTruth",
    "InfeasibleSpecError",
    "MatchReport",
    "NetworkSpec",
    "PairStrengthMatrix",
    "Pool",
    "RealCommunityMatch",
    "aggregate",
    "bidirectionality_threshold",
    "build_pool",
    "detect_communities",
    "detect_communities_trace",
    "enumerate_communities",
    "expel_false_friends",
    "find_candidate_blob",
    "generate_network",
    "global_control",
    "grow_candidate_community",
    "include_good_friends",
    "match_communities",
    "max_community_size",
    "merge_redundant",
    "noise_filter",
    "pair_bidir_probability",
    "pair_strength_matrix",
    "select_core",
    "symmetry_measure",
    "validate_blob",
    "verify_community",
]

__version__ = "0.1.0"
