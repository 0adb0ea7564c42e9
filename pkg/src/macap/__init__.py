"""Capacity of N-user discrete memoryless multiple-access channels.

The capacity of any such channel is attained on one of finitely many
maximal elementary faces (per-user supports no larger than the output
alphabet); on those faces the Kuhn-Tucker conditions certify optimality.
This package enumerates the faces, maximizes the mutual information on
each, and ships independent brute-force oracles for every structural claim
it relies on.
"""

__version__ = "0.1.0"

from .backend import BACKEND
from .elementary import (
    DegenerateWitness,
    ElementarySet,
    degenerate_witness,
    enumerate_master_faces,
    is_elementary,
    master_face_count,
)
from .errors import ChannelFormatError, DegenerateInputError, GuardExceeded
from .info import (
    ChainDecomposition,
    OutputDistribution,
    chain_decomposition,
    conditional_mi,
    mutual_information,
    output_distribution,
    score,
    scores,
)
from .model import (
    ChannelMatrix,
    FaceProduct,
    IpdProduct,
    MacType,
    canonical_index,
    index_tuple,
    load_channel,
    minimum_face,
    parse_mac_type,
    read_channel,
    restrict,
    save_channel,
)
from .optimize import (
    CapacityResult,
    KtReport,
    OptimizeOptions,
    capacity,
    kt_check,
    line_restricted_optimize,
    maximize_on_face,
    start_results,
)
from .region import (
    RateSample,
    RegionEstimate,
    boundary_residual_map,
    capacity_region,
    sample_subregion,
)
from .verify import (
    GridCapacity,
    GridSpec,
    LevelSetReport,
    LocalMaxReport,
    boundary_determinant,
    check_local_max,
    grid_capacity,
    level_set_connected,
    random_channel,
    random_ipd,
)
