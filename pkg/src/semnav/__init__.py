"""Object-goal navigation building blocks.

The package fuses posed RGB-D observations into a semantic point-cloud map,
summarizes visited space in a topological memory graph, and selects
navigation waypoints from phase-conditioned affordance fields, with a
deterministic box-world simulator for end-to-end episodes and metrics.
"""

from .affordance import (
    AffordanceConfig,
    AffordanceField,
    Phase,
    PhaseInputs,
    choose_phase,
    compose_field,
    directional_point_set,
    normalized_affordance,
    safety_mask,
    select_waypoint,
)
from .geometry import (
    CameraIntrinsics,
    Pose,
    backproject_pixel,
    camera_pose,
    camera_to_world,
    intrinsics_from_fov,
)
from .oracle import (
    EndpointConfig,
    OracleDecision,
    OracleRequest,
    RemoteOracle,
    ScriptedOracle,
    classify_room,
    scripted_decide,
)
from .pointcloud import PointCloud, concat_clouds, save_ply, voxel_downsample
from .semantic_map import (
    LabeledFrame,
    MapConfig,
    OccupancyGrid,
    SemanticMap,
    build_occupancy_grid,
    compute_navigable,
    compute_obstacles,
    detect_frontiers,
    estimate_floor,
    frontiers_to_world,
    integrate_frame,
    refresh_derived,
    save_pgm,
)
from .topo_graph import (
    TopoConfig,
    TopoGraph,
    TopoNode,
    create_node,
    line_of_sight_clear,
    record_visit,
    refresh_attributes,
    serialize_text,
    try_merge,
)

__version__ = "0.1.0"
