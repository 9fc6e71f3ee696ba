"""Area-preserving spherical parameterization of genus-zero triangle meshes."""

from .conformal import ConformalMap, conformal_initialize
from .errors import (
    CenteringFailed,
    DegenerateFace,
    DegenerateImage,
    DimensionMismatch,
    EigenFailure,
    EmptyBoundary,
    EmptyInterior,
    EquisphereError,
    IllConditioned,
    InaccurateSolve,
    NonFiniteEnergy,
    OriginError,
    ParseError,
    PoleError,
    RegionMismatch,
    SingularGamma,
    SingularSystem,
    TopologyError,
)
from .laplacian import (
    StretchLaplacian,
    StretchStats,
    assemble_laplacian,
    chart_energy,
    cot_laplacian,
    edge_weight_cot,
    edge_weight_dot,
    stretch_energy,
    stretch_factors,
    stretch_stats,
)
from .mesh import TriMesh, load_mesh, normalize_area, save_mesh
from .sem import ConvergenceReport, IndexPartition, ParamState, SEMConfig, north_step, run_sem, south_step
from .sphere import chart_lift, chart_project, inverse_stereographic, invert_plane, reflect, stereographic_project
from .synth import SHAPES, make_shape

__version__ = "0.1.0"

__all__ = [
    "assemble_laplacian",
    "CenteringFailed",
    "chart_energy",
    "chart_lift",
    "chart_project",
    "conformal_initialize",
    "ConformalMap",
    "ConvergenceReport",
    "cot_laplacian",
    "DegenerateFace",
    "DegenerateImage",
    "DimensionMismatch",
    "edge_weight_cot",
    "edge_weight_dot",
    "EigenFailure",
    "EmptyBoundary",
    "EmptyInterior",
    "EquisphereError",
    "IllConditioned",
    "InaccurateSolve",
    "IndexPartition",
    "inverse_stereographic",
    "invert_plane",
    "load_mesh",
    "make_shape",
    "NonFiniteEnergy",
    "normalize_area",
    "north_step",
    "OriginError",
    "ParamState",
    "ParseError",
    "PoleError",
    "reflect",
    "RegionMismatch",
    "run_sem",
    "save_mesh",
    "SEMConfig",
    "SHAPES",
    "SingularGamma",
    "SingularSystem",
    "south_step",
    "stereographic_project",
    "stretch_energy",
    "stretch_factors",
    "stretch_stats",
    "StretchLaplacian",
    "StretchStats",
    "TopologyError",
    "TriMesh",
]
