"""rex3d: causal responsibility maps and approximately-minimal sufficient
explanations for black-box 3D volume classifiers."""

from .errors import Rex3dError
from .explanation import Explanation, explanation_overlap, extract_explanation
from .nifti import load_volume, save_volume
from .occlusion import OcclusionSpec, apply_mask, mean_intensity_value
from .oracle import (
    OracleVerdict,
    QueryBudget,
    Target,
    classify_batch,
    make_synthetic_oracle,
    spawn_external_oracle,
)
from .partition import Axis, Region, generate_masks, region_intersects, region_voxel_count
from .responsibility import (
    ResponsibilityMap,
    SearchConfig,
    explore_level,
    generate_resp_map,
    normalize_map,
)
from .volume import VoxelGrid, make_phantom, normalize_intensity, resize_volume

__version__ = "0.1.0"
