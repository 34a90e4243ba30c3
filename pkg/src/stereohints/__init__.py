"""stereohints: a stereo photometric-loss laboratory.

Census-based semi-global matching with a hyperparameter grid, per-pixel
photometric fusion of the candidate maps, hint-gated reprojection losses,
a direct disparity-field optimizer that demonstrates escape from
photometric local minima, and the standard seven depth metrics -- all
verifiable on synthetic scenes.
"""

from .core import (
    EPSILON_DISP,
    DepthMap,
    DisparityMap,
    Image,
    Rect,
    Rng,
    StereoCalibration,
    disparity_to_depth,
    hflip,
    to_grayscale,
)
from .photometric import (
    DEFAULT_ALPHA,
    LossField,
    WarpResult,
    dssim_l1,
    min_over_views,
    photometric_loss_of_disparity,
    ssim_map,
    warp_disparity,
    warp_pose,
)
from .losses import (
    GatedLoss,
    berhu,
    hint_gated_loss,
    hint_usage_fraction,
    log_l1,
    proxy_supervised_loss,
    reduce_mean,
    sum_loss,
)
from .sgm import (
    CostVolume,
    SgmParams,
    aggregate_direction,
    aggregate_paths,
    build_cost_volume,
    census_transform,
    lr_consistency,
    sgm_match,
    wta_disparity,
)
from .hints import (
    DEFAULT_BLOCK_SIZES,
    DEFAULT_DISPARITY_COUNTS,
    FusedHint,
    HintCandidateSet,
    fuse,
    generate_candidates,
    param_grid,
    random_params,
)
from .optimizer import (
    FlatInit,
    MapInit,
    OptimizeConfig,
    RandomInit,
    Trajectory,
    TrajectoryPoint,
    cost_curve,
    gated_gradient,
    optimize,
    photometric_gradient,
)
from .evaluation import (
    METRIC_NAMES,
    DepthMetrics,
    EvalConfig,
    compute_metrics,
    flip_postprocess,
    garg_crop,
)
from .io import (
    SceneSpec,
    Structure,
    SyntheticPair,
    TextureSpec,
    load_scene_spec,
    read_calibration,
    read_disparity_png16,
    read_image,
    read_pfm,
    render_scene,
    save_scene_spec,
    write_disparity_png16,
    write_image,
    write_pfm,
)

__version__ = "0.1.0"
