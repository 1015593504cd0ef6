"""Point-prompt generation for promptable segmenters from support/query features."""

from .errors import (
    ConfigError,
    DataError,
    EmptyCandidateError,
    EmptyMaskError,
    EmptyPeripheryError,
    EmptyStackError,
    FormatError,
    MaupError,
    SeedError,
    ShapeError,
    SpecError,
)
from .phantom import FAMILIES, Phantom, PhantomSpec, generate_phantom
from .pipeline import (
    AblationReport,
    AblationRow,
    EpisodeResult,
    EpisodeSpec,
    ExportPoint,
    PromptExport,
    ablation_run,
    build_export,
    dice,
    execute_episode,
    run_episode,
    run_phantom_episode,
    save_phantom,
    surrogate_segment,
)
from .prompting import (
    ComplexityScore,
    PromptConfig,
    PromptPoint,
    PromptSet,
    adaptive_k,
    complexity,
    generate_prompts,
    kmeans,
    lloyd_cluster,
    negative_prompts,
    positive_prompts,
)
from .prototypes import (
    Prototype,
    PrototypeSet,
    masked_average_pool,
    periphery_prototype,
    regional_prototypes,
)
from .regions import (
    Partition,
    StructuringElement,
    area_and_perimeter,
    dilate,
    farthest_point_seeds,
    periphery_mask,
    voronoi_partition,
)
from .simmaps import (
    CandidateSet,
    SimilarityStack,
    cosine_map,
    extract_candidates,
    mean_map,
    percentile_threshold,
    similarity_stack,
    uncertainty_map,
    write_pgm,
)
from .tensors import (
    BitMask,
    FeatureMap,
    PointRC,
    ScalarMap,
    load_tensor,
    save_tensor,
)

__version__ = "0.1.0"
