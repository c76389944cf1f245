"""Maximum-likelihood model fitting when both inputs and outputs carry
measurement error and the pairing between them is only partially known.

Observations come in groups; within a group any input may belong to any
output. The likelihood treats each group's inputs and outputs as mixture
densities and integrates the model through them. Paired data is the
special case of singleton groups, fully unpaired data the case of one
group. Closed forms cover Gaussian errors with affine models and uniform
errors with line models; everything else runs through quadrature or Monte
Carlo integration.
"""

__version__ = "0.1.0"

from .baselines import (
    ALL_PAIRS,
    GROUP_MEAN,
    deming_line,
    imputation_fit,
    integrated_deming_penalty,
    ols_general,
    ols_line,
)
from .dataset import (
    Group,
    GroupedDataset,
    PairedDataset,
    as_grouped,
    build_grouped,
    cross_pair_expansion,
    group_mean_pairs,
    group_overlap_diagnostic,
    partition_by_key,
)
from .densities import (
    GAUSSIAN,
    POINT_MASS,
    UNIFORM,
    DensityParams,
    ErrorDensity,
    density_eval,
    density_sample,
)
from .data_io import (
    AUTO15,
    IngestResult,
    RunManifest,
    TabularSchema,
    make_worldbank_analog,
    paired_subset,
    read_csv,
    read_fit_report,
    read_surface,
    split_indices,
    train_test_split,
    worldbank_analog_path,
    worldbank_analog_schema,
    write_fit_report,
    write_surface,
    write_worldbank_analog,
)
from .metrics import ResidualSummary, r_squared_delta, residual_summary
from .models import ParametricModel, model_eval, model_eval_batch
from .objective import (
    GAUSS_LOG_NORM_PER_GROUP,
    MONTE_CARLO,
    QUADRATURE,
    CompiledGaussianPlane,
    CompiledIntervalLine,
    CompiledObjective,
    IntegrationConfig,
    ObjectiveValue,
    likelihood_interval_line,
    log_posterior,
    mixture_density_eval,
    nll_extended,
    nll_gaussian_hyperplane,
    nll_gaussian_line,
    nll_general,
    shared_gaussian_scales,
    shared_uniform_halfwidths,
)
from .optimize import (
    GAUSS_LINE,
    GAUSS_PLANE,
    GENERAL,
    INTERVAL_LINE,
    OBJECTIVE_CHOICES,
    FitResult,
    OptimizerConfig,
    SurfaceGrid,
    fit,
    fit_extended,
    nelder_mead,
    objective_surface,
)
from .simulate import (
    SCENARIO_NAMES,
    ReplicationReport,
    ScenarioSpec,
    generate_scenario,
    replicate,
    scenario_model,
    scenario_spec,
)

__all__ = [
    "__version__",
    "ALL_PAIRS",
    "AUTO15",
    "GAUSSIAN",
    "GAUSS_LINE",
    "GAUSS_LOG_NORM_PER_GROUP",
    "GAUSS_PLANE",
    "GENERAL",
    "GROUP_MEAN",
    "INTERVAL_LINE",
    "MONTE_CARLO",
    "OBJECTIVE_CHOICES",
    "POINT_MASS",
    "QUADRATURE",
    "SCENARIO_NAMES",
    "UNIFORM",
    "CompiledGaussianPlane",
    "CompiledIntervalLine",
    "CompiledObjective",
    "DensityParams",
    "ErrorDensity",
    "FitResult",
    "Group",
    "GroupedDataset",
    "IngestResult",
    "IntegrationConfig",
    "ObjectiveValue",
    "OptimizerConfig",
    "PairedDataset",
    "ParametricModel",
    "ReplicationReport",
    "ResidualSummary",
    "RunManifest",
    "ScenarioSpec",
    "SurfaceGrid",
    "TabularSchema",
    "as_grouped",
    "build_grouped",
    "cross_pair_expansion",
    "deming_line",
    "density_eval",
    "density_sample",
    "fit",
    "fit_extended",
    "generate_scenario",
    "group_mean_pairs",
    "group_overlap_diagnostic",
    "imputation_fit",
    "integrated_deming_penalty",
    "likelihood_interval_line",
    "log_posterior",
    "make_worldbank_analog",
    "mixture_density_eval",
    "model_eval",
    "model_eval_batch",
    "nelder_mead",
    "nll_extended",
    "nll_gaussian_hyperplane",
    "nll_gaussian_line",
    "nll_general",
    "objective_surface",
    "ols_general",
    "ols_line",
    "paired_subset",
    "partition_by_key",
    "r_squared_delta",
    "read_csv",
    "read_fit_report",
    "read_surface",
    "replicate",
    "residual_summary",
    "scenario_model",
    "scenario_spec",
    "shared_gaussian_scales",
    "shared_uniform_halfwidths",
    "split_indices",
    "train_test_split",
    "worldbank_analog_path",
    "worldbank_analog_schema",
    "write_fit_report",
    "write_surface",
    "write_worldbank_analog",
]
