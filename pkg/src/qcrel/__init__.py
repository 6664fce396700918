"""Discord-family correlations and how they change with the choice of subsystems."""

from .classicality import (
    CCSpec,
    CQSpec,
    ResidualReport,
    build_cc_state,
    build_cq_state,
    classify_cc,
    classify_cq,
    cq_residual,
    cc_residual,
    expand_restructured,
    perturb_weights,
)
from .correlations import (
    CorrelationReport,
    classical_correlations,
    conditional_entropy_given_measurement,
    correlation_report,
    covariance_function,
    mutual_information,
    negativity,
    one_way_discord,
    two_way_discord,
)
from .measurement import (
    MeasurementParameterization,
    OptimizerConfig,
    OptimizerError,
    ProjectiveMeasurement,
    optimize_conditional_entropy,
    qubit_grid_oracle,
    random_unitary,
)
from .qstate import (
    DensityOperator,
    PureState,
    StateError,
    apply_unitary,
    eigendecompose,
    partial_trace,
    tensor_product,
    von_neumann_entropy,
)
from .structures import (
    Bipartition,
    CoefficientTensor,
    StructureMap,
    beamsplitter_map,
    extract_coefficients,
    leakage_norm,
    product_coefficient_test,
    regroup,
    restructure,
)

__version__ = "0.1.0"
