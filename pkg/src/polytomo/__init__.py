"""polytomo: simulation and precision analysis of polyhedral tomography
protocols for 1-3 polarization qubits.

The package covers the full loop: build a measurement protocol from Platonic
solids, draw Poisson-distributed counts for a true state, reconstruct the
state by maximum likelihood, and compare the achieved fidelity against the
asymptotic chi-square-mixture law predicted by the Fisher information.
"""

__version__ = "0.1.0"

from .states import (
    AmplitudeMatrix,
    DensityMatrix,
    density_from_amplitude,
    fidelity_mixed,
    fidelity_pure,
    ghz,
    ghz_mixture,
    nines,
    purify,
    purity,
    random_pure,
    w_state,
)
from .protocols import (
    Protocol,
    assign_exposures,
    completeness_factor,
    cube,
    format_protocol,
    intensities,
    intensity_operator,
    octahedron,
    tensor_protocol,
    tetrahedron,
)
from .symmetric import (
    SymmetricBasis,
    lift_state,
    project_state,
    reduce_protocol,
    symmetric_basis,
)
from .sampling import (
    CountData,
    derive_run_seed,
    draw_counts,
    expected_counts,
    sample_poisson,
)
from .estimation import (
    MaximumLikelihoodEstimator,
    ReconstructionResult,
    likelihood_operators,
    log_likelihood,
    solve_likelihood,
    stationarity_residual,
)
from .precision import (
    InformationMatrix,
    LossModel,
    fidelity_hessian,
    information_matrix,
    loss_coefficients,
    loss_distribution_samples,
    loss_model,
    maximize_loss,
    minimal_loss,
    pure_state_hessian,
)
from .campaign import (
    CampaignConfig,
    CampaignReport,
    ComparisonResult,
    RunRecord,
    compare_models,
    emit_histogram,
    ks_statistic,
    ks_test,
    parse_config,
    run_campaign,
    write_report,
)
from .exceptions import (
    CampaignRunError,
    ConfigError,
    DegeneratePrecisionModelError,
    IncompleteProtocolError,
    TomographyError,
)
