"""Numerical laboratory for spectral-gap stability of 1D log-concave measures.

The package studies, at desk scale, measures ``e^{-psi} dx`` on the line
with ``psi'' >= 1`` and finite products thereof: their low spectrum,
near-integer eigenvalues in the almost-rigid regime, Gaussianity of
eigenfunction pushforwards, isoperimetric and observable-diameter
comparisons with the Gaussian, and the equivalence of almost-minimal
spectral gap with almost-maximal observable diameter.
"""

from .errors import (
    ConvexityError,
    DegenerateCompositionError,
    DegenerateMeasureError,
    DiscretizationWarning,
    GapLabError,
    InvalidArgumentError,
    MonotonicityWarning,
    NumericalFailureError,
    ResolutionError,
    TruncationError,
)
from .measures import (
    Grid1D,
    GridFunction,
    Measure1D,
    Potential1D,
    SetOnGrid,
    build_grid,
    center_median,
    gaussian_cdf,
    gaussian_measure,
    make_measure,
    make_potential,
    normalize,
    quantile,
    read_table_potential,
    sigma_inverse,
)
from .spectrum import (
    OperatorDiscretization,
    SpectralDecomposition,
    assemble_dirichlet,
    bochner_gamma2_report,
    decompose,
    eigenpairs,
    gradient_deficit_norm,
    integrability_report,
    key_lemma_report,
    lp_norm,
)
from .hermite import (
    HermiteBasis,
    hermite_derivative,
    hermite_eval,
    hermite_residual_report,
    hermite_second_derivative,
    normalized_hermite_values,
    ou_identity_residual,
)
from .transport import (
    DistanceReport,
    Distribution1D,
    TransportMap1D,
    monotone_map,
    pushforward,
    stein_report,
    total_variation,
    wasserstein1,
    wasserstein2,
    wasserstein_tv,
)
from .obsdiam import (
    ConverseDiagnostics,
    SepReport,
    converse_diagnostics,
    gaussian_window_curvature,
    isoperimetric_check,
    minimal_mass_window,
    neighborhood_growth_check,
    observable_diameter,
    separation,
)
from .needles import (
    NeedleFamily,
    ProductMeasure,
    disintegrate_axis,
    fg_h1_report,
    guiding_function_check,
    needle_estimates_report,
    product_measure,
    verify_needle_properties,
)

__version__ = "0.1.0"
