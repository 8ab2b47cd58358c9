"""haarlab: a Monte Carlo laboratory for Haar-unitary corner statistics.

The package samples Haar-distributed unitaries by Gram-Schmidt
orthonormalization of complex Gaussian panels, keeping the Gaussian source
coupled to its unitary image; measures how fast sqrt(n)-scaled corners
approach i.i.d. complex Gaussians; machine-checks the explicit inequality
chain that certifies the coupling at finite n; and samples the
Gaussian-adjusted-projected (GAP) measure family together with conditional
wave functions of Haar-random entangled states.
"""

from .dist_tests import (
    KS_CRITICAL,
    REFERENCE_CDFS,
    SelectionBiasDemo,
    TestReport,
    adversarial_selection_demo,
    collect_corner_samples,
    entrywise_gaussianity,
    exponential_cdf,
    independence_check,
    ks_statistic,
    ks_two_sample,
    normal_half_cdf,
    submatrix_invariance,
    uniform_cdf,
)
from .formats import (
    FormatUnsupportedError,
    canonical_json,
    load_complex_matrix,
    load_density_matrix,
    save_complex_matrix,
    save_density_matrix,
)
from .gap import (
    DegenerateSampleError,
    DensityMatrix,
    compare_to_gap,
    conditional_wavefunction_detail,
    density_matrix_from_hermitian,
    gap_chain_check,
    gibbs_density_matrix,
    importance_resampled_ga_norms,
    jacobi_eigenh,
    make_density_matrix,
    sample_conditional_wavefunction,
    sample_ga,
    sample_gap,
    sample_gaussian_state,
)
from .haar import (
    CoupledSample,
    RankDeficientError,
    gram_schmidt_columns,
    rank_tolerance,
    sample_coupled,
    sample_haar_unitary,
    sample_sphere_marginal,
)
from .limits import (
    CertificateCheck,
    CertificateReport,
    CertificateTrial,
    ConstantLedger,
    ConvergenceCurve,
    CurvePoint,
    EventParams,
    EventRates,
    EventReport,
    build_constant_ledger,
    coupling_distance,
    estimate_coupling_probability,
    estimate_event_rates,
    evaluate_events,
    radius_for_delta,
    run_certificate_trials,
    sufficiency_conditions,
    sufficiency_threshold,
    verify_certificate,
    wilson_interval,
)
from .streams import (
    RandomStream,
    column_inner,
    column_norm_sq,
    derive_stream,
    sample_gaussian_matrix,
    sample_std_complex_gaussian,
    vector_inner,
    vector_norm_sq,
)

__version__ = "0.1.0"
