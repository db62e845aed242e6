"""DOA estimation (PCA/MUSIC/DTFT) with exact Bayesian MAP model-order selection."""

from .arraysim import (
    ArrayScenario,
    FreqData,
    TimeData,
    amplitude_matrix,
    default_scenario,
    doa_to_omega,
    fft_reduce,
    steering_matrix,
    steering_vector,
    synth_freq,
    synth_time,
)
from .metrics import DoaEstimate, err_doa, rmse_amplitude, rmse_scalar, snr_db
from .ordermap import (
    AmplitudeEstimates,
    OrderPosterior,
    aic_order,
    log_f_y_k0,
    log_stiefel_volume,
    map_order_pca,
    map_order_scan,
    posterior_variances,
    shrink_amplitudes,
)
from .specfun import (
    DominancePair,
    GammaParams,
    double_gamma_pdf,
    double_invgamma_pdf,
    double_moment,
    log_gamma,
    log_q_sum,
    log_reg_inc_beta,
    prob_dominance,
    reg_inc_beta,
    reg_lower_inc_gamma,
    sample_dominance_pair,
)
from .subspace import (
    EigenBasis,
    ProjectionStats,
    SpectrumCurve,
    dtft_spectrum,
    eigendecompose,
    music_pseudospectrum,
    pca_basis,
    pick_peaks,
    projection_stats,
    sample_covariance,
)

__version__ = "0.1.0"
