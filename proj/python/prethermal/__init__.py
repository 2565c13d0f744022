"""Python bindings for the prethermal simulation core."""

from ._core import (  # noqa: F401
    GOLDEN_RATIO,
    J0,
    PrethermalError,
    __version__,
    add_shot_noise,
    fit_decay,
    fit_plateau_extrapolation,
    fit_scaling,
    fourier2d,
    hamiltonian_matrix,
    local_energy_scale,
    low_frequency_weight,
    micromotion_amplitude,
    ppm_to_density,
    run_campaign,
    sample_ensemble,
    waveform_value,
)
