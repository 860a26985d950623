//! Binary inflation tilings `0 -> 0 1^m`, `1 -> 0`: exact ring arithmetic,
//! point-set generation, spectral classification, pair-correlation
//! renormalisation, and diffraction numerics.
//!
//! The family's inflation multiplier is the positive root of
//! `x^2 = x + m`. For `m = 1` (Fibonacci) and `m = l(l+1)` the diffraction
//! is pure point; for every other `m` only the trivial Bragg peak at the
//! origin survives and the rest of the spectrum is continuous. This crate
//! generates the tilings, certifies the classification, derives and solves
//! the exact pair-correlation renormalisation system, and computes Bragg
//! intensities, autocorrelation coefficients, diffraction grids and their
//! distribution function at desk scale.

pub mod arith;
pub mod classify;
pub mod diffract;
pub mod inflation;
pub mod paircorr;

pub use arith::{ArithError, QuadInt, RingContext};
pub use classify::{
    has_coincidence, recode_constant_length, spectral_type, ClassifyError, CoincidenceResult,
    ConstantLengthSub, PvStatus, SpectralType, SpectrumReport,
};
pub use diffract::{
    bragg_intensity, diffraction_grid, distribution_function, eta_general, eta_zero,
    exponential_sum, scaling_probe, scaling_probe_points, DiffractError, DiffractionGrid,
    DistributionFunction, ScalingClass, ScalingProbe, WeightScheme,
};
pub use inflation::{
    density, density_closed_form, displacement_sets, eigen_data, fixed_point_patch,
    frequencies_closed_form, inflate_points, letter_frequencies, patch_with_min_radius,
    patch_with_min_tiles, substitute, to_point_set, DisplacementSets, EigenData, FixedPointWords,
    InflationError, InflationRule, TileType, TilingPatch, Word,
};
pub use paircorr::{
    check_renorm_residuals, derive_renorm_system, empirical_pair_corr, solve_renorm,
    PairCorrError, PairCorrTable, Provenance, RenormSolution, RenormSystem, RenormTerm,
    ResidualStats,
};
