//! Spectrally positive stable Levy processes with Laplace exponent
//! `psi(lambda) = lambda^alpha`, their first-passage processes, approximate
//! height processes and the rescaling construction of first-passage bridges.

mod construction;
mod density;
mod height;
pub(crate) mod sampler;

pub use construction::{
    conditioned_forest_by_rescaling, locate_g, rescaled_bridge, total_mass, Excursion, ExcursionSet,
    FirstPassage, RescaledBridge, RescaledForest,
};
pub use density::{
    bessel3_bridge_cdf, bessel3_bridge_density, bridge_marginal_cdf_alpha2, bridge_marginal_density_alpha2,
    first_passage_density_alpha2, fpb_density_alpha2, gaussian_kernel,
};
pub use height::{approx_height_process, default_epsilon, height_schedule, HeightLevel};
pub use sampler::{
    first_passage_time, sample_stable_path, stable_increment, FirstPassageOptions, StableParams,
};
