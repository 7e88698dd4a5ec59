//! Synthetic multi-baseline polarimetric SAR scenes with known terrain and canopy.

mod fields;
mod model;
mod scene;
mod stack;

pub use fields::{generate_ground_truth, rescale_into, smooth_field};
pub use model::{
    fourier_profile, pixel_covariance_model, vertical_wavenumbers, volume_coherence,
    TwoLayerModel, VerticalWavenumbers,
};
pub use scene::SceneSpec;
pub use stack::{covariance_factor, phase_screens, simulate_stack, SimulatedScene, CHOLESKY_JITTER};
