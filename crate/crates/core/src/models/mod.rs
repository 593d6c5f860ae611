//! Assembled networks around the forecaster: the frame classifier, the
//! adversarial discriminator, and the in-memory checkpoint representation
//! shared by every model kind.

mod checkpoint;
mod classifier;
mod discriminator;

pub use checkpoint::{Checkpoint, ModelKind, CHECKPOINT_VERSION};
pub use classifier::{ClassifierConfig, ClassifierModel};
pub use discriminator::{DiscriminatorCache, DiscriminatorModel, DISCRIMINATOR_HIDDEN};
