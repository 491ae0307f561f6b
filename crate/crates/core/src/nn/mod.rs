//! Parameterized functions of the affinity model: atom featurization, the
//! graph-convolution encoder, combined-input assembly, the generator MLP and
//! the discriminator.

mod features;
mod graphconv;
mod mlp;
mod model;
mod standardize;

pub use features::{atom_feature_row, atom_features, ATOM_FEATURE_WIDTH};
pub use graphconv::{graphconv_forward, BoundGraphConv, GraphConvLayer, GraphConvParams, MolBatch};
pub use mlp::{glorot, Activation, BoundMlp, Linear, Mlp};
pub use model::{
    build_civ, discriminator_forward, generator_forward, BoundModel, Checkpoint, DtiModel, EncodedSet, ModelConfig,
    ModelVariant, Sample, CHECKPOINT_VERSION,
};
pub use standardize::{FeatureStandardizer, STD_FLOOR};
