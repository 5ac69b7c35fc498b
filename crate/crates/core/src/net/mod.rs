//! Trainable blocks and their local and end-to-end training rules.

pub mod conv;
mod ebp;
mod goodness;
mod layer;
mod ops;
mod optim;
mod stack;

pub use conv::{conv2d_dilated, conv_input_grad, conv_param_grad, receptive_span, TAPS};
pub use ebp::{train_baseline_ebp, EbpNet, EBP_FEATURES};
pub use goodness::{ff_pair_loss, ff_pair_loss_grad, goodness, sigmoid, softplus, sum_sq};
pub use layer::{
    ff_batch_loss_grad, ff_pair_param_grad, goodness_gap, train_ff_layer, FFLayerParams, FfTrainConfig,
    PairSource, StoredPairs, TrainLog, LAYER_PARAMS,
};
pub use ops::{l2_norm, l2_normalize, l2_normalize_backward, relu, relu_in_place, NORM_FLOOR};
pub use optim::Adam;
pub use stack::{forward_stack, normalized_activations, stage_forward, IdentityHook, StageHook};
