//! Mask classifier networks, training and distillation.

mod backend;
mod cnn;
pub mod loss;
mod serialize;
pub mod toy;
mod train;

pub use backend::{argmax, predict_classes, softmax_f32, ClassifierBackend, FixedClassifier};
pub use cnn::{build_cnn, Cnn, CnnSpec, ConvBlock, Logits, NUM_CLASSES};
pub use loss::{cross_entropy, distill_loss, distill_loss_with_grad, softmax, DistillWeights};
pub use serialize::{load_model, model_from_bytes, model_to_bytes, save_model, FORMAT_VERSION};
#[cfg(feature = "native")]
pub use train::load_split;
pub use train::{accuracy, distill, train_classifier, DistillConfig, EpochRecord, LabeledImage, TrainOptions, TrainReport};
