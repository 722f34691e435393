//! Dataset ingestion, splitting, augmentation and pseudo-labeling.

mod augment;
mod bbox;
mod classes;
pub mod labels;
mod manifest;
mod pseudo;
mod split;

pub use augment::{
    augment, augment_with_rng, gaussian_blur, rotate, AugmentationSpec, ColorJitter, GaussianBlur, Normalization,
    RandomErasing, ResizedCrop, Rotation, CLASSIFIER_INPUT_SIDE,
};
pub use bbox::{BBox, EDGE_EPS};
pub use classes::{merge_to_detclass, DetClass, LabelClass, MaskClass};
pub use manifest::{load_manifest, save_manifest, Annotation, Manifest, ManifestEntry, Sample};
pub use pseudo::{pseudo_label, PseudoLabelOutcome, PseudoLabeled};
pub use split::{split_counts, split_manifest, Split, SplitRatios};
