//! Comparison methods evaluated under the same protocol as the spiking
//! model: a Gaussian HMM per class, a statistical-feature SVM and a
//! polychronous-group nearest-neighbour classifier.

mod hmm;
mod ishii;
mod png_knn;

pub use hmm::{HmmBaseline, HmmBaselineConfig};
pub use ishii::{ishii_features, IshiiConfig, IshiiModel, RffMap, ScaleStats, ISHII_FEATURES_PER_CHANNEL};
pub use png_knn::{PngBank, PngConfig, PngMatcher};
