//! The concrete learning algorithms of the experiments.

mod onehot;
mod rerm;
mod sign;
mod threshold;

pub use onehot::{
    gd_onehot_closed, gd_onehot_iterative, GdHypothesis, OneHot, OneHotGd, OneHotGdConfig,
    OneHotLinearLoss,
};
pub use rerm::{regularized_erm, LinearLoss, Point, RegularizedErm, RegularizedErmConfig};
pub use sign::{sign_erm, RademacherErmConfig, SignErm, SignLoss};
pub use threshold::{
    predict_threshold, threshold_erm, Labeled, ThresholdErm, ThresholdErmConfig, ZeroOneLoss,
};
