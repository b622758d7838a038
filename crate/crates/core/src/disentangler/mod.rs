//! Discretizers that turn high-dimensional features into cluster labels:
//! PCA followed by k-means, and an autoencoder trained jointly on
//! reconstruction and a soft clustering loss.

mod autoencoder;
mod checkpoint;
mod dec;
mod kmeans;
mod pca;

pub use autoencoder::{Activation, AutoencoderParams, Dense, LayerGradients, LEAKY_SLOPE};
pub use checkpoint::Tensor;
pub use dec::{
    hard_labels, loss_and_gradients, soft_assign, target_distribution, train_disentangler, DisentanglerModel,
    Loss, ModelGradients, SoftAssignment, TrainedDisentangler, TrainingHistory, TrainingSchedule, ROW_SUM_TOL,
};
pub use kmeans::{fit_kmeans, KMeansModel, MAX_LLOYD_ITERATIONS};
pub use pca::{fit_pca, PcaModel};
