//! Evaluation metrics: MPJPE at millisecond horizons, Fréchet distance
//! between feature clouds, and a deterministic 2-D projection.

mod features;
mod fid;
pub mod linalg;
mod mpjpe;
mod report;

pub use features::{read_feature_csv, write_feature_csv, write_points_csv};
pub use fid::{fid, frechet_distance, gaussian_fit, pca_project_2d, GaussianFit};
pub use linalg::{jacobi_eigen, matrix_sqrt_psd, SquareMatrix, SymEigen};
pub use mpjpe::{
    format_ms, horizon_to_frame, mpjpe_all_frames, mpjpe_at_frame, mpjpe_average, HorizonSpec,
};
pub use report::EvalReport;
