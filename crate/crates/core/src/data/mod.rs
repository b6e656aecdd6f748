//! CSV ingestion and preprocessing: imputation, train/test split, PCA and
//! min-max scaling.

pub mod format;
pub mod impute;
pub mod pca;
pub mod pipeline;
pub mod scale;
pub mod split;
pub mod table;

pub use format::{read_dataset, write_dataset, Dataset};
pub use impute::knn_impute;
pub use pca::{fit_pca, PcaBasis};
pub use pipeline::{prepare, prepare_files, PipelineConfig, Prepared};
pub use scale::{fit_scaler, ScalerParams};
pub use split::{split, SplitIndices};
pub use table::{load_csv, CsvOptions, MarkerColumn, RawTable};
