//! Privacy-preserving perturbation of numeric datasets and data streams.
//!
//! Each attribute of each window is sorted, fitted with a four-term shifted
//! Chebyshev polynomial whose least-squares normal equations carry Laplacian
//! noise calibrated to `ε`, and replaced by the normalized noisy fit. Rows are
//! shuffled before release.
//!
//! ```
//! use seal::{Dataset, PerturbationConfig, Perturber};
//!
//! let rows: Vec<[f64; 2]> = (0..100).map(|i| [i as f64, (i * i) as f64]).collect();
//! let data = Dataset::from_rows(&rows).unwrap();
//! let engine = Perturber::new(PerturbationConfig::new(1.0, 50).with_seed(7)).unwrap();
//! let released = engine.perturb_dataset(&data).unwrap();
//! assert_eq!(released.rows(), 100);
//! ```

pub mod attacks;
pub mod bench;
pub mod chebyshev;
pub mod dataset;
pub mod error;
pub mod io;
pub mod laplace;
pub mod noisy_fit;
pub mod perturbation;
pub mod stream;
pub mod utility;

/// Smallest window the four-coefficient model can be fitted to.
pub const MIN_WINDOW: usize = 4;

pub use attacks::{Alignment, AttackReport, AttackSummary};
pub use dataset::{ClassPolicy, Dataset};
pub use error::{Error, Result};
pub use io::CsvSchema;
pub use noisy_fit::ChebyshevModel;
pub use perturbation::{PerturbationConfig, Perturber, WindowFrame};
pub use stream::StreamPerturber;
pub use utility::UtilityReport;
