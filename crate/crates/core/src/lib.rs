//! Heralded squeezed single photons from two squeezed inputs.
//!
//! Gaussian covariance machinery, exact on/off heralding as a signed
//! Gaussian mixture, the quality/rate trade-off between photon subtraction
//! (PS) and generalized photon subtraction (GPS), a truncated Fock-space
//! cross-check and homodyne tomography helpers.

pub mod error;
pub mod experiment;
pub mod fock;
pub mod gaussian;
pub mod grid;
pub mod heralding;
pub mod solve;
pub mod special;
pub mod tomography;
pub mod tradeoff;

pub use error::{Error, Result};
pub use experiment::{Scheme, SweepSpec, TableRow, TABLE_ROWS};
pub use fock::{FockDensityMatrix, PhotonNumberDistribution, TwoModeState};
pub use gaussian::{db_to_r, Mode, SigmaBlocks, SqueezingParameter, TwoModeCovariance};
pub use grid::{PhaseGrid, WignerGrid};
pub use heralding::{
    herald_onoff, herald_pnrd, quality_metric, Detector, GaussianComponent, HeraldSpec, LossBudget,
    OnOffOutcome, QualityMetric, SignedGaussianMixture, SqueezedFockState,
};
pub use tomography::{CalibrationConstant, MleOptions, TemporalMode, TomographyDataset};
pub use tradeoff::{Branch, GpsParams, TradeoffCurve, TradeoffPoint};
