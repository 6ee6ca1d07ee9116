//! Experimental operating points and transmissivity sweeps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{db_to_r, SqueezingParameter};
use crate::grid::PhaseGrid;
use crate::heralding::{herald_onoff, output_squeezing, Detector, HeraldSpec, LossBudget};
use crate::solve::linspace;
use crate::tomography::{fit_output_squeezing, CalibrationConstant};
use crate::tradeoff::{constraint_residual, TradeoffPoint};

/// Counts per unit click probability for the 2 dB rows.
pub const CALIBRATION_2DB: f64 = 1.45e6;
/// Counts per unit click probability for the 4 dB rows.
pub const CALIBRATION_4DB: f64 = 1.30e6;
/// Fraction of time the setup is measuring; raw rates are not corrected.
pub const DUTY_CYCLE: f64 = 0.13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    Ps,
    Gps,
}

/// One measured operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub name: &'static str,
    pub scheme: Scheme,
    pub target_db: f64,
    pub r1_db: f64,
    pub r2_db: f64,
    pub t: f64,
    /// Raw herald rate in counts per second.
    pub cps: f64,
    pub measured_r_db: f64,
    pub measured_w00: f64,
}

#[allow(clippy::too_many_arguments)]
const fn row(
    name: &'static str,
    scheme: Scheme,
    target_db: f64,
    r1_db: f64,
    r2_db: f64,
    t: f64,
    cps: f64,
    measured_r_db: f64,
    measured_w00: f64,
) -> TableRow {
    TableRow {
        name,
        scheme,
        target_db,
        r1_db,
        r2_db,
        t,
        cps,
        measured_r_db,
        measured_w00,
    }
}

use Scheme::{Gps, Ps};

pub const TABLE_ROWS: [TableRow; 12] = [
    row("PS-1", Ps, 2.0, 2.06, 0.0, 0.97, 265.0, 1.62, -0.109),
    row("PS-2", Ps, 2.0, 2.11, 0.0, 0.95, 432.0, 1.58, -0.107),
    row("PS-3", Ps, 2.0, 2.16, 0.0, 0.93, 663.0, 1.70, -0.106),
    row("GPS-1", Gps, 2.0, 2.40, -0.39, 0.86, 1820.0, 1.63, -0.135),
    row("GPS-2", Gps, 2.0, 2.80, -0.78, 0.79, 4030.0, 1.63, -0.137),
    row("GPS-3", Gps, 2.0, 3.20, -1.14, 0.74, 6820.0, 1.58, -0.133),
    row("PS-4", Ps, 4.0, 4.14, 0.0, 0.97, 996.0, 3.40, -0.111),
    row("PS-5", Ps, 4.0, 4.24, 0.0, 0.95, 1895.0, 3.35, -0.107),
    row("PS-6", Ps, 4.0, 4.35, 0.0, 0.93, 2496.0, 3.24, -0.102),
    row("GPS-4", Gps, 4.0, 4.40, -0.39, 0.93, 3150.0, 3.36, -0.110),
    row("GPS-5", Gps, 4.0, 4.70, -0.67, 0.89, 5510.0, 3.30, -0.115),
    row("GPS-6", Gps, 4.0, 5.00, -0.94, 0.86, 8090.0, 3.31, -0.112),
];

pub fn table_row(name: &str) -> Option<&'static TableRow> {
    TABLE_ROWS
        .iter()
        .find(|r| r.name.eq_ignore_ascii_case(name))
}

impl TableRow {
    pub fn spec(&self, losses: LossBudget) -> Result<HeraldSpec> {
        HeraldSpec::new(
            db_to_r(self.r1_db)?,
            db_to_r(self.r2_db)?,
            self.t,
            Detector::OnOff,
            losses,
        )
    }

    pub fn calibration(&self) -> CalibrationConstant {
        let c = if self.target_db < 3.0 {
            CALIBRATION_2DB
        } else {
            CALIBRATION_4DB
        };
        CalibrationConstant { c }
    }
}

/// Model prediction for a [`TableRow`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowResult {
    pub name: String,
    pub scheme: Scheme,
    pub r_out_db: f64,
    pub s: f64,
    /// `cosh r1·cosh r2 − cosh r_out/(1 − P_on)` at the lossless operating
    /// point. Vanishes for every physical triple; distance from the best
    /// trade-off is measured by `s − 1`.
    pub constraint_residual: f64,
    pub p_on_lossless: f64,
    pub w00_lossless: f64,
    pub p_on: f64,
    pub w00: f64,
    pub r_est_db: f64,
    pub predicted_cps: f64,
    pub measured_cps: f64,
    pub measured_r_db: f64,
    pub measured_w00: f64,
}

impl RowResult {
    pub fn cps_ratio(&self) -> f64 {
        self.predicted_cps / self.measured_cps
    }
}

/// Rate with the measurement duty cycle divided out.
pub fn duty_corrected(rate: f64) -> f64 {
    rate / DUTY_CYCLE
}

/// Evaluates a row: lossless output squeezing and trade-off coordinates,
/// lossy quality and click probability, fitted squeezing of the lossy state
/// and the predicted raw rate `C·P_on`.
pub fn evaluate_row(row: &TableRow, losses: LossBudget, grid: &PhaseGrid) -> Result<RowResult> {
    let lossless =
        TradeoffPoint::lossless(db_to_r(row.r1_db)?.r(), db_to_r(row.r2_db)?.r(), row.t)?;
    let spec = row.spec(losses)?;
    let r_out = output_squeezing(spec.r1, spec.r2, spec.t)?;
    let (res, _) = constraint_residual(spec.r1, spec.r2, r_out, lossless.p_on);
    let outcome = herald_onoff(&spec)?;
    let quality = outcome.quality(grid)?;
    let r_est = fit_output_squeezing(&outcome.mixture.to_grid(grid))?;
    Ok(RowResult {
        name: row.name.to_string(),
        scheme: row.scheme,
        r_out_db: r_out.db(),
        s: lossless.s,
        constraint_residual: res,
        p_on_lossless: lossless.p_on,
        w00_lossless: lossless.w00,
        p_on: quality.p_on,
        w00: quality.w00,
        r_est_db: r_est.db(),
        predicted_cps: row.calibration().rate(quality.p_on),
        measured_cps: row.cps,
        measured_r_db: row.measured_r_db,
        measured_w00: row.measured_w00,
    })
}

/// A transmissivity sweep at fixed input squeezing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub r1: SqueezingParameter,
    pub r2: SqueezingParameter,
    pub t_values: Vec<f64>,
    pub losses: LossBudget,
    pub grid: PhaseGrid,
}

impl SweepSpec {
    /// `T = step, 2·step, …, 1 − step`.
    pub fn new(r1_db: f64, r2_db: f64, step: f64, losses: LossBudget) -> Result<Self> {
        if !(step > 0.0 && step < 0.5) {
            return Err(Error::OutOfRange {
                name: "T step",
                value: step,
                range: "(0, 0.5)",
            });
        }
        let n = (1.0 / step).round() as usize;
        Ok(Self {
            r1: db_to_r(r1_db)?,
            r2: db_to_r(r2_db)?,
            t_values: linspace(step, 1.0 - step, n - 1),
            losses,
            grid: PhaseGrid::default(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub t: f64,
    pub w00_lossless: f64,
    pub p_on_lossless: f64,
    pub w00_lossy: f64,
    pub p_on_lossy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepFailure {
    pub t: f64,
    pub error: Error,
}

pub fn sweep_point(spec: &SweepSpec, t: f64) -> Result<SweepPoint> {
    let base = HeraldSpec::new(spec.r1, spec.r2, t, Detector::OnOff, LossBudget::NONE)?;
    let clean = herald_onoff(&base)?.quality(&spec.grid)?;
    let lossy = herald_onoff(&base.with_losses(spec.losses)?)?.quality(&spec.grid)?;
    Ok(SweepPoint {
        t,
        w00_lossless: clean.w00,
        p_on_lossless: clean.p_on,
        w00_lossy: lossy.w00,
        p_on_lossy: lossy.p_on,
    })
}

/// Evaluates every `T` of the sweep; points that fail are collected
/// separately. Output is ordered by `T`.
pub fn run_sweep(spec: &SweepSpec) -> (Vec<SweepPoint>, Vec<SweepFailure>) {
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for &t in &spec.t_values {
        match sweep_point(spec, t) {
            Ok(p) => points.push(p),
            Err(error) => failures.push(SweepFailure { t, error }),
        }
    }
    (points, failures)
}

/// Sweep point with the lowest lossless quality indicator.
pub fn best_transmissivity(points: &[SweepPoint]) -> Option<SweepPoint> {
    points
        .iter()
        .copied()
        .min_by(|a, b| a.w00_lossless.total_cmp(&b.w00_lossless))
}
