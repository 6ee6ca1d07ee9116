//! Heralded states from a detector click in the trigger arm.
//!
//! On/off heralding is computed exactly in the Gaussian formalism: the
//! heralded Wigner function is a signed mixture of zero-mean Gaussians,
//! `W_out = (W_red − P_off·W_cond) / (1 − P_off)`, where `W_red` is the
//! signal marginal and `W_cond` the signal state conditioned on the trigger
//! being projected onto vacuum. Trigger loss acts on the two-mode covariance
//! before projection, signal loss on every component afterwards, and fake
//! triggers admix the unconditioned signal state.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};
use crate::gaussian::{
    beamsplitter_matrix, input_covariance, loss_channel, propagate, sigma_blocks, Mode,
    SigmaBlocks, SqueezingParameter,
};
use crate::grid::{PhaseGrid, WignerGrid};
use crate::special::fock_wigner;

/// Probability threshold below which a herald is treated as never firing.
const MIN_CLICK: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Detector {
    /// Photon-number-resolving detector heralding exactly `n` photons.
    Pnrd(usize),
    /// Click detector: `Π_on = I − |0⟩⟨0|`.
    OnOff,
}

/// Loss and noise budget of a heralding experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBudget {
    /// Fraction lost between the beam splitter and the detector, detector
    /// inefficiency included.
    pub trigger: f64,
    /// Fraction lost on the heralded state.
    pub signal: f64,
    /// Probability that a herald is spurious (dark count, stray light).
    pub fake_trigger_fraction: f64,
}

impl Default for LossBudget {
    fn default() -> Self {
        Self::NONE
    }
}

impl LossBudget {
    pub const NONE: Self = Self {
        trigger: 0.0,
        signal: 0.0,
        fake_trigger_fraction: 0.0,
    };

    /// Typical setup: 90% trigger loss; 20% signal loss from optics,
    /// mode-mismatch and electronics plus 5% fake triggers, about 25% in total.
    pub const EXPERIMENTAL: Self = Self {
        trigger: 0.9,
        signal: 0.20,
        fake_trigger_fraction: 0.05,
    };

    pub fn new(trigger: f64, signal: f64, fake_trigger_fraction: f64) -> Result<Self> {
        let b = Self {
            trigger,
            signal,
            fake_trigger_fraction,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit("trigger loss", self.trigger)?;
        check_unit("signal loss", self.signal)?;
        check_unit("fake trigger fraction", self.fake_trigger_fraction)?;
        if self.fake_trigger_fraction >= 1.0 {
            return Err(Error::OutOfRange {
                name: "fake trigger fraction",
                value: self.fake_trigger_fraction,
                range: "[0, 1)",
            });
        }
        Ok(())
    }

    pub fn is_lossless(&self) -> bool {
        self.trigger == 0.0 && self.signal == 0.0 && self.fake_trigger_fraction == 0.0
    }
}

/// Generation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeraldSpec {
    pub r1: SqueezingParameter,
    pub r2: SqueezingParameter,
    /// Beam-splitter transmissivity; `R = 1 − T` of mode 1 is reflected into
    /// the trigger arm.
    pub t: f64,
    pub detector: Detector,
    pub losses: LossBudget,
}

impl HeraldSpec {
    pub fn new(
        r1: SqueezingParameter,
        r2: SqueezingParameter,
        t: f64,
        detector: Detector,
        losses: LossBudget,
    ) -> Result<Self> {
        let s = Self {
            r1,
            r2,
            t,
            detector,
            losses,
        };
        s.validate()?;
        Ok(s)
    }

    /// Lossless on/off spec.
    pub fn onoff(r1: f64, r2: f64, t: f64) -> Result<Self> {
        Self::new(
            SqueezingParameter::new(r1)?,
            SqueezingParameter::new(r2)?,
            t,
            Detector::OnOff,
            LossBudget::NONE,
        )
    }

    pub fn with_losses(mut self, losses: LossBudget) -> Result<Self> {
        losses.validate()?;
        self.losses = losses;
        Ok(self)
    }

    pub fn with_detector(mut self, detector: Detector) -> Self {
        self.detector = detector;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.t.is_finite() {
            return Err(Error::NonFinite("T"));
        }
        if !(self.t > 0.0 && self.t < 1.0) {
            return Err(Error::OutOfRange {
                name: "T",
                value: self.t,
                range: "(0, 1)",
            });
        }
        self.losses.validate()
    }

    /// Lossless beam-splitter output blocks.
    pub fn sigma(&self) -> Result<SigmaBlocks> {
        let v0 = input_covariance(self.r1, self.r2);
        sigma_blocks(&propagate(&v0, &beamsplitter_matrix(self.t)?))
    }

    /// Output blocks with trigger loss applied to mode 1.
    pub fn sigma_after_trigger_loss(&self) -> Result<SigmaBlocks> {
        let v0 = input_covariance(self.r1, self.r2);
        let vg = propagate(&v0, &beamsplitter_matrix(self.t)?);
        sigma_blocks(&loss_channel(&vg, Mode::Trigger, self.losses.trigger)?)
    }
}

/// One zero-mean Gaussian term of a signed mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    pub weight: f64,
    pub cov: [[f64; 2]; 2],
}

impl GaussianComponent {
    pub fn diagonal(weight: f64, var_x: f64, var_p: f64) -> Self {
        Self {
            weight,
            cov: [[var_x, 0.0], [0.0, var_p]],
        }
    }

    fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(
            self.cov[0][0],
            self.cov[0][1],
            self.cov[1][0],
            self.cov[1][1],
        )
    }

    /// Normalized Gaussian density at `(x, p)` times the weight.
    pub fn evaluate(&self, x: f64, p: f64) -> f64 {
        let [[a, c], [_, b]] = self.cov;
        let det = a * b - c * c;
        let quad = (b * x * x - 2.0 * c * x * p + a * p * p) / det;
        self.weight * (-0.5 * quad).exp() / (2.0 * PI * det.sqrt())
    }

    fn lossy(&self, loss: f64) -> Self {
        let eta = 1.0 - loss;
        let mut cov = self.cov;
        for (i, row) in cov.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = eta * *v + if i == j { 0.5 * loss } else { 0.0 };
            }
        }
        Self { cov, ..*self }
    }

    fn is_positive_definite(&self) -> bool {
        let m = self.matrix();
        m[(0, 0)] > 0.0 && m.determinant() > 0.0
    }
}

/// Normalized signed sum of zero-mean single-mode Gaussians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedGaussianMixture {
    pub components: Vec<GaussianComponent>,
}

impl SignedGaussianMixture {
    pub fn evaluate(&self, x: f64, p: f64) -> f64 {
        self.components.iter().map(|c| c.evaluate(x, p)).sum()
    }

    pub fn weight_sum(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }

    /// Widest standard deviation over all components.
    pub fn max_std(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.cov[0][0].max(c.cov[1][1]).sqrt())
            .fold(0.0, f64::max)
    }

    pub fn to_grid(&self, grid: &PhaseGrid) -> WignerGrid {
        grid.sample(|x, p| self.evaluate(x, p))
    }

    /// Applies the pure-loss channel to every component.
    pub fn with_loss(&self, loss: f64) -> Result<Self> {
        check_unit("loss", loss)?;
        Ok(Self {
            components: self.components.iter().map(|c| c.lossy(loss)).collect(),
        })
    }

    /// `(1 − f)·self + f·other`.
    pub fn admix(&self, other: &Self, f: f64) -> Self {
        let mut components: Vec<_> = self
            .components
            .iter()
            .map(|c| GaussianComponent {
                weight: (1.0 - f) * c.weight,
                ..*c
            })
            .collect();
        if f > 0.0 {
            components.extend(other.components.iter().map(|c| GaussianComponent {
                weight: f * c.weight,
                ..*c
            }));
        }
        Self { components }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Pure squeezed number state `S(r_out)|n⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezedFockState {
    pub r_out: SqueezingParameter,
    pub n: usize,
}

impl SqueezedFockState {
    pub fn single_photon(r_out: SqueezingParameter) -> Self {
        Self { r_out, n: 1 }
    }

    /// `W_n(e^{r} x, e^{−r} p)`.
    pub fn wigner(&self, x: f64, p: f64) -> f64 {
        let r = self.r_out.r();
        fock_wigner(self.n, r.exp() * x, (-r).exp() * p)
    }

    pub fn to_grid(&self, grid: &PhaseGrid) -> WignerGrid {
        grid.sample(|x, p| self.wigner(x, p))
    }
}

/// Quality indicator and click statistics of an on/off herald.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityMetric {
    /// Wigner minimum if the origin is negative, otherwise `W(0, 0)`.
    pub w00: f64,
    pub p_on: f64,
    pub p_off: f64,
}

/// Result of an on/off herald.
#[derive(Debug, Clone, PartialEq)]
pub struct OnOffOutcome {
    pub mixture: SignedGaussianMixture,
    /// Probability of a genuine click (after trigger loss).
    pub p_on: f64,
}

impl OnOffOutcome {
    pub fn quality(&self, grid: &PhaseGrid) -> Result<QualityMetric> {
        Ok(QualityMetric {
            w00: w00(&self.mixture, grid)?,
            p_on: self.p_on,
            p_off: 1.0 - self.p_on,
        })
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::OutOfRange {
            name: "T",
            value: t,
            range: "(0, 1)",
        });
    }
    Ok(())
}

/// Squeezing of the PNRD-heralded state:
/// `e^{r_out} = e^{r1+r2}·√((2σx,11+1)/(2σp,11+1))`.
pub fn output_squeezing(
    r1: SqueezingParameter,
    r2: SqueezingParameter,
    t: f64,
) -> Result<SqueezingParameter> {
    check_t(t)?;
    let s = input_sigma11(r1.r(), r2.r(), t);
    Ok(SqueezingParameter(r_out_from(r1.r(), r2.r(), s.0, s.1)))
}

/// `(σx,11, σp,11)` of the lossless beam-splitter output, from the closed form.
pub(crate) fn input_sigma11(r1: f64, r2: f64, t: f64) -> (f64, f64) {
    let r = 1.0 - t;
    (
        0.5 * (r * (-2.0 * r1).exp() + t * (-2.0 * r2).exp()),
        0.5 * (r * (2.0 * r1).exp() + t * (2.0 * r2).exp()),
    )
}

pub(crate) fn r_out_from(r1: f64, r2: f64, sx11: f64, sp11: f64) -> f64 {
    r1 + r2 + 0.5 * ((2.0 * sx11 + 1.0) / (2.0 * sp11 + 1.0)).ln()
}

/// Probability that the trigger mode holds no photon, for a reduced trigger
/// state `diag(σx,11, σp,11)`: `2/√((2σp,11+1)(2σx,11+1))`.
pub fn p_off(sigma_x11: f64, sigma_p11: f64) -> f64 {
    2.0 / ((2.0 * sigma_p11 + 1.0) * (2.0 * sigma_x11 + 1.0)).sqrt()
}

/// Lossless closed form of the on/off-heralded Wigner value at the origin.
pub fn w_out_origin(sigma_x11: f64, sigma_p11: f64) -> Result<f64> {
    let poff = p_off(sigma_x11, sigma_p11);
    if 1.0 - poff <= MIN_CLICK {
        return Err(Error::DegenerateHerald);
    }
    Ok((0.5 / (sigma_p11 * sigma_x11).sqrt() - poff) / (PI * (1.0 - poff)))
}

/// Click probability `1 − P_off` including trigger loss.
pub fn onoff_click_probability(spec: &HeraldSpec) -> Result<f64> {
    spec.validate()?;
    let s = spec.sigma_after_trigger_loss()?;
    Ok(1.0 - p_off(s.sigma_x[(0, 0)], s.sigma_p[(0, 0)]))
}

/// Builds the on/off-heralded signal state as a signed Gaussian mixture.
pub fn herald_onoff(spec: &HeraldSpec) -> Result<OnOffOutcome> {
    spec.validate()?;
    let s = spec.sigma_after_trigger_loss()?;
    let (sx, sp) = (s.sigma_x, s.sigma_p);
    let poff = p_off(sx[(0, 0)], sp[(0, 0)]);
    let p_on = 1.0 - poff;
    if p_on <= MIN_CLICK {
        return Err(Error::DegenerateHerald);
    }

    // conditioning on trigger vacuum: per-quadrature Schur complements
    let cond_x = sx[(1, 1)] - sx[(0, 1)] * sx[(0, 1)] / (sx[(0, 0)] + 0.5);
    let cond_p = sp[(1, 1)] - sp[(0, 1)] * sp[(0, 1)] / (sp[(0, 0)] + 0.5);
    if !(cond_x > 0.0 && cond_p > 0.0) {
        return Err(Error::NonPositiveConditioned);
    }

    let reduced = GaussianComponent::diagonal(1.0, sx[(1, 1)], sp[(1, 1)]);
    let heralded = SignedGaussianMixture {
        components: vec![
            GaussianComponent {
                weight: 1.0 / p_on,
                ..reduced
            },
            GaussianComponent::diagonal(-poff / p_on, cond_x, cond_p),
        ],
    };
    let signal = spec.losses.signal;
    let heralded = heralded.with_loss(signal)?;
    let unconditioned = SignedGaussianMixture {
        components: vec![reduced],
    }
    .with_loss(signal)?;
    let mixture = heralded.admix(&unconditioned, spec.losses.fake_trigger_fraction);
    if mixture.components.iter().any(|c| !c.is_positive_definite()) {
        return Err(Error::NonPositiveConditioned);
    }
    Ok(OnOffOutcome { mixture, p_on })
}

/// Lossless single-photon PNRD herald, which yields `S(r_out)|1⟩`.
pub fn herald_pnrd(spec: &HeraldSpec) -> Result<SqueezedFockState> {
    spec.validate()?;
    if !spec.losses.is_lossless() {
        return Err(Error::LossyPnrd);
    }
    match spec.detector {
        Detector::Pnrd(1) => {}
        Detector::Pnrd(n) => {
            return Err(Error::OutOfRange {
                name: "PNRD photon number",
                value: n as f64,
                range: "{1}",
            })
        }
        Detector::OnOff => return Err(Error::Infeasible("spec uses an on/off detector".into())),
    }
    Ok(SqueezedFockState::single_photon(output_squeezing(
        spec.r1, spec.r2, spec.t,
    )?))
}

/// Probability of exactly one photon in the trigger mode, trigger loss
/// included. For a reduced trigger state `diag(a, b)` the overlap integral
/// `2π∬W₁W` evaluates to `P_off·(2a/(2a+1) + 2b/(2b+1) − 1)`.
pub fn pnrd_click_probability(spec: &HeraldSpec) -> Result<f64> {
    spec.validate()?;
    let s = spec.sigma_after_trigger_loss()?;
    let (a, b) = (s.sigma_x[(0, 0)], s.sigma_p[(0, 0)]);
    Ok(p_off(a, b) * (2.0 * a / (2.0 * a + 1.0) + 2.0 * b / (2.0 * b + 1.0) - 1.0))
}

/// `W00`: minimum over the grid if the origin is negative, else `W(0, 0)`.
///
/// Fails with [`Error::GridTooCoarse`] when a negative minimum sits on the
/// grid boundary.
pub fn w00(mixture: &SignedGaussianMixture, grid: &PhaseGrid) -> Result<f64> {
    let origin = mixture.evaluate(0.0, 0.0);
    if origin >= 0.0 {
        return Ok(origin);
    }
    let sampled = mixture.to_grid(grid);
    let (min, i, j) = sampled.argmin();
    let last = grid.points - 1;
    if i == 0 || j == 0 || i == last || j == last {
        return Err(Error::GridTooCoarse);
    }
    Ok(min.min(origin))
}

/// Quality metric of an on/off spec on `grid`.
pub fn quality_metric(spec: &HeraldSpec, grid: &PhaseGrid) -> Result<QualityMetric> {
    herald_onoff(spec)?.quality(grid)
}
