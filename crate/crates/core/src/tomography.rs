//! Homodyne tomography helpers: temporal-mode quadrature extraction,
//! synthetic homodyne data, maximum-likelihood reconstruction and the
//! squeezing / calibration estimators.
//!
//! The phase-`θ` marginal is `p_θ(x) = Σ ρ_mn e^{i(m−n)θ} ψ_m(x) ψ_n(x)`,
//! i.e. the distribution of `x cos θ − p sin θ`.

use std::f64::consts::PI;
use std::io::{Read, Write};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{fidelity, FockDensityMatrix, C64};
use crate::gaussian::SqueezingParameter;
use crate::grid::{PhaseGrid, WignerGrid};
use crate::heralding::SqueezedFockState;
use crate::solve::golden_section;
use crate::special::hermite_functions;

/// Wave-packet mode `f(t) ∝ e^{2πγ1(t−t0)} − e^{2πγ2(t−t0)}` for `t ≤ t0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemporalMode {
    pub gamma1: f64,
    pub gamma2: f64,
    pub t0: f64,
    pub normalization: f64,
}

impl TemporalMode {
    pub fn new(gamma1: f64, gamma2: f64, t0: f64) -> Result<Self> {
        if !(gamma1 > 0.0 && gamma2 > gamma1 && gamma2.is_finite() && t0.is_finite()) {
            return Err(Error::OutOfRange {
                name: "gamma1",
                value: gamma1,
                range: "0 < gamma1 < gamma2",
            });
        }
        let (a, b) = (2.0 * PI * gamma1, 2.0 * PI * gamma2);
        let norm_sq = 1.0 / (2.0 * a) + 1.0 / (2.0 * b) - 2.0 / (a + b);
        Ok(Self {
            gamma1,
            gamma2,
            t0,
            normalization: 1.0 / norm_sq.sqrt(),
        })
    }

    /// γ1 = 2.8 MHz, γ2 = 80 MHz.
    pub fn experimental(t0: f64) -> Self {
        Self::new(2.8e6, 80e6, t0).expect("valid constants")
    }

    /// Time of the mode maximum, `t0 − ln(γ2/γ1)/(2π(γ2 − γ1))`.
    pub fn peak_time(&self) -> f64 {
        self.t0 - (self.gamma2 / self.gamma1).ln() / (2.0 * PI * (self.gamma2 - self.gamma1))
    }

    /// Interval outside of which `f²` carries less than `e^{-40}` weight.
    pub fn support(&self) -> (f64, f64) {
        (self.t0 - 20.0 / (2.0 * PI * self.gamma1), self.t0)
    }
}

pub fn temporal_mode_value(mode: &TemporalMode, t: f64) -> f64 {
    if t > mode.t0 {
        return 0.0;
    }
    let tau = t - mode.t0;
    mode.normalization
        * ((2.0 * PI * mode.gamma1 * tau).exp() - (2.0 * PI * mode.gamma2 * tau).exp())
}

/// Uniformly sampled real waveform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub start: f64,
    pub dt: f64,
    pub samples: Vec<f64>,
}

impl Waveform {
    pub fn time(&self, i: usize) -> f64 {
        self.start + self.dt * i as f64
    }

    pub fn end(&self) -> f64 {
        self.time(self.samples.len().saturating_sub(1))
    }
}

/// Quadrature of one waveform together with `Σ f² Δt` over the samples;
/// coverage noticeably below 1 means the mode support was cut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub value: f64,
    pub coverage: f64,
}

impl Quadrature {
    pub fn truncated(&self) -> bool {
        self.coverage < 0.999
    }
}

/// `Σ f(t_i) v(t_i) Δt`.
pub fn extract_quadrature(waveform: &Waveform, mode: &TemporalMode) -> Result<Quadrature> {
    if waveform.samples.is_empty() {
        return Err(Error::Empty("waveform"));
    }
    if waveform.dt.is_nan() || waveform.dt <= 0.0 {
        return Err(Error::OutOfRange {
            name: "dt",
            value: waveform.dt,
            range: "(0, inf)",
        });
    }
    let (mut value, mut coverage) = (0.0, 0.0);
    for (i, v) in waveform.samples.iter().enumerate() {
        let f = temporal_mode_value(mode, waveform.time(i));
        value += f * v * waveform.dt;
        coverage += f * f * waveform.dt;
    }
    Ok(Quadrature { value, coverage })
}

/// Phase-resolved quadrature samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyDataset {
    pub phases: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
    pub seed: u64,
}

/// `count` phases in 15° steps from 0.
pub fn default_phases(count: usize) -> Vec<f64> {
    (0..count).map(|k| k as f64 * PI / 12.0).collect()
}

pub const DEFAULT_PHASES: usize = 12;
pub const DEFAULT_SAMPLES_PER_PHASE: usize = 5000;

impl TomographyDataset {
    pub fn len(&self) -> usize {
        self.samples.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// CSV with header `phase_rad,x`; the seed goes into a `#` comment.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# seed={}", self.seed)?;
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["phase_rad", "x"])?;
        for (theta, xs) in self.phases.iter().zip(&self.samples) {
            for x in xs {
                wtr.write_record([theta.to_string(), x.to_string()])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads `phase_rad,x` rows, grouping consecutive rows by phase.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut text = String::new();
        let mut input = input;
        input.read_to_string(&mut text)?;
        let seed = text
            .lines()
            .filter_map(|l| l.strip_prefix("# seed="))
            .find_map(|s| s.trim().parse().ok())
            .unwrap_or(0);
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut phases: Vec<f64> = Vec::new();
        let mut samples: Vec<Vec<f64>> = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let num = |k: usize| -> Result<f64> {
                rec.get(k)
                    .ok_or_else(|| Error::Parse("short row".into()))?
                    .trim()
                    .parse()
                    .map_err(|e: std::num::ParseFloatError| Error::Parse(e.to_string()))
            };
            let (theta, x) = (num(0)?, num(1)?);
            match phases.iter().position(|&p| p == theta) {
                Some(k) => samples[k].push(x),
                None => {
                    phases.push(theta);
                    samples.push(vec![x]);
                }
            }
        }
        if phases.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        Ok(Self {
            phases,
            samples,
            seed,
        })
    }
}

/// `p_θ(x)` on the points `xs`, computed from Hermite functions.
pub fn quadrature_distribution(rho: &FockDensityMatrix, theta: f64, xs: &[f64]) -> Vec<f64> {
    let d = rho.dim();
    let m = rho.matrix();
    // e^{−imθ}: ⟨m|x_θ⟩ = e^{−imθ} ψ_m(x)
    let phase: Vec<C64> = (0..d)
        .map(|k| C64::from_polar(1.0, -(k as f64) * theta))
        .collect();
    xs.iter()
        .map(|&x| {
            let psi = hermite_functions(d - 1, x);
            let amp: Vec<C64> = (0..d).map(|k| phase[k] * psi[k]).collect();
            let mut acc = C64::new(0.0, 0.0);
            for a in 0..d {
                for b in 0..d {
                    acc += amp[a].conj() * m[(a, b)] * amp[b];
                }
            }
            acc.re
        })
        .collect()
}

const SAMPLING_EXTENT: f64 = 8.0;
const SAMPLING_POINTS: usize = 8001;

/// Draws `n_per_phase` samples per phase from the exact marginals by
/// inverse-CDF interpolation on a dense grid. Phase `k` uses ChaCha stream
/// `k` of `seed`.
pub fn synthesize_homodyne(
    rho: &FockDensityMatrix,
    phases: &[f64],
    n_per_phase: usize,
    seed: u64,
) -> Result<TomographyDataset> {
    let tr = rho.trace();
    if (tr - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidDensity(format!("trace {tr} is not 1")));
    }
    if phases.is_empty() {
        return Err(Error::Empty("phases"));
    }
    let h = 2.0 * SAMPLING_EXTENT / (SAMPLING_POINTS - 1) as f64;
    let xs: Vec<f64> = (0..SAMPLING_POINTS)
        .map(|i| -SAMPLING_EXTENT + h * i as f64)
        .collect();
    let mut samples = Vec::with_capacity(phases.len());
    for (k, &theta) in phases.iter().enumerate() {
        let mut p = quadrature_distribution(rho, theta, &xs);
        let peak = p.iter().cloned().fold(0.0, f64::max);
        let low = p.iter().cloned().fold(f64::INFINITY, f64::min);
        if low < -1e-8 * peak.max(1e-300) {
            return Err(Error::NegativeDistribution(low));
        }
        p.iter_mut().for_each(|v| *v = v.max(0.0));
        let mut cdf = vec![0.0; xs.len()];
        for i in 1..xs.len() {
            cdf[i] = cdf[i - 1] + 0.5 * (p[i] + p[i - 1]) * h;
        }
        let total = cdf[xs.len() - 1];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let draws = (0..n_per_phase)
            .map(|_| {
                let u = rng.random::<f64>() * total;
                let i = cdf.partition_point(|&c| c < u).clamp(1, xs.len() - 1);
                let (c0, c1) = (cdf[i - 1], cdf[i]);
                let f = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
                xs[i - 1] + f * h
            })
            .collect();
        samples.push(draws);
    }
    Ok(TomographyDataset {
        phases: phases.to_vec(),
        samples,
        seed,
    })
}

/// Reconstruction settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    /// Photon-number cutoff; the reconstruction has dimension `truncation + 1`.
    pub truncation: usize,
    pub max_iter: usize,
    /// Stop once the log-likelihood per sample improves by less than this.
    pub tol: f64,
    pub bins: usize,
    pub extent: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            truncation: 10,
            max_iter: 5000,
            tol: 1e-10,
            bins: 200,
            extent: 6.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MleResult {
    pub rho: FockDensityMatrix,
    /// Log-likelihood per sample after each accepted iteration, starting
    /// with the initial guess.
    pub log_likelihood: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Bin projectors and normalized counts for each `(phase, bin)` with data.
fn binned_projectors(data: &TomographyDataset, opts: &MleOptions) -> (Vec<DMatrix<C64>>, Vec<f64>) {
    let d = opts.truncation + 1;
    let width = 2.0 * opts.extent / opts.bins as f64;
    let total = data.len() as f64;
    let mut projectors = Vec::new();
    let mut freqs = Vec::new();
    // Simpson nodes per bin
    let nodes = [(0.0, 1.0 / 6.0), (0.5, 4.0 / 6.0), (1.0, 1.0 / 6.0)];
    let mut psi_cache: Vec<Vec<f64>> = Vec::with_capacity(2 * opts.bins + 1);
    for j in 0..=2 * opts.bins {
        psi_cache.push(hermite_functions(
            d - 1,
            -opts.extent + 0.5 * width * j as f64,
        ));
    }
    for (theta, xs) in data.phases.iter().zip(&data.samples) {
        let mut counts = vec![0usize; opts.bins];
        for &x in xs {
            let b = ((x + opts.extent) / width).floor();
            if b >= 0.0 && (b as usize) < opts.bins {
                counts[b as usize] += 1;
            }
        }
        let phase: Vec<C64> = (0..d)
            .map(|k| C64::from_polar(1.0, -(k as f64) * theta))
            .collect();
        for (b, &n) in counts.iter().enumerate() {
            if n == 0 {
                continue;
            }
            let mut pi = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
            for (off, w) in nodes {
                let psi = &psi_cache[2 * b + (2.0 * off) as usize];
                for a in 0..d {
                    let ua = phase[a] * psi[a];
                    for c in 0..d {
                        pi[(a, c)] += ua * (phase[c] * psi[c]).conj() * (w * width);
                    }
                }
            }
            projectors.push(pi);
            freqs.push(n as f64 / total);
        }
    }
    (projectors, freqs)
}

fn probabilities(rho: &DMatrix<C64>, projectors: &[DMatrix<C64>]) -> Vec<f64> {
    projectors
        .iter()
        .map(|pi| rho.zip_map(pi, |r, p| r * p.conj()).sum().re.max(1e-300))
        .collect()
}

fn log_likelihood(freqs: &[f64], probs: &[f64]) -> f64 {
    freqs.iter().zip(probs).map(|(f, p)| f * p.ln()).sum()
}

/// Iterative maximum-likelihood reconstruction with the diluted update
/// `ρ ← (I + εR)ρ(I + εR)/tr`, `R = Σ_k f_k Π_k / p_k`. The dilution `ε`
/// starts large (plain `RρR`) and is halved whenever a step would lower the
/// likelihood, so the log-likelihood never decreases.
pub fn mle_reconstruct(data: &TomographyDataset, opts: &MleOptions) -> Result<MleResult> {
    if data.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let d = opts.truncation + 1;
    let (projectors, freqs) = binned_projectors(data, opts);
    if projectors.is_empty() {
        return Err(Error::Empty("binned samples"));
    }
    let id = DMatrix::<C64>::identity(d, d);
    let mut rho = &id / C64::new(d as f64, 0.0);
    let mut probs = probabilities(&rho, &projectors);
    let mut ll = log_likelihood(&freqs, &probs);
    let mut history = vec![ll];
    let mut eps: f64 = 1e3;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let mut r = DMatrix::from_element(d, d, C64::new(0.0, 0.0));
        for ((pi, f), p) in projectors.iter().zip(&freqs).zip(&probs) {
            r += pi * C64::new(f / p, 0.0);
        }
        let mut accepted = None;
        for _ in 0..60 {
            let step = &id + &r * C64::new(eps, 0.0);
            let mut cand = &step * &rho * &step;
            let tr = cand.trace().re;
            cand /= C64::new(tr, 0.0);
            let cand = (&cand + cand.adjoint()) * C64::new(0.5, 0.0);
            let cp = probabilities(&cand, &projectors);
            let cll = log_likelihood(&freqs, &cp);
            if cll >= ll {
                accepted = Some((cand, cp, cll));
                break;
            }
            eps *= 0.5;
        }
        let Some((cand, cp, cll)) = accepted else {
            converged = true;
            break;
        };
        let gain = cll - ll;
        rho = cand;
        probs = cp;
        ll = cll;
        history.push(ll);
        eps = (eps * 2.0).min(1e3);
        if gain < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(MleResult {
        rho: FockDensityMatrix::new(rho)?,
        log_likelihood: history,
        iterations,
        converged,
    })
}

/// The quality indicator of a density matrix: the grid minimum if the origin
/// is negative, otherwise the origin value.
pub fn density_w00(rho: &FockDensityMatrix, grid: &PhaseGrid) -> Result<f64> {
    let origin = rho.wigner(0.0, 0.0);
    if origin >= 0.0 {
        return Ok(origin);
    }
    let w = grid.sample(|x, p| rho.wigner(x, p));
    let (min, i, j) = w.argmin();
    let last = grid.points - 1;
    if i == 0 || j == 0 || i == last || j == last {
        return Err(Error::GridTooCoarse);
    }
    Ok(min.min(origin))
}

const FIT_RANGE: f64 = 1.2;
const FIT_STEPS: usize = 121;
const FLAT_TOL: f64 = 1e-6;

fn maximize_overlap<F: Fn(f64) -> f64>(overlap: F) -> Result<SqueezingParameter> {
    let h = 2.0 * FIT_RANGE / (FIT_STEPS - 1) as f64;
    let scan: Vec<(f64, f64)> = (0..FIT_STEPS)
        .map(|i| {
            let r = -FIT_RANGE + h * i as f64;
            (r, overlap(r))
        })
        .collect();
    let (lo, hi) = scan
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(_, v)| {
            (a.min(v), b.max(v))
        });
    if hi - lo < FLAT_TOL {
        return Err(Error::FlatFit);
    }
    let best = scan
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|&(r, _)| r)
        .unwrap_or(0.0);
    let (r, _) = golden_section(|r| -overlap(r), best - h, best + h, 1e-9);
    if r.abs() >= FIT_RANGE - h {
        return Err(Error::BoundaryHit(r));
    }
    Ok(SqueezingParameter(r))
}

/// Squeezing of the pure squeezed single photon whose Wigner function has
/// the largest grid overlap with `w`. Since every pure target has the same
/// `∬W_r²`, this is the grid least-squares fit.
pub fn fit_output_squeezing(w: &WignerGrid) -> Result<SqueezingParameter> {
    let axis = w.grid.axis();
    let h2 = w.grid.step().powi(2);
    maximize_overlap(|r| {
        let target = SqueezedFockState::single_photon(SqueezingParameter(r));
        let mut acc = 0.0;
        for (i, &x) in axis.iter().enumerate() {
            for (j, &p) in axis.iter().enumerate() {
                acc += w.get(i, j) * target.wigner(x, p);
            }
        }
        acc * h2
    })
}

/// Same fit evaluated exactly in the Fock basis: maximizes `⟨ψ_r|ρ|ψ_r⟩`.
pub fn fit_output_squeezing_density(rho: &FockDensityMatrix) -> Result<SqueezingParameter> {
    maximize_overlap(|r| {
        fidelity(
            rho,
            &SqueezedFockState::single_photon(SqueezingParameter(r)),
        )
        .unwrap_or(0.0)
    })
}

/// `(1 − π·W00)/2`.
pub fn fidelity_from_w00(w00: f64) -> f64 {
    0.5 * (1.0 - PI * w00)
}

/// Counts per unit click probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConstant {
    pub c: f64,
}

impl CalibrationConstant {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::OutOfRange {
                name: "C",
                value: c,
                range: "(0, inf)",
            });
        }
        Ok(Self { c })
    }

    pub fn rate(&self, p_on: f64) -> f64 {
        self.c * p_on
    }
}

/// Mean of `rate / P_on` over the pairs `(P_on, rate)`.
pub fn fit_calibration(pairs: &[(f64, f64)]) -> Result<CalibrationConstant> {
    if pairs.is_empty() {
        return Err(Error::Empty("calibration pairs"));
    }
    for &(p, rate) in pairs {
        if !(p > 0.0 && rate > 0.0) {
            return Err(Error::OutOfRange {
                name: "calibration pair",
                value: if p > 0.0 { rate } else { p },
                range: "(0, inf)",
            });
        }
    }
    CalibrationConstant::new(pairs.iter().map(|(p, r)| r / p).sum::<f64>() / pairs.len() as f64)
}

/// Spread of reconstructed `W00` over `repeats` synthetic datasets drawn
/// from `rho`: `(mean, standard deviation)`.
pub fn resampled_w00_spread(
    rho: &FockDensityMatrix,
    n_per_phase: usize,
    repeats: usize,
    seed: u64,
    opts: &MleOptions,
    grid: &PhaseGrid,
) -> Result<(f64, f64)> {
    if repeats == 0 {
        return Err(Error::Empty("repeats"));
    }
    let phases = default_phases(DEFAULT_PHASES);
    let mut vals = Vec::with_capacity(repeats);
    for k in 0..repeats {
        let data = synthesize_homodyne(rho, &phases, n_per_phase, seed.wrapping_add(k as u64))?;
        let rec = mle_reconstruct(&data, opts)?;
        vals.push(density_w00(&rec.rho, grid)?);
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok((mean, var.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{squeezed_single_photon_fock, squeezed_vacuum_fock};
    use crate::gaussian::db_to_r;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;

    fn vacuum(d: usize) -> FockDensityMatrix {
        let mut v = DVector::from_element(d, C64::new(0.0, 0.0));
        v[0] = C64::new(1.0, 0.0);
        FockDensityMatrix::from_pure(&v).unwrap()
    }

    fn variance(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    }

    #[test]
    fn temporal_mode_shape() {
        let m = TemporalMode::experimental(1e-6);
        assert_eq!(temporal_mode_value(&m, 1.1e-6), 0.0);
        assert_abs_diff_eq!(temporal_mode_value(&m, 1e-6), 0.0, epsilon = 1e-12);
        let tp = m.peak_time();
        assert!(tp < m.t0);
        let d = 1e-12;
        let slope = temporal_mode_value(&m, tp + d) - temporal_mode_value(&m, tp - d);
        assert!(slope.abs() / temporal_mode_value(&m, tp) < 1e-8);
        // stationarity γ1 e^{2πγ1τ} = γ2 e^{2πγ2τ}
        let tau = tp - m.t0;
        assert_abs_diff_eq!(
            m.gamma1 * (2.0 * PI * m.gamma1 * tau).exp(),
            m.gamma2 * (2.0 * PI * m.gamma2 * tau).exp(),
            epsilon = 1e-6 * m.gamma1
        );
        assert!(TemporalMode::new(80e6, 2.8e6, 0.0).is_err());
    }

    fn mode_waveform(m: &TemporalMode, dt: f64) -> Waveform {
        let (a, b) = m.support();
        let n = ((b - a) / dt).ceil() as usize + 1;
        Waveform {
            start: a,
            dt,
            samples: (0..n)
                .map(|i| temporal_mode_value(m, a + dt * i as f64))
                .collect(),
        }
    }

    #[test]
    fn quadrature_of_mode_itself_is_one() {
        let m = TemporalMode::experimental(0.0);
        let w = mode_waveform(&m, 1e-10);
        let q = extract_quadrature(&w, &m).unwrap();
        assert_abs_diff_eq!(q.value, 1.0, epsilon = 1e-3);
        assert!(!q.truncated());

        let short = Waveform {
            start: m.t0 - 1e-7,
            ..w.clone()
        };
        assert!(extract_quadrature(&short, &m).unwrap().truncated());
    }

    #[test]
    fn quadrature_ignores_samples_outside_support() {
        let m = TemporalMode::experimental(0.0);
        let zero_on_support = Waveform {
            start: 1e-9,
            dt: 1e-10,
            samples: vec![3.0; 100],
        };
        assert_eq!(extract_quadrature(&zero_on_support, &m).unwrap().value, 0.0);
    }

    #[test]
    fn white_noise_variance_is_preserved() {
        let m = TemporalMode::experimental(0.0);
        let base = mode_waveform(&m, 2e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sigma = 1.0 / base.dt.sqrt();
        let vals: Vec<f64> = (0..2000)
            .map(|_| {
                let samples = base
                    .samples
                    .iter()
                    .map(|_| {
                        // Box-Muller
                        let (u1, u2): (f64, f64) = (rng.random(), rng.random());
                        sigma * (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * PI * u2).cos()
                    })
                    .collect();
                extract_quadrature(
                    &Waveform {
                        samples,
                        ..base.clone()
                    },
                    &m,
                )
                .unwrap()
                .value
            })
            .collect();
        // 2000 samples: relative standard error of the variance ≈ 0.032
        assert_abs_diff_eq!(variance(&vals), 1.0, epsilon = 0.1);
    }

    #[test]
    fn vacuum_samples_have_vacuum_variance() {
        let data = synthesize_homodyne(&vacuum(4), &default_phases(3), 5000, 1).unwrap();
        // 3σ for a variance estimate from 5000 Gaussian samples
        let bound = 3.0 * 0.5 * (2.0f64 / 4999.0).sqrt();
        for xs in &data.samples {
            assert_abs_diff_eq!(variance(xs), 0.5, epsilon = bound);
        }
    }

    #[test]
    fn squeezed_vacuum_marginal_moments() {
        let r = 0.3;
        let v = squeezed_vacuum_fock(SqueezingParameter(r), 30).unwrap();
        let rho = FockDensityMatrix::from_pure(&v).unwrap();
        let h = 2.0 * SAMPLING_EXTENT / (SAMPLING_POINTS - 1) as f64;
        let xs: Vec<f64> = (0..SAMPLING_POINTS)
            .map(|i| -SAMPLING_EXTENT + h * i as f64)
            .collect();
        for (theta, var) in [
            (0.0, (-2.0 * r).exp() / 2.0),
            (PI / 2.0, (2.0 * r).exp() / 2.0),
        ] {
            let p = quadrature_distribution(&rho, theta, &xs);
            let m2: f64 = xs.iter().zip(&p).map(|(x, p)| x * x * p * h).sum();
            assert_abs_diff_eq!(m2, var, epsilon = 1e-8);
        }
        let data = synthesize_homodyne(&rho, &[0.0, PI / 2.0], 5000, 3).unwrap();
        assert_abs_diff_eq!(
            variance(&data.samples[0]),
            (-2.0 * r).exp() / 2.0,
            epsilon = 0.03
        );
        assert_abs_diff_eq!(
            variance(&data.samples[1]),
            (2.0 * r).exp() / 2.0,
            epsilon = 0.06
        );
    }

    #[test]
    fn squeezed_photon_marginal_has_node() {
        let v = squeezed_single_photon_fock(db_to_r(2.0).unwrap(), 30).unwrap();
        let rho = FockDensityMatrix::from_pure(&v).unwrap();
        let p = quadrature_distribution(&rho, 0.0, &[0.0, 0.5]);
        assert!(p[0].abs() < 1e-14 && p[1] > 0.1);
    }

    #[test]
    fn synthesis_is_deterministic() {
        let rho = vacuum(3);
        let a = synthesize_homodyne(&rho, &default_phases(2), 50, 9).unwrap();
        let b = synthesize_homodyne(&rho, &default_phases(2), 50, 9).unwrap();
        let c = synthesize_homodyne(&rho, &default_phases(2), 50, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a.samples[0], a.samples[1]);
    }

    #[test]
    fn dataset_csv_round_trip() {
        let data = synthesize_homodyne(&vacuum(3), &default_phases(3), 4, 5).unwrap();
        let mut buf = Vec::new();
        data.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.lines().nth(1) == Some("phase_rad,x"));
        assert_eq!(TomographyDataset::read_csv(&buf[..]).unwrap(), data);
    }

    #[test]
    fn broken_density_is_detected() {
        let mut m = DMatrix::from_element(2, 2, C64::new(0.0, 0.0));
        m[(0, 0)] = C64::new(0.5, 0.0);
        m[(1, 1)] = C64::new(0.5, 0.0);
        m[(0, 1)] = C64::new(0.9, 0.0);
        m[(1, 0)] = C64::new(0.9, 0.0);
        assert!(FockDensityMatrix::new(m).is_err());
    }

    #[test]
    fn mle_recovers_vacuum() {
        let data = synthesize_homodyne(&vacuum(11), &default_phases(12), 5000, 11).unwrap();
        let res = mle_reconstruct(&data, &MleOptions::default()).unwrap();
        let target = SqueezedFockState {
            r_out: SqueezingParameter::VACUUM,
            n: 0,
        };
        assert!(fidelity(&res.rho, &target).unwrap() > 0.99);
        assert!(res.log_likelihood.windows(2).all(|w| w[1] >= w[0]));
        assert_abs_diff_eq!(res.rho.trace(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn mle_squeezed_photon_w00() {
        let v = squeezed_single_photon_fock(db_to_r(2.0).unwrap(), 30).unwrap();
        let rho = FockDensityMatrix::from_pure(&v).unwrap();
        let data = synthesize_homodyne(&rho, &default_phases(12), 5000, 21).unwrap();
        let res = mle_reconstruct(&data, &MleOptions::default()).unwrap();
        let grid = PhaseGrid::new(5.0, 101).unwrap();
        let truth = density_w00(&rho, &grid).unwrap();
        let rec = density_w00(&res.rho, &grid).unwrap();
        assert_abs_diff_eq!(rec, truth, epsilon = 0.02);
    }

    #[test]
    fn self_fit_recovers_squeezing() {
        let r = db_to_r(2.0).unwrap();
        let grid = PhaseGrid::new(5.0, 101).unwrap();
        let w = SqueezedFockState::single_photon(r).to_grid(&grid);
        assert_abs_diff_eq!(fit_output_squeezing(&w).unwrap().db(), 2.0, epsilon = 0.01);
        let v = squeezed_single_photon_fock(r, 30).unwrap();
        let rho = FockDensityMatrix::from_pure(&v).unwrap();
        assert_abs_diff_eq!(
            fit_output_squeezing_density(&rho).unwrap().db(),
            2.0,
            epsilon = 0.01
        );
    }

    #[test]
    fn vacuum_fit_is_flat() {
        assert_eq!(
            fit_output_squeezing_density(&vacuum(6)),
            Err(Error::FlatFit)
        );
    }

    #[test]
    fn fidelity_from_w00_cases() {
        assert_abs_diff_eq!(fidelity_from_w00(-1.0 / PI), 1.0, epsilon = 1e-15);
        assert_eq!(fidelity_from_w00(0.0), 0.5);
        assert!(fidelity_from_w00(-0.1) > fidelity_from_w00(-0.05));
    }

    #[test]
    fn calibration_cases() {
        assert_abs_diff_eq!(
            fit_calibration(&[(0.001, 1470.0)]).unwrap().c,
            1.47e6,
            epsilon = 1e-6
        );
        let c = fit_calibration(&[(0.002, 3000.0), (0.004, 6000.0)]).unwrap();
        assert_eq!(c.c, 1.5e6);
        assert_eq!(fit_calibration(&[]), Err(Error::Empty("calibration pairs")));
        assert!(fit_calibration(&[(0.0, 1.0)]).is_err());
    }
}
