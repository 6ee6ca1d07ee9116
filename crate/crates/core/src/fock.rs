//! Brute-force cross-check in a truncated photon-number basis.
//!
//! Two-mode states are kept as weighted ensembles of pure vectors indexed
//! `n1·(N+1) + n2` (mode 1 is the trigger). The beam splitter is lifted to
//! each fixed-total-photon block as `exp(θG)` with `G = a1†a2 − a1a2†` and
//! `θ = arcsin √T`, so that `a1 → √R a1 + √T a2`, `a2 → −√T a1 + √R a2`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{Complex, DMatrix, DVector, Matrix4, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};
use crate::gaussian::{Mode, SqueezingParameter};
use crate::grid::{PhaseGrid, WignerGrid};
use crate::heralding::{Detector, LossBudget, SqueezedFockState};
use crate::special::{ln_factorials, wigner_from_elements};

pub type C64 = Complex<f64>;

/// Default photon-number cutoff per mode.
pub const DEFAULT_TRUNCATION: usize = 40;

/// Largest tolerated norm lost to truncation.
pub const MAX_NORM_DEFICIT: f64 = 1e-8;

const HERMITIAN_TOL: f64 = 1e-10;
const MIN_HERALD: f64 = 1e-14;
const WIGNER_EDGE_TOL: f64 = 1e-6;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn check_deficit(norm_sq: f64) -> Result<()> {
    let deficit = 1.0 - norm_sq;
    if deficit > MAX_NORM_DEFICIT {
        return Err(Error::Truncation(deficit));
    }
    Ok(())
}

/// Fock amplitudes of `S(r)|0⟩` up to `n_trunc` photons.
pub fn squeezed_vacuum_fock(r: SqueezingParameter, n_trunc: usize) -> Result<DVector<C64>> {
    let r = r.r();
    let th = -r.tanh();
    let mut v = DVector::from_element(n_trunc + 1, c(0.0));
    // c_{2m} = (cosh r)^{-1/2} (−tanh r)^m √((2m)!)/(2^m m!)
    let mut amp = 1.0 / r.cosh().sqrt();
    let mut m = 0;
    while 2 * m <= n_trunc {
        v[2 * m] = c(amp);
        let mf = (m + 1) as f64;
        amp *= th * ((2.0 * mf - 1.0) * (2.0 * mf)).sqrt() / (2.0 * mf);
        m += 1;
    }
    check_deficit(v.norm_squared())?;
    Ok(v)
}

/// Fock amplitudes of `S(r)|1⟩` up to `n_trunc` photons.
pub fn squeezed_single_photon_fock(r: SqueezingParameter, n_trunc: usize) -> Result<DVector<C64>> {
    let r = r.r();
    let th = -r.tanh();
    let mut v = DVector::from_element(n_trunc + 1, c(0.0));
    // c_{2m+1} = (−tanh r)^m √((2m+1)!)/(2^m m! cosh^{3/2} r)
    let mut amp = r.cosh().powf(-1.5);
    let mut m = 0;
    while 2 * m < n_trunc {
        v[2 * m + 1] = c(amp);
        let mf = (m + 1) as f64;
        amp *= th * ((2.0 * mf) * (2.0 * mf + 1.0)).sqrt() / (2.0 * mf);
        m += 1;
    }
    check_deficit(v.norm_squared())?;
    Ok(v)
}

/// `S(r)|n⟩` for `n ∈ {0, 1}`.
pub fn squeezed_fock_vector(target: &SqueezedFockState, n_trunc: usize) -> Result<DVector<C64>> {
    match target.n {
        0 => squeezed_vacuum_fock(target.r_out, n_trunc),
        1 => squeezed_single_photon_fock(target.r_out, n_trunc),
        n => Err(Error::OutOfRange {
            name: "target photon number",
            value: n as f64,
            range: "{0, 1}",
        }),
    }
}

/// Beam-splitter unitary as its fixed-total-photon blocks. Block `n` acts on
/// `|k, n−k⟩`, `k = 0..=n`.
#[derive(Debug, Clone)]
pub struct BeamSplitterFock {
    pub t: f64,
    pub n_trunc: usize,
    blocks: Vec<DMatrix<f64>>,
}

type BsCache = Mutex<HashMap<(u64, usize), Arc<BeamSplitterFock>>>;

impl BeamSplitterFock {
    /// Builds all blocks with total photon number up to `2·n_trunc`.
    pub fn new(t: f64, n_trunc: usize) -> Result<Self> {
        check_unit("T", t)?;
        let theta = t.sqrt().asin();
        let blocks = (0..=2 * n_trunc)
            .into_par_iter()
            .map(|n| {
                let mut g = DMatrix::<f64>::zeros(n + 1, n + 1);
                for k in 0..n {
                    // a1†a2 |k, n−k⟩ = √((k+1)(n−k)) |k+1, n−k−1⟩
                    let v = (((k + 1) * (n - k)) as f64).sqrt();
                    g[(k + 1, k)] = v;
                    g[(k, k + 1)] = -v;
                }
                (g * theta).exp()
            })
            .collect();
        Ok(Self { t, n_trunc, blocks })
    }

    /// Shared instance keyed by `(T, N)`.
    pub fn cached(t: f64, n_trunc: usize) -> Result<Arc<Self>> {
        static CACHE: OnceLock<BsCache> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        let key = (t.to_bits(), n_trunc);
        if let Some(bs) = cache.lock().expect("cache poisoned").get(&key) {
            return Ok(bs.clone());
        }
        let bs = Arc::new(Self::new(t, n_trunc)?);
        cache
            .lock()
            .expect("cache poisoned")
            .insert(key, bs.clone());
        Ok(bs)
    }

    pub fn block(&self, total: usize) -> &DMatrix<f64> {
        &self.blocks[total]
    }

    /// Largest deviation of `UᵀU` from the identity over all blocks.
    pub fn unitarity_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let n = b.nrows();
                (b.transpose() * b - DMatrix::identity(n, n)).amax()
            })
            .fold(0.0, f64::max)
    }

    /// Applies the unitary to a pure two-mode vector; output components with
    /// more than `n_trunc` photons in either mode are dropped.
    pub fn apply(&self, psi: &DVector<C64>) -> DVector<C64> {
        let d = self.n_trunc + 1;
        let mut out = DVector::from_element(d * d, c(0.0));
        for (n, u) in self.blocks.iter().enumerate() {
            let ks = n.saturating_sub(self.n_trunc)..=n.min(self.n_trunc);
            let mut v = vec![c(0.0); n + 1];
            let mut any = false;
            for k in ks.clone() {
                v[k] = psi[k * d + (n - k)];
                any |= v[k] != c(0.0);
            }
            if !any {
                continue;
            }
            for i in ks.clone() {
                let mut acc = c(0.0);
                for k in ks.clone() {
                    acc += v[k] * u[(i, k)];
                }
                out[i * d + (n - i)] = acc;
            }
        }
        out
    }
}

/// Density operator on two truncated modes as `Σ w_i |ψ_i⟩⟨ψ_i|`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    pub n_trunc: usize,
    pub ensemble: Vec<(f64, DVector<C64>)>,
}

/// Single-mode quadrature operators in the truncated basis.
fn quadrature_ops(d: usize) -> (DMatrix<C64>, DMatrix<C64>) {
    let mut x = DMatrix::from_element(d, d, c(0.0));
    let mut p = DMatrix::from_element(d, d, c(0.0));
    for n in 1..d {
        let s = (n as f64 / 2.0).sqrt();
        x[(n - 1, n)] = c(s);
        x[(n, n - 1)] = c(s);
        p[(n - 1, n)] = C64::new(0.0, -s);
        p[(n, n - 1)] = C64::new(0.0, s);
    }
    (x, p)
}

/// `√C(m, k)·η^{(m−k)/2}·ℓ^{k/2}`, the loss Kraus coefficient for `|m⟩ → |m−k⟩`.
fn kraus_coeff(lnf: &[f64], m: usize, k: usize, eta: f64, loss: f64) -> f64 {
    if k > m {
        return 0.0;
    }
    let ln_binom = lnf[m] - lnf[k] - lnf[m - k];
    let pow = |b: f64, e: usize| if e == 0 { 1.0 } else { b.powi(e as i32) };
    (0.5 * ln_binom).exp() * pow(eta, m - k).sqrt() * pow(loss, k).sqrt()
}

impl TwoModeState {
    /// `|a⟩ ⊗ |b⟩`.
    pub fn product(a: &DVector<C64>, b: &DVector<C64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::Dimension(format!("{} vs {}", a.len(), b.len())));
        }
        let d = a.len();
        let psi = DVector::from_fn(d * d, |i, _| a[i / d] * b[i % d]);
        Ok(Self {
            n_trunc: d - 1,
            ensemble: vec![(1.0, psi)],
        })
    }

    /// Two squeezed vacua through the beam splitter.
    pub fn squeezed_inputs(
        r1: SqueezingParameter,
        r2: SqueezingParameter,
        t: f64,
        n_trunc: usize,
    ) -> Result<Self> {
        let a = squeezed_vacuum_fock(r1, n_trunc)?;
        let b = squeezed_vacuum_fock(r2, n_trunc)?;
        let state = Self::product(&a, &b)?.beamsplitter(&*BeamSplitterFock::cached(t, n_trunc)?)?;
        check_deficit(state.trace())?;
        Ok(state)
    }

    fn dim(&self) -> usize {
        self.n_trunc + 1
    }

    pub fn trace(&self) -> f64 {
        self.ensemble
            .iter()
            .map(|(w, v)| w * v.norm_squared())
            .sum()
    }

    pub fn beamsplitter(&self, bs: &BeamSplitterFock) -> Result<Self> {
        if bs.n_trunc != self.n_trunc {
            return Err(Error::Dimension("beam splitter truncation differs".into()));
        }
        Ok(Self {
            n_trunc: self.n_trunc,
            ensemble: self
                .ensemble
                .iter()
                .map(|(w, v)| (*w, bs.apply(v)))
                .collect(),
        })
    }

    /// Loss channel on one mode via its Kraus operators.
    pub fn apply_loss(&self, mode: Mode, loss: f64) -> Result<Self> {
        check_unit("loss", loss)?;
        if loss == 0.0 {
            return Ok(self.clone());
        }
        let d = self.dim();
        let lnf = ln_factorials(d);
        let eta = 1.0 - loss;
        let mut ensemble = Vec::new();
        for (w, psi) in &self.ensemble {
            for k in 0..d {
                let mut out = DVector::from_element(d * d, c(0.0));
                for m in k..d {
                    let a = kraus_coeff(&lnf, m, k, eta, loss);
                    for other in 0..d {
                        let (src, dst) = match mode {
                            Mode::Trigger => (m * d + other, (m - k) * d + other),
                            Mode::Signal => (other * d + m, other * d + (m - k)),
                        };
                        out[dst] += psi[src] * a;
                    }
                }
                if out.norm_squared() > 0.0 {
                    ensemble.push((*w, out));
                }
            }
        }
        Ok(Self {
            n_trunc: self.n_trunc,
            ensemble,
        })
    }

    /// `⟨A ⊗ B⟩`.
    fn expect(&self, a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
        let d = self.dim();
        self.ensemble
            .iter()
            .map(|(w, psi)| {
                let m = DMatrix::from_fn(d, d, |i, j| psi[i * d + j]);
                let am = a * &m * b.transpose();
                m.zip_map(&am, |x, y| x.conj() * y).sum() * *w
            })
            .sum()
    }

    /// Symmetrized quadrature covariance in `(x1, x2, p1, p2)` order, for
    /// zero-mean states.
    pub fn quadrature_covariance(&self) -> Matrix4<f64> {
        let d = self.dim();
        let (x, p) = quadrature_ops(d);
        let id = DMatrix::<C64>::identity(d, d);
        // (operator, mode index)
        let q = [(&x, 0), (&x, 1), (&p, 0), (&p, 1)];
        let mut v = Matrix4::zeros();
        for i in 0..4 {
            for j in i..4 {
                let (qi, mi) = q[i];
                let (qj, mj) = q[j];
                let val = if mi == mj {
                    let sym = (qi * qj + qj * qi) * c(0.5);
                    if mi == 0 {
                        self.expect(&sym, &id)
                    } else {
                        self.expect(&id, &sym)
                    }
                } else if mi == 0 {
                    self.expect(qi, qj)
                } else {
                    self.expect(qj, qi)
                };
                v[(i, j)] = val.re;
                v[(j, i)] = val.re;
            }
        }
        v
    }

    /// Unnormalized signal operator `Σ_{n1 ∈ keep} ⟨n1|ρ|n1⟩`.
    fn signal_block<F: Fn(usize) -> bool>(&self, keep: F) -> DMatrix<C64> {
        let d = self.dim();
        let mut rho = DMatrix::from_element(d, d, c(0.0));
        for (w, psi) in &self.ensemble {
            for n1 in (0..d).filter(|&n| keep(n)) {
                let row = psi.rows(n1 * d, d);
                rho += (row * row.adjoint()) * c(*w);
            }
        }
        rho
    }

    /// Photon-number distribution of the trigger mode.
    pub fn trigger_distribution(&self) -> Vec<f64> {
        let d = self.dim();
        let mut probs = vec![0.0; d];
        for (w, psi) in &self.ensemble {
            for (n1, pr) in probs.iter_mut().enumerate() {
                *pr += w * psi.rows(n1 * d, d).norm_squared();
            }
        }
        probs
    }
}

/// Single-mode density matrix in the truncated Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockDensityMatrix {
    matrix: DMatrix<C64>,
}

#[derive(Serialize, Deserialize)]
struct DensityJson {
    dim: usize,
    entries: Vec<[f64; 2]>,
}

impl FockDensityMatrix {
    /// Validates Hermiticity, positivity (eigenvalues ≥ −1e-10) and
    /// `0 < tr ≤ 1`.
    pub fn new(matrix: DMatrix<C64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::InvalidDensity(
                "not a non-empty square matrix".into(),
            ));
        }
        let herm = (&matrix - matrix.adjoint()).camax();
        if herm > HERMITIAN_TOL {
            return Err(Error::InvalidDensity(format!("not Hermitian ({herm:.3e})")));
        }
        let tr = matrix.trace().re;
        if !(tr > 0.0 && tr <= 1.0 + HERMITIAN_TOL) {
            return Err(Error::InvalidDensity(format!("trace {tr}")));
        }
        let sym = (&matrix + matrix.adjoint()) * c(0.5);
        let min_eig = SymmetricEigen::new(sym.clone()).eigenvalues.min();
        if min_eig < -HERMITIAN_TOL {
            return Err(Error::InvalidDensity(format!("eigenvalue {min_eig:.3e}")));
        }
        Ok(Self { matrix: sym })
    }

    pub fn from_pure(psi: &DVector<C64>) -> Result<Self> {
        Self::new(psi * psi.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn normalized(&self) -> Self {
        Self {
            matrix: &self.matrix / c(self.trace()),
        }
    }

    pub fn photon_distribution(&self) -> Vec<f64> {
        (0..self.dim()).map(|n| self.matrix[(n, n)].re).collect()
    }

    /// Largest `|ρ_mn|` with `m + n` odd.
    pub fn parity_leak(&self) -> f64 {
        let d = self.dim();
        let mut m: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                if (i + j) % 2 == 1 {
                    m = m.max(self.matrix[(i, j)].norm());
                }
            }
        }
        m
    }

    /// Loss channel via Kraus operators; trace preserving.
    pub fn apply_loss(&self, loss: f64) -> Result<Self> {
        check_unit("loss", loss)?;
        if loss == 0.0 {
            return Ok(self.clone());
        }
        let d = self.dim();
        let lnf = ln_factorials(d);
        let eta = 1.0 - loss;
        let mut out = DMatrix::from_element(d, d, c(0.0));
        for k in 0..d {
            for m in k..d {
                let am = kraus_coeff(&lnf, m, k, eta, loss);
                for n in k..d {
                    let an = kraus_coeff(&lnf, n, k, eta, loss);
                    out[(m - k, n - k)] += self.matrix[(m, n)] * (am * an);
                }
            }
        }
        Ok(Self { matrix: out })
    }

    /// `(1 − f)·self + f·other`.
    pub fn mix(&self, other: &Self, f: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension("density matrices differ in size".into()));
        }
        Ok(Self {
            matrix: &self.matrix * c(1.0 - f) + &other.matrix * c(f),
        })
    }

    /// `W(x, p) = Σ ρ_mn W_mn(x, p)`.
    pub fn wigner(&self, x: f64, p: f64) -> f64 {
        let d = self.dim();
        let lnf = ln_factorials(d);
        self.wigner_with(&lnf, x, p)
    }

    fn wigner_with(&self, lnf: &[f64], x: f64, p: f64) -> f64 {
        let m = &self.matrix;
        wigner_from_elements(
            self.dim(),
            |i, j| {
                let e = m[(i, j)];
                (e.re, e.im)
            },
            lnf,
            x,
            p,
        )
    }

    /// Row-major `[re, im]` pairs.
    pub fn to_json(&self) -> Result<String> {
        let d = self.dim();
        let entries = (0..d * d)
            .map(|k| {
                let e = self.matrix[(k / d, k % d)];
                [e.re, e.im]
            })
            .collect();
        Ok(serde_json::to_string(&DensityJson { dim: d, entries })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: DensityJson = serde_json::from_str(s)?;
        if j.entries.len() != j.dim * j.dim {
            return Err(Error::Dimension("entry count does not match dim".into()));
        }
        let m = DMatrix::from_fn(j.dim, j.dim, |i, k| {
            let [re, im] = j.entries[i * j.dim + k];
            C64::new(re, im)
        });
        Self::new(m)
    }
}

/// Relative probabilities `P'_n` of `n` trigger photons given a click,
/// `probs[n − 1]` for `n ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonNumberDistribution {
    pub probs: Vec<f64>,
}

impl PhotonNumberDistribution {
    pub fn get(&self, n: usize) -> f64 {
        if n == 0 {
            return 0.0;
        }
        self.probs.get(n - 1).copied().unwrap_or(0.0)
    }

    /// `Σ_{n ≥ 1} P'_{2n−1}`.
    pub fn odd_weight(&self) -> f64 {
        self.probs.iter().step_by(2).sum()
    }
}

/// Heralded signal state and the genuine herald probability. Trigger loss is
/// applied before projection, signal loss to the heralded state, and fake
/// triggers admix the unconditioned signal state.
pub fn herald_fock(
    state: &TwoModeState,
    detector: Detector,
    losses: LossBudget,
) -> Result<(FockDensityMatrix, f64)> {
    losses.validate()?;
    let lossy = state.apply_loss(Mode::Trigger, losses.trigger)?;
    let total = lossy.trace();
    let block = match detector {
        Detector::OnOff => lossy.signal_block(|n| n >= 1),
        Detector::Pnrd(k) => lossy.signal_block(|n| n == k),
    };
    let prob = block.trace().re / total;
    if prob <= MIN_HERALD {
        return Err(Error::DegenerateHerald);
    }
    let heralded =
        FockDensityMatrix::new(&block / c(block.trace().re))?.apply_loss(losses.signal)?;
    let f = losses.fake_trigger_fraction;
    if f == 0.0 {
        return Ok((heralded, prob));
    }
    let reduced = lossy.signal_block(|_| true);
    let reduced = FockDensityMatrix::new(&reduced / c(total))?.apply_loss(losses.signal)?;
    Ok((heralded.mix(&reduced, f)?, prob))
}

/// Samples the Wigner function of a trace-normalized `rho` on `grid`. Fails
/// if the function has not decayed at the grid edge.
pub fn wigner_from_density(rho: &FockDensityMatrix, grid: &PhaseGrid) -> Result<WignerGrid> {
    let tr = rho.trace();
    if (tr - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidDensity(format!("trace {tr} is not 1")));
    }
    let lnf = ln_factorials(rho.dim());
    let w = grid.sample(|x, p| rho.wigner_with(&lnf, x, p));
    let edge = w.boundary_max_abs();
    if edge > WIGNER_EDGE_TOL {
        return Err(Error::WignerTruncation(edge));
    }
    Ok(w)
}

/// `P'_n` of the trigger after trigger loss.
pub fn trigger_photon_distribution(
    state: &TwoModeState,
    trigger_loss: f64,
) -> Result<PhotonNumberDistribution> {
    let lossy = state.apply_loss(Mode::Trigger, trigger_loss)?;
    let all = lossy.trigger_distribution();
    let p_on: f64 = all[1..].iter().sum();
    if p_on <= MIN_HERALD {
        return Err(Error::DegenerateHerald);
    }
    Ok(PhotonNumberDistribution {
        probs: all[1..].iter().map(|p| p / p_on).collect(),
    })
}

/// `⟨ψ|ρ|ψ⟩` with `ψ = S(r)|n⟩`.
pub fn fidelity(rho: &FockDensityMatrix, target: &SqueezedFockState) -> Result<f64> {
    // the target is built at full cutoff so a small `rho` does not trip the
    // truncation check; only its leading components enter the overlap
    let full = squeezed_fock_vector(target, (rho.dim() - 1).max(DEFAULT_TRUNCATION))?;
    let psi = full.rows(0, rho.dim());
    let f = (psi.adjoint() * rho.matrix() * psi)[(0, 0)].re;
    Ok(f.clamp(0.0, 1.0))
}
