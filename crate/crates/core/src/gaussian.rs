//! Two-mode zero-mean Gaussian states described by covariance matrices.
//!
//! Quadratures are ordered `(x1, x2, p1, p2)` with ħ = 1, so the vacuum has
//! variance 1/2 in every quadrature. Mode 1 is the trigger arm that feeds the
//! detector and mode 2 is the signal arm that carries the heralded state.

use std::f64::consts::{LN_10, PI};

use nalgebra::{Matrix2, Matrix4, SymmetricEigen, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};

/// Tolerance for structural identities (symmetry, σxσp = I/4, ...).
pub const STRUCTURAL_TOL: f64 = 1e-12;

/// Natural-log squeezing parameter. Positive `r` squeezes the x quadrature.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SqueezingParameter(pub f64);

impl SqueezingParameter {
    pub const VACUUM: Self = Self(0.0);

    pub fn new(r: f64) -> Result<Self> {
        if !r.is_finite() {
            return Err(Error::NonFinite("r"));
        }
        Ok(Self(r))
    }

    pub fn from_db(db: f64) -> Result<Self> {
        db_to_r(db)
    }

    #[inline]
    pub fn r(self) -> f64 {
        self.0
    }

    /// Level of `e^{-2r}` in decibels, `20 r / ln 10`.
    #[inline]
    pub fn db(self) -> f64 {
        20.0 * self.0 / LN_10
    }
}

/// Converts a squeezing level in dB to the squeezing parameter `r`.
/// Negative levels are antisqueezing along x.
pub fn db_to_r(db: f64) -> Result<SqueezingParameter> {
    if !db.is_finite() {
        return Err(Error::NonFinite("dB level"));
    }
    Ok(SqueezingParameter(db * LN_10 / 20.0))
}

/// Which arm of the beam splitter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Mode 1, routed to the photon detector.
    Trigger,
    /// Mode 2, where the heralded state appears.
    Signal,
}

impl Mode {
    #[inline]
    fn index(self) -> usize {
        match self {
            Mode::Trigger => 0,
            Mode::Signal => 1,
        }
    }
}

/// 4×4 covariance matrix in `(x1, x2, p1, p2)` ordering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeCovariance(Matrix4<f64>);

impl TwoModeCovariance {
    /// Wraps a matrix after checking symmetry and positive definiteness.
    pub fn new(m: Matrix4<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("covariance"));
        }
        let asym = (m - m.transpose()).amax();
        if asym > 1e-10 * m.amax().max(1.0) {
            return Err(Error::SingularCovariance);
        }
        let eig = SymmetricEigen::new(m).eigenvalues;
        if eig.iter().any(|&e| e <= 0.0) {
            return Err(Error::SingularCovariance);
        }
        Ok(Self(m))
    }

    pub fn vacuum() -> Self {
        Self(Matrix4::identity() * 0.5)
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    /// Symplectic eigenvalues, ascending. Physical states have both ≥ 1/2.
    pub fn symplectic_eigenvalues(&self) -> [f64; 2] {
        let omega = symplectic_form();
        let half = matrix_sqrt(&self.0);
        let m = half * omega * self.0 * omega.transpose() * half;
        let mut ev: Vec<f64> = SymmetricEigen::new(m)
            .eigenvalues
            .iter()
            .map(|v| v.max(0.0).sqrt())
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        // eigenvalues come in degenerate pairs
        [0.5 * (ev[0] + ev[1]), 0.5 * (ev[2] + ev[3])]
    }

    /// True when the uncertainty bound `V + iΩ/2 ≥ 0` holds within `tol`.
    pub fn is_physical(&self, tol: f64) -> bool {
        self.symplectic_eigenvalues()[0] >= 0.5 - tol
    }

    /// Marginal covariance `diag(var x, var p)` of one mode, plus the x-p
    /// covariance within that mode.
    pub fn single_mode(&self, mode: Mode) -> Matrix2<f64> {
        let i = mode.index();
        let m = &self.0;
        Matrix2::new(m[(i, i)], m[(i, i + 2)], m[(i + 2, i)], m[(i + 2, i + 2)])
    }
}

/// The 2×2 x-block and p-block of a covariance without x-p correlations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaBlocks {
    pub sigma_x: Matrix2<f64>,
    pub sigma_p: Matrix2<f64>,
}

impl SigmaBlocks {
    /// `σx·σp`, which equals `I/4` for pure lossless propagation.
    pub fn product(&self) -> Matrix2<f64> {
        self.sigma_x * self.sigma_p
    }

    pub fn to_covariance(&self) -> Result<TwoModeCovariance> {
        let mut m = Matrix4::zeros();
        m.fixed_view_mut::<2, 2>(0, 0).copy_from(&self.sigma_x);
        m.fixed_view_mut::<2, 2>(2, 2).copy_from(&self.sigma_p);
        TwoModeCovariance::new(m)
    }
}

/// Symplectic form for `(x1, x2, p1, p2)` ordering.
pub fn symplectic_form() -> Matrix4<f64> {
    let mut o = Matrix4::zeros();
    o[(0, 2)] = 1.0;
    o[(1, 3)] = 1.0;
    o[(2, 0)] = -1.0;
    o[(3, 1)] = -1.0;
    o
}

fn matrix_sqrt(m: &Matrix4<f64>) -> Matrix4<f64> {
    let eig = SymmetricEigen::new(*m);
    let d = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    eig.eigenvectors * Matrix4::from_diagonal(&d) * eig.eigenvectors.transpose()
}

/// Covariance of two independent squeezed vacua:
/// `diag(e^{-2r1}/2, e^{-2r2}/2, e^{2r1}/2, e^{2r2}/2)`.
pub fn input_covariance(r1: SqueezingParameter, r2: SqueezingParameter) -> TwoModeCovariance {
    let (a, b) = (r1.r(), r2.r());
    TwoModeCovariance(Matrix4::from_diagonal(&Vector4::new(
        0.5 * (-2.0 * a).exp(),
        0.5 * (-2.0 * b).exp(),
        0.5 * (2.0 * a).exp(),
        0.5 * (2.0 * b).exp(),
    )))
}

/// The 2×2 beam-splitter block `[[√R, √T], [−√T, √R]]`, `R = 1 − T`.
pub fn beamsplitter_block(t: f64) -> Result<Matrix2<f64>> {
    check_unit("T", t)?;
    let (st, sr) = (t.sqrt(), (1.0 - t).sqrt());
    Ok(Matrix2::new(sr, st, -st, sr))
}

/// Block-diagonal 4×4 beam-splitter transform acting identically on x and p.
pub fn beamsplitter_matrix(t: f64) -> Result<Matrix4<f64>> {
    let b = beamsplitter_block(t)?;
    let mut u = Matrix4::zeros();
    u.fixed_view_mut::<2, 2>(0, 0).copy_from(&b);
    u.fixed_view_mut::<2, 2>(2, 2).copy_from(&b);
    Ok(u)
}

/// `U V Uᵀ`. The result is re-symmetrized to remove rounding asymmetry.
pub fn propagate(v0: &TwoModeCovariance, u: &Matrix4<f64>) -> TwoModeCovariance {
    let m = u * v0.0 * u.transpose();
    TwoModeCovariance(0.5 * (m + m.transpose()))
}

/// Splits a covariance into its x- and p-blocks. Fails when x-p cross
/// covariances exceed `STRUCTURAL_TOL` relative to the matrix scale.
pub fn sigma_blocks(v: &TwoModeCovariance) -> Result<SigmaBlocks> {
    let m = &v.0;
    let cross = m.fixed_view::<2, 2>(0, 2).amax();
    if cross > STRUCTURAL_TOL * m.amax().max(1.0) {
        return Err(Error::CrossCovariance(cross));
    }
    Ok(SigmaBlocks {
        sigma_x: m.fixed_view::<2, 2>(0, 0).into_owned(),
        sigma_p: m.fixed_view::<2, 2>(2, 2).into_owned(),
    })
}

/// Two-mode Wigner function `(1/π²)·exp(−qᵀV⁻¹q/2)`.
///
/// The `1/π²` prefactor is only correct for pure states (`det V = 1/16`);
/// for general `V` the normalized prefactor `1/(4π²√det V)` is used, which
/// reduces to `1/π²` in the pure case.
pub fn gaussian_wigner(v: &TwoModeCovariance, q: &Vector4<f64>) -> Result<f64> {
    let det = v.0.determinant();
    if det <= 0.0 {
        return Err(Error::SingularCovariance);
    }
    let inv = v.0.try_inverse().ok_or(Error::SingularCovariance)?;
    let quad = q.dot(&(inv * q));
    Ok((-0.5 * quad).exp() / (4.0 * PI * PI * det.sqrt()))
}

/// Pure-loss channel on one mode: the beam-splitter-to-vacuum model.
///
/// Variances of the chosen mode map as `v → (1−ℓ)v + ℓ/2`; its covariances
/// with the other mode scale by `√(1−ℓ)`.
pub fn loss_channel(v: &TwoModeCovariance, mode: Mode, loss: f64) -> Result<TwoModeCovariance> {
    check_unit("loss", loss)?;
    let eta = 1.0 - loss;
    let i = mode.index();
    let mut scale = Vector4::repeat(1.0);
    scale[i] = eta.sqrt();
    scale[i + 2] = eta.sqrt();
    let mut m = Matrix4::from_fn(|r, c| v.0[(r, c)] * scale[r] * scale[c]);
    m[(i, i)] += 0.5 * loss;
    m[(i + 2, i + 2)] += 0.5 * loss;
    Ok(TwoModeCovariance(m))
}
