//! Quality/rate trade-off of PS and GPS with an on/off detector.
//!
//! With `s = e^{r_out − r1 − r2}` the heralded origin value depends only on
//! `P_off` and `s + 1/s`, so for fixed target `(r_out, P_on)` it is minimized
//! at `s = 1`, giving the GPS bound `W = −(1/π)(1 − P_on)/(1 + P_on)`. PS has
//! `r2 = 0` and cannot reach `s = 1` for `T < 1`.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::SqueezingParameter;
use crate::heralding::{
    herald_onoff, input_sigma11, p_off, r_out_from, w_out_origin, Detector, HeraldSpec, LossBudget,
};
use crate::solve::{bisect, bisect_expanding, golden_section, logspace};

/// One sample of a quality/rate curve. `w00` is the heralded `W(0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub p_on: f64,
    pub w00: f64,
    pub r1: SqueezingParameter,
    pub r2: SqueezingParameter,
    pub t: f64,
    pub s: f64,
}

impl TradeoffPoint {
    /// Evaluates the lossless closed forms at `(r1, r2, T)`.
    pub fn lossless(r1: f64, r2: f64, t: f64) -> Result<Self> {
        let (sx, sp) = input_sigma11(r1, r2, t);
        let r_out = r_out_from(r1, r2, sx, sp);
        Ok(Self {
            p_on: 1.0 - p_off(sx, sp),
            w00: w_out_origin(sx, sp)?,
            r1: SqueezingParameter(r1),
            r2: SqueezingParameter(r2),
            t,
            s: (r_out - r1 - r2).exp(),
        })
    }

    pub fn r_out(&self) -> f64 {
        self.s.ln() + self.r1.r() + self.r2.r()
    }

    pub fn spec(&self, losses: LossBudget) -> Result<HeraldSpec> {
        HeraldSpec::new(self.r1, self.r2, self.t, Detector::OnOff, losses)
    }
}

/// A labelled curve ordered by `p_on`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCurve {
    pub label: String,
    pub points: Vec<TradeoffPoint>,
}

impl TradeoffCurve {
    pub fn new(label: impl Into<String>, mut points: Vec<TradeoffPoint>) -> Self {
        points.sort_by(|a, b| a.p_on.total_cmp(&b.p_on));
        Self {
            label: label.into(),
            points,
        }
    }

    /// CSV with header `p_on,w00,r1_db,r2_db,T,s`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["p_on", "w00", "r1_db", "r2_db", "T", "s"])?;
        for p in &self.points {
            wtr.write_record([
                p.p_on.to_string(),
                p.w00.to_string(),
                p.r1.db().to_string(),
                p.r2.db().to_string(),
                p.t.to_string(),
                p.s.to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Linear interpolation of `w00` at `p_on` (in log `p_on`); `None` outside
    /// the sampled range.
    pub fn w00_at(&self, p_on: f64) -> Option<f64> {
        let pts = &self.points;
        let k = pts
            .windows(2)
            .position(|w| w[0].p_on <= p_on && p_on <= w[1].p_on)?;
        let (a, b) = (&pts[k], &pts[k + 1]);
        let f = (p_on.ln() - a.p_on.ln()) / (b.p_on.ln() - a.p_on.ln());
        Some(a.w00 + f * (b.w00 - a.w00))
    }
}

/// A curve point that could not be produced.
#[derive(Debug, Clone, PartialEq)]
pub struct PointFailure {
    pub key: f64,
    pub error: Error,
}

/// Which input carries the stronger squeezing when solving for GPS
/// parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Branch {
    /// `r1` has the sign of `r_out` and `|r1| > |r_out|`.
    #[default]
    Primary,
    /// Roles of the two inputs swapped, `T → 1 − T`.
    Mirrored,
}

/// GPS generation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpsParams {
    pub r1: SqueezingParameter,
    pub r2: SqueezingParameter,
    pub t: f64,
}

/// Open interval of admissible `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SRange {
    pub lo: f64,
    pub hi: f64,
}

impl SRange {
    pub fn contains(&self, s: f64) -> bool {
        s > self.lo && s < self.hi
    }
}

fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::OutOfRange {
            name,
            value: p,
            range: "(0, 1)",
        });
    }
    Ok(())
}

/// Heralded `W(0, 0)` expressed through `P_off` and `s`.
pub fn w00_via_s(p_off: f64, s: f64) -> Result<f64> {
    check_probability("P_off", p_off)?;
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::OutOfRange {
            name: "s",
            value: s,
            range: "(0, inf)",
        });
    }
    let disc = p_off * p_off - 2.0 * p_off * (s + 1.0 / s) + 4.0;
    if disc <= 0.0 {
        return Err(Error::Infeasible(format!(
            "negative discriminant at s = {s}"
        )));
    }
    Ok((p_off / disc.sqrt() - p_off) / (PI * (1.0 - p_off)))
}

/// Range of `s` compatible with target `(r_c, P_c)` and `0 < T < 1`.
pub fn admissible_s_range(r_c: SqueezingParameter, p_c: f64) -> Result<SRange> {
    check_probability("P_c", p_c)?;
    let a = (1.0 / (1.0 - p_c)).acosh();
    let r = r_c.r();
    Ok(if r > 0.0 {
        SRange {
            lo: 0.0,
            hi: a.exp(),
        }
    } else if r < 0.0 {
        SRange {
            lo: (-a).exp(),
            hi: f64::INFINITY,
        }
    } else {
        SRange {
            lo: 0.0,
            hi: f64::INFINITY,
        }
    })
}

/// `cosh r1·cosh r2 − cosh r_c/(1 − P_c)` and the sign test
/// `(r1 − r_c)(r2 − r_c) < 0`.
pub fn constraint_residual(
    r1: SqueezingParameter,
    r2: SqueezingParameter,
    r_c: SqueezingParameter,
    p_c: f64,
) -> (f64, bool) {
    let (a, b, c) = (r1.r(), r2.r(), r_c.r());
    (
        a.cosh() * b.cosh() - c.cosh() / (1.0 - p_c),
        (a - c) * (b - c) < 0.0,
    )
}

/// Best achievable GPS quality at a given click probability.
pub fn best_tradeoff_w(p_on: f64) -> f64 {
    -(1.0 - p_on) / (PI * (1.0 + p_on))
}

/// Inverse of [`best_tradeoff_w`] for `−1/π < w < 1/π`.
pub fn best_tradeoff_p_on(w00: f64) -> Result<f64> {
    let a = -PI * w00;
    if !(a > 0.0 && a <= 1.0) {
        return Err(Error::Infeasible(format!(
            "W(0,0) = {w00} is not reachable on the GPS bound"
        )));
    }
    Ok((1.0 - a) / (1.0 + a))
}

/// Transmissivity that makes `(r1, r2, T)` produce `r_out`, by bisection on
/// the output-squeezing relation. Requires `r_out` strictly between `r2`
/// (reached at `T = 0`) and `r1` (at `T = 1`).
pub fn transmissivity_for(r1: f64, r2: f64, r_out: f64) -> Result<f64> {
    let f = |t: f64| {
        let (sx, sp) = input_sigma11(r1, r2, t);
        r_out_from(r1, r2, sx, sp) - r_out
    };
    let t = bisect(f, 0.0, 1.0)?;
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Infeasible(format!(
            "transmissivity {t} at the boundary"
        )));
    }
    Ok(t)
}

/// Solves `(r1, r2, T)` on the optimal `s = 1` family for target
/// `(r_out, P_on)`: `r1 + r2 = r_out` and
/// `cosh r1·cosh r2 = cosh r_out/(1 − P_on)`, root-found in `r1`, then `T`
/// from the output-squeezing relation.
pub fn solve_gps_params(r_out: SqueezingParameter, p_on: f64, branch: Branch) -> Result<GpsParams> {
    check_probability("P_on", p_on)
        .map_err(|_| Error::Infeasible(format!("P_on = {p_on} outside (0, 1)")))?;
    let ro = r_out.r();
    let target = ro.cosh() / (1.0 - p_on);
    let residual = |r1: f64| r1.cosh() * (ro - r1).cosh() - target;
    // residual < 0 at r1 = r_out and grows without bound away from r_out/2
    let dir = if ro >= 0.0 { 1.0 } else { -1.0 };
    let r1 = bisect_expanding(residual, ro, dir * 1e-3, ro + dir * 50.0)?;
    let r2 = ro - r1;
    let t = transmissivity_for(r1, r2, ro)?;
    let p = match branch {
        Branch::Primary => GpsParams {
            r1: SqueezingParameter(r1),
            r2: SqueezingParameter(r2),
            t,
        },
        Branch::Mirrored => GpsParams {
            r1: SqueezingParameter(r2),
            r2: SqueezingParameter(r1),
            t: 1.0 - t,
        },
    };
    Ok(p)
}

/// Parameters realizing target `(r_c, P_c)` at an arbitrary admissible `s`.
pub fn gps_params_for_s(r_c: SqueezingParameter, p_c: f64, s: f64) -> Result<GpsParams> {
    let range = admissible_s_range(r_c, p_c)?;
    if !range.contains(s) {
        return Err(Error::Infeasible(format!(
            "s = {s} outside admissible range"
        )));
    }
    let rc = r_c.r();
    let sum = rc - s.ln();
    let c = 2.0 * rc.cosh() / (1.0 - p_c) - sum.cosh();
    if c < 1.0 {
        return Err(Error::Infeasible(format!("no real r1 - r2 at s = {s}")));
    }
    let d = c.acosh();
    let (r1, r2) = (0.5 * (sum + d), 0.5 * (sum - d));
    let t = transmissivity_for(r1, r2, rc)?;
    Ok(GpsParams {
        r1: SqueezingParameter(r1),
        r2: SqueezingParameter(r2),
        t,
    })
}

/// Default click-probability sampling of GPS curves.
pub fn default_p_grid() -> Vec<f64> {
    logspace(1e-4, 0.5, 60)
}

/// Default transmissivity sampling of a PS curve: `R = 1 − T` log-spaced
/// from 1e-4 up to 90% of the largest reflectivity for which `r_out` is
/// reachable (`T > tanh|r_out|`).
pub fn default_ps_t_grid(r_out: SqueezingParameter) -> Vec<f64> {
    let r_max = 0.9 * (1.0 - r_out.r().abs().tanh());
    logspace(1e-4, r_max, 60)
        .into_iter()
        .map(|r| 1.0 - r)
        .collect()
}

/// PS input squeezing `r1` (with `r2 = 0`) that yields `r_out` at `T`.
/// Reachable only for `|r_out| < artanh T`.
pub fn ps_input_squeezing(r_out: SqueezingParameter, t: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::OutOfRange {
            name: "T",
            value: t,
            range: "(0, 1)",
        });
    }
    let ro = r_out.r();
    if ro.abs() >= t.atanh() {
        return Err(Error::Infeasible(format!(
            "r_out = {ro} not reachable by PS at T = {t}"
        )));
    }
    let f = |r1: f64| {
        let (sx, sp) = input_sigma11(r1, 0.0, t);
        r_out_from(r1, 0.0, sx, sp) - ro
    };
    let dir = if ro >= 0.0 { 1.0 } else { -1.0 };
    bisect_expanding(f, ro, dir * 1e-3, dir * 30.0)
}

pub fn ps_point(r_out: SqueezingParameter, t: f64) -> Result<TradeoffPoint> {
    let r1 = ps_input_squeezing(r_out, t)?;
    TradeoffPoint::lossless(r1, 0.0, t)
}

/// PS curve obtained by sweeping `T` at fixed `r_out`. Unreachable points are
/// returned separately.
pub fn ps_curve(r_out: SqueezingParameter, t_grid: &[f64]) -> (TradeoffCurve, Vec<PointFailure>) {
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for &t in t_grid {
        match ps_point(r_out, t) {
            Ok(p) => points.push(p),
            Err(error) => failures.push(PointFailure { key: t, error }),
        }
    }
    (
        TradeoffCurve::new(format!("PS {:.2} dB", r_out.db()), points),
        failures,
    )
}

/// PS point at `r_out` whose lossless `W(0, 0)` equals `w00`, by bisection
/// in `T` (quality improves monotonically as `T → 1`).
pub fn ps_point_at_w00(r_out: SqueezingParameter, w00: f64) -> Result<TradeoffPoint> {
    let th = r_out.r().abs().tanh();
    let lo = th + 1e-3 * (1.0 - th);
    let f = |t: f64| ps_point(r_out, t).map(|p| p.w00 - w00).unwrap_or(f64::NAN);
    let t = bisect(f, lo.max(1e-6), 1.0 - 1e-9)?;
    ps_point(r_out, t)
}

/// Lossless GPS point on the optimal family.
pub fn gps_point(r_out: SqueezingParameter, p_on: f64, branch: Branch) -> Result<TradeoffPoint> {
    let g = solve_gps_params(r_out, p_on, branch)?;
    TradeoffPoint::lossless(g.r1.r(), g.r2.r(), g.t)
}

/// The GPS best trade-off curve, with every point re-evaluated through the
/// forward closed forms rather than the bound itself.
pub fn gps_best_curve(
    r_out: SqueezingParameter,
    p_grid: &[f64],
) -> (TradeoffCurve, Vec<PointFailure>) {
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for &p in p_grid {
        match gps_point(r_out, p, Branch::Primary) {
            Ok(pt) => points.push(pt),
            Err(error) => failures.push(PointFailure { key: p, error }),
        }
    }
    (
        TradeoffCurve::new(format!("GPS {:.2} dB", r_out.db()), points),
        failures,
    )
}

/// Interval of `ln s` on which real `(r1, r2)` exist for target
/// `(r_c, P_c)`: `cosh(r_c − ln s) ≤ 2 cosh r_c/(1 − P_c) − 1`.
pub fn real_solution_log_s(r_c: SqueezingParameter, p_c: f64) -> Result<(f64, f64)> {
    check_probability("P_c", p_c)?;
    let rc = r_c.r();
    let a = (2.0 * rc.cosh() / (1.0 - p_c) - 1.0).acosh();
    Ok((rc - a, rc + a))
}

/// Numerically minimizes `W(0, 0)` over the admissible `s` range by
/// golden-section search in `ln s`, then maps the minimizer back to
/// parameters. The search interval is the admissible range intersected with
/// the real-solution interval. Fails if the minimizer sits on its boundary.
pub fn gps_numeric_best(r_c: SqueezingParameter, p_c: f64) -> Result<TradeoffPoint> {
    let range = admissible_s_range(r_c, p_c)?;
    let (real_lo, real_hi) = real_solution_log_s(r_c, p_c)?;
    let eps = 1e-9;
    let lo = if range.lo > 0.0 {
        range.lo.ln().max(real_lo)
    } else {
        real_lo
    } + eps;
    let hi = if range.hi.is_finite() {
        range.hi.ln().min(real_hi)
    } else {
        real_hi
    } - eps;
    let p_off = 1.0 - p_c;
    let objective = |u: f64| w00_via_s(p_off, u.exp()).unwrap_or(f64::INFINITY);
    let (u, w) = golden_section(objective, lo, hi, 1e-10);
    if (u - lo).abs() < 1e-6 || (hi - u).abs() < 1e-6 {
        return Err(Error::BoundaryHit(u.exp()));
    }
    let s = u.exp();
    let g = gps_params_for_s(r_c, p_c, s)?;
    Ok(TradeoffPoint {
        p_on: p_c,
        w00: w,
        r1: g.r1,
        r2: g.r2,
        t: g.t,
        s,
    })
}

/// Re-evaluates every parameter triple of `base` under `losses`: `p_on` is
/// the lossy click probability and `w00` the lossy heralded `W(0, 0)`.
pub fn lossy_tradeoff_curve(base: &TradeoffCurve, losses: LossBudget) -> Result<TradeoffCurve> {
    losses.validate()?;
    let points = base
        .points
        .iter()
        .map(|pt| {
            let out = herald_onoff(&pt.spec(losses)?)?;
            Ok(TradeoffPoint {
                p_on: out.p_on,
                w00: out.mixture.evaluate(0.0, 0.0),
                ..*pt
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TradeoffCurve::new(
        format!("{} (lossy)", base.label),
        points,
    ))
}

/// Sweeps `s` across the admissible range at lossless target
/// `(r_c, P_c)` and returns the triple with the lowest lossy `W(0, 0)`.
pub fn reoptimize_lossy(
    r_c: SqueezingParameter,
    p_c: f64,
    losses: LossBudget,
    samples: usize,
) -> Result<TradeoffPoint> {
    let range = admissible_s_range(r_c, p_c)?;
    let lo = if range.lo > 0.0 { range.lo.ln() } else { -3.0 };
    let hi = if range.hi.is_finite() {
        range.hi.ln()
    } else {
        3.0
    };
    let mut best: Option<TradeoffPoint> = None;
    for k in 1..samples.max(2) {
        let u = lo + (hi - lo) * k as f64 / samples.max(2) as f64;
        let Ok(g) = gps_params_for_s(r_c, p_c, u.exp()) else {
            continue;
        };
        let spec = HeraldSpec::new(g.r1, g.r2, g.t, Detector::OnOff, losses)?;
        let Ok(out) = herald_onoff(&spec) else {
            continue;
        };
        let pt = TradeoffPoint {
            p_on: out.p_on,
            w00: out.mixture.evaluate(0.0, 0.0),
            r1: g.r1,
            r2: g.r2,
            t: g.t,
            s: u.exp(),
        };
        if best.is_none_or(|b| pt.w00 < b.w00) {
            best = Some(pt);
        }
    }
    best.ok_or_else(|| Error::Infeasible("no admissible s produced a herald".into()))
}
