use std::io::Write;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use heraldkit::experiment::{
    duty_corrected, evaluate_row, table_row, SweepSpec, CALIBRATION_2DB, CALIBRATION_4DB,
    TABLE_ROWS,
};
use heraldkit::fock::{fidelity, herald_fock, wigner_from_density, C64, DEFAULT_TRUNCATION};
use heraldkit::tomography::{
    default_phases, density_w00, fidelity_from_w00, fit_output_squeezing_density, mle_reconstruct,
    synthesize_homodyne,
};
use heraldkit::tradeoff::{
    best_tradeoff_p_on, default_p_grid, default_ps_t_grid, gps_best_curve, gps_point,
    lossy_tradeoff_curve, ps_curve, PointFailure,
};
use heraldkit::{
    db_to_r, herald_onoff, Branch, Detector, FockDensityMatrix, HeraldSpec, LossBudget, MleOptions,
    PhaseGrid, SqueezedFockState, TradeoffCurve, TwoModeState, WignerGrid,
};

use crate::output::{
    csv_with_header, table_bytes, tag, CliError, CliResult, Format, Provenance, Sink,
};
use crate::{OracleArgs, PlanArgs, SweepArgs, TablesArgs, TomoArgs, TradeoffArgs};

#[derive(Debug, Serialize)]
struct CurveRow {
    p_on: f64,
    w00: f64,
    r1_db: f64,
    r2_db: f64,
    #[serde(rename = "T")]
    t: f64,
    s: f64,
}

fn curve_rows(curve: &TradeoffCurve) -> Vec<CurveRow> {
    curve
        .points
        .iter()
        .map(|p| CurveRow {
            p_on: p.p_on,
            w00: p.w00,
            r1_db: p.r1.db(),
            r2_db: p.r2.db(),
            t: p.t,
            s: p.s,
        })
        .collect()
}

/// Lists a written file on stdout; a closed pipe is not an error.
fn announce(path: Option<std::path::PathBuf>) {
    if let Some(p) = path {
        let _ = writeln!(std::io::stdout(), "{}", p.display());
    }
}

fn warn_failures(what: &str, failures: &[PointFailure]) {
    for f in failures {
        eprintln!("warning: {what} at {}: {}", f.key, f.error);
    }
}

pub fn tradeoff(a: &TradeoffArgs, args: &[String]) -> CliResult {
    let prov = Provenance::new(args, None);
    let sink = Sink::dir(a.out.out.clone())?;
    let losses = if a.losses.any() {
        Some(a.losses.resolve(LossBudget::NONE)?)
    } else {
        None
    };
    let mut written = 0;
    let mut infeasible = Vec::new();
    for &db in &a.r_out_db {
        let r = match db_to_r(db) {
            Ok(r) => r,
            Err(e) => {
                infeasible.push(format!("r_out = {db} dB: {e}"));
                continue;
            }
        };
        let (ps, ps_fail) = ps_curve(r, &default_ps_t_grid(r));
        warn_failures(&format!("PS {db} dB, T"), &ps_fail);
        let (gps, gps_fail) = gps_best_curve(r, &default_p_grid());
        warn_failures(&format!("GPS {db} dB, P_on"), &gps_fail);
        for (kind, curve) in [("ps", ps), ("gps", gps)] {
            if curve.points.is_empty() {
                infeasible.push(format!("{kind} curve at {db} dB has no feasible points"));
                continue;
            }
            let stem = format!("{kind}_{}dB", tag(db));
            let fmt = a.out.format;
            let bytes = table_bytes(&prov, fmt, "points", &curve_rows(&curve))?;
            announce(sink.emit(&format!("{stem}.{}", fmt.ext()), &bytes)?);
            if let Some(l) = losses {
                let lossy = lossy_tradeoff_curve(&curve, l)?;
                let bytes = table_bytes(&prov, fmt, "points", &curve_rows(&lossy))?;
                announce(sink.emit(&format!("{stem}_lossy.{}", fmt.ext()), &bytes)?);
            }
            written += 1;
        }
    }
    for m in &infeasible {
        eprintln!("infeasible: {m}");
    }
    if written == 0 {
        return Err(CliError::Infeasible(infeasible.join("; ")));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct SweepRow {
    #[serde(rename = "T")]
    t: f64,
    w00_lossless: Option<f64>,
    p_on_lossless: Option<f64>,
    w00_lossy: Option<f64>,
    p_on_lossy: Option<f64>,
    error: String,
}

fn grid_bytes(prov: &Provenance, w: &WignerGrid) -> CliResult<Vec<u8>> {
    csv_with_header(prov, |buf| Ok(w.write_csv(buf)?))
}

pub fn sweep(a: &SweepArgs, args: &[String]) -> CliResult {
    let prov = Provenance::new(args, None);
    let losses = a.losses.resolve(LossBudget::EXPERIMENTAL)?;
    let mut spec = SweepSpec::new(a.r1_db, a.r2_db, a.t_step, losses)?;
    if !a.t.is_empty() {
        if let Some(bad) = a.t.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(CliError::Usage(format!("T = {bad} outside of (0, 1)")));
        }
        let mut ts = a.t.clone();
        ts.sort_by(f64::total_cmp);
        ts.dedup();
        spec.t_values = ts;
    }
    spec.grid = a.grid.resolve(PhaseGrid::default())?;
    let sink = Sink::dir(a.out.out.clone())?;

    let mut rows = Vec::new();
    for &t in &spec.t_values {
        let eval = |l: LossBudget| -> heraldkit::Result<_> {
            let s = HeraldSpec::new(spec.r1, spec.r2, t, Detector::OnOff, l)?;
            let out = herald_onoff(&s)?;
            let q = out.quality(&spec.grid)?;
            Ok((out, q))
        };
        let mut row = SweepRow {
            t,
            w00_lossless: None,
            p_on_lossless: None,
            w00_lossy: None,
            p_on_lossy: None,
            error: String::new(),
        };
        for (label, l) in [("lossless", LossBudget::NONE), ("lossy", spec.losses)] {
            match eval(l) {
                Ok((out, q)) => {
                    if label == "lossless" {
                        row.w00_lossless = Some(q.w00);
                        row.p_on_lossless = Some(q.p_on);
                    } else {
                        row.w00_lossy = Some(q.w00);
                        row.p_on_lossy = Some(q.p_on);
                    }
                    if !a.no_grids {
                        let bytes = grid_bytes(&prov, &out.mixture.to_grid(&spec.grid))?;
                        announce(sink.emit(&format!("wigner_T{t:.3}_{label}.csv"), &bytes)?);
                    }
                }
                Err(e) => {
                    eprintln!("warning: T = {t}, {label}: {e}");
                    if !row.error.is_empty() {
                        row.error.push_str("; ");
                    }
                    row.error.push_str(&format!("{label}: {e}"));
                }
            }
        }
        rows.push(row);
    }
    let bytes = table_bytes(&prov, a.out.format, "points", &rows)?;
    announce(sink.emit(&format!("metrics.{}", a.out.format.ext()), &bytes)?);
    let best = rows
        .iter()
        .filter_map(|r| r.w00_lossless.map(|w| (r.t, w)))
        .min_by(|x, y| x.1.total_cmp(&y.1));
    match best {
        Some((t, w)) => {
            eprintln!("minimum lossless W00 = {w:.5} at T = {t:.3}");
            Ok(())
        }
        None => Err(CliError::Infeasible(
            "no sweep point could be heralded".into(),
        )),
    }
}

#[derive(Debug, Serialize)]
struct TableOut {
    name: String,
    scheme: String,
    r1_db: f64,
    r2_db: f64,
    #[serde(rename = "T")]
    t: f64,
    r_out_db: f64,
    s: f64,
    constraint_residual: f64,
    p_on_lossless: f64,
    w00_lossless: f64,
    p_on: f64,
    w00: f64,
    r_est_db: f64,
    calibration: f64,
    predicted_cps: f64,
    measured_cps: f64,
    cps_ratio: f64,
    measured_r_db: f64,
    measured_w00: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    predicted_cps_duty_corrected: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    measured_cps_duty_corrected: Option<f64>,
}

pub fn tables(a: &TablesArgs, args: &[String]) -> CliResult {
    let prov = Provenance::new(args, None);
    let losses = a.losses.resolve(LossBudget::EXPERIMENTAL)?;
    let grid = a.grid.resolve(PhaseGrid::default())?;
    for c in [a.calibration_2db, a.calibration_4db].into_iter().flatten() {
        heraldkit::CalibrationConstant::new(c)?;
    }
    let mut rows = Vec::new();
    for row in &TABLE_ROWS {
        let r = evaluate_row(row, losses, &grid)?;
        let c = if row.target_db < 3.0 {
            a.calibration_2db.unwrap_or(CALIBRATION_2DB)
        } else {
            a.calibration_4db.unwrap_or(CALIBRATION_4DB)
        };
        let predicted = c * r.p_on;
        rows.push(TableOut {
            name: r.name,
            scheme: format!("{:?}", r.scheme).to_uppercase(),
            r1_db: row.r1_db,
            r2_db: row.r2_db,
            t: row.t,
            r_out_db: r.r_out_db,
            s: r.s,
            constraint_residual: r.constraint_residual,
            p_on_lossless: r.p_on_lossless,
            w00_lossless: r.w00_lossless,
            p_on: r.p_on,
            w00: r.w00,
            r_est_db: r.r_est_db,
            calibration: c,
            predicted_cps: predicted,
            measured_cps: row.cps,
            cps_ratio: predicted / row.cps,
            measured_r_db: row.measured_r_db,
            measured_w00: row.measured_w00,
            predicted_cps_duty_corrected: a.duty_corrected.then(|| duty_corrected(predicted)),
            measured_cps_duty_corrected: a.duty_corrected.then(|| duty_corrected(row.cps)),
        });
    }
    let sink = Sink::dir_or_stdout(a.out.out.clone())?;
    let bytes = table_bytes(&prov, a.out.format, "rows", &rows)?;
    announce(sink.emit(&format!("tables.{}", a.out.format.ext()), &bytes)?);
    Ok(())
}

#[derive(Debug, Serialize)]
struct PlanOut {
    r_out_db: f64,
    target_p_on: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_w00: Option<f64>,
    branch: String,
    r1_db: f64,
    r2_db: f64,
    #[serde(rename = "T")]
    t: f64,
    s: f64,
    p_on_lossless: f64,
    w00_lossless: f64,
    trigger_loss: f64,
    signal_loss: f64,
    fake_fraction: f64,
    p_on: f64,
    w00: f64,
    calibration: f64,
    predicted_cps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    predicted_cps_duty_corrected: Option<f64>,
}

pub fn plan(a: &PlanArgs, args: &[String]) -> CliResult {
    let prov = Provenance::new(args, None);
    let r = db_to_r(a.r_out_db)?;
    let p = match (a.p_on, a.w00) {
        (Some(p), None) if p > 0.0 && p < 1.0 => p,
        (Some(p), None) => return Err(CliError::Usage(format!("--p-on {p} outside (0, 1)"))),
        (None, Some(w)) => best_tradeoff_p_on(w)?,
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --p-on and --w00".into(),
            ))
        }
    };
    let branch = if a.mirrored {
        Branch::Mirrored
    } else {
        Branch::Primary
    };
    let pt = gps_point(r, p, branch)?;
    let losses = a.losses.resolve(LossBudget::EXPERIMENTAL)?;
    let grid = a.grid.resolve(PhaseGrid::default())?;
    let q = herald_onoff(&pt.spec(losses)?)?.quality(&grid)?;
    let c = a.calibration.unwrap_or(if a.r_out_db < 3.0 {
        CALIBRATION_2DB
    } else {
        CALIBRATION_4DB
    });
    heraldkit::CalibrationConstant::new(c)?;
    let out = PlanOut {
        r_out_db: a.r_out_db,
        target_p_on: p,
        target_w00: a.w00,
        branch: format!("{branch:?}").to_lowercase(),
        r1_db: pt.r1.db(),
        r2_db: pt.r2.db(),
        t: pt.t,
        s: pt.s,
        p_on_lossless: pt.p_on,
        w00_lossless: pt.w00,
        trigger_loss: losses.trigger,
        signal_loss: losses.signal,
        fake_fraction: losses.fake_trigger_fraction,
        p_on: q.p_on,
        w00: q.w00,
        calibration: c,
        predicted_cps: c * q.p_on,
        predicted_cps_duty_corrected: a.duty_corrected.then(|| duty_corrected(c * q.p_on)),
    };
    let bytes = match a.format {
        Format::Json => prov
            .wrap_json("plan", serde_json::to_value(&out)?)?
            .into_bytes(),
        Format::Csv => table_bytes(&prov, Format::Csv, "plan", std::slice::from_ref(&out))?,
    };
    let sink = Sink::dir_or_stdout(a.out.clone())?;
    announce(sink.emit(&format!("plan.{}", a.format.ext()), &bytes)?);
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct OracleRow {
    case: usize,
    r1: f64,
    r2: f64,
    #[serde(rename = "T")]
    t: f64,
    trigger_loss: f64,
    signal_loss: f64,
    fake_fraction: f64,
    dp_on: Option<f64>,
    dw: Option<f64>,
    pass: bool,
    error: String,
}

/// Random specs drawn in a fixed order from `seed`.
fn oracle_cases(seed: u64, n: usize, max_r: f64) -> Vec<(f64, f64, f64, LossBudget)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let levels = [0.0, 0.25, 0.9];
    (0..n)
        .map(|_| {
            let r1 = rng.random_range(-max_r..=max_r);
            let r2 = rng.random_range(-max_r..=max_r);
            let t = rng.random_range(0.1..=0.95);
            let losses = LossBudget {
                trigger: levels[rng.random_range(0..levels.len())],
                signal: levels[rng.random_range(0..levels.len())],
                fake_trigger_fraction: if rng.random_bool(0.5) { 0.05 } else { 0.0 },
            };
            (r1, r2, t, losses)
        })
        .collect()
}

fn oracle_case(
    (r1, r2, t, losses): (f64, f64, f64, LossBudget),
    truncation: usize,
    grid: &PhaseGrid,
    flip: bool,
) -> heraldkit::Result<(f64, f64)> {
    let closed_r2 = if flip { -r2 } else { r2 };
    let closed = herald_onoff(&HeraldSpec::onoff(r1, closed_r2, t)?.with_losses(losses)?)?;
    let spec = HeraldSpec::onoff(r1, r2, t)?;
    let state = TwoModeState::squeezed_inputs(spec.r1, spec.r2, t, truncation)?;
    let (rho, p_on) = herald_fock(&state, Detector::OnOff, losses)?;
    let w = wigner_from_density(&rho, grid)?;
    Ok((
        (p_on - closed.p_on).abs(),
        w.max_abs_diff(&closed.mixture.to_grid(grid))?,
    ))
}

pub fn oracle_check(a: &OracleArgs, args: &[String]) -> CliResult {
    if a.cases == 0 {
        return Err(CliError::Usage("--cases must be positive".into()));
    }
    if !(a.max_r > 0.0 && a.max_r.is_finite()) {
        return Err(CliError::Usage("--max-r must be positive".into()));
    }
    let prov = Provenance::new(args, Some(a.seed));
    let grid = a.grid.resolve(PhaseGrid::new(8.0, 161)?)?;
    let cases = oracle_cases(a.seed, a.cases, a.max_r);
    let rows: Vec<OracleRow> = cases
        .par_iter()
        .enumerate()
        .map(|(k, &case)| {
            let (r1, r2, t, l) = case;
            let mut row = OracleRow {
                case: k,
                r1,
                r2,
                t,
                trigger_loss: l.trigger,
                signal_loss: l.signal,
                fake_fraction: l.fake_trigger_fraction,
                dp_on: None,
                dw: None,
                pass: false,
                error: String::new(),
            };
            match oracle_case(case, a.truncation, &grid, a.inject_sign_flip) {
                Ok((dp, dw)) => {
                    row.dp_on = Some(dp);
                    row.dw = Some(dw);
                    row.pass = dp <= a.tolerance && dw <= a.tolerance;
                }
                Err(e) => row.error = e.to_string(),
            }
            row
        })
        .collect();
    let sink = Sink::dir_or_stdout(a.out.out.clone())?;
    let bytes = table_bytes(&prov, a.out.format, "cases", &rows)?;
    announce(sink.emit(&format!("oracle_check.{}", a.out.format.ext()), &bytes)?);
    let failed = rows.iter().filter(|r| !r.pass).count();
    eprintln!(
        "oracle-check: {}/{} cases within {:e}",
        rows.len() - failed,
        rows.len(),
        a.tolerance
    );
    if failed > 0 {
        return Err(CliError::Verification(format!(
            "{failed} of {} cases",
            rows.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct TomoMetrics {
    samples: usize,
    phases: usize,
    p_on: Option<f64>,
    w00: Option<f64>,
    w00_generating: Option<f64>,
    r_est_db: Option<f64>,
    r_generating_db: Option<f64>,
    fidelity: Option<f64>,
    fidelity_from_w00: Option<f64>,
    log_likelihood: f64,
    iterations: usize,
    converged: bool,
}

fn vacuum(dim: usize) -> heraldkit::Result<FockDensityMatrix> {
    let mut v = DVector::from_element(dim, C64::new(0.0, 0.0));
    v[0] = C64::new(1.0, 0.0);
    FockDensityMatrix::from_pure(&v)
}

pub fn tomo_sim(a: &TomoArgs, args: &[String]) -> CliResult {
    let prov = Provenance::new(args, Some(a.seed));
    if a.samples == 0 || a.phases == 0 {
        return Err(CliError::Usage(
            "--samples and --phases must be positive".into(),
        ));
    }
    let losses = a.losses.resolve(LossBudget::EXPERIMENTAL)?;
    let spec = if a.vacuum {
        None
    } else if let Some(name) = &a.row {
        let row = table_row(name).ok_or_else(|| CliError::Usage(format!("unknown row {name}")))?;
        Some(row.spec(losses)?)
    } else if let (Some(r1), Some(r2), Some(t)) = (a.r1_db, a.r2_db, a.t) {
        Some(HeraldSpec::new(
            db_to_r(r1)?,
            db_to_r(r2)?,
            t,
            Detector::OnOff,
            losses,
        )?)
    } else {
        return Err(CliError::Usage(
            "give --row, or --r1-db/--r2-db/--t, or --vacuum".into(),
        ));
    };
    let (rho, p_on) = match spec {
        Some(s) => {
            let state = TwoModeState::squeezed_inputs(s.r1, s.r2, s.t, DEFAULT_TRUNCATION)?;
            let (rho, p) = herald_fock(&state, Detector::OnOff, s.losses)?;
            (rho, Some(p))
        }
        None => (vacuum(DEFAULT_TRUNCATION + 1)?, None),
    };
    let data = synthesize_homodyne(&rho, &default_phases(a.phases), a.samples, a.seed)?;
    let opts = MleOptions {
        truncation: a.truncation,
        ..MleOptions::default()
    };
    let rec = mle_reconstruct(&data, &opts)?;
    if !rec.converged {
        eprintln!(
            "warning: reconstruction did not converge in {} iterations",
            rec.iterations
        );
    }
    let grid = a.grid.resolve(PhaseGrid::new(6.0, 121)?)?;
    let w00 = density_w00(&rec.rho, &grid).ok();
    let r_est = fit_output_squeezing_density(&rec.rho).ok();
    let metrics = TomoMetrics {
        samples: data.len(),
        phases: data.phases.len(),
        p_on,
        w00,
        w00_generating: density_w00(&rho, &grid).ok(),
        r_est_db: r_est.map(|r| r.db()),
        r_generating_db: fit_output_squeezing_density(&rho).ok().map(|r| r.db()),
        fidelity: r_est.and_then(|r| fidelity(&rec.rho, &SqueezedFockState::single_photon(r)).ok()),
        fidelity_from_w00: w00.map(fidelity_from_w00),
        log_likelihood: rec.log_likelihood.last().copied().unwrap_or(f64::NAN),
        iterations: rec.iterations,
        converged: rec.converged,
    };

    let sink = Sink::dir(a.out.clone())?;
    let dataset = csv_with_header(&prov, |buf| Ok(data.write_csv(buf)?))?;
    announce(sink.emit("dataset.csv", &dataset)?);
    let density: serde_json::Value = serde_json::from_str(&rec.rho.to_json()?)?;
    announce(sink.emit(
        "density.json",
        prov.wrap_json("density", density)?.as_bytes(),
    )?);
    let w = grid.sample(|x, p| rec.rho.wigner(x, p));
    announce(sink.emit("wigner.csv", &grid_bytes(&prov, &w)?)?);
    let m = prov.wrap_json("metrics", serde_json::to_value(&metrics)?)?;
    announce(sink.emit("metrics.json", m.as_bytes())?);
    Ok(())
}
