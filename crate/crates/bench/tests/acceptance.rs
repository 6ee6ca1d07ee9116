//! Acceptance criteria. Each criterion prints one `PASS` / `FAIL` line; the
//! process exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use heraldkit::experiment::{
    best_transmissivity, evaluate_row, run_sweep, table_row, Scheme, SweepSpec, TABLE_ROWS,
};
use heraldkit::fock::{
    fidelity, herald_fock, trigger_photon_distribution, wigner_from_density, DEFAULT_TRUNCATION,
};
use heraldkit::heralding::output_squeezing;
use heraldkit::tomography::{
    default_phases, density_w00, fit_output_squeezing_density, mle_reconstruct,
    synthesize_homodyne, MleOptions, DEFAULT_PHASES, DEFAULT_SAMPLES_PER_PHASE,
};
use heraldkit::tradeoff::{
    best_tradeoff_p_on, best_tradeoff_w, default_p_grid, default_ps_t_grid, gps_best_curve,
    gps_numeric_best, gps_point, lossy_tradeoff_curve, ps_curve, ps_point_at_w00, Branch,
};
use heraldkit::{
    db_to_r, herald_onoff, Detector, HeraldSpec, LossBudget, PhaseGrid, SqueezedFockState,
    SqueezingParameter, TwoModeState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let grid = PhaseGrid::new(8.0, 161).unwrap();
    let levels = [0.0, 0.25, 0.9];
    let cases = 50;
    let (mut worst_p, mut worst_w) = (0.0f64, 0.0f64);
    let mut errors = Vec::new();
    for k in 0..cases {
        let r1 = rng.random_range(-0.7..=0.7);
        let r2 = rng.random_range(-0.7..=0.7);
        let t = rng.random_range(0.1..=0.95);
        let losses = LossBudget::new(
            levels[rng.random_range(0..3)],
            levels[rng.random_range(0..3)],
            if rng.random_bool(0.5) { 0.05 } else { 0.0 },
        )
        .unwrap();
        let spec = HeraldSpec::onoff(r1, r2, t)
            .unwrap()
            .with_losses(losses)
            .unwrap();
        let run = || -> heraldkit::Result<(f64, f64)> {
            let closed = herald_onoff(&spec)?;
            let state = TwoModeState::squeezed_inputs(spec.r1, spec.r2, t, DEFAULT_TRUNCATION)?;
            let (rho, p_on) = herald_fock(&state, Detector::OnOff, losses)?;
            let w_oracle = wigner_from_density(&rho, &grid)?;
            let w_closed = closed.mixture.to_grid(&grid);
            Ok((
                (p_on - closed.p_on).abs(),
                w_oracle.max_abs_diff(&w_closed)?,
            ))
        };
        match run() {
            Ok((dp, dw)) => {
                worst_p = worst_p.max(dp);
                worst_w = worst_w.max(dw);
            }
            Err(e) => errors.push(format!("case {k} ({r1:.3}, {r2:.3}, {t:.3}): {e}")),
        }
    }
    let pass = errors.is_empty() && worst_p <= 1e-6 && worst_w <= 1e-6;
    outcome(
        pass,
        format!(
            "{cases} specs, max |dP_on| = {worst_p:.2e}, max |dW| = {worst_w:.2e}{}",
            if errors.is_empty() {
                String::new()
            } else {
                format!(", errors: {}", errors.join("; "))
            }
        ),
    )
}

fn analytic_optimum() -> Outcome {
    let (mut worst_s, mut worst_w) = (0.0f64, 0.0f64);
    let mut errors = Vec::new();
    for rc in [-0.3, 0.0, 0.23, 0.46] {
        for pc in [0.01, 0.1, 0.3] {
            match gps_numeric_best(SqueezingParameter(rc), pc) {
                Ok(pt) => {
                    worst_s = worst_s.max((pt.s - 1.0).abs());
                    worst_w = worst_w.max((pt.w00 - best_tradeoff_w(pc)).abs());
                }
                Err(e) => errors.push(format!("({rc}, {pc}): {e}")),
            }
        }
    }
    outcome(
        errors.is_empty() && worst_s <= 1e-6 && worst_w <= 1e-9,
        format!("12 targets, max |s - 1| = {worst_s:.2e}, max |dW| = {worst_w:.2e} {errors:?}"),
    )
}

fn dominance_and_ratio() -> Outcome {
    let ro = db_to_r(2.0).unwrap();
    let gps_p = best_tradeoff_p_on(-0.2).unwrap();
    let ps = ps_point_at_w00(ro, -0.2).unwrap();
    let ratio = gps_p / ps.p_on;
    let mut violations = 0;
    let mut compared = 0;
    for db in [0.5, 2.0, 4.0] {
        let r = db_to_r(db).unwrap();
        let (curve, _) = ps_curve(r, &default_ps_t_grid(r));
        for pt in curve.points.iter().filter(|p| p.p_on > 0.0 && p.p_on < 1.0) {
            let Ok(g) = gps_point(r, pt.p_on, Branch::Primary) else {
                violations += 1;
                continue;
            };
            compared += 1;
            if g.w00.partial_cmp(&pt.w00) != Some(std::cmp::Ordering::Less) {
                violations += 1;
            }
        }
    }
    outcome(
        (8.0..=13.0).contains(&ratio) && violations == 0,
        format!(
            "P_on GPS/PS at W00 = -0.2: {gps_p:.4e}/{:.4e} = {ratio:.2}; {compared} shared points, {violations} violations",
            ps.p_on
        ),
    )
}

fn loss_shift() -> Outcome {
    let ro = db_to_r(2.0).unwrap();
    let losses = LossBudget::new(0.9, 0.25, 0.0).unwrap();
    let (gps, _) = gps_best_curve(ro, &default_p_grid());
    let (ps, _) = ps_curve(ro, &default_ps_t_grid(ro));
    let mut total = 0;
    let mut within = 0;
    let mut worst = 0.0f64;
    let mut largest_ok_p: f64 = 0.0;
    let mut smallest_bad_p = f64::INFINITY;
    for curve in [&gps, &ps] {
        let lossy = lossy_tradeoff_curve(curve, losses).unwrap();
        for (a, b) in curve.points.iter().zip(&lossy.points) {
            if a.w00 >= 0.0 {
                continue;
            }
            total += 1;
            let dev = (b.p_on / (0.1 * a.p_on) - 1.0).abs();
            worst = worst.max(dev);
            if dev <= 0.05 {
                within += 1;
                largest_ok_p = largest_ok_p.max(a.p_on);
            } else {
                smallest_bad_p = smallest_bad_p.min(a.p_on);
            }
        }
    }
    outcome(
        within == total,
        format!(
            "{within}/{total} points within 5% of 0.1x; worst deviation {:.1}%; holds up to lossless P_on = {largest_ok_p:.3}, first breach at P_on = {smallest_bad_p:.3}",
            100.0 * worst
        ),
    )
}

fn table_consistency() -> Outcome {
    let grid = PhaseGrid::default();
    let mut notes = Vec::new();
    let mut pass = true;
    for row in TABLE_ROWS.iter().filter(|r| r.scheme == Scheme::Gps) {
        let r = evaluate_row(row, LossBudget::EXPERIMENTAL, &grid).unwrap();
        let ok_r = (r.r_out_db - row.target_db).abs() <= 0.15;
        let ok_c = (r.cps_ratio() - 1.0).abs() <= 0.15;
        pass &= ok_r && ok_c;
        notes.push(format!(
            "{} r_out {:.2} dB, cps {:.0}/{:.0}",
            r.name, r.r_out_db, r.predicted_cps, r.measured_cps
        ));
    }
    let rate = |name: &str| {
        evaluate_row(table_row(name).unwrap(), LossBudget::EXPERIMENTAL, &grid)
            .unwrap()
            .predicted_cps
    };
    let ratio = rate("GPS-2") / rate("PS-2");
    pass &= ratio > 8.0;
    outcome(
        pass,
        format!("{}; GPS-2/PS-2 rate {ratio:.2}", notes.join(", ")),
    )
}

fn sweep_structure() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    let mut spec = SweepSpec::new(3.0, -3.0, 0.01, LossBudget::EXPERIMENTAL).unwrap();
    spec.grid = PhaseGrid::new(5.0, 101).unwrap();
    let (pts, failures) = run_sweep(&spec);
    let best = best_transmissivity(&pts).unwrap();
    pass &= failures.is_empty() && (best.t - 0.5).abs() <= 0.05;
    notes.push(format!("+-3 dB minimum at T = {:.2}", best.t));
    for (r1, r2) in [(2.8, -0.78), (4.7, -0.67)] {
        let mut spec = SweepSpec::new(r1, r2, 0.01, LossBudget::EXPERIMENTAL).unwrap();
        spec.grid = PhaseGrid::new(5.0, 101).unwrap();
        let (pts, _) = run_sweep(&spec);
        let last = pts.last().unwrap();
        let limit = 1.0 - 1.0 / db_to_r(r2).unwrap().r().cosh();
        let nonvanishing = last.p_on_lossless > 0.5 * limit;
        let decreasing = pts
            .windows(2)
            .all(|w| w[1].p_on_lossless < w[0].p_on_lossless && w[1].p_on_lossy < w[0].p_on_lossy);
        let peak = pts
            .iter()
            .max_by(|a, b| a.p_on_lossless.total_cmp(&b.p_on_lossless))
            .unwrap();
        let dip = 1.0 - pts[0].p_on_lossless / peak.p_on_lossless;
        pass &= nonvanishing && decreasing;
        notes.push(format!(
            "{r1}/{r2} dB: P_on(T = {:.2}) = {:.2e} (T -> 1 limit {limit:.2e}), P_on peaks at T = {:.2} and falls {:.1}% toward T = {:.2}",
            last.t,
            last.p_on_lossless,
            peak.t,
            100.0 * dip,
            pts[0].t
        ));
    }
    outcome(pass, notes.join("; "))
}

fn tomography_round_trip() -> Outcome {
    let row = table_row("GPS-2").unwrap();
    let spec = row.spec(LossBudget::EXPERIMENTAL).unwrap();
    let state =
        TwoModeState::squeezed_inputs(spec.r1, spec.r2, spec.t, DEFAULT_TRUNCATION).unwrap();
    let (rho, _) = herald_fock(&state, Detector::OnOff, spec.losses).unwrap();
    let grid = PhaseGrid::new(5.0, 201).unwrap();
    let w_true = density_w00(&rho, &grid).unwrap();
    let r_true = fit_output_squeezing_density(&rho).unwrap();
    let data = synthesize_homodyne(
        &rho,
        &default_phases(DEFAULT_PHASES),
        DEFAULT_SAMPLES_PER_PHASE,
        20240601,
    )
    .unwrap();
    let rec = mle_reconstruct(&data, &MleOptions::default()).unwrap();
    let w_rec = density_w00(&rec.rho, &grid).unwrap();
    let r_rec = fit_output_squeezing_density(&rec.rho).unwrap();
    let dw = w_rec - w_true;
    let dr = r_rec.db() - r_true.db();
    outcome(
        dw.abs() <= 0.02 && dr.abs() <= 0.2,
        format!(
            "W00 {w_true:.4} -> {w_rec:.4}, r_est {:.3} -> {:.3} dB, {} MLE iterations (converged: {})",
            r_true.db(),
            r_rec.db(),
            rec.iterations,
            rec.converged
        ),
    )
}

fn fidelity_relation() -> Outcome {
    let cases: Vec<(f64, f64, f64)> = ["PS-1", "PS-2", "PS-3", "PS-4", "GPS-1"]
        .iter()
        .map(|n| {
            let r = table_row(n).unwrap();
            (r.r1_db, r.r2_db, r.t)
        })
        .chain([(1.0, 0.0, 0.98), (2.0, -0.2, 0.95)])
        .collect();
    let mut used = 0;
    let mut worst = 0.0f64;
    for (r1, r2, t) in cases {
        let (a, b) = (db_to_r(r1).unwrap(), db_to_r(r2).unwrap());
        let state = TwoModeState::squeezed_inputs(a, b, t, DEFAULT_TRUNCATION).unwrap();
        let d = trigger_photon_distribution(&state, 0.0).unwrap();
        if (2..=DEFAULT_TRUNCATION / 2).any(|n| d.get(2 * n - 1) >= 1e-3) {
            continue;
        }
        used += 1;
        let (rho, _) = herald_fock(&state, Detector::OnOff, LossBudget::NONE).unwrap();
        let target = SqueezedFockState::single_photon(output_squeezing(a, b, t).unwrap());
        let f = fidelity(&rho, &target).unwrap();
        worst = worst.max((f - 0.5 * (1.0 - PI * rho.wigner(0.0, 0.0))).abs());
    }
    outcome(
        used >= 3 && worst < 0.01,
        format!("{used} weak-pump cases, max |F - (1 - pi W)/2| = {worst:.2e}"),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("oracle equivalence", oracle_equivalence),
        ("analytic optimum at s = 1", analytic_optimum),
        ("GPS dominance and rate ratio", dominance_and_ratio),
        ("trigger-loss shift factor", loss_shift),
        ("table consistency", table_consistency),
        ("sweep structure", sweep_structure),
        ("tomography round trip", tomography_round_trip),
        ("fidelity-negativity relation", fidelity_relation),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "criterion {} [{}]: {} ({}; {:.1} s)",
            k + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            secs
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "acceptance: {} passed, {} failed",
        criteria.len() - failed,
        failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
