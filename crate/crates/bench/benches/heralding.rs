use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use heraldkit::fock::{herald_fock, BeamSplitterFock};
use heraldkit::tomography::mle_reconstruct;
use heraldkit::tradeoff::{default_p_grid, gps_best_curve, gps_numeric_best};
use heraldkit::{db_to_r, herald_onoff, Detector, LossBudget, MleOptions, PhaseGrid};
use heraldkit_eval::{gps2_dataset, gps2_spec, gps2_state};

fn closed_form(c: &mut Criterion) {
    let spec = gps2_spec();
    let grid = PhaseGrid::default();
    c.bench_function("herald_onoff", |b| {
        b.iter(|| herald_onoff(black_box(&spec)).unwrap())
    });
    c.bench_function("quality_default_grid", |b| {
        let out = herald_onoff(&spec).unwrap();
        b.iter(|| out.quality(black_box(&grid)).unwrap())
    });
    let r = db_to_r(2.0).unwrap();
    let ps = default_p_grid();
    c.bench_function("gps_best_curve_60", |b| {
        b.iter(|| gps_best_curve(r, black_box(&ps)))
    });
    c.bench_function("gps_numeric_best", |b| {
        b.iter(|| gps_numeric_best(r, black_box(0.1)).unwrap())
    });
}

fn fock(c: &mut Criterion) {
    let mut g = c.benchmark_group("fock");
    g.sample_size(10);
    let t = gps2_spec().t;
    g.bench_function("beamsplitter_n40", |b| {
        b.iter(|| BeamSplitterFock::new(black_box(t), 40).unwrap())
    });
    let state = gps2_state(40);
    g.bench_function("herald_fock_n40", |b| {
        b.iter(|| {
            herald_fock(black_box(&state), Detector::OnOff, LossBudget::EXPERIMENTAL).unwrap()
        })
    });
    g.finish();
}

fn tomography(c: &mut Criterion) {
    let mut g = c.benchmark_group("tomography");
    g.sample_size(10);
    let data = gps2_dataset(12, 5000);
    g.bench_function("mle_12x5000", |b| {
        b.iter(|| mle_reconstruct(black_box(&data), &MleOptions::default()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, closed_form, fock, tomography);
criterion_main!(benches);
