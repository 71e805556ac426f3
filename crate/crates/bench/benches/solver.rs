use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use mona_cli::parse_netlist;
use mona_core::demo::{self, RECTIFIER_NETLIST};
use mona_core::field::{generate_transformer_mesh, TransformerParams};
use mona_core::integrator::{run_transient, MidpointStepper, NewtonConfig, TimeGrid};

fn field_assembly(c: &mut Criterion) {
    let desc = generate_transformer_mesh(&TransformerParams::default()).unwrap();
    c.bench_function("assemble and gauge transformer field", |b| {
        b.iter(|| black_box(&desc).build_field().unwrap())
    });
}

fn midpoint_step(c: &mut Criterion) {
    let sys = demo::rectifier(&TransformerParams::default()).unwrap();
    let tau = 1.0 / 12000.0;
    let stepper = MidpointStepper::new(&sys, tau, NewtonConfig::default()).unwrap();
    let y0 = sys.zero_state();
    c.bench_function("rectifier midpoint step", |b| {
        b.iter(|| stepper.step(black_box(&y0), 0.002, sys.zero_state()).unwrap())
    });
}

fn short_transient(c: &mut Criterion) {
    let sys = demo::rectifier(&TransformerParams::default()).unwrap();
    let grid = TimeGrid::new(0.0, 1.0 / 60.0, 1.0 / 12000.0).unwrap();
    let mut group = c.benchmark_group("transient");
    group.sample_size(10);
    group.bench_function("rectifier one source period", |b| {
        b.iter(|| run_transient(&sys, black_box(&grid), &[], &NewtonConfig::default()).unwrap())
    });
    group.finish();
}

fn netlist_parse(c: &mut Criterion) {
    c.bench_function("parse rectifier netlist", |b| {
        b.iter(|| parse_netlist(black_box(RECTIFIER_NETLIST)).unwrap())
    });
}

criterion_group!(benches, field_assembly, midpoint_step, short_transient, netlist_parse);
criterion_main!(benches);
