use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use hypowave_bench::{heisenberg_operator, unit_beam};
use hypowave_core::beams::eval_beam;
use hypowave_core::flow::{integrate_bicharacteristic, HamiltonStepper};
use hypowave_core::frames::lie_bracket;
use hypowave_core::wave::{StencilOrder, Workspace};
use hypowave_core::builtin_frame;
use std::hint::black_box;

fn brackets(c: &mut Criterion) {
    let m = builtin_frame("martinet").unwrap();
    let (x1, x2) = (&m.fields()[0], &m.fields()[1]);
    let x12 = lie_bracket(x1, x2).unwrap();
    c.bench_function("bracket/martinet_depth3", |b| {
        b.iter(|| lie_bracket(black_box(x1), black_box(&x12)).unwrap())
    });
    c.bench_function("bracket_words/martinet_depth4", |b| b.iter(|| black_box(&m).bracket_words(4)));
}

fn rk4(c: &mut Criterion) {
    let h = builtin_frame("heisenberg").unwrap();
    let mut stepper = HamiltonStepper::new(&h);
    let mut z = vec![0.0, 0.0, 0.0, 0.5, 0.0, 2.5];
    c.bench_function("rk4/heisenberg_step", |b| b.iter(|| stepper.step(black_box(&mut z), 1e-4)));
    c.bench_function("rk4/heisenberg_spiral_1e4_steps", |b| {
        b.iter(|| integrate_bicharacteristic(&h, &[0.0; 3], &[0.5, 0.0, 2.5], 1.0, 1e-4).unwrap())
    });
}

fn laplacian(c: &mut Criterion) {
    let mut group = c.benchmark_group("laplacian_apply");
    for order in [StencilOrder::Second, StencilOrder::Eighth] {
        let op = heisenberg_operator(64, order).unwrap();
        let len = op.grid().len();
        let u = op.grid().sample(|x| (3.0 * x[0]).sin() * (2.0 * x[1]).cos() + x[2]);
        let mut out = vec![0.0; len];
        let mut ws = Workspace::new(len);
        group.throughput(Throughput::Elements(len as u64));
        group.bench_with_input(BenchmarkId::new(format!("{order:?}"), len), &u, |b, u| {
            b.iter(|| op.apply_with(black_box(u), &mut out, &mut ws))
        });
    }
    group.finish();
}

fn beam_eval(c: &mut Criterion) {
    let beam = unit_beam(80.0).unwrap();
    let x = [0.05, -0.02, 0.01];
    c.bench_function("beam/eval_point", |b| b.iter(|| eval_beam(&beam, black_box(0.2), black_box(&x)).unwrap()));
}

criterion_group!(benches, brackets, rk4, laplacian, beam_eval);
criterion_main!(benches);
