use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sfd_core::criteria::SwapState;
use sfd_core::design::generate_random_lhs;
use sfd_core::{evaluate, CriterionSpec, Seed};

fn swap_evaluation(c: &mut Criterion) {
    let design = generate_random_lhs(100, 10, Seed(4)).unwrap();
    let mut group = c.benchmark_group("swap_n100_d10");
    for spec in [
        CriterionSpec::centered_l2(),
        CriterionSpec::wraparound_l2(),
        CriterionSpec::star_l2(),
        CriterionSpec::phi_p(50),
        CriterionSpec::mindist(),
    ] {
        let mut state = SwapState::new(design.clone(), spec).unwrap();
        let mut k = 0usize;
        group.bench_function(BenchmarkId::new("incremental", spec.label()), |b| {
            b.iter(|| {
                k = (k + 1) % 97;
                state.evaluate_swap(k % 10, k, k + 3).unwrap()
            })
        });
        group.bench_function(BenchmarkId::new("full", spec.label()), |b| {
            b.iter(|| {
                k = (k + 1) % 97;
                let swapped = design.elementary_swap(k % 10, k, k + 3).unwrap();
                evaluate(black_box(swapped.matrix()), spec).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, swap_evaluation);
criterion_main!(benches);
