use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use linksim_core::analysis::{clt_moments_single, sep_mpsk_at};
use linksim_core::montecarlo::{run_ber_with_workers, BER_CHUNK};
use linksim_core::{
    ChannelModel, ModulationScheme, PathLossValue, PhaseImpairment, PhasePolicy, RicianSpec, RisPanel,
    SeededStream, TrialPlan,
};

fn rician() -> RicianSpec {
    RicianSpec::from_db(10.0).unwrap()
}

fn sampler(c: &mut Criterion) {
    let spec = rician();
    let mut g = c.benchmark_group("rician");
    g.throughput(Throughput::Elements(1024));
    g.bench_function("amplitude x1024", |b| {
        let mut rng = SeededStream::new(1, 0).rng();
        b.iter(|| (0..1024).map(|_| spec.sample_amplitude(&mut rng)).sum::<f64>())
    });
    g.finish();
}

fn quadrature(c: &mut Criterion) {
    let model = clt_moments_single(64, PathLossValue::from_db(110.0).unwrap(), &rician()).unwrap();
    let rho = 10f64.powf(11.0);
    c.bench_function("sep bpsk", |b| b.iter(|| sep_mpsk_at(&model, 2, black_box(rho)).unwrap()));
    c.bench_function("sep 16psk", |b| b.iter(|| sep_mpsk_at(&model, 16, black_box(rho)).unwrap()));
}

fn chunk(c: &mut Criterion) {
    let ideal = RisPanel::new(64).unwrap();
    let impaired = RisPanel::new(64).unwrap().with_policy(
        PhasePolicy::new(vec![PhaseImpairment::VonMisesError { kappa: 5.0 }]).unwrap(),
    );
    let mut g = c.benchmark_group("ber chunk");
    g.sample_size(20);
    g.throughput(Throughput::Elements(BER_CHUNK));
    for (label, panel) in [("ideal n64", ideal), ("von mises n64", impaired)] {
        let channel = ChannelModel::SingleRis {
            panel,
            pl: PathLossValue::LOSSLESS,
            rician: rician(),
        };
        // Enough SNR that one chunk never reaches the error target.
        let mut plan = TrialPlan::new(channel, ModulationScheme::bpsk(), vec![-20.0], 1);
        plan.max_trials = BER_CHUNK;
        g.bench_function(label, |b| b.iter(|| run_ber_with_workers(&plan, 1).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, sampler, quadrature, chunk);
criterion_main!(benches);
