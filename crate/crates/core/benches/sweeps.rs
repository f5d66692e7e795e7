use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use vring::energy::{energy_sweep, EnergyParams, GainRange, SweepTemplate};
use vring::freq::{ChainModel, EgoGains, HumanLink};
use vring::model::{AutomatedGains, ChainConfig, HumanGains};
use vring::parallel::Execution;
use vring::simulator::{LeadProfile, SimSettings};
use vring::stability::boundaries::Plane;
use vring::stability::chart::classify_cells;
use vring::stability::ChartSpec;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn chart(c: &mut Criterion) {
    let model = ChainModel::atc(EgoGains::default(), HumanLink::default(), 4);
    let spec = ChartSpec::new(Plane::BetaAlpha, model, (0.0, 3.0), (0.0, 2.0), (40, 40));
    let mut group = c.benchmark_group("chart_cells_40x40");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| classify_cells(&spec, exec).unwrap())
        });
    }
    group.finish();
}

fn energy(c: &mut Criterion) {
    let template = SweepTemplate {
        chain: ChainConfig::atc_platoon(10, AutomatedGains::default(), HumanGains::default(), 25.0)
            .unwrap(),
        lead: LeadProfile::default(),
        settings: SimSettings::default(),
        params: EnergyParams::default(),
    };
    let beta = GainRange {
        start: 0.3,
        end: 1.0,
        step: 0.1,
    };
    let beta_b = GainRange {
        start: 0.0,
        end: 0.4,
        step: 0.1,
    };
    let mut group = c.benchmark_group("energy_sweep_8x5");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| energy_sweep(&template, &beta, &beta_b, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, chart, energy);
criterion_main!(benches);
