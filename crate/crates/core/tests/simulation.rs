use bdperiod::chain::canonical;
use bdperiod::report;
use bdperiod::series::{self, ProbePolicy};
use bdperiod::sim::{self, ReturnEvidence, SimConfig};
use bdperiod::ChainSpec;

fn evidence(chain: &ChainSpec, seeds: usize, steps: u64) -> sim::ReturnStatistics {
    let probe = series::probe(chain, &ProbePolicy { horizon: 10_000, ..ProbePolicy::default() });
    report::simulate_fleet(chain, Some(&probe), 17, seeds, &SimConfig::new(steps))
        .unwrap()
        .returns
}

#[test]
fn null_recurrent_occupation_does_not_stabilize() {
    let stats = evidence(&canonical::null_recurrent(), 20, 1_000_000);
    assert_eq!(stats.returned_runs, 20);
    // Visits to 0 grow like sqrt(n): second half over first is about 0.41.
    let ratio = stats.start_visit_ratio.unwrap();
    assert!((0.3..0.55).contains(&ratio), "{ratio}");
    assert_eq!(stats.evidence, ReturnEvidence::NullRecurrentConsistent);
}

#[test]
fn positive_recurrent_occupation_stabilizes() {
    let stats = evidence(&canonical::positive_recurrent(), 8, 200_000);
    assert_eq!(stats.evidence, ReturnEvidence::PositiveRecurrentConsistent);
    assert!(stats.max_occupation_tv.unwrap() < 0.02);
}

#[test]
fn transient_fleet_misses_returns() {
    let stats = evidence(&canonical::period_two(), 40, 50_000);
    assert!(stats.return_fraction < 1.0);
    assert_eq!(stats.evidence, ReturnEvidence::TransientConsistent);
    assert_eq!(stats.max_occupation_tv, None);
}

#[test]
fn fleets_are_reproducible_and_ordered() {
    let chain = canonical::period_one();
    let cfg = SimConfig { moduli: vec![2, 3], ..SimConfig::new(40_000) };
    let seeds = sim::fleet_seeds(5, 6);
    let a = sim::run_fleet(&chain, &seeds, &cfg).unwrap();
    let b = sim::run_fleet(&chain, &seeds, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.iter().map(|r| r.seed).collect::<Vec<_>>(), seeds);
    let table = sim::StepTable::new(&chain, 40_000);
    assert_eq!(sim::run_one(&table, seeds[3], &cfg).unwrap(), a[3]);
}
