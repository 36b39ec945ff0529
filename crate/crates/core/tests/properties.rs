mod common;

use bdperiod::chain::{ChainSpec, TailFamily};
use bdperiod::period;
use bdperiod::qpoly::{self, Route};
use bdperiod::series::{self, Convergence, ProbePolicy};
use proptest::prelude::*;

fn row() -> impl Strategy<Value = [f64; 3]> {
    (0.01f64..1.0, 0.0f64..1.0, 0.01f64..1.0).prop_map(|(q, r, p)| {
        let s = q + r + p;
        [q / s, r / s, 1.0 - q / s - r / s]
    })
}

fn tail() -> impl Strategy<Value = TailFamily> {
    prop_oneof![
        (0.05f64..1.0, 0.05f64..1.0, 0.0f64..1.0).prop_map(|(p, q, r)| {
            let s = p + q + r;
            TailFamily::Constant { p: p / s, q: q / s, r: r / s }
        }),
        (0.05f64..1.0, 0.05f64..1.0, 0.0f64..0.9, 0.0f64..1.0)
            .prop_map(|(p, q, c, rho)| TailFamily::GeometricSelf { p, q, c, rho }),
        (0.05f64..1.0, 0.05f64..1.0, 0.0f64..0.9, 0.0f64..3.0)
            .prop_map(|(p, q, c, alpha)| TailFamily::PowerSelf { p, q, c, alpha }),
        (0.01f64..0.9, 0.05f64..0.95).prop_map(|(c, rho)| TailFamily::ProductPositive { c, rho }),
        (0.05f64..0.95).prop_map(|p| TailFamily::ZeroSelfTail { p, q: 1.0 - p }),
        (0.0f64..0.9, 0.0f64..0.45, 0.1f64..3.0).prop_map(|(r, a, omega)| TailFamily::Modulated { r, a, omega }),
    ]
}

fn chain() -> impl Strategy<Value = ChainSpec> {
    (prop::collection::vec(row(), 1..4), tail()).prop_filter_map("valid chain", |(mut prefix, tail)| {
        prefix[0][2] += prefix[0][0];
        prefix[0][0] = 0.0;
        prefix[0][1] = prefix[0][1].max(0.05);
        let s: f64 = prefix[0].iter().sum();
        prefix[0] = [0.0, prefix[0][1] / s, 1.0 - prefix[0][1] / s];
        ChainSpec::new(prefix, tail).ok()
    })
}

fn policy() -> ProbePolicy {
    ProbePolicy {
        horizon: 2000,
        route_check_n: 60,
        ..ProbePolicy::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rows_are_distributions(chain in chain()) {
        for (i, row) in chain.rows(300).iter().enumerate() {
            prop_assert!(row.q >= 0.0 && row.r >= 0.0 && row.p > 0.0);
            prop_assert!((row.q + row.r + row.p - 1.0).abs() <= 1e-12);
            if i == 0 {
                prop_assert_eq!(row.q, 0.0);
            } else {
                // q_i may underflow for geometric tails; its logarithm may not.
                prop_assert!(chain.ln_q(i).is_finite());
            }
        }
    }

    #[test]
    fn qbar_monotone_and_routes_agree(chain in chain()) {
        let runs = [Route::Direct, Route::Sum1, Route::Sum2].map(|r| qpoly::qbar_minus_one(&chain, 100, r));
        for s in &runs {
            prop_assert!(qpoly::is_monotone_from_one(&s.values));
        }
        if runs.iter().all(|s| !s.is_saturated()) {
            prop_assert!(qpoly::route_disagreement(&chain, 100) <= 1e-10);
        }
    }

    #[test]
    fn k_and_l_never_both_converge(chain in chain()) {
        let c = series::classify(&chain, &policy());
        prop_assert!(!(c.k.status == Convergence::Converges && c.l.status == Convergence::Converges));
    }

    #[test]
    fn bd1f_dominates_rp(chain in chain()) {
        let probe = series::probe(&chain, &policy());
        for (b, r) in probe.bd1f_partial.iter().zip(&probe.rp_partial) {
            prop_assert!(*b >= r * (1.0 - 1e-12));
        }
        prop_assert!(probe.log_prod_p_partial.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn reports_are_consistent(chain in chain()) {
        let report = period::asymptotic_period(&chain, &policy());
        prop_assert!(report.is_consistent(), "{:?}", report.contradictions);
    }

    #[test]
    fn documents_round_trip(chain in chain()) {
        let text = serde_json::to_string(chain.document()).unwrap();
        let again = ChainSpec::from_json_str(&text).unwrap();
        prop_assert_eq!(again.rows(50), chain.rows(50));
    }
}

#[test]
fn fleet_reports_are_consistent() {
    for (name, chain) in common::fleet() {
        let report = period::asymptotic_period(&chain, &ProbePolicy::default());
        assert!(report.is_consistent(), "{name}: {:?}", report.contradictions);
    }
}

#[test]
fn slowly_convergent_tail_warns_instead_of_contradicting() {
    // Summable self rates decaying like 1/i^1.07: the double series
    // converges, but Qbar keeps doubling well past the threshold.
    let chain = ChainSpec::new(
        vec![[0.0, 0.047619047619047616, 0.9523809523809523]],
        TailFamily::PowerSelf { p: 0.830334627965853, q: 0.5932621779526367, c: 0.7167172146957401, alpha: 1.0684396758185708 },
    )
    .unwrap();
    let report = period::asymptotic_period(&chain, &policy());
    assert_eq!(report.bd1f_verdict.status, Convergence::Converges);
    assert!(report.is_consistent(), "{:?}", report.contradictions);
    assert!(!report.cross_checks.growth_agreement);
    assert_eq!(report.warnings.len(), 1);
}
