//! The consolidated JSON documents emitted by the command-line tool.

use serde::{Deserialize, Serialize};

use crate::chain::{ChainDocument, ChainSpec};
use crate::error::{BdError, Result};
use crate::numerics::SATURATED;
use crate::period::{self, Period, PeriodReport};
use crate::qpoly::Route;
use crate::series::{self, ProbePolicy, RecurrenceClass, SeriesProbe, SeriesVerdicts, Verdict};
use crate::sim::{self, EmpiricalReport, PeriodEstimate, ReturnStatistics, SimConfig};

/// Tool version embedded in every document.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Last element of the `Qbar` sequence used for the growth verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QSummary {
    pub route: Route,
    /// Largest index computed.
    pub n: usize,
    /// `Qbar_n`, or `None` once the sequence saturated.
    pub qbar_n: Option<f64>,
    pub saturated: bool,
    pub verdict: Verdict,
}

/// Partial sums of every series at the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSummary {
    pub horizon: usize,
    pub k: f64,
    pub l: f64,
    pub bd1f: f64,
    pub log_prod_p: f64,
    pub rp: f64,
    pub verdicts: SeriesVerdicts,
}

impl SeriesSummary {
    pub fn from_probe(probe: &SeriesProbe) -> Self {
        let last = |v: &[f64]| v.last().copied().unwrap_or(0.0);
        SeriesSummary {
            horizon: probe.horizon,
            k: last(&probe.k_partial),
            l: last(&probe.l_partial),
            bd1f: last(&probe.bd1f_partial),
            log_prod_p: last(&probe.log_prod_p_partial),
            rp: last(&probe.rp_partial),
            verdicts: probe.verdicts.clone(),
        }
    }
}

/// Agreement of the fleet's period estimates with the analytic period.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmpiricalAgreement {
    pub runs: usize,
    /// Runs whose estimate was not inconclusive.
    pub decided_runs: usize,
    pub matching_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsolidatedChecks {
    pub growth_agreement: bool,
    pub qbar_route_agreement: bool,
    pub route_disagreement: f64,
    pub route_check_n: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub empirical: Option<EmpiricalAgreement>,
}

/// Simulation evidence attached to an analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub base_seed: u64,
    pub config: SimConfig,
    pub reports: Vec<EmpiricalReport>,
    pub returns: ReturnStatistics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisBundle {
    pub version: String,
    pub chain: ChainDocument,
    /// Normalizations applied while building the chain.
    pub adjustments: Vec<String>,
    pub policy: ProbePolicy,
    pub period: Period,
    pub report: PeriodReport,
    pub qbar: QSummary,
    pub series: SeriesSummary,
    pub cross_checks: ConsolidatedChecks,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub simulation: Option<Simulation>,
}

impl AnalysisBundle {
    /// Whether every verdict the period depends on was decided.
    pub fn is_decided(&self) -> bool {
        self.period.is_decided()
    }

    pub fn to_json(&self, pretty: bool) -> Result<String> {
        Ok(if pretty {
            serde_json::to_string_pretty(self)?
        } else {
            serde_json::to_string(self)?
        })
    }
}

/// Runs `seeds` trajectories of `config` and aggregates return behaviour,
/// comparing occupation with the stationary law for positive recurrent
/// chains.
pub fn simulate_fleet(
    chain: &ChainSpec,
    probe: Option<&SeriesProbe>,
    base_seed: u64,
    seeds: usize,
    config: &SimConfig,
) -> Result<Simulation> {
    let mut config = config.clone();
    let stationary = probe
        .filter(|p| {
            series::Classification::from_verdicts(p.verdicts.k.clone(), p.verdicts.l.clone()).class
                == RecurrenceClass::PositiveRecurrent
        })
        .map(series::stationary_weights);
    config.occupation = true;
    let member_seeds = if seeds == 1 {
        vec![base_seed]
    } else {
        sim::fleet_seeds(base_seed, seeds)
    };
    let reports = sim::run_fleet(chain, &member_seeds, &config)?;
    let returns = sim::return_statistics(&reports, stationary.as_deref())?;
    Ok(Simulation {
        base_seed,
        config,
        reports,
        returns,
    })
}

/// Joins the analytic cross-checks with the simulation, if any. The report's
/// own contradictions (including `Qbar` saturation against a convergent
/// double series and disagreeing `Qbar` routes) and an analytic period
/// contradicted by a majority of decided simulated estimates are errors.
pub fn cross_validate(report: &PeriodReport, simulation: Option<&[EmpiricalReport]>) -> Result<ConsolidatedChecks> {
    report.ensure_consistent()?;
    let cc = &report.cross_checks;
    let empirical = simulation.map(|reports| {
        let decided: Vec<_> = reports
            .iter()
            .filter(|r| r.period_estimate != PeriodEstimate::Inconclusive)
            .collect();
        EmpiricalAgreement {
            runs: reports.len(),
            decided_runs: decided.len(),
            matching_runs: decided
                .iter()
                .filter(|r| r.period_estimate.matches(report.period))
                .count(),
        }
    });
    if let Some(e) = &empirical {
        if report.period.is_decided() && 2 * e.matching_runs < e.decided_runs {
            return Err(BdError::ContradictionDetected(format!(
                "period {} matched by only {} of {} decided simulation runs",
                report.period, e.matching_runs, e.decided_runs
            )));
        }
    }
    Ok(ConsolidatedChecks {
        growth_agreement: cc.growth_agreement,
        qbar_route_agreement: cc.qbar_route_agreement,
        route_disagreement: cc.route_disagreement,
        route_check_n: cc.route_check_n,
        empirical,
    })
}

/// Optional fleet settings for [`analyze`].
#[derive(Debug, Clone)]
pub struct FleetRequest {
    pub base_seed: u64,
    pub seeds: usize,
    pub config: SimConfig,
}

/// Full analysis of one chain.
pub fn analyze(chain: &ChainSpec, policy: &ProbePolicy, fleet: Option<&FleetRequest>) -> Result<AnalysisBundle> {
    let probe = series::probe(chain, policy);
    let report = period::asymptotic_period_from_probe(chain, &probe, policy);
    let simulation = fleet
        .map(|f| simulate_fleet(chain, Some(&probe), f.base_seed, f.seeds, &f.config))
        .transpose()?;
    let cross_checks = cross_validate(&report, simulation.as_ref().map(|s| s.reports.as_slice()))?;
    let numeric = &report.qbar_growth.numeric;
    let saturated = numeric.evidence.partial_value == SATURATED;
    let qbar = QSummary {
        route: Route::Sum2,
        n: numeric.evidence.horizon_used,
        qbar_n: (!saturated).then_some(numeric.evidence.partial_value),
        saturated,
        verdict: report.qbar_growth.verdict.clone(),
    };
    Ok(AnalysisBundle {
        version: VERSION.to_string(),
        chain: chain.document().clone(),
        adjustments: chain.adjustments().to_vec(),
        policy: *policy,
        period: report.period,
        series: SeriesSummary::from_probe(&probe),
        qbar,
        cross_checks,
        report,
        simulation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::canonical;
    use crate::series::Convergence;

    fn policy() -> ProbePolicy {
        ProbePolicy {
            horizon: 5000,
            ..ProbePolicy::default()
        }
    }

    #[test]
    fn bundle_round_trip() {
        let chain = canonical::period_two();
        let fleet = FleetRequest {
            base_seed: 5,
            seeds: 2,
            config: SimConfig {
                moduli: vec![2, 4],
                ..SimConfig::new(20_000)
            },
        };
        let bundle = analyze(&chain, &policy(), Some(&fleet)).unwrap();
        assert_eq!(bundle.period, Period::Two);
        let text = bundle.to_json(false).unwrap();
        let back: AnalysisBundle = serde_json::from_str(&text).unwrap();
        assert_eq!(back, bundle);
        assert_eq!(back.to_json(false).unwrap(), text);
    }

    #[test]
    fn negated_verdict_is_a_contradiction() {
        let chain = canonical::period_one();
        let mut report = period::asymptotic_period(&chain, &policy());
        assert!(cross_validate(&report, None).unwrap().growth_agreement);
        report.bd1f_verdict.status = Convergence::Converges;
        report.contradictions = period::consistency_violations(&report);
        assert!(matches!(
            cross_validate(&report, None),
            Err(BdError::ContradictionDetected(_))
        ));
    }

    #[test]
    fn disagreeing_fleet_is_a_contradiction() {
        let chain = canonical::period_two();
        let report = period::asymptotic_period(&chain, &policy());
        let cfg = SimConfig::new(20_000);
        let mut reports = sim::run_fleet(&chain, &[1, 2, 3], &cfg).unwrap();
        assert!(cross_validate(&report, Some(&reports)).is_ok());
        for r in reports.iter_mut() {
            r.period_estimate = PeriodEstimate::One;
        }
        assert!(cross_validate(&report, Some(&reports)).is_err());
    }
}
