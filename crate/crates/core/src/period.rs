//! The asymptotic-period verdict and its consistency checks.
//!
//! For a birth-death chain the asymptotic period is 1, 2 or infinite. It is
//! infinite exactly when `prod p_i > 0`, it is 1 exactly when the double
//! series `sum_j (1/(p_j pi_j)) sum_{k<=j} r_k pi_k` diverges, and 2 in every
//! remaining case.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::chain::ChainSpec;
use crate::error::{BdError, Result};
use crate::qpoly::{self, GrowthAssessment, Route};
use crate::series::{self, Classification, Convergence, ProbePolicy, SeriesProbe, Verdict};

/// Relative tolerance for the agreement of the three `Qbar` routes.
pub const ROUTE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Period {
    One,
    Two,
    Infinite,
    Undecided,
}

impl Period {
    pub fn is_decided(self) -> bool {
        self != Period::Undecided
    }

    /// Whether the period divides `n`. An infinite period divides nothing.
    pub fn divides(self, n: u64) -> Option<bool> {
        match self {
            Period::One => Some(true),
            Period::Two => Some(n.is_multiple_of(2)),
            Period::Infinite => Some(false),
            Period::Undecided => None,
        }
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Period::One => write!(f, "1"),
            Period::Two => write!(f, "2"),
            Period::Infinite => write!(f, "infinite"),
            Period::Undecided => write!(f, "undecided"),
        }
    }
}

// Finite periods are JSON numbers, the others strings.
impl Serialize for Period {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Period::One => s.serialize_u64(1),
            Period::Two => s.serialize_u64(2),
            Period::Infinite => s.serialize_str("infinite"),
            Period::Undecided => s.serialize_str("undecided"),
        }
    }
}

impl<'de> Deserialize<'de> for Period {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(1) => Ok(Period::One),
            Raw::Num(2) => Ok(Period::Two),
            Raw::Text(t) if t == "infinite" => Ok(Period::Infinite),
            Raw::Text(t) if t == "undecided" => Ok(Period::Undecided),
            _ => Err(serde::de::Error::custom("period must be 1, 2, \"infinite\" or \"undecided\"")),
        }
    }
}

/// Sufficient conditions for asymptotic aperiodicity that do not go through
/// the double series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SufficientCondition {
    /// The chain is recurrent.
    Recurrent,
    /// `r_i >= delta > 0` for all but finitely many states.
    DiagonalBound,
    /// `sum r_j / p_j` diverges.
    RpSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossChecks {
    /// Double-series verdict and `Qbar` growth verdict do not contradict.
    pub growth_agreement: bool,
    /// Direct, Sum1 and Sum2 agree to [`ROUTE_TOLERANCE`].
    pub qbar_route_agreement: bool,
    /// Largest relative spread between the routes.
    pub route_disagreement: f64,
    pub route_check_n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodReport {
    pub period: Period,
    pub classification: Classification,
    pub prod_p_verdict: Verdict,
    pub bd1f_verdict: Verdict,
    pub rp_verdict: Verdict,
    pub fired_sufficient_conditions: Vec<SufficientCondition>,
    pub qbar_growth: GrowthAssessment,
    pub cross_checks: CrossChecks,
    /// Internal-consistency violations; empty for a correct implementation.
    pub contradictions: Vec<String>,
    /// Disagreements a longer horizon may resolve.
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl PeriodReport {
    pub fn is_consistent(&self) -> bool {
        self.contradictions.is_empty()
    }

    /// `Err(ContradictionDetected)` if any consistency check failed.
    pub fn ensure_consistent(&self) -> Result<()> {
        if self.contradictions.is_empty() {
            Ok(())
        } else {
            Err(BdError::ContradictionDetected(self.contradictions.join("; ")))
        }
    }
}

/// Infinite test first, then the aperiodicity test, else 2. Undecided
/// needed verdicts make the period undecided.
pub fn period_from_verdicts(prod_p: &Verdict, bd1f: &Verdict) -> Period {
    match prod_p.status {
        Convergence::Undecided => Period::Undecided,
        Convergence::Converges => Period::Infinite,
        Convergence::Diverges => match bd1f.status {
            Convergence::Diverges => Period::One,
            Convergence::Converges => Period::Two,
            Convergence::Undecided => Period::Undecided,
        },
    }
}

/// Evaluates each sufficient condition on its own.
pub fn sufficient_checks(
    chain: &ChainSpec,
    classification: &Classification,
    rp: &Verdict,
) -> Vec<SufficientCondition> {
    let mut fired = Vec::new();
    if classification.class.is_recurrent() {
        fired.push(SufficientCondition::Recurrent);
    }
    if chain.tail().self_rate_bounded_below() {
        fired.push(SufficientCondition::DiagonalBound);
    }
    if rp.status == Convergence::Diverges {
        fired.push(SufficientCondition::RpSeries);
    }
    fired
}

/// Sufficient conditions computed from scratch.
pub fn sufficient_checks_for(chain: &ChainSpec, policy: &ProbePolicy) -> Vec<SufficientCondition> {
    let probe = series::probe(chain, policy);
    let classification =
        Classification::from_verdicts(probe.verdicts.k.clone(), probe.verdicts.l.clone());
    sufficient_checks(chain, &classification, &probe.verdicts.rp)
}

/// Full analysis: series verdicts, period, sufficient conditions and the
/// polynomial cross-checks.
pub fn asymptotic_period(chain: &ChainSpec, policy: &ProbePolicy) -> PeriodReport {
    let probe = series::probe(chain, policy);
    asymptotic_period_from_probe(chain, &probe, policy)
}

pub fn asymptotic_period_from_probe(
    chain: &ChainSpec,
    probe: &SeriesProbe,
    policy: &ProbePolicy,
) -> PeriodReport {
    let v = &probe.verdicts;
    let classification = Classification::from_verdicts(v.k.clone(), v.l.clone());
    let period = period_from_verdicts(&v.prod_p, &v.bd1f);
    let fired = sufficient_checks(chain, &classification, &v.rp);

    let qbar = qpoly::qbar_minus_one(chain, policy.horizon, Route::Sum2);
    let growth = qpoly::growth_verdict(&qbar, &v.bd1f, policy);
    let route_disagreement = qpoly::route_disagreement(chain, policy.route_check_n);

    let mut report = PeriodReport {
        period,
        classification,
        prod_p_verdict: v.prod_p.clone(),
        bd1f_verdict: v.bd1f.clone(),
        rp_verdict: v.rp.clone(),
        fired_sufficient_conditions: fired,
        cross_checks: CrossChecks {
            growth_agreement: growth.consistent,
            qbar_route_agreement: route_disagreement <= ROUTE_TOLERANCE,
            route_disagreement,
            route_check_n: policy.route_check_n,
        },
        qbar_growth: growth,
        contradictions: Vec::new(),
        warnings: Vec::new(),
    };
    report.contradictions = consistency_violations(&report);
    report.warnings = consistency_warnings(&report);
    report
}

/// Every invariant linking the verdicts in a report. A nonempty result
/// always indicates a bug.
pub fn consistency_violations(report: &PeriodReport) -> Vec<String> {
    use Convergence::*;
    let mut out = Vec::new();
    let k = report.classification.k.status;
    let l = report.classification.l.status;
    let prod = report.prod_p_verdict.status;
    let bd1f = report.bd1f_verdict.status;

    if k == Converges && l == Converges {
        out.push("K and L both converge".to_string());
    }
    if prod == Converges && bd1f == Diverges {
        out.push("prod p_i > 0 while the double series diverges".to_string());
    }
    let expected = period_from_verdicts(&report.prod_p_verdict, &report.bd1f_verdict);
    if report.period != expected {
        out.push(format!("period {} does not follow from the verdicts ({expected})", report.period));
    }
    if report.classification.class.is_recurrent() {
        if bd1f == Converges {
            out.push("recurrent chain with a convergent double series".to_string());
        }
        if report.period.is_decided() && report.period != Period::One {
            out.push(format!("recurrent chain with period {}", report.period));
        }
    }
    if !report.fired_sufficient_conditions.is_empty()
        && report.period.is_decided()
        && report.period != Period::One
    {
        out.push(format!(
            "sufficient conditions {:?} fired but period is {}",
            report.fired_sufficient_conditions, report.period
        ));
    }
    if report.fired_sufficient_conditions.contains(&SufficientCondition::RpSeries) && bd1f == Converges {
        out.push("sum r_j/p_j diverges but the double series converges".to_string());
    }
    if !report.cross_checks.qbar_route_agreement {
        out.push(format!(
            "Qbar routes disagree by {:e} (tolerance {ROUTE_TOLERANCE:e})",
            report.cross_checks.route_disagreement
        ));
    }
    out
}

/// A numeric `Qbar` divergence against a convergent double series. Truncated
/// values cannot certify divergence: a convergent series with a slowly
/// decaying tail can push `Qbar` past any threshold, even past saturation.
pub fn consistency_warnings(report: &PeriodReport) -> Vec<String> {
    let numeric = &report.qbar_growth.numeric;
    if qbar_disagrees(report) {
        vec![format!(
            "Qbar_{} = {:e} looks divergent although the double series {}; the horizon may be too short",
            numeric.evidence.horizon_used,
            numeric.evidence.partial_value,
            describe(report.bd1f_verdict.status)
        )]
    } else {
        Vec::new()
    }
}

fn qbar_disagrees(report: &PeriodReport) -> bool {
    let bd1f = report.bd1f_verdict.status;
    let g = &report.qbar_growth.numeric;
    bd1f != Convergence::Undecided && g.is_decided() && g.status != bd1f
}

fn describe(c: Convergence) -> &'static str {
    match c {
        Convergence::Diverges => "diverges",
        Convergence::Converges => "converges",
        Convergence::Undecided => "is undecided",
    }
}

/// If the caller has established `P^(n)(i,i) >= delta > 0` for all but
/// finitely many states, the period must divide `n`.
///
/// Returns whether the computed period divides `n`; a violation under
/// `delta_holds` is a contradiction.
pub fn divisor_check(report: &PeriodReport, n: u64, delta_holds: bool) -> Result<bool> {
    if n == 0 {
        return Err(BdError::InvalidArgument("step count must be positive".into()));
    }
    let divides = report.period.divides(n);
    match divides {
        Some(false) if delta_holds => Err(BdError::ContradictionDetected(format!(
            "period {} does not divide {n} although P^({n})(i,i) is bounded below",
            report.period
        ))),
        Some(d) => Ok(d),
        None => Ok(true),
    }
}
