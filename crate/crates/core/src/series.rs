//! Potential coefficients and the convergence verdicts built on them.
//!
//! With `pi_0 = 1` and `pi_n = (p_0 ... p_{n-1}) / (q_1 ... q_n)` the chain is
//! classified by the partial sums
//!
//! ```text
//! K_n = sum_{j<=n} pi_j        L_n = sum_{j<=n} 1 / (p_j pi_j)
//! ```
//!
//! and its asymptotic period by `prod p_i` and the double series
//! `sum_j (1 / (p_j pi_j)) sum_{k<=j} r_k pi_k`. Everything is accumulated
//! in log domain or with explicit rescaling since `pi_n` leaves the `f64`
//! range long before the default horizon on transient chains.

use serde::{Deserialize, Serialize};

use crate::chain::{ChainSpec, TailFamily};
use crate::numerics::{saturating_add, saturating_exp, ScaledSum, SATURATED};

/// Truncation and threshold settings shared by every series computation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbePolicy {
    /// Largest index `N` of every partial sum.
    pub horizon: usize,
    /// A partial sum above this value is numerically declared divergent.
    pub divergence_threshold: f64,
    /// `Qbar_N` above this value is numerically declared divergent.
    pub qbar_threshold: f64,
    /// Largest index at which the three `Qbar` routes are compared.
    pub route_check_n: usize,
}

pub const DEFAULT_HORIZON: usize = 100_000;

impl Default for ProbePolicy {
    fn default() -> Self {
        ProbePolicy {
            horizon: DEFAULT_HORIZON,
            divergence_threshold: 1e8,
            qbar_threshold: 1e12,
            route_check_n: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convergence {
    Diverges,
    Converges,
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Analytic,
    NumericThreshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub method: Method,
    pub horizon_used: usize,
    /// Partial sum (or other monitored quantity) at the horizon.
    pub partial_value: f64,
    /// Short description of the rule that produced the verdict.
    pub rule: String,
}

/// A three-valued convergence decision together with how it was reached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Convergence,
    pub evidence: Evidence,
}

impl Verdict {
    pub fn analytic(status: Convergence, rule: &str, horizon: usize, partial: f64) -> Self {
        debug_assert!(status != Convergence::Undecided);
        Verdict {
            status,
            evidence: Evidence {
                method: Method::Analytic,
                horizon_used: horizon,
                partial_value: partial,
                rule: rule.to_string(),
            },
        }
    }

    /// Numeric fallback: divergent once the monitored value passes the
    /// threshold, otherwise undecided. Convergence is never certified this way.
    pub fn numeric(partial: f64, threshold: f64, horizon: usize) -> Self {
        let (status, rule) = if partial > threshold {
            (Convergence::Diverges, format!("partial value exceeded {threshold:e}"))
        } else {
            (Convergence::Undecided, format!("partial value stayed below {threshold:e}"))
        };
        Verdict {
            status,
            evidence: Evidence {
                method: Method::NumericThreshold,
                horizon_used: horizon,
                partial_value: partial,
                rule,
            },
        }
    }

    pub fn is_decided(&self) -> bool {
        self.status != Convergence::Undecided
    }
}

/// The five infinite series the criteria depend on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    /// `sum pi_j`
    K,
    /// `sum 1 / (p_j pi_j)`
    L,
    /// `sum_j (1 / (p_j pi_j)) sum_{k<=j} r_k pi_k`
    Bd1f,
    /// `-sum ln p_i`; divergence means `prod p_i = 0`.
    ProdP,
    /// `sum r_j / p_j`
    Rp,
}

/// Recurrence class read off the `(K, L)` verdict pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecurrenceClass {
    PositiveRecurrent,
    NullRecurrent,
    Transient,
    Undecided,
}

impl RecurrenceClass {
    pub fn is_recurrent(self) -> bool {
        matches!(self, RecurrenceClass::PositiveRecurrent | RecurrenceClass::NullRecurrent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: RecurrenceClass,
    pub k: Verdict,
    pub l: Verdict,
}

impl Classification {
    pub fn from_verdicts(k: Verdict, l: Verdict) -> Self {
        use Convergence::*;
        let class = match (k.status, l.status) {
            (Converges, Diverges) => RecurrenceClass::PositiveRecurrent,
            (Diverges, Diverges) => RecurrenceClass::NullRecurrent,
            (Diverges, Converges) => RecurrenceClass::Transient,
            // (Converges, Converges) cannot happen for a valid chain; the
            // period engine reports it as a contradiction.
            _ => RecurrenceClass::Undecided,
        };
        Classification { class, k, l }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesVerdicts {
    pub k: Verdict,
    pub l: Verdict,
    pub bd1f: Verdict,
    pub prod_p: Verdict,
    pub rp: Verdict,
}

/// Partial sums `n = 0..=horizon` of every series, with verdicts.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesProbe {
    pub horizon: usize,
    pub log_pi: Vec<f64>,
    pub k_partial: Vec<f64>,
    pub l_partial: Vec<f64>,
    pub bd1f_partial: Vec<f64>,
    /// `sum_{i<=n} ln p_i`; nonincreasing.
    pub log_prod_p_partial: Vec<f64>,
    pub rp_partial: Vec<f64>,
    pub verdicts: SeriesVerdicts,
}

/// Per-index terms of all series, produced incrementally.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTerms {
    pub n: usize,
    pub ln_pi: f64,
    pub ln_p: f64,
    /// `pi_n`, saturating.
    pub k_term: f64,
    /// `1 / (p_n pi_n)`, saturating.
    pub l_term: f64,
    /// `(1 / (p_n pi_n)) sum_{k<=n} r_k pi_k`, saturating.
    pub bd1f_term: f64,
    /// `r_n / p_n`
    pub rp_term: f64,
}

/// Iterator over [`SeriesTerms`] for `n = 0, 1, 2, ...`.
///
/// The inner sum of the double series is carried relative to `pi_n`:
/// `R_n = sum_{k<=n} r_k pi_k / pi_n = R_{n-1} * (q_n / p_{n-1}) + r_n`,
/// held as a [`ScaledSum`] so neither huge nor tiny `pi_n` overflow it.
#[derive(Debug, Clone)]
pub struct SeriesWalk<'a> {
    chain: &'a ChainSpec,
    n: usize,
    ln_pi: f64,
    prev_ln_p: f64,
    inner: ScaledSum,
}

impl<'a> SeriesWalk<'a> {
    pub fn new(chain: &'a ChainSpec) -> Self {
        SeriesWalk {
            chain,
            n: 0,
            ln_pi: 0.0,
            prev_ln_p: 0.0,
            inner: ScaledSum::zero(),
        }
    }
}

impl Iterator for SeriesWalk<'_> {
    type Item = SeriesTerms;

    fn next(&mut self) -> Option<SeriesTerms> {
        let n = self.n;
        let row = self.chain.row(n);
        let ln_p = self.chain.ln_p(n);
        if n > 0 {
            let ln_ratio = self.prev_ln_p - self.chain.ln_q(n);
            self.ln_pi += ln_ratio;
            self.inner.scale_by_ln(-ln_ratio);
        }
        self.inner.add(row.r);
        let bd1f_term = if self.inner.is_zero() {
            0.0
        } else {
            saturating_exp(self.inner.ln() - ln_p)
        };
        self.prev_ln_p = ln_p;
        self.n += 1;
        Some(SeriesTerms {
            n,
            ln_pi: self.ln_pi,
            ln_p,
            k_term: saturating_exp(self.ln_pi),
            l_term: saturating_exp(-ln_p - self.ln_pi),
            bd1f_term,
            rp_term: row.r / row.p,
        })
    }
}

/// `ln pi_0 ..= ln pi_horizon`.
pub fn potential_coefficients(chain: &ChainSpec, horizon: usize) -> Vec<f64> {
    SeriesWalk::new(chain).take(horizon + 1).map(|t| t.ln_pi).collect()
}

/// Partial sums `S_0 ..= S_horizon` of the double series.
pub fn bd1f_series(chain: &ChainSpec, horizon: usize) -> Vec<f64> {
    cumulative(SeriesWalk::new(chain).take(horizon + 1).map(|t| t.bd1f_term))
}

/// Partial sums of `ln p_i` and the verdict on `prod p_i > 0`
/// (`Diverges` means the product is zero).
pub fn log_product_p(chain: &ChainSpec, policy: &ProbePolicy) -> (Vec<f64>, Verdict) {
    let mut acc = 0.0;
    let partial: Vec<f64> = SeriesWalk::new(chain)
        .take(policy.horizon + 1)
        .map(|t| {
            acc += t.ln_p;
            acc
        })
        .collect();
    let last = -partial.last().copied().unwrap_or(0.0);
    let verdict = decide_series(chain, SeriesKind::ProdP, last, policy);
    (partial, verdict)
}

fn cumulative(terms: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    terms
        .map(|t| {
            acc = saturating_add(acc, t);
            acc
        })
        .collect()
}

/// Runs every series to `policy.horizon` and decides each one.
pub fn probe(chain: &ChainSpec, policy: &ProbePolicy) -> SeriesProbe {
    let len = policy.horizon + 1;
    let mut log_pi = Vec::with_capacity(len);
    let mut k_partial = Vec::with_capacity(len);
    let mut l_partial = Vec::with_capacity(len);
    let mut bd1f_partial = Vec::with_capacity(len);
    let mut log_prod_p_partial = Vec::with_capacity(len);
    let mut rp_partial = Vec::with_capacity(len);
    let (mut k, mut l, mut s, mut lp, mut rp) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for t in SeriesWalk::new(chain).take(len) {
        k = saturating_add(k, t.k_term);
        l = saturating_add(l, t.l_term);
        s = saturating_add(s, t.bd1f_term);
        lp += t.ln_p;
        rp = saturating_add(rp, t.rp_term);
        log_pi.push(t.ln_pi);
        k_partial.push(k);
        l_partial.push(l);
        bd1f_partial.push(s);
        log_prod_p_partial.push(lp);
        rp_partial.push(rp);
    }
    let verdicts = SeriesVerdicts {
        k: decide_series(chain, SeriesKind::K, k, policy),
        l: decide_series(chain, SeriesKind::L, l, policy),
        bd1f: decide_series(chain, SeriesKind::Bd1f, s, policy),
        prod_p: decide_series(chain, SeriesKind::ProdP, -lp, policy),
        rp: decide_series(chain, SeriesKind::Rp, rp, policy),
    };
    SeriesProbe {
        horizon: policy.horizon,
        log_pi,
        k_partial,
        l_partial,
        bd1f_partial,
        log_prod_p_partial,
        rp_partial,
        verdicts,
    }
}

/// Recurrence classification from the `K` and `L` verdicts.
pub fn classify(chain: &ChainSpec, policy: &ProbePolicy) -> Classification {
    let (mut k, mut l) = (0.0, 0.0);
    for t in SeriesWalk::new(chain).take(policy.horizon + 1) {
        k = saturating_add(k, t.k_term);
        l = saturating_add(l, t.l_term);
    }
    Classification::from_verdicts(
        decide_series(chain, SeriesKind::K, k, policy),
        decide_series(chain, SeriesKind::L, l, policy),
    )
}

/// Decides one series from the tail family when a closed-form rule exists,
/// otherwise from the partial value at the horizon.
///
/// For [`SeriesKind::ProdP`] `partial` is `-sum ln p_i`.
pub fn decide_series(
    chain: &ChainSpec,
    kind: SeriesKind,
    partial: f64,
    policy: &ProbePolicy,
) -> Verdict {
    match analytic_rule(chain.tail(), kind) {
        Some((status, rule)) => Verdict::analytic(status, rule, policy.horizon, partial),
        None => Verdict::numeric(partial, policy.divergence_threshold, policy.horizon),
    }
}

/// Closed-form verdicts for the supported tail families.
///
/// The prefix only contributes finitely many terms, so each verdict depends
/// on the tail alone. The inner sums of the double series do pick up the
/// prefix, but every valid chain has some `r_k pi_k > 0`, which is all the
/// rules below rely on.
pub fn analytic_rule(tail: &TailFamily, kind: SeriesKind) -> Option<(Convergence, &'static str)> {
    use Convergence::*;
    match *tail {
        TailFamily::Constant { p, q, r } => Some(ratio_rule(kind, p, q, r > 0.0)),
        TailFamily::ZeroSelfTail { p, q } => Some(ratio_rule(kind, p, q, false)),
        TailFamily::GeometricSelf { p, q, c, rho } => {
            Some(ratio_rule(kind, p, q, c > 0.0 && rho == 1.0))
        }
        TailFamily::PowerSelf { p, q, c, alpha } => {
            Some(ratio_rule(kind, p, q, c > 0.0 && alpha <= 1.0))
        }
        TailFamily::ProductPositive { .. } => Some(match kind {
            SeriesKind::K => (Diverges, "pi_n grows faster than any geometric sequence"),
            SeriesKind::L => (Converges, "1/(p_n pi_n) decays faster than any geometric sequence"),
            SeriesKind::ProdP => (Converges, "sum of 1 - p_i = sum c rho^i is finite"),
            SeriesKind::Rp => (Converges, "r_i / p_i is dominated by a geometric sequence"),
            SeriesKind::Bd1f => (
                Converges,
                "pi_n increasing with pi_(n-1)/pi_n = O(rho^n): terms are O(rho^n)",
            ),
        }),
        TailFamily::Modulated { r, a, .. } => {
            if a == 0.0 {
                return Some(ratio_rule(kind, 0.5, 0.5, r > 0.0));
            }
            match kind {
                SeriesKind::ProdP => Some((Diverges, "tail birth rates bounded by (1-r)(1/2+a) < 1")),
                SeriesKind::Rp if r > 0.0 => Some((Diverges, "r_i / p_i bounded below by r")),
                SeriesKind::Rp => Some((Converges, "finitely many nonzero terms")),
                SeriesKind::Bd1f if r > 0.0 => {
                    Some((Diverges, "dominates sum r_j / p_j, which diverges"))
                }
                _ => None,
            }
        }
    }
}

/// Rules for the families whose tail satisfies
/// `p_i / q_{i+1} = (p/q) * (1 - r_i) / (1 - r_{i+1})`, so that `pi_n` is
/// within constant factors of `(p/q)^n`, and `p_i` is bounded away from 0 and 1.
/// `self_diverges` says whether `sum r_i` diverges.
fn ratio_rule(kind: SeriesKind, p: f64, q: f64, self_diverges: bool) -> (Convergence, &'static str) {
    use Convergence::*;
    match kind {
        SeriesKind::K if p >= q => (Diverges, "pi_n comparable to (p/q)^n with p >= q"),
        SeriesKind::K => (Converges, "pi_n comparable to (p/q)^n with p < q"),
        SeriesKind::L if p <= q => (Diverges, "1/(p_n pi_n) comparable to (q/p)^n with p <= q"),
        SeriesKind::L => (Converges, "1/(p_n pi_n) comparable to (q/p)^n with p > q"),
        SeriesKind::ProdP => (Diverges, "tail birth rates bounded away from one"),
        SeriesKind::Rp if self_diverges => (Diverges, "sum of tail self rates diverges"),
        SeriesKind::Rp => (Converges, "sum of tail self rates converges"),
        SeriesKind::Bd1f if p <= q => (Diverges, "L diverges and some r_k pi_k > 0"),
        SeriesKind::Bd1f if self_diverges => (Diverges, "dominates sum r_j / p_j, which diverges"),
        SeriesKind::Bd1f => (
            Converges,
            "transient tail: terms are a geometric kernel convolved with summable r_k",
        ),
    }
}

/// Stationary law `pi_j / K` for `j <= horizon`, using the `K` partial sum at
/// the horizon as the normalizer.
pub fn stationary_weights(probe: &SeriesProbe) -> Vec<f64> {
    let ln_k = probe.k_partial.last().copied().unwrap_or(1.0).ln();
    if probe.k_partial.last().copied() == Some(SATURATED) {
        return vec![0.0; probe.log_pi.len()];
    }
    probe.log_pi.iter().map(|lp| (lp - ln_k).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::canonical;

    fn policy(horizon: usize) -> ProbePolicy {
        ProbePolicy {
            horizon,
            ..ProbePolicy::default()
        }
    }

    /// Direct product oracle for pi_n.
    fn pi_direct(chain: &ChainSpec, n: usize) -> f64 {
        (0..n).map(|i| chain.row(i).p / chain.row(i + 1).q).product()
    }

    #[test]
    fn log_pi_matches_direct_product() {
        let chain = canonical::period_two();
        let lp = potential_coefficients(&chain, 30);
        assert_eq!(lp[0], 0.0);
        assert!((lp[1].exp() - 5.0 / 3.0).abs() < 1e-14);
        assert!((lp[2].exp() - 35.0 / 9.0).abs() < 1e-13);
        for chain in [canonical::period_one(), canonical::positive_recurrent(), canonical::period_infinite()] {
            let lp = potential_coefficients(&chain, 30);
            for (n, l) in lp.iter().enumerate() {
                let d = pi_direct(&chain, n);
                assert!(((l.exp() - d) / d).abs() < 1e-10, "n={n}");
            }
        }
    }

    #[test]
    fn symmetric_chain_has_unit_coefficients() {
        let chain = ChainSpec::new(vec![[0.0, 0.55, 0.45]], TailFamily::Constant { p: 0.45, q: 0.45, r: 0.1 }).unwrap();
        for l in potential_coefficients(&chain, 50) {
            assert!(l.abs() < 1e-13);
        }
    }

    #[test]
    fn classification_examples() {
        let p = policy(2000);
        assert_eq!(classify(&canonical::positive_recurrent(), &p).class, RecurrenceClass::PositiveRecurrent);
        assert_eq!(classify(&canonical::null_recurrent(), &p).class, RecurrenceClass::NullRecurrent);
        assert_eq!(classify(&canonical::period_two(), &p).class, RecurrenceClass::Transient);
        assert_eq!(classify(&canonical::period_infinite(), &p).class, RecurrenceClass::Transient);
    }

    #[test]
    fn bd1f_period_two_is_half_of_l() {
        // r_k = 0 for k >= 1, so the inner sum is r_0 pi_0 = 1/2 throughout.
        let chain = canonical::period_two();
        let pr = probe(&chain, &policy(500));
        for (s, l) in pr.bd1f_partial.iter().zip(&pr.l_partial) {
            assert!((s - 0.5 * l).abs() <= 1e-14 * l);
        }
        // L_inf = 1/p_0 + (6/7) / (1 - 3/7) = 2 + 3/2.
        assert!((pr.l_partial[500] - 3.5).abs() < 1e-12);
        assert_eq!(pr.verdicts.bd1f.status, Convergence::Converges);
    }

    #[test]
    fn bd1f_linear_lower_bound() {
        let chain = canonical::period_one();
        let s = bd1f_series(&chain, 1000);
        for (n, v) in s.iter().enumerate() {
            // r_0/p_0 = 0.7/0.3 for the folded boundary row, then 1/6 per state.
            assert!(*v >= (n as f64) / 6.0);
        }
    }

    #[test]
    fn product_of_birth_rates() {
        let (partial, verdict) = log_product_p(&canonical::period_infinite(), &policy(2000));
        assert_eq!(verdict.status, Convergence::Converges);
        assert!(*partial.last().unwrap() > 0.5f64.ln());
        let constant = ChainSpec::new(vec![[0.0, 0.3, 0.7]], TailFamily::Constant { p: 0.7, q: 0.2, r: 0.1 }).unwrap();
        let (partial, verdict) = log_product_p(&constant, &policy(100));
        assert_eq!(verdict.status, Convergence::Diverges);
        assert!((partial[100] - 101.0 * 0.7f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn decide_fallbacks() {
        let exotic = ChainSpec::new(
            vec![[0.0, 0.5, 0.5]],
            TailFamily::Modulated { r: 0.0, a: 0.25, omega: 1.0 },
        )
        .unwrap();
        let v = decide_series(&exotic, SeriesKind::Bd1f, 10.0, &ProbePolicy::default());
        assert_eq!(v.status, Convergence::Undecided);
        assert_eq!(v.evidence.method, Method::NumericThreshold);
        let v = decide_series(&exotic, SeriesKind::K, 2e8, &ProbePolicy::default());
        assert_eq!(v.status, Convergence::Diverges);
        let v = decide_series(&canonical::null_recurrent(), SeriesKind::K, 10.0, &ProbePolicy::default());
        assert_eq!(v.status, Convergence::Diverges);
        assert_eq!(v.evidence.method, Method::Analytic);
        let transient = ChainSpec::new(vec![], TailFamily::Constant { p: 0.6, q: 0.3, r: 0.1 }).unwrap();
        let v = decide_series(&transient, SeriesKind::L, 1.0, &ProbePolicy::default());
        assert_eq!(v.status, Convergence::Converges);
    }

    #[test]
    fn recurrent_partial_sums_saturate_cleanly() {
        let pr = probe(&canonical::positive_recurrent(), &policy(5000));
        assert_eq!(*pr.l_partial.last().unwrap(), SATURATED);
        assert!(pr.bd1f_partial.iter().all(|v| v.is_finite()));
        assert!((pr.k_partial[5000] - 2.0).abs() < 1e-12);
    }
}
