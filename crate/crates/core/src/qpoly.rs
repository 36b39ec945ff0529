//! Birth-death polynomials `Q_n(x)`.
//!
//! The sequence is fixed by
//!
//! ```text
//! Q_0(x) = 1,   p_0 Q_1(x) = x - r_0,
//! x Q_n(x) = q_n Q_{n-1}(x) + r_n Q_n(x) + p_n Q_{n+1}(x),
//! ```
//!
//! i.e. `P Q(x) = x Q(x)` for the column vector `Q(x)`. The quantity of
//! interest is `Qbar_n = (-1)^n Q_n(-1)`, which is positive and
//! nondecreasing; whether it is bounded decides if the 2-step chain has a
//! nonconstant bounded harmonic function.

use serde::{Deserialize, Serialize};

use crate::chain::ChainSpec;
use crate::error::{BdError, Result};
use crate::numerics::ScaledSum;
use crate::series::{ProbePolicy, SeriesWalk, Verdict};

/// Magnitude past which values are considered saturated.
pub const SATURATION: f64 = 1e300;

/// The three algebraically equivalent ways to compute `Qbar_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Three-term recurrence at `x = -1`, written for the sign-stripped values.
    Direct,
    /// `Qbar_{n+1} = 1 + 2 sum_{j<=n} (1/(p_j pi_j)) sum_{k<=j} r_k pi_k Qbar_k`.
    Sum1,
    /// `Qbar_{n+1} = Qbar_n + (2/(p_n pi_n)) sum_{k<=n} r_k pi_k Qbar_k`.
    Sum2,
}

impl std::str::FromStr for Route {
    type Err = BdError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "direct" => Ok(Route::Direct),
            "sum1" => Ok(Route::Sum1),
            "sum2" => Ok(Route::Sum2),
            other => Err(BdError::InvalidArgument(format!(
                "unknown route {other:?} (expected direct, sum1 or sum2)"
            ))),
        }
    }
}

/// Values `Q_0(x) ..` up to the horizon or the first saturated index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QSequence {
    pub x: f64,
    /// `true` when `values[n] = (-1)^n Q_n(x)`.
    pub sign_stripped: bool,
    pub horizon: usize,
    pub values: Vec<f64>,
    /// First index whose magnitude exceeded [`SATURATION`]; `values` stops
    /// just before it.
    pub saturated_at: Option<usize>,
}

impl QSequence {
    fn collect(x: f64, sign_stripped: bool, horizon: usize, iter: impl Iterator<Item = f64>) -> Self {
        let mut values = Vec::with_capacity(horizon.min(1 << 20) + 1);
        let mut saturated_at = None;
        for (n, v) in iter.take(horizon + 1).enumerate() {
            if !(v.abs() <= SATURATION) {
                saturated_at = Some(n);
                break;
            }
            values.push(v);
        }
        QSequence {
            x,
            sign_stripped,
            horizon,
            values,
            saturated_at,
        }
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("Q_0 is always present")
    }

    pub fn is_saturated(&self) -> bool {
        self.saturated_at.is_some()
    }
}

/// Forward recurrence written in difference form,
/// `p_n (Q_{n+1} - Q_n) = (x - 1) Q_n + q_n (Q_n - Q_{n-1})`,
/// which keeps `Q_n(1) = 1` exact and avoids cancellation near `x = 1`.
struct Recurrence<'a> {
    chain: &'a ChainSpec,
    x: f64,
    n: usize,
    q: f64,
    diff: f64,
}

impl Iterator for Recurrence<'_> {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let out = self.q;
        let row = self.chain.row(self.n);
        self.diff = ((self.x - 1.0) * self.q + row.q * self.diff) / row.p;
        self.q += self.diff;
        self.n += 1;
        Some(out)
    }
}

/// `Q_0(x) ..= Q_horizon(x)`.
pub fn q_eval(chain: &ChainSpec, x: f64, horizon: usize) -> QSequence {
    let rec = Recurrence {
        chain,
        x,
        n: 0,
        q: 1.0,
        diff: 0.0,
    };
    QSequence::collect(x, false, horizon, rec)
}

/// The three-term recurrence at `x = -1` with the sign stripped,
/// `p_n (Qbar_{n+1} - Qbar_n) = 2 r_n Qbar_n + q_n (Qbar_n - Qbar_{n-1})`.
/// Every term is nonnegative; the alternating form loses an ulp per step.
struct Stripped<'a> {
    chain: &'a ChainSpec,
    n: usize,
    q: f64,
    diff: f64,
}

impl<'a> Stripped<'a> {
    fn new(chain: &'a ChainSpec) -> Self {
        Stripped {
            chain,
            n: 0,
            q: 1.0,
            diff: 0.0,
        }
    }
}

impl Iterator for Stripped<'_> {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let out = self.q;
        let row = self.chain.row(self.n);
        self.diff = (2.0 * row.r * self.q + row.q * self.diff) / row.p;
        self.q += self.diff;
        self.n += 1;
        Some(out)
    }
}

/// `Qbar_0 ..= Qbar_horizon` by the chosen route.
pub fn qbar_minus_one(chain: &ChainSpec, horizon: usize, route: Route) -> QSequence {
    match route {
        Route::Direct => QSequence::collect(-1.0, true, horizon, Stripped::new(chain)),
        Route::Sum1 => QSequence::collect(-1.0, true, horizon, Sum1::new(chain)),
        Route::Sum2 => QSequence::collect(-1.0, true, horizon, Sum2::new(chain)),
    }
}

/// Double-sum route: explicit `pi_j` (log domain) and a running inner sum
/// `T_j = sum_{k<=j} r_k pi_k Qbar_k` held as a [`ScaledSum`].
struct Sum1<'a> {
    chain: &'a ChainSpec,
    walk: SeriesWalk<'a>,
    qbar: f64,
    inner: ScaledSum,
    outer: f64,
}

impl<'a> Sum1<'a> {
    fn new(chain: &'a ChainSpec) -> Self {
        Sum1 {
            chain,
            walk: SeriesWalk::new(chain),
            qbar: 1.0,
            inner: ScaledSum::zero(),
            outer: 0.0,
        }
    }
}

impl Iterator for Sum1<'_> {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let out = self.qbar;
        let t = self.walk.next()?;
        let r = self.chain.row(t.n).r;
        if r > 0.0 {
            self.inner.add_ln(r.ln() + t.ln_pi + self.qbar.ln());
        }
        if !self.inner.is_zero() {
            self.outer += (self.inner.ln() - t.ln_p - t.ln_pi).exp();
        }
        self.qbar = 1.0 + 2.0 * self.outer;
        Some(out)
    }
}

/// Incremental route with the inner sum carried relative to `pi_n`:
/// `W_n = sum_{k<=n} r_k pi_k Qbar_k / pi_n = W_{n-1} q_n / p_{n-1} + r_n Qbar_n`.
struct Sum2<'a> {
    chain: &'a ChainSpec,
    n: usize,
    prev_ln_p: f64,
    qbar: f64,
    inner: ScaledSum,
}

impl<'a> Sum2<'a> {
    fn new(chain: &'a ChainSpec) -> Self {
        Sum2 {
            chain,
            n: 0,
            prev_ln_p: 0.0,
            qbar: 1.0,
            inner: ScaledSum::zero(),
        }
    }
}

impl Iterator for Sum2<'_> {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let out = self.qbar;
        let n = self.n;
        let row = self.chain.row(n);
        let ln_p = self.chain.ln_p(n);
        if n > 0 {
            self.inner.scale_by_ln(self.chain.ln_q(n) - self.prev_ln_p);
        }
        self.inner.add(row.r * self.qbar);
        if !self.inner.is_zero() {
            self.qbar += 2.0 * (self.inner.ln() - ln_p).exp();
        }
        self.prev_ln_p = ln_p;
        self.n += 1;
        Some(out)
    }
}

/// `ln prod_{j<=n} (1 + beta_j)` for `n = 0..=horizon`, with
/// `beta_j = (2/(p_j pi_j)) sum_{k<=j} r_k pi_k`. Entry `n` bounds
/// `ln Qbar_{n+1}`.
pub fn log_product_bound(chain: &ChainSpec, horizon: usize) -> Vec<f64> {
    let mut acc = 0.0;
    SeriesWalk::new(chain)
        .take(horizon + 1)
        .map(|t| {
            acc += (2.0 * t.bd1f_term).ln_1p();
            acc
        })
        .collect()
}

/// Outcome of the growth test for `Qbar_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthAssessment {
    /// Combined verdict: the analytic one when decided, else the numeric one.
    pub verdict: Verdict,
    /// Delegated to the double-series verdict through the equivalence
    /// "Qbar_n unbounded iff the double series diverges".
    pub analytic: Verdict,
    /// Threshold test on the computed sequence.
    pub numeric: Verdict,
    /// `false` when the two routes reached opposite decided verdicts.
    pub consistent: bool,
}

/// Decides whether `Qbar_n -> infinity`.
///
/// The numeric route needs `Qbar_N` above the threshold and still growing:
/// at least doubled since `Qbar_{N/2}`. A bounded sequence can settle above
/// any fixed threshold, but then stops growing.
pub fn growth_verdict(qbar: &QSequence, bd1f: &Verdict, policy: &ProbePolicy) -> GrowthAssessment {
    let n = qbar.values.len() - 1;
    let numeric = if qbar.is_saturated() {
        Verdict::numeric(f64::MAX, policy.qbar_threshold, n)
    } else if qbar.last() >= 2.0 * qbar.values[n / 2] {
        Verdict::numeric(qbar.last(), policy.qbar_threshold, n)
    } else {
        let mut v = Verdict::numeric(qbar.last(), f64::INFINITY, n);
        v.evidence.rule = format!("Qbar_N = {:e} less than twice Qbar_(N/2)", qbar.last());
        v
    };
    let analytic = bd1f.clone();
    let consistent = !(analytic.is_decided()
        && numeric.is_decided()
        && analytic.status != numeric.status);
    let verdict = if analytic.is_decided() {
        analytic.clone()
    } else {
        numeric.clone()
    };
    GrowthAssessment {
        verdict,
        analytic,
        numeric,
        consistent,
    }
}

/// Maximum relative disagreement between the three routes over
/// `n <= limit` (restricted to indices none of them saturated at).
pub fn route_disagreement(chain: &ChainSpec, limit: usize) -> f64 {
    let a = qbar_minus_one(chain, limit, Route::Direct);
    let b = qbar_minus_one(chain, limit, Route::Sum1);
    let c = qbar_minus_one(chain, limit, Route::Sum2);
    let len = a.values.len().min(b.values.len()).min(c.values.len());
    (0..len)
        .map(|n| {
            let (x, y, z) = (a.values[n], b.values[n], c.values[n]);
            let scale = x.abs().max(y.abs()).max(z.abs());
            let spread = (x - y).abs().max((x - z).abs()).max((y - z).abs());
            spread / scale
        })
        .fold(0.0, f64::max)
}

/// Result of checking the truncated eigen relation `P Q(x) = x Q(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenResidual {
    pub max_residual: f64,
    pub max_magnitude: f64,
}

/// Residual of `P Q(x) = x Q(x)` on rows `0..=N-2` of the truncation to
/// `N` states (the last row touches the truncation boundary).
pub fn eigen_residual(chain: &ChainSpec, x: f64, n: usize) -> Result<EigenResidual> {
    if n < 3 {
        return Err(BdError::InvalidArgument(format!("truncation must be at least 3, got {n}")));
    }
    let seq = q_eval(chain, x, n - 1);
    if let Some(index) = seq.saturated_at {
        return Err(BdError::Saturated { index });
    }
    Ok(relation_residual(chain, x, &seq.values))
}

/// Residual of the eigen relation for an arbitrary vector of values, over
/// every row whose stencil lies inside `values`.
pub fn relation_residual(chain: &ChainSpec, x: f64, values: &[f64]) -> EigenResidual {
    let max_magnitude = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut max_residual = 0.0f64;
    if values.len() >= 2 {
        let row = chain.row(0);
        let res = (row.r * values[0] + row.p * values[1]) - x * values[0];
        max_residual = res.abs();
    }
    for i in 1..values.len().saturating_sub(1) {
        let row = chain.row(i);
        let res = ((row.q * values[i - 1] + row.r * values[i]) + row.p * values[i + 1]) - x * values[i];
        max_residual = max_residual.max(res.abs());
    }
    EigenResidual {
        max_residual,
        max_magnitude,
    }
}

/// Row `i` of `P^2`, as the coefficients of `y_{i-2} ..= y_{i+2}`.
fn p2_row(chain: &ChainSpec, i: usize) -> [f64; 5] {
    let cur = chain.row(i);
    let next = chain.row(i + 1);
    let (prev_q, prev_r, prev_p) = if i == 0 {
        (0.0, 0.0, 0.0)
    } else {
        let prev = chain.row(i - 1);
        (prev.q, prev.r, prev.p)
    };
    [
        cur.q * prev_q,
        cur.q * prev_r + cur.r * cur.q,
        cur.q * prev_p + cur.r * cur.r + cur.p * next.q,
        cur.r * cur.p + cur.p * next.r,
        cur.p * next.p,
    ]
}

/// `max_i |(P^2 y)_i - y_i|` over rows `0..=len-3`.
pub fn p2_residual(chain: &ChainSpec, y: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..y.len().saturating_sub(2) {
        let a = p2_row(chain, i);
        let mut acc = 0.0;
        for (k, coef) in a.iter().enumerate() {
            if let Some(j) = (i + k).checked_sub(2) {
                acc += coef * y[j];
            }
        }
        worst = worst.max((acc - y[i]).abs());
    }
    worst
}

/// Solutions of `P^2 y = y` on a truncation, and the checks that they span
/// the full solution space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicBasis {
    pub truncation: usize,
    /// `Q(1)` (all ones).
    pub plus_one: Vec<f64>,
    /// `Q(-1)`, signed.
    pub minus_one: Vec<f64>,
    pub residual_plus_one: f64,
    pub residual_minus_one: f64,
    /// Residual of `Q(1) + Q(-1)`.
    pub residual_sum: f64,
    pub scale: f64,
    /// `4 - rank` of the two boundary equations acting on the four seeds.
    pub solution_space_dim: usize,
    /// Worst relative least-squares residual when fitting the forward
    /// solutions from seeds `(1, 0)` and `(0, 1)` onto `span{Q(1), Q(-1)}`.
    pub span_fit_residual: f64,
}

/// Builds `Q(1)` and `Q(-1)` on `n` states and verifies that every solution
/// of the pentadiagonal system `P^2 y = y` is a combination of them.
///
/// Rows `i >= 2` determine `y_{i+2}` from `y_{i-2} ..= y_{i+1}` (the
/// coefficient `p_i p_{i+1}` is positive), so the interior equations leave
/// four free seeds `y_0 .. y_3`. Rows 0 and 1 fix `y_2` and `y_3` in terms of
/// `y_0, y_1`, leaving two.
pub fn harmonic_basis_p2(chain: &ChainSpec, n: usize) -> Result<HarmonicBasis> {
    if n < 5 {
        return Err(BdError::InvalidArgument(format!("truncation must be at least 5, got {n}")));
    }
    let plus = q_eval(chain, 1.0, n - 1);
    let minus = q_eval(chain, -1.0, n - 1);
    if let Some(index) = minus.saturated_at.or(plus.saturated_at) {
        return Err(BdError::Saturated { index });
    }
    let plus_one = plus.values;
    let minus_one = minus.values;
    let sum: Vec<f64> = plus_one.iter().zip(&minus_one).map(|(a, b)| a + b).collect();
    let scale = minus_one.iter().fold(1.0f64, |m, v| m.max(v.abs()));

    // Boundary equations restricted to the seeds: columns y_0..y_3.
    let r0 = p2_row(chain, 0);
    let r1 = p2_row(chain, 1);
    let boundary = [
        [r0[2] - 1.0, r0[3], r0[4], 0.0],
        [r1[1], r1[2] - 1.0, r1[3], r1[4]],
    ];
    let solution_space_dim = 4 - rank_2x4(&boundary);

    let mut span_fit_residual = 0.0f64;
    for seed in [[1.0, 0.0], [0.0, 1.0]] {
        let y = forward_p2_solution(chain, seed, n)?;
        span_fit_residual = span_fit_residual.max(fit_residual(&y, &plus_one, &minus_one));
    }

    Ok(HarmonicBasis {
        truncation: n,
        residual_plus_one: p2_residual(chain, &plus_one),
        residual_minus_one: p2_residual(chain, &minus_one),
        residual_sum: p2_residual(chain, &sum),
        plus_one,
        minus_one,
        scale,
        solution_space_dim,
        span_fit_residual,
    })
}

fn rank_2x4(m: &[[f64; 4]; 2]) -> usize {
    let norm = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    if norm == 0.0 {
        return 0;
    }
    let tol = 1e-12 * norm * norm;
    let mut best = 0.0f64;
    for a in 0..4 {
        for b in (a + 1)..4 {
            best = best.max((m[0][a] * m[1][b] - m[0][b] * m[1][a]).abs());
        }
    }
    if best > tol {
        2
    } else {
        1
    }
}

/// Solves rows `0, 1, 2, ...` of `P^2 y = y` forward from `(y_0, y_1)`.
fn forward_p2_solution(chain: &ChainSpec, seed: [f64; 2], n: usize) -> Result<Vec<f64>> {
    let mut y = vec![0.0; n];
    y[0] = seed[0];
    y[1] = seed[1];
    for i in 0..n - 2 {
        let a = p2_row(chain, i);
        let mut acc = y[i];
        for (k, coef) in a.iter().take(4).enumerate() {
            if let Some(j) = (i + k).checked_sub(2) {
                acc -= coef * y[j];
            }
        }
        y[i + 2] = acc / a[4];
        if !(y[i + 2].abs() <= SATURATION) {
            return Err(BdError::Saturated { index: i + 2 });
        }
    }
    Ok(y)
}

/// Relative residual of the least-squares fit of `y` onto `span{u, v}`.
fn fit_residual(y: &[f64], u: &[f64], v: &[f64]) -> f64 {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let (uu, uv, vv) = (dot(u, u), dot(u, v), dot(v, v));
    let (uy, vy) = (dot(u, y), dot(v, y));
    let det = uu * vv - uv * uv;
    let alpha = (uy * vv - vy * uv) / det;
    let beta = (vy * uu - uy * uv) / det;
    let scale = y.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    y.iter()
        .zip(u.iter().zip(v))
        .map(|(yi, (ui, vi))| (yi - alpha * ui - beta * vi).abs())
        .fold(0.0, f64::max)
        / scale
}

/// `true` if `Qbar` is nondecreasing and at least one everywhere.
pub fn is_monotone_from_one(values: &[f64]) -> bool {
    values.first() == Some(&1.0)
        && values.iter().all(|v| *v >= 1.0)
        && values.windows(2).all(|w| w[1] >= w[0])
}
