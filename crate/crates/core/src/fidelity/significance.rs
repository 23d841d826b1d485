use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, StudentsT};
use statrs::function::factorial::ln_binomial;

use crate::data::{ColumnKind, DataTable};
use crate::error::Result;
use crate::fidelity::marginal::frequencies;
use crate::stats;

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    WelchT,
    MannWhitneyU,
    FisherExact,
    ChiSquare,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test: TestKind,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub differs: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl TestResult {
    fn done(test: TestKind, statistic: f64, p: f64) -> Self {
        let p = p.clamp(0.0, 1.0);
        TestResult {
            test,
            statistic: Some(statistic),
            p_value: Some(p),
            differs: p < SIGNIFICANCE_LEVEL,
            note: None,
        }
    }

    fn untestable(test: TestKind, why: &str) -> Self {
        TestResult {
            test,
            statistic: None,
            p_value: None,
            differs: false,
            note: Some(format!("untestable: {why}")),
        }
    }
}

/// Unequal-variance t test with Welch-Satterthwaite degrees of freedom.
pub fn welch_t(a: &[f64], b: &[f64]) -> TestResult {
    let k = TestKind::WelchT;
    if a.len() < 2 || b.len() < 2 {
        return TestResult::untestable(k, "fewer than two observations");
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (stats::sample_variance(a) / na, stats::sample_variance(b) / nb);
    let se2 = va + vb;
    if !(se2 > 0.0) {
        return TestResult::untestable(k, "zero variance in both samples");
    }
    let t = (stats::mean(a) - stats::mean(b)) / se2.sqrt();
    let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive df");
    TestResult::done(k, t, 2.0 * dist.sf(t.abs()))
}

/// Mann-Whitney U with the tie-corrected normal approximation (no continuity correction).
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> TestResult {
    let k = TestKind::MannWhitneyU;
    if a.is_empty() || b.is_empty() {
        return TestResult::untestable(k, "empty sample");
    }
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = stats::average_ranks(&pooled);
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let n = n1 + n2;
    let r1: f64 = ranks[..a.len()].iter().sum();
    let u1 = r1 - n1 * (n1 + 1.0) / 2.0;
    let sorted = stats::sorted(&pooled);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if !(var > 0.0) {
        return TestResult::untestable(k, "all values tied");
    }
    let z = (u1 - n1 * n2 / 2.0) / var.sqrt();
    TestResult::done(k, u1, stats::two_sided_normal_p(z))
}

/// Two-sided Fisher exact test on `[[a, b], [c, d]]`: the sum of hypergeometric probabilities of
/// all tables with the observed margins that are no more likely than the observed one.
pub fn fisher_exact(table: [[u64; 2]; 2]) -> TestResult {
    let [[a, b], [c, d]] = table;
    let row1 = a + b;
    let col1 = a + c;
    let n = a + b + c + d;
    if n == 0 {
        return TestResult::untestable(TestKind::FisherExact, "empty table");
    }
    let ln_denom = ln_binomial(n, col1);
    let logp = |x: u64| ln_binomial(row1, x) + ln_binomial(n - row1, col1 - x) - ln_denom;
    let lo = col1.saturating_sub(n - row1);
    let hi = row1.min(col1);
    let observed = logp(a);
    let mut p = 0.0;
    for x in lo..=hi {
        let lp = logp(x);
        if lp <= observed + 1e-7 {
            p += lp.exp();
        }
    }
    let odds = (a as f64 * d as f64) / (b as f64 * c as f64);
    TestResult::done(TestKind::FisherExact, odds, p.min(1.0))
}

/// Pearson chi-square on a 2 x k table of counts (rows: real, synthetic). Empty categories are dropped.
pub fn chi_square(real: &[u64], synth: &[u64]) -> TestResult {
    let k = TestKind::ChiSquare;
    let cols: Vec<(f64, f64)> = real
        .iter()
        .zip(synth)
        .filter(|(r, s)| **r + **s > 0)
        .map(|(r, s)| (*r as f64, *s as f64))
        .collect();
    let (nr, ns) = (cols.iter().map(|c| c.0).sum::<f64>(), cols.iter().map(|c| c.1).sum::<f64>());
    if cols.len() < 2 || nr == 0.0 || ns == 0.0 {
        return TestResult::untestable(k, "fewer than two non-empty categories or an empty sample");
    }
    let n = nr + ns;
    let mut stat = 0.0;
    for (r, s) in &cols {
        let tot = r + s;
        let (er, es) = (tot * nr / n, tot * ns / n);
        stat += (r - er).powi(2) / er + (s - es).powi(2) / es;
    }
    let dist = ChiSquared::new((cols.len() - 1) as f64).expect("positive df");
    TestResult::done(k, stat, dist.sf(stat))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub n_observed: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sd: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub frequencies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnTests {
    pub column: String,
    pub real: SampleSummary,
    pub synthetic: SampleSummary,
    pub tests: Vec<TestResult>,
}

fn summarize_reals(v: &[f64]) -> SampleSummary {
    SampleSummary {
        n_observed: v.len(),
        mean: (!v.is_empty()).then(|| stats::mean(v)),
        sd: (v.len() > 1).then(|| stats::sample_variance(v).sqrt()),
        frequencies: Vec::new(),
    }
}

fn counts(codes: &[u32], k: usize) -> Vec<u64> {
    let mut c = vec![0u64; k];
    for &v in codes {
        if (v as usize) < k {
            c[v as usize] += 1;
        }
    }
    c
}

/// Per-column real-vs-synthetic tests on observed cells: Welch t and Mann-Whitney U for
/// continuous columns, Fisher exact for binary, chi-square for multi-category columns.
pub fn significance_battery(real: &DataTable, synth: &DataTable) -> Result<Vec<ColumnTests>> {
    real.schema().ensure_compatible(synth.schema())?;
    let mut out = Vec::new();
    for c in 0..real.n_columns() {
        let spec = real.spec(c);
        if spec.is_missing_indicator() {
            continue;
        }
        let entry = match spec.kind {
            ColumnKind::Continuous => {
                let (r, s) = (real.column(c).observed_reals(), synth.column(c).observed_reals());
                ColumnTests {
                    column: spec.name.clone(),
                    real: summarize_reals(&r),
                    synthetic: summarize_reals(&s),
                    tests: vec![welch_t(&r, &s), mann_whitney_u(&r, &s)],
                }
            }
            ColumnKind::Binary | ColumnKind::Categorical => {
                let k = spec.n_categories();
                let (r, s) = (real.column(c).observed_codes(), synth.column(c).observed_codes());
                let (cr, cs) = (counts(&r, k), counts(&s, k));
                let test = if spec.kind == ColumnKind::Binary {
                    if r.is_empty() || s.is_empty() {
                        TestResult::untestable(TestKind::FisherExact, "empty sample")
                    } else {
                        fisher_exact([[cr[1], cr[0]], [cs[1], cs[0]]])
                    }
                } else {
                    chi_square(&cr, &cs)
                };
                let summary = |v: &[u32]| SampleSummary {
                    n_observed: v.len(),
                    mean: None,
                    sd: None,
                    frequencies: if v.is_empty() { Vec::new() } else { frequencies(v, k) },
                };
                ColumnTests {
                    column: spec.name.clone(),
                    real: summary(&r),
                    synthetic: summary(&s),
                    tests: vec![test],
                }
            }
        };
        out.push(entry);
    }
    Ok(out)
}
