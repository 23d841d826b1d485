//! Simulated heart-failure cohorts on the bundled schema, for tests, benchmarks and demos.
//!
//! Four latent factors (cardio-renal severity, metabolic, body size, blood pressure) drive
//! the laboratory values and comorbidities. Survival times are exponential with a log hazard
//! linear in age, NT-proBNP, creatinine, haemoglobin, systolic pressure, beta blockers, CKD
//! and the HFrEF type; censoring is administrative and uniform.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::data::{Column, DataTable};
use crate::error::Result;
use crate::ingest::SchemaConfig;
use crate::seed;

/// Log-hazard coefficients: (covariate, per-unit effect).
pub const LOG_HAZARD: [(&str, f64); 8] = [
    ("Age", 0.03),
    ("log NT-proBNP", 0.45),
    ("log Creatinine", 0.5),
    ("HGB", -0.12),
    ("SBP", -0.01),
    ("BB", -0.4),
    ("CKD", 0.4),
    ("HFrEF", 0.35),
];

/// Per-column MCAR missing rates.
pub const MISSING_RATES: [(&str, f64); 14] = [
    ("HGB", 0.05),
    ("Glucose", 0.1),
    ("HbA1C", 0.35),
    ("Sodium", 0.05),
    ("Potassium", 0.05),
    ("BUN", 0.08),
    ("Creatinine", 0.03),
    ("LDL", 0.2),
    ("HR", 0.05),
    ("HIGH", 0.15),
    ("BW", 0.1),
    ("SPO2", 0.1),
    ("NT-proBNP", 0.25),
    ("proBNP", 0.6),
];

fn logistic(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// `n` rows of the reference schema.
pub fn simulate_cohort(n: usize, seed_value: u64) -> Result<DataTable> {
    let schema = SchemaConfig::reference().schema;
    let mut rng = seed::rng(seed::derive(seed_value, "cohort"));
    let mut cols: Vec<Vec<Option<f64>>> = vec![Vec::with_capacity(n); schema.n_columns()];
    let idx = |name: &str| schema.index_of(name).expect("reference column");
    let binary_logits: [(&str, f64, usize, f64); 14] = [
        ("ACEI", -0.3, 0, 0.0),
        ("ARBs", -1.0, 3, 0.3),
        ("ARNI", -2.0, 0, 0.4),
        ("BB", 0.8, 0, 0.2),
        ("Ivabradine", -2.5, 0, 0.3),
        ("MRA", -0.5, 0, 0.5),
        ("SGLT2i", -1.5, 1, 0.5),
        ("Statin", 0.5, 1, 0.4),
        ("furosemide", 0.3, 0, 0.8),
        ("thiazide", -1.5, 3, 0.4),
        ("HT", 0.5, 3, 0.8),
        ("DM", -0.5, 1, 1.5),
        ("AF", -1.0, 0, 0.3),
        ("CKD", -1.2, 0, 1.2),
    ];
    for _ in 0..n {
        let mut g = || -> f64 { rng.sample(StandardNormal) };
        let f = [g(), g(), g(), g()];
        let mut set = |name: &str, v: f64| cols[idx(name)].push(Some(v));
        let male = rng.random_bool(0.55);
        let mut e = || -> f64 { rng.sample(StandardNormal) };
        let age = (66.0 + 12.0 * (0.4 * f[0] + 0.9 * e())).clamp(20.0, 99.0).round();
        let height = (156.0 + 10.0 * f64::from(u8::from(male)) + 6.5 * (0.3 * f[2] + 0.95 * e())).clamp(130.0, 200.0);
        let weight = (62.0 + 0.6 * (height - 160.0) + 12.0 * (0.6 * f[2] + 0.3 * f[1] + 0.7 * e())).clamp(30.0, 180.0);
        let sbp = (125.0 + 20.0 * (0.6 * f[3] - 0.3 * f[0] + 0.75 * e())).clamp(70.0, 220.0).round();
        let dbp = (0.5 * sbp + 10.0 + 8.0 * e()).clamp(35.0, sbp - 5.0).round();
        let hr = (84.0 + 15.0 * (0.3 * f[0] + 0.95 * e())).clamp(35.0, 180.0).round();
        let spo2 = (97.5 - 1.0 * f[0].max(0.0) - 1.5 * e().abs()).clamp(75.0, 100.0).round();
        let hgb = (12.5 - 1.0 * f[0] + 1.4 * e()).clamp(5.0, 18.5);
        let glucose = (130f64.ln() + 0.35 * (0.6 * f[1] + 0.8 * e())).exp().clamp(50.0, 600.0).round();
        let hba1c = (6.4 + 1.1 * (0.75 * f[1] + 0.65 * e())).clamp(4.2, 14.0);
        let sodium = (137.0 - 1.5 * f[0] + 3.5 * e()).clamp(115.0, 155.0).round();
        let potassium = (4.3 + 0.5 * (0.4 * f[0] + 0.9 * e())).clamp(2.5, 7.0);
        let bun = (25f64.ln() + 0.5 * (0.6 * f[0] + 0.8 * e())).exp().clamp(5.0, 150.0).round();
        let log_cr = 1.3f64.ln() + 0.45 * (0.7 * f[0] + 0.7 * e());
        let creatinine = log_cr.exp().clamp(0.3, 15.0);
        let ldl = (95.0 + 35.0 * (0.2 * f[1] + 0.98 * e())).clamp(25.0, 300.0).round();
        let log_nt = 2500f64.ln() + 1.1 * (0.7 * f[0] + 0.7 * e());
        let nt = log_nt.exp().clamp(20.0, 35000.0).round();
        let probnp = (nt * 0.15 * (0.3 * e()).exp()).clamp(5.0, 5000.0).round();
        let type_score = 0.8 * f[0] + e();
        let hf_type = if type_score < -0.35 { 0.0 } else if type_score < 0.35 { 1.0 } else { 2.0 };
        for (name, v) in [
            ("HGB", hgb),
            ("Glucose", glucose),
            ("HbA1C", hba1c),
            ("Sodium", sodium),
            ("Potassium", potassium),
            ("BUN", bun),
            ("Creatinine", creatinine),
            ("LDL", ldl),
            ("HR", hr),
            ("HIGH", height),
            ("BW", weight),
            ("SBP", sbp),
            ("DBP", dbp),
            ("SPO2", spo2),
            ("NT-proBNP", nt),
            ("proBNP", probnp),
            ("Age", age),
            ("Gender", f64::from(u8::from(male))),
            ("type", hf_type),
        ] {
            set(name, v);
        }
        let mut binary = [0.0; 14];
        for (k, (name, a, factor, b)) in binary_logits.iter().enumerate() {
            let v = f64::from(u8::from(rng.random_bool(logistic(a + b * f[*factor]))));
            binary[k] = v;
            cols[idx(name)].push(Some(v));
        }
        let (bb, ckd) = (binary[3], binary[13]);
        let eta = LOG_HAZARD[0].1 * (age - 65.0)
            + LOG_HAZARD[1].1 * (log_nt - 2500f64.ln())
            + LOG_HAZARD[2].1 * (log_cr - 1.3f64.ln())
            + LOG_HAZARD[3].1 * (hgb - 12.5)
            + LOG_HAZARD[4].1 * (sbp - 125.0)
            + LOG_HAZARD[5].1 * bb
            + LOG_HAZARD[6].1 * ckd
            + LOG_HAZARD[7].1 * f64::from(u8::from(hf_type == 2.0));
        let t_event = -rng.random::<f64>().ln() * 1500.0 / eta.exp();
        let t_censor = rng.random_range(180.0..2200.0);
        let days = t_event.min(t_censor).ceil().max(1.0);
        cols[idx("Days")].push(Some(days));
        cols[idx("dead")].push(Some(f64::from(u8::from(t_event <= t_censor))));
    }
    for (name, rate) in MISSING_RATES {
        for cell in cols[idx(name)].iter_mut() {
            if rng.random_bool(rate) {
                *cell = None;
            }
        }
    }
    let columns = schema
        .columns()
        .iter()
        .zip(cols)
        .map(|(spec, values)| {
            if spec.is_continuous() {
                Column::real_opt(values)
            } else {
                Column::codes_opt(values.into_iter().map(|v| v.map(|x| x as u32)))
            }
        })
        .collect();
    DataTable::new(std::sync::Arc::new(schema), columns)
}
