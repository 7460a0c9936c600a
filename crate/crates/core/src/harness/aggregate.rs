use serde::Serialize;

use super::config::Algorithm;
use super::run::TrialRecord;

/// Sample mean, sample standard deviation (`n - 1`) and the half-width of a
/// normal-approximation 95% interval. Non-finite values are skipped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub ci95: f64,
}

impl Stats {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
        let n = v.len();
        if n == 0 {
            return Self { n, mean: f64::NAN, std: f64::NAN, ci95: f64::NAN };
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { n, mean, std, ci95: 1.96 * std / (n as f64).sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub axis: String,
    pub value: String,
    pub algorithm: Algorithm,
    pub trials: usize,
    pub pe_mean: f64,
    pub pe_std: f64,
    pub pe_ci95: f64,
    pub nmse_mean: f64,
    pub nmse_std: f64,
    pub nmse_ci95: f64,
    pub nmse_active_mean: f64,
    pub iters_mean: f64,
}

/// Groups by `(value, algorithm)` in order of first appearance.
pub fn aggregate(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(&str, &str, Algorithm)> = Vec::new();
    for r in records {
        let key = (r.axis.as_str(), r.value.as_str(), r.algorithm);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.into_iter()
        .map(|(axis, value, algorithm)| {
            let group: Vec<&TrialRecord> = records
                .iter()
                .filter(|r| r.axis == axis && r.value == value && r.algorithm == algorithm)
                .collect();
            let pe = Stats::of(group.iter().map(|r| r.pe));
            let nmse = Stats::of(group.iter().map(|r| r.nmse));
            SummaryRow {
                axis: axis.to_string(),
                value: value.to_string(),
                algorithm,
                trials: group.len(),
                pe_mean: pe.mean,
                pe_std: pe.std,
                pe_ci95: pe.ci95,
                nmse_mean: nmse.mean,
                nmse_std: nmse.std,
                nmse_ci95: nmse.ci95,
                nmse_active_mean: Stats::of(group.iter().map(|r| r.nmse_active)).mean,
                iters_mean: Stats::of(group.iter().map(|r| r.iters as f64)).mean,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(value: &str, pe: f64, nmse: f64) -> TrialRecord {
        TrialRecord {
            axis: "snr".into(),
            value: value.into(),
            algorithm: Algorithm::Vbi,
            trial: 0,
            pe,
            nmse,
            nmse_active: nmse,
            iters: 10,
            wall_ms: 0.0,
        }
    }

    #[test]
    fn single_and_equal_records_have_zero_spread() {
        let s = aggregate(&[rec("0", 0.2, 0.5)]);
        assert_eq!((s[0].pe_mean, s[0].pe_std), (0.2, 0.0));
        let s = aggregate(&[rec("0", 0.2, 0.5), rec("0", 0.2, 0.5)]);
        assert_eq!(s[0].nmse_std, 0.0);
    }

    #[test]
    fn hand_computed_statistics() {
        let s = Stats::of([2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(s.mean, 5.0);
        assert!((s.std - (32.0f64 / 7.0).sqrt()).abs() < 1e-15);
        assert!((s.ci95 - 1.96 * s.std / 8f64.sqrt()).abs() < 1e-15);
        let groups = aggregate(&[rec("0", 0.1, 1.0), rec("10", 0.0, 0.1), rec("0", 0.3, f64::NAN)]);
        assert_eq!(groups.len(), 2);
        assert!((groups[0].pe_mean - 0.2).abs() < 1e-15);
        assert_eq!(groups[0].nmse_mean, 1.0);
        assert_eq!(groups[1].value, "10");
    }
}
