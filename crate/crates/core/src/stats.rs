//! Small summary statistics shared by the evaluators and the harness.

/// Running mean and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    /// `None` when fewer than two observations exist.
    pub se: Option<f64>,
    pub count: usize,
}

impl MeanSe {
    pub fn of(values: &[f64]) -> Option<MeanSe> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let se = if values.len() > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
            Some((var / n).sqrt())
        } else {
            None
        };
        Some(MeanSe { mean, se, count: values.len() })
    }

    pub fn se_or_zero(&self) -> f64 {
        self.se.unwrap_or(0.0)
    }
}

/// Paired difference `a[i] - b[i]` summarised as mean and standard error.
pub fn paired_difference(a: &[f64], b: &[f64]) -> Option<MeanSe> {
    assert_eq!(a.len(), b.len(), "paired samples must have equal length");
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    MeanSe::of(&d)
}

/// Two-sided Wilson score interval for `wins` successes out of `games`.
pub fn wilson_interval(wins: u64, games: u64, z: f64) -> (f64, f64) {
    if games == 0 {
        return (0.0, 1.0);
    }
    let n = games as f64;
    let p = wins as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / (1.0 + z2 / n);
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// z-value of a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;
