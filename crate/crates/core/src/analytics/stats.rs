use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::snapshots::RuleLifetime;
use super::AnalyticsError;

/// Empirical CDF as `(value, cumulative fraction)` steps, one per distinct
/// value.
#[derive(Debug, Clone, PartialEq)]
pub struct Ecdf {
    sorted: Vec<f64>,
    points: Vec<(f64, f64)>,
}

impl Ecdf {
    pub fn new(values: &[f64]) -> Result<Self, AnalyticsError> {
        if values.is_empty() || values.iter().any(|v| v.is_nan()) {
            return Err(AnalyticsError::EmptyInput);
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mut points: Vec<(f64, f64)> = Vec::new();
        for (i, &v) in sorted.iter().enumerate() {
            let frac = (i + 1) as f64 / n;
            match points.last_mut() {
                Some(last) if last.0 == v => last.1 = frac,
                _ => points.push((v, frac)),
            }
        }
        Ok(Ecdf { sorted, points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// Fraction of samples `<= x`.
    pub fn value_at(&self, x: f64) -> f64 {
        let below = self.sorted.partition_point(|&v| v <= x);
        below as f64 / self.sorted.len() as f64
    }

    /// Sample median; the mean of the two middle values for even sizes.
    pub fn median(&self) -> f64 {
        let n = self.sorted.len();
        if n % 2 == 1 {
            self.sorted[n / 2]
        } else {
            (self.sorted[n / 2 - 1] + self.sorted[n / 2]) / 2.0
        }
    }
}

/// ECDF over the lengths of lifetimes that ended.
pub fn lifetime_cdf<'a, I>(lifetimes: I) -> Result<Ecdf, AnalyticsError>
where
    I: IntoIterator<Item = &'a RuleLifetime>,
{
    let days: Vec<f64> = lifetimes
        .into_iter()
        .filter_map(RuleLifetime::lifetime_days)
        .map(|d| d as f64)
        .collect();
    Ecdf::new(&days)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub d: f64,
    pub p_value: f64,
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    use core::f64::consts::PI;
    if lambda <= 0.0 {
        return 1.0;
    }
    let p = if lambda < 1.18 {
        // Jacobi theta form converges fast for small arguments.
        let scale = -PI * PI / (8.0 * lambda * lambda);
        let mut sum = 0.0;
        for j in 1..=20 {
            let k = (2 * j - 1) as f64;
            let term = libm::exp(k * k * scale);
            sum += term;
            if term < 1e-17 {
                break;
            }
        }
        1.0 - libm::sqrt(2.0 * PI) / lambda * sum
    } else {
        let mut sum = 0.0;
        for j in 1..=100 {
            let jf = j as f64;
            let term = libm::exp(-2.0 * jf * jf * lambda * lambda);
            sum += if j % 2 == 1 { term } else { -term };
            if term < 1e-17 {
                break;
            }
        }
        2.0 * sum
    };
    p.clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult, AnalyticsError> {
    if a.is_empty() || b.is_empty() || a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(AnalyticsError::EmptyInput);
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = if a[i] <= b[j] { a[i] } else { b[j] };
        while i < n && a[i] == x {
            i += 1;
        }
        while j < m && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    // Once one sample is exhausted the gap only shrinks.
    let en = libm::sqrt((n * m) as f64 / (n + m) as f64);
    Ok(KsResult {
        d,
        p_value: kolmogorov_survival(en * d),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgeBaseline {
    /// Rules present for less than one year.
    UnderOneYear,
    /// Rules from the immediately younger year bin.
    PreviousYear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgeComparison {
    pub year: u32,
    pub baseline: AgeBaseline,
    pub n_year: usize,
    pub n_baseline: usize,
    pub result: KsResult,
}

/// Bins `(age_days, usage)` pairs into whole years and compares every
/// non-empty year `y >= 1` against year 0 and against year `y - 1`.
/// Comparisons with an empty side are omitted.
pub fn age_usage_tests(samples: &[(i64, f64)]) -> Vec<AgeComparison> {
    let mut bins: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for &(age, usage) in samples {
        if age < 0 {
            continue;
        }
        bins.entry((age / 365) as u32).or_default().push(usage);
    }
    let mut out = Vec::new();
    let years: Vec<u32> = bins.keys().copied().filter(|&y| y >= 1).collect();
    for year in years {
        let current = &bins[&year];
        for (baseline, other) in [(AgeBaseline::UnderOneYear, 0), (AgeBaseline::PreviousYear, year - 1)] {
            let Some(base) = bins.get(&other) else { continue };
            if let Ok(result) = ks_two_sample(current, base) {
                out.push(AgeComparison {
                    year,
                    baseline,
                    n_year: current.len(),
                    n_baseline: base.len(),
                    result,
                });
            }
        }
    }
    out
}
