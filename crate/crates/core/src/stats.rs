//! Small statistics toolbox used by the Monte Carlo checks.

/// Two-sided 99% standard normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_901;

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Sample mean with a 99% normal-approximation interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanCi {
    pub mean: f64,
    pub sd: f64,
    pub halfwidth: f64,
    pub count: usize,
}

impl MeanCi {
    pub fn from_samples(xs: &[f64]) -> Self {
        let sd = variance(xs).sqrt();
        MeanCi {
            mean: mean(xs),
            sd,
            halfwidth: Z_99 * sd / (xs.len() as f64).sqrt(),
            count: xs.len(),
        }
    }

    pub fn low(&self) -> f64 {
        self.mean - self.halfwidth
    }

    pub fn high(&self) -> f64 {
        self.mean + self.halfwidth
    }

    pub fn contains(&self, value: f64) -> bool {
        (self.mean - value).abs() <= self.halfwidth
    }
}

/// Hoeffding half-width for the mean of `trials` values in an interval of
/// unit length, at failure probability `delta`.
pub fn hoeffding_halfwidth(trials: usize, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * trials as f64)).sqrt()
}

/// Outcome of a two-sample Kolmogorov–Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub critical: f64,
    pub reject: bool,
}

/// Asymptotic two-sample KS test at level `alpha`.
pub fn ks_two_sample(a: &[f64], b: &[f64], alpha: f64) -> KsResult {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut statistic: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        statistic = statistic.max((i as f64 / na - j as f64 / nb).abs());
    }
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    let critical = c * ((na + nb) / (na * nb)).sqrt();
    KsResult {
        statistic,
        critical,
        reject: statistic > critical,
    }
}

/// Ordinary least-squares fit `y ≈ slope·x + intercept`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let mx = mean(xs);
    let my = mean(ys);
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Best single-threshold rule predicting "high" for values above the
/// threshold. Returns `(threshold, balanced error)`.
pub fn threshold_classifier(high: &[f64], low: &[f64]) -> (f64, f64) {
    let mut points: Vec<(f64, bool)> = high
        .iter()
        .map(|&v| (v, true))
        .chain(low.iter().map(|&v| (v, false)))
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (nh, nl) = (high.len() as f64, low.len() as f64);
    // Threshold below everything: every high is right, every low is wrong.
    let (mut high_below, mut low_below) = (0usize, 0usize);
    let mut best = (f64::NEG_INFINITY, 0.5);
    let mut idx = 0;
    while idx <= points.len() {
        let err = 0.5 * (high_below as f64 / nh + (nl - low_below as f64) / nl);
        if err < best.1 {
            let t = if idx == 0 {
                f64::NEG_INFINITY
            } else if idx == points.len() {
                f64::INFINITY
            } else {
                0.5 * (points[idx - 1].0 + points[idx].0)
            };
            best = (t, err);
        }
        if idx == points.len() {
            break;
        }
        let v = points[idx].0;
        while idx < points.len() && points[idx].0 == v {
            if points[idx].1 {
                high_below += 1;
            } else {
                low_below += 1;
            }
            idx += 1;
        }
    }
    best
}
