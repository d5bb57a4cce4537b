//! Small statistics helpers shared by the simulation and fitting modules.

/// Streaming mean/variance accumulator (Welford) that supports merging,
/// so reductions over walks can be chunked deterministically.
#[derive(Debug, Clone, Copy, Default)]
pub struct Accumulator {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Accumulator {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Accumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = (self.n + other.n) as f64;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n;
        self.m2 += other.m2 + d * d * (self.n as f64) * (other.n as f64) / n;
        self.n += other.n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Result of a univariate weighted least-squares line fit.
#[derive(Debug, Clone, Copy)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_err: f64,
    pub intercept_err: f64,
    /// Reduced chi-squared when weights are inverse variances.
    pub chi2_red: f64,
}

/// Weighted least squares y = a + b x with weights w = 1/sigma^2.
pub fn linear_fit(x: &[f64], y: &[f64], w: &[f64]) -> LineFit {
    assert!(x.len() == y.len() && x.len() == w.len() && x.len() >= 2);
    let (mut sw, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..x.len() {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
        sxx += w[i] * x[i] * x[i];
        sxy += w[i] * x[i] * y[i];
    }
    let det = sw * sxx - sx * sx;
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let mut chi2 = 0.0;
    for i in 0..x.len() {
        let r = y[i] - intercept - slope * x[i];
        chi2 += w[i] * r * r;
    }
    let dof = (x.len() as isize - 2).max(1) as f64;
    LineFit {
        slope,
        intercept,
        slope_err: (sw / det).sqrt(),
        intercept_err: (sxx / det).sqrt(),
        chi2_red: chi2 / dof,
    }
}

/// Weighted least squares through the origin, y = b x.
pub fn linear_fit_origin(x: &[f64], y: &[f64], w: &[f64]) -> LineFit {
    assert!(x.len() == y.len() && x.len() == w.len() && !x.is_empty());
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for i in 0..x.len() {
        sxx += w[i] * x[i] * x[i];
        sxy += w[i] * x[i] * y[i];
    }
    let slope = sxy / sxx;
    let mut chi2 = 0.0;
    for i in 0..x.len() {
        let r = y[i] - slope * x[i];
        chi2 += w[i] * r * r;
    }
    let dof = (x.len() as isize - 1).max(1) as f64;
    LineFit {
        slope,
        intercept: 0.0,
        slope_err: (1.0 / sxx).sqrt(),
        intercept_err: 0.0,
        chi2_red: chi2 / dof,
    }
}

/// Coefficient of determination of a plain (unweighted) line fit.
pub fn r_squared(x: &[f64], y: &[f64]) -> f64 {
    let w = vec![1.0; x.len()];
    let fit = linear_fit(x, y, &w);
    let my = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| (yi - fit.intercept - fit.slope * xi).powi(2))
        .sum();
    1.0 - ss_res / ss_tot
}

/// Best log-log power-law window of a positive curve.
///
/// Scans contiguous windows spanning at least `min_decades` in x, keeps those
/// whose rms residual in log10-space stays below `resid_tol`, and returns the
/// slope fitted over the widest such window together with the window bounds.
pub fn loglog_slope_window(
    x: &[f64],
    y: &[f64],
    min_decades: f64,
    resid_tol: f64,
) -> Option<(f64, f64, f64)> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(&xi, &yi)| xi > 0.0 && yi > 0.0)
        .map(|(&xi, &yi)| (xi.log10(), yi.log10()))
        .collect();
    if pts.len() < 4 {
        return None;
    }
    let mut best: Option<(f64, f64, f64, f64)> = None; // (span, slope, lo, hi)
    for i in 0..pts.len() {
        for j in (i + 3)..pts.len() {
            let span = pts[j].0 - pts[i].0;
            if span < min_decades {
                continue;
            }
            let lx: Vec<f64> = pts[i..=j].iter().map(|p| p.0).collect();
            let ly: Vec<f64> = pts[i..=j].iter().map(|p| p.1).collect();
            let w = vec![1.0; lx.len()];
            let fit = linear_fit(&lx, &ly, &w);
            let rms = (lx
                .iter()
                .zip(&ly)
                .map(|(&a, &b)| (b - fit.intercept - fit.slope * a).powi(2))
                .sum::<f64>()
                / lx.len() as f64)
                .sqrt();
            if rms > resid_tol {
                continue;
            }
            if best.map_or(true, |(s, ..)| span > s) {
                best = Some((span, fit.slope, 10f64.powf(pts[i].0), 10f64.powf(pts[j].0)));
            }
        }
    }
    best.map(|(_, slope, lo, hi)| (slope, lo, hi))
}

/// Pairwise (cascade) summation; deterministic and accurate for long sums.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
        }
    }
}
