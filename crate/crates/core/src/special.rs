//! Error-function variants needed by the closed-form transport models.

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

/// Scaled complementary error function, exp(y^2) * erfc(y).
///
/// Stays accurate for large `y` where `erfc` underflows; used to evaluate
/// survival kernels without catastrophic cancellation.
pub fn erfcx(y: f64) -> f64 {
    if y < 0.0 {
        // erfcx(-y) = 2 exp(y^2) - erfcx(y); only small |y| occur in practice.
        return 2.0 * (y * y).exp() - erfcx(-y);
    }
    // Below the branch point the series truncation floor ~exp(-y^2) is too
    // coarse; erfc itself is still well inside the normal range there.
    if y < 6.5 {
        return libm::erfc(y) * (y * y).exp();
    }
    // Asymptotic series 1/(y sqrt(pi)) * sum (-1)^n (2n-1)!! / (2 y^2)^n.
    let inv2y2 = 1.0 / (2.0 * y * y);
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 1..40 {
        term *= -((2 * n - 1) as f64) * inv2y2;
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum / (y * std::f64::consts::PI.sqrt())
}
