//! Adaptive Gauss-Kronrod quadrature.

/// Kronrod-15 abscissae on [0, 1] (positive half, including 0).
const XK: [f64; 8] = [
    0.000000000000000000000000000000000,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
];

/// Kronrod-15 weights matching `XK`.
const WK: [f64; 8] = [
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
];

/// Gauss-7 weights at XK[0], XK[2], XK[4], XK[6].
const WG: [f64; 4] = [
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
];

/// One G7/K15 panel on [a, b]; returns (kronrod, |kronrod - gauss|).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let f0 = f(c);
    let mut kron = WK[0] * f0;
    let mut gauss = WG[0] * f0;
    for i in 1..8 {
        let dx = h * XK[i];
        let fs = f(c - dx) + f(c + dx);
        kron += WK[i] * fs;
        if i % 2 == 0 {
            gauss += WG[i / 2] * fs;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
///
/// Splits the worst panel first; panics only on NaN bounds. Intended for
/// smooth or piecewise-smooth integrands; oscillatory integrands should be
/// pre-split into half-period panels by the caller.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (mut val, mut err) = gk15(&f, a, b);
    let mut panels = vec![(a, b, val, err)];
    // Worst-first refinement with a hard cap on subdivisions.
    for _ in 0..10_000 {
        if err <= tol {
            break;
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap())
            .unwrap();
        let (pa, pb, pv, pe) = panels.swap_remove(idx);
        let mid = 0.5 * (pa + pb);
        let (v1, e1) = gk15(&f, pa, mid);
        let (v2, e2) = gk15(&f, mid, pb);
        val += v1 + v2 - pv;
        err += e1 + e2 - pe;
        panels.push((pa, mid, v1, e1));
        panels.push((mid, pb, v2, e2));
    }
    val
}

/// Integrate `f` over `[a, inf)` for integrands decaying fast enough that a
/// rational map x = a + t/(1-t) renders them integrable on [0, 1).
pub fn integrate_to_inf<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> f64 {
    integrate(
        |t| {
            let om = 1.0 - t;
            let x = a + t / om;
            f(x) / (om * om)
        },
        0.0,
        1.0 - 1e-12,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-12);
        assert_relative_eq!(v, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn sine_half_period() {
        let v = integrate(|x| x.sin(), 0.0, PI, 1e-12);
        assert_relative_eq!(v, 2.0, epsilon = 1e-11);
    }

    #[test]
    fn gaussian_to_infinity() {
        let v = integrate_to_inf(|x| (-x * x).exp(), 0.0, 1e-12);
        assert_relative_eq!(v, PI.sqrt() / 2.0, epsilon = 1e-10);
    }

    #[test]
    fn peaked_integrand_requires_adaptivity() {
        // Narrow Lorentzian away from the panel midpoints.
        let g = 1e-3;
        let v = integrate(|x| g / (g * g + (x - 0.3).powi(2)), 0.0, 1.0, 1e-10);
        let exact = ((1.0 - 0.3) / g).atan() + (0.3f64 / g).atan();
        assert_relative_eq!(v, exact, epsilon = 1e-8);
    }
}
