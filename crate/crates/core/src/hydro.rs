//! Closed-form hydrodynamic models: diffusion Green's functions with source
//! and decay, generalized dispersions, the dynamical-correction propagator,
//! and radial inverse Fourier transforms.
//!
//! Gaussian convention: every kernel is written as exp(-r^2 / (4 w)), i.e.
//! the heat kernel is (4 pi D t)^(-3/2) exp(-r^2/(4 D t)) and the source
//! deposits Gamma (4 pi b^2)^(-3/2) exp(-r^2/(4 b^2)) per unit time while
//! the laser is on.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::quad;
use crate::special;
use crate::{Error, Result};

/// Drive-modified transport parameters active for t > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveParams {
    /// Driven diffusion coefficient, nm^2/us.
    pub d_dr: f64,
    /// Driven decay time, us.
    pub t1_dr: f64,
}

/// Generalized dispersion coefficients of f(k) = D k^2 + C_lr k^(alpha-d)
/// + C k^4, plus the dynamical coefficient C_dyn = l^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Dispersion {
    /// Coefficient of k^4, nm^4/us.
    pub c_k4: f64,
    /// Coefficient of the long-range k^(alpha-d) term, nm^(alpha-d)/us.
    pub c_lr: f64,
    /// Dynamical coefficient l^2, nm^2.
    pub c_dyn: f64,
    /// Interaction power-law exponent.
    pub alpha: f64,
    /// Spatial dimension.
    pub dim: u32,
}

impl Default for Dispersion {
    fn default() -> Self {
        Dispersion {
            c_k4: 0.0,
            c_lr: 0.0,
            c_dyn: 0.0,
            alpha: 6.0,
            dim: 3,
        }
    }
}

/// Analytic transport model with source and decay parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HydroModel {
    /// Diffusion coefficient, nm^2/us.
    pub d: f64,
    /// Extrinsic decay time, us; `f64::INFINITY` disables decay.
    pub t1: f64,
    /// Polarization rate (source amplitude), 1/us.
    pub gamma_rate: f64,
    /// Source width, nm.
    pub b: f64,
    /// Polarization duration, us.
    pub tau_p: f64,
    /// NV density, nm^-3 (background amplitude).
    pub rho_nv: f64,
    pub drive: Option<DriveParams>,
    pub dispersion: Dispersion,
}

impl Default for HydroModel {
    fn default() -> Self {
        HydroModel {
            d: 0.35,
            t1: 2600.0,
            gamma_rate: 1.0,
            b: 4.0,
            tau_p: 30.0,
            rho_nv: 0.0,
            drive: None,
            dispersion: Dispersion::default(),
        }
    }
}

impl HydroModel {
    pub fn validate(&self) -> Result<()> {
        if self.d <= 0.0 {
            return Err(Error::invalid("D must be positive"));
        }
        if !(self.t1 > 0.0) {
            return Err(Error::invalid("T1 must be positive (or infinite)"));
        }
        if self.b < 0.0 || self.tau_p < 0.0 || self.rho_nv < 0.0 {
            return Err(Error::invalid("b, tau_p, rho_nv must be nonnegative"));
        }
        if self.dispersion.c_dyn < 0.0 {
            return Err(Error::invalid("c_dyn = l^2 must be nonnegative"));
        }
        if !(1..=3).contains(&self.dispersion.dim) {
            return Err(Error::invalid("dimension must be 1, 2, or 3"));
        }
        if let Some(dr) = &self.drive {
            if dr.d_dr <= 0.0 || !(dr.t1_dr > 0.0) {
                return Err(Error::invalid("driven D and T1 must be positive"));
            }
        }
        Ok(())
    }
}

/// A radial polarization profile P(r) at one time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    /// Polarization density, nm^-3.
    pub p: Vec<f64>,
    pub t: f64,
}

/// The survival kernel F(x) = exp(-x)/sqrt(pi x) - erfc(sqrt x).
///
/// Evaluated through a scaled path at large x so it stays accurate over the
/// full range x in [1e-6, 700].
pub fn f_kernel(x: f64) -> Result<f64> {
    Ok(f_kernel_scaled(x)? * (-x).exp())
}

/// exp(x) * F(x); avoids the underflow of F itself at large x.
pub fn f_kernel_scaled(x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Err(Error::invalid("F(x) requires x > 0"));
    }
    let sx = x.sqrt();
    if x < 20.0 {
        return Ok(1.0 / (PI * x).sqrt() - special::erfcx(sx));
    }
    // F(x) = e^-x / sqrt(pi x) * S, S = sum_{n>=1} (-1)^(n+1) (2n-1)!!/(2x)^n.
    let mut term = 1.0 / (2.0 * x);
    let mut s = term;
    for n in 1..60 {
        term *= -((2 * n + 1) as f64) / (2.0 * x);
        s += term;
        if term.abs() < 1e-18 * s.abs() {
            break;
        }
    }
    Ok(s / (PI * x).sqrt())
}

/// On-site survival amplitude of the undriven model.
///
/// P(t) = Gamma e^(b^2/(D T1)) / (4 pi D^(3/2) sqrt(T1))
///        * { F[(t + b^2/D)/T1] - F[(t + tau_p + b^2/D)/T1] }.
pub fn survival_undriven(m: &HydroModel, t: f64) -> Result<f64> {
    m.validate()?;
    if m.drive.is_some() {
        return Err(Error::invalid("model has a drive; use survival_driven"));
    }
    if t < 0.0 {
        return Err(Error::invalid("t must be nonnegative"));
    }
    if m.tau_p == 0.0 {
        return Ok(0.0);
    }
    let c = m.b * m.b / m.d;
    if m.t1.is_infinite() {
        // T1 -> inf limit: Gamma / (4 pi^(3/2) D^(3/2))
        //                  * [ (t+c)^(-1/2) - (t+tau_p+c)^(-1/2) ].
        let a1 = t + c;
        let a2 = t + m.tau_p + c;
        if a1 <= 0.0 {
            return Err(Error::invalid("survival diverges at t = 0 with b = 0"));
        }
        return Ok(m.gamma_rate / (4.0 * PI.powf(1.5) * m.d.powf(1.5))
            * (1.0 / a1.sqrt() - 1.0 / a2.sqrt()));
    }
    let x1 = (t + c) / m.t1;
    let x2 = (t + m.tau_p + c) / m.t1;
    let pref = m.gamma_rate * (c / m.t1).exp() / (4.0 * PI * m.d.powf(1.5) * m.t1.sqrt());
    Ok(pref * (f_kernel(x1)? - f_kernel(x2)?))
}

/// On-site survival amplitude when a drive modifies (D, T1) -> (D_dr, T1_dr)
/// for t > 0 while polarization (t < 0) ran undriven.
///
/// Closed form of the convolution of the piecewise Green's function with the
/// polarization source:
/// P(t) = Gamma e^(b^2/(D T1)) / (4 pi D^(3/2) sqrt(T1))
///        * e^((D_dr/D - T1/T1_dr) t/T1)
///        * { F[((D_dr/D) t + b^2/D)/T1] - F[((D_dr/D) t + tau_p + b^2/D)/T1] }.
pub fn survival_driven(m: &HydroModel, t: f64) -> Result<f64> {
    m.validate()?;
    let Some(drive) = m.drive else {
        return Err(Error::invalid("model has no drive parameters"));
    };
    if t < 0.0 {
        return Err(Error::invalid("t must be nonnegative"));
    }
    if !m.t1.is_finite() || !drive.t1_dr.is_finite() {
        return Err(Error::invalid("driven closed form requires finite T1"));
    }
    if m.tau_p == 0.0 {
        return Ok(0.0);
    }
    let c = m.b * m.b / m.d;
    let s = drive.d_dr / m.d * t + c;
    let x1 = s / m.t1;
    let x2 = (s + m.tau_p) / m.t1;
    let pref = m.gamma_rate * (c / m.t1).exp() / (4.0 * PI * m.d.powf(1.5) * m.t1.sqrt());
    let growth = ((drive.d_dr / m.d - m.t1 / drive.t1_dr) * t / m.t1).exp();
    Ok(pref * growth * (f_kernel(x1)? - f_kernel(x2)?))
}

/// Homogeneous background from the overlap of neighboring probe volumes:
/// rho_NV Gamma T1 (e^(-t/T1) - e^(-(t+tau_p)/T1)).
pub fn background(m: &HydroModel, t: f64) -> f64 {
    if m.t1.is_infinite() {
        return m.rho_nv * m.gamma_rate * m.tau_p;
    }
    m.rho_nv * m.gamma_rate * m.t1 * ((-t / m.t1).exp() - (-(t + m.tau_p) / m.t1).exp())
}

/// Generalized dispersion f(k) = D k^2 + C_lr k^(alpha - d) + C k^4.
pub fn dispersion_f(m: &HydroModel, k: f64) -> Result<f64> {
    let disp = &m.dispersion;
    if k < 0.0 {
        return Err(Error::invalid("k must be nonnegative"));
    }
    let mut f = m.d * k * k + disp.c_k4 * k.powi(4);
    if disp.c_lr != 0.0 {
        if disp.alpha <= disp.dim as f64 {
            return Err(Error::DivergentIntegral(
                "long-range term requires alpha > d".into(),
            ));
        }
        f += disp.c_lr * k.powf(disp.alpha - disp.dim as f64);
    }
    Ok(f)
}

/// Angular average of exp(i k.r) over directions in d dimensions.
fn angular_kernel(dim: u32, x: f64) -> f64 {
    match dim {
        1 => x.cos(),
        2 => libm::j0(x),
        3 => {
            if x.abs() < 1e-4 {
                1.0 - x * x / 6.0 + x.powi(4) / 120.0
            } else {
                x.sin() / x
            }
        }
        _ => unreachable!(),
    }
}

fn sphere_surface(dim: u32) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => unreachable!(),
    }
}

/// Decay rate generated by long-range hopping h(r) = r^-alpha beyond a
/// short-range cutoff r0:
/// f(k) = int_{|r|>r0} [1 - cos(k.r)] r^-alpha d^d r.
///
/// Evaluated by quadrature; the small-k expansion carries the non-analytic
/// k^(alpha-d) term alongside the even powers.
pub fn longrange_fk_integral(alpha: f64, dim: u32, r0: f64, k: f64) -> Result<f64> {
    if alpha <= dim as f64 {
        return Err(Error::DivergentIntegral(format!(
            "alpha = {alpha} <= d = {dim}: integral diverges"
        )));
    }
    if r0 <= 0.0 {
        return Err(Error::invalid("r0 must be positive"));
    }
    if k == 0.0 {
        return Ok(0.0);
    }
    let d = dim as f64;
    let s_d = sphere_surface(dim);
    // Split 1 - A(kr): the constant part integrates analytically, the
    // oscillatory A part by half-period panels with alternating-tail
    // acceleration.
    let const_part = r0.powf(d - alpha) / (alpha - d);
    let integrand = |r: f64| angular_kernel(dim, k * r) * r.powf(d - 1.0 - alpha);
    let half = PI / k;
    let mut boundaries = vec![r0];
    let mut z = (k * r0 / PI).floor() * half + half;
    while z <= r0 {
        z += half;
    }
    let max_panels = 600;
    for _ in 0..max_panels {
        boundaries.push(z);
        z += half;
    }
    let panels: Vec<f64> = boundaries
        .windows(2)
        .map(|w| quad::integrate(integrand, w[0], w[1], 1e-13))
        .collect();
    let osc = alternating_series_sum(&panels);
    Ok(s_d * (const_part - osc))
}

/// Sum of a sequence whose partial sums oscillate around the limit; iterated
/// averaging of the trailing partial sums accelerates convergence.
fn alternating_series_sum(terms: &[f64]) -> f64 {
    let mut partial = Vec::with_capacity(terms.len());
    let mut s = 0.0;
    for &t in terms {
        s += t;
        partial.push(s);
    }
    let tail = 24.min(partial.len());
    let mut level: Vec<f64> = partial[partial.len() - tail..].to_vec();
    while level.len() > 1 {
        for i in 0..level.len() - 1 {
            level[i] = 0.5 * (level[i] + level[i + 1]);
        }
        level.pop();
    }
    level[0]
}

/// Late-time survival including the configured subleading approach:
/// (4 pi D t)^(-3/2) + C_lr/(2 pi^2 D^3 t^2) + 15 C/(32 pi^(3/2) D^(7/2) t^(5/2)).
pub fn survival_approach(m: &HydroModel, t: f64) -> Result<f64> {
    if t <= 0.0 {
        return Err(Error::invalid("t must be positive"));
    }
    let d = m.d;
    let mut p = (4.0 * PI * d * t).powf(-1.5);
    if m.dispersion.c_lr != 0.0 {
        p += m.dispersion.c_lr / (2.0 * PI * PI * d.powi(3) * t * t);
    }
    if m.dispersion.c_k4 != 0.0 {
        p += 15.0 * m.dispersion.c_k4 / (32.0 * PI.powf(1.5) * d.powf(3.5) * t.powf(2.5));
    }
    Ok(p)
}

/// Dynamical-correction propagator
/// G(k, t) = exp(-D k^2 t / (1 + l^2 k^2)) / (1 + l^2 k^2).
pub fn dyncorr_propagator(m: &HydroModel, k: f64, t: f64) -> f64 {
    let l2 = m.dispersion.c_dyn;
    let u = 1.0 + l2 * k * k;
    (-m.d * k * k * t / u).exp() / u
}

/// Isotropic 3-D inverse Fourier transform onto a radial grid:
/// P(r) = 1/(2 pi^2 r) int_0^inf k sin(kr) G(k) dk.
///
/// `g` must decay at least as 1/k^2; the oscillatory integral is summed in
/// half-period panels with iterated averaging of the partial sums.
pub fn radial_inverse_transform<G>(g: G, r_grid: &[f64], t: f64) -> Result<RadialProfile>
where
    G: Fn(f64) -> f64 + Sync,
{
    let p: Result<Vec<f64>> = r_grid
        .par_iter()
        .map(|&r| radial_inverse_point(&g, r))
        .collect();
    Ok(RadialProfile {
        r: r_grid.to_vec(),
        p: p?,
        t,
    })
}

/// One point of the isotropic inverse transform.
pub fn radial_inverse_point<G: Fn(f64) -> f64>(g: &G, r: f64) -> Result<f64> {
    if r < 0.0 {
        return Err(Error::invalid("r must be nonnegative"));
    }
    if r == 0.0 {
        // P(0) = 1/(2 pi^2) int k^2 G(k) dk.
        let v = quad::integrate_to_inf(|k| k * k * g(k), 0.0, 1e-11);
        if !v.is_finite() {
            return Err(Error::DivergentIntegral("radial transform at r = 0".into()));
        }
        return Ok(v / (2.0 * PI * PI));
    }
    let half = PI / r;
    let n_panels = 96usize;
    let panels: Vec<f64> = (0..n_panels)
        .map(|m| {
            let a = m as f64 * half;
            let b = a + half;
            quad::integrate(|k| k * (k * r).sin() * g(k), a, b, 1e-13)
        })
        .collect();
    let v = alternating_series_sum(&panels);
    if !v.is_finite() {
        return Err(Error::DivergentIntegral(format!(
            "radial transform at r = {r}"
        )));
    }
    Ok(v / (2.0 * PI * PI * r))
}

/// Yukawa profile e^(-r/l) / (4 pi l^2 r).
pub fn yukawa(r: f64, l: f64) -> f64 {
    (-r / l).exp() / (4.0 * PI * l * l * r)
}

/// Radial profile of the dynamical-correction propagator at time `t`.
///
/// The large-k limit of G is a pure Yukawa of weight exp(-D t / l^2); that
/// part transforms analytically and only the remainder (decaying as k^-4)
/// goes through quadrature.
pub fn dyncorr_profile(m: &HydroModel, r_grid: &[f64], t: f64) -> Result<RadialProfile> {
    m.validate()?;
    let l2 = m.dispersion.c_dyn;
    if l2 == 0.0 {
        // Plain Gaussian kernel.
        if t <= 0.0 {
            return Err(Error::invalid("l = 0 profile requires t > 0"));
        }
        let p = r_grid
            .iter()
            .map(|&r| (4.0 * PI * m.d * t).powf(-1.5) * (-r * r / (4.0 * m.d * t)).exp())
            .collect();
        return Ok(RadialProfile {
            r: r_grid.to_vec(),
            p,
            t,
        });
    }
    let l = l2.sqrt();
    let c = (-m.d * t / l2).exp();
    if t == 0.0 {
        let p = r_grid.iter().map(|&r| yukawa(r, l)).collect();
        return Ok(RadialProfile {
            r: r_grid.to_vec(),
            p,
            t,
        });
    }
    let bracket = move |k: f64| dyncorr_propagator(m, k, t) - c / (1.0 + l2 * k * k);
    let p: Result<Vec<f64>> = r_grid
        .par_iter()
        .map(|&r| {
            let rem = radial_inverse_point(&bracket, r)?;
            Ok(c * yukawa(r, l) + rem)
        })
        .collect();
    Ok(RadialProfile {
        r: r_grid.to_vec(),
        p: p?,
        t,
    })
}

/// Radial moment int 4 pi r^(2+n) P(r) dr by Simpson on the profile grid.
pub fn radial_moment(profile: &RadialProfile, n: u32) -> f64 {
    let f: Vec<f64> = profile
        .r
        .iter()
        .zip(&profile.p)
        .map(|(&r, &p)| 4.0 * PI * r.powi(2 + n as i32) * p)
        .collect();
    simpson_irregular(&profile.r, &f)
}

fn simpson_irregular(x: &[f64], f: &[f64]) -> f64 {
    // Trapezoid with Richardson-like accuracy is enough for dense grids.
    let mut s = 0.0;
    for i in 1..x.len() {
        s += 0.5 * (f[i] + f[i - 1]) * (x[i] - x[i - 1]);
    }
    s
}
