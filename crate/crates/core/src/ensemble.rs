//! Disordered dipolar spin ensembles: geometry, species, on-site random
//! fields, and the angular structure of the dipolar couplings.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, UnitSphere};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::constants::PhysicalConstants;
use crate::rng::ensemble_stream;
use crate::{Error, Result};

/// Distribution of the quasi-static on-site fields delta_i.
///
/// Widths are FWHM in rad/us. `Empirical` holds a weighted table of field
/// values (loaded from file by the front end) and samples it discretely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FieldDistribution {
    Lorentzian,
    Gaussian,
    Empirical { values: Vec<f64>, weights: Vec<f64> },
}

impl Default for FieldDistribution {
    fn default() -> Self {
        FieldDistribution::Lorentzian
    }
}

/// Specification of one disorder realization family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleSpec {
    /// Total P1 density, ppm of carbon sites.
    pub rho_p1: f64,
    /// NV density, ppm. A central NV is placed at the origin iff > 0.
    pub rho_nv: f64,
    /// Resonant subgroup fraction in (0, 1].
    pub nu: f64,
    /// Number of resonant P1 spins to place.
    pub n_spins: usize,
    /// Short-range cutoff between any pair of spins, nm.
    pub r_cut: f64,
    /// FWHM of the on-site field distribution, rad/us.
    pub field_width_w: f64,
    pub field_distribution: FieldDistribution,
    pub seed: u64,
}

impl Default for EnsembleSpec {
    fn default() -> Self {
        EnsembleSpec {
            rho_p1: 110.0,
            rho_nv: 0.0,
            nu: 1.0 / 3.0,
            n_spins: 1000,
            r_cut: 1.75,
            field_width_w: crate::constants::mhz(4.5),
            field_distribution: FieldDistribution::Lorentzian,
            seed: 0,
        }
    }
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(Error::invalid("nu must lie in (0, 1]"));
        }
        if self.rho_p1 <= 0.0 {
            return Err(Error::invalid("rho_p1 must be positive"));
        }
        if self.n_spins < 2 {
            return Err(Error::invalid("n_spins must be at least 2"));
        }
        if self.r_cut < 0.0 {
            return Err(Error::invalid("r_cut must be nonnegative"));
        }
        if self.field_width_w < 0.0 {
            return Err(Error::invalid("field_width_w must be nonnegative"));
        }
        if let FieldDistribution::Empirical { values, weights } = &self.field_distribution {
            if values.len() != weights.len() || values.is_empty() {
                return Err(Error::invalid("empirical field table must be nonempty with matching lengths"));
            }
            if weights.iter().any(|&w| w < 0.0) || weights.iter().sum::<f64>() <= 0.0 {
                return Err(Error::invalid("empirical field weights must be nonnegative with positive sum"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Species {
    Nv,
    P1,
}

/// One disorder realization. Immutable after construction and freely
/// shareable across threads.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpinEnsemble {
    /// Positions in nm; index 0 is the probe at the origin (the NV when
    /// `rho_nv > 0`, otherwise a P1).
    pub positions: Vec<[f64; 3]>,
    pub species: Vec<Species>,
    /// Subgroup fraction label of each spin.
    pub subgroup: Vec<f64>,
    /// On-site detunings delta_i, rad/us.
    pub delta: Vec<f64>,
    pub box_radius: f64,
}

impl SpinEnsemble {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let a = self.positions[i];
        let b = self.positions[j];
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    }
}

/// Angular coefficients of the dipolar interaction for one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularCoeff {
    /// Magnitude of the NV-P1 double-flip coefficient, 3(1 - n_z^2)/(2 sqrt 2).
    pub a_flip: f64,
    /// NV-P1 Ising coefficient, 3 n_z^2 - 1.
    pub b_ising: f64,
    /// P1-P1 flip-flop coefficient, (1 - 3 n_z^2)/4.
    pub a_tilde: f64,
    /// P1-P1 Ising coefficient, 3 n_z^2 - 1.
    pub b_tilde: f64,
    /// Unit separation vector.
    pub n: [f64; 3],
}

/// Angular coefficients for the pair (r_i, r_j).
pub fn angular_coefficients(r_i: [f64; 3], r_j: [f64; 3]) -> Result<AngularCoeff> {
    let d = [r_j[0] - r_i[0], r_j[1] - r_i[1], r_j[2] - r_i[2]];
    let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if norm == 0.0 {
        return Err(Error::CoincidentPositions);
    }
    let n = [d[0] / norm, d[1] / norm, d[2] / norm];
    let nz2 = n[2] * n[2];
    Ok(AngularCoeff {
        a_flip: 3.0 * (1.0 - nz2) / (2.0 * std::f64::consts::SQRT_2),
        b_ising: 3.0 * nz2 - 1.0,
        a_tilde: (1.0 - 3.0 * nz2) / 4.0,
        b_tilde: 3.0 * nz2 - 1.0,
        n,
    })
}

/// Convert a defect density from ppm of carbon sites to nm^-3.
pub fn ppm_to_density(ppm: f64, constants: &PhysicalConstants) -> f64 {
    ppm * 1e-6 * constants.carbon_density
}

/// Radius of the sphere holding `n` spins at number density `density`.
pub fn sphere_radius(n: usize, density: f64) -> f64 {
    (3.0 * n as f64 / (4.0 * PI * density)).powf(1.0 / 3.0)
}

fn sample_delta(dist: &FieldDistribution, w: f64, rng: &mut ChaCha8Rng) -> f64 {
    if w == 0.0 {
        if let FieldDistribution::Empirical { .. } = dist {
        } else {
            return 0.0;
        }
    }
    match dist {
        FieldDistribution::Lorentzian => {
            let u: f64 = rng.random();
            0.5 * w * (PI * (u - 0.5)).tan()
        }
        FieldDistribution::Gaussian => {
            let sigma = w / (2.0 * (2.0 * (2.0f64).ln()).sqrt());
            let z: f64 = StandardNormal.sample(rng);
            sigma * z
        }
        FieldDistribution::Empirical { values, weights } => {
            let total: f64 = weights.iter().sum();
            let mut target: f64 = rng.random::<f64>() * total;
            for (v, w) in values.iter().zip(weights) {
                target -= w;
                if target <= 0.0 {
                    return *v;
                }
            }
            *values.last().unwrap()
        }
    }
}

const PLACEMENT_ATTEMPTS_PER_SPIN: usize = 10_000;

/// Generate disorder realization `realization` of the family `spec`.
///
/// Spins are placed uniformly in a sphere whose radius fixes the effective
/// resonant density nu * rho_p1; placement rejects any candidate closer than
/// `r_cut` to an existing spin. Bit-identical under (spec, realization).
pub fn generate_realization(
    spec: &EnsembleSpec,
    constants: &PhysicalConstants,
    realization: u32,
) -> Result<SpinEnsemble> {
    spec.validate()?;
    let mut rng = ensemble_stream(spec.seed, realization);

    let density = spec.nu * ppm_to_density(spec.rho_p1, constants);
    let box_radius = sphere_radius(spec.n_spins, density);
    let has_nv = spec.rho_nv > 0.0;
    let total = spec.n_spins + usize::from(has_nv);

    let mut positions: Vec<[f64; 3]> = Vec::with_capacity(total);
    // Probe spin at the origin: the NV for NV-centered protocols, otherwise
    // the P1 whose polarization the walk tracks.
    positions.push([0.0, 0.0, 0.0]);
    let r_cut2 = spec.r_cut * spec.r_cut;
    while positions.len() < total {
        let mut placed = false;
        for _ in 0..PLACEMENT_ATTEMPTS_PER_SPIN {
            let dir: [f64; 3] = UnitSphere.sample(&mut rng);
            let r = box_radius * rng.random::<f64>().cbrt();
            let cand = [r * dir[0], r * dir[1], r * dir[2]];
            let ok = positions.iter().all(|p| {
                let d2 = (p[0] - cand[0]).powi(2)
                    + (p[1] - cand[1]).powi(2)
                    + (p[2] - cand[2]).powi(2);
                d2 >= r_cut2
            });
            if ok {
                positions.push(cand);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::PackingInfeasible {
                placed: positions.len(),
                requested: total,
                attempts: PLACEMENT_ATTEMPTS_PER_SPIN,
                r_cut: spec.r_cut,
            });
        }
    }

    let mut species = vec![Species::P1; total];
    if has_nv {
        species[0] = Species::Nv;
    }
    let delta: Vec<f64> = (0..total)
        .map(|_| sample_delta(&spec.field_distribution, spec.field_width_w, &mut rng))
        .collect();

    Ok(SpinEnsemble {
        positions,
        species,
        subgroup: vec![spec.nu; total],
        delta,
        box_radius,
    })
}

/// Generate the first realization of `spec`.
pub fn generate_ensemble(
    spec: &EnsembleSpec,
    constants: &PhysicalConstants,
) -> Result<SpinEnsemble> {
    generate_realization(spec, constants, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn consts() -> PhysicalConstants {
        PhysicalConstants::default()
    }

    #[test]
    fn ppm_conversion() {
        let c = consts();
        assert_eq!(ppm_to_density(0.0, &c), 0.0);
        // 110 ppm at 176.5 nm^-3 carbon sites.
        assert_relative_eq!(ppm_to_density(110.0, &c), 1.9415e-2, max_relative = 1e-3);
        assert_relative_eq!(ppm_to_density(1.0, &c), 1.765e-4, max_relative = 1e-3);
    }

    #[test]
    fn box_radius_from_effective_density() {
        let spec = EnsembleSpec {
            n_spins: 300,
            nu: 1.0 / 3.0,
            rho_p1: 110.0,
            r_cut: 0.0,
            ..Default::default()
        };
        let ens = generate_ensemble(&spec, &consts()).unwrap();
        assert_eq!(ens.len(), 300);
        assert_relative_eq!(ens.box_radius, 22.28, max_relative = 5e-3);
        let density = spec.nu * ppm_to_density(spec.rho_p1, &consts());
        assert_relative_eq!(density, 6.47e-3, max_relative = 5e-3);
    }

    #[test]
    fn deterministic_under_seed() {
        let spec = EnsembleSpec {
            n_spins: 2,
            r_cut: 0.0,
            ..Default::default()
        };
        let a = generate_ensemble(&spec, &consts()).unwrap();
        let b = generate_ensemble(&spec, &consts()).unwrap();
        assert_eq!(a.positions, b.positions);
        assert_eq!(a.delta, b.delta);
        let c = generate_realization(&spec, &consts(), 1).unwrap();
        assert_ne!(a.positions, c.positions);
    }

    #[test]
    fn zero_width_fields_are_zero() {
        let spec = EnsembleSpec {
            n_spins: 50,
            field_width_w: 0.0,
            ..Default::default()
        };
        let ens = generate_ensemble(&spec, &consts()).unwrap();
        assert!(ens.delta.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn r_cut_is_enforced() {
        let spec = EnsembleSpec {
            n_spins: 200,
            r_cut: 3.0,
            ..Default::default()
        };
        let ens = generate_ensemble(&spec, &consts()).unwrap();
        for i in 0..ens.len() {
            for j in (i + 1)..ens.len() {
                assert!(ens.distance(i, j) >= 3.0 - 1e-12);
            }
        }
    }

    #[test]
    fn packing_failure_reported() {
        let spec = EnsembleSpec {
            n_spins: 30,
            nu: 1.0,
            rho_p1: 1e5,
            r_cut: 2.0,
            ..Default::default()
        };
        match generate_ensemble(&spec, &consts()) {
            Err(Error::PackingInfeasible { .. }) => {}
            other => panic!("expected packing failure, got {other:?}"),
        }
    }

    #[test]
    fn nv_present_iff_density_positive() {
        let mut spec = EnsembleSpec {
            n_spins: 10,
            ..Default::default()
        };
        let ens = generate_ensemble(&spec, &consts()).unwrap();
        assert_eq!(ens.species[0], Species::P1);
        assert_eq!(ens.len(), 10);
        spec.rho_nv = 0.5;
        let ens = generate_ensemble(&spec, &consts()).unwrap();
        assert_eq!(ens.species[0], Species::Nv);
        assert_eq!(ens.len(), 11);
        assert_eq!(ens.positions[0], [0.0, 0.0, 0.0]);
    }

    #[test]
    fn angular_axis_aligned() {
        let c = angular_coefficients([0.0; 3], [0.0, 0.0, 2.0]).unwrap();
        assert_relative_eq!(c.b_ising, 2.0, epsilon = 1e-14);
        assert_relative_eq!(c.a_tilde, -0.5, epsilon = 1e-14);
        assert_relative_eq!(c.a_flip, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn angular_in_plane() {
        let c = angular_coefficients([0.0; 3], [3.0, 4.0, 0.0]).unwrap();
        assert_relative_eq!(c.b_ising, -1.0, epsilon = 1e-14);
        assert_relative_eq!(c.a_tilde, 0.25, epsilon = 1e-14);
        assert_relative_eq!(c.a_flip, 3.0 / (2.0 * std::f64::consts::SQRT_2), epsilon = 1e-14);
        assert_relative_eq!(c.a_flip, 1.0607, max_relative = 1e-4);
    }

    #[test]
    fn angular_magic_angle() {
        let nz = (1.0f64 / 3.0).sqrt();
        let nx = (2.0f64 / 3.0).sqrt();
        let c = angular_coefficients([0.0; 3], [nx, 0.0, nz]).unwrap();
        assert_relative_eq!(c.b_ising, 0.0, epsilon = 1e-13);
        assert_relative_eq!(c.a_tilde, 0.0, epsilon = 1e-13);
    }

    #[test]
    fn angular_symmetric_under_exchange() {
        let mut rng = crate::rng::stream(11, 0, 0);
        for _ in 0..64 {
            let a = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
            let b = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
            let ij = angular_coefficients(a, b).unwrap();
            let ji = angular_coefficients(b, a).unwrap();
            assert_relative_eq!(ij.b_ising, ji.b_ising, epsilon = 1e-14);
            assert_relative_eq!(ij.a_tilde, ji.a_tilde, epsilon = 1e-14);
            assert_relative_eq!(ij.a_flip.abs(), ji.a_flip.abs(), epsilon = 1e-14);
            // Both P1-P1 coefficients derive from the same 3 n_z^2 - 1.
            assert_relative_eq!(ij.a_tilde, -ij.b_tilde / 4.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn coincident_positions_rejected() {
        assert!(matches!(
            angular_coefficients([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]),
            Err(Error::CoincidentPositions)
        ));
    }

    #[test]
    fn unit_vector_normalized() {
        let c = angular_coefficients([1.0, -2.0, 0.5], [4.0, 0.0, -1.0]).unwrap();
        let n2 = c.n[0] * c.n[0] + c.n[1] * c.n[1] + c.n[2] * c.n[2];
        assert_relative_eq!(n2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn radial_distribution_is_uniform() {
        // chi^2 of (r/R)^3 against Uniform(0,1) over 20 bins; probe excluded.
        let spec = EnsembleSpec {
            n_spins: 20_000,
            r_cut: 0.0,
            nu: 1.0,
            rho_p1: 110.0,
            seed: 42,
            ..Default::default()
        };
        let ens = generate_ensemble(&spec, &consts()).unwrap();
        let mut bins = [0usize; 20];
        let mut n = 0usize;
        for p in ens.positions.iter().skip(1) {
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            let u = (r / ens.box_radius).powi(3);
            bins[((u * 20.0) as usize).min(19)] += 1;
            n += 1;
        }
        let expect = n as f64 / 20.0;
        let chi2: f64 = bins.iter().map(|&b| (b as f64 - expect).powi(2) / expect).sum();
        // 19 dof; 0.999 quantile is 43.8.
        assert!(chi2 < 45.0, "chi2 = {chi2}");
    }

    #[test]
    fn lorentzian_field_median() {
        let w = crate::constants::mhz(4.5);
        let spec = EnsembleSpec {
            n_spins: 20_000,
            r_cut: 0.0,
            field_width_w: w,
            seed: 7,
            ..Default::default()
        };
        let ens = generate_ensemble(&spec, &consts()).unwrap();
        let mut abs: Vec<f64> = ens.delta.iter().map(|d| d.abs()).collect();
        abs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = abs[abs.len() / 2];
        // Median of |Cauchy(w/2)| is w/2; analytic standard error of the
        // sample median is pi (w/2) / (2 sqrt n).
        let se = PI * (0.5 * w) / (2.0 * (abs.len() as f64).sqrt());
        assert!((median - 0.5 * w).abs() < 3.0 * se, "median {median}, w/2 {}", 0.5 * w);
    }

    #[test]
    fn gaussian_field_mean_abs() {
        let w = 10.0;
        let spec = EnsembleSpec {
            n_spins: 20_000,
            r_cut: 0.0,
            field_width_w: w,
            field_distribution: FieldDistribution::Gaussian,
            seed: 9,
            ..Default::default()
        };
        let ens = generate_ensemble(&spec, &consts()).unwrap();
        let sigma = w / (2.0 * (2.0 * (2.0f64).ln()).sqrt());
        let n = ens.delta.len() as f64;
        let mean_abs = ens.delta.iter().map(|d| d.abs()).sum::<f64>() / n;
        let expect = sigma * (2.0 / PI).sqrt();
        let se = (sigma * sigma * (1.0 - 2.0 / PI) / n).sqrt();
        assert!((mean_abs - expect).abs() < 3.0 * se);
    }

    #[test]
    fn empirical_field_sampling() {
        let spec = EnsembleSpec {
            n_spins: 5_000,
            r_cut: 0.0,
            field_distribution: FieldDistribution::Empirical {
                values: vec![-1.0, 0.0, 1.0],
                weights: vec![0.25, 0.5, 0.25],
            },
            seed: 3,
            ..Default::default()
        };
        let ens = generate_ensemble(&spec, &consts()).unwrap();
        let zero = ens.delta.iter().filter(|&&d| d == 0.0).count() as f64;
        let frac = zero / ens.delta.len() as f64;
        assert!((frac - 0.5).abs() < 0.05);
        assert!(ens.delta.iter().all(|d| [-1.0, 0.0, 1.0].contains(d)));
    }
}
