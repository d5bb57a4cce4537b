//! Golden-rule polarization-transfer rates between spin pairs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::{angular_coefficients, Species, SpinEnsemble};
use crate::{Error, Result};

/// Linewidth and pumping parameters entering the transfer rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RateParams {
    /// Interaction-induced linewidth gamma, 1/us.
    pub gamma: f64,
    /// Optical pumping rate Gamma_p, 1/us; broadens NV channels while the
    /// laser is on.
    pub gamma_pump: f64,
    /// Excited-state decay rate Gamma_dec, 1/us (NV level-scheme input).
    pub gamma_dec: f64,
    /// Rates below this floor are dropped from the matrix, 1/us.
    pub rate_floor: f64,
}

impl Default for RateParams {
    fn default() -> Self {
        RateParams {
            gamma: 0.5,
            gamma_pump: 0.1,
            gamma_dec: 65.0,
            rate_floor: 1e-10,
        }
    }
}

impl RateParams {
    pub fn validate(&self) -> Result<()> {
        if self.gamma <= 0.0 {
            return Err(Error::invalid("gamma must be positive"));
        }
        if self.gamma_pump < 0.0 || self.gamma_dec < 0.0 {
            return Err(Error::invalid("pump and decay rates must be nonnegative"));
        }
        if self.rate_floor < 0.0 {
            return Err(Error::invalid("rate_floor must be nonnegative"));
        }
        Ok(())
    }
}

/// Golden-rule rate for one pair.
///
/// `j_eff` is the effective flip coupling J0 * (angular coefficient) / r^3 in
/// rad/us; the result is j_eff^2 * 2 gamma / (gamma^2 + (delta_i - delta_j)^2)
/// in 1/us.
pub fn pair_rate(j_eff: f64, delta_i: f64, delta_j: f64, gamma: f64) -> Result<f64> {
    if gamma <= 0.0 {
        return Err(Error::invalid("pair_rate requires gamma > 0"));
    }
    let d = delta_i - delta_j;
    Ok(j_eff * j_eff * 2.0 * gamma / (gamma * gamma + d * d))
}

/// Symmetric pairwise transfer-rate matrix in compressed sparse rows.
///
/// Stores both (i, j) and (j, i) so each row carries its total escape rate
/// and the cumulative branching distribution used for hop selection.
#[derive(Debug, Clone)]
pub struct RateMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<u32>,
    rate: Vec<f64>,
    row_total: Vec<f64>,
    branch_cum: Vec<f64>,
}

impl RateMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.rate.len()
    }

    pub fn row_total(&self, i: usize) -> f64 {
        self.row_total[i]
    }

    /// Entries of row `i` as (column, rate).
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col[r.clone()]
            .iter()
            .zip(&self.rate[r])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i)
            .find(|&(c, _)| c == j)
            .map_or(0.0, |(_, v)| v)
    }

    /// Sample the hop target out of spin `i` given a uniform draw in [0, 1).
    pub fn sample_target(&self, i: usize, u: f64) -> usize {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        debug_assert!(hi > lo);
        let cum = &self.branch_cum[lo..hi];
        let k = cum.partition_point(|&c| c < u).min(cum.len() - 1);
        self.col[lo + k] as usize
    }

    /// Dense copy; intended for the small-system exact solvers.
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Upper-triangle COO entries (i < j), for export.
    pub fn coo(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.row(i)
                .filter(move |&(j, _)| j > i)
                .map(move |(j, v)| (i, j, v))
        })
    }

    /// Build directly from a dense symmetric matrix (zero diagonal assumed).
    pub fn from_dense(m: &nalgebra::DMatrix<f64>) -> Self {
        let n = m.nrows();
        let rows: Vec<Vec<(u32, f64)>> = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| j != i && m[(i, j)] != 0.0)
                    .map(|j| (j as u32, m[(i, j)]))
                    .collect()
            })
            .collect();
        Self::from_rows(rows)
    }

    fn from_rows(rows: Vec<Vec<(u32, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0usize);
        let nnz: usize = rows.iter().map(|r| r.len()).sum();
        let mut col = Vec::with_capacity(nnz);
        let mut rate = Vec::with_capacity(nnz);
        let mut row_total = Vec::with_capacity(n);
        let mut branch_cum = Vec::with_capacity(nnz);
        for r in rows {
            let total: f64 = r.iter().map(|&(_, v)| v).sum();
            let mut cum = 0.0;
            for &(c, v) in &r {
                col.push(c);
                rate.push(v);
                cum += v;
                branch_cum.push(if total > 0.0 { cum / total } else { 1.0 });
            }
            // Guard the last slot against rounding so sampling always lands.
            if let Some(last) = branch_cum.last_mut() {
                if total > 0.0 {
                    *last = 1.0;
                }
            }
            row_total.push(total);
            row_ptr.push(col.len());
        }
        RateMatrix {
            n,
            row_ptr,
            col,
            rate,
            row_total,
            branch_cum,
        }
    }
}

fn effective_coupling(ens: &SpinEnsemble, i: usize, j: usize, j0: f64) -> Option<f64> {
    let coeff = angular_coefficients(ens.positions[i], ens.positions[j]).ok()?;
    let r = ens.distance(i, j);
    let angular = match (ens.species[i], ens.species[j]) {
        (Species::P1, Species::P1) => coeff.a_tilde,
        (Species::Nv, Species::P1) | (Species::P1, Species::Nv) => coeff.a_flip,
        (Species::Nv, Species::Nv) => return None,
    };
    Some(j0 * angular / (r * r * r))
}

/// Build the full pairwise rate matrix for one ensemble.
///
/// P1-P1 channels use the flip-flop coefficient, NV-P1 channels the
/// double-flip coefficient with gamma -> gamma + Gamma_p while the laser is
/// on; NV-NV entries are zero. Rates below `params.rate_floor` are dropped.
pub fn build_rate_matrix(
    ens: &SpinEnsemble,
    params: &RateParams,
    laser_on: bool,
    j0: f64,
) -> Result<RateMatrix> {
    params.validate()?;
    let n = ens.len();
    if n < 2 {
        return Err(Error::invalid("rate matrix needs at least 2 spins"));
    }
    let rows: Vec<Vec<(u32, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::new();
            for j in 0..n {
                if j == i {
                    continue;
                }
                let Some(j_eff) = effective_coupling(ens, i, j, j0) else {
                    continue;
                };
                let nv_channel =
                    ens.species[i] == Species::Nv || ens.species[j] == Species::Nv;
                let gamma = if nv_channel && laser_on {
                    params.gamma + params.gamma_pump
                } else {
                    params.gamma
                };
                let rate =
                    pair_rate(j_eff, ens.delta[i], ens.delta[j], gamma).expect("gamma > 0");
                if rate >= params.rate_floor && rate > 0.0 {
                    row.push((j as u32, rate));
                }
            }
            row
        })
        .collect();
    Ok(RateMatrix::from_rows(rows))
}
