//! Impulsive alignment kick `U = exp(i P cos²θ)` acting on `|N=0, M_N=0⟩`.

use log::warn;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use serde::Serialize;

use crate::angmom::{rotor_tensor_element, HalfInt};
use crate::basis::{BasisState, Parity, SymmetryBlock};
use crate::error::{CrmError, Result};
use crate::scalar::Real;

/// Largest kick leakage accepted when building an initial state.
pub const DEFAULT_LEAKAGE_THRESHOLD: f64 = 1e-8;

/// Extra rotational levels carried by the kick beyond the propagation cutoff.
pub const KICK_MARGIN: u32 = 20;

/// Population in the top two kick levels above which the kick is reported as
/// unconverged.
const TAIL_WARNING: f64 = 1e-10;

pub fn default_n_kick(n_max: u32) -> u32 {
    n_max + KICK_MARGIN
}

/// `⟨N 0| cos²θ |N' 0⟩` for `N, N' ≤ n`, both of the given parity.
pub fn cos2_matrix(n: u32, parity: Parity) -> DMatrix<f64> {
    let ns: Vec<u32> = levels(n, parity).collect();
    DMatrix::from_fn(ns.len(), ns.len(), |i, j| {
        let (a, b) = (HalfInt::from_int(ns[i] as i32), HalfInt::from_int(ns[j] as i32));
        let diagonal = if i == j { 1.0 / 3.0 } else { 0.0 };
        diagonal + 2.0 / 3.0 * rotor_tensor_element(a, HalfInt::ZERO, 2, 0, b, HalfInt::ZERO)
    })
}

fn levels(n: u32, parity: Parity) -> impl Iterator<Item = u32> {
    let first = match parity {
        Parity::Even => 0,
        Parity::Odd => 1,
    };
    (first..=n).step_by(2)
}

/// Rotational amplitudes `d_{N0}` after the kick.
#[derive(Clone, Debug, Serialize)]
pub struct KickResult<T: Real> {
    /// Dimensionless pulse strength `P`.
    pub strength: f64,
    /// Highest `N` kept.
    pub n_kick: u32,
    /// `d_{N0}` at index `N/2`, i.e. for `N = 0, 2, …, n_kick`.
    #[serde(skip)]
    pub amplitudes: Vec<Complex<T>>,
    /// Population discarded by the last truncation.
    pub leakage: f64,
}

impl<T: Real> KickResult<T> {
    pub fn amplitude(&self, n: u32) -> Complex<T> {
        if n % 2 == 1 {
            return Complex::new(T::zero(), T::zero());
        }
        self.amplitudes
            .get((n / 2) as usize)
            .copied()
            .unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    /// `(N, d_{N0})` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (u32, Complex<T>)> + '_ {
        self.amplitudes.iter().enumerate().map(|(k, d)| (2 * k as u32, *d))
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|d| d.norm_sqr().as_f64()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.populations().iter().sum()
    }

    /// `Σ N |d_{N0}|²`.
    pub fn mean_n(&self) -> f64 {
        self.iter().map(|(n, d)| f64::from(n) * d.norm_sqr().as_f64()).sum()
    }

    /// Number of levels with population above `threshold`.
    pub fn populated_levels(&self, threshold: f64) -> usize {
        self.populations().iter().filter(|&&p| p > threshold).count()
    }

    /// Population held by the two highest kick levels.
    pub fn tail_population(&self) -> f64 {
        self.populations().iter().rev().take(2).sum()
    }

    /// `⟨cos²θ⟩` of the rotational wavepacket, within the kept levels.
    pub fn alignment(&self) -> f64 {
        let a = cos2_matrix(self.n_kick, Parity::Even);
        let d: Vec<Complex<f64>> = self
            .amplitudes
            .iter()
            .map(|z| Complex::new(z.re.as_f64(), z.im.as_f64()))
            .collect();
        let mut total = Complex::new(0.0, 0.0);
        for i in 0..d.len() {
            for j in 0..d.len() {
                total += d[i].conj() * a[(i, j)] * d[j];
            }
        }
        total.re
    }

    /// Keeps `N ≤ n_max`, renormalizes, and records the discarded population.
    pub fn truncate(&self, n_max: u32) -> KickResult<T> {
        let keep = (n_max.min(self.n_kick) / 2 + 1) as usize;
        let kept: Vec<Complex<T>> = self.amplitudes[..keep].to_vec();
        let retained: f64 = kept.iter().map(|d| d.norm_sqr().as_f64()).sum();
        let scale = T::of(1.0 / retained.sqrt());
        KickResult {
            strength: self.strength,
            n_kick: 2 * (keep as u32 - 1),
            amplitudes: kept.into_iter().map(|d| d * scale).collect(),
            leakage: (1.0 - retained).max(0.0),
        }
    }
}

/// `d_{N0} = ⟨N 0| exp(i P cos²θ) |0 0⟩` over even `N ≤ n_kick`.
pub fn kick_amplitudes<T: Real>(strength: f64, n_kick: u32) -> Result<KickResult<T>> {
    if !(strength.is_finite() && strength >= 0.0) {
        return Err(CrmError::Domain(format!(
            "pulse strength must be finite and non-negative, got {strength}"
        )));
    }
    let a = cos2_matrix(n_kick, Parity::Even).map(T::of);
    let eig = SymmetricEigen::new(a);
    let p = T::of(strength);
    let amplitudes: Vec<Complex<T>> = (0..eig.eigenvectors.nrows())
        .map(|row| {
            let mut d = Complex::new(T::zero(), T::zero());
            for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
                let weight = eig.eigenvectors[(row, k)] * eig.eigenvectors[(0, k)];
                let phase = p * lambda;
                d += Complex::new(phase.cos(), phase.sin()) * weight;
            }
            d
        })
        .collect();
    let result = KickResult {
        strength,
        n_kick: 2 * (amplitudes.len() as u32 - 1),
        amplitudes,
        leakage: 0.0,
    };
    let tail = result.tail_population();
    if tail > TAIL_WARNING {
        warn!(
            "kick with P = {strength} is not converged at N_kick = {}: tail population {tail:e}",
            result.n_kick
        );
    }
    Ok(result)
}

/// Product state `Σ_N d_{N0} |N 0⟩ ⊗ |M_I1 M_I2⟩` in the block basis.
pub fn initial_state<T: Real>(
    block: &SymmetryBlock,
    kick: &KickResult<T>,
    m_i1: HalfInt,
    m_i2: HalfInt,
) -> Result<DVector<Complex<T>>> {
    initial_state_with_threshold(block, kick, m_i1, m_i2, DEFAULT_LEAKAGE_THRESHOLD)
}

pub fn initial_state_with_threshold<T: Real>(
    block: &SymmetryBlock,
    kick: &KickResult<T>,
    m_i1: HalfInt,
    m_i2: HalfInt,
    threshold: f64,
) -> Result<DVector<Complex<T>>> {
    let ground = BasisState {
        n: HalfInt::ZERO,
        m_n: HalfInt::ZERO,
        m_i1,
        m_i2,
    };
    if block.parity() != Parity::Even || block.index_of(&ground).is_none() {
        return Err(CrmError::StateNotInBlock(format!(
            "{ground} (block M_F = {}, {} parity)",
            block.m_f(),
            block.parity()
        )));
    }
    let truncated = kick.truncate(block.n_max());
    let leakage = kick.leakage.max(truncated.leakage);
    if leakage > threshold {
        return Err(CrmError::Leakage {
            leakage,
            threshold,
            n_max: block.n_max(),
        });
    }
    let mut state = DVector::from_element(block.dim(), Complex::new(T::zero(), T::zero()));
    for (n, d) in truncated.iter() {
        let s = BasisState {
            n: HalfInt::from_int(n as i32),
            ..ground
        };
        let i = block.index_of(&s).expect("every even N <= N_max carries the ground spin state");
        state[i] = d;
    }
    Ok(state)
}
