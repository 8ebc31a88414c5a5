//! Spectral propagation: diagonalize a block once, then evaluate the state at
//! any time as `V · (c ⊙ e^{−2πi E t})` with `E` in MHz and `t` in μs.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use rayon::prelude::*;

use crate::basis::{Parity, SymmetryBlock};
use crate::error::{CrmError, Result};
use crate::hamiltonian::HamiltonianBlock;
use crate::molecule::{FieldPoint, MoleculeSpec};
use crate::observables::{Observable, RotationalProbe, Sample, TimeSeries};
use crate::pulse::{cos2_matrix, KickResult};
use crate::scalar::{unit_phase, Real};

/// `‖H v − λ v‖ ≤ RESIDUAL_TOLERANCE · ‖H‖` in double precision.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// `max |VᵀV − 1| ≤ ORTHONORMALITY_TOLERANCE` in double precision.
pub const ORTHONORMALITY_TOLERANCE: f64 = 1e-11;
/// `|‖c‖ − 1|` accepted for a wavepacket in double precision.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Time samples propagated together in one matrix product. Fixed so that the
/// arithmetic does not depend on how many threads share the work.
const CHUNK: usize = 64;

/// Tolerances are stated for `f64` and widened by the unit roundoff ratio for
/// narrower types.
fn widen<T: Real>(tolerance: f64) -> f64 {
    tolerance * (T::EPSILON / f64::EPSILON)
}

#[derive(Clone, Debug)]
pub struct EigenSystem<T: Real> {
    eigenvalues: Vec<T>,
    eigenvectors: DMatrix<T>,
    block: Arc<SymmetryBlock>,
    field: FieldPoint,
    max_residual: f64,
    orthonormality_defect: f64,
}

impl<T: Real> EigenSystem<T> {
    /// Ascending, in MHz.
    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    /// Column `k` is the eigenvector of `eigenvalues()[k]`.
    pub fn eigenvectors(&self) -> &DMatrix<T> {
        &self.eigenvectors
    }

    pub fn block(&self) -> &Arc<SymmetryBlock> {
        &self.block
    }

    pub fn field(&self) -> FieldPoint {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Largest `‖H v − λ v‖ / ‖H‖` found when the system was built.
    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }

    pub fn orthonormality_defect(&self) -> f64 {
        self.orthonormality_defect
    }
}

/// Full spectrum of a Hamiltonian block, checked for residuals and
/// orthonormality.
pub fn diagonalize<T: Real>(h: &HamiltonianBlock<T>) -> Result<EigenSystem<T>> {
    let (eigenvalues, eigenvectors) = symmetric_eigen(h.total().clone());
    let norm = eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.as_f64().abs()));

    let max_residual = if norm == 0.0 {
        0.0
    } else {
        let hv = h.total() * &eigenvectors;
        (0..eigenvalues.len())
            .into_par_iter()
            .map(|k| {
                let lambda = eigenvalues[k].as_f64();
                let r: f64 = (0..hv.nrows())
                    .map(|i| {
                        let d = hv[(i, k)].as_f64() - lambda * eigenvectors[(i, k)].as_f64();
                        d * d
                    })
                    .sum();
                r.sqrt() / norm
            })
            .reduce(|| 0.0, f64::max)
    };
    let tolerance = widen::<T>(RESIDUAL_TOLERANCE);
    if max_residual > tolerance {
        return Err(CrmError::Convergence {
            residual: max_residual,
            tolerance,
        });
    }

    let gram = eigenvectors.tr_mul(&eigenvectors);
    let mut orthonormality_defect: f64 = 0.0;
    for j in 0..gram.ncols() {
        for i in 0..gram.nrows() {
            let target = if i == j { 1.0 } else { 0.0 };
            orthonormality_defect = orthonormality_defect.max((gram[(i, j)].as_f64() - target).abs());
        }
    }
    let tolerance = widen::<T>(ORTHONORMALITY_TOLERANCE);
    if orthonormality_defect > tolerance {
        return Err(CrmError::Convergence {
            residual: orthonormality_defect,
            tolerance,
        });
    }

    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
        block: Arc::clone(h.block()),
        field: h.field(),
        max_residual,
        orthonormality_defect,
    })
}

/// Eigenpairs of a real symmetric matrix, sorted by ascending eigenvalue.
pub fn symmetric_eigen<T: Real>(h: DMatrix<T>) -> (Vec<T>, DMatrix<T>) {
    let n = h.nrows();
    if n == 0 {
        return (Vec::new(), h);
    }
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("finite eigenvalues")
    });
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// Fraction of a turn in `E·t`, reduced to `[0, 1)`.
///
/// The rounding error of the product is recovered with a fused multiply-add
/// so that the fraction stays accurate when `E·t` is of order 10¹⁰ cycles.
pub fn reduced_cycles(energy_mhz: f64, t_us: f64) -> f64 {
    let p = energy_mhz * t_us;
    let err = energy_mhz.mul_add(t_us, -p);
    let frac = (p - p.floor()) + err;
    let frac = frac - frac.floor();
    // frac can round up to exactly 1.0 when err is a tiny negative number
    if frac >= 1.0 {
        0.0
    } else {
        frac
    }
}

/// A pure state expanded in the eigenbasis of one block.
#[derive(Clone, Debug)]
pub struct Wavepacket<T: Real> {
    eigensystem: Arc<EigenSystem<T>>,
    coefficients: Vec<Complex<T>>,
}

impl<T: Real> Wavepacket<T> {
    /// Projects a normalized product-basis vector onto the eigenbasis.
    pub fn from_state(eigensystem: Arc<EigenSystem<T>>, state: &DVector<Complex<T>>) -> Result<Self> {
        let dim = eigensystem.dim();
        if state.len() != dim {
            return Err(CrmError::DimensionMismatch {
                expected: dim,
                found: state.len(),
            });
        }
        let re = DVector::from_iterator(dim, state.iter().map(|z| z.re));
        let im = DVector::from_iterator(dim, state.iter().map(|z| z.im));
        let v = eigensystem.eigenvectors();
        let (c_re, c_im) = (v.tr_mul(&re), v.tr_mul(&im));
        let coefficients: Vec<Complex<T>> = c_re.iter().zip(c_im.iter()).map(|(&a, &b)| Complex::new(a, b)).collect();
        let wp = Wavepacket {
            eigensystem,
            coefficients,
        };
        let norm = wp.norm();
        if (norm - 1.0).abs() > widen::<T>(NORM_TOLERANCE).max(NORM_TOLERANCE * dim as f64) {
            return Err(CrmError::NotNormalized(norm));
        }
        Ok(wp)
    }

    pub fn eigensystem(&self) -> &Arc<EigenSystem<T>> {
        &self.eigensystem
    }

    pub fn coefficients(&self) -> &[Complex<T>] {
        &self.coefficients
    }

    pub fn norm(&self) -> f64 {
        self.coefficients
            .iter()
            .map(|z| z.norm_sqr().as_f64())
            .sum::<f64>()
            .sqrt()
    }

    /// `⟨H⟩ = Σ |c_k|² E_k` in MHz.
    pub fn energy(&self) -> f64 {
        self.coefficients
            .iter()
            .zip(self.eigensystem.eigenvalues())
            .map(|(c, e)| c.norm_sqr().as_f64() * e.as_f64())
            .sum()
    }

    fn phased(&self, t_us: f64) -> impl Iterator<Item = Complex<T>> + '_ {
        self.coefficients
            .iter()
            .zip(self.eigensystem.eigenvalues())
            .map(move |(c, e)| *c * unit_phase::<T>(reduced_cycles(e.as_f64(), t_us)))
    }

    /// The same state `t_us` later, still in the eigenbasis.
    pub fn advance(&self, t_us: f64) -> Wavepacket<T> {
        Wavepacket {
            eigensystem: Arc::clone(&self.eigensystem),
            coefficients: self.phased(t_us).collect(),
        }
    }

    /// Product-basis state at `t_us`.
    pub fn state_at(&self, t_us: f64) -> DVector<Complex<T>> {
        let dim = self.eigensystem.dim();
        let (re, im): (Vec<T>, Vec<T>) = self.phased(t_us).map(|z| (z.re, z.im)).unzip();
        let v = self.eigensystem.eigenvectors();
        let psi_re = v * DVector::from_vec(re);
        let psi_im = v * DVector::from_vec(im);
        DVector::from_fn(dim, |i, _| Complex::new(psi_re[i], psi_im[i]))
    }

    /// Product-basis states at several times, one column per time.
    pub fn states_at(&self, times_us: &[f64]) -> DMatrix<Complex<T>> {
        let dim = self.eigensystem.dim();
        let mut c_re = DMatrix::<T>::zeros(dim, times_us.len());
        let mut c_im = DMatrix::<T>::zeros(dim, times_us.len());
        for (col, &t) in times_us.iter().enumerate() {
            for (k, z) in self.phased(t).enumerate() {
                c_re[(k, col)] = z.re;
                c_im[(k, col)] = z.im;
            }
        }
        let v = self.eigensystem.eigenvectors();
        let (psi_re, psi_im) = (v * c_re, v * c_im);
        DMatrix::from_fn(dim, times_us.len(), |i, j| Complex::new(psi_re[(i, j)], psi_im[(i, j)]))
    }
}

/// Strictly increasing sample times, kept in μs and in units of `t_R`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    period_us: f64,
    t_over_tr: Vec<f64>,
    t_us: Vec<f64>,
}

impl TimeGrid {
    /// Times given in units of the rotational period `period_us`.
    pub fn from_tr(period_us: f64, t_over_tr: Vec<f64>) -> Result<Self> {
        if !(period_us.is_finite() && period_us > 0.0) {
            return Err(CrmError::TimeGrid(format!("rotational period must be positive, got {period_us}")));
        }
        if t_over_tr.is_empty() {
            return Err(CrmError::TimeGrid("no sample times".into()));
        }
        if let Some(t) = t_over_tr.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(CrmError::TimeGrid(format!("sample time {t} t_R is not a finite non-negative number")));
        }
        if let Some(w) = t_over_tr.windows(2).find(|w| w[1] <= w[0]) {
            return Err(CrmError::TimeGrid(format!(
                "sample times must increase strictly, found {} then {}",
                w[0], w[1]
            )));
        }
        let t_us = t_over_tr.iter().map(|t| t * period_us).collect();
        Ok(TimeGrid {
            period_us,
            t_over_tr,
            t_us,
        })
    }

    /// `samples` uniformly spaced points on `[start, start + length]`, both
    /// ends included, in units of `t_R`.
    pub fn window(period_us: f64, start_tr: f64, length_tr: f64, samples: usize) -> Result<Self> {
        if samples == 0 {
            return Err(CrmError::TimeGrid("at least one sample is required".into()));
        }
        if samples > 1 && (length_tr.is_nan() || length_tr <= 0.0) {
            return Err(CrmError::TimeGrid(format!("window length must be positive, got {length_tr}")));
        }
        let step = if samples > 1 { length_tr / (samples - 1) as f64 } else { 0.0 };
        let times = (0..samples).map(|k| start_tr + step * k as f64).collect();
        Self::from_tr(period_us, times)
    }

    /// `samples` logarithmically spaced points from `first_tr` to `last_tr`.
    pub fn log_spaced(period_us: f64, first_tr: f64, last_tr: f64, samples: usize) -> Result<Self> {
        if !(first_tr > 0.0 && last_tr > first_tr) || samples < 2 {
            return Err(CrmError::TimeGrid(format!(
                "log grid needs 0 < first < last and two samples, got [{first_tr}, {last_tr}] with {samples}"
            )));
        }
        let (a, b) = (first_tr.ln(), last_tr.ln());
        let step = (b - a) / (samples - 1) as f64;
        let mut times: Vec<f64> = (0..samples).map(|k| (a + step * k as f64).exp()).collect();
        times[0] = first_tr;
        times[samples - 1] = last_tr;
        Self::from_tr(period_us, times)
    }

    pub fn period_us(&self) -> f64 {
        self.period_us
    }

    pub fn t_us(&self) -> &[f64] {
        &self.t_us
    }

    pub fn t_over_tr(&self) -> &[f64] {
        &self.t_over_tr
    }

    pub fn len(&self) -> usize {
        self.t_us.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_us.is_empty()
    }
}

/// Observables of the propagated wavepacket at every grid point.
pub fn propagate_series<T: Real>(wp: &Wavepacket<T>, grid: &TimeGrid, observers: &[Observable]) -> TimeSeries {
    let probe = RotationalProbe::new(wp.eigensystem().block());
    let samples: Vec<Sample> = grid
        .t_us()
        .par_chunks(CHUNK)
        .flat_map_iter(|times| {
            let states = wp.states_at(times);
            (0..times.len())
                .map(|j| probe.sample(states.column(j).as_slice(), observers))
                .collect::<Vec<_>>()
        })
        .collect();
    let mut series = TimeSeries::with_capacity(observers, probe.manifolds(), grid.len());
    for ((&t, &tr), s) in grid.t_us().iter().zip(grid.t_over_tr()).zip(&samples) {
        series.push(t, tr, s);
    }
    series
}

/// The spin-free rigid-rotor reference for the same kick, with phases
/// `B_e N(N+1)`. Purity is 1 and entropy 0 by construction.
pub fn pure_rotor_series<T: Real>(
    spec: &MoleculeSpec,
    kick: &KickResult<T>,
    grid: &TimeGrid,
    observers: &[Observable],
) -> TimeSeries {
    let a = cos2_matrix(kick.n_kick, Parity::Even);
    let levels: Vec<(u32, Complex<f64>)> = kick
        .iter()
        .map(|(n, d)| (n, Complex::new(d.re.as_f64(), d.im.as_f64())))
        .collect();
    let manifolds: Vec<u32> = levels.iter().map(|(n, _)| *n).collect();
    let sample_at = |t_us: f64| {
        let psi: Vec<Complex<f64>> = levels
            .iter()
            .map(|&(n, d)| {
                let energy = spec.b_e * f64::from(n) * f64::from(n + 1);
                d * unit_phase::<f64>(reduced_cycles(energy, t_us))
            })
            .collect();
        let weights: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
        let mut alignment = 0.0;
        for i in 0..psi.len() {
            alignment += weights[i] * a[(i, i)];
            if i + 1 < psi.len() {
                alignment += 2.0 * a[(i, i + 1)] * (psi[i].conj() * psi[i + 1]).re;
            }
        }
        Sample {
            alignment,
            purity: 1.0,
            entropy_bits: 0.0,
            mean_n: manifolds.iter().zip(&weights).map(|(&n, w)| f64::from(n) * w).sum(),
            populations: weights.clone(),
            norm_sqr: weights.iter().sum(),
        }
    };
    let samples: Vec<Sample> = grid.t_us().par_iter().map(|&t| sample_at(t)).collect();
    let mut series = TimeSeries::with_capacity(observers, &manifolds, grid.len());
    for ((&t, &tr), s) in grid.t_us().iter().zip(grid.t_over_tr()).zip(&samples) {
        series.push(t, tr, s);
    }
    series
}
