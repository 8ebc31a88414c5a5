//! Rotational observables after tracing out the nuclear spins.
//!
//! [`ReducedDensityMatrix`] is the explicit `ρ_R = Tr_B |ψ⟩⟨ψ|`. Long time
//! series go through [`RotationalProbe`] instead, which works on the state
//! vector directly and gets purity and entropy from the bath-side Gram matrix
//! `Ψ†Ψ`; it has the same non-zero spectrum as `ρ_R = ΨΨ†` but is at most
//! `(2I1+1)(2I2+1)` wide.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::angmom::{rotor_tensor_element, HalfInt};
use crate::basis::{rotational_labels, RotorLabel, SymmetryBlock};
use crate::error::{CrmError, Result};
use crate::scalar::Real;

/// Eigenvalues below this are left out of the entropy sum.
pub const ENTROPY_EIGENVALUE_FLOOR: f64 = 1e-14;

/// Tolerance on `‖ψ‖ − 1` accepted by [`reduce`].
pub const NORM_TOLERANCE: f64 = 1e-10;

/// `⟨a| cos²θ |b⟩ = δ/3 + (2/3) ⟨a| C²₀ |b⟩`.
pub fn cos2_element(a: RotorLabel, b: RotorLabel) -> f64 {
    let diagonal = if a == b { 1.0 / 3.0 } else { 0.0 };
    diagonal + 2.0 / 3.0 * rotor_tensor_element(a.n, a.m_n, 2, 0, b.n, b.m_n)
}

/// Base-2 entropy of a probability spectrum, dropping tiny eigenvalues.
pub fn entropy_of_spectrum(eigenvalues: impl IntoIterator<Item = f64>) -> f64 {
    let s: f64 = eigenvalues
        .into_iter()
        .filter(|&p| p >= ENTROPY_EIGENVALUE_FLOOR)
        .map(|p| -p * p.log2())
        .sum();
    s.max(0.0)
}

#[derive(Clone, Debug)]
pub struct ReducedDensityMatrix<T: Real> {
    pub labels: Vec<RotorLabel>,
    pub rho: DMatrix<Complex<T>>,
}

/// Partial trace over `(M_I1, M_I2)` of a pure state living in `block`.
pub fn reduce<T: Real>(state: &DVector<Complex<T>>, block: &SymmetryBlock) -> Result<ReducedDensityMatrix<T>> {
    if state.len() != block.dim() {
        return Err(CrmError::DimensionMismatch {
            expected: block.dim(),
            found: state.len(),
        });
    }
    let norm = state.norm().as_f64();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(CrmError::NotNormalized(norm));
    }
    let partition = rotational_labels(block);
    let zero = Complex::new(T::zero(), T::zero());
    let mut schmidt = DMatrix::from_element(partition.labels.len(), block.bath_dimension(), zero);
    for (i, s) in block.states().iter().enumerate() {
        schmidt[(partition.label_of[i], block.bath_index(s))] = state[i];
    }
    Ok(ReducedDensityMatrix {
        labels: partition.labels,
        rho: &schmidt * schmidt.adjoint(),
    })
}

impl<T: Real> ReducedDensityMatrix<T> {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn trace(&self) -> f64 {
        self.rho.diagonal().iter().map(|z| z.re.as_f64()).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.rho.clone())
            .eigenvalues
            .iter()
            .map(|v| v.as_f64())
            .collect();
        ev.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
        ev
    }

    /// `Tr(ρ_R cos²θ)`.
    pub fn alignment(&self) -> f64 {
        let mut total = 0.0;
        for (i, &a) in self.labels.iter().enumerate() {
            for (j, &b) in self.labels.iter().enumerate() {
                let c = cos2_element(b, a);
                if c != 0.0 {
                    total += self.rho[(i, j)].re.as_f64() * c;
                }
            }
        }
        total
    }

    /// `Tr(ρ_R²)`.
    pub fn purity(&self) -> f64 {
        self.rho.iter().map(|z| z.norm_sqr().as_f64()).sum()
    }

    /// von Neumann entropy in bits.
    pub fn entropy_vn(&self) -> f64 {
        entropy_of_spectrum(self.eigenvalues())
    }

    pub fn mean_n(&self) -> f64 {
        self.labels
            .iter()
            .enumerate()
            .map(|(i, l)| l.n.value() * self.rho[(i, i)].re.as_f64())
            .sum()
    }

    /// Total population of each rotational manifold present, ascending in N.
    pub fn n_populations(&self) -> Vec<(u32, f64)> {
        let mut out: Vec<(u32, f64)> = Vec::new();
        for (i, l) in self.labels.iter().enumerate() {
            let n = l.n.as_int().expect("rotor N is integral") as u32;
            let p = self.rho[(i, i)].re.as_f64();
            match out.last_mut() {
                Some((last, acc)) if *last == n => *acc += p,
                _ => out.push((n, p)),
            }
        }
        out
    }
}

pub fn alignment<T: Real>(rho: &ReducedDensityMatrix<T>) -> f64 {
    rho.alignment()
}

pub fn purity<T: Real>(rho: &ReducedDensityMatrix<T>) -> f64 {
    rho.purity()
}

pub fn entropy_vn<T: Real>(rho: &ReducedDensityMatrix<T>) -> f64 {
    rho.entropy_vn()
}

pub fn mean_n<T: Real>(rho: &ReducedDensityMatrix<T>) -> f64 {
    rho.mean_n()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Alignment,
    Purity,
    Entropy,
    MeanN,
    Populations,
}

impl Observable {
    pub const ALL: [Observable; 5] = [
        Observable::Alignment,
        Observable::Purity,
        Observable::Entropy,
        Observable::MeanN,
        Observable::Populations,
    ];
}

impl FromStr for Observable {
    type Err = CrmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "alignment" | "cos2" => Ok(Observable::Alignment),
            "purity" => Ok(Observable::Purity),
            "entropy" | "entropy_bits" => Ok(Observable::Entropy),
            "mean_n" | "n" => Ok(Observable::MeanN),
            "populations" | "pop" => Ok(Observable::Populations),
            other => Err(CrmError::Config(format!("unknown observable `{other}`"))),
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Observable::Alignment => "alignment",
            Observable::Purity => "purity",
            Observable::Entropy => "entropy",
            Observable::MeanN => "mean_N",
            Observable::Populations => "populations",
        })
    }
}

/// All observables at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub alignment: f64,
    pub purity: f64,
    pub entropy_bits: f64,
    pub mean_n: f64,
    /// Population of each `N` in [`RotationalProbe::manifolds`].
    pub populations: Vec<f64>,
    pub norm_sqr: f64,
}

/// Precomputed index maps for evaluating observables on block state vectors.
#[derive(Clone, Debug)]
pub struct RotationalProbe {
    dim: usize,
    bath_dim: usize,
    bath_of: Vec<usize>,
    n_of: Vec<f64>,
    manifold_of: Vec<usize>,
    manifolds: Vec<u32>,
    members: Vec<Vec<usize>>,
    diagonal_cos2: Vec<f64>,
    /// `(i, j, ⟨i|cos²θ|j⟩)` with `i < j`.
    off_diagonal_cos2: Vec<(usize, usize, f64)>,
}

impl RotationalProbe {
    pub fn new(block: &SymmetryBlock) -> Self {
        let states = block.states();
        let partition = rotational_labels(block);
        let mut manifolds: Vec<u32> = states
            .iter()
            .map(|s| s.n.as_int().expect("rotor N is integral") as u32)
            .collect();
        manifolds.dedup();
        let manifold_of = states
            .iter()
            .map(|s| {
                let n = s.n.as_int().expect("rotor N is integral") as u32;
                manifolds.binary_search(&n).expect("listed above")
            })
            .collect();

        let diagonal_cos2 = states.iter().map(|s| cos2_element(s.rotor(), s.rotor())).collect();
        let mut off_diagonal_cos2 = Vec::new();
        for (i, a) in states.iter().enumerate() {
            // cos²θ keeps spins and M_N; it only links N to N + 2
            let target = crate::basis::BasisState {
                n: a.n + HalfInt::from_int(2),
                ..*a
            };
            if let Some(j) = block.index_of(&target) {
                off_diagonal_cos2.push((i, j, cos2_element(a.rotor(), target.rotor())));
            }
        }

        RotationalProbe {
            dim: block.dim(),
            bath_dim: block.bath_dimension(),
            bath_of: states.iter().map(|s| block.bath_index(s)).collect(),
            n_of: states.iter().map(|s| s.n.value()).collect(),
            manifold_of,
            manifolds,
            members: partition.members,
            diagonal_cos2,
            off_diagonal_cos2,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Distinct rotational quantum numbers present, ascending.
    pub fn manifolds(&self) -> &[u32] {
        &self.manifolds
    }

    /// Bath-side Gram matrix `G = Ψ†Ψ`.
    pub fn bath_gram(&self, state: &[Complex<f64>]) -> DMatrix<Complex<f64>> {
        let mut g = DMatrix::from_element(self.bath_dim, self.bath_dim, Complex::new(0.0, 0.0));
        for members in &self.members {
            for &i in members {
                let zi = state[i].conj();
                let si = self.bath_of[i];
                for &j in members {
                    g[(si, self.bath_of[j])] += zi * state[j];
                }
            }
        }
        g
    }

    pub fn sample<T: Real>(&self, state: &[Complex<T>], observers: &[Observable]) -> Sample {
        assert_eq!(state.len(), self.dim, "state does not belong to this block");
        let psi: Vec<Complex<f64>> = state
            .iter()
            .map(|z| Complex::new(z.re.as_f64(), z.im.as_f64()))
            .collect();
        let weights: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
        let wants = |o: Observable| observers.contains(&o);

        let mut out = Sample {
            alignment: f64::NAN,
            purity: f64::NAN,
            entropy_bits: f64::NAN,
            mean_n: f64::NAN,
            populations: Vec::new(),
            norm_sqr: weights.iter().sum(),
        };
        if wants(Observable::Alignment) {
            let diagonal: f64 = weights.iter().zip(&self.diagonal_cos2).map(|(w, a)| w * a).sum();
            let coherent: f64 = self
                .off_diagonal_cos2
                .iter()
                .map(|&(i, j, a)| a * (psi[i].conj() * psi[j]).re)
                .sum();
            out.alignment = diagonal + 2.0 * coherent;
        }
        if wants(Observable::MeanN) {
            out.mean_n = weights.iter().zip(&self.n_of).map(|(w, n)| w * n).sum();
        }
        if wants(Observable::Populations) {
            let mut pops = vec![0.0; self.manifolds.len()];
            for (w, &m) in weights.iter().zip(&self.manifold_of) {
                pops[m] += w;
            }
            out.populations = pops;
        }
        if wants(Observable::Purity) || wants(Observable::Entropy) {
            let g = self.bath_gram(&psi);
            if wants(Observable::Purity) {
                out.purity = g.iter().map(|z| z.norm_sqr()).sum();
            }
            if wants(Observable::Entropy) {
                let spectrum = SymmetricEigen::new(g).eigenvalues;
                out.entropy_bits = entropy_of_spectrum(spectrum.iter().copied());
            }
        }
        out
    }
}

/// Columns of a propagated run; optional columns are absent when not requested.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimeSeries {
    pub t_us: Vec<f64>,
    pub t_over_tr: Vec<f64>,
    pub alignment: Option<Vec<f64>>,
    pub purity: Option<Vec<f64>>,
    pub entropy_bits: Option<Vec<f64>>,
    pub mean_n: Option<Vec<f64>>,
    /// Manifold labels and, per manifold, its population at every sample.
    pub populations: Option<(Vec<u32>, Vec<Vec<f64>>)>,
}

/// `{:.11e}`: twelve significant digits, platform independent.
pub fn format_value(v: f64) -> String {
    format!("{v:.11e}")
}

impl TimeSeries {
    pub fn with_capacity(observers: &[Observable], manifolds: &[u32], n: usize) -> Self {
        let column = |o: Observable| observers.contains(&o).then(|| Vec::with_capacity(n));
        TimeSeries {
            t_us: Vec::with_capacity(n),
            t_over_tr: Vec::with_capacity(n),
            alignment: column(Observable::Alignment),
            purity: column(Observable::Purity),
            entropy_bits: column(Observable::Entropy),
            mean_n: column(Observable::MeanN),
            populations: observers
                .contains(&Observable::Populations)
                .then(|| (manifolds.to_vec(), vec![Vec::with_capacity(n); manifolds.len()])),
        }
    }

    pub fn push(&mut self, t_us: f64, t_over_tr: f64, sample: &Sample) {
        self.t_us.push(t_us);
        self.t_over_tr.push(t_over_tr);
        for (column, v) in [
            (&mut self.alignment, sample.alignment),
            (&mut self.purity, sample.purity),
            (&mut self.entropy_bits, sample.entropy_bits),
            (&mut self.mean_n, sample.mean_n),
        ] {
            if let Some(c) = column {
                c.push(v);
            }
        }
        if let Some((_, pops)) = &mut self.populations {
            for (c, v) in pops.iter_mut().zip(&sample.populations) {
                c.push(*v);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.t_us.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_us.is_empty()
    }

    /// Column names and values in output order.
    pub fn columns(&self) -> Vec<(String, &[f64])> {
        let mut cols: Vec<(String, &[f64])> =
            vec![("t_us".into(), &self.t_us), ("t_over_tR".into(), &self.t_over_tr)];
        for (name, column) in [
            ("alignment", &self.alignment),
            ("purity", &self.purity),
            ("entropy_bits", &self.entropy_bits),
            ("mean_N", &self.mean_n),
        ] {
            if let Some(c) = column {
                cols.push((name.into(), c));
            }
        }
        if let Some((ns, pops)) = &self.populations {
            for (n, c) in ns.iter().zip(pops) {
                cols.push((format!("pop_N{n}"), c));
            }
        }
        cols
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns().into_iter().find(|(n, _)| n == name).map(|(_, c)| c)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let cols = self.columns();
        let header: Vec<&str> = cols.iter().map(|(n, _)| n.as_str()).collect();
        writeln!(out, "{}", header.join(","))?;
        for row in 0..self.len() {
            let line: Vec<String> = cols.iter().map(|(_, c)| format_value(c[row])).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    /// Every value is finite and all columns have equal length.
    pub fn is_consistent(&self) -> bool {
        let n = self.len();
        self.columns()
            .iter()
            .all(|(_, c)| c.len() == n && c.iter().all(|v| v.is_finite()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_block, BasisState, Parity};
    use crate::molecule::MoleculeSpec;

    fn block() -> SymmetryBlock {
        build_block(&MoleculeSpec::krb(), 4, HalfInt::from_twice(-7), Parity::Even).unwrap()
    }

    fn c(re: f64) -> Complex<f64> {
        Complex::new(re, 0.0)
    }

    #[test]
    fn product_state_is_pure() {
        let block = block();
        let mut psi = DVector::from_element(block.dim(), c(0.0));
        let spin = (HalfInt::from_int(-4), HalfInt::HALF);
        let a = block.index_of(&BasisState::new(0, 0, spin.0, spin.1)).unwrap();
        let b = block.index_of(&BasisState::new(2, 0, spin.0, spin.1)).unwrap();
        psi[a] = c(0.6);
        psi[b] = Complex::new(0.0, 0.8);
        let rho = reduce(&psi, &block).unwrap();
        assert!((rho.purity() - 1.0).abs() < 1e-14);
        assert!(rho.entropy_vn() < 1e-12);
        assert!((rho.trace() - 1.0).abs() < 1e-14);
        assert!((rho.mean_n() - 2.0 * 0.64).abs() < 1e-14);
    }

    #[test]
    fn schmidt_pair_is_maximally_mixed() {
        let block = block();
        let mut psi = DVector::from_element(block.dim(), c(0.0));
        let a = block
            .index_of(&BasisState::new(0, 0, HalfInt::from_int(-4), HalfInt::HALF))
            .unwrap();
        let b = block
            .index_of(&BasisState::new(2, 0, HalfInt::from_int(-3), -HalfInt::HALF))
            .unwrap();
        psi[a] = c(0.5f64.sqrt());
        psi[b] = c(0.5f64.sqrt());
        let rho = reduce(&psi, &block).unwrap();
        assert!((rho.purity() - 0.5).abs() < 1e-14);
        assert!((rho.entropy_vn() - 1.0).abs() < 1e-12);
        let ev = rho.eigenvalues();
        assert!((ev[0] - 0.5).abs() < 1e-14 && (ev[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn alignment_of_simple_states() {
        let label = |n: i32, m: i32| RotorLabel {
            n: HalfInt::from_int(n),
            m_n: HalfInt::from_int(m),
        };
        let pure = |l: RotorLabel| ReducedDensityMatrix::<f64> {
            labels: vec![l],
            rho: DMatrix::from_element(1, 1, c(1.0)),
        };
        assert!((pure(label(0, 0)).alignment() - 1.0 / 3.0).abs() < 1e-15);
        assert!((pure(label(1, 0)).alignment() - 0.6).abs() < 1e-15);

        for n in 0..=6 {
            let labels: Vec<RotorLabel> = (-n..=n).map(|m| label(n, m)).collect();
            let k = labels.len();
            let mixed = ReducedDensityMatrix::<f64> {
                labels,
                rho: DMatrix::from_diagonal_element(k, k, c(1.0 / k as f64)),
            };
            assert!((mixed.alignment() - 1.0 / 3.0).abs() < 1e-14, "N = {n}");
            assert!((mixed.entropy_vn() - (k as f64).log2()).abs() < 1e-12);
        }
    }

    #[test]
    fn unnormalized_state_rejected() {
        let block = block();
        let psi = DVector::from_element(block.dim(), c(1.0));
        assert!(matches!(reduce(&psi, &block), Err(CrmError::NotNormalized(_))));
    }

    #[test]
    fn entropy_floor_excludes_tiny_eigenvalues() {
        assert_eq!(entropy_of_spectrum([1.0, 1e-15, 0.0, -1e-16]), 0.0);
        assert!((entropy_of_spectrum([0.25; 4]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn probe_matches_reduced_matrix() {
        let block = block();
        let probe = RotationalProbe::new(&block);
        let mut psi = DVector::from_fn(block.dim(), |i, _| Complex::new((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()));
        psi /= Complex::new(psi.norm(), 0.0);
        let rho = reduce(&psi, &block).unwrap();
        let s = probe.sample(psi.as_slice(), &Observable::ALL);
        assert!((s.alignment - rho.alignment()).abs() < 1e-13);
        assert!((s.purity - rho.purity()).abs() < 1e-13);
        assert!((s.entropy_bits - rho.entropy_vn()).abs() < 1e-11);
        assert!((s.mean_n - rho.mean_n()).abs() < 1e-13);
        let pops: Vec<f64> = rho.n_populations().into_iter().map(|(_, p)| p).collect();
        for (a, b) in s.populations.iter().zip(&pops) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn observable_names_parse() {
        assert_eq!("Alignment".parse::<Observable>().unwrap(), Observable::Alignment);
        assert_eq!("mean_N".parse::<Observable>().unwrap(), Observable::MeanN);
        assert!("bogus".parse::<Observable>().is_err());
    }

    #[test]
    fn csv_layout() {
        let mut ts = TimeSeries::with_capacity(&[Observable::Purity, Observable::Alignment], &[], 1);
        let sample = Sample {
            alignment: 1.0 / 3.0,
            purity: 1.0,
            entropy_bits: 0.0,
            mean_n: 0.0,
            populations: vec![],
            norm_sqr: 1.0,
        };
        ts.push(0.0, 0.0, &sample);
        let mut buf = Vec::new();
        ts.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "t_us,t_over_tR,alignment,purity\n0.00000000000e0,0.00000000000e0,3.33333333333e-1,1.00000000000e0\n"
        );
    }
}
