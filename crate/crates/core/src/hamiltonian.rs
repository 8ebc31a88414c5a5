//! Dense assembly of the spin-rotational Hamiltonian `H = H_S + H_B + H_SB`
//! inside one symmetry block, and a field-free asymmetric-top level solver.
//!
//! * `H_S  = B_e N² − g_r μ_N B N_Z`
//! * `H_B  = c4 I1·I2 − Σ_i g_i μ_N B I_Zi`
//! * `H_SB = Σ_{m,p} (−1)^p C²_p · √6 (eqQ)_m / (4 I_m (2I_m − 1)) · T²_{−p}(I_m, I_m)
//!         + Σ_i c_i N·I_i − c3 √6 Σ_p (−1)^p C²_{−p} T²_p(I1, I2)`

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::angmom::{
    dot_product_element, ni_dot_element, rotor_tensor_element, spin_tensor2_pair, spin_tensor2_single, HalfInt,
};
use crate::basis::{BasisState, SymmetryBlock};
use crate::error::{CrmError, Result};
use crate::molecule::{FieldPoint, MoleculeSpec};
use crate::scalar::Real;

/// Relative tolerance on `max|H − Hᵀ|` for an assembled part.
pub const HERMITICITY_TOLERANCE: f64 = 1e-13;

/// Per-term prefactors in MHz for one molecule at one field.
#[derive(Clone, Debug)]
struct Terms {
    b_e: f64,
    rotational_zeeman: f64,
    nuclear_zeeman: [f64; 2],
    quadrupole: [f64; 2],
    spin_rotation: [f64; 2],
    tensor_spin_spin: f64,
    scalar_spin_spin: f64,
    spins: [HalfInt; 2],
}

impl Terms {
    fn new(spec: &MoleculeSpec, field: FieldPoint) -> Self {
        let quadrupole = spec.nuclei.each_ref().map(|n| {
            if n.spin.twice() < 2 || n.eqq == 0.0 {
                0.0
            } else {
                let i = n.spin.value();
                6f64.sqrt() * n.eqq / (4.0 * i * (2.0 * i - 1.0))
            }
        });
        Terms {
            b_e: spec.b_e,
            rotational_zeeman: field.zeeman_mhz(spec.g_r),
            nuclear_zeeman: spec.nuclei.each_ref().map(|n| field.zeeman_mhz(n.g_factor)),
            quadrupole,
            spin_rotation: spec.nuclei.each_ref().map(|n| n.spin_rotation),
            tensor_spin_spin: spec.c3,
            scalar_spin_spin: spec.c4,
            spins: [spec.nuclei[0].spin, spec.nuclei[1].spin],
        }
    }

    fn system(&self, bra: &BasisState, ket: &BasisState) -> f64 {
        if bra != ket {
            return 0.0;
        }
        self.b_e * ket.n.casimir() - self.rotational_zeeman * ket.m_n.value()
    }

    fn bath(&self, bra: &BasisState, ket: &BasisState) -> f64 {
        if bra.n != ket.n || bra.m_n != ket.m_n {
            return 0.0;
        }
        let mut value = 0.0;
        if self.scalar_spin_spin != 0.0 {
            value += self.scalar_spin_spin
                * dot_product_element(self.spins[0], self.spins[1], bra.m_i1, bra.m_i2, ket.m_i1, ket.m_i2);
        }
        if bra == ket {
            value -= self.nuclear_zeeman[0] * ket.m_i1.value() + self.nuclear_zeeman[1] * ket.m_i2.value();
        }
        value
    }

    fn coupling(&self, bra: &BasisState, ket: &BasisState) -> f64 {
        let dn = bra.n.twice() - ket.n.twice();
        let dm = bra.m_n.twice() - ket.m_n.twice();
        if dn.abs() > 4 || dm.abs() > 4 {
            return 0.0;
        }
        // C²_p raises M_N by p
        let p = dm / 2;
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        let mut value = 0.0;

        let rank2 = |q: i32| rotor_tensor_element(bra.n, bra.m_n, 2, q, ket.n, ket.m_n);

        if self.quadrupole[0] != 0.0 && bra.m_i2 == ket.m_i2 {
            let c = rank2(p);
            if c != 0.0 {
                let t = spin_tensor2_single(self.spins[0], bra.m_i1, -p, ket.m_i1).expect("I1 >= 1 when eqQ1 != 0");
                value += self.quadrupole[0] * sign * c * t;
            }
        }
        if self.quadrupole[1] != 0.0 && bra.m_i1 == ket.m_i1 {
            let c = rank2(p);
            if c != 0.0 {
                let t = spin_tensor2_single(self.spins[1], bra.m_i2, -p, ket.m_i2).expect("I2 >= 1 when eqQ2 != 0");
                value += self.quadrupole[1] * sign * c * t;
            }
        }

        if bra.n == ket.n {
            if self.spin_rotation[0] != 0.0 && bra.m_i2 == ket.m_i2 {
                value += self.spin_rotation[0]
                    * ni_dot_element(ket.n, bra.m_n, bra.m_i1, ket.m_n, ket.m_i1, self.spins[0]);
            }
            if self.spin_rotation[1] != 0.0 && bra.m_i1 == ket.m_i1 {
                value += self.spin_rotation[1]
                    * ni_dot_element(ket.n, bra.m_n, bra.m_i2, ket.m_n, ket.m_i2, self.spins[1]);
            }
        }

        if self.tensor_spin_spin != 0.0 {
            // C²_{−q} raises M_N by p, so the spin tensor carries q = −p
            let q = -p;
            let c = rank2(-q);
            if c != 0.0 {
                let t = spin_tensor2_pair(self.spins[0], self.spins[1], bra.m_i1, bra.m_i2, q, ket.m_i1, ket.m_i2);
                value -= self.tensor_spin_spin * 6f64.sqrt() * sign * c * t;
            }
        }
        value
    }
}

/// The three Hamiltonian parts over an arbitrary list of basis states, in f64.
#[derive(Clone, Debug)]
pub struct HamiltonianParts {
    pub system: DMatrix<f64>,
    pub bath: DMatrix<f64>,
    pub coupling: DMatrix<f64>,
}

/// Assembles every element of every part independently (both triangles).
pub fn assemble_on_states(spec: &MoleculeSpec, states: &[BasisState], field: FieldPoint) -> HamiltonianParts {
    let terms = Terms::new(spec, field);
    let dim = states.len();
    let rows: Vec<[Vec<f64>; 3]> = states
        .par_iter()
        .map(|bra| {
            let mut system = vec![0.0; dim];
            let mut bath = vec![0.0; dim];
            let mut coupling = vec![0.0; dim];
            for (j, ket) in states.iter().enumerate() {
                system[j] = terms.system(bra, ket);
                bath[j] = terms.bath(bra, ket);
                coupling[j] = terms.coupling(bra, ket);
            }
            [system, bath, coupling]
        })
        .collect();
    let gather = |part: usize| DMatrix::from_fn(dim, dim, |i, j| rows[i][part][j]);
    HamiltonianParts {
        system: gather(0),
        bath: gather(1),
        coupling: gather(2),
    }
}

/// Largest `|H_ij − H_ji|` and largest `|H_ij|`.
pub fn hermiticity_defect<T: Real>(h: &DMatrix<T>) -> (f64, f64) {
    let mut deviation: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for j in 0..h.ncols() {
        for i in 0..h.nrows() {
            let v = h[(i, j)].as_f64();
            scale = scale.max(v.abs());
            deviation = deviation.max((v - h[(j, i)].as_f64()).abs());
        }
    }
    (deviation, scale)
}

fn check_hermitian<T: Real>(part: &'static str, h: &DMatrix<T>) -> Result<()> {
    let (deviation, scale) = hermiticity_defect(h);
    if deviation > HERMITICITY_TOLERANCE * scale {
        return Err(CrmError::NonHermitian {
            part,
            deviation,
            scale,
        });
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct HamiltonianBlock<T: Real> {
    block: Arc<SymmetryBlock>,
    field: FieldPoint,
    system: DMatrix<T>,
    bath: DMatrix<T>,
    coupling: DMatrix<T>,
    total: DMatrix<T>,
}

impl<T: Real> HamiltonianBlock<T> {
    pub fn block(&self) -> &Arc<SymmetryBlock> {
        &self.block
    }

    pub fn field(&self) -> FieldPoint {
        self.field
    }

    pub fn dim(&self) -> usize {
        self.block.dim()
    }

    pub fn system(&self) -> &DMatrix<T> {
        &self.system
    }

    pub fn bath(&self) -> &DMatrix<T> {
        &self.bath
    }

    pub fn coupling(&self) -> &DMatrix<T> {
        &self.coupling
    }

    pub fn total(&self) -> &DMatrix<T> {
        &self.total
    }

    /// Largest absolute entry of `H_total`.
    pub fn scale(&self) -> f64 {
        self.total.iter().fold(0.0, |m, v| m.max(v.as_f64().abs()))
    }

    /// Writes `H_total` row-major as little-endian 64-bit floats.
    pub fn write_dump(&self, path: &Path) -> Result<()> {
        let io_err = |source| CrmError::Io {
            path: path.to_owned(),
            source,
        };
        let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                out.write_all(&self.total[(i, j)].as_f64().to_le_bytes()).map_err(io_err)?;
            }
        }
        out.flush().map_err(io_err)
    }
}

/// Assembles `H_S`, `H_B`, `H_SB` and their sum for `block` at `field`.
pub fn build_hamiltonian<T: Real>(
    spec: &MoleculeSpec,
    block: &Arc<SymmetryBlock>,
    field: FieldPoint,
) -> Result<HamiltonianBlock<T>> {
    let expected = spec.bath_dimension();
    if block.spins() != spec.spins() {
        return Err(CrmError::DimensionMismatch {
            expected,
            found: block.bath_dimension(),
        });
    }
    let parts = assemble_on_states(spec, block.states(), field);
    let convert = |m: &DMatrix<f64>| m.map(T::of);
    let system = convert(&parts.system);
    let bath = convert(&parts.bath);
    let coupling = convert(&parts.coupling);
    check_hermitian("H_S", &system)?;
    check_hermitian("H_B", &bath)?;
    check_hermitian("H_SB", &coupling)?;
    let total = convert(&(parts.system + parts.bath + parts.coupling));
    check_hermitian("H", &total)?;
    Ok(HamiltonianBlock {
        block: Arc::clone(block),
        field,
        system,
        bath,
        coupling,
        total,
    })
}

/// Rigid-rotor energies `B_e N(N+1)` in MHz.
pub fn pure_rotor_phases(spec: &MoleculeSpec, n_list: &[u32]) -> Vec<f64> {
    n_list
        .iter()
        .map(|&n| spec.b_e * f64::from(n) * f64::from(n + 1))
        .collect()
}

/// Field-free term values of `A N_x² + B N_y² + C N_z²` within one `N`.
#[derive(Clone, Debug)]
pub struct RotorLevels<T> {
    /// Constants after sorting into `A >= B >= C`.
    pub constants: [T; 3],
    pub n: u32,
    /// Ascending, `2N + 1` values; each is `(2N+1)`-fold degenerate in `M`.
    pub eigenvalues: Vec<T>,
}

pub const MAX_TOP_N: u32 = 100;

/// Diagonalizes the asymmetric top in the symmetric-top basis `|N k⟩`.
pub fn asymmetric_top_levels<T: Real>(a: T, b: T, c: T, n: u32) -> Result<RotorLevels<T>> {
    if [a, b, c].iter().any(|v| v.as_f64().is_nan() || *v <= T::zero()) {
        return Err(CrmError::Domain(format!(
            "rotational constants must be positive, got A={a}, B={b}, C={c}"
        )));
    }
    if n > MAX_TOP_N {
        return Err(CrmError::Domain(format!("N = {n} exceeds {MAX_TOP_N}")));
    }
    let mut sorted = [a, b, c];
    sorted.sort_by(|x, y| y.partial_cmp(x).expect("finite constants"));
    let [a, b, c] = sorted;

    let dim = (2 * n + 1) as usize;
    let nn = f64::from(n) * f64::from(n + 1);
    let k_of = |i: usize| i as f64 - f64::from(n);
    let two = T::of(2.0);
    let four = T::of(4.0);
    let mut h = DMatrix::<T>::zeros(dim, dim);
    for i in 0..dim {
        let k = k_of(i);
        // (A+B)/2 (N² − N_z²) + C N_z²
        h[(i, i)] = (a + b) / two * T::of(nn - k * k) + c * T::of(k * k);
        if i + 2 < dim {
            // (A−B)/4 (N₊² + N₋²) connects k and k + 2
            let ladder = ((nn - k * (k + 1.0)) * (nn - (k + 1.0) * (k + 2.0))).sqrt();
            let v = (a - b) / four * T::of(ladder);
            h[(i + 2, i)] = v;
            h[(i, i + 2)] = v;
        }
    }
    let mut eigenvalues: Vec<T> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    Ok(RotorLevels {
        constants: sorted,
        n,
        eigenvalues,
    })
}
