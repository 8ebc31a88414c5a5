//! Angular-momentum algebra in the uncoupled product basis.
//!
//! Phases follow Condon–Shortley. Spherical components of a vector operator
//! are `V₊₁ = -(Vx + iVy)/√2`, `V₀ = Vz`, `V₋₁ = (Vx - iVy)/√2`, and rank-2
//! products are built as `T²ₚ(A, B) = Σ ⟨1 q₁ 1 q₂ | 2 p⟩ A_q₁ B_q₂`, which
//! gives `T²₀(I, I) = (3Iz² − I²)/√6`. With these conventions every matrix
//! element below is real.

mod half_int;
mod wigner;

pub use half_int::{HalfInt, ParseHalfIntError};
pub use wigner::{clebsch_gordan, wigner3j, wigner3j_uncached, CoefCache};

use crate::error::{CrmError, Result};

/// `⟨N' M'| C^k_p |N M⟩` for the renormalized spherical harmonic
/// `C^k_p = sqrt(4π/(2k+1)) Y_kp`.
pub fn rotor_tensor_element(
    n_bra: HalfInt,
    m_bra: HalfInt,
    rank: u32,
    p: i32,
    n_ket: HalfInt,
    m_ket: HalfInt,
) -> f64 {
    if m_bra.twice() != m_ket.twice() + 2 * p {
        return 0.0;
    }
    let k = HalfInt::from_int(rank as i32);
    let reduced = wigner3j(n_bra, k, n_ket, HalfInt::ZERO, HalfInt::ZERO, HalfInt::ZERO);
    if reduced == 0.0 {
        return 0.0;
    }
    let angular = wigner3j(n_bra, k, n_ket, -m_bra, HalfInt::from_int(p), m_ket);
    let degeneracy = f64::from((n_bra.twice() + 1) * (n_ket.twice() + 1)).sqrt();
    m_bra.phase() * degeneracy * angular * reduced
}

/// `⟨j, m + q| J_q |j, m⟩` for the spherical component `q ∈ {-1, 0, 1}`.
pub fn spherical_component(j: HalfInt, m_bra: HalfInt, q: i32, m_ket: HalfInt) -> f64 {
    if m_bra.twice() != m_ket.twice() + 2 * q || !j.admits(m_bra) || !j.admits(m_ket) {
        return 0.0;
    }
    let m = m_ket.value();
    match q {
        0 => m,
        1 => -(j.casimir() - m * (m + 1.0)).sqrt() * std::f64::consts::FRAC_1_SQRT_2,
        -1 => (j.casimir() - m * (m - 1.0)).sqrt() * std::f64::consts::FRAC_1_SQRT_2,
        _ => 0.0,
    }
}

fn rank2_coupling(q1: i32, q2: i32) -> f64 {
    clebsch_gordan(
        HalfInt::ONE,
        HalfInt::from_int(q1),
        HalfInt::ONE,
        HalfInt::from_int(q2),
        HalfInt::from_int(2),
        HalfInt::from_int(q1 + q2),
    )
}

/// `⟨I M'| T²ₚ(I, I) |I M⟩` for a single spin; quadrupole needs `I >= 1`.
pub fn spin_tensor2_single(spin: HalfInt, m_bra: HalfInt, p: i32, m_ket: HalfInt) -> Result<f64> {
    if spin.twice() < 2 {
        return Err(CrmError::Domain(format!(
            "rank-2 tensor of a single spin needs I >= 1, got I = {spin}"
        )));
    }
    if m_bra.twice() != m_ket.twice() + 2 * p || !spin.admits(m_bra) || !spin.admits(m_ket) {
        return Ok(0.0);
    }
    let mut value = 0.0;
    for q2 in -1..=1 {
        let q1 = p - q2;
        if q1.abs() > 1 {
            continue;
        }
        let mid = m_ket + HalfInt::from_int(q2);
        if !spin.admits(mid) {
            continue;
        }
        value += rank2_coupling(q1, q2)
            * spherical_component(spin, m_bra, q1, mid)
            * spherical_component(spin, mid, q2, m_ket);
    }
    Ok(value)
}

/// `⟨M1' M2'| T²ₚ(I1, I2) |M1 M2⟩` for two distinct spins.
pub fn spin_tensor2_pair(
    spin1: HalfInt,
    spin2: HalfInt,
    m1_bra: HalfInt,
    m2_bra: HalfInt,
    p: i32,
    m1_ket: HalfInt,
    m2_ket: HalfInt,
) -> f64 {
    let q1 = m1_bra.twice() - m1_ket.twice();
    let q2 = m2_bra.twice() - m2_ket.twice();
    if q1 % 2 != 0 || q2 % 2 != 0 {
        return 0.0;
    }
    let (q1, q2) = (q1 / 2, q2 / 2);
    if q1 + q2 != p || q1.abs() > 1 || q2.abs() > 1 {
        return 0.0;
    }
    rank2_coupling(q1, q2)
        * spherical_component(spin1, m1_bra, q1, m1_ket)
        * spherical_component(spin2, m2_bra, q2, m2_ket)
}

/// `⟨m1' m2'| J1·J2 |m1 m2⟩ = ⟨J1z J2z + ½(J1₊J2₋ + J1₋J2₊)⟩` for two
/// commuting angular momenta.
pub fn dot_product_element(
    j1: HalfInt,
    j2: HalfInt,
    m1_bra: HalfInt,
    m2_bra: HalfInt,
    m1_ket: HalfInt,
    m2_ket: HalfInt,
) -> f64 {
    if !(j1.admits(m1_bra) && j1.admits(m1_ket) && j2.admits(m2_bra) && j2.admits(m2_ket)) {
        return 0.0;
    }
    let d1 = m1_bra.twice() - m1_ket.twice();
    let d2 = m2_bra.twice() - m2_ket.twice();
    let (m1, m2) = (m1_ket.value(), m2_ket.value());
    match (d1, d2) {
        (0, 0) => m1 * m2,
        (2, -2) => {
            0.5 * (j1.casimir() - m1 * (m1 + 1.0)).sqrt() * (j2.casimir() - m2 * (m2 - 1.0)).sqrt()
        }
        (-2, 2) => {
            0.5 * (j1.casimir() - m1 * (m1 - 1.0)).sqrt() * (j2.casimir() - m2 * (m2 + 1.0)).sqrt()
        }
        _ => 0.0,
    }
}

/// Spin–rotation element `⟨N M_N' ; M_I'| N·I |N M_N ; M_I⟩` (diagonal in N).
pub fn ni_dot_element(
    n: HalfInt,
    m_n_bra: HalfInt,
    m_i_bra: HalfInt,
    m_n_ket: HalfInt,
    m_i_ket: HalfInt,
    spin: HalfInt,
) -> f64 {
    dot_product_element(n, spin, m_n_bra, m_i_bra, m_n_ket, m_i_ket)
}
