//! Independent reference implementations used by the integration tests.
//!
//! Nothing here calls into the angular-momentum code of the crate: 3j symbols
//! come from a plain floating-point Racah sum, rotor matrix elements from
//! spherical-harmonic quadrature, and spin operators from explicit ladder
//! matrices combined with Kronecker products.

#![allow(dead_code)]

use std::f64::consts::PI;

use std::sync::Arc;

use crm_core::basis::{all_blocks, BasisState, SymmetryBlock};
use crm_core::hamiltonian::build_hamiltonian;
use crm_core::molecule::{FieldPoint, MoleculeSpec, NUCLEAR_MAGNETON_MHZ_PER_GAUSS};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

pub type C64 = Complex<f64>;

fn factorial(n: i32) -> f64 {
    assert!(n >= 0);
    (1..=n).fold(1.0, |acc, k| acc * f64::from(k))
}

/// Wigner 3j from the Racah formula in double precision. Arguments are twice
/// the quantum numbers.
pub fn racah_3j(tj1: i32, tj2: i32, tj3: i32, tm1: i32, tm2: i32, tm3: i32) -> f64 {
    if tm1 + tm2 + tm3 != 0 {
        return 0.0;
    }
    for (j, m) in [(tj1, tm1), (tj2, tm2), (tj3, tm3)] {
        if m.abs() > j || (j + m) % 2 != 0 {
            return 0.0;
        }
    }
    if tj3 > tj1 + tj2 || tj3 < (tj1 - tj2).abs() || (tj1 + tj2 + tj3) % 2 != 0 {
        return 0.0;
    }
    let h = |x: i32| x / 2;
    let triangle = factorial(h(tj1 + tj2 - tj3)) * factorial(h(tj1 - tj2 + tj3)) * factorial(h(-tj1 + tj2 + tj3))
        / factorial(h(tj1 + tj2 + tj3) + 1);
    let norm = factorial(h(tj1 + tm1))
        * factorial(h(tj1 - tm1))
        * factorial(h(tj2 + tm2))
        * factorial(h(tj2 - tm2))
        * factorial(h(tj3 + tm3))
        * factorial(h(tj3 - tm3));
    let k_min = 0.max(h(tj2 - tj3 - tm1)).max(h(tj1 - tj3 + tm2));
    let k_max = h(tj1 + tj2 - tj3).min(h(tj1 - tm1)).min(h(tj2 + tm2));
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign
            / (factorial(k)
                * factorial(h(tj1 + tj2 - tj3) - k)
                * factorial(h(tj1 - tm1) - k)
                * factorial(h(tj2 + tm2) - k)
                * factorial(h(tj3 - tj2 + tm1) + k)
                * factorial(h(tj3 - tj1 - tm2) + k));
    }
    let phase = if h(tj1 - tj2 - tm3).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    phase * (triangle * norm).sqrt() * sum
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            (x, 2.0 / ((1.0 - x * x) * dp * dp))
        })
        .collect()
}

/// Orthonormal spherical harmonic with the Condon–Shortley phase.
pub fn ylm(l: i32, m: i32, x: f64, phi: f64) -> C64 {
    if m < 0 {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        return ylm(l, -m, x, phi).conj() * sign;
    }
    if m > l {
        return C64::new(0.0, 0.0);
    }
    let s = (1.0 - x * x).max(0.0).sqrt();
    let mut pmm = 1.0;
    for k in 1..=m {
        pmm *= -(2.0 * f64::from(k) - 1.0) * s;
    }
    let plm = if l == m {
        pmm
    } else {
        let mut p0 = pmm;
        let mut p1 = x * f64::from(2 * m + 1) * pmm;
        for ll in (m + 2)..=l {
            let p2 = (f64::from(2 * ll - 1) * x * p1 - f64::from(ll + m - 1) * p0) / f64::from(ll - m);
            p0 = p1;
            p1 = p2;
        }
        p1
    };
    let norm = (f64::from(2 * l + 1) / (4.0 * PI) * factorial(l - m) / factorial(l + m)).sqrt();
    C64::from_polar(norm * plm, f64::from(m) * phi)
}

/// `⟨l' m'| C^k_p |l m⟩` by quadrature over the sphere.
pub fn rotor_element_quadrature(lb: i32, mb: i32, k: i32, p: i32, lk: i32, mk: i32) -> C64 {
    let degree = (lb + k + lk) as usize;
    let nodes = gauss_legendre(degree / 2 + 4);
    let n_phi = 2 * degree + 3;
    let ck = (4.0 * PI / f64::from(2 * k + 1)).sqrt();
    let mut total = C64::new(0.0, 0.0);
    for &(x, w) in &nodes {
        for j in 0..n_phi {
            let phi = 2.0 * PI * j as f64 / n_phi as f64;
            let f = ylm(lb, mb, x, phi).conj() * ylm(k, p, x, phi) * ylm(lk, mk, x, phi);
            total += f * w;
        }
    }
    total * (2.0 * PI / n_phi as f64) * ck
}

/// `J_z`, `J_+`, `J_-` for spin `twice/2`, basis ordered `m = -j, ..., j`.
pub fn spin_ops(twice: i32) -> [DMatrix<C64>; 3] {
    let d = (twice + 1) as usize;
    let j = f64::from(twice) / 2.0;
    let m_of = |k: usize| -j + k as f64;
    let jz = DMatrix::from_fn(d, d, |a, b| C64::new(if a == b { m_of(a) } else { 0.0 }, 0.0));
    let jp = DMatrix::from_fn(d, d, |a, b| {
        if a == b + 1 {
            let m = m_of(b);
            C64::new((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let jm = jp.adjoint();
    [jz, jp, jm]
}

fn eye(d: usize) -> DMatrix<C64> {
    DMatrix::identity(d, d)
}

fn kron3(a: &DMatrix<C64>, b: &DMatrix<C64>, c: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(&b.kronecker(c))
}

/// Index of `(N, M_N)` in the rotor space of all `N <= n_max`.
pub fn rotor_index(n: i32, m: i32) -> usize {
    (n * n + n + m) as usize
}

/// Everything needed to reproduce the Hamiltonian in the full product space.
pub struct BruteForce {
    pub n_max: i32,
    pub spin_twice: [i32; 2],
    pub h: DMatrix<C64>,
}

impl BruteForce {
    pub fn full_index(&self, s: &BasisState) -> usize {
        let d1 = (self.spin_twice[0] + 1) as usize;
        let d2 = (self.spin_twice[1] + 1) as usize;
        let r = rotor_index(s.n.as_int().unwrap(), s.m_n.as_int().unwrap());
        let a = ((s.m_i1.twice() + self.spin_twice[0]) / 2) as usize;
        let b = ((s.m_i2.twice() + self.spin_twice[1]) / 2) as usize;
        (r * d1 + a) * d2 + b
    }

    /// Quantum numbers `(N, 2 M_F)` of a full-space index.
    pub fn labels(&self, index: usize) -> (i32, i32) {
        let d1 = (self.spin_twice[0] + 1) as usize;
        let d2 = (self.spin_twice[1] + 1) as usize;
        let b = (index % d2) as i32;
        let a = ((index / d2) % d1) as i32;
        let r = (index / (d1 * d2)) as i32;
        let n = (f64::from(r).sqrt()) as i32;
        let n = if (n + 1) * (n + 1) <= r { n + 1 } else { n };
        let m = r - n * n - n;
        let twice_mf = 2 * m + (2 * a - self.spin_twice[0]) + (2 * b - self.spin_twice[1]);
        (n, twice_mf)
    }

    /// Restriction of the full matrix to the states of `block`.
    pub fn restrict(&self, block: &SymmetryBlock) -> DMatrix<C64> {
        let idx: Vec<usize> = block.states().iter().map(|s| self.full_index(s)).collect();
        DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.h[(idx[i], idx[j])])
    }
}

/// Full Hamiltonian on every `|N M_N⟩|M_I1 M_I2⟩` with `N <= n_max`.
pub fn brute_force_hamiltonian(spec: &MoleculeSpec, n_max: i32, field: FieldPoint) -> BruteForce {
    let rdim = rotor_index(n_max, n_max) + 1;
    let labels: Vec<(i32, i32)> = (0..=n_max).flat_map(|n| (-n..=n).map(move |m| (n, m))).collect();
    let c2 = |p: i32| {
        DMatrix::from_fn(rdim, rdim, |a, b| {
            let (na, ma) = labels[a];
            let (nb, mb) = labels[b];
            rotor_element_quadrature(na, ma, 2, p, nb, mb)
        })
    };
    let c2p: Vec<DMatrix<C64>> = (-2..=2).map(c2).collect();
    let c2 = |p: i32| &c2p[(p + 2) as usize];

    let nz = DMatrix::from_fn(rdim, rdim, |a, b| C64::new(if a == b { f64::from(labels[a].1) } else { 0.0 }, 0.0));
    let n2 = DMatrix::from_fn(rdim, rdim, |a, b| {
        let n = f64::from(labels[a].0);
        C64::new(if a == b { n * (n + 1.0) } else { 0.0 }, 0.0)
    });
    let np = DMatrix::from_fn(rdim, rdim, |a, b| {
        let (na, ma) = labels[a];
        let (nb, mb) = labels[b];
        if na == nb && ma == mb + 1 {
            let (n, m) = (f64::from(nb), f64::from(mb));
            C64::new((n * (n + 1.0) - m * (m + 1.0)).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let nm = np.adjoint();

    let tw = [spec.nuclei[0].spin.twice(), spec.nuclei[1].spin.twice()];
    let (d1, d2) = ((tw[0] + 1) as usize, (tw[1] + 1) as usize);
    let [i1z, i1p, i1m] = spin_ops(tw[0]);
    let [i2z, i2p, i2m] = spin_ops(tw[1]);

    // A product term `coef · R ⊗ S1 ⊗ S2`; products of such terms multiply
    // factor by factor, which keeps the work on the small factor spaces.
    #[derive(Clone)]
    struct Term(C64, DMatrix<C64>, DMatrix<C64>, DMatrix<C64>);
    let mul = |a: &Term, b: &Term| Term(a.0 * b.0, &a.1 * &b.1, &a.2 * &b.2, &a.3 * &b.3);
    let scale = |t: &Term, c: f64| Term(t.0 * c, t.1.clone(), t.2.clone(), t.3.clone());
    let rotor = |a: &DMatrix<C64>| Term(C64::new(1.0, 0.0), a.clone(), eye(d1), eye(d2));
    let spin1 = |a: &DMatrix<C64>| Term(C64::new(1.0, 0.0), eye(rdim), a.clone(), eye(d2));
    let spin2 = |a: &DMatrix<C64>| Term(C64::new(1.0, 0.0), eye(rdim), eye(d1), a.clone());

    let s6 = 6f64.sqrt();
    let mu_b = NUCLEAR_MAGNETON_MHZ_PER_GAUSS * field.gauss();
    let n_vec = [rotor(&nz), rotor(&np), rotor(&nm)];
    let spins = [
        [spin1(&i1z), spin1(&i1p), spin1(&i1m)],
        [spin2(&i2z), spin2(&i2p), spin2(&i2m)],
    ];
    let dot = |a: &[Term; 3], b: &[Term; 3]| {
        vec![
            mul(&a[0], &b[0]),
            scale(&mul(&a[1], &b[2]), 0.5),
            scale(&mul(&a[2], &b[1]), 0.5),
        ]
    };
    let rank2 = |a: &[Term; 3], b: &[Term; 3], p: i32| -> Vec<Term> {
        match p {
            0 => {
                let mut v = vec![scale(&mul(&a[0], &b[0]), 3.0 / s6)];
                v.extend(dot(a, b).iter().map(|t| scale(t, -1.0 / s6)));
                v
            }
            1 => vec![scale(&mul(&a[1], &b[0]), -0.5), scale(&mul(&a[0], &b[1]), -0.5)],
            -1 => vec![scale(&mul(&a[2], &b[0]), 0.5), scale(&mul(&a[0], &b[2]), 0.5)],
            2 => vec![scale(&mul(&a[1], &b[1]), 0.5)],
            -2 => vec![scale(&mul(&a[2], &b[2]), 0.5)],
            _ => unreachable!(),
        }
    };
    let sign = |p: i32| if p % 2 == 0 { 1.0 } else { -1.0 };

    let mut terms: Vec<Term> = vec![scale(&rotor(&n2), spec.b_e), scale(&n_vec[0], -spec.g_r * mu_b)];
    terms.extend(dot(&spins[0], &spins[1]).iter().map(|t| scale(t, spec.c4)));
    for (i, s) in spins.iter().enumerate() {
        terms.push(scale(&s[0], -spec.nuclei[i].g_factor * mu_b));
        terms.extend(dot(&n_vec, s).iter().map(|t| scale(t, spec.nuclei[i].spin_rotation)));
        if tw[i] >= 2 {
            let spin = f64::from(tw[i]) / 2.0;
            let q = s6 * spec.nuclei[i].eqq / (4.0 * spin * (2.0 * spin - 1.0));
            for p in -2..=2 {
                let angular = rotor(c2(p));
                terms.extend(rank2(s, s, -p).iter().map(|t| scale(&mul(&angular, t), sign(p) * q)));
            }
        }
    }
    for p in -2..=2 {
        let angular = rotor(c2(-p));
        terms.extend(
            rank2(&spins[0], &spins[1], p)
                .iter()
                .map(|t| scale(&mul(&angular, t), -spec.c3 * s6 * sign(p))),
        );
    }
    let dim = rdim * d1 * d2;
    let mut h = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    for t in &terms {
        h += kron3(&t.1, &t.2, &t.3) * t.0;
    }
    BruteForce {
        n_max,
        spin_twice: tw,
        h,
    }
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off.sqrt() < 1e-14 * a.norm() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = cs * akp - sn * akq;
                    a[(k, q)] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = cs * apk - sn * aqk;
                    a[(q, k)] = sn * apk + cs * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}

/// Partial trace by forming `|ψ⟩⟨ψ|` and summing spin-diagonal entries.
/// Rows follow the first appearance of each `(N, M_N)` in the block.
pub fn brute_partial_trace(psi: &DVector<C64>, block: &SymmetryBlock) -> DMatrix<C64> {
    let rho = psi * psi.adjoint();
    let states = block.states();
    let mut labels: Vec<(i32, i32)> = Vec::new();
    for s in states {
        let l = (s.n.twice(), s.m_n.twice());
        if !labels.contains(&l) {
            labels.push(l);
        }
    }
    let pos = |s: &BasisState| labels.iter().position(|&l| l == (s.n.twice(), s.m_n.twice())).unwrap();
    let mut out = DMatrix::from_element(labels.len(), labels.len(), C64::new(0.0, 0.0));
    for (i, a) in states.iter().enumerate() {
        for (j, b) in states.iter().enumerate() {
            if a.m_i1 == b.m_i1 && a.m_i2 == b.m_i2 {
                out[(pos(a), pos(b))] += rho[(i, j)];
            }
        }
    }
    out
}

/// Deterministic pseudo-random normalized complex vector.
pub fn random_state(dim: usize, seed: u64) -> DVector<C64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let v = DVector::from_fn(dim, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let n = v.norm();
    v / C64::new(n, 0.0)
}

pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |m, (x, y)| m.max((x.re - y).abs()).max(x.im.abs()))
}

/// Assembled blocks against the Kronecker/quadrature construction; returns
/// the largest deviation seen.
pub fn hamiltonian_oracle_deviation(spec: &MoleculeSpec, n_max: u32, gauss: f64) -> f64 {
    let field = FieldPoint::new(gauss).unwrap();
    let brute = brute_force_hamiltonian(spec, n_max as i32, field);
    let mut worst: f64 = 0.0;
    for block in all_blocks(spec, n_max) {
        let block = Arc::new(block);
        let ours = build_hamiltonian::<f64>(spec, &block, field).unwrap();
        worst = worst.max(max_abs_diff(&brute.restrict(&block), ours.total()));
    }
    worst
}
