//! Dense complex helpers on top of nalgebra, matrixmultiply and faer.
//!
//! SVDs go through faer: nalgebra's complex SVD does not reconstruct
//! rank-deficient inputs.

use alloc::format;
use alloc::vec::Vec;
use matrixmultiply::CGemmOption;
use nalgebra::SymmetricEigen;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::{CMat, C64};

/// Gram condition numbers at or above this are treated as singular.
pub const GRAM_COND_LIMIT: f64 = 1e12;

/// Operand transform for [`matmul`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    None,
    Trans,
    Adjoint,
}

fn dims(m: &CMat, op: Op) -> (usize, usize) {
    match op {
        Op::None => (m.nrows(), m.ncols()),
        Op::Trans | Op::Adjoint => (m.ncols(), m.nrows()),
    }
}

// matrixmultiply ignores its conjugation flags, so adjoints conjugate a copy.
fn operand(m: &CMat, op: Op) -> (Option<CMat>, isize, isize) {
    let (rs, cs) = (1isize, m.nrows() as isize);
    match op {
        Op::None => (None, rs, cs),
        Op::Trans => (None, cs, rs),
        Op::Adjoint => (Some(m.map(|z| z.conj())), cs, rs),
    }
}

/// `op(a) · op(b)`.
pub fn matmul(a: &CMat, op_a: Op, b: &CMat, op_b: Op) -> CMat {
    let (m, k) = dims(a, op_a);
    let (k2, n) = dims(b, op_b);
    assert_eq!(k, k2, "inner dimensions differ");
    let mut c = CMat::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    let (ca, rsa, csa) = operand(a, op_a);
    let (cb, rsb, csb) = operand(b, op_b);
    let pa = ca.as_ref().unwrap_or(a).as_ptr() as *const [f64; 2];
    let pb = cb.as_ref().unwrap_or(b).as_ptr() as *const [f64; 2];
    let pc = c.as_mut_ptr() as *mut [f64; 2];
    // SAFETY: Complex<f64> is repr(C) with layout [re, im]; strides describe
    // column-major storage of the live operands and output.
    unsafe {
        matrixmultiply::zgemm(
            CGemmOption::Standard,
            CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            pa,
            rsa,
            csa,
            pb,
            rsb,
            csb,
            [0.0, 0.0],
            pc,
            1,
            m as isize,
        );
    }
    c
}

pub fn frob2(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}

/// Left-multiplies `m` by `diag(d)`.
pub fn scale_rows(m: &mut CMat, d: &[C64]) {
    assert_eq!(m.nrows(), d.len());
    for mut col in m.column_iter_mut() {
        for (x, s) in col.iter_mut().zip(d) {
            *x *= *s;
        }
    }
}

/// Householder QR of a tall full-column-rank matrix, reusable across right
/// hand sides.
pub struct LeastSquares {
    q: CMat,
    r: CMat,
    gram_cond: f64,
}

impl LeastSquares {
    /// Factors `a`. Fails when `a` is wide or its Gram condition estimate
    /// reaches [`GRAM_COND_LIMIT`].
    pub fn new(a: &CMat) -> Result<Self> {
        let (m, n) = a.shape();
        if m < n {
            return Err(Error::Dimension(format!("least squares needs rows >= cols, got {m}x{n}")));
        }
        if n == 0 {
            return Err(Error::Dimension("least squares needs at least one column".into()));
        }
        let qr = a.clone().qr();
        let r = qr.r();
        let q = qr.q();
        let diag: Vec<f64> = (0..n).map(|i| r[(i, i)].norm()).collect();
        let hi = diag.iter().cloned().fold(0.0, f64::max);
        let lo = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        // |r_ii| spread squared approximates cond(AᴴA).
        let gram_cond = if lo > 0.0 { (hi / lo).powi(2) } else { f64::INFINITY };
        if !(gram_cond < GRAM_COND_LIMIT) {
            return Err(Error::IllConditioned { cond: gram_cond });
        }
        Ok(Self { q, r, gram_cond })
    }

    pub fn gram_cond(&self) -> f64 {
        self.gram_cond
    }

    /// `argmin_X ‖A X − B‖_F`.
    pub fn solve(&self, b: &CMat) -> CMat {
        let qhb = matmul(&self.q, Op::Adjoint, b, Op::None);
        self.r.solve_upper_triangular(&qhb).expect("R has a nonzero diagonal")
    }
}

/// Moore-Penrose pseudo-inverse with relative singular-value cutoff.
pub fn pinv(a: &CMat) -> CMat {
    let (u, s, v) = svd_sorted(a);
    let cutoff = s.first().copied().unwrap_or(0.0) * 1e-12;
    let mut vs = v;
    for (j, &sj) in s.iter().enumerate() {
        let inv = if sj > cutoff { 1.0 / sj } else { 0.0 };
        for z in vs.column_mut(j).iter_mut() {
            *z *= inv;
        }
    }
    matmul(&vs, Op::None, &u, Op::Adjoint)
}

/// Least-squares solve that falls back to the pseudo-inverse when the Gram
/// matrix is ill-conditioned or the system is wide.
pub fn solve_or_pinv(a: &CMat, b: &CMat) -> CMat {
    match LeastSquares::new(a) {
        Ok(ls) => ls.solve(b),
        Err(_) => matmul(&pinv(a), Op::None, b, Op::None),
    }
}

/// Smallest and largest eigenvalue of a Hermitian matrix.
pub fn hermitian_extremes(m: &CMat) -> (f64, f64) {
    let eig = SymmetricEigen::new(m.clone());
    let lo = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Thin SVD with singular values in nonincreasing order: `(U, σ, V)` such
/// that `m = U diag(σ) Vᴴ`.
pub fn svd_sorted(m: &CMat) -> (CMat, Vec<f64>, CMat) {
    let (rows, cols) = m.shape();
    let view = faer::MatRef::from_column_major_slice(m.as_slice(), rows, cols);
    let svd = view.thin_svd().expect("SVD of a finite matrix converges");
    let n = rows.min(cols);
    let u = CMat::from_fn(rows, n, |i, j| svd.U()[(i, j)]);
    let v = CMat::from_fn(cols, n, |i, j| svd.V()[(i, j)]);
    let s = (0..n).map(|j| svd.S()[j].re).collect();
    (u, s, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_normal_matrix, seeded};

    fn naive(a: &CMat, b: &CMat) -> CMat {
        let mut c = CMat::zeros(a.nrows(), b.ncols());
        for i in 0..a.nrows() {
            for j in 0..b.ncols() {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..a.ncols() {
                    acc += a[(i, k)] * b[(k, j)];
                }
                c[(i, j)] = acc;
            }
        }
        c
    }

    #[test]
    fn matmul_matches_triple_loop_for_all_ops() {
        let mut rng = seeded(3);
        let a = complex_normal_matrix(&mut rng, 7, 5, 1.0);
        let b = complex_normal_matrix(&mut rng, 7, 4, 1.0);
        let c = complex_normal_matrix(&mut rng, 5, 4, 1.0);
        let cases = [
            (matmul(&a, Op::Adjoint, &b, Op::None), naive(&a.adjoint(), &b)),
            (matmul(&a, Op::Trans, &b, Op::None), naive(&a.transpose(), &b)),
            (matmul(&a, Op::None, &c, Op::None), naive(&a, &c)),
            (matmul(&b, Op::Adjoint, &a, Op::None), naive(&b.adjoint(), &a)),
            (matmul(&c, Op::None, &b, Op::Adjoint), naive(&c, &b.adjoint())),
            (matmul(&c, Op::None, &b, Op::Trans), naive(&c, &b.transpose())),
        ];
        for (got, want) in cases {
            assert!(frob2(&(got - &want)).sqrt() < 1e-12 * frob2(&want).sqrt());
        }
    }

    #[test]
    fn least_squares_recovers_planted_solution() {
        let mut rng = seeded(9);
        let a = complex_normal_matrix(&mut rng, 30, 6, 1.0);
        let x = complex_normal_matrix(&mut rng, 6, 3, 1.0);
        let b = naive(&a, &x);
        let ls = LeastSquares::new(&a).unwrap();
        assert!(frob2(&(ls.solve(&b) - x)).sqrt() < 1e-12);
        assert!(ls.gram_cond() >= 1.0);
    }

    #[test]
    fn least_squares_flags_rank_deficiency() {
        let mut rng = seeded(1);
        let mut a = complex_normal_matrix(&mut rng, 10, 3, 1.0);
        let col = a.column(0).clone_owned();
        a.set_column(2, &(col * C64::new(2.0, -1.0)));
        assert!(matches!(LeastSquares::new(&a), Err(Error::IllConditioned { .. })));
        assert!(matches!(LeastSquares::new(&CMat::zeros(2, 3)), Err(Error::Dimension(_))));
    }

    #[test]
    fn svd_is_sorted_and_reconstructs() {
        let mut rng = seeded(5);
        let m = complex_normal_matrix(&mut rng, 6, 4, 1.0);
        let (u, s, v) = svd_sorted(&m);
        assert!(s.windows(2).all(|w| w[0] >= w[1]));
        let sig = CMat::from_diagonal(&nalgebra::DVector::from_iterator(4, s.iter().map(|&x| C64::new(x, 0.0))));
        let rec = &u * sig * v.adjoint();
        assert!(frob2(&(rec - m)).sqrt() < 1e-12);
    }

    #[test]
    fn svd_reconstructs_rank_one() {
        let mut rng = seeded(7);
        let a = complex_normal_matrix(&mut rng, 32, 1, 1.0);
        let b = complex_normal_matrix(&mut rng, 1, 8, 1.0);
        let m = naive(&a, &b);
        let (u, s, v) = svd_sorted(&m);
        let r1 = u.column(0) * C64::new(s[0], 0.0) * v.column(0).adjoint();
        assert!(frob2(&(r1 - &m)).sqrt() < 1e-12 * frob2(&m).sqrt());
        assert!(s[1] < 1e-12 * s[0]);
    }

    #[test]
    fn pinv_handles_rank_deficiency() {
        let mut rng = seeded(6);
        let u = complex_normal_matrix(&mut rng, 6, 2, 1.0);
        let w = complex_normal_matrix(&mut rng, 2, 4, 1.0);
        let a = naive(&u, &w);
        let p = pinv(&a);
        let apa = naive(&naive(&a, &p), &a);
        assert!(frob2(&(apa - &a)).sqrt() < 1e-10 * frob2(&a).sqrt());
        let b = complex_normal_matrix(&mut rng, 6, 1, 1.0);
        let x = solve_or_pinv(&a, &b);
        assert!(frob2(&(x - naive(&p, &b))).sqrt() < 1e-10);
    }

    #[test]
    fn eigen_extremes_of_diagonal() {
        let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(3.0, 0.0),
            C64::new(0.5, 0.0),
            C64::new(2.0, 0.0),
        ]));
        let (lo, hi) = hermitian_extremes(&d);
        assert!((lo - 0.5).abs() < 1e-14 && (hi - 3.0).abs() < 1e-14);
    }
}
