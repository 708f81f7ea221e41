//! Householder QR with column pivoting, and the solves built on it.
//!
//! The factored matrix is tall (`rows >= cols` is not required, but is the
//! common case): for the cubature problems it is `(Φ R^{1/2})^T`, one row per
//! data point and one column per basis function.

use nalgebra::DMatrix;

/// `A P = Q R` with `Q` stored as Householder reflectors below the diagonal.
#[derive(Clone, Debug)]
pub struct PivotedQr {
    qr: DMatrix<f64>,
    tau: Vec<f64>,
    perm: Vec<usize>,
}

impl PivotedQr {
    pub fn new(mut a: DMatrix<f64>) -> Self {
        let (m, n) = a.shape();
        let steps = m.min(n);
        let mut tau = vec![0.0; steps];
        let mut perm: Vec<usize> = (0..n).collect();
        let mut norms = vec![0.0; n];
        let data = a.as_mut_slice();

        for j in 0..steps {
            // exact recomputation of the trailing column norms keeps the pivot
            // order trustworthy for rank decisions; cost O(mn) per step
            for (c, nm) in norms.iter_mut().enumerate().skip(j) {
                *nm = sq_norm(&data[c * m + j..(c + 1) * m]);
            }
            let p = (j..n).fold(j, |best, c| if norms[c] > norms[best] { c } else { best });
            if p != j {
                for i in 0..m {
                    data.swap(j * m + i, p * m + i);
                }
                perm.swap(j, p);
                norms.swap(j, p);
            }

            let (head, tail) = data.split_at_mut((j + 1) * m);
            let x = &mut head[j * m + j..];
            let (beta, t) = householder(x);
            tau[j] = t;
            if t != 0.0 {
                for col in tail.chunks_exact_mut(m) {
                    apply_reflector(x, t, &mut col[j..]);
                }
            }
            x[0] = beta;
        }
        PivotedQr { qr: a, tau, perm }
    }

    pub fn nrows(&self) -> usize {
        self.qr.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.qr.ncols()
    }

    /// `perm[j]` is the original index of the `j`-th pivoted column.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    pub fn r_diagonal(&self) -> Vec<f64> {
        (0..self.tau.len()).map(|j| self.qr[(j, j)]).collect()
    }

    /// Number of `|R_jj|` above `rel_tol · |R_00|`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let diag = self.r_diagonal();
        let Some(first) = diag.first() else { return 0 };
        let thresh = rel_tol * first.abs();
        if first.abs() == 0.0 {
            return 0;
        }
        diag.iter().take_while(|d| d.abs() > thresh).count()
    }

    fn reflector(&self, j: usize) -> &[f64] {
        let m = self.nrows();
        &self.qr.as_slice()[j * m + j..(j + 1) * m]
    }

    /// `y ← Q y`.
    pub fn apply_q(&self, y: &mut [f64]) {
        for j in (0..self.tau.len()).rev() {
            if self.tau[j] != 0.0 {
                apply_reflector(self.reflector(j), self.tau[j], &mut y[j..]);
            }
        }
    }

    /// `y ← Q^T y`.
    pub fn apply_qt(&self, y: &mut [f64]) {
        for j in 0..self.tau.len() {
            if self.tau[j] != 0.0 {
                apply_reflector(self.reflector(j), self.tau[j], &mut y[j..]);
            }
        }
    }

    /// Minimum-norm solution of `A^T v = b` for full column rank `A`
    /// (`A^T` has full row rank). `A^T = P R^T Q^T`, so `v = Q [y; 0]` with
    /// `R^T y = P^T b`.
    pub fn solve_transposed_min_norm(&self, b: &[f64]) -> Vec<f64> {
        let n = self.ncols();
        assert_eq!(b.len(), n);
        assert!(self.nrows() >= n, "min-norm solve needs at least as many rows as columns");
        let mut y = vec![0.0; self.nrows()];
        for j in 0..n {
            let mut s = b[self.perm[j]];
            for i in 0..j {
                s -= self.qr[(i, j)] * y[i];
            }
            y[j] = s / self.qr[(j, j)];
        }
        self.apply_q(&mut y);
        y
    }

    /// Least-squares solution of `A x = b` restricted to the leading `rank`
    /// pivoted columns (basic solution); other entries are zero.
    pub fn solve_least_squares(&self, b: &[f64], rank: usize) -> Vec<f64> {
        let mut qtb = b.to_vec();
        self.apply_qt(&mut qtb);
        let mut z = vec![0.0; rank];
        for j in (0..rank).rev() {
            let mut s = qtb[j];
            for i in j + 1..rank {
                s -= self.qr[(j, i)] * z[i];
            }
            z[j] = s / self.qr[(j, j)];
        }
        let mut x = vec![0.0; self.ncols()];
        for j in 0..rank {
            x[self.perm[j]] = z[j];
        }
        x
    }

    /// The last column of the full `Q`: a unit vector orthogonal to the range
    /// of `A` whenever `rank(A) < nrows`.
    pub fn last_q_column(&self) -> Vec<f64> {
        let mut e = vec![0.0; self.nrows()];
        let last = e.len() - 1;
        e[last] = 1.0;
        self.apply_q(&mut e);
        e
    }
}

fn sq_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Turns `x` into the reflector `v` (with implicit `v_0 = 1`) such that
/// `(I - τ v v^T) x = β e_1`. Returns `(β, τ)`.
fn householder(x: &mut [f64]) -> (f64, f64) {
    let alpha = x[0];
    let tail = sq_norm(&x[1..]);
    if tail == 0.0 {
        return (alpha, 0.0);
    }
    let norm = (alpha * alpha + tail).sqrt();
    let beta = if alpha >= 0.0 { -norm } else { norm };
    let scale = 1.0 / (alpha - beta);
    for v in &mut x[1..] {
        *v *= scale;
    }
    (beta, (beta - alpha) / beta)
}

/// `c ← (I - τ v v^T) c`, with `v_0` taken as 1 whatever is stored there.
fn apply_reflector(v: &[f64], tau: f64, c: &mut [f64]) {
    let mut s = c[0];
    for i in 1..v.len() {
        s += v[i] * c[i];
    }
    s *= tau;
    c[0] -= s;
    for i in 1..v.len() {
        c[i] -= s * v[i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(m: usize, n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn reconstructs_input() {
        let a = random_matrix(9, 4, 1);
        let f = PivotedQr::new(a.clone());
        // rebuild A P column by column: A P e_j = Q R e_j
        for j in 0..4 {
            let mut col = vec![0.0; 9];
            for i in 0..=j {
                col[i] = f.qr[(i, j)];
            }
            f.apply_q(&mut col);
            let orig = a.column(f.permutation()[j]);
            for i in 0..9 {
                assert!((col[i] - orig[i]).abs() < 1e-14);
            }
        }
        let d = f.r_diagonal();
        assert!(d.windows(2).all(|p| p[0].abs() >= p[1].abs()));
    }

    #[test]
    fn min_norm_solution() {
        let a = random_matrix(10, 3, 2);
        let b = [0.3, -1.0, 2.0];
        let v = PivotedQr::new(a.clone()).solve_transposed_min_norm(&b);
        let atv = a.transpose() * DMatrix::from_column_slice(10, 1, &v);
        for i in 0..3 {
            assert!((atv[i] - b[i]).abs() < 1e-13);
        }
        // the min-norm solution lies in range(A): v = A c, c = (A^T A)^{-1} b
        let ata = a.transpose() * &a;
        let c = ata.lu().solve(&DMatrix::from_column_slice(3, 1, &b)).unwrap();
        let v2 = &a * c;
        for i in 0..10 {
            assert!((v[i] - v2[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn least_squares_and_kernel() {
        let a = random_matrix(8, 3, 3);
        let b: Vec<f64> = (0..8).map(|i| i as f64 * 0.1).collect();
        let f = PivotedQr::new(a.clone());
        let x = f.solve_least_squares(&b, 3);
        let r = DMatrix::from_column_slice(8, 1, &b) - &a * DMatrix::from_column_slice(3, 1, &x);
        let g = a.transpose() * r;
        assert!(g.amax() < 1e-13);
        let q = f.last_q_column();
        let atq = a.transpose() * DMatrix::from_column_slice(8, 1, &q);
        assert!(atq.amax() < 1e-14);
        assert!((q.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rank_detection() {
        assert_eq!(PivotedQr::new(DMatrix::identity(5, 5)).rank(1e-10), 5);
        let dup = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 1.0, 2.0]);
        assert_eq!(PivotedQr::new(dup).rank(1e-10), 1);
        assert_eq!(PivotedQr::new(DMatrix::zeros(3, 2)).rank(1e-10), 0);
    }
}
