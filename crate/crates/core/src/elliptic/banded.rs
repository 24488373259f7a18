//! Banded LU factorization with partial pivoting, in the classic band
//! storage layout: entry `(i, j)` lives at storage row `kl + ku + i - j`
//! of column `j`, with `kl` extra top rows absorbing pivot fill-in.

use crate::{Error, Result};

/// Square banded matrix with `kl` sub- and `ku` super-diagonals.
#[derive(Clone, Debug)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    /// Column-major band storage, `(2 kl + ku + 1)` rows per column.
    data: Vec<f64>,
    /// Pivot row chosen at each elimination step, once factored.
    ipiv: Vec<usize>,
    factored: bool,
}

impl BandedMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let rows = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            data: vec![0.0; rows * n],
            ipiv: Vec::new(),
            factored: false,
        }
    }

    #[inline]
    fn rows(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(i + self.ku + self.kl >= j && j + self.kl >= i);
        j * self.rows() + (self.kl + self.ku + i - j)
    }

    /// Adds to entry `(i, j)`; the pair must lie within the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(!self.factored);
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i + self.ku + self.kl < j || j + self.kl < i {
            return 0.0;
        }
        self.data[self.slot(i, j)]
    }

    /// In-place LU factorization with partial pivoting. After pivoting the
    /// effective upper bandwidth grows to `kl + ku`.
    pub fn factor(&mut self) -> Result<()> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let kv = kl + ku; // effective upper bandwidth
        self.ipiv = vec![0; n];
        for j in 0..n {
            // Pivot among rows j ..= j + kl.
            let i_max = (j + kl).min(n - 1);
            let mut piv = j;
            let mut best = self.data[self.slot(j, j)].abs();
            for i in (j + 1)..=i_max {
                let v = self.data[self.slot(i, j)].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if !(best > 0.0) || !best.is_finite() {
                return Err(Error::LinearSolveFailed(format!(
                    "zero or non-finite pivot at column {j}"
                )));
            }
            self.ipiv[j] = piv;
            let j_max = (j + kv).min(n - 1);
            if piv != j {
                for k in j..=j_max {
                    let (a, b) = (self.slot(j, k), self.slot(piv, k));
                    self.data.swap(a, b);
                }
            }
            // Eliminate below the pivot; store multipliers in place.
            let d = self.data[self.slot(j, j)];
            for i in (j + 1)..=i_max {
                let s = self.slot(i, j);
                let l = self.data[s] / d;
                self.data[s] = l;
                if l != 0.0 {
                    for k in (j + 1)..=j_max {
                        let pivot_val = self.data[self.slot(j, k)];
                        let t = self.slot(i, k);
                        self.data[t] -= l * pivot_val;
                    }
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Solves `A x = b` in place using the stored factorization.
    pub fn solve(&self, b: &mut [f64]) -> Result<()> {
        if !self.factored {
            return Err(Error::LinearSolveFailed(
                "solve called before factor".to_string(),
            ));
        }
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let kv = kl + ku;
        // Forward: apply row swaps and L.
        for j in 0..n {
            let piv = self.ipiv[j];
            if piv != j {
                b.swap(j, piv);
            }
            let i_max = (j + kl).min(n - 1);
            let bj = b[j];
            for i in (j + 1)..=i_max {
                b[i] -= self.data[self.slot(i, j)] * bj;
            }
        }
        // Backward: U has bandwidth kv.
        for j in (0..n).rev() {
            let j_max = (j + kv).min(n - 1);
            let mut s = b[j];
            for k in (j + 1)..=j_max {
                s -= self.data[self.slot(j, k)] * b[k];
            }
            b[j] = s / self.data[self.slot(j, j)];
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_banded(n: usize, kl: usize, ku: usize, seed: u64) -> (BandedMatrix, DMatrix<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut band = BandedMatrix::new(n, kl, ku);
        let mut dense = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i + ku >= j && j + kl >= i {
                    let mut v: f64 = rng.gen_range(-1.0..1.0);
                    if i == j {
                        // Keep the system comfortably nonsingular.
                        v += 4.0 * v.signum().max(0.5) + 4.0;
                    }
                    band.add(i, j, v);
                    dense[(i, j)] = v;
                }
            }
        }
        (band, dense)
    }

    #[test]
    fn matches_dense_lu_on_random_bands() {
        for (n, kl, ku, seed) in [(60, 3, 2, 7u64), (35, 1, 4, 11), (80, 5, 5, 13)] {
            let (mut band, dense) = random_banded(n, kl, ku, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mut x = b.clone();
            band.factor().unwrap();
            band.solve(&mut x).unwrap();
            let xd = dense
                .clone()
                .lu()
                .solve(&DVector::from_column_slice(&b))
                .unwrap();
            for i in 0..n {
                assert!((x[i] - xd[i]).abs() < 1e-10, "row {i}: {} vs {}", x[i], xd[i]);
            }
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // Leading diagonal entry is zero; only row exchange saves it.
        let mut band = BandedMatrix::new(3, 1, 1, );
        band.add(0, 0, 0.0);
        band.add(0, 1, 2.0);
        band.add(1, 0, 1.0);
        band.add(1, 1, 1.0);
        band.add(1, 2, 1.0);
        band.add(2, 1, 3.0);
        band.add(2, 2, 1.0);
        band.factor().unwrap();
        // Solve against the known matrix [[0,2,0],[1,1,1],[0,3,1]].
        let mut b = vec![2.0, 3.0, 4.0];
        band.solve(&mut b).unwrap();
        // x = (1, 1, 1).
        for v in &b {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let mut band = BandedMatrix::new(2, 1, 1);
        band.add(0, 0, 1.0);
        band.add(0, 1, 2.0);
        band.add(1, 0, 2.0);
        band.add(1, 1, 4.0);
        assert!(band.factor().is_err());
    }

    #[test]
    fn tridiagonal_second_difference() {
        // -u'' = f with u = x (1 - x) on 49 interior nodes: f = 2.
        let n = 49;
        let h = 1.0 / (n as f64 + 1.0);
        let mut band = BandedMatrix::new(n, 1, 1);
        for i in 0..n {
            band.add(i, i, 2.0 / (h * h));
            if i > 0 {
                band.add(i, i - 1, -1.0 / (h * h));
            }
            if i + 1 < n {
                band.add(i, i + 1, -1.0 / (h * h));
            }
        }
        band.factor().unwrap();
        let mut b = vec![2.0; n];
        band.solve(&mut b).unwrap();
        for i in 0..n {
            let x = (i as f64 + 1.0) * h;
            assert!((b[i] - x * (1.0 - x)).abs() < 1e-11);
        }
    }
}
