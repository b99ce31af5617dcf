//! Fixed-size dense LU with partial pivoting.

/// `PA = LU` packed in one array; `None` is returned for an exactly zero
/// pivot.
#[derive(Clone, Debug)]
pub struct Lu<const N: usize> {
    lu: [[f64; N]; N],
    perm: [usize; N],
    norm1: f64,
}

pub fn norm1<const N: usize>(a: &[[f64; N]; N]) -> f64 {
    (0..N)
        .map(|j| (0..N).map(|i| a[i][j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

impl<const N: usize> Lu<N> {
    pub fn factor(a: [[f64; N]; N]) -> Option<Self> {
        let norm1 = norm1(&a);
        let mut lu = a;
        let mut perm: [usize; N] = std::array::from_fn(|i| i);
        for k in 0..N {
            let p = (k..N)
                .max_by(|&i, &j| lu[i][k].abs().total_cmp(&lu[j][k].abs()))
                .unwrap();
            if lu[p][k] == 0.0 {
                return None;
            }
            lu.swap(k, p);
            perm.swap(k, p);
            for i in k + 1..N {
                let m = lu[i][k] / lu[k][k];
                lu[i][k] = m;
                for j in k + 1..N {
                    lu[i][j] -= m * lu[k][j];
                }
            }
        }
        Some(Self { lu, perm, norm1 })
    }

    pub fn solve(&self, b: &[f64; N]) -> [f64; N] {
        let mut x: [f64; N] = std::array::from_fn(|i| b[self.perm[i]]);
        for i in 0..N {
            for j in 0..i {
                x[i] -= self.lu[i][j] * x[j];
            }
        }
        for i in (0..N).rev() {
            for j in i + 1..N {
                x[i] -= self.lu[i][j] * x[j];
            }
            x[i] /= self.lu[i][i];
        }
        x
    }

    /// Columns of the inverse, `inv[j]` solving `A x = e_j`.
    pub fn inverse_columns(&self) -> [[f64; N]; N] {
        std::array::from_fn(|j| {
            let mut e = [0.0; N];
            e[j] = 1.0;
            self.solve(&e)
        })
    }

    /// 1-norm condition number, computed from the explicit inverse.
    pub fn condition(&self) -> f64 {
        let cols = self.inverse_columns();
        let inv_norm = cols
            .iter()
            .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        self.norm1 * inv_norm
    }
}
