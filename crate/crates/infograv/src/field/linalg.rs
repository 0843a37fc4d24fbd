//! Small dense linear-algebra helpers shared by embeddings and geometry fits.

use rand::Rng;

/// Row-major dense symmetric matrix.
#[derive(Debug, Clone)]
pub(crate) struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn new(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    /// Adds `v` at (i, j) and mirrors it at (j, i).
    pub fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
        if i != j {
            self.data[j * self.n + i] += v;
        }
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (i, out_i) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            *out_i = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    /// Rank-one downdate `M -= lambda * v v^T`.
    pub fn deflate(&mut self, lambda: f64, v: &[f64]) {
        for i in 0..self.n {
            for j in 0..self.n {
                self.data[i * self.n + j] -= lambda * v[i] * v[j];
            }
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Flips the vector so its first non-negligible component is positive,
/// giving eigenvectors a canonical sign.
fn canonicalize_sign(v: &mut [f64]) {
    if let Some(&lead) = v.iter().find(|x| x.abs() > 1e-9) {
        if lead < 0.0 {
            for x in v.iter_mut() {
                *x = -*x;
            }
        }
    }
}

/// Top eigenpair by magnitude via power iteration from a seeded start vector.
///
/// Deterministic given the RNG state. A (numerically) zero matrix yields
/// eigenvalue 0 with a canonical unit vector.
pub(crate) fn top_eigenpair<R: Rng>(
    m: &SymMatrix,
    rng: &mut R,
    max_iter: usize,
    tol: f64,
) -> (f64, Vec<f64>) {
    let n = m.n();
    if n == 0 {
        return (0.0, Vec::new());
    }
    let mut unit0 = vec![0.0; n];
    unit0[0] = 1.0;
    if m.max_abs() < 1e-300 {
        return (0.0, unit0);
    }

    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let nv = norm(&v);
    if nv < 1e-300 {
        v = unit0.clone();
    } else {
        for x in v.iter_mut() {
            *x /= nv;
        }
    }

    for _ in 0..max_iter {
        let mut w = m.matvec(&v);
        let nw = norm(&w);
        if nw < 1e-300 {
            // start vector lies in the kernel: eigenvalue 0
            canonicalize_sign(&mut v);
            return (0.0, v);
        }
        for x in w.iter_mut() {
            *x /= nw;
        }
        // negative eigenvalues flip the iterate's sign each step
        let same: f64 = w.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum();
        let flip: f64 = w.iter().zip(&v).map(|(a, b)| (a + b) * (a + b)).sum();
        let diff = same.min(flip).sqrt();
        v = w;
        if diff < tol {
            break;
        }
    }

    let mv = m.matvec(&v);
    let lambda = dot(&v, &mv);
    canonicalize_sign(&mut v);
    (lambda, v)
}

/// Solves the SPD system `a x = b` by Cholesky factorization.
/// Returns `None` when a pivot collapses (rank-deficient input).
pub(crate) fn cholesky_solve(a: &SymMatrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.n();
    if n == 0 {
        return Some(Vec::new());
    }
    let max_diag = (0..n).map(|i| a.get(i, i)).fold(0.0, f64::max);
    let pivot_floor = (max_diag * 1e-12).max(1e-300);

    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                // NaN also lands here and aborts the factorization
                if s.is_nan() || s <= pivot_floor {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }

    // forward solve L z = b
    let mut z = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * z[k];
        }
        z[i] = s / l[i * n + i];
    }
    // back solve L^T x = z
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    Some(x)
}

/// Least squares `rows · β ≈ y` via normal equations. Falls back to ridge
/// regularization (`ridge` added to the diagonal) when the system is
/// rank-deficient; the flag reports whether that happened.
pub(crate) fn least_squares(rows: &[Vec<f64>], y: &[f64], ridge: f64) -> (Vec<f64>, bool) {
    let p = rows.first().map(Vec::len).unwrap_or(0);
    let mut ata = SymMatrix::new(p);
    let mut atb = vec![0.0; p];
    for (row, &yi) in rows.iter().zip(y) {
        for i in 0..p {
            atb[i] += row[i] * yi;
            for j in i..p {
                ata.add_sym(i, j, row[i] * row[j]);
            }
        }
    }
    if let Some(beta) = cholesky_solve(&ata, &atb) {
        return (beta, false);
    }
    let mut reg = ata;
    for i in 0..p {
        reg.add_sym(i, i, ridge);
    }
    let beta = cholesky_solve(&reg, &atb).unwrap_or_else(|| vec![0.0; p]);
    (beta, true)
}
