//! CSR matrices, ILU(0) and right-preconditioned BiCGStab.

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    /// Column indices, sorted within each row.
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            let mut acc = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[p] * x[self.cols[p]];
            }
            *o = acc;
        }
    }

    fn find(&self, row: usize, col: usize) -> Option<usize> {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        self.cols[range.clone()]
            .binary_search(&col)
            .ok()
            .map(|off| range.start + off)
    }
}

/// Incomplete LU factorization with the sparsity of the matrix itself.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: CsrMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    /// Returns `None` on a zero pivot.
    pub fn new(a: &CsrMatrix) -> Option<Self> {
        let mut lu = a.clone();
        let n = lu.n;
        let mut diag = vec![0; n];
        for (i, d) in diag.iter_mut().enumerate() {
            *d = lu.find(i, i)?;
        }
        for i in 0..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for p in start..end {
                let k = lu.cols[p];
                if k >= i {
                    break;
                }
                let pivot = lu.vals[diag[k]];
                if pivot == 0.0 {
                    return None;
                }
                let factor = lu.vals[p] / pivot;
                lu.vals[p] = factor;
                for q in p + 1..end {
                    let j = lu.cols[q];
                    if let Some(kj) = lu.find(k, j) {
                        lu.vals[q] -= factor * lu.vals[kj];
                    }
                }
            }
            if lu.vals[diag[i]] == 0.0 {
                return None;
            }
        }
        Some(Self { lu, diag })
    }

    /// Solves `L U z = r`.
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        let lu = &self.lu;
        for i in 0..lu.n {
            let mut acc = r[i];
            for p in lu.row_ptr[i]..self.diag[i] {
                acc -= lu.vals[p] * z[lu.cols[p]];
            }
            z[i] = acc;
        }
        for i in (0..lu.n).rev() {
            let mut acc = z[i];
            for p in self.diag[i] + 1..lu.row_ptr[i + 1] {
                acc -= lu.vals[p] * z[lu.cols[p]];
            }
            z[i] = acc / lu.vals[self.diag[i]];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` to `‖b − A x‖ ≤ rel_tol ‖b‖` with BiCGStab, right
/// preconditioned by ILU(0) (falling back to Jacobi on a zero pivot).
pub fn bicgstab(
    a: &CsrMatrix,
    b: &[f64],
    rel_tol: f64,
    max_iter: usize,
) -> (Vec<f64>, LinearSolveStats) {
    let n = a.n;
    let ilu = Ilu0::new(a);
    let jacobi: Vec<f64> = (0..n)
        .map(|i| {
            let d = a.find(i, i).map(|p| a.vals[p]).unwrap_or(1.0);
            if d != 0.0 {
                1.0 / d
            } else {
                1.0
            }
        })
        .collect();
    let precond = |r: &[f64], z: &mut [f64]| match &ilu {
        Some(m) => m.apply(r, z),
        None => {
            for i in 0..n {
                z[i] = jacobi[i] * r[i];
            }
        }
    };

    let b_norm = norm(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return (
            x,
            LinearSolveStats {
                iterations: 0,
                relative_residual: 0.0,
                converged: true,
            },
        );
    }
    let target = rel_tol * b_norm;
    let mut r = b.to_vec();
    let mut r_hat = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut t = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        iterations += 1;
        let rho_new = dot(&r_hat, &r);
        if rho_new.abs() < f64::MIN_POSITIVE || omega == 0.0 {
            // breakdown: restart the shadow residual
            r_hat.copy_from_slice(&r);
            rho = 1.0;
            alpha = 1.0;
            omega = 1.0;
            v.fill(0.0);
            p.fill(0.0);
            continue;
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precond(&p, &mut y);
        a.mul_vec(&y, &mut v);
        let denom = dot(&r_hat, &v);
        if denom == 0.0 {
            r_hat.copy_from_slice(&r);
            rho = 1.0;
            omega = 1.0;
            v.fill(0.0);
            p.fill(0.0);
            continue;
        }
        alpha = rho / denom;
        for i in 0..n {
            s[i] = r[i] - alpha * v[i];
        }
        if norm(&s) <= target {
            for i in 0..n {
                x[i] += alpha * y[i];
            }
            r.copy_from_slice(&s);
            converged = true;
            break;
        }
        precond(&s, &mut z);
        a.mul_vec(&z, &mut t);
        let tt = dot(&t, &t);
        omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
        for i in 0..n {
            x[i] += alpha * y[i] + omega * z[i];
            r[i] = s[i] - omega * t[i];
        }
        if norm(&r) <= target {
            converged = true;
            break;
        }
    }

    // report the true residual
    a.mul_vec(&x, &mut t);
    for i in 0..n {
        r[i] = b[i] - t[i];
    }
    let relative_residual = norm(&r) / b_norm;
    (
        x,
        LinearSolveStats {
            iterations,
            relative_residual,
            converged: converged && relative_residual <= 10.0 * rel_tol,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize, lower: f64, d: f64, upper: f64) -> CsrMatrix {
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for i in 0..n {
            if i > 0 {
                cols.push(i - 1);
                vals.push(lower);
            }
            cols.push(i);
            vals.push(d);
            if i + 1 < n {
                cols.push(i + 1);
                vals.push(upper);
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    #[test]
    fn ilu0_exact_for_tridiagonal() {
        // no fill-in, so ILU(0) is the exact LU factorization
        let a = tridiag(50, -1.0, 2.5, -1.2);
        let ilu = Ilu0::new(&a).unwrap();
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let mut x = vec![0.0; 50];
        ilu.apply(&b, &mut x);
        let mut ax = vec![0.0; 50];
        a.mul_vec(&x, &mut ax);
        for i in 0..50 {
            assert!((ax[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn bicgstab_nonsymmetric() {
        let a = tridiag(200, -1.3, 2.0, -0.6);
        let b = vec![1.0; 200];
        let (x, stats) = bicgstab(&a, &b, 1e-10, 1000);
        assert!(stats.converged);
        let mut ax = vec![0.0; 200];
        a.mul_vec(&x, &mut ax);
        let res: f64 = ax
            .iter()
            .zip(&b)
            .map(|(p, q)| (p - q).powi(2))
            .sum::<f64>()
            .sqrt();
        assert!(res <= 1e-9 * (200f64).sqrt());
    }

    #[test]
    fn zero_rhs() {
        let a = tridiag(5, -1.0, 2.0, -1.0);
        let (x, stats) = bicgstab(&a, &[0.0; 5], 1e-10, 10);
        assert!(stats.converged);
        assert!(x.iter().all(|&v| v == 0.0));
    }
}
