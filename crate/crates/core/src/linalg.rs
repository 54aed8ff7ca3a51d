//! Real symmetric block-tridiagonal matrices: assembly storage, block LDLᵀ
//! factorization with inertia, and a shift-invert Lanczos eigensolver.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric matrix with dense diagonal blocks `diag[i]` and coupling
/// blocks `off[i]` between slab i (rows) and slab i+1 (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct BlockTridiag {
    diag: Vec<DMatrix<f64>>,
    off: Vec<DMatrix<f64>>,
    offsets: Vec<usize>,
}

impl BlockTridiag {
    pub fn new(diag: Vec<DMatrix<f64>>, off: Vec<DMatrix<f64>>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidArgument("empty block matrix".into()));
        }
        if off.len() + 1 != diag.len() {
            return Err(Error::InvalidArgument("need one coupling block per adjacent slab pair".into()));
        }
        for (i, d) in diag.iter().enumerate() {
            if !d.is_square() || d.nrows() == 0 {
                return Err(Error::InvalidArgument(format!("diagonal block {i} is not square")));
            }
        }
        for (i, e) in off.iter().enumerate() {
            if e.nrows() != diag[i].nrows() || e.ncols() != diag[i + 1].nrows() {
                return Err(Error::InvalidArgument(format!("coupling block {i} has the wrong shape")));
            }
        }
        let mut offsets = Vec::with_capacity(diag.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for d in &diag {
            acc += d.nrows();
            offsets.push(acc);
        }
        Ok(Self { diag, off, offsets })
    }

    /// One dense block.
    pub fn from_dense(m: DMatrix<f64>) -> Result<Self> {
        Self::new(vec![m], vec![])
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap_or(&0)
    }

    pub fn num_blocks(&self) -> usize {
        self.diag.len()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.diag.iter().map(|d| d.nrows()).collect()
    }

    pub fn diag_block(&self, i: usize) -> &DMatrix<f64> {
        &self.diag[i]
    }

    pub fn off_block(&self, i: usize) -> &DMatrix<f64> {
        &self.off[i]
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        let nb = self.diag.len();
        for i in 0..nb {
            let (lo, hi) = (self.offsets[i], self.offsets[i + 1]);
            let yi = &mut y[lo..hi];
            gemv_add(&self.diag[i], &x[lo..hi], yi, false);
            if i + 1 < nb {
                gemv_add(&self.off[i], &x[hi..self.offsets[i + 2]], yi, false);
            }
            if i > 0 {
                gemv_add(&self.off[i - 1], &x[self.offsets[i - 1]..lo], yi, true);
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (i, d) in self.diag.iter().enumerate() {
            let o = self.offsets[i];
            m.view_mut((o, o), d.shape()).copy_from(d);
        }
        for (i, e) in self.off.iter().enumerate() {
            let (r, c) = (self.offsets[i], self.offsets[i + 1]);
            m.view_mut((r, c), e.shape()).copy_from(e);
            m.view_mut((c, r), (e.ncols(), e.nrows())).copy_from(&e.transpose());
        }
        m
    }

    /// max |A − Aᵀ| over the diagonal blocks (the off-diagonal part is
    /// symmetric by storage).
    pub fn symmetry_defect(&self) -> f64 {
        self.diag.iter().map(|d| (d - d.transpose()).amax()).fold(0.0, f64::max)
    }

    /// Largest absolute row sum, an upper bound for the spectral radius.
    pub fn norm_inf(&self) -> f64 {
        let n = self.dim();
        let mut rows = vec![0.0; n];
        for (i, d) in self.diag.iter().enumerate() {
            let o = self.offsets[i];
            for r in 0..d.nrows() {
                rows[o + r] += d.row(r).iter().map(|v| v.abs()).sum::<f64>();
            }
        }
        for (i, e) in self.off.iter().enumerate() {
            let (ro, co) = (self.offsets[i], self.offsets[i + 1]);
            for r in 0..e.nrows() {
                for c in 0..e.ncols() {
                    let v = e[(r, c)].abs();
                    rows[ro + r] += v;
                    rows[co + c] += v;
                }
            }
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    /// Rayleigh quotient xᵀAx / xᵀx.
    pub fn rayleigh(&self, x: &[f64]) -> f64 {
        let y = self.matvec(x);
        dot(x, &y) / dot(x, x)
    }

    /// xᵀAy.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.matvec(y))
    }

    pub fn factor(&self, shift: f64) -> Result<LdlFactor> {
        LdlFactor::new(self, shift)
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> Result<usize> {
        Ok(perturbed_factor(self, x)?.negative_count())
    }

    /// Number of eigenvalues in [lo, hi).
    pub fn count_in(&self, lo: f64, hi: f64) -> Result<usize> {
        let a = self.count_below(lo)?;
        let b = self.count_below(hi)?;
        Ok(b.saturating_sub(a))
    }
}

fn gemv_add(a: &DMatrix<f64>, x: &[f64], y: &mut [f64], transpose: bool) {
    let (nr, nc) = a.shape();
    let data = a.as_slice();
    if transpose {
        for c in 0..nc {
            let col = &data[c * nr..(c + 1) * nr];
            y[c] += dot(col, x);
        }
    } else {
        for c in 0..nc {
            let xc = x[c];
            if xc != 0.0 {
                let col = &data[c * nr..(c + 1) * nr];
                for (yi, a) in y.iter_mut().zip(col) {
                    *yi += a * xc;
                }
            }
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Factorization A − σI = L·blockdiag(S_i)·Lᵀ with every pivot block
/// stored through its eigendecomposition.
pub struct LdlFactor {
    shift: f64,
    pivots: Vec<(DMatrix<f64>, DVector<f64>)>,
    // S_i^{-1} E_i
    gains: Vec<DMatrix<f64>>,
    offsets: Vec<usize>,
    off: Vec<DMatrix<f64>>,
}

impl LdlFactor {
    fn new(a: &BlockTridiag, shift: f64) -> Result<Self> {
        let nb = a.diag.len();
        let scale = a.norm_inf().max(1.0);
        let mut pivots = Vec::with_capacity(nb);
        let mut gains: Vec<DMatrix<f64>> = Vec::with_capacity(nb.saturating_sub(1));
        for i in 0..nb {
            let mut s = a.diag[i].clone();
            for k in 0..s.nrows() {
                s[(k, k)] -= shift;
            }
            if i > 0 {
                // S_i = D_i − σ − E_{i−1}ᵀ S_{i−1}^{-1} E_{i−1}
                let e = &a.off[i - 1];
                s -= e.transpose() * &gains[i - 1];
                let t = s.transpose();
                s = (s + t) * 0.5;
            }
            let eig = SymmetricEigen::new(s);
            let min = eig.eigenvalues.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
            if !(min > 1e-14 * scale) {
                return Err(Error::NonConvergence(format!(
                    "pivot block {i} is numerically singular at shift {shift}"
                )));
            }
            if i + 1 < nb {
                let q = &eig.eigenvectors;
                let mut g = q.transpose() * &a.off[i];
                for (r, lam) in eig.eigenvalues.iter().enumerate() {
                    g.row_mut(r).scale_mut(1.0 / lam);
                }
                gains.push(q * g);
            }
            pivots.push((eig.eigenvectors, eig.eigenvalues));
        }
        Ok(Self { shift, pivots, gains, offsets: a.offsets.clone(), off: a.off.clone() })
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Number of negative eigenvalues of A − σI (Sylvester's law).
    pub fn negative_count(&self) -> usize {
        self.pivots.iter().map(|(_, l)| l.iter().filter(|v| **v < 0.0).count()).sum()
    }

    fn pivot_solve(&self, i: usize, b: &[f64]) -> Vec<f64> {
        let (q, lam) = &self.pivots[i];
        let n = lam.len();
        let mut t = vec![0.0; n];
        gemv_add(q, b, &mut t, true);
        for (ti, l) in t.iter_mut().zip(lam.iter()) {
            *ti /= l;
        }
        let mut out = vec![0.0; n];
        gemv_add(q, &t, &mut out, false);
        out
    }

    /// Solves (A − σI)x = b.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let nb = self.pivots.len();
        let off = &self.offsets;
        // forward: z_i = b_i − E_{i−1}ᵀ S_{i−1}^{-1} z_{i−1}
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(nb);
        for i in 0..nb {
            let mut zi = b[off[i]..off[i + 1]].to_vec();
            if i > 0 {
                // E_{i−1}ᵀ S_{i−1}^{-1} z = (S_{i−1}^{-1} E_{i−1})ᵀ z
                gemv_sub(&self.gains[i - 1], &z[i - 1], &mut zi);
            }
            z.push(zi);
        }
        let mut x = vec![0.0; b.len()];
        for i in (0..nb).rev() {
            let mut rhs = z[i].clone();
            if i + 1 < nb {
                let xn = x[off[i + 1]..off[i + 2]].to_vec();
                let mut t = vec![0.0; rhs.len()];
                gemv_add(&self.off[i], &xn, &mut t, false);
                for (r, v) in rhs.iter_mut().zip(&t) {
                    *r -= v;
                }
            }
            let xi = self.pivot_solve(i, &rhs);
            x[off[i]..off[i + 1]].copy_from_slice(&xi);
        }
        x
    }
}

fn gemv_sub(g: &DMatrix<f64>, z: &[f64], out: &mut [f64]) {
    let mut t = vec![0.0; out.len()];
    gemv_add(g, z, &mut t, true);
    for (o, v) in out.iter_mut().zip(&t) {
        *o -= v;
    }
}

/// Factors A − σI, nudging σ by tiny deterministic amounts if a pivot is
/// singular.
pub fn perturbed_factor(a: &BlockTridiag, shift: f64) -> Result<LdlFactor> {
    let scale = a.norm_inf().max(1.0);
    let mut last = None;
    for k in 0..6 {
        let sigma = if k == 0 { shift } else { shift + scale * 1e-11 * (k as f64) * 1.618_033_988_749_895 };
        match a.factor(sigma) {
            Ok(f) => return Ok(f),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::NonConvergence("factorization failed".into())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvergenceTag {
    Converged,
    Refine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    /// Residual bound ‖Av − λv‖ for unit v.
    pub tol: f64,
    /// Seed of the Lanczos starting vector.
    pub seed: u64,
    /// Matrices up to this dimension are solved densely.
    pub dense_limit: usize,
    /// Largest Krylov dimension before giving up.
    pub max_krylov: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { tol: 1e-8, seed: 0x5EC7_0D1A, dense_limit: 1200, max_krylov: 800 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenSolution {
    /// Ascending.
    pub values: Vec<f64>,
    /// Unit eigenvectors, aligned with `values`.
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub tag: ConvergenceTag,
    pub method: String,
    pub shift: f64,
}

/// The `k` eigenpairs of a symmetric block-tridiagonal matrix nearest to
/// `shift`, each with its residual ‖Av − λv‖.
pub fn eigs_nearest(a: &BlockTridiag, k: usize, shift: f64, opts: &EigenOptions) -> Result<EigenSolution> {
    let n = a.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("requested {k} eigenpairs of a {n}-dimensional matrix")));
    }
    if n <= opts.dense_limit {
        return dense_nearest(a, k, shift, opts);
    }
    lanczos_nearest(a, k, shift, opts)
}

fn finish(a: &BlockTridiag, mut pairs: Vec<(f64, Vec<f64>)>, opts: &EigenOptions, method: &str, shift: f64) -> EigenSolution {
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut values = Vec::with_capacity(pairs.len());
    let mut vectors = Vec::with_capacity(pairs.len());
    let mut residuals = Vec::with_capacity(pairs.len());
    for (lam, v) in pairs {
        let av = a.matvec(&v);
        let r: f64 = av.iter().zip(&v).map(|(x, y)| (x - lam * y).powi(2)).sum::<f64>().sqrt() / norm(&v);
        values.push(lam);
        residuals.push(r);
        vectors.push(v);
    }
    let tag = if residuals.iter().all(|r| *r <= opts.tol) { ConvergenceTag::Converged } else { ConvergenceTag::Refine };
    EigenSolution { values, vectors, residuals, tag, method: method.to_string(), shift }
}

fn dense_nearest(a: &BlockTridiag, k: usize, shift: f64, opts: &EigenOptions) -> Result<EigenSolution> {
    let eig = SymmetricEigen::new(a.to_dense());
    let mut idx: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    idx.sort_by(|&i, &j| {
        (eig.eigenvalues[i] - shift).abs().total_cmp(&(eig.eigenvalues[j] - shift).abs()).then(i.cmp(&j))
    });
    let pairs = idx[..k]
        .iter()
        .map(|&i| (eig.eigenvalues[i], eig.eigenvectors.column(i).iter().copied().collect()))
        .collect();
    Ok(finish(a, pairs, opts, "dense", shift))
}

/// All eigenvalues, ascending (dense).
pub fn eigenvalues_dense(a: &BlockTridiag) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(a.to_dense()).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, v);
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= c * qi;
            }
        }
    }
}

fn lanczos_nearest(a: &BlockTridiag, k: usize, shift: f64, opts: &EigenOptions) -> Result<EigenSolution> {
    let n = a.dim();
    let fac = perturbed_factor(a, shift)?;
    let sigma = fac.shift();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut random_unit = |basis: &[Vec<f64>]| -> Vec<f64> {
        let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        orthogonalize(&mut v, basis);
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        v
    };

    let max_m = opts.max_krylov.min(n);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    basis.push(random_unit(&[]));
    let mut check_at = (2 * k + 20).min(max_m);
    let mut best: Option<EigenSolution> = None;

    loop {
        let j = basis.len() - 1;
        let mut w = fac.solve(&basis[j]);
        let aj = dot(&w, &basis[j]);
        alpha.push(aj);
        orthogonalize(&mut w, &basis);
        let bj = norm(&w);
        let m = basis.len();

        if m >= check_at || m == max_m || bj < 1e-14 * aj.abs().max(1.0) && m == n {
            let t = tridiagonal(&alpha, &beta);
            let eig = SymmetricEigen::new(t);
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&x, &y| eig.eigenvalues[y].abs().total_cmp(&eig.eigenvalues[x].abs()));
            let take = k.min(m);
            let mut pairs = Vec::with_capacity(take);
            for &c in &order[..take] {
                let s = eig.eigenvectors.column(c);
                let mut y = vec![0.0; n];
                for (q, sc) in basis.iter().zip(s.iter()) {
                    for (yi, qi) in y.iter_mut().zip(q) {
                        *yi += sc * qi;
                    }
                }
                let ny = norm(&y);
                y.iter_mut().for_each(|x| *x /= ny);
                pairs.push((a.rayleigh(&y), y));
            }
            let sol = finish(a, pairs, opts, "shift-invert-lanczos", sigma);
            let done = sol.tag == ConvergenceTag::Converged && sol.values.len() == k;
            best = Some(sol);
            if done || m >= max_m {
                break;
            }
            check_at = (check_at + check_at / 2).min(max_m);
        }
        if m >= max_m {
            break;
        }
        let next = if bj < 1e-12 {
            beta.push(0.0);
            random_unit(&basis)
        } else {
            beta.push(bj);
            w.iter().map(|x| x / bj).collect()
        };
        basis.push(next);
    }
    best.ok_or_else(|| Error::NonConvergence("Lanczos produced no Ritz pairs".into()))
}

fn tridiagonal(alpha: &[f64], beta: &[f64]) -> DMatrix<f64> {
    let m = alpha.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    t
}
