//! Small dense complex linear algebra: just enough for (n+1)-sized systems,
//! companion eigenproblems and a handful of least-squares fits. Everything is
//! deterministic; matrix sizes never exceed a dozen.

use num_complex::Complex64;
use std::ops::{Index, IndexMut};

type C = Complex64;

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C>]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c);
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn matmul(&self, rhs: &CMat) -> CMat {
        assert_eq!(self.cols, rhs.rows);
        let mut out = CMat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(rhs.data.iter()) {
            *a += b;
        }
        out
    }

    pub fn sub(&self, rhs: &CMat) -> CMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(rhs.data.iter()) {
            *a -= b;
        }
        out
    }

    pub fn scale(&self, s: C) -> CMat {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= s;
        }
        out
    }

    pub fn conj_transpose(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C]) -> Vec<C> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn column(&self, j: usize) -> Vec<C> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[C]) {
        assert_eq!(v.len(), self.rows);
        for i in 0..self.rows {
            self[(i, j)] = v[i];
        }
    }

    /// Solve `self * X = B` by LU with partial pivoting.
    pub fn solve(&self, b: &CMat) -> Option<CMat> {
        assert_eq!(self.rows, self.cols);
        assert_eq!(b.rows, self.rows);
        let n = self.rows;
        let mut a = self.clone();
        let mut x = b.clone();
        for p in 0..n {
            let (mut best, mut best_abs) = (p, a[(p, p)].norm());
            for i in p + 1..n {
                let v = a[(i, p)].norm();
                if v > best_abs {
                    best = i;
                    best_abs = v;
                }
            }
            if best_abs == 0.0 {
                return None;
            }
            if best != p {
                for j in 0..n {
                    a.data.swap(p * n + j, best * n + j);
                }
                for j in 0..x.cols {
                    x.data.swap(p * x.cols + j, best * x.cols + j);
                }
            }
            let piv = a[(p, p)];
            for i in p + 1..n {
                let f = a[(i, p)] / piv;
                if f.norm_sqr() == 0.0 {
                    continue;
                }
                for j in p..n {
                    let v = a[(p, j)];
                    a[(i, j)] -= f * v;
                }
                for j in 0..x.cols {
                    let v = x[(p, j)];
                    x[(i, j)] -= f * v;
                }
            }
        }
        for p in (0..n).rev() {
            for j in 0..x.cols {
                let mut s = x[(p, j)];
                for k in p + 1..n {
                    s -= a[(p, k)] * x[(k, j)];
                }
                x[(p, j)] = s / a[(p, p)];
            }
        }
        Some(x)
    }

    pub fn inverse(&self) -> Option<CMat> {
        self.solve(&CMat::identity(self.rows))
    }

    /// Frobenius condition estimate `‖A‖ ‖A⁻¹‖`.
    pub fn cond_estimate(&self) -> f64 {
        match self.inverse() {
            Some(inv) => self.frobenius() * inv.frobenius(),
            None => f64::INFINITY,
        }
    }

    /// Eigenvalues of a general complex square matrix: Householder reduction
    /// to Hessenberg form followed by the shifted QR iteration.
    pub fn eigenvalues(&self) -> Vec<C> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        if n == 0 {
            return vec![];
        }
        if n == 1 {
            return vec![self[(0, 0)]];
        }
        let mut h = self.clone();
        hessenberg(&mut h);
        qr_eigenvalues(&mut h)
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = C;
    fn index(&self, (i, j): (usize, usize)) -> &C {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C {
        &mut self.data[i * self.cols + j]
    }
}

fn hessenberg(h: &mut CMat) {
    let n = h.rows();
    for k in 0..n.saturating_sub(2) {
        let mut norm2 = 0.0;
        for i in k + 1..n {
            norm2 += h[(i, k)].norm_sqr();
        }
        if norm2 == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let alpha = if x0.norm() == 0.0 {
            C::new(norm2.sqrt(), 0.0)
        } else {
            x0 / x0.norm() * norm2.sqrt()
        };
        let mut v: Vec<C> = (k + 1..n).map(|i| h[(i, k)]).collect();
        v[0] += alpha;
        let vn2: f64 = v.iter().map(|c| c.norm_sqr()).sum();
        if vn2 == 0.0 {
            continue;
        }
        let inv = 2.0 / vn2;
        for j in 0..n {
            let mut dot = C::new(0.0, 0.0);
            for (t, vi) in v.iter().enumerate() {
                dot += vi.conj() * h[(k + 1 + t, j)];
            }
            dot *= inv;
            for (t, vi) in v.iter().enumerate() {
                let d = *vi * dot;
                h[(k + 1 + t, j)] -= d;
            }
        }
        for i in 0..n {
            let mut dot = C::new(0.0, 0.0);
            for (t, vi) in v.iter().enumerate() {
                dot += h[(i, k + 1 + t)] * *vi;
            }
            dot *= inv;
            for (t, vi) in v.iter().enumerate() {
                let d = dot * vi.conj();
                h[(i, k + 1 + t)] -= d;
            }
        }
        for i in k + 2..n {
            h[(i, k)] = C::new(0.0, 0.0);
        }
    }
}

fn qr_eigenvalues(h: &mut CMat) -> Vec<C> {
    let n = h.rows();
    let mut eigs = Vec::with_capacity(n);
    let mut hi = n - 1;
    let eps = 1e-14;
    let mut iter_since_deflation = 0usize;
    loop {
        loop {
            if hi == 0 {
                eigs.push(h[(0, 0)]);
                return eigs;
            }
            let sub = h[(hi, hi - 1)].norm();
            if sub <= eps * (h[(hi - 1, hi - 1)].norm() + h[(hi, hi)].norm() + 1e-300) {
                eigs.push(h[(hi, hi)]);
                hi -= 1;
                iter_since_deflation = 0;
            } else {
                break;
            }
        }
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            if sub <= eps * (h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm() + 1e-300) {
                h[(lo, lo - 1)] = C::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }

        iter_since_deflation += 1;
        assert!(
            iter_since_deflation < 500,
            "QR eigenvalue iteration failed to converge"
        );

        // Wilkinson shift: trailing 2x2 eigenvalue closest to the corner.
        let a = h[(hi - 1, hi - 1)];
        let b = h[(hi - 1, hi)];
        let c = h[(hi, hi - 1)];
        let d = h[(hi, hi)];
        let tr_half = (a + d) * 0.5;
        let disc = (tr_half * tr_half - (a * d - b * c)).sqrt();
        let l1 = tr_half + disc;
        let l2 = tr_half - disc;
        let mut shift = if (l1 - d).norm() < (l2 - d).norm() { l1 } else { l2 };
        if iter_since_deflation % 40 == 0 {
            shift = d + C::new(1.5 * h[(hi, hi - 1)].norm(), 0.0);
        }

        for i in lo..=hi {
            h[(i, i)] -= shift;
        }
        let mut rots = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let a = h[(k, k)];
            let b = h[(k + 1, k)];
            let nrm = (a.norm_sqr() + b.norm_sqr()).sqrt();
            let (cg, sg) = if nrm == 0.0 {
                (C::new(1.0, 0.0), C::new(0.0, 0.0))
            } else {
                (a / nrm, b / nrm)
            };
            for j in k..=hi {
                let x = h[(k, j)];
                let y = h[(k + 1, j)];
                h[(k, j)] = cg.conj() * x + sg.conj() * y;
                h[(k + 1, j)] = -sg * x + cg * y;
            }
            rots.push((cg, sg));
        }
        for (t, (cg, sg)) in rots.into_iter().enumerate() {
            let k = lo + t;
            for i in lo..=hi {
                let x = h[(i, k)];
                let y = h[(i, k + 1)];
                h[(i, k)] = x * cg + y * sg;
                h[(i, k + 1)] = -x * sg.conj() + y * cg.conj();
            }
        }
        for i in lo..=hi {
            h[(i, i)] += shift;
        }
    }
}

/// Basis of the numerical nullspace of `a`; pivot threshold is relative to
/// the largest entry.
pub fn nullspace(a: &CMat, rel_tol: f64) -> Vec<Vec<C>> {
    let scale = a.max_abs().max(1e-300);
    let tol = rel_tol * scale;
    let mut a = a.clone();
    let (m, n) = (a.rows(), a.cols());
    let mut col_perm: Vec<usize> = (0..n).collect();
    let mut rank = 0;
    for p in 0..m.min(n) {
        let mut best = (p, p);
        let mut best_abs = 0.0;
        for i in p..m {
            for j in p..n {
                let v = a[(i, j)].norm();
                if v > best_abs {
                    best = (i, j);
                    best_abs = v;
                }
            }
        }
        if best_abs <= tol {
            break;
        }
        let (bi, bj) = best;
        if bi != p {
            for j in 0..n {
                let x = a[(p, j)];
                a[(p, j)] = a[(bi, j)];
                a[(bi, j)] = x;
            }
        }
        if bj != p {
            for i in 0..m {
                let x = a[(i, p)];
                a[(i, p)] = a[(i, bj)];
                a[(i, bj)] = x;
            }
            col_perm.swap(p, bj);
        }
        let piv = a[(p, p)];
        for i in 0..m {
            if i == p {
                continue;
            }
            let f = a[(i, p)] / piv;
            if f.norm_sqr() == 0.0 {
                continue;
            }
            for j in p..n {
                let v = a[(p, j)];
                a[(i, j)] -= f * v;
            }
        }
        rank += 1;
    }
    let mut basis = Vec::new();
    for free in rank..n {
        let mut v = vec![C::new(0.0, 0.0); n];
        v[col_perm[free]] = C::new(1.0, 0.0);
        for p in 0..rank {
            v[col_perm[p]] = -a[(p, free)] / a[(p, p)];
        }
        basis.push(v);
    }
    basis
}

/// Particular solution of `a x = b` when consistent at the given relative
/// tolerance; `None` when inconsistent.
pub fn solve_consistent(a: &CMat, b: &[C], rel_tol: f64) -> Option<Vec<C>> {
    let (m, n) = (a.rows(), a.cols());
    assert_eq!(b.len(), m);
    let mut aug = CMat::zeros(m, n + 1);
    for i in 0..m {
        for j in 0..n {
            aug[(i, j)] = a[(i, j)];
        }
        aug[(i, n)] = b[i];
    }
    let scale = a.max_abs().max(norm_inf(b)).max(1e-300);
    let mut col_perm: Vec<usize> = (0..n).collect();
    let mut rank = 0;
    for p in 0..m.min(n) {
        let mut best = (p, p);
        let mut best_abs = 0.0;
        for i in p..m {
            for j in p..n {
                let v = aug[(i, j)].norm();
                if v > best_abs {
                    best = (i, j);
                    best_abs = v;
                }
            }
        }
        if best_abs <= rel_tol * scale {
            break;
        }
        let (bi, bj) = best;
        if bi != p {
            for j in 0..=n {
                let x = aug[(p, j)];
                aug[(p, j)] = aug[(bi, j)];
                aug[(bi, j)] = x;
            }
        }
        if bj != p {
            for i in 0..m {
                let x = aug[(i, p)];
                aug[(i, p)] = aug[(i, bj)];
                aug[(i, bj)] = x;
            }
            col_perm.swap(p, bj);
        }
        let piv = aug[(p, p)];
        for i in 0..m {
            if i == p {
                continue;
            }
            let f = aug[(i, p)] / piv;
            if f.norm_sqr() == 0.0 {
                continue;
            }
            for j in p..=n {
                let v = aug[(p, j)];
                aug[(i, j)] -= f * v;
            }
        }
        rank += 1;
    }
    for i in rank..m {
        if aug[(i, n)].norm() > rel_tol * scale * 10.0 {
            return None;
        }
    }
    let mut x = vec![C::new(0.0, 0.0); n];
    for p in 0..rank {
        x[col_perm[p]] = aug[(p, n)] / aug[(p, p)];
    }
    Some(x)
}

pub fn norm_inf(v: &[C]) -> f64 {
    v.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Eigen-decomposition of a small symmetric real matrix by cyclic Jacobi.
/// Returns eigenvalues (descending) and orthonormal eigenvectors as rows.
pub fn symmetric_eigen(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = m.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    for _sweep in 0..60 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        if off.sqrt() < 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // Rotate rows and columns p, q of m.
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                // Accumulate the rotation into the eigenvector rows.
                for k in 0..n {
                    let vpk = v[p * n + k];
                    let vqk = v[q * n + k];
                    v[p * n + k] = c * vpk - s * vqk;
                    v[q * n + k] = s * vpk + c * vqk;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].partial_cmp(&m[i * n + i]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vecs = vec![0.0; n * n];
    for (r, &i) in order.iter().enumerate() {
        for k in 0..n {
            vecs[r * n + k] = v[i * n + k];
        }
    }
    (vals, vecs)
}

/// Least squares with real unknowns and complex data: minimizes
/// `‖Σ_k x_k col_k - rhs‖` over real `x`, with truncated-spectrum rank
/// handling. Singular values are those of the stacked real design.
pub struct RealLstsq {
    pub x: Vec<f64>,
    pub singular_values: Vec<f64>,
    pub rel_residual: f64,
    /// Indices of unknowns lying (mostly) in the truncated subspace.
    pub undetermined: Vec<usize>,
}

pub fn real_lstsq_complex_data(cols: &[Vec<C>], rhs: &[C], rank_rel_tol: f64) -> RealLstsq {
    let k = cols.len();
    let m = rhs.len();
    for c in cols {
        assert_eq!(c.len(), m);
    }
    let mut ata = vec![0.0; k * k];
    let mut atb = vec![0.0; k];
    for i in 0..k {
        for j in 0..k {
            let mut s = 0.0;
            for t in 0..m {
                s += cols[i][t].re * cols[j][t].re + cols[i][t].im * cols[j][t].im;
            }
            ata[i * k + j] = s;
        }
        let mut s = 0.0;
        for t in 0..m {
            s += cols[i][t].re * rhs[t].re + cols[i][t].im * rhs[t].im;
        }
        atb[i] = s;
    }
    let (vals, vecs) = symmetric_eigen(&ata, k);
    let sig: Vec<f64> = vals.iter().map(|v| v.max(0.0).sqrt()).collect();
    let smax = sig.first().copied().unwrap_or(0.0);
    let mut x = vec![0.0; k];
    let mut null_weight = vec![0.0; k];
    for r in 0..k {
        if sig[r] <= rank_rel_tol * smax || sig[r] == 0.0 {
            for i in 0..k {
                null_weight[i] += vecs[r * k + i] * vecs[r * k + i];
            }
            continue;
        }
        let mut proj = 0.0;
        for i in 0..k {
            proj += vecs[r * k + i] * atb[i];
        }
        proj /= vals[r];
        for i in 0..k {
            x[i] += proj * vecs[r * k + i];
        }
    }
    let undetermined: Vec<usize> = (0..k).filter(|&i| null_weight[i] > 0.5).collect();
    let mut res = 0.0;
    let mut scale = 0.0;
    for t in 0..m {
        let mut fit = C::new(0.0, 0.0);
        for i in 0..k {
            fit += cols[i][t] * x[i];
        }
        res += (rhs[t] - fit).norm_sqr();
        scale += rhs[t].norm_sqr();
    }
    // Normalize against the column scale too, so a near-zero target (exact
    // fit by x = 0) does not read as a huge relative residual.
    let col_scale = cols
        .iter()
        .map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>())
        .fold(0.0, f64::max);
    RealLstsq {
        x,
        singular_values: sig,
        rel_residual: (res / scale.max(col_scale).max(1e-300)).sqrt(),
        undetermined,
    }
}

/// Least squares with complex unknowns over a shared real design matrix
/// (rows x k); returns the solution and the design condition number.
pub fn complex_lstsq_real_design(design: &[Vec<f64>], rhs: &[C]) -> (Vec<C>, f64) {
    let m = design.len();
    let k = design[0].len();
    assert_eq!(rhs.len(), m);
    let mut ata = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            let mut s = 0.0;
            for t in 0..m {
                s += design[t][i] * design[t][j];
            }
            ata[i * k + j] = s;
        }
    }
    let (vals, vecs) = symmetric_eigen(&ata, k);
    let cond = if vals[k - 1] > 0.0 {
        (vals[0] / vals[k - 1]).sqrt()
    } else {
        f64::INFINITY
    };
    let mut atb = vec![C::new(0.0, 0.0); k];
    for i in 0..k {
        for t in 0..m {
            atb[i] += rhs[t] * design[t][i];
        }
    }
    let mut x = vec![C::new(0.0, 0.0); k];
    for r in 0..k {
        if vals[r] <= 0.0 {
            continue;
        }
        let mut proj = C::new(0.0, 0.0);
        for i in 0..k {
            proj += atb[i] * vecs[r * k + i];
        }
        proj /= vals[r];
        for i in 0..k {
            x[i] += proj * vecs[r * k + i];
        }
    }
    (x, cond)
}
