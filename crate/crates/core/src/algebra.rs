//! Truncated Taylor-jet arithmetic in the space variables together with a
//! forward-mode expansion in the tangential covector variables.
//!
//! A [`BiJet`] carries the mixed partials `∂_x^J ∂_ξ^K f` at a base point
//! `(x, ξ') = (0, ξ'_0)`, for `|J| <= kx` and `|K| <= lxi`, in the derivative
//! convention: the coefficient stored at a multi-index *is* the partial
//! derivative there, so recursion formulas read derivatives off directly with
//! no factorial bookkeeping. Multiplication is exact truncation: a product
//! coefficient of total order `m` depends on the factors only through order
//! `m`.
//!
//! [`TaylorJet`] is the pure-space specialization (`lxi = 0`) used for metric
//! and material data.

use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::AlgebraError;
use crate::scalar::Scalar;

/// Multi-indices of a fixed dimension up to a total degree, in graded order.
///
/// Graded order gives the prefix property: the index list for degree `k` is a
/// prefix of the list for any degree `k' > k`, so positions are stable across
/// truncations.
pub(crate) struct Layout {
    pub indices: Vec<Box<[u8]>>,
    pub rank: HashMap<Box<[u8]>, u32>,
    pub degree_of: Vec<u8>,
    /// `shift_up[v][i]`: position of `indices[i] + e_v`, when within degree.
    pub shift_up: Vec<Vec<Option<u32>>>,
}

fn compositions(dim: usize, total: usize, out: &mut Vec<Box<[u8]>>) {
    fn rec(dim: usize, total: usize, prefix: &mut Vec<u8>, out: &mut Vec<Box<[u8]>>) {
        if dim == 1 {
            prefix.push(total as u8);
            out.push(prefix.clone().into_boxed_slice());
            prefix.pop();
            return;
        }
        for first in (0..=total).rev() {
            prefix.push(first as u8);
            rec(dim - 1, total - first, prefix, out);
            prefix.pop();
        }
    }
    let mut prefix = Vec::with_capacity(dim);
    rec(dim, total, &mut prefix, out);
}

impl Layout {
    fn new(dim: usize, deg: usize) -> Self {
        let mut indices = Vec::new();
        for d in 0..=deg {
            compositions(dim, d, &mut indices);
        }
        let mut rank = HashMap::with_capacity(indices.len());
        let mut degree_of = Vec::with_capacity(indices.len());
        for (i, idx) in indices.iter().enumerate() {
            rank.insert(idx.clone(), i as u32);
            degree_of.push(idx.iter().sum());
        }
        let mut shift_up = Vec::with_capacity(dim);
        for v in 0..dim {
            let mut col = Vec::with_capacity(indices.len());
            for idx in &indices {
                let mut up = idx.to_vec();
                up[v] += 1;
                col.push(rank.get(up.as_slice()).copied());
            }
            shift_up.push(col);
        }
        Self {
            indices,
            rank,
            degree_of,
            shift_up,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }
}

fn layout(dim: usize, deg: usize) -> Arc<Layout> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Layout>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry((dim, deg))
        .or_insert_with(|| Arc::new(Layout::new(dim, deg)))
        .clone()
}

/// Number of multi-indices of dimension `dim` with total degree at most `deg`.
pub(crate) fn layout_len(dim: usize, deg: usize) -> usize {
    layout(dim, deg).len()
}

/// All multi-indices of dimension `dim` with total degree exactly `deg`.
pub fn indices_of_degree(dim: usize, deg: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    compositions(dim, deg, &mut out);
    out.iter()
        .map(|b| b.iter().map(|&v| v as usize).collect())
        .collect()
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for j in 0..k {
        acc = acc * (n - j) / (j + 1);
    }
    acc
}

struct MulEntry {
    ia: u32,
    ib: u32,
    io: u32,
    w: u64,
}

/// Leibniz pair table: all index pairs whose product lands within `ko`,
/// with the derivative-convention binomial weight.
fn mul_table(dim: usize, ka: usize, kb: usize, ko: usize) -> Arc<Vec<MulEntry>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize, usize, usize), Arc<Vec<MulEntry>>>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    {
        let guard = cache.lock().unwrap();
        if let Some(t) = guard.get(&(dim, ka, kb, ko)) {
            return t.clone();
        }
    }
    let la = layout(dim, ka);
    let lb = layout(dim, kb);
    let lo = layout(dim, ko);
    let mut entries = Vec::new();
    for (ia, ja) in la.indices.iter().enumerate() {
        let da = la.degree_of[ia] as usize;
        for (ib, jb) in lb.indices.iter().enumerate() {
            let db = lb.degree_of[ib] as usize;
            if da + db > ko {
                continue;
            }
            let sum: Vec<u8> = ja.iter().zip(jb.iter()).map(|(a, b)| a + b).collect();
            let io = lo.rank[sum.as_slice()];
            let mut w: u64 = 1;
            for d in 0..dim {
                w *= binomial((ja[d] + jb[d]) as u64, ja[d] as u64);
            }
            entries.push(MulEntry {
                ia: ia as u32,
                ib: ib as u32,
                io,
                w,
            });
        }
    }
    let arc = Arc::new(entries);
    cache
        .lock()
        .unwrap()
        .insert((dim, ka, kb, ko), arc.clone());
    arc
}

/// Base covector a family of jets is expanded around.
pub type BaseCovector<S> = Arc<Vec<S>>;

fn unify_base<S: Scalar>(
    a: &Option<BaseCovector<S>>,
    b: &Option<BaseCovector<S>>,
) -> Result<Option<BaseCovector<S>>, AlgebraError> {
    match (a, b) {
        (None, None) => Ok(None),
        (Some(x), None) => Ok(Some(x.clone())),
        (None, Some(y)) => Ok(Some(y.clone())),
        (Some(x), Some(y)) => {
            if Arc::ptr_eq(x, y) || x == y {
                Ok(Some(x.clone()))
            } else {
                Err(AlgebraError::BasePointMismatch)
            }
        }
    }
}

/// Truncated bivariate jet: space derivatives to order `kx`, tangential
/// covector derivatives to order `lxi`, around `(x, ξ') = (0, ξ'_0)`.
#[derive(Clone, Debug)]
pub struct BiJet<S: Scalar> {
    n: usize,
    kx: usize,
    lxi: usize,
    base: Option<BaseCovector<S>>,
    /// x-major storage: `coeffs[ix * nxi + ixi]`.
    coeffs: Vec<S>,
}

impl<S: Scalar> BiJet<S> {
    fn xdim(&self) -> usize {
        self.n
    }

    fn xidim(&self) -> usize {
        self.n - 1
    }

    fn nx(&self) -> usize {
        layout_len(self.n, self.kx)
    }

    fn nxi(&self) -> usize {
        layout_len(self.n - 1, self.lxi)
    }

    pub fn zero(n: usize, kx: usize, lxi: usize) -> Self {
        assert!(n >= 2, "space dimension must be at least 2");
        let len = layout_len(n, kx) * layout_len(n - 1, lxi);
        Self {
            n,
            kx,
            lxi,
            base: None,
            coeffs: vec![S::zero(); len],
        }
    }

    pub fn constant(n: usize, kx: usize, lxi: usize, v: S) -> Self {
        let mut j = Self::zero(n, kx, lxi);
        j.coeffs[0] = v;
        j
    }

    /// The coordinate function `x_v` (vanishing at the base point).
    pub fn x_var(n: usize, kx: usize, lxi: usize, v: usize) -> Self {
        assert!(v < n);
        let mut j = Self::zero(n, kx, lxi);
        if kx >= 1 {
            let lay = layout(n, kx);
            let mut idx = vec![0u8; n];
            idx[v] = 1;
            let pos = lay.rank[idx.as_slice()] as usize;
            let nxi = j.nxi();
            j.coeffs[pos * nxi] = S::one();
        }
        j
    }

    /// The coordinate function `ξ_a`, expanded around the base covector.
    pub fn xi_var(n: usize, kx: usize, lxi: usize, a: usize, base: BaseCovector<S>) -> Self {
        assert!(a < n - 1);
        assert_eq!(base.len(), n - 1);
        let mut j = Self::zero(n, kx, lxi);
        j.coeffs[0] = base[a].clone();
        if lxi >= 1 {
            let lay = layout(n - 1, lxi);
            let mut idx = vec![0u8; n - 1];
            idx[a] = 1;
            let pos = lay.rank[idx.as_slice()] as usize;
            j.coeffs[pos] = S::one();
        }
        j.base = Some(base);
        j
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn x_order(&self) -> usize {
        self.kx
    }

    pub fn xi_order(&self) -> usize {
        self.lxi
    }

    pub fn base(&self) -> Option<&BaseCovector<S>> {
        self.base.as_ref()
    }

    pub fn with_base(mut self, base: Option<BaseCovector<S>>) -> Self {
        self.base = base;
        self
    }

    /// Constant term: the value at the base point.
    pub fn value(&self) -> S {
        self.coeffs[0].clone()
    }

    /// Mixed partial `∂_x^J ∂_ξ^K` at the base point.
    pub fn partial(&self, xidx: &[usize], xiidx: &[usize]) -> Result<S, AlgebraError> {
        assert_eq!(xidx.len(), self.n);
        assert_eq!(xiidx.len(), self.n - 1);
        let dx: usize = xidx.iter().sum();
        let dxi: usize = xiidx.iter().sum();
        if dx > self.kx || dxi > self.lxi {
            return Err(AlgebraError::IndexOutOfOrder {
                x_index: dx,
                xi_index: dxi,
                have_x: self.kx,
                have_xi: self.lxi,
            });
        }
        let lx = layout(self.n, self.kx);
        let lxi = layout(self.n - 1, self.lxi);
        let jx: Vec<u8> = xidx.iter().map(|&v| v as u8).collect();
        let jxi: Vec<u8> = xiidx.iter().map(|&v| v as u8).collect();
        let ix = lx.rank[jx.as_slice()] as usize;
        let ixi = lxi.rank[jxi.as_slice()] as usize;
        Ok(self.coeffs[ix * self.nxi() + ixi].clone())
    }

    pub fn set_partial(
        &mut self,
        xidx: &[usize],
        xiidx: &[usize],
        v: S,
    ) -> Result<(), AlgebraError> {
        let dx: usize = xidx.iter().sum();
        let dxi: usize = xiidx.iter().sum();
        if dx > self.kx || dxi > self.lxi {
            return Err(AlgebraError::IndexOutOfOrder {
                x_index: dx,
                xi_index: dxi,
                have_x: self.kx,
                have_xi: self.lxi,
            });
        }
        let lx = layout(self.n, self.kx);
        let lxi = layout(self.n - 1, self.lxi);
        let jx: Vec<u8> = xidx.iter().map(|&v| v as u8).collect();
        let jxi: Vec<u8> = xiidx.iter().map(|&v| v as u8).collect();
        let ix = lx.rank[jx.as_slice()] as usize;
        let ixi = lxi.rank[jxi.as_slice()] as usize;
        let nxi = self.nxi();
        self.coeffs[ix * nxi + ixi] = v;
        Ok(())
    }

    /// Drop coefficients above the given orders.
    pub fn truncate(&self, kx: usize, lxi: usize) -> Self {
        let kx = kx.min(self.kx);
        let lxi = lxi.min(self.lxi);
        let mut out = Self::zero(self.n, kx, lxi);
        out.base = self.base.clone();
        let (onx, onxi) = (out.nx(), out.nxi());
        let snxi = self.nxi();
        for ix in 0..onx {
            for ixi in 0..onxi {
                out.coeffs[ix * onxi + ixi] = self.coeffs[ix * snxi + ixi].clone();
            }
        }
        out
    }

    /// Extend carried orders, declaring the jet an exact polynomial whose
    /// higher coefficients are genuinely zero. Never implied by arithmetic.
    pub fn extend_exact(&self, kx: usize, lxi: usize) -> Self {
        let kx = kx.max(self.kx);
        let lxi = lxi.max(self.lxi);
        let mut out = Self::zero(self.n, kx, lxi);
        out.base = self.base.clone();
        let onxi = out.nxi();
        let snxi = self.nxi();
        for ix in 0..self.nx() {
            for ixi in 0..snxi {
                out.coeffs[ix * onxi + ixi] = self.coeffs[ix * snxi + ixi].clone();
            }
        }
        out
    }

    fn check_compat(&self, rhs: &Self) -> (usize, usize, Option<BaseCovector<S>>) {
        assert_eq!(self.n, rhs.n, "jet dimension mismatch");
        let base = unify_base(&self.base, &rhs.base).expect("jet base covector mismatch");
        (self.kx.min(rhs.kx), self.lxi.min(rhs.lxi), base)
    }

    fn binary<F: Fn(&S, &S) -> S>(&self, rhs: &Self, f: F) -> Self {
        let (kx, lxi, base) = self.check_compat(rhs);
        let mut out = Self::zero(self.n, kx, lxi);
        out.base = base;
        let (onx, onxi) = (out.nx(), out.nxi());
        let (anxi, bnxi) = (self.nxi(), rhs.nxi());
        for ix in 0..onx {
            for ixi in 0..onxi {
                out.coeffs[ix * onxi + ixi] =
                    f(&self.coeffs[ix * anxi + ixi], &rhs.coeffs[ix * bnxi + ixi]);
            }
        }
        out
    }

    pub fn mul_scalar(&self, s: &S) -> Self {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c = c.clone() * s.clone();
        }
        out
    }

    /// Multiply by the imaginary unit.
    pub fn mul_i(&self) -> Self {
        self.mul_scalar(&S::i())
    }

    fn mul_impl(&self, rhs: &Self) -> Self {
        let (kx, lxi, base) = self.check_compat(rhs);
        let mut out = Self::zero(self.n, kx, lxi);
        out.base = base;
        let xt = mul_table(self.n, self.kx, rhs.kx, kx);
        let xit = mul_table(self.n - 1, self.lxi, rhs.lxi, lxi);
        let (anxi, bnxi, onxi) = (self.nxi(), rhs.nxi(), out.nxi());
        for xe in xt.iter() {
            let arow = &self.coeffs[xe.ia as usize * anxi..];
            let brow = &rhs.coeffs[xe.ib as usize * bnxi..];
            let orow = &mut out.coeffs[xe.io as usize * onxi..(xe.io as usize + 1) * onxi];
            for xie in xit.iter() {
                let a = &arow[xie.ia as usize];
                if a.is_zero() {
                    continue;
                }
                let b = &brow[xie.ib as usize];
                if b.is_zero() {
                    continue;
                }
                let w = xe.w * xie.w;
                let mut term = a.clone() * b.clone();
                if w != 1 {
                    term = term.scale_u64(w);
                }
                let slot = &mut orow[xie.io as usize];
                *slot = slot.clone() + term;
            }
        }
        out
    }

    /// Reciprocal by Newton iteration in the jet ring; exact to truncation.
    pub fn recip(&self) -> Result<Self, AlgebraError> {
        if self.coeffs[0].is_zero() {
            return Err(AlgebraError::DivisionByZeroJet);
        }
        let inv0 = S::one() / self.coeffs[0].clone();
        let mut x = Self::constant(self.n, self.kx, self.lxi, inv0).with_base(self.base.clone());
        let two = Self::constant(self.n, self.kx, self.lxi, S::from_i64(2));
        let grade = self.kx + self.lxi;
        let iters = usize::BITS as usize - grade.leading_zeros() as usize + 1;
        for _ in 0..iters {
            let bx = self.mul_impl(&x);
            x = x.mul_impl(&two.binary(&bx, |a, b| a.clone() - b.clone()));
        }
        Ok(x)
    }

    pub fn div(&self, rhs: &Self) -> Result<Self, AlgebraError> {
        Ok(self.mul_impl(&rhs.recip()?))
    }

    /// Principal square root; the constant term must have positive real part.
    pub fn sqrt(&self) -> Result<Self, AlgebraError> {
        let s0 = self.coeffs[0].sqrt_const()?;
        let inv_s0 = S::one() / s0;
        // Newton for 1/sqrt: y <- y (3 - a y^2) / 2, then sqrt = a y.
        let mut y = Self::constant(self.n, self.kx, self.lxi, inv_s0).with_base(self.base.clone());
        let three = Self::constant(self.n, self.kx, self.lxi, S::from_i64(3));
        let half = S::from_ratio(1, 2);
        let grade = self.kx + self.lxi;
        let iters = usize::BITS as usize - grade.leading_zeros() as usize + 1;
        for _ in 0..iters {
            let ay2 = self.mul_impl(&y.mul_impl(&y));
            y = y
                .mul_impl(&three.binary(&ay2, |a, b| a.clone() - b.clone()))
                .mul_scalar(&half);
        }
        Ok(self.mul_impl(&y))
    }

    /// Tangential or normal space derivative `∂/∂x_v`; drops one x order.
    pub fn dx(&self, v: usize) -> Result<Self, AlgebraError> {
        assert!(v < self.n);
        if self.kx == 0 {
            return Err(AlgebraError::InsufficientJetOrder {
                need_x: 1,
                need_xi: 0,
                have_x: 0,
                have_xi: self.lxi,
            });
        }
        let mut out = Self::zero(self.n, self.kx - 1, self.lxi);
        out.base = self.base.clone();
        let lay = layout(self.n, self.kx);
        let (onx, onxi) = (out.nx(), out.nxi());
        let snxi = self.nxi();
        for ix in 0..onx {
            let src = lay.shift_up[v][ix].expect("within order by construction") as usize;
            for ixi in 0..onxi {
                out.coeffs[ix * onxi + ixi] = self.coeffs[src * snxi + ixi].clone();
            }
        }
        Ok(out)
    }

    /// Covector derivative `∂/∂ξ_a`; drops one ξ order.
    pub fn dxi(&self, a: usize) -> Result<Self, AlgebraError> {
        assert!(a < self.n - 1);
        if self.lxi == 0 {
            return Err(AlgebraError::InsufficientJetOrder {
                need_x: 0,
                need_xi: 1,
                have_x: self.kx,
                have_xi: 0,
            });
        }
        let mut out = Self::zero(self.n, self.kx, self.lxi - 1);
        out.base = self.base.clone();
        let lay = layout(self.n - 1, self.lxi);
        let (onx, onxi) = (out.nx(), out.nxi());
        let snxi = self.nxi();
        for ixi in 0..onxi {
            let src = lay.shift_up[a][ixi].expect("within order by construction") as usize;
            for ix in 0..onx {
                out.coeffs[ix * onxi + ixi] = self.coeffs[ix * snxi + src].clone();
            }
        }
        Ok(out)
    }

    /// Largest coefficient modulus, over all carried orders.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max)
    }

    pub fn is_all_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    /// Iterate `(x multi-index, ξ multi-index, coefficient)` over all entries.
    pub fn entries(&self) -> Vec<(Vec<usize>, Vec<usize>, S)> {
        let lx = layout(self.n, self.kx);
        let lxi = layout(self.n - 1, self.lxi);
        let nxi = self.nxi();
        let mut out = Vec::new();
        for ix in 0..self.nx() {
            for ixi in 0..nxi {
                let c = self.coeffs[ix * nxi + ixi].clone();
                if c.is_zero() {
                    continue;
                }
                out.push((
                    lx.indices[ix].iter().map(|&v| v as usize).collect(),
                    lxi.indices[ixi].iter().map(|&v| v as usize).collect(),
                    c,
                ));
            }
        }
        out
    }
}

impl<S: Scalar> Add for &BiJet<S> {
    type Output = BiJet<S>;
    fn add(self, rhs: Self) -> BiJet<S> {
        self.binary(rhs, |a, b| a.clone() + b.clone())
    }
}

impl<S: Scalar> Sub for &BiJet<S> {
    type Output = BiJet<S>;
    fn sub(self, rhs: Self) -> BiJet<S> {
        self.binary(rhs, |a, b| a.clone() - b.clone())
    }
}

impl<S: Scalar> Mul for &BiJet<S> {
    type Output = BiJet<S>;
    fn mul(self, rhs: Self) -> BiJet<S> {
        self.mul_impl(rhs)
    }
}

impl<S: Scalar> Neg for &BiJet<S> {
    type Output = BiJet<S>;
    fn neg(self) -> BiJet<S> {
        let mut out = self.clone();
        for c in &mut out.coeffs {
            *c = -c.clone();
        }
        out
    }
}

/// The six checked arithmetic operations on bivariate jets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JetOp {
    Add,
    Sub,
    Mul,
    Div,
    Sqrt,
    Neg,
}

/// Checked operation dispatch. Binary ops require matching dimension and a
/// unifiable base covector; unary ops ignore `b`.
pub fn jet_arith<'a, S: Scalar>(
    a: &BiJet<S>,
    b: Option<&'a BiJet<S>>,
    op: JetOp,
) -> Result<BiJet<S>, AlgebraError> {
    let binary = |b: Option<&'a BiJet<S>>| -> Result<&'a BiJet<S>, AlgebraError> {
        let b = b.expect("binary jet op needs two operands");
        if a.n != b.n {
            return Err(AlgebraError::DimensionMismatch);
        }
        unify_base(&a.base, &b.base)?;
        Ok(b)
    };
    match op {
        JetOp::Add => Ok(a + binary(b)?),
        JetOp::Sub => Ok(a - binary(b)?),
        JetOp::Mul => Ok(a * binary(b)?),
        JetOp::Div => a.div(binary(b)?),
        JetOp::Sqrt => a.sqrt(),
        JetOp::Neg => Ok(-a),
    }
}

/// Pure-space truncated Taylor jet: all `∂_x^J f` at the base point up to a
/// total order. This is the ground data for metric and material coefficients.
#[derive(Clone, Debug)]
pub struct TaylorJet<S: Scalar> {
    inner: BiJet<S>,
}

impl<S: Scalar> TaylorJet<S> {
    pub fn zero(n: usize, k: usize) -> Self {
        Self {
            inner: BiJet::zero(n, k, 0),
        }
    }

    pub fn constant(n: usize, k: usize, v: S) -> Self {
        Self {
            inner: BiJet::constant(n, k, 0, v),
        }
    }

    /// The coordinate function `x_v`.
    pub fn x_var(n: usize, k: usize, v: usize) -> Self {
        Self {
            inner: BiJet::x_var(n, k, 0, v),
        }
    }

    /// Build from `(multi-index, derivative)` pairs.
    pub fn from_partials(
        n: usize,
        k: usize,
        parts: &[(Vec<usize>, S)],
    ) -> Result<Self, AlgebraError> {
        let mut j = Self::zero(n, k);
        let noxi = vec![0usize; n - 1];
        for (idx, v) in parts {
            j.inner.set_partial(idx, &noxi, v.clone())?;
        }
        Ok(j)
    }

    /// Polynomial in the normal coordinate with monomial coefficients
    /// `c_0 + c_1 x_n + c_2 x_n^2 + ...`, stored in derivative convention.
    pub fn poly_xn(n: usize, k: usize, monomial_coeffs: &[S]) -> Self {
        let mut j = Self::zero(n, k);
        let noxi = vec![0usize; n - 1];
        let mut fact: i64 = 1;
        for (d, c) in monomial_coeffs.iter().enumerate() {
            if d > 0 {
                fact *= d as i64;
            }
            if d > k {
                break;
            }
            let mut idx = vec![0usize; n];
            idx[n - 1] = d;
            j.inner
                .set_partial(&idx, &noxi, c.clone() * S::from_i64(fact))
                .expect("within order");
        }
        j
    }

    pub(crate) fn from_inner(inner: BiJet<S>) -> Self {
        assert_eq!(inner.xi_order(), 0, "taylor jet carries no covector orders");
        Self {
            inner: inner.with_base(None),
        }
    }

    pub(crate) fn inner(&self) -> &BiJet<S> {
        &self.inner
    }

    pub fn mul_scalar(&self, s: &S) -> Self {
        Self {
            inner: self.inner.mul_scalar(s),
        }
    }

    pub fn recip(&self) -> Result<Self, AlgebraError> {
        Ok(Self {
            inner: self.inner.recip()?,
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn order(&self) -> usize {
        self.inner.x_order()
    }

    pub fn value(&self) -> S {
        self.inner.value()
    }

    pub fn partial(&self, xidx: &[usize]) -> Result<S, AlgebraError> {
        let noxi = vec![0usize; self.dim() - 1];
        self.inner.partial(xidx, &noxi)
    }

    pub fn set_partial(&mut self, xidx: &[usize], v: S) -> Result<(), AlgebraError> {
        let noxi = vec![0usize; self.dim() - 1];
        self.inner.set_partial(xidx, &noxi, v)
    }

    /// All nonzero `(multi-index, derivative)` pairs.
    pub fn partials(&self) -> Vec<(Vec<usize>, S)> {
        self.inner
            .entries()
            .into_iter()
            .map(|(jx, _, v)| (jx, v))
            .collect()
    }

    /// Normal-derivative coefficient `∂^d f / ∂x_n^d` at the base point.
    pub fn normal_partial(&self, d: usize) -> Result<S, AlgebraError> {
        let mut idx = vec![0usize; self.dim()];
        idx[self.dim() - 1] = d;
        self.partial(&idx)
    }

    pub fn dx(&self, v: usize) -> Result<Self, AlgebraError> {
        Ok(Self {
            inner: self.inner.dx(v)?,
        })
    }

    pub fn truncate(&self, k: usize) -> Self {
        Self {
            inner: self.inner.truncate(k, 0),
        }
    }

    /// Declare the jet an exact polynomial and extend its carried order.
    pub fn extend_exact(&self, k: usize) -> Self {
        Self {
            inner: self.inner.extend_exact(k, 0),
        }
    }

    /// View in the bivariate algebra at covector order `lxi` (ξ-constant).
    pub fn lift(&self, lxi: usize) -> BiJet<S> {
        self.inner.extend_exact(self.order(), lxi)
    }

    pub fn max_abs(&self) -> f64 {
        self.inner.max_abs()
    }

    /// Evaluate the jet as a polynomial at a point on the normal axis.
    /// Only meaningful when the data genuinely depends on `x_n` alone.
    pub fn eval_xn(&self, xn: f64) -> num_complex::Complex64 {
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        let mut fact = 1.0;
        let mut pow = 1.0;
        for d in 0..=self.order() {
            if d > 0 {
                fact *= d as f64;
                pow *= xn;
            }
            let c = self.normal_partial(d).expect("within order").to_c64();
            acc += c * pow / fact;
        }
        acc
    }

    /// Derivative of [`Self::eval_xn`] in `x_n`.
    pub fn eval_xn_derivative(&self, xn: f64) -> num_complex::Complex64 {
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        let mut fact = 1.0;
        let mut pow = 1.0;
        for d in 1..=self.order() {
            if d > 1 {
                fact *= (d - 1) as f64;
                pow *= xn;
            }
            let c = self.normal_partial(d).expect("within order").to_c64();
            acc += c * pow / fact;
        }
        acc
    }
}

impl<S: Scalar> Add for &TaylorJet<S> {
    type Output = TaylorJet<S>;
    fn add(self, rhs: Self) -> TaylorJet<S> {
        TaylorJet {
            inner: &self.inner + &rhs.inner,
        }
    }
}

impl<S: Scalar> Sub for &TaylorJet<S> {
    type Output = TaylorJet<S>;
    fn sub(self, rhs: Self) -> TaylorJet<S> {
        TaylorJet {
            inner: &self.inner - &rhs.inner,
        }
    }
}

impl<S: Scalar> Mul for &TaylorJet<S> {
    type Output = TaylorJet<S>;
    fn mul(self, rhs: Self) -> TaylorJet<S> {
        TaylorJet {
            inner: &self.inner * &rhs.inner,
        }
    }
}

impl<S: Scalar> Neg for &TaylorJet<S> {
    type Output = TaylorJet<S>;
    fn neg(self) -> TaylorJet<S> {
        TaylorJet {
            inner: -&self.inner,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    type J = BiJet<Complex64>;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn truncated_polynomial_identity() {
        // (1 + x_n)(1 - x_n) at K = 2 is 1 - x_n^2; derivative convention
        // stores -2 at the x_n^2 slot.
        let n = 2;
        let one = J::constant(n, 2, 0, c(1.0));
        let xn = J::x_var(n, 2, 0, 1);
        let a = &one + &xn;
        let b = &one - &xn;
        let p = &a * &b;
        assert_eq!(p.partial(&[0, 0], &[0]).unwrap(), c(1.0));
        assert_eq!(p.partial(&[0, 1], &[0]).unwrap(), c(0.0));
        assert_eq!(p.partial(&[0, 2], &[0]).unwrap(), c(-2.0));
    }

    #[test]
    fn sqrt_of_constant() {
        let j = J::constant(2, 3, 2, c(25.0));
        let s = j.sqrt().unwrap();
        assert!((s.value() - c(5.0)).norm() < 1e-14);
        assert!(s.partial(&[0, 1], &[0]).unwrap().norm() < 1e-14);
    }

    #[test]
    fn sqrt_of_covector_norm_matches_finite_differences() {
        // |ξ| = sqrt(ξ1² + ξ2²) at ξ0 = (3, 4): value 5, ∂1 = 3/5, ∂2 = 4/5.
        let n = 3;
        let base: BaseCovector<Complex64> = Arc::new(vec![c(3.0), c(4.0)]);
        let xi1 = J::xi_var(n, 0, 2, 0, base.clone());
        let xi2 = J::xi_var(n, 0, 2, 1, base.clone());
        let norm2 = &(&xi1 * &xi1) + &(&xi2 * &xi2);
        let norm = norm2.sqrt().unwrap();
        assert!((norm.value() - c(5.0)).norm() < 1e-13);
        assert!((norm.partial(&[0, 0, 0], &[1, 0]).unwrap() - c(0.6)).norm() < 1e-13);
        assert!((norm.partial(&[0, 0, 0], &[0, 1]).unwrap() - c(0.8)).norm() < 1e-13);

        // Independent check: central differences of the closed-form norm.
        let h = 1e-6;
        let f = |x: f64, y: f64| (x * x + y * y).sqrt();
        let fd1 = (f(3.0 + h, 4.0) - f(3.0 - h, 4.0)) / (2.0 * h);
        let fd2 = (f(3.0, 4.0 + h) - f(3.0, 4.0 - h)) / (2.0 * h);
        assert!((norm.partial(&[0, 0, 0], &[1, 0]).unwrap().re - fd1).abs() < 1e-9);
        assert!((norm.partial(&[0, 0, 0], &[0, 1]).unwrap().re - fd2).abs() < 1e-9);
        // Second derivative against finite differences too.
        let fd11 = (f(3.0 + h, 4.0) - 2.0 * f(3.0, 4.0) + f(3.0 - h, 4.0)) / (h * h);
        assert!((norm.partial(&[0, 0, 0], &[2, 0]).unwrap().re - fd11).abs() < 1e-3);
    }

    #[test]
    fn extract_examples() {
        let cjet = J::constant(2, 2, 1, Complex64::new(2.5, -1.0));
        assert_eq!(cjet.partial(&[0, 0], &[0]).unwrap(), Complex64::new(2.5, -1.0));

        // (1 + x_n)^2 has ∂/∂x_n = 2 at 0.
        let one = J::constant(2, 2, 0, c(1.0));
        let xn = J::x_var(2, 2, 0, 1);
        let a = &one + &xn;
        let sq = &a * &a;
        assert_eq!(sq.partial(&[0, 1], &[0]).unwrap(), c(2.0));

        assert!(matches!(
            sq.partial(&[0, 3], &[0]),
            Err(AlgebraError::IndexOutOfOrder { .. })
        ));
    }

    #[test]
    fn truncation_exactness_under_junk_padding() {
        // Multiplication at order K must not read inputs above K: pad the
        // factors with junk above order 2 and compare against clean inputs.
        let n = 2;
        let mk = |junk: f64| {
            let mut j = J::zero(n, 4, 0);
            j.set_partial(&[0, 0], &[0], c(1.0)).unwrap();
            j.set_partial(&[1, 0], &[0], c(2.0)).unwrap();
            j.set_partial(&[0, 2], &[0], c(-1.5)).unwrap();
            j.set_partial(&[0, 3], &[0], c(junk)).unwrap();
            j.set_partial(&[3, 0], &[0], c(-junk)).unwrap();
            j.set_partial(&[0, 4], &[0], c(junk * 2.0)).unwrap();
            j
        };
        let clean = &mk(0.0).truncate(2, 0) * &mk(0.0).truncate(2, 0);
        let dirty = &mk(77.0) * &mk(-13.0);
        let dirty = dirty.truncate(2, 0);
        for (jx, jxi, v) in clean.entries() {
            let w = dirty.partial(&jx, &jxi).unwrap();
            assert!((v - w).norm() < 1e-13);
        }
    }

    #[test]
    fn reciprocal_and_division() {
        let n = 2;
        let one = J::constant(n, 3, 1, c(1.0));
        let xn = J::x_var(n, 3, 1, 1);
        let b = &(&one + &xn) * &(&one + &xn); // (1+x_n)^2
        let r = b.recip().unwrap();
        // (1+x)^-2 = 1 - 2x + 3x^2 - 4x^3: derivatives 1, -2, 6, -24.
        assert!((r.partial(&[0, 0], &[0]).unwrap() - c(1.0)).norm() < 1e-13);
        assert!((r.partial(&[0, 1], &[0]).unwrap() - c(-2.0)).norm() < 1e-13);
        assert!((r.partial(&[0, 2], &[0]).unwrap() - c(6.0)).norm() < 1e-13);
        assert!((r.partial(&[0, 3], &[0]).unwrap() - c(-24.0)).norm() < 1e-12);
        let q = b.div(&b).unwrap();
        assert!((q.value() - c(1.0)).norm() < 1e-13);
        assert!(q.partial(&[0, 1], &[0]).unwrap().norm() < 1e-12);

        let z = J::zero(n, 2, 0);
        assert!(matches!(
            one.div(&z),
            Err(AlgebraError::DivisionByZeroJet)
        ));
    }

    #[test]
    fn derivative_reindexing() {
        let n = 3;
        let x0 = J::x_var(n, 3, 0, 0);
        let x2 = J::x_var(n, 3, 0, 2);
        let p = &(&x0 * &x0) * &x2; // x_1^2 x_3
        let d = p.dx(0).unwrap(); // 2 x_1 x_3
        let dd = d.dx(2).unwrap(); // 2 x_1
        assert_eq!(dd.partial(&[1, 0, 0], &[0, 0]).unwrap(), c(2.0));
        assert_eq!(dd.x_order(), 1);
        assert!(matches!(
            dd.dx(0).unwrap().dx(0),
            Err(AlgebraError::InsufficientJetOrder { .. })
        ));
    }

    #[test]
    fn poly_xn_monomial_to_derivative_convention() {
        // 2 - x_n + x_n^2: derivatives (2, -1, 2, 0).
        let j: TaylorJet<Complex64> =
            TaylorJet::poly_xn(2, 3, &[c(2.0), c(-1.0), c(1.0)]);
        assert_eq!(j.normal_partial(0).unwrap(), c(2.0));
        assert_eq!(j.normal_partial(1).unwrap(), c(-1.0));
        assert_eq!(j.normal_partial(2).unwrap(), c(2.0));
        assert_eq!(j.normal_partial(3).unwrap(), c(0.0));
        assert!((j.eval_xn(0.5) - Complex64::new(2.0 - 0.5 + 0.25, 0.0)).norm() < 1e-14);
        assert!((j.eval_xn_derivative(0.5) - Complex64::new(0.0, 0.0)).norm() < 1e-14);
    }
}
