//! Exact multilinear algebra of alternating forms and multivectors at a point.
//!
//! Forms and multivectors of degree `p` over an ambient dimension `d` are
//! stored densely on the C(d, p) strictly increasing multi-indices, in
//! lexicographic order. No differentiation happens in this module; everything
//! is exact up to floating-point rounding.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Binomial coefficient C(n, k) as usize (small arguments only).
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// A strictly increasing tuple of coordinate indices in `[0, d)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    indices: Vec<usize>,
}

impl MultiIndex {
    pub fn new(indices: Vec<usize>, dim: usize) -> Result<Self> {
        for w in indices.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidArgument(format!(
                    "multi-index not strictly increasing: {indices:?}"
                )));
            }
        }
        if let Some(&last) = indices.last() {
            if last >= dim {
                return Err(Error::InvalidArgument(format!(
                    "multi-index {indices:?} out of range for dimension {dim}"
                )));
            }
        }
        Ok(Self { indices })
    }

    pub fn degree(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// All multi-indices of the given degree over `0..dim`, lexicographic.
    pub fn enumerate(dim: usize, degree: usize) -> Vec<MultiIndex> {
        let mut out = Vec::with_capacity(binomial(dim, degree));
        let mut current = Vec::with_capacity(degree);
        fn rec(
            dim: usize,
            degree: usize,
            start: usize,
            current: &mut Vec<usize>,
            out: &mut Vec<MultiIndex>,
        ) {
            if current.len() == degree {
                out.push(MultiIndex {
                    indices: current.clone(),
                });
                return;
            }
            for i in start..dim {
                current.push(i);
                rec(dim, degree, i + 1, current, out);
                current.pop();
            }
        }
        rec(dim, degree, 0, &mut current, &mut out);
        out
    }

    /// Lexicographic rank of this multi-index among all of its degree.
    pub fn rank(&self, dim: usize) -> usize {
        let p = self.indices.len();
        let mut rank = 0;
        let mut low = 0;
        for (i, &c) in self.indices.iter().enumerate() {
            for v in low..c {
                rank += binomial(dim - 1 - v, p - 1 - i);
            }
            low = c + 1;
        }
        rank
    }
}

/// Rank of a sorted index slice without allocating a `MultiIndex`.
fn rank_of(indices: &[usize], dim: usize) -> usize {
    let p = indices.len();
    let mut rank = 0;
    let mut low = 0;
    for (i, &c) in indices.iter().enumerate() {
        for v in low..c {
            rank += binomial(dim - 1 - v, p - 1 - i);
        }
        low = c + 1;
    }
    rank
}

/// Shared dense component storage for forms and multivectors.
#[derive(Debug, Clone, PartialEq)]
struct Components<T> {
    dim: usize,
    degree: usize,
    coeffs: Vec<T>,
}

impl<T: Scalar> Components<T> {
    fn zero(dim: usize, degree: usize) -> Self {
        Self {
            dim,
            degree,
            coeffs: vec![T::zero(); binomial(dim, degree)],
        }
    }

    fn max_abs(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.abs()))
    }
}

/// A degree-`p` fully antisymmetric covariant tensor at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct AlternatingForm<T> {
    inner: Components<T>,
}

/// A degree-`k` antisymmetric contravariant tensor at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiVector<T> {
    inner: Components<T>,
}

/// Number of inversions between two disjoint sorted index sets, i.e. the
/// parity of the shuffle putting the concatenation (a, b) in increasing order.
fn shuffle_inversions(a: &[usize], b: &[usize]) -> usize {
    let mut inv = 0;
    for &x in a {
        for &y in b {
            if x > y {
                inv += 1;
            }
        }
    }
    inv
}

/// Merge two disjoint sorted index sets; returns None if they intersect.
fn merge_disjoint(a: &[usize], b: &[usize]) -> Option<Vec<usize>> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => return None,
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    Some(out)
}

/// Determinant of a small dense matrix by Gaussian elimination.
fn determinant<T: Scalar>(mut m: Vec<Vec<T>>) -> T {
    let n = m.len();
    let mut det = T::one();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())
            .unwrap();
        if m[pivot][col] == T::zero() {
            return T::zero();
        }
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        det *= m[col][col];
        let pivot_row = m[col].clone();
        for target in m.iter_mut().skip(col + 1) {
            let f = target[col] / pivot_row[col];
            for (entry, &pv) in target.iter_mut().zip(&pivot_row).skip(col) {
                *entry -= f * pv;
            }
        }
    }
    det
}

macro_rules! shared_component_api {
    ($ty:ident) => {
        impl<T: Scalar> $ty<T> {
            pub fn zero(dim: usize, degree: usize) -> Self {
                Self {
                    inner: Components::zero(dim, degree),
                }
            }

            pub fn dim(&self) -> usize {
                self.inner.dim
            }

            pub fn degree(&self) -> usize {
                self.inner.degree
            }

            /// Coefficients in lexicographic multi-index order.
            pub fn coeffs(&self) -> &[T] {
                &self.inner.coeffs
            }

            pub fn coeff(&self, indices: &[usize]) -> T {
                debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
                self.inner.coeffs[rank_of(indices, self.inner.dim)]
            }

            pub fn set_coeff(&mut self, indices: &[usize], value: T) {
                debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
                let r = rank_of(indices, self.inner.dim);
                self.inner.coeffs[r] = value;
            }

            pub fn add_to_coeff(&mut self, indices: &[usize], value: T) {
                let r = rank_of(indices, self.inner.dim);
                self.inner.coeffs[r] += value;
            }

            pub fn max_abs(&self) -> T {
                self.inner.max_abs()
            }

            pub fn is_zero_within(&self, tol: T) -> bool {
                self.max_abs() <= tol
            }

            pub fn scaled(&self, s: T) -> Self {
                let mut out = self.clone();
                for c in &mut out.inner.coeffs {
                    *c *= s;
                }
                out
            }

            pub fn add(&self, other: &Self) -> Result<Self> {
                if self.dim() != other.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim(),
                        got: other.dim(),
                    });
                }
                if self.degree() != other.degree() {
                    return Err(Error::DegreeMismatch {
                        msg: format!("{} vs {}", self.degree(), other.degree()),
                    });
                }
                let mut out = self.clone();
                for (c, o) in out.inner.coeffs.iter_mut().zip(&other.inner.coeffs) {
                    *c += *o;
                }
                Ok(out)
            }

            pub fn sub(&self, other: &Self) -> Result<Self> {
                self.add(&other.scaled(-T::one()))
            }
        }
    };
}

shared_component_api!(AlternatingForm);
shared_component_api!(MultiVector);

impl<T: Scalar> AlternatingForm<T> {
    /// The constant 0-form with the given value.
    pub fn constant(dim: usize, value: T) -> Self {
        let mut f = Self::zero(dim, 0);
        f.inner.coeffs[0] = value;
        f
    }

    /// The basis form dx^{i_1} ∧ … ∧ dx^{i_p} for strictly increasing indices.
    pub fn basis(dim: usize, indices: &[usize]) -> Result<Self> {
        let mi = MultiIndex::new(indices.to_vec(), dim)?;
        let mut f = Self::zero(dim, indices.len());
        f.inner.coeffs[mi.rank(dim)] = T::one();
        Ok(f)
    }

    /// Evaluate on `degree` vectors (each of length `dim`).
    pub fn evaluate(&self, vectors: &[&[T]]) -> Result<T> {
        let p = self.degree();
        if vectors.len() != p {
            return Err(Error::InvalidArgument(format!(
                "expected {p} vectors, got {}",
                vectors.len()
            )));
        }
        for v in vectors {
            if v.len() != self.dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.dim(),
                    got: v.len(),
                });
            }
        }
        if p == 0 {
            return Ok(self.inner.coeffs[0]);
        }
        let mut total = T::zero();
        for (r, mi) in MultiIndex::enumerate(self.dim(), p).into_iter().enumerate() {
            let c = self.inner.coeffs[r];
            if c == T::zero() {
                continue;
            }
            // det of the p x p matrix with entries v_j[i_r]
            let m: Vec<Vec<T>> = mi
                .indices()
                .iter()
                .map(|&row| vectors.iter().map(|v| v[row]).collect())
                .collect();
            total += c * determinant(m);
        }
        Ok(total)
    }

    /// Exterior product. Degrees exceeding the ambient dimension yield the
    /// zero form of the formal degree `p + q`.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let d = self.dim();
        let (p, q) = (self.degree(), other.degree());
        if p + q > d {
            return Ok(Self {
                inner: Components {
                    dim: d,
                    degree: p + q,
                    coeffs: vec![],
                },
            });
        }
        let mut out = Self::zero(d, p + q);
        let lhs_idx = MultiIndex::enumerate(d, p);
        let rhs_idx = MultiIndex::enumerate(d, q);
        for (i, mi) in lhs_idx.iter().enumerate() {
            let a = self.inner.coeffs[i];
            if a == T::zero() {
                continue;
            }
            for (j, mj) in rhs_idx.iter().enumerate() {
                let b = other.inner.coeffs[j];
                if b == T::zero() {
                    continue;
                }
                if let Some(merged) = merge_disjoint(mi.indices(), mj.indices()) {
                    let sign = if shuffle_inversions(mi.indices(), mj.indices()).is_multiple_of(2) {
                        T::one()
                    } else {
                        -T::one()
                    };
                    out.add_to_coeff(&merged, sign * a * b);
                }
            }
        }
        Ok(out)
    }

    /// Contraction by a multivector, with the convention
    /// `contract(v_1 ∧ … ∧ v_k, a)(w_1, …) = a(v_1, …, v_k, w_1, …)`.
    pub fn contract(&self, x: &MultiVector<T>) -> Result<Self> {
        let d = self.dim();
        if x.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.dim(),
            });
        }
        let (k, p) = (x.degree(), self.degree());
        if k > p {
            return Err(Error::DegreeMismatch {
                msg: format!("cannot contract a degree-{k} multivector into a degree-{p} form"),
            });
        }
        let mut out = Self::zero(d, p - k);
        let x_idx = MultiIndex::enumerate(d, k);
        let a_idx = MultiIndex::enumerate(d, p);
        for (j, mj) in x_idx.iter().enumerate() {
            let xc = x.inner.coeffs[j];
            if xc == T::zero() {
                continue;
            }
            for (i, mi) in a_idx.iter().enumerate() {
                let ac = self.inner.coeffs[i];
                if ac == T::zero() {
                    continue;
                }
                // mj must be a subset of mi
                let mut rest = Vec::with_capacity(p - k);
                let mut sub = mj.indices().iter().peekable();
                let mut is_subset = true;
                for &ix in mi.indices() {
                    if sub.peek() == Some(&&ix) {
                        sub.next();
                    } else {
                        rest.push(ix);
                    }
                }
                if sub.next().is_some() {
                    is_subset = false;
                }
                if !is_subset {
                    continue;
                }
                let sign = if shuffle_inversions(mj.indices(), &rest).is_multiple_of(2) {
                    T::one()
                } else {
                    -T::one()
                };
                out.add_to_coeff(&rest, sign * xc * ac);
            }
        }
        Ok(out)
    }

    /// Interior product with a single vector.
    pub fn interior(&self, v: &[T]) -> Result<Self> {
        self.contract(&MultiVector::from_vector(v))
    }

    /// Whether every k-fold contraction with the given vertical basis
    /// vectors vanishes (within `tol`). This is the membership test for
    /// the horizontality filtration of n-forms.
    pub fn is_k_horizontal(&self, vertical_basis: &[Vec<T>], k: usize, tol: T) -> Result<bool> {
        if k < 1 {
            return Err(Error::InvalidArgument(
                "horizontality order k must be >= 1".into(),
            ));
        }
        if k > self.degree() {
            // contracting more vectors than the degree always gives zero
            return Ok(true);
        }
        for combo in MultiIndex::enumerate(vertical_basis.len(), k) {
            let vs: Vec<&[T]> = combo
                .indices()
                .iter()
                .map(|&i| vertical_basis[i].as_slice())
                .collect();
            let mv = MultiVector::from_decomposable(&vs)?;
            if !self.contract(&mv)?.is_zero_within(tol) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// The flat map of an (n+1)-form: v ↦ ι_v ω.
pub fn flat<T: Scalar>(omega: &AlternatingForm<T>, v: &[T]) -> Result<AlternatingForm<T>> {
    omega.interior(v)
}

impl<T: Scalar> MultiVector<T> {
    /// A single vector as a degree-1 multivector.
    pub fn from_vector(v: &[T]) -> Self {
        Self {
            inner: Components {
                dim: v.len(),
                degree: 1,
                coeffs: v.to_vec(),
            },
        }
    }

    /// The basis multivector e_{i_1} ∧ … ∧ e_{i_k}.
    pub fn basis(dim: usize, indices: &[usize]) -> Result<Self> {
        let mi = MultiIndex::new(indices.to_vec(), dim)?;
        let mut m = Self::zero(dim, indices.len());
        m.inner.coeffs[mi.rank(dim)] = T::one();
        Ok(m)
    }

    /// The decomposable multivector v_1 ∧ … ∧ v_k; its coefficients are the
    /// k×k minors of the column matrix [v_1 … v_k].
    pub fn from_decomposable(vectors: &[&[T]]) -> Result<Self> {
        let k = vectors.len();
        if k == 0 {
            return Err(Error::InvalidArgument(
                "empty decomposable multivector".into(),
            ));
        }
        let d = vectors[0].len();
        for v in vectors {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: v.len(),
                });
            }
        }
        if k > d {
            return Err(Error::DegreeMismatch {
                msg: format!("degree {k} exceeds dimension {d}"),
            });
        }
        let mut out = Self::zero(d, k);
        for (r, mi) in MultiIndex::enumerate(d, k).into_iter().enumerate() {
            let m: Vec<Vec<T>> = mi
                .indices()
                .iter()
                .map(|&row| vectors.iter().map(|v| v[row]).collect())
                .collect();
            out.inner.coeffs[r] = determinant(m);
        }
        Ok(out)
    }

    /// Exterior product of multivectors.
    pub fn wedge(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let d = self.dim();
        let (p, q) = (self.degree(), other.degree());
        if p + q > d {
            return Ok(Self {
                inner: Components {
                    dim: d,
                    degree: p + q,
                    coeffs: vec![],
                },
            });
        }
        let mut out = Self::zero(d, p + q);
        let lhs_idx = MultiIndex::enumerate(d, p);
        let rhs_idx = MultiIndex::enumerate(d, q);
        for (i, mi) in lhs_idx.iter().enumerate() {
            let a = self.inner.coeffs[i];
            if a == T::zero() {
                continue;
            }
            for (j, mj) in rhs_idx.iter().enumerate() {
                let b = other.inner.coeffs[j];
                if b == T::zero() {
                    continue;
                }
                if let Some(merged) = merge_disjoint(mi.indices(), mj.indices()) {
                    let sign = if shuffle_inversions(mi.indices(), mj.indices()).is_multiple_of(2) {
                        T::one()
                    } else {
                        -T::one()
                    };
                    out.add_to_coeff(&merged, sign * a * b);
                }
            }
        }
        Ok(out)
    }
}
