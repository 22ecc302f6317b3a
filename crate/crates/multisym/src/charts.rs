//! Numerical calculus on coordinate charts: differentials, exterior
//! derivatives, pullbacks and pushforwards along smooth maps.
//!
//! Derivatives default to central differences with a relative step of
//! cbrt(machine epsilon); a Richardson-extrapolated scheme is available when
//! fourth-order accuracy is needed. Points within a stencil width of a chart
//! boundary are rejected rather than silently switching to one-sided
//! differences.

use crate::alternating::{AlternatingForm, MultiIndex, MultiVector};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A rectangular coordinate chart with finite per-axis bounds.
#[derive(Debug, Clone)]
pub struct ChartedDomain<T> {
    bounds: Vec<(T, T)>,
}

impl<T: Scalar> ChartedDomain<T> {
    pub fn new(bounds: Vec<(T, T)>) -> Result<Self> {
        for (axis, &(lo, hi)) in bounds.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::Config(format!(
                    "empty or non-finite interval on axis {axis}"
                )));
            }
        }
        Ok(Self { bounds })
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(T, T)] {
        &self.bounds
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.bounds)
                .all(|(&xi, &(lo, hi))| lo <= xi && xi <= hi)
    }

    /// Require `x` to be at distance >= `h[axis]` from each boundary.
    pub fn require_clearance(&self, x: &[T], h: &[T]) -> Result<()> {
        for (axis, (&xi, &(lo, hi))) in x.iter().zip(&self.bounds).enumerate() {
            if xi < lo || xi > hi {
                return Err(Error::OutOfDomain { axis });
            }
            if xi - lo < h[axis] || hi - xi < h[axis] {
                return Err(Error::BoundaryClearance {
                    axis,
                    needed: h[axis].to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(())
    }

    /// Whether `inner` is contained in the interior with margin `h` per axis.
    pub fn compactly_contains(&self, inner: &ChartedDomain<T>, margin: T) -> bool {
        self.dim() == inner.dim()
            && self
                .bounds
                .iter()
                .zip(&inner.bounds)
                .all(|(&(lo, hi), &(ilo, ihi))| ilo - lo >= margin && hi - ihi >= margin)
    }
}

/// Finite-difference scheme selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Plain central differences, O(h^2).
    Central,
    /// Richardson-extrapolated central differences, O(h^4).
    Richardson,
}

#[derive(Debug, Clone, Copy)]
pub struct DiffConfig<T> {
    /// Relative step; the per-axis step is `step_rel * max(1, |x_i|)`.
    pub step_rel: T,
    pub scheme: Scheme,
}

impl<T: Scalar> Default for DiffConfig<T> {
    fn default() -> Self {
        Self {
            step_rel: T::epsilon().cbrt(),
            scheme: Scheme::Central,
        }
    }
}

impl<T: Scalar> DiffConfig<T> {
    pub fn richardson() -> Self {
        Self {
            scheme: Scheme::Richardson,
            ..Self::default()
        }
    }

    pub fn step_at(&self, xi: T) -> T {
        self.step_rel * T::one().max(xi.abs())
    }

    pub fn steps(&self, x: &[T]) -> Vec<T> {
        x.iter().map(|&xi| self.step_at(xi)).collect()
    }

    /// Partial derivative of `f` along axis `i` at `x`.
    pub fn partial(&self, f: &dyn Fn(&[T]) -> T, x: &[T], i: usize) -> T {
        let h = self.step_at(x[i]);
        let central = |h: T| {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            (f(&xp) - f(&xm)) / (h + h)
        };
        match self.scheme {
            Scheme::Central => central(h),
            Scheme::Richardson => {
                let two = T::of(2.0);
                let d_h = central(h);
                let d_h2 = central(h / two);
                (T::of(4.0) * d_h2 - d_h) / T::of(3.0)
            }
        }
    }
}

type PointFn<T> = Box<dyn Fn(&[T]) -> Vec<T>>;
type JacobianFn<T> = Box<dyn Fn(&[T]) -> Vec<Vec<T>>>;

/// A smooth map between coordinate charts, with an optional analytic jacobian.
pub struct SmoothMap<T> {
    pub domain_dim: usize,
    pub codomain_dim: usize,
    value: PointFn<T>,
    jacobian: Option<JacobianFn<T>>,
}

impl<T: Scalar> SmoothMap<T> {
    pub fn new(
        domain_dim: usize,
        codomain_dim: usize,
        value: impl Fn(&[T]) -> Vec<T> + 'static,
    ) -> Self {
        Self {
            domain_dim,
            codomain_dim,
            value: Box::new(value),
            jacobian: None,
        }
    }

    pub fn with_jacobian(mut self, jac: impl Fn(&[T]) -> Vec<Vec<T>> + 'static) -> Self {
        self.jacobian = Some(Box::new(jac));
        self
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(dim, dim, |x: &[T]| x.to_vec()).with_jacobian(move |_x: &[T]| {
            (0..dim)
                .map(|r| {
                    (0..dim)
                        .map(|c| if r == c { T::one() } else { T::zero() })
                        .collect()
                })
                .collect()
        })
    }

    pub fn eval(&self, x: &[T]) -> Vec<T> {
        (self.value)(x)
    }

    /// Jacobian rows indexed by codomain coordinates, columns by domain
    /// coordinates; finite differences when no analytic jacobian is supplied.
    pub fn jacobian_at(&self, x: &[T], cfg: &DiffConfig<T>) -> Vec<Vec<T>> {
        if let Some(jac) = &self.jacobian {
            return jac(x);
        }
        let mut rows = vec![vec![T::zero(); self.domain_dim]; self.codomain_dim];
        for col in 0..self.domain_dim {
            let h = cfg.step_at(x[col]);
            let column = |h: T| {
                let mut xp = x.to_vec();
                let mut xm = x.to_vec();
                xp[col] += h;
                xm[col] -= h;
                let (fp, fm) = (self.eval(&xp), self.eval(&xm));
                fp.iter()
                    .zip(fm)
                    .map(|(&a, b)| (a - b) / (h + h))
                    .collect::<Vec<_>>()
            };
            let deriv = match cfg.scheme {
                Scheme::Central => column(h),
                Scheme::Richardson => {
                    let two = T::of(2.0);
                    let d_h = column(h);
                    let d_h2 = column(h / two);
                    d_h.iter()
                        .zip(d_h2)
                        .map(|(&a, b)| (T::of(4.0) * b - a) / T::of(3.0))
                        .collect()
                }
            };
            for (r, v) in deriv.into_iter().enumerate() {
                rows[r][col] = v;
            }
        }
        rows
    }

    /// Pushforward of a single tangent vector.
    pub fn pushforward_vector(&self, v: &[T], x: &[T], cfg: &DiffConfig<T>) -> Vec<T> {
        let jac = self.jacobian_at(x, cfg);
        jac.iter()
            .map(|row| row.iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }
}

type FormFn<T> = Box<dyn Fn(&[T]) -> AlternatingForm<T>>;

/// A field of alternating forms of fixed degree over a charted domain.
pub struct FormField<T> {
    pub base: ChartedDomain<T>,
    pub degree: usize,
    at: FormFn<T>,
}

impl<T: Scalar> FormField<T> {
    pub fn new(
        base: ChartedDomain<T>,
        degree: usize,
        at: impl Fn(&[T]) -> AlternatingForm<T> + 'static,
    ) -> Self {
        Self {
            base,
            degree,
            at: Box::new(at),
        }
    }

    pub fn at(&self, x: &[T]) -> AlternatingForm<T> {
        (self.at)(x)
    }
}

/// Differential of a scalar field as a 1-form, by finite differences.
pub fn differential<T: Scalar>(
    f: &dyn Fn(&[T]) -> T,
    x: &[T],
    cfg: &DiffConfig<T>,
) -> AlternatingForm<T> {
    let d = x.len();
    let mut out = AlternatingForm::zero(d, 1);
    for i in 0..d {
        out.set_coeff(&[i], cfg.partial(f, x, i));
    }
    out
}

/// Boundary-checked variant of [`differential`].
pub fn differential_in<T: Scalar>(
    domain: &ChartedDomain<T>,
    f: &dyn Fn(&[T]) -> T,
    x: &[T],
    cfg: &DiffConfig<T>,
) -> Result<AlternatingForm<T>> {
    domain.require_clearance(x, &cfg.steps(x))?;
    Ok(differential(f, x, cfg))
}

/// Exterior derivative of a form field at a point:
/// (da)_{i_0 < … < i_p} = Σ_j (-1)^j ∂_{i_j} a_{(i with i_j removed)}.
pub fn exterior_derivative<T: Scalar>(
    field: &FormField<T>,
    x: &[T],
    cfg: &DiffConfig<T>,
) -> Result<AlternatingForm<T>> {
    let d = field.base.dim();
    field.base.require_clearance(x, &cfg.steps(x))?;
    let p = field.degree;
    if p + 1 > d {
        return Ok(AlternatingForm::zero(d, p + 1));
    }
    // One pair (or two pairs for Richardson) of form evaluations per axis.
    let mut partials: Vec<AlternatingForm<T>> = Vec::with_capacity(d);
    for i in 0..d {
        let h = cfg.step_at(x[i]);
        let central = |h: T| -> AlternatingForm<T> {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            field
                .at(&xp)
                .sub(&field.at(&xm))
                .expect("form field degree constant over the domain")
                .scaled((h + h).recip())
        };
        let deriv = match cfg.scheme {
            Scheme::Central => central(h),
            Scheme::Richardson => {
                let two = T::of(2.0);
                let d_h = central(h);
                let d_h2 = central(h / two);
                d_h2.scaled(T::of(4.0))
                    .sub(&d_h)
                    .unwrap()
                    .scaled(T::of(3.0).recip())
            }
        };
        partials.push(deriv);
    }
    let mut out = AlternatingForm::zero(d, p + 1);
    for mi in MultiIndex::enumerate(d, p + 1) {
        let idx = mi.indices();
        let mut acc = T::zero();
        for (j, &ij) in idx.iter().enumerate() {
            let mut rest = idx.to_vec();
            rest.remove(j);
            let term = partials[ij].coeff(&rest);
            if j % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        out.set_coeff(idx, acc);
    }
    Ok(out)
}

/// Pullback of a pointwise form along a smooth map:
/// (F^*a)_x(u_1, …, u_p) = a_{F(x)}(F_* u_1, …, F_* u_p).
pub fn pullback<T: Scalar>(
    map: &SmoothMap<T>,
    form: &AlternatingForm<T>,
    x: &[T],
    cfg: &DiffConfig<T>,
) -> Result<AlternatingForm<T>> {
    if form.dim() != map.codomain_dim {
        return Err(Error::DimensionMismatch {
            expected: map.codomain_dim,
            got: form.dim(),
        });
    }
    let p = form.degree();
    let dd = map.domain_dim;
    if p > dd {
        return Ok(AlternatingForm::zero(dd, p));
    }
    let jac = map.jacobian_at(x, cfg);
    let mut out = AlternatingForm::zero(dd, p);
    if p == 0 {
        out.set_coeff(&[], form.coeff(&[]));
        return Ok(out);
    }
    let cod_indices = MultiIndex::enumerate(map.codomain_dim, p);
    for mi in MultiIndex::enumerate(dd, p) {
        let cols = mi.indices();
        let mut acc = T::zero();
        for (r, mk) in cod_indices.iter().enumerate() {
            let c = form.coeffs()[r];
            if c == T::zero() {
                continue;
            }
            acc += c * minor(&jac, mk.indices(), cols);
        }
        out.set_coeff(cols, acc);
    }
    Ok(out)
}

/// Pushforward of a pointwise multivector:
/// F_*(v_1 ∧ … ∧ v_k) = (F_* v_1) ∧ … ∧ (F_* v_k), extended linearly.
pub fn pushforward_multivector<T: Scalar>(
    map: &SmoothMap<T>,
    mv: &MultiVector<T>,
    x: &[T],
    cfg: &DiffConfig<T>,
) -> Result<MultiVector<T>> {
    if mv.dim() != map.domain_dim {
        return Err(Error::DimensionMismatch {
            expected: map.domain_dim,
            got: mv.dim(),
        });
    }
    let k = mv.degree();
    let cd = map.codomain_dim;
    if k > cd {
        return Ok(MultiVector::zero(cd, k));
    }
    let jac = map.jacobian_at(x, cfg);
    let mut out = MultiVector::zero(cd, k);
    if k == 0 {
        out.set_coeff(&[], mv.coeff(&[]));
        return Ok(out);
    }
    let dom_indices = MultiIndex::enumerate(map.domain_dim, k);
    for mk in MultiIndex::enumerate(cd, k) {
        let rows = mk.indices();
        let mut acc = T::zero();
        for (r, mi) in dom_indices.iter().enumerate() {
            let c = mv.coeffs()[r];
            if c == T::zero() {
                continue;
            }
            acc += c * minor(&jac, rows, mi.indices());
        }
        out.set_coeff(rows, acc);
    }
    Ok(out)
}

/// Pullback through a vector field along the map:
/// (F^*(ι_ξ a))_x(u_1, …, u_p) = a_{F(x)}(ξ_x, F_* u_1, …, F_* u_p),
/// where ξ_x is tangent at F(x).
pub fn pullback_along<T: Scalar>(
    map: &SmoothMap<T>,
    xi: &[T],
    form: &AlternatingForm<T>,
    x: &[T],
    cfg: &DiffConfig<T>,
) -> Result<AlternatingForm<T>> {
    let contracted = form.interior(xi)?;
    pullback(map, &contracted, x, cfg)
}

/// Minor of `jac` selecting the given rows and columns.
fn minor<T: Scalar>(jac: &[Vec<T>], rows: &[usize], cols: &[usize]) -> T {
    let n = rows.len();
    debug_assert_eq!(n, cols.len());
    match n {
        1 => jac[rows[0]][cols[0]],
        2 => {
            jac[rows[0]][cols[0]] * jac[rows[1]][cols[1]]
                - jac[rows[0]][cols[1]] * jac[rows[1]][cols[0]]
        }
        _ => {
            let m: Vec<Vec<T>> = rows
                .iter()
                .map(|&r| cols.iter().map(|&c| jac[r][c]).collect())
                .collect();
            det_small(m)
        }
    }
}

fn det_small<T: Scalar>(mut m: Vec<Vec<T>>) -> T {
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
