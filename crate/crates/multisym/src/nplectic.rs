//! Pointwise checks and residuals on user-specified n-plectic manifolds:
//! closedness and non-degeneracy of ω, the pairing equation
//! ι_Xω = (−1)^{k+1} dH, its dynamical counterpart for maps from a
//! k-dimensional source, and degeneracy reporting.

use nalgebra::DMatrix;

use crate::alternating::{binomial, AlternatingForm, MultiIndex, MultiVector};
use crate::charts::{
    exterior_derivative, pushforward_multivector, ChartedDomain, DiffConfig, FormField, SmoothMap,
};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative singular-value threshold for rank decisions.
const RANK_RTOL: f64 = 1e-10;

/// A manifold chart with a candidate (n+1)-form ω; closedness and
/// non-degeneracy are verified by [`check_nplectic`], never assumed.
pub struct NPlecticManifold<T> {
    pub degree: usize,
    pub omega: FormField<T>,
}

impl<T: Scalar> NPlecticManifold<T> {
    pub fn new(degree: usize, omega: FormField<T>) -> Result<Self> {
        if omega.degree != degree + 1 {
            return Err(Error::DegreeMismatch {
                msg: format!("ω must have degree {}, got {}", degree + 1, omega.degree),
            });
        }
        Ok(Self { degree, omega })
    }

    pub fn dim(&self) -> usize {
        self.omega.base.dim()
    }
}

/// The Hamiltonian (n−k)-form of a pairing problem.
pub struct HamiltonianForm<T> {
    pub field: FormField<T>,
}

impl<T: Scalar> HamiltonianForm<T> {
    pub fn new(field: FormField<T>) -> Self {
        Self { field }
    }

    /// The source degree k this form pairs with on the given manifold.
    pub fn source_degree(&self, m: &NPlecticManifold<T>) -> Result<usize> {
        if self.field.degree > m.degree {
            return Err(Error::DegreeMismatch {
                msg: format!(
                    "Hamiltonian form degree {} exceeds the plectic degree {}",
                    self.field.degree, m.degree
                ),
            });
        }
        Ok(m.degree - self.field.degree)
    }
}

type MultiVectorFn<T> = Box<dyn Fn(&[T]) -> MultiVector<T>>;

/// A nowhere-vanishing k-multivector field on a k-dimensional source chart.
pub struct CoVolume<T> {
    pub source: ChartedDomain<T>,
    pub degree: usize,
    at: MultiVectorFn<T>,
}

impl<T: Scalar> CoVolume<T> {
    pub fn new(
        source: ChartedDomain<T>,
        degree: usize,
        at: impl Fn(&[T]) -> MultiVector<T> + 'static,
    ) -> Result<Self> {
        if source.dim() != degree {
            return Err(Error::DimensionMismatch {
                expected: degree,
                got: source.dim(),
            });
        }
        Ok(Self {
            source,
            degree,
            at: Box::new(at),
        })
    }

    /// The coordinate co-volume ∂/∂x¹ ∧ … ∧ ∂/∂x^k.
    pub fn coordinate(source: ChartedDomain<T>) -> Self {
        let k = source.dim();
        Self {
            source,
            degree: k,
            at: Box::new(move |_x: &[T]| {
                MultiVector::basis(k, &(0..k).collect::<Vec<_>>()).expect("coordinate co-volume")
            }),
        }
    }

    pub fn at(&self, x: &[T]) -> MultiVector<T> {
        (self.at)(x)
    }

    /// Reject fields that vanish at any of the sampled points.
    pub fn check_nonvanishing(&self, points: &[Vec<T>]) -> Result<()> {
        for x in points {
            if self.at(x).max_abs() == T::zero() {
                return Err(Error::InvalidArgument(format!(
                    "co-volume vanishes at {x:?}"
                )));
            }
        }
        Ok(())
    }
}

/// Result of the pointwise n-plectic verification.
#[derive(Debug, Clone, serde::Serialize)]
pub struct NPlecticCheck {
    pub dim: usize,
    pub degree: usize,
    pub samples: usize,
    /// L∞ norm of dω over the samples.
    pub closedness: f64,
    /// Smallest rank of v ↦ ι_vω over the samples (full = dim).
    pub min_rank: usize,
    pub nondegenerate: bool,
    pub closed_within: f64,
}

/// Verify closedness and injectivity of the contraction map at each sample.
/// Rank deficiency is reported, not fatal.
pub fn check_nplectic<T: Scalar>(
    m: &NPlecticManifold<T>,
    points: &[Vec<T>],
    closed_tol: f64,
    cfg: &DiffConfig<T>,
) -> Result<NPlecticCheck> {
    let d = m.dim();
    let mut closedness = 0.0f64;
    let mut min_rank = d;
    for x in points {
        let domega = exterior_derivative(&m.omega, x, cfg)?;
        closedness = closedness.max(domega.max_abs().to_f64().unwrap_or(f64::NAN));
        min_rank = min_rank.min(flat_rank(&m.omega.at(x)));
    }
    Ok(NPlecticCheck {
        dim: d,
        degree: m.degree,
        samples: points.len(),
        closedness,
        min_rank,
        nondegenerate: min_rank == d,
        closed_within: closed_tol,
    })
}

/// Rank of the linear map v ↦ ι_vω on tangent vectors.
pub fn flat_rank<T: Scalar>(omega: &AlternatingForm<T>) -> usize {
    let d = omega.dim();
    if omega.degree() == 0 {
        return 0;
    }
    let cols = binomial(d, omega.degree() - 1);
    let mut mat = DMatrix::<f64>::zeros(d, cols);
    for i in 0..d {
        let mut v = vec![T::zero(); d];
        v[i] = T::one();
        let contracted = omega.interior(&v).expect("basis contraction");
        for (c, &coeff) in contracted.coeffs().iter().enumerate() {
            mat[(i, c)] = coeff.to_f64().unwrap_or(f64::NAN);
        }
    }
    matrix_rank(&mat)
}

/// Residual of the pairing equation ι_Xω − (−1)^{k+1} dH at x, a form of
/// degree n+1−k.
pub fn hdw_residual_pair<T: Scalar>(
    m: &NPlecticManifold<T>,
    h: &HamiltonianForm<T>,
    x_mv: &MultiVector<T>,
    x: &[T],
    cfg: &DiffConfig<T>,
) -> Result<AlternatingForm<T>> {
    let k = x_mv.degree();
    if h.source_degree(m)? != k {
        return Err(Error::DegreeMismatch {
            msg: format!(
                "multivector degree {k} does not pair with a degree-{} Hamiltonian form on a {}-plectic manifold",
                h.field.degree, m.degree
            ),
        });
    }
    let contraction = m.omega.at(x).contract(x_mv)?;
    let dh = exterior_derivative(&h.field, x, cfg)?;
    contraction.sub(&dh.scaled(pair_sign::<T>(k)))
}

/// Residual of the dynamical equation ι_{ψ_*γ}ω − (−1)^{k+1}(dH)_{ψ(x)}
/// for a map ψ from a k-dimensional source carrying a co-volume γ.
pub fn dynamical_hdw_residual<T: Scalar>(
    m: &NPlecticManifold<T>,
    h: &HamiltonianForm<T>,
    psi: &SmoothMap<T>,
    gamma: &CoVolume<T>,
    x: &[T],
    cfg: &DiffConfig<T>,
) -> Result<AlternatingForm<T>> {
    let k = gamma.degree;
    if h.source_degree(m)? != k {
        return Err(Error::DegreeMismatch {
            msg: format!(
                "source dimension {k} does not pair with a degree-{} Hamiltonian form on a {}-plectic manifold",
                h.field.degree, m.degree
            ),
        });
    }
    gamma.source.require_clearance(x, &cfg.steps(x))?;
    let pushed = pushforward_multivector(psi, &gamma.at(x), x, cfg)?;
    let y = psi.eval(x);
    let contraction = m.omega.at(&y).contract(&pushed)?;
    let dh = exterior_derivative(&h.field, &y, cfg)?;
    contraction.sub(&dh.scaled(pair_sign::<T>(k)))
}

/// For k = 1 and dH of degree n: solve ι_Xω = (−1)² dH for the vector X.
/// Fails when the contraction map is singular (degenerate ω).
pub fn solve_hdw_vector<T: Scalar>(
    m: &NPlecticManifold<T>,
    h: &HamiltonianForm<T>,
    x: &[T],
    cfg: &DiffConfig<T>,
) -> Result<Vec<T>> {
    if h.source_degree(m)? != 1 {
        return Err(Error::DegreeMismatch {
            msg: "vector solve needs a source degree of 1".into(),
        });
    }
    let d = m.dim();
    let omega = m.omega.at(x);
    let cols = binomial(d, m.degree);
    let mut mat = DMatrix::<f64>::zeros(cols, d);
    for i in 0..d {
        let mut v = vec![T::zero(); d];
        v[i] = T::one();
        let contracted = omega.interior(&v)?;
        for (r, &coeff) in contracted.coeffs().iter().enumerate() {
            mat[(r, i)] = coeff.to_f64().unwrap_or(f64::NAN);
        }
    }
    let dh = exterior_derivative(&h.field, x, cfg)?.scaled(pair_sign::<T>(1));
    let rhs = DMatrix::<f64>::from_iterator(
        cols,
        1,
        dh.coeffs().iter().map(|c| c.to_f64().unwrap_or(f64::NAN)),
    );
    let svd = mat.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > RANK_RTOL * max_sv)
        .count();
    if rank < d {
        return Err(Error::InvalidArgument(
            "contraction map is singular; the pairing vector is not unique".into(),
        ));
    }
    let sol = svd
        .solve(&rhs, RANK_RTOL * max_sv)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(sol.iter().map(|&v| T::of(v)).collect())
}

/// Degeneracy report at a point: does dH vanish, and how large is the
/// kernel of X ↦ ι_Xω among degree-k multivectors.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DegeneracyScan {
    pub dh_max: f64,
    pub dh_vanishes: bool,
    pub kernel_dim: usize,
}

pub fn degeneracy_scan<T: Scalar>(
    m: &NPlecticManifold<T>,
    h: &HamiltonianForm<T>,
    x: &[T],
    cfg: &DiffConfig<T>,
) -> Result<DegeneracyScan> {
    let k = h.source_degree(m)?;
    let dh = exterior_derivative(&h.field, x, cfg)?;
    let dh_max = dh.max_abs().to_f64().unwrap_or(f64::NAN);
    let d = m.dim();
    let omega = m.omega.at(x);
    let rows = binomial(d, k);
    let cols = binomial(d, m.degree + 1 - k);
    let mut mat = DMatrix::<f64>::zeros(rows, cols);
    for (r, mi) in MultiIndex::enumerate(d, k).iter().enumerate() {
        let basis = MultiVector::<T>::basis(d, mi.indices())?;
        let contracted = omega.contract(&basis)?;
        for (c, &coeff) in contracted.coeffs().iter().enumerate() {
            mat[(r, c)] = coeff.to_f64().unwrap_or(f64::NAN);
        }
    }
    let kernel_dim = rows - matrix_rank(&mat);
    Ok(DegeneracyScan {
        dh_max,
        dh_vanishes: dh_max < 1e-10,
        kernel_dim,
    })
}

fn pair_sign<T: Scalar>(k: usize) -> T {
    if k.is_multiple_of(2) {
        -T::one()
    } else {
        T::one()
    }
}

fn matrix_rank(mat: &DMatrix<f64>) -> usize {
    let svd = mat.clone().svd(false, false);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    if max_sv == 0.0 {
        return 0;
    }
    svd.singular_values
        .iter()
        .filter(|&&s| s > RANK_RTOL * max_sv)
        .count()
}
