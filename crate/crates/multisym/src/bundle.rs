//! Coordinate model of the restricted multicotangent bundle M(π) and its
//! quotient P(π) in a standard chart adapted to the base volume, together
//! with the canonical structures Θ, ω, ω_h, H, Z and χ.
//!
//! Coordinate layout on M(π): (x^1..x^n, q^1..q^N, p^μ_a a-major, p), so
//! dim P(π) = n + N + nN and dim M(π) = n + N + nN + 1. The chart is assumed
//! adapted, i.e. the base volume is d^n x throughout a run.

use crate::alternating::{AlternatingForm, MultiVector};
use crate::charts::{DiffConfig, SmoothMap};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dimensions of the bundle π: E → Σ and the derived coordinate layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BundleShape {
    /// dim Σ
    pub n: usize,
    /// dim Q (fibre dimension), written N in the standard chart
    pub fibre: usize,
}

impl BundleShape {
    pub fn new(n: usize, fibre: usize) -> Result<Self> {
        if n < 1 || fibre < 1 {
            return Err(Error::Config(format!(
                "bundle shape requires n >= 1 and N >= 1, got ({n}, {fibre})"
            )));
        }
        Ok(Self { n, fibre })
    }

    /// dim P(π) = n + N + nN
    pub fn dim_p(&self) -> usize {
        self.n + self.fibre + self.n * self.fibre
    }

    /// dim M(π) = n + N + nN + 1
    pub fn dim_m(&self) -> usize {
        self.dim_p() + 1
    }

    pub fn x_index(&self, mu: usize) -> usize {
        debug_assert!(mu < self.n);
        mu
    }

    pub fn q_index(&self, a: usize) -> usize {
        debug_assert!(a < self.fibre);
        self.n + a
    }

    /// Flat slot of p^μ_a, a-major: momenta of one field component are contiguous.
    pub fn momentum_index(&self, a: usize, mu: usize) -> usize {
        debug_assert!(a < self.fibre && mu < self.n);
        self.n + self.fibre + a * self.n + mu
    }

    /// Inverse of [`Self::momentum_index`].
    pub fn momentum_of_index(&self, idx: usize) -> Option<(usize, usize)> {
        let base = self.n + self.fibre;
        if idx < base || idx >= base + self.n * self.fibre {
            return None;
        }
        let off = idx - base;
        Some((off / self.n, off % self.n))
    }

    /// Slot of the fibre coordinate p on M(π).
    pub fn p_index(&self) -> usize {
        self.dim_m() - 1
    }

    /// ASCII coordinate name, matching the CLI expression language.
    pub fn coordinate_name(&self, idx: usize, on_m: bool) -> String {
        if idx < self.n {
            format!("x{}", idx + 1)
        } else if idx < self.n + self.fibre {
            format!("q{}", idx - self.n + 1)
        } else if let Some((a, mu)) = self.momentum_of_index(idx) {
            format!("p{}_{}", a + 1, mu + 1)
        } else if on_m && idx == self.p_index() {
            "p".to_string()
        } else {
            panic!("coordinate index {idx} out of range");
        }
    }

    /// Spanning vertical basis on M(π): ∂/∂q^a, ∂/∂p^μ_a, ∂/∂p.
    pub fn vertical_basis_m<T: Scalar>(&self) -> Vec<Vec<T>> {
        let d = self.dim_m();
        (self.n..d)
            .map(|i| {
                let mut v = vec![T::zero(); d];
                v[i] = T::one();
                v
            })
            .collect()
    }

    /// Spanning τ-vertical basis on P(π): ∂/∂q^a, ∂/∂p^μ_a.
    pub fn vertical_basis_p<T: Scalar>(&self) -> Vec<Vec<T>> {
        let d = self.dim_p();
        (self.n..d)
            .map(|i| {
                let mut v = vec![T::zero(); d];
                v[i] = T::one();
                v
            })
            .collect()
    }

    /// ρ: M(π) → P(π), a coordinate truncation in the adapted chart.
    pub fn project_rho<T: Scalar>(&self, eta: &[T]) -> Vec<T> {
        eta[..self.dim_p()].to_vec()
    }
}

/// The local Hamilton–Volterra function 𝓗 on P(π) coordinates, with
/// optional analytic first partials.
#[derive(Clone)]
pub struct HamiltonVolterraFunction<T> {
    pub shape: BundleShape,
    value: crate::sections::ScalarField<T>,
    gradient: Option<crate::sections::GradientField<T>>,
}

impl<T: Scalar> HamiltonVolterraFunction<T> {
    pub fn new(shape: BundleShape, value: impl Fn(&[T]) -> T + Send + Sync + 'static) -> Self {
        Self {
            shape,
            value: std::sync::Arc::new(value),
            gradient: None,
        }
    }

    /// Attach the analytic gradient over all dim P(π) coordinates
    /// (x^μ first, then q^a, then p^μ_a a-major).
    pub fn with_gradient(mut self, grad: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static) -> Self {
        self.gradient = Some(std::sync::Arc::new(grad));
        self
    }

    pub fn value(&self, z: &[T]) -> T {
        (self.value)(z)
    }

    pub fn has_analytic_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn gradient(&self, z: &[T], cfg: &DiffConfig<T>) -> Vec<T> {
        if let Some(g) = &self.gradient {
            return g(z);
        }
        let value = self.value.clone();
        (0..self.shape.dim_p())
            .map(|i| cfg.partial(&|y| (value)(y), z, i))
            .collect()
    }

    /// The Hamiltonian section h: P(π) → M(π), p-component −𝓗.
    pub fn section_map(&self, cfg: DiffConfig<T>) -> SmoothMap<T> {
        let dim_p = self.shape.dim_p();
        let value = self.value.clone();
        let this = self.clone();
        let map_value = move |z: &[T]| {
            let mut out = z.to_vec();
            out.push(-(value)(z));
            out
        };
        let jac = move |z: &[T]| {
            let mut rows: Vec<Vec<T>> = (0..dim_p)
                .map(|r| {
                    (0..dim_p)
                        .map(|c| if r == c { T::one() } else { T::zero() })
                        .collect()
                })
                .collect();
            rows.push(this.gradient(z, &cfg).into_iter().map(|v| -v).collect());
            rows
        };
        SmoothMap::new(dim_p, dim_p + 1, map_value).with_jacobian(jac)
    }
}

/// The Liouville form Θ at η: Θ = p d^n x + Σ p^μ_a dq^a ∧ d^{n−1}x̂^μ,
/// an n-form over the dim M(π)-dimensional tangent space.
pub fn liouville_form<T: Scalar>(shape: &BundleShape, eta: &[T]) -> AlternatingForm<T> {
    let d = shape.dim_m();
    let n = shape.n;
    let vol: AlternatingForm<T> =
        AlternatingForm::basis(d, &(0..n).collect::<Vec<_>>()).expect("volume index");
    let mut theta = vol.scaled(eta[shape.p_index()]);
    for a in 0..shape.fibre {
        let dq = AlternatingForm::basis(d, &[shape.q_index(a)]).unwrap();
        for mu in 0..n {
            let mut e_mu = vec![T::zero(); d];
            e_mu[mu] = T::one();
            let hat = vol.interior(&e_mu).unwrap();
            let term = dq
                .wedge(&hat)
                .unwrap()
                .scaled(eta[shape.momentum_index(a, mu)]);
            theta = theta.add(&term).unwrap();
        }
    }
    theta
}

/// The canonical multisymplectic form ω = −dΘ in closed coordinate form:
/// ω = −dp ∧ d^n x − Σ dp^μ_a ∧ dq^a ∧ d^{n−1}x̂^μ. Constant over M(π).
pub fn omega_coordinate<T: Scalar>(shape: &BundleShape) -> AlternatingForm<T> {
    let d = shape.dim_m();
    let n = shape.n;
    let vol: AlternatingForm<T> =
        AlternatingForm::basis(d, &(0..n).collect::<Vec<_>>()).expect("volume index");
    let dp = AlternatingForm::basis(d, &[shape.p_index()]).unwrap();
    let mut omega = dp.wedge(&vol).unwrap().scaled(-T::one());
    for a in 0..shape.fibre {
        let dq = AlternatingForm::basis(d, &[shape.q_index(a)]).unwrap();
        for mu in 0..n {
            let mut e_mu = vec![T::zero(); d];
            e_mu[mu] = T::one();
            let hat = vol.interior(&e_mu).unwrap();
            let dpm = AlternatingForm::basis(d, &[shape.momentum_index(a, mu)]).unwrap();
            let term = dpm.wedge(&dq).unwrap().wedge(&hat).unwrap();
            omega = omega.sub(&term).unwrap();
        }
    }
    omega
}

/// ω_h = d𝓗 ∧ d^n x − Σ dp^μ_a ∧ dq^a ∧ d^{n−1}x̂^μ at z ∈ P(π), an
/// (n+1)-form over the dim P(π)-dimensional tangent space.
pub fn omega_h<T: Scalar>(
    shape: &BundleShape,
    hv: &HamiltonVolterraFunction<T>,
    z: &[T],
    cfg: &DiffConfig<T>,
) -> AlternatingForm<T> {
    let d = shape.dim_p();
    let n = shape.n;
    let vol: AlternatingForm<T> =
        AlternatingForm::basis(d, &(0..n).collect::<Vec<_>>()).expect("volume index");
    let grad = hv.gradient(z, cfg);
    let mut dh = AlternatingForm::zero(d, 1);
    for (i, g) in grad.into_iter().enumerate() {
        dh.set_coeff(&[i], g);
    }
    let mut omega = dh.wedge(&vol).unwrap();
    for a in 0..shape.fibre {
        let dq = AlternatingForm::basis(d, &[shape.q_index(a)]).unwrap();
        for mu in 0..n {
            let mut e_mu = vec![T::zero(); d];
            e_mu[mu] = T::one();
            let hat = vol.interior(&e_mu).unwrap();
            let dpm = AlternatingForm::basis(d, &[shape.momentum_index(a, mu)]).unwrap();
            let term = dpm.wedge(&dq).unwrap().wedge(&hat).unwrap();
            omega = omega.sub(&term).unwrap();
        }
    }
    omega
}

/// The Θ_h = h^*Θ coordinate formula at z ∈ P(π):
/// Θ_h = −𝓗 d^n x + Σ p^μ_a dq^a ∧ d^{n−1}x̂^μ.
pub fn theta_h<T: Scalar>(
    shape: &BundleShape,
    hv: &HamiltonVolterraFunction<T>,
    z: &[T],
) -> AlternatingForm<T> {
    let d = shape.dim_p();
    let n = shape.n;
    let vol: AlternatingForm<T> =
        AlternatingForm::basis(d, &(0..n).collect::<Vec<_>>()).expect("volume index");
    let mut theta = vol.scaled(-hv.value(z));
    for a in 0..shape.fibre {
        let dq = AlternatingForm::basis(d, &[shape.q_index(a)]).unwrap();
        for mu in 0..n {
            let mut e_mu = vec![T::zero(); d];
            e_mu[mu] = T::one();
            let hat = vol.interior(&e_mu).unwrap();
            let term = dq
                .wedge(&hat)
                .unwrap()
                .scaled(z[shape.momentum_index(a, mu)]);
            theta = theta.add(&term).unwrap();
        }
    }
    theta
}

/// The Hamiltonian function H = 𝓗 + p on M(π).
pub fn hamiltonian_function<T: Scalar>(hv: &HamiltonVolterraFunction<T>, eta: &[T]) -> T {
    let shape = hv.shape;
    hv.value(&shape.project_rho(eta)) + eta[shape.p_index()]
}

/// Z-derivative of a scalar field on M(π): ∂f/∂p in the adapted chart,
/// where Z is the constant coordinate field ∂/∂p.
pub fn z_derivative<T: Scalar>(
    shape: &BundleShape,
    f: &dyn Fn(&[T]) -> T,
    eta: &[T],
    cfg: &DiffConfig<T>,
) -> T {
    cfg.partial(f, eta, shape.p_index())
}

/// Recover the Hamiltonian section value over z from a function with
/// Z(H) = 1: the unique point of {H = 0} in the fibre over z.
pub fn section_from_function<T: Scalar>(
    shape: &BundleShape,
    h_fn: &dyn Fn(&[T]) -> T,
    z: &[T],
    cfg: &DiffConfig<T>,
) -> Result<Vec<T>> {
    let mut eta0 = z.to_vec();
    eta0.push(T::zero());
    let zh = z_derivative(shape, h_fn, &eta0, cfg);
    let tol = T::of(1e-6);
    if (zh - T::one()).abs() > tol {
        return Err(Error::NotAdmissible {
            value: zh.to_f64().unwrap_or(f64::NAN),
        });
    }
    // Z-flow shifts H affinely, so the fibre solve is exact:
    let p0 = -h_fn(&eta0);
    let mut eta = z.to_vec();
    eta.push(p0);
    Ok(eta)
}

/// The canonical trivialization χ(z, u) = h(z) + u ∂/∂p: p-component −𝓗(z) + u.
pub fn chi<T: Scalar>(hv: &HamiltonVolterraFunction<T>, z: &[T], u: T) -> Vec<T> {
    let mut eta = z.to_vec();
    eta.push(-hv.value(z) + u);
    eta
}

/// The co-volume n-vector γ = ∂/∂x^1 ∧ … ∧ ∂/∂x^n on the adapted chart,
/// embedded in a tangent space of the given dimension.
pub fn co_volume<T: Scalar>(n: usize, dim: usize) -> MultiVector<T> {
    MultiVector::basis(dim, &(0..n).collect::<Vec<_>>()).expect("co-volume index")
}
