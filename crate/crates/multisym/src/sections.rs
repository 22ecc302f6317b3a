//! Candidate solutions: sections of τ: P(π) → U given either by closures or
//! by values on a uniform rectangular grid, plus compactly supported
//! variations of them.

use std::sync::Arc;

use crate::bundle::BundleShape;
use crate::charts::{ChartedDomain, DiffConfig};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A scalar component function of the base coordinates.
pub type ScalarField<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;

/// A component function returning all n base partials at once.
pub type GradientField<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;

/// A borrowed per-node sampling function for grid construction.
pub type NodeSampler<'a, T> = &'a dyn Fn(&[T]) -> T;

fn require_contained<T: Scalar>(domain: &ChartedDomain<T>, x: &[T]) -> Result<()> {
    if domain.contains(x) {
        return Ok(());
    }
    let axis = x
        .iter()
        .zip(domain.bounds())
        .position(|(&xi, &(lo, hi))| xi < lo || xi > hi)
        .unwrap_or(0);
    Err(Error::OutOfDomain { axis })
}

/// Common interface of analytic and grid-backed sections: the point
/// ψ̃(x) ∈ P(π) over x and the Jacobian of ψ̃ (dim P(π) rows, n columns).
pub trait SectionLike<T: Scalar> {
    fn shape(&self) -> &BundleShape;
    fn domain(&self) -> &ChartedDomain<T>;
    fn value(&self, x: &[T]) -> Result<Vec<T>>;
    fn jacobian(&self, x: &[T], cfg: &DiffConfig<T>) -> Result<Vec<Vec<T>>>;
}

/// A section given by closures qᵃ(x) and p^μ_a(x), with optional analytic
/// base partials (each gradient closure returns the n partials in order).
pub struct AnalyticSection<T> {
    shape: BundleShape,
    domain: ChartedDomain<T>,
    q: Vec<ScalarField<T>>,
    pmom: Vec<ScalarField<T>>,
    q_grad: Option<Vec<GradientField<T>>>,
    p_grad: Option<Vec<GradientField<T>>>,
}

impl<T: Scalar> AnalyticSection<T> {
    pub fn new(
        shape: BundleShape,
        domain: ChartedDomain<T>,
        q: Vec<ScalarField<T>>,
        pmom: Vec<ScalarField<T>>,
    ) -> Result<Self> {
        if domain.dim() != shape.n {
            return Err(Error::DimensionMismatch {
                expected: shape.n,
                got: domain.dim(),
            });
        }
        if q.len() != shape.fibre {
            return Err(Error::DimensionMismatch {
                expected: shape.fibre,
                got: q.len(),
            });
        }
        if pmom.len() != shape.fibre * shape.n {
            return Err(Error::DimensionMismatch {
                expected: shape.fibre * shape.n,
                got: pmom.len(),
            });
        }
        Ok(Self {
            shape,
            domain,
            q,
            pmom,
            q_grad: None,
            p_grad: None,
        })
    }

    /// Attach analytic base partials (q gradients a-indexed, momentum
    /// gradients a-major like the momentum components themselves).
    pub fn with_gradients(
        mut self,
        q_grad: Vec<GradientField<T>>,
        p_grad: Vec<GradientField<T>>,
    ) -> Result<Self> {
        if q_grad.len() != self.shape.fibre || p_grad.len() != self.shape.fibre * self.shape.n {
            return Err(Error::DimensionMismatch {
                expected: self.shape.fibre + self.shape.fibre * self.shape.n,
                got: q_grad.len() + p_grad.len(),
            });
        }
        self.q_grad = Some(q_grad);
        self.p_grad = Some(p_grad);
        Ok(self)
    }

    pub fn has_analytic_partials(&self) -> bool {
        self.q_grad.is_some()
    }
}

impl<T: Scalar> SectionLike<T> for AnalyticSection<T> {
    fn shape(&self) -> &BundleShape {
        &self.shape
    }

    fn domain(&self) -> &ChartedDomain<T> {
        &self.domain
    }

    fn value(&self, x: &[T]) -> Result<Vec<T>> {
        require_contained(&self.domain, x)?;
        let mut z = x.to_vec();
        for f in &self.q {
            z.push(f(x));
        }
        for f in &self.pmom {
            z.push(f(x));
        }
        Ok(z)
    }

    fn jacobian(&self, x: &[T], cfg: &DiffConfig<T>) -> Result<Vec<Vec<T>>> {
        let n = self.shape.n;
        let mut rows: Vec<Vec<T>> = Vec::with_capacity(self.shape.dim_p());
        for mu in 0..n {
            let mut row = vec![T::zero(); n];
            row[mu] = T::one();
            rows.push(row);
        }
        if let (Some(qg), Some(pg)) = (&self.q_grad, &self.p_grad) {
            require_contained(&self.domain, x)?;
            for g in qg {
                rows.push(g(x));
            }
            for g in pg {
                rows.push(g(x));
            }
        } else {
            self.domain.require_clearance(x, &cfg.steps(x))?;
            for f in &self.q {
                rows.push((0..n).map(|nu| cfg.partial(&|y| f(y), x, nu)).collect());
            }
            for f in &self.pmom {
                rows.push((0..n).map(|nu| cfg.partial(&|y| f(y), x, nu)).collect());
            }
        }
        Ok(rows)
    }
}

/// A section sampled on a uniform rectangular grid. Base partials come from
/// second-order stencils on the stored values (central in the interior,
/// one-sided at the boundary); off-node queries interpolate multilinearly.
pub struct DiscreteSection<T> {
    shape: BundleShape,
    domain: ChartedDomain<T>,
    nodes: Vec<usize>,
    strides: Vec<usize>,
    comps: Vec<Vec<T>>,
}

impl<T: Scalar> DiscreteSection<T> {
    pub fn new(
        shape: BundleShape,
        domain: ChartedDomain<T>,
        nodes: Vec<usize>,
        comps: Vec<Vec<T>>,
    ) -> Result<Self> {
        if domain.dim() != shape.n || nodes.len() != shape.n {
            return Err(Error::DimensionMismatch {
                expected: shape.n,
                got: nodes.len(),
            });
        }
        if nodes.iter().any(|&m| m < 5) {
            return Err(Error::InvalidArgument(
                "grids need at least 5 nodes per axis".into(),
            ));
        }
        let total: usize = nodes.iter().product();
        if comps.len() != shape.fibre * (1 + shape.n) || comps.iter().any(|c| c.len() != total) {
            return Err(Error::DimensionMismatch {
                expected: shape.fibre * (1 + shape.n),
                got: comps.len(),
            });
        }
        let mut strides = vec![1usize; nodes.len()];
        for axis in (0..nodes.len().saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * nodes[axis + 1];
        }
        Ok(Self {
            shape,
            domain,
            nodes,
            strides,
            comps,
        })
    }

    /// Sample closures onto the grid (q components first, then momenta
    /// a-major, matching the fibre coordinate order).
    pub fn from_fns(
        shape: BundleShape,
        domain: ChartedDomain<T>,
        nodes: Vec<usize>,
        fns: &[NodeSampler<'_, T>],
    ) -> Result<Self> {
        let total: usize = nodes.iter().product();
        let mut comps = vec![vec![T::zero(); total]; fns.len()];
        let dummy = Self::new(shape, domain.clone(), nodes.clone(), {
            // temporary zero grids just to reuse the index arithmetic
            vec![vec![T::zero(); total]; shape.fibre * (1 + shape.n)]
        })?;
        for flat in 0..total {
            let x = dummy.node_point(&dummy.unflatten(flat));
            for (comp, f) in comps.iter_mut().zip(fns) {
                comp[flat] = f(&x);
            }
        }
        Self::new(shape, domain, nodes, comps)
    }

    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn spacing(&self, axis: usize) -> T {
        let (lo, hi) = self.domain.bounds()[axis];
        (hi - lo) / T::of((self.nodes[axis] - 1) as f64)
    }

    pub fn node_point(&self, idx: &[usize]) -> Vec<T> {
        idx.iter()
            .enumerate()
            .map(|(axis, &i)| self.domain.bounds()[axis].0 + T::of(i as f64) * self.spacing(axis))
            .collect()
    }

    fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(&i, &s)| i * s).sum()
    }

    fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        self.strides
            .iter()
            .map(|&stride| {
                let i = flat / stride;
                flat %= stride;
                i
            })
            .collect()
    }

    /// Fibre-component value at a grid node (components ordered q then p).
    pub fn component_at(&self, comp: usize, idx: &[usize]) -> T {
        self.comps[comp][self.flatten(idx)]
    }

    pub fn set_component_at(&mut self, comp: usize, idx: &[usize], v: T) {
        let flat = self.flatten(idx);
        self.comps[comp][flat] = v;
    }

    /// Multi-indices of all nodes with at least `margin` nodes of clearance
    /// from every face.
    pub fn interior_nodes(&self, margin: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let total: usize = self.nodes.iter().product();
        for flat in 0..total {
            let idx = self.unflatten(flat);
            if idx
                .iter()
                .zip(&self.nodes)
                .all(|(&i, &m)| i >= margin && i + margin < m)
            {
                out.push(idx);
            }
        }
        out
    }

    /// Second-order partials of one component at a node: central in the
    /// interior, one-sided (-3f₀+4f₁-f₂)/(2h) at the two boundary layers.
    fn node_partials(&self, comp: usize, idx: &[usize]) -> Vec<T> {
        let two = T::of(2.0);
        (0..self.shape.n)
            .map(|axis| {
                let h = self.spacing(axis);
                let m = self.nodes[axis];
                let at = |i: usize| {
                    let mut j = idx.to_vec();
                    j[axis] = i;
                    self.component_at(comp, &j)
                };
                let i = idx[axis];
                if i == 0 {
                    (-T::of(3.0) * at(0) + T::of(4.0) * at(1) - at(2)) / (two * h)
                } else if i + 1 == m {
                    (T::of(3.0) * at(i) - T::of(4.0) * at(i - 1) + at(i - 2)) / (two * h)
                } else {
                    (at(i + 1) - at(i - 1)) / (two * h)
                }
            })
            .collect()
    }

    /// Locate the cell containing x: per-axis lower corner index and the
    /// normalized offset in [0, 1].
    fn cell_of(&self, x: &[T]) -> Result<Vec<(usize, T)>> {
        require_contained(&self.domain, x)?;
        Ok(x.iter()
            .enumerate()
            .map(|(axis, &xi)| {
                let (lo, _) = self.domain.bounds()[axis];
                let t = (xi - lo) / self.spacing(axis);
                let max_cell = self.nodes[axis] - 2;
                let i0 = t.floor().to_f64().unwrap_or(0.0).max(0.0) as usize;
                let i0 = i0.min(max_cell);
                (i0, t - T::of(i0 as f64))
            })
            .collect())
    }

    /// Multilinear interpolation of per-node data supplied by `at_node`.
    fn interpolate(
        &self,
        cell: &[(usize, T)],
        at_node: &mut dyn FnMut(&[usize]) -> Vec<T>,
        width: usize,
    ) -> Vec<T> {
        let n = cell.len();
        let mut acc = vec![T::zero(); width];
        for corner in 0..(1usize << n) {
            let mut w = T::one();
            let mut idx = Vec::with_capacity(n);
            for (axis, &(i0, t)) in cell.iter().enumerate() {
                if corner >> axis & 1 == 1 {
                    w *= t;
                    idx.push(i0 + 1);
                } else {
                    w *= T::one() - t;
                    idx.push(i0);
                }
            }
            if w == T::zero() {
                continue;
            }
            for (a, v) in at_node(&idx).into_iter().enumerate() {
                acc[a] += w * v;
            }
        }
        acc
    }
}

impl<T: Scalar> SectionLike<T> for DiscreteSection<T> {
    fn shape(&self) -> &BundleShape {
        &self.shape
    }

    fn domain(&self) -> &ChartedDomain<T> {
        &self.domain
    }

    fn value(&self, x: &[T]) -> Result<Vec<T>> {
        let cell = self.cell_of(x)?;
        let n_comp = self.comps.len();
        let fibre = self.interpolate(
            &cell,
            &mut |idx| (0..n_comp).map(|c| self.component_at(c, idx)).collect(),
            n_comp,
        );
        let mut z = x.to_vec();
        z.extend(fibre);
        Ok(z)
    }

    fn jacobian(&self, x: &[T], _cfg: &DiffConfig<T>) -> Result<Vec<Vec<T>>> {
        let n = self.shape.n;
        let cell = self.cell_of(x)?;
        let n_comp = self.comps.len();
        let flat = self.interpolate(
            &cell,
            &mut |idx| {
                (0..n_comp)
                    .flat_map(|c| self.node_partials(c, idx))
                    .collect()
            },
            n_comp * n,
        );
        let mut rows: Vec<Vec<T>> = Vec::with_capacity(self.shape.dim_p());
        for mu in 0..n {
            let mut row = vec![T::zero(); n];
            row[mu] = T::one();
            rows.push(row);
        }
        for c in 0..n_comp {
            rows.push(flat[c * n..(c + 1) * n].to_vec());
        }
        Ok(rows)
    }
}

/// A vertical variation field: fibre components (uᵃ, v^μ_a) supported in a
/// declared sub-box.
pub struct Variation<T> {
    shape: BundleShape,
    support: ChartedDomain<T>,
    u: Vec<ScalarField<T>>,
    v: Vec<ScalarField<T>>,
}

impl<T: Scalar> Variation<T> {
    pub fn new(
        shape: BundleShape,
        support: ChartedDomain<T>,
        u: Vec<ScalarField<T>>,
        v: Vec<ScalarField<T>>,
    ) -> Result<Self> {
        if support.dim() != shape.n || u.len() != shape.fibre || v.len() != shape.fibre * shape.n {
            return Err(Error::DimensionMismatch {
                expected: shape.fibre * (1 + shape.n),
                got: u.len() + v.len(),
            });
        }
        Ok(Self {
            shape,
            support,
            u,
            v,
        })
    }

    pub fn zero(shape: BundleShape, support: ChartedDomain<T>) -> Result<Self> {
        let zero: ScalarField<T> = Arc::new(|_: &[T]| T::zero());
        let u = vec![zero.clone(); shape.fibre];
        let v = vec![zero; shape.fibre * shape.n];
        Self::new(shape, support, u, v)
    }

    pub fn support(&self) -> &ChartedDomain<T> {
        &self.support
    }

    /// Fibre components at x, ordered like the fibre coordinates (q then p).
    pub fn components(&self, x: &[T]) -> Vec<T> {
        if !self.support.contains(x) {
            return vec![T::zero(); self.u.len() + self.v.len()];
        }
        self.u.iter().chain(&self.v).map(|f| f(x)).collect()
    }

    /// The vertical tangent vector at ψ̃(x) (zero on the base slots).
    pub fn vertical_vector(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.shape.dim_p()];
        for (slot, c) in self.components(x).into_iter().enumerate() {
            out[self.shape.n + slot] = c;
        }
        out
    }

    /// Base partials of all components (rows: components, cols: axes).
    pub fn jacobian(&self, x: &[T], cfg: &DiffConfig<T>) -> Vec<Vec<T>> {
        let n = self.shape.n;
        (0..self.u.len() + self.v.len())
            .map(|c| {
                (0..n)
                    .map(|nu| cfg.partial(&|y: &[T]| self.components(y)[c], x, nu))
                    .collect()
            })
            .collect()
    }

    /// Check that the support box sits strictly inside `outer` and that the
    /// components vanish on a sampled margin between the two boxes.
    pub fn check_compact_support(
        &self,
        outer: &ChartedDomain<T>,
        samples: usize,
        seed: u64,
    ) -> Result<()> {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;

        if !outer.compactly_contains(&self.support, T::of(1e-12)) {
            return Err(Error::UnsupportedVariation);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tol = T::of(1e-12);
        let mut checked = 0usize;
        while checked < samples {
            let x: Vec<T> = outer
                .bounds()
                .iter()
                .map(|&(lo, hi)| lo + (hi - lo) * T::of(rng.gen::<f64>()))
                .collect();
            if self.support.contains(&x) {
                continue;
            }
            checked += 1;
            // outside the declared support every component must vanish
            if self.u.iter().chain(&self.v).any(|f| f(&x).abs() > tol) {
                return Err(Error::UnsupportedVariation);
            }
        }
        Ok(())
    }
}

/// A product polynomial bump ((1-s²)⁴ per axis) supported on the given box;
/// its one-dimensional integral over the support is width·128/315.
pub fn bump_field<T: Scalar>(support: Vec<(T, T)>) -> ScalarField<T> {
    Arc::new(move |x: &[T]| {
        let mut out = T::one();
        for (xi, &(lo, hi)) in x.iter().zip(&support) {
            let two = T::of(2.0);
            let s = (two * *xi - lo - hi) / (hi - lo);
            let w = T::one() - s * s;
            if w <= T::zero() {
                return T::zero();
            }
            out *= w * w * w * w;
        }
        out
    })
}

/// A section shifted by t times a variation, for differentiating the action.
pub struct PerturbedSection<'a, T: Scalar> {
    pub base: &'a dyn SectionLike<T>,
    pub variation: &'a Variation<T>,
    pub t: T,
}

impl<T: Scalar> SectionLike<T> for PerturbedSection<'_, T> {
    fn shape(&self) -> &BundleShape {
        self.base.shape()
    }

    fn domain(&self) -> &ChartedDomain<T> {
        self.base.domain()
    }

    fn value(&self, x: &[T]) -> Result<Vec<T>> {
        let mut z = self.base.value(x)?;
        let n = self.shape().n;
        for (slot, c) in self.variation.components(x).into_iter().enumerate() {
            z[n + slot] += self.t * c;
        }
        Ok(z)
    }

    fn jacobian(&self, x: &[T], cfg: &DiffConfig<T>) -> Result<Vec<Vec<T>>> {
        let mut jac = self.base.jacobian(x, cfg)?;
        let n = self.shape().n;
        for (slot, row) in self.variation.jacobian(x, cfg).into_iter().enumerate() {
            for (nu, d) in row.into_iter().enumerate() {
                jac[n + slot][nu] += self.t * d;
            }
        }
        Ok(jac)
    }
}
