//! Desk-scale producers of candidate sections: a classical RK4 integrator
//! for one-dimensional bases, an SOR solver for the two-dimensional Laplace
//! problem, and a catalog of worked examples feeding the residual suites.

use std::sync::Arc;

use crate::bundle::{BundleShape, HamiltonVolterraFunction};
use crate::charts::{ChartedDomain, DiffConfig};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sections::{AnalyticSection, DiscreteSection, GradientField, ScalarField};

/// Integrate the canonical equations q̇ᵃ = ∂𝓗/∂p_a, ṗ_a = −∂𝓗/∂qᵃ with
/// classical RK4 over the given base interval. The step is shrunk slightly
/// if needed so the interval splits into whole steps. State accumulation is
/// compensated (Kahan) so the O(step⁴) truncation order stays visible at
/// desk-scale steps.
pub fn solve_ode<T: Scalar>(
    hv: &HamiltonVolterraFunction<T>,
    q0: &[T],
    p0: &[T],
    interval: (T, T),
    step: T,
) -> Result<DiscreteSection<T>> {
    let shape = hv.shape;
    if shape.n != 1 {
        return Err(Error::InvalidArgument(
            "the ODE solver needs a 1-dimensional base".into(),
        ));
    }
    if step <= T::zero() {
        return Err(Error::InvalidArgument("step must be positive".into()));
    }
    if q0.len() != shape.fibre || p0.len() != shape.fibre {
        return Err(Error::DimensionMismatch {
            expected: shape.fibre,
            got: q0.len(),
        });
    }
    let (lo, hi) = interval;
    if hi <= lo {
        return Err(Error::InvalidArgument("empty base interval".into()));
    }
    let span = hi - lo;
    let steps = (span / step).ceil().to_f64().unwrap_or(0.0).max(4.0) as usize;
    let h = span / T::of(steps as f64);
    let cfg = DiffConfig::default();
    let nf = shape.fibre;

    // state y = (q₁..q_N, p₁..p_N) with Kahan compensation per slot
    let mut y: Vec<T> = q0.iter().chain(p0).copied().collect();
    let mut comp = vec![T::zero(); 2 * nf];
    let deriv = |x: T, y: &[T]| -> Vec<T> {
        let mut z = Vec::with_capacity(shape.dim_p());
        z.push(x);
        z.extend_from_slice(y);
        let grad = hv.gradient(&z, &cfg);
        let mut dy = Vec::with_capacity(2 * nf);
        for a in 0..nf {
            dy.push(grad[shape.momentum_index(a, 0)]);
        }
        for a in 0..nf {
            dy.push(-grad[shape.q_index(a)]);
        }
        dy
    };

    let mut comps = vec![Vec::with_capacity(steps + 1); 2 * nf];
    let record = |comps: &mut Vec<Vec<T>>, y: &[T]| {
        for (c, v) in y.iter().enumerate() {
            comps[c].push(*v);
        }
    };
    record(&mut comps, &y);
    let two = T::of(2.0);
    let six = T::of(6.0);
    for i in 0..steps {
        let x = lo + T::of(i as f64) * h;
        let k1 = deriv(x, &y);
        let y2: Vec<T> = y.iter().zip(&k1).map(|(&v, &k)| v + h / two * k).collect();
        let k2 = deriv(x + h / two, &y2);
        let y3: Vec<T> = y.iter().zip(&k2).map(|(&v, &k)| v + h / two * k).collect();
        let k3 = deriv(x + h / two, &y3);
        let y4: Vec<T> = y.iter().zip(&k3).map(|(&v, &k)| v + h * k).collect();
        let k4 = deriv(x + h, &y4);
        for s in 0..2 * nf {
            let incr = h / six * (k1[s] + two * k2[s] + two * k3[s] + k4[s]);
            // Kahan step: fold the increment in with carried compensation
            let t = incr - comp[s];
            let sum = y[s] + t;
            comp[s] = (sum - y[s]) - t;
            y[s] = sum;
        }
        record(&mut comps, &y);
    }
    let domain = ChartedDomain::new(vec![(lo, hi)])?;
    DiscreteSection::new(shape, domain, vec![steps + 1], comps)
}

/// SOR parameters for the Laplace solver.
#[derive(Debug, Clone, Copy)]
pub struct SorParams {
    pub relaxation: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SorParams {
    fn default() -> Self {
        Self {
            relaxation: 1.9,
            tol: 1e-10,
            max_iter: 100_000,
        }
    }
}

/// Solve the Dirichlet problem for the 5-point Laplacian on a rectangular
/// grid, then derive the momenta p^μ = ∂q/∂x^μ from the converged values by
/// second-order stencils. Boundary values come from `g`.
pub fn solve_laplace(
    domain: &ChartedDomain<f64>,
    nodes: usize,
    g: &dyn Fn(&[f64]) -> f64,
    params: SorParams,
) -> Result<DiscreteSection<f64>> {
    if domain.dim() != 2 {
        return Err(Error::InvalidArgument(
            "the Laplace solver needs a 2-dimensional base".into(),
        ));
    }
    if nodes < 5 {
        return Err(Error::InvalidArgument(
            "grids need at least 5 nodes per axis".into(),
        ));
    }
    let shape = BundleShape::new(2, 1)?;
    let (x_lo, x_hi) = domain.bounds()[0];
    let (y_lo, y_hi) = domain.bounds()[1];
    let m = nodes;
    let hx = (x_hi - x_lo) / (m - 1) as f64;
    let hy = (y_hi - y_lo) / (m - 1) as f64;
    let point = |i: usize, j: usize| [x_lo + i as f64 * hx, y_lo + j as f64 * hy];
    let mut q = vec![0.0f64; m * m];
    let at = |i: usize, j: usize| i * m + j;
    for i in 0..m {
        for j in 0..m {
            if i == 0 || j == 0 || i == m - 1 || j == m - 1 {
                q[at(i, j)] = g(&point(i, j));
            }
        }
    }

    let cx = 1.0 / (hx * hx);
    let cy = 1.0 / (hy * hy);
    let diag = 2.0 * (cx + cy);
    let mut residual = f64::INFINITY;
    let mut iterations = 0usize;
    while residual > params.tol {
        if iterations >= params.max_iter {
            return Err(Error::NonConvergence {
                iterations,
                residual,
            });
        }
        residual = 0.0;
        for i in 1..m - 1 {
            for j in 1..m - 1 {
                let rhs = cx * (q[at(i + 1, j)] + q[at(i - 1, j)])
                    + cy * (q[at(i, j + 1)] + q[at(i, j - 1)]);
                let updated =
                    (1.0 - params.relaxation) * q[at(i, j)] + params.relaxation * rhs / diag;
                q[at(i, j)] = updated;
            }
        }
        for i in 1..m - 1 {
            for j in 1..m - 1 {
                let lap = cx * (q[at(i + 1, j)] - 2.0 * q[at(i, j)] + q[at(i - 1, j)])
                    + cy * (q[at(i, j + 1)] - 2.0 * q[at(i, j)] + q[at(i, j - 1)]);
                residual = residual.max(lap.abs());
            }
        }
        iterations += 1;
    }

    // momenta from the converged field: central stencils in the interior,
    // one-sided second-order on the boundary
    let stencil = |v: &dyn Fn(usize) -> f64, i: usize, h: f64| -> f64 {
        if i == 0 {
            (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * h)
        } else if i == m - 1 {
            (3.0 * v(m - 1) - 4.0 * v(m - 2) + v(m - 3)) / (2.0 * h)
        } else {
            (v(i + 1) - v(i - 1)) / (2.0 * h)
        }
    };
    let mut p1 = vec![0.0f64; m * m];
    let mut p2 = vec![0.0f64; m * m];
    for i in 0..m {
        for j in 0..m {
            p1[at(i, j)] = stencil(&|k| q[at(k, j)], i, hx);
            p2[at(i, j)] = stencil(&|k| q[at(i, k)], j, hy);
        }
    }
    DiscreteSection::new(shape, domain.clone(), vec![m, m], vec![q, p1, p2])
}

/// Least-squares slope of log(error) against log(step) — the observed
/// convergence order of a refinement study.
pub fn observed_order(samples: &[(f64, f64)]) -> f64 {
    let n = samples.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(h, e) in samples {
        let (x, y) = (h.ln(), e.max(f64::MIN_POSITIVE).ln());
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// How an example's candidate sections are produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    /// RK4 on the canonical equations (1-dimensional base).
    Ode,
    /// SOR on the 5-point Laplacian (2-dimensional base).
    Laplace,
    /// Closed-form sections only.
    None,
}

/// A named exact section of an example, with analytic base partials.
pub struct ExactSection {
    pub name: &'static str,
    pub q: Vec<ScalarField<f64>>,
    pub pmom: Vec<ScalarField<f64>>,
    pub q_grad: Vec<GradientField<f64>>,
    pub p_grad: Vec<GradientField<f64>>,
}

impl ExactSection {
    pub fn section(&self, shape: BundleShape, domain: ChartedDomain<f64>) -> AnalyticSection<f64> {
        AnalyticSection::new(shape, domain, self.q.clone(), self.pmom.clone())
            .and_then(|s| s.with_gradients(self.q_grad.clone(), self.p_grad.clone()))
            .expect("catalog sections are well-shaped")
    }
}

/// One catalog entry: Hamilton–Volterra data, domain, verification box,
/// exact sections, and solver selection.
pub struct ExampleSpec {
    pub name: &'static str,
    pub shape: BundleShape,
    pub h_expression: &'static str,
    /// Not taken from the source examples; a hyperbolic stress case.
    pub non_paper: bool,
    pub solver: SolverKind,
    pub domain_bounds: Vec<(f64, f64)>,
    /// Sub-box used for residual sampling and action integrals.
    pub verify_bounds: Vec<(f64, f64)>,
    hv_value: fn(&[f64]) -> f64,
    hv_grad: fn(&[f64]) -> Vec<f64>,
    pub exact: Vec<ExactSection>,
}

impl ExampleSpec {
    pub fn hamiltonian(&self) -> HamiltonVolterraFunction<f64> {
        HamiltonVolterraFunction::new(self.shape, self.hv_value).with_gradient(self.hv_grad)
    }

    pub fn domain(&self) -> ChartedDomain<f64> {
        ChartedDomain::new(self.domain_bounds.clone()).expect("catalog domains are valid")
    }

    pub fn verify_box(&self) -> ChartedDomain<f64> {
        ChartedDomain::new(self.verify_bounds.clone()).expect("catalog boxes are valid")
    }

    pub fn exact_sections(&self) -> Vec<(&'static str, AnalyticSection<f64>)> {
        self.exact
            .iter()
            .map(|e| (e.name, e.section(self.shape, self.domain())))
            .collect()
    }
}

fn sf(f: fn(&[f64]) -> f64) -> ScalarField<f64> {
    Arc::new(f)
}

fn gf(f: fn(&[f64]) -> Vec<f64>) -> GradientField<f64> {
    Arc::new(f)
}

/// The worked examples: oscillator and free particle on a 1-dimensional
/// base, the Laplace example on the plane, and a hyperbolic stress case.
pub fn catalog() -> Vec<ExampleSpec> {
    let shape1 = BundleShape::new(1, 1).expect("shape (1, 1)");
    let shape2 = BundleShape::new(2, 1).expect("shape (2, 1)");
    vec![
        ExampleSpec {
            name: "oscillator",
            shape: shape1,
            h_expression: "0.5*(p1_1^2 + q1^2)",
            non_paper: false,
            solver: SolverKind::Ode,
            domain_bounds: vec![(-1.0, 8.0)],
            verify_bounds: vec![(0.0, 2.0 * std::f64::consts::PI)],
            hv_value: |z| 0.5 * (z[2] * z[2] + z[1] * z[1]),
            hv_grad: |z| vec![0.0, z[1], z[2]],
            exact: vec![ExactSection {
                name: "cosine",
                q: vec![sf(|x| x[0].cos())],
                pmom: vec![sf(|x| -x[0].sin())],
                q_grad: vec![gf(|x| vec![-x[0].sin()])],
                p_grad: vec![gf(|x| vec![-x[0].cos()])],
            }],
        },
        ExampleSpec {
            name: "free-particle",
            shape: shape1,
            h_expression: "0.5*p1_1^2",
            non_paper: false,
            solver: SolverKind::Ode,
            domain_bounds: vec![(-1.0, 3.0)],
            verify_bounds: vec![(0.0, 2.0)],
            hv_value: |z| 0.5 * z[2] * z[2],
            hv_grad: |z| vec![0.0, 0.0, z[2]],
            exact: vec![ExactSection {
                name: "drift",
                q: vec![sf(|x| x[0])],
                pmom: vec![sf(|_| 1.0)],
                q_grad: vec![gf(|_| vec![1.0])],
                p_grad: vec![gf(|_| vec![0.0])],
            }],
        },
        ExampleSpec {
            name: "laplace-example",
            shape: shape2,
            h_expression: "0.5*(p1_1^2 + p1_2^2)",
            non_paper: false,
            solver: SolverKind::Laplace,
            domain_bounds: vec![(-0.25, 1.25), (-0.25, 1.25)],
            verify_bounds: vec![(0.0, 1.0), (0.0, 1.0)],
            hv_value: |z| 0.5 * (z[3] * z[3] + z[4] * z[4]),
            hv_grad: |z| vec![0.0, 0.0, 0.0, z[3], z[4]],
            exact: vec![
                ExactSection {
                    name: "bilinear",
                    q: vec![sf(|x| x[0] * x[1])],
                    pmom: vec![sf(|x| x[1]), sf(|x| x[0])],
                    q_grad: vec![gf(|x| vec![x[1], x[0]])],
                    p_grad: vec![gf(|_| vec![0.0, 1.0]), gf(|_| vec![1.0, 0.0])],
                },
                ExactSection {
                    name: "saddle",
                    q: vec![sf(|x| x[0] * x[0] - x[1] * x[1])],
                    pmom: vec![sf(|x| 2.0 * x[0]), sf(|x| -2.0 * x[1])],
                    q_grad: vec![gf(|x| vec![2.0 * x[0], -2.0 * x[1]])],
                    p_grad: vec![gf(|_| vec![2.0, 0.0]), gf(|_| vec![0.0, -2.0])],
                },
            ],
        },
        ExampleSpec {
            name: "wave-stress",
            shape: shape2,
            h_expression: "0.5*(p1_1^2 - p1_2^2)",
            non_paper: true,
            solver: SolverKind::None,
            domain_bounds: vec![(-0.5, 1.5), (-0.5, 1.5)],
            verify_bounds: vec![(0.0, 1.0), (0.0, 1.0)],
            hv_value: |z| 0.5 * (z[3] * z[3] - z[4] * z[4]),
            hv_grad: |z| vec![0.0, 0.0, 0.0, z[3], -z[4]],
            exact: vec![ExactSection {
                name: "travelling",
                q: vec![sf(|x| (x[0] + x[1]).sin())],
                pmom: vec![sf(|x| (x[0] + x[1]).cos()), sf(|x| -(x[0] + x[1]).cos())],
                q_grad: vec![gf(|x| {
                    let c = (x[0] + x[1]).cos();
                    vec![c, c]
                })],
                p_grad: vec![
                    gf(|x| {
                        let s = -(x[0] + x[1]).sin();
                        vec![s, s]
                    }),
                    gf(|x| {
                        let s = (x[0] + x[1]).sin();
                        vec![s, s]
                    }),
                ],
            }],
        },
    ]
}

pub fn find_example(name: &str) -> Result<ExampleSpec> {
    catalog()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown example `{name}`")))
}
