//! Residual evaluators for the equivalent solution conditions on a section:
//! the Hamilton–Volterra system, vanishing of the pulled-back contraction of
//! ω_h, the vortex condition on im(h), the dual-pairing form of the dynamics
//! on M(π), the action functional with its first variation, and the
//! redundant energy equations.

use crate::alternating::AlternatingForm;
use crate::bundle::{omega_coordinate, omega_h, theta_h, HamiltonVolterraFunction};
use crate::charts::{ChartedDomain, DiffConfig};
use crate::error::{Error, Result};
use crate::report::ResidualReport;
use crate::scalar::Scalar;
use crate::sections::{PerturbedSection, SectionLike, Variation};

/// Which spanning set of contraction directions to sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionMode {
    /// τ-vertical directions only: ∂/∂qᵃ and ∂/∂p^μ_a.
    Vertical,
    /// All coordinate directions, including ∂/∂x^μ.
    Full,
}

/// Quadrature rule for the action integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    Midpoint,
    Trapezoid,
}

/// Residuals of the Hamilton–Volterra system at x, as (LHS − RHS):
/// R_a = Σ_μ ∂(p^μ_a∘ψ̃)/∂x^μ + ∂𝓗/∂qᵃ and
/// S^μ_a = ∂(qᵃ∘ψ̃)/∂x^μ − ∂𝓗/∂p^μ_a (S returned a-major).
pub fn hv_residual<T: Scalar>(
    hv: &HamiltonVolterraFunction<T>,
    psi: &dyn SectionLike<T>,
    x: &[T],
    cfg: &DiffConfig<T>,
) -> Result<(Vec<T>, Vec<T>)> {
    let shape = *psi.shape();
    let z = psi.value(x)?;
    let jac = psi.jacobian(x, cfg)?;
    let grad = hv.gradient(&z, cfg);
    let mut r = Vec::with_capacity(shape.fibre);
    let mut s = Vec::with_capacity(shape.fibre * shape.n);
    for a in 0..shape.fibre {
        let mut div = T::zero();
        for mu in 0..shape.n {
            div += jac[shape.momentum_index(a, mu)][mu];
        }
        r.push(div + grad[shape.q_index(a)]);
    }
    for a in 0..shape.fibre {
        for mu in 0..shape.n {
            s.push(jac[shape.q_index(a)][mu] - grad[shape.momentum_index(a, mu)]);
        }
    }
    Ok((r, s))
}

/// The pulled-back contraction (ψ̃*(ι_X ω_h))_x evaluated on the co-volume
/// ∂/∂x¹∧…∧∂/∂xⁿ; X is a tangent vector at ψ̃(x) ∈ P(π).
pub fn pullback_residual<T: Scalar>(
    hv: &HamiltonVolterraFunction<T>,
    psi: &dyn SectionLike<T>,
    x_dir: &[T],
    x: &[T],
    cfg: &DiffConfig<T>,
) -> Result<T> {
    let shape = *psi.shape();
    let z = psi.value(x)?;
    let jac = psi.jacobian(x, cfg)?;
    let form = omega_h(&shape, hv, &z, cfg).interior(x_dir)?;
    evaluate_on_columns(&form, &jac, shape.n)
}

/// Sweep [`pullback_residual`] over the coordinate spanning set and collect
/// the values into a report (equation ids name the contraction direction).
pub fn vertical_residual_suite<T: Scalar>(
    hv: &HamiltonVolterraFunction<T>,
    psi: &dyn SectionLike<T>,
    x: &[T],
    cfg: &DiffConfig<T>,
    mode: DirectionMode,
) -> Result<ResidualReport> {
    let shape = *psi.shape();
    let dim = shape.dim_p();
    let mut report = ResidualReport::new(match mode {
        DirectionMode::Vertical => "pullback-vertical",
        DirectionMode::Full => "pullback-full",
    });
    let xf: Vec<f64> = x.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
    let slots: Vec<usize> = match mode {
        DirectionMode::Vertical => (shape.n..dim).collect(),
        DirectionMode::Full => (0..dim).collect(),
    };
    for slot in slots {
        let mut dir = vec![T::zero(); dim];
        dir[slot] = T::one();
        let value = pullback_residual(hv, psi, &dir, x, cfg)?;
        let name = format!("iota[{}]", shape.coordinate_name(slot, false));
        report.record(&xf, &name, value.to_f64().unwrap_or(f64::NAN));
    }
    report.finish();
    Ok(report)
}

/// Contraction of the pushed-forward co-volume of ψ = h∘ψ̃ with ω, read on
/// the frame {h_* e_i} of T im(h). All entries vanish exactly when ψ(U) is a
/// vortex n-plane field at x.
pub fn vortex_residual<T: Scalar>(
    hv: &HamiltonVolterraFunction<T>,
    psi: &dyn SectionLike<T>,
    x: &[T],
    cfg: &DiffConfig<T>,
) -> Result<Vec<T>> {
    let shape = *psi.shape();
    let one_form = graph_contraction(hv, psi, x, cfg)?;
    let z = psi.value(x)?;
    let h_jac = hv.section_map(*cfg).jacobian_at(&z, cfg);
    let dim_p = shape.dim_p();
    let mut out = Vec::with_capacity(dim_p);
    for i in 0..dim_p {
        let frame_vec: Vec<T> = h_jac.iter().map(|row| row[i]).collect();
        out.push(one_form.evaluate(&[&frame_vec])?);
    }
    Ok(out)
}

/// The 1-form contract(ψ_*γ, ω) − (−1)^{n+1} dH at ψ(x) ∈ M(π), with
/// ψ = h∘ψ̃, γ the coordinate co-volume, and H = 𝓗 + p. Zero exactly when
/// the dual-pairing form of the dynamics holds at x.
pub fn dhdw_residual<T: Scalar>(
    hv: &HamiltonVolterraFunction<T>,
    psi: &dyn SectionLike<T>,
    x: &[T],
    cfg: &DiffConfig<T>,
) -> Result<AlternatingForm<T>> {
    let shape = *psi.shape();
    let contraction = graph_contraction(hv, psi, x, cfg)?;
    let z = psi.value(x)?;
    let grad = hv.gradient(&z, cfg);
    let dim_m = shape.dim_m();
    let mut dh = AlternatingForm::zero(dim_m, 1);
    for (i, g) in grad.into_iter().enumerate() {
        dh.set_coeff(&[i], g);
    }
    dh.set_coeff(&[shape.p_index()], T::one());
    let sign = if shape.n % 2 == 0 {
        -T::one()
    } else {
        T::one()
    };
    contraction.sub(&dh.scaled(sign))
}

/// contract((h∘ψ̃)_*γ, ω) as a 1-form on T_{ψ(x)}M(π).
pub fn graph_contraction<T: Scalar>(
    hv: &HamiltonVolterraFunction<T>,
    psi: &dyn SectionLike<T>,
    x: &[T],
    cfg: &DiffConfig<T>,
) -> Result<AlternatingForm<T>> {
    let shape = *psi.shape();
    let z = psi.value(x)?;
    let jac = psi.jacobian(x, cfg)?;
    let h_jac = hv.section_map(*cfg).jacobian_at(&z, cfg);
    // columns of the composite Jacobian d(h∘ψ̃): h_jac · jac
    let cols: Vec<Vec<T>> = (0..shape.n)
        .map(|mu| {
            h_jac
                .iter()
                .map(|row| row.iter().zip(&jac).map(|(&a, jr)| a * jr[mu]).sum())
                .collect()
        })
        .collect();
    let col_refs: Vec<&[T]> = cols.iter().map(|c| c.as_slice()).collect();
    let pushed = crate::alternating::MultiVector::from_decomposable(&col_refs)?;
    omega_coordinate(&shape).contract(&pushed)
}

/// The localized action ∫_V ψ̃*Θ_h by tensor-product quadrature with the
/// given number of subintervals per axis.
pub fn action<T: Scalar>(
    hv: &HamiltonVolterraFunction<T>,
    psi: &dyn SectionLike<T>,
    v_box: &ChartedDomain<T>,
    quad: Quadrature,
    cells_per_axis: usize,
    cfg: &DiffConfig<T>,
) -> Result<T> {
    let shape = *psi.shape();
    if v_box.dim() != shape.n {
        return Err(Error::DimensionMismatch {
            expected: shape.n,
            got: v_box.dim(),
        });
    }
    if !psi.domain().compactly_contains(v_box, T::zero()) {
        return Err(Error::BoxNotContained);
    }
    quadrature_sum(v_box, quad, cells_per_axis, &mut |x| {
        let z = psi.value(x)?;
        let jac = psi.jacobian(x, cfg)?;
        evaluate_on_columns(&theta_h(&shape, hv, &z), &jac, shape.n)
    })
}

/// First variation of the action at ψ̃ along a compactly supported vertical
/// variation φ: the central finite difference of t ↦ 𝔸[ψ̃ + tφ] at 0, and
/// the closed-form value −∫_V ψ̃*(ι_ξ ω_h) with ξ the variation field.
#[allow(clippy::too_many_arguments)]
pub fn action_first_variation<T: Scalar>(
    hv: &HamiltonVolterraFunction<T>,
    psi: &dyn SectionLike<T>,
    phi: &Variation<T>,
    v_box: &ChartedDomain<T>,
    t_step: T,
    quad: Quadrature,
    cells_per_axis: usize,
    cfg: &DiffConfig<T>,
) -> Result<(T, T)> {
    phi.check_compact_support(v_box, 256, 0)?;
    let at = |t: T| -> Result<T> {
        let shifted = PerturbedSection {
            base: psi,
            variation: phi,
            t,
        };
        action(hv, &shifted, v_box, quad, cells_per_axis, cfg)
    };
    let fd = (at(t_step)? - at(-t_step)?) / (T::of(2.0) * t_step);
    let analytic = -quadrature_sum(v_box, quad, cells_per_axis, &mut |x| {
        pullback_residual(hv, psi, &phi.vertical_vector(x), x, cfg)
    })?;
    Ok((fd, analytic))
}

/// Residuals E_μ of the energy equations at x for a given fibre coordinate
/// history p(x):
/// E_μ = ∂p/∂x^μ + ∂𝓗/∂x^μ|_ψ̃
///     + Σ_{a,ν≠μ} (∂qᵃ/∂x^ν ∂p^ν_a/∂x^μ − ∂qᵃ/∂x^μ ∂p^ν_a/∂x^ν).
pub fn energy_residual<T: Scalar>(
    hv: &HamiltonVolterraFunction<T>,
    psi: &dyn SectionLike<T>,
    p_of_x: &dyn Fn(&[T]) -> T,
    x: &[T],
    cfg: &DiffConfig<T>,
) -> Result<Vec<T>> {
    let shape = *psi.shape();
    let z = psi.value(x)?;
    let jac = psi.jacobian(x, cfg)?;
    psi.domain().require_clearance(x, &cfg.steps(x))?;
    let grad = hv.gradient(&z, cfg);
    let mut out = Vec::with_capacity(shape.n);
    for mu in 0..shape.n {
        let mut e = cfg.partial(p_of_x, x, mu) + grad[shape.x_index(mu)];
        for a in 0..shape.fibre {
            for nu in 0..shape.n {
                if nu == mu {
                    continue;
                }
                let dq_nu = jac[shape.q_index(a)][nu];
                let dq_mu = jac[shape.q_index(a)][mu];
                let dp_nu = &jac[shape.momentum_index(a, nu)];
                e += dq_nu * dp_nu[mu] - dq_mu * dp_nu[nu];
            }
        }
        out.push(e);
    }
    Ok(out)
}

/// Run every residual family at one point and collect them into a report
/// with equation ids R{a}, S{a}_{μ}, iota[...], vortex[i], dhdw[i].
pub fn full_suite<T: Scalar>(
    hv: &HamiltonVolterraFunction<T>,
    psi: &dyn SectionLike<T>,
    x: &[T],
    cfg: &DiffConfig<T>,
) -> Result<ResidualReport> {
    let shape = *psi.shape();
    let mut report = ResidualReport::new("five-way");
    let xf: Vec<f64> = x.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect();
    let (r, s) = hv_residual(hv, psi, x, cfg)?;
    for (a, v) in r.iter().enumerate() {
        report.record(&xf, &format!("R{}", a + 1), v.to_f64().unwrap_or(f64::NAN));
    }
    for a in 0..shape.fibre {
        for mu in 0..shape.n {
            let v = s[a * shape.n + mu];
            report.record(
                &xf,
                &format!("S{}_{}", a + 1, mu + 1),
                v.to_f64().unwrap_or(f64::NAN),
            );
        }
    }
    for mode in [DirectionMode::Vertical, DirectionMode::Full] {
        let sub = vertical_residual_suite(hv, psi, x, cfg, mode)?;
        let prefix = match mode {
            DirectionMode::Vertical => "vertical.",
            DirectionMode::Full => "full.",
        };
        for row in &sub.rows {
            report.record(&xf, &format!("{prefix}{}", row.equation), row.value);
        }
    }
    for (i, v) in vortex_residual(hv, psi, x, cfg)?.into_iter().enumerate() {
        report.record(&xf, &format!("vortex[{i}]"), v.to_f64().unwrap_or(f64::NAN));
    }
    let dh = dhdw_residual(hv, psi, x, cfg)?;
    for i in 0..dh.dim() {
        report.record(
            &xf,
            &format!("dhdw[{i}]"),
            dh.coeff(&[i]).to_f64().unwrap_or(f64::NAN),
        );
    }
    report.finish();
    Ok(report)
}

/// Evaluate an n-form on the first n Jacobian columns — the density of its
/// pullback along the section with respect to dⁿx.
fn evaluate_on_columns<T: Scalar>(
    form: &AlternatingForm<T>,
    jac: &[Vec<T>],
    n: usize,
) -> Result<T> {
    let cols: Vec<Vec<T>> = (0..n)
        .map(|mu| jac.iter().map(|row| row[mu]).collect())
        .collect();
    let refs: Vec<&[T]> = cols.iter().map(|c| c.as_slice()).collect();
    form.evaluate(&refs)
}

/// Tensor-product quadrature of a pointwise density over a box.
fn quadrature_sum<T: Scalar>(
    v_box: &ChartedDomain<T>,
    quad: Quadrature,
    cells_per_axis: usize,
    density: &mut dyn FnMut(&[T]) -> Result<T>,
) -> Result<T> {
    if cells_per_axis == 0 {
        return Err(Error::InvalidArgument(
            "quadrature needs at least one cell".into(),
        ));
    }
    let n = v_box.dim();
    let m = cells_per_axis;
    let h: Vec<T> = v_box
        .bounds()
        .iter()
        .map(|&(lo, hi)| (hi - lo) / T::of(m as f64))
        .collect();
    let cell_vol: T = h.iter().copied().fold(T::one(), |a, b| a * b);
    let points_per_axis = match quad {
        Quadrature::Midpoint => m,
        Quadrature::Trapezoid => m + 1,
    };
    let total = points_per_axis.pow(n as u32);
    let mut sum = T::zero();
    for flat in 0..total {
        let mut rest = flat;
        let mut x = Vec::with_capacity(n);
        let mut weight = T::one();
        for (axis, &h_axis) in h.iter().enumerate() {
            let i = rest % points_per_axis;
            rest /= points_per_axis;
            let lo = v_box.bounds()[axis].0;
            match quad {
                Quadrature::Midpoint => {
                    x.push(lo + (T::of(i as f64) + T::of(0.5)) * h_axis);
                }
                Quadrature::Trapezoid => {
                    x.push(lo + T::of(i as f64) * h_axis);
                    if i == 0 || i == m {
                        weight *= T::of(0.5);
                    }
                }
            }
        }
        sum += weight * density(&x)?;
    }
    Ok(sum * cell_vol)
}
