//! End-to-end acceptance battery: one test per criterion, each printing a
//! single pass/fail line. Run with `--nocapture` to see the lines on success.

use std::collections::BTreeMap;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use multisym::alternating::{AlternatingForm, MultiVector};
use multisym::bundle::{
    chi, hamiltonian_function, liouville_form, omega_coordinate, z_derivative, BundleShape,
    HamiltonVolterraFunction,
};
use multisym::charts::{exterior_derivative, ChartedDomain, DiffConfig, FormField, SmoothMap};
use multisym::equations::{
    action, action_first_variation, dhdw_residual, energy_residual, full_suite, hv_residual,
    pullback_residual, Quadrature,
};
use multisym::nplectic::{
    degeneracy_scan, dynamical_hdw_residual, flat_rank, solve_hdw_vector, CoVolume,
    HamiltonianForm, NPlecticManifold,
};
use multisym::sections::{
    bump_field, AnalyticSection, PerturbedSection, ScalarField, SectionLike, Variation,
};
use multisym::solvers::{
    catalog, find_example, observed_order, solve_laplace, solve_ode, SorParams,
};

fn cfg() -> DiffConfig<f64> {
    DiffConfig::default()
}

fn verdict(criterion: &str, failures: &[String]) {
    let ok = failures.is_empty();
    println!(
        "criterion {criterion}: [{}]",
        if ok { "pass" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion} failed:\n{}", failures.join("\n"));
}

/// The exact catalog solutions with their Hamiltonians, as (name, hv, section).
fn battery() -> Vec<(String, HamiltonVolterraFunction<f64>, AnalyticSection<f64>)> {
    let mut out = Vec::new();
    for name in ["oscillator", "laplace-example"] {
        let ex = find_example(name).unwrap();
        for (sec_name, sec) in ex.exact_sections() {
            out.push((format!("{name}-{sec_name}"), ex.hamiltonian(), sec));
        }
    }
    out
}

fn lattice(b: &ChartedDomain<f64>, per_axis: usize) -> Vec<Vec<f64>> {
    let n = b.dim();
    let total = per_axis.pow(n as u32);
    (0..total)
        .map(|flat| {
            let mut rest = flat;
            (0..n)
                .map(|axis| {
                    let i = rest % per_axis;
                    rest /= per_axis;
                    let (lo, hi) = b.bounds()[axis];
                    lo + (i as f64 + 0.5) * (hi - lo) / per_axis as f64
                })
                .collect()
        })
        .collect()
}

/// Group suite rows into the five families and take each family's L∞ norm.
fn family_maxima(
    hv: &HamiltonVolterraFunction<f64>,
    psi: &dyn SectionLike<f64>,
    points: &[Vec<f64>],
) -> BTreeMap<&'static str, f64> {
    let mut maxima: BTreeMap<&'static str, f64> = BTreeMap::new();
    for x in points {
        let rep = full_suite(hv, psi, x, &cfg()).unwrap();
        for row in &rep.rows {
            let family = if row.equation.starts_with("vertical.") {
                "pullback-vertical"
            } else if row.equation.starts_with("full.") {
                "pullback-full"
            } else if row.equation.starts_with("vortex") {
                "vortex"
            } else if row.equation.starts_with("dhdw") {
                "dhdw"
            } else {
                "hamilton-volterra"
            };
            let e = maxima.entry(family).or_insert(0.0);
            *e = e.max(row.value.abs());
        }
    }
    maxima
}

#[test]
fn criterion_01_equivalence_battery() {
    let start = Instant::now();
    let mut failures = Vec::new();

    // exact solutions: all five families below 1e-8 on the analytic path
    for (name, hv, sec) in battery() {
        let ex_box = if sec.shape().n == 1 {
            ChartedDomain::new(vec![(0.0, 2.0 * std::f64::consts::PI)]).unwrap()
        } else {
            ChartedDomain::new(vec![(0.0, 1.0); 2]).unwrap()
        };
        for (family, v) in family_maxima(&hv, &sec, &lattice(&ex_box, 3)) {
            if v >= 1e-8 {
                failures.push(format!("{name}: {family} = {v:.3e} on an exact solution"));
            }
        }
    }

    // 20 seeded perturbations of the oscillator solution: every family
    // responds above the scaled threshold and scales linearly in ε
    let ex = find_example("oscillator").unwrap();
    let hv = ex.hamiltonian();
    let base = ex.exact_sections().remove(0).1;
    let shape = *base.shape();
    let support = vec![(0.5, 5.5)];
    let points = vec![vec![1.5], vec![2.5], vec![4.5]];
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut amp = || -> f64 {
            let a = rng.gen_range(0.5..1.5);
            if rng.gen::<bool>() {
                a
            } else {
                -a
            }
        };
        let mk = |a: f64| -> ScalarField<f64> {
            let b = bump_field(support.clone());
            Arc::new(move |x: &[f64]| a * b(x))
        };
        let phi = Variation::new(
            shape,
            ChartedDomain::new(support.clone()).unwrap(),
            vec![mk(amp())],
            vec![mk(amp())],
        )
        .unwrap();
        let mut per_eps = Vec::new();
        for eps in [1e-2, 1e-3] {
            let perturbed = PerturbedSection {
                base: &base,
                variation: &phi,
                t: eps,
            };
            let maxima = family_maxima(&hv, &perturbed, &points);
            for (family, v) in &maxima {
                if *v <= 1e-4 * eps {
                    failures.push(format!(
                        "seed {seed} eps {eps}: {family} = {v:.3e} below threshold"
                    ));
                }
            }
            per_eps.push(maxima);
        }
        for (family, coarse) in &per_eps[0] {
            let ratio = coarse / per_eps[1][family];
            if (ratio - 10.0).abs() > 2.0 {
                failures.push(format!("seed {seed}: {family} scaling ratio {ratio:.2}"));
            }
        }
    }

    let elapsed = start.elapsed().as_secs_f64();
    if elapsed >= 30.0 {
        failures.push(format!("battery took {elapsed:.1}s (budget 30s)"));
    }
    verdict("01 equivalence battery", &failures);
}

#[test]
fn criterion_02_sign_convention_pivot() {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut done = 0usize;
    while done < 200 {
        for (n, fibre) in [(1usize, 1usize), (2, 1), (3, 2)] {
            let shape = BundleShape::new(n, fibre).unwrap();
            let hv = HamiltonVolterraFunction::new(shape, |z: &[f64]| {
                0.3 * z.iter().map(|v| v.sin()).sum::<f64>()
            });
            let domain = ChartedDomain::new(vec![(-1.0, 1.0); n]).unwrap();
            let coeffs: Vec<f64> = (0..2 * shape.dim_p())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let mk = |offset: usize| -> ScalarField<f64> {
                let c = coeffs.clone();
                Arc::new(move |x: &[f64]| {
                    x.iter()
                        .enumerate()
                        .map(|(i, v)| c[(offset + i) % c.len()] * v.cos())
                        .sum()
                })
            };
            let sec = AnalyticSection::new(
                shape,
                domain,
                (0..fibre).map(mk).collect(),
                (fibre..fibre + fibre * n).map(mk).collect(),
            )
            .unwrap();
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let dir: Vec<f64> = (0..shape.dim_p())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let lhs = pullback_residual(&hv, &sec, &dir, &x, &cfg()).unwrap();
            let jac = sec.jacobian(&x, &cfg()).unwrap();
            let cols: Vec<Vec<f64>> = (0..n)
                .map(|mu| jac.iter().map(|row| row[mu]).collect())
                .collect();
            let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
            let pushed = MultiVector::from_decomposable(&refs).unwrap();
            let z = sec.value(&x).unwrap();
            let omega = multisym::bundle::omega_h(&shape, &hv, &z, &cfg());
            let rhs = omega.contract(&pushed).unwrap().evaluate(&[&dir]).unwrap();
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            if (lhs - sign * rhs).abs() > 1e-10 * (1.0 + lhs.abs()) {
                failures.push(format!("n={n}, N={fibre}: lhs {lhs:.3e} vs rhs {rhs:.3e}"));
            }
            done += 1;
        }
    }
    verdict("02 sign-convention pivot", &failures);
}

#[test]
fn criterion_03_canonical_structure() {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for (n, fibre) in [(1usize, 1usize), (2, 1), (2, 2), (3, 2)] {
        let shape = BundleShape::new(n, fibre).unwrap();
        let d = shape.dim_m();
        let domain = ChartedDomain::new(vec![(-2.0, 2.0); d]).unwrap();
        let theta = FormField::new(domain.clone(), n, move |eta: &[f64]| {
            liouville_form(&shape, eta)
        });
        let omega = omega_coordinate::<f64>(&shape);

        // ω coordinate formula against −dΘ at 100 random points
        let mut gap = 0.0f64;
        let mut d_omega = 0.0f64;
        for _ in 0..100 {
            let eta: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let minus_dtheta = exterior_derivative(&theta, &eta, &cfg())
                .unwrap()
                .scaled(-1.0);
            gap = gap.max(minus_dtheta.sub(&omega).unwrap().max_abs());
            // ω is closed: numerical d of the (constant-coefficient) field
            let omega_field = FormField::new(domain.clone(), n + 1, {
                let omega = omega.clone();
                move |_: &[f64]| omega.clone()
            });
            d_omega = d_omega.max(
                exterior_derivative(&omega_field, &eta, &cfg())
                    .unwrap()
                    .max_abs(),
            );
        }
        if gap >= 1e-7 {
            failures.push(format!("(n, N) = ({n}, {fibre}): |ω + dΘ| = {gap:.3e}"));
        }
        if d_omega >= 1e-6 {
            failures.push(format!("(n, N) = ({n}, {fibre}): |dω| = {d_omega:.3e}"));
        }

        // contraction map full rank at 50 points (constant coefficients, so
        // the spread over points exercises determinism of the rank call)
        for _ in 0..50 {
            if flat_rank(&omega) != d {
                failures.push(format!("(n, N) = ({n}, {fibre}): rank deficient"));
                break;
            }
        }

        // Θ vanishes whenever two arguments are vertical
        let eta: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let vertical = shape.vertical_basis_m::<f64>();
        match liouville_form(&shape, &eta).is_k_horizontal(&vertical, 2, 1e-12) {
            Ok(true) => {}
            _ => failures.push(format!("(n, N) = ({n}, {fibre}): Θ is not 2-horizontal")),
        }
    }
    verdict("03 canonical structure", &failures);
}

#[test]
fn criterion_04_fibre_roundtrips() {
    let mut failures = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let shape = BundleShape::new(2, 1).unwrap();
    let hv = HamiltonVolterraFunction::new(shape, |z: &[f64]| {
        0.5 * (z[3] * z[3] + z[4] * z[4]) + z[1].sin()
    });
    let h_fn = |eta: &[f64]| hamiltonian_function(&hv, eta);
    for _ in 0..100 {
        let z: Vec<f64> = (0..shape.dim_p())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let u = rng.gen_range(-1.0..1.0);
        let mut eta = z.clone();
        eta.push(rng.gen_range(-1.0..1.0));

        // Z(H) = 1
        let zh = z_derivative(&shape, &h_fn, &eta, &cfg());
        if (zh - 1.0).abs() > 1e-9 {
            failures.push(format!("Z(H) = {zh}"));
        }
        // H(χ(z, u)) = u
        let hu = hamiltonian_function(&hv, &chi(&hv, &z, u));
        if (hu - u).abs() > 1e-12 {
            failures.push(format!("H(χ(z, u)) − u = {:.3e}", hu - u));
        }
        // section recovered from its Hamiltonian function
        let eta_rt = multisym::bundle::section_from_function(&shape, &h_fn, &z, &cfg()).unwrap();
        let expect = chi(&hv, &z, 0.0);
        let gap = eta_rt
            .iter()
            .zip(&expect)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if gap >= 1e-12 {
            failures.push(format!("section roundtrip gap {gap:.3e}"));
        }
        // the Z-flow shifts H affinely: H(η + u ∂p) = H(η) + u
        let mut shifted = eta.clone();
        shifted[shape.p_index()] += u;
        let lhs = hamiltonian_function(&hv, &shifted);
        let rhs = hamiltonian_function(&hv, &eta) + u;
        if (lhs - rhs).abs() > 1e-12 {
            failures.push(format!("flow shift gap {:.3e}", lhs - rhs));
        }
    }
    verdict("04 fibre roundtrips", &failures);
}

#[test]
fn criterion_05_variational_principle() {
    let mut failures = Vec::new();

    // stationary on the oscillator solution for 10 seeded compact variations
    let ex = find_example("oscillator").unwrap();
    let hv = ex.hamiltonian();
    let sec = ex.exact_sections().remove(0).1;
    let shape = *sec.shape();
    let v = ChartedDomain::new(vec![(0.0, 6.0)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for seed in 0..10 {
        let a_q = rng.gen_range(-1.0..1.0);
        let a_p = rng.gen_range(-1.0..1.0);
        let support = vec![(0.5, 5.5)];
        let mk = |a: f64| -> ScalarField<f64> {
            let b = bump_field(support.clone());
            Arc::new(move |x: &[f64]| a * b(x))
        };
        let phi = Variation::new(
            shape,
            ChartedDomain::new(support.clone()).unwrap(),
            vec![mk(a_q)],
            vec![mk(a_p)],
        )
        .unwrap();
        let (fd, analytic) = action_first_variation(
            &hv,
            &sec,
            &phi,
            &v,
            1e-5,
            Quadrature::Trapezoid,
            400,
            &cfg(),
        )
        .unwrap();
        if fd.abs() >= 1e-6 {
            failures.push(format!("seed {seed}: fd variation {fd:.3e} on a solution"));
        }
        if (fd - analytic).abs() >= 1e-6 {
            failures.push(format!(
                "seed {seed}: fd vs analytic gap {:.3e}",
                fd - analytic
            ));
        }
    }

    // grid-quadrature agreement on the planar example
    let exl = find_example("laplace-example").unwrap();
    let hvl = exl.hamiltonian();
    let secl = exl.exact_sections().remove(0).1;
    let shapel = *secl.shape();
    let vl = ChartedDomain::new(vec![(0.0, 1.0); 2]).unwrap();
    let supportl = vec![(0.1, 0.9), (0.1, 0.9)];
    let bl = bump_field(supportl.clone());
    let phil = Variation::new(
        shapel,
        ChartedDomain::new(supportl).unwrap(),
        vec![Arc::new(move |x: &[f64]| bl(x))],
        vec![Arc::new(|_: &[f64]| 0.0), Arc::new(|_: &[f64]| 0.0)],
    )
    .unwrap();
    let cells = 32usize;
    let h = 1.0 / cells as f64;
    let (fd2, analytic2) = action_first_variation(
        &hvl,
        &secl,
        &phil,
        &vl,
        1e-5,
        Quadrature::Midpoint,
        cells,
        &cfg(),
    )
    .unwrap();
    if (fd2 - analytic2).abs() >= 5.0 * h * h {
        failures.push(format!("planar fd vs analytic gap {:.3e}", fd2 - analytic2));
    }

    // on the non-solution q = x¹ a −bump momentum variation lowers the
    // action by exactly the bump integral
    let dshape = BundleShape::new(1, 1).unwrap();
    let dhv = HamiltonVolterraFunction::new(dshape, |z: &[f64]| 0.5 * z[2] * z[2])
        .with_gradient(|z: &[f64]| vec![0.0, 0.0, z[2]]);
    let ddomain = ChartedDomain::new(vec![(-1.0, 1.0)]).unwrap();
    let dsec = AnalyticSection::new(
        dshape,
        ddomain,
        vec![Arc::new(|x: &[f64]| x[0])],
        vec![Arc::new(|_: &[f64]| 0.0)],
    )
    .unwrap();
    let dsupport = vec![(-0.5, 0.5)];
    let db = bump_field(dsupport.clone());
    let dphi = Variation::new(
        dshape,
        ChartedDomain::new(dsupport).unwrap(),
        vec![Arc::new(|_: &[f64]| 0.0)],
        vec![Arc::new(move |x: &[f64]| -db(x))],
    )
    .unwrap();
    let dv = ChartedDomain::new(vec![(-0.9, 0.9)]).unwrap();
    let (dfd, _) = action_first_variation(
        &dhv,
        &dsec,
        &dphi,
        &dv,
        1e-5,
        Quadrature::Trapezoid,
        512,
        &cfg(),
    )
    .unwrap();
    let expected = -128.0 / 315.0; // −∫ (1 − (2s)²)⁴ over a width-1 support
    if dfd >= 0.0 || (dfd - expected).abs() >= 1e-6 {
        failures.push(format!("defect variation {dfd:.6} vs {expected:.6}"));
    }
    verdict("05 variational principle", &failures);
}

#[test]
fn criterion_06_energy_redundancy() {
    // the extended-energy equations never exceed 10x the Hamilton–Volterra
    // residual (plus the finite-difference noise floor)
    let mut failures = Vec::new();
    let floor = 1e-9;
    let mut check = |label: String,
                     hv: &HamiltonVolterraFunction<f64>,
                     psi: &dyn SectionLike<f64>,
                     points: &[Vec<f64>]| {
        for x in points {
            let (r_vec, s_vec) = hv_residual(hv, psi, x, &cfg()).unwrap();
            let r = r_vec
                .iter()
                .chain(&s_vec)
                .map(|v| v.abs())
                .fold(0.0f64, f64::max);
            let p_of_x = |y: &[f64]| -hv.value(&psi.value(y).unwrap());
            let e = energy_residual(hv, psi, &p_of_x, x, &cfg())
                .unwrap()
                .iter()
                .map(|v| v.abs())
                .fold(0.0f64, f64::max);
            if e > 10.0 * r + floor {
                failures.push(format!("{label} at {x:?}: energy {e:.3e} vs HV {r:.3e}"));
            }
        }
    };
    for (name, hv, sec) in battery() {
        let b = if sec.shape().n == 1 {
            ChartedDomain::new(vec![(0.0, 6.0)]).unwrap()
        } else {
            ChartedDomain::new(vec![(0.0, 1.0); 2]).unwrap()
        };
        check(name, &hv, &sec, &lattice(&b, 3));
    }
    // perturbed sections keep the ratio as well
    let ex = find_example("oscillator").unwrap();
    let hv = ex.hamiltonian();
    let base = ex.exact_sections().remove(0).1;
    let shape = *base.shape();
    let support = vec![(0.5, 5.5)];
    let b = bump_field(support.clone());
    let b2 = bump_field(support.clone());
    let phi = Variation::new(
        shape,
        ChartedDomain::new(support).unwrap(),
        vec![Arc::new(move |x: &[f64]| b(x))],
        vec![Arc::new(move |x: &[f64]| 0.7 * b2(x))],
    )
    .unwrap();
    for eps in [1e-1, 1e-2, 1e-3] {
        let perturbed = PerturbedSection {
            base: &base,
            variation: &phi,
            t: eps,
        };
        check(
            format!("perturbed eps {eps}"),
            &hv,
            &perturbed,
            &[vec![1.5], vec![3.0], vec![4.5]],
        );
    }
    verdict("06 energy redundancy", &failures);
}

#[test]
fn criterion_07_solver_orders() {
    let mut failures = Vec::new();

    // RK4 on the oscillator: observed order 4 against the cosine solution
    let ex = find_example("oscillator").unwrap();
    let hv = ex.hamiltonian();
    let mut rk_samples = Vec::new();
    for step in [2e-3, 1e-3, 5e-4] {
        let sol = solve_ode(&hv, &[1.0], &[0.0], (0.0, 2.0 * std::f64::consts::PI), step).unwrap();
        let mut err = 0.0f64;
        for idx in sol.interior_nodes(0) {
            let x = sol.node_point(&idx);
            err = err.max((sol.component_at(0, &idx) - x[0].cos()).abs());
        }
        rk_samples.push((step, err));
    }
    let rk_order = observed_order(&rk_samples);
    if (rk_order - 4.0).abs() > 0.3 {
        failures.push(format!("RK4 observed order {rk_order:.3}"));
    }

    // Laplace solver: section residual order 2 under grid halving, with a
    // harmonic boundary function outside the stencil's exactness class
    let domain = ChartedDomain::new(vec![(0.0, 1.0); 2]).unwrap();
    let g = |x: &[f64]| x[0].exp() * x[1].sin();
    let lhv = find_example("laplace-example").unwrap().hamiltonian();
    let mut lp_samples = Vec::new();
    let mut t65 = 0.0f64;
    for m in [33usize, 65, 129] {
        // stop SOR near the rounding floor, which scales with 1/h²
        let params = SorParams {
            tol: 1e-12 * ((m - 1) * (m - 1)) as f64,
            ..SorParams::default()
        };
        let t0 = Instant::now();
        let sol = solve_laplace(&domain, m, &g, params).unwrap();
        if m == 65 {
            t65 = t0.elapsed().as_secs_f64();
        }
        let mut err = 0.0f64;
        for idx in sol.interior_nodes(2) {
            let x = sol.node_point(&idx);
            let (r, s) = hv_residual(&lhv, &sol, &x, &cfg()).unwrap();
            for v in r.iter().chain(&s) {
                err = err.max(v.abs());
            }
        }
        lp_samples.push((1.0 / (m - 1) as f64, err));
    }
    let lp_order = observed_order(&lp_samples);
    if (lp_order - 2.0).abs() > 0.2 {
        failures.push(format!("Laplace observed order {lp_order:.3}"));
    }
    if t65 >= 5.0 {
        failures.push(format!("65x65 Laplace run took {t65:.2}s"));
    }
    verdict("07 solver orders", &failures);
}

#[test]
fn criterion_08_nplectic_specialization() {
    let mut failures = Vec::new();

    // the generic pairing residual agrees with the bundle pipeline on the
    // canonical phase spaces
    for name in ["oscillator", "laplace-example"] {
        let ex = find_example(name).unwrap();
        let hv = ex.hamiltonian();
        let shape = ex.shape;
        let d = shape.dim_m();
        let base = ex.verify_box();
        let omega = omega_coordinate::<f64>(&shape);
        let mdomain = ChartedDomain::new(vec![(-50.0, 50.0); d]).unwrap();
        let field = FormField::new(mdomain.clone(), shape.n + 1, move |_: &[f64]| omega.clone());
        let manifold = NPlecticManifold::new(shape.n, field).unwrap();
        let hv_h = hv.clone();
        let h = HamiltonianForm::new(FormField::new(mdomain, 0, move |eta: &[f64]| {
            AlternatingForm::constant(d, hamiltonian_function(&hv_h, eta))
        }));
        for (sec_name, sec) in ex.exact_sections() {
            let hv_map = hv.clone();
            let sec_arc = Arc::new(sec);
            let sec_map = sec_arc.clone();
            let lift = SmoothMap::new(shape.n, d, move |x: &[f64]| {
                let mut eta = sec_map.value(x).unwrap();
                eta.push(-hv_map.value(&eta));
                eta
            });
            let gamma = CoVolume::coordinate(base.clone());
            for x in lattice(&base, 2) {
                let generic =
                    dynamical_hdw_residual(&manifold, &h, &lift, &gamma, &x, &cfg()).unwrap();
                let bundled = dhdw_residual(&hv, sec_arc.as_ref(), &x, &cfg()).unwrap();
                let gap = generic.sub(&bundled).unwrap().max_abs();
                if gap >= 1e-9 {
                    failures.push(format!(
                        "{name}-{sec_name} at {x:?}: pipeline gap {gap:.3e}"
                    ));
                }
            }
        }
    }

    // symplectic specialization recovers the classical Hamiltonian vector
    // field on three test Hamiltonians
    let box2 = ChartedDomain::new(vec![(-2.0, 2.0); 2]).unwrap();
    let sympl = NPlecticManifold::new(
        1,
        FormField::new(box2.clone(), 2, |_: &[f64]| {
            AlternatingForm::basis(2, &[0, 1]).unwrap()
        }),
    )
    .unwrap();
    type Ham = fn(&[f64]) -> f64;
    type Grad = fn(&[f64]) -> (f64, f64);
    let cases: [(Ham, Grad); 3] = [
        (|x| 0.5 * (x[0] * x[0] + x[1] * x[1]), |x| (x[1], -x[0])),
        (|x| x[0] * x[1], |x| (x[0], -x[1])),
        (|x| x[0].sin() + x[1].cos(), |x| (-x[1].sin(), -x[0].cos())),
    ];
    for (f, grad) in cases {
        let h = HamiltonianForm::new(FormField::new(box2.clone(), 0, move |x: &[f64]| {
            AlternatingForm::constant(2, f(x))
        }));
        let x = [0.37, -0.81];
        let sol = solve_hdw_vector(&sympl, &h, &x, &cfg()).unwrap();
        let (e0, e1) = grad(&x);
        if (sol[0] - e0).abs() >= 1e-10 || (sol[1] - e1).abs() >= 1e-10 {
            failures.push(format!("vector solve {sol:?} vs ({e0}, {e1})"));
        }
    }

    // degeneracy scans: trivial kernel with dH ≠ 0, a critical point of H,
    // and a genuinely degenerate form
    let h_osc = HamiltonianForm::new(FormField::new(box2.clone(), 0, |x: &[f64]| {
        AlternatingForm::constant(2, 0.5 * (x[0] * x[0] + x[1] * x[1]))
    }));
    let scan = degeneracy_scan(&sympl, &h_osc, &[0.5, 0.5], &cfg()).unwrap();
    if scan.kernel_dim != 0 || scan.dh_vanishes {
        failures.push(format!("symplectic scan: {scan:?}"));
    }
    let h_const = HamiltonianForm::new(FormField::new(box2.clone(), 0, |_: &[f64]| {
        AlternatingForm::constant(2, 2.0)
    }));
    let scan = degeneracy_scan(&sympl, &h_const, &[0.5, 0.5], &cfg()).unwrap();
    if !scan.dh_vanishes {
        failures.push(format!("constant-H scan: {scan:?}"));
    }
    let box4 = ChartedDomain::new(vec![(-2.0, 2.0); 4]).unwrap();
    let degenerate = NPlecticManifold::new(
        2,
        FormField::new(box4.clone(), 3, |_: &[f64]| {
            AlternatingForm::basis(4, &[0, 1, 2]).unwrap()
        }),
    )
    .unwrap();
    let h1 = HamiltonianForm::new(FormField::new(box4, 1, |x: &[f64]| {
        let mut f = AlternatingForm::zero(4, 1);
        f.set_coeff(&[0], x[1]);
        f
    }));
    let scan = degeneracy_scan(&degenerate, &h1, &[0.1; 4], &cfg()).unwrap();
    // the degree-1 pairing vector is defined up to the kernel span{∂/∂x⁴}
    if scan.kernel_dim != 1 {
        failures.push(format!("degenerate scan kernel {}", scan.kernel_dim));
    }
    verdict("08 n-plectic specialization", &failures);
}

#[test]
fn criterion_09_action_values() {
    let mut failures = Vec::new();
    let ex = find_example("oscillator").unwrap();
    let sec = ex.exact_sections().remove(0).1;
    let v = ChartedDomain::new(vec![(0.0, 2.0 * std::f64::consts::PI)]).unwrap();
    let a = action(
        &ex.hamiltonian(),
        &sec,
        &v,
        Quadrature::Trapezoid,
        256,
        &cfg(),
    )
    .unwrap();
    if a.abs() >= 1e-6 {
        failures.push(format!("oscillator period action {a:.3e}"));
    }

    let exl = find_example("laplace-example").unwrap();
    let secl = exl.exact_sections().remove(0).1;
    let vl = ChartedDomain::new(vec![(0.0, 1.0); 2]).unwrap();
    let cells = 64usize;
    let h = 1.0 / cells as f64;
    let al = action(
        &exl.hamiltonian(),
        &secl,
        &vl,
        Quadrature::Midpoint,
        cells,
        &cfg(),
    )
    .unwrap();
    if (al - 1.0 / 3.0).abs() >= 5.0 * h * h {
        failures.push(format!("bilinear action {al:.6} vs 1/3"));
    }
    verdict("09 action values", &failures);
}

#[test]
fn criterion_10_cli_determinism_and_roundtrip() {
    let mut failures = Vec::new();
    let bin = env!("CARGO_BIN_EXE_multisym");
    let tmp = tempfile::tempdir().unwrap();
    let problem = tmp.path().join("harmonic.prob");
    std::fs::write(
        &problem,
        "[shape]\nn = 2\nN = 1\n\n[hamiltonian]\nH = 0.5*(p1_1^2 + p1_2^2)\n\n\
         [section]\nq1 = x1*x2\np1_1 = x2\np1_2 = x1\n\n\
         [domain]\nx1 = -0.25, 1.25\nx2 = -0.25, 1.25\n\n[verify]\nbox = 0, 1, 0, 1\n",
    )
    .unwrap();

    // identical problem + seed produce byte-identical reports (modulo the
    // timestamp field)
    let strip = |path: &std::path::Path| -> String {
        std::fs::read_to_string(path)
            .unwrap()
            .lines()
            .filter(|l| !l.contains("\"timestamp\""))
            .collect::<Vec<_>>()
            .join("\n")
    };
    let mut jsons = Vec::new();
    for run in ["a", "b"] {
        let dir = tmp.path().join(run);
        let status = Command::new(bin)
            .args(["verify", "--file"])
            .arg(&problem)
            .args(["--seed", "7", "--out-dir"])
            .arg(&dir)
            .status()
            .unwrap();
        if !status.success() {
            failures.push(format!("verify run {run} exited {status}"));
        }
        jsons.push(strip(&dir.join("harmonic.json")));
        let csv = std::fs::read_to_string(dir.join("harmonic.csv")).unwrap();
        if !csv.starts_with("x1,x2,equation,value") {
            failures.push("CSV header does not follow the x1,..,xn,equation,value schema".into());
        }
    }
    if jsons[0] != jsons[1] {
        failures.push("JSON reports differ between identical runs".into());
    }

    // printing is a fixed point of parse∘print on 1000 random ASTs
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    for i in 0..1000 {
        let ast = random_ast(&mut rng, 3);
        let printed = ast.to_string();
        match multisym::expr::parse_expression(&printed) {
            Ok(reparsed) => {
                if reparsed.to_string() != printed {
                    failures.push(format!("case {i}: `{printed}` vs `{reparsed}`"));
                }
            }
            Err(e) => failures.push(format!("case {i}: `{printed}` failed to parse: {e}")),
        }
    }

    // the full catalog verifies cleanly through the CLI
    for ex in catalog() {
        let status = Command::new(bin)
            .args(["verify", "--example", ex.name])
            .status()
            .unwrap();
        if !status.success() {
            failures.push(format!("catalog verify {} exited {status}", ex.name));
        }
    }
    verdict("10 cli determinism and round trip", &failures);
}

fn random_ast(rng: &mut ChaCha8Rng, depth: usize) -> multisym::expr::Expr {
    use multisym::expr::{BinOp, Expr, Func};
    if depth == 0 || rng.gen_range(0..4) == 0 {
        return if rng.gen::<bool>() {
            Expr::Num([0.0, 1.0, 2.0, 0.5, 3.25, 10.0][rng.gen_range(0..6)])
        } else {
            Expr::Var(["x1", "x2", "q1", "p1_1", "p"][rng.gen_range(0..5)].to_string())
        };
    }
    match rng.gen_range(0..7) {
        0 => Expr::Neg(Box::new(random_ast(rng, depth - 1))),
        1 => Expr::Call(
            [Func::Sin, Func::Cos, Func::Exp, Func::Log, Func::Sqrt][rng.gen_range(0..5)],
            Box::new(random_ast(rng, depth - 1)),
        ),
        k => Expr::Bin(
            [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow][(k - 2) % 5],
            Box::new(random_ast(rng, depth - 1)),
            Box::new(random_ast(rng, depth - 1)),
        ),
    }
}
