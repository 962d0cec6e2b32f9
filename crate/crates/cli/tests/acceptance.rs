//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{
    coefficient_vector, geometry, global_interpolant, green_integral, green_monomial,
    interpolant_dofs, max_abs, max_abs_diff, random_poly, random_polygon, rng, scaled_vertices,
    single_cell_mesh,
};
use nalgebra::{DVector, SymmetricEigen};
use rand::Rng;
use vem_cli::commands::{run_converge, run_cook, run_patch, run_stabsweep, RunOptions, DEFAULT_ALPHA0};
use vem_cli::problems::{ConvergenceTest, PatchTest};
use vem_core::element::{Constitutive, ElementKernel};
use vem_core::meshgen::{voronoi, MeshFamily};
use vem_core::polybasis::{
    divergence_decomposition, eval_divergence, gauss_lobatto, monomial_index, monomial_ordering,
    polygon_moments,
};
use vem_core::polynomial::{Poly2, PolyField};
use vem_core::{
    BoundaryConditions, Discretization, Material, Point2, SolverMode, StabilizationConfig,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn patch_tests() -> Outcome {
    let mut worst = 0.0f64;
    let mut slowest = 0.0f64;
    for test in [PatchTest::Tension, PatchTest::Shear] {
        for k in 1..=3 {
            match run_patch(test, k, &RunOptions::default(), None) {
                Ok(r) => {
                    worst = worst.max(r.max_rel_deviation);
                    slowest = slowest.max(r.seconds);
                }
                Err(e) => return check(false, format!("{} k={k}: {e:#}", test.name())),
            }
        }
    }
    check(
        worst <= 1e-9 && slowest < 5.0,
        format!("max relative stress deviation {worst:.2e} (tol 1e-9), slowest run {slowest:.2}s (limit 5s)"),
    )
}

fn higher_order_patch() -> Outcome {
    let start = Instant::now();
    let mut r = rng(51);
    let mat = Material::plane_strain(7000.0, 0.3).unwrap();
    let mut worst = 0.0f64;
    for k in 1..=4 {
        let field = PolyField {
            u: random_poly(&mut r, k as u32),
            v: random_poly(&mut r, k as u32),
        };
        let meshes = [
            single_cell_mesh(random_polygon(&mut r, 7, false)),
            single_cell_mesh(random_polygon(&mut r, 8, true)),
            voronoi(16, 20, 5).unwrap(),
        ];
        for mesh in meshes {
            let disc = Discretization::new(mesh, k, mat, StabilizationConfig::default()).unwrap();
            let [bx, by] = field.body_load(&mat.c);
            let f = field.clone();
            let bcs = BoundaryConditions::new().dirichlet(|_| true, [true, true], move |p| f.displacement(p));
            let body = move |p: Point2| [bx.at(p), by.at(p)];
            let sol = match disc.solve(Some(&body), &bcs, SolverMode::Direct) {
                Ok(s) => s,
                Err(e) => return check(false, format!("k={k}: {e}")),
            };
            let exact = global_interpolant(&disc, &field);
            worst = worst.max(max_abs_diff(&sol.values, &exact) / max_abs(&exact));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-8 && secs < 30.0,
        format!("max relative dof deviation {worst:.2e} (tol 1e-8), {secs:.2}s (limit 30s)"),
    )
}

fn convergence_rates() -> Outcome {
    let start = Instant::now();
    let opts = RunOptions::default();
    let cases = [
        (ConvergenceTest::Polynomial, MeshFamily::Squares),
        (ConvergenceTest::Polynomial, MeshFamily::DistortedConcave),
        (ConvergenceTest::Polynomial, MeshFamily::Trapezoids),
        (ConvergenceTest::Trigonometric, MeshFamily::NonuniformQuads),
        (ConvergenceTest::Trigonometric, MeshFamily::Triangles),
        (ConvergenceTest::Trigonometric, MeshFamily::Hexagons),
        (ConvergenceTest::Trigonometric, MeshFamily::Voronoi),
    ];
    let mut failures = Vec::new();
    let mut worst_gap = 0.0f64;
    for (test, family) in cases {
        for k in 1..=2 {
            let r = match run_converge(test, family, k, 4, 8, &opts, None) {
                Ok(r) => r,
                Err(e) => return check(false, format!("{} {family} k={k}: {e:#}", test.name())),
            };
            for (name, slope) in [("D1", r.slope_d1), ("D2", r.slope_d2)] {
                let gap = (slope - k as f64).abs();
                worst_gap = worst_gap.max(gap);
                if gap.is_nan() || gap > 0.2 {
                    failures.push(format!("{} {family} k={k} {name} slope {slope:.3}", test.name()));
                }
            }
        }
    }
    let mut floor = 0.0f64;
    for family in [MeshFamily::Squares, MeshFamily::DistortedConcave, MeshFamily::Trapezoids] {
        match run_converge(ConvergenceTest::Polynomial, family, 3, 4, 8, &opts, None) {
            Ok(r) => floor = r.rows.iter().map(|row| row.d1).fold(floor, f64::max),
            Err(e) => return check(false, format!("2a {family} k=3: {e:#}")),
        }
    }
    if floor.is_nan() || floor > 1e-8 {
        failures.push(format!("2a k=3 D1 floor {floor:.2e}"));
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 180.0 {
        failures.push(format!("runtime {secs:.1}s"));
    }
    check(
        failures.is_empty(),
        format!(
            "worst |slope - k| {worst_gap:.3} (tol 0.2), 2a k=3 max D1 {floor:.2e} (tol 1e-8), {secs:.1}s (limit 180s){}",
            if failures.is_empty() { String::new() } else { format!("; failing: {}", failures.join(", ")) }
        ),
    )
}

fn stabilization_insensitivity() -> Outcome {
    let families = [
        MeshFamily::Triangles,
        MeshFamily::NonuniformQuads,
        MeshFamily::Voronoi,
        MeshFamily::VoronoiRandom,
    ];
    let mut worst = (0.0f64, String::new());
    for family in families {
        for k in 1..=2 {
            match run_stabsweep(family, k, 16, &DEFAULT_ALPHA0, &RunOptions::default(), None) {
                Ok(r) if r.ratio > worst.0 || r.ratio.is_nan() => worst = (r.ratio, format!("{family} k={k}")),
                Ok(_) => {}
                Err(e) => return check(false, format!("{family} k={k}: {e:#}")),
            }
        }
    }
    check(
        worst.0 < 10.0,
        format!("largest max/min D1 ratio {:.3} on {} (limit 10)", worst.0, worst.1),
    )
}

fn cooks_membrane() -> Outcome {
    let start = Instant::now();
    let opts = RunOptions::default();
    let (quads, vor) = match (
        run_cook(MeshFamily::NonuniformQuads, 2, 6, 2, &opts, None),
        run_cook(MeshFamily::Voronoi, 2, 6, 2, &opts, None),
    ) {
        (Ok(q), Ok(v)) => (q, v),
        (Err(e), _) | (_, Err(e)) => return check(false, format!("{e:#}")),
    };
    let (Some(lq), Some(lv)) = (quads.extrapolation, vor.extrapolation) else {
        return check(false, "Richardson extrapolation failed");
    };
    let finest = quads.rows.last().unwrap().v_a;
    let self_gap = ((finest - lq.limit) / lq.limit).abs();
    let cross_gap = ((lv.limit - lq.limit) / lq.limit).abs();
    let monotone = quads.is_monotone_increasing();
    let secs = start.elapsed().as_secs_f64();
    check(
        monotone && self_gap <= 5e-3 && cross_gap <= 1e-2 && secs < 120.0,
        format!(
            "quad vA monotone: {monotone}, finest {finest:.5} vs limit {:.5} ({:.3}%, tol 0.5%), voronoi limit {:.5} ({:.3}%, tol 1%), {secs:.1}s (limit 120s)",
            lq.limit,
            100.0 * self_gap,
            lv.limit,
            100.0 * cross_gap
        ),
    )
}

fn scaled_strain(u: &Poly2, v: &Poly2, h: f64) -> [Poly2; 3] {
    [
        u.dx().scale(1.0 / h),
        v.dy().scale(1.0 / h),
        (&u.dy() + &v.dx()).scale(1.0 / h),
    ]
}

fn element_properties() -> Outcome {
    let mut r = rng(31);
    let stab = StabilizationConfig::default();
    // worst ratio of measured error to its tolerance, per property
    let mut ratio = [0.0f64; 5];
    let mut kernel_ok = true;
    for k in 1..=3 {
        let kernel = ElementKernel::new(k);
        for i in 0..200 {
            let m = r.random_range(3..=10);
            let g = geometry(&random_polygon(&mut r, m, i % 2 == 1));
            let mat = Material::from_lame(r.random_range(0.1..10.0), r.random_range(0.1..10.0)).unwrap();
            let em = match kernel.build(&g, &Constitutive::Uniform(mat), stab) {
                Ok(em) => em,
                Err(e) => return check(false, format!("k={k} polygon {i}: {e}")),
            };
            let tr = em.k.trace();
            ratio[0] = ratio[0].max((&em.k - em.k.transpose()).amax() / (1e-13 * tr));
            let eig = SymmetricEigen::new(em.k.clone()).eigenvalues;
            kernel_ok &= eig.iter().filter(|l| l.abs() < 1e-10 * tr).count() == 3;
            ratio[1] = ratio[1].max((&em.ks * &em.d).amax() / (1e-12 * tr));

            let nodes = kernel.boundary_nodes(&g);
            let (pu, pv) = (random_poly(&mut r, k as u32), random_poly(&mut r, k as u32));
            let (qu, qv) = (random_poly(&mut r, k as u32), random_poly(&mut r, k as u32));
            let dp = DVector::from_vec(interpolant_dofs(&g, k, &nodes, &pu, &pv));
            let dq = DVector::from_vec(interpolant_dofs(&g, k, &nodes, &qu, &qv));
            let pc = DVector::from_vec(coefficient_vector(&pu, &pv, k));
            ratio[2] = ratio[2].max((&em.d * &pc - &dp).amax() / (1e-12 * dp.amax()));

            let h = g.diameter;
            let eps = scaled_strain(&pu, &pv, h);
            let mut exact = DVector::zeros(em.pi.nrows());
            for (t, e) in eps.iter().enumerate() {
                for ((a, b), c) in e.terms() {
                    exact[3 * monomial_index(a as usize, b as usize) + t] += c;
                }
            }
            let pdiff = (&em.pi * &dp - &exact).amax();
            ratio[3] = ratio[3].max(pdiff / (1e-10 * exact.amax().max(1.0 / h)));

            let epq = scaled_strain(&qu, &qv, h);
            let pts = scaled_vertices(&g);
            let mut analytic = 0.0;
            for s in 0..3 {
                for t in 0..3 {
                    analytic += mat.c[(s, t)] * green_integral(&pts, &(&eps[s] * &epq[t]));
                }
            }
            analytic *= h * h;
            let discrete = dp.dot(&(&em.k * &dq));
            let scale = (dp.dot(&(&em.k * &dp)) * dq.dot(&(&em.k * &dq))).sqrt();
            ratio[4] = ratio[4].max((discrete - analytic).abs() / (1e-9 * scale.max(analytic.abs())));
        }
    }
    let pass = kernel_ok && ratio.iter().all(|r| *r <= 1.0);
    check(
        pass,
        format!(
            "600 elements; error/tolerance: symmetry {:.2}, K_S D {:.2}, D map {:.2}, projection {:.2}, energy {:.2}; kernel dimension 3: {kernel_ok}",
            ratio[0], ratio[1], ratio[2], ratio[3], ratio[4]
        ),
    )
}

fn quadrature_oracles() -> Outcome {
    let mut r = rng(21);
    let mut moment = 0.0f64;
    for i in 0..50 {
        let m = r.random_range(3..=10);
        let g = geometry(&random_polygon(&mut r, m, i % 2 == 0));
        let table = polygon_moments(&g, 6);
        let scaled = scaled_vertices(&g);
        let h2 = g.diameter * g.diameter;
        for &(a, b) in &monomial_ordering(6).entries {
            let oracle = h2 * green_monomial(&scaled, a as u32, b as u32);
            let size = h2 * green_monomial(&scaled, (a + b + (a + b) % 2) as u32, 0).abs();
            moment = moment.max((table.get(a, b) - oracle).abs() / size.max(oracle.abs()));
        }
    }
    let mut lobatto = 0.0f64;
    for p in 2..=6 {
        let rule = gauss_lobatto(p);
        for d in 0..=(2 * p - 3) {
            let exact = if d % 2 == 0 { 2.0 / (d + 1) as f64 } else { 0.0 };
            let q: f64 = rule.nodes.iter().zip(&rule.weights).map(|(x, w)| w * x.powi(d as i32)).sum();
            lobatto = lobatto.max((q - exact).abs());
        }
    }
    let mut recon = 0.0f64;
    for k in 1..=4 {
        let d = divergence_decomposition(k);
        for _ in 0..50 {
            let (xi, eta) = (r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
            recon = recon.max((d.reconstruct(xi, eta) - eval_divergence(k, xi, eta)).amax());
        }
    }
    check(
        moment <= 1e-11 && lobatto <= 1e-13 && recon <= 1e-12,
        format!(
            "moments vs Green {moment:.2e} (tol 1e-11), Lobatto exactness {lobatto:.2e} (tol 1e-13), divergence reconstruction {recon:.2e} (tol 1e-12)"
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("patch tests", patch_tests),
        ("higher-order patch", higher_order_patch),
        ("convergence rates", convergence_rates),
        ("stabilization insensitivity", stabilization_insensitivity),
        ("Cook's membrane", cooks_membrane),
        ("element properties", element_properties),
        ("quadrature and basis oracles", quadrature_oracles),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!(
            "[{verdict}] {}. {name}: {} [{:.1}s]",
            i + 1,
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
        failed += usize::from(!outcome.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
