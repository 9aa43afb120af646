//! Acceptance criteria: one PASS/FAIL line per criterion.

use std::process::ExitCode;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use smoothmod::bspline::{multiplier, BSplineKernel};
use smoothmod::extremal;
use smoothmod::quadrature::gauss_legendre;
use smoothmod::verify::corpus::random_trig;
use smoothmod::verify::{crossover_alpha, default_corpus, CheckReport, Config, Status, Suite, Verifier};

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

/// All reports of the given ids pass (no fail, no inconclusive).
fn all_pass(reports: &[CheckReport], ids: &[&str]) -> Outcome {
    let sel: Vec<_> = reports.iter().filter(|r| ids.contains(&r.check_id.as_str())).collect();
    let bad: Vec<_> = sel.iter().filter(|r| r.status != Status::Pass).collect();
    let detail = match bad.first() {
        None => format!("{} checks pass", sel.len()),
        Some(r) => format!(
            "{} of {} not passing, e.g. {} {} ({}, margin {:e})",
            bad.len(),
            sel.len(),
            r.check_id,
            r.params_string(),
            r.status,
            r.margin
        ),
    };
    outcome(!sel.is_empty() && bad.is_empty(), detail)
}

fn constants() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in 1..=8u32 {
        for h in [0.5, 0.25, 0.125] {
            let kernel = BSplineKernel::new(h, k).unwrap();
            // piecewise polynomial between the knots (j − k/2)h
            let mut q = 0.0;
            let mut a = 0.0;
            let step = h / 2.0;
            while a < k as f64 * h / 2.0 - 1e-15 {
                q += gauss_legendre(&|u| u * u * kernel.eval(u), a, a + step, 16);
                a += step;
            }
            let c = kernel.second_moment_constant();
            worst = worst.max((c - q).abs() / (h * h));
        }
    }
    let exact = [0.5, 0.25, 0.125].iter().all(|&h| {
        let c1 = BSplineKernel::new(h, 1).unwrap().second_moment_constant();
        let c2 = BSplineKernel::new(h, 2).unwrap().second_moment_constant();
        (c1 - h * h / 24.0).abs() <= 4.0 * f64::EPSILON * c1 && (c2 - h * h / 12.0).abs() <= 4.0 * f64::EPSILON * c2
    });
    outcome(worst <= 1e-10 && exact, format!("max |c_k − quadrature|/h² = {worst:.1e}; c₁, c₂ exact: {exact}"))
}

fn steklov_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let degree = 1 + i % 16;
        let f = random_trig(&mut rng, degree);
        for h in [0.5, 0.2, 1.0 / 16.0, 0.013] {
            let smooth = f.map_multiplier(|j| multiplier(h, 2, j));
            let diff = smooth.derivative(2).sub(&f.second_difference(h).scale(1.0 / (h * h)));
            // Σ|coefficients| bounds the sup norm
            worst = worst.max(diff.derivative_bound(0));
        }
    }
    outcome(worst <= 1e-9, format!("max sup-difference ≤ {worst:.1e}"))
}

fn sharpness(reports: &[CheckReport]) -> Outcome {
    let witnesses = all_pass(reports, &["SHARP"]);
    let mut worst_ratio: f64 = 0.0;
    let mut ok = witnesses.ok;
    for n in [1, 2, 4] {
        let layers = extremal::layers(n, 20).unwrap();
        for (j, layer) in layers.iter().enumerate().skip(1) {
            let norm = extremal::layer_norm(layer, 1e-12);
            let bound = extremal::RATIO.powi(j as i32 - 1);
            ok &= norm.hi <= bound * (1.0 + 1e-12);
            worst_ratio = worst_ratio.max(norm.hi / bound);
        }
    }
    let tail = extremal::tail_bound(40);
    outcome(
        ok,
        format!("{}; max ‖ε_j‖/(2/π)^(j−1) = {worst_ratio:.6} for j ≤ 20; φ₄₀ tail ≤ {tail:.1e}", witnesses.detail),
    )
}

fn crossover() -> Outcome {
    let a = crossover_alpha();
    outcome((a - 0.778).abs() <= 1e-3, format!("α = {a:.9}"))
}

fn theorem3(reports: &[CheckReport]) -> Outcome {
    let sel: Vec<_> = reports.iter().filter(|r| r.check_id.starts_with("T3.")).collect();
    let worst = sel.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min);
    outcome(
        !sel.is_empty() && worst >= -1e-6,
        format!("{} checks, min margin {worst:.3e}", sel.len()),
    )
}

fn and(a: Outcome, b: Outcome) -> Outcome {
    outcome(a.ok && b.ok, format!("{}; {}", a.detail, b.detail))
}

fn main() -> ExitCode {
    let start = std::time::Instant::now();
    let corpus = default_corpus();
    let reports = Verifier::new(Config::default())
        .run_suite(Suite::All, &corpus)
        .expect("full run");

    let criteria: Vec<(&str, Outcome)> = vec![
        ("second-moment constants", constants()),
        ("smoothing identity D²(f*χ_h²) = h⁻²Δ_h²f", steklov_identity()),
        ("Lemma 1 properties, W₂ and W₂*", all_pass(&reports, &["L1.w1", "L1.w2", "L1.w3", "L1.w4", "L1.w5", "L1.w6"])),
        ("Theorem 1 two-sided bounds", all_pass(&reports, &["T1.k2", "T1.k1"])),
        ("Theorem 2 two-sided bounds", all_pass(&reports, &["T2"])),
        ("Theorem 3 Jackson bounds", theorem3(&reports)),
        ("Jackson inequality with sec + tan", all_pass(&reports, &["J.aa"])),
        ("Bernstein–Nikolsky–Stechkin", all_pass(&reports, &["BNS"])),
        ("Favard and weak forms", all_pass(&reports, &["FAV", "WF"])),
        ("sharpness witnesses and layer bounds", sharpness(&reports)),
        ("crossover α", crossover()),
        ("K-functional monotonicity; Lemma 2", and(all_pass(&reports, &["K.mono"]), all_pass(&reports, &["L2"]))),
        ("Corollary chains", all_pass(&reports, &["C1", "C2", "C3"])),
    ];

    let mut failed = 0;
    for (i, (name, o)) in criteria.iter().enumerate() {
        println!("{} criterion {:>2}: {name}: {}", if o.ok { "PASS" } else { "FAIL" }, i + 1, o.detail);
        failed += usize::from(!o.ok);
    }
    println!("{} of {} criteria pass ({:.0?})", criteria.len() - failed, criteria.len(), start.elapsed());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
