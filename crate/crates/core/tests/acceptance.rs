//! Desk-scale acceptance run: 201 x 201 grid, T = 3, CFL 0.5.
//!
//! Prints one PASS/FAIL line per criterion and exits non-zero if any fails.
//! The four reconstruction series run on separate threads.

use std::thread;

use tat_core::media::{build_phantom, build_sound_speed, DEFAULT_BLUR_RADIUS, DEFAULT_TAPER_WIDTH};
use tat_core::raygeo::{estimate_t0, estimate_t1};
use tat_core::reconstruct::{contraction_ratio, measure, neumann_series, time_reverse};
use tat_core::wave::{box_extended_energy_series, forward_solve};
use tat_core::{AttenuationParams, Grid2D, Medium, ScalarField2D, SolveConfig, Variant, WavePair};

const N: usize = 201;

struct Outcome {
    id: u32,
    title: &'static str,
    passed: bool,
    detail: String,
}

fn outcome(id: u32, title: &'static str, passed: bool, detail: String) -> Outcome {
    Outcome { id, title, passed, detail }
}

struct Case {
    grid: Grid2D,
    medium: Medium,
    phantom: ScalarField2D,
    cfg: SolveConfig,
}

impl Case {
    fn new(params: &AttenuationParams) -> Self {
        let grid = Grid2D::square(N, 1.0).unwrap();
        Self {
            grid,
            medium: Medium::standard(&grid, params).unwrap(),
            phantom: build_phantom(&grid, DEFAULT_BLUR_RADIUS).unwrap(),
            cfg: SolveConfig::default(),
        }
    }

    fn errors(&self, medium: &Medium, variant: Variant, n_terms: usize) -> Vec<f64> {
        let h = measure(&medium.tat_data(&self.phantom).unwrap(), medium, &self.cfg).unwrap();
        neumann_series(&h, medium, &self.cfg, variant, n_terms, Some(&self.phantom)).unwrap().errors_percent
    }
}

fn fmt_terms(errors: &[f64], terms: &[usize]) -> String {
    terms.iter().map(|&m| format!("e{m}={:.2}%", errors[m - 1])).collect::<Vec<_>>().join(" ")
}

fn criterion_1(ex1_sf: &[f64]) -> Outcome {
    let first = ex1_sf[0];
    let last = ex1_sf[99];
    let worst_rise = ex1_sf[4..].windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let passed = (50.0..=100.0).contains(&first) && last <= 20.0 && worst_rise <= 0.0;
    outcome(
        1,
        "example 1 sign-flipped: 1 term in [50, 100]%, 100 terms <= 20%, monotone from term 5",
        passed,
        format!("{} largest rise after term 5 {worst_rise:.2e}", fmt_terms(ex1_sf, &[1, 5, 10, 50, 100])),
    )
}

fn criterion_2(ex1_homan: &[f64]) -> Outcome {
    outcome(
        2,
        "example 1 Homan: error at term 4 exceeds error at term 1",
        ex1_homan[3] > ex1_homan[0],
        fmt_terms(ex1_homan, &[1, 2, 3, 4]),
    )
}

fn criterion_3(ex2_homan: &[f64], ex2_sf: &[f64]) -> Outcome {
    let passed = ex2_homan[7] <= 15.0 && ex2_homan[7] < ex2_homan[0] && ex2_sf[99] <= 20.0;
    outcome(
        3,
        "example 2: Homan term 8 <= 15% and below term 1; sign-flipped term 100 <= 20%",
        passed,
        format!("homan {} | signflip {}", fmt_terms(ex2_homan, &[1, 8]), fmt_terms(ex2_sf, &[1, 100])),
    )
}

fn criterion_4(ex2_homan: &[f64], ex2_sf: &[f64]) -> Outcome {
    outcome(
        4,
        "example 2: Homan beats sign-flipped at term 8",
        ex2_homan[7] < ex2_sf[7],
        format!("homan {:.3}% signflip {:.3}%", ex2_homan[7], ex2_sf[7]),
    )
}

fn criterion_5(ex2: &Case) -> Outcome {
    let data = ex2.medium.tat_data(&ex2.phantom).unwrap();
    let r = contraction_ratio(&data, &ex2.medium, &ex2.cfg, Variant::SignFlipped).unwrap();
    let strong = ex2.medium.with_attenuation_scaled(4.0).unwrap();
    let data4 = strong.tat_data(&ex2.phantom).unwrap();
    let r4 = contraction_ratio(&data4, &strong, &ex2.cfg, Variant::SignFlipped).unwrap();
    outcome(
        5,
        "example 2 sign-flipped contraction ratio < 1 and grows with 4a",
        r < 1.0 && r4 > r,
        format!("ratio {r:.4}, with 4a {r4:.4}"),
    )
}

fn criterion_6(ex1: &Case) -> Outcome {
    let data = ex1.medium.tat_data(&ex1.phantom).unwrap();
    let run = forward_solve(&data, &ex1.medium, &ex1.cfg).unwrap();
    let e0 = run.energy_series[0];
    let worst = run.energy_series.windows(2).map(|w| (w[1] - w[0]) / (e0 * run.dt)).fold(f64::NEG_INFINITY, f64::max);
    let monotone = worst <= 1e-3;

    let big = SolveConfig { pml_cells: 0, box_margin: 3.0, ..ex1.cfg };
    let closed = forward_solve(&data, &ex1.medium, &big).unwrap();
    let ext = box_extended_energy_series(&closed).unwrap();
    let drift = ext.iter().map(|e| (e - ext[0]).abs()).fold(0.0, f64::max) / ext[0];
    let last = closed.box_energy_series.as_ref().unwrap().last().copied().unwrap();
    outcome(
        6,
        "energy: E_Omega non-increasing (1e-3 per unit time); extended energy on large box within 1%",
        monotone && drift <= 0.01,
        format!(
            "largest E_Omega rise {worst:.2e}/unit time; extended drift {drift:.2e} (box energy {:.3} -> {last:.3}, dissipated {:.3})",
            ext[0],
            closed.damping_series.last().unwrap()
        ),
    )
}

fn criterion_7(ex1: &Case) -> Outcome {
    let m0 = ex1.medium.undamped();
    let h = measure(&m0.tat_data(&ex1.phantom).unwrap(), &m0, &ex1.cfg).unwrap();
    let sf = time_reverse(&h, &m0, &ex1.cfg, Variant::SignFlipped).unwrap();
    let homan = time_reverse(&h, &m0, &ex1.cfg, Variant::Homan).unwrap();
    let gap = sf.sub(&homan).unwrap().max_abs();
    let errors = ex1.errors(&m0, Variant::SignFlipped, 8);
    outcome(
        7,
        "a = 0: variants agree to 1e-12 and the series error at term 8 < 5%",
        gap <= 1e-12 && errors[7] < 5.0,
        format!("max gap {gap:.2e}; {}", fmt_terms(&errors, &[1, 8])),
    )
}

fn criterion_8(ex1: &Case) -> Outcome {
    let flat = ScalarField2D::constant(ex1.grid, 1.0);
    let t0_flat = estimate_t0(&flat, 64, 64, 0.01).unwrap();
    let t1_flat = estimate_t1(&flat, N).unwrap();
    let diag = 2.0 * 2f64.sqrt();
    let c = ex1.medium.c();
    let t0 = estimate_t0(c, 64, 64, 0.01).unwrap();
    let t1 = estimate_t1(c, N).unwrap();
    let passed = (t0_flat - diag).abs() <= 0.01 * diag && (t1_flat - 1.0).abs() <= 0.01 && t0 < 3.0 && 2.0 * t1 < t0;
    outcome(
        8,
        "geometry: c = 1 gives T0 = 2 sqrt 2 and T1 = 1 within 1%; medium has 2 T1 < T0 < 3",
        passed,
        format!("flat T0 {t0_flat:.5} T1 {t1_flat:.5}; medium T0 {t0:.5} T1 {t1:.5}"),
    )
}

fn criterion_9() -> Outcome {
    let cfg = SolveConfig { t_final: 0.5, pml_cells: 0, box_margin: 0.6, ..SolveConfig::default() };
    let bump = |x: f64, y: f64, cx: f64, cy: f64, w: f64| {
        let r2 = ((x - cx).powi(2) + (y - cy).powi(2)) / (w * w);
        if r2 < 1.0 { (1.0 - r2).powi(4) } else { 0.0 }
    };
    let solve = |n: usize| {
        let grid = Grid2D::square(n, 1.0).unwrap();
        let c = build_sound_speed(&grid, DEFAULT_TAPER_WIDTH).unwrap();
        let a = ScalarField2D::from_fn(grid, |x, y| 2.0 * bump(x, y, 0.1, 0.0, 0.6)).unwrap();
        let medium = Medium::new(c, a).unwrap();
        let u = ScalarField2D::from_fn(grid, |x, y| bump(x, y, -0.1, 0.1, 0.3)).unwrap();
        let f = WavePair::new(u, ScalarField2D::zeros(grid)).unwrap();
        forward_solve(&f, &medium, &cfg).unwrap().final_state.u().clone()
    };
    let reference = solve(641);
    let error = |n: usize| {
        let coarse = solve(n);
        let stride = 640 / (n - 1);
        let mut sum = 0.0;
        for j in 0..n {
            for i in 0..n {
                sum += (coarse.get(i, j) - reference.get(i * stride, j * stride)).powi(2);
            }
        }
        (sum / (n * n) as f64).sqrt()
    };
    let errs: Vec<f64> = [41, 81, 161].into_iter().map(error).collect();
    let ratios = [errs[0] / errs[1], errs[1] / errs[2]];
    outcome(
        9,
        "second order: error falls by 3.4 to 4.6 per grid halving",
        ratios.iter().all(|r| (3.4..=4.6).contains(r)),
        format!("rms errors {:.3e} {:.3e} {:.3e}; ratios {:.3} {:.3}", errs[0], errs[1], errs[2], ratios[0], ratios[1]),
    )
}

fn main() {
    let ex1 = Case::new(&AttenuationParams::example1());
    let ex2 = Case::new(&AttenuationParams::example2());

    let mut results = thread::scope(|s| {
        let ex1_sf = s.spawn(|| ex1.errors(&ex1.medium, Variant::SignFlipped, 100));
        let ex2_sf = s.spawn(|| ex2.errors(&ex2.medium, Variant::SignFlipped, 100));
        let ex1_homan = s.spawn(|| ex1.errors(&ex1.medium, Variant::Homan, 4));
        let ex2_homan = s.spawn(|| ex2.errors(&ex2.medium, Variant::Homan, 8));
        let c5 = s.spawn(|| criterion_5(&ex2));
        let c6 = s.spawn(|| criterion_6(&ex1));
        let c7 = s.spawn(|| criterion_7(&ex1));
        let c8 = s.spawn(|| criterion_8(&ex1));
        let c9 = s.spawn(criterion_9);

        let (ex1_homan, ex2_homan) = (ex1_homan.join().unwrap(), ex2_homan.join().unwrap());
        let (ex1_sf, ex2_sf) = (ex1_sf.join().unwrap(), ex2_sf.join().unwrap());
        vec![
            criterion_1(&ex1_sf),
            criterion_2(&ex1_homan),
            criterion_3(&ex2_homan, &ex2_sf),
            criterion_4(&ex2_homan, &ex2_sf),
            c5.join().unwrap(),
            c6.join().unwrap(),
            c7.join().unwrap(),
            c8.join().unwrap(),
            c9.join().unwrap(),
        ]
    });
    results.sort_by_key(|o| o.id);

    let mut failed = 0;
    for o in &results {
        println!("{} criterion {}: {} [{}]", if o.passed { "PASS" } else { "FAIL" }, o.id, o.title, o.detail);
        failed += usize::from(!o.passed);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
