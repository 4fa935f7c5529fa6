use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use needleseek::experiments::simulate_discretized;
use needleseek_core::accel::{run_accel, AccelParams};
use needleseek_core::needleapprox::{many_needles_estimate, many_needles_limit, two_needle_estimate};
use needleseek_core::objective::{abs_cubed_objective, quadratic_objective, Objective};
use needleseek_core::quadratic::{
    fixed_points, iterate_closed_form, phi_closed_form, root_residual, xstar_closed_form, QuadraticCase, Stability,
};
use needleseek_core::signals::{trig_pair, two_needle_u1, two_needle_u2, NeedleSpec};
use needleseek_core::sim::{integrate_ode, perturbed_solution, SolverConfig, Trajectory};
use needleseek_core::variational::{stm, TransitionEvaluator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 0x5eed_2024;

struct Report {
    failures: usize,
}

impl Report {
    fn line(&mut self, id: &str, ok: bool, detail: String) {
        if !ok {
            self.failures += 1;
        }
        println!("{} {id}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
}

fn sci(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.4e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn ratios(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| w[0] / w[1]).collect()
}

fn within(values: &[f64], lo: f64, hi: f64) -> bool {
    values.iter().all(|r| (lo..=hi).contains(r))
}

fn quad() -> Objective<f64> {
    quadratic_objective(2.0, 3.0)
}

fn criterion_1(r: &mut Report) {
    let f = quad();
    let epsilons = [1e-3, 5e-4, 2.5e-4];
    let errors: Vec<f64> = epsilons
        .iter()
        .map(|&eps| {
            let spec = NeedleSpec::new(1.3, eps, -10.0).unwrap();
            let est = two_needle_estimate(&f, &spec, -1.0, &SolverConfig::for_needles(&spec).unwrap()).unwrap();
            let sim = perturbed_solution(&f, &spec, -1.0, 1, &SolverConfig::rk4(eps / 50.0)).unwrap();
            (est.value - sim.last_state()[0]).abs()
        })
        .collect();
    let q = ratios(&errors);
    r.line(
        "1 two-needle estimate error ratios in [3, 5]",
        within(&q, 3.0, 5.0),
        format!("errors {}, ratios {q:.4?}", sci(&errors)),
    );
}

fn criterion_2(r: &mut Report) {
    let f = quad();
    let (alpha, x0) = (1.0, 0.0);
    let epsilons = [2e-2, 1e-2, 5e-3];
    let mut sim_errors = Vec::new();
    let mut bracket_errors = Vec::new();
    for &eps in &epsilons {
        let spec = NeedleSpec::new(8.0 * eps, eps, alpha).unwrap();
        let cfg = SolverConfig::rk4(eps / 100.0);
        let est = two_needle_estimate(&f, &spec, x0, &cfg).unwrap();
        let sim = perturbed_solution(&f, &spec, x0, 1, &cfg).unwrap();
        sim_errors.push((est.value - sim.last_state()[0]).abs());
        let bracket = x0 + 2.0 * eps * eps * alpha * f.grad1(x0);
        bracket_errors.push((est.value - bracket).abs());
    }
    let q = ratios(&sim_errors);
    r.line(
        "2a eight-epsilon period estimate error ratios in [6, 10]",
        within(&q, 6.0, 10.0),
        format!("errors {}, ratios {q:.4?}", sci(&sim_errors)),
    );
    let q = ratios(&bracket_errors);
    let constants: Vec<f64> = bracket_errors.iter().zip(&epsilons).map(|(e, eps)| e / eps.powi(3)).collect();
    r.line(
        "2b estimate minus x0 + 2 eps^2 alpha dF(x0) scales as eps^3 (ratios in [6, 10])",
        within(&q, 6.0, 10.0),
        format!("errors {}, ratios {q:.4?}, C = err/eps^3 {constants:.4?}", sci(&bracket_errors)),
    );
}

fn criterion_3(r: &mut Report) {
    let f = quad();
    let spec = NeedleSpec::new(0.04, 0.01, -10.0).unwrap();
    let est = two_needle_estimate(&f, &spec, -1.0, &SolverConfig::rk4(1e-4)).unwrap();
    r.line(
        "3 T = 4 eps gives a first-order term of exactly 0",
        est.first_order_term == 0.0,
        format!("first_order_term = {:e}", est.first_order_term),
    );
}

fn criterion_4(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (period, eps, h, span) = (1.3, 1e-3, 1e-5, 0.65);
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut worst_x = 0.0f64;
    let mut worst_phi = 0.0f64;
    for _ in 0..10 {
        let b: f64 = rng.gen_range(-3.0..=3.0);
        let d: f64 = rng.gen_range(0.5..=20.0);
        let c = (d + b * b) / 4.0;
        let q = QuadraticCase::new(b, c);
        let p = q.p();
        let lo = -half_pi + 0.3 + p * eps;
        let hi = half_pi - 0.3 - p * (period / 2.0 - eps);
        let theta0: f64 = rng.gen_range(lo..hi);
        let x_j = (d.sqrt() * theta0.tan() - b) / 2.0;
        let f = quadratic_objective(b, c);
        let start = xstar_closed_form(&q, 0.0, 0, x_j, period, eps).unwrap();
        let traj = integrate_ode(|_, x: &[f64], out: &mut [f64]| out[0] = f.eval1(x[0]), &[start], span, &SolverConfig::rk4(h))
            .unwrap();
        let ev = TransitionEvaluator::new(Arc::new(traj), &f, None).unwrap();
        for i in 0..=100 {
            let t = span * i as f64 / 100.0;
            let k = ev.index(t).unwrap();
            let x_closed = xstar_closed_form(&q, t, 0, x_j, period, eps).unwrap();
            worst_x = worst_x.max((ev.base().x(k) - x_closed).abs() / x_closed.abs());
            let phi_closed = phi_closed_form(&q, t, eps, 0, x_j, period, eps).unwrap();
            let phi_num = stm(&ev, t, eps).unwrap();
            worst_phi = worst_phi.max((phi_num - phi_closed).abs() / phi_closed.abs());
        }
    }
    r.line(
        "4a closed-form x* matches rk4 within 1e-6 relative (10 random cases)",
        worst_x < 1e-6,
        format!("max relative error {worst_x:.3e}"),
    );
    r.line(
        "4b closed-form transition value matches numeric value within 1e-6 relative",
        worst_phi < 1e-6,
        format!("max relative error {worst_phi:.3e}"),
    );
}

fn criterion_5(r: &mut Report) {
    let (period, eps, alpha) = (1.3, 1e-5, -10.0);
    let q = QuadraticCase::new(2.0, 3.0);
    let fp = fixed_points(&q, period, eps, alpha).unwrap();
    let residuals: Vec<f64> = fp.roots().iter().map(|&x| root_residual(&q, period, eps, x).unwrap()).collect();
    r.line(
        "5a both roots have |1 - Phi| < 1e-9",
        residuals.iter().all(|v| v.abs() < 1e-9),
        format!("roots {:?}, residuals {}", fp.roots(), sci(&residuals)),
    );
    let stable: Vec<f64> = fp
        .roots()
        .iter()
        .zip(fp.stability)
        .filter(|(_, s)| *s == Stability::Stable)
        .map(|(&x, _)| x)
        .collect();
    r.line(
        "5b exactly one root is stable",
        stable.len() == 1,
        format!("stability {:?}", fp.stability),
    );
    let target = stable.first().copied().unwrap_or(f64::NAN);
    let k = 200_000;
    let xs = iterate_closed_form(&q, period, eps, alpha, -1.0, k).unwrap();
    let reached = xs.iter().position(|x| (x - target).abs() < 1e-3);
    let last = *xs.last().unwrap();
    r.line(
        "5c closed-form iteration from -1 lands within 1e-3 of the stable root",
        (last - target).abs() < 1e-3,
        format!(
            "first within 1e-3 at period {:?}, x({k} T) = {last:.9}, distance {:.3e}",
            reached.map(|i| i + 1),
            (last - target).abs()
        ),
    );
    let x_min = q.x_min();
    let gaps: Vec<f64> = fp.roots().iter().map(|x| (x - x_min).abs()).collect();
    r.line(
        "5d neither root lies within 0.1 of the minimizer -1",
        gaps.iter().all(|&g| g > 0.1),
        format!("distances {gaps:.4?}"),
    );
}

fn criterion_6(r: &mut Report) {
    let f = quad();

    let spec = NeedleSpec::new(1.3, 1e-3, -10.0).unwrap();
    let cfg = SolverConfig::for_needles(&spec).unwrap();
    let two = two_needle_estimate(&f, &spec, -1.0, &cfg).unwrap();
    let many = many_needles_estimate(&f, &two_needle_u1(&spec), &two_needle_u2(&spec), 1300, -1.0, &cfg).unwrap();
    let gap = (two.value - many.value).abs();
    r.line(
        "6a many-needle sum with the two-needle pair reproduces the two-needle estimate within 1e-8",
        gap < 1e-8,
        format!("|difference| = {gap:.3e}"),
    );

    let (u1, u2) = trig_pair(1.0).unwrap();
    let ns = [16usize, 64, 256];
    let gaps_at = |x0: f64| -> Vec<f64> {
        let limit = many_needles_limit(&f, &u1, &u2, x0, &SolverConfig::rk4(1.0 / 102_400.0)).unwrap();
        ns.iter()
            .map(|&n| {
                let est = many_needles_estimate(&f, &u1, &u2, n, x0, &SolverConfig::rk4(1.0 / (n as f64 * 400.0))).unwrap();
                (est.value - limit.value).abs()
            })
            .collect()
    };
    let gaps = gaps_at(-1.0);
    r.line(
        "6b trig pair, x0 = -1: |finite-N - limit| decreases over N = 16, 64, 256",
        gaps.windows(2).all(|w| w[1] < w[0]),
        format!("gaps {}", sci(&gaps)),
    );
    let info = gaps_at(0.0);
    println!("INFO 6b trig pair, x0 = 0: gaps {}", sci(&info));

    let ns = [16usize, 32, 64];
    let errors: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let cfg = SolverConfig::rk4(1.0 / (n as f64 * 200.0));
            let est = many_needles_estimate(&f, &u1, &u2, n, -1.0, &cfg).unwrap();
            let sim = simulate_discretized(&f, &u1, &u2, n, -1.0, &cfg).unwrap();
            (est.value - sim.last_state()[0]).abs()
        })
        .collect();
    let q = ratios(&errors);
    r.line(
        "6c finite-N estimate vs discretized-dither simulation, error ratios in [3, 5]",
        within(&q, 3.0, 5.0),
        format!("errors {}, ratios {q:.4?}", sci(&errors)),
    );
}

struct AccelCheck {
    worst_increase: f64,
    worst_z1: f64,
    worst_z2: f64,
}

fn accel_sweep(f: &Objective<f64>, z_star: f64, states: &[[f64; 2]]) -> AccelCheck {
    let params = AccelParams::hybrid(2.0, 1.0, 1.0, 1.0);
    let cfg = SolverConfig::rk4(1e-3);
    let mut out = AccelCheck {
        worst_increase: f64::NEG_INFINITY,
        worst_z1: 0.0,
        worst_z2: 0.0,
    };
    for z0 in states {
        let (tr, v) = run_accel(f, &params, z0, 50.0, &cfg).unwrap();
        for w in v.values.windows(2) {
            out.worst_increase = out.worst_increase.max((w[1] - w[0]) / (1.0 + w[0]));
        }
        let z = tr.last_state();
        out.worst_z1 = out.worst_z1.max((z[0] - z_star).abs());
        out.worst_z2 = out.worst_z2.max(z[1].abs());
    }
    out
}

fn random_states(n: usize) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    (0..n).map(|_| [rng.gen_range(-5.0..=5.0), rng.gen_range(-5.0..=5.0)]).collect()
}

fn criterion_7(r: &mut Report) {
    let states = random_states(20);
    for (name, f, z_star) in [("quadratic(2, 3)", quad(), -1.0), ("|x|^3", abs_cubed_objective(), 0.0)] {
        let c = accel_sweep(&f, z_star, &states);
        r.line(
            &format!("7 {name}: V nonincreasing per rk4 step (slack 1e-9 (1 + V))"),
            c.worst_increase <= 1e-9,
            format!("largest relative step increase {:.3e}", c.worst_increase),
        );
        r.line(
            &format!("7 {name}: |z1 - z*|, |z2| < 1e-3 at t = 50"),
            c.worst_z1 < 1e-3 && c.worst_z2 < 1e-3,
            format!("max |z1 - z*| = {:.3e}, max |z2| = {:.3e}", c.worst_z1, c.worst_z2),
        );
    }
}

fn criterion_8(r: &mut Report) {
    let f = quad();
    let hybrid = AccelParams::hybrid(2.0, 1.0, 1.0, 1.0);
    let nesterov = hybrid.matched_nesterov();
    let cfg = SolverConfig::rk4(1e-3);
    let mut worst = 0.0f64;
    for z0 in random_states(20) {
        let (a, _) = run_accel(&f, &hybrid, &z0, 20.0, &cfg).unwrap();
        let (b, _) = run_accel(&f, &nesterov, &z0, 20.0, &cfg).unwrap();
        for (sa, sb) in a.states().zip(b.states()) {
            worst = worst.max((sa[0] - sb[0]).abs()).max((sa[1] - sb[1]).abs());
        }
    }
    r.line(
        "8 hybrid and matched Nesterov agree pointwise within 1e-9 on the quadratic",
        worst <= 1e-9,
        format!("max |difference| = {worst:.3e}"),
    );
}

fn first_below(tr: &Trajectory<f64>, level: f64) -> Option<f64> {
    (0..tr.len()).find(|&k| tr.x(k).abs() < level).map(|k| tr.time(k))
}

fn criterion_9(r: &mut Report) {
    let f = abs_cubed_objective();
    let hybrid = AccelParams::hybrid(2.0, 1.0, 1.0, 1.0);
    let heavy = hybrid.matched_heavy_ball();
    let cfg = SolverConfig::euler(1e-3);
    let (h_tr, _) = run_accel(&f, &hybrid, &[1.0, 0.0], 20.0, &cfg).unwrap();
    let (b_tr, _) = run_accel(&f, &heavy, &[1.0, 0.0], 20.0, &cfg).unwrap();
    let (th, tb) = (first_below(&h_tr, 0.05), first_below(&b_tr, 0.05));
    let ok = match (th, tb) {
        (Some(a), Some(b)) => a <= b,
        (Some(_), None) => true,
        _ => false,
    };
    r.line(
        "9a hybrid reaches |z1| < 0.05 no later than heavy ball (c1 = 2), |x|^3 from (1, 0)",
        ok,
        format!("hybrid {th:?}, heavy ball {tb:?}"),
    );
    let (alt_tr, _) = run_accel(&f, &AccelParams::heavy_ball(2.0, 1.0), &[1.0, 0.0], 20.0, &cfg).unwrap();
    let min_alt = alt_tr.states().map(|s| s[0]).fold(f64::INFINITY, f64::min);
    println!(
        "INFO 9 heavy ball with c1 = 1: first |z1| < 0.05 at {:?}, min z1 = {min_alt:.5}",
        first_below(&alt_tr, 0.05)
    );
    let min_h = h_tr.states().map(|s| s[0]).fold(f64::INFINITY, f64::min);
    let min_b = b_tr.states().map(|s| s[0]).fold(f64::INFINITY, f64::min);
    r.line(
        "9b hybrid z1 never drops below -0.05",
        min_h >= -0.05,
        format!("min hybrid z1 = {min_h:.5}, min heavy-ball z1 = {min_b:.5}"),
    );
}

const EXPERIMENTS: [&str; 6] = [
    "two_needle_demo",
    "order_check_thm1",
    "order_check_lemma1",
    "many_needles",
    "fixed_points_report",
    "algorithm_comparison",
];

fn run_binary(config: &Path, out: &Path, threads: &str) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_needleseek"))
        .arg("run")
        .arg(config)
        .arg("--out")
        .arg(out)
        .env("NEEDLESEEK_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn criterion_10(r: &mut Report) {
    let dir = tempfile::tempdir().unwrap();
    let mut identical = Vec::new();
    for name in EXPERIMENTS {
        let config = dir.path().join(format!("{name}.cfg"));
        std::fs::write(&config, format!("experiment = {name}\n")).unwrap();
        let outputs: Vec<Vec<u8>> = [("a", "1"), ("b", "1"), ("c", "4")]
            .iter()
            .map(|(sub, threads)| {
                let out = dir.path().join(sub);
                let status = run_binary(&config, &out, threads);
                assert!(status.status.success(), "{name}: {}", String::from_utf8_lossy(&status.stderr));
                std::fs::read(out.join(format!("{name}.csv"))).unwrap()
            })
            .collect();
        identical.push((name, outputs.windows(2).all(|w| w[0] == w[1])));
    }
    r.line(
        "10a every experiment rerun is byte-identical (threads 1, 1, 4)",
        identical.iter().all(|(_, same)| *same),
        format!("{identical:?}"),
    );
    let config = dir.path().join("bad.cfg");
    std::fs::write(&config, "experiment = two_needle_demo\nT = 1\nepsilon = 0.5\n").unwrap();
    let output = run_binary(&config, &dir.path().join("bad"), "1");
    let stderr = String::from_utf8_lossy(&output.stderr).trim().to_string();
    r.line(
        "10b invalid config exits with code 2 and names the constraint",
        output.status.code() == Some(2) && stderr.contains("epsilon < T/2"),
        format!("code {:?}, stderr `{stderr}`", output.status.code()),
    );
}

type Criterion = (&'static str, fn(&mut Report));

fn main() {
    let mut report = Report { failures: 0 };
    let criteria: [Criterion; 10] = [
        ("1", criterion_1),
        ("2", criterion_2),
        ("3", criterion_3),
        ("4", criterion_4),
        ("5", criterion_5),
        ("6", criterion_6),
        ("7", criterion_7),
        ("8", criterion_8),
        ("9", criterion_9),
        ("10", criterion_10),
    ];
    for (id, check) in criteria {
        let start = Instant::now();
        check(&mut report);
        println!("TIME {id}: {:.2} s", start.elapsed().as_secs_f64());
    }
    println!("acceptance: {} failing line(s)", report.failures);
    if report.failures > 0 {
        std::process::exit(1);
    }
}
