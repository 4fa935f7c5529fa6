//! Experiment runners. Each produces the full CSV text of its artifact.

use needleseek_core::accel::{run_accel, AccelParams};
use needleseek_core::needleapprox::{many_needles_estimate, many_needles_limit, two_needle_estimate, two_needle_iterate};
use needleseek_core::objective::{abs_cubed_objective, quadratic_objective, Objective};
use needleseek_core::quadratic::{fixed_points, iterate_closed_form, root_residual, QuadraticCase, Stability};
use needleseek_core::signals::{needle_discretize, smooth_root_pair, trig_pair, NeedleSpec, Signal};
use needleseek_core::sim::{
    csv_number, integrate_affine, integrate_ode, perturbed_solution, Method, SolverConfig, Termination, Trajectory,
};
use needleseek_core::Scalar;

use crate::config::{ExperimentConfig, ExperimentParams, ObjectiveSpec, SignalChoice};
use crate::{parallel_map, CliError, SAMPLE_WARNING};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub file_name: String,
    pub csv: String,
    pub warnings: Vec<String>,
}

/// Solution of `x' = -grad F(x)` over `[0, horizon]`.
pub fn gradient_flow_baseline<S: Scalar>(
    f: &Objective<S>,
    x0: &[S],
    horizon: S,
    cfg: &SolverConfig<S>,
) -> needleseek_core::Result<Trajectory<S>> {
    if x0.len() != f.dim() {
        return Err(needleseek_core::Error::InvalidParameter(format!(
            "initial state has length {}, expected {}",
            x0.len(),
            f.dim()
        )));
    }
    let traj = integrate_ode(
        |_, x: &[S], out: &mut [S]| {
            f.grad_into(x, out);
            for v in out.iter_mut() {
                *v = -*v;
            }
        },
        x0,
        horizon,
        cfg,
    )?;
    if let Termination::Diverged { time } = traj.termination() {
        return Err(needleseek_core::Error::Escape {
            time: time.as_f64(),
            bound: cfg.max_state.as_f64(),
        });
    }
    Ok(traj)
}

fn build_objective(spec: ObjectiveSpec) -> Objective<f64> {
    match spec {
        ObjectiveSpec::Quadratic { b, c } => quadratic_objective(b, c),
        ObjectiveSpec::AbsCubed => abs_cubed_objective(),
    }
}

fn row(values: &[f64]) -> String {
    let mut line = values.iter().map(|&v| csv_number(v)).collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

fn steps(span: f64, h: f64) -> f64 {
    (span / h).round()
}

fn sample_warning(samples: f64, what: &str) -> Option<String> {
    (samples > SAMPLE_WARNING).then(|| format!("{what} stores {samples:.3e} samples (above {SAMPLE_WARNING:.0e})"))
}

fn ratio_rows(epsilons: &[f64], errors: &[f64]) -> String {
    let mut csv = String::from("epsilon,abs_error,ratio_to_prev\n");
    for (i, (&eps, &err)) in epsilons.iter().zip(errors).enumerate() {
        let ratio = if i == 0 { f64::NAN } else { errors[i - 1] / err };
        csv.push_str(&row(&[eps, err, ratio]));
    }
    csv
}

/// Runs one experiment after its configuration has been validated.
pub fn run_experiment(cfg: &ExperimentConfig, threads: usize) -> Result<ExperimentOutput, CliError> {
    let max_state = cfg.max_state;
    let mut warnings = Vec::new();
    let csv = match &cfg.params {
        &ExperimentParams::TwoNeedleDemo {
            objective,
            period,
            epsilon,
            alpha,
            x0,
            periods,
            method,
            h,
        } => {
            let f = build_objective(objective);
            let spec = NeedleSpec::new(period, epsilon, alpha).map_err(|e| CliError::from_core("two_needle_demo", e))?;
            let base = match h {
                Some(h) => SolverConfig::new(method, h),
                None => SolverConfig::for_needles(&spec)
                    .map_err(|e| CliError::from_core("two_needle_demo", e))?
                    .with_method(method),
            }
            .with_max_state(max_state);
            let per_period = steps(period, base.h);
            let stride = per_period as usize;
            let sim = perturbed_solution(&f, &spec, x0, periods, &base.with_stride(stride))
                .map_err(|e| CliError::from_core("two_needle_demo simulation", e))?;
            if let Termination::Diverged { time } = sim.termination() {
                return Err(CliError::Numeric(format!(
                    "two_needle_demo simulation: state left the box |x| <= {max_state} at t = {time} (period {})",
                    (time / period).floor() as usize
                )));
            }
            let approx: Vec<f64> = match objective {
                ObjectiveSpec::Quadratic { b, c } => {
                    iterate_closed_form(&QuadraticCase::new(b, c), period, epsilon, alpha, x0, periods).map_err(|p| {
                        CliError::Numeric(format!("two_needle_demo closed-form iteration failed in period {}: {}", p.period, p.source))
                    })?
                }
                ObjectiveSpec::AbsCubed => two_needle_iterate(&f, &spec, x0, periods, &base)
                    .map_err(|p| {
                        CliError::Numeric(format!("two_needle_demo iteration failed in period {}: {}", p.period, p.source))
                    })?
                    .into_iter()
                    .map(|r| r.value)
                    .collect(),
            };
            let flow_cfg = SolverConfig::rk4(period / 1000.0).with_max_state(max_state).with_stride(1000);
            let flow = gradient_flow_baseline(&f, &[x0], period * periods as f64, &flow_cfg)
                .map_err(|e| CliError::from_core("two_needle_demo gradient flow", e))?;
            let mut csv = String::from("period,x_sim,x_approx,x_gradflow\n");
            csv.push_str(&row(&[0.0, x0, x0, x0]));
            for j in 1..=periods {
                csv.push_str(&row(&[j as f64, sim.x(j), approx[j - 1], flow.x(j)]));
            }
            csv
        }
        ExperimentParams::OrderCheckThm1 {
            objective,
            period,
            alpha,
            x0,
            epsilons,
            oracle_steps,
        } => {
            let f = build_objective(*objective);
            let total: f64 = epsilons.iter().map(|&e| steps(*period, e / *oracle_steps as f64)).sum();
            warnings.extend(sample_warning(total, "order_check_thm1 oracle"));
            let errors = parallel_map(epsilons, threads, |&eps| -> Result<f64, CliError> {
                let ctx = format!("order_check_thm1 epsilon = {eps}");
                let spec = NeedleSpec::new(*period, eps, *alpha).map_err(|e| CliError::from_core(&ctx, e))?;
                let est_cfg = SolverConfig::for_needles(&spec)
                    .map_err(|e| CliError::from_core(&ctx, e))?
                    .with_max_state(max_state);
                let est = two_needle_estimate(&f, &spec, *x0, &est_cfg).map_err(|e| CliError::from_core(&ctx, e))?;
                let sim_cfg = SolverConfig::rk4(eps / *oracle_steps as f64).with_max_state(max_state);
                let sim = perturbed_solution(&f, &spec, *x0, 1, &sim_cfg).map_err(|e| CliError::from_core(&ctx, e))?;
                finished(&sim, &ctx)?;
                Ok((est.value - sim.last_state()[0]).abs())
            })
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
            ratio_rows(epsilons, &errors)
        }
        ExperimentParams::OrderCheckLemma1 {
            objective,
            alpha,
            x0,
            epsilons,
            oracle_steps,
        } => {
            let f = build_objective(*objective);
            let errors = parallel_map(epsilons, threads, |&eps| -> Result<f64, CliError> {
                let ctx = format!("order_check_lemma1 epsilon = {eps}");
                let spec = NeedleSpec::new(8.0 * eps, eps, *alpha).map_err(|e| CliError::from_core(&ctx, e))?;
                let cfg = SolverConfig::rk4(eps / *oracle_steps as f64).with_max_state(max_state);
                let est = two_needle_estimate(&f, &spec, *x0, &cfg).map_err(|e| CliError::from_core(&ctx, e))?;
                let sim = perturbed_solution(&f, &spec, *x0, 1, &cfg).map_err(|e| CliError::from_core(&ctx, e))?;
                finished(&sim, &ctx)?;
                Ok((est.value - sim.last_state()[0]).abs())
            })
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
            ratio_rows(epsilons, &errors)
        }
        ExperimentParams::ManyNeedles {
            objective,
            signal,
            period,
            x0,
            needles,
            steps_per_needle,
        } => {
            let f = build_objective(*objective);
            let (u1, u2) = match *signal {
                SignalChoice::Trig => trig_pair(*period),
                SignalChoice::SmoothRoot { order } => smooth_root_pair(*period, order),
            }
            .map_err(|e| CliError::from_core("many_needles signal", e))?;
            let finest = *needles.iter().max().expect("validated non-empty") * steps_per_needle;
            warnings.extend(sample_warning(finest as f64, "many_needles limit"));
            let limit_cfg = SolverConfig::rk4(*period / finest as f64).with_max_state(max_state);
            let limit = many_needles_limit(&f, &u1, &u2, *x0, &limit_cfg)
                .map_err(|e| CliError::from_core("many_needles limit", e))?;
            let rows = parallel_map(needles, threads, |&n| -> Result<String, CliError> {
                let ctx = format!("many_needles N = {n}");
                let eps = *period / n as f64;
                let cfg = SolverConfig::rk4(eps / *steps_per_needle as f64).with_max_state(max_state);
                let est = many_needles_estimate(&f, &u1, &u2, n, *x0, &cfg).map_err(|e| CliError::from_core(&ctx, e))?;
                let sim = simulate_discretized(&f, &u1, &u2, n, *x0, &cfg).map_err(|e| CliError::from_core(&ctx, e))?;
                finished(&sim, &ctx)?;
                let x_sim = sim.last_state()[0];
                Ok(row(&[n as f64, eps, est.value, limit.value, x_sim, (est.value - x_sim).abs()]))
            })
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
            let mut csv = String::from("n,epsilon,x_estimate,x_limit,x_sim,abs_error\n");
            for r in rows {
                csv.push_str(&r);
            }
            csv
        }
        &ExperimentParams::FixedPointsReport {
            b,
            c,
            period,
            epsilon,
            alpha,
        } => {
            let q = QuadraticCase::new(b, c);
            let fp = fixed_points(&q, period, epsilon, alpha).map_err(|e| CliError::from_core("fixed_points_report", e))?;
            let mut csv = String::from("root,residual,stability\n");
            for (x, stability) in fp.roots().into_iter().zip(fp.stability) {
                let residual = root_residual(&q, period, epsilon, x).map_err(|e| CliError::from_core("fixed_points_report", e))?;
                let label = match stability {
                    Stability::Stable => "stable",
                    Stability::Unstable => "unstable",
                    Stability::Undetermined => "undetermined",
                };
                csv.push_str(&format!("{},{},{label}\n", csv_number(x), csv_number(residual)));
            }
            csv
        }
        &ExperimentParams::AlgorithmComparison {
            objective,
            k,
            c1,
            c2,
            gamma,
            z0,
            horizon,
            method,
            h,
            stride,
        } => {
            let f = build_objective(objective);
            let hybrid = AccelParams::hybrid(k, c1, c2, gamma);
            let variants = [hybrid.matched_heavy_ball(), hybrid.matched_nesterov(), hybrid];
            let solver = SolverConfig::new(method, h).with_max_state(max_state).with_stride(stride);
            let samples = steps(horizon, h) / stride as f64;
            warnings.extend(sample_warning(3.0 * samples, "algorithm_comparison"));
            let runs = parallel_map(&variants, threads, |p| {
                run_accel(&f, p, &[z0.0, z0.1], horizon, &solver)
                    .map_err(|e| CliError::from_core(format!("algorithm_comparison {:?}", p.method), e))
            })
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
            for (tr, _) in &runs {
                finished(tr, &format!("algorithm_comparison {}", method_name(method)))?;
            }
            let (hybrid_tr, hybrid_v) = &runs[2];
            let mut csv = String::from("t,heavy,nesterov,hybrid,V_hybrid\n");
            for i in 0..hybrid_tr.len() {
                csv.push_str(&row(&[
                    hybrid_tr.time(i),
                    runs[0].0.x(i),
                    runs[1].0.x(i),
                    hybrid_tr.x(i),
                    hybrid_v.values[i],
                ]));
            }
            csv
        }
    };
    Ok(ExperimentOutput {
        file_name: cfg.output.clone(),
        csv,
        warnings,
    })
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Euler => "euler",
        Method::Rk4 => "rk4",
    }
}

fn finished(traj: &Trajectory<f64>, context: &str) -> Result<(), CliError> {
    match traj.termination() {
        Termination::Completed => Ok(()),
        Termination::Diverged { time } => Err(CliError::Numeric(format!(
            "{context}: state left the divergence box at t = {time}"
        ))),
    }
}

/// Full simulation of `x' = F(x) u1 + u2_N` with the needle-discretized dither.
pub fn simulate_discretized(
    f: &Objective<f64>,
    u1: &Signal<f64>,
    u2: &Signal<f64>,
    n: usize,
    x0: f64,
    cfg: &SolverConfig<f64>,
) -> needleseek_core::Result<Trajectory<f64>> {
    let needles = needle_discretize(u2, n)?;
    integrate_affine(|x| f.eval1(x), |_| 1.0, u1, &needles, x0, u1.period(), cfg)
}
