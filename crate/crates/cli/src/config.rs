//! Flat `key = value` experiment configuration.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use needleseek_core::sim::Method;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    TwoNeedleDemo,
    OrderCheckThm1,
    OrderCheckLemma1,
    ManyNeedles,
    FixedPointsReport,
    AlgorithmComparison,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::TwoNeedleDemo,
        ExperimentKind::OrderCheckThm1,
        ExperimentKind::OrderCheckLemma1,
        ExperimentKind::ManyNeedles,
        ExperimentKind::FixedPointsReport,
        ExperimentKind::AlgorithmComparison,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::TwoNeedleDemo => "two_needle_demo",
            ExperimentKind::OrderCheckThm1 => "order_check_thm1",
            ExperimentKind::OrderCheckLemma1 => "order_check_lemma1",
            ExperimentKind::ManyNeedles => "many_needles",
            ExperimentKind::FixedPointsReport => "fixed_points_report",
            ExperimentKind::AlgorithmComparison => "algorithm_comparison",
        }
    }

    /// Keys the experiment reads, with defaults where one exists.
    pub fn keys(self) -> &'static [(&'static str, &'static str)] {
        match self {
            ExperimentKind::TwoNeedleDemo => &[
                ("objective", "quadratic"),
                ("b", "2"),
                ("c", "3"),
                ("T", "1.3"),
                ("epsilon", "1e-5"),
                ("alpha", "-10"),
                ("x0", "-1"),
                ("periods", "20"),
                ("method", "rk4"),
                ("h", "eps/m rule"),
                ("max_state", "1e6"),
                ("output", "two_needle_demo.csv"),
            ],
            ExperimentKind::OrderCheckThm1 => &[
                ("objective", "quadratic"),
                ("b", "2"),
                ("c", "3"),
                ("T", "1.3"),
                ("alpha", "-10"),
                ("x0", "-1"),
                ("epsilons", "1e-3, 5e-4, 2.5e-4"),
                ("oracle_steps_per_needle", "50"),
                ("max_state", "1e6"),
                ("output", "order_check_thm1.csv"),
            ],
            ExperimentKind::OrderCheckLemma1 => &[
                ("objective", "quadratic"),
                ("b", "2"),
                ("c", "3"),
                ("alpha", "1"),
                ("x0", "0"),
                ("epsilons", "2e-2, 1e-2, 5e-3"),
                ("oracle_steps_per_needle", "100"),
                ("max_state", "1e6"),
                ("output", "order_check_lemma1.csv"),
            ],
            ExperimentKind::ManyNeedles => &[
                ("objective", "quadratic"),
                ("b", "2"),
                ("c", "3"),
                ("signal", "trig"),
                ("T", "1"),
                ("order", "1 (smooth_root only)"),
                ("x0", "-1"),
                ("needles", "16, 64, 256"),
                ("steps_per_needle", "200"),
                ("max_state", "1e6"),
                ("output", "many_needles.csv"),
            ],
            ExperimentKind::FixedPointsReport => &[
                ("b", "2"),
                ("c", "3"),
                ("T", "1.3"),
                ("epsilon", "1e-5"),
                ("alpha", "-10"),
                ("output", "fixed_points_report.csv"),
            ],
            ExperimentKind::AlgorithmComparison => &[
                ("objective", "abs_cubed"),
                ("b", "2 (quadratic only)"),
                ("c", "3 (quadratic only)"),
                ("k", "2"),
                ("c1", "1"),
                ("c2", "1"),
                ("gamma", "1"),
                ("z0", "1, 0"),
                ("horizon", "20"),
                ("method", "euler"),
                ("h", "1e-3"),
                ("stride", "10"),
                ("max_state", "1e6"),
                ("output", "algorithm_comparison.csv"),
            ],
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown experiment `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObjectiveSpec {
    Quadratic { b: f64, c: f64 },
    AbsCubed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignalChoice {
    Trig,
    SmoothRoot { order: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentParams {
    TwoNeedleDemo {
        objective: ObjectiveSpec,
        period: f64,
        epsilon: f64,
        alpha: f64,
        x0: f64,
        periods: usize,
        method: Method,
        h: Option<f64>,
    },
    OrderCheckThm1 {
        objective: ObjectiveSpec,
        period: f64,
        alpha: f64,
        x0: f64,
        epsilons: Vec<f64>,
        oracle_steps: usize,
    },
    OrderCheckLemma1 {
        objective: ObjectiveSpec,
        alpha: f64,
        x0: f64,
        epsilons: Vec<f64>,
        oracle_steps: usize,
    },
    ManyNeedles {
        objective: ObjectiveSpec,
        signal: SignalChoice,
        period: f64,
        x0: f64,
        needles: Vec<usize>,
        steps_per_needle: usize,
    },
    FixedPointsReport {
        b: f64,
        c: f64,
        period: f64,
        epsilon: f64,
        alpha: f64,
    },
    AlgorithmComparison {
        objective: ObjectiveSpec,
        k: f64,
        c1: f64,
        c2: f64,
        gamma: f64,
        z0: (f64, f64),
        horizon: f64,
        method: Method,
        h: f64,
        stride: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub params: ExperimentParams,
    pub max_state: f64,
    pub output: String,
}

/// Parsed `key = value` pairs that remember which keys were consumed.
struct Entries {
    map: BTreeMap<String, (usize, String)>,
    used: BTreeSet<String>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let key = key.trim().to_string();
            if key.is_empty() {
                return Err(CliError::Config(format!("line {}: empty key", i + 1)));
            }
            if map.insert(key.clone(), (i + 1, value.trim().to_string())).is_some() {
                return Err(CliError::Config(format!("line {}: duplicate key `{key}`", i + 1)));
            }
        }
        Ok(Self {
            map,
            used: BTreeSet::new(),
        })
    }

    fn raw(&mut self, key: &str) -> Option<(usize, String)> {
        self.used.insert(key.to_string());
        self.map.get(key).cloned()
    }

    fn get<T: FromStr>(&mut self, key: &str, default: T) -> Result<T, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some((line, v)) => v
                .parse()
                .map_err(|_| CliError::Config(format!("line {line}: cannot parse `{key} = {v}`"))),
        }
    }

    fn get_opt<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Config(format!("line {line}: cannot parse `{key} = {v}`"))),
        }
    }

    fn list<T: FromStr + Clone>(&mut self, key: &str, default: &[T]) -> Result<Vec<T>, CliError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some((line, v)) => v
                .split(',')
                .map(|item| {
                    item.trim()
                        .parse()
                        .map_err(|_| CliError::Config(format!("line {line}: cannot parse `{key} = {v}`")))
                })
                .collect(),
        }
    }

    fn finish(self) -> Result<(), CliError> {
        for (key, (line, _)) in &self.map {
            if !self.used.contains(key) {
                return Err(CliError::Config(format!("line {line}: unknown key `{key}` for this experiment")));
            }
        }
        Ok(())
    }
}

fn require(cond: bool, msg: impl Into<String>) -> Result<(), CliError> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Config(format!("constraint violated: {}", msg.into())))
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    require(v > 0.0 && v.is_finite(), format!("{name} > 0 ({name} = {v})"))
}

fn finite(name: &str, v: f64) -> Result<(), CliError> {
    require(v.is_finite(), format!("{name} finite ({name} = {v})"))
}

fn objective(e: &mut Entries, default: &str) -> Result<ObjectiveSpec, CliError> {
    let kind: String = e.get("objective", default.to_string())?;
    match kind.as_str() {
        "quadratic" => {
            let b = e.get("b", 2.0)?;
            let c = e.get("c", 3.0)?;
            finite("b", b)?;
            finite("c", c)?;
            Ok(ObjectiveSpec::Quadratic { b, c })
        }
        "abs_cubed" => Ok(ObjectiveSpec::AbsCubed),
        other => Err(CliError::Config(format!(
            "unknown objective `{other}` (expected quadratic or abs_cubed)"
        ))),
    }
}

fn method(e: &mut Entries, default: Method) -> Result<Method, CliError> {
    match e.raw("method") {
        None => Ok(default),
        Some((_, v)) if v == "rk4" => Ok(Method::Rk4),
        Some((_, v)) if v == "euler" => Ok(Method::Euler),
        Some((line, v)) => Err(CliError::Config(format!(
            "line {line}: unknown method `{v}` (expected rk4 or euler)"
        ))),
    }
}

fn needle_geometry(period: f64, epsilon: f64) -> Result<(), CliError> {
    positive("T", period)?;
    positive("epsilon", epsilon)?;
    require(
        epsilon < period / 2.0,
        format!("epsilon < T/2 (epsilon = {epsilon}, T/2 = {})", period / 2.0),
    )
}

impl ExperimentConfig {
    /// Parses and validates a configuration; no computation happens here.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut e = Entries::parse(text)?;
        let kind: ExperimentKind = match e.raw("experiment") {
            Some((_, v)) => v.parse()?,
            None => return Err(CliError::Config("missing key `experiment`".into())),
        };
        let params = match kind {
            ExperimentKind::TwoNeedleDemo => {
                let objective = objective(&mut e, "quadratic")?;
                let period = e.get("T", 1.3)?;
                let epsilon = e.get("epsilon", 1e-5)?;
                let alpha = e.get("alpha", -10.0)?;
                let x0 = e.get("x0", -1.0)?;
                let periods = e.get("periods", 20usize)?;
                let method = method(&mut e, Method::Rk4)?;
                let h = e.get_opt("h")?;
                needle_geometry(period, epsilon)?;
                require(
                    epsilon <= period / 4.0,
                    format!("epsilon <= T/4 (epsilon = {epsilon}, T/4 = {})", period / 4.0),
                )?;
                finite("alpha", alpha)?;
                finite("x0", x0)?;
                require(periods >= 1, "periods >= 1")?;
                if let Some(h) = h {
                    positive("h", h)?;
                }
                ExperimentParams::TwoNeedleDemo {
                    objective,
                    period,
                    epsilon,
                    alpha,
                    x0,
                    periods,
                    method,
                    h,
                }
            }
            ExperimentKind::OrderCheckThm1 => {
                let objective = objective(&mut e, "quadratic")?;
                let period = e.get("T", 1.3)?;
                let alpha = e.get("alpha", -10.0)?;
                let x0 = e.get("x0", -1.0)?;
                let epsilons = e.list("epsilons", &[1e-3, 5e-4, 2.5e-4])?;
                let oracle_steps = e.get("oracle_steps_per_needle", 50usize)?;
                positive("T", period)?;
                require(!epsilons.is_empty(), "at least one epsilon")?;
                for &eps in &epsilons {
                    needle_geometry(period, eps)?;
                    require(eps <= period / 4.0, format!("epsilon <= T/4 (epsilon = {eps})"))?;
                }
                finite("alpha", alpha)?;
                finite("x0", x0)?;
                require(oracle_steps >= 1, "oracle_steps_per_needle >= 1")?;
                ExperimentParams::OrderCheckThm1 {
                    objective,
                    period,
                    alpha,
                    x0,
                    epsilons,
                    oracle_steps,
                }
            }
            ExperimentKind::OrderCheckLemma1 => {
                let objective = objective(&mut e, "quadratic")?;
                let alpha = e.get("alpha", 1.0)?;
                let x0 = e.get("x0", 0.0)?;
                let epsilons = e.list("epsilons", &[2e-2, 1e-2, 5e-3])?;
                let oracle_steps = e.get("oracle_steps_per_needle", 100usize)?;
                require(!epsilons.is_empty(), "at least one epsilon")?;
                for &eps in &epsilons {
                    positive("epsilon", eps)?;
                }
                finite("alpha", alpha)?;
                finite("x0", x0)?;
                require(oracle_steps >= 1, "oracle_steps_per_needle >= 1")?;
                ExperimentParams::OrderCheckLemma1 {
                    objective,
                    alpha,
                    x0,
                    epsilons,
                    oracle_steps,
                }
            }
            ExperimentKind::ManyNeedles => {
                let objective = objective(&mut e, "quadratic")?;
                let signal_name: String = e.get("signal", "trig".to_string())?;
                let signal = match signal_name.as_str() {
                    "trig" => SignalChoice::Trig,
                    "smooth_root" => {
                        let order = e.get("order", 1usize)?;
                        require(order >= 1, "order >= 1")?;
                        SignalChoice::SmoothRoot { order }
                    }
                    other => {
                        return Err(CliError::Config(format!(
                            "unknown signal `{other}` (expected trig or smooth_root)"
                        )))
                    }
                };
                let period = e.get("T", 1.0)?;
                let x0 = e.get("x0", -1.0)?;
                let needles = e.list("needles", &[16usize, 64, 256])?;
                let steps_per_needle = e.get("steps_per_needle", 200usize)?;
                positive("T", period)?;
                finite("x0", x0)?;
                require(!needles.is_empty(), "at least one needle count")?;
                require(needles.iter().all(|&n| n >= 1), "needle counts >= 1")?;
                require(steps_per_needle >= 1, "steps_per_needle >= 1")?;
                ExperimentParams::ManyNeedles {
                    objective,
                    signal,
                    period,
                    x0,
                    needles,
                    steps_per_needle,
                }
            }
            ExperimentKind::FixedPointsReport => {
                let b = e.get("b", 2.0)?;
                let c = e.get("c", 3.0)?;
                let period = e.get("T", 1.3)?;
                let epsilon = e.get("epsilon", 1e-5)?;
                let alpha = e.get("alpha", -10.0)?;
                finite("b", b)?;
                finite("c", c)?;
                require(4.0 * c - b * b > 0.0, format!("4c - b^2 > 0 (4c - b^2 = {})", 4.0 * c - b * b))?;
                needle_geometry(period, epsilon)?;
                finite("alpha", alpha)?;
                ExperimentParams::FixedPointsReport {
                    b,
                    c,
                    period,
                    epsilon,
                    alpha,
                }
            }
            ExperimentKind::AlgorithmComparison => {
                let objective = objective(&mut e, "abs_cubed")?;
                let k = e.get("k", 2.0)?;
                let c1 = e.get("c1", 1.0)?;
                let c2 = e.get("c2", 1.0)?;
                let gamma = e.get("gamma", 1.0)?;
                let z0 = e.list("z0", &[1.0, 0.0])?;
                let horizon = e.get("horizon", 20.0)?;
                let method = method(&mut e, Method::Euler)?;
                let h = e.get("h", 1e-3)?;
                let stride = e.get("stride", 10usize)?;
                for (name, v) in [("k", k), ("c1", c1), ("c2", c2), ("gamma", gamma), ("horizon", horizon), ("h", h)] {
                    positive(name, v)?;
                }
                require(z0.len() == 2, "z0 has two entries (z1, z2)")?;
                require(stride >= 1, "stride >= 1")?;
                ExperimentParams::AlgorithmComparison {
                    objective,
                    k,
                    c1,
                    c2,
                    gamma,
                    z0: (z0[0], z0[1]),
                    horizon,
                    method,
                    h,
                    stride,
                }
            }
        };
        let max_state = e.get("max_state", 1e6)?;
        positive("max_state", max_state)?;
        let output: String = e.get("output", format!("{kind}.csv"))?;
        require(!output.is_empty(), "output is not empty")?;
        e.finish()?;
        Ok(Self {
            kind,
            params,
            max_state,
            output,
        })
    }
}
