use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{
    check_alpha_spectrum, check_polynomial_selfreplicability, laplacian_modes, laplacian_modes_2d,
    overlap_with_constant, polynomial_waveset, roughness,
};
use crate::blockrg::{cbrg, naive_brg, CbrgConfig, RGReport};
use crate::error::{Error, Result};
use crate::lattice::{BoundaryCondition, LatticeSpec};
use crate::replica::{
    format_vectors, format_waveset, iterate_to_fixed_point, replicate, replicate_single,
    FixedPointRun, Geometry, InnerProduct, WaveSet,
};

use BoundaryCondition::{Fixed, Free};

const VARIATIONAL_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteConfig {
    /// Resolution of the single-function experiments.
    pub n_single: usize,
    /// Resolution of the 1D set experiments.
    pub n_set: usize,
    /// Side of the 2D square.
    pub n_2d: usize,
    pub iterations: usize,
    pub tol: f64,
    pub poly_degree: usize,
    pub poly_n: usize,
    pub poly_n_fine: usize,
    pub alpha_n: usize,
    pub pascal: bool,
    pub pascal_seed: u64,
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            n_single: 64,
            n_set: 256,
            n_2d: 32,
            iterations: 15,
            tol: 1e-6,
            poly_degree: 5,
            poly_n: 256,
            poly_n_fine: 512,
            alpha_n: 512,
            pascal: false,
            pascal_seed: 7,
            out_dir: None,
        }
    }
}

impl SuiteConfig {
    /// Overrides every 1D resolution; the refined polynomial and α runs use `2n`.
    pub fn with_resolution(mut self, n: usize) -> Self {
        self.n_single = n;
        self.n_set = n;
        self.poly_n = n;
        self.poly_n_fine = 2 * n;
        self.alpha_n = 2 * n;
        self
    }

    pub fn describe(&self) -> String {
        format!(
            "n_single={} n_set={} n_2d={} iterations={} tol={:e} poly_degree={} poly_n={} \
             poly_n_fine={} alpha_n={} pascal={} pascal_seed={}",
            self.n_single,
            self.n_set,
            self.n_2d,
            self.iterations,
            self.tol,
            self.poly_degree,
            self.poly_n,
            self.poly_n_fine,
            self.alpha_n,
            self.pascal,
            self.pascal_seed
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Criterion {
    Within { target: f64, tolerance: f64 },
    AtLeast { bound: f64 },
    AtMost { bound: f64 },
}

impl Criterion {
    pub fn holds(&self, value: f64) -> bool {
        match *self {
            Criterion::Within { target, tolerance } => (value - target).abs() <= tolerance,
            Criterion::AtLeast { bound } => value >= bound,
            Criterion::AtMost { bound } => value <= bound,
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Criterion::Within { target, tolerance } => write!(f, "{target} +- {tolerance:e}"),
            Criterion::AtLeast { bound } => write!(f, ">= {bound:e}"),
            Criterion::AtMost { bound } => write!(f, "<= {bound:e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub metric: String,
    pub value: f64,
    pub criterion: Criterion,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub name: String,
    pub parameters: BTreeMap<String, String>,
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    /// Written files, relative to the output root.
    pub artifacts: Vec<PathBuf>,
}

impl ExperimentResult {
    fn new(name: &str) -> Self {
        ExperimentResult {
            name: name.into(),
            parameters: BTreeMap::new(),
            metrics: BTreeMap::new(),
            checks: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    fn param(&mut self, key: &str, value: impl ToString) {
        self.parameters.insert(key.into(), value.to_string());
    }

    fn metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.into(), value);
    }

    fn metrics_indexed(&mut self, prefix: &str, values: &[f64]) {
        for (i, v) in values.iter().enumerate() {
            self.metric(&format!("{prefix}_{}", i + 1), *v);
        }
    }

    fn check(&mut self, key: &str, value: f64, criterion: Criterion) {
        self.metric(key, value);
        self.checks.push(Check {
            metric: key.into(),
            value,
            criterion,
            passed: criterion.holds(value),
        });
    }

    fn check_indexed(&mut self, prefix: &str, values: &[f64], targets: &[f64], tolerance: f64) {
        for (i, &target) in targets.iter().enumerate() {
            let value = values.get(i).copied().unwrap_or(f64::NAN);
            self.check(
                &format!("{prefix}_{}", i + 1),
                value,
                Criterion::Within { target, tolerance },
            );
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("experiment results serialize") + "\n"
    }
}

/// Writes artifacts below `<root>/<experiment>/` when an output root is set.
struct Sink<'a> {
    root: Option<&'a Path>,
}

impl Sink<'_> {
    fn write(&self, result: &mut ExperimentResult, file: &str, contents: &str) -> Result<()> {
        let Some(root) = self.root else {
            return Ok(());
        };
        let relative = Path::new(&result.name).join(file);
        let path = root.join(&relative);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents)?;
        result.artifacts.push(relative);
        Ok(())
    }
}

/// CSV of a fixed-point run: `iteration,S_1..S_m,subspace_distance,
/// overlap_1..overlap_m,dropped`. Columns follow the original function
/// index; dropped functions show `NA`.
pub fn trajectory_csv(header: &str, run: &FixedPointRun) -> String {
    let m = run.history[0].len();
    let mut out = format!("# {header}\niteration");
    for i in 1..=m {
        let _ = write!(out, ",S_{i}");
    }
    out.push_str(",subspace_distance");
    for i in 1..=m {
        let _ = write!(out, ",overlap_{i}");
    }
    out.push_str(",dropped\n");
    let by_origin = |values: &[f64], origin: &[usize]| {
        let mut cells = vec!["NA".to_string(); m];
        for (v, &o) in values.iter().zip(origin) {
            cells[o] = format!("{v:.16e}");
        }
        cells
    };
    for r in &run.records {
        let s = by_origin(&r.self_replicability, &r.origin);
        let o = by_origin(&r.overlap_with_initial, &r.origin);
        let _ = writeln!(
            out,
            "{},{},{:.16e},{},{}",
            r.iteration,
            s.join(","),
            r.subspace_distance,
            o.join(","),
            r.dropped
        );
    }
    out
}

/// Overlaps with the initial set after the last iteration, by original index.
fn final_overlaps(run: &FixedPointRun) -> Vec<f64> {
    let m = run.history[0].len();
    let last = run.last();
    let mut values = vec![f64::NAN; m];
    for (v, &o) in last.overlap_with_initial.iter().zip(&last.origin) {
        values[o] = *v;
    }
    values
}

fn with_name<T>(name: &str, result: Result<T>) -> Result<T> {
    result.map_err(|e| Error::Experiment {
        name: name.into(),
        source: Box::new(e),
    })
}

/// Runs every experiment in order. Artifacts go to `config.out_dir` when set,
/// together with a top-level `summary.csv`.
pub fn run_suite(config: &SuiteConfig) -> Result<Vec<ExperimentResult>> {
    let sink = Sink {
        root: config.out_dir.as_deref(),
    };
    type Runner = fn(&SuiteConfig, &Sink) -> Result<ExperimentResult>;
    let mut experiments: Vec<(&str, Runner)> = vec![
        ("naive_brg", naive_experiment),
        ("single_fixed", single_fixed),
        ("single_fixed_cascade", single_fixed_cascade),
        ("free_set", |c, s| set_experiment(c, s, Free)),
        ("fixed_set", |c, s| set_experiment(c, s, Fixed)),
        ("polynomial", polynomial_experiment),
        ("alpha_spectrum", alpha_experiment),
        ("free_2d", |c, s| square_experiment(c, s, Free)),
        ("fixed_2d", |c, s| square_experiment(c, s, Fixed)),
        ("cbrg", cbrg_experiment),
    ];
    if config.pascal {
        experiments.push(("pascal_2d", pascal_experiment));
    }
    let mut results = Vec::with_capacity(experiments.len());
    for (name, run) in experiments {
        log::info!("running {name}");
        let mut result = with_name(name, run(config, &sink))?;
        let json = result.to_json();
        with_name(name, sink.write(&mut result, "summary.json", &json))?;
        results.push(result);
    }
    if let Some(root) = &config.out_dir {
        fs::write(root.join("summary.csv"), summary_csv(config, &results))?;
    }
    Ok(results)
}

/// One row per metric: `experiment,metric,value,criterion,passed`.
pub fn summary_csv(config: &SuiteConfig, results: &[ExperimentResult]) -> String {
    let mut out = format!("# suite {}\nexperiment,metric,value,criterion,passed\n", config.describe());
    for r in results {
        for (metric, value) in &r.metrics {
            let check = r.checks.iter().find(|c| &c.metric == metric);
            let (criterion, passed) = match check {
                Some(c) => (c.criterion.to_string(), c.passed.to_string()),
                None => (String::new(), String::new()),
            };
            let _ = writeln!(out, "{},{metric},{value:.16e},{criterion},{passed}", r.name);
        }
    }
    out
}

fn report_checks(result: &mut ExperimentResult, prefix: &str, report: &RGReport) {
    result.check(
        &format!("{prefix}.variational_margin"),
        report.min_variational_margin(),
        Criterion::AtLeast {
            bound: -VARIATIONAL_SLACK,
        },
    );
}

fn naive_experiment(_: &SuiteConfig, sink: &Sink) -> Result<ExperimentResult> {
    let mut result = ExperimentResult::new("naive_brg");
    result.param("block_sites", 20);
    let fixed = naive_brg(20, Fixed)?;
    let free = naive_brg(20, Free)?;
    result.metric("fixed.approximate", fixed.approximate[0]);
    result.check(
        "fixed.exact",
        fixed.exact[0],
        Criterion::Within {
            target: 4.0 * (PI / 82.0).sin().powi(2),
            tolerance: 1e-9,
        },
    );
    result.check(
        "fixed.exact_printed",
        fixed.exact[0],
        Criterion::Within {
            target: 0.00587,
            tolerance: 5e-6,
        },
    );
    result.check(
        "fixed.relative_error",
        fixed.ground_relative_error().unwrap_or(f64::NAN),
        Criterion::AtLeast { bound: 2.0 },
    );
    report_checks(&mut result, "fixed", &fixed);
    result.check(
        "free.approximate",
        free.approximate[0],
        Criterion::Within {
            target: 0.0,
            tolerance: 1e-12,
        },
    );
    report_checks(&mut result, "free", &free);

    sink.write(&mut result, "fixed_report.txt", &fixed.to_text())?;
    sink.write(&mut result, "free_report.txt", &free.to_text())?;
    let exact = LatticeSpec::chain(40, Fixed).build()?.lowest(1)?.vector(0);
    let mut approx = fixed.states[0].clone();
    if approx.dot(&exact) < 0.0 {
        approx.neg_mut();
    }
    let dump = format_vectors(
        Geometry::Interval(40),
        InnerProduct::L2,
        &[approx, exact],
        &["functions: two-block estimate, exact ground state".into()],
    );
    sink.write(&mut result, "ground_states.dat", &dump)?;
    Ok(result)
}

fn single_fixed(config: &SuiteConfig, sink: &Sink) -> Result<ExperimentResult> {
    let mut result = ExperimentResult::new("single_fixed");
    let n = config.n_single;
    result.param("n", n);
    result.param("states", "midpoint-sampled sin(pi x)");
    let s_at = |n: usize| -> Result<(f64, WaveSet, Option<DVector<f64>>)> {
        let ws = laplacian_modes(Fixed, n, 1, InnerProduct::L2)?;
        let single = replicate_single(&ws.functions()[0], InnerProduct::L2)?;
        Ok((single.s, ws, single.replicated))
    };
    let (s, ws, replicated) = s_at(n)?;
    result.check(
        "S",
        s,
        Criterion::Within {
            target: 0.8488,
            tolerance: 5e-3,
        },
    );
    let sweep = [("half", n / 2), ("same", n), ("double", 2 * n)];
    result.param("sweep", format!("{},{},{}", n / 2, n, 2 * n));
    let mut values = Vec::new();
    for (label, m) in sweep {
        let (v, _, _) = s_at(m)?;
        result.metric(&format!("sweep.S_{label}"), v);
        values.push(v);
    }
    let spread = values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - values.iter().copied().fold(f64::INFINITY, f64::min);
    result.check("S_spread", spread, Criterion::AtMost { bound: 2e-3 });
    result.metric("S_continuum", 8.0 / (3.0 * PI));

    let mut vectors = ws.functions().to_vec();
    vectors.extend(replicated);
    let dump = format_vectors(
        ws.geometry(),
        InnerProduct::L2,
        &vectors,
        &["functions: ground state, replica".into()],
    );
    sink.write(&mut result, "ground.dat", &dump)?;
    Ok(result)
}

fn single_fixed_cascade(config: &SuiteConfig, sink: &Sink) -> Result<ExperimentResult> {
    let mut result = ExperimentResult::new("single_fixed_cascade");
    let n = config.n_single;
    result.param("n", n);
    result.param("iterations", config.iterations);
    result.param("tol", format!("{:e}", config.tol));
    let ws = laplacian_modes(Fixed, n, 1, InnerProduct::L2)?;
    let run = iterate_to_fixed_point(&ws, config.iterations, config.tol)?;
    result.metric("iterations_run", run.records.len() as f64);
    result.metric("final_S", run.last().self_replicability[0]);
    result.check(
        "overlap_with_constant",
        overlap_with_constant(&run.final_set().functions()[0]),
        Criterion::AtLeast { bound: 0.99 },
    );
    let header = format!("single_fixed_cascade n={n} iterations={}", config.iterations);
    sink.write(&mut result, "trajectory.csv", &trajectory_csv(&header, &run))?;
    let iterates: Vec<DVector<f64>> = run.history.iter().map(|w| w.functions()[0].clone()).collect();
    let dump = format_vectors(
        ws.geometry(),
        InnerProduct::L2,
        &iterates,
        &["functions: iterate 0, 1, 2, ...".into()],
    );
    sink.write(&mut result, "cascade.dat", &dump)?;
    Ok(result)
}

fn set_experiment(config: &SuiteConfig, sink: &Sink, bc: BoundaryCondition) -> Result<ExperimentResult> {
    let name = format!("{bc}_set");
    let mut result = ExperimentResult::new(&name);
    let n = config.n_set;
    result.param("n", n);
    result.param("functions", 4);
    result.param("iterations", config.iterations);
    result.param("tol", format!("{:e}", config.tol));
    result.param(
        "states",
        match bc {
            Free => "midpoint-sampled cos(k pi x), k=0..3",
            Fixed => "midpoint-sampled sin(k pi x), k=1..4",
        },
    );
    let ws = laplacian_modes(bc, n, 4, InnerProduct::L2)?;
    let first = replicate(&ws)?;
    let run = iterate_to_fixed_point(&ws, config.iterations, config.tol)?;
    let overlaps = final_overlaps(&run);
    match bc {
        Free => {
            result.check_indexed(
                "first_step.S",
                &first.self_replicability,
                &[1.0, 0.9996, 1.0, 0.9957],
                2e-3,
            );
            for i in [0, 2] {
                result.check(
                    &format!("first_step.S_{}_exact", i + 1),
                    first.self_replicability[i],
                    Criterion::Within {
                        target: 1.0,
                        tolerance: 1e-6,
                    },
                );
            }
            result.check_indexed("fixed_point.S", &overlaps, &[1.0, 0.9996, 0.9996, 0.9949], 5e-3);
        }
        Fixed => {
            result.check_indexed(
                "first_step.S",
                &first.self_replicability,
                &[0.9537, 1.0, 0.9452, 1.0],
                5e-3,
            );
            result.check_indexed("fixed_point.S", &overlaps, &[0.8431, 0.8724, 0.8516, 0.8020], 3e-2);
        }
    }
    result.metrics_indexed("first_step.projection_norm", &first.projection_norms);
    result.metrics_indexed("fixed_point.self_replicability", &run.last().self_replicability);
    result.metric("iterations_run", run.records.len() as f64);
    result.metric("final_subspace_distance", run.last().subspace_distance);
    result.metric("roughness_initial", roughness(&ws));
    result.metric("roughness_final", roughness(run.final_set()));

    let header = format!("{name} n={n} iterations={} tol={:e}", config.iterations, config.tol);
    sink.write(&mut result, "trajectory.csv", &trajectory_csv(&header, &run))?;
    sink.write(&mut result, "initial.dat", &format_waveset(&ws, &[]))?;
    sink.write(&mut result, "first_step.dat", &format_waveset(&first.replicated, &[]))?;
    sink.write(&mut result, "fixed_point.dat", &format_waveset(run.final_set(), &[]))?;
    Ok(result)
}

fn polynomial_experiment(config: &SuiteConfig, sink: &Sink) -> Result<ExperimentResult> {
    let mut result = ExperimentResult::new("polynomial");
    let degree = config.poly_degree;
    result.param("degree", degree);
    result.param("n", config.poly_n);
    result.param("n_fine", config.poly_n_fine);
    let constant = check_polynomial_selfreplicability(0, config.poly_n)?;
    result.check(
        "degree0.min_S",
        constant.min_s,
        Criterion::Within {
            target: 1.0,
            tolerance: 1e-12,
        },
    );
    let coarse = check_polynomial_selfreplicability(degree, config.poly_n)?;
    let fine = check_polynomial_selfreplicability(degree, config.poly_n_fine)?;
    result.check("min_S", coarse.min_s, Criterion::AtLeast { bound: 0.999 });
    result.check("min_S_fine", fine.min_s, Criterion::AtLeast { bound: 0.999 });
    result.check(
        "max_deviation",
        coarse.max_deviation,
        Criterion::AtMost { bound: 5e-3 },
    );
    result.metric("max_deviation_fine", fine.max_deviation);
    // machine-precision slack: midpoint polynomials replicate exactly
    result.check(
        "deviation_growth",
        fine.max_deviation - coarse.max_deviation,
        Criterion::AtMost { bound: 1e-12 },
    );
    result.metrics_indexed("S", &coarse.self_replicability);
    let ws = polynomial_waveset(degree, config.poly_n)?;
    sink.write(&mut result, "polynomials.dat", &format_waveset(&ws, &[]))?;
    Ok(result)
}

fn alpha_experiment(config: &SuiteConfig, _: &Sink) -> Result<ExperimentResult> {
    let mut result = ExperimentResult::new("alpha_spectrum");
    result.param("degree", config.poly_degree);
    result.param("n", config.alpha_n);
    result.param("alpha_scale", "sqrt(2)");
    let high = check_alpha_spectrum(config.poly_degree, config.alpha_n)?;
    result.metrics_indexed("lambda", &high.eigenvalues);
    result.check("max_error", high.max_error, Criterion::AtMost { bound: 5e-3 });
    let low = check_alpha_spectrum(2, config.poly_n)?;
    result.metrics_indexed("degree2.lambda", &low.eigenvalues);
    result.check("degree2.max_error", low.max_error, Criterion::AtMost { bound: 1e-3 });
    let constant = check_alpha_spectrum(0, config.poly_n)?;
    result.check(
        "degree0.lambda",
        constant.eigenvalues[0],
        Criterion::Within {
            target: 1.0,
            tolerance: 1e-12,
        },
    );
    Ok(result)
}

fn square_experiment(config: &SuiteConfig, sink: &Sink, bc: BoundaryCondition) -> Result<ExperimentResult> {
    let name = format!("{bc}_2d");
    let mut result = ExperimentResult::new(&name);
    let n = config.n_2d;
    result.param("n", n);
    result.param("functions", 4);
    result.param("iterations", config.iterations);
    result.param("tol", format!("{:e}", config.tol));
    result.param("states", "separable midpoint-sampled Laplacian modes");
    let ws = laplacian_modes_2d(bc, n, 4, InnerProduct::L2)?;
    let run = iterate_to_fixed_point(&ws, config.iterations, config.tol)?;
    let distance = run.last().subspace_distance;
    result.metric("iterations_run", run.records.len() as f64);
    result.metrics_indexed("first_step.S", &run.records[0].self_replicability);
    result.metrics_indexed("fixed_point.S", &final_overlaps(&run));
    result.metric("roughness_initial", roughness(&ws));
    result.metric("roughness_final", roughness(run.final_set()));
    let line = laplacian_modes(bc, n, 4, InnerProduct::L2)?;
    let line_run = iterate_to_fixed_point(&line, config.iterations, config.tol)?;
    result.metric("roughness_final_1d", roughness(line_run.final_set()));
    match bc {
        Free => {
            result.check("final_subspace_distance", distance, Criterion::AtMost { bound: 1e-3 });
            let constant = WaveSet::orthonormalize(
                Geometry::Square(n),
                InnerProduct::L2,
                &[DVector::from_element(n * n, 1.0)],
            )?;
            let s = replicate(&constant)?.self_replicability[0];
            result.check(
                "constant.S",
                s,
                Criterion::Within {
                    target: 1.0,
                    tolerance: 1e-12,
                },
            );
        }
        Fixed => result.metric("final_subspace_distance", distance),
    }
    let header = format!("{name} n={n}x{n} iterations={} tol={:e}", config.iterations, config.tol);
    sink.write(&mut result, "trajectory.csv", &trajectory_csv(&header, &run))?;
    sink.write(&mut result, "initial.dat", &format_waveset(&ws, &[]))?;
    sink.write(&mut result, "fixed_point.dat", &format_waveset(run.final_set(), &[]))?;
    Ok(result)
}

fn cbrg_experiment(_: &SuiteConfig, sink: &Sink) -> Result<ExperimentResult> {
    let mut result = ExperimentResult::new("cbrg");
    result.param("block_sites", 8);
    result.param("kept_states", 4);
    result.param("levels", 3);
    result.param("block_bc", Free);
    let naive = naive_brg(32, Fixed)?;
    let fixed = cbrg(&CbrgConfig::new(8, 4, 3, Fixed))?;
    let free = cbrg(&CbrgConfig::new(8, 4, 3, Free))?;
    let naive_error = naive.ground_relative_error().unwrap_or(f64::NAN);
    let cbrg_error = fixed.ground_relative_error().unwrap_or(f64::NAN);
    result.metric("naive.relative_error", naive_error);
    result.metric("fixed.relative_error", cbrg_error);
    result.check(
        "improvement_ratio",
        naive_error / cbrg_error,
        Criterion::AtLeast { bound: 10.0 },
    );
    result.check(
        "free.ground",
        free.approximate[0].abs(),
        Criterion::AtMost { bound: 1e-10 },
    );
    report_checks(&mut result, "naive", &naive);
    report_checks(&mut result, "fixed", &fixed);
    report_checks(&mut result, "free", &free);
    for bc in [Fixed, Free] {
        let mut previous = f64::INFINITY;
        let mut growth = f64::NEG_INFINITY;
        for kept in [1, 2, 4, 8] {
            let report = cbrg(&CbrgConfig::new(8, kept, 3, bc))?;
            let error = report.absolute_error[0];
            result.metric(&format!("{bc}.kept{kept}.absolute_error"), error);
            report_checks(&mut result, &format!("{bc}.kept{kept}"), &report);
            growth = growth.max(error - previous);
            previous = error;
        }
        result.check(
            &format!("{bc}.error_growth_with_kept"),
            growth,
            Criterion::AtMost { bound: 1e-12 },
        );
    }
    sink.write(&mut result, "naive_report.txt", &naive.to_text())?;
    sink.write(&mut result, "fixed_report.txt", &fixed.to_text())?;
    sink.write(&mut result, "free_report.txt", &free.to_text())?;
    Ok(result)
}

/// Higher free-grid states with a small seeded asymmetry, iterated; no checks.
fn pascal_experiment(config: &SuiteConfig, sink: &Sink) -> Result<ExperimentResult> {
    let mut result = ExperimentResult::new("pascal_2d");
    let n = 16;
    let (lo, hi) = (4, 8);
    let amplitude = 1e-6;
    result.param("n", n);
    result.param("states", format!("free grid eigenstates {lo}..{hi}"));
    result.param("seed", config.pascal_seed);
    result.param("perturbation", format!("{amplitude:e}"));
    result.param("iterations", config.iterations);
    let spectrum = LatticeSpec::grid(n, n, Free).build()?.lowest(hi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.pascal_seed);
    let raw: Vec<DVector<f64>> = (lo..hi)
        .map(|i| spectrum.vector(i).map(|v| v + amplitude * rng.gen_range(-1.0..1.0)))
        .collect();
    let ws = WaveSet::orthonormalize(Geometry::Square(n), InnerProduct::L2, &raw)?;
    let run = iterate_to_fixed_point(&ws, config.iterations, config.tol)?;
    result.metric("iterations_run", run.records.len() as f64);
    result.metric("final_subspace_distance", run.last().subspace_distance);
    result.metric("roughness_final", roughness(run.final_set()));
    let header = format!("pascal_2d n={n}x{n} seed={}", config.pascal_seed);
    sink.write(&mut result, "trajectory.csv", &trajectory_csv(&header, &run))?;
    sink.write(&mut result, "initial.dat", &format_waveset(&ws, &[]))?;
    sink.write(&mut result, "fixed_point.dat", &format_waveset(run.final_set(), &[]))?;
    Ok(result)
}
