//! One function per subcommand. Each returns an [`Output`]; nothing here
//! touches the filesystem except to read inputs.

use imflow_core::mlp::{
    accuracy, chain_trajectory, grad_check, init, train, Activation, ChainConfig, Dataset, GradCheckReport, MlpConfig,
    SnapshotChain,
};
use imflow_core::objectives::ObjectiveValue;
use imflow_core::{
    analyze_joint, analyze_quantities, equivalence_check, exact_joint, joint_from_samples, noise_bound_check,
    quantities_from_joint, sample_channel, select, Analysis, Axis, Candidate, Discretizer, Mode, NoiseBoundReport,
    ObjectiveSpec, SelectionResult,
};
use serde::Serialize;

use crate::args::{AnalyzeArgs, GradCheckArgs, SimulateArgs, SweepArgs, TrainChainArgs};
use crate::config::{read_json, CandidatesConfig, SimulateConfig};
use crate::dataset::CsvTable;
use crate::error::{CliError, Result};
use crate::report::{analysis_row, Output, Report, Table, ANALYSIS_HEADERS};

fn check_tolerances(tol: f64, tau: f64) -> Result<()> {
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(CliError::Input(format!(
            "--tol must be finite and non-negative, got {tol}"
        )));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(CliError::Input(format!("--tau must lie in [0, 1], got {tau}")));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct Roles {
    pub x: Vec<String>,
    pub t: Vec<String>,
    pub y: String,
}

#[derive(Debug, Serialize)]
pub struct Alphabets {
    pub x: usize,
    pub t: usize,
    pub y: usize,
}

#[derive(Debug, Serialize)]
pub struct AnalyzeBody {
    pub samples: usize,
    pub roles: Roles,
    /// `None` when X and T are read as exact categories.
    pub discretizer: Option<Discretizer>,
    pub alphabets: Alphabets,
    pub analysis: Analysis,
}

pub fn analyze(args: &AnalyzeArgs) -> Result<Output> {
    check_tolerances(args.tol, args.tau)?;
    if args.x.is_empty() || args.t.is_empty() || args.y.is_empty() {
        return Err(CliError::Input(
            "--x, --t and --y must each name at least one column".into(),
        ));
    }
    let table = CsvTable::read(&args.dataset)?;
    let disc = Discretizer::new(args.strategy.into(), args.bins)?;
    let x = table.symbols(&args.x, args.categorical, &disc)?;
    let t = table.symbols(&args.t, args.categorical, &disc)?;
    let y = table.categorical(std::slice::from_ref(&args.y))?;
    let joint = joint_from_samples(&[(Axis::X, &x), (Axis::T, &t), (Axis::Y, &y)])?;
    let analysis = analyze_joint(&joint, args.mode.into(), args.tol, args.tau)?;
    log::info!(
        "analyzed {} rows: pattern {}, {} failed checks",
        table.rows.len(),
        analysis.pattern.kind,
        analysis.constraints.failures().count()
    );

    let body = AnalyzeBody {
        samples: table.rows.len(),
        roles: Roles {
            x: args.x.clone(),
            t: args.t.clone(),
            y: args.y.clone(),
        },
        discretizer: (!args.categorical).then_some(disc),
        alphabets: Alphabets {
            x: joint.alphabet_size(Axis::X)?,
            t: joint.alphabet_size(Axis::T)?,
            y: joint.alphabet_size(Axis::Y)?,
        },
        analysis,
    };
    let table = Table {
        headers: ANALYSIS_HEADERS.to_vec(),
        rows: vec![analysis_row(&body.analysis)],
    };
    Ok(Output {
        json: Report::new("analyze", args, &body).to_json()?,
        table,
        files: Vec::new(),
        exit_code: 0,
    })
}

#[derive(Debug, Serialize)]
pub struct SampledBody {
    pub samples: usize,
    pub seed: u64,
    pub analysis: Analysis,
    /// Largest absolute difference between sampled and exact matrix entries.
    pub max_entry_gap_bits: f64,
}

#[derive(Debug, Serialize)]
pub struct SimulateBody {
    pub analysis: Analysis,
    pub noise_bounds: NoiseBoundReport,
    pub sampled: Option<SampledBody>,
}

pub fn simulate(args: &SimulateArgs) -> Result<Output> {
    check_tolerances(args.tol, args.tau)?;
    let cfg: SimulateConfig = read_json(&args.config)?;
    let scenario = cfg.scenario()?;
    let q = quantities_from_joint(&exact_joint(&scenario)?)?;
    let mode = match args.mode {
        Some(m) => m.into(),
        None if q.n_xxf > args.tol => Mode::Stochastic,
        None => Mode::Deterministic,
    };
    let analysis = analyze_quantities(&q, mode, args.tol, args.tau);
    let noise_bounds = noise_bound_check(&scenario)?;

    let mut files = Vec::new();
    let mut rows = vec![with_source("exact", analysis_row(&analysis))];
    let sampled = match args.samples.or(cfg.samples) {
        None | Some(0) => None,
        Some(n) => {
            let seed = args.seed.or(cfg.seed).unwrap_or(0);
            let s = sample_channel(&scenario, n, seed)?;
            let sampled = analyze_joint(&s.joint()?, mode, args.tol, args.tau)?;
            let gap = sampled
                .matrix
                .entries()
                .iter()
                .zip(analysis.matrix.entries())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            rows.push(with_source("sampled", analysis_row(&sampled)));
            let sample_rows = (0..s.len())
                .map(|i| vec![s.x[i].0.to_string(), s.t[i].0.to_string(), s.y[i].0.to_string()])
                .collect();
            files.push((
                "samples.csv",
                Table {
                    headers: vec!["x", "t", "y"],
                    rows: sample_rows,
                },
            ));
            Some(SampledBody {
                samples: n,
                seed,
                analysis: sampled,
                max_entry_gap_bits: gap,
            })
        }
    };

    let body = SimulateBody {
        analysis,
        noise_bounds,
        sampled,
    };
    let mut headers = vec!["source"];
    headers.extend(ANALYSIS_HEADERS);
    Ok(Output {
        json: Report::new("simulate", args, &body).to_json()?,
        table: Table { headers, rows },
        files,
        exit_code: 0,
    })
}

fn with_source(source: &str, mut row: Vec<String>) -> Vec<String> {
    row.insert(0, source.to_string());
    row
}

#[derive(Debug, Serialize)]
pub struct TrainingSummary {
    pub train_samples: usize,
    pub measured_on: &'static str,
    pub measured_samples: usize,
    pub final_accuracy: f64,
    pub final_loss_nats: f64,
    pub loss_history_nats: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct TrainChainBody {
    pub model: MlpConfig,
    pub training: TrainingSummary,
    pub snapshots: Vec<SnapshotChain>,
}

pub const DIAGRAM_HEADERS: [&str; 6] = ["snapshot_epoch", "layer", "a_bits", "d_bits", "ixx_bits", "pattern"];

pub fn diagram_rows(snapshots: &[SnapshotChain]) -> Vec<Vec<String>> {
    snapshots
        .iter()
        .flat_map(|s| {
            s.chain.layers.iter().map(move |l| {
                vec![
                    s.epoch.to_string(),
                    l.label.clone(),
                    l.analysis.point.x_bits.to_string(),
                    l.analysis.point.y_bits.to_string(),
                    l.analysis.ixx_from_point.to_string(),
                    l.analysis.pattern.kind.to_string(),
                ]
            })
        })
        .collect()
}

pub fn train_chain(args: &TrainChainArgs) -> Result<Output> {
    check_tolerances(args.tol, args.tau)?;
    let table = CsvTable::read(&args.dataset)?;
    table.column_index(&args.y)?;
    let x: Vec<String> = if args.x.is_empty() {
        table.headers.iter().filter(|h| **h != args.y).cloned().collect()
    } else {
        args.x.clone()
    };
    if x.is_empty() {
        return Err(CliError::Input("no input columns left besides the target".into()));
    }
    let data = table.binary_dataset(&x, &args.y)?;

    let activations: Vec<Activation> = match args.activation.len() {
        1 => vec![args.activation[0].into(); args.hidden.len()],
        n if n == args.hidden.len() => args.activation.iter().map(|&a| a.into()).collect(),
        n => {
            return Err(CliError::Input(format!(
                "{n} activations given for {} hidden layers",
                args.hidden.len()
            )))
        }
    };
    let mut widths = vec![x.len()];
    widths.extend(&args.hidden);
    widths.push(1);
    let snapshot_epochs = if args.snapshots.is_empty() {
        vec![0, args.epochs]
    } else {
        args.snapshots.clone()
    };
    let cfg = MlpConfig {
        layer_widths: widths,
        hidden_activations: activations,
        seed: args.seed,
        learning_rate: args.learning_rate,
        epochs: args.epochs,
        batch_size: args.batch_size,
        snapshot_epochs,
    };
    let (train_set, measure_set, measured_on) = if args.holdout > 0.0 {
        let (a, b) = data.holdout_split(args.holdout, args.seed)?;
        (a, b, "held_out")
    } else {
        (data.clone(), data, "train")
    };

    let model = init(&cfg)?;
    let outcome = train(&model, &train_set, &cfg)?;
    let chain_cfg = ChainConfig {
        bins: args.bins,
        max_units: args.max_units,
        mode: args.mode.into(),
        tol: args.tol,
        tau: args.tau,
        chain_epsilon: args.chain_eps,
        input_discretizer: Discretizer::uniform(args.bins)?,
    };
    let snapshots = chain_trajectory(&outcome.snapshots, &measure_set, &chain_cfg)?;
    for s in &snapshots {
        if !s.chain.dpi_holds(args.tol.max(1e-9)) {
            return Err(CliError::Internal(format!(
                "per-layer data processing inequality failed at epoch {}",
                s.epoch
            )));
        }
        if !s.chain.chains_monotone() {
            log::warn!(
                "epoch {}: chain monotonicity violated beyond {} bits",
                s.epoch,
                args.chain_eps
            );
        }
    }
    let final_accuracy = accuracy(&outcome.model, &train_set)?;
    log::info!("trained {} epochs, training accuracy {final_accuracy}", cfg.epochs);

    let rows = diagram_rows(&snapshots);
    let body = TrainChainBody {
        model: cfg,
        training: TrainingSummary {
            train_samples: train_set.len(),
            measured_on,
            measured_samples: measure_set.len(),
            final_accuracy,
            final_loss_nats: *outcome.loss_history.last().expect("epochs >= 1"),
            loss_history_nats: outcome.loss_history,
        },
        snapshots,
    };
    let diagram = Table {
        headers: DIAGRAM_HEADERS.to_vec(),
        rows,
    };
    Ok(Output {
        json: Report::new("train-chain", args, &body).to_json()?,
        table: diagram.clone(),
        files: vec![("diagram.csv", diagram)],
        exit_code: 0,
    })
}

#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub label: String,
    #[serde(flatten)]
    pub selection: SelectionResult,
}

#[derive(Debug, Serialize)]
pub struct EquivalenceRow {
    pub alpha: f64,
    pub beta: Option<f64>,
    /// `equivalent`, `not_equivalent`, or `undefined` when alpha is 0.
    pub verdict: &'static str,
    pub equivalent: Option<bool>,
}

#[derive(Debug, Serialize)]
pub struct RawRow {
    pub beta: f64,
    pub equivalent: bool,
    pub raw_argmin_set: Vec<String>,
    pub reformulated_argmin_set: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct RawSection {
    /// Raw and reformulated rankings are only expected to agree when every
    /// candidate is deterministic and all share one target.
    pub expected_equivalent: bool,
    pub rows: Vec<RawRow>,
}

#[derive(Debug, Serialize)]
pub struct SweepBody {
    pub candidates: Vec<Candidate>,
    pub rows: Vec<SweepRow>,
    pub equivalence: Vec<EquivalenceRow>,
    pub raw_vs_reformulated: RawSection,
}

pub fn objective_sweep(args: &SweepArgs) -> Result<Output> {
    if let Some(a) = args.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(CliError::Input(format!("alpha {a} outside [0, 1]")));
    }
    if let Some(b) = args.betas.iter().find(|b| !(**b >= 0.0 && b.is_finite())) {
        return Err(CliError::Input(format!("beta {b} must be finite and non-negative")));
    }
    let cfg: CandidatesConfig = read_json(&args.config)?;
    let candidates = cfg.build()?;

    let mut specs = vec![
        ObjectiveSpec::LossOnly,
        ObjectiveSpec::NoiseOnly,
        ObjectiveSpec::Diagonal,
    ];
    specs.extend(args.alphas.iter().map(|&alpha| ObjectiveSpec::Parametric { alpha }));
    for &beta in &args.betas {
        specs.push(ObjectiveSpec::IbReformulated { beta });
        specs.push(ObjectiveSpec::IbRaw { beta });
    }
    let rows = specs
        .iter()
        .map(|spec| {
            Ok(SweepRow {
                label: spec.label(),
                selection: select(&candidates, spec)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let equivalence = args
        .alphas
        .iter()
        .map(|&alpha| {
            if alpha == 0.0 {
                return Ok(EquivalenceRow {
                    alpha,
                    beta: None,
                    verdict: "undefined",
                    equivalent: None,
                });
            }
            let e = equivalence_check(&candidates, alpha)?;
            Ok(EquivalenceRow {
                alpha,
                beta: Some(e.beta),
                verdict: if e.equivalent { "equivalent" } else { "not_equivalent" },
                equivalent: Some(e.equivalent),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let deterministic = candidates.iter().all(|c| c.quantities.n_xxf <= 1e-9);
    let (lo, hi) = candidates
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
            (lo.min(c.quantities.h_y), hi.max(c.quantities.h_y))
        });
    let find = |label: String| {
        rows.iter()
            .find(|r| r.label == label)
            .map(|r| &r.selection)
            .expect("every beta has both Lagrangian rows")
    };
    let raw_rows = args
        .betas
        .iter()
        .map(|&beta| {
            let raw = find(ObjectiveSpec::IbRaw { beta }.label());
            let reformulated = find(ObjectiveSpec::IbReformulated { beta }.label());
            RawRow {
                beta,
                equivalent: raw.same_argmin(reformulated),
                raw_argmin_set: raw.argmin_set.clone(),
                reformulated_argmin_set: reformulated.argmin_set.clone(),
            }
        })
        .collect();
    let raw_section = RawSection {
        expected_equivalent: deterministic && hi - lo <= 1e-9,
        rows: raw_rows,
    };
    if raw_section.expected_equivalent && raw_section.rows.iter().any(|r| !r.equivalent) {
        return Err(CliError::Internal(
            "raw and reformulated Lagrangians disagree on a deterministic family".into(),
        ));
    }

    let table_rows = rows
        .iter()
        .flat_map(|r| {
            r.selection
                .values
                .iter()
                .map(move |ObjectiveValue { name, value_bits }| {
                    vec![
                        r.label.clone(),
                        name.clone(),
                        value_bits.to_string(),
                        r.selection.argmin_set.contains(name).to_string(),
                        (r.selection.selected == *name).to_string(),
                    ]
                })
        })
        .collect();
    let body = SweepBody {
        candidates,
        rows,
        equivalence,
        raw_vs_reformulated: raw_section,
    };
    Ok(Output {
        json: Report::new("objective-sweep", args, &body).to_json()?,
        table: Table {
            headers: vec!["objective", "candidate", "value_bits", "in_argmin", "selected"],
            rows: table_rows,
        },
        files: Vec::new(),
        exit_code: 0,
    })
}

#[derive(Debug, Serialize)]
pub struct GradCheckBody {
    pub model: MlpConfig,
    pub samples: usize,
    pub threshold: f64,
    pub passed: bool,
    #[serde(flatten)]
    pub report: GradCheckReport,
}

pub fn grad_check_cmd(args: &GradCheckArgs) -> Result<Output> {
    let mut cfg = MlpConfig::new(args.widths.clone(), args.activation.into());
    cfg.seed = args.seed;
    let model = init(&cfg)?;
    let data = match (&args.data, &args.y) {
        (Some(path), Some(y)) => {
            let table = CsvTable::read(path)?;
            table.column_index(y)?;
            let x: Vec<String> = table.headers.iter().filter(|h| *h != y).cloned().collect();
            table.binary_dataset(&x, y)?
        }
        (Some(_), None) => return Err(CliError::Input("--data needs --y".into())),
        (None, _) => Dataset::random_binary(args.samples, args.widths[0], args.seed)?,
    };
    let report = grad_check(&model, &data, args.eps)?;
    let passed = report.max_relative_error < args.threshold;
    if !passed {
        log::error!(
            "gradient check failed: max relative error {:e} >= {:e}",
            report.max_relative_error,
            args.threshold
        );
    }
    let row = vec![
        report.eps.to_string(),
        report.max_relative_error.to_string(),
        report.parameters_checked.to_string(),
        report.parameters_skipped.to_string(),
        passed.to_string(),
    ];
    let body = GradCheckBody {
        model: cfg,
        samples: data.len(),
        threshold: args.threshold,
        passed,
        report,
    };
    Ok(Output {
        json: Report::new("grad-check", args, &body).to_json()?,
        table: Table {
            headers: vec![
                "eps",
                "max_relative_error",
                "parameters_checked",
                "parameters_skipped",
                "passed",
            ],
            rows: vec![row],
        },
        files: Vec::new(),
        exit_code: if passed { 0 } else { 4 },
    })
}
