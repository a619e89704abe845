use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use log::info;
use serde::Serialize;

use mpap_core::boost::Mode;
use mpap_core::cohort::{
    load_cohort, save_cohort, synth_cohort, write_synth_waveforms, Cohort, FeatureGroup,
    SynthConfig,
};
use mpap_core::metrics::{write_roc_csv, write_scatter_csv};

use crate::args::{
    AblateArgs, Command, FeaturesArgs, ModelArgs, ReportArgs, RunArgs, SynthArgs, TuneArgs,
    TuningArgs,
};
use crate::error::{CliError, Result};
use crate::pipeline::{
    ablate, compute_features, prepare, run_experiment, tune, AblationReport, ExperimentConfig,
    RunReport, Task,
};

pub const COHORT_FILE: &str = "cohort.csv";
pub const FEATURES_FILE: &str = "features.csv";
pub const WAVEFORM_DIR: &str = "waveforms";
pub const REPORT_FILE: &str = "report.json";
pub const ABLATION_JSON: &str = "ablation.json";
pub const ABLATION_CSV: &str = "ablation.csv";
pub const HISTORY_FILE: &str = "history.csv";
pub const BEST_CONFIG_FILE: &str = "best_config.json";

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Synth(a) => synth(a),
        Command::Features(a) => features(a),
        Command::Tune(a) => tune_cmd(a),
        Command::Run(a) => run(a),
        Command::Ablate(a) => ablate_cmd(a),
        Command::Report(a) => report(a),
    }
}

/// A directory resolves to its features.csv, else its cohort.csv.
pub fn resolve_input(path: &Path) -> PathBuf {
    if path.is_dir() {
        let features = path.join(FEATURES_FILE);
        if features.exists() {
            features
        } else {
            path.join(COHORT_FILE)
        }
    } else {
        path.to_path_buf()
    }
}

fn load(path: &Path) -> Result<Cohort> {
    let file = resolve_input(path);
    info!("loading {}", file.display());
    load_cohort(&file).map_err(|e| CliError::from(e).context(format!("reading {}", file.display())))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::data(anyhow!(e).context(format!("creating {}", dir.display()))))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::data(anyhow!(e).context(format!("creating {}", path.display()))))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)
        .map_err(|e| CliError::data(anyhow!(e).context(format!("writing {}", path.display()))))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::data(anyhow!(e).context(format!("reading {}", path.display()))))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::data(anyhow!(e).context(format!("parsing {}", path.display()))))
}

fn experiment(model: &ModelArgs, tuning: &TuningArgs) -> Result<ExperimentConfig> {
    if model.groups.0.is_empty() {
        return Err(CliError::usage("--groups needs at least one group"));
    }
    let mut cfg = ExperimentConfig::new(model.task, model.mode);
    cfg.groups = model.groups.0.clone();
    apply_tuning(&mut cfg, tuning)?;
    Ok(cfg)
}

fn apply_tuning(cfg: &mut ExperimentConfig, tuning: &TuningArgs) -> Result<()> {
    if !tuning.threshold.is_finite() {
        return Err(CliError::usage("--threshold must be finite"));
    }
    cfg.budget = tuning.budget;
    cfg.space = tuning.space;
    cfg.tune_cv = tuning.tune_cv;
    cfg.threshold = tuning.threshold;
    cfg.seed = tuning.seed;
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let cfg = SynthConfig {
        n_patients: a.n,
        seed: a.seed,
        missing_values: !a.no_missing,
        ..SynthConfig::default()
    };
    let out = synth_cohort(&cfg)?;
    create_dir(&a.out)?;
    save_cohort(&a.out.join(COHORT_FILE), &out.cohort)?;
    write_synth_waveforms(&a.out.join(WAVEFORM_DIR), &out.waveforms)?;
    let positives = out
        .cohort
        .labels(cfg.label_threshold)
        .iter()
        .filter(|&&l| l)
        .count();
    println!(
        "{} patients ({} PH, {} no PH), seed {}, written to {}",
        out.cohort.len(),
        positives,
        out.cohort.len() - positives,
        cfg.seed,
        a.out.display()
    );
    Ok(())
}

fn features(a: FeaturesArgs) -> Result<()> {
    let cohort_path = if a.input.is_dir() {
        a.input.join(COHORT_FILE)
    } else {
        a.input.clone()
    };
    let dir = cohort_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let cohort = load_cohort(&cohort_path)
        .map_err(|e| CliError::from(e).context(format!("reading {}", cohort_path.display())))?;
    let (filled, failures) =
        compute_features(&cohort, &dir.join(WAVEFORM_DIR), a.seed, a.skip_failures)?;
    let out = a.out.unwrap_or_else(|| dir.join(FEATURES_FILE));
    save_cohort(&out, &filled)?;
    println!(
        "features for {} of {} patients written to {}",
        filled.len(),
        cohort.len(),
        out.display()
    );
    for f in &failures {
        println!("  skipped patient {}: {}", f.patient, f.message);
    }
    Ok(())
}

fn tune_cmd(a: TuneArgs) -> Result<()> {
    let cfg = experiment(&a.model, &a.tuning)?;
    let cohort = load(&a.tuning.input)?;
    let ds = prepare(&cohort, cfg.task, &cfg.groups, cfg.threshold)?;
    let (result, best) = tune(&ds, &cfg)?;
    create_dir(&a.tuning.out)?;
    result.write_history_csv(create(&a.tuning.out.join(HISTORY_FILE))?)?;
    write_json(&a.tuning.out.join(BEST_CONFIG_FILE), &best)?;
    println!(
        "best objective {:.6} at iteration {} of {}",
        result.best_objective,
        result.best_iteration,
        result.history.len()
    );
    for (name, v) in result.names.iter().zip(&result.best) {
        println!("  {name} = {v}");
    }
    Ok(())
}

fn run(a: RunArgs) -> Result<()> {
    let mut cfg = experiment(&a.model, &a.tuning)?;
    cfg.cv = a.cv;
    cfg.strategy = a.strategy;
    let cohort = load(&a.tuning.input)?;
    let outcome = run_experiment(&cohort, &cfg)?;
    let out = &a.tuning.out;
    create_dir(out)?;
    write_json(&out.join(REPORT_FILE), &outcome.report)?;
    write_json(&out.join(BEST_CONFIG_FILE), &outcome.report.best_config)?;
    outcome
        .tuning
        .write_history_csv(create(&out.join(HISTORY_FILE))?)?;
    match &outcome.roc {
        Some(curve) => write_roc_csv(create(&out.join("roc.csv"))?, curve)?,
        None => write_scatter_csv(
            create(&out.join("scatter.csv"))?,
            &outcome.measured,
            &outcome.predictions,
        )?,
    }
    print!("{}", format_run(&outcome.report));
    Ok(())
}

fn ablate_cmd(a: AblateArgs) -> Result<()> {
    // Task, mode and groups are swept; these two are placeholders.
    let mut cfg = ExperimentConfig::new(Task::Regression, Mode::Gbdt);
    apply_tuning(&mut cfg, &a.tuning)?;
    cfg.cv = a.cv;
    cfg.strategy = a.strategy;
    let cohort = load(&a.tuning.input)?;
    let report = ablate(&cohort, &cfg)?;
    create_dir(&a.tuning.out)?;
    write_json(&a.tuning.out.join(ABLATION_JSON), &report)?;
    write_ablation_csv(&a.tuning.out.join(ABLATION_CSV), &report)?;
    print!("{}", format_ablation(&report));
    Ok(())
}

fn report(a: ReportArgs) -> Result<()> {
    let run = a.input.join(REPORT_FILE);
    let abl = a.input.join(ABLATION_JSON);
    if !run.exists() && !abl.exists() {
        return Err(CliError::data(anyhow!(
            "no {REPORT_FILE} or {ABLATION_JSON} in {}",
            a.input.display()
        )));
    }
    if run.exists() {
        print!("{}", format_run(&read_json(&run)?));
    }
    if abl.exists() {
        print!("{}", format_ablation(&read_json(&abl)?));
    }
    Ok(())
}

fn write_ablation_csv(path: &Path, report: &AblationReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record([
        "task", "mode", "groups", "metric", "value", "accuracy", "p_value", "error",
    ])?;
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for c in &report.cells {
        let metric = match c.task {
            Task::Regression => "mae",
            Task::Classification => "auc",
        };
        w.write_record([
            c.task.as_str(),
            c.mode.as_str(),
            &c.groups,
            metric,
            &opt(c.metric),
            &opt(c.accuracy),
            &opt(c.p_value),
            c.error.as_deref().unwrap_or(""),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn format_run(r: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{} / {} / {} ({} samples, {} features, cv {})",
        r.task, r.mode, r.groups, r.n_samples, r.n_features, r.cv
    );
    if let Some(reg) = &r.regression {
        let m = &reg.metrics;
        let _ = writeln!(s, "MAE {:.3}  RMSE {:.3}  R² {:.3}", m.mae, m.rmse, m.r2);
        let c = &reg.confusion;
        let _ = writeln!(
            s,
            "at {} mmHg: sensitivity {:.3}  specificity {:.3}  accuracy {:.3}  (TP {} FP {} TN {} FN {})",
            r.threshold_mmhg, c.sensitivity, c.specificity, c.accuracy, c.tp, c.fp, c.tn, c.fn_
        );
    }
    if let Some(cls) = &r.classification {
        let _ = writeln!(s, "AUC {:.3}", cls.auc);
        let _ = writeln!(
            s,
            "{:<12} {:>9} {:>6} {:>6} {:>6} {:>5} {:>5} {:>5} {:>5}",
            "strategy", "threshold", "sens", "spec", "acc", "TP", "FP", "TN", "FN"
        );
        for st in &cls.strategies {
            let c = &st.confusion;
            let t = st
                .threshold
                .map(|t| format!("{t:.4}"))
                .unwrap_or_else(|| "-".into());
            let mark = if st.strategy == cls.selected { "*" } else { "" };
            let _ = writeln!(
                s,
                "{:<12} {:>9} {:>6.3} {:>6.3} {:>6.3} {:>5} {:>5} {:>5} {:>5}",
                format!("{}{mark}", st.strategy),
                t,
                c.sensitivity,
                c.specificity,
                c.accuracy,
                c.tp,
                c.fp,
                c.tn,
                c.fn_
            );
        }
    }
    s
}

pub fn format_ablation(r: &AblationReport) -> String {
    let mut s = String::new();
    for task in Task::ALL {
        let metric = match task {
            Task::Regression => "MAE (mmHg)",
            Task::Classification => "AUC",
        };
        let _ = writeln!(s, "{task}: {metric}, p-value against all groups");
        let _ = write!(s, "{:<28}", "groups");
        for mode in Mode::ALL {
            let _ = write!(s, " {:>20}", mode.as_str());
        }
        s.push('\n');
        for subset in FeatureGroup::subsets() {
            let _ = write!(s, "{:<28}", FeatureGroup::label(&subset));
            for mode in Mode::ALL {
                let text = match r.cell(task, mode, &subset) {
                    Some(c) => match (c.metric, c.p_value) {
                        (Some(v), Some(p)) => format!("{v:.3} ({p:.2e})"),
                        (Some(v), None) => format!("{v:.3}"),
                        _ => "failed".into(),
                    },
                    None => "-".into(),
                };
                let _ = write!(s, " {text:>20}");
            }
            s.push('\n');
        }
        s.push('\n');
    }
    s
}
