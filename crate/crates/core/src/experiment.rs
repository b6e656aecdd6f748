//! End-to-end runs behind the command line: preprocessing, federated
//! training, evaluation, the quantized/unquantized comparison and plot
//! tables.
//!
//! Output directories:
//!
//! - `train`: `config.txt`, `model.fdsm`, `rounds.jsonl`, `timing.txt`, and
//!   with a softmax head `head.fdsm` and `head_rounds.jsonl`.
//! - `evaluate`: `report.txt`, `per_sample.csv`, `metrics_by_source.csv`,
//!   and with a head `softmax_report.txt`, `softmax_per_sample.csv`.
//! - `compare`: `config.txt`, `comparison.txt`, `timing.txt`, and one
//!   `gq_on/` and `gq_off/` directory each holding `model.fdsm`,
//!   `rounds.jsonl` and `report.txt`.
//!
//! `rounds.jsonl` holds one JSON object per round with the fields `t`, `F`,
//! `eta`, `uplink_bytes`, `downlink_bytes` and `f_k`. Only `timing.txt`
//! contains wall-clock measurements.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, InitKind, TrainOn};
use crate::data::format::parse_key_values;
use crate::data::{prepare_files, read_dataset, write_dataset, Dataset};
use crate::detector::{evaluate, evaluate_softmax, select_threshold, DetectionReport, ErrorCurve, Metrics, Threshold};
use crate::error::{Error, Result};
use crate::federation::{partition_zones, run_federation, RoundRecord, ZoneDataset};
use crate::fsio::{create_dir, read_string, write_atomic};
use crate::nn::{
    attach_softmax_head, encode_model, init_params, read_model, symmetric_autoencoder, write_model, InitScheme,
    Label, ModelParams, Sample,
};
use crate::rng::hash64;

pub const CONFIG_FILE: &str = "config.txt";
pub const MODEL_FILE: &str = "model.fdsm";
pub const HEAD_FILE: &str = "head.fdsm";
pub const ROUNDS_FILE: &str = "rounds.jsonl";
pub const HEAD_ROUNDS_FILE: &str = "head_rounds.jsonl";
pub const TIMING_FILE: &str = "timing.txt";
pub const REPORT_FILE: &str = "report.txt";
pub const COMPARISON_FILE: &str = "comparison.txt";

const HEAD_SEED_STREAM: u64 = 0x4EAD;

/// Worker cap from `FEDDISC_THREADS`; 0 when unset.
pub fn threads_from_env() -> Result<usize> {
    match std::env::var("FEDDISC_THREADS") {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("FEDDISC_THREADS must be a non-negative integer, got '{v}'"))),
        _ => Ok(0),
    }
}

/// Partition of the training split: zones for the autoencoder (natural
/// rows only unless `train_on=all`) and the full zones for the head.
pub fn build_zones(cfg: &ExperimentConfig, train: &[Sample]) -> Result<(Vec<ZoneDataset>, Vec<ZoneDataset>)> {
    let all = partition_zones(train, cfg.federation.clients, cfg.partition_scheme(), cfg.federation.global_seed)?;
    let ae = match cfg.train_on {
        TrainOn::All => all.clone(),
        TrainOn::Natural => all
            .iter()
            .map(|z| {
                ZoneDataset::new(
                    z.zone_id,
                    z.samples.iter().filter(|s| s.label == Label::Natural).cloned().collect(),
                )
            })
            .collect(),
    };
    Ok((ae, all))
}

/// `Z^0` for the autoencoder. CD-1 pretraining uses the pooled training
/// rows the autoencoder is trained on.
pub fn initial_model(cfg: &ExperimentConfig, dim: usize, pretrain_rows: &[Vec<f64>]) -> Result<ModelParams> {
    let spec = symmetric_autoencoder(dim, &cfg.hidden, cfg.activation, cfg.output_activation);
    let scheme = match cfg.init {
        InitKind::He => InitScheme::UniformHe,
        InitKind::Cd1 => InitScheme::Cd1Pretrained {
            data: pretrain_rows,
            epochs: cfg.cd1_epochs,
            lr: cfg.cd1_lr,
        },
    };
    init_params(&spec, cfg.federation.global_seed, scheme)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedDetector {
    pub initial: ModelParams,
    pub model: ModelParams,
    pub rounds: Vec<RoundRecord>,
    pub final_loss: f64,
    /// Softmax classifier and its round log, when configured.
    pub head: Option<(ModelParams, Vec<RoundRecord>)>,
}

pub fn train_detector(cfg: &ExperimentConfig, ds: &Dataset) -> Result<TrainedDetector> {
    cfg.validate()?;
    let (ae_zones, all_zones) = build_zones(cfg, &ds.train)?;
    let pretrain_rows: Vec<Vec<f64>> = match cfg.init {
        InitKind::He => vec![],
        InitKind::Cd1 => ae_zones
            .iter()
            .flat_map(|z| z.samples.iter().map(|s| s.features.clone()))
            .collect(),
    };
    let initial = initial_model(cfg, ds.dim, &pretrain_rows)?;
    let mut fed = cfg.federation.clone();
    fed.threads = threads_from_env()?;
    let out = run_federation(&fed, &ae_zones, initial.clone())?;

    let head = if cfg.softmax_head {
        let start = attach_softmax_head(&out.params, hash64(&[cfg.federation.global_seed, HEAD_SEED_STREAM]))?;
        let mut hcfg = cfg.head_federation();
        hcfg.threads = fed.threads;
        let h = run_federation(&hcfg, &all_zones, start)?;
        Some((h.params, h.rounds))
    } else {
        None
    };
    Ok(TrainedDetector {
        initial,
        model: out.params,
        rounds: out.rounds,
        final_loss: out.final_loss,
        head,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub threshold: Threshold,
    pub report: DetectionReport,
    pub softmax: Option<DetectionReport>,
}

/// Threshold from the training-split error curve, metrics on the test
/// split.
pub fn evaluate_detector(
    cfg: &ExperimentConfig,
    model: &ModelParams,
    head: Option<&ModelParams>,
    ds: &Dataset,
) -> Result<Evaluation> {
    let curve = ErrorCurve::from_model(model, &ds.train)?;
    let threshold = select_threshold(&curve, cfg.detector)?;
    let report = evaluate(model, &ds.test, threshold.tau)?;
    let softmax = head.map(|h| evaluate_softmax(h, &ds.test)).transpose()?;
    Ok(Evaluation {
        threshold,
        report,
        softmax,
    })
}

/// First round whose starting loss `F(Z^t)` is at most `target`; `T` when
/// only the final model reaches it.
pub fn rounds_to_target(rounds: &[RoundRecord], final_loss: f64, target: f64) -> Option<u32> {
    rounds
        .iter()
        .find(|r| r.global_loss <= target)
        .map(|r| r.t)
        .or_else(|| (final_loss <= target).then_some(rounds.len() as u32))
}

pub fn rounds_jsonl(rounds: &[RoundRecord]) -> Result<String> {
    let mut s = String::new();
    for r in rounds {
        s.push_str(&serde_json::to_string(r).map_err(|e| Error::Data(e.to_string()))?);
        s.push('\n');
    }
    Ok(s)
}

pub fn parse_rounds_jsonl(text: &str) -> Result<Vec<RoundRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Data(format!("round log line {}: {e}", i + 1))))
        .collect()
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn threshold_text(t: &Threshold) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "threshold_method={}", t.method.name());
    let _ = writeln!(s, "tau={}", t.tau);
    let _ = writeln!(s, "threshold_degenerate={}", t.degenerate);
    if let Some(i) = t.index {
        let _ = writeln!(s, "knee_index={i}");
    }
    s
}

fn by_source_csv(report: &DetectionReport, sources: &[String]) -> String {
    let mut s = String::from("source,name,n,tp,fp,tn,fn,accuracy,precision,recall,f_score\n");
    for (src, (c, m)) in report.by_source() {
        let name = src
            .checked_sub(1)
            .and_then(|i| sources.get(i as usize))
            .map(String::as_str)
            .unwrap_or("");
        let _ = writeln!(
            s,
            "{src},{name},{},{},{},{},{},{},{},{},{}",
            c.total(),
            c.tp,
            c.fp,
            c.tn,
            c.fn_,
            m.accuracy,
            m.precision,
            m.recall,
            m.f_score
        );
    }
    s
}

fn write_timing(dir: &Path, entries: &[(&str, f64)]) -> Result<()> {
    let mut s = String::new();
    for (k, v) in entries {
        let _ = writeln!(s, "{k}_seconds={v:.3}");
    }
    write_atomic(dir.join(TIMING_FILE), s.as_bytes())
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

/// Summary returned by [`cmd_prep`].
#[derive(Clone, Debug, PartialEq)]
pub struct PrepSummary {
    pub n: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub dim: usize,
    pub sources: usize,
    pub imputed_cells: usize,
}

/// Load, impute, split, project and scale the CSV files into a dataset
/// file plus its manifest.
pub fn cmd_prep(inputs: &[PathBuf], out: &Path, config: Option<&Path>) -> Result<PrepSummary> {
    let cfg = load_config(config)?;
    let prepared = prepare_files(inputs, &cfg.csv, &cfg.pipeline)?;
    write_dataset(out, &prepared.dataset)?;
    let ds = &prepared.dataset;
    Ok(PrepSummary {
        n: ds.len(),
        n_train: ds.train.len(),
        n_test: ds.test.len(),
        dim: ds.dim,
        sources: ds.sources.len(),
        imputed_cells: prepared.imputed_cells,
    })
}

/// Federated training; writes the model, round logs and resolved config.
pub fn cmd_train(data: &Path, config: Option<&Path>, out: &Path) -> Result<TrainedDetector> {
    let cfg = load_config(config)?;
    let ds = read_dataset(data)?;
    create_dir(out)?;
    write_atomic(out.join(CONFIG_FILE), cfg.to_text().as_bytes())?;
    let start = Instant::now();
    let trained = train_detector(&cfg, &ds)?;
    let elapsed = start.elapsed().as_secs_f64();
    write_model(out.join(MODEL_FILE), &trained.model)?;
    write_atomic(out.join(ROUNDS_FILE), rounds_jsonl(&trained.rounds)?.as_bytes())?;
    if let Some((head, rounds)) = &trained.head {
        write_model(out.join(HEAD_FILE), head)?;
        write_atomic(out.join(HEAD_ROUNDS_FILE), rounds_jsonl(rounds)?.as_bytes())?;
    }
    write_timing(out, &[("train", elapsed)])?;
    Ok(trained)
}

/// Threshold on the training split, metrics on the test split. Without an
/// explicit config, `config.txt` next to the model is used when present;
/// likewise `head.fdsm` for the softmax path.
pub fn cmd_evaluate(
    model: &Path,
    data: &Path,
    out: &Path,
    config: Option<&Path>,
    head: Option<&Path>,
) -> Result<Evaluation> {
    let model_dir = model.parent().unwrap_or(Path::new("."));
    let sibling_config = model_dir.join(CONFIG_FILE);
    let cfg = match config {
        Some(p) => ExperimentConfig::load(p)?,
        None if sibling_config.exists() => ExperimentConfig::load(&sibling_config)?,
        None => ExperimentConfig::default(),
    };
    let sibling_head = model_dir.join(HEAD_FILE);
    let head_path = head.map(Path::to_path_buf).or_else(|| sibling_head.exists().then_some(sibling_head));
    let params = read_model(model)?;
    let head_params = head_path.map(read_model).transpose()?;
    let ds = read_dataset(data)?;
    let ev = evaluate_detector(&cfg, &params, head_params.as_ref(), &ds)?;

    create_dir(out)?;
    let report = threshold_text(&ev.threshold) + &ev.report.to_text();
    write_atomic(out.join(REPORT_FILE), report.as_bytes())?;
    write_atomic(out.join("per_sample.csv"), ev.report.per_sample_csv().as_bytes())?;
    write_atomic(out.join("metrics_by_source.csv"), by_source_csv(&ev.report, &ds.sources).as_bytes())?;
    if let Some(sm) = &ev.softmax {
        write_atomic(out.join("softmax_report.txt"), sm.to_text().as_bytes())?;
        write_atomic(out.join("softmax_per_sample.csv"), sm.per_sample_csv().as_bytes())?;
    }
    Ok(ev)
}

/// One side of the comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct VariantSummary {
    pub quantized: bool,
    pub uplink_bytes: u64,
    pub downlink_bytes: u64,
    pub rounds_to_target: Option<u32>,
    pub final_loss: f64,
    pub tau: f64,
    pub metrics: Metrics,
    pub initial_sha256: String,
}

impl VariantSummary {
    fn from_run(quantized: bool, cfg: &ExperimentConfig, t: &TrainedDetector, ev: &Evaluation) -> Self {
        Self {
            quantized,
            uplink_bytes: t.rounds.iter().map(|r| r.uplink_bytes).sum(),
            downlink_bytes: t.rounds.iter().map(|r| r.downlink_bytes).sum(),
            rounds_to_target: rounds_to_target(&t.rounds, t.final_loss, cfg.target_loss),
            final_loss: t.final_loss,
            tau: ev.threshold.tau,
            metrics: ev.report.metrics,
            initial_sha256: sha256_hex(&encode_model(&t.initial)),
        }
    }
}

/// Quantized versus full-precision uplink on identical seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub params: usize,
    pub clients: usize,
    pub rounds: u32,
    pub with_gq: VariantSummary,
    pub without_gq: VariantSummary,
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

impl ComparisonReport {
    pub fn uplink_ratio(&self) -> f64 {
        ratio(self.with_gq.uplink_bytes, self.without_gq.uplink_bytes)
    }

    pub fn total_ratio(&self) -> f64 {
        ratio(
            self.with_gq.uplink_bytes + self.with_gq.downlink_bytes,
            self.without_gq.uplink_bytes + self.without_gq.downlink_bytes,
        )
    }

    /// `key=value` lines; per-variant keys are prefixed `gq_on.` and
    /// `gq_off.`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "params={}", self.params);
        let _ = writeln!(s, "clients={}", self.clients);
        let _ = writeln!(s, "rounds={}", self.rounds);
        for (name, v) in [("gq_on", &self.with_gq), ("gq_off", &self.without_gq)] {
            let _ = writeln!(s, "{name}.uplink_bytes={}", v.uplink_bytes);
            let _ = writeln!(s, "{name}.downlink_bytes={}", v.downlink_bytes);
            let _ = writeln!(s, "{name}.total_bytes={}", v.uplink_bytes + v.downlink_bytes);
            let rtt = v.rounds_to_target.map(|r| r.to_string()).unwrap_or_else(|| "none".into());
            let _ = writeln!(s, "{name}.rounds_to_target={rtt}");
            let _ = writeln!(s, "{name}.final_loss={}", v.final_loss);
            let _ = writeln!(s, "{name}.tau={}", v.tau);
            let _ = writeln!(s, "{name}.accuracy={}", v.metrics.accuracy);
            let _ = writeln!(s, "{name}.precision={}", v.metrics.precision);
            let _ = writeln!(s, "{name}.recall={}", v.metrics.recall);
            let _ = writeln!(s, "{name}.f_score={}", v.metrics.f_score);
            let _ = writeln!(s, "{name}.initial_sha256={}", v.initial_sha256);
        }
        let _ = writeln!(s, "uplink_ratio={}", self.uplink_ratio());
        let _ = writeln!(s, "total_ratio={}", self.total_ratio());
        s
    }
}

/// Both variants of one configuration, differing only in
/// `quantization_enabled`.
pub fn compare(cfg: &ExperimentConfig, ds: &Dataset) -> Result<(ComparisonReport, [(TrainedDetector, Evaluation); 2])> {
    let mut runs = Vec::with_capacity(2);
    for quantized in [true, false] {
        let mut c = cfg.clone();
        c.federation.quantization_enabled = quantized;
        c.softmax_head = false;
        let t = train_detector(&c, ds)?;
        let ev = evaluate_detector(&c, &t.model, None, ds)?;
        runs.push((t, ev));
    }
    let off = runs.pop().expect("two runs");
    let on = runs.pop().expect("two runs");
    let report = ComparisonReport {
        params: on.0.model.dim(),
        clients: cfg.federation.clients,
        rounds: cfg.federation.rounds,
        with_gq: VariantSummary::from_run(true, cfg, &on.0, &on.1),
        without_gq: VariantSummary::from_run(false, cfg, &off.0, &off.1),
    };
    Ok((report, [on, off]))
}

pub fn cmd_compare(data: &Path, config: Option<&Path>, out: &Path) -> Result<ComparisonReport> {
    let cfg = load_config(config)?;
    let ds = read_dataset(data)?;
    create_dir(out)?;
    write_atomic(out.join(CONFIG_FILE), cfg.to_text().as_bytes())?;
    let start = Instant::now();
    let (report, runs) = compare(&cfg, &ds)?;
    let elapsed = start.elapsed().as_secs_f64();
    for ((t, ev), name) in runs.iter().zip(["gq_on", "gq_off"]) {
        let dir = out.join(name);
        create_dir(&dir)?;
        write_model(dir.join(MODEL_FILE), &t.model)?;
        write_atomic(dir.join(ROUNDS_FILE), rounds_jsonl(&t.rounds)?.as_bytes())?;
        let text = threshold_text(&ev.threshold) + &ev.report.to_text();
        write_atomic(dir.join(REPORT_FILE), text.as_bytes())?;
    }
    write_atomic(out.join(COMPARISON_FILE), report.to_text().as_bytes())?;
    write_timing(out, &[("compare", elapsed)])?;
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    JsonLines,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "jsonlines" | "jsonl" => Ok(ReportFormat::JsonLines),
            _ => Err(Error::InvalidArgument(format!("unknown report format '{s}'"))),
        }
    }

    fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::JsonLines => "jsonl",
        }
    }
}

/// Rows of named columns rendered as CSV or JSON lines.
struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<serde_json::Value>>,
}

impl Table {
    fn render(&self, format: ReportFormat) -> String {
        let mut s = String::new();
        match format {
            ReportFormat::Csv => {
                s.push_str(&self.columns.join(","));
                s.push('\n');
                for r in &self.rows {
                    let cells: Vec<String> = r
                        .iter()
                        .map(|v| match v {
                            serde_json::Value::String(x) => x.clone(),
                            serde_json::Value::Null => String::new(),
                            other => other.to_string(),
                        })
                        .collect();
                    s.push_str(&cells.join(","));
                    s.push('\n');
                }
            }
            ReportFormat::JsonLines => {
                for r in &self.rows {
                    let obj: serde_json::Map<String, serde_json::Value> =
                        self.columns.iter().cloned().zip(r.iter().cloned()).collect();
                    s.push_str(&serde_json::Value::Object(obj).to_string());
                    s.push('\n');
                }
            }
        }
        s
    }
}

fn loss_table(logs: &[(String, Vec<RoundRecord>)]) -> Table {
    let clients = logs
        .iter()
        .flat_map(|(_, r)| r.iter().map(|x| x.client_losses.len()))
        .max()
        .unwrap_or(0);
    let mut columns: Vec<String> = ["run", "t", "F", "eta", "uplink_bytes", "downlink_bytes"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    columns.extend((0..clients).map(|k| format!("f_{k}")));
    let mut rows = Vec::new();
    for (name, log) in logs {
        for r in log {
            let mut row = vec![
                json!(name),
                json!(r.t),
                json!(r.global_loss),
                json!(r.eta),
                json!(r.uplink_bytes),
                json!(r.downlink_bytes),
            ];
            row.extend((0..clients).map(|k| r.client_losses.get(k).map(|v| json!(v)).unwrap_or(json!(null))));
            rows.push(row);
        }
    }
    Table { columns, rows }
}

fn csv_table(text: &str) -> Result<Table> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let columns = rdr.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        rows.push(
            rec?.iter()
                .map(|c| match c.parse::<f64>() {
                    Ok(v) if v.is_finite() => json!(v),
                    _ => json!(c),
                })
                .collect(),
        );
    }
    Ok(Table { columns, rows })
}

fn comparison_table(text: &str) -> Result<Table> {
    let kv = parse_key_values(text)?;
    let fields = [
        "uplink_bytes",
        "downlink_bytes",
        "total_bytes",
        "rounds_to_target",
        "final_loss",
        "accuracy",
        "precision",
        "recall",
        "f_score",
    ];
    let mut columns = vec!["variant".to_string()];
    columns.extend(fields.iter().map(|s| s.to_string()));
    let mut rows = Vec::new();
    for variant in ["gq_on", "gq_off"] {
        let mut row = vec![json!(variant)];
        for f in fields {
            let v = kv.get(&format!("{variant}.{f}")).cloned().unwrap_or_default();
            row.push(match v.parse::<f64>() {
                Ok(x) => json!(x),
                Err(_) => json!(v),
            });
        }
        rows.push(row);
    }
    Ok(Table { columns, rows })
}

/// Writes plot-ready tables for whatever a run directory contains: loss
/// curves from every round log, per-source metrics and comparison bars.
/// Returns the files written.
pub fn cmd_report(input: &Path, format: ReportFormat, out: Option<&Path>) -> Result<Vec<PathBuf>> {
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| input.join("report"));
    let mut logs = Vec::new();
    for (name, rel) in [
        ("train", PathBuf::from(ROUNDS_FILE)),
        ("head", PathBuf::from(HEAD_ROUNDS_FILE)),
        ("gq_on", Path::new("gq_on").join(ROUNDS_FILE)),
        ("gq_off", Path::new("gq_off").join(ROUNDS_FILE)),
    ] {
        let p = input.join(rel);
        if p.exists() {
            logs.push((name.to_string(), parse_rounds_jsonl(&read_string(&p)?)?));
        }
    }
    let mut tables = Vec::new();
    if !logs.is_empty() {
        tables.push(("loss_curves", loss_table(&logs)));
    }
    let by_source = input.join("metrics_by_source.csv");
    if by_source.exists() {
        tables.push(("per_source_metrics", csv_table(&read_string(&by_source)?)?));
    }
    let comparison = input.join(COMPARISON_FILE);
    if comparison.exists() {
        tables.push(("comparison_bars", comparison_table(&read_string(&comparison)?)?));
    }
    if tables.is_empty() {
        return Err(Error::Data(format!("{} holds no run outputs", input.display())));
    }
    create_dir(&out)?;
    let mut written = Vec::new();
    for (name, table) in tables {
        let p = out.join(format!("{name}.{}", format.extension()));
        write_atomic(&p, table.render(format).as_bytes())?;
        written.push(p);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(t: u32, f: f64) -> RoundRecord {
        RoundRecord {
            t,
            global_loss: f,
            eta: 0.1,
            uplink_bytes: 10,
            downlink_bytes: 20,
            client_losses: vec![f, f],
        }
    }

    #[test]
    fn rounds_to_target_rules() {
        let log = vec![record(0, 0.5), record(1, 0.2), record(2, 0.05)];
        assert_eq!(rounds_to_target(&log, 0.01, 0.2), Some(1));
        assert_eq!(rounds_to_target(&log, 0.01, 0.02), Some(3));
        assert_eq!(rounds_to_target(&log, 0.03, 0.02), None);
    }

    #[test]
    fn round_log_round_trip() {
        let log = vec![record(0, 0.5), record(1, 0.25)];
        let text = rounds_jsonl(&log).unwrap();
        assert!(text.starts_with("{\"t\":0,\"F\":0.5,"));
        assert_eq!(parse_rounds_jsonl(&text).unwrap(), log);
    }

    #[test]
    fn loss_table_formats() {
        let t = loss_table(&[("train".into(), vec![record(0, 0.5)])]);
        assert_eq!(
            t.render(ReportFormat::Csv),
            "run,t,F,eta,uplink_bytes,downlink_bytes,f_0,f_1\ntrain,0,0.5,0.1,10,20,0.5,0.5\n"
        );
        let jl = t.render(ReportFormat::JsonLines);
        let v: serde_json::Value = serde_json::from_str(jl.trim()).unwrap();
        assert_eq!(v["F"], json!(0.5));
        assert_eq!(v["run"], json!("train"));
    }
}
