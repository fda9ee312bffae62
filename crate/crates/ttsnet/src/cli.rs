//! Command-line surface of the `ttsnet` binary.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use ttsnet_core::baselines::{HmmBaseline, IshiiModel, PngBank};
use ttsnet_core::dataset::{Corpus, TurnEvent};
use ttsnet_core::descriptors::{effective_duration, nhnf};
use ttsnet_core::eval::{aggregate_folds, evaluate_fold, evaluate_objects, EarlyPredictor, PngPredictor};
use ttsnet_core::metrics::{cohen_kappa, format_median_mad, standard_taus};
use ttsnet_core::ttsnet::TtsnetModel;

use crate::experiment::{fold_from_records, run_experiment, CorpusSource, ExperimentConfig, Method};
use crate::{io, CliError, CliResult, ThreadPoolExecutor};

#[derive(Debug, Parser)]
#[command(name = "ttsnet", version, about = "Early turn-taking prediction with spiking networks")]
pub struct Cli {
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON experiment config; every field is optional.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Worker threads, 0 for one per core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the synthetic corpus as events.jsonl and objects.csv.
    GenData,
    /// Train one method on the whole corpus and save it as model_<method>.json.
    Train {
        #[arg(long)]
        method: Method,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Predict events at each fraction with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        events: PathBuf,
        /// Observed fractions; defaults to 0.1, 0.2, ..., 1.0.
        #[arg(long, value_delimiter = ',')]
        tau: Vec<f64>,
    },
    /// Full leave-one-subject-out experiment.
    Eval {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Aggregate prediction CSVs, one per fold, into curve.csv.
    Curve {
        #[arg(required = true)]
        predictions: Vec<PathBuf>,
    },
    /// Leave-one-subject-out next-object benchmark.
    Objects {
        /// `trial_id,step,object_id` CSV; the synthetic sequences otherwise.
        #[arg(long)]
        objects: Option<PathBuf>,
    },
    /// Firing maps and NHNF of one event under a saved TTSNet model.
    DumpRaster {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        event_id: String,
        #[arg(long, default_value_t = 1.0)]
        tau: f64,
    },
    /// Cohen's kappa between two label files.
    Kappa { a: PathBuf, b: PathBuf },
}

#[derive(Debug, clap::Args)]
pub struct DataArgs {
    /// JSON Lines turn events; replaces the configured corpus.
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long, requires = "events")]
    objects: Option<PathBuf>,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct PngBundle {
    ttsnet: TtsnetModel,
    bank: PngBank,
}

fn config(cli: &Cli) -> CliResult<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn with_data(mut cfg: ExperimentConfig, data: &DataArgs) -> ExperimentConfig {
    if let Some(events) = &data.events {
        cfg.corpus = CorpusSource::Files { events: events.clone(), objects: data.objects.clone() };
    }
    cfg
}

fn find_event(events: Vec<TurnEvent>, id: &str) -> CliResult<TurnEvent> {
    events
        .into_iter()
        .find(|e| e.event_id == id)
        .ok_or_else(|| CliError::Data(format!("no event `{id}`")))
}

fn predict_all<P: EarlyPredictor>(p: &P, events: &[TurnEvent], taus: &[f64], exec: &ThreadPoolExecutor, out: &Path) -> CliResult<()> {
    let report = evaluate_fold(p, "", events, taus, exec)?;
    io::write_predictions(out, &report.records)?;
    for (t, f1) in taus.iter().zip(&report.f1) {
        println!("tau {t:.1}  F1 {f1:.3}");
    }
    Ok(())
}

pub fn run(cli: Cli) -> CliResult<()> {
    let exec = ThreadPoolExecutor::new(cli.threads).map_err(|e| CliError::Config(format!("threads: {e}")))?;
    let cfg = config(&cli)?;
    let out = cli.out_dir.as_path();
    match &cli.command {
        Command::GenData => {
            let CorpusSource::Synthetic(_) = &cfg.corpus else {
                return Err(CliError::Config("corpus: gen-data needs a synthetic corpus".into()));
            };
            let corpus = cfg.corpus.load(cfg.seed)?;
            io::write_events(&out.join("events.jsonl"), &corpus.events)?;
            io::write_object_sequences(&out.join("objects.csv"), &corpus.object_sequences)?;
            println!("{} events, {} object trials -> {}", corpus.events.len(), corpus.object_sequences.len(), out.display());
        }
        Command::Train { method, data } => {
            let cfg = with_data(cfg, data);
            let corpus: Corpus = cfg.corpus.load(cfg.seed)?;
            let path = out.join(format!("model_{}.json", method.name()));
            match method {
                Method::Ttsnet => {
                    let (model, report) = TtsnetModel::train(&corpus, &cfg.ttsnet, cfg.seed, &exec)?;
                    println!("training F1 {:.3}", report.training_f1);
                    io::save_bundle(&path, "ttsnet", &model)?;
                }
                Method::Hmm => io::save_bundle(&path, "hmm", &HmmBaseline::train(&corpus, &cfg.hmm, cfg.seed)?)?,
                Method::Ishii => io::save_bundle(&path, "ishii", &IshiiModel::train(&corpus, &cfg.ishii, cfg.seed)?)?,
                Method::Png => {
                    let (ttsnet, _) = TtsnetModel::train(&corpus, &cfg.ttsnet, cfg.seed, &exec)?;
                    let bank = PngBank::train(&ttsnet, &corpus, &cfg.png, cfg.seed)?;
                    io::save_bundle(&path, "png", &PngBundle { ttsnet, bank })?;
                }
            }
            println!("saved {}", path.display());
        }
        Command::Predict { model, events, tau } => {
            let taus = if tau.is_empty() { standard_taus().to_vec() } else { tau.clone() };
            let events = io::read_events(events)?;
            let dest = out.join("predictions.csv");
            match io::bundle_kind(model)?.as_str() {
                "ttsnet" => {
                    let m: TtsnetModel = io::load_bundle(model, "ttsnet")?;
                    m.validate()?;
                    predict_all(&m, &events, &taus, &exec, &dest)?
                }
                "hmm" => predict_all(&io::load_bundle::<HmmBaseline>(model, "hmm")?, &events, &taus, &exec, &dest)?,
                "ishii" => predict_all(&io::load_bundle::<IshiiModel>(model, "ishii")?, &events, &taus, &exec, &dest)?,
                "png" => {
                    let b: PngBundle = io::load_bundle(model, "png")?;
                    b.ttsnet.validate()?;
                    let p = PngPredictor { model: &b.ttsnet, matcher: b.bank.matcher() };
                    predict_all(&p, &events, &taus, &exec, &dest)?
                }
                other => return Err(CliError::Data(format!("{}: unknown model kind `{other}`", model.display()))),
            }
        }
        Command::Eval { data } => {
            let cfg = with_data(cfg, data);
            let summary = run_experiment(&cfg, out, &exec)?;
            println!("{:<12} {:>6}  F1(0.1)  F1(0.5)  F1(1.0)", "method", "AUC");
            let rows = summary.methods.iter().map(|(k, m)| (k.as_str(), m));
            for (name, m) in rows.chain(std::iter::once(("always-give", &summary.always_give))) {
                println!("{name:<12} {:>6.3}  {:>7.3}  {:>7.3}  {:>7.3}", m.auc, m.f1_mean[0], m.f1_mean[4], m.f1_mean[9]);
            }
            if let Some(o) = &summary.objects {
                println!("objects: hmm {}  bigram {}  uniform {:.3}", o.hmm_table, o.bigram_table, o.uniform_baseline);
            }
            println!("reports in {}", out.display());
        }
        Command::Curve { predictions } => {
            let folds = predictions
                .iter()
                .map(|p| fold_from_records(&p.display().to_string(), io::read_predictions(p)?))
                .collect::<CliResult<Vec<_>>>()?;
            let curve = aggregate_folds(&folds)?;
            io::write_curve(&out.join("curve.csv"), &curve)?;
            println!("AUC {:.4} over {} folds", curve.auc, folds.len());
        }
        Command::Objects { objects } => {
            let corpus = match objects {
                Some(p) => Corpus::new(Vec::new(), io::read_object_sequences(p)?)?,
                None => cfg.corpus.load(cfg.seed)?,
            };
            let reports = evaluate_objects(&corpus, &cfg.object_models, cfg.seed, &exec)?;
            let preds: Vec<_> = reports.iter().flat_map(|r| r.predictions.iter().cloned()).collect();
            io::write_object_predictions(&out.join("objects_predictions.csv"), &preds, cfg.object_models.n_objects)?;
            let hmm: Vec<f64> = reports.iter().map(|r| r.hmm_weighted_f1).collect();
            let bigram: Vec<f64> = reports.iter().map(|r| r.bigram_weighted_f1).collect();
            println!("{:<10} hmm / bigram", "subject");
            for r in &reports {
                println!("{:<10} {:.3} / {:.3}", r.held_out_subject, r.hmm_weighted_f1, r.bigram_weighted_f1);
            }
            println!("HMM    {}", format_median_mad(&hmm)?);
            println!("bigram {}", format_median_mad(&bigram)?);
        }
        Command::DumpRaster { model, events, event_id, tau } => {
            let m: TtsnetModel = io::load_bundle(model, "ttsnet")?;
            m.validate()?;
            let event = find_event(io::read_events(events)?, event_id)?;
            let q = m.encode(&event.observation, *tau)?;
            let maps = m.firing_maps_quantized(&q)?;
            let stem: String = event_id.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
            for (k, map) in maps.iter().enumerate() {
                io::write_raster(&out.join(format!("raster_{stem}_{k}.csv")), map)?;
            }
            let span = effective_duration(q.rows(), m.config.sim_ms, m.config.fixed_normalization);
            io::write_descriptor(&out.join(format!("nhnf_{stem}.csv")), &nhnf(&maps, m.config.bins, span as f64)?)?;
            println!("{} firing maps of {event_id} -> {}", maps.len(), out.display());
        }
        Command::Kappa { a, b } => {
            let (a, b) = (io::read_labels(a)?, io::read_labels(b)?);
            println!("{:.6}", cohen_kappa(&a, &b)?);
        }
    }
    Ok(())
}
