//! Leave-one-subject-out orchestration: trains every requested method per
//! fold, evaluates it over the standard fractions and writes the reports.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ttsnet_core::baselines::{HmmBaseline, HmmBaselineConfig, IshiiConfig, IshiiModel, PngBank, PngConfig};
use ttsnet_core::dataset::{generate_synthetic, Corpus, SyntheticConfig, TurnEvent};
use ttsnet_core::descriptors::FiringMap;
use ttsnet_core::eval::{
    aggregate_folds, evaluate_fold, evaluate_objects, loso_split, AlwaysGive, CurveSummary, FoldReport,
    PngPredictor,
};
use ttsnet_core::metrics::{self, standard_taus};
use ttsnet_core::objects::ObjectConfig;
use ttsnet_core::rng::derive;
use ttsnet_core::ttsnet::{TtsnetConfig, TtsnetModel};
use ttsnet_core::{Error, Executor};

use crate::io;
use crate::{CliError, CliResult};

pub const SUMMARY_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ttsnet,
    Hmm,
    Ishii,
    Png,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Ttsnet, Method::Hmm, Method::Ishii, Method::Png];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ttsnet => "ttsnet",
            Method::Hmm => "hmm",
            Method::Ishii => "ishii",
            Method::Png => "png",
        }
    }

    /// Offset of this method's stream within a fold seed.
    fn stream(self) -> u64 {
        self as u64 + 1
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method `{s}` (expected ttsnet, hmm, ishii or png)"))
    }
}

/// Turn events and object sequences, either generated or read from disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum CorpusSource {
    Synthetic(SyntheticConfig),
    Files { events: PathBuf, objects: Option<PathBuf> },
}

impl Default for CorpusSource {
    fn default() -> Self {
        CorpusSource::Synthetic(SyntheticConfig::default())
    }
}

impl CorpusSource {
    pub fn load(&self, seed: u64) -> CliResult<Corpus> {
        match self {
            CorpusSource::Synthetic(cfg) => Ok(generate_synthetic(cfg, seed)?),
            CorpusSource::Files { events, objects } => io::load_corpus(events, objects.as_deref()),
        }
    }
}

/// Events whose firing maps are dumped, simulated by the network of the fold
/// that holds them out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RasterRequest {
    pub event_ids: Vec<String>,
    pub tau: f64,
}

impl Default for RasterRequest {
    fn default() -> Self {
        RasterRequest { event_ids: Vec::new(), tau: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub corpus: CorpusSource,
    pub methods: Vec<Method>,
    /// Also run the next-object benchmark when the corpus has sequences.
    pub objects: bool,
    pub ttsnet: TtsnetConfig,
    pub hmm: HmmBaselineConfig,
    pub ishii: IshiiConfig,
    pub png: PngConfig,
    pub object_models: ObjectConfig,
    pub raster: Option<RasterRequest>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 7,
            corpus: CorpusSource::default(),
            methods: Method::ALL.to_vec(),
            objects: true,
            ttsnet: TtsnetConfig::default(),
            hmm: HmmBaselineConfig::default(),
            ishii: IshiiConfig::default(),
            png: PngConfig::default(),
            object_models: ObjectConfig::default(),
            raster: None,
        }
    }
}

/// Prefixes a core validation error with the config section it came from.
fn in_section(section: &str, e: Error) -> CliError {
    match e {
        Error::InvalidParameter { name, reason } => CliError::Config(format!("{section}.{name}: {reason}")),
        other => CliError::Config(format!("{section}: {other}")),
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> CliResult<()> {
        if let CorpusSource::Synthetic(s) = &self.corpus {
            s.validate().map_err(|e| in_section("corpus.synthetic", e))?;
        }
        if self.methods.is_empty() {
            return Err(CliError::Config("methods: at least one method is required".into()));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(CliError::Config(format!("methods[{i}]: `{}` is listed twice", m.name())));
            }
        }
        self.ttsnet.validate().map_err(|e| in_section("ttsnet", e))?;
        self.hmm.validate().map_err(|e| in_section("hmm", e))?;
        self.ishii.validate().map_err(|e| in_section("ishii", e))?;
        self.png.validate().map_err(|e| in_section("png", e))?;
        self.object_models.validate().map_err(|e| in_section("object_models", e))?;
        if let Some(r) = &self.raster {
            if !(r.tau > 0.0 && r.tau <= 1.0) {
                return Err(CliError::Config(format!("raster.tau: must lie in (0, 1], got {}", r.tau)));
            }
        }
        Ok(())
    }

    /// Loads a JSON config; missing fields take their defaults.
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let cfg: ExperimentConfig = io::read_config(path)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldF1 {
    pub held_out_subject: String,
    pub f1: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub auc: f64,
    pub taus: Vec<f64>,
    pub f1_mean: Vec<f64>,
    pub f1_std: Vec<f64>,
    pub folds: Vec<FoldF1>,
}

impl MethodSummary {
    fn new(curve: &CurveSummary, folds: &[FoldReport]) -> Self {
        MethodSummary {
            auc: curve.auc,
            taus: curve.taus.clone(),
            f1_mean: curve.f1_mean.clone(),
            f1_std: curve.f1_std.clone(),
            folds: folds
                .iter()
                .map(|f| FoldF1 { held_out_subject: f.held_out_subject.clone(), f1: f.f1.clone() })
                .collect(),
        }
    }
}

/// Weighted F1 of the next-object predictors, one value per held-out subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectsSummary {
    pub subjects: Vec<String>,
    pub hmm_weighted_f1: Vec<f64>,
    pub bigram_weighted_f1: Vec<f64>,
    pub hmm_median: f64,
    pub hmm_mad: f64,
    pub bigram_median: f64,
    pub bigram_mad: f64,
    pub uniform_baseline: f64,
    /// `median ± MAD`, three decimals.
    pub hmm_table: String,
    pub bigram_table: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub seed: u64,
    pub n_events: usize,
    pub n_subjects: usize,
    pub methods: BTreeMap<String, MethodSummary>,
    pub always_give: MethodSummary,
    /// Training-set F1 of each fold's TTSNet classifier.
    pub ttsnet_training_f1: Vec<f64>,
    pub objects: Option<ObjectsSummary>,
}

struct FoldOutcome {
    reports: Vec<FoldReport>,
    always_give: FoldReport,
    training_f1: Option<f64>,
    rasters: Vec<(String, Vec<FiringMap>)>,
}

fn run_fold<E: Executor>(
    cfg: &ExperimentConfig,
    train: &Corpus,
    held_out: &str,
    test: &[TurnEvent],
    fold_seed: u64,
    exec: &E,
) -> CliResult<FoldOutcome> {
    let taus = standard_taus().to_vec();
    let needs_ttsnet = cfg.methods.iter().any(|m| matches!(m, Method::Ttsnet | Method::Png))
        || cfg.raster.as_ref().is_some_and(|r| !r.event_ids.is_empty());
    let ttsnet = if needs_ttsnet {
        log::info!("fold {held_out}: training ttsnet on {} events", train.events.len());
        Some(TtsnetModel::train(train, &cfg.ttsnet, derive(fold_seed, Method::Ttsnet.stream()), exec)?)
    } else {
        None
    };
    let mut reports = Vec::with_capacity(cfg.methods.len());
    for &m in &cfg.methods {
        let seed = derive(fold_seed, m.stream());
        log::info!("fold {held_out}: {}", m.name());
        let report = match m {
            Method::Ttsnet => {
                let (model, _) = ttsnet.as_ref().expect("trained above");
                evaluate_fold(model, held_out, test, &taus, exec)?
            }
            Method::Hmm => {
                let model = HmmBaseline::train(train, &cfg.hmm, seed)?;
                evaluate_fold(&model, held_out, test, &taus, exec)?
            }
            Method::Ishii => {
                let model = IshiiModel::train(train, &cfg.ishii, seed)?;
                evaluate_fold(&model, held_out, test, &taus, exec)?
            }
            Method::Png => {
                let (model, _) = ttsnet.as_ref().expect("trained above");
                let bank = PngBank::train(model, train, &cfg.png, seed)?;
                let predictor = PngPredictor { model, matcher: bank.matcher() };
                evaluate_fold(&predictor, held_out, test, &taus, exec)?
            }
        };
        reports.push(report);
    }
    let always_give = evaluate_fold(&AlwaysGive, held_out, test, &taus, exec)?;
    let mut rasters = Vec::new();
    if let (Some(req), Some((model, _))) = (&cfg.raster, &ttsnet) {
        for e in test.iter().filter(|e| req.event_ids.contains(&e.event_id)) {
            rasters.push((e.event_id.clone(), model.firing_maps(&e.observation, req.tau)?));
        }
    }
    Ok(FoldOutcome { reports, always_give, training_f1: ttsnet.map(|(_, r)| r.training_f1), rasters })
}

fn curve_of(folds: &[FoldReport]) -> CliResult<CurveSummary> {
    Ok(aggregate_folds(folds)?)
}

fn file_safe(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn objects_summary(reports: &[ttsnet_core::eval::ObjectFoldReport], n_objects: usize) -> CliResult<ObjectsSummary> {
    let hmm: Vec<f64> = reports.iter().map(|r| r.hmm_weighted_f1).collect();
    let bigram: Vec<f64> = reports.iter().map(|r| r.bigram_weighted_f1).collect();
    Ok(ObjectsSummary {
        subjects: reports.iter().map(|r| r.held_out_subject.clone()).collect(),
        hmm_median: ttsnet_core::stats::median_lower(&hmm).expect("one value per fold"),
        hmm_mad: metrics::mad(&hmm)?,
        bigram_median: ttsnet_core::stats::median_lower(&bigram).expect("one value per fold"),
        bigram_mad: metrics::mad(&bigram)?,
        uniform_baseline: 1.0 / n_objects as f64,
        hmm_table: metrics::format_median_mad(&hmm)?,
        bigram_table: metrics::format_median_mad(&bigram)?,
        hmm_weighted_f1: hmm,
        bigram_weighted_f1: bigram,
    })
}

/// Runs every LOSO fold and writes, under `out_dir`:
/// `predictions/<method>_<subject>.csv`, `curve_<method>.csv`,
/// `objects_predictions.csv` (when objects run), `rasters/<event>_<k>.csv`
/// (on request) and `summary.json`.
pub fn run_experiment<E: Executor>(cfg: &ExperimentConfig, out_dir: &Path, exec: &E) -> CliResult<Summary> {
    cfg.validate()?;
    let corpus = cfg.corpus.load(cfg.seed)?;
    run_on_corpus(cfg, &corpus, out_dir, exec)
}

pub fn run_on_corpus<E: Executor>(cfg: &ExperimentConfig, corpus: &Corpus, out_dir: &Path, exec: &E) -> CliResult<Summary> {
    cfg.validate()?;
    let folds = loso_split(corpus)?;
    log::info!("{} events, {} folds", corpus.events.len(), folds.len());
    let outcomes: Vec<CliResult<FoldOutcome>> = exec.map_indexed(folds.len(), |f| {
        let fold = &folds[f];
        run_fold(cfg, &fold.train, &fold.held_out, &fold.test.events, derive(cfg.seed, f as u64), exec)
    });
    let outcomes: Vec<FoldOutcome> = outcomes.into_iter().collect::<CliResult<_>>()?;

    let objects = if cfg.objects && !corpus.object_sequences.is_empty() {
        log::info!("object benchmark over {} trials", corpus.object_sequences.len());
        let reports = evaluate_objects(corpus, &cfg.object_models, derive(cfg.seed, 1 << 32), exec)?;
        let preds: Vec<_> = reports.iter().flat_map(|r| r.predictions.iter().cloned()).collect();
        io::write_object_predictions(&out_dir.join("objects_predictions.csv"), &preds, cfg.object_models.n_objects)?;
        Some(objects_summary(&reports, cfg.object_models.n_objects)?)
    } else {
        None
    };

    let mut methods = BTreeMap::new();
    for (k, m) in cfg.methods.iter().enumerate() {
        let reports: Vec<FoldReport> = outcomes.iter().map(|o| o.reports[k].clone()).collect();
        for r in &reports {
            let path = out_dir.join("predictions").join(format!("{}_{}.csv", m.name(), file_safe(&r.held_out_subject)));
            io::write_predictions(&path, &r.records)?;
        }
        let curve = curve_of(&reports)?;
        io::write_curve(&out_dir.join(format!("curve_{}.csv", m.name())), &curve)?;
        methods.insert(m.name().to_string(), MethodSummary::new(&curve, &reports));
    }
    let give: Vec<FoldReport> = outcomes.iter().map(|o| o.always_give.clone()).collect();
    let always_give = MethodSummary::new(&curve_of(&give)?, &give);

    for o in &outcomes {
        for (id, maps) in &o.rasters {
            for (k, map) in maps.iter().enumerate() {
                io::write_raster(&out_dir.join("rasters").join(format!("{}_{k}.csv", file_safe(id))), map)?;
            }
        }
    }

    let summary = Summary {
        schema_version: SUMMARY_SCHEMA_VERSION,
        seed: cfg.seed,
        n_events: corpus.events.len(),
        n_subjects: corpus.subjects.len(),
        methods,
        always_give,
        ttsnet_training_f1: outcomes.iter().filter_map(|o| o.training_f1).collect(),
        objects,
    };
    io::write_json(&out_dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Rebuilds a fold report from a prediction CSV, one F1 per fraction in
/// order of first appearance.
pub fn fold_from_records(held_out: &str, records: Vec<ttsnet_core::eval::PredictionRecord>) -> CliResult<FoldReport> {
    let mut taus: Vec<f64> = Vec::new();
    let mut confusions: Vec<metrics::Confusion> = Vec::new();
    for r in &records {
        let k = match taus.iter().position(|&t| t == r.tau) {
            Some(k) => k,
            None => {
                taus.push(r.tau);
                confusions.push(metrics::Confusion::default());
                taus.len() - 1
            }
        };
        confusions[k].record(r.label, r.pred);
    }
    if taus.is_empty() {
        return Err(CliError::Data(format!("{held_out}: no predictions")));
    }
    let f1 = confusions.iter().map(|c| c.f1()).collect();
    Ok(FoldReport { held_out_subject: held_out.to_string(), taus, confusions, f1, records })
}
