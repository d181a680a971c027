//! Resolved configurations and the subcommand bodies.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use crossloss::data::{default_planted_pairs, generate_mog, plant_biased_corpus, tokenize, MogConfig, PlantConfig};
use crossloss::data::{TokenizerConfig, ENGLISH_STOPWORDS};
use crossloss::diffmath::{Masked, Objective};
use crossloss::influence::{
    rank_and_split, score_all, stest, word_row_mask, IhvpSolver, InfluenceRecord, LissaConfig,
    DIRECT_SOLVE_MAX_PARAMS,
};
use crossloss::io;
use crossloss::models::{dec_samples, dec_soft_assign, dec_target, ClusterModel, MseDriftObjective, NllObjective};
use crossloss::models::{SkipGramModel, SkipGramSample};
use crossloss::pipelines::{influence_records, mog_loo_audit, weat_mitigation, MogAuditConfig};
use crossloss::training::{
    hard_assign, kmeans, optimal_bijection, select_clusters, train_dec, train_nll, train_skipgram, DecConfig,
    DescentConfig, MitigationConfig, MitigationMode, TrainConfig,
};
use crossloss::weat::{weat_effect, AbsWeatObjective, WordTable};
use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::args::{ClusterObjective, Command, Mode, Preset, SolverKind, TestLoss, TrainLoss};
use crate::config::{emit, resolve, Meta};
use crate::files::{
    embeddings_bytes, json_bytes, load_spec, read_documents, read_points, required, spec_for_vocab,
    ClusterModelFile, SkipGramDir, SkipGramRunFile, INITIAL_FILE, INPUT_FILE, OUTPUT_FILE, RUN_FILE,
};

pub fn dispatch(cmd: &Command, file: &toml::Table, seed: Option<u64>) -> Result<String> {
    let s = cmd.section();
    match cmd {
        Command::MogGen(a) => mog_gen(&resolve(file, s, a, seed, true)?),
        Command::PlantCorpus(a) => plant_corpus(&resolve(file, s, a, seed, true)?),
        Command::TrainDec(a) => train_dec_cmd(&resolve(file, s, a, seed, true)?),
        Command::TrainSg(a) => train_sg(&resolve(file, s, a, seed, true)?),
        Command::Influence(a) => influence(&resolve(file, s, a, seed, true)?),
        Command::LooAudit(a) => loo_audit(&resolve(file, s, a, seed, true)?),
        Command::Weat(a) => weat(&resolve(file, s, a, seed, false)?),
        Command::Cluster(a) => cluster(&resolve(file, s, a, seed, true)?),
        Command::Mitigate(a) => mitigate(s, &resolve(file, s, a, seed, true)?),
        Command::Overbias(a) => {
            let mut cfg: MitigateConfig = resolve(file, s, a, seed, true)?;
            if a.mode == Some(Mode::Mitigate) {
                bail!("overbias cannot run with --mode mitigate");
            }
            cfg.mode = Mode::Overbias;
            mitigate(s, &cfg)
        }
    }
}

fn csv_path(base: &Path, suffix: &str) -> PathBuf {
    let mut name = base.file_stem().unwrap_or_default().to_os_string();
    name.push(suffix);
    base.with_file_name(name)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MogGenConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub per_class: usize,
    pub sigma: f64,
    pub class_means: Vec<Vec<f64>>,
}

impl Default for MogGenConfig {
    fn default() -> Self {
        let d = MogConfig::defaults(0);
        Self { seed: 0, out: None, per_class: d.per_class, sigma: d.sigma, class_means: d.class_means }
    }
}

fn mog_gen(cfg: &MogGenConfig) -> Result<String> {
    let out = required(&cfg.out, "out")?;
    let mog =
        MogConfig { class_means: cfg.class_means.clone(), sigma: cfg.sigma, per_class: cfg.per_class, seed: cfg.seed };
    let points = generate_mog::<f64>(&mog)?;
    let mut buf = Vec::new();
    io::write_mog(&mut buf, &points)?;
    emit(out, &buf, &Meta::new("mog-gen", cfg, Some(cfg.seed))?)?;
    Ok(format!("{} points in {} classes -> {}", points.len(), cfg.class_means.len(), out.display()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantCorpusConfig {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub spec_out: Option<PathBuf>,
    pub strength: f64,
    pub sentences: usize,
}

impl Default for PlantCorpusConfig {
    fn default() -> Self {
        Self { seed: 0, out: None, spec_out: None, strength: 1.0, sentences: 5_000 }
    }
}

fn plant_corpus(cfg: &PlantCorpusConfig) -> Result<String> {
    let out = required(&cfg.out, "out")?;
    let (pairs, spec) = default_planted_pairs();
    let docs = plant_biased_corpus(&pairs, cfg.strength, cfg.sentences, cfg.seed, &PlantConfig::default())?;
    let mut text = docs.join("\n");
    text.push('\n');
    let meta = Meta::new("plant-corpus", cfg, Some(cfg.seed))?;
    emit(out, text.as_bytes(), &meta)?;
    if let Some(p) = &cfg.spec_out {
        emit(p, &json_bytes(&spec)?, &meta)?;
    }
    Ok(format!("{} sentences at strength {} -> {}", docs.len(), cfg.strength, out.display()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainDecConfig {
    pub seed: u64,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub k: usize,
    pub objective: ClusterObjective,
    pub target_updates: usize,
    pub lr: f64,
    pub max_steps: usize,
    pub grad_tol: f64,
}

impl Default for TrainDecConfig {
    fn default() -> Self {
        let d = DescentConfig::default();
        Self {
            seed: 0,
            data: None,
            out: None,
            k: 3,
            objective: ClusterObjective::Dec,
            target_updates: 20,
            lr: d.lr,
            max_steps: d.max_steps,
            grad_tol: d.grad_tol,
        }
    }
}

fn train_dec_cmd(cfg: &TrainDecConfig) -> Result<String> {
    let points = read_points(required(&cfg.data, "data")?)?;
    let out = required(&cfg.out, "out")?;
    let descent = DescentConfig { lr: cfg.lr, max_steps: cfg.max_steps, grad_tol: cfg.grad_tol };
    let dec_cfg = DecConfig { k: cfg.k, target_updates: cfg.target_updates, descent: descent.clone(), seed: cfg.seed };
    let file = match cfg.objective {
        ClusterObjective::Dec => {
            let run = train_dec(&points, &dec_cfg)?;
            ClusterModelFile {
                objective: cfg.objective,
                centroids: run.model.centroids(),
                init_centroids: run.init.centroids(),
                class_of_cluster: run.class_of_cluster,
                accuracy: run.accuracy,
            }
        }
        ClusterObjective::Nll => {
            let vectors: Vec<Vec<f64>> = points.iter().map(|p| p.x.clone()).collect();
            let labels: Vec<usize> = points.iter().map(|p| p.label).collect();
            let classes = labels.iter().max().map_or(0, |m| m + 1).max(cfg.k);
            let km = kmeans(&vectors, cfg.k, cfg.seed)?;
            let (map, _) = optimal_bijection(&km.assignments, &labels, classes)?;
            let map = map[..cfg.k].to_vec();
            let init = ClusterModel::new(km.centroids)?;
            let model = train_nll(&points, &init, &map, &descent, None)?;
            let pred: Vec<usize> = hard_assign(&model, &points).iter().map(|&c| map[c]).collect();
            let accuracy = pred.iter().zip(&labels).filter(|(a, b)| a == b).count() as f64 / labels.len() as f64;
            ClusterModelFile {
                objective: cfg.objective,
                centroids: model.centroids(),
                init_centroids: init.centroids(),
                class_of_cluster: map,
                accuracy,
            }
        }
    };
    emit(out, &json_bytes(&file)?, &Meta::new("train-dec", cfg, Some(cfg.seed))?)?;
    Ok(format!("{:?} model, k = {}, accuracy {:.3} -> {}", cfg.objective, cfg.k, file.accuracy, out.display()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSgConfig {
    pub seed: u64,
    pub corpus: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub preset: Preset,
    pub dim: Option<usize>,
    pub window: Option<usize>,
    pub n_neg: Option<usize>,
    pub epochs: Option<usize>,
    pub lr_initial: Option<f64>,
    pub lr_floor: Option<f64>,
    pub smoothed_negatives: Option<bool>,
    pub holdout_fraction: Option<f64>,
    pub min_count: usize,
    pub stopwords: bool,
}

impl Default for TrainSgConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            corpus: None,
            out_dir: None,
            preset: Preset::Small,
            dim: None,
            window: None,
            n_neg: None,
            epochs: None,
            lr_initial: None,
            lr_floor: None,
            smoothed_negatives: None,
            holdout_fraction: None,
            min_count: 1,
            stopwords: false,
        }
    }
}

impl TrainSgConfig {
    pub fn train_config(&self) -> TrainConfig {
        let base = match self.preset {
            Preset::Small => TrainConfig::new(self.seed),
            Preset::Scifi => TrainConfig::scifi(self.seed),
            Preset::Wnc => TrainConfig::wnc(self.seed),
        };
        TrainConfig {
            dim: self.dim.unwrap_or(base.dim),
            window: self.window.unwrap_or(base.window),
            n_neg: self.n_neg.unwrap_or(base.n_neg),
            epochs: self.epochs.unwrap_or(base.epochs),
            lr_initial: self.lr_initial.unwrap_or(base.lr_initial),
            lr_floor: self.lr_floor.unwrap_or(base.lr_floor),
            smoothed_negatives: self.smoothed_negatives.unwrap_or(base.smoothed_negatives),
            holdout_fraction: self.holdout_fraction.unwrap_or(base.holdout_fraction),
            seed: self.seed,
        }
    }

    pub fn tokenizer(&self) -> TokenizerConfig {
        let mut t = TokenizerConfig::frequency(self.min_count);
        if self.stopwords {
            t.stopwords = ENGLISH_STOPWORDS.iter().map(|s| s.to_string()).collect();
        }
        t
    }
}

/// Writes the three tables and the run file into `dir`.
fn save_skipgram<C: Serialize>(
    dir: &Path,
    model: &SkipGramModel<f64>,
    initial: &[f64],
    run: &SkipGramRunFile,
    meta: &Meta<'_, C>,
) -> Result<()> {
    let (vocab, dim) = (model.vocab(), model.dim());
    emit(&dir.join(INPUT_FILE), &embeddings_bytes(vocab, dim, model.input_table())?, meta)?;
    emit(&dir.join(OUTPUT_FILE), &embeddings_bytes(vocab, dim, model.output_table())?, meta)?;
    emit(&dir.join(INITIAL_FILE), &embeddings_bytes(vocab, dim, initial)?, meta)?;
    emit(&dir.join(RUN_FILE), &json_bytes(run)?, meta)
}

fn train_sg(cfg: &TrainSgConfig) -> Result<String> {
    let out = required(&cfg.out_dir, "out-dir")?;
    let docs = read_documents(required(&cfg.corpus, "corpus")?)?;
    let tokenizer = cfg.tokenizer();
    let corpus = tokenize(&docs, &tokenizer)?;
    let train = cfg.train_config();
    info!("training on {} documents, {} tokens, vocabulary {}", corpus.len(), corpus.token_count(), corpus.vocab.len());
    let run = train_skipgram::<f64>(&corpus, &train)?;
    let file = SkipGramRunFile {
        train,
        tokenizer,
        train_docs: run.train_docs,
        holdout_docs: run.holdout_docs,
        holdout_loss: run.holdout_loss,
    };
    save_skipgram(out, &run.model, &run.initial_input, &file, &Meta::new("train-sg", cfg, Some(cfg.seed))?)?;
    let first = file.holdout_loss.first().copied().unwrap_or(0.0);
    let last = file.holdout_loss.last().copied().unwrap_or(0.0);
    Ok(format!(
        "vocabulary {}, dim {}, {} training / {} held-out documents, held-out loss {first:.4e} -> {last:.4e}; tables in {}",
        run.model.vocab().len(),
        run.model.dim(),
        file.train_docs.len(),
        file.holdout_docs.len(),
        out.display()
    ))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InfluenceConfig {
    pub seed: u64,
    pub train_loss: Option<TrainLoss>,
    pub test_loss: Option<TestLoss>,
    pub model: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub test_points: Option<Vec<usize>>,
    pub weat_spec: Option<PathBuf>,
    pub words: Option<Vec<String>>,
    pub skip_oov: bool,
    pub top: Option<usize>,
    pub restrict: bool,
    pub solver: SolverKind,
    pub damping: f64,
    pub depth: usize,
    pub scale: f64,
    pub repeats: usize,
    pub batch_size: usize,
    pub out: Option<PathBuf>,
}

impl Default for InfluenceConfig {
    fn default() -> Self {
        let l = LissaConfig::new(0);
        Self {
            seed: 0,
            train_loss: None,
            test_loss: None,
            model: None,
            data: None,
            corpus: None,
            test_points: None,
            weat_spec: None,
            words: None,
            skip_oov: false,
            top: None,
            restrict: false,
            solver: SolverKind::Auto,
            damping: l.damping,
            depth: l.depth,
            scale: l.scale,
            repeats: l.repeats,
            batch_size: l.batch_size,
            out: None,
        }
    }
}

fn make_solver(
    kind: SolverKind,
    damping: f64,
    lissa: (usize, f64, usize, usize),
    n_params: usize,
    seed: u64,
) -> IhvpSolver {
    let direct = match kind {
        SolverKind::Direct => true,
        SolverKind::Lissa => false,
        SolverKind::Auto => n_params <= DIRECT_SOLVE_MAX_PARAMS,
    };
    if direct {
        IhvpSolver::Direct { damping }
    } else {
        let (depth, scale, repeats, batch_size) = lissa;
        IhvpSolver::Lissa(LissaConfig { depth, damping, scale, repeats, batch_size, seed })
    }
}

impl InfluenceConfig {
    fn solver(&self, n_params: usize) -> IhvpSolver {
        let lissa = (self.depth, self.scale, self.repeats, self.batch_size);
        make_solver(self.solver, self.damping, lissa, n_params, self.seed)
    }
}

fn influence(cfg: &InfluenceConfig) -> Result<String> {
    let out = required(&cfg.out, "out")?;
    let train_loss = cfg.train_loss.context("missing --train-loss")?;
    let test_loss = cfg.test_loss.context("missing --test-loss")?;
    let (records, texts) = match train_loss {
        TrainLoss::Dec | TrainLoss::Nll => cluster_influence(cfg, train_loss, test_loss)?,
        TrainLoss::Sg => text_influence(cfg, test_loss)?,
    };
    let sets = cfg.top.map(|k| rank_and_split(&records, k, k));
    let lines = io::influence_lines(&records, |i| texts[i].clone(), sets.as_ref());
    let mut buf = Vec::new();
    io::write_jsonl(&mut buf, &lines)?;
    emit(out, &buf, &Meta::new("influence", cfg, Some(cfg.seed))?)?;

    let mut summary = format!("{} samples scored ({train_loss:?} train, {test_loss:?} test) -> {}", lines.len(), out.display());
    if let Some(s) = &sets {
        let _ = write!(summary, "\namplifying: {}, mitigating: {}", s.amplifying.len(), s.mitigating.len());
    }
    for l in lines.iter().take(3) {
        let _ = write!(summary, "\n  #{:<6} {:+.4e}  {}", l.sample_id, l.score, l.text);
    }
    Ok(summary)
}

fn cluster_influence(
    cfg: &InfluenceConfig,
    train_loss: TrainLoss,
    test_loss: TestLoss,
) -> Result<(Vec<InfluenceRecord<f64>>, Vec<String>)> {
    ensure!(test_loss == TestLoss::Nll, "clustering models support --test-loss nll only");
    ensure!(!cfg.restrict, "--restrict applies to embedding models only");
    let file = ClusterModelFile::load(required(&cfg.model, "model")?)?;
    let points = read_points(required(&cfg.data, "data")?)?;
    let expected = match train_loss {
        TrainLoss::Nll => ClusterObjective::Nll,
        _ => ClusterObjective::Dec,
    };
    if file.objective != expected {
        warn!("model was trained with {:?} but influence uses {train_loss:?} as the training loss", file.objective);
    }
    let model = file.model()?;
    let test_batch = match &cfg.test_points {
        None => points.clone(),
        Some(ids) => ids
            .iter()
            .map(|&i| points.get(i).cloned().with_context(|| format!("test point {i} out of range")))
            .collect::<Result<_>>()?,
    };
    let nll = NllObjective::new(model.k(), model.dim(), &file.class_of_cluster)?;
    let solver = cfg.solver(model.params().len());
    let records = match train_loss {
        TrainLoss::Dec => {
            let dataset = dec_samples(&points, &dec_target(&dec_soft_assign(&model, &points)));
            let obj = model.dec_objective();
            let s = stest(&nll, &test_batch, &obj, model.params(), &dataset, &solver)?;
            score_all(&s, &obj, model.params(), &dataset)?
        }
        _ => {
            let s = stest(&nll, &test_batch, &nll, model.params(), &points, &solver)?;
            score_all(&s, &nll, model.params(), &points)?
        }
    };
    let texts = points.iter().map(|p| format!("{},{},{}", p.x[0], p.x[1], p.label)).collect();
    Ok((records, texts))
}

fn scored_docs<Te: Objective<f64>>(
    model: &SkipGramModel<f64>,
    dataset: &[Vec<SkipGramSample>],
    train_docs: &[usize],
    test: Te,
    batch: &[Te::Sample],
    restrict: Option<&[usize]>,
    solver: &IhvpSolver,
) -> Result<Vec<InfluenceRecord<f64>>> {
    let train = model.objective();
    let recs = match restrict {
        None => influence_records(&train, model.params(), dataset, train_docs, &test, batch, solver)?,
        Some(words) => {
            let mask = word_row_mask(model.vocab().len(), model.dim(), words);
            let train = Masked::new::<f64>(train, mask.clone())?;
            let test = Masked::new::<f64>(test, mask)?;
            influence_records(&train, model.params(), dataset, train_docs, &test, batch, solver)?
        }
    };
    Ok(recs.records)
}

fn text_influence(cfg: &InfluenceConfig, test_loss: TestLoss) -> Result<(Vec<InfluenceRecord<f64>>, Vec<String>)> {
    ensure!(test_loss != TestLoss::Nll, "--test-loss nll needs a clustering model");
    let dir = SkipGramDir::load(required(&cfg.model, "model")?)?;
    let corpus = dir.corpus(required(&cfg.corpus, "corpus")?)?;
    let dataset = dir.run.train.influence_samples(&corpus)?;
    let model = &dir.model;
    let vocab = model.vocab();
    let solver = cfg.solver(if cfg.restrict { 0 } else { model.params().len() });
    let docs = &dir.run.train_docs;
    let records = match test_loss {
        TestLoss::Weat => {
            let spec = spec_for_vocab(&load_spec(required(&cfg.weat_spec, "weat-spec")?)?, vocab, cfg.skip_oov)?;
            let ids = spec.resolve(vocab)?;
            let words: Vec<usize> = ids.x.iter().chain(&ids.y).chain(&ids.a).chain(&ids.b).copied().collect();
            let restrict = cfg.restrict.then_some(&words[..]);
            scored_docs(model, &dataset, docs, AbsWeatObjective::for_model(model), &[ids], restrict, &solver)?
        }
        TestLoss::Mse => {
            let words = cfg.words.as_ref().context("--test-loss mse needs --words")?;
            let ids = vocab.ids_of(words)?;
            let test = MseDriftObjective::new(vocab.len(), model.dim(), dir.initial.clone())?;
            let restrict = cfg.restrict.then_some(&ids[..]);
            scored_docs(model, &dataset, docs, test, &ids, restrict, &solver)?
        }
        TestLoss::Sg => {
            ensure!(!cfg.restrict, "--restrict needs a word-level test loss (weat or mse)");
            let batch: Vec<SkipGramSample> =
                dir.run.holdout_docs.iter().flat_map(|&d| dataset[d].iter().cloned()).collect();
            ensure!(!batch.is_empty(), "the model has no held-out documents to form the skip-gram test loss");
            scored_docs(model, &dataset, docs, model.objective(), &batch, None, &solver)?
        }
        TestLoss::Nll => unreachable!("rejected above"),
    };
    let texts = corpus.documents.iter().map(|d| d.text.clone()).collect();
    Ok((records, texts))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LooAuditConfig {
    pub seed: u64,
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub k: usize,
    pub target_updates: usize,
    pub dec_lr: f64,
    pub dec_max_steps: usize,
    pub nll_lr: f64,
    pub nll_steps: usize,
    pub damping: f64,
}

impl Default for LooAuditConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            data: None,
            out: None,
            k: 3,
            target_updates: 20,
            dec_lr: 0.1,
            dec_max_steps: 20_000,
            nll_lr: 0.1,
            nll_steps: 2_000,
            damping: 0.01,
        }
    }
}

impl LooAuditConfig {
    pub fn audit_config(&self) -> MogAuditConfig {
        let tol = DescentConfig::default().grad_tol;
        MogAuditConfig {
            dec: DecConfig {
                k: self.k,
                target_updates: self.target_updates,
                descent: DescentConfig { lr: self.dec_lr, max_steps: self.dec_max_steps, grad_tol: tol },
                seed: self.seed,
            },
            nll: DescentConfig { lr: self.nll_lr, max_steps: self.nll_steps, grad_tol: tol },
            damping: self.damping,
        }
    }
}

fn loo_audit(cfg: &LooAuditConfig) -> Result<String> {
    let out = required(&cfg.out, "out")?;
    let points = read_points(required(&cfg.data, "data")?)?;
    let audit = mog_loo_audit(&points, &cfg.audit_config())?;
    let reports = [&audit.cross_loss.report, &audit.matched.report];
    let meta = Meta::new("loo-audit", cfg, Some(cfg.seed))?;
    let mut buf = Vec::new();
    io::write_correlation_summary(&mut buf, &reports)?;
    emit(out, &buf, &meta)?;
    let mut buf = Vec::new();
    io::write_correlation_points(&mut buf, &reports)?;
    let points_out = csv_path(out, ".points.csv");
    emit(&points_out, &buf, &meta)?;

    let mut summary = format!("DEC accuracy {:.3} over {} points", audit.dec.accuracy, points.len());
    for r in reports {
        let _ = write!(summary, "\n{:<11}", r.pipeline);
        for &(t, f) in &r.fraction_above {
            let _ = write!(summary, "  r > {t}: {:5.1}%", 100.0 * f);
        }
    }
    let _ = write!(summary, "\n-> {}, {}", out.display(), points_out.display());
    Ok(summary)
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeatConfig {
    pub seed: Option<u64>,
    pub model: Option<PathBuf>,
    pub weat_spec: Option<PathBuf>,
    pub skip_oov: bool,
    pub out: Option<PathBuf>,
}

fn weat(cfg: &WeatConfig) -> Result<String> {
    let dir = SkipGramDir::load(required(&cfg.model, "model")?)?;
    let spec = spec_for_vocab(&load_spec(required(&cfg.weat_spec, "weat-spec")?)?, dir.model.vocab(), cfg.skip_oov)?;
    let result = weat_effect(&spec, &WordTable::input_of(&dir.model))?;
    if let Some(out) = &cfg.out {
        emit(out, &json_bytes(&result)?, &Meta::new("weat", cfg, cfg.seed)?)?;
    }
    let mut s = format!(
        "WEAT '{}': effect {:+.4} (mean X {:+.4}, mean Y {:+.4}, pooled std {:.4})",
        spec.name, result.effect, result.mean_x, result.mean_y, result.pooled_std
    );
    if result.degenerate {
        s.push_str(" [degenerate: zero pooled std]");
    }
    Ok(s)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub seed: u64,
    pub model: Option<PathBuf>,
    pub words: Option<Vec<String>>,
    pub k_min: usize,
    pub k_max: usize,
    pub out: Option<PathBuf>,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        Self { seed: 0, model: None, words: None, k_min: 2, k_max: 10, out: None }
    }
}

fn cluster(cfg: &ClusterConfig) -> Result<String> {
    let out = required(&cfg.out, "out")?;
    let dir = SkipGramDir::load(required(&cfg.model, "model")?)?;
    let vocab = dir.model.vocab();
    let ids: Vec<usize> = match &cfg.words {
        Some(w) => vocab.ids_of(w)?,
        None => (0..vocab.len()).collect(),
    };
    let vectors: Vec<Vec<f64>> = ids.iter().map(|&i| dir.model.input_row(i).to_vec()).collect();
    ensure!(cfg.k_min >= 2 && cfg.k_min <= cfg.k_max, "need 2 <= k-min <= k-max");
    let sel = select_clusters(&vectors, cfg.k_min..=cfg.k_max, cfg.seed)?;
    let km = kmeans(&vectors, sel.best, cfg.seed)?;
    let meta = Meta::new("cluster", cfg, Some(cfg.seed))?;

    let mut text = String::from("k,silhouette\n");
    for (k, s) in &sel.scores {
        let _ = writeln!(text, "{k},{s}");
    }
    emit(out, text.as_bytes(), &meta)?;
    let mut text = String::from("word,cluster\n");
    for (&id, c) in ids.iter().zip(&km.assignments) {
        let _ = writeln!(text, "{},{c}", vocab.word(id).expect("id from vocab"));
    }
    let assign_out = csv_path(out, ".assignments.csv");
    emit(&assign_out, text.as_bytes(), &meta)?;
    let best = sel.scores.iter().find(|(k, _)| *k == sel.best).map_or(0.0, |p| p.1);
    Ok(format!("{} words, best k = {} (silhouette {best:.4}) -> {}, {}", ids.len(), sel.best, out.display(), assign_out.display()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MitigateConfig {
    pub seed: u64,
    pub model: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub weat_spec: Option<PathBuf>,
    pub skip_oov: bool,
    pub mode: Mode,
    pub k_amplify: usize,
    pub k_mitigate: usize,
    pub iterations: usize,
    pub lr: f64,
    pub early_stop: bool,
    pub refresh_sets: bool,
    pub solver: SolverKind,
    pub damping: f64,
    pub depth: usize,
    pub scale: f64,
    pub repeats: usize,
    pub batch_size: usize,
    pub out_dir: Option<PathBuf>,
}

impl Default for MitigateConfig {
    fn default() -> Self {
        let m = MitigationConfig::new(MitigationMode::Mitigate);
        let l = LissaConfig::new(0);
        Self {
            seed: 0,
            model: None,
            corpus: None,
            weat_spec: None,
            skip_oov: false,
            mode: Mode::Mitigate,
            k_amplify: m.k_amplify,
            k_mitigate: m.k_mitigate,
            iterations: m.iterations,
            lr: m.lr,
            early_stop: m.early_stop,
            refresh_sets: m.refresh_sets,
            solver: SolverKind::Auto,
            damping: l.damping,
            depth: l.depth,
            scale: l.scale,
            repeats: l.repeats,
            batch_size: l.batch_size,
            out_dir: None,
        }
    }
}

impl MitigateConfig {
    pub fn mitigation(&self) -> MitigationConfig {
        MitigationConfig {
            k_amplify: self.k_amplify,
            k_mitigate: self.k_mitigate,
            iterations: self.iterations,
            lr: self.lr,
            mode: match self.mode {
                Mode::Mitigate => MitigationMode::Mitigate,
                Mode::Overbias => MitigationMode::Overbias,
            },
            early_stop: self.early_stop,
            refresh_sets: self.refresh_sets,
        }
    }
}

fn mitigate(command: &str, cfg: &MitigateConfig) -> Result<String> {
    let out = required(&cfg.out_dir, "out-dir")?;
    let dir = SkipGramDir::load(required(&cfg.model, "model")?)?;
    let corpus = dir.corpus(required(&cfg.corpus, "corpus")?)?;
    let dataset = dir.run.train.influence_samples(&corpus)?;
    let spec = spec_for_vocab(&load_spec(required(&cfg.weat_spec, "weat-spec")?)?, dir.model.vocab(), cfg.skip_oov)?;
    let lissa = (cfg.depth, cfg.scale, cfg.repeats, cfg.batch_size);
    let solver = make_solver(cfg.solver, cfg.damping, lissa, dir.model.params().len(), cfg.seed);
    let outcome = weat_mitigation(&dir.model, &spec, &dataset, &dir.run.train_docs, &solver, &cfg.mitigation())?;

    let meta = Meta::new(command, cfg, Some(cfg.seed))?;
    let mut buf = Vec::new();
    io::write_trajectory(&mut buf, &outcome.trajectory)?;
    emit(&out.join("trajectory.csv"), &buf, &meta)?;
    save_skipgram(out, &outcome.model, &dir.initial, &dir.run, &meta)?;
    let steps: Vec<String> = outcome.trajectory.iter().map(|e| format!("{e:.4}")).collect();
    Ok(format!(
        "{:?}: |WEAT| {:.4} -> {:.4} (kept iteration {}); trajectory {}; model in {}",
        cfg.mode,
        outcome.before.effect.abs(),
        outcome.after.effect.abs(),
        outcome.best_iteration,
        steps.join(" "),
        out.display()
    ))
}
