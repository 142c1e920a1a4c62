//! Dataset generation over a corpus.
//!
//! Every expression draws its parameters from its own RNG stream keyed by
//! `(master_seed, index)`, so output is the same whether items are
//! processed in parallel or one by one.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use walkdir::WalkDir;

use crate::decomposition::{decompose, DecompositionError};
use crate::distortion::{
    distort_hme, rng_for, sample_params, Axis, DistortionError, DistortionParams, ANGLE_LIMIT_DEG,
    SCALE_MAX, SCALE_MIN,
};
use crate::ink::{OnlineHme, Strategy};
use crate::inkml::{parse_inkml, write_inkml, InkmlError, ParseOptions};
use crate::raster::{rasterize, RasterConfig, RasterError};

/// Environment variable consulted for a default output directory.
pub const OUTPUT_ROOT_ENV: &str = "HMEGEN_OUTPUT_ROOT";
pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const REPORT_FILE: &str = "report.txt";
pub const HISTOGRAM_BINS: usize = 10;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("copies per expression must be at least 1")]
    NoCopies,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Raster {
        path: PathBuf,
        #[source]
        source: RasterError,
    },
    #[error("report line {line}: {message}")]
    Report { line: usize, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyConfig {
    pub strategy: Strategy,
    pub copies_per_hme: usize,
    pub master_seed: u64,
    pub include_originals: bool,
    /// Spread work over the rayon pool. Results do not depend on this.
    pub parallel: bool,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::Hybrid,
            copies_per_hme: 5,
            master_seed: 0,
            include_originals: true,
            parallel: true,
        }
    }
}

impl StrategyConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.copies_per_hme == 0 {
            return Err(PipelineError::NoCopies);
        }
        Ok(())
    }
}

/// An input that could not be loaded or expanded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub item: String,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.item, self.message)
    }
}

#[derive(Debug, Clone)]
pub struct CorpusItem {
    /// File-name stem used to name everything generated from this item.
    pub stem: String,
    pub hme: OnlineHme,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub items: Vec<CorpusItem>,
    pub failures: Vec<Failure>,
}

impl Corpus {
    pub fn from_items(items: Vec<CorpusItem>) -> Self {
        Self {
            items,
            failures: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

fn inkml_files(root: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    if root.is_file() {
        return Ok(vec![root.to_path_buf()]);
    }
    let mut files = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| PipelineError::Io {
            path: e.path().unwrap_or(root).to_path_buf(),
            source: e.into(),
        })?;
        let is_inkml = entry
            .path()
            .extension()
            .is_some_and(|ext| ext.eq_ignore_ascii_case("inkml"));
        if entry.file_type().is_file() && is_inkml {
            files.push(entry.into_path());
        }
    }
    Ok(files)
}

fn stem_of(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path).with_extension("");
    let stem = rel
        .components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("-");
    if stem.is_empty() {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    } else {
        stem
    }
}

/// Loads every `.inkml` file under `root` (or `root` itself if it is a
/// file), in path order. Files that fail to parse are logged and recorded
/// in [`Corpus::failures`].
pub fn load_corpus(root: &Path, options: &ParseOptions) -> Result<Corpus, PipelineError> {
    let files = inkml_files(root)?;
    let loaded: Vec<Result<CorpusItem, Failure>> = files
        .par_iter()
        .map(|path| {
            let stem = stem_of(root, path);
            let failure = |message: String| Failure {
                item: path.display().to_string(),
                message,
            };
            let bytes = fs::read(path).map_err(|e| failure(e.to_string()))?;
            let hme = parse_inkml(&bytes, options).map_err(|e| failure(e.to_string()))?;
            let hme = if hme.provenance().source.is_empty() {
                let mut provenance = hme.provenance().clone();
                provenance.source = stem.clone();
                hme.with_provenance(provenance)
            } else {
                hme
            };
            Ok(CorpusItem { stem, hme })
        })
        .collect();

    let mut corpus = Corpus::default();
    for item in loaded {
        match item {
            Ok(item) => corpus.items.push(item),
            Err(failure) => {
                log::warn!("skipping {failure}");
                corpus.failures.push(failure);
            }
        }
    }
    Ok(corpus)
}

/// Fixed-range histogram with [`HISTOGRAM_BINS`] equal bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub min: f64,
    pub max: f64,
    pub bins: [usize; HISTOGRAM_BINS],
}

impl Histogram {
    pub fn new(min: f64, max: f64) -> Self {
        Self {
            min,
            max,
            bins: [0; HISTOGRAM_BINS],
        }
    }

    pub fn add(&mut self, value: f64) {
        let t = (value - self.min) / (self.max - self.min);
        let bin = (t * HISTOGRAM_BINS as f64)
            .floor()
            .clamp(0.0, (HISTOGRAM_BINS - 1) as f64);
        self.bins[bin as usize] += 1;
    }

    pub fn total(&self) -> usize {
        self.bins.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterStats {
    /// Samples per local model id, indexed `id − 1`.
    pub models: [usize; 5],
    /// `[horizontal, vertical]`.
    pub axes: [usize; 2],
    pub alpha: Histogram,
    pub beta: Histogram,
    pub k: Histogram,
    pub gamma: Histogram,
}

impl Default for ParameterStats {
    fn default() -> Self {
        let angle = || Histogram::new(-ANGLE_LIMIT_DEG, ANGLE_LIMIT_DEG);
        Self {
            models: [0; 5],
            axes: [0; 2],
            alpha: angle(),
            beta: angle(),
            k: Histogram::new(SCALE_MIN, SCALE_MAX),
            gamma: angle(),
        }
    }
}

impl ParameterStats {
    pub fn add(&mut self, p: &DistortionParams) {
        self.models[usize::from(p.id()) - 1] += 1;
        self.axes[usize::from(p.axis == Axis::Vertical)] += 1;
        self.alpha.add(p.alpha);
        self.beta.add(p.beta);
        self.k.add(p.k);
        self.gamma.add(p.gamma);
    }

    pub fn total(&self) -> usize {
        self.models.iter().sum()
    }
}

/// Counts describing a generated dataset.
///
/// `input_count` is the size of the set the strategy expands: the corpus
/// for distortion and decomposition, and the decomposition set (corpus
/// plus sub-expressions) for hybrid. Then
/// `total_count = generated_count + input_count` when originals are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetReport {
    pub strategy: Strategy,
    pub copies_per_hme: usize,
    pub master_seed: u64,
    pub include_originals: bool,
    pub corpus_count: usize,
    pub input_count: usize,
    pub generated_count: usize,
    pub total_count: usize,
    /// Accepted sub-expressions per decomposition rule 1–3.
    pub per_rule: [usize; 3],
    pub discarded_single: usize,
    pub discarded_duplicate: usize,
    pub parameters: ParameterStats,
    pub failures: Vec<Failure>,
}

impl DatasetReport {
    fn new(config: &StrategyConfig, corpus_count: usize) -> Self {
        Self {
            strategy: config.strategy,
            copies_per_hme: config.copies_per_hme,
            master_seed: config.master_seed,
            include_originals: config.include_originals,
            corpus_count,
            input_count: 0,
            generated_count: 0,
            total_count: 0,
            per_rule: [0; 3],
            discarded_single: 0,
            discarded_duplicate: 0,
            parameters: ParameterStats::default(),
            failures: Vec::new(),
        }
    }

    /// `key: value` lines; [`DatasetReport::from_key_value_text`] reads
    /// them back.
    pub fn to_key_value_text(&self) -> String {
        let mut out = String::new();
        let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        let mut line = |k: &str, v: String| {
            let _ = writeln!(out, "{k}: {v}");
        };
        line("strategy", self.strategy.to_string());
        line("copies_per_hme", self.copies_per_hme.to_string());
        line("master_seed", self.master_seed.to_string());
        line("include_originals", self.include_originals.to_string());
        line("corpus_count", self.corpus_count.to_string());
        line("input_count", self.input_count.to_string());
        line("generated_count", self.generated_count.to_string());
        line("total_count", self.total_count.to_string());
        line("rule1_count", self.per_rule[0].to_string());
        line("rule2_count", self.per_rule[1].to_string());
        line("rule3_count", self.per_rule[2].to_string());
        line("discarded_single", self.discarded_single.to_string());
        line("discarded_duplicate", self.discarded_duplicate.to_string());
        let p = &self.parameters;
        line("model_counts", join(&p.models));
        line("axis_counts", join(&p.axes));
        for (name, h) in [
            ("alpha", &p.alpha),
            ("beta", &p.beta),
            ("k", &p.k),
            ("gamma", &p.gamma),
        ] {
            line(
                &format!("{name}_histogram"),
                format!("{} {} | {}", h.min, h.max, join(&h.bins)),
            );
        }
        line("failure_count", self.failures.len().to_string());
        for f in &self.failures {
            line(
                "failure",
                format!("{}\t{}", f.item, f.message.replace('\n', " ")),
            );
        }
        out
    }

    pub fn from_key_value_text(text: &str) -> Result<Self, PipelineError> {
        let mut fields: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        let mut failures = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = n + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let (key, value) = raw.split_once(": ").ok_or_else(|| PipelineError::Report {
                line,
                message: format!("expected `key: value`, got {raw:?}"),
            })?;
            if key == "failure" {
                let (item, message) = value.split_once('\t').unwrap_or((value, ""));
                failures.push(Failure {
                    item: item.to_string(),
                    message: message.to_string(),
                });
            } else {
                fields.insert(key, (line, value));
            }
        }

        let get = |key: &str| {
            fields
                .get(key)
                .copied()
                .ok_or_else(|| PipelineError::Report {
                    line: 0,
                    message: format!("missing key {key}"),
                })
        };
        fn parse<T: std::str::FromStr>(
            key: &str,
            (line, v): (usize, &str),
        ) -> Result<T, PipelineError> {
            v.trim().parse().map_err(|_| PipelineError::Report {
                line,
                message: format!("bad value for {key}: {v:?}"),
            })
        }
        fn counts<const N: usize>(
            key: &str,
            (line, v): (usize, &str),
        ) -> Result<[usize; N], PipelineError> {
            let bad = || PipelineError::Report {
                line,
                message: format!("expected {N} counts for {key}: {v:?}"),
            };
            let parsed: Vec<usize> = v
                .split_whitespace()
                .map(|s| s.parse().map_err(|_| bad()))
                .collect::<Result<_, _>>()?;
            parsed.try_into().map_err(|_| bad())
        }
        let histogram = |key: &str| -> Result<Histogram, PipelineError> {
            let (line, v) = get(key)?;
            let (range, bins) = v.split_once(" | ").ok_or_else(|| PipelineError::Report {
                line,
                message: format!("expected `min max | bins` for {key}"),
            })?;
            let (min, max) = range.split_once(' ').ok_or_else(|| PipelineError::Report {
                line,
                message: format!("expected `min max` for {key}"),
            })?;
            Ok(Histogram {
                min: parse(key, (line, min))?,
                max: parse(key, (line, max))?,
                bins: counts(key, (line, bins))?,
            })
        };

        let strategy_field = get("strategy")?;
        let strategy =
            Strategy::from_name(strategy_field.1.trim()).ok_or_else(|| PipelineError::Report {
                line: strategy_field.0,
                message: format!("unknown strategy {:?}", strategy_field.1),
            })?;
        let report = Self {
            strategy,
            copies_per_hme: parse("copies_per_hme", get("copies_per_hme")?)?,
            master_seed: parse("master_seed", get("master_seed")?)?,
            include_originals: parse("include_originals", get("include_originals")?)?,
            corpus_count: parse("corpus_count", get("corpus_count")?)?,
            input_count: parse("input_count", get("input_count")?)?,
            generated_count: parse("generated_count", get("generated_count")?)?,
            total_count: parse("total_count", get("total_count")?)?,
            per_rule: [
                parse("rule1_count", get("rule1_count")?)?,
                parse("rule2_count", get("rule2_count")?)?,
                parse("rule3_count", get("rule3_count")?)?,
            ],
            discarded_single: parse("discarded_single", get("discarded_single")?)?,
            discarded_duplicate: parse("discarded_duplicate", get("discarded_duplicate")?)?,
            parameters: ParameterStats {
                models: counts("model_counts", get("model_counts")?)?,
                axes: counts("axis_counts", get("axis_counts")?)?,
                alpha: histogram("alpha_histogram")?,
                beta: histogram("beta_histogram")?,
                k: histogram("k_histogram")?,
                gamma: histogram("gamma_histogram")?,
            },
            failures,
        };
        let declared: usize = parse("failure_count", get("failure_count")?)?;
        if declared != report.failures.len() {
            return Err(PipelineError::Report {
                line: get("failure_count")?.0,
                message: format!(
                    "failure_count {declared} but {} failure lines",
                    report.failures.len()
                ),
            });
        }
        Ok(report)
    }
}

impl fmt::Display for DatasetReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_key_value_text())
    }
}

/// One generated (or kept) expression with its output file stem.
#[derive(Debug, Clone)]
pub struct DatasetItem {
    pub name: String,
    pub hme: OnlineHme,
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub items: Vec<DatasetItem>,
    pub report: DatasetReport,
}

fn map_items<T, U, F>(items: &[T], parallel: bool, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync + Send,
{
    if parallel {
        items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
    } else {
        items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
}

type Variants = Vec<Result<(DistortionParams, OnlineHme), DistortionError>>;

fn distorted_copies(hme: &OnlineHme, seed: u64, index: usize, copies: usize) -> Variants {
    let mut rng = rng_for(seed, index as u64);
    (0..copies)
        .map(|_| {
            let params = sample_params(&mut rng);
            distort_hme(hme, &params).map(|out| (params, out))
        })
        .collect()
}

fn record_variants(
    report: &mut DatasetReport,
    items: &mut Vec<DatasetItem>,
    source: &str,
    variants: Variants,
    mut name: impl FnMut(usize) -> String,
) {
    for (n, variant) in variants.into_iter().enumerate() {
        match variant {
            Ok((params, hme)) => {
                report.parameters.add(&params);
                report.generated_count += 1;
                items.push(DatasetItem {
                    name: name(n + 1),
                    hme,
                });
            }
            Err(e) => {
                let failure = Failure {
                    item: format!("{source} copy {}", n + 1),
                    message: e.to_string(),
                };
                log::warn!("skipping {failure}");
                report.failures.push(failure);
            }
        }
    }
}

fn finish(mut report: DatasetReport, items: Vec<DatasetItem>) -> Dataset {
    report.total_count = items.len();
    Dataset { items, report }
}

/// `copies_per_hme` distorted variants of every corpus item, plus the
/// originals when requested.
pub fn generate_distortion_set(
    corpus: &Corpus,
    config: &StrategyConfig,
) -> Result<Dataset, PipelineError> {
    config.validate()?;
    let mut report = DatasetReport::new(config, corpus.len());
    report.strategy = Strategy::Distortion;
    report.failures.extend(corpus.failures.iter().cloned());
    report.input_count = corpus.len();

    let variants = map_items(&corpus.items, config.parallel, |i, item| {
        distorted_copies(&item.hme, config.master_seed, i, config.copies_per_hme)
    });
    let mut items = Vec::new();
    for (item, variants) in corpus.items.iter().zip(variants) {
        if config.include_originals {
            items.push(DatasetItem {
                name: format!("{}__orig0", item.stem),
                hme: item.hme.clone(),
            });
        }
        record_variants(&mut report, &mut items, &item.stem, variants, |n| {
            format!("{}__dist{n}", item.stem)
        });
    }
    Ok(finish(report, items))
}

/// Corpus items each followed by their decomposition, in corpus order.
/// The first entry of each group is the original.
fn decomposition_groups(
    corpus: &Corpus,
    parallel: bool,
    report: &mut DatasetReport,
) -> Vec<(usize, Vec<DatasetItem>)> {
    let results: Vec<Result<_, DecompositionError>> =
        map_items(&corpus.items, parallel, |_, item| decompose(&item.hme));
    let mut groups = Vec::new();
    for (i, (item, result)) in corpus.items.iter().zip(results).enumerate() {
        let mut group = vec![DatasetItem {
            name: format!("{}__orig0", item.stem),
            hme: item.hme.clone(),
        }];
        match result {
            Ok(result) => {
                let rules = result.per_rule();
                for (r, n) in report.per_rule.iter_mut().zip(rules) {
                    *r += n;
                }
                report.discarded_single += result.discarded_single;
                report.discarded_duplicate += result.discarded_duplicate;
                for (j, hme) in result.sub_hmes.into_iter().enumerate() {
                    group.push(DatasetItem {
                        name: format!("{}__dec{}", item.stem, j + 1),
                        hme,
                    });
                }
            }
            Err(e) => {
                let failure = Failure {
                    item: item.stem.clone(),
                    message: e.to_string(),
                };
                log::warn!("decomposition failed, keeping original only: {failure}");
                report.failures.push(failure);
            }
        }
        groups.push((i, group));
    }
    groups
}

/// Every corpus item's sub-expressions, plus the originals when requested.
pub fn generate_decomposition_set(
    corpus: &Corpus,
    config: &StrategyConfig,
) -> Result<Dataset, PipelineError> {
    config.validate()?;
    let mut report = DatasetReport::new(config, corpus.len());
    report.strategy = Strategy::Decomposition;
    report.failures.extend(corpus.failures.iter().cloned());
    report.input_count = corpus.len();

    let mut items = Vec::new();
    for (_, group) in decomposition_groups(corpus, config.parallel, &mut report) {
        let mut group = group.into_iter();
        let original = group.next().expect("group starts with its original");
        if config.include_originals {
            items.push(original);
        }
        let before = items.len();
        items.extend(group);
        report.generated_count += items.len() - before;
    }
    Ok(finish(report, items))
}

/// Decomposition set `D` (originals plus sub-expressions), then
/// `copies_per_hme` distorted variants of every element of `D`. `D` itself
/// is kept when `include_originals` is set.
pub fn generate_hybrid_set(
    corpus: &Corpus,
    config: &StrategyConfig,
) -> Result<Dataset, PipelineError> {
    config.validate()?;
    let mut report = DatasetReport::new(config, corpus.len());
    report.strategy = Strategy::Hybrid;
    report.failures.extend(corpus.failures.iter().cloned());

    let groups = decomposition_groups(corpus, config.parallel, &mut report);
    // Flatten D in corpus order; the position in D keys the RNG stream.
    let members: Vec<(usize, &str, &DatasetItem)> = groups
        .iter()
        .flat_map(|(_, group)| {
            let stem = group[0].name.trim_end_matches("__orig0");
            group
                .iter()
                .enumerate()
                .map(move |(d, item)| (d, stem, item))
        })
        .collect();
    report.input_count = members.len();

    let c = config.copies_per_hme;
    let variants = map_items(&members, config.parallel, |i, (_, _, item)| {
        distorted_copies(&item.hme, config.master_seed, i, c)
    });
    let mut items = Vec::new();
    for ((d, stem, member), variants) in members.iter().zip(variants) {
        if config.include_originals {
            items.push((*member).clone());
        }
        record_variants(&mut report, &mut items, &member.name, variants, |n| {
            format!("{stem}__hyb{}", d * c + n)
        });
    }
    Ok(finish(report, items))
}

/// The corpus unchanged.
pub fn generate_original_set(
    corpus: &Corpus,
    config: &StrategyConfig,
) -> Result<Dataset, PipelineError> {
    config.validate()?;
    let mut report = DatasetReport::new(config, corpus.len());
    report.strategy = Strategy::None;
    report.failures.extend(corpus.failures.iter().cloned());
    report.input_count = corpus.len();
    report.include_originals = true;
    let items = corpus
        .items
        .iter()
        .map(|item| DatasetItem {
            name: format!("{}__orig0", item.stem),
            hme: item.hme.clone(),
        })
        .collect();
    Ok(finish(report, items))
}

/// Dispatches on `config.strategy`.
pub fn generate(corpus: &Corpus, config: &StrategyConfig) -> Result<Dataset, PipelineError> {
    match config.strategy {
        Strategy::None => generate_original_set(corpus, config),
        Strategy::Distortion => generate_distortion_set(corpus, config),
        Strategy::Decomposition => generate_decomposition_set(corpus, config),
        Strategy::Hybrid => generate_hybrid_set(corpus, config),
    }
}

/// Expected totals for [`verify_counts`]. Unset fields are not checked.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Expected {
    pub total: Option<usize>,
    pub generated: Option<usize>,
    /// Allowed relative deviation from the expected values; 0 means exact.
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub expected: usize,
    pub actual: usize,
    pub tolerance: f64,
    pub passed: bool,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "ok" } else { "MISMATCH" };
        write!(
            f,
            "{verdict} {}: expected {} actual {}",
            self.name, self.expected, self.actual
        )?;
        if self.tolerance > 0.0 {
            write!(f, " (tolerance {}%)", self.tolerance * 100.0)?;
        }
        if !self.passed {
            write!(f, " diff {:+}", self.actual as i64 - self.expected as i64)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub checks: Vec<Check>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for Verification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        write!(f, "{}", if self.passed() { "PASS" } else { "FAIL" })
    }
}

/// Checks the count identities implied by the strategy, then compares
/// against `expected`.
pub fn verify_counts(report: &DatasetReport, expected: &Expected) -> Verification {
    let mut checks = Vec::new();
    let mut exact = |name: &str, expected: usize, actual: usize| {
        checks.push(Check {
            name: name.to_string(),
            expected,
            actual,
            tolerance: 0.0,
            passed: expected == actual,
        })
    };
    let kept = if report.include_originals {
        report.input_count
    } else {
        0
    };
    let c = report.copies_per_hme;
    match report.strategy {
        Strategy::None => exact("total = N", report.input_count, report.total_count),
        Strategy::Distortion => {
            exact(
                "generated = N·c",
                report.input_count * c,
                report.generated_count,
            );
            exact(
                "total = N·(c+1)",
                report.input_count * c + kept,
                report.total_count,
            );
        }
        Strategy::Decomposition => {
            exact(
                "total = generated + N",
                report.generated_count + kept,
                report.total_count,
            );
            exact(
                "generated = rule1 + rule2 + rule3",
                report.per_rule.iter().sum(),
                report.generated_count,
            );
        }
        Strategy::Hybrid => {
            exact(
                "generated = |D|·c",
                report.input_count * c,
                report.generated_count,
            );
            exact(
                "total = |D|·(c+1)",
                report.input_count * c + kept,
                report.total_count,
            );
        }
    }
    let tol = expected.tolerance.max(0.0);
    for (name, want, actual) in [
        ("expected total", expected.total, report.total_count),
        (
            "expected generated",
            expected.generated,
            report.generated_count,
        ),
    ] {
        if let Some(want) = want {
            let deviation = (actual as f64 - want as f64).abs();
            checks.push(Check {
                name: name.to_string(),
                expected: want,
                actual,
                tolerance: tol,
                passed: deviation <= tol * want as f64,
            });
        }
    }
    Verification { checks }
}

/// One manifest line: `inkml/<name>.inkml<TAB><latex>`.
pub fn manifest_line(item: &DatasetItem) -> String {
    format!("inkml/{}.inkml\t{}", item.name, item.hme.latex())
}

pub fn manifest_text(items: &[DatasetItem]) -> String {
    items.iter().map(|i| manifest_line(i) + "\n").collect()
}

/// Writes `inkml/`, optionally `img/`, `manifest.tsv` and `report.txt`
/// under `root`. Files are written in parallel; the manifest keeps dataset
/// order.
pub fn write_dataset(
    dataset: &Dataset,
    root: &Path,
    images: Option<&RasterConfig>,
) -> Result<(), PipelineError> {
    let inkml_dir = root.join("inkml");
    fs::create_dir_all(&inkml_dir).map_err(io_err(&inkml_dir))?;
    let img_dir = root.join("img");
    if images.is_some() {
        fs::create_dir_all(&img_dir).map_err(io_err(&img_dir))?;
    }
    dataset.items.par_iter().try_for_each(|item| {
        let path = inkml_dir.join(format!("{}.inkml", item.name));
        fs::write(&path, write_inkml(&item.hme)).map_err(io_err(&path))?;
        if let Some(config) = images {
            let path = img_dir.join(format!("{}.png", item.name));
            render_to(&item.hme, config, &path)?;
        }
        Ok::<_, PipelineError>(())
    })?;
    let manifest = root.join(MANIFEST_FILE);
    fs::write(&manifest, manifest_text(&dataset.items)).map_err(io_err(&manifest))?;
    let report = root.join(REPORT_FILE);
    fs::write(&report, dataset.report.to_key_value_text()).map_err(io_err(&report))?;
    Ok(())
}

pub fn render_to(hme: &OnlineHme, config: &RasterConfig, path: &Path) -> Result<(), PipelineError> {
    let raster = |source| PipelineError::Raster {
        path: path.to_path_buf(),
        source,
    };
    rasterize(hme, config)
        .map_err(raster)?
        .save_png(path)
        .map_err(raster)
}

/// Renders every corpus item to `<out>/<stem>.png`. Returns per-item
/// failures instead of stopping.
pub fn rasterize_corpus(
    corpus: &Corpus,
    out: &Path,
    config: &RasterConfig,
) -> Result<Vec<Failure>, PipelineError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let failures = corpus
        .items
        .par_iter()
        .filter_map(|item| {
            render_to(&item.hme, config, &out.join(format!("{}.png", item.stem)))
                .err()
                .map(|e| Failure {
                    item: item.stem.clone(),
                    message: e.to_string(),
                })
        })
        .collect();
    Ok(failures)
}

/// Re-reads a written dataset: every manifest row's file must parse and
/// its latex must match the row.
pub fn check_written(root: &Path) -> Result<Vec<Failure>, PipelineError> {
    let manifest = root.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest).map_err(io_err(&manifest))?;
    let failures = text
        .lines()
        .collect::<Vec<_>>()
        .par_iter()
        .filter_map(|line| {
            let fail = |message: String| Failure {
                item: line.to_string(),
                message,
            };
            let Some((rel, latex)) = line.split_once('\t') else {
                return Some(fail("missing tab".into()));
            };
            let check = || -> Result<(), String> {
                let bytes = fs::read(root.join(rel)).map_err(|e| e.to_string())?;
                let hme = parse_inkml(&bytes, &ParseOptions::default())
                    .map_err(|e: InkmlError| e.to_string())?;
                if hme.latex() != latex {
                    return Err(format!("file latex {:?} differs", hme.latex()));
                }
                Ok(())
            };
            check().err().map(fail)
        })
        .collect();
    Ok(failures)
}
