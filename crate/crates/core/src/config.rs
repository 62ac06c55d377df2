//! Run configuration.
//!
//! Values are layered: built-in defaults, then an optional named preset, then
//! a `key=value` config file, then individual overrides (the CLI flags).

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::eval::Ranking;
use crate::kg::{LoadOptions, TripleOrder};
use crate::reasoner::ReasonerConfig;
use crate::sampler::SamplerConfig;
use crate::score::Decay;

/// Freebase type carried by almost every FB15K-237 entity.
pub const FB_COMMON_TOPIC: &str = "/common/topic";

pub const PRESETS: [&str; 5] = ["fb15k-237-10", "fb15k-237-20", "fb15k-237-50", "nell23k", "wd-singer"];

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Ablations {
    pub cross_type: bool,
    pub prefer_shortpath: bool,
    pub answer_similarity: bool,
}

impl Default for Ablations {
    fn default() -> Self {
        Ablations {
            cross_type: true,
            prefer_shortpath: true,
            answer_similarity: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub dataset_dir: Option<PathBuf>,
    pub n_path: usize,
    pub n_hop: usize,
    pub n_top: usize,
    pub decay: Decay,
    pub seed: u64,
    pub threads: Option<usize>,
    pub ablations: Ablations,
    pub ranking: Ranking,
    pub triple_order: TripleOrder,
    pub ignore_types: Vec<String>,
    pub schema: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub dict_cache: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset_dir: None,
            n_path: 20_000,
            n_hop: 6,
            n_top: 100,
            decay: Decay::new(1, 5).expect("valid decay"),
            seed: 0,
            threads: None,
            ablations: Ablations::default(),
            ranking: Ranking::Filtered,
            triple_order: TripleOrder::HeadRelationTail,
            ignore_types: Vec::new(),
            schema: None,
            output: None,
            dict_cache: None,
        }
    }
}

impl RunConfig {
    /// Published hyper-parameters for one of the benchmark datasets.
    pub fn preset(name: &str) -> Result<Self> {
        let (n_path, n_hop, n_top, decay, fb) = match name.to_ascii_lowercase().as_str() {
            "fb15k-237-10" => (20_000, 6, 1000, "0.95", true),
            "fb15k-237-20" => (5000, 5, 500, "0.6", true),
            "fb15k-237-50" => (1000, 4, 100, "0.8", true),
            "nell23k" => (10_000, 6, 100, "0.5", false),
            "wd-singer" => (20_000, 6, 100, "0.2", false),
            _ => {
                return Err(Error::Config(format!(
                    "unknown preset {name:?}; expected one of {}",
                    PRESETS.join(", ")
                )))
            }
        };
        Ok(RunConfig {
            n_path,
            n_hop,
            n_top,
            decay: decay.parse()?,
            ignore_types: if fb {
                vec![FB_COMMON_TOPIC.to_owned()]
            } else {
                Vec::new()
            },
            ..RunConfig::default()
        })
    }

    /// Sets one field by key. Dashes and underscores in keys are equivalent.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        match key.as_str() {
            "dataset_dir" | "dataset" => self.dataset_dir = Some(value.into()),
            "n_path" => self.n_path = parse_positive(&key, value)?,
            "n_hop" => self.n_hop = parse_positive(&key, value)?,
            "n_top" => self.n_top = parse_positive(&key, value)?,
            "decay" | "d" => self.decay = value.parse()?,
            "seed" => self.seed = parse_value(&key, value)?,
            "threads" => self.threads = Some(parse_positive(&key, value)?),
            "cross_type" => self.ablations.cross_type = parse_bool(&key, value)?,
            "prefer_shortpath" => self.ablations.prefer_shortpath = parse_bool(&key, value)?,
            "answer_similarity" => self.ablations.answer_similarity = parse_bool(&key, value)?,
            "raw_ranking" => {
                self.ranking = if parse_bool(&key, value)? {
                    Ranking::Raw
                } else {
                    Ranking::Filtered
                }
            }
            "triple_order" => self.triple_order = value.parse()?,
            "ignore_type" => self.ignore_types.push(value.to_owned()),
            "ignore_types" => {
                self.ignore_types = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_owned)
                    .collect()
            }
            "schema" => self.schema = Some(value.into()),
            "output" => self.output = Some(value.into()),
            "dict_cache" => self.dict_cache = Some(value.into()),
            _ => return Err(Error::Config(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies `key=value` lines. Blank lines and `#` comments are skipped.
    /// A `preset=` line must come first, since it resets every field.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: origin.to_owned(),
                line: i + 1,
                message: "expected key=value".into(),
            })?;
            let wrap = |e: Error| Error::Parse {
                path: origin.to_owned(),
                line: i + 1,
                message: e.to_string(),
            };
            if key.trim() == "preset" {
                if i > 0
                    && text
                        .lines()
                        .take(i)
                        .any(|l| !l.trim().is_empty() && !l.trim().starts_with('#'))
                {
                    return Err(wrap(Error::Config("`preset` must be the first setting".into())));
                }
                *self = RunConfig::preset(value.trim()).map_err(wrap)?;
                continue;
            }
            self.set(key, value).map_err(wrap)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text, path)
    }

    /// Decay actually used for scoring; `1` when the short-path preference is
    /// disabled.
    pub fn effective_decay(&self) -> Decay {
        if self.ablations.prefer_shortpath {
            self.decay
        } else {
            Decay::ONE
        }
    }

    pub fn sampler_config(&self) -> Result<SamplerConfig> {
        SamplerConfig::new(self.n_path, self.n_hop, self.seed)
    }

    pub fn reasoner_config(&self) -> Result<ReasonerConfig> {
        let mut cfg = ReasonerConfig::new(self.n_top)?;
        cfg.cross_type_enabled = self.ablations.cross_type;
        cfg.similarity_enabled = self.ablations.answer_similarity;
        Ok(cfg)
    }

    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            triple_order: self.triple_order,
            ignore_types: self.ignore_types.clone(),
        }
    }

    pub fn require_dataset_dir(&self) -> Result<&Path> {
        self.dataset_dir
            .as_deref()
            .ok_or_else(|| Error::Config("no dataset directory given".into()))
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "N_path={} N_hop={} N_top={} d={} seed={}",
            self.n_path,
            self.n_hop,
            self.n_top,
            self.effective_decay(),
            self.seed
        )?;
        let a = self.ablations;
        for (on, name) in [
            (a.cross_type, "-cross_type"),
            (a.prefer_shortpath, "-prefer_shortpath"),
            (a.answer_similarity, "-answer_similarity"),
        ] {
            if !on {
                write!(f, " {name}")?;
            }
        }
        if self.ranking == Ranking::Raw {
            f.write_str(" raw")?;
        }
        Ok(())
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value {value:?} for {key}")))
}

fn parse_positive(key: &str, value: &str) -> Result<usize> {
    match parse_value::<usize>(key, value)? {
        0 => Err(Error::Config(format!("{key} must be positive"))),
        n => Ok(n),
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!("invalid boolean {value:?} for {key}"))),
    }
}
