use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use logre::config::RunConfig;
use logre::eval::{self, FilterIndex, Ranking};
use logre::kg::{self, Dataset, KnowledgeGraph};
use logre::reasoner::{Query, Reasoner};
use logre::sampler::{build_dictionary, EntityPathDictionary};
use logre::schema::{self, ReasoningSchema};
use logre::score::Decay;
use logre::{EntityId, Error, RelationId};

const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_CONSISTENCY: u8 = 4;

/// Relation-path reasoning for sparse knowledge graph completion.
///
/// A dataset directory holds train.triples, valid.triples, test.triples and
/// entity_types.tsv, plus optional entity_names.tsv and relation_names.tsv.
#[derive(Parser, Debug)]
#[command(name = "logre", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample the entity-path dictionary and write the reasoning schema.
    BuildSchema(RunArgs),
    /// Answer one (head, relation, ?) query with explanations.
    Reason {
        #[command(flatten)]
        run: RunArgs,
        /// Head entity, by identifier or display name.
        head: String,
        /// Relation, by identifier or display name.
        relation: String,
        /// Number of candidates to print.
        #[arg(short = 'k', long, default_value_t = 10)]
        top_k: usize,
        /// Paths shown per candidate.
        #[arg(long, default_value_t = 10)]
        paths: usize,
    },
    /// Compute filtered MRR and Hits@{1,3,10} on a split.
    Evaluate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = Split::Test)]
        split: Split,
        /// Include per-query ranks in the report.
        #[arg(long)]
        per_query: bool,
    },
    /// Write ranked candidates with explanations for every query of a split.
    ExplainDump {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = Split::Test)]
        split: Split,
        /// Candidates per query.
        #[arg(short = 'k', long, default_value_t = 10)]
        top_k: usize,
        /// Paths shown per candidate.
        #[arg(long, default_value_t = 10)]
        paths: usize,
        /// Emit JSON lines instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Write entity_types.tsv for a dataset that ships without one.
    DeriveTypes {
        /// Dataset directory (only the triple files are read).
        #[arg(short = 'D', long)]
        dataset: PathBuf,
        /// nell: category inside the entity ids; instance-of: facts from --facts.
        #[arg(long, value_enum)]
        from: TypeScheme,
        /// entity<TAB>relation<TAB>type file, for --from instance-of.
        #[arg(long, required_if_eq("from", "instance-of"))]
        facts: Option<PathBuf>,
        /// Relation naming the type, for --from instance-of.
        #[arg(long, default_value = "P31")]
        relation: String,
        /// Column order of the dataset's triple files: hrt or htr.
        #[arg(long, default_value = "hrt")]
        triple_order: String,
        /// Output file; defaults to entity_types.tsv in the dataset directory.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum TypeScheme {
    Nell,
    InstanceOf,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Split {
    Valid,
    Test,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Dataset directory.
    #[arg(short = 'D', long)]
    dataset: Option<PathBuf>,
    /// Published settings: fb15k-237-10, fb15k-237-20, fb15k-237-50, nell23k, wd-singer.
    #[arg(long)]
    preset: Option<String>,
    /// key=value config file, applied after the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// N_path: maximum walks collected per entity.
    #[arg(long)]
    n_path: Option<usize>,
    /// N_hop: maximum hops per walk.
    #[arg(long)]
    n_hop: Option<usize>,
    /// N_top: number of top-scored paths grounded per query.
    #[arg(long)]
    n_top: Option<usize>,
    /// d: hop decay factor in (0, 1], decimal or fraction.
    #[arg(long)]
    decay: Option<String>,
    /// Master seed for walk sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (affects wall time only).
    #[arg(long)]
    threads: Option<usize>,
    /// Disable cross-type lifting (use per-type path lists).
    #[arg(long)]
    no_cross_type: bool,
    /// Disable the short-path preference (treat d as 1).
    #[arg(long)]
    no_prefer_shortpath: bool,
    /// Disable the answer-similarity rescaling.
    #[arg(long)]
    no_answer_similarity: bool,
    /// Rank against all candidates instead of the filtered protocol.
    #[arg(long)]
    raw_ranking: bool,
    /// Column order of the triple files: hrt or htr.
    #[arg(long)]
    triple_order: Option<String>,
    /// Entity type to drop before type selection (repeatable).
    #[arg(long = "ignore-type")]
    ignore_types: Vec<String>,
    /// Schema file to read; built in memory when absent.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Output path for the schema, report or explanation dump.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Cache file for the entity-path dictionary.
    #[arg(long)]
    dict_cache: Option<PathBuf>,
}

impl RunArgs {
    fn resolve(&self) -> logre::Result<RunConfig> {
        let mut cfg = match &self.preset {
            Some(p) => RunConfig::preset(p)?,
            None => RunConfig::default(),
        };
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        let mut set = |key: &str, value: Option<String>| match value {
            Some(v) => cfg.set(key, &v),
            None => Ok(()),
        };
        set("dataset_dir", self.dataset.as_ref().map(|p| p.display().to_string()))?;
        set("n_path", self.n_path.map(|v| v.to_string()))?;
        set("n_hop", self.n_hop.map(|v| v.to_string()))?;
        set("n_top", self.n_top.map(|v| v.to_string()))?;
        set("decay", self.decay.clone())?;
        set("seed", self.seed.map(|v| v.to_string()))?;
        set("threads", self.threads.map(|v| v.to_string()))?;
        set("triple_order", self.triple_order.clone())?;
        set("schema", self.schema.as_ref().map(|p| p.display().to_string()))?;
        set("output", self.output.as_ref().map(|p| p.display().to_string()))?;
        set("dict_cache", self.dict_cache.as_ref().map(|p| p.display().to_string()))?;
        for t in &self.ignore_types {
            cfg.set("ignore_type", t)?;
        }
        if self.no_cross_type {
            cfg.ablations.cross_type = false;
        }
        if self.no_prefer_shortpath {
            cfg.ablations.prefer_shortpath = false;
        }
        if self.no_answer_similarity {
            cfg.ablations.answer_similarity = false;
        }
        if self.raw_ranking {
            cfg.ranking = Ranking::Raw;
        }
        Ok(cfg)
    }

    /// Whether d came from the user rather than from a schema file.
    fn decay_given(&self) -> bool {
        self.decay.is_some() || self.preset.is_some() || self.config.is_some() || self.no_prefer_shortpath
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Lookup(_) => EXIT_CONFIG,
        Error::Parse { .. } | Error::Io { .. } | Error::Format { .. } | Error::InvalidDataset(_) => EXIT_IO,
        Error::Mismatch(_) => EXIT_CONSISTENCY,
    }
}

fn run(cli: Cli) -> logre::Result<()> {
    match cli.command {
        Command::DeriveTypes {
            dataset,
            from,
            facts,
            relation,
            triple_order,
            output,
        } => {
            let order = triple_order.parse()?;
            let source = match (from, &facts) {
                (TypeScheme::Nell, _) => kg::TypeSource::NellIds,
                (TypeScheme::InstanceOf, Some(f)) => kg::TypeSource::InstanceOf {
                    facts: f,
                    relation: &relation,
                },
                (TypeScheme::InstanceOf, None) => return Err(Error::Config("--from instance-of needs --facts".into())),
            };
            let pairs = kg::derive_types(&dataset, order, source)?;
            let target = output.unwrap_or_else(|| dataset.join(kg::TYPES_FILE));
            let mut text = String::new();
            for (e, t) in &pairs {
                text.push_str(e);
                text.push('\t');
                text.push_str(t);
                text.push('\n');
            }
            fs::write(&target, text).map_err(|e| io_error(&target, e))?;
            let typed: std::collections::BTreeSet<&str> = pairs.iter().map(|p| p.0.as_str()).collect();
            println!(
                "{} type lines for {} entities written to {}",
                pairs.len(),
                typed.len(),
                target.display()
            );
            Ok(())
        }
        Command::BuildSchema(args) => {
            let cfg = setup(&args)?;
            let output = cfg
                .output
                .clone()
                .ok_or_else(|| Error::Config("build-schema needs --output".into()))?;
            let started = Instant::now();
            let data = load(&cfg)?;
            let schema = build(&cfg, &data.graph)?;
            schema::save_schema(&schema, &output)?;
            let s = schema.summary();
            println!("dataset       {}", cfg.require_dataset_dir()?.display());
            println!("config        {cfg}");
            println!(
                "graph         |E|={} |R|={} facts={} types={}",
                data.graph.entity_count(),
                data.graph.relation_count(),
                data.graph.facts().len(),
                data.graph.type_count()
            );
            println!("type groups   {}", s.type_groups);
            println!("type-specific {} relation lists", s.type_specific_relations);
            println!("cross-type    {} relations", s.cross_type_relations);
            println!("paths stored  {}", s.stored_paths);
            println!("wall time     {:.2}s", started.elapsed().as_secs_f64());
            println!("schema        {}", output.display());
            Ok(())
        }
        Command::Reason {
            run,
            head,
            relation,
            top_k,
            paths,
        } => {
            let cfg = setup(&run)?;
            let data = load(&cfg)?;
            let schema = obtain_schema(&run, &cfg, &data.graph)?;
            let g = &data.graph;
            let q = Query::new(resolve_entity(g, &head)?, resolve_relation(g, &relation)?);
            let reasoner = Reasoner::new(g, &schema, cfg.reasoner_config()?);
            let query_text = format!("({}, {}, ?)", g.entity_label(q.head), g.relation_label(q.relation));
            if reasoner.paths_for(q).is_empty() {
                println!("{query_text}: no paths available");
                return Ok(());
            }
            let cands = reasoner.answer(q);
            if cands.is_empty() {
                println!("{query_text}: no candidates reached");
                return Ok(());
            }
            println!("{query_text}");
            for (i, c) in cands.iter().take(top_k).enumerate() {
                println!("{}. {}", i + 1, reasoner.explain(c, paths));
            }
            Ok(())
        }
        Command::Evaluate { run, split, per_query } => {
            let cfg = setup(&run)?;
            let data = load(&cfg)?;
            let schema = obtain_schema(&run, &cfg, &data.graph)?;
            let reasoner = Reasoner::new(&data.graph, &schema, cfg.reasoner_config()?);
            let filter = FilterIndex::from_dataset(&data);
            let report = eval::evaluate(&reasoner, split_facts(&data, split), &filter, cfg.ranking);
            println!("{}", report.summary_line());
            if let Some(out) = &cfg.output {
                let doc = report.document(&data.graph, per_query);
                let text = serde_json::to_string_pretty(&doc).expect("report serialises");
                fs::write(out, text + "\n").map_err(|e| Error::Io {
                    path: out.clone(),
                    source: e,
                })?;
            }
            Ok(())
        }
        Command::ExplainDump {
            run,
            split,
            top_k,
            paths,
            json,
        } => {
            let cfg = setup(&run)?;
            let data = load(&cfg)?;
            let schema = obtain_schema(&run, &cfg, &data.graph)?;
            let g = &data.graph;
            let reasoner = Reasoner::new(g, &schema, cfg.reasoner_config()?);
            let sink: Box<dyn Write> = match &cfg.output {
                Some(p) => Box::new(fs::File::create(p).map_err(|e| io_error(p, e))?),
                None => Box::new(io::stdout().lock()),
            };
            let mut out = BufWriter::new(sink);
            let target = cfg.output.clone().unwrap_or_else(|| PathBuf::from("<stdout>"));
            dump(&reasoner, split_facts(&data, split), top_k, paths, json, &mut out).map_err(|e| io_error(&target, e))
        }
    }
}

fn dump(
    reasoner: &Reasoner<'_>,
    facts: &[kg::Triple],
    top_k: usize,
    paths: usize,
    json: bool,
    out: &mut impl Write,
) -> io::Result<()> {
    let g = reasoner.graph();
    for fact in facts {
        let cands = reasoner.answer(Query::new(fact.head, fact.relation));
        let explanations: Vec<_> = cands.iter().take(top_k).map(|c| reasoner.explain(c, paths)).collect();
        if json {
            let line = serde_json::json!({
                "head": g.entity_name(fact.head),
                "relation": g.relation_name(fact.relation),
                "gold": g.entity_name(fact.tail),
                "candidates": explanations,
            });
            writeln!(out, "{line}")?;
        } else {
            writeln!(
                out,
                "# ({}, {}, ?) gold={}",
                g.entity_label(fact.head),
                g.relation_label(fact.relation),
                g.entity_label(fact.tail)
            )?;
            if explanations.is_empty() {
                writeln!(out, "no paths available")?;
            }
            for (i, e) in explanations.iter().enumerate() {
                writeln!(out, "{}. {e}", i + 1)?;
            }
        }
    }
    out.flush()
}

fn io_error(path: &Path, e: io::Error) -> Error {
    Error::Io {
        path: path.to_owned(),
        source: e,
    }
}

fn setup(args: &RunArgs) -> logre::Result<RunConfig> {
    let cfg = args.resolve()?;
    cfg.sampler_config()?;
    cfg.reasoner_config()?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot start thread pool: {e}")))?;
    }
    Ok(cfg)
}

fn load(cfg: &RunConfig) -> logre::Result<Dataset> {
    kg::load_dataset_dir(cfg.require_dataset_dir()?, &cfg.load_options())
}

fn build(cfg: &RunConfig, g: &KnowledgeGraph) -> logre::Result<ReasoningSchema> {
    let sampler = cfg.sampler_config()?;
    let decay = cfg.effective_decay();
    match &cfg.dict_cache {
        None => Ok(schema::build_schema_streaming(g, sampler, decay)),
        Some(path) => {
            let dict = match EntityPathDictionary::load_cached(path, g, sampler)? {
                Some(d) => d,
                None => {
                    let d = build_dictionary(g, sampler);
                    d.save(path)?;
                    d
                }
            };
            schema::build_schema(g, &dict, decay)
        }
    }
}

fn obtain_schema(args: &RunArgs, cfg: &RunConfig, g: &KnowledgeGraph) -> logre::Result<ReasoningSchema> {
    let Some(path) = &cfg.schema else {
        return build(cfg, g);
    };
    let mut s = schema::load_schema(path)?;
    if s.provenance.graph_hash != g.content_hash() {
        return Err(Error::Mismatch(format!(
            "schema {} was built from a different training graph (hash {} vs {})",
            path.display(),
            s.provenance.graph_hash,
            g.content_hash()
        )));
    }
    if args.decay_given() {
        let d: Decay = cfg.effective_decay();
        if d != s.decay {
            s.set_decay(d);
        }
    }
    Ok(s)
}

fn split_facts(data: &Dataset, split: Split) -> &[kg::Triple] {
    match split {
        Split::Valid => &data.valid,
        Split::Test => &data.test,
    }
}

fn resolve_entity(g: &KnowledgeGraph, text: &str) -> logre::Result<EntityId> {
    if let Some(e) = g.entity_id(text) {
        return Ok(e);
    }
    let ids = g.entities();
    resolve(text, "entity", ids.map(|e| (e, g.entity_name(e), g.entity_label(e))))
}

fn resolve_relation(g: &KnowledgeGraph, text: &str) -> logre::Result<RelationId> {
    if let Some(r) = g.relation_id(text) {
        return Ok(r);
    }
    let ids = g.relations();
    resolve(
        text,
        "relation",
        ids.map(|r| (r, g.relation_name(r), g.relation_label(r))),
    )
}

/// Matches `text` against display names. Exactly one hit is required.
fn resolve<'a, T: Copy>(
    text: &str,
    kind: &str,
    items: impl Iterator<Item = (T, &'a str, &'a str)>,
) -> logre::Result<T> {
    let items: Vec<_> = items.collect();
    let hits: Vec<_> = items.iter().filter(|(_, _, label)| *label == text).collect();
    match hits.as_slice() {
        [one] => Ok(one.0),
        [] => {
            let mut near: Vec<(f64, &str, &str)> = items
                .iter()
                .map(|&(_, id, label)| {
                    let s = strsim::jaro_winkler(&text.to_lowercase(), &label.to_lowercase())
                        .max(strsim::jaro_winkler(&text.to_lowercase(), &id.to_lowercase()));
                    (s, id, label)
                })
                .filter(|(s, _, _)| *s >= 0.7)
                .collect();
            near.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
            let list: Vec<String> = near
                .iter()
                .take(5)
                .map(|(_, id, label)| {
                    if id == label {
                        id.to_string()
                    } else {
                        format!("{label} [{id}]")
                    }
                })
                .collect();
            Err(Error::Lookup(if list.is_empty() {
                format!("unknown {kind} {text:?}")
            } else {
                format!("unknown {kind} {text:?}; near matches: {}", list.join(", "))
            }))
        }
        many => Err(Error::Lookup(format!(
            "{kind} name {text:?} is ambiguous: {}",
            many.iter().map(|(_, id, _)| *id).collect::<Vec<_>>().join(", ")
        ))),
    }
}
