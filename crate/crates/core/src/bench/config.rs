//! Experiment configuration and the flat `key = value` file format.
//!
//! ```text
//! # comment
//! algorithm = hashflow, hashpipe
//! budget_bytes = 1M
//! flows = 10000, 50000
//! preset = backbone
//! seeds = 0..10
//! thresholds = 50, 100, 200
//! ```
//!
//! Any key may hold a comma list; `expand` yields the cartesian product.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::hashflow::Layout;
use crate::sketch::Algorithm;
use crate::traffic::{Interleaving, Preset, Selection, SyntheticSpec};

/// Environment variable that replaces the seed list of a config file.
pub const SEED_ENV: &str = "FLOWSKETCH_SEED";

pub const DEFAULT_THRESHOLDS: [u64; 5] = [50, 100, 200, 400, 800];

#[derive(Clone, Debug, PartialEq)]
pub enum TraceSource {
    Synthetic {
        label: String,
        zipf_exponent: f64,
        max_flow_size: u64,
        interleaving: Interleaving,
    },
    /// A trace file; `flows` distinct flows are kept from it.
    File { path: PathBuf, selection: SelectionMode },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SelectionMode {
    #[default]
    FirstSeen,
    Random,
}

impl TraceSource {
    pub fn preset(preset: Preset) -> Self {
        let (zipf_exponent, max_flow_size) = preset.parameters();
        TraceSource::Synthetic {
            label: preset.name().to_string(),
            zipf_exponent,
            max_flow_size,
            interleaving: Interleaving::Shuffled,
        }
    }

    /// Name used in the `trace` column of result rows.
    pub fn label(&self) -> String {
        match self {
            TraceSource::Synthetic { label, .. } => label.clone(),
            TraceSource::File { path, .. } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
        }
    }

    pub(crate) fn synthetic_spec(&self, flows: usize, seed: u64) -> Option<SyntheticSpec> {
        match *self {
            TraceSource::Synthetic {
                zipf_exponent,
                max_flow_size,
                interleaving,
                ..
            } => Some(SyntheticSpec {
                flow_count: flows,
                zipf_exponent,
                max_flow_size,
                seed,
                interleaving,
            }),
            TraceSource::File { .. } => None,
        }
    }

    pub(crate) fn selection(&self, seed: u64) -> Selection {
        match self {
            TraceSource::File {
                selection: SelectionMode::Random,
                ..
            } => Selection::Random { seed },
            _ => Selection::FirstSeen,
        }
    }
}

/// One run: one algorithm, one budget, one trace, one seed.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub budget_bytes: u64,
    pub trace: TraceSource,
    pub flows: usize,
    pub seed: u64,
    pub thresholds: Vec<u64>,
    /// HashFlow main-table layout.
    pub layout: Layout,
    /// HashFlow probe depth.
    pub depth: usize,
}

impl ExperimentConfig {
    pub fn new(algorithm: Algorithm, budget_bytes: u64, trace: TraceSource, flows: usize, seed: u64) -> Self {
        ExperimentConfig {
            algorithm,
            budget_bytes,
            trace,
            flows,
            seed,
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            layout: Layout::Pipelined { alpha: 0.7 },
            depth: 3,
        }
    }

    /// Ordering key for result rows.
    pub(crate) fn sort_key(&self) -> (String, String, usize, u64, usize, String, u64) {
        (
            self.algorithm.name().to_string(),
            self.trace.label(),
            self.flows,
            self.budget_bytes,
            self.depth,
            format!("{:?}", self.layout),
            self.seed,
        )
    }
}

/// A parsed config file: every key as a list of values.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub algorithms: Vec<Algorithm>,
    pub budgets: Vec<u64>,
    pub flows: Vec<usize>,
    pub seeds: Vec<u64>,
    pub thresholds: Vec<u64>,
    pub traces: Vec<TraceSource>,
    pub layouts: Vec<Layout>,
    pub depths: Vec<usize>,
    pub parallelism: usize,
    /// Where `grid` writes its CSV; stdout when absent.
    pub output: Option<PathBuf>,
}

const KNOWN_KEYS: &[&str] = &[
    "algorithm",
    "budget_bytes",
    "flows",
    "seed",
    "seeds",
    "thresholds",
    "preset",
    "zipf",
    "cap",
    "interleaving",
    "trace_file",
    "selection",
    "layout",
    "alpha",
    "depth",
    "parallelism",
    "output",
];

impl GridSpec {
    pub fn parse(text: &str, source_name: &str) -> Result<GridSpec> {
        let mut entries: Vec<(&str, Vec<&str>, u64)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx as u64 + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |field: Option<&str>, message: String| Error::Parse {
                source_name: source_name.to_string(),
                line: line_no,
                field: field.map(str::to_string),
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| perr(None, format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(perr(Some(key), format!("unknown key `{key}`")));
            }
            if entries.iter().any(|(k, _, _)| *k == key) {
                return Err(perr(Some(key), format!("duplicate key `{key}`")));
            }
            let values: Vec<&str> = value.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
            if values.is_empty() {
                return Err(perr(Some(key), format!("`{key}` has no value")));
            }
            entries.push((key, values, line_no));
        }

        let find = |key: &str| entries.iter().find(|(k, _, _)| *k == key);
        let list = |key: &str| -> Option<(&Vec<&str>, u64)> { find(key).map(|(_, v, l)| (v, *l)) };
        let parse_list = |key: &str, parse: &dyn Fn(&str) -> Option<Vec<u64>>| -> Result<Option<Vec<u64>>> {
            let Some((values, line)) = list(key) else {
                return Ok(None);
            };
            let mut out = Vec::new();
            for v in values {
                out.extend(parse(v).ok_or_else(|| Error::Parse {
                    source_name: source_name.to_string(),
                    line,
                    field: Some(key.to_string()),
                    message: format!("bad value `{v}` for `{key}`"),
                })?);
            }
            Ok(Some(out))
        };
        let field_err = |key: &str, message: String| {
            let line = list(key).map(|(_, l)| l).unwrap_or(0);
            Error::Parse {
                source_name: source_name.to_string(),
                line,
                field: Some(key.to_string()),
                message,
            }
        };
        let single = |key: &str| -> Result<Option<&str>> {
            match list(key) {
                None => Ok(None),
                Some((v, _)) if v.len() == 1 => Ok(Some(v[0])),
                Some(_) => Err(field_err(key, format!("`{key}` takes a single value"))),
            }
        };

        let algorithms = match list("algorithm") {
            None => return Err(Error::config(format!("{source_name}: missing `algorithm`"))),
            Some((values, _)) => values
                .iter()
                .map(|v| v.parse::<Algorithm>().map_err(|e| field_err("algorithm", e.to_string())))
                .collect::<Result<Vec<_>>>()?,
        };
        let budgets = parse_list("budget_bytes", &|v| parse_bytes(v).map(|b| vec![b]))?
            .ok_or_else(|| Error::config(format!("{source_name}: missing `budget_bytes`")))?;
        let flows = parse_list("flows", &|v| v.replace('_', "").parse().ok().map(|n| vec![n]))?
            .ok_or_else(|| Error::config(format!("{source_name}: missing `flows`")))?
            .into_iter()
            .map(|n| n as usize)
            .collect();
        if list("seed").is_some() && list("seeds").is_some() {
            return Err(field_err("seeds", "give `seed` or `seeds`, not both".into()));
        }
        let seeds = match parse_list("seeds", &parse_seed_range)? {
            Some(s) => s,
            None => parse_list("seed", &parse_seed_range)?.unwrap_or_else(|| vec![0]),
        };
        let thresholds = parse_list("thresholds", &|v| v.parse().ok().map(|t| vec![t]))?
            .unwrap_or_else(|| DEFAULT_THRESHOLDS.to_vec());
        let depths: Vec<usize> = parse_list("depth", &|v| v.parse().ok().map(|d| vec![d]))?
            .unwrap_or_else(|| vec![3])
            .into_iter()
            .map(|d| d as usize)
            .collect();
        let parallelism = match single("parallelism")? {
            None => 1,
            Some(v) => v
                .parse()
                .map_err(|_| field_err("parallelism", format!("bad value `{v}`")))?,
        };
        let output = single("output")?.map(PathBuf::from);

        let layout_names: Vec<&str> = list("layout").map(|(v, _)| v.clone()).unwrap_or_else(|| vec!["pipelined"]);
        let alphas: Vec<f64> = match list("alpha") {
            None => vec![0.7],
            Some((values, _)) => values
                .iter()
                .map(|v| v.parse().map_err(|_| field_err("alpha", format!("bad value `{v}`"))))
                .collect::<Result<_>>()?,
        };
        let mut layouts = Vec::new();
        for name in layout_names {
            match name {
                "multihash" | "multi-hash" => layouts.push(Layout::MultiHash),
                "pipelined" => layouts.extend(alphas.iter().map(|&alpha| Layout::Pipelined { alpha })),
                other => return Err(field_err("layout", format!("unknown layout `{other}`"))),
            }
        }

        let traces = if let Some(path) = single("trace_file")? {
            if list("preset").is_some() || list("zipf").is_some() {
                return Err(field_err("trace_file", "`trace_file` excludes `preset` and `zipf`".into()));
            }
            let selection = match single("selection")? {
                None | Some("first") => SelectionMode::FirstSeen,
                Some("random") => SelectionMode::Random,
                Some(other) => return Err(field_err("selection", format!("unknown selection `{other}`"))),
            };
            vec![TraceSource::File {
                path: PathBuf::from(path),
                selection,
            }]
        } else {
            let interleaving = match single("interleaving")? {
                None | Some("shuffled") => Interleaving::Shuffled,
                Some("sorted") => Interleaving::Sorted,
                Some(other) => return Err(field_err("interleaving", format!("unknown interleaving `{other}`"))),
            };
            let mut traces = Vec::new();
            if let Some((presets, _)) = list("preset") {
                if list("zipf").is_some() || list("cap").is_some() {
                    return Err(field_err("preset", "`preset` excludes `zipf` and `cap`".into()));
                }
                for p in presets {
                    let preset: Preset = p.parse().map_err(|e: Error| field_err("preset", e.to_string()))?;
                    let mut t = TraceSource::preset(preset);
                    if let TraceSource::Synthetic { interleaving: i, .. } = &mut t {
                        *i = interleaving;
                    }
                    traces.push(t);
                }
            } else {
                let zipf = single("zipf")?.ok_or_else(|| {
                    Error::config(format!("{source_name}: need `preset`, `zipf` + `cap`, or `trace_file`"))
                })?;
                let cap = single("cap")?.ok_or_else(|| field_err("zipf", "`zipf` needs `cap`".into()))?;
                let zipf_exponent: f64 = zipf.parse().map_err(|_| field_err("zipf", format!("bad value `{zipf}`")))?;
                let max_flow_size = parse_count(cap).ok_or_else(|| field_err("cap", format!("bad value `{cap}`")))?;
                traces.push(TraceSource::Synthetic {
                    label: format!("zipf-{zipf}-cap-{max_flow_size}"),
                    zipf_exponent,
                    max_flow_size,
                    interleaving,
                });
            }
            traces
        };

        Ok(GridSpec {
            algorithms,
            budgets,
            flows,
            seeds,
            thresholds,
            traces,
            layouts,
            depths,
            parallelism,
            output,
        })
    }

    /// Replaces the seed list with the value of `FLOWSKETCH_SEED`, if set.
    pub fn apply_seed_override(&mut self) -> Result<()> {
        if let Ok(raw) = std::env::var(SEED_ENV) {
            self.seeds =
                parse_seed_range(raw.trim()).ok_or_else(|| Error::config(format!("{SEED_ENV}: bad seed `{raw}`")))?;
        }
        Ok(())
    }

    /// Cartesian product of every list. HashFlow-only knobs do not multiply
    /// the other algorithms' runs.
    pub fn expand(&self) -> Vec<ExperimentConfig> {
        let mut out = Vec::new();
        for &algorithm in &self.algorithms {
            let (layouts, depths) = if algorithm == Algorithm::HashFlow {
                (self.layouts.clone(), self.depths.clone())
            } else {
                (vec![Layout::Pipelined { alpha: 0.7 }], vec![3])
            };
            for trace in &self.traces {
                for &flows in &self.flows {
                    for &budget_bytes in &self.budgets {
                        for &layout in &layouts {
                            for &depth in &depths {
                                for &seed in &self.seeds {
                                    let mut c = ExperimentConfig::new(algorithm, budget_bytes, trace.clone(), flows, seed);
                                    c.thresholds = self.thresholds.clone();
                                    c.layout = layout;
                                    c.depth = depth;
                                    out.push(c);
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Parses a byte count with an optional `K`/`M`/`G` (binary) suffix.
pub fn parse_bytes(raw: &str) -> Option<u64> {
    let s = raw.trim().trim_end_matches(['B', 'b']);
    let (digits, mult) = match s.chars().last()? {
        'K' | 'k' => (&s[..s.len() - 1], 1u64 << 10),
        'M' | 'm' => (&s[..s.len() - 1], 1 << 20),
        'G' | 'g' => (&s[..s.len() - 1], 1 << 30),
        _ => (s, 1),
    };
    if digits.contains('.') {
        let v: f64 = digits.parse().ok()?;
        return (v >= 0.0).then(|| (v * mult as f64).round() as u64);
    }
    digits.replace('_', "").parse::<u64>().ok()?.checked_mul(mult)
}

/// Integer that may be written in scientific notation (`1e5`).
fn parse_count(raw: &str) -> Option<u64> {
    let raw = raw.replace('_', "");
    raw.parse::<u64>().ok().or_else(|| {
        let v: f64 = raw.parse().ok()?;
        (v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64).then_some(v as u64)
    })
}

/// `7` or the half-open range `0..10`.
fn parse_seed_range(raw: &str) -> Option<Vec<u64>> {
    match raw.split_once("..") {
        Some((a, b)) => {
            let (a, b): (u64, u64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
            (a < b).then(|| (a..b).collect())
        }
        None => raw.parse().ok().map(|s| vec![s]),
    }
}
