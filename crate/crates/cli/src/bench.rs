//! Flat key=value benchmark configs and their execution.
//!
//! A config names one pool source, one or more methods, and the shared run
//! parameters; `run_bench` writes one report per method (per alpha when a
//! sweep is requested) into the output directory. Every knob has the same
//! meaning as the matching `acquire` flag, so a one-method one-seed bench
//! reproduces an `acquire` report byte for byte.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use cfcover::dataset::{generate_identical, generate_toy, load_pool_csv, ToyParams};
use cfcover::harness::{
    emit_report, run_experiment, sweep_alpha, ExperimentConfig, Method, ReportFormat,
};
use cfcover::io_util::write_atomic;
use cfcover::{Error, PoolSet64, Result};

use crate::{coverage_from_parts, parse_format, parse_init, parse_split, DeltaOverrides};

/// Where the benchmark pool comes from. Exactly one source per config.
#[derive(Clone, Debug)]
pub enum PoolSource {
    Csv(PathBuf),
    Toy(ToyParams),
    Identical {
        seed: u64,
        clusters: usize,
        per_cluster: usize,
    },
}

/// One parsed benchmark description.
#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub source: PoolSource,
    pub methods: Vec<Method>,
    /// Template shared by every method; `method` is overwritten per run.
    pub run: ExperimentConfig<f64>,
    /// When present, each method is swept over these counterfactual weights
    /// and a ranking summary is written alongside the per-alpha reports.
    pub alphas: Option<Vec<f64>>,
    pub format: ReportFormat,
}

struct KvMap {
    entries: BTreeMap<String, String>,
}

impl KvMap {
    fn parse(text: &str) -> Result<KvMap> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "config line {}: expected key=value, got {raw:?}",
                    lineno + 1
                )));
            };
            let key = k.trim().to_string();
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!(
                    "config line {}: duplicate key {key:?}",
                    lineno + 1
                )));
            }
        }
        Ok(KvMap { entries })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    fn take_parse<T>(&mut self, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| Error::Config(format!("config key {key}: {e}"))),
        }
    }

    fn finish(self) -> Result<()> {
        if self.entries.is_empty() {
            return Ok(());
        }
        let unknown: Vec<&str> = self.entries.keys().map(String::as_str).collect();
        Err(Error::Config(format!(
            "unknown config keys: {}",
            unknown.join(", ")
        )))
    }
}

fn parse_source(kv: &mut KvMap) -> Result<PoolSource> {
    let csv = kv.take("pool_csv").map(PathBuf::from);
    let toy_seed: Option<u64> = kv.take_parse("toy_seed")?;
    let identical_seed: Option<u64> = kv.take_parse("identical_seed")?;

    let toy = match toy_seed {
        Some(seed) => {
            let mut p = ToyParams::new(seed);
            if let Some(v) = kv.take_parse("toy_clusters_t1")? {
                p.clusters_t1 = v;
            }
            if let Some(v) = kv.take_parse("toy_clusters_t0")? {
                p.clusters_t0 = v;
            }
            if let Some(v) = kv.take_parse("toy_per_cluster")? {
                p.per_cluster = v;
            }
            if let Some(v) = kv.take_parse("toy_offset_t1")? {
                p.offset_t1 = v;
            }
            if let Some(v) = kv.take_parse("toy_offset_t0")? {
                p.offset_t0 = v;
            }
            Some(PoolSource::Toy(p))
        }
        None => None,
    };
    let identical = match identical_seed {
        Some(seed) => Some(PoolSource::Identical {
            seed,
            clusters: kv.take_parse("identical_clusters")?.unwrap_or(40),
            per_cluster: kv.take_parse("identical_per_cluster")?.unwrap_or(25),
        }),
        None => None,
    };

    let mut sources: Vec<PoolSource> = Vec::new();
    sources.extend(csv.map(PoolSource::Csv));
    sources.extend(toy);
    sources.extend(identical);
    match sources.len() {
        0 => Err(Error::Config(
            "config needs one pool source: pool_csv, toy_seed, or identical_seed".into(),
        )),
        1 => Ok(sources.pop().expect("checked length")),
        _ => Err(Error::Config(
            "config names more than one pool source; pick one of pool_csv, toy_seed, identical_seed"
                .into(),
        )),
    }
}

fn parse_methods(raw: &str) -> Result<Vec<Method>> {
    let mut methods = Vec::new();
    for part in raw.split(',') {
        let name = part.trim();
        let m = Method::from_name(name).ok_or_else(|| {
            Error::Config(format!(
                "unknown method {name:?}; expected one of fccm, fccm-minus, greedy-radius, \
                 random, kcenter-factual"
            ))
        })?;
        if methods.contains(&m) {
            return Err(Error::Config(format!(
                "method {name} is listed twice; its report file would be overwritten"
            )));
        }
        methods.push(m);
    }
    Ok(methods)
}

fn parse_list<T>(raw: &str, what: &str) -> Result<Vec<T>>
where
    T: FromStr,
    T::Err: Display,
{
    raw.split(',')
        .map(|part| {
            part.trim()
                .parse()
                .map_err(|e| Error::Config(format!("{what}: {e}")))
        })
        .collect()
}

/// Parses the flat key=value text into a runnable description.
pub fn parse_bench_config(text: &str) -> Result<BenchConfig> {
    let mut kv = KvMap::parse(text)?;
    let source = parse_source(&mut kv)?;

    let methods_raw = kv
        .take("methods")
        .ok_or_else(|| Error::Config("config needs a methods key".into()))?;
    let methods = parse_methods(&methods_raw)?;
    if methods.is_empty() {
        return Err(Error::Config("methods list is empty".into()));
    }

    let init_name = kv.take("init").unwrap_or_else(|| "all-control".into());
    let init_k = kv.take_parse("init_k")?.unwrap_or(1);
    let init = parse_init(&init_name, init_k)?;

    let overrides = DeltaOverrides {
        delta_11: kv.take_parse("delta11")?,
        delta_10: kv.take_parse("delta10")?,
        delta_00: kv.take_parse("delta00")?,
        delta_01: kv.take_parse("delta01")?,
    };
    let coverage = coverage_from_parts(
        kv.take_parse("delta")?.unwrap_or(0.1),
        &overrides,
        kv.take_parse("alpha")?.unwrap_or(2.5),
    );

    let split_raw = kv.take("split").unwrap_or_else(|| "0.6,0.2,0.2".into());
    let seeds = match kv.take("seeds") {
        Some(raw) => parse_list(&raw, "config key seeds")?,
        None => vec![0],
    };
    let alphas = match kv.take("alphas") {
        Some(raw) => Some(parse_list(&raw, "config key alphas")?),
        None => None,
    };
    let format = parse_format(&kv.take("format").unwrap_or_else(|| "csv".into()))?;

    let run = ExperimentConfig {
        init,
        method: methods[0],
        steps: kv.take_parse("steps")?.unwrap_or(50),
        step_len: kv.take_parse("step_len")?.unwrap_or(1),
        seeds,
        coverage,
        split: parse_split(&split_raw)?,
    };
    kv.finish()?;
    Ok(BenchConfig {
        source,
        methods,
        run,
        alphas,
        format,
    })
}

/// Materializes the configured pool.
pub fn load_bench_pool(source: &PoolSource) -> Result<PoolSet64> {
    match source {
        PoolSource::Csv(path) => load_pool_csv(path),
        PoolSource::Toy(params) => Ok(generate_toy(params)),
        PoolSource::Identical {
            seed,
            clusters,
            per_cluster,
        } => Ok(generate_identical(*seed, *clusters, *per_cluster)),
    }
}

fn float_tag(v: f64) -> String {
    format!("{v}")
}

/// Runs every configured method and writes its artifacts under `out_dir`.
/// Returns one human-readable line per artifact, in write order.
pub fn run_bench(config: &BenchConfig, out_dir: &Path) -> Result<Vec<String>> {
    fs::create_dir_all(out_dir)?;
    let pool = load_bench_pool(&config.source)?;
    let ext = match config.format {
        ReportFormat::Csv => "csv",
        ReportFormat::Json => "json",
    };
    let mut lines = Vec::new();

    match &config.alphas {
        None => {
            for &method in &config.methods {
                let mut run = config.run.clone();
                run.method = method;
                let report = run_experiment(&pool, &run)?;
                let path = out_dir.join(format!("{}.{ext}", method.name()));
                emit_report(&report.rows, config.format, &path)?;
                lines.push(format!(
                    "{}: {} rows -> {}",
                    method.name(),
                    report.rows.len(),
                    path.display()
                ));
                if !report.truncated_seeds.is_empty() {
                    lines.push(format!(
                        "{}: candidates ran out for seeds {:?}",
                        method.name(),
                        report.truncated_seeds
                    ));
                }
            }
        }
        Some(alphas) => {
            let mut summary = String::from("method,alpha,mean_final_val,mean_final_test\n");
            for &method in &config.methods {
                let mut run = config.run.clone();
                run.method = method;
                let ranked = sweep_alpha(&pool, &run, alphas)?;
                for entry in &ranked {
                    let path = out_dir.join(format!(
                        "{}-alpha-{}.{ext}",
                        method.name(),
                        float_tag(entry.alpha)
                    ));
                    emit_report(&entry.report.rows, config.format, &path)?;
                    summary.push_str(&format!(
                        "{},{},{},{}\n",
                        method.name(),
                        entry.alpha,
                        entry.mean_final_val,
                        entry.mean_final_test
                    ));
                }
                let best = &ranked[0];
                lines.push(format!(
                    "{}: best alpha {} (validation error {})",
                    method.name(),
                    best.alpha,
                    best.mean_final_val
                ));
            }
            let path = out_dir.join("sweep_summary.csv");
            write_atomic(&path, summary.as_bytes())?;
            lines.push(format!("sweep summary -> {}", path.display()));
        }
    }
    Ok(lines)
}
