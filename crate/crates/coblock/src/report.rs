//! Fit result document: a line-oriented key/value text format that is
//! diffable, versioned, and round-trips exactly (floats use the shortest
//! representation that parses back to the same bits).

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{ModelKind, PriorConfig};
use crate::search::{FitResult, SearchConfig, TracePoint};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub format_version: String,
    pub model: ModelKind,
    /// Initial cluster caps after clamping to the matrix dimensions.
    pub kmax: usize,
    pub gmax: usize,
    pub prior: PriorConfig,
    pub pruning: bool,
    pub restarts: u32,
    pub seed: u64,
    pub icl: f64,
    pub k: usize,
    pub g: usize,
    /// 0-based in memory, 1-based on disk.
    pub row_labels: Vec<u32>,
    pub col_labels: Vec<u32>,
    /// Objective after each recorded sweep or merge pass.
    pub trace: Vec<f64>,
    pub best_restart: usize,
    pub sweeps: u32,
    pub moves: u64,
    pub merges: u32,
    pub min_accepted_delta: f64,
    pub hit_max_sweeps: bool,
    pub wall_time_ms: u64,
}

impl FitReport {
    pub fn new(
        model: ModelKind,
        cfg: &SearchConfig,
        kmax: usize,
        gmax: usize,
        result: &FitResult,
    ) -> Self {
        FitReport {
            format_version: FORMAT_VERSION.to_string(),
            model,
            kmax,
            gmax,
            prior: cfg.prior,
            pruning: cfg.pruning,
            restarts: cfg.restarts,
            seed: cfg.seed,
            icl: result.icl,
            k: result.k(),
            g: result.g(),
            row_labels: result.partition.row_labels().to_vec(),
            col_labels: result.partition.col_labels().to_vec(),
            trace: result.trace.iter().map(|p| p.icl).collect(),
            best_restart: result.best_restart,
            sweeps: result.sweeps,
            moves: result.moves,
            merges: result.merges,
            min_accepted_delta: result.min_accepted_delta,
            hit_max_sweeps: result.hit_max_sweeps,
            wall_time_ms: result.wall_time_ms,
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut kv = |key: &str, value: String| {
            out.push_str(key);
            out.push(' ');
            out.push_str(&value);
            out.push('\n');
        };
        kv("format_version", self.format_version.clone());
        kv("model", self.model.name().to_string());
        if let ModelKind::Categorical { categories } = self.model {
            kv("categories", categories.to_string());
        }
        kv("kmax", self.kmax.to_string());
        kv("gmax", self.gmax.to_string());
        kv("alpha0", self.prior.alpha0.to_string());
        kv("beta0", self.prior.beta0.to_string());
        kv("eta", self.prior.eta.to_string());
        kv("zeta", self.prior.zeta.to_string());
        kv("delta", self.prior.delta.to_string());
        kv("gamma", self.prior.gamma.to_string());
        kv("xi", self.prior.xi.to_string());
        kv("kappa", self.prior.kappa.to_string());
        kv("prune", if self.pruning { "on" } else { "off" }.to_string());
        kv("restarts", self.restarts.to_string());
        kv("seed", self.seed.to_string());
        kv("icl", self.icl.to_string());
        kv("k", self.k.to_string());
        kv("g", self.g.to_string());
        kv("best_restart", self.best_restart.to_string());
        kv("sweeps", self.sweeps.to_string());
        kv("moves", self.moves.to_string());
        kv("merges", self.merges.to_string());
        kv("min_accepted_delta", self.min_accepted_delta.to_string());
        kv("hit_max_sweeps", self.hit_max_sweeps.to_string());
        kv("wall_time_ms", self.wall_time_ms.to_string());
        kv("row_labels", join_labels(&self.row_labels));
        kv("col_labels", join_labels(&self.col_labels));
        kv(
            "trace",
            self.trace.iter().map(f64::to_string).collect::<Vec<_>>().join(" "),
        );
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f =
            fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        f.write_all(self.render().as_bytes())
            .map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn parse(text: &str) -> Result<FitReport> {
        Parser::default().parse(text, "<string>")
    }

    pub fn load(path: &Path) -> Result<FitReport> {
        let text =
            fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Parser::default().parse(&text, &path.display().to_string())
    }
}

fn join_labels(labels: &[u32]) -> String {
    labels.iter().map(|&l| (l + 1).to_string()).collect::<Vec<_>>().join(" ")
}

#[derive(Default)]
struct Parser {
    format_version: Option<String>,
    model_name: Option<String>,
    categories: Option<u32>,
    kmax: Option<usize>,
    gmax: Option<usize>,
    alpha0: Option<f64>,
    beta0: Option<f64>,
    eta: Option<f64>,
    zeta: Option<f64>,
    delta: Option<f64>,
    gamma: Option<f64>,
    xi: Option<f64>,
    kappa: Option<f64>,
    pruning: Option<bool>,
    restarts: Option<u32>,
    seed: Option<u64>,
    icl: Option<f64>,
    k: Option<usize>,
    g: Option<usize>,
    best_restart: Option<usize>,
    sweeps: Option<u32>,
    moves: Option<u64>,
    merges: Option<u32>,
    min_accepted_delta: Option<f64>,
    hit_max_sweeps: Option<bool>,
    wall_time_ms: Option<u64>,
    row_labels: Option<Vec<u32>>,
    col_labels: Option<Vec<u32>>,
    trace: Option<Vec<f64>>,
}

impl Parser {
    fn parse(mut self, text: &str, file: &str) -> Result<FitReport> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let bad = |msg: String| Error::parse(file, line, msg);
            if raw.trim().is_empty() {
                continue;
            }
            let (key, value) = raw
                .split_once(' ')
                .ok_or_else(|| bad(format!("expected 'key value', got {raw:?}")))?;
            macro_rules! num {
                () => {
                    value.parse().map_err(|_| bad(format!("bad {key} value {value:?}")))?
                };
            }
            match key {
                "format_version" => self.format_version = Some(value.to_string()),
                "model" => self.model_name = Some(value.to_string()),
                "categories" => self.categories = Some(num!()),
                "kmax" => self.kmax = Some(num!()),
                "gmax" => self.gmax = Some(num!()),
                "alpha0" => self.alpha0 = Some(num!()),
                "beta0" => self.beta0 = Some(num!()),
                "eta" => self.eta = Some(num!()),
                "zeta" => self.zeta = Some(num!()),
                "delta" => self.delta = Some(num!()),
                "gamma" => self.gamma = Some(num!()),
                "xi" => self.xi = Some(num!()),
                "kappa" => self.kappa = Some(num!()),
                "prune" => {
                    self.pruning = Some(match value {
                        "on" => true,
                        "off" => false,
                        _ => return Err(bad(format!("prune must be on or off, got {value:?}"))),
                    })
                }
                "restarts" => self.restarts = Some(num!()),
                "seed" => self.seed = Some(num!()),
                "icl" => self.icl = Some(num!()),
                "k" => self.k = Some(num!()),
                "g" => self.g = Some(num!()),
                "best_restart" => self.best_restart = Some(num!()),
                "sweeps" => self.sweeps = Some(num!()),
                "moves" => self.moves = Some(num!()),
                "merges" => self.merges = Some(num!()),
                "min_accepted_delta" => self.min_accepted_delta = Some(num!()),
                "hit_max_sweeps" => self.hit_max_sweeps = Some(num!()),
                "wall_time_ms" => self.wall_time_ms = Some(num!()),
                "row_labels" => self.row_labels = Some(parse_labels(value, file, line)?),
                "col_labels" => self.col_labels = Some(parse_labels(value, file, line)?),
                "trace" => {
                    let mut vals = Vec::new();
                    for tok in value.split_whitespace() {
                        vals.push(
                            tok.parse()
                                .map_err(|_| bad(format!("bad trace value {tok:?}")))?,
                        );
                    }
                    self.trace = Some(vals);
                }
                _ => return Err(bad(format!("unknown key {key:?}"))),
            }
        }
        self.finish(file)
    }

    fn finish(self, file: &str) -> Result<FitReport> {
        let need = |what: &str| Error::parse(file, 1, format!("missing {what}"));
        let version = self.format_version.ok_or_else(|| need("format_version"))?;
        if version != FORMAT_VERSION {
            return Err(Error::parse(
                file,
                1,
                format!("unsupported format_version {version:?}"),
            ));
        }
        let model = ModelKind::from_name(
            &self.model_name.ok_or_else(|| need("model"))?,
            self.categories,
        )?;
        let report = FitReport {
            format_version: version,
            model,
            kmax: self.kmax.ok_or_else(|| need("kmax"))?,
            gmax: self.gmax.ok_or_else(|| need("gmax"))?,
            prior: PriorConfig {
                alpha0: self.alpha0.ok_or_else(|| need("alpha0"))?,
                beta0: self.beta0.ok_or_else(|| need("beta0"))?,
                eta: self.eta.ok_or_else(|| need("eta"))?,
                zeta: self.zeta.ok_or_else(|| need("zeta"))?,
                delta: self.delta.ok_or_else(|| need("delta"))?,
                gamma: self.gamma.ok_or_else(|| need("gamma"))?,
                xi: self.xi.ok_or_else(|| need("xi"))?,
                kappa: self.kappa.ok_or_else(|| need("kappa"))?,
            },
            pruning: self.pruning.ok_or_else(|| need("prune"))?,
            restarts: self.restarts.ok_or_else(|| need("restarts"))?,
            seed: self.seed.ok_or_else(|| need("seed"))?,
            icl: self.icl.ok_or_else(|| need("icl"))?,
            k: self.k.ok_or_else(|| need("k"))?,
            g: self.g.ok_or_else(|| need("g"))?,
            row_labels: self.row_labels.ok_or_else(|| need("row_labels"))?,
            col_labels: self.col_labels.ok_or_else(|| need("col_labels"))?,
            trace: self.trace.ok_or_else(|| need("trace"))?,
            best_restart: self.best_restart.ok_or_else(|| need("best_restart"))?,
            sweeps: self.sweeps.ok_or_else(|| need("sweeps"))?,
            moves: self.moves.ok_or_else(|| need("moves"))?,
            merges: self.merges.ok_or_else(|| need("merges"))?,
            min_accepted_delta: self
                .min_accepted_delta
                .ok_or_else(|| need("min_accepted_delta"))?,
            hit_max_sweeps: self.hit_max_sweeps.ok_or_else(|| need("hit_max_sweeps"))?,
            wall_time_ms: self.wall_time_ms.ok_or_else(|| need("wall_time_ms"))?,
        };
        check_partition(&report.row_labels, report.k, "row", file)?;
        check_partition(&report.col_labels, report.g, "col", file)?;
        Ok(report)
    }
}

fn parse_labels(value: &str, file: &str, line: usize) -> Result<Vec<u32>> {
    let mut labels = Vec::new();
    for tok in value.split_whitespace() {
        let raw: u32 = tok
            .parse()
            .map_err(|_| Error::parse(file, line, format!("bad label {tok:?}")))?;
        if raw == 0 {
            return Err(Error::parse(file, line, "labels are 1-based".to_string()));
        }
        labels.push(raw - 1);
    }
    Ok(labels)
}

/// Labels must hit every cluster 0..count at least once.
fn check_partition(labels: &[u32], count: usize, what: &str, file: &str) -> Result<()> {
    let mut seen = vec![false; count];
    for &l in labels {
        if l as usize >= count {
            return Err(Error::parse(
                file,
                1,
                format!("{what} label {} exceeds {what} cluster count {count}", l + 1),
            ));
        }
        seen[l as usize] = true;
    }
    if let Some(gap) = seen.iter().position(|&s| !s) {
        return Err(Error::parse(
            file,
            1,
            format!("{what} cluster {} is empty", gap + 1),
        ));
    }
    Ok(())
}

/// One row per recorded sweep or merge pass.
pub fn write_trace_csv(path: &Path, trace: &[TracePoint]) -> Result<()> {
    let mut text = String::from("sweep,icl,moves,k,g\n");
    for p in trace {
        text.push_str(&format!("{},{},{},{},{}\n", p.sweep, p.icl, p.moves, p.k, p.g));
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    f.write_all(text.as_bytes())
        .map_err(|e| Error::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::fit;
    use crate::sim::GeneratorSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_report() -> FitReport {
        let spec = GeneratorSpec::diagonal_bernoulli(12, 10, 2, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (adj, _, _) = spec.generate(&mut rng);
        let cfg = SearchConfig { restarts: 2, seed: 5, ..SearchConfig::default() };
        let res = fit(&adj, &cfg).unwrap();
        FitReport::new(adj.model(), &cfg, 12, 10, &res)
    }

    #[test]
    fn render_parse_is_the_identity() {
        let report = sample_report();
        let parsed = FitReport::parse(&report.render()).unwrap();
        assert_eq!(parsed, report);
        assert_eq!(parsed.icl.to_bits(), report.icl.to_bits());
        for (a, b) in parsed.trace.iter().zip(&report.trace) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn file_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fit.report");
        let report = sample_report();
        report.write(&path).unwrap();
        let loaded = FitReport::load(&path).unwrap();
        assert_eq!(loaded, report);
        // a second write of the parsed document is byte-identical
        assert_eq!(loaded.render(), report.render());
    }

    #[test]
    fn infinity_min_delta_survives_the_round_trip() {
        let mut report = sample_report();
        report.min_accepted_delta = f64::INFINITY;
        let parsed = FitReport::parse(&report.render()).unwrap();
        assert!(parsed.min_accepted_delta.is_infinite());
    }

    #[test]
    fn categorical_model_carries_its_category_count() {
        let mut report = sample_report();
        report.model = ModelKind::Categorical { categories: 7 };
        let parsed = FitReport::parse(&report.render()).unwrap();
        assert_eq!(parsed.model, ModelKind::Categorical { categories: 7 });
    }

    #[test]
    fn parser_rejects_bad_documents() {
        let report = sample_report();
        let text = report.render();

        let unknown = format!("{text}mystery 42\n");
        let err = FitReport::parse(&unknown).unwrap_err().to_string();
        assert!(err.contains("unknown key"), "{err}");

        let missing = text.replace(&format!("seed {}\n", report.seed), "");
        let err = FitReport::parse(&missing).unwrap_err().to_string();
        assert!(err.contains("missing seed"), "{err}");

        let wrong_version = text.replace("format_version 1", "format_version 9");
        let err = FitReport::parse(&wrong_version).unwrap_err().to_string();
        assert!(err.contains("unsupported format_version"), "{err}");

        let zero_label = text.replace(
            &format!("row_labels {}", join_labels(&report.row_labels)),
            "row_labels 0 1 1",
        );
        let err = FitReport::parse(&zero_label).unwrap_err().to_string();
        assert!(err.contains("1-based"), "{err}");
    }

    #[test]
    fn parser_rejects_inconsistent_partitions() {
        let report = sample_report();
        let text = report.render();
        let k_line = format!("\nk {}\n", report.k);
        let bumped = text.replace(&k_line, &format!("\nk {}\n", report.k + 1));
        let err = FitReport::parse(&bumped).unwrap_err().to_string();
        assert!(err.contains("is empty"), "{err}");
    }

    #[test]
    fn trace_csv_layout_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let trace = vec![
            TracePoint { sweep: 0, icl: -10.5, moves: 0, k: 3, g: 2 },
            TracePoint { sweep: 1, icl: -9.25, moves: 4, k: 2, g: 2 },
        ];
        write_trace_csv(&path, &trace).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "sweep,icl,moves,k,g\n0,-10.5,0,3,2\n1,-9.25,4,2,2\n");
    }
}
