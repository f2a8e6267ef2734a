//! Sampling from the generative model: iid labels per side, then one draw
//! per cell from its block's distribution.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::{Normal, Poisson};

use crate::error::{Error, Result};
use crate::matrix::BipartiteAdjacency;
use crate::model::ModelKind;

/// Per-block cell distributions on a K x G grid.
#[derive(Debug, Clone)]
pub enum CellParams {
    /// theta[k][g] = edge probability.
    Bernoulli { theta: Vec<Vec<f64>> },
    /// probs[k][g][l] = probability of category l.
    Categorical { probs: Vec<Vec<Vec<f64>>> },
    /// rate[k][g] = mean count.
    Poisson { rate: Vec<Vec<f64>> },
    /// mean[k][g], precision[k][g] (inverse variance).
    Gaussian { mean: Vec<Vec<f64>>, precision: Vec<Vec<f64>> },
}

#[derive(Debug, Clone)]
pub struct GeneratorSpec {
    pub n_rows: usize,
    pub n_cols: usize,
    /// Unnormalized cluster weights; lengths fix K and G.
    pub row_weights: Vec<f64>,
    pub col_weights: Vec<f64>,
    pub cells: CellParams,
}

impl GeneratorSpec {
    /// The diagonal benchmark design: K row and K column clusters of equal
    /// weight, edge probability 1 - q on the diagonal blocks and q off it.
    /// q = 0 is a noiseless block-diagonal matrix; q = 1/2 has no structure
    /// at all.
    pub fn diagonal_bernoulli(n_rows: usize, n_cols: usize, k: usize, q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Config(format!("q must lie in [0, 1], got {q}")));
        }
        if k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        let theta: Vec<Vec<f64>> = (0..k)
            .map(|a| (0..k).map(|b| if a == b { 1.0 - q } else { q }).collect())
            .collect();
        Self::bernoulli_grid(n_rows, n_cols, theta)
    }

    /// Bernoulli generation from an explicit K x G probability grid with
    /// uniform label weights.
    pub fn bernoulli_grid(n_rows: usize, n_cols: usize, theta: Vec<Vec<f64>>) -> Result<Self> {
        let spec = GeneratorSpec {
            n_rows,
            n_cols,
            row_weights: vec![1.0; theta.len()],
            col_weights: vec![1.0; theta.first().map_or(0, Vec::len)],
            cells: CellParams::Bernoulli { theta },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn k(&self) -> usize {
        self.row_weights.len()
    }

    pub fn g(&self) -> usize {
        self.col_weights.len()
    }

    pub fn model(&self) -> ModelKind {
        match &self.cells {
            CellParams::Bernoulli { .. } => ModelKind::Bernoulli,
            CellParams::Categorical { probs } => ModelKind::Categorical {
                categories: probs[0][0].len() as u32,
            },
            CellParams::Poisson { .. } => ModelKind::Poisson,
            CellParams::Gaussian { .. } => ModelKind::Gaussian,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (k, g) = (self.k(), self.g());
        if self.n_rows == 0 || self.n_cols == 0 {
            return Err(Error::Config("matrix dimensions must be positive".into()));
        }
        if k == 0 || g == 0 {
            return Err(Error::Config("cluster weights must be non-empty".into()));
        }
        if self.row_weights.iter().any(|&w| !(w > 0.0))
            || self.col_weights.iter().any(|&w| !(w > 0.0))
        {
            return Err(Error::Config("cluster weights must be positive".into()));
        }
        let check_grid = |grid: &Vec<Vec<f64>>, what: &str, lo: f64, hi: f64| -> Result<()> {
            if grid.len() != k || grid.iter().any(|r| r.len() != g) {
                return Err(Error::Config(format!("{what} grid must be {k}x{g}")));
            }
            if grid.iter().flatten().any(|&v| !(lo..=hi).contains(&v)) {
                return Err(Error::Config(format!(
                    "{what} values must lie in [{lo}, {hi}]"
                )));
            }
            Ok(())
        };
        match &self.cells {
            CellParams::Bernoulli { theta } => check_grid(theta, "theta", 0.0, 1.0)?,
            CellParams::Categorical { probs } => {
                if probs.len() != k || probs.iter().any(|r| r.len() != g) {
                    return Err(Error::Config(format!("probability grid must be {k}x{g}")));
                }
                let c = probs[0][0].len();
                if c < 2 {
                    return Err(Error::Config("need at least 2 categories".into()));
                }
                for cell in probs.iter().flatten() {
                    if cell.len() != c {
                        return Err(Error::Config(
                            "all cells must have the same number of categories".into(),
                        ));
                    }
                    let s: f64 = cell.iter().sum();
                    if cell.iter().any(|&p| p < 0.0) || (s - 1.0).abs() > 1e-9 {
                        return Err(Error::Config(
                            "category probabilities must be non-negative and sum to 1".into(),
                        ));
                    }
                }
            }
            CellParams::Poisson { rate } => check_grid(rate, "rate", 0.0, f64::INFINITY)?,
            CellParams::Gaussian { mean, precision } => {
                check_grid(mean, "mean", f64::NEG_INFINITY, f64::INFINITY)?;
                check_grid(precision, "precision", f64::MIN_POSITIVE, f64::INFINITY)?;
            }
        }
        Ok(())
    }

    /// Draws labels and cells; returns the matrix plus the true labels
    /// (0-based, possibly with empty clusters for small n).
    pub fn generate(&self, rng: &mut impl Rng) -> (BipartiteAdjacency, Vec<u32>, Vec<u32>) {
        let rows = sample_labels(&self.row_weights, self.n_rows, rng);
        let cols = sample_labels(&self.col_weights, self.n_cols, rng);
        let mut values = vec![0.0; self.n_rows * self.n_cols];
        for i in 0..self.n_rows {
            let a = rows[i] as usize;
            for j in 0..self.n_cols {
                let b = cols[j] as usize;
                values[i * self.n_cols + j] = match &self.cells {
                    CellParams::Bernoulli { theta } => {
                        if rng.random_bool(theta[a][b]) {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    CellParams::Categorical { probs } => {
                        let w = WeightedIndex::new(&probs[a][b]).expect("validated weights");
                        w.sample(rng) as f64
                    }
                    CellParams::Poisson { rate } => {
                        if rate[a][b] == 0.0 {
                            0.0
                        } else {
                            Poisson::new(rate[a][b]).expect("validated rate").sample(rng)
                        }
                    }
                    CellParams::Gaussian { mean, precision } => {
                        let sd = precision[a][b].sqrt().recip();
                        Normal::new(mean[a][b], sd).expect("validated params").sample(rng)
                    }
                };
            }
        }
        let adj = BipartiteAdjacency::from_dense(self.n_rows, self.n_cols, values, self.model())
            .expect("generated values satisfy the model domain");
        (adj, rows, cols)
    }
}

fn sample_labels(weights: &[f64], n: usize, rng: &mut impl Rng) -> Vec<u32> {
    let dist = WeightedIndex::new(weights).expect("validated weights");
    (0..n).map(|_| dist.sample(rng) as u32).collect()
}

/// Writes true labels as two lines of 1-based integers: rows, then columns.
pub fn write_truth(path: &Path, row_labels: &[u32], col_labels: &[u32]) -> Result<()> {
    let mut out = String::new();
    for (line, labels) in [row_labels, col_labels].into_iter().enumerate() {
        if line > 0 {
            out.push('\n');
        }
        for (i, &l) in labels.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&(l + 1).to_string());
        }
    }
    out.push('\n');
    let mut f = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

/// Reads the two-line truth sidecar back into 0-based labels.
pub fn load_truth(path: &Path) -> Result<(Vec<u32>, Vec<u32>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut sides = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut labels = Vec::new();
        for tok in line.split_whitespace() {
            let raw: u32 = tok.parse().map_err(|_| {
                Error::parse(path.display().to_string(), idx + 1, format!("bad label {tok:?}"))
            })?;
            if raw == 0 {
                return Err(Error::parse(path.display().to_string(), idx + 1, "labels are 1-based".to_string()));
            }
            labels.push(raw - 1);
        }
        sides.push(labels);
    }
    if sides.len() != 2 {
        return Err(Error::parse(
            path.display().to_string(),
            1,
            format!("expected 2 label lines, found {}", sides.len()),
        ));
    }
    let cols = sides.pop().expect("length checked");
    let rows = sides.pop().expect("length checked");
    Ok((rows, cols))
}
