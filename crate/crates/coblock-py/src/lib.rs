//! Python bindings: load or simulate a matrix, fit it, score the labels.
//!
//! Labels are 0-based on this side of the boundary, matching the in-memory
//! convention of the core crate; the text report format stays 1-based.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use coblock::sim::GeneratorSpec;
use coblock::{BipartiteAdjacency, Error, ModelKind, PriorConfig, SearchConfig};

fn to_py(err: Error) -> PyErr {
    match err {
        Error::Io { .. } => PyIOError::new_err(err.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn resolve_model(model: &str, categories: Option<u32>) -> PyResult<ModelKind> {
    ModelKind::from_name(model, categories).map_err(to_py)
}

/// A bipartite data matrix with a fixed observation model.
#[pyclass(frozen)]
struct Adjacency {
    inner: BipartiteAdjacency,
}

#[pymethods]
impl Adjacency {
    /// Build from a rectangular list of row lists.
    #[staticmethod]
    #[pyo3(signature = (values, model, categories=None))]
    fn from_dense(values: Vec<Vec<f64>>, model: &str, categories: Option<u32>) -> PyResult<Self> {
        let kind = resolve_model(model, categories)?;
        let n = values.len();
        let m = values.first().map_or(0, Vec::len);
        if values.iter().any(|row| row.len() != m) {
            return Err(PyValueError::new_err("rows have unequal lengths"));
        }
        let flat: Vec<f64> = values.into_iter().flatten().collect();
        let inner = BipartiteAdjacency::from_dense(n, m, flat, kind).map_err(to_py)?;
        Ok(Adjacency { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (path, model, categories=None))]
    fn load_dense(path: &str, model: &str, categories: Option<u32>) -> PyResult<Self> {
        let kind = resolve_model(model, categories)?;
        let inner = BipartiteAdjacency::load_dense(path, kind).map_err(to_py)?;
        Ok(Adjacency { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (path, model, categories=None))]
    fn load_sparse(path: &str, model: &str, categories: Option<u32>) -> PyResult<Self> {
        let kind = resolve_model(model, categories)?;
        let inner = BipartiteAdjacency::load_sparse(path, kind).map_err(to_py)?;
        Ok(Adjacency { inner })
    }

    fn shape(&self) -> (usize, usize) {
        (self.inner.n_rows(), self.inner.n_cols())
    }

    fn nnz(&self) -> usize {
        self.inner.nnz()
    }

    fn model(&self) -> &'static str {
        self.inner.model().name()
    }

    fn get(&self, i: usize, j: usize) -> PyResult<f64> {
        if i >= self.inner.n_rows() || j >= self.inner.n_cols() {
            return Err(PyValueError::new_err(format!(
                "index ({i},{j}) outside {}x{}",
                self.inner.n_rows(),
                self.inner.n_cols()
            )));
        }
        Ok(self.inner.get(i, j))
    }

    fn to_dense(&self) -> Vec<Vec<f64>> {
        let (n, m) = (self.inner.n_rows(), self.inner.n_cols());
        let mut out = vec![vec![0.0; m]; n];
        for (i, row) in out.iter_mut().enumerate() {
            self.inner.for_each_nonzero_in_row(i, |j, v| row[j] = v);
        }
        out
    }

    fn __repr__(&self) -> String {
        format!(
            "Adjacency({}x{}, {}, {} stored values)",
            self.inner.n_rows(),
            self.inner.n_cols(),
            self.inner.model().name(),
            self.inner.nnz()
        )
    }
}

/// Result of one fit: labels, objective value, and search diagnostics.
#[pyclass(frozen)]
struct FitOutcome {
    #[pyo3(get)]
    icl: f64,
    #[pyo3(get)]
    k: usize,
    #[pyo3(get)]
    g: usize,
    #[pyo3(get)]
    row_labels: Vec<u32>,
    #[pyo3(get)]
    col_labels: Vec<u32>,
    #[pyo3(get)]
    trace: Vec<f64>,
    #[pyo3(get)]
    sweeps: u32,
    #[pyo3(get)]
    moves: u64,
    #[pyo3(get)]
    merges: u32,
    #[pyo3(get)]
    min_accepted_delta: f64,
    #[pyo3(get)]
    hit_max_sweeps: bool,
    #[pyo3(get)]
    best_restart: usize,
    #[pyo3(get)]
    wall_time_ms: u64,
}

#[pymethods]
impl FitOutcome {
    fn __repr__(&self) -> String {
        format!(
            "FitOutcome(icl={}, k={}, g={}, sweeps={}, moves={})",
            self.icl, self.k, self.g, self.sweeps, self.moves
        )
    }
}

/// Greedily search for the label pair maximizing the integrated likelihood.
#[pyfunction]
#[pyo3(signature = (
    adjacency, *, kmax=None, gmax=None, restarts=1, seed=0, pruning=false,
    sparse=false, threads=1, alpha0=1.0, beta0=1.0, eta=1.0, zeta=1.0,
    delta=1.0, gamma=1.0, xi=0.0, kappa=1.0
))]
#[allow(clippy::too_many_arguments)]
fn fit(
    adjacency: &Adjacency,
    kmax: Option<usize>,
    gmax: Option<usize>,
    restarts: u32,
    seed: u64,
    pruning: bool,
    sparse: bool,
    threads: usize,
    alpha0: f64,
    beta0: f64,
    eta: f64,
    zeta: f64,
    delta: f64,
    gamma: f64,
    xi: f64,
    kappa: f64,
) -> PyResult<FitOutcome> {
    let prior = PriorConfig { alpha0, beta0, eta, zeta, delta, gamma, xi, kappa };
    let cfg = SearchConfig {
        prior,
        k_init: kmax,
        g_init: gmax,
        pruning,
        sparse,
        restarts,
        seed,
        threads,
        ..SearchConfig::default()
    };
    let result = coblock::fit(&adjacency.inner, &cfg).map_err(to_py)?;
    Ok(FitOutcome {
        icl: result.icl,
        k: result.k(),
        g: result.g(),
        row_labels: result.partition.row_labels().to_vec(),
        col_labels: result.partition.col_labels().to_vec(),
        trace: result.trace.iter().map(|p| p.icl).collect(),
        sweeps: result.sweeps,
        moves: result.moves,
        merges: result.merges,
        min_accepted_delta: result.min_accepted_delta,
        hit_max_sweeps: result.hit_max_sweeps,
        best_restart: result.best_restart,
        wall_time_ms: result.wall_time_ms,
    })
}

/// Draw a 0/1 matrix with k planted clusters per side: diagonal blocks have
/// edge probability 1-q, all others q. Returns (matrix, row_labels, col_labels).
#[pyfunction]
#[pyo3(signature = (n, m, k, q, seed=0))]
fn simulate_diagonal(
    n: usize,
    m: usize,
    k: usize,
    q: f64,
    seed: u64,
) -> PyResult<(Adjacency, Vec<u32>, Vec<u32>)> {
    let spec = GeneratorSpec::diagonal_bernoulli(n, m, k, q).map_err(to_py)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (inner, rows, cols) = spec.generate(&mut rng);
    Ok((Adjacency { inner }, rows, cols))
}

/// Mutual information between two labelings, normalized by the larger entropy.
#[pyfunction]
fn nmi(a: Vec<u32>, b: Vec<u32>) -> PyResult<f64> {
    if a.len() != b.len() {
        return Err(PyValueError::new_err(format!(
            "label length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(coblock::nmi(&a, &b))
}

/// Row NMI plus column NMI; 2 means both sides match exactly.
#[pyfunction]
fn combined_nmi(
    rows_a: Vec<u32>,
    rows_b: Vec<u32>,
    cols_a: Vec<u32>,
    cols_b: Vec<u32>,
) -> PyResult<f64> {
    if rows_a.len() != rows_b.len() || cols_a.len() != cols_b.len() {
        return Err(PyValueError::new_err("label length mismatch"));
    }
    Ok(coblock::combined_nmi(&rows_a, &rows_b, &cols_a, &cols_b))
}

#[pymodule]
fn coblock_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Adjacency>()?;
    m.add_class::<FitOutcome>()?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_diagonal, m)?)?;
    m.add_function(wrap_pyfunction!(nmi, m)?)?;
    m.add_function(wrap_pyfunction!(combined_nmi, m)?)?;
    Ok(())
}
