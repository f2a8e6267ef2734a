//! Recovery benchmark on the diagonal design: generate, fit, score, over a
//! grid of noise levels with replicated draws.

use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metrics::combined_nmi;
use crate::search::{fit, FitResult, SearchConfig};
use crate::sim::GeneratorSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudyPoint {
    pub q: f64,
    pub rep: u32,
    pub nmi: f64,
    pub icl: f64,
    pub k: u32,
    pub g: u32,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub n_rows: usize,
    pub n_cols: usize,
    pub k_true: usize,
    pub q_grid: Vec<f64>,
    pub reps: u32,
    pub restarts: u32,
    pub kmax: usize,
    pub gmax: usize,
    pub seed: u64,
    /// Worker threads over (q, rep) cells; does not change results.
    pub threads: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            n_rows: 100,
            n_cols: 100,
            k_true: 5,
            q_grid: default_q_grid(),
            reps: 20,
            restarts: 5,
            kmax: 10,
            gmax: 10,
            seed: 0,
            threads: 1,
        }
    }
}

/// Noise grid 0.0125, 0.025, ..., 0.5.
pub fn default_q_grid() -> Vec<f64> {
    (1..=40).map(|i| f64::from(i) * 0.0125).collect()
}

/// One generate-fit-score cell. Data and search seeds are separated so the
/// search never sees the stream that drew the true labels. The full fit
/// result rides along for callers auditing traces.
pub fn run_cell(cfg: &StudyConfig, qi: usize, rep: u32) -> Result<(StudyPoint, FitResult)> {
    let q = cfg.q_grid[qi];
    let cell_seed = cfg.seed + 10_000 * (qi as u64 * u64::from(cfg.reps) + u64::from(rep));
    let spec = GeneratorSpec::diagonal_bernoulli(cfg.n_rows, cfg.n_cols, cfg.k_true, q)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cell_seed);
    let (adj, rows, cols) = spec.generate(&mut rng);
    let search = SearchConfig {
        k_init: Some(cfg.kmax),
        g_init: Some(cfg.gmax),
        restarts: cfg.restarts,
        seed: cell_seed + 5_000,
        ..SearchConfig::default()
    };
    let started = Instant::now();
    let res = fit(&adj, &search)?;
    let seconds = started.elapsed().as_secs_f64();
    let nmi = combined_nmi(
        res.partition.row_labels(),
        &rows,
        res.partition.col_labels(),
        &cols,
    );
    let point = StudyPoint {
        q,
        rep,
        nmi,
        icl: res.icl,
        k: res.k() as u32,
        g: res.g() as u32,
        seconds,
    };
    Ok((point, res))
}

/// Runs the full grid; output is ordered by (q index, replicate) no matter
/// how many worker threads are used.
pub fn run_study(cfg: &StudyConfig) -> Result<Vec<StudyPoint>> {
    if cfg.q_grid.is_empty() || cfg.reps == 0 {
        return Err(Error::Config("empty study grid".into()));
    }
    let cells: Vec<(usize, u32)> = (0..cfg.q_grid.len())
        .flat_map(|qi| (0..cfg.reps).map(move |rep| (qi, rep)))
        .collect();
    let threads = cfg.threads.max(1).min(cells.len());
    if threads == 1 {
        return cells
            .iter()
            .map(|&(qi, rep)| run_cell(cfg, qi, rep).map(|(point, _)| point))
            .collect();
    }
    let slots: Mutex<Vec<Option<Result<StudyPoint>>>> =
        Mutex::new((0..cells.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= cells.len() {
                    break;
                }
                let (qi, rep) = cells[i];
                let point = run_cell(cfg, qi, rep).map(|(point, _)| point);
                slots.lock().expect("no poisoned lock")[i] = Some(point);
            });
        }
    });
    slots
        .into_inner()
        .expect("no poisoned lock")
        .into_iter()
        .map(|slot| slot.expect("every cell ran"))
        .collect()
}

/// Mean score per grid value, in grid order.
pub fn mean_nmi_by_q(points: &[StudyPoint]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64, u32)> = Vec::new();
    for p in points {
        match out.iter_mut().find(|(q, _, _)| *q == p.q) {
            Some((_, sum, count)) => {
                *sum += p.nmi;
                *count += 1;
            }
            None => out.push((p.q, p.nmi, 1)),
        }
    }
    out.into_iter().map(|(q, sum, count)| (q, sum / f64::from(count))).collect()
}

pub fn write_study_csv(path: &Path, points: &[StudyPoint]) -> Result<()> {
    let mut text = String::from("q,rep,nmi,icl,k,g,seconds\n");
    for p in points {
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            p.q, p.rep, p.nmi, p.icl, p.k, p.g, p.seconds
        ));
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    f.write_all(text.as_bytes())
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> StudyConfig {
        StudyConfig {
            n_rows: 40,
            n_cols: 40,
            k_true: 3,
            q_grid: vec![0.05, 0.5],
            reps: 2,
            restarts: 2,
            kmax: 6,
            gmax: 6,
            seed: 11,
            threads: 1,
        }
    }

    #[test]
    fn structure_is_recovered_at_low_noise_and_lost_at_coin_flips() {
        let points = run_study(&tiny_config()).unwrap();
        assert_eq!(points.len(), 4);
        let means = mean_nmi_by_q(&points);
        assert_eq!(means.len(), 2);
        assert!(means[0].1 > 1.5, "low-noise mean NMI = {}", means[0].1);
        assert!(means[1].1 < 0.5, "no-structure mean NMI = {}", means[1].1);
        for p in &points {
            assert!(p.seconds >= 0.0);
            assert!(p.k >= 1 && p.g >= 1);
        }
    }

    #[test]
    fn study_points_are_deterministic_and_thread_independent() {
        let cfg = tiny_config();
        let a = run_study(&cfg).unwrap();
        let b = run_study(&StudyConfig { threads: 4, ..cfg }).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.icl.to_bits(), y.icl.to_bits());
            assert_eq!(x.nmi.to_bits(), y.nmi.to_bits());
            assert_eq!((x.q, x.rep, x.k, x.g), (y.q, y.rep, y.k, y.g));
        }
    }

    #[test]
    fn csv_layout_is_stable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("study.csv");
        let points = vec![StudyPoint {
            q: 0.0125,
            rep: 3,
            nmi: 1.75,
            icl: -1234.5,
            k: 5,
            g: 4,
            seconds: 0.25,
        }];
        write_study_csv(&path, &points).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "q,rep,nmi,icl,k,g,seconds\n0.0125,3,1.75,-1234.5,5,4,0.25\n");
    }

    #[test]
    fn empty_grid_is_rejected() {
        let cfg = StudyConfig { q_grid: vec![], ..tiny_config() };
        assert!(run_study(&cfg).is_err());
    }
}
