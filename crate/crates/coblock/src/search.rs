//! Greedy search over partitions.
//!
//! One run starts from a random partition and alternates shuffled label
//! sweeps over both sides with merge passes until neither finds an
//! improving update. Every accepted update strictly increases the
//! objective, so runs terminate. Restarts differ only in seed; the best
//! final objective wins, ties going to the lowest restart index.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::blocks::BlockStats;
use crate::error::{Error, Result};
use crate::icl::IclState;
use crate::matrix::BipartiteAdjacency;
use crate::model::PriorConfig;
use crate::partition::{Partition, Side};

#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub prior: PriorConfig,
    /// Initial cluster counts; `None` means min(side length, 50).
    pub k_init: Option<usize>,
    pub g_init: Option<usize>,
    /// Permanently drop move candidates this far behind the best.
    pub pruning: bool,
    pub prune_threshold: f64,
    /// Sweeps to run before pruning starts recording.
    pub prune_warmup: u32,
    /// Evaluate through stored nonzeros plus per-block zero counts.
    pub sparse: bool,
    pub max_sweeps: u32,
    pub restarts: u32,
    pub seed: u64,
    pub threads: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            prior: PriorConfig::default(),
            k_init: None,
            g_init: None,
            pruning: false,
            prune_threshold: 150.0,
            prune_warmup: 5,
            sparse: false,
            max_sweeps: 200,
            restarts: 1,
            seed: 0,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    /// Sweep count when the point was recorded; merge passes repeat the
    /// current count.
    pub sweep: u32,
    pub icl: f64,
    /// Accepted updates in this sweep or merge pass.
    pub moves: u32,
    pub k: u32,
    pub g: u32,
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub partition: Partition,
    pub icl: f64,
    pub trace: Vec<TracePoint>,
    pub sweeps: u32,
    pub moves: u64,
    pub merges: u32,
    /// Smallest objective gain among accepted updates; infinite when the
    /// initial partition was already a fixed point.
    pub min_accepted_delta: f64,
    pub hit_max_sweeps: bool,
    pub restarts: u32,
    pub best_restart: usize,
    pub wall_time_ms: u64,
}

impl FitResult {
    pub fn k(&self) -> usize {
        self.partition.k()
    }

    pub fn g(&self) -> usize {
        self.partition.g()
    }
}

/// Per-node forbidden-candidate flags, one side each. Inactive until the
/// warm-up sweeps are done; once a candidate is forbidden for a node it
/// stays forbidden for the rest of the run.
struct PruneTable {
    active: bool,
    rows: Vec<Vec<bool>>,
    cols: Vec<Vec<bool>>,
}

impl PruneTable {
    fn new() -> Self {
        PruneTable { active: false, rows: Vec::new(), cols: Vec::new() }
    }

    fn activate(&mut self, n: usize, m: usize, k: usize, g: usize) {
        self.rows = vec![vec![false; k]; n];
        self.cols = vec![vec![false; g]; m];
        self.active = true;
    }

    fn side(&mut self, side: Side) -> &mut Vec<Vec<bool>> {
        match side {
            Side::Row => &mut self.rows,
            Side::Col => &mut self.cols,
        }
    }

    fn is_forbidden(&self, side: Side, node: usize, cluster: usize) -> bool {
        if !self.active {
            return false;
        }
        match side {
            Side::Row => self.rows[node][cluster],
            Side::Col => self.cols[node][cluster],
        }
    }

    fn forbid(&mut self, side: Side, node: usize, cluster: usize) {
        if self.active {
            self.side(side)[node][cluster] = true;
        }
    }

    fn remove_cluster(&mut self, side: Side, cluster: usize) {
        if self.active {
            for flags in self.side(side).iter_mut() {
                flags.remove(cluster);
            }
        }
    }

    /// A merged cluster stays allowed for a node if either part was.
    fn merge(&mut self, side: Side, dst: usize, src: usize) {
        if self.active {
            for flags in self.side(side).iter_mut() {
                flags[dst] = flags[dst] && flags[src];
                flags.remove(src);
            }
        }
    }
}

struct Run<'a, 'b> {
    state: IclState<'a>,
    cfg: &'b SearchConfig,
    prune: PruneTable,
    rng: ChaCha8Rng,
    order: Vec<usize>,
    candidates: Vec<(usize, f64)>,
    slice_buf: Vec<BlockStats>,
    moves: u64,
    min_delta: f64,
}

struct RestartOutcome {
    partition: Partition,
    icl: f64,
    trace: Vec<TracePoint>,
    sweeps: u32,
    moves: u64,
    merges: u32,
    min_delta: f64,
    hit_max_sweeps: bool,
}

impl Run<'_, '_> {
    /// One shuffled pass over one side. Each node goes to the candidate
    /// with the largest objective gain, scanned in ascending cluster order
    /// with strict improvement, so ties resolve to the lowest index and
    /// staying put beats any non-positive gain.
    fn sweep_side(&mut self, side: Side) -> u32 {
        let len = match side {
            Side::Row => self.state.partition().n(),
            Side::Col => self.state.partition().m(),
        };
        if self.state.partition().clusters(side) < 2 {
            return 0;
        }
        self.order.clear();
        self.order.extend(0..len);
        self.order.shuffle(&mut self.rng);
        let mut moves = 0;
        for idx in 0..len {
            let node = self.order[idx];
            let clusters = self.state.partition().clusters(side);
            if clusters < 2 {
                break;
            }
            let src = self.state.partition().label_of(side, node);
            let mut slice = std::mem::take(&mut self.slice_buf);
            self.state.slice_into(side, node, &mut slice);
            self.candidates.clear();
            {
                let scan = self.state.move_scan(side, node, &slice);
                for l in 0..clusters {
                    if l == src || self.prune.is_forbidden(side, node, l) {
                        continue;
                    }
                    self.candidates.push((l, scan.delta_to(l)));
                }
            }
            let mut best_l = src;
            let mut best_d = 0.0;
            for &(l, d) in &self.candidates {
                if d > best_d {
                    best_d = d;
                    best_l = l;
                }
            }
            if self.prune.active {
                for &(l, d) in &self.candidates {
                    if l != best_l && best_d - d > self.cfg.prune_threshold {
                        self.prune.forbid(side, node, l);
                    }
                }
            }
            if best_l != src {
                let removed = self.state.apply_move(side, node, best_l, &slice);
                if let Some(r) = removed {
                    self.prune.remove_cluster(side, r);
                }
                self.min_delta = self.min_delta.min(best_d);
                moves += 1;
            }
            self.slice_buf = slice;
        }
        self.moves += u64::from(moves);
        moves
    }

    fn sweep(&mut self) -> u32 {
        self.sweep_side(Side::Row) + self.sweep_side(Side::Col)
    }

    /// Repeatedly applies the single best improving merge over both sides
    /// until none remains; returns how many were accepted.
    fn merge_pass(&mut self) -> u32 {
        let mut accepted = 0;
        loop {
            let mut best: Option<(Side, usize, usize, f64)> = None;
            for side in [Side::Row, Side::Col] {
                let c = self.state.partition().clusters(side);
                for a in 0..c {
                    for b in (a + 1)..c {
                        let d = self.state.delta_merge(side, a, b);
                        if d > 0.0 && best.map_or(true, |(.., bd)| d > bd) {
                            best = Some((side, a, b, d));
                        }
                    }
                }
            }
            let Some((side, a, b, d)) = best else { break };
            self.state.apply_merge(side, a, b);
            self.prune.merge(side, a, b);
            self.min_delta = self.min_delta.min(d);
            accepted += 1;
        }
        accepted
    }
}

fn fit_once(
    adj: &BipartiteAdjacency,
    cfg: &SearchConfig,
    k_init: usize,
    g_init: usize,
    seed: u64,
) -> Result<RestartOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let partition = Partition::random(adj.n_rows(), adj.n_cols(), k_init, g_init, &mut rng)?;
    let state = IclState::new(adj, partition, cfg.prior, cfg.sparse)?;
    let mut run = Run {
        state,
        cfg,
        prune: PruneTable::new(),
        rng,
        order: Vec::new(),
        candidates: Vec::new(),
        slice_buf: Vec::new(),
        moves: 0,
        min_delta: f64::INFINITY,
    };
    let mut trace = Vec::new();
    let point = |run: &Run, sweep: u32, moves: u32| TracePoint {
        sweep,
        icl: run.state.icl(),
        moves,
        k: run.state.k() as u32,
        g: run.state.g() as u32,
    };
    trace.push(point(&run, 0, 0));
    let mut sweeps = 0u32;
    let mut merges = 0u32;
    let mut hit_max_sweeps = false;
    loop {
        let mut last_moves = u32::MAX;
        while sweeps < cfg.max_sweeps && last_moves != 0 {
            if cfg.pruning && !run.prune.active && sweeps >= cfg.prune_warmup {
                run.prune.activate(
                    adj.n_rows(),
                    adj.n_cols(),
                    run.state.k(),
                    run.state.g(),
                );
            }
            last_moves = run.sweep();
            sweeps += 1;
            trace.push(point(&run, sweeps, last_moves));
        }
        if last_moves != 0 {
            // the sweep budget ran out while labels were still moving
            hit_max_sweeps = true;
        }
        let accepted = run.merge_pass();
        if accepted == 0 {
            break;
        }
        merges += accepted;
        trace.push(point(&run, sweeps, accepted));
        if sweeps >= cfg.max_sweeps {
            hit_max_sweeps = true;
            break;
        }
    }
    Ok(RestartOutcome {
        icl: run.state.icl(),
        partition: run.state.into_partition(),
        trace,
        sweeps,
        moves: run.moves,
        merges,
        min_delta: run.min_delta,
        hit_max_sweeps,
    })
}

/// Initial cluster counts after clamping the requested caps to the matrix
/// shape (default cap 50 per side).
pub fn resolved_inits(adj: &BipartiteAdjacency, cfg: &SearchConfig) -> (usize, usize) {
    let k_init = cfg.k_init.unwrap_or(50).min(adj.n_rows()).max(1);
    let g_init = cfg.g_init.unwrap_or(50).min(adj.n_cols()).max(1);
    (k_init, g_init)
}

/// Runs `cfg.restarts` greedy searches (seeds `cfg.seed + r`) and returns
/// the best by final objective; the lowest restart index wins exact ties.
/// Results are independent of `cfg.threads`.
pub fn fit(adj: &BipartiteAdjacency, cfg: &SearchConfig) -> Result<FitResult> {
    let start = Instant::now();
    cfg.prior.validate()?;
    if cfg.restarts == 0 {
        return Err(Error::Config("need at least one restart".into()));
    }
    if adj.n_rows() == 0 || adj.n_cols() == 0 {
        return Err(Error::Config("cannot fit an empty matrix".into()));
    }
    let (k_init, g_init) = resolved_inits(adj, cfg);
    let restarts = cfg.restarts as usize;
    let threads = cfg.threads.max(1).min(restarts);

    let mut outcomes: Vec<Option<Result<RestartOutcome>>> = Vec::new();
    if threads == 1 {
        for r in 0..restarts {
            outcomes.push(Some(fit_once(adj, cfg, k_init, g_init, cfg.seed + r as u64)));
        }
    } else {
        let slots = Mutex::new((0..restarts).map(|_| None).collect::<Vec<_>>());
        let next = AtomicUsize::new(0);
        std::thread::scope(|scope| {
            for _ in 0..threads {
                scope.spawn(|| loop {
                    let r = next.fetch_add(1, Ordering::Relaxed);
                    if r >= restarts {
                        break;
                    }
                    let out = fit_once(adj, cfg, k_init, g_init, cfg.seed + r as u64);
                    slots.lock().expect("no poisoned lock")[r] = Some(out);
                });
            }
        });
        outcomes = slots.into_inner().expect("no poisoned lock");
    }

    let mut best: Option<(usize, RestartOutcome)> = None;
    for (r, slot) in outcomes.into_iter().enumerate() {
        let outcome = slot.expect("every restart ran")?;
        if best.as_ref().map_or(true, |(_, b)| outcome.icl > b.icl) {
            best = Some((r, outcome));
        }
    }
    let (best_restart, out) = best.expect("at least one restart");
    Ok(FitResult {
        partition: out.partition,
        icl: out.icl,
        trace: out.trace,
        sweeps: out.sweeps,
        moves: out.moves,
        merges: out.merges,
        min_accepted_delta: out.min_delta,
        hit_max_sweeps: out.hit_max_sweeps,
        restarts: cfg.restarts,
        best_restart,
        wall_time_ms: start.elapsed().as_millis() as u64,
    })
}
