//! Bipartite adjacency storage.
//!
//! Two backings share one iteration contract: `for_each_in_row`/`col` visit
//! every cell in ascending index order (the dense scan), while
//! `for_each_nonzero_in_row`/`col` visit stored entries only (the sparse
//! scan). On integer models both scans feed the same accumulation order, so
//! block statistics come out bit-identical regardless of backing.

use std::borrow::Cow;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::ModelKind;

#[derive(Debug, Clone)]
enum Storage {
    /// Row-major `n_rows * n_cols` values.
    Dense(Vec<f64>),
    Sparse(SparseData),
}

#[derive(Debug, Clone)]
struct SparseData {
    row_ptr: Vec<usize>,
    csr_cols: Vec<u32>,
    csr_vals: Vec<f64>,
    col_ptr: Vec<usize>,
    csc_rows: Vec<u32>,
    csc_vals: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BipartiteAdjacency {
    n_rows: usize,
    n_cols: usize,
    model: ModelKind,
    storage: Storage,
}

impl BipartiteAdjacency {
    pub fn from_dense(
        n_rows: usize,
        n_cols: usize,
        values: Vec<f64>,
        model: ModelKind,
    ) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::Config("matrix must have at least one row and column".into()));
        }
        if values.len() != n_rows * n_cols {
            return Err(Error::Config(format!(
                "expected {} values for a {}x{} matrix, got {}",
                n_rows * n_cols,
                n_rows,
                n_cols,
                values.len()
            )));
        }
        if n_rows > u32::MAX as usize || n_cols > u32::MAX as usize {
            return Err(Error::Config("matrix dimensions exceed u32 range".into()));
        }
        for (idx, &v) in values.iter().enumerate() {
            model.check_cell(v, idx / n_cols + 1, idx % n_cols + 1)?;
        }
        Ok(BipartiteAdjacency { n_rows, n_cols, model, storage: Storage::Dense(values) })
    }

    /// Triplets are 0-based `(row, col, value)`. Explicit zeros are rejected:
    /// absent cells already mean zero, and a stored zero would make the two
    /// scan contracts disagree.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
        model: ModelKind,
    ) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::Config("matrix must have at least one row and column".into()));
        }
        if n_rows > u32::MAX as usize || n_cols > u32::MAX as usize {
            return Err(Error::Config("matrix dimensions exceed u32 range".into()));
        }
        let mut entries: Vec<(u32, u32, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= n_rows || j >= n_cols {
                return Err(Error::Config(format!(
                    "entry ({},{}) outside a {}x{} matrix",
                    i + 1,
                    j + 1,
                    n_rows,
                    n_cols
                )));
            }
            if v == 0.0 {
                return Err(Error::Config(format!(
                    "explicit zero at ({},{}); zeros must be implicit",
                    i + 1,
                    j + 1
                )));
            }
            model.check_cell(v, i + 1, j + 1)?;
            entries.push((i as u32, j as u32, v));
        }
        entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(Error::Config(format!(
                    "duplicate entry at ({},{})",
                    w[0].0 + 1,
                    w[0].1 + 1
                )));
            }
        }
        Ok(BipartiteAdjacency {
            n_rows,
            n_cols,
            model,
            storage: Storage::Sparse(SparseData::build(n_rows, n_cols, &entries)),
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.storage, Storage::Sparse(_))
    }

    /// Stored nonzero count (all cells scanned for a dense backing).
    pub fn nnz(&self) -> usize {
        match &self.storage {
            Storage::Dense(v) => v.iter().filter(|&&x| x != 0.0).count(),
            Storage::Sparse(s) => s.csr_vals.len(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.n_rows && j < self.n_cols, "cell ({i},{j}) out of range");
        match &self.storage {
            Storage::Dense(v) => v[i * self.n_cols + j],
            Storage::Sparse(s) => {
                let lo = s.row_ptr[i];
                let hi = s.row_ptr[i + 1];
                match s.csr_cols[lo..hi].binary_search(&(j as u32)) {
                    Ok(p) => s.csr_vals[lo + p],
                    Err(_) => 0.0,
                }
            }
        }
    }

    /// Visits every cell of row `i` in ascending column order.
    pub fn for_each_in_row(&self, i: usize, mut f: impl FnMut(usize, f64)) {
        match &self.storage {
            Storage::Dense(v) => {
                let base = i * self.n_cols;
                for j in 0..self.n_cols {
                    f(j, v[base + j]);
                }
            }
            Storage::Sparse(s) => {
                let mut next = 0usize;
                for p in s.row_ptr[i]..s.row_ptr[i + 1] {
                    let j = s.csr_cols[p] as usize;
                    while next < j {
                        f(next, 0.0);
                        next += 1;
                    }
                    f(j, s.csr_vals[p]);
                    next = j + 1;
                }
                while next < self.n_cols {
                    f(next, 0.0);
                    next += 1;
                }
            }
        }
    }

    /// Visits every cell of column `j` in ascending row order.
    pub fn for_each_in_col(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        match &self.storage {
            Storage::Dense(v) => {
                for i in 0..self.n_rows {
                    f(i, v[i * self.n_cols + j]);
                }
            }
            Storage::Sparse(s) => {
                let mut next = 0usize;
                for p in s.col_ptr[j]..s.col_ptr[j + 1] {
                    let i = s.csc_rows[p] as usize;
                    while next < i {
                        f(next, 0.0);
                        next += 1;
                    }
                    f(i, s.csc_vals[p]);
                    next = i + 1;
                }
                while next < self.n_rows {
                    f(next, 0.0);
                    next += 1;
                }
            }
        }
    }

    /// Visits stored nonzeros of row `i` in ascending column order. On a
    /// dense backing this still scans all cells; callers wanting the O(nnz)
    /// path should convert with [`to_sparse`](Self::to_sparse) first.
    pub fn for_each_nonzero_in_row(&self, i: usize, mut f: impl FnMut(usize, f64)) {
        match &self.storage {
            Storage::Dense(v) => {
                let base = i * self.n_cols;
                for j in 0..self.n_cols {
                    let x = v[base + j];
                    if x != 0.0 {
                        f(j, x);
                    }
                }
            }
            Storage::Sparse(s) => {
                for p in s.row_ptr[i]..s.row_ptr[i + 1] {
                    f(s.csr_cols[p] as usize, s.csr_vals[p]);
                }
            }
        }
    }

    pub fn for_each_nonzero_in_col(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        match &self.storage {
            Storage::Dense(v) => {
                for i in 0..self.n_rows {
                    let x = v[i * self.n_cols + j];
                    if x != 0.0 {
                        f(i, x);
                    }
                }
            }
            Storage::Sparse(s) => {
                for p in s.col_ptr[j]..s.col_ptr[j + 1] {
                    f(s.csc_rows[p] as usize, s.csc_vals[p]);
                }
            }
        }
    }

    pub fn to_dense(&self) -> BipartiteAdjacency {
        match &self.storage {
            Storage::Dense(_) => self.clone(),
            Storage::Sparse(s) => {
                let mut values = vec![0.0; self.n_rows * self.n_cols];
                for i in 0..self.n_rows {
                    for p in s.row_ptr[i]..s.row_ptr[i + 1] {
                        values[i * self.n_cols + s.csr_cols[p] as usize] = s.csr_vals[p];
                    }
                }
                BipartiteAdjacency {
                    n_rows: self.n_rows,
                    n_cols: self.n_cols,
                    model: self.model,
                    storage: Storage::Dense(values),
                }
            }
        }
    }

    pub fn to_sparse(&self) -> BipartiteAdjacency {
        match &self.storage {
            Storage::Sparse(_) => self.clone(),
            Storage::Dense(v) => {
                let mut entries = Vec::new();
                for i in 0..self.n_rows {
                    for j in 0..self.n_cols {
                        let x = v[i * self.n_cols + j];
                        if x != 0.0 {
                            entries.push((i as u32, j as u32, x));
                        }
                    }
                }
                BipartiteAdjacency {
                    n_rows: self.n_rows,
                    n_cols: self.n_cols,
                    model: self.model,
                    storage: Storage::Sparse(SparseData::build(self.n_rows, self.n_cols, &entries)),
                }
            }
        }
    }

    /// Borrow as-is when the backing already matches, convert otherwise.
    pub fn with_sparse_backing(&self) -> Cow<'_, BipartiteAdjacency> {
        if self.is_sparse() {
            Cow::Borrowed(self)
        } else {
            Cow::Owned(self.to_sparse())
        }
    }

    pub fn load_dense(path: impl AsRef<Path>, model: ModelKind) -> Result<Self> {
        let path = path.as_ref();
        let name = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|e| Error::io(&name, e))?;
        Self::parse_dense(&text, &name, model)
    }

    /// Comma-separated numeric rows; a non-numeric first line is treated as
    /// a header and skipped.
    pub fn parse_dense(text: &str, file: &str, model: ModelKind) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut width = None;
        let mut first_data_line = true;
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            if line.trim().is_empty() {
                continue;
            }
            let cells: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .collect();
            let parsed: std::result::Result<Vec<f64>, _> =
                cells.iter().map(|c| c.parse::<f64>()).collect();
            let parsed = match parsed {
                Ok(p) => p,
                Err(_) if first_data_line => {
                    first_data_line = false;
                    continue; // header
                }
                Err(_) => {
                    let bad = cells
                        .iter()
                        .find(|c| c.parse::<f64>().is_err())
                        .copied()
                        .unwrap_or_default();
                    return Err(Error::parse(file, lineno, format!("unparseable value '{bad}'")));
                }
            };
            first_data_line = false;
            match width {
                None => width = Some(parsed.len()),
                Some(w) if w != parsed.len() => {
                    return Err(Error::parse(
                        file,
                        lineno,
                        format!("row has {} values, expected {}", parsed.len(), w),
                    ));
                }
                _ => {}
            }
            for (j, &v) in parsed.iter().enumerate() {
                model
                    .check_cell(v, rows.len() + 1, j + 1)
                    .map_err(|e| Error::parse(file, lineno, e.to_string()))?;
            }
            rows.push(parsed);
        }
        let n_cols = width.ok_or_else(|| Error::parse(file, 1, "no data rows"))?;
        let n_rows = rows.len();
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        Self::from_dense(n_rows, n_cols, values, model)
    }

    pub fn load_sparse(path: impl AsRef<Path>, model: ModelKind) -> Result<Self> {
        let path = path.as_ref();
        let name = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|e| Error::io(&name, e))?;
        Self::parse_sparse(&text, &name, model)
    }

    /// Triplet format: `N M nnz` header, then exactly `nnz` lines `i j v`
    /// with 1-based indices. Lines starting with `%` (MatrixMarket banners
    /// and comments) are skipped.
    pub fn parse_sparse(text: &str, file: &str, model: ModelKind) -> Result<Self> {
        let mut header: Option<(usize, usize, usize)> = None;
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        let mut lines_by_entry: Vec<usize> = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('%') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match header {
                None => {
                    if fields.len() != 3 {
                        return Err(Error::parse(
                            file,
                            lineno,
                            "expected header 'N M nnz'".to_string(),
                        ));
                    }
                    let dims: std::result::Result<Vec<usize>, _> =
                        fields.iter().map(|f| f.parse::<usize>()).collect();
                    let dims = dims.map_err(|_| {
                        Error::parse(file, lineno, "expected header 'N M nnz'".to_string())
                    })?;
                    header = Some((dims[0], dims[1], dims[2]));
                }
                Some((n, m, nnz)) => {
                    if entries.len() == nnz {
                        return Err(Error::parse(
                            file,
                            lineno,
                            format!("more than the declared {nnz} entries"),
                        ));
                    }
                    if fields.len() != 3 {
                        return Err(Error::parse(file, lineno, "expected 'i j v'".to_string()));
                    }
                    let i: usize = fields[0].parse().map_err(|_| {
                        Error::parse(file, lineno, format!("bad row index '{}'", fields[0]))
                    })?;
                    let j: usize = fields[1].parse().map_err(|_| {
                        Error::parse(file, lineno, format!("bad column index '{}'", fields[1]))
                    })?;
                    let v: f64 = fields[2].parse().map_err(|_| {
                        Error::parse(file, lineno, format!("bad value '{}'", fields[2]))
                    })?;
                    if i == 0 || i > n || j == 0 || j > m {
                        return Err(Error::parse(
                            file,
                            lineno,
                            format!("index ({i},{j}) outside 1..{n} x 1..{m}"),
                        ));
                    }
                    if v == 0.0 {
                        return Err(Error::parse(
                            file,
                            lineno,
                            format!("explicit zero at ({i},{j}); zeros must be implicit"),
                        ));
                    }
                    entries.push((i - 1, j - 1, v));
                    lines_by_entry.push(lineno);
                }
            }
        }
        let (n, m, nnz) =
            header.ok_or_else(|| Error::parse(file, 1, "missing 'N M nnz' header"))?;
        if entries.len() != nnz {
            return Err(Error::parse(
                file,
                text.lines().count(),
                format!("declared {} entries, found {}", nnz, entries.len()),
            ));
        }
        for (pos, &(i, j, v)) in entries.iter().enumerate() {
            model.check_cell(v, i + 1, j + 1).map_err(|e| {
                Error::parse(file, lines_by_entry[pos], e.to_string())
            })?;
        }
        Self::from_triplets(n, m, &entries, model).map_err(|e| match e {
            Error::Config(msg) => Error::parse(file, 1, msg),
            other => other,
        })
    }

    pub fn write_dense(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for i in 0..self.n_rows {
            let mut first = true;
            self.for_each_in_row(i, |_, v| {
                if !first {
                    out.push(',');
                }
                let _ = write!(out, "{v}");
                first = false;
            });
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
    }

    pub fn write_sparse(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut body = String::new();
        let mut nnz = 0usize;
        for i in 0..self.n_rows {
            self.for_each_nonzero_in_row(i, |j, v| {
                let _ = writeln!(body, "{} {} {v}", i + 1, j + 1);
                nnz += 1;
            });
        }
        let out = format!("{} {} {nnz}\n{body}", self.n_rows, self.n_cols);
        fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
    }
}

impl SparseData {
    /// `entries` must be sorted by (row, col) and free of duplicates/zeros.
    fn build(n_rows: usize, n_cols: usize, entries: &[(u32, u32, f64)]) -> SparseData {
        let nnz = entries.len();
        let mut row_ptr = vec![0usize; n_rows + 1];
        for &(i, _, _) in entries {
            row_ptr[i as usize + 1] += 1;
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        let csr_cols: Vec<u32> = entries.iter().map(|e| e.1).collect();
        let csr_vals: Vec<f64> = entries.iter().map(|e| e.2).collect();

        let mut col_ptr = vec![0usize; n_cols + 1];
        for &(_, j, _) in entries {
            col_ptr[j as usize + 1] += 1;
        }
        for j in 0..n_cols {
            col_ptr[j + 1] += col_ptr[j];
        }
        let mut cursor = col_ptr.clone();
        let mut csc_rows = vec![0u32; nnz];
        let mut csc_vals = vec![0.0; nnz];
        for &(i, j, v) in entries {
            let p = cursor[j as usize];
            csc_rows[p] = i;
            csc_vals[p] = v;
            cursor[j as usize] += 1;
        }
        SparseData { row_ptr, csr_cols, csr_vals, col_ptr, csc_rows, csc_vals }
    }
}
