//! Visual outputs: the re-ordered matrix as SVG or binary PPM, and the
//! recovery-study summary curve.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::BipartiteAdjacency;
use crate::model::ModelKind;
use crate::partition::Partition;

/// Node order that groups clusters: by (cluster, index).
fn cluster_order(labels: &[u32]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..labels.len()).collect();
    idx.sort_by_key(|&i| (labels[i], i));
    idx
}

/// Grayscale byte per cell: 255 is white (smallest value), 0 black.
/// Binary data maps exactly; counts and reals are linear between the
/// minimum and the 99th percentile, so a few extreme cells cannot wash
/// out the rest of the picture.
fn shades(adj: &BipartiteAdjacency) -> Vec<u8> {
    let n = adj.n_rows();
    let m = adj.n_cols();
    let mut values = Vec::with_capacity(n * m);
    for i in 0..n {
        adj.for_each_in_row(i, |_, v| values.push(v));
    }
    let (lo, hi) = match adj.model() {
        ModelKind::Bernoulli => (0.0, 1.0),
        _ => {
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            let lo = sorted[0];
            let p99 = sorted[((sorted.len() - 1) as f64 * 0.99).round() as usize];
            let hi = if p99 > lo { p99 } else { *sorted.last().expect("non-empty") };
            (lo, hi)
        }
    };
    let span = if hi > lo { hi - lo } else { 1.0 };
    values
        .into_iter()
        .map(|v| {
            let t = ((v - lo) / span).clamp(0.0, 1.0);
            255 - (t * 255.0).round() as u8
        })
        .collect()
}

/// Renders the matrix re-ordered by the partition. The format follows the
/// file extension: binary PPM for `.ppm` (one pixel per cell, no
/// boundaries), SVG otherwise (with red cluster boundary lines).
pub fn render_heatmap(
    adj: &BipartiteAdjacency,
    partition: &Partition,
    path: &Path,
) -> Result<()> {
    if partition.n() != adj.n_rows() || partition.m() != adj.n_cols() {
        return Err(Error::Config(format!(
            "partition is {}x{} but the matrix is {}x{}",
            partition.n(),
            partition.m(),
            adj.n_rows(),
            adj.n_cols()
        )));
    }
    let bytes = if path.extension().is_some_and(|e| e == "ppm") {
        heatmap_ppm(adj, partition)
    } else {
        heatmap_svg(adj, partition).into_bytes()
    };
    let mut f = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn heatmap_ppm(adj: &BipartiteAdjacency, partition: &Partition) -> Vec<u8> {
    let n = adj.n_rows();
    let m = adj.n_cols();
    let row_order = cluster_order(partition.row_labels());
    let col_order = cluster_order(partition.col_labels());
    let shade = shades(adj);
    let mut out = format!("P6\n{m} {n}\n255\n").into_bytes();
    out.reserve(3 * n * m);
    for &i in &row_order {
        for &j in &col_order {
            let s = shade[i * m + j];
            out.extend_from_slice(&[s, s, s]);
        }
    }
    out
}

pub fn heatmap_svg(adj: &BipartiteAdjacency, partition: &Partition) -> String {
    let n = adj.n_rows();
    let m = adj.n_cols();
    let row_order = cluster_order(partition.row_labels());
    let col_order = cluster_order(partition.col_labels());
    let shade = shades(adj);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {m} {n}\" \
         shape-rendering=\"crispEdges\">\n\
         <rect width=\"{m}\" height=\"{n}\" fill=\"#ffffff\"/>\n"
    );
    for (y, &i) in row_order.iter().enumerate() {
        let mut x = 0;
        while x < m {
            let s = shade[i * m + col_order[x]];
            let mut run = 1;
            while x + run < m && shade[i * m + col_order[x + run]] == s {
                run += 1;
            }
            if s < 255 {
                svg.push_str(&format!(
                    "<rect x=\"{x}\" y=\"{y}\" width=\"{run}\" height=\"1\" \
                     fill=\"#{s:02x}{s:02x}{s:02x}\"/>\n"
                ));
            }
            x += run;
        }
    }
    // red separators between consecutive clusters
    let mut cum = 0u32;
    for &c in &partition.row_counts()[..partition.k() - 1] {
        cum += c;
        svg.push_str(&format!(
            "<line x1=\"0\" y1=\"{cum}\" x2=\"{m}\" y2=\"{cum}\" \
             stroke=\"#ff0000\" stroke-width=\"0.15\"/>\n"
        ));
    }
    let mut cum = 0u32;
    for &c in &partition.col_counts()[..partition.g() - 1] {
        cum += c;
        svg.push_str(&format!(
            "<line x1=\"{cum}\" y1=\"0\" x2=\"{cum}\" y2=\"{n}\" \
             stroke=\"#ff0000\" stroke-width=\"0.15\"/>\n"
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Mean recovery score against noise level, one marker per grid point.
pub fn study_plot_svg(means: &[(f64, f64)]) -> String {
    let width = 640.0;
    let height = 480.0;
    let margin = 60.0;
    let max_q = means.iter().map(|&(q, _)| q).fold(0.5, f64::max);
    let px = |q: f64| margin + (width - 2.0 * margin) * q / max_q;
    let py = |nmi: f64| height - margin - (height - 2.0 * margin) * nmi / 2.0;
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {width} {height}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{width}\" height=\"{height}\" fill=\"#ffffff\"/>\n"
    );
    svg.push_str(&format!(
        "<line x1=\"{margin}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"#000\"/>\n",
        height - margin,
        width - margin
    ));
    svg.push_str(&format!(
        "<line x1=\"{margin}\" y1=\"{margin}\" x2=\"{margin}\" y2=\"{}\" stroke=\"#000\"/>\n",
        height - margin
    ));
    for tick in 0..=5 {
        let q = max_q * f64::from(tick) / 5.0;
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{q:.2}</text>\n",
            px(q),
            height - margin + 20.0
        ));
    }
    for tick in 0..=4 {
        let v = f64::from(tick) * 0.5;
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{v:.1}</text>\n",
            margin - 8.0,
            py(v) + 4.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">noise q</text>\n",
        width / 2.0,
        height - margin / 3.0
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 {0} {1})\">mean combined NMI</text>\n",
        margin / 3.0,
        height / 2.0
    ));
    let pts: Vec<String> =
        means.iter().map(|&(q, v)| format!("{},{}", px(q), py(v))).collect();
    svg.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n",
        pts.join(" ")
    ));
    for &(q, v) in means {
        svg.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"#1f77b4\"/>\n",
            px(q),
            py(v)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn write_study_plot(path: &Path, means: &[(f64, f64)]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    f.write_all(study_plot_svg(means).as_bytes())
        .map_err(|e| Error::io(path.display().to_string(), e))
}
