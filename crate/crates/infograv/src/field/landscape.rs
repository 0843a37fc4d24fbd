//! 2-D potential landscapes: tokens projected onto their top-2 principal
//! plane, averaged into a grid, and exported as CSV or an SVG heatmap.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::linalg::{top_eigenpair, SymMatrix};
use crate::field::{EmbeddingSpace, PotentialField};

/// Allowed grid resolutions.
pub const RESOLUTION_RANGE: (usize, usize) = (8, 1024);

/// Seed for the PCA power iteration (fixed: landscapes of equal inputs
/// must be byte-identical).
const PCA_SEED: u64 = 0x1a5d_5ca9e;

#[derive(Debug, Clone, Copy, Default)]
struct Cell {
    sum: f64,
    count: usize,
}

/// Mean-potential grid over the top-2 principal plane of an embedding.
#[derive(Debug, Clone)]
pub struct LandscapeGrid {
    resolution: usize,
    cells: Vec<Cell>,
    basis: [Vec<f64>; 2],
}

impl LandscapeGrid {
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Mean potential of a cell, or `None` when no token landed in it.
    pub fn mean(&self, x: usize, y: usize) -> Option<f64> {
        let c = self.cells[y * self.resolution + x];
        (c.count > 0).then(|| c.sum / c.count as f64)
    }

    /// Number of tokens that landed in a cell.
    pub fn count(&self, x: usize, y: usize) -> usize {
        self.cells[y * self.resolution + x].count
    }

    /// Number of non-empty cells.
    pub fn occupied(&self) -> usize {
        self.cells.iter().filter(|c| c.count > 0).count()
    }

    /// The two orthonormal projection axes.
    pub fn basis(&self) -> (&[f64], &[f64]) {
        (&self.basis[0], &self.basis[1])
    }

    /// CSV with one row per occupied cell: `cell_x,cell_y,mean_phi,count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cell_x,cell_y,mean_phi,count\n");
        for y in 0..self.resolution {
            for x in 0..self.resolution {
                if let Some(mean) = self.mean(x, y) {
                    out.push_str(&format!("{},{},{},{}\n", x, y, mean, self.count(x, y)));
                }
            }
        }
        out
    }

    /// Standalone grayscale SVG heatmap. Darker cells sit at lower
    /// potential (the gravity wells); empty cells stay white.
    pub fn to_svg(&self) -> String {
        let res = self.resolution;
        let occupied: Vec<(usize, usize, f64)> = (0..res)
            .flat_map(|y| (0..res).map(move |x| (x, y)))
            .filter_map(|(x, y)| self.mean(x, y).map(|m| (x, y, m)))
            .collect();
        let (lo, hi) = occupied.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, _, m)| {
            (lo.min(m), hi.max(m))
        });
        let span = hi - lo;

        let mut svg = format!(
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {res} {res}" width="512" height="512">"#
        );
        svg.push('\n');
        svg.push_str(&format!(
            r#"<rect x="0" y="0" width="{res}" height="{res}" fill="white"/>"#
        ));
        svg.push('\n');
        for (x, y, mean) in occupied {
            let t = if span > 0.0 { (mean - lo) / span } else { 0.5 };
            let shade = (t * 255.0).round() as u8;
            // flip y so low cell indices render at the bottom
            svg.push_str(&format!(
                r#"<rect x="{}" y="{}" width="1" height="1" fill="rgb({shade},{shade},{shade})"/>"#,
                x,
                res - 1 - y
            ));
            svg.push('\n');
        }
        svg.push_str("</svg>\n");
        svg
    }
}

/// Top-2 principal axes of the (centered) embedding coordinates.
fn principal_plane(space: &EmbeddingSpace) -> [Vec<f64>; 2] {
    let d = space.dims();
    let n = space.len() as f64;
    let mut mean = vec![0.0; d];
    for row in space.coords() {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x / n;
        }
    }
    let mut cov = SymMatrix::new(d);
    for row in space.coords() {
        for i in 0..d {
            let di = row[i] - mean[i];
            for j in i..d {
                cov.add_sym(i, j, di * (row[j] - mean[j]) / n);
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(PCA_SEED);
    let (l1, v1) = top_eigenpair(&cov, &mut rng, 512, 1e-13);
    cov.deflate(l1, &v1);
    let (_, mut v2) = top_eigenpair(&cov, &mut rng, 512, 1e-13);
    // re-orthogonalize against v1 to keep the basis orthonormal
    let proj: f64 = v1.iter().zip(&v2).map(|(a, b)| a * b).sum();
    for (x2, x1) in v2.iter_mut().zip(&v1) {
        *x2 -= proj * x1;
    }
    let norm = v2.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 1e-12 {
        for x in v2.iter_mut() {
            *x /= norm;
        }
    } else {
        // degenerate spread: fall back to any axis orthogonal to v1
        v2 = vec![0.0; d];
        let lead = v1
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        v2[(lead + 1) % d] = 1.0;
        let proj: f64 = v1.iter().zip(&v2).map(|(a, b)| a * b).sum();
        for (x2, x1) in v2.iter_mut().zip(&v1) {
            *x2 -= proj * x1;
        }
        let norm = v2.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for x in v2.iter_mut() {
                *x /= norm;
            }
        }
    }
    [v1, v2]
}

/// Projects every token onto the embedding's principal plane and grids the
/// mean potential (averaged over `fields`) at `resolution` × `resolution`.
pub fn landscape_grid(
    fields: &[PotentialField],
    space: &EmbeddingSpace,
    resolution: usize,
) -> Result<LandscapeGrid> {
    if !(RESOLUTION_RANGE.0..=RESOLUTION_RANGE.1).contains(&resolution) {
        return Err(Error::Config(format!(
            "resolution must lie in {}..={}, got {resolution}",
            RESOLUTION_RANGE.0, RESOLUTION_RANGE.1
        )));
    }
    if fields.is_empty() {
        return Err(Error::Argument("landscape needs at least one field".into()));
    }
    for f in fields {
        if f.len() != space.len() {
            return Err(Error::Argument(format!(
                "field over {} tokens does not match embedding of {} tokens",
                f.len(),
                space.len()
            )));
        }
    }

    let n = space.len();
    let mean_phi: Vec<f64> = (0..n)
        .map(|t| fields.iter().map(|f| f.phi()[t]).sum::<f64>() / fields.len() as f64)
        .collect();

    let basis = principal_plane(space);
    let project = |row: &[f64]| -> (f64, f64) {
        let px = row.iter().zip(&basis[0]).map(|(a, b)| a * b).sum();
        let py = row.iter().zip(&basis[1]).map(|(a, b)| a * b).sum();
        (px, py)
    };
    let projected: Vec<(f64, f64)> = space.coords().iter().map(|r| project(r)).collect();

    let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &projected {
        min_x = min_x.min(x);
        max_x = max_x.max(x);
        min_y = min_y.min(y);
        max_y = max_y.max(y);
    }
    let span_x = max_x - min_x;
    let span_y = max_y - min_y;

    let index = |v: f64, min: f64, span: f64| -> usize {
        if span <= 0.0 {
            return 0;
        }
        (((v - min) / span) * resolution as f64).min(resolution as f64 - 1.0) as usize
    };

    let mut cells = vec![Cell::default(); resolution * resolution];
    for (t, &(x, y)) in projected.iter().enumerate() {
        let cx = index(x, min_x, span_x);
        let cy = index(y, min_y, span_y);
        let cell = &mut cells[cy * resolution + cx];
        cell.sum += mean_phi[t];
        cell.count += 1;
    }

    Ok(LandscapeGrid {
        resolution,
        cells,
        basis,
    })
}
