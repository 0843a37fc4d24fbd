//! Local differential structure of a potential field over an embedding:
//! least-squares gradients, quadratic-fit curvature, and a field-level
//! roughness metric.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::linalg::{least_squares, top_eigenpair, SymMatrix};
use crate::field::{EmbeddingSpace, PotentialField};
use crate::model::TokenId;

/// Ridge strength used when a neighborhood is rank-deficient.
const RIDGE: f64 = 1e-6;

/// Gradient and curvature summary at one token.
///
/// `gradient` points uphill; `-gradient` is the local pull toward lower
/// potential. `degenerate` marks fits that needed ridge regularization,
/// `diagonal_fit` marks Hessians estimated without cross terms.
#[derive(Debug, Clone, Serialize)]
pub struct LocalGeometry {
    pub token: TokenId,
    pub gradient: Vec<f64>,
    pub gradient_norm: f64,
    pub top_hessian_eigenvalue: Option<f64>,
    pub degenerate: bool,
    pub diagonal_fit: bool,
}

fn check_pair(field: &PotentialField, space: &EmbeddingSpace, token: TokenId) -> Result<()> {
    if field.len() != space.len() {
        return Err(Error::Argument(format!(
            "field over {} tokens does not match embedding of {} tokens",
            field.len(),
            space.len()
        )));
    }
    if token.0 as usize >= space.len() {
        return Err(Error::Argument(format!(
            "token id {} outside embedding of {} tokens",
            token.0,
            space.len()
        )));
    }
    Ok(())
}

/// Offsets and potential differences of a token's neighborhood.
fn neighborhood(
    field: &PotentialField,
    space: &EmbeddingSpace,
    token: TokenId,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let center = space.coord(token);
    let phi_center = field.phi()[token.0 as usize];
    let mut deltas = Vec::new();
    let mut dphi = Vec::new();
    for &nb in space.neighbors(token) {
        let coord = space.coord(nb);
        deltas.push(coord.iter().zip(center).map(|(a, b)| a - b).collect());
        dphi.push(field.phi()[nb.0 as usize] - phi_center);
    }
    (deltas, dphi)
}

/// Least-squares linear fit of the field over a token's neighbors.
///
/// Returns the uphill gradient; rank-deficient neighborhoods fall back to a
/// ridge-regularized fit and come back flagged `degenerate`.
pub fn local_gradient(
    field: &PotentialField,
    space: &EmbeddingSpace,
    token: TokenId,
) -> Result<LocalGeometry> {
    check_pair(field, space, token)?;
    let (deltas, dphi) = neighborhood(field, space, token);
    let (gradient, degenerate) = least_squares(&deltas, &dphi, RIDGE);
    let gradient_norm = gradient.iter().map(|g| g * g).sum::<f64>().sqrt();
    Ok(LocalGeometry {
        token,
        gradient,
        gradient_norm,
        top_hessian_eigenvalue: None,
        degenerate,
        diagonal_fit: false,
    })
}

/// Number of coefficients in a full quadratic fit: d gradient terms plus
/// d(d+1)/2 distinct Hessian entries.
fn full_fit_unknowns(d: usize) -> usize {
    d * (d + 3) / 2
}

fn hessian_from_fit(d: usize, beta: &[f64], diagonal: bool) -> SymMatrix {
    // model: dφ ≈ Σ g_j Δ_j + Σ_j c_jj Δ_j² + Σ_{j<l} c_jl Δ_j Δ_l
    // so H_jj = 2 c_jj and H_jl = c_jl
    let mut h = SymMatrix::new(d);
    for j in 0..d {
        h.set(j, j, 2.0 * beta[d + j]);
    }
    if !diagonal {
        let mut idx = 2 * d;
        for j in 0..d {
            for l in j + 1..d {
                h.set(j, l, beta[idx]);
                idx += 1;
            }
        }
    }
    h
}

fn fit_geometry(
    field: &PotentialField,
    space: &EmbeddingSpace,
    token: TokenId,
) -> Result<LocalGeometry> {
    check_pair(field, space, token)?;
    let d = space.dims();
    let (deltas, dphi) = neighborhood(field, space, token);
    if deltas.len() < d + 2 {
        return Err(Error::InsufficientData(format!(
            "quadratic fit at token {} needs at least {} neighbors, have {}",
            token.0,
            d + 2,
            deltas.len()
        )));
    }
    let diagonal = deltas.len() < full_fit_unknowns(d);

    let rows: Vec<Vec<f64>> = deltas
        .iter()
        .map(|delta| {
            let mut row = Vec::with_capacity(if diagonal { 2 * d } else { full_fit_unknowns(d) });
            row.extend_from_slice(delta);
            row.extend(delta.iter().map(|x| x * x));
            if !diagonal {
                for j in 0..d {
                    for l in j + 1..d {
                        row.push(delta[j] * delta[l]);
                    }
                }
            }
            row
        })
        .collect();

    let (beta, degenerate) = least_squares(&rows, &dphi, RIDGE);
    let gradient: Vec<f64> = beta[..d].to_vec();
    let gradient_norm = gradient.iter().map(|g| g * g).sum::<f64>().sqrt();

    let h = hessian_from_fit(d, &beta, diagonal);
    let top = if h.max_abs() < 1e-12 {
        0.0
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x9e37_79b9 ^ u64::from(token.0));
        top_eigenpair(&h, &mut rng, 512, 1e-13).0
    };

    Ok(LocalGeometry {
        token,
        gradient,
        gradient_norm,
        top_hessian_eigenvalue: Some(top),
        degenerate,
        diagonal_fit: diagonal,
    })
}

/// Top Hessian eigenvalue (by magnitude, sign preserved) of a local
/// quadratic fit at `token`.
///
/// Neighborhoods smaller than `d(d+3)/2` use a diagonal-Hessian fit;
/// fewer than `d + 2` neighbors is an error.
pub fn local_hessian_eig(
    field: &PotentialField,
    space: &EmbeddingSpace,
    token: TokenId,
) -> Result<f64> {
    Ok(fit_geometry(field, space, token)?
        .top_hessian_eigenvalue
        .expect("quadratic fit always sets the eigenvalue"))
}

/// Gradient plus Hessian summary in one quadratic fit.
pub fn local_geometry(
    field: &PotentialField,
    space: &EmbeddingSpace,
    token: TokenId,
) -> Result<LocalGeometry> {
    fit_geometry(field, space, token)
}

/// Field roughness: population variance of the gradient norm across all
/// embedded tokens. Flat and uniformly-sloped fields score ~0.
pub fn curvature_metric(field: &PotentialField, space: &EmbeddingSpace) -> Result<f64> {
    if field.len() != space.len() {
        return Err(Error::Argument(format!(
            "field over {} tokens does not match embedding of {} tokens",
            field.len(),
            space.len()
        )));
    }
    let n = space.len();
    let mut norms = Vec::with_capacity(n);
    for t in 0..n {
        norms.push(local_gradient(field, space, TokenId(t as u32))?.gradient_norm);
    }
    let mean = norms.iter().sum::<f64>() / n as f64;
    Ok(norms.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64)
}

/// One CSV row per geometry entry:
/// `token,gradient_norm,top_hessian_eigenvalue,degenerate,diagonal_fit`.
pub fn geometry_to_csv(geometries: &[LocalGeometry]) -> String {
    let mut out = String::from("token,gradient_norm,top_hessian_eigenvalue,degenerate,diagonal_fit\n");
    for g in geometries {
        let eig = g
            .top_hessian_eigenvalue
            .map(|v| v.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            g.token.0, g.gradient_norm, eig, g.degenerate, g.diagonal_fit
        ));
    }
    out
}
