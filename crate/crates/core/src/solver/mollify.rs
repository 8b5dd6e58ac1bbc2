use super::ops::{edges, Diffusion};
use super::state::InitialData;
use crate::error::{Error, Result};
use crate::grid::{Bc, ScalarField, VectorField};

/// Regularizes raw initial data for parameter `delta`.
///
/// Densities are smoothed by one implicit heat step of length `delta^2` and
/// clamped to `[delta, delta^{-1/(2B)}]`; the momentum `sqrt(R0) u0` and the
/// field are smoothed with homogeneous Dirichlet data. Smoothing and clamping
/// both preserve `n/c0 <= rho <= c0 n`.
pub fn mollify_initial_data(raw: &InitialData, delta: f64, b: f64, c0: f64) -> Result<InitialData> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::hypothesis("0 < δ < 1", format!("delta = {delta}")));
    }
    if !(b > 0.0) {
        return Err(Error::hypothesis("B > 0", format!("B = {b}")));
    }
    raw.check_ratio(c0).map_err(|e| Error::Domain(e.to_string()))?;
    let grid = raw.grid();
    let e = edges(&grid);
    let tau = delta * delta;
    let neumann = Diffusion::new(&grid, &e, Bc::Neumann, tau)?;
    let dirichlet = Diffusion::new(&grid, &e, Bc::Dirichlet, tau)?;
    let lo = delta;
    let hi = delta.powf(-1.0 / (2.0 * b));
    let density = |f: &ScalarField| ScalarField {
        grid,
        values: neumann.smooth(&f.values).into_iter().map(|v| v.clamp(lo, hi)).collect(),
        bc: Bc::Neumann,
    };
    let rho0 = density(&raw.rho0);
    let n0 = density(&raw.n0);
    let root_raw: Vec<f64> = raw
        .rho0
        .values
        .iter()
        .zip(&raw.n0.values)
        .map(|(r, n)| (r + n).sqrt())
        .collect();
    let root_new: Vec<f64> = rho0.values.iter().zip(&n0.values).map(|(r, n)| (r + n).sqrt()).collect();
    let comps = raw
        .u0
        .comps
        .iter()
        .map(|c| {
            let m: Vec<f64> = c.iter().zip(&root_raw).map(|(u, s)| u * s).collect();
            dirichlet
                .smooth(&m)
                .into_iter()
                .zip(&root_new)
                .map(|(m, s)| m / s)
                .collect()
        })
        .collect();
    Ok(InitialData {
        rho0,
        n0,
        u0: VectorField {
            grid,
            comps,
            bc: Bc::Dirichlet,
        },
        magnetic0: ScalarField {
            grid,
            values: dirichlet.smooth(&raw.magnetic0.values),
            bc: Bc::Dirichlet,
        },
    })
}
