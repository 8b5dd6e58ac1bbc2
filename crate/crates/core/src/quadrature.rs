//! Adaptive Gauss–Kronrod (7/15) quadrature for small vector-valued integrands.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_PANELS: usize = 400;

struct Panel<const D: usize> {
    a: f64,
    b: f64,
    value: [f64; D],
    abs: [f64; D],
    err: f64,
}

fn gk15<const D: usize, F>(f: &mut F, a: f64, b: f64) -> Result<Panel<D>>
where
    F: FnMut(f64) -> Result<[f64; D]>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = [0.0; D];
    let mut gauss = [0.0; D];
    let mut abs = [0.0; D];

    let fc = f(c)?;
    for d in 0..D {
        kron[d] = WGK[7] * fc[d];
        gauss[d] = WG[3] * fc[d];
        abs[d] = WGK[7] * fc[d].abs();
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx)?;
        let f2 = f(c + dx)?;
        for d in 0..D {
            kron[d] += WGK[j] * (f1[d] + f2[d]);
            abs[d] += WGK[j] * (f1[d].abs() + f2[d].abs());
            if j % 2 == 1 {
                gauss[d] += WG[j / 2] * (f1[d] + f2[d]);
            }
        }
    }
    let mut err = 0.0_f64;
    for d in 0..D {
        kron[d] *= h;
        gauss[d] *= h;
        abs[d] *= h.abs();
        err = err.max((kron[d] - gauss[d]).abs());
    }
    Ok(Panel {
        a,
        b,
        value: kron,
        abs,
        err,
    })
}

/// Integrates `f` over `[a, b]` until the Kronrod/Gauss discrepancy summed over
/// panels drops below `rel_tol * |I|` (with a tiny absolute floor) in every component.
pub fn integrate<const D: usize, F>(mut f: F, a: f64, b: f64, rel_tol: f64) -> Result<[f64; D]>
where
    F: FnMut(f64) -> Result<[f64; D]>,
{
    if a == b {
        return Ok([0.0; D]);
    }
    let mut panels = vec![gk15(&mut f, a, b)?];
    loop {
        let mut total = [0.0; D];
        let mut total_abs = [0.0; D];
        let mut total_err = 0.0;
        for p in &panels {
            for d in 0..D {
                total[d] += p.value[d];
                total_abs[d] += p.abs[d];
            }
            total_err += p.err;
        }
        let tol = (0..D)
            .map(|d| (rel_tol * total[d].abs()).max(1e-15 * total_abs[d]))
            .fold(f64::INFINITY, f64::min);
        if total_err <= tol || total_err == 0.0 {
            return Ok(total);
        }
        if panels.len() >= MAX_PANELS {
            return Err(Error::Numeric(format!(
                "quadrature on [{a}, {b}] stalled at error {total_err:e} after {MAX_PANELS} panels"
            )));
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        panels.push(gk15(&mut f, p.a, mid)?);
        panels.push(gk15(&mut f, mid, p.b)?);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| Ok([x.powi(5) - 2.0 * x, 1.0]), 0.0, 2.0, 1e-12).unwrap();
        assert!((v[0] - (64.0 / 6.0 - 4.0)).abs() < 1e-13);
        assert!((v[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn near_singular_log_integrand() {
        let v = integrate(|x| Ok([1.0 / x]), 1e-6, 1.0, 1e-12).unwrap();
        assert!((v[0] - 1e6_f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn reversed_interval_flips_sign() {
        let fwd = integrate(|x| Ok([x.exp()]), 0.0, 1.0, 1e-12).unwrap()[0];
        let back = integrate(|x| Ok([x.exp()]), 1.0, 0.0, 1e-12).unwrap()[0];
        assert!((fwd + back).abs() < 1e-14);
    }
}
