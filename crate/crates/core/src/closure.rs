//! Pressure closure for the two-fluid mixture.
//!
//! Under the implicit law the larger-species density `rho_plus` is recovered
//! from the conserved pair `(rho, n)` by solving
//! `rho_plus^r (rho_plus - rho) = n rho_plus` with `r = gamma_plus / gamma_minus`.
//! Then `alpha = rho / rho_plus`, `rho_minus = rho_plus^r` and the common
//! pressure is `rho_plus^gamma_plus = rho_minus^gamma_minus`.
//!
//! The explicit law is `P = rho^gamma_plus + n^gamma_minus`. The species map
//! (`solve_rho_plus`, `recover_real_variables`) always refers to the implicit
//! relation, whatever law drives the pressure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

const MAX_NEWTON: usize = 200;
const RESIDUAL_TOL: f64 = 1e-12;
const HP_REL_TOL: f64 = 1e-10;
/// Surrogate density used for chemical potentials at an exact vacuum node.
const VACUUM_SURROGATE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PressureLaw {
    #[default]
    Implicit,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosureParams {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub law: PressureLaw,
    /// Ratio bound: admissible states satisfy `n / c0 <= rho <= c0 n`.
    pub c0: f64,
}

/// Structural constants of the closure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureConstants {
    pub q_lo: f64,
    pub q_hi: f64,
    pub q1_lo: f64,
    pub q1_hi: f64,
    pub c_lo: f64,
    pub c_hi: f64,
    /// Growth exponent of the Hessian of `H_P`.
    pub a_exponent: f64,
}

impl ClosureParams {
    pub fn new(gamma_plus: f64, gamma_minus: f64, law: PressureLaw, c0: f64) -> Result<Self> {
        let p = Self {
            gamma_plus,
            gamma_minus,
            law,
            c0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Implicit law with ratio bound `c0 = 1`.
    pub fn implicit(gamma_plus: f64, gamma_minus: f64) -> Result<Self> {
        Self::new(gamma_plus, gamma_minus, PressureLaw::Implicit, 1.0)
    }

    pub fn explicit(gamma: f64, alpha: f64) -> Result<Self> {
        Self::new(gamma, alpha, PressureLaw::Explicit, 1.0)
    }

    pub fn with_c0(mut self, c0: f64) -> Result<Self> {
        self.c0 = c0;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_plus.is_finite() && self.gamma_plus >= 1.0) {
            return Err(Error::hypothesis("γ⁺ ≥ 1", format!("gamma_plus = {}", self.gamma_plus)));
        }
        if !(self.gamma_minus.is_finite() && self.gamma_minus > 0.0) {
            return Err(Error::hypothesis("γ⁻ > 0", format!("gamma_minus = {}", self.gamma_minus)));
        }
        if self.law == PressureLaw::Explicit && self.gamma_minus < 1.0 {
            return Err(Error::hypothesis(
                "γ, α ≥ 1",
                format!("explicit law exponent alpha = {}", self.gamma_minus),
            ));
        }
        if !(self.c0.is_finite() && self.c0 >= 1.0) {
            return Err(Error::hypothesis("c₀ ≥ 1", format!("c0 = {}", self.c0)));
        }
        Ok(())
    }

    /// `r = gamma_plus / gamma_minus`.
    pub fn r(&self) -> f64 {
        self.gamma_plus / self.gamma_minus
    }

    pub fn constants(&self) -> ClosureConstants {
        let gp = self.gamma_plus;
        let gm = self.gamma_minus;
        let r = gp / gm;
        let q_lo = (gm / gp).min(1.0);
        let q_hi = (gm / gp).max(1.0);
        let a_exponent = [
            0.0,
            gp - 2.0,
            gm - 2.0,
            gp - 2.0 * r,
            gp - r - 1.0,
            gm - gm / gp - 1.0,
        ]
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
        ClosureConstants {
            q_lo,
            q_hi,
            q1_lo: r.min(1.0),
            q1_hi: r.max(1.0),
            c_lo: q_lo.powf(gp),
            c_hi: (2.0 * q_hi).powf(gp),
            a_exponent,
        }
    }

    /// Does `(rho, n)` lie in the ratio set `n / c0 <= rho <= c0 n` (up to `tol`)?
    pub fn in_ratio_set(&self, rho: f64, n: f64, tol: f64) -> bool {
        rho >= 0.0 && n >= 0.0 && self.c0 * rho - n >= -tol && self.c0 * n - rho >= -tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureEval {
    pub rho: f64,
    pub n: f64,
    pub rho_plus: f64,
    pub rho_minus: f64,
    pub alpha: f64,
    pub pressure: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressurePartials {
    pub drho_plus_drho: f64,
    pub drho_plus_dn: f64,
    pub dp_drho: f64,
    pub dp_dn: f64,
    /// `None` where the second derivative blows up (only at the origin).
    pub d2p_dn2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealVariables {
    pub alpha: f64,
    pub rho_plus: f64,
    pub rho_minus: f64,
    /// Set at `(0, 0)`, where `alpha` is a convention rather than a value.
    pub degenerate: bool,
}

/// Energy density with its gradient and the pressure at one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Potentials {
    pub h: f64,
    pub mu_rho: f64,
    pub mu_n: f64,
    pub pressure: f64,
}

/// Artificial-pressure regularization: `delta (rho^B + n^B + ...)` for the
/// implicit law, `delta (rho + n)^beta` for the explicit law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizationParams {
    pub delta: f64,
    pub b: f64,
    pub beta: f64,
}

impl RegularizationParams {
    pub fn none() -> Self {
        Self {
            delta: 0.0,
            b: 4.0,
            beta: 4.0,
        }
    }

    fn exponent(&self, law: PressureLaw) -> f64 {
        match law {
            PressureLaw::Implicit => self.b,
            PressureLaw::Explicit => self.beta,
        }
    }
}

fn check_pair(rho: f64, n: f64) -> Result<()> {
    if !(rho.is_finite() && n.is_finite() && rho >= 0.0 && n >= 0.0) {
        return Err(Error::domain(format!("densities must be finite and non-negative, got ({rho}, {n})")));
    }
    Ok(())
}

/// Solves the closure equation for `rho_plus` by safeguarded Newton iteration
/// inside the bracket `max(rho, n^{1/r} + q_lo rho) <= rho_plus <= n^{1/r} + q_hi rho`.
pub fn solve_rho_plus(rho: f64, n: f64, p: &ClosureParams) -> Result<f64> {
    check_pair(rho, n)?;
    let r = p.r();
    if n == 0.0 {
        return Ok(rho);
    }
    let n_root = n.powf(1.0 / r);
    if rho == 0.0 {
        return Ok(n_root);
    }
    let c = p.constants();
    let mut lo = rho.max(n_root + c.q_lo * rho);
    let mut hi = n_root + c.q_hi * rho;
    if hi < lo {
        hi = lo;
    }
    // g(x) = x^{r-1}(x - rho) - n is increasing on [rho, inf) with g(rho) = -n.
    let g = |x: f64| {
        let xr1 = x.powf(r - 1.0);
        (xr1 * (x - rho) - n, xr1 * (r * x - (r - 1.0) * rho) / x)
    };
    let residual = |x: f64| (x.powf(r) * (x - rho) - n * x).abs();
    let tol = |x: f64| RESIDUAL_TOL * (1.0 + x.powf(1.0 + r));

    let mut x = (rho + n_root).clamp(lo, hi);
    for _ in 0..MAX_NEWTON {
        let (gx, dg) = g(x);
        if gx == 0.0 {
            break;
        }
        if gx < 0.0 {
            lo = lo.max(x);
        } else {
            hi = hi.min(x);
        }
        let mut next = x - gx / dg;
        if !(next.is_finite() && next >= lo && next <= hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - x).abs();
        x = next;
        if step <= 4.0 * f64::EPSILON * x || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    // Newton may cycle between neighbouring floats; the residual decides.
    if residual(x) > tol(x) {
        return Err(Error::Convergence {
            what: format!("rho_plus solve at ({rho}, {n})"),
            bracket_width: hi - lo,
        });
    }
    Ok(x)
}

/// Species densities, volume fraction and pressure at `(rho, n)`.
pub fn evaluate(rho: f64, n: f64, p: &ClosureParams) -> Result<ClosureEval> {
    let rho_plus = solve_rho_plus(rho, n, p)?;
    let rho_minus = rho_plus.powf(p.r());
    let alpha = if rho_plus > 0.0 { (rho / rho_plus).min(1.0) } else { 1.0 };
    Ok(ClosureEval {
        rho,
        n,
        rho_plus,
        rho_minus,
        alpha,
        pressure: pressure_from(rho, n, rho_plus, p),
    })
}

fn pressure_from(rho: f64, n: f64, rho_plus: f64, p: &ClosureParams) -> f64 {
    match p.law {
        PressureLaw::Implicit => rho_plus.powf(p.gamma_plus),
        PressureLaw::Explicit => rho.powf(p.gamma_plus) + n.powf(p.gamma_minus),
    }
}

pub fn pressure(rho: f64, n: f64, p: &ClosureParams) -> Result<f64> {
    match p.law {
        PressureLaw::Implicit => Ok(solve_rho_plus(rho, n, p)?.powf(p.gamma_plus)),
        PressureLaw::Explicit => {
            check_pair(rho, n)?;
            Ok(rho.powf(p.gamma_plus) + n.powf(p.gamma_minus))
        }
    }
}

/// First derivatives of `rho_plus` and `P`, and `d^2 P / dn^2`.
pub fn pressure_partials(rho: f64, n: f64, p: &ClosureParams) -> Result<PressurePartials> {
    let rho_plus = solve_rho_plus(rho, n, p)?;
    partials_at(rho, n, rho_plus, p)
}

fn partials_at(rho: f64, n: f64, x: f64, p: &ClosureParams) -> Result<PressurePartials> {
    let gp = p.gamma_plus;
    let gm = p.gamma_minus;
    let r = p.r();
    let (drho_plus_drho, drho_plus_dn, d2rho_plus) = if x > 0.0 {
        let alpha = (rho / x).min(1.0);
        let m = alpha + r * (1.0 - alpha);
        let dn = x.powf(1.0 - r) / m;
        let dnn = (1.0 - r) * (2.0 * alpha + r * (1.0 - alpha)) * x.powf(1.0 - 2.0 * r) / (m * m * m);
        (1.0 / m, dn, Some(dnn))
    } else {
        let dn = if r < 1.0 {
            0.0
        } else if r == 1.0 {
            1.0
        } else {
            return Err(Error::domain(format!(
                "d rho_plus / dn is unbounded at the origin when gamma_minus/gamma_plus = {} < 1",
                gm / gp
            )));
        };
        (1.0, dn, None)
    };

    match p.law {
        PressureLaw::Implicit => {
            if x > 0.0 {
                let dp_drho = gp * x.powf(gp - 1.0) * drho_plus_drho;
                let dp_dn = gp * x.powf(gp - 1.0) * drho_plus_dn;
                let d2 = gp * (gp - 1.0) * x.powf(gp - 2.0) * drho_plus_dn * drho_plus_dn
                    + gp * x.powf(gp - 1.0) * d2rho_plus.unwrap_or(0.0);
                Ok(PressurePartials {
                    drho_plus_drho,
                    drho_plus_dn,
                    dp_drho,
                    dp_dn,
                    d2p_dn2: Some(d2),
                })
            } else {
                let dp_drho = if gp == 1.0 { 1.0 } else { 0.0 };
                let dp_dn = origin_power_derivative(gm)?;
                let d2p_dn2 = if gm > 2.0 {
                    Some(0.0)
                } else if gm == 2.0 {
                    Some(2.0)
                } else {
                    None
                };
                Ok(PressurePartials {
                    drho_plus_drho,
                    drho_plus_dn,
                    dp_drho,
                    dp_dn,
                    d2p_dn2,
                })
            }
        }
        PressureLaw::Explicit => {
            let dp_drho = gp * rho.powf(gp - 1.0);
            let dp_dn = if n > 0.0 {
                gm * n.powf(gm - 1.0)
            } else {
                origin_power_derivative(gm)?
            };
            let d2p_dn2 = if n > 0.0 || gm == 1.0 || gm > 2.0 {
                Some(if n > 0.0 { gm * (gm - 1.0) * n.powf(gm - 2.0) } else { 0.0 })
            } else if gm == 2.0 {
                Some(2.0)
            } else {
                None
            };
            Ok(PressurePartials {
                drho_plus_drho,
                drho_plus_dn,
                dp_drho,
                dp_dn,
                d2p_dn2,
            })
        }
    }
}

/// `d/dn n^g` at `n = 0`.
fn origin_power_derivative(g: f64) -> Result<f64> {
    if g > 1.0 {
        Ok(0.0)
    } else if g == 1.0 {
        Ok(1.0)
    } else {
        Err(Error::domain(format!("d P / dn is unbounded at n = 0 when gamma_minus = {g} < 1")))
    }
}

fn explicit_energy(x: f64, g: f64) -> f64 {
    if g == 1.0 {
        if x == 0.0 {
            1.0
        } else {
            x * x.ln() - x + 1.0
        }
    } else {
        x.powf(g) / (g - 1.0)
    }
}

fn explicit_energy_derivative(x: f64, g: f64) -> f64 {
    if g == 1.0 {
        x.max(VACUUM_SURROGATE).ln()
    } else {
        g * x.powf(g - 1.0) / (g - 1.0)
    }
}

/// Internal energy density `H_P(rho, n) = rho * int_1^rho P(z, z n/rho) / z^2 dz`
/// (implicit law) or `G_gamma(rho) + G_alpha(n)` (explicit law).
///
/// The implicit potential is unbounded on the half-line `rho = 0, n > 0`,
/// which is reported as a domain error.
pub fn energy_density_hp(rho: f64, n: f64, p: &ClosureParams) -> Result<f64> {
    check_pair(rho, n)?;
    match p.law {
        PressureLaw::Explicit => Ok(explicit_energy(rho, p.gamma_plus) + explicit_energy(n, p.gamma_minus)),
        PressureLaw::Implicit => {
            if rho == 0.0 {
                return if n == 0.0 {
                    Ok(0.0)
                } else {
                    Err(Error::domain(format!("H_P is unbounded at rho = 0, n = {n} > 0")))
                };
            }
            let s = n / rho;
            let [i0] = quadrature::integrate(
                |z| Ok([pressure(z, z * s, p)? / (z * z)]),
                1.0,
                rho,
                HP_REL_TOL,
            )?;
            Ok(rho * i0)
        }
    }
}

/// Energy density, its gradient and the pressure in one quadrature pass.
///
/// The gradient uses `d H / dn = int_1^rho dP/dn(z, z n/rho) / z dz` and the
/// Euler relation `rho dH/drho + n dH/dn - H = P`.
pub fn potentials(rho: f64, n: f64, p: &ClosureParams) -> Result<Potentials> {
    check_pair(rho, n)?;
    match p.law {
        PressureLaw::Explicit => Ok(Potentials {
            h: explicit_energy(rho, p.gamma_plus) + explicit_energy(n, p.gamma_minus),
            mu_rho: explicit_energy_derivative(rho, p.gamma_plus),
            mu_n: explicit_energy_derivative(n, p.gamma_minus),
            pressure: rho.powf(p.gamma_plus) + n.powf(p.gamma_minus),
        }),
        PressureLaw::Implicit => {
            if rho == 0.0 {
                if n == 0.0 {
                    let v = potentials(VACUUM_SURROGATE, VACUUM_SURROGATE, p)?;
                    return Ok(Potentials {
                        h: 0.0,
                        pressure: 0.0,
                        ..v
                    });
                }
                return Err(Error::domain(format!("H_P is unbounded at rho = 0, n = {n} > 0")));
            }
            let s = n / rho;
            let [i0, i1] = quadrature::integrate(
                |z| {
                    let zn = z * s;
                    let x = solve_rho_plus(z, zn, p)?;
                    let pr = x.powf(p.gamma_plus);
                    let dn = partials_at(z, zn, x, p)?.dp_dn;
                    Ok([pr / (z * z), dn / z])
                },
                1.0,
                rho,
                HP_REL_TOL,
            )?;
            let h = rho * i0;
            let pr = pressure(rho, n, p)?;
            Ok(Potentials {
                h,
                mu_rho: (pr + h - n * i1) / rho,
                mu_n: i1,
                pressure: pr,
            })
        }
    }
}

/// Energy density evaluated through the species variables: the integrand is
/// the minus-species pressure `rho_minus^gamma_minus`, with `rho_minus`
/// obtained from the mirrored closure equation (species and exponents swapped).
pub fn energy_density_real(alpha: f64, rho_plus: f64, rho_minus: f64, p: &ClosureParams) -> Result<f64> {
    let rho = alpha * rho_plus;
    let n = (1.0 - alpha) * rho_minus;
    if rho == 0.0 {
        return if n == 0.0 {
            Ok(0.0)
        } else {
            Err(Error::domain("real-system potential is unbounded when alpha rho_plus = 0"))
        };
    }
    let mirrored = ClosureParams {
        gamma_plus: p.gamma_minus,
        gamma_minus: p.gamma_plus,
        law: PressureLaw::Implicit,
        c0: p.c0,
    };
    let s = n / rho;
    let [i0] = quadrature::integrate(
        |z| {
            let minus = solve_rho_plus(z * s, z, &mirrored)?;
            Ok([minus.powf(p.gamma_minus) / (z * z)])
        },
        1.0,
        rho,
        HP_REL_TOL,
    )?;
    Ok(rho * i0)
}

/// Central (or one-sided near a boundary) difference, refined once by Richardson.
pub fn fd_derivative<F>(f: F, x: f64, h: f64, lower: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(h > 0.0) || x + h == x {
        return Err(Error::Numeric(format!("difference step {h:e} underflows at x = {x}")));
    }
    let central = x - 2.0 * h >= lower;
    let diff = |h: f64| -> Result<f64> {
        if central {
            Ok((f(x + h)? - f(x - h)?) / (2.0 * h))
        } else {
            Ok((-3.0 * f(x)? + 4.0 * f(x + h)? - f(x + 2.0 * h)?) / (2.0 * h))
        }
    };
    let d1 = diff(h)?;
    let d2 = diff(0.5 * h)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

fn fd_step(x: f64) -> f64 {
    1e-5 * (1.0 + x.abs())
}

/// `|rho dH/drho + n dH/dn - H - P|` with the gradient of `H` taken by finite differences.
pub fn euler_identity_residual(rho: f64, n: f64, p: &ClosureParams) -> Result<f64> {
    check_pair(rho, n)?;
    if rho == 0.0 && n == 0.0 {
        return Ok(0.0);
    }
    let h0 = energy_density_hp(rho, n, p)?;
    let hr = fd_step(rho).min(0.25 * rho);
    let dh_drho = fd_derivative(|x| energy_density_hp(x, n, p), rho, hr, 0.0)?;
    let dh_dn = if n > 0.0 {
        fd_derivative(|y| energy_density_hp(rho, y, p), n, fd_step(n), 0.0)?
    } else {
        fd_derivative(|y| energy_density_hp(rho, y, p), 0.0, fd_step(0.0), 0.0)?
    };
    let pr = pressure(rho, n, p)?;
    Ok((rho * dh_drho + n * dh_dn - h0 - pr).abs())
}

/// `x^2 y^(B-2) / 2`, set to zero when a base vanishes and the power would blow up.
fn mixed(x: f64, y: f64, b: f64) -> f64 {
    if x == 0.0 || (y == 0.0 && b < 2.0) {
        0.0
    } else {
        0.5 * x * x * y.powf(b - 2.0)
    }
}

fn reg_bracket(rho: f64, n: f64, b: f64) -> f64 {
    rho.powf(b) + n.powf(b) + mixed(rho, n, b) + mixed(n, rho, b)
}

/// Gradient of `reg_bracket`.
fn reg_bracket_gradient(rho: f64, n: f64, b: f64) -> (f64, f64) {
    let d = |x: f64, y: f64| {
        let own = b * x.powf(b - 1.0);
        let cross = if x == 0.0 || (y == 0.0 && b < 2.0) {
            0.0
        } else {
            x * y.powf(b - 2.0)
        };
        let other = if y == 0.0 || (x == 0.0 && b < 3.0) {
            0.0
        } else {
            0.5 * (b - 2.0) * y * y * x.powf(b - 3.0)
        };
        own + cross + other
    };
    (d(rho, n), d(n, rho))
}

/// Regularized pressure `Pi_delta`.
pub fn artificial_pressure(rho: f64, n: f64, p: &ClosureParams, reg: &RegularizationParams) -> Result<f64> {
    let base = pressure(rho, n, p)?;
    Ok(base
        + match p.law {
            PressureLaw::Implicit => reg.delta * reg_bracket(rho, n, reg.b),
            PressureLaw::Explicit => reg.delta * (rho + n).powf(reg.beta),
        })
}

/// Potential of the artificial pressure, `h_delta`.
pub fn h_delta(rho: f64, n: f64, p: &ClosureParams, reg: &RegularizationParams) -> Result<f64> {
    check_pair(rho, n)?;
    let e = reg.exponent(p.law);
    if e <= 1.0 {
        return Err(Error::hypothesis("B > 1", format!("regularization exponent {e}")));
    }
    Ok(match p.law {
        PressureLaw::Implicit => reg.delta / (e - 1.0) * reg_bracket(rho, n, e),
        PressureLaw::Explicit => reg.delta / (e - 1.0) * (rho + n).powf(e),
    })
}

/// Gradient of `h_delta`.
pub fn h_delta_gradient(rho: f64, n: f64, p: &ClosureParams, reg: &RegularizationParams) -> Result<(f64, f64)> {
    check_pair(rho, n)?;
    let e = reg.exponent(p.law);
    if e <= 1.0 {
        return Err(Error::hypothesis("B > 1", format!("regularization exponent {e}")));
    }
    let k = reg.delta / (e - 1.0);
    Ok(match p.law {
        PressureLaw::Implicit => {
            let (a, b) = reg_bracket_gradient(rho, n, e);
            (k * a, k * b)
        }
        PressureLaw::Explicit => {
            let g = k * e * (rho + n).powf(e - 1.0);
            (g, g)
        }
    })
}

/// Potentials of the regularized system: `H_P + h_delta`, its gradient and `Pi_delta`.
pub fn regularized_potentials(rho: f64, n: f64, p: &ClosureParams, reg: &RegularizationParams) -> Result<Potentials> {
    let base = potentials(rho, n, p)?;
    if reg.delta == 0.0 {
        return Ok(base);
    }
    let h = h_delta(rho, n, p, reg)?;
    let (gr, gn) = h_delta_gradient(rho, n, p, reg)?;
    let e = reg.exponent(p.law);
    Ok(Potentials {
        h: base.h + h,
        mu_rho: base.mu_rho + gr,
        mu_n: base.mu_n + gn,
        pressure: base.pressure + (e - 1.0) * h,
    })
}

/// `s = rho / n` for `n > 0`, else 0.
pub fn ratio_s(rho: f64, n: f64) -> f64 {
    if n > 0.0 {
        rho / n
    } else {
        0.0
    }
}

/// Splits `P(n s, n) = (q1_lo / 2) n^gamma_minus + pi(n, s)`; returns `(pi, remainder)`.
pub fn pi_decomposition(n: f64, s: f64, p: &ClosureParams) -> Result<(f64, f64)> {
    let remainder = 0.5 * p.constants().q1_lo * n.powf(p.gamma_minus);
    Ok((pressure(n * s, n, p)? - remainder, remainder))
}

/// Smallest forward difference of `n -> pi(n, s)` over an increasing grid.
pub fn pi_monotone_witness(s: f64, n_grid: &[f64], p: &ClosureParams) -> Result<f64> {
    let values = n_grid
        .iter()
        .map(|&n| pi_decomposition(n, s, p).map(|v| v.0))
        .collect::<Result<Vec<_>>>()?;
    Ok(values
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min))
}

/// Volume fraction and species densities at `(rho, n)`.
pub fn recover_real_variables(rho: f64, n: f64, p: &ClosureParams) -> Result<RealVariables> {
    check_pair(rho, n)?;
    if rho == 0.0 && n == 0.0 {
        return Ok(RealVariables {
            alpha: 1.0,
            rho_plus: 0.0,
            rho_minus: 0.0,
            degenerate: true,
        });
    }
    let e = evaluate(rho, n, p)?;
    Ok(RealVariables {
        alpha: e.alpha,
        rho_plus: e.rho_plus,
        rho_minus: e.rho_minus,
        degenerate: false,
    })
}

/// Result of probing the Hessian growth of `H_P`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianBound {
    /// Sum of absolute second partials.
    pub hessian_sum: f64,
    /// Smallest `C` with `hessian_sum <= C (1 + rho^A)`.
    pub constant: f64,
    /// The same constant with the difference step halved.
    pub constant_refined: f64,
    pub a_exponent: f64,
}

fn hessian_sum(rho: f64, n: f64, p: &ClosureParams, h: f64) -> Result<f64> {
    let f = |x: f64, y: f64| energy_density_hp(x, y, p);
    let hr = h * (1.0 + rho);
    let hn = h * (1.0 + n);
    if rho - hr <= 0.0 || n - hn < 0.0 {
        return Err(Error::Numeric(format!("difference step {h:e} leaves the domain at ({rho}, {n})")));
    }
    let f0 = f(rho, n)?;
    let frr = (f(rho + hr, n)? - 2.0 * f0 + f(rho - hr, n)?) / (hr * hr);
    let fnn = (f(rho, n + hn)? - 2.0 * f0 + f(rho, n - hn)?) / (hn * hn);
    let frn = (f(rho + hr, n + hn)? - f(rho + hr, n - hn)? - f(rho - hr, n + hn)? + f(rho - hr, n - hn)?)
        / (4.0 * hr * hn);
    Ok(frr.abs() + frn.abs() + fnn.abs())
}

/// Finite-difference probe of the Hessian growth bound for `H_P` on `rho >= r_lower`.
pub fn hessian_hp_bound_check(rho: f64, n: f64, p: &ClosureParams, r_lower: f64) -> Result<HessianBound> {
    check_pair(rho, n)?;
    if !(r_lower > 0.0 && rho >= r_lower) {
        return Err(Error::domain(format!("need rho >= r_lower > 0, got rho = {rho}, r_lower = {r_lower}")));
    }
    let h = 1e-3_f64.min(0.25 * rho / (1.0 + rho));
    if h < 1e-8 {
        return Err(Error::Numeric(format!("difference step {h:e} underflows")));
    }
    let a = p.constants().a_exponent;
    let scale = 1.0 + rho.powf(a);
    let coarse = hessian_sum(rho, n, p, h)?;
    let fine = hessian_sum(rho, n, p, 0.5 * h)?;
    Ok(HessianBound {
        hessian_sum: fine,
        constant: coarse / scale,
        constant_refined: fine / scale,
        a_exponent: a,
    })
}

/// Explicit majorant constants for the derivative bounds of the implicit law.
///
/// Each bound has the form `value <= K (rho^a + n^b)`. They follow from
/// `x^p <= k_p (rho^p + n^{p/r})` for `x = rho_plus`, where
/// `k_p = q_hi^p max(1, 2^{p-1})` for `p >= 0` and `k_p = q_lo^p` for `p < 0`,
/// together with `q_lo <= 1/m <= q_hi` for `m = alpha + r (1 - alpha)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeMajorants {
    pub rho_plus_dn: f64,
    pub p_drho: f64,
    pub p_dn: f64,
    pub p_dnn: f64,
}

fn power_majorant(c: &ClosureConstants, p: f64) -> f64 {
    if p >= 0.0 {
        c.q_hi.powf(p) * 2f64.powf(p - 1.0).max(1.0)
    } else {
        c.q_lo.powf(p)
    }
}

impl DerivativeMajorants {
    pub fn new(p: &ClosureParams) -> Self {
        let c = p.constants();
        let gp = p.gamma_plus;
        let r = p.r();
        Self {
            rho_plus_dn: c.q_hi * power_majorant(&c, 1.0 - r),
            p_drho: gp * c.q_hi * power_majorant(&c, gp - 1.0),
            p_dn: gp * c.q_hi * power_majorant(&c, gp - r),
            p_dnn: gp
                * ((gp - 1.0).abs() * c.q_hi * c.q_hi + (1.0 - r).abs() * r.max(2.0) * c.q_hi.powi(3))
                * power_majorant(&c, gp - 2.0 * r),
        }
    }

    /// Right-hand sides `(rho_plus_dn, p_drho, p_dn, p_dnn)` of the bounds at `(rho, n)`.
    pub fn bounds(&self, rho: f64, n: f64, p: &ClosureParams) -> [f64; 4] {
        let gp = p.gamma_plus;
        let gm = p.gamma_minus;
        let r = p.r();
        [
            self.rho_plus_dn * (rho.powf(1.0 - r) + n.powf(1.0 / r - 1.0)),
            self.p_drho * (rho.powf(gp - 1.0) + n.powf(gm - gm / gp)),
            self.p_dn * (rho.powf(gp - r) + n.powf(gm - 1.0)),
            self.p_dnn * (rho.powf(gp - 2.0 * r) + n.powf(gm - 2.0)),
        ]
    }
}
