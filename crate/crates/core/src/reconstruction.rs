//! Piecewise-linear reconstruction of depth and discharge.
//!
//! Every scheme is expressed through the same two ingredients: a depth
//! gradient that is a convex combination of a depth-based and a
//! surface-based minmod slope, weighted by `γ_j`, and suppression factors
//! `Θ^h_j`, `Θ^q_j` that scale the minmod slopes towards piecewise constant.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::detectors::{self, DetectorOutput};
use crate::error::{Error, Result};
use crate::integrate::GhostedState;
use crate::mesh::PhysParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// Convex combination with characteristic shock suppression.
    SkT,
    /// Convex combination, discharge slope limited by the depth-ratio suppressor.
    SkK,
    /// Surface reconstruction unless any stencil depth is below a threshold.
    Ku02,
    /// Surface reconstruction clipped to nonnegative interface depths,
    /// with desingularised interface discharges.
    Ku07,
    /// Surface reconstruction flattened where it would go negative,
    /// velocity reconstructed instead of discharge.
    Ch15,
    PiecewiseConstant,
    /// Convex combination without any suppression (`Θ ≡ 1`).
    PlainMinmod,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::SkT,
        Scheme::SkK,
        Scheme::Ku02,
        Scheme::Ku07,
        Scheme::Ch15,
        Scheme::PiecewiseConstant,
        Scheme::PlainMinmod,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::SkT => "skt",
            Scheme::SkK => "skk",
            Scheme::Ku02 => "ku02",
            Scheme::Ku07 => "ku07",
            Scheme::Ch15 => "ch15",
            Scheme::PiecewiseConstant => "constant",
            Scheme::PlainMinmod => "minmod",
        }
    }

    /// Schemes whose interface depths are nonnegative for any nonnegative data.
    pub fn is_positivity_preserving(self) -> bool {
        matches!(
            self,
            Scheme::SkT | Scheme::SkK | Scheme::Ku07 | Scheme::Ch15 | Scheme::PiecewiseConstant
        )
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Scheme::ALL
            .into_iter()
            .find(|scheme| scheme.name() == lower)
            .or(match lower.as_str() {
                "piecewise-constant" | "pc" => Some(Scheme::PiecewiseConstant),
                "plain-minmod" => Some(Scheme::PlainMinmod),
                _ => None,
            })
            .ok_or_else(|| Error::invalid_argument(format!("unknown scheme '{s}'")))
    }
}

/// All tunable constants of the reconstruction and suppressors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    /// `α^+_{j-1/2}`, weight of the backward one-sided difference.
    pub alpha_plus: f64,
    /// `α^-_{j+1/2}`, weight of the forward one-sided difference.
    pub alpha_minus: f64,
    /// `α_j`, weight of the central difference.
    pub alpha_center: f64,
    /// Reference Froude number in the fast-flow bed measure `B_j`.
    pub froude_ref: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
    /// Depth-ratio constant of the dry-transition suppressor.
    pub k_detector: f64,
    /// Coefficient `c` in the SkK constant `K = 1 + c Δx_j / (x_R - x_L)`.
    pub k_skk_coeff: f64,
    /// Ku02 depth threshold.
    pub h_ku02: f64,
    /// Ku07 desingularisation scale; `None` means the local cell width.
    pub eps_ku07: Option<f64>,
    /// Ch15 velocity desingularisation scale.
    pub eps_ch15: f64,
    pub lambda_ref: f64,
    /// Detector length scale; `None` means the domain length.
    pub x_ref: Option<f64>,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            scheme: Scheme::SkT,
            alpha_plus: 0.75,
            alpha_minus: 0.75,
            alpha_center: 0.25,
            froude_ref: 10.0,
            p1: 0.5,
            p2: 2.0,
            p3: 1.0,
            p4: 2.0,
            k_detector: 100.0,
            k_skk_coeff: 10.0,
            h_ku02: 0.1,
            eps_ku07: None,
            eps_ch15: 1e-8,
            lambda_ref: 1.0,
            x_ref: None,
        }
    }
}

impl SchemeConfig {
    pub fn with_scheme(scheme: Scheme) -> Self {
        SchemeConfig {
            scheme,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::invalid_argument(format!("{name} = {v} is outside [0, 1]")))
            }
        };
        unit("alpha_plus", self.alpha_plus)?;
        unit("alpha_minus", self.alpha_minus)?;
        unit("alpha_center", self.alpha_center)?;
        if !(self.p1 > 0.0 && self.p1 < 1.0) {
            return Err(Error::invalid_argument(format!("p1 = {} must lie in (0, 1)", self.p1)));
        }
        if self.p2 * self.p3 * (1.0 - self.p1) < 1.0 {
            return Err(Error::invalid_argument(
                "p2 * p3 * (1 - p1) must be at least 1 for second order accuracy",
            ));
        }
        if !(self.p1 * self.p2 > 0.0) {
            return Err(Error::invalid_argument("p1 * p2 must be positive"));
        }
        if self.p4 < 1.0 {
            return Err(Error::invalid_argument(format!("p4 = {} must be at least 1", self.p4)));
        }
        if !(self.froude_ref > 0.0) {
            return Err(Error::invalid_argument("froude_ref must be positive"));
        }
        if !(self.k_detector > 1.0) {
            return Err(Error::invalid_argument("k_detector must exceed 1"));
        }
        if !(self.lambda_ref > 0.0) || self.x_ref.is_some_and(|x| !(x > 0.0)) {
            return Err(Error::invalid_argument("detector reference scales must be positive"));
        }
        Ok(())
    }

    /// `G = 1 - max(α^+, α^-)`.
    pub fn convex_slope(&self) -> f64 {
        1.0 - self.alpha_plus.max(self.alpha_minus)
    }

    /// `ξ^C = 1 + 1/G`, above which the reconstruction is purely in surface elevation.
    pub fn xi_critical(&self) -> f64 {
        1.0 + 1.0 / self.convex_slope()
    }
}

/// Interface values and per-cell reconstruction diagnostics.
///
/// Interface `i` separates cell `i - 1` from cell `i`; `*_minus[i]` is the
/// value seen from the left and `*_plus[i]` the value seen from the right.
/// The outermost values (`*_minus[0]`, `*_plus[J]`) are the boundary states.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReconOutput {
    pub grad_h: Vec<f64>,
    pub grad_q: Vec<f64>,
    pub h_minus: Vec<f64>,
    pub h_plus: Vec<f64>,
    pub q_minus: Vec<f64>,
    pub q_plus: Vec<f64>,
    pub gamma: Vec<f64>,
    pub theta_h: Vec<f64>,
    pub theta_q: Vec<f64>,
    pub xi: Vec<f64>,
    pub h_down: Vec<f64>,
    pub db_up: Vec<f64>,
    pub b_fast: Vec<f64>,
}

impl ReconOutput {
    pub fn cells(&self) -> usize {
        self.grad_h.len()
    }
}

pub fn minmod(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo > 0.0 {
        lo
    } else if hi < 0.0 {
        hi
    } else {
        0.0
    }
}

/// Limited slope of `v` in a cell of width `dx`, from the weighted backward,
/// central and forward differences.
#[allow(clippy::too_many_arguments)]
pub fn slope_minmod(
    v_prev: f64,
    v: f64,
    v_next: f64,
    dx: f64,
    alpha_plus_prev: f64,
    alpha_center: f64,
    alpha_minus_next: f64,
) -> f64 {
    let scale = 2.0 / dx;
    minmod(&[
        scale * alpha_plus_prev * (v - v_prev),
        scale * alpha_center * (v_next - v_prev),
        scale * alpha_minus_next * (v_next - v),
    ])
}

fn slope(cfg: &SchemeConfig, v_prev: f64, v: f64, v_next: f64, dx: f64) -> f64 {
    slope_minmod(v_prev, v, v_next, dx, cfg.alpha_plus, cfg.alpha_center, cfg.alpha_minus)
}

/// The two candidate depth gradients, from reconstructing in depth and in
/// surface elevation. Inputs `h`, `eta`, `db`, `dx` are ghost-padded
/// (length `J + 2`); `theta_h` has one entry per interior cell.
pub fn depth_gradients(
    h: &[f64],
    eta: &[f64],
    db: &[f64],
    dx: &[f64],
    theta_h: &[f64],
    cfg: &SchemeConfig,
) -> (Vec<f64>, Vec<f64>) {
    let cells = h.len() - 2;
    (0..cells)
        .map(|j| {
            let i = j + 1;
            let from_h = theta_h[j] * slope(cfg, h[i - 1], h[i], h[i + 1], dx[i]);
            let from_eta = theta_h[j] * slope(cfg, eta[i - 1], eta[i], eta[i + 1], dx[i]) - db[i] / dx[i];
            (from_h, from_eta)
        })
        .unzip()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexCoefficient {
    pub gamma: f64,
    pub xi: f64,
    pub h_down: f64,
    pub db_up: f64,
    pub b_fast: f64,
}

/// The blend coefficient `γ_j` and the quantities it is built from.
///
/// `h` and `b` are the depth and cell-centre bed at `j - 1, j, j + 1`;
/// `db_cell` is `b_{j+1/2} - b_{j-1/2}`.
pub fn convex_coefficient(
    h: [f64; 3],
    q: f64,
    b: [f64; 3],
    db_cell: f64,
    cfg: &SchemeConfig,
    phys: &PhysParams,
) -> ConvexCoefficient {
    let (ap, ac, am) = (cfg.alpha_plus, cfg.alpha_center, cfg.alpha_minus);
    // Lower bound on the interface depths of the depth reconstruction.
    let h_down = (h[1] - ap * (h[1] - h[0])).min(h[1]).min(h[1] + am * (h[2] - h[1]));
    let half = 0.5 * db_cell;
    let b_fast = (q * q / (cfg.froude_ref * cfg.froude_ref * phys.g)).cbrt();
    let db_up = (half - ap * (b[1] - b[0]))
        .abs()
        .max(half.abs())
        .max((half - ac * (b[2] - b[0])).abs())
        .max((half - am * (b[2] - b[1])).abs())
        .max(b_fast);
    let xi = if db_up > 0.0 { h_down / db_up } else { f64::INFINITY };
    let gamma = gamma_of_xi(xi, cfg);
    ConvexCoefficient {
        gamma,
        xi,
        h_down,
        db_up,
        b_fast,
    }
}

/// Piecewise-linear ramp from 0 at `ξ = 1` to 1 at `ξ = ξ^C`.
pub fn gamma_of_xi(xi: f64, cfg: &SchemeConfig) -> f64 {
    let g = cfg.convex_slope();
    if xi <= 1.0 {
        0.0
    } else if xi >= cfg.xi_critical() {
        1.0
    } else {
        (g * (xi - 1.0)).clamp(0.0, 1.0)
    }
}

pub fn combine_gradients(grad_h_h: &[f64], grad_h_eta: &[f64], gamma: &[f64]) -> Vec<f64> {
    grad_h_h
        .iter()
        .zip(grad_h_eta)
        .zip(gamma)
        .map(|((&gh, &ge), &g)| (1.0 - g) * gh + g * ge)
        .collect()
}

/// Suppressed minmod slope of the discharge.
pub fn flux_gradient(q: [f64; 3], theta_q: f64, dx: f64, cfg: &SchemeConfig) -> f64 {
    theta_q * slope(cfg, q[0], q[1], q[2], dx)
}

/// Per-cell suppression factors for the configured scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct Suppressors {
    pub theta_h: Vec<f64>,
    pub theta_q: Vec<f64>,
    pub detectors: Option<DetectorOutput>,
}

/// Computes `Θ^h`, `Θ^q` for the scheme: the characteristic detectors for
/// SkT, the depth-ratio suppressor on the discharge for SkK, zero for
/// piecewise constant and one otherwise.
pub fn scheme_suppressors(ghosted: &GhostedState, cfg: &SchemeConfig, phys: &PhysParams) -> Suppressors {
    let cells = ghosted.cells();
    match cfg.scheme {
        Scheme::SkT => {
            let out = detectors::compute(ghosted, cfg, phys);
            Suppressors {
                theta_h: out.theta.clone(),
                theta_q: out.theta.clone(),
                detectors: Some(out),
            }
        }
        Scheme::SkK => {
            let kappa = (0..cells)
                .map(|j| {
                    let i = j + 1;
                    let k = 1.0 + cfg.k_skk_coeff * ghosted.dx[i] / ghosted.domain_length;
                    detectors::kappa([ghosted.h[i - 1], ghosted.h[i], ghosted.h[i + 1]], k, k)
                })
                .collect();
            Suppressors {
                theta_h: vec![1.0; cells],
                theta_q: kappa,
                detectors: None,
            }
        }
        Scheme::PiecewiseConstant => Suppressors {
            theta_h: vec![0.0; cells],
            theta_q: vec![0.0; cells],
            detectors: None,
        },
        Scheme::Ku02 | Scheme::Ku07 | Scheme::Ch15 | Scheme::PlainMinmod => Suppressors {
            theta_h: vec![1.0; cells],
            theta_q: vec![1.0; cells],
            detectors: None,
        },
    }
}

/// Reconstructs interface depths and discharges for every cell.
pub fn reconstruct(
    ghosted: &GhostedState,
    theta_h: &[f64],
    theta_q: &[f64],
    cfg: &SchemeConfig,
    phys: &PhysParams,
) -> Result<ReconOutput> {
    let cells = ghosted.cells();
    if theta_h.len() != cells || theta_q.len() != cells {
        return Err(Error::invalid_argument("suppressor arrays must have one value per cell"));
    }
    if let Some(i) = ghosted.h.iter().position(|&h| !(h >= 0.0)) {
        return Err(Error::invalid_state(format!(
            "depth {} in padded cell {i} is negative or not finite",
            ghosted.h[i]
        )));
    }
    let (h, q, b, db, dx) = (&ghosted.h, &ghosted.q, &ghosted.b, &ghosted.db, &ghosted.dx);
    let eta: Vec<f64> = h.iter().zip(b).map(|(h, b)| h + b).collect();
    let (grad_h_h, grad_h_eta) = depth_gradients(h, &eta, db, dx, theta_h, cfg);

    let mut out = ReconOutput {
        grad_h: vec![0.0; cells],
        grad_q: vec![0.0; cells],
        h_minus: vec![0.0; cells + 1],
        h_plus: vec![0.0; cells + 1],
        q_minus: vec![0.0; cells + 1],
        q_plus: vec![0.0; cells + 1],
        gamma: vec![0.0; cells],
        theta_h: theta_h.to_vec(),
        theta_q: theta_q.to_vec(),
        xi: vec![f64::NAN; cells],
        h_down: vec![f64::NAN; cells],
        db_up: vec![f64::NAN; cells],
        b_fast: vec![f64::NAN; cells],
    };

    // Ch15 reconstructs a desingularised velocity in place of discharge.
    let u_desing: Vec<f64> = if cfg.scheme == Scheme::Ch15 {
        let eps2 = cfg.eps_ch15 * cfg.eps_ch15;
        h.iter()
            .zip(q)
            .map(|(&h, &q)| {
                let denom = h * h + (h * h).max(eps2);
                if denom > 0.0 {
                    q * 2.0 * h / denom
                } else {
                    0.0
                }
            })
            .collect()
    } else {
        Vec::new()
    };

    for j in 0..cells {
        let i = j + 1;
        let h0 = h[i];
        let half = 0.5 * dx[i];

        let gamma = match cfg.scheme {
            Scheme::SkT | Scheme::SkK | Scheme::PlainMinmod => {
                let coeff = convex_coefficient([h[i - 1], h0, h[i + 1]], q[i], [b[i - 1], b[i], b[i + 1]], db[i], cfg, phys);
                out.xi[j] = coeff.xi;
                out.h_down[j] = coeff.h_down;
                out.db_up[j] = coeff.db_up;
                out.b_fast[j] = coeff.b_fast;
                coeff.gamma
            }
            Scheme::Ku02 => {
                if h[i - 1].min(h0).min(h[i + 1]) < cfg.h_ku02 {
                    0.0
                } else {
                    1.0
                }
            }
            Scheme::Ku07 => {
                let (gh, ge) = (grad_h_h[j], grad_h_eta[j]);
                let side = |from_h: f64, from_eta: f64| {
                    (from_eta < 0.0).then(|| from_h / (from_h - from_eta))
                };
                let left = side(h0 - half * gh, h0 - half * ge);
                let right = side(h0 + half * gh, h0 + half * ge);
                match (left, right) {
                    (Some(l), Some(r)) => l.min(r),
                    (Some(g), None) | (None, Some(g)) => g,
                    (None, None) => 1.0,
                }
            }
            Scheme::Ch15 => {
                let (gh, ge) = (grad_h_h[j], grad_h_eta[j]);
                if (h0 - half * ge < 0.0 || h0 + half * ge < 0.0) && gh != ge {
                    gh / (gh - ge)
                } else {
                    1.0
                }
            }
            Scheme::PiecewiseConstant => 0.0,
        };
        out.gamma[j] = gamma;

        let grad_h = if cfg.scheme == Scheme::PiecewiseConstant {
            0.0
        } else {
            (1.0 - gamma) * grad_h_h[j] + gamma * grad_h_eta[j]
        };
        out.grad_h[j] = grad_h;
        let h_left = clamp_roundoff(h0 - half * grad_h, h0, half * grad_h);
        let h_right = clamp_roundoff(h0 + half * grad_h, h0, half * grad_h);
        out.h_plus[j] = h_left;
        out.h_minus[j + 1] = h_right;

        match cfg.scheme {
            Scheme::Ch15 => {
                let u = &u_desing;
                let grad_u = slope(cfg, u[i - 1], u[i], u[i + 1], dx[i]);
                let q_left = (u[i] - half * grad_u) * h_left;
                let q_right = (u[i] + half * grad_u) * h_right;
                out.q_plus[j] = q_left;
                out.q_minus[j + 1] = q_right;
                out.grad_q[j] = (q_right - q_left) / dx[i];
            }
            Scheme::PiecewiseConstant => {
                out.q_plus[j] = q[i];
                out.q_minus[j + 1] = q[i];
            }
            _ => {
                let grad_q = flux_gradient([q[i - 1], q[i], q[i + 1]], theta_q[j], dx[i], cfg);
                out.grad_q[j] = grad_q;
                let mut q_left = q[i] - half * grad_q;
                let mut q_right = q[i] + half * grad_q;
                if cfg.scheme == Scheme::Ku07 {
                    let eps = cfg.eps_ku07.unwrap_or(dx[i]);
                    q_left *= ku07_discharge_factor(h_left, eps);
                    q_right *= ku07_discharge_factor(h_right, eps);
                }
                out.q_plus[j] = q_left;
                out.q_minus[j + 1] = q_right;
            }
        }
    }

    let (hl, ql) = ghosted.left.outer_state(out.h_plus[0], out.q_plus[0]);
    out.h_minus[0] = hl;
    out.q_minus[0] = ql;
    let (hr, qr) = ghosted.right.outer_state(out.h_minus[cells], out.q_minus[cells]);
    out.h_plus[cells] = hr;
    out.q_plus[cells] = qr;
    Ok(out)
}

/// `sqrt(2 h^4 / (h^4 + max(h^4, ε^4)))`, which tends to 1 in deep water
/// and to 0 as the depth vanishes.
pub fn ku07_discharge_factor(h: f64, eps: f64) -> f64 {
    let h4 = h.powi(4);
    let denom = h4 + h4.max(eps.powi(4));
    if denom > 0.0 {
        (2.0 * h4 / denom).sqrt()
    } else {
        0.0
    }
}

// Positivity-preserving reconstructions can still land a few ulps below zero.
fn clamp_roundoff(value: f64, center: f64, offset: f64) -> f64 {
    if value < 0.0 && -value <= 16.0 * f64::EPSILON * (center.abs() + offset.abs()) {
        0.0
    } else {
        value
    }
}
