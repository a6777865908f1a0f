//! Shock and dry-transition suppressors.
//!
//! A cell is treated as lying in a shock of field `m` when the characteristic
//! speeds `λ^(m)` converge singularly onto it *and* the flux gradient in that
//! field dominates the bed source. Both measures are scaled by `Δx^{-p1}` so
//! that they grow without bound at discontinuities but vanish in smooth flow.
//! A separate depth-ratio measure drops the reconstruction near cells that are
//! orders of magnitude shallower than their neighbours.
//!
//! Division conventions: a nonzero value over zero is `+∞`, zero over zero is
//! `0`. Infinities are carried as real `f64` infinities.

use crate::integrate::GhostedState;
use crate::mesh::PhysParams;
use crate::reconstruction::SchemeConfig;

/// Which conserved fields exist and which of them must stay nonnegative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SystemSpec {
    pub fields: usize,
    pub positive_fields: Vec<usize>,
}

impl SystemSpec {
    pub fn shallow_water() -> Self {
        SystemSpec {
            fields: 2,
            positive_fields: vec![0],
        }
    }

    pub fn is_valid(&self) -> bool {
        self.positive_fields.iter().all(|&m| m < self.fields)
    }
}

/// Eigenvalues and left eigenvectors of the flux Jacobian in one cell,
/// ordered `λ^(1) = u - c <= λ^(2) = u + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellEigen {
    pub lambda: [f64; 2],
    pub left: [[f64; 2]; 2],
}

/// Eigenstructure of `[[0, 1], [c² - u², 2u]]`. Dry cells get zero speeds and
/// the rows `(0, 1)`.
pub fn swe_eigensystem(h: f64, q: f64, g: f64) -> CellEigen {
    if !(h > 0.0) {
        return CellEigen {
            lambda: [0.0, 0.0],
            left: [[0.0, 1.0], [0.0, 1.0]],
        };
    }
    let u = q / h;
    let c = (g * h).sqrt();
    CellEigen {
        lambda: [u - c, u + c],
        left: [[-(u + c), 1.0], [c - u, 1.0]],
    }
}

/// Eigenstructure of every ghost-padded cell.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenData {
    pub cells: Vec<CellEigen>,
}

impl EigenData {
    pub fn swe(ghosted: &GhostedState, phys: &PhysParams) -> Self {
        EigenData {
            cells: ghosted
                .h
                .iter()
                .zip(&ghosted.q)
                .map(|(&h, &q)| swe_eigensystem(h, q, phys.g))
                .collect(),
        }
    }

    /// Multiplies the left eigenvector of field `m` in cell `i` by `factor(i, m)`.
    pub fn rescaled(&self, factor: impl Fn(usize, usize) -> f64) -> Self {
        let mut out = self.clone();
        for (i, cell) in out.cells.iter_mut().enumerate() {
            for (m, row) in cell.left.iter_mut().enumerate() {
                let f = factor(i, m);
                row[0] *= f;
                row[1] *= f;
            }
        }
        out
    }
}

/// Per-cell detector values. Field-indexed arrays are `[m][j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorOutput {
    pub delta_lambda: Vec<Vec<f64>>,
    pub delta_f: Vec<Vec<f64>>,
    pub theta_field: Vec<Vec<f64>>,
    pub theta_positive: Vec<Vec<f64>>,
    /// Plain depth-ratio suppressor with the SkK constant, for diagnostics.
    pub kappa: Vec<f64>,
    pub theta: Vec<f64>,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// Dimensionless rate at which the characteristic speeds converge on the cell.
pub fn delta_lambda(lambda: [f64; 3], spacings: [f64; 2], lambda_ref: f64, x_ref: f64, p1: f64) -> f64 {
    let back = (lambda[0] - lambda[1]) / spacings[0].powf(p1);
    let fwd = (lambda[1] - lambda[2]) / spacings[1].powf(p1);
    x_ref.powf(p1) / lambda_ref * back.max(fwd).max(0.0)
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Ratio of characteristic flux gradient to source for one field, over the
/// four cell/difference pairings of the stencil.
///
/// `dq` holds `Q_j - Q_{j-1}` and `Q_{j+1} - Q_j`; `psi` the source in the
/// three stencil cells.
pub fn delta_f(
    lambda: [f64; 3],
    left: [[f64; 2]; 3],
    dq: [[f64; 2]; 2],
    psi: [[f64; 2]; 3],
    spacings: [f64; 2],
    p1: f64,
    x_ref: f64,
) -> f64 {
    let term = |cell: usize, diff: usize| {
        let num = (lambda[cell] * dot(left[cell], dq[diff]) / spacings[diff].powf(p1)).abs();
        let den = dot(left[cell], psi[cell]).abs();
        ratio(num, den)
    };
    let worst = term(0, 0).max(term(1, 0)).max(term(1, 1)).max(term(2, 1));
    x_ref.powf(p1 - 1.0) * worst
}

/// `1 - (Δλ^{-p2} + 1)^{-p3} (ΔF^{-p2} + 1)^{-p3}`.
pub fn theta_field(delta_lambda: f64, delta_f: f64, p2: f64, p3: f64) -> f64 {
    let factor = |d: f64| {
        if d == 0.0 {
            0.0
        } else if d.is_infinite() {
            1.0
        } else {
            (d.powf(-p2) + 1.0).powf(-p3)
        }
    };
    (1.0 - factor(delta_lambda) * factor(delta_f)).clamp(0.0, 1.0)
}

/// Suppressor for a positive field: `min[1, (K⁺ v_j/v_{j-1})^{p4}, (K⁻ v_j/v_{j+1})^{p4}]`.
pub fn theta_positive(v: [f64; 3], k_plus: f64, k_minus: f64, p4: f64) -> f64 {
    let powered = |r: f64| if r.is_infinite() { r } else { r.powf(p4) };
    let back = powered(ratio(k_plus * v[1], v[0]));
    let fwd = powered(ratio(k_minus * v[1], v[2]));
    1f64.min(back).min(fwd)
}

pub fn kappa(h: [f64; 3], k_plus: f64, k_minus: f64) -> f64 {
    1f64.min(ratio(k_plus * h[1], h[0])).min(ratio(k_minus * h[1], h[2]))
}

/// Elementwise minimum over every field suppressor and every positive-field suppressor.
pub fn theta_combine(fields: &[Vec<f64>], positive: &[Vec<f64>]) -> Vec<f64> {
    let cells = fields.iter().chain(positive).map(Vec::len).next().unwrap_or(0);
    (0..cells)
        .map(|j| {
            fields
                .iter()
                .chain(positive)
                .map(|v| v[j])
                .fold(1.0, f64::min)
        })
        .collect()
}

/// Cell-centred source used by the detectors, `(0, -g h_j Δb_j / Δx_j)`.
fn centred_source(ghosted: &GhostedState, phys: &PhysParams, i: usize) -> [f64; 2] {
    [0.0, -phys.g * ghosted.h[i] * ghosted.db[i] / ghosted.dx[i]]
}

pub fn compute(ghosted: &GhostedState, cfg: &SchemeConfig, phys: &PhysParams) -> DetectorOutput {
    compute_with_eigen(ghosted, &EigenData::swe(ghosted, phys), cfg, phys)
}

pub fn compute_with_eigen(
    ghosted: &GhostedState,
    eigen: &EigenData,
    cfg: &SchemeConfig,
    phys: &PhysParams,
) -> DetectorOutput {
    let system = SystemSpec::shallow_water();
    let cells = ghosted.cells();
    let x_ref = cfg.x_ref.unwrap_or(ghosted.domain_length);
    let (h, q, dx) = (&ghosted.h, &ghosted.q, &ghosted.dx);

    let mut delta_lambda_out = vec![vec![0.0; cells]; system.fields];
    let mut delta_f_out = vec![vec![0.0; cells]; system.fields];
    let mut theta_field_out = vec![vec![1.0; cells]; system.fields];
    let mut theta_positive_out = vec![vec![1.0; cells]; system.positive_fields.len()];
    let mut kappa_out = vec![1.0; cells];

    for j in 0..cells {
        let i = j + 1;
        let spacings = [0.5 * (dx[i - 1] + dx[i]), 0.5 * (dx[i] + dx[i + 1])];
        let dq = [[h[i] - h[i - 1], q[i] - q[i - 1]], [h[i + 1] - h[i], q[i + 1] - q[i]]];
        let psi = [
            centred_source(ghosted, phys, i - 1),
            centred_source(ghosted, phys, i),
            centred_source(ghosted, phys, i + 1),
        ];
        let stencil = [eigen.cells[i - 1], eigen.cells[i], eigen.cells[i + 1]];
        for m in 0..system.fields {
            let lambda = stencil.map(|c| c.lambda[m]);
            let left = stencil.map(|c| c.left[m]);
            let dl = delta_lambda(lambda, spacings, cfg.lambda_ref, x_ref, cfg.p1);
            let df = delta_f(lambda, left, dq, psi, spacings, cfg.p1, x_ref);
            delta_lambda_out[m][j] = dl;
            delta_f_out[m][j] = df;
            theta_field_out[m][j] = theta_field(dl, df, cfg.p2, cfg.p3);
        }
        for (slot, &m) in system.positive_fields.iter().enumerate() {
            let v = if m == 0 { [h[i - 1], h[i], h[i + 1]] } else { [q[i - 1], q[i], q[i + 1]] };
            theta_positive_out[slot][j] = theta_positive(v, cfg.k_detector, cfg.k_detector, cfg.p4);
        }
        let k = 1.0 + cfg.k_skk_coeff * dx[i] / ghosted.domain_length;
        kappa_out[j] = kappa([h[i - 1], h[i], h[i + 1]], k, k);
    }

    let theta = theta_combine(&theta_field_out, &theta_positive_out);
    DetectorOutput {
        delta_lambda: delta_lambda_out,
        delta_f: delta_f_out,
        theta_field: theta_field_out,
        theta_positive: theta_positive_out,
        kappa: kappa_out,
        theta,
    }
}
