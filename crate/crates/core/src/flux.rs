//! Central-upwind interface fluxes, the hydrostatic bed source and the
//! semi-discrete right-hand side.

use crate::detectors::DetectorOutput;
use crate::error::{Error, Result};
use crate::integrate::GhostedState;
use crate::mesh::PhysParams;
use crate::reconstruction::{self, ReconOutput, SchemeConfig};

/// `(q, q²/h + g h²/2)`; zero for a dry state.
pub fn physical_flux(h: f64, q: f64, g: f64) -> [f64; 2] {
    if h > 0.0 {
        [q, q * q / h + 0.5 * g * h * h]
    } else {
        [0.0, 0.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceFlux {
    pub flux: [f64; 2],
    pub a_plus: f64,
    pub a_minus: f64,
}

/// Two-speed central-upwind flux between the left state `qm` and the right
/// state `qp`, each `(h, q)`.
pub fn central_upwind_flux(qm: [f64; 2], qp: [f64; 2], g: f64) -> Result<InterfaceFlux> {
    if !(qm[0] >= 0.0) || !(qp[0] >= 0.0) {
        return Err(Error::invalid_state(format!(
            "negative interface depth ({}, {})",
            qm[0], qp[0]
        )));
    }
    if qm[0] == 0.0 && qp[0] == 0.0 {
        return Ok(InterfaceFlux {
            flux: [0.0, 0.0],
            a_plus: 0.0,
            a_minus: 0.0,
        });
    }
    let speeds = |s: [f64; 2]| {
        if s[0] > 0.0 {
            let u = s[1] / s[0];
            let c = (g * s[0]).sqrt();
            (u - c, u + c)
        } else {
            (0.0, 0.0)
        }
    };
    let (lm_lo, lm_hi) = speeds(qm);
    let (lp_lo, lp_hi) = speeds(qp);
    let a_plus = lm_hi.max(lp_hi).max(0.0);
    let a_minus = lm_lo.min(lp_lo).min(0.0);
    let fm = physical_flux(qm[0], qm[1], g);
    let fp = physical_flux(qp[0], qp[1], g);
    let spread = a_plus - a_minus;
    let tol = 1e-12 * 1f64.max(a_plus.abs()).max(a_minus.abs());
    let flux = if spread < tol {
        [0.5 * (fm[0] + fp[0]), 0.5 * (fm[1] + fp[1])]
    } else {
        let prod = a_plus * a_minus;
        [
            (a_plus * fm[0] - a_minus * fp[0] + prod * (qp[0] - qm[0])) / spread,
            (a_plus * fm[1] - a_minus * fp[1] + prod * (qp[1] - qm[1])) / spread,
        ]
    };
    Ok(InterfaceFlux { flux, a_plus, a_minus })
}

/// Momentum source in a cell from its two interior interface depths.
pub fn bed_source(h_plus_left: f64, h_minus_right: f64, db_cell: f64, dx: f64, g: f64) -> f64 {
    if db_cell == 0.0 {
        return 0.0;
    }
    -g * 0.5 * (h_plus_left + h_minus_right) * db_cell / dx
}

/// Interface fluxes and wave-speed bounds, one per interface.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FluxData {
    pub flux: Vec<[f64; 2]>,
    pub a_plus: Vec<f64>,
    pub a_minus: Vec<f64>,
}

impl FluxData {
    /// Largest one-sided wave speed over all interfaces.
    pub fn max_speed(&self) -> f64 {
        self.a_plus
            .iter()
            .chain(&self.a_minus)
            .fold(0.0, |m, a| m.max(a.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhsData {
    pub dh: Vec<f64>,
    pub dq: Vec<f64>,
    /// Per-cell source `(0, ψ_j)`.
    pub source: Vec<[f64; 2]>,
    pub fluxes: FluxData,
    pub recon: ReconOutput,
    pub detectors: Option<DetectorOutput>,
}

/// Runs the full pipeline on a ghost-padded state: suppressors, gradients,
/// convex combination, interface fluxes and the balance
/// `dQ_j/dt = -(F_{j+1/2} - F_{j-1/2}) / Δx_j + Ψ_j`.
pub fn assemble_rhs(ghosted: &GhostedState, cfg: &SchemeConfig, phys: &PhysParams) -> Result<RhsData> {
    let cells = ghosted.cells();
    let suppressors = reconstruction::scheme_suppressors(ghosted, cfg, phys);
    let recon = reconstruction::reconstruct(ghosted, &suppressors.theta_h, &suppressors.theta_q, cfg, phys)?;

    let mut fluxes = FluxData {
        flux: Vec::with_capacity(cells + 1),
        a_plus: Vec::with_capacity(cells + 1),
        a_minus: Vec::with_capacity(cells + 1),
    };
    for i in 0..=cells {
        let left = [recon.h_minus[i], recon.q_minus[i]];
        let right = [recon.h_plus[i], recon.q_plus[i]];
        let f = central_upwind_flux(left, right, phys.g).map_err(|e| match e {
            Error::InvalidState(msg) => Error::invalid_state(format!("interface {i}: {msg}")),
            other => other,
        })?;
        fluxes.flux.push(f.flux);
        fluxes.a_plus.push(f.a_plus);
        fluxes.a_minus.push(f.a_minus);
    }

    let mut dh = vec![0.0; cells];
    let mut dq = vec![0.0; cells];
    let mut source = vec![[0.0, 0.0]; cells];
    for j in 0..cells {
        let i = j + 1;
        let dx = ghosted.dx[i];
        let psi = bed_source(recon.h_plus[j], recon.h_minus[j + 1], ghosted.db[i], dx, phys.g);
        source[j] = [0.0, psi];
        let (fl, fr) = (fluxes.flux[j], fluxes.flux[j + 1]);
        dh[j] = -(fr[0] - fl[0]) / dx;
        dq[j] = -(fr[1] - fl[1]) / dx + psi;
    }

    Ok(RhsData {
        dh,
        dq,
        source,
        fluxes,
        recon,
        detectors: suppressors.detectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::{apply_boundaries, BoundarySpec};
    use crate::mesh::{BedProfile, Grid, State};
    use crate::reconstruction::Scheme;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn physical_flux_examples() {
        assert_eq!(physical_flux(1.0, 0.0, 1.0), [0.0, 0.5]);
        assert_eq!(physical_flux(0.0, 0.0, 1.0), [0.0, 0.0]);
        let left = physical_flux(0.1, 0.23452, 1.0);
        let right = physical_flux(1.0, 0.2345, 1.0);
        assert_relative_eq!(left[1], 0.554_996_304, epsilon = 1e-9);
        assert_relative_eq!(right[1], 0.554_990_25, epsilon = 1e-9);
        assert!((left[1] - right[1]).abs() < 1e-5);
    }

    #[test]
    fn central_upwind_is_consistent_and_zero_when_dry() {
        let f = central_upwind_flux([0.7, 0.3], [0.7, 0.3], 1.0).unwrap();
        let exact = physical_flux(0.7, 0.3, 1.0);
        assert_relative_eq!(f.flux[0], exact[0], max_relative = 1e-14);
        assert_relative_eq!(f.flux[1], exact[1], max_relative = 1e-14);
        let dry = central_upwind_flux([0.0, 0.0], [0.0, 0.0], 1.0).unwrap();
        assert_eq!(dry.flux, [0.0, 0.0]);
        assert!(central_upwind_flux([-1e-3, 0.0], [1.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn central_upwind_dam_break_states() {
        // Independent evaluation of the same two-speed formula.
        let (hl, hr) = (1.0f64, 0.5f64);
        let ap = hl.sqrt().max(hr.sqrt());
        let am = -ap;
        let fl = [0.0, 0.5 * hl * hl];
        let fr = [0.0, 0.5 * hr * hr];
        let expected = [
            (ap * fl[0] - am * fr[0] + ap * am * (hr - hl)) / (ap - am),
            (ap * fl[1] - am * fr[1]) / (ap - am),
        ];
        let f = central_upwind_flux([hl, 0.0], [hr, 0.0], 1.0).unwrap();
        assert_relative_eq!(f.flux[0], expected[0], epsilon = 1e-15);
        assert_relative_eq!(f.flux[1], expected[1], epsilon = 1e-15);
        assert_eq!((f.a_plus, f.a_minus), (1.0, -1.0));
        // Mass moves towards the shallower side; momentum flux between the two.
        assert!(f.flux[0] > 0.0);
        assert!(f.flux[1] <= fl[1] && f.flux[1] >= fr[1]);
    }

    #[test]
    fn bed_source_examples() {
        assert_eq!(bed_source(1.0, 1.0, 0.0, 1.0, 1.0), 0.0);
        assert_relative_eq!(bed_source(1.0, 1.0, 0.1, 1.0, 1.0), -0.1);
        assert_eq!(bed_source(0.0, 0.0, 0.1, 1.0, 1.0), 0.0);
    }

    #[test]
    fn bed_source_matches_half_sum_formula() {
        // -g (h+ + h-)/2 · Δb/Δx with h+ = h- = 1, Δb = 0.1: -0.1 · 1 / 1 = -0.1,
        // and with mismatched depths the mean is used.
        assert_relative_eq!(bed_source(1.0, 0.0, 0.1, 1.0, 1.0), -0.05);
    }

    #[test]
    fn uniform_flat_state_is_stationary() {
        let grid = Grid::uniform(20, 0.0, 1.0, 0.0).unwrap();
        let bed = BedProfile::flat(&grid);
        let state = State::new(vec![1.3; 20], vec![0.4; 20], 0.0).unwrap();
        for scheme in Scheme::ALL {
            let g = apply_boundaries(&state, &bed, &grid, &BoundarySpec::extrapolate());
            let rhs = assemble_rhs(&g, &SchemeConfig::with_scheme(scheme), &PhysParams::default()).unwrap();
            assert!(rhs.dh.iter().chain(&rhs.dq).all(|&x| x == 0.0), "{scheme}");
        }
    }

    #[test]
    fn perturbation_conserves_mass_between_walls() {
        let grid = Grid::uniform(30, 0.0, 3.0, 0.0).unwrap();
        let bed = BedProfile::flat(&grid);
        let mut h = vec![1.0; 30];
        h[12] = 1.7;
        let mut q = vec![0.0; 30];
        q[12] = 0.3;
        let state = State::new(h, q, 0.0).unwrap();
        for scheme in Scheme::ALL {
            let g = apply_boundaries(&state, &bed, &grid, &BoundarySpec::walls());
            let rhs = assemble_rhs(&g, &SchemeConfig::with_scheme(scheme), &PhysParams::default()).unwrap();
            let mass: f64 = rhs.dh.iter().zip(grid.widths()).map(|(d, w)| d * w).sum();
            assert!(mass.abs() < 1e-13, "{scheme}: {mass}");
        }
    }

    #[test]
    fn conservation_with_bed_all_schemes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let grid = Grid::uniform(40, -1.0, 1.0, 0.0).unwrap();
        let bed = BedProfile::from_fn(&grid, |x| 0.3 * (3.0 * x).sin()).unwrap();
        for _ in 0..20 {
            let h: Vec<f64> = (0..40).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..2.0) }).collect();
            let q: Vec<f64> = h.iter().map(|&h| if h > 0.0 { h * rng.gen_range(-1.0..1.0) } else { 0.0 }).collect();
            let state = State::new(h, q, 0.0).unwrap();
            for scheme in Scheme::ALL.into_iter().filter(|s| s.is_positivity_preserving()) {
                let g = apply_boundaries(&state, &bed, &grid, &BoundarySpec::walls());
                let rhs = assemble_rhs(&g, &SchemeConfig::with_scheme(scheme), &PhysParams::default()).unwrap();
                let mass: f64 = rhs.dh.iter().zip(grid.widths()).map(|(d, w)| d * w).sum();
                assert!(mass.abs() < 1e-12, "{scheme}: {mass}");
            }
        }
    }

    proptest! {
        #[test]
        fn central_upwind_consistency(h in 0.0f64..10.0, u in -10.0f64..10.0) {
            let q = h * u;
            let f = central_upwind_flux([h, q], [h, q], 1.0).unwrap();
            let exact = physical_flux(h, q, 1.0);
            for k in 0..2 {
                prop_assert!((f.flux[k] - exact[k]).abs() <= 1e-14 * (1.0 + exact[k].abs()));
            }
            prop_assert!(f.a_plus >= 0.0 && f.a_minus <= 0.0);
        }
    }
}
