//! Values computed independently of the library: closed-form geometry,
//! per-triangle gradient quadrature, hand-derived model constants.

use tridomain::assembly::{assemble, ConductivitySpec};
use tridomain::diagnostics::{energy::energy, nondimensionalize, poincare_trace_ratio, PhysicalUnits};
use tridomain::geometry::{build_unit_cell, interface_measures, tile, MicroMesh, Subdomain, TilingSpec, UnitCellSpec};
use tridomain::ionics::{default_beta1, GapModel, IonicModel};
use tridomain::linalg;
use tridomain::stepper::SystemState;

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1e-300)
}

fn cell(density: usize) -> MicroMesh {
    build_unit_cell(&UnitCellSpec::new((1.0, 1.0), 0.25, 0.5, density)).unwrap()
}

#[test]
fn unit_cell_measures_match_geometry() {
    for d in [4, 8, 16] {
        let m = interface_measures(&cell(d));
        // inner box [0.25, 0.75]², split at x = 0.5
        assert!(close(m.gamma1, 1.0, 1e-13), "{m:?}");
        assert!(close(m.gamma2, 1.0, 1e-13), "{m:?}");
        assert!(close(m.gamma12, 0.5, 1e-13), "{m:?}");
        assert!(close(m.omega_i1, 0.125, 1e-13), "{m:?}");
        assert!(close(m.omega_i2, 0.125, 1e-13), "{m:?}");
        assert!(close(m.omega_e, 0.75, 1e-13), "{m:?}");
    }
}

#[test]
fn tiled_measures_scale_with_epsilon() {
    let eps = 0.5;
    let t = tile(&cell(4), &TilingSpec { counts: (3, 2), epsilon: eps }).unwrap();
    let m = interface_measures(&t);
    let n = 6.0;
    assert!(close(m.gamma1, n * eps, 1e-13));
    assert!(close(m.gamma12, n * eps * 0.5, 1e-13));
    assert!(close(m.omega_e, n * eps * eps * 0.75, 1e-13));
    assert!(close(m.total_area(), n * eps * eps, 1e-13));
    assert_eq!(t.n_cells(), 6);
}

/// ∫ σ|∇u_h|² per triangle from vertex values.
fn stiffness_oracle(mesh: &MicroMesh, g: &[usize], u: &[f64], sigma: impl Fn(Subdomain) -> f64) -> f64 {
    let mut total = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let [p0, p1, p2] = tri.map(|v| mesh.vertices[v]);
        let [a0, a1, a2] = tri.map(|v| u[g[v]]);
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let gx = ((a1 - a0) * (p2[1] - p0[1]) - (a2 - a0) * (p1[1] - p0[1])) / det;
        let gy = ((a2 - a0) * (p1[0] - p0[0]) - (a1 - a0) * (p2[0] - p0[0])) / det;
        total += sigma(mesh.triangle_domain[t]) * 0.5 * det.abs() * (gx * gx + gy * gy);
    }
    total
}

fn mass_oracle(mesh: &MicroMesh, g: &[usize], u: &[f64]) -> f64 {
    mesh.triangles
        .iter()
        .enumerate()
        .map(|(t, tri)| {
            let a = tri.map(|v| u[g[v]]);
            let sq: f64 = a.iter().map(|x| x * x).sum();
            let s: f64 = a.iter().sum();
            mesh.triangle_area(t) / 12.0 * (sq + s * s)
        })
        .sum()
}

#[test]
fn stiffness_and_mass_match_triangle_quadrature() {
    let mesh = tile(&cell(6), &TilingSpec { counts: (2, 1), epsilon: 0.5 }).unwrap();
    let op = assemble(&mesh, &ConductivitySpec::isotropic(2.0, 0.5)).unwrap();
    let g = &op.layout.global_of_vertex;
    let u: Vec<f64> = (0..op.n_potential()).map(|k| (k * 37 % 101) as f64 / 50.0 - 1.0).collect();
    let k = stiffness_oracle(&mesh, g, &u, |d| if d == Subdomain::E { 0.5 } else { 2.0 });
    assert!(close(linalg::quad(&op.stiffness, &u), k, 1e-12));
    assert!(close(linalg::quad(&op.volume_mass, &u), mass_oracle(&mesh, g, &u), 1e-12));
    let unit = stiffness_oracle(&mesh, g, &u, |_| 1.0);
    assert!(close(linalg::quad(&op.gradient_gram, &u), unit, 1e-12));
}

#[test]
fn stiffness_kernel_is_blockwise_constants() {
    let mesh = cell(8);
    let op = assemble(&mesh, &ConductivitySpec::default()).unwrap();
    for d in Subdomain::ALL {
        let mut u = vec![0.0; op.n_potential()];
        for k in op.layout.block_range(d) {
            u[k] = 3.0;
        }
        let r = linalg::spmv(&op.stiffness, &u);
        assert!(r.iter().all(|x| x.abs() < 1e-12));
    }
}

fn potentials_state(mesh: &MicroMesh, u1: f64, u2: f64, ue: f64, w: f64) -> (tridomain::assembly::BlockOperator, SystemState) {
    let op = assemble(mesh, &ConductivitySpec::default()).unwrap();
    let mut s = SystemState::zeros(&op);
    s.u1.iter_mut().for_each(|x| *x = u1);
    s.u2.iter_mut().for_each(|x| *x = u2);
    s.ue.iter_mut().for_each(|x| *x = ue);
    s.w1.iter_mut().for_each(|x| *x = w);
    s.w2.iter_mut().for_each(|x| *x = w);
    (op, s)
}

#[test]
fn energy_of_zero_state_is_zero() {
    let mesh = cell(4);
    let (op, s) = potentials_state(&mesh, 0.0, 0.0, 0.0, 0.0);
    let e = energy(&op, &IonicModel::default(), &GapModel::default(), 1.0, 1e-3, &s, None);
    assert!(e.entries().iter().all(|&x| x == 0.0));
}

#[test]
fn energy_of_constant_jumps() {
    let mesh = cell(8);
    let eps = 0.3;
    let c = 1.7;
    let (op, s) = potentials_state(&mesh, c, c, 0.0, 0.5);
    let model = IonicModel::default();
    let e = energy(&op, &model, &GapModel::default(), eps, 0.0, &s, None);
    // |Γ¹| = |Γ²| = 1 on the reference cell, s ≡ 0
    assert!(close(e.membrane[0], eps * c * c, 1e-13));
    assert!(close(e.membrane[1], eps * c * c, 1e-13));
    assert!(close(e.gating[0], eps * 0.25, 1e-13));
    assert_eq!(e.gap, 0.0);
    assert!(close(e.r_norm[0], eps * c.powi(4), 1e-12));
    assert!(close(e.dissipation + 1.0, 1.0, 1e-15));
    let total = 0.5 * (2.0 * eps * c * c + 1.0 * 2.0 * eps * 0.25);
    assert!(close(e.total, total, 1e-13));
}

#[test]
fn gap_energy_of_unit_jump() {
    let mesh = cell(8);
    let (op, s) = potentials_state(&mesh, 1.0, 0.0, 0.0, 0.0);
    let gap = GapModel::default();
    let e = energy(&op, &IonicModel::default(), &gap, 1.0, 0.0, &s, None);
    assert!(close(e.gap, 0.5, 1e-13));
    assert!(close(e.total, 0.5 * (1.0 + gap.c_ratio * 0.5), 1e-13));
}

#[test]
fn poincare_ratio_of_unit_intracellular_field() {
    let mesh = cell(8);
    let (op, s) = potentials_state(&mesh, 1.0, 1.0, 0.0, 0.0);
    let ratios = poincare_trace_ratio(&mesh, &op, &s, 1.0);
    assert_eq!(ratios.len(), 2);
    for r in ratios {
        // |Ω_i| / |Γ_i| = 0.125 / 1
        assert!(close(r.ratio.unwrap(), 0.125, 1e-12), "{r:?}");
    }
    let (op, s) = potentials_state(&mesh, 0.0, 0.0, 0.0, 0.0);
    assert!(poincare_trace_ratio(&mesh, &op, &s, 1.0).iter().all(|r| r.ratio.is_none()));
}

#[test]
fn fhn_constants_for_defaults() {
    let m = IonicModel::default();
    assert!(close(default_beta1(-1.0, 0.25), 1.5625 / 3.0, 1e-15));
    assert!(close(m.alpha1(), 23.0 / 12.0, 1e-15));
    assert_eq!(m.alpha4(), 1.0);
    assert_eq!(m.alpha5(), 1.0);
    // Ĩ_a'(v) = |ρ|(3v² − 2(1+θ)v + θ) + β1 has minimum |ρ|θ at v = (1+θ)/3
    let vstar = 1.25 / 3.0;
    let h = 1e-5;
    let slope = (m.i_a_tilde(vstar + h) - m.i_a_tilde(vstar - h)) / (2.0 * h);
    assert!((slope - 0.25).abs() < 1e-8, "{slope}");
}

#[test]
fn nondimensional_values() {
    let r = nondimensionalize(&PhysicalUnits::default()).unwrap();
    // ℓ = 0.01 cm, R_m = 1e4 Ω cm², λ = 5e-3 S/cm
    let l = (1e4f64 * 5e-3 * 0.01).sqrt();
    assert!(close(r.length_cm, l, 1e-14));
    assert!(close(r.epsilon, 0.01 / l, 1e-14));
    assert!(close(r.epsilon, 0.014142135623730951, 1e-14));
    assert!(close(r.tau_m_ms, 10.0, 1e-14));
    assert!(r.quoted_mismatch);
}

#[test]
fn mms_errors_are_frozen() {
    use tridomain::diagnostics::{mms_convergence, MmsCase};
    let rep = mms_convergence(&UnitCellSpec::new((1.0, 1.0), 0.25, 0.5, 8), &MmsCase::default(), &[8, 16]).unwrap();
    let errs: Vec<f64> = rep.rows.iter().map(|r| r.err_u).collect();
    let frozen = [FROZEN_MMS_8, FROZEN_MMS_16];
    for (e, f) in errs.iter().zip(frozen) {
        assert!(close(*e, f, 1e-6), "{errs:?}");
    }
}

// Regression values from the first verified run.
const FROZEN_MMS_8: f64 = 0.03630370682240202;
const FROZEN_MMS_16: f64 = 0.010306719925384006;
