//! Poincaré–trace ratios per intracellular component.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::assembly::BlockOperator;
use crate::geometry::{Interface, MicroMesh, Subdomain};
use crate::linalg;
use crate::stepper::SystemState;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentRatio {
    pub side: Subdomain,
    pub cell: usize,
    /// None when the denominator vanishes.
    pub ratio: Option<f64>,
}

/// ‖u_i‖² / (ε‖v‖²_Γ + ‖∇u_i‖² + ‖∇u_e‖²) for every intracellular component,
/// where Γ is that component's membrane.
pub fn poincare_trace_ratio(mesh: &MicroMesh, op: &BlockOperator, state: &SystemState, eps: f64) -> Vec<ComponentRatio> {
    let u = state.potentials();
    let g = &op.layout.global_of_vertex;
    let range_e = op.layout.block_range(Subdomain::E);
    let mut ue = vec![0.0; u.len()];
    ue[range_e.clone()].copy_from_slice(&u[range_e]);
    let grad_e = linalg::quad(&op.gradient_gram, &ue);

    let mut out = Vec::new();
    for side in [Subdomain::I1, Subdomain::I2] {
        let which = if side == Subdomain::I1 { Interface::Gamma1 } else { Interface::Gamma2 };
        for cell in 0..mesh.n_cells() {
            let mut ui = vec![0.0; u.len()];
            for vtx in mesh.component_vertices(side, cell) {
                ui[g[vtx]] = u[g[vtx]];
            }
            let num = linalg::quad(&op.volume_mass, &ui);
            let grad_i = linalg::quad(&op.gradient_gram, &ui);
            let trace: f64 = mesh
                .facets(which)
                .iter()
                .filter(|f| f.cell == cell)
                .map(|f| {
                    let a = u[g[f.inner[0]]] - u[g[f.outer[0]]];
                    let b = u[g[f.inner[1]]] - u[g[f.outer[1]]];
                    mesh.edge_length(f.inner) / 3.0 * (a * a + a * b + b * b)
                })
                .sum();
            let den = eps * trace + grad_i + grad_e;
            let ratio = (den > 0.0).then(|| num / den);
            out.push(ComponentRatio { side, cell, ratio });
        }
    }
    out
}

/// Low-frequency cosine field with random coefficients in [−1, 1].
fn smooth_field(rng: &mut ChaCha8Rng, size: (f64, f64)) -> impl Fn([f64; 2]) -> f64 {
    let coef: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
    move |p: [f64; 2]| {
        let mut s = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                let fx = (a as f64 * std::f64::consts::PI * p[0] / size.0).cos();
                let fy = (b as f64 * std::f64::consts::PI * p[1] / size.1).cos();
                s += coef[3 * a + b] * fx * fy;
            }
        }
        s
    }
}

/// Random smooth potentials: a cosine field per medium plus a random
/// constant per intracellular component. Gating is left at zero.
pub fn random_smooth_state(mesh: &MicroMesh, op: &BlockOperator, rng: &mut ChaCha8Rng) -> SystemState {
    let size = mesh.domain_size();
    let fields = [smooth_field(rng, size), smooth_field(rng, size), smooth_field(rng, size)];
    let offsets: Vec<[f64; 2]> = (0..mesh.n_cells())
        .map(|_| [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)])
        .collect();
    let mut u = vec![0.0; op.n_potential()];
    for (vtx, p) in mesh.vertices.iter().enumerate() {
        let d = mesh.vertex_domain[vtx];
        let base = fields[d as usize](*p);
        let shift = match d {
            Subdomain::I1 => offsets[mesh.vertex_cell[vtx]][0],
            Subdomain::I2 => offsets[mesh.vertex_cell[vtx]][1],
            Subdomain::E => 0.0,
        };
        u[op.layout.global_of_vertex[vtx]] = base + shift;
    }
    let mut st = SystemState::zeros(op);
    st.set_potentials(&u);
    st
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoincareSample {
    pub samples: usize,
    pub undefined: usize,
    pub max_ratio: f64,
}

/// Max ratio over `samples` random smooth states.
pub fn sample_max_ratio(mesh: &MicroMesh, op: &BlockOperator, eps: f64, samples: usize, seed: u64) -> PoincareSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio = 0.0f64;
    let mut undefined = 0;
    for _ in 0..samples {
        let st = random_smooth_state(mesh, op, &mut rng);
        for c in poincare_trace_ratio(mesh, op, &st, eps) {
            match c.ratio {
                Some(r) => max_ratio = max_ratio.max(r),
                None => undefined += 1,
            }
        }
    }
    PoincareSample {
        samples,
        undefined,
        max_ratio,
    }
}
