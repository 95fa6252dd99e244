//! P1 finite element operators on the duplicated-node mesh.
//!
//! Potential unknowns are ordered `[u1 | u2 | ue]`. Every interface carries
//! its own node list; a node is a pair of coincident vertices (inner side,
//! outer side) and the difference map `D` turns potentials into the jump
//! across the interface.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Interface, InterfaceFacet, MicroMesh, Subdomain};
use crate::linalg::{self, cholesky::EnvelopeCholesky, lanczos, Csr, Triplets};

pub type Tensor = [[f64; 2]; 2];

/// Scalar y-periodic modulation 1 + a·cos(2π y₁/ℓ₁)·cos(2π y₂/ℓ₂) applied to
/// all tensors, evaluated in cell coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Modulation {
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConductivitySpec {
    pub tensor_i: Tensor,
    /// Separate tensor for the second intracellular region; defaults to `tensor_i`.
    #[serde(default)]
    pub tensor_i2: Option<Tensor>,
    pub tensor_e: Tensor,
    #[serde(default)]
    pub modulation: Option<Modulation>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub beta: Option<f64>,
}

impl Default for ConductivitySpec {
    fn default() -> Self {
        Self::isotropic(1.0, 1.0)
    }
}

fn eig2(t: &Tensor) -> (f64, f64) {
    let m = 0.5 * (t[0][0] + t[1][1]);
    let d = (0.25 * (t[0][0] - t[1][1]).powi(2) + t[0][1] * t[0][1]).sqrt();
    (m - d, m + d)
}

impl ConductivitySpec {
    pub fn isotropic(sigma_i: f64, sigma_e: f64) -> Self {
        Self {
            tensor_i: [[sigma_i, 0.0], [0.0, sigma_i]],
            tensor_i2: None,
            tensor_e: [[sigma_e, 0.0], [0.0, sigma_e]],
            modulation: None,
            alpha: None,
            beta: None,
        }
    }

    pub fn base_tensor(&self, d: Subdomain) -> Tensor {
        match d {
            Subdomain::I1 => self.tensor_i,
            Subdomain::I2 => self.tensor_i2.unwrap_or(self.tensor_i),
            Subdomain::E => self.tensor_e,
        }
    }

    /// Tensor at cell coordinates `y`.
    pub fn tensor_at(&self, d: Subdomain, y: [f64; 2], cell_lengths: (f64, f64)) -> Tensor {
        let t = self.base_tensor(d);
        match &self.modulation {
            None => t,
            Some(m) => {
                let f = 1.0
                    + m.amplitude * (2.0 * PI * y[0] / cell_lengths.0).cos() * (2.0 * PI * y[1] / cell_lengths.1).cos();
                [[f * t[0][0], f * t[0][1]], [f * t[1][0], f * t[1][1]]]
            }
        }
    }

    /// Checks symmetry and ellipticity; returns the ellipticity bounds in force.
    pub fn validate(&self) -> Result<(f64, f64)> {
        let amp = self.modulation.as_ref().map(|m| m.amplitude).unwrap_or(0.0);
        if !(amp.abs() < 1.0) {
            return Err(Error::InvalidConductivity(format!("modulation amplitude must satisfy |a| < 1, got {amp}")));
        }
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for d in Subdomain::ALL {
            let t = self.base_tensor(d);
            if t.iter().flatten().any(|x| !x.is_finite()) {
                return Err(Error::InvalidConductivity(format!("non-finite tensor for {d:?}")));
            }
            if t[0][1] != t[1][0] {
                return Err(Error::InvalidConductivity(format!("tensor for {d:?} is not symmetric: {t:?}")));
            }
            let (l, h) = eig2(&t);
            if !(l > 0.0) {
                return Err(Error::InvalidConductivity(format!("tensor for {d:?} is not positive definite: {t:?}")));
            }
            lo = lo.min(l * (1.0 - amp.abs()));
            hi = hi.max(h * (1.0 + amp.abs()));
        }
        let alpha = self.alpha.unwrap_or(lo);
        let beta = self.beta.unwrap_or(hi);
        if !(alpha > 0.0 && alpha <= beta) {
            return Err(Error::InvalidConductivity(format!("need 0 < alpha < beta, got ({alpha}, {beta})")));
        }
        if lo < alpha * (1.0 - 1e-12) || hi > beta * (1.0 + 1e-12) {
            return Err(Error::InvalidConductivity(format!(
                "eigenvalues span [{lo}, {hi}], outside declared bounds [{alpha}, {beta}]"
            )));
        }
        Ok((alpha, beta))
    }
}

/// Nodes and operators attached to one interface.
#[derive(Clone, Debug)]
pub struct InterfaceData {
    /// (inner vertex, outer vertex) per interface node.
    pub nodes: Vec<(usize, usize)>,
    /// Interface-node indices of each facet.
    pub facets: Vec<[usize; 2]>,
    pub lengths: Vec<f64>,
    /// 1D P1 mass matrix on the interface nodes.
    pub mass: Csr,
    /// Jump map: inner trace minus outer trace (m × N).
    pub diff: Csr,
    /// Selection of the inner and outer traces (m × N).
    pub inner_trace: Csr,
    pub outer_trace: Csr,
    /// Dᵀ B D (N × N).
    pub diff_mass: Csr,
}

impl InterfaceData {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.lengths.iter().sum()
    }

    /// D u.
    pub fn jump(&self, u: &[f64]) -> Vec<f64> {
        linalg::spmv(&self.diff, u)
    }
}

#[derive(Clone, Debug)]
pub struct DofLayout {
    pub n1: usize,
    pub n2: usize,
    pub ne: usize,
    /// Global potential index of each mesh vertex.
    pub global_of_vertex: Vec<usize>,
    /// Mesh vertex of each global potential index.
    pub vertex_of_global: Vec<usize>,
}

impl DofLayout {
    pub fn from_mesh(mesh: &MicroMesh) -> Self {
        let mut by_dom: [Vec<usize>; 3] = Default::default();
        for (v, d) in mesh.vertex_domain.iter().enumerate() {
            by_dom[*d as usize].push(v);
        }
        let mut vertex_of_global = Vec::with_capacity(mesh.vertices.len());
        for d in [Subdomain::I1, Subdomain::I2, Subdomain::E] {
            vertex_of_global.extend(&by_dom[d as usize]);
        }
        let mut global_of_vertex = vec![0; mesh.vertices.len()];
        for (g, &v) in vertex_of_global.iter().enumerate() {
            global_of_vertex[v] = g;
        }
        Self {
            n1: by_dom[Subdomain::I1 as usize].len(),
            n2: by_dom[Subdomain::I2 as usize].len(),
            ne: by_dom[Subdomain::E as usize].len(),
            global_of_vertex,
            vertex_of_global,
        }
    }

    pub fn n_potential(&self) -> usize {
        self.n1 + self.n2 + self.ne
    }

    pub fn block_range(&self, d: Subdomain) -> std::ops::Range<usize> {
        match d {
            Subdomain::I1 => 0..self.n1,
            Subdomain::I2 => self.n1..self.n1 + self.n2,
            Subdomain::E => self.n1 + self.n2..self.n_potential(),
        }
    }

    pub fn split<'a>(&self, u: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64]) {
        let (a, rest) = u.split_at(self.n1);
        let (b, c) = rest.split_at(self.n2);
        (a, b, c)
    }
}

#[derive(Clone, Debug)]
pub struct BlockOperator {
    pub layout: DofLayout,
    /// Stiffness blocks on local block numbering.
    pub k1: Csr,
    pub k2: Csr,
    pub ke: Csr,
    pub mvol1: Csr,
    pub mvol2: Csr,
    pub mvole: Csr,
    /// Block-diagonal stiffness and volume mass on the global numbering.
    pub stiffness: Csr,
    pub volume_mass: Csr,
    /// Unit-tensor stiffness, for H¹ seminorms.
    pub gradient_gram: Csr,
    pub gamma1: InterfaceData,
    pub gamma2: InterfaceData,
    pub gamma12: InterfaceData,
    /// Volume masses plus the trace masses of every field on every
    /// interface it touches: the mass part of the regularisation.
    pub regularization_mass: Csr,
    /// Representation of u ↦ ∫_{Ω_e} u_e.
    pub constraint: Vec<f64>,
    pub ellipticity: (f64, f64),
}

impl BlockOperator {
    pub fn interface(&self, which: Interface) -> &InterfaceData {
        match which {
            Interface::Gamma1 => &self.gamma1,
            Interface::Gamma2 => &self.gamma2,
            Interface::Gamma12 => &self.gamma12,
        }
    }

    pub fn n_potential(&self) -> usize {
        self.layout.n_potential()
    }

    pub fn b1(&self) -> &Csr {
        &self.gamma1.mass
    }

    pub fn b2(&self) -> &Csr {
        &self.gamma2.mass
    }

    pub fn b12(&self) -> &Csr {
        &self.gamma12.mass
    }
}

fn p1_gradients(p: [[f64; 2]; 3]) -> ([[f64; 2]; 3], f64) {
    let area = crate::geometry::signed_area(p);
    let mut g = [[0.0; 2]; 3];
    for i in 0..3 {
        let (a, b) = (p[(i + 1) % 3], p[(i + 2) % 3]);
        g[i] = [(a[1] - b[1]) / (2.0 * area), (b[0] - a[0]) / (2.0 * area)];
    }
    (g, area)
}

fn interface_data(
    mesh: &MicroMesh,
    layout: &DofLayout,
    facets: &[InterfaceFacet],
) -> InterfaceData {
    let n = layout.n_potential();
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut nodes = Vec::new();
    let mut fnodes = Vec::with_capacity(facets.len());
    let mut lengths = Vec::with_capacity(facets.len());
    for f in facets {
        let mut ids = [0usize; 2];
        for k in 0..2 {
            let key = (f.inner[k], f.outer[k]);
            ids[k] = *index.entry(key).or_insert_with(|| {
                nodes.push(key);
                nodes.len() - 1
            });
        }
        fnodes.push(ids);
        lengths.push(mesh.edge_length(f.inner));
    }
    let m = nodes.len();
    let mut mass = Triplets::symmetric(m);
    for (ids, l) in fnodes.iter().zip(&lengths) {
        for a in 0..2 {
            for b in 0..2 {
                mass.add(ids[a], ids[b], if a == b { l / 3.0 } else { l / 6.0 });
            }
        }
    }
    let mass = mass.build();
    let mut diff = Triplets::new(m, n);
    let mut inner = Triplets::new(m, n);
    let mut outer = Triplets::new(m, n);
    for (a, &(vi, vo)) in nodes.iter().enumerate() {
        let (gi, go) = (layout.global_of_vertex[vi], layout.global_of_vertex[vo]);
        diff.add(a, gi, 1.0);
        diff.add(a, go, -1.0);
        inner.add(a, gi, 1.0);
        outer.add(a, go, 1.0);
    }
    let diff = diff.build();
    let diff_mass = linalg::congruence(&mass, &diff);
    InterfaceData {
        nodes,
        facets: fnodes,
        lengths,
        mass,
        diff,
        inner_trace: inner.build(),
        outer_trace: outer.build(),
        diff_mass,
    }
}

/// Assembles every block of the discrete weak form.
pub fn assemble(mesh: &MicroMesh, cond: &ConductivitySpec) -> Result<BlockOperator> {
    let ellipticity = cond.validate()?;
    let layout = DofLayout::from_mesh(mesh);
    let n = layout.n_potential();
    let local = |v: usize| -> usize {
        let g = layout.global_of_vertex[v];
        g - layout.block_range(mesh.vertex_domain[v]).start
    };
    let sizes = [layout.n1, layout.n2, layout.ne];
    let mut kb: Vec<Triplets> = sizes.iter().map(|&s| Triplets::symmetric(s)).collect();
    let mut mb: Vec<Triplets> = sizes.iter().map(|&s| Triplets::symmetric(s)).collect();
    let mut gram = Triplets::symmetric(n);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let d = mesh.triangle_domain[t];
        let p = tri.map(|v| mesh.vertices[v]);
        let (g, area) = p1_gradients(p);
        if !(area > 0.0) {
            return Err(Error::Contract(format!("triangle {t} has nonpositive area {area}")));
        }
        let y = mesh.local_coords(mesh.triangle_centroid(t), mesh.triangle_cell[t]);
        let m = cond.tensor_at(d, y, mesh.cell.cell_lengths);
        let slot = match d {
            Subdomain::I1 => 0,
            Subdomain::I2 => 1,
            Subdomain::E => 2,
        };
        for a in 0..3 {
            let mga = [m[0][0] * g[a][0] + m[0][1] * g[a][1], m[1][0] * g[a][0] + m[1][1] * g[a][1]];
            for b in 0..3 {
                let (la, lb) = (local(tri[a]), local(tri[b]));
                kb[slot].add(la, lb, area * (mga[0] * g[b][0] + mga[1] * g[b][1]));
                mb[slot].add(la, lb, area * if a == b { 1.0 / 6.0 } else { 1.0 / 12.0 });
                gram.add(
                    layout.global_of_vertex[tri[a]],
                    layout.global_of_vertex[tri[b]],
                    area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]),
                );
            }
        }
    }
    let mut kb = kb.into_iter().map(Triplets::build);
    let (k1, k2, ke) = (kb.next().unwrap(), kb.next().unwrap(), kb.next().unwrap());
    let mut mb = mb.into_iter().map(Triplets::build);
    let (mvol1, mvol2, mvole) = (mb.next().unwrap(), mb.next().unwrap(), mb.next().unwrap());
    let stiffness = linalg::block_diag(&[&k1, &k2, &ke]);
    let volume_mass = linalg::block_diag(&[&mvol1, &mvol2, &mvole]);

    let gamma1 = interface_data(mesh, &layout, &mesh.facets_gamma1);
    let gamma2 = interface_data(mesh, &layout, &mesh.facets_gamma2);
    let gamma12 = interface_data(mesh, &layout, &mesh.facets_gamma12);

    let mut reg: Vec<(f64, Csr)> = vec![(1.0, volume_mass.clone())];
    for itf in [&gamma1, &gamma2, &gamma12] {
        reg.push((1.0, linalg::congruence(&itf.mass, &itf.inner_trace)));
        reg.push((1.0, linalg::congruence(&itf.mass, &itf.outer_trace)));
    }
    let reg_refs: Vec<(f64, &Csr)> = reg.iter().map(|(c, m)| (*c, m)).collect();
    let regularization_mass = linalg::lincomb(&reg_refs);

    let mut constraint = vec![0.0; n];
    let ones = vec![1.0; layout.ne];
    let ce = linalg::spmv(&mvole, &ones);
    constraint[layout.block_range(Subdomain::E)].copy_from_slice(&ce);

    Ok(BlockOperator {
        layout,
        k1,
        k2,
        ke,
        mvol1,
        mvol2,
        mvole,
        stiffness,
        volume_mass,
        gradient_gram: gram.build(),
        gamma1,
        gamma2,
        gamma12,
        regularization_mass,
        constraint,
        ellipticity,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepCoefficients {
    pub eps: f64,
    pub delta: f64,
    pub dt: f64,
    pub beta1: f64,
    pub g_gap: f64,
    pub c_ratio: f64,
}

/// Matrix of one linearly implicit step, kept in pieces.
#[derive(Clone, Debug)]
pub struct SystemMatrix {
    /// C = ε Σ Dₖᵀ Bₖ Dₖ + C_r ε Gᵀ B₁₂ G + δ M_δ (not divided by dt).
    pub capacitive: Csr,
    /// A = K + ε β1 Σ Dₖᵀ Bₖ Dₖ + ε C_r G_gap Gᵀ B₁₂ G.
    pub reaction: Csr,
    /// C/dt + A.
    pub matrix: Csr,
    pub constraint: Vec<f64>,
    pub coefficients: StepCoefficients,
}

impl SystemMatrix {
    /// C/dt as a separate matrix.
    pub fn capacitive_part(&self) -> Csr {
        linalg::lincomb(&[(1.0 / self.coefficients.dt, &self.capacitive)])
    }
}

pub fn build_system_matrix(op: &BlockOperator, c: StepCoefficients) -> SystemMatrix {
    let membranes = linalg::lincomb(&[(1.0, &op.gamma1.diff_mass), (1.0, &op.gamma2.diff_mass)]);
    let capacitive = linalg::lincomb(&[
        (c.eps, &membranes),
        (c.c_ratio * c.eps, &op.gamma12.diff_mass),
        (c.delta, &op.regularization_mass),
    ]);
    let reaction = linalg::lincomb(&[
        (1.0, &op.stiffness),
        (c.eps * c.beta1, &membranes),
        (c.eps * c.c_ratio * c.g_gap, &op.gamma12.diff_mass),
    ]);
    let matrix = linalg::lincomb(&[(1.0 / c.dt, &capacitive), (1.0, &reaction)]);
    SystemMatrix {
        capacitive,
        reaction,
        matrix,
        constraint: op.constraint.clone(),
        coefficients: c,
    }
}

/// ε (Σ Dₖᵀ Bₖ Dₖ + C_r Gᵀ B₁₂ G): the interface-only operator on potentials.
pub fn interface_operator(op: &BlockOperator, eps: f64, c_ratio: f64) -> Csr {
    linalg::lincomb(&[
        (eps, &op.gamma1.diff_mass),
        (eps, &op.gamma2.diff_mass),
        (eps * c_ratio, &op.gamma12.diff_mass),
    ])
}

/// The regularised Galerkin matrix 𝕄 = 𝕄₁ + ε𝕄₂ on `[u1 | u2 | ue | w1 | w2]`:
/// δ-weighted masses on the potentials, gating masses on w, plus the
/// interface operator.
pub fn regularized_matrix(op: &BlockOperator, eps: f64, delta: f64, c_ratio: f64) -> Csr {
    let m1 = linalg::block_diag(&[
        &linalg::lincomb(&[(delta, &op.regularization_mass)]),
        &op.gamma1.mass,
        &op.gamma2.mass,
    ]);
    let mut m2 = Triplets::new(m1.rows(), m1.cols());
    for (v, (i, j)) in interface_operator(op, eps, c_ratio).iter() {
        m2.add(i, j, *v);
    }
    linalg::lincomb(&[(1.0, &m1), (1.0, &m2.build())])
}

/// Σₖ ε∫_{Γᵏ}(u_i − u_e)² + C_r ε∫_{Γ¹²}(u₁ − u₂)², integrated facet by facet
/// from the vertex values without touching any assembled matrix.
pub fn interface_energy_direct(mesh: &MicroMesh, layout: &DofLayout, u: &[f64], eps: f64, c_ratio: f64) -> f64 {
    let jump_sq = |facets: &[InterfaceFacet]| -> f64 {
        facets
            .iter()
            .map(|f| {
                let d: Vec<f64> = (0..2)
                    .map(|k| u[layout.global_of_vertex[f.inner[k]]] - u[layout.global_of_vertex[f.outer[k]]])
                    .collect();
                mesh.edge_length(f.inner) / 3.0 * (d[0] * d[0] + d[0] * d[1] + d[1] * d[1])
            })
            .sum()
    };
    eps * (jump_sq(&mesh.facets_gamma1) + jump_sq(&mesh.facets_gamma2)) + eps * c_ratio * jump_sq(&mesh.facets_gamma12)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpdMode {
    Strict,
    Semidefinite,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpdReport {
    pub mode: SpdMode,
    pub dim: usize,
    pub norm: f64,
    pub min_pivot: Option<f64>,
    pub pivot_failed_at: Option<usize>,
    pub min_ritz: Option<f64>,
    pub max_ritz: Option<f64>,
    pub pass: bool,
}

pub const SEMIDEFINITE_RTOL: f64 = 1e-10;

pub fn check_spd(a: &Csr, mode: SpdMode) -> Result<SpdReport> {
    let asym = linalg::asymmetry(a);
    if asym != 0.0 {
        return Err(Error::Contract(format!("check_spd needs a symmetric matrix, max |A - A^T| = {asym:e}")));
    }
    let norm = linalg::norm_inf(a);
    let dim = a.rows();
    Ok(match mode {
        SpdMode::Strict => match EnvelopeCholesky::factor(a) {
            Ok(f) => SpdReport {
                mode,
                dim,
                norm,
                min_pivot: Some(f.min_pivot),
                pivot_failed_at: None,
                min_ritz: None,
                max_ritz: None,
                pass: true,
            },
            Err(e) => SpdReport {
                mode,
                dim,
                norm,
                min_pivot: Some(e.min_pivot),
                pivot_failed_at: Some(e.row),
                min_ritz: None,
                max_ritz: None,
                pass: false,
            },
        },
        SpdMode::Semidefinite => {
            let r = lanczos::ritz_extremes(a, 160, 0x5eed);
            SpdReport {
                mode,
                dim,
                norm,
                min_pivot: None,
                pivot_failed_at: None,
                min_ritz: Some(r.min),
                max_ritz: Some(r.max),
                pass: r.min >= -SEMIDEFINITE_RTOL * norm,
            }
        }
    })
}
