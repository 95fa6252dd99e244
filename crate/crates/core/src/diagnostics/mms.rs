//! Manufactured solutions for the stationary step operator.
//!
//! One solve of S U + λc = F with S the step matrix (δ = 0) is the discrete
//! form of
//!
//! ```text
//! −Δu_d = f_d in each medium,
//! ∂_n u_i (φ_i) − ∂_n u_e (φ_e) + a_m v (φ_i − φ_e) on each membrane,
//! ∂_n u_1 (φ_1) − ∂_n u_2 (φ_2) + a_g s (φ_1 − φ_2) on the gap junction,
//! ```
//!
//! with a_m = ε(1/dt + β1) and a_g = C_r ε(1/dt + G), so every exact field
//! defines its own load vector. Unit conductivities throughout.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::assembly::{assemble, BlockOperator, ConductivitySpec};
use crate::diagnostics::energy::GAUSS3;
use crate::error::Result;
use crate::geometry::{build_unit_cell, MicroMesh, Subdomain, UnitCellSpec};
use crate::ionics::{GapModel, IonicModel};
use crate::stepper::{SolverConfig, Stepper};

/// Degree-5 seven-point rule on the reference triangle (barycentric, weight).
const TRI7: [([f64; 3], f64); 7] = [
    ([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 0.225),
    ([0.059_715_871_789_770, 0.470_142_064_105_115, 0.470_142_064_105_115], 0.132_394_152_788_506),
    ([0.470_142_064_105_115, 0.059_715_871_789_770, 0.470_142_064_105_115], 0.132_394_152_788_506),
    ([0.470_142_064_105_115, 0.470_142_064_105_115, 0.059_715_871_789_770], 0.132_394_152_788_506),
    ([0.797_426_985_353_087, 0.101_286_507_323_456, 0.101_286_507_323_456], 0.125_939_180_544_827),
    ([0.101_286_507_323_456, 0.797_426_985_353_087, 0.101_286_507_323_456], 0.125_939_180_544_827),
    ([0.101_286_507_323_456, 0.101_286_507_323_456, 0.797_426_985_353_087], 0.125_939_180_544_827),
];

/// Exact potentials (u₁, u₂, u_e).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MmsCase {
    /// One constant per medium.
    Constant { values: [f64; 3] },
    /// u_e = g·x, u_k = g·x + offsets[k]; fluxes match across every interface.
    Linear { gradient: [f64; 2], offsets: [f64; 2] },
    /// u_e = ψ = cos(πx/X) cos(πy/Y); u_k = ψ + A_k cos-bump on the cell
    /// rectangle + B_k, with zero normal derivative of the bump on its edges.
    Trigonometric { amplitudes: [f64; 2], offsets: [f64; 2] },
}

impl Default for MmsCase {
    fn default() -> Self {
        MmsCase::Trigonometric {
            amplitudes: [0.5, -0.3],
            offsets: [0.2, -0.1],
        }
    }
}

struct Exact {
    case: MmsCase,
    size: [f64; 2],
    /// (lower-left, extent) of the I1 and I2 rectangles.
    rects: [([f64; 2], [f64; 2]); 2],
}

impl Exact {
    fn new(case: &MmsCase, cell: &UnitCellSpec) -> Self {
        let ([x0, x1], [y0, y1]) = cell.inner_box();
        let split = cell.split_x();
        Self {
            case: case.clone(),
            size: [cell.cell_lengths.0, cell.cell_lengths.1],
            rects: [([x0, y0], [split - x0, y1 - y0]), ([split, y0], [x1 - split, y1 - y0])],
        }
    }

    fn k(d: Subdomain) -> Option<usize> {
        match d {
            Subdomain::I1 => Some(0),
            Subdomain::I2 => Some(1),
            Subdomain::E => None,
        }
    }

    /// Value, gradient and Laplacian.
    fn eval(&self, d: Subdomain, p: [f64; 2]) -> (f64, [f64; 2], f64) {
        match &self.case {
            MmsCase::Constant { values } => (values[d as usize], [0.0, 0.0], 0.0),
            MmsCase::Linear { gradient, offsets } => {
                let base = gradient[0] * p[0] + gradient[1] * p[1];
                let off = Self::k(d).map_or(0.0, |k| offsets[k]);
                (base + off, *gradient, 0.0)
            }
            MmsCase::Trigonometric { amplitudes, offsets } => {
                let (kx, ky) = (PI / self.size[0], PI / self.size[1]);
                let (cx, sx) = ((kx * p[0]).cos(), (kx * p[0]).sin());
                let (cy, sy) = ((ky * p[1]).cos(), (ky * p[1]).sin());
                let mut val = cx * cy;
                let mut grad = [-kx * sx * cy, -ky * cx * sy];
                let mut lap = -(kx * kx + ky * ky) * val;
                if let Some(k) = Self::k(d) {
                    let (o, e) = self.rects[k];
                    let (bx, by) = (PI / e[0], PI / e[1]);
                    let (qx, rx) = ((bx * (p[0] - o[0])).cos(), (bx * (p[0] - o[0])).sin());
                    let (qy, ry) = ((by * (p[1] - o[1])).cos(), (by * (p[1] - o[1])).sin());
                    let a = amplitudes[k];
                    val += a * qx * qy + offsets[k];
                    grad[0] += -a * bx * rx * qy;
                    grad[1] += -a * by * qx * ry;
                    lap += -(bx * bx + by * by) * a * qx * qy;
                }
                (val, grad, lap)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MmsErrors {
    pub density: usize,
    pub h: f64,
    pub dofs: usize,
    /// ‖u_h − u‖_{L²} over all three media, u shifted to the discrete gauge.
    pub err_u: f64,
    /// ‖v_h − v‖_{L²} over both membranes.
    pub err_v: f64,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MmsReport {
    pub case: MmsCase,
    pub rows: Vec<MmsErrors>,
    /// Least-squares slope of log err_u against log h (the observed order).
    pub slope_u: f64,
    pub slope_v: f64,
}

impl MmsReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("density,h,dofs,err_u,err_v\n");
        for r in &self.rows {
            s.push_str(&format!("{},{:.6e},{},{:.12e},{:.12e}\n", r.density, r.h, r.dofs, r.err_u, r.err_v));
        }
        s
    }

    pub fn max_err_u(&self) -> f64 {
        self.rows.iter().map(|r| r.err_u).fold(0.0, f64::max)
    }
}

fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Solver settings used for the manufactured problems: ε = 1, dt = 0.1, δ = 0.
pub fn mms_solver_config() -> SolverConfig {
    SolverConfig {
        eps: 1.0,
        delta: 0.0,
        dt: 0.1,
        lin_tol: 1e-12,
        ..Default::default()
    }
}

fn outward_normal(mesh: &MicroMesh, a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    let (lx, ly) = mesh.domain_size();
    let m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    let tol = 1e-9 * lx.max(ly);
    if m[0].abs() < tol {
        [-1.0, 0.0]
    } else if (m[0] - lx).abs() < tol {
        [1.0, 0.0]
    } else if m[1].abs() < tol {
        [0.0, -1.0]
    } else {
        [0.0, 1.0]
    }
}

fn dotn(g: [f64; 2], n: [f64; 2]) -> f64 {
    g[0] * n[0] + g[1] * n[1]
}

fn load_vector(mesh: &MicroMesh, op: &BlockOperator, ex: &Exact, a_m: f64, a_g: f64) -> Vec<f64> {
    let g = &op.layout.global_of_vertex;
    let mut f = vec![0.0; op.n_potential()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let d = mesh.triangle_domain[t];
        let area = mesh.triangle_area(t);
        let p = tri.map(|v| mesh.vertices[v]);
        for (bary, w) in TRI7 {
            let x = [
                bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0],
                bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1],
            ];
            let (_, _, lap) = ex.eval(d, x);
            for k in 0..3 {
                f[g[tri[k]]] += w * area * (-lap) * bary[k];
            }
        }
    }
    let facet_sets = [
        (&mesh.facets_gamma1, Subdomain::I1, Subdomain::E, a_m),
        (&mesh.facets_gamma2, Subdomain::I2, Subdomain::E, a_m),
        (&mesh.facets_gamma12, Subdomain::I1, Subdomain::I2, a_g),
    ];
    for (facets, din, dout, coef) in facet_sets {
        for fc in facets.iter() {
            let (pa, pb) = (mesh.vertices[fc.inner[0]], mesh.vertices[fc.inner[1]]);
            let len = mesh.edge_length(fc.inner);
            for (s, w) in GAUSS3 {
                let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                let (ui, gi, _) = ex.eval(din, x);
                let (uo, go, _) = ex.eval(dout, x);
                let jump = coef * (ui - uo);
                let inner_load = dotn(gi, fc.normal) + jump;
                let outer_load = -dotn(go, fc.normal) - jump;
                for (k, phi) in [(0, 1.0 - s), (1, s)] {
                    f[g[fc.inner[k]]] += w * len * phi * inner_load;
                    f[g[fc.outer[k]]] += w * len * phi * outer_load;
                }
            }
        }
    }
    for e in &mesh.exterior_facets {
        let (pa, pb) = (mesh.vertices[e[0]], mesh.vertices[e[1]]);
        let n = outward_normal(mesh, pa, pb);
        let len = mesh.edge_length(*e);
        for (s, w) in GAUSS3 {
            let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            let (_, ge, _) = ex.eval(Subdomain::E, x);
            for (k, phi) in [(0, 1.0 - s), (1, s)] {
                f[g[e[k]]] += w * len * phi * dotn(ge, n);
            }
        }
    }
    f
}

/// Solves one manufactured problem on the reference cell at `density`.
pub fn mms_solve(cell: &UnitCellSpec, density: usize, case: &MmsCase) -> Result<MmsErrors> {
    let spec = UnitCellSpec {
        mesh_density: density,
        ..cell.clone()
    };
    let mesh = build_unit_cell(&spec)?;
    let op = assemble(&mesh, &ConductivitySpec::isotropic(1.0, 1.0))?;
    let model = IonicModel::default();
    let gap = GapModel::default();
    let cfg = mms_solver_config();
    let stepper = Stepper::new(&op, &model, &gap, &cfg)?;
    let c = stepper.system.coefficients;
    let a_m = c.eps * (1.0 / c.dt + c.beta1);
    let a_g = c.c_ratio * c.eps * (1.0 / c.dt + c.g_gap);
    let ex = Exact::new(case, &spec);
    let f = load_vector(&mesh, &op, &ex, a_m, a_g);
    let (uh, lambda, _) = stepper.solve_bordered(&f)?;
    let g = &op.layout.global_of_vertex;

    // Gauge: the discrete u_e has zero mean, so shift the exact field alike.
    let mut mean_e = 0.0;
    let mut area_e = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if mesh.triangle_domain[t] != Subdomain::E {
            continue;
        }
        let area = mesh.triangle_area(t);
        let p = tri.map(|v| mesh.vertices[v]);
        for (bary, w) in TRI7 {
            let x = [
                bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0],
                bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1],
            ];
            mean_e += w * area * ex.eval(Subdomain::E, x).0;
        }
        area_e += area;
    }
    let shift = mean_e / area_e;

    let mut err_u = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let d = mesh.triangle_domain[t];
        let area = mesh.triangle_area(t);
        let p = tri.map(|v| mesh.vertices[v]);
        let vals = tri.map(|v| uh[g[v]]);
        for (bary, w) in TRI7 {
            let x = [
                bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0],
                bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1],
            ];
            let uhx = bary[0] * vals[0] + bary[1] * vals[1] + bary[2] * vals[2];
            let e = uhx - (ex.eval(d, x).0 - shift);
            err_u += w * area * e * e;
        }
    }
    let mut err_v = 0.0;
    for (facets, din) in [(&mesh.facets_gamma1, Subdomain::I1), (&mesh.facets_gamma2, Subdomain::I2)] {
        for fc in facets.iter() {
            let (pa, pb) = (mesh.vertices[fc.inner[0]], mesh.vertices[fc.inner[1]]);
            let len = mesh.edge_length(fc.inner);
            let vh = [0, 1].map(|k| uh[g[fc.inner[k]]] - uh[g[fc.outer[k]]]);
            for (s, w) in GAUSS3 {
                let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
                let v = ex.eval(din, x).0 - ex.eval(Subdomain::E, x).0;
                let e = (1.0 - s) * vh[0] + s * vh[1] - v;
                err_v += w * len * e * e;
            }
        }
    }
    Ok(MmsErrors {
        density,
        h: spec.cell_lengths.0.max(spec.cell_lengths.1) / density as f64,
        dofs: op.n_potential(),
        err_u: err_u.sqrt(),
        err_v: err_v.sqrt(),
        lambda,
    })
}

/// Error table and fitted slopes over `densities`.
pub fn mms_convergence(cell: &UnitCellSpec, case: &MmsCase, densities: &[usize]) -> Result<MmsReport> {
    let rows = densities
        .iter()
        .map(|&d| mms_solve(cell, d, case))
        .collect::<Result<Vec<_>>>()?;
    let lh: Vec<f64> = rows.iter().map(|r| r.h.ln()).collect();
    let slope = |f: &dyn Fn(&MmsErrors) -> f64| -> f64 {
        if rows.len() < 2 {
            return f64::NAN;
        }
        let le: Vec<f64> = rows.iter().map(|r| f(r).max(f64::MIN_POSITIVE).ln()).collect();
        ls_slope(&lh, &le)
    };
    let slope_u = slope(&|r| r.err_u);
    let slope_v = slope(&|r| r.err_v);
    Ok(MmsReport {
        case: case.clone(),
        rows,
        slope_u,
        slope_v,
    })
}
