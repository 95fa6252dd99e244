//! Linearly implicit Euler time stepping.
//!
//! Per step: the gating variables are advanced from v^n, then one symmetric
//! solve gives all potentials with the capacitive, stiffness, β1-linear and
//! gap terms implicit and the rest of the cubic explicit. The extracellular
//! mean is pinned to zero by a Lagrange multiplier.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::assembly::{build_system_matrix, BlockOperator, StepCoefficients, SystemMatrix};
use crate::error::{Error, Result};
use crate::geometry::{MicroMesh, Subdomain};
use crate::ionics::{GapModel, GatingScheme, IonicModel};
use crate::linalg::{self, cg, cholesky::EnvelopeCholesky, Csr, Triplets};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LinearSolverKind {
    #[default]
    Direct,
    Cg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    #[default]
    Gamma1,
    Gamma2,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AppliedCurrent {
    #[default]
    Zero,
    Constant {
        amplitude: f64,
        #[serde(default)]
        target: Target,
    },
    Pulse {
        amplitude: f64,
        t_on: f64,
        t_off: f64,
        #[serde(default)]
        target: Target,
    },
}

impl AppliedCurrent {
    /// Applied current on (Γ¹, Γ²) at time t.
    pub fn at(&self, t: f64) -> (f64, f64) {
        let (a, target) = match *self {
            AppliedCurrent::Zero => return (0.0, 0.0),
            AppliedCurrent::Constant { amplitude, target } => (amplitude, target),
            AppliedCurrent::Pulse {
                amplitude,
                t_on,
                t_off,
                target,
            } => (if t >= t_on && t < t_off { amplitude } else { 0.0 }, target),
        };
        match target {
            Target::Gamma1 => (a, 0.0),
            Target::Gamma2 => (0.0, a),
            Target::Both => (a, a),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub eps: f64,
    pub delta: f64,
    pub dt: f64,
    pub t_end: f64,
    pub lin_tol: f64,
    pub lin_maxit: usize,
    pub gating_scheme: GatingScheme,
    pub linear_solver: LinearSolverKind,
    pub iapp: AppliedCurrent,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps: 1.0,
            delta: 0.0,
            dt: 0.01,
            t_end: 1.0,
            lin_tol: 1e-10,
            lin_maxit: 5000,
            gating_scheme: GatingScheme::ExplicitEuler,
            linear_solver: LinearSolverKind::Direct,
            iapp: AppliedCurrent::Zero,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.eps > 0.0
            && self.delta >= 0.0
            && self.dt > 0.0
            && self.lin_tol > 0.0
            && self.lin_tol < 1.0
            && self.lin_maxit > 0
            && [self.eps, self.delta, self.dt, self.t_end, self.lin_tol].iter().all(|x| x.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "solver needs eps > 0, delta >= 0, dt > 0, lin_tol in (0,1), lin_maxit > 0; got {self:?}"
            )))
        }
    }

    pub fn n_steps(&self, t0: f64) -> usize {
        ((self.t_end - t0) / self.dt).round().max(0.0) as usize
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub t: f64,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub ue: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
}

impl SystemState {
    pub fn zeros(op: &BlockOperator) -> Self {
        let l = &op.layout;
        Self {
            t: 0.0,
            u1: vec![0.0; l.n1],
            u2: vec![0.0; l.n2],
            ue: vec![0.0; l.ne],
            w1: vec![0.0; op.gamma1.len()],
            w2: vec![0.0; op.gamma2.len()],
        }
    }

    /// `[u1 | u2 | ue]`.
    pub fn potentials(&self) -> Vec<f64> {
        let mut u = Vec::with_capacity(self.u1.len() + self.u2.len() + self.ue.len());
        u.extend(&self.u1);
        u.extend(&self.u2);
        u.extend(&self.ue);
        u
    }

    pub fn set_potentials(&mut self, u: &[f64]) {
        let (n1, n2) = (self.u1.len(), self.u2.len());
        self.u1.copy_from_slice(&u[..n1]);
        self.u2.copy_from_slice(&u[n1..n1 + n2]);
        self.ue.copy_from_slice(&u[n1 + n2..]);
    }

    pub fn v1(&self, op: &BlockOperator) -> Vec<f64> {
        op.gamma1.jump(&self.potentials())
    }

    pub fn v2(&self, op: &BlockOperator) -> Vec<f64> {
        op.gamma2.jump(&self.potentials())
    }

    pub fn s(&self, op: &BlockOperator) -> Vec<f64> {
        op.gamma12.jump(&self.potentials())
    }

    /// Euclidean norm over every stored field.
    pub fn norm(&self) -> f64 {
        [&self.u1, &self.u2, &self.ue, &self.w1, &self.w2]
            .iter()
            .map(|v| linalg::dot(v, v))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        [&self.u1, &self.u2, &self.ue, &self.w1, &self.w2]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }

    /// Adds `c` to every potential (gating untouched).
    pub fn shift_potentials(&mut self, c: f64) {
        for v in [&mut self.u1, &mut self.u2, &mut self.ue] {
            v.iter_mut().for_each(|x| *x += c);
        }
    }
}

/// Initial datum on one interface, evaluated at physical coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    Constant { value: f64 },
    /// amplitude · exp(−|x − center|² / radius²)
    Bump { amplitude: f64, center: [f64; 2], radius: f64 },
}

impl Default for FieldSpec {
    fn default() -> Self {
        FieldSpec::Constant { value: 0.0 }
    }
}

impl FieldSpec {
    pub fn eval(&self, p: [f64; 2]) -> f64 {
        match *self {
            FieldSpec::Constant { value } => value,
            FieldSpec::Bump { amplitude, center, radius } => {
                let r2 = (p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2);
                amplitude * (-r2 / (radius * radius)).exp()
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    #[serde(default)]
    pub v1: FieldSpec,
    #[serde(default)]
    pub v2: FieldSpec,
    #[serde(default)]
    pub s: FieldSpec,
    #[serde(default)]
    pub w1: FieldSpec,
    #[serde(default)]
    pub w2: FieldSpec,
}

/// Builds the initial state: interface jumps from the specs, interior
/// potentials from the trace-constrained harmonic extension with ∫u_e = 0.
///
/// Where the gap junction meets both membranes its jump is already fixed by
/// the two membrane jumps, so the gap constraint is dropped there.
pub fn initialize(mesh: &MicroMesh, op: &BlockOperator, init: &InitialData) -> Result<SystemState> {
    let layout = &op.layout;
    let n = layout.n_potential();
    // parent[g] = Some((root, offset)): U[g] = U[root] + offset.
    let mut tie: Vec<Option<(usize, f64)>> = vec![None; n];
    let mut membrane_vertices = HashSet::new();
    for (itf, spec) in [(&op.gamma1, &init.v1), (&op.gamma2, &init.v2)] {
        for &(vi, vo) in &itf.nodes {
            let (gi, go) = (layout.global_of_vertex[vi], layout.global_of_vertex[vo]);
            tie[gi] = Some((go, spec.eval(mesh.vertices[vi])));
            membrane_vertices.insert(vi);
        }
    }
    for &(va, vb) in &op.gamma12.nodes {
        let (ga, gb) = (layout.global_of_vertex[va], layout.global_of_vertex[vb]);
        let s0 = init.s.eval(mesh.vertices[va]);
        match (membrane_vertices.contains(&va), membrane_vertices.contains(&vb)) {
            (true, true) => {}
            (true, false) => tie[gb] = Some((ga, -s0)),
            _ => tie[ga] = Some((gb, s0)),
        }
    }
    // Resolve to roots (chains have length at most one here, but be general).
    let mut root = vec![0usize; n];
    let mut offset = vec![0.0; n];
    for g in 0..n {
        let (mut r, mut o) = (g, 0.0);
        let mut hops = 0;
        while let Some((p, d)) = tie[r] {
            o += d;
            r = p;
            hops += 1;
            if hops > n {
                return Err(Error::Contract("cyclic trace constraints".into()));
            }
        }
        root[g] = r;
        offset[g] = o;
    }
    let mut zid = vec![usize::MAX; n];
    let mut nz = 0;
    for g in 0..n {
        if root[g] == g {
            zid[g] = nz;
            nz += 1;
        }
    }
    let mut p = Triplets::new(n, nz);
    for g in 0..n {
        p.add(g, zid[root[g]], 1.0);
    }
    let p = p.build();
    let reduced = linalg::congruence(&op.stiffness, &p);
    let kg = linalg::spmv(&op.stiffness, &offset);
    let rhs: Vec<f64> = linalg::spmv_t(&p, &kg).iter().map(|x| -x).collect();
    let anchor = zid[root[layout.block_range(Subdomain::E).start]];
    let z = solve_rank_one_regularized(&reduced, anchor, &rhs)?;
    let mut u: Vec<f64> = linalg::spmv(&p, &z).iter().zip(&offset).map(|(a, b)| a + b).collect();
    project_mean_zero(&op.constraint, &mut u);

    let mut state = SystemState::zeros(op);
    state.set_potentials(&u);
    for (w, itf, spec) in [(&mut state.w1, &op.gamma1, &init.w1), (&mut state.w2, &op.gamma2, &init.w2)] {
        for (k, &(vi, _)) in itf.nodes.iter().enumerate() {
            w[k] = spec.eval(mesh.vertices[vi]);
        }
    }
    Ok(state)
}

/// u ← u − (cᵀu / cᵀ1)·1.
fn project_mean_zero(c: &[f64], u: &mut [f64]) {
    let shift = linalg::dot(c, u) / c.iter().sum::<f64>();
    if shift != 0.0 {
        u.iter_mut().for_each(|x| *x -= shift);
    }
}

/// Solves S y = b for SPSD S with a one-dimensional kernel not orthogonal to
/// e_anchor by factoring S + σ e eᵀ.
fn solve_rank_one_regularized(s: &Csr, anchor: usize, b: &[f64]) -> Result<Vec<f64>> {
    let f = regularized_factor(s, anchor)?;
    Ok(f.solve(b))
}

fn regularized_factor(s: &Csr, anchor: usize) -> Result<EnvelopeCholesky> {
    let sigma = linalg::diagonal(s).into_iter().fold(0.0, f64::max).max(1.0);
    let mut e = Triplets::new(s.rows(), s.cols());
    e.add(anchor, anchor, sigma);
    let reg = linalg::lincomb(&[(1.0, s), (1.0, &e.build())]);
    EnvelopeCholesky::factor(&reg).map_err(|e| Error::SolverFailure {
        residual: f64::NAN,
        msg: format!("factorization broke down at row {} with pivot {:e}", e.row, e.pivot),
    })
}

/// Signed flux-balance residuals of one step, one per conducting domain.
/// Each is the sum of the interface currents leaving the domain plus the
/// volume terms, which vanishes for an exact solve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct FluxResiduals {
    /// Ω_i^1: Γ¹ and Γ¹² currents.
    pub omega_i1: f64,
    /// Ω_i^2: Γ² and Γ¹² currents.
    pub omega_i2: f64,
    /// Ω_e: Γ¹ and Γ² currents.
    pub omega_e: f64,
}

impl FluxResiduals {
    pub fn max_abs(&self) -> f64 {
        self.omega_i1.abs().max(self.omega_i2.abs()).max(self.omega_e.abs())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct StepReport {
    pub t: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub lambda: f64,
    pub flux: FluxResiduals,
    /// Total interface currents ∫_{Γ¹} I_m¹, ∫_{Γ²} I_m², ∫_{Γ¹²} I₁₂.
    pub currents: [f64; 3],
    pub state_norm: f64,
    pub max_change: f64,
}

enum Solver {
    Direct {
        factor: EnvelopeCholesky,
        /// S⁻¹c when S is nonsingular.
        s_inv_c: Option<Vec<f64>>,
    },
    Cg {
        s_inv_c: Option<Vec<f64>>,
    },
}

/// Owns the step matrix and its factorization for fixed coefficients.
pub struct Stepper<'a> {
    pub op: &'a BlockOperator,
    pub model: IonicModel,
    pub gap: GapModel,
    pub config: SolverConfig,
    pub system: SystemMatrix,
    solver: Solver,
    ones_c: f64,
}

impl<'a> Stepper<'a> {
    pub fn new(op: &'a BlockOperator, model: &IonicModel, gap: &GapModel, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        model.validate()?;
        gap.validate()?;
        let system = build_system_matrix(
            op,
            StepCoefficients {
                eps: config.eps,
                delta: config.delta,
                dt: config.dt,
                beta1: model.beta1,
                g_gap: gap.g_gap,
                c_ratio: gap.c_ratio,
            },
        );
        let singular = config.delta == 0.0;
        let anchor = op.layout.block_range(Subdomain::E).start;
        let solver = match config.linear_solver {
            LinearSolverKind::Direct => {
                let factor = if singular {
                    regularized_factor(&system.matrix, anchor)?
                } else {
                    EnvelopeCholesky::factor(&system.matrix).map_err(|e| Error::SolverFailure {
                        residual: f64::NAN,
                        msg: format!("step matrix not positive definite (pivot {:e} at row {})", e.pivot, e.row),
                    })?
                };
                let s_inv_c = (!singular).then(|| factor.solve(&system.constraint));
                Solver::Direct { factor, s_inv_c }
            }
            LinearSolverKind::Cg => {
                let s_inv_c = if singular {
                    None
                } else {
                    let out = cg::pcg(&system.matrix, &system.constraint, None, config.lin_tol * 1e-2, config.lin_maxit);
                    if !out.converged {
                        return Err(Error::SolverFailure {
                            residual: out.relative_residual,
                            msg: "CG did not converge on the constraint vector".into(),
                        });
                    }
                    Some(out.x)
                };
                Solver::Cg { s_inv_c }
            }
        };
        let ones_c = system.constraint.iter().sum();
        Ok(Self {
            op,
            model: model.clone(),
            gap: gap.clone(),
            config: config.clone(),
            system,
            solver,
            ones_c,
        })
    }

    /// Solves [S c; cᵀ 0][x; λ] = [b; 0]; returns (x, λ, iterations).
    pub fn solve_bordered(&self, b: &[f64]) -> Result<(Vec<f64>, f64, usize)> {
        let c = &self.system.constraint;
        let tol = self.config.lin_tol;
        match &self.solver {
            Solver::Direct { factor, s_inv_c: None } => {
                let lambda = b.iter().sum::<f64>() / self.ones_c;
                let rhs: Vec<f64> = b.iter().zip(c).map(|(bi, ci)| bi - lambda * ci).collect();
                let mut x = factor.solve(&rhs);
                project_mean_zero(c, &mut x);
                Ok((x, lambda, 1))
            }
            Solver::Direct { factor, s_inv_c: Some(sc) } => {
                let xb = factor.solve(b);
                let lambda = linalg::dot(c, &xb) / linalg::dot(c, sc);
                let x = xb.iter().zip(sc).map(|(p, q)| p - lambda * q).collect();
                Ok((x, lambda, 1))
            }
            Solver::Cg { s_inv_c: None } => {
                let lambda = b.iter().sum::<f64>() / self.ones_c;
                let rhs: Vec<f64> = b.iter().zip(c).map(|(bi, ci)| bi - lambda * ci).collect();
                let out = cg::pcg(&self.system.matrix, &rhs, None, tol * 1e-2, self.config.lin_maxit);
                if !out.converged {
                    return Err(Error::SolverFailure {
                        residual: out.relative_residual,
                        msg: format!("CG stagnated after {} iterations", out.iterations),
                    });
                }
                let mut x = out.x;
                project_mean_zero(c, &mut x);
                Ok((x, lambda, out.iterations))
            }
            Solver::Cg { s_inv_c: Some(sc) } => {
                let out = cg::pcg(&self.system.matrix, b, None, tol * 1e-2, self.config.lin_maxit);
                if !out.converged {
                    return Err(Error::SolverFailure {
                        residual: out.relative_residual,
                        msg: format!("CG stagnated after {} iterations", out.iterations),
                    });
                }
                let lambda = linalg::dot(c, &out.x) / linalg::dot(c, sc);
                let x = out.x.iter().zip(sc).map(|(p, q)| p - lambda * q).collect();
                Ok((x, lambda, out.iterations))
            }
        }
    }

    /// Nodal explicit part of the membrane current: I_a(v) − β1 v + I_b(w).
    fn explicit_current(&self, v: &[f64], w: &[f64]) -> Vec<f64> {
        let m = &self.model;
        v.iter()
            .zip(w)
            .map(|(&vi, &wi)| m.i_a(vi) - m.beta1 * vi + m.i_b(wi))
            .collect()
    }

    pub fn step(&self, state: &SystemState) -> Result<(SystemState, StepReport)> {
        let op = self.op;
        let cfg = &self.config;
        let (eps, dt) = (cfg.eps, cfg.dt);
        let u = state.potentials();
        let v1 = op.gamma1.jump(&u);
        let v2 = op.gamma2.jump(&u);

        let gate = |v: &[f64], w: &[f64]| -> Vec<f64> {
            v.iter()
                .zip(w)
                .map(|(&vi, &wi)| self.model.gating_step(vi, wi, dt, cfg.gating_scheme))
                .collect()
        };
        let w1n = gate(&v1, &state.w1);
        let w2n = gate(&v2, &state.w2);

        let (ia1, ia2) = cfg.iapp.at(state.t);
        let j1 = self.explicit_current(&v1, &w1n);
        let j2 = self.explicit_current(&v2, &w2n);
        let f1: Vec<f64> = j1.iter().map(|j| ia1 - j).collect();
        let f2: Vec<f64> = j2.iter().map(|j| ia2 - j).collect();

        let mut b = linalg::spmv(&self.system.capacitive, &u);
        b.iter_mut().for_each(|x| *x /= dt);
        for (itf, f) in [(&op.gamma1, &f1), (&op.gamma2, &f2)] {
            let bf = linalg::spmv(&itf.mass, f);
            let t = linalg::spmv_t(&itf.diff, &bf);
            linalg::axpy(eps, &t, &mut b);
        }

        let (un, lambda, iterations) = self.solve_bordered(&b)?;
        let mut r = linalg::spmv(&self.system.matrix, &un);
        for ((ri, bi), ci) in r.iter_mut().zip(&b).zip(&self.system.constraint) {
            *ri = bi - *ri - lambda * ci;
        }
        let bnorm = linalg::norm2(&b);
        let residual = if bnorm > 0.0 { linalg::norm2(&r) / bnorm } else { linalg::norm2(&r) };
        let converged = residual <= cfg.lin_tol;

        let mut next = SystemState {
            t: state.t + dt,
            u1: Vec::new(),
            u2: Vec::new(),
            ue: Vec::new(),
            w1: w1n,
            w2: w2n,
        };
        next.u1 = vec![0.0; state.u1.len()];
        next.u2 = vec![0.0; state.u2.len()];
        next.ue = vec![0.0; state.ue.len()];
        next.set_potentials(&un);
        if !next.is_finite() {
            return Err(Error::Divergence { t: next.t });
        }
        if !converged {
            return Err(Error::SolverFailure {
                residual,
                msg: format!("step residual above lin_tol = {:e}", cfg.lin_tol),
            });
        }

        let (currents, flux) = self.flux_balance(state, &next, lambda);
        let max_change = u.iter().zip(&un).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let report = StepReport {
            t: next.t,
            iterations,
            residual,
            converged,
            lambda,
            flux,
            currents,
            state_norm: next.norm(),
            max_change,
        };
        Ok((next, report))
    }

    /// Interface currents recomputed from the interface laws and summed per
    /// domain against the bulk terms.
    pub fn flux_balance(&self, old: &SystemState, new: &SystemState, lambda: f64) -> ([f64; 3], FluxResiduals) {
        let op = self.op;
        let cfg = &self.config;
        let m = &self.model;
        let (eps, dt) = (cfg.eps, cfg.dt);
        let (u, un) = (old.potentials(), new.potentials());
        let (ia1, ia2) = cfg.iapp.at(old.t);
        let membrane = |itf: &crate::assembly::InterfaceData, w: &[f64], iapp: f64| -> f64 {
            let v = itf.jump(&u);
            let vn = itf.jump(&un);
            let density: Vec<f64> = (0..v.len())
                .map(|k| {
                    (vn[k] - v[k]) / dt + m.beta1 * vn[k] + (m.i_a(v[k]) - m.beta1 * v[k]) + m.i_b(w[k]) - iapp
                })
                .collect();
            eps * linalg::spmv(&itf.mass, &density).iter().sum::<f64>()
        };
        let im1 = membrane(&op.gamma1, &new.w1, ia1);
        let im2 = membrane(&op.gamma2, &new.w2, ia2);
        let s = op.gamma12.jump(&u);
        let sn = op.gamma12.jump(&un);
        let gd: Vec<f64> = (0..s.len())
            .map(|k| (sn[k] - s[k]) / dt + self.gap.current(sn[k]))
            .collect();
        let i12 = self.gap.c_ratio * eps * linalg::spmv(&op.gamma12.mass, &gd).iter().sum::<f64>();

        let du: Vec<f64> = un.iter().zip(&u).map(|(a, b)| (a - b) / dt).collect();
        let mut bulk = linalg::spmv(&op.stiffness, &un);
        if cfg.delta > 0.0 {
            let md = linalg::spmv(&op.regularization_mass, &du);
            linalg::axpy(cfg.delta, &md, &mut bulk);
        }
        let block_sum = |d: Subdomain| bulk[op.layout.block_range(d)].iter().sum::<f64>();
        let flux = FluxResiduals {
            omega_i1: im1 + i12 + block_sum(Subdomain::I1),
            omega_i2: im2 - i12 + block_sum(Subdomain::I2),
            omega_e: -im1 - im2 + block_sum(Subdomain::E) + lambda * self.ones_c,
        };
        ([im1, im2, i12], flux)
    }

    /// Advances to `config.t_end`, calling `probe` on the initial state and
    /// after every step.
    pub fn run<F>(&self, state: SystemState, mut probe: F) -> Result<SystemState>
    where
        F: FnMut(&SystemState, Option<&StepReport>) -> Result<()>,
    {
        let steps = self.config.n_steps(state.t);
        self.run_steps(state, steps, &mut probe)
    }

    pub fn run_steps<F>(&self, mut state: SystemState, steps: usize, probe: &mut F) -> Result<SystemState>
    where
        F: FnMut(&SystemState, Option<&StepReport>) -> Result<()>,
    {
        probe(&state, None)?;
        for _ in 0..steps {
            let t = state.t;
            let (next, report) = self.step(&state).map_err(|e| Error::AtTime { t, source: Box::new(e) })?;
            probe(&next, Some(&report))?;
            state = next;
        }
        Ok(state)
    }
}

/// Snapshots every `stride` steps plus all step reports.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub stride: usize,
    pub dt: f64,
    pub snapshots: Vec<SystemState>,
    pub reports: Vec<StepReport>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&SystemState> {
        self.snapshots.last()
    }
}

/// Runs to `t_end` and records a trajectory.
pub fn run(
    op: &BlockOperator,
    model: &IonicModel,
    gap: &GapModel,
    config: &SolverConfig,
    state: SystemState,
    stride: usize,
) -> Result<(SystemState, Trajectory)> {
    let stepper = Stepper::new(op, model, gap, config)?;
    let stride = stride.max(1);
    let mut traj = Trajectory {
        stride,
        dt: config.dt,
        ..Default::default()
    };
    let mut count = 0usize;
    let fin = stepper.run(state, |s, rep| {
        if let Some(r) = rep {
            traj.reports.push(r.clone());
        }
        if count % stride == 0 {
            traj.snapshots.push(s.clone());
        }
        count += 1;
        Ok(())
    })?;
    Ok((fin, traj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble, ConductivitySpec};
    use crate::geometry::{build_unit_cell, UnitCellSpec};

    fn setup(density: usize) -> (MicroMesh, BlockOperator) {
        let mesh = build_unit_cell(&UnitCellSpec::new((1.0, 1.0), 0.25, 0.5, density)).unwrap();
        let op = assemble(&mesh, &ConductivitySpec::default()).unwrap();
        (mesh, op)
    }

    #[test]
    fn zero_data_gives_zero_state() {
        let (mesh, op) = setup(4);
        let s = initialize(&mesh, &op, &InitialData::default()).unwrap();
        assert_eq!(s, SystemState::zeros(&op));
    }

    #[test]
    fn initial_membrane_trace_is_imposed() {
        let (mesh, op) = setup(4);
        let init = InitialData {
            v1: FieldSpec::Constant { value: 0.7 },
            ..Default::default()
        };
        let s = initialize(&mesh, &op, &init).unwrap();
        for v in s.v1(&op) {
            assert!((v - 0.7).abs() < 1e-12);
        }
        for v in s.v2(&op) {
            assert!(v.abs() < 1e-12);
        }
        assert!(linalg::dot(&op.constraint, &s.potentials()).abs() < 1e-13);
    }

    #[test]
    fn run_counts_steps_and_times() {
        let (mesh, op) = setup(4);
        let cfg = SolverConfig { dt: 0.1, t_end: 0.3, ..Default::default() };
        let s0 = initialize(&mesh, &op, &InitialData::default()).unwrap();
        let (fin, traj) = run(&op, &IonicModel::default(), &GapModel::default(), &cfg, s0, 1).unwrap();
        assert_eq!(traj.reports.len(), 3);
        assert_eq!(traj.snapshots.len(), 4);
        assert!(traj.snapshots.windows(2).all(|w| w[1].t > w[0].t));
        assert!((fin.t - 0.3).abs() < 1e-12);
    }

    #[test]
    fn stimulus_raises_mean_potential() {
        let (mesh, op) = setup(4);
        for amp in [1.0, -1.0] {
            let cfg = SolverConfig {
                dt: 0.05,
                t_end: 0.05,
                iapp: AppliedCurrent::Constant { amplitude: amp, target: Target::Gamma1 },
                ..Default::default()
            };
            let s0 = initialize(&mesh, &op, &InitialData::default()).unwrap();
            let st = Stepper::new(&op, &IonicModel::default(), &GapModel::default(), &cfg).unwrap();
            let (s1, _) = st.step(&s0).unwrap();
            let mean: f64 = linalg::spmv(&op.gamma1.mass, &s1.v1(&op)).iter().sum();
            assert_eq!(mean.signum(), amp);
        }
    }
}
