//! Acceptance suite: one line per criterion, non-zero exit if any fails.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tridomain::assembly::{
    assemble, build_system_matrix, check_spd, interface_operator, regularized_matrix, BlockOperator, ConductivitySpec,
    InterfaceData, SpdMode, StepCoefficients,
};
use tridomain::diagnostics::{
    apriori::{apriori_monitor, relative_spread},
    delta_limit, energy,
    mms::{mms_convergence, MmsCase},
    nondimensionalize, stability_experiment, PhysicalUnits,
};
use tridomain::geometry::{build_unit_cell, tile, InterfaceFacet, MicroMesh, TilingSpec, UnitCellSpec};
use tridomain::ionics::{certify_assumptions, GapModel, IonicMode, IonicModel};
use tridomain::linalg;
use tridomain::stepper::{
    initialize, run, AppliedCurrent, FieldSpec, InitialData, SolverConfig, Stepper, SystemState, Target,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn mesh(density: usize, counts: (usize, usize), eps: f64) -> (MicroMesh, BlockOperator) {
    let cell = build_unit_cell(&UnitCellSpec::new((1.0, 1.0), 0.25, 0.5, density)).unwrap();
    let mesh = tile(&cell, &TilingSpec { counts, epsilon: eps }).unwrap();
    let op = assemble(&mesh, &ConductivitySpec::default()).unwrap();
    (mesh, op)
}

fn stimulus_data() -> InitialData {
    InitialData {
        v1: FieldSpec::Bump {
            amplitude: 0.8,
            center: [0.4, 0.5],
            radius: 0.2,
        },
        w1: FieldSpec::Constant { value: 0.05 },
        ..Default::default()
    }
}

const GAUSS: [(f64, f64); 3] = [(0.11270166537925831, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.8872983346207417, 5.0 / 18.0)];

/// ∫ of the square of the linear function with end values a, b.
fn segment_sq(len: f64, a: f64, b: f64) -> f64 {
    GAUSS.iter().map(|&(s, w)| w * len * ((1.0 - s) * a + s * b).powi(2)).sum()
}

fn seg_len(mesh: &MicroMesh, e: [usize; 2]) -> f64 {
    let (p, q) = (mesh.vertices[e[0]], mesh.vertices[e[1]]);
    ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt()
}

/// ∫ (inner − outer)² over the facets.
fn jump_sq(mesh: &MicroMesh, g: &[usize], u: &[f64], facets: &[InterfaceFacet]) -> f64 {
    facets
        .iter()
        .map(|f| {
            let d = [0, 1].map(|k| u[g[f.inner[k]]] - u[g[f.outer[k]]]);
            segment_sq(seg_len(mesh, f.inner), d[0], d[1])
        })
        .sum()
}

/// ∫ inner² + ∫ outer² over the facets.
fn traces_sq(mesh: &MicroMesh, g: &[usize], u: &[f64], facets: &[InterfaceFacet]) -> f64 {
    facets
        .iter()
        .map(|f| {
            let len = seg_len(mesh, f.inner);
            segment_sq(len, u[g[f.inner[0]]], u[g[f.inner[1]]]) + segment_sq(len, u[g[f.outer[0]]], u[g[f.outer[1]]])
        })
        .sum()
}

/// ∫ w² on a membrane, w indexed by interface node.
fn gating_sq(mesh: &MicroMesh, itf: &InterfaceData, w: &[f64], facets: &[InterfaceFacet]) -> f64 {
    let node: HashMap<usize, usize> = itf.nodes.iter().enumerate().map(|(k, &(vi, _))| (vi, k)).collect();
    facets
        .iter()
        .map(|f| segment_sq(seg_len(mesh, f.inner), w[node[&f.inner[0]]], w[node[&f.inner[1]]]))
        .sum()
}

/// ∫ u² over all triangles from vertex values.
fn volume_sq(mesh: &MicroMesh, g: &[usize], u: &[f64]) -> f64 {
    mesh.triangles
        .iter()
        .enumerate()
        .map(|(t, tri)| {
            let a = tri.map(|v| u[g[v]]);
            let sum: f64 = a.iter().sum();
            mesh.triangle_area(t) / 12.0 * (a.iter().map(|x| x * x).sum::<f64>() + sum * sum)
        })
        .sum()
}

/// The quadratic form of the regularised Galerkin matrix, term by term.
fn galerkin_expansion(m: &MicroMesh, op: &BlockOperator, x: &[f64], eps: f64, delta: f64, c_ratio: f64) -> f64 {
    let g = &op.layout.global_of_vertex;
    let n = op.n_potential();
    let (u, w1, w2) = (&x[..n], &x[n..n + op.gamma1.len()], &x[n + op.gamma1.len()..]);
    let reg = volume_sq(m, g, u)
        + traces_sq(m, g, u, &m.facets_gamma1)
        + traces_sq(m, g, u, &m.facets_gamma2)
        + traces_sq(m, g, u, &m.facets_gamma12);
    let gating = gating_sq(m, &op.gamma1, w1, &m.facets_gamma1) + gating_sq(m, &op.gamma2, w2, &m.facets_gamma2);
    let jumps = eps * (jump_sq(m, g, u, &m.facets_gamma1) + jump_sq(m, g, u, &m.facets_gamma2))
        + eps * c_ratio * jump_sq(m, g, u, &m.facets_gamma12);
    delta * reg + gating + jumps
}

fn criterion_1() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let gap = GapModel::default();
    let delta = 1e-3;
    for density in [4, 8] {
        for eps in [1.0, 0.1] {
            let (m, op) = mesh(density, (2, 2), eps);
            let sys = build_system_matrix(
                &op,
                StepCoefficients {
                    eps,
                    delta,
                    dt: 0.01,
                    beta1: IonicModel::default().beta1,
                    g_gap: gap.g_gap,
                    c_ratio: gap.c_ratio,
                },
            );
            let galerkin = regularized_matrix(&op, eps, delta, gap.c_ratio);
            let strict = check_spd(&sys.matrix, SpdMode::Strict).unwrap().pass
                && check_spd(&galerkin, SpdMode::Strict).unwrap().pass;
            let semi = check_spd(&interface_operator(&op, eps, gap.c_ratio), SpdMode::Semidefinite).unwrap();
            let mut worst = 0.0f64;
            for _ in 0..100 {
                let x: Vec<f64> = (0..galerkin.rows()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let lhs = linalg::quad(&galerkin, &x);
                let rhs = galerkin_expansion(&m, &op, &x, eps, delta, gap.c_ratio);
                worst = worst.max((lhs - rhs).abs() / rhs.abs());
            }
            let ok = strict && semi.pass && worst <= 1e-12;
            pass &= ok;
            notes.push(format!(
                "d={density} eps={eps}: strict {strict}, min Ritz {:.1e}, expansion {:.1e}",
                semi.min_ritz.unwrap_or(f64::NAN),
                worst
            ));
        }
    }
    Outcome {
        pass,
        detail: notes.join("; "),
    }
}

fn criterion_2() -> Outcome {
    let (m, op) = mesh(8, (1, 1), 1.0);
    let model = IonicModel::default();
    let gap = GapModel::default();
    let cfg = SolverConfig {
        dt: 0.01,
        t_end: 1.0,
        ..Default::default()
    };
    let zero = initialize(&m, &op, &InitialData::default()).unwrap();
    let (fin, traj) = run(&op, &model, &gap, &cfg, zero, 1).unwrap();
    let exact_zero = traj.reports.len() == 100
        && traj.snapshots.iter().all(|s| {
            s.u1.iter().chain(&s.u2).chain(&s.ue).chain(&s.w1).chain(&s.w2).all(|&x| x == 0.0)
        })
        && fin.norm() == 0.0;

    let stim = SolverConfig {
        iapp: AppliedCurrent::Constant {
            amplitude: 0.5,
            target: Target::Gamma1,
        },
        ..cfg.clone()
    };
    let s0 = initialize(&m, &op, &stimulus_data()).unwrap();
    let mut shifted = s0.clone();
    shifted.shift_potentials(5.0);
    let (_, a) = run(&op, &model, &gap, &stim, s0, 1).unwrap();
    let (_, b) = run(&op, &model, &gap, &stim, shifted, 1).unwrap();
    let mut worst = 0.0f64;
    for (x, y) in a.snapshots.iter().zip(&b.snapshots) {
        let diffs = [
            (x.v1(&op), y.v1(&op)),
            (x.v2(&op), y.v2(&op)),
            (x.s(&op), y.s(&op)),
            (x.w1.clone(), y.w1.clone()),
            (x.w2.clone(), y.w2.clone()),
        ];
        for (p, q) in diffs {
            for (s, t) in p.iter().zip(&q) {
                worst = worst.max((s - t).abs());
            }
        }
    }
    Outcome {
        pass: exact_zero && worst <= cfg.lin_tol,
        detail: format!("zero run exact: {exact_zero}; max gauge difference {worst:.2e} (tol {:e})", cfg.lin_tol),
    }
}

fn criterion_3() -> Outcome {
    let (m, op) = mesh(64, (1, 1), 1.0);
    let cfg = SolverConfig {
        dt: 0.01,
        t_end: 2.0,
        lin_tol: 1e-10,
        iapp: AppliedCurrent::Constant {
            amplitude: 1.0,
            target: Target::Gamma1,
        },
        ..Default::default()
    };
    let st = Stepper::new(&op, &IonicModel::default(), &GapModel::default(), &cfg).unwrap();
    let s0 = initialize(&m, &op, &stimulus_data()).unwrap();
    let mut worst = 0.0f64;
    let mut steps = 0;
    let mut ok = true;
    st.run(s0, |_, rep| {
        if let Some(r) = rep {
            steps += 1;
            let bound = 10.0 * cfg.lin_tol * r.state_norm;
            let f = r.flux;
            for x in [f.omega_i1, f.omega_i2, f.omega_e] {
                ok &= x.abs() <= bound;
                worst = worst.max(x.abs() / r.state_norm);
            }
        }
        Ok(())
    })
    .unwrap();
    Outcome {
        pass: ok && steps == 200,
        detail: format!(
            "{} potential dofs, {steps} steps, max |residual|/norm {worst:.2e} (tol {:e})",
            op.n_potential(),
            10.0 * cfg.lin_tol
        ),
    }
}

fn criterion_4() -> Outcome {
    let (m, op) = mesh(8, (1, 1), 1.0);
    let gap = GapModel::default();
    let mut lin = IonicModel::default();
    lin.mode = IonicMode::Linear;
    let cfg = SolverConfig {
        dt: 0.01,
        t_end: 1.0,
        ..Default::default()
    };
    let init = InitialData {
        v2: FieldSpec::Bump {
            amplitude: -0.5,
            center: [0.6, 0.4],
            radius: 0.2,
        },
        s: FieldSpec::Constant { value: 0.3 },
        ..stimulus_data()
    };
    let s0 = initialize(&m, &op, &init).unwrap();
    let (_, traj) = run(&op, &lin, &gap, &cfg, s0, 1).unwrap();
    let e: Vec<f64> = traj
        .snapshots
        .iter()
        .map(|s| energy::energy(&op, &lin, &gap, cfg.eps, cfg.delta, s, None).total)
        .collect();
    let tol = 1e-12 * e[0];
    let worst_rise = e.windows(2).map(|w| w[1] - w[0]).fold(f64::MIN, f64::max);
    let decay_ok = worst_rise <= tol;

    let model = IonicModel::default();
    let reps: Vec<_> = [16, 32]
        .iter()
        .map(|&d| {
            let (m, op) = mesh(d, (1, 1), 1.0);
            let s0 = initialize(&m, &op, &stimulus_data()).unwrap();
            let (_, t) = run(&op, &model, &gap, &cfg, s0, 5).unwrap();
            apriori_monitor(&op, &model, cfg.eps, &t.snapshots)
        })
        .collect();
    let spreads = relative_spread(&reps[0], &reps[1]);
    let wanted = ["e_vw", "e_u", "e_vr"];
    let mesh_ok = spreads.iter().filter(|(n, _)| wanted.contains(n)).all(|(_, s)| *s <= 0.10);
    let shown: Vec<String> = spreads
        .iter()
        .filter(|(n, _)| wanted.contains(n))
        .map(|(n, s)| format!("{n} {:.1}%", 100.0 * s))
        .collect();
    Outcome {
        pass: decay_ok && mesh_ok,
        detail: format!(
            "max energy increase {worst_rise:.2e} (tol {tol:.1e}); h vs h/2: {}",
            shown.join(", ")
        ),
    }
}

fn criterion_5() -> Outcome {
    let (m, op) = mesh(8, (1, 1), 1.0);
    let cfg = SolverConfig {
        dt: 0.01,
        t_end: 1.0,
        ..Default::default()
    };
    let rep = stability_experiment(
        &m,
        &op,
        &IonicModel::default(),
        &GapModel::default(),
        &cfg,
        &stimulus_data(),
        &FieldSpec::Bump {
            amplitude: 1.0,
            center: [0.3, 0.5],
            radius: 0.3,
        },
        &[1e-2, 1e-3],
    )
    .unwrap();
    Outcome {
        pass: rep.linearity_pass && rep.zero_perturbation_bitwise,
        detail: format!(
            "amplification {:.6} vs {:.6} (spread {:.2e}); bitwise {}; gronwall excess {:.3}",
            rep.perturbations[0].amplification,
            rep.perturbations[1].amplification,
            rep.linearity_spread,
            rep.zero_perturbation_bitwise,
            rep.gronwall_excess
        ),
    }
}

fn criterion_6() -> Outcome {
    let (m, op) = mesh(8, (1, 1), 1.0);
    let cfg = SolverConfig {
        dt: 0.01,
        t_end: 1.0,
        ..Default::default()
    };
    let s0: SystemState = initialize(&m, &op, &stimulus_data()).unwrap();
    let rep = delta_limit(&op, &IonicModel::default(), &GapModel::default(), &cfg, &s0, &[1e-2, 1e-3, 1e-4]).unwrap();
    let shown: Vec<String> = rep.distances.iter().map(|(d, x)| format!("d({d:e})={x:.3e}")).collect();
    Outcome {
        pass: rep.strictly_decreasing,
        detail: shown.join(", "),
    }
}

fn criterion_7() -> Outcome {
    let rep = certify_assumptions(&IonicModel::default(), (-10.0, 10.0), (-10.0, 10.0), 401).unwrap();
    let mut bad = IonicModel::default();
    bad.beta1 = 0.0;
    let rep_bad = certify_assumptions(&bad, (-10.0, 10.0), (-10.0, 10.0), 401).unwrap();
    let iv_fails = rep_bad.check("iv").map(|r| !r.pass).unwrap_or(false);
    Outcome {
        pass: rep.all_pass() && rep.records.len() == 4 && rep.e_coefficient >= 0.0 && iv_fails,
        detail: format!(
            "default all pass: {}; E coefficient {}; beta1=0 fails (iv): {iv_fails}",
            rep.all_pass(),
            rep.e_coefficient
        ),
    }
}

fn criterion_8() -> Outcome {
    let cell = UnitCellSpec::new((1.0, 1.0), 0.25, 0.5, 8);
    let dens = [8, 16, 32];
    let trig = mms_convergence(&cell, &MmsCase::default(), &dens).unwrap();
    let cons = mms_convergence(&cell, &MmsCase::Constant { values: [1.5, -0.7, 0.3] }, &dens).unwrap();
    let lin = mms_convergence(
        &cell,
        &MmsCase::Linear {
            gradient: [0.8, -0.35],
            offsets: [0.25, -0.4],
        },
        &dens,
    )
    .unwrap();
    let slope_ok = (1.7..=2.3).contains(&trig.slope_u);
    Outcome {
        pass: slope_ok && cons.max_err_u() <= 1e-9 && lin.max_err_u() <= 1e-9,
        detail: format!(
            "slope {:.3}; constant err {:.1e}; linear err {:.1e}",
            trig.slope_u,
            cons.max_err_u(),
            lin.max_err_u()
        ),
    }
}

fn criterion_9() -> Outcome {
    let r = nondimensionalize(&PhysicalUnits::default()).unwrap();
    let ok = (r.epsilon_sqrt_form - 1.41e-2).abs() < 0.005e-2 && r.identity_rel_err <= 1e-12 && r.quoted_mismatch;
    Outcome {
        pass: ok,
        detail: format!(
            "sqrt(ell/(R_m lambda)) = {:.5e}; identity err {:.1e}; quoted 7.1e-3 flagged: {}",
            r.epsilon_sqrt_form, r.identity_rel_err, r.quoted_mismatch
        ),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 9] = [
        ("1 spd", criterion_1, Duration::from_secs(10)),
        ("2 equilibrium and gauge", criterion_2, Duration::from_secs(5)),
        ("3 conservation", criterion_3, Duration::from_secs(30)),
        ("4 discrete energy", criterion_4, Duration::MAX),
        ("5 stability", criterion_5, Duration::MAX),
        ("6 regularization limit", criterion_6, Duration::MAX),
        ("7 certification", criterion_7, Duration::from_secs(1)),
        ("8 mms convergence", criterion_8, Duration::from_secs(60)),
        ("9 nondimensionalization", criterion_9, Duration::MAX),
    ];
    let mut failed = 0;
    for (name, f, budget) in criteria {
        let t = Instant::now();
        let out = f();
        let el = t.elapsed();
        let in_time = el <= budget;
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget_note = if budget == Duration::MAX {
            String::new()
        } else {
            format!(" / budget {:.0}s", budget.as_secs_f64())
        };
        println!(
            "criterion {name}: {} [{:.2}s{budget_note}] {}",
            if pass { "PASS" } else { "FAIL" },
            el.as_secs_f64(),
            out.detail
        );
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
