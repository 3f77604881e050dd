use hetpanel::oracle::{
    build_grillage, extract_fields, solve_case, solve_static, Channel, GrillageModel, OracleConfig,
    Section, GRID_COLS, GRID_ROWS,
};
use hetpanel::panel::{BoundaryField, CaseSpec, DofKind, LoadProfile, PanelCase, PanelTopology};

const E: f64 = 200e9;
const G: f64 = 76.9e9;

/// Simply supported beam along x with `n` elements; returns the model and
/// the midspan node.
fn beam(n: usize, length: f64, s: Section) -> (GrillageModel, usize) {
    let mut m = GrillageModel::new(E, G);
    for i in 0..=n {
        m.add_node([length * i as f64 / n as f64, 0.0, 0.0]);
    }
    for i in 0..n {
        m.add_member(i, i + 1, s, [0.0, 0.0, 1.0]);
    }
    for dof in [DofKind::U1, DofKind::U2, DofKind::U3, DofKind::R1] {
        m.prescribe(0, dof, 0.0);
    }
    for dof in [DofKind::U2, DofKind::U3] {
        m.prescribe(n, dof, 0.0);
    }
    (m, n / 2)
}

#[test]
fn simply_supported_point_load() {
    let s = Section::strip(0.1, 0.05);
    let (l, p): (f64, f64) = (4.0, 2.5e3);
    for n in [16, 32] {
        let (mut m, mid) = beam(n, l, s);
        m.add_load(mid, DofKind::U3, -p);
        let r = solve_static(&m).unwrap();
        let exact = p * l.powi(3) / (48.0 * E * s.i_out);
        let got = -r.displacements[mid][2];
        assert!((got - exact).abs() / exact < 0.01, "n={n}: {got} vs {exact}");
    }
}

#[test]
fn distributed_load_converges_monotonically() {
    let s = Section::strip(0.1, 0.05);
    let (l, q): (f64, f64) = (4.0, 1e3);
    let exact = 5.0 * q * l.powi(4) / (384.0 * E * s.i_out);
    let mut errors = Vec::new();
    for n in [4, 8, 16] {
        let (mut m, mid) = beam(n, l, s);
        let h = l / n as f64;
        for i in 0..=n {
            let w = if i == 0 || i == n { 0.5 * h } else { h };
            m.add_load(i, DofKind::U3, -q * w);
        }
        let r = solve_static(&m).unwrap();
        errors.push((-r.displacements[mid][2] - exact).abs() / exact);
    }
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
}

fn zero_bc(case: &PanelCase) -> PanelCase {
    let mut c = case.clone();
    c.edge_bcs = BoundaryField::uniform([0.0; 3]).edge_bcs(&PanelTopology::new(&c.geometry));
    c
}

#[test]
fn superposition_of_boundary_and_load_effects() {
    let cfg = OracleConfig::default();
    let case = CaseSpec::default().generate(21).unwrap();
    let load_only = zero_bc(&case);
    let bc_only = case.with_scaled_loads(0.0);
    let solve = |c: &PanelCase| solve_static(&build_grillage(c, &cfg).unwrap()).unwrap();
    let (full, a, b) = (solve(&case), solve(&load_only), solve(&bc_only));
    let scale = full.displacements.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for ((f, x), y) in full.displacements.iter().zip(&a.displacements).zip(&b.displacements) {
        for k in 0..6 {
            assert!((f[k] - x[k] - y[k]).abs() <= 1e-8 * scale);
        }
    }
}

#[test]
fn mirror_symmetric_case_gives_mirror_symmetric_fields() {
    let mut case = zero_bc(&CaseSpec::default().generate(8).unwrap());
    for l in &mut case.loads {
        if l.samples.iter().any(|v| *v != 0.0) {
            *l = LoadProfile {
                unit_id: l.unit_id,
                samples: [2e5; 20],
            };
        }
    }
    let grids = solve_case(&case, &OracleConfig::default()).unwrap();
    // Reflection x -> L - x: u1 flips sign, every other channel is even.
    for g in &grids {
        for ch in Channel::ALL {
            let max = g.channel(ch).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let sign = if ch == Channel::U1 { -1.0 } else { 1.0 };
            for r in 0..GRID_ROWS {
                for c in 0..GRID_COLS {
                    let a = g.get(r, c, ch);
                    let b = g.get(r, GRID_COLS - 1 - c, ch);
                    assert!((a - sign * b).abs() <= 1e-8 * max.max(1e-30), "{ch:?} {a} {b}");
                }
            }
        }
    }
}

#[test]
fn rigid_translation_gives_constant_fields_and_no_stress() {
    let mut case = CaseSpec::default().generate(2).unwrap().with_scaled_loads(0.0);
    let t = [0.4e-3, -1.2e-3, 2.0e-3];
    case.edge_bcs = BoundaryField::uniform(t).edge_bcs(&case.topology());
    let model = build_grillage(&case, &OracleConfig::default()).unwrap();
    let r = solve_static(&model).unwrap();
    for g in extract_fields(&model, &r) {
        for k in 0..3 {
            for v in g.channel(Channel::ALL[k]) {
                assert!((v - t[k] * 1e3).abs() < 1e-9);
            }
        }
        assert!(g.channel(Channel::Stress).iter().all(|v| v.abs() < 1e-6));
    }
}

#[test]
fn doubling_load_doubles_every_channel() {
    let cfg = OracleConfig::default();
    let case = zero_bc(&CaseSpec::default().generate(4).unwrap());
    let a = solve_case(&case, &cfg).unwrap();
    let b = solve_case(&case.with_scaled_loads(2.0), &cfg).unwrap();
    for (ga, gb) in a.iter().zip(&b) {
        assert_eq!(ga.values.len(), GRID_ROWS * GRID_COLS * 4);
        let max = ga.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (x, y) in ga.values.iter().zip(&gb.values) {
            assert!((2.0 * x - y).abs() <= 1e-8 * max);
        }
    }
}

#[test]
fn residual_on_generated_cases() {
    let cfg = OracleConfig::default();
    for seed in 0..12 {
        let case = CaseSpec::default().generate(seed).unwrap();
        let r = solve_static(&build_grillage(&case, &cfg).unwrap()).unwrap();
        assert!(r.residual <= 1e-8, "seed {seed}: {}", r.residual);
    }
}
