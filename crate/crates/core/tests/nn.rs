use hetpanel::graph::{build_graph, FeatureScales, HeteroGraph, NodeType, RelationCatalog, Variant};
use hetpanel::nn::{
    hgt_layer, sage_layer, Activation, DenseArray, Mode, Network, NetworkConfig, ParamStore, Tape,
};
use hetpanel::panel::{CaseSpec, GeometryRanges, Interval};
use hetpanel::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_spec() -> CaseSpec {
    let mut s = CaseSpec::default();
    s.ranges.n_stiffeners = (2, 2);
    s
}

fn graph(variant: Variant, seed: u64) -> HeteroGraph {
    let case = small_spec().generate(seed).unwrap();
    build_graph(&case, variant, &FeatureScales::default()).unwrap()
}

fn set(store: &mut ParamStore, name: &str, rows: usize, cols: usize, v: &[f64]) {
    *store.get_mut(name).unwrap_or_else(|| panic!("{name}")) = DenseArray::new(rows, cols, v.to_vec());
}

fn vm(x: [f64; 2], w: [[f64; 2]; 2]) -> [f64; 2] {
    [x[0] * w[0][0] + x[1] * w[1][0], x[0] * w[0][1] + x[1] * w[1][1]]
}

fn flat(w: [[f64; 2]; 2]) -> Vec<f64> {
    vec![w[0][0], w[0][1], w[1][0], w[1][1]]
}

/// Two geometry nodes and one combined boundary node. The boundary node
/// hears from both geometry nodes over two different relations; geometry
/// node 0 hears back from the boundary node; geometry node 1 hears nothing.
struct Toy {
    g: HeteroGraph,
    catalog: RelationCatalog,
    r_a: usize,
    r_b: usize,
    r_back: usize,
}

fn toy() -> Toy {
    let mut g = graph(Variant::E, 1);
    let catalog = RelationCatalog::new(Variant::E);
    g.nodes[0].count = 2;
    let w0 = g.nodes[0].width;
    g.nodes[0].features.truncate(2 * w0);
    g.nodes[0].known.truncate(2);
    g.nodes[1].count = 1;
    let w1 = g.nodes[1].width;
    g.nodes[1].features.truncate(w1);
    g.nodes[1].known.truncate(1);
    for e in &mut g.edges {
        e.src.clear();
        e.dst.clear();
    }
    g.geometry_offsets = vec![0, 2];
    let (r_a, r_b) = (0, 2);
    assert_eq!(catalog.relations[r_a].dst, NodeType::BoundaryCombined);
    assert_eq!(catalog.relations[r_b].dst, NodeType::BoundaryCombined);
    let r_back = 1;
    assert_eq!(catalog.relations[r_back], catalog.relations[r_a].reversed());
    g.edges[r_a].src.push(0);
    g.edges[r_a].dst.push(0);
    g.edges[r_b].src.push(1);
    g.edges[r_b].dst.push(0);
    g.edges[r_back].src.push(0);
    g.edges[r_back].dst.push(0);
    Toy { g, catalog, r_a, r_b, r_back }
}

const HG0: [f64; 2] = [1.0, 0.5];
const HG1: [f64; 2] = [-0.3, 0.8];
const HB0: [f64; 2] = [0.2, -1.0];
const WK_G: [[f64; 2]; 2] = [[0.5, -0.2], [0.1, 0.3]];
const WQ_G: [[f64; 2]; 2] = [[0.2, 0.4], [-0.6, 0.1]];
const WM_G: [[f64; 2]; 2] = [[1.0, 0.2], [0.0, -0.5]];
const WA_G: [[f64; 2]; 2] = [[0.7, 0.0], [0.3, 1.1]];
const WK_B: [[f64; 2]; 2] = [[-0.4, 0.9], [0.2, 0.2]];
const WQ_B: [[f64; 2]; 2] = [[0.3, -0.1], [0.8, 0.5]];
const WM_B: [[f64; 2]; 2] = [[0.6, 0.6], [-0.2, 0.4]];
const WA_B: [[f64; 2]; 2] = [[1.0, -0.5], [0.25, 0.75]];
const ATT_A: [[f64; 2]; 2] = [[1.2, 0.0], [0.3, 0.9]];
const ATT_B: [[f64; 2]; 2] = [[0.4, -0.7], [0.5, 1.0]];
const ATT_BACK: [[f64; 2]; 2] = [[0.9, 0.1], [-0.1, 0.8]];
const MSG_A: [[f64; 2]; 2] = [[0.5, 0.5], [0.1, -0.3]];
const MSG_B: [[f64; 2]; 2] = [[-1.0, 0.2], [0.4, 0.6]];
const MSG_BACK: [[f64; 2]; 2] = [[0.3, 0.0], [0.0, 0.3]];
const MU_A: f64 = 1.5;
const MU_B: f64 = 0.7;
const MU_BACK: f64 = 1.1;

fn toy_store(t: &Toy) -> ParamStore {
    let cfg = NetworkConfig { layers: 1, hidden: 2, heads: 1, activation: Activation::Tanh };
    let net = Network::new(cfg, t.catalog.clone()).unwrap();
    let mut s = net.init(0);
    for (k, w) in [
        ("geometry.k", WK_G),
        ("geometry.q", WQ_G),
        ("geometry.msg", WM_G),
        ("geometry.a", WA_G),
        ("boundary.k", WK_B),
        ("boundary.q", WQ_B),
        ("boundary.msg", WM_B),
        ("boundary.a", WA_B),
    ] {
        set(&mut s, &format!("l0.{k}"), 2, 2, &flat(w));
    }
    for (r, att, msg, mu) in [
        (t.r_a, ATT_A, MSG_A, MU_A),
        (t.r_b, ATT_B, MSG_B, MU_B),
        (t.r_back, ATT_BACK, MSG_BACK, MU_BACK),
    ] {
        set(&mut s, &format!("l0.r{r:03}.att"), 2, 2, &flat(att));
        set(&mut s, &format!("l0.r{r:03}.msg"), 2, 2, &flat(msg));
        set(&mut s, &format!("l0.r{r:03}.mu"), 1, 1, &[mu]);
    }
    s
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn run_toy_layer(t: &Toy, s: &ParamStore, hg: [[f64; 2]; 2], hb: [f64; 2]) -> (Vec<DenseArray>, Vec<DenseArray>) {
    let mut tape = Tape::new();
    let h = vec![
        tape.constant(DenseArray::new(2, 2, vec![hg[0][0], hg[0][1], hg[1][0], hg[1][1]])),
        tape.constant(DenseArray::new(1, 2, hb.to_vec())),
    ];
    let (out, alpha) = hgt_layer(&mut tape, s, &t.catalog, &t.g, &h, 0, 1, Activation::Tanh).unwrap();
    (
        out.iter().map(|v| tape.value(*v).clone()).collect(),
        alpha.iter().map(|v| tape.value(*v).clone()).collect(),
    )
}

#[test]
fn attention_and_update_match_hand_trace() {
    let t = toy();
    let s = toy_store(&t);
    let (out, alpha) = run_toy_layer(&t, &s, [HG0, HG1], HB0);

    // Target b0: links from g0 (relation a) and g1 (relation b).
    let qb = vm(HB0, WQ_B);
    let sa = dot(vm(vm(HG0, WK_G), ATT_A), qb) * MU_A / 2f64.sqrt();
    let sb = dot(vm(vm(HG1, WK_G), ATT_B), qb) * MU_B / 2f64.sqrt();
    let z = sa.exp() + sb.exp();
    let (aa, ab) = (sa.exp() / z, sb.exp() / z);
    assert!((alpha[t.r_a].get(0, 0) - aa).abs() < 1e-14);
    assert!((alpha[t.r_b].get(0, 0) - ab).abs() < 1e-14);
    assert!((alpha[t.r_back].get(0, 0) - 1.0).abs() < 1e-15);

    let ma = vm(vm(HG0, WM_G), MSG_A);
    let mb = vm(vm(HG1, WM_G), MSG_B);
    let m = [aa * ma[0] + ab * mb[0], aa * ma[1] + ab * mb[1]];
    let upd = vm([m[0].tanh(), m[1].tanh()], WA_B);
    let expect_b = [upd[0] + HB0[0], upd[1] + HB0[1]];
    assert!((out[1].get(0, 0) - expect_b[0]).abs() < 1e-14);
    assert!((out[1].get(0, 1) - expect_b[1]).abs() < 1e-14);

    // Target g0: single link from b0.
    let mg = vm(vm(HB0, WM_B), MSG_BACK);
    let upd = vm([mg[0].tanh(), mg[1].tanh()], WA_G);
    assert!((out[0].get(0, 0) - (upd[0] + HG0[0])).abs() < 1e-14);
    assert!((out[0].get(0, 1) - (upd[1] + HG0[1])).abs() < 1e-14);

    // g1 has no in-links and keeps its state.
    assert_eq!(out[0].row(1), &HG1);
}

#[test]
fn zero_states_give_uniform_attention() {
    let t = toy();
    let s = toy_store(&t);
    let (_, alpha) = run_toy_layer(&t, &s, [[0.0; 2]; 2], [0.0; 2]);
    assert_eq!(alpha[t.r_a].get(0, 0), 0.5);
    assert_eq!(alpha[t.r_b].get(0, 0), 0.5);
}

#[test]
fn zero_messages_make_layer_identity() {
    let t = toy();
    let mut s = toy_store(&t);
    set(&mut s, "l0.geometry.msg", 2, 2, &[0.0; 4]);
    set(&mut s, "l0.boundary.msg", 2, 2, &[0.0; 4]);
    let (out, _) = run_toy_layer(&t, &s, [HG0, HG1], HB0);
    assert_eq!(out[0].as_slice(), &[HG0[0], HG0[1], HG1[0], HG1[1]]);
    assert_eq!(out[1].as_slice(), &HB0);
}

fn run_sage(h: &[f64], n: usize, w: &[f64], src: &[usize], dst: &[usize], act: Activation) -> DenseArray {
    let d = h.len() / n;
    let mut tape = Tape::new();
    let hv = tape.constant(DenseArray::new(n, d, h.to_vec()));
    let wv = tape.constant(DenseArray::new(2 * d, d, w.to_vec()));
    let bv = tape.constant(DenseArray::zeros(1, d));
    let out = sage_layer(&mut tape, hv, wv, bv, src, dst, act);
    tape.value(out).clone()
}

#[test]
fn sage_two_node_path_hand_trace() {
    // Nodes 0 - 1, states in R², weight rows map [h ‖ m] to the output.
    let h = [0.4, -0.2, 1.0, 0.3];
    let w = [0.5, -1.0, 0.2, 0.3, 0.7, 0.1, -0.4, 0.6];
    let out = run_sage(&h, 2, &w, &[0, 1], &[1, 0], Activation::Tanh);
    let lin = |x: [f64; 4]| {
        [
            (0..4).map(|i| x[i] * w[2 * i]).sum::<f64>().tanh(),
            (0..4).map(|i| x[i] * w[2 * i + 1]).sum::<f64>().tanh(),
        ]
    };
    let e0 = lin([0.4, -0.2, 1.0, 0.3]);
    let e1 = lin([1.0, 0.3, 0.4, -0.2]);
    assert!((out.get(0, 0) - e0[0]).abs() < 1e-15);
    assert!((out.get(0, 1) - e0[1]).abs() < 1e-15);
    assert!((out.get(1, 0) - e1[0]).abs() < 1e-15);
    assert!((out.get(1, 1) - e1[1]).abs() < 1e-15);
}

#[test]
fn sage_mean_of_identical_neighbours() {
    // Identity on the message half exposes m; ReLU is identity for positives.
    let h = [9.0, 9.0, 0.25, 0.5, 0.25, 0.5, 0.25, 0.5];
    let w = [0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0];
    let out = run_sage(&h, 4, &w, &[1, 2, 3], &[0, 0, 0], Activation::Relu);
    assert_eq!(out.row(0), &[0.25, 0.5]);
    // Isolated nodes aggregate the zero vector.
    assert_eq!(out.row(1), &[0.0, 0.0]);
}

#[test]
fn sage_zero_weight_gives_constant_rows() {
    let h = [0.4, -0.2, 1.0, 0.3];
    let out = run_sage(&h, 2, &[0.0; 8], &[0, 1], &[1, 0], Activation::Tanh);
    assert!(out.as_slice().iter().all(|v| *v == 0.0));
}

#[test]
fn sum_of_squares_gradient_is_twice_parameter() {
    let mut s = ParamStore::new();
    let slot = s.insert("p", DenseArray::new(2, 2, vec![1.0, -2.0, 0.5, 3.0]));
    s.insert("unused", DenseArray::filled(1, 3, 4.0));
    let mut tape = Tape::new();
    let p = tape.param(&s, slot);
    let l = tape.sum_squares(p);
    let g = tape.backward(l, &s).unwrap();
    assert_eq!(g[0].as_slice(), &[2.0, -4.0, 1.0, 6.0]);
    assert_eq!(g[1].as_slice(), &[0.0; 3]);
}

#[test]
fn non_scalar_loss_is_usage_error() {
    let s = ParamStore::new();
    let mut tape = Tape::new();
    let x = tape.constant(DenseArray::zeros(2, 2));
    assert!(matches!(tape.backward(x, &s), Err(Error::Usage(_))));
}

fn tiny_config() -> NetworkConfig {
    NetworkConfig { layers: 2, hidden: 4, heads: 2, activation: Activation::Tanh }
}

fn loss_and_grads(net: &Network, s: &ParamStore, g: &HeteroGraph, target: &[f64], scale: f64) -> (f64, Vec<DenseArray>) {
    let mut f = net.forward(s, g, Mode::Train).unwrap();
    let l = f.tape.rmse(f.output, target);
    let l = f.tape.scale(l, scale);
    let v = f.tape.value(l).get(0, 0);
    (v, f.tape.backward(l, s).unwrap())
}

fn perturbed_store(s: &ParamStore, seed: u64) -> ParamStore {
    // Move off the symmetric init (zero biases, unit gammas, unit priors).
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = s.clone();
    for slot in 0..s.len() {
        for v in s.value_mut(slot).as_mut_slice() {
            *v += rng.gen_range(-0.1..0.1);
        }
    }
    s
}

#[test]
fn gradients_match_central_differences() {
    for (variant, seed) in [(Variant::E, 11), (Variant::B, 12), (Variant::D, 13), (Variant::Homogeneous, 14)] {
        let g = graph(variant, seed);
        let net = Network::new(tiny_config(), RelationCatalog::new(variant)).unwrap();
        let s = perturbed_store(&net.init(seed), seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        let target: Vec<f64> = (0..g.geometry_count() * 200).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, grads) = loss_and_grads(&net, &s, &g, &target, 1.0);
        let step = 1e-5;
        let mut checked = 0;
        for slot in 0..s.len() {
            for i in 0..s.value(slot).len() {
                let mut plus = s.clone();
                plus.value_mut(slot).as_mut_slice()[i] += step;
                let mut minus = s.clone();
                minus.value_mut(slot).as_mut_slice()[i] -= step;
                let lp = loss_and_grads(&net, &plus, &g, &target, 1.0).0;
                let lm = loss_and_grads(&net, &minus, &g, &target, 1.0).0;
                let fd = (lp - lm) / (2.0 * step);
                let an = grads[slot].as_slice()[i];
                let ok = (fd - an).abs() <= 1e-7 || (fd - an).abs() <= 1e-4 * fd.abs().max(an.abs());
                assert!(ok, "{variant} {} [{i}]: analytic {an}, numeric {fd}", s.name(slot));
                checked += 1;
            }
        }
        assert_eq!(checked, s.scalar_count());
    }
}

#[test]
fn scaling_loss_scales_gradients() {
    let g = graph(Variant::F, 5);
    let net = Network::new(tiny_config(), RelationCatalog::new(Variant::F)).unwrap();
    let s = perturbed_store(&net.init(5), 5);
    let target = vec![0.3; g.geometry_count() * 200];
    let (_, g1) = loss_and_grads(&net, &s, &g, &target, 1.0);
    let (_, g3) = loss_and_grads(&net, &s, &g, &target, 3.0);
    for (a, b) in g1.iter().zip(&g3) {
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((3.0 * x - y).abs() <= 1e-12 * (1.0 + y.abs()));
        }
    }
}

#[test]
fn relations_without_links_get_zero_gradient() {
    let t = toy();
    let net = Network::new(tiny_config(), t.catalog.clone()).unwrap();
    let s = perturbed_store(&net.init(2), 2);
    let target = vec![0.1; 2 * 200];
    let (_, grads) = loss_and_grads(&net, &s, &t.g, &target, 1.0);
    let slot = s.slot("l0.r005.att").unwrap();
    assert!(grads[slot].as_slice().iter().all(|v| *v == 0.0));
}

#[test]
fn attention_sums_to_one_per_target_and_head() {
    for variant in Variant::HETERO {
        let g = graph(variant, 21);
        let cat = RelationCatalog::new(variant);
        let cfg = NetworkConfig { layers: 1, hidden: 8, heads: 4, ..Default::default() };
        let net = Network::new(cfg, cat.clone()).unwrap();
        let s = perturbed_store(&net.init(3), 3);
        let mut tape = Tape::new();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h: Vec<_> = g
            .nodes
            .iter()
            .map(|n| tape.constant(DenseArray::from_fn(n.count, 8, |_, _| rng.gen_range(-2.0..2.0))))
            .collect();
        let (_, alpha) = hgt_layer(&mut tape, &s, &cat, &g, &h, 0, 4, Activation::Tanh).unwrap();
        let mut sums = vec![vec![[0.0f64; 4]; 0]; g.nodes.len()];
        for (ti, n) in g.nodes.iter().enumerate() {
            sums[ti] = vec![[0.0; 4]; n.count];
        }
        for (es, a) in g.edges.iter().zip(&alpha) {
            let ti = cat.type_index(es.relation.dst).unwrap();
            let av = tape.value(*a);
            for (e, &v) in es.dst.iter().enumerate() {
                for hd in 0..4 {
                    sums[ti][v][hd] += av.get(e, hd);
                }
            }
        }
        for (ti, per) in sums.iter().enumerate() {
            for (v, s) in per.iter().enumerate() {
                let has_links = g.edges.iter().any(|e| e.relation.dst == cat.node_types[ti] && e.dst.contains(&v));
                for x in s {
                    if has_links {
                        assert!((x - 1.0).abs() < 1e-6, "{variant}: {x}");
                    } else {
                        assert_eq!(*x, 0.0);
                    }
                }
            }
        }
    }
}

#[test]
fn network_is_permutation_equivariant() {
    for variant in [Variant::A, Variant::D, Variant::Homogeneous] {
        let g = graph(variant, 31);
        let net = Network::new(tiny_config(), RelationCatalog::new(variant)).unwrap();
        let s = perturbed_store(&net.init(6), 6);
        let n = g.geometry_count();
        let perm: Vec<usize> = (0..n).rev().collect();
        let mut pg = g.permute_nodes(0, &perm);
        if g.nodes.len() > 1 {
            let m = g.nodes[1].count;
            let p2: Vec<usize> = (0..m).map(|i| (i + 3) % m).collect();
            pg = pg.permute_nodes(1, &p2);
        }
        let a = net.predict(&s, &g).unwrap();
        let b = net.predict(&s, &pg).unwrap();
        for i in 0..n {
            let diff = a.row(perm[i]).iter().zip(b.row(i)).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            assert!(diff <= 1e-12, "{variant}: row {i} differs by {diff}");
        }
    }
}

#[test]
fn eval_output_shape_and_determinism() {
    for variant in Variant::HETERO.into_iter().chain([Variant::Homogeneous]) {
        let net = Network::new(tiny_config(), RelationCatalog::new(variant)).unwrap();
        let s = net.init(8);
        let g1 = graph(variant, 41);
        let g2 = graph(variant, 41);
        let a = net.predict(&s, &g1).unwrap();
        assert_eq!(a.shape(), (g1.geometry_count(), 200));
        let b = net.predict(&s, &g2).unwrap();
        assert_eq!(a, b);
        let c = net.predict(&s, &g1).unwrap();
        assert_eq!(a, c);
    }
}

#[test]
fn zero_head_predicts_zero() {
    let net = Network::new(tiny_config(), RelationCatalog::new(Variant::C)).unwrap();
    let mut s = net.init(9);
    let (r, c) = s.get("head.w").unwrap().shape();
    set(&mut s, "head.w", r, c, &vec![0.0; r * c]);
    let out = net.predict(&s, &graph(Variant::C, 2)).unwrap();
    assert!(out.as_slice().iter().all(|v| *v == 0.0));
}

#[test]
fn schema_mismatch_is_config_error() {
    let net = Network::new(tiny_config(), RelationCatalog::new(Variant::A)).unwrap();
    let s = net.init(0);
    let r = net.predict(&s, &graph(Variant::B, 0));
    assert!(matches!(r, Err(Error::Config(_))));
}

#[test]
fn fixed_geometry_ranges_build() {
    // Degenerate ranges are accepted and yield the same panel every draw.
    let mut spec = small_spec();
    spec.ranges = GeometryRanges { plate_thickness: Interval::fixed(0.008), ..GeometryRanges::thin_members() };
    spec.ranges.n_stiffeners = (3, 3);
    let a = spec.generate(1).unwrap();
    assert_eq!(a.geometry.plate_thickness, 0.008);
}

#[test]
fn parameter_count_ordering_at_default_widths() {
    let cfg = NetworkConfig::default();
    let count = |v| hetpanel::nn::count_parameters(&cfg, &RelationCatalog::new(v));
    use Variant::*;
    let order = [E, F, C, D, A, B];
    for w in order.windows(2) {
        assert!(count(w[0]) < count(w[1]), "{} !< {}", w[0], w[1]);
    }
}

#[test]
fn doubling_width_quadruples_matrices() {
    let c1 = NetworkConfig { layers: 1, hidden: 8, heads: 2, ..Default::default() };
    let c2 = NetworkConfig { hidden: 16, ..c1 };
    let cat = RelationCatalog::new(Variant::D);
    let s1 = Network::new(c1, cat.clone()).unwrap().init(0);
    let s2 = Network::new(c2, cat).unwrap().init(0);
    for name in ["l0.geometry.k", "l0.edge.a", "l0.r004.att", "l0.r004.msg"] {
        assert_eq!(s2.get(name).unwrap().len(), 4 * s1.get(name).unwrap().len(), "{name}");
    }
}

#[test]
fn loading_node_cost_is_exact() {
    // Isolating the loading node adds one node type (encoder, four layer
    // matrices, norm) and one relation pair, and strips the 20 folded load
    // inputs from the geometry encoder.
    let cfg = NetworkConfig::default();
    let (d, l, h) = (cfg.hidden, cfg.layers, cfg.heads);
    let count = |v| hetpanel::nn::count_parameters(&cfg, &RelationCatalog::new(v));
    let loading_encoder = 20 * d + d;
    let folded_inputs = 20 * d;
    let per_layer = 4 * d * d + 2 * d + 2 * (2 * d * d / h + 1);
    let expect = loading_encoder - folded_inputs + l * per_layer;
    for (x, y) in [(Variant::E, Variant::F), (Variant::C, Variant::D), (Variant::A, Variant::B)] {
        assert_eq!(count(y) - count(x), expect);
    }
}
