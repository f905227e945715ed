//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//! Oracles here are computed independently of the code under test.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use traverse_core::census::{count_mm_2d, count_mm_3d, make_local_model, CensusOptions};
use traverse_core::chain::{
    amenable_average, involution_partial_sum, parse_chain, parse_coloring, square_fraction, AverageMode, FolnerSet,
    Group, LabeledChain, LabeledSimplex, PartialColoring, DEFAULT_SIZE_CAP,
};
use traverse_core::flow::{admissible_types, FlowOptions};
use traverse_core::graph::{build_trajectory_graph_2d, GraphOptions};
use traverse_core::norm::{self, StraightModel};
use traverse_core::partition::{build_partition, verify_partition, DiscretizedStratifiedSpace};
use traverse_core::stratcheck::{check_stratified_cycle, parse_strat_labels, three_ray_diagrams, Condition};
use traverse_core::Scene;

const EVENT_TOL: f64 = 1e-6;
const SWEEP_LINES: usize = 10_000;
const SWEEP_SAMPLES: usize = 2_000;
const PIXELS: usize = 800;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn scene(name: &str) -> Scene {
    Scene::load(&root().join(format!("scenes/{name}.json"))).expect("bundled scene")
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn local_models() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    let mut count = 0;
    for n in 1..=2 {
        for ty in admissible_types(n) {
            count += 1;
            let model = make_local_model(&ty, n).expect("model");
            match model.designated_trajectory(FlowOptions::default()) {
                Ok(t) if t.ty() == ty => {
                    for (i, e) in t.events.iter().enumerate() {
                        // the i-th tangency sits at u = i + 1 with all other coordinates 0
                        let mut want = vec![0.0; n + 1];
                        want[0] = (i + 1) as f64;
                        let d = e.location.iter().zip(&want).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                        worst = worst.max(d);
                    }
                }
                Ok(t) => failures.push(format!("{ty:?} -> {:?}", t.ty())),
                Err(e) => failures.push(format!("{ty:?}: {e}")),
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && count == 9 && worst < EVENT_TOL && elapsed < Duration::from_secs(30);
    outcome(pass, format!("{count} types, max event offset {worst:.1e}, {} {failures:?}", secs(elapsed)))
}

fn type_census() -> Outcome {
    let one: BTreeSet<Vec<usize>> = admissible_types(1).into_iter().collect();
    let want: BTreeSet<Vec<usize>> = [vec![1, 1], vec![2], vec![1, 2, 1]].into_iter().collect();
    let two = admissible_types(2);
    let distinct: BTreeSet<&Vec<usize>> = two.iter().collect();
    outcome(
        one == want && two.len() == 6 && distinct.len() == 6,
        format!("n=1: {one:?}; n=2: {} types", two.len()),
    )
}

/// Fold trajectories of a vertical field, found by sweeping vertical lines
/// and counting where the number of boundary crossings changes.
fn sweep_oracle(s: &Scene) -> usize {
    let (x0, x1) = s.bounds()[0];
    let (y0, y1) = s.bounds()[1];
    let crossings = |x: f64| {
        let mut count = 0;
        let mut prev = s.inside_value(&[x, y0]) >= 0.0;
        for k in 1..=SWEEP_SAMPLES {
            let y = y0 + (y1 - y0) * k as f64 / SWEEP_SAMPLES as f64;
            let cur = s.inside_value(&[x, y]) >= 0.0;
            if cur != prev {
                count += 1;
            }
            prev = cur;
        }
        count
    };
    let mut changes = 0;
    let mut prev = crossings(x0 + 0.5 * (x1 - x0) / SWEEP_LINES as f64);
    for j in 1..SWEEP_LINES {
        let cur = crossings(x0 + (j as f64 + 0.5) * (x1 - x0) / SWEEP_LINES as f64);
        if cur != prev {
            changes += 1;
        }
        prev = cur;
    }
    changes
}

fn planar_counts() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, want) in [("disk", 2), ("annulus", 4), ("slab", 0)] {
        let s = scene(name);
        assert_eq!(s.velocity(&[0.3, 0.2]), vec![0.0, 1.0], "sweep oracle needs a vertical field");
        let start = Instant::now();
        let got = count_mm_2d(&s, &CensusOptions::default()).map(|c| c.count());
        let elapsed = start.elapsed();
        let oracle = sweep_oracle(&s);
        let ok = got.as_ref().ok() == Some(&want) && oracle == want && elapsed < Duration::from_secs(60);
        pass &= ok;
        parts.push(format!("{name} {got:?}/oracle {oracle} in {}", secs(elapsed)));
    }
    outcome(pass, parts.join("; "))
}

/// Euler characteristic of the union of closed pixels whose centers lie in `X`.
fn pixel_chi(s: &Scene) -> i64 {
    let (x0, x1) = s.bounds()[0];
    let (y0, y1) = s.bounds()[1];
    let p = PIXELS;
    let filled: Vec<Vec<bool>> = (0..p)
        .map(|i| {
            (0..p)
                .map(|j| {
                    let x = x0 + (i as f64 + 0.5) * (x1 - x0) / p as f64;
                    let y = y0 + (j as f64 + 0.5) * (y1 - y0) / p as f64;
                    s.inside_value(&[x, y]) >= 0.0
                })
                .collect()
        })
        .collect();
    let at = |i: i64, j: i64| i >= 0 && j >= 0 && (i as usize) < p && (j as usize) < p && filled[i as usize][j as usize];
    let (mut v, mut e, mut f) = (0i64, 0i64, 0i64);
    for i in 0..=p as i64 {
        for j in 0..=p as i64 {
            if at(i, j) || at(i - 1, j) || at(i, j - 1) || at(i - 1, j - 1) {
                v += 1;
            }
            if at(i, j) || at(i, j - 1) {
                e += 1; // edge (i,j)-(i+1,j)
            }
            if at(i, j) || at(i - 1, j) {
                e += 1; // edge (i,j)-(i,j+1)
            }
            if at(i, j) {
                f += 1;
            }
        }
    }
    v - e + f
}

fn graphs() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, want) in [("disk", (2, 1)), ("annulus", (4, 4))] {
        let s = scene(name);
        let g = build_trajectory_graph_2d(&s, &GraphOptions::default()).expect("graph");
        let chi = pixel_chi(&s);
        let ok = (g.vertices.len(), g.edges.len()) == want && g.degree_law_holds() && g.euler_characteristic() == chi;
        pass &= ok;
        parts.push(format!(
            "{name} (V,E)=({},{}) chi {} pixel chi {chi}",
            g.vertices.len(),
            g.edges.len(),
            g.euler_characteristic()
        ));
    }
    outcome(pass, parts.join("; "))
}

fn counting_inequality() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in ["disk", "annulus", "slab", "two_holes", "ball", "shell"] {
        let s = scene(name);
        let c = match s.dim() {
            2 => count_mm_2d(&s, &CensusOptions::default()),
            _ => count_mm_3d(&s, &CensusOptions::default()),
        }
        .expect("census");
        // recount r from the trajectories themselves
        let r: usize = c.trajectories.iter().map(|t| t.events.len()).sum();
        let ok = r == c.r && r <= (c.n + 2) * c.count();
        pass &= ok;
        parts.push(format!("{name} {r}<={}", (c.n + 2) * c.count()));
    }
    outcome(pass, parts.join(", "))
}

/// Sign from the cycle decomposition.
fn cycle_sign(p: &[usize]) -> i64 {
    let mut seen = vec![false; p.len()];
    let mut cycles = 0;
    for i in 0..p.len() {
        if !seen[i] {
            cycles += 1;
            let mut j = i;
            while !seen[j] {
                seen[j] = true;
                j = p[j];
            }
        }
    }
    if (p.len() - cycles) % 2 == 0 {
        1
    } else {
        -1
    }
}

fn all_perms(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in all_perms(n - 1) {
        for i in 0..=p.len() {
            let mut v = p.clone();
            v.insert(i, n - 1);
            out.push(v);
        }
    }
    out
}

fn chain_operators() -> Outcome {
    let z2 = Group::free(2);
    let tri = LabeledSimplex::from_labels(&z2, vec![0, 1, 2], &[vec![1, 0], vec![2, -1], vec![1, -1]], Some("s".into()))
        .expect("triangle");
    let tet = LabeledSimplex::from_labels(
        &z2,
        vec![0, 1, 2, 3],
        &[vec![1, 0], vec![1, 2], vec![0, 3], vec![0, 2], vec![-1, 3], vec![-1, 1]],
        Some("t".into()),
    )
    .expect("tetrahedron");
    let s3 = Group::s3();
    let (a, b, c) = (vec![1], vec![3], vec![4]);
    let ab = s3.mul(&s3.inv(&a), &b);
    let ac = s3.mul(&s3.inv(&a), &c);
    let bc = s3.mul(&s3.inv(&b), &c);
    let s3_tet = LabeledSimplex::from_labels(&s3, vec![0, 1, 2, 3], &[a, b, c, ab, ac, bc], Some("u".into()))
        .expect("S3 tetrahedron");
    let mut checked = 0;
    let mut pass = true;
    for (group, s) in [(&z2, &tri), (&z2, &tet), (&s3, &s3_tet)] {
        let single = |x: &LabeledSimplex| LabeledChain::from_terms(group.clone(), [(x.clone(), q(1, 1))]);
        let base = single(s).straighten().symm();
        for p in all_perms(s.vertices.len()) {
            let lhs = single(&s.permuted(group, &p)).straighten().symm();
            pass &= lhs == base.scaled(&q(cycle_sign(&p), 1));
            checked += 1;
        }
        let c = single(s);
        pass &= c.symm().boundary() == c.boundary().symm();
        pass &= c.straighten().boundary() == c.boundary().straighten();
        pass &= c.boundary().boundary().is_zero();
    }
    outcome(pass, format!("{checked} permutations, boundary commutation exact"))
}

fn load_chain(name: &str) -> LabeledChain {
    parse_chain(&std::fs::read_to_string(root().join(format!("data/chains/{name}.json"))).unwrap()).unwrap()
}

fn load_coloring(name: &str) -> PartialColoring {
    parse_coloring(&std::fs::read_to_string(root().join(format!("data/chains/{name}.json"))).unwrap()).unwrap()
}

/// `|xA Δ A| / |A|` by explicit set comparison.
fn direct_ratio(group: &Group, a: &FolnerSet, x: &[i64]) -> BigRational {
    let set: BTreeSet<Vec<i64>> = a.elements().into_iter().collect();
    let moved: BTreeSet<Vec<i64>> = set.iter().map(|y| group.mul(x, y)).collect();
    BigRational::new((set.symmetric_difference(&moved).count() as i64).into(), (set.len() as i64).into())
}

fn amenable() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let cycles = ["z_edge_cycle", "z_tetra_boundary", "z2_edge_cycle", "z2_triangle_loop"];
    let coloring = load_coloring("coloring_01");
    for name in cycles {
        let c = load_chain(name);
        for eps in [q(1, 10), q(1, 100)] {
            match amenable_average(&c, &coloring, &eps, AverageMode::PerSimplex, DEFAULT_SIZE_CAP) {
                Ok(r) => {
                    let ok = r.is_cycle && r.norm <= r.bound;
                    pass &= ok;
                    parts.push(format!("{name}@{eps}: {} <= {}", r.norm, r.bound));
                }
                Err(e) => {
                    pass = false;
                    parts.push(format!("{name}@{eps}: {e}"));
                }
            }
        }
    }
    let z = Group::free(1);
    let z2 = Group::free(2);
    for side in [20i64, 200] {
        let a = FolnerSet::Box { rank: 1, side };
        for x in [1i64, -3, 7] {
            let closed = q(2 * x.abs(), side);
            pass &= a.ratio(&[x]) == closed && direct_ratio(&z, &a, &[x]) == closed;
        }
    }
    let a2 = FolnerSet::Box { rank: 2, side: 20 };
    for x in [[3i64, 0], [2, -5]] {
        pass &= a2.ratio(&x) == direct_ratio(&z2, &a2, &x);
    }
    for (group, labels, a) in [
        (&z, vec![vec![3i64]], FolnerSet::Box { rank: 1, side: 20 }),
        (&z2, vec![vec![2, -1]], FolnerSet::Box { rank: 2, side: 20 }),
    ] {
        let s = LabeledSimplex::from_labels(group, vec![0, 1], &labels, None).unwrap();
        let x = &labels[0];
        pass &= square_fraction(group, &a, x) > q(0, 1);
        pass &= involution_partial_sum(group, &s, &coloring, (0, 1), &a).is_zero();
    }
    outcome(pass, parts.join(", "))
}

fn norm_bounds() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut slowest = Duration::ZERO;
    let mut timed = |f: &mut dyn FnMut() -> norm::NormReport| {
        let start = Instant::now();
        let r = f();
        slowest = slowest.max(start.elapsed());
        r
    };
    let g2 = norm::parse_off(&std::fs::read_to_string(root().join("data/complexes/genus2.off")).unwrap()).unwrap();
    let genus = g2.genus().unwrap();
    let oracle = norm::surface_norm_oracle(genus);
    let r = timed(&mut || norm::norm_lp(&g2).unwrap());
    pass &= genus == 2 && g2.triangles.len() <= 1000 && r.value >= oracle as f64 && r.certified;
    parts.push(format!("genus 2: {} >= {oracle}", r.value));

    let sphere = norm::tetrahedron_sphere();
    let model = StraightModel::sphere_from(&sphere).unwrap();
    let sub = sphere.barycentric_subdivision();
    let before = timed(&mut || norm::norm_lp_straight(&sphere, &model).unwrap());
    let after = timed(&mut || norm::norm_lp_straight(&sub.surface, &model.subdivided(&sub)).unwrap());
    pass &= after.value <= before.value + 1e-9 && before.certified && after.certified;
    parts.push(format!("sphere {:.4} -> {:.4}", before.value, after.value));

    let (torus, flat) = norm::seven_vertex_torus();
    let model = StraightModel::FlatTorus(flat);
    let sub = torus.barycentric_subdivision();
    let before = timed(&mut || norm::norm_lp_straight(&torus, &model).unwrap());
    let after = timed(&mut || norm::norm_lp_straight(&sub.surface, &model.subdivided(&sub)).unwrap());
    pass &= after.value <= before.value + 1e-9 && before.certified && after.certified && before.value >= 0.0;
    parts.push(format!("torus {:.4} -> {:.4}", before.value, after.value));

    for name in ["disk", "annulus", "pants"] {
        let x = norm::parse_off(&std::fs::read_to_string(root().join(format!("data/complexes/{name}.off"))).unwrap())
            .unwrap();
        let d = x.double().unwrap();
        pass &= d.euler_characteristic() == 2 * x.euler_characteristic() && d.is_closed();
        parts.push(format!("D({name}) chi {}", d.euler_characteristic()));
    }
    pass &= slowest < Duration::from_secs(120);
    outcome(pass, format!("{}; slowest LP {}", parts.join(", "), secs(slowest)))
}

fn stratified() -> Outcome {
    let labels = parse_strat_labels(&std::fs::read_to_string(root().join("data/labels/three_rays.json")).unwrap()).unwrap();
    let verdicts = check_stratified_cycle(&labels).unwrap();
    let names: Vec<&str> = verdicts.iter().map(|v| v.name.as_str()).collect();
    let built: Vec<_> = three_ray_diagrams().into_iter().map(|s| s.faces).collect();
    let same_encoding = labels.simplices.iter().map(|s| s.faces.clone()).collect::<Vec<_>>() == built;
    let only = |i: usize, c: Condition| {
        !verdicts[i].violations.is_empty() && verdicts[i].violations.iter().all(|v| v.condition == c)
    };
    let pass = names == ["a", "b", "c", "d", "e", "f"]
        && same_encoding
        && verdicts[..3].iter().all(|v| v.passes())
        && only(3, Condition::Ord)
        && only(4, Condition::Int)
        && only(5, Condition::Cellular);
    let summary: Vec<String> = verdicts
        .iter()
        .map(|v| {
            let c: Vec<String> = v.violations.iter().map(|x| format!("{:?}", x.condition)).collect();
            format!("{}:{}", v.name, if c.is_empty() { "pass".into() } else { c.join("+") })
        })
        .collect();
    outcome(pass, summary.join(" "))
}

/// Brute-force check of the three partition properties over all point pairs.
fn partition_oracle(space: &DiscretizedStratifiedSpace, parts: &[Vec<usize>], eps: f64, delta: f64) -> (bool, bool, bool) {
    let st = &space.strata;
    let members: Vec<Vec<usize>> = (0..st.len()).map(|s| space.members(s)).collect();
    let min_dist = |a: &[usize], b: &[usize]| {
        let mut best = f64::INFINITY;
        for &i in a {
            let p = space.point(i);
            for &j in b {
                let r = space.point(j);
                let d = (p[0] - r[0]).powi(2) + (p[1] - r[1]).powi(2);
                if d < best {
                    best = d;
                }
            }
        }
        best.sqrt()
    };
    let mut separated = true;
    for a in 0..st.len() {
        for b in a + 1..st.len() {
            if !st.comparable(a, b) {
                separated &= min_dist(&parts[a], &parts[b]) > delta;
                separated &= min_dist(&parts[a], &members[b]) > delta;
                separated &= min_dist(&members[a], &parts[b]) > delta;
            }
        }
    }
    let mut close = true;
    for (s, part) in parts.iter().enumerate() {
        for &i in part {
            let p = space.point(i);
            close &= members[s].iter().any(|&j| {
                let r = space.point(j);
                ((p[0] - r[0]).powi(2) + (p[1] - r[1]).powi(2)).sqrt() < eps
            });
        }
    }
    let mut contained = true;
    for (s, part) in parts.iter().enumerate() {
        let outside: Vec<usize> = (0..space.len()).filter(|&i| !space.neighborhoods[s][i]).collect();
        contained &= min_dist(part, &outside) >= delta;
    }
    (separated, close, contained)
}

fn partition() -> Outcome {
    let eps = 0.05;
    let space = DiscretizedStratifiedSpace::three_ray_plane(200, 0.01).expect("space");
    let start = Instant::now();
    let p = build_partition(&space, eps);
    let elapsed = start.elapsed();
    let p = match p {
        Ok(p) => p,
        Err(e) => return outcome(false, format!("construction failed: {e}")),
    };
    let check = verify_partition(&space, &p);
    let (separated, close, contained) = partition_oracle(&space, &p.parts, eps, p.delta);
    let counts = (0..space.strata.len()).filter(|&s| space.strata.dims[s] == 0).count();
    let pass = check.holds()
        && separated
        && close
        && contained
        && counts == 1
        && space.len() == 40_000
        && elapsed < Duration::from_secs(60);
    outcome(
        pass,
        format!(
            "delta {:.2e}, separation {separated}, within eps {close}, containment {contained}; built in {}",
            p.delta,
            secs(elapsed)
        ),
    )
}

fn run_cli(args: &[&str], out: &Path) -> (Vec<u8>, Vec<(String, Vec<u8>)>) {
    let output = Command::new(env!("CARGO_BIN_EXE_traverse"))
        .args(args)
        .arg("--out")
        .arg(out)
        .current_dir(root())
        .output()
        .expect("spawn traverse");
    assert!(output.status.success(), "{args:?}: {}", String::from_utf8_lossy(&output.stderr));
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(out)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    (output.stdout, files)
}

fn determinism() -> Outcome {
    let configs: [&[&str]; 5] = [
        &["--analysis", "census", "--scene", "scenes/annulus.json", "--seed", "7"],
        &["--analysis", "graph", "--scene", "scenes/disk.json"],
        &["--analysis", "chains", "--chain", "data/chains/z2_edge_cycle.json", "--coloring", "data/chains/coloring_01.json"],
        &["--analysis", "norm", "--complex", "data/complexes/tetrahedron.off", "--model", "sphere", "--labels", "data/labels/three_rays.json"],
        &["--analysis", "partition", "--space", "data/spaces/three_rays_40.json", "--epsilon", "0.3"],
    ];
    let dir = tempfile::tempdir().unwrap();
    let mut pass = true;
    for (k, args) in configs.iter().enumerate() {
        let first = run_cli(args, &dir.path().join(format!("{k}a")));
        let second = run_cli(args, &dir.path().join(format!("{k}b")));
        pass &= first == second && !first.1.is_empty();
    }
    outcome(pass, format!("{} configurations run twice", configs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("local-model round-trip", local_models),
        ("type census cardinalities", type_census),
        ("2D mm counts vs sweep oracle", planar_counts),
        ("trajectory graphs", graphs),
        ("counting inequality", counting_inequality),
        ("chain operators", chain_operators),
        ("amenable reduction", amenable),
        ("norm LP and doubling", norm_bounds),
        ("stratified-cycle checker", stratified),
        ("partition construction", partition),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {name}: {} ({}; {})",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            secs(start.elapsed())
        );
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
