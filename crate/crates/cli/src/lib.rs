//! Batch runner behind the `traverse` binary. Every analysis returns its
//! summary text and report files as strings so that identical inputs give
//! byte-identical output.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use num_rational::BigRational;
use serde_json::{json, Value};
use traverse_core::census::{count_mm_2d, count_mm_3d, CensusOptions, MMCensus};
use traverse_core::chain::{self, AverageMode, PartialColoring, DEFAULT_SIZE_CAP};
use traverse_core::graph::{build_trajectory_graph_2d, GraphOptions};
use traverse_core::norm::{self, StraightModel, TriangulatedSurface};
use traverse_core::partition::{self, DiscretizedStratifiedSpace};
use traverse_core::strata::{check_boundary_generic, find_strata, StrataOptions};
use traverse_core::stratcheck;
use traverse_core::{Error, Scene};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Analysis {
    Strata,
    Census,
    Graph,
    Chains,
    Norm,
    Partition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormModel {
    /// Every oriented triangle on the complex's vertices is a candidate.
    Combinatorial,
    /// Geodesic triangles on the sphere through the vertex coordinates.
    Sphere,
    /// Straight triangles of the bundled flat seven-vertex torus.
    FlatTorus,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub analysis: Analysis,
    pub scene: Option<PathBuf>,
    pub chain: Option<PathBuf>,
    pub coloring: Option<PathBuf>,
    pub complex: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub space: Option<PathBuf>,
    pub model: NormModel,
    pub subdivide: usize,
    pub double: bool,
    pub epsilon: Option<String>,
    pub grid: usize,
    pub tol: Option<f64>,
    pub seeds: Option<usize>,
    pub seed: u64,
    pub allow_nongeneric: bool,
}

impl RunConfig {
    pub fn new(analysis: Analysis) -> Self {
        RunConfig {
            analysis,
            scene: None,
            chain: None,
            coloring: None,
            complex: None,
            labels: None,
            space: None,
            model: NormModel::Combinatorial,
            subdivide: 0,
            double: false,
            epsilon: None,
            grid: 200,
            tol: None,
            seeds: None,
            seed: 0,
            allow_nongeneric: false,
        }
    }
}

/// Summary text plus named report files.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub summary: String,
    pub files: Vec<(String, String)>,
}

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

/// 2 for unreadable or invalid input, 3 for genericity violations, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::GenericityViolation(_) => 3,
        Error::Parse { .. }
        | Error::Unsupported(_)
        | Error::InvalidScene(_)
        | Error::InvalidInput(_)
        | Error::MalformedSimplex(_)
        | Error::MalformedComplex(_)
        | Error::Json(_)
        | Error::Io(_) => 2,
        _ => 1,
    }
}

fn fail(e: Error) -> Failure {
    Failure { code: exit_code(&e), message: e.to_string() }
}

fn input_error(message: String) -> Failure {
    Failure { code: 2, message }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

/// Runs `parse` on the file, prefixing failures with the path.
fn load<T>(path: &Option<PathBuf>, what: &str, parse: impl FnOnce(&str) -> traverse_core::Result<T>) -> Result<T, Failure> {
    let path = path.as_ref().ok_or_else(|| input_error(format!("this analysis needs --{what}")))?;
    let text = read(path)?;
    parse(&text).map_err(|e| Failure { code: 2, message: format!("{}: {e}", path.display()) })
}

pub fn run(cfg: &RunConfig) -> Result<RunOutput, Failure> {
    if let Some(t) = cfg.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(input_error(format!("--tol must be positive, got {t}")));
        }
    }
    match cfg.analysis {
        Analysis::Strata => run_strata(cfg),
        Analysis::Census => run_census(cfg),
        Analysis::Graph => run_graph(cfg),
        Analysis::Chains => run_chains(cfg),
        Analysis::Norm => run_norm(cfg),
        Analysis::Partition => run_partition(cfg),
    }
}

fn census_options(cfg: &RunConfig) -> CensusOptions {
    let mut opts = CensusOptions { allow_nongeneric: cfg.allow_nongeneric, ..Default::default() };
    opts.strata.seed = cfg.seed;
    if let Some(t) = cfg.tol {
        opts.strata.tol = t;
        opts.flow.tol = t;
    }
    if let Some(s) = cfg.seeds {
        opts.seeds = s;
    }
    opts
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json");
    s.push('\n');
    s
}

fn run_strata(cfg: &RunConfig) -> Result<RunOutput, Failure> {
    let scene = load(&cfg.scene, "scene", Scene::from_json)?;
    let opts = StrataOptions { seed: cfg.seed, tol: cfg.tol.unwrap_or(StrataOptions::default().tol), ..Default::default() };
    let seeds = cfg.seeds.unwrap_or(512);
    let mut summary = format!("analysis: strata\nscene: {}\n", scene.name());
    let mut depths = Vec::new();
    for k in 1..=scene.dim() {
        let sample = find_strata(&scene, k, seeds, &opts).map_err(fail)?;
        let report = check_boundary_generic(&scene, &sample, opts.tol);
        let _ = writeln!(
            summary,
            "depth {k}: {} points, {} curves, boundary generic: {}",
            sample.points.len(),
            sample.curves.len(),
            if report.passed() { "yes" } else { "no" }
        );
        if !report.passed() && !cfg.allow_nongeneric {
            return Err(Failure {
                code: 3,
                message: format!("genericity violation: depth {k} stratum of {} is not boundary generic", scene.name()),
            });
        }
        depths.push(json!({"sample": sample, "generic": report}));
    }
    Ok(RunOutput { summary, files: vec![("strata.json".into(), pretty(&json!({"scene": scene.name(), "depths": depths})))] })
}

/// Norm data for the double of a planar domain: `χ(X) = (#(2) − #(121))/2`
/// from the fold census, the double has genus `1 − χ(X)` and the classical
/// surface norm `4g − 4` (zero for spheres and tori).
pub fn planar_double_norm(census: &MMCensus) -> Option<(i64, i64)> {
    if census.n != 1 {
        return None;
    }
    let count = |l: &str| census.trajectories.iter().filter(|t| t.label() == l).count() as i64;
    let diff = count("(2)") - count("(121)");
    if diff % 2 != 0 {
        return None;
    }
    let chi = diff / 2;
    Some((chi, norm::surface_norm_oracle(1 - chi)))
}

/// Consistency line for `#mm(v) ≥ const(n)·‖α_*[D(X)]‖`; the constant is
/// unknown, so only a zero census against a positive norm is flagged.
pub fn report_theorem_check(census: &MMCensus, norm: Option<i64>) -> String {
    match norm {
        None => format!("theorem check: #mm = {}, no norm data", census.count()),
        Some(v) => {
            let verdict = if census.count() == 0 && v > 0 { "flagged" } else { "consistent" };
            format!("theorem check: {} ≥ {v} · c: {verdict}", census.count())
        }
    }
}

fn run_census(cfg: &RunConfig) -> Result<RunOutput, Failure> {
    let scene = load(&cfg.scene, "scene", Scene::from_json)?;
    let opts = census_options(cfg);
    let census = match scene.dim() {
        2 => count_mm_2d(&scene, &opts),
        3 => count_mm_3d(&scene, &opts),
        d => Err(Error::InvalidInput(format!("census supports dimensions 2 and 3, not {d}"))),
    }
    .map_err(fail)?;
    let mut summary = format!("analysis: census\nscene: {}\n#mm(v) = {}\n", scene.name(), census.count());
    let _ = writeln!(
        summary,
        "r = {}, (n+2)·#mm = {}: {}",
        census.r,
        (census.n + 2) * census.count(),
        if census.inequality_holds() { "holds" } else { "fails" }
    );
    if census.incomplete {
        summary.push_str("warning: re-touch sweep was incomplete\n");
    }
    for v in &census.violations {
        let _ = writeln!(summary, "violation: {v}");
    }
    let norm = planar_double_norm(&census);
    if let Some((chi, value)) = norm {
        let _ = writeln!(summary, "chi(X) = {chi}, double genus {}, surface norm {value}", 1 - chi);
    }
    let _ = writeln!(summary, "{}", report_theorem_check(&census, norm.map(|n| n.1)));
    Ok(RunOutput { summary, files: vec![("census.csv".into(), census.to_csv())] })
}

fn run_graph(cfg: &RunConfig) -> Result<RunOutput, Failure> {
    let scene = load(&cfg.scene, "scene", Scene::from_json)?;
    let mut opts = GraphOptions::default();
    opts.census = census_options(cfg);
    let g = build_trajectory_graph_2d(&scene, &opts).map_err(fail)?;
    let summary = format!(
        "analysis: graph\nscene: {}\nvertices = {}, edges = {}, chi = {}\ndegree law: {}\n",
        scene.name(),
        g.vertices.len(),
        g.edges.len(),
        g.euler_characteristic(),
        if g.degree_law_holds() { "holds" } else { "fails" }
    );
    Ok(RunOutput { summary, files: vec![("graph.dot".into(), g.to_dot())] })
}

fn parse_epsilon(text: &str) -> Result<BigRational, Failure> {
    let eps = chain::parse_coefficient(&Value::String(text.into()))
        .or_else(|_| {
            text.parse::<f64>()
                .ok()
                .and_then(BigRational::from_float)
                .ok_or_else(|| Error::InvalidInput(format!("bad epsilon {text:?}")))
        })
        .map_err(fail)?;
    if eps <= BigRational::from_integer(0.into()) {
        return Err(input_error(format!("epsilon must be positive, got {text}")));
    }
    Ok(eps)
}

fn run_chains(cfg: &RunConfig) -> Result<RunOutput, Failure> {
    let c = load(&cfg.chain, "chain", chain::parse_chain)?;
    let coloring = match &cfg.coloring {
        Some(_) => load(&cfg.coloring, "coloring", chain::parse_coloring)?,
        None => PartialColoring::new(vec![]).map_err(fail)?,
    };
    let eps = parse_epsilon(cfg.epsilon.as_deref().unwrap_or("1/10"))?;
    let r = chain::amenable_average(&c, &coloring, &eps, AverageMode::PerSimplex, DEFAULT_SIZE_CAP).map_err(fail)?;
    let summary = format!(
        "analysis: chains\nsimplices: {}\nepsilon = {}\naverage is a cycle: {}\nnorm = {}, bound = {} + {}·{} = {}: {}\n",
        c.len(),
        r.epsilon,
        if r.is_cycle { "yes" } else { "no" },
        r.norm,
        r.essential_mass,
        r.epsilon,
        r.nonessential_mass,
        r.bound,
        if r.bound_holds() { "holds" } else { "fails" }
    );
    let report = json!({
        "epsilon": r.epsilon.to_string(),
        "is_cycle": r.is_cycle,
        "norm": r.norm.to_string(),
        "essential_mass": r.essential_mass.to_string(),
        "nonessential_mass": r.nonessential_mass.to_string(),
        "bound": r.bound.to_string(),
        "bound_holds": r.bound_holds(),
        "folner": r.folner,
    });
    Ok(RunOutput {
        summary,
        files: vec![
            ("chains.json".into(), pretty(&report)),
            ("average.json".into(), chain::chain_to_json(&r.average) + "\n"),
        ],
    })
}

fn run_norm(cfg: &RunConfig) -> Result<RunOutput, Failure> {
    if cfg.complex.is_none() && cfg.labels.is_none() {
        return Err(input_error("norm needs --complex or --labels".into()));
    }
    let mut summary = String::from("analysis: norm\n");
    let mut files = Vec::new();
    if cfg.complex.is_some() {
        let (text, report) = norm_report(cfg)?;
        summary.push_str(&text);
        files.push(("norm.json".into(), pretty(&report)));
    }
    if cfg.labels.is_some() {
        let labels = load(&cfg.labels, "labels", stratcheck::parse_strat_labels)?;
        let verdicts = stratcheck::check_stratified_cycle(&labels).map_err(fail)?;
        for v in &verdicts {
            let conds: Vec<String> = v.violations.iter().map(|x| format!("{:?}@{}", x.condition, x.face).to_lowercase()).collect();
            let _ = writeln!(
                summary,
                "simplex {}: {}",
                v.name,
                if conds.is_empty() { "pass".to_string() } else { conds.join(", ") }
            );
        }
        files.push(("stratified.json".into(), pretty(&json!(verdicts))));
    }
    Ok(RunOutput { summary, files })
}

fn norm_report(cfg: &RunConfig) -> Result<(String, Value), Failure> {
    let mut t: TriangulatedSurface = load(&cfg.complex, "complex", norm::parse_off)?;
    if cfg.double {
        t = t.double().map_err(fail)?;
    }
    let mut model = match cfg.model {
        NormModel::Combinatorial => None,
        NormModel::Sphere => Some(StraightModel::sphere_from(&t).map_err(fail)?),
        NormModel::FlatTorus => {
            let (torus, flat) = norm::seven_vertex_torus();
            if torus.triangles != t.triangles {
                return Err(input_error("the flat-torus model needs the bundled seven-vertex torus".into()));
            }
            Some(StraightModel::FlatTorus(flat))
        }
    };
    for _ in 0..cfg.subdivide {
        let sub = t.barycentric_subdivision();
        model = model.map(|m| m.subdivided(&sub));
        t = sub.surface;
    }
    if !t.is_closed() {
        return Err(input_error("the norm LP needs a closed surface; pass --double for a surface with boundary".into()));
    }
    let genus = t.genus().map_err(fail)?;
    let lp = match &model {
        None => norm::norm_lp(&t),
        Some(m) => norm::norm_lp_straight(&t, m),
    }
    .map_err(fail)?;
    let oracle = norm::surface_norm_oracle(genus);
    let text = format!(
        "triangles = {}, chi = {}, genus = {genus}\nlp value = {} ({}, {} candidates, certified: {})\nsurface norm oracle = {oracle}\n",
        t.triangles.len(),
        t.euler_characteristic(),
        lp.exact.clone().unwrap_or_else(|| format!("{:.9}", lp.value)),
        lp.method,
        lp.candidates,
        if lp.certified { "yes" } else { "no" }
    );
    let report = json!({
        "triangles": t.triangles.len(),
        "euler_characteristic": t.euler_characteristic(),
        "genus": genus,
        "doubled": cfg.double,
        "subdivisions": cfg.subdivide,
        "lp": lp,
        "oracle": oracle,
    });
    Ok((text, report))
}

fn run_partition(cfg: &RunConfig) -> Result<RunOutput, Failure> {
    let space = match &cfg.space {
        Some(_) => load(&cfg.space, "space", partition::parse_space)?,
        None => {
            if cfg.grid < 2 {
                return Err(input_error("--grid must be at least 2".into()));
            }
            DiscretizedStratifiedSpace::three_ray_plane(cfg.grid, 2.0 / cfg.grid as f64).map_err(fail)?
        }
    };
    let eps: f64 = match &cfg.epsilon {
        None => 0.05,
        Some(s) => s.parse().map_err(|_| input_error(format!("bad epsilon {s:?}")))?,
    };
    let p = partition::build_partition(&space, eps).map_err(fail)?;
    let check = partition::verify_partition(&space, &p);
    let names = &space.strata.names;
    let mut summary = format!(
        "analysis: partition\npoints = {}, spacing = {:.6}\nepsilon = {eps}, delta = {:.9}\n",
        space.len(),
        space.spacing,
        p.delta
    );
    for (k, e) in p.epsilons.iter().enumerate() {
        let _ = writeln!(summary, "eps_{k} = {e:.9}");
    }
    for (s, part) in p.parts.iter().enumerate() {
        let _ = writeln!(summary, "P_{} = {} points", names[s], part.len());
    }
    let yes = |b: bool| if b { "holds" } else { "fails" };
    let _ = writeln!(
        summary,
        "separation: {}\nwithin epsilon: {}\nneighborhood containment: {}",
        yes(check.separated()),
        yes(check.close()),
        yes(check.contained())
    );
    let parts: serde_json::Map<String, Value> =
        p.parts.iter().enumerate().map(|(s, part)| (names[s].clone(), json!(part))).collect();
    let report = json!({
        "epsilon": eps,
        "epsilons": p.epsilons,
        "delta": p.delta,
        "check": check,
        "parts": parts,
    });
    Ok(RunOutput { summary, files: vec![("partition.json".into(), pretty(&report))] })
}
