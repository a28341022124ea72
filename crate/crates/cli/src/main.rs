//! `nilcay` command-line driver.
//!
//! Every subcommand prints one JSON envelope (or a TSV table with
//! `--format tsv`) to stdout or `--out`. Errors go to stderr as a JSON
//! diagnostic. Exit status: 0 when the result was delivered, 1 when a
//! checked claim failed, 2 on usage or input errors.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use nilcay::autlab::{
    aut_e_orbit, enumerate_local_auts_for, induced_quotient_check, is_affine_on_ball, moved_vertices,
    normality_verdict, DEFAULT_AUT_CAP,
};
use nilcay::cayley::{
    check_vertex_map, generate_ball, Ball, BallOptions, GenSet, VertexMap, DEFAULT_GEODESIC_CAP,
    DEFAULT_VERTEX_CAP,
};
use nilcay::constructions::{
    fsf_generating_set, klein_flip_map, klein_grid_map, lift_generating_set, twin_classes, twin_swap_map,
    wreath_ball_check, LabeledGraph,
};
use nilcay::order::{
    classify_distorted, convexity_check, distortion_profile, BiOrder, DEFAULT_KMAX, DEFAULT_PROFILE_BUDGET,
    DEFAULT_TOL,
};
use nilcay::report::{Report, Verdict};
use nilcay::structure::{
    derived_isolator_witness, find_conjugator, isolator_oracle, project_to_quotient, quotient_by_torsion,
    rank_report, torsion_subgroup, z_dagger, SubgroupWitness,
};
use nilcay::verify::{run_suite, CRITERIA, DEFAULT_SEED, TOOL_VERSION};
use nilcay::{builtin, parse_presentation, Error, Family, GroupElement, PcPresentation};

#[derive(Parser, Debug)]
#[command(name = "nilcay", version, about = "Cayley-graph balls of nilpotent groups and the checks built on them")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Worker threads (output does not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output format; defaults to tsv when `--out` ends in `.tsv`, else json.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Seed for sampled checks.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Include wall-clock runtime in the output.
    #[arg(long, global = true)]
    timing: bool,
    /// Write the primary output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Vertex cap for ball generation.
    #[arg(long, global = true, env = "NILCAY_BUDGET_VERTICES", default_value_t = DEFAULT_VERTEX_CAP)]
    budget_vertices: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Tsv,
}

#[derive(Args, Debug, Clone)]
struct GroupArgs {
    /// Built-in family id, e.g. `heisenberg`, `zn:3`, `zn_cross_cyclic:1:2`.
    #[arg(long, conflicts_with = "presentation")]
    group: Option<String>,
    /// Presentation file.
    #[arg(long)]
    presentation: Option<PathBuf>,
    /// `std`, `fsf`, `lift`, or `;`-separated elements (symmetrised).
    #[arg(long, default_value = "std")]
    genset: String,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build B(r) and export it.
    Ball {
        #[command(flatten)]
        g: GroupArgs,
        #[arg(long)]
        radius: usize,
        /// Export distances from e instead of edges.
        #[arg(long)]
        distances: bool,
    },
    /// Word distance between two elements.
    Distance {
        #[command(flatten)]
        g: GroupArgs,
        #[arg(long)]
        radius: usize,
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        #[arg(long, allow_hyphen_values = true)]
        to: String,
    },
    /// Count or list geodesics.
    Geodesics {
        #[arg(value_enum)]
        action: GeodesicAction,
        #[command(flatten)]
        g: GroupArgs,
        #[arg(long)]
        radius: usize,
        #[arg(long, allow_hyphen_values = true)]
        from: String,
        #[arg(long, allow_hyphen_values = true)]
        to: String,
        #[arg(long, default_value_t = DEFAULT_GEODESIC_CAP)]
        cap: usize,
    },
    /// Distortion profile and verdict for an element.
    Distortion {
        #[command(flatten)]
        g: GroupArgs,
        #[arg(long, allow_hyphen_values = true)]
        element: String,
        #[arg(long, default_value_t = DEFAULT_KMAX)]
        kmax: u64,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_PROFILE_BUDGET)]
        budget: usize,
    },
    /// Bi-order queries.
    Biorder {
        #[arg(value_enum)]
        action: BiorderAction,
        #[command(flatten)]
        g: GroupArgs,
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        y: Option<String>,
        #[arg(long, default_value_t = 6)]
        kmax: usize,
    },
    /// Torsion, isolators, the distorted centre, conjugators and ranks.
    Structure {
        #[arg(value_enum)]
        action: StructureAction,
        #[command(flatten)]
        g: GroupArgs,
        #[arg(long, default_value_t = 4)]
        radius: usize,
        #[arg(long, default_value_t = 8)]
        kmax: u64,
        #[arg(long, allow_hyphen_values = true)]
        a: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        b: Option<String>,
    },
    /// Generating-set and graph constructions.
    Construct {
        #[arg(value_enum)]
        action: ConstructAction,
        #[command(flatten)]
        g: GroupArgs,
        #[arg(long, default_value_t = 5)]
        radius: usize,
    },
    /// Local automorphisms of a ball.
    Autos {
        #[arg(value_enum)]
        action: AutosAction,
        #[command(flatten)]
        g: GroupArgs,
        #[arg(long)]
        radius: usize,
        #[arg(long, default_value_t = 2)]
        stability: usize,
        #[arg(long, default_value_t = DEFAULT_AUT_CAP)]
        cap: usize,
        #[arg(long, allow_hyphen_values = true)]
        element: Option<String>,
    },
    /// Whether every stable local automorphism is affine.
    Normality {
        #[command(flatten)]
        g: GroupArgs,
        #[arg(long)]
        radius: usize,
        #[arg(long, default_value_t = 2)]
        stability: usize,
        #[arg(long, default_value_t = DEFAULT_AUT_CAP)]
        cap: usize,
    },
    /// Descend a twin swap (or the identity) to G/torsion.
    Induced {
        #[command(flatten)]
        g: GroupArgs,
        #[arg(long)]
        radius: usize,
        /// Two twin vertices `g;h` to swap.
        #[arg(long, allow_hyphen_values = true)]
        swap: Option<String>,
    },
    /// Run the acceptance suites.
    Verify {
        /// `all` or a comma-separated list of criterion numbers.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Recorded in the output; the suites fix their own groups.
        #[arg(long)]
        group: Option<String>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GeodesicAction {
    Count,
    Enumerate,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BiorderAction {
    Compare,
    Max,
    Convexity,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StructureAction {
    Torsion,
    Isolator,
    Zdagger,
    Conjugator,
    Rank,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ConstructAction {
    Wreath,
    Fsf,
    Lift,
    Klein,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AutosAction {
    Enumerate,
    Orbit,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(Error::AnalyticDisagreement(_)) => "check-failed",
            CliError::Core(_) => "input",
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::AnalyticDisagreement(_)) => 1,
            _ => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// What a subcommand produced: the JSON body, an optional TSV rendering and
/// whether a checked claim failed.
struct Output {
    body: Value,
    tsv: Option<String>,
    failed: bool,
}

impl Output {
    fn report(r: Report) -> Self {
        let failed = r.verdict.is_failure();
        Output {
            body: serde_json::to_value(&r).expect("reports serialise"),
            tsv: None,
            failed,
        }
    }

    fn value(body: Value) -> Self {
        Output { body, tsv: None, failed: false }
    }

    fn with_tsv(mut self, tsv: String) -> Self {
        self.tsv = Some(tsv);
        self
    }
}

struct Group {
    p: Arc<PcPresentation>,
    standard: Vec<GroupElement>,
    label: String,
}

fn load_group(args: &GroupArgs) -> CliResult<Group> {
    match (&args.group, &args.presentation) {
        (Some(id), None) => {
            let family: Family = id.parse()?;
            let g = builtin(family.clone())?;
            Ok(Group {
                p: Arc::new(g.presentation),
                standard: g.genset,
                label: family.id(),
            })
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let p = parse_presentation(&text)?;
            let standard = p.declared_genset()?;
            Ok(Group {
                label: p.name().to_string(),
                p: Arc::new(p),
                standard,
            })
        }
        _ => Err(CliError::Usage("exactly one of --group or --presentation is required".into())),
    }
}

fn parse_element(p: &PcPresentation, s: &str) -> CliResult<GroupElement> {
    let g: GroupElement = s.parse()?;
    if g.len() != p.rank() || !p.is_normal_form(&g) {
        return Err(Error::InvalidParams(format!("`{s}` is not a normal form for {}", p.name())).into());
    }
    Ok(g)
}

fn required<'a>(v: &'a Option<String>, flag: &str) -> CliResult<&'a str> {
    v.as_deref().ok_or_else(|| CliError::Usage(format!("--{flag} is required here")))
}

fn resolve_genset(g: &Group, selector: &str) -> CliResult<GenSet> {
    let p = &g.p;
    match selector {
        "std" => Ok(GenSet::new(p, g.standard.clone())?),
        "fsf" => {
            let f = torsion_subgroup(p)?;
            let s = GenSet::new(p, g.standard.clone())?;
            Ok(fsf_generating_set(p, &f, &s)?.genset)
        }
        "lift" => {
            let mut sbar: Vec<GroupElement> = g
                .standard
                .iter()
                .map(|x| project_to_quotient(p, x))
                .filter(|x| !x.is_identity())
                .collect();
            sbar.sort();
            sbar.dedup();
            Ok(lift_generating_set(p, &sbar)?)
        }
        list => {
            let elems = list
                .split(';')
                .filter(|s| !s.trim().is_empty())
                .map(|s| parse_element(p, s))
                .collect::<CliResult<Vec<_>>>()?;
            Ok(GenSet::symmetrized(p, elems)?)
        }
    }
}

fn ball_for(g: &Group, args: &GroupArgs, r: usize, opts: BallOptions) -> CliResult<Ball> {
    let s = resolve_genset(g, &args.genset)?;
    Ok(generate_ball(Arc::clone(&g.p), s, r, opts)?)
}

fn strings(v: &[GroupElement]) -> Vec<String> {
    v.iter().map(|g| g.to_string()).collect()
}

fn graph_tsv(g: &LabeledGraph) -> String {
    let mut out = String::from("# u\tv\n");
    for &(u, v) in g.edges() {
        out.push_str(&format!("{}\t{}\n", g.labels()[u], g.labels()[v]));
    }
    out
}

struct Ctx {
    opts: BallOptions,
    seed: u64,
}

fn run(cmd: &Command, ctx: &Ctx) -> CliResult<(Option<Group>, Value, Output)> {
    let opts = ctx.opts;
    match cmd {
        Command::Ball { g: args, radius, distances } => {
            let g = load_group(args)?;
            let ball = ball_for(&g, args, *radius, opts)?;
            let spheres: Vec<usize> = (0..=*radius as u32).map(|k| ball.sphere(k).count()).collect();
            let tsv = if *distances { ball.export_distances() } else { ball.export_graph() };
            let body = json!({
                "vertices": ball.len(),
                "edges": ball.edges().count(),
                "sphere_sizes": spheres,
                "genset": strings(ball.genset().elements()),
            });
            let params = json!({"radius": radius, "genset": args.genset, "distances": distances});
            Ok((Some(g), params, Output::value(body).with_tsv(tsv)))
        }
        Command::Distance { g: args, radius, from, to } => {
            let g = load_group(args)?;
            let (u, v) = (parse_element(&g.p, from)?, parse_element(&g.p, to)?);
            let ball = ball_for(&g, args, *radius, opts)?;
            let d = ball.distance(&u, &v)?;
            let tsv = match d.exact() {
                Some(x) => format!("{from}\t{to}\t{x}\n"),
                None => format!("{from}\t{to}\t>={}\n", 2 * radius + 1),
            };
            let params = json!({"radius": radius, "genset": args.genset, "from": from, "to": to});
            Ok((Some(g), params, Output::value(json!({"distance": d})).with_tsv(tsv)))
        }
        Command::Geodesics { action, g: args, radius, from, to, cap } => {
            let g = load_group(args)?;
            let (u, v) = (parse_element(&g.p, from)?, parse_element(&g.p, to)?);
            let ball = ball_for(&g, args, *radius, opts)?;
            let params = json!({"radius": radius, "genset": args.genset, "from": from, "to": to, "cap": cap});
            let out = match action {
                GeodesicAction::Count => {
                    let n = ball.count_geodesics(&u, &v)?;
                    Output::value(json!({"count": n.to_string()})).with_tsv(format!("{n}\n"))
                }
                GeodesicAction::Enumerate => {
                    let paths = ball.enumerate_geodesics(&u, &v, *cap)?;
                    let described: Vec<String> = paths.iter().map(|q| q.describe()).collect();
                    let tsv = described.iter().map(|d| format!("{d}\n")).collect();
                    Output::value(json!({"count": paths.len(), "paths": described})).with_tsv(tsv)
                }
            };
            Ok((Some(g), params, out))
        }
        Command::Distortion { g: args, element, kmax, tol, budget } => {
            let g = load_group(args)?;
            let x = parse_element(&g.p, element)?;
            let s = resolve_genset(&g, &args.genset)?;
            let report = classify_distorted(Arc::clone(&g.p), &s, &x, *kmax, *tol, *budget)?;
            let profile = distortion_profile(Arc::clone(&g.p), &s, &x, *kmax, *budget)?;
            let params = json!({"genset": args.genset, "element": element, "kmax": kmax, "tol": tol, "budget": budget});
            Ok((Some(g), params, Output::report(report).with_tsv(profile.to_tsv())))
        }
        Command::Biorder { action, g: args, x, y, kmax } => {
            let g = load_group(args)?;
            let order = BiOrder::new(Arc::clone(&g.p))?;
            let params = json!({"genset": args.genset, "x": x, "y": y, "kmax": kmax});
            let out = match action {
                BiorderAction::Compare => {
                    let (a, b) = (parse_element(&g.p, required(x, "x")?)?, parse_element(&g.p, required(y, "y")?)?);
                    let c = match order.compare(&a, &b)? {
                        std::cmp::Ordering::Less => "<",
                        std::cmp::Ordering::Equal => "=",
                        std::cmp::Ordering::Greater => ">",
                    };
                    Output::value(json!({"x": a.to_string(), "y": b.to_string(), "order": c}))
                        .with_tsv(format!("{a}\t{c}\t{b}\n"))
                }
                BiorderAction::Max => {
                    let s = resolve_genset(&g, &args.genset)?;
                    let m = order.max_generator(&s)?;
                    Output::value(json!({"max_generator": m.to_string()})).with_tsv(format!("{m}\n"))
                }
                BiorderAction::Convexity => {
                    let s = resolve_genset(&g, &args.genset)?;
                    let m = match x {
                        Some(x) => parse_element(&g.p, x)?,
                        None => order.max_generator(&s)?,
                    };
                    let ball = generate_ball(Arc::clone(&g.p), s, *kmax, opts)?;
                    Output::report(convexity_check(&ball, &m, *kmax)?)
                }
            };
            Ok((Some(g), params, out))
        }
        Command::Structure { action, g: args, radius, kmax, a, b } => {
            let g = load_group(args)?;
            let params = json!({"genset": args.genset, "radius": radius, "kmax": kmax, "a": a, "b": b});
            let out = match action {
                StructureAction::Torsion => {
                    let mut t = torsion_subgroup(&g.p)?;
                    let normal = t.certify_normal(&g.p)?;
                    let elems = t.elements().unwrap_or_default();
                    let q = quotient_by_torsion(&g.p)?;
                    Output::value(json!({
                        "order": t.order(),
                        "elements": strings(&elems),
                        "normal": normal,
                        "quotient": q.name(),
                        "quotient_presentation": q.to_source(),
                    }))
                    .with_tsv(strings(&elems).iter().map(|e| format!("{e}\n")).collect())
                }
                StructureAction::Isolator => {
                    let ball = ball_for(&g, args, *radius, opts)?;
                    let h = derived_isolator_witness(&ball)?;
                    let rows = isolator_oracle(&ball, &h, *kmax)?;
                    let tsv = rows.iter().map(|(x, k)| format!("{x}\t{k}\n")).collect();
                    let list: Vec<Value> = rows.iter().map(|(x, k)| json!({"element": x.to_string(), "k": k})).collect();
                    Output::value(json!({"subgroup": "derived", "members": list})).with_tsv(tsv)
                }
                StructureAction::Zdagger => {
                    let ball = ball_for(&g, args, *radius, opts)?;
                    let z = z_dagger(&ball, *kmax)?;
                    Output::value(json!({"elements": strings(&z)}))
                        .with_tsv(strings(&z).iter().map(|e| format!("{e}\n")).collect())
                }
                StructureAction::Conjugator => {
                    let ball = ball_for(&g, args, *radius, opts)?;
                    let (x, y) = (parse_element(&g.p, required(a, "a")?)?, parse_element(&g.p, required(b, "b")?)?);
                    match find_conjugator(&ball, &x, &y, *kmax)? {
                        Some((_, w)) => Output::value(json!({"found": true, "witness": w})),
                        None => Output::value(json!({"found": false, "radius": radius})),
                    }
                }
                StructureAction::Rank => {
                    let t = torsion_subgroup(&g.p)?;
                    let mut r = rank_report(&g.p, &t)?;
                    let trivial = rank_report(&g.p, &SubgroupWitness::trivial(&g.p))?;
                    r = r.witness(json!({"trivial_subgroup": trivial.parameters}));
                    Output::report(r)
                }
            };
            Ok((Some(g), params, out))
        }
        Command::Construct { action, g: args, radius } => {
            let g = load_group(args)?;
            let params = json!({"genset": args.genset, "radius": radius});
            let out = match action {
                ConstructAction::Fsf => {
                    let f = torsion_subgroup(&g.p)?;
                    let s = GenSet::new(&g.p, g.standard.clone())?;
                    let fsf = fsf_generating_set(&g.p, &f, &s)?;
                    let ball = generate_ball(Arc::clone(&g.p), fsf.genset.clone(), *radius, opts)?;
                    let generating = g.standard.iter().all(|x| ball.contains(x));
                    let classes: Vec<Vec<String>> = twin_classes(&ball)
                        .into_iter()
                        .map(|c| c.into_iter().map(|v| ball.vertex(v).to_string()).collect())
                        .collect();
                    Output::value(json!({
                        "genset": strings(fsf.genset.elements()),
                        "identity_removed": fsf.removed_identity,
                        "symmetric": fsf.genset.is_symmetric(),
                        "generating": generating,
                        "twin_classes": classes,
                    }))
                    .with_tsv(strings(fsf.genset.elements()).iter().map(|e| format!("{e}\n")).collect())
                }
                ConstructAction::Lift => {
                    let lifted = resolve_genset(&g, "lift")?;
                    Output::value(json!({"genset": strings(lifted.elements())}))
                        .with_tsv(strings(lifted.elements()).iter().map(|e| format!("{e}\n")).collect())
                }
                ConstructAction::Wreath => {
                    let lifted = resolve_genset(&g, "lift")?;
                    let lifted_ball = generate_ball(Arc::clone(&g.p), lifted, *radius, opts)?;
                    let q = Arc::new(quotient_by_torsion(&g.p)?);
                    let qgens: Vec<GroupElement> = lifted_ball
                        .genset()
                        .elements()
                        .iter()
                        .map(|x| project_to_quotient(&g.p, x))
                        .collect();
                    let qs = GenSet::new(&q, dedup(qgens))?;
                    let quotient_ball = generate_ball(q, qs, *radius, opts)?;
                    let check = wreath_ball_check(&lifted_ball, &quotient_ball)?;
                    let graph = LabeledGraph::from_ball(&lifted_ball);
                    let r = Report::new(
                        "the lifted ball is the wreath product of the quotient ball with an edgeless graph",
                        if check.ok { Verdict::Pass } else { Verdict::Fail },
                    )
                    .param("lifted_vertices", lifted_ball.len())
                    .param("quotient_vertices", quotient_ball.len())
                    .param("witness", &check.witness);
                    Output::report(r).with_tsv(graph_tsv(&graph))
                }
                ConstructAction::Klein => {
                    let ball = generate_ball(Arc::clone(&g.p), GenSet::new(&g.p, g.standard.clone())?, *radius, opts)?;
                    let zg = builtin(Family::Zn(2))?;
                    let z = generate_ball(Arc::new(zg.presentation.clone()), GenSet::new(&zg.presentation, zg.genset)?, *radius, opts)?;
                    let flip = klein_flip_map(&ball)?;
                    let flip_ok = check_vertex_map(&ball, &ball, &flip)?;
                    let affine = is_affine_on_ball(&ball, &ball, &flip)?;
                    let grid_ok = check_vertex_map(&ball, &z, &klein_grid_map(&ball)?)?;
                    let ok = flip_ok.ok && grid_ok.ok && !affine.affine;
                    let r = Report::new(
                        "the flip is a non-affine graph automorphism and the grid map is an isometry to Z^2",
                        if ok { Verdict::Pass } else { Verdict::Fail },
                    )
                    .param("flip_valid", flip_ok.ok)
                    .param("flip_affine", affine.affine)
                    .param("grid_valid", grid_ok.ok)
                    .witness(json!({"affine_check": affine}));
                    Output::report(r).with_tsv(flip.export_tsv(&ball))
                }
            };
            Ok((Some(g), params, out))
        }
        Command::Autos { action, g: args, radius, stability, cap, element } => {
            let g = load_group(args)?;
            let s = resolve_genset(&g, &args.genset)?;
            let set = enumerate_local_auts_for(Arc::clone(&g.p), s, *radius, *stability, *cap, opts)?;
            let params = json!({"genset": args.genset, "radius": radius, "stability": stability, "cap": cap, "element": element});
            let out = match action {
                AutosAction::Enumerate => {
                    let maps: Vec<Value> = set
                        .auts
                        .iter()
                        .map(|a| json!({"moved": moved_vertices(&set.inner, &a.map, 16)}))
                        .collect();
                    let mut tsv = String::new();
                    for (i, a) in set.auts.iter().enumerate() {
                        for line in a.map.export_tsv(&set.inner).lines().filter(|l| !l.starts_with('#')) {
                            tsv.push_str(&format!("{i}\t{line}\n"));
                        }
                    }
                    Output::value(json!({"count": set.auts.len(), "maps": maps})).with_tsv(tsv)
                }
                AutosAction::Orbit => {
                    let x = parse_element(&g.p, required(element, "element")?)?;
                    let orbit = aut_e_orbit(&set, &x)?;
                    Output::value(json!({"element": x.to_string(), "orbit": strings(&orbit)}))
                        .with_tsv(strings(&orbit).iter().map(|e| format!("{e}\n")).collect())
                }
            };
            Ok((Some(g), params, out))
        }
        Command::Normality { g: args, radius, stability, cap } => {
            let g = load_group(args)?;
            let s = resolve_genset(&g, &args.genset)?;
            let report = normality_verdict(Arc::clone(&g.p), s, *radius, *stability, *cap, opts)?;
            let params = json!({"genset": args.genset, "radius": radius, "stability": stability, "cap": cap});
            Ok((Some(g), params, Output::report(report)))
        }
        Command::Induced { g: args, radius, swap } => {
            let g = load_group(args)?;
            let ball = ball_for(&g, args, *radius, opts)?;
            let map = match swap {
                Some(pair) => {
                    let parts: Vec<&str> = pair.split(';').collect();
                    let [a, b] = parts[..] else {
                        return Err(CliError::Usage("--swap takes two elements separated by `;`".into()));
                    };
                    let (a, b) = (parse_element(&g.p, a)?, parse_element(&g.p, b)?);
                    twin_swap_map(&ball, &a, &b, None)?.map
                }
                None => VertexMap::identity(&ball),
            };
            let n = torsion_subgroup(&g.p)?;
            let report = induced_quotient_check(&ball, &ball, &map, &n, &n)?;
            let params = json!({"genset": args.genset, "radius": radius, "swap": swap});
            Ok((Some(g), params, Output::report(report)))
        }
        Command::Verify { suite, group } => {
            let ids = parse_suite(suite)?;
            let report = run_suite(&ids, ctx.seed)?;
            let failed = !report.passed();
            let tsv = report
                .criteria
                .iter()
                .map(|c| format!("{}\t{}\t{}\n", c.id, c.name, if c.passed { "pass" } else { "fail" }))
                .collect();
            let params = json!({"suite": suite, "group": group});
            let body = serde_json::to_value(&report).expect("reports serialise");
            Ok((None, params, Output { body, tsv: Some(tsv), failed }))
        }
    }
}

fn dedup(mut v: Vec<GroupElement>) -> Vec<GroupElement> {
    v.retain(|x| !x.is_identity());
    v.sort();
    v.dedup();
    v
}

fn parse_suite(s: &str) -> CliResult<Vec<u8>> {
    if s == "all" {
        return Ok(CRITERIA.iter().map(|(id, _)| *id).collect());
    }
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<u8>()
                .ok()
                .filter(|id| (1..=CRITERIA.len() as u8).contains(id))
                .ok_or_else(|| CliError::Usage(format!("unknown suite `{part}`")))
        })
        .collect()
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Ball { .. } => "ball",
        Command::Distance { .. } => "distance",
        Command::Geodesics { .. } => "geodesics",
        Command::Distortion { .. } => "distortion",
        Command::Biorder { .. } => "biorder",
        Command::Structure { .. } => "structure",
        Command::Construct { .. } => "construct",
        Command::Autos { .. } => "autos",
        Command::Normality { .. } => "normality",
        Command::Induced { .. } => "induced",
        Command::Verify { .. } => "verify",
    }
}

fn diagnostic(kind: &str, message: &str) {
    let d = json!({"error": kind, "message": message});
    eprintln!("{}", serde_json::to_string(&d).expect("diagnostics serialise"));
}

fn execute(cli: &Cli) -> CliResult<bool> {
    let started = Instant::now();
    let ctx = Ctx {
        opts: BallOptions {
            vertex_cap: cli.global.budget_vertices,
        },
        seed: cli.global.seed,
    };
    let (group, params, out) = run(&cli.command, &ctx)?;
    let format = cli.global.format.unwrap_or_else(|| match &cli.global.out {
        Some(path) if path.extension().is_some_and(|e| e == "tsv") => Format::Tsv,
        _ => Format::Json,
    });
    let text = match (format, &out.tsv) {
        (Format::Tsv, Some(tsv)) => tsv.clone(),
        (Format::Tsv, None) => {
            return Err(CliError::Usage(format!(
                "`{}` has no TSV form; use --format json",
                command_name(&cli.command)
            )))
        }
        (Format::Json, _) => {
            let mut env = serde_json::Map::new();
            env.insert("tool_version".into(), json!(TOOL_VERSION));
            env.insert("command".into(), json!(command_name(&cli.command)));
            if let Some(g) = &group {
                env.insert("group".into(), json!(g.label));
                env.insert("presentation_hash".into(), json!(g.p.content_hash()));
            }
            env.insert("seed".into(), json!(cli.global.seed));
            env.insert("parameters".into(), params);
            env.insert("result".into(), out.body);
            if cli.global.timing {
                env.insert("runtime_ms".into(), json!(started.elapsed().as_millis() as u64));
            }
            let mut s = serde_json::to_string_pretty(&Value::Object(env)).expect("envelopes serialise");
            s.push('\n');
            s
        }
    };
    match &cli.global.out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?,
        None => print!("{text}"),
    }
    Ok(out.failed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            diagnostic("usage", e.to_string().trim());
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cli.global.threads {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            diagnostic("usage", "--threads must be a positive integer");
            return ExitCode::from(2);
        }
    }
    match execute(&cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            diagnostic(e.kind(), &e.to_string());
            ExitCode::from(e.exit_code())
        }
    }
}
