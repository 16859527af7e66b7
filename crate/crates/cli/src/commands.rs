use anyhow::{anyhow, bail, Context, Result};
use kkm_core::formats::{
    self, BuiltInstance, InstanceSpec, SolutionBody, SolutionFile,
};
use kkm_core::solvers::{self, SolveOptions};
use kkm_core::verify;
use kkm_core::{Instance, Permutation, QueryLedger, Solution, SolutionPoint, SpernerVariant};
use std::path::Path;
use std::process::ExitCode;

pub const EXIT_OK: u8 = 0;
pub const EXIT_VERIFICATION: u8 = 2;

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_instance(path: &Path) -> Result<(InstanceSpec, BuiltInstance)> {
    let spec = formats::parse_instance(&read_to_string(path)?)
        .with_context(|| format!("parsing instance {}", path.display()))?;
    let built = formats::build_instance(&spec)?;
    Ok((spec, built))
}

fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, contents).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{contents}");
            Ok(())
        }
    }
}

/// The problem statements fix ε ∈ (0, 1/4); values outside are rejected
/// rather than clamped.
fn validate_epsilon(eps: f64) -> Result<f64> {
    if !(eps.is_finite() && eps > 0.0 && eps < 0.25) {
        bail!("epsilon {eps} outside the open interval (0, 0.25)");
    }
    Ok(eps)
}

fn timestamp() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix:{secs}")
}

#[allow(clippy::too_many_arguments)]
pub fn solve(
    target: &str,
    instance_path: &Path,
    epsilon: Option<f64>,
    seed: u64,
    workers: usize,
    memoize: bool,
    deterministic: bool,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let (_, built) = load_instance(instance_path)?;
    let kind = built.instance.kind_name();
    let matches_target = match target {
        "sperner" => kind.starts_with("sperner"),
        t => kind == t,
    };
    if !matches_target {
        bail!("instance kind {kind} does not match solve target {target}");
    }
    let eps = match epsilon.or(built.induced_epsilon()) {
        Some(e) => Some(validate_epsilon(e)?),
        None if target == "sperner" => None,
        None => bail!("--epsilon required: the instance does not record one"),
    };
    let opts = SolveOptions { workers: workers.max(1), memoize };
    let ledger = QueryLedger::new();

    let (body, problem, verified) = match (&built.instance, target) {
        (Instance::Housing(h), "housing") => {
            let sol = solvers::solve_housing(h, &ledger, eps.unwrap(), opts)?;
            let rep = verify::verify_solution(&built.instance, &ledger, &sol, eps.unwrap())?;
            (point_body(&sol), kind.to_string(), rep.passed)
        }
        (Instance::Rkkm(r), "rkkm") => {
            let sol = solvers::solve_rkkm(r, &ledger, eps.unwrap(), opts)?;
            let rep = verify::verify_solution(&built.instance, &ledger, &sol, eps.unwrap())?;
            (point_body(&sol), kind.to_string(), rep.passed)
        }
        (Instance::Kkm(k), "kkm") => {
            let sol = solvers::solve_kkm(k, &ledger, eps.unwrap(), opts)?;
            let rep = verify::verify_solution(&built.instance, &ledger, &sol, eps.unwrap())?;
            (point_body(&sol), kind.to_string(), rep.passed)
        }
        (Instance::Cake(c), "cake") => {
            let sol = solvers::solve_cake(c, &ledger, eps.unwrap(), opts)?;
            let rep = verify::verify_solution(&built.instance, &ledger, &sol, eps.unwrap())?;
            (point_body(&sol), kind.to_string(), rep.passed)
        }
        (Instance::Sperner(s), "sperner") => {
            if !matches!(s.variant(), SpernerVariant::Cube { .. }) {
                bail!("solve sperner expects a cube instance; triangle instances are reduction sources");
            }
            let cell = solvers::solve_sperner_bruteforce(s, &ledger, opts)?;
            let rep = verify::verify_panchromatic_cell(s, &ledger, &cell)?;
            (
                SolutionBody::Cell {
                    anchor: cell.anchor.clone(),
                    perm: cell.perm.as_slice().to_vec(),
                    vertices: cell.vertices.clone(),
                    labels: cell.labels.clone(),
                    colors: cell.colors.clone(),
                },
                kind.to_string(),
                rep.passed,
            )
        }
        _ => bail!("instance kind {kind} does not match solve target {target}"),
    };

    let file = SolutionFile {
        problem,
        epsilon_requested: eps,
        seed,
        body,
        queries: ledger.snapshot(),
        total_queries: ledger.total(),
        timestamp: if deterministic { None } else { Some(timestamp()) },
    };
    emit(out, &serde_json::to_string_pretty(&file)?)?;
    Ok(ExitCode::from(if verified { EXIT_OK } else { EXIT_VERIFICATION }))
}

fn point_body(sol: &Solution) -> SolutionBody {
    SolutionBody::Point {
        point: sol.point.clone(),
        perm: sol.perm.as_slice().to_vec(),
        witnesses: sol.witnesses.clone(),
        epsilon_achieved: sol.epsilon_achieved,
    }
}

pub fn reduce(
    from: &str,
    to: &str,
    instance_path: &Path,
    epsilon: Option<f64>,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let (spec, built) = load_instance(instance_path)?;
    if built.instance.kind_name() != from {
        bail!("instance kind {} does not match --from {from}", built.instance.kind_name());
    }
    if let Some(e) = epsilon {
        validate_epsilon(e)?;
    }
    let links = formats::plan_chain(&built.instance, to, epsilon)?;
    // keep chains flat when extending an already-composed instance
    let composed = match spec {
        InstanceSpec::Composed { base, chain } => {
            let mut chain = chain;
            chain.extend(links);
            InstanceSpec::Composed { base, chain }
        }
        base => formats::compose_spec(base, links),
    };
    // replay to make sure the chain builds
    formats::build_instance(&composed)?;
    emit(out, &formats::instance_to_json(&composed))?;
    Ok(ExitCode::from(EXIT_OK))
}

pub fn verify(
    instance_path: &Path,
    solution_path: &Path,
    epsilon: Option<f64>,
    seed: u64,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let (_, built) = load_instance(instance_path)?;
    let file = formats::parse_solution(&read_to_string(solution_path)?)?;
    let _ = seed;
    let ledger = QueryLedger::new();
    let report = match &file.body {
        SolutionBody::Point { point, perm, witnesses, epsilon_achieved } => {
            let eps = match epsilon.or(file.epsilon_requested) {
                Some(e) => e,
                None => *epsilon_achieved,
            };
            let sol = Solution {
                point: point.clone(),
                perm: raw_perm(perm),
                witnesses: witnesses.clone(),
                epsilon_achieved: *epsilon_achieved,
                queries: Default::default(),
            };
            verify::verify_solution(&built.instance, &ledger, &sol, eps)?
        }
        SolutionBody::Cell { anchor, perm, vertices, labels, colors } => {
            let Instance::Sperner(s) = &built.instance else {
                bail!("cell solutions verify against Sperner instances only");
            };
            let cell = kkm_core::PanchromaticCell {
                anchor: anchor.clone(),
                perm: raw_perm(perm),
                vertices: vertices.clone(),
                labels: labels.clone(),
                colors: colors.clone(),
                queries: Default::default(),
            };
            verify::verify_panchromatic_cell(s, &ledger, &cell)?
        }
    };
    emit(out, &serde_json::to_string_pretty(&report)?)?;
    Ok(ExitCode::from(if report.passed { EXIT_OK } else { EXIT_VERIFICATION }))
}

/// Deserialize an image array without bijection validation so tampered
/// files reach the verifier instead of failing to parse.
fn raw_perm(image: &[usize]) -> Permutation {
    serde_json::from_value(serde_json::to_value(image).expect("serializable"))
        .expect("vec deserializes")
}

/// Pull the located point out of a solution file, for plotting overlays.
pub fn solution_point(file: &SolutionFile) -> Option<SolutionPoint> {
    match &file.body {
        SolutionBody::Point { point, .. } => Some(point.clone()),
        SolutionBody::Cell { .. } => None,
    }
}

pub fn parse_solution_file(path: &Path) -> Result<SolutionFile> {
    formats::parse_solution(&read_to_string(path)?).map_err(|e| anyhow!(e))
}
