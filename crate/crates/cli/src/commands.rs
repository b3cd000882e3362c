//! One function per subcommand. Each returns the report body, its status,
//! what `verify --replay` should re-check, and files to export.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use unicov::action::{
    action_tower_verify, diagnose_action, quotient_at_scale, subgroup_at_scale, GroupAction, QuotientAction,
};
use unicov::cover::{build_cover, verify_endpoint_ucm, UcmVerdict};
use unicov::quotient::{
    build_fiber_quotient, check_approx_uniqueness, factor_and_verify, fiber_e_components, verify_gucm, Counterexample,
    FactorVerdict, FilteredMap, UniquenessMode,
};
use unicov::rips::{bonding_h1_map, critical_scales, h1_at_scale, HomotopyBudget};
use unicov::tower::{
    assemble_limit_space, lim1_transform, lim1_verdict, quotient_tower_reconstruct, strong_ml_check, telescoping_holds,
    telescoping_solve, SolveMode, SpaceTower, TowerAb,
};
use unicov::{Error, FilteredSpace};

use crate::io::{explicit_form, sha256_hex, InputError, LoadedTower, Loader};
use crate::report::{ints, Budgets, Replay, SmallMotion, Status};

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    Core(#[from] Error),
}

pub type CommandResult<T> = std::result::Result<T, CommandError>;

pub struct Outcome {
    pub command: Value,
    pub result: Value,
    pub status: Status,
    pub replay: Option<Replay>,
    pub exports: Vec<(PathBuf, String)>,
}

impl Outcome {
    fn new(command: Value, result: Value, status: Status) -> Self {
        Outcome {
            command,
            result,
            status,
            replay: None,
            exports: Vec::new(),
        }
    }
}

fn homotopy_budget(b: &Budgets) -> HomotopyBudget {
    HomotopyBudget {
        tietze_passes: b.ident_budget,
        coset_rows: b.coset_rows,
        ..HomotopyBudget::default()
    }
}

fn digest_of(loader: &Loader, path: &Path) -> String {
    let shown = path.display().to_string();
    loader
        .digests
        .iter()
        .find(|d| d.path == shown)
        .map(|d| d.sha256.clone())
        .unwrap_or_default()
}

fn group_json(g: &unicov::linalg::AbelianGroupInv) -> Value {
    json!({ "rank": g.rank, "torsion": ints(&g.torsion), "display": g.to_string() })
}

fn blocks_json(space: &FilteredSpace, blocks: &[Vec<usize>]) -> Value {
    blocks
        .iter()
        .map(|b| b.iter().map(|&p| space.name(p)).collect::<Vec<_>>())
        .collect()
}

pub fn analyze(
    loader: &mut Loader,
    input: &Path,
    radii: Option<&[f64]>,
    barcode: Option<&Path>,
) -> CommandResult<Outcome> {
    let (space, scale_radii) = loader.space_and_radii(input, radii)?;
    let mut scales = Vec::new();
    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["scale", "radius", "h1_rank", "torsion", "components"])
        .expect("in-memory write");
    for k in 1..=space.scale_count() {
        let h1 = h1_at_scale(&space, k)?;
        let components = space.chain_components(k)?;
        let radius = scale_radii
            .as_ref()
            .and_then(|r| r.get(k - 1))
            .map(ToString::to_string)
            .unwrap_or_default();
        let torsion: Vec<String> = h1.torsion.iter().map(ToString::to_string).collect();
        csv.write_record([
            k.to_string(),
            radius,
            h1.rank.to_string(),
            torsion.join(" "),
            components.len().to_string(),
        ])
        .expect("in-memory write");
        scales.push(json!({
            "scale": k,
            "edges": space.scale(k)?.edge_count(),
            "components": blocks_json(&space, &components.blocks),
            "h1": group_json(&h1),
        }));
    }
    let bonding: Vec<Value> = (1..space.scale_count())
        .map(|k| {
            let m = bonding_h1_map(&space, k + 1, k)?;
            let rows: Vec<Value> = m.to_rows().iter().map(|r| ints(r)).collect();
            Ok(json!({ "from": k + 1, "to": k, "matrix": rows, "zero": m.is_zero() }))
        })
        .collect::<unicov::Result<_>>()?;
    let result = json!({
        "points": space.names(),
        "hausdorff": space.hausdorff(),
        "scales": scales,
        "bonding_maps": bonding,
        "critical_scales": critical_scales(&space)?,
    });
    let command = json!({ "name": "analyze", "input": input.display().to_string(), "radii": radii });
    let mut out = Outcome::new(command, result, Status::Ok);
    if let Some(path) = barcode {
        let bytes = csv.into_inner().expect("in-memory write");
        out.exports
            .push((path.to_path_buf(), String::from_utf8(bytes).expect("ascii")));
    }
    Ok(out)
}

pub struct CoverArgs<'a> {
    pub input: &'a Path,
    pub radii: Option<&'a [f64]>,
    pub scale: usize,
    pub basepoint: Option<&'a str>,
    pub dot: Option<&'a Path>,
}

pub fn cover(loader: &mut Loader, args: &CoverArgs, budgets: &Budgets) -> CommandResult<Outcome> {
    let space = loader.space(args.input, args.radii)?;
    let basepoint = match args.basepoint {
        Some(name) => space.point(name)?,
        None => 0,
    };
    let cover = build_cover(&space, args.scale, basepoint, budgets.radius, homotopy_budget(budgets))?;
    let ucm = verify_endpoint_ucm(&cover)?;
    let status = match ucm.verdict {
        UcmVerdict::Ucm => Status::Ok,
        UcmVerdict::NotUcm => Status::Counterexample,
        UcmVerdict::Inconclusive { .. } => Status::Inconclusive,
    };
    let result = json!({
        "points": space.names(),
        "cover": cover.summary(),
        "labels": cover.representatives().map(|c| cover.chain_label(c)).collect::<Vec<_>>(),
        "ucm": ucm,
    });
    let command = json!({
        "name": "cover",
        "input": args.input.display().to_string(),
        "radii": args.radii,
        "scale": args.scale,
        "basepoint": space.name(basepoint),
    });
    let mut out = Outcome::new(command, result, status);
    if let Some(path) = args.dot {
        out.exports.push((path.to_path_buf(), cover.to_dot()));
    }
    Ok(out)
}

fn map_counterexamples(f: &FilteredMap) -> (bool, Value, Vec<Counterexample>) {
    let gucm = verify_gucm(f);
    let strong = check_approx_uniqueness(f, UniquenessMode::Strong);
    let mut found = Vec::new();
    if let Some(g) = &gucm.generation.failure {
        found.push(Counterexample::Generation(g.clone()));
    }
    if let Some(l) = &gucm.lifting.failure {
        found.push(Counterexample::Lifting(l.clone()));
    }
    for w in [&gucm.uniqueness, &strong] {
        if let Some(c) = w.counterexample() {
            found.push(Counterexample::Uniqueness(c.clone()));
        }
    }
    let passed = gucm.passed;
    let body = json!({
        "source_points": f.source().names(),
        "target_points": f.target().names(),
        "continuity": f.continuity(),
        "gucm": gucm,
        "strong_uniqueness": strong,
    });
    (passed, body, found)
}

pub fn map(loader: &mut Loader, input: &Path) -> CommandResult<Outcome> {
    let f = loader.map(input)?;
    let (passed, result, found) = map_counterexamples(&f);
    let status = if passed { Status::Ok } else { Status::Counterexample };
    let command = json!({ "name": "map", "input": input.display().to_string() });
    let mut out = Outcome::new(command, result, status);
    if !found.is_empty() {
        out.replay = Some(Replay::Map {
            input: input.display().to_string(),
            sha256: digest_of(loader, input),
            counterexamples: found,
        });
    }
    Ok(out)
}

pub fn quotient(
    loader: &mut Loader,
    input: &Path,
    scale: usize,
    reconstruct: bool,
    budgets: &Budgets,
) -> CommandResult<Outcome> {
    let f = loader.map(input)?;
    let src = f.source();
    let components = fiber_e_components(&f, scale)?;
    let q = build_fiber_quotient(&f, scale)?;
    let factorization = factor_and_verify(&f, scale)?;
    let mut status = match factorization.verdict {
        FactorVerdict::Ucm => Status::Ok,
        FactorVerdict::NotUcm | FactorVerdict::PreconditionFailed => Status::Counterexample,
    };
    let mut result = json!({
        "fiber_components": blocks_json(src, &components.blocks),
        "quotient": {
            "scale": q.scale,
            "hypothesis_unmet": q.hypothesis_unmet,
            "space": explicit_form(&q.space),
            "q": q.q,
            "g": q.g,
        },
        "factorization": factorization,
    });
    if reconstruct {
        result["reconstruction"] = match quotient_tower_reconstruct(&f, budgets.product_bound) {
            Ok(r) => {
                if !r.passed {
                    status = Status::Counterexample;
                }
                json!(r)
            }
            Err(Error::HypothesisUnmet(h)) => json!({ "hypothesis_unmet": h }),
            Err(e @ Error::ProductTooLarge(_)) => {
                status = status.and(Status::Inconclusive);
                json!({ "inconclusive": e.to_string() })
            }
            Err(e) => return Err(e.into()),
        };
    }
    let (_, _, found) = map_counterexamples(&f);
    let command = json!({
        "name": "quotient",
        "input": input.display().to_string(),
        "scale": scale,
        "reconstruct": reconstruct,
    });
    let mut out = Outcome::new(command, result, status);
    if !found.is_empty() {
        out.replay = Some(Replay::Map {
            input: input.display().to_string(),
            sha256: digest_of(loader, input),
            counterexamples: found,
        });
    }
    Ok(out)
}

fn space_tower_result(tower: &SpaceTower, budgets: &Budgets) -> CommandResult<(Value, Status)> {
    let limit = match assemble_limit_space(tower, budgets.product_bound) {
        Ok(l) => l,
        Err(e @ Error::ProductTooLarge(_)) => {
            return Ok((json!({ "inconclusive": e.to_string() }), Status::Inconclusive))
        }
        Err(e) => return Err(e.into()),
    };
    let ml = strong_ml_check(tower, &limit);
    let status = if ml.iter().all(|r| r.witness.is_some()) {
        Status::Ok
    } else {
        Status::Counterexample
    };
    let result = json!({
        "levels": tower.spaces().iter().map(FilteredSpace::len).collect::<Vec<_>>(),
        "stabilization": tower.stabilization,
        "limit": explicit_form(&limit.space),
        "threads": limit.threads,
        "scale_sources": limit.scale_sources,
        "strong_ml": ml,
    });
    Ok((result, status))
}

fn group_tower_result(
    tower: &TowerAb,
    sequence: Option<&[Vec<num_bigint::BigInt>]>,
    lim1: bool,
    solve: Option<SolveMode>,
) -> CommandResult<(Value, Status)> {
    let mut status = Status::Ok;
    let mut result = json!({
        "levels": tower.groups.iter().map(|g| ints(&g.moduli)).collect::<Vec<_>>(),
        "stabilization": tower.stabilization,
    });
    if lim1 {
        result["lim1"] = json!(lim1_verdict(tower));
    }
    if let Some(g) = sequence {
        let modes = match solve {
            Some(m) => vec![m],
            None => vec![SolveMode::Forward, SolveMode::Backward],
        };
        let mut solutions = serde_json::Map::new();
        for mode in modes {
            let key = match mode {
                SolveMode::Forward => "forward",
                SolveMode::Backward => "backward",
            };
            let entry = match telescoping_solve(tower, g, mode) {
                Ok(h) => {
                    let holds = telescoping_holds(tower, g, &h);
                    if !holds {
                        status = Status::Counterexample;
                    }
                    json!({ "h": h.iter().map(|v| ints(v)).collect::<Vec<_>>(), "holds": holds })
                }
                Err(e @ Error::Unsolvable(_)) => json!({ "unsolvable": e.to_string() }),
                Err(e) => return Err(e.into()),
            };
            solutions.insert(key.to_owned(), entry);
        }
        let transform = lim1_transform(tower, g)?;
        solutions.insert(
            "transform".to_owned(),
            json!({
                "h": transform.iter().map(|v| ints(v)).collect::<Vec<_>>(),
                "holds": telescoping_holds(tower, g, &transform),
            }),
        );
        result["sequence"] = json!(g.iter().map(|v| ints(v)).collect::<Vec<_>>());
        result["telescoping"] = Value::Object(solutions);
    }
    Ok((result, status))
}

pub fn tower(
    loader: &mut Loader,
    input: &Path,
    lim1: bool,
    solve: Option<SolveMode>,
    budgets: &Budgets,
) -> CommandResult<Outcome> {
    let (result, status) = match loader.tower(input)? {
        LoadedTower::Spaces(t) => space_tower_result(&t, budgets)?,
        LoadedTower::Groups { tower, sequence } => group_tower_result(&tower, sequence.as_deref(), lim1, solve)?,
    };
    let command = json!({
        "name": "tower",
        "input": input.display().to_string(),
        "lim1": lim1,
        "solve": solve,
    });
    Ok(Outcome::new(command, result, status))
}

fn quotient_action_json(action: &GroupAction, q: &QuotientAction) -> Value {
    json!({
        "scale": q.scale,
        "saturated": q.saturated,
        "subgroup": q.subgroup,
        "normal": q.normal,
        "orbits": blocks_json(action.space(), &q.orbits.blocks),
        "space": explicit_form(&q.space),
        "cosets": q.cosets,
        "coset_table": q.products,
        "induced": q.induced,
        "well_defined": q.well_defined,
        "upd": q.upd,
        "faithful": q.faithful,
    })
}

pub fn action(loader: &mut Loader, input: &Path, scale: usize, budgets: &Budgets) -> CommandResult<Outcome> {
    let action = match loader.action(input, budgets.group_bound) {
        Err(InputError::Invalid {
            source: e @ Error::GroupTooLarge(_),
            ..
        }) => {
            let command = json!({ "name": "action", "input": input.display().to_string(), "scale": scale });
            return Ok(Outcome::new(
                command,
                json!({ "inconclusive": e.to_string() }),
                Status::Inconclusive,
            ));
        }
        other => other?,
    };
    let diagnosis = diagnose_action(&action);
    let subgroups = (1..=action.space().scale_count())
        .map(|k| subgroup_at_scale(&action, k))
        .collect::<unicov::Result<Vec<_>>>()?;
    let q = quotient_at_scale(&action, scale)?;
    let mut status = if q.well_defined && q.upd && q.faithful {
        Status::Ok
    } else {
        Status::Counterexample
    };
    let tower = match action_tower_verify(&action, budgets.product_bound) {
        Ok(r) => {
            if !r.passed {
                status = Status::Counterexample;
            }
            json!(r)
        }
        Err(Error::HypothesisUnmet(h)) => json!({ "hypothesis_unmet": h }),
        Err(e @ Error::ProductTooLarge(_)) => {
            status = status.and(Status::Inconclusive);
            json!({ "inconclusive": e.to_string() })
        }
        Err(e) => return Err(e.into()),
    };
    let motions: Vec<SmallMotion> = diagnosis
        .upd_rows
        .iter()
        .filter_map(|r| {
            r.counterexample.map(|(g, x)| SmallMotion {
                scale: r.scale,
                permutation: action.element(g).to_vec(),
                point: x,
            })
        })
        .collect();
    let result = json!({
        "points": action.space().names(),
        "order": action.order(),
        "faithful": action.is_faithful(),
        "elements": action.elements(),
        "subgroups": subgroups,
        "diagnosis": diagnosis,
        "quotient": quotient_action_json(&action, &q),
        "tower": tower,
    });
    let command = json!({ "name": "action", "input": input.display().to_string(), "scale": scale });
    let mut out = Outcome::new(command, result, status);
    if !motions.is_empty() {
        out.replay = Some(Replay::Action {
            input: input.display().to_string(),
            sha256: digest_of(loader, input),
            motions,
        });
    }
    Ok(out)
}

/// Re-checks the counterexamples of a saved report against its inputs.
pub fn replay(loader: &mut Loader, report_path: &Path, budgets: &Budgets) -> CommandResult<Outcome> {
    let text = loader.read(report_path)?;
    let report: crate::report::Report = serde_json::from_str(&text).map_err(|e| InputError::Parse {
        path: report_path.display().to_string(),
        position: format!("{}:{}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let command = json!({ "name": "verify", "replay": report_path.display().to_string() });
    let Some(replay) = report.replay else {
        return Ok(Outcome::new(
            command,
            json!({ "replayed": 0, "confirmed": 0 }),
            Status::Ok,
        ));
    };
    let (input, expected, checks): (String, String, Vec<bool>) = match replay {
        Replay::Map {
            input,
            sha256,
            counterexamples,
        } => {
            let f = loader.map(Path::new(&input))?;
            let checks = counterexamples.iter().map(|c| c.replay(&f)).collect();
            (input, sha256, checks)
        }
        Replay::Action { input, sha256, motions } => {
            let action = loader.action(Path::new(&input), budgets.group_bound)?;
            let n = action.space().len();
            let checks = motions
                .iter()
                .map(|m| {
                    let moves = m.permutation.iter().enumerate().any(|(x, &y)| x != y);
                    let member = action.elements().iter().any(|g| g == &m.permutation);
                    let near = m.point < n
                        && action
                            .space()
                            .scale(m.scale)
                            .is_ok_and(|e| e.contains(m.point, m.permutation[m.point]));
                    moves && member && near
                })
                .collect();
            (input, sha256, checks)
        }
    };
    let actual = sha256_hex(&std::fs::read(&input).map_err(|source| InputError::Read {
        path: input.clone(),
        source,
    })?);
    let digest_match = actual == expected;
    let confirmed = checks.iter().filter(|&&c| c).count();
    let status = if digest_match && confirmed == checks.len() {
        Status::Ok
    } else {
        Status::Counterexample
    };
    let result = json!({
        "input": input,
        "digest_match": digest_match,
        "replayed": checks.len(),
        "confirmed": confirmed,
        "checks": checks,
    });
    Ok(Outcome::new(command, result, status))
}
