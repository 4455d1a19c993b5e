//! Command implementations. Each command resolves its inputs, runs the
//! library, and emits a deterministic report; `run` replays a recorded
//! manifest through the same execution paths so outputs reproduce byte for
//! byte.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use coorbit_core::{
    collision_search, derive_seed, embed_dataset, gamma_profile, lipschitz_bounds, orbit_closure,
    plan_selection, sample_reduction, sample_windows, separation_check, Dataset, EmbeddingConfig,
    GroupAction, SelectionSet, WindowBank,
};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::Value;

use crate::fail::{CliError, CliResult};
use crate::jsonfmt::{fmt_f64, render};
use crate::manifest::{
    file_digest, BankDump, ManifestInput, ManifestParams, ReductionDump, RunManifest,
};
use crate::spec::{read_dataset, GroupSpecFile};

pub const SEPARATION_TOL_DEFAULT: f64 = 1e-9;

/// Stream indices for seeds derived from a master seed.
const WINDOW_STREAM: u64 = 1;
const REDUCTION_STREAM: u64 = 2;
const SEARCH_STREAM: u64 = 3;

fn emit(out: &Option<PathBuf>, content: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn note(quiet: bool, message: &str) {
    if !quiet {
        eprintln!("{message}");
    }
}

fn to_value<T: Serialize>(v: &T) -> CliResult<Value> {
    Ok(serde_json::to_value(v)?)
}

fn vec_of(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if j > 0 {
                s.push(',');
            }
            s.push_str(&fmt_f64(m[(i, j)]));
        }
        s.push('\n');
    }
    s
}

/// Resolves `(p, selection)` from the requested window count and rich-entry
/// depth: depth 1 is the singleton (max-filter) plan and needs at least `2d`
/// windows; deeper selections go through the planner, defaulting to the
/// minimal window count for that depth.
fn build_plan(
    action: &GroupAction,
    p_opt: Option<usize>,
    n: usize,
) -> CliResult<(usize, SelectionSet)> {
    let d = action.dim();
    if n == 1 {
        let p = p_opt.unwrap_or(2 * d);
        if p < 2 * d {
            return Err(CliError::Domain(format!(
                "window count {p} is below the singleton-plan minimum {}",
                2 * d
            )));
        }
        return Ok((p, SelectionSet::singletons(p)));
    }
    let p = match p_opt {
        Some(p) => p,
        None => gamma_profile(action, action.tol())?
            .min_window_count(n)
            .ok_or_else(|| {
                CliError::Domain(format!("no minimal window count tabulated for depth {n}"))
            })?,
    };
    Ok((p, plan_selection(action, n, p)?))
}

// ---------------------------------------------------------------------------
// report shapes

#[derive(Serialize)]
struct CheckJson {
    name: String,
    residual: f64,
    passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    detail: Option<String>,
}

#[derive(Serialize)]
struct VerifyJson {
    dim: usize,
    order: usize,
    tol: f64,
    passed: bool,
    checks: Vec<CheckJson>,
}

#[derive(Serialize)]
struct ElementJson {
    index: usize,
    label: String,
    spectrum: Vec<f64>,
    min_rank: usize,
}

#[derive(Serialize)]
struct MinWindowJson {
    n: usize,
    p: usize,
}

#[derive(Serialize)]
struct GammaJson {
    dim: usize,
    order: usize,
    gamma: Vec<usize>,
    per_element: Vec<ElementJson>,
    min_windows: Vec<MinWindowJson>,
}

#[derive(Serialize)]
struct PlanJson {
    p: usize,
    n: usize,
    m: usize,
    per_window: Vec<Vec<usize>>,
}

#[derive(Serialize)]
struct SampleJson {
    dim: usize,
    p: usize,
    seed: u64,
    window_seed: u64,
    windows: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reduction: Option<ReductionDump>,
}

#[derive(Serialize)]
struct BoundsJson {
    lower: f64,
    upper: f64,
    trivial_upper: f64,
    witness_lower: [String; 2],
    witness_upper: [String; 2],
    pair_count: usize,
    j: usize,
    window_seed: u64,
    window: Vec<f64>,
    closure_applied: bool,
    point_count: usize,
}

#[derive(Serialize)]
struct UnseparatedJson {
    a: String,
    b: String,
    gap: f64,
}

#[derive(Serialize)]
struct SeparateJson {
    tol: f64,
    p: usize,
    n: usize,
    seed: u64,
    point_count: usize,
    unseparated: Vec<UnseparatedJson>,
}

#[derive(Serialize)]
struct CollideJson {
    ratio: f64,
    orbit_distance: f64,
    embedding_gap: f64,
    x: Vec<f64>,
    y: Vec<f64>,
    trials: usize,
    budget: usize,
    floor: f64,
    seed: u64,
    search_seed: u64,
    p: usize,
    n: usize,
}

// ---------------------------------------------------------------------------
// shared execution paths (used directly and by manifest replay)

fn embed_csv(
    action: &GroupAction,
    bank: WindowBank,
    selection: SelectionSet,
    reduction: Option<coorbit_core::LinearReduction>,
    seed: u64,
    dataset: &Dataset,
) -> CliResult<String> {
    let config = EmbeddingConfig {
        bank,
        selection,
        reduction,
        seed,
    };
    let rows = embed_dataset(&config, action, dataset)?;
    Ok(matrix_to_csv(&rows))
}

#[allow(clippy::too_many_arguments)]
fn collide_json(
    action: &GroupAction,
    bank: &WindowBank,
    selection: &SelectionSet,
    budget: usize,
    floor: f64,
    seed: u64,
    search_seed: u64,
    p: usize,
    n: usize,
) -> CliResult<Value> {
    let report = collision_search(action, bank, selection, budget, floor, search_seed)?;
    to_value(&CollideJson {
        ratio: report.ratio,
        orbit_distance: report.orbit_distance,
        embedding_gap: report.embedding_gap,
        x: vec_of(&report.x),
        y: vec_of(&report.y),
        trials: report.trials,
        budget,
        floor,
        seed,
        search_seed,
        p,
        n,
    })
}

fn bounds_json(
    action: &GroupAction,
    window: &DVector<f64>,
    j: usize,
    window_seed: u64,
    raw: &Dataset,
) -> CliResult<Value> {
    let dataset = orbit_closure(action, raw, coorbit_core::metric::DEFAULT_ORBIT_TOL)?;
    let report = lipschitz_bounds(action, window, j, &dataset)?;
    to_value(&BoundsJson {
        lower: report.lower,
        upper: report.upper,
        trivial_upper: report.trivial_upper,
        witness_lower: [report.witness_lower.0, report.witness_lower.1],
        witness_upper: [report.witness_upper.0, report.witness_upper.1],
        pair_count: report.pair_count,
        j,
        window_seed,
        window: vec_of(window),
        closure_applied: true,
        point_count: dataset.len(),
    })
}

#[allow(clippy::too_many_arguments)]
fn separate_json(
    action: &GroupAction,
    bank: &WindowBank,
    selection: &SelectionSet,
    raw: &Dataset,
    tol: f64,
    p: usize,
    n: usize,
    seed: u64,
) -> CliResult<Value> {
    let dataset = orbit_closure(action, raw, coorbit_core::metric::DEFAULT_ORBIT_TOL)?;
    let pairs = separation_check(action, bank, selection, &dataset, tol)?;
    to_value(&SeparateJson {
        tol,
        p,
        n,
        seed,
        point_count: dataset.len(),
        unseparated: pairs
            .into_iter()
            .map(|u| UnseparatedJson {
                a: u.id_a,
                b: u.id_b,
                gap: u.gap,
            })
            .collect(),
    })
}

// ---------------------------------------------------------------------------
// commands

pub fn cmd_verify(group_path: &Path, out: &Option<PathBuf>, quiet: bool) -> CliResult<u8> {
    let spec = GroupSpecFile::load(group_path)?;
    let action = spec.build()?;
    let report = action.verify();
    let json = VerifyJson {
        dim: report.dim,
        order: report.order,
        tol: report.tol,
        passed: report.passed,
        checks: report
            .checks
            .iter()
            .map(|c| CheckJson {
                name: c.name.to_string(),
                residual: c.residual,
                passed: c.passed,
                detail: c.detail.clone(),
            })
            .collect(),
    };
    emit(out, &render(&to_value(&json)?))?;
    note(
        quiet,
        &format!(
            "verify: {} (order {}, dim {})",
            if report.passed { "PASS" } else { "FAIL" },
            report.order,
            report.dim
        ),
    );
    Ok(if report.passed { 0 } else { 2 })
}

pub fn cmd_gamma(group_path: &Path, out: &Option<PathBuf>, quiet: bool) -> CliResult<u8> {
    let spec = GroupSpecFile::load(group_path)?;
    let action = spec.build()?;
    let profile = gamma_profile(&action, action.tol())?;
    let json = GammaJson {
        dim: profile.dim,
        order: profile.order,
        gamma: profile.gamma.clone(),
        per_element: profile
            .per_element
            .iter()
            .map(|e| ElementJson {
                index: e.index,
                label: e.label.clone(),
                spectrum: e.spectrum.clone(),
                min_rank: e.min_rank,
            })
            .collect(),
        min_windows: profile
            .min_windows
            .iter()
            .map(|(&n, &p)| MinWindowJson { n, p })
            .collect(),
    };
    emit(out, &render(&to_value(&json)?))?;
    note(
        quiet,
        &format!("gamma: profile {:?} over {} elements", profile.gamma, profile.order - 1),
    );
    Ok(0)
}

pub fn cmd_plan(
    group_path: &Path,
    p: usize,
    n: usize,
    out: &Option<PathBuf>,
    quiet: bool,
) -> CliResult<u8> {
    let spec = GroupSpecFile::load(group_path)?;
    let action = spec.build()?;
    let (p, selection) = build_plan(&action, Some(p), n)?;
    let json = PlanJson {
        p,
        n,
        m: selection.m(),
        per_window: selection.lists().to_vec(),
    };
    emit(out, &render(&to_value(&json)?))?;
    note(quiet, &format!("plan: p={p} n={n} m={}", selection.m()));
    Ok(0)
}

pub fn cmd_sample(
    group_path: &Path,
    p: usize,
    seed: u64,
    reduction_m: Option<usize>,
    out: &Option<PathBuf>,
    quiet: bool,
) -> CliResult<u8> {
    let spec = GroupSpecFile::load(group_path)?;
    let action = spec.build()?;
    let window_seed = derive_seed(seed, WINDOW_STREAM);
    let bank = sample_windows(action.dim(), p, window_seed);
    let reduction = reduction_m.map(|m| {
        ReductionDump::from_reduction(&sample_reduction(
            m,
            action.dim(),
            derive_seed(seed, REDUCTION_STREAM),
        ))
    });
    let json = SampleJson {
        dim: action.dim(),
        p,
        seed,
        window_seed,
        windows: BankDump::from_bank(&bank).windows,
        reduction,
    };
    emit(out, &render(&to_value(&json)?))?;
    note(quiet, &format!("sample: {p} windows in dimension {}", action.dim()));
    Ok(0)
}

struct ManifestDraft {
    command: &'static str,
    inputs: Vec<ManifestInput>,
    group: GroupSpecFile,
    params: ManifestParams,
    bank: Option<BankDump>,
    selection: Option<Vec<Vec<usize>>>,
    reduction: Option<ReductionDump>,
    output: Option<String>,
}

fn write_manifest(
    draft: ManifestDraft,
    started: Instant,
    manifest_out: &Option<PathBuf>,
) -> CliResult<()> {
    let Some(path) = manifest_out else {
        return Ok(());
    };
    let manifest = RunManifest {
        command: draft.command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_ms: started.elapsed().as_millis() as u64,
        inputs: draft.inputs,
        group: draft.group,
        params: draft.params,
        bank: draft.bank,
        selection: draft.selection,
        reduction: draft.reduction,
        output: draft.output,
    };
    fs::write(path, render(&to_value(&manifest)?))?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_embed(
    group_path: &Path,
    dataset_path: &Path,
    p_opt: Option<usize>,
    n: usize,
    seed: u64,
    ids: bool,
    out: &Option<PathBuf>,
    manifest_out: &Option<PathBuf>,
    quiet: bool,
) -> CliResult<u8> {
    let started = Instant::now();
    let spec = GroupSpecFile::load(group_path)?;
    let action = spec.build()?;
    let dataset = read_dataset(dataset_path, action.dim(), ids)?;
    let (p, selection) = build_plan(&action, p_opt, n)?;
    let window_seed = derive_seed(seed, WINDOW_STREAM);
    let reduction_seed = derive_seed(seed, REDUCTION_STREAM);
    let bank = sample_windows(action.dim(), p, window_seed);
    let m = selection.m();
    let reduction = (m > 2 * action.dim())
        .then(|| sample_reduction(m, action.dim(), reduction_seed));
    let csv = embed_csv(
        &action,
        bank.clone(),
        selection.clone(),
        reduction.clone(),
        seed,
        &dataset,
    )?;
    emit(out, &csv)?;
    write_manifest(
        ManifestDraft {
            command: "embed",
            inputs: vec![
                ManifestInput {
                    role: "group".into(),
                    path: group_path.display().to_string(),
                    sha256: file_digest(group_path)?,
                },
                ManifestInput {
                    role: "dataset".into(),
                    path: dataset_path.display().to_string(),
                    sha256: file_digest(dataset_path)?,
                },
            ],
            group: spec,
            params: ManifestParams {
                p: Some(p),
                n: Some(n),
                seed: Some(seed),
                window_seed: Some(window_seed),
                reduction_seed: reduction.is_some().then_some(reduction_seed),
                ids,
                ..Default::default()
            },
            bank: Some(BankDump::from_bank(&bank)),
            selection: Some(selection.lists().to_vec()),
            reduction: reduction.as_ref().map(ReductionDump::from_reduction),
            output: out.as_ref().map(|p| p.display().to_string()),
        },
        started,
        manifest_out,
    )?;
    note(
        quiet,
        &format!(
            "embed: {} points, p={p}, n={n}, m={m}, output dim {}",
            dataset.len(),
            if m > 2 * action.dim() { 2 * action.dim() } else { m }
        ),
    );
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_bounds(
    group_path: &Path,
    dataset_path: &Path,
    window_seed: u64,
    j: usize,
    ids: bool,
    out: &Option<PathBuf>,
    manifest_out: &Option<PathBuf>,
    quiet: bool,
) -> CliResult<u8> {
    let started = Instant::now();
    let spec = GroupSpecFile::load(group_path)?;
    let action = spec.build()?;
    let raw = read_dataset(dataset_path, action.dim(), ids)?;
    if raw.is_empty() {
        return Err(CliError::Domain("dataset is empty".into()));
    }
    let bank = sample_windows(action.dim(), 1, window_seed);
    let window = bank.window(0).clone();
    let json = bounds_json(&action, &window, j, window_seed, &raw)?;
    emit(out, &render(&json))?;
    write_manifest(
        ManifestDraft {
            command: "bounds",
            inputs: vec![
                ManifestInput {
                    role: "group".into(),
                    path: group_path.display().to_string(),
                    sha256: file_digest(group_path)?,
                },
                ManifestInput {
                    role: "dataset".into(),
                    path: dataset_path.display().to_string(),
                    sha256: file_digest(dataset_path)?,
                },
            ],
            group: spec,
            params: ManifestParams {
                j: Some(j),
                window_seed: Some(window_seed),
                ids,
                ..Default::default()
            },
            bank: Some(BankDump::from_bank(&bank)),
            selection: None,
            reduction: None,
            output: out.as_ref().map(|p| p.display().to_string()),
        },
        started,
        manifest_out,
    )?;
    note(quiet, "bounds: report written");
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_separate(
    group_path: &Path,
    dataset_path: &Path,
    p_opt: Option<usize>,
    n: usize,
    seed: u64,
    tol: f64,
    ids: bool,
    out: &Option<PathBuf>,
    manifest_out: &Option<PathBuf>,
    quiet: bool,
) -> CliResult<u8> {
    let started = Instant::now();
    let spec = GroupSpecFile::load(group_path)?;
    let action = spec.build()?;
    let raw = read_dataset(dataset_path, action.dim(), ids)?;
    let (p, selection) = build_plan(&action, p_opt, n)?;
    let bank = sample_windows(action.dim(), p, derive_seed(seed, WINDOW_STREAM));
    let json = separate_json(&action, &bank, &selection, &raw, tol, p, n, seed)?;
    emit(out, &render(&json))?;
    write_manifest(
        ManifestDraft {
            command: "separate",
            inputs: vec![
                ManifestInput {
                    role: "group".into(),
                    path: group_path.display().to_string(),
                    sha256: file_digest(group_path)?,
                },
                ManifestInput {
                    role: "dataset".into(),
                    path: dataset_path.display().to_string(),
                    sha256: file_digest(dataset_path)?,
                },
            ],
            group: spec,
            params: ManifestParams {
                p: Some(p),
                n: Some(n),
                seed: Some(seed),
                window_seed: Some(derive_seed(seed, WINDOW_STREAM)),
                tol: Some(tol),
                ids,
                ..Default::default()
            },
            bank: Some(BankDump::from_bank(&bank)),
            selection: Some(selection.lists().to_vec()),
            reduction: None,
            output: out.as_ref().map(|p| p.display().to_string()),
        },
        started,
        manifest_out,
    )?;
    note(quiet, "separate: report written");
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_collide(
    group_path: &Path,
    p_opt: Option<usize>,
    n: usize,
    budget: usize,
    floor: f64,
    seed: u64,
    out: &Option<PathBuf>,
    manifest_out: &Option<PathBuf>,
    quiet: bool,
) -> CliResult<u8> {
    let started = Instant::now();
    let spec = GroupSpecFile::load(group_path)?;
    let action = spec.build()?;
    let (p, selection) = build_plan(&action, p_opt, n)?;
    let window_seed = derive_seed(seed, WINDOW_STREAM);
    let search_seed = derive_seed(seed, SEARCH_STREAM);
    let bank = sample_windows(action.dim(), p, window_seed);
    let json = collide_json(
        &action, &bank, &selection, budget, floor, seed, search_seed, p, n,
    )?;
    emit(out, &render(&json))?;
    write_manifest(
        ManifestDraft {
            command: "collide",
            inputs: vec![ManifestInput {
                role: "group".into(),
                path: group_path.display().to_string(),
                sha256: file_digest(group_path)?,
            }],
            group: spec,
            params: ManifestParams {
                p: Some(p),
                n: Some(n),
                seed: Some(seed),
                window_seed: Some(window_seed),
                search_seed: Some(search_seed),
                budget: Some(budget),
                floor: Some(floor),
                ..Default::default()
            },
            bank: Some(BankDump::from_bank(&bank)),
            selection: Some(selection.lists().to_vec()),
            reduction: None,
            output: out.as_ref().map(|p| p.display().to_string()),
        },
        started,
        manifest_out,
    )?;
    note(quiet, "collide: report written");
    Ok(0)
}

/// Replays a recorded manifest: inputs are re-read and digest-checked, the
/// resolved bank/selection/reduction are used verbatim, and the outputs go
/// to `--out` (or the manifest's recorded output path, or stdout).
pub fn cmd_run(manifest_path: &Path, out: &Option<PathBuf>, quiet: bool) -> CliResult<u8> {
    let manifest = RunManifest::load(manifest_path)?;
    let action = manifest.group.build()?;
    let target = out
        .clone()
        .or_else(|| manifest.output.as_ref().map(PathBuf::from));
    match manifest.command.as_str() {
        "embed" => {
            let input = manifest.verify_input("dataset")?;
            let dataset = read_dataset(
                Path::new(&input.path),
                action.dim(),
                manifest.params.ids,
            )?;
            let bank = manifest
                .bank
                .as_ref()
                .ok_or_else(|| CliError::Parse("manifest lacks a bank".into()))?
                .to_bank()?;
            let selection = manifest.selection_set()?;
            let reduction = manifest
                .reduction
                .as_ref()
                .map(ReductionDump::to_reduction)
                .transpose()?;
            let seed = manifest.params.seed.unwrap_or(0);
            let csv = embed_csv(&action, bank, selection, reduction, seed, &dataset)?;
            emit(&target, &csv)?;
            note(quiet, "run: embed replayed");
        }
        "collide" => {
            let bank = manifest
                .bank
                .as_ref()
                .ok_or_else(|| CliError::Parse("manifest lacks a bank".into()))?
                .to_bank()?;
            let selection = manifest.selection_set()?;
            let params = &manifest.params;
            let json = collide_json(
                &action,
                &bank,
                &selection,
                params.budget.unwrap_or(10_000),
                params.floor.unwrap_or(1e-2),
                params.seed.unwrap_or(0),
                params.search_seed.unwrap_or(0),
                params.p.unwrap_or(bank.len()),
                params.n.unwrap_or(1),
            )?;
            emit(&target, &render(&json))?;
            note(quiet, "run: collide replayed");
        }
        "bounds" => {
            let input = manifest.verify_input("dataset")?;
            let raw = read_dataset(Path::new(&input.path), action.dim(), manifest.params.ids)?;
            let bank = manifest
                .bank
                .as_ref()
                .ok_or_else(|| CliError::Parse("manifest lacks a bank".into()))?
                .to_bank()?;
            let json = bounds_json(
                &action,
                bank.window(0),
                manifest.params.j.unwrap_or(1),
                manifest.params.window_seed.unwrap_or(0),
                &raw,
            )?;
            emit(&target, &render(&json))?;
            note(quiet, "run: bounds replayed");
        }
        "separate" => {
            let input = manifest.verify_input("dataset")?;
            let raw = read_dataset(Path::new(&input.path), action.dim(), manifest.params.ids)?;
            let bank = manifest
                .bank
                .as_ref()
                .ok_or_else(|| CliError::Parse("manifest lacks a bank".into()))?
                .to_bank()?;
            let selection = manifest.selection_set()?;
            let params = &manifest.params;
            let json = separate_json(
                &action,
                &bank,
                &selection,
                &raw,
                params.tol.unwrap_or(SEPARATION_TOL_DEFAULT),
                params.p.unwrap_or(bank.len()),
                params.n.unwrap_or(1),
                params.seed.unwrap_or(0),
            )?;
            emit(&target, &render(&json))?;
            note(quiet, "run: separate replayed");
        }
        other => {
            return Err(CliError::Parse(format!(
                "manifest command {other:?} cannot be replayed"
            )))
        }
    }
    Ok(0)
}
