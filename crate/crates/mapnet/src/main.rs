//! CLI front end: state generation, moment measurement, entanglement
//! detection, and network synthesis. Exit codes: 0 success (verdicts are
//! data, not status), 1 I/O or validation failure, 2 operator-size cap.

use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mapnet::detect::{
    bell_state, isotropic_state, measure_moment, random_state, run_contraction_test,
    run_positive_map_test, werner_state, DetectionReport, Mode, MomentRecord,
};
use mapnet::error::{Error, Result};
use mapnet::io::{load_state, StateFile, StateMetadata};
use mapnet::linmaps::{
    extend_with_identity, identity_map, realignment_map, reduction_map, transpose_map, LinearMap,
};
use mapnet::network::{binary_povm, dilation_unitary, export_network, NetworkExport};
use mapnet::observables::collective_observable;

#[derive(Parser)]
#[command(
    name = "mapnet",
    about = "Measurement networks for map-moment spectra and entanglement detection",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct FormatFlags {
    /// Emit JSON (default).
    #[arg(long, conflicts_with_all = ["text", "csv"])]
    json: bool,
    /// Emit a human-readable summary.
    #[arg(long, conflicts_with = "csv")]
    text: bool,
    /// Emit CSV rows (moment tables).
    #[arg(long)]
    csv: bool,
    /// Write output to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a named state and write it as a state file.
    Generate {
        /// werner | isotropic | bell | random
        #[arg(long)]
        family: String,
        /// Werner mixing parameter p in [0, 1].
        #[arg(long)]
        p: Option<f64>,
        /// Bell-state index 0..=3 (0 = Phi+, 3 = Psi-).
        #[arg(long)]
        index: Option<usize>,
        /// Isotropic-state fidelity in [0, 1].
        #[arg(long)]
        fidelity: Option<f64>,
        /// Local dimension for the isotropic family.
        #[arg(long)]
        d: Option<usize>,
        /// Comma-separated subsystem dimensions for the random family.
        #[arg(long)]
        dims: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        fmt: FormatFlags,
    },
    /// Measure moments alpha_k of a map applied to a state.
    Moments {
        #[arg(long)]
        state: PathBuf,
        /// partial_transpose | reduction | realignment | identity | file:PATH
        #[arg(long)]
        map: String,
        /// Highest moment order (default: output dimension of the map).
        #[arg(long)]
        k_max: Option<usize>,
        /// Also estimate each moment from this many simulated shots.
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        fmt: FormatFlags,
    },
    /// Run an entanglement-detection pipeline and report the verdict.
    Detect {
        #[arg(long)]
        state: PathBuf,
        /// ppt | reduction | realignment
        #[arg(long)]
        criterion: String,
        /// Shot-limited mode with this many shots per moment.
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        fmt: FormatFlags,
    },
    /// Synthesize the measurement network for the k-th collective observable.
    Network {
        /// Optional state file fixing the dimensions.
        #[arg(long)]
        state: Option<PathBuf>,
        /// Comma-separated subsystem dimensions when no state file is given.
        #[arg(long)]
        dims: Option<String>,
        /// partial_transpose | reduction | realignment | identity | file:PATH
        #[arg(long)]
        map: String,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[command(flatten)]
        fmt: FormatFlags,
    },
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e @ Error::SizeCap { .. }) => {
            eprintln!("error: {e}");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn emit(fmt: &FormatFlags, payload: String) -> Result<()> {
    match &fmt.out {
        Some(path) => std::fs::write(path, payload.as_bytes()).map_err(Error::from),
        None => {
            println!("{payload}");
            Ok(())
        }
    }
}

fn parse_dims(spec: &str) -> Result<Vec<usize>> {
    let dims: Vec<usize> = spec
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| Error::Dimension(format!("bad dimension list {spec:?}")))
        })
        .collect::<Result<_>>()?;
    if dims.is_empty() || dims.iter().any(|&d| d == 0) {
        return Err(Error::Dimension(format!("bad dimension list {spec:?}")));
    }
    Ok(dims)
}

/// Resolve a `--map` value to the full map acting on a state with the given
/// subsystem dimensions.
fn resolve_map(name: &str, dims: &[usize]) -> Result<(String, LinearMap)> {
    let total: usize = dims.iter().product();
    let bipartite = || -> Result<(usize, usize)> {
        if dims.len() == 2 {
            Ok((dims[0], dims[1]))
        } else {
            Err(Error::Dimension(format!(
                "map {name:?} needs a bipartite state, got {} subsystems",
                dims.len()
            )))
        }
    };
    match name {
        "identity" => Ok((name.into(), identity_map(total))),
        "partial_transpose" => {
            let (da, db) = bipartite()?;
            Ok((name.into(), extend_with_identity(&transpose_map(db), da)?))
        }
        "reduction" => {
            let (da, db) = bipartite()?;
            Ok((name.into(), extend_with_identity(&reduction_map(db), da)?))
        }
        "realignment" => {
            let (da, db) = bipartite()?;
            Ok((name.into(), realignment_map(da, db)))
        }
        other => {
            if let Some(path) = other.strip_prefix("file:") {
                let text = std::fs::read_to_string(Path::new(path))?;
                let map = LinearMap::from_json(&text)?;
                if map.src_rows() != total || map.src_cols() != total {
                    return Err(Error::Dimension(format!(
                        "map file acts on dimension {} but state has dimension {total}",
                        map.src_rows()
                    )));
                }
                Ok((format!("file:{path}"), map))
            } else {
                Err(Error::UnknownName(other.into()))
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Generate { family, p, index, fidelity, d, dims, seed, fmt } => {
            cmd_generate(&family, p, index, fidelity, d, dims.as_deref(), seed, &fmt)
        }
        Cmd::Moments { state, map, k_max, shots, seed, fmt } => {
            cmd_moments(&state, &map, k_max, shots, seed, &fmt)
        }
        Cmd::Detect { state, criterion, shots, seed, fmt } => {
            cmd_detect(&state, &criterion, shots, seed, &fmt)
        }
        Cmd::Network { state, dims, map, k, fmt } => {
            cmd_network(state.as_deref(), dims.as_deref(), &map, k, &fmt)
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_generate(
    family: &str,
    p: Option<f64>,
    index: Option<usize>,
    fidelity: Option<f64>,
    d: Option<usize>,
    dims: Option<&str>,
    seed: Option<u64>,
    fmt: &FormatFlags,
) -> Result<()> {
    let missing = |flag: &str| Error::Dimension(format!("family {family:?} needs --{flag}"));
    let (rho, label) = match family {
        "werner" => {
            let p = p.ok_or_else(|| missing("p"))?;
            (werner_state(p)?, format!("werner(p={p})"))
        }
        "bell" => {
            let i = index.ok_or_else(|| missing("index"))?;
            (bell_state(i)?, format!("bell({i})"))
        }
        "isotropic" => {
            let f = fidelity.ok_or_else(|| missing("fidelity"))?;
            let d = d.ok_or_else(|| missing("d"))?;
            (isotropic_state(f, d)?, format!("isotropic(F={f}, d={d})"))
        }
        "random" => {
            let dims = parse_dims(dims.ok_or_else(|| missing("dims"))?)?;
            let seed = seed.ok_or_else(|| missing("seed"))?;
            (random_state(&dims, seed), format!("random(dims={dims:?})"))
        }
        other => return Err(Error::UnknownName(format!("state family {other:?}"))),
    };
    let file = StateFile::from_density(
        &rho,
        Some(StateMetadata { label: Some(label), generator: Some(family.into()), seed }),
    );
    emit(fmt, file.to_json()?)
}

#[derive(Serialize)]
struct MomentsReport {
    schema: u32,
    map: String,
    k_max: usize,
    mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    shots: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    records: Vec<MomentEntry>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    flags: Vec<String>,
}

#[derive(Serialize)]
struct MomentEntry {
    k: usize,
    alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha_shots: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    network: Option<NetworkExport>,
}

/// Networks are attached to moment reports only below this observable size;
/// the JSON payload grows with the square of the dimension.
const NETWORK_EXPORT_LIMIT: usize = 64;

fn cmd_moments(
    state: &Path,
    map_name: &str,
    k_max: Option<usize>,
    shots: Option<u64>,
    seed: u64,
    fmt: &FormatFlags,
) -> Result<()> {
    let rho = load_state(state)?;
    let (name, theta) = resolve_map(map_name, rho.dims())?;
    if theta.dst_rows() != theta.dst_cols() {
        return Err(Error::Dimension(format!(
            "map {name:?} has rectangular output; moments need a square map"
        )));
    }
    let k_max = k_max.unwrap_or(theta.dst_rows());
    if k_max == 0 {
        return Err(Error::Dimension("k_max must be >= 1".into()));
    }
    let mut flags = Vec::new();
    let mut records = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let exact = measure_moment(&theta, &rho, k, Mode::Exact, &mut flags)?;
        let (alpha_shots, std_error) = match shots {
            Some(n) => {
                let est =
                    measure_moment(&theta, &rho, k, Mode::Shots { shots: n, seed }, &mut flags)?;
                (Some(est.alpha), Some(est.sigma))
            }
            None => (None, None),
        };
        let network = if obs_rows(&theta, k) <= NETWORK_EXPORT_LIMIT {
            let obs = collective_observable(&theta, k)?;
            let povm = binary_povm(&obs)?;
            let dil = dilation_unitary(&povm)?;
            Some(export_network(&povm, &dil))
        } else {
            flags.push(format!("k={k}: network export omitted (observable too large)"));
            None
        };
        records.push(MomentEntry { k, alpha: exact.alpha, alpha_shots, std_error, network });
    }
    let report = MomentsReport {
        schema: 1,
        map: name,
        k_max,
        mode: if shots.is_some() { "shots".into() } else { "exact".into() },
        shots,
        seed: shots.map(|_| seed),
        records,
        flags,
    };
    let payload = if fmt.csv {
        moments_csv(&report)
    } else if fmt.text {
        moments_text(&report)
    } else {
        serde_json::to_string_pretty(&report)?
    };
    emit(fmt, payload)
}

fn obs_rows(theta: &LinearMap, k: usize) -> usize {
    let mut rows = 1usize;
    for _ in 0..k {
        match rows.checked_mul(theta.src_rows()) {
            Some(n) => rows = n,
            None => return usize::MAX,
        }
    }
    rows
}

fn moments_csv(report: &MomentsReport) -> String {
    let mut out = String::from("k,alpha,alpha_shots,std_error\n");
    for r in &report.records {
        let shots = r.alpha_shots.map(|v| format!("{v:.17}")).unwrap_or_default();
        let err = r.std_error.map(|v| format!("{v:.17}")).unwrap_or_default();
        out.push_str(&format!("{},{:.17},{},{}\n", r.k, r.alpha, shots, err));
    }
    out.pop();
    out
}

fn moments_text(report: &MomentsReport) -> String {
    let mut out = format!("moments of {} (mode: {})\n", report.map, report.mode);
    for r in &report.records {
        out.push_str(&format!("  alpha_{} = {:.12}", r.k, r.alpha));
        if let (Some(a), Some(e)) = (r.alpha_shots, r.std_error) {
            out.push_str(&format!("  (sampled: {a:.6} +- {e:.6})"));
        }
        out.push('\n');
    }
    for f in &report.flags {
        out.push_str(&format!("  note: {f}\n"));
    }
    out.pop();
    out
}

fn cmd_detect(
    state: &Path,
    criterion: &str,
    shots: Option<u64>,
    seed: u64,
    fmt: &FormatFlags,
) -> Result<()> {
    let rho = load_state(state)?;
    let mode = match shots {
        Some(n) => Mode::Shots { shots: n, seed },
        None => Mode::Exact,
    };
    if rho.dims().len() != 2 {
        return Err(Error::Dimension(format!(
            "detection needs a bipartite state, got {} subsystems",
            rho.dims().len()
        )));
    }
    let (da, db) = (rho.dims()[0], rho.dims()[1]);
    let report = match criterion {
        "ppt" => run_positive_map_test(&rho, &transpose_map(db), "partial_transpose", mode)?,
        "reduction" => run_positive_map_test(&rho, &reduction_map(db), "reduction", mode)?,
        "realignment" => run_contraction_test(&rho, &realignment_map(da, db), "realignment", mode)?,
        other => return Err(Error::UnknownName(format!("criterion {other:?}"))),
    };
    let payload = if fmt.csv {
        detect_csv(&report)
    } else if fmt.text {
        detect_text(&report)
    } else {
        serde_json::to_string_pretty(&report)?
    };
    emit(fmt, payload)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.17}")).unwrap_or_default()
}

fn detect_csv(report: &DetectionReport) -> String {
    let mut out = String::from("k,a_minus,a_plus,v,p0_hat,shots,alpha_k\n");
    for r in &report.records {
        let MomentRecord { k, a_minus, a_plus, v, p0_hat, shots, alpha_k } = r;
        out.push_str(&format!(
            "{k},{},{},{},{},{shots},{alpha_k:.17}\n",
            opt(*a_minus),
            opt(*a_plus),
            opt(*v),
            opt(*p0_hat),
        ));
    }
    out.pop();
    out
}

fn detect_text(report: &DetectionReport) -> String {
    let mut out = format!(
        "criterion: {} ({})\nmode: {}",
        report.criterion, report.map, report.mode
    );
    if let (Some(n), Some(s)) = (report.shots, report.seed) {
        out.push_str(&format!(" ({n} shots, seed {s})"));
    }
    out.push_str(&format!(
        "\nstatistic: {:.12}\nthreshold: {}\nmargin: {:.12}",
        report.statistic, report.threshold, report.margin
    ));
    if report.std_error > 0.0 {
        out.push_str(&format!("\nstd_error: {:.12}", report.std_error));
    }
    out.push_str(&format!(
        "\nverdict: {}",
        match report.verdict {
            mapnet::Verdict::Entangled => "entangled",
            mapnet::Verdict::NotDetected => "not_detected",
        }
    ));
    for f in &report.flags {
        out.push_str(&format!("\nnote: {f}"));
    }
    out
}

fn cmd_network(
    state: Option<&Path>,
    dims: Option<&str>,
    map_name: &str,
    k: usize,
    fmt: &FormatFlags,
) -> Result<()> {
    if k == 0 {
        return Err(Error::Dimension("k must be >= 1".into()));
    }
    let dims: Vec<usize> = match (state, dims) {
        (Some(path), _) => load_state(path)?.dims().to_vec(),
        (None, Some(spec)) => parse_dims(spec)?,
        (None, None) => {
            return Err(Error::Dimension("network needs --state or --dims".into()));
        }
    };
    let (_, theta) = resolve_map(map_name, &dims)?;
    if theta.dst_rows() != theta.dst_cols() {
        return Err(Error::Dimension(
            "network synthesis needs a square-output map".into(),
        ));
    }
    let obs = collective_observable(&theta, k)?;
    let povm = binary_povm(&obs)?;
    let dil = dilation_unitary(&povm)?;
    let export = export_network(&povm, &dil);
    emit(fmt, serde_json::to_string_pretty(&export)?)
}
