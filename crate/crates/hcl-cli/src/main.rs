//! Command-line surface: load a system definition, run analyses and
//! experiments, and emit CSV or JSON-lines reports.
//!
//! Exit codes: 0 on success, 1 on an analysis failure with a witness (no
//! domination anywhere, no cycle found, correspondence violations), 2 on
//! usage, configuration, or parse errors.

use clap::{Args, Parser, Subcommand, ValueEnum};
use hcl_core::cocycle::Bundle;
use hcl_core::domination::{
    detect_equidimensional_cycle, finest_dominated_splitting, signature_robustness_margin,
    unstable_signature,
};
use hcl_core::measures::{continuity_probe, measure_lyapunov_exponents, MeasureSpec};
use hcl_core::perturb::{
    dichotomy_pipeline, make_dense_simple, rotation_arc_experiment, signature_explosion,
    DichotomyConfig, DichotomyOutcome, RotationArcConfig,
};
use hcl_core::sft::PeriodicWord;
use hcl_core::suspension::{flow_signature_correspondence, roof_integral, suspend_spectrum};
use hcl_core::sysfile::{load_system, SystemDefinition};
use hcl_core::OrbitCocycle;
use serde_json::json;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(
    name = "hcl",
    about = "Laboratory for linear cocycles over subshifts of finite type",
    version
)]
struct Cli {
    /// System-definition file.
    #[arg(long, global = true)]
    system: Option<PathBuf>,
    /// Master seed; required by every command that samples.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Largest orbit period scanned.
    #[arg(long, global = true, default_value_t = 8)]
    period_max: usize,
    /// Perturbation budget (operator norm per site).
    #[arg(long, global = true, default_value_t = 0.1)]
    budget: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Subcommand)]
enum Command {
    /// List primitive periodic orbits up to the period cap.
    Orbits,
    /// Periodic Lyapunov spectra, plus the Markov spectrum when the file
    /// defines a chain.
    Spectrum(SpectrumArgs),
    /// Domination certificates per split index and the finest splitting.
    Dominate(DominateArgs),
    /// Per-orbit unstable signatures with sampled robustness margins.
    Signatures(SamplesArgs),
    /// Search orbit pairs for an equidimensional cycle witness.
    CycleDetect(SamplesArgs),
    /// Flow spectra under the file's roof function and the correspondence
    /// report.
    Suspend,
    /// Named experiments.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct SpectrumArgs {
    /// Birkhoff word length for Markov spectra.
    #[arg(long, default_value_t = 100_000)]
    length: usize,
}

#[derive(Args)]
struct DominateArgs {
    /// Largest m probed per split index.
    #[arg(long, default_value_t = 12)]
    m_max: usize,
}

#[derive(Args)]
struct SamplesArgs {
    /// Perturbation samples per margin estimate.
    #[arg(long, default_value_t = 100)]
    samples: usize,
}

#[derive(Args)]
struct ExperimentArgs {
    /// rotation-arc | make-dense-simple | explosion | continuity |
    /// suspension | dichotomy
    name: String,
    /// Marked symbol for the rotation arc.
    #[arg(long, default_value_t = 0)]
    marked_symbol: u8,
    /// Cylinder depth for dense words.
    #[arg(long, default_value_t = 2)]
    depth: usize,
    /// Arc angle increment.
    #[arg(long, default_value_t = 0.05)]
    xi: f64,
    /// Oscillation-table extent as a multiple of m_t.
    #[arg(long, default_value_t = 10)]
    table_factor: usize,
    /// Marked-orbit count per signature for the explosion.
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Seed orbit with signature (1,1) (digit word); auto-detected fixed
    /// point when absent.
    #[arg(long)]
    orbit_p: Option<String>,
    /// Seed orbit with signature (2) (digit word); auto-detected fixed
    /// point when absent.
    #[arg(long)]
    orbit_q: Option<String>,
    /// Perturbation samples per margin estimate.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Period caps for the continuity table, e.g. "2,4,6" or "2..12".
    #[arg(long, default_value = "2..12")]
    periods: String,
    /// Largest m probed per split index.
    #[arg(long, default_value_t = 12)]
    m_max: usize,
}

enum CliError {
    Usage(String),
    Analysis(String),
}

impl CliError {
    fn code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Analysis(_) => ExitCode::from(1),
        }
    }
}

fn usage<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Usage(e.to_string())
}

struct Output {
    format: Format,
    sink: Box<dyn Write>,
}

impl Output {
    fn new(cli: &Cli) -> Result<Self, CliError> {
        let sink: Box<dyn Write> = match &cli.out {
            Some(path) => Box::new(std::fs::File::create(path).map_err(usage)?),
            None => Box::new(std::io::stdout()),
        };
        Ok(Output {
            format: cli.format,
            sink,
        })
    }

    fn header(&mut self, columns: &[&str]) -> Result<(), CliError> {
        if self.format == Format::Csv {
            writeln!(self.sink, "{}", columns.join(",")).map_err(usage)?;
        }
        Ok(())
    }

    /// Emit one record: `fields` as CSV cells, `record` as the JSONL object.
    fn row(&mut self, fields: &[String], record: serde_json::Value) -> Result<(), CliError> {
        match self.format {
            Format::Csv => writeln!(self.sink, "{}", fields.join(",")).map_err(usage),
            Format::Jsonl => {
                let mut obj = record;
                obj["schema_version"] = json!(SCHEMA_VERSION);
                writeln!(self.sink, "{obj}").map_err(usage)
            }
        }
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("HCL_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Usage(msg) => eprintln!("error: {msg}"),
                CliError::Analysis(msg) => eprintln!("analysis: {msg}"),
            }
            e.code()
        }
    }
}

fn load(cli: &Cli) -> Result<SystemDefinition, CliError> {
    let path = cli
        .system
        .as_ref()
        .ok_or_else(|| CliError::Usage("--system <path> is required".into()))?;
    load_system(path).map_err(usage)
}

fn need_seed(cli: &Cli) -> Result<u64, CliError> {
    cli.seed
        .ok_or_else(|| CliError::Usage("--seed is required for sampling commands".into()))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Orbits => cmd_orbits(cli),
        Command::Spectrum(args) => cmd_spectrum(cli, args),
        Command::Dominate(args) => cmd_dominate(cli, args),
        Command::Signatures(args) => cmd_signatures(cli, args),
        Command::CycleDetect(args) => cmd_cycle_detect(cli, args),
        Command::Suspend => cmd_suspend(cli),
        Command::Experiment(args) => cmd_experiment(cli, args),
    }
}

fn cmd_orbits(cli: &Cli) -> Result<(), CliError> {
    let def = load(cli)?;
    let mut out = Output::new(cli)?;
    out.header(&["period", "word"])?;
    for word in def.sft.orbits_up_to(cli.period_max).map_err(usage)? {
        out.row(
            &[word.period().to_string(), word.to_string()],
            json!({"kind": "orbit", "period": word.period(), "word": word.to_string()}),
        )?;
    }
    Ok(())
}

fn cmd_spectrum(cli: &Cli, args: &SpectrumArgs) -> Result<(), CliError> {
    let def = load(cli)?;
    let mut out = Output::new(cli)?;
    out.header(&["measure_id", "i", "lambda", "error_estimate"])?;
    let mut measures: Vec<MeasureSpec> = def
        .sft
        .orbits_up_to(cli.period_max)
        .map_err(usage)?
        .into_iter()
        .map(MeasureSpec::Periodic)
        .collect();
    if let Some(markov) = &def.markov {
        measures.push(MeasureSpec::Markov(markov.clone()));
    }
    let seed = if def.markov.is_some() {
        need_seed(cli)?
    } else {
        0
    };
    for m in &measures {
        let s = measure_lyapunov_exponents(&def.cocycle, m, args.length, seed)
            .map_err(|e| CliError::Analysis(e.to_string()))?;
        for (i, lambda) in s.exponents.iter().enumerate() {
            out.row(
                &[
                    m.id(),
                    i.to_string(),
                    lambda.to_string(),
                    s.error_estimate.to_string(),
                ],
                json!({"kind": "spectrum", "measure_id": m.id(), "i": i,
                       "lambda": lambda, "error_estimate": s.error_estimate}),
            )?;
        }
    }
    Ok(())
}

fn cmd_dominate(cli: &Cli, args: &DominateArgs) -> Result<(), CliError> {
    let def = load(cli)?;
    let orbits = def.sft.orbits_up_to(cli.period_max).map_err(usage)?;
    let mut out = Output::new(cli)?;
    out.header(&["bundle", "kind", "index", "m", "margin", "dims"])?;
    let mut any_cut = false;
    for (bundle, name) in [(Bundle::Full, "full"), (Bundle::Unstable, "unstable")] {
        let f = finest_dominated_splitting(&def.cocycle, &orbits, bundle, args.m_max)
            .map_err(|e| CliError::Analysis(e.to_string()))?;
        for cut in &f.cuts {
            any_cut = true;
            out.row(
                &[
                    name.into(),
                    "cut".into(),
                    cut.index.to_string(),
                    cut.m.to_string(),
                    cut.margin.to_string(),
                    String::new(),
                ],
                json!({"kind": "cut", "bundle": name, "index": cut.index,
                       "m": cut.m, "margin": cut.margin}),
            )?;
        }
        let dims = f
            .dims
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join("|");
        out.row(
            &[
                name.into(),
                "finest".into(),
                String::new(),
                String::new(),
                String::new(),
                dims,
            ],
            json!({"kind": "finest", "bundle": name, "dims": f.dims}),
        )?;
    }
    if !any_cut {
        return Err(CliError::Analysis(
            "no dominated splitting at any index over the scanned orbits".into(),
        ));
    }
    Ok(())
}

fn cmd_signatures(cli: &Cli, args: &SamplesArgs) -> Result<(), CliError> {
    let def = load(cli)?;
    let seed = need_seed(cli)?;
    let orbits = def.sft.orbits_up_to(cli.period_max).map_err(usage)?;
    let mut out = Output::new(cli)?;
    out.header(&["word", "period", "signature", "margin"])?;
    for (i, word) in orbits.iter().enumerate() {
        let oc = OrbitCocycle::new(&def.cocycle, word).map_err(usage)?;
        let sig = unstable_signature(&oc).map_err(|e| CliError::Analysis(e.to_string()))?;
        let margin = signature_robustness_margin(
            &oc,
            args.samples,
            hcl_core::domination::derive_seed(seed, i as u64),
        )
        .map_err(|e| CliError::Analysis(e.to_string()))?;
        out.row(
            &[
                word.to_string(),
                word.period().to_string(),
                sig.to_string(),
                margin.to_string(),
            ],
            json!({"kind": "signature", "word": word.to_string(),
                   "period": word.period(), "signature": sig.0, "margin": margin}),
        )?;
    }
    Ok(())
}

fn cmd_cycle_detect(cli: &Cli, args: &SamplesArgs) -> Result<(), CliError> {
    let def = load(cli)?;
    let seed = need_seed(cli)?;
    let orbits = def.sft.orbits_up_to(cli.period_max).map_err(usage)?;
    let witness = detect_equidimensional_cycle(&def.cocycle, &orbits, args.samples, seed)
        .map_err(|e| CliError::Analysis(e.to_string()))?;
    let mut out = Output::new(cli)?;
    out.header(&["orbit_p", "orbit_q", "sig_p", "sig_q", "margin"])?;
    match witness {
        Some(w) => {
            out.row(
                &[
                    w.orbit_p.to_string(),
                    w.orbit_q.to_string(),
                    w.sig_p.to_string(),
                    w.sig_q.to_string(),
                    w.robustness_margin.to_string(),
                ],
                json!({"kind": "cycle", "orbit_p": w.orbit_p.to_string(),
                       "orbit_q": w.orbit_q.to_string(), "sig_p": w.sig_p.0,
                       "sig_q": w.sig_q.0, "margin": w.robustness_margin}),
            )?;
            Ok(())
        }
        None => Err(CliError::Analysis(
            "no equidimensional cycle: all scanned orbits share one signature".into(),
        )),
    }
}

fn cmd_suspend(cli: &Cli) -> Result<(), CliError> {
    let def = load(cli)?;
    let roof = def
        .roof
        .clone()
        .ok_or_else(|| CliError::Usage("system file has no roof.<symbol> keys".into()))?;
    let orbits = def.sft.orbits_up_to(cli.period_max).map_err(usage)?;
    let mut out = Output::new(cli)?;
    out.header(&[
        "word",
        "period",
        "i",
        "base_lambda",
        "flow_lambda",
        "roof_integral",
    ])?;
    for word in &orbits {
        let oc = OrbitCocycle::new(&def.cocycle, word).map_err(usage)?;
        let base = oc
            .lyapunov_exponents()
            .map_err(|e| CliError::Analysis(e.to_string()))?;
        let measure = MeasureSpec::Periodic(word.clone());
        let h = roof_integral(&roof, &measure).map_err(|e| CliError::Analysis(e.to_string()))?;
        let flow = suspend_spectrum(&base, &roof, &measure)
            .map_err(|e| CliError::Analysis(e.to_string()))?;
        for (i, fl) in flow.exponents.iter().enumerate() {
            let base_val: Option<f64> = if i == flow.zero_index {
                None
            } else {
                let bi = if i < flow.zero_index { i } else { i - 1 };
                Some(base[bi])
            };
            out.row(
                &[
                    word.to_string(),
                    word.period().to_string(),
                    i.to_string(),
                    base_val.map(|b| b.to_string()).unwrap_or_default(),
                    fl.to_string(),
                    h.to_string(),
                ],
                json!({"kind": "flow_spectrum", "word": word.to_string(),
                       "period": word.period(), "i": i, "base_lambda": base_val,
                       "flow_lambda": fl, "roof_integral": h}),
            )?;
        }
    }
    let report = flow_signature_correspondence(&def.cocycle, &orbits, &roof)
        .map_err(|e| CliError::Analysis(e.to_string()))?;
    if !report.violations.is_empty() {
        return Err(CliError::Analysis(format!(
            "{} correspondence violations: {}",
            report.violations.len(),
            report.violations.join("; ")
        )));
    }
    Ok(())
}

fn parse_periods(text: &str) -> Result<Vec<usize>, CliError> {
    if let Some((a, b)) = text.split_once("..") {
        let a: usize = a.trim().parse().map_err(usage)?;
        let b: usize = b.trim().parse().map_err(usage)?;
        if a == 0 || b < a {
            return Err(CliError::Usage(format!("bad period range '{text}'")));
        }
        Ok((a..=b).collect())
    } else {
        text.split(',')
            .map(|tok| tok.trim().parse::<usize>().map_err(usage))
            .collect()
    }
}

fn parse_word(def: &SystemDefinition, text: &str) -> Result<PeriodicWord, CliError> {
    let symbols: Vec<u8> = text
        .chars()
        .map(|c| {
            c.to_digit(10)
                .map(|d| d as u8)
                .ok_or_else(|| CliError::Usage(format!("bad symbol '{c}' in orbit word")))
        })
        .collect::<Result<_, _>>()?;
    PeriodicWord::new(&def.sft, &symbols).map_err(usage)
}

fn cmd_experiment(cli: &Cli, args: &ExperimentArgs) -> Result<(), CliError> {
    match args.name.as_str() {
        "rotation-arc" => experiment_rotation_arc(cli, args),
        "make-dense-simple" => experiment_make_dense_simple(cli, args),
        "explosion" => experiment_explosion(cli, args),
        "continuity" => experiment_continuity(cli, args),
        "dichotomy" => experiment_dichotomy(cli, args),
        "suspension" => cmd_suspend(cli),
        other => Err(CliError::Usage(format!(
            "unknown experiment '{other}'; expected rotation-arc, make-dense-simple, explosion, continuity, suspension, or dichotomy"
        ))),
    }
}

fn experiment_rotation_arc(cli: &Cli, args: &ExperimentArgs) -> Result<(), CliError> {
    let def = load(cli)?;
    let _ = need_seed(cli)?;
    let cfg = RotationArcConfig {
        marked_symbol: args.marked_symbol,
        depth: args.depth.max(1),
        xi: args.xi,
        budget: cli.budget,
        table_factor: args.table_factor,
        ..Default::default()
    };
    let report = rotation_arc_experiment(&def.cocycle, &def.sft, &cfg)
        .map_err(|e| CliError::Analysis(e.to_string()))?;
    let mut out = Output::new(cli)?;
    out.header(&[
        "m",
        "delta",
        "m_t",
        "t_star",
        "rho_at_t_star",
        "growth_slope",
        "r_squared",
    ])?;
    for (m, delta) in &report.oscillation {
        out.row(
            &[
                m.to_string(),
                delta.to_string(),
                report.m_t.to_string(),
                report.t_star.to_string(),
                report.rho_at_t_star.to_string(),
                report.growth_slope.to_string(),
                report.growth_r_squared.to_string(),
            ],
            json!({"kind": "rotation_arc", "m": m, "delta": delta,
                   "m_t": report.m_t, "t_star": report.t_star,
                   "rho_at_t_star": report.rho_at_t_star,
                   "rho_is_integer": report.rho_is_integer,
                   "growth_slope": report.growth_slope,
                   "r_squared": report.growth_r_squared}),
        )?;
    }
    Ok(())
}

fn experiment_make_dense_simple(cli: &Cli, args: &ExperimentArgs) -> Result<(), CliError> {
    let def = load(cli)?;
    let seed = need_seed(cli)?;
    let (oc, report) =
        make_dense_simple(&def.cocycle, &def.sft, args.depth.max(1), cli.budget, seed)
            .map_err(|e| CliError::Analysis(e.to_string()))?;
    let stages: Vec<String> = report.stages.iter().map(|s| s.stage.to_string()).collect();
    let mut out = Output::new(cli)?;
    out.header(&[
        "word",
        "period",
        "budget_used",
        "simple",
        "signature",
        "stages",
    ])?;
    out.row(
        &[
            report.word.to_string(),
            report.word.period().to_string(),
            report.budget_used.to_string(),
            oc.has_simple_spectrum().to_string(),
            report.final_signature.to_string(),
            stages.join("+"),
        ],
        json!({"kind": "make_dense_simple", "word": report.word.to_string(),
               "period": report.word.period(), "budget_used": report.budget_used,
               "simple": oc.has_simple_spectrum(),
               "signature": report.final_signature.0, "stages": stages}),
    )?;
    Ok(())
}

fn experiment_explosion(cli: &Cli, args: &ExperimentArgs) -> Result<(), CliError> {
    let def = load(cli)?;
    let seed = need_seed(cli)?;
    let (p, q) = match (&args.orbit_p, &args.orbit_q) {
        (Some(p), Some(q)) => (parse_word(&def, p)?, parse_word(&def, q)?),
        _ => auto_seed_pair(&def).ok_or_else(|| {
            CliError::Analysis("no pair of fixed points with distinct signatures".into())
        })?,
    };
    let report = signature_explosion(
        &def.cocycle,
        &def.sft,
        &p,
        &q,
        args.n,
        cli.budget,
        seed,
        cli.period_max,
        args.samples,
    )
    .map_err(|e| CliError::Analysis(e.to_string()))?;
    let mut out = Output::new(cli)?;
    out.header(&[
        "set",
        "word",
        "period",
        "signature",
        "margin",
        "perturbed",
        "budget_used",
    ])?;
    for (set, marked) in [("P1", &report.set_p), ("P2", &report.set_q)] {
        for m in marked.iter() {
            out.row(
                &[
                    set.into(),
                    m.word.to_string(),
                    m.word.period().to_string(),
                    m.signature.to_string(),
                    m.margin.to_string(),
                    m.perturbed.to_string(),
                    m.budget_used.to_string(),
                ],
                json!({"kind": "explosion", "set": set, "word": m.word.to_string(),
                       "period": m.word.period(), "signature": m.signature.0,
                       "margin": m.margin, "perturbed": m.perturbed,
                       "budget_used": m.budget_used}),
            )?;
        }
    }
    Ok(())
}

fn auto_seed_pair(def: &SystemDefinition) -> Option<(PeriodicWord, PeriodicWord)> {
    let fixed = def.sft.orbits_up_to(1).ok()?;
    let mut sig11 = None;
    let mut sig2 = None;
    for w in fixed {
        let oc = OrbitCocycle::new(&def.cocycle, &w).ok()?;
        let sig = unstable_signature(&oc).ok()?;
        if sig.0 == vec![1, 1] && sig11.is_none() {
            sig11 = Some(w);
        } else if sig.0 == vec![2] && sig2.is_none() {
            sig2 = Some(w);
        }
    }
    Some((sig11?, sig2?))
}

fn experiment_continuity(cli: &Cli, args: &ExperimentArgs) -> Result<(), CliError> {
    let def = load(cli)?;
    let seed = need_seed(cli)?;
    let target = def
        .markov
        .clone()
        .ok_or_else(|| CliError::Usage("system file has no markov_transition".into()))?;
    let caps = parse_periods(&args.periods)?;
    let rows = continuity_probe(&def.cocycle, &def.sft, &target, &caps, seed, args.m_max)
        .map_err(|e| CliError::Analysis(e.to_string()))?;
    let mut out = Output::new(cli)?;
    out.header(&[
        "period_cap",
        "orbit",
        "i",
        "lambda_periodic",
        "lambda_target",
        "deviation",
    ])?;
    for r in rows {
        out.row(
            &[
                r.period_cap.to_string(),
                r.orbit.to_string(),
                r.component.to_string(),
                r.lambda_periodic.to_string(),
                r.lambda_target.to_string(),
                r.deviation.to_string(),
            ],
            json!({"kind": "continuity", "period_cap": r.period_cap,
                   "orbit": r.orbit.to_string(), "i": r.component,
                   "lambda_periodic": r.lambda_periodic,
                   "lambda_target": r.lambda_target, "deviation": r.deviation}),
        )?;
    }
    Ok(())
}

fn experiment_dichotomy(cli: &Cli, args: &ExperimentArgs) -> Result<(), CliError> {
    let def = load(cli)?;
    let seed = need_seed(cli)?;
    let cfg = DichotomyConfig {
        orbit_cap: cli.period_max.min(8),
        m_max: args.m_max,
        budget: cli.budget,
        margin_samples: args.samples,
        seed,
        ..Default::default()
    };
    let outcome = dichotomy_pipeline(&def.cocycle, &def.sft, &cfg)
        .map_err(|e| CliError::Analysis(e.to_string()))?;
    let mut out = Output::new(cli)?;
    out.header(&["outcome", "detail_a", "detail_b", "budget_used"])?;
    match outcome {
        DichotomyOutcome::Dominated {
            splitting,
            min_margin,
        } => {
            let dims = splitting
                .dims
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join("|");
            out.row(
                &[
                    "dominated".into(),
                    dims,
                    min_margin.to_string(),
                    "0".into(),
                ],
                json!({"kind": "dichotomy", "outcome": "dominated",
                       "dims": splitting.dims, "min_margin": min_margin}),
            )?;
        }
        DichotomyOutcome::Cycle {
            orbit_a,
            sig_a,
            margin_a,
            orbit_b,
            sig_b,
            margin_b,
            budget_used,
            ..
        } => {
            out.row(
                &[
                    "cycle".into(),
                    format!("{orbit_a}:{sig_a}:{margin_a}"),
                    format!("{orbit_b}:{sig_b}:{margin_b}"),
                    budget_used.to_string(),
                ],
                json!({"kind": "dichotomy", "outcome": "cycle",
                       "orbit_a": orbit_a.to_string(), "sig_a": sig_a.0, "margin_a": margin_a,
                       "orbit_b": orbit_b.to_string(), "sig_b": sig_b.0, "margin_b": margin_b,
                       "budget_used": budget_used}),
            )?;
        }
    }
    Ok(())
}
