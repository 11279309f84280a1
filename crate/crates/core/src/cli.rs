//! Command-line front end.
//!
//! Every artifact is wrapped in an [`Envelope`] carrying the build id, the
//! resolved configuration and the master seed. Nothing time-dependent is ever
//! written, so rerunning an artifact's configuration reproduces it byte for
//! byte.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{LabError, Result};
use crate::harness::{
    build_tester, estimate_acceptance, run_deterministic, run_hybrid, trial_instance_seed,
    trial_sample_seed, Generator, Transcript, ESTIMATE_CSV_HEADER,
};
use crate::instances::{junta_class_ln_size, sample_instance, ExperimentParams, InstanceKind, LogBase};
use crate::verification::events::event_frequencies_many;
use crate::verification::suite::{desk_config, run_claim, Claim, ClaimConfig};
use crate::verification::tv::{tv_estimate, TvEstimate};

/// Build identifier embedded in every artifact.
pub const BUILD_ID: &str = env!("JUNTA_LAB_BUILD_ID");

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "junta-lab", version, about = "Hard instances for non-adaptive distribution-free junta testing")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Master seed.
    #[arg(long, global = true, env = "JUNTA_LAB_SEED", default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the derived parameters.
    Bound {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Write sampled instances as JSON lines.
    Gen {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        starred: bool,
        #[arg(long, default_value_t = 1)]
        count: u64,
        /// Output file (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the acceptance probability of a tester.
    Run {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value = "section-majority")]
        tester: String,
        /// yes, no, yes* or no*.
        #[arg(long, default_value = "no*")]
        generator: String,
        /// Run the hybrid algorithm A' (needs a starred generator).
        #[arg(long)]
        hybrid: bool,
        /// Queries (default: floor of the query bound).
        #[arg(long)]
        q: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        /// Also write the transcripts of the first N trials as JSON lines.
        #[arg(long, default_value_t = 0)]
        transcripts: u64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run claim verifiers and write one JSON report per claim.
    Verify {
        /// c1, c2, c31, c32, c33, events, bounds, gap or all.
        #[arg(long)]
        claim: String,
        #[command(flatten)]
        overrides: ClaimArgs,
        /// Report directory.
        #[arg(long, default_value = "reports")]
        out: PathBuf,
    },
    /// Event frequencies E0, E1, E2 and goodness on NO* draws.
    Events {
        #[command(flatten)]
        overrides: ClaimArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plug-in TV distance between the transcripts of a tester under two generators.
    Tv {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value = "section-majority")]
        tester: String,
        #[arg(long, default_value = "yes*")]
        first: String,
        #[arg(long, default_value = "no*")]
        second: String,
        #[arg(long)]
        hybrid: bool,
        #[arg(long)]
        q: Option<usize>,
        /// What to histogram: alpha, answers (alpha and beta) or verdict.
        #[arg(long, value_enum, default_value_t = TvKey::Alpha)]
        key: TvKey,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Every claim at the desk preset, plus the bound table.
    All {
        #[arg(long, value_enum, default_value_t = Preset::Desk)]
        preset: Preset,
        #[arg(long, default_value = "reports")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Yes,
    No,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    #[default]
    Desk,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TvKey {
    Alpha,
    Answers,
    Verdict,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LogBaseArg {
    #[value(name = "2")]
    Two,
    #[value(name = "e")]
    E,
}

/// Instance parameters. `n` and `k` are required unless a preset supplies
/// them; `ln|C|` defaults to the class of all k-juntas.
#[derive(Clone, Debug, Default, Args, Serialize)]
pub struct ParamArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Natural log of the class size.
    #[arg(long = "lnC", conflicts_with = "ln_c_from_juntas")]
    #[serde(rename = "lnC", skip_serializing_if = "Option::is_none")]
    pub ln_c: Option<f64>,
    /// Use ln(C(n,k) 2^(2^k)), the class of all k-juntas.
    #[arg(long = "lnC-from-juntas")]
    #[serde(skip)]
    pub ln_c_from_juntas: bool,
    /// Override the support size (needs --outside-theorem-regime).
    #[arg(long, requires = "outside_theorem_regime")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    /// Override lambda (needs --outside-theorem-regime).
    #[arg(long, requires = "outside_theorem_regime")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Acknowledge that (m, lambda) overrides leave the theorem regime.
    #[arg(long)]
    #[serde(skip)]
    pub outside_theorem_regime: bool,
    /// Base of the logarithms in the n side condition.
    #[arg(long, value_enum)]
    #[serde(skip)]
    pub log_base: Option<LogBaseArg>,
}

impl ParamArgs {
    fn any(&self) -> bool {
        self.n.is_some()
            || self.k.is_some()
            || self.ln_c.is_some()
            || self.ln_c_from_juntas
            || self.m.is_some()
            || self.lambda.is_some()
            || self.log_base.is_some()
    }

    /// Resolve to parameters; missing `n` / `k` fall back to `base`.
    pub fn resolve(&self, base: Option<&ExperimentParams>) -> Result<ExperimentParams> {
        if !self.any() {
            if let Some(b) = base {
                return Ok(b.clone());
            }
        }
        let n = self
            .n
            .or(base.map(|b| b.n()))
            .ok_or_else(|| LabError::param("missing --n"))?;
        let k = self
            .k
            .or(base.map(|b| b.k()))
            .ok_or_else(|| LabError::param("missing --k"))?;
        if k == 0 || k > n {
            return Err(LabError::param(format!("need 1 <= k <= n, got n={n}, k={k}")));
        }
        let ln_c = self.ln_c.unwrap_or_else(|| junta_class_ln_size(n, k));
        let log_base = match self.log_base {
            Some(LogBaseArg::E) => LogBase::Natural,
            _ => LogBase::Two,
        };
        let mut params = ExperimentParams::derive_with_base(n, k, ln_c, log_base)?;
        if self.m.is_some() || self.lambda.is_some() {
            let m = self.m.unwrap_or(params.m());
            let lambda = self.lambda.unwrap_or(params.lambda());
            params = params.with_override(m, lambda)?;
        }
        Ok(params)
    }
}

/// Overrides on top of a preset claim configuration.
#[derive(Clone, Debug, Default, Args)]
pub struct ClaimArgs {
    #[arg(long, value_enum, default_value_t = Preset::Desk)]
    pub preset: Preset,
    #[command(flatten)]
    pub params: ParamArgs,
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Tester to include (repeatable; default: every shipped tester).
    #[arg(long = "tester")]
    pub testers: Vec<String>,
}

impl ClaimArgs {
    pub fn resolve(&self, claim: Claim) -> Result<ClaimConfig> {
        let Preset::Desk = self.preset;
        let mut cfg = desk_config(claim)?;
        if self.params.any() {
            cfg.params = self.params.resolve(Some(&cfg.params))?;
            if matches!(claim, Claim::Gap) && self.q.is_none() {
                cfg.q = cfg.params.q_budget();
            }
        }
        if let Some(q) = self.q {
            cfg.q = q;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if !self.testers.is_empty() {
            cfg.testers = self.testers.clone();
        }
        Ok(cfg)
    }
}

/// Wrapper written around every artifact.
#[derive(Debug, Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub build: &'a str,
    pub command: &'a str,
    pub seed: u64,
    pub config: Value,
    #[serde(flatten)]
    pub body: T,
}

fn envelope<T: Serialize>(command: &str, seed: u64, config: Value, body: T) -> Result<String> {
    let env = Envelope {
        build: BUILD_ID,
        command,
        seed,
        config,
        body,
    };
    Ok(serde_json::to_string_pretty(&env)? + "\n")
}

fn write_output(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(path, text)?;
        }
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn exit_code_for(err: &LabError) -> u8 {
    match err {
        LabError::Parameter(_) | LabError::Dimension { .. } => EXIT_USAGE,
        LabError::Feasibility(_) => EXIT_INFEASIBLE,
        _ => EXIT_FAIL,
    }
}

/// Parse arguments and run; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS });
        }
    };
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

pub fn execute(cli: &Cli) -> Result<u8> {
    let seed = cli.seed;
    match &cli.command {
        Command::Bound { params, format } => cmd_bound(params, *format, seed),
        Command::Gen {
            params,
            kind,
            starred,
            count,
            out,
        } => cmd_gen(params, *kind, *starred, *count, out.as_deref(), seed),
        Command::Run {
            params,
            tester,
            generator,
            hybrid,
            q,
            trials,
            transcripts,
            format,
            out,
        } => cmd_run(
            RunArgs {
                params,
                tester,
                generator,
                hybrid: *hybrid,
                q: *q,
                trials: *trials,
                transcripts: *transcripts,
                format: *format,
            },
            out.as_deref(),
            seed,
        ),
        Command::Verify { claim, overrides, out } => cmd_verify(claim, overrides, out, seed),
        Command::Events { overrides, out } => cmd_events(overrides, out.as_deref(), seed),
        Command::Tv {
            params,
            tester,
            first,
            second,
            hybrid,
            q,
            key,
            trials,
            out,
        } => cmd_tv(
            TvArgs {
                params,
                tester,
                first,
                second,
                hybrid: *hybrid,
                q: *q,
                key: *key,
                trials: *trials,
            },
            out.as_deref(),
            seed,
        ),
        Command::All { preset, out } => {
            let overrides = ClaimArgs {
                preset: *preset,
                ..ClaimArgs::default()
            };
            cmd_verify("all", &overrides, out, seed)
        }
    }
}

/// Rows of the `bound` table, in print order.
pub fn bound_table(p: &ExperimentParams) -> Vec<(&'static str, String)> {
    vec![
        ("n", p.n().to_string()),
        ("k", p.k().to_string()),
        ("lnC", format!("{}", p.ln_class_size())),
        ("m", p.m().to_string()),
        ("lambda", format!("{}", p.lambda())),
        ("epsilon", format!("{}", p.epsilon())),
        ("qBound", format!("{}", p.q_bound())),
        ("qBudget", p.q_budget().to_string()),
        ("nMin", format!("{}", p.regime_min_n())),
        ("theoremRegime", p.theorem_regime().to_string()),
    ]
}

fn cmd_bound(args: &ParamArgs, format: Format, seed: u64) -> Result<u8> {
    let p = args.resolve(None)?;
    for w in p.warnings() {
        eprintln!("warning: {w}");
    }
    let text = match format {
        Format::Text => {
            let mut s = String::new();
            for (k, v) in bound_table(&p) {
                s.push_str(&format!("{k:<14} {v}\n"));
            }
            for w in p.warnings() {
                s.push_str(&format!("{:<14} {w}\n", "warning"));
            }
            s
        }
        Format::Json => envelope("bound", seed, json!({ "params": args }), json!({ "result": p }))?,
        Format::Csv => {
            let rows = bound_table(&p);
            let header: Vec<&str> = rows.iter().map(|(k, _)| *k).collect();
            let values: Vec<&str> = rows.iter().map(|(_, v)| v.as_str()).collect();
            format!("{}\n{}\n", header.join(","), values.join(","))
        }
    };
    write_output(None, &text)?;
    Ok(EXIT_PASS)
}

fn cmd_gen(args: &ParamArgs, kind: KindArg, starred: bool, count: u64, out: Option<&Path>, seed: u64) -> Result<u8> {
    let p = args.resolve(None)?;
    let kind = match kind {
        KindArg::Yes => InstanceKind::Yes,
        KindArg::No => InstanceKind::No,
    };
    let config = json!({ "params": args, "resolved": p, "kind": kind, "starred": starred, "count": count });
    let mut text = String::new();
    for i in 0..count {
        let inst = sample_instance(&p, kind, trial_instance_seed(seed, i), starred)?;
        let line = json!({
            "build": BUILD_ID,
            "command": "gen",
            "seed": seed,
            "config": config,
            "index": i,
            "instance": inst.to_record(),
        });
        text.push_str(&serde_json::to_string(&line)?);
        text.push('\n');
    }
    write_output(out, &text)?;
    Ok(EXIT_PASS)
}

struct RunArgs<'a> {
    params: &'a ParamArgs,
    tester: &'a str,
    generator: &'a str,
    hybrid: bool,
    q: Option<usize>,
    trials: u64,
    transcripts: u64,
    format: Format,
}

fn cmd_run(a: RunArgs<'_>, out: Option<&Path>, seed: u64) -> Result<u8> {
    let p = a.params.resolve(None)?;
    let generator: Generator = a.generator.parse()?;
    if a.hybrid && !generator.starred() {
        return Err(LabError::param("--hybrid needs a starred generator"));
    }
    let q = a.q.unwrap_or_else(|| p.q_budget());
    let tester = build_tester(a.tester, p.n(), p.k(), q, seed)?;
    let est = estimate_acceptance(tester.as_ref(), generator, a.hybrid, &p, a.trials, seed)?;
    let config = json!({
        "params": a.params, "resolved": p, "tester": a.tester, "generator": generator,
        "hybrid": a.hybrid, "q": q, "trials": a.trials,
    });
    let mut text = match a.format {
        Format::Csv => format!(
            "# build={BUILD_ID}\n# config={}\n{ESTIMATE_CSV_HEADER}\n{}\n",
            serde_json::to_string(&config)?,
            est.csv_row()
        ),
        Format::Text => format!("{}\n", est.csv_row()),
        Format::Json => envelope("run", seed, config, json!({ "estimate": est }))?,
    };
    if a.transcripts > 0 {
        let mut lines = String::new();
        for t in 0..a.transcripts.min(a.trials) {
            let inst = generator.sample(&p, trial_instance_seed(seed, t))?;
            let s = trial_sample_seed(seed, t);
            let tr: Transcript = if a.hybrid {
                run_hybrid(tester.as_ref(), &inst, s)?
            } else {
                run_deterministic(tester.as_ref(), &inst, s)?
            };
            lines.push_str(&serde_json::to_string(&json!({ "trial": t, "transcript": tr }))?);
            lines.push('\n');
        }
        match out {
            Some(path) => write_output(Some(&path.with_extension("transcripts.jsonl")), &lines)?,
            None => text.push_str(&lines),
        }
    }
    write_output(out, &text)?;
    Ok(EXIT_PASS)
}

fn claims_for(name: &str) -> Result<Vec<Claim>> {
    if name == "all" {
        Ok(Claim::ALL.to_vec())
    } else {
        Ok(vec![name.parse()?])
    }
}

fn cmd_verify(claim: &str, overrides: &ClaimArgs, out: &Path, seed: u64) -> Result<u8> {
    let claims = claims_for(claim)?;
    fs::create_dir_all(out)?;
    let mut any_fail = false;
    let mut any_infeasible = false;
    for c in claims {
        let cfg = overrides.resolve(c)?;
        let config = json!({ "claim": c, "preset": overrides.preset, "run": cfg });
        let path = out.join(format!("{c}.json"));
        match run_claim(c, &cfg, seed) {
            Ok(report) => {
                println!("{}", report.summary_line());
                any_fail |= !report.pass;
                fs::write(&path, envelope("verify", seed, config, json!({ "report": report }))?)?;
            }
            Err(LabError::Feasibility(msg)) => {
                println!("{:<7} INFEASIBLE  {msg}", c.name());
                any_infeasible = true;
                let body = json!({ "error": { "kind": "feasibility", "message": msg } });
                fs::write(&path, envelope("verify", seed, config, body)?)?;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(if any_infeasible {
        EXIT_INFEASIBLE
    } else if any_fail {
        EXIT_FAIL
    } else {
        EXIT_PASS
    })
}

fn cmd_events(overrides: &ClaimArgs, out: Option<&Path>, seed: u64) -> Result<u8> {
    let cfg = overrides.resolve(Claim::Events)?;
    let testers = cfg
        .testers
        .iter()
        .map(|name| build_tester(name, cfg.params.n(), cfg.params.k(), cfg.q, seed))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&dyn crate::harness::Tester> = testers.iter().map(|t| t.as_ref()).collect();
    let reports = event_frequencies_many(&cfg.params, cfg.q, &refs, cfg.trials, seed)?;
    let text = envelope("events", seed, json!({ "run": cfg }), json!({ "reports": reports }))?;
    write_output(out, &text)?;
    Ok(EXIT_PASS)
}

struct TvArgs<'a> {
    params: &'a ParamArgs,
    tester: &'a str,
    first: &'a str,
    second: &'a str,
    hybrid: bool,
    q: Option<usize>,
    key: TvKey,
    trials: u64,
}

fn transcript_key(tr: &Transcript, key: TvKey) -> String {
    let bits = |b: &[bool]| b.iter().map(|&x| if x { '1' } else { '0' }).collect::<String>();
    match key {
        TvKey::Alpha => bits(&tr.labels),
        TvKey::Answers => format!("{}|{}", bits(&tr.labels), bits(&tr.answers)),
        TvKey::Verdict => format!("{:?}", tr.verdict),
    }
}

fn cmd_tv(a: TvArgs<'_>, out: Option<&Path>, seed: u64) -> Result<u8> {
    let p = a.params.resolve(None)?;
    let first: Generator = a.first.parse()?;
    let second: Generator = a.second.parse()?;
    if a.hybrid && !(first.starred() && second.starred()) {
        return Err(LabError::param("--hybrid needs starred generators"));
    }
    let q = a.q.unwrap_or_else(|| p.q_budget());
    let tester = build_tester(a.tester, p.n(), p.k(), q, seed)?;
    let sampler = |generator: Generator| {
        let p = &p;
        let tester = tester.as_ref();
        move |s: u64| -> String {
            let run = || -> Result<Transcript> {
                let inst = generator.sample(p, s)?;
                let samples_seed = trial_sample_seed(s, 0);
                if a.hybrid {
                    run_hybrid(tester, &inst, samples_seed)
                } else {
                    run_deterministic(tester, &inst, samples_seed)
                }
            };
            match run() {
                Ok(tr) => transcript_key(&tr, a.key),
                Err(e) => format!("error: {e}"),
            }
        }
    };
    let est: TvEstimate = tv_estimate(sampler(first), sampler(second), |k: &String| k.clone(), a.trials, seed);
    let config = json!({
        "params": a.params, "resolved": p, "tester": a.tester, "first": first, "second": second,
        "hybrid": a.hybrid, "q": q, "key": a.key, "trials": a.trials,
    });
    let text = envelope("tv", seed, config, json!({ "estimate": est }))?;
    write_output(out, &text)?;
    Ok(EXIT_PASS)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> std::result::Result<Cli, clap::Error> {
        Cli::try_parse_from(std::iter::once("junta-lab").chain(args.iter().copied()))
    }

    #[test]
    fn overrides_need_acknowledgement() {
        assert!(parse(&["bound", "--n", "256", "--k", "12", "--m", "4096"]).is_err());
        assert!(parse(&["bound", "--n", "256", "--k", "12", "--m", "4096", "--outside-theorem-regime"]).is_ok());
    }

    #[test]
    fn lnc_flags_conflict() {
        assert!(parse(&["bound", "--n", "10", "--k", "2", "--lnC", "3", "--lnC-from-juntas"]).is_err());
    }

    #[test]
    fn param_resolution() {
        let cli = parse(&["bound", "--n", "8", "--k", "2"]).unwrap();
        let Command::Bound { params, .. } = &cli.command else { panic!() };
        assert_eq!(params.resolve(None).unwrap().m(), 110);
        let missing = ParamArgs { k: Some(2), ..ParamArgs::default() };
        assert!(matches!(missing.resolve(None), Err(LabError::Parameter(_))));
        let over = ParamArgs {
            n: Some(256),
            k: Some(12),
            m: Some(4096),
            lambda: Some(0.05),
            outside_theorem_regime: true,
            ..ParamArgs::default()
        };
        let p = over.resolve(None).unwrap();
        assert_eq!((p.m(), p.q_budget()), (4096, 4));
    }

    #[test]
    fn claim_overrides_fall_back_to_preset() {
        let args = ClaimArgs {
            params: ParamArgs { n: Some(20), k: Some(4), ..ParamArgs::default() },
            ..ClaimArgs::default()
        };
        let cfg = args.resolve(Claim::C2).unwrap();
        assert_eq!((cfg.params.n(), cfg.params.k()), (20, 4));
        assert_eq!(cfg.trials, 200);
    }

    #[test]
    fn error_exit_codes() {
        assert_eq!(exit_code_for(&LabError::param("x")), EXIT_USAGE);
        assert_eq!(exit_code_for(&LabError::feasibility("x")), EXIT_INFEASIBLE);
        assert_eq!(exit_code_for(&LabError::contract("x")), EXIT_FAIL);
    }
}
