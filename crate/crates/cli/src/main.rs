use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use serde_json::{json, Value};

use nuthermo::hardness::{self, CheckStatus, FourPartitionInstance, HardnessBudget, ThreeDMInstance};
use nuthermo::levels::{self, candidate_levels, LevelSet};
use nuthermo::oracle::make_oracle;
use nuthermo::reductions::{self, Outcome};
use nuthermo::scalar::{parse_rational, to_decimal};
use nuthermo::structure::{Enumerator, DEFAULT_PAIR_BUDGET};
use nuthermo::{
    DensityOfStates, Energy, EnergyModel, Error, ExactOracle, NNParams, Rational, Scalar, StrandSystem,
    StructureSpace, ThermoOracle, Weighting,
};

#[derive(Parser)]
#[command(name = "nuthermo", version, about = "Exact thermodynamics of small nucleic-acid strand systems")]
struct Cli {
    /// Worker threads for enumeration and counting.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Also print P-digit decimal renderings of rational results.
    #[arg(long, global = true, value_name = "P")]
    decimal: Option<usize>,
    /// Write the result here instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Count (and optionally list) the structures of a system.
    Enumerate {
        system: String,
        #[command(flatten)]
        model: ModelArgs,
        /// List every structure.
        #[arg(long)]
        dump: bool,
    },
    /// MFE, density of states, PF and the decision/counting variants.
    Solve {
        system: String,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        query: QueryArgs,
    },
    /// Run one reduction against the brute-force oracle.
    Reduce {
        reduction: ReductionName,
        system: String,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        query: QueryArgs,
        /// Save the call transcript as JSON.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Candidate energy levels.
    Levels {
        /// Strand system (required for nn).
        system: Option<String>,
        /// NN parameter file or bundled set name.
        params_file: Option<String>,
        #[command(flatten)]
        model: ModelArgs,
        /// Total base count for the closed-form sets.
        #[arg(short = 'n')]
        n: Option<usize>,
        /// Use the loop dynamic program instead of the interval grid.
        #[arg(long)]
        dp: bool,
        /// Add the rotational-symmetry shifts to the DP output.
        #[arg(long)]
        symmetry: bool,
    },
    /// Hardness-chain instance generators and parsimony checks.
    Hardgen {
        action: HardAction,
        input: PathBuf,
        /// Also write the generated strand in the strand-system format.
        #[arg(long)]
        strand_out: Option<PathBuf>,
        #[arg(long, default_value_t = hardness::DEFAULT_PART_BUDGET)]
        part_budget: usize,
        #[arg(long, default_value_t = hardness::DEFAULT_BPS_STATES)]
        state_budget: usize,
    },
}

#[derive(Args, Clone)]
struct ModelArgs {
    #[arg(long, value_enum, default_value_t = ModelName::Bpm)]
    model: ModelName,
    /// NN parameter file, or `toy-fine` / `toy-coarse`.
    #[arg(long)]
    params: Option<String>,
    /// Allow pseudoknotted structures.
    #[arg(long, conflicts_with = "no_pseudoknots")]
    pseudoknots: bool,
    /// Forbid pseudoknotted structures.
    #[arg(long)]
    no_pseudoknots: bool,
    #[arg(long)]
    min_hairpin: Option<usize>,
    /// Uniform magnification factor applied to every energy.
    #[arg(long, default_value = "1")]
    magnification: String,
    /// Largest number of candidate base pairs to enumerate over.
    #[arg(long, default_value_t = DEFAULT_PAIR_BUDGET)]
    budget: usize,
}

#[derive(Args, Clone)]
struct QueryArgs {
    /// Boltzmann base per energy quantum.
    #[arg(long, default_value = "2")]
    base: String,
    /// Energy threshold, in energy units.
    #[arg(short = 'k', allow_hyphen_values = true)]
    k: Option<String>,
    /// Partition-function threshold for the dPF query.
    #[arg(long, allow_hyphen_values = true)]
    threshold: Option<String>,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum ModelName {
    Bpm,
    Bps,
    Nn,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum ReductionName {
    DmfeViaMfe,
    DpfViaPf,
    MfeViaDmfe,
    MfeViaSsel,
    PfViaSsel,
    DosViaPf,
    SselViaPf,
    DmfeViaDpf,
    DosViaDpf,
    PfViaDpf,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum HardAction {
    #[value(name = "bps-from-4part")]
    BpsFrom4Part,
    #[value(name = "verify-bps")]
    VerifyBps,
    #[value(name = "4part-from-3dm")]
    FourPartFrom3dm,
    #[value(name = "verify-4part")]
    Verify4Part,
    #[value(name = "count-4part")]
    Count4Part,
}

enum Failure {
    Lib(Error),
    Io(String),
    Mismatch(String),
    Budget(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Mismatch(_) => 2,
            Failure::Budget(_) => 3,
            Failure::Io(_) => 4,
            Failure::Lib(Error::BudgetExceeded { .. }) => 3,
            Failure::Lib(Error::OracleInconsistent(_)) => 2,
            Failure::Lib(_) => 4,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Lib(e) => e.to_string(),
            Failure::Io(m) | Failure::Mismatch(m) | Failure::Budget(m) => m.clone(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

/// A path to a strand file, or sequences joined by `+`.
fn load_system(arg: &str) -> CliResult<StrandSystem> {
    let path = Path::new(arg);
    if path.is_file() {
        return Ok(StrandSystem::parse(&read(path)?)?);
    }
    let seqs: Vec<&str> = arg.split('+').map(str::trim).collect();
    Ok(StrandSystem::from_sequences(&seqs)?)
}

fn load_params(arg: &str) -> CliResult<NNParams> {
    if let Some(p) = NNParams::builtin(arg) {
        return Ok(p);
    }
    Ok(NNParams::parse(&read(Path::new(arg))?)?)
}

impl ModelArgs {
    fn build(&self, sys: &StrandSystem, params_override: Option<&str>) -> CliResult<(EnergyModel, StructureSpace)> {
        let model = match self.model {
            ModelName::Bpm => EnergyModel::bpm(),
            ModelName::Bps => EnergyModel::bps(),
            ModelName::Nn => {
                let src = params_override.or(self.params.as_deref()).unwrap_or("toy-coarse");
                EnergyModel::nn(load_params(src)?.extrapolated(sys.len()))
            }
        };
        let alpha = parse_rational(&self.magnification)?;
        let model = model.magnified(alpha)?;
        let mut space = model.default_space();
        if self.pseudoknots {
            if self.model == ModelName::Nn {
                return Err(Error::InvalidArgument("the nn model is defined on unpseudoknotted structures only".into()).into());
            }
            space.allow_pseudoknots = true;
        }
        if self.no_pseudoknots {
            space.allow_pseudoknots = false;
        }
        if let Some(m) = self.min_hairpin {
            space = space.with_min_hairpin(m);
        }
        Ok((model, space))
    }
}

fn min_hairpin(space: &StructureSpace) -> usize {
    space.min_hairpin
}

/// Candidate levels of the magnified model.
fn model_levels(sys: &StrandSystem, model: &EnergyModel, space: &StructureSpace) -> CliResult<LevelSet> {
    let base = candidate_levels(sys, model, min_hairpin(space))?;
    if model.magnification == Rational::from_integer(1.into()) {
        return Ok(base);
    }
    let j = model.integral_magnification().ok_or_else(|| {
        Error::NonIntegralMagnification(format!("candidate levels need an integral factor, got {}", model.magnification))
    })?;
    Ok(base.magnified(j as i64)?)
}

/// `k` in energy units, as a (possibly fractional) number of quanta.
fn quanta(k: &str, delta: &Rational) -> CliResult<Rational> {
    Ok(parse_rational(k)? / delta)
}

fn whole_quanta(k: &Rational) -> Option<Energy> {
    k.is_integer().then(|| k.to_integer().try_into().ok().map(Energy)).flatten()
}

fn rat(v: &Rational) -> Value {
    Value::String(v.render())
}

fn decimal_of(v: &Rational, digits: Option<usize>) -> Option<Value> {
    digits.map(|p| Value::String(to_decimal(v, p)))
}

fn dos_value(dos: &DensityOfStates) -> Value {
    serde_json::from_str(&dos.to_json()).expect("dos json")
}

fn cmd_enumerate(system: &str, margs: &ModelArgs, dump: bool) -> CliResult<Value> {
    let sys = load_system(system)?;
    let (_, space) = margs.build(&sys, None)?;
    let en = Enumerator::new(&sys, space, margs.budget)?;
    let mut count = BigInt::from(0);
    let mut listing = Vec::new();
    en.for_each(|s| {
        count += 1;
        if dump {
            listing.push(Value::String(s.render()));
        }
    });
    let mut out = json!({ "count": count.to_string() });
    if dump {
        out["structures"] = Value::Array(listing);
    }
    Ok(out)
}

fn cmd_solve(system: &str, margs: &ModelArgs, query: &QueryArgs, digits: Option<usize>) -> CliResult<Value> {
    let sys = load_system(system)?;
    let (model, space) = margs.build(&sys, None)?;
    let base = parse_rational(&query.base)?;
    let oracle: ExactOracle = make_oracle(&sys, space, &model, base.clone(), margs.budget)?;
    let delta = model.delta();
    let pf = oracle.pf(&Weighting::Scaled(1))?;
    let mut out = json!({
        "base": rat(&base),
        "delta": rat(&delta),
        "model": model.name(),
        "mfe": oracle.mfe(1)?.to_string(),
        "dos": dos_value(&oracle.dos),
        "pf": rat(&pf),
        "structures": oracle.dos.total().to_string(),
    });
    if let Some(d) = decimal_of(&pf, digits) {
        out["pf_decimal"] = d;
    }
    if let Some(k) = &query.k {
        let kq = quanta(k, &delta)?;
        let ssel = whole_quanta(&kq).map_or_else(|| BigInt::from(0), |e| oracle.dos.count(e));
        let mfe = Rational::from_integer(oracle.mfe(1)?.0.into());
        out["k"] = rat(&parse_rational(k)?);
        out["ssel"] = Value::String(ssel.to_string());
        out["dmfe"] = Value::Bool(mfe <= kq);
    }
    if let Some(t) = &query.threshold {
        let t = parse_rational(t)?;
        out["threshold"] = rat(&t);
        out["dpf"] = Value::Bool(oracle.dpf(&Weighting::Scaled(1), &t)?);
    }
    Ok(out)
}

fn need<'a>(v: &'a Option<String>, flag: &str, name: &str) -> CliResult<&'a str> {
    v.as_deref()
        .ok_or_else(|| Failure::Lib(Error::InvalidArgument(format!("{name} needs {flag}"))))
}

fn cmd_reduce(
    name: ReductionName,
    system: &str,
    margs: &ModelArgs,
    query: &QueryArgs,
    transcript_path: Option<&Path>,
    digits: Option<usize>,
) -> CliResult<Value> {
    let sys = load_system(system)?;
    let (model, space) = margs.build(&sys, None)?;
    let base = parse_rational(&query.base)?;
    let oracle: ExactOracle = make_oracle(&sys, space, &model, base.clone(), margs.budget)?;
    let delta = model.delta();
    let label = name.to_possible_value().expect("named").get_name().to_string();
    let dos = &oracle.dos;
    let mfe = dos.mfe().unwrap_or(Energy::ZERO);
    let bool_s = |b: bool| b.to_string();

    // (answer, expected, transcript json, rational answer for --decimal)
    let (answer, expected, transcript, numeric): (String, String, String, Option<Rational>) = match name {
        ReductionName::DmfeViaMfe | ReductionName::DmfeViaDpf => {
            let k = quanta(need(&query.k, "-k", &label)?, &delta)?;
            let out = if name == ReductionName::DmfeViaMfe {
                reductions::dmfe_via_mfe(&oracle, &k)?
            } else {
                reductions::dmfe_via_dpf(&oracle, &model_levels(&sys, &model, &space)?, &k)?
            };
            let expect = Rational::from_integer(mfe.0.into()) <= k;
            (bool_s(out.answer), bool_s(expect), out.transcript.to_json(), None)
        }
        ReductionName::DpfViaPf => {
            let t = parse_rational(need(&query.threshold, "--threshold", &label)?)?;
            let out = reductions::dpf_via_pf(&oracle, &t)?;
            let expect = dos.pf(&base)? >= t;
            (bool_s(out.answer), bool_s(expect), out.transcript.to_json(), None)
        }
        ReductionName::MfeViaDmfe | ReductionName::MfeViaSsel => {
            let lv = model_levels(&sys, &model, &space)?;
            let out = if name == ReductionName::MfeViaDmfe {
                reductions::mfe_via_dmfe(&oracle, &lv)?
            } else {
                reductions::mfe_via_ssel(&oracle, &lv)?
            };
            (out.answer.to_string(), mfe.to_string(), out.transcript.to_json(), None)
        }
        ReductionName::PfViaSsel | ReductionName::PfViaDpf => {
            let lv = model_levels(&sys, &model, &space)?;
            let out: Outcome<Rational> = if name == ReductionName::PfViaSsel {
                reductions::pf_via_ssel(&oracle, &lv)?
            } else {
                reductions::pf_via_dpf(&oracle, &lv)?
            };
            let expect = dos.pf(&base)?;
            (out.answer.render(), expect.render(), out.transcript.to_json(), Some(out.answer))
        }
        ReductionName::DosViaPf | ReductionName::DosViaDpf => {
            let lv = model_levels(&sys, &model, &space)?;
            let out = if name == ReductionName::DosViaPf {
                reductions::dos_via_pf(&oracle, &lv)?
            } else {
                reductions::dos_via_dpf(&oracle, &lv)?
            };
            (out.answer.to_json(), dos.to_json(), out.transcript.to_json(), None)
        }
        ReductionName::SselViaPf => {
            let k = quanta(need(&query.k, "-k", &label)?, &delta)?;
            let lv = model_levels(&sys, &model, &space)?;
            let (answer, transcript) = match whole_quanta(&k) {
                Some(e) => {
                    let out = reductions::ssel_via_pf(&oracle, &lv, e)?;
                    (out.answer, out.transcript.to_json())
                }
                None => (BigInt::from(0), reductions::dos_via_pf(&oracle, &lv)?.transcript.to_json()),
            };
            let expect = whole_quanta(&k).map_or_else(|| BigInt::from(0), |e| dos.count(e));
            (answer.to_string(), expect.to_string(), transcript, None)
        }
    };
    if let Some(path) = transcript_path {
        fs::write(path, format!("{transcript}\n")).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    }
    let agrees = answer == expected;
    let parse = |s: &str| serde_json::from_str::<Value>(s).unwrap_or_else(|_| Value::String(s.to_string()));
    let mut out = json!({
        "reduction": label,
        "answer": if answer.starts_with('{') { parse(&answer) } else { Value::String(answer.clone()) },
        "expected": if expected.starts_with('{') { parse(&expected) } else { Value::String(expected.clone()) },
        "agrees": agrees,
        "transcript": parse(&transcript),
    });
    if let Some(d) = numeric.as_ref().and_then(|v| decimal_of(v, digits)) {
        out["answer_decimal"] = d;
    }
    if !agrees {
        return Err(Failure::Mismatch(format!("{label}: reduction gave {answer}, oracle says {expected}")));
    }
    Ok(out)
}

fn cmd_levels(
    system: Option<&str>,
    params_file: Option<&str>,
    margs: &ModelArgs,
    n: Option<usize>,
    dp: bool,
    symmetry: bool,
) -> CliResult<Value> {
    let sys = system.map(load_system).transpose()?;
    let levels = match margs.model {
        ModelName::Bpm | ModelName::Bps => {
            let n = n.or(sys.as_ref().map(StrandSystem::len)).ok_or_else(|| {
                Failure::Lib(Error::InvalidArgument("closed-form levels need -n or a system".into()))
            })?;
            if margs.model == ModelName::Bpm {
                levels::levels_bpm(n)
            } else {
                levels::levels_bps(n)
            }
        }
        ModelName::Nn => {
            let sys = sys.ok_or_else(|| Failure::Lib(Error::InvalidArgument("nn levels need a strand system".into())))?;
            let (model, space) = margs.build(&sys, params_file)?;
            let p = model.params().expect("nn model");
            let mh = min_hairpin(&space);
            match (dp, symmetry) {
                (false, _) => levels::levels_nn_grid(&sys, p),
                (true, false) => levels::levels_nn_dp_all(&sys, p, mh)?,
                (true, true) => levels::levels_nn_dp_symmetric(&sys, p, mh)?,
            }
        }
    };
    Ok(serde_json::from_str(&levels.to_json()).expect("levels json"))
}

fn report_value(r: &hardness::ParsimonyReport) -> Value {
    let mut v: Value = serde_json::from_str(&r.to_json()).expect("report json");
    v["summary"] = Value::String(r.summary());
    v
}

fn cmd_hardgen(
    action: HardAction,
    input: &Path,
    strand_out: Option<&Path>,
    budget: HardnessBudget,
) -> CliResult<Value> {
    let text = read(input)?;
    match action {
        HardAction::BpsFrom4Part => {
            let inst = FourPartitionInstance::from_json(&text)?;
            let bps = hardness::gen_bps_from_4part(&inst);
            if let Some(path) = strand_out {
                fs::write(path, bps.system().to_text()).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            }
            Ok(serde_json::from_str(&bps.to_json()).expect("bps json"))
        }
        HardAction::FourPartFrom3dm => {
            let inst = ThreeDMInstance::from_json(&text)?;
            let (part, alpha) = hardness::gen_4part_from_3dm(&inst)?;
            let instance: Value = serde_json::from_str(&part.to_json()).expect("instance json");
            Ok(json!({ "instance": instance, "alpha": alpha.to_string() }))
        }
        HardAction::Count4Part => {
            let inst = FourPartitionInstance::from_json(&text)?;
            let c = hardness::count_4part_brute(&inst, budget.part_elements)?;
            Ok(json!({ "count": c.to_string() }))
        }
        HardAction::VerifyBps | HardAction::Verify4Part => {
            let report = if action == HardAction::VerifyBps {
                hardness::verify_parsimony_bps(&FourPartitionInstance::from_json(&text)?, budget)?
            } else {
                hardness::verify_parsimony_4part(&ThreeDMInstance::from_json(&text)?, budget)?
            };
            let value = report_value(&report);
            match report.status {
                CheckStatus::Pass => Ok(value),
                CheckStatus::Mismatch => Err(Failure::Mismatch(value.to_string())),
                CheckStatus::Skipped => Err(Failure::Budget(value.to_string())),
            }
        }
    }
}

fn run(cli: &Cli) -> CliResult<Value> {
    match &cli.command {
        Command::Enumerate { system, model, dump } => cmd_enumerate(system, model, *dump),
        Command::Solve { system, model, query } => cmd_solve(system, model, query, cli.decimal),
        Command::Reduce { reduction, system, model, query, transcript } => {
            cmd_reduce(*reduction, system, model, query, transcript.as_deref(), cli.decimal)
        }
        Command::Levels { system, params_file, model, n, dp, symmetry } => {
            cmd_levels(system.as_deref(), params_file.as_deref(), model, *n, *dp, *symmetry)
        }
        Command::Hardgen { action, input, strand_out, part_budget, state_budget } => {
            let budget = HardnessBudget {
                part_elements: *part_budget,
                bps_states: *state_budget,
                ..HardnessBudget::default()
            };
            cmd_hardgen(*action, input, strand_out.as_deref(), budget)
        }
    }
}

fn emit(cli: &Cli, text: &str) -> CliResult<()> {
    match &cli.output {
        Some(path) => fs::write(path, format!("{text}\n")).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(4);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(4);
        }
    }
    match run(&cli).and_then(|v| emit(&cli, &v.to_string())) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            // keep the partial report visible for mismatch and budget outcomes
            if matches!(f, Failure::Mismatch(_) | Failure::Budget(_)) {
                let _ = emit(&cli, &f.message());
            }
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
