//! `fermiqca`: verification suites, Dirac/Weyl sweeps, circuit compilation
//! and the continuous-time leakage demo.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage or parameter error.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fermiqca::circuit::{compile_dirac1d, simulate};
use fermiqca::dirac1d::{build_step, convergence, dispersion, steps_for, DiracParams};
use fermiqca::fock::max_modes;
use fermiqca::linalg::{fidelity, vec_norm};
use fermiqca::majorana::plus_projector;
use fermiqca::noncausal_demo::{leakage_table, loglog_slope, HoppingChain};
use fermiqca::rng::{random_state, seeded};
use fermiqca::suites::{run_suite, Suite, SuiteConfig};
use fermiqca::weyl3d::{dirac3d_continuum_error, weyl_continuum_error, weyl_dispersion};
use fermiqca::Error;

#[derive(Parser, Debug)]
#[command(name = "fermiqca", version, about = "Causal fermionic evolution on discrete lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a verification suite and emit a JSON report.
    Verify(VerifyArgs),
    /// Discrete Dirac/Weyl sweeps as CSV.
    Dirac(DiracArgs),
    /// Compile a model to a layered qubit circuit (JSON).
    Compile(CompileArgs),
    /// Leakage amplitudes of continuous-time hopping as CSV.
    DemoNoncausal(NoncausalArgs),
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// car, jw, causality, theorem1, lemma1, lemma2, majorana, circuit or endtoend
    #[arg(long, value_parser = parse_suite)]
    suite: Suite,
    /// Physical mode count (theorem1/lemma suites: even counts ≥ 4 use two
    /// modes per site; ring suites: odd ring size).
    #[arg(long)]
    modes: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DiracVariant {
    Dispersion1d,
    Converge1d,
    Converge3dWeyl,
    Converge3dDirac,
    Dispersion3d,
}

#[derive(Args, Debug)]
struct DiracArgs {
    #[arg(value_enum)]
    variant: DiracVariant,
    /// Ring size (odd) for the dispersion variants.
    #[arg(long, default_value_t = 63)]
    sites: usize,
    /// Dimensionless mass coupling M = mε for dispersion1d.
    #[arg(long, default_value_t = 0.0)]
    mass_coupling: f64,
    /// Continuum mass m for the convergence sweeps.
    #[arg(long, alias = "m", default_value_t = 1.0)]
    mass: f64,
    /// Continuum momentum; one value, or three for the 3D sweeps.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    p: Vec<f64>,
    /// Evolution time.
    #[arg(long, alias = "t", default_value_t = 1.0)]
    time: f64,
    /// Lattice spacings to sweep.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.025,0.0125")]
    eps: Vec<f64>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Model {
    Dirac1d,
}

#[derive(Args, Debug)]
struct CompileArgs {
    #[arg(value_enum)]
    model: Model,
    #[arg(long, default_value_t = 3)]
    sites: usize,
    #[arg(long, alias = "mass", default_value_t = 0.3)]
    mass_coupling: f64,
    /// Number of time steps in the circuit.
    #[arg(long, default_value_t = 1)]
    steps: usize,
    /// Seed of the random state used to cross-check against Fock evolution.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Write the circuit JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct NoncausalArgs {
    #[arg(long, default_value_t = 9)]
    sites: usize,
    #[arg(long, default_value_t = 1.0)]
    hopping: f64,
    #[arg(long, default_value_t = 0.0)]
    onsite_u: f64,
    /// Sites at which to report the amplitude.
    #[arg(long, value_delimiter = ',', default_value = "4")]
    site: Vec<usize>,
    #[arg(long, alias = "t", value_delimiter = ',', default_value = "0.0001,0.001,0.01")]
    time: Vec<f64>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_suite(s: &str) -> Result<Suite, String> {
    s.parse::<Suite>().map_err(|e| e.to_string())
}

enum Failure {
    Usage(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Contract(_) => Failure::Check(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn verify(a: &VerifyArgs) -> Result<bool, Failure> {
    let cfg = SuiteConfig { modes: a.modes, seed: a.seed, tol: a.tol };
    let report = run_suite(a.suite, &cfg)?;
    let mut text = report.to_json();
    text.push('\n');
    emit(&a.out, &text)?;
    for c in report.checks.iter().filter(|c| !c.pass) {
        eprintln!("FAIL {}: {:?} (tolerance {:?})", c.name, c.value, c.tolerance);
    }
    Ok(report.pass)
}

fn momentum3(p: &[f64]) -> Result<[f64; 3], Failure> {
    match p {
        [x] => Ok([*x; 3]),
        [x, y, z] => Ok([*x, *y, *z]),
        _ => Err(Failure::Usage(format!("--p takes one or three values, got {}", p.len()))),
    }
}

fn check_eps(eps: &[f64]) -> Result<(), Failure> {
    if eps.is_empty() || eps.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
        return Err(Failure::Usage("--eps values must be positive".into()));
    }
    Ok(())
}

fn dirac(a: &DiracArgs) -> Result<bool, Failure> {
    let mut s = String::new();
    match a.variant {
        DiracVariant::Dispersion1d => {
            let params = DiracParams::new(a.sites, a.mass_coupling)?;
            writeln!(s, "# dispersion1d sites={} mass_coupling={:?}", a.sites, a.mass_coupling).unwrap();
            writeln!(s, "k,p,M,omega").unwrap();
            for r in dispersion(&params) {
                writeln!(s, "{},{:?},{:?},{:?}", r.k, r.p, r.mass_coupling, r.omega).unwrap();
            }
        }
        DiracVariant::Converge1d => {
            check_eps(&a.eps)?;
            let p = match a.p.as_slice() {
                [x] => *x,
                _ => return Err(Failure::Usage("converge1d takes a single --p".into())),
            };
            writeln!(s, "# converge1d m={:?} p={:?} t={:?}", a.mass, p, a.time).unwrap();
            writeln!(s, "epsilon,steps,error").unwrap();
            for r in convergence(a.mass, p, a.time, &a.eps)? {
                writeln!(s, "{:?},{},{:?}", r.epsilon, r.steps, r.error).unwrap();
            }
        }
        DiracVariant::Converge3dWeyl | DiracVariant::Converge3dDirac => {
            check_eps(&a.eps)?;
            let p = momentum3(&a.p)?;
            let weyl = matches!(a.variant, DiracVariant::Converge3dWeyl);
            if weyl {
                writeln!(s, "# converge3d-weyl p={:?},{:?},{:?} t={:?}", p[0], p[1], p[2], a.time).unwrap();
            } else {
                writeln!(s, "# converge3d-dirac m={:?} p={:?},{:?},{:?} t={:?}", a.mass, p[0], p[1], p[2], a.time)
                    .unwrap();
            }
            writeln!(s, "epsilon,steps,error").unwrap();
            for &e in &a.eps {
                let steps = steps_for(a.time, e)?;
                let err =
                    if weyl { weyl_continuum_error(p, a.time, e)? } else { dirac3d_continuum_error(a.mass, p, a.time, e)? };
                writeln!(s, "{:?},{},{:?}", e, steps, err).unwrap();
            }
        }
        DiracVariant::Dispersion3d => {
            if a.sites < 3 || a.sites % 2 == 0 {
                return Err(Failure::Usage(format!("sites must be odd and at least 3, got {}", a.sites)));
            }
            writeln!(s, "# dispersion3d sites_per_axis={}", a.sites).unwrap();
            writeln!(s, "k1,k2,k3,omega_plus,omega_minus").unwrap();
            for r in weyl_dispersion(a.sites) {
                writeln!(s, "{},{},{},{:?},{:?}", r.k[0], r.k[1], r.k[2], r.omega_plus, r.omega_minus).unwrap();
            }
        }
    }
    emit(&a.out, &s)?;
    Ok(true)
}

fn compile(a: &CompileArgs) -> Result<bool, Failure> {
    let Model::Dirac1d = a.model;
    let params = DiracParams::new(a.sites, a.mass_coupling)?;
    let model = compile_dirac1d(&params, a.steps, a.tol)?;
    let ord = &model.ordering;
    let mut pass = true;
    let verification = if ord.len() <= max_modes() {
        let mut rng = seeded(a.seed);
        let mut psi = random_state(1 << ord.len(), &mut rng);
        plus_projector(model.registry.pairs(), ord)?.apply_in_place(&mut psi, ord)?;
        let n = vec_norm(&psi);
        psi.iter_mut().for_each(|z| *z /= n);
        let step = build_step(&params, ord)?;
        let mut expect = psi.clone();
        for _ in 0..a.steps {
            step.apply_in_place(&mut expect, ord)?;
        }
        let f = fidelity(&simulate(&model.circuit, &psi)?, &expect);
        pass = f >= 1.0 - 1e-9;
        serde_json::json!({ "status": "checked", "fidelity": f })
    } else {
        eprintln!("warning: {} modes exceed the dense cap of {}; verification skipped", ord.len(), max_modes());
        serde_json::json!({ "status": "skipped" })
    };
    let pairs: Vec<_> = model
        .registry
        .pairs()
        .iter()
        .map(|p| {
            serde_json::json!({
                "id": p.id,
                "c_at_x": p.c_at_x.to_string(),
                "c_at_y": p.c_at_y.to_string(),
                "qubits": [ord.pi(&p.c_at_x).unwrap(), ord.pi(&p.c_at_y).unwrap()],
            })
        })
        .collect();
    let qubit_modes: Vec<String> = ord.modes().iter().map(|m| m.to_string()).collect();
    let circuit: serde_json::Value = serde_json::from_str(&model.circuit.to_json()).expect("valid circuit json");
    let doc = serde_json::json!({
        "model": "dirac1d",
        "sites": a.sites,
        "mass_coupling": a.mass_coupling,
        "steps": a.steps,
        "num_qubits": model.circuit.num_qubits,
        "layer_count": model.circuit.depth(),
        "gate_count": model.circuit.gate_count(),
        "qubit_modes": qubit_modes,
        "ancilla_pairs": pairs,
        "verification": verification,
        "circuit": circuit,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("serializable");
    text.push('\n');
    emit(&a.out, &text)?;
    Ok(pass)
}

fn noncausal(a: &NoncausalArgs) -> Result<bool, Failure> {
    let chain = HoppingChain::new(a.sites, a.hopping, a.onsite_u)?;
    if a.time.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Failure::Usage("--time values must be non-negative".into()));
    }
    let mut s = String::new();
    writeln!(s, "# demo-noncausal sites={} hopping={:?} onsite_u={:?}", a.sites, a.hopping, a.onsite_u).unwrap();
    let positive: Vec<f64> = a.time.iter().cloned().filter(|t| *t > 0.0).collect();
    if positive.len() >= 2 {
        for &n in &a.site {
            if n > 0 && n < a.sites {
                writeln!(s, "# loglog_slope site={} value={:?}", n, loglog_slope(&chain, n, &positive)?).unwrap();
            }
        }
    }
    writeln!(s, "t,site,amplitude").unwrap();
    for r in leakage_table(&chain, &a.time, &a.site)? {
        writeln!(s, "{:?},{},{:?}", r.t, r.site, r.amplitude).unwrap();
    }
    emit(&a.out, &s)?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Verify(a) => verify(a),
        Command::Dirac(a) => dirac(a),
        Command::Compile(a) => compile(a),
        Command::DemoNoncausal(a) => noncausal(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
