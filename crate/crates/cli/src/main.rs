use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use unsharp_ks::colouring::{classify, critical_epsilon, hypothesis_check, UnsharpnessTolerance};
use unsharp_ks::density::DensityFamily;
use unsharp_ks::ksets::{colourability_search, load_ks_set, theorem1_on_set, verify_colouring, KsSet};
use unsharp_ks::linalg3::{CVector3, UnitVector3};
use unsharp_ks::montecarlo::run_experiment;
use unsharp_ks::povm::{alpha_profile, build_povm, uniform_cap_alphas};
use unsharp_ks::quadrature::QuadratureSpec;
use unsharp_ks::rational_witness::{covariance_violation_report, default_battery, parse_battery};
use unsharp_ks::spin::Outcome;
use unsharp_ks::{Error, Result};

const TOOL: &str = "unsharp-ks";

#[derive(Parser, Debug)]
#[command(name = "unsharp-ks", version, about = "Unsharp spin-1 observables and Kochen-Specker colourings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// α-profile of a density family by quadrature (and closed form for caps).
    Alphas(DensityArgs),
    /// Effects of the unsharp observable along a direction.
    Povm(PovmArgs),
    /// Largest ε for which every tripod is coloured one AT, two AF.
    Threshold(ThresholdArgs),
    /// AT/AF colouring of a tripod for each outcome.
    Colour(ColourArgs),
    /// Exact colourability decision for a ray set.
    KsCheck(SetArgs),
    /// Hypotheses plus colourability on a ray set.
    Theorem1(Theorem1Args),
    /// Monte Carlo simulation of misaligned sharp measurements.
    Simulate(SimulateArgs),
    /// Exact π/4-rotation battery over rational directions.
    MeyerWitness(MeyerArgs),
}

#[derive(Args, Debug, Serialize)]
struct Common {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Interpret and report angles in degrees.
    #[arg(long)]
    degrees: bool,
    #[arg(long, default_value_t = 64)]
    theta_points: usize,
    #[arg(long, default_value_t = 64)]
    phi_points: usize,
    #[arg(long, default_value_t = 1e-10)]
    tolerance: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Args, Debug, Serialize)]
struct DensityArgs {
    /// Density family: uniform-cap or truncated-gaussian.
    #[arg(long, default_value = "uniform-cap")]
    family: String,
    /// Width parameter ε.
    #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
    epsilon: f64,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
struct PovmArgs {
    #[command(flatten)]
    #[serde(flatten)]
    density: DensityArgs,
    /// Intended direction as `x,y,z` (normalized).
    #[arg(long, default_value = "0,0,1", allow_hyphen_values = true)]
    direction: String,
}

#[derive(Args, Debug, Serialize)]
struct ThresholdArgs {
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    delta: f64,
    #[arg(long, default_value = "uniform-cap")]
    family: String,
    #[command(flatten)]
    #[serde(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
struct ColourArgs {
    #[command(flatten)]
    #[serde(flatten)]
    density: DensityArgs,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    delta: f64,
}

#[derive(Args, Debug, Serialize)]
struct SetArgs {
    /// Built-in ray set: peres33, coordinate-triad or demo-colourable.
    #[arg(long, default_value = "peres33")]
    set: String,
    /// Ray-set file; overrides `--set`.
    #[arg(long)]
    set_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug, Serialize)]
struct Theorem1Args {
    #[command(flatten)]
    #[serde(flatten)]
    density: DensityArgs,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    delta: f64,
    #[arg(long, default_value = "peres33")]
    set: String,
    #[arg(long)]
    set_file: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    density: DensityArgs,
    #[arg(long, default_value = "0,0,1", allow_hyphen_values = true)]
    direction: String,
    /// `+1`, `0` or `-1` for an S_z eigenstate, or six numbers
    /// `re0,im0,re1,im1,re2,im2` (normalized on input).
    #[arg(long, default_value = "+1", allow_hyphen_values = true)]
    state: String,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Args, Debug, Serialize)]
struct MeyerArgs {
    /// Battery file: pairs of lines (direction, axis) with rational coordinates.
    #[arg(long)]
    battery_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

/// A command's result in all three output shapes.
struct Output {
    result: Value,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    text: String,
}

fn family(name: &str) -> Result<DensityFamily> {
    name.parse()
}

fn angle_in(value: f64, degrees: bool) -> f64 {
    if degrees {
        value.to_radians()
    } else {
        value
    }
}

fn angle_out(value: f64, degrees: bool) -> f64 {
    if degrees {
        value.to_degrees()
    } else {
        value
    }
}

fn quadrature(c: &Common) -> Result<QuadratureSpec> {
    QuadratureSpec::new(c.theta_points, c.phi_points, c.tolerance)
}

fn epsilon(d: &DensityArgs) -> Result<f64> {
    let eps = angle_in(d.epsilon, d.common.degrees);
    if !(eps.is_finite() && eps > 0.0 && eps <= PI) {
        return Err(Error::Validation(format!("ε = {} must satisfy 0 < ε ≤ π", d.epsilon)));
    }
    Ok(eps)
}

fn parse_floats(s: &str, n: usize, what: &str) -> Result<Vec<f64>> {
    let v: std::result::Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    match v {
        Ok(v) if v.len() == n && v.iter().all(|x| x.is_finite()) => Ok(v),
        _ => Err(Error::Validation(format!("{what} must be {n} comma-separated numbers, got `{s}`"))),
    }
}

fn direction(s: &str) -> Result<UnitVector3> {
    let v = parse_floats(s, 3, "direction")?;
    UnitVector3::normalize(v[0], v[1], v[2])
}

fn state(s: &str) -> Result<CVector3> {
    if let Ok(v) = s.parse::<i64>() {
        let o = Outcome::from_value(v)
            .ok_or_else(|| Error::Validation(format!("state label must be +1, 0 or -1, got `{s}`")))?;
        return Ok(unsharp_ks::spin::z_eigenstate(o));
    }
    let v = parse_floats(s, 6, "state")?;
    let psi = CVector3::new(
        num_complex::Complex64::new(v[0], v[1]),
        num_complex::Complex64::new(v[2], v[3]),
        num_complex::Complex64::new(v[4], v[5]),
    );
    let norm = psi.norm();
    if norm == 0.0 {
        return Err(Error::Validation("state must be nonzero".into()));
    }
    Ok(psi.unscale(norm))
}

fn ks_set(name: &str, file: &Option<PathBuf>) -> Result<KsSet> {
    match file {
        Some(path) => KsSet::from_file(path),
        None => load_ks_set(name),
    }
}

fn fmt(x: f64) -> String {
    format!("{x:.12}")
}

fn alphas_cmd(a: &DensityArgs) -> Result<Output> {
    let fam = family(&a.family)?;
    let eps = epsilon(a)?;
    let q = quadrature(&a.common)?;
    let alphas = alpha_profile(&fam.build(eps)?, &q)?;
    let closed = match fam {
        DensityFamily::UniformCap => Some(uniform_cap_alphas(eps)?),
        DensityFamily::TruncatedGaussian => None,
    };
    let (r1, r2) = alphas.sum_rule_residuals();
    let names = ["alpha1", "alpha2", "alpha3", "alpha4"];
    let rows = names
        .iter()
        .zip(alphas.as_array())
        .enumerate()
        .map(|(i, (n, v))| {
            let c = closed.map(|c| fmt(c.as_array()[i])).unwrap_or_default();
            vec![n.to_string(), fmt(v), c]
        })
        .collect();
    let mut text = format!("{} ε = {}\n", a.family, angle_out(eps, a.common.degrees));
    for (n, v) in names.iter().zip(alphas.as_array()) {
        text += &format!("{n} = {}\n", fmt(v));
    }
    text += &format!("sum rules: α1+α2+α3−1 = {r1:e}, 2α2+α4−1 = {r2:e}\n");
    Ok(Output {
        result: json!({
            "alphas": alphas,
            "closed_form": closed,
            "sum_rule_residuals": [r1, r2],
        }),
        header: vec!["name", "quadrature", "closed_form"],
        rows,
        text,
    })
}

fn povm_cmd(a: &PovmArgs) -> Result<Output> {
    let fam = family(&a.density.family)?;
    let eps = epsilon(&a.density)?;
    let q = quadrature(&a.density.common)?;
    let n = direction(&a.direction)?;
    let povm = build_povm(&n, &fam.build(eps)?, &q)?;
    let mut rows = Vec::new();
    let mut text = format!("direction {:?}, ε = {}\n", n.as_array(), angle_out(eps, a.density.common.degrees));
    for o in Outcome::ALL {
        let pairs = povm.effect(o).to_pairs();
        text += &format!("F({o}):\n");
        for (r, row) in pairs.iter().enumerate() {
            text += "  ";
            for (c, [re, im]) in row.iter().enumerate() {
                rows.push(vec![o.to_string(), r.to_string(), c.to_string(), fmt(*re), fmt(*im)]);
                text += &format!("{re:+.9}{im:+.9}i  ");
            }
            text += "\n";
        }
    }
    text += &format!("identity residual {:e}\n", povm.identity_residual());
    Ok(Output {
        result: json!({ "povm": povm.export(), "identity_residual": povm.identity_residual() }),
        header: vec!["outcome", "row", "col", "re", "im"],
        rows,
        text,
    })
}

fn threshold_cmd(a: &ThresholdArgs) -> Result<Output> {
    let fam = family(&a.family)?;
    let delta = UnsharpnessTolerance::new(a.delta)?;
    let q = quadrature(&a.common)?;
    let c = critical_epsilon(delta, |e| fam.build(e), &q)?;
    let binding = c.binding.map(|b| format!("{b:?}")).unwrap_or_else(|| "none".into());
    Ok(Output {
        result: serde_json::to_value(c).expect("serializable"),
        header: vec!["epsilon", "degrees", "binding"],
        rows: vec![vec![fmt(c.epsilon), fmt(c.degrees), binding.clone()]],
        text: format!(
            "critical ε = {:.6} rad = {:.4}° (binding constraint: {binding})\n",
            c.epsilon, c.degrees
        ),
    })
}

fn colour_cmd(a: &ColourArgs) -> Result<Output> {
    let fam = family(&a.density.family)?;
    let eps = epsilon(&a.density)?;
    let delta = UnsharpnessTolerance::new(a.delta)?;
    let q = quadrature(&a.density.common)?;
    let alphas = alpha_profile(&fam.build(eps)?, &q)?;
    let tripods: Vec<_> = Outcome::ALL.iter().map(|&o| classify(&alphas, o, delta)).collect();
    let ok = hypothesis_check(&alphas, delta);
    let mut rows = Vec::new();
    let mut text = String::new();
    for t in &tripods {
        for (k, (v, c)) in t.eigenvalues.iter().zip(t.colours).enumerate() {
            rows.push(vec![t.outcome.to_string(), Outcome::ALL[k].to_string(), fmt(*v), c.to_string()]);
        }
        text += &format!(
            "outcome {}: {} {} {}\n",
            t.outcome, t.colours[0], t.colours[1], t.colours[2]
        );
    }
    text += &format!("hypotheses hold: {ok}\n");
    Ok(Output {
        result: json!({ "alphas": alphas, "tripods": tripods, "hypotheses_ok": ok }),
        header: vec!["outcome", "eigenray", "eigenvalue", "colour"],
        rows,
        text,
    })
}

fn ks_check_cmd(a: &SetArgs) -> Result<Output> {
    let ks = ks_set(&a.set, &a.set_file)?;
    let v = colourability_search(&ks);
    let verified = match &v.assignment {
        Some(asg) => Some(verify_colouring(&ks, asg)?),
        None => None,
    };
    let rows = match &v.assignment {
        Some(asg) => ks
            .rays
            .iter()
            .zip(asg)
            .enumerate()
            .map(|(i, (r, c))| vec![i.to_string(), r.to_string(), c.to_string()])
            .collect(),
        None => Vec::new(),
    };
    let text = format!(
        "{}: {} rays, {} orthogonal pairs, {} triads\n{} after {} nodes (digest {})\n",
        ks.name,
        ks.rays.len(),
        ks.pairs.len(),
        ks.triads.len(),
        if v.satisfiable { "SAT" } else { "UNSAT" },
        v.nodes_explored,
        v.certificate.digest
    );
    Ok(Output {
        result: json!({
            "set": ks.name,
            "rays": ks.rays.len(),
            "pairs": ks.pairs.len(),
            "triads": ks.triads.len(),
            "verdict": if v.satisfiable { "SAT" } else { "UNSAT" },
            "assignment_verified": verified,
            "search": v,
        }),
        header: vec!["ray", "coordinates", "colour"],
        rows,
        text,
    })
}

fn theorem1_cmd(a: &Theorem1Args) -> Result<Output> {
    let fam = family(&a.density.family)?;
    let eps = epsilon(&a.density)?;
    let delta = UnsharpnessTolerance::new(a.delta)?;
    let q = quadrature(&a.density.common)?;
    let ks = ks_set(&a.set, &a.set_file)?;
    let r = theorem1_on_set(fam, eps, delta, &ks, &q)?;
    let rows = vec![
        vec!["covariance_residual".into(), format!("{:e}", r.covariance_residual)],
        vec!["covariance_ok".into(), r.covariance_ok.to_string()],
        vec!["hypotheses_ok".into(), r.hypotheses_ok.to_string()],
        vec!["satisfiable".into(), r.verdict.satisfiable.to_string()],
        vec!["conclusion".into(), r.conclusion.clone()],
    ];
    let text = format!(
        "covariance residual {:e} ({}), hypotheses {}, set {} {}\nconclusion: {}\n",
        r.covariance_residual,
        if r.covariance_ok { "ok" } else { "failed" },
        if r.hypotheses_ok { "hold" } else { "fail" },
        r.set,
        if r.verdict.satisfiable { "colourable" } else { "uncolourable" },
        r.conclusion
    );
    Ok(Output {
        result: serde_json::to_value(&r).expect("serializable"),
        header: vec!["name", "value"],
        rows,
        text,
    })
}

fn simulate_cmd(a: &SimulateArgs) -> Result<Output> {
    let fam = family(&a.density.family)?;
    let eps = epsilon(&a.density)?;
    let n = direction(&a.direction)?;
    let psi = state(&a.state)?;
    let r = run_experiment(&psi, &n, &fam.build(eps)?, a.trials, a.seed)?;
    let mut rows = Vec::new();
    let mut text = format!("{} trials, seed {}\n", r.trials, r.seed);
    for o in Outcome::ALL {
        rows.push(vec![
            o.to_string(),
            r.counts.get(o).to_string(),
            fmt(r.frequencies.get(o)),
            fmt(r.expected.get(o)),
            format!("{:.4}", r.z_scores.get(o)),
        ]);
        text += &format!(
            "{o:>2}: {} ({:.6}) expected {:.6}, z = {:+.3}\n",
            r.counts.get(o),
            r.frequencies.get(o),
            r.expected.get(o),
            r.z_scores.get(o)
        );
    }
    Ok(Output {
        result: serde_json::to_value(&r).expect("serializable"),
        header: vec!["outcome", "count", "frequency", "expected", "z"],
        rows,
        text,
    })
}

fn meyer_cmd(a: &MeyerArgs) -> Result<Output> {
    let battery = match &a.battery_file {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Validation(format!("cannot read {}: {e}", p.display())))?;
            parse_battery(&text)?
        }
        None => default_battery(),
    };
    let r = covariance_violation_report(&battery)?;
    let mut rows = Vec::new();
    let mut text = String::new();
    for s in &r.samples {
        let image: Vec<String> = s.image.iter().map(|c| c.to_string()).collect();
        let witness = s
            .image_direction
            .witness
            .as_ref()
            .map(|w| format!("v{}/v{} = {}", w.numerator, w.denominator, w.ratio))
            .unwrap_or_default();
        rows.push(vec![
            s.direction.to_string(),
            s.axis.to_string(),
            image.join(" "),
            s.image_direction.rational.to_string(),
            witness.clone(),
            s.control_pi2_rational.to_string(),
        ]);
        text += &format!(
            "m = {} about {} -> ({}) rational: {} {}\n",
            s.direction,
            s.axis,
            image.join(", "),
            s.image_direction.rational,
            witness
        );
    }
    if let Some(c) = &r.conclusion {
        text += c;
        text += "\n";
    }
    Ok(Output {
        result: serde_json::to_value(&r).expect("serializable"),
        header: vec!["direction", "axis", "image", "image_rational", "witness", "control_pi2_rational"],
        rows,
        text,
    })
}

fn format_of(cmd: &Command) -> Format {
    match cmd {
        Command::Alphas(a) => a.common.format,
        Command::Povm(a) => a.density.common.format,
        Command::Threshold(a) => a.common.format,
        Command::Colour(a) => a.density.common.format,
        Command::KsCheck(a) => a.format,
        Command::Theorem1(a) => a.density.common.format,
        Command::Simulate(a) => a.density.common.format,
        Command::MeyerWitness(a) => a.format,
    }
}

fn dispatch(cmd: &Command) -> Result<Output> {
    match cmd {
        Command::Alphas(a) => alphas_cmd(a),
        Command::Povm(a) => povm_cmd(a),
        Command::Threshold(a) => threshold_cmd(a),
        Command::Colour(a) => colour_cmd(a),
        Command::KsCheck(a) => ks_check_cmd(a),
        Command::Theorem1(a) => theorem1_cmd(a),
        Command::Simulate(a) => simulate_cmd(a),
        Command::MeyerWitness(a) => meyer_cmd(a),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Validation(_) | Error::Lookup { .. } | Error::Parse { .. } => 2,
        Error::NonConvergence { .. } => 3,
        Error::DataIntegrity(_) | Error::Domain(_) => 1,
    }
}

fn emit(cmd: &Command, out: Output) -> std::io::Result<()> {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match format_of(cmd) {
        Format::Json => {
            let config = serde_json::to_value(cmd).expect("serializable");
            let (name, config) = match config {
                Value::Object(m) => m.into_iter().next().expect("one variant"),
                other => (String::new(), other),
            };
            let envelope = json!({
                "tool": TOOL,
                "version": env!("CARGO_PKG_VERSION"),
                "command": name,
                "config": config,
                "result": out.result,
            });
            serde_json::to_writer_pretty(&mut lock, &envelope)?;
            writeln!(lock)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(lock);
            w.write_record(&out.header)?;
            for row in &out.rows {
                w.write_record(row)?;
            }
            w.flush()
        }
        Format::Text => lock.write_all(out.text.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli.command) {
        Ok(out) => match emit(&cli.command, out) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
