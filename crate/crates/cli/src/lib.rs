//! Command-line front end for the ci-engine library.
//!
//! [`run`] takes the argument vector (without the program name) and returns
//! the exit code together with what should go to stdout and stderr.
//! Exit codes: 0 success, 1 a verdict contradicted `--expect`, 2 bad input.

mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use ci_engine::format::{self, AnyDiagram, DiagramFile};
use ci_engine::fstheory;
use ci_engine::nogo::{self, embed, Correlation, EmbedResult, Membership, QuantumSetup, Scenario};
use ci_engine::optheory::{self, OpDiagram, Prediction, PredictionMap};
use ci_engine::rational;
use ci_engine::{random, substoch, types, Error};

pub use report::{Format, Payload, Report};

/// Bounds for the `CI_ENGINE_CAP` override.
pub const CAP_RANGE: (usize, usize) = (1_000, 10_000_000);

#[derive(Parser, Debug)]
#[command(name = "ci-engine", version, about = "Causal-inferential process theories: evaluation, equivalence and no-go checks")]
struct Cli {
    /// Output style.
    #[arg(long, value_enum, global = true, default_value_t = Format::Human)]
    format: Format,
    /// Omit the timing line from reports.
    #[arg(long, global = true)]
    no_timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Expect {
    /// Expected verdict; a mismatch exits with status 1.
    #[arg(long)]
    expect: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Denote an F-S diagram, or predict an operational one under a model.
    Eval {
        diagram: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Inferential (F-S) or operational equivalence of two diagrams.
    Equiv {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        expect: Expect,
    },
    /// Normal form of an F-S diagram.
    NormalForm {
        diagram: PathBuf,
        /// Also write the normal-form diagram to this file.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Quotiented normal form `sigma . pi` of an F-S diagram.
    Qnf { diagram: PathBuf },
    /// Exhaustively check the F-S rewrite axioms and Boolean laws.
    VerifyAxioms {
        #[arg(long, default_value_t = 2)]
        max_carrier: usize,
        #[command(flatten)]
        expect: Expect,
    },
    /// Local-polytope membership of a correlation table.
    BellCheck {
        /// `chsh`, `bell:nx,ny,na,nb`, `triangle:na,nb,nc`,
        /// `instrumental:nx,na,nb` or `prepare-measure:nx,na,ny,nb`.
        #[arg(long)]
        scenario: String,
        #[arg(long, conflicts_with = "quantum", required_unless_present = "quantum")]
        corr: Option<PathBuf>,
        /// Quantum model providing the scenario's procedures.
        #[arg(long)]
        quantum: Option<PathBuf>,
        #[command(flatten)]
        expect: Expect,
    },
    /// Search for a simplex embedding of a GPT fragment.
    SimplexEmbed {
        #[arg(long)]
        fragment: PathBuf,
        #[arg(long, default_value_t = embed::MAX_LAMBDA)]
        lambda_max: usize,
        #[command(flatten)]
        expect: Expect,
    },
    /// Apply a classical realist representation to an operational diagram.
    RepCheck {
        #[arg(long)]
        rep: PathBuf,
        #[arg(long)]
        diagram: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        leibniz_pairs: Option<PathBuf>,
        #[command(flatten)]
        expect: Expect,
    },
    /// Randomized agreement checks: normal forms and table reconstruction.
    PropertyCheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[command(flatten)]
        expect: Expect,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug)]
enum Failure {
    Engine { path: Option<PathBuf>, err: Error },
    Io(PathBuf, String),
    Usage(String),
}

impl Failure {
    fn render(&self) -> String {
        match self {
            Failure::Engine { path: Some(p), err } => match err {
                Error::Parse { line, column, message } => {
                    format!("error[E-PARSE]: {}:{line}:{column}: {message}", p.display())
                }
                other => format!("error[{}]: {}: {other}", other.code(), p.display()),
            },
            Failure::Engine { path: None, err } => format!("error[{}]: {err}", err.code()),
            Failure::Io(p, msg) => format!("error[E-IO]: {}: {msg}", p.display()),
            Failure::Usage(msg) => format!("error[E-USAGE]: {msg}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Failure::Engine { path: None, err }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn at<T>(path: &Path, r: ci_engine::Result<T>) -> CliResult<T> {
    r.map_err(|err| Failure::Engine {
        path: Some(path.to_path_buf()),
        err,
    })
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Io(path.to_path_buf(), e.to_string()))
}

fn load_diagram(path: &Path) -> CliResult<DiagramFile> {
    at(path, format::parse_diagram(&read(path)?))
}

fn load_model(path: &Path) -> CliResult<PredictionMap> {
    at(path, format::parse_model(&read(path)?))
}

fn fs_only(path: &Path, f: &DiagramFile) -> CliResult<fstheory::FsDiagram> {
    match &f.diagram {
        AnyDiagram::Fs(d) => Ok(d.clone()),
        AnyDiagram::Op(_) => Err(Failure::Engine {
            path: Some(path.to_path_buf()),
            err: Error::ConfigError("this command needs an F-S diagram (`theory: fs`)".into()),
        }),
    }
}

fn op_only(path: &Path, f: &DiagramFile) -> CliResult<OpDiagram> {
    match &f.diagram {
        AnyDiagram::Op(d) => Ok(d.clone()),
        AnyDiagram::Fs(_) => Err(Failure::Engine {
            path: Some(path.to_path_buf()),
            err: Error::ConfigError("this command needs an operational diagram (`theory: op`)".into()),
        }),
    }
}

fn need_model(model: &Option<PathBuf>) -> CliResult<PredictionMap> {
    match model {
        Some(p) => load_model(p),
        None => Err(Failure::Usage("operational diagrams need --model".into())),
    }
}

/// Reads `CI_ENGINE_CAP`, clamped to [`CAP_RANGE`].
pub fn cap_from_env(value: Option<&str>) -> std::result::Result<Option<usize>, String> {
    let Some(v) = value else { return Ok(None) };
    let n: f64 = v
        .trim()
        .parse()
        .map_err(|_| format!("CI_ENGINE_CAP must be a number, got `{v}`"))?;
    if !n.is_finite() || n < 0.0 {
        return Err(format!("CI_ENGINE_CAP must be a non-negative number, got `{v}`"));
    }
    Ok(Some((n as usize).clamp(CAP_RANGE.0, CAP_RANGE.1)))
}

pub fn parse_scenario(s: &str) -> std::result::Result<Scenario, String> {
    if s == "chsh" {
        return Ok(Scenario::chsh());
    }
    let (kind, sizes) = s.split_once(':').ok_or_else(|| format!("unknown scenario `{s}`"))?;
    let n = sizes
        .split(',')
        .map(|x| x.trim().parse::<usize>().map_err(|_| format!("bad cardinality `{x}` in `{s}`")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let want = |k: usize| {
        if n.len() == k {
            Ok(())
        } else {
            Err(format!("`{kind}` takes {k} cardinalities"))
        }
    };
    let sc = match kind {
        "bell" => {
            want(4)?;
            Scenario::Bell {
                nx: n[0],
                ny: n[1],
                na: n[2],
                nb: n[3],
            }
        }
        "triangle" => {
            want(3)?;
            Scenario::Triangle {
                na: n[0],
                nb: n[1],
                nc: n[2],
            }
        }
        "instrumental" => {
            want(3)?;
            Scenario::Instrumental {
                nx: n[0],
                na: n[1],
                nb: n[2],
            }
        }
        "prepare-measure" => {
            want(4)?;
            Scenario::PrepareMeasure {
                nx: n[0],
                na: n[1],
                ny: n[2],
                nb: n[3],
            }
        }
        _ => return Err(format!("unknown scenario `{s}`")),
    };
    sc.validate().map_err(|e| e.to_string())?;
    Ok(sc)
}

/// Inverse of [`parse_scenario`].
pub fn scenario_label(s: &Scenario) -> String {
    let join = |n: &[usize]| n.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
    match *s {
        Scenario::Bell { nx, ny, na, nb } => format!("bell:{}", join(&[nx, ny, na, nb])),
        Scenario::Triangle { na, nb, nc } => format!("triangle:{}", join(&[na, nb, nc])),
        Scenario::Instrumental { nx, na, nb } => format!("instrumental:{}", join(&[nx, na, nb])),
        Scenario::PrepareMeasure { nx, na, ny, nb } => format!("prepare-measure:{}", join(&[nx, na, ny, nb])),
    }
}

/// Compares a verdict with `--expect`; `words` are the (true, false) spellings.
fn check_expect(report: &mut Report, expect: &Expect, verdict: bool, words: (&str, &str)) -> CliResult<bool> {
    let got = if verdict { words.0 } else { words.1 };
    report.text("verdict", got);
    match expect.expect.as_deref() {
        None => Ok(true),
        Some(w) if w == words.0 || w == words.1 => Ok(w == got),
        Some(w) => Err(Failure::Usage(format!(
            "--expect takes `{}` or `{}`, got `{w}`",
            words.0, words.1
        ))),
    }
}

fn prediction(report: &mut Report, key: &str, p: &Prediction) {
    report.text("dom", p.dom());
    report.text("cod", p.cod());
    match p {
        Prediction::Exact(s) => report.exact(key, s.matrix()),
        Prediction::Approx(f) => report.approx(key, &f.matrix),
    }
}

fn eval(report: &mut Report, path: &Path, model: &Option<PathBuf>) -> CliResult<bool> {
    let f = load_diagram(path)?;
    report.text("boxes", f.box_count());
    match &f.diagram {
        AnyDiagram::Fs(d) => {
            report.text("theory", "fs");
            let s = at(path, fstheory::denote(d))?;
            prediction(report, "denotation", &Prediction::Exact(s));
        }
        AnyDiagram::Op(d) => {
            report.text("theory", "op");
            let p = need_model(model)?;
            let pred = at(path, optheory::predict_closed(d, &p))?;
            prediction(report, "prediction", &pred);
        }
    }
    Ok(true)
}

fn equiv(report: &mut Report, a: &Path, b: &Path, model: &Option<PathBuf>, expect: &Expect) -> CliResult<bool> {
    let (fa, fb) = (load_diagram(a)?, load_diagram(b)?);
    report.text("same_canonical_text", format::serialize_diagram(&fa) == format::serialize_diagram(&fb));
    let eq = match (&fa.diagram, &fb.diagram) {
        (AnyDiagram::Fs(x), AnyDiagram::Fs(y)) => fstheory::inferentially_equivalent(x, y)?,
        (AnyDiagram::Op(x), AnyDiagram::Op(y)) => optheory::op_equivalent(x, y, &need_model(model)?)?,
        _ => return Err(Failure::Usage("both diagrams must use the same theory".into())),
    };
    report.text("equivalent", eq);
    check_expect(report, expect, eq, ("equivalent", "inequivalent"))
}

fn normal_form(report: &mut Report, path: &Path, output: &Option<PathBuf>) -> CliResult<bool> {
    let f = load_diagram(path)?;
    let d = fs_only(path, &f)?;
    let nf = at(path, fstheory::normal_form(&d))?;
    report.list("input_order", nf.input_order.iter().map(|&i| f.input_names[i].clone()).collect());
    report.list("output_order", nf.output_order.iter().map(|&j| f.output_names[j].clone()).collect());
    report.text("dom", nf.s.dom());
    report.text("cod", nf.s.cod());
    report.exact("S", nf.s.matrix());
    if let Some(out) = output {
        let nd = nf.to_diagram()?;
        let text = format::serialize_diagram(&DiagramFile {
            diagram: AnyDiagram::Fs(nd),
            input_names: f.input_names.clone(),
            output_names: f.output_names.clone(),
        });
        std::fs::write(out, text).map_err(|e| Failure::Io(out.clone(), e.to_string()))?;
        report.text("written", out.display());
    }
    Ok(true)
}

fn qnf(report: &mut Report, path: &Path) -> CliResult<bool> {
    let f = load_diagram(path)?;
    let d = fs_only(path, &f)?;
    let q = at(path, fstheory::quotient_normal_form(&d))?;
    report.exact("sigma", q.sigma.matrix());
    report.list("weights", report::rationals(&q.weights));
    report.exact("pi", q.pi.matrix());
    Ok(true)
}

fn verify_axioms(report: &mut Report, max_carrier: usize, expect: &Expect) -> CliResult<bool> {
    let ax = fstheory::verify_fs_axioms(max_carrier)?;
    for r in &ax.results {
        let mut cells = vec![
            format!("instances={}", r.instances),
            format!("failures={}", r.failures),
            format!("skipped={}", r.skipped),
        ];
        if let Some(why) = &r.first_failure {
            cells.push(format!("first_failure={why}"));
        }
        report.list(&format!("axiom.{}", r.name), cells);
    }
    let laws = substoch::verify_boolean_laws(max_carrier.min(3))?;
    for l in &laws.laws {
        report.list(
            &format!("law.{}", l.family),
            vec![format!("instances={}", l.instances), format!("failures={}", l.failures)],
        );
    }
    let ok = ax.all_passed() && laws.all_passed();
    let expect = Expect {
        expect: Some(expect.expect.clone().unwrap_or_else(|| "pass".into())),
    };
    check_expect(report, &expect, ok, ("pass", "fail"))
}

fn certificate(report: &mut Report, bundle: &nogo::VerdictBundle) -> CliResult<bool> {
    let c = &bundle.certificate;
    let cols = c.scenario.n_outcomes();
    report.text("scenario", scenario_label(&c.scenario));
    match &bundle.correlation.table {
        nogo::Table::Exact(p) => report.rows("table", p.chunks(cols).map(report::rationals).collect()),
        nogo::Table::Float(p) => report.rows("table", p.chunks(cols).map(|r| r.iter().map(|&x| report::float(x)).collect()).collect()),
    }
    if let Some(v) = bundle.chsh {
        report.text("chsh", report::float(v));
    }
    report.text("no_signalling", bundle.no_signalling);
    if let Some(d) = c.denominator {
        report.text("rationalized_denominator", d);
        report.rows("tested", c.tested.chunks(cols).map(report::rationals).collect());
    }
    match &c.verdict {
        Membership::Member { vertices, weights } => {
            report.text("membership", "Member");
            report.list("weights", report::rationals(weights));
            report.rows("vertices", vertices.iter().map(|v| report::rationals(v)).collect());
        }
        Membership::NonMember { coefficients, bound } => {
            report.text("membership", "NonMember");
            report.rows("facet", coefficients.chunks(cols).map(report::rationals).collect());
            report.text("facet_bound", rational::format(bound));
        }
    }
    let verified = c.verify()?;
    report.text("certificate_verified", verified);
    if !verified {
        return Err(Error::Invalid("certificate failed re-verification".into()).into());
    }
    Ok(c.is_member())
}

fn bell_check(
    report: &mut Report,
    scenario: &str,
    corr: &Option<PathBuf>,
    quantum: &Option<PathBuf>,
    expect: &Expect,
) -> CliResult<bool> {
    let s = parse_scenario(scenario).map_err(Failure::Usage)?;
    let bundle = match (corr, quantum) {
        (Some(p), None) => {
            let c: Correlation = at(p, format::parse_correlation(&read(p)?))?;
            if c.scenario != s {
                return Err(Failure::Engine {
                    path: Some(p.clone()),
                    err: Error::WrongScenario(format!(
                        "file holds {}, --scenario asks for {}",
                        scenario_label(&c.scenario),
                        scenario_label(&s)
                    )),
                });
            }
            nogo::bundle_for(c)?
        }
        (None, Some(m)) => {
            let model = match load_model(m)? {
                PredictionMap::Quantum(q) => q,
                PredictionMap::Classical(_) => {
                    return Err(Failure::Engine {
                        path: Some(m.clone()),
                        err: Error::ConfigError("--quantum needs a model with `backend: quantum`".into()),
                    })
                }
            };
            let setup = at(m, QuantumSetup::from_model(&model, &s))?;
            at(m, nogo::verdict_bundle(&setup, &s))?
        }
        _ => return Err(Failure::Usage("give exactly one of --corr and --quantum".into())),
    };
    let member = certificate(report, &bundle)?;
    check_expect(report, expect, member, ("member", "nonmember"))
}

fn simplex(report: &mut Report, path: &Path, lambda_max: usize, expect: &Expect) -> CliResult<bool> {
    let frag = at(path, format::parse_fragment(&read(path)?))?;
    report.text("dim", frag.dim);
    report.text("states", frag.states.len());
    report.text("effects", frag.effects.len());
    report.text("approximate", frag.approximate);
    let feasible = match at(path, embed::simplex_embed(&frag, lambda_max))? {
        EmbedResult::Feasible(e) => {
            report.text("result", "Feasible");
            report.text("lambda", e.lambda);
            report.rows("state_embedding", e.states.iter().map(|v| report::rationals(v)).collect());
            report.rows("effect_embedding", e.effects.iter().map(|v| report::rationals(v)).collect());
            report.list("unit_embedding", report::rationals(&e.unit));
            let ok = e.verify(&frag);
            report.text("pairings_verified", ok);
            if frag.approximate {
                report.text("max_pairing_error", report::float(e.max_pairing_error(&frag)));
            }
            true
        }
        EmbedResult::Infeasible { lambda_max, universal } => {
            report.text("result", "Infeasible");
            report.text("lambda_max", lambda_max);
            report.text("no_embedding_of_any_size", universal);
            false
        }
    };
    check_expect(report, expect, feasible, ("feasible", "infeasible"))
}

fn rep_check(
    report: &mut Report,
    rep_path: &Path,
    diagram: &Path,
    model: &Option<PathBuf>,
    pairs: &Option<PathBuf>,
    expect: &Expect,
) -> CliResult<bool> {
    let r = at(rep_path, format::parse_rep(&read(rep_path)?))?;
    let f = load_diagram(diagram)?;
    let d = op_only(diagram, &f)?;
    let image = at(diagram, fstheory::apply_representation(&r, &d))?;
    let s = at(diagram, fstheory::denote(&image))?;
    prediction(report, "image_denotation", &Prediction::Exact(s.clone()));
    let mut ok = true;
    let p = match model {
        Some(m) => Some(load_model(m)?),
        None => None,
    };
    if let Some(p) = &p {
        let pred = at(diagram, optheory::predict_closed(&d, p))?;
        let same = pred.approx_eq(&Prediction::Exact(s), 1e-9);
        report.text("reproduces_predictions", same);
        ok &= same;
    }
    if let Some(pp) = pairs {
        let p = p
            .as_ref()
            .ok_or_else(|| Failure::Usage("--leibniz-pairs needs --model".into()))?;
        let base = pp.parent().unwrap_or(Path::new("."));
        let mut loaded = Vec::new();
        for (a, b) in at(pp, format::parse_pairs(&read(pp)?))? {
            let (pa, pb) = (base.join(a), base.join(b));
            let (fa, fb) = (load_diagram(&pa)?, load_diagram(&pb)?);
            loaded.push((op_only(&pa, &fa)?, op_only(&pb, &fb)?));
        }
        report.text("pairs", loaded.len());
        let leib = at(pp, fstheory::is_leibnizian(&r, &loaded, p))?;
        report.text("leibnizian", leib);
        ok &= leib;
    }
    check_expect(report, expect, ok, ("pass", "fail"))
}

fn property_check(report: &mut Report, seed: u64, count: usize, expect: &Expect) -> CliResult<bool> {
    let mut rng = random::rng(seed);
    let mut nf_fail = 0;
    for _ in 0..count {
        let d = random::fs_diagram(&mut rng, 6, 3)?;
        let s = fstheory::denote(&d)?;
        let nf = fstheory::normal_form(&d)?;
        if fstheory::denote(&nf.to_diagram()?)? != s {
            nf_fail += 1;
        }
    }
    report.list("normal_form_agreement", vec![format!("instances={count}"), format!("failures={nf_fail}")]);
    let mut table_fail = 0;
    for _ in 0..count {
        let (d, p) = random::op_instance(&mut rng, false)?;
        let table = optheory::point_atomic_table(&d, &p)?;
        if optheory::reconstruct(&table)? != optheory::predict_closed(&d, &p)? {
            table_fail += 1;
        }
    }
    report.list("table_reconstruction", vec![format!("instances={count}"), format!("failures={table_fail}")]);
    let expect = Expect {
        expect: Some(expect.expect.clone().unwrap_or_else(|| "pass".into())),
    };
    check_expect(report, &expect, nf_fail + table_fail == 0, ("pass", "fail"))
}

fn dispatch(report: &mut Report, cmd: &Command) -> CliResult<bool> {
    match cmd {
        Command::Eval { diagram, model } => eval(report, diagram, model),
        Command::Equiv { a, b, model, expect } => equiv(report, a, b, model, expect),
        Command::NormalForm { diagram, output } => normal_form(report, diagram, output),
        Command::Qnf { diagram } => qnf(report, diagram),
        Command::VerifyAxioms { max_carrier, expect } => verify_axioms(report, *max_carrier, expect),
        Command::BellCheck {
            scenario,
            corr,
            quantum,
            expect,
        } => bell_check(report, scenario, corr, quantum, expect),
        Command::SimplexEmbed {
            fragment,
            lambda_max,
            expect,
        } => simplex(report, fragment, *lambda_max, expect),
        Command::RepCheck {
            rep,
            diagram,
            model,
            leibniz_pairs,
            expect,
        } => rep_check(report, rep, diagram, model, leibniz_pairs, expect),
        Command::PropertyCheck { seed, count, expect } => property_check(report, *seed, *count, expect),
    }
}

/// Runs one command. `args` excludes the program name.
pub fn run<S: AsRef<str>>(args: &[S]) -> Outcome {
    let args: Vec<String> = args.iter().map(|a| a.as_ref().to_string()).collect();
    let cli = match Cli::try_parse_from(std::iter::once("ci-engine".to_string()).chain(args.iter().cloned())) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            let help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            return if help {
                Outcome {
                    code: 0,
                    stdout: text,
                    stderr: String::new(),
                }
            } else {
                Outcome {
                    code: 2,
                    stdout: String::new(),
                    stderr: text,
                }
            };
        }
    };
    match cap_from_env(std::env::var("CI_ENGINE_CAP").ok().as_deref()) {
        Ok(Some(cap)) => types::set_cap(cap),
        Ok(None) => {}
        Err(msg) => {
            return Outcome {
                code: 2,
                stdout: String::new(),
                stderr: Failure::Usage(msg).render() + "\n",
            }
        }
    }
    let mut report = Report::new(&args);
    let start = Instant::now();
    let result = dispatch(&mut report, &cli.command);
    if !cli.no_timing {
        report.elapsed = Some(start.elapsed());
    }
    match result {
        Ok(as_expected) => Outcome {
            code: if as_expected { 0 } else { 1 },
            stdout: report.render(cli.format),
            stderr: String::new(),
        },
        Err(f) => Outcome {
            code: 2,
            stdout: String::new(),
            stderr: f.render() + "\n",
        },
    }
}
