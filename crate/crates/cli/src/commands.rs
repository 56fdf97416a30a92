//! Command execution. Each command produces a [`Report`] and a CSV table;
//! the binary only handles argument parsing and file output.
//!
//! CSV columns by command:
//!
//! | command    | columns |
//! |------------|---------|
//! | `gamma`    | `x, y, word, value, error` |
//! | `distance` | `x, y, upper, lower, miss` |
//! | `ballvol`  | `x, r, estimate, ci_lo, ci_hi, hits, samples, seed` |
//! | others     | `name, status, residual, tolerance, seed` |
//!
//! Points inside a CSV cell are space separated.

use std::fmt::Write as _;
use std::str::FromStr;

use rockland::fields::MultiIndex;
use rockland::metric::{ControlMetric, DistanceConfig};
use serde_json::json;

use crate::dsl::{load_model, Model};
use crate::report::{Check, Report};
use crate::suites::{self, Settings};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Lift,
    Gamma,
    Verify,
    Distance,
    Ballvol,
    Heat,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Lift => "lift",
            Command::Gamma => "gamma",
            Command::Verify => "verify",
            Command::Distance => "distance",
            Command::Ballvol => "ballvol",
            Command::Heat => "heat",
            Command::Report => "report",
        }
    }
}

/// Check groups selectable by `verify`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Lifting,
    Saturable,
    Fundsol,
    Derivative,
    Estimate,
    Metric,
    Heat,
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "lifting" => Suite::Lifting,
            "saturable" => Suite::Saturable,
            "fundsol" => Suite::Fundsol,
            "derivative" => Suite::Derivative,
            "estimate" => Suite::Estimate,
            "metric" => Suite::Metric,
            "heat" => Suite::Heat,
            other => return Err(format!("unknown suite `{other}`")),
        })
    }
}

/// Parsed command-line options. `None` means the documented default.
#[derive(Clone, Debug, Default)]
pub struct Flags {
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    /// Point lists: `"x"` or `"x;y"`, coordinates comma separated.
    pub at: Vec<String>,
    pub radius: Vec<f64>,
    pub sign: Option<i32>,
    pub word: Option<String>,
    pub suites: Vec<Suite>,
}

pub const DEFAULT_SIGN: i32 = 1;

impl Flags {
    /// Settings with `--tol` applied to the procedure the command runs.
    pub fn settings(&self, cmd: Command) -> Settings {
        let mut s = Settings::default();
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(n) = self.samples {
            s.samples = n;
        }
        if let Some(t) = self.tol {
            match cmd {
                Command::Distance | Command::Ballvol => s.distance_tol = t,
                _ => s.gamma_tol = t,
            }
        }
        s
    }
}

pub struct Outcome {
    pub report: Report,
    pub csv: String,
}

impl Outcome {
    pub fn success(&self) -> bool {
        self.report.all_passed()
    }
}

/// Parse `"1,2;0,0"` into points of dimension `n`.
pub fn parse_points(spec: &str, n: usize) -> anyhow::Result<Vec<Vec<f64>>> {
    spec.split(';')
        .map(|p| {
            let v: Vec<f64> = p
                .split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|e| anyhow::anyhow!("bad coordinate `{}`: {e}", c.trim())))
                .collect::<anyhow::Result<_>>()?;
            anyhow::ensure!(v.len() == n, "point `{p}` has {} coordinates, the model has {n}", v.len());
            anyhow::ensure!(v.iter().all(|c| c.is_finite()), "point `{p}` is not finite");
            Ok(v)
        })
        .collect()
}

fn pairs(flags: &Flags, n: usize) -> anyhow::Result<Option<Vec<(Vec<f64>, Vec<f64>)>>> {
    if flags.at.is_empty() {
        return Ok(None);
    }
    flags
        .at
        .iter()
        .map(|s| {
            let pts = parse_points(s, n)?;
            anyhow::ensure!(pts.len() == 2, "`--at {s}` needs two points `x;y`");
            Ok((pts[0].clone(), pts[1].clone()))
        })
        .collect::<anyhow::Result<Vec<_>>>()
        .map(Some)
}

fn fmt_point(p: &[f64]) -> String {
    p.iter().map(|c| format!("{c}")).collect::<Vec<_>>().join(" ")
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn checks_csv(checks: &[Check]) -> String {
    let mut out = String::from("name,status,residual,tolerance,seed\n");
    for c in checks {
        let status = if c.passed() { "pass" } else { "fail" };
        let seed = c.seed.map(|s| s.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{status},{},{:e},{seed}", c.name, opt(c.residual), c.tolerance);
    }
    out
}

fn record_flags(report: &mut Report, flags: &Flags, settings: &Settings, cmd: Command) {
    let f = &mut report.flags;
    f.insert("seed".into(), json!(settings.seed));
    f.insert("samples".into(), json!(settings.samples));
    f.insert("gamma_tol".into(), json!(settings.gamma_tol));
    f.insert("calibration_tol".into(), json!(settings.calibration_tol));
    f.insert("distance_tol".into(), json!(settings.distance_tol));
    f.insert("tol".into(), json!(flags.tol));
    if matches!(cmd, Command::Heat | Command::Report) {
        f.insert("sign".into(), json!(flags.sign.unwrap_or(DEFAULT_SIGN)));
    }
    if !flags.at.is_empty() {
        f.insert("at".into(), json!(flags.at));
    }
    if !flags.radius.is_empty() {
        f.insert("radius".into(), json!(flags.radius));
    }
    if let Some(w) = &flags.word {
        f.insert("word".into(), json!(w));
    }
}

/// Parse a word of field names such as `"X1,X2"` into indices.
fn parse_word(model: &Model, word: &str) -> anyhow::Result<Vec<usize>> {
    let names = model.system.names();
    word.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|w| {
            names
                .iter()
                .position(|n| n == w)
                .ok_or_else(|| anyhow::anyhow!("unknown field `{w}` in --word"))
        })
        .collect()
}

/// Load the model text and run one command.
pub fn run_command(cmd: Command, model_text: &str, flags: &Flags) -> anyhow::Result<Outcome> {
    let model = load_model(model_text)?;
    let settings = flags.settings(cmd);
    let mut report = Report::new(cmd.name());
    report.model = Some(model.spec.to_string());
    record_flags(&mut report, flags, &settings, cmd);
    let analysis = suites::analyze(&model)?;
    report.dimensions = Some(serde_json::to_value(&analysis)?);
    let n = model.system.dim();
    let mut csv = None;

    match cmd {
        Command::Analyze => {
            report.checks.push(Check::boolean(
                "analyze/hormander_rank",
                analysis.rank_table.iter().all(|r| r.rank == n),
                None,
            ));
        }
        Command::Lift => {
            let (lifted, checks) = suites::lifting_checks(&model, settings.seed)?;
            report.checks = checks;
            let show = |ps: &[rockland::exactpoly::Polynomial]| ps.iter().map(|p| p.to_string()).collect::<Vec<_>>();
            report.data = json!({
                "exponents": lifted.exponents(),
                "big_q": lifted.big_q(),
                "law": show(lifted.law().mult_polys()),
                "inverse": show(lifted.law().inverse_polys()),
                "lifted_fields": lifted.lifted_fields().iter().map(|f| f.to_string()).collect::<Vec<_>>(),
                "residuals": (0..lifted.base_fields().len()).map(|i| lifted.residual(i).to_string()).collect::<Vec<_>>(),
            });
        }
        Command::Gamma => {
            let (ev, cal) = suites::evaluator(&model, None, &settings)?;
            let word = match &flags.word {
                Some(w) => parse_word(&model, w)?,
                None => Vec::new(),
            };
            let pts = match pairs(flags, n)? {
                Some(p) => p,
                None => suites::sample_pairs(n, 3, settings.seed),
            };
            let mut table = String::from("x,y,word,value,error\n");
            let mut rows = Vec::new();
            for (x, y) in &pts {
                let g = if word.is_empty() {
                    ev.gamma_eval(x, y)?
                } else {
                    ev.gamma_x_derivative(&MultiIndex(word.clone()), x, y)?
                };
                let w = crate::dsl::render_word(&word, model.system.names());
                let _ = writeln!(table, "{},{},{w},{:e},{:e}", fmt_point(x), fmt_point(y), g.value, g.error);
                rows.push(json!({ "x": x, "y": y, "word": w, "value": g }));
            }
            report.data = json!({ "calibration": cal, "values": rows });
            csv = Some(table);
        }
        Command::Verify => {
            let selected = if flags.suites.is_empty() {
                vec![Suite::Fundsol, Suite::Derivative]
            } else {
                flags.suites.clone()
            };
            let data = run_suites(&model, &settings, flags, &selected, &mut report.checks)?;
            report.data = data;
        }
        Command::Distance => {
            let metric = ControlMetric::new(
                &model.system,
                DistanceConfig {
                    tol: settings.distance_tol,
                    seed: settings.seed,
                    ..Default::default()
                },
            )?;
            let pts = match pairs(flags, n)? {
                Some(p) => p,
                None => {
                    let mut e1 = vec![0.0; n];
                    e1[0] = 1.0;
                    vec![(vec![0.0; n], e1)]
                }
            };
            let mut table = String::from("x,y,upper,lower,miss\n");
            let mut rows = Vec::new();
            for (x, y) in &pts {
                let d = metric.distance(x, y)?;
                let _ = writeln!(table, "{},{},{:e},{:e},{:e}", fmt_point(x), fmt_point(y), d.upper, d.lower, d.miss);
                rows.push(json!({ "x": x, "y": y, "result": d }));
            }
            report.data = json!({ "distances": rows });
            csv = Some(table);
        }
        Command::Ballvol => {
            let metric = ControlMetric::new(
                &model.system,
                DistanceConfig {
                    tol: settings.distance_tol,
                    seed: settings.seed,
                    ..Default::default()
                },
            )?;
            let centers = if flags.at.is_empty() {
                vec![vec![0.0; n]]
            } else {
                flags
                    .at
                    .iter()
                    .map(|s| parse_points(s, n))
                    .collect::<anyhow::Result<Vec<_>>>()?
                    .concat()
            };
            let radii = if flags.radius.is_empty() { vec![1.0] } else { flags.radius.clone() };
            let mut table = String::from("x,r,estimate,ci_lo,ci_hi,hits,samples,seed\n");
            let mut rows = Vec::new();
            for x in &centers {
                for r in &radii {
                    anyhow::ensure!(*r > 0.0 && r.is_finite(), "radius must be positive, got {r}");
                    let v = metric.ball_volume(x, *r, settings.samples, settings.seed)?;
                    let _ = writeln!(
                        table,
                        "{},{r},{:e},{:e},{:e},{},{},{}",
                        fmt_point(x),
                        v.estimate,
                        v.confidence_interval.0,
                        v.confidence_interval.1,
                        v.hits,
                        v.samples,
                        v.seed
                    );
                    rows.push(json!({ "x": x, "r": r, "result": v }));
                }
            }
            report.data = json!({ "volumes": rows });
            csv = Some(table);
        }
        Command::Heat => {
            let (checks, data) = suites::heat_checks(&model, flags.sign.unwrap_or(DEFAULT_SIGN))?;
            report.checks = checks;
            report.data = data;
        }
        Command::Report => {
            let mut selected = vec![Suite::Lifting, Suite::Metric];
            if model.operator.is_some() {
                selected.extend([Suite::Saturable, Suite::Heat]);
                let q = model.system.homogeneous_dimension();
                if model.operator.as_ref().is_some_and(|o| o.degree() < q) {
                    selected.extend([Suite::Fundsol, Suite::Derivative, Suite::Estimate]);
                }
            }
            report.checks.push(Check::boolean(
                "analyze/hormander_rank",
                analysis.rank_table.iter().all(|r| r.rank == n),
                None,
            ));
            report.data = run_suites(&model, &settings, flags, &selected, &mut report.checks)?;
        }
    }
    let csv = csv.unwrap_or_else(|| checks_csv(&report.checks));
    Ok(Outcome { report, csv })
}

fn run_suites(model: &Model, settings: &Settings, flags: &Flags, selected: &[Suite], checks: &mut Vec<Check>) -> anyhow::Result<serde_json::Value> {
    let mut data = serde_json::Map::new();
    let mut lifted = None;
    if selected.contains(&Suite::Lifting) || selected.contains(&Suite::Saturable) {
        let (l, c) = suites::lifting_checks(model, settings.seed)?;
        if selected.contains(&Suite::Lifting) {
            checks.extend(c);
        }
        lifted = Some(l);
    }
    if selected.contains(&Suite::Saturable) {
        checks.extend(suites::saturable_checks(model, lifted.as_ref().expect("built above"))?);
    }
    let needs_gamma = [Suite::Fundsol, Suite::Derivative, Suite::Estimate].iter().any(|s| selected.contains(s));
    if needs_gamma {
        let (ev, cal) = suites::evaluator(model, lifted.take(), settings)?;
        data.insert("calibration".into(), serde_json::to_value(&cal)?);
        if selected.contains(&Suite::Fundsol) {
            checks.extend(suites::fundsol_checks(model, &ev, settings)?);
        }
        if selected.contains(&Suite::Derivative) {
            checks.extend(suites::derivative_checks(&ev, settings)?);
        }
        if selected.contains(&Suite::Estimate) {
            let (c, d) = suites::estimate_checks(model, &ev, settings)?;
            checks.extend(c);
            data.insert("estimate".into(), d);
        }
    }
    if selected.contains(&Suite::Metric) {
        let (c, d) = suites::metric_checks(model, settings)?;
        checks.extend(c);
        data.insert("metric".into(), serde_json::to_value(&d)?);
    }
    if selected.contains(&Suite::Heat) {
        let (c, d) = suites::heat_checks(model, flags.sign.unwrap_or(DEFAULT_SIGN))?;
        checks.extend(c);
        data.insert("heat".into(), d);
    }
    Ok(serde_json::Value::Object(data))
}
