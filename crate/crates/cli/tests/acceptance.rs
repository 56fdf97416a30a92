//! The nine acceptance criteria. Each prints one `PASS`/`FAIL` line; the
//! test fails if any criterion fails.

use std::path::PathBuf;
use std::time::Instant;

use rockland::exactpoly::{int, Polynomial};
use rockland::fields::{operator_transpose, MultiIndex, OperatorSpec, PolyVectorField};
use rockland::Error;
use rockland_cli::dsl::{load_model, Model};
use rockland_cli::report::Check;
use rockland_cli::suites::{self, Settings};

fn model(name: &str) -> Model {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../models").join(format!("{name}.rock"));
    load_model(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn text_model(text: &str) -> Model {
    load_model(text).unwrap()
}

struct Criterion {
    id: usize,
    title: &'static str,
    failures: Vec<String>,
}

impl Criterion {
    fn new(id: usize, title: &'static str) -> Self {
        Criterion {
            id,
            title,
            failures: Vec::new(),
        }
    }

    fn expect(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn checks(&mut self, checks: &[Check]) {
        for c in checks {
            self.expect(c.passed(), format!("{} residual {:?} > {:e}", c.name, c.residual, c.tolerance));
        }
    }

    fn finish(self, started: Instant, out: &mut Vec<bool>) {
        let ok = self.failures.is_empty();
        println!(
            "criterion {} [{}] {}: {:.1}s{}",
            self.id,
            if ok { "PASS" } else { "FAIL" },
            self.title,
            started.elapsed().as_secs_f64(),
            if ok { String::new() } else { format!(" ({})", self.failures.join("; ")) }
        );
        out.push(ok);
    }
}

fn dimensional_facts(c: &mut Criterion) {
    let a = suites::analyze(&model("grushin")).unwrap();
    c.expect(a.degrees == [1, 1], "grushin degrees");
    c.expect((a.q, a.big_n, a.p, a.big_q, a.step) == (3, 3, 1, 4, 2), format!("grushin dims {a:?}"));

    for k in 1..=3u32 {
        for h in 1..=3u32 {
            let m = text_model(&format!("dilation [1, {}]; field X1 = d1; field X2 = x1^{k}*d2;", k + h));
            let a = suites::analyze(&m).unwrap();
            c.expect(a.degrees == [1, h], format!("(k, h) = ({k}, {h}) degrees {:?}", a.degrees));
            c.expect(a.q == k + h + 1, format!("(k, h) = ({k}, {h}) q = {}", a.q));
        }
    }

    let a = suites::analyze(&model("chain_r5")).unwrap();
    c.expect((a.q, a.big_n, a.step) == (15, 6, 5), format!("R^5 chain {a:?}"));

    for k in 1..=4u32 {
        let m = text_model(&format!("dilation [1, {}]; field X1 = d1; field X2 = x1^{k}*d2; operator L = X1^4 + X2^4;", k + 1));
        let q = suites::analyze(&m).unwrap().q;
        c.expect(q == k + 2, format!("k = {k}: q = {q}"));
        let admitted = suites::existence_gate(&m).is_ok();
        c.expect(admitted == (k > 2), format!("k = {k}: gate admitted = {admitted}"));
    }
}

#[test]
fn acceptance() {
    let settings = Settings::default();
    let mut results = Vec::new();

    let t = Instant::now();
    let mut c = Criterion::new(1, "dimensional facts of the shipped examples");
    dimensional_facts(&mut c);
    c.finish(t, &mut results);

    let t = Instant::now();
    let mut c = Criterion::new(2, "lifting structural suite");
    let (grushin_lift, checks) = suites::lifting_checks(&model("grushin"), settings.seed).unwrap();
    c.checks(&checks);
    let (_, checks) = suites::lifting_checks(&model("square_chain_k1"), settings.seed).unwrap();
    c.checks(&checks);
    c.expect(t.elapsed().as_secs_f64() < 30.0, "slower than 30 s");
    c.finish(t, &mut results);

    let t = Instant::now();
    let mut c = Criterion::new(3, "saturable lifting");
    for name in ["grushin", "grushin_quartic"] {
        c.checks(&suites::saturable_checks(&model(name), &grushin_lift).unwrap());
    }
    c.finish(t, &mut results);

    let grushin = model("grushin");
    let t = Instant::now();
    let mut c = Criterion::new(4, "fundamental-solution identities for the Grushin sublaplacian");
    let (ev, _) = suites::evaluator(&grushin, Some(grushin_lift), &settings).unwrap();
    c.checks(&suites::fundsol_checks(&grushin, &ev, &settings).unwrap());
    c.finish(t, &mut results);

    let t = Instant::now();
    let mut c = Criterion::new(5, "derivative formulas");
    c.checks(&suites::derivative_checks(&ev, &settings).unwrap());
    c.finish(t, &mut results);

    let t = Instant::now();
    let mut c = Criterion::new(6, "control metric suite");
    let (checks, _) = suites::metric_checks(&grushin, &settings).unwrap();
    c.expect(checks.iter().any(|k| k.name == "metric/unit_distance"), "unit distance not checked");
    c.checks(&checks);
    c.finish(t, &mut results);

    let t = Instant::now();
    let mut c = Criterion::new(7, "pointwise estimate harness");
    let (checks, _) = suites::estimate_checks(&grushin, &ev, &settings).unwrap();
    c.expect(checks.len() == 2, "both orders must be scanned");
    c.checks(&checks);
    c.finish(t, &mut results);

    let t = Instant::now();
    let mut c = Criterion::new(8, "heat extension");
    c.checks(&suites::heat_checks(&model("grushin_quartic"), 1).unwrap().0);
    c.finish(t, &mut results);

    let t = Instant::now();
    let mut c = Criterion::new(9, "negative gates");
    for k in [1, 2] {
        let m = model(&format!("power_plane_quartic_k{k}"));
        match suites::evaluator(&m, None, &settings) {
            Err(e @ Error::ExistenceHypothesis { .. }) => c.expect(e.to_string().contains("nu < q"), "hypothesis not named"),
            other => c.expect(false, format!("k = {k}: expected refusal, got {:?}", other.map(|_| ()))),
        }
    }
    let radial = PolyVectorField::new(vec![Polynomial::var(2, 0), Polynomial::zero(2)]).unwrap();
    let sq = OperatorSpec::new([(int(1), MultiIndex(vec![0, 0]))], &[1]).unwrap();
    c.expect(
        matches!(operator_transpose(&sq, &[radial], &[1]), Err(Error::NonzeroDivergence { .. })),
        "transpose accepted a field with divergence",
    );
    c.finish(t, &mut results);

    let passed = results.iter().filter(|p| **p).count();
    println!("{passed}/{} criteria pass", results.len());
    assert_eq!(passed, results.len());
}
