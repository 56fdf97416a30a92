use std::panic::{catch_unwind, AssertUnwindSafe};

use proptest::prelude::*;
use proptest::strategy::ValueTree;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rockland_cli::dsl::{load_model, parse_model};

/// Terms `x^α ∂_i` with `σ·α < σ_i`, exponents at most 2, and their degree.
fn candidate_terms(sigma: &[u32]) -> Vec<(usize, Vec<u32>, u32)> {
    let n = sigma.len();
    let mut out = Vec::new();
    for i in 0..n {
        for code in 0..3usize.pow(n as u32) {
            let alpha: Vec<u32> = (0..n).map(|j| ((code / 3usize.pow(j as u32)) % 3) as u32).collect();
            let w: u32 = alpha.iter().zip(sigma).map(|(a, s)| a * s).sum();
            if w < sigma[i] {
                out.push((i, alpha, sigma[i] - w));
            }
        }
    }
    out
}

fn render_term(neg: bool, num: u32, den: u32, alpha: &[u32], i: usize, first: bool) -> String {
    let mut s = String::new();
    match (first, neg) {
        (true, true) => s.push('-'),
        (true, false) => {}
        (false, true) => s.push_str(" - "),
        (false, false) => s.push_str(" + "),
    }
    s.push_str(&num.to_string());
    if den != 1 {
        s.push_str(&format!("/{den}"));
    }
    for (j, a) in alpha.iter().enumerate() {
        match a {
            0 => {}
            1 => s.push_str(&format!("*x{}", j + 1)),
            _ => s.push_str(&format!("*x{}^{a}", j + 1)),
        }
    }
    s.push_str(&format!("*d{}", i + 1));
    s
}

type TermPick = (usize, bool, u32, u32);

/// Model text from raw choices; fields keep only terms matching the degree
/// of their first term, operators only words matching the first weight.
fn model_text(steps: Vec<u32>, fields: Vec<Vec<TermPick>>, words: Vec<(Vec<usize>, i32)>, kernel: bool) -> String {
    let mut sigma = vec![1u32];
    for s in steps {
        let last = *sigma.last().unwrap();
        sigma.push(last + s);
    }
    let cands = candidate_terms(&sigma);
    let mut text = format!("dilation [{}];\n", sigma.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", "));
    let mut degrees = Vec::new();
    for (k, picks) in fields.iter().enumerate() {
        let (i0, ..) = picks[0];
        let deg = cands[i0 % cands.len()].2;
        let mut body = String::new();
        let mut used = Vec::new();
        for (idx, neg, num, den) in picks {
            let (i, alpha, d) = &cands[idx % cands.len()];
            if *d != deg || used.contains(&(idx % cands.len())) {
                continue;
            }
            used.push(idx % cands.len());
            body.push_str(&render_term(*neg, *num, *den, alpha, *i, body.is_empty()));
        }
        text.push_str(&format!("field Y{} = {body};\n", k + 1));
        degrees.push(deg);
    }
    let weight = |w: &[usize]| w.iter().map(|f| degrees[f % degrees.len()]).sum::<u32>();
    if let Some((w0, _)) = words.first() {
        let target = weight(w0);
        let mut terms = Vec::new();
        for (w, c) in &words {
            if weight(w) != target {
                continue;
            }
            let word = w.iter().map(|f| format!("Y{}", f % degrees.len() + 1)).collect::<Vec<_>>().join("*");
            terms.push(format!("{c}*{word}"));
        }
        text.push_str(&format!("operator L = {};\n", terms.join(" + ")));
    }
    if kernel {
        text.push_str("kernel heisenberg_gauge;\n");
    }
    text
}

fn model_strategy() -> impl Strategy<Value = String> {
    let pick = (0usize..64, any::<bool>(), 1u32..6, 1u32..4);
    (
        prop::collection::vec(0u32..3, 0..3),
        prop::collection::vec(prop::collection::vec(pick, 1..4), 1..4),
        prop::collection::vec((prop::collection::vec(0usize..4, 1..4), 1i32..5), 0..4),
        any::<bool>(),
    )
        .prop_map(|(steps, fields, words, kernel)| model_text(steps, fields, words, kernel))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn parse_print_parse_is_a_fixpoint(text in model_strategy()) {
        let spec = match parse_model(&text) {
            Ok(s) => s,
            Err(e) => {
                // Generated models can still be rejected for a reason such as
                // a zero operator; the error must then be located.
                prop_assert!(e.line >= 1 && e.col >= 1);
                return Ok(());
            }
        };
        let canonical = spec.to_string();
        let again = parse_model(&canonical).map_err(|e| TestCaseError::fail(format!("{e}\n{canonical}")))?;
        prop_assert_eq!(&again, &spec);
        prop_assert_eq!(again.to_string(), canonical);
    }
}

#[test]
fn generated_models_mostly_parse() {
    let runner = model_strategy();
    let mut tr = proptest::test_runner::TestRunner::deterministic();
    let mut ok = 0;
    for _ in 0..200 {
        let text = runner.new_tree(&mut tr).unwrap().current();
        if parse_model(&text).is_ok() {
            ok += 1;
        }
    }
    assert!(ok >= 150, "only {ok} of 200 generated models parsed");
}

const CORPUS: &[&str] = &[
    include_str!("../../../models/grushin.rock"),
    include_str!("../../../models/grushin_quartic.rock"),
    include_str!("../../../models/chain_r5_quartic.rock"),
    include_str!("../../../models/square_chain_k1.rock"),
    include_str!("../../../models/power_plane_quartic_k3.rock"),
    "dilation [1,2]; field X1 = d1; field X2 = x1*d2; operator L = (X1 + X2)^2 - X1*X2;",
];

const TOKENS: &[&str] = &[
    "x1", "x9", "d2", "d0", "^", "^(1/2)", "(", ")", "*", "+", "-", "/", ";", "=", "[", "]", ",", "field", "operator",
    "dilation", "kernel", "X1", "X3", "L", "0", "7", "999999999999999999999", "#", "\n", " ", "é", "\u{0}",
];

fn mutate(src: &str, rng: &mut ChaCha8Rng) -> String {
    let mut chars: Vec<char> = src.chars().collect();
    for _ in 0..rng.gen_range(1..5) {
        match rng.gen_range(0..4) {
            0 if !chars.is_empty() => {
                let a = rng.gen_range(0..chars.len());
                let b = (a + rng.gen_range(1..6)).min(chars.len());
                chars.drain(a..b);
            }
            1 => {
                let at = rng.gen_range(0..=chars.len());
                let tok = TOKENS[rng.gen_range(0..TOKENS.len())];
                chars.splice(at..at, tok.chars());
            }
            2 if chars.len() > 1 => {
                let a = rng.gen_range(0..chars.len());
                let b = rng.gen_range(0..chars.len());
                chars.swap(a, b);
            }
            _ => {
                let a = rng.gen_range(0..chars.len().max(1));
                let b = (a + rng.gen_range(1..12)).min(chars.len());
                let copy: Vec<char> = chars.get(a..b).map(|s| s.to_vec()).unwrap_or_default();
                let at = rng.gen_range(0..=chars.len());
                chars.splice(at..at, copy);
            }
        }
    }
    chars.into_iter().collect()
}

#[test]
fn mutated_inputs_never_panic_and_errors_are_located() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut rejected = 0;
    for k in 0..10_000 {
        let text = mutate(CORPUS[k % CORPUS.len()], &mut rng);
        let lines = text.split('\n').count();
        let outcome = catch_unwind(AssertUnwindSafe(|| load_model(&text)));
        match outcome {
            Err(_) => panic!("panic on input {k}:\n{text}"),
            Ok(Err(e)) => {
                rejected += 1;
                assert!(e.line >= 1 && e.line <= lines + 1, "input {k}: {e}\n{text}");
                assert!(e.col >= 1, "input {k}: {e}");
                assert!(e.excerpt.contains('^'), "input {k}: {e}");
            }
            Ok(Ok(m)) => {
                let again = parse_model(&m.spec.to_string()).unwrap();
                assert_eq!(again, m.spec);
            }
        }
    }
    assert!(rejected > 1000);
}
