#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hmegen::synth::hme_from_latex;
use hmegen::OnlineHme;
use proptest::prelude::*;

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

/// Fifty expressions covering every relation and the usual operator mix.
pub const EXPRESSIONS: [&str; 50] = [
    "x",
    "x^2",
    "x^2+2x+1",
    "a+b",
    "a-b=c",
    "\\frac{a}{b}",
    "\\frac{a+b}{2}",
    "\\frac{1}{x^2}",
    "\\sqrt{x}",
    "\\sqrt{a^2+b^2}",
    "x_{i}",
    "x_{i}^{2}",
    "a_{n+1}=a_{n}+d",
    "\\sum_{i=1}^{n} i",
    "\\sum_{k=0}^{n} x^k",
    "\\int_{0}^{1} x d x",
    "\\lim_{x \\rightarrow 0} y",
    "(a+b)^2",
    "(x+1)(x-1)",
    "|x|+|y|",
    "[a+b]",
    "\\{ a \\}",
    "y=m x+b",
    "e^{i \\pi}+1=0",
    "x \\leq y",
    "a \\geq b",
    "a \\neq b",
    "a \\times b",
    "a \\div b",
    "a \\pm b",
    "x<y",
    "x>y",
    "\\sin x+\\cos y",
    "\\alpha+\\beta=\\gamma",
    "\\theta^{2}",
    "2^{n}-1",
    "\\frac{\\frac{a}{b}}{c}",
    "\\sqrt{\\frac{a}{b}}",
    "\\log x",
    "f(x)=x^3",
    "a b c",
    "1+2+3+4",
    "x^{y^{z}}",
    "x_{i_{j}}",
    "\\frac{d y}{d x}",
    "3.14",
    "\\prod_{i=1}^{n} a_{i}",
    "\\sqrt{2} x",
    "a^{2}+b^{2}=c^{2}",
    "\\infty-1",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// CROHME-style InkML with a LaTeX truth string only: symbol groups carry
/// labels but no links, so alignment falls back to label order.
/// Coordinates are written with nine decimals.
pub fn crohme_latex_fixture(hme: &OnlineHme, truth: &str) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<ink xmlns=\"http://www.w3.org/2003/InkML\">\n");
    out.push_str("  <traceFormat>\n    <channel name=\"X\" type=\"decimal\"/>\n    <channel name=\"Y\" type=\"decimal\"/>\n  </traceFormat>\n");
    let _ = writeln!(
        out,
        "  <annotation type=\"truth\">${}$</annotation>",
        escape(truth)
    );
    out.push_str("  <annotation type=\"writer\">fixture</annotation>\n");
    for (i, stroke) in hme.strokes().iter().enumerate() {
        let pts: Vec<String> = stroke
            .points()
            .iter()
            .map(|p| format!("{:.9} {:.9}", p.x, p.y))
            .collect();
        let _ = writeln!(
            out,
            "  <trace id=\"{}\">{}</trace>",
            i + 100,
            pts.join(", ")
        );
    }
    out.push_str(
        "  <traceGroup xml:id=\"500\">\n    <annotation type=\"truth\">Segmentation</annotation>\n",
    );
    for (n, symbol) in hme.symbols().iter().enumerate() {
        let _ = writeln!(out, "    <traceGroup xml:id=\"{}\">", 501 + n);
        let _ = writeln!(
            out,
            "      <annotation type=\"truth\">{}</annotation>",
            escape(&symbol.label)
        );
        for s in &symbol.strokes {
            let _ = writeln!(out, "      <traceView traceDataRef=\"{}\"/>", s + 100);
        }
        out.push_str("    </traceGroup>\n");
    }
    out.push_str("  </traceGroup>\n</ink>\n");
    out
}

/// The fifty fixtures as `(name, inkml text)`.
pub fn fixtures() -> Vec<(String, String)> {
    EXPRESSIONS
        .iter()
        .enumerate()
        .map(|(i, src)| {
            let hme = hme_from_latex(src, 1000 + i as u64).expect("fixture expression");
            (format!("fixture{i:02}"), crohme_latex_fixture(&hme, src))
        })
        .collect()
}

/// Writes `count` fixture files (cycling through [`EXPRESSIONS`] with
/// different ink) into `dir`.
pub fn write_corpus(dir: &Path, count: usize) {
    std::fs::create_dir_all(dir).unwrap();
    for i in 0..count {
        let src = EXPRESSIONS[i % EXPRESSIONS.len()];
        let hme = hme_from_latex(src, i as u64).unwrap();
        std::fs::write(
            dir.join(format!("expr{i:03}.inkml")),
            crohme_latex_fixture(&hme, src),
        )
        .unwrap();
    }
}

fn leaf() -> impl Strategy<Value = String> {
    prop::sample::select(vec!["x", "y", "a", "b", "n", "1", "2", "3", "\\alpha", "."])
        .prop_map(str::to_string)
}

/// Random well-formed expressions over every relation.
pub fn expression() -> impl Strategy<Value = String> {
    let term = leaf().prop_recursive(3, 16, 3, |inner| {
        let chain = prop::collection::vec(
            (
                inner,
                prop::sample::select(vec!["+", "-", "=", "<", " ", "\\times"]),
            ),
            1..4,
        )
        .prop_map(|parts| {
            let mut s = String::new();
            for (i, (t, op)) in parts.iter().enumerate() {
                if i > 0 {
                    s.push_str(op);
                    s.push(' ');
                }
                s.push_str(t);
            }
            s
        });
        prop_oneof![
            (leaf(), chain.clone()).prop_map(|(b, e)| format!("{b}^{{{e}}}")),
            (leaf(), chain.clone()).prop_map(|(b, e)| format!("{b}_{{{e}}}")),
            (chain.clone(), chain.clone()).prop_map(|(a, b)| format!("\\frac{{{a}}}{{{b}}}")),
            chain.clone().prop_map(|e| format!("\\sqrt{{{e}}}")),
            chain.clone().prop_map(|e| format!("({e})")),
            (chain.clone(), chain.clone()).prop_map(|(a, b)| format!("\\sum_{{{a}}}^{{{b}}} x")),
            chain,
        ]
    });
    prop::collection::vec((term, prop::sample::select(vec!["+", "=", " ", "-"])), 1..5).prop_map(
        |parts| {
            let mut s = String::new();
            for (i, (t, op)) in parts.iter().enumerate() {
                if i > 0 {
                    s.push_str(op);
                    s.push(' ');
                }
                s.push_str(t);
            }
            s
        },
    )
}

/// A synthetic expression for a random source and ink seed.
pub fn expression_hme() -> impl Strategy<Value = OnlineHme> {
    (expression(), any::<u64>())
        .prop_map(|(src, seed)| hme_from_latex(&src, seed).expect("generated expression"))
}
