//! Canonical LaTeX token streams.
//!
//! Ground truth is kept as a space-separated token stream such as
//! `x ^ { 2 } + 2 x + 1`. Symbol labels are normalized through a fixed alias
//! table so that traceGroup labels, MathML text and LaTeX commands agree
//! (`\lt`, `<` and `&lt;` all become `<`).
//!
//! Emission rules, per node:
//!
//! | node shape                              | output                        |
//! |-----------------------------------------|-------------------------------|
//! | fraction bar with `Over` and `Under`    | `\frac { over } { under }`    |
//! | `\sqrt` with `Inside`                   | `\sqrt { inside }`            |
//! | big operator with `Under`/`Over`        | `op _ { under } ^ { over }`   |
//! | `Subscript` / `Superscript`             | `_ { .. }` then `^ { .. }`    |
//! | `Right`                                 | concatenation                 |

use std::collections::BTreeMap;

use crate::srt::{Relation, SrtNode, SymbolRelationTree};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum LatexError {
    #[error("empty expression")]
    Empty,
    #[error("unbalanced braces at token {0}")]
    Unbalanced(usize),
    #[error("`{0}` expects an argument at token {1}")]
    MissingArgument(String, usize),
    #[error("script without a base at token {0}")]
    ScriptWithoutBase(usize),
    #[error("double {relation} on `{base}`")]
    DoubleScript { base: String, relation: Relation },
    #[error("unsupported construct `{0}`")]
    Unsupported(String),
    #[error("node `{node}`: {reason}")]
    Structure { node: String, reason: String },
}

/// Fraction bars are written as a plain horizontal stroke in CROHME data.
pub const FRACTION_BAR: &str = "-";
pub const SQRT: &str = "\\sqrt";

/// Operators whose scripts are stacked limits (`Under` / `Over`).
const LIMIT_OPERATORS: &[&str] = &["\\sum", "\\prod", "\\lim", "\\bigcup", "\\bigcap"];
/// Operators that may carry `Under` / `Over` children.
const BIG_OPERATORS: &[&str] = &["\\sum", "\\prod", "\\lim", "\\bigcup", "\\bigcap", "\\int"];

const ALIASES: &[(&str, &str)] = &[
    ("\\lt", "<"),
    ("&lt;", "<"),
    ("\\gt", ">"),
    ("&gt;", ">"),
    ("COMMA", ","),
    ("\\lbrace", "\\{"),
    ("\\rbrace", "\\}"),
    ("{", "\\{"),
    ("}", "\\}"),
    ("\u{2212}", "-"),
    ("\u{2013}", "-"),
    ("\u{00d7}", "\\times"),
    ("\u{00f7}", "\\div"),
    ("\u{00b1}", "\\pm"),
    ("\u{2260}", "\\neq"),
    ("\\ne", "\\neq"),
    ("\u{2264}", "\\leq"),
    ("\\le", "\\leq"),
    ("\u{2265}", "\\geq"),
    ("\\ge", "\\geq"),
    ("\u{2192}", "\\rightarrow"),
    ("\\to", "\\rightarrow"),
    ("\u{2211}", "\\sum"),
    ("\u{222b}", "\\int"),
    ("\u{220f}", "\\prod"),
    ("\u{221a}", "\\sqrt"),
    ("\u{221e}", "\\infty"),
    ("\u{2026}", "\\ldots"),
    ("\\dots", "\\ldots"),
    ("\u{22ef}", "\\cdots"),
    ("\u{00b7}", "\\cdot"),
    ("\u{22c5}", "\\cdot"),
    ("\u{2032}", "\\prime"),
    ("'", "\\prime"),
    ("\u{2203}", "\\exists"),
    ("\u{2200}", "\\forall"),
    ("\u{2208}", "\\in"),
    ("\u{03b1}", "\\alpha"),
    ("\u{03b2}", "\\beta"),
    ("\u{03b3}", "\\gamma"),
    ("\u{03b8}", "\\theta"),
    ("\u{03bb}", "\\lambda"),
    ("\u{03bc}", "\\mu"),
    ("\u{03c0}", "\\pi"),
    ("\u{03c3}", "\\sigma"),
    ("\u{03c6}", "\\phi"),
    ("\u{0394}", "\\Delta"),
    ("sin", "\\sin"),
    ("cos", "\\cos"),
    ("tan", "\\tan"),
    ("log", "\\log"),
    ("lim", "\\lim"),
];

/// Commands that only change rendering and carry no ink.
const INVISIBLE: &[&str] = &[
    "\\left",
    "\\right",
    "\\,",
    "\\;",
    "\\:",
    "\\!",
    "\\ ",
    "\\quad",
    "\\qquad",
    "\\displaystyle",
    "\\limits",
];

/// Commands whose braced argument is spliced inline.
const FONT_COMMANDS: &[&str] = &["\\mathrm", "\\mbox", "\\text", "\\operatorname", "\\mathit"];

/// Maps a symbol label, MathML text or LaTeX command to its canonical token.
pub fn canonical_token(raw: &str) -> String {
    let raw = raw.trim();
    ALIASES
        .iter()
        .find(|(alias, _)| *alias == raw)
        .map_or_else(|| raw.to_string(), |(_, canon)| (*canon).to_string())
}

pub fn is_binary_operator(token: &str) -> bool {
    matches!(
        token,
        "+" | "-"
            | "\\pm"
            | "\\times"
            | "\\div"
            | "="
            | "\\neq"
            | "<"
            | ">"
            | "\\leq"
            | "\\geq"
            | "\\rightarrow"
    )
}

pub fn is_open_bracket(token: &str) -> bool {
    matches!(token, "(" | "[" | "\\{")
}

pub fn is_close_bracket(token: &str) -> bool {
    matches!(token, ")" | "]" | "\\}")
}

pub fn is_big_operator(token: &str) -> bool {
    BIG_OPERATORS.contains(&token)
}

/// Tree shape shared by [`SrtNode`] and [`LayoutNode`] so both can be
/// emitted by the same code.
pub trait TreeView {
    fn label(&self) -> &str;
    fn child(&self, relation: Relation) -> Option<&Self>;
    fn name(&self) -> String;
}

impl TreeView for SrtNode {
    fn label(&self) -> &str {
        SrtNode::label(self)
    }

    fn child(&self, relation: Relation) -> Option<&Self> {
        SrtNode::child(self, relation)
    }

    fn name(&self) -> String {
        self.symbol().to_string()
    }
}

/// A relation tree whose nodes are not yet tied to segmented symbols.
/// `xref` carries the MathML `xml:id` when one was present.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutNode {
    pub label: String,
    pub xref: Option<String>,
    pub children: BTreeMap<Relation, LayoutNode>,
}

impl LayoutNode {
    pub fn leaf(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            xref: None,
            children: BTreeMap::new(),
        }
    }

    pub fn with(mut self, relation: Relation, child: LayoutNode) -> Self {
        self.children.insert(relation, child);
        self
    }

    pub fn walk<'a>(&'a self, out: &mut Vec<&'a LayoutNode>) {
        out.push(self);
        for c in self.children.values() {
            c.walk(out);
        }
    }

    pub fn len(&self) -> usize {
        1 + self.children.values().map(LayoutNode::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl TreeView for LayoutNode {
    fn label(&self) -> &str {
        &self.label
    }

    fn child(&self, relation: Relation) -> Option<&Self> {
        self.children.get(&relation)
    }

    fn name(&self) -> String {
        self.xref.clone().unwrap_or_else(|| self.label.clone())
    }
}

/// Links a row of layout nodes with `Right` edges.
pub fn chain_layout(row: Vec<LayoutNode>) -> Option<LayoutNode> {
    let mut iter = row.into_iter().rev();
    let mut acc = iter.next()?;
    for mut node in iter {
        node.children.insert(Relation::Right, acc);
        acc = node;
    }
    Some(acc)
}

/// Canonical token stream for a relation tree.
pub fn latex_of(srt: &SymbolRelationTree) -> Result<String, LatexError> {
    emit(srt.root())
}

/// Canonical token stream for any tree starting at `root`.
pub fn emit<N: TreeView>(root: &N) -> Result<String, LatexError> {
    let mut out = Vec::new();
    emit_chain(root, &mut out)?;
    Ok(out.join(" "))
}

fn emit_chain<N: TreeView>(start: &N, out: &mut Vec<String>) -> Result<(), LatexError> {
    let mut cur = Some(start);
    while let Some(node) = cur {
        emit_node(node, out)?;
        cur = node.child(Relation::Right);
    }
    Ok(())
}

fn emit_group<N: TreeView>(node: &N, out: &mut Vec<String>) -> Result<(), LatexError> {
    out.push("{".into());
    emit_chain(node, out)?;
    out.push("}".into());
    Ok(())
}

fn structure<N: TreeView>(node: &N, reason: &str) -> LatexError {
    LatexError::Structure {
        node: node.name(),
        reason: reason.to_string(),
    }
}

fn emit_node<N: TreeView>(node: &N, out: &mut Vec<String>) -> Result<(), LatexError> {
    let label = node.label();
    let over = node.child(Relation::Over);
    let under = node.child(Relation::Under);
    let inside = node.child(Relation::Inside);
    let sub = node.child(Relation::Subscript);
    let sup = node.child(Relation::Superscript);

    if label == FRACTION_BAR && (over.is_some() || under.is_some()) {
        let (Some(over), Some(under)) = (over, under) else {
            return Err(structure(
                node,
                "fraction bar needs both numerator and denominator",
            ));
        };
        if inside.is_some() {
            return Err(structure(node, "fraction bar cannot contain a radicand"));
        }
        out.push("\\frac".into());
        emit_group(over, out)?;
        emit_group(under, out)?;
    } else if label == SQRT {
        let Some(inside) = inside else {
            return Err(structure(node, "radical without a radicand"));
        };
        if over.is_some() || under.is_some() {
            return Err(structure(node, "radical cannot carry limits"));
        }
        out.push(SQRT.into());
        emit_group(inside, out)?;
    } else {
        if inside.is_some() {
            return Err(structure(node, "INSIDE relation on a non-radical"));
        }
        out.push(label.to_string());
        if over.is_some() || under.is_some() {
            if !is_big_operator(label) {
                return Err(structure(node, "OVER/UNDER relation on a non-operator"));
            }
            if sub.is_some() || sup.is_some() {
                return Err(structure(node, "limits mixed with scripts"));
            }
            if let Some(u) = under {
                out.push("_".into());
                emit_group(u, out)?;
            }
            if let Some(o) = over {
                out.push("^".into());
                emit_group(o, out)?;
            }
        }
    }
    if let Some(s) = sub {
        out.push("_".into());
        emit_group(s, out)?;
    }
    if let Some(s) = sup {
        out.push("^".into());
        emit_group(s, out)?;
    }
    Ok(())
}

fn tokenize(src: &str) -> Result<Vec<String>, LatexError> {
    let mut tokens = Vec::new();
    let mut chars = src.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '$' => {}
            c if c.is_whitespace() => {}
            '\\' => {
                let mut cmd = String::from('\\');
                match chars.peek() {
                    Some(c) if c.is_ascii_alphabetic() => {
                        while let Some(&c) = chars.peek() {
                            if !c.is_ascii_alphabetic() {
                                break;
                            }
                            cmd.push(c);
                            chars.next();
                        }
                    }
                    Some(&c) => {
                        cmd.push(c);
                        chars.next();
                    }
                    None => return Err(LatexError::Unsupported("\\".into())),
                }
                tokens.push(cmd);
            }
            c => tokens.push(c.to_string()),
        }
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<String>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&str> {
        self.tokens.get(self.pos).map(String::as_str)
    }

    fn bump(&mut self) -> Option<String> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    /// Items up to a closing brace or end of input.
    fn row(&mut self) -> Result<Vec<LayoutNode>, LatexError> {
        let mut row: Vec<LayoutNode> = Vec::new();
        while let Some(tok) = self.peek() {
            match tok {
                "}" => break,
                "_" | "^" => {
                    let at = self.pos;
                    let relation_tok = self.bump().unwrap_or_default();
                    let base = row.last_mut().ok_or(LatexError::ScriptWithoutBase(at))?;
                    let limits = LIMIT_OPERATORS.contains(&base.label.as_str());
                    let relation = match (relation_tok.as_str(), limits) {
                        ("_", false) => Relation::Subscript,
                        ("^", false) => Relation::Superscript,
                        ("_", true) => Relation::Under,
                        _ => Relation::Over,
                    };
                    let arg = self.argument(&relation_tok)?;
                    if base.children.contains_key(&relation) {
                        return Err(LatexError::DoubleScript {
                            base: base.label.clone(),
                            relation,
                        });
                    }
                    base.children.insert(relation, arg);
                }
                _ => row.extend(self.item()?),
            }
        }
        Ok(row)
    }

    /// A braced group or a single item, chained into one node.
    fn argument(&mut self, owner: &str) -> Result<LayoutNode, LatexError> {
        let at = self.pos;
        let row = if self.peek() == Some("{") {
            self.group()?
        } else {
            self.item()?
        };
        chain_layout(row).ok_or_else(|| LatexError::MissingArgument(owner.to_string(), at))
    }

    fn group(&mut self) -> Result<Vec<LayoutNode>, LatexError> {
        let open = self.pos;
        self.bump();
        let row = self.row()?;
        if self.bump().as_deref() != Some("}") {
            return Err(LatexError::Unbalanced(open));
        }
        Ok(row)
    }

    fn item(&mut self) -> Result<Vec<LayoutNode>, LatexError> {
        let at = self.pos;
        let Some(tok) = self.peek().map(str::to_string) else {
            return Ok(Vec::new());
        };
        match tok.as_str() {
            "{" => self.group(),
            "}" => Err(LatexError::Unbalanced(at)),
            "\\frac" | "\\dfrac" | "\\tfrac" => {
                self.bump();
                let num = self.argument("\\frac")?;
                let den = self.argument("\\frac")?;
                Ok(vec![LayoutNode::leaf(FRACTION_BAR)
                    .with(Relation::Over, num)
                    .with(Relation::Under, den)])
            }
            "\\sqrt" => {
                self.bump();
                if self.peek() == Some("[") {
                    return Err(LatexError::Unsupported("\\sqrt[...]".into()));
                }
                let inside = self.argument("\\sqrt")?;
                Ok(vec![LayoutNode::leaf(SQRT).with(Relation::Inside, inside)])
            }
            t if INVISIBLE.contains(&t) => {
                self.bump();
                // `\left.` and `\right.` are invisible delimiters.
                if (t == "\\left" || t == "\\right") && self.peek() == Some(".") {
                    self.bump();
                }
                Ok(Vec::new())
            }
            t if FONT_COMMANDS.contains(&t) => {
                self.bump();
                if self.peek() == Some("{") {
                    self.group()
                } else {
                    Err(LatexError::MissingArgument(t.to_string(), at))
                }
            }
            _ => {
                self.bump();
                Ok(vec![LayoutNode::leaf(canonical_token(&tok))])
            }
        }
    }
}

/// Parses LaTeX (with or without `$` delimiters) into a layout tree.
pub fn parse_latex(src: &str) -> Result<LayoutNode, LatexError> {
    let mut parser = Parser {
        tokens: tokenize(src)?,
        pos: 0,
    };
    let row = parser.row()?;
    if parser.pos < parser.tokens.len() {
        return Err(LatexError::Unbalanced(parser.pos));
    }
    chain_layout(row).ok_or(LatexError::Empty)
}

/// Canonical form of an arbitrary LaTeX string.
pub fn normalize(src: &str) -> Result<String, LatexError> {
    emit(&parse_latex(src)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_common_forms() {
        let cases = [
            ("$x^2$", "x ^ { 2 }"),
            ("x^2+2x+1", "x ^ { 2 } + 2 x + 1"),
            ("\\frac{a}{b}", "\\frac { a } { b }"),
            ("a_i^2 + b", "a _ { i } ^ { 2 } + b"),
            ("a^2_i", "a _ { i } ^ { 2 }"),
            ("\\sqrt{x+1}", "\\sqrt { x + 1 }"),
            ("\\sum_{i=1}^{n} i", "\\sum _ { i = 1 } ^ { n } i"),
            ("\\int_0^1 x dx", "\\int _ { 0 } ^ { 1 } x d x"),
            ("\\left( a \\lt b \\right)", "( a < b )"),
            ("x^{23}", "x ^ { 2 3 }"),
            ("x^23", "x ^ { 2 } 3"),
            ("{a+b}^2", "a + b ^ { 2 }"),
            ("\\lim_{x \\to 0} f", "\\lim _ { x \\rightarrow 0 } f"),
            ("\\mbox{sin} x", "s i n x"),
            ("\\{ x \\}", "\\{ x \\}"),
        ];
        for (src, want) in cases {
            assert_eq!(normalize(src).unwrap(), want, "input {src:?}");
        }
    }

    #[test]
    fn limit_operators_use_under_over() {
        let t = parse_latex("\\sum_{i}^{n}").unwrap();
        assert!(t.children.contains_key(&Relation::Under));
        assert!(t.children.contains_key(&Relation::Over));
        let t = parse_latex("\\int_{0}^{1}").unwrap();
        assert!(t.children.contains_key(&Relation::Subscript));
    }

    #[test]
    fn parse_errors() {
        assert_eq!(parse_latex(""), Err(LatexError::Empty));
        assert_eq!(parse_latex("$$"), Err(LatexError::Empty));
        assert!(matches!(
            parse_latex("^2"),
            Err(LatexError::ScriptWithoutBase(0))
        ));
        assert!(matches!(parse_latex("{a"), Err(LatexError::Unbalanced(_))));
        assert!(matches!(parse_latex("a}"), Err(LatexError::Unbalanced(_))));
        assert!(matches!(
            parse_latex("x^{}"),
            Err(LatexError::MissingArgument(..))
        ));
        assert!(matches!(
            parse_latex("x^2^3"),
            Err(LatexError::DoubleScript { .. })
        ));
        assert!(matches!(
            parse_latex("\\sqrt[3]{x}"),
            Err(LatexError::Unsupported(_))
        ));
        assert!(matches!(
            parse_latex("\\frac{a}"),
            Err(LatexError::MissingArgument(..))
        ));
    }

    #[test]
    fn emission_rejects_unmapped_relations() {
        let bad = LayoutNode::leaf("x").with(Relation::Inside, LayoutNode::leaf("y"));
        assert!(matches!(emit(&bad), Err(LatexError::Structure { .. })));
        let bad = LayoutNode::leaf("x").with(Relation::Over, LayoutNode::leaf("y"));
        assert!(matches!(emit(&bad), Err(LatexError::Structure { .. })));
        let half = LayoutNode::leaf("-").with(Relation::Over, LayoutNode::leaf("y"));
        assert!(matches!(emit(&half), Err(LatexError::Structure { .. })));
        let bare_root = LayoutNode::leaf(SQRT);
        assert!(matches!(
            emit(&bare_root),
            Err(LatexError::Structure { .. })
        ));
    }

    #[test]
    fn canonical_aliases() {
        assert_eq!(canonical_token("\\lt"), "<");
        assert_eq!(canonical_token("COMMA"), ",");
        assert_eq!(canonical_token("\u{2212}"), "-");
        assert_eq!(canonical_token("x"), "x");
        assert_eq!(canonical_token(" \\alpha "), "\\alpha");
    }
}
