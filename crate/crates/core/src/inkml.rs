//! CROHME-style InkML input and output.
//!
//! A training file carries traces, a segmentation (`traceGroup`s labelled
//! with symbol classes, optionally linked to MathML through
//! `annotationXML href`), and the ground truth as MathML and/or a LaTeX
//! `truth` annotation. MathML is preferred because its `xml:id` links make
//! symbol alignment exact; the LaTeX string is aligned by label and order.
//!
//! Files written by [`write_inkml`] use the same dialect, plus
//! `hmegen:*` annotations recording provenance.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use roxmltree::{Document, Node};

use crate::decomposition::RuleTrace;
use crate::distortion::{Axis, DistortionParams};
use crate::ink::{
    bounding_box, InkError, OnlineHme, PenPoint, Provenance, Stroke, Symbol, SymbolId,
};
use crate::latex::{self, canonical_token, chain_layout, LatexError, LayoutNode, TreeView};
use crate::srt::{Relation, SrtNode, SymbolRelationTree};

const XML_NS: &str = "http://www.w3.org/XML/1998/namespace";
const INKML_NS: &str = "http://www.w3.org/2003/InkML";
const MATHML_NS: &str = "http://www.w3.org/1998/Math/MathML";
const ANNOTATION_PREFIX: &str = "hmegen:";

#[derive(Debug, thiserror::Error)]
pub enum InkmlError {
    #[error("malformed XML at byte {offset}: {message}")]
    Xml { offset: usize, message: String },
    #[error("root element is `{0}`, expected `ink`")]
    NotInk(String),
    #[error("trace `{id}`: {reason}")]
    BadTrace { id: String, reason: String },
    #[error("traceGroup references unknown trace `{0}`")]
    UnresolvedTrace(String),
    #[error("file has no ground truth")]
    MissingTruth,
    #[error("unsupported MathML element `{0}`")]
    UnsupportedMathMl(String),
    #[error("malformed MathML `{element}`: {reason}")]
    MalformedMathMl { element: String, reason: String },
    #[error("alignment: {0}")]
    Alignment(String),
    #[error("bad provenance annotation `{key}` = `{value}`")]
    BadProvenance { key: String, value: String },
    #[error(transparent)]
    Latex(#[from] LatexError),
    #[error(transparent)]
    Ink(#[from] InkError),
}

/// Ground truth as found in the file.
#[derive(Debug, Clone, PartialEq)]
pub enum MathTruth {
    /// Presentation MathML, converted to a layout tree with `xml:id` links.
    MathMl(LayoutNode),
    /// A LaTeX string such as `$x^2$`.
    Latex(String),
}

impl MathTruth {
    pub fn layout(&self) -> Result<LayoutNode, LatexError> {
        match self {
            MathTruth::MathMl(tree) => Ok(tree.clone()),
            MathTruth::Latex(src) => latex::parse_latex(src),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceGroup {
    pub id: Option<String>,
    pub label: Option<String>,
    pub href: Option<String>,
    pub traces: Vec<String>,
    pub children: Vec<TraceGroup>,
}

impl TraceGroup {
    /// Groups that directly reference traces, in document order.
    pub fn leaves<'a>(&'a self, out: &mut Vec<&'a TraceGroup>) {
        if !self.traces.is_empty() {
            out.push(self);
        }
        for c in &self.children {
            c.leaves(out);
        }
    }
}

/// Raw contents of an InkML file.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct InkmlDocument {
    /// Traces in file order.
    pub traces: Vec<(String, Stroke)>,
    pub trace_groups: Vec<TraceGroup>,
    /// `(type, text)` for every top-level annotation.
    pub annotations: Vec<(String, String)>,
    pub math_truth: Option<MathTruth>,
}

impl InkmlDocument {
    pub fn annotation(&self, kind: &str) -> Option<&str> {
        self.annotations
            .iter()
            .find(|(k, _)| k == kind)
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParseOptions {
    /// Accept files without ground truth. Symbols are then chained left to
    /// right by position, and ungrouped traces become `?` symbols.
    pub require_truth: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            require_truth: true,
        }
    }
}

fn byte_offset(text: &str, pos: roxmltree::TextPos) -> usize {
    let line_start: usize = text
        .split_inclusive('\n')
        .take(pos.row.saturating_sub(1) as usize)
        .map(str::len)
        .sum();
    let line = &text[line_start.min(text.len())..];
    let col: usize = line
        .chars()
        .take(pos.col.saturating_sub(1) as usize)
        .map(char::len_utf8)
        .sum();
    line_start + col
}

fn xml_id(node: Node) -> Option<String> {
    node.attribute((XML_NS, "id"))
        .or_else(|| node.attribute("id"))
        .map(str::to_string)
}

fn annotation_type(node: Node) -> String {
    node.attribute("type").unwrap_or_default().to_string()
}

fn element_children<'a, 'i>(node: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    node.children().filter(Node::is_element)
}

fn parse_trace(id: &str, text: &str) -> Result<Stroke, InkmlError> {
    let bad = |reason: String| InkmlError::BadTrace {
        id: id.to_string(),
        reason,
    };
    let mut points = Vec::new();
    for chunk in text.split(',') {
        let mut values = chunk.split_whitespace();
        let Some(x) = values.next() else { continue };
        let y = values
            .next()
            .ok_or_else(|| bad(format!("point `{}` has one value", chunk.trim())))?;
        let parse = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| bad(format!("bad number `{v}`")))
        };
        points.push(PenPoint::new(parse(x)?, parse(y)?));
    }
    Stroke::new(points).map_err(|e| bad(e.to_string()))
}

fn parse_trace_group(node: Node) -> TraceGroup {
    let mut group = TraceGroup {
        id: xml_id(node),
        ..TraceGroup::default()
    };
    for child in element_children(node) {
        match child.tag_name().name() {
            "annotation" if annotation_type(child) == "truth" => {
                group.label = child.text().map(|t| t.trim().to_string());
            }
            "annotationXML" => {
                if let Some(href) = child.attribute("href") {
                    group.href = Some(href.trim_start_matches('#').to_string());
                }
            }
            "traceView" => {
                if let Some(r) = child.attribute("traceDataRef") {
                    group.traces.push(r.trim_start_matches('#').to_string());
                }
            }
            "traceGroup" => group.children.push(parse_trace_group(child)),
            _ => {}
        }
    }
    group
}

/// Reads an InkML file without interpreting its structure.
pub fn parse_document(bytes: &[u8]) -> Result<InkmlDocument, InkmlError> {
    let text = std::str::from_utf8(bytes).map_err(|e| InkmlError::Xml {
        offset: e.valid_up_to(),
        message: "invalid UTF-8".into(),
    })?;
    let doc = Document::parse(text).map_err(|e| InkmlError::Xml {
        offset: byte_offset(text, e.pos()),
        message: e.to_string(),
    })?;
    let root = doc.root_element();
    if root.tag_name().name() != "ink" {
        return Err(InkmlError::NotInk(root.tag_name().name().to_string()));
    }

    let mut out = InkmlDocument::default();
    let mut latex_truth = None;
    for child in element_children(root) {
        match child.tag_name().name() {
            "trace" => {
                let id = xml_id(child).unwrap_or_else(|| out.traces.len().to_string());
                let stroke = parse_trace(&id, child.text().unwrap_or_default())?;
                out.traces.push((id, stroke));
            }
            "traceGroup" => out.trace_groups.push(parse_trace_group(child)),
            "annotation" => {
                let kind = annotation_type(child);
                let value = child.text().unwrap_or_default().trim().to_string();
                if kind == "truth" {
                    latex_truth = Some(value.clone());
                }
                out.annotations.push((kind, value));
            }
            "annotationXML" => {
                let math = child
                    .descendants()
                    .find(|n| n.is_element() && n.tag_name().name() == "math");
                if let Some(math) = math {
                    let row = mathml_row(math)?;
                    let tree = chain_layout(row).ok_or_else(|| InkmlError::MalformedMathMl {
                        element: "math".into(),
                        reason: "empty".into(),
                    })?;
                    out.math_truth = Some(MathTruth::MathMl(tree));
                }
            }
            _ => {}
        }
    }
    if out.math_truth.is_none() {
        out.math_truth = latex_truth.filter(|s| !s.is_empty()).map(MathTruth::Latex);
    }
    Ok(out)
}

fn malformed(node: Node, reason: &str) -> InkmlError {
    InkmlError::MalformedMathMl {
        element: node.tag_name().name().to_string(),
        reason: reason.to_string(),
    }
}

fn mathml_leaf(node: Node) -> Vec<LayoutNode> {
    let text = node
        .descendants()
        .filter(Node::is_text)
        .filter_map(|t| t.text())
        .collect::<String>();
    let text = text.trim();
    let canon = canonical_token(text);
    let xref = xml_id(node);
    let splittable = text.chars().count() > 1
        && canon == text
        && !text.starts_with('\\')
        && text.chars().all(char::is_alphanumeric);
    if splittable {
        // `<mn>12</mn>` is two symbols; only the first can carry the link.
        text.chars()
            .enumerate()
            .map(|(i, c)| LayoutNode {
                xref: if i == 0 { xref.clone() } else { None },
                ..LayoutNode::leaf(c.to_string())
            })
            .collect()
    } else if text.is_empty() {
        Vec::new()
    } else {
        vec![LayoutNode {
            xref,
            ..LayoutNode::leaf(canon)
        }]
    }
}

fn mathml_arg(node: Node) -> Result<LayoutNode, InkmlError> {
    chain_layout(mathml_row(node)?).ok_or_else(|| malformed(node, "empty argument"))
}

fn attach(
    row: &mut [LayoutNode],
    parent: Node,
    relation: Relation,
    child: LayoutNode,
) -> Result<(), InkmlError> {
    let base = row
        .last_mut()
        .ok_or_else(|| malformed(parent, "missing base"))?;
    if base.children.insert(relation, child).is_some() {
        return Err(malformed(parent, "base already has this relation"));
    }
    Ok(())
}

fn mathml_row(node: Node) -> Result<Vec<LayoutNode>, InkmlError> {
    let name = node.tag_name().name();
    let kids: Vec<Node> = element_children(node).collect();
    let expect = |n: usize| {
        if kids.len() == n {
            Ok(())
        } else {
            Err(malformed(
                node,
                &format!("expected {n} children, found {}", kids.len()),
            ))
        }
    };
    let scripted = |relations: &[Relation]| -> Result<Vec<LayoutNode>, InkmlError> {
        expect(relations.len() + 1)?;
        let mut row = mathml_row(kids[0])?;
        for (rel, kid) in relations.iter().zip(&kids[1..]) {
            attach(&mut row, node, *rel, mathml_arg(*kid)?)?;
        }
        Ok(row)
    };
    match name {
        "math" | "mrow" | "mstyle" | "mpadded" | "semantics" => {
            let mut row = Vec::new();
            for k in kids {
                if k.tag_name().name() == "annotation" || k.tag_name().name() == "annotation-xml" {
                    continue;
                }
                row.extend(mathml_row(k)?);
            }
            Ok(row)
        }
        "mi" | "mn" | "mo" | "mtext" => Ok(mathml_leaf(node)),
        "mspace" => Ok(Vec::new()),
        "msub" => scripted(&[Relation::Subscript]),
        "msup" => scripted(&[Relation::Superscript]),
        "msubsup" => scripted(&[Relation::Subscript, Relation::Superscript]),
        "munder" => scripted(&[Relation::Under]),
        "mover" => scripted(&[Relation::Over]),
        "munderover" => scripted(&[Relation::Under, Relation::Over]),
        "mfrac" => {
            expect(2)?;
            Ok(vec![LayoutNode {
                xref: xml_id(node),
                ..LayoutNode::leaf(latex::FRACTION_BAR)
                    .with(Relation::Over, mathml_arg(kids[0])?)
                    .with(Relation::Under, mathml_arg(kids[1])?)
            }])
        }
        "msqrt" => {
            let mut inner = Vec::new();
            for k in kids {
                inner.extend(mathml_row(k)?);
            }
            let inside = chain_layout(inner).ok_or_else(|| malformed(node, "empty radicand"))?;
            Ok(vec![LayoutNode {
                xref: xml_id(node),
                ..LayoutNode::leaf(latex::SQRT).with(Relation::Inside, inside)
            }])
        }
        other => Err(InkmlError::UnsupportedMathMl(other.to_string())),
    }
}

fn is_structural(node: &LayoutNode) -> bool {
    node.label == latex::SQRT
        || (node.label == latex::FRACTION_BAR
            && (node.children.contains_key(&Relation::Over)
                || node.children.contains_key(&Relation::Under)))
}

struct Aligner<'a> {
    symbols: &'a [Symbol],
    used: Vec<bool>,
}

impl Aligner<'_> {
    fn pick(&mut self, node: &LayoutNode) -> Result<usize, InkmlError> {
        let linked = node
            .xref
            .as_ref()
            .and_then(|x| self.symbols.iter().position(|s| s.id.as_str() == x));
        let index = match linked {
            Some(i) => {
                if self.used[i] {
                    return Err(InkmlError::Alignment(format!(
                        "symbol `{}` is referenced twice",
                        self.symbols[i].id
                    )));
                }
                if is_structural(node) && self.symbols[i].label != node.label {
                    return Err(InkmlError::Alignment(format!(
                        "symbol `{}` is labelled `{}` but the structure needs `{}`",
                        self.symbols[i].id, self.symbols[i].label, node.label
                    )));
                }
                i
            }
            None => (0..self.symbols.len())
                .find(|&i| !self.used[i] && self.symbols[i].label == node.label)
                .ok_or_else(|| {
                    InkmlError::Alignment(format!(
                        "`{}` in the ground truth has no matching symbol in the segmentation",
                        node.name()
                    ))
                })?,
        };
        self.used[index] = true;
        Ok(index)
    }

    fn convert(&mut self, node: &LayoutNode) -> Result<SrtNode, InkmlError> {
        let sym = &self.symbols[self.pick(node)?];
        let mut out = SrtNode::new(sym.id.clone(), sym.label.clone());
        for (relation, child) in &node.children {
            out.set_child(*relation, self.convert(child)?);
        }
        Ok(out)
    }
}

/// Aligns the ground-truth structure with the segmented symbols.
///
/// Nodes carrying an `xml:id` that matches a symbol id are linked directly;
/// the rest take the first unused symbol with the same label, in symbol
/// order. Every symbol must be used exactly once.
pub fn build_srt(symbols: &[Symbol], truth: &MathTruth) -> Result<SymbolRelationTree, InkmlError> {
    let layout = truth.layout()?;
    let mut aligner = Aligner {
        symbols,
        used: vec![false; symbols.len()],
    };
    let root = aligner.convert(&layout)?;
    if let Some(i) = aligner.used.iter().position(|u| !u) {
        return Err(InkmlError::Alignment(format!(
            "symbol `{}` ({}) is not part of the ground truth",
            symbols[i].id, symbols[i].label
        )));
    }
    Ok(SymbolRelationTree::new(root))
}

fn left_to_right(symbols: &[Symbol], strokes: &[Stroke]) -> Result<SymbolRelationTree, InkmlError> {
    let mut keyed = Vec::with_capacity(symbols.len());
    for (i, s) in symbols.iter().enumerate() {
        let b = bounding_box(s.strokes.iter().flat_map(|&t| strokes[t].points()))?;
        keyed.push((b.min_x, i));
    }
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let nodes = keyed
        .into_iter()
        .map(|(_, i)| SrtNode::new(symbols[i].id.clone(), symbols[i].label.clone()))
        .collect();
    SymbolRelationTree::from_baseline(nodes).ok_or(InkmlError::MissingTruth)
}

fn provenance_from(doc: &InkmlDocument) -> Result<Provenance, InkmlError> {
    let get = |k: &str| doc.annotation(&format!("{ANNOTATION_PREFIX}{k}"));
    let bad = |key: &str, value: &str| InkmlError::BadProvenance {
        key: key.to_string(),
        value: value.to_string(),
    };
    let num = |k: &str| -> Result<Option<f64>, InkmlError> {
        get(k)
            .map(|v| v.parse::<f64>().map_err(|_| bad(k, v)))
            .transpose()
    };

    let distortion = match get("id") {
        None => None,
        Some(id) => {
            let id: u8 = id.parse().map_err(|_| bad("id", id))?;
            let axis_s = get("axis").unwrap_or("horizontal");
            let axis = Axis::from_name(axis_s).ok_or_else(|| bad("axis", axis_s))?;
            let p = DistortionParams::new(
                id,
                axis,
                num("alpha")?.unwrap_or(0.0),
                num("beta")?.unwrap_or(0.0),
                num("k")?.unwrap_or(1.0),
                num("gamma")?.unwrap_or(0.0),
            )
            .map_err(|e| bad("params", &e.to_string()))?;
            Some(p)
        }
    };
    let decomposition = match get("rule") {
        None => None,
        Some(rule) => {
            let n: u8 = rule.parse().map_err(|_| bad("rule", rule))?;
            let anchor = get("anchor").unwrap_or_default();
            let detail = get("detail").unwrap_or_default();
            Some(RuleTrace::from_parts(n, anchor, detail).ok_or_else(|| bad("rule", rule))?)
        }
    };
    Ok(Provenance {
        source: get("source").unwrap_or_default().to_string(),
        decomposition,
        distortion,
    })
}

/// Parses a CROHME-style InkML file into an expression.
pub fn parse_inkml(bytes: &[u8], options: &ParseOptions) -> Result<OnlineHme, InkmlError> {
    let doc = parse_document(bytes)?;
    let index: BTreeMap<&str, usize> = doc
        .traces
        .iter()
        .enumerate()
        .map(|(i, (id, _))| (id.as_str(), i))
        .collect();
    let strokes: Vec<Stroke> = doc.traces.iter().map(|(_, s)| s.clone()).collect();

    let mut leaves = Vec::new();
    for g in &doc.trace_groups {
        g.leaves(&mut leaves);
    }
    let mut symbols = Vec::with_capacity(leaves.len());
    let mut grouped = BTreeSet::new();
    for (n, g) in leaves.iter().enumerate() {
        let id = g
            .href
            .clone()
            .or_else(|| g.id.clone())
            .unwrap_or_else(|| format!("sym{n}"));
        let strokes = g
            .traces
            .iter()
            .map(|t| {
                index
                    .get(t.as_str())
                    .copied()
                    .ok_or_else(|| InkmlError::UnresolvedTrace(t.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        grouped.extend(strokes.iter().copied());
        symbols.push(Symbol {
            id: SymbolId::new(id),
            label: canonical_token(g.label.as_deref().unwrap_or("?")),
            strokes,
        });
    }

    let srt = match (&doc.math_truth, options.require_truth) {
        (Some(truth), _) => build_srt(&symbols, truth)?,
        (None, true) => return Err(InkmlError::MissingTruth),
        (None, false) => {
            for i in (0..strokes.len()).filter(|i| !grouped.contains(i)) {
                symbols.push(Symbol {
                    id: SymbolId::new(format!("stroke{i}")),
                    label: "?".into(),
                    strokes: vec![i],
                });
            }
            left_to_right(&symbols, &strokes)?
        }
    };
    Ok(OnlineHme::new(
        strokes,
        symbols,
        srt,
        provenance_from(&doc)?,
    )?)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn leaf_tag(label: &str) -> &'static str {
    if label.chars().all(|c| c.is_ascii_digit()) {
        "mn"
    } else if label.chars().count() == 1 && label.chars().all(char::is_alphabetic) {
        "mi"
    } else {
        "mo"
    }
}

fn mathml_chain(start: &SrtNode, out: &mut String) {
    let nodes = start.baseline();
    let wrap = nodes.len() > 1;
    if wrap {
        out.push_str("<mrow>");
    }
    for node in nodes {
        mathml_node(node, out);
    }
    if wrap {
        out.push_str("</mrow>");
    }
}

fn mathml_node(node: &SrtNode, out: &mut String) {
    let id = escape(node.symbol().as_str());
    let over = node.child(Relation::Over);
    let under = node.child(Relation::Under);
    let sub = node.child(Relation::Subscript);
    let sup = node.child(Relation::Superscript);
    let fraction = node.label() == latex::FRACTION_BAR && over.is_some() && under.is_some();

    let mut core = String::new();
    if fraction {
        let _ = write!(core, "<mfrac xml:id=\"{id}\">");
        mathml_chain(over.expect("checked"), &mut core);
        mathml_chain(under.expect("checked"), &mut core);
        core.push_str("</mfrac>");
    } else if let (latex::SQRT, Some(inside)) = (node.label(), node.child(Relation::Inside)) {
        let _ = write!(core, "<msqrt xml:id=\"{id}\">");
        mathml_chain(inside, &mut core);
        core.push_str("</msqrt>");
    } else {
        let tag = leaf_tag(node.label());
        let _ = write!(
            core,
            "<{tag} xml:id=\"{id}\">{}</{tag}>",
            escape(node.label())
        );
        let limits = match (under, over) {
            (Some(u), Some(o)) => Some(("munderover", vec![u, o])),
            (Some(u), None) => Some(("munder", vec![u])),
            (None, Some(o)) => Some(("mover", vec![o])),
            (None, None) => None,
        };
        if let Some((tag, parts)) = limits {
            let mut wrapped = format!("<{tag}>{core}");
            for p in parts {
                mathml_chain(p, &mut wrapped);
            }
            let _ = write!(wrapped, "</{tag}>");
            core = wrapped;
        }
    }

    let scripts = match (sub, sup) {
        (Some(b), Some(p)) => Some(("msubsup", vec![b, p])),
        (Some(b), None) => Some(("msub", vec![b])),
        (None, Some(p)) => Some(("msup", vec![p])),
        (None, None) => None,
    };
    match scripts {
        Some((tag, parts)) => {
            let _ = write!(out, "<{tag}>{core}");
            for p in parts {
                mathml_chain(p, out);
            }
            let _ = write!(out, "</{tag}>");
        }
        None => out.push_str(&core),
    }
}

fn provenance_annotations(p: &Provenance) -> Vec<(&'static str, String)> {
    let mut out = vec![
        ("source", p.source.clone()),
        ("strategy", p.strategy().name().to_string()),
    ];
    if let Some(d) = &p.distortion {
        out.extend([
            ("id", d.id().to_string()),
            ("axis", d.axis.name().to_string()),
            ("alpha", d.alpha.to_string()),
            ("beta", d.beta.to_string()),
            ("k", d.k.to_string()),
            ("gamma", d.gamma.to_string()),
        ]);
    }
    if let Some(r) = &p.decomposition {
        out.extend([
            ("rule", r.rule().to_string()),
            ("anchor", r.anchor().to_string()),
            ("detail", r.detail().to_string()),
        ]);
    }
    out
}

/// Serializes an expression as InkML. Coordinates are written with
/// shortest round-trip formatting, so re-parsing is exact.
pub fn write_inkml(hme: &OnlineHme) -> Vec<u8> {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(s, "<ink xmlns=\"{INKML_NS}\">");
    s.push_str("  <traceFormat>\n    <channel name=\"X\" type=\"decimal\"/>\n    <channel name=\"Y\" type=\"decimal\"/>\n  </traceFormat>\n");
    let _ = writeln!(
        s,
        "  <annotation type=\"truth\">${}$</annotation>",
        escape(hme.latex())
    );
    for (key, value) in provenance_annotations(hme.provenance()) {
        let _ = writeln!(
            s,
            "  <annotation type=\"{ANNOTATION_PREFIX}{key}\">{}</annotation>",
            escape(&value)
        );
    }
    let _ = write!(
        s,
        "  <annotationXML type=\"truth\" encoding=\"Content-MathML\">\n    <math xmlns=\"{MATHML_NS}\">"
    );
    mathml_chain(hme.srt().root(), &mut s);
    s.push_str("</math>\n  </annotationXML>\n");

    for (i, stroke) in hme.strokes().iter().enumerate() {
        let _ = write!(s, "  <trace id=\"{i}\">");
        for (j, p) in stroke.points().iter().enumerate() {
            if j > 0 {
                s.push_str(", ");
            }
            let _ = write!(s, "{} {}", p.x, p.y);
        }
        s.push_str("</trace>\n");
    }

    s.push_str("  <traceGroup xml:id=\"tg.root\">\n    <annotation type=\"truth\">Segmentation</annotation>\n");
    for (n, sym) in hme.symbols().iter().enumerate() {
        let _ = writeln!(s, "    <traceGroup xml:id=\"tg.{n}\">");
        let _ = writeln!(
            s,
            "      <annotation type=\"truth\">{}</annotation>",
            escape(&sym.label)
        );
        for t in &sym.strokes {
            let _ = writeln!(s, "      <traceView traceDataRef=\"{t}\"/>");
        }
        let _ = writeln!(
            s,
            "      <annotationXML href=\"{}\"/>",
            escape(sym.id.as_str())
        );
        s.push_str("    </traceGroup>\n");
    }
    s.push_str("  </traceGroup>\n</ink>\n");
    s.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"<ink xmlns="http://www.w3.org/2003/InkML">
  <annotation type="truth">$x$</annotation>
  <trace id="0">0 0, 10 0</trace>
  <traceGroup xml:id="g">
    <annotation type="truth">Segmentation</annotation>
    <traceGroup xml:id="g1">
      <annotation type="truth">x</annotation>
      <traceView traceDataRef="0"/>
    </traceGroup>
  </traceGroup>
</ink>"#;

    const SQUARED: &str = r#"<ink xmlns="http://www.w3.org/2003/InkML">
  <annotation type="truth">$x^2$</annotation>
  <annotationXML type="truth" encoding="Content-MathML">
    <math xmlns="http://www.w3.org/1998/Math/MathML">
      <msup><mi xml:id="x_1">x</mi><mn xml:id="2_1">2</mn></msup>
    </math>
  </annotationXML>
  <trace id="0">0 0, 10 10</trace>
  <trace id="1">10 0, 0 10</trace>
  <trace id="2">12 -8, 16 -8, 12 -2, 16 -2</trace>
  <traceGroup xml:id="9">
    <annotation type="truth">Segmentation</annotation>
    <traceGroup xml:id="10">
      <annotation type="truth">x</annotation>
      <traceView traceDataRef="0"/>
      <traceView traceDataRef="1"/>
      <annotationXML href="x_1"/>
    </traceGroup>
    <traceGroup xml:id="11">
      <annotation type="truth">2</annotation>
      <traceView traceDataRef="2"/>
      <annotationXML href="2_1"/>
    </traceGroup>
  </traceGroup>
</ink>"#;

    #[test]
    fn minimal_file() {
        let hme = parse_inkml(MINIMAL.as_bytes(), &ParseOptions::default()).unwrap();
        assert_eq!(hme.strokes().len(), 1);
        assert_eq!(hme.symbols().len(), 1);
        assert_eq!(hme.symbols()[0].label, "x");
        assert_eq!(hme.latex(), "x");
    }

    #[test]
    fn mathml_linked_superscript() {
        let hme = parse_inkml(SQUARED.as_bytes(), &ParseOptions::default()).unwrap();
        assert_eq!(hme.latex(), "x ^ { 2 }");
        let edges = hme.srt().edges();
        assert_eq!(edges.len(), 1);
        assert_eq!(edges[0].0.as_str(), "x_1");
        assert_eq!(edges[0].1, Relation::Superscript);
        assert_eq!(edges[0].2.as_str(), "2_1");
        assert_eq!(hme.symbols()[0].strokes, [0, 1]);
    }

    #[test]
    fn latex_only_truth_aligns_by_label() {
        let no_mathml = SQUARED.replace(
            &SQUARED[SQUARED.find("<annotationXML type").unwrap()
                ..SQUARED.find("</annotationXML>").unwrap() + "</annotationXML>".len()],
            "",
        );
        let hme = parse_inkml(no_mathml.as_bytes(), &ParseOptions::default()).unwrap();
        assert_eq!(hme.latex(), "x ^ { 2 }");
    }

    #[test]
    fn truncated_xml_reports_offset() {
        let cut = &SQUARED[..SQUARED.len() / 2];
        match parse_inkml(cut.as_bytes(), &ParseOptions::default()) {
            Err(InkmlError::Xml { offset, .. }) => assert!(offset <= cut.len()),
            other => panic!("expected XML error, got {other:?}"),
        }
    }

    #[test]
    fn byte_offset_accounts_for_lines_and_multibyte() {
        let text = "ab\nc\u{e9}d";
        let pos = roxmltree::TextPos { row: 2, col: 3 };
        assert_eq!(byte_offset(text, pos), 3 + 1 + 2);
    }

    #[test]
    fn unresolved_trace() {
        let bad = MINIMAL.replace("traceDataRef=\"0\"", "traceDataRef=\"7\"");
        assert!(matches!(
            parse_inkml(bad.as_bytes(), &ParseOptions::default()),
            Err(InkmlError::UnresolvedTrace(id)) if id == "7"
        ));
    }

    #[test]
    fn missing_truth() {
        let bare = MINIMAL.replace("<annotation type=\"truth\">$x$</annotation>", "");
        assert!(matches!(
            parse_inkml(bare.as_bytes(), &ParseOptions::default()),
            Err(InkmlError::MissingTruth)
        ));
        let lenient = ParseOptions {
            require_truth: false,
        };
        let hme = parse_inkml(bare.as_bytes(), &lenient).unwrap();
        assert_eq!(hme.latex(), "x");
    }

    #[test]
    fn no_truth_mode_wraps_ungrouped_traces() {
        let src = r#"<ink xmlns="http://www.w3.org/2003/InkML">
            <trace id="a">5 0, 6 1</trace><trace id="b">0 0, 1 1</trace></ink>"#;
        let hme = parse_inkml(
            src.as_bytes(),
            &ParseOptions {
                require_truth: false,
            },
        )
        .unwrap();
        assert_eq!(hme.latex(), "? ?");
        assert_eq!(hme.srt().root().symbol().as_str(), "stroke1");
    }

    #[test]
    fn alignment_errors() {
        let extra = SQUARED.replace(
            "<msup><mi xml:id=\"x_1\">x</mi><mn xml:id=\"2_1\">2</mn></msup>",
            "<msup><mi xml:id=\"x_1\">x</mi><mn xml:id=\"3_1\">3</mn></msup>",
        );
        assert!(matches!(
            parse_inkml(extra.as_bytes(), &ParseOptions::default()),
            Err(InkmlError::Alignment(_))
        ));
        let leftover = SQUARED.replace(
            "<msup><mi xml:id=\"x_1\">x</mi><mn xml:id=\"2_1\">2</mn></msup>",
            "<mi xml:id=\"x_1\">x</mi>",
        );
        assert!(matches!(
            parse_inkml(leftover.as_bytes(), &ParseOptions::default()),
            Err(InkmlError::Alignment(_))
        ));
    }

    #[test]
    fn provenance_is_written_and_read_back() {
        let hme = parse_inkml(SQUARED.as_bytes(), &ParseOptions::default()).unwrap();
        let params = DistortionParams::new(3, Axis::Vertical, 5.0, -2.0, 1.1, 4.0).unwrap();
        let hme = hme.with_provenance(Provenance {
            source: "sample".into(),
            decomposition: None,
            distortion: Some(params),
        });
        let text = String::from_utf8(write_inkml(&hme)).unwrap();
        for needle in [
            "<annotation type=\"hmegen:strategy\">distortion</annotation>",
            "<annotation type=\"hmegen:id\">3</annotation>",
            "<annotation type=\"hmegen:alpha\">5</annotation>",
            "<annotation type=\"hmegen:beta\">-2</annotation>",
            "<annotation type=\"hmegen:k\">1.1</annotation>",
            "<annotation type=\"hmegen:gamma\">4</annotation>",
        ] {
            assert!(text.contains(needle), "missing {needle}");
        }
        let back = parse_inkml(text.as_bytes(), &ParseOptions::default()).unwrap();
        assert_eq!(back, hme);
    }

    #[test]
    fn mathml_shapes() {
        let doc = |math: &str| {
            let src = format!("<ink><annotationXML><math>{math}</math></annotationXML></ink>");
            parse_document(src.as_bytes())
                .unwrap()
                .math_truth
                .unwrap()
                .layout()
                .unwrap()
        };
        let frac = doc("<mfrac xml:id=\"f\"><mi>a</mi><mi>b</mi></mfrac>");
        assert_eq!(latex::emit(&frac).unwrap(), "\\frac { a } { b }");
        assert_eq!(frac.xref.as_deref(), Some("f"));
        let sum = doc("<munderover><mo>&#x2211;</mo><mrow><mi>i</mi><mo>=</mo><mn>1</mn></mrow><mi>n</mi></munderover><mi>i</mi>");
        assert_eq!(latex::emit(&sum).unwrap(), "\\sum _ { i = 1 } ^ { n } i");
        let root = doc("<msqrt><mi>x</mi><mo>+</mo><mn>12</mn></msqrt>");
        assert_eq!(latex::emit(&root).unwrap(), "\\sqrt { x + 1 2 }");
        let fenced = doc("<msup><mrow><mo>(</mo><mi>a</mi><mo>)</mo></mrow><mn>2</mn></msup>");
        assert_eq!(latex::emit(&fenced).unwrap(), "( a ) ^ { 2 }");
        let src = "<ink><annotationXML><math><mroot><mi>x</mi><mn>3</mn></mroot></math></annotationXML></ink>";
        assert!(matches!(
            parse_document(src.as_bytes()),
            Err(InkmlError::UnsupportedMathMl(_))
        ));
    }
}
