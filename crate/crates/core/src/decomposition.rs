//! Structural decomposition of an expression into sub-expressions.
//!
//! Three extraction rules run over the symbol relation tree, in order:
//!
//! 1. **Baseline**: drop every subscript and superscript subtree.
//! 2. **Script parts**: each subscript, superscript, over, under and inside
//!    subtree on its own.
//! 3. **Operator splits**: for every binary operator on the top-level
//!    baseline that is not enclosed in brackets, the pieces strictly left
//!    and strictly right of it.
//!
//! A fourth rule drops every result with fewer than two symbols. Results
//! with the same LaTeX and the same symbol set are reported once.

use std::collections::BTreeSet;
use std::fmt;

use crate::ink::{InkError, OnlineHme, Provenance, Stroke, Symbol, SymbolId};
use crate::latex::{self, is_binary_operator, is_close_bracket, is_open_bracket, LatexError};
use crate::srt::{chain, Relation, SrtNode, SymbolRelationTree};

pub use crate::latex::latex_of;

/// Minimum size of an emitted sub-expression.
pub const MIN_SYMBOLS: usize = 2;

#[derive(Debug, thiserror::Error)]
pub enum DecompositionError {
    #[error(transparent)]
    Latex(#[from] LatexError),
    #[error(transparent)]
    Ink(#[from] InkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

/// Which rule produced a sub-expression, and where it was anchored.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RuleTrace {
    /// Rule 1, anchored at the root of the parent tree.
    Baseline { root: SymbolId },
    /// Rule 2: the subtree hanging off `parent` via `relation`.
    ScriptPart {
        parent: SymbolId,
        relation: Relation,
    },
    /// Rule 3: one side of a baseline operator.
    OperatorSplit { operator: SymbolId, side: Side },
}

impl RuleTrace {
    pub fn rule(&self) -> u8 {
        match self {
            RuleTrace::Baseline { .. } => 1,
            RuleTrace::ScriptPart { .. } => 2,
            RuleTrace::OperatorSplit { .. } => 3,
        }
    }

    pub fn anchor(&self) -> &SymbolId {
        match self {
            RuleTrace::Baseline { root } => root,
            RuleTrace::ScriptPart { parent, .. } => parent,
            RuleTrace::OperatorSplit { operator, .. } => operator,
        }
    }

    /// Rule-specific qualifier: the relation name, the operator side, or
    /// `baseline`.
    pub fn detail(&self) -> &'static str {
        match self {
            RuleTrace::Baseline { .. } => "baseline",
            RuleTrace::ScriptPart { relation, .. } => relation.name(),
            RuleTrace::OperatorSplit { side, .. } => side.name(),
        }
    }

    /// Inverse of `(rule(), anchor(), detail())`.
    pub fn from_parts(rule: u8, anchor: &str, detail: &str) -> Option<Self> {
        let anchor = SymbolId::new(anchor);
        match rule {
            1 => Some(RuleTrace::Baseline { root: anchor }),
            2 => Some(RuleTrace::ScriptPart {
                parent: anchor,
                relation: Relation::from_name(detail)?,
            }),
            3 => {
                let side = match detail {
                    "left" => Side::Left,
                    "right" => Side::Right,
                    _ => return None,
                };
                Some(RuleTrace::OperatorSplit {
                    operator: anchor,
                    side,
                })
            }
            _ => None,
        }
    }
}

impl fmt::Display for RuleTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "rule {} at `{}` ({})",
            self.rule(),
            self.anchor(),
            self.detail()
        )
    }
}

#[derive(Debug, Clone, Default)]
pub struct DecompositionResult {
    pub sub_hmes: Vec<OnlineHme>,
    pub rule_trace: Vec<RuleTrace>,
    /// Candidates dropped for having a single symbol.
    pub discarded_single: usize,
    /// Candidates dropped as exact duplicates.
    pub discarded_duplicate: usize,
}

impl DecompositionResult {
    pub fn len(&self) -> usize {
        self.sub_hmes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sub_hmes.is_empty()
    }

    pub fn latex(&self) -> Vec<&str> {
        self.sub_hmes.iter().map(OnlineHme::latex).collect()
    }

    /// Accepted sub-expressions per rule, indexed `[rule 1, rule 2, rule 3]`.
    pub fn per_rule(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for t in &self.rule_trace {
            counts[usize::from(t.rule()) - 1] += 1;
        }
        counts
    }
}

fn strip_scripts(node: &SrtNode, removed: &mut bool) -> SrtNode {
    let mut out = SrtNode::new(node.symbol().clone(), node.label());
    for (relation, child) in node.children() {
        if relation.is_script() {
            *removed = true;
        } else {
            out.set_child(relation, strip_scripts(child, removed));
        }
    }
    out
}

/// Rule 1. `None` when the tree has no scripts to remove.
pub fn baseline_of(srt: &SymbolRelationTree) -> Option<SymbolRelationTree> {
    let mut removed = false;
    let root = strip_scripts(srt.root(), &mut removed);
    removed.then(|| SymbolRelationTree::new(root))
}

fn script_parts(srt: &SymbolRelationTree) -> Vec<(SymbolRelationTree, RuleTrace)> {
    srt.nodes()
        .into_iter()
        .flat_map(|node| {
            node.children()
                .filter(|(r, _)| *r != Relation::Right)
                .map(|(relation, child)| {
                    (
                        SymbolRelationTree::new(child.clone()),
                        RuleTrace::ScriptPart {
                            parent: node.symbol().clone(),
                            relation,
                        },
                    )
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Rule 2.
pub fn script_parts_of(srt: &SymbolRelationTree) -> Vec<SymbolRelationTree> {
    script_parts(srt).into_iter().map(|(t, _)| t).collect()
}

fn without_right(node: &SrtNode) -> SrtNode {
    let mut copy = node.clone();
    copy.take_child(Relation::Right);
    copy
}

/// A binary operator is a bare symbol from the operator set; a fraction bar
/// or anything carrying scripts is not.
fn is_splittable_operator(node: &SrtNode) -> bool {
    is_binary_operator(node.label()) && node.children().all(|(r, _)| r == Relation::Right)
}

fn operator_splits(srt: &SymbolRelationTree) -> Vec<(SymbolRelationTree, RuleTrace)> {
    let baseline = srt.root().baseline();
    let mut open: Vec<&str> = Vec::new();
    let mut out = Vec::new();
    for (i, node) in baseline.iter().enumerate() {
        let label = node.label();
        if label == "|" {
            if open.last() == Some(&"|") {
                open.pop();
            } else {
                open.push("|");
            }
            continue;
        }
        if is_open_bracket(label) {
            open.push(label);
            continue;
        }
        if is_close_bracket(label) {
            open.pop();
            continue;
        }
        let binary = i > 0 && i + 1 < baseline.len();
        if !open.is_empty() || !binary || !is_splittable_operator(node) {
            continue;
        }
        let left = chain(baseline[..i].iter().map(|n| without_right(n)).collect())
            .expect("left side is non-empty");
        let right = SrtNode::clone(baseline[i + 1]);
        for (side, piece) in [(Side::Left, left), (Side::Right, right.clone())] {
            out.push((
                SymbolRelationTree::new(piece),
                RuleTrace::OperatorSplit {
                    operator: node.symbol().clone(),
                    side,
                },
            ));
        }
    }
    out
}

/// Rule 3.
pub fn operator_splits_of(srt: &SymbolRelationTree) -> Vec<SymbolRelationTree> {
    operator_splits(srt).into_iter().map(|(t, _)| t).collect()
}

/// Builds the sub-expression of `parent` covered by `srt`, carrying only
/// those symbols' strokes with their original coordinates.
pub fn materialize(
    parent: &OnlineHme,
    srt: SymbolRelationTree,
    trace: RuleTrace,
) -> Result<OnlineHme, DecompositionError> {
    let wanted: BTreeSet<&SymbolId> = srt.symbol_ids().into_iter().collect();
    let kept: Vec<&Symbol> = parent
        .symbols()
        .iter()
        .filter(|s| wanted.contains(&s.id))
        .collect();

    let mut stroke_ids: Vec<usize> = kept
        .iter()
        .flat_map(|s| s.strokes.iter().copied())
        .collect();
    stroke_ids.sort_unstable();
    let remap = |old: usize| {
        stroke_ids
            .binary_search(&old)
            .expect("stroke was collected")
    };

    let strokes: Vec<Stroke> = stroke_ids
        .iter()
        .map(|&i| parent.strokes()[i].clone())
        .collect();
    let symbols = kept
        .iter()
        .map(|s| Symbol {
            id: s.id.clone(),
            label: s.label.clone(),
            strokes: s.strokes.iter().map(|&i| remap(i)).collect(),
        })
        .collect();
    let provenance = Provenance {
        decomposition: Some(trace),
        ..parent.provenance().clone()
    };
    Ok(OnlineHme::new(strokes, symbols, srt, provenance)?)
}

/// Single-pass decomposition of one expression.
pub fn decompose(hme: &OnlineHme) -> Result<DecompositionResult, DecompositionError> {
    let srt = hme.srt();
    let mut candidates = Vec::new();
    if let Some(base) = baseline_of(srt) {
        candidates.push((
            base,
            RuleTrace::Baseline {
                root: srt.root().symbol().clone(),
            },
        ));
    }
    candidates.extend(script_parts(srt));
    candidates.extend(operator_splits(srt));

    let mut result = DecompositionResult::default();
    let mut seen: BTreeSet<(String, BTreeSet<SymbolId>)> = BTreeSet::new();
    for (tree, trace) in candidates {
        if tree.len() < MIN_SYMBOLS {
            result.discarded_single += 1;
            continue;
        }
        let key = (
            latex::latex_of(&tree)?,
            tree.symbol_ids().into_iter().cloned().collect(),
        );
        if !seen.insert(key) {
            result.discarded_duplicate += 1;
            continue;
        }
        result.sub_hmes.push(materialize(hme, tree, trace.clone())?);
        result.rule_trace.push(trace);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn tree(src: &str) -> SymbolRelationTree {
        synth::srt_from_latex(src).unwrap()
    }

    fn latexes(trees: &[SymbolRelationTree]) -> Vec<String> {
        trees.iter().map(|t| latex_of(t).unwrap()).collect()
    }

    #[test]
    fn baseline_examples() {
        let b = baseline_of(&tree("x^2+2x+1")).unwrap();
        assert_eq!(latex_of(&b).unwrap(), "x + 2 x + 1");
        assert!(baseline_of(&tree("x+1")).is_none());
        let b = baseline_of(&tree("a_i^2+b")).unwrap();
        assert_eq!(latex_of(&b).unwrap(), "a + b");
        // Scripts nested inside a fraction are removed too.
        let b = baseline_of(&tree("\\frac{x^2}{y}")).unwrap();
        assert_eq!(latex_of(&b).unwrap(), "\\frac { x } { y }");
    }

    #[test]
    fn script_part_examples() {
        assert_eq!(latexes(&script_parts_of(&tree("x^2+2x+1"))), ["2"]);
        assert!(script_parts_of(&tree("x+1")).is_empty());
        assert_eq!(
            latexes(&script_parts_of(&tree("\\frac{a+b}{2}"))),
            ["a + b", "2"]
        );
        assert_eq!(
            latexes(&script_parts_of(&tree("\\sqrt{x^2}"))),
            ["x ^ { 2 }", "2"]
        );
    }

    #[test]
    fn operator_split_examples() {
        assert_eq!(
            latexes(&operator_splits_of(&tree("x^2+2x+1"))),
            ["x ^ { 2 }", "2 x + 1", "x ^ { 2 } + 2 x", "1"]
        );
        assert!(operator_splits_of(&tree("(a+b)")).is_empty());
        assert_eq!(
            latexes(&operator_splits_of(&tree("a=b+c"))),
            ["a", "b + c", "a = b", "c"]
        );
        assert_eq!(
            latexes(&operator_splits_of(&tree("(a+b)=c"))),
            ["( a + b )", "c"]
        );
        assert_eq!(
            latexes(&operator_splits_of(&tree("|a-b|+c"))),
            ["| a - b |", "c"]
        );
        // Leading minus is unary.
        assert!(operator_splits_of(&tree("-x")).is_empty());
        // Fraction bars are not operators.
        assert!(operator_splits_of(&tree("\\frac{a}{b}")).is_empty());
    }

    #[test]
    fn quadratic_decomposition() {
        let hme = synth::hme_from_latex("x^2+2x+1", 1).unwrap();
        let result = decompose(&hme).unwrap();
        assert_eq!(
            result.latex(),
            ["x + 2 x + 1", "x ^ { 2 }", "2 x + 1", "x ^ { 2 } + 2 x"]
        );
        assert_eq!(result.discarded_single, 2);
        assert_eq!(result.per_rule(), [1, 0, 3]);
    }

    #[test]
    fn fraction_and_single_symbol() {
        let hme = synth::hme_from_latex("\\frac{a+b}{2}", 3).unwrap();
        assert_eq!(decompose(&hme).unwrap().latex(), ["a + b"]);
        let x = synth::hme_from_latex("x", 3).unwrap();
        assert!(decompose(&x).unwrap().is_empty());
    }

    #[test]
    fn sub_hmes_keep_original_strokes() {
        let hme = synth::hme_from_latex("x^2+2x+1", 9).unwrap();
        for sub in decompose(&hme).unwrap().sub_hmes {
            for sym in sub.symbols() {
                let orig = hme.symbol(&sym.id).unwrap();
                let a: Vec<_> = sub.symbol_points(sym).collect();
                let b: Vec<_> = hme.symbol_points(orig).collect();
                assert_eq!(a, b);
            }
            let total: usize = sub.symbols().iter().map(|s| s.strokes.len()).sum();
            assert_eq!(total, sub.strokes().len());
        }
    }

    #[test]
    fn same_latex_different_ink_is_kept() {
        let hme = synth::hme_from_latex("\\frac{a+a}{a+a}", 2).unwrap();
        let result = decompose(&hme).unwrap();
        assert_eq!(result.latex(), ["a + a", "a + a"]);
        assert_eq!(result.discarded_duplicate, 0);
    }

    #[test]
    fn trace_parts_round_trip() {
        let traces = [
            RuleTrace::Baseline {
                root: SymbolId::new("r"),
            },
            RuleTrace::ScriptPart {
                parent: SymbolId::new("p"),
                relation: Relation::Under,
            },
            RuleTrace::OperatorSplit {
                operator: SymbolId::new("o"),
                side: Side::Right,
            },
        ];
        for t in traces {
            let back = RuleTrace::from_parts(t.rule(), t.anchor().as_str(), t.detail());
            assert_eq!(back, Some(t));
        }
    }
}
