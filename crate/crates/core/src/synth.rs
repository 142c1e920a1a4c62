//! Synthetic expressions built from LaTeX.
//!
//! Useful as stub corpora and test fixtures: each symbol gets a box from a
//! simple typesetting pass and a few jittered strokes inside that box. The
//! ink is not meant to look like real handwriting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ink::{
    BoundingBox, InkError, OnlineHme, PenPoint, Provenance, Stroke, Symbol, SymbolId,
};
use crate::latex::{parse_latex, LayoutNode, FRACTION_BAR, SQRT};
use crate::srt::{Relation, SrtNode, SymbolRelationTree};

fn to_srt(node: &LayoutNode, next: &mut usize) -> SrtNode {
    let id = SymbolId::new(format!("s{next}"));
    *next += 1;
    let mut out = SrtNode::new(id, node.label.clone());
    for (relation, child) in &node.children {
        out.set_child(*relation, to_srt(child, next));
    }
    out
}

/// Relation tree for `src` with fresh ids `s0, s1, ..` in pre-order.
pub fn srt_from_latex(src: &str) -> Result<SymbolRelationTree, InkError> {
    let layout = parse_latex(src)?;
    Ok(SymbolRelationTree::new(to_srt(&layout, &mut 0)))
}

#[derive(Debug, Clone, Copy)]
enum Shape {
    Glyph,
    Bar,
    Radical { sign_width: f64 },
}

struct Placed {
    id: SymbolId,
    label: String,
    shape: Shape,
    frame: BoundingBox,
}

fn translate(placed: &mut [Placed], dx: f64, dy: f64) {
    for p in placed {
        p.frame.min_x += dx;
        p.frame.max_x += dx;
        p.frame.min_y += dy;
        p.frame.max_y += dy;
    }
}

/// Lays out a `Right` chain starting at x = 0 with its axis at y = 0.
/// Returns the placed symbols and the chain width.
fn layout_chain(start: &SrtNode, size: f64) -> (Vec<Placed>, f64) {
    let gap = 0.15 * size;
    let mut placed = Vec::new();
    let mut x = 0.0;
    for node in start.baseline() {
        let (mut items, width) = layout_node(node, size);
        translate(&mut items, x, 0.0);
        placed.extend(items);
        x += width + gap;
    }
    (placed, (x - gap).max(0.0))
}

fn layout_node(node: &SrtNode, size: f64) -> (Vec<Placed>, f64) {
    let half = size / 2.0;
    let mut out = Vec::new();
    let own = |shape, frame| Placed {
        id: node.symbol().clone(),
        label: node.label().to_string(),
        shape,
        frame,
    };
    let mut width;
    let over = node.child(Relation::Over);
    let under = node.child(Relation::Under);

    if node.label() == FRACTION_BAR && (over.is_some() || under.is_some()) {
        let child_size = 0.8 * size;
        let (mut num, wn) = over.map_or((Vec::new(), 0.0), |n| layout_chain(n, child_size));
        let (mut den, wd) = under.map_or((Vec::new(), 0.0), |n| layout_chain(n, child_size));
        width = wn.max(wd) + 0.2 * size;
        translate(&mut num, (width - wn) / 2.0, -0.7 * size);
        translate(&mut den, (width - wd) / 2.0, 0.7 * size);
        out.push(own(
            Shape::Bar,
            BoundingBox {
                min_x: 0.0,
                min_y: 0.0,
                max_x: width,
                max_y: 0.0,
            },
        ));
        out.extend(num);
        out.extend(den);
    } else if node.label() == SQRT {
        let sign = 0.6 * size;
        let (mut inner, wi) = node
            .child(Relation::Inside)
            .map_or((Vec::new(), 0.0), |n| layout_chain(n, size));
        translate(&mut inner, sign + 0.1 * size, 0.0);
        width = sign + 0.2 * size + wi;
        out.push(own(
            Shape::Radical { sign_width: sign },
            BoundingBox {
                min_x: 0.0,
                min_y: -0.7 * size,
                max_x: width,
                max_y: half,
            },
        ));
        out.extend(inner);
    } else {
        let big = over.is_some() || under.is_some();
        let glyph = if big { 1.3 * size } else { size };
        width = 0.6 * glyph;
        let frame = match node.label() {
            "-" => BoundingBox {
                min_x: 0.0,
                min_y: 0.0,
                max_x: width,
                max_y: 0.0,
            },
            "=" | "+" | "\\times" => BoundingBox {
                min_x: 0.0,
                min_y: -0.25 * size,
                max_x: width,
                max_y: 0.25 * size,
            },
            "." | "," => BoundingBox {
                min_x: 0.0,
                min_y: 0.4 * size,
                max_x: 0.0,
                max_y: 0.4 * size,
            },
            _ => BoundingBox {
                min_x: 0.0,
                min_y: -glyph / 2.0,
                max_x: width,
                max_y: glyph / 2.0,
            },
        };
        let shape = if node.label() == "-" {
            Shape::Bar
        } else {
            Shape::Glyph
        };
        out.push(own(shape, frame));
        let limit_size = 0.6 * size;
        for (rel, dy) in [
            (Relation::Under, glyph / 2.0 + 0.5 * size),
            (Relation::Over, -glyph / 2.0 - 0.5 * size),
        ] {
            if let Some(child) = node.child(rel) {
                let (mut items, w) = layout_chain(child, limit_size);
                translate(&mut items, (width - w) / 2.0, dy);
                out.extend(items);
            }
        }
    }

    let script_size = 0.6 * size;
    let mut script_width: f64 = 0.0;
    for (rel, dy) in [
        (Relation::Subscript, 0.45 * size),
        (Relation::Superscript, -0.55 * size),
    ] {
        if let Some(child) = node.child(rel) {
            let (mut items, w) = layout_chain(child, script_size);
            translate(&mut items, width + 0.05 * size, dy);
            out.extend(items);
            script_width = script_width.max(w + 0.05 * size);
        }
    }
    width += script_width;
    (out, width)
}

fn jitter<R: Rng>(rng: &mut R, amount: f64) -> f64 {
    if amount > 0.0 {
        rng.random_range(-amount..=amount)
    } else {
        0.0
    }
}

fn strokes_for<R: Rng>(placed: &Placed, rng: &mut R) -> Vec<Vec<PenPoint>> {
    let b = placed.frame;
    let j = 0.03 * b.width().max(b.height());
    let pt = |rng: &mut R, x: f64, y: f64| PenPoint::new(x + jitter(rng, j), y + jitter(rng, j));
    match placed.shape {
        Shape::Bar => vec![vec![
            PenPoint::new(b.min_x, b.min_y),
            PenPoint::new(b.max_x, b.max_y),
        ]],
        Shape::Radical { sign_width } => {
            let mid = 0.5 * (b.min_y + b.max_y);
            vec![vec![
                pt(rng, b.min_x, mid),
                pt(rng, b.min_x + 0.3 * sign_width, b.max_y),
                pt(rng, b.min_x + sign_width, b.min_y),
                PenPoint::new(b.max_x, b.min_y),
            ]]
        }
        Shape::Glyph => {
            if b.width() == 0.0 && b.height() == 0.0 {
                return vec![vec![PenPoint::new(b.min_x, b.min_y)]];
            }
            match placed.label.as_str() {
                "=" => vec![
                    vec![pt(rng, b.min_x, b.min_y), pt(rng, b.max_x, b.min_y)],
                    vec![pt(rng, b.min_x, b.max_y), pt(rng, b.max_x, b.max_y)],
                ],
                "+" | "x" | "\\times" => vec![
                    vec![pt(rng, b.min_x, b.min_y), pt(rng, b.max_x, b.max_y)],
                    vec![pt(rng, b.max_x, b.min_y), pt(rng, b.min_x, b.max_y)],
                ],
                _ => {
                    let n = rng.random_range(5..=9);
                    vec![(0..n)
                        .map(|i| {
                            let t = i as f64 / (n - 1) as f64;
                            let y = if i % 2 == 0 { b.min_y } else { b.max_y };
                            pt(rng, b.min_x + t * b.width(), y)
                        })
                        .collect()]
                }
            }
        }
    }
}

/// A complete synthetic expression for `src`. Symbol `i` owns a contiguous
/// run of strokes, in pre-order of the relation tree.
pub fn hme_from_latex(src: &str, seed: u64) -> Result<OnlineHme, InkError> {
    let srt = srt_from_latex(src)?;
    let (mut placed, _) = layout_chain(srt.root(), 100.0);
    // Put the ink in positive screen coordinates.
    translate(&mut placed, 200.0, 400.0);
    let order: Vec<&SymbolId> = srt.symbol_ids();
    placed.sort_by_key(|p| order.iter().position(|id| **id == p.id));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut strokes = Vec::new();
    let mut symbols = Vec::new();
    for p in &placed {
        let mut owned = Vec::new();
        for pts in strokes_for(p, &mut rng) {
            owned.push(strokes.len());
            strokes.push(Stroke::new(pts)?);
        }
        symbols.push(Symbol {
            id: p.id.clone(),
            label: p.label.clone(),
            strokes: owned,
        });
    }
    OnlineHme::new(
        strokes,
        symbols,
        srt,
        Provenance::original(format!("synth:{src}")),
    )
}
