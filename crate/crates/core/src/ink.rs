//! Core value types for online handwritten expressions.
//!
//! Coordinates are real-valued and the y axis grows downward, matching the
//! trace data found in InkML files. Quantization only happens in
//! [`crate::raster`].

use std::collections::BTreeSet;
use std::fmt;

use crate::decomposition::RuleTrace;
use crate::distortion::DistortionParams;
use crate::latex;
use crate::srt::SymbolRelationTree;

/// Side length of the normalized frame that local distortions act in.
pub const FRAME_SIZE: f64 = 100.0;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum InkError {
    #[error("empty point set")]
    EmptyPointSet,
    #[error("stroke has no points")]
    EmptyStroke,
    #[error("non-finite coordinate ({0}, {1})")]
    NonFinite(f64, f64),
    #[error("symbol `{0}` has no strokes")]
    SymbolWithoutStrokes(SymbolId),
    #[error("symbol `{symbol}` references stroke {index}, but only {count} strokes exist")]
    StrokeOutOfRange {
        symbol: SymbolId,
        index: usize,
        count: usize,
    },
    #[error("stroke {0} is owned by more than one symbol")]
    StrokeSharedBySymbols(usize),
    #[error("stroke {0} is not owned by any symbol")]
    OrphanStroke(usize),
    #[error("duplicate symbol id `{0}`")]
    DuplicateSymbol(SymbolId),
    #[error("relation tree does not match the symbol list: {0}")]
    TreeMismatch(String),
    #[error("stroke geometry changed shape: {0}")]
    ShapeChanged(String),
    #[error(transparent)]
    Latex(#[from] latex::LatexError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenPoint {
    pub x: f64,
    pub y: f64,
}

impl PenPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &PenPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Pen-down to pen-up sequence of points. Never empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Stroke {
    points: Vec<PenPoint>,
}

impl Stroke {
    pub fn new(points: Vec<PenPoint>) -> Result<Self, InkError> {
        if points.is_empty() {
            return Err(InkError::EmptyStroke);
        }
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return Err(InkError::NonFinite(p.x, p.y));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[PenPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BoundingBox {
    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn center(&self) -> PenPoint {
        PenPoint::new(
            0.5 * (self.min_x + self.max_x),
            0.5 * (self.min_y + self.max_y),
        )
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn union(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox {
            min_x: self.min_x.min(other.min_x),
            min_y: self.min_y.min(other.min_y),
            max_x: self.max_x.max(other.max_x),
            max_y: self.max_y.max(other.max_y),
        }
    }

    pub fn contains(&self, p: &PenPoint) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }
}

/// Tight axis-aligned box over `points`.
pub fn bounding_box<'a, I>(points: I) -> Result<BoundingBox, InkError>
where
    I: IntoIterator<Item = &'a PenPoint>,
{
    let mut iter = points.into_iter();
    let first = iter.next().ok_or(InkError::EmptyPointSet)?;
    let init = BoundingBox {
        min_x: first.x,
        min_y: first.y,
        max_x: first.x,
        max_y: first.y,
    };
    Ok(iter.fold(init, |b, p| BoundingBox {
        min_x: b.min_x.min(p.x),
        min_y: b.min_y.min(p.y),
        max_x: b.max_x.max(p.x),
        max_y: b.max_y.max(p.y),
    }))
}

/// Maps `box` affinely onto `[0, 100] x [0, 100]`, one axis at a time.
///
/// An axis with zero extent maps every coordinate to the frame midpoint 50,
/// so single dots and perfectly straight strokes still have a frame.
pub fn normalize_to_frame(points: &[PenPoint], frame: &BoundingBox) -> Vec<PenPoint> {
    let sx = axis_scale(frame.width());
    let sy = axis_scale(frame.height());
    points
        .iter()
        .map(|p| {
            PenPoint::new(
                sx.map_or(FRAME_SIZE / 2.0, |s| (p.x - frame.min_x) * s),
                sy.map_or(FRAME_SIZE / 2.0, |s| (p.y - frame.min_y) * s),
            )
        })
        .collect()
}

/// Inverse of [`normalize_to_frame`]. Degenerate axes collapse back onto
/// the box edge.
pub fn denormalize_from_frame(points: &[PenPoint], frame: &BoundingBox) -> Vec<PenPoint> {
    let w = frame.width();
    let h = frame.height();
    points
        .iter()
        .map(|p| {
            PenPoint::new(
                frame.min_x + p.x / FRAME_SIZE * w,
                frame.min_y + p.y / FRAME_SIZE * h,
            )
        })
        .collect()
}

fn axis_scale(extent: f64) -> Option<f64> {
    (extent > 0.0).then(|| FRAME_SIZE / extent)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymbolId(pub String);

impl SymbolId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SymbolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One segmented math symbol: a label and the strokes (indices into the
/// parent expression) that were written for it.
#[derive(Debug, Clone, PartialEq)]
pub struct Symbol {
    pub id: SymbolId,
    pub label: String,
    pub strokes: Vec<usize>,
}

/// How an expression came to be.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Provenance {
    pub source: String,
    pub decomposition: Option<RuleTrace>,
    pub distortion: Option<DistortionParams>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    None,
    Distortion,
    Decomposition,
    Hybrid,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::None => "none",
            Strategy::Distortion => "distortion",
            Strategy::Decomposition => "decomposition",
            Strategy::Hybrid => "hybrid",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "none" => Some(Strategy::None),
            "distortion" => Some(Strategy::Distortion),
            "decomposition" => Some(Strategy::Decomposition),
            "hybrid" => Some(Strategy::Hybrid),
            _ => None,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Provenance {
    pub fn original(source: impl Into<String>) -> Self {
        Self {
            source: source.into(),
            ..Self::default()
        }
    }

    pub fn strategy(&self) -> Strategy {
        match (&self.decomposition, &self.distortion) {
            (None, None) => Strategy::None,
            (None, Some(_)) => Strategy::Distortion,
            (Some(_), None) => Strategy::Decomposition,
            (Some(_), Some(_)) => Strategy::Hybrid,
        }
    }
}

/// A complete online handwritten expression.
///
/// Construction checks that every stroke belongs to exactly one symbol and
/// that the relation tree covers every symbol exactly once. The LaTeX
/// ground truth is always regenerated from the tree.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineHme {
    strokes: Vec<Stroke>,
    symbols: Vec<Symbol>,
    srt: SymbolRelationTree,
    latex: String,
    provenance: Provenance,
}

impl OnlineHme {
    pub fn new(
        strokes: Vec<Stroke>,
        symbols: Vec<Symbol>,
        srt: SymbolRelationTree,
        provenance: Provenance,
    ) -> Result<Self, InkError> {
        let mut owner = vec![false; strokes.len()];
        let mut ids = BTreeSet::new();
        for sym in &symbols {
            if !ids.insert(&sym.id) {
                return Err(InkError::DuplicateSymbol(sym.id.clone()));
            }
            if sym.strokes.is_empty() {
                return Err(InkError::SymbolWithoutStrokes(sym.id.clone()));
            }
            for &i in &sym.strokes {
                let slot = owner.get_mut(i).ok_or_else(|| InkError::StrokeOutOfRange {
                    symbol: sym.id.clone(),
                    index: i,
                    count: strokes.len(),
                })?;
                if *slot {
                    return Err(InkError::StrokeSharedBySymbols(i));
                }
                *slot = true;
            }
        }
        if let Some(i) = owner.iter().position(|o| !o) {
            return Err(InkError::OrphanStroke(i));
        }

        let mut seen = BTreeSet::new();
        for node in srt.nodes() {
            if !seen.insert(node.symbol()) {
                return Err(InkError::TreeMismatch(format!(
                    "symbol `{}` appears twice",
                    node.symbol()
                )));
            }
            let sym = symbols
                .iter()
                .find(|s| &s.id == node.symbol())
                .ok_or_else(|| {
                    InkError::TreeMismatch(format!("unknown symbol `{}`", node.symbol()))
                })?;
            if sym.label != node.label() {
                return Err(InkError::TreeMismatch(format!(
                    "symbol `{}` is labelled `{}` but the tree says `{}`",
                    sym.id,
                    sym.label,
                    node.label()
                )));
            }
        }
        if seen.len() != symbols.len() {
            let missing = symbols
                .iter()
                .find(|s| !seen.contains(&s.id))
                .map(|s| s.id.clone());
            return Err(InkError::TreeMismatch(format!(
                "symbol `{}` is missing from the tree",
                missing.unwrap_or_else(|| SymbolId::new("?"))
            )));
        }

        let latex = latex::latex_of(&srt)?;
        Ok(Self {
            strokes,
            symbols,
            srt,
            latex,
            provenance,
        })
    }

    pub fn strokes(&self) -> &[Stroke] {
        &self.strokes
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn srt(&self) -> &SymbolRelationTree {
        &self.srt
    }

    pub fn latex(&self) -> &str {
        &self.latex
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn symbol(&self, id: &SymbolId) -> Option<&Symbol> {
        self.symbols.iter().find(|s| &s.id == id)
    }

    pub fn points(&self) -> impl Iterator<Item = &PenPoint> {
        self.strokes.iter().flat_map(|s| s.points().iter())
    }

    pub fn symbol_points<'a>(
        &'a self,
        symbol: &'a Symbol,
    ) -> impl Iterator<Item = &'a PenPoint> + 'a {
        symbol
            .strokes
            .iter()
            .flat_map(move |&i| self.strokes[i].points().iter())
    }

    pub fn bounding_box(&self) -> BoundingBox {
        // Non-empty: strokes are non-empty and every symbol owns at least one.
        bounding_box(self.points()).expect("expression has ink")
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Replaces the geometry. Stroke count and per-stroke point counts must
    /// be unchanged.
    pub fn with_strokes(&self, strokes: Vec<Stroke>) -> Result<Self, InkError> {
        if strokes.len() != self.strokes.len() {
            return Err(InkError::ShapeChanged(format!(
                "{} strokes instead of {}",
                strokes.len(),
                self.strokes.len()
            )));
        }
        for (i, (new, old)) in strokes.iter().zip(&self.strokes).enumerate() {
            if new.len() != old.len() {
                return Err(InkError::ShapeChanged(format!(
                    "stroke {i} has {} points instead of {}",
                    new.len(),
                    old.len()
                )));
            }
        }
        Ok(Self {
            strokes,
            ..self.clone()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn pts(v: &[(f64, f64)]) -> Vec<PenPoint> {
        v.iter().map(|&(x, y)| PenPoint::new(x, y)).collect()
    }

    fn bbox(a: f64, b: f64, c: f64, d: f64) -> BoundingBox {
        BoundingBox {
            min_x: a,
            min_y: b,
            max_x: c,
            max_y: d,
        }
    }

    #[test]
    fn bounding_box_examples() {
        assert_eq!(
            bounding_box(&pts(&[(0.0, 0.0)])).unwrap(),
            bbox(0.0, 0.0, 0.0, 0.0)
        );
        assert_eq!(
            bounding_box(&pts(&[(1.0, 2.0), (3.0, -1.0)])).unwrap(),
            bbox(1.0, -1.0, 3.0, 2.0)
        );
        assert_eq!(
            bounding_box(&pts(&[(5.0, 5.0), (5.0, 5.0), (5.0, 5.0)])).unwrap(),
            bbox(5.0, 5.0, 5.0, 5.0)
        );
        assert_eq!(bounding_box(&[]), Err(InkError::EmptyPointSet));
        assert_eq!(InkError::EmptyPointSet.to_string(), "empty point set");
    }

    #[test]
    fn normalize_examples() {
        let b = bbox(0.0, 0.0, 10.0, 10.0);
        assert_eq!(
            normalize_to_frame(&pts(&[(5.0, 5.0)]), &b),
            pts(&[(50.0, 50.0)])
        );
        assert_eq!(
            normalize_to_frame(&pts(&[(0.0, 10.0)]), &b),
            pts(&[(0.0, 100.0)])
        );
        // Zero-width box: x goes to the midpoint, y scales normally.
        let thin = bbox(2.0, 2.0, 2.0, 8.0);
        let out = normalize_to_frame(&pts(&[(2.0, 5.0)]), &thin);
        assert_abs_diff_eq!(out[0].x, 50.0);
        assert_abs_diff_eq!(out[0].y, 50.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_axis_denormalizes_to_edge() {
        let dot = bbox(3.0, 4.0, 3.0, 4.0);
        let out = denormalize_from_frame(&pts(&[(17.0, 93.0)]), &dot);
        assert_eq!(out, pts(&[(3.0, 4.0)]));
    }

    #[test]
    fn empty_stroke_rejected() {
        assert_eq!(Stroke::new(vec![]), Err(InkError::EmptyStroke));
        assert!(matches!(
            Stroke::new(pts(&[(f64::NAN, 0.0)])),
            Err(InkError::NonFinite(..))
        ));
    }

    proptest! {
        #[test]
        fn frame_round_trip(
            raw in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 2..20)
        ) {
            let points = pts(&raw);
            let b = bounding_box(&points).unwrap();
            prop_assume!(b.width() > 1e-6 && b.height() > 1e-6);
            let framed = normalize_to_frame(&points, &b);
            let fb = bounding_box(&framed).unwrap();
            prop_assert!(fb.min_x >= -1e-9 && fb.min_y >= -1e-9);
            prop_assert!(fb.max_x <= 100.0 + 1e-9 && fb.max_y <= 100.0 + 1e-9);
            let back = denormalize_from_frame(&framed, &b);
            for (p, q) in points.iter().zip(&back) {
                prop_assert!((p.x - q.x).abs() <= 1e-9 && (p.y - q.y).abs() <= 1e-9);
            }
        }
    }
}
