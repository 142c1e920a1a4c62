//! Local and global distortion of online expressions.
//!
//! Local models act per symbol in a `[0, 100]²` frame (see
//! [`crate::ink::normalize_to_frame`]):
//!
//! ```text
//! shear, horizontal       x' = x + y·tan α
//! shear, vertical         y' = y + x·tan α
//! shrink, vertical        x' = x·(sin(π/2 − α) − y·sin α / 100)
//! shrink, horizontal      y' = y·(sin(π/2 − α) − x·sin α / 100)
//! perspective, vertical   x' = ⅔·(x + 50·cos(4α·(x − 50)/100))
//!                         y' = ⅔·y·(sin(π/2 − α) − y·sin α / 100)
//! perspective, horizontal x' = ⅔·x·(sin(π/2 − α) − x·sin α / 100)
//!                         y' = ⅔·(y + 50·cos(4α·(y − 50)/100))
//! ```
//!
//! Models 4 and 5 follow shrink or perspective with a rotation by β about
//! the frame center. Afterwards each symbol is mapped back to its own box
//! and re-centered on its original center, and the whole expression is
//! rotated by γ and scaled by k about its bounding-box center.
//!
//! Rotation uses the orthogonal matrix `x' = x cos θ + y sin θ`,
//! `y' = −x sin θ + y cos θ`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ink::{
    bounding_box, denormalize_from_frame, normalize_to_frame, InkError, OnlineHme, PenPoint,
    Provenance, Stroke, Symbol, FRAME_SIZE,
};

pub const ANGLE_LIMIT_DEG: f64 = 10.0;
pub const SCALE_MIN: f64 = 0.7;
pub const SCALE_MAX: f64 = 1.3;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum DistortionError {
    #[error("shear angle {0}° is at or beyond the tangent singularity")]
    ShearSingular(f64),
    #[error("scale factor must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("parameter {name} = {value} outside [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("unknown local model id {0} (expected 1..=5)")]
    UnknownModel(u8),
    #[error("symbol `{0}` is not part of the expression")]
    ForeignSymbol(String),
    #[error(transparent)]
    Ink(#[from] InkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    Horizontal,
    Vertical,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Horizontal => "horizontal",
            Axis::Vertical => "vertical",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "horizontal" | "h" | "H" => Some(Axis::Horizontal),
            "vertical" | "v" | "V" => Some(Axis::Vertical),
            _ => None,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The five local models, numbered as in the generation protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LocalModel {
    Shear = 1,
    Shrink = 2,
    Perspective = 3,
    ShrinkRotation = 4,
    PerspectiveRotation = 5,
}

impl LocalModel {
    pub const ALL: [LocalModel; 5] = [
        LocalModel::Shear,
        LocalModel::Shrink,
        LocalModel::Perspective,
        LocalModel::ShrinkRotation,
        LocalModel::PerspectiveRotation,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Result<Self, DistortionError> {
        Self::ALL
            .into_iter()
            .find(|m| m.id() == id)
            .ok_or(DistortionError::UnknownModel(id))
    }
}

/// One sampled distortion: local model, axis and α, β, then global k, γ.
/// Angles are in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionParams {
    pub model: LocalModel,
    pub axis: Axis,
    pub alpha: f64,
    pub beta: f64,
    pub k: f64,
    pub gamma: f64,
}

impl DistortionParams {
    /// Validated constructor; enforces the sampling ranges.
    pub fn new(
        id: u8,
        axis: Axis,
        alpha: f64,
        beta: f64,
        k: f64,
        gamma: f64,
    ) -> Result<Self, DistortionError> {
        let model = LocalModel::from_id(id)?;
        check_range("alpha", alpha, -ANGLE_LIMIT_DEG, ANGLE_LIMIT_DEG)?;
        check_range("beta", beta, -ANGLE_LIMIT_DEG, ANGLE_LIMIT_DEG)?;
        check_range("gamma", gamma, -ANGLE_LIMIT_DEG, ANGLE_LIMIT_DEG)?;
        check_range("k", k, SCALE_MIN, SCALE_MAX)?;
        Ok(Self {
            model,
            axis,
            alpha,
            beta,
            k,
            gamma,
        })
    }

    /// `(id=1, α=0, β=0, k=1, γ=0)`: leaves geometry unchanged.
    pub fn identity() -> Self {
        Self {
            model: LocalModel::Shear,
            axis: Axis::Horizontal,
            alpha: 0.0,
            beta: 0.0,
            k: 1.0,
            gamma: 0.0,
        }
    }

    pub fn id(&self) -> u8 {
        self.model.id()
    }
}

fn check_range(name: &'static str, value: f64, min: f64, max: f64) -> Result<(), DistortionError> {
    if value.is_finite() && (min..=max).contains(&value) {
        Ok(())
    } else {
        Err(DistortionError::OutOfRange {
            name,
            value,
            min,
            max,
        })
    }
}

/// Deterministic parameter stream for the expression at `index` under
/// `master_seed`. Streams for different indices are independent, so
/// work can be split across threads without changing results.
pub fn rng_for(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Draws `(id, axis, α, β, k, γ)` uniformly over their ranges.
pub fn sample_params<R: Rng + ?Sized>(rng: &mut R) -> DistortionParams {
    let model = LocalModel::ALL[rng.random_range(0..LocalModel::ALL.len())];
    let axis = if rng.random_bool(0.5) {
        Axis::Horizontal
    } else {
        Axis::Vertical
    };
    let alpha = rng.random_range(-ANGLE_LIMIT_DEG..=ANGLE_LIMIT_DEG);
    let beta = rng.random_range(-ANGLE_LIMIT_DEG..=ANGLE_LIMIT_DEG);
    let k = rng.random_range(SCALE_MIN..=SCALE_MAX);
    let gamma = rng.random_range(-ANGLE_LIMIT_DEG..=ANGLE_LIMIT_DEG);
    DistortionParams {
        model,
        axis,
        alpha,
        beta,
        k,
        gamma,
    }
}

pub fn apply_shear(
    points: &[PenPoint],
    axis: Axis,
    alpha_deg: f64,
) -> Result<Vec<PenPoint>, DistortionError> {
    if !alpha_deg.is_finite() || alpha_deg.abs() >= 90.0 {
        return Err(DistortionError::ShearSingular(alpha_deg));
    }
    let t = alpha_deg.to_radians().tan();
    Ok(points
        .iter()
        .map(|p| match axis {
            Axis::Horizontal => PenPoint::new(p.x + p.y * t, p.y),
            Axis::Vertical => PenPoint::new(p.x, p.y + p.x * t),
        })
        .collect())
}

/// `sin(π/2 − α) − v·sin α / 100`, the taper shared by shrink and
/// perspective.
fn taper(alpha: f64, v: f64) -> f64 {
    (std::f64::consts::FRAC_PI_2 - alpha).sin() - v * alpha.sin() / FRAME_SIZE
}

pub fn apply_shrink(points: &[PenPoint], axis: Axis, alpha_deg: f64) -> Vec<PenPoint> {
    let a = alpha_deg.to_radians();
    points
        .iter()
        .map(|p| match axis {
            Axis::Vertical => PenPoint::new(p.x * taper(a, p.y), p.y),
            Axis::Horizontal => PenPoint::new(p.x, p.y * taper(a, p.x)),
        })
        .collect()
}

/// Not the identity at α = 0: the ⅔ scale and the `+50·cos` shift are part
/// of the model.
pub fn apply_perspective(points: &[PenPoint], axis: Axis, alpha_deg: f64) -> Vec<PenPoint> {
    let a = alpha_deg.to_radians();
    let half = FRAME_SIZE / 2.0;
    let bend = |v: f64| (2.0 / 3.0) * (v + half * (4.0 * a * (v - half) / FRAME_SIZE).cos());
    points
        .iter()
        .map(|p| match axis {
            Axis::Vertical => PenPoint::new(bend(p.x), (2.0 / 3.0) * p.y * taper(a, p.y)),
            Axis::Horizontal => PenPoint::new((2.0 / 3.0) * p.x * taper(a, p.x), bend(p.y)),
        })
        .collect()
}

pub fn apply_rotation(points: &[PenPoint], angle_deg: f64, pivot: PenPoint) -> Vec<PenPoint> {
    let (s, c) = angle_deg.to_radians().sin_cos();
    points
        .iter()
        .map(|p| {
            let dx = p.x - pivot.x;
            let dy = p.y - pivot.y;
            PenPoint::new(pivot.x + dx * c + dy * s, pivot.y - dx * s + dy * c)
        })
        .collect()
}

pub fn apply_scaling(
    points: &[PenPoint],
    k: f64,
    pivot: PenPoint,
) -> Result<Vec<PenPoint>, DistortionError> {
    if !(k.is_finite() && k > 0.0) {
        return Err(DistortionError::NonPositiveScale(k));
    }
    Ok(points
        .iter()
        .map(|p| PenPoint::new(pivot.x + k * (p.x - pivot.x), pivot.y + k * (p.y - pivot.y)))
        .collect())
}

/// Runs the local model selected by `params` on frame coordinates.
pub fn apply_local(
    framed: &[PenPoint],
    params: &DistortionParams,
) -> Result<Vec<PenPoint>, DistortionError> {
    let center = PenPoint::new(FRAME_SIZE / 2.0, FRAME_SIZE / 2.0);
    Ok(match params.model {
        LocalModel::Shear => apply_shear(framed, params.axis, params.alpha)?,
        LocalModel::Shrink => apply_shrink(framed, params.axis, params.alpha),
        LocalModel::Perspective => apply_perspective(framed, params.axis, params.alpha),
        LocalModel::ShrinkRotation => apply_rotation(
            &apply_shrink(framed, params.axis, params.alpha),
            params.beta,
            center,
        ),
        LocalModel::PerspectiveRotation => apply_rotation(
            &apply_perspective(framed, params.axis, params.alpha),
            params.beta,
            center,
        ),
    })
}

/// Distorts one symbol in its own frame and returns the new strokes as
/// `(stroke index, stroke)` pairs. The distorted symbol keeps its original
/// bounding-box center.
pub fn distort_symbol(
    hme: &OnlineHme,
    symbol: &Symbol,
    params: &DistortionParams,
) -> Result<Vec<(usize, Stroke)>, DistortionError> {
    if hme.symbol(&symbol.id) != Some(symbol) {
        return Err(DistortionError::ForeignSymbol(symbol.id.to_string()));
    }
    let points: Vec<PenPoint> = hme.symbol_points(symbol).copied().collect();
    let frame = bounding_box(&points)?;
    let framed = normalize_to_frame(&points, &frame);
    let moved = denormalize_from_frame(&apply_local(&framed, params)?, &frame);

    let old_center = frame.center();
    let new_center = bounding_box(&moved)?.center();
    let dx = old_center.x - new_center.x;
    let dy = old_center.y - new_center.y;

    let mut flat = moved.into_iter().map(|p| PenPoint::new(p.x + dx, p.y + dy));
    symbol
        .strokes
        .iter()
        .map(|&i| {
            let n = hme.strokes()[i].len();
            let pts: Vec<PenPoint> = flat.by_ref().take(n).collect();
            Ok((i, Stroke::new(pts)?))
        })
        .collect()
}

/// Full pattern generation for one expression: every symbol through the
/// same local model, then global rotation by γ and scaling by k about the
/// expression's bounding-box center. Structure and labels are untouched.
pub fn distort_hme(
    hme: &OnlineHme,
    params: &DistortionParams,
) -> Result<OnlineHme, DistortionError> {
    let mut strokes: Vec<Stroke> = hme.strokes().to_vec();
    for symbol in hme.symbols() {
        for (i, stroke) in distort_symbol(hme, symbol, params)? {
            strokes[i] = stroke;
        }
    }

    let all: Vec<PenPoint> = strokes
        .iter()
        .flat_map(|s| s.points().iter().copied())
        .collect();
    let pivot = bounding_box(&all)?.center();
    let rotated = apply_rotation(&all, params.gamma, pivot);
    let scaled = apply_scaling(&rotated, params.k, pivot)?;

    let mut flat = scaled.into_iter();
    let strokes = strokes
        .iter()
        .map(|s| Stroke::new(flat.by_ref().take(s.len()).collect()))
        .collect::<Result<Vec<_>, _>>()?;

    let provenance = Provenance {
        distortion: Some(*params),
        ..hme.provenance().clone()
    };
    Ok(hme.with_strokes(strokes)?.with_provenance(provenance))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn p(x: f64, y: f64) -> PenPoint {
        PenPoint::new(x, y)
    }

    // Scalar evaluations computed outside this crate.
    const TAN10: f64 = 0.176_326_980_708_464_97;
    const SIN10: f64 = 0.173_648_177_666_930_35;
    const SIN80: f64 = 0.984_807_753_012_208;

    #[test]
    fn shear_examples() {
        let h = apply_shear(&[p(10.0, 20.0)], Axis::Horizontal, 10.0).unwrap();
        assert_abs_diff_eq!(h[0].x, 10.0 + 20.0 * TAN10, epsilon = 1e-12);
        assert_abs_diff_eq!(h[0].x, 13.5265, epsilon = 1e-3);
        assert_eq!(h[0].y, 20.0);
        let v = apply_shear(&[p(10.0, 20.0)], Axis::Vertical, 10.0).unwrap();
        assert_abs_diff_eq!(v[0].y, 21.7633, epsilon = 1e-3);
        assert_eq!(
            apply_shear(&[p(3.0, 7.0)], Axis::Vertical, 0.0).unwrap(),
            [p(3.0, 7.0)]
        );
        assert!(matches!(
            apply_shear(&[p(1.0, 1.0)], Axis::Horizontal, 90.0),
            Err(DistortionError::ShearSingular(_))
        ));
    }

    #[test]
    fn shrink_examples() {
        let v = apply_shrink(&[p(40.0, 60.0)], Axis::Vertical, 10.0);
        assert_abs_diff_eq!(
            v[0].x,
            40.0 * (SIN80 - 60.0 * SIN10 / 100.0),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(v[0].x, 35.2248, epsilon = 1e-3);
        assert_eq!(v[0].y, 60.0);
        let h = apply_shrink(&[p(40.0, 60.0)], Axis::Horizontal, 10.0);
        assert_abs_diff_eq!(h[0].y, 54.920_908_916_726_15, epsilon = 1e-9);
        assert_eq!(
            apply_shrink(&[p(12.5, 80.0)], Axis::Vertical, 0.0),
            [p(12.5, 80.0)]
        );
    }

    #[test]
    fn perspective_examples() {
        let a = apply_perspective(&[p(50.0, 0.0)], Axis::Vertical, 0.0);
        assert_abs_diff_eq!(a[0].x, 66.6667, epsilon = 1e-3);
        assert_abs_diff_eq!(a[0].y, 0.0);
        let b = apply_perspective(&[p(0.0, 0.0)], Axis::Vertical, 0.0);
        assert_abs_diff_eq!(b[0].x, 33.3333, epsilon = 1e-3);
        let c = apply_perspective(&[p(50.0, 100.0)], Axis::Vertical, 10.0);
        assert_abs_diff_eq!(c[0].x, 66.6667, epsilon = 1e-3);
        assert_abs_diff_eq!(c[0].y, 54.077_305_023_018_5, epsilon = 1e-9);
        // Horizontal variant mirrors the vertical one across the diagonal.
        let d = apply_perspective(&[p(100.0, 50.0)], Axis::Horizontal, 10.0);
        assert_abs_diff_eq!(d[0].x, c[0].y, epsilon = 1e-12);
        assert_abs_diff_eq!(d[0].y, c[0].x, epsilon = 1e-12);
    }

    #[test]
    fn rotation_and_scaling_examples() {
        let r = apply_rotation(&[p(100.0, 0.0)], 10.0, p(0.0, 0.0));
        assert_abs_diff_eq!(r[0].x, 98.4808, epsilon = 1e-4);
        assert_abs_diff_eq!(r[0].y, -17.3648, epsilon = 1e-4);
        assert_eq!(
            apply_rotation(&[p(4.0, 5.0)], 0.0, p(1.0, 1.0)),
            [p(4.0, 5.0)]
        );
        let s = apply_scaling(&[p(2.0, 3.0)], 0.7, p(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(s[0].x, 1.4, epsilon = 1e-12);
        assert_abs_diff_eq!(s[0].y, 2.1, epsilon = 1e-12);
        assert_eq!(
            apply_scaling(&[p(2.0, 3.0)], 1.0, p(9.0, 9.0)).unwrap(),
            [p(2.0, 3.0)]
        );
        assert!(apply_scaling(&[p(2.0, 3.0)], 0.0, p(0.0, 0.0)).is_err());
        assert!(apply_scaling(&[p(2.0, 3.0)], -1.0, p(0.0, 0.0)).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(DistortionParams::new(3, Axis::Vertical, 5.0, -2.0, 1.1, 4.0).is_ok());
        assert!(matches!(
            DistortionParams::new(6, Axis::Vertical, 0.0, 0.0, 1.0, 0.0),
            Err(DistortionError::UnknownModel(6))
        ));
        assert!(DistortionParams::new(0, Axis::Vertical, 0.0, 0.0, 1.0, 0.0).is_err());
        assert!(DistortionParams::new(1, Axis::Vertical, 10.5, 0.0, 1.0, 0.0).is_err());
        assert!(DistortionParams::new(1, Axis::Vertical, 0.0, 0.0, 1.31, 0.0).is_err());
        assert!(DistortionParams::new(1, Axis::Vertical, 0.0, 0.0, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let a: Vec<_> = (0..20)
            .map({
                let mut r = rng_for(42, 7);
                move |_| sample_params(&mut r)
            })
            .collect();
        let b: Vec<_> = (0..20)
            .map({
                let mut r = rng_for(42, 7);
                move |_| sample_params(&mut r)
            })
            .collect();
        assert_eq!(a, b);
        let c = sample_params(&mut rng_for(42, 8));
        assert_ne!(a[0], c);
    }

    proptest! {
        #[test]
        fn rotation_is_isometry(
            x in -500f64..500.0, y in -500f64..500.0,
            cx in -50f64..50.0, cy in -50f64..50.0,
            theta in -180f64..180.0,
        ) {
            let pivot = p(cx, cy);
            let r = apply_rotation(&[p(x, y)], theta, pivot);
            let before = p(x, y).distance(&pivot);
            prop_assert!((r[0].distance(&pivot) - before).abs() <= 1e-9);
        }

        #[test]
        fn perspective_stays_in_band(
            x in 0f64..=100.0, y in 0f64..=100.0,
            alpha in -10f64..=10.0, vertical in any::<bool>(),
        ) {
            let axis = if vertical { Axis::Vertical } else { Axis::Horizontal };
            let q = apply_perspective(&[p(x, y)], axis, alpha)[0];
            prop_assert!((-35.0..=101.0).contains(&q.x), "{q:?}");
            prop_assert!((-35.0..=101.0).contains(&q.y), "{q:?}");
        }

        #[test]
        fn zero_angle_identity_for_shear_and_shrink(
            x in 0f64..=100.0, y in 0f64..=100.0, vertical in any::<bool>(),
        ) {
            let axis = if vertical { Axis::Vertical } else { Axis::Horizontal };
            let pts = [p(x, y)];
            prop_assert_eq!(apply_shear(&pts, axis, 0.0).unwrap(), pts);
            let s = apply_shrink(&pts, axis, 0.0)[0];
            prop_assert!((s.x - x).abs() <= 1e-9 && (s.y - y).abs() <= 1e-9);
        }
    }
}
