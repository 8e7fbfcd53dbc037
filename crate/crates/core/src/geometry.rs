//! Convex bodies with analytic membership and chord oracles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, solve_dense};

/// Closed interval of the real line, possibly unbounded on either side.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "interval [{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, s: f64) -> bool {
        self.lo <= s && s <= self.hi
    }
}

/// Polytope `{x : a_i·x ≤ b_i}` with a stored strictly interior point.
#[derive(Clone, Debug, PartialEq)]
pub struct Polytope {
    rows: Vec<Vec<f64>>,
    offsets: Vec<f64>,
    interior: Vec<f64>,
    radius_bound: Option<f64>,
}

impl Polytope {
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn interior_point(&self) -> &[f64] {
        &self.interior
    }

    /// Vertices by brute-force enumeration of d-subsets of facets (d ≤ 3).
    pub fn vertices(&self) -> Result<Vec<Vec<f64>>> {
        let d = self.interior.len();
        if d > 3 {
            return Err(Error::InvalidBody(
                "vertex enumeration is only supported for d <= 3".into(),
            ));
        }
        let m = self.rows.len();
        let scale = 1.0 + self.offsets.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let mut out: Vec<Vec<f64>> = Vec::new();
        let mut idx: Vec<usize> = (0..d).collect();
        if m < d {
            return Ok(out);
        }
        loop {
            let a: Vec<Vec<f64>> = idx.iter().map(|&i| self.rows[i].clone()).collect();
            let b: Vec<f64> = idx.iter().map(|&i| self.offsets[i]).collect();
            if let Some(v) = solve_dense(&a, &b) {
                let feasible = self
                    .rows
                    .iter()
                    .zip(&self.offsets)
                    .all(|(r, &bi)| dot(r, &v) <= bi + 1e-9 * scale);
                let dup = out
                    .iter()
                    .any(|w| w.iter().zip(&v).all(|(p, q)| (p - q).abs() <= 1e-9 * scale));
                if feasible && !dup {
                    out.push(v);
                }
            }
            // next combination
            let mut k = d;
            loop {
                if k == 0 {
                    return Ok(out);
                }
                k -= 1;
                if idx[k] < m - d + k {
                    idx[k] += 1;
                    for j in k + 1..d {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }
}

/// Support set K of a density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BodyDescriptor", into = "BodyDescriptor")]
pub enum ConvexBody {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Polytope(Polytope),
    FullSpace { dim: usize },
}

/// JSON form of a [`ConvexBody`].
///
/// ```json
/// {"type": "ball", "center": [0, 0], "radius": 1}
/// {"type": "box", "lo": [0, 0], "hi": [1, 2]}
/// {"type": "polytope", "a": [[1, 0], [-1, 0], [0, 1], [0, -1]], "b": [1, 1, 1, 1]}
/// {"type": "fullspace", "dim": 3}
/// ```
///
/// Polytopes may carry `"interior"` (a strictly interior point, required for
/// d > 3) and `"radius_bound"` (required for the circumradius when d > 3).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodyDescriptor {
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Polytope {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        interior: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radius_bound: Option<f64>,
    },
    Fullspace {
        dim: usize,
    },
}

impl TryFrom<BodyDescriptor> for ConvexBody {
    type Error = Error;

    fn try_from(d: BodyDescriptor) -> Result<Self> {
        match d {
            BodyDescriptor::Ball { center, radius } => ConvexBody::ball(center, radius),
            BodyDescriptor::Box { lo, hi } => ConvexBody::new_box(lo, hi),
            BodyDescriptor::Polytope { a, b, interior, radius_bound } => {
                ConvexBody::polytope(a, b, interior, radius_bound)
            }
            BodyDescriptor::Fullspace { dim } => ConvexBody::fullspace(dim),
        }
    }
}

impl From<ConvexBody> for BodyDescriptor {
    fn from(b: ConvexBody) -> Self {
        match b {
            ConvexBody::Ball { center, radius } => BodyDescriptor::Ball { center, radius },
            ConvexBody::Box { lo, hi } => BodyDescriptor::Box { lo, hi },
            ConvexBody::Polytope(p) => BodyDescriptor::Polytope {
                a: p.rows,
                b: p.offsets,
                interior: Some(p.interior),
                radius_bound: p.radius_bound,
            },
            ConvexBody::FullSpace { dim } => BodyDescriptor::Fullspace { dim },
        }
    }
}

fn check_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidBody(format!("{what} has non-finite entries")))
    }
}

impl ConvexBody {
    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::InvalidBody("ball of dimension 0".into()));
        }
        check_finite(&center, "ball center")?;
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidBody(format!("ball radius must be positive, got {radius}")));
        }
        Ok(ConvexBody::Ball { center, radius })
    }

    pub fn unit_ball(dim: usize) -> Self {
        ConvexBody::Ball { center: vec![0.0; dim.max(1)], radius: 1.0 }
    }

    pub fn new_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::InvalidBody("box corners must have equal, positive length".into()));
        }
        check_finite(&lo, "box lo")?;
        check_finite(&hi, "box hi")?;
        if lo.iter().zip(&hi).any(|(l, h)| !(l < h)) {
            return Err(Error::InvalidBody("box requires lo_i < hi_i on every axis".into()));
        }
        Ok(ConvexBody::Box { lo, hi })
    }

    /// Polytope `{x : rows_i · x ≤ offsets_i}`. Without an explicit interior
    /// point (d ≤ 3 only) the vertex centroid is used. The stored point is
    /// verified to satisfy every constraint strictly.
    pub fn polytope(
        rows: Vec<Vec<f64>>,
        offsets: Vec<f64>,
        interior: Option<Vec<f64>>,
        radius_bound: Option<f64>,
    ) -> Result<Self> {
        if rows.is_empty() || rows.len() != offsets.len() {
            return Err(Error::InvalidBody("polytope needs one offset per row".into()));
        }
        let d = rows[0].len();
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidBody("polytope rows have inconsistent length".into()));
        }
        for r in &rows {
            check_finite(r, "polytope row")?;
            if norm(r) == 0.0 {
                return Err(Error::InvalidBody("polytope row is zero".into()));
            }
        }
        check_finite(&offsets, "polytope offsets")?;
        if let Some(rb) = radius_bound {
            if !(rb > 0.0) {
                return Err(Error::InvalidBody("radius_bound must be positive".into()));
            }
        }
        let mut p = Polytope { rows, offsets, interior: vec![0.0; d], radius_bound };
        let point = match interior {
            Some(x) => {
                if x.len() != d {
                    return Err(Error::DimensionMismatch { expected: d, got: x.len() });
                }
                x
            }
            None => {
                if d > 3 {
                    return Err(Error::InvalidBody(
                        "polytopes with d > 3 need an explicit interior point".into(),
                    ));
                }
                let verts = p.vertices()?;
                if verts.len() < d + 1 {
                    return Err(Error::InvalidBody(
                        "polytope is empty, unbounded or has empty interior".into(),
                    ));
                }
                let mut c = vec![0.0; d];
                for v in &verts {
                    for (ci, vi) in c.iter_mut().zip(v) {
                        *ci += vi / verts.len() as f64;
                    }
                }
                c
            }
        };
        let strict = p.rows.iter().zip(&p.offsets).all(|(r, &b)| {
            dot(r, &point) < b - 1e-12 * (1.0 + b.abs())
        });
        if !strict {
            return Err(Error::InvalidBody(
                "polytope has empty interior (no strictly interior point)".into(),
            ));
        }
        p.interior = point;
        let body = ConvexBody::Polytope(p);
        // Boundedness along the coordinate axes catches the common mistakes.
        let x0 = body.interior_point();
        for i in 0..d {
            let mut u = vec![0.0; d];
            u[i] = 1.0;
            let c = body.chord(&x0, &u)?;
            if !c.is_bounded() {
                return Err(Error::InvalidBody("polytope is unbounded".into()));
            }
        }
        Ok(body)
    }

    pub fn fullspace(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidBody("fullspace of dimension 0".into()));
        }
        Ok(ConvexBody::FullSpace { dim })
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexBody::Ball { center, .. } => center.len(),
            ConvexBody::Box { lo, .. } => lo.len(),
            ConvexBody::Polytope(p) => p.interior.len(),
            ConvexBody::FullSpace { dim } => *dim,
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, ConvexBody::FullSpace { .. })
    }

    /// A point strictly inside the body.
    pub fn interior_point(&self) -> Vec<f64> {
        match self {
            ConvexBody::Ball { center, .. } => center.clone(),
            ConvexBody::Box { lo, hi } => lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect(),
            ConvexBody::Polytope(p) => p.interior.clone(),
            ConvexBody::FullSpace { dim } => vec![0.0; *dim],
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    /// Membership in the closed body.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        self.check_dim(x)?;
        Ok(self.contains_within(x, 0.0))
    }

    /// Membership allowing a violation of at most `tol` (in the body's own
    /// constraint units).
    pub(crate) fn contains_within(&self, x: &[f64], tol: f64) -> bool {
        match self {
            ConvexBody::Ball { center, radius } => {
                let d2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                d2.sqrt() <= radius + tol
            }
            ConvexBody::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| *v >= l - tol && *v <= h + tol),
            ConvexBody::Polytope(p) => p
                .rows
                .iter()
                .zip(&p.offsets)
                .all(|(r, &b)| dot(r, x) <= b + tol * norm(r)),
            ConvexBody::FullSpace { .. } => x.iter().all(|v| v.is_finite()),
        }
    }

    /// The closure of `{α : x + α u ∈ K}`.
    pub fn chord(&self, x: &[f64], u: &[f64]) -> Result<Interval> {
        self.check_dim(x)?;
        self.check_dim(u)?;
        let un = norm(u);
        if un == 0.0 || !un.is_finite() || (un - 1.0).abs() > 1e-10 {
            return Err(Error::BadDirection);
        }
        let tol = 1e-9 * (1.0 + norm(x));
        if !self.contains_within(x, tol) {
            return Err(Error::OutsideBody);
        }
        let (lo, hi) = match self {
            ConvexBody::Ball { center, radius } => {
                let w: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                let b = dot(u, &w);
                let c = dot(&w, &w) - radius * radius;
                let disc = (b * b - c).max(0.0);
                let q = -(b + b.signum() * disc.sqrt());
                let (r1, r2) = if q == 0.0 {
                    (-disc.sqrt(), disc.sqrt())
                } else {
                    (q, c / q)
                };
                (r1.min(r2), r1.max(r2))
            }
            ConvexBody::Box { lo, hi } => {
                let mut a = f64::NEG_INFINITY;
                let mut b = f64::INFINITY;
                for i in 0..x.len() {
                    if u[i] != 0.0 {
                        let t1 = (lo[i] - x[i]) / u[i];
                        let t2 = (hi[i] - x[i]) / u[i];
                        a = a.max(t1.min(t2));
                        b = b.min(t1.max(t2));
                    }
                }
                (a, b)
            }
            ConvexBody::Polytope(p) => {
                let mut a = f64::NEG_INFINITY;
                let mut b = f64::INFINITY;
                for (row, &off) in p.rows.iter().zip(&p.offsets) {
                    let s = dot(row, u);
                    let slack = off - dot(row, x);
                    if s.abs() < 1e-14 {
                        if slack < -tol * norm(row) {
                            return Err(Error::OutsideBody);
                        }
                        continue;
                    }
                    let t = slack / s;
                    if s > 0.0 {
                        b = b.min(t);
                    } else {
                        a = a.max(t);
                    }
                }
                (a, b)
            }
            ConvexBody::FullSpace { .. } => (f64::NEG_INFINITY, f64::INFINITY),
        };
        // Boundary starts may give a one-sided chord; keep 0 inside.
        Ok(Interval::new(lo.min(0.0), hi.max(0.0)))
    }

    /// Smallest R with K ⊆ R·B_d around the origin.
    pub fn circumradius(&self) -> Result<f64> {
        match self {
            ConvexBody::Ball { center, radius } => Ok(norm(center) + radius),
            ConvexBody::Box { lo, hi } => Ok(lo
                .iter()
                .zip(hi)
                .map(|(l, h)| l.abs().max(h.abs()).powi(2))
                .sum::<f64>()
                .sqrt()),
            ConvexBody::Polytope(p) => {
                if p.interior.len() > 3 {
                    return p.radius_bound.ok_or_else(|| {
                        Error::NoCircumradius(
                            "polytope with d > 3 requires a user-supplied radius_bound".into(),
                        )
                    });
                }
                let verts = p.vertices()?;
                Ok(verts.iter().map(|v| norm(v)).fold(0.0, f64::max))
            }
            ConvexBody::FullSpace { .. } => {
                Err(Error::NoCircumradius("fullspace is unbounded".into()))
            }
        }
    }

    /// Axis-aligned bounding box, `None` for fullspace.
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            ConvexBody::Ball { center, radius } => Some((
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            )),
            ConvexBody::Box { lo, hi } => Some((lo.clone(), hi.clone())),
            ConvexBody::Polytope(p) => {
                let d = p.interior.len();
                let (mut lo, mut hi) = (vec![f64::INFINITY; d], vec![f64::NEG_INFINITY; d]);
                if d <= 3 {
                    for v in p.vertices().ok()? {
                        for i in 0..d {
                            lo[i] = lo[i].min(v[i]);
                            hi[i] = hi[i].max(v[i]);
                        }
                    }
                } else {
                    let rb = p.radius_bound?;
                    lo.fill(-rb);
                    hi.fill(rb);
                }
                Some((lo, hi))
            }
            ConvexBody::FullSpace { .. } => None,
        }
    }

    /// Volume for balls and boxes; `None` otherwise.
    pub fn volume(&self) -> Option<f64> {
        match self {
            ConvexBody::Ball { center, radius } => {
                let d = center.len() as f64;
                Some((unit_ball_log_volume(center.len()) + d * radius.ln()).exp())
            }
            ConvexBody::Box { lo, hi } => Some(lo.iter().zip(hi).map(|(l, h)| h - l).product()),
            _ => None,
        }
    }
}

/// `ln vol_d(B_d) = (d/2) ln π − ln Γ(d/2 + 1)`.
pub fn unit_ball_log_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    h * std::f64::consts::PI.ln() - crate::special::ln_gamma(h + 1.0)
}

/// `ln vol_{d−1}(∂B_d) = ln 2 + (d/2) ln π − ln Γ(d/2)`.
pub fn unit_sphere_log_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    std::f64::consts::LN_2 + h * std::f64::consts::PI.ln() - crate::special::ln_gamma(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    fn square_poly() -> ConvexBody {
        ConvexBody::polytope(
            vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0], vec![0.0, -1.0]],
            vec![1.0, 1.0, 2.0, 0.0],
            None,
            None,
        )
        .unwrap()
    }

    #[test]
    fn contains_examples() {
        let b = ConvexBody::unit_ball(2);
        assert!(b.contains(&[0.0, 0.0]).unwrap());
        assert!(!b.contains(&[2.0, 0.0]).unwrap());
        let p = ConvexBody::polytope(vec![vec![1.0], vec![-1.0]], vec![1.0, 1.0], None, None).unwrap();
        assert!(p.contains(&[0.5]).unwrap());
        assert!(!p.contains(&[1.5]).unwrap());
        assert!(matches!(b.contains(&[0.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn chord_examples() {
        let b = ConvexBody::unit_ball(2);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let c = b.chord(&[0.0, 0.0], &[s, s]).unwrap();
        assert!((c.lo + 1.0).abs() < 1e-15 && (c.hi - 1.0).abs() < 1e-15);

        let f = ConvexBody::fullspace(3).unwrap();
        let c = f.chord(&[1.0, 2.0, 3.0], &[0.0, 1.0, 0.0]).unwrap();
        assert_eq!((c.lo, c.hi), (f64::NEG_INFINITY, f64::INFINITY));

        let bx = ConvexBody::new_box(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap();
        let c = bx.chord(&[0.5, 1.0], &[1.0, 0.0]).unwrap();
        assert_eq!((c.lo, c.hi), (-0.5, 0.5));
    }

    #[test]
    fn chord_errors() {
        let b = ConvexBody::unit_ball(2);
        assert_eq!(b.chord(&[2.0, 0.0], &[1.0, 0.0]), Err(Error::OutsideBody));
        assert_eq!(b.chord(&[0.0, 0.0], &[0.0, 0.0]), Err(Error::BadDirection));
    }

    #[test]
    fn boundary_start_is_one_sided() {
        let b = ConvexBody::unit_ball(2);
        let c = b.chord(&[1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!(c.hi.abs() < 1e-15 && (c.lo + 2.0).abs() < 1e-15);
    }

    #[test]
    fn circumradius_examples() {
        assert_eq!(ConvexBody::unit_ball(3).circumradius().unwrap(), 1.0);
        let bx = ConvexBody::new_box(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        assert!((bx.circumradius().unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let b = ConvexBody::ball(vec![1.0, 0.0], 1.0).unwrap();
        assert_eq!(b.circumradius().unwrap(), 2.0);
        assert!(ConvexBody::fullspace(2).unwrap().circumradius().is_err());
        // square [-1,1]×[0,2]: farthest vertex (±1, 2)
        assert!((square_poly().circumradius().unwrap() - 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn high_dim_polytope_needs_bound() {
        let d = 4;
        let mut rows = Vec::new();
        for i in 0..d {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            rows.push(e.clone());
            e[i] = -1.0;
            rows.push(e);
        }
        let b = vec![1.0; 2 * d];
        assert!(ConvexBody::polytope(rows.clone(), b.clone(), None, None).is_err());
        let p = ConvexBody::polytope(rows.clone(), b.clone(), Some(vec![0.0; d]), None).unwrap();
        assert!(matches!(p.circumradius(), Err(Error::NoCircumradius(_))));
        let p = ConvexBody::polytope(rows, b, Some(vec![0.0; d]), Some(2.0)).unwrap();
        assert_eq!(p.circumradius().unwrap(), 2.0);
    }

    #[test]
    fn invalid_bodies_rejected() {
        assert!(ConvexBody::ball(vec![0.0], 0.0).is_err());
        assert!(ConvexBody::new_box(vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        // x ≤ 0 and −x ≤ −1: empty
        assert!(ConvexBody::polytope(vec![vec![1.0], vec![-1.0]], vec![0.0, -1.0], None, None).is_err());
        // half-plane: unbounded
        assert!(ConvexBody::polytope(
            vec![vec![1.0, 0.0]],
            vec![1.0],
            Some(vec![0.0, 0.0]),
            None
        )
        .is_err());
    }

    #[test]
    fn json_round_trip() {
        let json = r#"{"type":"ball","center":[0.0,0.0],"radius":1.0}"#;
        let b: ConvexBody = serde_json::from_str(json).unwrap();
        assert_eq!(b, ConvexBody::unit_ball(2));
        assert_eq!(serde_json::to_string(&b).unwrap(), json);
        let bad = r#"{"type":"ball","center":[0.0],"radius":-1.0}"#;
        assert!(serde_json::from_str::<ConvexBody>(bad).is_err());
        let p = square_poly();
        let back: ConvexBody = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(p, back);
    }

    fn random_unit(rng: &mut RandomStream, d: usize) -> Vec<f64> {
        let v: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
        let n = norm(&v);
        v.into_iter().map(|x| x / n).collect()
    }

    fn shipped_bodies() -> Vec<ConvexBody> {
        vec![
            ConvexBody::unit_ball(2),
            ConvexBody::ball(vec![1.0, -0.5, 0.2], 0.7).unwrap(),
            ConvexBody::new_box(vec![0.0, 0.0], vec![1.0, 2.0]).unwrap(),
            ConvexBody::new_box(vec![-1.0, 0.0, 2.0], vec![0.0, 3.0, 2.5]).unwrap(),
            square_poly(),
            ConvexBody::polytope(
                vec![vec![1.0, 1.0, 1.0], vec![-1.0, 0.0, 0.0], vec![0.0, -1.0, 0.0], vec![0.0, 0.0, -1.0]],
                vec![1.0, 0.0, 0.0, 0.0],
                None,
                None,
            )
            .unwrap(),
        ]
    }

    fn random_point_inside(rng: &mut RandomStream, body: &ConvexBody) -> Vec<f64> {
        let (lo, hi) = body.bounding_box().unwrap();
        loop {
            let x: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| l + (h - l) * rng.uniform()).collect();
            if body.contains(&x).unwrap() {
                return x;
            }
        }
    }

    #[test]
    fn chord_points_are_inside_and_endpoints_on_boundary() {
        let mut rng = RandomStream::new(11);
        let bodies = shipped_bodies();
        for trial in 0..10_000 {
            let body = &bodies[trial % bodies.len()];
            let x = random_point_inside(&mut rng, body);
            let u = random_unit(&mut rng, body.dim());
            let c = body.chord(&x, &u).unwrap();
            assert!(c.lo <= 0.0 && 0.0 <= c.hi);
            let a = c.lo + (c.hi - c.lo) * rng.uniform();
            let y: Vec<f64> = x.iter().zip(&u).map(|(xi, ui)| xi + a * ui).collect();
            assert!(body.contains_within(&y, 1e-12), "{body:?} {y:?}");

            let eps = 1e-6;
            for (end, outward) in [(c.hi, 1.0), (c.lo, -1.0)] {
                let p = |t: f64| -> Vec<f64> { x.iter().zip(&u).map(|(xi, ui)| xi + t * ui).collect() };
                assert!(body.contains(&p(end - outward * eps)).unwrap());
                assert!(!body.contains(&p(end + outward * eps)).unwrap());
            }
        }
    }

    #[test]
    fn chord_flips_with_direction() {
        let mut rng = RandomStream::new(12);
        for body in shipped_bodies() {
            for _ in 0..200 {
                let x = random_point_inside(&mut rng, &body);
                let u = random_unit(&mut rng, body.dim());
                let neg: Vec<f64> = u.iter().map(|v| -v).collect();
                let a = body.chord(&x, &u).unwrap();
                let b = body.chord(&x, &neg).unwrap();
                assert!((a.lo + b.hi).abs() < 1e-12 && (a.hi + b.lo).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ball_and_box_volumes() {
        let v = ConvexBody::unit_ball(2).volume().unwrap();
        assert!((v - std::f64::consts::PI).abs() < 1e-13);
        let v3 = ConvexBody::ball(vec![0.0; 3], 2.0).unwrap().volume().unwrap();
        assert!((v3 - 4.0 / 3.0 * std::f64::consts::PI * 8.0).abs() < 1e-12);
        assert!((unit_sphere_log_area(2).exp() - 2.0 * std::f64::consts::PI).abs() < 1e-13);
    }
}
