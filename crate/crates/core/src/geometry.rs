//! Smooth strictly convex planar domains and the Shortley–Weller clipped
//! Cartesian grids built on them.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense parameter samples used for curvature scans and validity checks.
pub const CURVATURE_SAMPLES: usize = 4096;
/// Lattice nodes with indicator above `-ON_BOUNDARY_TOL` are exterior.
pub const ON_BOUNDARY_TOL: f64 = 1e-12;
pub const DEFAULT_BOUNDARY_SAMPLES: usize = 512;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DomainKind {
    Disk {
        r: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    /// Radial profile `r(θ) = r (1 + eps cos kθ)`.
    Blob {
        r: f64,
        eps: f64,
        k: u32,
    },
}

/// A smooth strictly convex domain given by a counter-clockwise boundary
/// parametrization over `t ∈ [0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexDomain {
    kind: DomainKind,
    centroid: [f64; 2],
}

/// A point of the boundary with its outward unit normal and curvature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySample {
    pub t: f64,
    pub point: [f64; 2],
    pub normal: [f64; 2],
    pub curvature: f64,
}

impl ConvexDomain {
    pub fn disk(r: f64) -> Result<Self> {
        positive("r", r)?;
        Self::validated(DomainKind::Disk { r })
    }

    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        positive("a", a)?;
        positive("b", b)?;
        Self::validated(DomainKind::Ellipse { a, b })
    }

    /// Accepted iff the sampled curvature is positive everywhere.
    pub fn blob(r: f64, eps: f64, k: u32) -> Result<Self> {
        positive("r", r)?;
        if !(eps.abs() < 1.0) {
            return Err(Error::DomainViolation {
                what: "eps",
                value: eps,
                range: "(-1, 1)".into(),
            });
        }
        Self::validated(DomainKind::Blob { r, eps, k })
    }

    fn validated(kind: DomainKind) -> Result<Self> {
        let mut domain = Self {
            kind,
            centroid: [0.0, 0.0],
        };
        for j in 0..CURVATURE_SAMPLES {
            domain.curvature(TAU * j as f64 / CURVATURE_SAMPLES as f64)?;
        }
        if let DomainKind::Blob { k: 1, .. } = kind {
            domain.centroid = domain.polygon_centroid();
        }
        Ok(domain)
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    /// Grid anchor; the parametrizations are centred so that this is the
    /// origin except for the off-centre `k = 1` blob.
    pub fn centroid(&self) -> [f64; 2] {
        self.centroid
    }

    fn polygon_centroid(&self) -> [f64; 2] {
        let m = 1 << 14;
        let (mut area, mut cx, mut cy) = (0.0, 0.0, 0.0);
        for j in 0..m {
            let p = self.point(TAU * j as f64 / m as f64);
            let q = self.point(TAU * (j + 1) as f64 / m as f64);
            let cross = p[0] * q[1] - q[0] * p[1];
            area += cross;
            cx += (p[0] + q[0]) * cross;
            cy += (p[1] + q[1]) * cross;
        }
        [cx / (3.0 * area), cy / (3.0 * area)]
    }

    /// Boundary position and its first two parameter derivatives.
    pub fn jet(&self, t: f64) -> [[f64; 2]; 3] {
        match self.kind {
            DomainKind::Disk { r } => {
                let (s, c) = t.sin_cos();
                [[r * c, r * s], [-r * s, r * c], [-r * c, -r * s]]
            }
            DomainKind::Ellipse { a, b } => {
                let (s, c) = t.sin_cos();
                [[a * c, b * s], [-a * s, b * c], [-a * c, -b * s]]
            }
            DomainKind::Blob { r, eps, k } => {
                let kf = k as f64;
                let (sk, ck) = (kf * t).sin_cos();
                let rho = r * (1.0 + eps * ck);
                let rho1 = -r * eps * kf * sk;
                let rho2 = -r * eps * kf * kf * ck;
                let (s, c) = t.sin_cos();
                [
                    [rho * c, rho * s],
                    [rho1 * c - rho * s, rho1 * s + rho * c],
                    [
                        rho2 * c - 2.0 * rho1 * s - rho * c,
                        rho2 * s + 2.0 * rho1 * c - rho * s,
                    ],
                ]
            }
        }
    }

    pub fn point(&self, t: f64) -> [f64; 2] {
        self.jet(t)[0]
    }

    pub fn outward_normal(&self, t: f64) -> [f64; 2] {
        let [_, d1, _] = self.jet(t);
        let len = d1[0].hypot(d1[1]);
        [d1[1] / len, -d1[0] / len]
    }

    fn curvature_raw(&self, t: f64) -> f64 {
        let [_, d1, d2] = self.jet(t);
        (d1[0] * d2[1] - d1[1] * d2[0]) / (d1[0] * d1[0] + d1[1] * d1[1]).powf(1.5)
    }

    /// Signed curvature `(x'y'' − y'x'') / (x'² + y'²)^{3/2}`.
    pub fn curvature(&self, t: f64) -> Result<f64> {
        let k = self.curvature_raw(t);
        if k > 0.0 {
            Ok(k)
        } else {
            Err(Error::NotStrictlyConvex { t, curvature: k })
        }
    }

    /// Maximum boundary curvature: dense scan, then golden-section
    /// refinement around the best sample.
    pub fn k_max(&self) -> f64 {
        let dt = TAU / CURVATURE_SAMPLES as f64;
        let best = (0..CURVATURE_SAMPLES)
            .map(|j| j as f64 * dt)
            .max_by(|&a, &b| self.curvature_raw(a).total_cmp(&self.curvature_raw(b)))
            .expect("samples");
        let t = golden_max(|t| self.curvature_raw(t), best - dt, best + dt, 1e-12);
        self.curvature_raw(t).max(self.curvature_raw(best))
    }

    /// `1 / (2 (n − 1) K_max)`.
    pub fn alpha(&self, n: usize) -> Result<f64> {
        if n < 2 {
            return Err(Error::DomainViolation {
                what: "n",
                value: n as f64,
                range: "n >= 2".into(),
            });
        }
        Ok(1.0 / (2.0 * (n - 1) as f64 * self.k_max()))
    }

    /// Largest distance from the boundary over the bounding box: coarse
    /// lattice scan, then pattern search over 16 directions. The distance
    /// function is concave on a convex domain, so the search cannot stall
    /// away from the maximum on a 2-way ridge.
    pub fn inradius(&self) -> f64 {
        let ext = self.extent();
        let c = self.centroid;
        let m = 40;
        let mut best = c;
        let mut best_d = self.distance_to_boundary(c);
        for i in 0..=m {
            for j in 0..=m {
                let p = [
                    c[0] - ext + 2.0 * ext * i as f64 / m as f64,
                    c[1] - ext + 2.0 * ext * j as f64 / m as f64,
                ];
                if self.contains(p) {
                    let d = self.distance_to_boundary(p);
                    if d > best_d {
                        best_d = d;
                        best = p;
                    }
                }
            }
        }
        let dirs: Vec<[f64; 2]> = (0..16)
            .map(|k| {
                let a = PI * k as f64 / 8.0;
                [a.cos(), a.sin()]
            })
            .collect();
        let mut step = 2.0 * ext / m as f64;
        while step > 1e-12 * ext {
            let mut moved = false;
            for d in &dirs {
                let p = [best[0] + step * d[0], best[1] + step * d[1]];
                if !self.contains(p) {
                    continue;
                }
                let dist = self.distance_to_boundary(p);
                if dist > best_d {
                    best_d = dist;
                    best = p;
                    moved = true;
                }
            }
            if !moved {
                step *= 0.5;
            }
        }
        best_d
    }

    /// Euclidean distance from an interior point to the boundary curve.
    pub fn distance_to_boundary(&self, p: [f64; 2]) -> f64 {
        const M: usize = 1024;
        let dt = TAU / M as f64;
        let d2 = |t: f64| {
            let q = self.point(t);
            (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)
        };
        let samples: Vec<f64> = (0..M).map(|j| d2(j as f64 * dt)).collect();
        let lowest = samples.iter().copied().fold(f64::INFINITY, f64::min);
        // refine every sampled local minimum: nearly equal basins can swap
        // order between the samples and the true curve
        (0..M)
            .filter(|&j| {
                let v = samples[j];
                v <= samples[(j + M - 1) % M]
                    && v <= samples[(j + 1) % M]
                    && v <= 1.01 * lowest + 1e-300
            })
            .map(|j| {
                let best = j as f64 * dt;
                let t = golden_max(|t| -d2(t), best - dt, best + dt, 1e-13);
                d2(t).min(samples[j])
            })
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }

    /// Radius of a disk about the centroid containing the domain.
    pub fn extent(&self) -> f64 {
        let c = self.centroid;
        match self.kind {
            DomainKind::Disk { r } => r,
            DomainKind::Ellipse { a, b } => a.max(b),
            DomainKind::Blob { r, eps, .. } => r * (1.0 + eps.abs()) + c[0].hypot(c[1]),
        }
    }

    /// Negative inside, zero on the boundary, positive outside.
    pub fn indicator(&self, p: [f64; 2]) -> f64 {
        let [x, y] = p;
        match self.kind {
            DomainKind::Disk { r } => (x * x + y * y) / (r * r) - 1.0,
            DomainKind::Ellipse { a, b } => (x * x) / (a * a) + (y * y) / (b * b) - 1.0,
            DomainKind::Blob { r, eps, k } => {
                let rad = x.hypot(y);
                let theta = y.atan2(x);
                rad / (r * (1.0 + eps * (k as f64 * theta).cos())) - 1.0
            }
        }
    }

    /// Strict interior test; points within `ON_BOUNDARY_TOL` count as outside.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.indicator(p) < -ON_BOUNDARY_TOL
    }

    /// Distance from interior point `p` to the boundary along unit `dir`.
    pub fn ray_exit(&self, p: [f64; 2], dir: [f64; 2]) -> f64 {
        let hi = 2.0 * self.extent() + p[0].hypot(p[1]);
        let at = |s: f64| self.indicator([p[0] + s * dir[0], p[1] + s * dir[1]]);
        bisect_sign_change(at, 0.0, hi, 1e-15 * hi)
    }

    /// `count` boundary samples uniformly spaced in the parameter.
    pub fn boundary_samples(&self, count: usize) -> Vec<BoundarySample> {
        (0..count)
            .map(|j| {
                let t = TAU * j as f64 / count as f64;
                BoundarySample {
                    t,
                    point: self.point(t),
                    normal: self.outward_normal(t),
                    curvature: self.curvature_raw(t),
                }
            })
            .collect()
    }
}

impl fmt::Display for ConvexDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            DomainKind::Disk { r } => write!(f, "disk:R={r}"),
            DomainKind::Ellipse { a, b } => write!(f, "ellipse:a={a},b={b}"),
            DomainKind::Blob { r, eps, k } => write!(f, "blob:R={r},eps={eps},k={k}"),
        }
    }
}

impl FromStr for ConvexDomain {
    type Err = Error;

    /// `disk:R=1`, `ellipse:a=2,b=1`, `blob:R=1,eps=0.05,k=3`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: String| Error::Descriptor {
            input: s.to_string(),
            reason,
        };
        let (kind, args) = s.trim().split_once(':').unwrap_or((s.trim(), ""));
        let mut params = std::collections::BTreeMap::new();
        for kv in args.split(',').filter(|a| !a.trim().is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got `{kv}`")))?;
            let v: f64 = v.trim().parse().map_err(|e| bad(format!("{k}: {e}")))?;
            params.insert(k.trim().to_ascii_lowercase(), v);
        }
        let get = |key: &str| {
            params
                .get(key)
                .copied()
                .ok_or_else(|| bad(format!("missing `{key}`")))
        };
        match kind {
            "disk" => ConvexDomain::disk(get("r")?),
            "ellipse" => ConvexDomain::ellipse(get("a")?, get("b")?),
            "blob" => {
                let k = get("k")?;
                if k < 1.0 || k.fract() != 0.0 {
                    return Err(bad("k must be a positive integer".into()));
                }
                ConvexDomain::blob(get("r")?, get("eps")?, k as u32)
            }
            _ => Err(bad(format!("unknown domain kind `{kind}`"))),
        }
    }
}

impl Serialize for ConvexDomain {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ConvexDomain {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn positive(what: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainViolation {
            what,
            value: v,
            range: "(0, inf)".into(),
        })
    }
}

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Bisection for the sign change of `f` on `[lo, hi]` given `f(lo) < 0 ≤ f(hi)`.
fn bisect_sign_change<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Compass directions of the four stencil arms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    East = 0,
    West = 1,
    North = 2,
    South = 3,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::East, Dir::West, Dir::North, Dir::South];

    pub fn offset(self) -> (i32, i32) {
        match self {
            Dir::East => (1, 0),
            Dir::West => (-1, 0),
            Dir::North => (0, 1),
            Dir::South => (0, -1),
        }
    }
}

/// Where a stencil arm ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Arm {
    /// Neighbouring interior node, at distance `h`.
    Node(usize),
    /// Boundary intersection at distance `theta · h`, `0 < theta ≤ 1`.
    Boundary(f64),
}

impl Arm {
    pub fn theta(&self) -> f64 {
        match self {
            Arm::Node(_) => 1.0,
            Arm::Boundary(t) => *t,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridNode {
    pub i: i32,
    pub j: i32,
    pub x: f64,
    pub y: f64,
    /// Indexed by `Dir as usize`.
    pub arms: [Arm; 4],
}

impl GridNode {
    pub fn arm(&self, d: Dir) -> Arm {
        self.arms[d as usize]
    }

    pub fn touches_boundary(&self) -> bool {
        self.arms.iter().any(|a| matches!(a, Arm::Boundary(_)))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GridOptions {
    /// Minimum ratio `d / h` of inradius to spacing.
    pub min_nodes_across: f64,
    pub boundary_samples: usize,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self {
            min_nodes_across: 10.0,
            boundary_samples: DEFAULT_BOUNDARY_SAMPLES,
        }
    }
}

/// Cartesian lattice clipped to a convex domain with Shortley–Weller legs.
#[derive(Debug, Clone)]
pub struct ClippedGrid {
    pub domain: ConvexDomain,
    pub h: f64,
    pub origin: [f64; 2],
    /// Lattice index bounds `(lo, hi)` inclusive.
    pub i_bounds: (i32, i32),
    pub j_bounds: (i32, i32),
    pub nodes: Vec<GridNode>,
    pub boundary: Vec<BoundarySample>,
    lookup: Vec<Option<usize>>,
}

/// Builds the clipped grid with default options (`h ≤ d / 10`).
pub fn make_grid(domain: &ConvexDomain, h: f64) -> Result<ClippedGrid> {
    make_grid_with(domain, h, GridOptions::default())
}

pub fn make_grid_with(domain: &ConvexDomain, h: f64, opts: GridOptions) -> Result<ClippedGrid> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::GridTooCoarse {
            h,
            reason: "spacing must be positive".into(),
        });
    }
    let d = domain.inradius();
    if d / h < opts.min_nodes_across * (1.0 - 1e-12) {
        return Err(Error::GridTooCoarse {
            h,
            reason: format!(
                "inradius {d} spans fewer than {} spacings",
                opts.min_nodes_across
            ),
        });
    }
    let origin = domain.centroid();
    let n_ext = (domain.extent() / h).ceil() as i32 + 1;
    let i_bounds = (-n_ext, n_ext);
    let j_bounds = (-n_ext, n_ext);
    let width = (2 * n_ext + 1) as usize;
    let mut lookup = vec![None; width * width];
    let mut nodes = Vec::new();
    for j in j_bounds.0..=j_bounds.1 {
        for i in i_bounds.0..=i_bounds.1 {
            let p = [origin[0] + i as f64 * h, origin[1] + j as f64 * h];
            if domain.contains(p) {
                lookup[(j + n_ext) as usize * width + (i + n_ext) as usize] = Some(nodes.len());
                nodes.push(GridNode {
                    i,
                    j,
                    x: p[0],
                    y: p[1],
                    arms: [Arm::Boundary(1.0); 4],
                });
            }
        }
    }
    if nodes.is_empty() {
        return Err(Error::GridTooCoarse {
            h,
            reason: "no interior nodes".into(),
        });
    }
    let mut grid = ClippedGrid {
        domain: *domain,
        h,
        origin,
        i_bounds,
        j_bounds,
        nodes,
        boundary: domain.boundary_samples(opts.boundary_samples),
        lookup,
    };
    for idx in 0..grid.nodes.len() {
        let (i, j, x, y) = {
            let n = &grid.nodes[idx];
            (n.i, n.j, n.x, n.y)
        };
        for dir in Dir::ALL {
            let (di, dj) = dir.offset();
            grid.nodes[idx].arms[dir as usize] = match grid.index(i + di, j + dj) {
                Some(k) => Arm::Node(k),
                None => {
                    let f = |theta: f64| {
                        domain.indicator([x + theta * h * di as f64, y + theta * h * dj as f64])
                    };
                    let theta = if f(1.0) < 0.0 {
                        // neighbour lies within ON_BOUNDARY_TOL of the boundary
                        1.0
                    } else {
                        bisect_sign_change(f, 0.0, 1.0, 1e-13)
                    };
                    Arm::Boundary(theta)
                }
            };
        }
    }
    Ok(grid)
}

impl ClippedGrid {
    /// Interior node index at lattice position `(i, j)`.
    pub fn index(&self, i: i32, j: i32) -> Option<usize> {
        if i < self.i_bounds.0 || i > self.i_bounds.1 || j < self.j_bounds.0 || j > self.j_bounds.1
        {
            return None;
        }
        let width = (self.i_bounds.1 - self.i_bounds.0 + 1) as usize;
        self.lookup[(j - self.j_bounds.0) as usize * width + (i - self.i_bounds.0) as usize]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn lattice_point(&self, i: i32, j: i32) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.h,
            self.origin[1] + j as f64 * self.h,
        ]
    }

    /// CSV dump `i,j,x,y,class,theta_e,theta_w,theta_n,theta_s` over the
    /// whole lattice box; exterior nodes leave the leg columns empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,x,y,class,theta_e,theta_w,theta_n,theta_s\n");
        for j in self.j_bounds.0..=self.j_bounds.1 {
            for i in self.i_bounds.0..=self.i_bounds.1 {
                let [x, y] = self.lattice_point(i, j);
                match self.index(i, j) {
                    Some(k) => {
                        let a = &self.nodes[k].arms;
                        out.push_str(&format!(
                            "{i},{j},{x},{y},interior,{},{},{},{}\n",
                            a[0].theta(),
                            a[1].theta(),
                            a[2].theta(),
                            a[3].theta()
                        ));
                    }
                    None => out.push_str(&format!("{i},{j},{x},{y},exterior,,,,\n")),
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curvature_examples() {
        let disk = ConvexDomain::disk(2.0).unwrap();
        assert!((disk.curvature(0.3).unwrap() - 0.5).abs() < 1e-15);
        let e = ConvexDomain::ellipse(2.0, 1.0).unwrap();
        assert!((e.curvature(0.0).unwrap() - 2.0).abs() < 1e-14);
        assert!((e.curvature(PI / 2.0).unwrap() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn k_max_and_alpha() {
        let disk = ConvexDomain::disk(1.0).unwrap();
        assert!((disk.k_max() - 1.0).abs() < 1e-12);
        assert!((disk.alpha(2).unwrap() - 0.5).abs() < 1e-12);
        assert!((disk.alpha(3).unwrap() - 0.25).abs() < 1e-12);
        let e = ConvexDomain::ellipse(2.0, 1.0).unwrap();
        assert!((e.k_max() - 2.0).abs() < 2e-10);
        assert!((e.alpha(2).unwrap() - 0.25).abs() < 1e-10);
        assert!(disk.alpha(1).is_err());
    }

    #[test]
    fn blob_rejected_when_not_convex() {
        assert!(matches!(
            ConvexDomain::blob(1.0, 0.15, 3),
            Err(Error::NotStrictlyConvex { .. })
        ));
        assert!(ConvexDomain::blob(1.0, 0.09, 3).is_ok());
    }

    #[test]
    fn inradius_simple() {
        assert!((ConvexDomain::disk(1.5).unwrap().inradius() - 1.5).abs() < 1e-10);
        assert!((ConvexDomain::ellipse(2.0, 1.0).unwrap().inradius() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn coarse_unit_disk_lattice() {
        let disk = ConvexDomain::disk(1.0).unwrap();
        let opts = GridOptions {
            min_nodes_across: 1.0,
            ..Default::default()
        };
        let grid = make_grid_with(&disk, 0.5, opts).unwrap();
        assert_eq!(grid.len(), 9);
        // (0.5, 0.5) heading east meets x = sqrt(0.75)
        let k = grid.index(1, 1).unwrap();
        let theta = grid.nodes[k].arm(Dir::East).theta();
        assert!((theta - (0.75f64.sqrt() - 0.5) / 0.5).abs() < 1e-12);
        assert!(matches!(
            make_grid(&disk, 0.5),
            Err(Error::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn on_boundary_nodes_are_exterior() {
        // (±1, 0), (0, ±1) lie exactly on the unit circle
        let disk = ConvexDomain::disk(1.0).unwrap();
        let grid = make_grid(&disk, 0.1).unwrap();
        assert!(grid.index(10, 0).is_none());
        assert!(grid.index(0, -10).is_none());
        assert!(grid.index(9, 0).is_some());
        let k = grid.index(9, 0).unwrap();
        assert!((grid.nodes[k].arm(Dir::East).theta() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn descriptors() {
        let d: ConvexDomain = "ellipse:a=2,b=1".parse().unwrap();
        assert_eq!(d.kind(), DomainKind::Ellipse { a: 2.0, b: 1.0 });
        assert_eq!(d.to_string().parse::<ConvexDomain>().unwrap(), d);
        let b: ConvexDomain = "blob:R=1,eps=0.05,k=3".parse().unwrap();
        assert_eq!(b.to_string(), "blob:R=1,eps=0.05,k=3");
        assert!("square:a=1".parse::<ConvexDomain>().is_err());
        assert!("disk:R=-1".parse::<ConvexDomain>().is_err());
    }

    #[test]
    fn off_centre_blob_has_shifted_centroid() {
        let b = ConvexDomain::blob(1.0, 0.1, 1).unwrap();
        assert!(b.centroid()[0] > 0.0);
        assert!(b.centroid()[1].abs() < 1e-12);
    }
}
