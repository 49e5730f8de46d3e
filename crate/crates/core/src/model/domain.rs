//! Axis-aligned boxes, finite unions of boxes, and the origin-anchored lattice `{kη} ∩ D`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::inf_norm;

const LATTICE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aabb {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Aabb {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::Dimension(format!(
                "box lo has {} entries, hi has {}",
                lo.len(),
                hi.len()
            )));
        }
        if lo.iter().chain(&hi).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("box bounds must be finite".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn cube(n: usize, lo: f64, hi: f64) -> Self {
        Self { lo: vec![lo; n], hi: vec![hi; n] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(l, h)| l > h)
    }

    /// Smallest side length.
    pub fn span(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| h - l)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| (h - l).max(0.0)).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    /// Infinity-norm distance from `x` to the box (0 inside).
    pub fn distance(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .fold(0.0_f64, |acc, (v, (l, h))| acc.max(l - v).max(v - h))
    }

    /// Largest infinity norm of any point of the box.
    pub fn sup_norm(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .fold(0.0_f64, |acc, (l, h)| acc.max(l.abs()).max(h.abs()))
    }

    pub fn shrink(&self, eps: f64) -> Option<Aabb> {
        let b = Aabb {
            lo: self.lo.iter().map(|l| l + eps).collect(),
            hi: self.hi.iter().map(|h| h - eps).collect(),
        };
        (!b.is_empty()).then_some(b)
    }

    pub fn inflate(&self, eps: f64) -> Aabb {
        Aabb {
            lo: self.lo.iter().map(|l| l - eps).collect(),
            hi: self.hi.iter().map(|h| h + eps).collect(),
        }
    }

    fn overlaps_interior(&self, other: &Aabb) -> bool {
        (0..self.dim()).all(|i| self.hi[i] > other.lo[i] && self.lo[i] < other.hi[i])
    }

    /// Closed boxes covering `self` minus the interior of `other`.
    pub fn subtract_open(&self, other: &Aabb) -> Vec<Aabb> {
        if !self.overlaps_interior(other) {
            return vec![self.clone()];
        }
        let mut out = Vec::new();
        let mut rest = self.clone();
        for i in 0..self.dim() {
            if rest.lo[i] < other.lo[i] {
                let mut slab = rest.clone();
                slab.hi[i] = other.lo[i];
                out.push(slab);
                rest.lo[i] = other.lo[i];
            }
            if rest.hi[i] > other.hi[i] {
                let mut slab = rest.clone();
                slab.lo[i] = other.hi[i];
                out.push(slab);
                rest.hi[i] = other.hi[i];
            }
        }
        out
    }
}

/// Finite union of closed boxes.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BoxSet {
    pub boxes: Vec<Aabb>,
}

impl BoxSet {
    pub fn new(boxes: Vec<Aabb>) -> Self {
        Self { boxes }
    }

    pub fn single(b: Aabb) -> Self {
        Self { boxes: vec![b] }
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.iter().all(Aabb::is_empty)
    }

    pub fn dim(&self) -> Option<usize> {
        self.boxes.first().map(Aabb::dim)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.boxes.iter().any(|b| b.contains(x))
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        self.boxes
            .iter()
            .map(|b| b.distance(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Minimum side length over all boxes.
    pub fn span(&self) -> f64 {
        self.boxes.iter().map(Aabb::span).fold(f64::INFINITY, f64::min)
    }

    pub fn sup_norm(&self) -> f64 {
        self.boxes.iter().map(Aabb::sup_norm).fold(0.0, f64::max)
    }

    pub fn bounding_box(&self) -> Option<Aabb> {
        let first = self.boxes.first()?;
        let mut bb = first.clone();
        for b in &self.boxes[1..] {
            for i in 0..bb.dim() {
                bb.lo[i] = bb.lo[i].min(b.lo[i]);
                bb.hi[i] = bb.hi[i].max(b.hi[i]);
            }
        }
        Some(bb)
    }

    /// Total volume, counting overlaps once per box (exact for disjoint unions).
    pub fn volume(&self) -> f64 {
        self.boxes.iter().map(Aabb::volume).sum()
    }

    pub fn contract(&self, eps: f64) -> BoxSet {
        BoxSet { boxes: self.boxes.iter().filter_map(|b| b.shrink(eps)).collect() }
    }

    pub fn inflate(&self, eps: f64) -> BoxSet {
        BoxSet { boxes: self.boxes.iter().map(|b| b.inflate(eps)).collect() }
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        match self.boxes.iter().find(|b| b.dim() != n) {
            Some(b) => Err(Error::Dimension(format!("box of dimension {} in {n}-dimensional set", b.dim()))),
            None => Ok(()),
        }
    }
}

/// `include \ exclude`, with both sets closed. Membership excludes the closed
/// `exclude`; distances are measured to the closure of the difference.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Region {
    pub include: BoxSet,
    pub exclude: BoxSet,
    pieces: Vec<Aabb>,
}

impl Region {
    pub fn new(include: BoxSet, exclude: BoxSet) -> Self {
        let mut pieces: Vec<Aabb> = include.boxes.iter().filter(|b| !b.is_empty()).cloned().collect();
        for z in &exclude.boxes {
            pieces = pieces.iter().flat_map(|b| b.subtract_open(z)).collect();
        }
        Self { include, exclude, pieces }
    }

    pub fn from_set(include: BoxSet) -> Self {
        Self::new(include, BoxSet::default())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.include.contains(x) && !self.exclude.contains(x)
    }

    pub fn distance(&self, x: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|b| b.distance(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Closed boxes whose union is the closure of the region.
    pub fn pieces(&self) -> &[Aabb] {
        &self.pieces
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }
}

/// The lattice points `{kη : k ∈ ℤⁿ}` inside a box union, numbered row-major
/// (first coordinate slowest) over the bounding index range.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice {
    eta: f64,
    k_lo: Vec<i64>,
    counts: Vec<u64>,
    strides: Vec<u64>,
    dense_len: u64,
    /// dense index -> compact index, `u32::MAX` for holes; `None` when every
    /// dense index is a member.
    compact: Option<Vec<u32>>,
    dense_of: Option<Vec<u64>>,
    len: usize,
}

impl Lattice {
    pub fn new(domain: &BoxSet, eta: f64) -> Result<Self> {
        Self::with_cap(domain, eta, u64::MAX)
    }

    pub fn with_cap(domain: &BoxSet, eta: f64, cap: u64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidArgument(format!("quantization {eta} must be positive")));
        }
        let bb = domain
            .bounding_box()
            .ok_or_else(|| Error::InvalidArgument("empty domain".into()))?;
        let n = bb.dim();
        let mut k_lo = Vec::with_capacity(n);
        let mut counts = Vec::with_capacity(n);
        for i in 0..n {
            let lo = (bb.lo[i] / eta - LATTICE_TOL).ceil() as i64;
            let hi = (bb.hi[i] / eta + LATTICE_TOL).floor() as i64;
            if hi < lo {
                return Err(Error::InvalidArgument(format!(
                    "no lattice point of spacing {eta} in dimension {i}"
                )));
            }
            k_lo.push(lo);
            counts.push((hi - lo + 1) as u64);
        }
        let dense: u128 = counts.iter().map(|&c| c as u128).product();
        if dense > cap as u128 {
            return Err(Error::CapExceeded { what: "lattice points", needed: dense, cap: cap as u128 });
        }
        let dense_len = dense as u64;
        let mut strides = vec![1u64; n];
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * counts[i + 1];
        }
        let mut lat = Lattice {
            eta,
            k_lo,
            counts,
            strides,
            dense_len,
            compact: None,
            dense_of: None,
            len: dense_len as usize,
        };
        if domain.boxes.len() > 1 {
            let tol = LATTICE_TOL * eta;
            let inflated = domain.inflate(tol);
            let mut compact = vec![u32::MAX; dense_len as usize];
            let mut dense_of = Vec::new();
            let mut x = vec![0.0; n];
            for d in 0..dense_len {
                lat.dense_point_into(d, &mut x);
                if inflated.contains(&x) {
                    compact[d as usize] = dense_of.len() as u32;
                    dense_of.push(d);
                }
            }
            lat.len = dense_of.len();
            lat.compact = Some(compact);
            lat.dense_of = Some(dense_of);
        }
        Ok(lat)
    }

    /// Number of lattice points a box union would contain, without allocating.
    pub fn count(domain: &BoxSet, eta: f64) -> Result<u128> {
        let bb = domain
            .bounding_box()
            .ok_or_else(|| Error::InvalidArgument("empty domain".into()))?;
        if domain.boxes.len() > 1 {
            return Ok(Self::new(domain, eta)?.len() as u128);
        }
        let mut total: u128 = 1;
        for i in 0..bb.dim() {
            let lo = (bb.lo[i] / eta - LATTICE_TOL).ceil() as i64;
            let hi = (bb.hi[i] / eta + LATTICE_TOL).floor() as i64;
            total *= (hi - lo + 1).max(0) as u128;
        }
        Ok(total)
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn dim(&self) -> usize {
        self.k_lo.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn k_lo(&self) -> &[i64] {
        &self.k_lo
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    fn dense_point_into(&self, d: u64, out: &mut [f64]) {
        let mut rem = d;
        for i in 0..self.dim() {
            let k = rem / self.strides[i];
            rem %= self.strides[i];
            out[i] = (self.k_lo[i] + k as i64) as f64 * self.eta;
        }
    }

    pub fn point_into(&self, idx: usize, out: &mut [f64]) {
        let d = match &self.dense_of {
            Some(map) => map[idx],
            None => idx as u64,
        };
        self.dense_point_into(d, out);
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.point_into(idx, &mut out);
        out
    }

    /// Integer coordinates of the lattice point nearest to `y`; exact
    /// half-way ties go to the smaller integer.
    pub fn nearest_k(&self, y: &[f64], k: &mut [i64]) {
        for i in 0..y.len() {
            k[i] = (y[i] / self.eta - 0.5).ceil() as i64;
        }
    }

    pub fn index_of_k(&self, k: &[i64]) -> Option<usize> {
        let mut d = 0u64;
        for i in 0..self.dim() {
            let off = k[i] - self.k_lo[i];
            if off < 0 || off as u64 >= self.counts[i] {
                return None;
            }
            d += off as u64 * self.strides[i];
        }
        match &self.compact {
            Some(map) => {
                let c = map[d as usize];
                (c != u32::MAX).then_some(c as usize)
            }
            None => Some(d as usize),
        }
    }

    /// Index of the nearest lattice point of `y`, or `None` if that point is
    /// not in the domain.
    pub fn nearest_index(&self, y: &[f64]) -> Option<usize> {
        let mut k = vec![0i64; self.dim()];
        self.nearest_k(y, &mut k);
        self.index_of_k(&k)
    }

    /// Indices of every lattice point within infinity distance `r` of `y`.
    pub fn indices_within(&self, y: &[f64], r: f64) -> Vec<usize> {
        let n = self.dim();
        let tol = LATTICE_TOL * self.eta;
        let lo: Vec<i64> = y.iter().map(|v| ((v - r) / self.eta - LATTICE_TOL).ceil() as i64).collect();
        let hi: Vec<i64> = y.iter().map(|v| ((v + r) / self.eta + LATTICE_TOL).floor() as i64).collect();
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut k = lo.clone();
        loop {
            let within = (0..n).all(|i| (k[i] as f64 * self.eta - y[i]).abs() <= r + tol);
            if within {
                if let Some(idx) = self.index_of_k(&k) {
                    out.push(idx);
                }
            }
            let mut i = n;
            loop {
                if i == 0 {
                    out.sort_unstable();
                    return out;
                }
                i -= 1;
                if k[i] < hi[i] {
                    k[i] += 1;
                    break;
                }
                k[i] = lo[i];
            }
        }
    }

    pub fn dense_len(&self) -> u64 {
        self.dense_len
    }
}

/// Largest infinity norm over a set of points (used for `sup ‖x‖`).
pub fn max_norm(points: &[Vec<f64>]) -> f64 {
    points.iter().map(|p| inf_norm(p)).fold(0.0, f64::max)
}
