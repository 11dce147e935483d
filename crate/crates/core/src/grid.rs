//! Radial domains, uniform radial grids and N-dimensional quadrature.
//!
//! A grid with `M` intervals has nodes `r_i = a + i h`, `i = 0..=M`. Each node
//! owns the dual cell `[r_i - h/2, r_i + h/2] ∩ [a, b]`, and its quadrature
//! weight is the exact N-dimensional measure of that spherical shell. For
//! `N = 1` this is the trapezoidal rule; in every dimension the weights add up
//! to `|Ω|` exactly and the rule is second order for smooth integrands. The
//! same cells carry the finite-volume Laplacian in [`crate::operators`], which
//! keeps the discrete operator exactly symmetric for this inner product.

use std::fmt::Write as _;
use std::sync::Arc;

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{LensError, Result};

/// Smallest admissible number of grid intervals.
pub const MIN_INTERVALS: usize = 16;

/// Measure convention of the unit 0-sphere for one-dimensional domains.
///
/// `Single` integrates over the plain interval `(a, b)`; `Double` over its even
/// reflection `(-b, -a) ∪ (a, b)`, which is what the N-dimensional formula
/// gives for `N = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum IntervalMeasure {
    #[default]
    Single,
    Double,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialDomain {
    inner: f64,
    outer: f64,
    dim: usize,
    interval_measure: IntervalMeasure,
}

impl RadialDomain {
    pub fn new(inner: f64, outer: f64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(LensError::InvalidDomain("dimension must be at least 1".into()));
        }
        if !(inner.is_finite() && outer.is_finite()) {
            return Err(LensError::InvalidDomain("radii must be finite".into()));
        }
        if inner < 0.0 {
            return Err(LensError::InvalidDomain(format!("inner radius {inner} < 0")));
        }
        if inner >= outer {
            return Err(LensError::InvalidDomain(format!(
                "inner radius {inner} must be smaller than outer radius {outer}"
            )));
        }
        Ok(Self {
            inner,
            outer,
            dim,
            interval_measure: IntervalMeasure::Single,
        })
    }

    pub fn ball(radius: f64, dim: usize) -> Result<Self> {
        Self::new(0.0, radius, dim)
    }

    pub fn annulus(inner: f64, outer: f64, dim: usize) -> Result<Self> {
        if inner <= 0.0 {
            return Err(LensError::InvalidDomain("annulus needs a positive inner radius".into()));
        }
        Self::new(inner, outer, dim)
    }

    /// One-dimensional interval `(a, b)` with the plain length measure.
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        Self::new(a, b, 1)
    }

    pub fn with_interval_measure(mut self, measure: IntervalMeasure) -> Self {
        self.interval_measure = measure;
        self
    }

    pub fn inner(&self) -> f64 {
        self.inner
    }

    pub fn outer(&self) -> f64 {
        self.outer
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn interval_measure(&self) -> IntervalMeasure {
        self.interval_measure
    }

    pub fn is_ball(&self) -> bool {
        self.inner == 0.0
    }

    /// Surface measure σ_{N-1} of the unit sphere in R^N.
    pub fn sphere_measure(&self) -> f64 {
        if self.dim == 1 {
            return match self.interval_measure {
                IntervalMeasure::Single => 1.0,
                IntervalMeasure::Double => 2.0,
            };
        }
        let half = self.dim as f64 / 2.0;
        2.0 * std::f64::consts::PI.powf(half) / gamma_half_integer(self.dim)
    }

    /// ω_N = σ_{N-1} / N, the volume of the unit ball.
    pub fn unit_ball_volume(&self) -> f64 {
        self.sphere_measure() / self.dim as f64
    }

    /// Measure of the shell `{lo < |x| < hi}`.
    pub fn shell_volume(&self, lo: f64, hi: f64) -> f64 {
        // hi^N - lo^N = (hi - lo) Σ hi^k lo^{N-1-k}, free of cancellation
        let n = self.dim;
        let mut sum = 0.0;
        let mut hk = 1.0;
        for k in 0..n {
            sum += hk * lo.powi((n - 1 - k) as i32);
            hk *= hi;
        }
        self.unit_ball_volume() * (hi - lo) * sum
    }

    /// |Ω|.
    pub fn volume(&self) -> f64 {
        self.shell_volume(self.inner, self.outer)
    }

    /// Volume coordinate `s(r) = |{a < |x| < r}|`.
    pub fn volume_coordinate(&self, r: f64) -> f64 {
        self.shell_volume(self.inner, r)
    }

    /// Inverse of [`Self::volume_coordinate`].
    pub fn radius_at_volume(&self, s: f64) -> f64 {
        let n = self.dim as f64;
        (self.inner.powf(n) + s / self.unit_ball_volume()).powf(1.0 / n)
    }

    /// Critical power `p_c = (N+2)/(N-2)`; `None` when `N ≤ 2`.
    pub fn critical_exponent(&self) -> Option<f64> {
        (self.dim >= 3).then(|| (self.dim as f64 + 2.0) / (self.dim as f64 - 2.0))
    }

    pub(crate) fn header(&self) -> String {
        format!("# N={} a={} b={}", self.dim, self.inner, self.outer)
    }
}

/// Γ(N/2) for a positive integer N.
fn gamma_half_integer(n: usize) -> f64 {
    let (mut x, mut g) = if n % 2 == 0 {
        (1.0, 1.0)
    } else {
        (0.5, std::f64::consts::PI.sqrt())
    };
    let target = n as f64 / 2.0;
    while x < target - 0.25 {
        g *= x;
        x += 1.0;
    }
    g
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    domain: RadialDomain,
    step: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    face_areas: Vec<f64>,
}

impl RadialGrid {
    /// Uniform grid with `intervals` cells of width `(b - a) / intervals`.
    pub fn new(domain: RadialDomain, intervals: usize) -> Result<Self> {
        if intervals < MIN_INTERVALS {
            return Err(LensError::GridTooSmall {
                min: MIN_INTERVALS,
                got: intervals,
            });
        }
        let (a, b) = (domain.inner(), domain.outer());
        let step = (b - a) / intervals as f64;
        let nodes: Vec<f64> = (0..=intervals)
            .map(|i| if i == intervals { b } else { a + i as f64 * step })
            .collect();
        let faces: Vec<f64> = (0..intervals).map(|i| a + (i as f64 + 0.5) * step).collect();
        let sigma = domain.sphere_measure();
        let face_areas = faces
            .iter()
            .map(|&r| sigma * r.powi(domain.dim() as i32 - 1))
            .collect();
        let weights = (0..=intervals)
            .map(|i| {
                let lo = if i == 0 { a } else { faces[i - 1] };
                let hi = if i == intervals { b } else { faces[i] };
                domain.shell_volume(lo, hi)
            })
            .collect();
        Ok(Self {
            domain,
            step,
            nodes,
            weights,
            face_areas,
        })
    }

    pub fn domain(&self) -> &RadialDomain {
        &self.domain
    }

    /// Number of nodes, `M + 1`.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Cell measures: `integrate(f) = Σ weights[i] f(r_i)`. The radial
    /// Jacobian `σ r^{N-1}` is already folded in.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `σ r^{N-1}` at the midpoints between consecutive nodes.
    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    /// Σ weights, equal to |Ω| up to roundoff.
    pub fn measure(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Left and right end of the dual cell of node `i`.
    pub fn cell_bounds(&self, i: usize) -> (f64, f64) {
        let lo = if i == 0 {
            self.nodes[0]
        } else {
            self.nodes[i] - 0.5 * self.step
        };
        let hi = if i + 1 == self.nodes.len() {
            self.nodes[i]
        } else {
            self.nodes[i] + 0.5 * self.step
        };
        (lo, hi)
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn same_as(&self, other: &RadialGrid) -> bool {
        std::ptr::eq(self, other)
            || (self.domain == other.domain && self.nodes.len() == other.nodes.len())
    }
}

/// Builds a shared grid; the entry point used by the rest of the crate.
pub fn build_grid(domain: RadialDomain, intervals: usize) -> Result<Arc<RadialGrid>> {
    RadialGrid::new(domain, intervals).map(Arc::new)
}

/// Values of a radial function at the nodes of a grid.
#[derive(Debug, Clone)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl PartialEq for RadialField {
    fn eq(&self, other: &Self) -> bool {
        self.grid.same_as(&other.grid) && self.values == other.values
    }
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LensError::InvalidInput(format!(
                "field has {} values, grid has {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LensError::NonFinite("field values"));
        }
        Ok(Self { grid, values })
    }

    /// Internal constructor for values already known to be finite.
    pub(crate) fn from_parts(grid: Arc<RadialGrid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    pub fn constant(grid: Arc<RadialGrid>, c: f64) -> Self {
        let n = grid.len();
        Self::from_parts(grid, vec![c; n])
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn check_same_grid(&self, other: &RadialField) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(LensError::GridMismatch)
        }
    }

    pub fn check_grid(&self, grid: &RadialGrid) -> Result<()> {
        if self.grid.same_as(grid) {
            Ok(())
        } else {
            Err(LensError::GridMismatch)
        }
    }

    /// `σ Σ w_i f_i r_i^{N-1}`, i.e. `∫_Ω f`.
    pub fn integrate(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn mean(&self) -> f64 {
        self.integrate() / self.grid.measure()
    }

    /// `(∫|f|^q)^{1/q}` for `q ≥ 1`, or `max |f|` for `q = ∞`.
    pub fn lq_norm(&self, q: f64) -> Result<f64> {
        if q.is_nan() || q < 1.0 {
            return Err(LensError::InvalidExponent {
                value: q,
                reason: "norm exponent must be at least 1",
            });
        }
        Ok(self.lq_norm_unchecked(q))
    }

    /// Same as [`Self::lq_norm`] without the `q ≥ 1` guard; the quasi-norms
    /// with `0 < q < 1` show up for sublinear exponents.
    pub(crate) fn lq_norm_unchecked(&self, q: f64) -> f64 {
        if q.is_infinite() {
            return self.sup_norm();
        }
        if q == 2.0 {
            return self.grid.integrate_sq(&self.values).sqrt();
        }
        let sum: f64 = self
            .grid
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v.abs().powf(q))
            .sum();
        sum.powf(1.0 / q)
    }

    pub fn l2_norm(&self) -> f64 {
        self.lq_norm_unchecked(2.0)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `∫ f g`.
    pub fn dot(&self, other: &RadialField) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .grid
            .weights()
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(w, (a, b))| w * a * b)
            .sum())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RadialField {
        RadialField::from_parts(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &RadialField, f: impl Fn(f64, f64) -> f64) -> Result<RadialField> {
        self.check_same_grid(other)?;
        Ok(RadialField::from_parts(
            self.grid.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn scaled(&self, factor: f64) -> RadialField {
        self.map(|v| factor * v)
    }

    pub fn shifted(&self, c: f64) -> RadialField {
        self.map(|v| v + c)
    }

    pub fn sub(&self, other: &RadialField) -> Result<RadialField> {
        self.zip_map(other, |a, b| a - b)
    }

    /// `sup |f - g|`.
    pub fn sup_distance(&self, other: &RadialField) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// Removes the mean so that `∫f = 0`.
    pub fn without_mean(&self) -> RadialField {
        self.shifted(-self.mean())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// CSV with one `r,value` row per node, headed by `# N=<N> a=<a> b=<b>`.
    pub fn to_csv(&self) -> String {
        let mut out = self.grid.domain().header();
        out.push('\n');
        for (r, v) in self.grid.nodes().iter().zip(&self.values) {
            let _ = writeln!(out, "{r},{v}");
        }
        out
    }

    /// Parses the CSV written by [`Self::to_csv`] and rebuilds a matching grid.
    pub fn from_csv(text: &str) -> Result<RadialField> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| LensError::Parse("empty input".into()))?;
        let domain = parse_header(header)?;
        let mut rs = Vec::new();
        let mut vs = Vec::new();
        for line in lines {
            let (r, v) = line
                .split_once(',')
                .ok_or_else(|| LensError::Parse(format!("bad row `{line}`")))?;
            rs.push(parse_f64(r)?);
            vs.push(parse_f64(v)?);
        }
        if rs.len() < 2 {
            return Err(LensError::Parse("need at least two rows".into()));
        }
        let grid = build_grid(domain, rs.len() - 1)?;
        let scale = domain.outer().abs().max(1.0);
        for (r, node) in rs.iter().zip(grid.nodes()) {
            if (r - node).abs() > 1e-9 * scale {
                return Err(LensError::Parse(format!(
                    "row radius {r} does not match uniform node {node}"
                )));
            }
        }
        RadialField::new(grid, vs)
    }
}

impl RadialGrid {
    fn integrate_sq(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v * v).sum()
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|e| LensError::Parse(format!("`{}`: {e}", s.trim())))
}

fn parse_header(line: &str) -> Result<RadialDomain> {
    let body = line
        .trim()
        .strip_prefix('#')
        .ok_or_else(|| LensError::Parse("missing `#` header".into()))?;
    let (mut n, mut a, mut b) = (None, None, None);
    for token in body.split_whitespace() {
        match token.split_once('=') {
            Some(("N", v)) => {
                n = Some(
                    v.parse::<usize>()
                        .map_err(|e| LensError::Parse(format!("N: {e}")))?,
                )
            }
            Some(("a", v)) => a = Some(parse_f64(v)?),
            Some(("b", v)) => b = Some(parse_f64(v)?),
            _ => return Err(LensError::Parse(format!("unexpected header token `{token}`"))),
        }
    }
    match (n, a, b) {
        (Some(n), Some(a), Some(b)) => RadialDomain::new(a, b, n),
        _ => Err(LensError::Parse("header must carry N, a and b".into())),
    }
}

impl Serialize for RadialField {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("RadialField", 2)?;
        s.serialize_field("r", self.grid.nodes())?;
        s.serialize_field("values", &self.values)?;
        s.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn interval_with_doubled_measure() {
        let d = RadialDomain::interval(0.0, 1.0)
            .unwrap()
            .with_interval_measure(IntervalMeasure::Double);
        let g = build_grid(d, 100).unwrap();
        assert!((g.measure() - 2.0).abs() < 1e-14);
        let plain = build_grid(RadialDomain::interval(0.0, 1.0).unwrap(), 100).unwrap();
        assert!((plain.measure() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn reference_annulus_volume() {
        let d = RadialDomain::annulus(1.0, 5.21021, 4).unwrap();
        let g = build_grid(d, 2000).unwrap();
        let omega4 = PI * PI / 2.0;
        let exact = omega4 * (5.21021f64.powi(4) - 1.0);
        assert!(rel(g.measure(), exact) < 1e-10);
    }

    #[test]
    fn unit_ball_volume_3d() {
        let g = build_grid(RadialDomain::ball(1.0, 3).unwrap(), 200).unwrap();
        assert!((g.measure() - 4.0 * PI / 3.0).abs() < 1e-6);
    }

    #[test]
    fn sphere_measures() {
        let cases = [(2, 2.0 * PI), (3, 4.0 * PI), (4, 2.0 * PI * PI), (5, 8.0 * PI * PI / 3.0)];
        for (n, s) in cases {
            let d = RadialDomain::ball(1.0, n).unwrap();
            assert!(rel(d.sphere_measure(), s) < 1e-14, "N={n}");
        }
    }

    #[test]
    fn integrate_constant_and_linear() {
        let g = build_grid(RadialDomain::ball(1.0, 2).unwrap(), 400).unwrap();
        let one = RadialField::constant(g.clone(), 1.0);
        assert!(rel(one.integrate(), PI) < 1e-14);
        // ∫_{B_1 ⊂ R^2} |x| dx = 2π/3
        let r = RadialField::from_fn(g, |r| r).unwrap();
        assert!(rel(r.integrate(), 2.0 * PI / 3.0) < 1e-5);
    }

    #[test]
    fn second_order_quadrature() {
        let d = RadialDomain::annulus(0.5, 2.0, 3).unwrap();
        let f = |r: f64| (3.0 * r).sin() + r * r;
        // ∫ σ r² f dr with σ = 4π, via high-order composite Simpson on a fine mesh
        let exact = {
            let n = 200_000;
            let h = 1.5 / n as f64;
            let g = |r: f64| 4.0 * PI * r * r * f(r);
            let mut s = g(0.5) + g(2.0);
            for i in 1..n {
                let r = 0.5 + i as f64 * h;
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(r);
            }
            s * h / 3.0
        };
        let err = |m| {
            let g = build_grid(d, m).unwrap();
            (RadialField::from_fn(g, f).unwrap().integrate() - exact).abs()
        };
        let (e1, e2) = (err(100), err(200));
        assert!(e1 / e2 >= 3.9, "ratio {}", e1 / e2);
    }

    #[test]
    fn norms() {
        let g = build_grid(RadialDomain::interval(0.0, PI).unwrap(), 4096).unwrap();
        let psi = RadialField::from_fn(g.clone(), |r| (2.0 / PI).sqrt() * r.cos()).unwrap();
        assert!((psi.l2_norm() - 1.0).abs() < 1e-6);
        assert!((psi.lq_norm(f64::INFINITY).unwrap() - (2.0 / PI).sqrt()).abs() < 1e-15);
        assert!(psi.lq_norm(0.5).is_err());
        let twice = psi.scaled(-2.0);
        assert!((twice.lq_norm(3.0).unwrap() - 2.0 * psi.lq_norm(3.0).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RadialDomain::new(1.0, 1.0, 3).is_err());
        assert!(RadialDomain::new(2.0, 1.0, 3).is_err());
        assert!(RadialDomain::new(0.0, 1.0, 0).is_err());
        let d = RadialDomain::ball(1.0, 3).unwrap();
        assert!(matches!(
            RadialGrid::new(d, 15),
            Err(LensError::GridTooSmall { .. })
        ));
        let g = build_grid(d, 16).unwrap();
        assert!(RadialField::new(g.clone(), vec![0.0; 5]).is_err());
        let mut v = vec![0.0; 17];
        v[3] = f64::NAN;
        assert!(RadialField::new(g, v).is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let d = RadialDomain::annulus(1.0, 5.21021, 4).unwrap();
        let g = build_grid(d, 64).unwrap();
        let f = RadialField::from_fn(g, |r| (r - 2.0).tanh()).unwrap();
        let text = f.to_csv();
        assert!(text.starts_with("# N=4 a=1 b=5.21021\n"));
        let back = RadialField::from_csv(&text).unwrap();
        assert_eq!(back.values(), f.values());
        assert_eq!(back.grid().domain(), f.grid().domain());
    }

    #[test]
    fn volume_coordinate_inverts() {
        let d = RadialDomain::annulus(1.0, 3.0, 4).unwrap();
        for r in [1.0, 1.5, 2.2, 3.0] {
            let s = d.volume_coordinate(r);
            assert!((d.radius_at_volume(s) - r).abs() < 1e-12);
        }
        assert_eq!(d.critical_exponent(), Some(3.0));
        assert_eq!(RadialDomain::interval(0.0, 1.0).unwrap().critical_exponent(), None);
    }
}
