//! Simple sets: compact domains equipped with a unit-norm polynomial
//! feature map that is only ever accessed through its kernel.
//!
//! | kind          | points              | kernel at degree `s`                              |
//! |---------------|---------------------|---------------------------------------------------|
//! | `Discrete(p)` | index in `0..p`     | `1[x = x']`                                       |
//! | `Trig(d)`     | `[0,1)^d`           | product of Dirichlet ratios                       |
//! | `Sphere(d)`   | unit sphere in R^{d+1} | `((1 + xᵀx') / 2)^s`                          |
//! | `Ball(d)`     | unit ball in R^d    | sphere kernel on lifts `(x, sqrt(1 - |x|²))`      |
//! | `BooleanCube(d)` | `{-1, 1}^d`      | normalized sum of parity characters, `|S| <= s`   |
//! | `Product`     | concatenation       | product of factor kernels                         |

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // float math outside std
use num_traits::Float as _;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{bail, Error, Result};
use crate::matalg::{kernel_matrix, numerical_rank};

/// Tolerance of the membership predicates.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// Smallest admissible eigenvalue of the leading kernel matrices of a sample.
pub const WELL_POSITIONED_TOL: f64 = 1e-10;

/// Number of re-draws attempted by [`SimpleSet::sample_points`].
pub const SAMPLE_RETRIES: u64 = 20;

/// Below this `|sin π(x - x')|` the Dirichlet ratio returns its limit.
const DIRICHLET_SINGULARITY: f64 = 1e-9;

/// Kind tag accepted by [`SimpleSet::new`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Discrete,
    Trig,
    Sphere,
    Ball,
    BooleanCube,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SetKind {
    /// `{0, .., size - 1}` with indicator features.
    Discrete { size: usize },
    /// Trigonometric polynomials on the torus `[0,1)^d`.
    Trig { d: usize },
    /// Unit sphere in `R^{d+1}`.
    Sphere { d: usize },
    /// Unit ball in `R^d`, seen as the projection of `Sphere(d)`.
    Ball { d: usize },
    /// `{-1, 1}^d`.
    BooleanCube { d: usize },
    Product(Vec<SimpleSet>),
}

/// A simple set at a given degree and hierarchy level.
///
/// `degree` is the degree `r` the problem data is written at; `level` is the
/// degree `s >= r` actually used by the kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleSet {
    kind: SetKind,
    degree: u32,
    level: u32,
}

impl SimpleSet {
    /// `make_set`: builds a non-product set. For `Kind::Discrete`, `d` is the
    /// number of atoms.
    pub fn new(kind: Kind, d: usize, r: u32) -> Result<Self> {
        if d == 0 {
            bail!(Argument, "dimension must be at least 1");
        }
        let kind = match kind {
            Kind::Discrete => SetKind::Discrete { size: d },
            Kind::Trig => SetKind::Trig { d },
            Kind::Sphere => SetKind::Sphere { d },
            Kind::Ball => SetKind::Ball { d },
            Kind::BooleanCube => {
                if d > 30 {
                    bail!(Unsupported, "boolean cube dimension {d} is too large");
                }
                SetKind::BooleanCube { d }
            }
        };
        if r == 0 && !matches!(kind, SetKind::Discrete { .. }) {
            bail!(
                Unsupported,
                "degree 0 cannot represent the identity map on {:?}",
                kind
            );
        }
        Ok(Self { kind, degree: r, level: r })
    }

    pub fn discrete(size: usize) -> Result<Self> {
        Self::new(Kind::Discrete, size, 1)
    }

    pub fn trig(d: usize, r: u32) -> Result<Self> {
        Self::new(Kind::Trig, d, r)
    }

    pub fn sphere(d: usize, r: u32) -> Result<Self> {
        Self::new(Kind::Sphere, d, r)
    }

    pub fn ball(d: usize, r: u32) -> Result<Self> {
        Self::new(Kind::Ball, d, r)
    }

    pub fn boolean_cube(d: usize, r: u32) -> Result<Self> {
        Self::new(Kind::BooleanCube, d, r)
    }

    /// Cartesian product with the tensor-product kernel.
    pub fn product(factors: Vec<SimpleSet>) -> Result<Self> {
        if factors.is_empty() {
            bail!(Argument, "a product needs at least one factor");
        }
        let degree = factors.iter().map(|f| f.degree).max().unwrap_or(0);
        let level = factors.iter().map(|f| f.level).max().unwrap_or(0);
        Ok(Self { kind: SetKind::Product(factors), degree, level })
    }

    pub fn kind(&self) -> &SetKind {
        &self.kind
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    /// Hierarchy level `s` used by the kernel.
    pub fn level(&self) -> u32 {
        self.level
    }

    /// Number of coordinates of a point.
    pub fn ambient_dim(&self) -> usize {
        match &self.kind {
            SetKind::Discrete { .. } => 1,
            SetKind::Trig { d } | SetKind::Ball { d } | SetKind::BooleanCube { d } => *d,
            SetKind::Sphere { d } => d + 1,
            SetKind::Product(fs) => fs.iter().map(|f| f.ambient_dim()).sum(),
        }
    }

    /// Same domain with the kernel of degree `s`.
    pub fn with_hierarchy(&self, s: u32) -> Result<Self> {
        if s < self.degree {
            bail!(Argument, "hierarchy level {s} is below the degree {}", self.degree);
        }
        let kind = match &self.kind {
            SetKind::Product(fs) => SetKind::Product(
                fs.iter()
                    .map(|f| if matches!(f.kind, SetKind::Discrete { .. }) { Ok(f.clone()) } else { f.with_hierarchy(s) })
                    .collect::<Result<Vec<_>>>()?,
            ),
            k => k.clone(),
        };
        Ok(Self { kind, degree: self.degree, level: s })
    }

    /// `(m, m', m'')`: dimensions of the spans of `φ(x)`, `φ(x)φ(x)ᵀ` and
    /// `φ(x)^{⊗4}` over the set.
    pub fn dims(&self) -> (usize, usize, usize) {
        let s = self.level as usize;
        match &self.kind {
            SetKind::Discrete { size } => (*size, *size, *size),
            SetKind::Trig { d } => {
                let p = |w: usize| (2 * w + 1).pow(*d as u32);
                (p(s), p(2 * s), p(4 * s))
            }
            SetKind::Sphere { d } | SetKind::Ball { d } => {
                (sphere_dim(*d, s), sphere_dim(*d, 2 * s), sphere_dim(*d, 4 * s))
            }
            SetKind::BooleanCube { d } => {
                (cube_dim(*d, s), cube_dim(*d, 2 * s), cube_dim(*d, 4 * s))
            }
            SetKind::Product(fs) => fs.iter().fold((1, 1, 1), |acc, f| {
                let (a, b, c) = f.dims();
                (acc.0 * a, acc.1 * b, acc.2 * c)
            }),
        }
    }

    /// Membership predicate, within [`MEMBERSHIP_TOL`].
    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.ambient_dim() || x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match &self.kind {
            SetKind::Discrete { size } => {
                let r = x[0].round();
                (x[0] - r).abs() <= MEMBERSHIP_TOL && r >= 0.0 && (r as usize) < *size
            }
            SetKind::Trig { .. } => x.iter().all(|&v| (-MEMBERSHIP_TOL..=1.0 + MEMBERSHIP_TOL).contains(&v)),
            SetKind::Sphere { .. } => (norm2(x) - 1.0).abs() <= MEMBERSHIP_TOL,
            SetKind::Ball { .. } => norm2(x) <= 1.0 + MEMBERSHIP_TOL,
            SetKind::BooleanCube { .. } => x.iter().all(|&v| (v.abs() - 1.0).abs() <= MEMBERSHIP_TOL),
            SetKind::Product(fs) => {
                let mut off = 0;
                fs.iter().all(|f| {
                    let n = f.ambient_dim();
                    let ok = f.contains(&x[off..off + n]);
                    off += n;
                    ok
                })
            }
        }
    }

    pub fn check_member(&self, x: &[f64]) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain(format!("{x:?} is not a point of {:?}", self.kind)))
        }
    }

    /// Kernel `k(x, y) = φ(x)ᵀφ(y)`, with unit diagonal.
    pub fn kernel(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_member(x)?;
        self.check_member(y)?;
        Ok(self.kernel_unchecked(x, y))
    }

    pub(crate) fn kernel_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let s = self.level;
        match &self.kind {
            SetKind::Discrete { .. } => {
                if x[0].round() == y[0].round() {
                    1.0
                } else {
                    0.0
                }
            }
            SetKind::Trig { .. } => x.iter().zip(y).map(|(a, b)| dirichlet(a - b, s)).product(),
            SetKind::Sphere { .. } => ((1.0 + dot(x, y)) * 0.5).powi(s as i32),
            SetKind::Ball { .. } => {
                let lift = (1.0 - norm2(x)).max(0.0).sqrt() * (1.0 - norm2(y)).max(0.0).sqrt();
                ((1.0 + dot(x, y) + lift) * 0.5).powi(s as i32)
            }
            SetKind::BooleanCube { d } => {
                // Elementary symmetric sums of t_i = x_i y_i up to order s.
                let top = (s as usize).min(*d);
                let mut e = vec![0.0; top + 1];
                e[0] = 1.0;
                for (a, b) in x.iter().zip(y) {
                    let t = a * b;
                    for k in (1..=top).rev() {
                        e[k] += t * e[k - 1];
                    }
                }
                e.iter().sum::<f64>() / cube_dim(*d, s as usize) as f64
            }
            SetKind::Product(fs) => {
                let mut off = 0;
                let mut acc = 1.0;
                for f in fs {
                    let n = f.ambient_dim();
                    acc *= f.kernel_unchecked(&x[off..off + n], &y[off..off + n]);
                    off += n;
                }
                acc
            }
        }
    }

    /// Deterministic well-positioned sample of `n` points.
    ///
    /// Torus coordinates follow an additive Kronecker sequence with a seeded
    /// offset, sphere and ball points are normalized Gaussians, and cube
    /// vertices are drawn without replacement. The leading `m` (and, when
    /// enough points are requested, `m'`) points must give kernel matrices of
    /// the matching power with smallest eigenvalue above
    /// [`WELL_POSITIONED_TOL`]; up to [`SAMPLE_RETRIES`] re-draws are tried.
    pub fn sample_points(&self, n: usize, seed: u64) -> Result<PointSet> {
        if n == 0 {
            bail!(Argument, "at least one point is required");
        }
        match &self.kind {
            SetKind::Discrete { size } if n > *size => {
                bail!(Argument, "cannot draw {n} distinct atoms out of {size}")
            }
            SetKind::BooleanCube { d } if n > (1usize << d) => {
                bail!(Argument, "cannot draw {n} distinct vertices of a {d}-cube")
            }
            _ => {}
        }
        let (m, m1, _) = self.dims();
        let mut worst = f64::INFINITY;
        for attempt in 0..SAMPLE_RETRIES {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt.wrapping_mul(0x9E37_79B9_7F4A_7C15)));
            let trig_total = self.trig_coords();
            let mut alphas = kronecker_steps(trig_total).into_iter();
            let points = self.generate(n, &mut rng, &mut alphas, true);
            let checks = [(m, 1), (m1, 2)];
            let mut ok = true;
            for &(count, power) in &checks {
                if count > n {
                    break;
                }
                let lmin = kernel_matrix(self, &points[..count], power).min_eigenvalue();
                if lmin <= WELL_POSITIONED_TOL {
                    worst = worst.min(lmin);
                    ok = false;
                    break;
                }
            }
            if ok {
                return Ok(PointSet { points, seed, set: self.clone() });
            }
        }
        Err(Error::Conditioning(format!(
            "no well-positioned sample of {n} points after {SAMPLE_RETRIES} draws (min eigenvalue {worst:e})"
        )))
    }

    fn trig_coords(&self) -> usize {
        match &self.kind {
            SetKind::Trig { d } => *d,
            SetKind::Product(fs) => fs.iter().map(|f| f.trig_coords()).sum(),
            _ => 0,
        }
    }

    fn generate(
        &self,
        n: usize,
        rng: &mut ChaCha8Rng,
        alphas: &mut impl Iterator<Item = f64>,
        standalone: bool,
    ) -> Vec<Vec<f64>> {
        match &self.kind {
            SetKind::Discrete { size } => {
                if standalone {
                    (0..n).map(|i| vec![i as f64]).collect()
                } else {
                    (0..n).map(|_| vec![rng.random_range(0..*size) as f64]).collect()
                }
            }
            SetKind::Trig { d } => {
                let steps: Vec<f64> = (0..*d).map(|_| alphas.next().unwrap_or(0.5)).collect();
                let offsets: Vec<f64> = (0..*d).map(|_| rng.random::<f64>()).collect();
                (0..n)
                    .map(|k| {
                        steps
                            .iter()
                            .zip(&offsets)
                            .map(|(a, u)| frac(u + (k as f64 + 1.0) * a))
                            .collect()
                    })
                    .collect()
            }
            SetKind::Sphere { d } => (0..n).map(|_| gaussian_direction(d + 1, rng)).collect(),
            SetKind::Ball { d } => (0..n)
                .map(|_| {
                    let mut v = gaussian_direction(d + 1, rng);
                    v.pop();
                    v
                })
                .collect(),
            SetKind::BooleanCube { d } => {
                let vertex = |idx: usize| -> Vec<f64> {
                    (0..*d).map(|b| if idx >> b & 1 == 1 { 1.0 } else { -1.0 }).collect()
                };
                if standalone {
                    rand::seq::index::sample(rng, 1usize << d, n).into_iter().map(vertex).collect()
                } else {
                    (0..n).map(|_| vertex(rng.random_range(0..1usize << d))).collect()
                }
            }
            SetKind::Product(fs) => {
                let parts: Vec<Vec<Vec<f64>>> = fs.iter().map(|f| f.generate(n, rng, alphas, false)).collect();
                (0..n).map(|i| parts.iter().flat_map(|p| p[i].iter().copied()).collect()).collect()
            }
        }
    }

    /// Weighted combination `Σ α_i x_i` mapped back onto the set.
    ///
    /// Torus coordinates use the circular mean `arg Σ α_i e^{2iπ x_i}` so that
    /// periodicity is respected; sphere points are renormalized, ball points
    /// clipped to the ball, cube coordinates rounded to a sign and discrete
    /// sets return the atom of largest weight.
    pub fn weighted_mean(&self, pts: &[Vec<f64>], alpha: &[f64]) -> Vec<f64> {
        match &self.kind {
            SetKind::Discrete { size } => {
                let mut w = vec![0.0; *size];
                for (p, a) in pts.iter().zip(alpha) {
                    w[p[0].round() as usize] += a;
                }
                let best = (0..*size).fold(0, |b, i| if w[i] > w[b] { i } else { b });
                vec![best as f64]
            }
            SetKind::Trig { d } => (0..*d)
                .map(|c| {
                    let (mut re, mut im) = (0.0, 0.0);
                    for (p, a) in pts.iter().zip(alpha) {
                        re += a * (2.0 * PI * p[c]).cos();
                        im += a * (2.0 * PI * p[c]).sin();
                    }
                    frac(im.atan2(re) / (2.0 * PI))
                })
                .collect(),
            SetKind::Sphere { .. } | SetKind::Ball { .. } | SetKind::BooleanCube { .. } => {
                let n = self.ambient_dim();
                let mut x = vec![0.0; n];
                for (p, a) in pts.iter().zip(alpha) {
                    for (xi, pi) in x.iter_mut().zip(p) {
                        *xi += a * pi;
                    }
                }
                self.project(x)
            }
            SetKind::Product(fs) => {
                let mut out = Vec::with_capacity(self.ambient_dim());
                let mut off = 0;
                for f in fs {
                    let n = f.ambient_dim();
                    let sub: Vec<Vec<f64>> = pts.iter().map(|p| p[off..off + n].to_vec()).collect();
                    out.extend(f.weighted_mean(&sub, alpha));
                    off += n;
                }
                out
            }
        }
    }

    /// Nearest point of the set (for the sphere, ball and cube).
    pub fn project(&self, mut x: Vec<f64>) -> Vec<f64> {
        match &self.kind {
            SetKind::Sphere { .. } => {
                let r = norm2(&x).sqrt();
                if r > 0.0 {
                    x.iter_mut().for_each(|v| *v /= r);
                } else {
                    x.iter_mut().for_each(|v| *v = 0.0);
                    x[0] = 1.0;
                }
                x
            }
            SetKind::Ball { .. } => {
                let r = norm2(&x).sqrt();
                if r > 1.0 {
                    x.iter_mut().for_each(|v| *v /= r);
                }
                x
            }
            SetKind::BooleanCube { .. } => x.into_iter().map(|v| if v >= 0.0 { 1.0 } else { -1.0 }).collect(),
            SetKind::Trig { .. } => x.into_iter().map(frac).collect(),
            SetKind::Discrete { size } => vec![x[0].round().clamp(0.0, (*size - 1) as f64)],
            SetKind::Product(fs) => {
                let mut out = Vec::with_capacity(x.len());
                let mut off = 0;
                for f in fs {
                    let n = f.ambient_dim();
                    out.extend(f.project(x[off..off + n].to_vec()));
                    off += n;
                }
                out
            }
        }
    }

    /// Numerical estimate of `(m, m', m'')` as ranks of the Gram matrices of
    /// `k`, `k²` and `k⁴` on an oversampled random point set.
    pub fn estimate_dims(&self, seed: u64) -> (usize, usize, usize) {
        let (_, _, m2) = self.dims();
        let n = match &self.kind {
            SetKind::Discrete { size } => *size,
            SetKind::BooleanCube { d } => 1usize << d,
            _ => 2 * m2 + 8,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut alphas = kronecker_steps(self.trig_coords()).into_iter();
        let pts = self.generate(n, &mut rng, &mut alphas, true);
        let rank = |power| numerical_rank(&kernel_matrix(self, &pts, power), 1e-9);
        (rank(1), rank(2), rank(4))
    }
}

/// A sample of points drawn from a simple set.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    points: Vec<Vec<f64>>,
    seed: u64,
    set: SimpleSet,
}

impl PointSet {
    /// Wraps caller-provided points after checking membership.
    pub fn from_points(set: &SimpleSet, points: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        for p in &points {
            set.check_member(p)?;
        }
        Ok(Self { points, seed, set: set.clone() })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn set(&self) -> &SimpleSet {
        &self.set
    }
}

/// Normalized Dirichlet kernel `sin((2s+1)πt) / ((2s+1) sin πt)`.
pub fn dirichlet(t: f64, s: u32) -> f64 {
    let w = (2 * s + 1) as f64;
    let den = (PI * t).sin();
    if den.abs() < DIRICHLET_SINGULARITY {
        return 1.0;
    }
    (w * PI * t).sin() / (w * den)
}

fn sphere_dim(d: usize, s: usize) -> usize {
    if s == 0 {
        return 1;
    }
    binomial(d + s, s) + binomial(d + s - 1, s - 1)
}

fn cube_dim(d: usize, s: usize) -> usize {
    (0..=s.min(d)).map(|i| binomial(d, i)).sum()
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// Kronecker steps `frac(2^{i/(D+1)})`, `i = 1..=D`.
pub(crate) fn kronecker_steps(total: usize) -> Vec<f64> {
    (1..=total).map(|i| frac((2.0f64).powf(i as f64 / (total as f64 + 1.0)))).collect()
}

fn gaussian_direction(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let r = norm2(&v).sqrt();
        if r > 1e-8 {
            return v.into_iter().map(|c| c / r).collect();
        }
    }
}

pub(crate) fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matalg::hadamard;

    #[test]
    fn dims_of_reference_sets() {
        assert_eq!(SimpleSet::trig(1, 1).unwrap().dims(), (3, 5, 9));
        assert_eq!(SimpleSet::trig(2, 1).unwrap().dims(), (9, 25, 81));
        assert_eq!(SimpleSet::sphere(2, 2).unwrap().dims().0, 9);
        assert_eq!(SimpleSet::boolean_cube(3, 1).unwrap().dims().0, 4);
        assert_eq!(SimpleSet::discrete(4).unwrap().dims(), (4, 4, 4));
    }

    #[test]
    fn hierarchy_recomputes_dims() {
        let t = SimpleSet::trig(1, 1).unwrap();
        let t2 = t.with_hierarchy(2).unwrap();
        assert_eq!((t2.dims().0, t2.dims().1), (5, 9));
        assert_eq!(t.with_hierarchy(1).unwrap().dims(), t.dims());
        assert_eq!(SimpleSet::boolean_cube(3, 1).unwrap().with_hierarchy(3).unwrap().dims().0, 8);
        assert!(matches!(SimpleSet::trig(1, 2).unwrap().with_hierarchy(1), Err(Error::Argument(_))));
    }

    #[test]
    fn degree_zero_is_rejected_off_discrete() {
        assert!(matches!(SimpleSet::boolean_cube(3, 0), Err(Error::Unsupported(_))));
        assert!(SimpleSet::new(Kind::Discrete, 3, 0).is_ok());
        assert!(SimpleSet::trig(0, 1).is_err());
    }

    #[test]
    fn trig_kernel_values() {
        let t = SimpleSet::trig(1, 1).unwrap();
        assert_eq!(t.kernel(&[0.0], &[0.0]).unwrap(), 1.0);
        assert!(t.kernel(&[0.0], &[1.0 / 3.0]).unwrap().abs() < 1e-15);
        assert!(t.kernel(&[0.0], &[1.5]).is_err());
    }

    #[test]
    fn dirichlet_matches_cosine_sum_near_singularity() {
        for &t in &[1e-10, 1e-7, 0.3, 0.999_999_999_9, 1.0] {
            for s in 1..4u32 {
                let sum: f64 = 1.0 + 2.0 * (1..=s).map(|k| (2.0 * PI * k as f64 * t).cos()).sum::<f64>();
                assert!((dirichlet(t, s) - sum / (2 * s + 1) as f64).abs() < 1e-12, "t={t} s={s}");
            }
        }
    }

    #[test]
    fn sphere_kernel_on_pole() {
        let s = SimpleSet::sphere(2, 2).unwrap();
        assert_eq!(s.kernel(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap(), 1.0);
        assert!(s.kernel(&[1.0, 0.1, 0.0], &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn sample_discrete_and_cube_exhaustively() {
        let d = SimpleSet::discrete(3).unwrap();
        for seed in [0, 5, 99] {
            let p = d.sample_points(3, seed).unwrap();
            assert_eq!(p.points(), &[vec![0.0], vec![1.0], vec![2.0]]);
        }
        let c = SimpleSet::boolean_cube(2, 1).unwrap();
        let mut pts = c.sample_points(4, 7).unwrap().points().to_vec();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(pts, vec![vec![-1.0, -1.0], vec![-1.0, 1.0], vec![1.0, -1.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn trig_sample_is_well_positioned() {
        let t = SimpleSet::trig(1, 1).unwrap();
        let p = t.sample_points(5, 0).unwrap();
        assert_eq!(p.len(), 5);
        for (i, a) in p.points().iter().enumerate() {
            assert!((0.0..1.0).contains(&a[0]));
            for b in &p.points()[..i] {
                assert!((a[0] - b[0]).abs() > 1e-6);
            }
        }
        assert!(kernel_matrix(&t, &p.points()[..3], 1).min_eigenvalue() > 1e-10);
        assert_eq!(p, t.sample_points(5, 0).unwrap());
    }

    #[test]
    fn sample_rejects_impossible_requests() {
        assert!(SimpleSet::discrete(2).unwrap().sample_points(3, 0).is_err());
        assert!(SimpleSet::trig(1, 1).unwrap().sample_points(0, 0).is_err());
    }

    #[test]
    fn closed_form_dims_match_numerical_ranks() {
        let sets = [
            SimpleSet::trig(1, 1).unwrap(),
            SimpleSet::trig(1, 2).unwrap(),
            SimpleSet::sphere(1, 1).unwrap(),
            SimpleSet::sphere(2, 1).unwrap(),
            SimpleSet::ball(1, 1).unwrap(),
            SimpleSet::ball(2, 1).unwrap(),
            SimpleSet::boolean_cube(3, 1).unwrap(),
            SimpleSet::boolean_cube(4, 1).unwrap(),
            SimpleSet::discrete(4).unwrap(),
            SimpleSet::product(vec![SimpleSet::trig(1, 1).unwrap(), SimpleSet::discrete(2).unwrap()]).unwrap(),
        ];
        for s in &sets {
            assert_eq!(s.estimate_dims(3), s.dims(), "{:?}", s.kind());
        }
    }

    #[test]
    fn squared_kernel_rank_is_m_prime_for_univariate_trig() {
        for r in 1..=3u32 {
            let t = SimpleSet::trig(1, r).unwrap();
            let (_, m1, _) = t.dims();
            let pts = t.sample_points(m1, 1).unwrap();
            let k = kernel_matrix(&t, pts.points(), 1);
            let k2 = hadamard(&k, &k).unwrap();
            assert_eq!(numerical_rank(&k2, 1e-9), 4 * r as usize + 1);
        }
    }

    #[test]
    fn circular_mean_respects_periodicity() {
        let t = SimpleSet::trig(1, 1).unwrap();
        let x = t.weighted_mean(&[vec![0.99], vec![0.01]], &[0.5, 0.5]);
        assert!(x[0] < 1e-12 || (1.0 - x[0]) < 1e-12);
    }
}
