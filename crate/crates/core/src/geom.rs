//! Low-dimensional geometric predicates and constructions.
//!
//! Everything here is a pure function of its inputs. Points carry their
//! dimension as a const parameter; the hull algorithms elsewhere only
//! instantiate `D = 2` and `D = 3`, while the constants and determinant
//! helpers work for any `D`.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Absolute slack for sphere-contact comparisons on unit-scale data.
pub const CONTACT_TOL: f64 = 1e-9;

/// Threshold on the scaled Gram determinant below which a point set is
/// treated as affinely dependent.
pub const GRAM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point<const D: usize>(pub [f64; D]);

impl<const D: usize> Default for Point<D> {
    fn default() -> Self {
        Self([0.0; D])
    }
}

impl<const D: usize> Point<D> {
    pub const fn new(coords: [f64; D]) -> Self {
        Self(coords)
    }

    pub fn origin() -> Self {
        Self([0.0; D])
    }

    /// The `k`-th standard basis vector.
    pub fn unit(k: usize) -> Self {
        let mut c = [0.0; D];
        c[k] = 1.0;
        Self(c)
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        if coords.len() != D {
            return Err(Error::domain(format!("expected {D} coordinates, got {}", coords.len())));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("coordinates must be finite"));
        }
        let mut c = [0.0; D];
        c.copy_from_slice(coords);
        Ok(Self(c))
    }

    pub fn coords(&self) -> &[f64; D] {
        &self.0
    }

    #[inline]
    pub fn dot(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for i in 0..D {
            s += self.0[i] * other.0[i];
        }
        s
    }

    #[inline]
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn dist_sq(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for i in 0..D {
            let t = self.0[i] - other.0[i];
            s += t * t;
        }
        s
    }

    #[inline]
    pub fn dist(&self, other: &Self) -> f64 {
        self.dist_sq(other).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0).then(|| *self * (1.0 / n))
    }

    /// Lexicographic sign convention: flips the vector so its first
    /// non-negligible coordinate is positive.
    pub fn lex_positive(self) -> Self {
        for c in self.0 {
            if c.abs() > 1e-12 {
                return if c > 0.0 { self } else { -self };
            }
        }
        self
    }
}

impl<const D: usize> Add for Point<D> {
    type Output = Self;
    #[inline]
    fn add(mut self, rhs: Self) -> Self {
        for i in 0..D {
            self.0[i] += rhs.0[i];
        }
        self
    }
}

impl<const D: usize> AddAssign for Point<D> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        for i in 0..D {
            self.0[i] += rhs.0[i];
        }
    }
}

impl<const D: usize> Sub for Point<D> {
    type Output = Self;
    #[inline]
    fn sub(mut self, rhs: Self) -> Self {
        for i in 0..D {
            self.0[i] -= rhs.0[i];
        }
        self
    }
}

impl<const D: usize> Mul<f64> for Point<D> {
    type Output = Self;
    #[inline]
    fn mul(mut self, rhs: f64) -> Self {
        for c in &mut self.0 {
            *c *= rhs;
        }
        self
    }
}

impl<const D: usize> Neg for Point<D> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl<const D: usize> Index<usize> for Point<D> {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl<const D: usize> IndexMut<usize> for Point<D> {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

/// A sphere, possibly living in a lower-dimensional affine flat.
#[derive(Clone, Debug, PartialEq)]
pub struct Sphere<const D: usize> {
    pub center: Point<D>,
    pub radius: f64,
    /// Orthonormal basis of the flat through `center` containing the sphere.
    /// Empty when the sphere is full-dimensional.
    pub flat_basis: Vec<Point<D>>,
}

impl<const D: usize> Sphere<D> {
    /// Dimension of the sphere itself (`-1`-free: a 0-sphere is two points).
    pub fn sphere_dim(&self) -> usize {
        let flat_dim = if self.flat_basis.is_empty() {
            D
        } else {
            self.flat_basis.len()
        };
        flat_dim - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DimConstants {
    pub d: usize,
    /// Volume of the unit ball.
    pub kappa: f64,
    /// Surface measure of the unit sphere.
    pub omega: f64,
}

/// `Γ(m/2)` for a positive integer `m`, exact up to rounding of the
/// product (integers and half-integers only).
pub fn gamma_half(m: usize) -> f64 {
    assert!(m >= 1, "gamma_half requires m >= 1");
    let (mut acc, mut x) = if m % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    let target = m as f64 / 2.0;
    while x < target - 0.25 {
        acc *= x;
        x += 1.0;
    }
    acc
}

/// `κ_d` for any `d ≥ 0` (no range check; `κ_0 = 1`).
pub(crate) fn kappa(d: usize) -> f64 {
    PI.powf(d as f64 / 2.0) / gamma_half(d + 2)
}

/// Unit-ball volume and unit-sphere measure in dimension `d ∈ [1, 10]`.
pub fn unit_ball_constants(d: usize) -> Result<DimConstants> {
    if !(1..=10).contains(&d) {
        return Err(Error::domain(format!("dimension {d} outside 1..=10")));
    }
    let kappa = kappa(d);
    Ok(DimConstants {
        d,
        kappa,
        omega: d as f64 * kappa,
    })
}

/// Determinant by Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
pub fn determinant<const D: usize>(mut m: [[f64; D]; D]) -> f64 {
    let mut det = 1.0;
    for col in 0..D {
        let mut piv = col;
        for row in col + 1..D {
            if m[row][col].abs() > m[piv][col].abs() {
                piv = row;
            }
        }
        if m[piv][col] == 0.0 {
            return 0.0;
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        let p = m[col][col];
        det *= p;
        for row in col + 1..D {
            let f = m[row][col] / p;
            if f != 0.0 {
                for k in col..D {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    det
}

/// Absolute determinant of `D` vectors in `R^D`, without the length check.
#[inline]
pub(crate) fn abs_det<const D: usize>(vectors: &[Point<D>]) -> f64 {
    match D {
        2 => (vectors[0][0] * vectors[1][1] - vectors[0][1] * vectors[1][0]).abs(),
        3 => {
            let (a, b, c) = (vectors[0], vectors[1], vectors[2]);
            (a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                + a[2] * (b[0] * c[1] - b[1] * c[0]))
                .abs()
        }
        _ => {
            let mut m = [[0.0; D]; D];
            for (row, v) in m.iter_mut().zip(vectors) {
                *row = v.0;
            }
            determinant(m).abs()
        }
    }
}

/// Volume of the parallelotope spanned by `D` vectors in `R^D`.
pub fn parallelotope_volume<const D: usize>(vectors: &[Point<D>]) -> Result<f64> {
    if vectors.len() != D {
        return Err(Error::domain(format!(
            "parallelotope in R^{D} needs {D} vectors, got {}",
            vectors.len()
        )));
    }
    Ok(abs_det(vectors))
}

/// Volume of the simplex with `D + 1` vertices in `R^D`.
pub fn simplex_volume<const D: usize>(points: &[Point<D>]) -> Result<f64> {
    if points.len() != D + 1 {
        return Err(Error::domain(format!(
            "simplex in R^{D} needs {} vertices, got {}",
            D + 1,
            points.len()
        )));
    }
    let mut edges = [Point::<D>::origin(); D];
    for (e, p) in edges.iter_mut().zip(&points[1..]) {
        *e = *p - points[0];
    }
    let factorial: f64 = (1..=D).map(|k| k as f64).product();
    Ok(abs_det(&edges) / factorial)
}

/// Orthonormal frame of the affine hull of a point set together with the
/// circumcenter inside that hull.
#[derive(Clone, Copy, Debug)]
pub(crate) struct AffineFrame<const D: usize> {
    pub center: Point<D>,
    pub radius: f64,
    /// First `len` entries are an orthonormal basis of the difference span.
    pub basis: [Point<D>; D],
    pub len: usize,
}

impl<const D: usize> AffineFrame<D> {
    /// Builds the frame for `1 ≤ k ≤ D + 1` points.
    pub fn new(points: &[Point<D>]) -> Result<Self> {
        let k = points.len();
        if k == 0 || k > D + 1 {
            return Err(Error::domain(format!(
                "affine frame in R^{D} needs 1..={} points, got {k}",
                D + 1
            )));
        }
        let x0 = points[0];
        let m = k - 1;
        let mut basis = [Point::<D>::origin(); D];
        // r[i][j] = <v_i, q_j>, lower triangular in (i, j).
        let mut r = [[0.0; D]; D];
        let mut scaled_gram = 1.0;
        for i in 0..m {
            let v = points[i + 1] - x0;
            let vn2 = v.norm_sq();
            let mut w = v;
            for j in 0..i {
                let c = v.dot(&basis[j]);
                r[i][j] = c;
                w = w - basis[j] * c;
            }
            let wn2 = w.norm_sq();
            if vn2 == 0.0 || !(wn2 / vn2 > 0.0) {
                return Err(Error::degenerate("points are affinely dependent"));
            }
            scaled_gram *= wn2 / vn2;
            if scaled_gram <= GRAM_TOL {
                return Err(Error::degenerate(format!(
                    "points are affinely dependent (scaled Gram determinant {scaled_gram:.3e})"
                )));
            }
            let wn = wn2.sqrt();
            r[i][i] = wn;
            basis[i] = w * (1.0 / wn);
        }
        // Offset y = Σ y_j q_j with <y, v_i> = |v_i|² / 2.
        let mut y = [0.0; D];
        for i in 0..m {
            let v = points[i + 1] - x0;
            let mut rhs = 0.5 * v.norm_sq();
            for j in 0..i {
                rhs -= r[i][j] * y[j];
            }
            y[i] = rhs / r[i][i];
        }
        let mut offset = Point::<D>::origin();
        for j in 0..m {
            offset += basis[j] * y[j];
        }
        Ok(Self {
            center: x0 + offset,
            radius: offset.norm(),
            basis,
            len: m,
        })
    }

    /// Orthonormal basis of the orthogonal complement of the frame span.
    pub fn complement(&self) -> Vec<Point<D>> {
        let mut all: Vec<Point<D>> = self.basis[..self.len].to_vec();
        let mut out = Vec::with_capacity(D - self.len);
        if D == 3 && self.len == 2 {
            out.push(cross3(&self.basis[0], &self.basis[1]).lex_positive());
            return out;
        }
        if D == 2 && self.len == 1 {
            let q = self.basis[0];
            let mut n = Point::<D>::origin();
            n[0] = -q[1];
            n[1] = q[0];
            out.push(n.lex_positive());
            return out;
        }
        for k in 0..D {
            let mut w = Point::<D>::unit(k);
            for q in &all {
                w = w - *q * w.dot(q);
            }
            // Re-orthogonalize once for stability.
            for q in &all {
                w = w - *q * w.dot(q);
            }
            let n = w.norm();
            if n > 1e-6 {
                let q = w * (1.0 / n);
                all.push(q);
                out.push(q);
                if all.len() == D {
                    break;
                }
            }
        }
        if out.len() == 1 {
            out[0] = out[0].lex_positive();
        }
        out
    }

    /// Unit normal of a hyperplane frame (requires `len == D - 1`),
    /// oriented lexicographically positive.
    #[inline]
    pub fn unit_normal(&self) -> Point<D> {
        debug_assert_eq!(self.len + 1, D);
        match D {
            2 => {
                let q = self.basis[0];
                let mut n = Point::<D>::origin();
                n[0] = -q[1];
                n[1] = q[0];
                n.lex_positive()
            }
            3 => cross3(&self.basis[0], &self.basis[1]).lex_positive(),
            _ => self.complement()[0],
        }
    }
}

#[inline]
fn cross3<const D: usize>(a: &Point<D>, b: &Point<D>) -> Point<D> {
    let mut c = Point::<D>::origin();
    c[0] = a[1] * b[2] - a[2] * b[1];
    c[1] = a[2] * b[0] - a[0] * b[2];
    c[2] = a[0] * b[1] - a[1] * b[0];
    c
}

/// The unique sphere through `2 ≤ k ≤ D + 1` affinely independent points
/// inside their affine hull.
pub fn circumsphere<const D: usize>(points: &[Point<D>]) -> Result<Sphere<D>> {
    if points.len() < 2 {
        return Err(Error::domain("circumsphere needs at least two points"));
    }
    let frame = AffineFrame::new(points)?;
    let flat_basis = if frame.len == D {
        Vec::new()
    } else {
        frame.basis[..frame.len].to_vec()
    };
    Ok(Sphere {
        center: frame.center,
        radius: frame.radius,
        flat_basis,
    })
}

/// Squared height of the radius-`r` centers above a circumcenter of
/// radius `rho`, or `None` when `rho > r`. Near-tangent cases snap to 0.
#[inline]
pub(crate) fn lift_height(rho: f64, r: f64) -> Option<f64> {
    let h2 = r * r - rho * rho;
    let tol = 1e-12 * r * r;
    if h2 < -tol {
        None
    } else if h2 <= tol {
        Some(0.0)
    } else {
        Some(h2.sqrt())
    }
}

/// Centers of the two radius-`r` spheres through `D` affinely independent
/// points, as `(p_minus, p_plus)`, or `None` when the circumradius exceeds `r`.
///
/// `p_plus - p_minus` points along the lexicographically positive normal of
/// the points' affine hull.
pub fn radius_r_centers<const D: usize>(points: &[Point<D>], r: f64) -> Result<Option<(Point<D>, Point<D>)>> {
    if points.len() != D {
        return Err(Error::domain(format!(
            "radius-r centers in R^{D} need {D} points, got {}",
            points.len()
        )));
    }
    check_radius(r)?;
    let frame = AffineFrame::new(points)?;
    Ok(centers_from_frame(&frame, r))
}

#[inline]
pub(crate) fn centers_from_frame<const D: usize>(frame: &AffineFrame<D>, r: f64) -> Option<(Point<D>, Point<D>)> {
    let h = lift_height(frame.radius, r)?;
    let nu = frame.unit_normal();
    Some((frame.center - nu * h, frame.center + nu * h))
}

pub(crate) fn check_radius(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("radius must be positive, got {r}")))
    }
}

/// The set `{p : |p - x_i| = r for all i}` for `1 ≤ k ≤ D` affinely
/// independent centers, or `None` when it is empty.
pub fn sphere_intersection_locus<const D: usize>(centers: &[Point<D>], r: f64) -> Result<Option<Sphere<D>>> {
    if centers.is_empty() || centers.len() > D {
        return Err(Error::domain(format!(
            "locus in R^{D} needs 1..={D} centers, got {}",
            centers.len()
        )));
    }
    check_radius(r)?;
    let frame = AffineFrame::new(centers)?;
    Ok(locus_from_frame(&frame, r))
}

pub(crate) fn locus_from_frame<const D: usize>(frame: &AffineFrame<D>, r: f64) -> Option<Sphere<D>> {
    let radius = lift_height(frame.radius, r)?;
    let flat_basis = if frame.len == 0 { Vec::new() } else { frame.complement() };
    Some(Sphere {
        center: frame.center,
        radius,
        flat_basis,
    })
}

/// Whether `z` lies in the `r`-spindle of `x` and `y`: the intersection of
/// all closed radius-`r` balls containing both points.
pub fn in_spindle<const D: usize>(z: &Point<D>, x: &Point<D>, y: &Point<D>, r: f64) -> Result<bool> {
    check_radius(r)?;
    let len = x.dist(y);
    if len > 2.0 * r * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "no radius-{r} ball contains both points (distance {len})"
        )));
    }
    if len == 0.0 {
        return Ok(z.dist(x) <= CONTACT_TOL);
    }
    let mid = (*x + *y) * 0.5;
    let axis = (*y - *x) * (1.0 / len);
    let rel = *z - mid;
    let s = rel.dot(&axis);
    let radial = (rel - axis * s).norm();
    // Distance from the axis to the circle of extreme centers.
    let c0 = (r * r - 0.25 * len * len).max(0.0).sqrt();
    let far = ((radial + c0).powi(2) + s * s).sqrt();
    Ok(far <= r + 1e-12 * r.max(1.0))
}
