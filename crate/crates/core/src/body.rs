//! Hyperconvex test bodies: balls and axis-aligned ellipsoids.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{kappa, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BodyKind {
    Ball,
    Ellipsoid,
}

impl fmt::Display for BodyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BodyKind::Ball => "ball",
            BodyKind::Ellipsoid => "ellipsoid",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadiiSummary {
    /// Largest principal radius of curvature over the boundary.
    pub sliding_r: f64,
    /// Smallest principal radius of curvature over the boundary.
    pub rolling_rho: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Body<const D: usize> {
    kind: BodyKind,
    center: Point<D>,
    semi_axes: [f64; D],
}

impl<const D: usize> Body<D> {
    pub fn ball(center: Point<D>, radius: f64) -> Result<Self> {
        Self::new(BodyKind::Ball, center, [radius; D])
    }

    pub fn unit_ball() -> Self {
        Self {
            kind: BodyKind::Ball,
            center: Point::origin(),
            semi_axes: [1.0; D],
        }
    }

    pub fn ellipsoid(center: Point<D>, semi_axes: [f64; D]) -> Result<Self> {
        Self::new(BodyKind::Ellipsoid, center, semi_axes)
    }

    pub fn new(kind: BodyKind, center: Point<D>, semi_axes: [f64; D]) -> Result<Self> {
        if !center.is_finite() {
            return Err(Error::domain("body center must be finite"));
        }
        if semi_axes.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::domain(format!(
                "semi-axes must be positive and finite, got {semi_axes:?}"
            )));
        }
        if kind == BodyKind::Ball && semi_axes.iter().any(|a| *a != semi_axes[0]) {
            return Err(Error::domain("a ball needs equal semi-axes"));
        }
        Ok(Self {
            kind,
            center,
            semi_axes,
        })
    }

    pub fn kind(&self) -> BodyKind {
        self.kind
    }

    pub fn center(&self) -> Point<D> {
        self.center
    }

    pub fn semi_axes(&self) -> [f64; D] {
        self.semi_axes
    }

    /// Compact tag used in CSV rows, e.g. `ball:1` or `ellipsoid:0.6x0.5`.
    pub fn label(&self) -> String {
        match self.kind {
            BodyKind::Ball => format!("ball:{}", self.semi_axes[0]),
            BodyKind::Ellipsoid => {
                let axes: Vec<String> = self.semi_axes.iter().map(|a| a.to_string()).collect();
                format!("ellipsoid:{}", axes.join("x"))
            }
        }
    }

    #[inline]
    pub fn contains(&self, z: &Point<D>) -> bool {
        let mut s = 0.0;
        for i in 0..D {
            let t = (z[i] - self.center[i]) / self.semi_axes[i];
            s += t * t;
        }
        s <= 1.0
    }

    pub fn volume(&self) -> f64 {
        kappa(D) * self.semi_axes.iter().product::<f64>()
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.semi_axes.iter().cloned().fold(0.0, f64::max)
    }

    /// One uniform point together with the number of box draws it took.
    pub(crate) fn sample_counted<R: Rng + ?Sized>(&self, rng: &mut R) -> (Point<D>, u64) {
        let mut attempts = 0;
        loop {
            attempts += 1;
            let mut p = self.center;
            for i in 0..D {
                p[i] += self.semi_axes[i] * rng.gen_range(-1.0..=1.0);
            }
            if self.contains(&p) {
                return (p, attempts);
            }
        }
    }

    #[inline]
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> Point<D> {
        self.sample_counted(rng).0
    }

    /// `count` independent uniform points by rejection from the bounding box.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<Point<D>> {
        (0..count).map(|_| self.sample_one(rng)).collect()
    }

    pub fn radii_summary(&self) -> RadiiSummary {
        let max = self.semi_axes.iter().cloned().fold(f64::MIN, f64::max);
        let min = self.semi_axes.iter().cloned().fold(f64::MAX, f64::min);
        match self.kind {
            BodyKind::Ball => RadiiSummary {
                sliding_r: max,
                rolling_rho: max,
            },
            BodyKind::Ellipsoid => RadiiSummary {
                sliding_r: max * max / min,
                rolling_rho: min * min / max,
            },
        }
    }

    /// Monte Carlo estimate of `V(K \ B(ball_center, r))` with its binomial
    /// standard error.
    pub fn cap_volume_mc<R: Rng + ?Sized>(
        &self,
        ball_center: &Point<D>,
        r: f64,
        rng: &mut R,
        m: usize,
    ) -> Result<(f64, f64)> {
        if m == 0 {
            return Err(Error::domain("cap volume needs m >= 1"));
        }
        let r2 = r * r;
        let outside = (0..m)
            .filter(|_| self.sample_one(rng).dist_sq(ball_center) > r2)
            .count();
        let f = outside as f64 / m as f64;
        let v = self.volume();
        Ok((v * f, v * (f * (1.0 - f) / m as f64).sqrt()))
    }
}
