//! Facets, vertices and membership for the ball-polytope of a sample: the
//! intersection of all radius-`r` balls containing the points.
//!
//! Two routes are provided. The oracle routes follow the definitions by
//! exhaustive enumeration. The accelerated routes restrict candidates to
//! Euclidean hull vertices and, in space, to pairs whose sphere intersection
//! circle meets the center body. Tests pin the two to each other.

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::body::Body;
use crate::error::{Error, Result};
use crate::geom::{centers_from_frame, check_radius, sphere_intersection_locus, AffineFrame, Point, CONTACT_TOL};
use crate::hull::ConvexHull;

#[derive(Clone, Debug, PartialEq)]
pub struct SampleInstance<const D: usize> {
    pub points: Vec<Point<D>>,
    pub body: Body<D>,
    pub r: f64,
    pub seed: u64,
}

impl<const D: usize> SampleInstance<D> {
    pub fn new(points: Vec<Point<D>>, body: Body<D>, r: f64, seed: u64) -> Result<Self> {
        check_radius(r)?;
        if let Some(i) = points.iter().position(|p| !p.is_finite() || !body.contains(p)) {
            return Err(Error::domain(format!("sample point {i} lies outside the body")));
        }
        Ok(Self { points, body, r, seed })
    }

    /// `n` uniform points from `body`.
    pub fn draw<R: Rng + ?Sized>(body: Body<D>, r: f64, n: usize, rng: &mut R, seed: u64) -> Result<Self> {
        check_radius(r)?;
        Ok(Self {
            points: body.sample_uniform(rng, n),
            body,
            r,
            seed,
        })
    }

    /// [`SampleInstance::draw`] from a ChaCha8 stream seeded with `seed`.
    pub fn draw_seeded(body: Body<D>, r: f64, n: usize, seed: u64) -> Result<Self> {
        Self::draw(body, r, n, &mut ChaCha8Rng::seed_from_u64(seed), seed)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn without(&self, skip: usize) -> Vec<Point<D>> {
        self.points
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .map(|(_, p)| *p)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Minus,
    Plus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FacetRecord<const D: usize> {
    pub indices: [usize; D],
    pub side: Side,
    pub support_center: Point<D>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HullSummary<const D: usize> {
    pub facet_count: usize,
    /// Sample points lying on at least one facet.
    pub vertex_indices: BTreeSet<usize>,
    pub facets: Vec<FacetRecord<D>>,
}

impl<const D: usize> HullSummary<D> {
    fn from_facets(mut facets: Vec<FacetRecord<D>>) -> Self {
        facets.sort_by(|a, b| a.indices.cmp(&b.indices).then(a.side.cmp(&b.side)));
        let vertex_indices = facets.iter().flat_map(|f| f.indices).collect();
        Self {
            facet_count: facets.len(),
            vertex_indices,
            facets,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnumerationMode {
    Oracle,
    HullFiltered,
}

/// Most-recently-successful constraint positions, tried first.
#[derive(Clone, Copy)]
struct Witness {
    recent: [usize; 4],
}

impl Witness {
    fn new() -> Self {
        Self {
            recent: [usize::MAX; 4],
        }
    }

    #[inline]
    fn promote(&mut self, pos: usize) {
        let at = self.recent.iter().position(|&p| p == pos).unwrap_or(3);
        for k in (1..=at).rev() {
            self.recent[k] = self.recent[k - 1];
        }
        self.recent[0] = pos;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Occupancy {
    Empty,
    Occupied,
    Tie,
}

/// Whether some pool point outside `tuple` falls outside `B(center, r)`.
#[inline]
fn side_occupancy<const D: usize>(
    points: &[Point<D>],
    pool: &[usize],
    tuple: &[usize; D],
    center: &Point<D>,
    r: f64,
    witness: &mut Witness,
) -> Occupancy {
    let hi = (r + CONTACT_TOL) * (r + CONTACT_TOL);
    let lo = (r - CONTACT_TOL) * (r - CONTACT_TOL);
    for &pos in &witness.recent {
        if let Some(&l) = pool.get(pos) {
            if !tuple.contains(&l) && points[l].dist_sq(center) > hi {
                witness.promote(pos);
                return Occupancy::Occupied;
            }
        }
    }
    let mut tie = false;
    for (pos, &l) in pool.iter().enumerate() {
        if tuple.contains(&l) {
            continue;
        }
        let d2 = points[l].dist_sq(center);
        if d2 > hi {
            witness.promote(pos);
            return Occupancy::Occupied;
        }
        tie |= d2 >= lo;
    }
    if tie {
        Occupancy::Tie
    } else {
        Occupancy::Empty
    }
}

fn facet_sides_in<const D: usize>(
    points: &[Point<D>],
    pool: &[usize],
    tuple: [usize; D],
    r: f64,
    witness: &mut Witness,
    seed: u64,
) -> Result<Vec<FacetRecord<D>>> {
    let mut pts = [Point::<D>::origin(); D];
    for k in 0..D {
        pts[k] = points[tuple[k]];
    }
    let frame = AffineFrame::new(&pts)?;
    let mut out = Vec::new();
    let Some((pm, pp)) = centers_from_frame(&frame, r) else {
        return Ok(out);
    };
    for (side, center) in [(Side::Minus, pm), (Side::Plus, pp)] {
        match side_occupancy(points, pool, &tuple, &center, r, witness) {
            Occupancy::Empty => out.push(FacetRecord {
                indices: tuple,
                side,
                support_center: center,
            }),
            Occupancy::Tie => {
                log::debug!("boundary tie on tuple {tuple:?} side {side:?} (seed {seed}); counted as non-facet")
            }
            Occupancy::Occupied => {}
        }
    }
    Ok(out)
}

/// Tests both radius-`r` spheres through the points of `tuple` for
/// emptiness. Returns the number of empty sides (0, 1 or 2) and their records.
pub fn facet_sides<const D: usize>(
    tuple: &[usize],
    sample: &SampleInstance<D>,
) -> Result<(usize, Vec<FacetRecord<D>>)> {
    let n = sample.len();
    let mut t: [usize; D] = tuple
        .try_into()
        .map_err(|_| Error::domain(format!("tuple must have {D} indices")))?;
    t.sort_unstable();
    if t.iter().any(|&i| i >= n) || t.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::domain("tuple indices must be distinct and in range"));
    }
    let pool: Vec<usize> = (0..n).collect();
    let recs = facet_sides_in(&sample.points, &pool, t, sample.r, &mut Witness::new(), sample.seed)?;
    Ok((recs.len(), recs))
}

fn for_each_combination<const D: usize>(items: &[usize], mut f: impl FnMut([usize; D]) -> Result<()>) -> Result<()> {
    let m = items.len();
    if D == 0 || m < D {
        return Ok(());
    }
    let mut idx = [0usize; D];
    for (k, v) in idx.iter_mut().enumerate() {
        *v = k;
    }
    loop {
        let mut t = [0usize; D];
        for k in 0..D {
            t[k] = items[idx[k]];
        }
        f(t)?;
        let mut k = D;
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            if idx[k] < m - D + k {
                break;
            }
        }
        idx[k] += 1;
        for q in k + 1..D {
            idx[q] = idx[q - 1] + 1;
        }
    }
}

/// The circle `S(x_i, r) ∩ S(x_j, r)` in space.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PairCircle<const D: usize> {
    pub i: usize,
    pub j: usize,
    pub center: Point<D>,
    pub radius: f64,
    pub e1: Point<D>,
    pub e2: Point<D>,
}

impl<const D: usize> PairCircle<D> {
    fn new(points: &[Point<D>], i: usize, j: usize, r: f64) -> Option<Self> {
        let delta = points[j] - points[i];
        let l2 = delta.norm_sq();
        let s2 = r * r - 0.25 * l2;
        if l2 == 0.0 || s2 < 0.0 {
            return None;
        }
        let axis = delta * (1.0 / l2.sqrt());
        let mut order: [usize; D] = [0; D];
        for (k, o) in order.iter_mut().enumerate() {
            *o = k;
        }
        order.sort_by(|&a, &b| axis[a].abs().total_cmp(&axis[b].abs()));
        let mut found: [Point<D>; 2] = [Point::origin(); 2];
        let mut nf = 0;
        for &k in &order {
            let mut w = Point::<D>::unit(k);
            w = w - axis * w.dot(&axis);
            for q in &found[..nf] {
                w = w - *q * w.dot(q);
            }
            let wn = w.norm();
            if wn > 1e-6 {
                found[nf] = w * (1.0 / wn);
                nf += 1;
                if nf == 2 {
                    break;
                }
            }
        }
        if nf < 2 {
            return None;
        }
        Some(Self {
            i,
            j,
            center: (points[i] + points[j]) * 0.5,
            radius: s2.sqrt(),
            e1: found[0],
            e2: found[1],
        })
    }

    #[inline]
    fn at(&self, phi: f64) -> Point<D> {
        self.center + (self.e1 * phi.cos() + self.e2 * phi.sin()) * self.radius
    }

    /// Point of the circle farthest from `z`.
    #[inline]
    fn farthest_from(&self, z: &Point<D>) -> Point<D> {
        let w = *z - self.center;
        let (a, b) = (w.dot(&self.e1), w.dot(&self.e2));
        if a == 0.0 && b == 0.0 {
            return self.at(0.0);
        }
        self.at(b.atan2(a) + std::f64::consts::PI)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum ArcStatus {
    Empty,
    Partial,
    Full,
}

#[derive(Default)]
struct ArcScratch {
    cur: Vec<(f64, f64)>,
    tmp: Vec<(f64, f64)>,
}

/// Which part of a pair circle lies inside every pool ball of radius
/// `r_eff`: none, some, or all of it.
fn arc_status<const D: usize>(
    circle: &PairCircle<D>,
    points: &[Point<D>],
    pool: &[usize],
    r_eff: f64,
    witness: &mut Witness,
    scratch: &mut ArcScratch,
) -> ArcStatus {
    let s = circle.radius;
    let r2 = r_eff * r_eff;
    let mut full = true;
    scratch.cur.clear();

    let apply = |pos: usize, scratch: &mut ArcScratch, full: &mut bool| -> bool {
        let l = pool[pos];
        if l == circle.i || l == circle.j {
            return true;
        }
        let w = points[l] - circle.center;
        let a = w.dot(&circle.e1);
        let b = w.dot(&circle.e2);
        let rr = a.hypot(b);
        let num = w.norm_sq() + s * s - r2;
        if num <= -2.0 * s * rr {
            return true;
        }
        if num > 2.0 * s * rr {
            return false;
        }
        let beta = (num / (2.0 * s * rr)).clamp(-1.0, 1.0).acos();
        let lo = (b.atan2(a) - beta).rem_euclid(TAU);
        let hi = lo + 2.0 * beta;
        let pieces: [(f64, f64); 2] = if hi <= TAU {
            [(lo, hi), (1.0, 0.0)]
        } else {
            [(lo, TAU), (0.0, hi - TAU)]
        };
        if *full {
            *full = false;
            scratch.cur.clear();
            scratch.cur.extend(pieces.iter().filter(|p| p.0 <= p.1));
            return true;
        }
        scratch.tmp.clear();
        for &(c0, c1) in &scratch.cur {
            for &(p0, p1) in &pieces {
                let (x0, x1) = (c0.max(p0), c1.min(p1));
                if x0 <= x1 {
                    scratch.tmp.push((x0, x1));
                }
            }
        }
        std::mem::swap(&mut scratch.cur, &mut scratch.tmp);
        !scratch.cur.is_empty()
    };

    for k in 0..witness.recent.len() {
        let pos = witness.recent[k];
        if pos < pool.len() && !apply(pos, scratch, &mut full) {
            witness.promote(pos);
            return ArcStatus::Empty;
        }
    }
    for pos in 0..pool.len() {
        if !apply(pos, scratch, &mut full) {
            witness.promote(pos);
            return ArcStatus::Empty;
        }
    }
    if full {
        ArcStatus::Full
    } else {
        ArcStatus::Partial
    }
}

/// Pair circles (within `pool`) meeting the center body of `pool`, with a
/// small outward slack so that no true contact is lost.
fn active_pairs<const D: usize>(points: &[Point<D>], pool: &[usize], r: f64) -> Vec<(PairCircle<D>, ArcStatus)> {
    let mut out = Vec::new();
    let mut scratch = ArcScratch::default();
    let mut witness = Witness::new();
    for (a, &i) in pool.iter().enumerate() {
        for &j in &pool[a + 1..] {
            let Some(circle) = PairCircle::new(points, i, j, r) else {
                continue;
            };
            let st = arc_status(&circle, points, pool, r + CONTACT_TOL, &mut witness, &mut scratch);
            if st != ArcStatus::Empty {
                out.push((circle, st));
            }
        }
    }
    out
}

/// Triples all of whose pairs are active, as sorted sample indices.
fn pair_triangles<const D: usize>(pairs: &[(PairCircle<D>, ArcStatus)], n: usize) -> Vec<[usize; 3]> {
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (c, _) in pairs {
        let (i, j) = if c.i < c.j { (c.i, c.j) } else { (c.j, c.i) };
        nbrs[i].push(j);
    }
    for v in &mut nbrs {
        v.sort_unstable();
    }
    let mut out = Vec::new();
    for i in 0..n {
        let ni = &nbrs[i];
        for (a, &j) in ni.iter().enumerate() {
            for &k in &ni[a + 1..] {
                if nbrs[j].binary_search(&k).is_ok() {
                    out.push([i, j, k]);
                }
            }
        }
    }
    out
}

struct Filtered<const D: usize> {
    facets: Vec<FacetRecord<D>>,
    pairs: Vec<(PairCircle<D>, ArcStatus)>,
}

fn hull_filtered<const D: usize>(points: &[Point<D>], pool: &[usize], r: f64, seed: u64) -> Result<Filtered<D>> {
    let mut facets = Vec::new();
    let mut witness = Witness::new();
    let mut pairs = Vec::new();
    if D == 3 {
        pairs = active_pairs(points, pool, r);
        for t in pair_triangles(&pairs, points.len()) {
            let mut tuple = [0usize; D];
            tuple.copy_from_slice(&t);
            facets.extend(facet_sides_in(points, pool, tuple, r, &mut witness, seed)?);
        }
    } else {
        for_each_combination::<D>(pool, |t| {
            facets.extend(facet_sides_in(points, pool, t, r, &mut witness, seed)?);
            Ok(())
        })?;
    }
    Ok(Filtered { facets, pairs })
}

/// All facets of the ball-polytope of the sample, each empty side of an
/// in-position tuple counted once.
pub fn enumerate_facets<const D: usize>(sample: &SampleInstance<D>, mode: EnumerationMode) -> Result<HullSummary<D>>
where
    Point<D>: ConvexHull,
{
    let n = sample.len();
    if n < D {
        return Err(Error::domain(format!("need at least {D} points, got {n}")));
    }
    check_radius(sample.r)?;
    let facets = match mode {
        EnumerationMode::Oracle => {
            let all: Vec<usize> = (0..n).collect();
            let mut facets = Vec::new();
            let mut witness = Witness::new();
            for_each_combination::<D>(&all, |t| {
                facets.extend(facet_sides_in(
                    &sample.points,
                    &all,
                    t,
                    sample.r,
                    &mut witness,
                    sample.seed,
                )?);
                Ok(())
            })?;
            facets
        }
        EnumerationMode::HullFiltered => {
            let pool = Point::<D>::hull_vertices(&sample.points);
            hull_filtered(&sample.points, &pool, sample.r, sample.seed)?.facets
        }
    };
    Ok(HullSummary::from_facets(facets))
}

#[inline]
fn feasible<const D: usize>(p: &Point<D>, points: &[Point<D>], r: f64) -> bool {
    let hi = (r + CONTACT_TOL) * (r + CONTACT_TOL);
    points.iter().all(|x| x.dist_sq(p) <= hi)
}

/// Farthest point from `z` in the center body `∩ B(x_i, r)`, by enumerating
/// the distance-critical points on every sphere-intersection locus.
pub fn farthest_in_center_body<const D: usize>(z: &Point<D>, sample: &SampleInstance<D>) -> Result<(Point<D>, f64)> {
    farthest_oracle(z, &sample.points, sample.r, sample.seed)
}

fn farthest_oracle<const D: usize>(z: &Point<D>, points: &[Point<D>], r: f64, seed: u64) -> Result<(Point<D>, f64)> {
    check_radius(r)?;
    let n = points.len();
    let all: Vec<usize> = (0..n).collect();
    let mut best: Option<(Point<D>, f64)> = None;
    let mut consider = |p: Point<D>| {
        if feasible(&p, points, r) {
            let d = p.dist(z);
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((p, d));
            }
        }
    };
    for k in 1..=D.min(n) {
        let mut subset = Vec::with_capacity(k);
        let mut visit = |s: &[usize]| {
            let centers: Vec<Point<D>> = s.iter().map(|&i| points[i]).collect();
            let locus = match sphere_intersection_locus(&centers, r) {
                Ok(Some(l)) => l,
                Ok(None) => return,
                Err(_) => {
                    log::debug!("affinely dependent subset {s:?} skipped (seed {seed})");
                    return;
                }
            };
            let rel = *z - locus.center;
            let dir = if locus.flat_basis.is_empty() {
                rel
            } else {
                locus
                    .flat_basis
                    .iter()
                    .fold(Point::<D>::origin(), |acc, b| acc + *b * rel.dot(b))
            };
            let w = match dir.normalized() {
                Some(w) if dir.norm() > 1e-14 => w,
                _ => {
                    if locus.flat_basis.len() != 1 {
                        log::debug!("query point on the axis of locus {s:?} (seed {seed})");
                    }
                    locus.flat_basis.first().copied().unwrap_or(Point::unit(0))
                }
            };
            consider(locus.center + w * locus.radius);
            consider(locus.center - w * locus.radius);
        };
        subsets(&all, k, &mut subset, &mut visit);
    }
    best.ok_or_else(|| Error::Infeasible("the center body is empty".into()))
}

fn subsets(items: &[usize], k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if cur.len() == k {
        f(cur);
        return;
    }
    let start = cur.last().map_or(0, |&l| l + 1);
    let need = k - cur.len();
    for i in start..items.len() {
        if items.len() - i < need {
            break;
        }
        cur.push(items[i]);
        subsets(items, k, cur, f);
        cur.pop();
    }
}

/// Membership in the ball-polytope: the center body must fit in `B(z, r)`.
pub fn hull_contains<const D: usize>(z: &Point<D>, sample: &SampleInstance<D>) -> Result<bool> {
    let (_, d) = farthest_in_center_body(z, sample)?;
    Ok(d <= sample.r + CONTACT_TOL)
}

fn vertex_decision(i: usize, dist: f64, r: f64, seed: u64) -> bool {
    if dist > r + CONTACT_TOL {
        true
    } else {
        if dist >= r - CONTACT_TOL {
            log::debug!("vertex tie at point {i} (seed {seed}); counted as interior");
        }
        false
    }
}

/// Sample points that are extreme for the ball hull, decided by the
/// farthest point of the other points' center body.
pub fn count_vertices<const D: usize>(sample: &SampleInstance<D>) -> Result<BTreeSet<usize>>
where
    Point<D>: ConvexHull,
{
    let n = sample.len();
    if n < 2 {
        return Err(Error::domain("vertex test needs at least two points"));
    }
    let mut out = BTreeSet::new();
    for i in 0..n {
        let bp = BallPolytope::new(&sample.without(i), sample.r, sample.seed)?;
        let (_, dist) = bp.farthest(&sample.points[i])?;
        if vertex_decision(i, dist, sample.r, sample.seed) {
            out.insert(i);
        }
    }
    Ok(out)
}

/// [`count_vertices`] computed with the exhaustive farthest-point search.
pub fn count_vertices_oracle<const D: usize>(sample: &SampleInstance<D>) -> Result<BTreeSet<usize>> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::domain("vertex test needs at least two points"));
    }
    let mut out = BTreeSet::new();
    for i in 0..n {
        let (_, dist) = farthest_oracle(&sample.points[i], &sample.without(i), sample.r, sample.seed)?;
        if vertex_decision(i, dist, sample.r, sample.seed) {
            out.insert(i);
        }
    }
    Ok(out)
}

/// Fraction of fresh uniform body points missed by the ball-polytope, with
/// its binomial standard error.
pub fn estimate_missed_fraction<const D: usize, R: Rng + ?Sized>(
    sample: &SampleInstance<D>,
    rng: &mut R,
    m: usize,
) -> Result<(f64, f64)>
where
    Point<D>: ConvexHull,
{
    if m == 0 {
        return Err(Error::domain("missed fraction needs m >= 1"));
    }
    let bp = BallPolytope::from_sample(sample)?;
    let missed = (0..m).filter(|_| !bp.contains(&sample.body.sample_one(rng))).count();
    let f = missed as f64 / m as f64;
    Ok((f, (f * (1.0 - f) / m as f64).sqrt()))
}

/// Precomputed face structure of a ball-polytope for repeated queries.
///
/// Stores the vertices of the center body (one per facet), the sample points
/// whose spheres touch it, and in space the circles along its edges.
#[derive(Clone, Debug)]
pub struct BallPolytope<const D: usize> {
    r: f64,
    summary: HullSummary<D>,
    active: Vec<usize>,
    active_points: Vec<Point<D>>,
    centers: Vec<Point<D>>,
    edges: Vec<PairCircle<D>>,
}

impl<const D: usize> BallPolytope<D>
where
    Point<D>: ConvexHull,
{
    pub fn from_sample(sample: &SampleInstance<D>) -> Result<Self> {
        Self::new(&sample.points, sample.r, sample.seed)
    }

    pub fn new(points: &[Point<D>], r: f64, seed: u64) -> Result<Self> {
        check_radius(r)?;
        let n = points.len();
        if n == 0 {
            return Err(Error::domain("ball-polytope of an empty sample"));
        }
        let pool = Point::<D>::hull_vertices(points);
        let Filtered { facets, pairs } = if n >= D {
            hull_filtered(points, &pool, r, seed)?
        } else if D == 3 {
            Filtered {
                facets: Vec::new(),
                pairs: active_pairs(points, &pool, r),
            }
        } else {
            Filtered {
                facets: Vec::new(),
                pairs: Vec::new(),
            }
        };
        let summary = HullSummary::from_facets(facets);

        let mut active: BTreeSet<usize> = summary.vertex_indices.clone();
        for (c, st) in &pairs {
            if *st == ArcStatus::Full {
                active.insert(c.i);
                active.insert(c.j);
            }
        }
        if active.is_empty() {
            if n == 1 {
                active.insert(0);
            } else {
                active.extend(pairs.iter().flat_map(|(c, _)| [c.i, c.j]));
                if active.is_empty() {
                    active.extend(pool.iter().copied());
                }
            }
        }
        let active: Vec<usize> = active.into_iter().collect();
        let edges = pairs
            .into_iter()
            .filter(|(c, _)| active.binary_search(&c.i).is_ok() && active.binary_search(&c.j).is_ok())
            .map(|(c, _)| c)
            .collect();
        Ok(Self {
            r,
            centers: summary.facets.iter().map(|f| f.support_center).collect(),
            summary,
            active_points: active.iter().map(|&i| points[i]).collect(),
            active,
            edges,
        })
    }
}

impl<const D: usize> BallPolytope<D> {
    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn summary(&self) -> &HullSummary<D> {
        &self.summary
    }

    pub fn facet_count(&self) -> usize {
        self.summary.facet_count
    }

    /// Sample points whose radius-`r` sphere touches the center body.
    pub fn vertex_indices(&self) -> &[usize] {
        &self.active
    }

    #[inline]
    fn in_center_body(&self, p: &Point<D>) -> bool {
        feasible(p, &self.active_points, self.r)
    }

    #[inline]
    fn antipode(&self, k: usize, z: &Point<D>) -> Option<Point<D>> {
        let v = self.active_points[k] - *z;
        let dn = v.norm();
        (dn > 0.0).then(|| self.active_points[k] + v * (self.r / dn))
    }

    /// Farthest point of the center body from `z` and its distance.
    pub fn farthest(&self, z: &Point<D>) -> Result<(Point<D>, f64)> {
        let mut best: Option<(Point<D>, f64)> = None;
        let mut offer = |p: Point<D>| {
            let d = p.dist(z);
            if best.is_none_or(|(_, bd)| d > bd) {
                best = Some((p, d));
            }
        };
        for p in &self.centers {
            offer(*p);
        }
        for k in 0..self.active_points.len() {
            let a = self
                .antipode(k, z)
                .unwrap_or_else(|| self.active_points[k] + Point::unit(0) * self.r);
            if self.in_center_body(&a) {
                offer(a);
            }
        }
        for e in &self.edges {
            let q = e.farthest_from(z);
            if self.in_center_body(&q) {
                offer(q);
            }
        }
        best.ok_or_else(|| Error::Infeasible("the center body is empty".into()))
    }

    /// Membership test with early exit.
    pub fn contains(&self, z: &Point<D>) -> bool {
        let hi = (self.r + CONTACT_TOL) * (self.r + CONTACT_TOL);
        if self.centers.iter().any(|p| p.dist_sq(z) > hi) {
            return false;
        }
        for k in 0..self.active_points.len() {
            if self.active_points[k].dist(z) <= CONTACT_TOL {
                continue;
            }
            if let Some(a) = self.antipode(k, z) {
                if self.in_center_body(&a) {
                    return false;
                }
            }
        }
        for e in &self.edges {
            let q = e.farthest_from(z);
            if q.dist_sq(z) > hi && self.in_center_body(&q) {
                return false;
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn inst2(pts: &[[f64; 2]]) -> SampleInstance<2> {
        SampleInstance::new(pts.iter().map(|c| Point::new(*c)).collect(), Body::unit_ball(), 1.0, 0).unwrap()
    }

    fn random_instance<const D: usize>(rng: &mut ChaCha8Rng, body: Body<D>, n: usize) -> SampleInstance<D> {
        SampleInstance::draw(body, 1.0, n, rng, 0).unwrap()
    }

    #[test]
    fn facet_sides_examples() {
        let s = inst2(&[[-0.5, 0.0], [0.5, 0.0]]);
        assert_eq!(facet_sides(&[0, 1], &s).unwrap().0, 2);

        let s = inst2(&[[-0.5, 0.0], [0.0, 0.0], [0.5, 0.0]]);
        let (c, recs) = facet_sides(&[0, 2], &s).unwrap();
        assert_eq!(c, 2);
        let h = 0.75f64.sqrt();
        assert!(recs[0].support_center.dist(&Point::new([0.0, -h])) < 1e-12);
        assert!(recs[1].support_center.dist(&Point::new([0.0, h])) < 1e-12);
        assert_eq!(facet_sides(&[0, 1], &s).unwrap().0, 0);

        assert!(facet_sides(&[0, 0], &s).is_err());
        assert!(facet_sides(&[0, 7], &s).is_err());
    }

    #[test]
    fn enumerate_examples() {
        for mode in [EnumerationMode::Oracle, EnumerationMode::HullFiltered] {
            let s = inst2(&[[-0.5, 0.0], [0.5, 0.0]]);
            let h = enumerate_facets(&s, mode).unwrap();
            assert_eq!(h.facet_count, 2);
            assert_eq!(h.vertex_indices, BTreeSet::from([0, 1]));

            let s = inst2(&[[-0.5, 0.0], [0.0, 0.0], [0.5, 0.0]]);
            let h = enumerate_facets(&s, mode).unwrap();
            assert_eq!(h.facet_count, 2);
            assert_eq!(h.vertex_indices, BTreeSet::from([0, 2]));
        }
        let s = inst2(&[[0.1, 0.0]]);
        assert!(enumerate_facets(&s, EnumerationMode::Oracle).is_err());
    }

    #[test]
    fn farthest_examples() {
        let s = inst2(&[[-0.5, 0.0], [0.5, 0.0]]);
        let (p, d) = farthest_in_center_body(&Point::new([0.0, 0.0]), &s).unwrap();
        assert!((d - 0.75f64.sqrt()).abs() < 1e-12);
        assert!(p[0].abs() < 1e-12);

        let s = inst2(&[[0.2, 0.1]]);
        let z = Point::new([-0.3, 0.4]);
        let (_, d) = farthest_in_center_body(&z, &s).unwrap();
        assert!((d - (z.dist(&s.points[0]) + 1.0)).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = random_instance(&mut rng, Body::<2>::unit_ball(), 30);
        let (_, d) = farthest_in_center_body(&s.points[3], &s).unwrap();
        assert!(d <= 1.0 + 1e-9);
    }

    #[test]
    fn hull_contains_examples() {
        let s = inst2(&[[-0.5, 0.0], [0.5, 0.0]]);
        assert!(hull_contains(&s.points[0], &s).unwrap());
        assert!(hull_contains(&Point::new([0.0, 0.1]), &s).unwrap());
        assert!(!hull_contains(&Point::new([0.0, 0.2]), &s).unwrap());
    }

    #[test]
    fn count_vertices_examples() {
        let s = inst2(&[[-0.5, 0.0], [0.5, 0.0]]);
        assert_eq!(count_vertices(&s).unwrap(), BTreeSet::from([0, 1]));
        assert_eq!(count_vertices_oracle(&s).unwrap(), BTreeSet::from([0, 1]));
        let s = inst2(&[[-0.5, 0.0], [0.0, 0.0], [0.5, 0.0]]);
        assert_eq!(count_vertices(&s).unwrap(), BTreeSet::from([0, 2]));
        assert_eq!(count_vertices_oracle(&s).unwrap(), BTreeSet::from([0, 2]));
        let s = SampleInstance::new(
            vec![
                Point::new([1.0, 0.0, 0.0]),
                Point::new([0.0, 1.0, 0.0]),
                Point::new([0.0, 0.0, 1.0]),
            ],
            Body::unit_ball(),
            1.0,
            0,
        )
        .unwrap();
        assert_eq!(count_vertices(&s).unwrap().len(), 3);
        assert!(count_vertices(&inst2(&[[0.0, 0.0]])).is_err());
    }

    #[test]
    fn missed_fraction_of_spindle() {
        let s = inst2(&[[-0.5, 0.0], [0.5, 0.0]]);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (f, se) = estimate_missed_fraction(&s, &mut rng, 1_000_000).unwrap();
        // Two unit discs with centers √3 apart.
        let lens = PI / 3.0 - 0.75f64.sqrt();
        let expect = (PI - lens) / PI;
        assert!((f - expect).abs() < 3.0 * se, "{f} vs {expect}");
        assert!(estimate_missed_fraction(&s, &mut rng, 0).is_err());
    }

    #[test]
    fn dense_disc_cloud_misses_little() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let s = random_instance(&mut rng, Body::<2>::unit_ball(), 10_000);
        let (f, _) = estimate_missed_fraction(&s, &mut rng, 1000).unwrap();
        assert!(f < 0.01);
    }

    #[test]
    fn filtered_matches_oracle_small_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for n in [3usize, 5, 12, 25] {
            let s = random_instance(&mut rng, Body::<2>::unit_ball(), n);
            assert_eq!(
                enumerate_facets(&s, EnumerationMode::Oracle).unwrap(),
                enumerate_facets(&s, EnumerationMode::HullFiltered).unwrap()
            );
            let s = random_instance(&mut rng, Body::<3>::unit_ball(), n);
            assert_eq!(
                enumerate_facets(&s, EnumerationMode::Oracle).unwrap(),
                enumerate_facets(&s, EnumerationMode::HullFiltered).unwrap()
            );
        }
    }

    #[test]
    fn fast_membership_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for n in [1usize, 2, 3, 8, 20] {
            let s = random_instance(&mut rng, Body::<2>::unit_ball(), n);
            let bp = BallPolytope::from_sample(&s).unwrap();
            let s3 = random_instance(&mut rng, Body::<3>::unit_ball(), n);
            let bp3 = BallPolytope::from_sample(&s3).unwrap();
            for _ in 0..200 {
                let z = Body::<2>::unit_ball().sample_one(&mut rng);
                let (_, d) = farthest_in_center_body(&z, &s).unwrap();
                let (_, fd) = bp.farthest(&z).unwrap();
                assert!((d - fd).abs() < 1e-9, "n={n}: {d} vs {fd}");
                assert_eq!(bp.contains(&z), d <= 1.0 + CONTACT_TOL);

                let z = Body::<3>::unit_ball().sample_one(&mut rng);
                let (_, d) = farthest_in_center_body(&z, &s3).unwrap();
                let (_, fd) = bp3.farthest(&z).unwrap();
                assert!((d - fd).abs() < 1e-9, "n={n}: {d} vs {fd}");
                assert_eq!(bp3.contains(&z), d <= 1.0 + CONTACT_TOL);
            }
        }
    }

    #[test]
    fn fast_vertices_match_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for n in [2usize, 4, 10, 18] {
            let s = random_instance(&mut rng, Body::<2>::unit_ball(), n);
            let v = count_vertices(&s).unwrap();
            assert_eq!(v, count_vertices_oracle(&s).unwrap());
            let bp = BallPolytope::from_sample(&s).unwrap();
            assert_eq!(v, bp.vertex_indices().iter().copied().collect());

            let s = random_instance(&mut rng, Body::<3>::unit_ball(), n);
            let v = count_vertices(&s).unwrap();
            assert_eq!(v, count_vertices_oracle(&s).unwrap());
            let bp = BallPolytope::from_sample(&s).unwrap();
            assert_eq!(v, bp.vertex_indices().iter().copied().collect());
        }
    }

    #[test]
    fn combinations_are_complete() {
        let items: Vec<usize> = (0..7).collect();
        let mut seen = Vec::new();
        for_each_combination::<3>(&items, |t| {
            seen.push(t);
            Ok(())
        })
        .unwrap();
        assert_eq!(seen.len(), 35);
        assert!(seen.iter().all(|t| t[0] < t[1] && t[1] < t[2]));
    }
}
