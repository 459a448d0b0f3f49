//! Grid handling and interface geometry.
//!
//! This module classifies grid nodes against the level set ψ, projects
//! irregular nodes onto the interface Γ = {ψ = 0}, and derives a local
//! Taylor parametrisation of Γ around each base point by implicit
//! differentiation. Everything downstream (the interface coupling, the
//! irregular stencil rows) consumes the curve exclusively through the tables
//! produced here.

use crate::error::{Error, Result};
use crate::exprjet::univariate::{series_derivative, series_mul, series_sqrt};
use crate::exprjet::{eval_expr, factorial, jet_eval, Expr, Jet2, MultiIndexSet};

/// A node (or stencil offset) is treated as lying on Γ when |ψ| is below
/// this fraction of the largest |ψ| over the 3×3 patch; such points are
/// assigned to the plus side.
pub const ON_INTERFACE_REL_TOL: f64 = 1e-14;

/// Newton projection onto Γ stops when |ψ| falls below this fraction of the
/// patch scale.
pub const BASE_POINT_REL_TOL: f64 = 1e-13;

/// Residual bound (relative to the jet scale) for the recovered curve
/// parametrisation: substituting the parametrisation back into ψ must
/// annihilate all Taylor coefficients through the requested degree.
pub const PARAM_RESIDUAL_REL_TOL: f64 = 1e-10;

/// The nine stencil offsets (k, ℓ) in the fixed project-wide order.
///
/// This order defines the layout of the 9 weights in every stencil row.
pub const OFFSETS: [(i32, i32); 9] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 0),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// Uniform tensor grid on a rectangle (l1, l2) × (l3, l4).
///
/// The aspect ratio is constrained so that one spacing h serves both
/// directions: l4 − l3 must be an integer multiple N0 of l2 − l1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    /// Left x bound.
    pub l1: f64,
    /// Right x bound.
    pub l2: f64,
    /// Bottom y bound.
    pub l3: f64,
    /// Top y bound.
    pub l4: f64,
    /// Number of cells in x.
    pub n1: usize,
    /// Integer aspect ratio (l4 − l3) / (l2 − l1).
    pub n0: usize,
    /// Number of cells in y: n0 · n1.
    pub n2: usize,
    /// Grid spacing (l2 − l1) / n1.
    pub h: f64,
}

impl GridSpec {
    /// Build a grid, enforcing the integer aspect-ratio constraint.
    pub fn new(l1: f64, l2: f64, l3: f64, l4: f64, n1: usize) -> Result<Self> {
        if !(l2 > l1 && l4 > l3) {
            return Err(Error::geometry(format!(
                "degenerate rectangle ({l1}, {l2}) × ({l3}, {l4})"
            )));
        }
        if n1 < 2 {
            return Err(Error::geometry(format!("need at least 2 cells, got {n1}")));
        }
        let ratio = (l4 - l3) / (l2 - l1);
        let n0 = ratio.round();
        if n0 < 1.0 || (ratio - n0).abs() > 1e-12 * ratio.abs() {
            return Err(Error::geometry(format!(
                "aspect ratio {ratio} is not a positive integer"
            )));
        }
        let n0 = n0 as usize;
        Ok(GridSpec {
            l1,
            l2,
            l3,
            l4,
            n1,
            n0,
            n2: n0 * n1,
            h: (l2 - l1) / n1 as f64,
        })
    }

    /// x coordinate of column i, 0 ≤ i ≤ n1.
    pub fn x(&self, i: usize) -> f64 {
        self.l1 + i as f64 * self.h
    }

    /// y coordinate of row j, 0 ≤ j ≤ n2.
    pub fn y(&self, j: usize) -> f64 {
        self.l3 + j as f64 * self.h
    }

    /// Number of interior nodes per row (n1 − 1).
    pub fn interior_nx(&self) -> usize {
        self.n1 - 1
    }

    /// Number of interior rows (n2 − 1).
    pub fn interior_ny(&self) -> usize {
        self.n2 - 1
    }

    /// Total number of interior nodes.
    pub fn interior_len(&self) -> usize {
        self.interior_nx() * self.interior_ny()
    }

    /// Row-major index of interior node (i, j), 1 ≤ i ≤ n1−1, 1 ≤ j ≤ n2−1.
    pub fn interior_index(&self, i: usize, j: usize) -> usize {
        debug_assert!((1..self.n1).contains(&i) && (1..self.n2).contains(&j));
        (j - 1) * self.interior_nx() + (i - 1)
    }

    /// Inverse of [`GridSpec::interior_index`].
    pub fn interior_coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.interior_nx() + 1, idx / self.interior_nx() + 1)
    }
}

/// Which side of the interface a point belongs to. ψ ≥ 0 is the plus side.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// ψ ≥ 0.
    Plus,
    /// ψ < 0.
    Minus,
}

impl Side {
    /// The opposite side.
    pub fn flipped(self) -> Side {
        match self {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }
}

/// Classification payload for a node whose 3×3 patch straddles Γ.
#[derive(Clone, Debug)]
pub struct IrregularNode {
    /// Offsets (k, ℓ) whose node lies on the closed plus side.
    pub d_plus: Vec<(i32, i32)>,
    /// Offsets on the open minus side.
    pub d_minus: Vec<(i32, i32)>,
    /// Base point (x*, y*) on Γ inside the open 2h square around the node.
    pub base: (f64, f64),
    /// x offset of the node from the base point in units of h: x_i = x* + v0·h.
    pub v0: f64,
    /// y offset of the node from the base point in units of h.
    pub w0: f64,
    /// Which side the node itself is on.
    pub side: Side,
}

/// Classification of one interior grid node.
#[derive(Clone, Debug)]
pub enum PointClass {
    /// All nine stencil points on one side of Γ.
    Regular(Side),
    /// The stencil straddles Γ.
    Irregular(Box<IrregularNode>),
}

impl PointClass {
    /// The side the node itself is on.
    pub fn side(&self) -> Side {
        match self {
            PointClass::Regular(s) => *s,
            PointClass::Irregular(irr) => irr.side,
        }
    }

    /// Whether the stencil straddles the interface.
    pub fn is_irregular(&self) -> bool {
        matches!(self, PointClass::Irregular(_))
    }
}

/// Classification of every interior node of a grid.
#[derive(Clone, Debug)]
pub struct Classification {
    grid: GridSpec,
    classes: Vec<PointClass>,
}

impl Classification {
    /// The grid the classification refers to.
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Class of interior node (i, j).
    pub fn get(&self, i: usize, j: usize) -> &PointClass {
        &self.classes[self.grid.interior_index(i, j)]
    }

    /// Iterate over (i, j, class) for all interior nodes.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &PointClass)> {
        self.classes.iter().enumerate().map(|(idx, c)| {
            let (i, j) = self.grid.interior_coords(idx);
            (i, j, c)
        })
    }

    /// Iterate over the irregular nodes only.
    pub fn irregular(&self) -> impl Iterator<Item = (usize, usize, &IrregularNode)> {
        self.iter().filter_map(|(i, j, c)| match c {
            PointClass::Irregular(irr) => Some((i, j, irr.as_ref())),
            PointClass::Regular(_) => None,
        })
    }

    /// Number of irregular nodes.
    pub fn irregular_count(&self) -> usize {
        self.classes.iter().filter(|c| c.is_irregular()).count()
    }
}

/// Classify every interior node of `grid` against the level set `psi`.
///
/// Fails when Γ comes too close to ∂Ω (detected by sampling ψ along the
/// boundary): such problems are out of scope because the 9-point stencil of
/// a node adjacent to the boundary would straddle Γ in a way the boundary
/// treatment cannot absorb.
pub fn classify_points(grid: &GridSpec, psi: &Expr) -> Result<Classification> {
    check_boundary_clear(grid, psi)?;

    // ψ on the full node lattice, once.
    let nx = grid.n1 + 1;
    let ny = grid.n2 + 1;
    let mut values = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            values[j * nx + i] = eval_expr(psi, grid.x(i), grid.y(j))?;
        }
    }
    let value_at = |i: i64, j: i64| -> f64 { values[j as usize * nx + i as usize] };

    let mut classes = Vec::with_capacity(grid.interior_len());
    for idx in 0..grid.interior_len() {
        let (i, j) = grid.interior_coords(idx);
        let patch: Vec<f64> = OFFSETS
            .iter()
            .map(|&(k, l)| value_at(i as i64 + k as i64, j as i64 + l as i64))
            .collect();
        let scale = patch.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = ON_INTERFACE_REL_TOL * scale;
        let plus_mask: Vec<bool> = patch.iter().map(|&v| v >= -tol).collect();

        let class = if plus_mask.iter().all(|&p| p) {
            PointClass::Regular(Side::Plus)
        } else if plus_mask.iter().all(|&p| !p) {
            PointClass::Regular(Side::Minus)
        } else {
            let mut d_plus = Vec::new();
            let mut d_minus = Vec::new();
            for (off, &p) in OFFSETS.iter().zip(&plus_mask) {
                if p {
                    d_plus.push(*off);
                } else {
                    d_minus.push(*off);
                }
            }
            let side = if plus_mask[4] { Side::Plus } else { Side::Minus };
            let bp = find_base_point(psi, (grid.x(i), grid.y(j)), grid.h)
                .map_err(|e| match e {
                    Error::BasePoint { message, .. } => Error::BasePoint { i, j, message },
                    other => other,
                })?;
            PointClass::Irregular(Box::new(IrregularNode {
                d_plus,
                d_minus,
                base: (bp.0, bp.1),
                v0: bp.2,
                w0: bp.3,
                side,
            }))
        };
        classes.push(class);
    }

    Ok(Classification {
        grid: *grid,
        classes,
    })
}

/// Reject level sets whose zero set approaches the rectangle boundary.
fn check_boundary_clear(grid: &GridSpec, psi: &Expr) -> Result<()> {
    let samples_x = (4 * grid.n1).max(256);
    let samples_y = (4 * grid.n2).max(256);
    let mut min_abs = f64::INFINITY;
    let mut max_abs = 0.0f64;
    let mut sign = 0.0f64;
    let mut mixed = false;
    let mut visit = |v: f64| {
        min_abs = min_abs.min(v.abs());
        max_abs = max_abs.max(v.abs());
        if sign == 0.0 {
            sign = v.signum();
        } else if v.signum() != sign && v != 0.0 {
            mixed = true;
        }
    };
    for s in 0..=samples_x {
        let x = grid.l1 + (grid.l2 - grid.l1) * s as f64 / samples_x as f64;
        visit(eval_expr(psi, x, grid.l3)?);
        visit(eval_expr(psi, x, grid.l4)?);
    }
    for s in 0..=samples_y {
        let y = grid.l3 + (grid.l4 - grid.l3) * s as f64 / samples_y as f64;
        visit(eval_expr(psi, grid.l1, y)?);
        visit(eval_expr(psi, grid.l2, y)?);
    }
    if mixed || min_abs <= 1e-12 * max_abs {
        return Err(Error::geometry(
            "the interface intersects or touches the domain boundary",
        ));
    }
    Ok(())
}

/// Project an irregular node onto Γ.
///
/// Returns (x*, y*, v0, w0) with node = (x* + v0 h, y* + w0 h) and
/// |v0|, |w0| < 1. The primary method is Newton iteration on the normal
/// foot, x ← x − ψ∇ψ/|∇ψ|²; when that fails to converge or lands outside
/// the open square, the fallback bisects a segment from the node towards a
/// neighbouring stencil point across which ψ changes sign.
pub fn find_base_point(psi: &Expr, node: (f64, f64), h: f64) -> Result<(f64, f64, f64, f64)> {
    let patch_scale = {
        let mut m = 0.0f64;
        for (k, l) in OFFSETS {
            m = m.max(
                eval_expr(psi, node.0 + k as f64 * h, node.1 + l as f64 * h)?.abs(),
            );
        }
        m
    };
    let tol = (BASE_POINT_REL_TOL * patch_scale).max(f64::MIN_POSITIVE);

    let psi_and_grad = |x: f64, y: f64| -> Result<(f64, f64, f64)> {
        let jet = jet_eval(psi, (x, y), 1)?;
        Ok((jet.value(), jet.coeff(1, 0), jet.coeff(0, 1)))
    };

    // A node lying on Γ is its own base point.
    let value_here = eval_expr(psi, node.0, node.1)?;
    if value_here.abs() <= ON_INTERFACE_REL_TOL * patch_scale {
        return Ok((node.0, node.1, 0.0, 0.0));
    }

    // Newton on the normal foot.
    let (mut x, mut y) = node;
    for _ in 0..30 {
        let (v, gx, gy) = psi_and_grad(x, y)?;
        if v.abs() <= tol {
            let v0 = (node.0 - x) / h;
            let w0 = (node.1 - y) / h;
            if v0.abs() < 1.0 && w0.abs() < 1.0 {
                return Ok((x, y, v0, w0));
            }
            break;
        }
        let g2 = gx * gx + gy * gy;
        if g2 <= 1e-30 * patch_scale * patch_scale {
            break;
        }
        x -= v * gx / g2;
        y -= v * gy / g2;
        if (x - node.0).abs() > 2.0 * h || (y - node.1).abs() > 2.0 * h {
            break;
        }
    }

    // Bisection fallback along segments to the eight neighbours, axes first.
    const SEGMENTS: [(i32, i32); 8] = [
        (1, 0),
        (-1, 0),
        (0, 1),
        (0, -1),
        (1, 1),
        (1, -1),
        (-1, 1),
        (-1, -1),
    ];
    for (k, l) in SEGMENTS {
        let end = (node.0 + k as f64 * h, node.1 + l as f64 * h);
        let value_end = eval_expr(psi, end.0, end.1)?;
        if value_here.signum() * value_end.signum() >= 0.0 || value_end.abs() <= tol {
            continue;
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut value_lo = value_here;
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            let p = (node.0 + mid * (end.0 - node.0), node.1 + mid * (end.1 - node.1));
            let value_mid = eval_expr(psi, p.0, p.1)?;
            if value_mid.abs() <= tol {
                return Ok((p.0, p.1, (node.0 - p.0) / h, (node.1 - p.1) / h));
            }
            if value_lo.signum() * value_mid.signum() < 0.0 {
                hi = mid;
            } else {
                lo = mid;
                value_lo = value_mid;
            }
        }
        let mid = 0.5 * (lo + hi);
        let p = (node.0 + mid * (end.0 - node.0), node.1 + mid * (end.1 - node.1));
        return Ok((p.0, p.1, (node.0 - p.0) / h, (node.1 - p.1) / h));
    }

    Err(Error::BasePoint {
        i: 0,
        j: 0,
        message: format!(
            "no sign change found near ({:.6}, {:.6}); node may not be irregular",
            node.0, node.1
        ),
    })
}

/// Which coordinate serves as the curve parameter t.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// x = t + x*, y = r(t) + y*. Chosen when |ψ_y| > |ψ_x|.
    XIsT,
    /// x = r(t) + x*, y = t + y*. Chosen when |ψ_x| ≥ |ψ_y|.
    YIsT,
}

/// Local Taylor parametrisation of Γ around a base point.
///
/// One coordinate is the parameter t itself; the other is the graph
/// function r(t) with r(0) = 0. `orientation` records whether the stored
/// direction of travel was reversed (t → −t) so that the left normal of the
/// traversal, (y′(t), −x′(t)), points into the plus side; downstream jump
/// conditions rely on that convention.
#[derive(Clone, Debug)]
pub struct LocalParam {
    /// Which coordinate equals t.
    pub branch: Branch,
    /// The base point (x*, y*) the expansion is centred on.
    pub base: (f64, f64),
    /// Taylor coefficients of r at t = 0 (r\[k\] multiplies t^k), r\[0\] = 0.
    pub r: Vec<f64>,
    /// +1.0 or −1.0; the sign applied to t when building curve series.
    pub orientation: f64,
}

impl LocalParam {
    /// Degree K of the stored expansion.
    pub fn degree(&self) -> usize {
        self.r.len() - 1
    }

    /// The derivative r^{(k)}(0) of the graph function.
    pub fn r_deriv(&self, k: usize) -> f64 {
        factorial(k) * self.r[k]
    }

    /// Taylor series of the oriented x displacement x(t) − x*.
    pub fn x_series(&self) -> Vec<f64> {
        match self.branch {
            Branch::XIsT => self.t_series(),
            Branch::YIsT => self.oriented_r(),
        }
    }

    /// Taylor series of the oriented y displacement y(t) − y*.
    pub fn y_series(&self) -> Vec<f64> {
        match self.branch {
            Branch::XIsT => self.oriented_r(),
            Branch::YIsT => self.t_series(),
        }
    }

    fn t_series(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.r.len()];
        if s.len() > 1 {
            s[1] = self.orientation;
        }
        s
    }

    fn oriented_r(&self) -> Vec<f64> {
        self.r
            .iter()
            .enumerate()
            .map(|(k, &c)| if k % 2 == 1 { self.orientation * c } else { c })
            .collect()
    }
}

/// Derive the local parametrisation of Γ from the jet of ψ at a base point.
///
/// The graph coefficients are found order by order by forcing the Taylor
/// coefficients of ψ(x(t), y(t)) to vanish; no closed-form curvature
/// formulas are involved. Fails when ∇ψ vanishes at the base point.
pub fn local_param(psi_jet: &Jet2, degree: usize) -> Result<LocalParam> {
    assert!(
        psi_jet.degree() >= degree,
        "psi jet must carry at least the requested degree"
    );
    let px = psi_jet.coeff(1, 0);
    let py = psi_jet.coeff(0, 1);
    let scale = jet_scale(psi_jet);
    if (px * px + py * py).sqrt() <= 1e-12 * scale {
        return Err(Error::geometry(format!(
            "level set gradient vanishes at ({:.6}, {:.6})",
            psi_jet.center().0,
            psi_jet.center().1
        )));
    }
    let branch = if px.abs() >= py.abs() {
        Branch::YIsT
    } else {
        Branch::XIsT
    };
    // Leading coefficient multiplying r[k] t^k in ψ(x(t), y(t)): the ψ
    // derivative in the graph direction.
    let pivot = match branch {
        Branch::YIsT => px,
        Branch::XIsT => py,
    };

    let len = degree + 1;
    let mut r = vec![0.0; len];
    for k in 1..len {
        let (xs, ys) = branch_series(branch, &r, 1.0);
        let residual = compose_psi(psi_jet, &xs, &ys, k);
        r[k] -= residual / pivot;
    }

    // Orientation: make the left normal of the traversal point into ψ > 0.
    let (xs, ys) = branch_series(branch, &r, 1.0);
    let orientation = if px * ys[1] - py * xs[1] < 0.0 {
        -1.0
    } else {
        1.0
    };

    let param = LocalParam {
        branch,
        base: psi_jet.center(),
        r,
        orientation,
    };

    // Defining property: the curve annihilates ψ through the degree.
    debug_assert!({
        let res = param_residual(psi_jet, &param);
        res <= PARAM_RESIDUAL_REL_TOL * scale.max(1.0)
    });
    Ok(param)
}

/// Largest |coefficient| of a jet; used to scale residual tolerances.
fn jet_scale(jet: &Jet2) -> f64 {
    let mut m = 0.0f64;
    for (mm, nn) in MultiIndexSet::full(jet.degree()).iter() {
        m = m.max(jet.coeff(mm, nn).abs());
    }
    m
}

fn branch_series(branch: Branch, r: &[f64], orientation: f64) -> (Vec<f64>, Vec<f64>) {
    let mut t = vec![0.0; r.len()];
    if t.len() > 1 {
        t[1] = orientation;
    }
    let graph: Vec<f64> = r
        .iter()
        .enumerate()
        .map(|(k, &c)| if k % 2 == 1 { orientation * c } else { c })
        .collect();
    match branch {
        Branch::XIsT => (t, graph),
        Branch::YIsT => (graph, t),
    }
}

/// Taylor coefficient of t^k in ψ(x* + X(t), y* + Y(t)).
fn compose_psi(psi_jet: &Jet2, xs: &[f64], ys: &[f64], k: usize) -> f64 {
    let len = xs.len();
    let degree = psi_jet.degree();
    // Power caches of the displacement series.
    let mut xp: Vec<Vec<f64>> = vec![unit_series(len)];
    let mut yp: Vec<Vec<f64>> = vec![unit_series(len)];
    for m in 1..=degree {
        let prev = xp[m - 1].clone();
        xp.push(series_mul(&prev, xs));
        let prev = yp[m - 1].clone();
        yp.push(series_mul(&prev, ys));
    }
    let mut acc = 0.0;
    for (m, n) in MultiIndexSet::full(degree).iter() {
        let c = psi_jet.coeff(m, n);
        if c == 0.0 || (m, n) == (0, 0) {
            continue;
        }
        // Convolution of xp[m] and yp[n] at order k.
        let mut conv = 0.0;
        for p in 0..=k.min(len - 1) {
            let q = k - p;
            if q < len {
                conv += xp[m][p] * yp[n][q];
            }
        }
        acc += c * conv;
    }
    acc
}

fn unit_series(len: usize) -> Vec<f64> {
    let mut s = vec![0.0; len];
    s[0] = 1.0;
    s
}

/// Largest Taylor-residual coefficient of ψ along the recovered curve,
/// through the parametrisation degree. Exposed for tests.
pub fn param_residual(psi_jet: &Jet2, param: &LocalParam) -> f64 {
    let xs = param.x_series();
    let ys = param.y_series();
    let mut worst = psi_jet.value().abs();
    for k in 1..=param.degree() {
        worst = worst.max(compose_psi(psi_jet, &xs, &ys, k).abs());
    }
    worst
}

/// Taylor tables of curve monomials used by the interface coupling.
///
/// `r[idx][p]` is the coefficient of t^p in X(t)^m · Y(t)^n, where (m, n) is
/// the idx-th element of Λ_{M+1} and X, Y are the displacement series of the
/// curve; p runs to M+1. `rt[idx][p]` carries the additional arclength
/// factor √(X′(t)² + Y′(t)²); p runs to M.
#[derive(Clone, Debug)]
pub struct CurveTables {
    /// Index set Λ_{M+1} the rows refer to.
    pub indices: MultiIndexSet,
    /// Plain monomial series, p = 0..=M+1.
    pub r: Vec<Vec<f64>>,
    /// Arclength-weighted series, p = 0..=M.
    pub rt: Vec<Vec<f64>>,
}

/// Build the curve tables from displacement series of length ≥ M+2.
pub fn curve_tables_from_series(xs: &[f64], ys: &[f64], m_order: usize) -> Result<CurveTables> {
    let len = m_order + 2;
    assert!(
        xs.len() >= len && ys.len() >= len,
        "curve series too short for the requested order"
    );
    let xs = &xs[..len];
    let ys = &ys[..len];
    let indices = MultiIndexSet::full(m_order + 1);

    let mut xp: Vec<Vec<f64>> = vec![unit_series(len)];
    let mut yp: Vec<Vec<f64>> = vec![unit_series(len)];
    for k in 1..=m_order + 1 {
        let prev = xp[k - 1].clone();
        xp.push(series_mul(&prev, xs));
        let prev = yp[k - 1].clone();
        yp.push(series_mul(&prev, ys));
    }

    let mut r = Vec::with_capacity(indices.len());
    for (m, n) in indices.iter() {
        r.push(series_mul(&xp[m], &yp[n]));
    }

    let dx = series_derivative(xs);
    let dy = series_derivative(ys);
    let speed2 = {
        let a = series_mul(&dx, &dx);
        let b = series_mul(&dy, &dy);
        a.iter().zip(&b).map(|(u, v)| u + v).collect::<Vec<f64>>()
    };
    let w = series_sqrt(&speed2[..len - 1])?;
    let mut rt = Vec::with_capacity(indices.len());
    for row in &r {
        rt.push(series_mul(&w, &row[..len - 1]));
    }

    Ok(CurveTables { indices, r, rt })
}

/// Curve tables for a recovered parametrisation.
pub fn curve_tables(param: &LocalParam, m_order: usize) -> Result<CurveTables> {
    assert!(
        param.degree() >= m_order + 1,
        "parametrisation degree too low for the requested order"
    );
    curve_tables_from_series(&param.x_series(), &param.y_series(), m_order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprjet::parse_expr;
    use approx::assert_relative_eq;

    #[test]
    fn grid_relations_hold() {
        let g = GridSpec::new(-3.0, 3.0, -3.0, 3.0, 32).unwrap();
        assert_eq!(g.n0, 1);
        assert_eq!(g.n2, 32);
        assert_relative_eq!(g.h * g.n1 as f64, g.l2 - g.l1);
        assert_relative_eq!(g.h * g.n2 as f64, g.l4 - g.l3);
        let g = GridSpec::new(0.0, 1.0, 0.0, 3.0, 16).unwrap();
        assert_eq!(g.n0, 3);
        assert_eq!(g.n2, 48);
        assert!(GridSpec::new(0.0, 1.0, 0.0, 1.5, 16).is_err());
        assert!(GridSpec::new(1.0, 0.0, 0.0, 1.0, 16).is_err());
    }

    #[test]
    fn interior_indexing_round_trips() {
        let g = GridSpec::new(0.0, 1.0, 0.0, 2.0, 8).unwrap();
        for idx in 0..g.interior_len() {
            let (i, j) = g.interior_coords(idx);
            assert_eq!(g.interior_index(i, j), idx);
        }
    }

    #[test]
    fn half_plane_membership_sets() {
        // ψ = 2x − y at the origin: sign of 2k − ℓ over the nine offsets.
        let psi = parse_expr("2*x-y").unwrap();
        let g = GridSpec::new(-2.0, 2.0, -2.0, 2.0, 4).unwrap();
        let classes = classify_points(&g, &psi);
        // Γ crosses the boundary here, so classification must refuse.
        assert!(classes.is_err());

        // Check the membership rule directly at a node on Γ instead.
        let h = 0.25;
        let mut d_plus = Vec::new();
        let mut d_minus = Vec::new();
        for (k, l) in OFFSETS {
            let v = eval_expr(&psi, k as f64 * h, l as f64 * h).unwrap();
            if v >= 0.0 {
                d_plus.push((k, l));
            } else {
                d_minus.push((k, l));
            }
        }
        let mut expect_plus = vec![(0, 0), (0, -1), (1, -1), (1, 0), (1, 1)];
        expect_plus.sort_unstable();
        let mut got_plus = d_plus.clone();
        got_plus.sort_unstable();
        assert_eq!(got_plus, expect_plus);
        assert_eq!(d_plus.len() + d_minus.len(), 9);
    }

    #[test]
    fn circle_classification_far_node_is_regular_plus() {
        let psi = parse_expr("x^2+y^2-2").unwrap();
        let g = GridSpec::new(
            -std::f64::consts::PI,
            std::f64::consts::PI,
            -std::f64::consts::PI,
            std::f64::consts::PI,
            32,
        )
        .unwrap();
        let classes = classify_points(&g, &psi).unwrap();
        // Node near the corner: far outside the circle.
        match classes.get(2, 2) {
            PointClass::Regular(Side::Plus) => {}
            other => panic!("expected Regular(+), got {other:?}"),
        }
        // Node at the centre of the grid: inside the circle.
        let mid = g.n1 / 2;
        match classes.get(mid, mid) {
            PointClass::Regular(Side::Minus) => {}
            other => panic!("expected Regular(−), got {other:?}"),
        }
        assert!(classes.irregular_count() > 0);
    }

    #[test]
    fn classification_is_scale_invariant() {
        let psi = parse_expr("x^2+y^2-2").unwrap();
        let psi_scaled = parse_expr("7.25*(x^2+y^2-2)").unwrap();
        let g = GridSpec::new(
            -std::f64::consts::PI,
            std::f64::consts::PI,
            -std::f64::consts::PI,
            std::f64::consts::PI,
            24,
        )
        .unwrap();
        let a = classify_points(&g, &psi).unwrap();
        let b = classify_points(&g, &psi_scaled).unwrap();
        for ((_, _, ca), (_, _, cb)) in a.iter().zip(b.iter()) {
            assert_eq!(ca.is_irregular(), cb.is_irregular());
            assert_eq!(ca.side(), cb.side());
        }
    }

    #[test]
    fn base_point_on_interface_is_the_node() {
        let psi = parse_expr("2*x-y").unwrap();
        let (x, y, v0, w0) = find_base_point(&psi, (0.0, 0.0), 0.25).unwrap();
        assert_eq!((x, y, v0, w0), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn base_point_projects_onto_circle() {
        let psi = parse_expr("x^2+y^2-2").unwrap();
        let (x, y, v0, w0) = find_base_point(&psi, (1.5, 0.0), 0.25).unwrap();
        assert_relative_eq!(x, 2.0f64.sqrt(), max_relative = 1e-10);
        assert!(y.abs() < 1e-10);
        assert!(v0.abs() < 1.0 && w0.abs() < 1.0);
        assert_relative_eq!(v0, (1.5 - 2.0f64.sqrt()) / 0.25, max_relative = 1e-8);
    }

    #[test]
    fn local_param_circle_curvature() {
        let psi = parse_expr("x^2+y^2-2").unwrap();
        let jet = jet_eval(&psi, (2.0f64.sqrt(), 0.0), 6).unwrap();
        let p = local_param(&jet, 5).unwrap();
        assert_eq!(p.branch, Branch::YIsT);
        assert!(p.r_deriv(1).abs() < 1e-14);
        assert_relative_eq!(p.r_deriv(2), -1.0 / 2.0f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn local_param_line_follows_branch_rule() {
        // |ψ_x| = 2 ≥ |ψ_y| = 1, so y is the parameter and x = r(t) = t/2.
        let psi = parse_expr("2*x-y").unwrap();
        let jet = jet_eval(&psi, (0.0, 0.0), 4).unwrap();
        let p = local_param(&jet, 3).unwrap();
        assert_eq!(p.branch, Branch::YIsT);
        assert_relative_eq!(p.r_deriv(1), 0.5);
        for k in 2..=3 {
            assert!(p.r_deriv(k).abs() < 1e-14);
        }
    }

    #[test]
    fn local_param_residual_vanishes_for_quartic() {
        let psi = parse_expr("y^2-2*x^2+x^4-1").unwrap();
        // A point on that curve: x = 1.2, y² = 1 + 2x² − x⁴.
        let x0: f64 = 1.2;
        let y0 = (1.0 + 2.0 * x0 * x0 - x0.powi(4)).sqrt();
        let jet = jet_eval(&psi, (x0, y0), 7).unwrap();
        let p = local_param(&jet, 6).unwrap();
        let res = param_residual(&jet, &p);
        let scale = super::jet_scale(&jet).max(1.0);
        assert!(
            res <= PARAM_RESIDUAL_REL_TOL * scale,
            "residual {res} vs scale {scale}"
        );
    }

    #[test]
    fn degenerate_gradient_is_rejected() {
        let psi = parse_expr("x^2+y^2").unwrap();
        let jet = jet_eval(&psi, (0.0, 0.0), 4).unwrap();
        assert!(local_param(&jet, 3).is_err());
    }

    #[test]
    fn curve_tables_for_straight_line() {
        // Components (2t, t): monomial products of the two series.
        let xs = [0.0, 2.0, 0.0, 0.0, 0.0, 0.0];
        let ys = [0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let t = curve_tables_from_series(&xs, &ys, 4).unwrap();
        let at = |m: usize, n: usize, p: usize| t.r[t.indices.position(m, n).unwrap()][p];
        assert_eq!(at(1, 0, 1), 2.0);
        assert_eq!(at(0, 1, 1), 1.0);
        assert_eq!(at(1, 1, 2), 2.0);
        assert_eq!(at(1, 0, 0), 0.0);
        let rt00 = &t.rt[t.indices.position(0, 0).unwrap()];
        assert_relative_eq!(rt00[0], 5.0f64.sqrt(), max_relative = 1e-14);
        assert!(rt00[1].abs() < 1e-14);
    }

    #[test]
    fn arclength_factor_is_even_on_the_circle() {
        let psi = parse_expr("x^2+y^2-2").unwrap();
        let jet = jet_eval(&psi, (2.0f64.sqrt(), 0.0), 7).unwrap();
        let p = local_param(&jet, 6).unwrap();
        let t = curve_tables(&p, 5).unwrap();
        let rt00 = &t.rt[t.indices.position(0, 0).unwrap()];
        assert_relative_eq!(rt00[0], 1.0, max_relative = 1e-12);
        assert!(rt00[1].abs() < 1e-12, "odd arclength coefficient {}", rt00[1]);
    }

    #[test]
    fn orientation_normal_points_to_plus_side() {
        // For several points on the circle, ∇ψ·(y′, −x′) must be ≥ 0.
        let psi = parse_expr("x^2+y^2-2").unwrap();
        for angle_deg in [0.0f64, 40.0, 95.0, 180.0, 250.0, 333.0] {
            let a = angle_deg.to_radians();
            let base = (2.0f64.sqrt() * a.cos(), 2.0f64.sqrt() * a.sin());
            let jet = jet_eval(&psi, base, 6).unwrap();
            let p = local_param(&jet, 5).unwrap();
            let xs = p.x_series();
            let ys = p.y_series();
            let dot = jet.coeff(1, 0) * ys[1] - jet.coeff(0, 1) * xs[1];
            assert!(dot >= 0.0, "normal flipped at angle {angle_deg}");
        }
    }
}
