//! Least-squares adjustment: linear Gauss-Markov solves, observation equations
//! for survey networks, Gauss-Newton and Newton iterations, the Pázman
//! curvature check and satellite dilution of precision.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Matrix3, Matrix4};
use serde::{Deserialize, Serialize};

use crate::coords::{geodetic_to_ecef, local_frame, EcefCoord, GeodeticCoord};
use crate::ellipsoid::Ellipsoid;
use crate::error::{GeoError, Result};
use crate::projections::PlaneCoord;

const MAX_CONDITION: f64 = 1e12;
/// Weight multiplier for condition rows relative to the median observation weight.
pub const CONSTRAINT_WEIGHT_FACTOR: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub enum Weights {
    Diagonal(DVector<f64>),
    Full(DMatrix<f64>),
}

impl Weights {
    pub fn identity(n: usize) -> Self {
        Weights::Diagonal(DVector::from_element(n, 1.0))
    }

    pub fn from_sigmas(sigmas: &[f64]) -> Result<Self> {
        if sigmas.iter().any(|s| !(*s > 0.0)) {
            return Err(GeoError::Domain("standard deviations must be positive".into()));
        }
        Ok(Weights::Diagonal(DVector::from_iterator(sigmas.len(), sigmas.iter().map(|s| 1.0 / (s * s)))))
    }

    pub fn len(&self) -> usize {
        match self {
            Weights::Diagonal(d) => d.len(),
            Weights::Full(m) => m.nrows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        match self {
            Weights::Diagonal(d) => DMatrix::from_diagonal(d),
            Weights::Full(m) => m.clone(),
        }
    }

    fn mul_vec(&self, v: &DVector<f64>) -> DVector<f64> {
        match self {
            Weights::Diagonal(d) => d.component_mul(v),
            Weights::Full(m) => m * v,
        }
    }

    /// Pᵀ-weighted Gram product AᵀPB.
    fn weighted_product(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            Weights::Diagonal(d) => {
                let mut pb = b.clone();
                for (i, mut row) in pb.row_iter_mut().enumerate() {
                    row *= d[i];
                }
                a.transpose() * pb
            }
            Weights::Full(m) => a.transpose() * m * b,
        }
    }

    fn quadratic(&self, v: &DVector<f64>) -> f64 {
        v.dot(&self.mul_vec(v))
    }

    fn norm(&self) -> f64 {
        match self {
            Weights::Diagonal(d) => d.amax(),
            Weights::Full(m) => m.norm(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Weights::Diagonal(d) => {
                if d.iter().any(|w| !(*w > 0.0)) {
                    return Err(GeoError::Domain("weights must be positive".into()));
                }
            }
            Weights::Full(m) => {
                if !m.is_square() || (m - m.transpose()).amax() > 1e-12 * m.amax() {
                    return Err(GeoError::Domain("weight matrix must be symmetric".into()));
                }
                if m.clone().cholesky().is_none() {
                    return Err(GeoError::Domain("weight matrix must be positive-definite".into()));
                }
            }
        }
        Ok(())
    }
}

/// A·X + K = V with K = calculated − observed.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub a: DMatrix<f64>,
    pub k: DVector<f64>,
    pub p: Weights,
}

impl LinearSystem {
    pub fn new(a: DMatrix<f64>, k: DVector<f64>, p: Weights) -> Result<Self> {
        if a.nrows() != k.len() || a.nrows() != p.len() {
            return Err(GeoError::Domain("A, K and P sizes differ".into()));
        }
        if a.nrows() < a.ncols() {
            return Err(GeoError::Domain("fewer observations than unknowns".into()));
        }
        p.validate()?;
        Ok(LinearSystem { a, k, p })
    }

    /// Builds the system from the A·X = L + V form.
    pub fn from_observations(a: DMatrix<f64>, l: DVector<f64>, p: Weights) -> Result<Self> {
        Self::new(a, -l, p)
    }

    /// Appends condition rows C·X + k_c = 0 as observations of very large weight.
    pub fn with_constraints(self, c: DMatrix<f64>, kc: DVector<f64>) -> Result<Self> {
        if c.ncols() != self.a.ncols() || c.nrows() != kc.len() {
            return Err(GeoError::Domain("constraint sizes do not match the system".into()));
        }
        let diag: Vec<f64> = match &self.p {
            Weights::Diagonal(d) => d.iter().copied().collect(),
            Weights::Full(m) => m.diagonal().iter().copied().collect(),
        };
        let big = CONSTRAINT_WEIGHT_FACTOR * median(&diag);
        let (n, m, r) = (self.a.nrows(), c.nrows(), self.a.ncols());
        let mut a = DMatrix::zeros(n + m, r);
        a.rows_mut(0, n).copy_from(&self.a);
        a.rows_mut(n, m).copy_from(&c);
        let mut k = DVector::zeros(n + m);
        k.rows_mut(0, n).copy_from(&self.k);
        k.rows_mut(n, m).copy_from(&kc);
        let p = match self.p {
            Weights::Diagonal(d) => {
                let mut w = DVector::from_element(n + m, big);
                w.rows_mut(0, n).copy_from(&d);
                Weights::Diagonal(w)
            }
            Weights::Full(pm) => {
                let mut w = DMatrix::zeros(n + m, n + m);
                w.view_mut((0, 0), (n, n)).copy_from(&pm);
                for i in n..n + m {
                    w[(i, i)] = big;
                }
                Weights::Full(w)
            }
        };
        Ok(LinearSystem { a, k, p })
    }

    pub fn normal_matrix(&self) -> DMatrix<f64> {
        self.p.weighted_product(&self.a, &self.a)
    }
}

fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    if v.is_empty() {
        1.0
    } else if v.len() % 2 == 1 {
        v[v.len() / 2]
    } else {
        0.5 * (v[v.len() / 2 - 1] + v[v.len() / 2])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdjustmentResult {
    pub x_bar: DVector<f64>,
    pub v: DVector<f64>,
    /// Variance factor; absent when there is no redundancy.
    pub s2: Option<f64>,
    /// N⁻¹.
    pub cofactor: DMatrix<f64>,
    /// s²·N⁻¹, absent with s².
    pub cov_x: Option<DMatrix<f64>>,
}

impl AdjustmentResult {
    pub fn redundancy(&self) -> usize {
        self.v.len() - self.x_bar.len()
    }
}

/// Condition number of AᵀA after column equilibration; rank loss shows up here
/// independently of the observation weights.
fn design_condition(a: &DMatrix<f64>) -> f64 {
    let mut scaled = a.clone();
    for mut col in scaled.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= n;
        }
    }
    let sv = scaled.singular_values();
    let (max, min) = (sv.max(), sv.min());
    if min <= 0.0 {
        f64::INFINITY
    } else {
        (max / min).powi(2)
    }
}

fn solve_normal(a: &DMatrix<f64>, p: &Weights, rhs: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if a.ncols() == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    if !(design_condition(a) <= MAX_CONDITION) {
        return Err(GeoError::SingularNormal);
    }
    let n = p.weighted_product(a, a);
    let chol = n.cholesky().ok_or(GeoError::SingularNormal)?;
    let x = chol.solve(rhs);
    Ok((x, chol.inverse()))
}

pub fn solve_linear(sys: &LinearSystem) -> Result<AdjustmentResult> {
    let (n, r) = (sys.a.nrows(), sys.a.ncols());
    let rhs = -sys.p.weighted_product(&sys.a, &DMatrix::from_column_slice(n, 1, sys.k.as_slice())).column(0).into_owned();
    let (x_bar, cofactor) = solve_normal(&sys.a, &sys.p, &rhs)?;
    let v = &sys.a * &x_bar + &sys.k;
    let s2 = (n > r).then(|| sys.p.quadratic(&v) / (n - r) as f64);
    let cov_x = s2.map(|s| &cofactor * s);
    Ok(AdjustmentResult { x_bar, v, s2, cofactor, cov_x })
}

/// ‖AᵀPṼ‖ and the scale ‖A‖‖P‖‖Ṽ‖ it is judged against.
pub fn renormalization_residual(sys: &LinearSystem, res: &AdjustmentResult) -> (f64, f64) {
    let pv = sys.p.mul_vec(&res.v);
    let atpv = sys.a.transpose() * pv;
    (atpv.norm(), sys.a.norm() * sys.p.norm() * res.v.norm())
}

/// One linearised observation: coefficients of the local unknowns and the
/// constant term (calculated − observed).
#[derive(Debug, Clone, PartialEq)]
pub struct EquationRow {
    pub coeffs: Vec<f64>,
    pub constant: f64,
}

fn wrap_pi(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

/// Plane distance; coefficients on (dx₁, dy₁, dx₂, dy₂).
pub fn obs_distance2d(p1: &PlaneCoord, p2: &PlaneCoord, observed: f64) -> Result<EquationRow> {
    let (dx, dy) = (p1.e - p2.e, p1.n - p2.n);
    let d0 = dx.hypot(dy);
    if d0 == 0.0 {
        return Err(GeoError::CoincidentPoints);
    }
    Ok(EquationRow { coeffs: vec![dx / d0, dy / d0, -dx / d0, -dy / d0], constant: d0 - observed })
}

/// Direction reading with an orientation unknown; coefficients on
/// (dx₁, dy₁, dx₂, dy₂, dV). With `metric` the row is multiplied by the
/// distance so its residual is in metres.
pub fn obs_direction(p1: &PlaneCoord, p2: &PlaneCoord, reading: f64, v0: f64, metric: bool) -> Result<EquationRow> {
    let d = p1.distance(p2);
    if d == 0.0 {
        return Err(GeoError::CoincidentPoints);
    }
    let g0 = p1.bearing(p2);
    let (s, c) = g0.sin_cos();
    let mut coeffs = vec![-c / d, s / d, c / d, -s / d, -1.0];
    let mut constant = wrap_pi(g0 - reading - v0);
    if metric {
        coeffs.iter_mut().for_each(|x| *x *= d);
        constant *= d;
    }
    Ok(EquationRow { coeffs, constant })
}

/// Spatial distance; coefficients on (dX₁, dY₁, dZ₁, dX₂, dY₂, dZ₂).
pub fn obs_distance3d(p1: &EcefCoord, p2: &EcefCoord, observed: f64) -> Result<EquationRow> {
    let d = p2.to_vector() - p1.to_vector();
    let dc = d.norm();
    if dc == 0.0 {
        return Err(GeoError::CoincidentPoints);
    }
    let u = d / dc;
    Ok(EquationRow { coeffs: vec![-u.x, -u.y, -u.z, u.x, u.y, u.z], constant: dc - observed })
}

/// Height difference h_B − h_A; coefficients on (dh_A, dh_B) and the weight
/// 1/dist_km.
pub fn obs_leveling(h_a: f64, h_b: f64, dh_obs: f64, dist_km: f64) -> Result<(EquationRow, f64)> {
    if !(dist_km > 0.0) {
        return Err(GeoError::Domain("leveling distance must be positive".into()));
    }
    Ok((EquationRow { coeffs: vec![-1.0, 1.0], constant: (h_b - h_a) - dh_obs }, 1.0 / dist_km))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObsKind {
    #[serde(alias = "distance2D")]
    Distance2d,
    Direction,
    #[serde(alias = "distance3D")]
    Distance3d,
    Leveling,
}

/// One network observation. Directions are in radians; `sigma` shares the
/// unit of `value`. For leveling with `dist_km`, `sigma` is per km.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub kind: ObsKind,
    pub from: String,
    pub to: String,
    pub value: f64,
    pub sigma: f64,
    #[serde(default)]
    pub set_id: Option<String>,
    #[serde(default)]
    pub dist_km: Option<f64>,
}

/// Point of a network. Plane networks use (x, y) as (E, N); leveling uses z
/// as the height.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkPoint {
    pub id: String,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub z: f64,
    #[serde(default)]
    pub fixed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Unknown {
    X(String),
    Y(String),
    Z(String),
    Orientation(String, String),
}

impl std::fmt::Display for Unknown {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Unknown::X(p) => write!(f, "{p}.x"),
            Unknown::Y(p) => write!(f, "{p}.y"),
            Unknown::Z(p) => write!(f, "{p}.z"),
            Unknown::Orientation(s, set) => write!(f, "{s}.V[{set}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub points: Vec<NetworkPoint>,
    pub observations: Vec<Observation>,
    /// Multiply direction rows by the sight distance so every residual is metric.
    pub metric_directions: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkResult {
    pub points: Vec<NetworkPoint>,
    pub unknowns: Vec<Unknown>,
    /// Final orientation constants per (station, set).
    pub orientations: BTreeMap<(String, String), f64>,
    pub adjustment: AdjustmentResult,
    /// Residuals in the unit of each observation (radians for directions).
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

impl Network {
    pub fn new(points: Vec<NetworkPoint>, observations: Vec<Observation>) -> Result<Self> {
        let net = Network { points, observations, metric_directions: true };
        net.validate()?;
        Ok(net)
    }

    fn validate(&self) -> Result<()> {
        for o in &self.observations {
            if !(o.sigma > 0.0) {
                return Err(GeoError::Domain(format!("σ must be positive for {}→{}", o.from, o.to)));
            }
            for id in [&o.from, &o.to] {
                if self.index(id).is_none() {
                    return Err(GeoError::Domain(format!("unknown point {id}")));
                }
            }
            if o.from == o.to {
                return Err(GeoError::CoincidentPoints);
            }
        }
        Ok(())
    }

    fn index(&self, id: &str) -> Option<usize> {
        self.points.iter().position(|p| p.id == id)
    }

    fn set_key(o: &Observation) -> (String, String) {
        (o.from.clone(), o.set_id.clone().unwrap_or_default())
    }

    /// Unknowns in a fixed order: point components by point order, then
    /// orientations by first appearance.
    pub fn unknowns(&self) -> Vec<Unknown> {
        let mut used: BTreeMap<usize, [bool; 3]> = BTreeMap::new();
        let mut orient: Vec<(String, String)> = vec![];
        for o in &self.observations {
            let comps = match o.kind {
                ObsKind::Distance2d | ObsKind::Direction => [true, true, false],
                ObsKind::Distance3d => [true, true, true],
                ObsKind::Leveling => [false, false, true],
            };
            for id in [&o.from, &o.to] {
                let i = self.index(id).expect("validated");
                let e = used.entry(i).or_insert([false; 3]);
                for k in 0..3 {
                    e[k] |= comps[k];
                }
            }
            if o.kind == ObsKind::Direction {
                let key = Self::set_key(o);
                if !orient.contains(&key) {
                    orient.push(key);
                }
            }
        }
        let mut out = vec![];
        for (i, comps) in used {
            let p = &self.points[i];
            if p.fixed {
                continue;
            }
            if comps[0] {
                out.push(Unknown::X(p.id.clone()));
            }
            if comps[1] {
                out.push(Unknown::Y(p.id.clone()));
            }
            if comps[2] {
                out.push(Unknown::Z(p.id.clone()));
            }
        }
        out.extend(orient.into_iter().map(|(s, set)| Unknown::Orientation(s, set)));
        out
    }

    /// Orientation approximations: mean of (bearing − reading) per set.
    fn orientation_approx(&self) -> BTreeMap<(String, String), f64> {
        let mut acc: BTreeMap<(String, String), (f64, f64)> = BTreeMap::new();
        for o in self.observations.iter().filter(|o| o.kind == ObsKind::Direction) {
            let (p1, p2) = (self.plane(&o.from), self.plane(&o.to));
            let z = wrap_pi(p1.bearing(&p2) - o.value);
            let e = acc.entry(Self::set_key(o)).or_insert((0.0, 0.0));
            e.0 += z.sin();
            e.1 += z.cos();
        }
        acc.into_iter().map(|(k, (s, c))| (k, s.atan2(c))).collect()
    }

    fn plane(&self, id: &str) -> PlaneCoord {
        let p = &self.points[self.index(id).expect("validated")];
        PlaneCoord::new(p.x, p.y)
    }

    fn ecef(&self, id: &str) -> EcefCoord {
        let p = &self.points[self.index(id).expect("validated")];
        EcefCoord::new(p.x, p.y, p.z)
    }

    /// Linearises every observation at the current coordinates.
    pub fn linearize(&self) -> Result<(LinearSystem, Vec<Unknown>, BTreeMap<(String, String), f64>)> {
        let unknowns = self.unknowns();
        let col: BTreeMap<&Unknown, usize> = unknowns.iter().enumerate().map(|(i, u)| (u, i)).collect();
        let v0 = self.orientation_approx();
        let n = self.observations.len();
        let mut a = DMatrix::zeros(n, unknowns.len());
        let mut k = DVector::zeros(n);
        let mut w = DVector::zeros(n);
        for (row, o) in self.observations.iter().enumerate() {
            let (f, t) = (o.from.clone(), o.to.clone());
            let (eq, targets, sigma): (EquationRow, Vec<Unknown>, f64) = match o.kind {
                ObsKind::Distance2d => (
                    obs_distance2d(&self.plane(&f), &self.plane(&t), o.value)?,
                    vec![Unknown::X(f.clone()), Unknown::Y(f.clone()), Unknown::X(t.clone()), Unknown::Y(t.clone())],
                    o.sigma,
                ),
                ObsKind::Direction => {
                    let key = Self::set_key(o);
                    let (p1, p2) = (self.plane(&f), self.plane(&t));
                    let eq = obs_direction(&p1, &p2, o.value, v0[&key], self.metric_directions)?;
                    let sigma = if self.metric_directions { o.sigma * p1.distance(&p2) } else { o.sigma };
                    (
                        eq,
                        vec![
                            Unknown::X(f.clone()),
                            Unknown::Y(f.clone()),
                            Unknown::X(t.clone()),
                            Unknown::Y(t.clone()),
                            Unknown::Orientation(key.0, key.1),
                        ],
                        sigma,
                    )
                }
                ObsKind::Distance3d => (
                    obs_distance3d(&self.ecef(&f), &self.ecef(&t), o.value)?,
                    vec![
                        Unknown::X(f.clone()),
                        Unknown::Y(f.clone()),
                        Unknown::Z(f.clone()),
                        Unknown::X(t.clone()),
                        Unknown::Y(t.clone()),
                        Unknown::Z(t.clone()),
                    ],
                    o.sigma,
                ),
                ObsKind::Leveling => {
                    let (ha, hb) = (self.ecef(&f).z, self.ecef(&t).z);
                    match o.dist_km {
                        Some(km) => {
                            let (eq, weight) = obs_leveling(ha, hb, o.value, km)?;
                            (eq, vec![Unknown::Z(f.clone()), Unknown::Z(t.clone())], o.sigma / weight.sqrt())
                        }
                        None => (
                            EquationRow { coeffs: vec![-1.0, 1.0], constant: (hb - ha) - o.value },
                            vec![Unknown::Z(f.clone()), Unknown::Z(t.clone())],
                            o.sigma,
                        ),
                    }
                }
            };
            for (c, u) in eq.coeffs.iter().zip(&targets) {
                // Fixed points have no column.
                if let Some(&j) = col.get(u) {
                    a[(row, j)] += c;
                }
            }
            k[row] = eq.constant;
            w[row] = 1.0 / (sigma * sigma);
        }
        // Redundancy is checked by the solver, so partial networks still linearise.
        Ok((LinearSystem { a, k, p: Weights::Diagonal(w) }, unknowns, v0))
    }

    /// Adjusts the network, relinearising until the coordinate corrections
    /// drop below `tol` metres (at most `max_iter` passes; 1 gives the
    /// plain linearised solution).
    pub fn adjust(&self, max_iter: usize, tol: f64) -> Result<NetworkResult> {
        let mut net = self.clone();
        let mut iterations = 0;
        loop {
            let (sys, unknowns, v0) = net.linearize()?;
            let res = solve_linear(&sys)?;
            iterations += 1;
            // Metric direction rows carry the sight distance of this linearisation.
            let scales: Vec<f64> = net
                .observations
                .iter()
                .map(|o| {
                    if o.kind == ObsKind::Direction && net.metric_directions {
                        net.plane(&o.from).distance(&net.plane(&o.to))
                    } else {
                        1.0
                    }
                })
                .collect();
            let mut max_step: f64 = 0.0;
            let mut orientations = v0.clone();
            for (u, dx) in unknowns.iter().zip(res.x_bar.iter()) {
                match u {
                    Unknown::X(id) | Unknown::Y(id) | Unknown::Z(id) => {
                        let i = net.index(id).expect("validated");
                        let p = &mut net.points[i];
                        match u {
                            Unknown::X(_) => p.x += dx,
                            Unknown::Y(_) => p.y += dx,
                            _ => p.z += dx,
                        }
                        max_step = max_step.max(dx.abs());
                    }
                    Unknown::Orientation(s, set) => {
                        *orientations.get_mut(&(s.clone(), set.clone())).expect("present") += dx;
                    }
                }
            }
            if max_step < tol || iterations >= max_iter {
                if max_step >= tol && max_iter > 1 {
                    return Err(GeoError::MaxIterations);
                }
                let residuals = res.v.iter().zip(&scales).map(|(v, s)| v / s).collect();
                return Ok(NetworkResult { points: net.points, unknowns, orientations, adjustment: res, residuals, iterations });
            }
        }
    }
}

/// ζ: ℝʳ → ℝⁿ with its Jacobian; second derivatives are optional.
pub trait Model {
    fn eval(&self, x: &DVector<f64>) -> DVector<f64>;
    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64>;
    /// ∂²ζᵢ/∂x∂x for each observation i, when known analytically.
    fn second_derivatives(&self, _x: &DVector<f64>) -> Option<Vec<DMatrix<f64>>> {
        None
    }
}

/// Closure-backed model.
pub struct FnModel<F, J>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
    J: Fn(&DVector<f64>) -> DMatrix<f64>,
{
    pub f: F,
    pub j: J,
}

impl<F, J> Model for FnModel<F, J>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
    J: Fn(&DVector<f64>) -> DMatrix<f64>,
{
    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.f)(x)
    }
    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        (self.j)(x)
    }
}

/// ζ(X) = L − e.
pub struct NonlinearProblem<'a> {
    pub model: &'a dyn Model,
    pub l: DVector<f64>,
    pub p: Weights,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussNewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for GaussNewtonOptions {
    fn default() -> Self {
        GaussNewtonOptions { tol: 1e-10, max_iter: 50, max_halvings: 20 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussNewtonOutcome {
    pub result: AdjustmentResult,
    pub trace: Vec<DVector<f64>>,
    /// Weighted residual norm ‖L − ζ(x)‖_P at each trace entry.
    pub costs: Vec<f64>,
    pub iterations: usize,
}

pub fn gauss_newton(prob: &NonlinearProblem, x0: &DVector<f64>, opts: GaussNewtonOptions) -> Result<GaussNewtonOutcome> {
    let n = prob.l.len();
    prob.p.validate()?;
    let cost = |x: &DVector<f64>| prob.p.quadratic(&(&prob.l - prob.model.eval(x))).sqrt();
    let slack = 1e-14 * prob.l.norm().max(1.0);
    let mut x = x0.clone();
    let mut c = cost(&x);
    let mut trace = vec![x.clone()];
    let mut costs = vec![c];
    let mut iterations = 0;
    loop {
        let j = prob.model.jacobian(&x);
        if j.nrows() != n || j.ncols() != x.len() {
            return Err(GeoError::Domain("Jacobian shape mismatch".into()));
        }
        let e = &prob.l - prob.model.eval(&x);
        let rhs = prob.p.weighted_product(&j, &DMatrix::from_column_slice(n, 1, e.as_slice())).column(0).into_owned();
        let (step, _) = solve_normal(&j, &prob.p, &rhs).map_err(|_| GeoError::SingularJacobian)?;
        if step.norm() < opts.tol {
            break;
        }
        if iterations == opts.max_iter {
            return Err(GeoError::MaxIterations);
        }
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let cand = &x + &step * t;
            let cc = cost(&cand);
            if cc <= c + slack {
                accepted = Some((cand, cc));
                break;
            }
            t *= 0.5;
        }
        let (nx, nc) = accepted.ok_or(GeoError::NoDescent)?;
        let moved = (&nx - &x).norm();
        x = nx;
        c = nc;
        iterations += 1;
        trace.push(x.clone());
        costs.push(c);
        if moved < opts.tol {
            break;
        }
    }
    let j = prob.model.jacobian(&x);
    let v = prob.model.eval(&x) - &prob.l;
    let r = x.len();
    let cofactor = prob.p.weighted_product(&j, &j).cholesky().ok_or(GeoError::SingularJacobian)?.inverse();
    let s2 = (n > r).then(|| prob.p.quadratic(&v) / (n - r) as f64);
    let cov_x = s2.map(|s| &cofactor * s);
    Ok(GaussNewtonOutcome { result: AdjustmentResult { x_bar: x, v, s2, cofactor, cov_x }, trace, costs, iterations })
}

/// Gradient of E = ½‖L − ζ‖²_P, i.e. −JᵀP(L − ζ).
pub fn energy_gradient(prob: &NonlinearProblem, x: &DVector<f64>) -> DVector<f64> {
    let j = prob.model.jacobian(x);
    let e = &prob.l - prob.model.eval(x);
    -(j.transpose() * prob.p.mul_vec(&e))
}

/// Objective with gradient and Hessian for Newton's method.
pub trait Objective {
    fn value(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
    fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub x: DVector<f64>,
    pub trace: Vec<DVector<f64>>,
}

/// x_{k+1} = x_k − (∇²E)⁻¹∇E. Refuses indefinite Hessians so the caller can
/// fall back to Gauss-Newton.
pub fn newton_minimize(obj: &dyn Objective, x0: &DVector<f64>, tol: f64, max_iter: usize) -> Result<NewtonOutcome> {
    let mut x = x0.clone();
    let mut trace = vec![x.clone()];
    for _ in 0..max_iter {
        let h = obj.hessian(&x);
        let g = obj.gradient(&x);
        let eig = h.clone().symmetric_eigen().eigenvalues;
        let scale = eig.amax().max(f64::MIN_POSITIVE);
        if eig.iter().any(|l| l.abs() <= 1e-14 * scale) {
            return Err(GeoError::SingularHessian);
        }
        if eig.iter().any(|l| *l < 0.0) {
            return Err(GeoError::IndefiniteHessian);
        }
        let step = h.cholesky().ok_or(GeoError::IndefiniteHessian)?.solve(&g);
        x -= &step;
        trace.push(x.clone());
        if step.norm() < tol {
            return Ok(NewtonOutcome { x, trace });
        }
    }
    Err(GeoError::MaxIterations)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PazmanReport {
    pub g: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub positive_definite: bool,
}

/// Second derivatives of ζ by central differences of the Jacobian.
fn numeric_second_derivatives(model: &dyn Model, x: &DVector<f64>) -> Vec<DMatrix<f64>> {
    let r = x.len();
    let n = model.eval(x).len();
    let mut out = vec![DMatrix::zeros(r, r); n];
    for beta in 0..r {
        let h = 1e-5 * (1.0 + x[beta].abs());
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[beta] += h;
        xm[beta] -= h;
        let d = (model.jacobian(&xp) - model.jacobian(&xm)) / (2.0 * h);
        for (i, m) in out.iter_mut().enumerate() {
            for alpha in 0..r {
                m[(alpha, beta)] = d[(i, alpha)];
            }
        }
    }
    for m in &mut out {
        let sym = (&*m + m.transpose()) * 0.5;
        *m = sym;
    }
    out
}

/// G = ⟨∂ζ/∂X_α, ∂ζ/∂X_β⟩, H = ⟨L − ζ, ∂²ζ/∂X_α∂X_β⟩, B = G − H, all in the
/// P metric.
pub fn pazman_check(prob: &NonlinearProblem, x_hat: &DVector<f64>) -> PazmanReport {
    let j = prob.model.jacobian(x_hat);
    let g = prob.p.weighted_product(&j, &j);
    let e = prob.p.mul_vec(&(&prob.l - prob.model.eval(x_hat)));
    let second = prob.model.second_derivatives(x_hat).unwrap_or_else(|| numeric_second_derivatives(prob.model, x_hat));
    let r = x_hat.len();
    let mut h = DMatrix::zeros(r, r);
    for (i, d2) in second.iter().enumerate() {
        h += d2 * e[i];
    }
    let b = &g - &h;
    let positive_definite = b.clone().cholesky().is_some();
    PazmanReport { g, h, b, positive_definite }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dop {
    pub gdop: f64,
    pub pdop: f64,
    pub tdop: f64,
    pub hdop: f64,
    pub vdop: f64,
}

/// DOP values from the cofactor Q = (AᵀA)⁻¹ and the local-frame rotation.
pub fn dop_from_cofactor(q: &Matrix4<f64>, rotation: &Matrix3<f64>) -> Dop {
    let qp: Matrix3<f64> = q.fixed_view::<3, 3>(0, 0).into_owned();
    let ql = rotation * qp * rotation.transpose();
    Dop {
        gdop: q.trace().sqrt(),
        pdop: qp.trace().sqrt(),
        tdop: q[(3, 3)].sqrt(),
        hdop: (ql[(0, 0)] + ql[(1, 1)]).sqrt(),
        vdop: ql[(2, 2)].sqrt(),
    }
}

/// Dilution of precision at `receiver` for the satellites above its horizon.
pub fn dop(ell: &Ellipsoid, sats: &[EcefCoord], receiver: &GeodeticCoord) -> Result<Dop> {
    let frame = local_frame(receiver);
    let r0 = geodetic_to_ecef(ell, receiver).to_vector();
    let mut rows = vec![];
    for s in sats {
        let d = s.to_vector() - r0;
        let range = d.norm();
        if range == 0.0 {
            return Err(GeoError::CoincidentPoints);
        }
        let up = frame.ecef_vector_to_local(&d).z;
        if up <= 0.0 {
            continue;
        }
        let u = d / range;
        rows.push([-u.x, -u.y, -u.z, 1.0]);
    }
    if rows.len() < 4 {
        return Err(GeoError::InsufficientPoints(rows.len()));
    }
    let mut ata = Matrix4::zeros();
    for r in &rows {
        for i in 0..4 {
            for j in 0..4 {
                ata[(i, j)] += r[i] * r[j];
            }
        }
    }
    let sv = ata.singular_values();
    if sv.min() <= 1e-12 * sv.max() {
        return Err(GeoError::SingularGeometry);
    }
    let q = ata.try_inverse().ok_or(GeoError::SingularGeometry)?;
    Ok(dop_from_cofactor(&q, &frame.rotation))
}


#[cfg(test)]
mod properties {
    use super::*;
    use crate::coords::GeodeticCoord;
    use nalgebra::Vector3;
    use proptest::prelude::*;

    /// Random overdetermined system (A, L, P) with r unknowns.
    fn system() -> impl Strategy<Value = (DMatrix<f64>, DVector<f64>, DVector<f64>)> {
        (1usize..5, 1usize..8).prop_flat_map(|(r, extra)| {
            let n = r + extra;
            (
                prop::collection::vec(-10.0f64..10.0, n * r).prop_map(move |v| DMatrix::from_row_slice(n, r, &v)),
                prop::collection::vec(-100.0f64..100.0, n).prop_map(DVector::from_vec),
                prop::collection::vec(0.1f64..10.0, n).prop_map(DVector::from_vec),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn renormalization_holds((a, l, p) in system()) {
            let sys = LinearSystem::from_observations(a, l, Weights::Diagonal(p)).unwrap();
            let Ok(res) = solve_linear(&sys) else { return Ok(()) };
            let (lhs, scale) = renormalization_residual(&sys, &res);
            prop_assert!(lhs <= 1e-8 * scale.max(f64::MIN_POSITIVE), "{lhs} vs {scale}");
        }

        #[test]
        fn covariance_symmetric_psd((a, l, p) in system()) {
            let sys = LinearSystem::from_observations(a, l, Weights::Diagonal(p)).unwrap();
            let Ok(res) = solve_linear(&sys) else { return Ok(()) };
            let Some(cov) = res.cov_x else { return Ok(()) };
            let scale = cov.amax().max(1e-300);
            prop_assert!((&cov - cov.transpose()).amax() <= 1e-12 * scale);
            let eig = cov.symmetric_eigen().eigenvalues;
            prop_assert!(eig.iter().all(|&e| e >= -1e-12 * scale));
        }

        #[test]
        fn gauss_newton_on_linear_matches_solve((a, l, p) in system()) {
            let sys = LinearSystem::from_observations(a.clone(), l.clone(), Weights::Diagonal(p.clone())).unwrap();
            let Ok(lin) = solve_linear(&sys) else { return Ok(()) };
            let am = a.clone();
            let model = FnModel { f: move |x: &DVector<f64>| &am * x, j: move |_: &DVector<f64>| a.clone() };
            let prob = NonlinearProblem { model: &model, l, p: Weights::Diagonal(p) };
            let out = gauss_newton(&prob, &DVector::zeros(lin.x_bar.len()), GaussNewtonOptions::default()).unwrap();
            prop_assert_eq!(out.iterations, 1);
            prop_assert!((&out.result.x_bar - &lin.x_bar).norm() <= 1e-12 * lin.x_bar.norm(), "{} vs {}", out.result.x_bar, lin.x_bar);
            for w in out.costs.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12);
            }
        }

        #[test]
        fn dop_identities(
            phi in -1.4f64..1.4, lam in -3.1f64..3.1,
            dirs in prop::collection::vec((0.0f64..std::f64::consts::TAU, 0.1f64..1.5), 4..12),
        ) {
            let ell = crate::ellipsoid::wgs84();
            let rx = GeodeticCoord::new(phi, lam, 0.0);
            let frame = local_frame(&rx);
            let r0 = geodetic_to_ecef(&ell, &rx).to_vector();
            let sats: Vec<EcefCoord> = dirs
                .iter()
                .map(|&(az, el): &(f64, f64)| {
                    let enu = Vector3::new(el.cos() * az.sin(), el.cos() * az.cos(), el.sin()) * 2.2e7;
                    EcefCoord::from_vector(&(r0 + frame.local_vector_to_ecef(&enu)))
                })
                .collect();
            let Ok(d) = dop(&ell, &sats, &rx) else { return Ok(()) };
            let s = d.gdop.powi(2).max(1.0);
            prop_assert!((d.gdop.powi(2) - d.pdop.powi(2) - d.tdop.powi(2)).abs() < 1e-10 * s);
            prop_assert!((d.hdop.powi(2) + d.vdop.powi(2) - d.pdop.powi(2)).abs() < 1e-10 * s);
        }
    }
}
