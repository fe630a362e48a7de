//! Standard-form linear programs `min cᵀx s.t. Ax = b, x ≥ 0`, primal-dual
//! points, optimality measures and instance generators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, dot, norm, Lu, Matrix};

/// Relative pivot threshold of the full-row-rank check.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("constraint matrix has rank {rank} < {rows} rows")]
    RankDeficient { rank: usize, rows: usize },
    #[error("more constraints ({m}) than variables ({n})")]
    TooManyRows { m: usize, n: usize },
    #[error("point is not strictly interior (x > 0, s > 0 required)")]
    NotInterior,
    #[error("invalid instance JSON: {0}")]
    Json(String),
}

/// Standard-form LP data.
#[derive(Debug, Clone, PartialEq)]
pub struct LpInstance {
    name: String,
    a: Matrix,
    b: Vec<f64>,
    c: Vec<f64>,
    rank: usize,
}

impl LpInstance {
    /// Checked constructor: `m ≤ n` and `A` must have full row rank.
    pub fn new(
        name: impl Into<String>,
        a: Matrix,
        b: Vec<f64>,
        c: Vec<f64>,
    ) -> Result<Self, LpError> {
        let inst = Self::new_unchecked(name, a, b, c)?;
        if inst.m() > inst.n() {
            return Err(LpError::TooManyRows {
                m: inst.m(),
                n: inst.n(),
            });
        }
        if inst.rank < inst.m() {
            return Err(LpError::RankDeficient {
                rank: inst.rank,
                rows: inst.m(),
            });
        }
        Ok(inst)
    }

    /// Skips the rank requirement (dimensions are still checked). The simplex
    /// solver tolerates redundant and contradictory rows; the interior-point
    /// solvers do not.
    pub fn new_unchecked(
        name: impl Into<String>,
        a: Matrix,
        b: Vec<f64>,
        c: Vec<f64>,
    ) -> Result<Self, LpError> {
        if b.len() != a.rows() {
            return Err(LpError::DimensionMismatch(format!(
                "b has {} entries, A has {} rows",
                b.len(),
                a.rows()
            )));
        }
        if c.len() != a.cols() {
            return Err(LpError::DimensionMismatch(format!(
                "c has {} entries, A has {} columns",
                c.len(),
                a.cols()
            )));
        }
        let rank = linalg::rank(&a, RANK_TOL);
        Ok(Self {
            name: name.into(),
            a,
            b,
            c,
            rank,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn a(&self) -> &Matrix {
        &self.a
    }
    pub fn b(&self) -> &[f64] {
        &self.b
    }
    pub fn c(&self) -> &[f64] {
        &self.c
    }
    pub fn m(&self) -> usize {
        self.a.rows()
    }
    pub fn n(&self) -> usize {
        self.a.cols()
    }
    pub fn rank(&self) -> usize {
        self.rank
    }
    pub fn has_full_row_rank(&self) -> bool {
        self.rank == self.m()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        dot(&self.c, x)
    }

    /// Scale used by relative tolerances: `1 + ‖b‖ + ‖c‖`.
    pub fn data_scale(&self) -> f64 {
        1.0 + norm(&self.b) + norm(&self.c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&LpJson::from(self)).expect("finite LP serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LpError> {
        let j: LpJson = serde_json::from_str(text).map_err(|e| LpError::Json(e.to_string()))?;
        if j.a.len() != j.m * j.n {
            return Err(LpError::Json(format!(
                "A has {} entries, expected m*n = {}",
                j.a.len(),
                j.m * j.n
            )));
        }
        Self::new_unchecked(j.name, Matrix::from_vec(j.m, j.n, j.a), j.b, j.c)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LpJson {
    name: String,
    m: usize,
    n: usize,
    #[serde(rename = "A")]
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl From<&LpInstance> for LpJson {
    fn from(l: &LpInstance) -> Self {
        Self {
            name: l.name.clone(),
            m: l.m(),
            n: l.n(),
            a: l.a.as_slice().to_vec(),
            b: l.b.clone(),
            c: l.c.clone(),
        }
    }
}

/// Primal-dual triple `(x, λ, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualPoint {
    pub x: Vec<f64>,
    pub lambda: Vec<f64>,
    pub s: Vec<f64>,
}

impl PrimalDualPoint {
    pub fn new(x: Vec<f64>, lambda: Vec<f64>, s: Vec<f64>) -> Self {
        Self { x, lambda, s }
    }

    /// Requires `x > 0` and `s > 0` componentwise.
    pub fn strictly_interior(x: Vec<f64>, lambda: Vec<f64>, s: Vec<f64>) -> Result<Self, LpError> {
        if x.len() != s.len() {
            return Err(LpError::DimensionMismatch("x and s lengths differ".into()));
        }
        if x.iter().chain(&s).any(|&v| !(v > 0.0)) {
            return Err(LpError::NotInterior);
        }
        Ok(Self { x, lambda, s })
    }

    /// Duality measure `μ = xᵀs / n`.
    pub fn mu(&self) -> f64 {
        dot(&self.x, &self.s) / self.x.len() as f64
    }

    pub fn is_interior(&self) -> bool {
        self.x.iter().chain(&self.s).all(|&v| v > 0.0)
    }

    fn check_dims(&self, inst: &LpInstance) -> Result<(), LpError> {
        if self.x.len() != inst.n() || self.s.len() != inst.n() || self.lambda.len() != inst.m() {
            return Err(LpError::DimensionMismatch(format!(
                "point (x:{}, λ:{}, s:{}) vs instance (m={}, n={})",
                self.x.len(),
                self.lambda.len(),
                self.s.len(),
                inst.m(),
                inst.n()
            )));
        }
        Ok(())
    }
}

/// Optimality measures of a primal-dual point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpResiduals {
    /// `‖Ax − b‖`
    pub primal_res: f64,
    /// `‖Aᵀλ + s − c‖`
    pub dual_res: f64,
    pub mu: f64,
    pub min_complementarity: f64,
    /// `cᵀx − bᵀλ`
    pub gap: f64,
}

/// Primal residual vector `b − Ax`.
pub fn primal_residual(inst: &LpInstance, x: &[f64]) -> Vec<f64> {
    let ax = inst.a.mul_vec(x);
    inst.b.iter().zip(&ax).map(|(b, v)| b - v).collect()
}

/// Dual residual vector `c − Aᵀλ − s`.
pub fn dual_residual(inst: &LpInstance, lambda: &[f64], s: &[f64]) -> Vec<f64> {
    let atl = inst.a.mul_t_vec(lambda);
    inst.c
        .iter()
        .zip(&atl)
        .zip(s)
        .map(|((c, v), si)| c - v - si)
        .collect()
}

pub fn residuals(inst: &LpInstance, pt: &PrimalDualPoint) -> Result<LpResiduals, LpError> {
    pt.check_dims(inst)?;
    let min_complementarity =
        pt.x.iter()
            .zip(&pt.s)
            .map(|(x, s)| x * s)
            .fold(f64::INFINITY, f64::min);
    Ok(LpResiduals {
        primal_res: norm(&primal_residual(inst, &pt.x)),
        dual_res: norm(&dual_residual(inst, &pt.lambda, &pt.s)),
        mu: pt.mu(),
        min_complementarity,
        gap: dot(&inst.c, &pt.x) - dot(&inst.b, &pt.lambda),
    })
}

/// Membership in the wide neighborhood `N₋∞(γ)` with feasibility measured to
/// `feas_tol`.
pub fn in_neighborhood(pt: &PrimalDualPoint, inst: &LpInstance, gamma: f64, feas_tol: f64) -> bool {
    let Ok(r) = residuals(inst, pt) else {
        return false;
    };
    r.primal_res <= feas_tol
        && r.dual_res <= feas_tol
        && pt.is_interior()
        && centrality_ok(&pt.x, &pt.s, gamma)
}

/// `x_i s_i ≥ γ·xᵀs/n` for every `i`.
pub fn centrality_ok(x: &[f64], s: &[f64], gamma: f64) -> bool {
    let n = x.len() as f64;
    let bound = gamma * dot(x, s) / n;
    x.iter().zip(s).all(|(a, b)| a * b >= bound)
}

/// Random LP with a known point on the central path.
///
/// `A` has standard normal entries, `x⁰, s⁰` start uniform on `[0.5, 1.5]`
/// and are rescaled pairwise so every `x_i s_i` equals their mean, `λ⁰` is
/// standard normal, and `b = Ax⁰`, `c = Aᵀλ⁰ + s⁰`.
pub fn gen_random_feasible(
    m: usize,
    n: usize,
    seed: u64,
) -> Result<(LpInstance, PrimalDualPoint), LpError> {
    assert!(m >= 1 && m < n, "gen_random_feasible needs 1 <= m < n");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    const MAX_TRIES: usize = 8;
    for _ in 0..MAX_TRIES {
        let a = Matrix::from_vec(
            m,
            n,
            (0..m * n)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect(),
        );
        let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
        let mut s: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
        let lambda: Vec<f64> = (0..m).map(|_| StandardNormal.sample(&mut rng)).collect();
        let target = dot(&x, &s) / n as f64;
        for (xi, si) in x.iter_mut().zip(s.iter_mut()) {
            let r = (target / (*xi * *si)).sqrt();
            *xi *= r;
            *si *= r;
        }
        let b = a.mul_vec(&x);
        let atl = a.mul_t_vec(&lambda);
        let c: Vec<f64> = atl.iter().zip(&s).map(|(v, si)| v + si).collect();
        match LpInstance::new(format!("random:m={m},n={n},seed={seed}"), a, b, c) {
            Ok(inst) => return Ok((inst, PrimalDualPoint::new(x, lambda, s))),
            Err(LpError::RankDeficient { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(LpError::RankDeficient { rank: 0, rows: m })
}

/// Standard-form Klee-Minty cube of dimension `n`:
///
/// ```text
/// max Σ_j 10^(n−j) x_j
/// s.t. 2 Σ_{i<j} 10^(j−i) x_i + x_j ≤ 100^(j−1),  j = 1..n,   x ≥ 0
/// ```
///
/// posed as a minimization of `−Σ_j 10^(n−j) x_j` with one slack per row
/// (columns `0..n` are the cube coordinates, `n..2n` the slacks). The optimal
/// vertex is `x = (0, …, 0, 100^(n−1))` with value `−100^(n−1)`.
pub fn gen_klee_minty(n: usize) -> LpInstance {
    assert!(n >= 1);
    let mut a = Matrix::zeros(n, 2 * n);
    let mut b = vec![0.0; n];
    let mut c = vec![0.0; 2 * n];
    for j in 0..n {
        for i in 0..j {
            a[(j, i)] = 2.0 * 10f64.powi((j - i) as i32);
        }
        a[(j, j)] = 1.0;
        a[(j, n + j)] = 1.0;
        b[j] = 100f64.powi(j as i32);
        c[j] = -(10f64.powi((n - 1 - j) as i32));
    }
    LpInstance::new(format!("klee-minty:n={n}"), a, b, c).expect("Klee-Minty has full row rank")
}

/// Optimal value of [`gen_klee_minty`]`(n)`.
pub fn klee_minty_optimum(n: usize) -> f64 {
    -(100f64.powi(n as i32 - 1))
}

/// Gaussian perturbation of `A` and `b` with standard deviation
/// `σ·max_i ‖[A_{·,i}; b_i]‖`, where `b_i` is taken as 0 for `i > m`.
/// `c` is left unchanged; `σ = 0` returns an identical instance.
pub fn perturb_gaussian(inst: &LpInstance, sigma: f64, seed: u64) -> LpInstance {
    assert!(sigma >= 0.0);
    if sigma == 0.0 {
        return inst.clone();
    }
    let std = sigma * perturbation_scale(inst);
    let normal = Normal::new(0.0, std).expect("finite std");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data: Vec<f64> = inst
        .a
        .as_slice()
        .iter()
        .map(|v| v + normal.sample(&mut rng))
        .collect();
    let b: Vec<f64> = inst.b.iter().map(|v| v + normal.sample(&mut rng)).collect();
    LpInstance::new_unchecked(
        format!("{}+gauss(σ={sigma},seed={seed})", inst.name),
        Matrix::from_vec(inst.m(), inst.n(), data),
        b,
        inst.c.clone(),
    )
    .expect("dimensions preserved")
}

/// `max_i ‖[A_{·,i}; b_i]‖` over the columns of `A`.
pub fn perturbation_scale(inst: &LpInstance) -> f64 {
    (0..inst.n())
        .map(|i| {
            let col = inst.a.column(i);
            let bi = inst.b.get(i).copied().unwrap_or(0.0);
            (dot(&col, &col) + bi * bi).sqrt()
        })
        .fold(0.0, f64::max)
}

/// Basic solution for the given basic column set.
#[derive(Debug, Clone, PartialEq)]
pub enum VertexResult {
    Vertex(Vec<f64>),
    Infeasible,
}

/// Solves `B x_B = b`, `x_N = 0`. `Infeasible` when `B` is singular or some
/// basic component is negative beyond its componentwise rounding bound
/// `c·ε·(|B⁻¹|(|B||x_B| + |b|))_i`, so that badly scaled bases are judged
/// component by component rather than against `‖x_B‖`.
pub fn vertex_from_basis(inst: &LpInstance, basic: &[usize]) -> VertexResult {
    let m = inst.m();
    assert_eq!(basic.len(), m, "basis size must equal m");
    let bm = inst.a.select_columns(basic);
    let Ok(lu) = Lu::factor(&bm) else {
        return VertexResult::Infeasible;
    };
    let xb = lu.solve(&inst.b);
    let w: Vec<f64> = (0..m)
        .map(|i| {
            bm.row(i)
                .iter()
                .zip(&xb)
                .map(|(a, x)| (a * x).abs())
                .sum::<f64>()
                + inst.b[i].abs()
        })
        .collect();
    let mut bound = vec![0.0; m];
    let mut e = vec![0.0; m];
    for j in 0..m {
        e[j] = 1.0;
        let col = lu.solve(&e);
        e[j] = 0.0;
        for i in 0..m {
            bound[i] += col[i].abs() * w[j];
        }
    }
    let c = 64.0 * m as f64 * f64::EPSILON;
    if xb.iter().zip(&bound).any(|(&v, &bd)| v < -c * bd) {
        return VertexResult::Infeasible;
    }
    let mut x = vec![0.0; inst.n()];
    for (&j, &v) in basic.iter().zip(&xb) {
        x[j] = v.max(0.0);
    }
    VertexResult::Vertex(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_row(n: usize) -> LpInstance {
        LpInstance::new(
            "unit",
            Matrix::from_rows(&[vec![1.0; n]]),
            vec![1.0],
            vec![1.0; n],
        )
        .unwrap()
    }

    #[test]
    fn rank_checked_at_construction() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0]]);
        let err = LpInstance::new("r", a.clone(), vec![1.0, 2.0], vec![0.0; 3]).unwrap_err();
        assert!(matches!(err, LpError::RankDeficient { rank: 1, rows: 2 }));
        assert!(LpInstance::new_unchecked("r", a, vec![1.0, 2.0], vec![0.0; 3]).is_ok());
        let err =
            LpInstance::new("d", Matrix::zeros(1, 2), vec![1.0, 2.0], vec![0.0; 2]).unwrap_err();
        assert!(matches!(err, LpError::DimensionMismatch(_)));
    }

    #[test]
    fn mu_from_products() {
        // A = [1 1 1], b = 6, λ = 0, c = s gives zero residuals.
        let inst = LpInstance::new(
            "mu",
            Matrix::from_rows(&[vec![1.0; 3]]),
            vec![6.0],
            vec![3.0, 2.0, 1.0],
        )
        .unwrap();
        let pt = PrimalDualPoint::new(vec![1.0, 2.0, 3.0], vec![0.0], vec![3.0, 2.0, 1.0]);
        let r = residuals(&inst, &pt).unwrap();
        assert_eq!(r.primal_res, 0.0);
        assert_eq!(r.dual_res, 0.0);
        assert_eq!(r.mu, 10.0 / 3.0);
        assert_eq!(r.min_complementarity, 3.0);
        assert_eq!(r.gap, 10.0);
    }

    #[test]
    fn optimal_triple_has_zero_measures() {
        // min x1 + 2 x2 s.t. x1 + x2 = 1: x* = (1,0), λ* = 1, s* = (0,1).
        let inst = LpInstance::new(
            "opt",
            Matrix::from_rows(&[vec![1.0, 1.0]]),
            vec![1.0],
            vec![1.0, 2.0],
        )
        .unwrap();
        let pt = PrimalDualPoint::new(vec![1.0, 0.0], vec![1.0], vec![0.0, 1.0]);
        let r = residuals(&inst, &pt).unwrap();
        assert_eq!(
            (r.primal_res, r.dual_res, r.mu, r.gap, r.min_complementarity),
            (0.0, 0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn residuals_reject_bad_dims() {
        let inst = unit_row(2);
        let pt = PrimalDualPoint::new(vec![1.0], vec![0.0], vec![1.0]);
        assert!(matches!(
            residuals(&inst, &pt),
            Err(LpError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn neighborhood_examples() {
        // A = [1 0], b = 1, so x1 = 1 is forced; c = s + Aᵀλ.
        let inst = LpInstance::new(
            "nb",
            Matrix::from_rows(&[vec![1.0, 0.0]]),
            vec![1.0],
            vec![1.0, 0.4],
        )
        .unwrap();
        let pt = PrimalDualPoint::new(vec![1.0, 1.0], vec![0.0], vec![1.0, 0.4]);
        // xᵀs/n = 0.7: the bound γ·0.7 is 0.35 at γ = 0.5 (inside) and 0.42 at γ = 0.6 (outside)
        assert!(in_neighborhood(&pt, &inst, 0.5, 1e-12));
        assert!(!in_neighborhood(&pt, &inst, 0.6, 1e-12));
        let central = PrimalDualPoint::new(vec![1.0, 2.0], vec![0.0], vec![1.0, 0.5]);
        let inst2 = LpInstance::new(
            "c",
            Matrix::from_rows(&[vec![1.0, 0.0]]),
            vec![1.0],
            vec![1.0, 0.5],
        )
        .unwrap();
        for g in [0.001, 0.5, 0.999] {
            assert!(in_neighborhood(&central, &inst2, g, 1e-12));
        }
        let boundary = PrimalDualPoint::new(vec![1.0, 0.0], vec![0.0], vec![1.0, 0.5]);
        assert!(!in_neighborhood(&boundary, &inst2, 0.1, 1e-12));
    }

    #[test]
    fn random_feasible_is_central() {
        let (inst, pt) = gen_random_feasible(1, 2, 0).unwrap();
        let r = residuals(&inst, &pt).unwrap();
        assert!(r.primal_res <= 1e-12 && r.dual_res <= 1e-12);
        assert!(in_neighborhood(&pt, &inst, 0.999, 1e-12));

        let (i1, _) = gen_random_feasible(10, 30, 1).unwrap();
        let (i2, _) = gen_random_feasible(10, 30, 2).unwrap();
        assert_ne!(i1.a(), i2.a());
        assert!(i1.has_full_row_rank() && i2.has_full_row_rank());
        let (again, _) = gen_random_feasible(10, 30, 1).unwrap();
        assert_eq!(i1, again);
    }

    #[test]
    fn klee_minty_shape() {
        let km = gen_klee_minty(3);
        assert_eq!((km.m(), km.n()), (3, 6));
        assert_eq!(km.b(), &[1.0, 100.0, 10_000.0]);
        assert_eq!(km.a().row(2), &[200.0, 20.0, 1.0, 0.0, 0.0, 1.0]);
        assert_eq!(km.c()[..3], [-100.0, -10.0, -1.0]);
        let mut x = vec![0.0; 6];
        x[2] = 10_000.0;
        x[3] = 1.0;
        x[4] = 100.0;
        assert_eq!(km.objective(&x), klee_minty_optimum(3));
        assert!(primal_residual(&km, &x).iter().all(|&r| r == 0.0));
    }

    #[test]
    fn perturbation_identity_and_determinism() {
        let (inst, _) = gen_random_feasible(3, 7, 5).unwrap();
        assert_eq!(perturb_gaussian(&inst, 0.0, 1), inst);
        let p1 = perturb_gaussian(&inst, 0.1, 11);
        let p2 = perturb_gaussian(&inst, 0.1, 11);
        assert_eq!(p1.a(), p2.a());
        assert_eq!(p1.b(), p2.b());
        assert_eq!(p1.c(), inst.c());
        assert_ne!(p1.a(), inst.a());
    }

    #[test]
    fn perturbation_std_monte_carlo() {
        let inst = LpInstance::new(
            "mc",
            Matrix::from_rows(&[vec![1.0, 2.0, 0.0], vec![0.0, 1.0, 3.0]]),
            vec![1.0, 1.0],
            vec![0.0; 3],
        )
        .unwrap();
        // columns: [1,0;b1=1] → √2, [2,1;b2=1] → √6, [0,3;0] → 3
        let scale = perturbation_scale(&inst);
        assert!((scale - 3.0).abs() < 1e-15);
        let samples: Vec<f64> = (0..10_000)
            .map(|seed| perturb_gaussian(&inst, 0.1, seed).a()[(0, 0)] - 1.0)
            .collect();
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let var =
            samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples.len() - 1) as f64;
        let expected = 0.1 * scale;
        assert!(
            (var.sqrt() - expected).abs() <= 0.05 * expected,
            "std {} vs {}",
            var.sqrt(),
            expected
        );
    }

    #[test]
    fn vertex_examples() {
        let inst = unit_row(2);
        assert_eq!(
            vertex_from_basis(&inst, &[0]),
            VertexResult::Vertex(vec![1.0, 0.0])
        );
        assert_eq!(
            vertex_from_basis(&inst, &[1]),
            VertexResult::Vertex(vec![0.0, 1.0])
        );
        let sing = LpInstance::new(
            "s",
            Matrix::from_rows(&[vec![1.0, 0.0]]),
            vec![1.0],
            vec![0.0; 2],
        )
        .unwrap();
        assert_eq!(vertex_from_basis(&sing, &[1]), VertexResult::Infeasible);
        let neg = LpInstance::new(
            "n",
            Matrix::from_rows(&[vec![1.0, -1.0]]),
            vec![1.0],
            vec![0.0; 2],
        )
        .unwrap();
        assert_eq!(vertex_from_basis(&neg, &[1]), VertexResult::Infeasible);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let (inst, _) = gen_random_feasible(4, 9, 3).unwrap();
        let text = inst.to_json();
        let back = LpInstance::from_json(&text).unwrap();
        assert_eq!(back, inst);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["m"], 4);
        assert_eq!(v["A"].as_array().unwrap().len(), 36);
        assert!(
            LpInstance::from_json(r#"{"name":"x","m":1,"n":2,"A":[1],"b":[1],"c":[1,1]}"#).is_err()
        );
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn weak_duality_on_generated_points(seed in 0u64..5000, m in 1usize..6, extra in 1usize..6) {
                let (inst, pt) = gen_random_feasible(m, m + extra, seed).unwrap();
                let r = residuals(&inst, &pt).unwrap();
                let cx = inst.objective(&pt.x);
                prop_assert!(r.gap >= -1e-10 * (1.0 + cx.abs()));
                prop_assert!((r.gap - dot(&pt.x, &pt.s)).abs() <= 1e-10 * (1.0 + cx.abs() + r.gap.abs()) * 10.0);
                prop_assert!(in_neighborhood(&pt, &inst, 0.999, 1e-10));
            }

            #[test]
            fn vertices_solve_equalities(seed in 0u64..5000) {
                let (inst, _) = gen_random_feasible(2, 5, seed).unwrap();
                for i in 0..5 {
                    for j in (i + 1)..5 {
                        if let VertexResult::Vertex(x) = vertex_from_basis(&inst, &[i, j]) {
                            let r = norm(&primal_residual(&inst, &x));
                            prop_assert!(r <= 1e-10 * norm(inst.b()).max(1.0));
                            prop_assert!(x.iter().all(|&v| v >= 0.0));
                        }
                    }
                }
            }
        }
    }
}
