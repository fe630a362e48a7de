//! Revised simplex method with Dantzig and Bland pivot rules.
//!
//! The basis matrix is refactorized (dense LU) at every pivot. Phase 1
//! minimizes the sum of artificial variables, starting from any unit
//! columns already present (slacks) so instances like Klee-Minty start at
//! the origin without Phase-1 work.

use std::io::{self, Write};

use crate::linalg::{dot, norm_inf, Lu, Matrix};
use crate::lp::LpInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotRule {
    /// Most negative reduced cost.
    Dantzig,
    /// Smallest eligible index, for both entering and leaving choices.
    Bland,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplexStatus {
    Optimal,
    Unbounded,
    Infeasible,
    PivotLimit,
}

/// Basic/nonbasic column partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub basic: Vec<usize>,
    pub nonbasic: Vec<usize>,
}

impl Basis {
    fn from_basic(basic: &[usize], n: usize) -> Self {
        let nonbasic = (0..n).filter(|j| !basic.contains(j)).collect();
        Self {
            basic: basic.to_vec(),
            nonbasic,
        }
    }
}

/// One Phase-2 pivot.
#[derive(Debug, Clone, PartialEq)]
pub struct PivotRecord {
    pub pivot_index: usize,
    /// Objective after the pivot.
    pub objective: f64,
    pub entering: usize,
    pub leaving: usize,
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub status: SimplexStatus,
    /// Current vertex (optimal when `status == Optimal`).
    pub x: Vec<f64>,
    /// Dual multipliers `B⁻ᵀc_B` of the final basis.
    pub lambda: Vec<f64>,
    pub objective: f64,
    pub basis: Basis,
    /// Basis at the start of Phase 2.
    pub start_basis: Basis,
    /// Objective at the start of Phase 2 (`NaN` if Phase 2 never ran).
    pub start_objective: f64,
    /// Phase-2 pivots.
    pub pivots: usize,
    pub phase1_pivots: usize,
    pub degenerate_pivots: usize,
    pub trace: Vec<PivotRecord>,
}

impl SimplexResult {
    pub fn total_pivots(&self) -> usize {
        self.pivots + self.phase1_pivots
    }

    /// CSV with columns `pivot_index,objective,entering,leaving,degenerate_flag`.
    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "pivot_index,objective,entering,leaving,degenerate_flag"
        )?;
        for r in &self.trace {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.pivot_index,
                r.objective,
                r.entering,
                r.leaving,
                u8::from(r.degenerate)
            )?;
        }
        Ok(())
    }
}

struct Work {
    a: Matrix,
    b: Vec<f64>,
    n_orig: usize,
    basic: Vec<usize>,
    rule: PivotRule,
}

enum Outcome {
    Optimal,
    Unbounded,
    Limit,
}

struct Factored {
    lu: Lu,
    xb: Vec<f64>,
    y: Vec<f64>,
}

impl Work {
    fn n_total(&self) -> usize {
        self.a.cols()
    }

    fn factor(&self, cost: &[f64]) -> Factored {
        let bm = self.a.select_columns(&self.basic);
        let lu = Lu::factor(&bm).expect("simplex basis stays nonsingular");
        let xb = lu.solve(&self.b);
        let cb: Vec<f64> = self.basic.iter().map(|&j| cost[j]).collect();
        let y = lu.solve_transpose(&cb);
        Factored { lu, xb, y }
    }

    fn objective(&self, cost: &[f64], xb: &[f64]) -> f64 {
        self.basic.iter().zip(xb).map(|(&j, v)| cost[j] * v).sum()
    }

    /// Runs pivots until optimal/unbounded/limit. `eligible(j)` filters
    /// entering candidates.
    fn run(
        &mut self,
        cost: &[f64],
        eligible: &dyn Fn(usize) -> bool,
        budget: &mut usize,
        mut log: Option<&mut Vec<PivotRecord>>,
    ) -> Outcome {
        loop {
            let f = self.factor(cost);
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..self.n_total() {
                if self.basic.contains(&j) || !eligible(j) {
                    continue;
                }
                let col = self.a.column(j);
                let d = cost[j] - dot(&f.y, &col);
                // Relative to the size of the terms that cancel in `d`, so a
                // reduced cost of −1 still counts next to costs of 10⁹.
                let scale: f64 = cost[j].abs()
                    + f.y
                        .iter()
                        .zip(&col)
                        .map(|(y, a)| (y * a).abs())
                        .sum::<f64>();
                if d >= -1e-11 * scale.max(1e-300) {
                    continue;
                }
                match self.rule {
                    PivotRule::Bland => {
                        entering = Some((j, d));
                        break;
                    }
                    PivotRule::Dantzig => {
                        if entering.is_none_or(|(_, best)| d < best) {
                            entering = Some((j, d));
                        }
                    }
                }
            }
            let Some((q, _)) = entering else {
                return Outcome::Optimal;
            };
            if *budget == 0 {
                return Outcome::Limit;
            }
            let w = f.lu.solve(&self.a.column(q));
            let wtol = 1e-11 * norm_inf(&w).max(1.0);
            let mut leave: Option<(usize, f64)> = None;
            for (r, (&wr, &xr)) in w.iter().zip(&f.xb).enumerate() {
                if wr <= wtol {
                    continue;
                }
                let ratio = xr.max(0.0) / wr;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((br, best)) => {
                        let tie = 1e-12 * best.abs().max(1e-300);
                        if ratio < best - tie
                            || ((ratio - best).abs() <= tie && self.basic[r] < self.basic[br])
                        {
                            Some((r, ratio))
                        } else {
                            Some((br, best))
                        }
                    }
                };
            }
            let Some((r, theta)) = leave else {
                return Outcome::Unbounded;
            };
            let leaving = self.basic[r];
            self.basic[r] = q;
            *budget -= 1;
            if let Some(log) = log.as_deref_mut() {
                let f2 = self.factor(cost);
                let (before, after) = (self.objective(cost, &f.xb), self.objective(cost, &f2.xb));
                let degenerate =
                    theta == 0.0 || (after - before).abs() <= 1e-12 * (1.0 + before.abs());
                log.push(PivotRecord {
                    pivot_index: log.len() + 1,
                    objective: after,
                    entering: q,
                    leaving,
                    degenerate,
                });
            }
        }
    }

    fn point(&self, xb: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n_orig];
        for (&j, &v) in self.basic.iter().zip(xb) {
            if j < self.n_orig {
                x[j] = v.max(0.0);
            }
        }
        x
    }
}

/// Two-phase revised simplex. `pivot_limit` caps Phase 1 and Phase 2 pivots
/// together.
pub fn solve_simplex(inst: &LpInstance, rule: PivotRule, pivot_limit: usize) -> SimplexResult {
    let (m, n) = (inst.m(), inst.n());
    let mut a = inst.a().clone();
    let mut b = inst.b().to_vec();
    for i in 0..m {
        if b[i] < 0.0 {
            b[i] = -b[i];
            a.row_mut(i).iter_mut().for_each(|v| *v = -*v);
        }
    }

    // Unit columns usable as initial basics, zero-cost ones (slacks) first;
    // artificials for the rest.
    let mut basic = vec![usize::MAX; m];
    for zero_cost_pass in [true, false] {
        for j in 0..n {
            if (inst.c()[j] == 0.0) != zero_cost_pass {
                continue;
            }
            let col = a.column(j);
            let nz: Vec<usize> = (0..m).filter(|&i| col[i] != 0.0).collect();
            if let [i] = nz[..] {
                if col[i] == 1.0 && basic[i] == usize::MAX {
                    basic[i] = j;
                }
            }
        }
    }
    let missing: Vec<usize> = (0..m).filter(|&i| basic[i] == usize::MAX).collect();
    let n_total = n + missing.len();
    let mut full = Matrix::zeros(m, n_total);
    for i in 0..m {
        full.row_mut(i)[..n].copy_from_slice(a.row(i));
    }
    for (k, &i) in missing.iter().enumerate() {
        full[(i, n + k)] = 1.0;
        basic[i] = n + k;
    }
    let mut work = Work {
        a: full,
        b,
        n_orig: n,
        basic,
        rule,
    };
    let mut budget = pivot_limit;
    let is_art = |j: usize| j >= n;

    // Phase 1
    let mut phase1_pivots = 0;
    if !missing.is_empty() {
        let cost1: Vec<f64> = (0..n_total)
            .map(|j| if j >= n { 1.0 } else { 0.0 })
            .collect();
        let before = budget;
        let outcome = work.run(&cost1, &|_| true, &mut budget, None);
        phase1_pivots = before - budget;
        let f = work.factor(&cost1);
        let infeas = work.objective(&cost1, &f.xb);
        let btol = 1e-9 * (1.0 + norm_inf(&work.b));
        if matches!(outcome, Outcome::Limit) {
            return finish(
                &work,
                inst,
                SimplexStatus::PivotLimit,
                phase1_pivots,
                Vec::new(),
                None,
            );
        }
        if infeas > btol {
            return finish(
                &work,
                inst,
                SimplexStatus::Infeasible,
                phase1_pivots,
                Vec::new(),
                None,
            );
        }
        // Drive zero-level artificials out where a real column can replace them.
        for r in 0..m {
            if !is_art(work.basic[r]) {
                continue;
            }
            let f = work.factor(&cost1);
            let replacement = (0..n).filter(|j| !work.basic.contains(j)).find(|&j| {
                let w = f.lu.solve(&work.a.column(j));
                w[r].abs() > 1e-9
            });
            if let Some(j) = replacement {
                work.basic[r] = j;
                phase1_pivots += 1;
            }
        }
    }

    // Phase 2
    let start_basis = Basis::from_basic(&work.basic, n_total);
    let mut cost2 = vec![0.0; n_total];
    cost2[..n].copy_from_slice(inst.c());
    let start_objective = work.objective(&cost2, &work.factor(&cost2).xb);
    let mut log = Vec::new();
    let outcome = work.run(&cost2, &|j| !is_art(j), &mut budget, Some(&mut log));
    let status = match outcome {
        Outcome::Optimal => SimplexStatus::Optimal,
        Outcome::Unbounded => SimplexStatus::Unbounded,
        Outcome::Limit => SimplexStatus::PivotLimit,
    };
    finish(
        &work,
        inst,
        status,
        phase1_pivots,
        log,
        Some((start_basis, start_objective)),
    )
}

fn finish(
    work: &Work,
    inst: &LpInstance,
    status: SimplexStatus,
    phase1_pivots: usize,
    trace: Vec<PivotRecord>,
    start: Option<(Basis, f64)>,
) -> SimplexResult {
    let n_total = work.n_total();
    let mut cost = vec![0.0; n_total];
    cost[..inst.n()].copy_from_slice(inst.c());
    let f = work.factor(&cost);
    let x = work.point(&f.xb);
    let objective = inst.objective(&x);
    let basis = Basis::from_basic(&work.basic, n_total);
    let degenerate_pivots = trace.iter().filter(|r| r.degenerate).count();
    SimplexResult {
        status,
        x,
        lambda: f.y,
        objective,
        start_objective: start.as_ref().map_or(f64::NAN, |s| s.1),
        start_basis: start.map_or_else(|| basis.clone(), |s| s.0),
        basis,
        pivots: trace.len(),
        phase1_pivots,
        degenerate_pivots,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{gen_klee_minty, klee_minty_optimum, primal_residual};

    fn lp(rows: &[Vec<f64>], b: &[f64], c: &[f64]) -> LpInstance {
        LpInstance::new_unchecked("t", Matrix::from_rows(rows), b.to_vec(), c.to_vec()).unwrap()
    }

    #[test]
    fn small_lp_two_pivots_at_most() {
        let inst = lp(&[vec![1.0, 1.0, 1.0]], &[1.0], &[-1.0, -1.0, 0.0]);
        let r = solve_simplex(&inst, PivotRule::Dantzig, 100);
        assert_eq!(r.status, SimplexStatus::Optimal);
        assert!((r.objective + 1.0).abs() < 1e-12);
        assert!(r.total_pivots() <= 2);
    }

    #[test]
    fn contradiction_row_is_infeasible() {
        let inst = lp(&[vec![1.0, 1.0], vec![0.0, 0.0]], &[1.0, 1.0], &[1.0, 1.0]);
        let r = solve_simplex(&inst, PivotRule::Bland, 100);
        assert_eq!(r.status, SimplexStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        // min −x1 s.t. x1 − x2 = 1
        let inst = lp(&[vec![1.0, -1.0]], &[1.0], &[-1.0, 0.0]);
        assert_eq!(
            solve_simplex(&inst, PivotRule::Dantzig, 100).status,
            SimplexStatus::Unbounded
        );
    }

    #[test]
    fn redundant_row_is_tolerated() {
        let inst = lp(
            &[
                vec![1.0, 1.0, 0.0],
                vec![2.0, 2.0, 0.0],
                vec![0.0, 1.0, 1.0],
            ],
            &[1.0, 2.0, 1.0],
            &[1.0, 0.0, 1.0],
        );
        let r = solve_simplex(&inst, PivotRule::Bland, 100);
        assert_eq!(r.status, SimplexStatus::Optimal);
        // x2 = 1 gives x1 = 0, x3 = 0, objective 0
        assert!(r.objective.abs() < 1e-12);
        assert!(primal_residual(&inst, &r.x).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn negative_rhs_rows_are_flipped() {
        // −x1 − x2 = −2, min x1 + 3x2 → x = (2, 0), value 2
        let inst = lp(&[vec![-1.0, -1.0]], &[-2.0], &[1.0, 3.0]);
        let r = solve_simplex(&inst, PivotRule::Dantzig, 100);
        assert_eq!(r.status, SimplexStatus::Optimal);
        assert!((r.objective - 2.0).abs() < 1e-12);
        // both rows need artificials here
        let inst = lp(
            &[vec![1.0, 1.0], vec![1.0, -1.0]],
            &[3.0, -1.0],
            &[1.0, 1.0],
        );
        let r = solve_simplex(&inst, PivotRule::Dantzig, 100);
        assert_eq!(r.status, SimplexStatus::Optimal);
        assert_eq!(r.x, vec![1.0, 2.0]);
        assert!(r.phase1_pivots >= 2);
    }

    #[test]
    fn pivot_limit_status() {
        let km = gen_klee_minty(4);
        let r = solve_simplex(&km, PivotRule::Dantzig, 3);
        assert_eq!(r.status, SimplexStatus::PivotLimit);
        assert_eq!(r.total_pivots(), 3);
    }

    #[test]
    fn klee_minty_three_takes_seven_pivots() {
        let km = gen_klee_minty(3);
        let r = solve_simplex(&km, PivotRule::Dantzig, 1000);
        assert_eq!(r.status, SimplexStatus::Optimal);
        assert_eq!(r.pivots, 7);
        assert_eq!(r.phase1_pivots, 0);
        assert_eq!(r.objective, klee_minty_optimum(3));
        let one = solve_simplex(&gen_klee_minty(1), PivotRule::Dantzig, 10);
        assert_eq!(one.pivots, 1);
    }

    #[test]
    fn each_pivot_swaps_one_pair() {
        let km = gen_klee_minty(4);
        let r = solve_simplex(&km, PivotRule::Dantzig, 1000);
        let mut basic = r.start_basis.basic.clone();
        for p in &r.trace {
            let pos = basic.iter().position(|&j| j == p.leaving).unwrap();
            assert!(!basic.contains(&p.entering));
            basic[pos] = p.entering;
        }
        let mut a = basic.clone();
        let mut b = r.basis.basic.clone();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
        for w in r.trace.windows(2) {
            assert!(w[1].objective <= w[0].objective);
        }
    }

    #[test]
    fn trace_csv_columns() {
        let r = solve_simplex(&gen_klee_minty(2), PivotRule::Dantzig, 100);
        let mut buf = Vec::new();
        r.write_trace_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "pivot_index,objective,entering,leaving,degenerate_flag"
        );
        assert_eq!(lines.count(), 3);
    }
}
