//! Minimization over the product of two probability simplices.

use super::model::ProductQuadratic;
use super::types::MarginalPair;
use crate::error::{Error, Result};

/// Stop once one accepted step improves the objective by less than this.
pub const IMPROVEMENT_TOL: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 500;

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;
const FD_STEP: f64 = 1e-7;

/// Objective over marginal pairs. Closures get a central-difference gradient.
pub trait ProductObjective {
    fn value(&self, m: &MarginalPair) -> f64;

    fn gradient(&self, m: &MarginalPair) -> (Vec<f64>, Vec<f64>) {
        let bump = |k: usize, s: f64| {
            let mut a = m.pi1().to_vec();
            let mut b = m.pi2().to_vec();
            if k < a.len() {
                a[k] += s;
            } else {
                b[k - a.len()] += s;
            }
            self.value(&MarginalPair::from_parts(a, b))
        };
        let r = m.rows();
        let g: Vec<f64> =
            (0..r + m.cols()).map(|k| (bump(k, FD_STEP) - bump(k, -FD_STEP)) / (2.0 * FD_STEP)).collect();
        (g[..r].to_vec(), g[r..].to_vec())
    }
}

impl<F: Fn(&MarginalPair) -> f64> ProductObjective for F {
    fn value(&self, m: &MarginalPair) -> f64 {
        self(m)
    }
}

impl ProductObjective for ProductQuadratic {
    fn value(&self, m: &MarginalPair) -> f64 {
        ProductQuadratic::value(self, m)
    }

    fn gradient(&self, m: &MarginalPair) -> (Vec<f64>, Vec<f64>) {
        ProductQuadratic::gradient(self, m)
    }
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (k, x) in u.iter().enumerate() {
        cumulative += x;
        let t = (cumulative - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            shift = t;
        }
    }
    v.iter().map(|x| (x - shift).max(0.0)).collect()
}

fn project(m: &MarginalPair, g: &(Vec<f64>, Vec<f64>), step: f64) -> MarginalPair {
    let a: Vec<f64> = m.pi1().iter().zip(&g.0).map(|(x, g)| x - step * g).collect();
    let b: Vec<f64> = m.pi2().iter().zip(&g.1).map(|(x, g)| x - step * g).collect();
    MarginalPair::from_parts(project_simplex(&a), project_simplex(&b))
}

fn flat(m: &MarginalPair) -> impl Iterator<Item = f64> + '_ {
    m.pi1().iter().chain(m.pi2()).copied()
}

fn flat_grad(g: &(Vec<f64>, Vec<f64>)) -> impl Iterator<Item = f64> + '_ {
    g.0.iter().chain(&g.1).copied()
}

/// Projected gradient descent with Barzilai–Borwein steps and Armijo
/// backtracking, started at `init`. Returns the last accepted point and its
/// value, which never exceeds the value at `init`.
pub fn minimize_product_simplex<O: ProductObjective + ?Sized>(
    objective: &O,
    init: &MarginalPair,
) -> Result<(MarginalPair, f64)> {
    let failure = |iterations, reason: String| Error::OptimizationFailure { iterations, reason };
    let mut x = init.clone();
    let mut fx = objective.value(&x);
    if !fx.is_finite() {
        return Err(failure(0, format!("objective is {fx} at the starting point")));
    }
    let mut g = objective.gradient(&x);
    let mut step = {
        let norm = flat_grad(&g).map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 { 0.1 / norm } else { 1.0 }
    };

    for iteration in 1..=MAX_ITERATIONS {
        if flat_grad(&g).any(|v| !v.is_finite()) {
            return Err(failure(iteration, "gradient is not finite".into()));
        }
        let mut t = step;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let cand = project(&x, &g, t);
            let fc = objective.value(&cand);
            if !fc.is_finite() {
                return Err(failure(iteration, format!("objective is {fc} at a trial point")));
            }
            let descent: f64 = flat_grad(&g).zip(flat(&cand).zip(flat(&x))).map(|(g, (c, x))| g * (c - x)).sum();
            if fc <= fx + ARMIJO * descent {
                accepted = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        let Some((next, f_next)) = accepted else {
            return Ok((x, fx));
        };
        let improvement = fx - f_next;
        let g_next = objective.gradient(&next);
        let s: Vec<f64> = flat(&next).zip(flat(&x)).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = flat_grad(&g_next).zip(flat_grad(&g)).map(|(a, b)| a - b).collect();
        let ss: f64 = s.iter().map(|v| v * v).sum();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        step = if sy > 0.0 { (ss / sy).clamp(1e-12, 1e12) } else { (2.0 * t).min(1e12) };
        x = next;
        fx = f_next;
        g = g_next;
        if improvement < IMPROVEMENT_TOL {
            break;
        }
    }
    Ok((x, fx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair(a: &[f64], b: &[f64]) -> MarginalPair {
        MarginalPair::new(a.to_vec(), b.to_vec()).unwrap()
    }

    #[test]
    fn simplex_projection() {
        assert_eq!(project_simplex(&[0.2, 0.8]), vec![0.2, 0.8]);
        let p = project_simplex(&[2.0, 0.0]);
        assert_eq!(p, vec![1.0, 0.0]);
        let p = project_simplex(&[0.5, 0.5, 0.5]);
        assert!(p.iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    proptest! {
        #[test]
        fn projection_is_a_simplex_point(v in prop::collection::vec(-3.0f64..3.0, 2..8)) {
            let p = project_simplex(&v);
            prop_assert!(p.iter().all(|x| *x >= 0.0));
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn known_interior_minimizer() {
        let target = [0.3, 0.7, 0.6, 0.4];
        let f = |m: &MarginalPair| {
            let x: Vec<f64> = m.pi1().iter().chain(m.pi2()).copied().collect();
            x.iter().zip(&target).enumerate().map(|(k, (a, b))| (k + 1) as f64 * (a - b).powi(2)).sum::<f64>()
        };
        let (arg, value) = minimize_product_simplex(&f, &pair(&[0.5, 0.5], &[0.5, 0.5])).unwrap();
        for (a, b) in arg.pi1().iter().chain(arg.pi2()).zip(&target) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
        assert!(value < 1e-11);
    }

    #[test]
    fn already_minimal_start_is_kept() {
        let f = |m: &MarginalPair| (m.pi1()[0] - 0.3).powi(2) + (m.pi2()[0] - 0.6).powi(2) + 1.5;
        let init = pair(&[0.3, 0.7], &[0.6, 0.4]);
        let (arg, value) = minimize_product_simplex(&f, &init).unwrap();
        assert!((value - 1.5).abs() < 1e-12);
        assert!((arg.pi1()[0] - 0.3).abs() < 1e-6);
    }

    #[test]
    fn non_finite_objective_fails() {
        let f = |m: &MarginalPair| if m.pi1()[0] > 0.5 { f64::NAN } else { 1.0 };
        assert!(matches!(
            minimize_product_simplex(&f, &pair(&[0.6, 0.4], &[0.5, 0.5])),
            Err(Error::OptimizationFailure { .. })
        ));
    }

    #[test]
    fn boundary_minimizer() {
        let f = |m: &MarginalPair| (m.pi1()[0] - 1.4).powi(2) + (m.pi2()[1] + 0.3).powi(2);
        let (arg, _) = minimize_product_simplex(&f, &pair(&[0.5, 0.5], &[0.5, 0.5])).unwrap();
        assert!((arg.pi1()[0] - 1.0).abs() < 1e-9);
        assert!(arg.pi2()[1].abs() < 1e-9);
    }
}
