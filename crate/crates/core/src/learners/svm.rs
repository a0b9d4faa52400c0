use super::dot;
use crate::error::{invalid, Result};
use crate::matrix::Matrix;

const KKT_TOL: f64 = 1e-3;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear,
    /// `exp(−sigma · ‖u − v‖²)`.
    Gaussian { sigma: f64 },
}

impl Kernel {
    pub fn eval(self, u: &[f64], v: &[f64]) -> f64 {
        match self {
            Kernel::Linear => dot(u, v),
            Kernel::Gaussian { sigma } => {
                let d2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
                (-sigma * d2).exp()
            }
        }
    }
}

/// Result of the dual solve on the training set.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmSolution {
    /// One multiplier per training row, in `[0, C]`.
    pub alphas: Vec<f64>,
    pub bias: f64,
    /// Maximal violating-pair gap `m(α) − M(α)` at termination.
    pub kkt_violation: f64,
    pub iterations: usize,
}

/// Soft-margin C-SVM with Platt-scaled probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct Svm {
    pub kernel: Kernel,
    pub cost: f64,
    pub support: Vec<Vec<f64>>,
    /// `αᵢ yᵢ` for each support vector.
    pub coef: Vec<f64>,
    pub bias: f64,
    /// Platt sigmoid: P(faller) = 1 / (1 + exp(A·f + B)).
    pub platt_a: f64,
    pub platt_b: f64,
    pub solution: SvmSolution,
}

impl Svm {
    pub fn fit(x: &Matrix, y: &[bool], kernel: Kernel, cost: f64) -> Result<Self> {
        if !(cost.is_finite() && cost > 0.0) {
            return Err(invalid(format!("SVM cost must be positive, got {cost}")));
        }
        if let Kernel::Gaussian { sigma } = kernel {
            if !(sigma.is_finite() && sigma > 0.0) {
                return Err(invalid(format!("kernel width must be positive, got {sigma}")));
            }
        }
        let n = x.nrows();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = kernel.eval(x.row(i), x.row(j));
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        let ys: Vec<f64> = y.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();
        let solution = smo(&k, &ys, cost);

        let mut support = Vec::new();
        let mut coef = Vec::new();
        for (i, &a) in solution.alphas.iter().enumerate() {
            if a > 0.0 {
                support.push(x.row(i).to_vec());
                coef.push(a * ys[i]);
            }
        }
        let decisions: Vec<f64> = (0..n)
            .map(|i| {
                (0..n).map(|j| solution.alphas[j] * ys[j] * k[i * n + j]).sum::<f64>()
                    + solution.bias
            })
            .collect();
        let (a, b) = platt(&decisions, y);
        Ok(Self {
            kernel,
            cost,
            support,
            coef,
            bias: solution.bias,
            platt_a: a.min(0.0),
            platt_b: b,
            solution,
        })
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(sv, c)| c * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        let z = self.platt_a * self.decision(x) + self.platt_b;
        // 1 / (1 + e^z), computed stably
        if z >= 0.0 {
            let e = (-z).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + z.exp())
        }
    }

    pub fn parameters(&self) -> Vec<f64> {
        let mut v = vec![self.bias, self.platt_a, self.platt_b, self.cost];
        v.extend_from_slice(&self.coef);
        v.extend(self.support.iter().flatten().copied());
        v
    }
}

/// Sequential minimal optimisation with second-order working-set selection.
fn smo(k: &[f64], y: &[f64], c: f64) -> SvmSolution {
    let n = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * k[i * n + j];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let max_iter = (100 * n).max(1_000_000);
    let is_up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let is_low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    let mut iterations = 0;
    let mut gap;
    loop {
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = usize::MAX;
        for t in 0..n {
            if is_up(alpha[t], y[t]) && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i_sel = t;
            }
        }
        let mut gmin = f64::INFINITY;
        let mut j_sel = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !is_low(alpha[t], y[t]) {
                continue;
            }
            let v = -y[t] * grad[t];
            gmin = gmin.min(v);
            if i_sel != usize::MAX && v < gmax {
                let b = gmax - v;
                let mut a = k[i_sel * n + i_sel] + k[t * n + t] - 2.0 * k[i_sel * n + t];
                if a <= 0.0 {
                    a = TAU;
                }
                let obj = -b * b / a;
                if obj <= best {
                    best = obj;
                    j_sel = t;
                }
            }
        }
        gap = gmax - gmin;
        if gap < KKT_TOL || j_sel == usize::MAX || iterations >= max_iter {
            break;
        }
        iterations += 1;
        let (i, j) = (i_sel, j_sel);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }

    // rho: average over free vectors, else midpoint of the feasible interval
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            sum_free += yg;
            n_free += 1;
        }
    }
    let rho = if n_free > 0 { sum_free / n_free as f64 } else { 0.5 * (ub + lb) };
    SvmSolution { alphas: alpha, bias: -rho, kkt_violation: gap.max(0.0), iterations }
}

/// Platt's sigmoid fit (Newton with backtracking, regularised targets).
fn platt(dec: &[f64], y: &[bool]) -> (f64, f64) {
    let prior1 = y.iter().filter(|&&b| b).count() as f64;
    let prior0 = y.len() as f64 - prior1;
    let hi = (prior1 + 1.0) / (prior1 + 2.0);
    let lo = 1.0 / (prior0 + 2.0);
    let t: Vec<f64> = y.iter().map(|&b| if b { hi } else { lo }).collect();
    let (min_step, sigma) = (1e-10, 1e-12);
    let mut a = 0.0;
    let mut b = ((prior0 + 1.0) / (prior1 + 1.0)).ln();

    let objective = |a: f64, b: f64| -> f64 {
        dec.iter()
            .zip(&t)
            .map(|(&f, &ti)| {
                let fapb = f * a + b;
                if fapb >= 0.0 {
                    ti * fapb + (-fapb).exp().ln_1p()
                } else {
                    (ti - 1.0) * fapb + fapb.exp().ln_1p()
                }
            })
            .sum()
    };
    let mut fval = objective(a, b);
    for _ in 0..100 {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (sigma, sigma, 0.0, 0.0, 0.0);
        for (&f, &ti) in dec.iter().zip(&t) {
            let fapb = f * a + b;
            let (p, q) = if fapb >= 0.0 {
                let e = (-fapb).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = fapb.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = ti - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < 1e-5 && g2.abs() < 1e-5 {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= min_step {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < min_step {
            break;
        }
    }
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;
    use rand::Rng;

    #[test]
    fn two_point_problem_has_analytic_solution() {
        let x = Matrix::from_rows(&[vec![-1.0], vec![1.0]]).unwrap();
        let m = Svm::fit(&x, &[false, true], Kernel::Linear, 16.0).unwrap();
        for a in &m.solution.alphas {
            assert!((a - 0.5).abs() < 1e-9, "{a}");
        }
        let w: f64 = m.support.iter().zip(&m.coef).map(|(s, c)| c * s[0]).sum();
        assert!((w - 1.0).abs() < 1e-9);
        assert!(m.bias.abs() < 1e-9);
        assert!(m.probability(&[1.0]) > 0.5 && m.probability(&[-1.0]) < 0.5);
    }

    fn noisy_line(n: usize, seed_: u64) -> (Matrix, Vec<bool>) {
        let mut rng = seed::rng(seed_);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let v: f64 = rng.random_range(-2.0..2.0);
            rows.push(vec![v]);
            y.push(v + rng.random_range(-0.8..0.8) > 0.2);
        }
        (Matrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn solution_is_feasible_and_satisfies_kkt() {
        let (x, y) = noisy_line(60, 1);
        for kernel in [Kernel::Linear, Kernel::Gaussian { sigma: 0.5 }] {
            let c = 2.0;
            let m = Svm::fit(&x, &y, kernel, c).unwrap();
            let s = &m.solution;
            assert!(s.kkt_violation < KKT_TOL);
            let balance: f64 =
                s.alphas.iter().zip(&y).map(|(a, &l)| if l { *a } else { -*a }).sum();
            assert!(balance.abs() < 1e-9);
            assert!(s.alphas.iter().all(|a| (0.0..=c).contains(a)));
        }
    }

    #[test]
    fn linear_primal_objective_matches_grid_search() {
        let (x, y) = noisy_line(40, 2);
        let c = 1.0;
        let m = Svm::fit(&x, &y, Kernel::Linear, c).unwrap();
        let primal = |w: f64, b: f64| {
            0.5 * w * w
                + c * x
                    .rows()
                    .zip(&y)
                    .map(|(r, &l)| {
                        let yy = if l { 1.0 } else { -1.0 };
                        (1.0 - yy * (w * r[0] + b)).max(0.0)
                    })
                    .sum::<f64>()
        };
        let w: f64 = m.support.iter().zip(&m.coef).map(|(s, c)| c * s[0]).sum();
        let ours = primal(w, m.bias);
        let mut best = f64::INFINITY;
        for i in 0..=400 {
            for j in 0..=400 {
                let gw = -1.0 + 6.0 * i as f64 / 400.0;
                let gb = -3.0 + 6.0 * j as f64 / 400.0;
                best = best.min(primal(gw, gb));
            }
        }
        // the dual stopping tolerance leaves a small duality gap
        assert!(ours <= best + 0.05 * best.max(1.0), "{ours} vs grid {best}");
    }

    #[test]
    fn platt_slope_is_never_positive() {
        let (x, y) = noisy_line(30, 3);
        let flipped: Vec<bool> = y.iter().map(|b| !b).collect();
        for labels in [&y, &flipped] {
            let m = Svm::fit(&x, labels, Kernel::Linear, 1.0).unwrap();
            assert!(m.platt_a <= 0.0);
        }
    }
}
