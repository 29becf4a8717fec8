//! Box-constrained local minimizers: bounded Nelder–Mead and a
//! finite-difference Levenberg–Marquardt polish, sharing one evaluation
//! budget.

/// Objective value plus a residual vector whose squared norm vanishes at
/// the same points as the value. The residuals may be empty, in which case
/// only the simplex search can use the function.
pub(crate) type Sample = (f64, Vec<f64>);

/// Objective wrapper that enforces the budget and records best-so-far.
pub(crate) struct Counter<'a> {
    f: &'a mut dyn FnMut(&[f64]) -> Sample,
    pub lower: &'a [f64],
    pub upper: &'a [f64],
    pub budget: usize,
    pub target: f64,
    pub history: Vec<f64>,
    pub best_x: Vec<f64>,
    pub best_f: f64,
}

impl<'a> Counter<'a> {
    pub fn new(
        f: &'a mut dyn FnMut(&[f64]) -> Sample,
        lower: &'a [f64],
        upper: &'a [f64],
        budget: usize,
        target: f64,
    ) -> Self {
        Self {
            f,
            lower,
            upper,
            budget,
            target,
            history: Vec::new(),
            best_x: Vec::new(),
            best_f: f64::INFINITY,
        }
    }

    pub fn exhausted(&self) -> bool {
        self.history.len() >= self.budget || self.best_f < self.target
    }

    pub fn remaining(&self) -> usize {
        self.budget.saturating_sub(self.history.len())
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(self.lower).zip(self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }

    /// Evaluates at the clamped point; `None` once the budget is spent.
    pub fn eval(&mut self, x: &[f64]) -> Option<f64> {
        self.sample(x).map(|(v, _)| v)
    }

    pub fn sample(&mut self, x: &[f64]) -> Option<Sample> {
        if self.exhausted() {
            return None;
        }
        let mut xc = x.to_vec();
        self.clamp(&mut xc);
        let (v, r) = (self.f)(&xc);
        let v = if v.is_finite() { v } else { f64::INFINITY };
        if v < self.best_f {
            self.best_f = v;
            self.best_x = xc;
        }
        self.history.push(self.best_f);
        Some((v, r))
    }
}

/// Bounded Nelder–Mead with dimension-adaptive coefficients. Stops when
/// the simplex values agree to `ftol` (relative to the best value plus a
/// floor), after `max_evals`, or when the counter is exhausted.
pub(crate) fn nelder_mead(
    c: &mut Counter<'_>,
    x0: &[f64],
    steps: &[f64],
    max_evals: usize,
    ftol: f64,
) -> Option<(Vec<f64>, f64)> {
    let n = x0.len();
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = if n > 1 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };
    let stop = c.history.len() + max_evals;
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut start = x0.to_vec();
    c.clamp(&mut start);
    pts.push(start.clone());
    for i in 0..n {
        let mut p = start.clone();
        p[i] += steps[i];
        if p[i] > c.upper[i] {
            p[i] = start[i] - steps[i];
        }
        c.clamp(&mut p);
        pts.push(p);
    }
    let mut vals = Vec::with_capacity(n + 1);
    for p in &pts {
        vals.push(c.eval(p)?);
    }
    let project = |c: &Counter<'_>, mut p: Vec<f64>| {
        c.clamp(&mut p);
        p
    };
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        let spread = vals[n] - vals[0];
        if spread <= ftol * (vals[0].abs() + 1e-12) || c.history.len() >= stop {
            return Some((pts[0].clone(), vals[0]));
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / nf)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[n])
                .map(|(m, w)| m + t * (m - w))
                .collect()
        };
        let xr = project(c, along(alpha));
        let fr = c.eval(&xr)?;
        if fr < vals[0] {
            let xe = project(c, along(alpha * gamma));
            let fe = c.eval(&xe)?;
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
            continue;
        }
        let (xk, fk) = if fr < vals[n] {
            let xo = project(c, along(alpha * rho));
            let fo = c.eval(&xo)?;
            (xo, fo)
        } else {
            let xi = project(c, along(-rho));
            let fi = c.eval(&xi)?;
            (xi, fi)
        };
        if fk < vals[n].min(fr) {
            pts[n] = xk;
            vals[n] = fk;
            continue;
        }
        // shrink towards the best vertex
        for i in 1..=n {
            let p: Vec<f64> = pts[0]
                .iter()
                .zip(&pts[i])
                .map(|(b, v)| b + sigma * (v - b))
                .collect();
            vals[i] = c.eval(&p)?;
            pts[i] = p;
        }
    }
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Solves the symmetric positive definite system `a x = b` in place by
/// Cholesky factorization; `None` if `a` is not positive definite.
fn cholesky_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for j in 0..n {
        let d = a[j][j] - (0..j).map(|k| a[j][k] * a[j][k]).sum::<f64>();
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        a[j][j] = d;
        for i in j + 1..n {
            let s = a[i][j] - (0..j).map(|k| a[i][k] * a[j][k]).sum::<f64>();
            a[i][j] = s / d;
        }
    }
    for i in 0..n {
        b[i] = (b[i] - (0..i).map(|k| a[i][k] * b[k]).sum::<f64>()) / a[i][i];
    }
    for i in (0..n).rev() {
        b[i] = (b[i] - (i + 1..n).map(|k| a[k][i] * b[k]).sum::<f64>()) / a[i][i];
    }
    Some(b)
}

/// Damped Gauss–Newton step. Coordinates sitting on a bound whose step
/// points outward are frozen and the system is solved again without them.
fn bounded_step(
    jtj: &[Vec<f64>],
    jtr: &[f64],
    lambda: f64,
    floor: f64,
    x: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> Option<Vec<f64>> {
    let n = x.len();
    let mut free: Vec<usize> = (0..n).collect();
    loop {
        let m: Vec<Vec<f64>> = free
            .iter()
            .map(|&a| {
                free.iter()
                    .map(|&b| if a == b { jtj[a][a] + lambda * (jtj[a][a] + floor) } else { jtj[a][b] })
                    .collect()
            })
            .collect();
        let sub = cholesky_solve(m, free.iter().map(|&a| -jtr[a]).collect())?;
        let blocked: Vec<usize> = free
            .iter()
            .zip(&sub)
            .filter(|(&a, &d)| (x[a] <= lower[a] && d < 0.0) || (x[a] >= upper[a] && d > 0.0))
            .map(|(&a, _)| a)
            .collect();
        if blocked.is_empty() || blocked.len() == free.len() {
            let mut step = vec![0.0; n];
            if blocked.is_empty() {
                for (&a, d) in free.iter().zip(sub) {
                    step[a] = d;
                }
            }
            return Some(step);
        }
        free.retain(|a| !blocked.contains(a));
    }
}

/// Levenberg–Marquardt on the residual vector with forward-difference
/// Jacobians (step `fd_step`, flipped at the upper bound). Steps are
/// projected onto the box. Stops after `max_iters` Jacobians, when a
/// Jacobian no longer buys a relative decrease of 1e-3, or when the
/// counter is exhausted. Returns the last accepted point and its value.
pub(crate) fn lm_polish(
    c: &mut Counter<'_>,
    x0: &[f64],
    fd_step: f64,
    max_iters: usize,
) -> Option<(Vec<f64>, f64)> {
    let n = x0.len();
    let mut x = x0.to_vec();
    c.clamp(&mut x);
    let (mut fx, mut r) = c.sample(&x)?;
    if r.is_empty() {
        return Some((x, fx));
    }
    let mut cost = sum_sq(&r);
    let mut lambda = 1e-3;
    for _ in 0..max_iters {
        let mut jac = vec![vec![0.0; n]; r.len()];
        for i in 0..n {
            let mut p = x.clone();
            let h = if x[i] + fd_step <= c.upper[i] { fd_step } else { -fd_step };
            p[i] += h;
            let (_, rp) = c.sample(&p)?;
            if rp.len() != r.len() {
                return Some((x, fx));
            }
            for (row, (a, b)) in jac.iter_mut().zip(rp.iter().zip(&r)) {
                row[i] = (a - b) / h;
            }
        }
        let mut jtj = vec![vec![0.0; n]; n];
        let mut jtr = vec![0.0; n];
        for (row, ri) in jac.iter().zip(&r) {
            for a in 0..n {
                jtr[a] += row[a] * ri;
                for b in 0..=a {
                    jtj[a][b] += row[a] * row[b];
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                jtj[b][a] = jtj[a][b];
            }
        }
        // more parameters than residuals leave JᵀJ singular; the floor keeps
        // the damped steps bounded along its null space
        let floor = 1e-3 * (0..n).map(|a| jtj[a][a]).sum::<f64>() / n as f64 + 1e-300;
        let mut accepted = false;
        for _ in 0..10 {
            let Some(step) = bounded_step(&jtj, &jtr, lambda, floor, &x, c.lower, c.upper) else {
                lambda *= 4.0;
                continue;
            };
            let mut xn: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
            c.clamp(&mut xn);
            let (fnew, rn) = c.sample(&xn)?;
            let cn = sum_sq(&rn);
            if rn.len() == r.len() && cn < cost {
                let gain = (cost - cn) / cost;
                x = xn;
                fx = fnew;
                r = rn;
                cost = cn;
                lambda = (lambda / 3.0).max(1e-9);
                accepted = gain > 1e-3;
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    Some((x, fx))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosen(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn nelder_mead_finds_rosenbrock_minimum() {
        let mut f = |x: &[f64]| (rosen(x), Vec::new());
        let lo = [-5.0, -5.0];
        let hi = [5.0, 5.0];
        let mut c = Counter::new(&mut f, &lo, &hi, 5000, 0.0);
        let (x, v) = nelder_mead(&mut c, &[-1.2, 1.0], &[0.5, 0.5], 5000, 1e-16).unwrap();
        assert!(v < 1e-10, "{v}");
        assert!((x[0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn lm_solves_rosenbrock_residuals() {
        let mut f = |x: &[f64]| {
            let r = vec![1.0 - x[0], 10.0 * (x[1] - x[0] * x[0])];
            (sum_sq(&r), r)
        };
        let lo = [-5.0, -5.0];
        let hi = [5.0, 5.0];
        let mut c = Counter::new(&mut f, &lo, &hi, 2000, 0.0);
        let (x, v) = lm_polish(&mut c, &[-1.2, 1.0], 1e-7, 200).unwrap();
        assert!(v < 1e-14, "{v}");
        assert!((x[0] - 1.0).abs() < 1e-6 && (x[1] - 1.0).abs() < 1e-6, "{x:?}");
        assert!(c.history.len() < 300, "{}", c.history.len());
    }

    #[test]
    fn lm_stops_on_the_bound() {
        let mut f = |x: &[f64]| {
            let r = vec![x[0] - 10.0, x[1] + 1.0];
            (sum_sq(&r), r)
        };
        let lo = [-1.0, -5.0];
        let hi = [1.0, 5.0];
        let mut c = Counter::new(&mut f, &lo, &hi, 500, 0.0);
        let (x, _) = lm_polish(&mut c, &[0.0, 0.0], 1e-7, 50).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-9 && (x[1] + 1.0).abs() < 1e-6, "{x:?}");
    }

    #[test]
    fn cholesky_matches_hand_solution() {
        let a = vec![vec![4.0, 2.0], vec![2.0, 3.0]];
        let x = cholesky_solve(a, vec![2.0, 1.0]).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-15 && x[1].abs() < 1e-15, "{x:?}");
        assert!(cholesky_solve(vec![vec![1.0, 2.0], vec![2.0, 1.0]], vec![1.0, 1.0]).is_none());
    }

    #[test]
    fn bounds_are_respected() {
        let mut f = |x: &[f64]| ((x[0] - 10.0).powi(2), Vec::new());
        let lo = [-1.0];
        let hi = [1.0];
        let mut c = Counter::new(&mut f, &lo, &hi, 500, 0.0);
        nelder_mead(&mut c, &[0.0], &[0.5], 500, 1e-14);
        assert!((c.best_x[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn history_is_monotone_and_budgeted() {
        let mut f = |x: &[f64]| (x.iter().map(|v| v.sin() + 1.0).sum::<f64>(), Vec::new());
        let lo = [-3.0; 3];
        let hi = [3.0; 3];
        let mut c = Counter::new(&mut f, &lo, &hi, 57, 0.0);
        let _ = nelder_mead(&mut c, &[0.5, 0.2, -0.1], &[0.3; 3], 1000, 0.0);
        assert_eq!(c.history.len(), 57);
        assert!(c.history.windows(2).all(|w| w[1] <= w[0]));
    }
}
