//! Derivative-free bounded minimization.

/// Nelder-Mead on a box, with points projected onto the bounds.
#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub max_evals: usize,
    pub f_tol: f64,
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self { max_evals: 200, f_tol: 1e-8, initial_step: 0.5 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lower[i], upper[i]);
    }
}

impl NelderMead {
    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, mut f: F, x0: &[f64], lower: &[f64], upper: &[f64]) -> Minimum {
        let n = x0.len();
        let evals = std::cell::Cell::new(0usize);
        let mut eval = |x: &[f64]| {
            evals.set(evals.get() + 1);
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };

        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        let mut start = x0.to_vec();
        project(&mut start, lower, upper);
        simplex.push(start.clone());
        for i in 0..n {
            let mut p = start.clone();
            let step = self.initial_step * (upper[i] - lower[i]);
            p[i] = if p[i] + step <= upper[i] { p[i] + step } else { p[i] - step };
            project(&mut p, lower, upper);
            simplex.push(p);
        }
        let mut values: Vec<f64> = simplex.iter().map(|p| eval(p)).collect();

        while evals.get() < self.max_evals {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();
            if (values[n] - values[0]).abs() <= self.f_tol * (1.0 + values[0].abs()) {
                break;
            }

            let centroid: Vec<f64> =
                (0..n).map(|d| simplex[..n].iter().map(|p| p[d]).sum::<f64>() / n as f64).collect();
            let along = |t: f64| -> Vec<f64> {
                let mut p: Vec<f64> = (0..n).map(|d| centroid[d] + t * (simplex[n][d] - centroid[d])).collect();
                project(&mut p, lower, upper);
                p
            };

            let reflected = along(-1.0);
            let fr = eval(&reflected);
            if fr < values[0] {
                let expanded = along(-2.0);
                let fe = eval(&expanded);
                if fe < fr {
                    simplex[n] = expanded;
                    values[n] = fe;
                } else {
                    simplex[n] = reflected;
                    values[n] = fr;
                }
            } else if fr < values[n - 1] {
                simplex[n] = reflected;
                values[n] = fr;
            } else {
                let t = if fr < values[n] { -0.5 } else { 0.5 };
                let contracted = along(t);
                let fc = eval(&contracted);
                if fc < values[n].min(fr) {
                    simplex[n] = contracted;
                    values[n] = fc;
                } else {
                    for i in 1..=n {
                        let p: Vec<f64> = (0..n).map(|d| simplex[0][d] + 0.5 * (simplex[i][d] - simplex[0][d])).collect();
                        values[i] = eval(&p);
                        simplex[i] = p;
                    }
                }
            }
        }

        let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
        Minimum { x: simplex[best].clone(), value: values[best], evals: evals.get() }
    }
}
