//! Derivative-free minimization by the Nelder-Mead simplex method.
//!
//! The objectives in this crate are maxima of absolute values, hence kinked;
//! a simplex search is robust there and the dimensions are small (at most a
//! dozen parameters at desk scale).

/// Outcome of one Nelder-Mead run.
#[derive(Clone, Debug)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub struct NelderMead {
    pub max_iterations: usize,
    pub ftol: f64,
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            max_iterations: 500,
            ftol: 1e-10,
            initial_step: 0.5,
        }
    }
}

impl NelderMead {
    pub fn minimize<F>(&self, f: F, x0: &[f64]) -> NelderMeadResult
    where
        F: Fn(&[f64]) -> f64,
    {
        let dim = x0.len();
        if dim == 0 {
            return NelderMeadResult {
                x: vec![],
                value: f(&[]),
                iterations: 0,
                converged: true,
            };
        }
        let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
        simplex.push(x0.to_vec());
        for i in 0..dim {
            let mut v = x0.to_vec();
            v[i] += self.initial_step;
            simplex.push(v);
        }
        let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.max_iterations {
            iterations += 1;
            // order the simplex
            let mut order: Vec<usize> = (0..=dim).collect();
            order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
            let best = order[0];
            let worst = order[dim];
            let second_worst = order[dim - 1];

            if (values[worst] - values[best]).abs() <= self.ftol * (1.0 + values[best].abs()) {
                converged = true;
                break;
            }

            // centroid of all but the worst vertex
            let mut centroid = vec![0.0; dim];
            for (idx, v) in simplex.iter().enumerate() {
                if idx == worst {
                    continue;
                }
                for j in 0..dim {
                    centroid[j] += v[j] / dim as f64;
                }
            }

            let reflected: Vec<f64> = (0..dim)
                .map(|j| centroid[j] + alpha * (centroid[j] - simplex[worst][j]))
                .collect();
            let f_reflected = f(&reflected);

            if f_reflected < values[best] {
                let expanded: Vec<f64> = (0..dim)
                    .map(|j| centroid[j] + gamma * (reflected[j] - centroid[j]))
                    .collect();
                let f_expanded = f(&expanded);
                if f_expanded < f_reflected {
                    simplex[worst] = expanded;
                    values[worst] = f_expanded;
                } else {
                    simplex[worst] = reflected;
                    values[worst] = f_reflected;
                }
                continue;
            }
            if f_reflected < values[second_worst] {
                simplex[worst] = reflected;
                values[worst] = f_reflected;
                continue;
            }
            // contraction
            let contracted: Vec<f64> = (0..dim)
                .map(|j| centroid[j] + rho * (simplex[worst][j] - centroid[j]))
                .collect();
            let f_contracted = f(&contracted);
            if f_contracted < values[worst] {
                simplex[worst] = contracted;
                values[worst] = f_contracted;
                continue;
            }
            // shrink toward the best vertex
            let best_point = simplex[best].clone();
            for (idx, v) in simplex.iter_mut().enumerate() {
                if idx == best {
                    continue;
                }
                for j in 0..dim {
                    v[j] = best_point[j] + sigma * (v[j] - best_point[j]);
                }
                values[idx] = f(v);
            }
        }

        let (mut best_idx, mut best_val) = (0, values[0]);
        for (i, &v) in values.iter().enumerate() {
            if v < best_val {
                best_val = v;
                best_idx = i;
            }
        }
        NelderMeadResult {
            x: simplex[best_idx].clone(),
            value: best_val,
            iterations,
            converged,
        }
    }
}
