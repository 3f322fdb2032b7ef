//! Box-constrained Nelder-Mead; vertices are clamped into the box.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadConfig {
    pub max_evaluations: usize,
    /// Stop once the spread of simplex values falls below this.
    pub f_tolerance: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            max_evaluations: 80,
            f_tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

fn clamp_into(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*lo, *hi);
    }
}

/// Minimises `f` from `start` with initial edge lengths `step`.
pub fn minimize<F>(
    mut f: F,
    start: &[f64],
    step: &[f64],
    lower: &[f64],
    upper: &[f64],
    cfg: NelderMeadConfig,
) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = start.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        f(x)
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    let mut x0 = start.to_vec();
    clamp_into(&mut x0, lower, upper);
    simplex.push(x0.clone());
    for d in 0..dim {
        let mut x = x0.clone();
        x[d] += step[d];
        if x[d] > upper[d] {
            x[d] = x0[d] - step[d];
        }
        clamp_into(&mut x, lower, upper);
        simplex.push(x);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(x, &mut evals)).collect();

    while evals < cfg.max_evaluations {
        // Stable order: by value, ties keep insertion order.
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&k| simplex[k].clone()).collect();
        values = order.iter().map(|&k| values[k]).collect();

        let spread = values[dim] - values[0];
        if spread.is_finite() && spread.abs() < cfg.f_tolerance {
            break;
        }

        let mut centroid = vec![0.0; dim];
        for x in &simplex[..dim] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / dim as f64;
            }
        }
        let towards = |coef: f64| -> Vec<f64> {
            let mut x: Vec<f64> = centroid
                .iter()
                .zip(&simplex[dim])
                .map(|(c, w)| c + coef * (w - c))
                .collect();
            clamp_into(&mut x, lower, upper);
            x
        };

        let reflected = towards(-1.0);
        let f_r = eval(&reflected, &mut evals);
        if f_r < values[0] {
            let expanded = towards(-2.0);
            let f_e = eval(&expanded, &mut evals);
            if f_e < f_r {
                simplex[dim] = expanded;
                values[dim] = f_e;
            } else {
                simplex[dim] = reflected;
                values[dim] = f_r;
            }
            continue;
        }
        if f_r < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = f_r;
            continue;
        }
        let (contracted, f_c) = if f_r < values[dim] {
            let x = towards(-0.5);
            let v = eval(&x, &mut evals);
            (x, v)
        } else {
            let x = towards(0.5);
            let v = eval(&x, &mut evals);
            (x, v)
        };
        if f_c < values[dim].min(f_r) {
            simplex[dim] = contracted;
            values[dim] = f_c;
            continue;
        }
        // Shrink towards the best vertex.
        let best = simplex[0].clone();
        for k in 1..=dim {
            let mut x: Vec<f64> = best
                .iter()
                .zip(&simplex[k])
                .map(|(b, v)| b + 0.5 * (v - b))
                .collect();
            clamp_into(&mut x, lower, upper);
            values[k] = eval(&x, &mut evals);
            simplex[k] = x;
        }
    }

    let best = (0..=dim)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .expect("non-empty simplex");
    Minimum {
        x: simplex[best].clone(),
        value: values[best],
        evaluations: evals,
    }
}
