//! Gradient-free local minimization on a box, used for acquisition
//! maximization, incumbent estimation, and hyperparameter fitting.

/// Options for [`nelder_mead_box`].
#[derive(Clone, Copy, Debug)]
pub struct NmOptions {
    pub max_iters: usize,
    /// Stop when the simplex diameter falls below this (in box-relative units).
    pub x_tol: f64,
    /// Initial simplex step as a fraction of each box side.
    pub init_step: f64,
}

impl Default for NmOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            x_tol: 1e-9,
            init_step: 0.08,
        }
    }
}

/// Nelder-Mead minimization constrained to the box [lo, hi] by projection.
///
/// Non-finite objective values are treated as +inf, so the search simply
/// retreats from invalid regions. Returns the best vertex and its value.
pub fn nelder_mead_box<F>(
    mut f: F,
    start: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: NmOptions,
) -> (Vec<f64>, f64)
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = start.len();
    assert_eq!(lo.len(), dim);
    assert_eq!(hi.len(), dim);

    let clamp = |x: &mut Vec<f64>| {
        for i in 0..dim {
            x[i] = x[i].clamp(lo[i], hi[i]);
        }
    };
    let mut eval = |x: &[f64]| -> f64 {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    // Initial simplex: start plus one perturbed vertex per dimension.
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    let mut x0 = start.to_vec();
    clamp(&mut x0);
    let fx0 = eval(&x0);
    simplex.push((x0.clone(), fx0));
    for i in 0..dim {
        let mut v = x0.clone();
        let side = hi[i] - lo[i];
        let step = opts.init_step * side;
        v[i] = if v[i] + step <= hi[i] { v[i] + step } else { v[i] - step };
        let fv = eval(&v);
        simplex.push((v, fv));
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    for _ in 0..opts.max_iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));

        let diameter = (0..dim)
            .map(|i| {
                let (mn, mx) = simplex
                    .iter()
                    .map(|(v, _)| v[i])
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(mn, mx), x| {
                        (mn.min(x), mx.max(x))
                    });
                (mx - mn) / (hi[i] - lo[i]).max(f64::MIN_POSITIVE)
            })
            .fold(0.0_f64, f64::max);
        if diameter < opts.x_tol {
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; dim];
        for (v, _) in simplex.iter().take(dim) {
            for i in 0..dim {
                centroid[i] += v[i] / dim as f64;
            }
        }

        let blend = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
            let mut out: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + t * (x - y)).collect();
            for i in 0..dim {
                out[i] = out[i].clamp(lo[i], hi[i]);
            }
            out
        };

        let reflected = blend(&centroid, &simplex[dim].0, alpha);
        let fr = eval(&reflected);

        if fr < simplex[0].1 {
            let expanded = blend(&centroid, &simplex[dim].0, gamma);
            let fe = eval(&expanded);
            simplex[dim] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (reflected, fr);
        } else {
            let contracted = blend(&centroid, &simplex[dim].0, -rho);
            let fc = eval(&contracted);
            if fc < simplex[dim].1 {
                simplex[dim] = (contracted, fc);
            } else {
                // Shrink toward the best vertex.
                let best_v = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let mut v: Vec<f64> = entry
                        .0
                        .iter()
                        .zip(&best_v)
                        .map(|(x, b)| b + sigma * (x - b))
                        .collect();
                    for i in 0..dim {
                        v[i] = v[i].clamp(lo[i], hi[i]);
                    }
                    let fv = eval(&v);
                    *entry = (v, fv);
                }
            }
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// Minimize over the unit cube from the given start.
pub fn nelder_mead_unit<F>(f: F, start: &[f64], opts: NmOptions) -> (Vec<f64>, f64)
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = start.len();
    nelder_mead_box(f, start, &vec![0.0; dim], &vec![1.0; dim], opts)
}
