//! Derivative-free maximization used by the M-steps.
//!
//! A deterministic Nelder-Mead simplex; the objectives here are smooth,
//! low-dimensional (2 or 5 parameters) quadrature integrals, so a bounded
//! number of iterations per call is enough for the generalized-EM argument
//! (the returned point is never worse than the starting point).

/// Maximize `f` starting from `x0`. Returns `(argmax, max)` over every point
/// the simplex evaluated, which always includes `x0` itself.
pub(crate) fn nelder_mead_max(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let neg = |x: &[f64]| -f(x);
    let (x, v) = nelder_mead_min(neg, x0, step, max_iter);
    (x, -v)
}

fn nelder_mead_min(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    step: f64,
    max_iter: usize,
) -> (Vec<f64>, f64) {
    let n = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = f(&x);
        simplex.push((x, v));
    }

    let mut best = simplex[0].clone();
    for s in &simplex {
        if s.1 < best.1 {
            best = s.clone();
        }
    }

    for _ in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 < best.1 {
            best = simplex[0].clone();
        }
        if (simplex[n].1 - simplex[0].1).abs() < 1e-12 {
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; n];
        for (x, _) in simplex.iter().take(n) {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let lerp = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let reflected = lerp(1.0);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = lerp(2.0);
            let fe = f(&expanded);
            simplex[n] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let contracted = if fr < worst.1 { lerp(0.5) } else { lerp(-0.5) };
            let fc = f(&contracted);
            if fc < worst.1.min(fr) {
                simplex[n] = (contracted, fc);
            } else {
                // Shrink toward the best vertex.
                let anchor = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = anchor
                        .iter()
                        .zip(&entry.0)
                        .map(|(a, b)| a + 0.5 * (b - a))
                        .collect();
                    let v = f(&x);
                    *entry = (x, v);
                }
            }
        }
    }

    for s in &simplex {
        if s.1 < best.1 {
            best = s.clone();
        }
    }
    best
}

/// Central-difference Hessian of a 2-argument function.
pub(crate) fn fd_hessian2(f: impl Fn(f64, f64) -> f64, x: f64, y: f64, h: f64) -> [[f64; 2]; 2] {
    let fxx = (f(x + h, y) - 2.0 * f(x, y) + f(x - h, y)) / (h * h);
    let fyy = (f(x, y + h) - 2.0 * f(x, y) + f(x, y - h)) / (h * h);
    let fxy =
        (f(x + h, y + h) - f(x + h, y - h) - f(x - h, y + h) + f(x - h, y - h)) / (4.0 * h * h);
    [[fxx, fxy], [fxy, fyy]]
}
