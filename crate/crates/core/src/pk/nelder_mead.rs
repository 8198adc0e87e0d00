//! Unconstrained Nelder-Mead on f64 coordinates.

/// Stopping and step settings for one simplex run.
#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    /// Initial offset along each axis.
    pub step: f64,
    /// Stop once every vertex lies within this distance of the best one.
    pub diameter_tol: f64,
    pub max_iterations: u64,
}

#[derive(Clone, Debug)]
pub struct SimplexOutcome {
    pub x: Vec<f64>,
    pub fx: f64,
    pub iterations: u64,
    pub evaluations: u64,
    /// The diameter criterion was met (as opposed to running out of iterations).
    pub converged: bool,
}

fn diameter(simplex: &[Vec<f64>]) -> f64 {
    let best = &simplex[0];
    simplex[1..]
        .iter()
        .map(|v| {
            v.iter()
                .zip(best)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

fn along(from: &[f64], to: &[f64], t: f64) -> Vec<f64> {
    from.iter().zip(to).map(|(f, g)| f + t * (g - f)).collect()
}

/// Minimizes `f` from `x0`. Non-finite values of `f` count as +∞, so the
/// simplex backs away from them.
///
/// Coefficients follow Gao & Han's dimension-adapted choice, which keeps
/// the method from stalling in five or more dimensions.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &SimplexOptions) -> SimplexOutcome
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let nf = n as f64;
    let reflect = 1.0;
    let expand = 1.0 + 2.0 / nf;
    let contract = 0.75 - 1.0 / (2.0 * nf);
    let shrink = 1.0 - 1.0 / nf;

    let mut evaluations = 0u64;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += opts.step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();

    let mut iterations = 0u64;
    let mut converged = false;
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        if diameter(&simplex) < opts.diameter_tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / nf;
            }
        }
        let worst = simplex[n].clone();
        let xr = along(&centroid, &worst, -reflect);
        let fr = eval(&xr);
        if fr < values[0] {
            let xe = along(&centroid, &worst, -expand);
            let fe = eval(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        // contraction, outside when the reflection beat the worst vertex
        let (xc, fc) = if fr < values[n] {
            let xc = along(&centroid, &xr, contract);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(&centroid, &worst, contract);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < fr.min(values[n]) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=n {
            simplex[i] = along(&best, &simplex[i], shrink);
            values[i] = eval(&simplex[i]);
        }
    }

    SimplexOutcome {
        x: simplex[0].clone(),
        fx: values[0],
        iterations,
        evaluations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(tol: f64) -> SimplexOptions {
        SimplexOptions {
            step: 0.5,
            diameter_tol: tol,
            max_iterations: 20_000,
        }
    }

    #[test]
    fn quadratic_bowl() {
        let r = minimize(
            |x| (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2),
            &[0.0, 0.0],
            &opts(1e-10),
        );
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-9);
        assert!((r.x[1] + 2.0).abs() < 1e-9);
    }

    #[test]
    fn rosenbrock_5d() {
        let f = |x: &[f64]| {
            x.windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
                .sum::<f64>()
        };
        let r = minimize(f, &[-1.0, 0.5, -0.5, 1.5, 0.0], &opts(1e-10));
        assert!(r.converged);
        for v in &r.x {
            assert!((v - 1.0).abs() < 1e-6, "{:?}", r.x);
        }
    }

    #[test]
    fn iteration_cap_is_not_convergence() {
        let r = minimize(|x| x[0] * x[0] + x[1] * x[1], &[3.0, 4.0], &SimplexOptions {
            step: 1.0,
            diameter_tol: 1e-12,
            max_iterations: 5,
        });
        assert!(!r.converged);
        assert_eq!(r.iterations, 5);
    }

    #[test]
    fn avoids_non_finite_region() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::NAN } else { (x[0] - 0.1).powi(2) + x[1] * x[1] };
        let r = minimize(f, &[1.0, 1.0], &opts(1e-10));
        assert!((r.x[0] - 0.1).abs() < 1e-8);
    }
}
