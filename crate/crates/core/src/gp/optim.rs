//! Box-constrained Nelder-Mead with restarts.

use std::sync::atomic::{AtomicUsize, Ordering};

#[derive(Debug, Clone)]
pub struct NelderMeadOptions {
    /// Hard cap on objective evaluations across all restarts.
    pub max_evals: usize,
    /// Stop restarting once a full cycle improves the objective by less than this.
    pub restart_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_evals: 10_000, restart_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub restarts: usize,
    pub converged: bool,
}

struct Counted<'a, F> {
    f: F,
    evals: usize,
    progress: Option<&'a AtomicUsize>,
}

impl<F: FnMut(&[f64]) -> f64> Counted<'_, F> {
    fn call(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        if let Some(p) = self.progress {
            p.fetch_add(1, Ordering::Relaxed);
        }
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, &lo), &hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(lo, hi);
    }
}

/// Minimise `f` over the box `[lower, upper]` starting from `x0`.
///
/// Trial points are projected onto the box. Each cycle starts a fresh simplex
/// at the incumbent with edge lengths `steps`; cycles repeat until one improves
/// the objective by less than `restart_tol` or the evaluation budget runs out.
/// Coefficients adapt to the dimension. `progress`, when given, is incremented
/// once per evaluation.
pub fn minimize_bounded<F>(
    f: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    steps: &[f64],
    opts: &NelderMeadOptions,
    progress: Option<&AtomicUsize>,
) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert!(lower.len() == n && upper.len() == n && steps.len() == n);
    let mut obj = Counted { f, evals: 0, progress };
    let mut best = x0.to_vec();
    project(&mut best, lower, upper);
    let mut best_v = obj.call(&best);
    let mut restarts = 0;
    let mut converged = false;
    while obj.evals < opts.max_evals {
        let (x, v) = cycle(&mut obj, &best, best_v, lower, upper, steps, opts.max_evals);
        let improvement = best_v - v;
        if v < best_v || (best_v.is_infinite() && v.is_finite()) {
            best = x;
            best_v = v;
        }
        if improvement.is_finite() && improvement < opts.restart_tol {
            converged = true;
            break;
        }
        restarts += 1;
    }
    Minimum { x: best, value: best_v, evaluations: obj.evals, restarts, converged }
}

fn cycle<F: FnMut(&[f64]) -> f64>(
    obj: &mut Counted<'_, F>,
    start: &[f64],
    start_v: f64,
    lower: &[f64],
    upper: &[f64],
    steps: &[f64],
    max_evals: usize,
) -> (Vec<f64>, f64) {
    let n = start.len();
    let nf = n as f64;
    let (alpha, gamma) = (1.0, 1.0 + 2.0 / nf);
    let (rho, shrink) = (0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);
    let (rho, shrink) = if n == 1 { (0.5, 0.5) } else { (rho, shrink) };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((start.to_vec(), start_v));
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += steps[i];
        if p[i] > upper[i] {
            p[i] = start[i] - steps[i];
        }
        project(&mut p, lower, upper);
        if p[i] == start[i] {
            // zero-width box in this coordinate
            p[i] = start[i];
        }
        let v = obj.call(&p);
        simplex.push((p, v));
    }

    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if obj.evals >= max_evals || stalled(&simplex) {
            break;
        }
        centroid.iter_mut().for_each(|c| *c = 0.0);
        for (p, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / nf;
            }
        }
        let point = |coef: f64, trial: &mut Vec<f64>, worst: &[f64]| {
            for j in 0..n {
                trial[j] = centroid[j] + coef * (centroid[j] - worst[j]);
            }
            project(trial, lower, upper);
        };
        let worst = simplex[n].0.clone();
        let (fb, fsw, fw) = (simplex[0].1, simplex[n - 1].1, simplex[n].1);

        point(alpha, &mut trial, &worst);
        let fr = obj.call(&trial);
        if fr < fb {
            let reflected = trial.clone();
            point(alpha * gamma, &mut trial, &worst);
            let fe = obj.call(&trial);
            simplex[n] = if fe < fr { (trial.clone(), fe) } else { (reflected, fr) };
            continue;
        }
        if fr < fsw {
            simplex[n] = (trial.clone(), fr);
            continue;
        }
        let (coef, reference) = if fr < fw { (alpha * rho, fr) } else { (-rho, fw) };
        point(coef, &mut trial, &worst);
        let fc = obj.call(&trial);
        if fc < reference {
            simplex[n] = (trial.clone(), fc);
            continue;
        }
        let b = simplex[0].0.clone();
        for (p, v) in simplex.iter_mut().skip(1) {
            for j in 0..n {
                p[j] = b[j] + shrink * (p[j] - b[j]);
            }
            *v = obj.call(p);
        }
    }
    let (x, v) = simplex.swap_remove(0);
    (x, v)
}

fn stalled(simplex: &[(Vec<f64>, f64)]) -> bool {
    let fb = simplex[0].1;
    let fw = simplex[simplex.len() - 1].1;
    if !fb.is_finite() || !fw.is_finite() {
        return false;
    }
    let fspread = fw - fb <= 1e-11 * (1.0 + fb.abs());
    let best = &simplex[0].0;
    let xspread = simplex.iter().skip(1).all(|(p, _)| {
        p.iter().zip(best).all(|(a, b)| (a - b).abs() <= 1e-9 * (1.0 + b.abs()))
    });
    fspread && xspread || xspread && simplex.iter().all(|(_, v)| *v == fb)
}
