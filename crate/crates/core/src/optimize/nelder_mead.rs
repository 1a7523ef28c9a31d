//! Box-constrained Nelder–Mead maximizer.
//!
//! Trial points leaving the box are folded back by reflection at the bounds;
//! periodic coordinates wrap instead.

use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub lo: f64,
    pub hi: f64,
    pub periodic: bool,
}

impl Bound {
    pub const fn closed(lo: f64, hi: f64) -> Self {
        Self { lo, hi, periodic: false }
    }

    pub const fn periodic(lo: f64, hi: f64) -> Self {
        Self { lo, hi, periodic: true }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn project(&self, v: f64) -> f64 {
        let w = self.width();
        if w <= 0.0 {
            return self.lo;
        }
        if self.periodic {
            let t = (v - self.lo).rem_euclid(w);
            return if t >= w { self.lo } else { self.lo + t };
        }
        if (self.lo..=self.hi).contains(&v) {
            return v;
        }
        // Triangle-wave fold with period 2w.
        let t = (v - self.lo).rem_euclid(2.0 * w);
        let folded = if t <= w { t } else { 2.0 * w - t };
        (self.lo + folded).clamp(self.lo, self.hi)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.width() <= 0.0 {
            return self.lo;
        }
        if self.periodic {
            rng.random_range(self.lo..self.hi)
        } else {
            rng.random_range(self.lo..=self.hi)
        }
    }
}

pub fn project(x: &mut [f64], bounds: &[Bound]) {
    for (v, b) in x.iter_mut().zip(bounds) {
        *v = b.project(*v);
    }
}

/// Fold closed coordinates only; periodic ones stay unwrapped so the simplex
/// keeps its shape across the seam.
fn fold_closed(x: &mut [f64], bounds: &[Bound]) {
    for (v, b) in x.iter_mut().zip(bounds) {
        if !b.periodic {
            *v = b.project(*v);
        }
    }
}

pub fn random_point<R: Rng + ?Sized>(bounds: &[Bound], rng: &mut R) -> Vec<f64> {
    bounds.iter().map(|b| b.sample(rng)).collect()
}

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    /// Stop once the spread of objective values over the simplex falls below this.
    pub ftol: f64,
    /// Initial edge length as a fraction of each coordinate's range.
    pub initial_step: f64,
    /// Number of times the simplex is rebuilt around the incumbent after
    /// convergence; a rebuild that yields no improvement ends the run early.
    pub rebuilds: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_iterations: 2000, ftol: 1e-9, initial_step: 0.1, rebuilds: 2 }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Maximize `f` over the box starting from `x0`.
pub fn maximize<F>(mut f: F, x0: &[f64], bounds: &[Bound], opts: &NelderMeadOptions) -> NelderMeadOutcome
where
    F: FnMut(&[f64]) -> f64,
{
    let mut x = x0.to_vec();
    project(&mut x, bounds);
    let mut value = f(&x);
    let mut iterations = 0;
    let mut converged = false;
    let mut step = opts.initial_step;

    for pass in 0..=opts.rebuilds {
        if iterations >= opts.max_iterations {
            break;
        }
        let run = simplex_run(
            &mut f,
            &x,
            bounds,
            step,
            opts.ftol,
            opts.max_iterations - iterations,
        );
        iterations += run.iterations;
        converged = run.converged;
        let improved = run.value > value + opts.ftol;
        if run.value >= value {
            x = run.x;
            value = run.value;
        }
        if pass > 0 && !improved {
            break;
        }
        step *= 0.1;
    }
    NelderMeadOutcome { x, value, iterations, converged }
}

fn simplex_run<F>(
    f: &mut F,
    x0: &[f64],
    bounds: &[Bound],
    step: f64,
    ftol: f64,
    budget: usize,
) -> NelderMeadOutcome
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    // Minimize the negated objective internally.
    let mut scratch = vec![0.0; n];
    let mut eval = |p: &[f64]| -> f64 {
        scratch.copy_from_slice(p);
        project(&mut scratch, bounds);
        let v = -f(&scratch);
        if v.is_nan() { f64::INFINITY } else { v }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut p = x0.to_vec();
        let h = step * bounds[i].width().max(1e-12);
        // Step inward when the outward vertex would fold onto the start point.
        p[i] = if !bounds[i].periodic && p[i] + h > bounds[i].hi { p[i] - h } else { p[i] + h };
        fold_closed(&mut p, bounds);
        let v = eval(&p);
        simplex.push((p, v));
    }

    let mut iterations = 0;
    let mut converged = false;
    while iterations < budget {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if (worst - best).abs() <= ftol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (p, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (w - c))
                .collect();
            fold_closed(&mut p, bounds);
            p
        };

        let xr = along(-1.0);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst {
            let xc = along(-0.5);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < worst.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        // Shrink toward the best vertex.
        let anchor = simplex[0].0.clone();
        for (p, v) in simplex.iter_mut().skip(1) {
            for (pi, ai) in p.iter_mut().zip(&anchor) {
                *pi = ai + 0.5 * (*pi - ai);
            }
            fold_closed(p, bounds);
            *v = eval(p);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (mut x, v) = simplex.swap_remove(0);
    project(&mut x, bounds);
    NelderMeadOutcome { x, value: -v, iterations, converged }
}
