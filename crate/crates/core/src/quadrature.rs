//! Adaptive Simpson quadrature over a partition of the integration range.
//!
//! Integrands may be vector valued (`[T; K]`): all components share one
//! subdivision and a panel is accepted only once every component meets its
//! tolerance. Breakpoints let callers put panel edges at known features so the
//! initial five-point samples cannot step over a narrow peak.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions<T> {
    /// Absolute tolerance over the whole range, split across panels by width.
    pub abs_tol: T,
    pub max_depth: u32,
    /// Hard cap on integrand evaluations.
    pub max_evals: usize,
}

impl<T: Scalar> Default for QuadOptions<T> {
    fn default() -> Self {
        QuadOptions {
            abs_tol: T::quad_tolerance(),
            max_depth: 40,
            max_evals: 4_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Integral<T, const K: usize> {
    pub value: [T; K],
    /// Sum of the Richardson error estimates of the accepted panels.
    pub error: [T; K],
    pub evals: usize,
}

struct Ctx<'a, T, F, const K: usize> {
    f: &'a F,
    opts: QuadOptions<T>,
    evals: usize,
    failed: bool,
    value: [T; K],
    error: [T; K],
}

impl<T, F, const K: usize> Ctx<'_, T, F, K>
where
    T: Scalar,
    F: Fn(T) -> [T; K],
{
    fn eval(&mut self, x: T) -> [T; K] {
        self.evals += 1;
        (self.f)(x)
    }

    #[allow(clippy::too_many_arguments)]
    fn refine(
        &mut self,
        a: T,
        fa: [T; K],
        m: T,
        fm: [T; K],
        b: T,
        fb: [T; K],
        whole: [T; K],
        tol: T,
        depth: u32,
    ) {
        let two = T::lit(2.0);
        let lm = (a + m) / two;
        let rm = (m + b) / two;
        let flm = self.eval(lm);
        let frm = self.eval(rm);
        let left = simpson(a, m, &fa, &flm, &fm);
        let right = simpson(m, b, &fm, &frm, &fb);
        let fifteen = T::lit(15.0);

        let mut delta = [T::zero(); K];
        let mut ok = true;
        for k in 0..K {
            delta[k] = left[k] + right[k] - whole[k];
            if !(delta[k].abs() <= fifteen * tol) {
                ok = false;
            }
        }
        // Stop refining once the midpoints no longer separate.
        let exhausted = lm <= a || lm >= m || rm <= m || rm >= b;
        let out_of_budget = depth >= self.opts.max_depth || self.evals >= self.opts.max_evals;
        if ok || exhausted || out_of_budget {
            if !ok && !exhausted {
                self.failed = true;
            }
            for k in 0..K {
                self.value[k] = self.value[k] + left[k] + right[k] + delta[k] / fifteen;
                self.error[k] = self.error[k] + delta[k].abs() / fifteen;
            }
            return;
        }
        let half = tol / two;
        self.refine(a, fa, lm, flm, m, fm, left, half, depth + 1);
        self.refine(m, fm, rm, frm, b, fb, right, half, depth + 1);
    }
}

fn simpson<T: Scalar, const K: usize>(a: T, b: T, fa: &[T; K], fm: &[T; K], fb: &[T; K]) -> [T; K] {
    let h = (b - a) / T::lit(6.0);
    let four = T::lit(4.0);
    let mut out = [T::zero(); K];
    for k in 0..K {
        out[k] = h * (fa[k] + four * fm[k] + fb[k]);
    }
    out
}

/// Integrates `f` over `[points[0], points[last]]`, treating every interior
/// point as a panel edge. `points` must be sorted; duplicates are skipped.
pub fn integrate_panels<T, F, const K: usize>(
    f: F,
    points: &[T],
    opts: QuadOptions<T>,
) -> Result<Integral<T, K>>
where
    T: Scalar,
    F: Fn(T) -> [T; K],
{
    let mut ctx = Ctx {
        f: &f,
        opts,
        evals: 0,
        failed: false,
        value: [T::zero(); K],
        error: [T::zero(); K],
    };
    if points.len() < 2 {
        return Ok(Integral {
            value: ctx.value,
            error: ctx.error,
            evals: 0,
        });
    }
    let total = points[points.len() - 1] - points[0];
    if !(total > T::zero()) {
        return Ok(Integral {
            value: ctx.value,
            error: ctx.error,
            evals: 0,
        });
    }
    let two = T::lit(2.0);
    let mut a = points[0];
    let mut fa = ctx.eval(a);
    for &b in &points[1..] {
        if !(b > a) {
            continue;
        }
        let m = (a + b) / two;
        let fm = ctx.eval(m);
        let fb = ctx.eval(b);
        let whole = simpson(a, b, &fa, &fm, &fb);
        let tol = opts.abs_tol * (b - a) / total;
        ctx.refine(a, fa, m, fm, b, fb, whole, tol, 1);
        a = b;
        fa = fb;
    }
    let estimate = ctx
        .error
        .iter()
        .fold(0.0f64, |acc, e| acc.max(e.as_f64()));
    if ctx.failed {
        return Err(Error::Numerical {
            message: format!(
                "adaptive Simpson did not converge (depth {} / {} evaluations)",
                opts.max_depth, ctx.evals
            ),
            estimate,
        });
    }
    Ok(Integral {
        value: ctx.value,
        error: ctx.error,
        evals: ctx.evals,
    })
}

/// Scalar integral of `f` over `[a, b]`.
pub fn integrate<T, F>(f: F, a: T, b: T, opts: QuadOptions<T>) -> Result<Integral<T, 1>>
where
    T: Scalar,
    F: Fn(T) -> T,
{
    integrate_panels(|x| [f(x)], &[a, b], opts)
}

/// `a..=b` split into `panels` equal pieces.
pub fn uniform_points<T: Scalar>(a: T, b: T, panels: usize) -> Vec<T> {
    let panels = panels.max(1);
    let step = (b - a) / T::lit(panels as f64);
    let mut pts: Vec<T> = (0..panels).map(|i| a + step * T::lit(i as f64)).collect();
    pts.push(b);
    pts
}
