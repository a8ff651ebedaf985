//! Adaptive Simpson quadrature and cumulative integral tables.

/// Adaptive composite Simpson integration of `f` over `[a, b]` with
/// absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

const MAX_DEPTH: u32 = 40;

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// A cumulative integral `t -> \int_0^t f(s) ds` built once by adaptive
/// subdivision so that later point queries are cheap.
///
/// The table stores panel boundaries on which the adaptive rule
/// converged; a query locates its panel and finishes with a three-point
/// Simpson step from the panel start.
pub struct CumulativeIntegral {
    knots: Vec<f64>,
    cumulative: Vec<f64>,
}

impl CumulativeIntegral {
    pub fn build<F: Fn(f64) -> f64>(f: &F, upper: f64, tol: f64) -> CumulativeIntegral {
        let mut knots = vec![0.0];
        let mut cumulative = vec![0.0];
        if upper > 0.0 {
            let fa = f(0.0);
            let fb = f(upper);
            let m = 0.5 * upper;
            let fm = f(m);
            let whole = simpson(0.0, upper, fa, fm, fb);
            build_panels(
                f,
                0.0,
                upper,
                fa,
                fm,
                fb,
                whole,
                tol,
                MAX_DEPTH,
                &mut knots,
                &mut cumulative,
            );
        }
        CumulativeIntegral { knots, cumulative }
    }

    pub fn upper(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    /// Integral from 0 to `t`; `t` is clamped to the built range.
    pub fn value<F: Fn(f64) -> f64>(&self, f: &F, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let t = t.min(self.upper());
        // Panel containing t: last knot <= t.
        let idx = match self.knots.binary_search_by(|k| k.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.cumulative[i],
            Err(i) => i - 1,
        };
        let a = self.knots[idx];
        let base = self.cumulative[idx];
        if t <= a {
            return base;
        }
        let m = 0.5 * (a + t);
        base + simpson(a, t, f(a), f(m), f(t))
    }
}

#[allow(clippy::too_many_arguments)]
fn build_panels<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    knots: &mut Vec<f64>,
    cumulative: &mut Vec<f64>,
) {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        // Keep both halves as panels so point queries stay accurate.
        let last = *cumulative.last().unwrap();
        knots.push(m);
        cumulative.push(last + left);
        knots.push(b);
        cumulative.push(last + left + right + delta / 15.0);
    } else {
        build_panels(
            f,
            a,
            m,
            fa,
            flm,
            fm,
            left,
            0.5 * tol,
            depth - 1,
            knots,
            cumulative,
        );
        build_panels(
            f,
            m,
            b,
            fm,
            frm,
            fb,
            right,
            0.5 * tol,
            depth - 1,
            knots,
            cumulative,
        );
    }
}
