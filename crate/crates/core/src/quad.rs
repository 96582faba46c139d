//! Adaptive one-dimensional quadrature on top of the double-exponential rule.

use quadrature::double_exponential;

const MAX_DEPTH: u32 = 24;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

impl std::ops::Add for Integral {
    type Output = Integral;

    fn add(self, o: Integral) -> Integral {
        Integral {
            value: self.value + o.value,
            error: self.error + o.error,
        }
    }
}

/// `∫_a^b f`, bisecting until each piece meets its share of `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Integral {
    bisect(f, a, b, tol, 0)
}

fn bisect<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> Integral {
    let out = double_exponential::integrate(f, a, b, tol);
    let floor = 64.0 * f64::EPSILON * out.integral.abs();
    if out.error_estimate <= tol.max(floor) || depth >= MAX_DEPTH {
        return Integral {
            value: out.integral,
            error: out.error_estimate,
        };
    }
    let mid = 0.5 * (a + b);
    bisect(f, a, mid, 0.5 * tol, depth + 1) + bisect(f, mid, b, 0.5 * tol, depth + 1)
}

/// `∫_0^∞ f(x) dx` for an integrand whose mass sits near `scale`.
pub fn integrate_half_line_scaled<F: Fn(f64) -> f64>(f: &F, scale: f64, tol: f64) -> Integral {
    let r = integrate_half_line(&|u: f64| f(scale * u), tol / scale);
    Integral {
        value: scale * r.value,
        error: scale * r.error,
    }
}

/// `∫_0^∞ f`, as `∫_0^1 f(x) dx + ∫_0^1 f(1/t) / t^2 dt`.
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: &F, tol: f64) -> Integral {
    let head = integrate(f, 0.0, 1.0, 0.5 * tol);
    let tail = integrate(
        &|t: f64| {
            if t <= 0.0 {
                0.0
            } else {
                f(1.0 / t) / (t * t)
            }
        },
        0.0,
        1.0,
        0.5 * tol,
    );
    head + tail
}
