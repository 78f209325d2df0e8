/// Central difference stencil order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    Second,
    Fourth,
}

impl Stencil {
    fn order(self) -> i32 {
        match self {
            Stencil::Second => 2,
            Stencil::Fourth => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Derivative {
    pub value: Vec<f64>,
    /// Richardson estimate |D(δ) − D(2δ)| / (2^p − 1), max over components.
    pub error_estimate: f64,
}

fn central<F: Fn(f64) -> Vec<f64>>(f: &F, x: f64, delta: f64, stencil: Stencil) -> Vec<f64> {
    match stencil {
        Stencil::Second => {
            let (p, m) = (f(x + delta), f(x - delta));
            p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * delta)).collect()
        }
        Stencil::Fourth => {
            let (p2, p1, m1, m2) = (f(x + 2.0 * delta), f(x + delta), f(x - delta), f(x - 2.0 * delta));
            (0..p1.len())
                .map(|i| (-p2[i] + 8.0 * p1[i] - 8.0 * m1[i] + m2[i]) / (12.0 * delta))
                .collect()
        }
    }
}

pub fn finite_difference<F: Fn(f64) -> Vec<f64>>(f: F, x: f64, delta: f64, stencil: Stencil) -> Derivative {
    let fine = central(&f, x, delta, stencil);
    let coarse = central(&f, x, 2.0 * delta, stencil);
    let denom = 2f64.powi(stencil.order()) - 1.0;
    let error_estimate = fine
        .iter()
        .zip(&coarse)
        .map(|(a, b)| (a - b).abs() / denom)
        .fold(0.0, f64::max);
    Derivative {
        value: fine,
        error_estimate,
    }
}

pub fn finite_difference_scalar<F: Fn(f64) -> f64>(f: F, x: f64, delta: f64, stencil: Stencil) -> (f64, f64) {
    let d = finite_difference(|t| vec![f(t)], x, delta, stencil);
    (d.value[0], d.error_estimate)
}
