//! Adaptive Gauss-Kronrod (7/15) quadrature.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol` by recursive
/// bisection.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        // stop once the local error is at rounding level
        if err <= tol.max(1e-15 * v.abs()) || depth >= 40 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, 0.5 * tol, depth + 1) + rec(f, m, b, 0.5 * tol, depth + 1)
    }
    rec(f, a, b, tol, 0)
}

/// `J(s) = ∫_0^∞ u^{s-1} exp(-o u² + t u) du`, analytically continued to
/// `-1 < s < 0` by subtracting the `u → 0` singularity:
/// `∫_0^1 u^{s-1}(f(u) - 1) du + 1/s + ∫_1^∞ u^{s-1} f(u) du`.
pub fn moment_integral(s: f64, o: f64, t: f64) -> f64 {
    let f = |u: f64| (-o * u * u + t * u).exp();
    let tol = 1e-13;
    let head = if s > 0.0 {
        integrate(&|u: f64| u.powf(s - 1.0) * f(u), 0.0, 1.0, tol)
    } else {
        integrate(&|u: f64| u.powf(s - 1.0) * (f(u) - 1.0), 0.0, 1.0, tol) + 1.0 / s
    };
    // u = 1/v on the tail
    let tail = integrate(
        &|v: f64| if v == 0.0 { 0.0 } else { v.powf(-s - 1.0) * f(1.0 / v) },
        0.0,
        1.0,
        tol,
    );
    head + tail
}

/// `(E[μ⁻¹], E[μ⁻²])` of `q(μ) ∝ exp(-o μ⁻² + t μ⁻¹ + (ε-1) ln μ)` by
/// quadrature in `u = μ⁻¹`.
pub fn mu_moments(o: f64, t: f64, eps: f64) -> (f64, f64) {
    let den = moment_integral(-eps, o, t);
    (
        moment_integral(1.0 - eps, o, t) / den,
        moment_integral(2.0 - eps, o, t) / den,
    )
}

#[cfg(test)]
mod tests {
    #[test]
    fn gaussian_integral() {
        let v = super::integrate(&|x: f64| (-x * x).exp(), -8.0, 8.0, 1e-14);
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }
}
