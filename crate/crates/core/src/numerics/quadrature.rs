//! Adaptive Gauss-Kronrod (7/15) quadrature and the trapezoidal rule.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5, 7.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_DEPTH: u32 = 40;

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Sum of the per-panel Gauss/Kronrod discrepancies.
    pub error: f64,
    pub panels: usize,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    whole: (f64, f64),
    tol: f64,
    depth: u32,
    acc: &mut Integral,
) -> Result<()> {
    let (value, error) = whole;
    if error <= tol || (b - a).abs() < 1e-13 * a.abs().max(b.abs()).max(1.0) {
        acc.value += value;
        acc.error += error;
        acc.panels += 1;
        return Ok(());
    }
    if depth >= MAX_DEPTH {
        return Err(Error::Convergence(format!(
            "quadrature on [{a:.6e}, {b:.6e}] still has error estimate {error:.3e} \
             (target {tol:.3e}) after {depth} bisections"
        )));
    }
    let mid = 0.5 * (a + b);
    let left = gk15(f, a, mid);
    let right = gk15(f, mid, b);
    adapt(f, a, mid, left, 0.5 * tol, depth + 1, acc)?;
    adapt(f, mid, b, right, 0.5 * tol, depth + 1, acc)
}

/// Integrate `f` over `[a, b]` to absolute error `abs_tol`, bisecting panels
/// whose Gauss/Kronrod estimates disagree.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<Integral> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain("quadrature limits must be finite".into()));
    }
    let mut acc = Integral { value: 0.0, error: 0.0, panels: 0 };
    let whole = gk15(&f, a, b);
    adapt(&f, a, b, whole, abs_tol, 0, &mut acc)?;
    Ok(acc)
}

/// Trapezoidal rule for samples on a uniform grid of spacing `dx`.
pub fn trapezoid(samples: &[f64], dx: f64) -> f64 {
    match samples.len() {
        0 | 1 => 0.0,
        n => {
            let interior: f64 = samples[1..n - 1].iter().sum();
            dx * (interior + 0.5 * (samples[0] + samples[n - 1]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let r = integrate(|x| x.powi(5) - 2.0 * x, 0.0, 2.0, 1e-14).unwrap();
        assert!((r.value - (64.0 / 6.0 - 4.0)).abs() < 1e-13);
    }

    #[test]
    fn gaussian_tail() {
        let r = integrate(|x: f64| (-x * x).exp(), 0.0, 12.0, 1e-13).unwrap();
        assert!((r.value - 0.5 * std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn reports_non_convergence() {
        let err = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-300).unwrap_err();
        assert!(matches!(err, Error::Convergence(_)));
    }

    #[test]
    fn trapezoid_linear() {
        let xs: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        assert!((trapezoid(&xs, 0.1) - 0.5).abs() < 1e-15);
        assert_eq!(trapezoid(&[1.0], 0.1), 0.0);
    }
}
