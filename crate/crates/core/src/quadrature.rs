//! Globally adaptive Gauss–Kronrod (7/15-point) integration on finite
//! intervals, with the QUADPACK error heuristic.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Accuracy requested from the rate integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Governs where the semi-infinite integrals are truncated.
    pub tail_epsilon: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-12,
            tail_epsilon: 1e-12,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        for (field, value) in [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("tail_epsilon", self.tail_epsilon),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParam {
                    field,
                    value,
                    bound: "strictly positive",
                });
            }
        }
        Ok(())
    }

    /// Tolerance actually honoured for an integral of magnitude `value`.
    pub fn tolerance_for(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

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
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gauss_kronrod_15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = kronrod.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = kronrod * half;
    let abs_sum = abs_sum * half.abs();
    let asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    if abs_sum > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * abs_sum);
    }
    Panel {
        a,
        b,
        value: result,
        error,
    }
}

/// Integrate `f` over `[a, b]` until the summed error estimate falls below
/// `max(abs_tol, rel_tol |I|)`, bisecting the worst panel each step.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<Integral> {
    if a == b {
        return Ok(Integral {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        });
    }
    let first = gauss_kronrod_15(&mut f, a, b);
    let mut evaluations = 15;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    let mut value = first.value;
    let mut error = first.error;
    while error > abs_tol.max(rel_tol * value.abs()) {
        if heap.len() >= max_panels {
            return Err(Error::Convergence {
                value,
                abs_error: error,
                tolerance: abs_tol.max(rel_tol * value.abs()),
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // panel cannot be split further in floating point
            heap.push(worst);
            return Err(Error::Convergence {
                value,
                abs_error: error,
                tolerance: abs_tol.max(rel_tol * value.abs()),
            });
        }
        let left = gauss_kronrod_15(&mut f, worst.a, mid);
        let right = gauss_kronrod_15(&mut f, mid, worst.b);
        evaluations += 30;
        heap.push(left);
        heap.push(right);
        // resum from scratch so rounding drift never builds up
        value = heap.iter().map(|p| p.value).sum();
        error = heap.iter().map(|p| p.error).sum();
    }
    Ok(Integral {
        value,
        abs_error: error,
        evaluations,
    })
}
