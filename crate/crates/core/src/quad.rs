//! Globally adaptive Gauss–Kronrod (10/21 point) quadrature over a set of
//! breakpoints. Subdivision always starts from the breakpoint partition, so
//! coefficient kinks never fall inside a panel.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Tolerances shared by quadrature and propagation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Local error tolerance of the Runge–Kutta propagator.
    pub ode_tol: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-13,
            rel_tol: 1e-11,
            max_subdivisions: 2000,
            ode_tol: 1e-12,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.abs_tol) || !positive(self.rel_tol) || !positive(self.ode_tol) {
            return Err(Error::InvalidQuadConfig(
                "tolerances must be finite and strictly positive".into(),
            ));
        }
        if self.max_subdivisions < 8 {
            return Err(Error::InvalidQuadConfig(format!(
                "max_subdivisions must be at least 8, got {}",
                self.max_subdivisions
            )));
        }
        Ok(())
    }
}

// Kronrod abscissae (positive half, descending); odd entries are the Gauss points.
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_965_671_077,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// Gauss weights for XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
    error: f64,
    at_roundoff: bool,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
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
        // Panels stuck at roundoff sink to the bottom of the heap.
        (!self.at_roundoff)
            .cmp(&!other.at_roundoff)
            .then(self.error.total_cmp(&other.error))
    }
}

fn gk21<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Result<Panel> {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    if !fc.re.is_finite() || !fc.im.is_finite() {
        return Err(Error::NonFiniteIntegrand(centre));
    }
    let mut kronrod = fc * WGK[10];
    let mut gauss = Complex64::new(0.0, 0.0);
    let mut abs_sum = fc.norm() * WGK[10];
    let mut values = [(Complex64::default(), Complex64::default()); 10];
    for (j, &x) in XGK[..10].iter().enumerate() {
        let dx = half * x;
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        for (v, t) in [(f1, centre - dx), (f2, centre + dx)] {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::NonFiniteIntegrand(t));
            }
        }
        values[j] = (f1, f2);
        kronrod += (f1 + f2) * WGK[j];
        abs_sum += (f1.norm() + f2.norm()) * WGK[j];
        if j % 2 == 1 {
            gauss += (f1 + f2) * WG[j / 2];
        }
    }
    let mean = kronrod * 0.5;
    let mut asc = WGK[10] * (fc - mean).norm();
    for (j, (f1, f2)) in values.iter().enumerate() {
        asc += WGK[j] * ((f1 - mean).norm() + (f2 - mean).norm());
    }
    let result = kronrod * half;
    let res_abs = abs_sum * half.abs();
    let res_asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).norm();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * res_abs;
    let at_roundoff = error <= floor;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(floor);
    }
    Ok(Panel {
        a,
        b,
        value: result,
        error,
        at_roundoff,
    })
}

/// Integrates `f` over `[breaks[0], breaks[last]]`, never straddling a breakpoint.
pub fn integrate<F>(f: F, breaks: &[f64], cfg: &QuadConfig) -> Result<Complex64>
where
    F: Fn(f64) -> Complex64,
{
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            heap.push(gk21(&f, w[0], w[1])?);
        }
    }
    if heap.is_empty() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut splits = 0usize;
    loop {
        let total: Complex64 = heap.iter().map(|p| p.value).sum();
        let error: f64 = heap.iter().map(|p| p.error).sum();
        let target = cfg.abs_tol.max(cfg.rel_tol * total.norm());
        if error <= target {
            return Ok(total);
        }
        let worst = *heap.peek().expect("non-empty heap");
        if worst.at_roundoff {
            // Every remaining panel is limited by floating point cancellation.
            return Ok(total);
        }
        if splits >= cfg.max_subdivisions {
            return Err(Error::QuadratureNonConvergence {
                a: breaks[0],
                b: *breaks.last().unwrap(),
                subdivisions: splits,
                error,
            });
        }
        heap.pop();
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(Panel {
                at_roundoff: true,
                ..worst
            });
            continue;
        }
        heap.push(gk21(&f, worst.a, mid)?);
        heap.push(gk21(&f, mid, worst.b)?);
        splits += 1;
    }
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real<F>(f: F, breaks: &[f64], cfg: &QuadConfig) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    integrate(|t| Complex64::new(f(t), 0.0), breaks, cfg).map(|z| z.re)
}
