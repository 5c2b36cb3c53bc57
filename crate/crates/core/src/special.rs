//! Bessel functions of the second kind `Y_nu`, their first positive zeros,
//! and the real Helmholtz kernel on `R^N`.
//!
//! Only the orders `nu = (N-2)/2` for integer dimensions `N in 2..=23` are
//! supported: integer orders come from double-double ascending series
//! (small `x`) or the Hankel modulus/phase expansion (large `x`) plus upward
//! recurrence; half-integer orders use the trigonometric closed forms plus
//! upward recurrence. Accuracy is ~1e-13 relative away from zeros for
//! `x in (0, 100]`.

use crate::dd::Dd;
use crate::error::{Error, Result};

/// Order of a Bessel function, restricted to the half-integers and integers
/// that occur as `(N-2)/2` for a space dimension `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BesselOrder {
    /// 2*nu, so half-integer orders stay exact.
    twice_nu: u32,
}

/// Largest supported `2*nu` (dimension `N = 23`, order 21/2).
const MAX_TWICE_NU: u32 = 21;

impl BesselOrder {
    /// Order from its value; must be a nonnegative integer or half-integer
    /// not exceeding 21/2.
    pub fn new(nu: f64) -> Result<Self> {
        let twice = 2.0 * nu;
        if !(twice.is_finite() && twice >= 0.0 && twice.fract() == 0.0) {
            return Err(Error::domain(format!(
                "order must be a nonnegative integer or half-integer, got nu = {nu}"
            )));
        }
        let twice_nu = twice as u32;
        if twice_nu > MAX_TWICE_NU {
            return Err(Error::domain(format!(
                "order nu = {nu} exceeds the supported maximum 21/2"
            )));
        }
        Ok(BesselOrder { twice_nu })
    }

    /// The order `(N-2)/2` attached to dimension `N`.
    pub fn from_dimension(dim: u32) -> Result<Self> {
        if !(2..=23).contains(&dim) {
            return Err(Error::domain(format!(
                "dimension must be in 2..=23, got {dim}"
            )));
        }
        Ok(BesselOrder { twice_nu: dim - 2 })
    }

    pub fn nu(self) -> f64 {
        self.twice_nu as f64 / 2.0
    }

    fn is_half_integer(self) -> bool {
        self.twice_nu % 2 == 1
    }
}

/// Ascending/asymptotic branch switch for the integer orders. Below this the
/// double-double series carries ~1e-19 absolute error; above it the Hankel
/// expansion truncates below 1e-15 relative.
const SERIES_ASYMPTOTIC_SWITCH: f64 = 36.0;

/// `Y_nu(x)` for `x > 0`.
pub fn bessel_y(order: BesselOrder, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("bessel_y requires x > 0, got {x}")));
    }
    if order.is_half_integer() {
        Ok(bessel_y_half_integer(order.twice_nu, x))
    } else {
        Ok(bessel_y_integer((order.twice_nu / 2) as usize, x))
    }
}

/// Closed forms for `Y_{1/2}` and `Y_{-1/2}` plus upward recurrence.
fn bessel_y_half_integer(twice_nu: u32, x: f64) -> f64 {
    let amp = (2.0 / (std::f64::consts::PI * x)).sqrt();
    let mut prev = amp * x.sin(); // Y_{-1/2}
    let mut cur = -amp * x.cos(); // Y_{+1/2}
    let steps = (twice_nu - 1) / 2;
    let mut nu = 0.5;
    for _ in 0..steps {
        let next = (2.0 * nu / x) * cur - prev;
        prev = cur;
        cur = next;
        nu += 1.0;
    }
    cur
}

fn bessel_y_integer(n: usize, x: f64) -> f64 {
    let (y0, y1) = if x < SERIES_ASYMPTOTIC_SWITCH {
        (y0_series(x), y1_series(x))
    } else {
        (y_asymptotic(0, x), y_asymptotic(1, x))
    };
    match n {
        0 => y0,
        1 => y1,
        _ => {
            let mut prev = y0;
            let mut cur = y1;
            for k in 1..n {
                let next = (2.0 * k as f64 / x) * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// `J_n(x)` for `n in {0, 1}` by the ascending series, in double-double.
fn j_series_dd(n: usize, x: f64) -> Dd {
    let half = Dd::from_f64(x * 0.5);
    let u = half.mul(half);
    let mut term = if n == 0 { Dd::from_f64(1.0) } else { half };
    let mut sum = term;
    for k in 1..300 {
        let denom = (k * (k + n)) as f64;
        term = term.mul(u).div_f64(denom).neg();
        sum = sum.add(term);
        if term.abs() < 1e-40 * (1.0 + sum.abs()) {
            break;
        }
    }
    sum
}

/// `Y_0` via the ascending series (DLMF 10.8.1), double-double accumulation.
fn y0_series(x: f64) -> f64 {
    let j0 = j_series_dd(0, x);
    let half = Dd::from_f64(x * 0.5);
    let u = half.mul(half);
    // sum_{k>=1} (-1)^{k+1} H_k u^k / (k!)^2
    let mut t = Dd::from_f64(1.0);
    let mut h = Dd::ZERO;
    let mut s = Dd::ZERO;
    for k in 1..300 {
        let kf = k as f64;
        t = t.mul(u).div_f64(kf * kf);
        h = h.add(Dd::from_f64(1.0).div_f64(kf));
        let term = t.mul(h);
        if k % 2 == 1 {
            s = s.add(term);
        } else {
            s = s.sub(term);
        }
        if term.abs() < 1e-40 * (1.0 + s.abs()) {
            break;
        }
    }
    let log_half_x = Dd::from_f64((x * 0.5).ln());
    let bracket = log_half_x.add(Dd::EULER_GAMMA).mul(j0).add(s);
    bracket.mul(Dd::from_f64(2.0).div(Dd::PI)).to_f64()
}

/// `Y_1` via the ascending series (DLMF 10.8.1), double-double accumulation.
fn y1_series(x: f64) -> f64 {
    let j1 = j_series_dd(1, x);
    let half = Dd::from_f64(x * 0.5);
    let u = half.mul(half);
    // sum_{k>=0} (psi(k+1) + psi(k+2)) (-u)^k / (k! (k+1)!)
    // with psi(k+1) = -gamma + H_k.
    let mut t = Dd::from_f64(1.0); // u^k / (k!(k+1)!)
    let mut h_k = Dd::ZERO;
    let mut h_k1 = Dd::from_f64(1.0);
    let two_gamma = Dd::EULER_GAMMA.mul_f64(2.0);
    let mut s = h_k.add(h_k1).sub(two_gamma); // k = 0 term
    for k in 1..300 {
        let kf = k as f64;
        t = t.mul(u).div_f64(kf * (kf + 1.0));
        h_k = h_k.add(Dd::from_f64(1.0).div_f64(kf));
        h_k1 = h_k1.add(Dd::from_f64(1.0).div_f64(kf + 1.0));
        let term = t.mul(h_k.add(h_k1).sub(two_gamma));
        if k % 2 == 1 {
            s = s.sub(term);
        } else {
            s = s.add(term);
        }
        if term.abs() < 1e-40 * (1.0 + s.abs()) {
            break;
        }
    }
    let log_half_x = Dd::from_f64((x * 0.5).ln());
    let inv_pi = Dd::PI.recip();
    let lead = log_half_x.mul(j1).mul(inv_pi).mul_f64(2.0);
    let pole = inv_pi.mul_f64(2.0).div_f64(x);
    let tail = half.mul(inv_pi).mul(s);
    lead.sub(pole).sub(tail).to_f64()
}

/// Hankel modulus/phase expansion for `Y_n`, `n in {0, 1}`, valid for large x.
fn y_asymptotic(n: usize, x: f64) -> f64 {
    let mu = 4.0 * (n * n) as f64;
    let mut c = 1.0; // signed term a_k(nu) / x^k
    let mut p = 1.0;
    let mut q = 0.0;
    let mut last = f64::INFINITY;
    for k in 0..60 {
        let kf = k as f64;
        c *= (mu - (2.0 * kf + 1.0).powi(2)) / (8.0 * x * (kf + 1.0));
        if c.abs() >= last {
            break; // asymptotic tail started to diverge
        }
        last = c.abs();
        let m = k + 1; // index of the term just computed
        if m % 2 == 0 {
            p += if m % 4 == 0 { c } else { -c };
        } else {
            q += if m % 4 == 1 { c } else { -c };
        }
        if c.abs() < 1e-18 {
            break;
        }
    }
    let amp = (2.0 / (std::f64::consts::PI * x)).sqrt();
    let (s, co) = (x.sin(), x.cos());
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    // chi = x - (2n+1) pi/4, expanded with exact +-1/sqrt(2) coefficients.
    let (sin_chi, cos_chi) = match n {
        0 => ((s - co) * inv_sqrt2, (s + co) * inv_sqrt2),
        _ => (-(s + co) * inv_sqrt2, (s - co) * inv_sqrt2),
    };
    amp * (p * sin_chi + q * cos_chi)
}

/// First positive zero `y_nu` of `Y_nu`, to absolute accuracy 1e-12.
///
/// Bracket by a sign-change scan (step 0.1 from 1e-3), then bisect. The step
/// is well below the spacing of `Y_nu` zeros for all supported orders.
pub fn first_positive_zero_y(order: BesselOrder) -> f64 {
    let f = |t: f64| bessel_y(order, t).expect("positive abscissa");
    let mut a = 1e-3;
    let mut fa = f(a);
    let mut b = a;
    loop {
        b += 0.1;
        let fb = f(b);
        if fa.signum() != fb.signum() {
            break;
        }
        a = b;
        fa = fb;
        assert!(b < 100.0, "no sign change found scanning Y_nu");
    }
    let mut lo = a;
    let mut hi = b;
    let mut flo = fa;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if flo.signum() != fm.signum() {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Real part of the outgoing Helmholtz fundamental solution at radius `r`
/// in dimension `dim`: `-(1/4) (2 pi r)^{(2-N)/2} Y_{(N-2)/2}(r)`.
pub fn psi_kernel(r: f64, dim: u32) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain(format!(
            "psi_kernel requires r > 0, got {r}"
        )));
    }
    let order = BesselOrder::from_dimension(dim)?;
    let y = bessel_y(order, r)?;
    let power = (2.0 * std::f64::consts::PI * r).powf((2.0 - dim as f64) / 2.0);
    Ok(-0.25 * power * y)
}

/// Leading small-r coefficient of the kernel: `psi(r) ~ c_N r^{2-N}` for
/// `N >= 3`; for `N = 2` the singularity is logarithmic and this returns the
/// prefactor of `-ln(r/2) - gamma` instead.
pub(crate) fn psi_singular_coefficient(dim: u32) -> f64 {
    let n = dim as f64;
    if dim == 2 {
        // psi ~ -(1/(2 pi)) (ln(r/2) + gamma)
        1.0 / (2.0 * std::f64::consts::PI)
    } else {
        // Gamma((N-2)/2) / (4 pi^{N/2})
        gamma_half_integer(dim - 2) / (4.0 * std::f64::consts::PI.powf(n / 2.0))
    }
}

/// Gamma(m/2) for positive integer m.
pub(crate) fn gamma_half_integer(m: u32) -> f64 {
    if m % 2 == 0 {
        // Gamma(k) = (k-1)!
        let k = m / 2;
        (1..k).map(|i| i as f64).product()
    } else {
        // Gamma(1/2 + j) = sqrt(pi) (2j-1)!! / 2^j
        let j = m / 2;
        let mut v = std::f64::consts::PI.sqrt();
        for i in 0..j {
            v *= (2 * i + 1) as f64 / 2.0;
        }
        v
    }
}
