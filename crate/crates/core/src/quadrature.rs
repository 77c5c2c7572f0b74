//! Gauss quadrature on the unit segment and on the reference triangle.
//!
//! Triangle rules are collapsed (Duffy) tensor products of Gauss–Legendre
//! rules, so every exactness up to the cap is available with strictly
//! positive weights and interior points.

use crate::error::{Error, Result};
use crate::scalar::{Real, Vec2};

/// Highest polynomial exactness served by [`quadrature_rule`].
pub const MAX_EXACTNESS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    /// Reference triangle with vertices (0,0), (1,0), (0,1); measure 1/2.
    Triangle,
    /// Unit segment [0, 1]; measure 1.
    Segment,
}

/// Points and weights on a reference domain.
///
/// Segment rules store the abscissa in the first coordinate and zero in the
/// second.
#[derive(Clone, Debug)]
pub struct QuadratureRule<T> {
    pub domain: Domain,
    pub points: Vec<Vec2<T>>,
    pub weights: Vec<T>,
    pub exactness: usize,
}

impl<T: Real> QuadratureRule<T> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Iterates over `(point, weight)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (Vec2<T>, T)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }

    /// Iterates over `(s, weight)` for a segment rule.
    pub fn segment_iter(&self) -> impl Iterator<Item = (T, T)> + '_ {
        debug_assert_eq!(self.domain, Domain::Segment);
        self.points.iter().map(|p| p[0]).zip(self.weights.iter().copied())
    }

    pub fn integrate(&self, f: impl Fn(Vec2<T>) -> T) -> T {
        self.iter().map(|(p, w)| w * f(p)).sum()
    }
}

/// Returns a rule on `domain` integrating polynomials of total degree up to
/// `exactness` exactly.
pub fn quadrature_rule<T: Real>(domain: Domain, exactness: usize) -> Result<QuadratureRule<T>> {
    if exactness > MAX_EXACTNESS {
        return Err(Error::UnsupportedExactness(exactness));
    }
    Ok(match domain {
        Domain::Segment => {
            let n = exactness / 2 + 1;
            let (x, w) = gauss_legendre_unit::<T>(n);
            QuadratureRule {
                domain,
                points: x.into_iter().map(|s| [s, T::zero()]).collect(),
                weights: w,
                exactness,
            }
        }
        Domain::Triangle => {
            // The collapsed direction carries an extra factor (1 - u).
            let (xu, wu_all) = gauss_legendre_unit::<T>(exactness.div_ceil(2) + 1);
            let (xv, wv_all) = gauss_legendre_unit::<T>(exactness / 2 + 1);
            let mut points = Vec::with_capacity(xu.len() * xv.len());
            let mut weights = Vec::with_capacity(xu.len() * xv.len());
            for (&u, &wu) in xu.iter().zip(&wu_all) {
                for (&v, &wv) in xv.iter().zip(&wv_all) {
                    let one_minus_u = T::one() - u;
                    points.push([u, one_minus_u * v]);
                    weights.push(wu * wv * one_minus_u);
                }
            }
            QuadratureRule {
                domain,
                points,
                weights,
                exactness,
            }
        }
    })
}

/// Gauss–Legendre nodes and weights with `n` points mapped to [0, 1].
pub fn gauss_legendre_unit<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1);
    let half = T::lit(0.5);
    let mut nodes = vec![T::zero(); n];
    let mut weights = vec![T::zero(); n];
    let nf = T::from_usize_lossy(n);
    for i in 0..n.div_ceil(2) {
        let mut x = (T::pi() * (T::from_usize_lossy(i) + T::lit(0.75)) / (nf + half)).cos();
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= T::default_epsilon() * T::lit(4.0) {
                let (_, d) = legendre_with_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = T::lit(2.0) / ((T::one() - x * x) * dp * dp);
        // Node x on [-1, 1] maps to (1 - x)/2 on [0, 1]; weights halve.
        nodes[i] = (T::one() - x) * half;
        nodes[n - 1 - i] = (T::one() + x) * half;
        weights[i] = w * half;
        weights[n - 1 - i] = w * half;
    }
    (nodes, weights)
}

/// Value and derivative of the Legendre polynomial `P_n` at `x ∈ [-1, 1]`.
fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    if n == 0 {
        return (p0, T::zero());
    }
    for k in 2..=n {
        let kf = T::from_usize_lossy(k);
        let p2 = ((T::lit(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = T::from_usize_lossy(n);
    (p1, nf * (x * p1 - p0) / (x * x - T::one()))
}

/// Shifted Legendre polynomials `P_k(2s - 1)` for `k = 0..=degree` on [0, 1].
pub fn shifted_legendre<T: Real>(degree: usize, s: T) -> Vec<T> {
    let x = T::lit(2.0) * s - T::one();
    let mut out = Vec::with_capacity(degree + 1);
    out.push(T::one());
    if degree >= 1 {
        out.push(x);
    }
    for k in 2..=degree {
        let kf = T::from_usize_lossy(k);
        let next = ((T::lit(2.0) * kf - T::one()) * x * out[k - 1] - (kf - T::one()) * out[k - 2]) / kf;
        out.push(next);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn triangle_constant_has_half_measure() {
        let r = quadrature_rule::<f64>(Domain::Triangle, 1).unwrap();
        let s: f64 = r.weights.iter().sum();
        assert!((s - 0.5).abs() < 1e-15);
    }

    #[test]
    fn segment_cubic() {
        let r = quadrature_rule::<f64>(Domain::Segment, 3).unwrap();
        let v: f64 = r.segment_iter().map(|(s, w)| w * s.powi(3)).sum();
        assert!((v - 0.25).abs() < 1e-14);
    }

    #[test]
    fn triangle_x2y2() {
        for p in 4..=8 {
            let r = quadrature_rule::<f64>(Domain::Triangle, p).unwrap();
            let v = r.integrate(|x| x[0] * x[0] * x[1] * x[1]);
            assert!((v - 1.0 / 180.0).abs() < 1e-15, "p={p} v={v}");
        }
    }

    #[test]
    fn triangle_all_monomials_up_to_exactness() {
        for p in 0..=MAX_EXACTNESS {
            let r = quadrature_rule::<f64>(Domain::Triangle, p).unwrap();
            assert!(r.weights.iter().all(|&w| w > 0.0));
            for a in 0..=p as u32 {
                for b in 0..=(p as u32 - a) {
                    let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                    let v = r.integrate(|x| x[0].powi(a as i32) * x[1].powi(b as i32));
                    assert!((v - exact).abs() < 1e-14, "p={p} a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn segment_all_monomials() {
        for p in 0..=MAX_EXACTNESS {
            let r = quadrature_rule::<f64>(Domain::Segment, p).unwrap();
            let s: f64 = r.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-14);
            for a in 0..=p as i32 {
                let v: f64 = r.segment_iter().map(|(s, w)| w * s.powi(a)).sum();
                assert!((v - 1.0 / (a as f64 + 1.0)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn rejects_exactness_above_cap() {
        assert!(matches!(
            quadrature_rule::<f64>(Domain::Triangle, 21),
            Err(Error::UnsupportedExactness(21))
        ));
    }

    #[test]
    fn f32_rule_is_usable() {
        let r = quadrature_rule::<f32>(Domain::Triangle, 6).unwrap();
        let v = r.integrate(|x| x[0] * x[1]);
        assert!((v - 1.0 / 24.0).abs() < 1e-6);
    }
}
