//! Small fixed-dimension vector helpers over `[f64; N]`.

#[allow(unused_imports)]
use crate::math::F64Ext;

pub type Point<const N: usize> = [f64; N];

#[inline]
pub fn dot<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    let mut s = 0.0;
    for k in 0..N {
        s += a[k] * b[k];
    }
    s
}

#[inline]
pub fn add<const N: usize>(a: &[f64; N], b: &[f64; N]) -> [f64; N] {
    let mut out = [0.0; N];
    for k in 0..N {
        out[k] = a[k] + b[k];
    }
    out
}

#[inline]
pub fn sub<const N: usize>(a: &[f64; N], b: &[f64; N]) -> [f64; N] {
    let mut out = [0.0; N];
    for k in 0..N {
        out[k] = a[k] - b[k];
    }
    out
}

#[inline]
pub fn scale<const N: usize>(a: &[f64; N], s: f64) -> [f64; N] {
    let mut out = [0.0; N];
    for k in 0..N {
        out[k] = a[k] * s;
    }
    out
}

/// a + s*b
#[inline]
pub fn axpy<const N: usize>(a: &[f64; N], s: f64, b: &[f64; N]) -> [f64; N] {
    let mut out = [0.0; N];
    for k in 0..N {
        out[k] = a[k] + s * b[k];
    }
    out
}

#[inline]
pub fn norm<const N: usize>(a: &[f64; N]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist<const N: usize>(a: &[f64; N], b: &[f64; N]) -> f64 {
    norm(&sub(a, b))
}

#[inline]
pub fn is_finite<const N: usize>(a: &[f64; N]) -> bool {
    a.iter().all(|v| v.is_finite())
}
