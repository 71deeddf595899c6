//! Small fixed-size vector helpers, generic over [`Real`].

use crate::autodiff::Real;

pub type Vec3<T = f64> = [T; 3];

#[inline]
pub fn add<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale<T: Real>(a: &Vec3<T>, s: T) -> Vec3<T> {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn scalef<T: Real>(a: &Vec3<T>, s: f64) -> Vec3<T> {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm<T: Real>(a: &Vec3<T>) -> T {
    dot(a, a).sqrt()
}

#[inline]
pub fn lift<T: Real>(a: &Vec3<f64>) -> Vec3<T> {
    [T::cst(a[0]), T::cst(a[1]), T::cst(a[2])]
}

#[inline]
pub fn values<T: Real>(a: &Vec3<T>) -> Vec3<f64> {
    [a[0].value(), a[1].value(), a[2].value()]
}

#[inline]
pub fn zero<T: Real>() -> Vec3<T> {
    [T::zero(); 3]
}

#[inline]
pub fn dist(a: &Vec3, b: &Vec3) -> f64 {
    norm(&sub(a, b))
}
