//! Quaternion algebra over scalars and packed tensors.
//!
//! A packed tensor lays its feature axis of length `4h` out as four
//! contiguous blocks `[r | x | y | z]`, each of length `h`. Batched
//! quaternion kernels then reduce to four block-wise real operations,
//! and this layout is also the checkpoint format for quaternion weights.

use crate::error::{CoreError, Result};
use crate::tensor::{Real, Tensor};

/// A quaternion `r + x·i + y·j + z·k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quaternion<T> {
    pub r: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Quaternion<T> {
    pub fn new(r: T, x: T, y: T, z: T) -> Self {
        Quaternion { r, x, y, z }
    }

    pub fn zero() -> Self {
        Quaternion::new(T::zero(), T::zero(), T::zero(), T::zero())
    }

    /// The multiplicative identity `1 + 0i + 0j + 0k`.
    pub fn one() -> Self {
        Quaternion::new(T::one(), T::zero(), T::zero(), T::zero())
    }
}

/// Hamilton product, derived from the basis relations
/// `i^2 = j^2 = k^2 = ijk = -1`.
pub fn hamilton<T: Real>(a: Quaternion<T>, b: Quaternion<T>) -> Quaternion<T> {
    Quaternion {
        r: a.r * b.r - a.x * b.x - a.y * b.y - a.z * b.z,
        x: a.r * b.x + a.x * b.r + a.y * b.z - a.z * b.y,
        y: a.r * b.y - a.x * b.z + a.y * b.r + a.z * b.x,
        z: a.r * b.z + a.x * b.y - a.y * b.x + a.z * b.r,
    }
}

/// Conjugate `r - xi - yj - zk`.
pub fn conjugate<T: Real>(q: Quaternion<T>) -> Quaternion<T> {
    Quaternion {
        r: q.r,
        x: -q.x,
        y: -q.y,
        z: -q.z,
    }
}

/// Euclidean norm `sqrt(r^2 + x^2 + y^2 + z^2)`.
pub fn norm<T: Real>(q: Quaternion<T>) -> T {
    (q.r * q.r + q.x * q.x + q.y * q.y + q.z * q.z).sqrt()
}

/// Scales `q` to unit norm. Fails for norms at or below `1e-12`.
pub fn normalize<T: Real>(q: Quaternion<T>) -> Result<Quaternion<T>> {
    let n = norm(q);
    if n.to_f64() <= 1e-12 {
        return Err(CoreError::DegenerateQuaternion { norm: n.to_f64() });
    }
    Ok(Quaternion {
        r: q.r / n,
        x: q.x / n,
        y: q.y / n,
        z: q.z / n,
    })
}

/// Scalar activations usable on quaternion components.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
}

impl Activation {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            other => Err(CoreError::UnknownActivation(other.to_string())),
        }
    }

    pub fn apply<T: Real>(self, x: T) -> T {
        match self {
            Activation::Sigmoid => T::one() / (T::one() + (-x).exp()),
            Activation::Tanh => x.tanh(),
            Activation::Relu => {
                if x > T::zero() {
                    x
                } else {
                    T::zero()
                }
            }
        }
    }
}

/// A tensor whose last axis holds packed quaternions.
#[derive(Clone, Debug, PartialEq)]
pub struct QTensor<T> {
    inner: Tensor<T>,
}

impl<T: Real> QTensor<T> {
    /// Number of quaternion units on the feature axis.
    pub fn units(&self) -> usize {
        self.inner.shape().last().copied().unwrap_or(0) / 4
    }

    pub fn tensor(&self) -> &Tensor<T> {
        &self.inner
    }

    pub fn shape(&self) -> &[usize] {
        self.inner.shape()
    }
}

/// Reinterpret a real tensor as packed quaternions. The last axis must
/// be divisible by four; the first quarter is the r block, then x, y, z.
pub fn pack<T: Real>(t: Tensor<T>) -> Result<QTensor<T>> {
    let last = t.shape().last().copied().unwrap_or(0);
    if last == 0 || last % 4 != 0 {
        return Err(CoreError::BadFeatureAxis { len: last });
    }
    Ok(QTensor { inner: t })
}

/// The inverse of [`pack`]: concatenates the r, x, y, z blocks back in
/// order, which under the contiguous block layout is the identity on
/// the underlying array.
pub fn unpack<T: Real>(t: QTensor<T>) -> Tensor<T> {
    t.inner
}

/// Applies `f` elementwise and independently to the r, x, y, z blocks.
/// With the contiguous block layout this is an elementwise map over the
/// whole array, so it commutes with [`unpack`].
pub fn split_activation<T: Real>(t: &QTensor<T>, f: Activation) -> QTensor<T> {
    QTensor {
        inner: t.inner.map(|v| f.apply(v)),
    }
}

/// Component blocks (r, x, y, z) of one packed row.
pub fn row_blocks<T: Real>(row: &[T]) -> (&[T], &[T], &[T], &[T]) {
    debug_assert_eq!(row.len() % 4, 0);
    let h = row.len() / 4;
    (&row[0..h], &row[h..2 * h], &row[2 * h..3 * h], &row[3 * h..4 * h])
}

/// The i-th quaternion of a packed row.
pub fn unit_at<T: Real>(row: &[T], i: usize) -> Quaternion<T> {
    let h = row.len() / 4;
    Quaternion::new(row[i], row[h + i], row[2 * h + i], row[3 * h + i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn q(r: f64, x: f64, y: f64, z: f64) -> Quaternion<f64> {
        Quaternion::new(r, x, y, z)
    }

    fn close(a: Quaternion<f64>, b: Quaternion<f64>, tol: f64) -> bool {
        (a.r - b.r).abs() < tol
            && (a.x - b.x).abs() < tol
            && (a.y - b.y).abs() < tol
            && (a.z - b.z).abs() < tol
    }

    #[test]
    fn hamilton_identity() {
        let v = q(0.3, -1.2, 2.5, 0.7);
        assert_eq!(hamilton(Quaternion::one(), v), v);
        assert_eq!(hamilton(v, Quaternion::one()), v);
    }

    #[test]
    fn hamilton_basis_relations() {
        let i = q(0.0, 1.0, 0.0, 0.0);
        let j = q(0.0, 0.0, 1.0, 0.0);
        let k = q(0.0, 0.0, 0.0, 1.0);
        let minus_one = q(-1.0, 0.0, 0.0, 0.0);
        assert_eq!(hamilton(i, j), k);
        assert_eq!(hamilton(j, i), q(0.0, 0.0, 0.0, -1.0));
        assert_eq!(hamilton(j, k), i);
        assert_eq!(hamilton(k, i), j);
        assert_eq!(hamilton(i, i), minus_one);
        assert_eq!(hamilton(j, j), minus_one);
        assert_eq!(hamilton(k, k), minus_one);
        assert_eq!(hamilton(hamilton(i, j), k), minus_one);
    }

    #[test]
    fn conjugate_examples() {
        assert_eq!(conjugate(q(1.0, 2.0, 3.0, 4.0)), q(1.0, -2.0, -3.0, -4.0));
        assert_eq!(conjugate(q(5.0, 0.0, 0.0, 0.0)), q(5.0, 0.0, 0.0, 0.0));
        let v = q(1.0, -1.0, 2.0, -2.0);
        assert_eq!(conjugate(conjugate(v)), v);
    }

    #[test]
    fn norm_examples() {
        assert_eq!(norm(q(1.0, 2.0, 2.0, 4.0)), 5.0);
        assert_eq!(norm(Quaternion::<f64>::zero()), 0.0);
        // |ab| = |a||b| on a fixed pair with a known product norm
        let a = q(1.0, 1.0, 0.0, 0.0);
        let b = q(0.0, 0.0, 1.0, 1.0);
        let lhs = norm(hamilton(a, b));
        assert!((lhs - norm(a) * norm(b)).abs() < 1e-12);
        assert!((lhs - 2.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_examples() {
        let u = normalize(q(0.0, 3.0, 0.0, 4.0)).unwrap();
        assert!(close(u, q(0.0, 0.6, 0.0, 0.8), 1e-12));
        let v = normalize(q(2.0, 0.0, 0.0, 0.0)).unwrap();
        assert!(close(v, Quaternion::one(), 1e-12));
        assert!(matches!(
            normalize(Quaternion::<f64>::zero()),
            Err(CoreError::DegenerateQuaternion { .. })
        ));
    }

    fn random_quat(rng: &mut StdRng) -> Quaternion<f64> {
        q(
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
        )
    }

    #[test]
    fn algebra_properties_random() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..500 {
            let a = random_quat(&mut rng);
            let b = random_quat(&mut rng);
            let c = random_quat(&mut rng);

            // associativity
            let lhs = hamilton(hamilton(a, b), c);
            let rhs = hamilton(a, hamilton(b, c));
            assert!(close(lhs, rhs, 1e-10));

            // |ab| = |a||b|
            assert!((norm(hamilton(a, b)) - norm(a) * norm(b)).abs() < 1e-10);

            // (ab)* = b* a*
            assert!(close(
                conjugate(hamilton(a, b)),
                hamilton(conjugate(b), conjugate(a)),
                1e-10
            ));

            // q q* = (|q|^2, 0, 0, 0)
            let qq = hamilton(a, conjugate(a));
            let n2 = norm(a) * norm(a);
            assert!(close(qq, q(n2, 0.0, 0.0, 0.0), 1e-10));
        }
    }

    #[test]
    fn pack_unpack_layout() {
        let t = Tensor::vector(vec![1.0, 2.0, 3.0, 4.0]);
        let p = pack(t).unwrap();
        assert_eq!(p.units(), 1);
        assert_eq!(unit_at(p.tensor().row(0), 0), q(1.0, 2.0, 3.0, 4.0));

        let v = vec![0.5, -0.5, 1.0, -1.0, 2.0, -2.0, 3.0, -3.0];
        let t = Tensor::vector(v.clone());
        let round = unpack(pack(t).unwrap());
        assert_eq!(round.data(), v.as_slice());

        let bad = Tensor::vector(vec![1.0; 6]);
        assert!(matches!(pack(bad), Err(CoreError::BadFeatureAxis { len: 6 })));
    }

    #[test]
    fn split_activation_examples() {
        let zeros = pack(Tensor::<f64>::zeros(vec![3, 8])).unwrap();
        let sig = split_activation(&zeros, Activation::Sigmoid);
        assert!(sig.tensor().data().iter().all(|&v| v == 0.5));
        let th = split_activation(&zeros, Activation::Tanh);
        assert!(th.tensor().data().iter().all(|&v| v == 0.0));

        let t = pack(Tensor::vector(vec![-1.0, 2.0, -3.0, 4.0])).unwrap();
        let r = split_activation(&t, Activation::Relu);
        assert_eq!(r.tensor().data(), &[0.0, 2.0, 0.0, 4.0]);

        assert!(matches!(
            Activation::parse("gelu"),
            Err(CoreError::UnknownActivation(_))
        ));
    }

    #[test]
    fn split_activation_commutes_with_unpack() {
        let mut rng = StdRng::seed_from_u64(11);
        let data: Vec<f64> = (0..24).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let t = Tensor::matrix(2, 12, data.clone());
        for act in [Activation::Sigmoid, Activation::Tanh, Activation::Relu] {
            let via_packed = unpack(split_activation(&pack(t.clone()).unwrap(), act));
            let direct = t.map(|v| act.apply(v));
            assert_eq!(via_packed, direct);
        }
    }
}
