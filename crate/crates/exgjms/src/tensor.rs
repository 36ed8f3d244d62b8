//! Small dense tensors of jets with index-notation helpers.

use crate::jets::Jet;
use crate::scalar::Real;

/// Rank-R tensor of jets over a coordinate chart.
#[derive(Clone, Debug)]
pub struct Tensor<T: Real, const R: usize> {
    pub shape: [usize; R],
    data: Vec<Jet<T>>,
}

pub type Tensor2<T> = Tensor<T, 2>;
pub type Tensor3<T> = Tensor<T, 3>;
pub type Tensor4<T> = Tensor<T, 4>;

impl<T: Real, const R: usize> Tensor<T, R> {
    pub fn from_fn(shape: [usize; R], mut f: impl FnMut([usize; R]) -> Jet<T>) -> Self {
        let len = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        for idx in indices(shape) {
            data.push(f(idx));
        }
        Tensor { shape, data }
    }

    pub fn zeros(shape: [usize; R], dim: usize, order: usize) -> Self {
        Tensor::from_fn(shape, |_| Jet::zero(dim, order))
    }

    fn flat(&self, idx: [usize; R]) -> usize {
        let mut p = 0;
        for (i, (&x, &s)) in idx.iter().zip(&self.shape).enumerate() {
            debug_assert!(x < s, "index {x} out of bound {s} at slot {i}");
            p = p * s + x;
        }
        p
    }

    pub fn map(&self, f: impl Fn(&Jet<T>) -> Jet<T>) -> Self {
        Tensor {
            shape: self.shape,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Jet<T>> {
        self.data.iter()
    }

    /// Largest |value| over all entries.
    pub fn max_abs_value(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |m, j| m.max(j.value().abs()))
    }
}

impl<T: Real, const R: usize> std::ops::Index<[usize; R]> for Tensor<T, R> {
    type Output = Jet<T>;
    fn index(&self, idx: [usize; R]) -> &Jet<T> {
        &self.data[self.flat(idx)]
    }
}

impl<T: Real, const R: usize> std::ops::IndexMut<[usize; R]> for Tensor<T, R> {
    fn index_mut(&mut self, idx: [usize; R]) -> &mut Jet<T> {
        let p = self.flat(idx);
        &mut self.data[p]
    }
}

/// Row-major iteration over all index tuples of a shape.
pub fn indices<const R: usize>(shape: [usize; R]) -> impl Iterator<Item = [usize; R]> {
    let len: usize = shape.iter().product();
    (0..len).map(move |mut p| {
        let mut idx = [0usize; R];
        for i in (0..R).rev() {
            idx[i] = p % shape[i];
            p /= shape[i];
        }
        idx
    })
}

/// Sum of jets, or a zero jet of the given shape when empty.
pub fn sum_jets<T: Real>(dim: usize, order: usize, terms: impl Iterator<Item = Jet<T>>) -> Jet<T> {
    let mut acc = Jet::zero(dim, order);
    for t in terms {
        acc = acc + t;
    }
    acc
}

/// Metric trace `inv^{ab} A_{ab}` of a rank-2 tensor.
pub fn trace2<T: Real>(a: &Tensor2<T>, inv: &Tensor2<T>) -> Jet<T> {
    let n = a.shape[0];
    let probe = &a[[0, 0]];
    sum_jets(
        probe.dim(),
        probe.order(),
        indices([n, n]).map(|[i, j]| &inv[[i, j]] * &a[[i, j]]),
    )
}

/// Squared metric norm `inv^{ac} inv^{bd} A_{ab} A_{cd}`.
pub fn sq_norm2<T: Real>(a: &Tensor2<T>, inv: &Tensor2<T>) -> Jet<T> {
    let n = a.shape[0];
    let probe = &a[[0, 0]];
    sum_jets(
        probe.dim(),
        probe.order(),
        indices([n, n, n, n]).map(|[i, j, k, l]| {
            &(&inv[[i, k]] * &inv[[j, l]]) * &(&a[[i, j]] * &a[[k, l]])
        }),
    )
}

/// `inv^{ac} A_{ab} B_{cb}` summed over all slots: squared norm of a tensor
/// with one chart index (traced with `inv`) and one orthonormal-frame index.
pub fn sq_norm_mixed<T: Real>(a: &Tensor2<T>, inv: &Tensor2<T>) -> Jet<T> {
    let [n, m] = a.shape;
    let probe = &a[[0, 0]];
    sum_jets(
        probe.dim(),
        probe.order(),
        indices([n, n, m]).map(|[i, k, b]| &inv[[i, k]] * &(&a[[i, b]] * &a[[k, b]])),
    )
}
