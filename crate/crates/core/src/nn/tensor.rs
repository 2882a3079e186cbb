use super::NnError;

/// Dense row-major `f32` tensor.
///
/// Graph operations treat every tensor as a matrix: a 1-D tensor of length
/// `n` is a `1 x n` row, and higher-rank tensors collapse all leading
/// dimensions into rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self, NnError> {
        if shape.is_empty() || shape.iter().any(|&d| d == 0) {
            return Err(NnError::Shape(format!("invalid shape {shape:?}")));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(NnError::Shape(format!(
                "shape {shape:?} needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self::new(shape.to_vec(), vec![0.0; n]).expect("zeros: invalid shape")
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f32>) -> Self {
        Self::new(vec![rows, cols], data).expect("matrix: data length mismatch")
    }

    pub fn row(data: Vec<f32>) -> Self {
        let n = data.len();
        Self::matrix(1, n, data)
    }

    pub fn scalar(v: f32) -> Self {
        Self::matrix(1, 1, vec![v])
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn cols(&self) -> usize {
        *self.shape.last().expect("tensor has at least one dimension")
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.cols()
    }

    pub fn row_slice(&self, r: usize) -> &[f32] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn item(&self) -> f32 {
        assert_eq!(self.data.len(), 1, "item() on tensor of shape {:?}", self.shape);
        self.data[0]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// `c[n x m] = a[n x k] * b[k x m]`
pub(crate) fn matmul(a: &[f32], b: &[f32], n: usize, k: usize, m: usize) -> Vec<f32> {
    let mut c = vec![0.0f32; n * m];
    for i in 0..n {
        let a_row = &a[i * k..(i + 1) * k];
        let c_row = &mut c[i * m..(i + 1) * m];
        for (p, &av) in a_row.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            axpy(av, &b[p * m..(p + 1) * m], c_row);
        }
    }
    c
}

/// `out[n x k] += d[n x m] * b[k x m]^T`
pub(crate) fn matmul_add_bt(d: &[f32], b: &[f32], n: usize, k: usize, m: usize, out: &mut [f32]) {
    for i in 0..n {
        let d_row = &d[i * m..(i + 1) * m];
        for p in 0..k {
            out[i * k + p] += dot(d_row, &b[p * m..(p + 1) * m]);
        }
    }
}

/// `out[k x m] += a[n x k]^T * d[n x m]`
pub(crate) fn matmul_add_at(a: &[f32], d: &[f32], n: usize, k: usize, m: usize, out: &mut [f32]) {
    for i in 0..n {
        let d_row = &d[i * m..(i + 1) * m];
        for p in 0..k {
            let av = a[i * k + p];
            if av != 0.0 {
                axpy(av, d_row, &mut out[p * m..(p + 1) * m]);
            }
        }
    }
}

#[inline]
pub(crate) fn axpy(alpha: f32, x: &[f32], y: &mut [f32]) {
    for (yv, &xv) in y.iter_mut().zip(x) {
        *yv += alpha * xv;
    }
}

#[inline]
pub(crate) fn dot(a: &[f32], b: &[f32]) -> f32 {
    // Eight independent accumulators let the compiler vectorize the reduction.
    let mut acc = [0.0f32; 8];
    let chunks = a.len() / 8;
    for c in 0..chunks {
        let (xa, xb) = (&a[c * 8..c * 8 + 8], &b[c * 8..c * 8 + 8]);
        for j in 0..8 {
            acc[j] += xa[j] * xb[j];
        }
    }
    let mut s: f32 = acc.iter().sum();
    for j in chunks * 8..a.len() {
        s += a[j] * b[j];
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_must_match_data() {
        assert!(Tensor::new(vec![2, 3], vec![0.0; 6]).is_ok());
        assert!(Tensor::new(vec![2, 3], vec![0.0; 5]).is_err());
        assert!(Tensor::new(vec![0], vec![]).is_err());
    }

    #[test]
    fn matmul_small() {
        // [1 2; 3 4] * [5; 6] = [17; 39]
        let c = matmul(&[1.0, 2.0, 3.0, 4.0], &[5.0, 6.0], 2, 2, 1);
        assert_eq!(c, vec![17.0, 39.0]);
    }

    #[test]
    fn transposed_products_agree_with_plain_matmul() {
        let a = [1.0, -2.0, 0.5, 3.0, 0.0, 1.5]; // 2x3
        let d = [0.3, -1.0, 2.0, 0.7]; // 2x2
        // a^T d, computed by hand through matmul on an explicit transpose
        let at = [1.0, 3.0, -2.0, 0.0, 0.5, 1.5]; // 3x2
        let want = matmul(&at, &d, 3, 2, 2);
        let mut got = vec![0.0; 6];
        matmul_add_at(&a, &d, 2, 3, 2, &mut got);
        assert_eq!(got, want);

        let b = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]; // 3x2 viewed as k x m with k=3, m=2
        let bt = [1.0, 3.0, 5.0, 2.0, 4.0, 6.0]; // 2x3
        let want = matmul(&d, &bt, 2, 2, 3);
        let mut got = vec![0.0; 6];
        matmul_add_bt(&d, &b, 2, 3, 2, &mut got);
        assert_eq!(got, want);
    }
}
