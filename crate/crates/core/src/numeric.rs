//! Small numeric helpers shared by the checks.

/// |a − b| / max(1, |a|, |b|).
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

/// Componentwise difference scaled by max(1, ‖a‖∞, ‖b‖∞).
pub fn rel_err_vec(a: &[f64], b: &[f64]) -> f64 {
    let scale = 1f64.max(max_abs(a)).max(max_abs(b));
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / scale
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn mat_vec(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| dot(row, v)).collect()
}

/// vᵀ A as a row vector.
pub fn vec_mat(v: &[f64], a: &[Vec<f64>]) -> Vec<f64> {
    let m = a.first().map_or(0, Vec::len);
    (0..m).map(|j| v.iter().zip(a).map(|(x, row)| x * row[j]).sum()).collect()
}

pub fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.iter().map(|row| vec_mat(row, b)).collect()
}

pub fn max_abs_mat(a: &[Vec<f64>]) -> f64 {
    a.iter().map(|r| max_abs(r)).fold(0.0, f64::max)
}

/// Row-major flattening.
pub fn flatten(a: &[Vec<f64>]) -> Vec<f64> {
    a.iter().flatten().copied().collect()
}

pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Sine of the angle between two nonzero vectors, via |v∧w| / (|v||w|).
pub fn sin_angle(v: &[f64], w: &[f64]) -> f64 {
    let (nv, nw) = (norm(v), norm(w));
    let mut wedge = 0.0;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            let c = v[i] * w[j] - v[j] * w[i];
            wedge += c * c;
        }
    }
    wedge.sqrt() / (nv * nw)
}

/// Basis of ker(covector): e_j − (w_j / w_k) e_k for j ≠ k, where k is the
/// index of the largest |w_k|.
pub fn kernel_basis(w: &[f64]) -> Vec<Vec<f64>> {
    let m = w.len();
    let k = (0..m)
        .max_by(|&a, &b| w[a].abs().total_cmp(&w[b].abs()))
        .expect("nonempty covector");
    (0..m)
        .filter(|&j| j != k)
        .map(|j| {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            e[k] = -w[j] / w[k];
            e
        })
        .collect()
}
