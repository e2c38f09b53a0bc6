use super::HyperCube;
use crate::error::{arg, Error, Result};

const MAX_SWEEPS: usize = 100;
const OFF_DIAGONAL_TOL: f64 = 1e-10;

/// Eigen-decomposition of a symmetric matrix, sorted by descending eigenvalue.
/// `vectors[k]` is the unit eigenvector for `values[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Cyclic Jacobi rotation on a dense symmetric `n x n` matrix (row-major).
///
/// Sweeps until the off-diagonal Frobenius norm is below `1e-10` times the
/// matrix norm. Each eigenvector's largest-magnitude entry is made positive.
pub fn jacobi_eigen(matrix: &[f64], n: usize) -> Result<Eigen> {
    if matrix.len() != n * n {
        return arg(format!("matrix has {} entries, expected {}", matrix.len(), n * n));
    }
    let mut a = matrix.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let off = |a: &[f64]| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };

    let mut converged = scale == 0.0 || off(&a) <= OFF_DIAGONAL_TOL * scale;
    let mut sweeps = 0;
    while !converged {
        if sweeps == MAX_SWEEPS {
            return Err(Error::Numeric(format!("Jacobi did not converge in {MAX_SWEEPS} sweeps")));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        converged = off(&a) <= OFF_DIAGONAL_TOL * scale;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&col| {
            let mut vec: Vec<f64> = (0..n).map(|r| v[r * n + col]).collect();
            let lead = vec
                .iter()
                .enumerate()
                .fold(0, |best, (i, x)| if x.abs() > vec[best].abs() { i } else { best });
            if vec[lead] < 0.0 {
                vec.iter_mut().for_each(|x| *x = -*x);
            }
            vec
        })
        .collect();
    Ok(Eigen { values, vectors })
}

/// Fitted principal axes of a cube's band covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Band covariance (population normalisation), row-major `bands x bands`.
    pub covariance: Vec<f64>,
    pub eigen: Eigen,
}

impl PcaModel {
    pub fn fit(cube: &HyperCube) -> Result<Self> {
        let b = cube.bands();
        let n = cube.pixels();
        let mut mean = vec![0.0; b];
        for p in 0..n {
            for (m, x) in mean.iter_mut().zip(cube.pixel(p)) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut cov = vec![0.0; b * b];
        let mut centered = vec![0.0; b];
        for p in 0..n {
            for ((c, x), m) in centered.iter_mut().zip(cube.pixel(p)).zip(&mean) {
                *c = x - m;
            }
            for i in 0..b {
                for j in i..b {
                    cov[i * b + j] += centered[i] * centered[j];
                }
            }
        }
        for i in 0..b {
            for j in i..b {
                cov[i * b + j] /= n as f64;
                cov[j * b + i] = cov[i * b + j];
            }
        }
        let eigen = jacobi_eigen(&cov, b)?;
        Ok(Self { mean, covariance: cov, eigen })
    }

    /// Project a cube onto the leading `components` axes.
    pub fn project(&self, cube: &HyperCube, components: usize) -> Result<HyperCube> {
        let b = self.mean.len();
        if cube.bands() != b || components == 0 || components > b {
            return arg(format!("cannot project {} bands onto {components} of {b} axes", cube.bands()));
        }
        let mut out = Vec::with_capacity(cube.pixels() * components);
        for p in 0..cube.pixels() {
            let x = cube.pixel(p);
            for axis in &self.eigen.vectors[..components] {
                out.push(x.iter().zip(&self.mean).zip(axis).map(|((x, m), a)| (x - m) * a).sum());
            }
        }
        HyperCube::new(cube.height(), cube.width(), components, out)
    }
}

/// Reduce a cube to its top `components` principal components.
pub fn pca_reduce(cube: &HyperCube, components: usize) -> Result<HyperCube> {
    if components == 0 || components > cube.bands() {
        return arg(format!("components must be in 1..={}, got {components}", cube.bands()));
    }
    if cube.pixels() < components {
        return arg(format!("{} pixels cannot support {components} components", cube.pixels()));
    }
    PcaModel::fit(cube)?.project(cube, components)
}
