use super::linalg::{jacobi_eigen, matrix_sqrt_psd, SquareMatrix};
use crate::diffcore::Tensor;
use crate::error::{Error, Result};

/// Mean and unbiased covariance of a feature cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFit {
    pub mean: Vec<f64>,
    pub cov: SquareMatrix,
}

fn rows_of(features: &Tensor, min_rows: usize, what: &str) -> Result<(usize, usize)> {
    if features.rank() != 2 {
        return Err(Error::dim(
            "features",
            format!("expected N×F, got {:?}", features.shape()),
        ));
    }
    let (n, f) = (features.shape()[0], features.shape()[1]);
    if n < min_rows {
        return Err(Error::InsufficientData(format!(
            "{what} needs at least {min_rows} samples, got {n}"
        )));
    }
    Ok((n, f))
}

/// Sample mean and covariance with the `N − 1` divisor, symmetrized.
pub fn gaussian_fit(features: &Tensor) -> Result<GaussianFit> {
    let (n, f) = rows_of(features, 2, "gaussian_fit")?;
    let mut mean = vec![0.0; f];
    for row in features.data().chunks(f) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);

    let mut cov = SquareMatrix::zeros(f);
    for row in features.data().chunks(f) {
        for i in 0..f {
            let di = row[i] - mean[i];
            if di == 0.0 {
                continue;
            }
            for j in 0..f {
                cov.set(i, j, cov.get(i, j) + di * (row[j] - mean[j]));
            }
        }
    }
    let scaled = SquareMatrix::new(f, cov.data().iter().map(|v| v / (n - 1) as f64).collect())?;
    Ok(GaussianFit {
        mean,
        cov: scaled.symmetrized(),
    })
}

/// Fréchet distance between two fitted Gaussians:
/// `|μ_a − μ_b|² + tr(Σ_a + Σ_b − 2·(Σ_a^½ Σ_b Σ_a^½)^½)`, clamped at zero.
pub fn frechet_distance(a: &GaussianFit, b: &GaussianFit) -> Result<f64> {
    if a.mean.len() != b.mean.len() {
        return Err(Error::dim(
            "fid",
            format!("feature widths {} and {} differ", a.mean.len(), b.mean.len()),
        ));
    }
    let mean_term: f64 = a.mean.iter().zip(&b.mean).map(|(x, y)| (x - y).powi(2)).sum();
    let root_a = matrix_sqrt_psd(&a.cov)?;
    let inner = root_a.matmul(&b.cov).matmul(&root_a).symmetrized();
    let cross = matrix_sqrt_psd(&inner)?;
    let d = mean_term + a.cov.trace() + b.cov.trace() - 2.0 * cross.trace();
    Ok(d.max(0.0))
}

/// Fréchet distance between the Gaussian fits of two `N×F` feature clouds.
pub fn fid(features_a: &Tensor, features_b: &Tensor) -> Result<f64> {
    frechet_distance(&gaussian_fit(features_a)?, &gaussian_fit(features_b)?)
}

/// Projects centered features onto the two leading covariance eigenvectors.
/// Each eigenvector is signed so its largest-magnitude entry is positive.
pub fn pca_project_2d(features: &Tensor) -> Result<Tensor> {
    let (n, f) = rows_of(features, 3, "pca_project_2d")?;
    let fit = gaussian_fit(features)?;
    let eig = jacobi_eigen(&fit.cov)?;
    let mut order: Vec<usize> = (0..f).collect();
    order.sort_by(|&i, &j| eig.values[j].total_cmp(&eig.values[i]).then(i.cmp(&j)));

    let axes: Vec<Vec<f64>> = order
        .iter()
        .take(2)
        .map(|&k| {
            let mut v: Vec<f64> = (0..f).map(|i| eig.vectors.get(i, k)).collect();
            let lead = v
                .iter()
                .copied()
                .enumerate()
                .fold((0, 0.0f64), |best, (i, x)| if x.abs() > best.1.abs() { (i, x) } else { best });
            if lead.1 < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();

    let mut out = Vec::with_capacity(n * 2);
    for row in features.data().chunks(f) {
        for c in 0..2 {
            out.push(match axes.get(c) {
                Some(axis) => row
                    .iter()
                    .zip(&fit.mean)
                    .zip(axis)
                    .map(|((x, m), a)| (x - m) * a)
                    .sum(),
                None => 0.0,
            });
        }
    }
    Tensor::new([n, 2], out)
}
