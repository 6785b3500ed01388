//! Reference implementations used as test oracles.
//!
//! Everything here works on plain slices and vectors and shares no code with `gaitxai`,
//! so a test can compare the library against an independent computation path.

pub mod nn {
    /// Direct convolution: builds the zero-padded input explicitly, then takes dot
    /// products. `weights` is `[out][in][kernel]`.
    pub fn conv1d(
        x: &[Vec<f64>],
        weights: &[f64],
        bias: &[f64],
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    ) -> Vec<Vec<f64>> {
        let cin = x.len();
        let padded: Vec<Vec<f64>> = x
            .iter()
            .map(|row| {
                let mut p = vec![0.0; padding];
                p.extend_from_slice(row);
                p.extend(std::iter::repeat_n(0.0, padding));
                p
            })
            .collect();
        let out_len = (padded[0].len() - kernel) / stride + 1;
        (0..out_channels)
            .map(|o| {
                (0..out_len)
                    .map(|i| {
                        let mut acc = bias[o];
                        for (c, row) in padded.iter().enumerate() {
                            for m in 0..kernel {
                                acc += weights[o * cin * kernel + c * kernel + m] * row[i * stride + m];
                            }
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    pub fn relu(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|r| r.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect()).collect()
    }

    pub fn maxpool(x: &[Vec<f64>], window: usize, stride: usize) -> Vec<Vec<f64>> {
        x.iter()
            .map(|r| {
                let n = (r.len() - window) / stride + 1;
                (0..n)
                    .map(|i| r[i * stride..i * stride + window].iter().cloned().fold(f64::NEG_INFINITY, f64::max))
                    .collect()
            })
            .collect()
    }

    pub fn global_avg(x: &[Vec<f64>]) -> Vec<f64> {
        x.iter().map(|r| r.iter().sum::<f64>() / r.len() as f64).collect()
    }

    /// `weights` is `[out][in]`.
    pub fn dense(x: &[f64], weights: &[f64], bias: &[f64]) -> Vec<f64> {
        bias.iter()
            .enumerate()
            .map(|(u, b)| b + x.iter().enumerate().map(|(j, v)| v * weights[u * x.len() + j]).sum::<f64>())
            .collect()
    }

    /// Row-major dense matrix `(out_channels·out_len) × (in_channels·in_len)` equal to
    /// the convolution's linear part.
    pub fn unroll_conv(
        in_channels: usize,
        in_len: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        weights: &[f64],
    ) -> (usize, usize, Vec<f64>) {
        let out_len = (in_len + 2 * padding - kernel) / stride + 1;
        let rows = out_channels * out_len;
        let cols = in_channels * in_len;
        let mut m = vec![0.0; rows * cols];
        for o in 0..out_channels {
            for i in 0..out_len {
                for c in 0..in_channels {
                    for k in 0..kernel {
                        let pos = (i * stride + k) as isize - padding as isize;
                        if pos >= 0 && (pos as usize) < in_len {
                            m[(o * out_len + i) * cols + c * in_len + pos as usize] +=
                                weights[(o * in_channels + c) * kernel + k];
                        }
                    }
                }
            }
        }
        (rows, cols, m)
    }

    /// Central finite differences of `f` at `theta`.
    pub fn central_difference(mut f: impl FnMut(&[f64]) -> f64, theta: &[f64], h: f64) -> Vec<f64> {
        let mut x = theta.to_vec();
        (0..theta.len())
            .map(|i| {
                x[i] = theta[i] + h;
                let up = f(&x);
                x[i] = theta[i] - h;
                let down = f(&x);
                x[i] = theta[i];
                (up - down) / (2.0 * h)
            })
            .collect()
    }

    /// `|a - b| / max(|a|, |b|, floor)`.
    pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
        (a - b).abs() / a.abs().max(b.abs()).max(floor)
    }
}

pub mod stats {
    use rand::Rng;
    use rand_distr::StandardNormal;
    use statrs::distribution::{ContinuousCDF, StudentsT};

    fn node(curves: &[Vec<f64>], q: usize) -> Vec<f64> {
        curves.iter().map(|c| c[q]).collect()
    }

    fn mean(v: &[f64]) -> f64 {
        v.iter().sum::<f64>() / v.len() as f64
    }

    fn sample_var(v: &[f64]) -> f64 {
        let m = mean(v);
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
    }

    fn pooled_var(a: &[f64], b: &[f64]) -> f64 {
        let (na, nb) = (a.len() as f64, b.len() as f64);
        ((na - 1.0) * sample_var(a) + (nb - 1.0) * sample_var(b)) / (na + nb - 2.0)
    }

    /// Pooled-variance two-sample t statistic at every node.
    pub fn textbook_t(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<f64> {
        (0..a[0].len())
            .map(|q| {
                let (x, y) = (node(a, q), node(b, q));
                let se = (pooled_var(&x, &y) * (1.0 / x.len() as f64 + 1.0 / y.len() as f64)).sqrt();
                (mean(&x) - mean(&y)) / se
            })
            .collect()
    }

    pub fn textbook_d(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<f64> {
        (0..a[0].len())
            .map(|q| {
                let (x, y) = (node(a, q), node(b, q));
                (mean(&x) - mean(&y)) / pooled_var(&x, &y).sqrt()
            })
            .collect()
    }

    /// Node-wise mean and population standard deviation, two passes.
    pub fn two_pass_mean_std(curves: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
        let q = curves[0].len();
        let m: Vec<f64> = (0..q).map(|i| mean(&node(curves, i))).collect();
        let s = (0..q)
            .map(|i| {
                let v = node(curves, i);
                (v.iter().map(|x| (x - m[i]) * (x - m[i])).sum::<f64>() / v.len() as f64).sqrt()
            })
            .collect();
        (m, s)
    }

    /// Running (Welford-style) mean.
    pub fn streaming_mean(curves: &[Vec<f64>]) -> Vec<f64> {
        let mut m = vec![0.0; curves[0].len()];
        for (k, c) in curves.iter().enumerate() {
            for (mi, x) in m.iter_mut().zip(c) {
                *mi += (x - *mi) / (k + 1) as f64;
            }
        }
        m
    }

    /// Supra-threshold runs `(start, end, peak)` found by listing supra-threshold nodes
    /// and splitting wherever consecutive indices jump.
    pub fn scan_clusters(t: &[f64], threshold: f64) -> Vec<(usize, usize, f64)> {
        let idx: Vec<usize> = (0..t.len()).filter(|&i| t[i].abs() > threshold).collect();
        let mut out = Vec::new();
        let mut k = 0;
        while k < idx.len() {
            let mut j = k;
            while j + 1 < idx.len() && idx[j + 1] == idx[j] + 1 {
                j += 1;
            }
            let peak = idx[k..=j].iter().map(|&i| t[i]).fold(0.0f64, |p, v| if v.abs() > p.abs() { v } else { p });
            out.push((idx[k], idx[j], peak));
            k = j + 1;
        }
        out
    }

    /// `n` stationary Gaussian fields of length `q` with unit variance and the given
    /// FWHM (in nodes): white noise on a padded domain convolved with a unit-energy
    /// Gaussian kernel.
    pub fn smooth_gaussian_fields(n: usize, q: usize, fwhm: f64, rng: &mut impl Rng) -> Vec<Vec<f64>> {
        let sigma = fwhm / (8.0 * std::f64::consts::LN_2).sqrt();
        let half = (4.0 * sigma).ceil() as usize;
        let kernel: Vec<f64> = (0..=2 * half)
            .map(|i| {
                let z = (i as f64 - half as f64) / sigma;
                (-0.5 * z * z).exp()
            })
            .collect();
        let norm = kernel.iter().map(|k| k * k).sum::<f64>().sqrt();
        (0..n)
            .map(|_| {
                let noise: Vec<f64> = (0..q + 2 * half).map(|_| rng.sample(StandardNormal)).collect();
                (0..q)
                    .map(|i| kernel.iter().enumerate().map(|(k, w)| w * noise[i + k]).sum::<f64>() / norm)
                    .collect()
            })
            .collect()
    }

    /// Upper-tail quantile of Student's t: `P(T > x) = alpha`.
    pub fn t_upper_quantile(alpha: f64, df: f64) -> f64 {
        StudentsT::new(0.0, 1.0, df).unwrap().inverse_cdf(1.0 - alpha)
    }
}
