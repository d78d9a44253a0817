//! Real spherical harmonics on a Gauss-Legendre by uniform-longitude grid.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::numerics::gauss_legendre;

/// Quadrature grid on the unit 2-sphere with a spherical-harmonic transform
/// truncated at degree `lmax`.
#[derive(Clone, Debug)]
pub struct SphereGrid {
    pub nlat: usize,
    pub nlon: usize,
    pub lmax: usize,
    /// `cos(theta)` at the latitude nodes.
    pub cos_theta: Vec<f64>,
    pub lat_weights: Vec<f64>,
    lon: Vec<f64>,
    /// `cos(m lon_k)` and `sin(m lon_k)` at index `m * nlon + k`.
    cos_table: Vec<f64>,
    sin_table: Vec<f64>,
    /// Normalised associated Legendre functions, `legendre[j][plm_index(l, m)]`.
    legendre: Vec<Vec<f64>>,
}

fn plm_index(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Index of the real harmonic `(l, m)`, `-l <= m <= l`, in a coefficient vector.
pub fn coeff_index(l: usize, m: i64) -> usize {
    assert!(m.unsigned_abs() as usize <= l, "order {m} exceeds degree {l}");
    ((l * l + l) as i64 + m) as usize
}

/// Orthonormal associated Legendre values `N_lm P_l^m(x)` for `0 <= m <= l <= lmax`.
fn legendre_table(x: f64, lmax: usize) -> Vec<f64> {
    let mut p = vec![0.0; plm_index(lmax, lmax) + 1];
    let s = (1.0 - x * x).max(0.0).sqrt();
    p[0] = 1.0 / (4.0 * PI).sqrt();
    for m in 1..=lmax {
        let prev = p[plm_index(m - 1, m - 1)];
        p[plm_index(m, m)] = ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s * prev;
    }
    for m in 0..lmax {
        p[plm_index(m + 1, m)] = ((2 * m + 3) as f64).sqrt() * x * p[plm_index(m, m)];
    }
    for m in 0..=lmax {
        for l in (m + 2)..=lmax {
            let (lf, mf) = (l as f64, m as f64);
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            p[plm_index(l, m)] = a * (x * p[plm_index(l - 1, m)] - b * p[plm_index(l - 2, m)]);
        }
    }
    p
}

impl SphereGrid {
    pub fn new(nlat: usize, nlon: usize, lmax: usize) -> Result<Self> {
        if nlat < 32 || nlon < 64 {
            return Err(Error::InvalidParameter(format!("quadrature grid {nlat}x{nlon} is below the 32x64 minimum")));
        }
        if lmax + 1 > nlat || 2 * lmax + 1 > nlon {
            return Err(Error::InvalidParameter(format!("degree {lmax} too high for a {nlat}x{nlon} grid")));
        }
        let (cos_theta, lat_weights) = gauss_legendre(nlat);
        let lon: Vec<f64> = (0..nlon).map(|k| TAU * k as f64 / nlon as f64).collect();
        let angles = || (0..=lmax).flat_map(|m| lon.iter().map(move |l| m as f64 * l));
        let cos_table = angles().map(f64::cos).collect();
        let sin_table = angles().map(f64::sin).collect();
        let legendre = cos_theta.iter().map(|&x| legendre_table(x, lmax)).collect();
        Ok(Self { nlat, nlon, lmax, cos_theta, lat_weights, lon, cos_table, sin_table, legendre })
    }

    pub fn len(&self) -> usize {
        self.nlat * self.nlon
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coeff_len(&self) -> usize {
        (self.lmax + 1) * (self.lmax + 1)
    }

    /// Unit vector of grid node `(j, k)`, stored at index `j * nlon + k`.
    pub fn node(&self, idx: usize) -> [f64; 3] {
        let (j, k) = (idx / self.nlon, idx % self.nlon);
        let z = self.cos_theta[j];
        let s = (1.0 - z * z).max(0.0).sqrt();
        [s * self.lon[k].cos(), s * self.lon[k].sin(), z]
    }

    /// Quadrature weight of node `idx` for the round area element of the unit sphere.
    pub fn weight(&self, idx: usize) -> f64 {
        self.lat_weights[idx / self.nlon] * TAU / self.nlon as f64
    }

    /// `int f dOmega` over the unit sphere.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().enumerate().map(|(i, v)| v * self.weight(i)).sum()
    }

    /// Degree of the harmonic stored at each coefficient index.
    pub fn degrees(&self) -> Vec<usize> {
        (0..=self.lmax).flat_map(|l| std::iter::repeat_n(l, 2 * l + 1)).collect()
    }

    /// Projection of grid values onto real harmonics of degree `<= lmax`.
    pub fn analysis(&self, values: &[f64]) -> Vec<f64> {
        let lmax = self.lmax;
        let mut coeffs = vec![0.0; self.coeff_len()];
        let dphi = TAU / self.nlon as f64;
        let mut cos_sum = vec![0.0; lmax + 1];
        let mut sin_sum = vec![0.0; lmax + 1];
        for j in 0..self.nlat {
            let row = &values[j * self.nlon..(j + 1) * self.nlon];
            for m in 0..=lmax {
                let cos_m = &self.cos_table[m * self.nlon..(m + 1) * self.nlon];
                let sin_m = &self.sin_table[m * self.nlon..(m + 1) * self.nlon];
                let (mut c, mut s) = (0.0, 0.0);
                for ((f, cm), sm) in row.iter().zip(cos_m).zip(sin_m) {
                    c += f * cm;
                    s += f * sm;
                }
                cos_sum[m] = c * dphi;
                sin_sum[m] = s * dphi;
            }
            let w = self.lat_weights[j];
            let p = &self.legendre[j];
            for l in 0..=lmax {
                let base = l * l + l;
                coeffs[base] += w * p[plm_index(l, 0)] * cos_sum[0];
                for m in 1..=l {
                    let pl = w * std::f64::consts::SQRT_2 * p[plm_index(l, m)];
                    coeffs[base + m] += pl * cos_sum[m];
                    coeffs[base - m] += pl * sin_sum[m];
                }
            }
        }
        coeffs
    }

    /// Grid values of a harmonic expansion.
    pub fn synthesis(&self, coeffs: &[f64]) -> Vec<f64> {
        let lmax = self.lmax;
        let mut out = vec![0.0; self.len()];
        let mut a = vec![0.0; lmax + 1];
        let mut b = vec![0.0; lmax + 1];
        for j in 0..self.nlat {
            let p = &self.legendre[j];
            a.iter_mut().for_each(|v| *v = 0.0);
            b.iter_mut().for_each(|v| *v = 0.0);
            for l in 0..=lmax {
                let base = l * l + l;
                a[0] += coeffs[base] * p[plm_index(l, 0)];
                for m in 1..=l {
                    let pl = std::f64::consts::SQRT_2 * p[plm_index(l, m)];
                    a[m] += coeffs[base + m] * pl;
                    b[m] += coeffs[base - m] * pl;
                }
            }
            for k in 0..self.nlon {
                let mut v = a[0];
                for m in 1..=lmax {
                    let i = m * self.nlon + k;
                    v += a[m] * self.cos_table[i] + b[m] * self.sin_table[i];
                }
                out[j * self.nlon + k] = v;
            }
        }
        out
    }

    /// Evaluates a harmonic expansion at a unit vector.
    pub fn evaluate(&self, coeffs: &[f64], n: [f64; 3]) -> f64 {
        let p = legendre_table(n[2].clamp(-1.0, 1.0), self.lmax);
        let phi = n[1].atan2(n[0]);
        let mut v = 0.0;
        for l in 0..=self.lmax {
            let base = l * l + l;
            v += coeffs[base] * p[plm_index(l, 0)];
            for m in 1..=l {
                let pl = std::f64::consts::SQRT_2 * p[plm_index(l, m)];
                let ang = m as f64 * phi;
                v += pl * (coeffs[base + m] * ang.cos() + coeffs[base - m] * ang.sin());
            }
        }
        v
    }

    /// Applies a function of the degree to every coefficient.
    pub fn spectral_multiply(&self, coeffs: &[f64], f: impl Fn(usize) -> f64) -> Vec<f64> {
        let deg = self.degrees();
        coeffs.iter().zip(deg).map(|(c, l)| c * f(l)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonics_are_orthonormal_on_the_grid() {
        let g = SphereGrid::new(32, 64, 8).unwrap();
        for i in 0..g.coeff_len() {
            let mut c = vec![0.0; g.coeff_len()];
            c[i] = 1.0;
            let vals = g.synthesis(&c);
            let back = g.analysis(&vals);
            for (j, b) in back.iter().enumerate() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((b - e).abs() < 1e-12, "{i} {j} {b}");
            }
        }
    }

    #[test]
    fn point_evaluation_matches_synthesis() {
        let g = SphereGrid::new(32, 64, 6).unwrap();
        let c: Vec<f64> = (0..g.coeff_len()).map(|i| ((i * 7 % 5) as f64 - 2.0) * 0.1).collect();
        let vals = g.synthesis(&c);
        for idx in [0, 17, 500, 2000] {
            assert!((g.evaluate(&c, g.node(idx)) - vals[idx]).abs() < 1e-12);
        }
    }

    #[test]
    fn degree_one_harmonics_are_coordinates() {
        let g = SphereGrid::new(32, 64, 2).unwrap();
        let norm = (3.0 / (4.0 * PI)).sqrt();
        let mut c = vec![0.0; g.coeff_len()];
        c[coeff_index(1, 0)] = 1.0;
        let n = [0.3, -0.4, (1.0f64 - 0.25).sqrt()];
        assert!((g.evaluate(&c, n) - norm * n[2]).abs() < 1e-14);
        let mut c = vec![0.0; g.coeff_len()];
        c[coeff_index(1, 1)] = 1.0;
        assert!((g.evaluate(&c, n) - norm * n[0]).abs() < 1e-14);
    }
}
