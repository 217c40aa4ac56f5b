//! Qudit Pauli products omega^lambda X^x Z^z, their group, and the
//! matrix-based Clifford test.
//!
//! A product is the exponent triple (lambda, x, z) with everything reduced
//! mod d; its matrix realization is omega^lambda times the tensor product of
//! per-site X^{x_i} Z^{z_i} (site 0 leftmost). Multiplication adds exponents
//! componentwise and picks up a phase from commuting Z factors of the left
//! operand past X factors of the right one: with this crate's X convention
//! (XZ = omega ZX), the correction is -sum_i z1_i x2_i.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{pauli_x, pauli_z};
use crate::matrix::Mat;
use crate::scalar::{omega, C, Real};

/// A Pauli group element (lambda, x, z) over n qudits of dimension d.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliProduct {
    pub d: usize,
    pub lambda: usize,
    pub x: Vec<usize>,
    pub z: Vec<usize>,
}

impl PauliProduct {
    pub fn new(d: usize, lambda: usize, x: Vec<usize>, z: Vec<usize>) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(format!("pauli dimension must be >= 2, got {d}")));
        }
        if x.len() != z.len() {
            return Err(Error::InvalidDimension(format!(
                "x has {} sites, z has {}",
                x.len(),
                z.len()
            )));
        }
        Ok(PauliProduct {
            d,
            lambda: lambda % d,
            x: x.into_iter().map(|v| v % d).collect(),
            z: z.into_iter().map(|v| v % d).collect(),
        })
    }

    pub fn identity(d: usize, n: usize) -> Self {
        PauliProduct { d, lambda: 0, x: vec![0; n], z: vec![0; n] }
    }

    /// X on site `site`, identity elsewhere.
    pub fn x_generator(d: usize, n: usize, site: usize) -> Self {
        let mut p = Self::identity(d, n);
        p.x[site] = 1;
        p
    }

    /// Z on site `site`, identity elsewhere.
    pub fn z_generator(d: usize, n: usize, site: usize) -> Self {
        let mut p = Self::identity(d, n);
        p.z[site] = 1;
        p
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn is_identity_up_to_phase(&self) -> bool {
        self.x.iter().all(|&v| v == 0) && self.z.iter().all(|&v| v == 0)
    }
}

/// Group product p1 * p2 with the tracked omega phase.
pub fn pauli_mul(p1: &PauliProduct, p2: &PauliProduct) -> Result<PauliProduct> {
    if p1.d != p2.d || p1.n() != p2.n() {
        return Err(Error::InvalidDimension(format!(
            "pauli shapes differ: d={}, n={} vs d={}, n={}",
            p1.d,
            p1.n(),
            p2.d,
            p2.n()
        )));
    }
    let d = p1.d;
    let n = p1.n();
    // Z^{z1} X^{x2} = omega^{-z1 x2} X^{x2} Z^{z1} per site.
    let mut correction = 0usize;
    for i in 0..n {
        correction += p1.z[i] * p2.x[i];
    }
    let correction = correction % d;
    let lambda = (p1.lambda + p2.lambda + d - correction) % d;
    let x = (0..n).map(|i| (p1.x[i] + p2.x[i]) % d).collect();
    let z = (0..n).map(|i| (p1.z[i] + p2.z[i]) % d).collect();
    Ok(PauliProduct { d, lambda, x, z })
}

/// p^k by repeated multiplication.
pub fn pauli_pow(p: &PauliProduct, k: usize) -> PauliProduct {
    let mut acc = PauliProduct::identity(p.d, p.n());
    for _ in 0..k {
        acc = pauli_mul(&acc, p).expect("same shape");
    }
    acc
}

/// Matrix realization omega^lambda (X^{x_0} Z^{z_0}) tensor ... of size d^n.
pub fn matrix_of<T: Real>(p: &PauliProduct) -> Result<Mat<T>> {
    let d = p.d;
    let x: Mat<T> = pauli_x(d)?;
    let z: Mat<T> = pauli_z(d)?;
    let mut m = Mat::identity(1);
    for i in 0..p.n() {
        let site = &x.powi(p.x[i] as u64) * &z.powi(p.z[i] as u64);
        m = m.kron(&site);
    }
    let w: C<T> = omega(d);
    Ok(m.scale(w.powu(p.lambda as u32)))
}

/// All d^{2n+1} group elements, ordered by (lambda, x, z) odometer.
pub fn enumerate_group(d: usize, n: usize, guard: usize) -> Result<Vec<PauliProduct>> {
    if d < 2 || n == 0 {
        return Err(Error::InvalidDimension(format!("need d >= 2 and n >= 1, got d={d}, n={n}")));
    }
    let bits = 2 * n + 1;
    let mut order: usize = 1;
    for _ in 0..bits {
        order = order.checked_mul(d).ok_or(Error::GuardExceeded {
            what: "pauli group order".into(),
            value: usize::MAX,
            limit: guard,
        })?;
    }
    if order > guard {
        return Err(Error::GuardExceeded {
            what: "pauli group order".into(),
            value: order,
            limit: guard,
        });
    }
    let mut out = Vec::with_capacity(order);
    let mut digits = vec![0usize; bits];
    loop {
        let lambda = digits[0];
        let x = digits[1..=n].to_vec();
        let z = digits[n + 1..].to_vec();
        out.push(PauliProduct { d, lambda, x, z });
        // Odometer increment.
        let mut i = bits;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            digits[i] += 1;
            if digits[i] < d {
                break;
            }
            digits[i] = 0;
        }
    }
}

/// A Clifford's action on the X and Z generators of each site.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliffordTableau {
    pub d: usize,
    pub n: usize,
    pub x_images: Vec<PauliProduct>,
    pub z_images: Vec<PauliProduct>,
}

impl CliffordTableau {
    /// Image of an arbitrary Pauli product under this tableau.
    pub fn apply(&self, p: &PauliProduct) -> PauliProduct {
        let mut acc = PauliProduct::identity(self.d, self.n);
        acc.lambda = p.lambda;
        // p = omega^lambda prod_i X_i^{x_i} prod_i Z_i^{z_i}; generators on
        // distinct sites commute, so this ordering reproduces the matrix.
        for i in 0..self.n {
            acc = pauli_mul(&acc, &pauli_pow(&self.x_images[i], p.x[i])).expect("same shape");
        }
        for i in 0..self.n {
            acc = pauli_mul(&acc, &pauli_pow(&self.z_images[i], p.z[i])).expect("same shape");
        }
        acc
    }
}

/// Matrix-based Clifford test: conjugate every X/Z generator by `c` and
/// search the enumerated group for a match within `tol`. Returns the tableau
/// when every image is a Pauli product, `None` otherwise.
pub fn is_clifford<T: Real>(
    c: &Mat<T>,
    d: usize,
    n: usize,
    tol: T,
    guard: usize,
) -> Result<Option<CliffordTableau>> {
    let size = d.pow(n as u32);
    if c.dim() != size {
        return Err(Error::InvalidDimension(format!(
            "matrix size {} does not match d^n = {size}",
            c.dim()
        )));
    }
    let group = enumerate_group(d, n, guard)?;
    let group_mats: Vec<Mat<T>> = group
        .iter()
        .map(|p| matrix_of(p))
        .collect::<Result<_>>()?;
    let cd = c.dagger();
    let find_image = |g: &PauliProduct| -> Result<Option<PauliProduct>> {
        let img = &(c * &matrix_of::<T>(g)?) * &cd;
        for (p, m) in group.iter().zip(&group_mats) {
            if img.max_abs_diff(m) <= tol {
                return Ok(Some(p.clone()));
            }
        }
        Ok(None)
    };
    let mut x_images = Vec::with_capacity(n);
    let mut z_images = Vec::with_capacity(n);
    for site in 0..n {
        match find_image(&PauliProduct::x_generator(d, n, site))? {
            Some(p) => x_images.push(p),
            None => return Ok(None),
        }
        match find_image(&PauliProduct::z_generator(d, n, site))? {
            Some(p) => z_images.push(p),
            None => return Ok(None),
        }
    }
    Ok(Some(CliffordTableau { d, n, x_images, z_images }))
}
