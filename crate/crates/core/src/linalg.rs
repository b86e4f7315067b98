//! Direct solvers for the monolithic step systems.
//!
//! In the column-major node ordering every coupling is within a band of
//! half-width `ny + 2`, except the periodic wrap between the first and last
//! x-columns. We therefore factor the banded part with partial pivoting and
//! fold the wrap entries back in through a low-rank correction
//! (Sherman-Morrison-Woodbury), which keeps a step solve at a few
//! milliseconds even on the production grids.

use crate::error::{Error, Result};

/// General banded matrix in LAPACK-style band storage with room for
/// pivoting fill-in.
#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    /// Column-major band storage: entry (i, j) lives at
    /// `data[j * ldab + kl + ku + i - j]`.
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            ldab,
            data: vec![0.0; ldab * n],
        }
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n && j < self.n);
        debug_assert!(i + self.ku >= j && j + self.kl >= i, "entry outside band");
        j * self.ldab + self.kl + self.ku + i - j
    }

    /// Accumulate `v` into entry (i, j). The entry must lie in the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let o = self.offset(i, j);
        self.data[o] += v;
    }

    pub fn reset(&mut self) {
        self.data.fill(0.0);
    }

    /// LU factorization with partial pivoting, consuming the storage.
    pub fn factor(mut self) -> Result<BandedLu> {
        let (n, kl, ku, ldab) = (self.n, self.kl, self.ku, self.ldab);
        let kv = kl + ku; // superdiagonals after fill-in
        let mut ipiv = vec![0usize; n];
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            // pivot search in column j
            let mut piv_row = j;
            let mut piv_val = self.data[j * ldab + kv].abs();
            for i in (j + 1)..=(j + km) {
                let v = self.data[j * ldab + kv + i - j].abs();
                if v > piv_val {
                    piv_val = v;
                    piv_row = i;
                }
            }
            if piv_val == 0.0 {
                return Err(Error::Singular(format!("zero pivot in column {j}")));
            }
            ipiv[j] = piv_row;
            let jmax = (j + kv).min(n - 1);
            if piv_row != j {
                for c in j..=jmax {
                    let oa = c * ldab + kv + j - c;
                    let ob = c * ldab + kv + piv_row - c;
                    self.data.swap(oa, ob);
                }
            }
            let pivot = self.data[j * ldab + kv];
            for i in (j + 1)..=(j + km) {
                let m = self.data[j * ldab + kv + i - j] / pivot;
                self.data[j * ldab + kv + i - j] = m;
                if m != 0.0 {
                    for c in (j + 1)..=jmax {
                        let u = self.data[c * ldab + kv + j - c];
                        if u != 0.0 {
                            self.data[c * ldab + kv + i - c] -= m * u;
                        }
                    }
                }
            }
        }
        Ok(BandedLu {
            n,
            kl,
            ku,
            ldab,
            data: self.data,
            ipiv,
        })
    }
}

/// Factored banded matrix.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    data: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        let (n, kl, ldab) = (self.n, self.kl, self.ldab);
        let kv = self.kl + self.ku;
        // forward substitution with row swaps
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let bj = b[j];
            if bj != 0.0 {
                let km = kl.min(n - 1 - j);
                for i in (j + 1)..=(j + km) {
                    b[i] -= self.data[j * ldab + kv + i - j] * bj;
                }
            }
        }
        // back substitution
        for j in (0..n).rev() {
            let mut s = b[j];
            let imax = (j + kv).min(n - 1);
            for c in (j + 1)..=imax {
                s -= self.data[c * ldab + kv + j - c] * b[c];
            }
            b[j] = s / self.data[j * ldab + kv];
        }
    }
}

/// Dense LU with partial pivoting for the small capacitance systems.
#[derive(Debug, Clone)]
struct DenseLu {
    n: usize,
    a: Vec<f64>,
    piv: Vec<usize>,
}

impl DenseLu {
    fn factor(mut a: Vec<f64>, n: usize) -> Result<Self> {
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let mut p = k;
            let mut pv = a[k * n + k].abs();
            for i in (k + 1)..n {
                let v = a[i * n + k].abs();
                if v > pv {
                    pv = v;
                    p = i;
                }
            }
            if pv == 0.0 {
                return Err(Error::Singular("capacitance matrix singular".into()));
            }
            piv[k] = p;
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
            }
            let pivot = a[k * n + k];
            for i in (k + 1)..n {
                let m = a[i * n + k] / pivot;
                a[i * n + k] = m;
                for c in (k + 1)..n {
                    a[i * n + c] -= m * a[k * n + c];
                }
            }
        }
        Ok(Self { n, a, piv })
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                b.swap(k, p);
            }
            for i in (k + 1)..n {
                b[i] -= self.a[i * n + k] * b[k];
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for c in (k + 1)..n {
                s -= self.a[k * n + c] * b[c];
            }
            b[k] = s / self.a[k * n + k];
        }
    }
}

/// Assembler for the strip systems: banded interior plus the periodic wrap
/// entries, which are tracked separately and folded in at solve time.
#[derive(Debug, Clone)]
pub struct StripSystem {
    n: usize,
    stride: usize,
    nx: usize,
    band: BandedMatrix,
    wrap: Vec<(usize, usize, f64)>,
}

impl StripSystem {
    pub fn new(nx: usize, stride: usize) -> Self {
        let n = nx * stride;
        Self {
            n,
            stride,
            nx,
            band: BandedMatrix::zeros(n, stride, stride),
            wrap: Vec::with_capacity(2 * stride),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Route an entry either into the band or to the wrap correction.
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        let xr = r / self.stride;
        let xc = c / self.stride;
        let is_wrap = (xr == 0 && xc == self.nx - 1) || (xr == self.nx - 1 && xc == 0);
        if is_wrap {
            self.wrap.push((r, c, v));
        } else {
            self.band.add(r, c, v);
        }
    }

    pub fn factor(self) -> Result<StripFactors> {
        let rank = self.wrap.len();
        let blu = self.band.factor()?;
        // Z = B^{-1} e_{r_k} for every wrap entry.
        let mut z = vec![0.0; rank * self.n];
        for (k, &(r, _, _)) in self.wrap.iter().enumerate() {
            let col = &mut z[k * self.n..(k + 1) * self.n];
            col[r] = 1.0;
            blu.solve_in_place(col);
        }
        // Capacitance C = I + W^T Z with W columns v_k e_{c_k}.
        let mut cap = vec![0.0; rank * rank];
        for (k, &(_, c, v)) in self.wrap.iter().enumerate() {
            for l in 0..rank {
                let zkl = z[l * self.n + c];
                cap[k * rank + l] += v * zkl;
            }
            cap[k * rank + k] += 1.0;
        }
        let cap_lu = if rank > 0 {
            Some(DenseLu::factor(cap, rank)?)
        } else {
            None
        };
        Ok(StripFactors {
            n: self.n,
            blu,
            z,
            cap_lu,
            wrap: self.wrap,
        })
    }
}

/// Factored strip system ready for repeated solves.
#[derive(Debug, Clone)]
pub struct StripFactors {
    n: usize,
    blu: BandedLu,
    z: Vec<f64>,
    cap_lu: Option<DenseLu>,
    wrap: Vec<(usize, usize, f64)>,
}

impl StripFactors {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        self.blu.solve_in_place(b);
        let rank = self.wrap.len();
        if rank == 0 {
            return;
        }
        let mut w = vec![0.0; rank];
        for (k, &(_, c, v)) in self.wrap.iter().enumerate() {
            w[k] = v * b[c];
        }
        self.cap_lu.as_ref().unwrap().solve_in_place(&mut w);
        for (k, wk) in w.iter().enumerate() {
            if *wk != 0.0 {
                let col = &self.z[k * self.n..(k + 1) * self.n];
                for (bi, zi) in b.iter_mut().zip(col) {
                    *bi -= wk * zi;
                }
            }
        }
    }
}
