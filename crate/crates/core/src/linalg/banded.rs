//! Banded LU factorisation with partial pivoting (band storage with kl extra
//! superdiagonals for pivot fill, as in the classic unblocked GB kernels).

use crate::error::{Error, Result};

/// LU factors of a banded matrix with lower bandwidth `kl` and upper
/// bandwidth `ku`; reusable for any number of right-hand sides.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    /// Column-major band storage, ldab = 2 kl + ku + 1.
    /// Entry (i, j) lives at ab[j * ldab + kl + ku + i - j].
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    /// Factors a banded matrix given by an entry iterator.
    ///
    /// Entries outside the declared band are rejected; `row_of` maps internal
    /// row numbers back to caller-side identifiers for diagnostics.
    pub fn factor<I>(n: usize, kl: usize, ku: usize, entries: I) -> Result<BandedLu>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let ldab = 2 * kl + ku + 1;
        let kv = kl + ku;
        let mut ab = vec![0.0; ldab * n];
        for (i, j, v) in entries {
            if i >= n || j >= n {
                return Err(Error::Dimension(format!("entry ({i}, {j}) outside {n} x {n}")));
            }
            let (lo, hi) = (j.saturating_sub(ku), (j + kl).min(n - 1));
            if i < lo || i > hi {
                return Err(Error::Dimension(format!(
                    "entry ({i}, {j}) outside band kl={kl}, ku={ku}"
                )));
            }
            ab[j * ldab + kv + i - j] += v;
        }

        let mut ipiv = vec![0usize; n];
        // last column touched by pivoting fill; monotone over j
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            // pivot search down column j
            let mut jp = 0;
            let mut best = ab[j * ldab + kv].abs();
            for p in 1..=km {
                let a = ab[j * ldab + kv + p].abs();
                if a > best {
                    best = a;
                    jp = p;
                }
            }
            ipiv[j] = j + jp;
            if best == 0.0 {
                return Err(Error::Singular { row: j, detail: format!("column {j}") });
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for col in j..=ju {
                    let base = col * ldab + kv + j - col;
                    ab.swap(base, base + jp);
                }
            }
            if km > 0 {
                let piv = ab[j * ldab + kv];
                for p in 1..=km {
                    ab[j * ldab + kv + p] /= piv;
                }
                for col in (j + 1)..=ju {
                    let t = ab[col * ldab + kv + j - col];
                    if t != 0.0 {
                        let (head, tail) = ab.split_at_mut(col * ldab);
                        let lcol = &head[j * ldab + kv + 1..j * ldab + kv + km + 1];
                        let ucol = &mut tail[kv + j - col + 1..kv + j - col + km + 1];
                        for p in 0..km {
                            ucol[p] -= lcol[p] * t;
                        }
                    }
                }
            }
        }
        Ok(BandedLu { n, kl, ku, ab, ipiv })
    }

    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves A x = b in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n, "right-hand side length mismatch");
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        let ldab = 2 * kl + ku + 1;
        let kv = kl + ku;
        // forward: P and L sweeps
        if kl > 0 {
            for j in 0..n.saturating_sub(1) {
                let jp = self.ipiv[j];
                if jp != j {
                    b.swap(j, jp);
                }
                let km = kl.min(n - 1 - j);
                let bj = b[j];
                for p in 1..=km {
                    b[j + p] -= self.ab[j * ldab + kv + p] * bj;
                }
            }
        }
        // backward: U sweep (bandwidth kl + ku after pivoting)
        for j in (0..n).rev() {
            b[j] /= self.ab[j * ldab + kv];
            let bj = b[j];
            let lo = j.saturating_sub(kv);
            for i in lo..j {
                b[i] -= self.ab[j * ldab + kv + i - j] * bj;
            }
        }
    }
}
