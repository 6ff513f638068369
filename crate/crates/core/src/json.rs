//! Complex numbers as `[re, im]` pairs.

use num_complex::Complex64 as C64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub fn pair(c: C64) -> [f64; 2] {
    [c.re, c.im]
}

pub fn from_pair(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

pub fn check_finite<E: serde::de::Error>(p: [f64; 2]) -> Result<C64, E> {
    if p[0].is_finite() && p[1].is_finite() {
        Ok(from_pair(p))
    } else {
        Err(E::custom("complex entries must be finite"))
    }
}

/// Serde adapter for a single `C64`.
pub mod c64_pair {
    use super::*;

    pub fn serialize<S: Serializer>(c: &C64, s: S) -> Result<S::Ok, S::Error> {
        pair(*c).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        check_finite(<[f64; 2]>::deserialize(d)?)
    }
}

/// Serde adapter for `Vec<C64>`.
pub mod cvec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|c| pair(*c)).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        let raw = Vec::<[f64; 2]>::deserialize(d)?;
        raw.into_iter().map(check_finite::<D::Error>).collect()
    }
}

/// Serde adapter for a dense square or rectangular matrix given as rows.
pub mod cmat {
    use super::*;
    use nalgebra::DMatrix;

    pub fn serialize<S: Serializer>(m: &DMatrix<C64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| pair(m[(i, j)])).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<DMatrix<C64>, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        let nr = rows.len();
        let nc = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != nc) {
            return Err(D::Error::custom("ragged matrix rows"));
        }
        let mut out = DMatrix::zeros(nr, nc);
        for (i, r) in rows.into_iter().enumerate() {
            for (j, p) in r.into_iter().enumerate() {
                out[(i, j)] = check_finite::<D::Error>(p)?;
            }
        }
        Ok(out)
    }
}
