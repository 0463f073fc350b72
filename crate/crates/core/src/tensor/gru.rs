// SPDX-License-Identifier: Apache-2.0
//! Gated recurrent unit.
//!
//! ```text
//! z  = σ(x·Wz + h·Uz + bz)
//! r  = σ(x·Wr + h·Ur + br)
//! ĥ  = tanh(x·Wh + (r⊙h)·Uh + bh)
//! h' = (1 − z)⊙h + z⊙ĥ
//! ```

use super::tape::sigmoid;
use super::{ParamId, ParamStore};
use ndarray::{Array2, ArrayView2, Axis, Zip};
use rand::Rng;

const SUFFIXES: [&str; 9] = ["wz", "uz", "bz", "wr", "ur", "br", "wh", "uh", "bh"];

/// Parameter handles in the order Wz, Uz, bz, Wr, Ur, br, Wh, Uh, bh.
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    ids: [ParamId; 9],
}

impl GruParams {
    /// Registers `<prefix>.wz` … `<prefix>.bh`, all U(±1/√hidden).
    pub fn new<R: Rng>(store: &mut ParamStore, prefix: &str, input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        let ids = SUFFIXES.map(|s| {
            let name = format!("{prefix}.{s}");
            let rows = match s.as_bytes()[0] {
                b'w' => input_dim,
                b'u' => hidden_dim,
                _ => 1,
            };
            store.add_uniform(name, rows, hidden_dim, hidden_dim, rng)
        });
        GruParams {
            input_dim,
            hidden_dim,
            ids,
        }
    }

    pub fn ids(&self) -> [ParamId; 9] {
        self.ids
    }
}

pub(crate) struct GruCache {
    z: Array2<f64>,
    r: Array2<f64>,
    hh: Array2<f64>,
    rh: Array2<f64>,
}

pub(crate) struct GruGrads {
    pub dx: Array2<f64>,
    pub dh: Array2<f64>,
    pub dparams: [Array2<f64>; 9],
}

fn affine(
    x: ArrayView2<f64>,
    w: &ArrayView2<f64>,
    h: ArrayView2<f64>,
    u: &ArrayView2<f64>,
    b: &ArrayView2<f64>,
) -> Array2<f64> {
    let mut a = x.dot(w);
    ndarray::linalg::general_mat_mul(1.0, &h, u, 1.0, &mut a);
    a += b;
    a
}

pub(crate) fn forward(x: ArrayView2<f64>, h: ArrayView2<f64>, p: &[ArrayView2<f64>; 9]) -> (Array2<f64>, GruCache) {
    let z = affine(x, &p[0], h, &p[1], &p[2]).mapv_into(sigmoid);
    let r = affine(x, &p[3], h, &p[4], &p[5]).mapv_into(sigmoid);
    let rh = &r * &h;
    let hh = affine(x, &p[6], rh.view(), &p[7], &p[8]).mapv_into(f64::tanh);
    let out = Zip::from(&z)
        .and(&h)
        .and(&hh)
        .map_collect(|&z, &h, &hh| (1.0 - z) * h + z * hh);
    (out, GruCache { z, r, hh, rh })
}

pub(crate) fn backward(
    x: ArrayView2<f64>,
    h: ArrayView2<f64>,
    p: &[ArrayView2<f64>; 9],
    c: &GruCache,
    g: ArrayView2<f64>,
) -> GruGrads {
    let daz = Zip::from(&g)
        .and(&c.z)
        .and(&c.hh)
        .and(&h)
        .map_collect(|&g, &z, &hh, &h| g * (hh - h) * z * (1.0 - z));
    let dah = Zip::from(&g)
        .and(&c.z)
        .and(&c.hh)
        .map_collect(|&g, &z, &hh| g * z * (1.0 - hh * hh));
    let drh = dah.dot(&p[7].t());
    let dar = Zip::from(&drh)
        .and(&h)
        .and(&c.r)
        .map_collect(|&d, &h, &r| d * h * r * (1.0 - r));

    let mut dh = Zip::from(&g)
        .and(&c.z)
        .and(&drh)
        .and(&c.r)
        .map_collect(|&g, &z, &d, &r| g * (1.0 - z) + d * r);
    ndarray::linalg::general_mat_mul(1.0, &daz, &p[1].t(), 1.0, &mut dh);
    ndarray::linalg::general_mat_mul(1.0, &dar, &p[4].t(), 1.0, &mut dh);

    let mut dx = daz.dot(&p[0].t());
    ndarray::linalg::general_mat_mul(1.0, &dar, &p[3].t(), 1.0, &mut dx);
    ndarray::linalg::general_mat_mul(1.0, &dah, &p[6].t(), 1.0, &mut dx);

    let colsum = |a: &Array2<f64>| a.sum_axis(Axis(0)).insert_axis(Axis(0));
    let dparams = [
        x.t().dot(&daz),
        h.t().dot(&daz),
        colsum(&daz),
        x.t().dot(&dar),
        h.t().dot(&dar),
        colsum(&dar),
        x.t().dot(&dah),
        c.rh.t().dot(&dah),
        colsum(&dah),
    ];
    GruGrads { dx, dh, dparams }
}

/// One GRU step outside of any tape.
pub fn gru_cell(store: &ParamStore, p: &GruParams, x: ArrayView2<f64>, h: ArrayView2<f64>) -> Array2<f64> {
    let w: [ArrayView2<f64>; 9] = std::array::from_fn(|i| store.get(p.ids[i]).view());
    forward(x, h, &w).0
}
