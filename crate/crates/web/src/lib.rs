//! wasm-bindgen bindings for the browser demo in `www/`.
//!
//! Groups are named `z<L>`, `u1`, `so3` or `a4`; `k` is the number of
//! frequencies kept (ignored for `a4`). Every function returns a flat
//! `Float64Array`.

use groupsync::amp::transform_e;
use groupsync::free_energy::Evaluator;
use groupsync::state_evolution::{se_fixed_point, SeConfig};
use groupsync::{CMat, Error, GroupModel, Result};
use wasm_bindgen::prelude::*;

pub fn group(name: &str, k: usize) -> Result<GroupModel> {
    match name {
        "u1" => GroupModel::u1(k, 256),
        "so3" => GroupModel::so3(k, 2048),
        "a4" => Ok(GroupModel::a4()),
        _ => match name.strip_prefix('z').and_then(|l| l.parse().ok()) {
            Some(order) => GroupModel::cyclic(order, k),
            None => Err(Error::Config(format!("unknown group `{name}`"))),
        },
    }
}

/// Re Tr E(c·I)/d on the primary irrep for `points` values of c in [0, c_max],
/// with every other coefficient zero.
pub fn e_curve(g: &GroupModel, c_max: f64, points: usize) -> Result<Vec<f64>> {
    let primary = g.stored_position(g.primary())?;
    let dims: Vec<usize> = g.stored_descriptors().map(|d| d.dim).collect();
    (0..points)
        .map(|i| {
            let c = c_max * i as f64 / (points.max(2) - 1) as f64;
            let coeffs: Vec<CMat> = dims
                .iter()
                .enumerate()
                .map(|(j, &d)| if j == primary { CMat::identity(d).scale(c) } else { CMat::zeros(d, d) })
                .collect();
            let e = transform_e(g, &coeffs)?;
            Ok(e[primary].trace().re / dims[primary] as f64)
        })
        .collect()
}

/// f(t·1) and its standard error, interleaved, for t in [0, gamma_max].
pub fn free_energy_ray(g: &GroupModel, lambda: f64, gamma_max: f64, points: usize, mc: usize, seed: u64) -> Result<Vec<f64>> {
    let m = g.stored().len();
    let ev = Evaluator::new(g, mc, seed)?;
    let mut out = Vec::with_capacity(2 * points);
    for i in 0..points {
        let t = gamma_max * i as f64 / (points.max(2) - 1) as f64;
        let (f, se) = ev.free_energy(&vec![t; m], &vec![lambda; m])?;
        out.push(f);
        out.push(se);
    }
    Ok(out)
}

/// State-evolution iterates from γ₀·1, flattened with one γ per stored irrep.
pub fn trajectory(g: &GroupModel, lambda: f64, gamma0: f64, max_iters: usize, mc: usize, seed: u64) -> Result<Vec<f64>> {
    let m = g.stored().len();
    let cfg = SeConfig { mc_samples: mc, max_iters, seed, ..SeConfig::default() };
    let res = se_fixed_point(&vec![gamma0; m], &vec![lambda; m], g, &cfg)?;
    Ok(res.trajectory.concat())
}

fn js(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Names of the stored irreps, one per γ component.
#[wasm_bindgen]
pub fn irrep_names(name: &str, k: usize) -> std::result::Result<Vec<String>, JsError> {
    Ok(group(name, k).map_err(js)?.stored_descriptors().map(|d| d.name()).collect())
}

#[wasm_bindgen]
pub fn e_transform_curve(name: &str, k: usize, c_max: f64, points: usize) -> std::result::Result<Vec<f64>, JsError> {
    e_curve(&group(name, k).map_err(js)?, c_max, points).map_err(js)
}

#[wasm_bindgen]
pub fn free_energy_curve(
    name: &str,
    k: usize,
    lambda: f64,
    gamma_max: f64,
    points: usize,
    mc: usize,
    seed: u64,
) -> std::result::Result<Vec<f64>, JsError> {
    free_energy_ray(&group(name, k).map_err(js)?, lambda, gamma_max, points, mc, seed).map_err(js)
}

#[wasm_bindgen]
pub fn se_trajectory(
    name: &str,
    k: usize,
    lambda: f64,
    gamma0: f64,
    max_iters: usize,
    mc: usize,
    seed: u64,
) -> std::result::Result<Vec<f64>, JsError> {
    trajectory(&group(name, k).map_err(js)?, lambda, gamma0, max_iters, mc, seed).map_err(js)
}
