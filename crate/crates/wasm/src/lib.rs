//! Browser bindings for `kyp-core`.
//!
//! Every export takes and returns JSON text so the page needs no glue
//! beyond `JSON.parse`. Failures come back as `{"error":{code,message}}`.

use kyp_core::format::{self, number};
use kyp_core::linalg;
use kyp_core::system::{hinf_norm_detailed, transfer_value};
use kyp_core::{
    compute_ha, compute_hr, dissipation_trace, kyp_gap, minimality_report, random, simulate, Error, KypFlavor,
    StorageOptions,
};
use num_complex::Complex64;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const HINF_REL_TOL: f64 = 1e-10;

fn report(result: kyp_core::Result<Value>) -> String {
    let v = result.unwrap_or_else(|e| json!({ "error": { "code": e.code(), "message": e.to_string() } }));
    format::to_canonical_string(&v)
}

/// Largest singular value of F(e^{i theta}) at `samples` points on [0, pi].
fn gain_curve(sys: &kyp_core::StateSpaceSystem, samples: usize) -> kyp_core::Result<Value> {
    let mut theta = Vec::with_capacity(samples);
    let mut gain = Vec::with_capacity(samples);
    let last = samples.max(2) - 1;
    for k in 0..=last {
        let t = std::f64::consts::PI * k as f64 / last as f64;
        let f = transfer_value(sys, Complex64::from_polar(1.0, t))?;
        theta.push(number(t));
        gain.push(number(linalg::spectral_norm(&f)?));
    }
    Ok(json!({ "theta": theta, "gain": gain }))
}

pub fn analyze_json(system: &str, samples: usize) -> String {
    report((|| {
        let sys = format::parse_system(system)?;
        let mini = minimality_report(&sys)?;
        let mut out = json!({
            "n": sys.n(),
            "m": sys.m(),
            "p": sys.p(),
            "spectral_radius": number(mini.spectral_radius),
            "minimal": mini.minimal,
        });
        match hinf_norm_detailed(&sys, HINF_REL_TOL) {
            Ok(est) => {
                out["hinf"] = number(est.norm);
                out["hinf_theta"] = number(est.theta);
                out["response"] = gain_curve(&sys, samples)?;
            }
            Err(Error::Unstable { .. }) => {
                out["hinf"] = number(f64::INFINITY);
                return Ok(out);
            }
            Err(e) => return Err(e),
        }
        let opts = StorageOptions::default();
        let storage = compute_ha(&sys, &opts).and_then(|ha| Ok((ha, compute_hr(&sys, &opts)?)));
        match storage {
            Ok((ha, hr)) => {
                out["available"] = format::certificate_to_value(&ha);
                out["required"] = format::certificate_to_value(&hr);
            }
            Err(e) => out["storage_error"] = json!({ "code": e.code(), "message": e.to_string() }),
        }
        Ok(out)
    })())
}

fn flavor_of(name: &str) -> kyp_core::Result<KypFlavor> {
    match name {
        "standard" => Ok(KypFlavor::Standard),
        "strict" => Ok(KypFlavor::Strict),
        "adjoint" => Ok(KypFlavor::Adjoint),
        other => Err(Error::Precondition(format!("unknown flavor {other:?}"))),
    }
}

pub fn kyp_check_json(system: &str, h: &str, flavor: &str, delta: f64) -> String {
    report((|| {
        let sys = format::parse_system(system)?;
        let h = format::matrix_from_value(&format::parse_json(h)?, "H")?;
        let r = kyp_gap(&sys, &h, flavor_of(flavor)?, delta)?;
        Ok(format::kyp_report_to_value(&r))
    })())
}

pub fn dissipation_json(system: &str, h: &str, x0: &str, steps: usize, seed: u64) -> String {
    report((|| {
        let sys = format::parse_system(system)?;
        let h = format::matrix_from_value(&format::parse_json(h)?, "H")?;
        let x0 = format::vector_from_value(&format::parse_json(x0)?, "x0")?;
        let inputs = random::uniform_inputs(seed, sys.m(), steps);
        let traj = simulate(&sys, &x0, &inputs, 0)?;
        let trace = dissipation_trace(&sys, &h, &traj, 0.0)?;
        let stored: Vec<Value> = traj.states.iter().map(|x| number(linalg::quadratic_form(&h, x))).collect();
        let supply: Vec<Value> = inputs
            .iter()
            .zip(&traj.outputs)
            .map(|(u, y)| number(u.norm_squared() - y.norm_squared()))
            .collect();
        Ok(json!({
            "storage": stored,
            "supply": supply,
            "residual": trace.residuals.iter().copied().map(number).collect::<Vec<_>>(),
            "max_residual": number(trace.max_residual),
        }))
    })())
}

/// Norm, minimality, gain curve and both extremal storage certificates.
#[wasm_bindgen]
pub fn analyze(system: &str, samples: usize) -> String {
    analyze_json(system, samples)
}

/// KYP gap of a candidate H. `flavor` is standard, strict or adjoint.
#[wasm_bindgen]
pub fn kyp_check(system: &str, h: &str, flavor: &str, delta: f64) -> String {
    kyp_check_json(system, h, flavor, delta)
}

/// Storage and supply along a seeded random trajectory from `x0`.
#[wasm_bindgen]
pub fn dissipation(system: &str, h: &str, x0: &str, steps: usize, seed: u32) -> String {
    dissipation_json(system, h, x0, steps, u64::from(seed))
}
