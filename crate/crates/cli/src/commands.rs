//! Command implementations. Each returns the report tree and a pass verdict;
//! exit-code mapping lives in `main`.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use qlebesgue::algebra::kron;
use qlebesgue::numerics::{c, cr, hermitian_eig, matrix_exp};
use qlebesgue::{gns, kms, lebesgue, radon_nikodym};
use qlebesgue::{CMatrix, CVector};

use crate::error::CliError;
use crate::instance::{self, InstanceFile, LoadedInstance, StateSpec};
use crate::report::{complex_pairs, num, real_list};

/// Residual threshold for pass/fail verdicts on reported checks.
const CHECK_TOL: f64 = 1e-8;

/// Deterministic sample times for the invariance check.
const TIME_SAMPLES: [f64; 3] = [0.5, -1.25, 2.0];

pub struct Outcome {
    pub report: Value,
    pub pass: bool,
}

fn state<'a>(
    loaded: &'a LoadedInstance,
    name: &str,
) -> Result<&'a qlebesgue::functional::Plf, CliError> {
    loaded
        .states
        .get(name)
        .ok_or_else(|| CliError::Input(format!("unknown state {name:?}")))
}

pub fn cmd_info(loaded: &LoadedInstance) -> Result<Outcome, CliError> {
    let alg = &loaded.algebra;
    let commutant = alg.commutant()?;
    let center = alg.center()?;
    let mut states = serde_json::Map::new();
    let mut all_positive = true;
    for (name, plf) in &loaded.states {
        let positive = plf.is_positive();
        all_positive &= positive;
        let isotropic_rank = match plf.isotropic_ideal() {
            Ok(sub) => sub.dim(),
            Err(_) => alg.dim(),
        };
        states.insert(
            name.clone(),
            json!({
                "positive": positive,
                "norm": num(plf.norm())?,
                "isotropic_rank": isotropic_rank,
            }),
        );
    }
    let report = json!({
        "command": "info",
        "algebra": {
            "ambient_dim": alg.ambient_dim(),
            "dim": alg.dim(),
            "commutant_dim": commutant.dim(),
            "center_dim": center.dim(),
            "abelian": alg.is_abelian(),
        },
        "states": Value::Object(states),
        "pass": all_positive,
    });
    Ok(Outcome {
        report,
        pass: all_positive,
    })
}

pub fn cmd_decompose(
    loaded: &LoadedInstance,
    mu_name: &str,
    lambda_name: &str,
) -> Result<Outcome, CliError> {
    let mu = state(loaded, mu_name)?;
    let lambda = state(loaded, lambda_name)?;
    let parts = lebesgue::decompose(mu, lambda)?;
    let cert = lebesgue::is_absolutely_continuous(mu, lambda)?;
    let singular = lebesgue::is_singular(mu, lambda)?;
    let diag = parts.diagnostics();
    let mut report = json!({
        "command": "decompose",
        "mu": mu_name,
        "lambda": lambda_name,
        "mu_ac": complex_pairs(parts.mu_ac().values())?,
        "mu_s": complex_pairs(parts.mu_s().values())?,
        "diagnostics": {
            "kernel_inclusion": diag.kernel_inclusion,
            "parallel_sum_norm": num(diag.parallel_sum_norm)?,
            "short_residual": num(diag.short_residual)?,
        },
        "absolutely_continuous": cert.absolutely_continuous,
        "uniform_bound": match cert.uniform_bound {
            Some(t) => num(t)?,
            None => Value::Null,
        },
        "mutually_singular": singular,
        "pass": true,
    });
    if let Some(dynamics) = &loaded.dynamics {
        let residual = kms::kms_residual(lambda, dynamics)?;
        report["kms"] = json!({
            "residual": num(residual)?,
            "equilibrium": residual <= CHECK_TOL,
            "note": "informational: the decomposition itself does not depend on the dynamics",
        });
    }
    Ok(Outcome { report, pass: true })
}

pub fn cmd_derivative(
    loaded: &LoadedInstance,
    mu_name: &str,
    lambda_name: &str,
) -> Result<Outcome, CliError> {
    let mu = state(loaded, mu_name)?;
    let lambda = state(loaded, lambda_name)?;
    let gns_data = gns::gns(lambda)?;
    let derivative = radon_nikodym::derivative(mu, &gns_data)?;
    let spectrum = if gns_data.is_degenerate() {
        vec![]
    } else {
        hermitian_eig(derivative.matrix(), &loaded.tolerance)?.eigenvalues
    };
    let reconstruction_residual = (derivative.reconstruct()?.values() - mu.values()).norm();
    let pass = derivative.commutation_residual() <= CHECK_TOL
        && reconstruction_residual <= CHECK_TOL * (1.0 + mu.values().norm());
    let report = json!({
        "command": "derivative",
        "mu": mu_name,
        "lambda": lambda_name,
        "gns_dim": gns_data.dim(),
        "spectrum": real_list(&spectrum)?,
        "norm_bound": num(derivative.norm_bound())?,
        "commutation_residual": num(derivative.commutation_residual())?,
        "reconstruction_residual": num(reconstruction_residual)?,
        "threshold": num(CHECK_TOL)?,
        "pass": pass,
    });
    Ok(Outcome { report, pass })
}

pub fn cmd_kms(
    loaded: &LoadedInstance,
    lambda_name: &str,
    beta_override: Option<f64>,
) -> Result<Outcome, CliError> {
    let lambda = state(loaded, lambda_name)?;
    let dynamics = match (&loaded.dynamics, beta_override) {
        (Some(d), None) => d.clone(),
        (Some(d), Some(beta)) => {
            kms::Dynamics::new(&loaded.algebra, d.hamiltonian().clone(), beta)?
        }
        (None, _) => {
            return Err(CliError::Input(
                "instance has no dynamics section".into(),
            ))
        }
    };
    let residual = kms::kms_residual(lambda, &dynamics)?;
    let invariance = kms::time_invariance_residual(lambda, &dynamics, &TIME_SAMPLES)?;
    let gibbs = dynamics.gibbs()?;
    let gibbs_distance = (lambda.values() - gibbs.values()).norm();
    let pass = residual <= CHECK_TOL && invariance <= CHECK_TOL;
    let mut report = json!({
        "command": "kms",
        "lambda": lambda_name,
        "beta": num(dynamics.beta())?,
        "kms_residual": num(residual)?,
        "time_invariance_residual": num(invariance)?,
        "gibbs_distance": num(gibbs_distance)?,
        "threshold": num(CHECK_TOL)?,
        "pass": pass,
    });
    if dynamics.beta() == 0.0 {
        // At infinite temperature the equilibrium state is the trace.
        let tracial = qlebesgue::functional::Plf::tracial(&loaded.algebra);
        let scaled = tracial.scale(lambda.norm());
        report["trace_distance"] = num((lambda.values() - scaled.values()).norm())?;
    }
    Ok(Outcome { report, pass })
}

fn pauli(which: char) -> CMatrix {
    match which {
        'x' => CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)]),
        'y' => CMatrix::from_row_slice(2, 2, &[cr(0.0), c(0.0, -1.0), c(0.0, 1.0), cr(0.0)]),
        'z' => CMatrix::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(-1.0)]),
        _ => CMatrix::identity(2, 2),
    }
}

fn site_operator(sites: usize, position: usize, op: &CMatrix) -> CMatrix {
    let mut acc = CMatrix::identity(1, 1);
    for k in 0..sites {
        let factor = if k == position {
            op.clone()
        } else {
            CMatrix::identity(2, 2)
        };
        acc = kron(&acc, &factor);
    }
    acc
}

fn chain_hamiltonian(sites: usize, coupling: &str) -> Result<CMatrix, CliError> {
    let n = 1usize << sites;
    let mut h = CMatrix::zeros(n, n);
    match coupling {
        "ising" => {
            for i in 0..sites.saturating_sub(1) {
                h += site_operator(sites, i, &pauli('z'))
                    * site_operator(sites, i + 1, &pauli('z'));
            }
            for i in 0..sites {
                h += site_operator(sites, i, &pauli('x')).scale(0.5);
            }
        }
        "xy" => {
            for i in 0..sites.saturating_sub(1) {
                h += (site_operator(sites, i, &pauli('x'))
                    * site_operator(sites, i + 1, &pauli('x')))
                .scale(0.5);
                h += (site_operator(sites, i, &pauli('y'))
                    * site_operator(sites, i + 1, &pauli('y')))
                .scale(0.5);
            }
        }
        "field" => {
            for i in 0..sites {
                h += site_operator(sites, i, &pauli('z'));
            }
        }
        other => {
            return Err(CliError::Input(format!(
                "unknown coupling {other:?}; expected ising, xy, or field"
            )))
        }
    }
    Ok(h)
}

pub fn cmd_spinchain(
    out: &Path,
    sites: usize,
    coupling: &str,
    beta: f64,
    seed: u64,
    tolerance: qlebesgue::Tolerance,
) -> Result<Outcome, CliError> {
    if sites == 0 || sites > 6 {
        return Err(CliError::Input(format!(
            "sites must lie in 1..=6 (ambient dimension capped at 64), got {sites}"
        )));
    }
    if !beta.is_finite() || beta < 0.0 {
        return Err(CliError::Input(format!("beta must be finite and >= 0, got {beta}")));
    }
    let n = 1usize << sites;
    let mut generators = Vec::with_capacity(2 * sites);
    for i in 0..sites {
        generators.push(site_operator(sites, i, &pauli('x')));
        generators.push(site_operator(sites, i, &pauli('z')));
    }
    let h = chain_hamiltonian(sites, coupling)?;

    let boltzmann = matrix_exp(&h.scale(-beta), &tolerance)?;
    let z = boltzmann.trace().re;
    let rho_lambda = boltzmann.unscale(z);

    // Deterministic perturbation: mix the Gibbs density with a seeded pure state.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = CVector::from_fn(n, |_, _| {
        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    w = w.unscale(w.norm());
    let pure = &w * w.adjoint();
    let mixed = rho_lambda.scale(0.7) + pure.scale(0.3);
    let rho_mu = (&mixed + mixed.adjoint()).scale(0.5);

    let mut states = std::collections::BTreeMap::new();
    states.insert(
        "lambda".to_string(),
        StateSpec::Density {
            matrix: instance::matrix_to_data(&rho_lambda),
        },
    );
    states.insert(
        "mu".to_string(),
        StateSpec::Density {
            matrix: instance::matrix_to_data(&rho_mu),
        },
    );
    let file = InstanceFile {
        ambient_dim: n,
        generators: generators.iter().map(instance::matrix_to_data).collect(),
        states,
        dynamics: Some(instance::DynamicsSpec {
            hamiltonian: instance::matrix_to_data(&h),
            beta,
        }),
        tolerance: None,
    };
    let text = instance::to_canonical_json(&file)?;
    std::fs::write(out, &text)
        .map_err(|e| CliError::Input(format!("cannot write {}: {e}", out.display())))?;
    let report = json!({
        "command": "spinchain",
        "sites": sites,
        "coupling": coupling,
        "beta": num(beta)?,
        "seed": seed,
        "ambient_dim": n,
        "states": ["lambda", "mu"],
        "written": out.display().to_string(),
        "pass": true,
    });
    Ok(Outcome { report, pass: true })
}
