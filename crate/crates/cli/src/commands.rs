//! Command implementations. Each returns a verdict exit code (0 pass,
//! 1 quantitative failure), a JSON payload, and a human-readable rendering;
//! input and usage errors propagate as `CliError` and exit with code 2.

use crate::model::{load_model, Model, ModelError, ModelFunctional};
use crate::report::{sig6, sig6_complex};
use hist_core::decoherence::{
    build_x_from_operator_form, build_x_from_operator_form_probed, consistency_check,
    consistency_check_homogeneous, d_operator_form, d_x_form, probability_with_tol,
    validate_x, ConsistencyReport, EngineError, XOperatorFunctional, XValidationReport,
};
use hist_core::histories::{homogeneous_projector, HomogeneousHistory, TemporalSupport};
use hist_core::pathspace::{
    d_path, path_vs_operator_crosscheck, verify_path_axioms, ActionSpec, PathError,
    PathSpaceModel, PathSpaceModelRepr, PathSubset,
};
use hist_core::sampling::{random_homogeneous_history, random_path_subset, rng_from_seed};
use serde_json::{json, Value};
use std::path::Path;
use thiserror::Error;

/// Threshold for the path/operator crosscheck on equal-modulus transfers.
pub const CROSSCHECK_TOL: f64 = 1e-9;
/// Threshold on the agreement of the two X construction routes and on the
/// operator-form/X-form crosscheck of a freshly built X.
pub const BUILD_X_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    Engine(#[from] EngineError),
    #[error("{0}")]
    Path(#[from] PathError),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed JSON in {path}: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Usage(String),
}

pub struct Outcome {
    pub exit: i32,
    pub payload: Value,
    pub human: String,
}

fn set_member_names(model: &Model, set: &str) -> Vec<String> {
    model
        .history_sets
        .get(set)
        .map(|entries| {
            entries
                .iter()
                .enumerate()
                .map(|(k, (name, _))| name.clone().unwrap_or_else(|| k.to_string()))
                .collect()
        })
        .unwrap_or_default()
}

fn render_consistency(report: &ConsistencyReport, names: &[String]) -> String {
    let mut out = String::new();
    let n = report.probabilities.len();
    out.push_str(&format!(
        "members: {}\n",
        names.join(", ")
    ));
    out.push_str("pair |d| matrix:\n");
    for i in 0..n {
        out.push_str("  ");
        for j in 0..n {
            out.push_str(&format!("{:>12}", sig6(report.pair_values[(i, j)].norm())));
        }
        out.push('\n');
    }
    out.push_str(&format!(
        "max off-diagonal |d|: {}\n",
        sig6(report.max_offdiag)
    ));
    out.push_str(&format!(
        "consistent at tol {:.1e}: {}\n",
        report.tol, report.consistent
    ));
    out.push_str("probabilities:\n");
    for (name, p) in names.iter().zip(&report.probabilities) {
        out.push_str(&format!("  {name}: {}\n", sig6(*p)));
    }
    out.push_str(&format!("probability sum: {}\n", sig6(report.prob_sum)));
    out.push_str(&format!("kolmogorov checks: {}\n", report.kolmogorov_ok));
    out.push_str(&format!("functional form: {}", report.functional_form));
    out
}

/// `hist check`: certify a history set, extract probabilities.
pub fn cmd_check(model_path: &Path, set: &str, tol: f64) -> Result<Outcome, CliError> {
    let model = load_model(model_path)?;
    let names = set_member_names(&model, set);
    let report = match &model.functional {
        ModelFunctional::Operator => {
            let f = model.operator_functional()?;
            let histories: Vec<HomogeneousHistory> = model
                .history_set(set)?
                .iter()
                .map(|(_, h)| h.clone())
                .collect();
            consistency_check_homogeneous(&histories, &f, tol)?
        }
        _ => {
            let partition = model.set_partition(set)?;
            let form = model.functional()?;
            consistency_check(&partition, &form, tol)?
        }
    };
    let human = render_consistency(&report, &names);
    let exit = if report.consistent { 0 } else { 1 };
    let payload = json!({
        "set": set,
        "members": names,
        "report": report,
    });
    Ok(Outcome {
        exit,
        payload,
        human,
    })
}

/// `hist prob`: probability of one history addressed as SET/NAME or
/// SET/INDEX.
pub fn cmd_prob(model_path: &Path, history: &str, tol: f64) -> Result<Outcome, CliError> {
    let model = load_model(model_path)?;
    let f = model.operator_functional()?;
    let h = model.history(history)?;
    match probability_with_tol(h, &f, tol.max(hist_core::decoherence::DEFAULT_INTEGRITY_TOL)) {
        Ok(p) => Ok(Outcome {
            exit: 0,
            payload: json!({ "history": history, "probability": p }),
            human: format!("Prob({history}) = {}", sig6(p)),
        }),
        Err(e @ EngineError::ImaginaryResidual { .. })
        | Err(e @ EngineError::ProbabilityRange { .. }) => Ok(Outcome {
            exit: 1,
            payload: json!({ "history": history, "error": e.to_string() }),
            human: format!("numerical-integrity failure: {e}"),
        }),
        Err(e) => Err(e.into()),
    }
}

fn resolve_support<'m>(model: &'m Model, name: &str) -> Result<&'m TemporalSupport, CliError> {
    model
        .supports
        .get(name)
        .ok_or_else(|| CliError::Usage(format!("unknown support {name:?}")))
}

/// `hist build-x`: build the X operator for a support pair, verify it by an
/// independent construction route and a random-pair crosscheck, validate the
/// classification conditions when the supports coincide, and persist it.
#[allow(clippy::too_many_arguments)]
pub fn cmd_build_x(
    model_path: &Path,
    set: Option<&str>,
    support_a: Option<&str>,
    support_b: Option<&str>,
    out_x: &Path,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<Outcome, CliError> {
    let model = load_model(model_path)?;
    let f = model.operator_functional()?;

    let (sa, sb) = match (set, support_a) {
        (Some(set_name), None) => {
            let s = model
                .history_set(set_name)?
                .first()
                .map(|(_, h)| h.support().clone())
                .ok_or_else(|| CliError::Usage(format!("set {set_name:?} is empty")))?;
            (s.clone(), s)
        }
        (None, Some(a)) => {
            let sa = resolve_support(&model, a)?.clone();
            let sb = match support_b {
                Some(b) => resolve_support(&model, b)?.clone(),
                None => sa.clone(),
            };
            (sa, sb)
        }
        _ => {
            return Err(CliError::Usage(
                "build-x needs either --set or --support-a [--support-b]".into(),
            ))
        }
    };

    let x = build_x_from_operator_form(&f, &sa, &sb)?;
    let probed = build_x_from_operator_form_probed(&f, &sa, &sb)?;
    let route_gap = x.x().max_abs_diff(probed.x());

    // Random homogeneous pairs: the operator form and the X form must agree.
    let mut rng = rng_from_seed(seed);
    let d = model.dimension;
    let mut crosscheck_max: f64 = 0.0;
    for _ in 0..50 {
        let a = random_homogeneous_history(&sa, d, &mut rng);
        let b = random_homogeneous_history(&sb, d, &mut rng);
        let via_op = d_operator_form(&a, &b, &f)?;
        let via_x = d_x_form(&homogeneous_projector(&a), &homogeneous_projector(&b), &x)?;
        crosscheck_max = crosscheck_max.max((via_op - via_x).norm());
    }

    let validation: Option<XValidationReport> = if sa == sb {
        Some(validate_x(&x, samples, tol, &mut rng)?)
    } else {
        None
    };

    let x_json = serde_json::to_string_pretty(&x).expect("X serializes");
    std::fs::write(out_x, x_json).map_err(|source| CliError::Io {
        path: out_x.display().to_string(),
        source,
    })?;

    let ok = route_gap <= BUILD_X_TOL
        && crosscheck_max <= BUILD_X_TOL
        && validation.as_ref().map_or(true, |r| r.ok);
    let mut human = format!(
        "X on {}x{} written to {}\nroute agreement (analytic vs probed): {}\noperator/X crosscheck on 50 random pairs: {}\n",
        x.dim_left(),
        x.dim_right(),
        out_x.display(),
        sig6(route_gap),
        sig6(crosscheck_max),
    );
    match &validation {
        Some(v) => human.push_str(&format!("{v}")),
        None => human.push_str("classification conditions skipped (supports differ)"),
    }
    let payload = json!({
        "out_x": out_x.display().to_string(),
        "dim_left": x.dim_left(),
        "dim_right": x.dim_right(),
        "route_gap": route_gap,
        "crosscheck_max": crosscheck_max,
        "validation": validation,
    });
    Ok(Outcome {
        exit: if ok { 0 } else { 1 },
        payload,
        human,
    })
}

/// `hist validate-x`: check the three classification conditions on a
/// persisted X operator.
pub fn cmd_validate_x(
    x_path: &Path,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<Outcome, CliError> {
    let text = std::fs::read_to_string(x_path).map_err(|source| CliError::Io {
        path: x_path.display().to_string(),
        source,
    })?;
    let x: XOperatorFunctional =
        serde_json::from_str(&text).map_err(|source| CliError::Json {
            path: x_path.display().to_string(),
            source,
        })?;
    let mut rng = rng_from_seed(seed);
    let report = validate_x(&x, samples, tol, &mut rng)?;
    Ok(Outcome {
        exit: if report.ok { 0 } else { 1 },
        payload: serde_json::to_value(&report).expect("report serializes"),
        human: format!("{report}"),
    })
}

fn load_path_model(path: &Path) -> Result<PathSpaceModel, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let repr: PathSpaceModelRepr =
        serde_json::from_str(&text).map_err(|source| CliError::Json {
            path: path.display().to_string(),
            source,
        })?;
    Ok(repr.into_model()?)
}

/// Parse a subset spec: inline JSON, or `@file` to read it from a file.
fn parse_subset(spec: &str) -> Result<PathSubset, CliError> {
    let text = if let Some(file) = spec.strip_prefix('@') {
        std::fs::read_to_string(file).map_err(|source| CliError::Io {
            path: file.to_string(),
            source,
        })?
    } else {
        spec.to_string()
    };
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: "subset spec".into(),
        source,
    })
}

pub enum PathsumMode<'a> {
    Axioms,
    Crosscheck,
    Evaluate { a: &'a str, b: &'a str },
}

/// `hist pathsum`: evaluate the path functional, run its axiom sweep, or
/// cross-check against the operator formalism.
pub fn cmd_pathsum(
    model_path: &Path,
    mode: PathsumMode<'_>,
    samples: usize,
    seed: u64,
) -> Result<Outcome, CliError> {
    let model = load_path_model(model_path)?;
    match mode {
        PathsumMode::Evaluate { a, b } => {
            let sa = parse_subset(a)?;
            let sb = parse_subset(b)?;
            let value = d_path(&sa, &sb, &model)?;
            Ok(Outcome {
                exit: 0,
                payload: json!({ "d": [value.re, value.im] }),
                human: format!("d(a, b) = {}", sig6_complex(value.re, value.im)),
            })
        }
        PathsumMode::Axioms => {
            let mut rng = rng_from_seed(seed);
            let mut subsets = vec![PathSubset::All, PathSubset::Paths { paths: vec![] }];
            for _ in 0..samples {
                subsets.push(random_path_subset(&model, 0.3, &mut rng));
            }
            let report = verify_path_axioms(&model, &subsets)?;
            let human = format!(
                "additivity and complement identities over {} subsets: {report}",
                subsets.len()
            );
            Ok(Outcome {
                exit: if report.passed() { 0 } else { 1 },
                payload: serde_json::to_value(&report).expect("report serializes"),
                human,
            })
        }
        PathsumMode::Crosscheck => {
            let transfer = match model.action() {
                ActionSpec::Transfer(t) => t.clone(),
                ActionSpec::Table(_) => {
                    return Err(CliError::Usage(
                        "crosscheck needs a transfer-matrix model".into(),
                    ))
                }
            };
            let gap = path_vs_operator_crosscheck(&model, &transfer)?;
            let pairs = (model.config_size() as u64).pow(2 * model.steps() as u32);
            Ok(Outcome {
                exit: if gap <= CROSSCHECK_TOL { 0 } else { 1 },
                payload: json!({
                    "max_discrepancy": gap,
                    "cylinder_pairs": pairs,
                    "tol": CROSSCHECK_TOL,
                }),
                human: format!(
                    "max |d_path − d_operator| over {pairs} cylinder pairs: {} (tol {CROSSCHECK_TOL:.0e})",
                    sig6(gap)
                ),
            })
        }
    }
}
