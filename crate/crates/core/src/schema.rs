//! JSON model files.
//!
//! Queue model:
//!
//! ```json
//! {"lambda": 1.0, "service": {"kind": "constant", "alpha": 1.0}}
//! ```
//!
//! Service kinds and their fields:
//!
//! | kind           | fields                                              |
//! |----------------|-----------------------------------------------------|
//! | `constant`     | `alpha`                                             |
//! | `exponential`  | `rate`                                              |
//! | `beta-const`   | `lambda`, `rho`, `beta`                             |
//! | `beta-general` | `lambda`, `rho`, `beta` (expression in `u`)         |
//! | `empirical`    | `points` (`[[t, G], ...]`) or `df` (expression in `t`) with optional `atom0` |
//!
//! Network model:
//!
//! ```json
//! {"nodes": [{"lambda": 1.0, "service": {...}}, ...],
//!  "routing": [[0.0, 1.0], [0.0, 0.0]]}
//! ```
//!
//! Every error carries a JSON-pointer path to the offending field.

use std::path::Path;
use std::sync::Arc;

use serde_json::Value;

use crate::distributions::{QueueModel, RealFn, ServiceModel};
use crate::error::{Error, Result};
use crate::expr::RealExpr;
use crate::network::NetworkModel;

fn field<'a>(obj: &'a Value, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key).ok_or_else(|| {
        Error::invalid(
            "MISSING_FIELD",
            format!("{path}/{key}"),
            format!("required field {key:?} is missing"),
        )
    })
}

fn number(obj: &Value, key: &str, path: &str) -> Result<f64> {
    field(obj, key, path)?
        .as_f64()
        .ok_or_else(|| Error::invalid("WRONG_TYPE", format!("{path}/{key}"), "expected a number"))
}

fn string<'a>(obj: &'a Value, key: &str, path: &str) -> Result<&'a str> {
    field(obj, key, path)?
        .as_str()
        .ok_or_else(|| Error::invalid("WRONG_TYPE", format!("{path}/{key}"), "expected a string"))
}

fn object<'a>(v: &'a Value, path: &str) -> Result<&'a Value> {
    if v.is_object() {
        Ok(v)
    } else {
        Err(Error::invalid("WRONG_TYPE", path, "expected an object"))
    }
}

fn array<'a>(v: &'a Value, path: &str) -> Result<&'a [Value]> {
    v.as_array()
        .map(Vec::as_slice)
        .ok_or_else(|| Error::invalid("WRONG_TYPE", path, "expected an array"))
}

/// Prepends `prefix` to the pointer path of a model error.
fn under(prefix: &str, err: Error) -> Error {
    match err {
        Error::InvalidModel { code, path, message } => Error::InvalidModel {
            code,
            path: format!("{prefix}{path}"),
            message,
        },
        Error::Expression(message) => Error::invalid("EXPRESSION", prefix, message),
        other => other,
    }
}

fn expression(src: &str, var: &str, path: &str) -> Result<RealFn> {
    let expr = RealExpr::parse(src, var).map_err(|e| under(path, e))?;
    Ok(Arc::new(move |x| expr.eval(x)))
}

/// Parses a service fragment located at `path`.
pub fn parse_service(v: &Value, path: &str) -> Result<ServiceModel> {
    let v = object(v, path)?;
    let kind = string(v, "kind", path)?;
    let built = match kind {
        "constant" => ServiceModel::constant(number(v, "alpha", path)?),
        "exponential" => ServiceModel::exponential(number(v, "rate", path)?),
        "beta-const" => ServiceModel::beta_const(
            number(v, "lambda", path)?,
            number(v, "rho", path)?,
            number(v, "beta", path)?,
        ),
        "beta-general" => {
            let beta = expression(string(v, "beta", path)?, "u", &format!("{path}/beta"))?;
            ServiceModel::beta_general(number(v, "lambda", path)?, number(v, "rho", path)?, beta)
        }
        "empirical" => {
            if let Some(points) = v.get("points") {
                let ppath = format!("{path}/points");
                let pts = array(points, &ppath)?
                    .iter()
                    .enumerate()
                    .map(|(i, p)| {
                        let here = format!("{ppath}/{i}");
                        match array(p, &here)? {
                            [t, g] => match (t.as_f64(), g.as_f64()) {
                                (Some(t), Some(g)) => Ok((t, g)),
                                _ => Err(Error::invalid("WRONG_TYPE", here, "expected [t, G] numbers")),
                            },
                            _ => Err(Error::invalid("WRONG_TYPE", here, "expected a [t, G] pair")),
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                ServiceModel::piecewise_linear(pts)
            } else {
                let df = expression(string(v, "df", path)?, "t", &format!("{path}/df"))?;
                let atom0 = match v.get("atom0") {
                    None => 0.0,
                    Some(_) => number(v, "atom0", path)?,
                };
                ServiceModel::empirical(df, atom0)
            }
        }
        other => return Err(Error::invalid(
            "UNKNOWN_KIND",
            format!("{path}/kind"),
            format!(
                "unknown service kind {other:?}; expected constant, exponential, beta-const, beta-general or empirical"
            ),
        )),
    };
    built.map_err(|e| under(path, e))
}

pub fn parse_queue(v: &Value) -> Result<QueueModel> {
    let v = object(v, "")?;
    let lambda = number(v, "lambda", "")?;
    let service = parse_service(field(v, "service", "")?, "/service")?;
    QueueModel::new(lambda, service)
}

pub fn parse_network(v: &Value) -> Result<NetworkModel> {
    let v = object(v, "")?;
    let nodes = array(field(v, "nodes", "")?, "/nodes")?;
    let mut lambdas = Vec::with_capacity(nodes.len());
    let mut services = Vec::with_capacity(nodes.len());
    for (j, node) in nodes.iter().enumerate() {
        let path = format!("/nodes/{j}");
        let node = object(node, &path)?;
        lambdas.push(number(node, "lambda", &path)?);
        services.push(parse_service(
            field(node, "service", &path)?,
            &format!("{path}/service"),
        )?);
    }
    let routing = array(field(v, "routing", "")?, "/routing")?
        .iter()
        .enumerate()
        .map(|(j, row)| {
            array(row, &format!("/routing/{j}"))?
                .iter()
                .enumerate()
                .map(|(l, x)| {
                    x.as_f64()
                        .ok_or_else(|| Error::invalid("WRONG_TYPE", format!("/routing/{j}/{l}"), "expected a number"))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    NetworkModel::new(lambdas, routing, services)
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::invalid("MALFORMED_JSON", "", format!("{}: {e}", path.display())))
}

pub fn load_queue(path: &Path) -> Result<QueueModel> {
    parse_queue(&read_json(path)?)
}

pub fn load_network(path: &Path) -> Result<NetworkModel> {
    parse_network(&read_json(path)?)
}
