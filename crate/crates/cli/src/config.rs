//! Run configuration: a JSON document merged over defaults, with command
//! line overrides applied as dotted keys.

use std::fs;
use std::path::Path;

use nalgebra::{Matrix2, Matrix3, Vector3};
use serde_json::{json, Map, Value};

use ribbonlim::geometry::{builtin_chart, ChartKind, ChartSample, NaturalCurvature, ReferenceChart};
use ribbonlim::quadratic_forms::{Rigidity, SymMat2};
use ribbonlim::reduced_density::RibbonModel;

use crate::error::CliError;
use crate::table;

pub fn defaults() -> Value {
    json!({
        "rigidity": {
            "type": "sadowsky",
            "k_mu": 1.0, "k_lambda": 0.0,
            "k11": 1.0, "k12": 0.0, "k22": 1.0, "k33": 0.5,
            "entries": [1.0, 0.0, 0.0, 1.0, 0.0, 0.5]
        },
        "chart": { "type": "rectangle", "kappa0": 0.0, "d12": 0.0, "d22": 1.0, "file": "" },
        "length": 1.0,
        "intervals": 200,
        "natural_curvature": { "type": "zero", "a11": 0.0, "a12": 0.0, "a22": 0.0, "file": "" },
        "density_table": {
            "at": 0.0,
            "mu_min": -3.0, "mu_max": 3.0, "mu_points": 61,
            "tau_min": -3.0, "tau_max": 3.0, "tau_points": 61
        },
        "frame": { "r0": [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0] },
        "spontaneous": {
            "mode": "free",
            "tolerance": 1e-8,
            "clamped": {
                "y_target": [1.0, 0.0, 0.0],
                "r_target": [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
                "penalty": 1e6,
                "knots": 4,
                "budget": 40000
            }
        },
        "surface": { "margin": 0.5, "eta_max": 0.5, "width_points": 9, "cells": 64 },
        "seed": 0
    })
}

/// Merged configuration plus everything resolved from it.
pub struct Config {
    value: Value,
}

fn lookup<'a>(v: &'a Value, key: &str) -> Option<&'a Value> {
    key.split('.').try_fold(v, |v, k| v.get(k))
}

fn check_known(user: &Value, reference: &Value, prefix: &str) -> Result<(), CliError> {
    if let (Value::Object(u), Value::Object(r)) = (user, reference) {
        for (k, v) in u {
            let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            match r.get(k) {
                None => return Err(CliError::input(key, "unknown configuration key")),
                Some(rv) => check_known(v, rv, &key)?,
            }
        }
    }
    Ok(())
}

fn merge(base: &mut Value, user: &Value) {
    match (base, user) {
        (Value::Object(b), Value::Object(u)) => {
            for (k, v) in u {
                match b.get_mut(k) {
                    Some(slot) if slot.is_object() => merge(slot, v),
                    Some(slot) => *slot = v.clone(),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (b, u) => *b = u.clone(),
    }
}

fn flatten(v: &Value, prefix: &str, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(m) => {
            for (k, v) in m {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(v, &key, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

impl Config {
    /// Loads `path` (if any) over the defaults, then applies `overrides`.
    pub fn load(path: Option<&Path>, overrides: &[(String, Value)]) -> Result<Self, CliError> {
        let defaults = defaults();
        let mut value = defaults.clone();
        if let Some(p) = path {
            let text = fs::read_to_string(p).map_err(|e| CliError::input("config", format!("{}: {e}", p.display())))?;
            let user: Value =
                serde_json::from_str(&text).map_err(|e| CliError::input("config", format!("{}: {e}", p.display())))?;
            if !user.is_object() {
                return Err(CliError::input("config", "top level must be a JSON object"));
            }
            check_known(&user, &defaults, "")?;
            merge(&mut value, &user);
        }
        for (key, v) in overrides {
            if lookup(&defaults, key).is_none() {
                return Err(CliError::input(key.clone(), "unknown configuration key"));
            }
            let mut patch = v.clone();
            for k in key.rsplit('.') {
                let mut m = Map::new();
                m.insert(k.to_string(), patch);
                patch = Value::Object(m);
            }
            merge(&mut value, &patch);
        }
        Ok(Config { value })
    }

    pub fn header(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        flatten(&self.value, "", &mut out);
        out
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        lookup(&self.value, key)
            .and_then(Value::as_f64)
            .filter(|x| x.is_finite())
            .ok_or_else(|| CliError::input(key, "expected a finite number"))
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        let v = lookup(&self.value, key);
        v.and_then(Value::as_u64)
            .or_else(|| v.and_then(Value::as_f64).filter(|x| x.fract() == 0.0 && *x >= 0.0).map(|x| x as u64))
            .map(|x| x as usize)
            .ok_or_else(|| CliError::input(key, "expected a non-negative integer"))
    }

    pub fn u64(&self, key: &str) -> Result<u64, CliError> {
        lookup(&self.value, key)
            .and_then(Value::as_u64)
            .ok_or_else(|| CliError::input(key, "expected a non-negative integer"))
    }

    pub fn str(&self, key: &str) -> Result<&str, CliError> {
        lookup(&self.value, key)
            .and_then(Value::as_str)
            .ok_or_else(|| CliError::input(key, "expected a string"))
    }

    pub fn array<const N: usize>(&self, key: &str) -> Result<[f64; N], CliError> {
        let err = || CliError::input(key, format!("expected an array of {N} numbers"));
        let a = lookup(&self.value, key).and_then(Value::as_array).ok_or_else(err)?;
        if a.len() != N {
            return Err(err());
        }
        let mut out = [0.0; N];
        for (o, v) in out.iter_mut().zip(a) {
            *o = v.as_f64().filter(|x| x.is_finite()).ok_or_else(err)?;
        }
        Ok(out)
    }

    pub fn rigidity(&self) -> Result<Rigidity, CliError> {
        let r = match self.str("rigidity.type")? {
            "sadowsky" => return Ok(Rigidity::sadowsky()),
            "isotropic" => Rigidity::isotropic(self.f64("rigidity.k_mu")?, self.f64("rigidity.k_lambda")?),
            "orthotropic" => Rigidity::orthotropic(
                self.f64("rigidity.k11")?,
                self.f64("rigidity.k12")?,
                self.f64("rigidity.k22")?,
                self.f64("rigidity.k33")?,
            ),
            "voigt" => Rigidity::from_voigt_entries(self.array::<6>("rigidity.entries")?),
            other => {
                return Err(CliError::input(
                    "rigidity.type",
                    format!("unknown rigidity '{other}' (sadowsky, isotropic, orthotropic, voigt)"),
                ))
            }
        };
        r.map_err(|e| CliError::input("rigidity", e.to_string()))
    }

    pub fn chart(&self) -> Result<ReferenceChart, CliError> {
        let length = self.f64("length")?;
        let intervals = self.usize("intervals")?;
        let kind = match self.str("chart.type")? {
            "rectangle" => ChartKind::Rectangle,
            "arc" => ChartKind::Arc { kappa0: self.f64("chart.kappa0")? },
            "sheared" => ChartKind::Sheared {
                d12: self.f64("chart.d12")?,
                d22: self.f64("chart.d22")?,
            },
            "sampled" => return self.sampled_chart(),
            other => {
                return Err(CliError::input(
                    "chart.type",
                    format!("unknown chart '{other}' (rectangle, arc, sheared, sampled)"),
                ))
            }
        };
        builtin_chart(kind, length, intervals).map_err(|e| CliError::from_ribbon_input("chart", e))
    }

    fn sampled_chart(&self) -> Result<ReferenceChart, CliError> {
        let path = self.str("chart.file")?;
        let rows = table::read(path, "chart.file", &["t", "d11", "d21", "d12", "d22"], &["kappa"])?;
        let samples: Vec<ChartSample> = rows
            .iter()
            .map(|r| ChartSample {
                t: r[0],
                frame: Matrix2::new(r[1], r[3], r[2], r[4]),
                kappa: r.get(5).copied().flatten_nan(),
            })
            .collect();
        ReferenceChart::sampled(&samples).map_err(|e| CliError::from_ribbon_input("chart.file", e))
    }

    pub fn natural(&self) -> Result<NaturalCurvature, CliError> {
        match self.str("natural_curvature.type")? {
            "zero" => Ok(NaturalCurvature::zero()),
            "constant" => Ok(NaturalCurvature::Constant(SymMat2::new(
                self.f64("natural_curvature.a11")?,
                self.f64("natural_curvature.a12")?,
                self.f64("natural_curvature.a22")?,
            ))),
            "table" => {
                let path = self.str("natural_curvature.file")?;
                let rows = table::read(path, "natural_curvature.file", &["t", "a11", "a12", "a22"], &[])?;
                NaturalCurvature::table(
                    rows.iter().map(|r| r[0]).collect(),
                    rows.iter().map(|r| SymMat2::new(r[1], r[2], r[3])).collect(),
                )
                .map_err(|e| CliError::from_ribbon_input("natural_curvature.file", e))
            }
            other => Err(CliError::input(
                "natural_curvature.type",
                format!("unknown natural curvature '{other}' (zero, constant, table)"),
            )),
        }
    }

    pub fn model(&self) -> Result<RibbonModel, CliError> {
        RibbonModel::new(self.rigidity()?, self.chart()?, self.natural()?).map_err(|e| CliError::from_ribbon_input("rigidity", e))
    }

    pub fn matrix3(&self, key: &str) -> Result<Matrix3<f64>, CliError> {
        Ok(Matrix3::from_row_slice(&self.array::<9>(key)?))
    }

    pub fn vector3(&self, key: &str) -> Result<Vector3<f64>, CliError> {
        Ok(Vector3::from_row_slice(&self.array::<3>(key)?))
    }
}

trait FlattenNan {
    fn flatten_nan(self) -> Option<f64>;
}

impl FlattenNan for Option<f64> {
    fn flatten_nan(self) -> Option<f64> {
        self.filter(|x| !x.is_nan())
    }
}
