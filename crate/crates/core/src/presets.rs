//! Named walks used throughout the tests and the command line.

use crate::error::{Error, Result};
use crate::products::{ProductKind, ProductWalk};
use crate::scalar::ratio;
use crate::walks::WalkSpec;

pub const NAMES: [&str; 6] = ["t3-lazy-iso", "f2-lazy-uniform", "z-lazy", "t3xZ", "t3xt3", "f2-range2"];

#[derive(Clone, Debug)]
pub enum Preset {
    Walk(WalkSpec),
    Product(ProductWalk),
}

impl Preset {
    pub fn walk(&self) -> Result<&WalkSpec> {
        match self {
            Preset::Walk(w) => Ok(w),
            Preset::Product(_) => Err(Error::InvalidInput("preset is a product walk".into())),
        }
    }

    pub fn product(&self) -> Result<&ProductWalk> {
        match self {
            Preset::Product(p) => Ok(p),
            Preset::Walk(_) => Err(Error::InvalidInput("preset is not a product walk".into())),
        }
    }
}

const T3_LAZY_ISO: &str = "mode isotropic\nq 2\n0 1/2\n1 1/2\n";
const F2_LAZY_UNIFORM: &str = "mode finitely-supported\nrank 2\ne 1/5\n1 1/5\n-1 1/5\n2 1/5\n-2 1/5\n";
const Z_LAZY: &str = "mode finitely-supported\nrank 1\ne 1/2\n1 1/4\n-1 1/4\n";
const F2_RANGE2: &str =
    "mode finitely-supported\nrank 2\ne 1/6\n1 1/8\n-1 1/8\n2 1/8\n-2 1/8\n1,2 1/6\n-2,-1 1/6\n";

pub fn spec_text(name: &str) -> Option<&'static str> {
    match name {
        "t3-lazy-iso" => Some(T3_LAZY_ISO),
        "f2-lazy-uniform" | "f2-lazy" => Some(F2_LAZY_UNIFORM),
        "z-lazy" => Some(Z_LAZY),
        "f2-range2" => Some(F2_RANGE2),
        _ => None,
    }
}

/// Looks up a preset; `f2-lazy` is accepted for `f2-lazy-uniform`.
pub fn preset(name: &str) -> Result<Preset> {
    if let Some(text) = spec_text(name) {
        return Ok(Preset::Walk(WalkSpec::parse(text)?));
    }
    let tree = || WalkSpec::parse(T3_LAZY_ISO);
    let half = ProductKind::Cartesian { s: ratio(1, 2) };
    match name {
        "t3xZ" => Ok(Preset::Product(ProductWalk::new(tree()?, WalkSpec::parse(Z_LAZY)?, half)?)),
        "t3xt3" => Ok(Preset::Product(ProductWalk::new(tree()?, tree()?, half)?)),
        _ => Err(Error::InvalidInput(format!("unknown preset '{name}'; available: {}", NAMES.join(", ")))),
    }
}
