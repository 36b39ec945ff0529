#![allow(dead_code)]

use std::path::PathBuf;

use bdperiod::chain::{ChainSpec, TailFamily};

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

/// Test chains covering every tail family, with and without prefixes.
pub fn fleet() -> Vec<(&'static str, ChainSpec)> {
    use TailFamily::*;
    let start = vec![[0.0, 0.5, 0.5]];
    let c = |prefix: &Vec<[f64; 3]>, tail| ChainSpec::new(prefix.clone(), tail).unwrap();
    let none = Vec::new();
    vec![
        ("d2 constant", c(&start, Constant { p: 0.7, q: 0.3, r: 0.0 })),
        ("d1 constant", c(&none, Constant { p: 0.6, q: 0.3, r: 0.1 })),
        ("positive recurrent", c(&none, Constant { p: 0.3, q: 0.6, r: 0.1 })),
        ("null recurrent", c(&none, Constant { p: 0.45, q: 0.45, r: 0.1 })),
        ("constant folded", c(&none, Constant { p: 0.7, q: 0.3, r: 0.0 })),
        ("geometric summable", c(&none, GeometricSelf { p: 0.7, q: 0.3, c: 0.5, rho: 0.5 })),
        ("geometric flat", c(&none, GeometricSelf { p: 0.7, q: 0.3, c: 0.2, rho: 1.0 })),
        ("power slow", c(&none, PowerSelf { p: 0.7, q: 0.3, c: 0.5, alpha: 0.5 })),
        ("power fast", c(&none, PowerSelf { p: 0.7, q: 0.3, c: 0.5, alpha: 2.0 })),
        ("product positive", c(&none, ProductPositive { c: 0.25, rho: 0.5 })),
        ("product positive slow", c(&none, ProductPositive { c: 0.5, rho: 0.9 })),
        ("zero self transient", c(&start, ZeroSelfTail { p: 0.7, q: 0.3 })),
        ("zero self recurrent", c(&start, ZeroSelfTail { p: 0.4, q: 0.6 })),
        ("modulated lazy", c(&none, Modulated { r: 0.1, a: 0.2, omega: 1.0 })),
        ("modulated exotic", c(&start, Modulated { r: 0.0, a: 0.25, omega: 1.0 })),
    ]
}
