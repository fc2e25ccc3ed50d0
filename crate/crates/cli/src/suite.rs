//! Test-function suites for `verify`.

use bessel_pairs::inequality::{
    builtin_suite, PolynomialMode, Profile, TestFunction, TestFunctionSpec,
};
use bessel_pairs::Jet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::Failure;

#[derive(Deserialize)]
struct SuiteFile {
    function: Vec<TestFunctionSpec>,
}

/// `u(x) -> u(x/R)` for a suite defined on the unit ball.
fn rescale(u: &TestFunction, r: f64) -> TestFunction {
    let mut out = u.clone();
    out.r = r;
    out.r_min = u.r_min * r;
    out.knots = u.knots.iter().map(|k| k * r).collect();
    for m in &mut out.modes {
        let p = m.profile.clone();
        m.profile = Profile::new(move |x| {
            let j = p.eval(x / r);
            Jet::new(j.v, j.d / r, j.dd / (r * r))
        });
    }
    out
}

fn random_suite(count: usize, seed: u64, r: f64) -> Result<Vec<TestFunction>, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let modes = (0..rng.gen_range(1..=3))
                .map(|_| PolynomialMode {
                    k: rng.gen_range(0..=4),
                    p: rng.gen_range(1..=4),
                    coeffs: (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect(),
                })
                .collect();
            let spec = TestFunctionSpec {
                label: format!("random-{seed}-{i}"),
                radius: r,
                modes,
            };
            Ok(spec.build()?)
        })
        .collect()
}

pub fn load(spec: &str, seed: u64, r: f64) -> Result<Vec<TestFunction>, Failure> {
    if spec == "builtin" {
        return Ok(builtin_suite()
            .iter()
            .map(|u| if r == 1.0 { u.clone() } else { rescale(u, r) })
            .collect());
    }
    if let Some(count) = spec.strip_prefix("random:") {
        let count = count
            .parse()
            .map_err(|_| Failure::Config(format!("bad suite `{spec}`")))?;
        return random_suite(count, seed, r);
    }
    let text =
        std::fs::read_to_string(spec).map_err(|e| Failure::Config(format!("suite {spec}: {e}")))?;
    let file: SuiteFile = if spec.ends_with(".json") {
        serde_json::from_str(&text).map_err(|e| Failure::Config(format!("suite {spec}: {e}")))?
    } else {
        toml::from_str(&text).map_err(|e| Failure::Config(format!("suite {spec}: {e}")))?
    };
    file.function.iter().map(|f| Ok(f.build()?)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_suite_is_reproducible() {
        let a = random_suite(5, 7, 1.0).ok().unwrap();
        let b = random_suite(5, 7, 1.0).ok().unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.modes.len(), y.modes.len());
            assert_eq!(
                x.modes[0].profile.eval(0.3).v,
                y.modes[0].profile.eval(0.3).v
            );
            assert!(x.vanishes_on_boundary());
        }
    }

    #[test]
    fn rescaled_builtin_keeps_boundary_values() {
        for u in load("builtin", 0, 2.0).ok().unwrap() {
            assert_eq!(u.r, 2.0);
            assert!(u.vanishes_on_boundary(), "{}", u.label);
        }
    }
}
