//! Named comparison functions selectable from configuration files.

use serde::{Deserialize, Serialize};

use super::{ClassTag, ComparisonFn};
use crate::scalar::Real;

/// Serialisable description of a built-in comparison function.
///
/// ```json
/// {"kind": "power", "c": 0.5, "p": 4.0}
/// {"kind": "min", "a": {"kind": "identity"}, "b": {"kind": "constant", "c": 1.0}}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FnSpec {
    Identity,
    Linear { c: f64 },
    Power { c: f64, p: f64 },
    Exp { c: f64 },
    Constant { c: f64 },
    Min { a: Box<FnSpec>, b: Box<FnSpec> },
    Max { a: Box<FnSpec>, b: Box<FnSpec> },
}

impl FnSpec {
    pub fn build<T: Real>(&self) -> ComparisonFn<T> {
        match self {
            FnSpec::Identity => ComparisonFn::identity(),
            FnSpec::Linear { c } => ComparisonFn::linear(T::lit(*c)),
            FnSpec::Power { c, p } => ComparisonFn::power(T::lit(*c), T::lit(*p)),
            FnSpec::Exp { c } => ComparisonFn::exp_weight(T::lit(*c)),
            FnSpec::Constant { c } => ComparisonFn::constant(T::lit(*c)),
            FnSpec::Min { a, b } => ComparisonFn::min(a.build(), b.build()),
            FnSpec::Max { a, b } => ComparisonFn::max(a.build(), b.build()),
        }
    }

    /// Builds and retags.
    pub fn build_as<T: Real>(&self, class: ClassTag) -> ComparisonFn<T> {
        self.build().with_class(class)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_builds() {
        let spec: FnSpec = serde_json::from_str(
            r#"{"kind":"min","a":{"kind":"identity"},"b":{"kind":"constant","c":1.0}}"#,
        )
        .unwrap();
        let f: ComparisonFn<f64> = spec.build();
        assert_eq!(f.eval(0.5), 0.5);
        assert_eq!(f.eval(3.0), 1.0);
        let p: ComparisonFn<f64> = FnSpec::Power { c: 0.5, p: 4.0 }.build();
        assert_eq!(p.eval(2.0), 8.0);
        let e: ComparisonFn<f64> = FnSpec::Exp { c: 2.0 }.build();
        assert_eq!(e.class(), ClassTag::KPlus);
        assert!(serde_json::from_str::<FnSpec>(r#"{"kind":"bogus"}"#).is_err());
    }
}
