//! Output formatting shared by every file writer.

/// Rounds to 9 significant digits so written values are stable.
pub fn round_sig9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

/// `round_sig9` rendered with the shortest round-tripping representation.
pub fn fmt_sig9(x: f64) -> String {
    format!("{}", round_sig9(x))
}

pub mod sig9 {
    use serde::Serializer;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(super::round_sig9(*x))
    }

    pub fn serialize_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => s.serialize_some(&super::round_sig9(*v)),
            None => s.serialize_none(),
        }
    }
}
