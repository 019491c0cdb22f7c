//! JSON has no literal for infinities; one-tailed intervals and degenerate
//! rearrangements need them, so they travel as the strings `"inf"`,
//! `"-inf"` and `"nan"`. Finite values are written with the shortest
//! representation that round-trips exactly.

use serde::de::{self, Deserializer, Visitor};
use serde::ser::{SerializeSeq, Serializer};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Serialize)]
#[serde(untagged)]
enum Wire<'a> {
    Num(f64),
    Tag(&'a str),
}

fn to_wire(v: f64) -> Wire<'static> {
    if v.is_finite() {
        Wire::Num(v)
    } else if v.is_nan() {
        Wire::Tag("nan")
    } else if v > 0.0 {
        Wire::Tag("inf")
    } else {
        Wire::Tag("-inf")
    }
}

struct ExtF64(f64);

impl<'de> Deserialize<'de> for ExtF64 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = ExtF64;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<ExtF64, E> {
                Ok(ExtF64(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<ExtF64, E> {
                Ok(ExtF64(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<ExtF64, E> {
                Ok(ExtF64(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<ExtF64, E> {
                match v {
                    "inf" => Ok(ExtF64(f64::INFINITY)),
                    "-inf" => Ok(ExtF64(f64::NEG_INFINITY)),
                    "nan" => Ok(ExtF64(f64::NAN)),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }
        d.deserialize_any(V)
    }
}

pub mod ext_f64 {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_wire(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        ExtF64::deserialize(d).map(|v| v.0)
    }
}

pub mod ext_f64_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for x in v {
            seq.serialize_element(&to_wire(*x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<ExtF64>::deserialize(d).map(|v| v.into_iter().map(|x| x.0).collect())
    }
}
