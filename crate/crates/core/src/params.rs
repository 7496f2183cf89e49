use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const K_MAX: u8 = 63;
pub const L_MAX: u8 = 63;
pub const M_MIN: i16 = -8192;
pub const M_MAX: i16 = 8191;

/// The four shaper parameters at their hardware widths.
///
/// `k` and `l` are 6-bit unsigned delays; `m1` and `m2` are 14-bit two's
/// complement gains. Construction validates the ranges, so every value of
/// this type is a realizable shaper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ShaperParams {
    k: u8,
    l: u8,
    m1: i16,
    m2: i16,
}

impl ShaperParams {
    pub fn new(k: i64, l: i64, m1: i64, m2: i64) -> Result<Self> {
        if !(0..=K_MAX as i64).contains(&k) {
            return Err(Error::ParamRange("k"));
        }
        if !(0..=L_MAX as i64).contains(&l) {
            return Err(Error::ParamRange("l"));
        }
        if !(M_MIN as i64..=M_MAX as i64).contains(&m1) {
            return Err(Error::ParamRange("m1"));
        }
        if !(M_MIN as i64..=M_MAX as i64).contains(&m2) {
            return Err(Error::ParamRange("m2"));
        }
        Ok(ShaperParams {
            k: k as u8,
            l: l as u8,
            m1: m1 as i16,
            m2: m2 as i16,
        })
    }

    pub fn k(&self) -> u8 {
        self.k
    }

    pub fn l(&self) -> u8 {
        self.l
    }

    pub fn m1(&self) -> i16 {
        self.m1
    }

    pub fn m2(&self) -> i16 {
        self.m2
    }
}

impl fmt::Display for ShaperParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.k, self.l, self.m1, self.m2)
    }
}

impl FromStr for ShaperParams {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let syntax = || Error::ParamSyntax {
            literal: s.to_string(),
        };
        let fields = s
            .split(',')
            .map(|f| f.trim().parse::<i64>().map_err(|_| syntax()))
            .collect::<Result<Vec<_>>>()?;
        match fields[..] {
            [k, l, m1, m2] => ShaperParams::new(k, l, m1, m2),
            _ => Err(syntax()),
        }
    }
}

impl Serialize for ShaperParams {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ShaperParams {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let literal = String::deserialize(deserializer)?;
        literal.parse().map_err(serde::de::Error::custom)
    }
}
