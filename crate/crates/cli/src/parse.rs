use qpvkex_core::qpv::ProverStrategy;
use qpvkex_core::BitString;
use serde::de::DeserializeOwned;
use serde_json::json;

use crate::output::{invalid, Result};

/// Binary by default; `0x` for hex, `0b` optional for binary. Bit 1 is the
/// leftmost character.
pub fn bits(s: &str) -> Result<BitString> {
    let r = match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(h) => BitString::from_hex(h),
        None => BitString::from_binary(s.strip_prefix("0b").unwrap_or(s)),
    };
    r.map_err(|e| invalid(format!("{s:?}: {e}")))
}

/// Left-pads with zeros or drops leading zeros to reach `len` bits.
pub fn fit(b: BitString, len: usize) -> Result<BitString> {
    let n = b.len();
    if n == len {
        return Ok(b);
    }
    if n < len {
        let mut out = BitString::zeros(len - n);
        out.extend_from(&b);
        return Ok(out);
    }
    let v = b.as_slice();
    if v[..n - len].iter().any(|&x| x) {
        return Err(invalid(format!("value {} does not fit in {len} bits", b.to_binary())));
    }
    Ok(BitString::from_bools(v[n - len..].to_vec()))
}

/// `a,b,c` or `lo:hi:count` (inclusive, evenly spaced).
pub fn values(s: &str) -> Result<Vec<f64>> {
    let bad = |m: &str| invalid(format!("{s:?}: {m}"));
    let number = |t: &str| t.trim().parse::<f64>().map_err(|_| bad("not a number"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [lo, hi, count] => {
            let (lo, hi) = (number(lo)?, number(hi)?);
            let count: usize = count.trim().parse().map_err(|_| bad("count must be an integer"))?;
            Ok(match count {
                0 => vec![],
                1 => vec![lo],
                _ => (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect(),
            })
        }
        [list] => list.split(',').filter(|t| !t.trim().is_empty()).map(number).collect(),
        _ => Err(bad("expected a,b,c or lo:hi:count")),
    }
}

/// `name=a,b,c` or `name=lo:hi:count`.
pub fn named_values(s: &str) -> Result<(String, Vec<f64>)> {
    let (name, rest) = s.split_once('=').ok_or_else(|| invalid(format!("{s:?}: expected NAME=VALUES")))?;
    Ok((name.trim().to_string(), values(rest)?))
}

fn snake(name: &str) -> String {
    name.trim().replace('-', "_")
}

/// A JSON object, or a bare `kind` for variants without fields.
pub fn tagged<T: DeserializeOwned>(s: &str, what: &str) -> Result<T> {
    let v = if s.trim_start().starts_with('{') {
        serde_json::from_str(s).map_err(|e| invalid(format!("{what} {s:?}: {e}")))?
    } else {
        json!({ "kind": snake(s) })
    };
    serde_json::from_value(v).map_err(|e| invalid(format!("{what} {s:?}: {e}")))
}

/// `kind[:value]` with the value filling the strategy's one parameter, or JSON.
pub fn strategy(s: &str) -> Result<ProverStrategy> {
    if s.trim_start().starts_with('{') {
        return tagged(s, "strategy");
    }
    let (kind, value) = match s.split_once(':') {
        Some((k, v)) => (snake(k), Some(v)),
        None => (snake(s), None),
    };
    let num = |default: f64| -> Result<f64> {
        value.map_or(Ok(default), |v| v.parse().map_err(|_| invalid(format!("strategy {s:?}: bad parameter"))))
    };
    let st = match kind.as_str() {
        "honest" => ProverStrategy::Honest { eta: num(1.0)? },
        "absent" => ProverStrategy::Absent,
        "abstract_pass" => ProverStrategy::AbstractPass { eps_qpv: num(0.0)? },
        "basis_guess" => ProverStrategy::BasisGuess { offset: num(0.5)? },
        "fixed_basis" => ProverStrategy::FixedBasis { angle: num(0.0)? },
        "off_position_relay" => ProverStrategy::OffPositionRelay { offset: num(0.5)? },
        "split_response" => ProverStrategy::SplitResponse { round: num(0.0)? as usize },
        _ => return Err(invalid(format!("unknown strategy {kind:?}"))),
    };
    if value.is_some() && matches!(st, ProverStrategy::Absent) {
        return Err(invalid("absent takes no parameter"));
    }
    Ok(st)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_inputs() {
        assert_eq!(bits("0x0f").unwrap().to_binary(), "00001111");
        assert_eq!(bits("0b101").unwrap().to_binary(), "101");
        assert_eq!(bits("101").unwrap().to_binary(), "101");
        assert!(bits("12").is_err());
        assert_eq!(fit(bits("0x01").unwrap(), 2).unwrap().to_binary(), "01");
        assert_eq!(fit(bits("1").unwrap(), 3).unwrap().to_binary(), "001");
        assert!(fit(bits("0x80").unwrap(), 4).is_err());
    }

    #[test]
    fn value_lists() {
        assert_eq!(values("0:1:5").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(values("0.1, 0.3").unwrap(), vec![0.1, 0.3]);
        assert!(values("a").is_err());
        assert_eq!(named_values("eps_qpv=1,2").unwrap().0, "eps_qpv");
    }

    #[test]
    fn strategies() {
        assert_eq!(strategy("basis-guess").unwrap(), ProverStrategy::BasisGuess { offset: 0.5 });
        assert_eq!(strategy("honest:0.8").unwrap(), ProverStrategy::Honest { eta: 0.8 });
        assert_eq!(strategy(r#"{"kind":"fixed_basis","angle":0.3}"#).unwrap(), ProverStrategy::FixedBasis { angle: 0.3 });
        assert!(strategy("teleport").is_err());
    }
}
