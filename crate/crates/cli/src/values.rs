//! Parsing of `NAME=VALUE` classical bindings and rendering of measured
//! register codes back into source-level literals.

use num::{BigInt, BigRational};
use qmodc_core::frontend::eval::Value;
use qmodc_core::typed::ConcreteQType;
use qmodc_core::types::decimal_string;

pub fn parse_binding(s: &str) -> Result<(String, Value), String> {
    let (name, rest) = s.split_once('=').ok_or_else(|| "expected NAME=VALUE".to_string())?;
    if name.trim().is_empty() {
        return Err("empty name".into());
    }
    Ok((name.trim().to_string(), parse_value(rest.trim())?))
}

pub fn parse_value(s: &str) -> Result<Value, String> {
    if let Some(inner) = s.strip_prefix('[') {
        let inner = inner.strip_suffix(']').ok_or("missing closing ']'")?;
        let items = if inner.trim().is_empty() {
            vec![]
        } else {
            inner.split(',').map(|p| parse_value(p.trim())).collect::<Result<_, _>>()?
        };
        return Ok(Value::Array(items));
    }
    Ok(Value::Num(parse_rational(s)?))
}

/// Exact decimal-to-rational conversion; no float rounding on the way in.
pub fn parse_rational(s: &str) -> Result<BigRational, String> {
    let (neg, digits) = match s.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, s),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(format!("'{s}' is not a number"));
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return Err(format!("'{s}' is not a decimal number"));
    }
    let mantissa: BigInt = format!("{int_part}{frac_part}")
        .parse()
        .map_err(|_| format!("'{s}' is not a number"))?;
    let v = BigRational::new(mantissa, BigInt::from(10u32).pow(frac_part.len() as u32));
    Ok(if neg { -v } else { v })
}

pub fn mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// Decode a register code into a printable value, per the declared type.
pub fn render_code(ty: &ConcreteQType, code: u64) -> String {
    match ty {
        ConcreteQType::Bit => format!("{}", code & 1),
        ConcreteQType::Num(f) => decimal_string(&f.decode(code)),
        ConcreteQType::Array { elem, len } => {
            let es = elem.total_size();
            let vals: Vec<String> = (0..*len)
                .map(|i| render_code(elem, (code >> (es as usize * i)) & mask(es)))
                .collect();
            format!("[{}]", vals.join(","))
        }
        ConcreteQType::Record { fields, .. } => {
            let mut off = 0u32;
            let parts: Vec<String> = fields
                .iter()
                .map(|(n, t)| {
                    let s = t.total_size();
                    let v = render_code(t, (code >> off) & mask(s));
                    off += s;
                    format!("{n}: {v}")
                })
                .collect();
            format!("{{{}}}", parts.join(", "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("3").unwrap(), BigRational::from_integer(3.into()));
        assert_eq!(parse_rational("-1.5").unwrap(), BigRational::new((-3).into(), 2.into()));
        assert_eq!(parse_rational("0.25").unwrap(), BigRational::new(1.into(), 4.into()));
        assert_eq!(parse_rational(".5").unwrap(), BigRational::new(1.into(), 2.into()));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
        assert!(parse_rational("1.2.3").is_err());
    }

    #[test]
    fn binding_parsing() {
        let (k, v) = parse_binding("gammas=[0.1, 0.2]").unwrap();
        assert_eq!(k, "gammas");
        match v {
            Value::Array(items) => assert_eq!(items.len(), 2),
            _ => panic!("expected array"),
        }
        assert!(parse_binding("novalue").is_err());
        assert!(parse_binding("=3").is_err());
        assert!(parse_binding("x=[1,2").is_err());
    }

    #[test]
    fn code_rendering_follows_types() {
        use qmodc_core::types::FixedPointFormat;
        let num = ConcreteQType::Num(FixedPointFormat::new(3, true, 1));
        assert_eq!(render_code(&num, 0b101), "-1.5");
        let arr = ConcreteQType::Array { elem: Box::new(ConcreteQType::Bit), len: 2 };
        assert_eq!(render_code(&arr, 0b01), "[1,0]");
        let rec = ConcreteQType::Record {
            name: "R".into(),
            fields: vec![
                ("a".into(), ConcreteQType::Num(FixedPointFormat::new(2, false, 0))),
                ("b".into(), ConcreteQType::Bit),
            ],
        };
        assert_eq!(render_code(&rec, 0b110), "{a: 2, b: 1}");
    }
}
