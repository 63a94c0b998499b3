//! Parsers for the compact command-line notations.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use muhankel::dual_catalog::{GroupKind, Weight};
use muhankel::{Error, Result};
use num_complex::Complex64;

/// `su2`, `su2:int`, `torus:<d>`, products joined by `*`, or inline JSON.
pub fn group(spec: &str) -> Result<GroupKind> {
    let spec = spec.trim();
    if spec.starts_with('{') {
        let g: GroupKind = serde_json::from_str(spec)?;
        g.validate()?;
        return Ok(g);
    }
    let factors = spec
        .split('*')
        .map(|part| match part.trim() {
            "su2" => Ok(GroupKind::su2()),
            "su2:int" => Ok(GroupKind::su2_integer()),
            other => match other.strip_prefix("torus:").map(str::parse::<usize>) {
                Some(Ok(d)) => Ok(GroupKind::torus(d)),
                _ => Err(Error::InvalidGroup(format!(
                    "unrecognised group '{other}' (expected su2, su2:int, torus:<d> or JSON)"
                ))),
            },
        })
        .collect::<Result<Vec<_>>>()?;
    let g = match <[GroupKind; 1]>::try_from(factors) {
        Ok([single]) => single,
        Err(many) => GroupKind::product(many),
    };
    g.validate()?;
    Ok(g)
}

/// A number is a power-law exponent; anything else is a weight JSON file.
pub fn weight(spec: &str) -> Result<Weight> {
    if let Ok(s) = spec.trim().parse::<f64>() {
        return Weight::power_law(s);
    }
    let text = fs::read_to_string(Path::new(spec))?;
    Ok(serde_json::from_str(&text)?)
}

/// Comma-separated reals.
pub fn reals(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("'{s}' is not a number")))
        })
        .collect()
}

/// `k:re[:im]` entries separated by commas, e.g. `-1:2,0:0.5`.
pub fn fourier(spec: &str) -> Result<BTreeMap<i64, Complex64>> {
    let bad = |s: &str| Error::InvalidParameter(format!("bad coefficient '{s}', expected k:re[:im]"));
    let mut out = BTreeMap::new();
    for item in spec.split(',').filter(|s| !s.trim().is_empty()) {
        let parts: Vec<&str> = item.trim().split(':').collect();
        let (k, re, im) = match parts.as_slice() {
            [k, re] => (k, re, &"0"),
            [k, re, im] => (k, re, im),
            _ => return Err(bad(item)),
        };
        let k: i64 = k.parse().map_err(|_| bad(item))?;
        let re: f64 = re.parse().map_err(|_| bad(item))?;
        let im: f64 = im.parse().map_err(|_| bad(item))?;
        if out.insert(k, Complex64::new(re, im)).is_some() {
            return Err(Error::InvalidParameter(format!("coefficient {k} given twice")));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_notation() {
        assert_eq!(group("su2").unwrap(), GroupKind::su2());
        assert_eq!(group("su2:int").unwrap(), GroupKind::su2_integer());
        assert_eq!(group("torus:3").unwrap(), GroupKind::torus(3));
        assert_eq!(
            group("su2*torus:1").unwrap(),
            GroupKind::product(vec![GroupKind::su2(), GroupKind::torus(1)])
        );
        let json = serde_json::to_string(&GroupKind::torus(2)).unwrap();
        assert_eq!(group(&json).unwrap(), GroupKind::torus(2));
        for bad in ["so3", "torus:0", "torus:x", ""] {
            assert!(group(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn weight_notation() {
        assert_eq!(weight("1.5").unwrap(), Weight::power_law(1.5).unwrap());
        assert!(weight("/nonexistent/weights.json").is_err());
    }

    #[test]
    fn lists_and_coefficients() {
        assert_eq!(reals("0, 1e-4,3e-4").unwrap(), vec![0.0, 1e-4, 3e-4]);
        assert!(reals("1,x").is_err());
        let c = fourier("-1:2,0:0.5:1").unwrap();
        assert_eq!(c[&-1], Complex64::new(2.0, 0.0));
        assert_eq!(c[&0], Complex64::new(0.5, 1.0));
        assert!(fourier("1:1,1:2").is_err());
        assert!(fourier("1").is_err());
    }
}
