//! Sweep grid specifications such as `sf=7..12;payload=10,20,30,40,50;duration=1,5,10`.
//!
//! Axes are separated by `;`, values by `,`. Integer axes also accept an
//! inclusive range `a..b`. An empty spec is an empty grid.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sim::SweepGrid;

pub fn parse_grid(spec: &str) -> Result<SweepGrid> {
    let mut grid = SweepGrid::default();
    for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (axis, values) = part.split_once('=').ok_or_else(|| Error::Parse {
            key: part.to_string(),
            message: "expected axis=values".into(),
        })?;
        let axis = axis.trim();
        match axis {
            "sf" => grid.sf = int_values(axis, values)?,
            "payload" => grid.payload = int_values(axis, values)?,
            "channels" => grid.channels = int_values(axis, values)?,
            "duration" => grid.duration_s = float_values(axis, values)?,
            _ => {
                return Err(Error::Parse {
                    key: axis.to_string(),
                    message: "unknown axis (expected sf, payload, channels or duration)".into(),
                })
            }
        }
    }
    Ok(grid)
}

fn bad(axis: &str, message: String) -> Error {
    Error::Parse {
        key: axis.to_string(),
        message,
    }
}

fn int_values<T>(axis: &str, values: &str) -> Result<Vec<T>>
where
    T: FromStr + Copy + Into<u64> + TryFrom<u64>,
{
    let mut out = Vec::new();
    for item in values.split(',').map(str::trim) {
        let parse = |s: &str| {
            s.trim()
                .parse::<T>()
                .map_err(|_| bad(axis, format!("`{s}` is not a valid value")))
        };
        if let Some((lo, hi)) = item.split_once("..") {
            let (lo, hi): (u64, u64) = (parse(lo)?.into(), parse(hi)?.into());
            if lo > hi {
                return Err(bad(axis, format!("empty range {item}")));
            }
            out.extend((lo..=hi).filter_map(|v| T::try_from(v).ok()));
        } else {
            out.push(parse(item)?);
        }
    }
    Ok(out)
}

fn float_values(axis: &str, values: &str) -> Result<Vec<f64>> {
    values
        .split(',')
        .map(str::trim)
        .map(|s| match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(bad(axis, format!("`{s}` is not a valid value"))),
        })
        .collect()
}
