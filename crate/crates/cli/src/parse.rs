//! Argument value parsers.

use std::str::FromStr;

/// Comma-separated list of values or `start:stop[:step]` ranges (inclusive).
pub fn int_list(s: &str) -> Result<Vec<u32>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let fields: Vec<&str> = part.split(':').collect();
        let num = |x: &str| x.trim().parse::<u32>().map_err(|e| format!("'{x}': {e}"));
        match fields.as_slice() {
            [v] => out.push(num(v)?),
            [a, b] | [a, b, _] => {
                let (a, b) = (num(a)?, num(b)?);
                let step = if fields.len() == 3 { num(fields[2])? } else { 1 };
                if step == 0 || b < a {
                    return Err(format!("bad range '{part}'"));
                }
                out.extend((a..=b).step_by(step as usize));
            }
            _ => return Err(format!("bad range '{part}'")),
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

pub fn parsed_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|e| e.to_string()))
        .collect()
}
