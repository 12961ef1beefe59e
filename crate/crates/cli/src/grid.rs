use anyhow::{anyhow, bail, Result};

/// `a,b,c` or `start:stop:count` (inclusive, evenly spaced).
pub fn parse(spec: &str) -> Result<Vec<f64>> {
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| anyhow!("bad number '{s}' in grid '{spec}'"));
    let parts: Vec<&str> = spec.split(':').collect();
    let values = match parts.as_slice() {
        [a, b, n] => {
            let (a, b) = (num(a)?, num(b)?);
            let n: usize = n.trim().parse().map_err(|_| anyhow!("bad count in grid '{spec}'"))?;
            match n {
                0 => bail!("grid '{spec}' is empty"),
                1 => vec![a],
                _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
            }
        }
        [_] => spec.split(',').map(num).collect::<Result<_>>()?,
        _ => bail!("grid '{spec}' must be a comma list or start:stop:count"),
    };
    if values.iter().any(|v| !v.is_finite()) {
        bail!("grid '{spec}' has a non-finite value");
    }
    Ok(values)
}
