//! Plain-text state files: `# key: value` header lines followed by
//! `n re im` rows. Numbers are written with 17 significant digits so a
//! reload reproduces the amplitudes bit-for-bit.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use catsim_core::{Error, FockVector, Result};
use num_complex::Complex64 as C64;

pub struct StateFile {
    pub header: BTreeMap<String, String>,
    pub state: FockVector,
}

pub fn write_state(
    mut w: impl Write,
    header: &[(&str, String)],
    state: &FockVector,
) -> std::io::Result<()> {
    for (k, v) in header {
        writeln!(w, "# {k}: {v}")?;
    }
    writeln!(w, "# cutoff: {}", state.cutoff())?;
    for (n, a) in state.amplitudes().iter().enumerate() {
        writeln!(w, "{n} {re:.16e} {im:.16e}", re = a.re, im = a.im)?;
    }
    Ok(())
}

pub fn read_state(r: impl BufRead) -> Result<StateFile> {
    let mut header = BTreeMap::new();
    let mut amps: Vec<(usize, C64)> = Vec::new();
    for line in r.lines() {
        let line = line.map_err(|e| Error::InvalidParameter(format!("read error: {e}")))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some((k, v)) = rest.split_once(':') {
                header.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        let mut parts = line.split_whitespace();
        let (n, re, im) = (parts.next(), parts.next(), parts.next());
        match (n, re, im) {
            (Some(n), Some(re), Some(im)) => {
                let n: usize = n
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad row index: {line}")))?;
                let re: f64 = re
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad amplitude: {line}")))?;
                let im: f64 = im
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad amplitude: {line}")))?;
                amps.push((n, C64::new(re, im)));
            }
            _ => return Err(Error::InvalidParameter(format!("malformed row: {line}"))),
        }
    }
    let cutoff: usize = header
        .get("cutoff")
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| amps.iter().map(|(n, _)| n + 1).max().unwrap_or(0));
    let mut vec = vec![C64::new(0.0, 0.0); cutoff];
    for (n, a) in amps {
        if n >= cutoff {
            return Err(Error::InvalidParameter(format!(
                "row {n} exceeds cutoff {cutoff}"
            )));
        }
        vec[n] = a;
    }
    Ok(StateFile {
        header,
        state: FockVector::from_amplitudes(vec, cutoff)?,
    })
}
